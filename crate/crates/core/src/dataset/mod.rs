//! Labeled image collections: manifests, augmentation, auto-labeling and
//! batch-wise holdout splits.

mod augment;
mod label;
mod manifest;

pub use augment::{augment, augment_manifest, AugmentRanges, AugmentSpec};
pub use label::{auto_label, denormalize_label, normalize_label, LabelSummary};
pub use manifest::{
    load_manifest, save_manifest, split_holdout, DatasetManifest, LabelSource, ManifestEntry,
    MANIFEST_HEADER,
};
