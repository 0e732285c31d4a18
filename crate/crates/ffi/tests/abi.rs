use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use markerlens::raster::save_image;
use markerlens::regressor::{predict_angle, save_model, FeatureExtractor, RegressionHead, RegressionModel};
use markerlens::synth::{render_scene, SceneSpec};
use markerlens::vision::{run_baseline, PipelineConfig};
use markerlens_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ml_last_error()) }.to_str().unwrap().to_owned()
}

#[test]
fn baseline_through_the_abi_matches_rust() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = render_scene(&SceneSpec::with_size(512).at_angle(30.0)).unwrap();
    let path = dir.path().join("scene.png");
    save_image(&img, &path).unwrap();
    let expected = run_baseline(&img, &PipelineConfig::default()).unwrap().theta_deg;

    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(ml_image_load(cstr(&path).as_ptr(), &mut h), ML_OK);
        assert_eq!((ml_image_width(h), ml_image_height(h)), (512, 512));
        let mut cfg = ptr::null_mut();
        assert_eq!(ml_config_default(&mut cfg), ML_OK);
        let mut theta = f64::NAN;
        assert_eq!(ml_estimate_baseline(h, cfg, &mut theta), ML_OK);
        assert_eq!(theta, expected);
        ml_config_free(cfg);
        ml_image_free(h);
    }
}

#[test]
fn blank_frame_reports_detection_failure() {
    let data = vec![200u8; 64 * 64 * 3];
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(ml_image_from_rgb(64, 64, data.as_ptr(), data.len(), &mut h), ML_OK);
        let mut cfg = ptr::null_mut();
        assert_eq!(ml_config_default(&mut cfg), ML_OK);
        let mut theta = 123.0;
        assert_eq!(ml_estimate_baseline(h, cfg, &mut theta), ML_ERR_DETECTION_FAILED);
        assert_eq!(theta, 123.0);
        assert_eq!(last_error(), "marker detection failed");
        ml_config_free(cfg);
        ml_image_free(h);
    }
}

#[test]
fn model_prediction_matches_rust() {
    let dir = tempfile::tempdir().unwrap();
    let model = RegressionModel {
        extractor: FeatureExtractor::random(3).frozen(),
        head: RegressionHead::default_random(4),
    };
    let path = dir.path().join("model.bin");
    save_model(&model, &path).unwrap();
    let (img, _) = render_scene(&SceneSpec::with_size(256).at_angle(-40.0)).unwrap();
    let expected = predict_angle(&model, &img).theta_deg;

    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ml_model_load(cstr(&path).as_ptr(), &mut m), ML_OK);
        let mut h = ptr::null_mut();
        let raw = img.data();
        assert_eq!(ml_image_from_rgb(256, 256, raw.as_ptr(), raw.len(), &mut h), ML_OK);
        let mut theta = f64::NAN;
        assert_eq!(ml_predict_angle(m, h, &mut theta), ML_OK);
        assert_eq!(theta, expected);
        ml_image_free(h);
        ml_model_free(m);
    }
}

#[test]
fn load_failures_carry_core_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.png");
    let garbage = dir.path().join("model.bin");
    std::fs::write(&garbage, b"not a model").unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(ml_image_load(cstr(&missing).as_ptr(), &mut h), markerlens::Error::FileNotFound(missing.clone()).code());
        assert!(h.is_null());
        assert!(last_error().contains("absent.png"));
        let mut m = ptr::null_mut();
        let code = ml_model_load(cstr(&garbage).as_ptr(), &mut m);
        assert_eq!(code, markerlens::Error::VersionMismatch(String::new()).code());
        assert!(m.is_null());
        let mut cfg = ptr::null_mut();
        assert_ne!(ml_config_load(cstr(&missing).as_ptr(), &mut cfg), ML_OK);
        ml_image_free(ptr::null_mut());
        ml_model_free(ptr::null_mut());
        ml_config_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut h = ptr::null_mut();
        ml_image_load(ptr::null(), &mut h);
    }
    assert_eq!(last_error(), "null path");
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
}

fn header_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("markerlens.h")
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    for name in [
        "ml_version",
        "ml_last_error",
        "ml_image_load",
        "ml_image_from_rgb",
        "ml_image_width",
        "ml_image_height",
        "ml_image_free",
        "ml_config_default",
        "ml_config_load",
        "ml_config_free",
        "ml_model_load",
        "ml_model_free",
        "ml_estimate_baseline",
        "ml_predict_angle",
        "typedef struct MlImage MlImage",
        "typedef struct MlConfig MlConfig",
        "typedef struct MlModel MlModel",
        "#define ML_ERR_DETECTION_FAILED 10",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"markerlens.h\"\n\
         int probe(const char *p) {\n\
           MlImage *img = 0; MlConfig *cfg = 0; double t = 0.0;\n\
           if (ml_image_load(p, &img) != ML_OK) return -1;\n\
           ml_config_default(&cfg);\n\
           int rc = ml_estimate_baseline(img, cfg, &t);\n\
           ml_config_free(cfg); ml_image_free(img);\n\
           return rc;\n\
         }\n",
    )
    .unwrap();
    let include = header_path().parent().unwrap().to_path_buf();
    for lang in ["c", "c++"] {
        let status = match Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .status()
        {
            Ok(s) => s,
            Err(_) => {
                eprintln!("cc not available; skipping header compile");
                return;
            }
        };
        assert!(status.success(), "header does not compile as {lang}");
    }
}
