use std::ffi::{CStr, CString};
use std::ptr;

use qre_ffi::*;

const SMALL: &str = "[scenario]\nkind = \"effective_mass\"\n[grid]\nn_points = 64\nx_min = -12.0\nx_max = 12.0\n\
[state]\nsigma_x = 0.8\n[schedule]\ndt = 1.0\nn_steps = 40\nrecord_every = 10\n";

fn last_error() -> String {
    let p = qre_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut QreConfig {
    let toml = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { qre_config_parse(toml.as_ptr(), &mut cfg) }, QreStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn run_and_read_series() {
    let cfg = parse(SMALL);
    assert_eq!(unsafe { qre_validate(cfg) }, QreStatus::Ok);
    let mut series = ptr::null_mut();
    assert_eq!(unsafe { qre_run(cfg, ptr::null(), &mut series) }, QreStatus::Ok);
    assert!(qre_last_error_message().is_null());
    let rows = unsafe { qre_series_len(series) };
    assert_eq!(rows, 5);
    let cols = unsafe { qre_series_column_count(series) };
    assert_eq!(cols, 12);
    let name = unsafe { CStr::from_ptr(qre_series_column_name(series, 11)) };
    assert_eq!(name.to_str().unwrap(), "linear_potential_newton");
    assert!(unsafe { qre_series_column_name(series, 12) }.is_null());

    let mut v = 0.0;
    assert_eq!(unsafe { qre_series_get(series, 4, 0, &mut v) }, QreStatus::Ok);
    assert_eq!(v, 40.0);
    assert_eq!(unsafe { qre_series_get(series, 4, 7, &mut v) }, QreStatus::Ok);
    assert!((v - 1.0).abs() < 1e-10);
    assert_eq!(unsafe { qre_series_get(series, 4, 8, &mut v) }, QreStatus::Ok);
    assert!(v.is_nan());
    let (mut x, mut newton) = (0.0, 0.0);
    unsafe {
        qre_series_get(series, 4, 1, &mut x);
        qre_series_get(series, 4, 11, &mut newton);
    }
    assert!((x - newton).abs() < 1e-8);

    assert_eq!(unsafe { qre_series_get(series, 5, 0, &mut v) }, QreStatus::OutOfRange);
    assert!(last_error().contains("row 5"));
    assert_eq!(unsafe { qre_series_get(series, 0, 12, &mut v) }, QreStatus::OutOfRange);

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { qre_series_to_csv(series, &mut csv) }, QreStatus::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
    assert!(text.starts_with("# "));
    assert!(text.contains("# figure: fig4"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    unsafe {
        qre_string_free(csv);
        qre_series_free(series);
        qre_config_free(cfg);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("[scenario]\nkind = \"tunneling\"\nbogus = 1\n").unwrap();
    assert_eq!(unsafe { qre_config_parse(bad.as_ptr(), &mut cfg) }, QreStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("bogus"));

    let missing = CString::new("[grid]\nn_points = 64\n").unwrap();
    assert_eq!(unsafe { qre_config_parse(missing.as_ptr(), &mut cfg) }, QreStatus::Config);
    assert!(last_error().contains("scenario.kind"));

    let infeasible = parse("[scenario]\nkind = \"tunneling\"\n[grid]\nn_points = 64\n[environment]\ncp0 = 5e-4\np0 = 1e-3\n");
    assert_eq!(unsafe { qre_validate(infeasible) }, QreStatus::Infeasible);
    assert!(last_error().contains("infeasible"));
    unsafe { qre_config_free(infeasible) };

    assert_eq!(unsafe { qre_config_parse(ptr::null(), &mut cfg) }, QreStatus::InvalidArgument);
    assert_eq!(unsafe { qre_validate(ptr::null()) }, QreStatus::InvalidArgument);
    let mut v = 0.0;
    assert_eq!(unsafe { qre_series_get(ptr::null(), 0, 0, &mut v) }, QreStatus::InvalidArgument);
    assert_eq!(unsafe { qre_series_len(ptr::null()) }, 0);
    unsafe {
        qre_config_free(ptr::null_mut());
        qre_series_free(ptr::null_mut());
        qre_string_free(ptr::null_mut());
    }
}

#[test]
fn overrides_and_round_trip() {
    let cfg = parse(SMALL);
    assert_eq!(unsafe { qre_config_set_dt(cfg, 0.5) }, QreStatus::Ok);
    assert_eq!(unsafe { qre_config_set_dt(cfg, -1.0) }, QreStatus::Config);
    assert_eq!(unsafe { qre_config_set_grid_n(cfg, 100) }, QreStatus::Ok);
    assert_eq!(unsafe { qre_validate(cfg) }, QreStatus::Config);
    assert!(last_error().contains("100"));
    assert_eq!(unsafe { qre_config_set_grid_n(cfg, 32) }, QreStatus::Ok);

    let mut toml = ptr::null_mut();
    assert_eq!(unsafe { qre_config_to_toml(cfg, &mut toml) }, QreStatus::Ok);
    let text = unsafe { CStr::from_ptr(toml) }.to_str().unwrap().to_owned();
    assert!(text.contains("n_points = 32"));
    assert!(text.contains("dt = 0.5"));
    assert!(text.contains("n_steps = 80"));
    let again = parse(&text);
    unsafe {
        qre_string_free(toml);
        qre_config_free(again);
    }

    let mut d = f64::NAN;
    assert_eq!(unsafe { qre_oracle_check(cfg, 5, &mut d) }, QreStatus::Ok);
    assert!(d < 1e-6, "oracle distance {d}");
    unsafe { qre_config_free(cfg) };
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(qre_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qre.h")).unwrap();
    for symbol in [
        "QRE_STATUS_OK",
        "QRE_STATUS_INFEASIBLE",
        "typedef struct QreConfig QreConfig;",
        "typedef struct QreSeries QreSeries;",
        "enum QreStatus qre_config_parse(const char *toml, struct QreConfig **out);",
        "qre_run(const struct QreConfig *config, const char *out_dir, struct QreSeries **out);",
        "enum QreStatus qre_series_get(const struct QreSeries *series,",
        "const char *qre_last_error_message(void)",
    ] {
        assert!(header.contains(symbol), "header lacks `{symbol}`");
    }
}

#[test]
fn run_writes_files_into_the_given_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cfg = parse(SMALL);
    let mut series = ptr::null_mut();
    assert_eq!(unsafe { qre_run(cfg, out.as_ptr(), &mut series) }, QreStatus::Ok);
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".csv")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".gp")), "{names:?}");
    unsafe {
        qre_series_free(series);
        qre_config_free(cfg);
    }
}
