//! Exercises the C entry points directly: handle lifecycles, error codes,
//! and the pipeline surface (load, augment, select, derive, assess,
//! evaluate) over the bundled fixture files.

use ifra_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

fn data_file(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../ifra-core/data")
        .join(name);
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let msg = ifra_last_error_message();
    assert!(!msg.is_null());
    let s = unsafe { CStr::from_ptr(msg) }.to_str().unwrap().to_string();
    unsafe { ifra_string_free(msg) };
    s
}

#[test]
fn version_is_exposed() {
    let v = unsafe { CStr::from_ptr(ifra_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn catalog_and_dataset_lifecycle() {
    let mut catalog: *mut IfraCatalog = ptr::null_mut();
    let status = unsafe { ifra_catalog_load(data_file("clinical_catalog.json").as_ptr(), &mut catalog) };
    assert_eq!(status, IfraStatus::Ok);
    assert_eq!(unsafe { ifra_catalog_feature_count(catalog) }, 8);

    let mut dataset: *mut IfraDataset = ptr::null_mut();
    let mut excluded = usize::MAX;
    let status = unsafe {
        ifra_dataset_load(
            data_file("published_comparison_cohort.csv").as_ptr(),
            catalog,
            &mut dataset,
            &mut excluded,
        )
    };
    assert_eq!(status, IfraStatus::Ok);
    assert_eq!(excluded, 0);
    assert_eq!(unsafe { ifra_dataset_subject_count(dataset) }, 32);

    unsafe {
        ifra_dataset_free(dataset);
        ifra_catalog_free(catalog);
    }
}

#[test]
fn missing_file_reports_io_error_with_message() {
    let mut catalog: *mut IfraCatalog = ptr::null_mut();
    let bogus = CString::new("/nonexistent/catalog.json").unwrap();
    let status = unsafe { ifra_catalog_load(bogus.as_ptr(), &mut catalog) };
    assert_eq!(status, IfraStatus::Data);
    assert!(last_error().contains("catalog"));
    assert!(catalog.is_null());
}

#[test]
fn null_arguments_are_rejected() {
    let status = unsafe { ifra_catalog_load(ptr::null(), ptr::null_mut()) };
    assert_eq!(status, IfraStatus::NullArgument);
    assert_eq!(unsafe { ifra_catalog_feature_count(ptr::null()) }, 0);
    assert_eq!(unsafe { ifra_scale_entry_count(ptr::null()) }, 0);
    unsafe {
        ifra_catalog_free(ptr::null_mut());
        ifra_dataset_free(ptr::null_mut());
        ifra_scale_free(ptr::null_mut());
        ifra_string_free(ptr::null_mut());
    }
}

#[test]
fn builtin_scales_are_reachable() {
    let mut scale: *mut IfraScale = ptr::null_mut();
    assert_eq!(unsafe { ifra_scale_builtin_ifra(&mut scale) }, IfraStatus::Ok);
    assert_eq!(unsafe { ifra_scale_entry_count(scale) }, 22);
    let name = unsafe { ifra_scale_name(scale) };
    assert_eq!(unsafe { CStr::from_ptr(name) }.to_str().unwrap(), "IFRA");
    unsafe {
        ifra_string_free(name);
        ifra_scale_free(scale);
    }

    assert_eq!(ifra_builtin_clinical_count(), 8);
    let mut clinical: *mut IfraScale = ptr::null_mut();
    assert_eq!(
        unsafe { ifra_scale_builtin_clinical(0, &mut clinical) },
        IfraStatus::Ok
    );
    assert_eq!(unsafe { ifra_scale_entry_count(clinical) }, 1);
    unsafe { ifra_scale_free(clinical) };
    let status = unsafe { ifra_scale_builtin_clinical(99, &mut clinical) };
    assert_eq!(status, IfraStatus::Data);
}

#[test]
fn assess_and_evaluate_fixture_cohort() {
    let mut catalog: *mut IfraCatalog = ptr::null_mut();
    let mut dataset: *mut IfraDataset = ptr::null_mut();
    unsafe {
        assert_eq!(
            ifra_catalog_load(data_file("clinical_catalog.json").as_ptr(), &mut catalog),
            IfraStatus::Ok
        );
        assert_eq!(
            ifra_dataset_load(
                data_file("published_comparison_cohort.csv").as_ptr(),
                catalog,
                &mut dataset,
                ptr::null_mut()
            ),
            IfraStatus::Ok
        );
    }

    // MB is the first bundled clinical scale; the fixture pins its table.
    let mut scale: *mut IfraScale = ptr::null_mut();
    assert_eq!(unsafe { ifra_scale_builtin_clinical(0, &mut scale) }, IfraStatus::Ok);

    let mut stratum = -1;
    let nf01 = CString::new("nf01").unwrap();
    let status = unsafe { ifra_assess_subject(dataset, scale, nf01.as_ptr(), &mut stratum) };
    assert_eq!(status, IfraStatus::Ok);
    assert_eq!(stratum, 0);

    let unknown = CString::new("nobody").unwrap();
    let status = unsafe { ifra_assess_subject(dataset, scale, unknown.as_ptr(), &mut stratum) };
    assert_eq!(status, IfraStatus::Data);
    assert!(last_error().contains("nobody"));

    let mut p = f64::NAN;
    let mut counts = [0u64; 6];
    let status = unsafe {
        ifra_evaluate_scale(dataset, scale, 0.05, 2, &mut p, counts.as_mut_ptr())
    };
    assert_eq!(status, IfraStatus::Ok);
    assert!((p - 0.119).abs() < 0.001, "p = {p}");
    assert_eq!(counts, [6, 16, 0, 1, 7, 2]);

    // Split code 4 is invalid.
    let status = unsafe { ifra_evaluate_scale(dataset, scale, 0.05, 4, &mut p, ptr::null_mut()) };
    assert_eq!(status, IfraStatus::Data);

    unsafe {
        ifra_scale_free(scale);
        ifra_dataset_free(dataset);
        ifra_catalog_free(catalog);
    }
}

#[test]
fn selection_and_derivation_roundtrip() {
    // Small planted cohort written through the core API, then driven
    // entirely through the C surface.
    use ifra_core::demo::{generate_cohort, DemoConfig};

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("cohort.csv");
    let cohort = generate_cohort(&DemoConfig {
        seed: 3,
        features: 6,
        planted: 1,
        ..DemoConfig::default()
    })
    .unwrap();
    ifra_core::dataset::save_dataset(&cohort, &csv_path).unwrap();
    let catalog_path = dir.path().join("catalog.json");
    ifra_core::catalog::save_catalog(cohort.catalog(), &catalog_path).unwrap();

    let c_catalog = CString::new(catalog_path.to_str().unwrap()).unwrap();
    let c_csv = CString::new(csv_path.to_str().unwrap()).unwrap();

    let mut catalog: *mut IfraCatalog = ptr::null_mut();
    let mut dataset: *mut IfraDataset = ptr::null_mut();
    unsafe {
        assert_eq!(ifra_catalog_load(c_catalog.as_ptr(), &mut catalog), IfraStatus::Ok);
        assert_eq!(
            ifra_dataset_load(c_csv.as_ptr(), catalog, &mut dataset, ptr::null_mut()),
            IfraStatus::Ok
        );
    }

    let mut augmented: *mut IfraDataset = ptr::null_mut();
    assert_eq!(
        unsafe { ifra_augment(dataset, 15, 0.1, 3, &mut augmented) },
        IfraStatus::Ok
    );
    assert_eq!(unsafe { ifra_dataset_subject_count(augmented) }, 142);

    let mut report_json: *mut libc::c_char = ptr::null_mut();
    let status = unsafe {
        ifra_run_selection(augmented, 30, 0.80, 0.05, 0.50, 7, &mut report_json)
    };
    assert_eq!(status, IfraStatus::Ok);
    let report = unsafe { CStr::from_ptr(report_json) }.to_str().unwrap();
    assert!(report.contains("feature_00"));

    let name = CString::new("derived-via-c").unwrap();
    let mut derived: *mut IfraScale = ptr::null_mut();
    let status = unsafe { ifra_derive_scale(augmented, report_json, name.as_ptr(), &mut derived) };
    assert_eq!(status, IfraStatus::Ok);
    assert!(unsafe { ifra_scale_entry_count(derived) } >= 1);

    let mut p = f64::NAN;
    let status =
        unsafe { ifra_evaluate_scale(augmented, derived, 0.05, 2, &mut p, ptr::null_mut()) };
    assert_eq!(status, IfraStatus::Ok);
    assert!((0.0..=1.0).contains(&p));

    unsafe {
        ifra_string_free(report_json);
        ifra_scale_free(derived);
        ifra_dataset_free(augmented);
        ifra_dataset_free(dataset);
        ifra_catalog_free(catalog);
    }
}
