use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use mms_core::counts::exact_counts;
use mms_core::model::fit_mms;
use mms_core::partition::{DistanceModel, PartitionEvaluator, SolverConfig};
use mms_core::ranking::{Ranking, RankingDataset};
use mms_ffi::*;
use serde_json::Value;

fn last_error() -> String {
    let p = mms_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { mms_string_free(p) };
    s
}

const RANKS: [u32; 20] = [1, 2, 3, 4, 1, 2, 4, 3, 2, 1, 3, 4, 1, 3, 2, 4, 4, 3, 2, 1];

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(mms_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn log_partition_matches_core() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mms_model_new(6, 0, &mut model) }, MmsStatus::Ok);
    assert!(unsafe { mms_model_is_exact(model) });
    let mut z = 0.0;
    assert_eq!(unsafe { mms_model_log_partition(model, 0.3, &mut z) }, MmsStatus::Ok);
    assert_eq!(z, PartitionEvaluator::new(exact_counts(6).unwrap()).log_partition(0.3));
    assert_eq!(unsafe { mms_model_log_partition(model, -1.0, &mut z) }, MmsStatus::InvalidArgument);
    assert!(last_error().contains("theta"));
    unsafe { mms_model_free(model) };

    let mut approx = ptr::null_mut();
    assert_eq!(unsafe { mms_model_new(20, 0, &mut approx) }, MmsStatus::Ok);
    assert!(!unsafe { mms_model_is_exact(approx) });
    unsafe { mms_model_free(approx) };
}

#[test]
fn single_component_fit_matches_core() {
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { mms_dataset_from_ranks(RANKS.as_ptr(), 5, 4, &mut data) }, MmsStatus::Ok);
    assert_eq!(unsafe { mms_dataset_n_items(data) }, 4);
    assert_eq!(unsafe { mms_dataset_total(data) }, 5);
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mms_model_new(4, 0, &mut model) }, MmsStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mms_fit(data, model, 1, 1, 0, 0, &mut json) }, MmsStatus::Ok);
    let doc: Value = serde_json::from_str(&take_string(json)).unwrap();

    let rankings = RANKS.chunks(4).map(|r| Ranking::new(r.to_vec()).unwrap());
    let direct = fit_mms(
        &RankingDataset::from_rankings(rankings).unwrap(),
        &PartitionEvaluator::new(exact_counts(4).unwrap()),
        &SolverConfig::default(),
    )
    .unwrap();
    let fit = &doc["fits"][0];
    let consensus: Vec<u32> = serde_json::from_value(fit["consensus"][0].clone()).unwrap();
    assert_eq!(consensus, direct.params.consensus.ranks());
    assert!((fit["thetas"][0].as_f64().unwrap() - direct.params.theta).abs() < 1e-9);
    assert_eq!(doc["counts"]["provenance"], "exact");
    unsafe {
        mms_dataset_free(data);
        mms_model_free(model);
    }
}

#[test]
fn csv_dataset_and_g_range() {
    let csv = CString::new("a,b,c,d,freq\n1,2,3,4,6\n4,3,2,1,6\n1,2,,,2\nNA,NA,1,2,1\n").unwrap();
    let mut data = ptr::null_mut();
    assert_eq!(unsafe { mms_dataset_from_csv(csv.as_ptr(), &mut data) }, MmsStatus::Ok);
    assert_eq!(unsafe { mms_dataset_total(data) }, 15);
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mms_model_new(4, 0, &mut model) }, MmsStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mms_fit(data, model, 1, 2, 3, 7, &mut json) }, MmsStatus::Ok);
    let doc: Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(doc["gRange"], serde_json::json!([1, 2]));
    assert_eq!(doc["fullData"], false);
    assert_eq!(doc["em"]["seed"], 7);
    unsafe {
        mms_dataset_free(data);
        mms_model_free(model);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut data = ptr::null_mut();
    let bad = CString::new("a,b,c\n1,1,2\n").unwrap();
    assert_eq!(unsafe { mms_dataset_from_csv(bad.as_ptr(), &mut data) }, MmsStatus::Parse);
    assert!(last_error().contains("duplicate rank"), "{}", last_error());
    assert!(data.is_null());

    assert_eq!(unsafe { mms_dataset_from_csv(ptr::null(), &mut data) }, MmsStatus::NullPointer);
    assert_eq!(unsafe { mms_dataset_from_ranks([1, 2, 5].as_ptr(), 1, 3, &mut data) }, MmsStatus::InvalidRanking);

    let mut model = ptr::null_mut();
    assert_eq!(unsafe { mms_model_new(30, 40, &mut model) }, MmsStatus::ExactRangeExceeded);

    assert_eq!(unsafe { mms_dataset_from_ranks(RANKS.as_ptr(), 5, 4, &mut data) }, MmsStatus::Ok);
    assert_eq!(unsafe { mms_model_new(5, 0, &mut model) }, MmsStatus::Ok);
    assert!(mms_last_error().is_null());
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mms_fit(data, model, 1, 1, 0, 0, &mut json) }, MmsStatus::DimensionMismatch);
    assert_eq!(unsafe { mms_fit(data, model, 2, 1, 0, 0, &mut json) }, MmsStatus::InvalidArgument);
    assert_eq!(unsafe { mms_fit(ptr::null(), model, 1, 1, 0, 0, &mut json) }, MmsStatus::NullPointer);
    assert!(json.is_null());
    unsafe {
        mms_dataset_free(data);
        mms_model_free(model);
        mms_dataset_free(ptr::null_mut());
        mms_string_free(ptr::null_mut());
    }
}

#[test]
fn simulate_returns_report() {
    let spec = CString::new(
        "study = \"recovery\"\nn = 5\nsample_size = 100\ntheta_min = 0.2\ntheta_max = 0.3\nreplicates = 1\nseed = 3\n",
    )
    .unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mms_simulate(spec.as_ptr(), &mut json) }, MmsStatus::Ok);
    let doc: Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(doc["study"], "recovery");
    let broken = CString::new("study = \"recovery\"\n").unwrap();
    assert_eq!(unsafe { mms_simulate(broken.as_ptr(), &mut json) }, MmsStatus::Config);
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"mms.h\"\n\
         int main(void) {\n\
           MmsModel *m = 0; double z = 0;\n\
           if (mms_model_new(5, 0, &m) != MMS_STATUS_OK) return 1;\n\
           MmsStatus s = mms_model_log_partition(m, 0.1, &z);\n\
           mms_model_free(m);\n\
           return s == MMS_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status()
        .expect("C compiler available");
    assert!(status.success());
}
