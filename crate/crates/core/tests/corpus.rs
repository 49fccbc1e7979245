//! The bundled certificate corpus: integrity, file round trips, structure
//! and sensitivity to single-entry changes.

mod common;

use common::{certificate_cases, expected_structure, fixture_path, load, mutate};
use pingpong_core::certstore::{
    checksum_mismatches, fixtures_dir, load_certificate, save_certificate,
};
use pingpong_core::group::{build_group_data, structure_report};

#[test]
fn checksums_match_manifest() {
    assert_eq!(
        checksum_mismatches(fixtures_dir()).unwrap(),
        Vec::<String>::new()
    );
}

#[test]
fn every_case_with_a_certificate_has_a_fixture() {
    let cases = certificate_cases();
    assert_eq!(cases.len(), 66);
    let count = |prefix: &str| cases.iter().filter(|c| c.label.starts_with(prefix)).count();
    assert_eq!(count("A-"), 17);
    assert_eq!(count("C-"), 46);
    for info in cases {
        let cert = load_certificate(fixture_path(info)).unwrap();
        assert_eq!(cert.label, info.label);
        assert_eq!(cert.case, info.case().unwrap(), "{}", info.label);
    }
}

#[test]
fn save_then_load_is_identity() {
    let dir = std::env::temp_dir().join(format!("pingpong-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for info in certificate_cases() {
        let cert = load_certificate(fixture_path(info)).unwrap();
        let path = dir.join(info.certificate.as_ref().unwrap());
        save_certificate(&path, &cert).unwrap();
        assert_eq!(load_certificate(&path).unwrap(), cert, "{}", info.label);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn structure_follows_order_of_b() {
    for info in certificate_cases() {
        let gd = build_group_data(&info.case().unwrap()).unwrap();
        let report = structure_report(&gd, true).unwrap();
        assert_eq!(
            report.iso_type,
            expected_structure(&info.label),
            "{}",
            info.label
        );
    }
}

#[test]
fn structure_needs_a_passing_certificate() {
    let (gd, _) = load("A-37");
    assert!(structure_report(&gd, false).is_err());
}

#[test]
fn single_entry_mutants_fail() {
    for (label, seed) in [("A-37", 1), ("A-2", 2), ("39", 3)] {
        let tally = mutate(label, 10, seed);
        assert_eq!(tally.passed, 0, "{label}: {tally:?}");
        assert!(tally.failed > 0, "{label}: {tally:?}");
    }
}
