#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use num_bigint::BigInt;
use pingpong_core::certstore::{fixtures_dir, load_certificate, lookup, registry, CaseInfo};
use pingpong_core::group::{build_group_data, GroupData};
use pingpong_core::verify::{verify, Certificate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The bundled certificate that does not verify under its own parameters
/// (its matrix belongs to a neighbouring case).
pub const KNOWN_BAD: &str = "C-36";

pub fn certificate_cases() -> Vec<&'static CaseInfo> {
    registry()
        .iter()
        .filter(|c| c.certificate.is_some())
        .collect()
}

pub fn fixture_path(info: &CaseInfo) -> PathBuf {
    fixtures_dir().join(info.certificate.as_ref().expect("has certificate"))
}

pub fn load(label: &str) -> (GroupData, Certificate) {
    let info = certificate_cases()
        .into_iter()
        .find(|c| c.label == label)
        .expect("bundled case");
    let cert = load_certificate(fixture_path(info)).unwrap();
    let gd = build_group_data(&cert.case).unwrap();
    (gd, cert)
}

/// Group data of any registry case, with or without a certificate.
pub fn group(label: &str) -> GroupData {
    build_group_data(&lookup(label).unwrap().case().unwrap()).unwrap()
}

/// Group structure the classification assigns to each case with a certificate.
pub fn expected_structure(label: &str) -> &'static str {
    match label {
        "A-31" => "(Z x Z/2) *_{Z/2} Z/12",
        "A-37" | "C-19" | "C-33" | "C-46" | "C-52" | "C-58" => "Z * Z/7",
        "A-38" | "C-20" | "C-34" | "C-53" => "Z * Z/9",
        "39" => "Z * Z/5",
        _ => "Z * Z",
    }
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct MutationTally {
    pub passed: usize,
    pub failed: usize,
    pub rejected: usize,
}

/// Applies `count` random single-entry changes of C (one at a time, each to
/// the original) and sorts the mutants by verdict.
pub fn mutate(label: &str, count: usize, seed: u64) -> MutationTally {
    let (gd, cert) = load(label);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = MutationTally::default();
    for _ in 0..count {
        let mut rays = cert.c_rays.clone();
        let i = rng.gen_range(0..rays.len());
        let j = rng.gen_range(0..gd.n);
        let delta = loop {
            let d = rng.gen_range(-3i64..=3);
            if d != 0 {
                break d;
            }
        };
        rays[i][j] += BigInt::from(delta);
        let Ok(mutant) = Certificate::new(cert.case.clone(), rays, cert.d_rays.clone()) else {
            tally.rejected += 1;
            continue;
        };
        match verify(&gd, &mutant) {
            Ok(r) if r.overall => tally.passed += 1,
            Ok(_) => tally.failed += 1,
            Err(_) => tally.rejected += 1,
        }
    }
    tally
}
