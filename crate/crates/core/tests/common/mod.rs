//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use facefuse::image::save_image;
use facefuse::synth::{FaceScene, Perturbation};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Renderings per identity: index 0 is the enrolment capture, the rest are probes.
pub const RENDERINGS: usize = 4;
pub const MAX_SHIFT: f64 = 1.0;
pub const NOISE_SIGMA: f64 = 2.0;

/// Writes `RENDERINGS` perturbed captures per identity as PGM files plus a manifest.
///
/// Test identities get rendering 0 as gallery and the rest as probes; training
/// identities (disjoint seeds) contribute every rendering to the training partition.
pub fn write_synthetic_dataset(dir: &Path, test_ids: &[u64], training_ids: &[u64]) -> std::path::PathBuf {
    let mut manifest = String::new();
    let mut write = |id: u64, role_of: &dyn Fn(usize) -> &'static str| {
        let scene = FaceScene::new(id);
        let mut rng = StdRng::seed_from_u64(id ^ 0xabcdef);
        for k in 0..RENDERINGS {
            let p = if k == 0 {
                Perturbation {
                    noise_sigma: NOISE_SIGMA,
                    ..Perturbation::default()
                }
            } else {
                Perturbation::random(&mut rng, MAX_SHIFT, NOISE_SIGMA)
            };
            let rel = format!("id{id}/{k}.pgm");
            std::fs::create_dir_all(dir.join(format!("id{id}"))).unwrap();
            save_image(&scene.render(&p, k as u64 + 1), dir.join(&rel)).unwrap();
            writeln!(manifest, "id{id}\t{}\t{rel}", role_of(k)).unwrap();
        }
    };
    for &id in test_ids {
        write(id, &|k| if k == 0 { "gallery" } else { "probe" });
    }
    for &id in training_ids {
        write(id, &|_| "training");
    }
    let path = dir.join("manifest.txt");
    std::fs::write(&path, manifest).unwrap();
    path
}
