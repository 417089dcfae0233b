#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dac::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dac"))
        .arg("--quiet")
        .args(args)
        .output()
        .expect("spawn dac")
}

/// Writes `{prefix}-images-idx3-ubyte` and `{prefix}-labels-idx1-ubyte` holding
/// 4×4 two-class images: class 0 lights the left half, class 1 the right.
pub fn write_idx_pair(dir: &Path, prefix: &str, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = vec![0, 0, 8, 3];
    for v in [n as u32, 4, 4] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    let mut labels = vec![0, 0, 8, 1];
    labels.extend_from_slice(&(n as u32).to_be_bytes());
    for i in 0..n {
        let class = (i % 2) as u8;
        labels.push(class);
        for p in 0..16 {
            let on = (p % 4 < 2) == (class == 0);
            let base: u8 = if on { 200 } else { 20 };
            images.push(base + rng.gen_range(0..40));
        }
    }
    let img = dir.join(format!("{prefix}-images-idx3-ubyte"));
    let lab = dir.join(format!("{prefix}-labels-idx1-ubyte"));
    fs::write(&img, images).unwrap();
    fs::write(&lab, labels).unwrap();
    (img, lab)
}

/// Small two-class IDX fixture plus a matching config written to `dir/run.conf`.
pub fn tiny_run(dir: &Path) -> (RunConfig, PathBuf) {
    write_idx_pair(dir, "train", 80, 1);
    write_idx_pair(dir, "t10k", 40, 2);
    let cfg = RunConfig {
        encoder_widths: vec![16, 8, 2],
        decoder_widths: vec![2, 8, 16],
        code_dim: 2,
        epochs: 20,
        batch_size: 16,
        k: 2,
        kmeans_restarts: 3,
        output_dir: dir.join("run"),
        ..RunConfig::mnist(dir)
    };
    let path = dir.join("run.conf");
    cfg.save(&path).unwrap();
    (cfg, path)
}
