// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded inputs shared by the benchmarks.

use modalprobe::{ActivationRun, Matrix, ProbeRng};

pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> Matrix<f32> {
    let mut rng = ProbeRng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0) as f32)
}

/// A run whose arms drift apart with depth.
pub fn synthetic_run(seed: u64, layers: usize, pairs: usize, d_model: usize) -> ActivationRun {
    let mut certain = Vec::with_capacity(layers);
    let mut uncertain = Vec::with_capacity(layers);
    for l in 0..layers {
        let base = random_matrix(seed.wrapping_add(l as u64), pairs, d_model);
        let noise = random_matrix(seed.wrapping_add(1000 + l as u64), pairs, d_model);
        let gap = 0.1 * (l + 1) as f32;
        uncertain.push(Matrix::from_fn(pairs, d_model, |i, j| base.get(i, j) + gap * noise.get(i, j)));
        certain.push(base);
    }
    let ids = (0..pairs).map(|i| format!("bench-{i}")).collect();
    ActivationRun::new("bench", ids, certain, uncertain).expect("shapes agree")
}

/// A prompt of roughly `len` bytes in the default template's shape.
pub fn prompt(len: usize) -> String {
    let mut text = String::from("<|im_start|>user\nLeaders [MASK] act on climate.");
    while text.len() < len {
        text.push_str(" and more");
    }
    text.truncate(len);
    text
}
