// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

pub mod oracles;

use modalprobe::{Matrix, ProbeRng};

pub fn random_rows(rng: &mut ProbeRng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.uniform(-scale, scale)).collect())
        .collect()
}

pub fn gaussian_rows(rng: &mut ProbeRng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| oracles::box_muller(rng.next_f64(), rng.next_f64()))
                .collect()
        })
        .collect()
}

pub fn to_matrix(rows: &[Vec<f64>]) -> Matrix<f64> {
    Matrix::from_rows(rows)
}

pub fn to_rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}
