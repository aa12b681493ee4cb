// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reference computations that share no code with the library paths they
//! check. Everything here is plain nested `Vec`s and index loops.

#![allow(dead_code, clippy::needless_range_loop)]

/// MSU by explicit double loop.
pub fn msu_bruteforce(certain: &[Vec<f64>], uncertain: &[Vec<f64>]) -> f64 {
    let n = certain.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sq = 0.0;
        for j in 0..certain[i].len() {
            let diff = certain[i][j] - uncertain[i][j];
            sq += diff * diff;
        }
        total += sq.sqrt();
    }
    total / n as f64
}

/// Sample covariance (divisor M-1) by explicit loops.
pub fn covariance(data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = data.len();
    let d = data[0].len();
    let mut mean = vec![0.0; d];
    for row in data {
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for row in data {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (m - 1) as f64;
        }
    }
    cov
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenpairs sorted by decreasing eigenvalue; vectors are unit length.
pub fn jacobi_eigen(sym: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| (a[k][k], v.iter().map(|row| row[k]).collect()))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Largest |a_i - s*b_i| over i, minimized over the sign s.
pub fn max_diff_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

/// Projection by explicit double loop.
pub fn project_naive(data: &[Vec<f64>], mean: &[f64], comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    data.iter()
        .map(|row| {
            comps
                .iter()
                .map(|c| {
                    let mut acc = 0.0;
                    for j in 0..row.len() {
                        acc += (row[j] - mean[j]) * c[j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Nearest-centroid accuracy of two labelled 2-D point sets, ties half.
pub fn nearest_centroid_accuracy(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let centroid = |pts: &[[f64; 2]]| {
        let mut c = [0.0, 0.0];
        for p in pts {
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / pts.len() as f64, c[1] / pts.len() as f64]
    };
    let (ca, cb) = (centroid(a), centroid(b));
    let d = |p: &[f64; 2], c: &[f64; 2]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
    let mut correct = 0.0;
    for p in a {
        correct += match d(p, &ca).partial_cmp(&d(p, &cb)).unwrap() {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 0.0,
        };
    }
    for p in b {
        correct += match d(p, &cb).partial_cmp(&d(p, &ca)).unwrap() {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 0.0,
        };
    }
    correct / (a.len() + b.len()) as f64
}

/// Spearman rho from the textbook `1 - 6 Σd² / (n(n²-1))`; valid without ties.
pub fn spearman_no_ties(values: &[f64]) -> f64 {
    let n = values.len();
    let mut d2 = 0.0;
    for i in 0..n {
        let rank = values.iter().filter(|&&v| v < values[i]).count() + 1;
        let diff = rank as f64 - (i + 1) as f64;
        d2 += diff * diff;
    }
    let n = n as f64;
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Standard normal draw by Box–Muller from two uniforms in (0,1].
pub fn box_muller(u1: f64, u2: f64) -> f64 {
    let u1 = 1.0 - u1;
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
