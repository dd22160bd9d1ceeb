//! Independent oracles, written as plain loops over raw values without
//! calling the library's own implementations.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

/// Indices of `rho_1, ..., rho_{N+1}` by direct scan: the first index with
/// `qv >= c n^-gamma`, or the last index.
pub fn ladder_indices(qv: &[f64], c: f64, gamma: f64, depth: usize) -> Vec<usize> {
    (1..=depth + 1)
        .map(|n| {
            let level = c * (n as f64).powf(-gamma);
            qv.iter().position(|q| *q >= level).unwrap_or(qv.len() - 1)
        })
        .collect()
}

/// `(Z, H)` from path values at the ladder indices.
pub fn z_and_h(s: &[f64], rho: &[usize], beta: f64) -> (Vec<f64>, Vec<f64>) {
    let depth = rho.len() - 1;
    let z: Vec<f64> = (0..depth)
        .map(|i| (s[rho[i]] - s[rho[i + 1]]).max(0.0))
        .collect();
    let mut h = Vec::with_capacity(depth);
    let mut prod = 1.0;
    for zk in &z {
        prod /= 1.0 + beta * zk;
        h.push(prod);
    }
    (z, h)
}

/// Wealth by forward recursion: `V_k = V_{k-1} + phi_k (S_k - S_{k-1})`,
/// where `phi_k` is the holding on `(t_{k-1}, t_k]`.
pub fn wealth(phi: &[f64], s: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; s.len()];
    for k in 1..s.len() {
        v[k] = v[k - 1] + phi[k] * (s[k] - s[k - 1]);
    }
    v
}

/// `int_0^inf exp(-a z) pdf(z) dz` by composite Simpson on `[0, 12]`.
pub fn half_laplace(a: f64) -> f64 {
    let n = 4000;
    let h = 12.0 / n as f64;
    let f = |z: f64| (-a * z - 0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(0.0) + f(12.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Exact `E sum_{n <= N} exp(-alpha sum_{k <= n} xi_k)` for independent
/// `xi_k = (u_k Z_k)^+`, `u_k = sigma sqrt(k^-gamma - (k+1)^-gamma)`:
/// the expectation factorises into `prod_k (1/2 + half_laplace(alpha u_k))`.
pub fn exact_increment_sums(sigma: f64, gamma: f64, alpha: f64, depth: usize) -> Vec<f64> {
    let mut prod = 1.0;
    let mut acc = 0.0;
    (1..=depth)
        .map(|k| {
            let kf = k as f64;
            let u = sigma * (kf.powf(-gamma) - (kf + 1.0).powf(-gamma)).sqrt();
            prod *= 0.5 + half_laplace(alpha * u);
            acc += prod;
            acc
        })
        .collect()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_nsarb"))
}

/// Runs the binary in `cwd` with extra environment variables.
pub fn nsarb(cwd: &std::path::Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(cwd).args(args).env_remove("NSARB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn nsarb")
}

/// Reads a two-column CSV with a header into `(t, value)` vectors.
pub fn read_series(path: &std::path::Path) -> (String, Vec<f64>, Vec<f64>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for line in lines {
        let (a, b) = line.split_once(',').unwrap();
        t.push(a.parse().unwrap());
        v.push(b.parse().unwrap());
    }
    (header, t, v)
}
