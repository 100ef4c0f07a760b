//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pmlr_core::pmlr::{AxisBreakpoints, GriddedDataset};
use pmlr_core::tensor::Mat;
use rand::Rng;

pub fn random_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Mat::new(rows, cols, data).unwrap()
}

/// Strictly diagonally dominant, hence safely invertible.
pub fn random_invertible(rng: &mut impl Rng, n: usize) -> Mat {
    let mut a = random_mat(rng, n, n);
    for i in 0..n {
        a.set(i, i, a.get(i, i) + n as f64 + 1.0);
    }
    a
}

pub fn random_axis(rng: &mut impl Rng, len: usize) -> AxisBreakpoints {
    let mut mu = vec![rng.gen_range(-5.0..5.0)];
    for _ in 1..len {
        let last = *mu.last().unwrap();
        mu.push(last + rng.gen_range(0.2..2.0));
    }
    AxisBreakpoints::new(mu).unwrap()
}

/// Random dataset with `k ≤ max_k` axes of `2..=max_l` breakpoints and
/// `1..=3` outputs.
pub fn random_dataset(rng: &mut impl Rng, max_k: usize, max_l: usize) -> GriddedDataset {
    let k = rng.gen_range(1..=max_k);
    let m = rng.gen_range(1..=3);
    let axes: Vec<AxisBreakpoints> = (0..k)
        .map(|_| {
            let len = rng.gen_range(2..=max_l);
            random_axis(rng, len)
        })
        .collect();
    let nodes: usize = axes.iter().map(|a| a.len()).product();
    let values = (0..nodes * m).map(|_| rng.gen_range(-10.0..10.0)).collect();
    GriddedDataset::new(axes, m, values).unwrap()
}

/// Uniform point inside the grid hull.
pub fn random_point(rng: &mut impl Rng, axes: &[AxisBreakpoints]) -> Vec<f64> {
    axes.iter().map(|a| rng.gen_range(a.first()..=a.last())).collect()
}

/// Uniform point inside the hull at least `gap` from every breakpoint.
pub fn random_point_off_knots(rng: &mut impl Rng, axes: &[AxisBreakpoints], gap: f64) -> Vec<f64> {
    axes.iter()
        .map(|a| loop {
            let z = rng.gen_range(a.first()..=a.last());
            if a.values().iter().all(|m| (z - m).abs() >= gap) {
                break z;
            }
        })
        .collect()
}

/// Recursive multilinear interpolation: blends two `(k−1)`-dimensional
/// interpolations along the first axis. Boundary cells extend linearly.
pub fn multilinear_oracle(axes: &[Vec<f64>], values: &[f64], m: usize, z: &[f64]) -> Vec<f64> {
    if axes.is_empty() {
        return values[..m].to_vec();
    }
    let mu = &axes[0];
    let mut cell = 0;
    while cell + 2 < mu.len() && z[0] >= mu[cell + 1] {
        cell += 1;
    }
    let t = (z[0] - mu[cell]) / (mu[cell + 1] - mu[cell]);
    let stride: usize = axes[1..].iter().map(Vec::len).product::<usize>() * m;
    let lo = multilinear_oracle(&axes[1..], &values[cell * stride..], m, &z[1..]);
    let hi = multilinear_oracle(&axes[1..], &values[(cell + 1) * stride..], m, &z[1..]);
    lo.iter().zip(&hi).map(|(a, b)| a + t * (b - a)).collect()
}

pub fn oracle_for(data: &GriddedDataset, z: &[f64]) -> Vec<f64> {
    let axes: Vec<Vec<f64>> = data.axes().iter().map(|a| a.values().to_vec()).collect();
    multilinear_oracle(&axes, data.values(), data.m(), z)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `min (x − p)ᵀ W (x − p)  s.t.  G x = v`, solved through its KKT system.
pub fn qp_oracle(g: &Mat, w: &Mat, p: &[f64], v: &[f64]) -> Vec<f64> {
    let (d, n) = g.shape();
    let mut kkt = DMatrix::zeros(n + d, n + d);
    let mut rhs = DVector::zeros(n + d);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = w.get(i, j);
        }
        rhs[i] = (0..n).map(|j| w.get(i, j) * p[j]).sum();
    }
    for r in 0..d {
        for c in 0..n {
            kkt[(n + r, c)] = g.get(r, c);
            kkt[(c, n + r)] = g.get(r, c);
        }
        rhs[n + r] = v[r];
    }
    let sol = kkt.lu().solve(&rhs).expect("KKT system of a full-rank instance is nonsingular");
    sol.as_slice()[..n].to_vec()
}

pub fn weighted_norm(w: &Mat, x: &[f64]) -> f64 {
    let wx = w.mul_vec(x).unwrap();
    x.iter().zip(&wx).map(|(a, b)| a * b).sum()
}

/// Random symmetric positive-definite matrix `AᵀA + I`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Mat {
    let a = random_mat(rng, n, n);
    a.transpose().matmul(&a).unwrap().add(&Mat::identity(n)).unwrap()
}

/// Classical RK4 step for an autonomous system.
pub fn rk4<const N: usize>(x: [f64; N], h: f64, f: &impl Fn([f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: [f64; N], b: [f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = f(x);
    let k2 = f(add(x, k1, h / 2.0));
    let k3 = f(add(x, k2, h / 2.0));
    let k4 = f(add(x, k3, h));
    std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Time for `signal` to cover 63.2 % of a step from `start` to `target`,
/// linearly interpolated between samples.
pub fn time_constant<const N: usize>(
    x0: [f64; N],
    channel: usize,
    target: f64,
    h: f64,
    f: impl Fn([f64; N]) -> [f64; N],
) -> f64 {
    let start = x0[channel];
    let level = start + (1.0 - (-1.0f64).exp()) * (target - start);
    let progress = |x: f64| (x - start) / (target - start);
    let goal = progress(level);
    let mut x = x0;
    let mut t = 0.0;
    loop {
        let next = rk4(x, h, &f);
        let (p0, p1) = (progress(x[channel]), progress(next[channel]));
        if p1 >= goal {
            return t + h * (goal - p0) / (p1 - p0);
        }
        x = next;
        t += h;
        assert!(t < 100.0, "step response never reached 63.2 %");
    }
}
