//! LU factorization with partial pivoting and a 1-norm condition estimate.

use crate::tensor::Mat;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// Packed `L` (unit lower, below diagonal) and `U`, row-major.
    lu: Vec<f64>,
    perm: Vec<usize>,
    anorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LuFailure {
    NotSquare,
    /// Exact zero pivot at this column.
    ZeroPivot(usize),
}

impl Lu {
    pub fn factor(a: &Mat) -> Result<Self, LuFailure> {
        let (n, c) = a.shape();
        if n != c {
            return Err(LuFailure::NotSquare);
        }
        let anorm = one_norm(a);
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Err(LuFailure::ZeroPivot(k));
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[r * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, anorm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    pub fn inverse(&self) -> Mat {
        let n = self.n;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            for (r, v) in self.solve(&e).into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }

    /// Estimated 1-norm condition number (Hager's method).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if self.lu.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            if y_norm <= est {
                break;
            }
            est = y_norm;
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (j, v)| if v.abs() > b.1 { (j, v.abs()) } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        // Alternative estimate guards against the power-iteration stalling.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let alt_norm = 2.0 * self.solve(&alt).iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_norm) * self.anorm
    }
}

/// Whether `a` is symmetric (to `1e-12` relative) and positive definite.
pub fn is_spd(a: &Mat) -> bool {
    let n = a.rows();
    if a.cols() != n {
        return false;
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    // Cholesky succeeds iff positive definite.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

pub fn one_norm(a: &Mat) -> f64 {
    (0..a.cols())
        .map(|c| (0..a.rows()).map(|r| a.get(r, c).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_cond_1(a: &Mat) -> f64 {
        let lu = Lu::factor(a).unwrap();
        one_norm(a) * one_norm(&lu.inverse())
    }

    #[test]
    fn solves_and_inverts() {
        let a = Mat::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]).unwrap();
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[5.0, 3.0, 6.0]);
        let ax = a.mul_vec(&x).unwrap();
        for (got, want) in ax.iter().zip([5.0, 3.0, 6.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let xt = lu.solve_transpose(&[1.0, 2.0, 3.0]);
        let atx = a.transpose().mul_vec(&xt).unwrap();
        for (got, want) in atx.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let prod = a.matmul(&lu.inverse()).unwrap();
        assert!(prod.max_abs_diff(&Mat::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::factor(&a), Err(LuFailure::ZeroPivot(1))));
        assert_eq!(Lu::factor(&Mat::zeros(2, 3)).err(), Some(LuFailure::NotSquare));
    }

    #[test]
    fn spd_detection() {
        assert!(is_spd(&Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap()));
        assert!(!is_spd(&Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap()));
        assert!(!is_spd(&Mat::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap()));
        assert!(!is_spd(&Mat::zeros(2, 3)));
    }

    #[test]
    fn condition_estimate_tracks_exact_value() {
        let a = Mat::from_rows(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-8]]).unwrap();
        let est = Lu::factor(&a).unwrap().condition_estimate();
        let exact = exact_cond_1(&a);
        assert!(est <= exact * (1.0 + 1e-6) && est >= exact / 10.0, "{est} vs {exact}");

        let b = Mat::diag(&[1.0, 10.0, 100.0]).unwrap();
        let est = Lu::factor(&b).unwrap().condition_estimate();
        assert!((est - 100.0).abs() < 1e-9);
    }
}
