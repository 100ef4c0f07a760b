//! Ordinary multivariate polynomial effector models (the baseline the PMLR
//! models are compared against).

use nalgebra::{DMatrix, DVector};

use crate::pmlr::grid::unravel;
use crate::pmlr::GriddedDataset;

/// Polynomial `y_o(z) = Σ c_{o,t} Π_j u_j^{e_{t,j}}` in the normalized inputs
/// `u_j = (z_j − center_j) / half_width_j`, with a separate tensor-product
/// term set per output.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    center: Vec<f64>,
    half_width: Vec<f64>,
    outputs: Vec<PolyOutput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyOutput {
    /// Exponent tuple of every term.
    pub exponents: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
}

/// All exponent tuples with `e_j ≤ degrees[j]`.
pub fn tensor_exponents(degrees: &[u32]) -> Vec<Vec<u32>> {
    let shape: Vec<usize> = degrees.iter().map(|d| *d as usize + 1).collect();
    let count: usize = shape.iter().product();
    (0..count)
        .map(|i| unravel(i, &shape).into_iter().map(|e| e as u32).collect())
        .collect()
}

impl PolyModel {
    /// Least-squares fit of every output over all grid nodes; `degrees[o]`
    /// gives the per-axis maximum exponents of output `o`.
    pub fn fit(data: &GriddedDataset, degrees: &[Vec<u32>]) -> Self {
        assert_eq!(degrees.len(), data.m(), "one degree set per output");
        let center: Vec<f64> = data.axes().iter().map(|a| 0.5 * (a.first() + a.last())).collect();
        let half_width: Vec<f64> = data
            .axes()
            .iter()
            .map(|a| 0.5 * (a.last() - a.first()))
            .collect();
        let mut model = Self {
            center,
            half_width,
            outputs: Vec::with_capacity(data.m()),
        };
        let nodes = data.node_count();
        let points: Vec<Vec<f64>> = (0..nodes).map(|n| model.normalize(&data.node_point(n))).collect();
        for (o, deg) in degrees.iter().enumerate() {
            assert_eq!(deg.len(), data.k(), "one degree per axis");
            let exponents = tensor_exponents(deg);
            let a = DMatrix::from_fn(nodes, exponents.len(), |r, c| monomial(&points[r], &exponents[c]));
            let b = DVector::from_vec(data.output_slice(o));
            let coefficients = a
                .svd(true, true)
                .solve(&b, 1e-12)
                .expect("SVD computed with U and V")
                .as_slice()
                .to_vec();
            model.outputs.push(PolyOutput {
                exponents,
                coefficients,
            });
        }
        model
    }

    fn normalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .map(|(v, (c, h))| (v - c) / h)
            .collect()
    }

    pub fn k(&self) -> usize {
        self.center.len()
    }

    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[PolyOutput] {
        &self.outputs
    }

    pub fn coefficient_counts(&self) -> Vec<usize> {
        self.outputs.iter().map(|o| o.coefficients.len()).collect()
    }

    pub fn evaluate(&self, z: &[f64]) -> Vec<f64> {
        let u = self.normalize(z);
        self.outputs
            .iter()
            .map(|o| {
                o.exponents
                    .iter()
                    .zip(&o.coefficients)
                    .map(|(e, c)| c * monomial(&u, e))
                    .sum()
            })
            .collect()
    }

    /// Analytic partial derivative along input `axis`.
    pub fn partial(&self, z: &[f64], axis: usize) -> Vec<f64> {
        let u = self.normalize(z);
        let scale = 1.0 / self.half_width[axis];
        self.outputs
            .iter()
            .map(|o| {
                o.exponents
                    .iter()
                    .zip(&o.coefficients)
                    .filter(|(e, _)| e[axis] > 0)
                    .map(|(e, c)| {
                        let mut d = f64::from(e[axis]) * scale;
                        for (j, (&uj, &ej)) in u.iter().zip(e).enumerate() {
                            let p = if j == axis { ej - 1 } else { ej };
                            d *= uj.powi(p as i32);
                        }
                        c * d
                    })
                    .sum()
            })
            .collect()
    }
}

fn monomial(u: &[f64], e: &[u32]) -> f64 {
    u.iter().zip(e).map(|(x, p)| x.powi(*p as i32)).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmlr::{AxisBreakpoints, Labels};

    fn grid(f: impl Fn(&[f64]) -> Vec<f64>) -> GriddedDataset {
        GriddedDataset::from_fn(
            vec![
                AxisBreakpoints::linspace(-2.0, 3.0, 6).unwrap(),
                AxisBreakpoints::linspace(0.0, 10.0, 5).unwrap(),
            ],
            1,
            Labels::generic(2, 1),
            |p| f(p),
        )
        .unwrap()
    }

    #[test]
    fn exponent_sets() {
        let e = tensor_exponents(&[1, 2]);
        assert_eq!(e.len(), 6);
        assert_eq!(e[0], vec![0, 0]);
        assert_eq!(e[5], vec![1, 2]);
    }

    #[test]
    fn recovers_polynomial_data_exactly() {
        let f = |p: &[f64]| vec![1.0 + 2.0 * p[0] - 0.5 * p[0] * p[1] + 0.1 * p[1] * p[1]];
        let d = grid(f);
        let m = PolyModel::fit(&d, &[vec![1, 2]]);
        assert_eq!(m.coefficient_counts(), vec![6]);
        for z in [[0.3, 4.0], [-1.7, 9.5], [2.9, 0.1]] {
            assert!((m.evaluate(&z)[0] - f(&z)[0]).abs() < 1e-10);
            let dz0 = 2.0 - 0.5 * z[1];
            let dz1 = -0.5 * z[0] + 0.2 * z[1];
            assert!((m.partial(&z, 0)[0] - dz0).abs() < 1e-9);
            assert!((m.partial(&z, 1)[0] - dz1).abs() < 1e-9);
        }
    }

    #[test]
    fn kinked_data_leaves_residual() {
        let d = grid(|p| vec![p[0].abs()]);
        let m = PolyModel::fit(&d, &[vec![2, 0]]);
        let worst = (0..d.node_count())
            .map(|n| (m.evaluate(&d.node_point(n))[0] - d.node_value(n)[0]).abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
    }
}
