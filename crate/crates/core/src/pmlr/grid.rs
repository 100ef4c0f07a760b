use super::{PmlrError, Result};

/// Strictly increasing grid coordinates along one axis (at least two).
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBreakpoints {
    mu: Vec<f64>,
}

impl AxisBreakpoints {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.len() < 2 {
            return Err(PmlrError::InvalidAxis(format!(
                "need at least 2 breakpoints, got {}",
                mu.len()
            )));
        }
        if let Some(bad) = mu.iter().find(|v| !v.is_finite()) {
            return Err(PmlrError::InvalidAxis(format!("non-finite breakpoint {bad}")));
        }
        if let Some(w) = mu.windows(2).find(|w| w[0] >= w[1]) {
            return Err(PmlrError::InvalidAxis(format!(
                "breakpoints not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { mu })
    }

    /// Evenly spaced breakpoints from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        let mut mu: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        mu[count - 1] = hi;
        Self::new(mu)
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.mu[0]
    }

    pub fn last(&self) -> f64 {
        self.mu[self.mu.len() - 1]
    }

    /// Interior knots `μ^(2) … μ^(L−1)`.
    pub fn interior(&self) -> &[f64] {
        &self.mu[1..self.mu.len() - 1]
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.first() && z <= self.last()
    }

    /// Distance from `z` to the nearest breakpoint.
    pub fn distance_to_knot(&self, z: f64) -> f64 {
        self.mu.iter().map(|m| (z - m).abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.mu.iter().map(|v| f(*v)).collect())
    }
}

/// Names and units attached to a gridded function's inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub axis_names: Vec<String>,
    pub axis_units: Vec<String>,
    pub output_names: Vec<String>,
}

impl Labels {
    pub fn generic(k: usize, m: usize) -> Self {
        Self {
            axis_names: (1..=k).map(|i| format!("z{i}")).collect(),
            axis_units: vec!["-".to_string(); k],
            output_names: (1..=m).map(|i| format!("y{i}")).collect(),
        }
    }

    pub fn new(axes: &[(&str, &str)], outputs: &[&str]) -> Self {
        Self {
            axis_names: axes.iter().map(|(n, _)| n.to_string()).collect(),
            axis_units: axes.iter().map(|(_, u)| u.to_string()).collect(),
            output_names: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub(crate) fn check(&self, k: usize, m: usize) -> Result<()> {
        if self.axis_names.len() != k || self.axis_units.len() != k {
            return Err(PmlrError::Shape(format!(
                "{} axis labels for {k} axes",
                self.axis_names.len()
            )));
        }
        if self.output_names.len() != m {
            return Err(PmlrError::Shape(format!(
                "{} output labels for {m} outputs",
                self.output_names.len()
            )));
        }
        let bad = |s: &String| s.is_empty() || s.chars().any(char::is_whitespace);
        if let Some(s) = self
            .axis_names
            .iter()
            .chain(&self.axis_units)
            .chain(&self.output_names)
            .find(|s| bad(s))
        {
            return Err(PmlrError::Shape(format!("invalid label {s:?}")));
        }
        Ok(())
    }
}

/// Values of an `m`-output function on a `k`-dimensional rectilinear grid.
///
/// Nodes are stored row-major over `(i_1, …, i_k)` (the last axis varies
/// fastest) with the `m` outputs of each node contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDataset {
    axes: Vec<AxisBreakpoints>,
    m: usize,
    values: Vec<f64>,
    labels: Labels,
}

impl GriddedDataset {
    pub fn new(axes: Vec<AxisBreakpoints>, m: usize, values: Vec<f64>) -> Result<Self> {
        let labels = Labels::generic(axes.len(), m);
        Self::with_labels(axes, m, values, labels)
    }

    pub fn with_labels(
        axes: Vec<AxisBreakpoints>,
        m: usize,
        values: Vec<f64>,
        labels: Labels,
    ) -> Result<Self> {
        if axes.is_empty() {
            return Err(PmlrError::Shape("dataset needs at least one axis".into()));
        }
        if m == 0 {
            return Err(PmlrError::Shape("dataset needs at least one output".into()));
        }
        let nodes: usize = axes.iter().map(AxisBreakpoints::len).product();
        if values.len() != nodes * m {
            return Err(PmlrError::Shape(format!(
                "expected {} values ({nodes} nodes x {m} outputs), got {}",
                nodes * m,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PmlrError::NonFinite(format!("dataset value at node {}", i / m)));
        }
        labels.check(axes.len(), m)?;
        Ok(Self {
            axes,
            m,
            values,
            labels,
        })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(
        axes: Vec<AxisBreakpoints>,
        m: usize,
        labels: Labels,
        mut f: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(AxisBreakpoints::len).collect();
        let nodes: usize = shape.iter().product();
        let mut values = Vec::with_capacity(nodes * m);
        let mut point = vec![0.0; axes.len()];
        for node in 0..nodes {
            for (j, idx) in unravel(node, &shape).into_iter().enumerate() {
                point[j] = axes[j].values()[idx];
            }
            let y = f(&point);
            if y.len() != m {
                return Err(PmlrError::Shape(format!(
                    "sampler returned {} outputs, expected {m}",
                    y.len()
                )));
            }
            values.extend(y);
        }
        Self::with_labels(axes, m, values, labels)
    }

    pub fn axes(&self) -> &[AxisBreakpoints] {
        &self.axes
    }

    pub fn k(&self) -> usize {
        self.axes.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(AxisBreakpoints::len).collect()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(AxisBreakpoints::len).product()
    }

    /// All values, node-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Outputs at the node with flat (row-major) index `node`.
    pub fn node_value(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// Outputs at multi-index `idx`.
    pub fn value_at(&self, idx: &[usize]) -> &[f64] {
        self.node_value(ravel(idx, &self.shape()))
    }

    /// Coordinates of the node with flat index `node`.
    pub fn node_point(&self, node: usize) -> Vec<f64> {
        unravel(node, &self.shape())
            .into_iter()
            .zip(&self.axes)
            .map(|(i, a)| a.values()[i])
            .collect()
    }

    /// Output `o` as a flat row-major array over the grid.
    pub fn output_slice(&self, o: usize) -> Vec<f64> {
        self.values.iter().skip(o).step_by(self.m).copied().collect()
    }

    /// Same values with every axis coordinate mapped through `f`
    /// (used for unit conversion).
    pub fn map_axes(&self, f: impl Fn(f64) -> f64 + Copy, unit: &str) -> Result<Self> {
        let axes = self
            .axes
            .iter()
            .map(|a| a.map(f))
            .collect::<Result<Vec<_>>>()?;
        let mut labels = self.labels.clone();
        labels.axis_units = vec![unit.to_string(); axes.len()];
        Self::with_labels(axes, self.m, self.values.clone(), labels)
    }
}

/// Row-major multi-index of a flat node index.
pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for j in (0..shape.len()).rev() {
        idx[j] = flat % shape[j];
        flat /= shape[j];
    }
    idx
}

pub fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (i, n)| acc * n + i)
}
