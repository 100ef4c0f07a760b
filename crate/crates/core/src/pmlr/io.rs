//! Versioned text containers for gridded datasets and fitted models.
//!
//! Both formats are line oriented. Numbers are written in shortest
//! round-trip exponent notation, so `write → read → write` reproduces the
//! same bytes. Lines starting with `#` are comments.
//!
//! Dataset file:
//!
//! ```text
//! pmlr-dataset 1
//! # node order: row-major over the axes (last axis fastest), one line per node
//! count <N>
//! component <name>
//! k <k>
//! m <m>
//! axis <name> <unit> <L> <μ1> … <μL>      (k lines)
//! outputs <name1> … <name_m>
//! values
//! <y1> … <y_m>                            (∏L lines)
//! end
//! ```
//!
//! Model file:
//!
//! ```text
//! pmlr-model 1
//! # gamma rows are outputs; columns follow z1 ⊗ z2 ⊗ … ⊗ zk (last axis fastest)
//! count <N>
//! model <name>
//! k <k>
//! m <m>
//! axis <name> <unit> <L> <μ1> … <μL>
//! outputs <name1> … <name_m>
//! gamma
//! <Γ row 1>                               (m lines)
//! end
//! ```

use std::fmt::Write as _;

use super::grid::{AxisBreakpoints, GriddedDataset, Labels};
use super::model::PmlrModel;
use super::{PmlrError, Result};
use crate::tensor::Mat;

pub const DATASET_MAGIC: &str = "pmlr-dataset";
pub const MODEL_MAGIC: &str = "pmlr-model";
pub const FORMAT_VERSION: u32 = 1;

const DATASET_ORDER_NOTE: &str =
    "# node order: row-major over the axes (last axis fastest), one line per node";
const MODEL_ORDER_NOTE: &str =
    "# gamma rows are outputs; columns follow z1 (x) z2 (x) ... (x) zk (last axis fastest)";

/// A named gridded component.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedDataset {
    pub name: String,
    pub data: GriddedDataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub model: PmlrModel,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:e}")
}

fn push_numbers(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        out.push_str(&format_f64(*v));
    }
    out.push('\n');
}

fn write_header(out: &mut String, axes: &[AxisBreakpoints], labels: &Labels, m: usize) {
    let _ = writeln!(out, "k {}", axes.len());
    let _ = writeln!(out, "m {m}");
    for (j, a) in axes.iter().enumerate() {
        let _ = write!(
            out,
            "axis {} {} {} ",
            labels.axis_names[j],
            labels.axis_units[j],
            a.len()
        );
        push_numbers(out, a.values());
    }
    let _ = writeln!(out, "outputs {}", labels.output_names.join(" "));
}

pub fn write_datasets(items: &[NamedDataset]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC} {FORMAT_VERSION}");
    out.push_str(DATASET_ORDER_NOTE);
    out.push('\n');
    let _ = writeln!(out, "count {}", items.len());
    for item in items {
        let d = &item.data;
        let _ = writeln!(out, "component {}", item.name);
        write_header(&mut out, d.axes(), d.labels(), d.m());
        out.push_str("values\n");
        for node in 0..d.node_count() {
            push_numbers(&mut out, d.node_value(node));
        }
        out.push_str("end\n");
    }
    out
}

pub fn write_models(items: &[NamedModel]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC} {FORMAT_VERSION}");
    out.push_str(MODEL_ORDER_NOTE);
    out.push('\n');
    let _ = writeln!(out, "count {}", items.len());
    for item in items {
        let md = &item.model;
        let _ = writeln!(out, "model {}", item.name);
        write_header(&mut out, md.axes(), md.labels(), md.m());
        out.push_str("gamma\n");
        for r in 0..md.m() {
            push_numbers(&mut out, md.gamma().row_slice(r));
        }
        out.push_str("end\n");
    }
    out
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map_or(0, |(n, _)| *n);
        Err(PmlrError::Format {
            line,
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Result<&'a str> {
        match self.lines.get(self.pos) {
            Some((_, l)) => {
                self.pos += 1;
                Ok(l)
            }
            None => {
                self.pos += 1;
                self.err("unexpected end of file")
            }
        }
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(key) {
            return self.err(format!("expected '{key}', found '{line}'"));
        }
        Ok(tokens.collect())
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let t = self.keyed(key)?;
        match t.as_slice() {
            [v] => v
                .parse()
                .or_else(|_| self.err(format!("bad integer for '{key}': {v}"))),
            _ => self.err(format!("'{key}' takes one integer")),
        }
    }

    fn numbers(&self, tokens: &[&str], expected: usize) -> Result<Vec<f64>> {
        if tokens.len() != expected {
            return self.err(format!("expected {expected} numbers, found {}", tokens.len()));
        }
        tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map_or_else(|| self.err(format!("bad number '{t}'")), Ok)
            })
            .collect()
    }

    fn number_line(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        self.numbers(&tokens, expected)
    }

    fn magic(&mut self, magic: &str) -> Result<()> {
        let t = self.keyed(magic)?;
        match t.as_slice() {
            [v] if v.parse::<u32>().ok() == Some(FORMAT_VERSION) => Ok(()),
            _ => self.err(format!("unsupported {magic} version {t:?}")),
        }
    }

    fn name(&mut self, key: &str) -> Result<String> {
        let t = self.keyed(key)?;
        match t.as_slice() {
            [n] => Ok(n.to_string()),
            _ => self.err(format!("'{key}' takes one name")),
        }
    }

    fn header(&mut self) -> Result<(Vec<AxisBreakpoints>, Labels, usize)> {
        let k = self.keyed_usize("k")?;
        let m = self.keyed_usize("m")?;
        if k == 0 || m == 0 {
            return self.err("k and m must be positive");
        }
        let mut axes = Vec::with_capacity(k);
        let mut labels = Labels {
            axis_names: Vec::new(),
            axis_units: Vec::new(),
            output_names: Vec::new(),
        };
        for _ in 0..k {
            let t = self.keyed("axis")?;
            if t.len() < 3 {
                return self.err("axis line needs name, unit and count");
            }
            let count: usize = t[2]
                .parse()
                .or_else(|_| self.err(format!("bad breakpoint count '{}'", t[2])))?;
            let mu = self.numbers(&t[3..], count)?;
            let axis = AxisBreakpoints::new(mu).or_else(|e| self.err(e.to_string()))?;
            axes.push(axis);
            labels.axis_names.push(t[0].to_string());
            labels.axis_units.push(t[1].to_string());
        }
        let outs = self.keyed("outputs")?;
        if outs.len() != m {
            return self.err(format!("expected {m} output names"));
        }
        labels.output_names = outs.iter().map(|s| s.to_string()).collect();
        Ok((axes, labels, m))
    }

    fn finish(&mut self) -> Result<()> {
        if self.pos < self.lines.len() {
            self.pos += 1;
            return self.err("trailing content");
        }
        Ok(())
    }
}

pub fn read_datasets(text: &str) -> Result<Vec<NamedDataset>> {
    let mut cur = Cursor::new(text);
    cur.magic(DATASET_MAGIC)?;
    let count = cur.keyed_usize("count")?;
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let name = cur.name("component")?;
        let (axes, labels, m) = cur.header()?;
        cur.keyed("values")?;
        let nodes: usize = axes.iter().map(AxisBreakpoints::len).product();
        let mut values = Vec::with_capacity(nodes * m);
        for _ in 0..nodes {
            values.extend(cur.number_line(m)?);
        }
        cur.keyed("end")?;
        let data = GriddedDataset::with_labels(axes, m, values, labels)
            .or_else(|e| cur.err(e.to_string()))?;
        items.push(NamedDataset { name, data });
    }
    cur.finish()?;
    Ok(items)
}

pub fn read_models(text: &str) -> Result<Vec<NamedModel>> {
    let mut cur = Cursor::new(text);
    cur.magic(MODEL_MAGIC)?;
    let count = cur.keyed_usize("count")?;
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let name = cur.name("model")?;
        let (axes, labels, m) = cur.header()?;
        cur.keyed("gamma")?;
        let n: usize = axes.iter().map(AxisBreakpoints::len).product();
        let mut gamma = Vec::with_capacity(m * n);
        for _ in 0..m {
            gamma.extend(cur.number_line(n)?);
        }
        cur.keyed("end")?;
        let gamma = Mat::new(m, n, gamma).or_else(|e| cur.err(e.to_string()))?;
        let model =
            PmlrModel::with_labels(gamma, axes, labels).or_else(|e| cur.err(e.to_string()))?;
        items.push(NamedModel { name, model });
    }
    cur.finish()?;
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::super::fit::fit_regression;
    use super::*;

    fn sample() -> NamedDataset {
        let axes = vec![
            AxisBreakpoints::new(vec![-5.0, 0.0, 12.5]).unwrap(),
            AxisBreakpoints::new(vec![0.1, 0.2]).unwrap(),
        ];
        let data = GriddedDataset::from_fn(
            axes,
            2,
            Labels::new(&[("alpha", "deg"), ("delta", "deg")], &["dCl", "dCn"]),
            |p| vec![p[0] * p[1] / 3.0, -p[0].powi(2) + 1e-17],
        )
        .unwrap();
        NamedDataset {
            name: "flap4".into(),
            data,
        }
    }

    #[test]
    fn dataset_round_trip_is_byte_exact() {
        let text = write_datasets(&[sample(), sample()]);
        let back = read_datasets(&text).unwrap();
        assert_eq!(back, vec![sample(), sample()]);
        assert_eq!(write_datasets(&back), text);
    }

    #[test]
    fn model_round_trip_is_byte_exact() {
        let model = fit_regression(&sample().data).unwrap();
        let item = NamedModel {
            name: "flap4".into(),
            model,
        };
        let text = write_models(std::slice::from_ref(&item));
        let back = read_models(&text).unwrap();
        assert_eq!(back, vec![item]);
        assert_eq!(write_models(&back), text);
    }

    #[test]
    fn rejects_bad_input() {
        let text = write_datasets(&[sample()]);
        assert!(read_datasets(&text.replace("pmlr-dataset 1", "pmlr-dataset 2")).is_err());
        assert!(read_datasets(&text.replace("count 1", "count 2")).is_err());
        let truncated: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            read_datasets(&truncated),
            Err(PmlrError::Format { .. })
        ));
        assert!(read_models(&text).is_err());
        let nan = text.replacen("-5e0", "NaN", 1);
        assert!(read_datasets(&nan).is_err());
    }
}
