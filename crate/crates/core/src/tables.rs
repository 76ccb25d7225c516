//! Tables of sampled splitting-error suprema, written as CSV.

use crate::error::Result;
use crate::exec::Exec;
use crate::lsa::{m_lsa, m_lsa_h1, precompute, RESIDUAL_FLOOR};
use crate::mesh::NeighborStrategy;
use std::f64::consts::PI;
use std::fmt::Write;

/// `Δq/√ε` columns of the mesh family.
pub const DQ_FAMILY: [(f64, &str); 4] =
    [(2.0, "2*sqrt(eps)"), (1.0, "sqrt(eps)"), (0.5, "sqrt(eps)/2"), (0.25, "sqrt(eps)/4")];

/// `Δp/√ε` rows of the mesh family.
pub const DP_FAMILY: [(f64, &str); 4] = [
    (PI / 2.0, "pi*sqrt(eps)/2"),
    (PI / 4.0, "pi*sqrt(eps)/4"),
    (PI / 8.0, "pi*sqrt(eps)/8"),
    (PI / 16.0, "pi*sqrt(eps)/16"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.corner);
        for c in &self.col_labels {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
        for (r, row) in self.row_labels.iter().zip(&self.values) {
            s.push_str(r);
            for v in row {
                write!(s, ",{v:.6e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }
}

fn floor(v: f64) -> f64 {
    if v < RESIDUAL_FLOOR {
        0.0
    } else {
        v
    }
}

/// L² table of one strategy: rows follow `cps`, columns follow `cqs`.
pub fn mlsa_l2_table<const D: usize>(
    strategy: &str,
    cqs: &[(f64, String)],
    cps: &[(f64, String)],
    samples: usize,
    rcond: f64,
    exec: &Exec,
) -> Result<Table> {
    let st = NeighborStrategy::<D>::named(strategy)?;
    let values = cps
        .iter()
        .map(|(cp, _)| cqs.iter().map(|(cq, _)| floor(m_lsa(&precompute(&st, *cq, *cp, rcond), samples, exec))).collect())
        .collect();
    Ok(Table {
        corner: format!("{strategy} dp\\dq"),
        row_labels: cps.iter().map(|c| c.1.clone()).collect(),
        col_labels: cqs.iter().map(|c| c.1.clone()).collect(),
        values,
    })
}

/// H¹ table at one mesh: rows follow `epsilons`, columns follow strategies.
pub fn mlsa_h1_table<const D: usize>(
    strategies: &[&str],
    epsilons: &[f64],
    cq: f64,
    cp: f64,
    samples: usize,
    rcond: f64,
    exec: &Exec,
) -> Result<Table> {
    let pres = strategies
        .iter()
        .map(|s| NeighborStrategy::<D>::named(s).map(|st| precompute(&st, cq, cp, rcond)))
        .collect::<Result<Vec<_>>>()?;
    let values = epsilons
        .iter()
        .map(|&eps| pres.iter().map(|pre| floor(m_lsa_h1(pre, eps, samples, exec))).collect())
        .collect();
    Ok(Table {
        corner: "eps\\strategy".into(),
        row_labels: epsilons.iter().map(|e| format!("{e:e}")).collect(),
        col_labels: strategies.iter().map(|s| s.to_string()).collect(),
        values,
    })
}

pub fn family(f: &[(f64, &str)]) -> Vec<(f64, String)> {
    f.iter().map(|(v, l)| (*v, l.to_string())).collect()
}
