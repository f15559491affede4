//! On-disk formats: the params JSON file and the steady-state JSON report.

use crate::dynamics::{ChainParams, StateVector};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::steady::{self, SteadyState};
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A rate entry in the params file: a single number broadcasts to every
/// node, an array gives per-node values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn broadcast(&self, n: usize, name: &str, file: &str) -> Result<Array1<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(Array1::from_elem(n, *v)),
            ScalarOrVec::Vec(vs) => {
                if vs.len() != n {
                    return Err(Error::Parse {
                        file: file.to_string(),
                        line: 0,
                        msg: format!("{name} has {} entries but the graph has {n} nodes", vs.len()),
                    });
                }
                Ok(Array1::from_vec(vs.clone()))
            }
        }
    }
}

/// The params file: `{"alpha": ..., "beta": ..., "gamma01": x, "gamma10": y}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub alpha: ScalarOrVec,
    pub beta: ScalarOrVec,
    pub gamma01: f64,
    pub gamma10: f64,
}

impl ParamsFile {
    pub fn into_params(self, n: usize, file: &str) -> Result<ChainParams> {
        let alpha = self.alpha.broadcast(n, "alpha", file)?;
        let beta = self.beta.broadcast(n, "beta", file)?;
        ChainParams::new(alpha, beta, self.gamma01, self.gamma10).map_err(|e| Error::Parse {
            file: file.to_string(),
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn from_params(params: &ChainParams) -> Self {
        let collapse = |v: &Array1<f64>| {
            let first = v[0];
            if v.iter().all(|&x| x == first) {
                ScalarOrVec::Scalar(first)
            } else {
                ScalarOrVec::Vec(v.to_vec())
            }
        };
        ParamsFile {
            alpha: collapse(params.alpha()),
            beta: collapse(params.beta()),
            gamma01: params.gamma01(),
            gamma10: params.gamma10(),
        }
    }
}

/// Loads and broadcasts a params file against a graph of `n` nodes.
pub fn load_params(path: &Path, n: usize) -> Result<ChainParams> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let file: ParamsFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: name.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    file.into_params(n, &name)
}

pub fn save_params(path: &Path, params: &ChainParams) -> Result<()> {
    let file = ParamsFile::from_params(params);
    std::fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

/// Extremum sign data inside the steady report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremumReport {
    pub node_max: usize,
    pub node_min: usize,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    #[serde(rename = "R_min")]
    pub r_min: f64,
}

/// The steady-state JSON report written by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyReport {
    pub p_bar: Vec<f64>,
    pub residual: f64,
    pub method: String,
    pub iterations: usize,
    pub lambda1: Option<f64>,
    pub variance: f64,
    pub variance_bound: Option<f64>,
    pub extremum_check: ExtremumReport,
}

impl SteadyReport {
    pub fn build(g: &WeightedGraph, params: &ChainParams, s: &SteadyState) -> Self {
        let lambda1 = g.lambda_1().ok();
        let variance_bound = steady::variance_bound_value(g, params).ok();
        let ex = steady::extremum_check(g, params, s);
        SteadyReport {
            p_bar: s.p_bar().as_slice().to_vec(),
            residual: s.residual(),
            method: s.method().as_str().to_string(),
            iterations: s.iterations(),
            lambda1,
            variance: steady::variance_of(s.p_bar()),
            variance_bound,
            extremum_check: ExtremumReport {
                node_max: ex.node_max,
                node_min: ex.node_min,
                r_max: ex.r_max,
                r_min: ex.r_min,
            },
        }
    }

    /// Reconstructs the reference state carried by a report, for use as a
    /// simulation reference.
    pub fn to_steady_state(&self) -> Result<SteadyState> {
        let p = StateVector::from_slice(&self.p_bar)?;
        let method = match self.method.as_str() {
            "ode" => steady::Method::Ode,
            "newton" => steady::Method::Newton,
            "iterate" => steady::Method::Iterate,
            _ => steady::Method::ClosedForm,
        };
        Ok(SteadyState::new(p, self.residual, method, self.iterations))
    }
}

pub fn load_steady_report(path: &Path) -> Result<SteadyReport> {
    let text = std::fs::read_to_string(path)?;
    let report: SteadyReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    Ok(report)
}
