//! Mutual information between a poset-valued `X` and an unstructured `Y`,
//! refined over subsets of `S⁺`.
//!
//! `MI(X, Y) = Σ_y p_Y(y) D_KL(p|_y, p)`, and the refined quantity
//! `RI(I, J) = Σ_y p_Y(y) D_KL(p|_{yI}, p|_{yJ})` uses the mixed distribution
//! `p|_{yI}` of `(p|_y, p)` with respect to `I`. Along nested subsets the
//! refined terms add up to the total.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coords::{Distribution, NORMALIZATION_TOL};
use crate::decomposition::{kl_raw, validate_chain};
use crate::error::{Error, Result};
use crate::par::{self, compensated_sum, Parallelism};
use crate::poset::{Poset, PosetJson};
use crate::projection::{mix, SolverConfig, Subset};

/// Additive smoothing used by [`JointTable::smoothed`].
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Joint probabilities `Pr(X = x, Y = y)`; rows are indexed by `Y`, columns
/// by canonical element order of the poset.
#[derive(Debug, Clone)]
pub struct JointTable {
    poset: Arc<Poset>,
    y_labels: Vec<String>,
    joint: Vec<Vec<f64>>,
    y_marginal: Vec<f64>,
    x_marginal: Distribution,
    conditionals: Vec<Distribution>,
}

impl JointTable {
    pub fn new(poset: Arc<Poset>, y_labels: Vec<String>, joint: Vec<Vec<f64>>) -> Result<Self> {
        if y_labels.len() != joint.len() {
            return Err(Error::InvalidJointTable(format!(
                "{} labels for {} rows",
                y_labels.len(),
                joint.len()
            )));
        }
        if joint.is_empty() {
            return Err(Error::InvalidJointTable("no rows".into()));
        }
        for (label, row) in y_labels.iter().zip(&joint) {
            if row.len() != poset.len() {
                return Err(Error::InvalidJointTable(format!(
                    "row `{label}` has {} entries, poset has {} elements",
                    row.len(),
                    poset.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidJointTable(format!("row `{label}` has non-positive entry {v}")));
            }
        }
        let total = compensated_sum(joint.iter().flatten().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidJointTable(format!("entries sum to {total}")));
        }
        let n = poset.len();
        let y_marginal: Vec<f64> = joint.iter().map(|row| compensated_sum(row.iter().copied())).collect();
        let x_weights: Vec<f64> = (0..n).map(|x| compensated_sum(joint.iter().map(|row| row[x]))).collect();
        let x_marginal = Distribution::normalized(poset.clone(), x_weights)?;
        let conditionals = joint
            .iter()
            .map(|row| Distribution::normalized(poset.clone(), row.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(JointTable { poset, y_labels, joint, y_marginal, x_marginal, conditionals })
    }

    /// Adds [`SMOOTHING_EPSILON`] to every cell and renormalizes, which admits
    /// empirical tables with zero cells.
    pub fn smoothed(poset: Arc<Poset>, y_labels: Vec<String>, joint: Vec<Vec<f64>>) -> Result<Self> {
        let shifted: Vec<Vec<f64>> = joint
            .into_iter()
            .map(|row| row.into_iter().map(|v| v + SMOOTHING_EPSILON).collect())
            .collect();
        let total = compensated_sum(shifted.iter().flatten().copied());
        let scaled = shifted
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / total).collect())
            .collect();
        JointTable::new(poset, y_labels, scaled)
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn joint(&self) -> &[Vec<f64>] {
        &self.joint
    }

    pub fn y_marginal(&self) -> &[f64] {
        &self.y_marginal
    }

    /// Marginal distribution `p` of `X`.
    pub fn x_marginal(&self) -> &Distribution {
        &self.x_marginal
    }

    /// `p|_y` for each row.
    pub fn conditionals(&self) -> &[Distribution] {
        &self.conditionals
    }

    /// `p|_{yI}`: the mixed distribution of `(p|_y, p)` with respect to `I`.
    pub fn mixed_conditional(&self, y: usize, subset: &Subset, cfg: &SolverConfig) -> Result<Distribution> {
        let cond = &self.conditionals[y];
        if subset.is_empty() {
            return Ok(cond.clone());
        }
        if subset.len() == self.poset.len() - 1 {
            return Ok(self.x_marginal.clone());
        }
        mix(cond, &self.x_marginal, subset, cfg).map(|(r, _)| r)
    }

    pub fn to_json(&self) -> JointTableJson {
        JointTableJson {
            poset: self.poset.to_json(),
            y_labels: self.y_labels.clone(),
            joint: self.joint.clone(),
        }
    }
}

/// `{ "poset": ..., "y_labels": [...], "joint": [[...], ...] }`. Each row is
/// one value of `Y`; columns follow the order of `poset.elements`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTableJson {
    pub poset: PosetJson,
    pub y_labels: Vec<String>,
    pub joint: Vec<Vec<f64>>,
}

impl JointTableJson {
    pub fn to_table(&self, smoothing: bool) -> Result<JointTable> {
        let poset = Arc::new(Poset::from_json(&self.poset)?);
        let columns = self
            .poset
            .elements
            .iter()
            .map(|l| poset.id(l).map(|x| x.index()))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(self.joint.len());
        for (label, row) in self.y_labels.iter().zip(&self.joint) {
            if row.len() != columns.len() {
                return Err(Error::InvalidJointTable(format!(
                    "row `{label}` has {} entries, poset has {} elements",
                    row.len(),
                    columns.len()
                )));
            }
            let mut reordered = vec![0.0; columns.len()];
            for (&col, &v) in columns.iter().zip(row) {
                reordered[col] = v;
            }
            rows.push(reordered);
        }
        if smoothing {
            JointTable::smoothed(poset, self.y_labels.clone(), rows)
        } else {
            JointTable::new(poset, self.y_labels.clone(), rows)
        }
    }
}

/// `MI(X, Y) = Σ_y p_Y(y) D_KL(p|_y, p)`.
pub fn mutual_information(t: &JointTable) -> f64 {
    compensated_sum(
        t.conditionals
            .iter()
            .zip(&t.y_marginal)
            .map(|(cond, w)| w * kl_raw(cond.probs(), t.x_marginal.probs())),
    )
}

/// `RI(I, J)` between two subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedMI {
    pub from: Subset,
    pub to: Subset,
    pub value: f64,
}

pub fn refined_mi(t: &JointTable, from: &Subset, to: &Subset, cfg: &SolverConfig, par: Parallelism) -> Result<RefinedMI> {
    let rows: Vec<usize> = (0..t.y_labels.len()).collect();
    let pairs = par::map(&rows, par, |&y| -> Result<f64> {
        let a = t.mixed_conditional(y, from, cfg)?;
        let b = t.mixed_conditional(y, to, cfg)?;
        Ok(kl_raw(a.probs(), b.probs()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let value = compensated_sum(pairs.iter().zip(&t.y_marginal).map(|(k, w)| w * k));
    Ok(RefinedMI { from: from.clone(), to: to.clone(), value })
}

/// `RI(I_{i−1}, I_i)` along `∅ = I₀ ⊆ … ⊆ I_k = S⁺`; the terms sum to MI.
pub fn mi_chain_decompose(t: &JointTable, chain: &[Subset], cfg: &SolverConfig, par: Parallelism) -> Result<Vec<RefinedMI>> {
    validate_chain(&t.poset, chain)?;
    let ny = t.y_labels.len();
    let jobs: Vec<(usize, usize)> = (0..chain.len()).flat_map(|l| (0..ny).map(move |y| (l, y))).collect();
    let mixed = par::map(&jobs, par, |&(l, y)| t.mixed_conditional(y, &chain[l], cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let at = |l: usize, y: usize| &mixed[l * ny + y];
    Ok((1..chain.len())
        .map(|l| RefinedMI {
            from: chain[l - 1].clone(),
            to: chain[l].clone(),
            value: compensated_sum(
                (0..ny).map(|y| t.y_marginal[y] * kl_raw(at(l - 1, y).probs(), at(l, y).probs())),
            ),
        })
        .collect())
}
