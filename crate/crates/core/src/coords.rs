//! The p-, θ- and η-coordinate systems of a distribution on a poset.
//!
//! With `F_s(x) = [s ≤ x]` the log-probabilities expand over principal
//! ideals, `log p(x) = Σ_{s ≤ x} θ(s)`, and the expectation coordinates are
//! sums over principal filters, `η(s) = Σ_{x ≥ s} p(x)`. The bottom entry of
//! θ carries the normalizer: `θ(⊥) = log p(⊥) = −ψ`.
//!
//! Aggregation over `↓x` and `↑x` walks the cover graph with visited flags
//! keyed by the index of the element being computed, so each element costs
//! `O(|↓x|)` (resp. `O(|↑x|)`) even when the poset is not a lattice.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poset::{ElementId, Poset};

/// Probabilities below this are treated as zero.
pub const MIN_PROBABILITY: f64 = 1e-300;
/// Tolerance on `Σ p = 1` for a validated distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerance on `Σ p = 1` when reconstructing from θ or η.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// A strictly positive probability mass function on a poset.
#[derive(Debug, Clone)]
pub struct Distribution {
    poset: Arc<Poset>,
    p: Vec<f64>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        same_poset(&self.poset, &other.poset) && self.p == other.p
    }
}

pub(crate) fn same_poset(a: &Arc<Poset>, b: &Arc<Poset>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Distribution {
    /// `p` is indexed by canonical element order.
    pub fn new(poset: Arc<Poset>, p: Vec<f64>) -> Result<Self> {
        if p.len() != poset.len() {
            return Err(Error::LengthMismatch { expected: poset.len(), got: p.len() });
        }
        check_positive(&poset, &p)?;
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Distribution { poset, p })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(poset: Arc<Poset>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != poset.len() {
            return Err(Error::LengthMismatch { expected: poset.len(), got: weights.len() });
        }
        let total: f64 = weights.iter().sum();
        let p = weights.into_iter().map(|w| w / total).collect::<Vec<_>>();
        check_positive(&poset, &p)?;
        Ok(Distribution { poset, p })
    }

    pub fn uniform(poset: Arc<Poset>) -> Self {
        let n = poset.len();
        Distribution { poset, p: vec![1.0 / n as f64; n] }
    }

    /// Constructs without validation. Callers guarantee positivity and
    /// normalization up to rounding.
    pub(crate) fn from_parts(poset: Arc<Poset>, p: Vec<f64>) -> Self {
        Distribution { poset, p }
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn poset_arc(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn prob(&self, x: ElementId) -> f64 {
        self.p[x.index()]
    }

    pub fn theta(&self) -> ThetaCoords {
        theta_from_p(self)
    }

    pub fn eta(&self) -> EtaCoords {
        eta_from_p(self)
    }

    pub(crate) fn check_same_poset(&self, other: &Distribution) -> Result<()> {
        if same_poset(&self.poset, &other.poset) {
            Ok(())
        } else {
            Err(Error::PosetMismatch)
        }
    }
}

fn check_positive(poset: &Poset, p: &[f64]) -> Result<()> {
    for (x, &v) in poset.elements().zip(p) {
        // NaN fails the comparison as well.
        if !(v >= MIN_PROBABILITY) || !v.is_finite() {
            return Err(Error::NonPositiveProbability { label: poset.label(x).to_owned(), value: v });
        }
    }
    Ok(())
}

/// Natural parameters, including `θ(⊥) = −ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCoords {
    pub values: Vec<f64>,
}

impl ThetaCoords {
    pub fn get(&self, x: ElementId) -> f64 {
        self.values[x.index()]
    }

    /// The log-partition normalizer `ψ = −log p(⊥)`.
    pub fn psi(&self) -> f64 {
        -self.values[0]
    }
}

/// Expectation parameters `η(s) = Pr(X ≥ s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaCoords {
    pub values: Vec<f64>,
}

impl EtaCoords {
    pub fn get(&self, x: ElementId) -> f64 {
        self.values[x.index()]
    }
}

/// Sums `values` over every element reachable from `start` through `next`
/// (including the start points), skipping anything already flagged with
/// `mark`.
fn aggregate<'a>(
    start: &[usize],
    next: impl Fn(usize) -> &'a [usize],
    values: &[f64],
    flags: &mut [usize],
    mark: usize,
) -> f64 {
    let mut sum = 0.0;
    let mut stack: Vec<usize> = start.to_vec();
    while let Some(s) = stack.pop() {
        if flags[s] == mark {
            continue;
        }
        flags[s] = mark;
        sum += values[s];
        stack.extend_from_slice(next(s));
    }
    sum
}

/// `θ(x) = log p(x) − Σ_{s < x} θ(s)`, computed in topological order.
pub fn theta_from_p(d: &Distribution) -> ThetaCoords {
    let poset = d.poset();
    let n = poset.len();
    let mut theta = vec![0.0; n];
    let mut flags = vec![0usize; n];
    for x in 0..n {
        let lower = aggregate(
            poset.lower_cover_indices(x),
            |s| poset.lower_cover_indices(s),
            &theta,
            &mut flags,
            x + 1,
        );
        theta[x] = d.p[x].ln() - lower;
    }
    ThetaCoords { values: theta }
}

/// `η(s) = Σ_{x ≥ s} p(x)`, computed in reverse topological order.
pub fn eta_from_p(d: &Distribution) -> EtaCoords {
    let poset = d.poset();
    let n = poset.len();
    let mut eta = vec![0.0; n];
    let mut flags = vec![0usize; n];
    for x in (0..n).rev() {
        let upper = aggregate(
            poset.upper_cover_indices(x),
            |s| poset.upper_cover_indices(s),
            &d.p,
            &mut flags,
            x + 1,
        );
        eta[x] = d.p[x] + upper;
    }
    EtaCoords { values: eta }
}

/// `p(x) = exp(Σ_{s ≤ x} θ(s))`.
///
/// When `normalize` is set the result is rescaled to sum to one, which is
/// the same as re-deriving `θ(⊥)` from the other coordinates. Otherwise a
/// sum further than `1e-10` from one is an error.
pub fn p_from_theta(poset: &Arc<Poset>, theta: &ThetaCoords, normalize: bool) -> Result<Distribution> {
    let n = poset.len();
    if theta.values.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: theta.values.len() });
    }
    let mut flags = vec![0usize; n];
    let p: Vec<f64> = (0..n)
        .map(|x| {
            let lower = aggregate(
                poset.lower_cover_indices(x),
                |s| poset.lower_cover_indices(s),
                &theta.values,
                &mut flags,
                x + 1,
            );
            (theta.values[x] + lower).exp()
        })
        .collect();
    let sum: f64 = p.iter().sum();
    if normalize {
        return Distribution::normalized(poset.clone(), p);
    }
    if (sum - 1.0).abs() > RECONSTRUCTION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    check_positive(poset, &p)?;
    Ok(Distribution { poset: poset.clone(), p })
}

/// Inverts the η sums: `p(x) = η(x) − Σ_{y > x} p(y)` in reverse
/// topological order.
pub fn p_from_eta(poset: &Arc<Poset>, eta: &EtaCoords) -> Result<Distribution> {
    let n = poset.len();
    if eta.values.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: eta.values.len() });
    }
    if (eta.values[0] - 1.0).abs() > RECONSTRUCTION_TOL {
        return Err(Error::NotNormalized { sum: eta.values[0] });
    }
    let mut p = vec![0.0; n];
    let mut flags = vec![0usize; n];
    for x in (0..n).rev() {
        let upper = aggregate(
            poset.upper_cover_indices(x),
            |s| poset.upper_cover_indices(s),
            &p,
            &mut flags,
            x + 1,
        );
        let value = eta.values[x] - upper;
        if !(value >= MIN_PROBABILITY) {
            return Err(Error::InconsistentEta {
                label: poset.label(ElementId(x)).to_owned(),
                value,
            });
        }
        p[x] = value;
    }
    Ok(Distribution { poset: poset.clone(), p })
}

/// Largest poset accepted by [`orthogonality_matrix`].
pub const ORTHOGONALITY_MAX_SIZE: usize = 6;
const FD_STEP: f64 = 1e-5;

/// Finite-difference estimate of `E[∂log p/∂θ(s) · ∂log p/∂η(s′)]` for all
/// `s, s′ ∈ S⁺`. Rows are indexed by `s`, columns by `s′`, both in canonical
/// order without the bottom.
///
/// Each θ perturbation re-derives `θ(⊥)` by normalization and each η
/// perturbation keeps `η(⊥) = 1`.
pub fn orthogonality_matrix(d: &Distribution) -> Result<Vec<Vec<f64>>> {
    let poset = d.poset_arc();
    let n = poset.len();
    if n > ORTHOGONALITY_MAX_SIZE {
        return Err(Error::PosetTooLarge { size: n, max: ORTHOGONALITY_MAX_SIZE });
    }
    let theta = d.theta();
    let eta = d.eta();

    let log_p_theta = |s: usize, h: f64| -> Result<Vec<f64>> {
        let mut t = theta.clone();
        t.values[s] += h;
        Ok(p_from_theta(poset, &t, true)?.p.iter().map(|v| v.ln()).collect())
    };
    let log_p_eta = |s: usize, h: f64| -> Result<Vec<f64>> {
        let mut e = eta.clone();
        e.values[s] += h;
        Ok(p_from_eta(poset, &e)?.p.iter().map(|v| v.ln()).collect())
    };
    let central = |plus: Vec<f64>, minus: Vec<f64>| -> Vec<f64> {
        plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect()
    };

    let mut d_theta = Vec::with_capacity(n - 1);
    let mut d_eta = Vec::with_capacity(n - 1);
    for s in 1..n {
        d_theta.push(central(log_p_theta(s, FD_STEP)?, log_p_theta(s, -FD_STEP)?));
        d_eta.push(central(log_p_eta(s, FD_STEP)?, log_p_eta(s, -FD_STEP)?));
    }
    Ok(d_theta
        .iter()
        .map(|dt| {
            d_eta
                .iter()
                .map(|de| (0..n).map(|x| d.p[x] * dt[x] * de[x]).sum())
                .collect()
        })
        .collect())
}

/// Result of [`check_orthogonality`].
#[derive(Debug, Clone)]
pub struct OrthogonalityCheck {
    pub matrix: Vec<Vec<f64>>,
    /// Largest absolute deviation from the identity.
    pub max_deviation: f64,
    pub within_tolerance: bool,
}

pub fn check_orthogonality(d: &Distribution, tol: f64) -> Result<OrthogonalityCheck> {
    let matrix = orthogonality_matrix(d)?;
    let max_deviation = matrix
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        })
        .fold(0.0, f64::max);
    Ok(OrthogonalityCheck { matrix, max_deviation, within_tolerance: max_deviation <= tol })
}
