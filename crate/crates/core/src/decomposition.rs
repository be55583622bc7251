//! KL divergence and its orthogonal decompositions.
//!
//! All quantities are in nats.

use crate::coords::Distribution;
use crate::error::{Error, Result};
use crate::par::{self, compensated_sum, Parallelism};
use crate::poset::{CoverEdge, CoveringGraph, ElementId};
use crate::projection::{e_project_knockdown, mix, SolverConfig, SolverStats, Subset};

/// `D_KL(p, q) = Σ p(x) log(p(x) / q(x))`.
pub fn kl(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.check_same_poset(q)?;
    Ok(kl_raw(p.probs(), q.probs()))
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    compensated_sum(p.iter().zip(q).map(|(a, b)| a * (a / b).ln()))
}

/// Shannon entropy in nats.
pub fn entropy(p: &Distribution) -> f64 {
    -compensated_sum(p.probs().iter().map(|v| v * v.ln()))
}

/// The two legs of a Pythagorean split through the mixed distribution.
#[derive(Debug, Clone)]
pub struct PythagorasSplit {
    /// `D_KL(p, r)`.
    pub to_mixed: f64,
    /// `D_KL(r, q)`.
    pub from_mixed: f64,
    pub mixed: Distribution,
    pub stats: SolverStats,
}

impl PythagorasSplit {
    pub fn total(&self) -> f64 {
        self.to_mixed + self.from_mixed
    }
}

/// `D_KL(p, q) = D_KL(p, r) + D_KL(r, q)` with `r` the mixed distribution of
/// `(p, q)` with respect to `I`.
pub fn pythagoras_split(p: &Distribution, q: &Distribution, subset: &Subset, cfg: &SolverConfig) -> Result<PythagorasSplit> {
    let (r, stats) = mix(p, q, subset, cfg)?;
    Ok(PythagorasSplit {
        to_mixed: kl_raw(p.probs(), r.probs()),
        from_mixed: kl_raw(r.probs(), q.probs()),
        mixed: r,
        stats,
    })
}

/// One step `D_KL(r_{i−1}, r_i)` of a hierarchical decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerm {
    pub from: Subset,
    pub to: Subset,
    pub kl: f64,
}

/// Checks `∅ = I₀ ⊆ I₁ ⊆ … ⊆ I_k = S⁺`.
pub fn validate_chain(poset: &crate::Poset, chain: &[Subset]) -> Result<()> {
    let (Some(first), Some(last)) = (chain.first(), chain.last()) else {
        return Err(Error::NotAChain("empty chain".into()));
    };
    if chain.len() < 2 {
        return Err(Error::NotAChain("a chain needs at least two levels".into()));
    }
    if !first.is_empty() {
        return Err(Error::NotAChain("first level must be ∅".into()));
    }
    if *last != Subset::all(poset) {
        return Err(Error::NotAChain("last level must be S⁺".into()));
    }
    for (i, w) in chain.windows(2).enumerate() {
        if !w[0].is_subset_of(&w[1]) {
            return Err(Error::NotAChain(format!("level {i} is not contained in level {}", i + 1)));
        }
    }
    Ok(())
}

/// Hierarchical decomposition of `D_KL(p, q)` along a chain of subsets.
/// The levels are projected independently, so they can run in parallel.
pub fn chain_decompose(
    p: &Distribution,
    q: &Distribution,
    chain: &[Subset],
    cfg: &SolverConfig,
    par: Parallelism,
) -> Result<Vec<DecompositionTerm>> {
    p.check_same_poset(q)?;
    validate_chain(p.poset(), chain)?;
    let last = chain.len() - 1;
    let indices: Vec<usize> = (0..chain.len()).collect();
    let mixed = par::map(&indices, par, |&i| -> Result<Distribution> {
        match i {
            0 => Ok(p.clone()),
            i if i == last => Ok(q.clone()),
            i => mix(p, q, &chain[i], cfg).map(|(r, _)| r),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(chain
        .windows(2)
        .zip(mixed.windows(2))
        .map(|(levels, rs)| DecompositionTerm {
            from: levels[0].clone(),
            to: levels[1].clone(),
            kl: kl_raw(rs[0].probs(), rs[1].probs()),
        })
        .collect())
}

/// Splits `log|S| − H(X)` into the contribution of `I` and the rest:
/// returns `(D_KL(p, r), D_KL(r, p₀))` with `r` the knock-down of `I`.
pub fn entropy_decompose(p: &Distribution, subset: &Subset, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let (r, _) = e_project_knockdown(p, subset, cfg)?;
    let uniform = 1.0 / p.poset().len() as f64;
    let to_uniform = compensated_sum(r.probs().iter().map(|a| a * (a / uniform).ln()));
    Ok((kl_raw(p.probs(), r.probs()), to_uniform))
}

/// `D_KL(p, p_I)` where `p_I` knocks down every θ in `I`.
pub fn information_gain(p: &Distribution, subset: &Subset, cfg: &SolverConfig) -> Result<f64> {
    let (r, _) = e_project_knockdown(p, subset, cfg)?;
    Ok(kl_raw(p.probs(), r.probs()))
}

/// Knock-down projection of the principal filter of every element,
/// `p_{↑x}`. For the bottom the filter is all of `S⁺`.
pub fn filter_projections(p: &Distribution, cfg: &SolverConfig, par: Parallelism) -> Result<Vec<Distribution>> {
    let poset = p.poset();
    let elements: Vec<ElementId> = poset.elements().collect();
    par::map(&elements, par, |&x| {
        let subset = Subset::filter_of(poset, x)?;
        e_project_knockdown(p, &subset, cfg).map(|(r, _)| r)
    })
    .into_iter()
    .collect()
}

/// `v(x) = log|S| − D_KL(p, p_{↑x})`, indexed by canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Subvaluation {
    pub values: Vec<f64>,
}

impl Subvaluation {
    pub fn get(&self, x: ElementId) -> f64 {
        self.values[x.index()]
    }

    /// `d_v(x, y) = 2 v(x ∨ y) − v(x) − v(y)`; defined only when the join exists.
    pub fn distance(&self, poset: &crate::Poset, x: ElementId, y: ElementId) -> Result<f64> {
        let join = poset
            .join(x, y)?
            .ok_or_else(|| Error::JoinDoesNotExist(poset.label(x).to_owned(), poset.label(y).to_owned()))?;
        Ok(2.0 * self.get(join) - (self.get(x) + self.get(y)))
    }
}

pub fn subvaluation(p: &Distribution, cfg: &SolverConfig, par: Parallelism) -> Result<Subvaluation> {
    let projections = filter_projections(p, cfg, par)?;
    Ok(subvaluation_from(p, &projections))
}

fn subvaluation_from(p: &Distribution, projections: &[Distribution]) -> Subvaluation {
    let log_n = (p.poset().len() as f64).ln();
    Subvaluation {
        values: projections.iter().map(|r| log_n - kl_raw(p.probs(), r.probs())).collect(),
    }
}

/// `d_v(x, y)` for a single pair; computes only the three projections needed.
pub fn poset_distance(p: &Distribution, x: ElementId, y: ElementId, cfg: &SolverConfig) -> Result<f64> {
    let poset = p.poset();
    let join = poset
        .join(x, y)?
        .ok_or_else(|| Error::JoinDoesNotExist(poset.label(x).to_owned(), poset.label(y).to_owned()))?;
    let log_n = (poset.len() as f64).ln();
    let v = |e: ElementId| -> Result<f64> {
        let subset = Subset::filter_of(poset, e)?;
        Ok(log_n - information_gain(p, &subset, cfg)?)
    };
    Ok(2.0 * v(join)? - v(x)? - v(y)?)
}

/// Covering graph with edge `y ⋖ x` weighted by `D_KL(p_{↑x}, p_{↑y})`.
pub fn weighted_covering_graph(p: &Distribution, cfg: &SolverConfig, par: Parallelism) -> Result<CoveringGraph> {
    let projections = filter_projections(p, cfg, par)?;
    Ok(weighted_graph_from(p, &projections))
}

fn weighted_graph_from(p: &Distribution, projections: &[Distribution]) -> CoveringGraph {
    let mut graph = p.poset().covering_graph();
    for CoverEdge { lower, upper, weight } in &mut graph.edges {
        *weight = Some(kl_raw(projections[upper.index()].probs(), projections[lower.index()].probs()));
    }
    graph
}

/// Subvaluation, weighted covering graph and all defined pairwise distances
/// from one batch of filter projections.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub subvaluation: Subvaluation,
    pub graph: CoveringGraph,
    /// `(x, y, d_v(x, y))` for `x < y` in canonical order with an existing join.
    pub distances: Vec<(ElementId, ElementId, f64)>,
}

pub fn metric_report(p: &Distribution, cfg: &SolverConfig, par: Parallelism) -> Result<MetricReport> {
    let projections = filter_projections(p, cfg, par)?;
    let subvaluation = subvaluation_from(p, &projections);
    let graph = weighted_graph_from(p, &projections);
    let poset = p.poset();
    let mut distances = Vec::new();
    for x in poset.elements() {
        for y in poset.elements().skip(x.index() + 1) {
            if let Ok(d) = subvaluation.distance(poset, x, y) {
                distances.push((x, y, d));
            }
        }
    }
    Ok(MetricReport { subvaluation, graph, distances })
}
