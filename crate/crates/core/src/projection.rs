//! Mixed distributions: match `η_p` off a subset `I` and `θ_q` on `I`.
//!
//! For a single target `x*` every element outside `↓x*` keeps its
//! probability, and the η constraints inside `↓x*` pin each `r(x)` through
//! the back-substitution `r(x) = p(x) + Σ_{s ∈ ↓x*, s > x} (p(s) − r(s))`.
//! That recursion is linear in `r(x*)`, so it is run once with a unit
//! difference at `x*` to obtain a coefficient per element of `↓x*`. The same
//! coefficients are the Möbius values `μ(s, x*)`, which also give
//! `θ_r(x*) = Σ_s μ(s, x*) log r(s)`. A trial value of `r(x*)` then costs
//! `O(|↓x*|)` to evaluate.
//!
//! Several targets are handled by sweeping the singleton update over `I`
//! until every θ constraint holds.

use serde::{Deserialize, Serialize};

use crate::coords::{eta_from_p, Distribution};
use crate::error::{Error, Result};
use crate::poset::{ElementId, Poset};

/// Solver limits and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Outer-loop stopping threshold on `max_{x∈I} |θ_r(x) − θ_q(x)|`.
    pub theta_tol: f64,
    /// Reported η residual threshold on `S⁺ ∖ I`; exceeded only by rounding.
    pub eta_tol: f64,
    /// Iteration cap for bracketing and for the root refinement, each.
    pub max_bisect: usize,
    /// Cap on full sweeps over `I`.
    pub max_outer: usize,
    /// Grid points of the fallback bracket scan.
    pub bracket_grid: usize,
    /// Target residual of a single one-dimensional solve.
    pub root_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta_tol: 1e-9,
            eta_tol: 1e-9,
            max_bisect: 200,
            max_outer: 10_000,
            bracket_grid: 10_000,
            root_tol: 1e-12,
        }
    }
}

/// A subset of `S⁺` (the bottom is never allowed), kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Subset(Vec<ElementId>);

impl Subset {
    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    /// All of `S⁺`.
    pub fn all(poset: &Poset) -> Self {
        Subset(poset.non_bottom().collect())
    }

    pub fn new(poset: &Poset, elements: impl IntoIterator<Item = ElementId>) -> Result<Self> {
        let mut v: Vec<ElementId> = elements.into_iter().collect();
        for &x in &v {
            poset.element(x.index())?;
            if x == poset.bottom() {
                return Err(Error::InvalidSubset(format!(
                    "bottom element `{}` cannot be constrained",
                    poset.label(x)
                )));
            }
        }
        v.sort_unstable();
        v.dedup();
        Ok(Subset(v))
    }

    pub fn from_labels<S: AsRef<str>>(poset: &Poset, labels: &[S]) -> Result<Self> {
        let ids = labels.iter().map(|l| poset.id(l.as_ref())).collect::<Result<Vec<_>>>()?;
        Subset::new(poset, ids)
    }

    /// `↑x` without the bottom.
    pub fn filter_of(poset: &Poset, x: ElementId) -> Result<Self> {
        Subset::new(poset, poset.up_set(x)?.into_iter().filter(|&s| s != poset.bottom()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: ElementId) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    pub fn union(&self, other: &Subset) -> Subset {
        let mut v: Vec<ElementId> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        Subset(v)
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&x| !other.contains(x)).collect())
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&x| other.contains(x)).collect())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = ElementId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[ElementId] {
        &self.0
    }

    pub fn labels<'a>(&self, poset: &'a Poset) -> Vec<&'a str> {
        self.0.iter().map(|&x| poset.label(x)).collect()
    }

    fn check_in(&self, poset: &Poset) -> Result<()> {
        match self.0.last() {
            Some(x) if x.index() >= poset.len() => Err(Error::UnknownElement(x.index())),
            _ => Ok(()),
        }
    }
}

/// Iteration counts of a mixed-distribution solve.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SolverStats {
    /// Full sweeps over `I`.
    pub outer_iterations: usize,
    /// One-dimensional solver iterations summed over all sweeps, per target.
    pub per_target_iterations: Vec<(ElementId, usize)>,
    /// Largest θ residual on `I` or η residual off `I` at exit.
    pub final_residual: f64,
}

/// Back-substitution coefficients for one target.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub x: usize,
    /// `(s, μ(s, x))` for `s ∈ ↓x` with nonzero coefficient, ascending.
    pub coeffs: Vec<(usize, f64)>,
}

impl Target {
    pub fn new(poset: &Poset, x: usize) -> Target {
        let members: Vec<usize> = poset.below_bits(x).iter().collect();
        let n = poset.len();
        let mut diff = vec![0.0; n];
        let mut flags = vec![0usize; n];
        diff[x] = 1.0;
        // Reverse topological order over ↓x, skipping x itself.
        for &s in members.iter().rev().skip(1) {
            let above = aggregate_diff(poset, x, poset.upper_cover_indices(s), &diff, &mut flags, s + 1);
            diff[s] = -above;
        }
        let coeffs = members
            .into_iter()
            .filter(|&s| diff[s] != 0.0)
            .map(|s| (s, diff[s]))
            .collect();
        Target { x, coeffs }
    }

    /// `θ_r(x) = Σ_s μ(s, x) log r(s)`.
    pub fn theta(&self, r: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(s, c)| c * r[s].ln()).sum()
    }
}

/// Sums `diff` over everything reachable upward from `start` that stays
/// inside `↓top`, visiting each element once per `mark`.
fn aggregate_diff(
    poset: &Poset,
    top: usize,
    start: &[usize],
    diff: &[f64],
    flags: &mut [usize],
    mark: usize,
) -> f64 {
    let mut sum = 0.0;
    let mut stack = start.to_vec();
    while let Some(s) = stack.pop() {
        if flags[s] == mark || !poset.le(s, top) {
            continue;
        }
        flags[s] = mark;
        sum += diff[s];
        stack.extend_from_slice(poset.upper_cover_indices(s));
    }
    sum
}

struct RootSolve {
    delta: f64,
    iterations: usize,
}

/// Finds `δ` with `Σ_s c_s log(r_s + c_s δ) = target`. The left side is
/// strictly increasing in `δ` on the interval where every term stays positive.
fn solve_singleton(
    poset: &Poset,
    t: &Target,
    r: &[f64],
    target: f64,
    cfg: &SolverConfig,
) -> Result<RootSolve> {
    let eval = |delta: f64| -> Option<(f64, f64)> {
        let mut f = -target;
        let mut df = 0.0;
        for &(s, c) in &t.coeffs {
            let v = r[s] + c * delta;
            if !(v > 0.0) {
                return None;
            }
            f += c * v.ln();
            df += c * c / v;
        }
        Some((f, df))
    };

    // Feasible interval for δ.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for &(s, c) in &t.coeffs {
        if c > 0.0 {
            lo = lo.max(-r[s] / c);
        } else {
            hi = hi.min(r[s] / -c);
        }
    }

    let (f0, _) = eval(0.0).ok_or_else(|| Error::NoFeasibleBracket(poset.label(ElementId(t.x)).to_owned()))?;
    if f0.abs() <= cfg.root_tol {
        return Ok(RootSolve { delta: 0.0, iterations: 0 });
    }

    // Geometric bracketing on r(x*): double upward or halve downward,
    // never stepping past the feasible boundary.
    let t0 = r[t.x];
    let mut iterations = 0;
    let mut inner = 0.0;
    let mut bracket = None;
    while iterations < cfg.max_bisect {
        iterations += 1;
        let current = t0 + inner;
        let candidate = if f0 < 0.0 {
            (2.0 * current - t0).min(0.5 * (inner + hi))
        } else {
            (0.5 * current - t0).max(0.5 * (inner + lo))
        };
        match eval(candidate) {
            Some((f, _)) if f.abs() <= cfg.root_tol => return Ok(RootSolve { delta: candidate, iterations }),
            Some((f, _)) if (f > 0.0) == (f0 < 0.0) => {
                bracket = Some(if f0 < 0.0 { (inner, candidate) } else { (candidate, inner) });
                break;
            }
            Some(_) => inner = candidate,
            None => break,
        }
    }

    let (mut a, mut b) = match bracket {
        Some(ab) => ab,
        None => grid_bracket(&eval, lo, hi, cfg.bracket_grid)
            .ok_or_else(|| Error::NoFeasibleBracket(poset.label(ElementId(t.x)).to_owned()))?,
    };

    // Newton steps safeguarded by bisection inside [a, b], f(a) < 0 < f(b).
    let mut x = 0.5 * (a + b);
    for _ in 0..cfg.max_bisect {
        iterations += 1;
        let Some((f, df)) = eval(x) else {
            return Err(Error::NoFeasibleBracket(poset.label(ElementId(t.x)).to_owned()));
        };
        if f.abs() <= cfg.root_tol {
            return Ok(RootSolve { delta: x, iterations });
        }
        if f < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let width_tol = 4.0 * f64::EPSILON * (t0 + x).abs().max(f64::MIN_POSITIVE);
        if b - a <= width_tol {
            return Ok(RootSolve { delta: x, iterations });
        }
        let newton = x - f / df;
        x = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
    }
    Err(Error::MaxIterations { element: poset.label(ElementId(t.x)).to_owned(), iterations })
}

fn grid_bracket(
    eval: &impl Fn(f64) -> Option<(f64, f64)>,
    lo: f64,
    hi: f64,
    points: usize,
) -> Option<(f64, f64)> {
    if !lo.is_finite() || !hi.is_finite() || points < 2 {
        return None;
    }
    let step = (hi - lo) / (points + 1) as f64;
    let mut prev: Option<(f64, f64)> = None;
    for k in 1..=points {
        let x = lo + step * k as f64;
        let Some((f, _)) = eval(x) else { continue };
        if let Some((px, pf)) = prev {
            if pf < 0.0 && f > 0.0 {
                return Some((px, x));
            }
        }
        prev = Some((x, f));
    }
    None
}

/// Applies the singleton update for `t` in place.
fn apply(t: &Target, r: &mut [f64], delta: f64) {
    for &(s, c) in &t.coeffs {
        r[s] += c * delta;
    }
}

/// Computes the mixed distribution of `p` with θ targets, sweeping in the
/// given order. `observer` sees `r` after every singleton update.
pub(crate) fn solve_mixed(
    p: &Distribution,
    sweep: &[(usize, f64)],
    cfg: &SolverConfig,
    mut observer: impl FnMut(&[f64]),
) -> Result<(Distribution, SolverStats)> {
    let poset = p.poset();
    let targets: Vec<Target> = sweep.iter().map(|&(x, _)| Target::new(poset, x)).collect();
    let mut r = p.probs().to_vec();
    let mut iterations = vec![0usize; sweep.len()];

    let residual = |r: &[f64]| -> f64 {
        targets
            .iter()
            .zip(sweep)
            .map(|(t, &(_, goal))| (t.theta(r) - goal).abs())
            .fold(0.0, f64::max)
    };

    let mut outer = 0;
    let mut theta_residual = residual(&r);
    while theta_residual >= cfg.theta_tol {
        if outer >= cfg.max_outer {
            return Err(Error::MaxOuterIterations { iterations: outer, residual: theta_residual });
        }
        outer += 1;
        for (k, (t, &(_, goal))) in targets.iter().zip(sweep).enumerate() {
            let solve = solve_singleton(poset, t, &r, goal, cfg)?;
            iterations[k] += solve.iterations;
            apply(t, &mut r, solve.delta);
            observer(&r);
        }
        theta_residual = residual(&r);
    }

    let r = Distribution::from_parts(p.poset_arc().clone(), r);
    let eta_residual = eta_residual(p, &r, sweep);
    let mut per_target: Vec<(ElementId, usize)> =
        sweep.iter().zip(iterations).map(|(&(x, _), n)| (ElementId(x), n)).collect();
    per_target.sort_by_key(|&(x, _)| x);
    Ok((
        r,
        SolverStats {
            outer_iterations: outer,
            per_target_iterations: per_target,
            final_residual: theta_residual.max(eta_residual),
        },
    ))
}

fn eta_residual(p: &Distribution, r: &Distribution, sweep: &[(usize, f64)]) -> f64 {
    if sweep.is_empty() {
        return 0.0;
    }
    let (ep, er) = (eta_from_p(p), eta_from_p(r));
    (1..p.poset().len())
        .filter(|x| !sweep.iter().any(|&(s, _)| s == *x))
        .map(|x| (ep.values[x] - er.values[x]).abs())
        .fold(0.0, f64::max)
}

fn theta_targets(q: &Distribution, order: &[ElementId]) -> Vec<(usize, f64)> {
    order
        .iter()
        .map(|&x| (x.index(), Target::new(q.poset(), x.index()).theta(q.probs())))
        .collect()
}

/// The mixed distribution of `(p, q)` with respect to a single element.
pub fn mix_singleton(
    p: &Distribution,
    q: &Distribution,
    xstar: ElementId,
    cfg: &SolverConfig,
) -> Result<(Distribution, SolverStats)> {
    let subset = Subset::new(p.poset(), [xstar])?;
    mix(p, q, &subset, cfg)
}

/// The mixed distribution `r` of `(p, q)` with respect to `I`:
/// `η_r = η_p` on `S⁺ ∖ I` and `θ_r = θ_q` on `I`.
pub fn mix(p: &Distribution, q: &Distribution, subset: &Subset, cfg: &SolverConfig) -> Result<(Distribution, SolverStats)> {
    mix_ordered(p, q, subset.as_slice(), cfg)
}

/// Like [`mix`] with an explicit sweep order over the constrained elements.
pub fn mix_ordered(
    p: &Distribution,
    q: &Distribution,
    order: &[ElementId],
    cfg: &SolverConfig,
) -> Result<(Distribution, SolverStats)> {
    mix_observed(p, q, order, cfg, |_| {})
}

/// Like [`mix_ordered`], calling `observer` with the probabilities after
/// every singleton update.
pub fn mix_observed(
    p: &Distribution,
    q: &Distribution,
    order: &[ElementId],
    cfg: &SolverConfig,
    observer: impl FnMut(&[f64]),
) -> Result<(Distribution, SolverStats)> {
    p.check_same_poset(q)?;
    let subset = Subset::new(p.poset(), order.iter().copied())?;
    if subset.len() != order.len() {
        return Err(Error::InvalidSubset("sweep order repeats an element".into()));
    }
    subset.check_in(p.poset())?;
    let sweep = theta_targets(q, order);
    solve_mixed(p, &sweep, cfg, observer)
}

/// Knock-down projection: the mixed distribution of `(p, p₀)` with `p₀`
/// uniform, i.e. `θ_r(x) = 0` for every `x ∈ I`.
pub fn e_project_knockdown(p: &Distribution, subset: &Subset, cfg: &SolverConfig) -> Result<(Distribution, SolverStats)> {
    subset.check_in(p.poset())?;
    let sweep: Vec<(usize, f64)> = subset.iter().map(|x| (x.index(), 0.0)).collect();
    solve_mixed(p, &sweep, cfg, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::theta_from_p;
    use std::sync::Arc;

    fn diamond() -> Arc<Poset> {
        Arc::new(
            Poset::build(
                &["⊥", "x1", "x2", "x3"],
                &[("⊥", "x1"), ("⊥", "x2"), ("x1", "x3"), ("x2", "x3")],
            )
            .unwrap(),
        )
    }

    fn kl(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum()
    }

    #[test]
    fn mobius_coefficients_on_diamond() {
        let d = diamond();
        let t = Target::new(&d, 3);
        assert_eq!(t.coeffs, vec![(0, 1.0), (1, -1.0), (2, -1.0), (3, 1.0)]);
        let t = Target::new(&d, 1);
        assert_eq!(t.coeffs, vec![(0, -1.0), (1, 1.0)]);
    }

    #[test]
    fn knockdown_singletons_of_transaction_example() {
        let poset = diamond();
        let p = Distribution::new(poset.clone(), vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let q = Distribution::uniform(poset.clone());
        let cfg = SolverConfig::default();
        for (label, want) in [("x1", 0.0523), ("x2", 0.0170), ("x3", 0.0040)] {
            let x = poset.id(label).unwrap();
            let (r, stats) = mix_singleton(&p, &q, x, &cfg).unwrap();
            assert!((kl(p.probs(), r.probs()) - want).abs() < 1e-4, "{label}");
            assert_eq!(stats.outer_iterations, 1);
            let (r2, _) = e_project_knockdown(&p, &Subset::new(&poset, [x]).unwrap(), &cfg).unwrap();
            for (a, b) in r.probs().iter().zip(r2.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_inputs_need_no_refinement() {
        let poset = diamond();
        let p = Distribution::new(poset.clone(), vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let (r, stats) = mix_singleton(&p, &p, poset.id("x2").unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(r, p);
        assert_eq!(stats.outer_iterations, 0);
        assert_eq!(stats.per_target_iterations, vec![(poset.id("x2").unwrap(), 0)]);
    }

    #[test]
    fn empty_and_full_subsets() {
        let poset = diamond();
        let p = Distribution::new(poset.clone(), vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let q = Distribution::new(poset.clone(), vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        let cfg = SolverConfig::default();
        let (r, _) = mix(&p, &q, &Subset::empty(), &cfg).unwrap();
        assert_eq!(r, p);
        let (r, _) = mix(&p, &q, &Subset::all(&poset), &cfg).unwrap();
        for (a, b) in r.probs().iter().zip(q.probs()) {
            assert!((a - b).abs() < 1e-9);
        }
        let tr = theta_from_p(&r);
        let tq = theta_from_p(&q);
        for x in 1..4 {
            assert!((tr.values[x] - tq.values[x]).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_mixed_conditional() {
        let poset = Arc::new(
            Poset::build(&["0", "1", "2", "3"], &[("0", "1"), ("1", "2"), ("2", "3")]).unwrap(),
        );
        let row = [0.01, 0.30, 0.10, 0.02];
        let total: f64 = row.iter().sum();
        let cond = Distribution::new(poset.clone(), row.iter().map(|v| v / total).collect()).unwrap();
        let marginal = Distribution::new(poset.clone(), vec![0.11, 0.43, 0.24, 0.22]).unwrap();
        let subset = Subset::from_labels(&poset, &["2", "3"]).unwrap();
        let (r, _) = mix(&cond, &marginal, &subset, &SolverConfig::default()).unwrap();
        for (got, want) in r.probs().iter().zip([0.0233, 0.472, 0.263, 0.241]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn subset_rules() {
        let poset = diamond();
        assert!(matches!(
            Subset::from_labels(&poset, &["⊥"]),
            Err(Error::InvalidSubset(_))
        ));
        let a = Subset::from_labels(&poset, &["x2", "x1", "x2"]).unwrap();
        assert_eq!(a.len(), 2);
        let b = Subset::from_labels(&poset, &["x3"]).unwrap();
        assert_eq!(a.union(&b), Subset::all(&poset));
        assert!(a.is_subset_of(&Subset::all(&poset)));
        assert_eq!(Subset::filter_of(&poset, poset.bottom()).unwrap(), Subset::all(&poset));
        assert_eq!(Subset::filter_of(&poset, poset.id("x1").unwrap()).unwrap().labels(&poset), vec!["x1", "x3"]);
    }

    #[test]
    fn mismatched_posets_are_rejected() {
        let p = Distribution::uniform(diamond());
        let other = Arc::new(Poset::build(&["a", "b"], &[("a", "b")]).unwrap());
        let q = Distribution::uniform(other);
        assert!(matches!(mix(&p, &q, &Subset::empty(), &SolverConfig::default()), Err(Error::PosetMismatch)));
    }
}
