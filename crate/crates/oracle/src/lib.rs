//! Brute-force reference implementations for small instances.
//!
//! Nothing here shares code with the main algorithms: coordinates come from
//! dense linear algebra on the zeta matrix, mixed distributions from a damped
//! Newton solve of the full nonlinear system, and Boolean lattices from
//! inclusion–exclusion over bitmasks.

use nalgebra::{DMatrix, DVector};
use posetinfo::{Distribution, ElementId, Poset};
use rand::Rng;

pub const THETA_MAX_SIZE: usize = 64;
pub const MIX_MAX_SIZE: usize = 8;
pub const BOOLEAN_MAX_N: usize = 4;

const MIX_RESIDUAL_TOL: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 200;
const MAX_HALVINGS: usize = 60;
const FD_STEP: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("poset has {size} elements; the oracle handles at most {max}")]
    PosetTooLarge { size: usize, max: usize },
    #[error("Newton iteration did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error(transparent)]
    Core(#[from] posetinfo::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;

fn check_size(size: usize, max: usize) -> Result<()> {
    if size > max {
        Err(OracleError::PosetTooLarge { size, max })
    } else {
        Ok(())
    }
}

/// Matrix form of a distribution: `Z[x][s] = [s ≤ x]`, so that
/// `log p = Z θ` and `η = Zᵀ p`.
#[derive(Debug, Clone)]
pub struct DenseModel {
    pub zeta: DMatrix<f64>,
    pub p: DVector<f64>,
    pub theta: DVector<f64>,
    pub eta: DVector<f64>,
}

pub fn zeta_matrix(poset: &Poset) -> DMatrix<f64> {
    let n = poset.len();
    DMatrix::from_fn(n, n, |x, s| {
        let (x, s) = (poset.element(x).unwrap(), poset.element(s).unwrap());
        if poset.leq(s, x).unwrap() {
            1.0
        } else {
            0.0
        }
    })
}

impl DenseModel {
    pub fn new(poset: &Poset, p: &[f64]) -> Result<Self> {
        check_size(poset.len(), THETA_MAX_SIZE)?;
        let zeta = zeta_matrix(poset);
        let p = DVector::from_column_slice(p);
        let log_p = p.map(f64::ln);
        let theta = zeta
            .solve_lower_triangular(&log_p)
            .expect("zeta matrix has a unit diagonal");
        let eta = zeta.transpose() * &p;
        Ok(DenseModel { zeta, p, theta, eta })
    }
}

/// `θ` by forward substitution on `Z θ = log p`.
pub fn oracle_theta(poset: &Poset, p: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseModel::new(poset, p)?.theta.as_slice().to_vec())
}

/// `η = Zᵀ p`.
pub fn oracle_eta(poset: &Poset, p: &[f64]) -> Result<Vec<f64>> {
    Ok(DenseModel::new(poset, p)?.eta.as_slice().to_vec())
}

/// The mixed distribution of `(p, q)` with respect to `subset`, found by
/// solving `η_r = η_p` off the subset and `θ_r = θ_q` on it directly.
pub fn oracle_mix(poset: &Poset, p: &[f64], q: &[f64], subset: &[ElementId]) -> Result<Vec<f64>> {
    let n = poset.len();
    check_size(n, MIX_MAX_SIZE)?;
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let zeta = zeta_matrix(poset);
    let p_model = DenseModel::new(poset, p)?;
    let q_model = DenseModel::new(poset, q)?;
    let in_subset: Vec<bool> = (0..n).map(|x| subset.iter().any(|s| s.index() == x)).collect();
    let target: Vec<f64> = (1..n)
        .map(|x| if in_subset[x] { q_model.theta[x] } else { p_model.eta[x] })
        .collect();

    // Unknowns are r(x) for x ≠ ⊥; r(⊥) takes up the rest of the mass.
    let full = |u: &DVector<f64>| -> Option<DVector<f64>> {
        let bottom = 1.0 - u.sum();
        let mut r = DVector::zeros(n);
        r[0] = bottom;
        r.rows_mut(1, n - 1).copy_from(u);
        r.iter().all(|&v| v > 0.0).then_some(r)
    };
    let residual = |u: &DVector<f64>| -> Option<DVector<f64>> {
        let r = full(u)?;
        let theta = zeta.solve_lower_triangular(&r.map(f64::ln))?;
        let eta = zeta.transpose() * &r;
        Some(DVector::from_fn(n - 1, |i, _| {
            let x = i + 1;
            if in_subset[x] {
                theta[x] - target[i]
            } else {
                eta[x] - target[i]
            }
        }))
    };

    let uniform = vec![1.0 / n as f64; n];
    let mut best = f64::INFINITY;
    for start in [p, q, &uniform[..]] {
        let mut u = DVector::from_column_slice(&start[1..]);
        let Some(mut f) = residual(&u) else { continue };
        for _ in 0..MAX_NEWTON_STEPS {
            let norm = f.amax();
            best = best.min(norm);
            if norm < MIX_RESIDUAL_TOL {
                return Ok(full(&u).unwrap().as_slice().to_vec());
            }
            let Some(jac) = jacobian(&u, &residual) else { break };
            let Some(step) = jac.lu().solve(&f) else { break };
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial = &u - &step * t;
                if let Some(ft) = residual(&trial) {
                    if ft.amax() < norm || accepted.is_none() {
                        let better = ft.amax() < norm;
                        accepted = Some((trial, ft));
                        if better {
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            let Some((next_u, next_f)) = accepted else { break };
            u = next_u;
            f = next_f;
        }
        best = best.min(f.amax());
        if f.amax() < MIX_RESIDUAL_TOL {
            return Ok(full(&u).unwrap().as_slice().to_vec());
        }
    }
    Err(OracleError::NoConvergence { residual: best })
}

fn jacobian(u: &DVector<f64>, residual: &impl Fn(&DVector<f64>) -> Option<DVector<f64>>) -> Option<DMatrix<f64>> {
    let m = u.len();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let h = FD_STEP * u[j].abs().max(1e-3);
        let mut plus = u.clone();
        plus[j] += h;
        let mut minus = u.clone();
        minus[j] -= h;
        let column = (residual(&plus)? - residual(&minus)?) / (2.0 * h);
        jac.set_column(j, &column);
    }
    Some(jac)
}

/// The Boolean lattice `2^[n]` with elements labelled as itemsets (`⊥`,
/// `1`, `1,2`, …) and ordered by inclusion.
pub fn boolean_lattice(n: usize) -> Result<Poset> {
    check_size(n, BOOLEAN_MAX_N)?;
    let labels: Vec<String> = (0..1usize << n).map(mask_label).collect();
    Ok(Poset::from_order(&labels, |a, b| a != b && a & b == a)?)
}

pub fn mask_label(mask: usize) -> String {
    if mask == 0 {
        return "⊥".to_owned();
    }
    (0..usize::BITS as usize)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `θ` and `η` over `2^[n]` by inclusion–exclusion; both are indexed by
/// bitmask, as is `p_full`.
pub fn oracle_boolean_lattice(n: usize, p_full: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_size(n, BOOLEAN_MAX_N)?;
    let size = 1usize << n;
    assert_eq!(p_full.len(), size, "p_full must have 2^n entries");
    let theta = (0..size)
        .map(|x| {
            subsets_of(x)
                .map(|s| {
                    let sign = if (x & !s).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * p_full[s].ln()
                })
                .sum()
        })
        .collect();
    let eta = (0..size)
        .map(|s| (0..size).filter(|x| x & s == s).map(|x| p_full[x]).sum())
        .collect();
    Ok((theta, eta))
}

fn subsets_of(x: usize) -> impl Iterator<Item = usize> {
    (0..=x).filter(move |s| s & x == *s)
}

/// A random poset on `n` elements with element `e0` at the bottom. Each pair
/// `i < j` is related with probability `density` before taking the
/// transitive closure.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, density: f64) -> Poset {
    assert!(n >= 1);
    let mut reach = vec![vec![false; n]; n];
    for j in 1..n {
        reach[0][j] = true;
        for i in 1..j {
            reach[i][j] = rng.gen_bool(density);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let labels: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    Poset::from_order(&labels, |i, j| reach[i][j]).expect("closure of a DAG with a least element")
}

/// A random union-closed family of subsets of `[4]` containing `∅`, which
/// is a lattice with join = union. At most `max_size` elements.
pub fn random_lattice<R: Rng>(rng: &mut R, max_size: usize) -> Poset {
    assert!(max_size >= 2);
    loop {
        let generators = rng.gen_range(1..=4);
        let mut family = vec![0usize];
        for _ in 0..generators {
            let g = rng.gen_range(1..16usize);
            let mut grown = family.clone();
            for &f in &family {
                if !grown.contains(&(f | g)) {
                    grown.push(f | g);
                }
            }
            family = grown;
        }
        if family.len() < 2 || family.len() > max_size {
            continue;
        }
        family.sort_by_key(|m| (m.count_ones(), *m));
        let labels: Vec<String> = family.iter().map(|&m| mask_label(m)).collect();
        return Poset::from_order(&labels, |a, b| {
            let (a, b) = (family[a], family[b]);
            a != b && a & b == a
        })
        .expect("union-closed family with ∅ is a lattice");
    }
}

/// Strictly positive probabilities, none smaller than about `0.02 / |S|`.
pub fn random_distribution<R: Rng>(rng: &mut R, poset: std::sync::Arc<Poset>) -> Distribution {
    let weights: Vec<f64> = (0..poset.len()).map(|_| rng.gen_range(0.02..1.0)).collect();
    Distribution::normalized(poset, weights).expect("positive weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn diamond() -> Poset {
        Poset::build(&["⊥", "x1", "x2", "x3"], &[("⊥", "x1"), ("⊥", "x2"), ("x1", "x3"), ("x2", "x3")]).unwrap()
    }

    #[test]
    fn theta_of_diamond() {
        let theta = oracle_theta(&diamond(), &[0.1, 0.3, 0.2, 0.4]).unwrap();
        for (got, want) in theta.iter().zip([-2.303, 1.099, 0.693, -0.405]) {
            assert!((got - want).abs() < 1e-3);
        }
        let uniform = oracle_theta(&diamond(), &[0.25; 4]).unwrap();
        assert!(uniform[1..].iter().all(|t| t.abs() < 1e-15));
    }

    #[test]
    fn mix_boundary_subsets() {
        let poset = diamond();
        let p = [0.1, 0.3, 0.2, 0.4];
        let q = [0.25; 4];
        let r = oracle_mix(&poset, &p, &q, &[]).unwrap();
        assert!(r.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-9));
        let all: Vec<ElementId> = poset.non_bottom().collect();
        let r = oracle_mix(&poset, &p, &q, &all).unwrap();
        assert!(r.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn mix_of_chain_conditional() {
        let chain = Poset::build(&["0", "1", "2", "3"], &[("0", "1"), ("1", "2"), ("2", "3")]).unwrap();
        let cond = [0.01 / 0.43, 0.30 / 0.43, 0.10 / 0.43, 0.02 / 0.43];
        let marginal = [0.11, 0.43, 0.24, 0.22];
        let subset = [chain.id("2").unwrap(), chain.id("3").unwrap()];
        let r = oracle_mix(&chain, &cond, &marginal, &subset).unwrap();
        for (got, want) in r.iter().zip([0.0233, 0.472, 0.263, 0.241]) {
            assert!((got - want).abs() < 1e-3);
        }
    }

    #[test]
    fn boolean_closed_forms() {
        let (theta, eta) = oracle_boolean_lattice(1, &[0.4, 0.6]).unwrap();
        assert!((theta[0] - 0.4f64.ln()).abs() < 1e-15);
        assert!((theta[1] - (0.6f64 / 0.4).ln()).abs() < 1e-15);
        assert_eq!(eta, [1.0, 0.6]);

        let (a, b) = (0.3, 0.8);
        let p: Vec<f64> = (0..4)
            .map(|m| {
                let bit = |i: usize, q: f64| if m >> i & 1 == 1 { q } else { 1.0 - q };
                bit(0, a) * bit(1, b)
            })
            .collect();
        let (theta, _) = oracle_boolean_lattice(2, &p).unwrap();
        assert!(theta[3].abs() < 1e-12);

        let (theta, _) = oracle_boolean_lattice(2, &[0.25; 4]).unwrap();
        assert!(theta[1..].iter().all(|t| t.abs() < 1e-15));
        assert!(matches!(oracle_boolean_lattice(5, &[0.0; 32]), Err(OracleError::PosetTooLarge { .. })));
    }

    #[test]
    fn generators_produce_valid_structures() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let poset = random_poset(&mut rng, 7, 0.3);
            assert_eq!(poset.len(), 7);
            let lattice = random_lattice(&mut rng, 10);
            assert!(lattice.is_lattice());
            let d = random_distribution(&mut rng, Arc::new(lattice));
            assert!(d.probs().iter().all(|&p| p > 0.0));
        }
        assert_eq!(boolean_lattice(3).unwrap().len(), 8);
        assert!(boolean_lattice(3).unwrap().is_lattice());
    }
}
