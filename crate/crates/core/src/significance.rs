//! Likelihood-ratio (G-test) significance of θ knock-downs.

use serde::Serialize;

use crate::coords::Distribution;
use crate::decomposition::kl_raw;
use crate::error::{Error, Result};
use crate::projection::{e_project_knockdown, SolverConfig, Subset};

/// Where the degrees of freedom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DofConvention {
    /// `|S| − 1`.
    #[serde(rename = "size-minus-one")]
    PosetSizeMinusOne,
    #[serde(rename = "override")]
    Override,
}

#[derive(Debug, Clone)]
pub struct GTestResult {
    /// `λ = 2N · D_KL(p, r)` with `r` the knock-down null distribution.
    pub lambda: f64,
    pub dof: u64,
    pub dof_convention: DofConvention,
    pub p_value: f64,
    pub knocked_down: Subset,
    pub sample_size: u64,
    /// `D_KL(p, r)`.
    pub kl: f64,
    /// Largest `|θ_r(x)|` over the knocked-down elements.
    pub null_theta_residual: f64,
}

/// Tests `θ_p(x) = 0 for x ∈ I` against the empirical distribution `p`
/// estimated from `sample_size` observations.
pub fn g_test(
    p: &Distribution,
    subset: &Subset,
    sample_size: u64,
    dof_override: Option<i64>,
    cfg: &SolverConfig,
) -> Result<GTestResult> {
    if sample_size == 0 {
        return Err(Error::InvalidSampleSize);
    }
    if subset.is_empty() {
        return Err(Error::InvalidSubset("the G-test needs at least one knocked-down element".into()));
    }
    let (dof, dof_convention) = match dof_override {
        Some(d) if d <= 0 => return Err(Error::InvalidDof(d)),
        Some(d) => (d as u64, DofConvention::Override),
        None => {
            let d = p.poset().len() as u64 - 1;
            if d == 0 {
                return Err(Error::InvalidDof(0));
            }
            (d, DofConvention::PosetSizeMinusOne)
        }
    };
    let (r, _) = e_project_knockdown(p, subset, cfg)?;
    let kl = kl_raw(p.probs(), r.probs()).max(0.0);
    let lambda = 2.0 * sample_size as f64 * kl;
    let theta = r.theta();
    let null_theta_residual = subset.iter().map(|x| theta.get(x).abs()).fold(0.0, f64::max);
    Ok(GTestResult {
        lambda,
        dof,
        dof_convention,
        p_value: chi2_survival(lambda, dof),
        knocked_down: subset.clone(),
        sample_size,
        kl,
        null_theta_residual,
    })
}

/// Upper tail `P(χ²_k > x)`.
///
/// This is the regularized upper incomplete gamma `Q(k/2, x/2)`: the power
/// series is used below `x = k + 1` and a Lentz continued fraction above.
pub fn chi2_survival(x: f64, k: u64) -> f64 {
    assert!(k >= 1, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    let a = k as f64 / 2.0;
    let z = x / 2.0;
    if x < k as f64 + 1.0 {
        (1.0 - lower_gamma_series(a, z)).clamp(0.0, 1.0)
    } else {
        upper_gamma_fraction(a, z).clamp(0.0, 1.0)
    }
}

const MAX_TERMS: usize = 10_000;

fn lower_gamma_series(a: f64, z: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_TERMS {
        denom += 1.0;
        term *= z / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-z + a * z.ln() - ln_gamma(a)).exp()
}

fn upper_gamma_fraction(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z + a * z.ln() - ln_gamma(a)).exp() * h
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = COEFFS[1..]
        .iter()
        .enumerate()
        .fold(COEFFS[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Poset;
    use std::sync::Arc;

    fn phat() -> Distribution {
        let poset = Arc::new(
            Poset::build(
                &["⊥", "x1", "x2", "x3"],
                &[("⊥", "x1"), ("⊥", "x2"), ("x1", "x3"), ("x2", "x3")],
            )
            .unwrap(),
        );
        Distribution::new(poset, vec![0.1, 0.3, 0.2, 0.4]).unwrap()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn survival_closed_forms() {
        assert_eq!(chi2_survival(0.0, 3), 1.0);
        // k = 2 is exactly exp(-x/2), on both sides of the switch.
        for x in [0.5, 2.9, 3.1, 10.0, 60.0] {
            assert!((chi2_survival(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-12, "{x}");
        }
        assert!((chi2_survival(3.841, 1) - 0.05).abs() < 1e-3);
        assert!((chi2_survival(7.815, 3) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn survival_monotonicity() {
        let xs = [0.1, 1.0, 2.5, 4.0, 8.0, 20.0];
        for k in 1..8 {
            for w in xs.windows(2) {
                assert!(chi2_survival(w[0], k) > chi2_survival(w[1], k));
            }
            for &x in &xs {
                assert!(chi2_survival(x, k) < chi2_survival(x, k + 1));
            }
        }
    }

    #[test]
    fn lambda_of_transaction_example() {
        let p = phat();
        let x1 = Subset::from_labels(p.poset(), &["x1"]).unwrap();
        let cfg = SolverConfig::default();
        let small = g_test(&p, &x1, 10, None, &cfg).unwrap();
        assert!((small.lambda - 1.046).abs() < 2e-3);
        assert_eq!(small.dof, 3);
        assert_eq!(small.dof_convention, DofConvention::PosetSizeMinusOne);
        assert!(small.null_theta_residual < 1e-8);
        let large = g_test(&p, &x1, 300, Some(1), &cfg).unwrap();
        assert!((large.lambda - 31.38).abs() < 6e-2);
        assert_eq!(large.dof_convention, DofConvention::Override);
        assert!((large.lambda / small.lambda - 30.0).abs() < 1e-9);
    }

    #[test]
    fn null_holds_already() {
        let poset = phat().poset_arc().clone();
        let u = Distribution::uniform(poset.clone());
        let r = g_test(&u, &Subset::all(&poset), 50, None, &SolverConfig::default()).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn argument_errors() {
        let p = phat();
        let x1 = Subset::from_labels(p.poset(), &["x1"]).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(g_test(&p, &x1, 0, None, &cfg), Err(Error::InvalidSampleSize)));
        assert!(matches!(g_test(&p, &x1, 5, Some(0), &cfg), Err(Error::InvalidDof(0))));
        assert!(matches!(g_test(&p, &Subset::empty(), 5, None, &cfg), Err(Error::InvalidSubset(_))));
    }
}
