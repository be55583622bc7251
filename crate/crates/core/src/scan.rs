//! Information gain and G-test of every single element of `S⁺`.

use serde::Serialize;

use crate::coords::Distribution;
use crate::error::Result;
use crate::par::{self, Parallelism};
use crate::projection::{SolverConfig, Subset};
use crate::significance::{g_test, DofConvention};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub element: String,
    pub gain: Option<f64>,
    pub lambda: Option<f64>,
    pub p_value: Option<f64>,
    pub dof: Option<u64>,
    pub dof_convention: Option<DofConvention>,
    /// Set when this element failed; the other rows are still reported.
    pub error: Option<String>,
}

/// One row per element of `S⁺`, in canonical order. The knock-down for each
/// element is independent, so they are spread over `par`; every row is
/// computed by the same code path either way.
pub fn gain_scan(
    p: &Distribution,
    sample_size: u64,
    dof_override: Option<i64>,
    cfg: &SolverConfig,
    par: Parallelism,
) -> Result<Vec<GainRow>> {
    let poset = p.poset();
    let elements: Vec<_> = poset.non_bottom().collect();
    Ok(par::map(&elements, par, |&x| {
        let element = poset.label(x).to_owned();
        let outcome = Subset::new(poset, [x]).and_then(|s| g_test(p, &s, sample_size, dof_override, cfg));
        match outcome {
            Ok(t) => GainRow {
                element,
                gain: Some(t.kl),
                lambda: Some(t.lambda),
                p_value: Some(t.p_value),
                dof: Some(t.dof),
                dof_convention: Some(t.dof_convention),
                error: None,
            },
            Err(e) => GainRow {
                element,
                gain: None,
                lambda: None,
                p_value: None,
                dof: None,
                dof_convention: None,
                error: Some(e.to_string()),
            },
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Poset;
    use std::sync::Arc;

    fn diamond() -> Arc<Poset> {
        Arc::new(
            Poset::build(&["⊥", "x1", "x2", "x3"], &[("⊥", "x1"), ("⊥", "x2"), ("x1", "x3"), ("x2", "x3")]).unwrap(),
        )
    }

    #[test]
    fn transaction_model_gains() {
        let p = Distribution::new(diamond(), vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let rows = gain_scan(&p, 10, None, &SolverConfig::default(), Parallelism::Sequential).unwrap();
        let gains: Vec<f64> = rows.iter().map(|r| r.gain.unwrap()).collect();
        for (g, want) in gains.iter().zip([0.0523, 0.0170, 0.0040]) {
            assert!((g - want).abs() < 1e-4);
        }
        assert!(rows.iter().all(|r| r.p_value.unwrap() > 0.7));
    }

    #[test]
    fn uniform_model_has_no_gain() {
        let u = Distribution::uniform(diamond());
        let rows = gain_scan(&u, 10, None, &SolverConfig::default(), Parallelism::Auto).unwrap();
        assert!(rows.iter().all(|r| r.gain == Some(0.0) && r.p_value == Some(1.0)));
    }

    #[test]
    fn per_element_errors() {
        let p = Distribution::new(diamond(), vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let rows = gain_scan(&p, 0, None, &SolverConfig::default(), Parallelism::Sequential).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.error.is_some() && r.gain.is_none()));
    }
}
