//! Linear stability bounds on the RK4 time step.
//!
//! For `V = 0`, `s = 0` and Dirichlet or periodic boundaries, RK4+CD is stable
//! for `k < h² / (d·√2·a)`; RK4+2SHOC tightens this by a factor 3/4. The
//! recommended step backs off a further 20% to leave room for nonlinear and
//! boundary effects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::SchemeKind;

/// Fraction of the linear bound used as the recommended step.
pub const SAFETY_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k_max_linear: f64,
    pub k_recommended: f64,
    pub scheme: SchemeKind,
    pub d: usize,
    pub a: f64,
    pub h: f64,
}

pub fn stability_bounds(d: usize, a: f64, h: f64, scheme: SchemeKind) -> Result<StabilityReport> {
    if !(1..=3).contains(&d) {
        return Err(Error::param("d", format!("dimensionality must be 1, 2 or 3, got {d}")));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::param("h", format!("must be positive, got {h}")));
    }
    let cd_bound = h * h / (d as f64 * std::f64::consts::SQRT_2 * a);
    let k_max_linear = match scheme {
        SchemeKind::Cd => cd_bound,
        SchemeKind::Shoc2 => 0.75 * cd_bound,
    };
    Ok(StabilityReport {
        k_max_linear,
        k_recommended: SAFETY_FACTOR * k_max_linear,
        scheme,
        d,
        a,
        h,
    })
}

impl StabilityReport {
    /// Largest step not above the recommended one that divides `t_end` into whole steps.
    pub fn steps_for(&self, t_end: f64) -> (u64, f64) {
        let n = (t_end / self.k_recommended).ceil().max(1.0) as u64;
        (n, t_end / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_one_dimensional_bounds() {
        let cd = stability_bounds(1, 1.0, 0.1, SchemeKind::Cd).unwrap();
        assert!((cd.k_max_linear - 0.0070711).abs() < 5e-8);
        let hoc = stability_bounds(1, 1.0, 0.1, SchemeKind::Shoc2).unwrap();
        assert!((hoc.k_max_linear - 0.0053033).abs() < 5e-8);
    }

    #[test]
    fn three_dimensional_cd() {
        let r = stability_bounds(3, 1.0, 1.0, SchemeKind::Cd).unwrap();
        assert!((r.k_max_linear - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((r.k_max_linear - 0.235702).abs() < 5e-7);
        assert_eq!(r.k_recommended, 0.8 * r.k_max_linear);
    }

    #[test]
    fn shoc2_is_three_quarters_of_cd() {
        for d in 1..=3 {
            for &(a, h) in &[(1.0, 0.1), (0.5, 0.25), (2.0, 1.5)] {
                let cd = stability_bounds(d, a, h, SchemeKind::Cd).unwrap();
                let hoc = stability_bounds(d, a, h, SchemeKind::Shoc2).unwrap();
                assert_eq!(hoc.k_max_linear, 0.75 * cd.k_max_linear);
            }
        }
    }

    #[test]
    fn monotone_in_parameters() {
        let k = |d, a, h| stability_bounds(d, a, h, SchemeKind::Cd).unwrap().k_max_linear;
        assert!(k(1, 1.0, 0.2) > k(1, 1.0, 0.1));
        assert!(k(1, 1.0, 0.1) > k(2, 1.0, 0.1));
        assert!(k(2, 1.0, 0.1) > k(3, 1.0, 0.1));
        assert!(k(1, 1.0, 0.1) > k(1, 2.0, 0.1));
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(stability_bounds(0, 1.0, 0.1, SchemeKind::Cd).is_err());
        assert!(stability_bounds(4, 1.0, 0.1, SchemeKind::Cd).is_err());
        assert!(stability_bounds(1, 0.0, 0.1, SchemeKind::Cd).is_err());
        assert!(stability_bounds(1, 1.0, -0.1, SchemeKind::Cd).is_err());
        assert!(stability_bounds(1, f64::NAN, 0.1, SchemeKind::Cd).is_err());
    }

    #[test]
    fn steps_for_stays_below_recommended() {
        let r = stability_bounds(1, 1.0, 0.05, SchemeKind::Shoc2).unwrap();
        let (n, dt) = r.steps_for(5.0);
        assert!(dt <= r.k_recommended);
        assert!((n as f64 * dt - 5.0).abs() < 1e-12);
    }
}
