//! Multidimensional Lindley and mirror-reflected walks driven by an
//! increment law ζ, as partially homogeneous walk specs.
//!
//! * Lindley: `L_{n+1} = (L_n + ζ_{n+1})⁺`, componentwise positive part.
//! * Mirror:  `M_{n+1} = |M_n + ζ_{n+1}|`, componentwise absolute value.
//!
//! The depth `R` is the largest downward jump of ζ in either coordinate, so
//! the interior law is ζ itself and the fold only acts on the strips.

use crate::linalg::Mat2;
use crate::model::{self, IncrementLaw, ModelError, WalkSpec};
use crate::rational::format_prob;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reflection {
    Lindley,
    Mirror,
}

impl Reflection {
    #[inline]
    pub fn fold(self, v: i64) -> i64 {
        match self {
            Reflection::Lindley => v.max(0),
            Reflection::Mirror => v.abs(),
        }
    }
}

/// Checks an increment law for use as a Lindley/mirror driver: zero mean,
/// positive-definite covariance, `|ρ| < 1`. Moments are automatic for
/// finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementReport {
    pub pass: bool,
    pub mean_zero: bool,
    pub mean_exact: [String; 2],
    /// `max(−min dx, −min dy, 0)`.
    pub lower_bound: i64,
    pub sigma: Mat2,
    pub positive_definite: bool,
    pub rho: f64,
    pub moments: &'static str,
}

pub fn validate_increment(zeta: &IncrementLaw) -> IncrementReport {
    let (mx, my) = zeta.mean_exact();
    let mean_zero = mx.is_zero() && my.is_zero();
    let (xx, xy, yy) = zeta.second_moments_exact();
    // With zero mean the second moments are the covariance; otherwise
    // centre them so the report is still meaningful.
    let cxx = &xx - &mx * &mx;
    let cxy = &xy - &mx * &my;
    let cyy = &yy - &my * &my;
    let det = &cxx * &cyy - &cxy * &cxy;
    let positive_definite = cxx > Zero::zero() && det > Zero::zero();
    let sigma = model::covariance(zeta);
    let rho = if sigma.a11 > 0.0 && sigma.a22 > 0.0 {
        sigma.a12 / (sigma.a11 * sigma.a22).sqrt()
    } else {
        f64::NAN
    };
    IncrementReport {
        pass: mean_zero && positive_definite,
        mean_zero,
        mean_exact: [format_prob(&mx), format_prob(&my)],
        lower_bound: (-zeta.min_dx()).max(-zeta.min_dy()).max(0),
        sigma,
        positive_definite,
        rho,
        moments: "all finite (finite support)",
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalksError {
    #[error("increment law fails the zero-mean / non-degenerate covariance check")]
    IncrementRejected(Box<IncrementReport>),
    #[error("correlation {0} is outside (0, 1)")]
    RhoOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One-step law from `z` of the folded walk: the image of `z + ζ` under the
/// fold, minus `z`.
pub fn folded_law(zeta: &IncrementLaw, z: (i64, i64), kind: Reflection) -> Result<IncrementLaw, ModelError> {
    IncrementLaw::from_merged(zeta.atoms().iter().map(|a| {
        let nx = kind.fold(z.0 + a.dx);
        let ny = kind.fold(z.1 + a.dy);
        (nx - z.0, ny - z.1, a.prob.clone())
    }))
}

/// Depth used by the builders: the increment lower bound, at least 1.
pub fn builder_depth(zeta: &IncrementLaw) -> usize {
    validate_increment(zeta).lower_bound.max(1) as usize
}

fn build(zeta: &IncrementLaw, kind: Reflection) -> Result<WalkSpec, WalksError> {
    let report = validate_increment(zeta);
    if !report.pass {
        return Err(WalksError::IncrementRejected(Box::new(report)));
    }
    let r = builder_depth(zeta);
    let ri = r as i64;
    let horizontal = (0..ri).map(|y| folded_law(zeta, (ri, y), kind)).collect::<Result<Vec<_>, _>>()?;
    let vertical = (0..ri).map(|x| folded_law(zeta, (x, ri), kind)).collect::<Result<Vec<_>, _>>()?;
    let mut corner = Vec::with_capacity(r * r);
    for x in 0..ri {
        for y in 0..ri {
            corner.push(folded_law(zeta, (x, y), kind)?);
        }
    }
    Ok(WalkSpec::new(r, zeta.clone(), horizontal, vertical, corner)?)
}

pub fn lindley_spec(zeta: &IncrementLaw) -> Result<WalkSpec, WalksError> {
    build(zeta, Reflection::Lindley)
}

pub fn mirror_spec(zeta: &IncrementLaw) -> Result<WalkSpec, WalksError> {
    build(zeta, Reflection::Mirror)
}

pub fn reflected_spec(zeta: &IncrementLaw, kind: Reflection) -> Result<WalkSpec, WalksError> {
    build(zeta, kind)
}

/// Tail-decay exponent `1 − π/(2 arccos(−ρ))` of the return time of either
/// reflected walk: `P(τ > n) ≈ n^{−exponent}`.
pub fn lindley_exponent(rho: f64) -> Result<f64, WalksError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(WalksError::RhoOutOfRange(rho));
    }
    Ok(1.0 - PI / (2.0 * (-rho).acos()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Axis;
    use crate::rational::ratio;

    fn rho_half() -> IncrementLaw {
        IncrementLaw::from_ratios(&[(1, 1, 3, 8), (-1, -1, 3, 8), (1, -1, 1, 8), (-1, 1, 1, 8)]).unwrap()
    }

    #[test]
    fn increment_reports() {
        let srw =
            IncrementLaw::from_ratios(&[(1, 0, 1, 4), (-1, 0, 1, 4), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
        let r = validate_increment(&srw);
        assert!(r.pass && r.lower_bound == 1 && r.rho == 0.0);
        let diag = IncrementLaw::from_ratios(&[(1, 1, 1, 2), (-1, -1, 1, 2)]).unwrap();
        let r = validate_increment(&diag);
        assert!(!r.pass && !r.positive_definite);
        let r = validate_increment(&rho_half());
        assert!(r.pass);
        assert_eq!(r.sigma, Mat2::new(1.0, 0.5, 0.5, 1.0));
        assert_eq!(r.rho, 0.5);
    }

    #[test]
    fn mirror_row_zero_reflects_down_steps() {
        let spec = mirror_spec(&rho_half()).unwrap();
        assert_eq!(spec.depth(), 1);
        let m = spec.horizontal()[0].marginal(Axis::Y);
        assert_eq!(m.len(), 1);
        assert_eq!(m[&1], ratio(1, 1));
        assert_eq!(spec.interior(), &rho_half());
    }

    #[test]
    fn lindley_row_zero_accumulates_at_axis() {
        let zeta = IncrementLaw::from_ratios(&[
            (2, -2, 1, 8),
            (-2, -2, 1, 8),
            (1, 0, 1, 4),
            (-1, 0, 1, 4),
            (2, 2, 1, 8),
            (-2, 2, 1, 8),
        ])
        .unwrap();
        let spec = lindley_spec(&zeta).unwrap();
        assert_eq!(spec.depth(), 2);
        let m = spec.horizontal()[0].marginal(Axis::Y);
        assert_eq!(m[&0], ratio(3, 4));
        assert_eq!(m[&2], ratio(1, 4));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn fold_is_inactive_away_from_axes() {
        let zeta = rho_half();
        for kind in [Reflection::Lindley, Reflection::Mirror] {
            assert_eq!(folded_law(&zeta, (1, 1), kind).unwrap(), zeta);
            assert_eq!(folded_law(&zeta, (5, 3), kind).unwrap(), zeta);
        }
    }

    #[test]
    fn exponent_closed_form() {
        assert!((lindley_exponent(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((lindley_exponent(1.0 - 1e-12).unwrap() - 0.5).abs() < 1e-5);
        assert!(lindley_exponent(1e-12).unwrap().abs() < 1e-11);
        assert!(lindley_exponent(0.0).is_err());
        assert!(lindley_exponent(1.0).is_err());
        assert!(lindley_exponent(-0.5).is_err());
    }

    #[test]
    fn rejects_drifting_increment() {
        let z = IncrementLaw::from_ratios(&[(1, 1, 1, 2), (-1, 0, 1, 2)]).unwrap();
        assert!(matches!(lindley_spec(&z), Err(WalksError::IncrementRejected(_))));
    }
}
