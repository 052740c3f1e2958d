//! Covariance normalization, wedge and reflection angles, the characteristic
//! parameter χ, and the recurrence/transience verdict.
//!
//! The map `T_Σ` sends the interior covariance to the identity and the
//! quadrant to a wedge of opening `φ₀ = arccos(−ρ)`. The effective boundary
//! drifts `μ̄₁, μ̄₂`, seen through `T_Σ`, make angles `φ₁, φ₂` with the inward
//! normals of the wedge; `χ = (φ₁ + φ₂)/φ₀`. Positive χ means recurrence and
//! `P(τ > n)` decays like `n^{−χ/2}`; negative χ means transience.

use crate::linalg::{Mat2, Vec2};
use crate::model::{self, ModelError, Side, ValidationReport, WalkSpec};
use crate::projection::{
    self, embedded_exact, occupation_mc, projection_chain, truncated_invariant, ProjectionError,
    StationaryMeasure, TruncationOptions,
};
use crate::rational::{self, Prob};
use num_traits::Zero;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("walk fails a required hypothesis (H, D or Σ)")]
    HypothesisFailed(Box<ValidationReport>),
    #[error("covariance matrix is not positive definite (det = {det}, diagonal = ({a11}, {a22}))")]
    NotPositiveDefinite { det: f64, a11: f64, a22: f64 },
    #[error("covariance matrix is not symmetric")]
    NotSymmetric,
    #[error(
        "effective drift on boundary {side} is {vector:?}; the angle formulas need a nonzero \
         drift pointing strictly into the quadrant"
    )]
    NonGenericDrift { side: u8, vector: Vec2 },
    #[error("stationary measure has {found} weights, expected {expected}")]
    WrongMeasureLength { expected: usize, found: usize },
    #[error("stationary measure sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_positive_definite(sigma: &Mat2) -> Result<(), ClassifyError> {
    let scale = sigma.a11.abs().max(sigma.a22.abs()).max(1.0);
    if (sigma.a12 - sigma.a21).abs() > 1e-12 * scale || !sigma.is_finite() {
        return Err(ClassifyError::NotSymmetric);
    }
    let det = sigma.det();
    if sigma.a11 > 0.0 && sigma.a22 > 0.0 && det > 0.0 {
        Ok(())
    } else {
        Err(ClassifyError::NotPositiveDefinite { det, a11: sigma.a11, a22: sigma.a22 })
    }
}

/// Correlation coefficient `κ / (σ₁σ₂)`.
pub fn correlation(sigma: &Mat2) -> Result<f64, ClassifyError> {
    check_positive_definite(sigma)?;
    Ok(sigma.a12 / (sigma.a11 * sigma.a22).sqrt())
}

/// The upper-triangular `T` with positive diagonal and `T Σ Tᵀ = I`:
/// `T = (1/(s σ₂)) [[σ₂², −κ], [0, s]]`, `s = √det Σ`.
pub fn transform_matrix(sigma: &Mat2) -> Result<Mat2, ClassifyError> {
    check_positive_definite(sigma)?;
    let s = sigma.det().sqrt();
    let sigma2 = sigma.a22.sqrt();
    let c = 1.0 / (s * sigma2);
    Ok(Mat2::new(sigma.a22 * c, -sigma.a12 * c, 0.0, s * c))
}

/// Opening angle `φ₀ = arccos(−ρ) ∈ (0, π)` of the image wedge.
pub fn wedge_angle(sigma: &Mat2) -> Result<f64, ClassifyError> {
    Ok((-correlation(sigma)?).clamp(-1.0, 1.0).acos())
}

/// Drift `μ_k(i) = Σ z p_k(i; z)` of one boundary law.
pub fn boundary_drift(spec: &WalkSpec, side: Side, i: usize) -> Vec2 {
    model::interior_mean(spec.boundary(side, i))
}

/// Weighted drift `μ̄_k = Σ π_k(i) μ_k(i)`. When `pi` carries exact weights
/// the combination is formed in rational arithmetic.
pub fn effective_drift(spec: &WalkSpec, side: Side, pi: &StationaryMeasure) -> Result<Vec2, ClassifyError> {
    let r = spec.depth();
    if pi.len() != r {
        return Err(ClassifyError::WrongMeasureLength { expected: r, found: pi.len() });
    }
    if let Some(exact) = &pi.exact {
        let mut mx = Prob::zero();
        let mut my = Prob::zero();
        for (i, w) in exact.iter().enumerate() {
            let (bx, by) = spec.boundary(side, i).mean_exact();
            mx += w * bx;
            my += w * by;
        }
        return Ok(Vec2::new(rational::to_f64(&mx), rational::to_f64(&my)));
    }
    let sum: f64 = pi.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 || pi.weights.iter().any(|w| *w < 0.0) {
        return Err(ClassifyError::NotNormalized { sum });
    }
    Ok(pi
        .weights
        .iter()
        .enumerate()
        .fold(Vec2::ZERO, |acc, (i, &w)| acc + boundary_drift(spec, side, i).scale(w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// Reflection angles from the covariance and the effective drifts.
///
/// `θ₁` and `θ₂` locate `μ̄₁ = ‖μ̄₁‖(−sin θ₁, cos θ₁)` and
/// `μ̄₂ = ‖μ̄₂‖(cos θ₂, −sin θ₂)`; `φ₁, φ₂` are the corresponding angles in the
/// normalized wedge.
pub fn reflection_angles(sigma: &Mat2, mu_bar1: Vec2, mu_bar2: Vec2) -> Result<ReflectionAngles, ClassifyError> {
    check_positive_definite(sigma)?;
    if !(mu_bar1.y > 0.0 && mu_bar1.is_finite()) {
        return Err(ClassifyError::NonGenericDrift { side: 1, vector: mu_bar1 });
    }
    if !(mu_bar2.x > 0.0 && mu_bar2.is_finite()) {
        return Err(ClassifyError::NonGenericDrift { side: 2, vector: mu_bar2 });
    }
    let theta1 = (-mu_bar1.x).atan2(mu_bar1.y);
    let theta2 = (-mu_bar2.y).atan2(mu_bar2.x);
    let var2 = sigma.a22;
    let kappa = sigma.a12;
    let s = sigma.det().sqrt();
    let phi0 = wedge_angle(sigma)?;

    let (sin1, cos1) = theta1.sin_cos();
    let phi1 = ((var2 * sin1 + kappa * cos1) / (s * cos1)).atan();

    let (sin2, cos2) = theta2.sin_cos();
    let (sin0, cos0) = phi0.sin_cos();
    let a = var2 * cos2 + kappa * sin2;
    let phi2 = (-(a * cos0 - s * sin2 * sin0) / (a * sin0 + s * sin2 * cos0)).atan();
    Ok(ReflectionAngles { theta1, theta2, phi1, phi2 })
}

/// `χ = (φ₁ + φ₂) / φ₀`.
pub fn chi(phi0: f64, phi1: f64, phi2: f64) -> f64 {
    (phi1 + phi2) / phi0
}

/// `χ` for orthogonal effective reflection: `2 − π/φ₀`.
pub fn orthogonal_chi(phi0: f64) -> f64 {
    2.0 - PI / phi0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Recurrent,
    Transient,
    Critical,
}

pub fn verdict(chi: f64, tol_crit: f64) -> Verdict {
    if chi > tol_crit {
        Verdict::Recurrent
    } else if chi < -tol_crit {
        Verdict::Transient
    } else {
        Verdict::Critical
    }
}

/// How `classify` obtains `π₁, π₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationarySolver {
    /// Exact embedded solve when the interior law is left-continuous,
    /// truncation otherwise.
    Auto,
    Exact,
    Truncated(TruncationOptions),
    OccupationMc { steps: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub solver: StationarySolver,
    pub tol_crit: f64,
    /// Side of the irreducibility truncation box; `None` means `8R`.
    pub irreducibility_box: Option<usize>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { solver: StationarySolver::Auto, tol_crit: 1e-9, irreducibility_box: None }
    }
}

pub fn stationary_measure(
    spec: &WalkSpec,
    side: Side,
    solver: StationarySolver,
) -> Result<StationaryMeasure, ProjectionError> {
    let chain = projection_chain(spec, side)?;
    match solver {
        StationarySolver::Auto if chain.is_left_continuous() => embedded_exact(&chain),
        StationarySolver::Auto => {
            let level = TruncationOptions::default().initial_level.max(8 * spec.depth());
            truncated_invariant(&chain, &TruncationOptions { initial_level: level, ..Default::default() })
        }
        StationarySolver::Exact => embedded_exact(&chain),
        StationarySolver::Truncated(opts) => truncated_invariant(&chain, &opts),
        StationarySolver::OccupationMc { steps, seed } => {
            occupation_mc(&chain, steps, crate::rng::derive(seed, if side == Side::One { "pi1" } else { "pi2" }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub sigma: Mat2,
    pub rho: f64,
    pub s: f64,
    pub transform: Mat2,
    pub phi0: f64,
    pub pi1: StationaryMeasure,
    pub pi2: StationaryMeasure,
    pub mu_bar1: Vec2,
    pub mu_bar2: Vec2,
    pub theta1: f64,
    pub theta2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub chi: f64,
    pub verdict: Verdict,
    /// `χ/2`: `log P(τ > n) / log n → −χ/2` when χ > 0.
    pub tail_exponent: f64,
    pub moment_note: String,
    pub irreducibility: model::IrreducibilityCheck,
}

pub fn classify(spec: &WalkSpec, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let trunc = opts.irreducibility_box.unwrap_or_else(|| model::default_truncation(spec));
    let validation = model::validate(spec, trunc);
    if !validation.hard_pass() {
        return Err(ClassifyError::HypothesisFailed(Box::new(validation)));
    }
    let sigma = model::covariance(spec.interior());
    let rho = correlation(&sigma)?;
    let transform = transform_matrix(&sigma)?;
    let phi0 = wedge_angle(&sigma)?;
    let pi1 = stationary_measure(spec, Side::One, opts.solver)?;
    let pi2 = stationary_measure(spec, Side::Two, opts.solver)?;
    let mu_bar1 = effective_drift(spec, Side::One, &pi1)?;
    let mu_bar2 = effective_drift(spec, Side::Two, &pi2)?;
    let angles = reflection_angles(&sigma, mu_bar1, mu_bar2)?;
    let chi = chi(phi0, angles.phi1, angles.phi2);
    Ok(ClassificationReport {
        sigma,
        rho,
        s: sigma.det().sqrt(),
        transform,
        phi0,
        pi1,
        pi2,
        mu_bar1,
        mu_bar2,
        theta1: angles.theta1,
        theta2: angles.theta2,
        phi1: angles.phi1,
        phi2: angles.phi2,
        chi,
        verdict: verdict(chi, opts.tol_crit),
        tail_exponent: chi / 2.0,
        moment_note: "finite support: all moments finite (nu = inf), so the tail exponent is chi/2"
            .to_string(),
        irreducibility: validation.irreducibility_i,
    })
}

/// Whether an angle lies in the open interval `(−π/2, π/2)`.
pub fn in_half_range(angle: f64) -> bool {
    angle > -FRAC_PI_2 && angle < FRAC_PI_2
}

pub use projection::StationaryMethod;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementLaw;

    const FIG1: Mat2 = Mat2::new(3.0, -1.0, -1.0, 3.0);

    #[test]
    fn transform_of_identity_and_diagonal() {
        assert!(transform_matrix(&Mat2::IDENTITY).unwrap().max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        let t = transform_matrix(&Mat2::diag(4.0, 1.0)).unwrap();
        assert!(t.max_abs_diff(&Mat2::diag(0.5, 1.0)) < 1e-15);
    }

    #[test]
    fn transform_of_figure_one_covariance() {
        let t = transform_matrix(&FIG1).unwrap();
        let d = 2.0 * 6f64.sqrt();
        let expected = Mat2::new(3.0 / d, 1.0 / d, 0.0, 2.0 * 2f64.sqrt() / d);
        assert!(t.max_abs_diff(&expected) < 1e-15);
        assert!((t.a11 - 0.6124).abs() < 1e-4 && (t.a12 - 0.2041).abs() < 1e-4 && (t.a22 - 0.5774).abs() < 1e-4);
        let id = t * FIG1 * t.transpose();
        assert!(id.max_abs_diff(&Mat2::IDENTITY) < 1e-12);
    }

    #[test]
    fn non_positive_definite_rejected() {
        let e = transform_matrix(&Mat2::new(1.0, 1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(e, ClassifyError::NotPositiveDefinite { det, .. } if det == 0.0));
        assert!(matches!(wedge_angle(&Mat2::new(1.0, 0.5, 0.2, 1.0)), Err(ClassifyError::NotSymmetric)));
    }

    #[test]
    fn wedge_angles() {
        assert!((wedge_angle(&Mat2::IDENTITY).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((wedge_angle(&FIG1).unwrap() - (1.0f64 / 3.0).acos()).abs() < 1e-15);
        assert!((wedge_angle(&FIG1).unwrap() - 1.23096).abs() < 1e-5);
        let nearly = Mat2::new(1.0, 0.999_999_9, 0.999_999_9, 1.0);
        assert!(PI - wedge_angle(&nearly).unwrap() < 1e-3);
    }

    #[test]
    fn orthogonal_reflection_identity_transform() {
        let a = reflection_angles(&Mat2::IDENTITY, Vec2::E2, Vec2::E1).unwrap();
        for v in [a.theta1, a.theta2, a.phi1, a.phi2] {
            assert!(v.abs() < 1e-15, "{a:?}");
        }
    }

    #[test]
    fn figure_one_angles() {
        let a = reflection_angles(&FIG1, Vec2::new(-1.0, 1.0), Vec2::new(2.0, 1.0)).unwrap();
        assert!((a.theta1 - PI / 4.0).abs() < 1e-15);
        assert!((a.phi1 - (1.0 / 2f64.sqrt()).atan()).abs() < 1e-14);
        assert!((a.phi1 - 0.61548).abs() < 1e-5);
        assert!((a.theta2 + (1.0 / 5f64.sqrt()).asin()).abs() < 1e-15);
        assert!((a.phi2 - (-5.0 / (4.0 * 2f64.sqrt())).atan()).abs() < 1e-14);
        assert!((a.phi2 + 0.72384).abs() < 1e-5);
        let c = chi(wedge_angle(&FIG1).unwrap(), a.phi1, a.phi2);
        assert!((c + 0.08803).abs() < 1e-5, "{c}");
        assert_eq!(verdict(c, 1e-9), Verdict::Transient);
    }

    #[test]
    fn outward_or_zero_drifts_are_rejected() {
        assert!(matches!(
            reflection_angles(&Mat2::IDENTITY, Vec2::new(1.0, 0.0), Vec2::E1),
            Err(ClassifyError::NonGenericDrift { side: 1, .. })
        ));
        assert!(matches!(
            reflection_angles(&Mat2::IDENTITY, Vec2::E2, Vec2::ZERO),
            Err(ClassifyError::NonGenericDrift { side: 2, .. })
        ));
    }

    #[test]
    fn chi_examples() {
        let phi0 = 2.0 * PI / 3.0;
        assert!((orthogonal_chi(phi0) - 0.5).abs() < 1e-15);
        assert!(chi(phi0, phi0 - FRAC_PI_2, phi0 - FRAC_PI_2) - 0.5 < 1e-15);
        let c = orthogonal_chi(FRAC_PI_2);
        assert_eq!(c, 0.0);
        assert_eq!(verdict(c, 1e-9), Verdict::Critical);
    }

    fn two_row_spec() -> WalkSpec {
        let interior =
            IncrementLaw::from_ratios(&[(1, 0, 1, 4), (-1, 0, 1, 4), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
        let h0 = IncrementLaw::from_ratios(&[(0, 3, 1, 1)]).unwrap();
        let h1 = IncrementLaw::from_ratios(&[(3, 0, 1, 1)]).unwrap();
        let v = IncrementLaw::from_ratios(&[(1, 0, 1, 1)]).unwrap();
        WalkSpec::with_default_corners(2, interior, vec![h0, h1], vec![v.clone(), v]).unwrap()
    }

    #[test]
    fn effective_drift_convex_combination() {
        let spec = two_row_spec();
        let pi = StationaryMeasure {
            weights: vec![1.0 / 3.0, 2.0 / 3.0],
            exact: Some(vec![rational::ratio(1, 3), rational::ratio(2, 3)]),
            ..StationaryMeasure::trivial(StationaryMethod::ExactEmbedded)
        };
        assert_eq!(effective_drift(&spec, Side::One, &pi).unwrap(), Vec2::new(2.0, 1.0));
        let float_only = StationaryMeasure { exact: None, ..pi.clone() };
        let v = effective_drift(&spec, Side::One, &float_only).unwrap();
        assert!((v - Vec2::new(2.0, 1.0)).norm() < 1e-15);
        let bad = StationaryMeasure { exact: None, weights: vec![0.5, 0.6], ..pi };
        assert!(matches!(effective_drift(&spec, Side::One, &bad), Err(ClassifyError::NotNormalized { .. })));
    }

    #[test]
    fn boundary_drift_examples() {
        let interior =
            IncrementLaw::from_ratios(&[(1, 0, 1, 4), (-1, 0, 1, 4), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
        let point = IncrementLaw::point_mass(0, 1);
        let sym = IncrementLaw::from_ratios(&[(1, 1, 1, 2), (-1, 1, 1, 2)]).unwrap();
        let v = IncrementLaw::point_mass(1, 0);
        let a = WalkSpec::with_default_corners(1, interior.clone(), vec![point], vec![v.clone()]).unwrap();
        let b = WalkSpec::with_default_corners(1, interior, vec![sym], vec![v]).unwrap();
        assert_eq!(boundary_drift(&a, Side::One, 0), Vec2::new(0.0, 1.0));
        assert_eq!(boundary_drift(&b, Side::One, 0), Vec2::new(0.0, 1.0));
        let pi = StationaryMeasure::trivial(StationaryMethod::ExactEmbedded);
        assert_eq!(effective_drift(&a, Side::One, &pi).unwrap(), Vec2::new(0.0, 1.0));
    }

    #[test]
    fn classify_rejects_failed_hypotheses() {
        let drifting =
            IncrementLaw::from_ratios(&[(1, 0, 1, 2), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
        let spec = WalkSpec::with_default_corners(
            1,
            drifting,
            vec![IncrementLaw::point_mass(0, 1)],
            vec![IncrementLaw::point_mass(1, 0)],
        )
        .unwrap();
        assert!(matches!(
            classify(&spec, &ClassifyOptions::default()),
            Err(ClassifyError::HypothesisFailed(_))
        ));
    }

    #[test]
    fn classify_reflected_srw_is_critical() {
        let interior =
            IncrementLaw::from_ratios(&[(1, 0, 1, 4), (-1, 0, 1, 4), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
        let up = IncrementLaw::from_ratios(&[(1, 0, 1, 3), (-1, 0, 1, 3), (0, 1, 1, 3)]).unwrap();
        let right = IncrementLaw::from_ratios(&[(0, 1, 1, 3), (0, -1, 1, 3), (1, 0, 1, 3)]).unwrap();
        let spec = WalkSpec::with_default_corners(1, interior, vec![up], vec![right]).unwrap();
        let rep = classify(&spec, &ClassifyOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Critical);
        assert!(rep.chi.abs() < 1e-15);
        assert_eq!(rep.rho, 0.0);
    }
}
