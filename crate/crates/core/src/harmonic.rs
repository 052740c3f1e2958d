//! The wedge-harmonic Lyapunov family `h(r, θ) = r^β cos(βθ − β₁)`, the
//! choice of `(β₁, β₂)` around the reflection angles, and Monte Carlo
//! verification of the sign of the (time-compressed) drift of `h^α`.
//!
//! All geometry happens in the normalized plane `T_Σ z`, where the walk has
//! identity covariance and the quadrant becomes the wedge `0 ≤ θ ≤ φ₀`.
//! Writing `w = x + iy`, `h = Re(e^{−iβ₁} w^β)`, so `h` is harmonic away
//! from the origin and positive on the wedge when `|β₁|, |β₂| < π/2`.

use crate::classify::{self, ClassifyError};
use crate::exec::Execution;
use crate::linalg::{Mat2, Vec2};
use crate::model::{self, Region, WalkSpec};
use crate::rng;
use crate::simulate::{CompiledWalk, State};
use crate::stats::{Moments, Z95};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarmonicError {
    #[error("beta_{index} = {value} is outside (-pi/2, pi/2)")]
    BetaOutOfRange { index: u8, value: f64 },
    #[error("phi0 = {0} is outside (0, pi)")]
    WedgeOutOfRange(f64),
    #[error("h is undefined at the origin when beta < 0")]
    Origin,
    #[error("the gradient and Hessian of h are undefined at the origin")]
    Singular,
    #[error("truncation level must be positive, got {0}")]
    BadTruncation(f64),
    #[error("chi must be nonzero")]
    CriticalChi,
    #[error("epsilon = {epsilon} must lie in (0, |chi|) = (0, {abs_chi})")]
    EpsilonOutOfRange { epsilon: f64, abs_chi: f64 },
    #[error("chi = {chi} disagrees with (phi1 + phi2)/phi0 = {implied}")]
    InconsistentChi { chi: f64, implied: f64 },
    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("point {point:?} is in {found:?}, expected {expected:?}")]
    RegionMismatch { point: State, found: Region, expected: Region },
    #[error("need at least 2 samples and compression N >= 1")]
    BadSampling,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicParams {
    pub beta1: f64,
    pub beta2: f64,
    pub phi0: f64,
    /// `(β₁ + β₂)/φ₀`.
    pub beta: f64,
}

impl HarmonicParams {
    pub fn new(beta1: f64, beta2: f64, phi0: f64) -> Result<Self, HarmonicError> {
        for (index, value) in [(1, beta1), (2, beta2)] {
            if !(value > -FRAC_PI_2 && value < FRAC_PI_2) {
                return Err(HarmonicError::BetaOutOfRange { index, value });
            }
        }
        if !(phi0 > 0.0 && phi0 < PI) {
            return Err(HarmonicError::WedgeOutOfRange(phi0));
        }
        Ok(Self { beta1, beta2, phi0, beta: (beta1 + beta2) / phi0 })
    }
}

/// `h(z) = r^β cos(βθ − β₁)` with `θ` measured from the positive x-axis.
pub fn h_eval(z: Vec2, p: &HarmonicParams) -> Result<f64, HarmonicError> {
    let r = z.norm();
    if r == 0.0 {
        return if p.beta < 0.0 {
            Err(HarmonicError::Origin)
        } else if p.beta == 0.0 {
            Ok(p.beta1.cos())
        } else {
            Ok(0.0)
        };
    }
    let theta = z.y.atan2(z.x);
    Ok(r.powf(p.beta) * (p.beta * theta - p.beta1).cos())
}

/// `∇h = β r^{β−1} (cos((β−1)θ − β₁), −sin((β−1)θ − β₁))`.
pub fn h_gradient(z: Vec2, p: &HarmonicParams) -> Result<Vec2, HarmonicError> {
    let r = z.norm();
    if r == 0.0 {
        return Err(HarmonicError::Singular);
    }
    let theta = z.y.atan2(z.x);
    let a = (p.beta - 1.0) * theta - p.beta1;
    let c = p.beta * r.powf(p.beta - 1.0);
    Ok(Vec2::new(c * a.cos(), -c * a.sin()))
}

/// Hessian of `h`; its trace vanishes identically.
pub fn h_hessian(z: Vec2, p: &HarmonicParams) -> Result<Mat2, HarmonicError> {
    let r = z.norm();
    if r == 0.0 {
        return Err(HarmonicError::Singular);
    }
    let theta = z.y.atan2(z.x);
    let a = (p.beta - 2.0) * theta - p.beta1;
    let c = p.beta * (p.beta - 1.0) * r.powf(p.beta - 2.0);
    let (hxx, hxy) = (c * a.cos(), -c * a.sin());
    Ok(Mat2::new(hxx, hxy, hxy, -hxx))
}

/// `h_b = min((2b)^β, h)`.
pub fn h_truncated(z: Vec2, p: &HarmonicParams, b: f64) -> Result<f64, HarmonicError> {
    if !(b > 0.0) {
        return Err(HarmonicError::BadTruncation(b));
    }
    Ok((2.0 * b).powf(p.beta).min(h_eval(z, p)?))
}

/// Constants of the polynomial growth envelope `ε₀‖z‖^β ≤ h(z) ≤ ‖z‖^β` on
/// the wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthEnvelope {
    /// Any `δ` with `2δ|β| < π/2 − max|β_k|`; the midpoint of the admissible
    /// range is used.
    pub delta: f64,
    /// `cos(π/2 − δ|β|)`.
    pub eps0: f64,
}

pub fn growth_envelope(p: &HarmonicParams) -> GrowthEnvelope {
    let slack = FRAC_PI_2 - p.beta1.abs().max(p.beta2.abs());
    if p.beta == 0.0 {
        // h is the constant cos β₁ ≥ sin(slack).
        return GrowthEnvelope { delta: f64::INFINITY, eps0: slack.sin() / 2.0 };
    }
    let delta = slack / (4.0 * p.beta.abs());
    GrowthEnvelope { delta, eps0: (FRAC_PI_2 - delta * p.beta.abs()).cos() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// `|χ| − ε < |β| < |χ|`.
    Below,
    /// `|χ| < |β| < |χ| + ε`.
    Above,
}

/// Picks `β₁, β₂` at the midpoints of the windows of half-width `εφ₀/2`
/// next to `φ₁, φ₂`, so that `sign β = sign χ` and `|β|` lands in the
/// requested window around `|χ|` (at distance `ε/2`).
pub fn choose_betas(
    phi1: f64,
    phi2: f64,
    phi0: f64,
    chi: f64,
    epsilon: f64,
    window: Window,
) -> Result<HarmonicParams, HarmonicError> {
    if chi == 0.0 {
        return Err(HarmonicError::CriticalChi);
    }
    if !(epsilon > 0.0 && epsilon < chi.abs()) {
        return Err(HarmonicError::EpsilonOutOfRange { epsilon, abs_chi: chi.abs() });
    }
    let implied = (phi1 + phi2) / phi0;
    if (implied - chi).abs() > 1e-9 * chi.abs().max(1.0) {
        return Err(HarmonicError::InconsistentChi { chi, implied });
    }
    // Shrinking |β| below |χ| means moving β toward 0: down when χ > 0.
    let down = matches!((chi > 0.0, window), (true, Window::Below) | (false, Window::Above));
    let shift = if down { -epsilon * phi0 / 4.0 } else { epsilon * phi0 / 4.0 };
    HarmonicParams::new(phi1 + shift, phi2 + shift, phi0)
}

/// Real steps per compressed step: 1 from the interior, `n` elsewhere.
pub fn compression_steps(walk: &CompiledWalk, z: State, n: u32) -> u32 {
    if walk.region(z) == Region::Interior {
        1
    } else {
        n
    }
}

/// One step of the time-compressed walk; returns the new state and the
/// number of real steps taken.
#[inline]
pub fn compressed_step<R: RngCore + ?Sized>(walk: &CompiledWalk, z: State, n: u32, rng: &mut R) -> (State, u32) {
    let k = compression_steps(walk, z, n);
    let mut w = z;
    for _ in 0..k {
        w = walk.step(w, rng);
    }
    (w, k)
}

/// `steps` compressed steps from `start`, returning the path and the real
/// elapsed time. Asserts the time-change sandwich `m ≤ T_N(m) ≤ N·m` at
/// every prefix.
pub fn compressed_trajectory<R: RngCore + ?Sized>(
    walk: &CompiledWalk,
    start: State,
    n: u32,
    steps: u64,
    rng: &mut R,
) -> (Vec<State>, u64) {
    let mut path = Vec::with_capacity(steps as usize + 1);
    path.push(start);
    let mut z = start;
    let mut real = 0u64;
    for m in 1..=steps {
        let (w, k) = compressed_step(walk, z, n, rng);
        real += k as u64;
        assert!(m <= real && real <= n as u64 * m, "time change out of bounds: m={m}, T={real}");
        z = w;
        path.push(z);
    }
    (path, real)
}

/// Passage time of the compressed walk into the ball of `radius`, counted
/// in compressed steps; the real time is asserted to stay in `[m, N·m]`.
pub fn compressed_passage_time<R: RngCore + ?Sized>(
    walk: &CompiledWalk,
    start: State,
    radius: f64,
    n: u32,
    horizon: u64,
    rng: &mut R,
) -> crate::simulate::Passage {
    use crate::simulate::Passage;
    let bound = (radius * radius).floor() as i64;
    let inside = |z: State| z.0 * z.0 + z.1 * z.1 <= bound;
    let mut z = start;
    if inside(z) {
        return Passage::Hit(0);
    }
    let mut real = 0u64;
    for m in 1..=horizon {
        let (w, k) = compressed_step(walk, z, n, rng);
        real += k as u64;
        assert!(m <= real && real <= n as u64 * m, "time change out of bounds: m={m}, T={real}");
        z = w;
        if inside(z) {
            return Passage::Hit(m);
        }
    }
    Passage::Censored
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRequest {
    pub point: State,
    pub alpha: f64,
    pub compression: u32,
    pub samples: u64,
    pub seed: u64,
    /// Use `h_b` in place of `h`.
    pub truncation: Option<f64>,
    /// Reject `point` unless it lies in this region.
    pub expected_region: Option<Region>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub point: State,
    pub region: Region,
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub samples: u64,
    pub alpha: f64,
    pub compression: u32,
    pub truncation: Option<f64>,
}

const DRIFT_BATCH: u64 = 8192;

/// Monte Carlo mean of `h^α(T Z̃₁) − h^α(T Z̃₀)` for the compressed walk
/// started at `point`.
pub fn drift_estimate(
    spec: &WalkSpec,
    walk: &CompiledWalk,
    p: &HarmonicParams,
    req: &DriftRequest,
    exec: Execution,
) -> Result<DriftEstimate, HarmonicError> {
    if !(req.alpha > 0.0) {
        return Err(HarmonicError::BadAlpha(req.alpha));
    }
    if req.samples < 2 || req.compression == 0 {
        return Err(HarmonicError::BadSampling);
    }
    let region = walk.region(req.point);
    if let Some(expected) = req.expected_region {
        if expected != region {
            return Err(HarmonicError::RegionMismatch { point: req.point, found: region, expected });
        }
    }
    let t = classify::transform_matrix(&model::covariance(spec.interior()))?;
    let f = |z: State| -> Result<f64, HarmonicError> {
        let w = t.apply(Vec2::from_lattice(z));
        let h = match req.truncation {
            Some(b) => h_truncated(w, p, b)?,
            None => h_eval(w, p)?,
        };
        Ok(h.max(0.0).powf(req.alpha))
    };
    let f0 = f(req.point)?;
    let batches = req.samples.div_ceil(DRIFT_BATCH) as usize;
    let parts = exec.map_indexed(batches, |b| -> Result<Moments<1>, HarmonicError> {
        let mut rng = rng::stream(req.seed, b as u64);
        let mut m = Moments::<1>::default();
        let len = (req.samples - b as u64 * DRIFT_BATCH).min(DRIFT_BATCH);
        for _ in 0..len {
            let (z, _) = compressed_step(walk, req.point, req.compression, &mut rng);
            m.push([f(z)? - f0]);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let m = Moments::merge_all(&parts);
    let se = m.std_error(0);
    Ok(DriftEstimate {
        point: req.point,
        region,
        mean: m.mean[0],
        std_error: se,
        ci95: (m.mean[0] - Z95 * se, m.mean[0] + Z95 * se),
        samples: m.count,
        alpha: req.alpha,
        compression: req.compression,
        truncation: req.truncation,
    })
}

/// Sign the drift is expected to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// Supermartingale: the 95% interval lies below 0.
    Negative,
    /// Submartingale on the boundaries: the 95% interval reaches 0 or above.
    NonNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub radius: f64,
    /// Shell radii as multiples of `radius`.
    pub shells: Vec<f64>,
    pub compressions: Vec<u32>,
    pub alpha: f64,
    pub samples_interior: u64,
    pub samples_boundary: u64,
    /// Interior probe directions per shell, spread over the open quadrant.
    pub interior_angles: usize,
    pub expectation: Expectation,
    pub truncation: Option<f64>,
    pub seed: u64,
    /// Fraction of probed points that must resolve the expected sign.
    pub required_fraction: f64,
}

impl SweepConfig {
    pub fn new(radius: f64, alpha: f64, expectation: Expectation, seed: u64) -> Self {
        Self {
            radius,
            shells: vec![1.0, 2.0, 4.0],
            compressions: (0..=10).map(|k| 1u32 << k).collect(),
            alpha,
            samples_interior: 1_000_000,
            samples_boundary: 20_000,
            interior_angles: 3,
            expectation,
            truncation: None,
            seed,
            required_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RegionTally {
    pub probed: usize,
    pub resolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionVerdict {
    pub compression: u32,
    pub interior: RegionTally,
    pub boundary1: RegionTally,
    pub boundary2: RegionTally,
    pub fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub params: HarmonicParams,
    pub alpha: f64,
    pub expectation: Expectation,
    pub estimates: Vec<DriftEstimate>,
    pub per_compression: Vec<CompressionVerdict>,
    pub first_passing: Option<u32>,
    pub pass: bool,
}

/// Probe points on shells of lattice radius `radius·shell`: interior points
/// at evenly spread angles, and one point per boundary row on each strip.
pub fn probe_points(depth: usize, cfg: &SweepConfig) -> Vec<State> {
    let r = depth as i64;
    let mut pts = Vec::new();
    for &m in &cfg.shells {
        let rho = cfg.radius * m;
        let far = rho.round() as i64;
        for k in 1..=cfg.interior_angles {
            let psi = FRAC_PI_2 * k as f64 / (cfg.interior_angles + 1) as f64;
            let z = ((rho * psi.cos()).round() as i64, (rho * psi.sin()).round() as i64);
            pts.push((z.0.max(r), z.1.max(r)));
        }
        for i in 0..r {
            pts.push((far.max(r), i));
            pts.push((i, far.max(r)));
        }
    }
    pts
}

fn resolved(e: &DriftEstimate, expectation: Expectation) -> bool {
    match expectation {
        Expectation::Negative => e.ci95.1 < 0.0,
        Expectation::NonNegative => e.ci95.1 >= 0.0,
    }
}

/// Runs drift estimates over all probe points and compression factors.
///
/// For [`Expectation::Negative`] a compression factor passes when at least
/// `required_fraction` of all probed points (interior and both boundaries)
/// have a 95% interval below 0. For [`Expectation::NonNegative`] only the
/// boundary points are judged, and all of them must have an interval
/// reaching 0 or above. Interior estimates do not depend on the compression
/// factor and are computed once.
pub fn drift_sweep(
    spec: &WalkSpec,
    p: &HarmonicParams,
    cfg: &SweepConfig,
    exec: Execution,
) -> Result<SweepReport, HarmonicError> {
    let walk = CompiledWalk::new(spec);
    let points = probe_points(spec.depth(), cfg);
    let mut interior_cache: Vec<Option<DriftEstimate>> = vec![None; points.len()];
    let mut estimates = Vec::new();
    let mut per_compression = Vec::new();
    for (ci, &n) in cfg.compressions.iter().enumerate() {
        let mut tallies = [RegionTally::default(); 3];
        for (pi, &z) in points.iter().enumerate() {
            let region = walk.region(z);
            let est = if region == Region::Interior {
                match interior_cache[pi] {
                    Some(e) => e,
                    None => {
                        let req = DriftRequest {
                            point: z,
                            alpha: cfg.alpha,
                            compression: 1,
                            samples: cfg.samples_interior,
                            seed: rng::stream_seed(cfg.seed, pi as u64),
                            truncation: cfg.truncation,
                            expected_region: None,
                        };
                        let e = drift_estimate(spec, &walk, p, &req, exec)?;
                        interior_cache[pi] = Some(e);
                        estimates.push(e);
                        e
                    }
                }
            } else {
                let req = DriftRequest {
                    point: z,
                    alpha: cfg.alpha,
                    compression: n,
                    samples: cfg.samples_boundary,
                    seed: rng::stream_seed(cfg.seed, ((ci as u64 + 1) << 32) | pi as u64),
                    truncation: cfg.truncation,
                    expected_region: None,
                };
                let e = drift_estimate(spec, &walk, p, &req, exec)?;
                estimates.push(e);
                e
            };
            let slot = match region {
                Region::Interior => 0,
                Region::Boundary1 => 1,
                Region::Boundary2 => 2,
                Region::Corner => continue,
            };
            tallies[slot].probed += 1;
            if resolved(&est, cfg.expectation) {
                tallies[slot].resolved += 1;
            }
        }
        let (fraction, pass) = match cfg.expectation {
            Expectation::Negative => {
                let probed: usize = tallies.iter().map(|t| t.probed).sum();
                let ok: usize = tallies.iter().map(|t| t.resolved).sum();
                let f = ok as f64 / probed.max(1) as f64;
                (f, f >= cfg.required_fraction)
            }
            Expectation::NonNegative => {
                let probed = tallies[1].probed + tallies[2].probed;
                let ok = tallies[1].resolved + tallies[2].resolved;
                let f = ok as f64 / probed.max(1) as f64;
                (f, probed > 0 && ok == probed)
            }
        };
        per_compression.push(CompressionVerdict {
            compression: n,
            interior: tallies[0],
            boundary1: tallies[1],
            boundary2: tallies[2],
            fraction,
            pass,
        });
    }
    let first_passing = per_compression.iter().find(|v| v.pass).map(|v| v.compression);
    Ok(SweepReport {
        params: *p,
        alpha: cfg.alpha,
        expectation: cfg.expectation,
        estimates,
        per_compression,
        first_passing,
        pass: first_passing.is_some(),
    })
}
