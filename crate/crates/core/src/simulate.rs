//! Monte Carlo engine: one-step sampling, passage times, survival curves with
//! power-law tail fits, stabilization probes for the boundary drift
//! averages, and excursion-maximum probes.
//!
//! Every trial (or batch of samples) draws from its own RNG stream derived
//! from `(seed, index)`, and results are merged in index order, so output is
//! bit-identical for any execution mode and thread count.

use crate::alias::AliasTable;
use crate::exec::Execution;
use crate::linalg::Vec2;
use crate::model::{IncrementLaw, Region, Side, WalkSpec};
use crate::rational;
use crate::rng;
use crate::stats::{self, LinearFit, Moments, Z95};
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub type State = (i64, i64);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("every trial started inside the target ball; the survival curve is degenerate")]
    AllHitAtZero,
    #[error("start {start:?} is not in the {expected:?} region")]
    WrongRegion { start: State, expected: Region },
    #[error("start norm {norm} must exceed {min}")]
    StartTooClose { norm: f64, min: f64 },
    #[error("expected boundary occupation is zero; the ratio is undefined")]
    ZeroOccupation,
}

/// Alias-table form of a walk spec, built once and shared by all trials.
#[derive(Debug, Clone)]
pub struct CompiledWalk {
    r: i64,
    interior: AliasTable<State>,
    horizontal: Vec<AliasTable<State>>,
    vertical: Vec<AliasTable<State>>,
    corner: Vec<AliasTable<State>>,
}

fn table(law: &IncrementLaw) -> AliasTable<State> {
    let items: Vec<(State, f64)> =
        law.atoms().iter().map(|a| ((a.dx, a.dy), rational::to_f64(&a.prob))).collect();
    AliasTable::new(&items)
}

impl CompiledWalk {
    pub fn new(spec: &WalkSpec) -> Self {
        Self {
            r: spec.depth() as i64,
            interior: table(spec.interior()),
            horizontal: spec.horizontal().iter().map(table).collect(),
            vertical: spec.vertical().iter().map(table).collect(),
            corner: spec.corners().iter().map(table).collect(),
        }
    }

    pub fn depth(&self) -> i64 {
        self.r
    }

    pub fn region(&self, z: State) -> Region {
        match (z.0 >= self.r, z.1 >= self.r) {
            (true, true) => Region::Interior,
            (true, false) => Region::Boundary1,
            (false, true) => Region::Boundary2,
            (false, false) => Region::Corner,
        }
    }

    /// One transition from `z`, with the increment drawn from the law of
    /// the region containing `z`.
    #[inline]
    pub fn step<R: RngCore + ?Sized>(&self, z: State, rng: &mut R) -> State {
        let (x, y) = z;
        let r = self.r;
        let t = if x >= r {
            if y >= r {
                &self.interior
            } else {
                &self.horizontal[y as usize]
            }
        } else if y >= r {
            &self.vertical[x as usize]
        } else {
            &self.corner[(x * r + y) as usize]
        };
        let (dx, dy) = t.sample(rng);
        let next = (x + dx, y + dy);
        debug_assert!(next.0 >= 0 && next.1 >= 0, "left the quadrant: {z:?} -> {next:?}");
        next
    }
}

fn norm(z: State) -> f64 {
    (z.0 as f64).hypot(z.1 as f64)
}

/// `x² + y² ≤ r²` for lattice points, via the integer bound `⌊r²⌋`.
fn ball_bound(radius: f64) -> i64 {
    (radius * radius).floor() as i64
}

#[inline]
fn in_ball(z: State, bound: i64) -> bool {
    z.0 * z.0 + z.1 * z.1 <= bound
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Passage {
    Hit(u64),
    Censored,
}

/// First `n ≤ horizon` (including 0) with `‖Z_n‖ ≤ radius`.
pub fn passage_time<R: RngCore + ?Sized>(
    walk: &CompiledWalk,
    start: State,
    radius: f64,
    horizon: u64,
    rng: &mut R,
) -> Passage {
    let bound = ball_bound(radius);
    let mut z = start;
    if in_ball(z, bound) {
        return Passage::Hit(0);
    }
    for n in 1..=horizon {
        z = walk.step(z, rng);
        if in_ball(z, bound) {
            return Passage::Hit(n);
        }
    }
    Passage::Censored
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub start: State,
    pub radius: f64,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub bootstrap_resamples: usize,
}

impl SimConfig {
    pub fn new(start: State, radius: f64, horizon: u64, trials: u64, seed: u64) -> Self {
        Self { start, radius, horizon, trials, seed, bootstrap_resamples: 1000 }
    }

    pub fn check(&self, depth: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.start.0 < 0 || self.start.1 < 0 {
            return bad(format!("start {:?} is outside the quadrant", self.start));
        }
        let min = depth as f64 * std::f64::consts::SQRT_2;
        if !(self.radius > min) {
            return bad(format!("radius {} must exceed R*sqrt(2) = {min:.4}", self.radius));
        }
        if self.horizon == 0 || self.trials == 0 {
            return bad("horizon and trials must be positive".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub n: u64,
    pub survival: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval: bootstrap percentiles for simulated curves, normal
    /// approximation from the least-squares standard error for curves read
    /// from files.
    pub slope_ci: (f64, f64),
    pub fit_window: (u64, u64),
    pub points: usize,
    pub r_squared: f64,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub trials: u64,
    pub horizon: u64,
    pub hits_at_zero: u64,
    pub censored: u64,
    pub censored_fraction: f64,
    pub grid: Vec<SurvivalPoint>,
    pub survivors: Vec<u64>,
    pub fit: Option<PowerLawFit>,
    pub notes: Vec<String>,
}

impl TailEstimate {
    /// The curve as CSV `n,survival,stderr` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,survival,stderr\n");
        for p in &self.grid {
            out.push_str(&format!("{},{},{}\n", p.n, p.survival, p.stderr));
        }
        out
    }
}

/// Geometric grid `⌊1.25^k⌉` from 1 up to `horizon`, deduplicated.
pub fn survival_grid(horizon: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut x = 1.0f64;
    while x.round() as u64 <= horizon {
        let n = x.round() as u64;
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        x *= 1.25;
    }
    grid
}

/// Minimum survivors at a grid point for it to enter the fit.
pub const MIN_SURVIVORS: u64 = 100;

/// Fit window `[n_min, n_max]` as grid indices: `n_min` is the first grid
/// point at or beyond both 100 and the first point with survival ≤ 0.9;
/// `n_max` is the last point with at least 100 survivors.
fn fit_window(grid: &[u64], survival: &[f64], survivors: &[u64]) -> Option<(usize, usize)> {
    let first_drop = grid.iter().zip(survival).position(|(_, s)| *s <= 0.9)?;
    let n_min = grid[first_drop].max(100);
    let lo = grid.iter().position(|&n| n >= n_min)?;
    let hi = survivors.iter().rposition(|&c| c >= MIN_SURVIVORS)?;
    (hi >= lo + 2).then_some((lo, hi))
}

fn window_fit(grid: &[u64], survival: &[f64], lo: usize, hi: usize) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|k| (grid[k] as f64, survival[k])).collect();
    stats::fit_power_law(&pts)
}

/// Survival curve, tail fit and bootstrap interval from recorded passages.
pub fn tail_from_passages(
    passages: &[Passage],
    horizon: u64,
    bootstrap: usize,
    seed: u64,
    exec: Execution,
) -> Result<TailEstimate, SimError> {
    let trials = passages.len() as u64;
    if trials == 0 {
        return Err(SimError::InvalidConfig("no trials".to_string()));
    }
    let hits_at_zero = passages.iter().filter(|p| **p == Passage::Hit(0)).count() as u64;
    if hits_at_zero == trials {
        return Err(SimError::AllHitAtZero);
    }
    let grid = survival_grid(horizon);
    // Each trial survives exactly the grid points strictly below its
    // passage time; `bins[i]` is that count.
    let bins: Vec<u32> = passages
        .iter()
        .map(|p| match p {
            Passage::Hit(t) => grid.partition_point(|&n| n < *t) as u32,
            Passage::Censored => grid.len() as u32,
        })
        .collect();
    let survivors = survivors_from_bins(grid.len(), bins.iter().copied());
    let tf = trials as f64;
    let survival: Vec<f64> = survivors.iter().map(|&c| c as f64 / tf).collect();
    let points = grid
        .iter()
        .zip(&survival)
        .map(|(&n, &s)| SurvivalPoint { n, survival: s, stderr: (s * (1.0 - s) / tf).sqrt() })
        .collect();
    let censored = passages.iter().filter(|p| **p == Passage::Censored).count() as u64;

    let mut notes = Vec::new();
    let fit = match fit_window(&grid, &survival, &survivors) {
        None => {
            notes.push(format!(
                "no fit: need 3+ grid points in [max(100, first point with survival <= 0.9), \
                 last point with >= {MIN_SURVIVORS} survivors]"
            ));
            None
        }
        Some((lo, hi)) => window_fit(&grid, &survival, lo, hi).map(|f| {
            let boot_seed = rng::derive(seed, "bootstrap");
            let slopes = exec.map_indexed(bootstrap, |b| {
                let mut rng = rng::stream(boot_seed, b as u64);
                let resample =
                    (0..bins.len()).map(|_| bins[(rng.next_u64() % bins.len() as u64) as usize]);
                let surv = survivors_from_bins(grid.len(), resample);
                let s: Vec<f64> = surv.iter().map(|&c| c as f64 / tf).collect();
                window_fit(&grid, &s, lo, hi).map(|f| f.slope).filter(|v| v.is_finite())
            });
            let mut slopes: Vec<f64> = slopes.into_iter().flatten().collect();
            slopes.sort_by(f64::total_cmp);
            let slope_ci = if slopes.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (stats::quantile(&slopes, 0.025), stats::quantile(&slopes, 0.975))
            };
            PowerLawFit {
                slope: f.slope,
                intercept: f.intercept,
                slope_ci,
                fit_window: (grid[lo], grid[hi]),
                points: f.points,
                r_squared: f.r_squared,
                bootstrap_resamples: slopes.len(),
            }
        }),
    };
    Ok(TailEstimate {
        trials,
        horizon,
        hits_at_zero,
        censored,
        censored_fraction: censored as f64 / tf,
        grid: points,
        survivors,
        fit,
        notes,
    })
}

fn survivors_from_bins(len: usize, sample: impl Iterator<Item = u32>) -> Vec<u64> {
    let mut hist = vec![0u64; len + 1];
    for b in sample {
        hist[b as usize] += 1;
    }
    // survivors[k] = #{bin > k}
    let mut out = vec![0u64; len];
    let mut acc = 0u64;
    for k in (0..len).rev() {
        acc += hist[k + 1];
        out[k] = acc;
    }
    out
}

/// Runs `cfg.trials` independent passages and summarizes them.
pub fn survival_curve(spec: &WalkSpec, cfg: &SimConfig, exec: Execution) -> Result<TailEstimate, SimError> {
    cfg.check(spec.depth())?;
    let walk = CompiledWalk::new(spec);
    let passages = exec.map_indexed(cfg.trials as usize, |i| {
        let mut rng = rng::stream(cfg.seed, i as u64);
        passage_time(&walk, cfg.start, cfg.radius, cfg.horizon, &mut rng)
    });
    tail_from_passages(&passages, cfg.horizon, cfg.bootstrap_resamples, cfg.seed, exec)
}

/// Power-law fit of an externally supplied survival curve.
///
/// The survivor count at each point is `survival · trials`; when `trials` is
/// not given it is inferred from the binomial standard error
/// `trials ≈ s(1 − s)/stderr²`. The interval is the normal approximation
/// from the least-squares slope error.
pub fn fit_curve(points: &[SurvivalPoint], trials: Option<u64>) -> Option<PowerLawFit> {
    let trials = trials.map(|t| t as f64).or_else(|| {
        points
            .iter()
            .find(|p| p.survival > 0.0 && p.survival < 1.0 && p.stderr > 0.0)
            .map(|p| p.survival * (1.0 - p.survival) / (p.stderr * p.stderr))
    });
    let grid: Vec<u64> = points.iter().map(|p| p.n).collect();
    let survival: Vec<f64> = points.iter().map(|p| p.survival).collect();
    let survivors: Vec<u64> = match trials {
        Some(t) => survival.iter().map(|s| (s * t).round() as u64).collect(),
        None => survival.iter().map(|&s| if s > 0.0 { u64::MAX } else { 0 }).collect(),
    };
    let (lo, hi) = fit_window(&grid, &survival, &survivors)?;
    let f = window_fit(&grid, &survival, lo, hi)?;
    Some(PowerLawFit {
        slope: f.slope,
        intercept: f.intercept,
        slope_ci: (f.slope - Z95 * f.slope_se, f.slope + Z95 * f.slope_se),
        fit_window: (grid[lo], grid[hi]),
        points: f.points,
        r_squared: f.r_squared,
        bootstrap_resamples: 0,
    })
}

/// Samples per RNG stream in the batched probes.
pub const BATCH: u64 = 4096;

fn batches(samples: u64) -> usize {
    samples.div_ceil(BATCH) as usize
}

fn batch_len(samples: u64, b: usize) -> u64 {
    (samples - b as u64 * BATCH).min(BATCH)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationEstimate {
    pub side: u8,
    pub n: u64,
    pub start: State,
    pub samples: u64,
    /// Ratio of means `E[Z_n − z] / E[Σ_{t<n} 1{Z_t ∈ X_k}]`.
    pub estimate: Vec2,
    /// Delta-method standard errors of the two components.
    pub std_error: Vec2,
    pub ci95: [(f64, f64); 2],
    pub mean_displacement: Vec2,
    pub mean_occupation: f64,
}

/// Estimates the normalized `n`-step drift from a start on boundary `side`.
///
/// The start must lie in `X_k` with `‖z‖ > 2Rn`, which keeps every path
/// inside `X_k ∪ X_∘` for `n` steps.
pub fn stabilization_probe(
    spec: &WalkSpec,
    side: Side,
    n: u64,
    start: State,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<StabilizationEstimate, SimError> {
    let walk = CompiledWalk::new(spec);
    if walk.region(start) != side.region() {
        return Err(SimError::WrongRegion { start, expected: side.region() });
    }
    let min = 2.0 * spec.depth() as f64 * n as f64;
    if !(norm(start) > min) {
        return Err(SimError::StartTooClose { norm: norm(start), min });
    }
    if samples < 2 {
        return Err(SimError::InvalidConfig("need at least 2 samples".to_string()));
    }
    let target = side.region();
    let parts = exec.map_indexed(batches(samples), |b| {
        let mut rng = rng::stream(seed, b as u64);
        let mut m = Moments::<3>::default();
        for _ in 0..batch_len(samples, b) {
            let mut z = start;
            let mut occ = 0u64;
            for _ in 0..n {
                if walk.region(z) == target {
                    occ += 1;
                }
                z = walk.step(z, &mut rng);
            }
            m.push([(z.0 - start.0) as f64, (z.1 - start.1) as f64, occ as f64]);
        }
        m
    });
    let m = Moments::merge_all(&parts);
    let b = m.mean[2];
    if b <= 0.0 {
        return Err(SimError::ZeroOccupation);
    }
    let d = [m.mean[0] / b, m.mean[1] / b];
    let count = m.count as f64;
    let se: Vec<f64> = (0..2)
        .map(|j| {
            let v = m.variance(j) - 2.0 * d[j] * m.covariance(j, 2) + d[j] * d[j] * m.variance(2);
            (v.max(0.0) / count).sqrt() / b
        })
        .collect();
    Ok(StabilizationEstimate {
        side: side.index(),
        n,
        start,
        samples,
        estimate: Vec2::new(d[0], d[1]),
        std_error: Vec2::new(se[0], se[1]),
        ci95: [(d[0] - Z95 * se[0], d[0] + Z95 * se[0]), (d[1] - Z95 * se[1], d[1] + Z95 * se[1])],
        mean_displacement: Vec2::new(m.mean[0], m.mean[1]),
        mean_occupation: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionPoint {
    pub s: f64,
    pub probability: f64,
    pub stderr: f64,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionEstimate {
    pub start: State,
    pub radius: f64,
    pub trials: u64,
    pub horizon: u64,
    /// Trials that neither returned to the ball nor reached the largest `s`
    /// within the horizon.
    pub censored: u64,
    pub points: Vec<ExcursionPoint>,
    /// Log-log fit of probability against `s` over `s > ‖start‖`.
    pub fit: Option<LinearFit>,
}

/// Estimates `P(max_{n ≤ τ} ‖Z_n‖ ≥ s)` for each `s` in `s_grid`.
///
/// A trial stops as soon as it returns to the ball or exceeds the largest
/// `s`, whichever comes first; both events settle every grid point.
#[allow(clippy::too_many_arguments)]
pub fn excursion_max_probe(
    spec: &WalkSpec,
    start: State,
    radius: f64,
    s_grid: &[f64],
    trials: u64,
    horizon: u64,
    seed: u64,
    exec: Execution,
) -> Result<ExcursionEstimate, SimError> {
    if !(norm(start) > radius) {
        return Err(SimError::StartTooClose { norm: norm(start), min: radius });
    }
    if s_grid.is_empty() || trials == 0 {
        return Err(SimError::InvalidConfig("need a nonempty s grid and trials > 0".to_string()));
    }
    let walk = CompiledWalk::new(spec);
    let bound = ball_bound(radius);
    let s_max = s_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s_max_sq = s_max * s_max;
    let maxima = exec.map_indexed(trials as usize, |i| {
        let mut rng = rng::stream(seed, i as u64);
        let mut z = start;
        let mut best = (z.0 * z.0 + z.1 * z.1) as f64;
        let mut settled = best >= s_max_sq;
        let mut n = 0;
        while !settled && n < horizon {
            z = walk.step(z, &mut rng);
            n += 1;
            let q = (z.0 * z.0 + z.1 * z.1) as f64;
            best = best.max(q);
            settled = in_ball(z, bound) || best >= s_max_sq;
        }
        (best.sqrt(), settled)
    });
    let censored = maxima.iter().filter(|(_, s)| !s).count() as u64;
    let tf = trials as f64;
    let points: Vec<ExcursionPoint> = s_grid
        .iter()
        .map(|&s| {
            let hits = maxima.iter().filter(|(m, _)| *m >= s).count() as u64;
            let p = hits as f64 / tf;
            ExcursionPoint { s, probability: p, stderr: (p * (1.0 - p) / tf).sqrt(), hits }
        })
        .collect();
    let start_norm = norm(start);
    let fit_pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.s > start_norm && p.hits >= 30)
        .map(|p| (p.s, p.probability))
        .collect();
    Ok(ExcursionEstimate {
        start,
        radius,
        trials,
        horizon,
        censored,
        fit: stats::fit_power_law(&fit_pts),
        points,
    })
}
