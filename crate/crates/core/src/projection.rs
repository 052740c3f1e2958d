//! One-dimensional projection chains and their invariant measures on
//! `I_R = {0, …, R−1}`.
//!
//! Near boundary 1 the vertical coordinate evolves as a Markov chain on Z₊
//! whose rows `i < R` are the `dy`-marginals of `p₁(i; ·)` and whose rows
//! `i ≥ R` are the shift-invariant `dy`-marginal of the interior law. The
//! chain for boundary 2 uses the horizontal coordinate. The normalized
//! restriction of the chain's invariant measure to `I_R` weighs the boundary
//! drifts.
//!
//! Three solvers are offered:
//!
//! * [`embedded_exact`]: exact rational solve of the `R×R` embedded chain,
//!   valid when interior down-jumps are at most one level;
//! * [`truncated_invariant`]: the chain restricted to `{0..K}` with overflow
//!   folded onto `K`, solved by GTH state reduction, with `K` doubled until
//!   the restriction to `I_R` settles;
//! * [`occupation_mc`]: occupation-time ratios along one long trajectory.

use crate::alias::AliasTable;
use crate::model::{Axis, ModelError, Side, WalkSpec};
use crate::rational::{self, format_prob, Prob};
use crate::rng;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error(
        "exact embedded solve needs interior down-jumps of at most one level (found {min_increment}); \
         use the truncated or occupation Monte-Carlo solver instead"
    )]
    NotLeftContinuous { min_increment: i64 },
    #[error("embedded chain is reducible; state {state} gets no stationary mass")]
    Reducible { state: usize },
    #[error("row {row} of the projection chain reaches level {target} below zero")]
    NegativeTarget { row: usize, target: i64 },
    #[error("truncated invariant did not settle by level {level}: last change {last_change:e}")]
    NonConvergence { level: usize, last_change: f64 },
    #[error("truncation level {level} is below 4R = {min}")]
    TruncationTooSmall { level: usize, min: usize },
    #[error("occupation run never visited I_R")]
    NoVisits,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Transition structure of a projection chain `q_k` on Z₊.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionChain {
    r: usize,
    side: Side,
    /// Row `i < R`: law of the next level `j`.
    boundary_rows: Vec<BTreeMap<i64, Prob>>,
    /// Law of `j − i` for every `i ≥ R`.
    interior_increment: BTreeMap<i64, Prob>,
}

impl ProjectionChain {
    pub fn new(
        side: Side,
        boundary_rows: Vec<BTreeMap<i64, Prob>>,
        interior_increment: BTreeMap<i64, Prob>,
    ) -> Result<Self, ProjectionError> {
        let r = boundary_rows.len();
        if r == 0 {
            return Err(ModelError::ZeroDepth.into());
        }
        for (i, row) in boundary_rows.iter().enumerate() {
            if let Some((&j, _)) = row.iter().next() {
                if j < 0 {
                    return Err(ProjectionError::NegativeTarget { row: i, target: j });
                }
            }
            check_normalized(row)?;
        }
        check_normalized(&interior_increment)?;
        if let Some((&d, _)) = interior_increment.iter().next() {
            if d < -(r as i64) {
                return Err(ProjectionError::NegativeTarget { row: r, target: r as i64 + d });
            }
        }
        Ok(Self { r, side, boundary_rows, interior_increment })
    }

    pub fn depth(&self) -> usize {
        self.r
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn boundary_row(&self, i: usize) -> &BTreeMap<i64, Prob> {
        &self.boundary_rows[i]
    }

    pub fn interior_increment(&self) -> &BTreeMap<i64, Prob> {
        &self.interior_increment
    }

    /// Exact transition law out of level `i`.
    pub fn row(&self, i: usize) -> BTreeMap<i64, Prob> {
        if i < self.r {
            self.boundary_rows[i].clone()
        } else {
            self.interior_increment
                .iter()
                .map(|(d, p)| (i as i64 + d, p.clone()))
                .collect()
        }
    }

    /// Interior increments are at least −1.
    pub fn is_left_continuous(&self) -> bool {
        self.interior_increment.keys().next().is_some_and(|&d| d >= -1)
    }

    /// The embedded chain `q̄` on `I_R`: `q̄(i, j) = q(i, j)` for `j < R−1`,
    /// and column `R−1` collects all mass at levels `≥ R−1`.
    pub fn embedded_matrix(&self) -> Vec<Vec<Prob>> {
        let r = self.r;
        self.boundary_rows
            .iter()
            .map(|row| {
                let mut out = vec![Prob::zero(); r];
                for (&j, p) in row {
                    let col = (j as usize).min(r - 1);
                    out[col] += p;
                }
                out
            })
            .collect()
    }
}

fn check_normalized(m: &BTreeMap<i64, Prob>) -> Result<(), ProjectionError> {
    let sum = m.values().fold(Prob::zero(), |s, p| s + p);
    if sum.is_one() && m.values().all(|p| p.is_positive()) {
        Ok(())
    } else {
        Err(ModelError::NotNormalized { sum: format_prob(&sum) }.into())
    }
}

/// Builds `q_k` from a walk specification.
pub fn projection_chain(spec: &WalkSpec, side: Side) -> Result<ProjectionChain, ProjectionError> {
    let axis = match side {
        Side::One => Axis::Y,
        Side::Two => Axis::X,
    };
    let rows = (0..spec.depth())
        .map(|i| {
            spec.boundary(side, i)
                .marginal(axis)
                .into_iter()
                .map(|(d, p)| (i as i64 + d, p))
                .collect()
        })
        .collect();
    ProjectionChain::new(side, rows, spec.interior().marginal(axis))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationaryMethod {
    #[serde(rename = "exact-embedded")]
    ExactEmbedded,
    #[serde(rename = "truncated")]
    Truncated,
    #[serde(rename = "occupation-mc")]
    OccupationMc,
}

/// A probability vector on `I_R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryMeasure {
    pub weights: Vec<f64>,
    /// Exact weights, present for the exact-embedded method.
    #[serde(serialize_with = "serialize_exact", skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<Prob>>,
    pub method: StationaryMethod,
    /// Exact: 0. Truncated: last change of the `I_R` restriction under
    /// doubling. Occupation: largest batch-means standard error.
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<u64>,
    pub diagnostics: Vec<String>,
}

fn serialize_exact<S: Serializer>(v: &Option<Vec<Prob>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_seq(v.iter().map(format_prob)),
        None => s.serialize_none(),
    }
}

impl StationaryMeasure {
    /// The point mass on `I_1 = {0}`.
    pub fn trivial(method: StationaryMethod) -> Self {
        Self {
            weights: vec![1.0],
            exact: Some(vec![Prob::one()]),
            method,
            residual: 0.0,
            std_errors: None,
            trunc_level: None,
            sample_count: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Stationary distribution of the embedded chain, solved exactly.
pub fn embedded_exact(chain: &ProjectionChain) -> Result<StationaryMeasure, ProjectionError> {
    if !chain.is_left_continuous() {
        let min_increment = *chain.interior_increment.keys().next().unwrap_or(&0);
        return Err(ProjectionError::NotLeftContinuous { min_increment });
    }
    let r = chain.depth();
    if r == 1 {
        return Ok(StationaryMeasure::trivial(StationaryMethod::ExactEmbedded));
    }
    let pi = stationary_exact(&chain.embedded_matrix())?;
    Ok(StationaryMeasure {
        weights: pi.iter().map(rational::to_f64).collect(),
        exact: Some(pi),
        method: StationaryMethod::ExactEmbedded,
        residual: 0.0,
        std_errors: None,
        trunc_level: None,
        sample_count: None,
        diagnostics: Vec::new(),
    })
}

/// Solves `π Q = π`, `Σπ = 1` for a finite stochastic matrix by exact
/// Gaussian elimination. Fails unless the solution is unique and positive.
pub fn stationary_exact(q: &[Vec<Prob>]) -> Result<Vec<Prob>, ProjectionError> {
    let n = q.len();
    // Rows of (Qᵀ − I), last equation replaced by normalization.
    let mut a: Vec<Vec<Prob>> = (0..n)
        .map(|i| {
            let mut row: Vec<Prob> = (0..n).map(|j| q[j][i].clone()).collect();
            row[i] -= Prob::one();
            row.push(Prob::zero());
            row
        })
        .collect();
    a[n - 1] = vec![Prob::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(ProjectionError::Reducible { state: col })?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..=n {
            a[col][c] = &a[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    let pi: Vec<Prob> = a.into_iter().map(|row| row[n].clone()).collect();
    if let Some(state) = pi.iter().position(|p| !p.is_positive()) {
        return Err(ProjectionError::Reducible { state });
    }
    Ok(pi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationOptions {
    /// Initial level `K₀`; raised to `max(64, 8R)` if smaller than that.
    pub initial_level: usize,
    pub tol: f64,
    /// Doubling stops with an error once `K` would exceed this.
    pub max_level: usize,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self { initial_level: 64, tol: 1e-10, max_level: 1 << 20 }
    }
}

/// Invariant vector of the chain truncated to `{0..K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSolution {
    pub level: usize,
    /// Normalized to total mass 1 on `{0..K}`.
    pub full: Vec<f64>,
    /// `‖πP − π‖₁` for the truncated matrix.
    pub invariance_residual: f64,
}

impl TruncatedSolution {
    /// Restriction to `I_R`, renormalized.
    pub fn restriction(&self, r: usize) -> Vec<f64> {
        let mass: f64 = self.full[..r].iter().sum();
        self.full[..r].iter().map(|w| w / mass).collect()
    }
}

/// Banded transition matrix on `{0..K}`: row `i` stores columns
/// `i − lower ..= i + upper`.
#[derive(Clone)]
struct BandMatrix {
    k: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn cols(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        i.saturating_sub(self.lower)..=(i + self.upper).min(self.k)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j + self.lower - i]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let w = self.width();
        self.data[i * w + j + self.lower - i] += v;
    }
}

fn truncated_matrix(chain: &ProjectionChain, k: usize) -> BandMatrix {
    let r = chain.depth();
    let rows: Vec<Vec<(usize, f64)>> = (0..=k)
        .map(|i| {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            let mut push = |j: i64, p: &Prob| {
                let j = (j.max(0) as usize).min(k);
                *row.entry(j).or_insert(0.0) += rational::to_f64(p);
            };
            if i < r {
                for (&j, p) in &chain.boundary_rows[i] {
                    push(j, p);
                }
            } else {
                for (&d, p) in &chain.interior_increment {
                    push(i as i64 + d, p);
                }
            }
            row.into_iter().collect()
        })
        .collect();
    let mut lower = 0;
    let mut upper = 0;
    for (i, row) in rows.iter().enumerate() {
        for &(j, _) in row {
            if j < i {
                lower = lower.max(i - j);
            } else {
                upper = upper.max(j - i);
            }
        }
    }
    let mut m = BandMatrix { k, lower, upper, data: vec![0.0; (k + 1) * (lower + upper + 1)] };
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            m.add(i, j, p);
        }
    }
    m
}

/// Solves the truncated chain on `{0..K}` by Grassmann–Taksar–Heyman state
/// reduction, which uses no subtractions and is stable for nearly
/// decomposable chains.
pub fn solve_truncated(chain: &ProjectionChain, level: usize) -> Result<TruncatedSolution, ProjectionError> {
    let original = truncated_matrix(chain, level);
    let mut a = original.clone();
    let k = level;
    let mut exit = vec![0.0; k + 1];
    for n in (1..=k).rev() {
        let lo = n.saturating_sub(a.lower);
        let s: f64 = (lo..n).map(|j| a.get(n, j)).sum();
        if s <= 0.0 {
            return Err(ProjectionError::Reducible { state: n });
        }
        exit[n] = s;
        let first_row = n.saturating_sub(a.upper);
        for i in first_row..n {
            let f = a.get(i, n);
            if f == 0.0 {
                continue;
            }
            let f = f / s;
            for j in lo..n {
                let v = a.get(n, j);
                if v != 0.0 {
                    a.add(i, j, f * v);
                }
            }
        }
    }
    let mut pi = vec![0.0; k + 1];
    pi[0] = 1.0;
    for n in 1..=k {
        let first_row = n.saturating_sub(a.upper);
        let inflow: f64 = (first_row..n).map(|i| pi[i] * a.get(i, n)).sum();
        pi[n] = inflow / exit[n];
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|w| *w /= total);

    let mut next = vec![0.0; k + 1];
    for (i, &w) in pi.iter().enumerate() {
        for j in original.cols(i) {
            next[j] += w * original.get(i, j);
        }
    }
    let invariance_residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
    Ok(TruncatedSolution { level, full: pi, invariance_residual })
}

/// Invariant measure on `I_R` from increasingly large truncations.
pub fn truncated_invariant(
    chain: &ProjectionChain,
    opts: &TruncationOptions,
) -> Result<StationaryMeasure, ProjectionError> {
    let r = chain.depth();
    let min = 4 * r;
    if opts.initial_level < min {
        return Err(ProjectionError::TruncationTooSmall { level: opts.initial_level, min });
    }
    let mut level = opts.initial_level.max(64).max(8 * r);
    let mut prev: Option<Vec<f64>> = None;
    let mut last_change = f64::INFINITY;
    while level <= opts.max_level {
        let sol = solve_truncated(chain, level)?;
        let cur = sol.restriction(r);
        if let Some(p) = &prev {
            last_change = cur.iter().zip(p).map(|(a, b)| (a - b).abs()).sum();
            if last_change < opts.tol {
                return Ok(StationaryMeasure {
                    weights: cur,
                    exact: None,
                    method: StationaryMethod::Truncated,
                    residual: last_change,
                    std_errors: None,
                    trunc_level: Some(level),
                    sample_count: None,
                    diagnostics: vec![format!(
                        "invariance residual {:.3e} at level {level}",
                        sol.invariance_residual
                    )],
                });
            }
        }
        prev = Some(cur);
        level *= 2;
    }
    Err(ProjectionError::NonConvergence { level: level / 2, last_change })
}

/// Alias-table sampler for a projection chain.
pub(crate) struct ChainSampler {
    r: usize,
    boundary: Vec<AliasTable<i64>>,
    interior: AliasTable<i64>,
}

impl ChainSampler {
    pub(crate) fn new(chain: &ProjectionChain) -> Self {
        let table = |m: &BTreeMap<i64, Prob>| {
            let items: Vec<(i64, f64)> = m.iter().map(|(&j, p)| (j, rational::to_f64(p))).collect();
            AliasTable::new(&items)
        };
        Self {
            r: chain.depth(),
            boundary: chain.boundary_rows.iter().map(table).collect(),
            interior: table(&chain.interior_increment),
        }
    }

    #[inline]
    pub(crate) fn step<R: rand::RngCore>(&self, i: i64, rng: &mut R) -> i64 {
        if (i as usize) < self.r {
            self.boundary[i as usize].sample(rng)
        } else {
            i + self.interior.sample(rng)
        }
    }
}

/// Levels in `I_R` visited at times `0..steps`, in order, starting from 0.
pub fn visit_sequence(chain: &ProjectionChain, steps: u64, seed: u64) -> Vec<u32> {
    let sampler = ChainSampler::new(chain);
    let mut rng = rng::stream(seed, 0);
    let r = chain.depth() as i64;
    let mut visits = Vec::new();
    let mut level = 0i64;
    for _ in 0..steps {
        if level < r {
            visits.push(level as u32);
        }
        level = sampler.step(level, &mut rng);
    }
    visits
}

const BATCHES: usize = 32;

/// Occupation-ratio estimate of `π` from one trajectory of `steps` steps.
///
/// Standard errors come from batch means over consecutive `I_R` visits (the
/// visit sequence is the embedded finite chain, so batches mix well even when
/// the full chain is null recurrent).
pub fn occupation_mc(
    chain: &ProjectionChain,
    steps: u64,
    seed: u64,
) -> Result<StationaryMeasure, ProjectionError> {
    let r = chain.depth();
    if r == 1 {
        let mut m = StationaryMeasure::trivial(StationaryMethod::OccupationMc);
        m.exact = None;
        m.sample_count = Some(steps);
        m.std_errors = Some(vec![0.0]);
        return Ok(m);
    }
    let visits = visit_sequence(chain, steps, seed);
    if visits.is_empty() {
        return Err(ProjectionError::NoVisits);
    }
    let mut counts = vec![0u64; r];
    for &v in &visits {
        counts[v as usize] += 1;
    }
    let total = visits.len() as f64;
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();

    let mut std_errors = vec![f64::INFINITY; r];
    if visits.len() >= BATCHES {
        let size = visits.len() / BATCHES;
        let batch_means: Vec<Vec<f64>> = visits
            .chunks(size)
            .take(BATCHES)
            .map(|chunk| {
                let mut c = vec![0.0; r];
                for &v in chunk {
                    c[v as usize] += 1.0;
                }
                c.iter().map(|x| x / chunk.len() as f64).collect()
            })
            .collect();
        let b = batch_means.len() as f64;
        for i in 0..r {
            let mean = batch_means.iter().map(|m| m[i]).sum::<f64>() / b;
            let var = batch_means.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (b - 1.0);
            std_errors[i] = (var / b).sqrt();
        }
    }
    let mut diagnostics = Vec::new();
    if total < 1e-3 * steps as f64 {
        diagnostics.push(format!(
            "only {} of {steps} steps in I_R; the chain may be transient",
            visits.len()
        ));
    }
    if counts.contains(&0) {
        diagnostics.push("some levels of I_R were never visited".to_string());
    }
    Ok(StationaryMeasure {
        residual: std_errors.iter().copied().fold(0.0, f64::max),
        weights,
        exact: None,
        method: StationaryMethod::OccupationMc,
        std_errors: Some(std_errors),
        trunc_level: None,
        sample_count: Some(steps),
        diagnostics,
    })
}

/// Empirical transition matrix of the embedded chain, read off the visit
/// sequence of a simulated trajectory.
pub fn empirical_embedded_matrix(visits: &[u32], r: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0.0; r]; r];
    for w in visits.windows(2) {
        counts[w[0] as usize][w[1] as usize] += 1.0;
    }
    for row in &mut counts {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|c| *c /= s);
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementLaw;
    use crate::rational::ratio;

    fn chain_from(rows: &[&[(i64, i64, i64)]], interior: &[(i64, i64, i64)]) -> ProjectionChain {
        let conv = |row: &[(i64, i64, i64)]| -> BTreeMap<i64, Prob> {
            row.iter().map(|&(j, n, d)| (j, ratio(n, d))).collect()
        };
        ProjectionChain::new(Side::One, rows.iter().map(|r| conv(r)).collect(), conv(interior)).unwrap()
    }

    #[test]
    fn r_one_is_trivial() {
        let c = chain_from(&[&[(1, 1, 1)]], &[(1, 1, 2), (-1, 1, 2)]);
        let m = embedded_exact(&c).unwrap();
        assert_eq!(m.weights, vec![1.0]);
        assert_eq!(m.exact, Some(vec![ratio(1, 1)]));
        let mc = occupation_mc(&c, 1000, 1).unwrap();
        assert_eq!(mc.weights, vec![1.0]);
    }

    #[test]
    fn doubly_stochastic_embedded_chain() {
        // q̄ = [[1/2, 1/2], [1/2, 1/2]]
        let c = chain_from(&[&[(0, 1, 2), (1, 1, 2)], &[(0, 1, 2), (2, 1, 2)]], &[(1, 1, 2), (-1, 1, 2)]);
        let m = embedded_exact(&c).unwrap();
        assert_eq!(m.exact, Some(vec![ratio(1, 2), ratio(1, 2)]));
    }

    #[test]
    fn hand_solved_two_state_chain() {
        // q̄ = [[1/3, 2/3], [1/2, 1/2]] ⇒ π = (3/7, 4/7)
        let c = chain_from(&[&[(0, 1, 3), (1, 1, 3), (3, 1, 3)], &[(0, 1, 2), (1, 1, 2)]], &[(1, 1, 2), (-1, 1, 2)]);
        let q = c.embedded_matrix();
        assert_eq!(q[0], vec![ratio(1, 3), ratio(2, 3)]);
        let m = embedded_exact(&c).unwrap();
        assert_eq!(m.exact, Some(vec![ratio(3, 7), ratio(4, 7)]));
    }

    #[test]
    fn exact_rejects_long_down_jumps() {
        let c = chain_from(&[&[(1, 1, 1)], &[(0, 1, 1)]], &[(-2, 1, 3), (1, 2, 3)]);
        assert_eq!(embedded_exact(&c), Err(ProjectionError::NotLeftContinuous { min_increment: -2 }));
    }

    #[test]
    fn reducible_embedded_chain_is_reported() {
        // State 1 never returns to 0 and row 0 is absorbing within I_R.
        let q = vec![vec![ratio(1, 1), ratio(0, 1)], vec![ratio(0, 1), ratio(1, 1)]];
        assert!(matches!(stationary_exact(&q), Err(ProjectionError::Reducible { .. })));
    }

    #[test]
    fn projection_rows_are_marginals() {
        let interior =
            IncrementLaw::from_ratios(&[(1, 1, 1, 4), (-1, 1, 1, 4), (1, -1, 1, 4), (-1, -1, 1, 4)]).unwrap();
        let up = IncrementLaw::from_ratios(&[(1, 1, 1, 2), (-1, 1, 1, 2)]).unwrap();
        let right = IncrementLaw::from_ratios(&[(1, 1, 1, 2), (1, -1, 1, 2)]).unwrap();
        let spec = WalkSpec::with_default_corners(1, interior, vec![up], vec![right]).unwrap();
        let c = projection_chain(&spec, Side::One).unwrap();
        assert_eq!(c.boundary_row(0), &BTreeMap::from([(1, ratio(1, 1))]));
        assert_eq!(c.interior_increment(), &BTreeMap::from([(-1, ratio(1, 2)), (1, ratio(1, 2))]));
        assert_eq!(c.row(5), BTreeMap::from([(4, ratio(1, 2)), (6, ratio(1, 2))]));
    }

    #[test]
    fn reflected_srw_truncation_is_nearly_uniform() {
        let c = chain_from(&[&[(1, 1, 1)]], &[(1, 1, 2), (-1, 1, 2)]);
        let sol = solve_truncated(&c, 64).unwrap();
        // Counting measure, up to the reflecting ends: interior levels share one value.
        let mid = sol.full[10];
        for w in &sol.full[1..64] {
            assert!((w - mid).abs() < 1e-12 * 64.0, "{w} vs {mid}");
        }
        assert!(sol.invariance_residual < 1e-12);
        let m = truncated_invariant(&c, &TruncationOptions::default()).unwrap();
        assert_eq!(m.weights, vec![1.0]);
    }

    #[test]
    fn truncated_agrees_with_exact_on_left_continuous_chain() {
        let c = chain_from(
            &[&[(0, 1, 4), (1, 1, 4), (3, 1, 2)], &[(0, 1, 3), (1, 1, 3), (2, 1, 3)], &[(1, 1, 2), (4, 1, 2)]],
            &[(-1, 2, 3), (2, 1, 3)],
        );
        let exact = embedded_exact(&c).unwrap();
        let trunc = truncated_invariant(&c, &TruncationOptions::default()).unwrap();
        for (a, b) in exact.weights.iter().zip(&trunc.weights) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(trunc.min_weight() > 0.0);
    }

    #[test]
    fn truncation_level_must_cover_4r() {
        let c = chain_from(&[&[(1, 1, 1)], &[(0, 1, 1)], &[(1, 1, 1)]], &[(1, 1, 2), (-1, 1, 2)]);
        let opts = TruncationOptions { initial_level: 8, ..Default::default() };
        assert_eq!(
            truncated_invariant(&c, &opts),
            Err(ProjectionError::TruncationTooSmall { level: 8, min: 12 })
        );
    }

    #[test]
    fn doubling_budget_exhaustion_is_an_error() {
        let c = chain_from(&[&[(1, 1, 1)], &[(0, 1, 2), (3, 1, 2)]], &[(-2, 1, 3), (1, 2, 3)]);
        let opts = TruncationOptions { initial_level: 64, tol: 0.0, max_level: 256 };
        assert!(matches!(
            truncated_invariant(&c, &opts),
            Err(ProjectionError::NonConvergence { level: 256, .. })
        ));
    }

    #[test]
    fn occupation_estimate_is_reproducible() {
        let c = chain_from(&[&[(0, 1, 3), (1, 1, 3), (3, 1, 3)], &[(0, 1, 2), (1, 1, 2)]], &[(1, 1, 2), (-1, 1, 2)]);
        let a = occupation_mc(&c, 100_000, 5).unwrap();
        let b = occupation_mc(&c, 100_000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sample_count, Some(100_000));
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
