//! Simulation checks against exact oracles: step frequencies, the embedded
//! boundary chain seen by the full walk, and the time-compressed walk.

use quadwalk::harmonic::compressed_passage_time;
use quadwalk::model::{IncrementLaw, Side, WalkSpec};
use quadwalk::rational;
use quadwalk::rng;
use quadwalk::simulate::{passage_time, tail_from_passages, CompiledWalk, Passage};
use quadwalk::walks::{self, Reflection};
use quadwalk::{classify, ClassifyOptions, Execution, StationarySolver};
use std::collections::BTreeMap;

fn rho_half() -> IncrementLaw {
    IncrementLaw::from_ratios(&[(1, 1, 3, 8), (-1, -1, 3, 8), (1, -1, 1, 8), (-1, 1, 1, 8)]).unwrap()
}

/// Upper 1% point of χ²(k) via the Wilson–Hilferty approximation.
fn chi2_crit_99(k: usize) -> f64 {
    let k = k as f64;
    let z = 2.326_347_874;
    let c = 2.0 / (9.0 * k);
    k * (1.0 - c + z * c.sqrt()).powi(3)
}

/// Pearson statistic of observed step counts against a law.
fn pearson(counts: &BTreeMap<(i64, i64), u64>, law: &IncrementLaw, n: u64) -> (f64, usize) {
    let mut stat = 0.0;
    for a in law.atoms() {
        let e = n as f64 * rational::to_f64(&a.prob);
        let o = *counts.get(&(a.dx, a.dy)).unwrap_or(&0) as f64;
        stat += (o - e).powi(2) / e;
    }
    let support: usize = counts.keys().filter(|k| !law.atoms().iter().any(|a| (a.dx, a.dy) == **k)).count();
    assert_eq!(support, 0, "steps outside the law's support");
    (stat, law.len() - 1)
}

#[test]
fn step_frequencies_match_direct_fold() {
    let zeta = IncrementLaw::from_ratios(&[
        (2, -1, 1, 8),
        (-2, 1, 1, 8),
        (1, 2, 1, 8),
        (-1, -2, 1, 8),
        (1, 0, 1, 8),
        (-1, 0, 1, 8),
        (0, 1, 1, 8),
        (0, -1, 1, 8),
    ])
    .unwrap();
    let n = 200_000u64;
    for kind in [Reflection::Lindley, Reflection::Mirror] {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let walk = CompiledWalk::new(&spec);
        for (k, z) in [(0, 0), (1, 0), (0, 1), (1, 1), (5, 0), (5, 1), (0, 5), (1, 5), (7, 7)].into_iter().enumerate() {
            let law = walks::folded_law(&zeta, z, kind).unwrap();
            let mut rng = rng::stream(99, k as u64);
            let mut counts = BTreeMap::new();
            for _ in 0..n {
                let w = walk.step(z, &mut rng);
                *counts.entry((w.0 - z.0, w.1 - z.1)).or_insert(0u64) += 1;
            }
            let (stat, df) = pearson(&counts, &law, n);
            if df > 0 {
                assert!(stat < chi2_crit_99(df), "{kind:?} at {z:?}: chi2 {stat:.2} on {df} df");
            }
        }
    }
}

/// R = 3 model whose boundary rows drift in different directions.
fn three_row_model() -> WalkSpec {
    let interior = IncrementLaw::from_ratios(&[(1, 0, 1, 4), (-1, 0, 1, 4), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap();
    let rows = vec![
        IncrementLaw::from_ratios(&[(1, 0, 1, 2), (0, 1, 1, 2)]).unwrap(),
        IncrementLaw::from_ratios(&[(1, 0, 1, 3), (0, 1, 1, 3), (0, -1, 1, 3)]).unwrap(),
        IncrementLaw::from_ratios(&[(-1, 0, 1, 2), (0, 1, 1, 4), (0, -1, 1, 4)]).unwrap(),
    ];
    let cols = rows.iter().map(IncrementLaw::transposed).collect();
    WalkSpec::with_default_corners(3, interior, rows, cols).unwrap()
}

fn stationary_vector(q: &[Vec<f64>]) -> Vec<f64> {
    let r = q.len();
    let mut v = vec![1.0 / r as f64; r];
    for _ in 0..10_000 {
        let mut w = vec![0.0; r];
        for i in 0..r {
            for j in 0..r {
                w[j] += v[i] * q[i][j];
            }
        }
        v = w;
    }
    v
}

#[test]
fn full_walk_boundary_visits_follow_embedded_chain() {
    let spec = three_row_model();
    let rep = classify(
        &spec,
        &ClassifyOptions { solver: StationarySolver::Exact, ..ClassifyOptions::default() },
    )
    .unwrap();
    let exact = &rep.pi1.weights;
    let r = spec.depth();
    let walk = CompiledWalk::new(&spec);

    // Started far along the horizontal axis, the walk stays in x ≥ R for the
    // whole run, so its y-coordinate below R is the embedded boundary chain.
    let batches = 20;
    let steps_per_batch = 400_000u64;
    let estimates: Vec<Vec<f64>> = Execution::default().map_indexed(batches, |b| {
        let mut rng = rng::stream(7, b as u64);
        let mut z = (1_000_000i64, 0i64);
        let mut visits = Vec::new();
        for _ in 0..steps_per_batch {
            if (z.1 as usize) < r {
                visits.push(z.1 as u32);
            }
            z = walk.step(z, &mut rng);
            assert!(z.0 >= r as i64);
        }
        stationary_vector(&quadwalk::projection::empirical_embedded_matrix(&visits, r))
    });
    for i in 0..r {
        let xs: Vec<f64> = estimates.iter().map(|v| v[i]).collect();
        let mean = xs.iter().sum::<f64>() / batches as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches as f64 - 1.0)).sqrt();
        let se = sd / (batches as f64).sqrt();
        assert!((mean - exact[i]).abs() <= 3.0 * se, "level {i}: {mean} vs {} (se {se})", exact[i]);
    }
}

#[test]
fn exact_measure_is_invariant_for_embedded_matrix() {
    let spec = three_row_model();
    let chain = quadwalk::projection::projection_chain(&spec, Side::One).unwrap();
    let q = chain.embedded_matrix();
    let pi = quadwalk::projection::stationary_exact(&q).unwrap();
    for j in 0..q.len() {
        let lhs = pi.iter().zip(&q).fold(rational::ratio(0, 1), |s, (p, row)| s + p * &row[j]);
        assert_eq!(lhs, pi[j]);
    }
}

#[test]
fn compression_by_one_is_the_original_walk() {
    let spec = walks::mirror_spec(&rho_half()).unwrap();
    let walk = CompiledWalk::new(&spec);
    for k in 0..200 {
        let a = passage_time(&walk, (15, 12), 6.0, 50_000, &mut rng::stream(3, k));
        let b = compressed_passage_time(&walk, (15, 12), 6.0, 1, 50_000, &mut rng::stream(3, k));
        assert_eq!(a, b);
    }
}

#[test]
fn compressed_walk_has_the_same_tail_exponent() {
    // Compression only changes time on the boundary strips, where the walk
    // spends a vanishing fraction of its time, so the tail exponents of the
    // passage times agree.
    let spec = walks::mirror_spec(&rho_half()).unwrap();
    let walk = CompiledWalk::new(&spec);
    let (start, radius, horizon, trials) = ((20, 20), 6.0, 100_000u64, 20_000usize);
    let run = |n: u32| -> Vec<Passage> {
        Execution::default().map_indexed(trials, |k| {
            compressed_passage_time(&walk, start, radius, n, horizon, &mut rng::stream(11 + n as u64, k as u64))
        })
    };
    let slope = |p: &[Passage]| {
        tail_from_passages(p, horizon, 0, 1, Execution::default()).unwrap().fit.expect("fit window").slope
    };
    let s1 = slope(&run(1));
    let s8 = slope(&run(8));
    assert!((s1 - s8).abs() < 0.05, "slopes {s1} vs {s8}");
    assert!((s1 + 0.25).abs() < 0.07, "slope {s1}");
}
