//! Walker/Vose alias tables for O(1) sampling from finite distributions.

use rand::RngCore;

/// Alias table over values of type `T`.
///
/// A single 64-bit draw picks both the column (high 32 bits, multiply-shift)
/// and the acceptance coin (low 32 bits, compared against a fixed-point
/// threshold).
#[derive(Debug, Clone)]
pub struct AliasTable<T> {
    values: Vec<T>,
    threshold: Vec<u64>,
    alias: Vec<u32>,
}

const SCALE: f64 = 4_294_967_296.0; // 2^32

impl<T: Copy> AliasTable<T> {
    /// Builds the table from `(value, weight)` pairs; weights need not be
    /// normalized but must be nonnegative with a positive sum.
    pub fn new(items: &[(T, f64)]) -> Self {
        assert!(!items.is_empty(), "alias table needs at least one item");
        assert!(items.len() <= u32::MAX as usize);
        let n = items.len();
        let total: f64 = items.iter().map(|(_, w)| *w).sum();
        assert!(total > 0.0 && total.is_finite(), "weights must have a positive finite sum");
        let mut scaled: Vec<f64> = items.iter().map(|(_, w)| w / total * n as f64).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            scaled[i] = 1.0;
        }
        let threshold = scaled
            .iter()
            .map(|&p| (p * SCALE).round().clamp(0.0, SCALE) as u64)
            .collect();
        Self { values: items.iter().map(|(v, _)| *v).collect(), threshold, alias }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> T {
        let u = rng.next_u64();
        let col = (((u >> 32) * self.values.len() as u64) >> 32) as usize;
        if (u & 0xFFFF_FFFF) < self.threshold[col] {
            self.values[col]
        } else {
            self.values[self.alias[col] as usize]
        }
    }

    /// Exact probability the sampler assigns to each column value, as
    /// implied by the fixed-point thresholds.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        let mut p = vec![0.0; self.values.len()];
        for i in 0..self.values.len() {
            let keep = self.threshold[i] as f64 / SCALE;
            p[i] += keep / n;
            p[self.alias[i] as usize] += (1.0 - keep) / n;
        }
        p
    }
}
