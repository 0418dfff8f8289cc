//! Order-independent accumulation for Monte Carlo drivers.
//!
//! Samples are processed in fixed-size batches keyed by sample index; each
//! batch is reduced sequentially and the batch results are combined in
//! index order. The result therefore does not depend on how many worker
//! threads executed the batches.

use rayon::prelude::*;

/// Number of samples reduced sequentially inside one work item.
pub const BATCH: u64 = 256;

/// Componentwise running mean and sum of squared deviations (Welford;
/// batches merge with the pairwise update of Chan et al.).
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((mu, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mu;
            *mu += delta / n;
            *m2 += delta * (v - *mu);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> Vec<f64> {
        self.mean.clone()
    }

    /// Standard error of each component mean (sample deviation / √n).
    pub fn stderr(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|m2| (m2.max(0.0) / (n - 1.0) / n).sqrt())
            .collect()
    }
}

/// Runs `sample(index, out)` for every index in `0..samples` and returns the
/// accumulated moments. Deterministic for any rayon pool size.
pub fn batched_moments<F>(samples: u64, dim: usize, sample: F) -> Moments
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let batches = samples.div_ceil(BATCH);
    let partial: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(dim);
            let mut buf = vec![0.0; dim];
            let end = ((b + 1) * BATCH).min(samples);
            for i in b * BATCH..end {
                buf.iter_mut().for_each(|x| *x = 0.0);
                sample(i, &mut buf);
                m.push(&buf);
            }
            m
        })
        .collect();
    let mut total = Moments::new(dim);
    for m in &partial {
        total.merge(m);
    }
    total
}

/// SplitMix64 finalizer; used to derive independent sub-seeds.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a parent seed and a stream label.
#[inline]
pub fn sub_seed(seed: u64, label: u64) -> u64 {
    mix64(seed ^ mix64(label.wrapping_add(0x5EED)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_moments_independent_of_pool_size() {
        let f = |i: u64, out: &mut [f64]| {
            out[0] = (mix64(i) % 1000) as f64 / 7.0;
            out[1] = 1.0;
        };
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| batched_moments(5000, 2, f));
        let b = pool4.install(|| batched_moments(5000, 2, f));
        assert_eq!(a, b);
        assert_eq!(a.count, 5000);
        assert_eq!(a.mean()[1], 1.0);
        assert_eq!(a.stderr()[1], 0.0);
    }

    #[test]
    fn stderr_of_two_point_sample() {
        let mut m = Moments::new(1);
        m.push(&[0.0]);
        m.push(&[2.0]);
        // sample variance 2, stderr sqrt(2/2)
        assert!((m.stderr()[0] - 1.0).abs() < 1e-15);
    }
}
