//! Small numeric helpers shared by the samplers.

use rand::Rng;

pub(crate) fn logsumexp(vals: &[f64]) -> f64 {
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = vals.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// Draws an index with probability proportional to `exp(log_w)`.
///
/// States are scanned in ascending index order so the draw is a pure
/// function of the RNG stream.
pub(crate) fn sample_log_weights(rng: &mut impl Rng, log_w: &[f64]) -> usize {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max > f64::NEG_INFINITY, "no admissible state");
    let mut total = 0.0;
    for &w in log_w {
        total += libm::exp(w - max);
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_finite = 0;
    for (idx, &w) in log_w.iter().enumerate() {
        let p = libm::exp(w - max);
        if p > 0.0 {
            last_finite = idx;
        }
        acc += p;
        if target < acc {
            return idx;
        }
    }
    last_finite
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logsumexp_handles_extremes() {
        assert_eq!(logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = logsumexp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn sampling_matches_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let log_w = [0.0, core::f64::consts::LN_2, f64::NEG_INFINITY];
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[sample_log_weights(&mut rng, &log_w)] += 1;
        }
        assert_eq!(counts[2], 0);
        let ratio = counts[1] as f64 / counts[0] as f64;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }
}
