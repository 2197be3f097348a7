use rand::Rng;

use super::JunctionError;

/// Means above this underflow `exp(-mean)` long before f64 does, so inversion
/// is no longer exact.
pub const MAX_POISSON_MEAN: f64 = 700.0;

/// Draws `k ~ Poisson(mean)` by inverting the cumulative distribution with a
/// single uniform draw.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64, JunctionError> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(JunctionError::PoissonMean(mean));
    }
    if mean > MAX_POISSON_MEAN {
        return Err(JunctionError::PoissonMean(mean));
    }
    let u: f64 = rng.gen();
    if mean == 0.0 {
        return Ok(0);
    }
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // Tail mass lost to rounding: stop once terms vanish past the mode.
        if p == 0.0 && k as f64 > mean {
            break;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mean_is_always_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sample_poisson(&mut rng, 0.0).unwrap() == 0));
    }

    #[test]
    fn negative_mean_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_poisson(&mut rng, -0.1).is_err());
        assert!(sample_poisson(&mut rng, f64::NAN).is_err());
    }

    #[test]
    fn desk_mean_matches_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mean = 0.15;
        let total: u64 = (0..n).map(|_| sample_poisson(&mut rng, mean).unwrap()).sum();
        let emp = total as f64 / n as f64;
        let sigma = (mean / n as f64).sqrt();
        assert!((emp - mean).abs() < 3.0 * sigma, "empirical mean {emp}");
    }

    #[test]
    fn large_mean_stays_near_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let total: u64 = (0..n).map(|_| sample_poisson(&mut rng, 50.0).unwrap()).sum();
        let emp = total as f64 / n as f64;
        assert!((emp - 50.0).abs() < 3.0 * (50.0 / n as f64).sqrt());
    }
}
