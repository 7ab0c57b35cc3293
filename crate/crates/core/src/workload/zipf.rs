//! Inverse-CDF Zipf sampler over ranks `1..=n`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipfParams {
    pub n: u32,
    pub alpha: f64,
}

impl ZipfParams {
    pub fn new(n: u32, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Workload("zipf: catalog size must be positive".into()));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Workload(format!("zipf: alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(ZipfParams { n, alpha })
    }

    /// `pmf[i - 1]` is the probability of rank `i`.
    pub fn pmf(&self) -> Vec<f64> {
        let weights: Vec<f64> = (1..=self.n).map(|i| (i as f64).powf(-self.alpha)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ZipfSampler {
    cdf: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(params: ZipfParams) -> Result<Self> {
        let params = ZipfParams::new(params.n, params.alpha)?;
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = params
            .pmf()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().expect("n > 0") = 1.0;
        Ok(ZipfSampler { cdf })
    }

    pub fn n(&self) -> u32 {
        self.cdf.len() as u32
    }

    /// Draws a rank in `1..=n`, consuming exactly one `f64` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u32 + 1
    }
}

/// One-shot draw; builds the CDF table each call, so prefer [`ZipfSampler`]
/// in loops.
pub fn zipf_sample<R: Rng + ?Sized>(rng: &mut R, params: ZipfParams) -> Result<u32> {
    Ok(ZipfSampler::new(params)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uniform_when_alpha_zero() {
        let pmf = ZipfParams::new(4, 0.0).unwrap().pmf();
        assert!(pmf.iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn two_ranks_alpha_one() {
        // weights 1 and 1/2 normalise to 2/3 and 1/3
        let pmf = ZipfParams::new(2, 1.0).unwrap().pmf();
        assert!((pmf[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((pmf[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pmf_normalised() {
        for &n in &[1u32, 2, 10, 100, 10_000] {
            for &alpha in &[0.0, 0.5, 0.8, 1.0, 1.5, 3.0] {
                let sum: f64 = ZipfParams::new(n, alpha).unwrap().pmf().iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "n={n} alpha={alpha} sum={sum}");
            }
        }
    }

    #[test]
    fn rejects_empty_and_negative() {
        assert!(ZipfParams::new(0, 1.0).is_err());
        assert!(ZipfParams::new(5, -0.1).is_err());
        assert!(ZipfSampler::new(ZipfParams { n: 0, alpha: 1.0 }).is_err());
    }

    #[test]
    fn samples_in_range_and_deterministic() {
        let s = ZipfSampler::new(ZipfParams::new(7, 1.2).unwrap()).unwrap();
        let mut a = rng::stream(3, "z");
        let mut b = rng::stream(3, "z");
        for _ in 0..1000 {
            let x = s.sample(&mut a);
            assert!((1..=7).contains(&x));
            assert_eq!(x, s.sample(&mut b));
        }
    }

    /// Pearson chi-square goodness of fit; 148.23 is the 0.999 quantile of
    /// chi-square with 99 degrees of freedom.
    #[test]
    fn empirical_matches_theory() {
        for alpha in [0.6, 1.0] {
            let params = ZipfParams::new(100, alpha).unwrap();
            let s = ZipfSampler::new(params).unwrap();
            let pmf = params.pmf();
            for seed in 0..3 {
                let mut rng = rng::stream(seed, "zipf-check");
                let mut counts = vec![0u32; 100];
                let draws = 100_000;
                for _ in 0..draws {
                    counts[s.sample(&mut rng) as usize - 1] += 1;
                }
                let chi2: f64 = counts
                    .iter()
                    .zip(&pmf)
                    .map(|(&c, &p)| {
                        let expected = p * draws as f64;
                        (c as f64 - expected).powi(2) / expected
                    })
                    .sum();
                assert!(chi2 < 148.23, "alpha {alpha} seed {seed}: chi2 {chi2}");
            }
        }
    }
}
