//! Deterministic, seedable randomness and the base samplers everything else
//! builds on.
//!
//! [`RngStream`] is a `(seed, stream_id)` label for a counter-based ChaCha
//! stream. The same label always yields the bit-identical sample sequence;
//! distinct stream ids under one seed are independent streams, so parallel
//! Monte Carlo loops assign one substream per work item and reduce in a
//! fixed order to stay schedule-independent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// SplitMix64 finalizer; used to derive substream labels.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Label of a reproducible random stream.
///
/// `rng()` instantiates the generator at counter zero; calling it twice on
/// the same label replays the same sequence. Use [`RngStream::substream`] to
/// derive independent child streams for parallel work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derive the `child`-th substream. The mapping mixes the parent label
    /// through SplitMix64 so that nested derivations do not collide for any
    /// realistic tree of work items.
    pub fn substream(&self, child: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(child.wrapping_add(1))),
        }
    }

    /// Instantiate the ChaCha stream this label names.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draw from N(mean, sd²). `sd = 0` returns `mean` exactly.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if !(sd >= 0.0) {
        return Err(Error::InvalidParameter(format!("normal sd must be >= 0, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

/// Draw from Gamma(shape, rate) with mean shape/rate.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma parameters must be positive, got shape {shape}, rate {rate}"
        )));
    }
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("gamma: {e}")))?;
    Ok(dist.sample(rng))
}

/// Draw from Poisson(intensity). `intensity = 0` returns 0.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, intensity: f64) -> Result<u64> {
    if !(intensity >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "poisson intensity must be >= 0, got {intensity}"
        )));
    }
    if intensity == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(intensity)
        .map_err(|e| Error::InvalidParameter(format!("poisson: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Draw from Student's t with `dof` degrees of freedom.
pub fn sample_student_t<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(Error::InvalidParameter(format!("t dof must be positive, got {dof}")));
    }
    let dist =
        StudentT::new(dof).map_err(|e| Error::InvalidParameter(format!("student t: {e}")))?;
    Ok(dist.sample(rng))
}

/// Lower-triangular factor of a covariance matrix, with the diagonal jitter
/// that was needed to factorize it.
#[derive(Clone, Debug)]
pub struct MvnFactor {
    dim: usize,
    /// Row-major `dim x dim`, upper triangle zero.
    lower: Vec<f64>,
    jitter_used: f64,
}

impl MvnFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
}

/// Cholesky of a symmetric PSD matrix allowing exact zero pivots
/// (rank-deficient inputs). Returns the factor and the max |LLᵀ - a| entry...
/// none: returns None when a pivot is materially negative.
fn cholesky_psd(a: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    // Pivot tolerance relative to the largest diagonal entry.
    let scale = (0..dim).map(|i| a[i * dim + i].abs()).fold(0.0_f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if d > tol {
            let dj = d.sqrt();
            l[j * dim + j] = dj;
            for i in (j + 1)..dim {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                l[i * dim + j] = s / dj;
            }
        } else if d >= -tol {
            // Semidefinite direction: zero pivot, zero column below.
            l[j * dim + j] = 0.0;
        } else {
            return None;
        }
    }
    Some(l)
}

fn frobenius_rel_err(l: &[f64], a: &[f64], jitter: f64, dim: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..dim {
        for j in 0..=i {
            let mut recomposed = 0.0;
            for k in 0..=j {
                recomposed += l[i * dim + k] * l[j * dim + k];
            }
            let target = a[i * dim + j] + if i == j { jitter } else { 0.0 };
            let w = if i == j { 1.0 } else { 2.0 };
            num += w * (recomposed - target) * (recomposed - target);
            den += w * target * target;
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Escalating diagonal jitter, relative to the mean diagonal entry.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Factorize a symmetric covariance matrix (row-major `dim x dim`) as
/// `L Lᵀ = Σ + jitter·I`, climbing the jitter ladder until the recomposition
/// error drops below 1e-8 relative Frobenius.
pub fn mvn_factorize(cov: &[f64], dim: usize) -> Result<MvnFactor> {
    if dim == 0 || cov.len() != dim * dim {
        return Err(Error::InvalidParameter(format!(
            "covariance must be dim*dim with dim >= 1, got len {} for dim {}",
            cov.len(),
            dim
        )));
    }
    let mean_diag = (0..dim).map(|i| cov[i * dim + i]).sum::<f64>() / dim as f64;
    let mut best_residual = f64::INFINITY;
    for rel in JITTER_LADDER {
        let jitter = rel * mean_diag;
        let mut a = cov.to_vec();
        for i in 0..dim {
            a[i * dim + i] += jitter;
        }
        if let Some(l) = cholesky_psd(&a, dim) {
            let residual = frobenius_rel_err(&l, cov, jitter, dim);
            if residual <= 1e-8 {
                return Ok(MvnFactor { dim, lower: l, jitter_used: jitter });
            }
            best_residual = best_residual.min(residual);
        }
    }
    Err(Error::FactorizationFailed { dim, residual: best_residual })
}

/// One draw `mean + L z` with iid standard normal `z`.
pub fn mvn_sample<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &[f64],
    factor: &MvnFactor,
) -> Result<Vec<f64>> {
    let dim = factor.dim;
    if mean.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: mean.len() });
    }
    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let mut out = mean.to_vec();
    for i in 0..dim {
        let mut acc = 0.0;
        for k in 0..=i {
            acc += factor.lower[i * dim + k] * z[k];
        }
        out[i] += acc;
    }
    Ok(out)
}

/// Sum `values` in fixed pairwise order; the result does not depend on how
/// the caller chunked the work, which keeps parallel reductions deterministic.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn same_stream_is_bit_identical() {
        let s = RngStream::new(123).substream(7);
        let a: Vec<u64> = (0..32).map({ let mut r = s.rng(); move |_| r.gen() }).collect();
        let b: Vec<u64> = (0..32).map({ let mut r = s.rng(); move |_| r.gen() }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ_and_nested_derivation_is_stable() {
        let s = RngStream::new(9);
        assert_ne!(s.substream(0), s.substream(1));
        assert_ne!(s.substream(0).substream(1), s.substream(1).substream(0));
        assert_eq!(s.substream(3).substream(4), s.substream(3).substream(4));
    }

    #[test]
    fn substream_outputs_are_uncorrelated() {
        let base = RngStream::new(42);
        let mut r1 = base.substream(1).rng();
        let mut r2 = base.substream(2).rng();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let a = sample_normal(&mut r1, 0.0, 1.0).unwrap();
            let b = sample_normal(&mut r2, 0.0, 1.0).unwrap();
            sum += a * b;
        }
        let corr = sum / n as f64;
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn degenerate_normal_returns_mean() {
        let mut rng = RngStream::new(0).rng();
        assert_eq!(sample_normal(&mut rng, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(sample_normal(&mut rng, 2.5, 0.0).unwrap(), 2.5);
    }

    #[test]
    fn normal_law_of_large_numbers() {
        let mut rng = RngStream::new(1).rng();
        let n = 1_000_000usize;
        let draws: Vec<f64> =
            (0..n).map(|_| sample_normal(&mut rng, 3.0, 2.0).unwrap()).collect();
        let mean = pairwise_sum(&draws) / n as f64;
        // 5 sd / sqrt(n) margin
        assert!((mean - 3.0).abs() < 0.01, "mean = {mean}");
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((var - 4.0).abs() < 0.05, "var = {var}");
    }

    #[test]
    fn gamma_moments_and_support() {
        let mut rng = RngStream::new(2).rng();
        let n = 1_000_000usize;
        let draws: Vec<f64> = (0..n).map(|_| sample_gamma(&mut rng, 4.0, 12.0).unwrap()).collect();
        let mean = pairwise_sum(&draws) / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.005, "mean = {mean}");
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((var - 4.0 / 144.0).abs() < 0.002, "var = {var}");

        // shape < 1 stays strictly positive
        for _ in 0..10_000 {
            assert!(sample_gamma(&mut rng, 0.5, 1.0).unwrap() > 0.0);
        }
        assert!(sample_gamma(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_gamma(&mut rng, 1.0, -1.0).is_err());
    }

    #[test]
    fn poisson_moments_and_zero() {
        let mut rng = RngStream::new(3).rng();
        assert_eq!(sample_poisson(&mut rng, 0.0).unwrap(), 0);
        assert!(sample_poisson(&mut rng, -1.0).is_err());
        let n = 1_000_000usize;
        let mut sum = 0u64;
        let mut zeros = 0usize;
        for _ in 0..n {
            let k = sample_poisson(&mut rng, 3.0).unwrap();
            sum += k;
            if k == 0 {
                zeros += 1;
            }
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.01, "mean = {mean}");
        let p0 = zeros as f64 / n as f64;
        assert!((p0 - (-3.0f64).exp()).abs() < 0.002, "p0 = {p0}");
    }

    #[test]
    fn student_t_symmetry_and_variance() {
        let mut rng = RngStream::new(4).rng();
        let n = 1_000_000usize;
        let mut draws: Vec<f64> =
            (0..n).map(|_| sample_student_t(&mut rng, 3.0).unwrap()).collect();
        draws.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (draws[n / 2 - 1] + draws[n / 2]);
        assert!(median.abs() < 0.01, "median = {median}");
        let cdf0 = draws.iter().filter(|&&x| x <= 0.0).count() as f64 / n as f64;
        assert!((cdf0 - 0.5).abs() < 0.005, "cdf0 = {cdf0}");
        let mean = pairwise_sum(&draws) / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((var - 3.0).abs() < 0.2, "var = {var}");
        assert!(sample_student_t(&mut rng, 0.0).is_err());
    }

    #[test]
    fn factorize_identity_and_diagonal() {
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let f = mvn_factorize(&eye, 3).unwrap();
        assert_eq!(f.jitter_used(), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(f.lower()[i * 3 + j], expect, epsilon = 1e-14);
            }
        }
        let d = [4.0, 0.0, 0.0, 9.0];
        let f = mvn_factorize(&d, 2).unwrap();
        assert_relative_eq!(f.lower()[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.lower()[3], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn factorize_matern_collinear_points_recomposes() {
        // Matérn-1.5 covariance on 5 collinear points.
        let pts: Vec<f64> = (0..5).map(|i| 0.3 * i as f64).collect();
        let model = crate::grf::CovarianceModel::matern(1.5, 1.0, 4.0, 2).unwrap();
        let mut cov = vec![0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                cov[i * 5 + j] =
                    model.cov(&[pts[i], 0.0], &[pts[j], 0.0]).unwrap();
            }
        }
        let f = mvn_factorize(&cov, 5).unwrap();
        let err = frobenius_rel_err(f.lower(), &cov, f.jitter_used(), 5);
        assert!(err <= 1e-8, "recomposition error {err}");
        assert!(f.jitter_used() <= 1e-6 * 4.0);
    }

    #[test]
    fn mvn_sample_zero_covariance_returns_mean() {
        let f = mvn_factorize(&[0.0, 0.0, 0.0, 0.0], 2).unwrap();
        let mut rng = RngStream::new(5).rng();
        let x = mvn_sample(&mut rng, &[1.0, -2.0], &f).unwrap();
        assert_eq!(x, vec![1.0, -2.0]);
    }

    #[test]
    fn mvn_sample_covariance_converges() {
        let cov = [1.0, 0.5, 0.5, 1.0];
        let f = mvn_factorize(&cov, 2).unwrap();
        let mut rng = RngStream::new(6).rng();
        let n = 100_000usize;
        let mut s = [0.0; 4];
        let mut means = [0.0; 2];
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let x = mvn_sample(&mut rng, &[0.0, 0.0], &f).unwrap();
            means[0] += x[0];
            means[1] += x[1];
            draws.push(x);
        }
        means[0] /= n as f64;
        means[1] /= n as f64;
        for x in &draws {
            s[0] += (x[0] - means[0]) * (x[0] - means[0]);
            s[1] += (x[0] - means[0]) * (x[1] - means[1]);
            s[2] += (x[1] - means[1]) * (x[0] - means[0]);
            s[3] += (x[1] - means[1]) * (x[1] - means[1]);
        }
        for v in &mut s {
            *v /= n as f64;
        }
        for (got, want) in s.iter().zip(cov.iter()) {
            assert!((got - want).abs() < 0.02, "got {got}, want {want}");
        }
    }

    #[test]
    fn mvn_dim1_matches_sample_normal() {
        let f = mvn_factorize(&[4.0], 1).unwrap();
        let stream = RngStream::new(7);
        let a = mvn_sample(&mut stream.rng(), &[1.0], &f).unwrap()[0];
        let b = 1.0 + 2.0 * {
            let mut r = stream.rng();
            let z: f64 = StandardNormal.sample(&mut r);
            z
        };
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn mvn_error_converges_at_half_order() {
        // log-log slope of |empirical mean| error vs n should be ~ -1/2.
        let stream = RngStream::new(8);
        let sizes = [100usize, 1_000, 10_000, 100_000];
        let mut log_err = Vec::new();
        for (i, &n) in sizes.iter().enumerate() {
            let mut err_acc = 0.0;
            let reps = 40;
            for r in 0..reps {
                let mut rng = stream.substream((i * 1000 + r) as u64).rng();
                let mut mean = 0.0;
                for _ in 0..n {
                    mean += sample_normal(&mut rng, 0.0, 1.0).unwrap();
                }
                err_acc += (mean / n as f64).abs();
            }
            log_err.push((err_acc / reps as f64).ln());
        }
        let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let xm = xs.iter().sum::<f64>() / 4.0;
        let ym = log_err.iter().sum::<f64>() / 4.0;
        let slope = xs
            .iter()
            .zip(&log_err)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!((-0.65..=-0.35).contains(&slope), "slope = {slope}");
    }

    #[test]
    fn pairwise_sum_is_chunk_invariant() {
        let xs: Vec<f64> = (0..1017).map(|i| ((i * 2654435761u64 % 1000) as f64) * 1e-3).collect();
        let total = pairwise_sum(&xs);
        let naive: f64 = xs.iter().sum();
        assert_relative_eq!(total, naive, max_relative = 1e-12);
    }
}
