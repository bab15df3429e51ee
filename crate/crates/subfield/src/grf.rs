//! Gaussian random field models: covariance functions and exact joint
//! sampling at finite point sets.
//!
//! Three centered families are provided:
//! - `MaternStationary`: covariance ρ(s) = σ² 2^{1-ν}/Γ(ν) (2s√ν/r)^ν K_ν(2s√ν/r)
//!   of the Euclidean distance s,
//! - `BrownianSheet`: covariance Π_k min(x_k, y_k),
//! - `SqrtScaledStationary`: W(x) = √(x_1+…+x_d) W̃(x) with W̃ Matérn, so the
//!   pointwise variance is σ²(x_1+…+x_d).
//!
//! All models are centered. Joint sampling assembles the covariance matrix
//! and draws through [`stochastics::mvn_factorize`].

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gammafn;

use crate::bessel::bessel_k;
use crate::stochastics::{self, mvn_sample};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceKind {
    MaternStationary,
    BrownianSheet,
    SqrtScaledStationary,
}

/// A centered Gaussian field's covariance model on the nonnegative orthant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovarianceModel {
    kind: CovarianceKind,
    matern_nu: f64,
    matern_r: f64,
    matern_sigma2: f64,
    dim: usize,
}

impl CovarianceModel {
    pub fn matern(nu: f64, r: f64, sigma2: f64, dim: usize) -> Result<Self> {
        Self::validated(CovarianceKind::MaternStationary, nu, r, sigma2, dim)
    }

    /// √-scaled stationary model; the underlying Matérn correlation has
    /// unit-distance shape (ν, r) and ρ(0) = σ².
    pub fn sqrt_scaled_matern(nu: f64, r: f64, sigma2: f64, dim: usize) -> Result<Self> {
        Self::validated(CovarianceKind::SqrtScaledStationary, nu, r, sigma2, dim)
    }

    pub fn brownian_sheet(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        Ok(Self {
            kind: CovarianceKind::BrownianSheet,
            matern_nu: f64::NAN,
            matern_r: f64::NAN,
            matern_sigma2: f64::NAN,
            dim,
        })
    }

    fn validated(
        kind: CovarianceKind,
        nu: f64,
        r: f64,
        sigma2: f64,
        dim: usize,
    ) -> Result<Self> {
        if !(nu >= 0.5) {
            return Err(Error::InvalidParameter(format!("matern nu must be >= 0.5, got {nu}")));
        }
        if !(r > 0.0) || !(sigma2 > 0.0) || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "matern needs r > 0, sigma2 > 0, dim >= 1; got r={r}, sigma2={sigma2}, dim={dim}"
            )));
        }
        Ok(Self { kind, matern_nu: nu, matern_r: r, matern_sigma2: sigma2, dim })
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matern_nu(&self) -> f64 {
        self.matern_nu
    }

    pub fn matern_r(&self) -> f64 {
        self.matern_r
    }

    pub fn matern_sigma2(&self) -> f64 {
        self.matern_sigma2
    }

    /// Stationary correlation profile ρ(s) with ρ(0) = σ².
    pub fn matern_rho(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        if s == 0.0 {
            return self.matern_sigma2;
        }
        let nu = self.matern_nu;
        let u = 2.0 * s * nu.sqrt() / self.matern_r;
        // u^nu K_nu(u) underflows jointly for large u; go through logs.
        let k = match bessel_k(nu, u) {
            Ok(v) => v,
            Err(_) => return 0.0,
        };
        if k == 0.0 {
            return 0.0;
        }
        let val = self.matern_sigma2 * (2.0f64).powf(1.0 - nu) / gammafn(nu)
            * u.powf(nu)
            * k;
        val.max(0.0)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::InvalidParameter(format!("coordinates must be >= 0, got {x:?}")));
        }
        Ok(())
    }

    /// Covariance q(x, y).
    pub fn cov(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match self.kind {
            CovarianceKind::MaternStationary => self.matern_rho(dist(x, y)),
            CovarianceKind::BrownianSheet => {
                x.iter().zip(y).map(|(a, b)| a.min(*b)).product()
            }
            CovarianceKind::SqrtScaledStationary => {
                let sx: f64 = x.iter().sum();
                let sy: f64 = y.iter().sum();
                (sx * sy).sqrt() * self.matern_rho(dist(x, y))
            }
        })
    }

    /// Pointwise variance q(x, x).
    pub fn variance(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.variance_unchecked(x))
    }

    pub(crate) fn variance_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            CovarianceKind::MaternStationary => self.matern_sigma2,
            CovarianceKind::BrownianSheet => x.iter().product(),
            CovarianceKind::SqrtScaledStationary => {
                self.matern_sigma2 * x.iter().sum::<f64>()
            }
        }
    }

    /// Assemble the covariance matrix of the field at `points` (row-major).
    pub fn cov_matrix(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let k = points.len();
        let mut m = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let c = self.cov(&points[i], &points[j])?;
                m[i * k + j] = c;
                m[j * k + i] = c;
            }
        }
        Ok(m)
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// One joint draw of (W(p_1), ..., W(p_k)) for a centered field.
pub fn grf_sample_at<R: Rng + ?Sized>(
    rng: &mut R,
    model: &CovarianceModel,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("point list must be nonempty".into()));
    }
    let cov = model.cov_matrix(points)?;
    let factor = stochastics::mvn_factorize(&cov, points.len())?;
    mvn_sample(rng, &vec![0.0; points.len()], &factor)
}
