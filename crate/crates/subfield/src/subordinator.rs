//! Nonnegative Lévy process families: marginal and path sampling, marginal
//! densities, Laplace exponents, and a compound Poisson approximation (CPA)
//! built from a Lévy measure by truncating jumps below a level `eps` and
//! folding their mean into the drift.
//!
//! The Student-t family is the one non-subordinator here: t(ν) is infinitely
//! divisible, so a Lévy process with l(1) ~ t(ν) exists, but its marginals at
//! fractional times have no tractable form. Marginals are supported at
//! integer times only (sums of iid draws); composed fields take absolute
//! values of it (`abs_mode`).

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Discrete, Gamma as GammaDist, Poisson as PoissonDist, StudentsT};

use crate::stochastics::{sample_gamma, sample_poisson, sample_student_t};
use crate::{Error, Result};

/// Tolerance for "is this time an integer" checks on the Student-t family.
const INTEGER_TOL: f64 = 1e-9;

/// Inverse-CDF table for the normalized jump law of a CPA model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpaModel {
    /// Jump intensity per unit time, ν([eps, ∞)).
    pub intensity: f64,
    /// Drift per unit time: the original drift plus the mean of the
    /// discarded small jumps ∫_0^eps y ν(dy).
    pub drift: f64,
    /// Truncation level.
    pub eps: f64,
    /// Log-spaced jump sizes on [eps, y_max].
    nodes: Vec<f64>,
    /// CDF of the normalized jump law at `nodes` (first 0, last 1).
    cdf: Vec<f64>,
}

impl CpaModel {
    /// Draw one jump by inverse CDF with linear interpolation on the table.
    fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let idx = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i,
        };
        if idx == 0 {
            return self.nodes[0];
        }
        if idx >= self.nodes.len() {
            return *self.nodes.last().unwrap();
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (y0, y1) = (self.nodes[idx - 1], self.nodes[idx]);
        if c1 > c0 {
            y0 + (u - c0) / (c1 - c0) * (y1 - y0)
        } else {
            y0
        }
    }

    /// E[e^{-u J}] for a single jump J, via the table.
    fn jump_laplace(&self, u: f64) -> f64 {
        if self.nodes.is_empty() {
            return 1.0;
        }
        let mut acc = 0.0;
        for i in 1..self.nodes.len() {
            let mass = self.cdf[i] - self.cdf[i - 1];
            let mid = 0.5 * (self.nodes[i] + self.nodes[i - 1]);
            acc += mass * (-u * mid).exp();
        }
        acc
    }

    /// Mean jump size under the normalized jump law.
    pub fn mean_jump(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 1..self.nodes.len() {
            acc += (self.cdf[i] - self.cdf[i - 1]) * 0.5 * (self.nodes[i] + self.nodes[i - 1]);
        }
        acc
    }
}

/// A nonnegative Lévy process family (plus the Student-t special case).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SubordinatorModel {
    /// Gamma process: l(t) ~ Gamma(shape·t, rate); Lévy density
    /// shape·y⁻¹e^{-rate·y}, zero drift.
    Gamma { shape: f64, rate: f64 },
    /// Poisson process: l(t) ~ Poisson(lambda·t); Lévy measure lambda·δ₁,
    /// zero drift.
    Poisson { lambda: f64 },
    /// Compound Poisson approximation with drift compensation.
    CompoundPoissonApprox(CpaModel),
    /// Lévy process with l(1) ~ t(dof); integer times only.
    StudentTUnitTime { dof: f64 },
}

impl SubordinatorModel {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma subordinator needs positive shape/rate, got {shape}, {rate}"
            )));
        }
        Ok(Self::Gamma { shape, rate })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "poisson subordinator needs lambda > 0, got {lambda}"
            )));
        }
        Ok(Self::Poisson { lambda })
    }

    pub fn student_t(dof: f64) -> Result<Self> {
        if !(dof > 0.0) {
            return Err(Error::InvalidParameter(format!("t dof must be positive, got {dof}")));
        }
        Ok(Self::StudentTUnitTime { dof })
    }

    /// Whether composed fields must take absolute values of this process.
    pub fn requires_abs(&self) -> bool {
        matches!(self, Self::StudentTUnitTime { .. })
    }

    /// E[l(1)]; the mean growth rate of the process.
    pub fn mean_rate(&self) -> f64 {
        match self {
            Self::Gamma { shape, rate } => shape / rate,
            Self::Poisson { lambda } => *lambda,
            Self::CompoundPoissonApprox(cpa) => cpa.drift + cpa.intensity * cpa.mean_jump(),
            Self::StudentTUnitTime { .. } => 0.0,
        }
    }
}

/// Sampled skeleton of a subordinator path; evaluation between grid points
/// uses the càdlàg left-neighbor value.
#[derive(Clone, Debug)]
pub struct SubordinatorPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SubordinatorPath {
    /// Value at time `t`: the skeleton value at the largest grid point <= t,
    /// or 0 before the first grid point.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.grid.iter().rposition(|&g| g <= t) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }
}

/// One draw of l(t). `t = 0` returns 0 exactly.
pub fn marginal_sample<R: Rng + ?Sized>(
    rng: &mut R,
    model: &SubordinatorModel,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    match model {
        SubordinatorModel::Gamma { shape, rate } => sample_gamma(rng, shape * t, *rate),
        SubordinatorModel::Poisson { lambda } => {
            Ok(sample_poisson(rng, lambda * t)? as f64)
        }
        SubordinatorModel::CompoundPoissonApprox(cpa) => {
            let n = sample_poisson(rng, cpa.intensity * t)?;
            let mut acc = cpa.drift * t;
            for _ in 0..n {
                acc += cpa.sample_jump(rng);
            }
            Ok(acc)
        }
        SubordinatorModel::StudentTUnitTime { dof } => {
            let k = integer_time(t)?;
            let mut acc = 0.0;
            for _ in 0..k {
                acc += sample_student_t(rng, *dof)?;
            }
            Ok(acc)
        }
    }
}

fn integer_time(t: f64) -> Result<u64> {
    let k = t.round();
    if (t - k).abs() > INTEGER_TOL || k < 0.0 {
        return Err(Error::UnsupportedTime { t });
    }
    Ok(k as u64)
}

/// Sample the path skeleton on an increasing time grid by summing
/// independent stationary increments.
pub fn path_sample<R: Rng + ?Sized>(
    rng: &mut R,
    model: &SubordinatorModel,
    grid: &[f64],
) -> Result<SubordinatorPath> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid must be nonempty".into()));
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be increasing and >= 0".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut prev_t = 0.0;
    let mut acc = 0.0;
    for &t in grid {
        acc += marginal_sample(rng, model, t - prev_t)?;
        values.push(acc);
        prev_t = t;
    }
    Ok(SubordinatorPath { grid: grid.to_vec(), values })
}

/// Marginal density (or pmf, for the Poisson family) of l(t) at z.
pub fn marginal_density(model: &SubordinatorModel, t: f64, z: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time must be > 0, got {t}")));
    }
    match model {
        SubordinatorModel::Gamma { shape, rate } => {
            if z <= 0.0 {
                return Ok(0.0);
            }
            let d = GammaDist::new(shape * t, *rate)
                .map_err(|e| Error::InvalidParameter(format!("gamma density: {e}")))?;
            Ok(d.pdf(z))
        }
        SubordinatorModel::Poisson { lambda } => {
            let k = z.round();
            if (z - k).abs() > INTEGER_TOL || k < 0.0 {
                return Ok(0.0);
            }
            let d = PoissonDist::new(lambda * t)
                .map_err(|e| Error::InvalidParameter(format!("poisson pmf: {e}")))?;
            Ok(d.pmf(k as u64))
        }
        SubordinatorModel::CompoundPoissonApprox(_) => Err(Error::UnsupportedDensity),
        SubordinatorModel::StudentTUnitTime { dof } => {
            if (t - 1.0).abs() > INTEGER_TOL {
                return Err(Error::UnsupportedTime { t });
            }
            let d = StudentsT::new(0.0, 1.0, *dof)
                .map_err(|e| Error::InvalidParameter(format!("student t density: {e}")))?;
            Ok(d.pdf(z))
        }
    }
}

/// Laplace exponent ψ with E e^{-u l(t)} = e^{-t ψ(u)}.
pub fn laplace_exponent(model: &SubordinatorModel, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidParameter(format!("laplace argument must be >= 0, got {u}")));
    }
    match model {
        SubordinatorModel::Gamma { shape, rate } => Ok(shape * (u / rate).ln_1p()),
        SubordinatorModel::Poisson { lambda } => Ok(lambda * (1.0 - (-u).exp())),
        SubordinatorModel::CompoundPoissonApprox(cpa) => {
            Ok(cpa.drift * u + cpa.intensity * (1.0 - cpa.jump_laplace(u)))
        }
        SubordinatorModel::StudentTUnitTime { .. } => Err(Error::InvalidParameter(
            "the Student-t family is not a subordinator and has no Laplace exponent".into(),
        )),
    }
}

/// Number of nodes in the CPA inverse-CDF table.
const CPA_TABLE_NODES: usize = 2048;

/// Build a compound Poisson approximation of the subordinator with Lévy
/// density `levy_density` on (0, ∞) and drift `gamma`: jumps below `eps` are
/// discarded and their mean moved into the drift, jumps above are sampled
/// from an inverse-CDF table on log-spaced nodes.
pub fn cpa_build<F: Fn(f64) -> f64>(
    levy_density: F,
    gamma: f64,
    eps: f64,
) -> Result<SubordinatorModel> {
    if !(eps > 0.0) || !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cpa needs eps > 0 and gamma >= 0, got eps={eps}, gamma={gamma}"
        )));
    }

    // Find y_max: extend by octaves until an octave adds < 1e-13 of the mass.
    let log_integral = |a: f64, b: f64, n: usize, f: &dyn Fn(f64) -> f64| -> f64 {
        let la = a.ln();
        let lb = b.ln();
        let h = (lb - la) / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let y = (la + h * i as f64).exp();
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            // d y = y d(log y)
            acc += w * f(y) * y;
        }
        acc * h
    };

    let density = |y: f64| levy_density(y);
    let mut y_max = eps * 2.0;
    let mut total = log_integral(eps, y_max, 256, &density);
    loop {
        let next = y_max * 2.0;
        let add = log_integral(y_max, next, 256, &density);
        y_max = next;
        total += add;
        if !add.is_finite() {
            return Err(Error::NonIntegrableTail);
        }
        if add < 1e-13 * total.max(f64::MIN_POSITIVE) || y_max > eps * 1e18 {
            break;
        }
    }

    if !total.is_finite() {
        return Err(Error::NonIntegrableTail);
    }

    // Mean of the discarded small jumps, ∫_0^eps y ν(dy).
    let small_mean = log_integral(eps * 1e-12, eps, 2048, &|y| y * density(y));

    if total <= 0.0 {
        // No jumps above eps: a pure drift path.
        return Ok(SubordinatorModel::CompoundPoissonApprox(CpaModel {
            intensity: 0.0,
            drift: gamma + small_mean,
            eps,
            nodes: Vec::new(),
            cdf: Vec::new(),
        }));
    }

    // CDF table on log-spaced nodes [eps, y_max].
    let la = eps.ln();
    let lb = y_max.ln();
    let h = (lb - la) / (CPA_TABLE_NODES - 1) as f64;
    let nodes: Vec<f64> =
        (0..CPA_TABLE_NODES).map(|i| (la + h * i as f64).exp()).collect();
    let mut cdf = vec![0.0; CPA_TABLE_NODES];
    let mut acc = 0.0;
    for i in 1..CPA_TABLE_NODES {
        let f0 = density(nodes[i - 1]) * nodes[i - 1];
        let f1 = density(nodes[i]) * nodes[i];
        acc += 0.5 * (f0 + f1) * h;
        cdf[i] = acc;
    }
    let intensity = acc;
    for c in &mut cdf {
        *c /= intensity;
    }

    Ok(SubordinatorModel::CompoundPoissonApprox(CpaModel {
        intensity,
        drift: gamma + small_mean,
        eps,
        nodes,
        cdf,
    }))
}

/// The standard Gamma-subordinator Lévy density shape·y⁻¹·e^{-rate·y}.
pub fn gamma_levy_density(shape: f64, rate: f64) -> impl Fn(f64) -> f64 {
    move |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            shape * (-rate * y).exp() / y
        }
    }
}
