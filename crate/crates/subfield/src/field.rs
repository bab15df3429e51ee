//! The subordinated Gaussian random field L(x) = W(l_1(x_1), ..., l_d(x_d)).
//!
//! Sampling subordinates first: per axis one path skeleton is drawn on the
//! distinct coordinates occurring in the request, so points sharing a
//! coordinate share the subordinator value. The Gaussian field is then drawn
//! exactly at the (random) transformed locations from its finite-dimensional
//! law; independence of W and the subordinators makes this exact. Exactly
//! coincident transformed points are deduplicated before factorization and
//! re-expanded afterwards.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grf::{grf_sample_at, CovarianceModel};
use crate::subordinator::{path_sample, SubordinatorModel};
use crate::{Error, Result};

/// Hard cap on the number of joint points a single factorization may see.
pub const GRID_POINT_CAP: usize = 10_000;

/// A subordinated Gaussian random field on the box [0, T_1] x ... x [0, T_d].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldModel {
    cov: CovarianceModel,
    subs: Vec<SubordinatorModel>,
    horizon: Vec<f64>,
    abs_mode: bool,
}

impl FieldModel {
    /// Compose a field. `abs_mode` applies |·| to the subordinating processes
    /// and is mandatory whenever one of them can go negative.
    pub fn new(
        cov: CovarianceModel,
        subs: Vec<SubordinatorModel>,
        horizon: Vec<f64>,
        abs_mode: bool,
    ) -> Result<Self> {
        let d = cov.dim();
        if d < 2 {
            return Err(Error::InvalidParameter("field dimension must be >= 2".into()));
        }
        if subs.len() != d || horizon.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if subs.len() != d { subs.len() } else { horizon.len() },
            });
        }
        if horizon.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("horizon entries must be positive".into()));
        }
        if !abs_mode && subs.iter().any(|s| s.requires_abs()) {
            return Err(Error::InvalidParameter(
                "non-monotone subordinating processes require abs_mode".into(),
            ));
        }
        Ok(Self { cov, subs, horizon, abs_mode })
    }

    pub fn cov(&self) -> &CovarianceModel {
        &self.cov
    }

    pub fn subordinators(&self) -> &[SubordinatorModel] {
        &self.subs
    }

    pub fn horizon(&self) -> &[f64] {
        &self.horizon
    }

    pub fn abs_mode(&self) -> bool {
        self.abs_mode
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    fn check_points(&self, points: &[Vec<f64>]) -> Result<()> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("point list must be nonempty".into()));
        }
        for p in points {
            if p.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
            }
            for (c, t) in p.iter().zip(&self.horizon) {
                if !(*c >= 0.0 && *c <= *t) {
                    return Err(Error::InvalidParameter(format!(
                        "point {p:?} outside the box [0, {:?}]",
                        self.horizon
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One joint draw of the transformed locations (|l_1(x_1)|, ..., |l_d(x_d)|
/// in abs mode, without the bars otherwise). Coordinates shared between
/// points share their subordinator values.
pub fn subordinate<R: Rng + ?Sized>(
    rng: &mut R,
    model: &FieldModel,
    points: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    model.check_points(points)?;
    let d = model.dim();
    // Distinct sorted coordinates per axis.
    let mut transformed = vec![vec![0.0; d]; points.len()];
    for k in 0..d {
        let mut coords: Vec<f64> = points.iter().map(|p| p[k]).collect();
        coords.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        coords.dedup();
        let path = path_sample(rng, &model.subs[k], &coords)?;
        let lookup: HashMap<u64, f64> = coords
            .iter()
            .zip(&path.values)
            .map(|(c, v)| (c.to_bits(), if model.abs_mode { v.abs() } else { *v }))
            .collect();
        for (i, p) in points.iter().enumerate() {
            transformed[i][k] = lookup[&p[k].to_bits()];
        }
    }
    Ok(transformed)
}

/// One joint draw of (L(p_1), ..., L(p_k)).
pub fn sample_at_points<R: Rng + ?Sized>(
    rng: &mut R,
    model: &FieldModel,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let transformed = subordinate(rng, model, points)?;
    // Deduplicate exactly-equal transformed points; a subordinator constant
    // across two coordinates would otherwise make the covariance singular.
    let mut unique: Vec<Vec<f64>> = Vec::with_capacity(transformed.len());
    let mut index_of: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut expand = Vec::with_capacity(transformed.len());
    for z in &transformed {
        let key: Vec<u64> = z.iter().map(|c| c.to_bits()).collect();
        let idx = *index_of.entry(key).or_insert_with(|| {
            unique.push(z.clone());
            unique.len() - 1
        });
        expand.push(idx);
    }
    let draws = grf_sample_at(rng, &model.cov, &unique)?;
    Ok(expand.into_iter().map(|i| draws[i]).collect())
}

/// A field realization on a regular grid.
#[derive(Clone, Debug)]
pub struct GridSample {
    /// Grid coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major values; axis 0 is the slowest index.
    pub values: Vec<f64>,
}

impl GridSample {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }
}

/// One realization on the regular grid with `n_per_axis[k]` points along
/// axis k, at coordinates T_k (i+1)/n_k. Jumps of the subordinators show up
/// as piecewise-constant strips along the axes.
pub fn sample_grid<R: Rng + ?Sized>(
    rng: &mut R,
    model: &FieldModel,
    n_per_axis: &[usize],
) -> Result<GridSample> {
    if n_per_axis.len() != model.dim() || n_per_axis.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter(format!(
            "need {} positive per-axis counts, got {n_per_axis:?}",
            model.dim()
        )));
    }
    let total: usize = n_per_axis.iter().product();
    if total > GRID_POINT_CAP {
        return Err(Error::GridTooLarge { requested: total, cap: GRID_POINT_CAP });
    }
    let axes: Vec<Vec<f64>> = n_per_axis
        .iter()
        .zip(model.horizon())
        .map(|(&n, &t)| (0..n).map(|i| t * (i + 1) as f64 / n as f64).collect())
        .collect();
    let d = model.dim();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; d];
        for k in (0..d).rev() {
            p[k] = axes[k][rem % n_per_axis[k]];
            rem /= n_per_axis[k];
        }
        points.push(p);
    }
    let values = sample_at_points(rng, model, &points)?;
    Ok(GridSample { axes, values })
}
