//! Broken-stick regression with speaker random intercepts, fitted by REML.
//!
//! Model: `d = b0 + b1 f0 + b2 max(0, f0 - bp) + u_speaker + e`, with
//! `u ~ N(0, s_u^2)` and `e ~ N(0, s_e^2)`. For a fixed variance ratio
//! `lambda = s_u^2 / s_e^2` the fixed effects follow from generalized least
//! squares; the block structure of `V = I + lambda Z Z'` makes `V^-1` closed
//! form per speaker (`I - c 11'`, `c = lambda / (1 + lambda n_s)`). `lambda`
//! maximizes the profiled restricted likelihood by golden-section search.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::DistanceObservation;
use crate::error::{Error, Result};

pub const DEFAULT_BREAKPOINT: f64 = 523.0;

/// Search interval for the variance ratio.
const RATIO_UPPER: f64 = 1e3;
const RATIO_REL_TOL: f64 = 1e-8;
const MAX_GOLDEN_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFit {
    pub breakpoint: f64,
    pub beta0: f64,
    /// slope below the breakpoint
    pub beta1: f64,
    /// change of slope above the breakpoint (hinge coefficient)
    pub beta2: f64,
    pub se_beta0: f64,
    pub se_beta1: f64,
    pub se_beta2: f64,
    pub p_beta0: f64,
    pub p_beta1: f64,
    pub p_beta2: f64,
    /// total slope above the breakpoint, `beta1 + beta2`
    pub slope_above: f64,
    pub se_slope_above: f64,
    pub p_slope_above: f64,
    pub speaker_intercepts: BTreeMap<String, f64>,
    pub residual_variance: f64,
    pub intercept_variance: f64,
    pub variance_ratio: f64,
    pub dof: f64,
    pub n_obs: usize,
    pub n_speakers: usize,
    pub reml_log_likelihood: f64,
}

impl PiecewiseFit {
    /// Fitted value at `f0` for the population (no speaker offset).
    pub fn predict(&self, f0: f64) -> f64 {
        self.beta0 + self.beta1 * f0 + self.beta2 * (f0 - self.breakpoint).max(0.0)
    }
}

struct Group {
    rows: Vec<[f64; 3]>,
    y: Vec<f64>,
}

/// Per-lambda GLS solution.
struct GlsFit {
    beta: Vector3<f64>,
    xtvx: Matrix3<f64>,
    /// r' V0^-1 r
    quad: f64,
    log_det_v0: f64,
    /// per-group residual sums
    resid_sums: Vec<f64>,
}

fn gls(groups: &[Group], lambda: f64) -> Result<GlsFit> {
    let mut xtvx = Matrix3::zeros();
    let mut xtvy = Vector3::zeros();
    let mut log_det_v0 = 0.0;
    for g in groups {
        let n = g.rows.len() as f64;
        let c = lambda / (1.0 + lambda * n);
        let mut col_sum = Vector3::zeros();
        let mut y_sum = 0.0;
        for (row, &y) in g.rows.iter().zip(&g.y) {
            let x = Vector3::from_row_slice(row);
            xtvx += x * x.transpose();
            xtvy += x * y;
            col_sum += x;
            y_sum += y;
        }
        xtvx -= c * col_sum * col_sum.transpose();
        xtvy -= c * col_sum * y_sum;
        log_det_v0 += (1.0 + lambda * n).ln();
    }
    let chol = xtvx.cholesky().ok_or(Error::RankDeficient)?;
    let beta = chol.solve(&xtvy);
    let mut quad = 0.0;
    let mut resid_sums = Vec::with_capacity(groups.len());
    for g in groups {
        let n = g.rows.len() as f64;
        let c = lambda / (1.0 + lambda * n);
        let mut ss = 0.0;
        let mut sum = 0.0;
        for (row, &y) in g.rows.iter().zip(&g.y) {
            let r = y - Vector3::from_row_slice(row).dot(&beta);
            ss += r * r;
            sum += r;
        }
        quad += ss - c * sum * sum;
        resid_sums.push(sum);
    }
    Ok(GlsFit {
        beta,
        xtvx,
        quad,
        log_det_v0,
        resid_sums,
    })
}

/// Profiled REML log-likelihood up to an additive constant.
fn reml_objective(fit: &GlsFit, n: usize) -> f64 {
    let dof = (n - 3) as f64;
    let sigma2 = (fit.quad / dof).max(f64::MIN_POSITIVE);
    -0.5 * (dof * sigma2.ln() + fit.log_det_v0 + fit.xtvx.determinant().ln())
}

/// Golden-section maximization of the REML criterion over `[0, upper]`.
/// The lower boundary is also evaluated explicitly.
fn optimize_ratio(groups: &[Group], n: usize) -> Result<f64> {
    let f = |l: f64| gls(groups, l).map(|g| reml_objective(&g, n));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, RATIO_UPPER);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iters = 0;
    while b - a > RATIO_REL_TOL * (1.0 + x1.abs() + x2.abs()) {
        iters += 1;
        if iters > MAX_GOLDEN_ITERS {
            return Err(Error::NoConvergence(format!(
                "variance ratio search did not converge in {MAX_GOLDEN_ITERS} iterations"
            )));
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let interior = 0.5 * (a + b);
    let f_interior = f(interior)?;
    let f_zero = f(0.0)?;
    Ok(if f_zero >= f_interior { 0.0 } else { interior })
}

fn two_sided_p(estimate: f64, se: f64, dist: &StudentsT) -> f64 {
    if se > 0.0 && se.is_finite() {
        (2.0 * dist.sf((estimate / se).abs())).min(1.0)
    } else if estimate.abs() <= 1e-12 {
        1.0
    } else {
        0.0
    }
}

/// Fits the broken-stick model to `obs` with a fixed `breakpoint`.
///
/// Needs at least two distinct f0 values at or below the breakpoint and two
/// above it. With fewer than two speakers the random intercept is dropped
/// and the fit is ordinary least squares. Wald tests use
/// `n - 3 - (speakers - 1)` degrees of freedom.
pub fn piecewise_fit(obs: &[DistanceObservation], breakpoint: f64) -> Result<PiecewiseFit> {
    let mut below: Vec<f64> = obs
        .iter()
        .map(|o| o.f0)
        .filter(|&f| f <= breakpoint)
        .collect();
    let mut above: Vec<f64> = obs
        .iter()
        .map(|o| o.f0)
        .filter(|&f| f > breakpoint)
        .collect();
    for v in [&mut below, &mut above] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if below.len() < 2 || above.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need two distinct f0 values on each side of {breakpoint} Hz, have {} below and {} above",
            below.len(),
            above.len()
        )));
    }
    if let Some(bad) = obs.iter().find(|o| !o.distance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite distance for {} at {} Hz",
            bad.speaker_id, bad.f0
        )));
    }

    let mut by_speaker: BTreeMap<&str, Group> = BTreeMap::new();
    for o in obs {
        let g = by_speaker
            .entry(o.speaker_id.as_str())
            .or_insert_with(|| Group {
                rows: Vec::new(),
                y: Vec::new(),
            });
        g.rows.push([1.0, o.f0, (o.f0 - breakpoint).max(0.0)]);
        g.y.push(o.distance);
    }
    let speakers: Vec<&str> = by_speaker.keys().copied().collect();
    let groups: Vec<Group> = by_speaker.into_values().collect();
    let n = obs.len();
    let n_speakers = groups.len();
    let dof = n as f64 - 3.0 - (n_speakers as f64 - 1.0);
    if dof < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "{n} observations leave no residual degrees of freedom"
        )));
    }

    let lambda = if n_speakers >= 2 {
        optimize_ratio(&groups, n)?
    } else {
        0.0
    };
    let fit = gls(&groups, lambda)?;
    let sigma2 = fit.quad.max(0.0) / (n - 3) as f64;
    let cov = fit.xtvx.try_inverse().ok_or(Error::RankDeficient)? * sigma2;
    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Numerical(e.to_string()))?;

    let slope_above = fit.beta[1] + fit.beta[2];
    let se_slope_above = (cov[(1, 1)] + cov[(2, 2)] + 2.0 * cov[(1, 2)])
        .max(0.0)
        .sqrt();

    let speaker_intercepts = speakers
        .iter()
        .zip(&groups)
        .zip(&fit.resid_sums)
        .map(|((s, g), sum)| {
            let c = lambda / (1.0 + lambda * g.rows.len() as f64);
            (s.to_string(), c * sum)
        })
        .collect();

    for v in [fit.beta[0], fit.beta[1], fit.beta[2], sigma2] {
        if !v.is_finite() {
            return Err(Error::Numerical("non-finite regression estimate".into()));
        }
    }

    Ok(PiecewiseFit {
        breakpoint,
        beta0: fit.beta[0],
        beta1: fit.beta[1],
        beta2: fit.beta[2],
        se_beta0: se(0),
        se_beta1: se(1),
        se_beta2: se(2),
        p_beta0: two_sided_p(fit.beta[0], se(0), &dist),
        p_beta1: two_sided_p(fit.beta[1], se(1), &dist),
        p_beta2: two_sided_p(fit.beta[2], se(2), &dist),
        slope_above,
        se_slope_above,
        p_slope_above: two_sided_p(slope_above, se_slope_above, &dist),
        speaker_intercepts,
        residual_variance: sigma2,
        intercept_variance: lambda * sigma2,
        variance_ratio: lambda,
        dof,
        n_obs: n,
        n_speakers,
        reml_log_likelihood: reml_objective(&fit, n),
    })
}
