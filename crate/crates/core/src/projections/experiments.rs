use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Kind, ProjectionOperator};
use crate::classifier::{resolve_gaps, FiniteSide, GapResolution};
use crate::rootfinder::{certify_ball, find_eigenvalue_near, Eigenvalue};
use crate::{Error, GridFunction, NeutralParams, Result, Tolerances};

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// # Panics
///
/// With fewer than two points or mismatched lengths.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two paired points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}

/// Index set of `T_ℓ`, closed under conjugation of the `z_n`.
///
/// `z_n` and `z_{-n-1}` are conjugate for `c > 0`; `z_n` and `z_{-n}` for
/// `c < 0`. Index 0 is left out for `c = -1`.
pub fn symmetric_indices(params: &NeutralParams, ell: i64) -> Vec<i64> {
    let lo = if params.c() > 0.0 { -ell - 1 } else { -ell };
    (lo..=ell).filter(|&n| !(n == 0 && params.c() == -1.0)).collect()
}

/// `Σ_{|n| ≤ K} |â_n(f)|²` for `K = 0..=n_max`.
pub fn parseval_partial_sums(params: &NeutralParams, f: &GridFunction, n_max: u32) -> Vec<f64> {
    let terms: Vec<f64> = (0..=n_max as i64)
        .into_par_iter()
        .map(|k| {
            let mut s = f.fourier_coefficient(params, k).norm_sqr();
            if k > 0 {
                s += f.fourier_coefficient(params, -k).norm_sqr();
            }
            s
        })
        .collect();
    terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect()
}

/// `‖P_{λ_n} - Q_{z_n}‖` with the certification data used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub n: i64,
    pub lambda: Complex64,
    pub z: Complex64,
    /// Half-width of the square around `z_n` that isolates `λ_n`.
    pub ball_radius: f64,
    pub norm: f64,
}

/// Operator norm of `P_{λ_n} - Q_{z_n}`, with `λ_n` the root isolated near `z_n`.
///
/// # Errors
///
/// [`Error::DoubleRootExcluded`] for `c = -1, n = 0`; [`Error::ToleranceNotMet`]
/// if no simple root can be certified in a ball around `z_n`.
pub fn perturbation_norm(params: &NeutralParams, n: i64, grid: usize) -> Result<PerturbationRecord> {
    if params.c() == -1.0 && n == 0 {
        return Err(Error::DoubleRootExcluded);
    }
    let tol = Tolerances::default();
    let z = params.auxiliary_eigen(n);
    let eig = find_eigenvalue_near(params, z)?;
    let ball = certify_ball(params, z, eig.value, &tol).filter(|_| eig.certified);
    let Some(ball_radius) = ball else {
        return Err(Error::ToleranceNotMet {
            what: format!("isolating ball around z_{n}"),
            residual: (eig.value - z).norm(),
        });
    };
    let p = ProjectionOperator::new(
        *params,
        vec![Eigenvalue {
            index: Some(n),
            ball_radius: Some(ball_radius),
            ..eig
        }],
        Kind::MainEquation,
    )?;
    let q = ProjectionOperator::auxiliary(*params, &[n])?;
    let norm = p.kernel_form().difference(&q.kernel_form()).norm(grid);
    Ok(PerturbationRecord {
        n,
        lambda: eig.value,
        z,
        ball_radius,
        norm,
    })
}

/// [`perturbation_norm`] for every `n`, in input order.
pub fn perturbation_sweep(params: &NeutralParams, ns: &[i64], grid: usize) -> Result<Vec<PerturbationRecord>> {
    ns.par_iter().map(|&n| perturbation_norm(params, n, grid)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthRow {
    pub m: usize,
    pub beta: f64,
    pub alpha: f64,
    /// Roots in the finite part.
    pub count: usize,
    /// Complexified sup-norm of the finite-part projection.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGrowthTable {
    pub params: NeutralParams,
    pub n_max: u32,
    pub grid: usize,
    pub finite_side: Option<FiniteSide>,
    pub rows: Vec<NormGrowthRow>,
    /// `norm` against `ln count` over rows with `m ≥ 5`.
    pub fit: Option<LineFit>,
}

/// Norms of the finite-part projections of gaps `0..m_max`.
///
/// The enumeration depth grows until the tail bound certifies `m_max` gaps.
///
/// # Errors
///
/// [`Error::InvalidParams`] without the dichotomy condition;
/// [`Error::InsufficientRoots`] if `m_max` gaps are not certified by the deepest enumeration.
pub fn norm_growth_experiment(params: &NeutralParams, m_max: usize, grid: usize) -> Result<NormGrowthTable> {
    if !params.dichotomy_condition() {
        return Err(Error::InvalidParams(
            "norm growth needs a ≠ b/c and ln|c| ≠ -(a + b/c)/2".into(),
        ));
    }
    let GapResolution { spectrum, gaps, .. } = resolve_gaps(params, m_max, 2 * m_max as u32 + 16)?;
    let rows: Vec<NormGrowthRow> = gaps
        .par_iter()
        .map(|g| {
            let op = ProjectionOperator::from_gap(*params, g)?;
            Ok(NormGrowthRow {
                m: g.index,
                beta: g.beta,
                alpha: g.alpha,
                count: g.finite_eigs.len(),
                norm: op.operator_norm(grid),
            })
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.m >= 5 && r.count > 0)
        .map(|r| ((r.count as f64).ln(), r.norm))
        .unzip();
    Ok(NormGrowthTable {
        params: *params,
        n_max: spectrum.n_max(),
        grid,
        finite_side: gaps.first().map(|g| g.finite_side),
        rows,
        fit: (xs.len() >= 3).then(|| fit_line(&xs, &ys)),
    })
}
