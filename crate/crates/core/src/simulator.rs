//! Method-of-steps integration of `x'(t) = -a x(t) - b x(t-1) - c x'(t-1)`.
//!
//! Time is cut into unit segments `[k-1, k]`, each sampled at `dt = 1/M`.
//! Segment 0 is the initial history. On segment `k` the delayed terms are
//! read from segment `k-1`, with cubic Hermite values at half steps, and `x`
//! is advanced by classical RK4. A segment stores `x` and `x'` at its `M + 1`
//! nodes; `x'` at node 0 is the right limit and at node `M` the left limit, so
//! the derivative jump at every integer is kept.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classifier::{FiniteSide, SpectralGap};
use crate::projections::{f_functional, gap_projection};
use crate::{Error, GridFunction, NeutralParams, Result};

/// Largest supported horizon.
pub const MAX_HORIZON: f64 = 50.0;
/// Largest supported step.
pub const MAX_DT: f64 = 1.0 / 64.0;
/// Relative tolerance of the history derivative check.
pub const HISTORY_TOLERANCE: f64 = 1e-3;
/// States below this sup-norm are treated as lost to rounding.
pub const UNDERFLOW: f64 = 1e-14;

/// Samples of `x` and `x'` on `[start, start + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    start: i64,
    x: Vec<Complex64>,
    dx: Vec<Complex64>,
}

impl Segment {
    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn x(&self) -> &[Complex64] {
        &self.x
    }

    /// `dx[0]` is the right limit at `start`, `dx[M]` the left limit at `start + 1`.
    pub fn dx(&self) -> &[Complex64] {
        &self.dx
    }

    pub fn sup_norm(&self) -> f64 {
        self.x.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn steps(&self) -> usize {
        self.x.len() - 1
    }

    fn hermite(&self, j: usize, s: f64) -> (Complex64, Complex64) {
        let dt = 1.0 / self.steps() as f64;
        let (x0, x1, d0, d1) = (self.x[j], self.x[j + 1], self.dx[j] * dt, self.dx[j + 1] * dt);
        let (s2, s3) = (s * s, s * s * s);
        let x =
            x0 * (2.0 * s3 - 3.0 * s2 + 1.0) + d0 * (s3 - 2.0 * s2 + s) + x1 * (3.0 * s2 - 2.0 * s3) + d1 * (s3 - s2);
        let d = (x0 - x1) * (6.0 * s2 - 6.0 * s) + d0 * (3.0 * s2 - 4.0 * s + 1.0) + d1 * (3.0 * s2 - 2.0 * s);
        (x, d / dt)
    }
}

/// Solution on `[-1, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    params: NeutralParams,
    dt: f64,
    horizon: f64,
    segments: Vec<Segment>,
    jumps: Vec<Complex64>,
}

impl Trajectory {
    pub fn params(&self) -> &NeutralParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Segment `k` covers `[k - 1, k]`; segment 0 is the history.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `Δ_k = x'(k⁺) - x'(k⁻)` for `k = 0, 1, ...`.
    pub fn jumps(&self) -> &[Complex64] {
        &self.jumps
    }

    /// `0, dt, ..., horizon`.
    pub fn t_grid(&self) -> Vec<f64> {
        let n = (self.horizon / self.dt).round() as usize;
        (0..=n).map(|i| i as f64 * self.dt).collect()
    }

    fn locate(&self, t: f64) -> (&Segment, usize, f64) {
        let t = t.clamp(-1.0, self.segments.len() as f64 - 1.0);
        let k = ((t.floor() + 1.0) as usize).min(self.segments.len() - 1);
        let seg = &self.segments[k];
        let m = seg.steps();
        let s = (t - seg.start as f64) * m as f64;
        let j = (s.floor().max(0.0) as usize).min(m - 1);
        (seg, j, s - j as f64)
    }

    /// `x(t)` for `t ∈ [-1, horizon]`.
    pub fn x_at(&self, t: f64) -> Complex64 {
        let (seg, j, s) = self.locate(t);
        seg.hermite(j, s).0
    }

    /// `x'(t)`, right limit at integers.
    pub fn dx_at(&self, t: f64) -> Complex64 {
        let (seg, j, s) = self.locate(t);
        seg.hermite(j, s).1
    }

    /// `sup_{θ∈[-1,0]} |x(k + θ)|` at an integer time `k`.
    pub fn state_sup(&self, k: usize) -> f64 {
        self.segments[k].sup_norm()
    }

    /// The state on `[k - 1, k]`, usable as a restart history.
    pub fn state(&self, k: usize) -> &Segment {
        &self.segments[k]
    }

    /// Rows `t, Re x, Im x, Re x', Im x'` on the `dt` grid up to the horizon.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x_re", "x_im", "dx_re", "dx_im"])?;
        for t in self.t_grid() {
            let (x, d) = (self.x_at(t), self.dx_at(t));
            out.write_record(&[
                t.to_string(),
                x.re.to_string(),
                x.im.to_string(),
                d.re.to_string(),
                d.im.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn steps_per_unit(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon <= MAX_HORIZON) {
        return Err(Error::InvalidInput(format!(
            "horizon must lie in (0, {MAX_HORIZON}], got {horizon}"
        )));
    }
    let m = (1.0 / dt).round();
    if !(dt > 0.0 && dt <= MAX_DT) || (m * dt - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("dt must be 1/M with M ≥ 64, got {dt}")));
    }
    Ok(m as usize)
}

/// Integrates from history `phi` with derivative `phi_deriv`.
///
/// # Errors
///
/// [`Error::InvalidInput`] for a bad horizon, step or grid mismatch;
/// [`Error::InconsistentHistory`] if `phi_deriv` is not the derivative of
/// `phi` to `1e-3` relative.
pub fn integrate(
    params: &NeutralParams,
    phi: &GridFunction,
    phi_deriv: &GridFunction,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with(params, phi, phi_deriv, horizon, dt, true)
}

/// [`integrate`] with the history check optional.
pub fn integrate_with(
    params: &NeutralParams,
    phi: &GridFunction,
    phi_deriv: &GridFunction,
    horizon: f64,
    dt: f64,
    check_history: bool,
) -> Result<Trajectory> {
    let m = steps_per_unit(horizon, dt)?;
    if phi.n_intervals() != phi_deriv.n_intervals() {
        return Err(Error::InvalidInput("phi and phi_deriv must share a grid".into()));
    }
    if check_history {
        let deviation = (&phi.derivative() - phi_deriv).sup_norm();
        if deviation > HISTORY_TOLERANCE * phi_deriv.sup_norm().max(1.0) {
            return Err(Error::InconsistentHistory { deviation });
        }
    }
    let node = |j: usize| -1.0 + j as f64 / m as f64;
    let history = Segment {
        start: -1,
        x: (0..=m).map(|j| phi.eval(node(j))).collect(),
        dx: (0..=m).map(|j| phi_deriv.eval(node(j))).collect(),
    };
    Ok(run(params, history, horizon, dt))
}

/// Continues from a stored state, relabelled to start at `-1`.
///
/// # Errors
///
/// [`Error::InvalidInput`] for a bad horizon or a step that differs from the segment's.
pub fn restart(params: &NeutralParams, state: &Segment, horizon: f64, dt: f64) -> Result<Trajectory> {
    let m = steps_per_unit(horizon, dt)?;
    if m != state.steps() {
        return Err(Error::InvalidInput(format!(
            "restart step 1/{m} differs from the stored 1/{}",
            state.steps()
        )));
    }
    let history = Segment {
        start: -1,
        ..state.clone()
    };
    Ok(run(params, history, horizon, dt))
}

fn run(params: &NeutralParams, history: Segment, horizon: f64, dt: f64) -> Trajectory {
    let units = horizon.ceil() as usize;
    let mut segments = Vec::with_capacity(units + 1);
    let mut jumps = Vec::with_capacity(units);
    segments.push(history);
    for _ in 0..units {
        let prev = segments.last().expect("history present");
        let next = advance(params, prev);
        jumps.push(next.dx[0] - prev.dx[prev.steps()]);
        segments.push(next);
    }
    Trajectory {
        params: *params,
        dt,
        horizon,
        segments,
        jumps,
    }
}

fn advance(p: &NeutralParams, prev: &Segment) -> Segment {
    let m = prev.steps();
    let dt = 1.0 / m as f64;
    let (a, b, c) = (p.a(), p.b(), p.c());
    let f = |x: Complex64, xd: Complex64, dxd: Complex64| -x * a - xd * b - dxd * c;
    let mut x = Vec::with_capacity(m + 1);
    let mut dx = Vec::with_capacity(m + 1);
    x.push(prev.x[m]);
    dx.push(f(prev.x[m], prev.x[0], prev.dx[0]));
    for j in 0..m {
        let xj = x[j];
        let (xd0, dxd0) = (prev.x[j], prev.dx[j]);
        let (xd1, dxd1) = (prev.x[j + 1], prev.dx[j + 1]);
        let (xdm, dxdm) = prev.hermite(j, 0.5);
        let k1 = f(xj, xd0, dxd0);
        let k2 = f(xj + k1 * (0.5 * dt), xdm, dxdm);
        let k3 = f(xj + k2 * (0.5 * dt), xdm, dxdm);
        let k4 = f(xj + k3 * dt, xd1, dxd1);
        let next = xj + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        x.push(next);
        dx.push(f(next, xd1, dxd1));
    }
    Segment {
        start: prev.start + 1,
        x,
        dx,
    }
}

/// Least-squares slope of `ln sup_θ |x(t + θ)|` at the integers in `[t_start, t_end]`.
///
/// # Errors
///
/// [`Error::InvalidInput`] for a window shorter than 5 or outside the
/// trajectory; [`Error::SignalUnderflow`] when the state falls below `1e-14`.
pub fn decay_rate(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<f64> {
    rate_from(t_start, t_end, traj.horizon().floor(), |k| traj.state_sup(k))
}

fn rate_from(t_start: f64, t_end: f64, limit: f64, sup: impl Fn(usize) -> f64) -> Result<f64> {
    if !(t_end - t_start >= 5.0) || t_start < 0.0 || t_end > limit {
        return Err(Error::InvalidInput(format!(
            "rate window [{t_start}, {t_end}] must span at least 5 inside [0, {limit}]"
        )));
    }
    let ks: Vec<usize> = (t_start.ceil() as usize..=t_end.floor() as usize).collect();
    let mut ys = Vec::with_capacity(ks.len());
    for &k in &ks {
        let s = sup(k);
        if !(s >= UNDERFLOW) {
            return Err(Error::SignalUnderflow { t: k as f64 });
        }
        ys.push(s.ln());
    }
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    Ok(crate::projections::fit_line(&xs, &ys).slope)
}

/// Settings of [`dichotomy_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomySettings {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub slack: f64,
}

impl Default for DichotomySettings {
    fn default() -> Self {
        Self {
            dt: 1.0 / 64.0,
            t_start: 5.0,
            t_end: 25.0,
            slack: 0.02,
        }
    }
}

/// Rate of one part of the split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartRate {
    /// Least-squares exponent, `None` when the part is negligible or lost to rounding.
    pub rate: Option<f64>,
    /// Window actually used.
    pub window: (f64, f64),
    /// Initial sup-norm of the part.
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub gap: usize,
    pub beta: f64,
    pub alpha: f64,
    pub finite_side: FiniteSide,
    /// Finite part evolved in closed form.
    pub finite_analytic: PartRate,
    /// Finite part integrated.
    pub finite_simulated: PartRate,
    /// Infinite part integrated.
    pub complement_simulated: PartRate,
    /// Measured rate of the stable side, compared with `β + slack`.
    pub stable_rate: Option<f64>,
    /// Measured rate of the unstable side, compared with `α - slack`.
    pub unstable_rate: Option<f64>,
    pub passed: bool,
}

/// Splits `phi` at `gap` and measures the exponent of each part.
///
/// The stable part must decay no slower than `e^{(β + slack)t}` and the
/// unstable part must not decay faster than `e^{(α - slack)t}`. A part whose
/// initial norm is below `1e-10·‖phi‖` passes trivially.
///
/// # Errors
///
/// [`Error::InvalidInput`] for complex `phi` or a bad window; errors of the
/// projection and the integrator are propagated.
pub fn dichotomy_check(
    params: &NeutralParams,
    gap: &SpectralGap,
    phi: &GridFunction,
    settings: &DichotomySettings,
) -> Result<DichotomyReport> {
    if phi.max_imag() > 0.0 {
        return Err(Error::InvalidInput("dichotomy_check needs a real history".into()));
    }
    let (finite, complement) = gap_projection(params, gap, phi)?;
    let negligible = 1e-10 * phi.sup_norm();
    let horizon = settings.t_end;

    let coefs: Vec<(Complex64, Complex64)> = gap
        .finite_eigs
        .iter()
        .map(|e| {
            (
                e.value,
                f_functional(params, e.value, phi) / params.eval_h_prime(e.value),
            )
        })
        .collect();
    let thetas: Vec<f64> = (0..=phi.n_intervals()).map(|j| phi.node(j)).collect();
    let analytic_sup = |k: usize| {
        thetas
            .iter()
            .map(|&th| {
                coefs
                    .iter()
                    .map(|&(l, c)| c * (l * (k as f64 + th)).exp())
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    };
    let finite_analytic = measure(finite.sup_norm(), negligible, settings, analytic_sup);

    let finite_deriv = finite.map_nodes(|_, th, _| coefs.iter().map(|&(l, c)| c * l * (l * th).exp()).sum());
    let traj = integrate_with(params, &finite, &finite_deriv, horizon, settings.dt, false)?;
    let finite_simulated = measure(finite.sup_norm(), negligible, settings, |k| traj.state_sup(k));

    let traj = integrate_with(
        params,
        &complement,
        &complement.derivative(),
        horizon,
        settings.dt,
        false,
    )?;
    let complement_simulated = measure(complement.sup_norm(), negligible, settings, |k| traj.state_sup(k));

    let (stable, unstable) = match gap.finite_side {
        FiniteSide::StableFinite => (finite_simulated, complement_simulated),
        FiniteSide::UnstableFinite => (complement_simulated, finite_simulated),
    };
    let stable_ok = stable.initial <= negligible || stable.rate.map_or(true, |r| r <= gap.beta + settings.slack);
    let unstable_ok = unstable.initial <= negligible || unstable.rate.is_some_and(|r| r >= gap.alpha - settings.slack);
    let analytic_ok = finite_analytic.initial <= negligible
        || match gap.finite_side {
            FiniteSide::StableFinite => finite_analytic.rate.map_or(true, |r| r <= gap.beta + settings.slack),
            FiniteSide::UnstableFinite => finite_analytic.rate.is_some_and(|r| r >= gap.alpha - settings.slack),
        };

    Ok(DichotomyReport {
        gap: gap.index,
        beta: gap.beta,
        alpha: gap.alpha,
        finite_side: gap.finite_side,
        finite_analytic,
        finite_simulated,
        complement_simulated,
        stable_rate: stable.rate,
        unstable_rate: unstable.rate,
        passed: stable_ok && unstable_ok && analytic_ok,
    })
}

/// Rate over the settings window, shortened on underflow down to 5 units.
fn measure(initial: f64, negligible: f64, s: &DichotomySettings, sup: impl Fn(usize) -> f64) -> PartRate {
    let mut end = s.t_end;
    if initial <= negligible {
        return PartRate {
            rate: None,
            window: (s.t_start, end),
            initial,
        };
    }
    loop {
        match rate_from(s.t_start, end, s.t_end, &sup) {
            Ok(r) => {
                return PartRate {
                    rate: Some(r),
                    window: (s.t_start, end),
                    initial,
                }
            }
            Err(Error::SignalUnderflow { t }) if t - 1.0 - s.t_start >= 5.0 => end = t - 1.0,
            Err(_) => {
                return PartRate {
                    rate: None,
                    window: (s.t_start, end),
                    initial,
                }
            }
        }
    }
}
