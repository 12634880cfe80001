//! Resolvents and spectral projections on `C([-1, 0], ℂ)`.
//!
//! For `λ` off the spectrum the resolvent of the generator is
//!
//! ```text
//! R(λ)φ(θ) = e^{λθ} ( F(λ, φ)/h(λ) + ∫_θ^0 e^{-λs} φ(s) ds )
//! F(λ, φ)  = φ(0) + cφ(-1) - (cλ + b) e^{-λ} ∫_{-1}^0 e^{-λs} φ(s) ds
//! ```
//!
//! and at a simple root the residue gives the rank-one projection
//! `P_λφ = e^{λθ} F(λ, φ)/h'(λ)`. The auxiliary equation `x'(t) + cx'(t-1) = 0`
//! has the same structure with `h0` and `F0` (no `a`, no `b`). Its roots are
//! `z_n` and its projections `Q_{z_n}` have the closed form
//! `(φ(0) + cφ(-1) + z_n ∫ e^{-z_n s}φ(s) ds) e^{z_nθ} / z_n`.

mod experiments;
mod kernel;

pub use experiments::{
    fit_line, norm_growth_experiment, parseval_partial_sums, perturbation_norm, perturbation_sweep, symmetric_indices,
    LineFit, NormGrowthRow, NormGrowthTable, PerturbationRecord,
};
pub use kernel::{kernel_form, operator_norm, KernelForm, KernelTerm};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::SpectralGap;
use crate::rootfinder::{winding_number, Eigenvalue, Rectangle};
use crate::{Error, GridFunction, NeutralParams, Result, Tolerances};

/// Which characteristic function a projection is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `h` and `F`.
    MainEquation,
    /// `h0` and `F0`.
    Auxiliary,
}

impl Kind {
    fn char_fn(self, params: &NeutralParams, lambda: Complex64) -> Complex64 {
        match self {
            Kind::MainEquation => params.eval_h(lambda),
            Kind::Auxiliary => params.eval_h0(lambda),
        }
    }

    fn char_prime(self, params: &NeutralParams, lambda: Complex64) -> Complex64 {
        match self {
            Kind::MainEquation => params.eval_h_prime(lambda),
            Kind::Auxiliary => params.eval_h0_prime(lambda),
        }
    }

    /// Coefficient of `∫_{-1}^0 e^{-λs}φ(s) ds` in the functional.
    fn integral_coefficient(self, params: &NeutralParams, lambda: Complex64) -> Complex64 {
        let b = match self {
            Kind::MainEquation => params.b(),
            Kind::Auxiliary => 0.0,
        };
        -(params.c() * lambda + b) * (-lambda).exp()
    }

    fn functional(self, params: &NeutralParams, lambda: Complex64, f: &GridFunction) -> Complex64 {
        f.at_zero()
            + params.c() * f.at_minus_one()
            + self.integral_coefficient(params, lambda) * f.weighted_integral(lambda, -1.0, 0.0)
    }
}

/// `F(λ, φ) = φ(0) + cφ(-1) - (cλ + b)e^{-λ} ∫_{-1}^0 e^{-λs}φ(s) ds`.
pub fn f_functional(params: &NeutralParams, lambda: Complex64, f: &GridFunction) -> Complex64 {
    Kind::MainEquation.functional(params, lambda, f)
}

/// `F0(λ, φ) = φ(0) + cφ(-1) - cλe^{-λ} ∫_{-1}^0 e^{-λs}φ(s) ds`.
pub fn f0_functional(params: &NeutralParams, lambda: Complex64, f: &GridFunction) -> Complex64 {
    Kind::Auxiliary.functional(params, lambda, f)
}

/// `R(λ)f` for the main equation.
///
/// # Errors
///
/// [`Error::NearSpectrum`] when `|h(λ)| ≤ 1e-8`.
pub fn resolvent(params: &NeutralParams, lambda: Complex64, f: &GridFunction) -> Result<GridFunction> {
    resolvent_of(params, Kind::MainEquation, lambda, f)
}

/// Resolvent of the chosen kind.
pub fn resolvent_of(params: &NeutralParams, kind: Kind, lambda: Complex64, f: &GridFunction) -> Result<GridFunction> {
    let hv = kind.char_fn(params, lambda);
    if !(hv.norm() > Tolerances::default().near_spectrum) {
        return Err(Error::NearSpectrum {
            lambda,
            modulus: hv.norm(),
        });
    }
    let head = kind.functional(params, lambda, f) / hv;
    let tail = f.cumulative_weighted_integral(lambda);
    Ok(f.map_nodes(|j, theta, _| (lambda * theta).exp() * (head + tail[j])))
}

/// `P_λ f = e^{λθ} F(λ, f)/h'(λ)`.
///
/// # Errors
///
/// [`Error::MultipleRoot`] unless `eig` is simple.
pub fn residue_projection(params: &NeutralParams, eig: &Eigenvalue, f: &GridFunction) -> Result<GridFunction> {
    if !eig.is_simple() {
        return Err(Error::MultipleRoot {
            value: eig.value,
            multiplicity: eig.multiplicity,
        });
    }
    Ok(rank_one(params, Kind::MainEquation, eig.value, f))
}

fn rank_one(params: &NeutralParams, kind: Kind, lambda: Complex64, f: &GridFunction) -> GridFunction {
    let coef = kind.functional(params, lambda, f) / kind.char_prime(params, lambda);
    f.map_nodes(|_, theta, _| (lambda * theta).exp() * coef)
}

/// `(1/2πi) ∮ R(ω)f dω` over the circle `|ω - center| = radius`, by the
/// trapezoidal rule with `quad_nodes` points.
///
/// The square of half-width `1.1·radius` must hold exactly one zero and so
/// must the square inscribed in the circle of radius `0.9·radius`.
///
/// # Errors
///
/// [`Error::WrongCount`] if the outer square does not hold exactly one zero,
/// [`Error::BoundaryTooClose`] if that zero is within 10% of the circle or a
/// count cannot be resolved.
pub fn contour_projection(
    params: &NeutralParams,
    center: Complex64,
    radius: f64,
    quad_nodes: usize,
    f: &GridFunction,
    kind: Kind,
) -> Result<GridFunction> {
    if !(radius > 0.0 && radius.is_finite()) || quad_nodes < 64 {
        return Err(Error::InvalidInput(format!(
            "contour needs radius > 0 and at least 64 nodes, got {radius} and {quad_nodes}"
        )));
    }
    let tol = Tolerances::default();
    let g = |z: Complex64| kind.char_fn(params, z);
    let outer = winding_number(&g, &Rectangle::square(center, 1.1 * radius)?, &tol)?;
    if outer != 1 {
        return Err(Error::WrongCount {
            expected: 1,
            found: outer,
        });
    }
    let inner = winding_number(&g, &Rectangle::square(center, 0.9 * radius / 2f64.sqrt())?, &tol)?;
    if inner != 1 {
        return Err(Error::BoundaryTooClose {
            min_modulus: f64::NAN,
            at: center,
        });
    }

    let m = quad_nodes as f64;
    let terms: Vec<GridFunction> = (0..quad_nodes)
        .into_par_iter()
        .map(|k| {
            let w = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / m);
            resolvent_of(params, kind, center + w, f).map(|r| r.scale(w / m))
        })
        .collect::<Result<_>>()?;
    let mut acc = GridFunction::zeros(f.n_intervals())?;
    for t in &terms {
        acc = &acc + t;
    }
    Ok(acc)
}

/// `Q_{z_n} f = (f(0) + cf(-1) + z_n ∫_{-1}^0 e^{-z_n s}f(s) ds) e^{z_nθ} / z_n`.
///
/// # Errors
///
/// [`Error::DoubleRootExcluded`] for `c = -1, n = 0`.
pub fn aux_projection(params: &NeutralParams, n: i64, f: &GridFunction) -> Result<GridFunction> {
    if params.c() == -1.0 && n == 0 {
        return Err(Error::DoubleRootExcluded);
    }
    let z = params.auxiliary_eigen(n);
    let coef = (f.at_zero() + params.c() * f.at_minus_one() + z * f.weighted_integral(z, -1.0, 0.0)) / z;
    Ok(f.map_nodes(|_, theta, _| (z * theta).exp() * coef))
}

/// `T f = Σ_{n ∈ indices} Q_{z_n} f`.
pub fn partial_sum(params: &NeutralParams, indices: &[i64], f: &GridFunction) -> Result<GridFunction> {
    let mut acc = GridFunction::zeros(f.n_intervals())?;
    for &n in indices {
        acc = &acc + &aux_projection(params, n, f)?;
    }
    Ok(acc)
}

/// Splits `f` into the finite-rank part over `gap.finite_eigs` and the rest.
pub fn gap_projection(
    params: &NeutralParams,
    gap: &SpectralGap,
    f: &GridFunction,
) -> Result<(GridFunction, GridFunction)> {
    let op = ProjectionOperator::new(*params, gap.finite_eigs.clone(), Kind::MainEquation)?;
    let finite = op.apply(f);
    let complement = f - &finite;
    Ok((finite, complement))
}

/// Finite sum of rank-one projections over simple roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOperator {
    params: NeutralParams,
    eigs: Vec<Complex64>,
    kind: Kind,
    real_output: bool,
}

impl ProjectionOperator {
    /// # Errors
    ///
    /// [`Error::MultipleRoot`] if any root is not simple.
    pub fn new(params: NeutralParams, eigs: Vec<Eigenvalue>, kind: Kind) -> Result<Self> {
        if let Some(e) = eigs.iter().find(|e| !e.is_simple()) {
            return Err(Error::MultipleRoot {
                value: e.value,
                multiplicity: e.multiplicity,
            });
        }
        Ok(Self::from_values(params, eigs.iter().map(|e| e.value).collect(), kind))
    }

    /// `Σ_{n ∈ indices} Q_{z_n}`.
    ///
    /// # Errors
    ///
    /// [`Error::DoubleRootExcluded`] if `c = -1` and `0 ∈ indices`.
    pub fn auxiliary(params: NeutralParams, indices: &[i64]) -> Result<Self> {
        if params.c() == -1.0 && indices.contains(&0) {
            return Err(Error::DoubleRootExcluded);
        }
        let eigs = indices.iter().map(|&n| params.auxiliary_eigen(n)).collect();
        Ok(Self::from_values(params, eigs, Kind::Auxiliary))
    }

    /// Stable or unstable finite part of a gap.
    pub fn from_gap(params: NeutralParams, gap: &SpectralGap) -> Result<Self> {
        Self::new(params, gap.finite_eigs.clone(), Kind::MainEquation)
    }

    fn from_values(params: NeutralParams, eigs: Vec<Complex64>, kind: Kind) -> Self {
        let real_output = eigs
            .iter()
            .all(|z| z.im == 0.0 || eigs.iter().any(|w| (w - z.conj()).norm() <= 1e-9 * (1.0 + z.norm())));
        Self {
            params,
            eigs,
            kind,
            real_output,
        }
    }

    pub fn params(&self) -> &NeutralParams {
        &self.params
    }

    pub fn eigs(&self) -> &[Complex64] {
        &self.eigs
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.eigs.len()
    }

    /// The root set is closed under conjugation, so real inputs stay real.
    pub fn real_output(&self) -> bool {
        self.real_output
    }

    /// Sum of the residue formulas.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let parts: Vec<GridFunction> = self
            .eigs
            .par_iter()
            .map(|&l| rank_one(&self.params, self.kind, l, f))
            .collect();
        let mut acc = f.scale(Complex64::new(0.0, 0.0));
        for p in &parts {
            acc = &acc + p;
        }
        acc
    }

    pub fn kernel_form(&self) -> KernelForm {
        kernel_form(self)
    }

    /// Exact sup-norm operator norm on a `4·grid` evaluation mesh.
    pub fn operator_norm(&self, grid: usize) -> f64 {
        operator_norm(self, grid)
    }
}

impl GridFunction {
    /// New function on the same grid from `(j, θ_j, f_j)`.
    pub(crate) fn map_nodes(&self, g: impl Fn(usize, f64, Complex64) -> Complex64) -> Self {
        let samples = self
            .samples()
            .iter()
            .enumerate()
            .map(|(j, &z)| g(j, self.node(j), z))
            .collect();
        GridFunction::from_samples(samples).expect("same grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootfinder::{enumerate_eigenvalues, find_eigenvalue_near};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn smooth(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
        let coef: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        GridFunction::from_callable(
            |t| {
                coef.iter()
                    .enumerate()
                    .map(|(k, &(re, im, ph))| c(re, im) * (k as f64 * t + ph).cos())
                    .sum()
            },
            n,
        )
        .unwrap()
    }

    fn dist(a: &GridFunction, b: &GridFunction) -> f64 {
        (a - b).sup_norm()
    }

    #[test]
    fn functional_examples() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let one = GridFunction::from_real_callable(|_| 1.0, 256).unwrap();
        assert!((f_functional(&p, c(0.0, 0.0), &one) - (1.0 + 0.5 - 2.0)).norm() < 1e-14);
        for l in [c(0.3, 2.0), c(-1.0, -4.0), c(0.0, 0.5)] {
            let e = GridFunction::exponential(l, 1024).unwrap();
            assert!((f_functional(&p, l, &e) - p.eval_h_prime(l)).norm() < 1e-12);
            assert!((f0_functional(&p, l, &e) - p.eval_h0_prime(l)).norm() < 1e-12);
        }
    }

    #[test]
    fn resolvent_solves_boundary_problem() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = smooth(&mut rng, 1024);
        let l = c(0.4, 1.3);
        let g = resolvent(&p, l, &f).unwrap();
        let dg = g.derivative();
        let lhs = &g.scale(l) - &dg;
        let scale = f.sup_norm();
        for j in 4..1020 {
            assert!((lhs.samples()[j] - f.samples()[j]).norm() <= 1e-4 * scale);
        }
        let bc = dg.at_zero() + p.c() * dg.at_minus_one() + p.a() * g.at_zero() + p.b() * g.at_minus_one();
        assert!(bc.norm() <= 1e-4 * scale);
    }

    #[test]
    fn resolvent_conjugation_and_guard() {
        let p = NeutralParams::new(2.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = smooth(&mut rng, 512);
        let l = c(0.2, 3.3);
        let a = resolvent(&p, l.conj(), &f.conj()).unwrap();
        let b = resolvent(&p, l, &f).unwrap().conj();
        assert!(dist(&a, &b) < 1e-13);
        let z = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        assert!(matches!(
            resolvent(&z, c(0.0, 0.0), &f),
            Err(Error::NearSpectrum { .. })
        ));
    }

    #[test]
    fn resolvent_closed_form_without_a_b() {
        // a = b = 0, f = 1: F = 1 + c - cλe^{-λ}(e^λ - 1)/λ = 1 + ce^{-λ}, h = λ(1 + ce^{-λ}),
        // so R f = e^{λθ}/λ + (1 - e^{λθ})/λ = 1/λ.
        let p = NeutralParams::new(0.0, 0.0, 0.7).unwrap();
        let one = GridFunction::from_real_callable(|_| 1.0, 1024).unwrap();
        for l in [0.5, 1.0, 3.0] {
            let g = resolvent(&p, c(l, 0.0), &one).unwrap();
            for z in g.samples() {
                assert!((z - 1.0 / l).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn residue_projection_properties() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let e = find_eigenvalue_near(&p, p.auxiliary_eigen(3)).unwrap();
        let phi = GridFunction::exponential(e.value, 1024).unwrap();
        assert!(dist(&residue_projection(&p, &e, &phi).unwrap(), &phi) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = smooth(&mut rng, 1024);
        let g = residue_projection(&p, &e, &f).unwrap();
        let gg = residue_projection(&p, &e, &g).unwrap();
        assert!(dist(&g, &gg) < 1e-10 * (1.0 + g.sup_norm()));
        for (j, z) in g.samples().iter().enumerate() {
            let expect = g.at_zero() * (e.value * g.node(j)).exp();
            assert!((z - expect).norm() < 1e-10 * (1.0 + g.sup_norm()));
        }
        let double = Eigenvalue { multiplicity: 2, ..e };
        assert!(matches!(
            residue_projection(&p, &double, &f),
            Err(Error::MultipleRoot { .. })
        ));
    }

    #[test]
    fn contour_matches_residue() {
        let p = NeutralParams::new(1.0, 2.0, 0.5).unwrap();
        let spec = enumerate_eigenvalues(&p, 8).unwrap();
        let e = *spec.indexed(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3 {
            let f = smooth(&mut rng, 1024);
            let r = residue_projection(&p, &e, &f).unwrap();
            let k = contour_projection(&p, e.value, 1.0, 128, &f, Kind::MainEquation).unwrap();
            assert!(dist(&r, &k) < 1e-8, "{}", dist(&r, &k));
            let k2 = contour_projection(&p, e.value, 1.0, 256, &f, Kind::MainEquation).unwrap();
            assert!(dist(&k, &k2) < 1e-10);
        }
    }

    #[test]
    fn contour_checks_counts() {
        let p = NeutralParams::new(0.0, 0.0, 2.0).unwrap();
        let f = GridFunction::from_real_callable(|t| t, 64).unwrap();
        let z = c(0.0, 0.0);
        assert!(matches!(
            contour_projection(&p, z, 7.0, 64, &f, Kind::MainEquation),
            Err(Error::WrongCount { found: 3, .. })
        ));
        assert!(matches!(
            contour_projection(&p, z + 0.95, 1.0, 64, &f, Kind::MainEquation),
            Err(Error::BoundaryTooClose { .. })
        ));
        assert!(contour_projection(&p, z, 1.0, 32, &f, Kind::MainEquation).is_err());
    }

    #[test]
    fn aux_projection_against_contour() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cc in [0.5, -2.0, 1.0] {
            let p = NeutralParams::new(0.3, -0.2, cc).unwrap();
            for n in [-2, 1, 4] {
                let f = smooth(&mut rng, 1024);
                let q = aux_projection(&p, n, &f).unwrap();
                let k = contour_projection(&p, p.auxiliary_eigen(n), 1.0, 128, &f, Kind::Auxiliary).unwrap();
                assert!(dist(&q, &k) < 1e-8);
            }
        }
    }

    #[test]
    fn aux_projection_examples() {
        let p = NeutralParams::new(0.0, 0.0, -0.5).unwrap();
        let z2 = p.auxiliary_eigen(2);
        let e2 = GridFunction::exponential(z2, 1024).unwrap();
        assert!(dist(&aux_projection(&p, 2, &e2).unwrap(), &e2) < 1e-10);
        for m in [-3, 0, 1, 5] {
            let em = GridFunction::exponential(p.auxiliary_eigen(m), 1024).unwrap();
            assert!(aux_projection(&p, 2, &em).unwrap().sup_norm() < 1e-8);
        }
        let q = NeutralParams::new(0.0, 0.0, -1.0).unwrap();
        assert!(matches!(aux_projection(&q, 0, &e2), Err(Error::DoubleRootExcluded)));
        assert!(aux_projection(&q, 1, &e2).is_ok());
    }

    #[test]
    fn partial_sums_fix_their_span() {
        let p = NeutralParams::new(0.0, 0.0, 0.5).unwrap();
        let idx: Vec<i64> = (-4..=3).collect();
        let f = GridFunction::from_callable(
            |t| (p.auxiliary_eigen(-2) * t).exp() * 2.0 - (p.auxiliary_eigen(3) * t).exp() * c(0.0, 1.0),
            1024,
        )
        .unwrap();
        assert!(dist(&partial_sum(&p, &idx, &f).unwrap(), &f) < 1e-9);
        let g = GridFunction::from_real_callable(|t| (3.0 * t).sin(), 1024).unwrap();
        let t3 = partial_sum(&p, &idx, &g).unwrap();
        let t4 = partial_sum(&p, &[&idx[..], &[-5, 4]].concat(), &g).unwrap();
        let extra = &aux_projection(&p, -5, &g).unwrap() + &aux_projection(&p, 4, &g).unwrap();
        assert!(dist(&(&t4 - &t3), &extra) < 1e-12);
        assert!(dist(&partial_sum(&p, &[1], &g).unwrap(), &aux_projection(&p, 1, &g).unwrap()) == 0.0);
    }

    #[test]
    fn gap_projection_is_real_and_idempotent() {
        let p = NeutralParams::new(2.0, 0.5, 1.0).unwrap();
        let spec = enumerate_eigenvalues(&p, 40).unwrap();
        let cfg = crate::classifier::omega_configuration(&spec);
        let gaps = crate::classifier::enumerate_gaps(&cfg, spec.roots(), 6).unwrap();
        let f = GridFunction::from_real_callable(|t| (2.0 * t).cos() + t * t, 1024).unwrap();
        let (fin, rest) = gap_projection(&p, &gaps[5], &f).unwrap();
        assert!(fin.max_imag() <= 1e-10 * f.sup_norm());
        assert!(rest.max_imag() <= 1e-10 * f.sup_norm());
        let (again, _) = gap_projection(&p, &gaps[5], &fin).unwrap();
        assert!(dist(&fin, &again) < 1e-9);
        assert!(ProjectionOperator::from_gap(p, &gaps[5]).unwrap().real_output());

        let (single, _) = gap_projection(&p, &gaps[1], &f).unwrap();
        assert_eq!(gaps[1].finite_eigs.len(), 1);
        let l = gaps[1].finite_eigs[0].value;
        assert_eq!(l.im, 0.0);
        let span = GridFunction::exponential(l, 1024).unwrap().scale(single.at_zero());
        assert!(dist(&single, &span) < 1e-12);
    }
}
