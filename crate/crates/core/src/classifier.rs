//! Distribution of roots around the accumulation line `Re λ = ln|c|`.
//!
//! `Σ` is the closure of the set of root real parts and `Ω = ℝ \ Σ`. The
//! components of `Ω` are the spectral gaps. `Θ(δ)` counts roots farther than
//! `δ` from the accumulation line and `K_m` lists its jump values.
//!
//! Rows use the shifted constants `A`, `B` of [`NeutralParams`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::rootfinder::{enumerate_eigenvalues, Eigenvalue, Spectrum};
use crate::{Error, NeutralParams, Result, Tolerances};

/// Strict comparisons against the accumulation line use this margin.
pub const SIGN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Table {
    /// `c > 0`.
    Table1,
    /// `c < 0`.
    Table2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Row {
    /// `A > |B|`.
    AGtAbsB,
    /// `|A| < -B`.
    AbsALtNegB,
    /// `|A| < B`.
    AbsALtB,
    /// `A < -|B|`.
    ALtNegAbsB,
    /// `A = -B > 0`.
    BoundaryAEqAbsB,
    /// `A = -B ≤ 0`.
    BoundaryAEqNegB,
    /// `A = B`.
    BoundaryAEqB,
}

impl Row {
    pub fn is_boundary(self) -> bool {
        matches!(self, Row::BoundaryAEqAbsB | Row::BoundaryAEqNegB | Row::BoundaryAEqB)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionTag {
    pub table: Table,
    pub row: Row,
}

/// Sign pattern of `x = Re λ - ln|c|` predicted by a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    AllNegative,
    AllPositive,
    OneRealNegative,
    OneRealPositive,
    OnLine,
}

impl RegionTag {
    pub fn pattern(&self) -> Pattern {
        use Row::*;
        match (self.table, self.row) {
            (_, AGtAbsB) => Pattern::AllNegative,
            (Table::Table1, AbsALtNegB) | (Table::Table2, AbsALtB) => Pattern::AllPositive,
            (Table::Table1, AbsALtB) | (Table::Table2, AbsALtNegB) => Pattern::OneRealNegative,
            (_, ALtNegAbsB) => Pattern::OneRealPositive,
            _ => Pattern::OnLine,
        }
    }
}

/// Row of the distribution table selected by `(A, B)`.
pub fn classify_region(params: &NeutralParams) -> RegionTag {
    classify_region_with(params, &Tolerances::default())
}

pub fn classify_region_with(params: &NeutralParams, tol: &Tolerances) -> RegionTag {
    let (a, b) = (params.big_a(), params.big_b());
    let eps = tol.boundary_row;
    let table = if params.delta() > 0 {
        Table::Table1
    } else {
        Table::Table2
    };
    let row = if (a.abs() - b.abs()).abs() <= eps {
        let eq_b = (a - b).abs() <= eps;
        let eq_neg_b = (a + b).abs() <= eps;
        match (eq_b, eq_neg_b) {
            (true, true) if table == Table::Table1 => Row::BoundaryAEqNegB,
            (true, _) => Row::BoundaryAEqB,
            _ if a > 0.0 => Row::BoundaryAEqAbsB,
            _ => Row::BoundaryAEqNegB,
        }
    } else if a > b.abs() {
        Row::AGtAbsB
    } else if a < -b.abs() {
        Row::ALtNegAbsB
    } else if b > 0.0 {
        Row::AbsALtB
    } else {
        Row::AbsALtNegB
    };
    RegionTag { table, row }
}

/// Outcome of checking a root list against its table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub tag: RegionTag,
    pub passed: bool,
    /// Roots breaking the row predicate.
    pub violations: Vec<Complex64>,
}

/// Checks the sign pattern of the shifted real parts of all certified roots.
pub fn verify_region(params: &NeutralParams, eigs: &[Eigenvalue]) -> RegionReport {
    let tag = classify_region(params);
    let shift = params.accumulation();
    let roots: Vec<&Eigenvalue> = eigs.iter().filter(|e| e.certified).collect();
    let x = |e: &Eigenvalue| e.value.re - shift;
    let neg = |e: &Eigenvalue| x(e) < -SIGN_TOLERANCE;
    let pos = |e: &Eigenvalue| x(e) > SIGN_TOLERANCE;

    let exceptional = |outlier: &dyn Fn(&Eigenvalue) -> bool, rest: &dyn Fn(&Eigenvalue) -> bool| {
        let odd: Vec<&&Eigenvalue> = roots.iter().filter(|e| !rest(e)).collect();
        let ok = odd.len() == 1 && odd[0].is_real() && outlier(odd[0]);
        if ok {
            Vec::new()
        } else if odd.is_empty() {
            vec![Complex64::new(f64::NAN, f64::NAN)]
        } else {
            odd.iter().map(|e| e.value).collect()
        }
    };

    let violations: Vec<Complex64> = match tag.pattern() {
        Pattern::AllNegative => roots.iter().filter(|e| !neg(e)).map(|e| e.value).collect(),
        Pattern::AllPositive => roots.iter().filter(|e| !pos(e)).map(|e| e.value).collect(),
        Pattern::OneRealNegative => exceptional(&neg, &pos),
        Pattern::OneRealPositive => exceptional(&pos, &neg),
        Pattern::OnLine => roots
            .iter()
            .filter(|e| !e.is_real() && x(e).abs() > SIGN_TOLERANCE)
            .map(|e| e.value)
            .collect(),
    };
    RegionReport {
        tag,
        passed: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaCase {
    I,
    Ii,
    Iii,
    Iv,
    V,
}

/// Which side of `ln|c|` the gaps are enumerated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Computed prefix of the structure of `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaConfiguration {
    pub case: OmegaCase,
    /// `γ_0, γ_1, …` in the order of the matching case.
    pub gamma: Vec<f64>,
    /// Distinct real parts of all roots, increasing.
    pub sigma: Vec<f64>,
    pub accumulation: f64,
    /// Countably many components.
    pub infinite: bool,
    /// Side holding the gap sequence.
    pub side: Side,
    /// Roots not enumerated lie within this distance of `ln|c|`.
    pub tail_bound: f64,
    /// An exceptional real part that clusters with another real part.
    pub collision: Option<f64>,
}

fn cluster(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for x in xs {
        match out.last() {
            Some(&last) if x - last <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Configuration case together with the computed `γ_k`.
pub fn omega_configuration(spectrum: &Spectrum) -> OmegaConfiguration {
    let params = spectrum.params();
    let tol = Tolerances::default();
    let ln_c = params.accumulation();
    let tag = classify_region(params);
    let eigs = spectrum.roots();
    let sigma = cluster(
        eigs.iter().filter(|e| e.certified).map(|e| e.value.re).collect(),
        tol.cluster,
    );
    let left: Vec<f64> = sigma.iter().copied().filter(|&x| x < ln_c - tol.cluster).collect();
    let mut right: Vec<f64> = sigma.iter().copied().filter(|&x| x > ln_c + tol.cluster).collect();
    right.reverse();

    let real_parts = |pred: &dyn Fn(f64) -> bool| -> Vec<f64> {
        eigs.iter()
            .filter(|e| e.is_real() && pred(e.value.re))
            .map(|e| e.value.re)
            .collect()
    };
    let collides = |x: f64| {
        eigs.iter()
            .filter(|e| !e.is_real())
            .any(|e| (e.value.re - x).abs() <= tol.cluster)
            .then_some(x)
    };

    let (case, gamma, side, collision) = match tag.pattern() {
        Pattern::AllNegative => (OmegaCase::I, left, Side::Left, None),
        Pattern::AllPositive => (OmegaCase::Ii, right, Side::Right, None),
        Pattern::OneRealNegative => {
            let g0 = real_parts(&|x| x < ln_c).into_iter().next();
            let mut gamma: Vec<f64> = g0.into_iter().collect();
            let collision = g0.and_then(collides);
            gamma.extend(right);
            (OmegaCase::Iii, gamma, Side::Right, collision)
        }
        Pattern::OneRealPositive => {
            let g0 = real_parts(&|x| x > ln_c).into_iter().next();
            let mut gamma: Vec<f64> = g0.into_iter().collect();
            let collision = g0.and_then(collides);
            gamma.extend(left);
            (OmegaCase::Iv, gamma, Side::Left, collision)
        }
        Pattern::OnLine => {
            let side = if right.len() > left.len() {
                Side::Right
            } else {
                Side::Left
            };
            let gamma = if side == Side::Left { left } else { right };
            (OmegaCase::V, gamma, side, None)
        }
    };

    OmegaConfiguration {
        case,
        gamma,
        sigma,
        accumulation: ln_c,
        infinite: params.dichotomy_condition(),
        side,
        tail_bound: spectrum.tail_bound(),
        collision,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteSide {
    /// Finitely many roots have `Re λ < β`.
    StableFinite,
    /// Finitely many roots have `Re λ > α`.
    UnstableFinite,
}

/// One component `(β, α)` of `Ω`, shrunk by the gap margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub index: usize,
    pub beta: f64,
    pub alpha: f64,
    pub finite_side: FiniteSide,
    pub finite_eigs: Vec<Eigenvalue>,
}

/// Gaps `m = 0..m_max` on the configuration's side, outermost first.
///
/// Gap 0 is the unbounded component, represented by a unit-width interval
/// beside the outermost real part.
pub fn enumerate_gaps(config: &OmegaConfiguration, eigs: &[Eigenvalue], m_max: usize) -> Result<Vec<SpectralGap>> {
    let margin = Tolerances::default().gap_margin;
    let ln_c = config.accumulation;
    let mut ends: Vec<f64> = match config.side {
        Side::Left => config.sigma.iter().copied().filter(|&x| x < ln_c - 1e-9).collect(),
        Side::Right => {
            let mut r: Vec<f64> = config.sigma.iter().copied().filter(|&x| x > ln_c + 1e-9).collect();
            r.reverse();
            r
        }
    };
    let available;
    if config.infinite {
        ends.retain(|&x| (x - ln_c).abs() > config.tail_bound);
        available = ends.len();
        if available < m_max {
            return Err(Error::InsufficientRoots {
                side: config.side.name(),
                needed: m_max,
                available,
            });
        }
    } else {
        ends.push(ln_c);
        available = ends.len();
        if m_max > 3 {
            return Err(Error::InsufficientRoots {
                side: config.side.name(),
                needed: m_max,
                available: available.min(3),
            });
        }
    }

    let count = m_max.min(available);
    let mut gaps = Vec::with_capacity(count);
    for m in 0..count {
        let (outer, inner) = match m {
            0 => match config.side {
                Side::Left => (ends[0] - 1.0, ends[0]),
                Side::Right => (ends[0] + 1.0, ends[0]),
            },
            _ => (ends[m - 1], ends[m]),
        };
        let (lo, hi) = if outer < inner { (outer, inner) } else { (inner, outer) };
        let w = hi - lo;
        let (beta, alpha) = (lo + margin * w, hi - margin * w);
        let (finite_side, finite_eigs) = match config.side {
            Side::Left => (
                FiniteSide::StableFinite,
                eigs.iter().filter(|e| e.value.re < beta).copied().collect(),
            ),
            Side::Right => (
                FiniteSide::UnstableFinite,
                eigs.iter().filter(|e| e.value.re > alpha).copied().collect(),
            ),
        };
        gaps.push(SpectralGap {
            index: m,
            beta,
            alpha,
            finite_side,
            finite_eigs,
        });
    }
    Ok(gaps)
}

/// Deepest enumeration tried by [`resolve_gaps`].
pub const MAX_RESOLVE_N: u32 = 2048;

/// A spectrum deep enough to certify the requested gaps.
#[derive(Debug, Clone)]
pub struct GapResolution {
    pub spectrum: Spectrum,
    pub config: OmegaConfiguration,
    pub gaps: Vec<SpectralGap>,
}

/// [`enumerate_gaps`] on an enumeration that doubles from `n_start` until the
/// tail bound certifies `m_max` gaps or `n_max` reaches [`MAX_RESOLVE_N`].
pub fn resolve_gaps(params: &NeutralParams, m_max: usize, n_start: u32) -> Result<GapResolution> {
    let mut n_max = n_start.clamp(1, MAX_RESOLVE_N);
    loop {
        let spectrum = enumerate_eigenvalues(params, n_max)?;
        let config = omega_configuration(&spectrum);
        match enumerate_gaps(&config, spectrum.roots(), m_max) {
            Ok(gaps) => return Ok(GapResolution { spectrum, config, gaps }),
            Err(Error::InsufficientRoots { .. }) if config.infinite && n_max < MAX_RESOLVE_N => {
                n_max = (2 * n_max).min(MAX_RESOLVE_N);
            }
            Err(e) => return Err(e),
        }
    }
}

/// `Θ(δ)`: roots with `|Re λ - ln|c|| > δ`, counted with multiplicity.
pub fn theta(spectrum: &Spectrum, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let tail = spectrum.tail_bound();
    if delta < tail {
        return Err(Error::Incomplete {
            delta,
            tail_bound: tail,
        });
    }
    let ln_c = spectrum.params().accumulation();
    Ok(spectrum
        .roots()
        .iter()
        .filter(|e| (e.value.re - ln_c).abs() > delta)
        .map(|e| e.multiplicity as usize)
        .sum())
}

/// The jump values `0 = K_0 < K_1 < … < K_{m_max}` of `Θ` with successive ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSequence {
    pub values: Vec<usize>,
    /// Distance levels `d_m` at which `Θ` jumps, `d_1 > d_2 > …`.
    pub levels: Vec<f64>,
    /// `K_{m+1}/K_m` for `m ≥ 1`.
    pub ratios: Vec<f64>,
}

pub fn k_sequence(spectrum: &Spectrum, m_max: usize) -> Result<KSequence> {
    let params = spectrum.params();
    if !params.dichotomy_condition() {
        return Err(Error::InvalidInput(
            "K_m needs infinitely many gaps (|A| != |B|)".into(),
        ));
    }
    let ln_c = params.accumulation();
    let tail = spectrum.tail_bound();
    let mut dist: Vec<(f64, usize)> = spectrum
        .roots()
        .iter()
        .map(|e| ((e.value.re - ln_c).abs(), e.multiplicity as usize))
        .filter(|&(d, _)| d > tail)
        .collect();
    dist.sort_by(|x, y| y.0.total_cmp(&x.0));
    let cluster_tol = Tolerances::default().cluster;
    let mut levels: Vec<f64> = Vec::new();
    let mut values = vec![0usize];
    for (d, m) in dist {
        match levels.last() {
            Some(&last) if last - d <= cluster_tol => *values.last_mut().expect("nonempty") += m,
            _ => {
                levels.push(d);
                let prev = *values.last().expect("nonempty");
                values.push(prev + m);
            }
        }
    }
    if levels.len() <= m_max {
        return Err(Error::Incomplete {
            delta: levels.last().copied().unwrap_or(f64::INFINITY),
            tail_bound: tail,
        });
    }
    values.truncate(m_max + 1);
    levels.truncate(m_max);
    let ratios = values.windows(2).skip(1).map(|w| w[1] as f64 / w[0] as f64).collect();
    Ok(KSequence { values, levels, ratios })
}

/// The quantity `ρ(x0)` whose reciprocal equals `tan²(y/2)` at a root `x0 + iy`.
pub fn rho(params: &NeutralParams, x0: f64) -> f64 {
    let (a, b, c) = (params.a(), params.b(), params.c());
    let e = (-x0).exp();
    let p = ((a + 2.0 * x0) * c + b) * e;
    let q = c * (c * x0 + b) * e * e + a + x0;
    (p - q) / (p + q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalLineReport {
    pub passed: bool,
    /// Real parts shared by two roots in the upper half plane.
    pub shared: Vec<f64>,
    /// `(root, tan²(y/2)·ρ(x0))` for each checked root; ideally 1.
    pub rho_products: Vec<(Complex64, f64)>,
    pub rho_failures: Vec<Complex64>,
}

/// At most one root with `Im λ > 0` per vertical line off `ln|c|`.
pub fn vertical_line_check(params: &NeutralParams, eigs: &[Eigenvalue]) -> VerticalLineReport {
    let ln_c = params.accumulation();
    let mut upper: Vec<Complex64> = eigs
        .iter()
        .filter(|e| e.certified && e.value.im > 0.0 && (e.value.re - ln_c).abs() > SIGN_TOLERANCE)
        .map(|e| e.value)
        .collect();
    upper.sort_by(|x, y| x.re.total_cmp(&y.re));
    let mut shared: Vec<f64> = upper
        .windows(2)
        .filter(|w| (w[1].re - w[0].re).abs() <= SIGN_TOLERANCE)
        .map(|w| w[0].re)
        .collect();
    shared.dedup();

    let mut rho_products = Vec::new();
    let mut rho_failures = Vec::new();
    for z in &upper {
        let r = rho(params, z.re);
        if !(r > 0.0) {
            continue;
        }
        let t = (z.im / 2.0).tan();
        let product = t * t * r;
        rho_products.push((*z, product));
        if (product - 1.0).abs() > 1e-6 + 1e-15 * t * t {
            rho_failures.push(*z);
        }
    }
    VerticalLineReport {
        passed: shared.is_empty() && rho_failures.is_empty(),
        shared,
        rho_products,
        rho_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootfinder::enumerate_eigenvalues;

    fn p(a: f64, b: f64, c: f64) -> NeutralParams {
        NeutralParams::new(a, b, c).unwrap()
    }

    #[test]
    fn rows() {
        let t = classify_region(&p(2.0, 0.5, 1.0));
        assert_eq!((t.table, t.row), (Table::Table1, Row::AGtAbsB));
        assert_eq!(classify_region(&p(1.0, 2.0, 0.5)).row, Row::AbsALtB);
        assert_eq!(classify_region(&p(0.0, 0.0, 2.0)).row, Row::BoundaryAEqB);
        assert_eq!(classify_region(&p(0.0, 0.0, 1.0)).row, Row::BoundaryAEqNegB);
        assert_eq!(classify_region(&p(0.0, 0.0, -1.0)).row, Row::BoundaryAEqB);
        assert_eq!(classify_region(&p(0.0, 0.0, -1.0)).table, Table::Table2);
        assert_eq!(classify_region(&p(1.0, -1.0, 1.0)).row, Row::BoundaryAEqAbsB);
        assert!(Row::BoundaryAEqB.is_boundary() && !Row::AbsALtB.is_boundary());
    }

    #[test]
    fn verify_examples() {
        for (a, b, c) in [(2.0, 0.5, 1.0), (1.0, 2.0, 0.5)] {
            let params = p(a, b, c);
            let s = enumerate_eigenvalues(&params, 30).unwrap();
            let r = verify_region(&params, s.roots());
            assert!(r.passed, "{a} {b} {c}: {:?}", r.violations);
        }
    }

    #[test]
    fn corrupted_list_fails() {
        let params = p(2.0, 0.5, 1.0);
        let s = enumerate_eigenvalues(&params, 10).unwrap();
        let mut roots = s.roots().to_vec();
        roots[3].value.re = 2.0 * params.accumulation() - roots[3].value.re;
        assert!(!verify_region(&params, &roots).passed);
    }

    #[test]
    fn configuration_cases() {
        let s = enumerate_eigenvalues(&p(2.0, 0.5, 1.0), 20).unwrap();
        let cfg = omega_configuration(&s);
        assert_eq!(cfg.case, OmegaCase::I);
        assert!(cfg.infinite);
        assert!(cfg.gamma.windows(2).all(|w| w[0] < w[1]));
        assert!(cfg.gamma.iter().all(|&g| g < 0.0));

        let s = enumerate_eigenvalues(&p(1.0, 2.0, 0.5), 20).unwrap();
        let cfg = omega_configuration(&s);
        assert_eq!(cfg.case, OmegaCase::Iii);
        let ln = 0.5f64.ln();
        assert!(cfg.gamma[0] < ln);
        assert!(cfg.gamma[1..].windows(2).all(|w| w[0] > w[1] && w[1] > ln));

        let s = enumerate_eigenvalues(&p(0.0, 0.0, 2.0), 5).unwrap();
        let cfg = omega_configuration(&s);
        assert_eq!(cfg.case, OmegaCase::V);
        assert!(!cfg.infinite);
        assert_eq!(cfg.sigma.len(), 2);
        assert_eq!(cfg.sigma[0], 0.0);
        assert!((cfg.sigma[1] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exact_gaps() {
        let s = enumerate_eigenvalues(&p(0.0, 0.0, 2.0), 5).unwrap();
        let cfg = omega_configuration(&s);
        let gaps = enumerate_gaps(&cfg, s.roots(), 3).unwrap();
        assert_eq!(gaps.len(), 2);
        assert!(gaps[0].alpha < 0.0);
        assert!(gaps[1].beta > 0.0 && gaps[1].alpha < 2f64.ln());
        assert!(gaps[0].finite_eigs.is_empty());
        assert_eq!(gaps[1].finite_eigs.len(), 1);
        assert!(enumerate_gaps(&cfg, s.roots(), 4).is_err());
    }

    #[test]
    fn nested_gaps() {
        let s = enumerate_eigenvalues(&p(2.0, 0.5, 1.0), 40).unwrap();
        let cfg = omega_configuration(&s);
        let gaps = enumerate_gaps(&cfg, s.roots(), 10).unwrap();
        assert_eq!(gaps.len(), 10);
        for w in gaps.windows(2) {
            assert!(w[0].finite_eigs.len() < w[1].finite_eigs.len());
            assert!(w[0].alpha < w[1].beta);
        }
        for g in &gaps {
            assert_eq!(g.finite_side, FiniteSide::StableFinite);
            assert!(g.beta < g.alpha);
            assert!(s.roots().iter().all(|e| e.value.re < g.beta || e.value.re > g.alpha));
        }
        assert!(matches!(
            enumerate_gaps(&cfg, s.roots(), 10_000),
            Err(Error::InsufficientRoots { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        let s = enumerate_eigenvalues(&p(0.0, 0.0, 2.0), 5).unwrap();
        assert_eq!(theta(&s, 2f64.ln() / 2.0).unwrap(), 1);
        let (nu1, nu2) = s.strip();
        assert_eq!(theta(&s, (nu2 - nu1) + 1.0).unwrap(), 0);
        let s = enumerate_eigenvalues(&p(2.0, 0.5, 1.0), 20).unwrap();
        assert!(matches!(theta(&s, 1e-9), Err(Error::Incomplete { .. })));
        let mut prev = usize::MAX;
        for k in 0..50 {
            let d = 0.05 + 0.019 * k as f64;
            let t = theta(&s, d).unwrap();
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn k_sequence_sandwich() {
        let s = enumerate_eigenvalues(&p(2.0, 0.5, 1.0), 60).unwrap();
        let k = k_sequence(&s, 30).unwrap();
        assert_eq!(k.values[0], 0);
        assert_eq!(k.values.len(), 31);
        for w in k.values.windows(2) {
            assert!((1..=7).contains(&(w[1] - w[0])));
        }
        for (i, &d) in k.levels.iter().enumerate() {
            assert_eq!(theta(&s, d).unwrap(), k.values[i]);
            assert_eq!(theta(&s, d + 1e-12).unwrap(), k.values[i]);
        }
        assert!(k_sequence(&enumerate_eigenvalues(&p(0.0, 0.0, 2.0), 3).unwrap(), 2).is_err());
    }

    #[test]
    fn vertical_lines() {
        for (a, b, c) in [(1.0, 2.0, 0.5), (2.0, 0.5, 1.0), (0.5, 0.3, -2.0)] {
            let params = p(a, b, c);
            let s = enumerate_eigenvalues(&params, 50).unwrap();
            let r = vertical_line_check(&params, s.roots());
            assert!(r.passed, "{a} {b} {c}: {:?} {:?}", r.shared, r.rho_failures);
            assert!(!r.rho_products.is_empty());
        }
        let params = p(0.0, 0.0, 2.0);
        let s = enumerate_eigenvalues(&params, 5).unwrap();
        assert!(vertical_line_check(&params, s.roots()).passed);
    }

    #[test]
    fn duplicated_line_detected() {
        let params = p(1.0, 2.0, 0.5);
        let s = enumerate_eigenvalues(&params, 5).unwrap();
        let mut roots = s.roots().to_vec();
        let mut extra = *roots.iter().find(|e| e.value.im > 0.0 && e.index == Some(3)).unwrap();
        extra.value.im += 40.0;
        roots.push(extra);
        assert!(!vertical_line_check(&params, &roots).shared.is_empty());
    }
}
