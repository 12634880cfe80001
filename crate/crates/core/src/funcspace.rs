//! Complex functions on `[-1, 0]` sampled on a uniform grid.
//!
//! A [`GridFunction`] with `N` intervals stores the values at
//! `θ_j = -1 + j/N`. Between nodes it is the piecewise cubic through the four
//! nearest nodes (shifted inward at the two end cells). The sup-norm is the
//! maximum over nodes.
//!
//! Exponentially weighted integrals `∫ e^{-λs} f(s) ds` use composite Simpson
//! when both limits are nodes an even number of cells apart and
//! `|Im λ| ≤ N/4`. Otherwise each cell is integrated exactly against the cubic
//! interpolant, which stays accurate for oscillatory weights.

use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, NeutralParams, Result};

/// Serialized form: `{"n_intervals": N, "samples": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridFunction {
    n_intervals: usize,
    samples: Vec<Complex64>,
}

#[derive(Deserialize)]
struct RawGrid {
    n_intervals: usize,
    samples: Vec<Complex64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.samples.len() != raw.n_intervals + 1 {
            return Err(Error::InvalidInput(format!(
                "n_intervals = {} but {} samples",
                raw.n_intervals,
                raw.samples.len()
            )));
        }
        GridFunction::from_samples(raw.samples)
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    re: f64,
    im: f64,
}

const MIN_INTERVALS: usize = 4;
const SERIES_RADIUS: f64 = 2.0;
const SERIES_TERMS: usize = 40;

impl GridFunction {
    /// Wraps `N + 1` samples; `N` must be even and at least 4.
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        let n = samples.len().saturating_sub(1);
        if n < MIN_INTERVALS || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs an even number of intervals >= {MIN_INTERVALS}, got {n}"
            )));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("grid samples must be finite".into()));
        }
        Ok(Self {
            n_intervals: n,
            samples,
        })
    }

    /// Samples `f` at the nodes of an `n`-interval grid; `n` even, `n ≥ 8`.
    pub fn from_callable(f: impl Fn(f64) -> Complex64, n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("grid size must be even and >= 8, got {n}")));
        }
        Self::from_samples((0..=n).map(|j| f(node(n, j))).collect())
    }

    pub fn from_real_callable(f: impl Fn(f64) -> f64, n: usize) -> Result<Self> {
        Self::from_callable(|t| Complex64::new(f(t), 0.0), n)
    }

    /// `θ ↦ e^{λθ}`.
    pub fn exponential(lambda: Complex64, n: usize) -> Result<Self> {
        Self::from_callable(|t| (lambda * t).exp(), n)
    }

    /// `Σ_{k<modes} α_k cos(kπθ) + β_k sin(kπθ)` with coefficients uniform in
    /// the unit square (unit interval when `real`).
    pub fn random_smooth<R: Rng + ?Sized>(rng: &mut R, n: usize, modes: usize, real: bool) -> Result<Self> {
        let mut draw = || {
            let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
            Complex64::new(rng.gen_range(-1.0..1.0), im)
        };
        let coef: Vec<(Complex64, Complex64)> = (0..modes).map(|_| (draw(), draw())).collect();
        Self::from_callable(
            |t| {
                coef.iter()
                    .enumerate()
                    .map(|(k, &(al, be))| {
                        let w = k as f64 * std::f64::consts::PI * t;
                        al * w.cos() + be * w.sin()
                    })
                    .sum()
            },
            n,
        )
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_callable(|_| Complex64::new(0.0, 0.0), n)
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn node(&self, j: usize) -> f64 {
        node(self.n_intervals, j)
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n_intervals as f64
    }

    /// `f(0)`.
    pub fn at_zero(&self) -> Complex64 {
        self.samples[self.n_intervals]
    }

    /// `f(-1)`.
    pub fn at_minus_one(&self) -> Complex64 {
        self.samples[0]
    }

    /// Cubic interpolant at `theta`, clamped to `[-1, 0]`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let n = self.n_intervals;
        let x = ((theta.clamp(-1.0, 0.0) + 1.0) * n as f64).max(0.0);
        let j = (x.floor() as usize).min(n - 1);
        let t = x - j as f64;
        if t == 0.0 {
            return self.samples[j];
        }
        let (start, basis) = cell_basis(n, j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, coeffs) in basis.iter().enumerate() {
            let w = ((coeffs[3] * t + coeffs[2]) * t + coeffs[1]) * t + coeffs[0];
            acc += self.samples[start + i] * w;
        }
        acc
    }

    /// Maximum modulus over nodes.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|Im f|` over nodes.
    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        self.map(|_, z| z.conj())
    }

    pub fn real_part(&self) -> Self {
        self.map(|_, z| Complex64::new(z.re, 0.0))
    }

    /// Applies `f(θ_j, value)` at every node.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        Self {
            n_intervals: self.n_intervals,
            samples: self
                .samples
                .iter()
                .enumerate()
                .map(|(j, &z)| f(self.node(j), z))
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|_, z| z * s)
    }

    /// Fourth-order finite-difference derivative at the nodes.
    pub fn derivative(&self) -> Self {
        let n = self.n_intervals;
        let f = &self.samples;
        let inv = n as f64 / 12.0;
        let d = (0..=n)
            .map(|j| {
                let v = if j >= 2 && j + 2 <= n {
                    -f[j + 2] + 8.0 * f[j + 1] - 8.0 * f[j - 1] + f[j - 2]
                } else if j < 2 {
                    -25.0 * f[j] + 48.0 * f[j + 1] - 36.0 * f[j + 2] + 16.0 * f[j + 3] - 3.0 * f[j + 4]
                } else {
                    25.0 * f[j] - 48.0 * f[j - 1] + 36.0 * f[j - 2] - 16.0 * f[j - 3] + 3.0 * f[j - 4]
                };
                v * inv
            })
            .collect();
        Self {
            n_intervals: n,
            samples: d,
        }
    }

    /// `∫_lower^upper e^{-λs} f(s) ds`.
    ///
    /// # Panics
    ///
    /// If the limits are not ordered inside `[-1, 0]`.
    pub fn weighted_integral(&self, lambda: Complex64, lower: f64, upper: f64) -> Complex64 {
        assert!(
            (-1.0..=0.0).contains(&lower) && (-1.0..=0.0).contains(&upper) && lower <= upper,
            "integration limits [{lower}, {upper}] must be ordered inside [-1, 0]"
        );
        if lower == upper {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.n_intervals;
        let nf = n as f64;
        let aligned = |x: f64| {
            let k = ((x + 1.0) * nf).round();
            (node(n, k as usize) == x).then_some(k as usize)
        };
        if let (Some(j0), Some(j1)) = (aligned(lower), aligned(upper)) {
            if (j1 - j0) % 2 == 0 && lambda.im.abs() <= nf / 4.0 {
                return self.simpson(lambda, j0, j1);
            }
        }
        self.exact_cells(lambda, lower, upper)
    }

    fn simpson(&self, lambda: Complex64, j0: usize, j1: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in j0..=j1 {
            let w = if j == j0 || j == j1 {
                1.0
            } else if (j - j0) % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += (-lambda * self.node(j)).exp() * self.samples[j] * w;
        }
        acc * (self.step() / 3.0)
    }

    fn exact_cells(&self, lambda: Complex64, lower: f64, upper: f64) -> Complex64 {
        let n = self.n_intervals;
        let h = self.step();
        let mu = lambda * h;
        let x0 = (lower + 1.0) * n as f64;
        let x1 = (upper + 1.0) * n as f64;
        let first = (x0.floor() as usize).min(n - 1);
        let last = ((x1.ceil() as usize).max(1) - 1).min(n - 1);
        let full = moments(mu);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in first..=last {
            let ta = (x0 - j as f64).clamp(0.0, 1.0);
            let tb = (x1 - j as f64).clamp(0.0, 1.0);
            if tb <= ta {
                continue;
            }
            let m = if ta == 0.0 && tb == 1.0 {
                full
            } else {
                partial_moments(mu, ta, tb)
            };
            acc += (-lambda * self.node(j)).exp() * self.cell_sum(j, &m);
        }
        acc * h
    }

    /// `Σ_i f_{start+i} ∫ L_i(t) t-moments` for one cell.
    fn cell_sum(&self, j: usize, m: &[Complex64; 4]) -> Complex64 {
        let (start, basis) = cell_basis(self.n_intervals, j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in basis.iter().enumerate() {
            let w = m[0] * c[0] + m[1] * c[1] + m[2] * c[2] + m[3] * c[3];
            acc += self.samples[start + i] * w;
        }
        acc
    }

    /// `G_j = ∫_{θ_j}^0 e^{-λs} f(s) ds` for every node, by exact cell integration.
    pub fn cumulative_weighted_integral(&self, lambda: Complex64) -> Vec<Complex64> {
        let n = self.n_intervals;
        let h = self.step();
        let m = moments(lambda * h);
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for j in (0..n).rev() {
            let cell = (-lambda * self.node(j)).exp() * self.cell_sum(j, &m) * h;
            out[j] = out[j + 1] + cell;
        }
        out
    }

    /// `â_n(f) = ∫_{-1}^0 e^{z_n θ} f(θ) dθ`.
    pub fn fourier_coefficient(&self, params: &NeutralParams, n: i64) -> Complex64 {
        self.weighted_integral(-params.auxiliary_eigen(n), -1.0, 0.0)
    }

    /// CSV: a `# n_intervals=N` line, a `re,im` header, then `N + 1` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n_intervals={}", self.n_intervals)?;
        let mut wr = csv::Writer::from_writer(w);
        for z in &self.samples {
            wr.serialize(CsvRow { re: z.re, im: z.im })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        std::io::BufReader::new(r).read_to_string(&mut text)?;
        let declared = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('#'))
            .find_map(|l| l.trim().strip_prefix("n_intervals="))
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidInput(format!("bad n_intervals header: {e}")))
            })
            .transpose()?;
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let samples = rd
            .deserialize::<CsvRow>()
            .map(|row| row.map(|r| Complex64::new(r.re, r.im)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(n) = declared {
            if samples.len() != n + 1 {
                return Err(Error::InvalidInput(format!(
                    "header declares {n} intervals but {} rows follow",
                    samples.len()
                )));
            }
        }
        Self::from_samples(samples)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn node(n: usize, j: usize) -> f64 {
    if j == n {
        0.0
    } else {
        -1.0 + j as f64 / n as f64
    }
}

/// Monomial coefficients in `t` of the four Lagrange basis polynomials.
type Basis = [[f64; 4]; 4];

fn lagrange(offsets: [f64; 4]) -> Basis {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for (k, &p) in offsets.iter().enumerate() {
            if k == i {
                continue;
            }
            let mut next = [0.0; 4];
            for d in 0..3 {
                next[d + 1] += poly[d];
                next[d] -= p * poly[d];
            }
            poly = next;
            denom *= offsets[i] - p;
        }
        for d in 0..4 {
            out[i][d] = poly[d] / denom;
        }
    }
    out
}

fn bases() -> &'static [Basis; 3] {
    static B: OnceLock<[Basis; 3]> = OnceLock::new();
    B.get_or_init(|| {
        [
            lagrange([0.0, 1.0, 2.0, 3.0]),
            lagrange([-1.0, 0.0, 1.0, 2.0]),
            lagrange([-2.0, -1.0, 0.0, 1.0]),
        ]
    })
}

/// First stencil node and basis for cell `j` of an `n`-interval grid.
fn cell_basis(n: usize, j: usize) -> (usize, &'static Basis) {
    let b = bases();
    if j == 0 {
        (0, &b[0])
    } else if j + 1 >= n {
        (n - 3, &b[2])
    } else {
        (j - 1, &b[1])
    }
}

/// `m_k = ∫_0^1 t^k e^{-μt} dt`, `k = 0..3`.
fn moments(mu: Complex64) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    if mu.norm() < SERIES_RADIUS {
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..SERIES_TERMS {
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += term / (k + j + 1) as f64;
            }
            term *= -mu / (j + 1) as f64;
        }
    } else {
        let e = (-mu).exp();
        m[0] = (1.0 - e) / mu;
        for k in 1..4 {
            m[k] = (k as f64 * m[k - 1] - e) / mu;
        }
    }
    m
}

/// `∫_a^b t^k e^{-μt} dt` via `t = a + w u`, `w = b - a`.
fn partial_moments(mu: Complex64, a: f64, b: f64) -> [Complex64; 4] {
    const BINOM: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let w = b - a;
    let base = moments(mu * w);
    let scale = (-mu * a).exp() * w;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for k in 0..4 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=k {
            acc += base[i] * (BINOM[k][i] * a.powi((k - i) as i32) * w.powi(i as i32));
        }
        out[k] = acc * scale;
    }
    out
}

fn assert_same_grid(a: &GridFunction, b: &GridFunction) {
    assert_eq!(a.n_intervals, b.n_intervals, "grid functions live on different grids");
}

impl Add for &GridFunction {
    type Output = GridFunction;

    /// # Panics
    ///
    /// If the grids differ.
    fn add(self, rhs: &GridFunction) -> GridFunction {
        assert_same_grid(self, rhs);
        self.map_indexed(|j, z| z + rhs.samples[j])
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;

    /// # Panics
    ///
    /// If the grids differ.
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        assert_same_grid(self, rhs);
        self.map_indexed(|j, z| z - rhs.samples[j])
    }
}

impl Mul<Complex64> for &GridFunction {
    type Output = GridFunction;

    fn mul(self, rhs: Complex64) -> GridFunction {
        self.scale(rhs)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;

    fn mul(self, rhs: f64) -> GridFunction {
        self.map(|_, z| z * rhs)
    }
}

impl GridFunction {
    fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            n_intervals: self.n_intervals,
            samples: self.samples.iter().enumerate().map(|(j, &z)| f(j, z)).collect(),
        }
    }
}
