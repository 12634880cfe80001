use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Kind, ProjectionOperator};
use crate::GridFunction;

/// One root's contribution: `c0 += c0_coef·e^{ξθ}`, `k += k_coef·e^{ξ(θ-s)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub xi: Complex64,
    pub c0_coef: Complex64,
    pub k_coef: Complex64,
}

/// `(Pφ)(θ) = c0(θ)φ(0) + c1(θ)φ(-1) + ∫_{-1}^0 k(θ, s)φ(s) ds` with `c1 = c·c0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelForm {
    pub c: f64,
    pub terms: Vec<KernelTerm>,
}

/// Expands the residue sum of `op` into point and integral parts.
pub fn kernel_form(op: &ProjectionOperator) -> KernelForm {
    let p = op.params();
    let terms = op
        .eigs()
        .iter()
        .map(|&xi| {
            let e = (-xi).exp();
            let (d, k) = match op.kind() {
                Kind::MainEquation => (p.eval_h_prime(xi), -(p.c() * xi + p.b()) * e),
                Kind::Auxiliary => (p.eval_h0_prime(xi), -p.c() * xi * e),
            };
            KernelTerm {
                xi,
                c0_coef: 1.0 / d,
                k_coef: k / d,
            }
        })
        .collect();
    KernelForm { c: p.c(), terms }
}

/// `sup_θ |c0(θ)| + |c1(θ)| + ∫_{-1}^0 |k(θ, s)| ds` on a mesh of `4·grid` cells.
pub fn operator_norm(op: &ProjectionOperator, grid: usize) -> f64 {
    kernel_form(op).norm(grid)
}

impl KernelForm {
    pub fn c0(&self, theta: f64) -> Complex64 {
        self.terms.iter().map(|t| t.c0_coef * (t.xi * theta).exp()).sum()
    }

    pub fn c1(&self, theta: f64) -> Complex64 {
        self.c0(theta) * self.c
    }

    pub fn k(&self, theta: f64, s: f64) -> Complex64 {
        self.kappa(theta - s)
    }

    /// `k` depends on `θ - s` only.
    fn kappa(&self, u: f64) -> Complex64 {
        self.terms.iter().map(|t| t.k_coef * (t.xi * u).exp()).sum()
    }

    /// `self - other` as one kernel.
    ///
    /// # Panics
    ///
    /// If the two forms belong to different `c`.
    pub fn difference(&self, other: &KernelForm) -> KernelForm {
        assert_eq!(self.c, other.c, "kernels of different equations");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| KernelTerm {
            xi: t.xi,
            c0_coef: -t.c0_coef,
            k_coef: -t.k_coef,
        }));
        KernelForm { c: self.c, terms }
    }

    /// Applies the form to `f` on its own grid.
    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let point = f.at_zero() + self.c * f.at_minus_one();
        let weights: Vec<(Complex64, Complex64)> = self
            .terms
            .iter()
            .map(|t| {
                (
                    t.xi,
                    t.c0_coef * point + t.k_coef * f.weighted_integral(t.xi, -1.0, 0.0),
                )
            })
            .collect();
        f.map_nodes(|_, theta, _| weights.iter().map(|&(xi, w)| w * (xi * theta).exp()).sum())
    }

    /// Sup-norm operator norm, see [`operator_norm`].
    ///
    /// The `s`-integral is composite Simpson on the `u = θ - s` mesh, slid
    /// across `θ` with parity-split prefix sums.
    pub fn norm(&self, grid: usize) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let m = 4 * grid.max(2);
        let h = 1.0 / m as f64;
        let kap: Vec<f64> = (0..=2 * m)
            .into_par_iter()
            .map(|k| self.kappa(-1.0 + k as f64 * h).norm())
            .collect();
        // panel[j] = Simpson panel on [u_j, u_{j+2}]; prefix over same parity.
        let panels = 2 * m - 1;
        let mut prefix = vec![0.0; panels];
        for j in 0..panels {
            let v = kap[j] + 4.0 * kap[j + 1] + kap[j + 2];
            prefix[j] = v + if j >= 2 { prefix[j - 2] } else { 0.0 };
        }
        let scale = 1.0 + self.c.abs();
        (0..=m)
            .into_par_iter()
            .map(|i| {
                let last = i + m - 2;
                let before = if i >= 2 { prefix[i - 2] } else { 0.0 };
                let integral = (prefix[last] - before) * h / 3.0;
                scale * self.c0(-1.0 + i as f64 * h).norm() + integral
            })
            .reduce(|| 0.0, f64::max)
    }
}
