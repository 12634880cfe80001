use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Accept a root when `|h| <= root * (1 + |lambda|)`.
    pub root: f64,
    pub newton_iterations: u32,
    /// Newton aborts below this `|h'|`.
    pub derivative_floor: f64,
    /// Contours must keep `|h| >= clearance * (1 + |z|)`.
    pub clearance: f64,
    /// Maximum phase increment between boundary samples.
    pub phase_step: f64,
    /// Imaginary parts below this are snapped to zero.
    pub real_snap: f64,
    /// Real parts closer than this form one cluster.
    pub cluster: f64,
    /// `|A| = |B|` is decided at this tolerance.
    pub boundary_row: f64,
    /// Resolvent evaluation refuses `|h| <=` this.
    pub near_spectrum: f64,
    /// Relative margin kept inside each spectral gap.
    pub gap_margin: f64,
    /// Contour perturbation attempts before `BoundaryTooClose` escapes.
    pub retries: u32,
    /// Largest certification ball around an asymptotic seed.
    pub max_ball: f64,
    /// Quadrature-level agreement used by invariant checks.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root: 1e-12,
            newton_iterations: 50,
            derivative_floor: 1e-14,
            clearance: 1e-6,
            phase_step: std::f64::consts::FRAC_PI_2,
            real_snap: 1e-10,
            cluster: 1e-9,
            boundary_row: 1e-12,
            near_spectrum: 1e-8,
            gap_margin: 0.1,
            retries: 5,
            max_ball: 0.5,
            quad: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("root", self.root),
            ("derivative_floor", self.derivative_floor),
            ("clearance", self.clearance),
            ("phase_step", self.phase_step),
            ("real_snap", self.real_snap),
            ("cluster", self.cluster),
            ("boundary_row", self.boundary_row),
            ("near_spectrum", self.near_spectrum),
            ("gap_margin", self.gap_margin),
            ("max_ball", self.max_ball),
            ("quad", self.quad),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::InvalidInput(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.phase_step >= std::f64::consts::PI {
            return Err(crate::Error::InvalidInput(
                "tolerance phase_step must be below pi".into(),
            ));
        }
        if self.gap_margin >= 0.5 {
            return Err(crate::Error::InvalidInput(
                "tolerance gap_margin must be below 0.5".into(),
            ));
        }
        if self.newton_iterations == 0 {
            return Err(crate::Error::InvalidInput(
                "tolerance newton_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
