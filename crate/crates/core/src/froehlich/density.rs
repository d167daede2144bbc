//! Phonon-integrated electron density and its rescaling to the Pekar grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::lanczos::GroundState;
use super::{check_alpha, FockConfig, MODULE};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// `ρ(xᵢ) = Σ_b |Ψ(b, xᵢ)|² / h_e` on the periodic electron nodes, so `Σ ρᵢ h_e = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    pub half_length: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityProfile {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.values.len() as f64
    }

    /// `Σ ρᵢ h_e`
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    /// `max |ρ(xᵢ) − ρ(−xᵢ)|`
    pub fn evenness_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|i| (self.values[i] - self.values[(n - i) % n]).abs())
            .fold(0.0, f64::max)
    }

    /// Trigonometric interpolant of the nodal values, periodic with period `2L`.
    /// For even `n_e` the Nyquist term is split evenly between `±n/2`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let theta = 2.0 * PI * (x + self.half_length) / (2.0 * self.half_length);
        let half = n / 2;
        let mut s = 0.0;
        for j in 0..=half {
            let c = self.coefficient(j);
            let weight = if j == 0 || (n.is_multiple_of(2) && j == half) {
                1.0
            } else {
                2.0
            };
            s += weight * (c * Complex64::from_polar(1.0, j as f64 * theta)).re;
        }
        s
    }

    /// `(1/n) Σᵢ ρᵢ e^{−2πi j i/n}`
    fn coefficient(&self, j: usize) -> Complex64 {
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .map(|(i, &r)| r * Complex64::from_polar(1.0, -2.0 * PI * (j * i % n) as f64 / n as f64))
            .sum::<Complex64>()
            / n as f64
    }
}

pub fn electron_density(gs: &GroundState, cfg: &FockConfig) -> DensityProfile {
    let ne = cfg.electron_points;
    let h = cfg.electron_spacing();
    let mut values = vec![0.0; ne];
    for block in gs.vector.chunks(ne) {
        for (r, x) in values.iter_mut().zip(block) {
            *r += x.norm_sqr();
        }
    }
    for r in values.iter_mut() {
        *r /= h;
    }
    DensityProfile {
        half_length: cfg.half_length,
        nodes: (0..ne).map(|i| cfg.electron_node(i)).collect(),
        values,
    }
}

/// `y ↦ (1/α) ρ(y/α)` on the Pekar grid, zero outside `[−αL, αL]`.
pub fn rescaled_density(rho: &DensityProfile, alpha: f64, grid: &Grid) -> Result<GridFunction<f64>> {
    check_alpha(alpha)?;
    let edge = alpha * rho.half_length;
    if edge > grid.half_width() {
        return Err(Error::Range {
            module: MODULE,
            detail: format!(
                "rescaled support [-{edge}, {edge}] exceeds the Pekar grid [-{r}, {r}]",
                r = grid.half_width()
            ),
        });
    }
    let values = grid
        .nodes()
        .iter()
        .map(|&y| {
            if y.abs() <= edge {
                rho.eval(y / alpha) / alpha
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::new(*grid, values)
}
