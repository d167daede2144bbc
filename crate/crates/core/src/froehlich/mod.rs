//! Truncated one-dimensional Fröhlich polaron
//!
//! ```text
//! H = −d²/dx² + Σ_k a_k† a_k − g Σ_k (a_k e^{ikx} + a_k† e^{−ikx}) − α² V(α x)
//! ```
//!
//! on the periodic cell `[−L, L)` with modes `k_j = jπ/L`, `j = ±1..±M`, and
//! phonon configurations of total occupation at most `N`. The electron lives
//! on `n_e` periodic nodes with a second-order kinetic term.
//!
//! Per-mode coupling defaults to `g = √(α Δk / 2π)` with `Δk = π/L`, for which
//! the coherent-state energy of a product state tends to `∫u'² − α∫u⁴` as the
//! mode count grows. The literal prefactor `√(α/L)` is available as
//! [`Coupling::Literal`].

mod ansatz;
mod basis;
mod density;
mod hamiltonian;
mod lanczos;
mod scan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ansatz::{electron_orbital, product_ansatz_energy, AnsatzEnergy, MAX_WEIGHT_LOSS};
pub use basis::Basis;
pub use density::{electron_density, rescaled_density, DensityProfile};
pub use hamiltonian::Hamiltonian;
pub use lanczos::{ground_state, lowest_excited, GroundState, LanczosOptions};
pub use scan::{convergence_scan, hf_check, write_scan_csv, HfCheck, ScanReport, ScanRow};

const MODULE: &str = "froehlich";

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_MAX_DIMENSION: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// `g = √(α Δk / 2π)`, `Δk = π/L`.
    #[default]
    Continuum,
    /// `g = √(α / L)`.
    Literal,
}

/// Configuration form: `{"L": 8.0, "modes": 3, "phonon_cap": 3, "electron_points": 33}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    /// Half-length of the crystal.
    #[serde(rename = "L")]
    pub half_length: f64,
    /// Positive-mode count `M`.
    pub modes: usize,
    /// Cap `N` on the total phonon number.
    pub phonon_cap: usize,
    /// Periodic electron nodes `n_e`.
    pub electron_points: usize,
    #[serde(default = "default_max_dimension")]
    pub max_dimension: usize,
    #[serde(default)]
    pub coupling: Coupling,
}

fn default_max_dimension() -> usize {
    DEFAULT_MAX_DIMENSION
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig {
            half_length: 8.0,
            modes: 3,
            phonon_cap: 3,
            electron_points: 33,
            max_dimension: DEFAULT_MAX_DIMENSION,
            coupling: Coupling::Continuum,
        }
    }
}

impl FockConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(Error::invalid(
                MODULE,
                "fock.L",
                format!("must be positive, got {}", self.half_length),
            ));
        }
        if self.electron_points < 3 {
            return Err(Error::invalid(MODULE, "fock.electron_points", "need at least 3 nodes"));
        }
        let dim = self.dimension();
        if dim.is_none_or(|d| d > self.max_dimension) {
            return Err(Error::invalid(
                MODULE,
                "fock",
                format!(
                    "Hilbert dimension n_e·C(2M+N, N) = {} exceeds the cap {}",
                    dim.map_or_else(|| "overflow".to_string(), |d| d.to_string()),
                    self.max_dimension
                ),
            ));
        }
        Ok(())
    }

    /// `n_e · C(2M + N, N)`, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        binomial(2 * self.modes + self.phonon_cap, self.phonon_cap)?.checked_mul(self.electron_points)
    }

    pub fn electron_spacing(&self) -> f64 {
        2.0 * self.half_length / self.electron_points as f64
    }

    /// Electron node `x_i = −L + i h_e`.
    pub fn electron_node(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.electron_spacing()
    }

    /// Index of the node mirrored through `x = 0` (periodically).
    pub fn electron_mirror(&self, i: usize) -> usize {
        (self.electron_points - i) % self.electron_points
    }

    /// `Δk = π/L`
    pub fn mode_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Wavenumber of mode slot `m`: slots `0..M` hold `j = 1..M`, slots `M..2M` hold `j = −1..−M`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let j = if m < self.modes {
            (m + 1) as f64
        } else {
            -((m - self.modes + 1) as f64)
        };
        j * self.mode_spacing()
    }

    /// Slot of `−k` for slot `m`.
    pub fn partner(&self, m: usize) -> usize {
        if m < self.modes {
            m + self.modes
        } else {
            m - self.modes
        }
    }

    pub fn coupling_constant(&self, alpha: f64) -> f64 {
        match self.coupling {
            Coupling::Continuum => (alpha * self.mode_spacing() / (2.0 * std::f64::consts::PI)).sqrt(),
            Coupling::Literal => (alpha / self.half_length).sqrt(),
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimension() {
        let c = FockConfig::default();
        assert_eq!(c.dimension(), Some(33 * 84));
        c.validate().unwrap();
    }

    #[test]
    fn dimension_cap() {
        let c = FockConfig {
            modes: 10,
            phonon_cap: 10,
            ..FockConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn coupling_conventions() {
        let c = FockConfig::default();
        assert!((c.coupling_constant(2.0) - (2.0f64 / 16.0).sqrt()).abs() < 1e-15);
        let lit = FockConfig {
            coupling: Coupling::Literal,
            ..c
        };
        assert!((lit.coupling_constant(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_json() {
        let c: FockConfig =
            serde_json::from_str(r#"{"L": 8.0, "modes": 3, "phonon_cap": 3, "electron_points": 33}"#).unwrap();
        assert_eq!(c, FockConfig::default());
        assert!(serde_json::from_str::<FockConfig>(
            r#"{"L": 8.0, "modes": 3, "phonon_cap": 3, "electron_points": 33, "x": 1}"#
        )
        .is_err());
    }

    #[test]
    fn mirror_and_partner() {
        let c = FockConfig::default();
        for i in 0..c.electron_points {
            let x = c.electron_node(i);
            let y = c.electron_node(c.electron_mirror(i));
            // Equal modulo the period 2L.
            let d = (x + y).rem_euclid(2.0 * c.half_length);
            assert!(d < 1e-12 || (2.0 * c.half_length - d) < 1e-12);
        }
        for m in 0..2 * c.modes {
            assert_eq!(c.wavenumber(c.partner(m)), -c.wavenumber(m));
        }
    }
}
