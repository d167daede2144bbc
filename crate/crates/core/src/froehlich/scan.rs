//! Hellmann–Feynman check and the α scan against a test measure.

use rayon::prelude::*;
use serde::Serialize;

use super::ansatz::{electron_orbital, product_ansatz_energy};
use super::density::{electron_density, rescaled_density};
use super::hamiltonian::Hamiltonian;
use super::lanczos::{ground_state, lowest_excited, LanczosOptions};
use super::{check_alpha, FockConfig, MODULE};
use crate::error::{Error, Result};
use crate::grid::{fmt17, Grid, GridFunction};
use crate::measure::{Lattice, TestMeasure};
use crate::pekar::{self, PekarOptions};
use crate::potential::Potential;

/// Smallest accepted gap above the ground state.
pub const MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HfCheck {
    pub alpha: f64,
    pub delta: f64,
    /// `(E(V + δW) − E(V − δW)) / 2δ`
    pub lhs: f64,
    /// `α² ⟨Ψ, W(αx) Ψ⟩`
    pub rhs: f64,
    /// Distance from the ground state to the next eigenvalue.
    pub gap: f64,
}

impl HfCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

/// Electron-node weights of `α² W(αx)` times `h_e`, so that the perturbation
/// `δ α² W(αx)` adds `δ · α cᵢ / h_e` to the electron diagonal.
fn perturbation_diagonal(w: &TestMeasure, alpha: f64, cfg: &FockConfig) -> Result<Vec<f64>> {
    let lat = Lattice {
        start: -cfg.half_length,
        step: cfg.electron_spacing(),
        len: cfg.electron_points,
        periodic: true,
    };
    let c = w.pullback(alpha)?.lattice_weights(&lat)?;
    let h = cfg.electron_spacing();
    Ok(c.iter().map(|ci| alpha * ci / h).collect())
}

/// Central difference of the ground energy under `H + δ α² W(αx)` against
/// the expectation `α² ⟨W(αx)⟩` in the unperturbed ground state.
pub fn hf_check(
    alpha: f64,
    v: &Potential,
    w: &TestMeasure,
    delta: f64,
    cfg: &FockConfig,
    opts: &LanczosOptions,
) -> Result<HfCheck> {
    check_alpha(alpha)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "delta_fd",
            format!("must be positive, got {delta}"),
        ));
    }
    let h = Hamiltonian::new(alpha, v, cfg)?;
    let gs = ground_state(&h, opts)?;
    let gap = lowest_excited(&h, &gs, opts)? - gs.energy;
    if gap <= MIN_GAP {
        return Err(Error::Range {
            module: MODULE,
            detail: format!("ground state is degenerate (gap {gap:.3e} <= {MIN_GAP:.0e})"),
        });
    }
    let d = perturbation_diagonal(w, alpha, cfg)?;
    let rho = electron_density(&gs, cfg);
    let hx = cfg.electron_spacing();
    let rhs = d.iter().zip(&rho.values).map(|(di, r)| di * r * hx).sum();
    let shifted = |s: f64| -> Result<f64> {
        let extra: Vec<f64> = d.iter().map(|di| s * di).collect();
        Ok(ground_state(&h.with_electron_term(&extra), opts)?.energy)
    };
    let (up, down) = rayon::join(|| shifted(delta), || shifted(-delta));
    Ok(HfCheck {
        alpha,
        delta,
        lhs: (up? - down?) / (2.0 * delta),
        rhs,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    /// `E_α`
    pub energy: f64,
    pub e_over_alpha2: f64,
    /// `∫ W ρ_α` with `ρ_α(y) = (1/α) ρ(y/α)`
    pub pairing: f64,
    pub ansatz_energy: f64,
    pub ansatz_weight_loss: f64,
    pub residual: f64,
    /// `E_α ≤ ansatz energy + 1e−10`
    pub variational: bool,
    /// Failure message when the row could not be computed; numbers are NaN.
    pub error: Option<String>,
    /// Process exit code class of the failure.
    pub exit_code: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    /// `e(V)`
    pub pekar_e: f64,
    /// `∫ W u_V²`
    pub pekar_pairing: f64,
    pub rows: Vec<ScanRow>,
}

fn scan_row(
    alpha: f64,
    v: &Potential,
    w: &TestMeasure,
    cfg: &FockConfig,
    grid: &Grid,
    u: &GridFunction<f64>,
    opts: &LanczosOptions,
) -> Result<ScanRow> {
    let h = Hamiltonian::new(alpha, v, cfg)?;
    let gs = ground_state(&h, opts)?;
    let rho = rescaled_density(&electron_density(&gs, cfg), alpha, grid)?;
    let pairing = w.pair(&rho)?;
    let ansatz = product_ansatz_energy(&h, &electron_orbital(u, alpha, cfg)?)?;
    Ok(ScanRow {
        alpha,
        energy: gs.energy,
        e_over_alpha2: gs.energy / (alpha * alpha),
        pairing,
        ansatz_energy: ansatz.energy,
        ansatz_weight_loss: ansatz.weight_loss,
        residual: gs.residual,
        variational: gs.energy <= ansatz.energy + 1e-10,
        error: None,
        exit_code: None,
    })
}

/// One row per α, computed concurrently; a failing row records its error
/// and the remaining rows still run. The Pekar reference values must succeed.
pub fn convergence_scan(
    alphas: &[f64],
    v: &Potential,
    w: &TestMeasure,
    cfg: &FockConfig,
    grid: &Grid,
    pekar_opts: &PekarOptions,
    opts: &LanczosOptions,
) -> Result<ScanReport> {
    if alphas.is_empty() {
        return Err(Error::invalid(MODULE, "alphas", "need at least one value"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    cfg.validate()?;
    let reference = pekar::minimize(v, grid, pekar_opts)?;
    let u = &reference.minimizer;
    let pekar_pairing = w.pair(&u.map(|x| x * x))?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            scan_row(alpha, v, w, cfg, grid, u, opts).unwrap_or_else(|e| ScanRow {
                alpha,
                energy: f64::NAN,
                e_over_alpha2: f64::NAN,
                pairing: f64::NAN,
                ansatz_energy: f64::NAN,
                ansatz_weight_loss: f64::NAN,
                residual: f64::NAN,
                variational: false,
                error: Some(e.to_string()),
                exit_code: Some(e.exit_code()),
            })
        })
        .collect();
    Ok(ScanReport {
        pekar_e: reference.energy,
        pekar_pairing,
        rows,
    })
}

/// Write `alpha,E,E_over_alpha2,pairing,pekar_e,pekar_pairing,ansatz_energy`.
pub fn write_scan_csv<W: std::io::Write>(report: &ScanReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "alpha,E,E_over_alpha2,pairing,pekar_e,pekar_pairing,ansatz_energy")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt17(r.alpha),
            fmt17(r.energy),
            fmt17(r.e_over_alpha2),
            fmt17(r.pairing),
            fmt17(report.pekar_e),
            fmt17(report.pekar_pairing),
            fmt17(r.ansatz_energy)
        )?;
    }
    Ok(())
}
