//! Product states `|u⟩ ⊗ |ζ⟩` with a truncated coherent phonon state.

use num_complex::Complex64;
use serde::Serialize;

use super::hamiltonian::Hamiltonian;
use super::{check_alpha, FockConfig, MODULE};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Truncation weight loss above which the result is flagged.
pub const MAX_WEIGHT_LOSS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnsatzEnergy {
    /// Rayleigh quotient of the renormalized product vector.
    pub energy: f64,
    /// Coherent-state weight outside the phonon cap.
    pub weight_loss: f64,
    /// `weight_loss > MAX_WEIGHT_LOSS`
    pub flagged: bool,
}

/// Unit electron vector `ψᵢ = √h_e φ(xᵢ)` for `φ(x) = √α u(αx)`, with `u`
/// sampled on the Pekar grid and taken as zero outside it.
pub fn electron_orbital(u: &GridFunction<f64>, alpha: f64, cfg: &FockConfig) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    cfg.validate()?;
    u.check_finite()?;
    let r = u.grid().half_width();
    let mut psi = (0..cfg.electron_points)
        .map(|i| {
            let y = alpha * cfg.electron_node(i);
            if y.abs() <= r {
                u.interpolate(y)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::invalid(MODULE, "u", "vanishes on the electron grid"));
    }
    for x in psi.iter_mut() {
        *x /= norm;
    }
    Ok(psi)
}

/// `⟨Ψ, HΨ⟩` for `Ψ = ψ ⊗ ζ`, where `ζ` is the coherent state with
/// `z_m = g Σᵢ |ψᵢ|² e^{−i k_m xᵢ}` cut at the phonon cap and renormalized.
pub fn product_ansatz_energy(h: &Hamiltonian, psi: &[f64]) -> Result<AnsatzEnergy> {
    let cfg = h.config();
    let ne = cfg.electron_points;
    if psi.len() != ne {
        return Err(Error::invalid(
            MODULE,
            "u",
            format!("orbital has {} values, electron grid has {ne}", psi.len()),
        ));
    }
    let z: Vec<Complex64> = (0..2 * cfg.modes)
        .map(|m| {
            let k = cfg.wavenumber(m);
            h.coupling()
                * psi
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * p * Complex64::from_polar(1.0, -k * cfg.electron_node(i)))
                    .sum::<Complex64>()
        })
        .collect();
    let basis = h.basis();
    let amplitudes: Vec<Complex64> = (0..basis.len())
        .map(|b| {
            basis
                .occupation(b)
                .iter()
                .zip(&z)
                .fold(Complex64::new(1.0, 0.0), |acc, (&n, zm)| {
                    let fact: f64 = (1..=n as u32).map(f64::from).product();
                    acc * zm.powu(n as u32) / fact.sqrt()
                })
        })
        .collect();
    let kept: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let total: f64 = z.iter().map(|zm| zm.norm_sqr()).sum();
    let weight_loss = (1.0 - kept * (-total).exp()).max(0.0);
    let scale = 1.0 / kept.sqrt();
    let mut v = Vec::with_capacity(h.dimension());
    for a in &amplitudes {
        v.extend(psi.iter().map(|p| a * (p * scale)));
    }
    Ok(AnsatzEnergy {
        energy: h.rayleigh(&v),
        weight_loss,
        flagged: weight_loss > MAX_WEIGHT_LOSS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::potential::Potential;

    #[test]
    fn no_phonons_reduces_to_electron_energy() {
        let cfg = FockConfig {
            modes: 0,
            phonon_cap: 0,
            ..FockConfig::default()
        };
        let v = Potential::sech2(2.0, 1.0).unwrap();
        let h = Hamiltonian::new(1.0, &v, &cfg).unwrap();
        let g = Grid::new(20.0, 401).unwrap();
        let u = g.sample(|x| 1.0 / x.cosh());
        let psi = electron_orbital(&u, 1.0, &cfg).unwrap();
        let a = product_ansatz_energy(&h, &psi).unwrap();
        let direct: f64 = {
            let x: Vec<Complex64> = psi.iter().map(|&p| Complex64::new(p, 0.0)).collect();
            h.rayleigh(&x)
        };
        assert!((a.energy - direct).abs() < 1e-14);
        assert_eq!(a.weight_loss, 0.0);
    }

    #[test]
    fn coherent_shift_lowers_energy() {
        let cfg = FockConfig::default();
        let v = Potential::sech2(2.0, 1.0).unwrap();
        let h = Hamiltonian::new(2.0, &v, &cfg).unwrap();
        let g = Grid::new(20.0, 401).unwrap();
        let u = g.sample(|x| (1.0 / x.cosh()) / 2f64.sqrt());
        let psi = electron_orbital(&u, 2.0, &cfg).unwrap();
        let a = product_ansatz_energy(&h, &psi).unwrap();
        let bare: Vec<Complex64> = psi
            .iter()
            .map(|&p| Complex64::new(p, 0.0))
            .chain(std::iter::repeat_n(Complex64::new(0.0, 0.0), h.dimension() - psi.len()))
            .collect();
        assert!(a.energy < h.rayleigh(&bare));
        assert!(!a.flagged);
    }
}
