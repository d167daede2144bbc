//! Matrix-free truncated Fröhlich Hamiltonian.

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::Basis;
use super::{check_alpha, FockConfig};
use crate::error::Result;
use crate::potential::Potential;

/// `H` on vectors indexed by `b · n_e + i` (phonon state `b`, electron node `i`).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    cfg: FockConfig,
    alpha: f64,
    g: f64,
    basis: Basis,
    /// Electron diagonal: `−α² V(α xᵢ)` plus any perturbation.
    electron_diag: Vec<f64>,
    /// `phases[m][i] = e^{i k_m xᵢ}`
    phases: Vec<Vec<Complex64>>,
    /// `raise_coef[b][m] = √(n_m + 1)`, `lower_coef[b][m] = √n_m`
    raise_coef: Vec<Vec<f64>>,
    lower_coef: Vec<Vec<f64>>,
}

impl Hamiltonian {
    pub fn new(alpha: f64, v: &Potential, cfg: &FockConfig) -> Result<Self> {
        check_alpha(alpha)?;
        cfg.validate()?;
        let ne = cfg.electron_points;
        let slots = 2 * cfg.modes;
        let basis = Basis::new(slots, cfg.phonon_cap);
        let electron_diag = (0..ne)
            .map(|i| -alpha * alpha * v.eval(alpha * cfg.electron_node(i)))
            .collect();
        let phases = (0..slots)
            .map(|m| {
                let k = cfg.wavenumber(m);
                (0..ne)
                    .map(|i| Complex64::from_polar(1.0, k * cfg.electron_node(i)))
                    .collect()
            })
            .collect();
        let raise_coef = (0..basis.len())
            .map(|b| basis.occupation(b).iter().map(|&n| (n as f64 + 1.0).sqrt()).collect())
            .collect();
        let lower_coef = (0..basis.len())
            .map(|b| basis.occupation(b).iter().map(|&n| (n as f64).sqrt()).collect())
            .collect();
        Ok(Hamiltonian {
            cfg: cfg.clone(),
            alpha,
            g: cfg.coupling_constant(alpha),
            basis,
            electron_diag,
            phases,
            raise_coef,
            lower_coef,
        })
    }

    /// `H + diag(extra)` acting on the electron coordinate.
    pub fn with_electron_term(&self, extra: &[f64]) -> Self {
        assert_eq!(extra.len(), self.cfg.electron_points);
        let mut h = self.clone();
        for (d, e) in h.electron_diag.iter_mut().zip(extra) {
            *d += e;
        }
        h
    }

    pub fn config(&self) -> &FockConfig {
        &self.cfg
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Per-mode coupling `g`.
    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn electron_diagonal(&self) -> &[f64] {
        &self.electron_diag
    }

    pub fn dimension(&self) -> usize {
        self.basis.len() * self.cfg.electron_points
    }

    /// `y = H x`. Each output block is gathered by one task in a fixed order,
    /// so results do not depend on the thread count.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let ne = self.cfg.electron_points;
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        let kin = 1.0 / self.cfg.electron_spacing().powi(2);
        let slots = self.basis.slots();
        y.par_chunks_mut(ne).enumerate().for_each(|(b, out)| {
            let xb = &x[b * ne..(b + 1) * ne];
            let number = self.basis.total(b) as f64;
            for i in 0..ne {
                let left = xb[(i + ne - 1) % ne];
                let right = xb[(i + 1) % ne];
                out[i] = (2.0 * xb[i] - left - right) * kin + xb[i] * (number + self.electron_diag[i]);
            }
            for m in 0..slots {
                let ph = &self.phases[m];
                if let Some(bl) = self.basis.lower(b, m) {
                    // a_m† e^{−ik x} from b − e_m
                    let c = -self.g * self.lower_coef[b][m];
                    let xs = &x[bl * ne..(bl + 1) * ne];
                    for i in 0..ne {
                        out[i] += xs[i] * ph[i].conj() * c;
                    }
                }
                if let Some(br) = self.basis.raise(b, m) {
                    // a_m e^{ik x} from b + e_m
                    let c = -self.g * self.raise_coef[b][m];
                    let xs = &x[br * ne..(br + 1) * ne];
                    for i in 0..ne {
                        out[i] += xs[i] * ph[i] * c;
                    }
                }
            }
        });
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Reflection `x → −x`, `k → −k`.
    pub fn parity(&self, x: &[Complex64]) -> Vec<Complex64> {
        let ne = self.cfg.electron_points;
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        for b in 0..self.basis.len() {
            let pb = self.basis.permuted(b, |m| self.cfg.partner(m));
            for i in 0..ne {
                y[pb * ne + self.cfg.electron_mirror(i)] = x[b * ne + i];
            }
        }
        y
    }

    /// `⟨x, H x⟩ / ⟨x, x⟩`
    pub fn rayleigh(&self, x: &[Complex64]) -> f64 {
        let hx = self.apply_vec(x);
        super::lanczos::dot(x, &hx).re / super::lanczos::dot(x, x).re
    }
}
