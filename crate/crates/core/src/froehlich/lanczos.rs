//! Lanczos with full reorthogonalization and Ritz-vector restarts.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hamiltonian::Hamiltonian;
use super::MODULE;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanczosOptions {
    /// Target `‖HΨ − EΨ‖`.
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-8,
            max_krylov: 300,
            max_restarts: 50,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub alpha: f64,
    pub energy: f64,
    /// Unit vector indexed by `b · n_e + i`.
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub matvecs: usize,
}

/// `⟨a, b⟩` (conjugate-linear in `a`).
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn project_out(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for v in basis {
        let c = dot(v, w);
        axpy(w, -c, v);
    }
}

fn random_start(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Smallest eigenpair of the tridiagonal matrix `(a, b)`.
fn tridiagonal_lowest(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let k = a.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = a[i];
        if i + 1 < k {
            t[(i, i + 1)] = b[i];
            t[(i + 1, i)] = b[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    (theta, eig.eigenvectors.column(idx).iter().cloned().collect())
}

struct Ritz {
    value: f64,
    vector: Vec<Complex64>,
    residual: f64,
}

/// Lowest eigenpair of `H` restricted to the complement of `deflate`.
fn lowest(h: &Hamiltonian, deflate: &[Vec<Complex64>], opts: &LanczosOptions) -> Result<(Ritz, usize)> {
    if !(opts.tol > 0.0) || opts.max_krylov < 2 {
        return Err(Error::invalid(MODULE, "lanczos", "need tol > 0 and max_krylov >= 2"));
    }
    let n = h.dimension();
    let room = n - deflate.len();
    if room == 0 {
        return Err(Error::invalid(MODULE, "lanczos", "nothing left after deflation"));
    }
    let kmax = opts.max_krylov.min(room);
    let mut start = random_start(n, opts.seed);
    let mut matvecs = 0;
    let mut best: Option<Ritz> = None;
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    for _ in 0..=opts.max_restarts {
        project_out(&mut start, deflate);
        let s = norm(&start);
        for x in start.iter_mut() {
            *x /= s;
        }
        let mut vs: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut a: Vec<f64> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let (theta, coeffs) = loop {
            let j = vs.len() - 1;
            h.apply(&vs[j], &mut w);
            matvecs += 1;
            let aj = dot(&vs[j], &w).re;
            axpy(&mut w, Complex64::new(-aj, 0.0), &vs[j]);
            if j > 0 {
                axpy(&mut w, Complex64::new(-b[j - 1], 0.0), &vs[j - 1]);
            }
            for _ in 0..2 {
                project_out(&mut w, deflate);
                project_out(&mut w, &vs);
            }
            let bj = norm(&w);
            a.push(aj);
            let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
            let breakdown = bj <= 1e-12 * scale;
            let full = vs.len() == kmax;
            if full || breakdown || vs.len().is_multiple_of(10) {
                let (theta, y) = tridiagonal_lowest(&a, &b);
                let estimate = (bj * y[y.len() - 1]).abs();
                if full || breakdown || estimate <= 0.1 * opts.tol {
                    break (theta, y);
                }
            }
            b.push(bj);
            vs.push(w.iter().map(|x| x / bj).collect());
        };
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (c, v) in coeffs.iter().zip(&vs) {
            axpy(&mut y, Complex64::new(*c, 0.0), v);
        }
        project_out(&mut y, deflate);
        let s = norm(&y);
        for x in y.iter_mut() {
            *x /= s;
        }
        h.apply(&y, &mut w);
        matvecs += 1;
        let value = dot(&y, &w).re;
        axpy(&mut w, Complex64::new(-value, 0.0), &y);
        project_out(&mut w, deflate);
        let residual = norm(&w);
        let _ = theta;
        let ritz = Ritz {
            value,
            vector: y,
            residual,
        };
        if ritz.residual <= opts.tol {
            return Ok((ritz, matvecs));
        }
        start = ritz.vector.clone();
        if best.as_ref().is_none_or(|r| ritz.residual < r.residual) {
            best = Some(ritz);
        }
    }
    let best = best.expect("at least one restart");
    Err(Error::no_convergence(
        MODULE,
        format!(
            "Lanczos stopped after {} restarts: best Ritz value {} with residual {:.3e} (tol {:.1e})",
            opts.max_restarts, best.value, best.residual, opts.tol
        ),
    ))
}

pub fn ground_state(h: &Hamiltonian, opts: &LanczosOptions) -> Result<GroundState> {
    let (r, matvecs) = lowest(h, &[], opts)?;
    Ok(GroundState {
        alpha: h.alpha(),
        energy: r.value,
        vector: r.vector,
        residual: r.residual,
        matvecs,
    })
}

/// Lowest eigenvalue of `H` on the orthogonal complement of the ground state.
pub fn lowest_excited(h: &Hamiltonian, gs: &GroundState, opts: &LanczosOptions) -> Result<f64> {
    let opts = LanczosOptions {
        seed: opts.seed.wrapping_add(1),
        ..opts.clone()
    };
    Ok(lowest(h, std::slice::from_ref(&gs.vector), &opts)?.0.value)
}
