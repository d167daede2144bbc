//! Small banded symmetric solver used by the inverse iteration for λ₀.

use crate::error::{Error, Result};

/// Symmetric matrix stored by its lower band: `band[i][k] = A[i][i-k]`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    width: usize,
    band: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(n: usize, width: usize) -> Self {
        SymBand {
            n,
            width,
            band: vec![vec![0.0; width + 1]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Set `A[i][j] = A[j][i] = v` for `|i - j| <= width`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.width, "entry outside band");
        self.band[hi][hi - lo] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.width {
            0.0
        } else {
            self.band[hi][hi - lo]
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for row in &mut self.band {
            row[0] += shift;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[i] += self.band[i][0] * x[i];
            for k in 1..=self.width.min(i) {
                let a = self.band[i][k];
                y[i] += a * x[i - k];
                y[i - k] += a * x[i];
            }
        }
        y
    }

    /// Banded Cholesky factorization; fails if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, b) = (self.n, self.width);
        let mut l = vec![vec![0.0; b + 1]; n];
        for i in 0..n {
            for k in (0..=b.min(i)).rev() {
                let j = i - k;
                let mut s = self.band[i][k];
                // Σ_m L[i][m] L[j][m] over m < j within both bands.
                let lo = i.saturating_sub(b);
                for m in lo..j {
                    s -= l[i][i - m] * l[j][j - m];
                }
                if k == 0 {
                    if !(s > 0.0) {
                        return Err(Error::no_convergence(
                            "linalg",
                            format!("matrix not positive definite at pivot {i} ({s:e})"),
                        ));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][k] = s / l[j][0];
                }
            }
        }
        Ok(BandCholesky { n, width: b, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    width: usize,
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.width);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..=b.min(i) {
                s -= self.l[i][k] * y[i - k];
            }
            y[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..=b.min(n - 1 - i) {
                s -= self.l[i + k][k] * y[i + k];
            }
            y[i] = s / self.l[i][0];
        }
        y
    }
}

/// Lowest eigenpair of a symmetric band matrix by inverse iteration with a
/// fixed shift `shift` strictly below the spectrum.
pub fn lowest_eigenpair(a: &SymBand, shift: f64, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
    let mut shifted = a.clone();
    shifted.add_diagonal(-shift);
    let chol = shifted.cholesky()?;
    let n = a.len();
    // Positive, smooth start: overlaps any nodeless ground state.
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            (std::f64::consts::PI * t).sin()
        })
        .collect();
    normalize(&mut v);
    let mut value = rayleigh(a, &v);
    for it in 0..max_iter {
        let mut w = chol.solve(&v);
        normalize(&mut w);
        let next = rayleigh(a, &w);
        let av = a.apply(&w);
        let res = av
            .iter()
            .zip(&w)
            .map(|(p, q)| (p - next * q).powi(2))
            .sum::<f64>()
            .sqrt();
        v = w;
        let change = (next - value).abs();
        value = next;
        if it > 2 && change <= tol * value.abs().max(1.0) && res <= tol.sqrt() {
            return Ok((value, v));
        }
    }
    Err(Error::no_convergence(
        "linalg",
        format!("inverse iteration did not converge in {max_iter} steps (estimate {value})"),
    ))
}

fn rayleigh(a: &SymBand, v: &[f64]) -> f64 {
    let av = a.apply(v);
    av.iter().zip(v).map(|(p, q)| p * q).sum::<f64>() / v.iter().map(|q| q * q).sum::<f64>()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymBand {
        let mut a = SymBand::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let mut a = SymBand::zeros(6, 2);
        for i in 0..6 {
            a.set(i, i, 6.0 + i as f64);
            if i >= 1 {
                a.set(i, i - 1, -1.5);
            }
            if i >= 2 {
                a.set(i, i - 2, 0.25);
            }
        }
        let x: Vec<f64> = (0..6).map(|i| (i as f64).sin() + 0.3).collect();
        let b = a.apply(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut a = laplacian(5);
        a.add_diagonal(-3.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn lowest_of_discrete_laplacian() {
        let n = 50;
        let (val, _) = lowest_eigenpair(&laplacian(n), -1.0, 1e-14, 10_000).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((val - exact).abs() < 1e-12);
    }
}
