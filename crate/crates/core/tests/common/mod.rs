#![allow(dead_code)]

use polaron_lab::grid::{self, Grid, GridFunction};
use polaron_lab::Potential;

/// Ground energy by normalized backward-Euler imaginary-time flow with a
/// plain second-order Laplacian, Richardson-extrapolated against the half grid.
pub fn imaginary_time_energy(v: &Potential, half_width: f64, points: usize) -> f64 {
    let fine = imaginary_time_raw(v, half_width, points);
    let coarse = imaginary_time_raw(v, half_width, points.div_ceil(2));
    (4.0 * fine - coarse) / 3.0
}

fn imaginary_time_raw(v: &Potential, r: f64, n: usize) -> f64 {
    let h = 2.0 * r / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| -r + i as f64 * h).collect();
    let vx: Vec<f64> = x.iter().map(|&x| v.eval(x)).collect();
    let mut u: Vec<f64> = x.iter().map(|&x| 0.5 / (0.5 * x).cosh()).collect();
    let norm = |u: &mut Vec<f64>| {
        let s: f64 = u.iter().map(|a| a * a).sum::<f64>() * h;
        let s = s.sqrt();
        u.iter_mut().for_each(|a| *a /= s);
    };
    let energy = |u: &[f64]| {
        let mut e = 0.0;
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let d = u[i] - left;
            e += d * d / h;
            e -= h * (u[i].powi(4) + vx[i] * u[i] * u[i]);
        }
        e += u[n - 1] * u[n - 1] / h;
        e
    };
    norm(&mut u);
    let dt = 0.5;
    let mut e_old = energy(&u);
    for _ in 0..100_000 {
        // (1 + dt A(u)) u⁺ = u with A = −Δ − 2u² − V, tridiagonal Thomas solve.
        let off = -dt / (h * h);
        let diag: Vec<f64> = (0..n)
            .map(|i| 1.0 + dt * (2.0 / (h * h) - 2.0 * u[i] * u[i] - vx[i]) + 4.0 * dt)
            .collect();
        // The +4dt shift keeps the system diagonally dominant; it only rescales the flow.
        let rhs: Vec<f64> = u.iter().map(|a| a * (1.0 + 4.0 * dt)).collect();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = off / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - off * c[i - 1];
            c[i] = off / m;
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut next = vec![0.0; n];
        next[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            next[i] = d[i] - c[i] * next[i + 1];
        }
        u = next;
        norm(&mut u);
        let e = energy(&u);
        if (e - e_old).abs() < 1e-15 {
            return e;
        }
        e_old = e;
    }
    e_old
}

/// Normalized trial states: sech and Gaussian profiles at several widths.
pub fn candidate_battery(g: &Grid) -> Vec<GridFunction<f64>> {
    let mut out = Vec::new();
    for s in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        for f in [
            Box::new(move |x: f64| 1.0 / (x / s).cosh()) as Box<dyn Fn(f64) -> f64>,
            Box::new(move |x: f64| (-(x / s).powi(2)).exp()),
            Box::new(move |x: f64| 1.0 / (x / s).cosh().powi(2)),
        ] {
            out.push(grid::normalize(&g.sample(f)).unwrap());
        }
    }
    out
}
