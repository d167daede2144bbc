//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (same as the last row of `A`).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    step: f64,
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        DormandPrince {
            rtol,
            atol,
            max_steps: 1_000_000,
            step: 0.0,
        }
    }

    /// Advance `y` from `t` to `t_end`; the accepted step size carries over to the next call.
    pub fn advance<const N: usize, F>(&mut self, f: &F, mut t: f64, mut y: [f64; N], t_end: f64) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = t_end - t;
        if span == 0.0 {
            return Ok(y);
        }
        let dir = span.signum();
        if self.step == 0.0 {
            self.step = 1e-3 * span.abs().max(1e-3);
        }
        let mut steps = 0;
        while (t_end - t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::no_convergence("ode", format!("step limit reached at t = {t}")));
            }
            let h = self.step.min((t_end - t).abs());
            let last = h >= (t_end - t).abs();
            let mut k = [[0.0; N]; 7];
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for d in 0..N {
                            ys[d] += dir * h * a * kj[d];
                        }
                    }
                }
                k[s] = f(t + dir * h * C[s], &ys);
            }
            let mut y5 = y;
            let mut err = 0.0f64;
            for d in 0..N {
                let mut s5 = 0.0;
                let mut s4 = 0.0;
                for s in 0..7 {
                    s5 += B5[s] * k[s][d];
                    s4 += B4[s] * k[s][d];
                }
                y5[d] = y[d] + dir * h * s5;
                let scale = self.atol + self.rtol * y[d].abs().max(y5[d].abs());
                err = err.max((h * (s5 - s4)).abs() / scale);
            }
            if !err.is_finite() {
                self.step = h * 0.1;
                if self.step < 1e-14 {
                    return Err(Error::no_convergence("ode", format!("non-finite state near t = {t}")));
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { t_end } else { t + dir * h };
                y = y5;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step clipped at t_end says nothing about the admissible size.
                if !last || h >= self.step {
                    self.step = h * grow;
                }
            } else {
                self.step = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if self.step < 1e-14 * span.abs().max(1.0) {
                    return Err(Error::no_convergence("ode", format!("step size underflow at t = {t}")));
                }
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut dp = DormandPrince::new(1e-12, 1e-14);
        let y = dp.advance(&|_t, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_in_pieces() {
        let mut dp = DormandPrince::new(1e-12, 1e-14);
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        for _ in 0..100 {
            y = dp.advance(&f, t, y, t + 0.05).unwrap();
            t += 0.05;
        }
        assert!((y[0] - 5.0f64.cos()).abs() < 1e-10);
        assert!((y[1] + 5.0f64.sin()).abs() < 1e-10);
    }
}
