//! Positive even solutions of `−u'' − 2u³ − V u = λ u` along the branch
//! `λ ∈ (−∞, λ₀)`, where `λ₀` is the bottom of the spectrum of `−d²/dx² − V`.
//!
//! Each branch point is found by shooting from `x = 0` with `u(0) = s`,
//! `u'(0) = 0` and a safeguarded Newton iteration on `s` that imposes the
//! decaying asymptotics at a matching radius. Past the matching radius the
//! profile is continued by its exponential (WKB) tail, because forward
//! integration cannot follow a decaying solution far against the growing one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction, STENCIL};
use crate::linalg::{lowest_eigenpair, SymBand};
use crate::ode::DormandPrince;
use crate::pekar;
use crate::potential::Potential;

const MODULE: &str = "branch";

/// Minimum distance below λ₀ accepted by [`BranchSolver::solve`].
pub const LAMBDA0_MARGIN: f64 = 1e-6;

/// Bounds on `κ X` at the matching radius.
const MATCH_DECAY_MIN: f64 = 10.0;
const MATCH_DECAY: f64 = 12.0;

/// Lowest eigenvalue of `−d²/dx² − V` with the grid's sixth-order Dirichlet
/// discretization, or `0` when there is no negative eigenvalue.
pub fn lambda0(v: &Potential, grid: &Grid) -> Result<f64> {
    v.validate_on(grid)?;
    if v.is_zero() {
        return Ok(0.0);
    }
    let n = grid.len();
    let h2 = grid.spacing().powi(2);
    let mut a = SymBand::zeros(n, STENCIL);
    for i in 0..n {
        a.set(i, i, -grid::D2_WEIGHTS[0] / h2 - v.eval(grid.node(i)));
        for m in 1..=STENCIL.min(i) {
            a.set(i, i - m, -grid::D2_WEIGHTS[m] / h2);
        }
    }
    let shift = -v.peak() - 1.0;
    let (value, _) = lowest_eigenpair(&a, shift, 1e-15, 200_000)?;
    Ok(value.min(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    /// Positive, even, unnormalized solution.
    pub u: GridFunction<f64>,
    /// `∫ u²`
    pub norm2_sq: f64,
    /// `u(0)`
    pub height: f64,
    /// Sup-norm of the unnormalized equation residual on the grid.
    pub residual: f64,
}

impl BranchPoint {
    /// Slope of `ln u` over the outer quarter `[3R/4, R − 4h]`.
    pub fn tail_log_slope(&self) -> f64 {
        let g = self.u.grid();
        let n = g.len();
        let i0 = g.center() + (3 * (n - 1)) / 8;
        let i1 = n - 1 - 4;
        let (a, b) = (self.u.values()[i0], self.u.values()[i1]);
        (b.ln() - a.ln()) / (g.node(i1) - g.node(i0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCurve {
    pub potential: Potential,
    pub lambda0: f64,
    /// Ordered by strictly increasing λ.
    pub samples: Vec<BranchPoint>,
}

impl BranchCurve {
    /// Strictly decreasing `∫u²` along increasing λ.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].norm2_sq < w[0].norm2_sq)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lambda,norm2_sq")?;
        for p in &self.samples {
            writeln!(out, "{},{}", grid::fmt17(p.lambda), grid::fmt17(p.norm2_sq))?;
        }
        Ok(())
    }
}

/// λ sample placement for [`BranchSolver::trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    /// Logarithmic in the distance `λ₀ − λ`, dense near the bifurcation point.
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl LambdaGrid {
    /// Increasing λ values; needs `start < end < λ₀` for log spacing.
    pub fn values(&self, lambda0: f64) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::invalid(MODULE, "lambda_grid.count", "must be positive"));
        }
        if !(self.start.is_finite() && self.end.is_finite()) || (self.count > 1 && self.start >= self.end) {
            return Err(Error::invalid(MODULE, "lambda_grid", "need finite start < end"));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let m = (self.count - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..self.count)
                .map(|i| self.start + (self.end - self.start) * i as f64 / m)
                .collect(),
            Spacing::Log => {
                let (d0, d1) = (lambda0 - self.start, lambda0 - self.end);
                if !(d1 > 0.0) {
                    return Err(Error::invalid(
                        MODULE,
                        "lambda_grid.end",
                        format!("must lie below λ₀ = {lambda0}"),
                    ));
                }
                let (l0, l1) = (d0.ln(), d1.ln());
                (0..self.count)
                    .map(|i| lambda0 - (l0 + (l1 - l0) * i as f64 / m).exp())
                    .collect()
            }
        })
    }
}

/// Shooting solver bound to one potential and grid; caches `λ₀`.
#[derive(Debug, Clone)]
pub struct BranchSolver {
    potential: Potential,
    grid: Grid,
    lambda0: f64,
}

struct Shot {
    /// +1 for an undershoot (turns upward while positive), −1 for an
    /// overshoot (crosses zero); monotone in the height `s`.
    side: f64,
    /// `G(s) = (u'(X) + q u(X)) / s` when the trajectory reached the matching radius.
    mismatch: f64,
    /// `dG/ds`
    slope: f64,
}

impl BranchSolver {
    pub fn new(potential: &Potential, grid: &Grid) -> Result<Self> {
        let lambda0 = lambda0(potential, grid)?;
        Ok(BranchSolver {
            potential: potential.clone(),
            grid: *grid,
            lambda0,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() || lambda >= self.lambda0 - LAMBDA0_MARGIN {
            return Err(Error::invalid(
                MODULE,
                "lambda",
                format!(
                    "need λ < λ₀ − {LAMBDA0_MARGIN:e} = {}, got {lambda}",
                    self.lambda0 - LAMBDA0_MARGIN
                ),
            ));
        }
        Ok(())
    }

    /// Matching node index (on the right half) and the decay rate used there.
    fn matching(&self, lambda: f64) -> (usize, f64) {
        let kappa = (-lambda).sqrt();
        let g = &self.grid;
        let h = g.spacing();
        let x_pot = self.potential.radius_below(1e-10 * kappa * kappa, h, g.half_width());
        // Height errors of one ulp grow like e^{2κX} at the junction, which caps κX.
        let x = x_pot.clamp(MATCH_DECAY_MIN / kappa, MATCH_DECAY / kappa);
        let last = g.len() - 1 - 2 * STENCIL;
        let idx = (g.center() + (x / h).ceil() as usize).min(last);
        let q = (kappa * kappa - self.potential.eval(g.node(idx)))
            .max(0.25 * kappa * kappa)
            .sqrt();
        (idx, q)
    }

    fn rhs(&self, kappa2: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
        move |x, y| {
            let v = self.potential.eval(x);
            let u2 = y[0] * y[0];
            [
                y[1],
                (kappa2 - v - 2.0 * u2) * y[0],
                y[3],
                (kappa2 - v - 6.0 * u2) * y[2],
            ]
        }
    }

    /// Integrate node by node from 0 to the matching node. Stops early on an
    /// overshoot or undershoot unless `record` is given.
    fn integrate(&self, lambda: f64, s: f64, mut record: Option<&mut Vec<f64>>) -> Result<(Shot, usize)> {
        let (idx, q) = self.matching(lambda);
        let g = &self.grid;
        let f = self.rhs(-lambda);
        let mut dp = DormandPrince::new(1e-13, 1e-300);
        let mut y = [s, 0.0, 1.0, 0.0];
        let c = g.center();
        if let Some(out) = record.as_deref_mut() {
            out.clear();
            out.push(s);
        }
        let mut side = 0.0;
        for i in c..idx {
            y = dp.advance(&f, g.node(i), y, g.node(i + 1))?;
            if let Some(out) = record.as_deref_mut() {
                out.push(y[0]);
            } else if y[0] <= 0.0 {
                side = -1.0;
                break;
            } else if y[1] > 0.0 {
                side = 1.0;
                break;
            }
        }
        let fx = y[1] + q * y[0];
        let dfx = y[3] + q * y[2];
        let mismatch = fx / s;
        if side == 0.0 {
            side = if mismatch > 0.0 {
                1.0
            } else if mismatch < 0.0 {
                -1.0
            } else {
                0.0
            };
        }
        Ok((
            Shot {
                side,
                mismatch,
                slope: (dfx * s - fx) / (s * s),
            },
            idx,
        ))
    }

    fn shoot(&self, lambda: f64, s: f64) -> Result<Shot> {
        Ok(self.integrate(lambda, s, None)?.0)
    }

    /// Solve at `lambda`, starting the height search at the free-soliton height.
    pub fn solve(&self, lambda: f64) -> Result<BranchPoint> {
        let kappa = (-lambda).sqrt();
        self.solve_from(lambda, kappa)
    }

    /// Solve at `lambda` with the height search started at `s0 > 0`.
    pub fn solve_from(&self, lambda: f64, s0: f64) -> Result<BranchPoint> {
        self.check_lambda(lambda)?;
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::invalid(MODULE, "initial_height", "must be positive"));
        }
        let s = self.find_height(lambda, s0)?;
        self.assemble(lambda, s)
    }

    fn find_height(&self, lambda: f64, s0: f64) -> Result<f64> {
        let mut lo = s0;
        let mut hi = f64::NAN;
        let mut side = self.shoot(lambda, lo)?.side;
        if side == 0.0 {
            return Ok(lo);
        }
        while side < 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-14 {
                return Err(Error::no_convergence(
                    MODULE,
                    format!("λ = {lambda}: every height down to {lo:e} overshoots (bracket [{lo:e}, {s0:e}])"),
                ));
            }
            side = self.shoot(lambda, lo)?.side;
        }
        if hi.is_nan() {
            let mut s = lo;
            loop {
                let next = s * 1.25;
                if next > 1e6 {
                    return Err(Error::no_convergence(
                        MODULE,
                        format!("λ = {lambda}: no overshooting height below {next:e} (bracket low end {lo:e})"),
                    ));
                }
                if self.shoot(lambda, next)?.side < 0.0 {
                    hi = next;
                    break;
                }
                lo = next;
                s = next;
            }
        }
        // Newton on G inside the bracket, bisection when Newton leaves it.
        let mut s = 0.5 * (lo + hi);
        for _ in 0..400 {
            let shot = self.shoot(lambda, s)?;
            if shot.side > 0.0 {
                lo = s;
            } else if shot.side < 0.0 {
                hi = s;
            } else {
                return Ok(s);
            }
            let newton = s - shot.mismatch / shot.slope;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) <= 4.0 * f64::EPSILON * hi || (next - s).abs() <= 2.0 * f64::EPSILON * s {
                return Ok(next);
            }
            s = next;
        }
        Err(Error::no_convergence(
            MODULE,
            format!("λ = {lambda}: Newton iteration stalled in bracket [{lo:.17e}, {hi:.17e}]"),
        ))
    }

    fn assemble(&self, lambda: f64, s: f64) -> Result<BranchPoint> {
        let g = &self.grid;
        let mut right = Vec::new();
        let (_, idx) = self.integrate(lambda, s, Some(&mut right))?;
        let kappa2 = -lambda;
        // WKB tail past the matching node.
        let h = g.spacing();
        let rate = |x: f64| (kappa2 - self.potential.eval(x)).max(0.25 * kappa2).sqrt();
        let mut value = *right.last().expect("at least one node");
        for i in idx..g.len() - 1 {
            let step = 0.5 * h * (rate(g.node(i)) + rate(g.node(i + 1)));
            value *= (-step).exp();
            right.push(value);
        }
        let c = g.center();
        let n = g.len();
        let mut values = vec![0.0; n];
        for (j, &r) in right.iter().enumerate() {
            values[c + j] = r;
            values[c - j] = r;
        }
        if let Some(i) = values[1..n - 1].iter().position(|&x| !(x > 0.0)) {
            return Err(Error::no_convergence(
                MODULE,
                format!("λ = {lambda}: shooting solution is not positive at node {}", i + 1),
            ));
        }
        let u = GridFunction::new(*g, values)?;
        let residual = pekar::el_residual(&u, lambda, &self.potential)?;
        let norm2_sq = u.norm2_sq();
        Ok(BranchPoint {
            lambda,
            u,
            norm2_sq,
            height: s,
            residual,
        })
    }

    /// Solve at each λ (in parallel) and assemble the ordered curve.
    pub fn trace(&self, lambdas: &[f64]) -> Result<BranchCurve> {
        if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                MODULE,
                "lambda_grid",
                "λ values must be strictly increasing",
            ));
        }
        for &l in lambdas {
            self.check_lambda(l)?;
        }
        let samples = lambdas
            .par_iter()
            .map(|&l| {
                self.solve(l).map_err(|e| match e {
                    Error::NoConvergence { detail, .. } => {
                        Error::no_convergence(MODULE, format!("while tracing at λ = {l}: {detail}"))
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BranchCurve {
            potential: self.potential.clone(),
            lambda0: self.lambda0,
            samples,
        })
    }

    /// The unique branch point with `∫u² = 1`, by bisection on λ.
    pub fn norm_match(&self) -> Result<BranchPoint> {
        let hi = self.lambda0 - 2.0 * LAMBDA0_MARGIN;
        let p_hi = self.solve(hi)?;
        if p_hi.norm2_sq >= 1.0 {
            return Err(Error::Range {
                module: MODULE,
                detail: format!("norm at λ₀⁻ is {} ≥ 1; norm 1 is not bracketed", p_hi.norm2_sq),
            });
        }
        let mut gap = 1.0;
        let mut lo = self.lambda0 - gap;
        let mut p_lo = self.solve(lo)?;
        let mut doublings = 0;
        while p_lo.norm2_sq <= 1.0 {
            doublings += 1;
            if doublings > 30 {
                return Err(Error::Range {
                    module: MODULE,
                    detail: format!("norm 1 not bracketed down to λ = {lo}; widen the search interval"),
                });
            }
            gap *= 2.0;
            lo = self.lambda0 - gap;
            p_lo = self.solve(lo)?;
        }
        let (mut a, mut b) = (lo, hi);
        let mut best = if (p_lo.norm2_sq - 1.0).abs() < (p_hi.norm2_sq - 1.0).abs() {
            p_lo
        } else {
            p_hi
        };
        let mut s_guess = best.height;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let p = self.solve_from(mid, s_guess)?;
            s_guess = p.height;
            if p.norm2_sq > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
            if (p.norm2_sq - 1.0).abs() <= (best.norm2_sq - 1.0).abs() {
                best = p;
            }
            if b - a <= 2.0 * f64::EPSILON * a.abs().max(1.0) {
                break;
            }
        }
        Ok(best)
    }
}

/// Convenience wrapper: `λ` on the branch of `v`.
pub fn solve_at_lambda(v: &Potential, lambda: f64, grid: &Grid) -> Result<BranchPoint> {
    BranchSolver::new(v, grid)?.solve(lambda)
}

pub fn trace_branch(v: &Potential, lambdas: &[f64], grid: &Grid) -> Result<BranchCurve> {
    BranchSolver::new(v, grid)?.trace(lambdas)
}

/// `(λ*, u*)` with `∫u*² = 1`.
pub fn norm_match(v: &Potential, grid: &Grid) -> Result<(f64, GridFunction<f64>)> {
    let p = BranchSolver::new(v, grid)?.norm_match()?;
    Ok((p.lambda, p.u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda0_free_is_zero() {
        assert_eq!(lambda0(&Potential::Zero, &Grid::production()).unwrap(), 0.0);
    }

    #[test]
    fn lambda0_poschl_teller() {
        let g = Grid::production();
        let l1 = lambda0(&Potential::sech2(2.0, 1.0).unwrap(), &g).unwrap();
        let l2 = lambda0(&Potential::sech2(6.0, 1.0).unwrap(), &g).unwrap();
        assert!((l1 + 1.0).abs() < 1e-6, "{l1}");
        assert!((l2 + 4.0).abs() < 1e-6, "{l2}");
    }

    #[test]
    fn rejects_lambda_above_threshold() {
        let s = BranchSolver::new(&Potential::sech2(2.0, 1.0).unwrap(), &Grid::production()).unwrap();
        assert!(s.solve(-0.5).is_err());
        assert!(s.solve(-1.0).is_err());
    }

    #[test]
    fn free_closed_form() {
        let g = Grid::production();
        let s = BranchSolver::new(&Potential::Zero, &g).unwrap();
        for b in [0.25, 0.5, 1.0] {
            let p = s.solve(-b * b).unwrap();
            assert!((p.norm2_sq - 2.0 * b).abs() < 1e-5, "B = {b}: {}", p.norm2_sq);
            let exact = g.sample(|x| b / (b * x).cosh());
            assert!(p.u.sup_distance(&exact) < 1e-5, "B = {b}");
            assert!(p.residual <= 1e-7, "B = {b}: residual {}", p.residual);
        }
    }

    #[test]
    fn lambda_grid_log_spacing() {
        let lg = LambdaGrid {
            start: -3.0,
            end: -1.05,
            count: 20,
            spacing: Spacing::Log,
        };
        let v = lg.values(-1.0).unwrap();
        assert_eq!(v.len(), 20);
        assert!((v[0] + 3.0).abs() < 1e-12 && (v[19] + 1.05).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(LambdaGrid { end: -0.5, ..lg }.values(-1.0).is_err());
    }
}
