//! Perturbed Pekar energies `e(V + δW) = inf { E_V(u) + δ ∫W u² }` and the
//! Hellmann–Feynman derivative `d/dδ e(V + δW) |₀ = ∫W u_V²`.
//!
//! The δ-term enters the descent as the linear functional `δ Σ cᵢ uᵢ²` built
//! from the measure's node weights, so the discrete problem is exactly the
//! infimum of functions affine in δ and the variational bracket holds
//! without discretization slack.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::measure::TestMeasure;
use crate::pekar::{self, PekarOptions, PekarResult, Problem};
use crate::potential::Potential;

const MODULE: &str = "perturb";

/// Largest admissible `|δ|`.
pub const MAX_DELTA: f64 = 0.5;

/// Largest `|δ|` accepted by [`Perturbation::bracket`].
pub const MAX_BRACKET_DELTA: f64 = 0.25;

/// Slack on the bracket ordering.
pub const BRACKET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbResult {
    pub delta: f64,
    /// `e(V + δW)`
    pub energy: f64,
    pub minimizer: GridFunction<f64>,
    pub lambda: f64,
    pub el_residual: f64,
}

/// One row of the bracket report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub delta: f64,
    /// `∫W u_V²`
    pub upper: f64,
    /// `(e(V + δW) − e(V)) / δ`
    pub quotient: f64,
    /// `∫W u_δ²`
    pub lower: f64,
}

impl Bracket {
    /// `upper ≥ quotient ≥ lower` for δ > 0, reversed for δ < 0, within [`BRACKET_SLACK`].
    pub fn is_ordered(&self) -> bool {
        let s = BRACKET_SLACK;
        if self.delta > 0.0 {
            self.upper + s >= self.quotient && self.quotient + s >= self.lower
        } else {
            self.upper <= self.quotient + s && self.quotient <= self.lower + s
        }
    }
}

/// The unperturbed minimizer and the measure weights, shared by all δ.
#[derive(Debug, Clone)]
pub struct Perturbation {
    potential: Potential,
    measure: TestMeasure,
    base: Problem,
    weights: Vec<f64>,
    unperturbed: PekarResult,
    opts: PekarOptions,
}

impl Perturbation {
    pub fn new(v: &Potential, w: &TestMeasure, grid: &Grid, opts: &PekarOptions) -> Result<Self> {
        let weights = w.weights(grid)?;
        let unperturbed = pekar::minimize(v, grid, opts)?;
        Ok(Perturbation {
            potential: v.clone(),
            measure: *w,
            base: Problem::from_potential(grid, v),
            weights,
            unperturbed,
            opts: opts.clone(),
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn measure(&self) -> &TestMeasure {
        &self.measure
    }

    /// The δ = 0 minimization.
    pub fn unperturbed(&self) -> &PekarResult {
        &self.unperturbed
    }

    fn problem(&self, delta: f64) -> Problem {
        let mut p = self.base.clone();
        for (d, c) in p.diag.iter_mut().zip(&self.weights) {
            *d += delta * c;
        }
        p
    }

    /// `Σ cᵢ fᵢ²`
    fn pair_sq(&self, u: &GridFunction<f64>) -> f64 {
        self.weights.iter().zip(u.values()).map(|(c, x)| c * x * x).sum()
    }

    /// Minimize `E_{V+δW}` warm-started from `u_V`.
    pub fn energy(&self, delta: f64) -> Result<PerturbResult> {
        if !(delta.is_finite() && delta.abs() <= MAX_DELTA) {
            return Err(Error::invalid(
                MODULE,
                "delta",
                format!("need |δ| <= {MAX_DELTA}, got {delta}"),
            ));
        }
        let problem = self.problem(delta);
        let start = self.unperturbed.minimizer.values();
        let res = problem.minimize(start, &self.opts).map_err(|e| match e {
            Error::Range { detail, .. } => Error::invalid(MODULE, "delta", format!("δ = {delta} rejected: {detail}")),
            other => other,
        })?;
        let ceiling = problem.energy(start);
        if res.energy > ceiling + 1e-12 * ceiling.abs().max(1.0) {
            return Err(Error::no_convergence(
                MODULE,
                format!(
                    "δ = {delta}: descent ended above the warm start ({} > {ceiling})",
                    res.energy
                ),
            ));
        }
        Ok(PerturbResult {
            delta,
            energy: res.energy,
            minimizer: res.minimizer,
            lambda: res.lambda,
            el_residual: res.el_residual,
        })
    }

    /// `∫W u_V²`
    pub fn hf_derivative(&self) -> f64 {
        self.pair_sq(&self.unperturbed.minimizer)
    }

    pub fn bracket(&self, delta: f64) -> Result<Bracket> {
        if delta == 0.0 || !(delta.abs() <= MAX_BRACKET_DELTA) {
            return Err(Error::invalid(
                MODULE,
                "delta",
                format!("need 0 < |δ| <= {MAX_BRACKET_DELTA}, got {delta}"),
            ));
        }
        let r = self.energy(delta)?;
        Ok(self.bracket_from(&r))
    }

    /// Bracket row of an already computed perturbed energy.
    pub fn bracket_from(&self, r: &PerturbResult) -> Bracket {
        Bracket {
            delta: r.delta,
            upper: self.hf_derivative(),
            quotient: (r.energy - self.unperturbed.energy) / r.delta,
            lower: self.pair_sq(&r.minimizer),
        }
    }

    /// Perturbed energies for several δ in parallel, in input order.
    pub fn energies(&self, deltas: &[f64]) -> Result<Vec<PerturbResult>> {
        deltas.par_iter().map(|&d| self.energy(d)).collect()
    }

    /// Bracket rows for several nonzero δ in parallel, in input order.
    pub fn brackets(&self, deltas: &[f64]) -> Result<Vec<Bracket>> {
        deltas.par_iter().map(|&d| self.bracket(d)).collect()
    }
}

pub fn perturbed_energy(
    v: &Potential,
    w: &TestMeasure,
    delta: f64,
    grid: &Grid,
    opts: &PekarOptions,
) -> Result<PerturbResult> {
    Perturbation::new(v, w, grid, opts)?.energy(delta)
}

/// `∫W u_V²`; requires a nonzero potential so that `u_V` is unique.
pub fn hf_derivative(v: &Potential, w: &TestMeasure, grid: &Grid, opts: &PekarOptions) -> Result<f64> {
    if v.is_zero() {
        return Err(Error::invalid(
            MODULE,
            "potential",
            "must be nonzero: the free minimizer is unique only up to translation",
        ));
    }
    Ok(Perturbation::new(v, w, grid, opts)?.hf_derivative())
}

pub fn bracket_check(v: &Potential, w: &TestMeasure, delta: f64, grid: &Grid, opts: &PekarOptions) -> Result<Bracket> {
    Perturbation::new(v, w, grid, opts)?.bracket(delta)
}

/// Write `delta,upper,quotient,lower` rows.
pub fn write_brackets<W: std::io::Write>(rows: &[Bracket], mut out: W) -> std::io::Result<()> {
    writeln!(out, "delta,upper,quotient,lower")?;
    for b in rows {
        writeln!(
            out,
            "{},{},{},{}",
            grid::fmt17(b.delta),
            grid::fmt17(b.upper),
            grid::fmt17(b.quotient),
            grid::fmt17(b.lower)
        )?;
    }
    Ok(())
}
