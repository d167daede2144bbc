//! Uniform one-dimensional grid on `[-R, R]` with trapezoidal quadrature,
//! a sixth-order Dirichlet second derivative, cubic interpolation and CSV output.

use std::io::Write;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MODULE: &str = "grid";

/// Smallest admissible point count.
pub const MIN_POINTS: usize = 16;

/// Largest |u| tolerated at ±R by [`kinetic_energy`].
pub const BOUNDARY_DECAY: f64 = 1e-8;

/// Central-difference weights for the second derivative, sixth order.
/// Index `m` is the weight of `u[i ± m]`.
pub(crate) const D2_WEIGHTS: [f64; 4] = [-490.0 / 180.0, 270.0 / 180.0, -27.0 / 180.0, 2.0 / 180.0];

/// Half-width of the second-derivative stencil.
pub(crate) const STENCIL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    points: usize,
}

impl Grid {
    /// Odd `points >= 16` so that `x = 0` is a node.
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(
                MODULE,
                "half_width",
                format!("must be positive and finite, got {half_width}"),
            ));
        }
        if points < MIN_POINTS {
            return Err(Error::invalid(
                MODULE,
                "points",
                format!("need at least {MIN_POINTS}, got {points}"),
            ));
        }
        if points.is_multiple_of(2) {
            return Err(Error::invalid(
                MODULE,
                "points",
                format!("must be odd so that x = 0 is a node, got {points}"),
            ));
        }
        Ok(Grid { half_width, points })
    }

    /// R = 40, n = 4097.
    pub fn production() -> Self {
        Grid {
            half_width: 40.0,
            points: 4097,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn center(&self) -> usize {
        (self.points - 1) / 2
    }

    /// Node `i`; symmetric nodes are computed from the center so that `x(c+j) == -x(c-j)` exactly.
    pub fn node(&self, i: usize) -> f64 {
        let c = self.center() as i64;
        (i as i64 - c) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.points {
            0.5 * h
        } else {
            h
        }
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction<f64> {
        GridFunction {
            grid: *self,
            values: (0..self.points).map(|i| f(self.node(i))).collect(),
        }
    }

    /// Index of the node mirrored through `x = 0`.
    pub fn mirror(&self, i: usize) -> usize {
        self.points - 1 - i
    }

    /// Four-point Lagrange weights for evaluating a grid function at `x`.
    pub fn interpolation_weights(&self, x: f64) -> Result<[(usize, f64); 4]> {
        if !x.is_finite() || x.abs() > self.half_width {
            return Err(Error::Range {
                module: MODULE,
                detail: format!("interpolation point {x} outside [-{r}, {r}]", r = self.half_width),
            });
        }
        let h = self.spacing();
        let t = (x + self.half_width) / h;
        let cell = (t.floor() as usize).min(self.points - 2);
        let start = cell.saturating_sub(1).min(self.points - 4);
        let mut out = [(0usize, 0.0f64); 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let j = start + k;
            let mut w = 1.0;
            for m in 0..4 {
                if m != k {
                    let xm = (start + m) as f64;
                    w *= (t - xm) / (j as f64 - xm);
                }
            }
            *slot = (j, w);
        }
        Ok(out)
    }
}

/// Scalars a grid function may carry.
pub trait GridScalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn abs2(self) -> f64;
    fn finite(self) -> bool;
    fn csv_header() -> &'static str;
    fn csv_fields(self) -> String;
}

impl GridScalar for f64 {
    fn abs2(self) -> f64 {
        self * self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn csv_header() -> &'static str {
        "x,value"
    }
    fn csv_fields(self) -> String {
        fmt17(self)
    }
}

impl GridScalar for Complex64 {
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn csv_header() -> &'static str {
        "x,re,im"
    }
    fn csv_fields(self) -> String {
        format!("{},{}", fmt17(self.re), fmt17(self.im))
    }
}

/// Seventeen significant digits; round-trips every f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T = f64> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: GridScalar> GridFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                MODULE,
                "values",
                format!("length {} does not match grid point count {}", values.len(), grid.len()),
            ));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.finite()) {
            Some(i) => Err(Error::invalid(
                MODULE,
                "values",
                format!("non-finite value at node {i}"),
            )),
            None => Ok(()),
        }
    }

    /// ∫|f|² dx.
    pub fn norm2_sq(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v.abs2())
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", T::csv_header())?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt17(self.grid.node(i)), v.csv_fields())?;
        }
        Ok(())
    }
}

impl GridFunction<f64> {
    /// Cubic interpolation at an arbitrary point of `[-R, R]`.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let w = self.grid.interpolation_weights(x)?;
        Ok(w.iter().map(|&(j, c)| c * self.values[j]).sum())
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction<f64>) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Index of the largest value.
    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
            )
            .0
    }

    /// Shift by an integer number of nodes, filling with zeros.
    pub fn shift_nodes(&self, by: i64) -> GridFunction<f64> {
        let n = self.values.len() as i64;
        let values = (0..n)
            .map(|i| {
                let j = i - by;
                if (0..n).contains(&j) {
                    self.values[j as usize]
                } else {
                    0.0
                }
            })
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    /// Shift so that the maximum sits at `x = 0`.
    pub fn recenter(&self) -> GridFunction<f64> {
        self.shift_nodes(self.grid.center() as i64 - self.argmax() as i64)
    }
}

/// Trapezoidal ∫ f dx over `[-R, R]`.
pub fn integrate<T: GridScalar>(f: &GridFunction<T>) -> Result<T> {
    f.check_finite()?;
    Ok(f.values
        .iter()
        .enumerate()
        .fold(T::default(), |acc, (i, &v)| acc + v * f.grid.weight(i)))
}

/// Sixth-order `u''` with zero ghost values outside `[-R, R]`.
pub(crate) fn second_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let at = |i: i64| -> f64 {
        if i < 0 || i >= n as i64 {
            0.0
        } else {
            values[i as usize]
        }
    };
    let inv = 1.0 / (h * h);
    (0..n as i64)
        .map(|i| {
            let mut s = D2_WEIGHTS[0] * at(i);
            for (m, w) in D2_WEIGHTS.iter().enumerate().skip(1) {
                let m = m as i64;
                s += w * (at(i - m) + at(i + m));
            }
            s * inv
        })
        .collect()
}

/// ∫ u'² dx as the quadratic form `h Σ u (-D u)` with Dirichlet closure.
pub fn kinetic_energy(u: &GridFunction<f64>) -> Result<f64> {
    u.check_finite()?;
    let n = u.values.len();
    let edge = u.values[0].abs().max(u.values[n - 1].abs());
    if edge >= BOUNDARY_DECAY {
        return Err(Error::DomainTooSmall { edge });
    }
    Ok(kinetic_unchecked(&u.values, u.grid.spacing()))
}

pub(crate) fn kinetic_unchecked(values: &[f64], h: f64) -> f64 {
    let d2 = second_derivative(values, h);
    -h * values.iter().zip(&d2).map(|(a, b)| a * b).sum::<f64>()
}

/// Rescale to unit L² norm.
pub fn normalize<T: GridScalar>(u: &GridFunction<T>) -> Result<GridFunction<T>> {
    u.check_finite()?;
    let n2 = u.norm2_sq();
    if !(n2 > 0.0) {
        return Err(Error::invalid(MODULE, "u", "cannot normalize the zero function"));
    }
    let s = 1.0 / n2.sqrt();
    Ok(u.map(|v| v * s))
}
