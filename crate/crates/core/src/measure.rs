//! Probability test measures `W` (∫W = 1) and their pairing with grid functions.
//!
//! Every measure acts on sampled functions through node weights `cᵢ`, so that
//! `pair(W, f) = Σ cᵢ fᵢ` is linear in `f`:
//!
//! * dirac: four-point Lagrange weights at the center (cubic interpolation);
//! * gaussian: `hᵢ W(xᵢ)` with the quadrature weights of the lattice;
//! * indicator: the exact integral of the piecewise-linear interpolant over
//!   `[x₀ − w, x₀ + w]`, divided by `2w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

const MODULE: &str = "perturb";

/// Allowed deviation of the discrete mass from 1 on a Pekar grid.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestMeasure {
    Dirac {
        center: f64,
    },
    /// Normal density with mean `center` and standard deviation `width`.
    Gaussian {
        center: f64,
        width: f64,
    },
    /// Uniform density on `[center − width, center + width]`.
    Indicator {
        center: f64,
        width: f64,
    },
}

/// Configuration form: `{"kind": "dirac", "center": 0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: String,
    #[serde(default)]
    pub center: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

/// Uniform node set, either a closed interval with trapezoid weights or a
/// periodic cell `[start, start + n h)` with equal weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Lattice {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    pub periodic: bool,
}

impl Lattice {
    fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    fn weight(&self, i: usize) -> f64 {
        if !self.periodic && (i == 0 || i + 1 == self.len) {
            0.5 * self.step
        } else {
            self.step
        }
    }

    fn period(&self) -> f64 {
        self.len as f64 * self.step
    }

    /// Map `j` (possibly outside `0..len`) to an index, or `None` off a closed lattice.
    fn wrap(&self, j: i64) -> Option<usize> {
        let n = self.len as i64;
        if self.periodic {
            Some(j.rem_euclid(n) as usize)
        } else if (0..n).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    }
}

impl From<&Grid> for Lattice {
    fn from(g: &Grid) -> Self {
        Lattice {
            start: g.node(0),
            step: g.spacing(),
            len: g.len(),
            periodic: false,
        }
    }
}

impl TestMeasure {
    pub fn dirac(center: f64) -> Result<Self> {
        check_center(center)?;
        Ok(TestMeasure::Dirac { center })
    }

    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        check_center(center)?;
        check_width(width)?;
        Ok(TestMeasure::Gaussian { center, width })
    }

    pub fn indicator(center: f64, width: f64) -> Result<Self> {
        check_center(center)?;
        check_width(width)?;
        Ok(TestMeasure::Indicator { center, width })
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let width = || {
            spec.width
                .ok_or_else(|| Error::invalid(MODULE, "measure.width", format!("required for kind `{}`", spec.kind)))
        };
        match spec.kind.as_str() {
            "dirac" => TestMeasure::dirac(spec.center),
            "gaussian" => TestMeasure::gaussian(spec.center, width()?),
            "indicator" => TestMeasure::indicator(spec.center, width()?),
            other => Err(Error::invalid(
                MODULE,
                "measure.kind",
                format!("unknown kind `{other}` (expected dirac, gaussian or indicator)"),
            )),
        }
    }

    pub fn to_spec(&self) -> MeasureSpec {
        let (kind, center, width) = match *self {
            TestMeasure::Dirac { center } => ("dirac", center, None),
            TestMeasure::Gaussian { center, width } => ("gaussian", center, Some(width)),
            TestMeasure::Indicator { center, width } => ("indicator", center, Some(width)),
        };
        MeasureSpec {
            kind: kind.into(),
            center,
            width,
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            TestMeasure::Dirac { center }
            | TestMeasure::Gaussian { center, .. }
            | TestMeasure::Indicator { center, .. } => center,
        }
    }

    /// The probability measure `α W(α x)`, so that
    /// `∫ W(α x) f(x) dx = pair(W.pullback(α), f) / α`.
    pub fn pullback(&self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(
                MODULE,
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        Ok(match *self {
            TestMeasure::Dirac { center } => TestMeasure::Dirac { center: center / alpha },
            TestMeasure::Gaussian { center, width } => TestMeasure::Gaussian {
                center: center / alpha,
                width: width / alpha,
            },
            TestMeasure::Indicator { center, width } => TestMeasure::Indicator {
                center: center / alpha,
                width: width / alpha,
            },
        })
    }

    /// Node weights `cᵢ` with `pair(W, f) = Σ cᵢ fᵢ` on a Pekar grid; the
    /// discrete mass must be 1 within [`MASS_TOL`].
    pub fn weights(&self, grid: &Grid) -> Result<Vec<f64>> {
        let c = self.lattice_weights(&Lattice::from(grid))?;
        let mass: f64 = c.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Range {
                module: MODULE,
                detail: format!(
                    "measure {self:?} has discrete mass {mass} on the grid (R = {}, n = {}); it is not contained or not resolved",
                    grid.half_width(),
                    grid.len()
                ),
            });
        }
        Ok(c)
    }

    /// `∫ W f` for a sampled `f`.
    pub fn pair(&self, f: &GridFunction<f64>) -> Result<f64> {
        f.check_finite()?;
        let c = self.weights(f.grid())?;
        Ok(c.iter().zip(f.values()).map(|(a, b)| a * b).sum())
    }

    pub(crate) fn lattice_weights(&self, lat: &Lattice) -> Result<Vec<f64>> {
        let mut c = vec![0.0; lat.len];
        match *self {
            TestMeasure::Dirac { center } => {
                let x = self.locate(lat, center)?;
                let t = (x - lat.start) / lat.step;
                let cell = t.floor() as i64;
                let mut first = cell - 1;
                if !lat.periodic {
                    first = first.clamp(0, lat.len as i64 - 4);
                }
                for k in 0..4 {
                    let j = first + k;
                    let mut w = 1.0;
                    for m in 0..4 {
                        if m != k {
                            let xm = (first + m) as f64;
                            w *= (t - xm) / (j as f64 - xm);
                        }
                    }
                    let idx = lat.wrap(j).expect("stencil inside lattice");
                    c[idx] += w;
                }
            }
            TestMeasure::Gaussian { center, width } => {
                let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
                // Periodic images within a few widths; a closed lattice sees one copy.
                let images = if lat.periodic {
                    (8.0 * width / lat.period()).ceil() as i64 + 1
                } else {
                    0
                };
                for (i, ci) in c.iter_mut().enumerate() {
                    let x = lat.node(i);
                    let mut s = 0.0;
                    for m in -images..=images {
                        let d = (x - center - m as f64 * lat.period()) / width;
                        s += (-0.5 * d * d).exp();
                    }
                    *ci = lat.weight(i) * norm * s;
                }
            }
            TestMeasure::Indicator { center, width } => {
                let (a, b) = (center - width, center + width);
                if !lat.periodic {
                    let end = lat.node(lat.len - 1);
                    if a < lat.start - 1e-12 * lat.step || b > end + 1e-12 * lat.step {
                        return Err(self.outside(lat));
                    }
                } else if 2.0 * width > lat.period() {
                    return Err(Error::invalid(
                        MODULE,
                        "measure.width",
                        "indicator wider than the periodic cell",
                    ));
                }
                let scale = 1.0 / (2.0 * width);
                let first = ((a - lat.start) / lat.step).floor() as i64;
                let last = ((b - lat.start) / lat.step).ceil() as i64;
                for cell in first..last {
                    let x0 = lat.start + cell as f64 * lat.step;
                    let tl = ((a - x0) / lat.step).clamp(0.0, 1.0);
                    let tr = ((b - x0) / lat.step).clamp(0.0, 1.0);
                    if tr <= tl {
                        continue;
                    }
                    // ∫ (1 − t) dt and ∫ t dt over [tl, tr], times h.
                    let left = lat.step * ((tr - tl) - 0.5 * (tr * tr - tl * tl));
                    let right = lat.step * 0.5 * (tr * tr - tl * tl);
                    let (Some(i), Some(j)) = (lat.wrap(cell), lat.wrap(cell + 1)) else {
                        return Err(self.outside(lat));
                    };
                    c[i] += scale * left;
                    c[j] += scale * right;
                }
            }
        }
        Ok(c)
    }

    fn locate(&self, lat: &Lattice, x: f64) -> Result<f64> {
        if lat.periodic {
            Ok(lat.start + (x - lat.start).rem_euclid(lat.period()))
        } else if x < lat.start || x > lat.node(lat.len - 1) {
            Err(self.outside(lat))
        } else {
            Ok(x)
        }
    }

    fn outside(&self, lat: &Lattice) -> Error {
        Error::Range {
            module: MODULE,
            detail: format!(
                "measure {self:?} reaches outside the grid [{}, {}]",
                lat.start,
                lat.node(lat.len - 1)
            ),
        }
    }
}

fn check_center(center: f64) -> Result<()> {
    if !center.is_finite() {
        return Err(Error::invalid(MODULE, "measure.center", "must be finite"));
    }
    Ok(())
}

fn check_width(width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "measure.width",
            format!("must be finite and > 0, got {width}"),
        ));
    }
    Ok(())
}
