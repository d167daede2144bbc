//! Symmetric-decreasing external potentials `V(x) >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

const MODULE: &str = "pekar";

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `V₀ sech²(x/w)`
    Sech2 {
        amplitude: f64,
        width: f64,
    },
    /// `V₀ exp(-(x/w)²)`
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `V₀ / (1 + (x/w)²)`
    Lorentzian {
        amplitude: f64,
        width: f64,
    },
    /// Piecewise-linear in `|x|` through `(x, V)` samples with `x >= 0`, zero past the last sample.
    Tabulated {
        points: Vec<[f64; 2]>,
    },
}

/// Configuration form: `{"kind": "sech2", "amplitude": 2.0, "width": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

impl Potential {
    pub fn sech2(amplitude: f64, width: f64) -> Result<Self> {
        check_shape(amplitude, width)?;
        Ok(Potential::Sech2 { amplitude, width })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        check_shape(amplitude, width)?;
        Ok(Potential::Gaussian { amplitude, width })
    }

    pub fn lorentzian(amplitude: f64, width: f64) -> Result<Self> {
        check_shape(amplitude, width)?;
        Ok(Potential::Lorentzian { amplitude, width })
    }

    pub fn tabulated(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid(MODULE, "potential.points", "need at least one sample"));
        }
        let mut prev: Option<[f64; 2]> = None;
        for (i, &[x, v]) in points.iter().enumerate() {
            if !(x.is_finite() && v.is_finite()) || x < 0.0 || v < 0.0 {
                return Err(Error::invalid(
                    MODULE,
                    format!("potential.points[{i}]"),
                    "samples need finite x >= 0 and V >= 0",
                ));
            }
            if let Some([px, pv]) = prev {
                if x <= px {
                    return Err(Error::invalid(
                        MODULE,
                        format!("potential.points[{i}]"),
                        "x must be strictly increasing",
                    ));
                }
                if v > pv {
                    return Err(Error::invalid(
                        MODULE,
                        format!("potential.points[{i}]"),
                        "V must be nonincreasing in |x| (symmetric decreasing)",
                    ));
                }
            }
            prev = Some([x, v]);
        }
        Ok(Potential::Tabulated { points })
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::invalid(
                    MODULE,
                    format!("potential.{name}"),
                    format!("required for kind `{}`", spec.kind),
                )
            })
        };
        match spec.kind.as_str() {
            "zero" => Ok(Potential::Zero),
            "sech2" => Potential::sech2(need(spec.amplitude, "amplitude")?, need(spec.width, "width")?),
            "gaussian" => Potential::gaussian(need(spec.amplitude, "amplitude")?, need(spec.width, "width")?),
            "lorentzian" => Potential::lorentzian(need(spec.amplitude, "amplitude")?, need(spec.width, "width")?),
            "tabulated" => Potential::tabulated(
                spec.points
                    .clone()
                    .ok_or_else(|| Error::invalid(MODULE, "potential.points", "required for kind `tabulated`"))?,
            ),
            other => Err(Error::invalid(
                MODULE,
                "potential.kind",
                format!("unknown kind `{other}` (expected zero, sech2, gaussian, lorentzian or tabulated)"),
            )),
        }
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let shaped = |kind: &str, a: f64, w: f64| PotentialSpec {
            kind: kind.into(),
            amplitude: Some(a),
            width: Some(w),
            points: None,
        };
        match self {
            Potential::Zero => PotentialSpec {
                kind: "zero".into(),
                amplitude: None,
                width: None,
                points: None,
            },
            Potential::Sech2 { amplitude, width } => shaped("sech2", *amplitude, *width),
            Potential::Gaussian { amplitude, width } => shaped("gaussian", *amplitude, *width),
            Potential::Lorentzian { amplitude, width } => shaped("lorentzian", *amplitude, *width),
            Potential::Tabulated { points } => PotentialSpec {
                kind: "tabulated".into(),
                amplitude: None,
                width: None,
                points: Some(points.clone()),
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Sech2 { amplitude, width } => {
                let c = (x / width).cosh();
                amplitude / (c * c)
            }
            Potential::Gaussian { amplitude, width } => amplitude * (-(x / width).powi(2)).exp(),
            Potential::Lorentzian { amplitude, width } => amplitude / (1.0 + (x / width).powi(2)),
            Potential::Tabulated { ref points } => {
                let r = x.abs();
                if r <= points[0][0] {
                    return points[0][1];
                }
                for w in points.windows(2) {
                    let ([x0, v0], [x1, v1]) = (w[0], w[1]);
                    if r <= x1 {
                        return v0 + (v1 - v0) * (r - x0) / (x1 - x0);
                    }
                }
                0.0
            }
        }
    }

    /// True when `V ≡ 0`.
    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Sech2 { amplitude, .. }
            | Potential::Gaussian { amplitude, .. }
            | Potential::Lorentzian { amplitude, .. } => *amplitude == 0.0,
            Potential::Tabulated { points } => points.iter().all(|p| p[1] == 0.0),
        }
    }

    /// `sup V = V(0)`.
    pub fn peak(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn samples(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// Smallest `x >= 0` with `V(x) < threshold`, searched on a step of `step`.
    pub fn radius_below(&self, threshold: f64, step: f64, cap: f64) -> f64 {
        let mut x = 0.0;
        while x < cap && self.eval(x) >= threshold {
            x += step;
        }
        x.min(cap)
    }

    /// Check nonnegativity, evenness, monotonicity on `[0, R]` and decay on grid samples.
    pub fn validate_on(&self, grid: &Grid) -> Result<()> {
        let v = self.samples(grid);
        let c = grid.center();
        for (i, &vi) in v.iter().enumerate() {
            if !(vi.is_finite() && vi >= 0.0) {
                return Err(Error::invalid(
                    MODULE,
                    "potential",
                    format!("V(x) must be finite and >= 0 (node {i})"),
                ));
            }
            if (vi - v[grid.mirror(i)]).abs() > 1e-14 * vi.abs().max(1.0) {
                return Err(Error::invalid(MODULE, "potential", format!("V is not even (node {i})")));
            }
        }
        for i in c..v.len() - 1 {
            if v[i + 1] > v[i] {
                return Err(Error::invalid(
                    MODULE,
                    "potential",
                    format!("V is not nonincreasing on [0, R] (node {})", i + 1),
                ));
            }
        }
        let edge = v[v.len() - 1];
        if edge > 1e-3 * self.peak().max(1e-300) && edge > 1e-12 {
            return Err(Error::invalid(
                MODULE,
                "potential",
                format!("V({}) = {edge:e} has not decayed on the grid", grid.half_width()),
            ));
        }
        Ok(())
    }
}

fn check_shape(amplitude: f64, width: f64) -> Result<()> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(
            MODULE,
            "potential.amplitude",
            format!("must be finite and >= 0, got {amplitude}"),
        ));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid(
            MODULE,
            "potential.width",
            format!("must be finite and > 0, got {width}"),
        ));
    }
    Ok(())
}
