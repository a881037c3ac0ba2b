//! Scalar building blocks of the convex restrictions: the A₀/A₁ pair used to
//! bound `√(1 − (1+kx)⁻²)`, the global lower bound of `1/(xy)`, and first-order
//! tangents of the concave functions that appear on constraint right-hand sides.

use crate::error::{Error, Result};

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// A₀(x; k) = ½ ln(kx(2 + kx)).
pub fn a0(x: f64, k: f64) -> Result<f64> {
    check_pos("x", x)?;
    check_pos("k", k)?;
    let kx = k * x;
    Ok(0.5 * (kx.ln() + (2.0 + kx).ln()))
}

/// A₁(x; k) = (kx + 1)/(x(kx + 2)), the derivative of A₀ in `x`.
pub fn a1(x: f64, k: f64) -> Result<f64> {
    check_pos("x", x)?;
    check_pos("k", k)?;
    let kx = k * x;
    Ok((kx + 1.0) / (x * (kx + 2.0)))
}

/// First-order lower bound of the jointly convex `1/(xy)` at `(x0, y0)`.
pub fn f_lb(x: f64, y: f64, x0: f64, y0: f64) -> Result<f64> {
    for (n, v) in [("x", x), ("y", y), ("x0", x0), ("y0", y0)] {
        check_pos(n, v)?;
    }
    Ok(f_lb_unchecked(x, y, x0, y0))
}

pub(crate) fn f_lb_unchecked(x: f64, y: f64, x0: f64, y0: f64) -> f64 {
    -(x * y0 + x0 * y - 3.0 * x0 * y0) / (x0 * x0 * y0 * y0)
}

/// Affine coefficients of `f_lb(x, y; x0, y0) = cx·x + cy·y + c`.
pub fn f_lb_coefficients(x0: f64, y0: f64) -> (f64, f64, f64) {
    let d = x0 * x0 * y0 * y0;
    (-y0 / d, -x0 / d, 3.0 * x0 * y0 / d)
}

/// Concave scalar functions whose tangents build the convex restrictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConcaveFn {
    /// A₀(x; k) = ½ ln(kx(2 + kx)).
    HalfLogKx2Kx { k: f64 },
    /// √x.
    Sqrt,
    /// ln(1 + kx).
    Log1pKx { k: f64 },
}

impl ConcaveFn {
    pub fn value(&self, x: f64) -> Result<f64> {
        match *self {
            ConcaveFn::HalfLogKx2Kx { k } => a0(x, k),
            ConcaveFn::Sqrt => {
                if x >= 0.0 {
                    Ok(x.sqrt())
                } else {
                    Err(Error::Domain(format!("sqrt of {x}")))
                }
            }
            ConcaveFn::Log1pKx { k } => {
                if k >= 0.0 && 1.0 + k * x > 0.0 {
                    Ok((k * x).ln_1p())
                } else {
                    Err(Error::Domain(format!("ln(1 + {k}·{x})")))
                }
            }
        }
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        match *self {
            ConcaveFn::HalfLogKx2Kx { k } => a1(x, k),
            ConcaveFn::Sqrt => {
                check_pos("x", x)?;
                Ok(0.5 / x.sqrt())
            }
            ConcaveFn::Log1pKx { k } => {
                self.value(x)?;
                Ok(k / (1.0 + k * x))
            }
        }
    }
}

/// A supporting line `slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub slope: f64,
    pub intercept: f64,
}

impl Tangent {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Tangent of a concave function at `x0`; it dominates the function everywhere.
pub fn tangent_of_concave(f: ConcaveFn, x0: f64) -> Result<Tangent> {
    let v = f.value(x0)?;
    let slope = f.derivative(x0)?;
    Ok(Tangent {
        slope,
        intercept: v - slope * x0,
    })
}
