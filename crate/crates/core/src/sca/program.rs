//! Solver-agnostic convex program: bounded variables, a linear objective to
//! maximize, and constraints drawn from five atom families.

use std::fmt::Write as _;

/// Sparse affine expression `Σ coef·x[idx] + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarRef) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarRef, coef: f64) -> Self {
        Self {
            terms: vec![(v.index, coef)],
            constant: 0.0,
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (VarRef, f64)>, constant: f64) -> Self {
        Self {
            terms: terms.into_iter().map(|(v, c)| (v.index, c)).collect(),
            constant,
        }
    }

    pub fn plus(mut self, v: VarRef, coef: f64) -> Self {
        self.terms.push((v.index, coef));
        self
    }

    /// `self + k·other`.
    pub fn plus_expr(mut self, other: &LinExpr, k: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, k * c)));
        self.constant += k * other.constant;
        self
    }

    pub fn plus_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|t| t.1.is_finite())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|t| t.0)
    }
}

/// Handle to a program variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub tag: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `coef · ln(arg)` inside a [`ConstraintAtom::LogAffine`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogTerm {
    pub coef: f64,
    pub arg: LinExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintAtom {
    /// `lhs ⋚ rhs`.
    Affine { lhs: LinExpr, sense: Sense, rhs: f64 },
    /// `Σ cⱼ ln(argⱼ) + linear ≥ 0` with every `cⱼ > 0`.
    LogAffine { logs: Vec<LogTerm>, linear: LinExpr },
    /// `ln(u/(1+u)) + linear ≥ 0` for a positive scalar variable `u`.
    LogRatio { u: usize, linear: LinExpr },
    /// `Σ rowsᵢ² ≤ left · right` with both factors positive.
    QuadOverAffine {
        rows: Vec<LinExpr>,
        left: LinExpr,
        right: LinExpr,
    },
    /// `‖rows‖₂ ≤ bound`.
    NormAffine { rows: Vec<LinExpr>, bound: LinExpr },
}

impl ConstraintAtom {
    pub fn le(lhs: LinExpr, rhs: f64) -> Self {
        ConstraintAtom::Affine {
            lhs,
            sense: Sense::Le,
            rhs,
        }
    }

    pub fn ge(lhs: LinExpr, rhs: f64) -> Self {
        ConstraintAtom::Affine {
            lhs,
            sense: Sense::Ge,
            rhs,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintAtom::Affine { .. } => "AFFINE",
            ConstraintAtom::LogAffine { .. } => "LOG_AFFINE",
            ConstraintAtom::LogRatio { .. } => "LOG_RATIO",
            ConstraintAtom::QuadOverAffine { .. } => "QUAD_OVER_AFFINE",
            ConstraintAtom::NormAffine { .. } => "NORM_AFFINE",
        }
    }

    /// Every variable index the atom touches, sorted and deduplicated.
    pub fn support(&self) -> Vec<usize> {
        let mut v: Vec<usize> = match self {
            ConstraintAtom::Affine { lhs, .. } => lhs.indices().collect(),
            ConstraintAtom::LogAffine { logs, linear } => logs
                .iter()
                .flat_map(|l| l.arg.indices())
                .chain(linear.indices())
                .collect(),
            ConstraintAtom::LogRatio { u, linear } => {
                std::iter::once(*u).chain(linear.indices()).collect()
            }
            ConstraintAtom::QuadOverAffine { rows, left, right } => rows
                .iter()
                .flat_map(|r| r.indices())
                .chain(left.indices())
                .chain(right.indices())
                .collect(),
            ConstraintAtom::NormAffine { rows, bound } => rows
                .iter()
                .flat_map(|r| r.indices())
                .chain(bound.indices())
                .collect(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_finite(&self) -> bool {
        match self {
            ConstraintAtom::Affine { lhs, rhs, .. } => lhs.is_finite() && rhs.is_finite(),
            ConstraintAtom::LogAffine { logs, linear } => {
                linear.is_finite()
                    && logs
                        .iter()
                        .all(|l| l.coef.is_finite() && l.coef > 0.0 && l.arg.is_finite())
            }
            ConstraintAtom::LogRatio { linear, .. } => linear.is_finite(),
            ConstraintAtom::QuadOverAffine { rows, left, right } => {
                rows.iter().all(LinExpr::is_finite) && left.is_finite() && right.is_finite()
            }
            ConstraintAtom::NormAffine { rows, bound } => {
                rows.iter().all(LinExpr::is_finite) && bound.is_finite()
            }
        }
    }

    /// Canonical slack: nonnegative iff the constraint holds (for equalities,
    /// minus the absolute residual). Points outside a logarithm's domain give
    /// −∞.
    ///
    /// This is the straightforward dense evaluator; the solver has its own
    /// compiled evaluation with derivatives.
    pub fn slack(&self, x: &[f64]) -> f64 {
        match self {
            ConstraintAtom::Affine { lhs, sense, rhs } => {
                let v = lhs.eval(x);
                match sense {
                    Sense::Le => rhs - v,
                    Sense::Ge => v - rhs,
                    Sense::Eq => -(v - rhs).abs(),
                }
            }
            ConstraintAtom::LogAffine { logs, linear } => {
                let mut acc = linear.eval(x);
                for l in logs {
                    let a = l.arg.eval(x);
                    if !(a > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    acc += l.coef * a.ln();
                }
                acc
            }
            ConstraintAtom::LogRatio { u, linear } => {
                let uv = x[*u];
                if !(uv > 0.0) {
                    return f64::NEG_INFINITY;
                }
                (uv / (1.0 + uv)).ln() + linear.eval(x)
            }
            ConstraintAtom::QuadOverAffine { rows, left, right } => {
                let sq: f64 = rows.iter().map(|r| r.eval(x).powi(2)).sum();
                let (y, z) = (left.eval(x), right.eval(x));
                let s = y * z - sq;
                s.min(y).min(z)
            }
            ConstraintAtom::NormAffine { rows, bound } => {
                let sq: f64 = rows.iter().map(|r| r.eval(x).powi(2)).sum();
                bound.eval(x) - sq.sqrt()
            }
        }
    }

    /// Positive amount by which the constraint is violated (≤ 0 when it holds).
    pub fn violation(&self, x: &[f64]) -> f64 {
        -self.slack(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: String,
    pub atom: ConstraintAtom,
}

/// A convex program `maximize c·x` over bounded variables and atom constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexProgram {
    pub vars: Vec<VarInfo>,
    pub objective: LinExpr,
    pub constraints: Vec<Constraint>,
    pub warm_start: Vec<f64>,
}

impl ConvexProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Add a variable with bounds (use ±∞ for none) and a warm-start value.
    pub fn add_var(&mut self, tag: impl Into<String>, lower: f64, upper: f64, init: f64) -> VarRef {
        let index = self.vars.len();
        self.vars.push(VarInfo {
            tag: tag.into(),
            lower,
            upper,
        });
        self.warm_start.push(init);
        VarRef { index }
    }

    pub fn add(&mut self, tag: impl Into<String>, atom: ConstraintAtom) {
        self.constraints.push(Constraint {
            tag: tag.into(),
            atom,
        });
    }

    pub fn tag(&self, v: VarRef) -> &str {
        &self.vars[v.index].tag
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Check data finiteness and index ranges.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let n = self.n_vars();
        if self.warm_start.len() != n {
            return Err("warm start length mismatch".into());
        }
        if !self.objective.is_finite() || self.objective.indices().any(|i| i >= n) {
            return Err("objective is not finite or references unknown variables".into());
        }
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower >= v.upper {
                return Err(format!("variable {} ({}) has empty bounds", i, v.tag));
            }
        }
        for c in &self.constraints {
            if !c.atom.is_finite() {
                return Err(format!("constraint `{}` has non-finite data", c.tag));
            }
            if c.atom.support().iter().any(|&i| i >= n) {
                return Err(format!("constraint `{}` references unknown variables", c.tag));
            }
        }
        Ok(())
    }

    /// Human-readable listing of variables, bounds and atoms.
    pub fn dump(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(
            o,
            "program: {} variables, {} constraints",
            self.n_vars(),
            self.constraints.len()
        );
        let _ = writeln!(o, "maximize {}", self.fmt_expr(&self.objective));
        let _ = writeln!(o, "variables:");
        for (i, v) in self.vars.iter().enumerate() {
            let _ = writeln!(
                o,
                "  x{i} {:<16} in [{:e}, {:e}]  init {:e}",
                v.tag, v.lower, v.upper, self.warm_start[i]
            );
        }
        let _ = writeln!(o, "constraints:");
        for c in &self.constraints {
            let body = match &c.atom {
                ConstraintAtom::Affine { lhs, sense, rhs } => {
                    let op = match sense {
                        Sense::Le => "<=",
                        Sense::Ge => ">=",
                        Sense::Eq => "==",
                    };
                    format!("{} {op} {rhs:e}", self.fmt_expr(lhs))
                }
                ConstraintAtom::LogAffine { logs, linear } => {
                    let mut s = String::new();
                    for l in logs {
                        let _ = write!(s, "{:e}*ln({}) + ", l.coef, self.fmt_expr(&l.arg));
                    }
                    format!("{s}{} >= 0", self.fmt_expr(linear))
                }
                ConstraintAtom::LogRatio { u, linear } => format!(
                    "ln({0}/(1+{0})) + {1} >= 0",
                    self.vars[*u].tag,
                    self.fmt_expr(linear)
                ),
                ConstraintAtom::QuadOverAffine { rows, left, right } => format!(
                    "|[{}]|^2 <= ({}) * ({})",
                    rows.iter().map(|r| self.fmt_expr(r)).collect::<Vec<_>>().join(", "),
                    self.fmt_expr(left),
                    self.fmt_expr(right)
                ),
                ConstraintAtom::NormAffine { rows, bound } => format!(
                    "|[{}]| <= {}",
                    rows.iter().map(|r| self.fmt_expr(r)).collect::<Vec<_>>().join(", "),
                    self.fmt_expr(bound)
                ),
            };
            let _ = writeln!(o, "  [{}] {:<16} {body}", c.atom.kind(), c.tag);
        }
        o
    }

    fn fmt_expr(&self, e: &LinExpr) -> String {
        let mut s = String::new();
        for &(i, c) in &e.terms {
            let _ = write!(s, "{c:+e}*{} ", self.vars[i].tag);
        }
        let _ = write!(s, "{:+e}", e.constant);
        s
    }
}
