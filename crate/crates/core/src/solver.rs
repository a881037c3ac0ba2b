//! Primal log-barrier interior-point method for [`ConvexProgram`]s.
//!
//! Each barrier stage minimizes `−c·x + μ·Σ −ln Gᵢ(x)` with damped Newton
//! steps; the backtracking line search rejects any trial point outside an
//! atom's domain. The Newton system is assembled as a symmetric band (atoms
//! touching nearby variables) plus a low-rank term for wide affine rows such as
//! budget sums, and solved with a banded Cholesky factor and a Woodbury
//! correction. Affine equalities are handled by a Schur complement.

use std::fmt::Write as _;

use serde::Serialize;

use crate::linalg::{dense_spd_solve, BandCholesky, BandMatrix};
use crate::sca::{ConstraintAtom, ConvexProgram, LinExpr, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InfeasibleStart,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    /// Relative suboptimality certificate required for `Optimal`.
    pub kkt_tol: f64,
    pub max_newton_per_stage: usize,
    pub barrier_reduction: f64,
    pub initial_barrier_weight: f64,
    pub max_stages: usize,
    /// Collect per-stage [`TraceRecord`]s.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            kkt_tol: 1e-6,
            max_newton_per_stage: 50,
            barrier_reduction: 0.2,
            initial_barrier_weight: 1.0,
            max_stages: 80,
            trace: false,
        }
    }
}

/// One barrier stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub stage: usize,
    pub mu: f64,
    pub newton_iterations: usize,
    pub objective: f64,
    /// Newton decrement λ² in the unscaled (1/μ) barrier form.
    pub decrement: f64,
    pub duality_gap: f64,
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub point: Vec<f64>,
    pub objective: f64,
    pub max_constraint_violation: f64,
    /// Relative suboptimality certificate `μ(m + √m·λ)/max(1, |c·x|)`.
    pub stationarity_residual: f64,
    pub barrier_iterations: usize,
    pub stages: usize,
    /// Objective at the end of each stage.
    pub stage_objectives: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

impl SolveReport {
    /// Line-delimited JSON records of the barrier trace.
    pub fn trace_lines(&self) -> String {
        let mut o = String::new();
        for r in &self.trace {
            let _ = writeln!(o, "{}", serde_json::to_string(r).unwrap_or_default());
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomViolation {
    pub tag: String,
    pub kind: &'static str,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub max_violation: f64,
    pub per_atom: Vec<AtomViolation>,
    /// Largest bound violation over variables (≤ 0 when strictly inside).
    pub bound_violation: f64,
}

impl FeasibilityReport {
    pub fn worst(&self) -> Option<&AtomViolation> {
        self.per_atom
            .iter()
            .max_by(|a, b| a.violation.total_cmp(&b.violation))
    }
}

/// Constraint residuals at `point` using the dense evaluator.
pub fn check_feasibility(p: &ConvexProgram, point: &[f64]) -> FeasibilityReport {
    let per_atom: Vec<AtomViolation> = p
        .constraints
        .iter()
        .map(|c| AtomViolation {
            tag: c.tag.clone(),
            kind: c.atom.kind(),
            violation: c.atom.violation(point),
        })
        .collect();
    let bound_violation = p
        .vars
        .iter()
        .zip(point)
        .map(|(v, &x)| (v.lower - x).max(x - v.upper))
        .fold(f64::NEG_INFINITY, f64::max);
    let atoms_max = per_atom
        .iter()
        .map(|a| a.violation)
        .fold(f64::NEG_INFINITY, f64::max);
    FeasibilityReport {
        max_violation: atoms_max.max(bound_violation),
        per_atom,
        bound_violation,
    }
}

// ---------------------------------------------------------------------------
// compiled atoms

#[derive(Debug, Clone)]
struct LocalAffine {
    coef: Vec<f64>,
    constant: f64,
}

impl LocalAffine {
    fn from_expr(e: &LinExpr, support: &[usize]) -> Self {
        let mut coef = vec![0.0; support.len()];
        for &(i, c) in &e.terms {
            let k = support.binary_search(&i).expect("support covers expression");
            coef[k] += c;
        }
        Self {
            coef,
            constant: e.constant,
        }
    }

    #[inline]
    fn eval(&self, xl: &[f64]) -> f64 {
        self.coef.iter().zip(xl).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// G = a·x + c ≥ 0.
    Affine(LocalAffine),
    LogAffine {
        logs: Vec<(f64, LocalAffine)>,
        linear: LocalAffine,
    },
    LogRatio {
        u: usize,
        linear: LocalAffine,
    },
    Quad {
        rows: Vec<LocalAffine>,
        y: LocalAffine,
        z: LocalAffine,
    },
    Norm {
        rows: Vec<LocalAffine>,
        t: LocalAffine,
    },
}

#[derive(Debug, Clone)]
struct Compiled {
    support: Vec<usize>,
    kind: Kind,
    theta: f64,
}

/// Barrier argument with first and second derivatives (local coordinates).
struct Local {
    g: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Compiled {
    fn new(atom: &ConstraintAtom) -> Option<Self> {
        let support = atom.support();
        let s = &support;
        let (kind, theta) = match atom {
            ConstraintAtom::Affine { lhs, sense, rhs } => {
                let mut a = LocalAffine::from_expr(lhs, s);
                match sense {
                    Sense::Le => {
                        a.coef.iter_mut().for_each(|c| *c = -*c);
                        a.constant = rhs - a.constant;
                    }
                    Sense::Ge => a.constant -= rhs,
                    Sense::Eq => return None,
                }
                (Kind::Affine(a), 1.0)
            }
            ConstraintAtom::LogAffine { logs, linear } => (
                Kind::LogAffine {
                    logs: logs
                        .iter()
                        .map(|l| (l.coef, LocalAffine::from_expr(&l.arg, s)))
                        .collect(),
                    linear: LocalAffine::from_expr(linear, s),
                },
                1.0,
            ),
            ConstraintAtom::LogRatio { u, linear } => (
                Kind::LogRatio {
                    u: s.binary_search(u).expect("u in support"),
                    linear: LocalAffine::from_expr(linear, s),
                },
                1.0,
            ),
            ConstraintAtom::QuadOverAffine { rows, left, right } => (
                Kind::Quad {
                    rows: rows.iter().map(|r| LocalAffine::from_expr(r, s)).collect(),
                    y: LocalAffine::from_expr(left, s),
                    z: LocalAffine::from_expr(right, s),
                },
                2.0,
            ),
            ConstraintAtom::NormAffine { rows, bound } => (
                Kind::Norm {
                    rows: rows.iter().map(|r| LocalAffine::from_expr(r, s)).collect(),
                    t: LocalAffine::from_expr(bound, s),
                },
                2.0,
            ),
        };
        Some(Self {
            support,
            kind,
            theta,
        })
    }

    fn gather(&self, x: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.support.iter().map(|&i| x[i]));
    }

    /// Barrier argument G, or `None` outside the barrier domain.
    fn barrier_arg(&self, xl: &[f64]) -> Option<f64> {
        let g = match &self.kind {
            Kind::Affine(a) => a.eval(xl),
            Kind::LogAffine { logs, linear } => {
                let mut acc = linear.eval(xl);
                for (c, a) in logs {
                    let v = a.eval(xl);
                    if !(v > 0.0) {
                        return None;
                    }
                    acc += c * v.ln();
                }
                acc
            }
            Kind::LogRatio { u, linear } => {
                let uv = xl[*u];
                if !(uv > 0.0) {
                    return None;
                }
                uv.ln() - uv.ln_1p() + linear.eval(xl)
            }
            Kind::Quad { rows, y, z } => {
                let (yv, zv) = (y.eval(xl), z.eval(xl));
                if !(yv > 0.0 && zv > 0.0) {
                    return None;
                }
                yv * zv - rows.iter().map(|r| r.eval(xl).powi(2)).sum::<f64>()
            }
            Kind::Norm { rows, t } => {
                let tv = t.eval(xl);
                if !(tv > 0.0) {
                    return None;
                }
                tv * tv - rows.iter().map(|r| r.eval(xl).powi(2)).sum::<f64>()
            }
        };
        if g > 0.0 && g.is_finite() {
            Some(g)
        } else {
            None
        }
    }

    /// Canonical slack, matching [`ConstraintAtom::slack`].
    fn slack(&self, xl: &[f64]) -> f64 {
        match &self.kind {
            Kind::Affine(a) => a.eval(xl),
            Kind::LogAffine { logs, linear } => {
                let mut acc = linear.eval(xl);
                for (c, a) in logs {
                    let v = a.eval(xl);
                    if !(v > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    acc += c * v.ln();
                }
                acc
            }
            Kind::LogRatio { u, linear } => {
                let uv = xl[*u];
                if !(uv > 0.0) {
                    return f64::NEG_INFINITY;
                }
                (uv / (1.0 + uv)).ln() + linear.eval(xl)
            }
            Kind::Quad { rows, y, z } => {
                let (yv, zv) = (y.eval(xl), z.eval(xl));
                let s = yv * zv - rows.iter().map(|r| r.eval(xl).powi(2)).sum::<f64>();
                s.min(yv).min(zv)
            }
            Kind::Norm { rows, t } => {
                t.eval(xl) - rows.iter().map(|r| r.eval(xl).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    fn derivatives(&self, xl: &[f64]) -> Option<Local> {
        let k = self.support.len();
        let g = self.barrier_arg(xl)?;
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        let outer = |h: &mut [f64], a: &[f64], b: &[f64], w: f64| {
            for i in 0..k {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..k {
                    h[i * k + j] += w * a[i] * b[j];
                }
            }
        };
        match &self.kind {
            Kind::Affine(a) => grad.copy_from_slice(&a.coef),
            Kind::LogAffine { logs, linear } => {
                grad.copy_from_slice(&linear.coef);
                for (c, a) in logs {
                    let v = a.eval(xl);
                    for (gi, ai) in grad.iter_mut().zip(&a.coef) {
                        *gi += c * ai / v;
                    }
                    outer(&mut hess, &a.coef, &a.coef, -c / (v * v));
                }
            }
            Kind::LogRatio { u, linear } => {
                grad.copy_from_slice(&linear.coef);
                let uv = xl[*u];
                grad[*u] += 1.0 / uv - 1.0 / (1.0 + uv);
                hess[*u * k + *u] += -1.0 / (uv * uv) + 1.0 / ((1.0 + uv) * (1.0 + uv));
            }
            Kind::Quad { rows, y, z } => {
                let (yv, zv) = (y.eval(xl), z.eval(xl));
                for ((gi, yi), zi) in grad.iter_mut().zip(&y.coef).zip(&z.coef) {
                    *gi = zv * yi + yv * zi;
                }
                outer(&mut hess, &y.coef, &z.coef, 1.0);
                outer(&mut hess, &z.coef, &y.coef, 1.0);
                for r in rows {
                    let w = r.eval(xl);
                    for (gi, ri) in grad.iter_mut().zip(&r.coef) {
                        *gi -= 2.0 * w * ri;
                    }
                    outer(&mut hess, &r.coef, &r.coef, -2.0);
                }
            }
            Kind::Norm { rows, t } => {
                let tv = t.eval(xl);
                for (gi, ti) in grad.iter_mut().zip(&t.coef) {
                    *gi = 2.0 * tv * ti;
                }
                outer(&mut hess, &t.coef, &t.coef, 2.0);
                for r in rows {
                    let w = r.eval(xl);
                    for (gi, ri) in grad.iter_mut().zip(&r.coef) {
                        *gi -= 2.0 * w * ri;
                    }
                    outer(&mut hess, &r.coef, &r.coef, -2.0);
                }
            }
        }
        Some(Local { g, grad, hess })
    }

    fn span(&self) -> usize {
        match (self.support.first(), self.support.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }
}

/// Solver-side slack of each constraint (equalities report `−|residual|`);
/// exposed so tests can compare it with the dense evaluator.
pub fn compiled_slacks(p: &ConvexProgram, x: &[f64]) -> Vec<f64> {
    let mut buf = Vec::new();
    p.constraints
        .iter()
        .map(|c| match Compiled::new(&c.atom) {
            Some(ca) => {
                ca.gather(x, &mut buf);
                ca.slack(&buf)
            }
            None => c.atom.slack(x),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Newton system

struct Structure {
    n: usize,
    bw: usize,
    banded: Vec<usize>,
    low_rank: Vec<usize>,
}

fn plan_structure(n: usize, atoms: &[Compiled]) -> Structure {
    let nonlinear_bw = atoms
        .iter()
        .filter(|a| !matches!(a.kind, Kind::Affine(_)))
        .map(Compiled::span)
        .max()
        .unwrap_or(0);
    let short = nonlinear_bw.max(16);
    let mut banded = Vec::new();
    let mut low_rank = Vec::new();
    let mut bw = nonlinear_bw;
    for (i, a) in atoms.iter().enumerate() {
        if matches!(a.kind, Kind::Affine(_)) && a.span() > short {
            low_rank.push(i);
        } else {
            bw = bw.max(a.span());
            banded.push(i);
        }
    }
    if low_rank.len() > 48 || 3 * bw >= n {
        banded = (0..atoms.len()).collect();
        low_rank.clear();
        bw = n.saturating_sub(1);
    }
    Structure {
        n,
        bw,
        banded,
        low_rank,
    }
}

/// Factorized `B + Σ wₖ uₖuₖᵀ` with `B` banded.
struct Factor {
    chol: BandCholesky,
    /// Dense columns B⁻¹uₖ and the sparse uₖ.
    z: Vec<Vec<f64>>,
    u: Vec<(Vec<usize>, Vec<f64>)>,
    /// W⁻¹ + UᵀB⁻¹U, row-major.
    s: Vec<f64>,
}

impl Factor {
    fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.chol.solve_in_place(&mut x);
        let k = self.u.len();
        if k > 0 {
            let mut t: Vec<f64> = self
                .u
                .iter()
                .map(|(idx, c)| idx.iter().zip(c).map(|(&i, &v)| v * x[i]).sum())
                .collect();
            dense_spd_solve(&self.s, k, &mut t)?;
            for (zk, tk) in self.z.iter().zip(&t) {
                for (xi, zi) in x.iter_mut().zip(zk) {
                    *xi -= tk * zi;
                }
            }
        }
        Some(x)
    }
}

struct Problem<'a> {
    p: &'a ConvexProgram,
    atoms: Vec<Compiled>,
    eq_rows: Vec<(Vec<usize>, Vec<f64>, f64)>,
    /// Absolute scale of each equality row, for the residual test.
    eq_scale: Vec<f64>,
    structure: Structure,
    cost: Vec<f64>,
    m_total: f64,
}

impl<'a> Problem<'a> {
    fn new(p: &'a ConvexProgram) -> Self {
        let mut atoms = Vec::new();
        let mut eq_rows = Vec::new();
        for c in &p.constraints {
            match Compiled::new(&c.atom) {
                Some(a) => atoms.push(a),
                None => {
                    if let ConstraintAtom::Affine { lhs, rhs, .. } = &c.atom {
                        let support = c.atom.support();
                        let la = LocalAffine::from_expr(lhs, &support);
                        eq_rows.push((support, la.coef, rhs - la.constant));
                    }
                }
            }
        }
        let n = p.n_vars();
        let structure = plan_structure(n, &atoms);
        let mut cost = vec![0.0; n];
        for &(i, c) in &p.objective.terms {
            cost[i] += c;
        }
        let bounds: f64 = p
            .vars
            .iter()
            .map(|v| v.lower.is_finite() as u8 as f64 + v.upper.is_finite() as u8 as f64)
            .sum();
        let m_total = atoms.iter().map(|a| a.theta).sum::<f64>() + bounds;
        let eq_scale = eq_rows.iter().map(|(_, _, b)| 1.0 + b.abs()).collect();
        Self {
            p,
            atoms,
            eq_rows,
            eq_scale,
            structure,
            cost,
            m_total,
        }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.p.objective.eval(x)
    }

    /// Barrier arguments of every atom and bound, or `None` outside the domain.
    fn barrier_args(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.atoms.len() + 2 * x.len());
        let mut buf = Vec::new();
        for a in &self.atoms {
            a.gather(x, &mut buf);
            out.push(a.barrier_arg(&buf)?);
        }
        for (v, &xi) in self.p.vars.iter().zip(x) {
            if !xi.is_finite() {
                return None;
            }
            if v.lower.is_finite() {
                let d = xi - v.lower;
                if !(d > 0.0) {
                    return None;
                }
                out.push(d);
            }
            if v.upper.is_finite() {
                let d = v.upper - xi;
                if !(d > 0.0) {
                    return None;
                }
                out.push(d);
            }
        }
        Some(out)
    }

    fn eq_residual(&self, x: &[f64]) -> Vec<f64> {
        self.eq_rows
            .iter()
            .map(|(idx, c, rhs)| idx.iter().zip(c).map(|(&i, &v)| v * x[i]).sum::<f64>() - rhs)
            .collect()
    }

    /// Gradient and factorized Hessian of `−c·x + μ·barrier` at `x`.
    fn newton_system(&self, x: &[f64], mu: f64) -> Option<(Vec<f64>, Factor)> {
        let n = self.structure.n;
        let mut grad: Vec<f64> = self.cost.iter().map(|c| -c).collect();
        let mut band = BandMatrix::zeros(n, self.structure.bw);
        let mut buf = Vec::new();
        for &ai in &self.structure.banded {
            let a = &self.atoms[ai];
            a.gather(x, &mut buf);
            let loc = a.derivatives(&buf)?;
            let k = a.support.len();
            let inv = 1.0 / loc.g;
            for i in 0..k {
                let gi = loc.grad[i];
                grad[a.support[i]] -= mu * gi * inv;
                for j in 0..=i {
                    let h = mu * (gi * loc.grad[j] * inv * inv - loc.hess[i * k + j] * inv);
                    if h != 0.0 {
                        band.add(a.support[i], a.support[j], h);
                    }
                }
            }
        }
        let mut u = Vec::new();
        let mut weights = Vec::new();
        for &ai in &self.structure.low_rank {
            let a = &self.atoms[ai];
            a.gather(x, &mut buf);
            let g = a.barrier_arg(&buf)?;
            let coef = match &a.kind {
                Kind::Affine(la) => la.coef.clone(),
                _ => unreachable!("only affine atoms are low rank"),
            };
            for (&i, &c) in a.support.iter().zip(&coef) {
                grad[i] -= mu * c / g;
            }
            weights.push(mu / (g * g));
            u.push((a.support.clone(), coef));
        }
        for (i, (v, &xi)) in self.p.vars.iter().zip(x).enumerate() {
            if v.lower.is_finite() {
                let d = xi - v.lower;
                grad[i] -= mu / d;
                band.add(i, i, mu / (d * d));
            }
            if v.upper.is_finite() {
                let d = v.upper - xi;
                grad[i] += mu / d;
                band.add(i, i, mu / (d * d));
            }
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return None;
        }

        let floor = 1e-30 * band.diag_max().max(1e-300);
        let mut ridge = 1e-14;
        let chol = loop {
            let mut b = band.clone();
            b.inflate_diag(ridge, floor);
            if let Some(c) = b.cholesky() {
                break c;
            }
            ridge *= 100.0;
            if ridge > 1e-2 {
                return None;
            }
        };
        let k = u.len();
        let mut z = Vec::with_capacity(k);
        for (idx, c) in &u {
            let mut col = vec![0.0; n];
            for (&i, &v) in idx.iter().zip(c) {
                col[i] = v;
            }
            chol.solve_in_place(&mut col);
            z.push(col);
        }
        let mut s = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let (idx, c) = &u[a];
                s[a * k + b] = idx.iter().zip(c).map(|(&i, &v)| v * z[b][i]).sum();
            }
            s[a * k + a] += 1.0 / weights[a];
        }
        Some((grad, Factor { chol, z, u, s }))
    }

    /// Newton direction for `H Δ = −grad` subject to `E Δ = −r_eq`.
    fn direction(&self, f: &Factor, grad: &[f64], r_eq: &[f64]) -> Option<Vec<f64>> {
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut d = f.solve(&neg)?;
        let k = self.eq_rows.len();
        if k > 0 {
            let n = d.len();
            let mut cols = Vec::with_capacity(k);
            for (idx, c, _) in &self.eq_rows {
                let mut e = vec![0.0; n];
                for (&i, &v) in idx.iter().zip(c) {
                    e[i] = v;
                }
                cols.push(f.solve(&e)?);
            }
            let mut m = vec![0.0; k * k];
            let mut rhs = vec![0.0; k];
            for a in 0..k {
                let (idx, c, _) = &self.eq_rows[a];
                for b in 0..k {
                    m[a * k + b] = idx.iter().zip(c).map(|(&i, &v)| v * cols[b][i]).sum();
                }
                rhs[a] = idx.iter().zip(c).map(|(&i, &v)| v * d[i]).sum::<f64>() + r_eq[a];
            }
            dense_spd_solve(&m, k, &mut rhs)?;
            for (col, nu) in cols.iter().zip(&rhs) {
                for (di, ci) in d.iter_mut().zip(col) {
                    *di -= nu * ci;
                }
            }
            // Remove what is left of E d + r_eq by a least-norm correction, so
            // an ill-conditioned H cannot push the iterate off the equalities.
            let mut gram = vec![0.0; k * k];
            let mut miss = vec![0.0; k];
            for a in 0..k {
                let (ia, ca, _) = &self.eq_rows[a];
                miss[a] = ia.iter().zip(ca).map(|(&i, &v)| v * d[i]).sum::<f64>() + r_eq[a];
                for b in 0..k {
                    let (ib, cb, _) = &self.eq_rows[b];
                    gram[a * k + b] = ia
                        .iter()
                        .zip(ca)
                        .map(|(&i, &v)| ib.iter().position(|&j| j == i).map_or(0.0, |p| v * cb[p]))
                        .sum();
                }
            }
            dense_spd_solve(&gram, k, &mut miss)?;
            for ((idx, c, _), nu) in self.eq_rows.iter().zip(&miss) {
                for (&i, &v) in idx.iter().zip(c) {
                    d[i] -= nu * v;
                }
            }
        }
        if d.iter().all(|v| v.is_finite()) {
            Some(d)
        } else {
            None
        }
    }
}

enum Centering {
    Done { iterations: usize, decrement: f64, centered: bool },
    Failed { iterations: usize },
}

fn center(prob: &Problem<'_>, x: &mut Vec<f64>, mu: f64, max_iter: usize) -> Centering {
    const ARMIJO: f64 = 0.01;
    const NEWTON_TOL: f64 = 1e-9;
    let mut decrement = f64::INFINITY;
    let Some(mut args) = prob.barrier_args(x) else {
        return Centering::Failed { iterations: 0 };
    };
    for it in 0..max_iter {
        let Some((grad, factor)) = prob.newton_system(x, mu) else {
            return Centering::Failed { iterations: it };
        };
        let r_eq = prob.eq_residual(x);
        let Some(dir) = prob.direction(&factor, &grad, &r_eq) else {
            return Centering::Failed { iterations: it };
        };
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        // λ² of the t-form barrier (t = 1/μ).
        decrement = (-slope / mu).max(0.0);
        if decrement * 0.5 <= NEWTON_TOL && r_eq.iter().zip(&prob.eq_scale).all(|(r, sc)| r.abs() <= 1e-10 * sc) {
            return Centering::Done {
                iterations: it,
                decrement,
                centered: true,
            };
        }
        let dc: f64 = prob.cost.iter().zip(&dir).map(|(c, d)| c * d).sum();
        let mut step = 1.0;
        let mut accepted = false;
        let mut trial = x.clone();
        for _ in 0..80 {
            for ((t, xi), di) in trial.iter_mut().zip(x.iter()).zip(&dir) {
                *t = xi + step * di;
            }
            if let Some(new_args) = prob.barrier_args(&trial) {
                // φ(trial) − φ(x), accumulated as log ratios for accuracy.
                let barrier: f64 = new_args
                    .iter()
                    .zip(&args)
                    .map(|(a, b)| -(a / b).ln())
                    .sum();
                let dphi = -step * dc + mu * barrier;
                if dphi <= ARMIJO * step * slope || (decrement < 1e-6 && dphi <= 1e-12 * mu) {
                    accepted = true;
                    args = new_args;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent achievable in floating point: treat as centered.
            let centered = decrement < 1e-4;
            return Centering::Done {
                iterations: it + 1,
                decrement,
                centered,
            };
        }
        std::mem::swap(x, &mut trial);
    }
    Centering::Done {
        iterations: max_iter,
        decrement,
        centered: false,
    }
}

/// Maximize the program's objective from its warm start.
pub fn solve(p: &ConvexProgram, opts: &SolverOptions) -> SolveReport {
    let prob = Problem::new(p);
    let mut x = p.warm_start.clone();
    let warm_obj = prob.objective(&x);

    let fail = |status, x: Vec<f64>, iters, stages, so: Vec<f64>, trace| {
        let fr = check_feasibility(p, &x);
        SolveReport {
            status,
            objective: p.objective.eval(&x),
            max_constraint_violation: fr.max_violation,
            stationarity_residual: f64::INFINITY,
            point: x,
            barrier_iterations: iters,
            stages,
            stage_objectives: so,
            trace,
        }
    };

    if p.check_well_formed().is_err()
        || prob.barrier_args(&x).is_none()
        || prob
            .eq_residual(&x)
            .iter()
            .any(|r| !(r.abs() <= opts.feas_tol))
    {
        return fail(SolveStatus::InfeasibleStart, x, 0, 0, Vec::new(), Vec::new());
    }

    let mut mu = opts.initial_barrier_weight;
    let mut iters = 0;
    let mut stage_objectives = Vec::new();
    let mut trace = Vec::new();
    let mut last_decrement;
    let mut status = SolveStatus::MaxIter;
    let mut stage = 0;
    loop {
        stage += 1;
        match center(&prob, &mut x, mu, opts.max_newton_per_stage) {
            Centering::Failed { iterations } => {
                iters += iterations;
                return fail(
                    SolveStatus::NumericalFailure,
                    x,
                    iters,
                    stage,
                    stage_objectives,
                    trace,
                );
            }
            Centering::Done {
                iterations,
                decrement,
                centered,
            } => {
                iters += iterations;
                last_decrement = decrement;
                let obj = prob.objective(&x);
                stage_objectives.push(obj);
                let gap = prob.m_total * mu;
                if opts.trace {
                    trace.push(TraceRecord {
                        stage,
                        mu,
                        newton_iterations: iterations,
                        objective: obj,
                        decrement,
                        duality_gap: gap,
                        centered,
                    });
                }
                let scale = obj.abs().max(1.0);
                if gap <= 0.5 * opts.kkt_tol * scale && centered {
                    status = SolveStatus::Optimal;
                    break;
                }
                if stage >= opts.max_stages {
                    break;
                }
            }
        }
        mu *= opts.barrier_reduction;
    }

    let mut objective = prob.objective(&x);
    if objective < warm_obj - opts.feas_tol {
        // Within the barrier gap of the warm start; keep the better point.
        x = p.warm_start.clone();
        objective = warm_obj;
    }
    let scale = objective.abs().max(1.0);
    let stationarity =
        mu * (prob.m_total + prob.m_total.sqrt() * last_decrement.sqrt()) / scale;
    let fr = check_feasibility(p, &x);
    if status == SolveStatus::Optimal
        && (fr.max_violation > opts.feas_tol || stationarity > opts.kkt_tol)
    {
        status = SolveStatus::MaxIter;
    }
    SolveReport {
        status,
        point: x,
        objective,
        max_constraint_violation: fr.max_violation,
        stationarity_residual: stationarity,
        barrier_iterations: iters,
        stages: stage,
        stage_objectives,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sca::LogTerm;

    #[test]
    fn lp_corner() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.objective = LinExpr::var(x);
        p.add("ub", ConstraintAtom::le(LinExpr::var(x), 3.0));
        p.add("lb", ConstraintAtom::ge(LinExpr::var(x), 0.0));
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-6, "{}", r.objective);
    }

    #[test]
    fn log_constraint() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", 0.0, 1.0, 0.5);
        let t = p.add_var("tau", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        p.objective = LinExpr::var(t);
        p.add(
            "log",
            ConstraintAtom::LogAffine {
                logs: vec![LogTerm {
                    coef: 1.0,
                    arg: LinExpr::var(x).plus_const(1.0),
                }],
                linear: LinExpr::term(t, -1.0),
            },
        );
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn second_order_cone() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let y = p.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let t = p.add_var("tau", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        p.objective = LinExpr::var(t);
        p.add(
            "ball",
            ConstraintAtom::NormAffine {
                rows: vec![LinExpr::var(x), LinExpr::var(y)],
                bound: LinExpr::constant(1.0),
            },
        );
        p.add(
            "tau",
            ConstraintAtom::le(LinExpr::var(t).plus(x, -1.0).plus(y, -1.0), 0.0),
        );
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn equality_is_respected() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", 0.0, 10.0, 1.0);
        let y = p.add_var("y", 0.0, 10.0, 1.0);
        p.objective = LinExpr::var(x).plus(y, 2.0);
        p.add(
            "sum",
            ConstraintAtom::Affine {
                lhs: LinExpr::var(x).plus(y, 1.0),
                sense: Sense::Eq,
                rhs: 2.0,
            },
        );
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 4.0).abs() < 1e-5);
        assert!((r.point[0] + r.point[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_start_detected() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", 0.0, 1.0, 2.0);
        p.objective = LinExpr::var(x);
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::InfeasibleStart);
    }

    #[test]
    fn low_rank_path_matches_dense() {
        // Many independent slots joined by one budget row.
        let n = 60;
        let mut p = ConvexProgram::new();
        let mut budget = LinExpr::default();
        for i in 0..n {
            let x = p.add_var(format!("x{i}"), 0.0, 5.0, 0.1);
            let t = p.add_var(format!("t{i}"), f64::NEG_INFINITY, f64::INFINITY, -1.0);
            p.objective = p.objective.clone().plus(t, 1.0);
            p.add(
                format!("log{i}"),
                ConstraintAtom::LogAffine {
                    logs: vec![LogTerm {
                        coef: 1.0,
                        arg: LinExpr::term(x, 1.0 + i as f64 * 0.1).plus_const(1.0),
                    }],
                    linear: LinExpr::term(t, -1.0),
                },
            );
            budget = budget.plus(x, 1.0);
        }
        p.add("budget", ConstraintAtom::le(budget, 30.0));
        let r = solve(&p, &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        // Water-filling optimum: x_i = max(0, ν − 1/a_i) with Σ x_i = 30.
        let a: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let total = |nu: f64| a.iter().map(|ai| (nu - 1.0 / ai).clamp(0.0, 5.0)).sum::<f64>();
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > 30.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let opt: f64 = a
            .iter()
            .map(|ai| (1.0 + ai * (lo - 1.0 / ai).clamp(0.0, 5.0)).ln())
            .sum();
        assert!((r.objective - opt).abs() < 1e-4 * opt, "{} vs {opt}", r.objective);
    }

    #[test]
    fn compiled_and_dense_slacks_agree() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", 0.0, 10.0, 1.0);
        let y = p.add_var("y", 0.0, 10.0, 2.0);
        p.add(
            "q",
            ConstraintAtom::QuadOverAffine {
                rows: vec![LinExpr::var(x).plus_const(-0.5)],
                left: LinExpr::var(y),
                right: LinExpr::constant(2.0),
            },
        );
        p.add(
            "r",
            ConstraintAtom::LogRatio {
                u: 1,
                linear: LinExpr::term(x, 0.3),
            },
        );
        let pt = [1.3, 0.7];
        let c = compiled_slacks(&p, &pt);
        for (a, b) in c.iter().zip(p.constraints.iter().map(|k| k.atom.slack(&pt))) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let mut p = ConvexProgram::new();
        let x = p.add_var("x", 0.0, 1.0, 0.5);
        let t = p.add_var("tau", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        p.objective = LinExpr::var(t);
        p.add(
            "log",
            ConstraintAtom::LogAffine {
                logs: vec![LogTerm {
                    coef: 1.0,
                    arg: LinExpr::var(x).plus_const(1.0),
                }],
                linear: LinExpr::term(t, -1.0),
            },
        );
        let a = solve(&p, &SolverOptions::default());
        let b = solve(&p, &SolverOptions::default());
        assert_eq!(a, b);
    }
}
