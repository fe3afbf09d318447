use nalgebra::{DMatrix, DVector};

use super::simplex::{solve_lp_with, LinearProgram, Relation, Sense, SolveStatus};
use super::Tolerances;
use crate::error::{Error, Result};

/// `{x : A_eq x = b_eq, G x >= h}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
}

impl Polyhedron {
    pub fn new(dim: usize) -> Self {
        Polyhedron {
            dim,
            ..Default::default()
        }
    }

    pub fn equal(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.equalities.push((row, rhs));
        self
    }

    pub fn at_least(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.inequalities.push((row, rhs));
        self
    }

    /// Largest constraint violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .iter()
            .map(|(a, b)| (dot(a, x) - b).abs());
        let ineq = self.inequalities.iter().map(|(g, h)| h - dot(g, x));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// LP over the polyhedron with a linear objective; all variables free.
    pub fn linear_program(&self, sense: Sense, objective: Vec<f64>) -> LinearProgram {
        let mut lp = LinearProgram::new(sense, objective);
        for j in 0..self.dim {
            lp.set_free(j);
        }
        for (a, b) in &self.equalities {
            lp.add_constraint(a.clone(), Relation::Eq, *b);
        }
        for (g, h) in &self.inequalities {
            lp.add_constraint(g.clone(), Relation::Ge, *h);
        }
        lp
    }

    fn validate(&self) -> Result<()> {
        for (row, rhs) in self.equalities.iter().chain(&self.inequalities) {
            if row.len() != self.dim {
                return Err(Error::Input(format!(
                    "constraint has {} coefficients, expected {}",
                    row.len(),
                    self.dim
                )));
            }
            if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
                return Err(Error::Input("constraint entries must be finite".into()));
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean-norm minimizer over a polyhedron.
///
/// A phase-one LP supplies a feasible start; a primal active-set loop then
/// projects the origin onto the affine hull of the working set, steps towards
/// it until a constraint blocks, and releases constraints whose multipliers
/// turn negative.
pub fn min_norm_point(poly: &Polyhedron) -> Result<Vec<f64>> {
    min_norm_point_with(poly, &Tolerances::default())
}

pub(crate) fn min_norm_point_with(poly: &Polyhedron, tol: &Tolerances) -> Result<Vec<f64>> {
    poly.validate()?;
    let n = poly.dim;
    if n == 0 {
        return Ok(Vec::new());
    }
    let start = solve_lp_with(&poly.linear_program(Sense::Minimize, vec![0.0; n]), tol)?;
    if start.status != SolveStatus::Optimal {
        return Err(Error::EmptyRegion);
    }
    let mut x = start.x;

    // Working set entries: `Eq(i)` or `Ineq(i)`.
    let mut working: Vec<Member> = Vec::new();
    for (i, (a, _)) in poly.equalities.iter().enumerate() {
        if independent_of(poly, &working, a) {
            working.push(Member::Eq(i));
        }
    }
    for (i, (g, h)) in poly.inequalities.iter().enumerate() {
        let slack = dot(g, &x) - h;
        if slack.abs() <= tol.feasibility * (1.0 + h.abs()) && independent_of(poly, &working, g) {
            working.push(Member::Ineq(i));
        }
    }

    let max_iter = 1000 + 20 * (poly.equalities.len() + poly.inequalities.len() + n);
    for _ in 0..max_iter {
        let (target, multipliers) = project_onto_working(poly, &working, tol)?;
        let step: Vec<f64> = target.iter().zip(&x).map(|(t, v)| t - v).collect();
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let x_norm = x.iter().map(|s| s * s).sum::<f64>().sqrt();

        if step_norm <= 1e-12 * (1.0 + x_norm) {
            x = target;
            let drop = working
                .iter()
                .zip(&multipliers)
                .enumerate()
                .filter(|(_, (m, mu))| matches!(m, Member::Ineq(_)) && **mu < -1e-12)
                .min_by(|a, b| a.1 .1.total_cmp(b.1 .1))
                .map(|(k, _)| k);
            match drop {
                Some(k) => {
                    working.remove(k);
                }
                None => return Ok(x),
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (i, (g, h)) in poly.inequalities.iter().enumerate() {
            if working.contains(&Member::Ineq(i)) {
                continue;
            }
            let gd = dot(g, &step);
            if gd < -1e-14 {
                let a = ((h - dot(g, &x)) / gd).max(0.0);
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        for (xv, s) in x.iter_mut().zip(&step) {
            *xv += alpha * s;
        }
        if let Some(i) = blocking {
            working.push(Member::Ineq(i));
        }
    }
    Err(Error::Numeric(format!(
        "active-set projection did not converge within {max_iter} iterations"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Member {
    Eq(usize),
    Ineq(usize),
}

fn member_row(poly: &Polyhedron, m: Member) -> (&[f64], f64) {
    match m {
        Member::Eq(i) => (&poly.equalities[i].0, poly.equalities[i].1),
        Member::Ineq(i) => (&poly.inequalities[i].0, poly.inequalities[i].1),
    }
}

/// Whether `row` is outside the span of the working-set rows.
fn independent_of(poly: &Polyhedron, working: &[Member], row: &[f64]) -> bool {
    let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    if working.is_empty() {
        return true;
    }
    let n = poly.dim;
    let basis = DMatrix::from_fn(n, working.len(), |r, c| member_row(poly, working[c]).0[r]);
    let target = DVector::from_column_slice(row);
    let svd = basis.clone().svd(true, true);
    let Ok(coef) = svd.solve(&target, 1e-12) else {
        return true;
    };
    let residual = (&target - basis * coef).norm();
    residual > 1e-9 * norm
}

/// Minimum-norm point of `{y : A_W y = r_W}` and its multipliers.
fn project_onto_working(
    poly: &Polyhedron,
    working: &[Member],
    tol: &Tolerances,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = poly.dim;
    if working.is_empty() {
        return Ok((vec![0.0; n], Vec::new()));
    }
    let k = working.len();
    let a = DMatrix::from_fn(k, n, |r, c| member_row(poly, working[r]).0[c]);
    let r = DVector::from_fn(k, |i, _| member_row(poly, working[i]).1);
    let gram = &a * a.transpose();
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > tol.max_condition {
        return Err(Error::Numeric(format!(
            "active-set system is ill-conditioned (condition estimate {condition:e})"
        )));
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("active-set Gram matrix is not positive definite".into()))?;
    let mu = chol.solve(&r);
    let y = a.transpose() * &mu;
    Ok((y.iter().copied().collect(), mu.iter().copied().collect()))
}
