//! Worst-case expectation of a piecewise-affine value over a Wasserstein ball.
//!
//! For an empirical distribution with atoms `ξ_1..ξ_K`, radius `ε` and a box
//! support `Ξ`, the supremum of `E_Q[max_m (a_m·ξ + b_m)]` over the ball
//! equals the value of the finite program
//!
//! ```text
//! minimize   λ ε + (1/K) Σ_k ℓ_k
//! subject to b_m + σ_Ξ(v_km) - z_km · ξ_k <= ℓ_k      for all k, m
//!            ||z_km||_* <= λ                         for all k, m
//!            z_km = v_km - a_m
//! ```
//!
//! The last line is the conjugate of `-(a_m·ξ + b_m)` evaluated at
//! `z_km - v_km`: it is finite (equal to `b_m`) only at `-a_m`. Three engines
//! compute the value: this dual LP, a closed form for a single affine piece in
//! one dimension, and a primal transport LP over a grid used as an oracle.

use serde::Serialize;

use crate::distributions::{DiscreteDistribution, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::game::{AffinePiece, BoxSupport, PiecewiseAffineValue};
use crate::optim::{solve_lp, LinearProgram, Relation, Sense, SolveStatus};

pub use crate::norm::NormTag;

/// Tolerance used when validating dual certificates.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Number of facets in the polygonal outer approximation of the Euclidean
/// ball in two dimensions.
const EUCLIDEAN_FACETS: usize = 16;

/// `σ_Ξ(v) = sup_{ξ ∈ Ξ} v·ξ` for a box.
pub fn support_function_box(support: &BoxSupport, v: &[f64]) -> Result<f64> {
    if v.len() != support.dim() {
        return Err(Error::Input(format!(
            "vector has dimension {}, box has dimension {}",
            v.len(),
            support.dim()
        )));
    }
    Ok(box_support_unchecked(support, v))
}

fn box_support_unchecked(support: &BoxSupport, v: &[f64]) -> f64 {
    v.iter()
        .zip(support.lo().iter().zip(support.hi()))
        .map(|(vj, (lo, hi))| if *vj >= 0.0 { hi * vj } else { lo * vj })
        .sum()
}

/// Conjugate of `ξ ↦ -(a·ξ + b)` at `y`: `b` when `y = -a`, `+∞` otherwise.
pub fn conjugate_neg_affine(piece: &AffinePiece, y: &[f64]) -> f64 {
    let matches = y.len() == piece.a.len()
        && y.iter().zip(&piece.a).all(|(yj, aj)| (yj + aj).abs() <= 1e-12);
    if matches {
        piece.b
    } else {
        f64::INFINITY
    }
}

/// Dual variables certifying an upper bound on the worst-case expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub lambda: f64,
    pub ell: Vec<f64>,
    /// `v[k][m]`, a vector of length `p`.
    pub v: Vec<Vec<Vec<f64>>>,
    /// `z[k][m] = v[k][m] - a_m`.
    pub z: Vec<Vec<Vec<f64>>>,
}

impl DualCertificate {
    pub fn objective(&self, radius: f64) -> f64 {
        self.lambda * radius + self.ell.iter().sum::<f64>() / self.ell.len() as f64
    }

    /// Largest violation of the certificate constraints; feasible when it is
    /// at most [`CERTIFICATE_TOL`].
    pub fn max_violation(
        &self,
        u: &PiecewiseAffineValue,
        emp: &EmpiricalDistribution,
        support: &BoxSupport,
        norm: NormTag,
    ) -> f64 {
        let mut worst = (-self.lambda).max(0.0);
        for (k, xi) in emp.samples().enumerate() {
            for (m, piece) in u.pieces().iter().enumerate() {
                let (v, z) = (&self.v[k][m], &self.z[k][m]);
                let link = v
                    .iter()
                    .zip(&piece.a)
                    .zip(z)
                    .map(|((vj, aj), zj)| (vj - aj - zj).abs())
                    .fold(0.0, f64::max);
                let lhs = piece.b + box_support_unchecked(support, v) - dot(z, xi);
                worst = worst
                    .max(link)
                    .max(lhs - self.ell[k])
                    .max(norm.dual_eval(z) - self.lambda);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    DualLp,
    ClosedForm,
    Oracle,
}

/// `W = sup_{Q ∈ ball} E_Q[u]`, with a dual certificate when the engine
/// produces one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseResult {
    pub value: f64,
    pub certificate: Option<DualCertificate>,
    pub engine: EngineTag,
}

/// Which computation backs a worst-case evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    DualLp,
    /// Closed form where it applies, dual LP otherwise.
    #[default]
    ClosedForm,
    Oracle {
        grid_points: usize,
    },
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dual" | "dual_lp" => Ok(Engine::DualLp),
            "closed" | "closed_form" => Ok(Engine::ClosedForm),
            "oracle" => Ok(Engine::Oracle { grid_points: 2001 }),
            other => Err(format!("unknown engine `{other}` (expected dual, closed or oracle)")),
        }
    }
}

/// Dispatches to the engine selected by `engine`.
pub fn worst_case(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
    norm: NormTag,
    engine: Engine,
) -> Result<WorstCaseResult> {
    match engine {
        Engine::DualLp => worst_case_dual_lp(u, emp, radius, support, norm),
        Engine::ClosedForm => worst_case_closed_form_affine(u, emp, radius, support, norm),
        Engine::Oracle { grid_points } => Ok(WorstCaseResult {
            value: worst_case_oracle(u, emp, radius, support, norm, grid_points)?,
            certificate: None,
            engine: EngineTag::Oracle,
        }),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_inputs(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
) -> Result<()> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!("radius must be nonnegative, got {radius}")));
    }
    if u.dim() != support.dim() || emp.dim() != support.dim() {
        return Err(Error::Input(
            "value function, samples and support must share a dimension".into(),
        ));
    }
    emp.check_support(support)
}

/// Column layout of the dual LP.
struct DualLayout {
    k: usize,
    m: usize,
    p: usize,
}

impl DualLayout {
    const LAMBDA: usize = 0;

    fn ell(&self, k: usize) -> usize {
        1 + k
    }

    fn v_pos(&self, k: usize, m: usize, j: usize) -> usize {
        1 + self.k + (k * self.m + m) * self.p + j
    }

    fn v_neg(&self, k: usize, m: usize, j: usize) -> usize {
        self.v_pos(k, m, j) + self.k * self.m * self.p
    }

    /// Auxiliary bound `t >= |v - a|` used by the 1-norm dual.
    fn t(&self, k: usize, m: usize, j: usize) -> usize {
        self.v_pos(k, m, j) + 2 * self.k * self.m * self.p
    }

    fn n_vars(&self, norm: NormTag) -> usize {
        let per = self.k * self.m * self.p;
        1 + self.k + 2 * per + if norm == NormTag::MaxNorm { per } else { 0 }
    }
}

/// Builds the dual LP for the worst-case expectation. The support function is
/// linearized by splitting `v = v⁺ - v⁻`; the dual-norm bound is exact for the
/// 1-norm and max-norm, and a 16-facet outer polygon for the Euclidean norm in
/// two dimensions.
pub fn dual_lp_program(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
    norm: NormTag,
) -> Result<LinearProgram> {
    check_inputs(u, emp, radius, support)?;
    let layout = DualLayout {
        k: emp.len(),
        m: u.pieces().len(),
        p: support.dim(),
    };
    // Euclidean and 1-norm coincide with |.| in one dimension.
    let norm = if layout.p == 1 { NormTag::OneNorm } else { norm };
    if norm == NormTag::Euclidean && layout.p > 2 {
        return Err(Error::UnsupportedDimension(format!(
            "Euclidean ground norm is supported up to p = 2, got p = {}",
            layout.p
        )));
    }
    let n = layout.n_vars(norm);
    let mut objective = vec![0.0; n];
    objective[DualLayout::LAMBDA] = radius;
    for k in 0..layout.k {
        objective[layout.ell(k)] = 1.0 / layout.k as f64;
    }
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for k in 0..layout.k {
        lp.set_free(layout.ell(k));
    }

    let (lo, hi) = (support.lo(), support.hi());
    for (k, xi) in emp.samples().enumerate() {
        for (m, piece) in u.pieces().iter().enumerate() {
            let mut terms = vec![(layout.ell(k), -1.0)];
            for j in 0..layout.p {
                terms.push((layout.v_pos(k, m, j), hi[j] - xi[j]));
                terms.push((layout.v_neg(k, m, j), xi[j] - lo[j]));
            }
            lp.add_sparse_constraint(&terms, Relation::Le, -piece.b - dot(&piece.a, xi));

            let a = &piece.a;
            match norm {
                NormTag::OneNorm => {
                    for j in 0..layout.p {
                        let (vp, vn) = (layout.v_pos(k, m, j), layout.v_neg(k, m, j));
                        lp.add_sparse_constraint(
                            &[(vp, 1.0), (vn, -1.0), (DualLayout::LAMBDA, -1.0)],
                            Relation::Le,
                            a[j],
                        );
                        lp.add_sparse_constraint(
                            &[(vp, -1.0), (vn, 1.0), (DualLayout::LAMBDA, -1.0)],
                            Relation::Le,
                            -a[j],
                        );
                    }
                }
                NormTag::MaxNorm => {
                    let mut sum = vec![(DualLayout::LAMBDA, -1.0)];
                    for j in 0..layout.p {
                        let (vp, vn, t) =
                            (layout.v_pos(k, m, j), layout.v_neg(k, m, j), layout.t(k, m, j));
                        lp.add_sparse_constraint(&[(vp, 1.0), (vn, -1.0), (t, -1.0)], Relation::Le, a[j]);
                        lp.add_sparse_constraint(&[(vp, -1.0), (vn, 1.0), (t, -1.0)], Relation::Le, -a[j]);
                        sum.push((t, 1.0));
                    }
                    lp.add_sparse_constraint(&sum, Relation::Le, 0.0);
                }
                NormTag::Euclidean => {
                    for f in 0..EUCLIDEAN_FACETS {
                        let theta = 2.0 * std::f64::consts::PI * f as f64 / EUCLIDEAN_FACETS as f64;
                        let dir = [theta.cos(), theta.sin()];
                        let mut terms = vec![(DualLayout::LAMBDA, -1.0)];
                        for (j, d) in dir.iter().enumerate() {
                            terms.push((layout.v_pos(k, m, j), *d));
                            terms.push((layout.v_neg(k, m, j), -*d));
                        }
                        lp.add_sparse_constraint(&terms, Relation::Le, dot(&dir, a));
                    }
                }
            }
        }
    }
    Ok(lp)
}

/// Worst-case expectation through the dual LP.
///
/// The returned value is the objective of the extracted certificate, which is
/// dual feasible by construction. With the polygonal Euclidean approximation
/// the multiplier `λ` is raised to the exact dual norm, so the value is a
/// valid upper bound.
pub fn worst_case_dual_lp(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
    norm: NormTag,
) -> Result<WorstCaseResult> {
    let lp = dual_lp_program(u, emp, radius, support, norm)?;
    let report = solve_lp(&lp)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::Internal(format!(
            "worst-case dual program reported {:?}",
            report.status
        )));
    }
    let layout = DualLayout {
        k: emp.len(),
        m: u.pieces().len(),
        p: support.dim(),
    };
    let x = &report.x;
    let mut lambda = x[DualLayout::LAMBDA].max(0.0);
    let mut v = Vec::with_capacity(layout.k);
    let mut z = Vec::with_capacity(layout.k);
    let mut ell = Vec::with_capacity(layout.k);
    for (k, xi) in emp.samples().enumerate() {
        let mut vk = Vec::with_capacity(layout.m);
        let mut zk = Vec::with_capacity(layout.m);
        let mut ell_k = f64::NEG_INFINITY;
        for (m, piece) in u.pieces().iter().enumerate() {
            let vkm: Vec<f64> = (0..layout.p)
                .map(|j| x[layout.v_pos(k, m, j)] - x[layout.v_neg(k, m, j)])
                .collect();
            let zkm: Vec<f64> = vkm.iter().zip(&piece.a).map(|(vj, aj)| vj - aj).collect();
            lambda = lambda.max(norm.dual_eval(&zkm));
            ell_k = ell_k.max(piece.b + box_support_unchecked(support, &vkm) - dot(&zkm, xi));
            vk.push(vkm);
            zk.push(zkm);
        }
        v.push(vk);
        z.push(zk);
        ell.push(ell_k);
    }
    let mut certificate = DualCertificate { lambda, ell, v, z };
    let lipschitz = lipschitz_certificate(u, emp, norm);
    if lipschitz.objective(radius) < certificate.objective(radius) {
        certificate = lipschitz;
    }
    Ok(WorstCaseResult {
        value: certificate.objective(radius),
        certificate: Some(certificate),
        engine: EngineTag::DualLp,
    })
}

/// `v = 0`, `λ = L`, `ℓ_k = u(ξ_k)`: feasible for every instance, with
/// objective `mean + L ε`. It only wins after the Euclidean repair.
fn lipschitz_certificate(u: &PiecewiseAffineValue, emp: &EmpiricalDistribution, norm: NormTag) -> DualCertificate {
    let zero = vec![0.0; u.dim()];
    let neg: Vec<Vec<f64>> = u.pieces().iter().map(|p| p.a.iter().map(|a| -a).collect()).collect();
    DualCertificate {
        lambda: u.lipschitz_constant(norm),
        ell: emp.samples().map(|xi| u.eval_unchecked(xi)).collect(),
        v: vec![vec![zero; u.pieces().len()]; emp.len()],
        z: vec![neg; emp.len()],
    }
}

/// Closed form for a single affine piece `a ξ + b` on an interval.
///
/// Moving mass costs `|Δξ|` and gains `|a| |Δξ|` until an atom reaches the
/// favourable end of the interval, so the supremum is the empirical mean plus
/// `|a| · min(ε, mean headroom)`. Inputs outside this case fall back to the
/// dual LP.
pub fn worst_case_closed_form_affine(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
    norm: NormTag,
) -> Result<WorstCaseResult> {
    let [piece] = u.pieces() else {
        return worst_case_dual_lp(u, emp, radius, support, norm);
    };
    if support.dim() != 1 {
        return worst_case_dual_lp(u, emp, radius, support, norm);
    }
    check_inputs(u, emp, radius, support)?;
    let (a, b) = (piece.a[0], piece.b);
    let (lo, hi) = (support.lo()[0], support.hi()[0]);
    let k = emp.len() as f64;
    let mean_xi = emp.raw().iter().sum::<f64>() / k;
    let headroom = if a > 0.0 { hi - mean_xi } else { mean_xi - lo }.max(0.0);
    let mean_u = b + a * mean_xi;

    // Certificate: price transport at |a| until the budget exceeds the
    // headroom, after which every atom sits at the favourable end.
    let saturated = radius >= headroom;
    let (lambda, v_scalar) = if a == 0.0 || saturated { (0.0, a) } else { (a.abs(), 0.0) };
    let ell: Vec<f64> = emp
        .raw()
        .iter()
        .map(|xi| b + box_support_unchecked(support, &[v_scalar]) - (v_scalar - a) * xi)
        .collect();
    let n = emp.len();
    let certificate = DualCertificate {
        lambda,
        ell,
        v: vec![vec![vec![v_scalar]]; n],
        z: vec![vec![vec![v_scalar - a]]; n],
    };
    let value = mean_u + a.abs() * radius.min(headroom);
    Ok(WorstCaseResult {
        value,
        certificate: Some(certificate),
        engine: EngineTag::ClosedForm,
    })
}

/// Grid points of the box plus the atoms themselves.
fn oracle_points(emp: &EmpiricalDistribution, support: &BoxSupport, grid_points: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..support.dim())
        .map(|j| {
            let (lo, hi) = (support.lo()[j], support.hi()[j]);
            (0..grid_points)
                .map(|g| lo + (hi - lo) * g as f64 / (grid_points - 1) as f64)
                .collect()
        })
        .collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(*x);
                    p
                })
            })
            .collect();
    }
    points.extend(emp.samples().map(|s| s.to_vec()));
    points
}

/// Primal transport LP restricted to a uniform grid (plus the atoms): a lower
/// bound on the worst-case expectation that tightens as the grid refines.
pub fn worst_case_oracle(
    u: &PiecewiseAffineValue,
    emp: &EmpiricalDistribution,
    radius: f64,
    support: &BoxSupport,
    norm: NormTag,
    grid_points: usize,
) -> Result<f64> {
    check_inputs(u, emp, radius, support)?;
    if grid_points < 2 {
        return Err(Error::Input("oracle grid needs at least 2 points per axis".into()));
    }
    if support.dim() > 2 {
        return Err(Error::UnsupportedDimension(
            "the grid oracle handles p <= 2 only".into(),
        ));
    }
    let points = oracle_points(emp, support, grid_points);
    let (k, g) = (emp.len(), points.len());
    let values: Vec<f64> = points.iter().map(|pt| u.eval_unchecked(pt)).collect();
    let objective: Vec<f64> = (0..k).flat_map(|_| values.iter().copied()).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    let mut budget = vec![0.0; k * g];
    for (i, xi) in emp.samples().enumerate() {
        let mut row = vec![0.0; k * g];
        for (j, pt) in points.iter().enumerate() {
            row[i * g + j] = 1.0;
            budget[i * g + j] = norm.distance(xi, pt);
        }
        lp.add_constraint(row, Relation::Eq, 1.0 / k as f64);
    }
    lp.add_constraint(budget, Relation::Le, radius);
    let report = solve_lp(&lp)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::Numeric(format!("transport oracle LP reported {:?}", report.status)));
    }
    Ok(report.objective)
}

/// Order-1 Wasserstein distance in any dimension, by the transport LP.
pub fn transport_distance(
    d1: &DiscreteDistribution,
    d2: &DiscreteDistribution,
    norm: NormTag,
) -> Result<f64> {
    if d1.dim() != d2.dim() {
        return Err(Error::Input("distributions differ in dimension".into()));
    }
    let (a, b) = (d1.atoms(), d2.atoms());
    let (n1, n2) = (a.len(), b.len());
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|(x, _)| b.iter().map(move |(y, _)| norm.distance(x, y)))
        .collect();
    let mut lp = LinearProgram::new(Sense::Minimize, cost);
    for (i, (_, w)) in a.iter().enumerate() {
        lp.add_sparse_constraint(&(0..n2).map(|j| (i * n2 + j, 1.0)).collect::<Vec<_>>(), Relation::Eq, *w);
    }
    for (j, (_, w)) in b.iter().enumerate() {
        lp.add_sparse_constraint(&(0..n1).map(|i| (i * n2 + j, 1.0)).collect::<Vec<_>>(), Relation::Eq, *w);
    }
    let report = solve_lp(&lp)?;
    if report.status != SolveStatus::Optimal {
        return Err(Error::Numeric(format!("transport LP reported {:?}", report.status)));
    }
    Ok(report.objective.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BoxSupport {
        BoxSupport::interval(0.0, 1.0).unwrap()
    }

    fn line(a: f64, b: f64) -> PiecewiseAffineValue {
        PiecewiseAffineValue::affine(vec![a], b).unwrap()
    }

    fn atoms(xs: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::from_scalars(xs.to_vec()).unwrap()
    }

    #[test]
    fn support_function_examples() {
        let square = BoxSupport::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(support_function_box(&square, &[1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(support_function_box(&square, &[0.0, 0.0]).unwrap(), 0.0);
        let sym = BoxSupport::interval(-1.0, 1.0).unwrap();
        assert_eq!(support_function_box(&sym, &[-3.0]).unwrap(), 3.0);
        assert!(support_function_box(&sym, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn conjugate_examples() {
        let p = AffinePiece::new(vec![1.0], 2.0);
        assert_eq!(conjugate_neg_affine(&p, &[-1.0]), 2.0);
        assert_eq!(conjugate_neg_affine(&p, &[0.0]), f64::INFINITY);
        let q = AffinePiece::new(vec![1.0, -1.0], 0.0);
        assert_eq!(conjugate_neg_affine(&q, &[-1.0, 1.0]), 0.0);
    }

    #[test]
    fn single_atom_examples_all_engines() {
        let u = line(1.0, 2.0);
        let e = atoms(&[0.5]);
        for (eps, expected) in [(0.2, 2.7), (0.7, 3.0)] {
            let dual = worst_case_dual_lp(&u, &e, eps, &unit(), NormTag::OneNorm).unwrap();
            let closed = worst_case_closed_form_affine(&u, &e, eps, &unit(), NormTag::OneNorm).unwrap();
            let oracle = worst_case_oracle(&u, &e, eps, &unit(), NormTag::OneNorm, 1001).unwrap();
            assert!((dual.value - expected).abs() < 1e-9, "dual {}", dual.value);
            assert!((closed.value - expected).abs() < 1e-12);
            assert!((oracle - expected).abs() < 1e-3);
            assert_eq!(closed.engine, EngineTag::ClosedForm);
        }
    }

    #[test]
    fn zero_radius_gives_empirical_mean() {
        let u = PiecewiseAffineValue::new(vec![
            AffinePiece::new(vec![2.0], 0.0),
            AffinePiece::new(vec![-1.0], 0.5),
        ])
        .unwrap();
        let e = atoms(&[0.1, 0.4, 0.9]);
        let mean = e.mean_of(&u).unwrap();
        for eps in [0.0, 1e-12] {
            let w = worst_case_dual_lp(&u, &e, eps, &unit(), NormTag::OneNorm).unwrap();
            assert!((w.value - mean).abs() < 1e-9);
        }
        let o = worst_case_oracle(&u, &e, 0.0, &unit(), NormTag::OneNorm, 11).unwrap();
        assert!((o - mean).abs() < 1e-12);
    }

    #[test]
    fn closed_form_edge_cases() {
        let e = atoms(&[1.0, 1.0]);
        let w = worst_case_closed_form_affine(&line(3.0, 1.0), &e, 0.5, &unit(), NormTag::OneNorm).unwrap();
        assert_eq!(w.value, 4.0);
        let c = worst_case_closed_form_affine(&line(0.0, 1.5), &atoms(&[0.2]), 10.0, &unit(), NormTag::OneNorm)
            .unwrap();
        assert_eq!(c.value, 1.5);
        // Negative slopes push mass towards the lower end.
        let n = worst_case_closed_form_affine(&line(-2.0, 0.0), &atoms(&[0.5]), 0.1, &unit(), NormTag::OneNorm)
            .unwrap();
        assert!((n.value - (-1.0 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_falls_back_for_several_pieces() {
        let u = PiecewiseAffineValue::new(vec![
            AffinePiece::new(vec![1.0], 0.0),
            AffinePiece::new(vec![-1.0], 0.0),
        ])
        .unwrap();
        let w = worst_case_closed_form_affine(&u, &atoms(&[0.5]), 0.1, &unit(), NormTag::OneNorm).unwrap();
        assert_eq!(w.engine, EngineTag::DualLp);
    }

    #[test]
    fn certificates_are_valid() {
        let u = PiecewiseAffineValue::new(vec![
            AffinePiece::new(vec![1.0, 0.5], 0.0),
            AffinePiece::new(vec![-0.5, 2.0], 0.3),
        ])
        .unwrap();
        let support = BoxSupport::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let e = EmpiricalDistribution::new(2, vec![0.2, 0.1, 0.9, -0.5, 0.5, 0.5]).unwrap();
        for norm in [NormTag::OneNorm, NormTag::MaxNorm, NormTag::Euclidean] {
            let w = worst_case_dual_lp(&u, &e, 0.3, &support, norm).unwrap();
            let cert = w.certificate.as_ref().unwrap();
            assert!(cert.max_violation(&u, &e, &support, norm) <= CERTIFICATE_TOL);
            assert!((cert.objective(0.3) - w.value).abs() <= 1e-12);
            let oracle = worst_case_oracle(&u, &e, 0.3, &support, norm, 41).unwrap();
            assert!(oracle <= w.value + 1e-6, "{norm:?}: oracle {oracle} > dual {}", w.value);
            assert!(w.value >= e.mean_of(&u).unwrap() - 1e-12);
        }
    }

    #[test]
    fn euclidean_rejected_above_two_dimensions() {
        let u = PiecewiseAffineValue::affine(vec![1.0; 3], 0.0).unwrap();
        let support = BoxSupport::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let e = EmpiricalDistribution::new(3, vec![0.5; 3]).unwrap();
        assert!(matches!(
            worst_case_dual_lp(&u, &e, 0.1, &support, NormTag::Euclidean),
            Err(Error::UnsupportedDimension(_))
        ));
        assert!(worst_case_dual_lp(&u, &e, 0.1, &support, NormTag::OneNorm).is_ok());
    }

    #[test]
    fn atoms_outside_support_are_rejected() {
        assert!(worst_case_dual_lp(&line(1.0, 0.0), &atoms(&[1.5]), 0.1, &unit(), NormTag::OneNorm).is_err());
    }

    #[test]
    fn transport_distance_matches_quantile_formula() {
        let a = DiscreteDistribution::uniform_scalars(&[0.0, 1.0]).unwrap();
        let b = DiscreteDistribution::uniform_scalars(&[0.5, 0.5]).unwrap();
        assert!((transport_distance(&a, &b, NormTag::OneNorm).unwrap() - 0.5).abs() < 1e-12);
        let p = DiscreteDistribution::new(vec![(vec![0.0, 0.0], 1.0)]).unwrap();
        let q = DiscreteDistribution::new(vec![(vec![3.0, 4.0], 1.0)]).unwrap();
        assert!((transport_distance(&p, &q, NormTag::Euclidean).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn worst_case_grows_with_radius() {
        let u = PiecewiseAffineValue::new(vec![
            AffinePiece::new(vec![1.5], 0.0),
            AffinePiece::new(vec![-2.0], 1.0),
        ])
        .unwrap();
        let e = atoms(&[0.2, 0.35, 0.8]);
        let mut last = f64::NEG_INFINITY;
        for i in 0..=20 {
            let w = worst_case_dual_lp(&u, &e, i as f64 * 0.05, &unit(), NormTag::OneNorm).unwrap();
            assert!(w.value >= last - 1e-9);
            last = w.value;
        }
    }

    /// Random one-dimensional instance: 1-3 pieces, up to `max_k` atoms.
    fn random_instance(seed: u64, max_k: usize) -> (PiecewiseAffineValue, EmpiricalDistribution, BoxSupport, f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let lo = rng.random_range(-1.0..0.5);
        let hi = lo + rng.random_range(0.2..1.5);
        let pieces = (0..rng.random_range(1..=3))
            .map(|_| AffinePiece::new(vec![rng.random_range(-2.0..2.0)], rng.random_range(-1.0..1.0)))
            .collect();
        let k = rng.random_range(1..=max_k);
        let atoms = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
        (
            PiecewiseAffineValue::new(pieces).unwrap(),
            EmpiricalDistribution::from_scalars(atoms).unwrap(),
            BoxSupport::interval(lo, hi).unwrap(),
            rng.random_range(0.0..1.0),
        )
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn engines_agree(seed in proptest::prelude::any::<u64>()) {
            let (u, e, b, eps) = random_instance(seed, 6);
            let dual = worst_case_dual_lp(&u, &e, eps, &b, NormTag::OneNorm).unwrap();
            let oracle = worst_case_oracle(&u, &e, eps, &b, NormTag::OneNorm, 2001).unwrap();
            proptest::prop_assert!((dual.value - oracle).abs() <= 5e-3);
            proptest::prop_assert!(oracle <= dual.value + 1e-6);
            if u.pieces().len() == 1 {
                let closed = worst_case_closed_form_affine(&u, &e, eps, &b, NormTag::OneNorm).unwrap();
                proptest::prop_assert!((closed.value - dual.value).abs() <= 1e-8);
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]

        #[test]
        fn lipschitz_sandwich_and_certificates(seed in proptest::prelude::any::<u64>()) {
            let (u, e, b, eps) = random_instance(seed, 20);
            let mean = e.mean_of(&u).unwrap();
            for norm in [NormTag::OneNorm, NormTag::MaxNorm, NormTag::Euclidean] {
                let w = worst_case_dual_lp(&u, &e, eps, &b, norm).unwrap();
                let cert = w.certificate.as_ref().unwrap();
                proptest::prop_assert!(mean <= w.value + 1e-8);
                proptest::prop_assert!(w.value <= mean + u.lipschitz_constant(norm) * eps + 1e-8);
                proptest::prop_assert!(cert.max_violation(&u, &e, &b, norm) <= CERTIFICATE_TOL);
                proptest::prop_assert!((cert.objective(eps) - w.value).abs() <= 1e-8);
            }
        }

        #[test]
        fn monotone_in_radius(seed in proptest::prelude::any::<u64>()) {
            let (u, e, b, _) = random_instance(seed, 10);
            let mut last = f64::NEG_INFINITY;
            for i in 0..=10 {
                let w = worst_case_dual_lp(&u, &e, 0.1 * i as f64, &b, NormTag::OneNorm).unwrap();
                proptest::prop_assert!(w.value >= last - 1e-9);
                last = w.value;
            }
        }
    }
}
