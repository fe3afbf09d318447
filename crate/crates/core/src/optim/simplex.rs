use std::io::Write;

use super::Tolerances;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// A dense linear program. Variables default to the bounds `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    relations: Vec<Relation>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(coeffs);
        self.relations.push(relation);
        self.rhs.push(rhs);
    }

    /// Adds a row given as `(variable, coefficient)` pairs.
    pub fn add_sparse_constraint(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut row = vec![0.0; self.n_vars()];
        for &(j, a) in terms {
            row[j] += a;
        }
        self.add_constraint(row, relation, rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    /// Marks a variable as unbounded in both directions.
    pub fn set_free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn row(&self, i: usize) -> (&[f64], Relation, f64) {
        (&self.rows[i], self.relations[i], self.rhs[i])
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    /// Largest violation of any row or bound at `x`, each row scaled by
    /// `1 + ||row||_inf`.
    pub fn max_scaled_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let scale = 1.0 + row.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let viol = match self.relations[i] {
                Relation::Le => lhs - self.rhs[i],
                Relation::Ge => self.rhs[i] - lhs,
                Relation::Eq => (lhs - self.rhs[i]).abs(),
            };
            worst = worst.max(viol / scale);
        }
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Writes the program as whitespace-separated text: a header line, the
    /// objective row, one line per constraint (`coefficients relation rhs`)
    /// and one bounds line per variable.
    pub fn write_tabular(&self, w: &mut impl Write) -> std::io::Result<()> {
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        writeln!(w, "# {sense} vars={} rows={}", self.n_vars(), self.n_rows())?;
        write!(w, "obj")?;
        for c in &self.objective {
            write!(w, " {c:e}")?;
        }
        writeln!(w)?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(w, "row{i}")?;
            for a in row {
                write!(w, " {a:e}")?;
            }
            writeln!(w, " {} {:e}", self.relations[i].symbol(), self.rhs[i])?;
        }
        for j in 0..self.n_vars() {
            writeln!(w, "bound{j} {:e} {:e}", self.lower[j], self.upper[j])?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("objective entries must be finite".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) || !self.rhs[i].is_finite() {
                return Err(Error::Input(format!("row {i} has non-finite entries")));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(Error::Input(format!("variable {j} has invalid bounds")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of [`solve_lp`]. `objective` and `x` are meaningful only when the
/// status is [`SolveStatus::Optimal`]; otherwise they are `NaN` and empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl SolveReport {
    fn without_solution(status: SolveStatus, iterations: usize) -> Self {
        SolveReport {
            status,
            objective: f64::NAN,
            x: Vec::new(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// How an original variable is recovered from the nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lo: f64 },
    Reflected { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

/// Two-phase dense tableau simplex.
///
/// Pivoting uses Dantzig's rule with lowest-index tie-breaking and falls back
/// to Bland's rule after `10 (m + n)` iterations, which guarantees
/// termination.
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveReport> {
    solve_lp_with(lp, &Tolerances::default())
}

pub(crate) fn solve_lp_with(lp: &LinearProgram, tol: &Tolerances) -> Result<SolveReport> {
    lp.validate()?;
    let n = lp.n_vars();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Ok(SolveReport::without_solution(SolveStatus::Infeasible, 0));
        }
    }

    // Substitute bounded variables by nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut n_cols = 0;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shifted { col: n_cols, lo });
            if hi.is_finite() {
                extra_rows.push((n_cols, hi - lo));
            }
            n_cols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Reflected { col: n_cols, hi });
            n_cols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: n_cols,
                neg: n_cols + 1,
            });
            n_cols += 2;
        }
    }

    let mut std_rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(lp.n_rows() + extra_rows.len());
    for i in 0..lp.n_rows() {
        let mut coeffs = vec![0.0; n_cols];
        let mut rhs = lp.rhs[i];
        for (j, &a) in lp.rows[i].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lo } => {
                    coeffs[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Reflected { col, hi } => {
                    coeffs[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        std_rows.push((coeffs, lp.relations[i], rhs));
    }
    for (col, width) in extra_rows {
        let mut coeffs = vec![0.0; n_cols];
        coeffs[col] = 1.0;
        std_rows.push((coeffs, Relation::Le, width));
    }

    // Internal form is always a minimization.
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; n_cols];
    for (j, &c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted { col, .. } => cost[col] += sign * c,
            VarMap::Reflected { col, .. } => cost[col] -= sign * c,
            VarMap::Split { pos, neg } => {
                cost[pos] += sign * c;
                cost[neg] -= sign * c;
            }
        }
    }

    let mut tableau = Tableau::build(std_rows, n_cols, *tol);
    let Some(y) = tableau.solve(&cost)? else {
        return Ok(SolveReport::without_solution(
            tableau.status,
            tableau.iterations,
        ));
    };

    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shifted { col, lo } => lo + y[col],
            VarMap::Reflected { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(SolveReport {
        status: SolveStatus::Optimal,
        objective,
        x,
        iterations: tableau.iterations,
    })
}

struct Tableau {
    /// `(m + 1) x width`, row-major; the last row holds reduced costs and the
    /// last column the right-hand side.
    data: Vec<f64>,
    width: usize,
    m: usize,
    n_struct: usize,
    /// First artificial column; columns at or beyond it are artificial.
    art_start: usize,
    basis: Vec<usize>,
    tol: Tolerances,
    iterations: usize,
    status: SolveStatus,
}

impl Tableau {
    fn build(rows: Vec<(Vec<f64>, Relation, f64)>, n_struct: usize, tol: Tolerances) -> Self {
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows
            .iter()
            .filter(|(_, rel, rhs)| match rel {
                Relation::Le => *rhs < 0.0,
                Relation::Ge => *rhs >= 0.0,
                Relation::Eq => true,
            })
            .count();
        let art_start = n_struct + n_slack;
        let width = art_start + n_art + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n_struct, art_start);
        for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            let flip = rhs < 0.0;
            let s = if flip { -1.0 } else { 1.0 };
            let row = &mut data[i * width..(i + 1) * width];
            for (j, a) in coeffs.iter().enumerate() {
                row[j] = s * a;
            }
            row[width - 1] = s * rhs;
            // Orientation of the row after making its rhs nonnegative.
            let rel = match (rel, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Tableau {
            data,
            width,
            m,
            n_struct,
            art_start,
            basis,
            tol,
            iterations: 0,
            status: SolveStatus::Optimal,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Returns the structural solution, or `None` with `status` set.
    fn solve(&mut self, cost: &[f64]) -> Result<Option<Vec<f64>>> {
        let n_cols = self.width - 1;
        if self.art_start < n_cols {
            let mut phase1 = vec![0.0; n_cols];
            for c in phase1.iter_mut().skip(self.art_start) {
                *c = 1.0;
            }
            self.load_costs(&phase1);
            if !self.iterate(n_cols)? {
                return Err(Error::Internal("phase-one problem reported unbounded".into()));
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.art_start)
                .map(|i| self.rhs(i))
                .sum();
            let scale = 1.0 + (0..self.m).fold(0.0f64, |a, i| a.max(self.rhs(i).abs()));
            if infeas > self.tol.feasibility * scale {
                self.status = SolveStatus::Infeasible;
                return Ok(None);
            }
            self.drive_out_artificials();
        }

        let mut full_cost = vec![0.0; n_cols];
        full_cost[..cost.len()].copy_from_slice(cost);
        self.load_costs(&full_cost);
        if !self.iterate(self.art_start)? {
            self.status = SolveStatus::Unbounded;
            return Ok(None);
        }
        let mut y = vec![0.0; self.n_struct];
        for i in 0..self.m {
            if self.basis[i] < self.n_struct {
                y[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        Ok(Some(y))
    }

    fn load_costs(&mut self, cost: &[f64]) {
        let w = self.width;
        let obj = self.m * w;
        for j in 0..w {
            self.data[obj + j] = if j < cost.len() { cost[j] } else { 0.0 };
        }
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.data[obj + j] -= cb * self.data[i * w + j];
                }
            }
        }
    }

    /// Runs simplex iterations over columns `< allowed`. Returns `false` if the
    /// problem is unbounded.
    fn iterate(&mut self, allowed: usize) -> Result<bool> {
        let obj = self.m * self.width;
        let size = self.m + allowed;
        let bland_after = 10 * size;
        let hard_cap = bland_after + 50 * size + 1000;
        let mut local = 0usize;
        loop {
            let bland = local >= bland_after;
            let mut entering = None;
            let mut best = -self.tol.optimality;
            for j in 0..allowed {
                let d = self.data[obj + j];
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > self.tol.pivot {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            if ratio < best_ratio - 1e-12 * (1.0 + best_ratio)
                                || (ratio <= best_ratio + 1e-12 * (1.0 + best_ratio)
                                    && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio.min(best_ratio)))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
            local += 1;
            self.iterations += 1;
            if local > hard_cap {
                return Err(Error::Numeric(format!(
                    "simplex cycling safeguard exhausted after {local} iterations"
                )));
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.data[row * w + col];
        {
            let r = &mut self.data[row * w..(row + 1) * w];
            for v in r.iter_mut() {
                *v /= p;
            }
            r[col] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[row * w..(row + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.data[i * w + col];
            if f == 0.0 {
                continue;
            }
            let r = &mut self.data[i * w..(i + 1) * w];
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.art_start {
                let a = self.at(i, j).abs();
                if a > self.tol.pivot && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            // A row with no usable pivot is redundant; its artificial stays
            // basic at zero and never re-enters.
            if let Some((j, _)) = best {
                self.pivot(i, j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_maximum() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_constraint(vec![1.0], Relation::Le, 3.0);
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0]);
        lp.add_constraint(vec![1.0], Relation::Le, -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_free_variable() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.set_free(0);
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn mixed_bounds_and_relations() {
        // min x - y  s.t. x + y = 2, x in [-1, 3], y <= 5 (y free below)
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 2.0);
        lp.set_bounds(0, -1.0, 3.0);
        lp.set_bounds(1, f64::NEG_INFINITY, 5.0);
        let r = solve_lp(&lp).unwrap();
        assert!(r.is_optimal());
        assert!((r.x[0] + 1.0).abs() < 1e-12 && (r.x[1] - 3.0).abs() < 1e-12);
        assert!((r.objective + 4.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0);
        lp.add_constraint(vec![1.0, 0.0], Relation::Ge, -5.0);
        let r = solve_lp(&lp).unwrap();
        assert!(r.is_optimal());
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert!(lp.max_scaled_residual(&r.x) < 1e-12);
    }

    #[test]
    fn inverted_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.set_bounds(0, 2.0, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::Input(_))));
    }

    #[test]
    fn degenerate_klee_minty_style_program_terminates() {
        // Klee-Minty cube in 6 dimensions.
        let n = 6;
        let obj: Vec<f64> = (0..n).map(|j| 2f64.powi((n - 1 - j) as i32)).collect();
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        for i in 0..n {
            let mut row = vec![0.0; n];
            for (j, v) in row.iter_mut().enumerate().take(i) {
                *v = 2f64.powi((i - j + 1) as i32);
            }
            row[i] = 1.0;
            lp.add_constraint(row, Relation::Le, 5f64.powi(i as i32 + 1));
        }
        let r = solve_lp(&lp).unwrap();
        assert!(r.is_optimal());
        assert!((r.objective - 5f64.powi(n as i32)).abs() < 1e-6);
    }

    #[test]
    fn identical_inputs_give_identical_reports() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0, 1.0]);
        lp.add_constraint(vec![1.0, 2.0, 0.0], Relation::Ge, 1.0);
        lp.add_constraint(vec![0.0, 1.0, 1.0], Relation::Ge, 1.0);
        lp.add_constraint(vec![1.0, 0.0, 1.0], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }

    #[test]
    fn tabular_dump_lists_every_row() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0]);
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 4.0);
        let mut out = Vec::new();
        lp.write_tabular(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# max vars=2 rows=1"));
        assert!(text.contains("row0 1e0 1e0 <= 4e0"));
        assert_eq!(text.lines().count(), 1 + 1 + 1 + 2);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(128))]

        #[test]
        fn strong_duality_on_random_bounded_programs(
            m in 1usize..6,
            n in 1usize..6,
            seed in proptest::prelude::any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0.1..1.0)).collect()).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..5.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

            let mut primal = LinearProgram::new(Sense::Maximize, c.clone());
            for (row, rhs) in a.iter().zip(&b) {
                primal.add_constraint(row.clone(), Relation::Le, *rhs);
            }
            let mut dual = LinearProgram::new(Sense::Minimize, b.clone());
            for j in 0..n {
                dual.add_constraint(a.iter().map(|row| row[j]).collect(), Relation::Ge, c[j]);
            }
            let p = solve_lp(&primal).unwrap();
            let d = solve_lp(&dual).unwrap();
            proptest::prop_assert!(p.is_optimal() && d.is_optimal());
            proptest::prop_assert!((p.objective - d.objective).abs() <= 1e-8);
            proptest::prop_assert!(primal.max_scaled_residual(&p.x) <= 1e-9);
        }
    }
}
