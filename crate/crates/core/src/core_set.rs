//! Expected-value and distributionally robust cores.
//!
//! Both are polyhedra `{x : Σ_i x_i = u_N, Σ_{i∈S} x_i >= t_S}` over the
//! nonempty proper coalitions; they differ only in the thresholds `t_S`.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{summarize_confidence, Aggregation, AmbiguityConfig, ConfidenceSummary, ResolvedBall};
use crate::distributions::{true_mean_value, EmpiricalDistribution, TruncatedGaussianSpec};
use crate::error::{Error, Result};
use crate::game::{enumerate_subcoalitions, CoalitionId, GameSpec};
use crate::optim::{min_norm_point, solve_lp, LinearProgram, Polyhedron, Relation, Sense, SolveStatus};
use crate::worst_case::{dual_lp_program, worst_case, Engine, WorstCaseResult};

/// Tolerance for efficiency, slack and containment checks.
pub const CORE_TOL: f64 = 1e-8;

/// Core polyhedron given by `u_N` and one threshold per coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct CorePolyhedron {
    n_agents: usize,
    grand_value: f64,
    thresholds: BTreeMap<CoalitionId, f64>,
}

/// Payoff per agent; `x[i]` belongs to agent `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    pub x: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoreDocument {
    n_agents: usize,
    #[serde(rename = "u_N")]
    grand_value: f64,
    thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
}

impl CorePolyhedron {
    pub fn new(n_agents: usize, grand_value: f64, thresholds: BTreeMap<CoalitionId, f64>) -> Result<Self> {
        let expected = enumerate_subcoalitions(n_agents)?;
        if thresholds.len() != expected.len() || expected.iter().any(|s| !thresholds.contains_key(s)) {
            return Err(Error::Input(format!(
                "a core over {n_agents} agents needs exactly {} coalition thresholds",
                expected.len()
            )));
        }
        if let Some((s, t)) = thresholds.iter().find(|(_, t)| !t.is_finite()) {
            return Err(Error::Input(format!("threshold of {s} is not finite: {t}")));
        }
        if !grand_value.is_finite() {
            return Err(Error::Input("grand coalition value must be finite".into()));
        }
        Ok(CorePolyhedron {
            n_agents,
            grand_value,
            thresholds,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn grand_value(&self) -> f64 {
        self.grand_value
    }

    pub fn thresholds(&self) -> &BTreeMap<CoalitionId, f64> {
        &self.thresholds
    }

    pub fn threshold(&self, s: CoalitionId) -> Option<f64> {
        self.thresholds.get(&s).copied()
    }

    fn indicator(&self, s: CoalitionId) -> Vec<f64> {
        (1..=self.n_agents)
            .map(|i| if s.contains(i) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn polyhedron(&self) -> Polyhedron {
        let mut poly = Polyhedron::new(self.n_agents).equal(vec![1.0; self.n_agents], self.grand_value);
        for (&s, &t) in &self.thresholds {
            poly = poly.at_least(self.indicator(s), t);
        }
        poly
    }

    /// `min_{x ∈ core} d·x`, or `None` when the core is empty.
    pub fn support(&self, direction: &[f64]) -> Result<Option<f64>> {
        if direction.len() != self.n_agents {
            return Err(Error::Input("direction length differs from the agent count".into()));
        }
        let report = solve_lp(&self.polyhedron().linear_program(Sense::Minimize, direction.to_vec()))?;
        match report.status {
            SolveStatus::Optimal => Ok(Some(report.objective)),
            SolveStatus::Infeasible => Ok(None),
            SolveStatus::Unbounded => Err(Error::Internal("core polyhedron is unbounded".into())),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.support(&vec![0.0; self.n_agents])?.is_none())
    }

    /// JSON document `{"n_agents", "u_N", "thresholds": {mask: t}, "x"}`,
    /// where masks are decimal bitmask strings.
    pub fn to_json_string(&self, allocation: Option<&Allocation>) -> Result<String> {
        let doc = CoreDocument {
            n_agents: self.n_agents,
            grand_value: self.grand_value,
            thresholds: self
                .thresholds
                .iter()
                .map(|(s, t)| (s.mask().to_string(), *t))
                .collect(),
            x: allocation.map(|a| a.x.clone()),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_str(s: &str) -> Result<(Self, Option<Allocation>)> {
        let doc: CoreDocument = serde_json::from_str(s)?;
        let mut thresholds = BTreeMap::new();
        for (key, t) in doc.thresholds {
            let mask: u32 = key
                .parse()
                .map_err(|_| Error::Input(format!("threshold key `{key}` is not a bitmask")))?;
            thresholds.insert(CoalitionId::new(mask, doc.n_agents)?, t);
        }
        let core = CorePolyhedron::new(doc.n_agents, doc.grand_value, thresholds)?;
        Ok((core, doc.x.map(|x| Allocation { x })))
    }

    pub fn save(&self, path: impl AsRef<Path>, allocation: Option<&Allocation>) -> Result<()> {
        std::fs::write(path, self.to_json_string(allocation)?)?;
        Ok(())
    }
}

/// DR core together with the per-coalition balls and worst-case results
/// behind its thresholds.
#[derive(Debug, Clone)]
pub struct DrCore {
    pub core: CorePolyhedron,
    pub balls: BTreeMap<CoalitionId, ResolvedBall>,
    pub worst_case: BTreeMap<CoalitionId, WorstCaseResult>,
    pub confidence: ConfidenceSummary,
}

/// Thresholds `t_S = W_S` from each coalition's samples and ball; the
/// coalitions are solved in parallel.
pub fn build_dr_core(
    game: &GameSpec,
    samples: &BTreeMap<CoalitionId, EmpiricalDistribution>,
    config: &AmbiguityConfig,
    engine: Engine,
    aggregation: Aggregation,
) -> Result<DrCore> {
    config.validate(game)?;
    let coalitions = game.subcoalitions();
    let solved = coalitions
        .par_iter()
        .map(|&s| {
            let emp = samples
                .get(&s)
                .ok_or_else(|| Error::Config(format!("no samples for coalition {s}")))?;
            let ball = config.resolve(s, emp.len())?;
            let u = game.value(s).expect("game covers every coalition");
            let w = worst_case(u, emp, ball.radius, game.support(), config.norm, engine)?;
            Ok((s, ball, w))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut thresholds = BTreeMap::new();
    let mut balls = BTreeMap::new();
    let mut results = BTreeMap::new();
    for (s, ball, w) in solved {
        thresholds.insert(s, w.value);
        balls.insert(s, ball);
        results.insert(s, w);
    }
    let betas: Vec<f64> = balls.values().map(|b| b.beta).collect();
    Ok(DrCore {
        core: CorePolyhedron::new(game.n_agents(), game.grand_value(), thresholds)?,
        balls,
        worst_case: results,
        confidence: summarize_confidence(&betas, aggregation)?,
    })
}

/// Thresholds `t_S = E_P[u_S]` under the true distribution.
pub fn build_expected_core(game: &GameSpec, dist: &TruncatedGaussianSpec) -> Result<CorePolyhedron> {
    let thresholds = game
        .values()
        .map(|(s, u)| Ok((s, true_mean_value(dist, u)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    CorePolyhedron::new(game.n_agents(), game.grand_value(), thresholds)
}

/// Minimum-norm point of the core.
pub fn find_allocation(core: &CorePolyhedron) -> Result<Allocation> {
    match min_norm_point(&core.polyhedron()) {
        Ok(x) => Ok(Allocation { x }),
        Err(Error::EmptyRegion) => Err(Error::EmptyCore),
        Err(e) => Err(e),
    }
}

/// Efficiency gap and per-coalition slacks of an allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub efficiency_gap: f64,
    pub slacks: BTreeMap<CoalitionId, f64>,
    pub violated: Vec<CoalitionId>,
}

pub fn check_allocation(core: &CorePolyhedron, allocation: &Allocation) -> Result<StabilityVerdict> {
    let x = &allocation.x;
    if x.len() != core.n_agents {
        return Err(Error::Input(format!(
            "allocation has {} entries for {} agents",
            x.len(),
            core.n_agents
        )));
    }
    let efficiency_gap = x.iter().sum::<f64>() - core.grand_value;
    let slacks: BTreeMap<CoalitionId, f64> = core
        .thresholds
        .iter()
        .map(|(&s, &t)| (s, s.members().iter().map(|i| x[i - 1]).sum::<f64>() - t))
        .collect();
    let violated: Vec<CoalitionId> = slacks
        .iter()
        .filter(|(_, slack)| **slack < -CORE_TOL)
        .map(|(s, _)| *s)
        .collect();
    Ok(StabilityVerdict {
        stable: efficiency_gap.abs() <= CORE_TOL && violated.is_empty(),
        efficiency_gap,
        slacks,
        violated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    /// `W_S >= E_P[u_S]` per coalition.
    pub dominance: BTreeMap<CoalitionId, bool>,
    pub all_dominate: bool,
    pub contained: bool,
    /// Set when the DR core is empty.
    pub vacuous: bool,
    /// Largest `E_P[u_S] - Σ_{i∈S} x_i` over the DR core, floored at zero.
    pub max_violation: f64,
}

/// Decides whether the DR core lies inside the expected-value core by
/// minimizing each facet functional over the DR core.
pub fn check_containment(dr: &CorePolyhedron, expected: &CorePolyhedron) -> Result<ContainmentReport> {
    if dr.n_agents != expected.n_agents {
        return Err(Error::Input("cores have different agent counts".into()));
    }
    if dr.grand_value != expected.grand_value {
        return Err(Error::Input("cores have different grand coalition values".into()));
    }
    let dominance: BTreeMap<CoalitionId, bool> = dr
        .thresholds
        .iter()
        .map(|(s, w)| (*s, *w >= expected.thresholds[s]))
        .collect();
    let all_dominate = dominance.values().all(|d| *d);

    let mut max_violation: f64 = 0.0;
    let mut vacuous = false;
    for (&s, &e) in &expected.thresholds {
        match dr.support(&dr.indicator(s))? {
            Some(lowest) => max_violation = max_violation.max(e - lowest),
            None => {
                vacuous = true;
                max_violation = 0.0;
                break;
            }
        }
    }
    Ok(ContainmentReport {
        dominance,
        all_dominate,
        contained: max_violation <= CORE_TOL,
        vacuous,
        max_violation,
    })
}

/// Joint program over the allocation and every coalition's dual variables,
/// with objective `direction · x`. Its optimal value equals
/// `CorePolyhedron::support` of the decomposed DR core; used to cross-check
/// the decomposition on small instances.
pub fn monolithic_program(
    game: &GameSpec,
    samples: &BTreeMap<CoalitionId, EmpiricalDistribution>,
    config: &AmbiguityConfig,
    direction: &[f64],
) -> Result<LinearProgram> {
    let n = game.n_agents();
    if direction.len() != n {
        return Err(Error::Input("direction length differs from the agent count".into()));
    }
    let mut blocks = Vec::new();
    for s in game.subcoalitions() {
        let emp = samples
            .get(&s)
            .ok_or_else(|| Error::Config(format!("no samples for coalition {s}")))?;
        let ball = config.resolve(s, emp.len())?;
        let u = game.value(s).expect("game covers every coalition");
        blocks.push((s, dual_lp_program(u, emp, ball.radius, game.support(), config.norm)?));
    }
    let total = n + blocks.iter().map(|(_, lp)| lp.n_vars()).sum::<usize>();
    let mut objective = vec![0.0; total];
    objective[..n].copy_from_slice(direction);
    let mut joint = LinearProgram::new(Sense::Minimize, objective);
    for j in 0..n {
        joint.set_free(j);
    }
    let mut efficiency = vec![0.0; total];
    efficiency[..n].fill(1.0);
    joint.add_constraint(efficiency, Relation::Eq, game.grand_value());

    let mut offset = n;
    for (s, lp) in &blocks {
        for j in 0..lp.n_vars() {
            let (lo, hi) = lp.bounds(j);
            joint.set_bounds(offset + j, lo, hi);
        }
        for i in 0..lp.n_rows() {
            let (row, rel, rhs) = lp.row(i);
            let terms: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| (offset + j, *c))
                .collect();
            joint.add_sparse_constraint(&terms, rel, rhs);
        }
        // Σ_{i∈S} x_i >= λ ε + (1/K) Σ ℓ, the dual objective of the block.
        let mut link: Vec<(usize, f64)> = s.members().iter().map(|i| (i - 1, 1.0)).collect();
        link.extend(
            lp.objective()
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(j, c)| (offset + j, -c)),
        );
        joint.add_sparse_constraint(&link, Relation::Ge, 0.0);
        offset += lp.n_vars();
    }
    Ok(joint)
}

/// Optimal value of [`monolithic_program`], or `None` when it is infeasible.
pub fn monolithic_support(
    game: &GameSpec,
    samples: &BTreeMap<CoalitionId, EmpiricalDistribution>,
    config: &AmbiguityConfig,
    direction: &[f64],
) -> Result<Option<f64>> {
    let report = solve_lp(&monolithic_program(game, samples, config, direction)?)?;
    match report.status {
        SolveStatus::Optimal => Ok(Some(report.objective)),
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::Internal("monolithic program is unbounded".into())),
    }
}
