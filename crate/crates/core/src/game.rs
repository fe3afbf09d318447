//! Coalitional games with uncertain, piecewise-affine coalition values.
//!
//! A game over `N` agents assigns every nonempty proper coalition `S` a value
//! function `u_S(ξ) = max_m (a_m · ξ + b_m)` of the uncertain parameter
//! `ξ ∈ Ξ ⊂ R^p`. The grand coalition's value `u_N` is a plain number: only
//! the subcoalitions are uncertain.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormTag;

/// Largest supported number of agents.
pub const MAX_AGENTS: usize = 20;

/// A nonempty proper coalition, stored as a bitmask with bit `i - 1` set when
/// agent `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoalitionId(u32);

impl CoalitionId {
    /// Wraps a raw mask, rejecting the empty and the grand coalition.
    pub fn new(mask: u32, n_agents: usize) -> Result<Self> {
        check_agent_count(n_agents)?;
        let full = full_mask(n_agents);
        if mask == 0 || mask & !full != 0 || mask == full {
            return Err(Error::Input(format!(
                "mask {mask:#b} is not a nonempty proper coalition of {n_agents} agents"
            )));
        }
        Ok(CoalitionId(mask))
    }

    /// Builds a coalition from 1-based agent indices.
    pub fn from_members(members: &[usize], n_agents: usize) -> Result<Self> {
        check_agent_count(n_agents)?;
        let mut mask = 0u32;
        for &i in members {
            if i == 0 || i > n_agents {
                return Err(Error::Input(format!("agent {i} outside 1..={n_agents}")));
            }
            if mask & (1 << (i - 1)) != 0 {
                return Err(Error::Input(format!("agent {i} listed twice")));
            }
            mask |= 1 << (i - 1);
        }
        CoalitionId::new(mask, n_agents)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn contains(self, agent: usize) -> bool {
        agent >= 1 && agent <= 32 && self.0 & (1 << (agent - 1)) != 0
    }

    /// Members as 1-based agent indices, ascending.
    pub fn members(self) -> Vec<usize> {
        (0..32).filter(|b| self.0 & (1 << b) != 0).map(|b| b + 1).collect()
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Display for CoalitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.members().iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

fn full_mask(n_agents: usize) -> u32 {
    ((1u64 << n_agents) - 1) as u32
}

fn check_agent_count(n_agents: usize) -> Result<()> {
    if !(2..=MAX_AGENTS).contains(&n_agents) {
        return Err(Error::Config(format!(
            "agent count {n_agents} outside the supported range 2..={MAX_AGENTS}"
        )));
    }
    Ok(())
}

/// All nonempty proper coalitions of `n_agents` agents in ascending mask order.
///
/// ```
/// use drcore::game::enumerate_subcoalitions;
/// let masks: Vec<u32> = enumerate_subcoalitions(3).unwrap().iter().map(|c| c.mask()).collect();
/// assert_eq!(masks, vec![0b001, 0b010, 0b011, 0b100, 0b101, 0b110]);
/// ```
pub fn enumerate_subcoalitions(n_agents: usize) -> Result<Vec<CoalitionId>> {
    check_agent_count(n_agents)?;
    Ok((1..full_mask(n_agents)).map(CoalitionId).collect())
}

/// One affine piece `a · ξ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffinePiece {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        AffinePiece { a, b }
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.a.iter().zip(xi).map(|(a, x)| a * x).sum::<f64>() + self.b
    }
}

/// `u(ξ) = max_m (a_m · ξ + b_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffineValue {
    pieces: Vec<AffinePiece>,
}

impl PiecewiseAffineValue {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Input("value function needs at least one piece".into()));
        };
        let dim = first.a.len();
        if dim == 0 {
            return Err(Error::Input("affine pieces must have dimension >= 1".into()));
        }
        for piece in &pieces {
            if piece.a.len() != dim {
                return Err(Error::Input(format!(
                    "piece dimensions differ ({} vs {dim})",
                    piece.a.len()
                )));
            }
            if !piece.b.is_finite() || piece.a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input("piece coefficients must be finite".into()));
            }
        }
        Ok(PiecewiseAffineValue { pieces })
    }

    /// Single affine piece `a · ξ + b`.
    pub fn affine(a: Vec<f64>, b: f64) -> Result<Self> {
        Self::new(vec![AffinePiece::new(a, b)])
    }

    /// Constant value `b` on a `dim`-dimensional uncertainty space.
    pub fn constant(b: f64, dim: usize) -> Result<Self> {
        Self::affine(vec![0.0; dim], b)
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].a.len()
    }

    pub fn evaluate(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim() {
            return Err(Error::Input(format!(
                "point has dimension {}, value function expects {}",
                xi.len(),
                self.dim()
            )));
        }
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(&self, xi: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(xi))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest dual norm of the slopes; a Lipschitz constant w.r.t. `norm`.
    pub fn lipschitz_constant(&self, norm: NormTag) -> f64 {
        self.pieces
            .iter()
            .map(|p| norm.dual_eval(&p.a))
            .fold(0.0, f64::max)
    }
}

/// Axis-aligned box `[lo, hi]` used as the support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSupport {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSupport {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Input("box bounds must have equal, nonzero length".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::Input(format!("invalid box side [{l}, {h}]")));
            }
        }
        Ok(BoxSupport { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        xi.len() == self.dim()
            && xi
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }
}

/// A stochastic coalitional game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    n_agents: usize,
    grand_value: f64,
    support: BoxSupport,
    values: BTreeMap<CoalitionId, PiecewiseAffineValue>,
}

impl GameSpec {
    pub fn new(
        n_agents: usize,
        grand_value: f64,
        support: BoxSupport,
        values: BTreeMap<CoalitionId, PiecewiseAffineValue>,
    ) -> Result<Self> {
        let coalitions = enumerate_subcoalitions(n_agents)?;
        if !grand_value.is_finite() {
            return Err(Error::Input("grand coalition value must be finite".into()));
        }
        for s in &coalitions {
            let Some(v) = values.get(s) else {
                return Err(Error::Config(format!("coalition {s} has no value function")));
            };
            if v.dim() != support.dim() {
                return Err(Error::Input(format!(
                    "coalition {s}: value dimension {} differs from support dimension {}",
                    v.dim(),
                    support.dim()
                )));
            }
        }
        if values.len() != coalitions.len() {
            return Err(Error::Config(format!(
                "expected {} coalition entries, found {}",
                coalitions.len(),
                values.len()
            )));
        }
        Ok(GameSpec {
            n_agents,
            grand_value,
            support,
            values,
        })
    }

    /// Three-agent game with value `c_S + ξ` per coalition, intercepts
    /// `2, 1.5, 2.5` for the singletons `{1},{2},{3}` and `6, 6.5, 7` for
    /// `{1,2},{2,3},{1,3}`, on the support `[0, 1]`.
    ///
    /// The grand value is not part of the example and must be chosen by the
    /// caller.
    pub fn three_agent_example(grand_value: f64) -> Result<Self> {
        let intercepts: [(&[usize], f64); 6] = [
            (&[1], 2.0),
            (&[2], 1.5),
            (&[3], 2.5),
            (&[1, 2], 6.0),
            (&[2, 3], 6.5),
            (&[1, 3], 7.0),
        ];
        let mut values = BTreeMap::new();
        for (members, b) in intercepts {
            values.insert(
                CoalitionId::from_members(members, 3)?,
                PiecewiseAffineValue::affine(vec![1.0], b)?,
            );
        }
        GameSpec::new(3, grand_value, BoxSupport::interval(0.0, 1.0)?, values)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn grand_value(&self) -> f64 {
        self.grand_value
    }

    pub fn support(&self) -> &BoxSupport {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn value(&self, s: CoalitionId) -> Option<&PiecewiseAffineValue> {
        self.values.get(&s)
    }

    /// Coalitions with their value functions, ascending mask order.
    pub fn values(&self) -> impl Iterator<Item = (CoalitionId, &PiecewiseAffineValue)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn subcoalitions(&self) -> Vec<CoalitionId> {
        self.values.keys().copied().collect()
    }

    /// Number of nonempty proper coalitions, `2^N - 2`.
    pub fn coalition_count(&self) -> usize {
        self.values.len()
    }

    /// Same game with a different grand-coalition value.
    pub fn with_grand_value(&self, grand_value: f64) -> Result<Self> {
        GameSpec::new(
            self.n_agents,
            grand_value,
            self.support.clone(),
            self.values.clone(),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: GameDocument = serde_json::from_str(s)?;
        doc.try_into()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GameDocument::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GameDocument {
    n_agents: usize,
    grand_value: f64,
    support: BoxSupport,
    coalitions: Vec<CoalitionDocument>,
}

#[derive(Serialize, Deserialize)]
struct CoalitionDocument {
    members: Vec<usize>,
    pieces: Vec<AffinePiece>,
}

impl From<&GameSpec> for GameDocument {
    fn from(g: &GameSpec) -> Self {
        GameDocument {
            n_agents: g.n_agents,
            grand_value: g.grand_value,
            support: g.support.clone(),
            coalitions: g
                .values
                .iter()
                .map(|(s, v)| CoalitionDocument {
                    members: s.members(),
                    pieces: v.pieces.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<GameDocument> for GameSpec {
    type Error = Error;

    fn try_from(doc: GameDocument) -> Result<Self> {
        // Re-validate the support: deserialization bypasses the constructor.
        let support = BoxSupport::new(doc.support.lo, doc.support.hi)?;
        let mut values = BTreeMap::new();
        for c in doc.coalitions {
            let id = CoalitionId::from_members(&c.members, doc.n_agents)?;
            if values
                .insert(id, PiecewiseAffineValue::new(c.pieces)?)
                .is_some()
            {
                return Err(Error::Config(format!("coalition {id} listed twice")));
            }
        }
        GameSpec::new(doc.n_agents, doc.grand_value, support, values)
    }
}
