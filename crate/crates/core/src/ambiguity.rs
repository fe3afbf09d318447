//! Wasserstein balls around empirical distributions: the one-dimensional
//! transport distance, the radius/confidence calculus, and aggregation of
//! per-coalition confidences.
//!
//! For a coalition with `K` samples and ball radius `ε`, the true law lies in
//! the ball with probability at least `1 - β`, where
//!
//! ```text
//! β(ε, K) = c · exp(-q K ε^max(p, 2))   if ε <= 1
//!         = c · exp(-q K ε^a)           if ε > 1
//! ```
//!
//! `c` and `q` depend on the light-tail constants of the true law and are
//! supplied by the user. Values `β >= 1` carry no guarantee and are reported
//! as vacuous rather than clamped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::game::{CoalitionId, GameSpec};
use crate::norm::NormTag;

/// Light-tail and concentration constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    /// Tail exponent, `a > 1`.
    pub a: f64,
    /// Exponential moment bound `A >= 1`. Recorded for reporting only.
    pub moment_bound: f64,
    pub c: f64,
    pub q: f64,
    /// Dimension of the uncertainty.
    pub p: usize,
    /// User-supplied exponent replacing `max(p, 2)` when `p = 2`, where the
    /// concentration bound does not apply. Not part of the standard bound.
    pub p2_exponent: Option<f64>,
}

impl Default for TailParams {
    /// Illustrative constants `c = q = 1`, `a = 2`, `A = 1`, `p = 1`.
    fn default() -> Self {
        TailParams {
            a: 2.0,
            moment_bound: 1.0,
            c: 1.0,
            q: 1.0,
            p: 1,
            p2_exponent: None,
        }
    }
}

impl TailParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 1.0 && self.a.is_finite()) {
            return Err(Error::Config(format!("tail exponent a = {} must exceed 1", self.a)));
        }
        if !(self.moment_bound >= 1.0) {
            return Err(Error::Config("moment bound A must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite() && self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::Config("constants c and q must be positive".into()));
        }
        if self.p == 0 {
            return Err(Error::Config("dimension p must be at least 1".into()));
        }
        if let Some(e) = self.p2_exponent {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config("p = 2 exponent override must be positive".into()));
            }
        }
        Ok(())
    }

    /// Exponent used on the `ε <= 1` branch.
    fn small_radius_exponent(&self) -> Result<f64> {
        if self.p == 2 {
            return self.p2_exponent.ok_or_else(|| {
                Error::UnsupportedDimension(
                    "the concentration bound excludes p = 2; supply an explicit exponent override"
                        .into(),
                )
            });
        }
        Ok(self.p.max(2) as f64)
    }
}

/// Confidence parameter `β` for radius `ε` and `K` samples.
pub fn beta_from_radius(radius: f64, k: usize, tail: &TailParams) -> Result<f64> {
    tail.validate()?;
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!("radius must be nonnegative, got {radius}")));
    }
    if k == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    let exponent = if radius <= 1.0 {
        tail.small_radius_exponent()?
    } else {
        tail.a
    };
    Ok(tail.c * (-tail.q * k as f64 * radius.powf(exponent)).exp())
}

/// Radius that achieves confidence parameter `β` with `K` samples; the
/// inverse of [`beta_from_radius`] on each branch.
pub fn radius_from_beta(beta: f64, k: usize, tail: &TailParams) -> Result<f64> {
    tail.validate()?;
    if !(beta > 0.0 && beta < tail.c) {
        return Err(Error::InvalidConfidence(format!(
            "β = {beta} must lie in (0, c) with c = {}",
            tail.c
        )));
    }
    if k == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    let log_ratio = (tail.c / beta).ln();
    let base = log_ratio / (tail.q * k as f64);
    let exponent = if k as f64 >= log_ratio / tail.q {
        tail.small_radius_exponent()?
    } else {
        tail.a
    };
    Ok(base.powf(1.0 / exponent))
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::Input("no confidence parameters given".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0 && **b < 1.0)) {
        return Err(Error::Input(format!("confidence parameter {b} outside [0, 1)")));
    }
    Ok(())
}

/// `∏_S (1 - β_S)`: confidence that every coalition's ball contains the true
/// law when coalitions sample independently.
pub fn aggregate_confidence(betas: &[f64]) -> Result<f64> {
    check_betas(betas)?;
    Ok(betas.iter().map(|b| 1.0 - b).product())
}

/// `Σ_S (1 - β_S) - M + 1` with `M = betas.len()`; valid under arbitrary
/// sharing of samples but may be nonpositive (vacuous).
pub fn aggregate_confidence_bonferroni(betas: &[f64]) -> Result<f64> {
    check_betas(betas)?;
    Ok(betas.iter().map(|b| 1.0 - b).sum::<f64>() - betas.len() as f64 + 1.0)
}

/// Order-1 Wasserstein distance between one-dimensional distributions,
/// computed as `∫_0^1 |F1^{-1}(t) - F2^{-1}(t)| dt`.
pub fn wasserstein_1d(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> Result<f64> {
    if d1.dim() != 1 || d2.dim() != 1 {
        return Err(Error::UnsupportedDimension(
            "the sorted-quantile distance needs one-dimensional distributions; use the transport LP"
                .into(),
        ));
    }
    let sorted = |d: &DiscreteDistribution| {
        let mut v: Vec<(f64, f64)> = d
            .atoms()
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|a| (a.0[0], a.1))
            .collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (a, b) = (sorted(d1), sorted(d2));
    let (mut i, mut j) = (0, 0);
    let (mut left_a, mut left_b) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let step = left_a.min(left_b);
        total += step * (a[i].0 - b[j].0).abs();
        left_a -= step;
        left_b -= step;
        if left_a <= 1e-15 {
            i += 1;
            if i < a.len() {
                left_a += a[i].1;
            }
        }
        if left_b <= 1e-15 {
            j += 1;
            if j < b.len() {
                left_b += b[j].1;
            }
        }
    }
    Ok(total)
}

/// Ball size of one coalition, given either directly or through a target
/// confidence parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallSpec {
    Radius(f64),
    Confidence(f64),
}

/// Ambiguity sets of every coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityConfig {
    pub balls: BTreeMap<CoalitionId, BallSpec>,
    pub tail: TailParams,
    pub norm: NormTag,
}

/// Radius and confidence parameter of one coalition's ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedBall {
    pub samples: usize,
    pub radius: f64,
    pub beta: f64,
}

impl ResolvedBall {
    pub fn is_vacuous(&self) -> bool {
        self.beta >= 1.0
    }
}

impl AmbiguityConfig {
    pub fn uniform(game: &GameSpec, ball: BallSpec, tail: TailParams, norm: NormTag) -> Self {
        AmbiguityConfig {
            balls: game.subcoalitions().into_iter().map(|s| (s, ball)).collect(),
            tail,
            norm,
        }
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        self.tail.validate()?;
        for s in game.subcoalitions() {
            match self.balls.get(&s) {
                None => return Err(Error::Config(format!("no ambiguity ball for coalition {s}"))),
                Some(BallSpec::Radius(e)) if !(*e >= 0.0 && e.is_finite()) => {
                    return Err(Error::Config(format!("coalition {s}: radius {e} must be nonnegative")))
                }
                Some(BallSpec::Confidence(b)) if !(*b > 0.0 && *b < 1.0) => {
                    return Err(Error::Config(format!("coalition {s}: β = {b} outside (0, 1)")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Radius and β for coalition `s` with `k` samples.
    pub fn resolve(&self, s: CoalitionId, k: usize) -> Result<ResolvedBall> {
        let ball = self
            .balls
            .get(&s)
            .ok_or_else(|| Error::Config(format!("no ambiguity ball for coalition {s}")))?;
        let (radius, beta) = match *ball {
            BallSpec::Radius(r) => (r, beta_from_radius(r, k, &self.tail)?),
            BallSpec::Confidence(b) => (radius_from_beta(b, k, &self.tail)?, b),
        };
        Ok(ResolvedBall {
            samples: k,
            radius,
            beta,
        })
    }
}

/// How per-coalition confidences are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Product,
    Bonferroni,
}

/// Aggregate confidence report. `vacuous` is set when some `β_S >= 1` or the
/// combined bound is not positive; `aggregate` is then reported as computed,
/// or `0` when it cannot be formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSummary {
    pub method: Aggregation,
    pub aggregate: f64,
    pub vacuous: bool,
}

pub fn summarize_confidence(betas: &[f64], method: Aggregation) -> Result<ConfidenceSummary> {
    if betas.iter().any(|b| b.is_nan() || *b < 0.0) {
        return Err(Error::Input("confidence parameters must be nonnegative".into()));
    }
    if betas.iter().any(|b| *b >= 1.0) {
        return Ok(ConfidenceSummary {
            method,
            aggregate: 0.0,
            vacuous: true,
        });
    }
    let aggregate = match method {
        Aggregation::Product => aggregate_confidence(betas)?,
        Aggregation::Bonferroni => aggregate_confidence_bonferroni(betas)?,
    };
    Ok(ConfidenceSummary {
        method,
        aggregate,
        vacuous: aggregate <= 0.0,
    })
}
