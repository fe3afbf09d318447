use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmpiricalDistribution, TruncatedGaussianSpec};
use crate::error::{Error, Result};
use crate::game::{CoalitionId, GameSpec};

/// Namespaces for derived random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    Coalition = 1,
    Agent = 2,
    Shared = 3,
    Trial = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for the stream `(role, id)` under `master`.
pub fn derive_seed(master: u64, role: StreamRole, id: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ role as u64) ^ id)
}

/// `count` i.i.d. draws by inverse-CDF sampling from a seeded stream.
pub fn sample_truncated_gaussian(
    spec: &TruncatedGaussianSpec,
    count: usize,
    stream_seed: u64,
) -> Result<EmpiricalDistribution> {
    if count == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    let values = (0..count)
        .map(|_| spec.quantile(rng.random::<f64>()))
        .collect();
    EmpiricalDistribution::from_scalars(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Independent samples for every coalition.
    PerCoalition,
    /// Each agent draws its own samples; a coalition pools its members' draws.
    PerAgent,
    /// One multi-sample reused by all coalitions.
    Shared,
}

impl std::str::FromStr for SamplingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "per-coalition" | "per_coalition" => Ok(SamplingMode::PerCoalition),
            "per-agent" | "per_agent" => Ok(SamplingMode::PerAgent),
            "shared" => Ok(SamplingMode::Shared),
            other => Err(format!("unknown sampling plan `{other}`")),
        }
    }
}

impl std::fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplingMode::PerCoalition => "per-coalition",
            SamplingMode::PerAgent => "per-agent",
            SamplingMode::Shared => "shared",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleCounts {
    PerCoalition(BTreeMap<CoalitionId, usize>),
    /// Indexed by agent, `counts[i - 1]` for agent `i`.
    PerAgent(Vec<usize>),
    Shared(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub counts: SampleCounts,
    pub master_seed: u64,
}

impl SamplingPlan {
    /// The same count `k` everywhere (per coalition, per agent, or shared).
    pub fn uniform(mode: SamplingMode, game: &GameSpec, k: usize, master_seed: u64) -> Self {
        let counts = match mode {
            SamplingMode::PerCoalition => {
                SampleCounts::PerCoalition(game.subcoalitions().into_iter().map(|s| (s, k)).collect())
            }
            SamplingMode::PerAgent => SampleCounts::PerAgent(vec![k; game.n_agents()]),
            SamplingMode::Shared => SampleCounts::Shared(k),
        };
        SamplingPlan {
            counts,
            master_seed,
        }
    }

    pub fn mode(&self) -> SamplingMode {
        match self.counts {
            SampleCounts::PerCoalition(_) => SamplingMode::PerCoalition,
            SampleCounts::PerAgent(_) => SamplingMode::PerAgent,
            SampleCounts::Shared(_) => SamplingMode::Shared,
        }
    }

    /// Sample count seen by coalition `s`; pooled counts in per-agent mode.
    pub fn coalition_count(&self, s: CoalitionId) -> Result<usize> {
        match &self.counts {
            SampleCounts::PerCoalition(map) => map
                .get(&s)
                .copied()
                .ok_or_else(|| Error::Config(format!("no sample count for coalition {s}"))),
            SampleCounts::PerAgent(counts) => s
                .members()
                .iter()
                .map(|&i| {
                    counts
                        .get(i - 1)
                        .copied()
                        .ok_or_else(|| Error::Config(format!("no sample count for agent {i}")))
                })
                .sum(),
            SampleCounts::Shared(k) => Ok(*k),
        }
    }

    fn validate(&self, game: &GameSpec) -> Result<()> {
        let positive = |k: usize, what: String| {
            if k == 0 {
                Err(Error::Config(format!("sample count for {what} must be positive")))
            } else {
                Ok(())
            }
        };
        match &self.counts {
            SampleCounts::PerCoalition(map) => {
                for s in game.subcoalitions() {
                    let k = map
                        .get(&s)
                        .ok_or_else(|| Error::Config(format!("no sample count for coalition {s}")))?;
                    positive(*k, format!("coalition {s}"))?;
                }
                if map.len() != game.coalition_count() {
                    return Err(Error::Config("sample counts name unknown coalitions".into()));
                }
            }
            SampleCounts::PerAgent(counts) => {
                if counts.len() != game.n_agents() {
                    return Err(Error::Config(format!(
                        "{} agent sample counts for {} agents",
                        counts.len(),
                        game.n_agents()
                    )));
                }
                for (i, k) in counts.iter().enumerate() {
                    positive(*k, format!("agent {}", i + 1))?;
                }
            }
            SampleCounts::Shared(k) => positive(*k, "the shared stream".into())?,
        }
        Ok(())
    }
}

/// Draws the multi-sample of every coalition according to `plan`.
pub fn build_multisamples(
    plan: &SamplingPlan,
    spec: &TruncatedGaussianSpec,
    game: &GameSpec,
) -> Result<BTreeMap<CoalitionId, EmpiricalDistribution>> {
    if game.dim() != 1 {
        return Err(Error::UnsupportedDimension(
            "sampling from the truncated Gaussian model requires a one-dimensional game".into(),
        ));
    }
    plan.validate(game)?;
    let seed = plan.master_seed;
    let mut out = BTreeMap::new();
    match &plan.counts {
        SampleCounts::PerCoalition(map) => {
            for s in game.subcoalitions() {
                let stream = derive_seed(seed, StreamRole::Coalition, s.mask() as u64);
                out.insert(s, sample_truncated_gaussian(spec, map[&s], stream)?);
            }
        }
        SampleCounts::PerAgent(counts) => {
            let per_agent = counts
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    sample_truncated_gaussian(spec, k, derive_seed(seed, StreamRole::Agent, i as u64 + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            for s in game.subcoalitions() {
                let parts = s.members().into_iter().map(|i| &per_agent[i - 1]);
                out.insert(s, EmpiricalDistribution::concat(parts)?);
            }
        }
        SampleCounts::Shared(k) => {
            let shared = sample_truncated_gaussian(spec, *k, derive_seed(seed, StreamRole::Shared, 0))?;
            for s in game.subcoalitions() {
                out.insert(s, shared.clone());
            }
        }
    }
    Ok(out)
}
