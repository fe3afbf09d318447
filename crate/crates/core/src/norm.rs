use serde::{Deserialize, Serialize};

/// Ground norm on the uncertainty space.
///
/// The dual pairing is `OneNorm <-> MaxNorm` and `Euclidean <-> Euclidean`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    #[default]
    OneNorm,
    MaxNorm,
    Euclidean,
}

impl NormTag {
    pub fn dual(self) -> NormTag {
        match self {
            NormTag::OneNorm => NormTag::MaxNorm,
            NormTag::MaxNorm => NormTag::OneNorm,
            NormTag::Euclidean => NormTag::Euclidean,
        }
    }

    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            NormTag::OneNorm => v.iter().map(|x| x.abs()).sum(),
            NormTag::MaxNorm => v.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
            NormTag::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Norm of `a - b`.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.eval(&diff)
    }

    pub fn dual_eval(self, v: &[f64]) -> f64 {
        self.dual().eval(v)
    }
}

impl std::str::FromStr for NormTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" | "one_norm" | "l1" => Ok(NormTag::OneNorm),
            "max" | "max_norm" | "linf" => Ok(NormTag::MaxNorm),
            "euclidean" | "l2" => Ok(NormTag::Euclidean),
            other => Err(format!("unknown norm `{other}` (expected one, max or euclidean)")),
        }
    }
}
