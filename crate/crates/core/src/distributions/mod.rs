//! True-distribution models, reproducible sampling and empirical distributions.

mod empirical;
pub mod normal;
mod sampling;

pub use empirical::{DiscreteDistribution, EmpiricalDistribution};
pub use sampling::{
    build_multisamples, derive_seed, sample_truncated_gaussian, SampleCounts, SamplingMode,
    SamplingPlan, StreamRole,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PiecewiseAffineValue;

/// Gaussian `N(mean, variance)` conditioned on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedGaussianSpec {
    mean: f64,
    variance: f64,
    lo: f64,
    hi: f64,
}

impl TruncatedGaussianSpec {
    pub fn new(mean: f64, variance: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(mean.is_finite() && variance.is_finite() && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Input("truncated Gaussian parameters must be finite".into()));
        }
        if variance <= 0.0 {
            return Err(Error::Input(format!("variance must be positive, got {variance}")));
        }
        if lo >= hi {
            return Err(Error::Input(format!("empty truncation interval [{lo}, {hi}]")));
        }
        let spec = TruncatedGaussianSpec {
            mean,
            variance,
            lo,
            hi,
        };
        let mass = spec.mass();
        if !(mass >= 1e-12) {
            return Err(Error::DegenerateTruncation { mass });
        }
        Ok(spec)
    }

    /// Mean 1, variance 1, truncated to `[0, 1]`.
    pub fn unit_example() -> Self {
        TruncatedGaussianSpec::new(1.0, 1.0, 0.0, 1.0).expect("valid parameters")
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    fn alpha(&self) -> f64 {
        (self.lo - self.mean) / self.sigma()
    }

    fn beta(&self) -> f64 {
        (self.hi - self.mean) / self.sigma()
    }

    /// Probability of `[lo, hi]` under the untruncated Gaussian.
    pub fn mass(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        if a > 0.0 {
            normal::cdf(-a) - normal::cdf(-b)
        } else {
            normal::cdf(b) - normal::cdf(a)
        }
    }

    /// Quantile of the truncated law at level `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        let z = if a > 0.0 {
            // Work in the upper tail where the distribution function is accurate.
            let (ta, tb) = (normal::cdf(-a), normal::cdf(-b));
            -normal::quantile(ta - u * (ta - tb))
        } else {
            let (fa, fb) = (normal::cdf(a), normal::cdf(b));
            normal::quantile(fa + u * (fb - fa))
        };
        (self.mean + self.sigma() * z).clamp(self.lo, self.hi)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let s = self.sigma();
        normal::pdf((x - self.mean) / s) / (s * self.mass())
    }

    /// `n` equally weighted atoms at the quantile midpoints `(i + 1/2) / n`.
    pub fn discretize(&self, n: usize) -> Result<DiscreteDistribution> {
        if n == 0 {
            return Err(Error::Input("discretization needs at least one atom".into()));
        }
        let points: Vec<f64> = (0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).collect();
        DiscreteDistribution::uniform_scalars(&points)
    }

    /// Closed-form mean of the truncated law.
    pub fn truncated_mean(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        self.mean + self.sigma() * (normal::pdf(a) - normal::pdf(b)) / self.mass()
    }

    /// Closed-form variance of the truncated law.
    pub fn truncated_variance(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        let z = self.mass();
        let (pa, pb) = (normal::pdf(a), normal::pdf(b));
        let ratio = (pa - pb) / z;
        self.variance * (1.0 + (a * pa - b * pb) / z - ratio * ratio)
    }
}

/// `E_P[u(ξ)]` for a one-dimensional truncated Gaussian `P`.
///
/// A single affine piece uses the closed-form mean. Several pieces are
/// integrated numerically (adaptive Simpson, absolute tolerance 1e-8) on the
/// subintervals where one piece is maximal.
pub fn true_mean_value(spec: &TruncatedGaussianSpec, u: &PiecewiseAffineValue) -> Result<f64> {
    if u.dim() != 1 {
        return Err(Error::UnsupportedDimension(format!(
            "truncated Gaussian model is one-dimensional, value function has dimension {}",
            u.dim()
        )));
    }
    if let [piece] = u.pieces() {
        return Ok(piece.b + piece.a[0] * spec.truncated_mean());
    }
    let mut breaks = vec![spec.lo(), spec.hi()];
    let pieces = u.pieces();
    for (i, p) in pieces.iter().enumerate() {
        for q in &pieces[i + 1..] {
            let slope = p.a[0] - q.a[0];
            if slope != 0.0 {
                let x = (q.b - p.b) / slope;
                if x > spec.lo() && x < spec.hi() {
                    breaks.push(x);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |x: f64| u.eval_unchecked(&[x]) * spec.density(x);
    let tol = 1e-8 / (breaks.len() - 1) as f64;
    breaks
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], tol))
        .sum()
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "quadrature did not converge on [{a}, {b}] (error estimate {:e})",
            delta.abs() / 15.0
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::AffinePiece;

    #[test]
    fn rejects_bad_parameters() {
        assert!(TruncatedGaussianSpec::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(TruncatedGaussianSpec::new(0.0, 1.0, 1.0, 1.0).is_err());
        let err = TruncatedGaussianSpec::new(0.0, 1.0, 1.0 - 1e-15, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateTruncation { .. }));
        // Six standard deviations out the interval still carries mass.
        assert!(TruncatedGaussianSpec::new(0.0, 1.0, 6.0, 7.0).is_ok());
    }

    #[test]
    fn constant_value_is_exact() {
        let spec = TruncatedGaussianSpec::unit_example();
        let u = PiecewiseAffineValue::constant(3.25, 1).unwrap();
        assert_eq!(true_mean_value(&spec, &u).unwrap(), 3.25);
    }

    #[test]
    fn multi_piece_matches_piecewise_closed_form() {
        // max(x, 0.3) = 0.3 + (x - 0.3)_+; compare quadrature against the
        // truncated-moment formula restricted to [0.3, 1].
        let spec = TruncatedGaussianSpec::unit_example();
        let u = PiecewiseAffineValue::new(vec![
            AffinePiece::new(vec![1.0], 0.0),
            AffinePiece::new(vec![0.0], 0.3),
        ])
        .unwrap();
        let upper = TruncatedGaussianSpec::new(1.0, 1.0, 0.3, 1.0).unwrap();
        let p_upper = upper.mass() / spec.mass();
        let expected = 0.3 * (1.0 - p_upper) + upper.truncated_mean() * p_upper;
        let got = true_mean_value(&spec, &u).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn quantile_is_monotone_and_bounded() {
        let spec = TruncatedGaussianSpec::new(3.0, 0.25, -1.0, 0.5).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..=100 {
            let q = spec.quantile(i as f64 / 100.0);
            assert!(q >= last && (-1.0..=0.5).contains(&q));
            last = q;
        }
    }

    #[test]
    fn rejects_multidimensional_values() {
        let spec = TruncatedGaussianSpec::unit_example();
        let u = PiecewiseAffineValue::affine(vec![1.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            true_mean_value(&spec, &u),
            Err(Error::UnsupportedDimension(_))
        ));
    }
}
