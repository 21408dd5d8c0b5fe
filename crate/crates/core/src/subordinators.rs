//! Exact samplers for the tempered ½-stable subordinator, its killed and
//! inverse variants, exponential boundary jumps and holding times.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Bernstein symbol `Φ(λ) = √(λ + θ) − √θ` with `θ = (|μ|/2)²`.
///
/// `mu_abs = 0` is the plain ½-stable subordinator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperedSymbol {
    theta: f64,
    mu_abs: f64,
}

impl TemperedSymbol {
    pub fn new(mu_abs: f64) -> Result<Self> {
        if !(mu_abs >= 0.0 && mu_abs.is_finite()) {
            return domain(format!("tempering drift must be finite and nonnegative, got {mu_abs}"));
        }
        let half = 0.5 * mu_abs;
        Ok(Self {
            theta: half * half,
            mu_abs,
        })
    }

    /// The untempered ½-stable symbol `Φ(λ) = √λ`.
    pub fn stable() -> Self {
        Self {
            theta: 0.0,
            mu_abs: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu_abs(&self) -> f64 {
        self.mu_abs
    }

    /// `Φ(λ)`, evaluated as `λ / (√(λ+θ) + √θ)` to avoid cancellation.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return domain(format!("Φ is defined for λ ≥ 0, got {lambda}"));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let root = self.theta.sqrt();
        Ok(lambda / ((lambda + self.theta).sqrt() + root))
    }

    /// `Φ′(0) = 1/|μ|`; infinite for the stable symbol.
    pub fn derivative_at_zero(&self) -> f64 {
        if self.mu_abs > 0.0 {
            1.0 / self.mu_abs
        } else {
            f64::INFINITY
        }
    }
}

/// `Φ(λ)` for `sym`. Negative `λ` is a domain error.
pub fn phi_eval(sym: &TemperedSymbol, lambda: f64) -> Result<f64> {
    sym.eval(lambda)
}

/// Law of the time change applied at a boundary: either the identity
/// (plain exponential holding) or a tempered subordinator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldingSymbol {
    Identity,
    Tempered(TemperedSymbol),
}

impl HoldingSymbol {
    pub fn derivative_at_zero(&self) -> f64 {
        match self {
            HoldingSymbol::Identity => 1.0,
            HoldingSymbol::Tempered(s) => s.derivative_at_zero(),
        }
    }
}

/// Exponential jump law with mean `eta_eps`: `P(J > z) = exp(−z/η_ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpKernel {
    pub eta_eps: f64,
}

impl JumpKernel {
    pub fn new(eta_eps: f64) -> Result<Self> {
        if !(eta_eps >= 0.0 && eta_eps.is_finite()) {
            return domain(format!("jump mean must be finite and nonnegative, got {eta_eps}"));
        }
        Ok(Self { eta_eps })
    }

    pub fn survival(&self, z: f64) -> f64 {
        if z <= 0.0 {
            1.0
        } else if self.eta_eps == 0.0 {
            0.0
        } else {
            (-z / self.eta_eps).exp()
        }
    }
}

/// Inverse Gaussian draw with the given mean and shape, by the
/// Michael–Schucany–Haas transformation.
///
/// The root is taken in the rationalised form `m / (1 + w + √(w(w+2)))`,
/// which stays accurate when the shape is tiny relative to the mean.
pub(crate) fn inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let nu: f64 = rng.sample(StandardNormal);
    let w = mean * nu * nu / (2.0 * shape);
    let x = mean / (1.0 + w + (w * (w + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

/// One draw of `H_level`.
///
/// For `|μ| > 0` the law is inverse Gaussian with mean `level/|μ|` and shape
/// `level²/2`; the stable case is `level² / (4E)` with `E = Z²/2`.
pub fn sample_h<R: Rng + ?Sized>(sym: &TemperedSymbol, level: f64, rng: &mut R) -> Result<f64> {
    if !(level > 0.0 && level.is_finite()) {
        return domain(format!("subordinator level must be positive and finite, got {level}"));
    }
    if sym.mu_abs > 0.0 {
        Ok(inverse_gaussian(level / sym.mu_abs, 0.5 * level * level, rng))
    } else {
        let z: f64 = rng.sample(StandardNormal);
        let e = 0.5 * z * z;
        Ok(level * level / (4.0 * e))
    }
}

/// `H†_level`: `H_level` if `level < T` with `T ~ Exp(|μ|)`, else `+∞`.
pub fn sample_h_killed<R: Rng + ?Sized>(sym: &TemperedSymbol, level: f64, rng: &mut R) -> Result<f64> {
    if !(level > 0.0) {
        return domain(format!("subordinator level must be positive, got {level}"));
    }
    let kill = if sym.mu_abs > 0.0 {
        rng.sample::<f64, _>(Exp1) / sym.mu_abs
    } else {
        f64::INFINITY
    };
    if level < kill {
        sample_h(sym, level, rng)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Restart level after the process reaches the boundary: `J ~ Exp(mean η_ε)`.
///
/// The overshoot of a compound Poisson subordinator with exponential jumps
/// is exponential with the same mean, so one draw per hit is exact.
pub fn sample_boundary_jump<R: Rng + ?Sized>(kern: &JumpKernel, rng: &mut R) -> f64 {
    kern.eta_eps * rng.sample::<f64, _>(Exp1)
}

/// Holding time `H^Φ ∘ T` with `T ~ Exp(mean η)`; `T` itself for the
/// identity symbol.
pub fn sample_holding<R: Rng + ?Sized>(sym: &HoldingSymbol, eta: f64, rng: &mut R) -> Result<f64> {
    sample_holding_with_level(sym, eta, rng).map(|(_, hold)| hold)
}

/// As [`sample_holding`], also returning the exponential level `T` that
/// the subordinator was evaluated at.
pub fn sample_holding_with_level<R: Rng + ?Sized>(sym: &HoldingSymbol, eta: f64, rng: &mut R) -> Result<(f64, f64)> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return domain(format!("stickiness must be finite and nonnegative, got {eta}"));
    }
    let e = eta * rng.sample::<f64, _>(Exp1);
    let hold = match sym {
        HoldingSymbol::Identity => e,
        HoldingSymbol::Tempered(s) if e > 0.0 => sample_h(s, e, rng)?,
        HoldingSymbol::Tempered(_) => 0.0,
    };
    Ok((e, hold))
}

/// `L_t = inf{s : H_s > t}` by summing subordinator increments over a grid
/// of step `ds` and returning the midpoint of the crossing cell.
pub fn sample_inverse_grid<R: Rng + ?Sized>(sym: &TemperedSymbol, t: f64, ds: f64, rng: &mut R) -> Result<f64> {
    if !(t >= 0.0) || !(ds > 0.0) {
        return domain(format!(
            "inverse subordinator needs t ≥ 0 and ds > 0, got t={t}, ds={ds}"
        ));
    }
    let mut h = 0.0;
    let mut k = 0u64;
    while h <= t {
        h += sample_h(sym, ds, rng)?;
        k += 1;
    }
    Ok((k as f64 - 0.5) * ds)
}

/// Oracle for the local time at 0 of the reflected process at time `t`
/// started from 0: `L_t` for `μ ≤ 0`, `min(L_t, T_μ)` for `μ > 0`.
pub fn sample_local_time_law<R: Rng + ?Sized>(mu: f64, t: f64, ds: f64, rng: &mut R) -> Result<f64> {
    let sym = TemperedSymbol::new(mu.abs())?;
    let inverse = sample_inverse_grid(&sym, t, ds, rng)?;
    if mu > 0.0 {
        let kill = rng.sample::<f64, _>(Exp1) / mu;
        Ok(inverse.min(kill))
    } else {
        Ok(inverse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;
    use approx::assert_relative_eq;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn phi_examples() {
        let one = TemperedSymbol::new(2.0).unwrap();
        assert_eq!(one.theta(), 1.0);
        assert_eq!(phi_eval(&one, 0.0).unwrap(), 0.0);
        assert_relative_eq!(phi_eval(&one, 3.0).unwrap(), 1.0, epsilon = 1e-15);
        let stable = TemperedSymbol::stable();
        assert_relative_eq!(phi_eval(&stable, 4.0).unwrap(), 2.0, epsilon = 1e-15);
        assert!(phi_eval(&one, -1.0).is_err());
    }

    #[test]
    fn theta_matches_drift() {
        for mu in [0.0, 0.3, 1.0, 7.5] {
            let s = TemperedSymbol::new(mu).unwrap();
            assert_eq!(s.theta(), (mu / 2.0) * (mu / 2.0));
        }
    }

    #[test]
    fn phi_increasing_and_concave_on_grid() {
        let s = TemperedSymbol::new(1.3).unwrap();
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let vals: Vec<f64> = grid.iter().map(|&l| s.eval(l).unwrap()).collect();
        for w in vals.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - w[1] <= w[1] - w[0] + 1e-15);
        }
    }

    #[test]
    fn level_must_be_positive() {
        let s = TemperedSymbol::new(1.0).unwrap();
        let mut rng = path_rng(1, 0, 0);
        assert!(sample_h(&s, 0.0, &mut rng).is_err());
        assert!(sample_h(&s, -1.0, &mut rng).is_err());
    }

    #[test]
    fn small_level_gives_small_draws() {
        let s = TemperedSymbol::new(2.0).unwrap();
        let mut rng = path_rng(1, 0, 1);
        for _ in 0..1000 {
            let h = sample_h(&s, 1e-6, &mut rng).unwrap();
            assert!(h > 0.0 && h < 1e-3);
        }
    }

    #[test]
    fn inverse_gaussian_mean_matches_level_over_drift() {
        // mean ℓ/μ = 0.5; cross-checked in the integration tests by
        // quadrature of the density
        let s = TemperedSymbol::new(2.0).unwrap();
        let mut rng = path_rng(2, 0, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_h(&s, 1.0, &mut rng).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 0.5).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn stable_case_is_positive_and_heavy_tailed() {
        let s = TemperedSymbol::stable();
        let mut rng = path_rng(2, 0, 1);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_h(&s, 1.0, &mut rng).unwrap()).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        // P(H_1 ≤ z) = erfc(1/(2√z)); at z = 1 that is erfc(1/2)
        let frac = xs.iter().filter(|&&x| x <= 1.0).count() as f64 / xs.len() as f64;
        let p = statrs::function::erf::erfc(0.5);
        let se = (p * (1.0 - p) / xs.len() as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * se, "{frac} vs {p}");
    }

    #[test]
    fn killed_survival_probability() {
        for (level, mu) in [(1.0, 1.0), (2.0, 3.0)] {
            let s = TemperedSymbol::new(mu).unwrap();
            let mut rng = path_rng(3, 0, 0);
            let n = 200_000;
            let finite = (0..n)
                .filter(|_| sample_h_killed(&s, level, &mut rng).unwrap().is_finite())
                .count() as f64
                / n as f64;
            let p = (-mu * level).exp();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((finite - p).abs() < 3.0 * se, "{finite} vs {p}");
        }
    }

    #[test]
    fn vanishing_kill_rate_is_always_finite() {
        let s = TemperedSymbol::new(1e-12).unwrap();
        let mut rng = path_rng(3, 0, 1);
        for _ in 0..1000 {
            assert!(sample_h_killed(&s, 1.0, &mut rng).unwrap().is_finite());
        }
    }

    #[test]
    fn boundary_jump_mean_and_tail() {
        let k = JumpKernel::new(2.0).unwrap();
        let mut rng = path_rng(4, 0, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| sample_boundary_jump(&k, &mut rng)).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 2.0).abs() < 3.0 * se);
        assert!(xs.iter().all(|&x| x > 0.0));

        // η = m/σ with m = 1.5, σ = 2.25; P(J > h*) = exp(−h*σ/m)
        let (mag, sigma, h_star) = (1.5, 2.25, 0.4);
        let k = JumpKernel::new(mag / sigma).unwrap();
        let n = 200_000;
        let hits = (0..n).filter(|_| sample_boundary_jump(&k, &mut rng) > h_star).count() as f64 / n as f64;
        let p = (-h_star * sigma / mag).exp();
        assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
        assert_relative_eq!(k.survival(h_star), p, epsilon = 1e-15);

        let tiny = JumpKernel::new(1e-12).unwrap();
        assert!(sample_boundary_jump(&tiny, &mut rng) < 1e-9);
    }

    #[test]
    fn holding_with_tempered_symbol_has_mean_one_over_sigma() {
        let (mag, sigma) = (1.5, 0.8);
        let sym = HoldingSymbol::Tempered(TemperedSymbol::new(mag).unwrap());
        let mut rng = path_rng(5, 0, 0);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| sample_holding(&sym, mag / sigma, &mut rng).unwrap())
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.0 / sigma).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn holding_vanishes_with_stickiness() {
        let mut rng = path_rng(5, 0, 1);
        assert_eq!(sample_holding(&HoldingSymbol::Identity, 0.0, &mut rng).unwrap(), 0.0);
        let h = sample_holding(&HoldingSymbol::Identity, 1e-12, &mut rng).unwrap();
        assert!(h < 1e-9);
        assert!(sample_holding(&HoldingSymbol::Identity, -1.0, &mut rng).is_err());
    }

    #[test]
    fn derivative_at_zero() {
        assert_eq!(HoldingSymbol::Identity.derivative_at_zero(), 1.0);
        let s = HoldingSymbol::Tempered(TemperedSymbol::new(4.0).unwrap());
        assert_eq!(s.derivative_at_zero(), 0.25);
        assert!(TemperedSymbol::stable().derivative_at_zero().is_infinite());
    }
}
