//! Closed-form oracles: exit-time means, resolvents, transition kernels,
//! subordinator laws and the Gutenberg–Richter survival function.
//!
//! Every function is pure. Formulas with a removable singularity at `μ = 0`
//! switch to the limit below [`MU_LIMIT`] and to a Taylor series below
//! [`MU_SERIES`].

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quadrature::{erfc, erfcx, integrate_to_infinity, QuadOptions};

/// Below this `|μ|` the `μ → 0` limit is returned.
pub const MU_LIMIT: f64 = 1e-12;
/// Below this `|μ|` series expansions replace cancelling differences.
pub const MU_SERIES: f64 = 1e-3;

fn check_interval(x: f64, ell: f64) -> Result<()> {
    if !(x >= 0.0 && x <= ell) {
        return domain(format!("need 0 ≤ x ≤ ℓ, got x={x}, ℓ={ell}"));
    }
    Ok(())
}

/// `(e^{−μx} − e^{−μℓ})/μ`, the mean local time at 0 accumulated before
/// the first passage of `ℓ`. Tends to `ℓ − x` as `μ → 0`.
pub fn mean_local_time_at_exit(x: f64, ell: f64, mu: f64) -> Result<f64> {
    check_interval(x, ell)?;
    if mu.abs() < MU_LIMIT {
        return Ok(ell - x);
    }
    Ok(-(-mu * x).exp() * (-mu * (ell - x)).exp_m1() / mu)
}

/// Mean first passage time of `ℓ` for the reflected process started at `x`:
/// `(ℓ−x)/μ − (e^{−μx} − e^{−μℓ})/μ²`, and `(ℓ² − x²)/2` at `μ = 0`.
pub fn mean_tau_ell(x: f64, ell: f64, mu: f64) -> Result<f64> {
    check_interval(x, ell)?;
    if mu.abs() < MU_LIMIT {
        return Ok(0.5 * (ell * ell - x * x));
    }
    if mu.abs() < MU_SERIES {
        // Σ_{k≥2} (−μ)^{k−2} (ℓ^k − x^k)/k!
        let mut sum = 0.0;
        let mut fact = 1.0;
        let (mut pl, mut px) = (ell, x);
        let mut mpow = 1.0;
        for k in 1..=8 {
            fact *= k as f64;
            if k >= 2 {
                sum += mpow * (pl - px) / fact;
                mpow *= -mu;
            }
            pl *= ell;
            px *= x;
        }
        return Ok(sum);
    }
    let diff = -(-mu * x).exp() * (-mu * (ell - x)).exp_m1();
    Ok((ell - x) / mu - diff / (mu * mu))
}

/// `Φ^±(λ) = √(λ + μ²/4) ± μ/2`.
pub fn phi_plus_minus(lambda: f64, mu: f64) -> (f64, f64) {
    let root = (lambda + 0.25 * mu * mu).sqrt();
    (root + 0.5 * mu, root - 0.5 * mu)
}

/// The closed-form expression attached to the weighted resolvent
/// `E_x[∫_0^{τ_ℓ} e^{−λt − (c+μ/2)γ_t} dt]`:
///
/// `(ℓ−x)/μ + ((1+cℓ)/μ)·(e^{(x−ℓ)Φ⁻} − e^{(ℓ−x)Φ⁺}) / ((c+Φ⁺)e^{ℓΦ⁺} − (c−Φ⁻)e^{ℓΦ⁻})`.
///
/// At `λ = 0, c = 0` it reduces to [`mean_tau_ell`]. For `λ > 0` it does not
/// solve `u'' + μu' − λu = −1`; [`resolvent_exact`] does.
pub fn resolvent_closed_form(lambda: f64, x: f64, ell: f64, mu: f64, c: f64) -> Result<f64> {
    if !(x >= 0.0 && x < ell) {
        return domain(format!("need 0 ≤ x < ℓ, got x={x}, ℓ={ell}"));
    }
    if !(lambda >= 0.0) {
        return domain(format!("λ must be nonnegative, got {lambda}"));
    }
    if mu == 0.0 {
        return Err(Error::Singular("closed form divides by μ = 0".into()));
    }
    let (pp, pm) = phi_plus_minus(lambda, mu);
    let den = (c + pp) * (ell * pp).exp() - (c - pm) * (ell * pm).exp();
    if !den.is_finite() || den.abs() < 1e-300 {
        return Err(Error::Singular(format!("degenerate denominator {den}")));
    }
    let num = ((x - ell) * pm).exp() - ((ell - x) * pp).exp();
    Ok((ell - x) / mu + (1.0 + c * ell) / mu * num / den)
}

/// Solution at `x` of `u'' + μu' − λu = −1` on `[0, ℓ)` with `u'(0) = κu(0)`
/// and `u(ℓ) = 0`, i.e. `E_x[∫_0^{τ_ℓ} e^{−λt − κγ_t} dt]`.
pub fn resolvent_exact(lambda: f64, x: f64, ell: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(x >= 0.0 && x <= ell) {
        return domain(format!("need 0 ≤ x ≤ ℓ, got x={x}, ℓ={ell}"));
    }
    if !(lambda >= 0.0) {
        return domain(format!("λ must be nonnegative, got {lambda}"));
    }
    // u = p + A·f1 + B·f2; each basis function carries (value(x), value(0), slope(0), value(ℓ))
    type Basis = (f64, f64, f64, f64);
    let (part, f1, f2): (Basis, Basis, Basis) = if lambda == 0.0 && mu == 0.0 {
        (
            (-0.5 * x * x, 0.0, 0.0, -0.5 * ell * ell),
            (1.0, 1.0, 0.0, 1.0),
            (x, 0.0, 1.0, ell),
        )
    } else {
        let root = (lambda + 0.25 * mu * mu).sqrt();
        let r1 = -0.5 * mu + root;
        let r2 = -0.5 * mu - root;
        // shift growing exponentials to ℓ to keep them bounded
        let s1 = if r1 > 0.0 { ell } else { 0.0 };
        let s2 = if r2 > 0.0 { ell } else { 0.0 };
        let e = |r: f64, s: f64, z: f64| (r * (z - s)).exp();
        let part = if lambda > 0.0 {
            (1.0 / lambda, 1.0 / lambda, 0.0, 1.0 / lambda)
        } else {
            (-x / mu, 0.0, -1.0 / mu, -ell / mu)
        };
        (
            part,
            (e(r1, s1, x), e(r1, s1, 0.0), r1 * e(r1, s1, 0.0), e(r1, s1, ell)),
            (e(r2, s2, x), e(r2, s2, 0.0), r2 * e(r2, s2, 0.0), e(r2, s2, ell)),
        )
    };
    // boundary rows: slope(0) − κ·value(0) = 0 ; value(ℓ) = 0
    let a11 = f1.2 - kappa * f1.1;
    let a12 = f2.2 - kappa * f2.1;
    let b1 = -(part.2 - kappa * part.1);
    let a21 = f1.3;
    let a22 = f2.3;
    let b2 = -part.3;
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-300 || !det.is_finite() {
        return Err(Error::Singular(format!("boundary system is singular (det = {det})")));
    }
    let a = (b1 * a22 - a12 * b2) / det;
    let b = (a11 * b2 - a21 * b1) / det;
    Ok(part.0 + a * f1.0 + b * f2.0)
}

/// Mean extra time spent at 0 before the first passage of `ℓ` by the sticky
/// process with stickiness `η` and boundary variant `δ ∈ {0, 1}`:
/// `η/(1 + η(1−δ)μ) · (e^{−μx} − e^{−μℓ})/μ`.
pub fn mean_sticky_extra(x: f64, ell: f64, mu: f64, eta: f64, delta: u8) -> Result<f64> {
    if delta > 1 {
        return domain(format!("δ must be 0 or 1, got {delta}"));
    }
    if !(eta >= 0.0) {
        return domain(format!("η must be nonnegative, got {eta}"));
    }
    Ok(sticky_parameter(eta, mu, delta) * mean_local_time_at_exit(x, ell, mu)?)
}

/// `η(δ) = η / (1 + η(1−δ)μ)`.
pub fn sticky_parameter(eta: f64, mu: f64, delta: u8) -> f64 {
    eta / (1.0 + eta * (1.0 - delta as f64) * mu)
}

/// Mean exit time of the sticky edge process, as stated:
/// `(ℓ−x)/μ − (e^{−μx} − e^{−μℓ})(1 − η_ε)/μ²`.
pub fn mean_exit_sticky(x: f64, ell: f64, mu: f64, eta_eps: f64) -> Result<f64> {
    mean_exit_with_factor(x, ell, mu, 1.0 - eta_eps)
}

/// Mean exit time with the holding law's `Φ′(0)` made explicit:
/// `(ℓ−x)/μ − (e^{−μx} − e^{−μℓ})(1 − η_ε·μ·Φ′(0))/μ²`.
///
/// Equals `E_x[τ_ℓ] + η_ε Φ′(0) E_x[γ_{τ_ℓ}]`; coincides with
/// [`mean_exit_sticky`] when `μΦ′(0) = 1`.
pub fn mean_exit_sticky_general(x: f64, ell: f64, mu: f64, eta_eps: f64, phi_prime0: f64) -> Result<f64> {
    if mu.abs() < MU_SERIES {
        return Ok(mean_tau_ell(x, ell, mu)? + eta_eps * phi_prime0 * mean_local_time_at_exit(x, ell, mu)?);
    }
    mean_exit_with_factor(x, ell, mu, 1.0 - eta_eps * mu * phi_prime0)
}

/// The `δ = 0` variant: `(ℓ−x)/μ − (e^{−μx} − e^{−μℓ})(1 − η_ε/(η_ε μ + 1))/μ²`.
pub fn mean_exit_sticky_delta0(x: f64, ell: f64, mu: f64, eta_eps: f64) -> Result<f64> {
    mean_exit_with_factor(x, ell, mu, 1.0 - eta_eps / (eta_eps * mu + 1.0))
}

fn mean_exit_with_factor(x: f64, ell: f64, mu: f64, factor: f64) -> Result<f64> {
    check_interval(x, ell)?;
    if mu == 0.0 {
        return Err(Error::Singular("sticky exit formula divides by μ = 0".into()));
    }
    let diff = -(-mu * x).exp() * (-mu * (ell - x)).exp_m1();
    Ok((ell - x) / mu - diff * factor / (mu * mu))
}

/// Heat kernel of the variance-2 Brownian motion, `e^{−z²/4t}/√(4πt)`.
pub fn heat_kernel(t: f64, z: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

fn check_kernel_args(t: f64, x: f64, y: f64, mu: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) || !(x >= 0.0) || !(y >= 0.0) || !(c >= 0.0) {
        return domain(format!(
            "transition density needs t > 0, x ≥ 0, y ≥ 0, c ≥ 0; got t={t}, x={x}, y={y}, c={c}"
        ));
    }
    let k = c + 0.5 * mu;
    if k < 0.0 {
        return domain(format!("elastic kernel needs c + μ/2 ≥ 0, got {k}"));
    }
    Ok(k)
}

/// `p2(t,x,y) = 2k∫_0^∞ e^{−kw} g(t, w+x+y) dw` with `k = c + μ/2`, in
/// closed form `k·erfcx((a+2kt)/(2√t))·e^{−a²/4t}`, `a = x + y`.
pub fn elastic_correction(t: f64, x: f64, y: f64, mu: f64, c: f64) -> Result<f64> {
    let k = check_kernel_args(t, x, y, mu, c)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let a = x + y;
    let z = (a + 2.0 * k * t) / (2.0 * t.sqrt());
    Ok(k * erfcx(z) * (-a * a / (4.0 * t)).exp())
}

/// `p2` by adaptive quadrature of its integral definition.
pub fn elastic_correction_quadrature(t: f64, x: f64, y: f64, mu: f64, c: f64) -> Result<f64> {
    let k = check_kernel_args(t, x, y, mu, c)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let r = integrate_to_infinity(
        |w| (-k * w).exp() * heat_kernel(t, w + x + y),
        0.0,
        QuadOptions::default(),
    )?;
    Ok(2.0 * k * r.value)
}

/// Sub-probability transition density of the elastic reflected process:
/// `e^{−μ²t/4} e^{μ(y−x)/2} (g(t,x−y) + g(t,x+y) − p2(t,x,y))`.
pub fn transition_density(t: f64, x: f64, y: f64, mu: f64, c: f64) -> Result<f64> {
    let p2 = elastic_correction(t, x, y, mu, c)?;
    let p1 = heat_kernel(t, x - y) + heat_kernel(t, x + y);
    let v = (-0.25 * mu * mu * t + 0.5 * mu * (y - x)).exp() * (p1 - p2);
    Ok(v.max(0.0))
}

/// `∫_0^∞ p(t, x, y) dy`, the probability of surviving the elastic clock.
pub fn survival_probability(t: f64, x: f64, mu: f64, c: f64) -> Result<f64> {
    check_kernel_args(t, x, 0.0, mu, c)?;
    let r = integrate_to_infinity(
        |y| transition_density(t, x, y, mu, c).unwrap_or(f64::NAN),
        0.0,
        QuadOptions::default(),
    )?;
    Ok(r.value)
}

/// `∫_0^y p(t, x, u) du`.
pub fn transition_mass_below(t: f64, x: f64, y: f64, mu: f64, c: f64) -> Result<f64> {
    check_kernel_args(t, x, y, mu, c)?;
    if y <= 0.0 {
        return Ok(0.0);
    }
    let r = crate::quadrature::integrate(
        |u| transition_density(t, x, u, mu, c).unwrap_or(f64::NAN),
        0.0,
        y,
        QuadOptions::default(),
    )?;
    Ok(r.value)
}

/// `P(♯events ≥ n) = exp(−h* Σ_{r ≤ n} σ_r/m_r)` over regions given as
/// `(m_r, σ_r)` in visiting order.
pub fn gr_survival(n: usize, regions: &[(f64, f64)], h_star: f64) -> Result<f64> {
    if n > regions.len() {
        return domain(format!("n = {n} exceeds the {} regions", regions.len()));
    }
    if !(h_star >= 0.0) {
        return domain(format!("h* must be nonnegative, got {h_star}"));
    }
    let mut rate = 0.0;
    for &(m, sigma) in &regions[..n] {
        if !(m > 0.0) || !(sigma > 0.0) {
            return domain(format!("regions need m > 0 and σ > 0, got m={m}, σ={sigma}"));
        }
        rate += sigma / m;
    }
    Ok((-h_star * rate).exp())
}

/// `10^{−n·m̄}` with `m̄` the mean magnitude of the first `n` regions.
pub fn gr_power_law(n: usize, magnitudes: &[f64]) -> Result<f64> {
    if n > magnitudes.len() {
        return domain(format!("n = {n} exceeds the {} regions", magnitudes.len()));
    }
    let total: f64 = magnitudes[..n].iter().sum();
    Ok(10f64.powf(-total))
}

/// `E[τ_0]` from `x`: `x/|μ|` for `μ < 0`; for `μ > 0` the truncated
/// expectation `E[H_x; x < T_μ] = (x/μ)e^{−μx}`; infinite at `μ = 0`.
pub fn mean_tau0(x: f64, mu: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("need x > 0, got {x}"));
    }
    if mu == 0.0 {
        Ok(f64::INFINITY)
    } else if mu < 0.0 {
        Ok(x / mu.abs())
    } else {
        truncated_mean_tau0_pos(x, mu)
    }
}

/// `E[H_x; x < T_μ] = (x/μ)e^{−μx}` for `μ > 0`.
pub fn truncated_mean_tau0_pos(x: f64, mu: f64) -> Result<f64> {
    if !(x > 0.0) || !(mu > 0.0) {
        return domain(format!("need x > 0 and μ > 0, got x={x}, μ={mu}"));
    }
    Ok(x / mu * (-mu * x).exp())
}

/// `E[H_x | x < T_μ] = x/μ` for `μ > 0`.
pub fn conditional_mean_tau0_pos(x: f64, mu: f64) -> Result<f64> {
    if !(x > 0.0) || !(mu > 0.0) {
        return domain(format!("need x > 0 and μ > 0, got x={x}, μ={mu}"));
    }
    Ok(x / mu)
}

/// `E[e^{−λH_ℓ}] = exp(−ℓ(√(λ + μ²/4) − μ/2))` for drift magnitude `μ ≥ 0`.
pub fn laplace_h(lambda: f64, ell: f64, mu: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !(ell > 0.0) {
        return domain(format!("need λ ≥ 0 and ℓ > 0, got λ={lambda}, ℓ={ell}"));
    }
    let (_, minus) = phi_plus_minus(lambda, mu.abs());
    Ok((-ell * minus).exp())
}

/// Density of `H_ℓ` with tempering drift `μ ≥ 0`:
/// `(ℓ/z)·e^{−(ℓ−μz)²/(4z)}/√(4πz)`.
pub fn subordinator_density(z: f64, ell: f64, mu: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let d = ell - mu * z;
    ell / z * (-d * d / (4.0 * z)).exp() / (4.0 * PI * z).sqrt()
}

/// `P(H_ℓ ≤ z)` with tempering drift `μ ≥ 0`.
pub fn subordinator_cdf(z: f64, ell: f64, mu: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let root = 2.0 * z.sqrt();
    let d = ell - mu * z;
    let first = 0.5 * erfc(d / root);
    let q = (ell + mu * z) / root;
    let second = 0.5 * erfcx(q) * (-d * d / (4.0 * z)).exp();
    (first + second).clamp(0.0, 1.0)
}

/// Density of the accumulation time `H^{Φ_r}(h)` with `h ~ Exp(mean m/σ)`.
pub fn tau_e_density(z: f64, m: f64, sigma: f64) -> Result<f64> {
    if !(z > 0.0) || !(m > 0.0) || !(sigma > 0.0) {
        return domain(format!("need z, m, σ > 0; got z={z}, m={m}, σ={sigma}"));
    }
    let rate = sigma / m;
    let r = integrate_to_infinity(
        |h| subordinator_density(z, h, m) * rate * (-h * rate).exp(),
        0.0,
        QuadOptions::default(),
    )?;
    Ok(r.value)
}

/// Distribution function of the accumulation time.
pub fn tau_e_cdf(z: f64, m: f64, sigma: f64) -> Result<f64> {
    if !(m > 0.0) || !(sigma > 0.0) {
        return domain(format!("need m, σ > 0; got m={m}, σ={sigma}"));
    }
    if z <= 0.0 {
        return Ok(0.0);
    }
    let rate = sigma / m;
    let r = integrate_to_infinity(
        |h| subordinator_cdf(z, h, m) * rate * (-h * rate).exp(),
        0.0,
        QuadOptions::default(),
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_tau_ell_examples() {
        assert_relative_eq!(mean_tau_ell(0.0, 1.0, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(mean_tau_ell(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(mean_tau_ell(0.0, 1.0, 0.0).unwrap(), 0.5);
        assert!(mean_tau_ell(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn limits_are_continuous_in_mu() {
        for &mu in &[1e-6, -1e-6, 1e-3, -1e-3, 2e-3] {
            for &(x, ell) in &[(0.0, 1.0), (0.3, 2.0), (1.5, 4.0)] {
                let v = mean_tau_ell(x, ell, mu).unwrap();
                let lim = 0.5 * (ell * ell - x * x);
                assert!(((v - lim) / lim).abs() < 5.0 * mu.abs() * ell + 1e-12, "{mu} {v} {lim}");
                let s = mean_sticky_extra(x, ell, mu, 0.7, 1).unwrap();
                assert_relative_eq!(s, 0.7 * (ell - x), max_relative = 1e-2);
            }
        }
    }

    #[test]
    fn series_and_direct_branches_agree() {
        let a = mean_tau_ell(0.2, 1.5, MU_SERIES * 0.999).unwrap();
        let b = mean_tau_ell(0.2, 1.5, MU_SERIES * 1.001).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn resolvent_zero_lambda_is_mean_exit() {
        for &mu in &[0.3, 1.0, 2.5] {
            for &x in &[0.0, 0.4, 0.9] {
                let a = resolvent_closed_form(0.0, x, 1.0, mu, 0.0).unwrap();
                let b = mean_tau_ell(x, 1.0, mu).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-8);
            }
        }
        assert!(resolvent_closed_form(0.5, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(resolvent_closed_form(0.5, 0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn resolvent_exact_reduces_to_mean_exit() {
        for &mu in &[-1.0, 0.0, 0.5, 1.0] {
            let a = resolvent_exact(0.0, 0.2, 1.0, mu, 0.0).unwrap();
            let b = mean_tau_ell(0.2, 1.0, mu).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        assert!(resolvent_exact(1.0, 1.0, 1.0, 1.0, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn sticky_extra_identities() {
        assert_eq!(mean_sticky_extra(0.0, 1.0, 1.0, 0.0, 1).unwrap(), 0.0);
        let one = mean_sticky_extra(0.2, 1.0, 0.8, 0.5, 1).unwrap();
        let zero = mean_sticky_extra(0.2, 1.0, 0.8, 0.5, 0).unwrap();
        assert_relative_eq!(zero, one / (1.0 + 0.5 * 0.8), epsilon = 1e-15);
        assert!(mean_sticky_extra(0.2, 1.0, 0.8, 0.5, 2).is_err());
    }

    #[test]
    fn sticky_exit_examples() {
        let x = 0.3;
        assert_relative_eq!(
            mean_exit_sticky(x, 1.0, 0.7, 0.0).unwrap(),
            mean_tau_ell(x, 1.0, 0.7).unwrap(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mean_exit_sticky(x, 1.0, 0.7, 1.0).unwrap(),
            (1.0 - x) / 0.7,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mean_exit_sticky_general(x, 1.0, 2.0, 0.6, 0.5).unwrap(),
            mean_exit_sticky(x, 1.0, 2.0, 0.6).unwrap(),
            epsilon = 1e-14
        );
        let d0 = mean_exit_sticky_delta0(x, 1.0, 0.7, 0.4).unwrap();
        let expected = (1.0 - x) / 0.7 - ((-0.7 * x).exp() - (-0.7f64).exp()) * (1.0 - 0.4 / (0.4 * 0.7 + 1.0)) / 0.49;
        assert_relative_eq!(d0, expected, epsilon = 1e-14);
    }

    #[test]
    fn free_kernel_when_no_drift_or_elasticity() {
        for &(t, x, y) in &[(0.5, 0.0, 0.3), (1.0, 0.4, 1.1), (2.0, 1.0, 0.1)] {
            let p = transition_density(t, x, y, 0.0, 0.0).unwrap();
            assert_relative_eq!(p, heat_kernel(t, x - y) + heat_kernel(t, x + y), epsilon = 1e-15);
        }
    }

    #[test]
    fn elastic_correction_closed_form_matches_quadrature() {
        for &(t, x, y, mu, c) in &[
            (0.5, 0.3, 0.2, 0.7, 0.4),
            (1.0, 0.0, 1.0, -0.5, 1.0),
            (0.1, 0.2, 0.05, 2.0, 0.0),
        ] {
            let a = elastic_correction(t, x, y, mu, c).unwrap();
            let b = elastic_correction_quadrature(t, x, y, mu, c).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn reflected_kernel_conserves_mass() {
        for &(t, x, mu) in &[(1.0, 0.0, 1.0), (0.5, 0.3, 0.7), (2.0, 1.0, 0.0)] {
            let s = survival_probability(t, x, mu, 0.0).unwrap();
            assert_relative_eq!(s, 1.0, epsilon = 1e-6);
        }
        assert!(survival_probability(1.0, 0.0, 0.5, 0.4).unwrap() < 1.0);
    }

    #[test]
    fn large_elasticity_approaches_dirichlet_kernel() {
        let (t, x) = (0.5, 0.3);
        for &y in &[0.1, 0.5, 1.0] {
            let p = transition_density(t, x, y, 0.0, 1e7).unwrap();
            let dirichlet = heat_kernel(t, x - y) - heat_kernel(t, x + y);
            assert_relative_eq!(p, dirichlet, max_relative = 1e-4);
        }
    }

    #[test]
    fn kernel_rejects_divergent_regime() {
        assert!(transition_density(1.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(transition_density(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gr_examples() {
        let one = [(1.0, 1.0)];
        assert_eq!(gr_survival(1, &one, 0.0).unwrap(), 1.0);
        assert_relative_eq!(gr_survival(1, &one, 10f64.ln()).unwrap(), 0.1, epsilon = 1e-15);
        let two = [(1.0, 1.0), (2.0, 4.0)];
        assert_relative_eq!(gr_survival(2, &two, 10f64.ln()).unwrap(), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(gr_power_law(2, &[1.0, 2.0]).unwrap(), 1e-3, max_relative = 1e-12);
        assert!(gr_survival(3, &two, 1.0).is_err());
        assert_eq!(gr_survival(0, &two, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn tau0_means() {
        assert_eq!(mean_tau0(1.0, -2.0).unwrap(), 0.5);
        assert_relative_eq!(mean_tau0(1.0, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(mean_tau0(1.0, 0.0).unwrap().is_infinite());
        assert!(mean_tau0(1e-12, -1.0).unwrap() < 1e-11);
        assert_eq!(conditional_mean_tau0_pos(2.0, 4.0).unwrap(), 0.5);
    }

    #[test]
    fn laplace_examples() {
        assert_eq!(laplace_h(0.0, 1.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(laplace_h(4.0, 1.5, 0.0).unwrap(), (-3.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(laplace_h(3.0, 1.0, 2.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn subordinator_cdf_is_integral_of_density() {
        for &(z, ell, mu) in &[(0.5, 1.0, 2.0), (2.0, 1.0, 0.5), (1.0, 1.0, 0.0)] {
            let r =
                crate::quadrature::integrate(|s| subordinator_density(s, ell, mu), 1e-12, z, QuadOptions::default())
                    .unwrap();
            assert_relative_eq!(r.value, subordinator_cdf(z, ell, mu), epsilon = 1e-8);
        }
    }
}
