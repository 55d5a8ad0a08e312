//! The quantitative functionals attached to the proximal point algorithm:
//! liminf modulus, value convergence rate, uniform closedness and Fejer
//! moduli, the approximate fixed-point modulus Phi, and the metastability
//! rates Psi and Omega. Everything here is exact big-integer/rational
//! arithmetic; floats never enter.

use num_traits::One;
use thiserror::Error;

use crate::rate::{
    self, Nat, Rat, RateError, RateFn, as_scan_index, ceil_to_nat, monus, nat_to_rat,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuliError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("bound b must be positive, got {0}")]
    NonPositiveBound(String),
}

/// The quantitative hypotheses of the main theorem: a bound `b` on the
/// distance from the start to some minimizer, a certified divergence rate
/// `theta`, a weight bound `M`, and a modulus of total boundedness `alpha`.
#[derive(Debug, Clone)]
pub struct BoundContext {
    pub b: Rat,
    pub theta: RateFn,
    pub big_m: RateFn,
    pub alpha: RateFn,
}

impl BoundContext {
    pub fn new(b: Rat, theta: RateFn, big_m: RateFn, alpha: RateFn) -> Result<Self, ModuliError> {
        if !num_traits::Signed::is_positive(&b) {
            return Err(ModuliError::NonPositiveBound(rate::rat_to_string(&b)));
        }
        Ok(BoundContext { b, theta, big_m, alpha })
    }
}

/// Modulus of liminf for `d(x_n, x_{n+1})`:
/// `Delta_b(k, L) = ceil(b^2 (k+1)^2) + L monus 1`.
pub fn delta_liminf(b: &Rat, k: &Nat, l: &Nat) -> Nat {
    let k1 = nat_to_rat(&(k + 1u32));
    let lead = ceil_to_nat(&(b * b * &k1 * &k1));
    monus(&(lead + l), &Nat::one())
}

/// Rate of convergence of `f(x_n)` to `min f`:
/// `beta_{b,theta}(k) = theta^M(ceil(b^2 (k+1) / 2)) + 1`.
pub fn beta_rate(b: &Rat, theta: &RateFn, k: &Nat) -> Result<Nat, ModuliError> {
    let k1 = nat_to_rat(&(k + 1u32));
    let arg = ceil_to_nat(&(b * b * k1 / Rat::from_integer(2.into())));
    Ok(theta.max_prefix().eval(&arg)? + 1u32)
}

/// Uniform closedness moduli: `(delta_F, omega_F)(k) = (2k+1, 4k+3)`.
pub fn closedness_moduli(k: &Nat) -> (Nat, Nat) {
    let two_k = k * 2u32;
    (&two_k + 1u32, two_k * 2u32 + 3u32)
}

/// Uniform Fejer monotonicity modulus: `chi(n,m,r) = max(n+m-1, m(r+1))`.
pub fn fejer_modulus(n: &Nat, m: &Nat, r: &Nat) -> Nat {
    monus(&(n + m), &Nat::one()).max(m * (r + 1u32))
}

/// Approximate fixed-point modulus:
/// `Phi(k) = ceil(b^2 (k+1)^2) + beta_{b,theta}(ceil(2 (k+1)^2 M(k)) - 1)`.
pub fn approx_point_modulus(ctx: &BoundContext, k: &Nat) -> Result<Nat, ModuliError> {
    let k1 = nat_to_rat(&(k + 1u32));
    let lead = ceil_to_nat(&(&ctx.b * &ctx.b * &k1 * &k1));
    let m_k = ctx.big_m.eval_rat(k)?;
    let inner = ceil_to_nat(&(Rat::from_integer(2.into()) * &k1 * &k1 * m_k));
    let beta = beta_rate(&ctx.b, &ctx.theta, &monus(&inner, &Nat::one()))?;
    Ok(lead + beta)
}

/// `chi_g^M(n, r) = max_{i <= n} max(i + g(i) - 1, g(i)(r+1))`.
///
/// For monotone `g` both inner expressions are nondecreasing in `i`, so the
/// sup is attained at `i = n`; otherwise an explicit scan runs, refused
/// above the scan threshold.
pub fn chi_g_sup(g: &RateFn, n: &Nat, r: &Nat) -> Result<Nat, ModuliError> {
    let at = |i: &Nat| -> Result<Nat, ModuliError> {
        let gi = g.eval(i)?;
        Ok(monus(&(i + &gi), &Nat::one()).max(&gi * (r + 1u32)))
    };
    if g.is_monotone() {
        return at(n);
    }
    let limit = as_scan_index(&nat_to_rat(n)).map_err(ModuliError::Rate)?;
    let mut best = Nat::from(0u32);
    for i in 0..=limit {
        best = best.max(at(&Nat::from(i))?);
    }
    Ok(best)
}

/// `chitilde_g^M(n, r) = max(2k+1, chi_g^M(n, r))` — the closedness-adjusted
/// variant used by Omega. `k` is the embedded constant of the family.
pub fn chi_tilde_sup(k: &Nat, g: &RateFn, n: &Nat, r: &Nat) -> Result<Nat, ModuliError> {
    Ok((k * 2u32 + 1u32).max(chi_g_sup(g, n, r)?))
}

fn iterations(alpha: &RateFn, arg: &Nat) -> Result<u64, ModuliError> {
    use num_traits::ToPrimitive;
    let count = alpha.eval(arg)?;
    count
        .to_u64()
        .ok_or_else(|| ModuliError::Rate(RateError::TooManyIterations(count.to_string())))
}

/// Rate of metastability `Psi(k, g)`: the recursion
/// `Psi_0(0) = 0`, `Psi_0(n+1) = Phi(chi_g^M(Psi_0(n), 4k+3))`,
/// unrolled `alpha(4k+3)` times.
pub fn psi_rate(ctx: &BoundContext, k: &Nat, g: &RateFn) -> Result<Nat, ModuliError> {
    let r = k * 4u32 + 3u32;
    let count = iterations(&ctx.alpha, &r)?;
    let mut v = Nat::from(0u32);
    for _ in 0..count {
        v = approx_point_modulus(ctx, &chi_g_sup(g, &v, &r)?)?;
    }
    Ok(v)
}

/// Rate `Omega(k, g)`: the recursion
/// `Omega_0(0) = 0`, `Omega_0(n+1) = Phi(chitilde_g^M(Omega_0(n), 8k+8))`,
/// unrolled `alpha(8k+7)` times.
pub fn omega_rate(ctx: &BoundContext, k: &Nat, g: &RateFn) -> Result<Nat, ModuliError> {
    let iter_arg = k * 8u32 + 7u32;
    let r = k * 8u32 + 8u32;
    let count = iterations(&ctx.alpha, &iter_arg)?;
    let mut v = Nat::from(0u32);
    for _ in 0..count {
        v = approx_point_modulus(ctx, &chi_tilde_sup(k, g, &v, &r)?)?;
    }
    Ok(v)
}
