//! Weight sequences `(gamma_n)` packaged with a certified rate of divergence
//! `theta` and a bound function `M(k) >= max_{i <= k} gamma_i`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rate::{self, Nat, Rat, RateError, RateFn, nat_to_rat, rat_to_string};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("weight scale must be positive, got {0}")]
    NonPositiveScale(String),
    #[error("divergence certificate failed at P = {p}: sum up to theta(P) = {theta} is {sum} < {p}")]
    DivergenceCertificate { p: u64, theta: String, sum: String },
    #[error("divergence certificate at P = {p} needs {theta} terms, beyond the audit cap of {cap}")]
    CertificateDepth { p: u64, theta: String, cap: u64 },
    #[error("bound certificate failed at k = {k}: M(k) = {m} < gamma_{i} = {gamma}")]
    BoundCertificate { k: u64, i: u64, m: String, gamma: String },
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Longest prefix a divergence certificate will actually sum.
pub const CERTIFY_TERM_CAP: u64 = 4_000_000;

/// The three shipped weight families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    /// `gamma_n = c`.
    Constant {
        #[serde(with = "rat_str")]
        c: Rat,
    },
    /// `gamma_n = c * (n + 1)`.
    Linear {
        #[serde(with = "rat_str")]
        c: Rat,
    },
    /// `gamma_n = c / (n + 1)`.
    Harmonic {
        #[serde(with = "rat_str")]
        c: Rat,
    },
}

mod rat_str {
    use super::*;
    use serde::de::Error as DeError;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        rate::parse_rat(&s).map_err(D::Error::custom)
    }
}

impl ScheduleKind {
    fn scale(&self) -> &Rat {
        match self {
            ScheduleKind::Constant { c } | ScheduleKind::Linear { c } | ScheduleKind::Harmonic { c } => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    kind: ScheduleKind,
    theta: RateFn,
    big_m: RateFn,
}

impl WeightSchedule {
    /// Build a schedule with its default divergence rate and weight bound.
    pub fn new(kind: ScheduleKind) -> Result<Self, ScheduleError> {
        if !kind.scale().is_positive() {
            return Err(ScheduleError::NonPositiveScale(rat_to_string(kind.scale())));
        }
        let theta = default_theta(&kind);
        let big_m = default_big_m(&kind);
        Ok(WeightSchedule { kind, theta, big_m })
    }

    /// Build with a user-supplied divergence rate; the caller is expected to
    /// run [`certify_theta`](Self::certify_theta) afterwards.
    pub fn with_theta(kind: ScheduleKind, theta: RateFn) -> Result<Self, ScheduleError> {
        if !kind.scale().is_positive() {
            return Err(ScheduleError::NonPositiveScale(rat_to_string(kind.scale())));
        }
        let big_m = default_big_m(&kind);
        Ok(WeightSchedule { kind, theta, big_m })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn theta(&self) -> &RateFn {
        &self.theta
    }

    pub fn big_m(&self) -> &RateFn {
        &self.big_m
    }

    /// `gamma_n`, exact.
    pub fn gamma(&self, n: &Nat) -> Rat {
        let n1 = nat_to_rat(n) + Rat::one();
        match &self.kind {
            ScheduleKind::Constant { c } => c.clone(),
            ScheduleKind::Linear { c } => c * n1,
            ScheduleKind::Harmonic { c } => c / n1,
        }
    }

    /// Exact partial sum `sum_{n=0}^{upto} gamma_n`.
    pub fn partial_sum(&self, upto: u64) -> Rat {
        let mut sum = Rat::zero();
        for n in 0..=upto {
            sum += self.gamma(&Nat::from(n));
        }
        sum
    }

    /// Exact lower bound on the partial sum: each term is floored to a
    /// multiple of 2^-64 before accumulating, so the result never exceeds
    /// the true sum while staying cheap for millions of terms.
    pub fn partial_sum_lower(&self, upto: u64) -> Rat {
        use num_bigint::BigInt;
        let scale = BigInt::from(1u128 << 64);
        let mut acc = BigInt::zero();
        for n in 0..=upto {
            let g = self.gamma(&Nat::from(n));
            // gammas are positive, so truncated division is a floor
            acc += (g.numer() * &scale) / g.denom();
        }
        Rat::new(acc, scale)
    }

    /// Check `sum_{n=0}^{theta(P)} gamma_n >= P` for every `P <= max_p`.
    /// Small prefixes are summed exactly; longer ones use the floored
    /// lower bound, which can only under-report. Prefixes beyond
    /// [`CERTIFY_TERM_CAP`] are refused rather than sampled.
    pub fn certify_theta(&self, max_p: u64) -> Result<(), ScheduleError> {
        use num_traits::ToPrimitive;
        for p in 0..=max_p {
            let t = self.theta.eval(&Nat::from(p))?;
            let t64 = t.to_u64().filter(|t| *t <= CERTIFY_TERM_CAP).ok_or(
                ScheduleError::CertificateDepth { p, theta: t.to_string(), cap: CERTIFY_TERM_CAP },
            )?;
            let sum =
                if t64 <= 10_000 { self.partial_sum(t64) } else { self.partial_sum_lower(t64) };
            if sum < nat_to_rat(&Nat::from(p)) {
                return Err(ScheduleError::DivergenceCertificate {
                    p,
                    theta: t.to_string(),
                    sum: rat_to_string(&sum),
                });
            }
        }
        Ok(())
    }

    /// Check `M(k) >= max_{0 <= i <= k} gamma_i` for every `k <= max_k`, exact.
    pub fn certify_big_m(&self, max_k: u64) -> Result<(), ScheduleError> {
        for k in 0..=max_k {
            let m = self.big_m.eval_rat(&Nat::from(k))?;
            for i in 0..=k {
                let g = self.gamma(&Nat::from(i));
                if m < g {
                    return Err(ScheduleError::BoundCertificate {
                        k,
                        i,
                        m: rat_to_string(&m),
                        gamma: rat_to_string(&g),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Default rate of divergence per family.
///
/// constant(c): theta(P) = ceil(P/c) monus 1, so sum = c*(theta+1) >= P.
/// linear(c):   theta(P) = sqrt_ceil(2P/c), so sum = c*(t+1)(t+2)/2 >= c*t^2/2 >= P.
/// harmonic(c): theta(P) = 2^ceil(2P/c); the first 2^m + 1 harmonic terms sum
///              to at least 1 + m/2, hence the series reaches P by then.
pub fn default_theta(kind: &ScheduleKind) -> RateFn {
    let var = RateFn::var();
    match kind {
        ScheduleKind::Constant { c } => {
            let inv = RateFn::constant_rat(c.recip()).expect("positive");
            inv.mul(&var).ceil().monus_fn(&RateFn::constant(1))
        }
        ScheduleKind::Linear { c } => {
            let two_over_c = RateFn::constant_rat(Rat::from_integer(2.into()) / c).expect("positive");
            two_over_c.mul(&var).sqrt_ceil()
        }
        ScheduleKind::Harmonic { c } => {
            let two_over_c = RateFn::constant_rat(Rat::from_integer(2.into()) / c).expect("positive");
            RateFn::constant(2).pow(&two_over_c.mul(&var).ceil())
        }
    }
}

/// Default weight bound `M` per family (rational-valued).
pub fn default_big_m(kind: &ScheduleKind) -> RateFn {
    match kind {
        ScheduleKind::Constant { c } | ScheduleKind::Harmonic { c } => {
            RateFn::constant_rat(c.clone()).expect("positive")
        }
        ScheduleKind::Linear { c } => RateFn::constant_rat(c.clone())
            .expect("positive")
            .mul(&RateFn::var().add(&RateFn::constant(1))),
    }
}

/// The `f^M` transform as a free function.
pub fn max_prefix(f: &RateFn) -> RateFn {
    f.max_prefix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::{nat, rat};

    fn constant(n: i64, d: i64) -> WeightSchedule {
        WeightSchedule::new(ScheduleKind::Constant { c: rat(n, d) }).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(constant(1, 1).gamma(&nat(7)), rat(1, 1));
        let lin = WeightSchedule::new(ScheduleKind::Linear { c: rat(1, 2) }).unwrap();
        assert_eq!(lin.gamma(&nat(3)), rat(2, 1));
        let harm = WeightSchedule::new(ScheduleKind::Harmonic { c: rat(1, 1) }).unwrap();
        assert_eq!(harm.gamma(&nat(4)), rat(1, 5));
    }

    #[test]
    fn constant_theta_values() {
        let ws = constant(1, 1);
        assert_eq!(ws.theta().eval(&nat(3)).unwrap(), nat(2));
        assert_eq!(ws.theta().eval(&nat(0)).unwrap(), nat(0));
    }

    #[test]
    fn harmonic_theta_reaches_two() {
        let ws = WeightSchedule::new(ScheduleKind::Harmonic { c: rat(1, 1) }).unwrap();
        use num_traits::ToPrimitive;
        let t = ws.theta().eval(&nat(2)).unwrap().to_u64().unwrap();
        assert!(ws.partial_sum(t) >= rat(2, 1));
    }

    #[test]
    fn theta_certificates_hold_to_100() {
        for ws in [
            constant(1, 1),
            constant(3, 2),
            WeightSchedule::new(ScheduleKind::Linear { c: rat(1, 2) }).unwrap(),
            WeightSchedule::new(ScheduleKind::Linear { c: rat(2, 1) }).unwrap(),
        ] {
            ws.certify_theta(100).unwrap();
            ws.certify_big_m(100).unwrap();
        }
        // harmonic theta grows as 2^(2P); P = 10 already sums 2^20 terms and
        // larger P hit the term cap
        let harm = WeightSchedule::new(ScheduleKind::Harmonic { c: rat(1, 1) }).unwrap();
        harm.certify_theta(10).unwrap();
        harm.certify_big_m(100).unwrap();
        assert!(matches!(
            harm.certify_theta(20),
            Err(ScheduleError::CertificateDepth { .. })
        ));
    }

    #[test]
    fn non_positive_scale_rejected() {
        assert!(WeightSchedule::new(ScheduleKind::Constant { c: rat(0, 1) }).is_err());
        assert!(WeightSchedule::new(ScheduleKind::Linear { c: rat(-1, 2) }).is_err());
    }

    #[test]
    fn theta_monotone_flags() {
        for ws in [
            constant(2, 3),
            WeightSchedule::new(ScheduleKind::Linear { c: rat(1, 1) }).unwrap(),
            WeightSchedule::new(ScheduleKind::Harmonic { c: rat(1, 2) }).unwrap(),
        ] {
            assert!(ws.theta().is_monotone());
            assert!(ws.big_m().is_monotone());
        }
    }
}
