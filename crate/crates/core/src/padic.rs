//! The local field `Q_p` seen through exact rationals.
//!
//! Haar measures: additive `dz` with `vol(Z_p) = 1`; multiplicative `d^x b`
//! with `vol(Z_p^x) = 1`, so `∫_{|b|<=1} g(b) d^x b = Σ_{k>=0} g(p^k)` for
//! functions of `|b|` only.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::BigRat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("stratum would need {needed} representatives, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("invalid stratum: v_min={v_min} > v_mod={v_mod}")]
    InvalidStratum { v_min: i32, v_mod: i32 },
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Residue characteristic and residue-field size (`q = p` for `Q_p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalFieldConfig {
    p: u64,
}

impl LocalFieldConfig {
    pub fn new(p: u64) -> Result<Self, PadicError> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn uniformizer(&self) -> BigRat {
        BigRat::from_integer(BigInt::from(self.p))
    }

    /// `p^k` as an exact rational; `k` may be negative.
    pub fn power(&self, k: i64) -> BigRat {
        let base = BigInt::from(self.p).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            BigRat::from_integer(base)
        } else {
            BigRat::new(BigInt::one(), base)
        }
    }
}

/// `v_p`, with `+∞` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::Infinite) => Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

fn int_valuation<T: Integer + Clone + FromPrimitive>(x: &T, p: u64) -> (i64, T) {
    let pp = T::from_u64(p).expect("prime fits the integer type");
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&pp);
        if !r.is_zero() {
            break;
        }
        x = q;
        v += 1;
    }
    (v, x)
}

/// Scalars with a `p`-adic valuation. Implemented for every `Ratio<T>`, so
/// exact big rationals and machine-word rationals share the same code paths.
pub trait PadicValued {
    fn valuation(&self, p: u64) -> Valuation;
}

impl<T> PadicValued for Ratio<T>
where
    T: Integer + Clone + FromPrimitive,
{
    fn valuation(&self, p: u64) -> Valuation {
        if self.numer().is_zero() {
            return Valuation::Infinite;
        }
        let (a, _) = int_valuation(self.numer(), p);
        let (b, _) = int_valuation(self.denom(), p);
        Valuation::Finite(a - b)
    }
}

/// Exact `q`-power `q^exponent` with a rational exponent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QPower {
    pub exponent: BigRat,
}

impl QPower {
    pub fn new(exponent: BigRat) -> Self {
        Self { exponent }
    }

    pub fn one() -> Self {
        Self::new(BigRat::zero())
    }

    /// `|x|^e` for `v_p(x) = v`: `q^{-v e}`.
    pub fn abs_pow(v: i64, e: &BigRat) -> Self {
        Self::new(-(e * BigRat::from_integer(BigInt::from(v))))
    }

    pub fn eval<F: Float>(&self, q: u64) -> F {
        let e = crate::exactsym::rat_to_float::<F>(&self.exponent);
        F::from(q).expect("q as float").powf(e)
    }
}

impl Mul for QPower {
    type Output = QPower;
    fn mul(self, o: QPower) -> QPower {
        QPower::new(self.exponent + o.exponent)
    }
}

impl fmt::Display for QPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q^({})", self.exponent)
    }
}

/// A rational number regarded as an element of `Q_p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalElement {
    pub value: BigRat,
    pub config: LocalFieldConfig,
}

impl LocalElement {
    pub fn new(value: BigRat, config: LocalFieldConfig) -> Self {
        Self { value, config }
    }

    pub fn from_int(v: i64, config: LocalFieldConfig) -> Self {
        Self::new(BigRat::from_integer(BigInt::from(v)), config)
    }

    pub fn valuation(&self) -> Valuation {
        self.value.valuation(self.config.p)
    }

    /// `|x| = q^{-v(x)}`; zero for `x = 0`.
    pub fn abs<F: Float>(&self) -> F {
        match self.valuation() {
            Valuation::Infinite => F::zero(),
            Valuation::Finite(v) => F::from(self.config.q() as f64).unwrap().powi(-(v as i32)),
        }
    }

    /// Exact phase `λ(x) ∈ [0,1)` of the unramified character: the `p`-power
    /// fractional part of `x`.
    pub fn character_phase(&self) -> BigRat {
        character_phase(&self.value, self.config.p)
    }

    /// `ψ(x) = exp(2πi λ(x))`.
    pub fn additive_character<F: Float>(&self) -> Complex<F> {
        phase_to_unit(&self.character_phase())
    }
}

impl Add for LocalElement {
    type Output = LocalElement;
    fn add(self, o: LocalElement) -> LocalElement {
        LocalElement::new(self.value + o.value, self.config)
    }
}

impl Mul for LocalElement {
    type Output = LocalElement;
    fn mul(self, o: LocalElement) -> LocalElement {
        LocalElement::new(self.value * o.value, self.config)
    }
}

/// `λ(x)`: write `x = a / (p^k m)` with `gcd(m, p) = 1`; then
/// `λ(x) = (a m^{-1} mod p^k) / p^k`, and `λ(x) = 0` when `v_p(x) >= 0`.
pub fn character_phase(x: &BigRat, p: u64) -> BigRat {
    let v = match x.valuation(p) {
        Valuation::Infinite => return BigRat::zero(),
        Valuation::Finite(v) => v,
    };
    if v >= 0 {
        return BigRat::zero();
    }
    let k = (-v) as u32;
    let pk = BigInt::from(p).pow(k);
    let (_, m) = int_valuation(x.denom(), p);
    let minv = mod_inverse(&m, &pk);
    let a = x.numer().mod_floor(&pk);
    let lam = (a * minv).mod_floor(&pk);
    BigRat::new(lam, pk)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

pub fn phase_to_unit<F: Float>(phase: &BigRat) -> Complex<F> {
    // reduce the fraction first so that large numerators stay accurate
    let frac = phase - phase.floor();
    let t = frac.to_f64().unwrap_or(0.0);
    let ang = F::from(2.0 * PI * t).unwrap();
    Complex::new(ang.cos(), ang.sin())
}

/// `ψ(a / p^k)` for an integer numerator; the fast path used by the integrator.
#[inline]
pub fn psi_residue<F: Float>(numerator: i128, k: u32, p: u64) -> Complex<F> {
    if k == 0 {
        return Complex::new(F::one(), F::zero());
    }
    let pk = (p as i128).pow(k);
    let r = numerator.rem_euclid(pk);
    if r == 0 {
        return Complex::new(F::one(), F::zero());
    }
    let ang = F::from(2.0 * PI * (r as f64) / (pk as f64)).unwrap();
    Complex::new(ang.cos(), ang.sin())
}

/// Coset representatives of `p^{v_min} Z_p / p^{v_mod} Z_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub v_min: i32,
    pub v_mod: i32,
    pub reps: Vec<BigRat>,
    /// Additive Haar measure of each coset, `q^{-v_mod}`.
    pub weight: BigRat,
}

pub fn stratum_size(v_min: i32, v_mod: i32, cfg: LocalFieldConfig) -> Result<u128, PadicError> {
    if v_min > v_mod {
        return Err(PadicError::InvalidStratum { v_min, v_mod });
    }
    Ok((cfg.p as u128).saturating_pow((v_mod - v_min) as u32))
}

pub fn stratum_reps(v_min: i32, v_mod: i32, cfg: LocalFieldConfig, budget: u128) -> Result<Stratum, PadicError> {
    let count = stratum_size(v_min, v_mod, cfg)?;
    if count > budget {
        return Err(PadicError::BudgetExceeded { needed: count, budget });
    }
    let base = cfg.power(v_min as i64);
    let reps = (0..count as u64).map(|a| &base * BigInt::from(a)).collect();
    Ok(Stratum { v_min, v_mod, reps, weight: cfg.power(-(v_mod as i64)) })
}

/// Sign-insensitive helper used by tests and reports.
pub fn abs_rat(x: &BigRat) -> BigRat {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsym::rat;
    use proptest::prelude::*;

    fn cfg(p: u64) -> LocalFieldConfig {
        LocalFieldConfig::new(p).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(LocalElement::from_int(18, cfg(3)).valuation(), Valuation::Finite(2));
        assert_eq!(LocalElement::new(rat(5, 8), cfg(2)).valuation(), Valuation::Finite(-3));
        assert_eq!(LocalElement::from_int(0, cfg(5)).valuation(), Valuation::Infinite);
        assert!(Valuation::Finite(1000) < Valuation::Infinite);
    }

    #[test]
    fn small_machine_rationals_share_the_trait() {
        let x: Ratio<i64> = Ratio::new(-12, 7);
        assert_eq!(x.valuation(2), Valuation::Finite(2));
        assert_eq!(x.valuation(7), Valuation::Finite(-1));
    }

    #[test]
    fn composite_prime_rejected() {
        assert_eq!(LocalFieldConfig::new(6), Err(PadicError::NotPrime(6)));
        assert!(LocalFieldConfig::new(1).is_err());
    }

    #[test]
    fn character_examples() {
        let c = LocalElement::new(rat(1, 2), cfg(2)).additive_character::<f64>();
        assert!((c - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        for p in [2, 3, 5, 7] {
            let c = LocalElement::from_int(7, cfg(p)).additive_character::<f64>();
            assert_eq!(c, Complex::new(1.0, 0.0));
        }
        let c = LocalElement::new(rat(5, 4), cfg(2)).additive_character::<f64>();
        assert!((c - Complex::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn phase_uses_prime_to_p_inverse() {
        // 1/6 in Q_3: 1/(3*2), 2^{-1} = 2 mod 3 -> λ = 2/3
        assert_eq!(character_phase(&rat(1, 6), 3), rat(2, 3));
        // 1/6 in Q_2: 3^{-1} = 1 mod 2 -> λ = 1/2
        assert_eq!(character_phase(&rat(1, 6), 2), rat(1, 2));
    }

    #[test]
    fn stratum_examples() {
        let s = stratum_reps(0, 1, cfg(2), 1 << 20).unwrap();
        assert_eq!(s.reps, vec![rat(0, 1), rat(1, 1)]);
        assert_eq!(s.weight, rat(1, 2));
        let s = stratum_reps(-1, 0, cfg(3), 1 << 20).unwrap();
        assert_eq!(s.reps, vec![rat(0, 1), rat(1, 3), rat(2, 3)]);
        assert_eq!(s.weight, rat(1, 1));
        let s = stratum_reps(0, 0, cfg(5), 1 << 20).unwrap();
        assert_eq!(s.reps, vec![rat(0, 1)]);
        assert_eq!(s.weight, rat(1, 1));
        assert!(matches!(stratum_reps(0, 10, cfg(2), 100), Err(PadicError::BudgetExceeded { .. })));
        assert!(matches!(stratum_reps(2, 1, cfg(2), 100), Err(PadicError::InvalidStratum { .. })));
    }

    #[test]
    fn orthogonality_on_strata() {
        for p in [2u64, 3, 5] {
            for k in 1..=3 {
                let s = stratum_reps(0, k, cfg(p), 1 << 20).unwrap();
                let w = s.weight.to_f64().unwrap();
                let mut acc = Complex::new(0.0f64, 0.0);
                let mut triv = 0.0;
                for r in &s.reps {
                    let x = LocalElement::new(r * cfg(p).power(-(k as i64)), cfg(p));
                    acc += x.additive_character::<f64>() * w;
                    triv += w;
                }
                assert!(acc.norm() < 1e-12, "p={p} k={k}: {acc}");
                assert!((triv - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psi_residue_agrees_with_exact_phase() {
        for p in [2u64, 3] {
            for k in 0..4u32 {
                for a in -20i128..20 {
                    let x = BigRat::new(BigInt::from(a), BigInt::from(p).pow(k));
                    let exact: Complex<f64> = phase_to_unit(&character_phase(&x, p));
                    let fast: Complex<f64> = psi_residue(a, k, p);
                    assert!((exact - fast).norm() < 1e-13);
                }
            }
        }
    }

    fn arb_rat() -> impl Strategy<Value = BigRat> {
        (-500i64..500, 1i64..200).prop_map(|(a, b)| rat(a, b))
    }

    proptest! {
        #[test]
        fn character_is_additive_exactly(x in arb_rat(), y in arb_rat(), pi in 0usize..3) {
            let p = [2u64, 3, 5][pi];
            let lhs = character_phase(&(&x + &y), p);
            let sum = character_phase(&x, p) + character_phase(&y, p);
            let rhs = &sum - sum.floor();
            prop_assert_eq!(lhs.clone(), rhs);
            let a: Complex<f64> = phase_to_unit(&lhs);
            let b: Complex<f64> = phase_to_unit::<f64>(&character_phase(&x, p)) * phase_to_unit::<f64>(&character_phase(&y, p));
            prop_assert!((a - b).norm() < 1e-12);
        }

        #[test]
        fn absolute_value_is_multiplicative_and_ultrametric(x in arb_rat(), y in arb_rat(), pi in 0usize..3) {
            let p = [2u64, 3, 5][pi];
            let c = cfg(p);
            let ex = LocalElement::new(x.clone(), c);
            let ey = LocalElement::new(y.clone(), c);
            let prod = ex.clone() * ey.clone();
            let sum = ex.clone() + ey.clone();
            let (ax, ay) = (ex.abs::<f64>(), ey.abs::<f64>());
            prop_assert!((prod.abs::<f64>() - ax * ay).abs() <= 1e-12 * (1.0 + ax * ay));
            prop_assert!(sum.abs::<f64>() <= ax.max(ay) * (1.0 + 1e-12));
        }
    }
}
