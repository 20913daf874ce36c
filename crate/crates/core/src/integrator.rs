//! Truncated coset enumeration for integrals over products of `Q_p`.
//!
//! Coordinate `c` ranges over `p^{v_min} Z_p / p^{v_mod} Z_p`; the integrand
//! sees the digit `a_c ∈ [0, p^{v_mod - v_min})` standing for the coset of
//! `x_c = a_c p^{v_min}`, and each point carries weight `Π q^{-v_mod}`.

use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::padic::LocalFieldConfig;

pub const DEFAULT_BUDGET: u128 = 1 << 30;

/// Points per parallel chunk; fixed so results do not depend on the pool size.
const CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntegrationError {
    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("integrand failed: {0}")]
    Integrand(String),
    #[error("empty convergence schedule")]
    EmptySchedule,
    #[error("invalid truncation: v_min={v_min} > v_mod={v_mod}")]
    InvalidTruncation { v_min: i32, v_mod: i32 },
    #[error("need at least one sample")]
    NoSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub v_min: i32,
    pub v_mod: i32,
}

impl Truncation {
    pub fn new(v_min: i32, v_mod: i32) -> Result<Self, IntegrationError> {
        if v_min > v_mod {
            return Err(IntegrationError::InvalidTruncation { v_min, v_mod });
        }
        Ok(Self { v_min, v_mod })
    }

    /// Defaults by ambient size `nr`.
    pub fn default_for(nr: usize) -> Self {
        if nr <= 4 {
            Self { v_min: -2, v_mod: 2 }
        } else {
            Self { v_min: -1, v_mod: 2 }
        }
    }

    pub fn depth(&self) -> u32 {
        (self.v_mod - self.v_min) as u32
    }
}

/// A point of the truncated domain.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub digits: &'a [u64],
    pub strata: &'a [Truncation],
}

pub type IntegrandResult<F> = Result<Complex<F>, String>;

/// Integrand plus its truncated product domain.
pub struct IntegralTask<'a, F> {
    pub strata: Vec<Truncation>,
    pub cfg: LocalFieldConfig,
    pub budget: u128,
    pub integrand: &'a (dyn Fn(Point<'_>) -> IntegrandResult<F> + Sync),
}

impl<'a, F: Float> IntegralTask<'a, F> {
    pub fn new(
        coords: usize,
        trunc: Truncation,
        cfg: LocalFieldConfig,
        integrand: &'a (dyn Fn(Point<'_>) -> IntegrandResult<F> + Sync),
    ) -> Self {
        Self { strata: vec![trunc; coords], cfg, budget: DEFAULT_BUDGET, integrand }
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_truncation(&self, trunc: Truncation) -> Self {
        Self { strata: vec![trunc; self.strata.len()], cfg: self.cfg, budget: self.budget, integrand: self.integrand }
    }

    fn radices(&self) -> Vec<u64> {
        self.strata.iter().map(|t| self.cfg.p().pow(t.depth())).collect()
    }

    /// Total number of cosets, saturating.
    pub fn count(&self) -> u128 {
        self.radices().iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    /// Measure of every coset.
    pub fn weight(&self) -> F {
        let e: i64 = self.strata.iter().map(|t| t.v_mod as i64).sum();
        F::from(self.cfg.q() as f64).unwrap().powi(-(e as i32))
    }
}

/// Neumaier-compensated complex sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSum<F> {
    sum: Complex<F>,
    comp: Complex<F>,
}

impl<F: Float> Default for CompensatedSum<F> {
    fn default() -> Self {
        Self::new()
    }
}

fn two_sum<F: Float>(s: F, x: F, c: &mut F) -> F {
    let t = s + x;
    if s.abs() >= x.abs() {
        *c = *c + ((s - t) + x);
    } else {
        *c = *c + ((x - t) + s);
    }
    t
}

impl<F: Float> CompensatedSum<F> {
    pub fn new() -> Self {
        let z = Complex::new(F::zero(), F::zero());
        Self { sum: z, comp: z }
    }

    #[inline]
    pub fn add(&mut self, x: Complex<F>) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn merge(&mut self, o: &Self) {
        self.add(o.sum);
        self.add(o.comp);
    }

    pub fn value(&self) -> Complex<F> {
        self.sum + self.comp
    }
}

fn digits_of(mut idx: u64, radices: &[u64], out: &mut [u64]) {
    for c in (0..radices.len()).rev() {
        out[c] = idx % radices[c];
        idx /= radices[c];
    }
}

/// Odometer step, last coordinate fastest.
#[inline]
fn advance(digits: &mut [u64], radices: &[u64]) {
    for c in (0..radices.len()).rev() {
        digits[c] += 1;
        if digits[c] < radices[c] {
            return;
        }
        digits[c] = 0;
    }
}

/// Plain sum of the integrand over all points, before weighting.
fn enumerate<F: Float + Send + Sync>(task: &IntegralTask<'_, F>) -> Result<Complex<F>, IntegrationError> {
    let needed = task.count();
    if needed > task.budget {
        return Err(IntegrationError::BudgetExceeded { needed, budget: task.budget });
    }
    let total = needed as u64;
    let radices = task.radices();
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<Result<CompensatedSum<F>, IntegrationError>> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let start = ch * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = vec![0u64; radices.len()];
            digits_of(start, &radices, &mut digits);
            let mut acc = CompensatedSum::new();
            for _ in start..end {
                let v = (task.integrand)(Point { digits: &digits, strata: &task.strata })
                    .map_err(IntegrationError::Integrand)?;
                acc.add(v);
                advance(&mut digits, &radices);
            }
            Ok(acc)
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for p in partial {
        acc.merge(&p?);
    }
    Ok(acc.value())
}

/// Σ over all cosets of integrand × coset measure.
pub fn integrate<F: Float + Send + Sync>(task: &IntegralTask<'_, F>) -> Result<Complex<F>, IntegrationError> {
    Ok(enumerate(task)? * task.weight())
}

/// Ordered truncations with a stabilization tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSchedule {
    pub steps: Vec<Truncation>,
    pub tolerance: f64,
}

impl ConvergenceSchedule {
    /// Each step must widen or keep the domain and refine or keep the modulus,
    /// changing at least one of them.
    pub fn new(steps: Vec<Truncation>, tolerance: f64) -> Result<Self, IntegrationError> {
        if steps.is_empty() {
            return Err(IntegrationError::EmptySchedule);
        }
        for w in steps.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.v_min > a.v_min || b.v_mod < a.v_mod || b == a {
                return Err(IntegrationError::InvalidTruncation { v_min: b.v_min, v_mod: b.v_mod });
            }
        }
        Ok(Self { steps, tolerance })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stabilized<F> {
    pub value: Complex<F>,
    pub converged: bool,
    pub history: Vec<(Truncation, Complex<F>)>,
    pub coset_count: u128,
    /// Set when a later step ran out of budget.
    pub error: Option<IntegrationError>,
}

/// Runs [`integrate`] along the schedule; converged once two consecutive
/// values differ by less than `tolerance * (1 + |value|)`. A single-step
/// schedule converges when that step succeeds.
pub fn stabilize<F: Float + Send + Sync>(
    task: &IntegralTask<'_, F>,
    schedule: &ConvergenceSchedule,
) -> Result<Stabilized<F>, IntegrationError> {
    stabilize_with(schedule, |step| {
        let t = task.with_truncation(step);
        Ok((integrate(&t)?, t.count()))
    })
}

/// [`stabilize`] for callers that rebuild the task at each step; `step`
/// returns the value and the number of cosets it enumerated.
pub fn stabilize_with<F: Float>(
    schedule: &ConvergenceSchedule,
    mut step: impl FnMut(Truncation) -> Result<(Complex<F>, u128), IntegrationError>,
) -> Result<Stabilized<F>, IntegrationError> {
    let mut history: Vec<(Truncation, Complex<F>)> = Vec::new();
    let mut coset_count = 0u128;
    let tol = F::from(schedule.tolerance).unwrap();
    for &tr in &schedule.steps {
        let (v, count) = match step(tr) {
            Ok(x) => x,
            Err(e) => {
                let Some(&(_, last)) = history.last() else {
                    return Err(e);
                };
                return Ok(Stabilized { value: last, converged: false, history, coset_count, error: Some(e) });
            }
        };
        coset_count += count;
        let prev = history.last().map(|h| h.1);
        history.push((tr, v));
        if let Some(prev) = prev {
            if (v - prev).norm() < tol * (F::one() + v.norm()) {
                return Ok(Stabilized { value: v, converged: true, history, coset_count, error: None });
            }
        }
    }
    let value = history.last().expect("nonempty").1;
    let converged = schedule.steps.len() == 1;
    Ok(Stabilized { value, converged, history, coset_count, error: None })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate<F> {
    pub value: Complex<F>,
    pub stderr: F,
    pub samples: u64,
}

/// Uniform sampling of coset tuples. Chunk `k` draws from stream `k` of the
/// seeded generator, so the estimate is independent of the pool size.
pub fn montecarlo<F: Float + Send + Sync>(
    task: &IntegralTask<'_, F>,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate<F>, IntegrationError> {
    if samples == 0 {
        return Err(IntegrationError::NoSamples);
    }
    let radices = task.radices();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Result<(CompensatedSum<F>, CompensatedSum<F>), IntegrationError>> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ch);
            let n = CHUNK.min(samples - ch * CHUNK);
            let mut digits = vec![0u64; radices.len()];
            let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
            for _ in 0..n {
                for (d, &r) in digits.iter_mut().zip(&radices) {
                    *d = rng.gen_range(0..r);
                }
                let v = (task.integrand)(Point { digits: &digits, strata: &task.strata })
                    .map_err(IntegrationError::Integrand)?;
                s1.add(v);
                s2.add(Complex::new(v.norm_sqr(), F::zero()));
            }
            Ok((s1, s2))
        })
        .collect();
    let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
    for p in partial {
        let (a, b) = p?;
        s1.merge(&a);
        s2.merge(&b);
    }
    let nf = F::from(samples).unwrap();
    let mean = s1.value() / nf;
    let var = (s2.value().re / nf - mean.norm_sqr()).max(F::zero());
    let scale = F::from(task.count() as f64).unwrap() * task.weight();
    let stderr = if samples > 1 { (var / F::from(samples - 1).unwrap()).sqrt() * scale } else { F::zero() };
    Ok(MonteCarloEstimate { value: mean * scale, stderr, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::psi_residue;
    use proptest::prelude::*;

    fn cfg(p: u64) -> LocalFieldConfig {
        LocalFieldConfig::new(p).unwrap()
    }

    fn one() -> Complex<f64> {
        Complex::new(1.0, 0.0)
    }

    /// `ψ(x)` for the coset of `x = a p^{v_min}`.
    fn psi_point(pt: Point<'_>, c: usize, p: u64) -> Complex<f64> {
        let t = pt.strata[c];
        if t.v_min >= 0 {
            one()
        } else {
            psi_residue(pt.digits[c] as i128, (-t.v_min) as u32, p)
        }
    }

    fn val_of(pt: Point<'_>, c: usize, p: u64) -> Option<i32> {
        let d = pt.digits[c];
        if d == 0 {
            return None;
        }
        let mut v = 0;
        let mut x = d;
        while x % p == 0 {
            x /= p;
            v += 1;
        }
        Some(pt.strata[c].v_min + v)
    }

    #[test]
    fn psi_over_integers_is_one() {
        let f = |pt: Point<'_>| Ok(psi_point(pt, 0, 2));
        let task = IntegralTask::new(1, Truncation::new(0, 1).unwrap(), cfg(2), &f);
        assert!((integrate(&task).unwrap() - one()).norm() < 1e-15);
    }

    #[test]
    fn psi_over_wider_domain_cancels() {
        let f = |pt: Point<'_>| Ok(psi_point(pt, 0, 2));
        let task = IntegralTask::new(1, Truncation::new(-1, 1).unwrap(), cfg(2), &f);
        assert!(integrate(&task).unwrap().norm() < 1e-15);
    }

    #[test]
    fn absolute_value_series() {
        let p = 2;
        let f = move |pt: Point<'_>| Ok(Complex::new(val_of(pt, 0, p).map_or(0.0, |v| (p as f64).powi(-v)), 0.0));
        let task = IntegralTask::new(1, Truncation::new(0, 1).unwrap(), cfg(p), &f);
        let steps = (1..=24).map(|m| Truncation::new(0, m).unwrap()).collect();
        let st = stabilize(&task, &ConvergenceSchedule::new(steps, 1e-6).unwrap()).unwrap();
        assert!(st.converged);
        assert!((st.value.re - 2.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn stabilize_examples() {
        let c = |_: Point<'_>| Ok(Complex::new(1.0, 0.0));
        let task = IntegralTask::new(1, Truncation::new(0, 1).unwrap(), cfg(3), &c);
        let sched = ConvergenceSchedule::new(vec![Truncation::new(0, 1).unwrap(), Truncation::new(0, 2).unwrap()], 1e-12).unwrap();
        let st = stabilize(&task, &sched).unwrap();
        assert!(st.converged);
        assert!((st.value - one()).norm() < 1e-15);
        // ψ(p^{-1} z) on Z_p
        let g = |pt: Point<'_>| Ok(psi_residue::<f64>(pt.digits[0] as i128, 1, 3));
        let task = IntegralTask::new(1, Truncation::new(0, 1).unwrap(), cfg(3), &g);
        let st = stabilize(&task, &sched).unwrap();
        assert!(st.converged && st.value.norm() < 1e-12);
        assert!(ConvergenceSchedule::new(vec![], 1e-3).is_err());
        assert!(ConvergenceSchedule::new(vec![Truncation::new(-1, 2).unwrap(), Truncation::new(0, 2).unwrap()], 1e-3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let c = |_: Point<'_>| Ok(Complex::new(1.0, 0.0));
        let task = IntegralTask::new(4, Truncation::new(-2, 2).unwrap(), cfg(2), &c).with_budget(1000);
        assert!(matches!(integrate(&task), Err(IntegrationError::BudgetExceeded { needed: 65536, budget: 1000 })));
    }

    #[test]
    fn integrand_errors_propagate() {
        let c = |pt: Point<'_>| if pt.digits[0] == 3 { Err("bad".to_string()) } else { Ok(Complex::new(1.0, 0.0)) };
        let task = IntegralTask::new(1, Truncation::new(0, 2).unwrap(), cfg(2), &c);
        assert_eq!(integrate(&task), Err(IntegrationError::Integrand("bad".into())));
    }

    #[test]
    fn montecarlo_examples() {
        let c = |_: Point<'_>| Ok(Complex::new(2.5, 0.0));
        let task = IntegralTask::new(3, Truncation::new(-1, 1).unwrap(), cfg(2), &c);
        let mc = montecarlo(&task, 5000, 7).unwrap();
        assert!((mc.value - integrate(&task).unwrap()).norm() < 1e-12);
        assert!(mc.stderr < 1e-12);
        // smoke task: 4 coordinates, compared against exhaustive
        let p = 3;
        let f = move |pt: Point<'_>| {
            let s: Complex<f64> = (0..4).map(|c| psi_point(pt, c, p)).sum();
            Ok(s + Complex::new(val_of(pt, 1, p).map_or(0.0, |v| v as f64), 0.0))
        };
        let task = IntegralTask::new(4, Truncation::new(-1, 1).unwrap(), cfg(p), &f);
        let exact = integrate(&task).unwrap();
        let mc = montecarlo(&task, 200_000, 11).unwrap();
        assert!((mc.value - exact).norm() < 3.0 * mc.stderr + 1e-12, "{:?} vs {:?}", mc, exact);
        let again = montecarlo(&task, 200_000, 11).unwrap();
        assert_eq!(mc, again);
        assert!(montecarlo(&task, 0, 1).is_err());
    }

    #[test]
    fn parallel_sum_is_partition_independent() {
        let f = |pt: Point<'_>| {
            let x = pt.digits.iter().fold(0u64, |a, &d| a * 31 + d) as f64;
            Ok(Complex::new((x * 0.37).sin() * 1e8, (x * 0.11).cos()))
        };
        let task = IntegralTask::new(3, Truncation::new(-3, 3).unwrap(), cfg(2), &f);
        let a = integrate(&task).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| integrate(&task).unwrap());
        let mut seq = CompensatedSum::new();
        let radices = task.radices();
        let mut d = vec![0u64; 3];
        for _ in 0..task.count() {
            seq.add(f(Point { digits: &d, strata: &task.strata }).unwrap());
            advance(&mut d, &radices);
        }
        let c = seq.value() * task.weight();
        assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        assert!((a - c).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn f32_integrands() {
        let c = |_: Point<'_>| Ok(Complex::new(1.0f32, 0.0));
        let task = IntegralTask::new(2, Truncation::new(-1, 1).unwrap(), cfg(3), &c);
        assert!((integrate(&task).unwrap().re - 9.0).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let f = move |pt: Point<'_>| Ok(Complex::new(((pt.digits[0] + seed) % 7) as f64, pt.digits[1] as f64));
            let g = move |pt: Point<'_>| Ok(psi_point(pt, 0, 2) * (pt.digits[1] as f64 + 1.0));
            let h = move |pt: Point<'_>| Ok(f(pt)? * a + g(pt)? * b);
            let tr = Truncation::new(-2, 2).unwrap();
            let (tf, tg, th) = (IntegralTask::new(2, tr, cfg(2), &f), IntegralTask::new(2, tr, cfg(2), &g), IntegralTask::new(2, tr, cfg(2), &h));
            let lhs = integrate(&th).unwrap();
            let rhs = integrate(&tf).unwrap() * a + integrate(&tg).unwrap() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn refinement_consistency(vmod in 1i32..4, p in prop::sample::select(vec![2u64, 3])) {
            // ψ(x) · 1[|x| <= p] is invariant under Z_p translation
            let f = move |pt: Point<'_>| {
                let inside = val_of(pt, 0, p).is_none_or(|v| v >= -1);
                Ok(if inside { psi_point(pt, 0, p) + Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) })
            };
            let coarse = IntegralTask::new(1, Truncation::new(-2, vmod).unwrap(), cfg(p), &f);
            let fine = IntegralTask::new(1, Truncation::new(-2, vmod + 1).unwrap(), cfg(p), &f);
            let (a, b) = (integrate(&coarse).unwrap(), integrate(&fine).unwrap());
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }
}
