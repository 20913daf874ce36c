//! Scenario runner: the Lemma/Corollary checks, the unramified computation,
//! the two Whittaker identities and the intermediate integrals of their
//! proofs, each evaluated by brute-force integration and compared with a
//! closed form or with its neighbour in the chain.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedforms::{
    alpha_factor, alpha_j_factor, delta_borel, lfactor, rhs_main, s_prime, theta_whittaker,
    unramified_vector, ClosedFormError, SatakeParameters, SpectralPoint, TheoremKind,
};
use crate::exactsym::{rat, ExponentExpr};
use crate::integrator::{
    integrate, montecarlo, stabilize_with, ConvergenceSchedule, IntegralTask, IntegrationError, Point, Truncation,
    DEFAULT_BUDGET,
};
use crate::iwasawa::{iwasawa, FactorTemplate, FastValuator, IwasawaError, ModulusCharacter, UnramifiedSection, MAX_FAST};
use crate::matgroups::{
    build_subgroup, character_positions, elementary, proof_element, torus_t0, weyl_long, weyl_wj, CharacterKind,
    GroupError, Matrix, Position, ProofElementKind, SubgroupKind, TorusPoint,
};
use crate::padic::{psi_residue, LocalElement, LocalFieldConfig, PadicError, QPower};
use crate::BigRat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Iwasawa(#[from] IwasawaError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Padic(#[from] PadicError),
}

// ---------------------------------------------------------------------------
// integral descriptors

/// `scalar · ∫ f(F_1 F_2 ... F_k) ψ(Σ c_i x_i) dx` over the coordinates of
/// the unipotent factors.
#[derive(Debug, Clone)]
pub struct IntegralSpec {
    pub label: String,
    pub templates: Vec<FactorTemplate>,
    /// `(coordinate, coefficient)` pairs summed inside `ψ`.
    pub character: Vec<(usize, i64)>,
    pub section: UnramifiedSection,
    pub scalar: QPower,
    /// Per-coordinate valuation shift induced by the torus to its right.
    pub scales: Vec<i64>,
    /// Raise of the lower end of the window for coordinates of outer
    /// integrations, so that inner integrals see the wider domain.
    pub shrink: Vec<i32>,
    /// How far below the base window an outer coordinate must reach
    /// (`None`: the largest inner scale).
    pub reach: Vec<Option<i32>>,
    /// Valuation an inner coordinate's window must reach down to.
    pub floor: Vec<Option<i32>>,
}

impl IntegralSpec {
    /// Per-coordinate domains for the base window `trunc`, shifted by the
    /// coordinate's scale. Coordinates under the character and those of
    /// outer integrations take the union of the base and shifted windows;
    /// outer ones start `shrink` steps higher and extend down by their reach.
    /// Inner entries reach down to products of entries composing to them.
    pub fn strata(&self, trunc: Truncation) -> Vec<Truncation> {
        let n = self.coordinate_count();
        let is_outer = |c: usize| self.shrink.get(c).copied().unwrap_or(0) > 0;
        let inner = (0..n).filter(|&c| !is_outer(c)).map(|c| self.scales.get(c).copied().unwrap_or(0)).max().unwrap_or(0);
        let mut out: Vec<Truncation> = (0..n)
            .map(|c| {
                let e = self.scales.get(c).copied().unwrap_or(0) as i32;
                let lo = (trunc.v_min + self.shrink.get(c).copied().unwrap_or(0)).min(trunc.v_mod);
                let hi = trunc.v_mod;
                let charged = self.character.iter().any(|&(k, _)| k == c);
                if !charged && !is_outer(c) {
                    let floor = self.floor.get(c).copied().flatten().unwrap_or(i32::MAX);
                    return Truncation { v_min: (lo + e).min(floor).min(hi + e - 1), v_mod: hi + e };
                }
                let mut v_min = lo.min(lo + e);
                if is_outer(c) {
                    let reach = self.reach.get(c).copied().flatten().unwrap_or(inner.max(0) as i32);
                    v_min = v_min.min(lo - reach);
                }
                Truncation { v_min, v_mod: hi.max(hi + e) }
            })
            .collect();
        // an entry of a unipotent factor also receives products of entries
        // composing to it
        let mut first = 0;
        for t in &self.templates {
            let FactorTemplate::Unipotent(pos) = t else { continue };
            let mut order: Vec<usize> = (0..pos.len()).collect();
            order.sort_by_key(|&k| pos[k].col as i64 - pos[k].row as i64);
            for &k in &order {
                let c = first + k;
                if is_outer(c) {
                    continue;
                }
                for (i, a) in pos.iter().enumerate() {
                    for (j, b) in pos.iter().enumerate() {
                        if a.row == pos[k].row && a.col == b.row && b.col == pos[k].col {
                            let lower = out[first + i].v_min + out[first + j].v_min;
                            if lower < out[c].v_min {
                                out[c].v_min = lower.min(out[c].v_mod - 1);
                            }
                        }
                    }
                }
            }
            first += pos.len();
        }
        out
    }

    /// Total coset count at the base window.
    pub fn count(&self, trunc: Truncation, p: u64) -> u128 {
        self.strata(trunc).iter().fold(1u128, |acc, t| acc.saturating_mul((p as u128).saturating_pow(t.depth())))
    }

    pub fn coordinate_count(&self) -> usize {
        self.templates
            .iter()
            .map(|t| match t {
                FactorTemplate::Unipotent(p) => p.len(),
                FactorTemplate::Fixed(_) => 0,
            })
            .sum()
    }

    pub fn size(&self) -> usize {
        match self.templates.first() {
            Some(FactorTemplate::Fixed(m)) => m.size(),
            _ => 0,
        }
    }
}

/// Builder for factor lists.
#[derive(Debug, Clone, Default)]
struct Factors {
    templates: Vec<FactorTemplate>,
    character: Vec<(usize, i64)>,
    shrink: Vec<i32>,
    reach: Vec<Option<i32>>,
    floor: Vec<Option<i32>>,
    next: usize,
}

impl Factors {
    fn fixed(mut self, m: Matrix<BigRat>) -> Self {
        self.templates.push(FactorTemplate::Fixed(m));
        self
    }

    /// Unipotent factor; `chars` lists character positions with coefficients.
    fn unipotent(mut self, pos: Vec<Position>, chars: &[(Position, i64)]) -> Self {
        for (k, p) in pos.iter().enumerate() {
            for (q, c) in chars {
                if q == p {
                    self.character.push((self.next + k, *c));
                }
            }
        }
        self.next += pos.len();
        self.shrink.resize(self.next, 0);
        self.reach.resize(self.next, None);
        self.floor.resize(self.next, None);
        if !pos.is_empty() {
            self.templates.push(FactorTemplate::Unipotent(pos));
        }
        self
    }

    /// Unipotent factor integrated outside the preceding ones.
    fn outer(mut self, pos: Vec<Position>, chars: &[(Position, i64)]) -> Self {
        let first = self.next;
        self = self.unipotent(pos, chars);
        for s in &mut self.shrink[first..] {
            *s = 1;
        }
        self
    }

    /// [`Factors::outer`] with explicit reaches.
    fn outer_reach(mut self, pos: Vec<Position>, chars: &[(Position, i64)], reach: Vec<i32>) -> Self {
        let first = self.next;
        self = self.outer(pos, chars);
        for (r, x) in self.reach[first..].iter_mut().zip(reach) {
            *r = Some(x);
        }
        self
    }

    /// Lowers the window of the inner coordinates at `pos` to `v`.
    fn floor_at(mut self, pos: &[Position], v: i32) -> Self {
        let mut c = 0;
        for t in &self.templates {
            if let FactorTemplate::Unipotent(ps) = t {
                for q in ps {
                    if pos.contains(q) {
                        self.floor[c] = Some(v);
                    }
                    c += 1;
                }
            }
        }
        self
    }

    fn build(self, label: impl Into<String>, section: UnramifiedSection, scalar: QPower, p: u64) -> IntegralSpec {
        let scales = coordinate_scales(&self.templates, p);
        IntegralSpec {
            label: label.into(),
            templates: self.templates,
            character: self.character,
            section,
            scalar,
            scales,
            shrink: self.shrink,
            reach: self.reach,
            floor: self.floor,
        }
    }
}

/// For each coordinate at `(i, j)`, `v(d_i) - v(d_j)` where `d` is the
/// Iwasawa torus of the product of the fixed factors to its right.
fn coordinate_scales(templates: &[FactorTemplate], p: u64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut right: Option<Matrix<BigRat>> = None;
    let mut per_factor: Vec<Vec<i64>> = Vec::new();
    for t in templates.iter().rev() {
        match t {
            FactorTemplate::Fixed(f) => {
                right = Some(match right {
                    None => f.clone(),
                    Some(r) => f.mul_ref(&r),
                });
            }
            FactorTemplate::Unipotent(pos) => {
                let d = match &right {
                    Some(r) => iwasawa(r, p).map(|d| d.torus_valuations).unwrap_or_else(|_| vec![0; r.size()]),
                    None => vec![0; pos.iter().map(|q| q.row.max(q.col) + 1).max().unwrap_or(0)],
                };
                per_factor.push(pos.iter().map(|q| d[q.row] - d[q.col]).collect());
            }
        }
    }
    for v in per_factor.into_iter().rev() {
        out.extend(v);
    }
    out
}

/// How an integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    Exhaustive,
    Montecarlo { samples: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub converged: bool,
    pub coset_count: u128,
    pub stderr: Option<f64>,
    pub history: Vec<(Truncation, Complex64)>,
}

fn psi_of(pt: &Point<'_>, character: &[(usize, i64)], p: u64) -> Complex64 {
    if character.is_empty() {
        return Complex64::one();
    }
    let bmin = character.iter().map(|&(c, _)| pt.strata[c].v_min).min().unwrap_or(0);
    if bmin >= 0 {
        return Complex64::one();
    }
    let mut num = 0i128;
    for &(c, k) in character {
        let s = (pt.strata[c].v_min - bmin) as u32;
        num += k as i128 * pt.digits[c] as i128 * (p as i128).pow(s);
    }
    psi_residue(num, (-bmin) as u32, p)
}

/// One truncation step of `spec`.
fn evaluate_step(
    spec: &IntegralSpec,
    trunc: Truncation,
    cfg: LocalFieldConfig,
    budget: u128,
    mc: Option<(u64, u64)>,
) -> Result<(Complex64, u128, Option<f64>), VerifyError> {
    let coords = spec.coordinate_count();
    let p = cfg.p();
    let q = cfg.q();
    let scalar = spec.scalar.eval::<f64>(q);
    let m = spec.size();
    let strata = spec.strata(trunc);
    let bases: Vec<i32> = strata.iter().map(|t| t.v_min).collect();
    let fast = if m <= MAX_FAST {
        let max_digit = strata.iter().map(|t| p.saturating_pow(t.depth())).max().unwrap_or(1).saturating_sub(1);
        FastValuator::new(spec.templates.clone(), bases.clone(), cfg, max_digit).ok()
    } else {
        None
    };
    let section = &spec.section;
    let integrand = |pt: Point<'_>| -> Result<Complex64, String> {
        let mut vals = [0i64; 64];
        match &fast {
            Some(fv) => fv.valuations_or_exact(pt.digits, &mut vals[..m]).map_err(|e| e.to_string())?,
            None => {
                let g = exact_matrix(&spec.templates, pt.digits, &bases, cfg);
                let d = iwasawa(&g, p).map_err(|e| e.to_string())?;
                vals[..m].copy_from_slice(&d.torus_valuations);
            }
        }
        let f = section.eval_valuations(&vals[..m], q);
        if f == 0.0 {
            return Ok(Complex64::zero());
        }
        Ok(psi_of(&pt, &spec.character, p) * f)
    };
    let mut task = IntegralTask::new(coords, trunc, cfg, &integrand).with_budget(budget);
    task.strata = strata;
    match mc {
        None => {
            let v = integrate(&task)?;
            Ok((v * scalar, task.count(), None))
        }
        Some((samples, seed)) => {
            let est = montecarlo(&task, samples, seed)?;
            Ok((est.value * scalar, samples as u128, Some(est.stderr * scalar)))
        }
    }
}

fn exact_matrix(templates: &[FactorTemplate], digits: &[u64], bases: &[i32], cfg: LocalFieldConfig) -> Matrix<BigRat> {
    let m = match &templates[0] {
        FactorTemplate::Fixed(f) => f.size(),
        FactorTemplate::Unipotent(_) => unreachable!("first factor is fixed"),
    };
    let mut g = Matrix::identity(m);
    let mut next = 0;
    for t in templates {
        match t {
            FactorTemplate::Fixed(f) => g = g.mul_ref(f),
            FactorTemplate::Unipotent(pos) => {
                let mut u = Matrix::identity(m);
                for q in pos {
                    u.set(q.row, q.col, cfg.power(bases[next] as i64) * BigRat::from_integer(digits[next].into()));
                    next += 1;
                }
                g = g.mul_ref(&u);
            }
        }
    }
    g
}

/// Evaluates `spec` along `schedule` (exhaustive) or at its last step
/// (Monte Carlo).
pub fn evaluate(
    spec: &IntegralSpec,
    cfg: LocalFieldConfig,
    schedule: &ConvergenceSchedule,
    mode: Mode,
    seed: u64,
    budget: u128,
) -> Result<Evaluation, VerifyError> {
    match mode {
        Mode::Exhaustive => {
            let mut err = None;
            let st = stabilize_with(schedule, |tr| {
                evaluate_step(spec, tr, cfg, budget, None).map(|(v, c, _)| (v, c)).map_err(|e| match e {
                    VerifyError::Integration(ie) => ie,
                    other => {
                        err = Some(other.clone());
                        IntegrationError::Integrand(other.to_string())
                    }
                })
            });
            let st = match st {
                Ok(s) => s,
                Err(e) => return Err(err.unwrap_or(VerifyError::Integration(e))),
            };
            Ok(Evaluation {
                value: st.value,
                converged: st.converged,
                coset_count: st.coset_count,
                stderr: None,
                history: st.history,
            })
        }
        Mode::Montecarlo { samples } => {
            let tr = *schedule.steps.last().expect("nonempty schedule");
            let (v, c, se) = evaluate_step(spec, tr, cfg, budget, Some((samples, seed)))?;
            Ok(Evaluation { value: v, converged: true, coset_count: c, stderr: se, history: vec![(tr, v)] })
        }
    }
}

// ---------------------------------------------------------------------------
// checkpoints

/// The named integrals of the unfolding and of the Whittaker reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointLabel {
    /// `∫_{V_r} ∫_{U^0} f(w u v t_0) ψ_U(u)`.
    Local7,
    /// `∫_{U^1} f(w u t_0) ψ_U(u)`.
    Local8,
    /// `∫_{U^3} f_W(u_3 w_0 t_0 w_0^{-1})`.
    Local11,
    /// `α(t) ∫_{U^3} f_W(w_0 t_0 w_0^{-1} u_3)`.
    Local13,
    /// `α(t) f_W(w_0 t_0 w_0^{-1})`.
    Local16,
    /// `∫_{V_r} ∫_{U^0} f(w u v t_0) ψ_U(u) ψ^{-1}_{V_r}(v)`.
    Whit11,
    /// `∫_{U^0} f(w u δ_0 t_0) ψ_U(u)`.
    Whit2,
    /// `α(t) ∫_{U^3} f_W(w_0 t_0 w_0^{-1} u_3 δ_1(t))`.
    I1,
    /// `α_j(t) ∫_{U_{n,j}} f_W(t_j u) ψ_{U_{n,j}}(u)`.
    Ij(usize),
    /// `α_2(t) ∫_{U^3} f_W(t_2 u_3) ψ_{U^3}(u_3)`.
    Whit5,
    /// `α_{j-1}(t) ∫_{U_{n,j-1,2}} f_W(t_{j-1} u δ_{j-1}(t)) ψ_{U_{n,j-1}}(u)`.
    Whit6(usize),
    /// `α_j(t) ∫_{U_{n,j-1,2}} f_W(t_j u) ψ_{U_{n,j}}(u)`.
    Whit7(usize),
}

impl fmt::Display for CheckpointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Local7 => write!(f, "local7"),
            Self::Local8 => write!(f, "local8"),
            Self::Local11 => write!(f, "local11"),
            Self::Local13 => write!(f, "local13"),
            Self::Local16 => write!(f, "local16"),
            Self::Whit11 => write!(f, "whit11"),
            Self::Whit2 => write!(f, "whit2"),
            Self::I1 => write!(f, "I_1"),
            Self::Ij(j) => write!(f, "I_{j}"),
            Self::Whit5 => write!(f, "whit5"),
            Self::Whit6(j) => write!(f, "whit6[j={j}]"),
            Self::Whit7(j) => write!(f, "whit7[j={j}]"),
        }
    }
}

impl std::str::FromStr for CheckpointLabel {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        let bad = || VerifyError::InvalidScenario(format!("unknown checkpoint label {s}"));
        let idx = |t: &str| t.parse::<usize>().map_err(|_| bad());
        Ok(match s {
            "local7" => Self::Local7,
            "local8" => Self::Local8,
            "local11" => Self::Local11,
            "local13" => Self::Local13,
            "local16" => Self::Local16,
            "whit11" => Self::Whit11,
            "whit2" => Self::Whit2,
            "I_1" | "i1" => Self::I1,
            "whit5" => Self::Whit5,
            _ => {
                if let Some(j) = s.strip_prefix("I_").or_else(|| s.strip_prefix('i')) {
                    Self::Ij(idx(j)?)
                } else if let Some(j) = s.strip_prefix("whit6:").or_else(|| s.strip_prefix("whit6[j=").and_then(|t| t.strip_suffix(']'))) {
                    Self::Whit6(idx(j)?)
                } else if let Some(j) = s.strip_prefix("whit7:").or_else(|| s.strip_prefix("whit7[j=").and_then(|t| t.strip_suffix(']'))) {
                    Self::Whit7(idx(j)?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// A checkpoint integral together with its change-of-variables bookkeeping.
#[derive(Debug, Clone)]
pub struct ProofCheckpoint {
    pub label: CheckpointLabel,
    pub spec: IntegralSpec,
    /// Jacobian recorded when this integral is derived from its predecessor,
    /// with the factor it should equal.
    pub jacobian: Option<JacobianCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobianCheck {
    /// `q`-exponent of the product of `|h_i / h_j|` over the moved coordinates.
    pub recorded: String,
    pub expected: String,
    pub exact_match: bool,
}

fn jacobian_check(recorded: QPower, expected: QPower) -> JacobianCheck {
    JacobianCheck { recorded: recorded.to_string(), expected: expected.to_string(), exact_match: recorded == expected }
}

/// `Π |h_row / h_col|` over the positions, for `u = h u' h^{-1}`.
pub fn conjugation_jacobian(h_vals: &[i64], positions: &[Position]) -> QPower {
    let e: i64 = positions.iter().map(|p| h_vals[p.row] - h_vals[p.col]).sum();
    QPower::new(BigRat::from_integer((-e).into()))
}

fn u0_character(n: usize, r: usize) -> Result<Vec<(Position, i64)>, GroupError> {
    Ok(character_positions(CharacterKind::PsiU, n, r, None)?.into_iter().map(|p| (p, 1)).collect())
}

fn u2_character(n: usize, r: usize) -> Result<Vec<(Position, i64)>, GroupError> {
    Ok(character_positions(CharacterKind::PsiU2, n, r, None)?.into_iter().map(|p| (p, 1)).collect())
}

fn diag_vals(m: &Matrix<BigRat>, p: u64) -> Vec<i64> {
    (0..m.size())
        .map(|i| crate::padic::PadicValued::valuation(m.get(i, i), p).finite().expect("invertible diagonal"))
        .collect()
}

/// Builds the integral for `label` at the torus point `t`.
pub fn checkpoint(label: CheckpointLabel, n: usize, r: usize, t: &TorusPoint, cfg: LocalFieldConfig) -> Result<ProofCheckpoint, VerifyError> {
    if t.len() != r {
        return Err(VerifyError::InvalidScenario(format!("torus has {} entries, expected {r}", t.len())));
    }
    let m = n * r;
    let p = cfg.p();
    let w: Matrix<BigRat> = weyl_long(n, r)?;
    let wj: Matrix<BigRat> = weyl_wj(n, r)?;
    let section = UnramifiedSection::cover_model(n, m);
    let t0 = torus_t0(t, n, r)?;
    let big_t = proof_element(ProofElementKind::W0T0W0Inv, t, n, r, None)?;
    let u0 = build_subgroup(SubgroupKind::U0, n, r, None)?.free_positions();
    let u2 = build_subgroup(SubgroupKind::U2, n, r, None)?.free_positions();
    let u3 = build_subgroup(SubgroupKind::U3, n, r, None)?.free_positions();
    let vr = build_subgroup(SubgroupKind::Vr, n, r, None)?.free_positions();
    let psi_u = u0_character(n, r)?;
    let psi_u2 = u2_character(n, r)?;
    let psi_vr_inv: Vec<(Position, i64)> = (1..r).map(|i| (Position::one_based(i, i + 1), -1)).collect();
    let alpha = alpha_factor(t, n, r, cfg)?;
    let need_thm = |what: &str| -> Result<(), VerifyError> {
        if r != n - 1 {
            return Err(VerifyError::InvalidScenario(format!("{what} is defined for r = n-1")));
        }
        Ok(())
    };
    let mut jacobian = None;
    let spec = match label {
        CheckpointLabel::Local7 | CheckpointLabel::Whit11 => {
            let vchar = if label == CheckpointLabel::Whit11 { psi_vr_inv.clone() } else { Vec::new() };
            // the character on V_r shifts its paired U^0 entries by units
            let paired: Vec<Position> = vchar.iter().map(|(q, _)| Position { row: q.col, col: r + q.row }).collect();
            Factors::default()
                .fixed(w)
                .unipotent(u0, &psi_u)
                .outer_reach(vr.clone(), &vchar, v_reach(&vr, t, p))
                .fixed(t0)
                .floor_at(&paired, 0)
                .build(label.to_string(), section, QPower::one(), p)
        }
        CheckpointLabel::Local8 => {
            let u1 = build_subgroup(SubgroupKind::U1, n, r, None)?.free_positions();
            Factors::default().fixed(w).unipotent(u1, &psi_u).fixed(t0).build(label.to_string(), section, QPower::one(), p)
        }
        CheckpointLabel::Local11 => Factors::default()
            .fixed(wj)
            .unipotent(u2, &psi_u2)
            .outer(u3, &[])
            .fixed(big_t)
            .build(label.to_string(), section, QPower::one(), p),
        CheckpointLabel::Local13 => {
            jacobian = Some(jacobian_check(conjugation_jacobian(&diag_vals(&big_t, p), &u3), alpha.clone()));
            Factors::default()
                .fixed(wj)
                .unipotent(u2, &psi_u2)
                .fixed(big_t)
                .outer(u3, &[])
                .build(label.to_string(), section, alpha, p)
        }
        CheckpointLabel::Local16 => {
            Factors::default().fixed(wj).unipotent(u2, &psi_u2).fixed(big_t).build(label.to_string(), section, alpha, p)
        }
        CheckpointLabel::Whit2 => {
            need_thm("whit2")?;
            let d0 = proof_element(ProofElementKind::Delta0, t, n, r, None)?;
            Factors::default()
                .fixed(w)
                .unipotent(u0, &psi_u)
                .fixed(d0.mul_ref(&t0))
                .build(label.to_string(), section, QPower::one(), p)
        }
        CheckpointLabel::I1 => {
            need_thm("I_1")?;
            let d1 = proof_element(ProofElementKind::Delta1, t, n, r, None)?;
            Factors::default()
                .fixed(wj)
                .unipotent(u2, &psi_u2)
                .fixed(big_t)
                .outer(u3, &[])
                .fixed(d1)
                .build(label.to_string(), section, alpha, p)
        }
        CheckpointLabel::Whit5 => {
            need_thm("whit5")?;
            let t2 = proof_element(ProofElementKind::TJ, t, n, r, Some(2.min(n - 1)))?;
            // ψ(Σ_{i=2}^{n-1} Y_{i,i-1}[1,3])
            let chars: Vec<(Position, i64)> = if n >= 3 {
                (2..n).map(|i| (crate::matgroups::y_pos(n, i, i - 1, 1, 3), 1)).collect()
            } else {
                Vec::new()
            };
            // toral part of δ_1(t): diag(B_{2,1}, ..., B_{2,n-1})
            let h = torus_h2(t, n, p);
            let a2 = alpha_j_factor(t, n, 2.min(n - 1), cfg)?;
            jacobian = Some(jacobian_check(alpha.clone() * conjugation_jacobian(&h, &u3), a2.clone()));
            Factors::default()
                .fixed(wj)
                .unipotent(u2, &psi_u2)
                .fixed(t2)
                .outer(u3, &chars)
                .build(label.to_string(), section, a2, p)
        }
        CheckpointLabel::Ij(j) => {
            need_thm("I_j")?;
            if !(2..=n - 1).contains(&j) {
                return Err(VerifyError::InvalidScenario(format!("I_j needs 2 <= j <= n-1, got {j}")));
            }
            let tj = proof_element(ProofElementKind::TJ, t, n, r, Some(j))?;
            let unj = build_subgroup(SubgroupKind::Unj, n, r, Some(j))?.free_positions();
            let chars: Vec<(Position, i64)> =
                character_positions(CharacterKind::PsiUnj, n, r, Some(j))?.into_iter().map(|q| (q, 1)).collect();
            Factors::default()
                .fixed(wj)
                .unipotent(u2, &psi_u2)
                .fixed(tj)
                .outer(unj, &chars)
                .build(label.to_string(), section, alpha_j_factor(t, n, j, cfg)?, p)
        }
        CheckpointLabel::Whit6(j) | CheckpointLabel::Whit7(j) => {
            need_thm("whit6/whit7")?;
            if !(3..=n - 1).contains(&j) {
                return Err(VerifyError::InvalidScenario(format!("whit6/whit7 need 3 <= j <= n-1, got {j}")));
            }
            let dom = build_subgroup(SubgroupKind::Unj2, n, r, Some(j))?.free_positions();
            let (jt, jc) = if matches!(label, CheckpointLabel::Whit6(_)) { (j - 1, j - 1) } else { (j, j) };
            let tj = proof_element(ProofElementKind::TJ, t, n, r, Some(jt))?;
            let chars: Vec<(Position, i64)> =
                character_positions(CharacterKind::PsiUnj, n, r, Some(jc))?.into_iter().map(|q| (q, 1)).collect();
            let mut f = Factors::default().fixed(wj).unipotent(u2, &psi_u2).fixed(tj).outer(dom, &chars);
            if matches!(label, CheckpointLabel::Whit6(_)) {
                f = f.fixed(proof_element(ProofElementKind::DeltaJm1, t, n, r, Some(j))?);
            }
            f.build(label.to_string(), section, alpha_j_factor(t, n, jt, cfg)?, p)
        }
    };
    Ok(ProofCheckpoint { label, spec, jacobian })
}

/// `V_r` coordinate `(i, j)` pairs with `X_{1,2}[j, i]`, whose support
/// reaches `|a_j|^{-1}`.
fn v_reach(vr: &[Position], t: &TorusPoint, p: u64) -> Vec<i32> {
    let v = t.valuations(p);
    vr.iter().map(|q| v[q.col].max(0) as i32).collect()
}

/// Valuations of `diag(B_{2,1}, ..., B_{2,n-1})`, the toral part of `δ_1(t)`.
fn torus_h2(t: &TorusPoint, n: usize, p: u64) -> Vec<i64> {
    let v = t.valuations(p);
    let r = n - 1;
    let mut h = vec![0i64; n * r];
    if n >= 3 {
        // B_{2,1} = diag(1, a_2, I)
        h[1] = v[1];
        // B_{2,i} = diag(a_i^{-1}, a_{i+1}, I) for 2 <= i <= n-2
        for i in 2..=n - 2 {
            h[(i - 1) * n] = -v[i - 1];
            h[(i - 1) * n + 1] = v[i];
        }
        // B_{2,n-1} = diag(a_{n-1}^{-1}, I)
        h[(n - 2) * n] = -v[n - 2];
    }
    h
}

/// `W(h) = ∫_{U^0} f(w_J w_0 u h) ψ_U(u) du`.
pub fn w_spec(h: &Matrix<BigRat>, n: usize, r: usize, p: u64) -> Result<IntegralSpec, VerifyError> {
    if h.size() != n * r {
        return Err(GroupError::SizeMismatch { expected: n * r, got: h.size() }.into());
    }
    let u0 = build_subgroup(SubgroupKind::U0, n, r, None)?.free_positions();
    Ok(Factors::default()
        .fixed(weyl_long(n, r)?)
        .unipotent(u0, &u0_character(n, r)?)
        .fixed(h.clone())
        .build("W", UnramifiedSection::cover_model(n, n * r), QPower::one(), p))
}

/// `f_W(h) = ∫_{U^2} f(w_J u_2 h) ψ_{U^2}(u_2) du_2`.
pub fn fw_spec(h: &Matrix<BigRat>, n: usize, r: usize, p: u64) -> Result<IntegralSpec, VerifyError> {
    if h.size() != n * r {
        return Err(GroupError::SizeMismatch { expected: n * r, got: h.size() }.into());
    }
    let u2 = build_subgroup(SubgroupKind::U2, n, r, None)?.free_positions();
    Ok(Factors::default()
        .fixed(weyl_wj(n, r)?)
        .unipotent(u2, &u2_character(n, r)?)
        .fixed(h.clone())
        .build("f_W", UnramifiedSection::cover_model(n, n * r), QPower::one(), p))
}

fn single_schedule(trunc: Truncation) -> ConvergenceSchedule {
    ConvergenceSchedule::new(vec![trunc], 0.0).expect("one step")
}

/// `W(h)` at a single truncation.
pub fn eval_w(h: &Matrix<BigRat>, n: usize, r: usize, trunc: Truncation, cfg: LocalFieldConfig) -> Result<Complex64, VerifyError> {
    Ok(evaluate(&w_spec(h, n, r, cfg.p())?, cfg, &single_schedule(trunc), Mode::Exhaustive, 0, DEFAULT_BUDGET)?.value)
}

/// `f_W(h)` at a single truncation.
pub fn eval_fw(h: &Matrix<BigRat>, n: usize, r: usize, trunc: Truncation, cfg: LocalFieldConfig) -> Result<Complex64, VerifyError> {
    Ok(evaluate(&fw_spec(h, n, r, cfg.p())?, cfg, &single_schedule(trunc), Mode::Exhaustive, 0, DEFAULT_BUDGET)?.value)
}

// ---------------------------------------------------------------------------
// scenarios and reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    LemmaSimple1,
    Cor1,
    Prop2,
    Thm1,
    Thm2,
    CheckpointChain,
    Support,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LemmaSimple1 => "lemma_simple1",
            Self::Cor1 => "cor1",
            Self::Prop2 => "prop2",
            Self::Thm1 => "thm1",
            Self::Thm2 => "thm2",
            Self::CheckpointChain => "checkpoint_chain",
            Self::Support => "support",
        })
    }
}

/// One verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub n: usize,
    pub r: usize,
    pub prime: u64,
    pub schedule: ConvergenceSchedule,
    /// `χ_i^n(p)`; defaults to [`SatakeParameters::default_numeric`].
    pub chi_n: Option<Vec<Complex64>>,
    /// Spectral point `s`; defaults to [`SpectralPoint::default_for`].
    pub s: Option<Complex64>,
    /// Torus valuations (`thm1`, `thm2`, `checkpoint_chain`).
    pub torus: Vec<i64>,
    pub seed: u64,
    pub mode: Mode,
    pub tolerance: f64,
    /// Total degree of the torus truncation (`prop2`).
    pub k_max: u32,
    /// Coset budget for the whole scenario.
    pub budget: u128,
    /// `ε ∈ {0, -1}` (`lemma_simple1`).
    pub epsilon: i64,
    /// `h(a)` with `a = p^{a_exp}` (`lemma_simple1`).
    pub a_exp: i64,
    /// Integrals of the chain, in order (`checkpoint_chain`).
    pub labels: Vec<CheckpointLabel>,
    /// Rational shift `(num, den)` added to `s'` (`prop2` negative control).
    pub s_prime_shift: Option<(i64, i64)>,
    /// Number of extra random translates (`cor1`) or patterns (`support`).
    pub samples: usize,
}

impl Scenario {
    /// A scenario of `kind` with default parameters.
    pub fn new(kind: ScenarioKind, n: usize, r: usize, prime: u64) -> Self {
        let steps = vec![Truncation { v_min: -1, v_mod: 0 }, Truncation { v_min: -1, v_mod: 1 }];
        Self {
            name: format!("{kind}({n},{r})"),
            kind,
            n,
            r,
            prime,
            schedule: ConvergenceSchedule { steps, tolerance: 1e-9 },
            chi_n: None,
            s: None,
            torus: Vec::new(),
            seed: 1,
            mode: Mode::Exhaustive,
            tolerance: 1e-6,
            k_max: 6,
            budget: 1 << 26,
            epsilon: 0,
            a_exp: 0,
            labels: Vec::new(),
            s_prime_shift: None,
            samples: 0,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_schedule(mut self, steps: &[(i32, i32)]) -> Self {
        self.schedule.steps = steps.iter().map(|&(a, b)| Truncation { v_min: a, v_mod: b }).collect();
        self
    }

    pub fn with_torus(mut self, vals: &[i64]) -> Self {
        self.torus = vals.to_vec();
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |m: String| Err(VerifyError::InvalidScenario(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.r < 1 {
            return bad(format!("r must be >= 1, got {}", self.r));
        }
        LocalFieldConfig::new(self.prime)?;
        ConvergenceSchedule::new(self.schedule.steps.clone(), self.schedule.tolerance)?;
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        match self.kind {
            ScenarioKind::Thm1 if self.r >= self.n => return bad("thm1 requires r<n".into()),
            ScenarioKind::Thm2 if self.r < self.n => return bad("thm2 requires r>=n".into()),
            ScenarioKind::LemmaSimple1 if !matches!(self.epsilon, 0 | -1) => return bad("epsilon must be 0 or -1".into()),
            ScenarioKind::LemmaSimple1 if self.a_exp < 0 => return bad("h(a) needs |a| <= 1".into()),
            _ => {}
        }
        if matches!(self.kind, ScenarioKind::Thm1 | ScenarioKind::Thm2 | ScenarioKind::CheckpointChain) {
            if self.torus.len() != self.r {
                return bad(format!("torus needs {} valuations, got {}", self.r, self.torus.len()));
            }
            if self.torus.iter().any(|&v| v < 0 || v % self.n as i64 != 0) {
                return bad("torus valuations must be nonnegative multiples of n".into());
            }
        }
        if let Some(chi) = &self.chi_n {
            if chi.len() != self.r {
                return bad(format!("expected {} Satake values, got {}", self.r, chi.len()));
            }
        }
        if matches!(self.kind, ScenarioKind::CheckpointChain) && self.labels.is_empty() {
            return bad("checkpoint_chain needs labels".into());
        }
        Ok(())
    }

    fn cfg(&self) -> Result<LocalFieldConfig, VerifyError> {
        Ok(LocalFieldConfig::new(self.prime)?)
    }

    fn satake(&self) -> Result<SatakeParameters, VerifyError> {
        let sp = match &self.chi_n {
            Some(c) => SatakeParameters::new(self.n, self.r, c.clone())?,
            None => SatakeParameters::default_numeric(self.n, self.r),
        };
        if !sp.general_position() {
            return Err(VerifyError::InvalidScenario("Satake values are not in general position".into()));
        }
        Ok(sp)
    }

    fn spectral(&self) -> SpectralPoint {
        let q = self.prime;
        match self.s {
            Some(s) => SpectralPoint::new(s, q),
            None => SpectralPoint::default_for(q),
        }
    }

    fn params(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("kind".into(), self.kind.to_string());
        m.insert("n".into(), self.n.to_string());
        m.insert("r".into(), self.r.to_string());
        m.insert("prime".into(), self.prime.to_string());
        m.insert(
            "schedule".into(),
            self.schedule.steps.iter().map(|t| format!("({},{})", t.v_min, t.v_mod)).collect::<Vec<_>>().join(","),
        );
        m.insert("seed".into(), self.seed.to_string());
        m.insert(
            "mode".into(),
            match self.mode {
                Mode::Exhaustive => "exhaustive".into(),
                Mode::Montecarlo { samples } => format!("montecarlo:{samples}"),
            },
        );
        m.insert("tolerance".into(), format!("{:e}", self.tolerance));
        m.insert("budget".into(), self.budget.to_string());
        match self.kind {
            ScenarioKind::LemmaSimple1 => {
                m.insert("epsilon".into(), self.epsilon.to_string());
                m.insert("a".into(), format!("p^{}", self.a_exp));
            }
            ScenarioKind::Prop2 => {
                m.insert("k_max".into(), self.k_max.to_string());
                let sp = self.satake().map(|s| s.chi_n).unwrap_or_default();
                m.insert("chi_n".into(), sp.iter().map(fmt_complex).collect::<Vec<_>>().join(","));
                m.insert("s".into(), fmt_complex(&self.spectral().s));
                if let Some((a, b)) = self.s_prime_shift {
                    m.insert("s_prime_shift".into(), format!("{a}/{b}"));
                }
            }
            ScenarioKind::CheckpointChain => {
                m.insert("labels".into(), self.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
            }
            _ => {}
        }
        if !self.torus.is_empty() {
            m.insert("torus".into(), self.torus.iter().map(|v| format!("p^{v}")).collect::<Vec<_>>().join(","));
        }
        if self.samples > 0 {
            m.insert("samples".into(), self.samples.to_string());
        }
        m
    }
}

/// `a+bi` with full precision.
pub fn fmt_complex(z: &Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_error(converged: bool, rel_err: f64, tolerance: f64) -> Self {
        if !converged {
            Verdict::Inconclusive
        } else if rel_err <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// Result of one comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub params: BTreeMap<String, String>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub converged: bool,
    pub coset_count: u128,
    pub elapsed_ms: u64,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Values before normalization by the identity point.
    pub raw_lhs: Option<Complex64>,
    pub raw_rhs: Option<Complex64>,
    pub stderr: Option<f64>,
    pub tail_bound: Option<f64>,
    pub jacobian: Vec<JacobianCheck>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(sc: &Scenario, scenario: String, lhs: Complex64, rhs: Complex64, converged: bool, coset_count: u128, start: Instant) -> Self {
        let abs_err = (lhs - rhs).norm();
        let rel_err = relative_error(lhs, rhs);
        Self {
            scenario,
            params: sc.params(),
            lhs,
            rhs,
            abs_err,
            rel_err,
            converged,
            coset_count,
            elapsed_ms: start.elapsed().as_millis() as u64,
            verdict: Verdict::from_error(converged, rel_err, sc.tolerance),
            tolerance: sc.tolerance,
            raw_lhs: None,
            raw_rhs: None,
            stderr: None,
            tail_bound: None,
            jacobian: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn refresh_verdict(&mut self) {
        self.verdict = Verdict::from_error(self.converged, self.rel_err, self.tolerance);
    }
}

/// `|a - b| / |b|`, or `|a - b|` when `b = 0` (values are normalized).
pub fn relative_error(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    if b.norm() > 0.0 {
        d / b.norm()
    } else {
        d
    }
}

fn eval_at(spec: &IntegralSpec, sc: &Scenario, cfg: LocalFieldConfig, budget: u128) -> Result<Evaluation, VerifyError> {
    evaluate(spec, cfg, &sc.schedule, sc.mode, sc.seed, budget)
}

/// Coset count of the whole schedule.
fn schedule_count(spec: &IntegralSpec, sc: &Scenario, p: u64) -> u128 {
    match sc.mode {
        Mode::Exhaustive => sc.schedule.steps.iter().map(|&t| spec.count(t, p)).sum(),
        Mode::Montecarlo { samples } => samples as u128,
    }
}

// ---------------------------------------------------------------------------
// GL_3 toy for the local computation

/// Toy `f(g) = ∫ Φ(w_{23} x_{23}(y) g) ψ(y) dy` on `GL_3`, `Φ = δ_B^{1/2}`.
/// With `x_α = x_{21}`, `x_β = x_{13}`, `x_{α+β} = x_{23}` and
/// `h(a) = diag(1, a, 1)` it satisfies
/// `f(x_β(l_1) x_{α+β}(l_2) g k) = ψ(-l_2) f(g)`.
fn toy_factors() -> Factors {
    let w23 = Matrix::from_rows(vec![
        vec![rat(1, 1), rat(0, 1), rat(0, 1)],
        vec![rat(0, 1), rat(0, 1), rat(1, 1)],
        vec![rat(0, 1), rat(1, 1), rat(0, 1)],
    ])
    .expect("square");
    let y = Position { row: 1, col: 2 };
    Factors::default().fixed(w23).unipotent(vec![y], &[(y, 1)])
}

fn toy_section() -> UnramifiedSection {
    UnramifiedSection::new(ModulusCharacter::borel_power(3, &rat(1, 2)), 1)
}

const X_ALPHA: Position = Position { row: 1, col: 0 };
const X_BETA: Position = Position { row: 0, col: 2 };

fn h_of(a_exp: i64, cfg: LocalFieldConfig) -> Matrix<BigRat> {
    Matrix::diag(&[BigRat::one(), cfg.power(a_exp), BigRat::one()])
}

/// `∫∫ f(x_α(z) x_β(l) h(a)) ψ(ε l) dz dl` and `f(x_α(-ε) h(a))`.
pub fn lemma_specs(epsilon: i64, a_exp: i64, cfg: LocalFieldConfig) -> Result<(IntegralSpec, IntegralSpec), VerifyError> {
    let p = cfg.p();
    let h = h_of(a_exp, cfg);
    let beta_char: Vec<(Position, i64)> = if epsilon != 0 { vec![(X_BETA, epsilon)] } else { Vec::new() };
    // support: |z + ε| <= |a|, |l a| <= 1
    let lhs = toy_factors()
        .outer_reach(vec![X_ALPHA], &[], vec![0])
        .outer_reach(vec![X_BETA], &beta_char, vec![a_exp as i32])
        .fixed(h.clone())
        .build("lemma_lhs", toy_section(), QPower::one(), p);
    let shift = elementary(2, 1, BigRat::from_integer((-epsilon).into()), 3)?;
    let rhs = toy_factors().fixed(shift.mul_ref(&h)).build("lemma_rhs", toy_section(), QPower::one(), p);
    Ok((lhs, rhs))
}

/// `∫ f(x_α(z) g) dz` and `f(g)`.
pub fn cor_specs(g: &Matrix<BigRat>, cfg: LocalFieldConfig) -> (IntegralSpec, IntegralSpec) {
    let p = cfg.p();
    let lhs = toy_factors().outer(vec![X_ALPHA], &[]).fixed(g.clone()).build("cor_lhs", toy_section(), QPower::one(), p);
    let rhs = toy_factors().fixed(g.clone()).build("cor_rhs", toy_section(), QPower::one(), p);
    (lhs, rhs)
}

/// Random integral matrix with unit determinant, i.e. an element of `K`.
fn random_compact(seed: u64, p: u64) -> Matrix<BigRat> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let bound = (p * p) as i64;
    loop {
        let rows: Vec<Vec<BigRat>> = (0..3)
            .map(|_| (0..3).map(|_| BigRat::from_integer(rng.gen_range(-bound..=bound).into())).collect())
            .collect();
        let m = Matrix::from_rows(rows).expect("square");
        if m.is_in_maximal_compact(p) {
            return m;
        }
    }
}

/// The toy `f` through `f(v t k) = ψ(-v_{23}) f(t)`, with `f(t)` from the
/// inner integral at each torus point met (cached).
struct FactoredToy {
    cfg: LocalFieldConfig,
    trunc: Truncation,
    budget: u128,
    cache: std::sync::RwLock<std::collections::HashMap<Vec<i64>, Complex64>>,
    inner: std::sync::atomic::AtomicU64,
}

impl FactoredToy {
    fn new(cfg: LocalFieldConfig, trunc: Truncation, budget: u128) -> Self {
        Self { cfg, trunc, budget, cache: Default::default(), inner: Default::default() }
    }

    fn torus_value(&self, vals: &[i64]) -> Result<Complex64, VerifyError> {
        if let Some(v) = self.cache.read().expect("lock").get(vals) {
            return Ok(*v);
        }
        let t = Matrix::diag(&vals.iter().map(|&v| self.cfg.power(v)).collect::<Vec<_>>());
        let spec = toy_factors().fixed(t).build("toy", toy_section(), QPower::one(), self.cfg.p());
        let (v, c, _) = evaluate_step(&spec, self.trunc, self.cfg, self.budget, None)?;
        self.inner.fetch_add(c as u64, std::sync::atomic::Ordering::Relaxed);
        self.cache.write().expect("lock").insert(vals.to_vec(), v);
        Ok(v)
    }

    fn value(&self, g: &Matrix<Ratio<i128>>) -> Result<Complex64, VerifyError> {
        let d = iwasawa(g, self.cfg.p())?;
        let ft = self.torus_value(&d.torus_valuations)?;
        if ft == Complex64::zero() {
            return Ok(ft);
        }
        let x = d.v.get(1, 2);
        let v23 = LocalElement::new(-BigRat::new((*x.numer()).into(), (*x.denom()).into()), self.cfg);
        Ok(v23.additive_character::<f64>() * ft)
    }
}

/// One truncation step of the Lemma's double integral with the factored toy.
fn lemma_lhs_step(
    epsilon: i64,
    a_exp: i64,
    trunc: Truncation,
    cfg: LocalFieldConfig,
    budget: u128,
) -> Result<(Complex64, u128), VerifyError> {
    let (direct, _) = lemma_specs(epsilon, a_exp, cfg)?;
    let strata = direct.strata(trunc)[1..3].to_vec();
    let toy = FactoredToy::new(cfg, trunc, budget);
    let p = cfg.p() as i128;
    let pow = |k: i32| if k >= 0 { Ratio::from_integer(p.pow(k as u32)) } else { Ratio::new(1, p.pow((-k) as u32)) };
    let h = Matrix::diag(&[Ratio::one(), pow(a_exp as i32), Ratio::one()]);
    let integrand = |pt: Point<'_>| -> Result<Complex64, String> {
        let z = pow(pt.strata[0].v_min) * Ratio::from_integer(pt.digits[0] as i128);
        let l = pow(pt.strata[1].v_min) * Ratio::from_integer(pt.digits[1] as i128);
        // x_α(z) x_β(l) h(a)
        let mut g = h.clone();
        g.set(1, 0, z);
        g.set(0, 2, l);
        g.set(1, 2, z * l);
        let f = toy.value(&g).map_err(|e| e.to_string())?;
        if epsilon == 0 {
            return Ok(f);
        }
        let phase = BigRat::new((*l.numer() * epsilon as i128).into(), (*l.denom()).into());
        Ok(f * LocalElement::new(phase, cfg).additive_character::<f64>())
    };
    let mut task = IntegralTask::new(2, trunc, cfg, &integrand).with_budget(budget);
    task.strata = strata;
    let v = integrate(&task)?;
    Ok((v, task.count() + toy.inner.load(std::sync::atomic::Ordering::Relaxed) as u128))
}

fn compare(
    sc: &Scenario,
    label: String,
    lhs: &IntegralSpec,
    rhs: &IntegralSpec,
    cfg: LocalFieldConfig,
    start: Instant,
) -> Result<VerificationReport, VerifyError> {
    let a = eval_at(lhs, sc, cfg, sc.budget)?;
    let b = eval_at(rhs, sc, cfg, sc.budget)?;
    let mut rep =
        VerificationReport::new(sc, label, a.value, b.value, a.converged && b.converged, a.coset_count + b.coset_count, start);
    rep.stderr = a.stderr;
    Ok(rep)
}

/// Lemma: `∫∫ f(x_α(z) x_β(l) h(a)) ψ(ε l) = f(x_α(-ε) h(a))` on the toy.
pub fn check_lemma_simple1(sc: &Scenario) -> Result<VerificationReport, VerifyError> {
    sc.validate()?;
    let start = Instant::now();
    let cfg = sc.cfg()?;
    let (_, rhs) = lemma_specs(sc.epsilon, sc.a_exp, cfg)?;
    let mut err = None;
    let st = stabilize_with(&sc.schedule, |tr| {
        lemma_lhs_step(sc.epsilon, sc.a_exp, tr, cfg, sc.budget).map_err(|e| {
            err = Some(e.clone());
            IntegrationError::Integrand(e.to_string())
        })
    })
    .map_err(|e| err.clone().unwrap_or(VerifyError::Integration(e)))?;
    let b = eval_at(&rhs, sc, cfg, sc.budget)?;
    let mut rep = VerificationReport::new(sc, sc.name.clone(), st.value, b.value, st.converged && b.converged, st.coset_count + b.coset_count, start);
    if let Some(e) = st.error {
        rep.notes.push(format!("stopped early: {e}"));
    }
    Ok(rep)
}

/// The Lemma's double integral with the toy evaluated directly as a triple
/// integral (feasible for small `p` and `a`).
pub fn lemma_lhs_direct(sc: &Scenario) -> Result<Evaluation, VerifyError> {
    let cfg = sc.cfg()?;
    let (lhs, _) = lemma_specs(sc.epsilon, sc.a_exp, cfg)?;
    eval_at(&lhs, sc, cfg, sc.budget)
}

/// Corollary: `∫ f(x_α(z) g) dz = f(g)` for `g = e` and `samples` random
/// `g ∈ K`; one report per `g`.
pub fn check_cor1(sc: &Scenario) -> Result<Vec<VerificationReport>, VerifyError> {
    sc.validate()?;
    let cfg = sc.cfg()?;
    let mut gs = vec![("e".to_string(), Matrix::identity(3))];
    for i in 0..sc.samples {
        gs.push((format!("k{i}"), random_compact(sc.seed.wrapping_add(i as u64), cfg.p())));
    }
    gs.into_iter()
        .map(|(tag, g)| {
            let start = Instant::now();
            let (lhs, rhs) = cor_specs(&g, cfg);
            let mut rep = compare(sc, format!("{}[g={tag}]", sc.name), &lhs, &rhs, cfg, start)?;
            rep.params.insert("g".into(), format!("{:?}", g.entries().iter().map(|x| x.to_string()).collect::<Vec<_>>()));
            Ok(rep)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// unramified computation

/// Nonnegative integer vectors of length `r` with sum at most `k`, ordered by
/// total degree.
fn simplex(r: usize, k: u32) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for total in 0..=k as i64 {
        let mut cur = vec![0i64; r];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<i64>>, cur: &mut Vec<i64>, i: usize, left: i64) {
    if i + 1 == cur.len() {
        cur[i] = left;
        out.push(cur.clone());
        return;
    }
    for x in (0..=left).rev() {
        cur[i] = x;
        fill(out, cur, i + 1, left - x);
    }
}

/// `Σ_{m > K} C(m + r - 1, r - 1) ρ^m` with `ρ = max_i |χ_i^n q^{-s}|`.
pub fn simplex_tail_bound(sp: &SatakeParameters, z: &SpectralPoint, k_max: u32) -> f64 {
    let rho = sp.chi_n.iter().map(|x| x.norm()).fold(0.0, f64::max) * z.q_minus_s().norm();
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let r = sp.r as u64;
    let mut acc = 0.0;
    let mut m = k_max as u64 + 1;
    loop {
        let c = (1..r).fold(1.0, |c, i| c * (m + i) as f64 / i as f64);
        let term = c * rho.powi(m as i32);
        acc += term;
        if term < 1e-18 * acc.max(1e-300) || m > k_max as u64 + 10_000 {
            break;
        }
        m += 1;
    }
    acc
}

/// Torus sum `Σ_t f_π(t) |det t|^{s'} δ_B(t)^{-1} conj(W̃(t) / W̃(e))` over
/// `t = diag(p^{n k_i})`, `Σ k_i <= K`, where `W̃(t) = ∫_{V_r} W(v t_0) dv`;
/// compared with `L(s, π)`.
pub fn verify_prop2(sc: &Scenario) -> Result<VerificationReport, VerifyError> {
    sc.validate()?;
    let start = Instant::now();
    let cfg = sc.cfg()?;
    let (n, r, p, q) = (sc.n, sc.r, cfg.p(), cfg.q());
    let sp = sc.satake()?;
    let z = sc.spectral();
    let mut sprime = s_prime(n as i64, r as i64)?;
    if let Some((a, b)) = sc.s_prime_shift {
        sprime = ExponentExpr::new(sprime.coeff_s.clone(), sprime.constant.clone() + rat(a, b));
    }
    let sp_val = sprime.eval(z.s);
    let rhs = lfactor(&sp, &z)?;

    let e = TorusPoint::from_valuations(cfg, &vec![0; r]);
    let norm_spec = checkpoint(CheckpointLabel::Local7, n, r, &e, cfg)?.spec;
    let norm = eval_at(&norm_spec, sc, cfg, sc.budget)?;
    let mut used = norm.coset_count;
    let mut converged = norm.converged;
    let mut lhs = Complex64::zero();
    let mut closed = Complex64::zero();
    let mut skipped = Vec::new();
    let mut stderr2 = 0.0;
    for k in simplex(r, sc.k_max) {
        let vals: Vec<i64> = k.iter().map(|x| x * n as i64).collect();
        let t = TorusPoint::from_valuations(cfg, &vals);
        let spec = checkpoint(CheckpointLabel::Local7, n, r, &t, cfg)?.spec;
        let f = unramified_vector(&t, &sp, cfg)?;
        let dv: i64 = vals.iter().sum();
        let det = (-(dv as f64) * sp_val * (q as f64).ln()).exp();
        let dinv = delta_borel(&t, cfg).eval::<f64>(q).recip();
        let weight = f * det * dinv;
        closed += weight * theta_local_closed(&t, n, r, cfg)?;
        let need = schedule_count(&spec, sc, p);
        if used.saturating_add(need) > sc.budget {
            skipped.push(format!("{vals:?}"));
            converged = false;
            continue;
        }
        let w = eval_at(&spec, sc, cfg, sc.budget - used)?;
        used += w.coset_count;
        converged &= w.converged;
        lhs += weight * (w.value / norm.value).conj();
        if let Some(se) = w.stderr {
            stderr2 += (weight.norm() * se / norm.value.norm()).powi(2);
        }
    }
    let mut rep = VerificationReport::new(sc, sc.name.clone(), lhs, rhs, converged, used, start);
    rep.raw_lhs = Some(norm.value);
    rep.raw_rhs = Some(closed);
    let tail = simplex_tail_bound(&sp, &z, sc.k_max);
    rep.tail_bound = Some(tail);
    if matches!(sc.mode, Mode::Montecarlo { .. }) {
        rep.stderr = Some(stderr2.sqrt());
    }
    // a truncation that cannot resolve the tolerance only decides clear gaps
    let slack = tail / rhs.norm().max(1e-300);
    if slack > sc.tolerance && rep.rel_err <= sc.tolerance + slack {
        rep.converged = false;
        rep.notes.push(format!("tail bound {tail:e} exceeds the tolerance; raise k_max"));
        rep.refresh_verdict();
    }
    rep.notes.push(format!("W~(e) = {}", fmt_complex(&norm.value)));
    rep.notes.push(format!("closed-form torus sum = {}", fmt_complex(&closed)));
    if !skipped.is_empty() {
        rep.notes.push(format!("over budget, not evaluated: {}", skipped.join(" ")));
    }
    Ok(rep)
}

/// `W̃(t) / W̃(e) = α(t) δ_{B_r}^{(n-1)/2}(t) Π W_Θ(a_i)` at power points.
pub fn theta_local_closed(t: &TorusPoint, n: usize, r: usize, cfg: LocalFieldConfig) -> Result<Complex64, VerifyError> {
    let alpha = alpha_factor(t, n, r, cfg)?;
    let d = delta_borel(t, cfg);
    let dpow = QPower::new(d.exponent * BigRat::new((n as i64 - 1).into(), 2.into()));
    let w: f64 = t.entries().iter().map(|a| theta_whittaker(n, &LocalElement::new(a.clone(), cfg))).product();
    Ok(Complex64::new((alpha * dpow).eval::<f64>(cfg.q()) * w, 0.0))
}

// ---------------------------------------------------------------------------
// main identities

/// `∫_{V_r} W(v t_0) ψ^{-1}(v) dv` against the closed right-hand side, both
/// as ratios to the identity point.
pub fn verify_thm(kind: TheoremKind, sc: &Scenario) -> Result<VerificationReport, VerifyError> {
    sc.validate()?;
    let expected = if kind == TheoremKind::Thm1 { ScenarioKind::Thm1 } else { ScenarioKind::Thm2 };
    if sc.kind != expected {
        return Err(VerifyError::InvalidScenario(format!("scenario kind {} does not match {kind:?}", sc.kind)));
    }
    let start = Instant::now();
    let cfg = sc.cfg()?;
    let (n, r) = (sc.n, sc.r);
    let t = TorusPoint::from_valuations(cfg, &sc.torus);
    let e = TorusPoint::from_valuations(cfg, &vec![0; r]);
    let spec = checkpoint(CheckpointLabel::Whit11, n, r, &t, cfg)?.spec;
    let norm_spec = checkpoint(CheckpointLabel::Whit11, n, r, &e, cfg)?.spec;
    // the identity value is cheap: always exhaustive
    let norm_sc = Scenario { mode: Mode::Exhaustive, ..sc.clone() };
    let norm = eval_at(&norm_spec, &norm_sc, cfg, sc.budget)?;
    let val = eval_at(&spec, sc, cfg, sc.budget)?;
    let rhs_t = rhs_main(kind, &t.matrix(), n, r, cfg)?;
    let rhs_e = rhs_main(kind, &e.matrix(), n, r, cfg)?;
    let lhs = val.value / norm.value;
    let rhs = rhs_t / rhs_e;
    let mut rep =
        VerificationReport::new(sc, sc.name.clone(), lhs, rhs, val.converged && norm.converged, val.coset_count + norm.coset_count, start);
    rep.raw_lhs = Some(val.value);
    rep.raw_rhs = Some(rhs_t);
    rep.stderr = val.stderr.map(|s| s / norm.value.norm());
    rep.notes.push(format!("identity value = {}", fmt_complex(&norm.value)));
    if let Some(se) = rep.stderr {
        let sigmas = rep.abs_err / se.max(1e-300);
        rep.notes.push(format!("monte carlo: {sigmas:.2} standard errors"));
        // the error bar must resolve the tolerance unless the gap is decisive
        let resolved = se <= sc.tolerance * rhs.norm().max(1e-300);
        if !resolved && sigmas <= MC_DECISIVE_SIGMAS {
            rep.converged = false;
            rep.notes.push(format!("error bar {:e} does not resolve the tolerance", se / rhs.norm().max(1e-300)));
        }
        rep.refresh_verdict();
    }
    Ok(rep)
}

/// Deviation, in standard errors, treated as a conclusive Monte-Carlo failure.
pub const MC_DECISIVE_SIGMAS: f64 = 5.0;

/// Closed form matching the last integral of a chain, if any.
fn chain_closed_form(label: CheckpointLabel, t: &TorusPoint, n: usize, r: usize, cfg: LocalFieldConfig) -> Result<Option<Complex64>, VerifyError> {
    Ok(match label {
        CheckpointLabel::Local7 | CheckpointLabel::Local8 | CheckpointLabel::Local16 => Some(theta_local_closed(t, n, r, cfg)?),
        CheckpointLabel::Whit11 | CheckpointLabel::Whit2 if r < n => Some(rhs_main(TheoremKind::Thm1, &t.matrix(), n, r, cfg)?),
        CheckpointLabel::Ij(j) if j == n - 1 => Some(rhs_main(TheoremKind::Thm1, &t.matrix(), n, r, cfg)?),
        _ => None,
    })
}

/// Every adjacent pair of `labels` at the torus point, then the last
/// integral against its closed form (ratios to the identity point). Jacobian
/// factors of all checkpoints with a change of variables are attached to
/// each report.
pub fn verify_chain(sc: &Scenario) -> Result<Vec<VerificationReport>, VerifyError> {
    sc.validate()?;
    let cfg = sc.cfg()?;
    let (n, r) = (sc.n, sc.r);
    let t = TorusPoint::from_valuations(cfg, &sc.torus);
    let mut jac = Vec::new();
    for l in [CheckpointLabel::Local13, CheckpointLabel::Whit5] {
        if let Ok(cp) = checkpoint(l, n, r, &t, cfg) {
            if let Some(j) = cp.jacobian {
                jac.push(j);
            }
        }
    }
    let jac_ok = jac.iter().all(|j| j.exact_match);
    let mut values = Vec::new();
    for &l in &sc.labels {
        let start = Instant::now();
        let cp = checkpoint(l, n, r, &t, cfg)?;
        let ev = eval_at(&cp.spec, sc, cfg, sc.budget)?;
        values.push((l, ev, start.elapsed()));
    }
    let mut out = Vec::new();
    for w in values.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let start = Instant::now() - (a.2 + b.2);
        let mut rep = VerificationReport::new(
            sc,
            format!("{}[{}={}]", sc.name, a.0, b.0),
            a.1.value,
            b.1.value,
            a.1.converged && b.1.converged,
            a.1.coset_count + b.1.coset_count,
            start,
        );
        rep.stderr = match (a.1.stderr, b.1.stderr) {
            (None, None) => None,
            (x, y) => Some(x.unwrap_or(0.0).hypot(y.unwrap_or(0.0))),
        };
        out.push(rep);
    }
    let (last, ev, el) = values.last().expect("labels");
    if let Some(cf) = chain_closed_form(*last, &t, n, r, cfg)? {
        let start = Instant::now();
        let e = TorusPoint::from_valuations(cfg, &vec![0; r]);
        let norm = eval_at(&checkpoint(*last, n, r, &e, cfg)?.spec, sc, cfg, sc.budget)?;
        let cf_e = chain_closed_form(*last, &e, n, r, cfg)?.expect("same label");
        let mut rep = VerificationReport::new(
            sc,
            format!("{}[{}=closed]", sc.name, last),
            ev.value / norm.value,
            cf / cf_e,
            ev.converged && norm.converged,
            ev.coset_count + norm.coset_count,
            start - *el,
        );
        rep.raw_lhs = Some(ev.value);
        rep.raw_rhs = Some(cf);
        out.push(rep);
    }
    for rep in &mut out {
        rep.jacobian = jac.clone();
        if !jac_ok {
            rep.notes.push("jacobian factor mismatch".into());
            rep.rel_err = f64::INFINITY;
            rep.refresh_verdict();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// support

/// Valuation patterns for the support test of `GL_r` inside `(n, r)`.
pub fn support_patterns(n: usize, r: usize, count: usize) -> Vec<Vec<i64>> {
    let n = n as i64;
    let mut pats: Vec<Vec<i64>> = Vec::new();
    let mut singles: Vec<i64> = Vec::new();
    let head = [0, n, 2 * n, 1, n + 1, -n, -1, 2 * n - 1, -2 * n, 3 * n, 2, 3, -2, 2 * n + 1, 4 * n, -3 * n, 3 * n - 1];
    for v in head.into_iter().chain(-3 * n..=8 * n) {
        if !singles.contains(&v) {
            singles.push(v);
        }
    }
    if r == 1 {
        pats.extend(singles.iter().map(|&v| vec![v]));
    } else {
        for &a in &singles[..10] {
            for &b in &[0, n, 1, -n] {
                let mut v = vec![0; r];
                v[0] = a;
                v[r - 1] = b;
                if !pats.contains(&v) {
                    pats.push(v);
                }
            }
        }
    }
    pats.truncate(count.max(1));
    pats
}

/// Whether the theta support predicate holds: every `a_i` an `n`-th
/// power of norm at most one.
pub fn in_theta_support(vals: &[i64], n: usize) -> bool {
    vals.iter().all(|&v| v >= 0 && v % n as i64 == 0)
}

/// `W̃(t)` and the closed-form `W_Θ` vanish off the support and not on it.
pub fn support_test(sc: &Scenario) -> Result<VerificationReport, VerifyError> {
    sc.validate()?;
    let start = Instant::now();
    let cfg = sc.cfg()?;
    let (n, r) = (sc.n, sc.r);
    let e = TorusPoint::from_valuations(cfg, &vec![0; r]);
    let norm = eval_at(&checkpoint(CheckpointLabel::Local7, n, r, &e, cfg)?.spec, sc, cfg, sc.budget)?;
    let pats = support_patterns(n, r, if sc.samples == 0 { 20 } else { sc.samples });
    let evals: Vec<Result<(Vec<i64>, Evaluation, f64), VerifyError>> = pats
        .par_iter()
        .map(|v| {
            let t = TorusPoint::from_valuations(cfg, v);
            let ev = eval_at(&checkpoint(CheckpointLabel::Local7, n, r, &t, cfg)?.spec, sc, cfg, sc.budget)?;
            let closed: f64 = t.entries().iter().map(|a| theta_whittaker(n, &LocalElement::new(a.clone(), cfg))).product();
            Ok((v.clone(), ev, closed))
        })
        .collect();
    let mut worst_zero = 0.0f64;
    let mut weakest = f64::INFINITY;
    let mut converged = norm.converged;
    let mut count = norm.coset_count;
    let mut notes = Vec::new();
    let mut mismatch = false;
    for item in evals {
        let (v, ev, closed) = item?;
        converged &= ev.converged;
        count += ev.coset_count;
        let rel = ev.value.norm() / norm.value.norm();
        let support = in_theta_support(&v, n);
        if support != (closed != 0.0) {
            mismatch = true;
            notes.push(format!("{v:?}: closed form disagrees with the support predicate"));
        }
        if support {
            weakest = weakest.min(rel);
            if rel <= 10.0 * sc.tolerance {
                mismatch = true;
                notes.push(format!("{v:?}: vanishes on the support ({rel:e})"));
            }
        } else {
            worst_zero = worst_zero.max(rel);
        }
    }
    let mut rep =
        VerificationReport::new(sc, sc.name.clone(), Complex64::new(worst_zero, 0.0), Complex64::zero(), converged, count, start);
    if mismatch {
        rep.rel_err = f64::INFINITY;
        rep.refresh_verdict();
    }
    rep.notes = notes;
    rep.notes.push(format!("{} patterns; smallest value on the support {weakest:e}", pats.len()));
    rep.raw_lhs = Some(norm.value);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// dispatch

/// Runs one scenario.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<VerificationReport>, VerifyError> {
    match sc.kind {
        ScenarioKind::LemmaSimple1 => Ok(vec![check_lemma_simple1(sc)?]),
        ScenarioKind::Cor1 => check_cor1(sc),
        ScenarioKind::Prop2 => Ok(vec![verify_prop2(sc)?]),
        ScenarioKind::Thm1 => Ok(vec![verify_thm(TheoremKind::Thm1, sc)?]),
        ScenarioKind::Thm2 => Ok(vec![verify_thm(TheoremKind::Thm2, sc)?]),
        ScenarioKind::CheckpointChain => verify_chain(sc),
        ScenarioKind::Support => Ok(vec![support_test(sc)?]),
    }
}

/// Runs scenarios in parallel; results keep the input order.
pub fn run_all(scenarios: &[Scenario]) -> Vec<Result<Vec<VerificationReport>, VerifyError>> {
    scenarios.par_iter().map(run_scenario).collect()
}

// ---------------------------------------------------------------------------
// acceptance grid

/// A scenario of the default suite with the criterion it belongs to and its
/// single-core running time in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub criterion: u8,
    pub scenario: Scenario,
    pub expected_secs: f64,
}

fn entry(criterion: u8, expected_secs: f64, scenario: Scenario) -> GridEntry {
    GridEntry { criterion, scenario, expected_secs }
}

/// `s` with `q^{-s} = ρ e^{0.4i}`.
pub fn spectral_at(rho: f64, p: u64) -> Complex64 {
    SpectralPoint::from_q_minus_s(Complex64::from_polar(rho, 0.4), p).s
}

/// The default acceptance suite.
pub fn default_grid() -> Vec<GridEntry> {
    use ScenarioKind::*;
    let mut g = Vec::new();
    for p in [2u64, 3] {
        for eps in [0i64, -1] {
            for a in 0..3i64 {
                let mut sc = Scenario::new(LemmaSimple1, 3, 1, p)
                    .named(format!("lemma_simple1[p={p},eps={eps},a=p^{a}]"))
                    .with_schedule(&[(-1, 2), (-2, 3)])
                    .with_tolerance(1e-8);
                sc.epsilon = eps;
                sc.a_exp = a;
                g.push(entry(2, if p == 3 && a == 2 { 6.0 } else { 1.0 }, sc));
            }
        }
        let mut sc =
            Scenario::new(Cor1, 3, 1, p).named(format!("cor1[p={p}]")).with_schedule(&[(-1, 2), (-2, 3)]).with_tolerance(1e-8);
        sc.samples = 3;
        g.push(entry(2, 2.0, sc));
    }
    g.push(entry(3, 1.0, Scenario::new(Prop2, 2, 1, 2).named("prop2(2,1)")));
    g.push(entry(3, 20.0, Scenario::new(Prop2, 3, 1, 2).named("prop2(3,1)")));
    let mut sc = Scenario::new(Prop2, 2, 2, 2).named("prop2(2,2)").with_tolerance(1e-4);
    sc.k_max = 3;
    sc.s = Some(spectral_at(0.05, 2));
    sc.budget = 10_000_000;
    g.push(entry(3, 2.0, sc));
    for k in 1..=3i64 {
        g.push(entry(4, 0.1, Scenario::new(Thm1, 2, 1, 2).named(format!("thm1(2,1)[p^{}]", 2 * k)).with_torus(&[2 * k])));
    }
    for t in [[3i64, 0], [3, 3]] {
        let mut sc = Scenario::new(Thm1, 3, 2, 2)
            .named(format!("thm1(3,2)[p^{},p^{}]", t[0], t[1]))
            .with_torus(&t)
            .with_schedule(&[(-1, 0)])
            .with_tolerance(1e-3);
        let samples = if t[1] == 0 { 100_000_000 } else { 10_000_000 };
        sc.mode = Mode::Montecarlo { samples };
        g.push(entry(4, if t[1] == 0 { 125.0 } else { 20.0 }, sc));
    }
    for t in [[2i64, 0], [4, 0], [2, 2], [4, 2], [2, 4]] {
        let sc = Scenario::new(Thm2, 2, 2, 2)
            .named(format!("thm2(2,2)[p^{},p^{}]", t[0], t[1]))
            .with_torus(&t)
            .with_schedule(&[(-1, 0), (-1, 1), (-2, 1)])
            .with_tolerance(1e-4);
        g.push(entry(5, 1.0, sc));
    }
    let local = [CheckpointLabel::Local7, CheckpointLabel::Local8, CheckpointLabel::Local11, CheckpointLabel::Local13, CheckpointLabel::Local16];
    for t in [[2i64, 0], [4, 2]] {
        let mut sc = Scenario::new(CheckpointChain, 2, 2, 2)
            .named(format!("chain(2,2)[p^{},p^{}]", t[0], t[1]))
            .with_torus(&t)
            .with_tolerance(1e-4);
        sc.labels = local.to_vec();
        g.push(entry(6, 0.5, sc));
    }
    let mut sc = Scenario::new(CheckpointChain, 2, 1, 2).named("chain(2,1)[p^4]").with_torus(&[4]).with_tolerance(1e-4);
    sc.labels = vec![CheckpointLabel::Whit11, CheckpointLabel::Whit2];
    g.push(entry(6, 0.1, sc));
    for t in [[3i64, 3], [3, 0]] {
        let mut sc = Scenario::new(CheckpointChain, 3, 2, 2)
            .named(format!("chain(3,2)[p^{},p^{}]", t[0], t[1]))
            .with_torus(&t)
            .with_schedule(&[(-1, 0)])
            .with_tolerance(1e-4);
        sc.labels = vec![CheckpointLabel::I1, CheckpointLabel::Whit5, CheckpointLabel::Ij(2)];
        g.push(entry(6, 4.0, sc));
    }
    for (n, r) in [(2usize, 1usize), (2, 2)] {
        let mut sc = Scenario::new(Support, n, r, 2).named(format!("support({n},{r})")).with_tolerance(1e-8);
        sc.samples = 20;
        g.push(entry(7, 2.0, sc));
    }
    let mut sc = Scenario::new(Prop2, 2, 1, 2).named("prop2(2,1)[s'+1/4]");
    sc.s_prime_shift = Some((1, 4));
    g.push(entry(9, 1.0, sc));
    g
}
