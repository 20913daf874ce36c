//! Iwasawa decomposition `g = v t k` and the unramified section.
//!
//! Two routes compute the torus valuations: [`iwasawa`] works exactly over
//! any rational scalar, [`FastValuator`] works on products of fixed and
//! unipotent factors with `p`-power denominators, reducing an integral
//! multiple of `g` modulo `p^N` with `N > v(det)`.

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::matgroups::{GroupError, Matrix, Position, Scalar};
use crate::padic::{LocalFieldConfig, PadicValued, Valuation};
use crate::BigRat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IwasawaError {
    #[error("matrix is singular")]
    Singular,
    #[error("entry with non p-power denominator in a fast factor")]
    NonPadicDenominator,
    #[error("integer bound too large for the fast route")]
    Overflow,
    #[error("too many coordinates: expected {expected}, got {got}")]
    CoordinateCount { expected: usize, got: usize },
    #[error("matrix size {0} exceeds the fast route limit {MAX_FAST}")]
    TooLarge(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Clone, PartialEq)]
pub struct IwasawaDecomposition<T> {
    /// Upper unipotent.
    pub v: Matrix<T>,
    /// `diag(p^{v_1}, ..., p^{v_m})`.
    pub torus: Vec<T>,
    pub torus_valuations: Vec<i64>,
    /// In `GL_m(Z_p)`.
    pub k: Matrix<T>,
}

impl<T: Scalar + std::fmt::Display> std::fmt::Debug for IwasawaDecomposition<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IwasawaDecomposition")
            .field("v", &self.v)
            .field("torus_valuations", &self.torus_valuations)
            .field("k", &self.k)
            .finish()
    }
}

fn p_pow<T: Scalar>(p: u64, e: i64) -> T {
    let base = T::from_u64(p).expect("prime fits the scalar");
    let mut out = T::one();
    for _ in 0..e.unsigned_abs() {
        out = out * base.clone();
    }
    if e < 0 {
        T::one() / out
    } else {
        out
    }
}

fn val<T: Scalar>(x: &T, p: u64) -> Valuation {
    x.valuation(p)
}

/// Exact decomposition by column elimination: rows are processed bottom-up,
/// each time pivoting on the active entry of least valuation (lowest
/// column on ties) and clearing the rest of the row with integral column
/// operations.
pub fn iwasawa<T: Scalar>(g: &Matrix<T>, p: u64) -> Result<IwasawaDecomposition<T>, IwasawaError> {
    let m = g.size();
    let mut b = g.clone();
    for i in (0..m).rev() {
        let mut piv: Option<(usize, Valuation)> = None;
        for c in 0..=i {
            let v = val(b.get(i, c), p);
            if v != Valuation::Infinite && piv.is_none_or(|(_, pv)| v < pv) {
                piv = Some((c, v));
            }
        }
        let (c, _) = piv.ok_or(IwasawaError::Singular)?;
        b.swap_cols(c, i);
        let pv = b.get(i, i).clone();
        for j in 0..i {
            let x = b.get(i, j).clone();
            if x.is_zero() {
                continue;
            }
            let f = x / pv.clone();
            for row in 0..=i {
                let t = f.clone() * b.get(row, i).clone();
                let nv = b.get(row, j).clone() - t;
                b.set(row, j, nv);
            }
        }
    }
    let diag: Vec<T> = (0..m).map(|i| b.get(i, i).clone()).collect();
    let torus_valuations: Vec<i64> = diag
        .iter()
        .map(|d| val(d, p).finite().expect("pivots are nonzero"))
        .collect();
    let torus: Vec<T> = torus_valuations.iter().map(|&e| p_pow(p, e)).collect();
    let mut v = b.clone();
    for j in 0..m {
        let d = diag[j].clone();
        for i in 0..m {
            let x = v.get(i, j).clone() / d.clone();
            v.set(i, j, x);
        }
    }
    let vt = v.mul_ref(&Matrix::diag(&torus));
    let k = vt.inverse()?.mul_ref(g);
    Ok(IwasawaDecomposition { v, torus, torus_valuations, k })
}

/// `t ↦ q^{-Σ e_i v(t_i)}`, i.e. `Π |t_i|^{e_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModulusCharacter {
    pub exponents: Vec<BigRat>,
}

impl ModulusCharacter {
    /// `δ_B` of the Borel in `GL_m`: exponents `m - 2i + 1`.
    pub fn borel(m: usize) -> Self {
        Self::borel_power(m, &BigRat::one())
    }

    /// `δ_B^λ`.
    pub fn borel_power(m: usize, lambda: &BigRat) -> Self {
        let exponents = (1..=m as i64).map(|i| lambda * BigRat::from_integer((m as i64 - 2 * i + 1).into())).collect();
        Self { exponents }
    }

    /// Modulus of the standard parabolic with the given Levi block sizes,
    /// restricted to the diagonal torus.
    pub fn parabolic(blocks: &[usize]) -> Self {
        let mut exponents = Vec::new();
        let total: usize = blocks.iter().sum();
        let mut before = 0;
        for &b in blocks {
            let after = total - before - b;
            for _ in 0..b {
                exponents.push(BigRat::from_integer((after as i64 - before as i64).into()));
            }
            before += b;
        }
        Self { exponents }
    }

    /// `Σ e_i v_i`, so the value is `q^{-weight}`.
    pub fn weight(&self, vals: &[i64]) -> BigRat {
        self.exponents
            .iter()
            .zip(vals)
            .fold(BigRat::zero(), |acc, (e, &v)| acc + e * BigRat::from_integer(v.into()))
    }

    pub fn eval(&self, vals: &[i64], q: u64) -> f64 {
        let w = self.weight(vals).to_f64().expect("finite");
        (q as f64).powf(-w)
    }
}

pub fn modulus_eval(mc: &ModulusCharacter, t: &[BigRat], p: u64) -> f64 {
    let vals: Vec<i64> = t.iter().map(|x| val(x, p).finite().expect("torus entries are nonzero")).collect();
    mc.eval(&vals, p)
}

/// Right `K`-invariant section `f(v t k) = χ(t)` when every torus valuation
/// is divisible by `support_modulus`, zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct UnramifiedSection {
    pub character: ModulusCharacter,
    pub support_modulus: i64,
    /// Float form of the exponents for the hot loop.
    exps: Vec<f64>,
}

impl UnramifiedSection {
    pub fn new(character: ModulusCharacter, support_modulus: i64) -> Self {
        let exps = character.exponents.iter().map(|e| e.to_f64().expect("finite")).collect();
        Self { character, support_modulus, exps }
    }

    /// `δ_B^{(n-1)/(2n)}` on `GL_m`, supported where torus valuations are
    /// divisible by `n`.
    pub fn cover_model(n: usize, m: usize) -> Self {
        let lambda = BigRat::new((n as i64 - 1).into(), (2 * n as i64).into());
        Self::new(ModulusCharacter::borel_power(m, &lambda), n as i64)
    }

    pub fn size(&self) -> usize {
        self.character.exponents.len()
    }

    #[inline]
    pub fn eval_valuations(&self, vals: &[i64], q: u64) -> f64 {
        if self.support_modulus > 1 && vals.iter().any(|v| v % self.support_modulus != 0) {
            return 0.0;
        }
        let w: f64 = self.exps.iter().zip(vals).map(|(e, &v)| e * v as f64).sum();
        (q as f64).powf(-w)
    }
}

/// `f(g)` through the exact decomposition.
pub fn eval_section(g: &Matrix<BigRat>, section: &UnramifiedSection, cfg: LocalFieldConfig) -> Result<f64, IwasawaError> {
    let d = iwasawa(g, cfg.p())?;
    Ok(section.eval_valuations(&d.torus_valuations, cfg.q()))
}

pub const MAX_FAST: usize = 8;
const CELLS: usize = MAX_FAST * MAX_FAST;

/// A factor in a product `g = F_1 F_2 ... F_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorTemplate {
    Fixed(Matrix<BigRat>),
    /// `I + Σ x_c e_{pos_c}`, consuming the next coordinates of the point.
    Unipotent(Vec<Position>),
}

#[derive(Debug, Clone)]
enum Prepared {
    Fixed { nz: Vec<(usize, usize, i128)> },
    Unipotent { scale: u32, first: usize, cells: Vec<(usize, usize, i128)> },
}

/// Torus valuations of `g(x)` for coordinates `x_c = a_c p^{b_c}` with
/// integer digits `a_c`.
#[derive(Debug, Clone)]
pub struct FastValuator {
    m: usize,
    p: u64,
    factors: Vec<Prepared>,
    templates: Vec<FactorTemplate>,
    bases: Vec<i32>,
    det_val: i64,
    total_scale: i64,
}

/// Outcome of a fast evaluation that could not be certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeedsExact;

fn int_val(mut x: i128, p: u64) -> u32 {
    debug_assert!(x != 0);
    let p = p as i128;
    let mut k = 0;
    while x % p == 0 {
        x /= p;
        k += 1;
    }
    k
}

fn to_scaled_int(x: &BigRat, scale: u32, p: u64) -> Result<i128, IwasawaError> {
    let y = x * BigRat::from_integer(num_bigint::BigInt::from(p).pow(scale));
    if !y.is_integer() {
        return Err(IwasawaError::NonPadicDenominator);
    }
    y.to_integer().to_i128().ok_or(IwasawaError::Overflow)
}

impl FastValuator {
    /// `bases[c]` is the valuation step of coordinate `c`.
    pub fn new(templates: Vec<FactorTemplate>, bases: Vec<i32>, cfg: LocalFieldConfig, max_digit: u64) -> Result<Self, IwasawaError> {
        let p = cfg.p();
        let m = match templates.first() {
            Some(FactorTemplate::Fixed(f)) => f.size(),
            _ => return Err(GroupError::InvalidParameters("first factor must be fixed".into()).into()),
        };
        if m > MAX_FAST {
            return Err(IwasawaError::TooLarge(m));
        }
        let mut factors = Vec::new();
        let mut next = 0usize;
        let mut det_val = 0i64;
        let mut total_scale = 0i64;
        let mut log_bound = 0f64;
        for t in &templates {
            match t {
                FactorTemplate::Fixed(f) => {
                    if f.size() != m {
                        return Err(GroupError::SizeMismatch { expected: m, got: f.size() }.into());
                    }
                    let minv = f.entries().iter().filter_map(|x| x.valuation(p).finite()).min().unwrap_or(0);
                    let scale = (-minv).max(0) as u32;
                    let mut nz = Vec::new();
                    let mut maxabs = 0f64;
                    for i in 0..m {
                        for j in 0..m {
                            let x = f.get(i, j);
                            if !x.is_zero() {
                                let v = to_scaled_int(x, scale, p)?;
                                maxabs = maxabs.max((v as f64).abs());
                                nz.push((i, j, v));
                            }
                        }
                    }
                    det_val += f.det().valuation(p).finite().ok_or(IwasawaError::Singular)?;
                    total_scale += scale as i64;
                    log_bound += (m as f64 * maxabs).log2();
                    factors.push(Prepared::Fixed { nz });
                }
                FactorTemplate::Unipotent(pos) => {
                    let first = next;
                    next += pos.len();
                    if next > bases.len() {
                        return Err(IwasawaError::CoordinateCount { expected: next, got: bases.len() });
                    }
                    let bs = &bases[first..next];
                    let minb = bs.iter().copied().min().unwrap_or(0);
                    let scale = (-minb).max(0) as u32;
                    let cells = pos
                        .iter()
                        .zip(bs)
                        .map(|(q, &b)| (q.row, q.col, (p as i128).pow((b + scale as i32) as u32)))
                        .collect::<Vec<_>>();
                    let maxc = cells.iter().map(|c| c.2 as f64).fold(1f64, f64::max);
                    total_scale += scale as i64;
                    log_bound += (m as f64 * (maxc * max_digit as f64 + (p as f64).powi(scale as i32))).log2();
                    factors.push(Prepared::Unipotent { scale, first, cells });
                }
            }
        }
        if next != bases.len() {
            return Err(IwasawaError::CoordinateCount { expected: next, got: bases.len() });
        }
        if log_bound > 120.0 {
            return Err(IwasawaError::Overflow);
        }
        Ok(Self { m, p, factors, templates, bases, det_val, total_scale })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn coordinate_count(&self) -> usize {
        self.bases.len()
    }

    /// The exact matrix for the given digits.
    pub fn matrix(&self, digits: &[u64]) -> Matrix<BigRat> {
        let cfg = LocalFieldConfig::new(self.p).expect("validated");
        let mut g = Matrix::identity(self.m);
        let mut next = 0;
        for t in &self.templates {
            match t {
                FactorTemplate::Fixed(f) => g = g.mul_ref(f),
                FactorTemplate::Unipotent(pos) => {
                    let mut u = Matrix::identity(self.m);
                    for q in pos {
                        let x = cfg.power(self.bases[next] as i64) * BigRat::from_integer(digits[next].into());
                        u.set(q.row, q.col, x);
                        next += 1;
                    }
                    g = g.mul_ref(&u);
                }
            }
        }
        g
    }

    /// Exact integer matrix `p^S g` (row-major into `out`).
    fn integer_matrix(&self, digits: &[u64], out: &mut [i128; CELLS]) {
        let m = self.m;
        let mut cur = [0i128; CELLS];
        for i in 0..m {
            cur[i * MAX_FAST + i] = 1;
        }
        for f in &self.factors {
            let mut nxt = [0i128; CELLS];
            match f {
                Prepared::Fixed { nz, .. } => {
                    for &(a, b, v) in nz {
                        for i in 0..m {
                            nxt[i * MAX_FAST + b] += cur[i * MAX_FAST + a] * v;
                        }
                    }
                }
                Prepared::Unipotent { scale, first, cells } => {
                    let s = (self.p as i128).pow(*scale);
                    for i in 0..m {
                        for j in 0..m {
                            nxt[i * MAX_FAST + j] = cur[i * MAX_FAST + j] * s;
                        }
                    }
                    for (k, &(a, b, w)) in cells.iter().enumerate() {
                        let d = digits[first + k] as i128;
                        if d == 0 {
                            continue;
                        }
                        let c = d * w;
                        for i in 0..m {
                            nxt[i * MAX_FAST + b] += cur[i * MAX_FAST + a] * c;
                        }
                    }
                }
            }
            cur = nxt;
        }
        *out = cur;
    }

    /// Torus valuations of `g(digits)`; `Err(NeedsExact)` when the modular
    /// precision would not cover `v(det)`.
    pub fn valuations(&self, digits: &[u64], out: &mut [i64]) -> Result<(), NeedsExact> {
        let m = self.m;
        let mut a = [0i128; CELLS];
        self.integer_matrix(digits, &mut a);
        // make each row primitive; row scaling shifts the torus valuation of that row
        let mut shift = [0i64; MAX_FAST];
        let mut sum_shift = 0i64;
        let p = self.p as i128;
        for i in 0..m {
            let row = &mut a[i * MAX_FAST..i * MAX_FAST + m];
            let mu = row.iter().filter(|&&x| x != 0).map(|&x| int_val(x, self.p)).min().ok_or(NeedsExact)?;
            if mu > 0 {
                let d = p.pow(mu);
                for x in row.iter_mut() {
                    *x /= d;
                }
            }
            shift[i] = mu as i64;
            sum_shift += mu as i64;
        }
        let vdet = self.det_val + m as i64 * self.total_scale - sum_shift;
        let ok = if self.p == 2 {
            vdet < 64 && eliminate(&Pow2, &a, m, out)
        } else if let Some(r) = SmallRing::new(self.p, vdet) {
            eliminate(&r, &a, m, out)
        } else if let Some(r) = WideRing::new(self.p, vdet) {
            eliminate(&r, &a, m, out)
        } else {
            false
        };
        if !ok {
            return Err(NeedsExact);
        }
        for i in 0..m {
            out[i] += shift[i] - self.total_scale;
        }
        Ok(())
    }

    /// Fast valuations with the exact route as fallback.
    pub fn valuations_or_exact(&self, digits: &[u64], out: &mut [i64]) -> Result<(), IwasawaError> {
        if self.valuations(digits, out).is_ok() {
            return Ok(());
        }
        let d = iwasawa(&self.matrix(digits), self.p)?;
        out[..self.m].copy_from_slice(&d.torus_valuations);
        Ok(())
    }
}

trait ResidueRing {
    fn reduce(&self, x: i128) -> u64;
    fn mul(&self, a: u64, b: u64) -> u64;
    fn sub(&self, a: u64, b: u64) -> u64;
    /// Valuation, or `None` when the residue is zero.
    fn val(&self, a: u64) -> Option<u32>;
    fn div_pow(&self, a: u64, k: u32) -> u64;
}

/// Residues modulo `2^64`.
struct Pow2;

impl ResidueRing for Pow2 {
    #[inline]
    fn reduce(&self, x: i128) -> u64 {
        x as u64
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b)
    }
    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b)
    }
    #[inline]
    fn val(&self, a: u64) -> Option<u32> {
        (a != 0).then(|| a.trailing_zeros())
    }
    #[inline]
    fn div_pow(&self, a: u64, k: u32) -> u64 {
        a >> k
    }
}

/// Residues modulo `p^N < 2^32`.
struct SmallRing {
    p: u64,
    modulus: u64,
}

impl SmallRing {
    fn new(p: u64, vdet: i64) -> Option<Self> {
        let (mut modulus, mut n) = (1u64, 0i64);
        while modulus.checked_mul(p).is_some_and(|x| x < 1 << 32) {
            modulus *= p;
            n += 1;
        }
        (vdet < n).then_some(Self { p, modulus })
    }
}

impl ResidueRing for SmallRing {
    #[inline]
    fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus
    }
    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }
    #[inline]
    fn val(&self, mut a: u64) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let mut k = 0;
        while a % self.p == 0 {
            a /= self.p;
            k += 1;
        }
        Some(k)
    }
    #[inline]
    fn div_pow(&self, a: u64, k: u32) -> u64 {
        a / self.p.pow(k)
    }
}

/// Residues modulo `p^N < 2^62`, products through `u128`.
struct WideRing {
    p: u64,
    modulus: u64,
}

impl WideRing {
    fn new(p: u64, vdet: i64) -> Option<Self> {
        let (mut modulus, mut n) = (1u64, 0i64);
        while modulus.checked_mul(p).is_some_and(|x| x < 1 << 62) {
            modulus *= p;
            n += 1;
        }
        (vdet < n).then_some(Self { p, modulus })
    }
}

impl ResidueRing for WideRing {
    #[inline]
    fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }
    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }
    #[inline]
    fn val(&self, mut a: u64) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let mut k = 0;
        while a % self.p == 0 {
            a /= self.p;
            k += 1;
        }
        Some(k)
    }
    #[inline]
    fn div_pow(&self, a: u64, k: u32) -> u64 {
        a / self.p.pow(k)
    }
}

/// Column elimination on residues. Each pivot of valuation `v` costs `v`
/// digits of precision in later columns; `N > v(det)` keeps every pivot
/// visible.
fn eliminate<R: ResidueRing>(ring: &R, a: &[i128; CELLS], m: usize, out: &mut [i64]) -> bool {
    let mut b = [0u64; CELLS];
    for i in 0..m {
        for j in 0..m {
            b[i * MAX_FAST + j] = ring.reduce(a[i * MAX_FAST + j]);
        }
    }
    let mut cols: [usize; MAX_FAST] = std::array::from_fn(|c| c);
    for i in (0..m).rev() {
        let mut best: Option<(usize, u32)> = None;
        for (ci, &c) in cols[..=i].iter().enumerate() {
            if let Some(v) = ring.val(b[i * MAX_FAST + c]) {
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((ci, v));
                }
            }
        }
        let Some((ci, vc)) = best else {
            return false;
        };
        cols.swap(ci, i);
        let c = cols[i];
        out[i] = vc as i64;
        if i == 0 {
            break;
        }
        let unit = ring.div_pow(b[i * MAX_FAST + c], vc);
        for &j in &cols[..i] {
            let x = b[i * MAX_FAST + j];
            if x == 0 {
                continue;
            }
            let y = ring.div_pow(x, vc);
            for row in 0..i {
                let nv = ring.sub(ring.mul(unit, b[row * MAX_FAST + j]), ring.mul(y, b[row * MAX_FAST + c]));
                b[row * MAX_FAST + j] = nv;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsym::rat;
    use crate::matgroups::{build_subgroup, weyl_long, SubgroupKind, TorusPoint};
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn reconstruct<T: Scalar>(d: &IwasawaDecomposition<T>) -> Matrix<T> {
        d.v.mul_ref(&Matrix::diag(&d.torus)).mul_ref(&d.k)
    }

    #[test]
    fn unipotent_lower_example() {
        for p in [2u64, 3] {
            for k in 1..4i64 {
                let c = LocalFieldConfig::new(p).unwrap().power(-k);
                let g = Matrix::from_rows(vec![vec![rat(1, 1), rat(0, 1)], vec![c.clone(), rat(1, 1)]]).unwrap();
                let d = iwasawa(&g, p).unwrap();
                assert_eq!(d.torus_valuations, vec![k, -k]);
                assert_eq!(d.v, Matrix::from_rows(vec![vec![rat(1, 1), rat(1, 1) / c.clone()], vec![rat(0, 1), rat(1, 1)]]).unwrap());
                let kk = Matrix::from_rows(vec![vec![rat(0, 1), rat(-1, 1)], vec![rat(1, 1), rat(1, 1) / c.clone()]]).unwrap();
                assert_eq!(d.k, kk);
                assert_eq!(reconstruct(&d), g);
            }
        }
    }

    #[test]
    fn identity_and_torus() {
        let g: Matrix<BigRat> = Matrix::identity(3);
        let d = iwasawa(&g, 3).unwrap();
        assert_eq!(d.torus_valuations, vec![0, 0, 0]);
        assert!(d.k.is_identity());
        let t = TorusPoint::from_valuations(LocalFieldConfig::new(5).unwrap(), &[2, -1, 0]);
        let d = iwasawa(&t.matrix(), 5).unwrap();
        assert_eq!(d.torus_valuations, vec![2, -1, 0]);
    }

    #[test]
    fn singular_rejected() {
        let g: Matrix<BigRat> = Matrix::zero(2);
        assert_eq!(iwasawa(&g, 2), Err(IwasawaError::Singular));
    }

    #[test]
    fn modulus_examples() {
        let mc = ModulusCharacter::borel(2);
        // diag(p, 1): |p|^{1} |1|^{-1}
        assert!((modulus_eval(&mc, &[rat(2, 1), rat(1, 1)], 2) - 0.5).abs() < 1e-15);
        assert!((modulus_eval(&mc, &[rat(1, 1), rat(1, 1)], 7) - 1.0).abs() < 1e-15);
        let half = ModulusCharacter::borel_power(2, &rat(1, 2));
        let t = [rat(2, 1), rat(1, 2)];
        let full = modulus_eval(&mc, &t, 2);
        assert!((modulus_eval(&half, &t, 2).powi(2) - full).abs() < 1e-12);
        assert_eq!(ModulusCharacter::parabolic(&[1, 1, 1]), ModulusCharacter::borel(3));
        assert_eq!(
            ModulusCharacter::parabolic(&[2, 2]).exponents,
            vec![rat(2, 1), rat(2, 1), rat(-2, 1), rat(-2, 1)]
        );
    }

    #[test]
    fn section_support() {
        let s = UnramifiedSection::cover_model(2, 2);
        assert_eq!(s.eval_valuations(&[1, 0], 2), 0.0);
        assert!((s.eval_valuations(&[2, 0], 2) - 2f64.powf(-0.5)).abs() < 1e-15);
        let g = TorusPoint::from_valuations(LocalFieldConfig::new(3).unwrap(), &[2, 0]).matrix();
        let cfg = LocalFieldConfig::new(3).unwrap();
        assert!((eval_section(&g, &s, cfg).unwrap() - 3f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn works_over_machine_rationals() {
        let g: Matrix<Ratio<i64>> = Matrix::from_rows(vec![
            vec![Ratio::new(1, 2), Ratio::new(3, 1), Ratio::new(0, 1)],
            vec![Ratio::new(4, 1), Ratio::new(1, 1), Ratio::new(1, 4)],
            vec![Ratio::new(6, 1), Ratio::new(5, 1), Ratio::new(2, 1)],
        ])
        .unwrap();
        let d = iwasawa(&g, 2).unwrap();
        assert_eq!(reconstruct(&d), g);
        assert!(d.v.is_upper_unipotent());
        assert!(d.k.is_in_maximal_compact(2));
    }

    fn valuator(n: usize, r: usize, tvals: &[i64], p: u64, vmin: i32) -> FastValuator {
        let cfg = LocalFieldConfig::new(p).unwrap();
        let w: Matrix<BigRat> = weyl_long(n, r).unwrap();
        let u = build_subgroup(SubgroupKind::U0, n, r, None).unwrap().free_positions();
        let mut full = tvals.to_vec();
        full.resize(n * r, 0);
        let h = TorusPoint::from_valuations(cfg, &full).matrix();
        let bases = vec![vmin; u.len()];
        FastValuator::new(
            vec![FactorTemplate::Fixed(w), FactorTemplate::Unipotent(u), FactorTemplate::Fixed(h)],
            bases,
            cfg,
            p.pow(6),
        )
        .unwrap()
    }

    #[test]
    fn fast_matches_exact_grid() {
        for (n, r, p) in [(2, 1, 2u64), (2, 2, 3), (3, 1, 2), (2, 2, 2)] {
            let fv = valuator(n, r, &[2, 1], p, -2);
            let nc = fv.coordinate_count();
            let mut out = [0i64; MAX_FAST];
            for seed in 0..200u64 {
                let digits: Vec<u64> = (0..nc).map(|c| (seed * 7919 + c as u64 * 104729) % p.pow(4)).collect();
                fv.valuations_or_exact(&digits, &mut out).unwrap();
                let exact = iwasawa(&fv.matrix(&digits), p).unwrap().torus_valuations;
                assert_eq!(&out[..n * r], &exact[..], "{n} {r} {p} {digits:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_holds(entries in prop::collection::vec((-30i64..30, 1i64..9), 9), p in prop::sample::select(vec![2u64, 3, 5])) {
            let rows: Vec<Vec<BigRat>> = entries.chunks(3).map(|c| c.iter().map(|&(a, b)| rat(a, b)).collect()).collect();
            let g = Matrix::from_rows(rows).unwrap();
            prop_assume!(!g.det().is_zero());
            let d = iwasawa(&g, p).unwrap();
            prop_assert_eq!(reconstruct(&d), g.clone());
            prop_assert!(d.v.is_upper_unipotent());
            prop_assert!(d.k.is_in_maximal_compact(p));
            // the bottom torus valuation is the least valuation in the last row
            let last = (0..3).filter_map(|j| g.get(2, j).valuation(p).finite()).min().unwrap();
            prop_assert_eq!(d.torus_valuations[2], last);
            let s: i64 = d.torus_valuations.iter().sum();
            prop_assert_eq!(Valuation::Finite(s), g.det().valuation(p));
        }

        #[test]
        fn fast_route_agrees(digits in prop::collection::vec(0u64..729, 9), t0 in 0i64..4, t1 in 0i64..4, p in prop::sample::select(vec![2u64, 3])) {
            let fv = valuator(3, 2, &[t0, t1], p, -2);
            let digits: Vec<u64> = digits.iter().map(|d| d % p.pow(5)).collect();
            let mut out = [0i64; MAX_FAST];
            fv.valuations_or_exact(&digits, &mut out).unwrap();
            let exact = iwasawa(&fv.matrix(&digits), p).unwrap().torus_valuations;
            prop_assert_eq!(&out[..6], &exact[..]);
        }
    }
}
