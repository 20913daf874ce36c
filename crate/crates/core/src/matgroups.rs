//! Matrices, Weyl elements, unipotent subgroups and their characters.
//!
//! Indices in the constructors that mirror matrix-entry formulas
//! ([`elementary`], [`proof_element`], subgroup conditions) are 1-based;
//! [`Matrix::get`] and [`Position`] are 0-based.

use std::fmt;
use std::ops::{Mul, Neg};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, Num, One, Zero};
use serde::{Deserialize, Serialize};

use crate::padic::{LocalElement, LocalFieldConfig, PadicValued, Valuation};
use crate::BigRat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("index ({row}, {col}) out of range for size {size}")]
    IndexOutOfRange { row: usize, col: usize, size: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("element is not in subgroup {0}")]
    NotInSubgroup(String),
    #[error("torus entry {0} is zero")]
    ZeroTorusEntry(usize),
}

/// Field scalars usable as matrix entries: exact rationals of any integer width.
pub trait Scalar: Clone + Num + Neg<Output = Self> + PartialEq + FromPrimitive + PadicValued + fmt::Debug {}

impl<T> Scalar for T where T: Clone + Num + Neg<Output = T> + PartialEq + FromPrimitive + PadicValued + fmt::Debug {}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    size: usize,
    entries: Vec<T>,
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.size {
            write!(f, "  [")?;
            for j in 0..self.size {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entries[i * self.size + j])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zero(size: usize) -> Self {
        Self { size, entries: vec![T::zero(); size * size] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zero(size);
        for i in 0..size {
            m.entries[i * size + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, GroupError> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for r in rows {
            if r.len() != size {
                return Err(GroupError::SizeMismatch { expected: size, got: r.len() });
            }
            entries.extend(r);
        }
        Ok(Self { size, entries })
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zero(values.len());
        for (i, v) in values.iter().enumerate() {
            m.entries[i * values.len() + i] = v.clone();
        }
        m
    }

    pub fn block_diag(blocks: &[Matrix<T>]) -> Self {
        let size = blocks.iter().map(|b| b.size).sum();
        let mut m = Self::zero(size);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.size {
                for j in 0..b.size {
                    m.set(off + i, off + j, b.get(i, j).clone());
                }
            }
            off += b.size;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.size + j] = v;
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                m.set(j, i, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.size {
            self.entries.swap(i * self.size + a, i * self.size + b);
        }
    }

    pub fn mul_ref(&self, o: &Self) -> Self {
        assert_eq!(self.size, o.size, "matrix sizes differ");
        let n = self.size;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.entries[k * n + j];
                    if b.is_zero() {
                        continue;
                    }
                    let t = a.clone() * b.clone();
                    out.entries[i * n + j] = out.entries[i * n + j].clone() + t;
                }
            }
        }
        out
    }

    /// Exact determinant by Gaussian elimination.
    pub fn det(&self) -> T {
        let n = self.size;
        let mut a = self.entries.clone();
        let mut det = T::one();
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| !a[r * n + c].is_zero()) else {
                return T::zero();
            };
            if piv != c {
                for j in 0..n {
                    a.swap(c * n + j, piv * n + j);
                }
                det = -det;
            }
            let pv = a[c * n + c].clone();
            det = det * pv.clone();
            for r in c + 1..n {
                let f = a[r * n + c].clone() / pv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let t = f.clone() * a[c * n + j].clone();
                    a[r * n + j] = a[r * n + j].clone() - t;
                }
            }
        }
        det
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Self, GroupError> {
        let n = self.size;
        let mut a = self.entries.clone();
        let mut inv = Self::identity(n).entries;
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[r * n + c].is_zero()).ok_or(GroupError::Singular)?;
            if piv != c {
                for j in 0..n {
                    a.swap(c * n + j, piv * n + j);
                    inv.swap(c * n + j, piv * n + j);
                }
            }
            let pv = a[c * n + c].clone();
            for j in 0..n {
                a[c * n + j] = a[c * n + j].clone() / pv.clone();
                inv[c * n + j] = inv[c * n + j].clone() / pv.clone();
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a[r * n + c].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = f.clone() * a[c * n + j].clone();
                    a[r * n + j] = a[r * n + j].clone() - t;
                    let t = f.clone() * inv[c * n + j].clone();
                    inv[r * n + j] = inv[r * n + j].clone() - t;
                }
            }
        }
        Ok(Self { size: n, entries: inv })
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.size)
    }

    /// Exactly one `1` per row and per column, zeros elsewhere.
    pub fn is_permutation(&self) -> bool {
        let n = self.size;
        let ok_entries = self.entries.iter().all(|x| x.is_zero() || x.is_one());
        let rows = (0..n).all(|i| (0..n).filter(|&j| self.get(i, j).is_one()).count() == 1);
        let cols = (0..n).all(|j| (0..n).filter(|&i| self.get(i, j).is_one()).count() == 1);
        ok_entries && rows && cols
    }

    pub fn is_upper_unipotent(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).all(|j| match i.cmp(&j) {
                std::cmp::Ordering::Equal => self.get(i, j).is_one(),
                std::cmp::Ordering::Greater => self.get(i, j).is_zero(),
                std::cmp::Ordering::Less => true,
            })
        })
    }

    pub fn is_lower_unipotent(&self) -> bool {
        self.transpose().is_upper_unipotent()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// All entries `p`-integral and determinant a `p`-unit.
    pub fn is_in_maximal_compact(&self, p: u64) -> bool {
        self.entries.iter().all(|x| x.valuation(p) >= Valuation::Finite(0))
            && self.det().valuation(p) == Valuation::Finite(0)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { size: self.size, entries: self.entries.iter().map(f).collect() }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, o: &Matrix<T>) -> Matrix<T> {
        self.mul_ref(o)
    }
}

impl<T: Scalar> Mul for Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, o: Matrix<T>) -> Matrix<T> {
        self.mul_ref(&o)
    }
}

/// `x_{a,b}(m) = I + m e_{a,b}` (1-based indices).
pub fn elementary<T: Scalar>(a: usize, b: usize, m: T, size: usize) -> Result<Matrix<T>, GroupError> {
    if a == 0 || b == 0 || a > size || b > size || a == b {
        return Err(GroupError::IndexOutOfRange { row: a, col: b, size });
    }
    let mut x = Matrix::identity(size);
    x.set(a - 1, b - 1, m);
    Ok(x)
}

fn check_nr(n: usize, r: usize) -> Result<(), GroupError> {
    if n < 2 || r < 1 {
        return Err(GroupError::InvalidParameters(format!("need n >= 2 and r >= 1, got n={n}, r={r}")));
    }
    Ok(())
}

/// The permutation matrix with a one at `(a + bn, (a-1)r + b + 1)` for
/// `1 <= a <= n`, `0 <= b <= r-1`.
pub fn weyl_w0<T: Scalar>(n: usize, r: usize) -> Result<Matrix<T>, GroupError> {
    check_nr(n, r)?;
    let m = n * r;
    let mut w = Matrix::zero(m);
    for a in 1..=n {
        for b in 0..r {
            w.set(a + b * n - 1, (a - 1) * r + b, T::one());
        }
    }
    Ok(w)
}

/// `diag(J_n, ..., J_n)` with `r` antidiagonal blocks.
pub fn weyl_wj<T: Scalar>(n: usize, r: usize) -> Result<Matrix<T>, GroupError> {
    check_nr(n, r)?;
    let m = n * r;
    let mut w = Matrix::zero(m);
    for blk in 0..r {
        for i in 0..n {
            w.set(blk * n + i, blk * n + n - 1 - i, T::one());
        }
    }
    Ok(w)
}

/// `w_J w_0`.
pub fn weyl_long<T: Scalar>(n: usize, r: usize) -> Result<Matrix<T>, GroupError> {
    Ok(weyl_wj::<T>(n, r)?.mul_ref(&weyl_w0(n, r)?))
}

/// 0-based matrix position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    /// From 1-based indices.
    pub fn one_based(a: usize, b: usize) -> Self {
        Self { row: a - 1, col: b - 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoordTag {
    Free,
    Zero,
    Fixed(BigRat),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coordinate {
    pub pos: Position,
    pub tag: CoordTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Triangularity {
    Upper,
    Lower,
}

/// The subgroups appearing in the unfolding and in the Whittaker reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubgroupKind {
    /// `U^0_{nr}`: block-upper with every block in `Mat^0`.
    U0,
    /// `U^1_{nr}`: `U^0` with `X_{1,2}` diagonal.
    U1,
    /// `U^2_{nr}`: `r` diagonal copies of `V_n`.
    U2,
    /// `U^3_{nr}`: block-lower with strictly upper blocks, `Y[1,2] = 0`.
    U3,
    /// `U_{n,j}` (needs `r = n-1`, `2 <= j <= n-1`).
    Unj,
    /// `U_{n,j-1,1}`, parametrised by `j` (needs `3 <= j <= n-1`).
    Unj1,
    /// `U_{n,j-1,2}`, parametrised by `j`.
    Unj2,
    /// Upper unipotent `V_r` of `GL_r`.
    Vr,
}

/// Ordered coordinate list for a unipotent subgroup of `GL_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnipotentCoordinates {
    pub size: usize,
    pub triangularity: Triangularity,
    pub coords: Vec<Coordinate>,
}

impl UnipotentCoordinates {
    pub fn free_positions(&self) -> Vec<Position> {
        self.coords.iter().filter(|c| c.tag == CoordTag::Free).map(|c| c.pos).collect()
    }

    pub fn free_count(&self) -> usize {
        self.coords.iter().filter(|c| c.tag == CoordTag::Free).count()
    }

    /// `I + Σ x_k e_{pos_k}`, free coordinates taken from `values` in order.
    pub fn instantiate<T: Scalar>(&self, values: &[T]) -> Result<Matrix<T>, GroupError>
    where
        T: From<BigRat>,
    {
        if values.len() != self.free_count() {
            return Err(GroupError::SizeMismatch { expected: self.free_count(), got: values.len() });
        }
        let mut u = Matrix::identity(self.size);
        let mut it = values.iter();
        for c in &self.coords {
            match &c.tag {
                CoordTag::Free => u.set(c.pos.row, c.pos.col, it.next().expect("counted").clone()),
                CoordTag::Zero => {}
                CoordTag::Fixed(v) => u.set(c.pos.row, c.pos.col, T::from(v.clone())),
            }
        }
        Ok(u)
    }

    /// Membership: unipotent, supported on the declared free/fixed positions.
    pub fn contains<T: Scalar>(&self, u: &Matrix<T>) -> bool {
        if u.size() != self.size {
            return false;
        }
        let allowed: std::collections::HashSet<Position> = self
            .coords
            .iter()
            .filter(|c| !matches!(c.tag, CoordTag::Zero))
            .map(|c| c.pos)
            .collect();
        (0..self.size).all(|i| {
            (0..self.size).all(|j| {
                let x = u.get(i, j);
                if i == j {
                    x.is_one()
                } else {
                    x.is_zero() || allowed.contains(&Position { row: i, col: j })
                }
            })
        })
    }

    fn retain_free(&mut self, pred: impl Fn(Position) -> bool) {
        for c in &mut self.coords {
            if c.tag == CoordTag::Free && !pred(c.pos) {
                c.tag = CoordTag::Zero;
            }
        }
    }
}

/// Block `(bi, bj)` entry `(l1, l2)`, all 1-based, in blocks of size `bs`.
fn block_pos(bs: usize, bi: usize, bj: usize, l1: usize, l2: usize) -> Position {
    Position { row: (bi - 1) * bs + l1 - 1, col: (bj - 1) * bs + l2 - 1 }
}

fn u3_coords(n: usize, r: usize) -> UnipotentCoordinates {
    let mut coords = Vec::new();
    for i in 2..=r {
        for j in 1..i {
            for l1 in 1..=n {
                for l2 in 1..=n {
                    let free = l1 < l2 && !(l1 == 1 && l2 == 2);
                    coords.push(Coordinate {
                        pos: block_pos(n, i, j, l1, l2),
                        tag: if free { CoordTag::Free } else { CoordTag::Zero },
                    });
                }
            }
        }
    }
    UnipotentCoordinates { size: n * r, triangularity: Triangularity::Lower, coords }
}

/// Position of `Y_{i,l}[b, c]` inside the block-lower group (blocks of size `n`).
pub fn y_pos(n: usize, i: usize, l: usize, b: usize, c: usize) -> Position {
    block_pos(n, i, l, b, c)
}

fn unj_coords(n: usize, j: usize) -> UnipotentCoordinates {
    let r = n - 1;
    let mut u = u3_coords(n, r);
    // U_{n,2}: Y_{n-1,i} = 0
    u.retain_free(|p| p.row / n + 1 != n - 1);
    for jj in 3..=j {
        let row_blk = n - jj + 1;
        u.retain_free(|p| {
            let (bi, bl) = (p.row / n + 1, p.col / n + 1);
            let c = p.col % n + 1;
            let kill_row = bi == row_blk && bl <= n - jj;
            let kill_col = (2..=n - jj).contains(&bi) && bl < bi && c == jj;
            !(kill_row || kill_col)
        });
    }
    u
}

fn unj1_coords(n: usize, j: usize) -> UnipotentCoordinates {
    let mut u = unj_coords(n, j - 1);
    u.retain_free(|p| {
        let (bi, bl) = (p.row / n + 1, p.col / n + 1);
        let (b, c) = (p.row % n + 1, p.col % n + 1);
        !((3..=n - j + 1).contains(&bi) && bl + 2 <= bi && c == j && b < j)
    });
    u
}

fn unj2_coords(n: usize, j: usize) -> UnipotentCoordinates {
    let mut u = unj1_coords(n, j);
    u.retain_free(|p| {
        let (bi, bl) = (p.row / n + 1, p.col / n + 1);
        let (b, c) = (p.row % n + 1, p.col % n + 1);
        !((2..=n - j + 1).contains(&bi) && bl + 1 == bi && b == j - 1 && c == j)
    });
    u
}

/// Coordinate list of one of the named subgroups.
pub fn build_subgroup(kind: SubgroupKind, n: usize, r: usize, j: Option<usize>) -> Result<UnipotentCoordinates, GroupError> {
    check_nr(n, r)?;
    let needs_j = matches!(kind, SubgroupKind::Unj | SubgroupKind::Unj1 | SubgroupKind::Unj2);
    if needs_j != j.is_some() {
        return Err(GroupError::InvalidParameters(format!("{kind:?}: j must be given iff the kind needs it")));
    }
    let m = n * r;
    Ok(match kind {
        SubgroupKind::U0 | SubgroupKind::U1 => {
            let mut coords = Vec::new();
            for bi in 1..=n {
                for bj in bi + 1..=n {
                    for l1 in 1..=r {
                        for l2 in 1..=r {
                            let mut free = l1 >= l2;
                            if kind == SubgroupKind::U1 && bi == 1 && bj == 2 && l1 != l2 {
                                free = false;
                            }
                            coords.push(Coordinate {
                                pos: block_pos(r, bi, bj, l1, l2),
                                tag: if free { CoordTag::Free } else { CoordTag::Zero },
                            });
                        }
                    }
                }
            }
            UnipotentCoordinates { size: m, triangularity: Triangularity::Upper, coords }
        }
        SubgroupKind::U2 => {
            let mut coords = Vec::new();
            for blk in 1..=r {
                for a in 1..=n {
                    for b in a + 1..=n {
                        coords.push(Coordinate { pos: block_pos(n, blk, blk, a, b), tag: CoordTag::Free });
                    }
                }
            }
            UnipotentCoordinates { size: m, triangularity: Triangularity::Upper, coords }
        }
        SubgroupKind::U3 => u3_coords(n, r),
        SubgroupKind::Unj | SubgroupKind::Unj1 | SubgroupKind::Unj2 => {
            let j = j.expect("checked");
            if r != n - 1 {
                return Err(GroupError::InvalidParameters(format!("{kind:?} needs r = n-1")));
            }
            let lo = if kind == SubgroupKind::Unj { 2 } else { 3 };
            if !(lo..=n - 1).contains(&j) {
                return Err(GroupError::InvalidParameters(format!("{kind:?}: j={j} out of range")));
            }
            match kind {
                SubgroupKind::Unj => unj_coords(n, j),
                SubgroupKind::Unj1 => unj1_coords(n, j),
                _ => unj2_coords(n, j),
            }
        }
        SubgroupKind::Vr => {
            let mut coords = Vec::new();
            for a in 1..=r {
                for b in a + 1..=r {
                    coords.push(Coordinate { pos: Position::one_based(a, b), tag: CoordTag::Free });
                }
            }
            UnipotentCoordinates { size: r, triangularity: Triangularity::Upper, coords }
        }
    })
}

/// The additive characters of the unipotent groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharacterKind {
    /// `ψ(tr(X_{1,2} + ... + X_{n-1,n}))` on `U_{nr}`.
    PsiU,
    /// `ψ(v[1,2] + ... + v[m-1,m])` on the upper unipotent of `GL_m`.
    PsiVn,
    /// Product of `ψ_{V_n}` over the diagonal blocks of `U^2_{nr}`.
    PsiU2,
    /// `ψ(Σ_{i=2}^{n-j} Y_{i,i-1}[j-1, j+1])` on `U_{n,j}`.
    PsiUnj,
}

/// Positions whose entries are summed inside `ψ` for a character.
pub fn character_positions(kind: CharacterKind, n: usize, r: usize, j: Option<usize>) -> Result<Vec<Position>, GroupError> {
    Ok(match kind {
        CharacterKind::PsiU => {
            let mut v = Vec::new();
            for bi in 1..n {
                for l in 1..=r {
                    v.push(block_pos(r, bi, bi + 1, l, l));
                }
            }
            v
        }
        // here `n` is the size of the group
        CharacterKind::PsiVn => (1..n).map(|i| Position::one_based(i, i + 1)).collect(),
        CharacterKind::PsiU2 => {
            let mut v = Vec::new();
            for blk in 1..=r {
                for a in 1..n {
                    v.push(block_pos(n, blk, blk, a, a + 1));
                }
            }
            v
        }
        CharacterKind::PsiUnj => {
            let j = j.ok_or_else(|| GroupError::InvalidParameters("PsiUnj needs j".into()))?;
            if j < 2 || j + 1 > n {
                return Err(GroupError::InvalidParameters(format!("PsiUnj: j={j} out of range")));
            }
            (2..=n - j).map(|i| y_pos(n, i, i - 1, j - 1, j + 1)).collect()
        }
    })
}

/// Value of a character on a group element; membership is checked.
pub fn character_value<F: Float>(
    kind: CharacterKind,
    u: &Matrix<BigRat>,
    n: usize,
    r: usize,
    j: Option<usize>,
    cfg: LocalFieldConfig,
) -> Result<Complex<F>, GroupError> {
    let group = match kind {
        CharacterKind::PsiU => build_subgroup(SubgroupKind::U0, n, r, None)?,
        CharacterKind::PsiVn => {
            if n < 1 {
                return Err(GroupError::InvalidParameters("empty group".into()));
            }
            upper_unipotent_coords(n)
        }
        CharacterKind::PsiU2 => build_subgroup(SubgroupKind::U2, n, r, None)?,
        CharacterKind::PsiUnj => {
            let jj = j.ok_or_else(|| GroupError::InvalidParameters("PsiUnj needs j".into()))?;
            build_subgroup(SubgroupKind::Unj, n, r, Some(jj))?
        }
    };
    let ok = match kind {
        // ψ_U extends to all of U_{nr}; check block-upper unipotence only
        CharacterKind::PsiU => is_block_upper_unipotent(u, r),
        _ => group.contains(u),
    };
    if !ok {
        return Err(GroupError::NotInSubgroup(format!("{kind:?}")));
    }
    let sum = character_positions(kind, n, r, j)?
        .into_iter()
        .fold(BigRat::zero(), |acc, p| acc + u.get(p.row, p.col));
    Ok(LocalElement::new(sum, cfg).additive_character())
}

fn upper_unipotent_coords(m: usize) -> UnipotentCoordinates {
    let mut coords = Vec::new();
    for a in 1..=m {
        for b in a + 1..=m {
            coords.push(Coordinate { pos: Position::one_based(a, b), tag: CoordTag::Free });
        }
    }
    UnipotentCoordinates { size: m, triangularity: Triangularity::Upper, coords }
}

fn is_block_upper_unipotent<T: Scalar>(u: &Matrix<T>, bs: usize) -> bool {
    let m = u.size();
    (0..m).all(|i| {
        (0..m).all(|j| {
            let (bi, bj) = (i / bs, j / bs);
            if bi == bj {
                if i == j {
                    u.get(i, j).is_one()
                } else {
                    u.get(i, j).is_zero()
                }
            } else if bi > bj {
                u.get(i, j).is_zero()
            } else {
                true
            }
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbedMode {
    /// `g ↦ diag(g, I_r, ..., I_r)`.
    Prop2,
    /// `g ↦ diag(diag(g, I_{n-r}), I_n, ..., I_n)`, `r < n`.
    Thm1,
}

pub fn embed_g0<T: Scalar>(g: &Matrix<T>, n: usize, r: usize, mode: EmbedMode) -> Result<Matrix<T>, GroupError> {
    check_nr(n, r)?;
    if g.size() != r {
        return Err(GroupError::SizeMismatch { expected: r, got: g.size() });
    }
    match mode {
        EmbedMode::Prop2 => {
            let mut blocks = vec![g.clone()];
            blocks.extend((1..n).map(|_| Matrix::identity(r)));
            Ok(Matrix::block_diag(&blocks))
        }
        EmbedMode::Thm1 => {
            if r >= n {
                return Err(GroupError::InvalidParameters(format!("thm1 embedding needs r < n, got r={r}, n={n}")));
            }
            let top = Matrix::block_diag(&[g.clone(), Matrix::identity(n - r)]);
            let mut blocks = vec![top];
            blocks.extend((1..r).map(|_| Matrix::identity(n)));
            Ok(Matrix::block_diag(&blocks))
        }
    }
}

/// `diag(a_1, ..., a_m)` with nonzero entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    entries: Vec<BigRat>,
}

impl TorusPoint {
    pub fn new(entries: Vec<BigRat>) -> Result<Self, GroupError> {
        if let Some(i) = entries.iter().position(|x| x.is_zero()) {
            return Err(GroupError::ZeroTorusEntry(i));
        }
        Ok(Self { entries })
    }

    /// `diag(p^{v_1}, ..., p^{v_m})`.
    pub fn from_valuations(cfg: LocalFieldConfig, vals: &[i64]) -> Self {
        Self { entries: vals.iter().map(|&v| cfg.power(v)).collect() }
    }

    pub fn identity(m: usize) -> Self {
        Self { entries: vec![BigRat::one(); m] }
    }

    pub fn entries(&self) -> &[BigRat] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn a(&self, i: usize) -> &BigRat {
        &self.entries[i - 1]
    }

    pub fn valuations(&self, p: u64) -> Vec<i64> {
        self.entries
            .iter()
            .map(|x| x.valuation(p).finite().expect("torus entries are nonzero"))
            .collect()
    }

    pub fn matrix(&self) -> Matrix<BigRat> {
        Matrix::diag(&self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SupportKind {
    /// `|a_i| <= 1` for `i <= n`, `|a_i| = 1` for `i > n`.
    T0,
    /// Every `a_i` has valuation `>= 0` divisible by `n`.
    PowerSublocus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportDomain {
    pub n: usize,
    pub r: usize,
    pub kind: SupportKind,
}

impl SupportDomain {
    pub fn contains(&self, t: &TorusPoint, p: u64) -> bool {
        let v = t.valuations(p);
        match self.kind {
            SupportKind::T0 => v.iter().enumerate().all(|(i, &x)| if i < self.n { x >= 0 } else { x == 0 }),
            SupportKind::PowerSublocus => v.iter().all(|&x| x >= 0 && x % self.n as i64 == 0),
        }
    }
}

/// Named matrices from the proof of the Whittaker identity (`r = n-1`
/// for the δ and `t_j` families).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProofElementKind {
    /// `Π_{i=2}^{n-1} x_{i,i-1}(1)`.
    Delta0,
    /// `Π_{i=2}^{n-1} x_{(i-1)n+1,(i-2)n+2}(a_i^{-1})`.
    Delta1,
    /// `δ_{j-1}(t) = Π_{i=2}^{n-j+1} x_{(i-1)n+j-1, n(i-2)+j}(a_{j+i-2}^{-1})`.
    DeltaJm1,
    /// `t_j = diag(A_{j,j}, A_{j,j+1}, ..., A_{j,n-1}, I_n, ..., I_n)`.
    TJ,
    /// `w_0 t_0 w_0^{-1} = diag(A_1, ..., A_r)`, `A_i = diag(a_i, I_{n-1})`.
    W0T0W0Inv,
}

pub fn proof_element(
    kind: ProofElementKind,
    t: &TorusPoint,
    n: usize,
    r: usize,
    j: Option<usize>,
) -> Result<Matrix<BigRat>, GroupError> {
    check_nr(n, r)?;
    if t.len() != r {
        return Err(GroupError::SizeMismatch { expected: r, got: t.len() });
    }
    let m = n * r;
    let one = BigRat::one();
    let needs_n_minus_1 = !matches!(kind, ProofElementKind::W0T0W0Inv);
    if needs_n_minus_1 && r != n - 1 {
        return Err(GroupError::InvalidParameters(format!("{kind:?} is defined for r = n-1")));
    }
    let inv = |i: usize| one.clone() / t.a(i).clone();
    let mut out = Matrix::identity(m);
    match kind {
        ProofElementKind::Delta0 => {
            for i in 2..n {
                out = out.mul_ref(&elementary(i, i - 1, one.clone(), m)?);
            }
        }
        ProofElementKind::Delta1 => {
            for i in 2..n {
                out = out.mul_ref(&elementary((i - 1) * n + 1, (i - 2) * n + 2, inv(i), m)?);
            }
        }
        ProofElementKind::DeltaJm1 => {
            let j = j.ok_or_else(|| GroupError::InvalidParameters("DeltaJm1 needs j".into()))?;
            if !(2..=n - 1).contains(&j) {
                return Err(GroupError::InvalidParameters(format!("DeltaJm1: j={j} out of range")));
            }
            for i in 2..=n - j + 1 {
                out = out.mul_ref(&elementary((i - 1) * n + j - 1, n * (i - 2) + j, inv(j + i - 2), m)?);
            }
        }
        ProofElementKind::TJ => {
            let j = j.ok_or_else(|| GroupError::InvalidParameters("TJ needs j".into()))?;
            if !(1..=n - 1).contains(&j) {
                return Err(GroupError::InvalidParameters(format!("TJ: j={j} out of range")));
            }
            let mut d = Vec::with_capacity(m);
            for i in 1..=j {
                d.push(t.a(i).clone());
            }
            d.extend((j..n).map(|_| one.clone()));
            for i in j + 1..n {
                d.extend((0..j).map(|_| one.clone()));
                d.push(t.a(i).clone());
                d.extend((0..n - j - 1).map(|_| one.clone()));
            }
            d.resize(m, one.clone());
            out = Matrix::diag(&d);
        }
        ProofElementKind::W0T0W0Inv => {
            let mut d = Vec::with_capacity(m);
            for i in 1..=r {
                d.push(t.a(i).clone());
                d.extend((1..n).map(|_| one.clone()));
            }
            out = Matrix::diag(&d);
        }
    }
    Ok(out)
}

/// `diag(p^{v_1}, ..., p^{v_r})` embedded in the top-left corner.
pub fn torus_t0(t: &TorusPoint, n: usize, r: usize) -> Result<Matrix<BigRat>, GroupError> {
    embed_g0(&t.matrix(), n, r, EmbedMode::Prop2)
}
