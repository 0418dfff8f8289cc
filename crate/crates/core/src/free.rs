//! Boundary representations of free groups `F_r` by exact enumeration.
//!
//! The Cayley graph of `F_r` with respect to `a₁^{±1}, …, a_r^{±1}` is the
//! `2r`-regular tree, so reduced words are tree vertices with `q = 2r − 1`
//! and left multiplication is a tree automorphism. Letter `2i` is `a_{i+1}`
//! and letter `2i + 1` its inverse.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::ScaledValue;
use crate::tree::coefficient::CoefficientMatrix;
use crate::tree::geometry::{
    busemann_decomposition, cell_count, sphere_index, BoundaryCell, CylinderFunction, Vertex,
};
use crate::tree::germ::{InverseGerm, TreeIsometry};
use crate::tree::harish::{ball_xi2, xi_closed};
use crate::tree::montecarlo::SchurVectors;

/// Upper bound on the number of group elements summed by the ball
/// routines (`|B_12| = 1 062 881` for `r = 2`).
pub const MAX_BALL_WORDS: u64 = 1_100_000;

/// Rank `r ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreeGroupParams {
    r: u32,
}

impl FreeGroupParams {
    pub fn new(r: u32) -> Result<Self> {
        if !(2..=13).contains(&r) {
            return Err(Error::InvalidParameter(format!(
                "rank must be in 2..=13, got {r}"
            )));
        }
        Ok(FreeGroupParams { r })
    }

    pub fn rank(&self) -> u32 {
        self.r
    }

    /// Tree parameter `2r − 1`.
    pub fn q(&self) -> u32 {
        2 * self.r - 1
    }
}

fn inverse_letter(l: u8) -> u8 {
    l ^ 1
}

/// Reduced word in `F_r`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ReducedWord {
    r: u32,
    letters: Vec<u8>,
}

impl ReducedWord {
    pub fn identity(r: u32) -> Self {
        ReducedWord {
            r,
            letters: Vec::new(),
        }
    }

    /// Validates letters and reducedness.
    pub fn new(r: u32, letters: Vec<u8>) -> Result<Self> {
        FreeGroupParams::new(r)?;
        if let Some(&l) = letters.iter().find(|&&l| l as u32 >= 2 * r) {
            return Err(Error::InvalidParameter(format!(
                "letter {l} out of range for rank {r}"
            )));
        }
        if letters.windows(2).any(|w| w[1] == inverse_letter(w[0])) {
            return Err(Error::InvalidParameter("word is not reduced".into()));
        }
        Ok(ReducedWord { r, letters })
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(r: u32, letters: &[u8]) -> Result<Self> {
        let mut out: Vec<u8> = Vec::with_capacity(letters.len());
        for &l in letters {
            if out.last() == Some(&inverse_letter(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self::new(r, out)
    }

    /// Parses `a`, `b`, ... for generators and `A`, `B`, ... for inverses;
    /// `e` or the empty string is the identity.
    pub fn parse(r: u32, s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Self::identity(r));
        }
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                if c.is_ascii_lowercase() && c != 'e' || c.is_ascii_uppercase() && c != 'E' {
                    let idx = c.to_ascii_lowercase() as u8 - b'a';
                    let idx = if idx > 4 { idx - 1 } else { idx }; // skip 'e'
                    Ok(2 * idx + u8::from(c.is_ascii_uppercase()))
                } else {
                    Err(Error::Parse(format!("bad letter '{c}' in '{s}'")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::reduce(r, &letters)
    }

    pub fn rank(&self) -> u32 {
        self.r
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn inverse(&self) -> Self {
        ReducedWord {
            r: self.r,
            letters: self
                .letters
                .iter()
                .rev()
                .map(|&l| inverse_letter(l))
                .collect(),
        }
    }

    /// Reduced product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut cancel = 0;
        let (a, b) = (&self.letters, &other.letters);
        while cancel < a.len()
            && cancel < b.len()
            && b[cancel] == inverse_letter(a[a.len() - 1 - cancel])
        {
            cancel += 1;
        }
        let mut letters = a[..a.len() - cancel].to_vec();
        letters.extend_from_slice(&b[cancel..]);
        ReducedWord { r: self.r, letters }
    }

    pub fn prefix(&self, len: usize) -> Self {
        ReducedWord {
            r: self.r,
            letters: self.letters[..len].to_vec(),
        }
    }

    /// Gromov product `(self | other)_e`: length of the common prefix.
    pub fn confluence(&self, other: &Self) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Tree vertex for `q = 2r − 1`.
    pub fn encode(&self) -> Vertex {
        let mut word = Vec::with_capacity(self.letters.len());
        for (i, &l) in self.letters.iter().enumerate() {
            if i == 0 {
                word.push(l as u32);
            } else {
                let banned = inverse_letter(self.letters[i - 1]);
                word.push(if l < banned { l as u32 } else { l as u32 - 1 });
            }
        }
        Vertex::from_word_unchecked(word)
    }

    /// Inverse of [`ReducedWord::encode`].
    pub fn decode(r: u32, v: &Vertex) -> Result<Self> {
        let mut letters: Vec<u8> = Vec::with_capacity(v.len());
        for (i, &c) in v.word().iter().enumerate() {
            let l = if i == 0 {
                c
            } else {
                let banned = inverse_letter(letters[i - 1]) as u32;
                if c < banned {
                    c
                } else {
                    c + 1
                }
            };
            letters.push(
                u8::try_from(l).map_err(|_| Error::InvalidParameter("letter too large".into()))?,
            );
        }
        Self::new(r, letters)
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.letters {
            let idx = l / 2;
            let base = if idx >= 4 { b'a' + idx + 1 } else { b'a' + idx };
            let c = if l % 2 == 1 {
                base.to_ascii_uppercase()
            } else {
                base
            };
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

/// Boundary rays extending a reduced word; the empty word is `∂F_r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeCell {
    pub word: ReducedWord,
}

impl FreeCell {
    pub fn whole(r: u32) -> Self {
        FreeCell {
            word: ReducedWord::identity(r),
        }
    }

    pub fn new(word: ReducedWord) -> Self {
        FreeCell { word }
    }

    /// `1 / (2r (2r−1)^{|w|−1})`.
    pub fn measure(&self) -> BigRational {
        let r = self.word.rank();
        if self.word.is_identity() {
            return BigRational::one();
        }
        let den =
            BigInt::from(2 * r) * num_traits::pow(BigInt::from(2 * r - 1), self.word.len() - 1);
        BigRational::new(BigInt::one(), den)
    }

    pub fn children(&self) -> Vec<FreeCell> {
        let r = self.word.rank();
        let last = self.word.letters().last().copied();
        (0..2 * r as u8)
            .filter(|&l| Some(inverse_letter(l)) != last)
            .map(|l| {
                let mut letters = self.word.letters().to_vec();
                letters.push(l);
                FreeCell {
                    word: ReducedWord { r, letters },
                }
            })
            .collect()
    }
}

impl fmt::Display for FreeCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C[{}]", self.word)
    }
}

/// Words of length `len` with the first `prefix.len()` letters fixed, in
/// lexicographic order.
pub struct SphereIter {
    r: u32,
    len: usize,
    fixed: usize,
    current: Option<Vec<u8>>,
}

fn smallest_after(prev: Option<u8>) -> u8 {
    match prev {
        Some(p) if inverse_letter(p) == 0 => 1,
        _ => 0,
    }
}

impl SphereIter {
    fn new(r: u32, len: usize, prefix: &[u8]) -> Self {
        let mut cur = prefix.to_vec();
        while cur.len() < len {
            let next = smallest_after(cur.last().copied());
            cur.push(next);
        }
        SphereIter {
            r,
            len,
            fixed: prefix.len(),
            current: Some(cur),
        }
    }

    fn advance(&mut self) {
        let Some(cur) = self.current.as_mut() else {
            return;
        };
        let top = 2 * self.r as u8;
        for i in (self.fixed..self.len).rev() {
            let prev = if i == 0 { None } else { Some(cur[i - 1]) };
            let mut next = cur[i] + 1;
            if prev.map(inverse_letter) == Some(next) {
                next += 1;
            }
            if next < top {
                cur[i] = next;
                for j in i + 1..self.len {
                    cur[j] = smallest_after(Some(cur[j - 1]));
                }
                return;
            }
        }
        self.current = None;
    }
}

impl Iterator for SphereIter {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        let out = self.current.clone()?;
        self.advance();
        Some(ReducedWord {
            r: self.r,
            letters: out,
        })
    }
}

/// Reduced words of length exactly `n`.
pub fn enumerate_sphere(r: u32, n: usize) -> Result<SphereIter> {
    FreeGroupParams::new(r)?;
    Ok(SphereIter::new(r, n, &[]))
}

/// `2r (2r−1)^{n−1}` (1 for `n = 0`).
pub fn sphere_count(r: u32, n: usize) -> Option<u64> {
    crate::tree::geometry::sphere_size(2 * r - 1, n)
}

fn ball_count(r: u32, n: usize) -> Option<u64> {
    (0..=n).try_fold(0u64, |acc, m| acc.checked_add(sphere_count(r, m)?))
}

fn check_ball(r: u32, n: usize) -> Result<()> {
    FreeGroupParams::new(r)?;
    match ball_count(r, n) {
        Some(c) if c <= MAX_BALL_WORDS => Ok(()),
        _ => Err(Error::ResourceLimit(format!(
            "ball of radius {n} in F_{r} exceeds {MAX_BALL_WORDS} words"
        ))),
    }
}

/// Prefixes used to split a sphere across workers: every reduced word of
/// length `min(n, 2)`.
fn sphere_prefixes(r: u32, n: usize) -> Vec<Vec<u8>> {
    SphereIter::new(r, n.min(2), &[])
        .map(|w| w.letters)
        .collect()
}

fn sphere_words_par(r: u32, n: usize) -> impl ParallelIterator<Item = SphereIter> {
    sphere_prefixes(r, n)
        .into_par_iter()
        .map(move |p| SphereIter::new(r, n, &p))
}

/// Left multiplication `x ↦ γx` as a tree automorphism.
#[derive(Clone, Debug)]
pub struct LeftMul {
    gamma: ReducedWord,
    inverse: ReducedWord,
}

impl LeftMul {
    pub fn new(gamma: ReducedWord) -> Self {
        let inverse = gamma.inverse();
        LeftMul { gamma, inverse }
    }
}

impl TreeIsometry for LeftMul {
    fn q(&self) -> u32 {
        2 * self.gamma.rank() - 1
    }

    fn image(&mut self, v: &Vertex) -> Vertex {
        let x = ReducedWord::decode(self.gamma.rank(), v).expect("vertex of the Cayley tree");
        self.gamma.mul(&x).encode()
    }

    fn preimage(&mut self, v: &Vertex) -> Vertex {
        let x = ReducedWord::decode(self.gamma.rank(), v).expect("vertex of the Cayley tree");
        self.inverse.mul(&x).encode()
    }
}

/// Partition of `cell` into cylinders on which the cocycle
/// `q^{B_x(e,γ)/2}`, `B = 2(x|γ) − |γ|`, is constant.
pub fn free_cocycle(
    gamma: &ReducedWord,
    cell: &FreeCell,
) -> Result<Vec<(FreeCell, ScaledValue<BigInt>)>> {
    let r = gamma.rank();
    if cell.word.rank() != r {
        return Err(Error::InvalidParameter(
            "cell and element use different ranks".into(),
        ));
    }
    let q = 2 * r - 1;
    busemann_decomposition(
        q,
        &BoundaryCell::cylinder(cell.word.encode()),
        &gamma.encode(),
    )
    .into_iter()
    .map(|(piece, b)| {
        let w = ReducedWord::decode(r, &piece.anchor)?;
        Ok((FreeCell::new(w), ScaledValue::half_power(q, b)))
    })
    .collect()
}

/// `Ξ(n) = (1 + n(q−1)/(q+1)) q^{−n/2}` with `q = 2r − 1`.
pub fn xi_free(r: u32, n: usize) -> Result<ScaledValue<BigInt>> {
    let p = FreeGroupParams::new(r)?;
    Ok(xi_closed(p.q(), n))
}

/// `⟨π(γ)𝟙, 𝟙⟩` integrated piece by piece from [`free_cocycle`].
pub fn xi_free_oracle(r: u32, n: usize) -> Result<ScaledValue<BigInt>> {
    let q = FreeGroupParams::new(r)?.q();
    let gamma = ReducedWord::new(r, vec![0; n])?;
    free_cocycle(&gamma, &FreeCell::whole(r))?
        .into_iter()
        .try_fold(ScaledValue::zero(q), |acc, (cell, value)| {
            acc.checked_add(&(ScaledValue::from_ratio(q, cell.measure()) * value))
                .ok_or_else(|| Error::InvalidParameter("mixed parity".into()))
        })
}

/// Exact `∫_{C_b} 𝟙_{γC_a}(x) q^{s·B_x(e,γ)/2} dν(x)` for depth-`k` cells by
/// brute force over the cylinders of depth `|γ| + k + 1`.
fn refined_cell_integrals(gamma: &ReducedWord, k: usize, power: i64) -> Vec<ScaledValue<BigInt>> {
    let r = gamma.rank();
    let q = 2 * r - 1;
    let depth = gamma.len() + k + 1;
    let cells = cell_count(q, k);
    let inv = gamma.inverse();
    // (a, b, B) → number of depth-`depth` cylinders
    let mut counts: BTreeMap<(usize, usize, i64), u64> = BTreeMap::new();
    for x in SphereIter::new(r, depth, &[]) {
        let pre = inv.mul(&x);
        let a = sphere_index(q, &pre.prefix(k).encode());
        let b = sphere_index(q, &x.prefix(k).encode());
        let bus = 2 * x.confluence(gamma) as i64 - gamma.len() as i64;
        *counts.entry((a, b, bus)).or_default() += 1;
    }
    let nu = FreeCell::new(ReducedWord::new(r, vec![0; depth]).expect("reduced")).measure();
    let mut out = vec![ScaledValue::zero(q); cells * cells];
    for ((a, b, bus), n) in counts {
        let term = ScaledValue::new(q, &nu * BigRational::from_integer(n.into()), power * bus);
        out[a * cells + b] = out[a * cells + b].checked_add(&term).expect("same parity");
    }
    out
}

/// Exact `⟨π(γ)𝟙_{C_a}, 𝟙_{C_b}⟩` over depth-`k` cells, row-major.
pub fn coefficient_matrix_free(gamma: &ReducedWord, k: usize) -> Vec<ScaledValue<BigInt>> {
    refined_cell_integrals(gamma, k, 1)
}

/// `‖π(γ)𝟙_{C_a}‖²` for each depth-`k` cell, exact.
pub fn image_norms_free(gamma: &ReducedWord, k: usize) -> Vec<ScaledValue<BigInt>> {
    let q = 2 * gamma.rank() - 1;
    let cells = cell_count(q, k);
    let m = refined_cell_integrals(gamma, k, 2);
    (0..cells)
        .map(|a| {
            (0..cells).fold(ScaledValue::zero(q), |acc, b| {
                acc.checked_add(&m[a * cells + b]).expect("same parity")
            })
        })
        .collect()
}

/// `⟨π(γ)v, w⟩ = Σ_x v(γ⁻¹x) q^{B_x(e,γ)/2} conj(w(x)) ν(x)` over refined
/// cells. `v`, `w` are cylinder functions on the Cayley tree (`q = 2r − 1`)
/// with cells indexed by encoded words.
pub fn coefficient_free(
    gamma: &ReducedWord,
    v: &CylinderFunction,
    w: &CylinderFunction,
) -> Result<Complex64> {
    let q = 2 * gamma.rank() - 1;
    if v.q() != q || w.q() != q {
        return Err(Error::InvalidParameter(format!(
            "vectors must live on the tree with q = {q}"
        )));
    }
    let k = v.depth().max(w.depth());
    let (v, w) = (v.refine(k)?, w.refine(k)?);
    let cells = cell_count(q, k);
    let m = coefficient_matrix_free(gamma, k);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..cells {
        for b in 0..cells {
            if !m[a * cells + b].is_zero() {
                acc += v.values()[a] * w.values()[b].conj() * m[a * cells + b].to_f64();
            }
        }
    }
    Ok(acc)
}

/// Exact integer accumulator: `i128` until it would overflow, then
/// `BigInt`.
#[derive(Clone, Debug, Default)]
struct Accumulator {
    fast: i128,
    big: BigInt,
}

impl Accumulator {
    fn add_product(&mut self, x: i128, y: i128) {
        match x.checked_mul(y) {
            Some(p) => self.add(p),
            None => self.big += BigInt::from(x) * BigInt::from(y),
        }
    }

    fn add(&mut self, p: i128) {
        match self.fast.checked_add(p) {
            Some(s) => self.fast = s,
            None => {
                self.big += BigInt::from(self.fast);
                self.fast = p;
            }
        }
    }

    fn add_big(&mut self, p: BigInt) {
        self.big += p;
    }

    fn merge(&mut self, other: &Accumulator) {
        self.big += &other.big;
        self.add(other.fast);
    }

    fn value(&self) -> BigInt {
        &self.big + BigInt::from(self.fast)
    }
}

/// One radius of an exact free-group ball sum.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeBallRow {
    pub n: usize,
    pub value: Complex64,
    pub target: Complex64,
    /// Exact value when every vector is constant (the ratio multiplying
    /// the product of the constants).
    pub radial_ratio: Option<BigRational>,
}

/// Index tuples `(a, b, c, d)` on the supports of `w', v', v, w`.
fn support_tuples(vectors: &SchurVectors) -> Vec<[usize; 4]> {
    let supp = |f: &CylinderFunction| -> Vec<usize> {
        f.values()
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != Complex64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect()
    };
    let (sa, sb, sc, sd) = (
        supp(&vectors.w_prime),
        supp(&vectors.v_prime),
        supp(&vectors.v),
        supp(&vectors.w),
    );
    let mut out = Vec::new();
    for &a in &sa {
        for &b in &sb {
            for &c in &sc {
                for &d in &sd {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Exact `Σ_{|γ| = m} I_ab(γ) I_cd(γ⁻¹)` for each tuple.
fn sphere_tensor(r: u32, m: usize, k: usize, tuples: &[[usize; 4]]) -> Vec<BigRational> {
    let q = 2 * r - 1;
    let cells = cell_count(q, k);
    let accs = sphere_words_par(r, m)
        .map(|words| {
            let mut acc = vec![Accumulator::default(); tuples.len()];
            for gamma in words {
                let mut g = LeftMul::new(gamma);
                let i_g = CoefficientMatrix::new(&mut g, k);
                let i_inv = CoefficientMatrix::new(&mut InverseGerm(&mut g), k);
                match (i_g.numerators_i128(), i_inv.numerators_i128()) {
                    (Some(x), Some(y)) => {
                        for (t, [a, b, c, d]) in acc.iter_mut().zip(tuples) {
                            t.add_product(x[a * cells + b], y[c * cells + d]);
                        }
                    }
                    _ => {
                        let (x, y) = (i_g.numerators_big(), i_inv.numerators_big());
                        for (t, [a, b, c, d]) in acc.iter_mut().zip(tuples) {
                            t.add_big(&x[a * cells + b] * &y[c * cells + d]);
                        }
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![Accumulator::default(); tuples.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y));
                a
            },
        );
    // numerators are over ((q+1) q^{m+k+1})² · q^m
    let den = {
        let base = BigInt::from(q + 1) * num_traits::pow(BigInt::from(q), m + k + 1);
        &base * &base * num_traits::pow(BigInt::from(q), m)
    };
    accs.iter()
        .map(|a| BigRational::new(a.value(), den.clone()))
        .collect()
}

/// Exact `(1/Σ_{|γ|≤n'} Ξ(γ)²) Σ_{|γ|≤n'} ⟨π(γ)w',v'⟩⟨π(γ⁻¹)v,w⟩` for every
/// `n' ≤ n`; the target is `⟨v,v'⟩ conj⟨w,w'⟩`.
pub fn ball_schur_free(r: u32, n: usize, vectors: &SchurVectors) -> Result<Vec<FreeBallRow>> {
    check_ball(r, n)?;
    let q = 2 * r - 1;
    if vectors.q() != q {
        return Err(Error::InvalidParameter(format!(
            "vectors must live on the tree with q = {q}"
        )));
    }
    let target = vectors.target();
    let radial = [&vectors.v, &vectors.w, &vectors.v_prime, &vectors.w_prime]
        .iter()
        .all(|f| f.is_constant());
    let vectors = if radial {
        let c = |f: &CylinderFunction| CylinderFunction::constant(q, 0, f.values()[0]);
        SchurVectors::new(
            c(&vectors.v),
            c(&vectors.w),
            c(&vectors.v_prime),
            c(&vectors.w_prime),
        )?
    } else {
        vectors.clone()
    };
    let k = vectors.depth();
    let tuples = support_tuples(&vectors);
    let weights: Vec<Complex64> = tuples
        .iter()
        .map(|&[a, b, c, d]| {
            vectors.w_prime.values()[a]
                * vectors.v_prime.values()[b].conj()
                * vectors.v.values()[c]
                * vectors.w.values()[d].conj()
        })
        .collect();
    let mut cumulative = vec![BigRational::zero(); tuples.len()];
    let mut rows = Vec::with_capacity(n + 1);
    for m in 0..=n {
        for (c, t) in cumulative.iter_mut().zip(sphere_tensor(r, m, k, &tuples)) {
            *c += t;
        }
        let ball = ball_xi2(q, m);
        let ratios: Vec<BigRational> = cumulative.iter().map(|c| c / &ball).collect();
        let value = ratios
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * x.to_f64().unwrap_or(f64::NAN))
            .sum();
        rows.push(FreeBallRow {
            n: m,
            value,
            target,
            radial_ratio: radial.then(|| ratios.first().cloned().unwrap_or_else(BigRational::zero)),
        });
    }
    Ok(rows)
}

/// `q^{m/2} · (1/ν(X)) ∫_X q^{B_x(e,γ)/2} dν(x)` for a nonempty cell `X`;
/// always an integer.
fn scaled_cell_average(q: u32, x: &ReducedWord, gamma: &ReducedWord) -> i128 {
    let (l, m) = (x.len(), gamma.len());
    let c = x.confluence(gamma);
    let qi = q as i128;
    if c < l || l == m {
        qi.pow(c as u32)
    } else {
        (m - l) as i128 * (qi - 1) * qi.pow(l as u32 - 1) + qi.pow(l as u32)
    }
}

/// One greedy refinement step of the witness.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessStep {
    pub depth: usize,
    pub x: ReducedWord,
    pub y: ReducedWord,
    pub value: BigRational,
}

/// Lower bound for `‖M_n‖_{∞→∞}` with `M_n` the `Ξ²`-normalized ball mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub value: f64,
    pub exact: BigRational,
    pub trace: Vec<WitnessStep>,
}

/// Averages of `Σ_{|γ|≤n} c(γ⁻¹,x) c(γ,y) / Σ Ξ²` over every product of
/// children of `X` and `Y`, exact.
fn child_kernel_averages(
    r: u32,
    n: usize,
    xs: &[ReducedWord],
    ys: &[ReducedWord],
) -> Vec<BigRational> {
    let q = 2 * r - 1;
    let len = xs.len() * ys.len();
    let mut total = vec![BigRational::zero(); len];
    for m in 0..=n {
        let accs = sphere_words_par(r, m)
            .map(|words| {
                let mut acc = vec![Accumulator::default(); len];
                for gamma in words {
                    let inv = gamma.inverse();
                    let ax: Vec<i128> = xs
                        .iter()
                        .map(|x| scaled_cell_average(q, x, &gamma))
                        .collect();
                    let ay: Vec<i128> =
                        ys.iter().map(|y| scaled_cell_average(q, y, &inv)).collect();
                    for (i, a) in ax.iter().enumerate() {
                        for (j, b) in ay.iter().enumerate() {
                            acc[i * ys.len() + j].add_product(*a, *b);
                        }
                    }
                }
                acc
            })
            .reduce(
                || vec![Accumulator::default(); len],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y));
                    a
                },
            );
        let den = num_traits::pow(BigInt::from(q), m);
        for (t, a) in total.iter_mut().zip(&accs) {
            *t += BigRational::new(a.value(), den.clone());
        }
    }
    let ball = ball_xi2(q, n);
    total.into_iter().map(|t| t / &ball).collect()
}

/// Greedy witness: starting from `∂F_r × ∂F_r`, repeatedly pass to the
/// child product cell with the largest exact kernel average (first in
/// lexicographic order on ties) until depth `max(n, 1)`. Each step can only
/// increase the average.
pub fn infnorm_witness(r: u32, n: usize) -> Result<Witness> {
    infnorm_witness_to_depth(r, n, n.max(1))
}

/// [`infnorm_witness`] with an explicit final cell depth.
pub fn infnorm_witness_to_depth(r: u32, n: usize, depth: usize) -> Result<Witness> {
    check_ball(r, n)?;
    let mut x = FreeCell::whole(r);
    let mut y = FreeCell::whole(r);
    let mut trace = vec![WitnessStep {
        depth: 0,
        x: x.word.clone(),
        y: y.word.clone(),
        value: BigRational::one(),
    }];
    for d in 1..=depth {
        let (xs, ys) = (x.children(), y.children());
        let xw: Vec<ReducedWord> = xs.iter().map(|c| c.word.clone()).collect();
        let yw: Vec<ReducedWord> = ys.iter().map(|c| c.word.clone()).collect();
        let avgs = child_kernel_averages(r, n, &xw, &yw);
        let mut best = 0;
        for (i, a) in avgs.iter().enumerate() {
            if *a > avgs[best] {
                best = i;
            }
        }
        x = xs[best / ys.len()].clone();
        y = ys[best % ys.len()].clone();
        trace.push(WitnessStep {
            depth: d,
            x: x.word.clone(),
            y: y.word.clone(),
            value: avgs[best].clone(),
        });
    }
    let exact = trace.last().expect("nonempty").value.clone();
    Ok(Witness {
        value: exact.to_f64().unwrap_or(f64::NAN),
        exact,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::coefficient::CoefficientMatrix;
    use std::collections::HashSet;

    fn w(r: u32, s: &str) -> ReducedWord {
        ReducedWord::parse(r, s).unwrap()
    }

    #[test]
    fn words_reduce_and_multiply() {
        assert_eq!(w(2, "aA"), ReducedWord::identity(2));
        assert!(ReducedWord::new(2, vec![0, 1]).is_err());
        assert!(ReducedWord::new(2, vec![4]).is_err());
        let x = w(2, "abA");
        assert_eq!(x.mul(&x.inverse()), ReducedWord::identity(2));
        assert_eq!(w(2, "ab").mul(&w(2, "Ba")).to_string(), "aa");
        assert_eq!(x.to_string(), "abA");
        assert_eq!(w(3, "cB").to_string(), "cB");
        assert_eq!(w(5, "fA").to_string(), "fA");
    }

    #[test]
    fn sphere_counts() {
        assert_eq!(enumerate_sphere(2, 0).unwrap().count(), 1);
        assert_eq!(enumerate_sphere(2, 1).unwrap().count(), 4);
        assert_eq!(enumerate_sphere(2, 3).unwrap().count(), 36);
        let ball: usize = (0..=3)
            .map(|n| enumerate_sphere(2, n).unwrap().count())
            .sum();
        assert_eq!(ball, 53);
        for r in [2, 3] {
            for n in 0..=(if r == 2 { 10 } else { 7 }) {
                let words: Vec<_> = enumerate_sphere(r, n).unwrap().collect();
                assert_eq!(words.len() as u64, sphere_count(r, n).unwrap());
                let set: HashSet<_> = words.iter().collect();
                assert_eq!(set.len(), words.len());
            }
        }
    }

    #[test]
    fn prefix_split_covers_sphere() {
        let total: usize = sphere_prefixes(2, 5)
            .iter()
            .map(|p| SphereIter::new(2, 5, p).count())
            .sum();
        assert_eq!(total as u64, sphere_count(2, 5).unwrap());
    }

    #[test]
    fn encode_roundtrip_and_adjacency() {
        for x in enumerate_sphere(2, 4).unwrap() {
            let v = x.encode();
            assert!(Vertex::new(3, v.word().to_vec()).is_ok());
            assert_eq!(ReducedWord::decode(2, &v).unwrap(), x);
        }
    }

    #[test]
    fn left_multiplication_is_isometric() {
        let mut g = LeftMul::new(w(2, "abA"));
        let verts: Vec<Vertex> = (0..=3)
            .flat_map(|n| enumerate_sphere(2, n).unwrap().map(|x| x.encode()))
            .collect();
        for a in &verts {
            let ga = g.image(a);
            assert_eq!(g.preimage(&ga), *a);
            for b in verts.iter().take(20) {
                assert_eq!(ga.distance(&g.image(b)), a.distance(b));
            }
        }
    }

    #[test]
    fn cocycle_pieces() {
        let gamma = w(2, "ab");
        let pieces = free_cocycle(&gamma, &FreeCell::whole(2)).unwrap();
        let total: BigRational = pieces.iter().map(|(c, _)| c.measure()).sum();
        assert_eq!(total, BigRational::one());
        let mut exps: Vec<i64> = pieces.iter().map(|(_, v)| v.half_exponent()).collect();
        exps.sort();
        exps.dedup();
        assert_eq!(exps, vec![-2, 0, 2]);
        let id = free_cocycle(&ReducedWord::identity(2), &FreeCell::whole(2)).unwrap();
        assert_eq!(id.len(), 1);
        assert_eq!(id[0].1, ScaledValue::one(3));
        let sub = FreeCell::new(w(2, "aB"));
        let parts: BigRational = free_cocycle(&gamma, &sub)
            .unwrap()
            .iter()
            .map(|(c, _)| c.measure())
            .sum();
        assert_eq!(parts, sub.measure());
    }

    #[test]
    fn xi_free_examples() {
        assert_eq!(xi_free(2, 0).unwrap(), ScaledValue::one(3));
        assert_eq!(
            xi_free(2, 2).unwrap(),
            ScaledValue::from_ratio(3, BigRational::new(2.into(), 3.into()))
        );
        assert_eq!(
            xi_free(2, 1).unwrap(),
            ScaledValue::new(3, BigRational::new(3.into(), 2.into()), -1)
        );
        for r in [2, 3] {
            for n in 0..=20 {
                assert_eq!(xi_free(r, n).unwrap(), xi_free_oracle(r, n).unwrap());
            }
        }
    }

    #[test]
    fn refined_oracle_matches_tree_coefficients() {
        for gamma in ["e", "a", "aB", "bbA", "Abab"] {
            let g = w(2, gamma);
            for k in 0..=2 {
                let brute = coefficient_matrix_free(&g, k);
                let mut lm = LeftMul::new(g.clone());
                let tree = CoefficientMatrix::new(&mut lm, k);
                for (i, b) in brute.iter().enumerate() {
                    let cells = cell_count(3, k);
                    assert_eq!(*b, tree.entry_exact(i / cells, i % cells), "{gamma} k={k}");
                }
            }
        }
    }

    #[test]
    fn free_coefficients() {
        let one = CylinderFunction::one(3);
        let g = w(2, "abA");
        assert!(
            (coefficient_free(&g, &one, &one).unwrap().re - xi_free(2, 3).unwrap().to_f64()).abs()
                < 1e-15
        );
        let v = CylinderFunction::from_real(3, 1, &[0.5, -1.0, 2.0, 0.25]).unwrap();
        let u = CylinderFunction::from_real(
            3,
            2,
            &(0..12).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>(),
        )
        .unwrap();
        let id = coefficient_free(&ReducedWord::identity(2), &v, &u).unwrap();
        assert!((id - v.inner(&u).unwrap()).norm() < 1e-15);
        let lhs = coefficient_free(&g, &v, &u).unwrap();
        let rhs = coefficient_free(&g.inverse(), &u, &v).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn exact_unitarity() {
        for n in 0..=4 {
            for g in enumerate_sphere(2, n).unwrap().step_by(3) {
                for k in 0..=2 {
                    let nu = ScaledValue::from_ratio(
                        3,
                        BigRational::new(1.into(), (cell_count(3, k) as i64).into()),
                    );
                    for mass in image_norms_free(&g, k) {
                        assert_eq!(mass, nu);
                    }
                }
            }
        }
    }

    #[test]
    fn radial_ball_sum_is_one() {
        let one = SchurVectors::diagonal(CylinderFunction::one(3));
        for row in ball_schur_free(2, 6, &one).unwrap() {
            assert_eq!(row.value, Complex64::new(1.0, 0.0));
            assert_eq!(row.radial_ratio, Some(BigRational::one()));
        }
        let spread =
            SchurVectors::diagonal(CylinderFunction::constant(3, 1, Complex64::new(1.0, 0.0)));
        assert_eq!(
            ball_schur_free(2, 3, &spread).unwrap()[3].value,
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn identity_radius() {
        let e = |c| CylinderFunction::normalized_indicator(3, 1, c).unwrap();
        let v = SchurVectors::new(e(0), e(1), e(0), e(1)).unwrap();
        let rows = ball_schur_free(2, 0, &v).unwrap();
        let expect = v.v.inner(&v.w).unwrap() * v.v_prime.inner(&v.w_prime).unwrap().conj();
        assert!((rows[0].value - expect).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_trend() {
        let e = |c| CylinderFunction::normalized_indicator(3, 1, c).unwrap();
        let v = SchurVectors::new(e(0), e(0), e(1), e(1)).unwrap();
        let rows = ball_schur_free(2, 7, &v).unwrap();
        assert_eq!(rows[7].target, Complex64::new(0.0, 0.0));
        for pair in rows[4..].windows(2) {
            assert!(pair[1].value.norm() < pair[0].value.norm());
        }
    }

    #[test]
    fn ball_guard() {
        let one = SchurVectors::diagonal(CylinderFunction::one(3));
        assert!(matches!(
            ball_schur_free(2, 13, &one),
            Err(Error::ResourceLimit(_))
        ));
        assert!(infnorm_witness(2, 13).is_err());
    }

    #[test]
    fn witness_basics() {
        assert_eq!(infnorm_witness(2, 0).unwrap().exact, BigRational::one());
        let w2 = infnorm_witness(2, 2).unwrap();
        let w4 = infnorm_witness(2, 4).unwrap();
        assert!(w4.exact > w2.exact);
        for pair in w4.trace.windows(2) {
            assert!(pair[1].value >= pair[0].value);
        }
    }

    #[test]
    fn scaled_average_matches_tree_integral() {
        use crate::tree::coefficient::cylinder_average_f64;
        for x in enumerate_sphere(2, 2).unwrap() {
            for g in enumerate_sphere(2, 3).unwrap().step_by(5) {
                let direct = cylinder_average_f64(3, &x.encode(), &g.encode()) * 3f64.powf(1.5);
                assert!((direct - scaled_cell_average(3, &x, &g) as f64).abs() < 1e-9);
            }
        }
    }
}
