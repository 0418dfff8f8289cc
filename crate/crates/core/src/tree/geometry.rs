//! Vertices, boundary cells and the normalized boundary measure of the
//! `(q+1)`-regular tree.
//!
//! A vertex is its address from the root `x₀`: the first letter ranges
//! over `0..=q`, later letters over `0..q`. Boundary points are infinite
//! words of the same shape.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::ScaledValue;

/// Tree parameter: every vertex has `q + 1` neighbors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TreeParams {
    q: u32,
}

impl TreeParams {
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!(
                "q must be at least 2, got {q}"
            )));
        }
        Ok(TreeParams { q })
    }

    pub fn q(&self) -> u32 {
        self.q
    }
}

pub(crate) fn check_q(q: u32) -> Result<()> {
    TreeParams::new(q).map(|_| ())
}

/// A vertex, addressed by its word from the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vertex {
    word: Vec<u32>,
}

impl Vertex {
    pub fn root() -> Self {
        Vertex { word: Vec::new() }
    }

    /// Validates the letters against `q`.
    pub fn new(q: u32, word: Vec<u32>) -> Result<Self> {
        for (i, &c) in word.iter().enumerate() {
            let limit = if i == 0 { q + 1 } else { q };
            if c >= limit {
                return Err(Error::InvalidParameter(format!(
                    "letter {c} at position {i} out of range for q = {q}"
                )));
            }
        }
        Ok(Vertex { word })
    }

    pub(crate) fn from_word_unchecked(word: Vec<u32>) -> Self {
        Vertex { word }
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    /// Distance to the root.
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_root(&self) -> bool {
        self.word.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_root()
    }

    pub fn parent(&self) -> Option<Vertex> {
        (!self.is_root()).then(|| Vertex {
            word: self.word[..self.word.len() - 1].to_vec(),
        })
    }

    pub fn child(&self, c: u32) -> Vertex {
        let mut word = self.word.clone();
        word.push(c);
        Vertex { word }
    }

    pub fn prefix(&self, len: usize) -> Vertex {
        Vertex {
            word: self.word[..len].to_vec(),
        }
    }

    /// Number of children: `q + 1` at the root, `q` elsewhere.
    pub fn arity(&self, q: u32) -> u32 {
        if self.is_root() {
            q + 1
        } else {
            q
        }
    }

    /// Neighbor in slot `s`. The root's slots are its children; elsewhere
    /// slot 0 is the parent and slot `c + 1` is child `c`.
    pub fn neighbor(&self, s: u32) -> Vertex {
        if self.is_root() {
            self.child(s)
        } else if s == 0 {
            self.parent().expect("non-root")
        } else {
            self.child(s - 1)
        }
    }

    pub fn child_slot(&self, c: u32) -> u32 {
        if self.is_root() {
            c
        } else {
            c + 1
        }
    }

    /// Slot of an adjacent vertex, if `other` is adjacent.
    pub fn slot_of(&self, other: &Vertex) -> Option<u32> {
        if other.len() == self.len() + 1 && other.word.starts_with(&self.word) {
            Some(self.child_slot(*other.word.last().expect("nonempty")))
        } else if other.len() + 1 == self.len() && self.word.starts_with(&other.word) {
            Some(0)
        } else {
            None
        }
    }

    pub fn common_prefix_len(&self, other: &Vertex) -> usize {
        self.word
            .iter()
            .zip(&other.word)
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.word.starts_with(&self.word)
    }

    pub fn distance(&self, other: &Vertex) -> usize {
        self.len() + other.len() - 2 * self.common_prefix_len(other)
    }

    /// Vertices of the geodesic from `self` to `other`, both ends included.
    pub fn geodesic(&self, other: &Vertex) -> Vec<Vertex> {
        let c = self.common_prefix_len(other);
        let mut path: Vec<Vertex> = (c..=self.len()).rev().map(|l| self.prefix(l)).collect();
        path.extend((c + 1..=other.len()).map(|l| other.prefix(l)));
        path
    }
}

impl fmt::Display for Vertex {
    /// `-` for the root, otherwise letters joined by `.`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self.word.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({self})")
    }
}

impl std::str::FromStr for Vertex {
    type Err = Error;

    /// Inverse of `Display`; letters are not checked against any `q`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Vertex::root());
        }
        let word = s
            .split('.')
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad vertex '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Vertex { word })
    }
}

/// Number of vertices at distance `m` from the root, if it fits in `u64`.
pub fn sphere_size(q: u32, m: usize) -> Option<u64> {
    if m == 0 {
        return Some(1);
    }
    (q as u64)
        .checked_pow(m as u32 - 1)?
        .checked_mul(q as u64 + 1)
}

/// All vertices at distance `k` in lexicographic order.
pub fn sphere_vertices(q: u32, k: usize) -> Vec<Vertex> {
    let mut out = vec![Vertex::root()];
    for depth in 0..k {
        out = out
            .iter()
            .flat_map(|v| (0..if depth == 0 { q + 1 } else { q }).map(move |c| v.child(c)))
            .collect();
    }
    out
}

/// Position of `v` in [`sphere_vertices`]`(q, |v|)`.
pub fn sphere_index(q: u32, v: &Vertex) -> usize {
    v.word
        .iter()
        .fold(0usize, |acc, &c| acc * q as usize + c as usize)
}

/// Haar mass of `{g : d(x₀, g x₀) = m}` with `vol(K) = 1`: the number of
/// vertices at distance `m`.
pub fn sphere_volume(q: u32, m: usize) -> BigRational {
    BigRational::from_integer(sphere_volume_int(q, m))
}

pub(crate) fn sphere_volume_int(q: u32, m: usize) -> BigInt {
    if m == 0 {
        BigInt::one()
    } else {
        BigInt::from(q + 1) * num_traits::pow(BigInt::from(q), m - 1)
    }
}

/// [`sphere_volume`] as `((q+1)/q) · q^{2m/2}`, which keeps products with
/// `Ξ(m)²` on small rationals.
pub fn sphere_volume_scaled(q: u32, m: usize) -> ScaledValue<BigInt> {
    if m == 0 {
        return ScaledValue::one(q);
    }
    ScaledValue::new(
        q,
        BigRational::new(BigInt::from(q + 1), BigInt::from(q)),
        2 * m as i64,
    )
}

/// `ν(C_v)` for `|v| = depth`.
pub fn cylinder_measure(q: u32, depth: usize) -> BigRational {
    if depth == 0 {
        BigRational::one()
    } else {
        BigRational::new(BigInt::one(), sphere_volume_int(q, depth))
    }
}

/// Which neighbor of the anchor a cell turns away from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Excluded {
    /// Rays leaving the anchor away from the root: the cylinder `C_v`
    /// (the whole boundary when the anchor is the root).
    TowardRoot,
    /// Rays from the anchor that avoid child `c`: `∂T \ C_{vc}`.
    Child(u32),
}

/// `Ω(x, y)`: boundary points whose ray from the anchor `x` does not pass
/// through the excluded neighbor `y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryCell {
    pub anchor: Vertex,
    pub excluded: Excluded,
}

impl BoundaryCell {
    pub fn whole() -> Self {
        Self::cylinder(Vertex::root())
    }

    pub fn cylinder(v: Vertex) -> Self {
        BoundaryCell {
            anchor: v,
            excluded: Excluded::TowardRoot,
        }
    }

    pub fn cocell(v: Vertex, c: u32) -> Self {
        BoundaryCell {
            anchor: v,
            excluded: Excluded::Child(c),
        }
    }

    /// `Ω(x, y)` for adjacent `x`, `y`.
    pub fn omega(x: &Vertex, y: &Vertex) -> Result<Self> {
        match x.slot_of(y) {
            None => Err(Error::InvalidParameter(format!(
                "{x} and {y} are not adjacent"
            ))),
            Some(_) if y.len() < x.len() => Ok(Self::cylinder(x.clone())),
            Some(_) => Ok(Self::cocell(x.clone(), *y.word().last().expect("child"))),
        }
    }

    pub fn is_cylinder(&self) -> bool {
        self.excluded == Excluded::TowardRoot
    }

    pub fn validate(&self, q: u32) -> Result<()> {
        Vertex::new(q, self.anchor.word.clone())?;
        if let Excluded::Child(c) = self.excluded {
            if c >= self.anchor.arity(q) {
                return Err(Error::InvalidParameter(format!("child {c} out of range")));
            }
        }
        Ok(())
    }

    /// Disjoint standard cylinders whose union is the cell.
    pub fn as_cylinders(&self, q: u32) -> Vec<Vertex> {
        match self.excluded {
            Excluded::TowardRoot => vec![self.anchor.clone()],
            Excluded::Child(c) => complement_of_cylinder(q, &self.anchor.child(c)),
        }
    }

    /// Membership of the boundary point whose ray starts with `x`; `x` must
    /// be deeper than the anchor.
    pub fn contains(&self, x: &Vertex) -> bool {
        debug_assert!(x.len() > self.anchor.len());
        match self.excluded {
            Excluded::TowardRoot => self.anchor.is_prefix_of(x),
            Excluded::Child(c) => !self.anchor.child(c).is_prefix_of(x),
        }
    }
}

impl fmt::Display for BoundaryCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.excluded {
            Excluded::TowardRoot => write!(f, "C[{}]", self.anchor),
            Excluded::Child(c) => write!(f, "co-C[{}]", self.anchor.child(c)),
        }
    }
}

/// `∂T \ C_s` as disjoint cylinders: the siblings along the path to `s`.
fn complement_of_cylinder(q: u32, s: &Vertex) -> Vec<Vertex> {
    let mut out = Vec::new();
    for l in 0..s.len() {
        let p = s.prefix(l);
        let next = s.word()[l];
        out.extend((0..p.arity(q)).filter(|&c| c != next).map(|c| p.child(c)));
    }
    out
}

/// `ν(cell)`.
pub fn cell_measure(q: u32, cell: &BoundaryCell) -> BigRational {
    let cyl = cylinder_measure(q, cell.anchor.len());
    match cell.excluded {
        Excluded::TowardRoot => cyl,
        Excluded::Child(_) => BigRational::one() - cylinder_measure(q, cell.anchor.len() + 1),
    }
}

/// `B_x(x₀, u)` for the boundary point whose ray starts with `x`
/// (`|x| ≥ |u|`): `2 (x|u) − |u|`.
pub fn busemann(u: &Vertex, x: &Vertex) -> i64 {
    debug_assert!(x.len() >= u.len());
    2 * x.common_prefix_len(u) as i64 - u.len() as i64
}

/// Splits a standard cylinder `C_p` into cylinders on which
/// `x ↦ B_x(x₀, u)` is constant.
pub(crate) fn cylinder_pieces(q: u32, p: &Vertex, u: &Vertex) -> Vec<(Vertex, i64)> {
    let m = u.len() as i64;
    let c = p.common_prefix_len(u);
    if c < p.len() || p.len() == u.len() {
        return vec![(p.clone(), 2 * c as i64 - m)];
    }
    let mut out = Vec::new();
    for j in p.len()..u.len() {
        let uj = u.prefix(j);
        let next = u.word()[j];
        out.extend(
            (0..uj.arity(q))
                .filter(|&c| c != next)
                .map(|c| (uj.child(c), 2 * j as i64 - m)),
        );
    }
    out.push((u.clone(), m));
    out
}

/// Partition of `cell` into standard cylinders on which the Busemann
/// function `B_x(x₀, u)` is constant.
pub fn busemann_decomposition(q: u32, cell: &BoundaryCell, u: &Vertex) -> Vec<(BoundaryCell, i64)> {
    cell.as_cylinders(q)
        .iter()
        .flat_map(|p| cylinder_pieces(q, p, u))
        .map(|(v, b)| (BoundaryCell::cylinder(v), b))
        .collect()
}

/// Measure of `cell` on each level set of `B_x(x₀, u)`.
pub fn busemann_profile(q: u32, cell: &BoundaryCell, u: &Vertex) -> BTreeMap<i64, BigRational> {
    let mut out: BTreeMap<i64, BigRational> = BTreeMap::new();
    for (piece, b) in busemann_decomposition(q, cell, u) {
        *out.entry(b).or_insert_with(BigRational::zero) += cylinder_measure(q, piece.anchor.len());
    }
    out
}

/// Step function constant on the depth-`k` cylinders.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction {
    q: u32,
    depth: usize,
    values: Vec<Complex64>,
}

/// Number of depth-`k` cylinders (1 at `k = 0`).
pub fn cell_count(q: u32, k: usize) -> usize {
    sphere_size(q, k).expect("depth too large") as usize
}

impl CylinderFunction {
    pub fn new(q: u32, depth: usize, values: Vec<Complex64>) -> Result<Self> {
        check_q(q)?;
        let n = cell_count(q, depth);
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        Ok(CylinderFunction { q, depth, values })
    }

    pub fn from_real(q: u32, depth: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            q,
            depth,
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn constant(q: u32, depth: usize, c: Complex64) -> Self {
        CylinderFunction {
            q,
            depth,
            values: vec![c; cell_count(q, depth)],
        }
    }

    /// `𝟙_{∂T}`.
    pub fn one(q: u32) -> Self {
        Self::constant(q, 0, Complex64::new(1.0, 0.0))
    }

    /// `scale · 𝟙_{C}` for the `cell`-th depth-`depth` cylinder.
    pub fn indicator(q: u32, depth: usize, cell: usize, scale: f64) -> Result<Self> {
        let n = cell_count(q, depth);
        if cell >= n {
            return Err(Error::InvalidParameter(format!(
                "cell {cell} out of range 0..{n}"
            )));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        values[cell] = Complex64::new(scale, 0.0);
        Ok(CylinderFunction { q, depth, values })
    }

    /// Unit-norm indicator `𝟙_C / √ν(C)`.
    pub fn normalized_indicator(q: u32, depth: usize, cell: usize) -> Result<Self> {
        Self::indicator(q, depth, cell, (cell_count(q, depth) as f64).sqrt())
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn cells(&self) -> Vec<Vertex> {
        sphere_vertices(self.q, self.depth)
    }

    /// `ν` of each cell.
    pub fn cell_weight(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    /// Same function on the finer depth-`depth` partition.
    pub fn refine(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidParameter(
                "cannot coarsen a cylinder function".into(),
            ));
        }
        let values = sphere_vertices(self.q, depth)
            .iter()
            .map(|v| self.values[sphere_index(self.q, &v.prefix(self.depth))])
            .collect();
        Ok(CylinderFunction {
            q: self.q,
            depth,
            values,
        })
    }

    /// `Σ_cells ν · v · conj(w)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.q != other.q {
            return Err(Error::InvalidParameter("mixed q".into()));
        }
        let depth = self.depth.max(other.depth);
        let (a, b) = (self.refine(depth)?, other.refine(depth)?);
        let s: Complex64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x * y.conj())
            .sum();
        Ok(s * a.cell_weight())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same q").re.sqrt()
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(w: &[u32]) -> Vertex {
        Vertex::new(2, w.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn vertex_validation() {
        assert!(Vertex::new(2, vec![2, 1]).is_ok());
        assert!(Vertex::new(2, vec![3]).is_err());
        assert!(Vertex::new(2, vec![0, 2]).is_err());
    }

    #[test]
    fn neighbors_and_slots() {
        let x = v(&[1, 0]);
        assert_eq!(x.neighbor(0), v(&[1]));
        assert_eq!(x.neighbor(2), v(&[1, 0, 1]));
        for s in 0..3 {
            assert_eq!(x.slot_of(&x.neighbor(s)), Some(s));
        }
        assert_eq!(Vertex::root().slot_of(&v(&[2])), Some(2));
        assert_eq!(x.slot_of(&v(&[1, 1])), None);
    }

    #[test]
    fn geodesic_endpoints() {
        let path = v(&[0, 1, 1]).geodesic(&v(&[0, 0]));
        assert_eq!(path, vec![v(&[0, 1, 1]), v(&[0, 1]), v(&[0]), v(&[0, 0])]);
        assert_eq!(v(&[0, 1, 1]).distance(&v(&[0, 0])), 3);
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(sphere_volume(2, 0), rat(1, 1));
        assert_eq!(sphere_volume(2, 3), rat(12, 1));
        assert_eq!(sphere_volume(3, 2), rat(12, 1));
        assert_eq!(sphere_vertices(2, 3).len(), 12);
        for m in 0..6 {
            let scaled = sphere_volume_scaled(2, m).to_ratio().unwrap();
            assert_eq!(scaled, sphere_volume(2, m));
        }
        for (i, x) in sphere_vertices(3, 3).iter().enumerate() {
            assert_eq!(sphere_index(3, x), i);
        }
    }

    #[test]
    fn cell_measure_examples() {
        assert_eq!(cell_measure(2, &BoundaryCell::whole()), rat(1, 1));
        assert_eq!(cell_measure(2, &BoundaryCell::cylinder(v(&[0]))), rat(1, 3));
        assert_eq!(
            cell_measure(2, &BoundaryCell::cylinder(v(&[0, 1, 1]))),
            rat(1, 12)
        );
        assert_eq!(
            cell_measure(2, &BoundaryCell::cocell(v(&[0]), 1)),
            rat(5, 6)
        );
    }

    #[test]
    fn cocells_partition_into_cylinders() {
        let cell = BoundaryCell::cocell(v(&[2, 0]), 1);
        let total: BigRational = cell
            .as_cylinders(2)
            .iter()
            .map(|p| cylinder_measure(2, p.len()))
            .sum();
        assert_eq!(total, cell_measure(2, &cell));
    }

    #[test]
    fn omega_orientation() {
        let x = v(&[1, 0]);
        assert_eq!(
            BoundaryCell::omega(&x, &v(&[1])).unwrap(),
            BoundaryCell::cylinder(x.clone())
        );
        assert_eq!(
            BoundaryCell::omega(&x, &v(&[1, 0, 1])).unwrap(),
            BoundaryCell::cocell(x, 1)
        );
        assert!(BoundaryCell::omega(&v(&[0]), &v(&[1])).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let pieces = busemann_decomposition(2, &BoundaryCell::whole(), &Vertex::root());
        assert_eq!(pieces, vec![(BoundaryCell::whole(), 0)]);
        let prof = busemann_profile(2, &BoundaryCell::whole(), &v(&[0, 1]));
        let expect: BTreeMap<i64, BigRational> = [(-2, rat(2, 3)), (0, rat(1, 6)), (2, rat(1, 6))]
            .into_iter()
            .collect();
        assert_eq!(prof, expect);
    }

    #[test]
    fn decomposition_is_constant_on_pieces() {
        let u = v(&[1, 0, 1]);
        let cell = BoundaryCell::cocell(v(&[1]), 1);
        for (piece, b) in busemann_decomposition(2, &cell, &u) {
            for x in sphere_vertices(2, 5)
                .iter()
                .filter(|x| piece.anchor.is_prefix_of(x))
            {
                assert!(cell.contains(x));
                assert_eq!(busemann(&u, x), b);
            }
        }
    }

    #[test]
    fn cylinder_function_inner() {
        let one = CylinderFunction::one(2);
        assert_eq!(one.inner(&one).unwrap(), Complex64::new(1.0, 0.0));
        let e0 = CylinderFunction::normalized_indicator(2, 1, 0).unwrap();
        let e1 = CylinderFunction::normalized_indicator(2, 1, 1).unwrap();
        assert!((e0.norm() - 1.0).abs() < 1e-15);
        assert_eq!(e0.inner(&e1).unwrap(), Complex64::new(0.0, 0.0));
        let r = e0.refine(3).unwrap();
        assert!((r.inner(&e0).unwrap().re - 1.0).abs() < 1e-14);
        assert!(CylinderFunction::new(2, 1, vec![Complex64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn vertex_display_roundtrip() {
        for x in [Vertex::root(), v(&[2, 0, 1])] {
            assert_eq!(x.to_string().parse::<Vertex>().unwrap(), x);
        }
    }
}
