//! Lazily sampled tree automorphisms.
//!
//! An automorphism `g` is fixed by `u = g x₀` and, at every vertex `y`, a
//! bijection from the neighbor slots of `y` to those of `g y`. Away from
//! the root the parent slot is forced onto the slot of `g(parent y)`; the
//! children are matched by a permutation. Matchings are produced on demand
//! by a [`MatchingSource`] and memoized, so only the finite part of `g`
//! that is actually queried is ever built.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stats::{mix64, sub_seed};
use crate::tree::geometry::{check_q, Vertex};

/// Isometry of the tree queried vertex by vertex.
pub trait TreeIsometry {
    fn q(&self) -> u32;
    fn image(&mut self, v: &Vertex) -> Vertex;
    fn preimage(&mut self, v: &Vertex) -> Vertex;

    /// `g x₀`.
    fn base_image(&mut self) -> Vertex {
        self.image(&Vertex::root())
    }

    /// `d(x₀, g x₀)`.
    fn length(&mut self) -> usize {
        self.base_image().len()
    }
}

/// Supplies the child permutation used at a domain vertex.
pub trait MatchingSource {
    /// Permutation of `0..arity` for the children of `y` (all `q + 1`
    /// neighbors at the root).
    fn permutation(&self, y: &Vertex, arity: u32) -> Vec<u32>;
}

/// Uniform random matchings, keyed by `(seed, y)` so the result does not
/// depend on the order of queries.
#[derive(Clone, Copy, Debug)]
pub struct HaarMatchings {
    pub seed: u64,
}

pub(crate) fn vertex_hash(y: &Vertex) -> u64 {
    y.word().iter().fold(mix64(y.len() as u64), |h, &c| {
        mix64(h ^ (c as u64 + 1).wrapping_mul(0x9E37_79B9))
    })
}

impl MatchingSource for HaarMatchings {
    fn permutation(&self, y: &Vertex, arity: u32) -> Vec<u32> {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, vertex_hash(y)));
        let mut p: Vec<u32> = (0..arity).collect();
        p.shuffle(&mut rng);
        p
    }
}

/// Explicit matchings at finitely many vertices, identity elsewhere.
#[derive(Clone, Debug, Default)]
pub struct TableMatchings {
    pub table: HashMap<Vertex, Vec<u32>>,
}

impl MatchingSource for TableMatchings {
    fn permutation(&self, y: &Vertex, arity: u32) -> Vec<u32> {
        self.table
            .get(y)
            .cloned()
            .unwrap_or_else(|| (0..arity).collect())
    }
}

/// Automorphism built from `u = g x₀` and a matching source.
#[derive(Clone, Debug)]
pub struct LazyIsometry<S> {
    q: u32,
    u: Vertex,
    source: S,
    /// domain vertex → (image, slot map of neighbors)
    memo: HashMap<Vertex, (Vertex, Vec<u32>)>,
}

/// Haar-random element of `{g : d(x₀, g x₀) = m}`.
pub type GroupGerm = LazyIsometry<HaarMatchings>;

impl<S: MatchingSource> LazyIsometry<S> {
    pub fn with_source(q: u32, u: Vertex, source: S) -> Result<Self> {
        check_q(q)?;
        Vertex::new(q, u.word().to_vec())?;
        Ok(LazyIsometry {
            q,
            u,
            source,
            memo: HashMap::new(),
        })
    }

    pub fn u(&self) -> &Vertex {
        &self.u
    }

    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    /// Image of `y` and its full slot map, computing ancestors first.
    fn entry(&mut self, y: &Vertex) -> (Vertex, Vec<u32>) {
        if let Some(e) = self.memo.get(y) {
            return e.clone();
        }
        // walk down from the deepest memoized ancestor
        let start = (0..=y.len())
            .rev()
            .find(|&l| self.memo.contains_key(&y.prefix(l)));
        let from = match start {
            Some(l) => l + 1,
            None => {
                let root = Vertex::root();
                let slots = self.root_slots();
                self.memo.insert(root, (self.u.clone(), slots));
                1
            }
        };
        for l in from..=y.len() {
            let parent = y.prefix(l - 1);
            let (parent_image, parent_slots) = self.memo[&parent].clone();
            let here = y.prefix(l);
            let slot_in_parent = parent.slot_of(&here).expect("child");
            let image = parent_image.neighbor(parent_slots[slot_in_parent as usize]);
            let slots = self.child_slots(&here, &image, &parent_image);
            self.memo.insert(here, (image, slots));
        }
        self.memo[y].clone()
    }

    fn root_slots(&self) -> Vec<u32> {
        self.source.permutation(&Vertex::root(), self.q + 1)
    }

    /// Slot map at non-root `y` with image `gy` and parent image `gp`.
    fn child_slots(&self, y: &Vertex, gy: &Vertex, gp: &Vertex) -> Vec<u32> {
        let parent_slot = gy.slot_of(gp).expect("isometry keeps adjacency");
        let free: Vec<u32> = (0..=self.q).filter(|&s| s != parent_slot).collect();
        let perm = self.source.permutation(y, self.q);
        let mut slots = Vec::with_capacity(self.q as usize + 1);
        slots.push(parent_slot);
        slots.extend(perm.iter().map(|&p| free[p as usize]));
        slots
    }

    /// Visited domain vertices with their images and slot maps, sorted.
    pub fn visited(&self) -> Vec<(Vertex, Vertex, Vec<u32>)> {
        let mut out: Vec<_> = self
            .memo
            .iter()
            .map(|(y, (gy, s))| (y.clone(), gy.clone(), s.clone()))
            .collect();
        out.sort();
        out
    }

    /// Line-based dump of the visited part of the germ.
    pub fn dump_trace(&self) -> String {
        let mut s = String::new();
        writeln!(s, "germ q={} u={}", self.q, self.u).expect("string write");
        for (y, gy, slots) in self.visited() {
            let slots: Vec<String> = slots.iter().map(u32::to_string).collect();
            writeln!(s, "match {y} {gy} {}", slots.join(",")).expect("string write");
        }
        s
    }
}

impl<S: MatchingSource> TreeIsometry for LazyIsometry<S> {
    fn q(&self) -> u32 {
        self.q
    }

    fn image(&mut self, v: &Vertex) -> Vertex {
        self.entry(v).0
    }

    fn preimage(&mut self, t: &Vertex) -> Vertex {
        // follow the geodesic u → t, inverting the slot map at each step
        let path = self.u.geodesic(t);
        let mut y = Vertex::root();
        for pair in path.windows(2) {
            let (gy, slots) = self.entry(&y);
            debug_assert_eq!(gy, pair[0]);
            let target_slot = pair[0].slot_of(&pair[1]).expect("geodesic step");
            let s = slots
                .iter()
                .position(|&x| x == target_slot)
                .expect("bijection") as u32;
            y = y.neighbor(s);
        }
        y
    }
}

/// Samples a Haar-random germ of length `m`: `u` uniform on the sphere of
/// radius `m`, matchings uniform and independent.
pub fn haar_germ(q: u32, m: usize, seed: u64) -> Result<GroupGerm> {
    check_q(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, u64::MAX));
    let word = (0..m)
        .map(|i| rng.random_range(0..if i == 0 { q + 1 } else { q }))
        .collect();
    LazyIsometry::with_source(q, Vertex::from_word_unchecked(word), HaarMatchings { seed })
}

/// `g⁻¹` for a wrapped isometry `g`.
#[derive(Clone, Debug)]
pub struct InverseGerm<G>(pub G);

impl<G: TreeIsometry> TreeIsometry for InverseGerm<G> {
    fn q(&self) -> u32 {
        self.0.q()
    }

    fn image(&mut self, v: &Vertex) -> Vertex {
        self.0.preimage(v)
    }

    fn preimage(&mut self, v: &Vertex) -> Vertex {
        self.0.image(v)
    }
}

/// `a ∘ b`.
#[derive(Clone, Debug)]
pub struct Composition<A, B>(pub A, pub B);

impl<A: TreeIsometry, B: TreeIsometry> TreeIsometry for Composition<A, B> {
    fn q(&self) -> u32 {
        self.0.q()
    }

    fn image(&mut self, v: &Vertex) -> Vertex {
        let w = self.1.image(v);
        self.0.image(&w)
    }

    fn preimage(&mut self, v: &Vertex) -> Vertex {
        let w = self.0.preimage(v);
        self.1.preimage(&w)
    }
}

impl<G: TreeIsometry + ?Sized> TreeIsometry for &mut G {
    fn q(&self) -> u32 {
        (**self).q()
    }

    fn image(&mut self, v: &Vertex) -> Vertex {
        (**self).image(v)
    }

    fn preimage(&mut self, v: &Vertex) -> Vertex {
        (**self).preimage(v)
    }
}

/// Parsed form of [`LazyIsometry::dump_trace`].
#[derive(Clone, Debug, PartialEq)]
pub struct GermTrace {
    pub q: u32,
    pub u: Vertex,
    pub matches: Vec<(Vertex, Vertex, Vec<u32>)>,
}

pub fn parse_trace(text: &str) -> Result<GermTrace> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trace".into()))?;
    let mut q = None;
    let mut u = None;
    for tok in header.split_whitespace().skip(1) {
        match tok.split_once('=') {
            Some(("q", v)) => q = v.parse().ok(),
            Some(("u", v)) => u = v.parse().ok(),
            _ => return Err(Error::Parse(format!("bad header token '{tok}'"))),
        }
    }
    let (q, u) = match (q, u) {
        (Some(q), Some(u)) => (q, u),
        _ => return Err(Error::Parse("trace header needs q= and u=".into())),
    };
    let mut matches = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "match" {
            return Err(Error::Parse(format!("bad trace line '{line}'")));
        }
        let slots = parts[3]
            .split(',')
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad slot in '{line}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        matches.push((parts[1].parse()?, parts[2].parse()?, slots));
    }
    Ok(GermTrace { q, u, matches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::geometry::sphere_vertices;

    #[test]
    fn identity_germ() {
        let mut g = haar_germ(2, 0, 7).unwrap();
        assert_eq!(g.image(&Vertex::root()), Vertex::root());
        assert_eq!(g.preimage(&Vertex::root()), Vertex::root());
    }

    #[test]
    fn germ_is_an_isometry_and_bijective() {
        for seed in 0..20 {
            let mut g = haar_germ(2, 4, seed).unwrap();
            assert_eq!(g.length(), 4);
            let ball: Vec<Vertex> = (0..=4).flat_map(|k| sphere_vertices(2, k)).collect();
            let images: Vec<Vertex> = ball.iter().map(|v| g.image(v)).collect();
            for (i, a) in ball.iter().enumerate() {
                assert_eq!(g.preimage(&images[i]), *a);
                for (j, b) in ball.iter().enumerate().take(i) {
                    assert_eq!(images[i].distance(&images[j]), a.distance(b));
                }
            }
            let u = g.u().clone();
            let y = g.preimage(&Vertex::root());
            assert_eq!(g.image(&y), Vertex::root());
            assert_eq!(y.len(), u.len());
        }
    }

    #[test]
    fn query_order_does_not_matter() {
        let deep = Vertex::new(3, vec![1, 2, 0, 1, 2]).unwrap();
        let mut a = haar_germ(3, 3, 99).unwrap();
        let mut b = haar_germ(3, 3, 99).unwrap();
        let _ = b.preimage(&Vertex::new(3, vec![0, 0]).unwrap());
        let _ = b.image(&Vertex::new(3, vec![2]).unwrap());
        assert_eq!(a.image(&deep), b.image(&deep));
    }

    #[test]
    fn inverse_and_composition() {
        let g = haar_germ(2, 3, 1).unwrap();
        let h = haar_germ(2, 2, 2).unwrap();
        let mut gi = InverseGerm(g.clone());
        let mut comp = Composition(g, h);
        let v = Vertex::new(2, vec![2, 1, 0]).unwrap();
        let w = comp.image(&v);
        assert_eq!(comp.preimage(&w), v);
        let x = gi.image(&v);
        assert_eq!(gi.preimage(&x), v);
        let mut id = Composition(
            InverseGerm(haar_germ(2, 5, 3).unwrap()),
            haar_germ(2, 5, 3).unwrap(),
        );
        assert_eq!(id.image(&v), v);
    }

    #[test]
    fn trace_roundtrip() {
        let mut g = haar_germ(2, 2, 5).unwrap();
        let _ = g.image(&Vertex::new(2, vec![1, 1]).unwrap());
        let text = g.dump_trace();
        let t = parse_trace(&text).unwrap();
        assert_eq!(t.q, 2);
        assert_eq!(&t.u, g.u());
        assert_eq!(t.matches, g.visited());
        assert!(parse_trace("germ q=2").is_err());
        assert!(parse_trace("germ q=2 u=-\nmatch - -").is_err());
    }
}
