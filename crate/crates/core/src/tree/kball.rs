//! Automorphisms of the radius-`k` ball fixing the root.
//!
//! The stabilizer `K` of `x₀` acts on depth-`k` cylinders through its
//! quotient by the pointwise stabilizer of the ball; averaging over that
//! finite quotient is the exact `m = 0` Haar average.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::geometry::{check_q, sphere_vertices, Vertex};
use crate::tree::germ::{LazyIsometry, TableMatchings};

/// Root-fixing automorphism given by explicit matchings inside a ball and
/// identity matchings outside it.
pub type BallAutomorphism = LazyIsometry<TableMatchings>;

/// Default limit on the number of enumerated automorphisms.
pub const ENUMERATION_CAP: u64 = 720;

fn factorial(n: u32) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, x| acc.checked_mul(x))
}

/// `(q+1)! · (q!)^{#vertices at depth 1..k−1}`, or `None` on overflow.
pub fn ball_automorphism_count(q: u32, k: usize) -> Option<u64> {
    if k == 0 {
        return Some(1);
    }
    let inner: u64 = (1..k).map(|d| sphere_vertices(q, d).len() as u64).sum();
    let mut count = factorial(q + 1)?;
    let qf = factorial(q)?;
    for _ in 0..inner {
        count = count.checked_mul(qf)?;
    }
    Some(count)
}

fn permutations(n: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut x = p.clone();
            x.insert(pos, n - 1);
            out.push(x);
        }
    }
    out.sort();
    out
}

/// Every automorphism of the depth-`k` ball, each once. Fails when there
/// are more than `cap`.
pub fn enumerate_ball_automorphisms(q: u32, k: usize, cap: u64) -> Result<Vec<BallAutomorphism>> {
    check_q(q)?;
    let count = ball_automorphism_count(q, k)
        .filter(|&c| c <= cap)
        .ok_or_else(|| {
            Error::ResourceLimit(format!(
                "more than {cap} automorphisms of the radius-{k} ball (q = {q})"
            ))
        })?;
    let inner: Vec<Vertex> = (0..k).flat_map(|d| sphere_vertices(q, d)).collect();
    let root_perms = permutations(q + 1);
    let child_perms = permutations(q);
    let mut out = Vec::with_capacity(count as usize);
    for mut idx in 0..count {
        let mut table = HashMap::new();
        for v in &inner {
            let perms = if v.is_root() {
                &root_perms
            } else {
                &child_perms
            };
            let n = perms.len() as u64;
            table.insert(v.clone(), perms[(idx % n) as usize].clone());
            idx /= n;
        }
        out.push(LazyIsometry::with_source(
            q,
            Vertex::root(),
            TableMatchings { table },
        )?);
    }
    Ok(out)
}
