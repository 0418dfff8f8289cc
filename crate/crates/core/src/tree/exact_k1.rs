//! Exact sphere averages for depth-1 vectors by configuration counting.
//!
//! For `m ≥ 1` the depth-1 coefficient matrix of `g` depends only on the
//! first letter `c` of `g x₀` and the first letter `a` of `g⁻¹ x₀`, which
//! are independent and uniform under Haar measure on the sphere. With
//! `x = q^{−m/2}/(q+1)`:
//!
//! * row `a' ≠ a` has a single entry `x` in column `c`;
//! * row `a` has `x` off column `c` and `(m−1)(q−1)x` in column `c`;
//!
//! and the matrix of `g⁻¹` is the transpose. Averaging over the
//! `(q+1)²` pairs `(c, a)` gives the sphere average exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tree::geometry::check_q;
use crate::tree::harish::Normalization;
use crate::tree::kball::{enumerate_ball_automorphisms, ENUMERATION_CAP};
use crate::tree::montecarlo::{combine_spheres, germ_matrices, BallRow, Estimate, SchurVectors};

/// Equally likely `(I(g), I(g⁻¹))` pairs on the sphere of radius `m`.
pub fn sphere_configurations(q: u32, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    check_q(q)?;
    let d = (q + 1) as usize;
    if m == 0 {
        return Ok(enumerate_ball_automorphisms(q, 1, ENUMERATION_CAP)?
            .into_iter()
            .map(|mut g| germ_matrices(&mut g, 1))
            .collect());
    }
    let x = (q as f64).powf(-(m as f64) / 2.0) / (q + 1) as f64;
    let heavy = (m - 1) as f64 * (q - 1) as f64 * x;
    let mut out = Vec::with_capacity(d * d);
    for c in 0..d {
        for a in 0..d {
            let mut i_g = vec![0.0; d * d];
            for row in 0..d {
                for col in 0..d {
                    i_g[row * d + col] = match (row == a, col == c) {
                        (false, true) => x,
                        (false, false) => 0.0,
                        (true, false) => x,
                        (true, true) => heavy,
                    };
                }
            }
            let i_inv = (0..d * d).map(|e| i_g[(e % d) * d + e / d]).collect();
            out.push((i_g, i_inv));
        }
    }
    Ok(out)
}

/// Exact sphere average of the Schur pairing for vectors of depth ≤ 1.
pub fn exact_sphere_schur_k1(q: u32, m: usize, vectors: &SchurVectors) -> Result<Estimate> {
    if vectors.depth() > 1 || vectors.q() != q {
        return Err(Error::InvalidParameter(
            "exact enumeration needs depth <= 1 vectors on this tree".into(),
        ));
    }
    let refine = |f: &crate::tree::geometry::CylinderFunction| f.refine(1);
    let vectors = SchurVectors {
        v: refine(&vectors.v)?,
        w: refine(&vectors.w)?,
        v_prime: refine(&vectors.v_prime)?,
        w_prime: refine(&vectors.w_prime)?,
    };
    let configs = sphere_configurations(q, m)?;
    let sum: Complex64 = configs.iter().map(|(a, b)| vectors.sample(a, b)).sum();
    Ok(Estimate {
        mean: sum / configs.len() as f64,
        stderr: 0.0,
        exact: true,
    })
}

/// Exact ball estimates for every radius `0..=n`.
pub fn exact_ball_schur_k1(
    q: u32,
    n: usize,
    vectors: &SchurVectors,
    normalization: Normalization,
) -> Result<Vec<BallRow>> {
    let spheres = (0..=n)
        .map(|m| exact_sphere_schur_k1(q, m, vectors))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_spheres(
        q,
        &spheres,
        vectors.target(),
        normalization,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::coefficient::CoefficientMatrix;
    use crate::tree::geometry::{CylinderFunction, Vertex};
    use crate::tree::germ::{haar_germ, TreeIsometry};
    use crate::tree::montecarlo::sphere_schur_sampled;

    #[test]
    fn configurations_match_sampled_germs() {
        for q in [2, 3] {
            for m in 1..7 {
                let configs = sphere_configurations(q, m).unwrap();
                for seed in 0..10 {
                    let mut g = haar_germ(q, m, seed).unwrap();
                    let c = g.u().word()[0] as usize;
                    let a = g.preimage(&Vertex::root()).word()[0] as usize;
                    let (i_g, i_inv) = germ_matrices(&mut g, 1);
                    let (e_g, e_inv) = &configs[c * (q as usize + 1) + a];
                    for (x, y) in i_g.iter().zip(e_g).chain(i_inv.iter().zip(e_inv)) {
                        assert!((x - y).abs() < 1e-15, "q={q} m={m} seed={seed}");
                    }
                    let exact = CoefficientMatrix::new(&mut g, 1);
                    assert_eq!(exact.cells(), q as usize + 1);
                }
            }
        }
    }

    #[test]
    fn orthogonal_sphere_mean() {
        // 2·2^{-m}/9 for v = w = √3 𝟙_{C₀}, v' = w' = √3 𝟙_{C₁}
        let e = |c| CylinderFunction::indicator(2, 1, c, 3f64.sqrt()).unwrap();
        let vec = SchurVectors::new(e(0), e(0), e(1), e(1)).unwrap();
        for m in 1..10 {
            let got = exact_sphere_schur_k1(2, m, &vec).unwrap().mean.re;
            assert!((got - 2.0 * 0.5f64.powi(m as i32) / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn agrees_with_monte_carlo() {
        let e = |c| CylinderFunction::indicator(2, 1, c, 3f64.sqrt()).unwrap();
        let vec = SchurVectors::diagonal(e(0));
        for m in [1, 3, 5] {
            let exact = exact_sphere_schur_k1(2, m, &vec).unwrap().mean;
            let mc = sphere_schur_sampled(2, m, &vec, 6000, 17 + m as u64).unwrap();
            assert!(
                (mc.mean - exact).norm() <= 4.0 * mc.stderr,
                "m={m}: {mc:?} vs {exact}"
            );
        }
    }
}
