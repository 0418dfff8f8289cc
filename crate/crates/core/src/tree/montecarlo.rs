//! Haar averages over spheres and balls of `Aut(T)`.
//!
//! Each sphere `{g : d(x₀, g x₀) = m}` is averaged on its own: exactly when
//! the vectors are constant or `m = 0` with a small stabilizer quotient,
//! otherwise by Monte Carlo over Haar germs with per-sample seeds
//! `sub_seed(sphere_seed, i)`. Ball estimates combine sphere averages with
//! exact volume weights.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::operator::{spectral_norm, Operator};
use crate::stats::{batched_moments, sub_seed};
use crate::tree::coefficient::{cylinder_average_f64, pair_values, CoefficientMatrix};
use crate::tree::geometry::{cell_count, check_q, sphere_volume, CylinderFunction, Vertex};
use crate::tree::germ::{haar_germ, InverseGerm, TreeIsometry};
use crate::tree::harish::{xi_closed, MeasureSpec, Normalization};
use crate::tree::kball::{ball_automorphism_count, enumerate_ball_automorphisms, ENUMERATION_CAP};

/// The four vectors of a Schur pairing, refined to a common depth.
#[derive(Clone, Debug, PartialEq)]
pub struct SchurVectors {
    pub v: CylinderFunction,
    pub w: CylinderFunction,
    pub v_prime: CylinderFunction,
    pub w_prime: CylinderFunction,
}

impl SchurVectors {
    pub fn new(
        v: CylinderFunction,
        w: CylinderFunction,
        v_prime: CylinderFunction,
        w_prime: CylinderFunction,
    ) -> Result<Self> {
        let q = v.q();
        if [&w, &v_prime, &w_prime].iter().any(|x| x.q() != q) {
            return Err(Error::InvalidParameter(
                "vectors live on different trees".into(),
            ));
        }
        let k = [&v, &w, &v_prime, &w_prime]
            .iter()
            .map(|x| x.depth())
            .max()
            .unwrap_or(0);
        Ok(SchurVectors {
            v: v.refine(k)?,
            w: w.refine(k)?,
            v_prime: v_prime.refine(k)?,
            w_prime: w_prime.refine(k)?,
        })
    }

    /// `v = w = v' = w' = x`.
    pub fn diagonal(x: CylinderFunction) -> Self {
        SchurVectors {
            v: x.clone(),
            w: x.clone(),
            v_prime: x.clone(),
            w_prime: x,
        }
    }

    pub fn q(&self) -> u32 {
        self.v.q()
    }

    pub fn depth(&self) -> usize {
        self.v.depth()
    }

    /// `⟨v, v'⟩ · conj⟨w, w'⟩`.
    pub fn target(&self) -> Complex64 {
        let a = self.v.inner(&self.v_prime).expect("same tree");
        let b = self.w.inner(&self.w_prime).expect("same tree");
        a * b.conj()
    }

    /// `⟨π(g)w', v'⟩ · ⟨π(g⁻¹)v, w⟩` from the coefficient matrices of `g`
    /// and `g⁻¹`.
    pub fn sample(&self, i_g: &[f64], i_inv: &[f64]) -> Complex64 {
        let cells = self.v.values().len();
        pair_values(i_g, cells, self.w_prime.values(), self.v_prime.values())
            * pair_values(i_inv, cells, self.v.values(), self.w.values())
    }

    fn constant_product(&self) -> Complex64 {
        let c = |f: &CylinderFunction| f.values()[0];
        c(&self.w_prime) * c(&self.v_prime).conj() * c(&self.v) * c(&self.w).conj()
    }

    fn is_radial(&self) -> bool {
        [&self.v, &self.w, &self.v_prime, &self.w_prime]
            .iter()
            .all(|f| f.is_constant())
    }
}

/// Mean with standard error; `exact` marks values computed without
/// sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub exact: bool,
}

/// Coefficient matrices of `g` and `g⁻¹` on depth-`k` cylinders.
pub fn germ_matrices<G: TreeIsometry>(g: &mut G, k: usize) -> (Vec<f64>, Vec<f64>) {
    let i_g = CoefficientMatrix::new(g, k).to_f64();
    let i_inv = CoefficientMatrix::new(&mut InverseGerm(&mut *g), k).to_f64();
    (i_g, i_inv)
}

type Averages = (Vec<f64>, Vec<f64>, bool);

/// Componentwise sphere average of `f(I(g), I(g⁻¹), out)`: exact
/// enumeration at `m = 0` when the ball quotient is small, Monte Carlo
/// otherwise. Returns `(mean, stderr, exact)`.
fn sphere_average<F>(
    q: u32,
    m: usize,
    k: usize,
    samples: u64,
    seed: u64,
    dim: usize,
    f: F,
) -> Result<Averages>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Sync,
{
    if m == 0 && ball_automorphism_count(q, k).is_some_and(|c| c <= ENUMERATION_CAP) {
        let autos = enumerate_ball_automorphisms(q, k, ENUMERATION_CAP)?;
        let mut sum = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for mut g in autos.iter().cloned() {
            let (a, b) = germ_matrices(&mut g, k);
            buf.iter_mut().for_each(|x| *x = 0.0);
            f(&a, &b, &mut buf);
            sum.iter_mut().zip(&buf).for_each(|(s, x)| *s += x);
        }
        let n = autos.len() as f64;
        return Ok((
            sum.into_iter().map(|s| s / n).collect(),
            vec![0.0; dim],
            true,
        ));
    }
    sampled_average(q, m, k, samples, seed, dim, f)
}

fn sampled_average<F>(
    q: u32,
    m: usize,
    k: usize,
    samples: u64,
    seed: u64,
    dim: usize,
    f: F,
) -> Result<Averages>
where
    F: Fn(&[f64], &[f64], &mut [f64]) + Sync,
{
    check_q(q)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mom = batched_moments(samples, dim, |i, out| {
        let mut g = haar_germ(q, m, sub_seed(seed, i)).expect("q checked");
        let (a, b) = germ_matrices(&mut g, k);
        f(&a, &b, out);
    });
    Ok((mom.mean(), mom.stderr(), false))
}

fn check_vectors(q: u32, vectors: &SchurVectors) -> Result<()> {
    check_q(q)?;
    if vectors.q() != q {
        return Err(Error::InvalidParameter(format!(
            "vectors use q = {}, expected {q}",
            vectors.q()
        )));
    }
    Ok(())
}

fn complex_estimate((mean, se, exact): Averages) -> Estimate {
    Estimate {
        mean: Complex64::new(mean[0], mean[1]),
        stderr: se[0].hypot(se[1]),
        exact,
    }
}

/// Haar average of `⟨π(g)w',v'⟩⟨π(g⁻¹)v,w⟩` over the sphere of radius `m`
/// (a probability average; multiply by `sphere_volume` for the Haar
/// integral).
pub fn sphere_schur_mc(
    q: u32,
    m: usize,
    vectors: &SchurVectors,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_vectors(q, vectors)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if vectors.depth() == 0 {
        let xi = xi_closed(q, m).square().to_f64();
        return Ok(Estimate {
            mean: vectors.constant_product() * xi,
            stderr: 0.0,
            exact: true,
        });
    }
    let avg = sphere_average(q, m, vectors.depth(), samples, seed, 2, |a, b, out| {
        let s = vectors.sample(a, b);
        out[0] = s.re;
        out[1] = s.im;
    })?;
    Ok(complex_estimate(avg))
}

/// [`sphere_schur_mc`] without the exact shortcuts.
pub fn sphere_schur_sampled(
    q: u32,
    m: usize,
    vectors: &SchurVectors,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_vectors(q, vectors)?;
    let avg = sampled_average(q, m, vectors.depth(), samples, seed, 2, |a, b, out| {
        let s = vectors.sample(a, b);
        out[0] = s.re;
        out[1] = s.im;
    })?;
    Ok(complex_estimate(avg))
}

/// One radius of a ball estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallRow {
    pub n: usize,
    pub estimate: Complex64,
    pub stderr: f64,
    pub target: Complex64,
    pub exact: bool,
}

fn to_f64(x: &num_rational::BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Combines per-sphere averages (radius `0, 1, ...`) into normalized ball
/// estimates for every radius.
pub fn combine_spheres(
    q: u32,
    spheres: &[Estimate],
    target: Complex64,
    normalization: Normalization,
) -> Vec<BallRow> {
    let mut rows = Vec::with_capacity(spheres.len());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut var = 0.0;
    for (m, e) in spheres.iter().enumerate() {
        let vol = to_f64(&sphere_volume(q, m));
        sum += e.mean * vol;
        var += (vol * e.stderr).powi(2);
        let norm = to_f64(&MeasureSpec::ball(m, normalization).normalizer(q));
        rows.push(BallRow {
            n: m,
            estimate: sum / norm,
            stderr: var.sqrt() / norm,
            target,
            exact: spheres[..=m].iter().all(|s| s.exact),
        });
    }
    rows
}

/// `(1/N(n')) Σ_{m ≤ n'} vol(S_m) · E_m` for every `n' ≤ n`, with `E_m` the
/// sphere average of the Schur pairing and `N` the chosen normalization.
pub fn ball_schur(
    q: u32,
    n: usize,
    vectors: &SchurVectors,
    samples_per_sphere: u64,
    seed: u64,
    normalization: Normalization,
) -> Result<Vec<BallRow>> {
    check_vectors(q, vectors)?;
    let target = vectors.target();
    if vectors.is_radial() {
        // every sphere term is a fixed multiple of vol·Ξ²
        let kappa = vectors.constant_product();
        return Ok((0..=n)
            .map(|r| {
                let mu = MeasureSpec::ball(r, normalization);
                let ratio = mu.xi2_mass(q) / mu.normalizer(q);
                BallRow {
                    n: r,
                    estimate: kappa * to_f64(&ratio),
                    stderr: 0.0,
                    target,
                    exact: true,
                }
            })
            .collect());
    }
    let spheres = (0..=n)
        .map(|m| sphere_schur_mc(q, m, vectors, samples_per_sphere, sub_seed(seed, m as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_spheres(q, &spheres, target, normalization))
}

/// Cell-averaged cocycle product over one product cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleRow {
    pub a: Vertex,
    pub b: Vertex,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
}

/// Estimates `∫_{S_m} c(g⁻¹, x) c(g, y) dg` averaged over `x ∈ C_a`,
/// `y ∈ C_b` for each pair, where `c(g, y) = q^{B_y(x₀, g⁻¹x₀)/2}`. The
/// target is `vol(S_m) · Ξ(m)²`.
pub fn cocycle_average_check(
    q: u32,
    m: usize,
    pairs: &[(Vertex, Vertex)],
    samples: u64,
    seed: u64,
) -> Result<Vec<CocycleRow>> {
    check_q(q)?;
    if samples == 0 || pairs.is_empty() {
        return Err(Error::InvalidParameter(
            "need samples and at least one cell pair".into(),
        ));
    }
    for (a, b) in pairs {
        Vertex::new(q, a.word().to_vec())?;
        Vertex::new(q, b.word().to_vec())?;
    }
    let vol = to_f64(&sphere_volume(q, m));
    let target = vol * xi_closed(q, m).square().to_f64();
    let mom = batched_moments(samples, pairs.len(), |i, out| {
        let mut g = haar_germ(q, m, sub_seed(seed, i)).expect("q checked");
        let u = g.u().clone();
        let u_inv = g.preimage(&Vertex::root());
        for (slot, (a, b)) in out.iter_mut().zip(pairs) {
            *slot = vol * cylinder_average_f64(q, a, &u) * cylinder_average_f64(q, b, &u_inv);
        }
    });
    let (mean, se) = (mom.mean(), mom.stderr());
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| CocycleRow {
            a: a.clone(),
            b: b.clone(),
            estimate: mean[i],
            stderr: se[i],
            target,
        })
        .collect())
}

/// Spectral norm of a compressed mean operator, with its Monte Carlo error.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Row-major `D² × D²` matrix, rows `(r, s)`, columns `(i, j)`.
    pub matrix: Vec<f64>,
    pub dim: usize,
}

/// Spectral norm of `M_n = ∫ π(g) ⊗ π(g⁻¹) dμ_n(g)` compressed to the
/// orthonormal depth-`k` cylinder indicators, with `μ_n` the
/// `Ξ²`-normalized ball measure. The error is the Frobenius norm of the
/// entrywise standard errors.
pub fn compressed_mean_norm(
    q: u32,
    k: usize,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<NormEstimate> {
    check_q(q)?;
    if k > 2 {
        return Err(Error::InvalidParameter(format!(
            "compression depth {k} not supported (k <= 2)"
        )));
    }
    if k == 0 {
        return Ok(NormEstimate {
            value: 1.0,
            stderr: 0.0,
            matrix: vec![1.0],
            dim: 1,
        });
    }
    let d = cell_count(q, k);
    let dim = d * d;
    let entries = dim * dim;
    let ball = to_f64(&MeasureSpec::ball(n, Normalization::Xi2).normalizer(q));
    let scale = (d * d) as f64 / ball;
    let mut matrix = vec![0.0; entries];
    let mut var = vec![0.0; entries];
    for m in 0..=n {
        let (mean, se, _) = sphere_average(
            q,
            m,
            k,
            samples,
            sub_seed(seed, m as u64),
            entries,
            |a, b, out| {
                for r in 0..d {
                    for s in 0..d {
                        let row = (r * d + s) * dim;
                        for i in 0..d {
                            let air = a[i * d + r];
                            if air == 0.0 {
                                continue;
                            }
                            for j in 0..d {
                                out[row + i * d + j] = air * b[j * d + s];
                            }
                        }
                    }
                }
            },
        )?;
        let vol = to_f64(&sphere_volume(q, m));
        for e in 0..entries {
            matrix[e] += vol * mean[e] * scale;
            var[e] += (vol * se[e] * scale).powi(2);
        }
    }
    let op = Operator::<f64>::from_fn(dim, dim, |r, c| Complex64::new(matrix[r * dim + c], 0.0));
    let value = spectral_norm(&op, 1e-12)?;
    Ok(NormEstimate {
        value,
        stderr: var.iter().sum::<f64>().sqrt(),
        matrix,
        dim,
    })
}
