//! Finite-dimensional Hilbert-space machinery.
//!
//! Tensor products use one global convention: the basis vector
//! `e_i ⊗ e_j` of `C^{D1} ⊗ C^{D2}` sits at index `i·D2 + j`
//! (see [`tensor_index`]). Inner products are linear in the first slot:
//! `⟨x, y⟩ = Σ x_i · conj(y_i)`.

use std::ops::{Add, Index, IndexMut, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{AsReal, Real};

/// Row-major position of `e_i ⊗ e_j` when the second factor has dimension `d2`.
#[inline]
pub fn tensor_index(i: usize, j: usize, d2: usize) -> usize {
    i * d2 + j
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T: Real> {
    data: Vec<Complex<T>>,
}

impl<T: Real> Vector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Self {
        Vector { data }
    }

    pub fn from_real(data: &[T]) -> Self {
        Vector::new(data.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Vector::new(vec![Complex::zero(); dim])
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[i] = Complex::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a * b.conj())
    }

    pub fn norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// `self ⊗ other` under [`tensor_index`].
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        Vector::new(out)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl<T: Real> Index<usize> for Vector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.data[i]
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Operator<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a real matrix from row slices.
    pub fn from_real_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| Complex::new(rows[i][j], T::zero()))
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &Vector<T>) -> Result<Vector<T>> {
        v.check_dim(self.cols)?;
        let mut out = vec![Complex::zero(); self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row
                .iter()
                .zip(v.as_slice())
                .fold(Complex::zero(), |acc, (a, b)| acc + a * b);
        }
        Ok(Vector::new(out))
    }

    /// Kronecker product `self ⊗ rhs` under [`tensor_index`].
    pub fn kron(&self, rhs: &Self) -> Self {
        let (r2, c2) = (rhs.rows, rhs.cols);
        let mut out = Self::zeros(self.rows * r2, self.cols * c2);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..r2 {
                    for l in 0..c2 {
                        out[(tensor_index(i, j, r2), tensor_index(k, l, c2))] = a * rhs[(j, l)];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `⟨self, other⟩_F = Σ self_ij · conj(other_ij)`.
    pub fn frobenius_inner(&self, other: &Self) -> Complex<T> {
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a * b.conj())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// `max |U*U − I|`, or an error for non-square input.
    pub fn unitarity_deviation(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let p = self.adjoint().matmul(self)?;
        Ok(p.max_abs_diff(&Self::identity(self.rows)))
    }

    /// `max |M − M*|`.
    pub fn self_adjoint_deviation(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl<T: Real> Index<(usize, usize)> for Operator<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Operator<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        assert!(
            self.same_shape(rhs).is_ok(),
            "shape mismatch in operator sum"
        );
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        assert!(
            self.same_shape(rhs).is_ok(),
            "shape mismatch in operator difference"
        );
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// The flip `F(e_i ⊗ e_j) = e_j ⊗ e_i` on `C^D ⊗ C^D`.
pub fn flip_operator<T: Real>(d: usize) -> Result<Operator<T>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "flip dimension must be positive".into(),
        ));
    }
    let mut f = Operator::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(tensor_index(j, i, d), tensor_index(i, j, d))] = Complex::one();
        }
    }
    Ok(f)
}

/// Both sides of `⟨F(w'⊗v), v'⊗w⟩ = ⟨v,v'⟩·conj⟨w,w'⟩`, evaluated
/// independently.
pub fn pairing_both_sides<T: Real>(
    v: &Vector<T>,
    w: &Vector<T>,
    v_prime: &Vector<T>,
    w_prime: &Vector<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    let d = v.dim();
    for x in [w, v_prime, w_prime] {
        x.check_dim(d)?;
    }
    let f = flip_operator::<T>(d)?;
    let lhs = f.apply(&w_prime.tensor(v))?.inner(&v_prime.tensor(w));
    let rhs = v.inner(v_prime) * w.inner(w_prime).conj();
    Ok((lhs, rhs))
}

/// Finite weighted family of group elements standing in for a measure `μ`.
#[derive(Clone, Debug)]
pub struct WeightedSamples<E, T: Real> {
    pub samples: Vec<(E, T)>,
    /// Asserts closure under inversion with equal weights.
    pub symmetric: bool,
}

impl<E, T: Real> WeightedSamples<E, T> {
    pub fn new(samples: Vec<(E, T)>, symmetric: bool) -> Self {
        WeightedSamples { samples, symmetric }
    }

    /// Uniform probability weights.
    pub fn uniform(elements: Vec<E>, symmetric: bool) -> Self {
        let w = T::one() / elements.len().real();
        Self::new(elements.into_iter().map(|e| (e, w)).collect(), symmetric)
    }

    pub fn point_mass(e: E) -> Self {
        Self::new(vec![(e, T::one())], true)
    }
}

/// Default unitarity tolerance for representation inputs.
pub const UNITARY_TOL: f64 = 1e-10;

/// `Σ_g μ(g) · π(g) ⊗ π(g⁻¹)`, using `π(g⁻¹) = π(g)*` after checking
/// unitarity to `tol`.
pub fn tensor_mean<E, T: Real>(
    rep_eval: impl Fn(&E) -> Operator<T>,
    mu: &WeightedSamples<E, T>,
    tol: T,
) -> Result<Operator<T>> {
    let mut acc: Option<Operator<T>> = None;
    let mut dim = None;
    for (g, weight) in &mu.samples {
        let p = rep_eval(g);
        let dev = p.unitarity_deviation()?;
        if dev > tol {
            return Err(Error::NonUnitary {
                deviation: dev.to_f64().unwrap_or(f64::NAN),
            });
        }
        if let Some(d) = dim {
            if d != p.rows() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.rows(),
                });
            }
        }
        dim = Some(p.rows());
        let term = p.kron(&p.adjoint()).scale(Complex::new(*weight, T::zero()));
        acc = Some(match acc {
            Some(a) => &a + &term,
            None => term,
        });
    }
    acc.ok_or_else(|| Error::InvalidParameter("empty measure".into()))
}

/// `Σ_g μ(g) · ⟨π(g)v, w⟩ · conj⟨π(g)v', w'⟩`.
pub fn schur_integral<E, T: Real>(
    rep_eval: impl Fn(&E) -> Operator<T>,
    mu: &WeightedSamples<E, T>,
    v: &Vector<T>,
    w: &Vector<T>,
    v_prime: &Vector<T>,
    w_prime: &Vector<T>,
) -> Result<Complex<T>> {
    let mut acc = Complex::zero();
    for (g, weight) in &mu.samples {
        let p = rep_eval(g);
        let a = p.apply(v)?.inner(w);
        let b = p.apply(v_prime)?.inner(w_prime);
        acc += a * b.conj() * *weight;
    }
    Ok(acc)
}

/// `⟨M(w'⊗v), v'⊗w⟩`: the operator side of the Schur bridge identity.
pub fn bridge_pairing<T: Real>(
    m: &Operator<T>,
    v: &Vector<T>,
    w: &Vector<T>,
    v_prime: &Vector<T>,
    w_prime: &Vector<T>,
) -> Result<Complex<T>> {
    Ok(m.apply(&w_prime.tensor(v))?.inner(&v_prime.tensor(w)))
}

/// Iteration cap for [`spectral_norm`].
pub const POWER_ITERATION_MAX: usize = 50_000;

/// Largest singular value by power iteration on `A*A`, started from the
/// normalized all-ones vector. `tol` is the relative change of the
/// Rayleigh quotient at which iteration stops.
pub fn spectral_norm<T: Real>(a: &Operator<T>, tol: T) -> Result<T> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.cols();
    if n == 0 {
        return Ok(T::zero());
    }
    let ah = a.adjoint();
    let start = T::one() / AsReal::<T>::real(n).sqrt();
    let mut x = Vector::new(vec![Complex::new(start, T::zero()); n]);
    let mut last = T::zero();
    for _ in 0..POWER_ITERATION_MAX {
        let ax = a.apply(&x)?;
        let sigma_sq = ax.norm().powi(2);
        let y = ah.apply(&ax)?;
        let ny = y.norm();
        if ny == T::zero() {
            return Ok(T::zero());
        }
        if (sigma_sq - last).abs() <= tol * sigma_sq {
            return Ok(sigma_sq.sqrt());
        }
        last = sigma_sq;
        let inv = Complex::new(T::one() / ny, T::zero());
        x = Vector::new(y.as_slice().iter().map(|z| z * inv).collect());
    }
    Err(Error::NotConverged {
        iterations: POWER_ITERATION_MAX,
    })
}

/// Least-squares `c` with `M ≈ cF` and the Frobenius residual `‖M − cF‖`.
pub fn fit_multiple_of_flip<T: Real>(m: &Operator<T>) -> Result<(Complex<T>, T)> {
    let d = (m.rows() as f64).sqrt().round() as usize;
    if !m.is_square() || d * d != m.rows() {
        return Err(Error::InvalidParameter(format!(
            "expected a D²×D² operator, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    let f = flip_operator::<T>(d)?;
    let c = m.frobenius_inner(&f) / f.frobenius_inner(&f);
    let residual = (m - &f.scale(c)).frobenius_norm();
    Ok((c, residual))
}

/// Frobenius distance from `target` to the linear span of `basis`.
pub fn span_membership_residual<T: Real>(basis: &[Operator<T>], target: &Operator<T>) -> Result<T> {
    for b in basis {
        b.same_shape(target)?;
    }
    let drop_tol = T::epsilon().sqrt() * 0.01.real();
    let mut ortho: Vec<Vec<Complex<T>>> = Vec::new();
    for b in basis {
        let mut v = b.as_slice().to_vec();
        let n0 = norm(&v);
        if n0 == T::zero() {
            continue;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &ortho {
                project_out(&mut v, q);
            }
        }
        let n = norm(&v);
        if n > drop_tol * n0 {
            let inv = Complex::new(T::one() / n, T::zero());
            v.iter_mut().for_each(|z| *z *= inv);
            ortho.push(v);
        }
    }
    let mut r = target.as_slice().to_vec();
    for _ in 0..2 {
        for q in &ortho {
            project_out(&mut r, q);
        }
    }
    Ok(norm(&r))
}

fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `v ← v − ⟨v, q⟩ q` for unit `q`.
fn project_out<T: Real>(v: &mut [Complex<T>], q: &[Complex<T>]) {
    let c = v
        .iter()
        .zip(q)
        .fold(Complex::zero(), |acc: Complex<T>, (a, b)| {
            acc + a * b.conj()
        });
    for (a, b) in v.iter_mut().zip(q) {
        *a -= c * b;
    }
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: &Operator<T>) -> Vec<T> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut c: Vec<Vec<Complex<T>>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[(i, j)]).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = c[p].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let beta = c[q].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let gamma = c[p]
                    .iter()
                    .zip(&c[q])
                    .fold(Complex::zero(), |s: Complex<T>, (x, y)| s + x.conj() * y);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (g + g);
                let sign = if zeta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = c.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yt = *y * phase.conj();
                    let nx = *x * cs - yt * sn;
                    let ny = *x * sn + yt * cs;
                    *x = nx;
                    *y = ny * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<T> = c.iter().map(|col| norm(col)).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}
