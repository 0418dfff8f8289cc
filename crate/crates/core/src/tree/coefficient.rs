//! Exact matrix coefficients of the boundary representation on cylinder
//! functions.
//!
//! For an automorphism `g` with `u = g x₀`,
//! `(π(g)f)(x) = q^{B_x(x₀,u)/2} f(g⁻¹x)`, so for depth-`k` cylinders
//! `⟨π(g)𝟙_{C_a}, 𝟙_{C_b}⟩ = ∫_{C_b ∩ gC_a} q^{B_x(x₀,u)/2} dν(x)`.
//! Every such integral is an integer multiple of `q^{−m/2} / ((q+1)q^D)`
//! with `D = m + k + 1`, so entries are stored as integer numerators.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{
    checked_pow, CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, One, ToPrimitive, Zero,
};

use crate::error::{Error, Result};
use crate::exact::ScaledValue;
use crate::tree::geometry::{sphere_vertices, BoundaryCell, CylinderFunction, Excluded, Vertex};
use crate::tree::germ::TreeIsometry;

trait Numer: Clone + Zero + One + CheckedAdd + CheckedMul + CheckedSub + FromPrimitive {}
impl<I> Numer for I where
    I: Clone + Zero + One + CheckedAdd + CheckedMul + CheckedSub + FromPrimitive
{
}

/// Integer numerators of cylinder integrals of `q^{s·B/2}` over the common
/// denominator `(q+1)q^D`, with the factor `q^{−s·m/2}` left out.
struct Integrator<'a> {
    q: u32,
    d: u32,
    power: u32,
    u: &'a Vertex,
}

impl Integrator<'_> {
    fn pow<I: Numer>(&self, e: u32) -> Option<I> {
        checked_pow(I::from_u32(self.q)?, e as usize)
    }

    /// Numerator of `ν(C_v)` for `|v| = depth`.
    fn measure<I: Numer>(&self, depth: usize) -> Option<I> {
        if depth == 0 {
            I::from_u32(self.q + 1)?.checked_mul(&self.pow(self.d)?)
        } else {
            self.pow(self.d + 1 - depth as u32)
        }
    }

    /// `∫_{C_p} q^{s·j} dν`, `j = (x|u)`.
    fn cylinder<I: Numer>(&self, p: &Vertex) -> Option<I> {
        let q = self.q;
        let m = self.u.len();
        let c = p.common_prefix_len(self.u);
        if c < p.len() || p.len() == m {
            return self
                .measure::<I>(p.len())?
                .checked_mul(&self.pow(self.power * c as u32)?);
        }
        let mut acc = I::zero();
        for j in p.len()..m {
            let siblings = if j == 0 { q } else { q - 1 };
            let term = self
                .measure::<I>(j + 1)?
                .checked_mul(&self.pow(self.power * j as u32)?)?
                .checked_mul(&I::from_u32(siblings)?)?;
            acc = acc.checked_add(&term)?;
        }
        let top = self
            .measure::<I>(m)?
            .checked_mul(&self.pow(self.power * m as u32)?)?;
        acc.checked_add(&top)
    }

    /// `∫_{C_b ∩ cell}` for a standard cylinder `C_b`.
    fn restricted<I: Numer>(&self, b: &Vertex, base: &I, cell: &BoundaryCell) -> Option<I> {
        let x = &cell.anchor;
        match cell.excluded {
            Excluded::TowardRoot => {
                if x.is_prefix_of(b) {
                    Some(base.clone())
                } else if b.is_prefix_of(x) {
                    self.cylinder(x)
                } else {
                    Some(I::zero())
                }
            }
            Excluded::Child(c) => {
                let s = x.child(c);
                if s.is_prefix_of(b) {
                    Some(I::zero())
                } else if b.is_prefix_of(&s) {
                    base.checked_sub(&self.cylinder(&s)?)
                } else {
                    Some(base.clone())
                }
            }
        }
    }

    fn matrix<I: Numer>(&self, cells: &[Vertex], images: &[BoundaryCell]) -> Option<Vec<I>> {
        let bases = cells
            .iter()
            .map(|b| self.cylinder::<I>(b))
            .collect::<Option<Vec<_>>>()?;
        let mut out = Vec::with_capacity(cells.len() * images.len());
        for img in images {
            for (b, base) in cells.iter().zip(&bases) {
                out.push(self.restricted(b, base, img)?);
            }
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Numerators {
    Fast(Vec<i128>),
    Big(Vec<BigInt>),
}

/// `I_ab = ⟨π(g)𝟙_{C_a}, 𝟙_{C_b}⟩` over depth-`k` cylinders, exact.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    q: u32,
    m: usize,
    k: usize,
    power: u32,
    cells: usize,
    numer: Numerators,
}

/// Image cells `g C_a` for the depth-`k` cylinders, in canonical order.
pub fn image_cells<G: TreeIsometry + ?Sized>(g: &mut G, k: usize) -> Vec<BoundaryCell> {
    let q = g.q();
    sphere_vertices(q, k)
        .iter()
        .map(|a| match a.parent() {
            None => BoundaryCell::whole(),
            Some(p) => {
                let (ga, gp) = (g.image(a), g.image(&p));
                BoundaryCell::omega(&ga, &gp).expect("isometry keeps adjacency")
            }
        })
        .collect()
}

impl CoefficientMatrix {
    /// Coefficients of `π(g)` on depth-`k` cylinder indicators.
    pub fn new<G: TreeIsometry + ?Sized>(g: &mut G, k: usize) -> Self {
        Self::with_power(g, k, 1)
    }

    /// `∫_{C_b ∩ gC_a} q^{s·B/2} dν`; `s = 2` gives the Radon-Nikodym
    /// derivative itself.
    fn with_power<G: TreeIsometry + ?Sized>(g: &mut G, k: usize, power: u32) -> Self {
        let q = g.q();
        let u = g.base_image();
        let images = image_cells(g, k);
        let cells = sphere_vertices(q, k);
        let integ = Integrator {
            q,
            d: (u.len() + k + 1) as u32,
            power,
            u: &u,
        };
        let numer = match integ.matrix::<i128>(&cells, &images) {
            Some(v) => Numerators::Fast(v),
            None => Numerators::Big(
                integ
                    .matrix::<BigInt>(&cells, &images)
                    .expect("unbounded integers"),
            ),
        };
        CoefficientMatrix {
            q,
            m: u.len(),
            k,
            power,
            cells: cells.len(),
            numer,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.k
    }

    /// Raw numerators over `(q+1) q^{m+k+1}` (times `q^{−m/2}`) when they
    /// fit in `i128`.
    pub fn numerators_i128(&self) -> Option<&[i128]> {
        match &self.numer {
            Numerators::Fast(v) => Some(v),
            Numerators::Big(_) => None,
        }
    }

    /// Numerators over `(q+1) q^{m+k+1}` as big integers.
    pub fn numerators_big(&self) -> Vec<BigInt> {
        match &self.numer {
            Numerators::Fast(v) => v.iter().map(|&x| BigInt::from(x)).collect(),
            Numerators::Big(v) => v.clone(),
        }
    }

    fn denominator(&self) -> BigInt {
        BigInt::from(self.q + 1) * num_traits::pow(BigInt::from(self.q), self.m + self.k + 1)
    }

    /// Exact entry `(a, b)`.
    pub fn entry_exact(&self, a: usize, b: usize) -> ScaledValue<BigInt> {
        let i = a * self.cells + b;
        let num = match &self.numer {
            Numerators::Fast(v) => BigInt::from(v[i]),
            Numerators::Big(v) => v[i].clone(),
        };
        ScaledValue::new(
            self.q,
            BigRational::new(num, self.denominator()),
            -((self.power as usize * self.m) as i64),
        )
    }

    /// All entries as doubles, row-major in `(a, b)`.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.numer {
            Numerators::Fast(v) => {
                let q = self.q as f64;
                let scale = q.powf(-(self.power as f64) * self.m as f64 / 2.0)
                    / ((q + 1.0) * q.powi((self.m + self.k + 1) as i32));
                if scale.is_finite() && scale > 0.0 {
                    return v.iter().map(|&x| x as f64 * scale).collect();
                }
                (0..v.len())
                    .map(|i| self.entry_exact(i / self.cells, i % self.cells).to_f64())
                    .collect()
            }
            Numerators::Big(_) => (0..self.cells * self.cells)
                .map(|i| self.entry_exact(i / self.cells, i % self.cells).to_f64())
                .collect(),
        }
    }

    /// `⟨π(g)v, w⟩` for depth-`k` functions.
    pub fn pair(&self, v: &CylinderFunction, w: &CylinderFunction) -> Result<Complex64> {
        if v.depth() != self.k || w.depth() != self.k {
            return Err(Error::InvalidParameter(
                "vector depth differs from matrix depth".into(),
            ));
        }
        Ok(pair_values(
            &self.to_f64(),
            self.cells,
            v.values(),
            w.values(),
        ))
    }
}

/// `Σ_{a,b} v_a conj(w_b) I_ab`.
pub(crate) fn pair_values(
    entries: &[f64],
    cells: usize,
    v: &[Complex64],
    w: &[Complex64],
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, va) in v.iter().enumerate() {
        if *va == Complex64::new(0.0, 0.0) {
            continue;
        }
        let row: Complex64 = w
            .iter()
            .enumerate()
            .map(|(b, wb)| wb.conj() * entries[a * cells + b])
            .sum();
        acc += va * row;
    }
    acc
}

/// `⟨π(g)v, w⟩`, refining `v` and `w` to a common depth.
pub fn coefficient<G: TreeIsometry + ?Sized>(
    g: &mut G,
    v: &CylinderFunction,
    w: &CylinderFunction,
) -> Result<Complex64> {
    if v.q() != g.q() || w.q() != g.q() {
        return Err(Error::InvalidParameter(
            "vector q differs from the tree".into(),
        ));
    }
    let k = v.depth().max(w.depth());
    CoefficientMatrix::new(g, k).pair(&v.refine(k)?, &w.refine(k)?)
}

/// `∫_{gC_a} (dg_*ν/dν) dν` for each depth-`k` cylinder `a`; equals `ν(C_a)`
/// exactly when `π(g)` is isometric on these cylinders.
pub fn image_cell_mass<G: TreeIsometry + ?Sized>(g: &mut G, k: usize) -> Vec<ScaledValue<BigInt>> {
    let mat = CoefficientMatrix::with_power(g, k, 2);
    (0..mat.cells)
        .map(|a| {
            (0..mat.cells).fold(ScaledValue::zero(mat.q), |acc, b| {
                acc.checked_add(&mat.entry_exact(a, b))
                    .expect("common exponent")
            })
        })
        .collect()
}

/// `∫_{C_p} q^{B_x(x₀,u)/2} dν(x)`, exact.
pub fn cylinder_integral(q: u32, p: &Vertex, u: &Vertex) -> ScaledValue<BigInt> {
    let integ = Integrator {
        q,
        d: (u.len().max(p.len()) + 1) as u32,
        power: 1,
        u,
    };
    let num: BigInt = integ.cylinder(p).expect("unbounded integers");
    let den = BigInt::from(q + 1) * num_traits::pow(BigInt::from(q), integ.d as usize);
    ScaledValue::new(q, BigRational::new(num, den), -(u.len() as i64))
}

/// Double-precision [`cylinder_integral`] through `i128` when it fits.
pub fn cylinder_integral_f64(q: u32, p: &Vertex, u: &Vertex) -> f64 {
    let d = (u.len().max(p.len()) + 1) as u32;
    let integ = Integrator { q, d, power: 1, u };
    match integ.cylinder::<i128>(p) {
        Some(num) => {
            let qf = q as f64;
            num.to_f64().unwrap_or(f64::NAN) / ((qf + 1.0) * qf.powi(d as i32))
                * qf.powf(-(u.len() as f64) / 2.0)
        }
        None => cylinder_integral(q, p, u).to_f64(),
    }
}

/// `(1/ν(C_p)) ∫_{C_p} q^{B_x(x₀,u)/2} dν(x)` in double precision; the
/// ratio of integer numerators is formed before scaling, so values that are
/// exactly 1 come out as 1.
pub fn cylinder_average_f64(q: u32, p: &Vertex, u: &Vertex) -> f64 {
    let d = (u.len().max(p.len()) + 1) as u32;
    let integ = Integrator { q, d, power: 1, u };
    let scale = (q as f64).powf(-(u.len() as f64) / 2.0);
    match (integ.cylinder::<i128>(p), integ.measure::<i128>(p.len())) {
        (Some(num), Some(den)) if num < (1 << 100) => {
            if num == den {
                scale
            } else {
                num as f64 / den as f64 * scale
            }
        }
        _ => {
            let nu = crate::tree::geometry::cylinder_measure(q, p.len());
            cylinder_integral(q, p, u).div_ratio(&nu).to_f64()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::germ::{haar_germ, InverseGerm, LazyIsometry, TableMatchings};
    use crate::tree::harish::xi_closed;

    #[test]
    fn identity_gives_inner_product() {
        let mut e = haar_germ(2, 0, 0).unwrap();
        // m = 0 Haar germs still permute cells; use the identity table
        let mut id =
            LazyIsometry::with_source(2, Vertex::root(), TableMatchings::default()).unwrap();
        let v = CylinderFunction::from_real(2, 1, &[1.0, -2.0, 0.5]).unwrap();
        let w = CylinderFunction::from_real(2, 2, &[1.0, 0.0, 3.0, 1.0, -1.0, 2.0]).unwrap();
        let c = coefficient(&mut id, &v, &w).unwrap();
        assert!((c - v.inner(&w).unwrap()).norm() < 1e-15);
        let one = CylinderFunction::one(2);
        assert_eq!(
            coefficient(&mut e, &one, &one).unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn constant_coefficient_is_xi() {
        for q in [2, 3] {
            for m in 0..9 {
                for seed in 0..3 {
                    let mut g = haar_germ(q, m, seed).unwrap();
                    let mat = CoefficientMatrix::new(&mut g, 0);
                    assert_eq!(mat.entry_exact(0, 0), xi_closed(q, m));
                    let mut gi = InverseGerm(g);
                    assert_eq!(
                        CoefficientMatrix::new(&mut gi, 0).entry_exact(0, 0),
                        xi_closed(q, m)
                    );
                }
            }
        }
    }

    #[test]
    fn rows_sum_to_deeper_rows() {
        let mut g = haar_germ(2, 3, 11).unwrap();
        let m1 = CoefficientMatrix::new(&mut g, 1).to_f64();
        let m2 = CoefficientMatrix::new(&mut g, 2).to_f64();
        // cylinder a at depth 1 contains depth-2 cells 2a, 2a+1
        for a in 0..3 {
            for b in 0..3 {
                let s: f64 = (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| m2[(2 * a + i) * 6 + 2 * b + j])
                    .sum();
                assert!((s - m1[a * 3 + b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_unitarity_on_cells() {
        for m in 0..=3 {
            for seed in 0..10 {
                let mut g = haar_germ(2, m, seed).unwrap();
                for (a, mass) in image_cell_mass(&mut g, 1).into_iter().enumerate() {
                    assert_eq!(
                        mass,
                        ScaledValue::from_ratio(2, BigRational::new(1.into(), 3.into())),
                        "cell {a}"
                    );
                }
            }
        }
    }

    #[test]
    fn adjoint_relation() {
        let v = CylinderFunction::from_real(2, 1, &[0.3, -1.0, 2.0]).unwrap();
        let w = CylinderFunction::from_real(2, 1, &[1.5, 0.2, -0.7]).unwrap();
        for seed in 0..5 {
            let mut g = haar_germ(2, 4, seed).unwrap();
            let lhs = coefficient(&mut g, &v, &w).unwrap();
            let rhs = coefficient(&mut InverseGerm(&mut g), &w, &v)
                .unwrap()
                .conj();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn big_integer_fallback() {
        let mut g = haar_germ(5, 60, 3).unwrap();
        let mat = CoefficientMatrix::new(&mut g, 1);
        assert!(matches!(mat.numer, Numerators::Big(_)));
        let total = (0..6)
            .flat_map(|a| (0..6).map(move |b| (a, b)))
            .fold(ScaledValue::zero(5), |acc, (a, b)| {
                acc.checked_add(&mat.entry_exact(a, b)).unwrap()
            });
        assert_eq!(total, xi_closed(5, 60));
        let x = mat.to_f64().iter().sum::<f64>();
        assert!((x / xi_closed(5, 60).to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_integrals() {
        let u = Vertex::new(2, vec![0, 1, 1]).unwrap();
        let total = (0..3)
            .map(|c| cylinder_integral(2, &Vertex::root().child(c), &u))
            .fold(ScaledValue::zero(2), |a, b| a.checked_add(&b).unwrap());
        assert_eq!(total, xi_closed(2, 3));
        let p = Vertex::new(2, vec![0, 1]).unwrap();
        assert!(
            (cylinder_integral(2, &p, &u).to_f64() - cylinder_integral_f64(2, &p, &u)).abs()
                < 1e-15
        );
        assert!(
            (cylinder_average_f64(2, &p, &u) - 6.0 * cylinder_integral_f64(2, &p, &u)).abs()
                < 1e-14
        );
        assert_eq!(cylinder_average_f64(2, &p, &Vertex::root()), 1.0);
    }
}
