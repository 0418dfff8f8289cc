//! Exact checks on finite groups: the uniform average of `π(g) ⊗ π(g⁻¹)`
//! equals `F/d` for an irreducible representation of dimension `d`, and
//! `F` lies in the span of `π(g) ⊗ π(h)` exactly when `π` is irreducible.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::operator::{
    fit_multiple_of_flip, flip_operator, singular_values, span_membership_residual, tensor_mean,
    Operator, WeightedSamples,
};
use crate::scalar::{AsReal, Real};

/// Group given by its multiplication table, with element 0..N.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates the group axioms exactly.
    pub fn from_table(order: usize, table: Vec<usize>) -> Result<Self> {
        if order == 0 || table.len() != order * order || table.iter().any(|&x| x >= order) {
            return Err(Error::InvalidParameter(
                "malformed multiplication table".into(),
            ));
        }
        let m = |a: usize, b: usize| table[a * order + b];
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| m(e, g) == g && m(g, e) == g))
            .ok_or_else(|| Error::InvalidParameter("no identity element".into()))?;
        let inverse = (0..order)
            .map(|g| {
                (0..order)
                    .find(|&h| m(g, h) == identity && m(h, g) == identity)
                    .ok_or_else(|| Error::InvalidParameter(format!("element {g} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if m(m(a, b), c) != m(a, m(b, c)) {
                        return Err(Error::InvalidParameter("table is not associative".into()));
                    }
                }
            }
        }
        Ok(FiniteGroup {
            order,
            table,
            inverse,
            identity,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }
}

/// Unitary matrix representation of a [`FiniteGroup`].
#[derive(Clone, Debug)]
pub struct MatrixRep<T: Real> {
    name: String,
    group: FiniteGroup,
    matrices: Vec<Operator<T>>,
}

fn rep_tolerance<T: Real>() -> T {
    (1e-12f64)
        .max(T::epsilon().to_f64().unwrap_or(0.0) * 1e3)
        .real()
}

impl<T: Real> MatrixRep<T> {
    /// Checks the homomorphism property and unitarity of every matrix.
    pub fn new(
        name: impl Into<String>,
        group: FiniteGroup,
        matrices: Vec<Operator<T>>,
    ) -> Result<Self> {
        let name = name.into();
        if matrices.len() != group.order() {
            return Err(Error::DimensionMismatch {
                expected: group.order(),
                found: matrices.len(),
            });
        }
        let d = matrices[0].rows();
        let tol = rep_tolerance::<T>();
        for m in &matrices {
            if m.rows() != d || m.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.rows(),
                });
            }
            let dev = m.unitarity_deviation()?;
            if dev > tol {
                return Err(Error::NonUnitary {
                    deviation: dev.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        for a in group.elements() {
            for b in group.elements() {
                let prod = matrices[a].matmul(&matrices[b])?;
                if prod.max_abs_diff(&matrices[group.mul(a, b)]) > tol {
                    return Err(Error::InvalidParameter(format!(
                        "{name}: not a homomorphism at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(MatrixRep {
            name,
            group,
            matrices,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn matrix(&self, g: usize) -> &Operator<T> {
        &self.matrices[g]
    }

    pub fn uniform_measure(&self) -> WeightedSamples<usize, T> {
        WeightedSamples::uniform(self.group.elements().collect(), true)
    }
}

/// Builtin groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupName {
    Cyclic(usize),
    Dihedral(usize),
    Sym3,
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupName::Cyclic(n) => write!(f, "cyclic({n})"),
            GroupName::Dihedral(n) => write!(f, "dihedral({n})"),
            GroupName::Sym3 => write!(f, "sym(3)"),
        }
    }
}

impl FromStr for GroupName {
    type Err = Error;

    /// Accepts `cyclic(4)`, `cyclic:4`, `dihedral(5)`, `sym(3)`, `s3`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "s3" || t == "sym3" {
            return Ok(GroupName::Sym3);
        }
        let (head, arg) = match t.find(['(', ':']) {
            Some(i) => (&t[..i], t[i + 1..].trim_end_matches(')')),
            None => return Err(Error::UnsupportedGroup(s.to_string())),
        };
        let n: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::UnsupportedGroup(s.to_string()))?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "group parameter must be at least 1".into(),
            ));
        }
        match head {
            "cyclic" | "z" => Ok(GroupName::Cyclic(n)),
            "dihedral" | "d" => Ok(GroupName::Dihedral(n)),
            "sym" | "s" if n == 3 => Ok(GroupName::Sym3),
            _ => Err(Error::UnsupportedGroup(s.to_string())),
        }
    }
}

fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(re.real(), im.real())
}

fn root_of_unity<T: Real>(k: usize, n: usize) -> Complex<T> {
    let k = k % n;
    // exact values at the quarter points keep small cases bit-exact
    match (4 * k).checked_rem(n) {
        Some(0) => match 4 * k / n {
            0 => cplx(1.0, 0.0),
            1 => cplx(0.0, 1.0),
            2 => cplx(-1.0, 0.0),
            _ => cplx(0.0, -1.0),
        },
        _ => {
            let t = 2.0 * PI * k as f64 / n as f64;
            cplx(t.cos(), t.sin())
        }
    }
}

/// Builds a builtin group with its standard unitary irreps and regular
/// representation.
///
/// * `cyclic(n)`: the `n` characters `k ↦ ω^{jk}` and the regular
///   representation in its Fourier-diagonal basis (`Z/2` gives
///   `{I, diag(1,−1)}`).
/// * `dihedral(n)`: the one-dimensional characters, the two-dimensional
///   rotation/reflection irreps and the regular permutation representation.
/// * `sym(3)`: trivial, sign, the standard 2-dim real orthogonal irrep and
///   the regular permutation representation.
pub fn builtin_group<T: Real>(name: GroupName) -> Result<(FiniteGroup, Vec<MatrixRep<T>>)> {
    match name {
        GroupName::Cyclic(n) => cyclic(n),
        GroupName::Dihedral(n) => dihedral(n),
        GroupName::Sym3 => sym3(),
    }
}

fn cyclic<T: Real>(n: usize) -> Result<(FiniteGroup, Vec<MatrixRep<T>>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("cyclic(n) needs n >= 1".into()));
    }
    let table = (0..n * n).map(|x| (x / n + x % n) % n).collect();
    let group = FiniteGroup::from_table(n, table)?;
    let mut reps = Vec::new();
    for j in 0..n {
        let mats = (0..n)
            .map(|k| Operator::diagonal(&[root_of_unity::<T>(j * k, n)]))
            .collect();
        reps.push(MatrixRep::new(format!("char({j})"), group.clone(), mats)?);
    }
    let regular = (0..n)
        .map(|k| {
            Operator::diagonal(
                &(0..n)
                    .map(|j| root_of_unity::<T>(j * k, n))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    reps.push(MatrixRep::new("regular", group.clone(), regular)?);
    Ok((group, reps))
}

fn regular_permutation<T: Real>(group: &FiniteGroup) -> Vec<Operator<T>> {
    let n = group.order();
    group
        .elements()
        .map(|g| {
            let mut m = Operator::zeros(n, n);
            for h in 0..n {
                m[(group.mul(g, h), h)] = Complex::one();
            }
            m
        })
        .collect()
}

fn dihedral<T: Real>(n: usize) -> Result<(FiniteGroup, Vec<MatrixRep<T>>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("dihedral(n) needs n >= 1".into()));
    }
    // element e*n + i is r^i s^e
    let order = 2 * n;
    let decode = |x: usize| (x % n, x / n);
    let mut table = vec![0; order * order];
    for a in 0..order {
        for b in 0..order {
            let ((i, ea), (j, eb)) = (decode(a), decode(b));
            let rot = if ea == 0 {
                (i + j) % n
            } else {
                (i + n - j) % n
            };
            table[a * order + b] = ((ea + eb) % 2) * n + rot;
        }
    }
    let group = FiniteGroup::from_table(order, table)?;
    let mut reps = Vec::new();
    let sign = |e: usize| if e == 0 { 1.0 } else { -1.0 };
    let one_dim = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Operator<T>> {
        (0..order)
            .map(|x| {
                let (i, e) = decode(x);
                Operator::diagonal(&[cplx(f(i, e), 0.0)])
            })
            .collect()
    };
    reps.push(MatrixRep::new(
        "trivial",
        group.clone(),
        one_dim(&|_, _| 1.0),
    )?);
    reps.push(MatrixRep::new(
        "sign",
        group.clone(),
        one_dim(&|_, e| sign(e)),
    )?);
    if n.is_multiple_of(2) {
        reps.push(MatrixRep::new(
            "alt-r",
            group.clone(),
            one_dim(&|i, _| sign(i % 2)),
        )?);
        reps.push(MatrixRep::new(
            "alt-rs",
            group.clone(),
            one_dim(&|i, e| sign((i + e) % 2)),
        )?);
    }
    for j in 1..n.div_ceil(2) {
        if 2 * j == n {
            continue;
        }
        let mats = (0..order)
            .map(|x| {
                let (i, e) = decode(x);
                let z = root_of_unity::<T>(i * j, n);
                let (c, s) = (z.re, z.im);
                let refl = if e == 0 { T::one() } else { -T::one() };
                // rot(θ) · diag(1, ±1)
                let rows: [[T; 2]; 2] = [[c, -s * refl], [s, c * refl]];
                Operator::from_fn(2, 2, |a, b| Complex::new(rows[a][b], T::zero()))
            })
            .collect();
        reps.push(MatrixRep::new(format!("rot({j})"), group.clone(), mats)?);
    }
    reps.push(MatrixRep::new(
        "regular",
        group.clone(),
        regular_permutation(&group),
    )?);
    Ok((group, reps))
}

fn sym3<T: Real>() -> Result<(FiniteGroup, Vec<MatrixRep<T>>)> {
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let index = |p: [usize; 3]| perms.iter().position(|&x| x == p).expect("closed");
    let mut table = vec![0; 36];
    for (a, pa) in perms.iter().enumerate() {
        for (b, pb) in perms.iter().enumerate() {
            // (a∘b)(x) = a(b(x))
            table[a * 6 + b] = index([pa[pb[0]], pa[pb[1]], pa[pb[2]]]);
        }
    }
    let group = FiniteGroup::from_table(6, table)?;
    let parity = |p: &[usize; 3]| {
        let inversions = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .filter(|&(i, j)| p[i] > p[j])
            .count();
        if inversions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let trivial = perms
        .iter()
        .map(|_| Operator::diagonal(&[cplx::<T>(1.0, 0.0)]))
        .collect();
    let sign = perms
        .iter()
        .map(|p| Operator::diagonal(&[cplx::<T>(parity(p), 0.0)]))
        .collect();
    // orthonormal basis of the sum-zero plane
    let basis = [
        [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0],
        [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()],
    ];
    let standard = perms
        .iter()
        .map(|p| {
            // permutation matrix P e_x = e_{p(x)}; entry (a,b) = f_a · P f_b
            Operator::from_fn(2, 2, |a, b| {
                let v: f64 = (0..3).map(|x| basis[a][p[x]] * basis[b][x]).sum();
                cplx::<T>(v, 0.0)
            })
        })
        .collect();
    let reps = vec![
        MatrixRep::new("trivial", group.clone(), trivial)?,
        MatrixRep::new("sign", group.clone(), sign)?,
        MatrixRep::new("standard", group.clone(), standard)?,
        MatrixRep::new("regular", group.clone(), regular_permutation(&group))?,
    ];
    Ok((group, reps))
}

/// `(1/N) Σ_g π(g) ⊗ π(g⁻¹)`.
pub fn haar_tensor_mean<T: Real>(rep: &MatrixRep<T>) -> Result<Operator<T>> {
    // sum with unit weights, divide once: exact for small rational results
    let counting = WeightedSamples::new(
        rep.group().elements().map(|g| (g, T::one())).collect(),
        true,
    );
    let sum = tensor_mean(
        |g: &usize| rep.matrix(*g).clone(),
        &counting,
        rep_tolerance::<T>(),
    )?;
    let n: T = rep.group().order().real();
    Ok(sum.scale(Complex::new(T::one() / n, T::zero())))
}

/// Least-squares fit of the Haar tensor mean to `cF`: returns `(c, residual)`.
pub fn haar_flip_fit<T: Real>(rep: &MatrixRep<T>) -> Result<(Complex<T>, T)> {
    fit_multiple_of_flip(&haar_tensor_mean(rep)?)
}

/// Max over basis 4-tuples of
/// `|(1/N) Σ_g ⟨π(g)v,w⟩ conj⟨π(g)v',w'⟩ − (1/d) ⟨v,v'⟩ conj⟨w,w'⟩|`.
pub fn schur_orthogonality_deviation<T: Real>(rep: &MatrixRep<T>) -> T {
    let d = rep.dim();
    let n: T = rep.group().order().real();
    let inv_d = T::one() / d.real();
    let mut worst = T::zero();
    for v in 0..d {
        for w in 0..d {
            for vp in 0..d {
                for wp in 0..d {
                    // ⟨π(g)e_v, e_w⟩ = π(g)[w, v]
                    let sum = rep.group().elements().fold(Complex::<T>::zero(), |acc, g| {
                        let m = rep.matrix(g);
                        acc + m[(w, v)] * m[(wp, vp)].conj()
                    });
                    let avg = sum / n;
                    let target = if v == vp && w == wp { inv_d } else { T::zero() };
                    worst = worst.max((avg - Complex::new(target, T::zero())).norm());
                }
            }
        }
    }
    worst
}

/// Singular values below this count as zero in [`commutant_dimension`].
pub const NULL_SPACE_CUTOFF: f64 = 1e-9;

/// Dimension of `{A : Aπ(g) = π(g)A for all g}`.
pub fn commutant_dimension<T: Real>(rep: &MatrixRep<T>) -> usize {
    let d = rep.dim();
    let n = rep.group().order();
    // row (g, i, j) of (AP − PA)_{ij}; column (a, b) of A_{ab}
    let mut system = Operator::<T>::zeros(n * d * d, d * d);
    for g in rep.group().elements() {
        let p = rep.matrix(g);
        for i in 0..d {
            for j in 0..d {
                let row = g * d * d + i * d + j;
                for k in 0..d {
                    system[(row, i * d + k)] += p[(k, j)];
                    system[(row, k * d + j)] -= p[(i, k)];
                }
            }
        }
    }
    let cutoff: T = NULL_SPACE_CUTOFF.real();
    singular_values(&system)
        .into_iter()
        .filter(|&s| s < cutoff)
        .count()
}

/// Frobenius distance from `F` to `span{π(g) ⊗ π(h)}`.
pub fn flip_membership<T: Real>(rep: &MatrixRep<T>) -> Result<T> {
    let basis: Vec<Operator<T>> = rep
        .group()
        .elements()
        .flat_map(|g| {
            rep.group()
                .elements()
                .map(move |h| rep.matrix(g).kron(rep.matrix(h)))
        })
        .collect();
    span_membership_residual(&basis, &flip_operator(rep.dim())?)
}

/// Every builtin group used by the reports and tests.
pub fn builtin_catalog() -> Vec<GroupName> {
    vec![
        GroupName::Cyclic(2),
        GroupName::Cyclic(3),
        GroupName::Cyclic(4),
        GroupName::Cyclic(5),
        GroupName::Dihedral(4),
        GroupName::Dihedral(5),
        GroupName::Sym3,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reps(name: &str) -> Vec<MatrixRep<f64>> {
        builtin_group::<f64>(name.parse().unwrap()).unwrap().1
    }

    fn rep(name: &str, which: &str) -> MatrixRep<f64> {
        reps(name).into_iter().find(|r| r.name() == which).unwrap()
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "cyclic(4)".parse::<GroupName>().unwrap(),
            GroupName::Cyclic(4)
        );
        assert_eq!(
            "dihedral:5".parse::<GroupName>().unwrap(),
            GroupName::Dihedral(5)
        );
        assert_eq!("sym(3)".parse::<GroupName>().unwrap(), GroupName::Sym3);
        assert!(matches!(
            "sym(4)".parse::<GroupName>(),
            Err(Error::UnsupportedGroup(_))
        ));
        assert!(matches!(
            "quaternion(8)".parse::<GroupName>(),
            Err(Error::UnsupportedGroup(_))
        ));
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(FiniteGroup::from_table(2, vec![0, 0, 0, 0]).is_err());
        assert!(FiniteGroup::from_table(2, vec![0, 1, 1, 1]).is_err());
    }

    #[test]
    fn cyclic4_characters() {
        let r = reps("cyclic(4)");
        assert_eq!(r.len(), 5);
        // char(1)(k) = i^k
        let c1 = &r[1];
        assert_eq!(c1.matrix(1)[(0, 0)], Complex::new(0.0, 1.0));
        assert_eq!(c1.matrix(2)[(0, 0)], Complex::new(-1.0, 0.0));
        assert_eq!(c1.matrix(3)[(0, 0)], Complex::new(0.0, -1.0));
        let (c, _) = haar_flip_fit(c1).unwrap();
        assert_eq!(c, Complex::new(1.0, 0.0));
    }

    #[test]
    fn sym3_standard_is_real_orthogonal() {
        let s = rep("sym(3)", "standard");
        assert_eq!(s.dim(), 2);
        for g in s.group().elements() {
            assert!(s.matrix(g).as_slice().iter().all(|z| z.im == 0.0));
        }
        assert_eq!(s.group().order(), 6);
    }

    #[test]
    fn dihedral4_has_a_two_dim_irrep() {
        let r = rep("dihedral(4)", "rot(1)");
        assert_eq!(r.dim(), 2);
        assert_eq!(commutant_dimension(&r), 1);
    }

    #[test]
    fn haar_mean_examples() {
        let trivial = rep("sym(3)", "trivial");
        assert_eq!(haar_tensor_mean(&trivial).unwrap(), Operator::identity(1));
        let s = rep("sym(3)", "standard");
        let (c, res) = haar_flip_fit(&s).unwrap();
        assert!((c - Complex::new(0.5, 0.0)).norm() < 1e-12 && res <= 1e-12);
        let z2 = rep("cyclic(2)", "regular");
        let m = haar_tensor_mean(&z2).unwrap();
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        assert_eq!(m, Operator::diagonal(&[one, zero, zero, one]));
        let (_, res) = haar_flip_fit(&z2).unwrap();
        assert!((res - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn schur_deviation_examples() {
        assert!(schur_orthogonality_deviation(&rep("sym(3)", "standard")) <= 1e-12);
        for r in reps("cyclic(5)").iter().filter(|r| r.dim() == 1) {
            assert!(schur_orthogonality_deviation(r) <= 1e-15);
        }
        assert!(schur_orthogonality_deviation(&rep("cyclic(2)", "regular")) >= 0.25);
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant_dimension(&rep("sym(3)", "standard")), 1);
        assert_eq!(commutant_dimension(&rep("cyclic(2)", "regular")), 2);
        assert_eq!(commutant_dimension(&rep("sym(3)", "trivial")), 1);
        // regular rep of S3: 1 + 1 + 2² = 6
        assert_eq!(commutant_dimension(&rep("sym(3)", "regular")), 6);
    }

    #[test]
    fn flip_membership_examples() {
        assert!(flip_membership(&rep("sym(3)", "standard")).unwrap() <= 1e-10);
        assert!(flip_membership(&rep("cyclic(2)", "regular")).unwrap() > 0.1);
        for r in reps("cyclic(5)").iter().filter(|r| r.dim() == 1) {
            assert!(flip_membership(r).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn irreducible_builtins_satisfy_all_identities() {
        for name in builtin_catalog() {
            for r in builtin_group::<f64>(name).unwrap().1 {
                let irreducible = commutant_dimension(&r) == 1;
                let member = flip_membership(&r).unwrap();
                if irreducible {
                    let (c, res) = haar_flip_fit(&r).unwrap();
                    assert!(
                        (c.re - 1.0 / r.dim() as f64).abs() <= 1e-12,
                        "{name} {}",
                        r.name()
                    );
                    assert!(res <= 1e-12);
                    assert!(schur_orthogonality_deviation(&r) <= 1e-12);
                    assert!(member <= 1e-10, "{name} {}: {member}", r.name());
                } else {
                    assert!(member >= 0.1, "{name} {}: {member}", r.name());
                }
            }
        }
    }

    #[test]
    fn reducible_regular_reps() {
        for n in [2, 3] {
            let r = rep(&format!("cyclic({n})"), "regular");
            assert!(commutant_dimension(&r) >= 2);
            assert!(flip_membership(&r).unwrap() >= 0.1);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let (_, reps) = builtin_group::<f32>(GroupName::Sym3).unwrap();
        let s = reps.iter().find(|r| r.name() == "standard").unwrap();
        let (c, res) = haar_flip_fit(s).unwrap();
        assert!((c.re - 0.5).abs() < 1e-6 && res < 1e-5);
        assert_eq!(commutant_dimension(s), 1);
    }
}
