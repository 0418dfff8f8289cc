//! Subcommand implementations. Each returns the rendered output and whether
//! every assertion made during the run held.

use fliplab::finite::{
    builtin_catalog, builtin_group, commutant_dimension, flip_membership, haar_flip_fit,
    haar_tensor_mean, schur_orthogonality_deviation, GroupName,
};
use fliplab::free::{ball_schur_free, infnorm_witness, sphere_count, MAX_BALL_WORDS};
use fliplab::operator::spectral_norm;
use fliplab::tree::exact_k1::exact_ball_schur_k1;
use fliplab::tree::harish::ball_xi2_termwise;
use fliplab::tree::{
    ball_schur, ball_xi2, cocycle_average_check, compressed_mean_norm, cubic_constant,
    folner_ratio, xi_closed, xi_oracle, CocycleRow, Vertex,
};
use fliplab::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::config::{ExperimentConfig, Preset};
use crate::table::{fmt_float, ResultRow, Table};
use crate::CliError;

/// Rendered output of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub body: String,
    pub passed: bool,
}

fn ratio_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn header(c: &ExperimentConfig) -> String {
    format!(
        "fliplab {} q={} rank={} depth={} nmax={} n0={} samples={} seed={:#x} norm={} vectors={}",
        c.experiment,
        c.q,
        c.rank,
        c.depth,
        c.nmax,
        c.n0,
        c.samples,
        c.seed,
        c.normalization,
        c.vectors
    )
}

/// Harish-Chandra values, ball masses and Folner ratios.
pub fn xi(c: &ExperimentConfig) -> Result<Output, CliError> {
    let q = c.q;
    let params = format!("q={q};n0={}", c.n0);
    let mut t = Table::default();
    t.comment(header(c));
    let cubic = cubic_constant(q);
    t.comment(format!(
        "ball_xi2(n) ~ C n^3 with C = (q-1)^2/(3q(q+1)) = {cubic} = {}",
        fmt_float(ratio_f64(&cubic))
    ));
    let mut passed = true;
    let mut rows = Vec::new();
    for m in 0..=c.nmax {
        let closed = xi_closed(q, m);
        let oracle = xi_oracle(q, m);
        let (cs, os) = (closed.to_string(), oracle.to_string());
        passed &= cs == os;
        let ball = ball_xi2(q, m);
        let termwise = ball_xi2_termwise(q, m);
        passed &= ball == termwise;
        let mut line = format!("m={m} xi_closed={cs} xi_oracle={os} ball_xi2={ball}");
        rows.push(ResultRow::exact(
            "xi",
            &params,
            m,
            closed.to_f64(),
            oracle.to_f64(),
        ));
        rows.push(ResultRow::exact(
            "ball_xi2",
            &params,
            m,
            ratio_f64(&ball),
            ratio_f64(&termwise),
        ));
        if m > c.n0 {
            let f = folner_ratio(q, m, c.n0)?;
            line.push_str(&format!(" folner_ratio={f}"));
            rows.push(ResultRow::exact(
                "folner_ratio",
                &params,
                m,
                ratio_f64(&f),
                0.0,
            ));
        }
        t.comment(line);
    }
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Output {
        body: t.to_csv(),
        passed,
    })
}

/// Haar-average diagnostics for one finite-group representation.
#[derive(Clone, Debug, PartialEq)]
pub struct RepReport {
    pub group: GroupName,
    pub rep: String,
    pub dim: usize,
    pub fit_constant: Complex64,
    pub fit_residual: f64,
    pub schur_deviation: f64,
    pub commutant_dim: usize,
    pub flip_residual: f64,
}

pub const COMPACT_TOL: f64 = 1e-12;
pub const MEMBERSHIP_TOL: f64 = 1e-10;
pub const MEMBERSHIP_GAP: f64 = 0.1;

impl RepReport {
    pub fn irreducible(&self) -> bool {
        self.commutant_dim == 1
    }

    /// Irreducible: mean is `F/d` and `F` lies in the span. Reducible: `F`
    /// is bounded away from the span.
    pub fn passed(&self) -> bool {
        if self.irreducible() {
            let inv_d = 1.0 / self.dim as f64;
            (self.fit_constant - Complex64::new(inv_d, 0.0)).norm() <= COMPACT_TOL
                && self.fit_residual <= COMPACT_TOL
                && self.schur_deviation <= COMPACT_TOL
                && self.flip_residual <= MEMBERSHIP_TOL
        } else {
            self.flip_residual >= MEMBERSHIP_GAP
        }
    }
}

pub fn analyze_rep(group: GroupName, rep: &fliplab::MatrixRep) -> Result<RepReport, CliError> {
    let (fit_constant, fit_residual) = haar_flip_fit(rep)?;
    Ok(RepReport {
        group,
        rep: rep.name().to_string(),
        dim: rep.dim(),
        fit_constant,
        fit_residual,
        schur_deviation: schur_orthogonality_deviation(rep),
        commutant_dim: commutant_dimension(rep),
        flip_residual: flip_membership(rep)?,
    })
}

pub fn analyze_groups(groups: &[GroupName]) -> Result<Vec<RepReport>, CliError> {
    let mut out = Vec::new();
    for &g in groups {
        let (_, reps) = builtin_group::<f64>(g)?;
        for rep in &reps {
            out.push(analyze_rep(g, rep)?);
        }
    }
    Ok(out)
}

fn groups_of(c: &ExperimentConfig) -> Vec<GroupName> {
    c.group.map(|g| vec![g]).unwrap_or_else(builtin_catalog)
}

/// Finite groups: flip fit, Schur orthogonality and flip membership.
pub fn compact(c: &ExperimentConfig) -> Result<Output, CliError> {
    let reports = analyze_groups(&groups_of(c))?;
    let mut t = Table::default();
    t.comment(header(c));
    for r in &reports {
        t.comment(format!(
            "{} {} d={} c={}{:+}i fit_residual={:.3e} schur_deviation={:.3e} commutant={} flip_residual={:.3e} {} {}",
            r.group,
            r.rep,
            r.dim,
            r.fit_constant.re,
            r.fit_constant.im,
            r.fit_residual,
            r.schur_deviation,
            r.commutant_dim,
            r.flip_residual,
            if r.irreducible() { "irreducible" } else { "reducible" },
            if r.passed() { "ok" } else { "FAIL" }
        ));
        let p = |quantity: &str| {
            format!(
                "group={};rep={};quantity={quantity};commutant={}",
                r.group, r.rep, r.commutant_dim
            )
        };
        let inv_d = 1.0 / r.dim as f64;
        let fit = ResultRow::complex(
            "compact",
            &p("fit_constant"),
            r.dim,
            r.fit_constant,
            0.0,
            Complex64::new(inv_d, 0.0),
        );
        t.push(fit);
        t.push(ResultRow::exact(
            "compact",
            &p("fit_residual"),
            r.dim,
            r.fit_residual,
            0.0,
        ));
        t.push(ResultRow::exact(
            "compact",
            &p("schur_deviation"),
            r.dim,
            r.schur_deviation,
            0.0,
        ));
        t.push(ResultRow::exact(
            "compact",
            &p("flip_residual"),
            r.dim,
            r.flip_residual,
            0.0,
        ));
    }
    Ok(Output {
        body: t.to_csv(),
        passed: reports.iter().all(RepReport::passed),
    })
}

fn tree_params(c: &ExperimentConfig) -> String {
    format!(
        "q={};k={};vectors={};norm={};samples={};seed={:#x}",
        c.q, c.depth, c.vectors, c.normalization, c.samples, c.seed
    )
}

/// Ball estimates of the Schur pairing on the tree.
pub fn tree_converge(c: &ExperimentConfig) -> Result<Output, CliError> {
    let q = c.q;
    let vectors = c.schur_vectors()?;
    let rows = ball_schur(
        q,
        c.nmax,
        &vectors,
        c.samples,
        c.seed,
        c.normalization.into(),
    )?;
    let params = tree_params(c);
    let mut t = Table::default();
    t.comment(header(c));
    let cubic = cubic_constant(q);
    t.comment(format!(
        "ball_xi2(n) ~ C n^3 with C = (q-1)^2/(3q(q+1)) = {cubic} = {}",
        fmt_float(ratio_f64(&cubic))
    ));
    t.comment(format!(
        "target <v,v'>conj<w,w'> = {}",
        fmt_float(vectors.target().re)
    ));
    let mut passed = rows
        .iter()
        .all(|r| r.estimate.re.is_finite() && r.stderr.is_finite());
    if c.vectors == Preset::Radial && c.normalization == crate::config::NormChoice::Xi2 {
        passed &= rows
            .iter()
            .all(|r| r.exact && r.estimate == Complex64::new(1.0, 0.0));
    }
    for r in &rows {
        t.push(ResultRow::complex(
            "tree_converge",
            &params,
            r.n,
            r.estimate,
            r.stderr,
            r.target,
        ));
    }
    if c.depth == 1 && c.vectors != Preset::Radial {
        let exact = exact_ball_schur_k1(q, c.nmax, &vectors, c.normalization.into())?;
        let params = format!(
            "q={};k=1;vectors={};norm={}",
            c.q, c.vectors, c.normalization
        );
        for r in &exact {
            t.push(ResultRow::complex(
                "tree_converge_exact",
                &params,
                r.n,
                r.estimate,
                0.0,
                r.target,
            ));
        }
    }
    Ok(Output {
        body: t.to_csv(),
        passed,
    })
}

/// Largest radius `≤ cap` whose ball in `F_r` fits the enumeration budget.
pub fn max_free_radius(r: u32, cap: usize) -> usize {
    let mut total = 0u64;
    for n in 0..=cap {
        total = match sphere_count(r, n).and_then(|s| total.checked_add(s)) {
            Some(t) if t <= MAX_BALL_WORDS => t,
            _ => return n.saturating_sub(1),
        };
    }
    cap
}

fn witness_table(
    t: &mut Table,
    r: u32,
    n_max: usize,
    experiment: &str,
) -> Result<(Vec<f64>, bool), CliError> {
    let mut values = Vec::new();
    let mut monotone = true;
    for n in 0..=n_max {
        let w = infnorm_witness(r, n)?;
        monotone &= w.trace.windows(2).all(|p| p[1].value >= p[0].value);
        let last = w.trace.last().expect("nonempty trace");
        t.comment(format!(
            "witness n={n} cells=C[{}]xC[{}] exact={}",
            last.x, last.y, w.exact
        ));
        let params = format!("r={r};norm=xi2;depth={}", n.max(1));
        t.push(ResultRow::exact(experiment, &params, n, w.value, f64::NAN));
        values.push(w.value);
    }
    Ok((values, monotone))
}

fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|p| p[1] > p[0])
}

/// Exact free-group ball sums and the sup-norm witness.
pub fn free(c: &ExperimentConfig) -> Result<Output, CliError> {
    let r = c.rank;
    let vectors = c.schur_vectors()?;
    let rows = ball_schur_free(r, c.nmax, &vectors)?;
    let mut t = Table::default();
    t.comment(header(c));
    t.comment("normalization: sum over |g| <= n of Xi(|g|)^2 (ball, not annulus)");
    let params = format!("r={r};k={};vectors={};norm=xi2", c.depth, c.vectors);
    let mut passed = true;
    for row in &rows {
        if let Some(ratio) = &row.radial_ratio {
            t.comment(format!("n={} radial ratio={ratio}", row.n));
            if c.vectors == Preset::Radial {
                passed &= ratio.is_one() && row.value == Complex64::new(1.0, 0.0);
            }
        }
        t.push(ResultRow::complex(
            "free_schur",
            &params,
            row.n,
            row.value,
            0.0,
            row.target,
        ));
    }
    let (_, monotone) = witness_table(&mut t, r, c.nmax, "free_witness")?;
    passed &= monotone;
    Ok(Output {
        body: t.to_csv(),
        passed,
    })
}

/// Uniform-boundedness evidence for the three models.
pub fn props(c: &ExperimentConfig) -> Result<Output, CliError> {
    let mut t = Table::default();
    t.comment(header(c));

    let mut tree_ok = true;
    let mut tree_max: f64 = 0.0;
    for k in 0..=c.depth {
        let e = compressed_mean_norm(c.q, k, c.nmax, c.samples, c.seed)?;
        tree_ok &= e.value <= 1.0 + 5.0 * e.stderr && (k > 0 || e.value == 1.0);
        tree_max = tree_max.max(e.value);
        let params = format!("q={};k={k};samples={};seed={:#x}", c.q, c.samples, c.seed);
        t.push(ResultRow::new(
            "props_tree_norm",
            &params,
            c.nmax,
            e.value,
            e.stderr,
            1.0,
        ));
    }
    t.comment(format!(
        "tree: {} (largest compressed norm {} at n={})",
        if tree_ok { "bounded" } else { "unbounded" },
        fmt_float(tree_max),
        c.nmax
    ));

    let mut finite_ok = true;
    for g in groups_of(c) {
        let (_, reps) = builtin_group::<f64>(g)?;
        for rep in &reps {
            let norm = spectral_norm(&haar_tensor_mean(rep)?, 1e-12)?;
            finite_ok &= norm <= 1.0 + 1e-9;
            let params = format!("group={g};rep={}", rep.name());
            t.push(ResultRow::exact(
                "props_finite_norm",
                &params,
                rep.dim(),
                norm,
                1.0,
            ));
        }
    }
    t.comment(format!(
        "finite: {}",
        if finite_ok { "bounded" } else { "unbounded" }
    ));

    let n_free = max_free_radius(c.rank, c.nmax.min(10));
    let (w, monotone) = witness_table(&mut t, c.rank, n_free, "props_free_witness")?;
    let growing = strictly_increasing(&w[1..]) && monotone;
    t.comment(format!(
        "free: {} (sup-norm lower bound {} at n=1 to {} at n={n_free})",
        if growing { "unbounded" } else { "inconclusive" },
        fmt_float(w.get(1).copied().unwrap_or(1.0)),
        fmt_float(*w.last().expect("n=0 present"))
    ));
    Ok(Output {
        body: t.to_csv(),
        passed: tree_ok && finite_ok && growing,
    })
}

/// Four product cells at increasing depth used by the cocycle check.
pub fn cocycle_pairs(q: u32) -> Vec<(Vertex, Vertex)> {
    let v = |w: &[u32]| Vertex::new(q, w.to_vec()).expect("valid for q >= 2");
    vec![
        (v(&[0]), v(&[0])),
        (v(&[1, 0]), v(&[2])),
        (v(&[0, 1, 1]), v(&[1, 1])),
        (v(&[2, 0, 0]), v(&[0, 1])),
    ]
}

/// Cell-averaged cocycle products over [`cocycle_pairs`].
pub fn cocycle(
    q: u32,
    m: usize,
    samples: u64,
    seed: u64,
) -> Result<(Table, Vec<CocycleRow>), CliError> {
    let rows = cocycle_average_check(q, m, &cocycle_pairs(q), samples, seed)?;
    let mut t = Table::default();
    let target = xi_closed(q, m).square() * fliplab::tree::sphere_volume_scaled(q, m);
    t.comment(format!(
        "cocycle q={q} m={m} samples={samples} seed={seed:#x} target vol(S_m)*Xi(m)^2 = {target}"
    ));
    for r in &rows {
        let params = format!(
            "q={q};cells=C[{}]xC[{}];samples={samples};seed={seed:#x}",
            r.a, r.b
        );
        t.push(ResultRow::new(
            "cocycle", &params, m, r.estimate, r.stderr, r.target,
        ));
    }
    Ok((t, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn xi_rows_show_exact_values() {
        let mut c = ExperimentConfig::defaults(Experiment::Xi);
        c.nmax = 3;
        let out = xi(&c).unwrap();
        assert!(out.passed);
        assert!(out
            .body
            .contains("m=2 xi_closed=5/6 xi_oracle=5/6 ball_xi2=47/6"));
        assert!(out.body.contains("m=0 xi_closed=1 xi_oracle=1 ball_xi2=1"));
        assert!(out.body.contains("= 1/18 ="));
    }

    #[test]
    fn compact_catalog_passes() {
        let c = ExperimentConfig::defaults(Experiment::Compact);
        let out = compact(&c).unwrap();
        assert!(out.passed, "{}", out.body);
        let reports = analyze_groups(&[GroupName::Sym3]).unwrap();
        let std = reports.iter().find(|r| r.rep == "standard").unwrap();
        assert!((std.fit_constant.re - 0.5).abs() <= COMPACT_TOL);
    }

    #[test]
    fn radial_tree_rows_are_one() {
        let mut c = ExperimentConfig::defaults(Experiment::TreeConverge);
        c.vectors = Preset::Radial;
        c.nmax = 6;
        let out = tree_converge(&c).unwrap();
        assert!(out.passed);
        assert!(out.body.contains("1/18"));
        for line in out.body.lines().filter(|l| l.starts_with("tree_converge,")) {
            assert_eq!(line.split(',').nth(3).unwrap(), "1.0000000000000000e0");
        }
    }

    #[test]
    fn free_witness_starts_at_one() {
        let mut c = ExperimentConfig::defaults(Experiment::Free);
        c.nmax = 3;
        let out = free(&c).unwrap();
        assert!(out.passed);
        assert!(out
            .body
            .contains("free_witness,r=2;norm=xi2;depth=1,0,1.0000000000000000e0"));
    }

    #[test]
    fn budget_radius() {
        assert_eq!(max_free_radius(2, 20), 12);
        assert_eq!(max_free_radius(2, 5), 5);
        assert_eq!(max_free_radius(3, 10), 8);
    }
}
