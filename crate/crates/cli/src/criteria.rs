//! Acceptance checks 1 to 10, shared by `fliplab report` and the acceptance
//! test target.

use std::time::{Duration, Instant};

use fliplab::finite::{builtin_catalog, builtin_group, GroupName};
use fliplab::free::{ball_schur_free, infnorm_witness};
use fliplab::tree::exact_k1::exact_ball_schur_k1;
use fliplab::tree::{
    ball_schur, ball_xi2, compressed_mean_norm, folner_ratio, xi_closed, xi_oracle, BallRow,
    CylinderFunction, Normalization, SchurVectors,
};
use fliplab::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::commands::{self, analyze_groups, analyze_rep, Output};
use crate::config::{Experiment, ExperimentConfig, Preset, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 10] = [
    "harish-chandra exactness",
    "cubic growth",
    "compact case",
    "flip membership iff irreducible",
    "folner condition",
    "tree convergence to the flip",
    "uniform boundedness",
    "cocycle-average constancy",
    "free group",
    "determinism",
];

type Check = Result<(bool, String), CliError>;

fn timed(id: u8, f: impl FnOnce() -> Check) -> Criterion {
    let start = Instant::now();
    let result = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    Criterion {
        id,
        name: NAMES[id as usize - 1],
        passed,
        detail,
        seconds,
    }
}

fn within(start: Instant, limit: Duration) -> bool {
    start.elapsed() <= limit
}

fn f64_of(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn xi_exactness() -> Check {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for q in [2, 3, 5] {
        for m in 0..=30 {
            if xi_closed(q, m) != xi_oracle(q, m) {
                mismatches.push(format!("q={q} m={m}"));
            }
        }
    }
    let fast = within(start, Duration::from_secs(1));
    Ok((
        mismatches.is_empty() && fast,
        format!(
            "93 exact comparisons, mismatches [{}], under 1 s: {fast}",
            mismatches.join(" ")
        ),
    ))
}

pub fn cubic_growth() -> Check {
    let start = Instant::now();
    let scaled = ball_xi2(2, 10_000) * BigRational::new(18.into(), 1_000_000_000_000u64.into());
    let x = f64_of(&scaled);
    let fast = within(start, Duration::from_secs(1));
    Ok((
        (0.99..=1.01).contains(&x) && fast,
        format!("ball_xi2(2, 10^4) * 18 / 10^12 = {x:.6}, under 1 s: {fast}"),
    ))
}

pub fn compact_case() -> Check {
    let (_, reps) = builtin_group::<f64>(GroupName::Sym3)?;
    let std = reps
        .iter()
        .find(|r| r.name() == "standard")
        .expect("builtin");
    let s = analyze_rep(GroupName::Sym3, std)?;
    let (_, reps) = builtin_group::<f64>(GroupName::Cyclic(2))?;
    let reg = reps
        .iter()
        .find(|r| r.name() == "regular")
        .expect("builtin");
    let z = analyze_rep(GroupName::Cyclic(2), reg)?;
    let tol = commands::COMPACT_TOL;
    let ok = (s.fit_constant - Complex64::new(0.5, 0.0)).norm() <= tol
        && s.fit_residual <= tol
        && s.schur_deviation <= tol
        && (z.fit_residual - 1.0).abs() <= tol;
    Ok((
        ok,
        format!(
            "sym(3) standard: c={:.15} residual={:.2e} schur deviation={:.2e} (16 tuples); cyclic(2) regular residual={:.15}",
            s.fit_constant.re, s.fit_residual, s.schur_deviation, z.fit_residual
        ),
    ))
}

pub fn membership() -> Check {
    let reports = analyze_groups(&builtin_catalog())?;
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| {
            if r.irreducible() {
                r.flip_residual > commands::MEMBERSHIP_TOL
            } else {
                r.flip_residual < commands::MEMBERSHIP_GAP
            }
        })
        .map(|r| format!("{} {}", r.group, r.rep))
        .collect();
    let irreducible = reports.iter().filter(|r| r.irreducible()).count();
    let worst_in = reports
        .iter()
        .filter(|r| r.irreducible())
        .map(|r| r.flip_residual)
        .fold(0.0, f64::max);
    let best_out = reports
        .iter()
        .filter(|r| !r.irreducible())
        .map(|r| r.flip_residual)
        .fold(f64::INFINITY, f64::min);
    Ok((
        bad.is_empty() && reports.len() >= 6,
        format!(
            "{} reps ({irreducible} irreducible): max residual irreducible {worst_in:.2e}, min residual reducible {best_out:.3}, violations [{}]",
            reports.len(),
            bad.join(", ")
        ),
    ))
}

pub fn folner() -> Check {
    let start = Instant::now();
    let ns = [10, 20, 40, 80, 160];
    let values = ns
        .iter()
        .map(|&n| folner_ratio(2, n, 1))
        .collect::<fliplab::Result<Vec<_>>>()?;
    let decreasing = values.windows(2).all(|p| p[1] < p[0]);
    let last = f64_of(values.last().expect("five radii"));
    let fast = within(start, Duration::from_secs(1));
    let shown: Vec<String> = ns
        .iter()
        .zip(&values)
        .map(|(n, v)| format!("{n}:{:.5}", f64_of(v)))
        .collect();
    Ok((
        decreasing && last < 0.02 && fast,
        format!(
            "folner_ratio(2, n, 1) = [{}], decreasing: {decreasing}, value at 160 below 0.02: {}",
            shown.join(" "),
            last < 0.02
        ),
    ))
}

fn indicator_vectors(q: u32) -> Result<(SchurVectors, SchurVectors), CliError> {
    let e = |c| CylinderFunction::normalized_indicator(q, 1, c);
    Ok((
        SchurVectors::diagonal(e(0)?),
        SchurVectors::new(e(0)?, e(0)?, e(1)?, e(1)?)?,
    ))
}

pub fn tree_convergence() -> Check {
    let (q, n, samples, seed) = (2, 24, DEFAULT_SAMPLES, DEFAULT_SEED);
    let limit = Duration::from_secs(600);
    let start = Instant::now();
    let radial = ball_schur(
        q,
        n,
        &SchurVectors::diagonal(CylinderFunction::one(q)),
        samples,
        seed,
        Normalization::Xi2,
    )?;
    let a = radial
        .iter()
        .all(|r| r.exact && r.estimate == Complex64::new(1.0, 0.0));
    let (diag, orth) = indicator_vectors(q)?;
    let d = ball_schur(q, n, &diag, samples, seed, Normalization::Xi2)?;
    let dev = |r: &BallRow| (r.estimate - Complex64::new(1.0, 0.0)).norm();
    let (dev8, dev24, se24) = (dev(&d[8]), dev(&d[24]), d[24].stderr);
    let b = dev24 < dev8 && dev24 <= 0.15 + 3.0 * se24;
    let o = ball_schur(q, n, &orth, samples, seed, Normalization::Xi2)?;
    let (e24, so24) = (o[24].estimate.norm(), o[24].stderr);
    let c = e24 <= 0.1 + 3.0 * so24;
    let exact24 = exact_ball_schur_k1(q, n, &diag, Normalization::Xi2)?[24]
        .estimate
        .re;
    let fast = within(start, limit);
    Ok((
        a && b && c && fast,
        format!(
            "(a) radial exactly 1 for n<=24: {a}; (b) |est-1| n=8 {dev8:.4}, n=24 {dev24:.4} \
             (stderr {se24:.4}, bound {:.4}, exact k=1 value at 24 is {exact24:.4}): {b}; \
             (c) |est(24)| = {e24:.5} (stderr {so24:.5}): {c}; under 10 min: {fast}",
            0.15 + 3.0 * se24
        ),
    ))
}

pub fn uniform_boundedness() -> Check {
    let (q, n, samples, seed) = (2, 12, DEFAULT_SAMPLES, DEFAULT_SEED);
    let mut ok = true;
    let mut detail = Vec::new();
    for n0 in [0, 1, 4, n] {
        let e = compressed_mean_norm(q, 0, n0, samples, seed)?;
        ok &= e.value == 1.0;
    }
    detail.push("k=0 norm exactly 1 for n in {0,1,4,12}".to_string());
    let mut values = vec![1.0];
    for k in 1..=2 {
        let e = compressed_mean_norm(q, k, n, samples, seed)?;
        let bound = 1.0 + 5.0 * e.stderr;
        ok &= e.value <= bound;
        detail.push(format!("k={k} norm {:.6} (bound {bound:.6})", e.value));
        values.push(e.value);
    }
    let nondecreasing = values.windows(2).all(|p| p[1] >= p[0]);
    ok &= nondecreasing;
    detail.push(format!("nondecreasing in k: {nondecreasing}"));
    Ok((ok, detail.join("; ")))
}

pub fn cocycle_constancy() -> Check {
    let (q, m) = (2, 3);
    let (_, rows) = commands::cocycle(q, m, DEFAULT_SAMPLES, DEFAULT_SEED)?;
    let target = f64_of(
        &(xi_closed(q, m).square().to_ratio().expect("even")
            * BigRational::from_integer(12.into())),
    );
    let mut ok = rows.len() == 4;
    for (i, a) in rows.iter().enumerate() {
        ok &= (a.estimate - target).abs() <= 4.0 * a.stderr;
        for b in &rows[i + 1..] {
            ok &= (a.estimate - b.estimate).abs() <= 6.0 * a.stderr.max(b.stderr);
        }
    }
    let shown: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.4}+-{:.4}", r.estimate, r.stderr))
        .collect();
    Ok((
        ok,
        format!("estimates [{}] vs 12 Xi(3)^2 = {target}", shown.join(", ")),
    ))
}

pub fn free_group() -> Check {
    let start = Instant::now();
    let one = SchurVectors::diagonal(CylinderFunction::one(3));
    let rows = ball_schur_free(2, 10, &one)?;
    let radial = rows.iter().all(|r| {
        r.value == Complex64::new(1.0, 0.0) && r.radial_ratio.as_ref().is_some_and(|x| x.is_one())
    });
    let ws = [2, 4, 6, 8, 10]
        .iter()
        .map(|&n| infnorm_witness(2, n).map(|w| w.exact))
        .collect::<fliplab::Result<Vec<_>>>()?;
    let increasing = ws.windows(2).all(|p| p[1] > p[0]);
    let growth = f64_of(&(&ws[4] / &ws[0]));
    let fast = within(start, Duration::from_secs(300));
    let shown: Vec<String> = ws.iter().map(|w| format!("{:.4}", f64_of(w))).collect();
    Ok((
        radial && increasing && growth >= 2.0 && fast,
        format!(
            "radial column exactly 1 for n<=10: {radial}; witness at n=2..10 step 2 [{}] strictly increasing: {increasing}, ratio {growth:.2}",
            shown.join(" ")
        ),
    ))
}

fn mc_outputs() -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for preset in [Preset::Radial, Preset::Diagonal, Preset::Orthogonal] {
        let mut c = ExperimentConfig::defaults(Experiment::TreeConverge);
        c.nmax = 8;
        c.samples = 2000;
        c.vectors = preset;
        out.push(commands::tree_converge(&c)?.body);
    }
    let mut p = ExperimentConfig::defaults(Experiment::Props);
    p.nmax = 6;
    p.samples = 500;
    p.group = Some(GroupName::Cyclic(2));
    let Output { body, .. } = commands::props(&p)?;
    out.push(body);
    out.push(commands::cocycle(2, 3, 4000, DEFAULT_SEED)?.0.to_csv());
    Ok(out)
}

pub fn determinism() -> Check {
    let run = |threads: usize| -> Result<Vec<String>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(mc_outputs)
    };
    let one = run(1)?;
    let four = run(4)?;
    let again = run(4)?;
    let same = one == four && four == again;
    let bytes: usize = one.iter().map(String::len).sum();
    Ok((
        same,
        format!(
            "{} CSV outputs ({bytes} bytes) byte-identical across 1 and 4 threads and repeated runs: {same}",
            one.len()
        ),
    ))
}

pub fn run(id: u8) -> Criterion {
    let f: fn() -> Check = match id {
        1 => xi_exactness,
        2 => cubic_growth,
        3 => compact_case,
        4 => membership,
        5 => folner,
        6 => tree_convergence,
        7 => uniform_boundedness,
        8 => cocycle_constancy,
        9 => free_group,
        10 => determinism,
        _ => panic!("criteria are numbered 1 to 10"),
    };
    timed(id, f)
}

pub fn run_all() -> Vec<Criterion> {
    (1..=10).map(run).collect()
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub passed: bool,
    pub criteria: &'a [Criterion],
}

pub fn summary_json(criteria: &[Criterion]) -> String {
    let s = Summary {
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    serde_json::to_string_pretty(&s).expect("serializable") + "\n"
}
