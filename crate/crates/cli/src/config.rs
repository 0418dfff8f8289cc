//! Experiment configuration: defaults, JSON config files and flag overrides.
//!
//! Precedence is flag > config file > default. Defaults:
//!
//! | key             | default                                          |
//! |-----------------|--------------------------------------------------|
//! | `q`             | 2                                                |
//! | `rank`          | 2                                                |
//! | `depth`         | 1 (`props`: 2)                                   |
//! | `nmax`          | `xi` 10, `tree_converge` 24, `free` 10, `props` 12 |
//! | `n0`            | 1                                                |
//! | `samples`       | 20000 per sphere                                 |
//! | `seed`          | `0xF11B`                                         |
//! | `normalization` | `xi2`                                            |
//! | `vectors`       | `orthogonal`                                     |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fliplab::finite::GroupName;
use fliplab::free::{sphere_count, FreeGroupParams, MAX_BALL_WORDS};
use fliplab::tree::{CylinderFunction, Normalization, SchurVectors, TreeParams};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 0xF11B;
pub const DEFAULT_SAMPLES: u64 = 20_000;
/// Cap on `(nmax + 1) · samples` for Monte Carlo runs.
pub const MAX_SAMPLE_BUDGET: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Xi,
    Compact,
    TreeConverge,
    Free,
    Props,
    Report,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::Xi => "xi",
            Experiment::Compact => "compact",
            Experiment::TreeConverge => "tree_converge",
            Experiment::Free => "free",
            Experiment::Props => "props",
            Experiment::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    Xi2,
    Poly,
}

impl From<NormChoice> for Normalization {
    fn from(n: NormChoice) -> Self {
        match n {
            NormChoice::Xi2 => Normalization::Xi2,
            NormChoice::Poly => Normalization::Poly,
        }
    }
}

impl fmt::Display for NormChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormChoice::Xi2 => "xi2",
            NormChoice::Poly => "poly",
        })
    }
}

/// Vector 4-tuples `(v, w, v', w')` used by the convergence experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// All four vectors equal to `𝟙`.
    Radial,
    /// All four vectors equal to the normalized indicator of the first cell.
    Diagonal,
    /// `v = w` on the first cell, `v' = w'` on the second.
    Orthogonal,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Radial => "radial",
            Preset::Diagonal => "diagonal",
            Preset::Orthogonal => "orthogonal",
        })
    }
}

impl Preset {
    pub fn vectors(self, q: u32, depth: usize) -> Result<SchurVectors, CliError> {
        let e = |c| CylinderFunction::normalized_indicator(q, depth, c);
        Ok(match self {
            Preset::Radial => SchurVectors::diagonal(CylinderFunction::one(q)),
            Preset::Diagonal => SchurVectors::diagonal(e(0)?),
            Preset::Orthogonal => SchurVectors::new(e(0)?, e(0)?, e(1)?, e(1)?)?,
        })
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|_| format!("invalid seed '{s}'"))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Number(u64),
    Text(String),
}

/// Contents of a `--config` JSON file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub q: Option<u32>,
    pub rank: Option<u32>,
    pub depth: Option<usize>,
    pub nmax: Option<usize>,
    pub n0: Option<usize>,
    pub samples: Option<u64>,
    seed: Option<SeedValue>,
    pub normalization: Option<NormChoice>,
    pub vectors: Option<Preset>,
    pub group: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    fn seed(&self) -> Result<Option<u64>, CliError> {
        match &self.seed {
            None => Ok(None),
            Some(SeedValue::Number(n)) => Ok(Some(*n)),
            Some(SeedValue::Text(s)) => parse_seed(s).map(Some).map_err(CliError::Config),
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// Tree branching parameter (the tree is (q+1)-regular)
    #[arg(long, global = true)]
    pub q: Option<u32>,
    /// Free group rank
    #[arg(long, global = true)]
    pub rank: Option<u32>,
    /// Cylinder depth of the test vectors / compression depth
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Largest radius
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Inner radius of the annulus in Folner ratios
    #[arg(long, global = true)]
    pub n0: Option<usize>,
    /// Monte Carlo samples per sphere
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// RNG seed, decimal or 0x-prefixed hex
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Ball normalization
    #[arg(long, global = true, value_enum)]
    pub norm: Option<NormChoice>,
    /// Vector preset for convergence runs
    #[arg(long, global = true, value_enum)]
    pub vectors: Option<Preset>,
    /// Builtin finite group, e.g. sym(3), cyclic(4), dihedral(5)
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, env = "FLIPLAB_THREADS")]
    pub threads: Option<usize>,
}

/// Fully resolved and validated parameters of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub q: u32,
    pub rank: u32,
    pub depth: usize,
    pub nmax: usize,
    pub n0: usize,
    pub samples: u64,
    pub seed: u64,
    pub normalization: NormChoice,
    pub vectors: Preset,
    pub group: Option<GroupName>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            q: 2,
            rank: 2,
            depth: if experiment == Experiment::Props {
                2
            } else {
                1
            },
            nmax: match experiment {
                Experiment::TreeConverge => 24,
                Experiment::Props => 12,
                _ => 10,
            },
            n0: 1,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            normalization: NormChoice::Xi2,
            vectors: Preset::Orthogonal,
            group: None,
            out: None,
            threads: None,
        }
    }

    /// Merges defaults, the optional config file and flags, then validates.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&ConfigFile>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut c = Self::defaults(experiment);
        if let Some(f) = file {
            if let Some(e) = f.experiment {
                if e != experiment {
                    return Err(CliError::Config(format!(
                        "config is for experiment '{e}', but '{experiment}' was requested"
                    )));
                }
            }
            c.q = f.q.unwrap_or(c.q);
            c.rank = f.rank.unwrap_or(c.rank);
            c.depth = f.depth.unwrap_or(c.depth);
            c.nmax = f.nmax.unwrap_or(c.nmax);
            c.n0 = f.n0.unwrap_or(c.n0);
            c.samples = f.samples.unwrap_or(c.samples);
            c.seed = f.seed()?.unwrap_or(c.seed);
            c.normalization = f.normalization.unwrap_or(c.normalization);
            c.vectors = f.vectors.unwrap_or(c.vectors);
            if let Some(g) = &f.group {
                c.group = Some(parse_group(g)?);
            }
            c.out = f.out.clone().or(c.out);
            c.threads = f.threads.or(c.threads);
        }
        c.q = flags.q.unwrap_or(c.q);
        c.rank = flags.rank.unwrap_or(c.rank);
        c.depth = flags.depth.unwrap_or(c.depth);
        c.nmax = flags.nmax.unwrap_or(c.nmax);
        c.n0 = flags.n0.unwrap_or(c.n0);
        c.samples = flags.samples.unwrap_or(c.samples);
        c.seed = flags.seed.unwrap_or(c.seed);
        c.normalization = flags.norm.unwrap_or(c.normalization);
        c.vectors = flags.vectors.unwrap_or(c.vectors);
        if let Some(g) = &flags.group {
            c.group = Some(parse_group(g)?);
        }
        c.out = flags.out.clone().or(c.out);
        c.threads = flags.threads.or(c.threads);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        TreeParams::new(self.q).map_err(|e| CliError::Config(e.to_string()))?;
        FreeGroupParams::new(self.rank).map_err(|e| CliError::Config(e.to_string()))?;
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        match self.experiment {
            Experiment::TreeConverge | Experiment::Props => {
                if self.depth > 2 {
                    return bad(format!("depth {} not supported (at most 2)", self.depth));
                }
                if self.experiment == Experiment::TreeConverge
                    && self.depth == 0
                    && self.vectors != Preset::Radial
                {
                    return bad(format!("vectors '{}' need depth at least 1", self.vectors));
                }
                let budget = (self.nmax as u64 + 1).checked_mul(self.samples);
                if budget.is_none_or(|b| b > MAX_SAMPLE_BUDGET) {
                    return bad(format!(
                        "(nmax + 1) * samples exceeds {MAX_SAMPLE_BUDGET}; lower nmax or samples"
                    ));
                }
            }
            Experiment::Free => {
                if self.depth > 2 {
                    return bad(format!("depth {} not supported (at most 2)", self.depth));
                }
                if self.depth == 0 && self.vectors != Preset::Radial {
                    return bad(format!("vectors '{}' need depth at least 1", self.vectors));
                }
                let words = (0..=self.nmax)
                    .try_fold(0u64, |acc, m| acc.checked_add(sphere_count(self.rank, m)?));
                if words.is_none_or(|w| w > MAX_BALL_WORDS) {
                    return bad(format!(
                        "ball of radius {} in F_{} has more than {MAX_BALL_WORDS} elements",
                        self.nmax, self.rank
                    ));
                }
            }
            Experiment::Xi | Experiment::Compact | Experiment::Report => {}
        }
        Ok(())
    }

    /// Tree parameter of the current model (`2r − 1` for `free`).
    pub fn tree_q(&self) -> u32 {
        if self.experiment == Experiment::Free {
            2 * self.rank - 1
        } else {
            self.q
        }
    }

    pub fn schur_vectors(&self) -> Result<SchurVectors, CliError> {
        self.vectors.vectors(self.tree_q(), self.depth)
    }
}

fn parse_group(s: &str) -> Result<GroupName, CliError> {
    GroupName::from_str(s).map_err(|e| CliError::Config(e.to_string()))
}
