//! Experiment configuration: a JSON config file merged with command-line
//! overrides. The seed is mandatory — there is no wall-clock default, so
//! every run is reproducible by construction.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qecinsitu_core::estimation::{ControlPolicy, GaussianPrior2D};
use qecinsitu_core::model_select::Hypothesis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyName {
    NoControl,
    UnitaryControl,
    RandomTau,
    UnitaryAndRandomTau,
}

impl PolicyName {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "no-control" => PolicyName::NoControl,
            "unitary-control" => PolicyName::UnitaryControl,
            "random-tau" => PolicyName::RandomTau,
            "unitary-and-random-tau" => PolicyName::UnitaryAndRandomTau,
            other => bail!(
                "unknown policy {other:?}; expected one of no-control, unitary-control, \
                 random-tau, unitary-and-random-tau"
            ),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyName::NoControl => "no-control",
            PolicyName::UnitaryControl => "unitary-control",
            PolicyName::RandomTau => "random-tau",
            PolicyName::UnitaryAndRandomTau => "unitary-and-random-tau",
        }
    }

    /// Concrete policy given the resolved fixed duration and random range.
    pub fn to_policy(self, fixed_tau: f64, tau_max: f64) -> ControlPolicy {
        match self {
            PolicyName::NoControl => ControlPolicy::NoControl { fixed_tau },
            PolicyName::UnitaryControl => ControlPolicy::UnitaryControl { fixed_tau },
            PolicyName::RandomTau => ControlPolicy::RandomTau { tau_min: 0.0, tau_max },
            PolicyName::UnitaryAndRandomTau => {
                ControlPolicy::UnitaryAndRandomTau { tau_min: 0.0, tau_max }
            }
        }
    }
}

fn parse_hypothesis(name: &str) -> Result<Hypothesis> {
    Ok(match name {
        "H0" | "h0" => Hypothesis::Uncorrelated,
        "H1" | "h1" => Hypothesis::Correlated,
        other => bail!("unknown hypothesis {other:?}; expected H0 or H1"),
    })
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    runs: Option<usize>,
    rounds: Option<usize>,
    policy: Option<String>,
    true_hypothesis: Option<String>,
    out: Option<PathBuf>,
    r_threshold: Option<f64>,
    #[serde(default)]
    prior: PriorSection,
    #[serde(default)]
    estimation: EstimationSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    hypothesis: HypothesisSection,
    #[serde(default)]
    five_qubit: FiveQubitSection,
    #[serde(default)]
    choi: ChoiSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorSection {
    mean_omega: Option<f64>,
    mean_gamma: Option<f64>,
    var_omega: Option<f64>,
    var_gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimationSection {
    fixed_tau: Option<f64>,
    tau_max: Option<f64>,
    grid_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    gamma: Option<f64>,
    omegas: Option<Vec<f64>>,
    tau_min: Option<f64>,
    tau_max: Option<f64>,
    tau_points: Option<usize>,
    code_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypothesisSection {
    p_max: Option<f64>,
    q_max: Option<f64>,
    grid_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiveQubitSection {
    p_x: Option<f64>,
    p_y: Option<f64>,
    p_z: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiSection {
    p_x: Option<f64>,
    p_y: Option<f64>,
    p_z: Option<f64>,
    axis: Option<[f64; 3]>,
    theta: Option<f64>,
}

/// Command-line overrides; every field beats the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub rounds: Option<usize>,
    pub policy: Option<String>,
    pub true_hypothesis: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub gamma: f64,
    pub omegas: Vec<f64>,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub code_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct HypothesisConfig {
    pub p_max: f64,
    pub q_max: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ChoiConfig {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub axis: [f64; 3],
    pub theta: f64,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub runs: usize,
    /// Per-command defaults apply when unset (10^4 for estimation,
    /// 10^3 for hypothesis testing).
    pub rounds: Option<usize>,
    pub policy: PolicyName,
    pub true_hypothesis: Hypothesis,
    pub out: Option<PathBuf>,
    pub r_threshold: f64,
    pub prior: GaussianPrior2D,
    pub fixed_tau: Option<f64>,
    pub tau_max_random: Option<f64>,
    pub grid_points: usize,
    pub sweep: SweepConfig,
    pub hypothesis: HypothesisConfig,
    pub five_qubit: (f64, f64, f64),
    pub choi: ChoiConfig,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let file: FileConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        Self::resolve(file, overrides)
    }

    fn resolve(file: FileConfig, overrides: &Overrides) -> Result<Self> {
        let seed = overrides
            .seed
            .or(file.seed)
            .context("seed is required (set --seed or the config key \"seed\")")?;
        let runs = overrides.runs.or(file.runs).unwrap_or(100);
        if runs < 1 {
            bail!("runs must be at least 1");
        }
        let rounds = overrides.rounds.or(file.rounds);
        if rounds == Some(0) {
            bail!("rounds must be at least 1");
        }
        let policy = PolicyName::parse(
            overrides
                .policy
                .as_deref()
                .or(file.policy.as_deref())
                .unwrap_or("no-control"),
        )?;
        let true_hypothesis = parse_hypothesis(
            overrides
                .true_hypothesis
                .as_deref()
                .or(file.true_hypothesis.as_deref())
                .unwrap_or("H0"),
        )?;
        let out = overrides.out.clone().or(file.out);

        let r_threshold = file.r_threshold.unwrap_or(0.05);
        if !(0.0 < r_threshold && r_threshold < 1.0) {
            bail!("r_threshold must lie strictly inside (0, 1)");
        }

        let prior = GaussianPrior2D::new(
            file.prior.mean_omega.unwrap_or(1.0),
            file.prior.mean_gamma.unwrap_or(0.01),
            file.prior.var_omega.unwrap_or(1e-2),
            file.prior.var_gamma.unwrap_or(1e-6),
        )
        .context("invalid prior")?;

        let grid_points = file.estimation.grid_points.unwrap_or(201);
        if grid_points < 2 {
            bail!("estimation.grid_points must be at least 2");
        }

        let sweep = SweepConfig {
            gamma: file.sweep.gamma.unwrap_or(0.01),
            omegas: file.sweep.omegas.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            tau_min: file.sweep.tau_min.unwrap_or(0.01),
            tau_max: file.sweep.tau_max.unwrap_or(3.0),
            tau_points: file.sweep.tau_points.unwrap_or(300),
            code_sizes: file.sweep.code_sizes.unwrap_or_else(|| vec![3, 5]),
        };
        if sweep.tau_points < 2 || sweep.tau_min <= 0.0 || sweep.tau_max <= sweep.tau_min {
            bail!("sweep tau grid must satisfy 0 < tau_min < tau_max with at least 2 points");
        }

        let hypothesis = HypothesisConfig {
            p_max: file.hypothesis.p_max.unwrap_or(0.1),
            q_max: file.hypothesis.q_max.unwrap_or(0.1),
            grid_points: file.hypothesis.grid_points.unwrap_or(201),
        };

        let five_qubit = (
            file.five_qubit.p_x.unwrap_or(0.04),
            file.five_qubit.p_y.unwrap_or(0.02),
            file.five_qubit.p_z.unwrap_or(0.03),
        );

        let choi = ChoiConfig {
            p_x: file.choi.p_x.unwrap_or(0.04),
            p_y: file.choi.p_y.unwrap_or(0.02),
            p_z: file.choi.p_z.unwrap_or(0.03),
            axis: file.choi.axis.unwrap_or([1.0, 0.0, 0.0]),
            theta: file.choi.theta.unwrap_or(0.72),
        };

        Ok(Self {
            seed,
            runs,
            rounds,
            policy,
            true_hypothesis,
            out,
            r_threshold,
            prior,
            fixed_tau: file.estimation.fixed_tau,
            tau_max_random: file.estimation.tau_max,
            grid_points,
            sweep,
            hypothesis,
            five_qubit,
            choi,
        })
    }
}
