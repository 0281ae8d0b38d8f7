//! The experiment commands. Each returns a [`ResultTable`]; the binary
//! decides where it goes.

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qecinsitu_core::channel::{
    anisotropic_effective, bloch_ode_solve, choi_of_unital, composite_coeffs, default_ode_steps,
    flip_probability, flip_probs_of_choi, rotation_matrix, transfer_matrix_of_anisotropic,
    AnisotropicParams, ChannelParams, FlipProbs, RateTriple,
};
use qecinsitu_core::codes::{
    five_qubit_brute_force, five_qubit_class_likelihood, five_qubit_depolarizing_likelihood,
    RepetitionCode, Syndrome, FIVE_QUBIT_CLASSES,
};
use qecinsitu_core::estimation::{aggregate_runs, run_simulation, RunSummary, RunTrace};
use qecinsitu_core::model_select::{
    aggregate_hypothesis_runs, correlated_brute_force, correlated_error_string_probs,
    correlated_flip_count_probs, correlated_syndrome_probs, run_hypothesis_trial,
    CorrelatedParams, HypothesisPrior, HypothesisSummary,
};

use crate::config::ExperimentConfig;
use crate::constants::{derived_constants, DerivedConstants};
use crate::table::{cell, ResultTable};

pub const RNG_NAME: &str = "chacha8 (substream s = seed xor run_index)";

/// Per-run rng stream.
pub fn run_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ run_index)
}

/// Worker pool honoring the `QECINSITU_THREADS` cap.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("QECINSITU_THREADS") {
        let n: usize = raw
            .parse()
            .with_context(|| format!("QECINSITU_THREADS must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            anyhow::bail!("QECINSITU_THREADS must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    builder.build().context("building worker pool")
}

fn base_metadata(table: &mut ResultTable, experiment: &str, cfg: &ExperimentConfig) {
    table.push_meta("qecinsitu", env!("CARGO_PKG_VERSION"));
    table.push_meta("experiment", experiment);
    table.push_meta("seed", cfg.seed);
    table.push_meta("rng", RNG_NAME);
}

fn constants_metadata(table: &mut ResultTable, constants: &DerivedConstants) {
    table.push_meta("p_th", constants.p_th);
    table.push_meta("tau_1", constants.tau_1);
    table.push_meta("tau_bar", constants.tau_bar);
}

/// Probability per round of uncorrectable errors over a `(omega, tau)`
/// grid for each code size, with the threshold-crossing duration per
/// `(omega, code)` pair.
pub fn cmd_sweep_r(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;
    let sweep = &cfg.sweep;
    let mut table = ResultTable::new(&[
        "omega",
        "tau",
        "code_size",
        "r_uncorrectable",
        "tau_threshold",
    ]);
    base_metadata(&mut table, "sweep-r", cfg);
    table.push_meta("gamma", sweep.gamma);
    table.push_meta("r_threshold", cfg.r_threshold);
    constants_metadata(&mut table, &constants);

    for &m in &sweep.code_sizes {
        let code = RepetitionCode::new(m)?;
        for &omega in &sweep.omegas {
            let tau_omega = code.tau_threshold(omega, sweep.gamma, cfg.r_threshold)?;
            for i in 0..sweep.tau_points {
                let tau = sweep.tau_min
                    + (sweep.tau_max - sweep.tau_min) * i as f64
                        / (sweep.tau_points - 1) as f64;
                let p = flip_probability(omega, sweep.gamma, tau, 0.0);
                let r = code.uncorrectable(p)?;
                table.push_row(vec![
                    cell(omega),
                    cell(tau),
                    cell(m),
                    cell(r),
                    cell(tau_omega),
                ])?;
            }
        }
    }
    Ok(table)
}

/// Runs the estimation experiment for one policy and aggregates the
/// traces. Runs are dispatched to the worker pool; assembly is by run
/// index, so the table is independent of scheduling.
pub fn run_estimation_experiment(cfg: &ExperimentConfig) -> Result<(RunSummary, DerivedConstants)> {
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;
    let fixed_tau = cfg.fixed_tau.unwrap_or(constants.tau_bar);
    let tau_max = cfg.tau_max_random.unwrap_or(1.0 / cfg.prior.mean_gamma);
    let policy = cfg.policy.to_policy(fixed_tau, tau_max);
    let rounds = cfg.rounds.unwrap_or(10_000);
    let pool = thread_pool()?;
    let traces: Vec<RunTrace> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = run_rng(cfg.seed, run as u64);
                run_simulation(&cfg.prior, &policy, rounds, &mut rng)
            })
            .collect::<Result<_, _>>()
    })?;
    let summary = aggregate_runs(&traces)?;
    Ok((summary, constants))
}

pub fn cmd_estimation(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (summary, constants) = run_estimation_experiment(cfg)?;
    let fixed_tau = cfg.fixed_tau.unwrap_or(constants.tau_bar);
    let tau_max = cfg.tau_max_random.unwrap_or(1.0 / cfg.prior.mean_gamma);

    let mut table = ResultTable::new(&[
        "round",
        "sq_err_omega_median",
        "sq_err_omega_q1",
        "sq_err_omega_q3",
        "sq_err_gamma_x1e4_median",
        "sq_err_gamma_x1e4_q1",
        "sq_err_gamma_x1e4_q3",
        "survival_mean",
        "survival_ci_lo",
        "survival_ci_hi",
    ]);
    base_metadata(&mut table, "estimate", cfg);
    table.push_meta("policy", cfg.policy.as_str());
    table.push_meta("runs", cfg.runs);
    table.push_meta("rounds", cfg.rounds.unwrap_or(10_000));
    table.push_meta("fixed_tau", fixed_tau);
    table.push_meta("tau_range", format!("[0,{tau_max}]"));
    table.push_meta("prior_mean", format!("({},{})", cfg.prior.mean_omega, cfg.prior.mean_gamma));
    table.push_meta("prior_var", format!("({},{})", cfg.prior.var_omega, cfg.prior.var_gamma));
    table.push_meta("grid_points", cfg.grid_points);
    table.push_meta("r_threshold", cfg.r_threshold);
    constants_metadata(&mut table, &constants);

    for row in &summary.rows {
        table.push_row(vec![
            cell(row.round),
            cell(row.sq_omega_median),
            cell(row.sq_omega_q1),
            cell(row.sq_omega_q3),
            cell(row.sq_gamma_x1e4_median),
            cell(row.sq_gamma_x1e4_q1),
            cell(row.sq_gamma_x1e4_q3),
            cell(row.survival_mean),
            cell(row.survival_lo),
            cell(row.survival_hi),
        ])?;
    }
    Ok(table)
}

/// Hypothesis-testing experiment: truth drawn per run from the true
/// hypothesis's prior, or forced to explicit parameters.
pub fn run_hypothesis_experiment(
    cfg: &ExperimentConfig,
    forced: Option<CorrelatedParams>,
) -> Result<HypothesisSummary> {
    let prior = HypothesisPrior::new(
        cfg.hypothesis.p_max,
        cfg.hypothesis.q_max,
        cfg.hypothesis.grid_points,
    )?;
    let rounds = cfg.rounds.unwrap_or(1000);
    let pool = thread_pool()?;
    let runs = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = run_rng(cfg.seed, run as u64);
                let truth =
                    forced.unwrap_or_else(|| prior.sample_params(cfg.true_hypothesis, &mut rng));
                run_hypothesis_trial(&prior, &truth, rounds, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(aggregate_hypothesis_runs(&runs)?)
}

pub fn cmd_hypothesis(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let summary = run_hypothesis_experiment(cfg, None)?;
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;

    let mut table = ResultTable::new(&[
        "round",
        "pr_h0_median",
        "pr_h0_q1",
        "pr_h0_q3",
        "pr_h1_median",
        "pr_h1_q1",
        "pr_h1_q3",
    ]);
    base_metadata(&mut table, "hypothesis", cfg);
    table.push_meta("true_hypothesis", cfg.true_hypothesis.name());
    table.push_meta("runs", cfg.runs);
    table.push_meta("rounds", cfg.rounds.unwrap_or(1000));
    table.push_meta("p_max", cfg.hypothesis.p_max);
    table.push_meta("q_max", cfg.hypothesis.q_max);
    table.push_meta("grid_points", cfg.hypothesis.grid_points);
    constants_metadata(&mut table, &constants);

    for row in &summary.rows {
        table.push_row(vec![
            cell(row.round),
            cell(row.h0_median),
            cell(row.h0_q1),
            cell(row.h0_q3),
            cell(row.h1_median),
            cell(row.h1_q1),
            cell(row.h1_q3),
        ])?;
    }
    Ok(table)
}

struct SuiteResult {
    name: &'static str,
    cases: usize,
    max_deviation: f64,
    tolerance: f64,
}

impl SuiteResult {
    fn pass(&self) -> bool {
        self.max_deviation < self.tolerance
    }
}

fn random_flip_probs<R: Rng>(rng: &mut R) -> FlipProbs {
    let draw = |rng: &mut R| -> f64 { -(1.0 - rng.random::<f64>()).ln() };
    let e = [draw(rng), draw(rng), draw(rng), draw(rng)];
    let total: f64 = e.iter().sum();
    FlipProbs::from_flip_parts(e[1] / total, e[2] / total, e[3] / total).expect("simplex point")
}

fn random_axis<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn suite_five_qubit(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = 1000;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let fp = random_flip_probs(&mut rng);
        let classes = five_qubit_class_likelihood(&fp);
        let brute = five_qubit_brute_force(&fp);
        for (class, members) in FIVE_QUBIT_CLASSES.iter().enumerate() {
            for &v in members.iter() {
                worst = worst.max((brute.prob_of_value(v) - classes.as_array()[class]).abs());
            }
        }
        worst = worst.max((classes.normalization() - 1.0).abs());
    }
    Ok(SuiteResult { name: "five_qubit_appendix_c", cases, max_deviation: worst, tolerance: 1e-10 })
}

fn suite_five_qubit_depolarizing() -> Result<SuiteResult> {
    let cases = 200;
    let mut worst = 0.0_f64;
    for i in 0..cases {
        let p = 0.75 * i as f64 / (cases - 1) as f64;
        let fp = FlipProbs::from_flip_parts(p / 3.0, p / 3.0, p / 3.0)?;
        let classes = five_qubit_class_likelihood(&fp);
        let (s0, s) = five_qubit_depolarizing_likelihood(p)?;
        worst = worst.max((classes.s0 - s0).abs());
        for observed in [classes.s1, classes.s2, classes.s3] {
            worst = worst.max((observed - s).abs());
        }
    }
    Ok(SuiteResult {
        name: "five_qubit_depolarizing",
        cases,
        max_deviation: worst,
        tolerance: 1e-12,
    })
}

fn suite_appendix_a() -> Result<SuiteResult> {
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for i in 0..=50 {
        for j in 0..=50 {
            let params = CorrelatedParams::new(i as f64 / 50.0, j as f64 / 50.0)?;
            let closed = correlated_error_string_probs(&params);
            let brute = correlated_brute_force(&params);
            for k in 0..8 {
                worst = worst.max((closed[k] - brute[k]).abs());
            }
            let counts = correlated_flip_count_probs(&params);
            for m in 0..4u32 {
                let sum: f64 = (0..8)
                    .filter(|&k| (k as u32).count_ones() == m)
                    .map(|k| brute[k])
                    .sum();
                worst = worst.max((counts[m as usize] - sum).abs());
            }
            let dist = correlated_syndrome_probs(&params);
            let mut by_syndrome = [0.0_f64; 4];
            for (pattern, &w) in brute.iter().enumerate() {
                let e1 = (pattern >> 2) & 1;
                let e2 = (pattern >> 1) & 1;
                let e3 = pattern & 1;
                by_syndrome[(e1 ^ e2) | ((e2 ^ e3) << 1)] += w;
            }
            for v in 0..4u16 {
                worst = worst.max((dist.prob_of_value(v) - by_syndrome[v as usize]).abs());
            }
            cases += 1;
        }
    }
    Ok(SuiteResult { name: "appendix_a_correlated", cases, max_deviation: worst, tolerance: 1e-14 })
}

fn suite_channel_cross_derivation(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = 1000;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let fp = random_flip_probs(&mut rng);
        let axis = random_axis(&mut rng);
        let theta = rng.random::<f64>() * 12.0 - 6.0;
        let direct = anisotropic_effective(&AnisotropicParams::new(
            fp.p_x, fp.p_y, fp.p_z, axis, theta,
        )?);
        let b = rotation_matrix(axis, theta)?
            .compose(&transfer_matrix_of_anisotropic(fp.p_x, fp.p_y, fp.p_z)?);
        let via_choi = flip_probs_of_choi(&choi_of_unital(&b))?;
        for (a, b) in via_choi.as_array().iter().zip(direct.as_array()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(SuiteResult {
        name: "channel_cross_derivation",
        cases,
        max_deviation: worst,
        tolerance: 1e-10,
    })
}

fn suite_bloch_ode_commuting(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = 50;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let omega = rng.random::<f64>() * 2.0;
        let gamma = rng.random::<f64>() * 0.05;
        let tau = 0.1 + rng.random::<f64>() * 3.0;
        let rates = RateTriple::new(gamma, 0.0, 0.0)?;
        let b = bloch_ode_solve(omega, [1.0, 0.0, 0.0], &rates, tau, default_ode_steps(tau))?;
        let fp = flip_probs_of_choi(&choi_of_unital(&b))?;
        let cc = composite_coeffs(
            &ChannelParams::new(omega, gamma, tau)?,
        );
        worst = worst.max((fp.q - cc.q).abs());
        worst = worst.max((fp.p_x - cc.p).abs());
        worst = worst.max(fp.p_y.abs()).max(fp.p_z.abs());
    }
    Ok(SuiteResult { name: "bloch_ode_commuting", cases, max_deviation: worst, tolerance: 1e-6 })
}

/// Oracle-equivalence suites with their max absolute deviations. The
/// second return value is false when any suite exceeds its tolerance;
/// the process exit status reflects it.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<(ResultTable, bool)> {
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;
    let suites = vec![
        suite_five_qubit(cfg.seed)?,
        suite_five_qubit_depolarizing()?,
        suite_appendix_a()?,
        suite_channel_cross_derivation(cfg.seed ^ 1)?,
        suite_bloch_ode_commuting(cfg.seed ^ 2)?,
    ];
    let mut table =
        ResultTable::new(&["suite", "cases", "max_abs_deviation", "tolerance", "pass"]);
    base_metadata(&mut table, "validate", cfg);
    constants_metadata(&mut table, &constants);
    let mut all_pass = true;
    for suite in &suites {
        all_pass &= suite.pass();
        table.push_row(vec![
            suite.name.to_string(),
            cell(suite.cases),
            cell(suite.max_deviation),
            cell(suite.tolerance),
            cell(suite.pass()),
        ])?;
    }
    Ok((table, all_pass))
}

/// Sixteen-row table of five-qubit syndrome probabilities: closed-form
/// class value next to the enumeration value.
pub fn cmd_five_qubit_likelihood(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;
    let (p_x, p_y, p_z) = cfg.five_qubit;
    let fp = FlipProbs::from_flip_parts(p_x, p_y, p_z)?;
    let classes = five_qubit_class_likelihood(&fp);
    let brute = five_qubit_brute_force(&fp);

    let mut table =
        ResultTable::new(&["syndrome", "class", "prob_closed_form", "prob_enumeration"]);
    base_metadata(&mut table, "five-qubit-likelihood", cfg);
    constants_metadata(&mut table, &constants);
    table.push_meta("p_x", p_x);
    table.push_meta("p_y", p_y);
    table.push_meta("p_z", p_z);
    table.push_meta("normalization", classes.normalization());

    for value in 0..16u16 {
        let class = FIVE_QUBIT_CLASSES
            .iter()
            .position(|members| members.contains(&value))
            .expect("all syndromes classified");
        table.push_row(vec![
            Syndrome::from_value(value, 4).label(),
            format!("S{class}"),
            cell(classes.as_array()[class]),
            cell(brute.prob_of_value(value)),
        ])?;
    }
    Ok(table)
}

/// Transfer matrix, process matrix, and commitment probabilities of the
/// configured rotation + anisotropic-noise channel.
pub fn cmd_choi(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let constants = derived_constants(&cfg.prior, cfg.r_threshold)?;
    let c = &cfg.choi;
    let e = transfer_matrix_of_anisotropic(c.p_x, c.p_y, c.p_z)?;
    let r = rotation_matrix(c.axis, c.theta)?;
    let b = r.compose(&e);
    let chi = choi_of_unital(&b);
    let fp = flip_probs_of_choi(&chi)?;
    let direct = anisotropic_effective(&AnisotropicParams::new(
        c.p_x, c.p_y, c.p_z, c.axis, c.theta,
    )?);

    let mut table = ResultTable::new(&["quantity", "element", "re", "im"]);
    base_metadata(&mut table, "choi", cfg);
    constants_metadata(&mut table, &constants);
    table.push_meta("p_x", c.p_x);
    table.push_meta("p_y", c.p_y);
    table.push_meta("p_z", c.p_z);
    table.push_meta("axis", format!("({},{},{})", c.axis[0], c.axis[1], c.axis[2]));
    table.push_meta("theta", c.theta);

    let labels = ["x", "y", "z"];
    for i in 0..3 {
        for j in 0..3 {
            table.push_row(vec![
                "transfer_b".into(),
                format!("{}{}", labels[i], labels[j]),
                cell(b.0[(i, j)]),
                cell(0.0),
            ])?;
        }
    }
    let pauli = ["0", "x", "y", "z"];
    for a in 0..4 {
        for bb in 0..4 {
            let value = chi.element(a, bb);
            table.push_row(vec![
                "chi".into(),
                format!("{}{}", pauli[a], pauli[bb]),
                cell(value.re),
                cell(value.im),
            ])?;
        }
    }
    for (label, via_choi, closed) in [
        ("q", fp.q, direct.q),
        ("px", fp.p_x, direct.p_x),
        ("py", fp.p_y, direct.p_y),
        ("pz", fp.p_z, direct.p_z),
    ] {
        table.push_row(vec!["flip_prob".into(), label.into(), cell(via_choi), cell(0.0)])?;
        table.push_row(vec![
            "flip_prob_closed_form".into(),
            label.into(),
            cell(closed),
            cell(0.0),
        ])?;
    }
    Ok(table)
}
