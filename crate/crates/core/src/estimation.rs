//! Sequential Bayesian estimation of the channel parameters from
//! simulated syndrome streams under the four control policies.
//!
//! The posterior over `(omega, gamma)` lives on a fixed grid spanning the
//! prior mean plus/minus six standard deviations per axis, truncated at
//! zero. The three-qubit likelihood factorizes over the grid axes —
//! `Pr(00) ~ 1 + 3 a(gamma) b(omega)` with `a = exp(-8 gamma tau)` and
//! `b = cos^2((omega - omega_c) tau)` — so one round costs a single pass
//! over the grid.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::channel::{flip_probability, ChannelParams};
use crate::codes::{rep3_sample_syndrome, Syndrome};
use crate::stats::{median_iqr, wilson_interval};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("prior variances must be positive")]
    InvalidPrior,
    #[error("grid axes need at least 2 points")]
    GridTooSmall,
    #[error("posterior mass vanished; the grid no longer supports the data")]
    PosteriorExhausted,
    #[error("no traces to aggregate")]
    NoTraces,
    #[error("traces disagree on round count")]
    TraceLengthMismatch,
    #[error("channel rejected sampled parameters: {0}")]
    Channel(#[from] crate::channel::ChannelError),
}

/// Independent Gaussian prior over `(omega, gamma)`, truncated to the
/// nonnegative quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior2D {
    pub mean_omega: f64,
    pub mean_gamma: f64,
    pub var_omega: f64,
    pub var_gamma: f64,
}

impl GaussianPrior2D {
    pub fn new(
        mean_omega: f64,
        mean_gamma: f64,
        var_omega: f64,
        var_gamma: f64,
    ) -> Result<Self, EstimationError> {
        if !(var_omega > 0.0 && var_gamma > 0.0) {
            return Err(EstimationError::InvalidPrior);
        }
        Ok(Self { mean_omega, mean_gamma, var_omega, var_gamma })
    }

    /// The paper's calibration: mean `(1, 0.01)`, variance `(1e-2, 1e-6)`.
    pub fn reference() -> Self {
        Self { mean_omega: 1.0, mean_gamma: 0.01, var_omega: 1e-2, var_gamma: 1e-6 }
    }

    pub fn std_omega(&self) -> f64 {
        self.var_omega.sqrt()
    }

    pub fn std_gamma(&self) -> f64 {
        self.var_gamma.sqrt()
    }
}

/// Draws true channel parameters from the truncated prior.
pub fn sample_true_params<R: Rng + ?Sized>(prior: &GaussianPrior2D, rng: &mut R) -> (f64, f64) {
    let omega_dist = Normal::new(prior.mean_omega, prior.std_omega()).expect("finite std");
    let gamma_dist = Normal::new(prior.mean_gamma, prior.std_gamma()).expect("finite std");
    let draw = |dist: &Normal<f64>, rng: &mut R| loop {
        let v = dist.sample(rng);
        if v >= 0.0 {
            return v;
        }
    };
    (draw(&omega_dist, rng), draw(&gamma_dist, rng))
}

/// Marginal means and variances of a grid posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorStats {
    pub mean_omega: f64,
    pub mean_gamma: f64,
    pub var_omega: f64,
    pub var_gamma: f64,
}

impl PosteriorStats {
    pub fn std_omega(&self) -> f64 {
        self.var_omega.sqrt()
    }

    pub fn std_gamma(&self) -> f64 {
        self.var_gamma.sqrt()
    }
}

/// Discretized joint posterior over `(omega, gamma)`.
///
/// Weights are stored with a tracked total mass and rescaled on the fly,
/// so one Bayes update is a single fused pass; accessors always report
/// normalized weights.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    omega_axis: Vec<f64>,
    gamma_axis: Vec<f64>,
    // row-major, omega index major; sums to `mass`
    weights: Vec<f64>,
    mass: f64,
    // per-round scratch, reused across updates
    col_sums: Vec<f64>,
}

/// Default grid resolution per axis.
pub const DEFAULT_GRID_POINTS: usize = 201;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl GridPosterior {
    /// Grid spanning mean +/- 6 prior standard deviations, truncated at 0,
    /// with weights proportional to the prior density.
    pub fn from_prior(
        prior: &GaussianPrior2D,
        n_omega: usize,
        n_gamma: usize,
    ) -> Result<Self, EstimationError> {
        if n_omega < 2 || n_gamma < 2 {
            return Err(EstimationError::GridTooSmall);
        }
        let span = |mean: f64, std: f64| ((mean - 6.0 * std).max(0.0), mean + 6.0 * std);
        let (olo, ohi) = span(prior.mean_omega, prior.std_omega());
        let (glo, ghi) = span(prior.mean_gamma, prior.std_gamma());
        let omega_axis = linspace(olo, ohi, n_omega);
        let gamma_axis = linspace(glo, ghi, n_gamma);

        let mut weights = Vec::with_capacity(n_omega * n_gamma);
        for &omega in &omega_axis {
            let wo = (-(omega - prior.mean_omega).powi(2) / (2.0 * prior.var_omega)).exp();
            for &gamma in &gamma_axis {
                let wg = (-(gamma - prior.mean_gamma).powi(2) / (2.0 * prior.var_gamma)).exp();
                weights.push(wo * wg);
            }
        }
        let mass: f64 = weights.iter().sum();
        Ok(Self {
            omega_axis,
            gamma_axis,
            weights,
            mass,
            col_sums: vec![0.0; n_gamma],
        })
    }

    pub fn from_prior_default(prior: &GaussianPrior2D) -> Result<Self, EstimationError> {
        Self::from_prior(prior, DEFAULT_GRID_POINTS, DEFAULT_GRID_POINTS)
    }

    pub fn omega_axis(&self) -> &[f64] {
        &self.omega_axis
    }

    pub fn gamma_axis(&self) -> &[f64] {
        &self.gamma_axis
    }

    /// Normalized weight at `(omega index, gamma index)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.gamma_axis.len() + j] / self.mass
    }

    /// Sum of normalized weights; 1 up to float roundoff.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.mass
    }

    /// Total normalized mass on grid points satisfying the predicate.
    pub fn mass_where<F: Fn(f64, f64) -> bool>(&self, pred: F) -> f64 {
        let n_gamma = self.gamma_axis.len();
        let mut total = 0.0;
        for (i, &omega) in self.omega_axis.iter().enumerate() {
            for (j, &gamma) in self.gamma_axis.iter().enumerate() {
                if pred(omega, gamma) {
                    total += self.weights[i * n_gamma + j];
                }
            }
        }
        total / self.mass
    }

    /// Grid indices nearest to a parameter point.
    pub fn nearest_cell(&self, omega: f64, gamma: f64) -> (usize, usize) {
        let nearest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - v).abs().total_cmp(&(*b - v).abs()))
                .map(|(i, _)| i)
                .expect("axis nonempty")
        };
        (nearest(&self.omega_axis, omega), nearest(&self.gamma_axis, gamma))
    }

    /// Marginal means and variances, one pass over the grid.
    pub fn stats(&self) -> PosteriorStats {
        let n_gamma = self.gamma_axis.len();
        let omega_ref = 0.5 * (self.omega_axis[0] + self.omega_axis[self.omega_axis.len() - 1]);
        let gamma_ref = 0.5 * (self.gamma_axis[0] + self.gamma_axis[n_gamma - 1]);
        let mut s_o = 0.0;
        let mut s_oo = 0.0;
        let mut s_g = 0.0;
        let mut s_gg = 0.0;
        for (i, &omega) in self.omega_axis.iter().enumerate() {
            let row = &self.weights[i * n_gamma..(i + 1) * n_gamma];
            let row_sum: f64 = row.iter().sum();
            let d_o = omega - omega_ref;
            s_o += row_sum * d_o;
            s_oo += row_sum * d_o * d_o;
            for (j, &w) in row.iter().enumerate() {
                let d_g = self.gamma_axis[j] - gamma_ref;
                s_g += w * d_g;
                s_gg += w * d_g * d_g;
            }
        }
        let inv = 1.0 / self.mass;
        let mean_do = s_o * inv;
        let mean_dg = s_g * inv;
        PosteriorStats {
            mean_omega: omega_ref + mean_do,
            mean_gamma: gamma_ref + mean_dg,
            var_omega: (s_oo * inv - mean_do * mean_do).max(0.0),
            var_gamma: (s_gg * inv - mean_dg * mean_dg).max(0.0),
        }
    }

    /// Bayes update for one observed syndrome at round settings
    /// `(tau, omega_c)`: every weight is multiplied by
    /// `Pr(syndrome | omega_i - omega_c, gamma_j, tau)` and the posterior
    /// is renormalized. Returns the post-update marginal stats, which the
    /// fused pass computes for free.
    pub fn update(
        &mut self,
        syndrome: Syndrome,
        tau: f64,
        omega_c: f64,
    ) -> Result<PosteriorStats, EstimationError> {
        let n_gamma = self.gamma_axis.len();
        // likelihoods up to a constant factor: 1 + 3ab for the trivial
        // syndrome, 1 - ab for the three others
        let coef = if syndrome.is_trivial() { 3.0 } else { -1.0 };
        let damp: Vec<f64> = self.gamma_axis.iter().map(|&g| (-8.0 * g * tau).exp()).collect();

        let omega_ref = 0.5 * (self.omega_axis[0] + self.omega_axis[self.omega_axis.len() - 1]);
        let gamma_ref = 0.5 * (self.gamma_axis[0] + self.gamma_axis[n_gamma - 1]);
        let inv_mass = 1.0 / self.mass;

        self.col_sums.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        let mut s_o = 0.0;
        let mut s_oo = 0.0;
        for (i, &omega) in self.omega_axis.iter().enumerate() {
            let b = ((omega - omega_c) * tau).cos().powi(2);
            // w <- w * (1 + coef * a * b) / mass, fused into two constants
            let c1 = coef * b * inv_mass;
            let row = &mut self.weights[i * n_gamma..(i + 1) * n_gamma];
            let mut row_sum = [0.0_f64; 4];
            let mut chunks = row.chunks_exact_mut(4);
            let mut cols = self.col_sums.chunks_exact_mut(4);
            let mut damps = damp.chunks_exact(4);
            for ((wc, cc), dc) in (&mut chunks).zip(&mut cols).zip(&mut damps) {
                for k in 0..4 {
                    let w = wc[k] * (inv_mass + c1 * dc[k]);
                    wc[k] = w;
                    cc[k] += w;
                    row_sum[k] += w;
                }
            }
            let base = n_gamma - n_gamma % 4;
            for (k, w) in chunks.into_remainder().iter_mut().enumerate() {
                let updated = *w * (inv_mass + c1 * damp[base + k]);
                *w = updated;
                self.col_sums[base + k] += updated;
                row_sum[0] += updated;
            }
            let row_total = (row_sum[0] + row_sum[1]) + (row_sum[2] + row_sum[3]);
            let d_o = omega - omega_ref;
            total += row_total;
            s_o += row_total * d_o;
            s_oo += row_total * d_o * d_o;
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(EstimationError::PosteriorExhausted);
        }
        self.mass = total;

        let mut s_g = 0.0;
        let mut s_gg = 0.0;
        for (j, &cs) in self.col_sums.iter().enumerate() {
            let d_g = self.gamma_axis[j] - gamma_ref;
            s_g += cs * d_g;
            s_gg += cs * d_g * d_g;
        }
        let inv = 1.0 / total;
        let mean_do = s_o * inv;
        let mean_dg = s_g * inv;
        Ok(PosteriorStats {
            mean_omega: omega_ref + mean_do,
            mean_gamma: gamma_ref + mean_dg,
            var_omega: (s_oo * inv - mean_do * mean_do).max(0.0),
            var_gamma: (s_gg * inv - mean_dg * mean_dg).max(0.0),
        })
    }
}

/// Round-by-round control strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlPolicy {
    /// Fixed duration, no counter-rotation.
    NoControl { fixed_tau: f64 },
    /// Fixed duration; counter-rotation tracks the posterior, leaving a
    /// residual of one posterior standard deviation.
    UnitaryControl { fixed_tau: f64 },
    /// Duration drawn uniformly from `[tau_min, tau_max]` each round.
    RandomTau { tau_min: f64, tau_max: f64 },
    /// Both controls together.
    UnitaryAndRandomTau { tau_min: f64, tau_max: f64 },
}

impl ControlPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            ControlPolicy::NoControl { .. } => "no-control",
            ControlPolicy::UnitaryControl { .. } => "unitary-control",
            ControlPolicy::RandomTau { .. } => "random-tau",
            ControlPolicy::UnitaryAndRandomTau { .. } => "unitary-and-random-tau",
        }
    }
}

/// Picks the round settings `(tau, omega_c)` for a policy given the
/// current posterior summary. The counter-rotation is
/// `omega_c = mean - std`, so the residual rotation seen by the syndrome
/// statistics equals the current standard deviation and shrinks to zero
/// as the estimate sharpens.
pub fn choose_control<R: Rng + ?Sized>(
    policy: &ControlPolicy,
    stats: &PosteriorStats,
    rng: &mut R,
) -> (f64, f64) {
    let counter = |stats: &PosteriorStats| stats.mean_omega - stats.std_omega();
    match *policy {
        ControlPolicy::NoControl { fixed_tau } => (fixed_tau, 0.0),
        ControlPolicy::UnitaryControl { fixed_tau } => (fixed_tau, counter(stats)),
        ControlPolicy::RandomTau { tau_min, tau_max } => {
            (tau_min + (tau_max - tau_min) * rng.random::<f64>(), 0.0)
        }
        ControlPolicy::UnitaryAndRandomTau { tau_min, tau_max } => (
            tau_min + (tau_max - tau_min) * rng.random::<f64>(),
            counter(stats),
        ),
    }
}

/// Per-round record of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub tau: f64,
    pub omega_c: f64,
    pub syndrome: Syndrome,
    pub uncorrectable: bool,
    pub post_mean: (f64, f64),
    pub post_var: (f64, f64),
    pub sq_err: (f64, f64),
}

/// Trace of one simulation run against a fixed truth.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub true_omega: f64,
    pub true_gamma: f64,
    pub rounds: Vec<RoundRecord>,
}

/// Runs `rounds` rounds of simulated error correction against an explicit
/// truth: choose controls, sample a syndrome, update the posterior,
/// record. Deterministic for a fixed rng stream.
pub fn run_simulation_with_truth<R: Rng + ?Sized>(
    truth: (f64, f64),
    prior: &GaussianPrior2D,
    policy: &ControlPolicy,
    rounds: usize,
    rng: &mut R,
) -> Result<RunTrace, EstimationError> {
    let (true_omega, true_gamma) = truth;
    let mut posterior = GridPosterior::from_prior_default(prior)?;
    let mut stats = posterior.stats();
    let mut records = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let (tau, omega_c) = choose_control(policy, &stats, rng);
        let params =
            ChannelParams::new(true_omega, true_gamma, tau)?.with_counter_rotation(omega_c);
        let round = rep3_sample_syndrome(&params, rng);
        stats = posterior.update(round.syndrome, tau, omega_c)?;
        let err_omega = stats.mean_omega - true_omega;
        let err_gamma = stats.mean_gamma - true_gamma;
        records.push(RoundRecord {
            tau,
            omega_c,
            syndrome: round.syndrome,
            uncorrectable: round.uncorrectable,
            post_mean: (stats.mean_omega, stats.mean_gamma),
            post_var: (stats.var_omega, stats.var_gamma),
            sq_err: (err_omega * err_omega, err_gamma * err_gamma),
        });
    }
    Ok(RunTrace { true_omega, true_gamma, rounds: records })
}

/// Like [`run_simulation_with_truth`], with the truth sampled from the
/// prior first.
pub fn run_simulation<R: Rng + ?Sized>(
    prior: &GaussianPrior2D,
    policy: &ControlPolicy,
    rounds: usize,
    rng: &mut R,
) -> Result<RunTrace, EstimationError> {
    let truth = sample_true_params(prior, rng);
    run_simulation_with_truth(truth, prior, policy, rounds, rng)
}

/// Per-round aggregate over runs: median and interquartile range of the
/// squared errors (gamma scaled by 1e4 to share the omega scale) and the
/// no-uncorrectable-error survival probability with a 95% Wilson interval.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryRow {
    pub round: usize,
    pub sq_omega_median: f64,
    pub sq_omega_q1: f64,
    pub sq_omega_q3: f64,
    pub sq_gamma_x1e4_median: f64,
    pub sq_gamma_x1e4_q1: f64,
    pub sq_gamma_x1e4_q3: f64,
    pub survival_mean: f64,
    pub survival_lo: f64,
    pub survival_hi: f64,
}

pub fn aggregate_runs(traces: &[RunTrace]) -> Result<RunSummary, EstimationError> {
    if traces.len() < 2 {
        return Err(EstimationError::NoTraces);
    }
    let rounds = traces[0].rounds.len();
    if traces.iter().any(|t| t.rounds.len() != rounds) {
        return Err(EstimationError::TraceLengthMismatch);
    }
    let n_runs = traces.len();
    let mut alive = vec![true; n_runs];
    let mut sq_o = vec![0.0; n_runs];
    let mut sq_g = vec![0.0; n_runs];
    let mut rows = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let mut survivors = 0usize;
        for (k, trace) in traces.iter().enumerate() {
            let record = &trace.rounds[t];
            sq_o[k] = record.sq_err.0;
            sq_g[k] = record.sq_err.1 * 1e4;
            alive[k] &= !record.uncorrectable;
            survivors += alive[k] as usize;
        }
        let (mo, q1o, q3o) = median_iqr(&mut sq_o);
        let (mg, q1g, q3g) = median_iqr(&mut sq_g);
        let survival = survivors as f64 / n_runs as f64;
        let (lo, hi) = wilson_interval(survival, n_runs);
        rows.push(SummaryRow {
            round: t + 1,
            sq_omega_median: mo,
            sq_omega_q1: q1o,
            sq_omega_q3: q3o,
            sq_gamma_x1e4_median: mg,
            sq_gamma_x1e4_q1: q1g,
            sq_gamma_x1e4_q3: q3g,
            survival_mean: survival,
            survival_lo: lo,
            survival_hi: hi,
        });
    }
    Ok(RunSummary { rows })
}

/// Fiducial round duration: the smallest `tau` at which the
/// prior-averaged uncorrectable-error probability reaches `r_th`, with
/// the average taken over `n_draws` prior samples.
pub fn fiducial_tau<R: Rng + ?Sized>(
    prior: &GaussianPrior2D,
    r_th: f64,
    n_draws: usize,
    rng: &mut R,
) -> Result<f64, EstimationError> {
    let draws: Vec<(f64, f64)> = (0..n_draws).map(|_| sample_true_params(prior, rng)).collect();
    let code = crate::codes::RepetitionCode::new(3).expect("3 >= 3");
    let mean_r = |tau: f64| -> f64 {
        draws
            .iter()
            .map(|&(omega, gamma)| {
                code.uncorrectable(flip_probability(omega, gamma, tau, 0.0))
                    .expect("p in [0,1]")
            })
            .sum::<f64>()
            / n_draws as f64
    };
    // same bracket-and-bisect scheme as the per-point threshold
    let (mut lo, mut hi) = (1e-6, 50.0);
    if mean_r(lo) >= r_th {
        return Err(EstimationError::PosteriorExhausted);
    }
    let mut bracket = None;
    let scan = 5000;
    let mut prev = lo;
    for i in 1..=scan {
        let tau = lo + (hi - lo) * i as f64 / scan as f64;
        if mean_r(tau) >= r_th {
            bracket = Some((prev, tau));
            break;
        }
        prev = tau;
    }
    let (l, h) = bracket.ok_or(EstimationError::PosteriorExhausted)?;
    lo = l;
    hi = h;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mean_r(mid) < r_th {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid argmin of the summed squared flip-probability residuals against
/// the truth across one or more counter-rotation settings — the
/// infinite-data limit of Bayesian updating restricted to those settings.
/// With two distinct settings the minimum is the unique contour
/// intersection at the truth.
pub fn degeneracy_argmin(
    omega_axis: &[f64],
    gamma_axis: &[f64],
    truth: (f64, f64),
    tau: f64,
    omega_cs: &[f64],
) -> (usize, usize) {
    let targets: Vec<f64> = omega_cs
        .iter()
        .map(|&oc| flip_probability(truth.0, truth.1, tau, oc))
        .collect();
    let mut best = (0usize, 0usize);
    let mut best_val = f64::INFINITY;
    for (i, &omega) in omega_axis.iter().enumerate() {
        for (j, &gamma) in gamma_axis.iter().enumerate() {
            let residual: f64 = omega_cs
                .iter()
                .zip(&targets)
                .map(|(&oc, &target)| {
                    let d = flip_probability(omega, gamma, tau, oc) - target;
                    d * d
                })
                .sum();
            if residual < best_val {
                best_val = residual;
                best = (i, j);
            }
        }
    }
    best
}
