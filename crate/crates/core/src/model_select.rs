//! Bayesian discrimination of correlated vs. uncorrelated bit-flip noise
//! on the three-qubit code.
//!
//! The uncorrelated model `H0` flips each qubit independently with
//! probability `p`. The correlated model `H1` composes the independent
//! flips with simultaneous pair flips of qubits (1,2) and (2,3), each
//! with probability `q`; it reduces to `H0` at `q = 0`. Both models get
//! flat parameter priors, and syndrome rounds accumulate log-evidence
//! for each, from which the hypothesis posteriors follow.

use rand::Rng;
use thiserror::Error;

use crate::codes::{Syndrome, SyndromeDistribution};

#[derive(Debug, Error)]
pub enum ModelSelectError {
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("parameter grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("evidence update needs at least one syndrome")]
    NoData,
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("runs disagree on round count")]
    RunLengthMismatch,
}

/// Parameters of the spatially correlated error channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedParams {
    pub p: f64,
    pub q: f64,
}

impl CorrelatedParams {
    pub fn new(p: f64, q: f64) -> Result<Self, ModelSelectError> {
        for v in [p, q] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelSelectError::InvalidProbability(v));
            }
        }
        Ok(Self { p, q })
    }
}

/// Probabilities of the eight three-qubit flip patterns, indexed with
/// qubit 1 as the most significant bit (pattern `100` is index 4).
///
/// ```text
/// Pr(000) = (1-p)^3 (1-q)^2 + p^2 (1-p) q (2-q)
/// Pr(100) = Pr(001) = p (1-p)^2 (1-q+q^2) + p^3 q (1-q)
/// Pr(010) = p (1-p)^2 (1-q^2) + p^3 q^2
/// Pr(110) = Pr(011) = (1-p)^3 q (1-q) + p^2 (1-p) (1-q+q^2)
/// Pr(101) = (1-p)^3 q^2 + p^2 (1-p) (1-q^2)
/// Pr(111) = p (1-p)^2 q (2-q) + p^3 (1-q)^2
/// ```
pub fn correlated_error_string_probs(params: &CorrelatedParams) -> [f64; 8] {
    let (p, q) = (params.p, params.q);
    let (cp, cq) = (1.0 - p, 1.0 - q);
    let single = p * cp * cp * (1.0 - q + q * q) + p.powi(3) * q * cq;
    let double = cp.powi(3) * q * cq + p * p * cp * (1.0 - q + q * q);
    let mut probs = [0.0; 8];
    probs[0b000] = cp.powi(3) * cq * cq + p * p * cp * q * (2.0 - q);
    probs[0b100] = single;
    probs[0b001] = single;
    probs[0b010] = p * cp * cp * (1.0 - q * q) + p.powi(3) * q * q;
    probs[0b110] = double;
    probs[0b011] = double;
    probs[0b101] = cp.powi(3) * q * q + p * p * cp * (1.0 - q * q);
    probs[0b111] = p * cp * cp * q * (2.0 - q) + p.powi(3) * cq * cq;
    probs
}

/// Independent oracle for [`correlated_error_string_probs`]: enumerates
/// the three independent flips and the two pair-flip events (32 outcomes)
/// and composes flip patterns by XOR.
pub fn correlated_brute_force(params: &CorrelatedParams) -> [f64; 8] {
    let (p, q) = (params.p, params.q);
    let mut probs = [0.0; 8];
    for outcome in 0..32_usize {
        let a = outcome & 1;
        let b = (outcome >> 1) & 1;
        let c = (outcome >> 2) & 1;
        let pair23 = (outcome >> 3) & 1;
        let pair12 = (outcome >> 4) & 1;
        let bern = |bit: usize, prob: f64| if bit == 1 { prob } else { 1.0 - prob };
        let weight =
            bern(a, p) * bern(b, p) * bern(c, p) * bern(pair23, q) * bern(pair12, q);
        let e1 = a ^ pair12;
        let e2 = b ^ pair12 ^ pair23;
        let e3 = c ^ pair23;
        probs[(e1 << 2) | (e2 << 1) | e3] += weight;
    }
    probs
}

/// Probabilities of 0..=3 total flips under the correlated channel.
pub fn correlated_flip_count_probs(params: &CorrelatedParams) -> [f64; 4] {
    let (p, q) = (params.p, params.q);
    let (cp, cq) = (1.0 - p, 1.0 - q);
    let q2 = q * (2.0 - q);
    [
        cp.powi(3) * cq * cq + p * p * cp * q2,
        p * cp * cp * (3.0 - q2) + p.powi(3) * q2,
        cp.powi(3) * q2 + p * p * cp * (3.0 - q2),
        p * cp * cp * q2 + p.powi(3) * cq * cq,
    ]
}

/// Syndrome likelihoods of the correlated channel; at `q = 0` these
/// reduce to `Pr(00) = 1 - 3p(1-p)`, `Pr(S) = p(1-p)`.
pub fn correlated_syndrome_probs(params: &CorrelatedParams) -> SyndromeDistribution {
    let (p, q) = (params.p, params.q);
    let cq = 1.0 - q;
    let core = 1.0 - 3.0 * p * (1.0 - p);
    let pq = p * (1.0 - p);
    let off = core * q * cq + pq * (1.0 - q + q * q);
    SyndromeDistribution::new(
        2,
        vec![
            core * cq * cq + pq * q * (2.0 - q),
            off,
            off,
            core * q * q + pq * (1.0 - q * q),
        ],
    )
}

/// Maps a flip-pattern index (qubit 1 as most significant bit) through
/// the `ZZI`, `IZZ` parity checks.
fn syndrome_of_pattern(pattern: usize) -> Syndrome {
    let e1 = (pattern >> 2) & 1;
    let e2 = (pattern >> 1) & 1;
    let e3 = pattern & 1;
    Syndrome::from_value(((e1 ^ e2) | ((e2 ^ e3) << 1)) as u16, 2)
}

/// One sampled round under the correlated channel: an error pattern drawn
/// from the eight-outcome distribution, then the parity map. Keeping the
/// pattern around makes the uncorrectable flag available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelatedRound {
    pub syndrome: Syndrome,
    pub flips: u32,
    pub uncorrectable: bool,
}

pub fn sample_correlated_round<R: Rng + ?Sized>(
    params: &CorrelatedParams,
    rng: &mut R,
) -> CorrelatedRound {
    let probs = correlated_error_string_probs(params);
    let draw = rng.random::<f64>();
    let mut acc = 0.0;
    let mut pattern = 7;
    for (idx, &w) in probs.iter().enumerate() {
        acc += w;
        if draw < acc {
            pattern = idx;
            break;
        }
    }
    let flips = (pattern as u32).count_ones();
    CorrelatedRound {
        syndrome: syndrome_of_pattern(pattern),
        flips,
        uncorrectable: flips >= 2,
    }
}

/// The two error models under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `H0`: independent flips only.
    Uncorrelated,
    /// `H1`: independent flips plus pair flips.
    Correlated,
}

impl Hypothesis {
    pub fn name(&self) -> &'static str {
        match self {
            Hypothesis::Uncorrelated => "H0",
            Hypothesis::Correlated => "H1",
        }
    }
}

/// Flat parameter priors for both hypotheses: `p` on `[0, p_max]` under
/// both, `q` on `[0, q_max]` under `H1` only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisPrior {
    pub p_max: f64,
    pub q_max: f64,
    pub grid_points: usize,
}

impl HypothesisPrior {
    pub fn new(p_max: f64, q_max: f64, grid_points: usize) -> Result<Self, ModelSelectError> {
        for v in [p_max, q_max] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelSelectError::InvalidProbability(v));
            }
        }
        if grid_points < 2 {
            return Err(ModelSelectError::GridTooSmall(grid_points));
        }
        Ok(Self { p_max, q_max, grid_points })
    }

    /// The paper's setting: flat on `[0, 0.1]` for both parameters.
    pub fn flat_tenth() -> Self {
        Self { p_max: 0.1, q_max: 0.1, grid_points: 201 }
    }

    pub fn sample_params<R: Rng + ?Sized>(
        &self,
        hypothesis: Hypothesis,
        rng: &mut R,
    ) -> CorrelatedParams {
        let p = rng.random::<f64>() * self.p_max;
        let q = match hypothesis {
            Hypothesis::Uncorrelated => 0.0,
            Hypothesis::Correlated => rng.random::<f64>() * self.q_max,
        };
        CorrelatedParams { p, q }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Normalized trapezoid weights on a uniform grid.
fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Sequential evidence accumulator over both hypotheses.
///
/// Each hypothesis carries a quadrature grid over its parameters with
/// weights that start at the flat prior and are reweighted into the
/// parameter posterior; the predictive probability of each observed
/// syndrome accumulates into the hypothesis log-evidence.
#[derive(Debug, Clone)]
pub struct EvidenceState {
    p_axis: Vec<f64>,
    q_axis: Vec<f64>,
    // weights sum to 1 after every update
    w_h0: Vec<f64>,
    w_h1: Vec<f64>,
    // per-syndrome likelihood tables over the grids, indexed by syndrome value
    like_h0: [Vec<f64>; 4],
    like_h1: [Vec<f64>; 4],
    log_evidence: [f64; 2],
    rounds: usize,
}

impl EvidenceState {
    pub fn new(prior: &HypothesisPrior) -> Self {
        let n = prior.grid_points;
        let p_axis = linspace(0.0, prior.p_max, n);
        let q_axis = linspace(0.0, prior.q_max, n);
        let w_p = trapezoid_weights(n);
        let w_q = trapezoid_weights(n);

        let mut like_h0: [Vec<f64>; 4] = Default::default();
        for table in like_h0.iter_mut() {
            table.reserve(n);
        }
        for &p in &p_axis {
            let dist = correlated_syndrome_probs(&CorrelatedParams { p, q: 0.0 });
            for (s, table) in like_h0.iter_mut().enumerate() {
                table.push(dist.prob_of_value(s as u16));
            }
        }

        let mut like_h1: [Vec<f64>; 4] = Default::default();
        for table in like_h1.iter_mut() {
            table.reserve(n * n);
        }
        let mut w_h1 = Vec::with_capacity(n * n);
        for (i, &p) in p_axis.iter().enumerate() {
            for (j, &q) in q_axis.iter().enumerate() {
                let dist = correlated_syndrome_probs(&CorrelatedParams { p, q });
                for (s, table) in like_h1.iter_mut().enumerate() {
                    table.push(dist.prob_of_value(s as u16));
                }
                w_h1.push(w_p[i] * w_q[j]);
            }
        }

        Self {
            p_axis,
            q_axis,
            w_h0: w_p,
            w_h1,
            like_h0,
            like_h1,
            log_evidence: [0.0; 2],
            rounds: 0,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn p_axis(&self) -> &[f64] {
        &self.p_axis
    }

    pub fn q_axis(&self) -> &[f64] {
        &self.q_axis
    }

    pub fn log_evidence(&self, hypothesis: Hypothesis) -> f64 {
        match hypothesis {
            Hypothesis::Uncorrelated => self.log_evidence[0],
            Hypothesis::Correlated => self.log_evidence[1],
        }
    }

    /// Predictive probability of a syndrome under one hypothesis given
    /// the current parameter weights.
    pub fn marginal_syndrome_prob(&self, hypothesis: Hypothesis, syndrome: Syndrome) -> f64 {
        let s = syndrome.value() as usize;
        match hypothesis {
            Hypothesis::Uncorrelated => dot(&self.w_h0, &self.like_h0[s]),
            Hypothesis::Correlated => dot(&self.w_h1, &self.like_h1[s]),
        }
    }

    /// Posterior pair `(Pr(H0|D), Pr(H1|D))` under equal hypothesis priors.
    pub fn posterior_pair(&self) -> (f64, f64) {
        let peak = self.log_evidence[0].max(self.log_evidence[1]);
        let e0 = (self.log_evidence[0] - peak).exp();
        let e1 = (self.log_evidence[1] - peak).exp();
        (e0 / (e0 + e1), e1 / (e0 + e1))
    }

    /// Folds one observed syndrome into both hypotheses: log-evidence
    /// grows by the log predictive probability and the parameter weights
    /// are reweighted by the likelihood and renormalized.
    pub fn sequential_update(&mut self, syndrome: Syndrome) -> Result<(), ModelSelectError> {
        let s = syndrome.value() as usize;
        let pred0 = reweigh(&mut self.w_h0, &self.like_h0[s]);
        let pred1 = reweigh(&mut self.w_h1, &self.like_h1[s]);
        if !(pred0 > 0.0) || !(pred1 > 0.0) {
            return Err(ModelSelectError::NoData);
        }
        self.log_evidence[0] += pred0.ln();
        self.log_evidence[1] += pred1.ln();
        self.rounds += 1;
        if self.rounds.is_multiple_of(100) {
            // rebaseline so very long streams cannot underflow the pair
            let peak = self.log_evidence[0].max(self.log_evidence[1]);
            self.log_evidence[0] -= peak;
            self.log_evidence[1] -= peak;
        }
        Ok(())
    }
}

fn dot(w: &[f64], like: &[f64]) -> f64 {
    w.iter().zip(like).map(|(a, b)| a * b).sum()
}

/// Multiplies weights by the likelihood and renormalizes; returns the
/// predictive probability (the pre-normalization mass).
fn reweigh(w: &mut [f64], like: &[f64]) -> f64 {
    let mut mass = 0.0;
    for (v, &l) in w.iter_mut().zip(like) {
        *v *= l;
        mass += *v;
    }
    if mass > 0.0 {
        let inv = 1.0 / mass;
        w.iter_mut().for_each(|v| *v *= inv);
    }
    mass
}

/// Posterior-pair trajectory of a single run; entry `t` is the pair
/// after `t + 1` rounds.
#[derive(Debug, Clone)]
pub struct HypothesisRun {
    pub posteriors: Vec<(f64, f64)>,
}

/// Streams sampled syndromes from a fixed true channel through a fresh
/// evidence state.
pub fn run_hypothesis_trial<R: Rng + ?Sized>(
    prior: &HypothesisPrior,
    truth: &CorrelatedParams,
    rounds: usize,
    rng: &mut R,
) -> Result<HypothesisRun, ModelSelectError> {
    let mut state = EvidenceState::new(prior);
    let mut posteriors = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let round = sample_correlated_round(truth, rng);
        state.sequential_update(round.syndrome)?;
        posteriors.push(state.posterior_pair());
    }
    Ok(HypothesisRun { posteriors })
}

/// Per-round medians and interquartile ranges of both hypothesis
/// posteriors across runs. Row 0 is the round-0 state (both exactly 1/2).
#[derive(Debug, Clone)]
pub struct HypothesisSummary {
    pub rows: Vec<HypothesisSummaryRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct HypothesisSummaryRow {
    pub round: usize,
    pub h0_median: f64,
    pub h0_q1: f64,
    pub h0_q3: f64,
    pub h1_median: f64,
    pub h1_q1: f64,
    pub h1_q3: f64,
}

pub fn aggregate_hypothesis_runs(
    runs: &[HypothesisRun],
) -> Result<HypothesisSummary, ModelSelectError> {
    if runs.is_empty() {
        return Err(ModelSelectError::NoRuns);
    }
    let rounds = runs[0].posteriors.len();
    if runs.iter().any(|r| r.posteriors.len() != rounds) {
        return Err(ModelSelectError::RunLengthMismatch);
    }
    let mut rows = Vec::with_capacity(rounds + 1);
    rows.push(HypothesisSummaryRow {
        round: 0,
        h0_median: 0.5,
        h0_q1: 0.5,
        h0_q3: 0.5,
        h1_median: 0.5,
        h1_q1: 0.5,
        h1_q3: 0.5,
    });
    let mut h0 = vec![0.0; runs.len()];
    let mut h1 = vec![0.0; runs.len()];
    for t in 0..rounds {
        for (k, run) in runs.iter().enumerate() {
            h0[k] = run.posteriors[t].0;
            h1[k] = run.posteriors[t].1;
        }
        let (m0, q10, q30) = crate::stats::median_iqr(&mut h0);
        let (m1, q11, q31) = crate::stats::median_iqr(&mut h1);
        rows.push(HypothesisSummaryRow {
            round: t + 1,
            h0_median: m0,
            h0_q1: q10,
            h0_q3: q30,
            h1_median: m1,
            h1_q1: q11,
            h1_q3: q31,
        });
    }
    Ok(HypothesisSummary { rows })
}

/// Full experiment with truth drawn from the prior of `true_hypothesis`
/// in each run. Sequential; callers that parallelize should drive
/// [`run_hypothesis_trial`] with per-run rng streams instead.
pub fn simulate_hypothesis_experiment<R: Rng + ?Sized>(
    true_hypothesis: Hypothesis,
    prior: &HypothesisPrior,
    rounds: usize,
    n_runs: usize,
    rng: &mut R,
) -> Result<HypothesisSummary, ModelSelectError> {
    let mut runs = Vec::with_capacity(n_runs);
    for _ in 0..n_runs {
        let truth = prior.sample_params(true_hypothesis, rng);
        runs.push(run_hypothesis_trial(prior, &truth, rounds, rng)?);
    }
    aggregate_hypothesis_runs(&runs)
}
