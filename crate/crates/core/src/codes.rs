//! Syndrome likelihoods and failure probabilities for the repetition
//! codes and the five-qubit perfect code.
//!
//! The repetition-code syndrome convention follows the parity checks
//! `Z(x)Z(x)I` and `I(x)Z(x)Z`: bit 0 is the parity of the first two
//! qubits, bit 1 the parity of the last two, 0 meaning even. Five-qubit
//! syndromes use one bit per stabilizer generator, 1 when the error
//! anticommutes with that generator, ordered as the generator list.

use rand::Rng;
use thiserror::Error;

use crate::channel::{composite_coeffs, ChannelParams, FlipProbs};

#[derive(Debug, Error)]
pub enum CodesError {
    #[error("repetition code needs at least 3 qubits, got {0}")]
    CodeTooSmall(usize),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("Chernoff bound is vacuous for x = {0} >= 1")]
    VacuousBound(f64),
    #[error("uncorrectable-error probability never crosses {r_th} inside [{lo}, {hi}]")]
    NoCrossing { r_th: f64, lo: f64, hi: f64 },
    #[error("threshold {0} must lie strictly between the bracket endpoints' values")]
    InvalidThreshold(f64),
}

/// Outcome bit string of the stabilizer parity measurements.
///
/// Bit `k` of `value` is the outcome for generator `k`; `label` prints
/// bit 0 first, matching the written forms `00`, `10`, `01`, `11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syndrome {
    value: u16,
    bits: u8,
}

impl Syndrome {
    pub fn from_value(value: u16, bits: u8) -> Self {
        debug_assert!((1..=16).contains(&bits) && value < (1 << bits));
        Self { value, bits }
    }

    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn bit(&self, k: u8) -> bool {
        (self.value >> k) & 1 == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.value == 0
    }

    pub fn label(&self) -> String {
        (0..self.bits).map(|k| if self.bit(k) { '1' } else { '0' }).collect()
    }
}

/// Probabilities over all syndromes of a code, indexed by syndrome value.
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeDistribution {
    bits: u8,
    probs: Vec<f64>,
}

impl SyndromeDistribution {
    pub fn new(bits: u8, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << bits);
        Self { bits, probs }
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn prob(&self, syndrome: Syndrome) -> f64 {
        debug_assert_eq!(syndrome.bits, self.bits);
        self.probs[syndrome.value as usize]
    }

    pub fn prob_of_value(&self, value: u16) -> f64 {
        self.probs[value as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Syndrome, f64)> + '_ {
        let bits = self.bits;
        self.probs
            .iter()
            .enumerate()
            .map(move |(v, &p)| (Syndrome::from_value(v as u16, bits), p))
    }
}

/// Syndrome of a three-qubit flip pattern under the `ZZI`, `IZZ` checks.
pub fn rep3_syndrome_of_flips(flips: [bool; 3]) -> Syndrome {
    let bit0 = (flips[0] ^ flips[1]) as u16;
    let bit1 = (flips[1] ^ flips[2]) as u16;
    Syndrome::from_value(bit0 | (bit1 << 1), 2)
}

/// Three-qubit syndrome likelihoods: `Pr(00) = P^3 + Q^3` and
/// `Pr(S) = P Q` for each nontrivial syndrome, with `(P, Q)` from the
/// composite channel (counter-rotation applied inside).
pub fn rep3_syndrome_likelihood(params: &ChannelParams) -> SyndromeDistribution {
    let cc = composite_coeffs(params);
    let (p, q) = (cc.p, cc.q);
    let trivial = p * p * p + q * q * q;
    let single = p * q;
    SyndromeDistribution::new(2, vec![trivial, single, single, single])
}

/// One sampled round of three-qubit error correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledRound {
    pub syndrome: Syndrome,
    pub flips: u32,
    pub uncorrectable: bool,
}

/// Samples each qubit's flip independently with the composite flip
/// probability and maps the pattern through the parity checks. Two or
/// more flips decode to the wrong correction.
pub fn rep3_sample_syndrome<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> SampledRound {
    let p = composite_coeffs(params).p;
    let flips = [
        rng.random::<f64>() < p,
        rng.random::<f64>() < p,
        rng.random::<f64>() < p,
    ];
    let count = flips.iter().filter(|&&f| f).count() as u32;
    SampledRound {
        syndrome: rep3_syndrome_of_flips(flips),
        flips: count,
        uncorrectable: count >= 2,
    }
}

/// M-qubit repetition code, `M >= 3`. Corrects up to `M'/2 - 1` flips
/// with `M' = M + s`, `s = 1` for odd `M` and `s = 0` for even `M`;
/// ties at `M/2` flips for even `M` count as uncorrectable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepetitionCode {
    m: usize,
}

impl RepetitionCode {
    pub fn new(m: usize) -> Result<Self, CodesError> {
        if m < 3 {
            return Err(CodesError::CodeTooSmall(m));
        }
        Ok(Self { m })
    }

    pub fn qubits(&self) -> usize {
        self.m
    }

    fn parity_pad(&self) -> usize {
        self.m % 2
    }

    /// Binomial distribution of the number of flipped qubits.
    pub fn flip_distribution(&self, p: f64) -> Result<Vec<f64>, CodesError> {
        check_probability(p)?;
        Ok(binomial_pmf(self.m, p))
    }

    /// Upper binomial tail `Pr[flips >= M'/2]`, the per-round probability
    /// of an uncorrectable error.
    pub fn uncorrectable(&self, p: f64) -> Result<f64, CodesError> {
        check_probability(p)?;
        let pmf = binomial_pmf(self.m, p);
        let from = (self.m + self.parity_pad()) / 2;
        // ascending-magnitude sum for small p
        Ok(pmf[from..].iter().rev().sum())
    }

    /// Chernoff upper bound on [`Self::uncorrectable`] with
    /// `x = 2 P M / M'`: `exp(-(M/2) (1-x)^2 / (1+x))`. Vacuous (rejected)
    /// for `x >= 1`.
    pub fn chernoff_bound(&self, p: f64) -> Result<f64, CodesError> {
        check_probability(p)?;
        let m = self.m as f64;
        let m_prime = (self.m + self.parity_pad()) as f64;
        let x = 2.0 * p * m / m_prime;
        if x >= 1.0 {
            return Err(CodesError::VacuousBound(x));
        }
        Ok((-(m / 2.0) * (1.0 - x).powi(2) / (1.0 + x)).exp())
    }

    /// Flip probability at which the uncorrectable-error probability
    /// reaches `r_th`, by bisection to within 1e-12.
    pub fn p_threshold(&self, r_th: f64) -> Result<f64, CodesError> {
        check_probability(r_th)?;
        if r_th <= 0.0 || r_th >= 1.0 {
            return Err(CodesError::InvalidThreshold(r_th));
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.uncorrectable(mid)? < r_th {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Smallest duration at which the per-round uncorrectable-error
    /// probability of the composite channel reaches `r_th`.
    ///
    /// `R(tau)` oscillates once `omega tau` is large, so the bracket
    /// `[1e-6, 50]` is pre-scanned for the first upward crossing before
    /// bisecting to `|d tau| <= 1e-9`.
    pub fn tau_threshold(&self, omega: f64, gamma: f64, r_th: f64) -> Result<f64, CodesError> {
        const LO: f64 = 1e-6;
        const HI: f64 = 50.0;
        const SCAN: usize = 20_000;

        let r_at = |tau: f64| -> Result<f64, CodesError> {
            let p = composite_coeffs(
                &ChannelParams::new(omega, gamma, tau)
                    .map_err(|_| CodesError::InvalidProbability(f64::NAN))?,
            )
            .p;
            self.uncorrectable(p)
        };

        let mut prev_tau = LO;
        let mut prev_r = r_at(prev_tau)?;
        if prev_r >= r_th {
            return Err(CodesError::NoCrossing { r_th, lo: LO, hi: HI });
        }
        let mut bracket = None;
        for i in 1..=SCAN {
            let tau = LO + (HI - LO) * i as f64 / SCAN as f64;
            let r = r_at(tau)?;
            if prev_r < r_th && r >= r_th {
                bracket = Some((prev_tau, tau));
                break;
            }
            prev_tau = tau;
            prev_r = r;
        }
        let (mut lo, mut hi) = bracket.ok_or(CodesError::NoCrossing { r_th, lo: LO, hi: HI })?;
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if r_at(mid)? < r_th {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_probability(p: f64) -> Result<(), CodesError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CodesError::InvalidProbability(p));
    }
    Ok(())
}

/// Binomial pmf over `0..=m` successes; coefficients from Pascal's rule.
fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut coef = vec![1.0_f64];
    for _ in 0..m {
        let mut next = vec![0.0; coef.len() + 1];
        for (k, &c) in coef.iter().enumerate() {
            next[k] += c;
            next[k + 1] += c;
        }
        coef = next;
    }
    coef.iter()
        .enumerate()
        .map(|(k, &c)| c * p.powi(k as i32) * q.powi((m - k) as i32))
        .collect()
}

/// Single-qubit Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }
}

use Pauli::{I, X, Y, Z};

/// Cyclic stabilizer generators of the five-qubit perfect code.
pub const FIVE_QUBIT_GENERATORS: [[Pauli; 5]; 4] = [
    [X, Z, Z, X, I],
    [I, X, Z, Z, X],
    [X, I, X, Z, Z],
    [Z, X, I, X, Z],
];

/// The 16 five-qubit syndromes fall into four classes of constant
/// probability, of sizes 1, 5, 5, 5.
pub const FIVE_QUBIT_CLASSES: [&[u16]; 4] = [
    &[0b0000],
    &[0b0001, 0b0011, 0b0110, 0b1000, 0b1100],
    &[0b0010, 0b0100, 0b0101, 0b1001, 0b1010],
    &[0b0111, 0b1011, 0b1101, 0b1110, 0b1111],
];

/// Syndrome of a five-qubit Pauli error string: bit `k` is set when the
/// string anticommutes with generator `k`.
pub fn five_qubit_syndrome_of_error(error: &[Pauli; 5]) -> Syndrome {
    let mut value = 0u16;
    for (k, gen) in FIVE_QUBIT_GENERATORS.iter().enumerate() {
        let mut bit = false;
        for i in 0..5 {
            bit ^= error[i].anticommutes(gen[i]);
        }
        value |= (bit as u16) << k;
    }
    Syndrome::from_value(value, 4)
}

/// Per-syndrome probabilities, constant within each of the four classes.
/// The normalization is `s0 + 5 s1 + 5 s2 + 5 s3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveQubitClassProbs {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl FiveQubitClassProbs {
    pub fn normalization(&self) -> f64 {
        self.s0 + 5.0 * (self.s1 + self.s2 + self.s3)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    /// Probability of the class that `syndrome` belongs to.
    pub fn prob_of_syndrome(&self, syndrome: Syndrome) -> f64 {
        let v = syndrome.value();
        for (class, members) in FIVE_QUBIT_CLASSES.iter().enumerate() {
            if members.contains(&v) {
                return self.as_array()[class];
            }
        }
        unreachable!("every 4-bit syndrome belongs to a class")
    }
}

// Class polynomials in (P_x, P_y, P_z), monomials as (coef, i, j, k)
// meaning coef * P_x^i * P_y^j * P_z^k. Exact integer coefficients from a
// symbolic expansion of the 4^5 error strings over the generators above;
// certified against the enumeration oracle and against the published
// depolarizing special case.
const S0_TERMS: [(f64, u8, u8, u8); 35] = [
    (1.0, 0, 0, 0), (-5.0, 0, 0, 1), (-5.0, 0, 1, 0), (-5.0, 1, 0, 0), (10.0, 0, 0, 2),
    (20.0, 0, 1, 1), (10.0, 0, 2, 0), (20.0, 1, 0, 1), (20.0, 1, 1, 0), (10.0, 2, 0, 0),
    (-10.0, 0, 0, 3), (-25.0, 0, 1, 2), (-25.0, 0, 2, 1), (-10.0, 0, 3, 0), (-25.0, 1, 0, 2),
    (-60.0, 1, 1, 1), (-25.0, 1, 2, 0), (-25.0, 2, 0, 1), (-25.0, 2, 1, 0), (-10.0, 3, 0, 0),
    (5.0, 0, 0, 4), (10.0, 0, 1, 3), (15.0, 0, 2, 2), (10.0, 0, 3, 1), (5.0, 0, 4, 0),
    (10.0, 1, 0, 3), (40.0, 1, 1, 2), (40.0, 1, 2, 1), (10.0, 1, 3, 0), (15.0, 2, 0, 2),
    (40.0, 2, 1, 1), (15.0, 2, 2, 0), (10.0, 3, 0, 1), (10.0, 3, 1, 0), (5.0, 4, 0, 0),
];
const S1_TERMS: [(f64, u8, u8, u8); 29] = [
    (1.0, 1, 0, 0), (1.0, 0, 0, 2), (1.0, 0, 2, 0), (-2.0, 1, 0, 1), (-2.0, 1, 1, 0),
    (-4.0, 2, 0, 0), (-2.0, 0, 0, 3), (-1.0, 0, 1, 2), (-1.0, 0, 2, 1), (-2.0, 0, 3, 0),
    (-1.0, 1, 0, 2), (4.0, 1, 1, 1), (-1.0, 1, 2, 0), (7.0, 2, 0, 1), (7.0, 2, 1, 0),
    (6.0, 3, 0, 0), (1.0, 0, 0, 4), (2.0, 0, 1, 3), (-1.0, 0, 2, 2), (2.0, 0, 3, 1),
    (1.0, 0, 4, 0), (2.0, 1, 0, 3), (2.0, 1, 3, 0), (-1.0, 2, 0, 2), (-8.0, 2, 1, 1),
    (-1.0, 2, 2, 0), (-6.0, 3, 0, 1), (-6.0, 3, 1, 0), (-3.0, 4, 0, 0),
];
const S2_TERMS: [(f64, u8, u8, u8); 29] = [
    (1.0, 0, 0, 1), (-4.0, 0, 0, 2), (-2.0, 0, 1, 1), (1.0, 0, 2, 0), (-2.0, 1, 0, 1),
    (1.0, 2, 0, 0), (6.0, 0, 0, 3), (7.0, 0, 1, 2), (-1.0, 0, 2, 1), (-2.0, 0, 3, 0),
    (7.0, 1, 0, 2), (4.0, 1, 1, 1), (-1.0, 1, 2, 0), (-1.0, 2, 0, 1), (-1.0, 2, 1, 0),
    (-2.0, 3, 0, 0), (-3.0, 0, 0, 4), (-6.0, 0, 1, 3), (-1.0, 0, 2, 2), (2.0, 0, 3, 1),
    (1.0, 0, 4, 0), (-6.0, 1, 0, 3), (-8.0, 1, 1, 2), (2.0, 1, 3, 0), (-1.0, 2, 0, 2),
    (-1.0, 2, 2, 0), (2.0, 3, 0, 1), (2.0, 3, 1, 0), (1.0, 4, 0, 0),
];
const S3_TERMS: [(f64, u8, u8, u8); 29] = [
    (1.0, 0, 1, 0), (1.0, 0, 0, 2), (-2.0, 0, 1, 1), (-4.0, 0, 2, 0), (-2.0, 1, 1, 0),
    (1.0, 2, 0, 0), (-2.0, 0, 0, 3), (-1.0, 0, 1, 2), (7.0, 0, 2, 1), (6.0, 0, 3, 0),
    (-1.0, 1, 0, 2), (4.0, 1, 1, 1), (7.0, 1, 2, 0), (-1.0, 2, 0, 1), (-1.0, 2, 1, 0),
    (-2.0, 3, 0, 0), (1.0, 0, 0, 4), (2.0, 0, 1, 3), (-1.0, 0, 2, 2), (-6.0, 0, 3, 1),
    (-3.0, 0, 4, 0), (2.0, 1, 0, 3), (-8.0, 1, 2, 1), (-6.0, 1, 3, 0), (-1.0, 2, 0, 2),
    (-1.0, 2, 2, 0), (2.0, 3, 0, 1), (2.0, 3, 1, 0), (1.0, 4, 0, 0),
];

fn eval_terms(terms: &[(f64, u8, u8, u8)], fp: &FlipProbs) -> f64 {
    let pow = |base: f64| -> [f64; 5] {
        let mut out = [1.0; 5];
        for k in 1..5 {
            out[k] = out[k - 1] * base;
        }
        out
    };
    let xp = pow(fp.p_x);
    let yp = pow(fp.p_y);
    let zp = pow(fp.p_z);
    terms
        .iter()
        .map(|&(c, i, j, k)| c * xp[i as usize] * yp[j as usize] * zp[k as usize])
        .sum()
}

/// Closed-form five-qubit syndrome-class likelihoods as polynomials in
/// `(P_x, P_y, P_z)`.
pub fn five_qubit_class_likelihood(fp: &FlipProbs) -> FiveQubitClassProbs {
    FiveQubitClassProbs {
        s0: eval_terms(&S0_TERMS, fp),
        s1: eval_terms(&S1_TERMS, fp),
        s2: eval_terms(&S2_TERMS, fp),
        s3: eval_terms(&S3_TERMS, fp),
    }
}

/// Depolarizing special case, `P_x = P_y = P_z = P/3`:
/// `Pr(0000) = 1 - (5/27)(27P - 54P^2 + 48P^3 - 16P^4)` and each of the
/// 15 other syndromes carries `(1/81)` of the same quartic.
pub fn five_qubit_depolarizing_likelihood(p: f64) -> Result<(f64, f64), CodesError> {
    check_probability(p)?;
    let quartic = 27.0 * p - 54.0 * p * p + 48.0 * p.powi(3) - 16.0 * p.powi(4);
    Ok((1.0 - 5.0 / 27.0 * quartic, quartic / 81.0))
}

/// Independent oracle: enumerates all 4^5 Pauli error strings, weighting
/// each by the product of per-qubit probabilities, and accumulates the
/// probability of each of the 16 syndromes.
pub fn five_qubit_brute_force(fp: &FlipProbs) -> SyndromeDistribution {
    let weights = fp.as_array();
    let mut probs = vec![0.0_f64; 16];
    let paulis = [I, X, Y, Z];
    for code in 0..4_usize.pow(5) {
        let mut error = [I; 5];
        let mut weight = 1.0;
        let mut rest = code;
        for slot in error.iter_mut() {
            let digit = rest % 4;
            rest /= 4;
            *slot = paulis[digit];
            weight *= weights[digit];
        }
        probs[five_qubit_syndrome_of_error(&error).value() as usize] += weight;
    }
    SyndromeDistribution::new(4, probs)
}
