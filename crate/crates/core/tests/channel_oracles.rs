//! Independent re-derivations of the channel algebra used as oracles.
//!
//! The process matrix of the composed rotation + anisotropic-noise
//! channel is assembled here directly from the operator-sum expansion of
//! `U . E`, term by term, and compared against the transfer-matrix /
//! Choi route implemented in the library.

// index loops mirror the tensor formulas
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qecinsitu_core::channel::{
    anisotropic_effective, choi_of_unital, flip_probs_of_choi, rotation_matrix,
    transfer_matrix_of_anisotropic, AnisotropicParams,
};

fn levi_civita(j: usize, k: usize, l: usize) -> f64 {
    match (j, k, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Process matrix of `U . E` assembled from the operator-sum expansion:
/// each term `t * s_a rho s_b` contributes `2t` to `chi_ab`.
fn chi_from_expansion(p: [f64; 3], n: [f64; 3], theta: f64) -> [[Complex64; 4]; 4] {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let q: f64 = p.iter().sum();
    let i = Complex64::new(0.0, 1.0);
    let mut chi = [[Complex64::new(0.0, 0.0); 4]; 4];

    // identity piece
    let keep: f64 = (1.0 - q) * c * c + s * s * (0..3).map(|j| p[j] * n[j] * n[j]).sum::<f64>();
    chi[0][0] += Complex64::new(2.0 * keep, 0.0);

    for j in 0..3 {
        // c^2 p_j  s_j rho s_j
        chi[j + 1][j + 1] += Complex64::new(2.0 * c * c * p[j], 0.0);
        for k in 0..3 {
            // (1-q) s^2 n_j n_k  s_j rho s_k
            chi[j + 1][k + 1] += Complex64::new(2.0 * (1.0 - q) * s * s * n[j] * n[k], 0.0);
            // s^2 e_jlm e_kln p_l n_m n_n  s_j rho s_k
            let mut sum = 0.0;
            for l in 0..3 {
                for m in 0..3 {
                    for nn in 0..3 {
                        sum += levi_civita(j, l, m) * levi_civita(k, l, nn) * p[l] * n[m] * n[nn];
                    }
                }
            }
            chi[j + 1][k + 1] += Complex64::new(2.0 * s * s * sum, 0.0);
            // sc e_jkl n_j (p_k - p_l)  s_k rho s_l, relabeled onto (j,k)
            let mut skew = 0.0;
            for l in 0..3 {
                skew += levi_civita(l, j, k) * n[l] * (p[j] - p[k]);
            }
            chi[j + 1][k + 1] += Complex64::new(2.0 * s * c * skew, 0.0);
        }
        // -i (1-q) sc [n.sigma, rho]
        chi[j + 1][0] += -i * 2.0 * (1.0 - q) * s * c * n[j];
        chi[0][j + 1] += i * 2.0 * (1.0 - q) * s * c * n[j];
        // -i sc p_j n_j [rho, s_j]
        chi[0][j + 1] += -i * 2.0 * s * c * p[j] * n[j];
        chi[j + 1][0] += i * 2.0 * s * c * p[j] * n[j];
    }
    // +i s^2 e_jkl p_j n_j n_k [rho, s_l]
    for l in 0..3 {
        let mut sum = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                sum += levi_civita(j, k, l) * p[j] * n[j] * n[k];
            }
        }
        chi[0][l + 1] += i * 2.0 * s * s * sum;
        chi[l + 1][0] += -i * 2.0 * s * s * sum;
    }
    chi
}

fn random_point<R: Rng>(rng: &mut R) -> ([f64; 3], [f64; 3], f64) {
    let draw = |rng: &mut R| -> f64 { -(1.0 - rng.random::<f64>()).ln() };
    let e = [draw(rng), draw(rng), draw(rng), draw(rng)];
    let total: f64 = e.iter().sum();
    let p = [e[1] / total, e[2] / total, e[3] / total];
    let axis = loop {
        let v = [
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            break [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    };
    (p, axis, rng.random::<f64>() * 12.0 - 6.0)
}

#[test]
fn choi_route_matches_operator_sum_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let (p, axis, theta) = random_point(&mut rng);
        let b = rotation_matrix(axis, theta)
            .unwrap()
            .compose(&transfer_matrix_of_anisotropic(p[0], p[1], p[2]).unwrap());
        let chi = choi_of_unital(&b);
        let oracle = chi_from_expansion(p, axis, theta);
        for a in 0..4 {
            for bb in 0..4 {
                let diff = (chi.element(a, bb) - oracle[a][bb]).norm();
                assert!(
                    diff < 1e-10,
                    "chi[{a}][{bb}] = {} vs oracle {} (diff {diff})",
                    chi.element(a, bb),
                    oracle[a][bb]
                );
            }
        }
    }
}

#[test]
fn expansion_diagonal_reproduces_effective_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..100 {
        let (p, axis, theta) = random_point(&mut rng);
        let oracle = chi_from_expansion(p, axis, theta);
        let direct = anisotropic_effective(
            &AnisotropicParams::new(p[0], p[1], p[2], axis, theta).unwrap(),
        );
        let expect = direct.as_array();
        for d in 0..4 {
            assert!((0.5 * oracle[d][d].re - expect[d]).abs() < 1e-12);
            assert!(oracle[d][d].im.abs() < 1e-14);
        }
    }
}

#[test]
fn flip_probs_survive_the_full_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..1000 {
        let (p, axis, theta) = random_point(&mut rng);
        let b = rotation_matrix(axis, theta)
            .unwrap()
            .compose(&transfer_matrix_of_anisotropic(p[0], p[1], p[2]).unwrap());
        let via_choi = flip_probs_of_choi(&choi_of_unital(&b)).unwrap();
        let direct = anisotropic_effective(
            &AnisotropicParams::new(p[0], p[1], p[2], axis, theta).unwrap(),
        );
        for (a, b) in via_choi.as_array().iter().zip(direct.as_array()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
