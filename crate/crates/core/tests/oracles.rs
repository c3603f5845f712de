//! Independent oracles and seeded statistical checks.

use lunmeb_core::discrimination::{
    assemble_povm, build_duals, build_representatives, conclusive_probability,
    outcome_probabilities, paper_a, AChoice, PhaseConvention,
};
use lunmeb_core::lunmeb::{build_class, extendability_matrix, produced_vector};
use lunmeb_core::numkit::{determinant, fourier_matrix, hermitian_eigen};
use lunmeb_core::operators::{
    is_unitary, LocalOperator, OperatorBasis, OperatorCombination, Provenance,
};
use lunmeb_core::sdc::{capacity_nme, capacity_report, capacity_subspace, simulate_protocol};
use lunmeb_core::states::from_probabilities;
use lunmeb_core::{CMatrix, CVector, SchmidtState, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Leibniz expansion over all permutations.
fn leibniz_det(m: &CMatrix) -> C64 {
    fn permute(
        m: &CMatrix,
        row: usize,
        used: &mut Vec<bool>,
        sign: f64,
        acc: C64,
        total: &mut C64,
    ) {
        let n = m.rows();
        if row == n {
            *total += acc * sign;
            return;
        }
        // sign flips once per used column to the right of the chosen one
        for col in 0..n {
            if used[col] {
                continue;
            }
            let inversions = used[col + 1..].iter().filter(|&&u| u).count();
            let s = if inversions % 2 == 0 { sign } else { -sign };
            used[col] = true;
            permute(m, row + 1, used, s, acc * m.get(row, col), total);
            used[col] = false;
        }
    }
    let mut total = C64::new(0.0, 0.0);
    permute(
        m,
        0,
        &mut vec![false; m.rows()],
        1.0,
        C64::new(1.0, 0.0),
        &mut total,
    );
    total
}

#[test]
fn determinant_matches_permutation_expansion() {
    for d in 2..=6 {
        let f = fourier_matrix(d);
        let lu = determinant(&f).unwrap();
        let oracle = leibniz_det(&f);
        assert!((lu - oracle).norm() < 1e-9 * oracle.norm(), "d={d}");
        let normalized = oracle.norm() / (d as f64).powf(d as f64 / 2.0);
        assert!((normalized - 1.0).abs() < 1e-12, "d={d}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=5 {
        let m = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        assert!((determinant(&m).unwrap() - leibniz_det(&m)).norm() < 1e-12);
    }
}

#[test]
fn leibniz_oracle_sanity() {
    let m = CMatrix::from_row_major(
        2,
        2,
        vec![
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(3.0, 0.0),
            C64::new(4.0, 0.0),
        ],
    )
    .unwrap();
    assert!((leibniz_det(&m) - C64::new(-2.0, 0.0)).norm() < 1e-15);
}

/// Angles with `Σ p_k e^{iθ_k} = 0` for three lengths obeying the triangle inequality.
fn closing_phases(p: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = p;
    // b e^{iθ1} + c e^{iθ2} = −a with θ0 = 0
    let cos_t1 = (c * c - a * a - b * b) / (2.0 * a * b);
    let t1 = cos_t1.acos();
    let z = -(C64::new(a, 0.0) + C64::from_polar(b, t1));
    [0.0, t1, z.arg()]
}

#[test]
fn diagonal_unitary_extends_a_qutrit_class() {
    let tol = Tolerances::default();
    let p = [0.25, 0.35, 0.4];
    let s = from_probabilities(3, &p).unwrap();
    let theta = closing_phases(p);
    let closure: C64 = (0..3).map(|k| C64::from_polar(p[k], theta[k])).sum();
    assert!(closure.norm() < 1e-14);

    let mut e = vec![C64::new(0.0, 0.0); 9];
    for k in 0..3 {
        e[k * 3 + k] = C64::from_polar(1.0, theta[k]);
    }
    let u = LocalOperator {
        d: 3,
        matrix: CMatrix::from_row_major(3, 3, e).unwrap(),
        provenance: Provenance::Combination,
    };
    assert!(is_unitary(&u, &tol));
    let f = OperatorCombination::decompose(&u).unwrap();
    assert!(f.is_normalized());

    let class = build_class(&s, 0).unwrap();
    let v = produced_vector(&f, &s).unwrap();
    assert!((v.norm() - 1.0).abs() < 1e-12);
    for w in &class.vectors {
        assert!(w.inner(&v).unwrap().norm() < 1e-12);
    }
    let m = extendability_matrix(&class.vectors, &s, OperatorBasis::Weyl).unwrap();
    let residual = m
        .apply(&CVector::from_amplitudes(f.f.clone()).unwrap())
        .unwrap();
    assert!(residual.norm() < 1e-12);
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> SchmidtState {
    let probs: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = probs.iter().sum();
    from_probabilities(d, &probs.iter().map(|p| p / total).collect::<Vec<_>>()).unwrap()
}

#[test]
fn conclusive_probability_is_symmetric_and_closed_form() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 2..=5 {
        for _ in 0..4 {
            let s = random_state(&mut rng, d);
            let reps = build_representatives(&s).unwrap();
            let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
            for choice in [AChoice::Paper, AChoice::Max] {
                let set = assemble_povm(&duals, choice, &tol).unwrap();
                let df = d as f64;
                // |⟨ψ̄_l|ψ_j⟩| = N·d for l ≠ j, zero for l = j
                let expected = (df - 1.0) * df * df * duals.norm.powi(2) * set.a;
                for v in &reps.vectors {
                    let p = conclusive_probability(&set, v).unwrap();
                    assert!((p - expected).abs() < 1e-12, "d={d}");
                }
            }
        }
    }
}

#[test]
fn paper_a_conclusive_probability_is_p0_times_d() {
    let tol = Tolerances::default();
    for (d, probs) in [
        (2, vec![0.3, 0.7]),
        (3, vec![0.2, 0.3, 0.5]),
        (4, vec![0.1, 0.2, 0.3, 0.4]),
    ] {
        let s = from_probabilities(d, &probs).unwrap();
        let reps = build_representatives(&s).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let set = assemble_povm(&duals, AChoice::Paper, &tol).unwrap();
        assert_eq!(set.a, paper_a(&s, duals.norm));
        let p = conclusive_probability(&set, &reps.vectors[0]).unwrap();
        assert!((p - probs[0] * d as f64).abs() < 1e-12);
        // smallest eigenvalue of P_E is 2 − d
        assert!((set.inconclusive_min_eigenvalue() - (2.0 - d as f64)).abs() < 1e-10);
    }
}

#[test]
fn max_a_makes_inconclusive_element_tight() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in 2..=5 {
        let s = random_state(&mut rng, d);
        let reps = build_representatives(&s).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let set = assemble_povm(&duals, AChoice::Max, &tol).unwrap();
        assert!(set.valid);
        assert!(set.inconclusive_min_eigenvalue().abs() < 1e-10);
        let scaled = assemble_povm(&duals, AChoice::Max, &tol)
            .unwrap()
            .inconclusive;
        let eig = hermitian_eigen(&scaled, &tol).unwrap();
        assert!(eig.max() <= 1.0 + 1e-12);
    }
}

#[test]
fn literal_convention_loses_unambiguity_above_qubits() {
    let tol = Tolerances::default();
    let s = from_probabilities(3, &[0.2, 0.3, 0.5]).unwrap();
    let reps = build_representatives(&s).unwrap();
    let duals = build_duals(&reps, PhaseConvention::Literal).unwrap();
    let set = assemble_povm(&duals, AChoice::Max, &tol).unwrap();
    let wrong: f64 = (0..3)
        .map(|l| outcome_probabilities(&set, &reps.vectors[l]).unwrap()[l])
        .fold(0.0, f64::max);
    assert!(wrong > 1e-3);
}

#[test]
fn empirical_rate_converges() {
    let tol = Tolerances::default();
    let s = from_probabilities(2, &[0.3, 0.7]).unwrap();
    let mut mean_errors = Vec::new();
    for trials in [1_000u64, 10_000, 100_000] {
        let sigma = (0.6f64 * 0.4 / trials as f64).sqrt();
        let mut total = 0.0;
        for seed in 0..20 {
            let r = simulate_protocol(&s, trials, seed, AChoice::Paper, &tol).unwrap();
            assert!((r.analytic_conclusive_rate - 0.6).abs() < 1e-12);
            let err = (r.empirical_conclusive_rate - 0.6).abs();
            assert!(err <= 4.5 * sigma, "trials={trials} seed={seed}");
            total += err;
        }
        mean_errors.push(total / 20.0);
    }
    assert!(
        mean_errors.windows(2).all(|w| w[1] < w[0]),
        "{mean_errors:?}"
    );
}

#[test]
fn simulation_distinct_seeds_differ() {
    let tol = Tolerances::default();
    let s = from_probabilities(3, &[0.25, 0.35, 0.4]).unwrap();
    let a = simulate_protocol(&s, 5_000, 1, AChoice::Max, &tol).unwrap();
    let b = simulate_protocol(&s, 5_000, 2, AChoice::Max, &tol).unwrap();
    assert_ne!(a.per_message, b.per_message);
    assert_eq!(a.m_identification_rate, 1.0);
    assert!(
        (a.empirical_conclusive_rate - a.analytic_conclusive_rate).abs() < 5.0 * a.standard_error
    );
}

#[test]
fn preference_flag_matches_capacity_sign() {
    let tol = Tolerances::default();
    for d in 3..=8 {
        let subspace = capacity_subspace(d).unwrap();
        for i in 1..=100 {
            let p0 = i as f64 / (100.0 * d as f64);
            let r = capacity_report(d, p0, &tol).unwrap();
            let sign = capacity_nme(d, p0).unwrap() - subspace > 0.0;
            assert_eq!(r.nme_preferred, sign, "d={d} p0={p0}");
        }
    }
}

#[test]
fn nme_capacity_beats_log_d() {
    for d in 2..=10 {
        for i in 1..=50 {
            let p0 = i as f64 / (50.0 * d as f64);
            assert!(capacity_nme(d, p0).unwrap() > (d as f64).log2());
        }
    }
}
