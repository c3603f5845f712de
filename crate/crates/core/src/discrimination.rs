//! Unambiguous discrimination of one representative per class.
//!
//! The representatives `ψ_l = Σ_k √p_k exp(2πi·lk/d)|kk⟩` are pairwise
//! non-orthogonal unless the seed is maximally entangled. Each gets a dual
//! vector
//!
//! ```text
//! ψ̄_l = N [ −(d−1)/√p_0 |00⟩ + Σ_{k≥1} (1/√p_k) e^{±2πi·lk/d} |kk⟩ ]
//! ```
//!
//! and the POVM is `P_l = A|ψ̄_l⟩⟨ψ̄_l|`, `P_E = I − Σ P_l`. With the `+` sign
//! ([`PhaseConvention::DualOrthogonal`], the default) `⟨ψ̄_l|ψ_m⟩ = N(dδ_lm − d)`,
//! so outcome `l` never fires on `ψ_l` and rules that state out. The `−` sign
//! ([`PhaseConvention::Literal`]) puts the zero at `m = −l mod d` instead; the
//! two agree at `d = 2`.
//!
//! Positivity of `P_E` is never assumed. Every set carries eigenvalue
//! certificates and [`build_povm`] rejects sets that fail them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{hermitian_eigen, root_of_unity, CMatrix, CVector, Tolerances, C64};
use crate::states::SchmidtState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    #[default]
    DualOrthogonal,
    Literal,
}

/// How the POVM scale `A` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AChoice {
    /// `A = p0 / (d(d−1)N²)`.
    #[default]
    Paper,
    /// The largest `A` keeping `P_E` positive semidefinite.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representatives {
    pub d: usize,
    pub state: SchmidtState,
    pub vectors: Vec<CVector>,
}

pub fn build_representatives(s: &SchmidtState) -> Result<Representatives> {
    s.require_full_rank()?;
    let d = s.d();
    let vectors = (0..d)
        .map(|l| {
            let mut amps = vec![C64::new(0.0, 0.0); d * d];
            for (k, &c) in s.coeffs().iter().enumerate() {
                amps[k * d + k] = root_of_unity((l * k) as i64, d) * c;
            }
            CVector::from_amplitudes(amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Representatives {
        d,
        state: s.clone(),
        vectors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFamily {
    pub d: usize,
    pub state: SchmidtState,
    pub duals: Vec<CVector>,
    /// `N = 1/√((d−1)²/p_0 + Σ_{k≥1} 1/p_k)`, `p_0` taken at index 0.
    pub norm: f64,
    pub convention: PhaseConvention,
}

pub fn build_duals(r: &Representatives, convention: PhaseConvention) -> Result<DualFamily> {
    let s = &r.state;
    s.require_full_rank()?;
    let d = r.d;
    let probs = s.probabilities();
    let weights: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if k == 0 {
                -((d - 1) as f64) / p.sqrt()
            } else {
                1.0 / p.sqrt()
            }
        })
        .collect();
    let norm = 1.0 / weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let sign: i64 = match convention {
        PhaseConvention::DualOrthogonal => 1,
        PhaseConvention::Literal => -1,
    };
    let duals = (0..d)
        .map(|l| {
            let mut amps = vec![C64::new(0.0, 0.0); d * d];
            for (k, &w) in weights.iter().enumerate() {
                amps[k * d + k] = root_of_unity(sign * (l * k) as i64, d) * (norm * w);
            }
            CVector::from_amplitudes(amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualFamily {
        d,
        state: s.clone(),
        duals,
        norm,
        convention,
    })
}

/// `A = p0 / (d(d−1)N²)` with `p0` the smallest Schmidt probability.
pub fn paper_a(s: &SchmidtState, norm: f64) -> f64 {
    let d = s.d() as f64;
    s.p0() / (d * (d - 1.0) * norm * norm)
}

fn dual_projector_sum(duals: &DualFamily) -> CMatrix {
    let n = duals.d * duals.d;
    duals.duals.iter().fold(CMatrix::zeros(n, n), |acc, v| {
        acc.add(&CMatrix::outer(v, v)).expect("d²×d²")
    })
}

/// `1/λ_max(Σ_l |ψ̄_l⟩⟨ψ̄_l|)`.
pub fn max_feasible_a(duals: &DualFamily, tol: &Tolerances) -> Result<f64> {
    let eig = hermitian_eigen(&dual_projector_sum(duals), tol)?;
    Ok(1.0 / eig.max())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmSet {
    pub d: usize,
    pub convention: PhaseConvention,
    pub a_choice: AChoice,
    #[serde(rename = "A")]
    pub a: f64,
    /// `P_0 … P_{d−1}`.
    pub elements: Vec<CMatrix>,
    /// `P_E`.
    pub inconclusive: CMatrix,
    /// `max |(Σ P_l + P_E − I)_ij|`.
    pub completeness_residual: f64,
    /// Smallest eigenvalue of each `P_l`, then of `P_E`.
    pub min_eigenvalues: Vec<f64>,
    /// Every element has minimum eigenvalue `≥ −psd_tol`.
    pub valid: bool,
}

impl PovmSet {
    pub fn inconclusive_min_eigenvalue(&self) -> f64 {
        *self
            .min_eigenvalues
            .last()
            .expect("P_E certificate present")
    }

    /// First element failing positivity, as `(name, eigenvalue)`.
    pub fn first_violation(&self, tol: &Tolerances) -> Option<(String, f64)> {
        self.min_eigenvalues
            .iter()
            .enumerate()
            .find(|(_, &ev)| ev < -tol.psd_tol)
            .map(|(i, &ev)| {
                let name = if i == self.d {
                    "P_E".to_string()
                } else {
                    format!("P_{i}")
                };
                (name, ev)
            })
    }
}

/// Builds the set and its certificates without rejecting non-positive sets.
pub fn assemble_povm(duals: &DualFamily, a_choice: AChoice, tol: &Tolerances) -> Result<PovmSet> {
    let d = duals.d;
    let n = d * d;
    let a = match a_choice {
        AChoice::Paper => paper_a(&duals.state, duals.norm),
        AChoice::Max => max_feasible_a(duals, tol)?,
    };
    let elements: Vec<CMatrix> = duals
        .duals
        .iter()
        .map(|v| CMatrix::outer(v, v).scale(C64::new(a, 0.0)))
        .collect();
    let total = elements
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, p| acc.add(p).expect("d²×d²"));
    let identity = CMatrix::identity(n);
    let inconclusive = identity.sub(&total)?;
    let completeness_residual = total.add(&inconclusive)?.max_abs_diff(&identity)?;
    let min_eigenvalues = elements
        .iter()
        .chain(std::iter::once(&inconclusive))
        .map(|m| hermitian_eigen(m, tol).map(|e| e.min()))
        .collect::<Result<Vec<_>>>()?;
    let valid = min_eigenvalues.iter().all(|&ev| ev >= -tol.psd_tol);
    Ok(PovmSet {
        d,
        convention: duals.convention,
        a_choice,
        a,
        elements,
        inconclusive,
        completeness_residual,
        min_eigenvalues,
        valid,
    })
}

/// Like [`assemble_povm`] but fails with [`Error::InvalidPovm`] when any
/// element is not positive semidefinite.
pub fn build_povm(duals: &DualFamily, a_choice: AChoice, tol: &Tolerances) -> Result<PovmSet> {
    let set = assemble_povm(duals, a_choice, tol)?;
    match set.first_violation(tol) {
        Some((element, eigenvalue)) => Err(Error::InvalidPovm {
            element,
            eigenvalue,
        }),
        None => Ok(set),
    }
}

fn expectation(m: &CMatrix, v: &CVector) -> Result<f64> {
    Ok(v.inner(&m.apply(v)?)?.re)
}

/// Born-rule probabilities: `P_0 … P_{d−1}`, then `P_E`.
pub fn outcome_probabilities(p: &PovmSet, v: &CVector) -> Result<Vec<f64>> {
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitVector { norm });
    }
    p.elements
        .iter()
        .chain(std::iter::once(&p.inconclusive))
        .map(|m| expectation(m, v))
        .collect()
}

/// Total probability of a conclusive outcome.
pub fn conclusive_probability(p: &PovmSet, v: &CVector) -> Result<f64> {
    let probs = outcome_probabilities(p, v)?;
    Ok(probs[..p.d].iter().sum())
}

/// Outcome probabilities for reporting: raw values plus a copy with entries
/// below `psd_tol` clamped to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub raw: Vec<f64>,
    pub reported: Vec<f64>,
}

impl OutcomeReport {
    pub fn new(raw: Vec<f64>, tol: &Tolerances) -> Self {
        let reported = raw
            .iter()
            .map(|&x| if x < tol.psd_tol { 0.0 } else { x })
            .collect();
        Self { raw, reported }
    }
}

/// The closed forms `P_success = p0·d/(d−1)` and `P_error = 1 − P_success`.
pub fn paper_success_error(d: usize, p0: f64) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "discrimination needs d >= 2",
        });
    }
    if !(p0 > 0.0 && p0 <= 1.0 / d as f64 + 1e-12) {
        return Err(Error::P0OutOfRange { d, p0 });
    }
    let success = p0 * d as f64 / (d - 1) as f64;
    Ok((success, 1.0 - success))
}

/// `M[l][m] = |⟨ψ̄_l|ψ_m⟩|`.
pub fn unambiguity_matrix(duals: &DualFamily, reps: &Representatives) -> Result<Vec<Vec<f64>>> {
    if duals.d != reps.d {
        return Err(Error::DimensionMismatch {
            expected: reps.d,
            found: duals.d,
        });
    }
    duals
        .duals
        .iter()
        .map(|bar| {
            reps.vectors
                .iter()
                .map(|psi| bar.inner(psi).map(|z| z.norm()))
                .collect()
        })
        .collect()
}

/// Born-rule success against the closed form, both with the closed-form `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessComparison {
    pub d: usize,
    pub p0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    /// `⟨ψ_0|Σ_l P_l|ψ_0⟩` evaluated directly.
    pub oracle_conclusive: f64,
    /// `p0·d/(d−1)`.
    pub paper_success: f64,
    /// `oracle_conclusive − paper_success`.
    pub difference: f64,
    /// Whether the set built with this `A` is positive semidefinite.
    pub povm_valid: bool,
    pub inconclusive_min_eigenvalue: f64,
}

pub fn success_comparison(s: &SchmidtState, tol: &Tolerances) -> Result<SuccessComparison> {
    let reps = build_representatives(s)?;
    let duals = build_duals(&reps, PhaseConvention::DualOrthogonal)?;
    let povm = assemble_povm(&duals, AChoice::Paper, tol)?;
    let oracle_conclusive = conclusive_probability(&povm, &reps.vectors[0])?;
    let (paper_success, _) = paper_success_error(s.d(), s.p0())?;
    Ok(SuccessComparison {
        d: s.d(),
        p0: s.p0(),
        a: povm.a,
        oracle_conclusive,
        paper_success,
        difference: oracle_conclusive - paper_success,
        povm_valid: povm.valid,
        inconclusive_min_eigenvalue: povm.inconclusive_min_eigenvalue(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{from_probabilities, make_schmidt_state, maximally_entangled};

    fn qubit() -> SchmidtState {
        from_probabilities(2, &[0.3, 0.7]).unwrap()
    }

    fn qutrit() -> SchmidtState {
        from_probabilities(3, &[0.2, 0.3, 0.5]).unwrap()
    }

    #[test]
    fn representatives_examples() {
        let reps = build_representatives(&qubit()).unwrap();
        let want = CVector::from_amplitudes(vec![
            C64::new(0.3f64.sqrt(), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-(0.7f64.sqrt()), 0.0),
        ])
        .unwrap();
        assert!(reps.vectors[1].max_abs_diff(&want).unwrap() < 1e-15);
        assert_eq!(reps.vectors[0], qubit().to_vector());

        let reps = build_representatives(&maximally_entangled(4).unwrap()).unwrap();
        for (i, a) in reps.vectors.iter().enumerate() {
            for b in &reps.vectors[i + 1..] {
                assert!(a.inner(b).unwrap().norm() < 1e-14);
            }
        }
        let degenerate = make_schmidt_state(2, &[1.0, 0.0]).unwrap();
        assert!(matches!(
            build_representatives(&degenerate),
            Err(Error::RankDeficient { index: 1 })
        ));
    }

    #[test]
    fn qubit_dual_zero() {
        let reps = build_representatives(&qubit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        // N² = 1/(1/0.3 + 1/0.7) = 0.21
        assert!((duals.norm * duals.norm - 0.21).abs() < 1e-14);
        let n = duals.norm;
        let want = CVector::from_amplitudes(vec![
            C64::new(-n / 0.3f64.sqrt(), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(n / 0.7f64.sqrt(), 0.0),
        ])
        .unwrap();
        assert!(duals.duals[0].max_abs_diff(&want).unwrap() < 1e-15);
        assert!(duals.duals[0].inner(&reps.vectors[0]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn off_diagonal_overlaps_equal_d_times_norm() {
        for probs in [
            vec![0.3, 0.7],
            vec![0.2, 0.3, 0.5],
            vec![0.1, 0.2, 0.3, 0.4],
        ] {
            let s = from_probabilities(probs.len(), &probs).unwrap();
            let reps = build_representatives(&s).unwrap();
            let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
            let m = unambiguity_matrix(&duals, &reps).unwrap();
            let dn = s.d() as f64 * duals.norm;
            for (l, row) in m.iter().enumerate() {
                for (k, &x) in row.iter().enumerate() {
                    let want = if l == k { 0.0 } else { dn };
                    assert!((x - want).abs() < 1e-12, "{l},{k}: {x} vs {want}");
                }
            }
        }
    }

    #[test]
    fn qubit_conventions_coincide_up_to_phase() {
        let reps = build_representatives(&qubit()).unwrap();
        let a = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let b = build_duals(&reps, PhaseConvention::Literal).unwrap();
        for (x, y) in a.duals.iter().zip(&b.duals) {
            assert!((x.inner(y).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn literal_convention_zero_pattern() {
        let reps = build_representatives(&qutrit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::Literal).unwrap();
        let m = unambiguity_matrix(&duals, &reps).unwrap();
        for (l, row) in m.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                assert_eq!(x < 1e-12, k == (3 - l) % 3, "{l},{k}: {x}");
            }
        }
    }

    #[test]
    fn paper_a_qubit_value() {
        let reps = build_representatives(&qubit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        // 0.3 / (2·1·0.21)
        assert!((paper_a(&qubit(), duals.norm) - 0.3 / 0.42).abs() < 1e-12);
        let lo = from_probabilities(2, &[1e-9, 1.0 - 1e-9]).unwrap();
        assert!(paper_a(&lo, 0.5) < 1e-8);
    }

    #[test]
    fn max_a_for_orthonormal_duals_is_one() {
        let s = maximally_entangled(3).unwrap();
        let reps = build_representatives(&s).unwrap();
        let duals = DualFamily {
            d: 3,
            state: s,
            duals: reps.vectors.clone(),
            norm: 1.0,
            convention: PhaseConvention::DualOrthogonal,
        };
        let a = max_feasible_a(&duals, &Tolerances::default()).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_max_a_regression() {
        // Σ|ψ̄_l⟩⟨ψ̄_l| is diagonal on |kk⟩ with entries 2N²/p_k, so the
        // largest eigenvalue is 2·0.21/0.3 = 1.4 and the scale is 1/1.4.
        let reps = build_representatives(&qubit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let a = max_feasible_a(&duals, &Tolerances::default()).unwrap();
        assert!((a - 1.0 / 1.4).abs() < 1e-12, "{a}");
        assert!(a >= paper_a(&qubit(), duals.norm) - 1e-12);
    }

    #[test]
    fn qubit_povm_with_paper_a() {
        let tol = Tolerances::default();
        let reps = build_representatives(&qubit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let povm = build_povm(&duals, AChoice::Paper, &tol).unwrap();
        assert!(povm.valid);
        assert!(povm.completeness_residual <= 1e-12);
        let probs = outcome_probabilities(&povm, &reps.vectors[0]).unwrap();
        assert!(probs[0].abs() < 1e-12);
        assert!((probs[2] - 0.4).abs() < 1e-12);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qutrit_paper_a_is_rejected() {
        let tol = Tolerances::default();
        let reps = build_representatives(&qutrit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let set = assemble_povm(&duals, AChoice::Paper, &tol).unwrap();
        assert!(!set.valid);
        // P_E bottoms out at 2 − d on the |00⟩ direction
        assert!((set.inconclusive_min_eigenvalue() + 1.0).abs() < 1e-10);
        match build_povm(&duals, AChoice::Paper, &tol) {
            Err(Error::InvalidPovm {
                element,
                eigenvalue,
            }) => {
                assert_eq!(element, "P_E");
                assert!(eigenvalue < -0.5);
            }
            other => panic!("expected InvalidPovm, got {other:?}"),
        }
        let tight = build_povm(&duals, AChoice::Max, &tol).unwrap();
        assert!(tight.inconclusive_min_eigenvalue().abs() <= tol.psd_tol);
    }

    #[test]
    fn probabilities_reject_unnormalized_input() {
        let tol = Tolerances::default();
        let reps = build_representatives(&qubit()).unwrap();
        let duals = build_duals(&reps, PhaseConvention::DualOrthogonal).unwrap();
        let povm = build_povm(&duals, AChoice::Max, &tol).unwrap();
        let v = reps.vectors[0].scale(C64::new(2.0, 0.0));
        assert!(matches!(
            outcome_probabilities(&povm, &v),
            Err(Error::NotUnitVector { .. })
        ));
    }

    #[test]
    fn closed_form_success_formula() {
        let (s, e) = paper_success_error(2, 0.3).unwrap();
        assert!((s - 0.6).abs() < 1e-15 && (e - 0.4).abs() < 1e-15);
        let (s, _) = paper_success_error(3, 0.2).unwrap();
        assert!((s - 0.3).abs() < 1e-15);
        let (s, _) = paper_success_error(2, 0.5).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(paper_success_error(3, 0.4).is_err());
        assert!(paper_success_error(3, 0.0).is_err());
    }

    #[test]
    fn comparison_report_values() {
        let tol = Tolerances::default();
        let cmp = success_comparison(&qubit(), &tol).unwrap();
        assert!((cmp.oracle_conclusive - 0.6).abs() < 1e-12);
        assert!(cmp.difference.abs() < 1e-12);
        let cmp = success_comparison(&qutrit(), &tol).unwrap();
        // A(d−1)d²N² = p0·d
        assert!((cmp.oracle_conclusive - 0.6).abs() < 1e-12);
        assert!((cmp.paper_success - 0.3).abs() < 1e-15);
        assert!(!cmp.povm_valid);
    }

    #[test]
    fn outcome_report_clamps() {
        let r = OutcomeReport::new(vec![-1e-13, 0.5, 1e-12, 0.5], &Tolerances::default());
        assert_eq!(r.reported, vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(r.raw[0], -1e-13);
    }
}
