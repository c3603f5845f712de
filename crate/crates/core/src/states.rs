//! Bipartite pure states in Schmidt form and their entanglement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{root_of_unity, CMatrix, CVector, C64};

/// Which half of a `d ⊗ d` system an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// `Σ_k C_k |kk⟩` with real, nonnegative Schmidt coefficients `C_k`.
///
/// Coefficients are kept in the order given; `p0()` is the smallest squared
/// coefficient wherever it sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct SchmidtState {
    d: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    d: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<StateRepr> for SchmidtState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        make_schmidt_state(r.d, &r.coeffs)
    }
}

impl From<SchmidtState> for StateRepr {
    fn from(s: SchmidtState) -> Self {
        StateRepr {
            d: s.d,
            coeffs: s.coeffs,
        }
    }
}

const NORMALIZATION_SLACK: f64 = 1e-6;

/// Validates amplitudes `C_k` and stores a renormalized copy.
pub fn make_schmidt_state(d: usize, coeffs: &[f64]) -> Result<SchmidtState> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "a bipartite state needs d >= 2",
        });
    }
    if coeffs.len() != d {
        return Err(Error::WrongLength {
            expected: d,
            found: coeffs.len(),
        });
    }
    for (index, &value) in coeffs.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        if value < 0.0 {
            return Err(Error::NegativeCoefficient { index, value });
        }
    }
    let sum: f64 = coeffs.iter().map(|c| c * c).sum();
    if (sum - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(Error::NotNormalized { sum });
    }
    let scale = sum.sqrt();
    Ok(SchmidtState {
        d,
        coeffs: coeffs.iter().map(|c| c / scale).collect(),
    })
}

/// Same as [`make_schmidt_state`] but takes probabilities `p_k = C_k²`.
pub fn from_probabilities(d: usize, probs: &[f64]) -> Result<SchmidtState> {
    for (index, &value) in probs.iter().enumerate() {
        if value < 0.0 {
            return Err(Error::NegativeCoefficient { index, value });
        }
    }
    let coeffs: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    make_schmidt_state(d, &coeffs)
}

/// `(1/√(d−1)) Σ_{k<d−1} |kk⟩`: maximally entangled on the first `d−1` levels.
pub fn subspace_max_entangled(d: usize) -> Result<SchmidtState> {
    if d < 3 {
        return Err(Error::InvalidDimension {
            d,
            reason: "the subspace construction needs d >= 3",
        });
    }
    let c = 1.0 / ((d - 1) as f64).sqrt();
    let mut coeffs = vec![c; d];
    coeffs[d - 1] = 0.0;
    make_schmidt_state(d, &coeffs)
}

/// The maximally entangled state `(1/√d) Σ_k |kk⟩`.
pub fn maximally_entangled(d: usize) -> Result<SchmidtState> {
    make_schmidt_state(d, &vec![1.0 / (d as f64).sqrt(); d])
}

impl SchmidtState {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `p_k = C_k²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c * c).collect()
    }

    /// The smallest `p_k`.
    pub fn p0(&self) -> f64 {
        self.probabilities()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_full_rank(&self) -> bool {
        self.coeffs.iter().all(|&c| c > 0.0)
    }

    /// Errors with the first zero coefficient when the state is not full rank.
    pub fn require_full_rank(&self) -> Result<()> {
        match self.coeffs.iter().position(|&c| c <= 0.0) {
            Some(index) => Err(Error::RankDeficient { index }),
            None => Ok(()),
        }
    }

    pub fn schmidt_rank(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c > 0.0).count()
    }

    /// `Σ_k C_k |k⟩|k⟩` in the product basis, index `k·d + k`.
    pub fn to_vector(&self) -> CVector {
        let d = self.d;
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for (k, &c) in self.coeffs.iter().enumerate() {
            amps[k * d + k] = C64::new(c, 0.0);
        }
        CVector::from_amplitudes(amps).expect("validated coefficients are finite")
    }

    /// Von Neumann entropy of either reduced state, in bits.
    pub fn entanglement_entropy(&self) -> f64 {
        entanglement_entropy(self)
    }
}

pub fn to_vector(s: &SchmidtState) -> CVector {
    s.to_vector()
}

/// `−Σ p_k log₂ p_k` over the nonzero `p_k`.
pub fn entanglement_entropy(s: &SchmidtState) -> f64 {
    let h: f64 = s
        .probabilities()
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Reduced density matrix of a `d ⊗ d` pure state, tracing out the other side.
pub fn reduced_density(v: &CVector, d: usize, keep: Subsystem) -> Result<CMatrix> {
    if v.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.dim(),
        });
    }
    let amp = |a: usize, b: usize| v[a * d + b];
    Ok(CMatrix::from_fn(d, d, |i, j| {
        (0..d)
            .map(|k| match keep {
                Subsystem::A => amp(i, k) * amp(j, k).conj(),
                Subsystem::B => amp(k, i) * amp(k, j).conj(),
            })
            .sum()
    }))
}

/// `N Σ_j c_j |j⟩|j⊕m⟩` with `N = 1/√(Σ|c_j|²)`: one member of a general
/// class family labelled by `(n, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralClassVector {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub c: Vec<C64>,
}

impl GeneralClassVector {
    pub fn new(n: usize, m: usize, c: Vec<C64>) -> Result<Self> {
        let d = c.len();
        if d < 2 {
            return Err(Error::InvalidDimension {
                d,
                reason: "a class vector needs d >= 2 coefficients",
            });
        }
        if n >= d || m >= d {
            return Err(Error::LabelOutOfRange { n, m, d });
        }
        if c.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidInput(
                "class vector coefficients are all zero".into(),
            ));
        }
        Ok(Self { d, n, m, c })
    }

    /// Coefficients `c_j = C_j·exp(2πi·nj/d)` of the Weyl-generated member.
    pub fn from_weyl(seed: &SchmidtState, n: usize, m: usize) -> Result<Self> {
        let d = seed.d();
        let c = seed
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, &cj)| root_of_unity((n * j) as i64, d) * cj)
            .collect();
        Self::new(n, m, c)
    }

    pub fn normalization(&self) -> f64 {
        1.0 / self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn vector(&self) -> CVector {
        let d = self.d;
        let norm = self.normalization();
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for (j, cj) in self.c.iter().enumerate() {
            amps[j * d + (j + self.m) % d] = cj * norm;
        }
        CVector::from_amplitudes(amps).expect("finite coefficients")
    }
}
