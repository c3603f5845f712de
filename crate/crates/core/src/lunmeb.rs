//! Orthogonal classes generated from one Schmidt seed by one-sided Weyl
//! operators, and numerical certificates of local extendability.
//!
//! Class `n` holds `ψ_nm = (U_nm ⊗ I)|seed⟩` for `m = 0..d`. Members with
//! different shift index `m` have disjoint supports, so every class is an
//! orthonormal `d`-set for any seed.
//!
//! Extendability is posed as a linear problem. With `V = Σ f_pq U_pq`, the
//! vector `(V ⊗ I)|seed⟩` is orthogonal to every `v_a` exactly when
//! `Σ_pq ⟨v_a|(U_pq ⊗ I)|seed⟩ f_pq = 0` for all `a`. The certificate records
//! the nullspace of that system and the largest vector it can produce. A
//! nonzero nullspace alone says nothing: for rank-deficient seeds every
//! nullspace element may map to the zero vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    determinant, fourier_matrix, gram_matrix, hermitian_eigen, nullspace, root_of_unity, CMatrix,
    CVector, Tolerances, C64,
};
use crate::operators::{apply_local, combine, weyl, OperatorBasis, OperatorCombination};
use crate::states::{subspace_max_entangled, GeneralClassVector, SchmidtState, Subsystem};

/// One class `{ψ_n0, …, ψ_n(d−1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoClass {
    pub d: usize,
    pub n: usize,
    pub seed: SchmidtState,
    /// Indexed by the shift label `m`.
    pub vectors: Vec<CVector>,
}

impl OrthoClass {
    pub fn gram(&self) -> CMatrix {
        gram_matrix(&self.vectors).expect("class vectors share dimension d²")
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        self.gram()
            .max_abs_diff(&CMatrix::identity(self.d))
            .expect("square d×d")
    }
}

pub fn build_class(seed: &SchmidtState, n: usize) -> Result<OrthoClass> {
    let d = seed.d();
    if n >= d {
        return Err(Error::ClassOutOfRange { n, d });
    }
    let phi = seed.to_vector();
    let vectors = (0..d)
        .map(|m| apply_local(&weyl(n, m, d)?, &phi, Subsystem::A))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrthoClass {
        d,
        n,
        seed: seed.clone(),
        vectors,
    })
}

pub fn build_all_classes(seed: &SchmidtState) -> Vec<OrthoClass> {
    (0..seed.d())
        .map(|n| build_class(seed, n).expect("n < d"))
        .collect()
}

/// Pairwise orthogonality of all `d²` vectors `ψ_nm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityTable {
    pub d: usize,
    /// Row/column labels `[n, m]`.
    pub labels: Vec<[usize; 2]>,
    /// `|⟨ψ_a|ψ_b⟩|`.
    pub overlaps: Vec<Vec<f64>>,
    /// `overlaps[a][b] <= rank_tol`, with the diagonal always false.
    pub orthogonal: Vec<Vec<bool>>,
}

impl OrthogonalityTable {
    /// Orthogonal pairs sharing the same `m`. Empty for a generic seed; a
    /// maximally entangled seed makes every pair orthogonal.
    pub fn same_shift_orthogonal_pairs(&self) -> Vec<([usize; 2], [usize; 2])> {
        let mut out = Vec::new();
        for (a, la) in self.labels.iter().enumerate() {
            for (b, lb) in self.labels.iter().enumerate().skip(a + 1) {
                if la[1] == lb[1] && self.orthogonal[a][b] {
                    out.push((*la, *lb));
                }
            }
        }
        out
    }
}

pub fn cross_class_orthogonality(
    seed: &SchmidtState,
    tol: &Tolerances,
) -> Result<OrthogonalityTable> {
    seed.require_full_rank()?;
    let d = seed.d();
    let classes = build_all_classes(seed);
    let mut labels = Vec::with_capacity(d * d);
    let mut vectors = Vec::with_capacity(d * d);
    for class in &classes {
        for (m, v) in class.vectors.iter().enumerate() {
            labels.push([class.n, m]);
            vectors.push(v.clone());
        }
    }
    let gram = gram_matrix(&vectors)?;
    let size = vectors.len();
    let overlaps: Vec<Vec<f64>> = (0..size)
        .map(|a| (0..size).map(|b| gram.get(a, b).norm()).collect())
        .collect();
    let orthogonal = (0..size)
        .map(|a| {
            (0..size)
                .map(|b| a != b && overlaps[a][b] <= tol.rank_tol)
                .collect()
        })
        .collect();
    Ok(OrthogonalityTable {
        d,
        labels,
        overlaps,
        orthogonal,
    })
}

/// Result of searching the operator span for a vector orthogonal to a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendabilityCertificate {
    pub nullspace_dim: usize,
    /// Largest `‖(V ⊗ I)|seed⟩‖` over nullspace combinations with `Σ|f_pq|² = 1`.
    pub max_orthogonal_norm: f64,
    /// A unit-coefficient combination attaining `max_orthogonal_norm`, when
    /// that norm exceeds `rank_tol`.
    pub witness: Option<OperatorCombination>,
}

impl ExtendabilityCertificate {
    /// No combination in the span produces a nonzero orthogonal vector.
    pub fn is_unextendible(&self, tol: &Tolerances) -> bool {
        self.max_orthogonal_norm <= tol.rank_tol
    }
}

/// `(V ⊗ I)|seed⟩` for `V = combine(f)`.
pub fn produced_vector(f: &OperatorCombination, seed: &SchmidtState) -> Result<CVector> {
    if f.d != seed.d() {
        return Err(Error::DimensionMismatch {
            expected: seed.d(),
            found: f.d,
        });
    }
    apply_local(&combine(f), &seed.to_vector(), Subsystem::A)
}

fn basis_images(seed: &SchmidtState, basis: OperatorBasis) -> Result<Vec<CVector>> {
    let d = seed.d();
    let phi = seed.to_vector();
    basis
        .labels(d)
        .into_iter()
        .map(|(p, q)| apply_local(&basis.operator(p, q, d)?, &phi, Subsystem::A))
        .collect()
}

/// `M[a][(p,q)] = ⟨v_a|(U_pq ⊗ I)|seed⟩`, columns in [`OperatorBasis::labels`] order.
pub fn extendability_matrix(
    vectors: &[CVector],
    seed: &SchmidtState,
    basis: OperatorBasis,
) -> Result<CMatrix> {
    let d = seed.d();
    if vectors.is_empty() {
        return Err(Error::Empty("vector family"));
    }
    if let Some(bad) = vectors.iter().find(|v| v.dim() != d * d) {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: bad.dim(),
        });
    }
    let images = basis_images(seed, basis)?;
    let mut entries = Vec::with_capacity(vectors.len() * images.len());
    for v in vectors {
        for w in &images {
            entries.push(v.inner(w)?);
        }
    }
    CMatrix::from_row_major(vectors.len(), images.len(), entries)
}

/// The same matrix for class `n` of a seed, from the closed form
/// `⟨ψ_nm|(U_pq ⊗ I)|seed⟩ = δ_qm Σ_k p_k exp(2πi·(p−n)k/d)`.
pub fn symbolic_extendability_matrix(seed: &SchmidtState, n: usize) -> Result<CMatrix> {
    let d = seed.d();
    if n >= d {
        return Err(Error::ClassOutOfRange { n, d });
    }
    let probs = seed.probabilities();
    let row_weight = |p: usize| -> C64 {
        probs
            .iter()
            .enumerate()
            .map(|(k, &pk)| root_of_unity((p as i64 - n as i64) * k as i64, d) * pk)
            .sum()
    };
    let weights: Vec<C64> = (0..d).map(row_weight).collect();
    Ok(CMatrix::from_fn(d, d * d, |m, col| {
        let (p, q) = (col / d, col % d);
        if q == m {
            weights[p]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

pub fn extendability_check(
    vectors: &[CVector],
    seed: &SchmidtState,
    basis: OperatorBasis,
    tol: &Tolerances,
) -> Result<ExtendabilityCertificate> {
    let d = seed.d();
    let m = extendability_matrix(vectors, seed, basis)?;
    let ns = nullspace(&m, tol);
    if ns.dim == 0 {
        return Ok(ExtendabilityCertificate {
            nullspace_dim: 0,
            max_orthogonal_norm: 0.0,
            witness: None,
        });
    }

    // Vectors produced by the orthonormal nullspace basis; the largest
    // producible norm over unit coefficient vectors is √λ_max of their Gram.
    let images = basis_images(seed, basis)?;
    let produced = ns
        .basis
        .iter()
        .map(|f| {
            f.amps()
                .iter()
                .zip(&images)
                .try_fold(CVector::zeros(d * d), |acc, (c, w)| acc.add_scaled(*c, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let eig = hermitian_eigen(&gram_matrix(&produced)?, tol)?;
    let max_orthogonal_norm = eig.max().max(0.0).sqrt();

    let witness = if max_orthogonal_norm > tol.rank_tol {
        let top = eig.vectors.column(ns.dim - 1);
        let coeffs = ns
            .basis
            .iter()
            .zip(top.amps())
            .try_fold(CVector::zeros(m.cols()), |acc, (f, a)| {
                acc.add_scaled(*a, f)
            })?;
        Some(OperatorCombination::new(d, basis, coeffs.amps().to_vec())?)
    } else {
        None
    };

    Ok(ExtendabilityCertificate {
        nullspace_dim: ns.dim,
        max_orthogonal_norm,
        witness,
    })
}

/// Class-by-class certificates over the full Weyl span; classes are
/// independent and evaluated in parallel, results in class order.
pub fn certify_all_classes(
    seed: &SchmidtState,
    tol: &Tolerances,
) -> Result<Vec<ExtendabilityCertificate>> {
    (0..seed.d())
        .into_par_iter()
        .map(|n| {
            let class = build_class(seed, n)?;
            extendability_check(&class.vectors, seed, OperatorBasis::Weyl, tol)
        })
        .collect()
}

/// Verdict of the term-by-term Fourier system `Σ_p f_pm exp(2πi·kp/d) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCriterion {
    pub d: usize,
    /// `|det F_d|`.
    pub det_magnitude: f64,
    /// `|det F_d| / d^{d/2}`, which is 1 for the unitary normalization.
    pub normalized_det_magnitude: f64,
    /// Nullspace dimension of `F_d` computed independently via SVD.
    pub nullspace_dim: usize,
    /// Both routes give the same answer (trivial solution iff `det ≠ 0`).
    pub consistent: bool,
}

pub fn fourier_criterion(d: usize, tol: &Tolerances) -> Result<FourierCriterion> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "the Fourier system needs d >= 2",
        });
    }
    let f = fourier_matrix(d);
    let det_magnitude = determinant(&f)?.norm();
    let normalized_det_magnitude = det_magnitude / (d as f64).powf(d as f64 / 2.0);
    let nullspace_dim = nullspace(&f, tol).dim;
    let det_nonzero = normalized_det_magnitude > tol.rank_tol;
    Ok(FourierCriterion {
        d,
        det_magnitude,
        normalized_det_magnitude,
        nullspace_dim,
        consistent: det_nonzero == (nullspace_dim == 0),
    })
}

/// The `(d−1)²` vectors `(U′_nm ⊗ I)|φ′⟩` from the subspace-maximally-entangled seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    pub d: usize,
    pub seed: SchmidtState,
    pub labels: Vec<[usize; 2]>,
    pub vectors: Vec<CVector>,
}

impl SubspaceBasis {
    pub fn gram_residual(&self) -> f64 {
        let n = self.vectors.len();
        gram_matrix(&self.vectors)
            .expect("shared dimension")
            .max_abs_diff(&CMatrix::identity(n))
            .expect("square")
    }
}

pub fn build_subspace_basis(d: usize) -> Result<SubspaceBasis> {
    let seed = subspace_max_entangled(d)?;
    let phi = seed.to_vector();
    let labels = OperatorBasis::SubspaceWeyl.labels(d);
    let vectors = labels
        .iter()
        .map(|&(n, m)| {
            apply_local(
                &OperatorBasis::SubspaceWeyl.operator(n, m, d)?,
                &phi,
                Subsystem::A,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubspaceBasis {
        d,
        seed,
        labels: labels.into_iter().map(|(n, m)| [n, m]).collect(),
        vectors,
    })
}

/// Extendability of the subspace basis over the chosen operator span. With
/// `SubspaceWeyl` this is the span the basis was built from; `Weyl` covers
/// every `d×d` operator and is reported, not asserted.
pub fn subspace_extendability(
    d: usize,
    basis: OperatorBasis,
    tol: &Tolerances,
) -> Result<ExtendabilityCertificate> {
    let sb = build_subspace_basis(d)?;
    extendability_check(&sb.vectors, &sb.seed, basis, tol)
}

/// Whether `N_nm N_pm Σ_k conj(c_k^{nm}) c_k^{pm} = δ_np` (within 1e-10) for
/// every pair with equal `d` and `m`.
pub fn check_class_family(vs: &[GeneralClassVector]) -> bool {
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i..] {
            if a.d != b.d || a.m != b.m {
                continue;
            }
            let overlap: C64 = a.c.iter().zip(&b.c).map(|(x, y)| x.conj() * y).sum::<C64>()
                * (a.normalization() * b.normalization());
            let target = if a.n == b.n { 1.0 } else { 0.0 };
            if (overlap - C64::new(target, 0.0)).norm() > 1e-10 {
                return false;
            }
        }
    }
    true
}
