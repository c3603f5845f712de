//! Weyl (generalized Pauli) operators, the subspace variant, linear
//! combinations, and one-sided application to bipartite vectors.
//!
//! `weyl(n, m, d) = Σ_k exp(2πi·nk/d) |k⊕m⟩⟨k|`: `n` is the phase index and
//! `m` the shift index. The subspace variant does the same on the first `d−1`
//! levels with arithmetic modulo `d−1` and is zero on level `d−1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{root_of_unity, CMatrix, CVector, Tolerances, C64};
use crate::states::Subsystem;

/// Which operator family a label or combination refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorBasis {
    #[default]
    Weyl,
    SubspaceWeyl,
}

impl OperatorBasis {
    /// Range of each label index: `d` for Weyl, `d−1` for the subspace family.
    pub fn modulus(self, d: usize) -> usize {
        match self {
            OperatorBasis::Weyl => d,
            OperatorBasis::SubspaceWeyl => d - 1,
        }
    }

    /// All labels `(p, q)`, `p` major.
    pub fn labels(self, d: usize) -> Vec<(usize, usize)> {
        let r = self.modulus(d);
        (0..r).flat_map(|p| (0..r).map(move |q| (p, q))).collect()
    }

    pub fn operator(self, n: usize, m: usize, d: usize) -> Result<LocalOperator> {
        match self {
            OperatorBasis::Weyl => weyl(n, m, d),
            OperatorBasis::SubspaceWeyl => subspace_weyl(n, m, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Weyl { n: usize, m: usize },
    SubspaceWeyl { n: usize, m: usize },
    Combination,
}

/// A `d×d` operator on one side of a bipartite system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct LocalOperator {
    pub d: usize,
    pub matrix: CMatrix,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Pair([usize; 2]),
    Name(String),
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    d: usize,
    label: LabelRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<OperatorBasis>,
    entries: Vec<[f64; 2]>,
}

impl From<LocalOperator> for OperatorRepr {
    fn from(op: LocalOperator) -> Self {
        let (label, family) = match op.provenance {
            Provenance::Weyl { n, m } => (LabelRepr::Pair([n, m]), Some(OperatorBasis::Weyl)),
            Provenance::SubspaceWeyl { n, m } => {
                (LabelRepr::Pair([n, m]), Some(OperatorBasis::SubspaceWeyl))
            }
            Provenance::Combination => (LabelRepr::Name("combination".into()), None),
        };
        OperatorRepr {
            d: op.d,
            label,
            family,
            entries: op.matrix.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<OperatorRepr> for LocalOperator {
    type Error = Error;

    fn try_from(r: OperatorRepr) -> Result<Self> {
        let provenance = match (r.label, r.family.unwrap_or_default()) {
            (LabelRepr::Pair([n, m]), OperatorBasis::Weyl) => Provenance::Weyl { n, m },
            (LabelRepr::Pair([n, m]), OperatorBasis::SubspaceWeyl) => {
                Provenance::SubspaceWeyl { n, m }
            }
            (LabelRepr::Name(name), _) if name == "combination" => Provenance::Combination,
            (LabelRepr::Name(name), _) => {
                return Err(Error::InvalidInput(format!(
                    "unknown operator label {name:?}"
                )))
            }
        };
        let entries = r.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let matrix = CMatrix::from_row_major(r.d, r.d, entries)?;
        Ok(LocalOperator {
            d: r.d,
            matrix,
            provenance,
        })
    }
}

impl LocalOperator {
    pub fn is_unitary(&self, tol: &Tolerances) -> bool {
        self.matrix.is_unitary(tol)
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        self.matrix.apply(v)
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator {
            d: self.d,
            matrix: self.matrix.adjoint(),
            provenance: Provenance::Combination,
        }
    }
}

pub fn weyl(n: usize, m: usize, d: usize) -> Result<LocalOperator> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "Weyl operators need d >= 2",
        });
    }
    if n >= d || m >= d {
        return Err(Error::LabelOutOfRange { n, m, d });
    }
    let mut entries = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        entries[((k + m) % d) * d + k] = root_of_unity((n * k) as i64, d);
    }
    Ok(LocalOperator {
        d,
        matrix: CMatrix::from_row_major(d, d, entries)?,
        provenance: Provenance::Weyl { n, m },
    })
}

pub fn subspace_weyl(n: usize, m: usize, d: usize) -> Result<LocalOperator> {
    if d < 3 {
        return Err(Error::InvalidDimension {
            d,
            reason: "subspace Weyl operators need d >= 3",
        });
    }
    let r = d - 1;
    if n >= r || m >= r {
        return Err(Error::LabelOutOfRange { n, m, d });
    }
    let mut entries = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..r {
        entries[((k + m) % r) * d + k] = root_of_unity((n * k) as i64, r);
    }
    Ok(LocalOperator {
        d,
        matrix: CMatrix::from_row_major(d, d, entries)?,
        provenance: Provenance::SubspaceWeyl { n, m },
    })
}

/// Coefficients `f_pq` of `V = Σ f_pq U_pq` over one operator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CombinationRepr", into = "CombinationRepr")]
pub struct OperatorCombination {
    pub d: usize,
    pub basis: OperatorBasis,
    /// Row-major over labels `(p, q)`, see [`OperatorBasis::labels`].
    pub f: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct CombinationRepr {
    d: usize,
    label: String,
    basis: OperatorBasis,
    coefficients: Vec<[f64; 2]>,
    #[serde(default)]
    entries: Vec<[f64; 2]>,
}

impl From<OperatorCombination> for CombinationRepr {
    fn from(f: OperatorCombination) -> Self {
        let entries = combine(&f)
            .matrix
            .row_major()
            .iter()
            .map(|z| [z.re, z.im])
            .collect();
        CombinationRepr {
            d: f.d,
            label: "combination".into(),
            basis: f.basis,
            coefficients: f.f.iter().map(|z| [z.re, z.im]).collect(),
            entries,
        }
    }
}

impl TryFrom<CombinationRepr> for OperatorCombination {
    type Error = Error;

    fn try_from(r: CombinationRepr) -> Result<Self> {
        if r.label != "combination" {
            return Err(Error::InvalidInput(format!(
                "expected label \"combination\", got {:?}",
                r.label
            )));
        }
        let f = r
            .coefficients
            .iter()
            .map(|&[re, im]| C64::new(re, im))
            .collect();
        OperatorCombination::new(r.d, r.basis, f)
    }
}

impl OperatorCombination {
    pub fn new(d: usize, basis: OperatorBasis, f: Vec<C64>) -> Result<Self> {
        let min_d = match basis {
            OperatorBasis::Weyl => 2,
            OperatorBasis::SubspaceWeyl => 3,
        };
        if d < min_d {
            return Err(Error::InvalidDimension {
                d,
                reason: "too small for this operator family",
            });
        }
        let r = basis.modulus(d);
        if f.len() != r * r {
            return Err(Error::DimensionMismatch {
                expected: r * r,
                found: f.len(),
            });
        }
        if !f.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { d, basis, f })
    }

    /// The combination equal to a single basis operator.
    pub fn indicator(d: usize, basis: OperatorBasis, n: usize, m: usize) -> Result<Self> {
        let r = basis.modulus(d);
        if n >= r || m >= r {
            return Err(Error::LabelOutOfRange { n, m, d });
        }
        let mut f = vec![C64::new(0.0, 0.0); r * r];
        f[n * r + m] = C64::new(1.0, 0.0);
        Self::new(d, basis, f)
    }

    pub fn coefficient(&self, p: usize, q: usize) -> C64 {
        self.f[p * self.basis.modulus(self.d) + q]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.f.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Whether `Σ|f_pq|² = 1` within 1e-12.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    /// Expands an arbitrary operator in the Weyl basis: `f_pq = Tr(U_pq† V)/d`.
    pub fn decompose(op: &LocalOperator) -> Result<Self> {
        let d = op.d;
        let f = OperatorBasis::Weyl
            .labels(d)
            .into_iter()
            .map(|(p, q)| Ok(hs_inner(&weyl(p, q, d)?, op)? / d as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, OperatorBasis::Weyl, f)
    }
}

/// `Σ_pq f_pq U_pq`. Unitarity is not enforced.
pub fn combine(f: &OperatorCombination) -> LocalOperator {
    let d = f.d;
    let mut acc = CMatrix::zeros(d, d);
    for ((p, q), coeff) in f.basis.labels(d).into_iter().zip(&f.f) {
        if coeff.norm() == 0.0 {
            continue;
        }
        let u = f
            .basis
            .operator(p, q, d)
            .expect("labels enumerate the valid range");
        acc = acc
            .add(&u.matrix.scale(*coeff))
            .expect("operators share shape d×d");
    }
    LocalOperator {
        d,
        matrix: acc,
        provenance: Provenance::Combination,
    }
}

/// `(op ⊗ I)v` for side A, `(I ⊗ op)v` for side B.
pub fn apply_local(op: &LocalOperator, v: &CVector, side: Subsystem) -> Result<CVector> {
    let d = op.d;
    if v.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.dim(),
        });
    }
    let a = &op.matrix;
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            let aij = a.get(i, j);
            if aij.norm() == 0.0 {
                continue;
            }
            for k in 0..d {
                match side {
                    Subsystem::A => out[i * d + k] += aij * v[j * d + k],
                    Subsystem::B => out[k * d + i] += aij * v[k * d + j],
                }
            }
        }
    }
    CVector::from_amplitudes(out)
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &LocalOperator, b: &LocalOperator) -> Result<C64> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch {
            expected: a.d,
            found: b.d,
        });
    }
    Ok(a.matrix
        .row_major()
        .iter()
        .zip(b.matrix.row_major())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

pub fn is_unitary(op: &LocalOperator, tol: &Tolerances) -> bool {
    op.is_unitary(tol)
}
