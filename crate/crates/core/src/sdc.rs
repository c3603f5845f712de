//! Superdense-coding capacities and a seeded simulation of the decoding
//! protocol.
//!
//! All logarithms are base 2. With a full-rank seed, Alice encodes the
//! message `(n, m)` by applying `U_nm` to her half. Bob decodes in two
//! stages: a projective measurement onto the supports
//! `Π_m = Σ_k |k⊕m⟩⟨k⊕m| ⊗ |k⟩⟨k|` recovers `m` exactly, then after undoing
//! the shift he measures the discrimination POVM to learn about `n`.
//!
//! Randomness: trial `i` draws from ChaCha8 seeded with `seed_from_u64(seed)`
//! on stream `i`. Trials are independent of each other and of thread count,
//! so parallel and sequential runs give identical counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrimination::{
    build_duals, build_povm, build_representatives, outcome_probabilities, success_comparison,
    AChoice, PhaseConvention, PovmSet,
};
use crate::error::{Error, Result};
use crate::numkit::{CVector, Tolerances, C64};
use crate::operators::{apply_local, weyl};
use crate::report::round_sig;
use crate::states::{from_probabilities, SchmidtState, Subsystem};

fn check_p0(d: usize, p0: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "superdense coding needs d >= 2",
        });
    }
    if !(p0 > 0.0 && p0 <= 1.0 / d as f64 + 1e-12) {
        return Err(Error::P0OutOfRange { d, p0 });
    }
    Ok(())
}

/// `(1 + p0·d/(d−1))·log₂ d`.
pub fn capacity_nme(d: usize, p0: f64) -> Result<f64> {
    check_p0(d, p0)?;
    let df = d as f64;
    Ok((1.0 + p0 * df / (df - 1.0)) * df.log2())
}

/// `(1 + p)·log₂ d` for an arbitrary success probability `p`.
pub fn capacity_with_success(d: usize, success: f64) -> f64 {
    (1.0 + success) * (d as f64).log2()
}

/// `2·log₂(d−1)`.
pub fn capacity_subspace(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidDimension {
            d,
            reason: "the subspace resource needs d >= 3",
        });
    }
    Ok(2.0 * ((d - 1) as f64).log2())
}

/// `log₂ d + S(ρ)`.
pub fn capacity_asymptotic(s: &SchmidtState) -> f64 {
    (s.d() as f64).log2() + s.entanglement_entropy()
}

/// `f_d = ((d−1)/(d·log₂ d))·log₂((d−1)²/d)`.
pub fn f_threshold(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "f_d is defined for d >= 2",
        });
    }
    let df = d as f64;
    Ok((df - 1.0) / (df * df.log2()) * ((df - 1.0).powi(2) / df).log2())
}

/// `(max(f_d, 0), 1/d)` when `f_d < 1/d`.
pub fn crossover_range(d: usize) -> Result<Option<(f64, f64)>> {
    let f = f_threshold(d)?;
    let high = 1.0 / d as f64;
    Ok((f < high).then_some((f.max(0.0), high)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdRow {
    pub d: usize,
    pub f_d: f64,
}

pub fn fd_curve(d_min: usize, d_max: usize) -> Result<Vec<FdRow>> {
    if d_min < 2 || d_min > d_max {
        return Err(Error::InvalidRange {
            from: d_min,
            to: d_max,
        });
    }
    (d_min..=d_max)
        .map(|d| f_threshold(d).map(|f_d| FdRow { d, f_d }))
        .collect()
}

/// CSV with header `d,f_d`, values to 12 significant digits.
pub fn fd_curve_csv(rows: &[FdRow]) -> String {
    let mut out = String::from("d,f_d\n");
    for row in rows {
        out.push_str(&format!("{},{}\n", row.d, round_sig(row.f_d)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub d: usize,
    pub p0: f64,
    /// Success probability from the closed form `p0·d/(d−1)`.
    pub success_paper_formula: f64,
    /// Born-rule conclusive probability of the same POVM (closed-form `A`).
    pub success_oracle: f64,
    /// `(1 + success_paper_formula)·log₂ d`.
    pub capacity_nme: f64,
    /// `(1 + success_oracle)·log₂ d`.
    pub capacity_nme_oracle: f64,
    /// `2·log₂(d−1)`; absent for `d = 2`.
    pub capacity_subspace: Option<f64>,
    /// `log₂ d + S(ρ)` of the state the oracle was evaluated on.
    pub capacity_asymptotic: f64,
    pub f_d: f64,
    /// `p0 > f_d`.
    pub nme_preferred: bool,
    pub crossover_range: Option<(f64, f64)>,
    /// Whether the POVM behind `success_oracle` is positive semidefinite.
    pub oracle_povm_valid: bool,
    pub state: SchmidtState,
}

/// Report for a given smallest probability `p0`. The oracle is evaluated on
/// the state with `p0` first and the remaining weight spread evenly.
pub fn capacity_report(d: usize, p0: f64, tol: &Tolerances) -> Result<CapacityReport> {
    check_p0(d, p0)?;
    let p0 = p0.min(1.0 / d as f64);
    let rest = (1.0 - p0) / (d - 1) as f64;
    let mut probs = vec![rest; d];
    probs[0] = p0;
    capacity_report_for_state(&from_probabilities(d, &probs)?, tol)
}

pub fn capacity_report_for_state(s: &SchmidtState, tol: &Tolerances) -> Result<CapacityReport> {
    s.require_full_rank()?;
    let d = s.d();
    let p0 = s.p0();
    let cmp = success_comparison(s, tol)?;
    let f_d = f_threshold(d)?;
    Ok(CapacityReport {
        d,
        p0,
        success_paper_formula: cmp.paper_success,
        success_oracle: cmp.oracle_conclusive,
        capacity_nme: capacity_nme(d, p0)?,
        capacity_nme_oracle: capacity_with_success(d, cmp.oracle_conclusive),
        capacity_subspace: capacity_subspace(d).ok(),
        capacity_asymptotic: capacity_asymptotic(s),
        f_d,
        nme_preferred: p0 > f_d,
        crossover_range: crossover_range(d)?,
        oracle_povm_valid: cmp.povm_valid,
        state: s.clone(),
    })
}

/// Counts for one message `(n, m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub n: usize,
    pub m: usize,
    pub sent: u64,
    /// Stage 1 returned the transmitted `m`.
    pub m_correct: u64,
    pub conclusive: u64,
    pub inconclusive: u64,
    /// Stage-2 outcomes `0..d`, then the inconclusive outcome.
    pub outcomes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub d: usize,
    pub trials: u64,
    pub seed: u64,
    pub rng: String,
    pub a_choice: AChoice,
    pub convention: PhaseConvention,
    pub state: SchmidtState,
    /// Indexed by `n·d + m`.
    pub per_message: Vec<MessageCounts>,
    pub empirical_conclusive_rate: f64,
    pub analytic_conclusive_rate: f64,
    /// Binomial standard error of the conclusive rate at the analytic value.
    pub standard_error: f64,
    pub m_identification_rate: f64,
    /// Supplementary: plug-in mutual information between the message and
    /// Bob's `(m, outcome)` record, in bits.
    pub empirical_mutual_information_bits: f64,
}

/// Outcome distributions for every message, derived once from the states.
struct DecodingTables {
    d: usize,
    /// `stage1[msg][m']`.
    stage1: Vec<Vec<f64>>,
    /// `stage2[msg][m']`: POVM outcome distribution after stage 1 returned `m'`.
    stage2: Vec<Vec<Vec<f64>>>,
    analytic_conclusive: f64,
}

fn shift_projection(v: &CVector, d: usize, shift: usize) -> CVector {
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let idx = ((k + shift) % d) * d + k;
        amps[idx] = v[idx];
    }
    CVector::from_amplitudes(amps).expect("finite")
}

fn sanitize(probs: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|p| p / total).collect()
}

impl DecodingTables {
    fn new(s: &SchmidtState, povm: &PovmSet) -> Result<Self> {
        let d = s.d();
        let phi = s.to_vector();
        let mut stage1 = Vec::with_capacity(d * d);
        let mut stage2 = Vec::with_capacity(d * d);
        let mut conclusive_sum = 0.0;
        for n in 0..d {
            for m in 0..d {
                let psi = apply_local(&weyl(n, m, d)?, &phi, Subsystem::A)?;
                let mut p1 = Vec::with_capacity(d);
                let mut p2 = Vec::with_capacity(d);
                for shift in 0..d {
                    let projected = shift_projection(&psi, d, shift);
                    let weight = projected.norm().powi(2);
                    p1.push(weight);
                    if weight <= 0.0 {
                        p2.push(vec![0.0; d + 1]);
                        continue;
                    }
                    let undone = apply_local(
                        &weyl(0, shift, d)?.adjoint(),
                        &projected.normalized(),
                        Subsystem::A,
                    )?;
                    let probs = outcome_probabilities(povm, &undone)?;
                    conclusive_sum += weight * probs[..d].iter().sum::<f64>();
                    p2.push(sanitize(&probs));
                }
                stage1.push(sanitize(&p1));
                stage2.push(p2);
            }
        }
        Ok(Self {
            d,
            stage1,
            stage2,
            analytic_conclusive: conclusive_sum / (d * d) as f64,
        })
    }
}

fn sample(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Joint counts over `(message, m', outcome)`.
#[derive(Clone)]
struct Tally {
    counts: Vec<u64>,
}

impl Tally {
    fn new(d: usize) -> Self {
        Self {
            counts: vec![0; d * d * d * (d + 1)],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

fn run_trial(tables: &DecodingTables, seed: u64, trial: u64, tally: &mut Tally) {
    let d = tables.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let msg = rng.random_range(0..d * d);
    let shift = sample(&tables.stage1[msg], rng.random::<f64>());
    let outcome = sample(&tables.stage2[msg][shift], rng.random::<f64>());
    tally.counts[(msg * d + shift) * (d + 1) + outcome] += 1;
}

fn tally_parallel(tables: &DecodingTables, seed: u64, trials: u64) -> Tally {
    (0..trials)
        .into_par_iter()
        .fold(
            || Tally::new(tables.d),
            |mut t, i| {
                run_trial(tables, seed, i, &mut t);
                t
            },
        )
        .reduce(|| Tally::new(tables.d), Tally::merge)
}

#[cfg(test)]
fn tally_sequential(tables: &DecodingTables, seed: u64, trials: u64) -> Tally {
    let mut t = Tally::new(tables.d);
    for i in 0..trials {
        run_trial(tables, seed, i, &mut t);
    }
    t
}

fn mutual_information(counts: &[u64], rows: usize, cols: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let row_sums: Vec<f64> = (0..rows)
        .map(|r| counts[r * cols..(r + 1) * cols].iter().sum::<u64>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|c| (0..rows).map(|r| counts[r * cols + c]).sum::<u64>() as f64)
        .collect();
    let mut info = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let n = counts[r * cols + c] as f64;
            if n > 0.0 {
                info += n / total * (n * total / (row_sums[r] * col_sums[c])).log2();
            }
        }
    }
    info.max(0.0)
}

fn summarize(
    s: &SchmidtState,
    trials: u64,
    seed: u64,
    a_choice: AChoice,
    tables: &DecodingTables,
    tally: &Tally,
) -> SimulationResult {
    let d = s.d();
    let cols = d * (d + 1);
    let mut per_message = Vec::with_capacity(d * d);
    for msg in 0..d * d {
        let row = &tally.counts[msg * cols..(msg + 1) * cols];
        let mut outcomes = vec![0u64; d + 1];
        let mut m_correct = 0;
        for shift in 0..d {
            for (o, slot) in outcomes.iter_mut().enumerate() {
                let c = row[shift * (d + 1) + o];
                *slot += c;
                if shift == msg % d {
                    m_correct += c;
                }
            }
        }
        let sent: u64 = row.iter().sum();
        let inconclusive = outcomes[d];
        per_message.push(MessageCounts {
            n: msg / d,
            m: msg % d,
            sent,
            m_correct,
            conclusive: sent - inconclusive,
            inconclusive,
            outcomes,
        });
    }
    let conclusive: u64 = per_message.iter().map(|c| c.conclusive).sum();
    let identified: u64 = per_message.iter().map(|c| c.m_correct).sum();
    let rate = tables.analytic_conclusive;
    SimulationResult {
        d,
        trials,
        seed,
        rng: "ChaCha8, seed_from_u64(seed), stream = trial index".into(),
        a_choice,
        convention: PhaseConvention::DualOrthogonal,
        state: s.clone(),
        per_message,
        empirical_conclusive_rate: conclusive as f64 / trials as f64,
        analytic_conclusive_rate: rate,
        standard_error: (rate * (1.0 - rate) / trials as f64).max(0.0).sqrt(),
        m_identification_rate: identified as f64 / trials as f64,
        empirical_mutual_information_bits: mutual_information(&tally.counts, d * d, cols),
    }
}

fn prepare(
    s: &SchmidtState,
    trials: u64,
    a_choice: AChoice,
    tol: &Tolerances,
) -> Result<DecodingTables> {
    s.require_full_rank()?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let reps = build_representatives(s)?;
    let duals = build_duals(&reps, PhaseConvention::DualOrthogonal)?;
    let povm = build_povm(&duals, a_choice, tol)?;
    DecodingTables::new(s, &povm)
}

pub fn simulate_protocol(
    s: &SchmidtState,
    trials: u64,
    seed: u64,
    a_choice: AChoice,
    tol: &Tolerances,
) -> Result<SimulationResult> {
    let tables = prepare(s, trials, a_choice, tol)?;
    let tally = tally_parallel(&tables, seed, trials);
    Ok(summarize(s, trials, seed, a_choice, &tables, &tally))
}

/// One CSV row per message: `n,m,sent,m_correct,conclusive,inconclusive`.
pub fn simulation_csv(r: &SimulationResult) -> String {
    let mut out = String::from("n,m,sent,m_correct,conclusive,inconclusive\n");
    for c in &r.per_message {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.n, c.m, c.sent, c.m_correct, c.conclusive, c.inconclusive
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::maximally_entangled;

    #[test]
    fn nme_capacity_values() {
        assert!((capacity_nme(2, 0.5).unwrap() - 2.0).abs() < 1e-15);
        // (1 + 0.3)·log2 3
        assert!((capacity_nme(3, 0.2).unwrap() - 1.3 * 3f64.log2()).abs() < 1e-15);
        assert!((capacity_nme(3, 0.2).unwrap() - 2.060_451_250_937_5).abs() < 1e-12);
        assert!(capacity_nme(3, 0.34).is_err());
        assert!(capacity_nme(3, 0.0).is_err());
        let grid: Vec<f64> = (1..=20)
            .map(|i| capacity_nme(4, i as f64 / 80.0).unwrap())
            .collect();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subspace_capacity_values() {
        assert_eq!(capacity_subspace(3).unwrap(), 2.0);
        assert!((capacity_subspace(4).unwrap() - 3.169_925_001_442_312).abs() < 1e-12);
        assert_eq!(capacity_subspace(5).unwrap(), 4.0);
        assert!(capacity_subspace(2).is_err());
    }

    #[test]
    fn asymptotic_capacity_values() {
        let me = maximally_entangled(3).unwrap();
        assert!((capacity_asymptotic(&me) - 2.0 * 3f64.log2()).abs() < 1e-12);
        let product = crate::states::make_schmidt_state(3, &[1.0, 0.0, 0.0]).unwrap();
        assert!((capacity_asymptotic(&product) - 3f64.log2()).abs() < 1e-15);
        let s = from_probabilities(2, &[0.3, 0.7]).unwrap();
        assert!((capacity_asymptotic(&s) - 1.881_290_899_230_7).abs() < 1e-12);
    }

    #[test]
    fn threshold_values() {
        assert!((f_threshold(3).unwrap() - 0.1746).abs() < 5e-5);
        assert!((f_threshold(2).unwrap() + 0.5).abs() < 1e-15);
        let f4 = f_threshold(4).unwrap();
        assert!((f4 - 0.4387).abs() < 5e-5 && f4 > 0.25);
        assert!(f_threshold(1).is_err());
    }

    #[test]
    fn crossover_examples() {
        let (lo, hi) = crossover_range(3).unwrap().unwrap();
        assert!((lo - 0.1746).abs() < 5e-5 && (hi - 1.0 / 3.0).abs() < 1e-15);
        assert!(crossover_range(4).unwrap().is_none());
        assert_eq!(crossover_range(2).unwrap(), Some((0.0, 0.5)));
    }

    #[test]
    fn crossover_implies_capacity_gain() {
        let (lo, hi) = crossover_range(3).unwrap().unwrap();
        for i in 1..10 {
            let p0 = lo + (hi - lo) * i as f64 / 10.0;
            assert!(capacity_nme(3, p0).unwrap() > capacity_subspace(3).unwrap());
        }
    }

    #[test]
    fn curve_rows_and_csv() {
        let rows = fd_curve(3, 3).unwrap();
        assert_eq!(rows.len(), 1);
        let rows = fd_curve(2, 10).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.windows(2).all(|w| w[0].f_d < w[1].f_d));
        assert!((rows[8].f_d - 0.817_636_516_990_785).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.f_d.is_finite()));
        let csv = fd_curve_csv(&rows);
        assert!(csv.starts_with("d,f_d\n2,-0.5\n3,0.1745"));
        assert_eq!(csv.lines().count(), 10);
        assert!(fd_curve(1, 4).is_err());
        assert!(fd_curve(5, 4).is_err());
    }

    #[test]
    fn capacity_report_qutrit() {
        let r = capacity_report(3, 0.2, &Tolerances::default()).unwrap();
        assert!((r.capacity_nme - 1.3 * 3f64.log2()).abs() < 1e-12);
        assert_eq!(r.capacity_subspace, Some(2.0));
        assert!(r.nme_preferred);
        assert!((r.success_oracle - 0.6).abs() < 1e-12);
        assert!(!r.oracle_povm_valid);
        let r = capacity_report(3, 0.1, &Tolerances::default()).unwrap();
        assert!(!r.nme_preferred);
        assert!(capacity_report(3, 0.5, &Tolerances::default()).is_err());
    }

    #[test]
    fn sampler_edges() {
        assert_eq!(sample(&[0.0, 1.0], 0.0), 1);
        assert_eq!(sample(&[0.5, 0.5], 0.999_999_999_999), 1);
        assert_eq!(sample(&[0.3, 0.7 - 1e-17, 0.0], 1.0 - 1e-18), 1);
    }

    #[test]
    fn parallel_matches_sequential() {
        let s = from_probabilities(3, &[0.25, 0.35, 0.4]).unwrap();
        let tables = prepare(&s, 1, AChoice::Max, &Tolerances::default()).unwrap();
        let a = tally_parallel(&tables, 99, 5_000);
        let b = tally_sequential(&tables, 99, 5_000);
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn maximally_entangled_stage_one_is_exact() {
        let s = maximally_entangled(2).unwrap();
        let r = simulate_protocol(&s, 10_000, 1, AChoice::Max, &Tolerances::default()).unwrap();
        assert_eq!(r.m_identification_rate, 1.0);
        assert_eq!(r.per_message.iter().map(|c| c.sent).sum::<u64>(), 10_000);
    }

    #[test]
    fn simulation_rejects_bad_inputs() {
        let tol = Tolerances::default();
        let s = from_probabilities(3, &[0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            simulate_protocol(&s, 100, 0, AChoice::Paper, &tol),
            Err(Error::InvalidPovm { .. })
        ));
        assert!(simulate_protocol(&s, 0, 0, AChoice::Max, &tol).is_err());
        let degenerate = crate::states::make_schmidt_state(2, &[1.0, 0.0]).unwrap();
        assert!(simulate_protocol(&degenerate, 10, 0, AChoice::Max, &tol).is_err());
    }

    #[test]
    fn mutual_information_extremes() {
        // perfectly correlated 2×2 table carries one bit
        assert!((mutual_information(&[5, 0, 0, 5], 2, 2) - 1.0).abs() < 1e-12);
        assert!(mutual_information(&[5, 5, 5, 5], 2, 2).abs() < 1e-12);
    }
}
