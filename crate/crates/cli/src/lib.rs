//! Argument parsing, dispatch and output documents for the `lunmeb` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lunmeb_core::discrimination::{
    assemble_povm, build_duals, build_representatives, max_feasible_a, outcome_probabilities,
    success_comparison, unambiguity_matrix, AChoice, OutcomeReport, PhaseConvention, PovmSet,
    SuccessComparison,
};
use lunmeb_core::lunmeb::{
    build_all_classes, build_subspace_basis, cross_class_orthogonality, extendability_check,
    fourier_criterion, ExtendabilityCertificate, FourierCriterion, OrthogonalityTable,
};
use lunmeb_core::operators::OperatorBasis;
use lunmeb_core::report::to_json_string;
use lunmeb_core::sdc::{
    capacity_report, capacity_report_for_state, fd_curve, fd_curve_csv, simulate_protocol,
    simulation_csv, CapacityReport, FdRow, SimulationResult,
};
use lunmeb_core::states::make_schmidt_state;
use lunmeb_core::{CMatrix, CVector, Error, SchmidtState, Tolerances};

/// Largest deviation of a typed `Σ C_k²` from 1 that is silently renormalized.
pub const TYPED_INPUT_SLACK: f64 = 1e-3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lunmeb",
    version,
    about = "LUNMEB constructions, certificates and capacities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orthogonal classes and extendability certificates.
    #[command(subcommand)]
    Basis(BasisCommand),
    /// Unambiguous-discrimination measurement.
    #[command(subcommand)]
    Povm(PovmCommand),
    /// Superdense-coding capacities and simulation.
    #[command(subcommand)]
    Sdc(SdcCommand),
    /// Threshold curve data.
    #[command(subcommand)]
    Fd(FdCommand),
}

#[derive(Debug, Subcommand)]
pub enum BasisCommand {
    /// All classes with their Gram matrices and cross-class overlaps.
    Build {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Extendability certificates over the full Weyl span.
    Check {
        #[command(flatten)]
        state: StateArgs,
        /// Check only this class.
        #[arg(long)]
        class: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The subspace-maximally-entangled basis and its certificate.
    Subspace {
        #[arg(long)]
        d: usize,
        /// Also certify against the full d×d Weyl span.
        #[arg(long)]
        full_check: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum PovmCommand {
    /// The measurement operators and their certificates.
    Build {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        povm: PovmArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Certificates, unambiguity matrix and success comparison.
    Check {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        povm: PovmArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SdcCommand {
    /// Capacity report for `--p0` or for a given state.
    Capacity {
        #[arg(long)]
        d: usize,
        #[arg(long, conflicts_with = "schmidt")]
        p0: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        schmidt: Option<Vec<f64>>,
        #[arg(long)]
        probs: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Seeded Monte Carlo run of the two-stage decoding.
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AChoiceArg::Paper)]
        a_choice: AChoiceArg,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum FdCommand {
    /// `f_d` for `d` in `from..=to`.
    Curve {
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long)]
    pub d: usize,
    /// Comma-separated Schmidt amplitudes `C_k`.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub schmidt: Vec<f64>,
    /// Read `--schmidt` as probabilities `p_k = C_k²`.
    #[arg(long)]
    pub probs: bool,
}

#[derive(Debug, Args)]
pub struct PovmArgs {
    #[arg(long, value_enum, default_value_t = ConventionArg::Dual)]
    pub convention: ConventionArg,
    #[arg(long, value_enum, default_value_t = AChoiceArg::Paper)]
    pub a_choice: AChoiceArg,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Dual,
    Literal,
}

impl From<ConventionArg> for PhaseConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Dual => PhaseConvention::DualOrthogonal,
            ConventionArg::Literal => PhaseConvention::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AChoiceArg {
    Paper,
    Max,
}

impl From<AChoiceArg> for AChoice {
    fn from(a: AChoiceArg) -> Self {
        match a {
            AChoiceArg::Paper => AChoice::Paper,
            AChoiceArg::Max => AChoice::Max,
        }
    }
}

/// How the typed coefficients became a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateInput {
    pub state: SchmidtState,
    /// `Σ C_k²` as typed.
    pub input_norm_sqr: f64,
    pub input_renormalized: bool,
}

pub fn parse_state(d: usize, values: &[f64], probs: bool) -> Result<StateInput, Error> {
    let coeffs: Vec<f64> = if probs {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeCoefficient { index, value });
        }
        values.iter().map(|p| p.sqrt()).collect()
    } else {
        values.to_vec()
    };
    let norm_sqr: f64 = coeffs.iter().map(|c| c * c).sum();
    let renormalize = norm_sqr.is_finite()
        && norm_sqr > 0.0
        && (norm_sqr - 1.0).abs() <= TYPED_INPUT_SLACK
        && (norm_sqr - 1.0).abs() > 1e-6;
    let scaled: Vec<f64> = if renormalize {
        let s = norm_sqr.sqrt();
        coeffs.iter().map(|c| c / s).collect()
    } else {
        coeffs
    };
    Ok(StateInput {
        state: make_schmidt_state(d, &scaled)?,
        input_norm_sqr: norm_sqr,
        input_renormalized: renormalize,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub n: usize,
    /// Indexed by the shift label `m`.
    pub vectors: Vec<CVector>,
    pub gram: CMatrix,
    pub gram_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisBuildDoc {
    pub input: StateInput,
    pub classes: Vec<ClassDoc>,
    /// Present for full-rank seeds.
    pub orthogonality: Option<OrthogonalityTable>,
    pub classes_orthonormal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCertificate {
    pub n: usize,
    pub gram_residual: f64,
    pub certificate: ExtendabilityCertificate,
    pub unextendible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCheckDoc {
    pub input: StateInput,
    pub full_rank: bool,
    pub classes: Vec<ClassCertificate>,
    /// Largest nullspace dimension over the checked classes.
    pub nullspace_dim: usize,
    pub unextendible: bool,
    /// Verdict of the coefficient system `Σ_p f_pm ω^{kp} = 0`.
    pub fourier: FourierCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceDoc {
    pub d: usize,
    pub seed: SchmidtState,
    pub count: usize,
    pub labels: Vec<[usize; 2]>,
    pub vectors: Vec<CVector>,
    pub gram_residual: f64,
    /// Over the subspace-Weyl span.
    pub certificate: ExtendabilityCertificate,
    pub unextendible: bool,
    /// Over the full Weyl span, with `--full-check`; reported only.
    pub full_weyl_certificate: Option<ExtendabilityCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmBuildDoc {
    pub input: StateInput,
    pub povm: PovmSet,
    pub first_violation: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmCheckDoc {
    pub input: StateInput,
    pub d: usize,
    pub convention: PhaseConvention,
    pub a_choice: AChoice,
    #[serde(rename = "A")]
    pub a: f64,
    pub max_feasible_a: f64,
    pub completeness_residual: f64,
    /// `P_0 … P_{d−1}`, then `P_E`.
    pub min_eigenvalues: Vec<f64>,
    pub valid: bool,
    pub first_violation: Option<(String, f64)>,
    /// `|⟨ψ̄_l|ψ_m⟩|`.
    pub unambiguity_matrix: Vec<Vec<f64>>,
    /// Outcome probabilities on each representative `ψ_l`.
    pub outcomes: Vec<OutcomeReport>,
    pub comparison: SuccessComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCurveDoc {
    pub from: usize,
    pub to: usize,
    pub rows: Vec<FdRow>,
}

/// Text to emit and the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub exit: i32,
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Certificate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidPovm { .. } => Failure::Certificate(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn json<T: Serialize>(doc: &T, ok: bool) -> Result<Outcome, Failure> {
    Ok(Outcome {
        body: to_json_string(doc)?,
        exit: if ok { EXIT_OK } else { EXIT_CERTIFICATE },
    })
}

fn json_only(out: &OutputArgs) -> Result<(), Failure> {
    match out.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Invalid(
            "csv output is available for `fd curve` and `sdc simulate` only".into(),
        )),
    }
}

pub fn execute(cmd: &Command, tol: &Tolerances) -> Result<Outcome, Failure> {
    match cmd {
        Command::Basis(BasisCommand::Build { state, out }) => {
            json_only(out)?;
            let input = parse_state(state.d, &state.schmidt, state.probs)?;
            let classes: Vec<ClassDoc> = build_all_classes(&input.state)
                .into_iter()
                .map(|c| ClassDoc {
                    n: c.n,
                    gram: c.gram(),
                    gram_residual: c.gram_residual(),
                    vectors: c.vectors,
                })
                .collect();
            let orthogonality = if input.state.is_full_rank() {
                Some(cross_class_orthogonality(&input.state, tol)?)
            } else {
                None
            };
            let classes_orthonormal = classes.iter().all(|c| c.gram_residual <= tol.rank_tol);
            json(
                &BasisBuildDoc {
                    input,
                    classes,
                    orthogonality,
                    classes_orthonormal,
                },
                classes_orthonormal,
            )
        }
        Command::Basis(BasisCommand::Check { state, class, out }) => {
            json_only(out)?;
            let input = parse_state(state.d, &state.schmidt, state.probs)?;
            let d = input.state.d();
            let selected: Vec<usize> = match class {
                Some(n) if *n >= d => return Err(Error::ClassOutOfRange { n: *n, d }.into()),
                Some(n) => vec![*n],
                None => (0..d).collect(),
            };
            let all = build_all_classes(&input.state);
            let classes = selected
                .into_iter()
                .map(|n| {
                    let c = &all[n];
                    let certificate =
                        extendability_check(&c.vectors, &input.state, OperatorBasis::Weyl, tol)?;
                    Ok(ClassCertificate {
                        n,
                        gram_residual: c.gram_residual(),
                        unextendible: certificate.is_unextendible(tol),
                        certificate,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let unextendible = classes.iter().all(|c| c.unextendible);
            let doc = BasisCheckDoc {
                full_rank: input.state.is_full_rank(),
                input,
                nullspace_dim: classes
                    .iter()
                    .map(|c| c.certificate.nullspace_dim)
                    .max()
                    .unwrap_or(0),
                unextendible,
                fourier: fourier_criterion(d, tol)?,
                classes,
            };
            json(&doc, unextendible)
        }
        Command::Basis(BasisCommand::Subspace { d, full_check, out }) => {
            json_only(out)?;
            let sb = build_subspace_basis(*d)?;
            let certificate =
                extendability_check(&sb.vectors, &sb.seed, OperatorBasis::SubspaceWeyl, tol)?;
            let full_weyl_certificate = if *full_check {
                Some(extendability_check(
                    &sb.vectors,
                    &sb.seed,
                    OperatorBasis::Weyl,
                    tol,
                )?)
            } else {
                None
            };
            let gram_residual = sb.gram_residual();
            let unextendible = certificate.is_unextendible(tol);
            let ok = unextendible && gram_residual <= tol.rank_tol;
            json(
                &SubspaceDoc {
                    d: sb.d,
                    count: sb.vectors.len(),
                    seed: sb.seed,
                    labels: sb.labels,
                    vectors: sb.vectors,
                    gram_residual,
                    certificate,
                    unextendible,
                    full_weyl_certificate,
                },
                ok,
            )
        }
        Command::Povm(PovmCommand::Build { state, povm, out }) => {
            json_only(out)?;
            let input = parse_state(state.d, &state.schmidt, state.probs)?;
            let reps = build_representatives(&input.state)?;
            let duals = build_duals(&reps, povm.convention.into())?;
            let set = assemble_povm(&duals, povm.a_choice.into(), tol)?;
            let first_violation = set.first_violation(tol);
            let ok = set.valid;
            json(
                &PovmBuildDoc {
                    input,
                    povm: set,
                    first_violation,
                },
                ok,
            )
        }
        Command::Povm(PovmCommand::Check { state, povm, out }) => {
            json_only(out)?;
            let input = parse_state(state.d, &state.schmidt, state.probs)?;
            let reps = build_representatives(&input.state)?;
            let duals = build_duals(&reps, povm.convention.into())?;
            let set = assemble_povm(&duals, povm.a_choice.into(), tol)?;
            let outcomes = reps
                .vectors
                .iter()
                .map(|v| outcome_probabilities(&set, v).map(|raw| OutcomeReport::new(raw, tol)))
                .collect::<Result<Vec<_>, Error>>()?;
            let doc = PovmCheckDoc {
                d: set.d,
                convention: set.convention,
                a_choice: set.a_choice,
                a: set.a,
                max_feasible_a: max_feasible_a(&duals, tol)?,
                completeness_residual: set.completeness_residual,
                first_violation: set.first_violation(tol),
                valid: set.valid,
                min_eigenvalues: set.min_eigenvalues.clone(),
                unambiguity_matrix: unambiguity_matrix(&duals, &reps)?,
                outcomes,
                comparison: success_comparison(&input.state, tol)?,
                input,
            };
            let ok = doc.valid && doc.completeness_residual <= 1e-12;
            json(&doc, ok)
        }
        Command::Sdc(SdcCommand::Capacity {
            d,
            p0,
            schmidt,
            probs,
            out,
        }) => {
            json_only(out)?;
            let report: CapacityReport = match (p0, schmidt) {
                (Some(p0), None) => capacity_report(*d, *p0, tol)?,
                (None, Some(values)) => {
                    capacity_report_for_state(&parse_state(*d, values, *probs)?.state, tol)?
                }
                _ => {
                    return Err(Failure::Invalid(
                        "give exactly one of --p0 or --schmidt".into(),
                    ))
                }
            };
            json(&report, true)
        }
        Command::Sdc(SdcCommand::Simulate {
            state,
            trials,
            seed,
            a_choice,
            out,
        }) => {
            let input = parse_state(state.d, &state.schmidt, state.probs)?;
            let result: SimulationResult =
                simulate_protocol(&input.state, *trials, *seed, (*a_choice).into(), tol)?;
            match out.format {
                Format::Json => json(&result, true),
                Format::Csv => Ok(Outcome {
                    body: simulation_csv(&result),
                    exit: EXIT_OK,
                }),
            }
        }
        Command::Fd(FdCommand::Curve { from, to, out }) => {
            let rows = fd_curve(*from, *to)?;
            match out.format {
                Format::Json => json(
                    &FdCurveDoc {
                        from: *from,
                        to: *to,
                        rows,
                    },
                    true,
                ),
                Format::Csv => Ok(Outcome {
                    body: fd_curve_csv(&rows),
                    exit: EXIT_OK,
                }),
            }
        }
    }
}

fn output_path(cmd: &Command) -> Option<&PathBuf> {
    let out = match cmd {
        Command::Basis(BasisCommand::Build { out, .. })
        | Command::Basis(BasisCommand::Check { out, .. })
        | Command::Basis(BasisCommand::Subspace { out, .. })
        | Command::Povm(PovmCommand::Build { out, .. })
        | Command::Povm(PovmCommand::Check { out, .. })
        | Command::Sdc(SdcCommand::Capacity { out, .. })
        | Command::Sdc(SdcCommand::Simulate { out, .. })
        | Command::Fd(FdCommand::Curve { out, .. }) => out,
    };
    out.output.as_ref()
}

/// Parses, executes, writes the document and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let tol = Tolerances::default();
    match execute(&cli.command, &tol) {
        Ok(outcome) => {
            let written = match output_path(&cli.command) {
                Some(path) => std::fs::write(path, &outcome.body),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(outcome.body.as_bytes())
                }
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return EXIT_INVALID;
            }
            if outcome.exit == EXIT_CERTIFICATE {
                eprintln!("certificate failed; see the emitted document");
            }
            outcome.exit
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Certificate(msg)) => {
            eprintln!("certificate failed: {msg}");
            EXIT_CERTIFICATE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_coefficients_within_slack_are_renormalized() {
        let input = parse_state(3, &[0.447, 0.548, 0.707], false).unwrap();
        assert!(input.input_renormalized);
        let sum: f64 = input.state.coeffs().iter().map(|c| c * c).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_input_is_kept() {
        let input = parse_state(2, &[0.3, 0.7], true).unwrap();
        assert!(!input.input_renormalized);
        assert!((input.state.p0() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(parse_state(3, &[0.5, 0.5, 0.5], false).is_err());
        assert!(parse_state(2, &[-0.3, 1.3], true).is_err());
        assert!(parse_state(3, &[0.6, 0.8], false).is_err());
    }

    #[test]
    fn povm_error_maps_to_certificate_exit() {
        let f: Failure = Error::InvalidPovm {
            element: "P_E".into(),
            eigenvalue: -1.0,
        }
        .into();
        assert!(matches!(f, Failure::Certificate(_)));
        let f: Failure = Error::NonFinite.into();
        assert!(matches!(f, Failure::Invalid(_)));
    }
}
