//! Command-line front end: binds specs, kernels, statistics and regimes from
//! files to the library operations and emits deterministic reports.
//!
//! Exit codes: 0 success (and "satisfied" for `verify`), 1 "not satisfied"
//! from `verify`, 2 usage or input errors. Structured output is byte-stable
//! for identical inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::accountant::{allocate, BudgetLedger};
use crate::error::{Error, Result};
use crate::five_safes::{assess, attach_dp, preset, PresetKind, SafesRegime, SafesReport};
use crate::invariants::{partition_by_invariant, InvariantStatistic, StatisticDocument};
use crate::mechanisms::{kernel_from_document, KernelDocument, Mechanism};
use crate::privacy_core::{validate_spec, DpSpecification, Flavor};
use crate::value::{parse_rational, ExtReal};
use crate::verifier::{satisfies, tightest_epsilon_with_notes, VerificationResult};

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(
    name = "privspec",
    version,
    about = "Verify finite mechanisms against differential-privacy specifications and situate \
             the results in a Five Safes assessment"
)]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a mechanism satisfies a specification.
    Verify {
        /// Kernel file (outputs + per-dataset probability rows).
        #[arg(long)]
        mechanism: PathBuf,
        /// Specification file (domain, multiverse, premetric, divergence, budget).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compute the tightest per-universe budget a mechanism supports.
    Epsilon {
        #[arg(long)]
        mechanism: PathBuf,
        /// Specification without a budget (a full spec file is also accepted;
        /// its budget is ignored).
        #[arg(long = "spec-sans-budget")]
        spec_sans_budget: PathBuf,
    },
    /// Append a specification's budget to a same-flavor ledger.
    Compose {
        /// Ledger file; created fresh when it does not exist yet.
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Label for the composed entry.
        #[arg(long)]
        label: String,
    },
    /// Divide a specification's budget across weighted projects.
    Allocate {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated `label=weight` pairs, e.g. `census=2,survey=1`.
        #[arg(long)]
        weights: String,
    },
    /// Print the multiverse induced by an invariant statistic.
    Universes {
        #[arg(long)]
        spec: PathBuf,
        /// Statistic file (label + dataset id → value map).
        #[arg(long)]
        statistic: PathBuf,
    },
    /// Render the Five Safes report for a regime file or a preset.
    Assess {
        #[arg(long, conflicts_with = "preset")]
        regime: Option<PathBuf>,
        /// One of: open-data, physical-enclave, virtual-enclave,
        /// synthetic-with-validation.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Verify a mechanism and situate the result inside a regime assessment.
    Report {
        #[arg(long)]
        mechanism: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        regime: PathBuf,
    },
}

/// Entry point used by the binary: parse, run, map errors to exit codes.
pub fn main() -> i32 {
    let invocation = match Invocation::try_parse() {
        Ok(i) => i,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    match run(&invocation) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

/// Execute one invocation; returns the process exit code.
pub fn run(invocation: &Invocation) -> Result<i32> {
    match &invocation.command {
        Command::Verify { mechanism, spec } => {
            let spec = load_spec(spec)?;
            let m = load_mechanism(mechanism, &spec.flavor)?;
            let result = satisfies(&m, &spec)?;
            let out = verify_output("verify", &result);
            emit(invocation, render_verify_text(&out), to_value(&out)?)?;
            Ok(if result.satisfied { 0 } else { 1 })
        }
        Command::Epsilon {
            mechanism,
            spec_sans_budget,
        } => {
            let flavor: Flavor = read_json(spec_sans_budget)?;
            let m = load_mechanism(mechanism, &flavor)?;
            let (tight, notes) = tightest_epsilon_with_notes(&m, &flavor)?;
            let out = EpsilonOutput {
                command: "epsilon".into(),
                tightest: tight.iter().map(|(k, v)| (k.clone(), rendered(v))).collect(),
                notes,
            };
            let mut lines: Vec<String> = out
                .tightest
                .iter()
                .map(|(k, v)| format!("{k}: {}", v.display()))
                .collect();
            lines.extend(out.notes.iter().map(|n| format!("note: {n}")));
            emit(invocation, lines.join("\n"), to_value(&out)?)?;
            Ok(0)
        }
        Command::Compose { ledger, spec, label } => {
            let spec = load_spec(spec)?;
            let fingerprint = spec.flavor.fingerprint();
            let base = if ledger.exists() {
                read_json::<BudgetLedger>(ledger)?
            } else {
                BudgetLedger::new(fingerprint.clone())
            };
            let composed = base.compose(label.clone(), &fingerprint, spec.budget.clone())?;
            // The ledger file is the persistent artifact; the emitted report
            // is a copy of it.
            let mut raw = serde_json::to_string_pretty(&composed)
                .map_err(|e| Error::schema(None, e.to_string()))?;
            raw.push('\n');
            std::fs::write(ledger, raw).map_err(|e| Error::io(ledger.display().to_string(), e))?;
            let out = ComposeOutput {
                command: "compose".into(),
                ledger: composed,
            };
            let totals = out
                .ledger
                .total
                .per_universe
                .iter()
                .map(|(k, v)| format!("{k}: {}", rendered(v).display()))
                .collect::<Vec<_>>()
                .join("\n");
            let text = format!(
                "composed {} entr{} — running total:\n{totals}",
                out.ledger.entries.len(),
                if out.ledger.entries.len() == 1 { "y" } else { "ies" }
            );
            emit(invocation, text, to_value(&out)?)?;
            Ok(0)
        }
        Command::Allocate { spec, weights } => {
            let spec = load_spec(spec)?;
            let weights = parse_weights(weights)?;
            let projects = allocate(&spec.budget, &weights)?;
            let out = AllocateOutput {
                command: "allocate".into(),
                projects: projects
                    .iter()
                    .map(|(label, budget)| ProjectBudget {
                        label: label.clone(),
                        budget: budget
                            .per_universe
                            .iter()
                            .map(|(k, v)| (k.clone(), rendered(v)))
                            .collect(),
                    })
                    .collect(),
            };
            let mut lines = Vec::new();
            for p in &out.projects {
                for (u, v) in &p.budget {
                    lines.push(format!("{}: {u}: {}", p.label, v.display()));
                }
            }
            emit(invocation, lines.join("\n"), to_value(&out)?)?;
            Ok(0)
        }
        Command::Universes { spec, statistic } => {
            let flavor: Flavor = read_json(spec)?;
            let doc: StatisticDocument = read_json(statistic)?;
            let stat = InvariantStatistic::from_document(&flavor.domain, &doc)
                .map_err(|e| contextualize(e, statistic))?;
            let partition = partition_by_invariant(&flavor.domain, &stat)?;
            let out = UniversesOutput {
                command: "universes".into(),
                statistic: stat.label.clone(),
                universes: partition
                    .universes
                    .iter()
                    .map(|u| UniverseOutput {
                        id: u.id.clone(),
                        members: u.members.iter().map(|m| m.0).collect(),
                        datasets: u
                            .members
                            .iter()
                            .map(|&m| flavor.domain.render_dataset(m))
                            .collect(),
                    })
                    .collect(),
            };
            let text = out
                .universes
                .iter()
                .map(|u| format!("{}: {}", u.id, u.datasets.join(" ")))
                .collect::<Vec<_>>()
                .join("\n");
            emit(invocation, text, to_value(&out)?)?;
            Ok(0)
        }
        Command::Assess { regime, preset: preset_name } => {
            let regimes: Vec<SafesRegime> = match (regime, preset_name) {
                (Some(path), None) => vec![read_json(path)?],
                (None, Some(name)) => preset(name.parse::<PresetKind>()?),
                _ => {
                    return Err(Error::Parameter(
                        "assess needs exactly one of --regime or --preset".into(),
                    ))
                }
            };
            let reports: Vec<SafesReport> =
                regimes.iter().map(assess).collect::<Result<_>>()?;
            let out = AssessOutput {
                command: "assess".into(),
                reports,
            };
            let text = out
                .reports
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            emit(invocation, text, to_value(&out)?)?;
            Ok(0)
        }
        Command::Report { mechanism, spec, regime } => {
            let spec = load_spec(spec)?;
            let m = load_mechanism(mechanism, &spec.flavor)?;
            let base: SafesRegime = read_json(regime)?;
            let result = satisfies(&m, &spec)?;
            let attached = attach_dp(&base, &result, spec.flavor.fingerprint())?;
            let assessment = assess(&attached)?;
            let verification = verify_output("report", &result);
            let out = ReportOutput {
                command: "report".into(),
                verification: verification.clone(),
                assessment: assessment.clone(),
            };
            let text = format!("{}\n{assessment}", render_verify_text(&verification));
            emit(invocation, text, to_value(&out)?)?;
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// Output schemas
// ---------------------------------------------------------------------------

/// Exact value plus decimal rendering; the decimal is absent for +∞.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenderedValue {
    pub exact: String,
    pub decimal: Option<f64>,
}

impl RenderedValue {
    fn display(&self) -> String {
        match self.decimal {
            Some(d) => format!("{} ≈ {d:.6}", self.exact),
            None => self.exact.clone(),
        }
    }
}

fn rendered(v: &ExtReal) -> RenderedValue {
    RenderedValue {
        exact: v.to_string(),
        decimal: if v.is_infinite() { None } else { Some(v.to_f64()) },
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub command: String,
    pub satisfied: bool,
    pub tightest: BTreeMap<String, RenderedValue>,
    pub witness: Option<WitnessOutput>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessOutput {
    pub universe: String,
    pub x: usize,
    pub x_prime: usize,
    pub lhs: RenderedValue,
    pub rhs: RenderedValue,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonOutput {
    pub command: String,
    pub tightest: BTreeMap<String, RenderedValue>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComposeOutput {
    pub command: String,
    pub ledger: BudgetLedger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocateOutput {
    pub command: String,
    pub projects: Vec<ProjectBudget>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectBudget {
    pub label: String,
    pub budget: BTreeMap<String, RenderedValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniversesOutput {
    pub command: String,
    pub statistic: String,
    pub universes: Vec<UniverseOutput>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniverseOutput {
    pub id: String,
    pub members: Vec<usize>,
    pub datasets: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssessOutput {
    pub command: String,
    pub reports: Vec<SafesReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportOutput {
    pub command: String,
    pub verification: VerifyOutput,
    pub assessment: SafesReport,
}

fn verify_output(command: &str, result: &VerificationResult) -> VerifyOutput {
    VerifyOutput {
        command: command.into(),
        satisfied: result.satisfied,
        tightest: result
            .per_universe_tightest
            .iter()
            .map(|(k, v)| (k.clone(), rendered(v)))
            .collect(),
        witness: result.witness.as_ref().map(|w| WitnessOutput {
            universe: w.universe.clone(),
            x: w.x.0,
            x_prime: w.x_prime.0,
            lhs: rendered(&w.lhs),
            rhs: rendered(&w.rhs),
        }),
        notes: result.notes.clone(),
    }
}

fn render_verify_text(out: &VerifyOutput) -> String {
    let mut lines = vec![if out.satisfied {
        "satisfied".to_string()
    } else {
        "not satisfied".to_string()
    }];
    for (u, v) in &out.tightest {
        lines.push(format!("tightest {u}: {}", v.display()));
    }
    if let Some(w) = &out.witness {
        lines.push(format!(
            "witness: universe {:?}, pair {} → {}: {} > {}",
            w.universe,
            w.x,
            w.x_prime,
            w.lhs.display(),
            w.rhs.display()
        ));
    }
    for n in &out.notes {
        lines.push(format!("note: {n}"));
    }
    lines.join("\n")
}

// ---------------------------------------------------------------------------
// Input handling
// ---------------------------------------------------------------------------

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), &e))
}

fn contextualize(err: Error, path: &Path) -> Error {
    match err {
        Error::Schema { path: None, message } => {
            Error::schema(Some(path.display().to_string()), message)
        }
        other => other,
    }
}

fn load_spec(path: &Path) -> Result<DpSpecification> {
    let spec: DpSpecification = read_json(path)?;
    let report = validate_spec(&spec);
    if !report.is_pass() {
        return Err(Error::schema(
            Some(path.display().to_string()),
            format!("specification invalid: {report}"),
        ));
    }
    Ok(spec)
}

fn load_mechanism(path: &Path, flavor: &Flavor) -> Result<Mechanism> {
    let doc: KernelDocument = read_json(path)?;
    kernel_from_document(&flavor.domain, &doc).map_err(|e| contextualize(e, path))
}

fn parse_weights(raw: &str) -> Result<Vec<(String, BigRational)>> {
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (label, value) = part.split_once('=').ok_or_else(|| {
            Error::Parameter(format!("weight {part:?} is not of the form label=value"))
        })?;
        out.push((label.trim().to_string(), parse_rational(value)?));
    }
    if out.is_empty() {
        return Err(Error::Parameter("no weights given".into()));
    }
    Ok(out)
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Error::schema(None, e.to_string()))
}

fn emit(invocation: &Invocation, text: String, json: serde_json::Value) -> Result<()> {
    let body = match invocation.format {
        OutputFormat::Text => {
            let mut t = text;
            if !t.ends_with('\n') {
                t.push('\n');
            }
            t
        }
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(&json)
                .map_err(|e| Error::schema(None, e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match &invocation.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Error::io(path.display().to_string(), e)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
