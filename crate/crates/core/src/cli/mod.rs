//! Command-line front end: scenario ingestion, command dispatch and reports.

pub mod report;
pub mod scenario_file;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::decoherence::{decoherence_matrix, DecoherenceContext, FunctionalKind};
use crate::error::Error;
use crate::histories::History;
use crate::logic::{
    check_admissible, check_consistent_with, lattice_from_atoms, BooleanLattice, Element,
    ProbabilityModel, DEFAULT_CONSISTENCY_TOL,
};
use crate::numerics::{classify_default, operator_norm, C64, SPECTRAL_TOL};

pub use report::{Diagnostic, Report, Status};
pub use scenario_file::{load_scenario, Family, LoadedScenario, ScenarioFile, ValidationError};

use scenario_file::{family_atoms, matrix_to_spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    First,
    Extended,
}

impl From<KindArg> for FunctionalKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::First => FunctionalKind::FirstKind,
            KindArg::Extended => FunctionalKind::Extended,
        }
    }
}

/// Decoherence functionals and history logic for finite-dimensional scenarios.
#[derive(Debug, Clone, Parser)]
#[command(name = "effhist", version)]
pub struct Cli {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Consistency tolerance; overrides the family's own tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Validate the scenario and classify every operator.
    Validate,
    /// Class operator of a named history.
    Classop { history: String },
    /// Decoherence matrix over a family.
    Decohere {
        #[arg(long)]
        family: String,
        #[arg(long, value_enum, default_value_t = KindArg::First)]
        kind: KindArg,
    },
    /// Atom-pair consistency of a family's lattice.
    Consistent {
        #[arg(long)]
        family: String,
        /// Require the full complex value, not only its real part, to vanish.
        #[arg(long)]
        strict: bool,
    },
    /// Admissibility of a family's valuation.
    CheckLattice {
        #[arg(long)]
        family: String,
    },
    /// Probability of a lattice element.
    Prob {
        #[arg(long)]
        family: String,
        #[arg(long)]
        element: String,
    },
    /// Whether e1 implies e2, optionally through a common lower bound.
    Implies {
        #[arg(long)]
        family: String,
        e1: String,
        e2: String,
        #[arg(long)]
        via: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Classop { .. } => "classop",
            Command::Decohere { .. } => "decohere",
            Command::Consistent { .. } => "consistent",
            Command::CheckLattice { .. } => "check-lattice",
            Command::Prob { .. } => "prob",
            Command::Implies { .. } => "implies",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Failure {
    Usage(String),
    Validation(ValidationError),
    Numerical(String),
}

impl Failure {
    fn status(&self) -> Status {
        match self {
            Failure::Usage(_) => Status::UsageError,
            Failure::Validation(_) => Status::ValidationError,
            Failure::Numerical(_) => Status::NumericalFailure,
        }
    }

    fn payload(&self) -> Value {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => json!({ "message": m }),
            Failure::Validation(v) => json!({ "field": v.field, "message": v.message }),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownElement(_) | Error::NotCommonLowerBound | Error::InvalidParameter(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numerical(other.to_string()),
        }
    }
}

type Outcome = Result<(Value, Vec<Diagnostic>), Failure>;

/// Runs a parsed command line and produces its report.
pub fn execute(cli: &Cli) -> Report {
    let command = cli.command.name().to_string();
    let result = match load_scenario(&cli.scenario) {
        Ok(loaded) => dispatch(cli, &loaded),
        Err(v) => Err(Failure::Validation(v)),
    };
    match result {
        Ok((payload, diagnostics)) => Report {
            command,
            status: Status::Ok,
            payload,
            diagnostics,
        },
        Err(f) => Report {
            command,
            status: f.status(),
            payload: f.payload(),
            diagnostics: Vec::new(),
        },
    }
}

/// Parses `args`, runs the command, writes the report to stdout and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                Status::UsageError.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return code;
        }
    };
    let report = execute(&cli);
    if report.status != Status::Ok {
        if let Some(m) = report.payload.get("message").and_then(Value::as_str) {
            match report.payload.get("field").and_then(Value::as_str) {
                Some(field) => eprintln!("error: {field}: {m}"),
                None => eprintln!("error: {m}"),
            }
        }
    }
    let rendered = match cli.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(rendered.as_bytes());
        let _ = out.flush();
    }
    report.status.exit_code()
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn family<'a>(loaded: &'a LoadedScenario, name: &str) -> Result<&'a Family, Failure> {
    loaded
        .families
        .get(name)
        .ok_or_else(|| Failure::Usage(format!("unknown family: {name}")))
}

fn element(family: &Family, text: &str) -> Result<Element, Failure> {
    family.parse_element(text).map_err(Failure::Usage)
}

fn lattice(family: &Family) -> Result<BooleanLattice, Failure> {
    let invalid = |e: Error| {
        Failure::Validation(ValidationError {
            field: format!("families.{}", family.name),
            message: e.to_string(),
        })
    };
    let atoms = family_atoms(family).map_err(invalid)?;
    let lattice = lattice_from_atoms(atoms, family.zero_image.clone()).map_err(invalid)?;
    if family.valuation.is_empty() {
        Ok(lattice)
    } else {
        lattice
            .with_custom_valuation(family.valuation.clone())
            .map_err(invalid)
    }
}

fn consistency_tol(cli: &Cli, family: &Family) -> Result<f64, Failure> {
    let tol = cli
        .tol
        .or(family.spec.tolerance)
        .unwrap_or(DEFAULT_CONSISTENCY_TOL);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("invalid tolerance: {tol}")));
    }
    Ok(tol)
}

fn family_inputs(family: &Family) -> Value {
    json!({ "name": family.name, "family": family.spec })
}

fn dispatch(cli: &Cli, loaded: &LoadedScenario) -> Outcome {
    match &cli.command {
        Command::Validate => validate(loaded),
        Command::Classop { history } => classop(loaded, history),
        Command::Decohere { family: f, kind } => {
            decohere(loaded, family(loaded, f)?, (*kind).into())
        }
        Command::Consistent { family: f, strict } => {
            let fam = family(loaded, f)?;
            consistent(loaded, fam, consistency_tol(cli, fam)?, *strict)
        }
        Command::CheckLattice { family: f } => check_lattice(loaded, family(loaded, f)?),
        Command::Prob {
            family: f,
            element: e,
        } => {
            let fam = family(loaded, f)?;
            prob(loaded, fam, consistency_tol(cli, fam)?, e)
        }
        Command::Implies {
            family: f,
            e1,
            e2,
            via,
        } => {
            let fam = family(loaded, f)?;
            implies(
                loaded,
                fam,
                consistency_tol(cli, fam)?,
                e1,
                e2,
                via.as_deref(),
            )
        }
    }
}

fn validate(loaded: &LoadedScenario) -> Outcome {
    let s = &loaded.scenario;
    let rho_class = classify_default(s.initial_state());
    let purity = (s.initial_state() * s.initial_state()).trace().re;
    let operators: Map<String, Value> = loaded
        .operators
        .iter()
        .map(|(name, m)| {
            (
                name.clone(),
                serde_json::to_value(classify_default(m)).expect("serializable"),
            )
        })
        .collect();
    let histories: Map<String, Value> = loaded
        .histories
        .iter()
        .map(|(name, h)| {
            let (kind, support) = match h {
                History::Homogeneous(u) => ("homogeneous", u.support()),
                History::Tensor(t) => ("tensor", t.support().to_vec()),
            };
            (name.clone(), json!({ "kind": kind, "support": support }))
        })
        .collect();
    let families: Map<String, Value> = loaded
        .families
        .iter()
        .map(|(name, f)| {
            (
                name.clone(),
                json!({ "atoms": f.labels, "support": f.support }),
            )
        })
        .collect();
    let mut diagnostics = vec![Diagnostic::new(
        "initial_state.trace",
        (s.initial_state().trace().re - 1.0).abs(),
        rho_class.tol,
    )];
    let mut povms = Map::new();
    for (name, p) in &loaded.povms {
        let r = p.validate();
        diagnostics.push(Diagnostic::new(
            format!("povms.{name}.normalization"),
            r.deviation,
            crate::quantum::POVM_NORMALIZATION_TOL,
        ));
        povms.insert(name.clone(), serde_json::to_value(r).expect("serializable"));
    }
    let payload = json!({
        "valid": true,
        "dimension": s.dim(),
        "hbar": s.hbar(),
        "fiducial_time": s.fiducial_time(),
        "initial_state": { "class": rho_class, "purity": purity },
        "operators": operators,
        "histories": histories,
        "families": families,
        "povms": povms,
    });
    Ok((payload, diagnostics))
}

fn classop(loaded: &LoadedScenario, name: &str) -> Outcome {
    let h = loaded
        .histories
        .get(name)
        .ok_or_else(|| Failure::Usage(format!("unknown history: {name}")))?;
    let kind = match h {
        History::Homogeneous(_) => FunctionalKind::FirstKind,
        History::Tensor(_) => FunctionalKind::Extended,
    };
    let ctx = DecoherenceContext::new(loaded.scenario.clone(), kind);
    let c = ctx.class_operator(h)?;
    let norm = operator_norm(&c)?;
    let payload = json!({
        "history": name,
        "kind": kind,
        "matrix": matrix_to_spec(&c),
        "operator_norm": norm,
        "inputs": { "history": loaded.file.histories[name] },
    });
    let diagnostics = vec![Diagnostic::new(
        "operator_norm_excess",
        (norm - 1.0).max(0.0),
        SPECTRAL_TOL,
    )];
    Ok((payload, diagnostics))
}

fn decohere(loaded: &LoadedScenario, family: &Family, kind: FunctionalKind) -> Outcome {
    let ctx = DecoherenceContext::new(loaded.scenario.clone(), kind);
    let members: Vec<(String, History)> = family
        .labels
        .iter()
        .cloned()
        .zip(family.members.iter().cloned())
        .collect();
    let m = decoherence_matrix(&ctx, &members).map_err(|e| match e {
        Error::MixedHistoryKinds => Failure::Validation(ValidationError {
            field: format!("families.{}.atoms", family.name),
            message: e.to_string(),
        }),
        other => other.into(),
    })?;
    let residuals = m.residuals();
    let matrix: Vec<Vec<Value>> = m
        .values
        .iter()
        .map(|row| row.iter().map(|&z| complex_json(z)).collect())
        .collect();
    let payload = json!({
        "family": family.name,
        "kind": kind,
        "labels": m.labels,
        "matrix": matrix,
        "residuals": residuals,
        "inputs": family_inputs(family),
    });
    let tol = SPECTRAL_TOL;
    let diagnostics = vec![
        Diagnostic::new("hermiticity", residuals.hermiticity, tol),
        Diagnostic::new("diagonal_imaginary", residuals.diagonal_imaginary, tol),
        Diagnostic::new(
            "diagonal_negativity",
            (-residuals.min_diagonal).max(0.0),
            tol,
        ),
    ];
    Ok((payload, diagnostics))
}

fn consistent(loaded: &LoadedScenario, family: &Family, tol: f64, strict: bool) -> Outcome {
    let lattice = lattice(family)?;
    let ctx = DecoherenceContext::extended(loaded.scenario.clone());
    let r = check_consistent_with(&ctx, &lattice, tol, strict)?;
    let worst_pair = r
        .worst_pair
        .map(|(i, j)| json!([family.labels[i], family.labels[j]]));
    let payload = json!({
        "family": family.name,
        "consistent": r.consistent,
        "worst_pair": worst_pair,
        "worst_value": r.worst_value,
        "tolerance": tol,
        "threshold": r.tol,
        "strict": r.strict,
        "inputs": family_inputs(family),
    });
    Ok((
        payload,
        vec![Diagnostic::new("worst_value", r.worst_value, r.tol)],
    ))
}

fn check_lattice(loaded: &LoadedScenario, family: &Family) -> Outcome {
    let ctx = DecoherenceContext::extended(loaded.scenario.clone());
    let lattice = lattice(family)?;
    let r = check_admissible(&ctx, &lattice, None)?;
    let labels = |e: Element| family.element_labels(e);
    let valuation_violations: Vec<Value> = r
        .valuation_violations
        .iter()
        .map(|v| {
            json!({
                "b1": labels(v.b1),
                "b2": labels(v.b2),
                "residual": v.residual,
                "lhs_defined": v.lhs_defined,
                "rhs_defined": v.rhs_defined,
            })
        })
        .collect();
    let weight_violations: Vec<Value> = r
        .weight_violations
        .iter()
        .map(|v| json!({ "e1": labels(v.e1), "e2": labels(v.e2), "residual": v.residual }))
        .collect();
    let payload = json!({
        "family": family.name,
        "passed": r.passed,
        "injective": r.injective,
        "min_image_distance": r.min_image_distance,
        "max_valuation_residual": r.max_valuation_residual,
        "max_weight_residual": r.max_weight_residual,
        "valuation_violations": valuation_violations,
        "weight_violations": weight_violations,
        "custom_valuation": !family.valuation.is_empty(),
        "inputs": family_inputs(family),
    });
    let diagnostics = vec![
        Diagnostic::new(
            "valuation_residual",
            r.max_valuation_residual,
            crate::logic::VALUATION_TOL,
        ),
        Diagnostic::new(
            "weight_residual",
            r.max_weight_residual,
            crate::logic::WEIGHT_TOL,
        ),
    ];
    Ok((payload, diagnostics))
}

fn prob(loaded: &LoadedScenario, family: &Family, tol: f64, text: &str) -> Outcome {
    let lattice = lattice(family)?;
    let e = element(family, text)?;
    lattice.check_element(e)?;
    let ctx = DecoherenceContext::extended(loaded.scenario.clone());
    let model = ProbabilityModel::new(&ctx, &lattice, tol)?;
    let p = model.probability(e)?;
    let c = model.consistency();
    let payload = json!({
        "family": family.name,
        "element": family.element_labels(e),
        "probability": p,
        "normalization": model.normalization(),
        "inputs": family_inputs(family),
    });
    Ok((
        payload,
        vec![Diagnostic::new("worst_value", c.worst_value, c.tol)],
    ))
}

fn implies(
    loaded: &LoadedScenario,
    family: &Family,
    tol: f64,
    t1: &str,
    t2: &str,
    via: Option<&str>,
) -> Outcome {
    let lattice = lattice(family)?;
    let e1 = element(family, t1)?;
    let e2 = element(family, t2)?;
    let e3 = via.map(|t| element(family, t)).transpose()?;
    let ctx = DecoherenceContext::extended(loaded.scenario.clone());
    let model = ProbabilityModel::new(&ctx, &lattice, tol)?;
    let mut payload = BTreeMap::new();
    payload.insert("family", json!(family.name));
    payload.insert("e1", json!(family.element_labels(e1)));
    payload.insert("e2", json!(family.element_labels(e2)));
    payload.insert("p_e1", json!(model.probability(e1)?));
    payload.insert("inputs", family_inputs(family));
    let holds = match e3 {
        Some(e3) => {
            let holds = model.implies_lower_bound(e1, e2, e3)?;
            payload.insert("via", json!(family.element_labels(e3)));
            payload.insert(
                "ratio",
                json!(model.probability(e3)? / model.probability(e1)?),
            );
            holds
        }
        None => {
            payload.insert("conditional", json!(model.conditional(e2, e1)?));
            model.implies(e1, e2)?
        }
    };
    payload.insert("implies", json!(holds));
    let c = model.consistency();
    Ok((
        json!(payload),
        vec![Diagnostic::new("worst_value", c.worst_value, c.tol)],
    ))
}
