//! Scenario file schema and its validation into library objects.
//!
//! Complex scalars are `[re, im]` pairs and matrices are row-major nested
//! arrays of such pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::histories::{
    sigma_fin, union_support, History, HomogeneousEffectHistory, TensorHistory,
};
use crate::logic::Element;
use crate::numerics::{classify_default, ComplexMatrix, C64};
use crate::quantum::{PovMeasure, Scenario};

pub type ComplexPair = [f64; 2];
pub type MatrixSpec = Vec<Vec<ComplexPair>>;

/// Pure states must have unit norm within this tolerance.
pub const STATE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    pub fiducial_time: f64,
    pub hamiltonian: MatrixSpec,
    pub initial_state: StateSpec,
    #[serde(default)]
    pub operators: BTreeMap<String, MatrixSpec>,
    #[serde(default)]
    pub histories: BTreeMap<String, HistorySpec>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilySpec>,
    /// Named POV measures given as lists of operator names.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub povms: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Density { matrix: MatrixSpec },
    Pure { vector: Vec<ComplexPair> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HistorySpec {
    Homogeneous {
        events: Vec<EventSpec>,
    },
    Tensor {
        support: Vec<f64>,
        matrix: MatrixSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    pub operator: String,
}

/// A named family: atom labels plus optional lattice settings. A bare list of
/// labels is accepted as shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "FamilyRepr")]
pub struct FamilySpec {
    pub atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_image: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<Vec<ValuationEntry>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyRepr {
    Labels(Vec<String>),
    Full {
        atoms: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
        #[serde(default)]
        zero_image: Option<MatrixSpec>,
        #[serde(default)]
        valuation: Option<Vec<ValuationEntry>>,
    },
}

impl From<FamilyRepr> for FamilySpec {
    fn from(repr: FamilyRepr) -> Self {
        match repr {
            FamilyRepr::Labels(atoms) => FamilySpec {
                atoms,
                tolerance: None,
                zero_image: None,
                valuation: None,
            },
            FamilyRepr::Full {
                atoms,
                tolerance,
                zero_image,
                valuation,
            } => FamilySpec {
                atoms,
                tolerance,
                zero_image,
                valuation,
            },
        }
    }
}

/// One custom valuation image: `element` in `+`-joined label notation and a
/// matrix on the family's common support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuationEntry {
    pub element: String,
    pub matrix: MatrixSpec,
}

/// The first problem found while validating a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// A family after validation: atoms resolved to histories and the optional
/// lattice data parsed on the common support of the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub name: String,
    pub spec: FamilySpec,
    pub labels: Vec<String>,
    pub members: Vec<History>,
    pub support: Vec<f64>,
    pub zero_image: Option<TensorHistory>,
    pub valuation: BTreeMap<Element, TensorHistory>,
}

impl Family {
    /// Parses `+`- or `,`-joined atom labels. Labels may themselves contain
    /// `+`, so the string is segmented against the known labels; `0` and `1`
    /// denote the bottom and top elements unless they are labels.
    pub fn parse_element(&self, text: &str) -> Result<Element, String> {
        parse_element(&self.labels, text)
    }

    pub fn element_labels(&self, e: Element) -> Vec<String> {
        e.atoms().map(|i| self.labels[i].clone()).collect()
    }
}

pub fn parse_element(labels: &[String], text: &str) -> Result<Element, String> {
    let text = text.trim();
    if let Some(i) = labels.iter().position(|l| l == text) {
        return Ok(Element::singleton(i));
    }
    match text {
        "" | "0" => return Ok(Element::EMPTY),
        "1" => return Ok(Element::full(labels.len())),
        _ => {}
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(labels[i].len()));
    let mut memo = vec![None; text.len() + 1];
    segment(text, 0, labels, &order, &mut memo)
        .map(Element::from_atoms)
        .ok_or_else(|| format!("cannot parse element '{text}' from atom labels"))
}

fn segment(
    text: &str,
    pos: usize,
    labels: &[String],
    order: &[usize],
    memo: &mut Vec<Option<Option<Vec<usize>>>>,
) -> Option<Vec<usize>> {
    if let Some(known) = &memo[pos] {
        return known.clone();
    }
    let rest = &text[pos..];
    let mut found = None;
    for &i in order {
        let label = &labels[i];
        if label.is_empty() || !rest.starts_with(label.as_str()) {
            continue;
        }
        let next = pos + label.len();
        if next == text.len() {
            found = Some(vec![i]);
            break;
        }
        if matches!(text.as_bytes()[next], b'+' | b',') {
            if let Some(mut tail) = segment(text, next + 1, labels, order, memo) {
                tail.push(i);
                found = Some(tail);
                break;
            }
        }
    }
    memo[pos] = Some(found.clone());
    found
}

/// A fully validated scenario with all named objects resolved.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub operators: BTreeMap<String, ComplexMatrix>,
    pub histories: BTreeMap<String, History>,
    pub families: BTreeMap<String, Family>,
    pub povms: BTreeMap<String, PovMeasure>,
}

fn parse_matrix(
    spec: &MatrixSpec,
    dim: usize,
    field: &str,
) -> Result<ComplexMatrix, ValidationError> {
    if spec.len() != dim || spec.iter().any(|row| row.len() != dim) {
        return Err(ValidationError::new(
            field,
            format!("expected a {dim}x{dim} matrix"),
        ));
    }
    let data = spec
        .iter()
        .flatten()
        .map(|[re, im]| C64::new(*re, *im))
        .collect();
    ComplexMatrix::new(dim, data).map_err(|e| ValidationError::new(field, e.to_string()))
}

pub fn matrix_to_spec(m: &ComplexMatrix) -> MatrixSpec {
    m.rows()
        .iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile, ValidationError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ValidationError::new("file", format!("cannot read {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| ValidationError::new("file", format!("parse error: {e}")))
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ValidationError> {
    validate_scenario(read_scenario_file(path)?)
}

pub fn validate_scenario(file: ScenarioFile) -> Result<LoadedScenario, ValidationError> {
    let dim = file.dimension;
    if dim == 0 {
        return Err(ValidationError::new(
            "dimension",
            "dimension must be positive",
        ));
    }
    let hbar = file.hbar.unwrap_or(1.0);
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(ValidationError::new("hbar", "hbar must be positive"));
    }
    let hamiltonian = parse_matrix(&file.hamiltonian, dim, "hamiltonian")?;
    if !classify_default(&hamiltonian).is_hermitian {
        return Err(ValidationError::new("hamiltonian", "not hermitian"));
    }
    let rho = match &file.initial_state {
        StateSpec::Density { matrix } => {
            let rho = parse_matrix(matrix, dim, "initial_state.matrix")?;
            if !classify_default(&rho).is_density {
                return Err(ValidationError::new(
                    "initial_state.matrix",
                    "not a density operator",
                ));
            }
            rho
        }
        StateSpec::Pure { vector } => {
            if vector.len() != dim {
                return Err(ValidationError::new(
                    "initial_state.vector",
                    format!("expected {dim} components"),
                ));
            }
            let psi: Vec<C64> = vector.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_TOL {
                return Err(ValidationError::new(
                    "initial_state.vector",
                    format!("state not normalized (norm {norm})"),
                ));
            }
            ComplexMatrix::outer(&psi)
                .map_err(|e| ValidationError::new("initial_state.vector", e.to_string()))?
        }
    };
    let scenario = Scenario::with_hbar(hamiltonian, rho, file.fiducial_time, hbar)
        .map_err(|e| ValidationError::new("scenario", e.to_string()))?;

    let mut operators = BTreeMap::new();
    for (name, spec) in &file.operators {
        let field = format!("operators.{name}");
        let m = parse_matrix(spec, dim, &field)?;
        if !classify_default(&m).is_effect {
            return Err(ValidationError::new(
                field,
                format!("not an effect: {name}"),
            ));
        }
        operators.insert(name.clone(), m);
    }

    let mut histories = BTreeMap::new();
    for (name, spec) in &file.histories {
        let field = format!("histories.{name}");
        let history = match spec {
            HistorySpec::Homogeneous { events } => {
                let mut resolved = Vec::with_capacity(events.len());
                for (k, event) in events.iter().enumerate() {
                    let op = operators.get(&event.operator).ok_or_else(|| {
                        ValidationError::new(
                            format!("{field}.events[{k}].operator"),
                            format!("unknown operator: {}", event.operator),
                        )
                    })?;
                    resolved.push((event.time, op.clone()));
                }
                History::Homogeneous(
                    HomogeneousEffectHistory::new(dim, resolved)
                        .map_err(|e| ValidationError::new(field.as_str(), e.to_string()))?,
                )
            }
            HistorySpec::Tensor { support, matrix } => {
                let total = dim.checked_pow(support.len() as u32).ok_or_else(|| {
                    ValidationError::new(field.as_str(), "tensor dimension overflow")
                })?;
                let m = parse_matrix(matrix, total, &format!("{field}.matrix"))?;
                if !classify_default(&m).is_effect {
                    return Err(ValidationError::new(
                        format!("{field}.matrix"),
                        format!("not an effect: {name}"),
                    ));
                }
                History::Tensor(
                    TensorHistory::new(dim, support.clone(), m)
                        .map_err(|e| ValidationError::new(field.as_str(), e.to_string()))?,
                )
            }
        };
        histories.insert(name.clone(), history);
    }

    let mut families = BTreeMap::new();
    for (name, spec) in &file.families {
        families.insert(name.clone(), load_family(name, spec, &histories, dim)?);
    }

    let mut povms = BTreeMap::new();
    for (name, outcomes) in &file.povms {
        let field = format!("povms.{name}");
        let effects = outcomes
            .iter()
            .map(|o| {
                operators.get(o).cloned().ok_or_else(|| {
                    ValidationError::new(field.as_str(), format!("unknown operator: {o}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let povm = PovMeasure::new(outcomes.clone(), effects)
            .map_err(|e| ValidationError::new(field.as_str(), e.to_string()))?;
        povms.insert(name.clone(), povm);
    }

    Ok(LoadedScenario {
        file,
        scenario,
        operators,
        histories,
        families,
        povms,
    })
}

fn load_family(
    name: &str,
    spec: &FamilySpec,
    histories: &BTreeMap<String, History>,
    dim: usize,
) -> Result<Family, ValidationError> {
    let field = format!("families.{name}");
    if spec.atoms.is_empty() {
        return Err(ValidationError::new(field, "family has no atoms"));
    }
    if let Some(tol) = spec.tolerance {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(ValidationError::new(
                format!("{field}.tolerance"),
                "tolerance must be non-negative",
            ));
        }
    }
    let mut members = Vec::with_capacity(spec.atoms.len());
    let mut support = Vec::new();
    for (k, label) in spec.atoms.iter().enumerate() {
        if spec.atoms[..k].contains(label) {
            return Err(ValidationError::new(
                format!("{field}.atoms"),
                format!("duplicate atom: {label}"),
            ));
        }
        let h = histories.get(label).ok_or_else(|| {
            ValidationError::new(
                format!("{field}.atoms"),
                format!("unknown history: {label}"),
            )
        })?;
        let tensor = h
            .to_tensor()
            .map_err(|e| ValidationError::new(format!("{field}.atoms"), e.to_string()))?;
        support = union_support(&support, tensor.support());
        members.push(h.clone());
    }
    let total = dim
        .checked_pow(support.len() as u32)
        .ok_or_else(|| ValidationError::new(field.as_str(), "tensor dimension overflow"))?;
    let on_support = |m: &MatrixSpec, f: String| -> Result<TensorHistory, ValidationError> {
        let op = parse_matrix(m, total, &f)?;
        TensorHistory::new(dim, support.clone(), op)
            .map_err(|e| ValidationError::new(f, e.to_string()))
    };
    let zero_image = spec
        .zero_image
        .as_ref()
        .map(|m| on_support(m, format!("{field}.zero_image")))
        .transpose()?;
    let mut valuation = BTreeMap::new();
    for (k, entry) in spec.valuation.iter().flatten().enumerate() {
        let f = format!("{field}.valuation[{k}]");
        let element = parse_element(&spec.atoms, &entry.element)
            .map_err(|e| ValidationError::new(format!("{f}.element"), e))?;
        valuation.insert(element, on_support(&entry.matrix, format!("{f}.matrix"))?);
    }
    Ok(Family {
        name: name.to_string(),
        spec: spec.clone(),
        labels: spec.atoms.clone(),
        members,
        support,
        zero_image,
        valuation,
    })
}

/// Lattice view of a family's atoms.
pub fn family_atoms(family: &Family) -> crate::error::Result<Vec<TensorHistory>> {
    family
        .members
        .iter()
        .map(|h| match h {
            History::Homogeneous(u) => sigma_fin(u),
            History::Tensor(t) => Ok(t.clone()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn element_parsing_with_plus_in_labels() {
        let l = labels(&["h++", "h+-", "h-+", "h--"]);
        assert_eq!(parse_element(&l, "h++").unwrap(), Element::singleton(0));
        assert_eq!(
            parse_element(&l, "h++,h+-").unwrap(),
            Element::from_atoms([0, 1])
        );
        assert_eq!(
            parse_element(&l, "h+++h-+").unwrap(),
            Element::from_atoms([0, 2])
        );
        assert_eq!(
            parse_element(&l, "h--+h+-+h++").unwrap(),
            Element::from_atoms([0, 1, 3])
        );
        assert_eq!(parse_element(&l, "1").unwrap(), Element::full(4));
        assert_eq!(parse_element(&l, "0").unwrap(), Element::EMPTY);
        assert!(parse_element(&l, "h+").is_err());
        assert!(parse_element(&l, "h++;h+-").is_err());
    }

    #[test]
    fn family_shorthand() {
        let f: FamilySpec = serde_json::from_str(r#"["a", "b"]"#).unwrap();
        assert_eq!(f.atoms, labels(&["a", "b"]));
        let f: FamilySpec = serde_json::from_str(r#"{"atoms": ["a"], "tolerance": 1e-6}"#).unwrap();
        assert_eq!(f.tolerance, Some(1e-6));
    }

    fn minimal(state: &str, operators: &str) -> ScenarioFile {
        serde_json::from_str(&format!(
            r#"{{
                "dimension": 2,
                "fiducial_time": 0.0,
                "hamiltonian": [[[0,0],[0,0]],[[0,0],[0,0]]],
                "initial_state": {state},
                "operators": {operators}
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn minimal_qubit_loads() {
        let loaded = validate_scenario(minimal(
            r#"{"kind": "pure", "vector": [[1,0],[0,0]]}"#,
            "{}",
        ))
        .unwrap();
        assert_eq!(
            loaded.scenario.initial_state(),
            &ComplexMatrix::from_diagonal(&[1.0, 0.0])
        );
    }

    #[test]
    fn rejects_non_effect_operator() {
        let err = validate_scenario(minimal(
            r#"{"kind": "pure", "vector": [[1,0],[0,0]]}"#,
            r#"{"big": [[[1.2,0],[0,0]],[[0,0],[0,0]]]}"#,
        ))
        .unwrap_err();
        assert_eq!(err.field, "operators.big");
        assert_eq!(err.message, "not an effect: big");
    }

    #[test]
    fn rejects_unnormalized_state() {
        let err = validate_scenario(minimal(
            r#"{"kind": "pure", "vector": [[1,0],[1,0]]}"#,
            "{}",
        ))
        .unwrap_err();
        assert_eq!(err.field, "initial_state.vector");
        assert!(err.message.starts_with("state not normalized"));
        // norm sqrt(2)
        assert!(err.message.contains("1.414"));
    }
}
