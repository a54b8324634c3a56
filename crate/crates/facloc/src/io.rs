//! On-disk formats: the versioned instance file and the JSON report bodies
//! shared by the CLI and the C ABI.
//!
//! Rationals are serialized as exact strings (`"p/q"`), never floats, so
//! reports are diffable and parse back bit-exact. A 20-digit half-even
//! decimal rendering is included next to exact values for human reading
//! only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{AuditReport, Deviation, DeviationKind, RatioReport, RatioValue};
use crate::model::{
    decimal_string, format_rational, parse_rational, Agent, Instance, Lottery, ModelError,
    Rational, Solution,
};
use crate::solver::OptResult;

pub const INSTANCE_FORMAT_VERSION: u32 = 1;
/// Fractional digits of the human-readable decimal column.
pub const DECIMAL_DIGITS: usize = 20;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json syntax error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported instance format version {got} (expected {expected})")]
    UnsupportedVersion { got: u32, expected: u32 },
    #[error("{field}: {source}")]
    Rational {
        field: String,
        source: crate::model::RationalParseError,
    },
    #[error("{field}: approval must be 0 or 1, got {got}")]
    BadApproval { field: String, got: u8 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spec(#[from] BadApprovalModel),
}

/// The instance file: a versioned JSON document with exact rational strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct InstanceFile {
    pub version: u32,
    pub k: usize,
    pub candidates: Vec<String>,
    pub agents: Vec<AgentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AgentFile {
    pub x: String,
    pub approvals: Vec<u8>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            version: INSTANCE_FORMAT_VERSION,
            k: inst.k,
            candidates: inst.candidates.iter().map(format_rational).collect(),
            agents: inst
                .agents
                .iter()
                .map(|a| AgentFile {
                    x: format_rational(&a.position),
                    approvals: a.approvals.iter().map(|&b| u8::from(b)).collect(),
                })
                .collect(),
        }
    }

    pub fn into_instance(self) -> Result<Instance, IoError> {
        if self.version != INSTANCE_FORMAT_VERSION {
            return Err(IoError::UnsupportedVersion {
                got: self.version,
                expected: INSTANCE_FORMAT_VERSION,
            });
        }
        let mut candidates = Vec::with_capacity(self.candidates.len());
        for (i, text) in self.candidates.iter().enumerate() {
            candidates.push(parse_rational(text).map_err(|source| IoError::Rational {
                field: format!("candidates[{i}]"),
                source,
            })?);
        }
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, af) in self.agents.iter().enumerate() {
            let position = parse_rational(&af.x).map_err(|source| IoError::Rational {
                field: format!("agents[{i}].x"),
                source,
            })?;
            let mut approvals = Vec::with_capacity(af.approvals.len());
            for (j, &bit) in af.approvals.iter().enumerate() {
                match bit {
                    0 => approvals.push(false),
                    1 => approvals.push(true),
                    got => {
                        return Err(IoError::BadApproval {
                            field: format!("agents[{i}].approvals[{j}]"),
                            got,
                        })
                    }
                }
            }
            agents.push(Agent::new(position, approvals));
        }
        Ok(Instance::new(self.k, agents, candidates)?)
    }
}

fn json_error(err: serde_json::Error) -> IoError {
    IoError::Json {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses an instance file; parsing is exact (`"0.43"` becomes `43/100`) and
/// all model invariants are validated.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(json_error)?;
    file.into_instance()
}

/// Canonical pretty-printed instance document with a trailing newline.
/// `parse_instance(render_instance(i)) == i` exactly.
pub fn render_instance(inst: &Instance) -> String {
    let file = InstanceFile::from_instance(inst);
    let mut s = serde_json::to_string_pretty(&file).expect("instance file serializes");
    s.push('\n');
    s
}

/// An exact value with its decimal rendering.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RationalJson {
    pub exact: String,
    pub decimal: String,
}

impl RationalJson {
    pub fn from_rational(r: &Rational) -> Self {
        RationalJson {
            exact: format_rational(r),
            decimal: decimal_string(r, DECIMAL_DIGITS),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SolutionJson {
    pub facility: usize,
    pub location: String,
}

impl SolutionJson {
    pub fn from_solution(sol: &Solution) -> Self {
        SolutionJson {
            facility: sol.facility,
            location: format_rational(&sol.location),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LotteryAtomJson {
    pub facility: usize,
    pub location: String,
    pub probability: RationalJson,
}

pub fn lottery_to_json(lottery: &Lottery) -> Vec<LotteryAtomJson> {
    lottery
        .atoms()
        .iter()
        .map(|(sol, p)| LotteryAtomJson {
            facility: sol.facility,
            location: format_rational(&sol.location),
            probability: RationalJson::from_rational(p),
        })
        .collect()
}

/// Output of `facloc eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReportJson {
    pub instance: String,
    pub mechanism: String,
    pub case: String,
    pub lottery: Vec<LotteryAtomJson>,
    /// Present when the lottery is a point mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionJson>,
    pub expected_welfare: RationalJson,
}

/// Output of `facloc opt`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptReportJson {
    pub instance: String,
    pub best: SolutionJson,
    pub opt_welfare: RationalJson,
    pub table: Vec<OptRowJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptRowJson {
    pub facility: usize,
    pub location: String,
    pub welfare: RationalJson,
}

pub fn opt_report_json(inst: &Instance, opt: &OptResult) -> OptReportJson {
    OptReportJson {
        instance: inst.digest(),
        best: SolutionJson::from_solution(&opt.best),
        opt_welfare: RationalJson::from_rational(&opt.opt_welfare),
        table: opt
            .full_table
            .iter()
            .map(|(sol, w)| OptRowJson {
                facility: sol.facility,
                location: format_rational(&sol.location),
                welfare: RationalJson::from_rational(w),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationJson {
    pub agent: usize,
    pub kind: String,
    pub report: serde_json::Value,
    pub truthful_utility: RationalJson,
    pub deviant_utility: RationalJson,
}

fn deviation_json(d: &Deviation) -> DeviationJson {
    let (kind, report) = match &d.kind {
        DeviationKind::PreferenceReport(v) => (
            "preferences".to_string(),
            serde_json::json!(v.iter().map(|&b| u8::from(b)).collect::<Vec<u8>>()),
        ),
        DeviationKind::PositionReport(p) => {
            ("position".to_string(), serde_json::json!(format_rational(p)))
        }
    };
    DeviationJson {
        agent: d.agent,
        kind,
        report,
        truthful_utility: RationalJson::from_rational(&d.truthful_utility),
        deviant_utility: RationalJson::from_rational(&d.deviant_utility),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReportJson {
    pub instance: String,
    pub mechanism: String,
    pub exhaustive_preferences: bool,
    pub deviations_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lottery_invariant: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_cap: Option<u64>,
    pub deviations: Vec<DeviationJson>,
}

pub fn audit_report_json(report: &AuditReport) -> AuditReportJson {
    AuditReportJson {
        instance: report.instance_id.clone(),
        mechanism: report.mechanism.clone(),
        exhaustive_preferences: report.exhaustive_preferences,
        deviations_checked: report.deviations_checked,
        lottery_invariant: report.lottery_invariant,
        budget_cap: report.budget_cap,
        deviations: report.deviations.iter().map(deviation_json).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimal: Option<String>,
}

pub fn ratio_json(ratio: &RatioValue) -> RatioJson {
    match ratio {
        RatioValue::Finite(r) => RatioJson {
            kind: "finite".to_string(),
            exact: Some(format_rational(r)),
            decimal: Some(decimal_string(r, DECIMAL_DIGITS)),
        },
        RatioValue::One => RatioJson {
            kind: "one".to_string(),
            exact: Some("1".to_string()),
            decimal: Some(decimal_string(&Rational::from_integer(1.into()), DECIMAL_DIGITS)),
        },
        RatioValue::Infinite => RatioJson {
            kind: "infinite".to_string(),
            exact: None,
            decimal: None,
        },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReportJson {
    pub instance: String,
    pub mechanism: String,
    pub opt: RationalJson,
    pub mech: RationalJson,
    pub ratio: RatioJson,
}

pub fn ratio_report_json(report: &RatioReport) -> RatioReportJson {
    RatioReportJson {
        instance: report.instance_id.clone(),
        mechanism: report.mechanism.clone(),
        opt: RationalJson::from_rational(&report.opt),
        mech: RationalJson::from_rational(&report.mech),
        ratio: ratio_json(&report.ratio),
    }
}

/// Pretty JSON with a trailing newline; the one formatting used for every
/// report so outputs stay byte-deterministic.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// File form of a random-family spec, used by `sweep --spec` and
/// `gen --family random --spec`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpecFile {
    pub seed: u64,
    pub n: [usize; 2],
    pub k: [usize; 2],
    pub denominator: u64,
    pub candidates: [usize; 2],
    /// One of `"single"`, `"nonempty"`, `"unrestricted"`.
    pub approvals: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown approval model {0:?} (expected single, nonempty or unrestricted)")]
pub struct BadApprovalModel(pub String);

impl SpecFile {
    pub fn from_spec(spec: &crate::generators::RandomSpec) -> Self {
        SpecFile {
            seed: spec.seed,
            n: [spec.n.0, spec.n.1],
            k: [spec.k.0, spec.k.1],
            denominator: spec.denominator,
            candidates: [spec.candidates.0, spec.candidates.1],
            approvals: spec.approvals.tag().to_string(),
        }
    }

    pub fn into_spec(self) -> Result<crate::generators::RandomSpec, BadApprovalModel> {
        let approvals = crate::generators::ApprovalModel::from_tag(&self.approvals)
            .ok_or_else(|| BadApprovalModel(self.approvals.clone()))?;
        Ok(crate::generators::RandomSpec {
            seed: self.seed,
            n: (self.n[0], self.n[1]),
            k: (self.k[0], self.k[1]),
            denominator: self.denominator,
            candidates: (self.candidates[0], self.candidates[1]),
            approvals,
        })
    }
}

/// Parses a random-family spec file.
pub fn parse_spec(text: &str) -> Result<crate::generators::RandomSpec, IoError> {
    let file: SpecFile = serde_json::from_str(text).map_err(json_error)?;
    Ok(file.into_spec()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rat;

    #[test]
    fn minimal_file_parses() {
        let text = r#"{
            "version": 1,
            "k": 2,
            "candidates": ["1"],
            "agents": [{"x": "1/1000", "approvals": [1, 0]}]
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.k, 2);
        assert_eq!(inst.agents[0].position, rat(1, 1000));
    }

    #[test]
    fn duplicate_candidate_rejected() {
        let text = r#"{"version":1,"k":2,"candidates":["1/3","1/3"],"agents":[{"x":"0","approvals":[1,0]}]}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(matches!(
            err,
            IoError::Model(ModelError::DuplicateCandidate { .. })
        ));
    }

    #[test]
    fn out_of_range_position_rejected() {
        let text = r#"{"version":1,"k":2,"candidates":["1/2"],"agents":[{"x":"2","approvals":[1,0]}]}"#;
        let err = parse_instance(text).unwrap_err();
        assert!(matches!(
            err,
            IoError::Model(ModelError::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn decimal_literals_parse_exactly() {
        let text = r#"{"version":1,"k":2,"candidates":["0.43"],"agents":[{"x":"0.5","approvals":[1,1]}]}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.candidates[0], rat(43, 100));
        assert_eq!(inst.agents[0].position, rat(1, 2));
    }

    #[test]
    fn syntax_error_is_positional() {
        let err = parse_instance("{\n  \"version\": }").unwrap_err();
        match err {
            IoError::Json { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected json error, got {other}"),
        }
    }

    #[test]
    fn unsupported_version() {
        let text = r#"{"version":9,"k":2,"candidates":["1"],"agents":[{"x":"0","approvals":[1,0]}]}"#;
        assert!(matches!(
            parse_instance(text).unwrap_err(),
            IoError::UnsupportedVersion { got: 9, .. }
        ));
    }

    #[test]
    fn bad_approval_bit() {
        let text = r#"{"version":1,"k":2,"candidates":["1"],"agents":[{"x":"0","approvals":[1,2]}]}"#;
        assert!(matches!(
            parse_instance(text).unwrap_err(),
            IoError::BadApproval { got: 2, .. }
        ));
    }

    #[test]
    fn render_parse_round_trip() {
        let inst = crate::generators::gen_thm6_sequence(2, &rat(1, 100), 1).unwrap();
        let text = render_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
        // Canonical text is a fixed point.
        assert_eq!(render_instance(&back), text);
    }
}
