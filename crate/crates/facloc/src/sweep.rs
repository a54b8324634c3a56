//! Random-family sweep harness: runs mechanisms, bounds, and audits over a
//! seeded instance stream and aggregates a deterministic report.
//!
//! Instances are evaluated in parallel but merged in index order, so a sweep
//! report is a pure function of its configuration: two runs with the same
//! seed are byte-identical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_positions, audit_preferences, RatioValue};
use crate::generators::{gen_random_one, GenError, RandomSpec};
use crate::io::{InstanceFile, RatioJson, SpecFile};
use crate::mechanisms::{
    classify_general, classify_theta, theta_ratio_bound, MechGeneral, MechMinisum, MechTheta,
    Mechanism, OptAsMechanism,
};
use crate::model::{format_rational, rat_int, Instance, Rational};

/// Which mechanism a sweep or CLI invocation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismChoice {
    General,
    Theta,
    Minisum,
    /// Exhaustive optimum used as a (non-truthful) mechanism.
    Opt,
}

impl MechanismChoice {
    pub fn build(&self, theta: &Rational) -> Box<dyn Mechanism> {
        match self {
            MechanismChoice::General => Box::new(MechGeneral),
            MechanismChoice::Theta => {
                Box::new(MechTheta::new(theta.clone()).expect("theta validated by caller"))
            }
            MechanismChoice::Minisum => Box::new(MechMinisum),
            MechanismChoice::Opt => Box::new(OptAsMechanism),
        }
    }

    /// Per-instance ratio bound this mechanism asserts, if any.
    fn bound_for(&self, inst_k: usize, theta: &Rational) -> Option<Rational> {
        match self {
            MechanismChoice::General => Some(rat_int(inst_k as i64)),
            MechanismChoice::Theta => theta_ratio_bound(theta),
            MechanismChoice::Minisum => Some(rat_int(inst_k as i64)),
            MechanismChoice::Opt => Some(rat_int(1)),
        }
    }

    fn bound_description(&self, theta: &Rational) -> String {
        match self {
            MechanismChoice::General => "opt/mech <= k".to_string(),
            MechanismChoice::Theta => match theta_ratio_bound(theta) {
                Some(b) => format!(
                    "opt/mech <= max{{1/theta, 1-theta+1/(1-theta)}} = {}",
                    format_rational(&b)
                ),
                None => "unbounded (theta = 0)".to_string(),
            },
            MechanismChoice::Minisum => "opt/mech <= 2 for k = 2, <= k otherwise".to_string(),
            MechanismChoice::Opt => "opt/mech = 1".to_string(),
        }
    }
}

pub struct SweepConfig {
    pub spec: RandomSpec,
    pub count: u64,
    pub mechanisms: Vec<MechanismChoice>,
    pub theta: Rational,
    /// Grid denominator of the position audits run on position-independent
    /// mechanisms.
    pub position_denominator: u64,
    /// Whether deviation audits run at all (bounds are always checked).
    pub audit: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            spec: RandomSpec::default(),
            count: 10_000,
            mechanisms: vec![
                MechanismChoice::General,
                MechanismChoice::Theta,
                MechanismChoice::Minisum,
            ],
            theta: crate::mechanisms::theta_default(),
            position_denominator: 12,
            audit: true,
        }
    }
}

/// Sweep outcome for one mechanism.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismSweepJson {
    pub mechanism: String,
    pub instances: u64,
    pub bound_asserted: String,
    pub bound_satisfied: bool,
    pub lottery_violations: u64,
    pub deviations_found: u64,
    pub deviations_checked: u64,
    pub invariance_failures: u64,
    pub max_ratio: RatioJson,
    pub argmax_index: u64,
    pub argmax_instance: InstanceFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseCoverageJson {
    pub general: std::collections::BTreeMap<String, u64>,
    pub theta: std::collections::BTreeMap<String, u64>,
}

/// The full sweep report; serialized as-is by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReportJson {
    pub version: u32,
    pub spec: SpecFile,
    pub count: u64,
    pub theta: String,
    pub position_denominator: u64,
    pub audited: bool,
    pub case_coverage: CaseCoverageJson,
    pub mechanisms: Vec<MechanismSweepJson>,
}

impl SweepReportJson {
    /// Whether every asserted property held: all bounds satisfied, no
    /// deviations, no lottery or invariance failures.
    pub fn all_clean(&self) -> bool {
        self.mechanisms.iter().all(|m| {
            m.bound_satisfied
                && m.deviations_found == 0
                && m.lottery_violations == 0
                && m.invariance_failures == 0
        })
    }
}

struct PerMechOutcome {
    ratio: RatioValue,
    bound_ok: bool,
    lottery_ok: bool,
    deviations: u64,
    checked: u64,
    invariance_ok: bool,
}

struct PerInstanceOutcome {
    general_case: &'static str,
    theta_case: &'static str,
    mechs: Vec<PerMechOutcome>,
}

fn evaluate_instance(cfg: &SweepConfig, inst: &Instance) -> PerInstanceOutcome {
    let general_case = classify_general(inst).tag();
    let theta_case = classify_theta(inst, &cfg.theta)
        .expect("theta validated by caller")
        .tag();
    let mechs = cfg
        .mechanisms
        .iter()
        .map(|choice| {
            let mech = choice.build(&cfg.theta);
            let lottery = mech.lottery(inst);
            let lottery_ok = lottery.verify().is_ok();
            let ratio = crate::audit::empirical_ratio(mech.as_ref(), inst).ratio;
            let bound_ok = match choice.bound_for(inst.k, &cfg.theta) {
                Some(bound) => ratio.within(&bound),
                None => true,
            };
            let mut deviations = 0u64;
            let mut checked = 0u64;
            let mut invariance_ok = true;
            if cfg.audit {
                let prefs = audit_preferences(mech.as_ref(), inst)
                    .expect("sweep families keep k small");
                deviations += prefs.deviations.len() as u64;
                checked += prefs.deviations_checked;
                if mech.position_independent() {
                    let pos = audit_positions(mech.as_ref(), inst, cfg.position_denominator);
                    deviations += pos.deviations.len() as u64;
                    checked += pos.deviations_checked;
                    invariance_ok = pos.lottery_invariant != Some(false);
                }
            }
            PerMechOutcome {
                ratio,
                bound_ok,
                lottery_ok,
                deviations,
                checked,
                invariance_ok,
            }
        })
        .collect();
    PerInstanceOutcome {
        general_case,
        theta_case,
        mechs,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Mechanism(#[from] crate::mechanisms::MechanismError),
}

/// Runs the sweep. Deterministic in the configuration.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReportJson, SweepError> {
    // Validate eagerly so worker threads can unwrap.
    crate::mechanisms::MechTheta::new(cfg.theta.clone())?;
    gen_random_one(&cfg.spec, 0)?;

    let outcomes: Vec<PerInstanceOutcome> = (0..cfg.count)
        .into_par_iter()
        .map(|index| {
            let inst = gen_random_one(&cfg.spec, index).expect("spec validated above");
            evaluate_instance(cfg, &inst)
        })
        .collect();

    let mut general_cov = std::collections::BTreeMap::new();
    let mut theta_cov = std::collections::BTreeMap::new();
    let mut per_mech: Vec<(RatioValue, u64, MechanismSweepJson)> = cfg
        .mechanisms
        .iter()
        .map(|choice| {
            let mech = choice.build(&cfg.theta);
            (
                RatioValue::One,
                0u64,
                MechanismSweepJson {
                    mechanism: mech.name(),
                    instances: cfg.count,
                    bound_asserted: choice.bound_description(&cfg.theta),
                    bound_satisfied: true,
                    lottery_violations: 0,
                    deviations_found: 0,
                    deviations_checked: 0,
                    invariance_failures: 0,
                    max_ratio: crate::io::ratio_json(&RatioValue::One),
                    argmax_index: 0,
                    argmax_instance: InstanceFile::from_instance(
                        &gen_random_one(&cfg.spec, 0).expect("spec validated above"),
                    ),
                },
            )
        })
        .collect();

    for (index, outcome) in outcomes.iter().enumerate() {
        *general_cov
            .entry(outcome.general_case.to_string())
            .or_insert(0u64) += 1;
        *theta_cov.entry(outcome.theta_case.to_string()).or_insert(0u64) += 1;
        for (slot, m) in per_mech.iter_mut().zip(&outcome.mechs) {
            let (worst, worst_index, json) = slot;
            if !m.bound_ok {
                json.bound_satisfied = false;
            }
            if !m.lottery_ok {
                json.lottery_violations += 1;
            }
            if !m.invariance_ok {
                json.invariance_failures += 1;
            }
            json.deviations_found += m.deviations;
            json.deviations_checked += m.checked;
            if m.ratio.cmp_severity(worst) == std::cmp::Ordering::Greater {
                *worst = m.ratio.clone();
                *worst_index = index as u64;
            }
        }
    }

    let mechanisms = per_mech
        .into_iter()
        .map(|(worst, worst_index, mut json)| {
            json.max_ratio = crate::io::ratio_json(&worst);
            json.argmax_index = worst_index;
            json.argmax_instance = InstanceFile::from_instance(
                &gen_random_one(&cfg.spec, worst_index).expect("spec validated above"),
            );
            json
        })
        .collect();

    Ok(SweepReportJson {
        version: 1,
        spec: SpecFile::from_spec(&cfg.spec),
        count: cfg.count,
        theta: format_rational(&cfg.theta),
        position_denominator: cfg.position_denominator,
        audited: cfg.audit,
        case_coverage: CaseCoverageJson {
            general: general_cov,
            theta: theta_cov,
        },
        mechanisms,
    })
}
