//! Empirical strategyproofness auditing and exact ratio computation.
//!
//! The preference auditor enumerates every alternative approval vector of
//! every agent (all `(2^k - 1) * n` unilateral misreports) and records each
//! strict expected-utility improvement, always measuring utility against the
//! agent's true position and true preferences. The position auditor sweeps a
//! structured (necessarily incomplete) deviation set; for mechanisms that
//! claim position independence it additionally demands exact distribution
//! equality across all deviations.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::mechanisms::Mechanism;
use crate::model::{rat, Instance, Rational};
use crate::solver::optimal_solution;

/// Exhaustive preference enumeration is `2^k` per agent; beyond this `k` we
/// refuse rather than silently subsample.
pub const MAX_EXHAUSTIVE_K: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("k = {k} is too large for exhaustive preference enumeration (max {max})")]
    KTooLargeForExhaustive { k: usize, max: usize },
}

/// A recorded profitable unilateral misreport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviationKind {
    /// The agent reported this approval vector instead of its true one.
    PreferenceReport(Vec<bool>),
    /// The agent reported this position instead of its true one.
    PositionReport(Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub agent: usize,
    pub kind: DeviationKind,
    /// Expected utility under truthful reporting (true position, true
    /// preferences).
    pub truthful_utility: Rational,
    /// Expected utility of the same agent, still measured at its true
    /// position and preferences, under the outcome after the misreport.
    /// Strictly greater than `truthful_utility` by construction.
    pub deviant_utility: Rational,
}

/// Outcome of one audit run over one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub instance_id: String,
    pub mechanism: String,
    /// Sorted canonically: by agent, preference reports before position
    /// reports, then by payload.
    pub deviations: Vec<Deviation>,
    pub deviations_checked: u64,
    /// True when every `(2^k - 1) * n` preference misreport was enumerated.
    pub exhaustive_preferences: bool,
    /// For position audits of position-independent mechanisms: whether the
    /// output distribution was exactly identical across all deviations.
    pub lottery_invariant: Option<bool>,
    /// Set when a joint audit was truncated by its evaluation budget.
    pub budget_cap: Option<u64>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.deviations.is_empty() && self.lottery_invariant != Some(false)
    }
}

fn sort_deviations(deviations: &mut [Deviation]) {
    deviations.sort_by(|a, b| {
        a.agent.cmp(&b.agent).then_with(|| match (&a.kind, &b.kind) {
            (DeviationKind::PreferenceReport(x), DeviationKind::PreferenceReport(y)) => x.cmp(y),
            (DeviationKind::PositionReport(x), DeviationKind::PositionReport(y)) => x.cmp(y),
            (DeviationKind::PreferenceReport(_), DeviationKind::PositionReport(_)) => {
                std::cmp::Ordering::Less
            }
            (DeviationKind::PositionReport(_), DeviationKind::PreferenceReport(_)) => {
                std::cmp::Ordering::Greater
            }
        })
    });
}

fn approvals_to_mask(approvals: &[bool]) -> u64 {
    approvals
        .iter()
        .enumerate()
        .fold(0u64, |m, (j, &a)| m | (u64::from(a) << j))
}

fn mask_to_approvals(mask: u64, k: usize) -> Vec<bool> {
    (0..k).map(|j| mask >> j & 1 == 1).collect()
}

/// Enumerates every alternative approval vector of every agent and records
/// all strict improvements.
pub fn audit_preferences(
    mechanism: &dyn Mechanism,
    inst: &Instance,
) -> Result<AuditReport, AuditError> {
    if inst.k > MAX_EXHAUSTIVE_K {
        return Err(AuditError::KTooLargeForExhaustive {
            k: inst.k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    let truthful = mechanism.lottery(inst);
    let mut deviations = Vec::new();
    let mut checked = 0u64;
    let mut scratch = inst.clone();
    for agent in 0..inst.n() {
        let truthful_utility = inst.expected_utility(agent, &truthful);
        let true_mask = approvals_to_mask(&inst.agents[agent].approvals);
        for mask in 0..(1u64 << inst.k) {
            if mask == true_mask {
                continue;
            }
            checked += 1;
            scratch.agents[agent].approvals = mask_to_approvals(mask, inst.k);
            let outcome = mechanism.lottery(&scratch);
            let deviant_utility = inst.expected_utility(agent, &outcome);
            if deviant_utility > truthful_utility {
                deviations.push(Deviation {
                    agent,
                    kind: DeviationKind::PreferenceReport(mask_to_approvals(mask, inst.k)),
                    truthful_utility: truthful_utility.clone(),
                    deviant_utility,
                });
            }
        }
        scratch.agents[agent].approvals = inst.agents[agent].approvals.clone();
    }
    sort_deviations(&mut deviations);
    Ok(AuditReport {
        instance_id: inst.digest(),
        mechanism: mechanism.name(),
        deviations,
        deviations_checked: checked,
        exhaustive_preferences: true,
        lottery_invariant: None,
        budget_cap: None,
    })
}

/// The structured position-deviation set for one agent: every candidate,
/// every other agent's position, the `{t / denominator}` grid, and the
/// midpoints of consecutive candidates. Sorted and deduplicated.
fn position_deviation_set(inst: &Instance, agent: usize, denominator: u64) -> Vec<Rational> {
    let mut set: BTreeSet<Rational> = BTreeSet::new();
    for c in &inst.candidates {
        set.insert(c.clone());
    }
    for (i, other) in inst.agents.iter().enumerate() {
        if i != agent {
            set.insert(other.position.clone());
        }
    }
    let denom = denominator.max(1);
    for t in 0..=denom {
        set.insert(rat(t as i64, denom as i64));
    }
    for pair in inst.candidates.windows(2) {
        set.insert((&pair[0] + &pair[1]) / rat(2, 1));
    }
    set.into_iter().collect()
}

/// Sweeps the structured position-deviation set for every agent. Positions
/// are continuous, so this audit is inherently non-exhaustive; the report
/// records `exhaustive_preferences = false`.
pub fn audit_positions(
    mechanism: &dyn Mechanism,
    inst: &Instance,
    grid_denominator: u64,
) -> AuditReport {
    let truthful = mechanism.lottery(inst);
    let check_invariance = mechanism.position_independent();
    let mut invariant = true;
    let mut deviations = Vec::new();
    let mut checked = 0u64;
    let mut scratch = inst.clone();
    for agent in 0..inst.n() {
        let truthful_utility = inst.expected_utility(agent, &truthful);
        for position in position_deviation_set(inst, agent, grid_denominator) {
            checked += 1;
            scratch.agents[agent].position = position.clone();
            let outcome = mechanism.lottery(&scratch);
            if check_invariance && outcome != truthful {
                invariant = false;
            }
            let deviant_utility = inst.expected_utility(agent, &outcome);
            if deviant_utility > truthful_utility {
                deviations.push(Deviation {
                    agent,
                    kind: DeviationKind::PositionReport(position),
                    truthful_utility: truthful_utility.clone(),
                    deviant_utility,
                });
            }
        }
        scratch.agents[agent].position = inst.agents[agent].position.clone();
    }
    sort_deviations(&mut deviations);
    AuditReport {
        instance_id: inst.digest(),
        mechanism: mechanism.name(),
        deviations,
        deviations_checked: checked,
        exhaustive_preferences: false,
        lottery_invariant: if check_invariance {
            Some(invariant)
        } else {
            None
        },
        budget_cap: None,
    }
}

/// Joint position-and-preference deviations: the cross product of the two
/// deviation sets per agent, truncated after `budget` mechanism evaluations
/// (the report records the cap).
pub fn audit_joint(
    mechanism: &dyn Mechanism,
    inst: &Instance,
    grid_denominator: u64,
    budget: u64,
) -> Result<AuditReport, AuditError> {
    if inst.k > MAX_EXHAUSTIVE_K {
        return Err(AuditError::KTooLargeForExhaustive {
            k: inst.k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    let truthful = mechanism.lottery(inst);
    let mut deviations = Vec::new();
    let mut checked = 0u64;
    let mut scratch = inst.clone();
    'outer: for agent in 0..inst.n() {
        let truthful_utility = inst.expected_utility(agent, &truthful);
        let true_mask = approvals_to_mask(&inst.agents[agent].approvals);
        let positions = position_deviation_set(inst, agent, grid_denominator);
        for mask in 0..(1u64 << inst.k) {
            if mask == true_mask {
                continue;
            }
            for position in &positions {
                if checked == budget {
                    break 'outer;
                }
                checked += 1;
                scratch.agents[agent].approvals = mask_to_approvals(mask, inst.k);
                scratch.agents[agent].position = position.clone();
                let outcome = mechanism.lottery(&scratch);
                let deviant_utility = inst.expected_utility(agent, &outcome);
                if deviant_utility > truthful_utility {
                    deviations.push(Deviation {
                        agent,
                        kind: DeviationKind::PreferenceReport(mask_to_approvals(mask, inst.k)),
                        truthful_utility: truthful_utility.clone(),
                        deviant_utility,
                    });
                }
            }
        }
        scratch.agents[agent] = inst.agents[agent].clone();
    }
    sort_deviations(&mut deviations);
    deviations.dedup();
    Ok(AuditReport {
        instance_id: inst.digest(),
        mechanism: mechanism.name(),
        deviations,
        deviations_checked: checked,
        exhaustive_preferences: false,
        lottery_invariant: None,
        budget_cap: Some(budget),
    })
}

/// Exact per-instance ratio, with markers for the degenerate welfares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatioValue {
    /// `opt / mech` with `mech > 0`.
    Finite(Rational),
    /// `opt = mech = 0`: the mechanism is vacuously optimal.
    One,
    /// `opt > 0` but `mech = 0`.
    Infinite,
}

impl RatioValue {
    /// Whether the ratio is at most `bound` (markers: `One` always is,
    /// `Infinite` never).
    pub fn within(&self, bound: &Rational) -> bool {
        match self {
            RatioValue::Finite(r) => r <= bound,
            RatioValue::One => Rational::one() <= *bound,
            RatioValue::Infinite => false,
        }
    }

    /// Total order used to pick the worst instance of a sweep: finite values
    /// by magnitude (`One` as 1), `Infinite` above everything.
    pub fn cmp_severity(&self, other: &RatioValue) -> std::cmp::Ordering {
        use RatioValue::*;
        let key = |v: &RatioValue| match v {
            Infinite => None,
            Finite(r) => Some(r.clone()),
            One => Some(Rational::one()),
        };
        match (key(self), key(other)) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (Some(_), None) => std::cmp::Ordering::Less,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub instance_id: String,
    pub mechanism: String,
    pub opt: Rational,
    pub mech: Rational,
    pub ratio: RatioValue,
}

/// Optimal welfare against the mechanism's exact expected welfare.
pub fn empirical_ratio(mechanism: &dyn Mechanism, inst: &Instance) -> RatioReport {
    let opt = optimal_solution(inst).opt_welfare;
    let mech = inst.expected_social_welfare(&mechanism.lottery(inst));
    let ratio = if mech.is_zero() {
        if opt.is_zero() {
            RatioValue::One
        } else {
            RatioValue::Infinite
        }
    } else {
        RatioValue::Finite(&opt / &mech)
    };
    RatioReport {
        instance_id: inst.digest(),
        mechanism: mechanism.name(),
        opt,
        mech,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_thm2, gen_thm6_sequence, Thm2Variant};
    use crate::mechanisms::{
        mech_general, MechGeneral, MechMinisum, MechTheta, Mechanism, OptAsMechanism,
    };
    use crate::model::{rat_int, Agent, Instance, Lottery, Solution};
    use crate::solver::{all_agents, best_facility_unchecked};

    fn agent(pos: Rational, bits: &[u8]) -> Agent {
        Agent::new(pos, bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn minisum_clean_on_lower_bound_family() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let report = audit_preferences(&MechMinisum, &inst).unwrap();
        assert!(report.clean());
        assert_eq!(report.deviations_checked, 6 * 3);
        assert!(report.exhaustive_preferences);
    }

    #[test]
    fn opt_as_mechanism_is_caught() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let report = audit_preferences(&OptAsMechanism, &inst).unwrap();
        assert!(!report.deviations.is_empty());
        // The flip: an agent at 1/2 + eps reporting only facility 2 moves the
        // optimum from (1, 0) to (2, 1) and gains exactly 2 * eps.
        let gain = rat(1, 50);
        assert!(report
            .deviations
            .iter()
            .any(|d| &d.deviant_utility - &d.truthful_utility == gain
                && matches!(&d.kind, DeviationKind::PreferenceReport(v) if *v == vec![false, true])));
    }

    #[test]
    fn all_approving_single_agent_has_no_deviation() {
        let inst = Instance::new(
            2,
            vec![agent(rat(1, 3), &[1, 1])],
            vec![rat(1, 4), rat(3, 4)],
        )
        .unwrap();
        for mech in [
            &MechGeneral as &dyn Mechanism,
            &MechMinisum,
            &MechTheta::default_theta(),
        ] {
            let report = audit_preferences(mech, &inst).unwrap();
            assert!(report.clean(), "{}", mech.name());
        }
    }

    #[test]
    fn general_positions_invariant_on_single_location() {
        let inst = gen_thm2(3, &rat(1, 1000), Thm2Variant::I).unwrap();
        let report = audit_positions(&MechGeneral, &inst, 10);
        assert!(report.clean());
        assert_eq!(report.lottery_invariant, Some(true));
        assert!(!report.exhaustive_preferences);
    }

    /// Deliberately manipulable: place the most-approved facility at the
    /// candidate nearest the mean reported position. An agent can drag the
    /// location toward itself by exaggerating.
    struct NearestToMean;

    impl Mechanism for NearestToMean {
        fn name(&self) -> String {
            "nearest_to_mean".to_string()
        }
        fn lottery(&self, inst: &Instance) -> Lottery {
            let n = rat_int(inst.n() as i64);
            let mean: Rational =
                inst.agents.iter().map(|a| a.position.clone()).sum::<Rational>() / n;
            let mut best = inst.candidates[0].clone();
            let mut best_d = crate::model::distance(&best, &mean);
            for c in &inst.candidates[1..] {
                let d = crate::model::distance(c, &mean);
                if d < best_d {
                    best = c.clone();
                    best_d = d;
                }
            }
            let (f, _) = best_facility_unchecked(inst, &best, &all_agents(inst));
            Lottery::point(Solution::new(f, best))
        }
    }

    #[test]
    fn position_auditor_catches_mean_chasing() {
        let inst = Instance::new(
            2,
            vec![agent(rat(3, 5), &[1, 0]), agent(rat(2, 5), &[1, 0])],
            vec![rat_int(0), rat_int(1)],
        )
        .unwrap();
        let report = audit_positions(&NearestToMean, &inst, 10);
        assert!(!report.deviations.is_empty());
        let d = &report.deviations[0];
        assert!(d.deviant_utility > d.truthful_utility);
    }

    #[test]
    fn single_agent_noop_position_deviation() {
        // Deviation set collapses around the agent's own true position: the
        // report stays clean because no deviation strictly improves.
        let inst = Instance::new(2, vec![agent(rat(1, 2), &[1, 0])], vec![rat(1, 2)]).unwrap();
        let report = audit_positions(&MechGeneral, &inst, 2);
        assert!(report.clean());
    }

    #[test]
    fn joint_audit_budget_is_recorded() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let capped = audit_joint(&MechGeneral, &inst, 4, 10).unwrap();
        assert_eq!(capped.deviations_checked, 10);
        assert_eq!(capped.budget_cap, Some(10));
        let full = audit_joint(&MechGeneral, &inst, 4, u64::MAX).unwrap();
        assert!(full.clean());
    }

    #[test]
    fn ratio_examples() {
        let j = gen_thm2(3, &rat(1, 1000), Thm2Variant::J).unwrap();
        let report = empirical_ratio(&MechGeneral, &j);
        assert_eq!(report.ratio, RatioValue::Finite(rat(1500, 501)));

        let lower = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let report = empirical_ratio(&MechMinisum, &lower);
        assert_eq!(report.opt, rat_int(3));
        assert_eq!(report.mech, rat_int(3));
        assert_eq!(report.ratio, RatioValue::Finite(rat_int(1)));

        let empty = Instance::new(
            2,
            vec![agent(rat(1, 2), &[0, 0])],
            vec![rat(1, 2)],
        )
        .unwrap();
        let report = empirical_ratio(&MechGeneral, &empty);
        assert_eq!(report.ratio, RatioValue::One);
    }

    #[test]
    fn ratio_dominates_one() {
        let inst = gen_thm6_sequence(2, &rat(1, 10), 2).unwrap();
        for mech in [
            &MechGeneral as &dyn Mechanism,
            &MechMinisum,
            &MechTheta::default_theta(),
        ] {
            let report = empirical_ratio(mech, &inst);
            assert!(report.ratio.within(&rat(100, 1)));
            match report.ratio {
                RatioValue::Finite(r) => assert!(r >= rat_int(1)),
                RatioValue::One => {}
                RatioValue::Infinite => panic!("unexpected infinite ratio"),
            }
        }
    }

    #[test]
    fn deviations_sorted_canonically() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let report = audit_preferences(&OptAsMechanism, &inst).unwrap();
        let mut sorted = report.deviations.clone();
        sort_deviations(&mut sorted);
        assert_eq!(report.deviations, sorted);
    }

    /// Finding, kept as a regression pin: in the one-sided cases with
    /// k >= 3, when the most-approved facility holds fewer than half of the
    /// active approvals, its closed-form probability drops below the uniform
    /// remainder share. An agent approving it then profits by moving its
    /// reported support elsewhere, which demotes its facility into the
    /// remainder class. k = 2 is immune (the maximum count is at least half
    /// of the active agents there). The auditor must keep detecting this.
    #[test]
    fn audit_detects_one_sided_support_withdrawal() {
        let inst = Instance::new(
            3,
            vec![
                agent(rat(5, 12), &[0, 0, 1]),
                agent(rat(5, 12), &[1, 0, 0]),
                agent(rat(7, 12), &[0, 1, 0]),
            ],
            vec![rat(1, 12), rat(1, 4)],
        )
        .unwrap();
        // Truthful counts (1, 1, 1): facility 1 is named most-approved and
        // receives only 1/6 at 1/4, while facilities 2 and 3 get 5/12 each.
        let lot = mech_general(&inst);
        assert_eq!(lot.probability_of(&Solution::new(1, rat(1, 4))), rat(1, 6));
        assert_eq!(lot.probability_of(&Solution::new(2, rat(1, 4))), rat(5, 12));

        let report = audit_preferences(&MechGeneral, &inst).unwrap();
        assert!(!report.deviations.is_empty());
        // Agent 1 (approves facility 1) reporting {facility 2} instead:
        // counts become (0, 2, 1), facility 1 falls into the remainder class
        // with probability 10/33 > 1/6, lifting the agent from 5/36 to 25/99.
        let witness = report
            .deviations
            .iter()
            .find(|d| {
                d.agent == 1
                    && matches!(&d.kind, DeviationKind::PreferenceReport(v)
                        if *v == vec![false, true, false])
            })
            .expect("support-withdrawal deviation detected");
        assert_eq!(witness.truthful_utility, rat(5, 36));
        assert_eq!(witness.deviant_utility, rat(25, 99));
    }

    #[test]
    fn general_mech_welfare_on_straddle() {
        // Frozen from the case formula: half/half between locations 0 and 1.
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let report = empirical_ratio(&MechGeneral, &inst);
        assert_eq!(report.mech, rat(5, 2));
        assert_eq!(report.ratio, RatioValue::Finite(rat(6, 5)));
        let _ = mech_general(&inst);
    }
}
