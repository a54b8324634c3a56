//! The truthful mechanisms.
//!
//! Three mechanisms map an instance to an outcome:
//!
//! * [`mech_general`] — randomized, for the setting where agents may
//!   misreport positions and preferences. Returns a [`Lottery`] chosen by an
//!   exhaustive five-way case split on where the candidate locations sit in
//!   `[0, 1]`; achieves a `k`-approximation of the optimal welfare.
//! * [`mech_theta`] — deterministic, for known positions (only preferences
//!   can be misreported). Splits on a parameter `theta` in `[0, 1/2]`; at the
//!   default `43/100` its worst-case ratio is at most `100/43`.
//! * [`mech_minisum`] — deterministic, for known positions: the candidate
//!   minimizing total distance to all agents, then the welfare-maximizing
//!   facility there. A 2-approximation for `k = 2`, `k`-approximation
//!   otherwise.
//!
//! All mechanisms are deterministic maps; randomness lives only in the
//! returned lottery object, never in sampling. Every argmax/argmin uses the
//! same fixed tie-break (lowest facility index, leftmost location) so runs
//! are reproducible and auditable.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{distance, format_rational, rat, rat_int, Instance, Lottery, Rational, Solution};
use crate::solver::{all_agents, best_facility_unchecked, optimal_solution};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MechanismError {
    #[error("theta = {theta} is outside [0, 1/2]")]
    ThetaOutOfRange { theta: String },
}

/// Case split of the randomized general-setting mechanism. Exactly one case
/// applies to any instance; the split depends only on `k` and the candidate
/// locations, never on agent reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneralCase {
    /// A single candidate location.
    SingleLocation,
    /// Some candidate lies in `[1/k, (k-1)/k]`; carries the one closest to
    /// `1/2` (ties to the left).
    MiddleLocation(Rational),
    /// Leftmost candidate `< 1/k` and rightmost `> (k-1)/k`; carries `(L, R)`.
    Straddle(Rational, Rational),
    /// All candidates `> (k-1)/k`; carries `L`.
    AllRight(Rational),
    /// All candidates `< 1/k`; carries `R`.
    AllLeft(Rational),
}

impl GeneralCase {
    pub fn tag(&self) -> &'static str {
        match self {
            GeneralCase::SingleLocation => "single_location",
            GeneralCase::MiddleLocation(_) => "middle_location",
            GeneralCase::Straddle(_, _) => "straddle",
            GeneralCase::AllRight(_) => "all_right",
            GeneralCase::AllLeft(_) => "all_left",
        }
    }
}

/// Candidate closest to `1/2`, ties broken toward the smaller location.
fn closest_to_half(candidates: &[Rational]) -> &Rational {
    let half = rat(1, 2);
    let mut best = &candidates[0];
    let mut best_dist = distance(best, &half);
    for c in &candidates[1..] {
        let d = distance(c, &half);
        if d < best_dist {
            best = c;
            best_dist = d;
        }
    }
    best
}

/// Classifies an instance into the unique applicable case of the randomized
/// mechanism.
pub fn classify_general(inst: &Instance) -> GeneralCase {
    if inst.candidates.len() == 1 {
        return GeneralCase::SingleLocation;
    }
    let k = rat_int(inst.k as i64);
    let lo = rat(1, inst.k as i64);
    let hi = (&k - Rational::one()) / &k;
    let middle: Vec<Rational> = inst
        .candidates
        .iter()
        .filter(|c| **c >= lo && **c <= hi)
        .cloned()
        .collect();
    if !middle.is_empty() {
        return GeneralCase::MiddleLocation(closest_to_half(&middle).clone());
    }
    let left = inst.leftmost().clone();
    let right = inst.rightmost().clone();
    if left < lo && right > hi {
        GeneralCase::Straddle(left, right)
    } else if left > hi {
        GeneralCase::AllRight(left)
    } else {
        debug_assert!(right < lo);
        GeneralCase::AllLeft(right)
    }
}

/// Most-approved facility (1-based); ties go to the lowest original index.
/// This is the facility the mechanism treats as "facility one" internally;
/// outputs always carry original indices.
pub fn most_approved_facility(inst: &Instance) -> usize {
    let counts = inst.approval_counts();
    let mut best = 1usize;
    for j in 2..=inst.k {
        if counts[j - 1] > counts[best - 1] {
            best = j;
        }
    }
    best
}

/// The randomized general-setting mechanism.
///
/// Writing `f*` for the most-approved facility, `L`/`R` for the extreme
/// candidates and `n` for the number of agents reporting at least one
/// approval (agents with empty reports never enter the counts; they derive
/// zero utility from every outcome, so nothing is distorted):
///
/// * single location `X`: each facility gets probability `1/k` at `X`;
/// * middle location `X`: point mass on `(f*, X)`;
/// * straddle: `f*` at `L` with probability `(1 - k + kR) / (k(R - L))`,
///   at `R` with the rest;
/// * all right: `f*` at `L` with probability
///   `(n1 - (k/(k-1))(1-L)(n-n1)) / (kLn1 - (k/(k-1))(1-L)(n-n1))`,
///   every other facility sharing the remainder equally at `L`;
/// * all left: the mirror image at `R`.
///
/// When no agent approves anything the two closed forms above degenerate to
/// `0/0`; the mechanism then plays each facility equiprobably at the case
/// location, which keeps the outcome independent of any single report (every
/// solution has welfare zero there, so this is also optimal).
pub fn mech_general(inst: &Instance) -> Lottery {
    let case = classify_general(inst);
    let k = inst.k;
    let k_rat = rat_int(k as i64);
    let f_star = most_approved_facility(inst);
    let n1 = rat_int(inst.approval_counts()[f_star - 1] as i64);
    let active = rat_int(inst.active_agent_count() as i64);

    let uniform_at = |loc: &Rational| -> Lottery {
        let share = Rational::one() / &k_rat;
        Lottery::new(
            (1..=k)
                .map(|j| (Solution::new(j, loc.clone()), share.clone()))
                .collect(),
        )
        .expect("uniform lottery is valid")
    };

    match case {
        GeneralCase::SingleLocation => uniform_at(&inst.candidates[0]),
        GeneralCase::MiddleLocation(x) => Lottery::point(Solution::new(f_star, x)),
        GeneralCase::Straddle(left, right) => {
            let p_left =
                (Rational::one() - &k_rat + &k_rat * &right) / (&k_rat * (&right - &left));
            let p_right = Rational::one() - &p_left;
            Lottery::new(vec![
                (Solution::new(f_star, left), p_left),
                (Solution::new(f_star, right), p_right),
            ])
            .expect("straddle probabilities are valid")
        }
        GeneralCase::AllRight(left) => {
            if n1.is_zero() {
                return uniform_at(&left);
            }
            let others = &active - &n1;
            let coeff = &k_rat / (&k_rat - Rational::one()) * (Rational::one() - &left) * others;
            let p1 = (&n1 - &coeff) / (&k_rat * &left * &n1 - &coeff);
            spread_remainder(inst, f_star, &left, p1)
        }
        GeneralCase::AllLeft(right) => {
            if n1.is_zero() {
                return uniform_at(&right);
            }
            let others = &active - &n1;
            let coeff = &k_rat / (&k_rat - Rational::one()) * &right * others;
            let p1 = (&n1 - &coeff) / (&k_rat * (Rational::one() - &right) * &n1 - &coeff);
            spread_remainder(inst, f_star, &right, p1)
        }
    }
}

/// Puts `p1` on `(f_star, loc)` and splits the rest equally across the other
/// facilities at the same location.
fn spread_remainder(inst: &Instance, f_star: usize, loc: &Rational, p1: Rational) -> Lottery {
    let rest = (Rational::one() - &p1) / rat_int(inst.k as i64 - 1);
    let mut atoms = vec![(Solution::new(f_star, loc.clone()), p1)];
    for j in 1..=inst.k {
        if j != f_star {
            atoms.push((Solution::new(j, loc.clone()), rest.clone()));
        }
    }
    Lottery::new(atoms).expect("one-sided probabilities are valid")
}

/// Case split of the known-positions deterministic mechanism for a given
/// `theta`. Depends only on the candidate locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaCase {
    /// Some candidate lies in `[theta, 1-theta]`; carries the candidate
    /// closest to `1/2` (ties to the left).
    HasMiddle(Rational),
    /// All candidates on one side, in `[0, theta)` or `(1-theta, 1]`;
    /// carries the candidate closest to `1/2`.
    OneSide(Rational),
    /// Candidates on both sides; carries the rightmost in `[0, theta)` and
    /// the leftmost in `(1-theta, 1]`.
    TwoSides(Rational, Rational),
}

impl ThetaCase {
    pub fn tag(&self) -> &'static str {
        match self {
            ThetaCase::HasMiddle(_) => "has_middle",
            ThetaCase::OneSide(_) => "one_side",
            ThetaCase::TwoSides(_, _) => "two_sides",
        }
    }
}

fn check_theta(theta: &Rational) -> Result<(), MechanismError> {
    if *theta < Rational::zero() || *theta > rat(1, 2) {
        return Err(MechanismError::ThetaOutOfRange {
            theta: format_rational(theta),
        });
    }
    Ok(())
}

/// Classifies an instance for [`mech_theta`].
pub fn classify_theta(inst: &Instance, theta: &Rational) -> Result<ThetaCase, MechanismError> {
    check_theta(theta)?;
    let upper = Rational::one() - theta;
    let has_middle = inst
        .candidates
        .iter()
        .any(|c| c >= theta && *c <= upper);
    if has_middle {
        let c = closest_to_half(&inst.candidates).clone();
        debug_assert!(c >= *theta && c <= upper);
        return Ok(ThetaCase::HasMiddle(c));
    }
    let low: Vec<&Rational> = inst.candidates.iter().filter(|c| **c < *theta).collect();
    let high: Vec<&Rational> = inst.candidates.iter().filter(|c| **c > upper).collect();
    debug_assert_eq!(low.len() + high.len(), inst.candidates.len());
    if low.is_empty() || high.is_empty() {
        Ok(ThetaCase::OneSide(closest_to_half(&inst.candidates).clone()))
    } else {
        let c1 = (*low.last().unwrap()).clone();
        let c2 = (*high.first().unwrap()).clone();
        Ok(ThetaCase::TwoSides(c1, c2))
    }
}

/// The deterministic known-positions mechanism with split parameter `theta`.
///
/// With a candidate available in `[theta, 1-theta]` (or all candidates on
/// one side), it places the welfare-maximizing facility at the candidate
/// closest to `1/2`. Otherwise it compares the best facility at the
/// rightmost low candidate for the agents on the left half against the best
/// facility at the leftmost high candidate for the agents on the right half,
/// preferring the left solution on ties.
pub fn mech_theta(inst: &Instance, theta: &Rational) -> Result<Solution, MechanismError> {
    let case = classify_theta(inst, theta)?;
    Ok(match case {
        ThetaCase::HasMiddle(c) | ThetaCase::OneSide(c) => {
            let (facility, _) = best_facility_unchecked(inst, &c, &all_agents(inst));
            Solution::new(facility, c)
        }
        ThetaCase::TwoSides(c1, c2) => {
            let midpoint = (&c1 + &c2) / rat_int(2);
            let mut left_side = Vec::new();
            let mut right_side = Vec::new();
            for (i, agent) in inst.agents.iter().enumerate() {
                if agent.position <= midpoint {
                    left_side.push(i);
                } else {
                    right_side.push(i);
                }
            }
            let (f1, w1) = best_facility_unchecked(inst, &c1, &left_side);
            let (f2, w2) = best_facility_unchecked(inst, &c2, &right_side);
            if w1 >= w2 {
                Solution::new(f1, c1)
            } else {
                Solution::new(f2, c2)
            }
        }
    })
}

/// Default split parameter: `43/100`, an exact stand-in for the
/// ratio-balancing value near `0.43`. See [`theta_ratio_bound`].
pub fn theta_default() -> Rational {
    rat(43, 100)
}

/// Worst-case ratio bound of [`mech_theta`] at a given `theta`:
/// `max{1/theta, 1 - theta + 1/(1 - theta)}`. `None` when `theta` is zero
/// (the first term is unbounded). At `43/100` this is `100/43 <= 2.3256`;
/// at `1/2` it is `5/2`.
pub fn theta_ratio_bound(theta: &Rational) -> Option<Rational> {
    if theta.is_zero() {
        return None;
    }
    let inv = Rational::one() / theta;
    let complement = Rational::one() - theta;
    let other = &complement + Rational::one() / &complement;
    Some(if inv >= other { inv } else { other })
}

/// The known-positions minisum mechanism: the candidate minimizing the total
/// distance to all agents (ties to the leftmost), then the
/// welfare-maximizing facility there. Defined for any `k >= 2`.
pub fn mech_minisum(inst: &Instance) -> Solution {
    let mut best_loc = &inst.candidates[0];
    let mut best_total: Option<Rational> = None;
    for c in &inst.candidates {
        let total: Rational = inst
            .agents
            .iter()
            .map(|a| distance(&a.position, c))
            .sum();
        match &best_total {
            Some(current) if total >= *current => {}
            _ => {
                best_loc = c;
                best_total = Some(total);
            }
        }
    }
    let (facility, _) = best_facility_unchecked(inst, best_loc, &all_agents(inst));
    Solution::new(facility, best_loc.clone())
}

/// A mechanism as seen by the auditors: a deterministic map from instances
/// to lotteries (deterministic mechanisms are point masses).
pub trait Mechanism: Sync {
    fn name(&self) -> String;
    /// Precondition: `inst` is valid.
    fn lottery(&self, inst: &Instance) -> Lottery;
    /// Whether the outcome provably ignores reported positions; the position
    /// auditor additionally checks distribution equality for such mechanisms.
    fn position_independent(&self) -> bool {
        false
    }
}

/// [`mech_general`] as an auditable mechanism.
pub struct MechGeneral;

impl Mechanism for MechGeneral {
    fn name(&self) -> String {
        "general".to_string()
    }
    fn lottery(&self, inst: &Instance) -> Lottery {
        mech_general(inst)
    }
    fn position_independent(&self) -> bool {
        true
    }
}

/// [`mech_theta`] with a fixed parameter, validated at construction.
pub struct MechTheta {
    theta: Rational,
}

impl MechTheta {
    pub fn new(theta: Rational) -> Result<Self, MechanismError> {
        check_theta(&theta)?;
        Ok(MechTheta { theta })
    }

    pub fn default_theta() -> Self {
        MechTheta {
            theta: theta_default(),
        }
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }
}

impl Mechanism for MechTheta {
    fn name(&self) -> String {
        format!("theta({})", format_rational(&self.theta))
    }
    fn lottery(&self, inst: &Instance) -> Lottery {
        Lottery::point(mech_theta(inst, &self.theta).expect("theta validated at construction"))
    }
}

/// [`mech_minisum`] as an auditable mechanism.
pub struct MechMinisum;

impl Mechanism for MechMinisum {
    fn name(&self) -> String {
        "minisum".to_string()
    }
    fn lottery(&self, inst: &Instance) -> Lottery {
        Lottery::point(mech_minisum(inst))
    }
}

/// Exhaustive welfare maximization used *as if* it were a mechanism. It is
/// not strategyproof; the auditors' power checks rely on being able to find
/// its profitable deviations.
pub struct OptAsMechanism;

impl Mechanism for OptAsMechanism {
    fn name(&self) -> String {
        "opt".to_string()
    }
    fn lottery(&self, inst: &Instance) -> Lottery {
        Lottery::point(optimal_solution(inst).best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_thm2, gen_thm6_sequence, Thm2Variant};
    use crate::model::Agent;
    use num_traits::Signed;

    fn agent(pos: Rational, bits: &[u8]) -> Agent {
        Agent::new(pos, bits.iter().map(|&b| b == 1).collect())
    }

    fn inst(k: usize, agents: Vec<Agent>, cands: Vec<Rational>) -> Instance {
        Instance::new(k, agents, cands).unwrap()
    }

    #[test]
    fn classify_general_examples() {
        let a = vec![agent(rat_int(0), &[1, 0])];
        assert_eq!(
            classify_general(&inst(2, a.clone(), vec![rat(1, 2)])),
            GeneralCase::SingleLocation
        );
        assert_eq!(
            classify_general(&inst(2, a.clone(), vec![rat(1, 5), rat(9, 10)])),
            GeneralCase::Straddle(rat(1, 5), rat(9, 10))
        );
        let a3 = vec![agent(rat_int(0), &[1, 0, 0])];
        assert_eq!(
            classify_general(&inst(3, a3, vec![rat(1, 10), rat(1, 2), rat(19, 20)])),
            GeneralCase::MiddleLocation(rat(1, 2))
        );
        assert_eq!(
            classify_general(&inst(2, a.clone(), vec![rat(4, 5), rat(9, 10)])),
            GeneralCase::AllRight(rat(4, 5))
        );
        assert_eq!(
            classify_general(&inst(2, a, vec![rat(1, 10), rat(1, 5)])),
            GeneralCase::AllLeft(rat(1, 5))
        );
    }

    #[test]
    fn middle_location_prefers_closest_to_half_ties_left() {
        let a = vec![agent(rat_int(0), &[1, 0, 0])];
        // 3/8 and 5/8 both lie in [1/3, 2/3] and are equidistant from 1/2:
        // take the left one.
        assert_eq!(
            classify_general(&inst(3, a, vec![rat(3, 8), rat(5, 8)])),
            GeneralCase::MiddleLocation(rat(3, 8))
        );
    }

    #[test]
    fn general_straddle_probabilities() {
        let i = inst(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[1, 0])],
            vec![rat(1, 5), rat(9, 10)],
        );
        let lot = mech_general(&i);
        assert_eq!(
            lot.probability_of(&Solution::new(1, rat(1, 5))),
            rat(4, 7)
        );
        assert_eq!(
            lot.probability_of(&Solution::new(1, rat(9, 10))),
            rat(3, 7)
        );
    }

    #[test]
    fn general_all_right_probabilities() {
        // Four single-approval agents, three approving facility 1.
        let i = inst(
            2,
            vec![
                agent(rat_int(0), &[1, 0]),
                agent(rat(1, 4), &[1, 0]),
                agent(rat(1, 2), &[1, 0]),
                agent(rat_int(1), &[0, 1]),
            ],
            vec![rat(4, 5), rat(9, 10)],
        );
        let lot = mech_general(&i);
        assert_eq!(
            lot.probability_of(&Solution::new(1, rat(4, 5))),
            rat(13, 22)
        );
        assert_eq!(
            lot.probability_of(&Solution::new(2, rat(4, 5))),
            rat(9, 22)
        );
    }

    #[test]
    fn general_all_left_mirrors_all_right() {
        let right = inst(
            2,
            vec![
                agent(rat_int(0), &[1, 0]),
                agent(rat(1, 4), &[1, 0]),
                agent(rat(1, 2), &[1, 0]),
                agent(rat_int(1), &[0, 1]),
            ],
            vec![rat(4, 5), rat(9, 10)],
        );
        let left = inst(
            2,
            vec![
                agent(rat_int(1), &[1, 0]),
                agent(rat(3, 4), &[1, 0]),
                agent(rat(1, 2), &[1, 0]),
                agent(rat_int(0), &[0, 1]),
            ],
            vec![rat(1, 10), rat(1, 5)],
        );
        let lot_r = mech_general(&right);
        let lot_l = mech_general(&left);
        assert_eq!(
            lot_r.probability_of(&Solution::new(1, rat(4, 5))),
            lot_l.probability_of(&Solution::new(1, rat(1, 5)))
        );
    }

    #[test]
    fn general_single_location_uniform() {
        let i = gen_thm2(3, &rat(1, 1000), Thm2Variant::I).unwrap();
        let lot = mech_general(&i);
        assert_eq!(lot.atoms().len(), 3);
        for j in 1..=3 {
            assert_eq!(lot.probability_of(&Solution::new(j, rat_int(1))), rat(1, 3));
        }
    }

    #[test]
    fn general_thm6_straddle_is_half_half() {
        let i = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let lot = mech_general(&i);
        assert_eq!(lot.probability_of(&Solution::new(1, rat_int(0))), rat(1, 2));
        assert_eq!(lot.probability_of(&Solution::new(1, rat_int(1))), rat(1, 2));
        assert_eq!(i.expected_social_welfare(&lot), rat(5, 2));
    }

    #[test]
    fn general_ignores_positions() {
        let base = inst(
            2,
            vec![
                agent(rat(1, 3), &[1, 0]),
                agent(rat(2, 3), &[0, 1]),
            ],
            vec![rat(4, 5), rat(9, 10)],
        );
        let mut moved = base.clone();
        moved.agents[0].position = rat_int(1);
        moved.agents[1].position = rat_int(0);
        assert_eq!(mech_general(&base), mech_general(&moved));
    }

    #[test]
    fn general_degenerate_counts_uniform_fallback() {
        let i = inst(
            2,
            vec![agent(rat_int(0), &[0, 0])],
            vec![rat(4, 5), rat(9, 10)],
        );
        let lot = mech_general(&i);
        lot.verify().unwrap();
        assert_eq!(lot.probability_of(&Solution::new(1, rat(4, 5))), rat(1, 2));
        assert_eq!(lot.probability_of(&Solution::new(2, rat(4, 5))), rat(1, 2));
        assert_eq!(i.expected_social_welfare(&lot), rat_int(0));
    }

    #[test]
    fn general_renames_to_most_approved() {
        // Facility 2 is most approved: every atom should sit on it.
        let i = inst(
            2,
            vec![
                agent(rat_int(0), &[0, 1]),
                agent(rat(1, 2), &[0, 1]),
                agent(rat_int(1), &[1, 0]),
            ],
            vec![rat(1, 5), rat(9, 10)],
        );
        let lot = mech_general(&i);
        assert!(lot.atoms().iter().all(|(s, _)| s.facility == 2));
    }

    #[test]
    fn theta_classify_boundaries() {
        let a = vec![agent(rat_int(0), &[1, 0])];
        let theta = rat(43, 100);
        assert_eq!(
            classify_theta(&inst(2, a.clone(), vec![rat(1, 2)]), &theta).unwrap(),
            ThetaCase::HasMiddle(rat(1, 2))
        );
        // 43/100 itself is inside the closed middle interval.
        assert_eq!(
            classify_theta(&inst(2, a.clone(), vec![rat(43, 100)]), &theta).unwrap(),
            ThetaCase::HasMiddle(rat(43, 100))
        );
        assert_eq!(
            classify_theta(&inst(2, a.clone(), vec![rat(1, 10), rat(1, 5)]), &theta).unwrap(),
            ThetaCase::OneSide(rat(1, 5))
        );
        assert_eq!(
            classify_theta(&inst(2, a.clone(), vec![rat(1, 10), rat(19, 20)]), &theta).unwrap(),
            ThetaCase::TwoSides(rat(1, 10), rat(19, 20))
        );
        assert!(matches!(
            classify_theta(&inst(2, a, vec![rat(1, 2)]), &rat(3, 4)),
            Err(MechanismError::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn theta_zero_is_always_middle() {
        let i = inst(
            2,
            vec![agent(rat_int(0), &[1, 0])],
            vec![rat(1, 100), rat(99, 100)],
        );
        let case = classify_theta(&i, &Rational::zero()).unwrap();
        assert_eq!(case, ThetaCase::HasMiddle(rat(1, 100)));
    }

    #[test]
    fn theta_middle_tie_goes_to_lowest_facility() {
        let i = inst(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[0, 1])],
            vec![rat(1, 2)],
        );
        let sol = mech_theta(&i, &theta_default()).unwrap();
        assert_eq!(sol, Solution::new(1, rat(1, 2)));
    }

    #[test]
    fn theta_two_sides_comparison() {
        let i = inst(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[0, 1])],
            vec![rat(1, 10), rat(19, 20)],
        );
        let sol = mech_theta(&i, &theta_default()).unwrap();
        assert_eq!(sol, Solution::new(2, rat(19, 20)));
    }

    #[test]
    fn theta_two_sides_tie_prefers_left() {
        // Both restricted welfares equal 9/10: keep the left solution.
        let i = inst(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[0, 1])],
            vec![rat(1, 10), rat(9, 10)],
        );
        let sol = mech_theta(&i, &theta_default()).unwrap();
        assert_eq!(sol, Solution::new(1, rat(1, 10)));
    }

    #[test]
    fn theta_bound_values() {
        assert_eq!(theta_ratio_bound(&rat(43, 100)).unwrap(), rat(100, 43));
        assert_eq!(theta_ratio_bound(&rat(1, 2)).unwrap(), rat(5, 2));
        assert_eq!(theta_ratio_bound(&rat(3, 10)).unwrap(), rat(10, 3));
        assert_eq!(theta_ratio_bound(&Rational::zero()), None);
    }

    #[test]
    fn minisum_examples() {
        let i = inst(
            2,
            vec![
                agent(rat_int(0), &[1, 0]),
                agent(rat(2, 5), &[1, 0]),
                agent(rat_int(1), &[0, 1]),
            ],
            vec![rat(3, 10), rat(4, 5)],
        );
        assert_eq!(mech_minisum(&i), Solution::new(1, rat(3, 10)));

        let single = inst(2, vec![agent(rat(1, 2), &[0, 1])], vec![rat(1, 2)]);
        assert_eq!(mech_minisum(&single), Solution::new(2, rat(1, 2)));

        let lower = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        assert_eq!(mech_minisum(&lower), Solution::new(1, rat_int(0)));
    }

    #[test]
    fn straddle_agents_get_k_fraction_expected_utility() {
        let i = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let lot = mech_general(&i);
        let f_star = most_approved_facility(&i);
        let bound = rat(1, i.k as i64);
        for (idx, a) in i.agents.iter().enumerate() {
            if a.approves(f_star) {
                assert!(i.expected_utility(idx, &lot) >= bound);
            }
        }
    }

    #[test]
    fn general_lottery_probabilities_in_unit_range() {
        // A few hand instances across cases; the sweeps cover this at scale.
        let cases = vec![
            inst(2, vec![agent(rat(1, 3), &[1, 1])], vec![rat(9, 10), rat(19, 20)]),
            inst(
                3,
                vec![
                    agent(rat(1, 3), &[1, 0, 0]),
                    agent(rat(2, 3), &[0, 1, 1]),
                ],
                vec![rat(1, 20), rat(1, 10)],
            ),
        ];
        for i in cases {
            let lot = mech_general(&i);
            lot.verify().unwrap();
            for (_, p) in lot.atoms() {
                assert!(!p.is_negative() && *p <= Rational::one());
            }
        }
    }
}
