//! Instance constructors: seeded random families for sweeps, the exhaustive
//! small-grid family, and the adversarial lower-bound families exposed to
//! the CLI as `thm1`, `thm2` and `thm6`.
//!
//! The adversarial families take an exact rational `eps`; the "infinitesimal"
//! of the worst-case arguments is realized as a sequence of shrinking
//! rationals checked for monotone ratios, never as a float or a limit.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{rat, rat_int, Agent, Instance, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("eps = {eps} is outside the open interval ({low}, {high})")]
    EpsOutOfRange {
        eps: String,
        low: String,
        high: String,
    },
    #[error("step {step} is out of range (max {max})")]
    StepOutOfRange { step: usize, max: usize },
    #[error("k = {k} is too small; at least two facilities are required")]
    KTooSmall { k: usize },
    #[error("empty range {what}: {low}..={high}")]
    EmptyRange {
        what: &'static str,
        low: usize,
        high: usize,
    },
}

fn check_eps(eps: &Rational, high: Rational) -> Result<(), GenError> {
    if *eps <= Rational::from_integer(0.into()) || *eps >= high {
        return Err(GenError::EpsOutOfRange {
            eps: crate::model::format_rational(eps),
            low: "0".to_string(),
            high: crate::model::format_rational(&high),
        });
    }
    Ok(())
}

fn check_k(k: usize) -> Result<(), GenError> {
    if k < 2 {
        return Err(GenError::KTooSmall { k });
    }
    Ok(())
}

/// Approval vector with exactly the listed facilities (1-based) set.
fn approvals_of(k: usize, facilities: &[usize]) -> Vec<bool> {
    let mut v = vec![false; k];
    for &f in facilities {
        v[f - 1] = true;
    }
    v
}

/// Two agents at `eps` with disjoint single approvals (facilities 1 and 2)
/// and one candidate at `1`. With `step = 1` the second agent sits at `1`
/// instead; any deterministic truthful rule is forced into an arbitrarily
/// bad outcome on the pair of instances as `eps` shrinks.
pub fn gen_thm1(k: usize, eps: &Rational, step: usize) -> Result<Instance, GenError> {
    check_k(k)?;
    check_eps(eps, Rational::from_integer(1.into()))?;
    if step > 1 {
        return Err(GenError::StepOutOfRange { step, max: 1 });
    }
    let second_pos = if step == 1 { rat_int(1) } else { eps.clone() };
    let agents = vec![
        Agent::new(eps.clone(), approvals_of(k, &[1])),
        Agent::new(second_pos, approvals_of(k, &[2])),
    ];
    Ok(Instance::new(k, agents, vec![rat_int(1)]).expect("family instance is valid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thm2Variant {
    /// `k` agents at `eps`, agent `i` approving exactly facility `i`, one
    /// candidate at `1`.
    I,
    /// Same, with agent 1 moved to position `1`.
    J,
}

/// The randomized-lower-bound family: under variant `J` the optimum is `1`
/// while any truthful lottery's welfare tends to `1/k` as `eps` shrinks.
pub fn gen_thm2(k: usize, eps: &Rational, variant: Thm2Variant) -> Result<Instance, GenError> {
    check_k(k)?;
    check_eps(eps, Rational::from_integer(1.into()))?;
    let agents = (0..k)
        .map(|i| {
            let pos = if i == 0 && variant == Thm2Variant::J {
                rat_int(1)
            } else {
                eps.clone()
            };
            Agent::new(pos, approvals_of(k, &[i + 1]))
        })
        .collect();
    Ok(Instance::new(k, agents, vec![rat_int(1)]).expect("family instance is valid"))
}

/// The deterministic/randomized known-positions lower-bound family:
/// candidates at `0` and `1`; an agent at `0` approving only facility 1, two
/// agents at `1/2 - eps` and two at `1/2 + eps` approving everything, and an
/// agent at `1` approving only facility 2. `step` of the `1/2 - eps` agents
/// (0, 1 or 2) instead approve everything except facility 2.
pub fn gen_thm6_sequence(k: usize, eps: &Rational, step: usize) -> Result<Instance, GenError> {
    check_k(k)?;
    check_eps(eps, rat(1, 2))?;
    if step > 2 {
        return Err(GenError::StepOutOfRange { step, max: 2 });
    }
    let all: Vec<usize> = (1..=k).collect();
    let all_but_second: Vec<usize> = (1..=k).filter(|&j| j != 2).collect();
    let low = rat(1, 2) - eps;
    let high = rat(1, 2) + eps;
    let mut agents = vec![Agent::new(rat_int(0), approvals_of(k, &[1]))];
    for i in 0..2 {
        let approved = if i < step { &all_but_second } else { &all };
        agents.push(Agent::new(low.clone(), approvals_of(k, approved)));
    }
    for _ in 0..2 {
        agents.push(Agent::new(high.clone(), approvals_of(k, &all)));
    }
    agents.push(Agent::new(rat_int(1), approvals_of(k, &[2])));
    Ok(Instance::new(k, agents, vec![rat_int(0), rat_int(1)]).expect("family instance is valid"))
}

/// How random approval vectors are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApprovalModel {
    /// Exactly one approval per agent.
    SingleApproval,
    /// Uniform over nonempty approval subsets.
    NonemptyUniform,
    /// Uniform over all approval subsets, empty included.
    UnrestrictedUniform,
}

impl ApprovalModel {
    pub fn tag(&self) -> &'static str {
        match self {
            ApprovalModel::SingleApproval => "single",
            ApprovalModel::NonemptyUniform => "nonempty",
            ApprovalModel::UnrestrictedUniform => "unrestricted",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "single" => Some(ApprovalModel::SingleApproval),
            "nonempty" => Some(ApprovalModel::NonemptyUniform),
            "unrestricted" => Some(ApprovalModel::UnrestrictedUniform),
            _ => None,
        }
    }
}

/// Parameters of the seeded random family. Positions and candidates live on
/// the grid `{t / denominator}`; identical spec and seed reproduce the
/// identical instance sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub seed: u64,
    /// Inclusive agent-count range.
    pub n: (usize, usize),
    /// Inclusive facility-count range.
    pub k: (usize, usize),
    /// Grid denominator for positions and candidates.
    pub denominator: u64,
    /// Inclusive candidate-count range (clamped to the grid size).
    pub candidates: (usize, usize),
    pub approvals: ApprovalModel,
}

impl Default for RandomSpec {
    /// The default sweep family: `k` in `{2, 3}`, up to six agents, up to
    /// three candidates on the twelfths grid, nonempty uniform approvals.
    /// Dense enough to hit every mechanism case.
    fn default() -> Self {
        RandomSpec {
            seed: 0,
            n: (1, 6),
            k: (2, 3),
            denominator: 12,
            candidates: (1, 3),
            approvals: ApprovalModel::NonemptyUniform,
        }
    }
}

impl RandomSpec {
    fn check(&self) -> Result<(), GenError> {
        if self.n.0 > self.n.1 || self.n.0 == 0 {
            return Err(GenError::EmptyRange {
                what: "agents",
                low: self.n.0,
                high: self.n.1,
            });
        }
        if self.k.0 > self.k.1 {
            return Err(GenError::EmptyRange {
                what: "facilities",
                low: self.k.0,
                high: self.k.1,
            });
        }
        if self.k.0 < 2 {
            return Err(GenError::KTooSmall { k: self.k.0 });
        }
        if self.candidates.0 > self.candidates.1 || self.candidates.0 == 0 {
            return Err(GenError::EmptyRange {
                what: "candidates",
                low: self.candidates.0,
                high: self.candidates.1,
            });
        }
        Ok(())
    }
}

/// The `index`-th instance of the stream defined by `spec`. Deterministic in
/// `(spec, index)`, so generation parallelizes by index.
pub fn gen_random_one(spec: &RandomSpec, index: u64) -> Result<Instance, GenError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index.wrapping_add(1));
    let k = rng.gen_range(spec.k.0..=spec.k.1);
    let n = rng.gen_range(spec.n.0..=spec.n.1);
    let denom = spec.denominator.max(1);
    let grid_size = (denom + 1) as usize;
    let c_lo = spec.candidates.0.min(grid_size);
    let c_hi = spec.candidates.1.min(grid_size);
    let c_count = rng.gen_range(c_lo.max(1)..=c_hi.max(1));
    let mut ticks: Vec<u64> = rand::seq::index::sample(&mut rng, grid_size, c_count)
        .into_iter()
        .map(|t| t as u64)
        .collect();
    ticks.sort_unstable();
    let candidates: Vec<Rational> = ticks
        .into_iter()
        .map(|t| rat(t as i64, denom as i64))
        .collect();
    let mut agents = Vec::with_capacity(n);
    for _ in 0..n {
        let tick = rng.gen_range(0..=denom);
        let position = rat(tick as i64, denom as i64);
        let mask: u64 = match spec.approvals {
            ApprovalModel::SingleApproval => 1 << rng.gen_range(0..k),
            ApprovalModel::NonemptyUniform => rng.gen_range(1..(1u64 << k)),
            ApprovalModel::UnrestrictedUniform => rng.gen_range(0..(1u64 << k)),
        };
        let approvals = (0..k).map(|j| mask >> j & 1 == 1).collect();
        agents.push(Agent::new(position, approvals));
    }
    Ok(Instance::new(k, agents, candidates).expect("grid instance is valid"))
}

/// The first `count` instances of the stream.
pub fn gen_random(spec: &RandomSpec, count: u64) -> Result<Vec<Instance>, GenError> {
    spec.check()?;
    (0..count).map(|i| gen_random_one(spec, i)).collect()
}

/// Every instance with `n <= max_agents` agents, `k` facilities, positions
/// and candidates on the `denominator` grid, nonempty approval vectors, and
/// between one and `max_candidates` candidate locations. This is the
/// exhaustive desk-scale family the audits sweep.
pub fn exhaustive_grid(
    k: usize,
    max_agents: usize,
    denominator: u64,
    max_candidates: usize,
) -> Vec<Instance> {
    let grid: Vec<Rational> = (0..=denominator)
        .map(|t| rat(t as i64, denominator as i64))
        .collect();
    let masks: Vec<u64> = (1..(1u64 << k)).collect();
    let mut candidate_sets: Vec<Vec<Rational>> = Vec::new();
    let mut choose = vec![0usize; 0];
    subsets_up_to(&grid, max_candidates, &mut choose, &mut candidate_sets);

    let mut agent_pool: Vec<Agent> = Vec::new();
    for pos in &grid {
        for &mask in &masks {
            let approvals = (0..k).map(|j| mask >> j & 1 == 1).collect();
            agent_pool.push(Agent::new(pos.clone(), approvals));
        }
    }

    let mut instances = Vec::new();
    for cands in &candidate_sets {
        let mut profile: Vec<usize> = Vec::new();
        loop {
            if !profile.is_empty() {
                let agents: Vec<Agent> =
                    profile.iter().map(|&i| agent_pool[i].clone()).collect();
                instances.push(
                    Instance::new(k, agents, cands.clone()).expect("grid instance is valid"),
                );
            }
            if !advance_profile(&mut profile, agent_pool.len(), max_agents) {
                break;
            }
        }
    }
    instances
}

/// Nonempty subsets of `grid` with at most `max` elements, in index order.
fn subsets_up_to(
    grid: &[Rational],
    max: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<Rational>>,
) {
    if !chosen.is_empty() {
        out.push(chosen.iter().map(|&i| grid[i].clone()).collect());
    }
    if chosen.len() == max {
        return;
    }
    let start = chosen.last().map_or(0, |&i| i + 1);
    for i in start..grid.len() {
        chosen.push(i);
        subsets_up_to(grid, max, chosen, out);
        chosen.pop();
    }
}

/// Odometer over agent profiles of length 1..=max, each digit in 0..base.
fn advance_profile(profile: &mut Vec<usize>, base: usize, max_len: usize) -> bool {
    for digit in profile.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    if profile.len() < max_len {
        profile.push(0);
        return true;
    }
    false
}
