//! Instance model and exact welfare arithmetic.
//!
//! Everything is carried by arbitrary-precision rationals: positions,
//! candidate locations, probabilities, utilities and welfares. No floating
//! point enters any mechanism or audit path, so equality checks and
//! tie-breaks are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact arbitrary-precision fraction used for every quantity in the model.
pub type Rational = BigRational;

/// Shorthand for `n/d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer as an exact rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer in rational literal: {0:?}")]
    BadInteger(String),
    #[error("zero denominator in rational literal: {0:?}")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, `"p"`, or a decimal literal like `"0.43"` exactly
/// (`"0.43"` becomes `43/100`). No rounding ever happens.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let parse_int = |t: &str| -> Result<BigInt, RationalParseError> {
        t.parse::<BigInt>()
            .map_err(|_| RationalParseError::BadInteger(t.to_string()))
    };
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_int(num.trim())?;
        let d = parse_int(den.trim())?;
        if d.is_zero() {
            return Err(RationalParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int_str = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            format!("{int_part}0")
        } else {
            int_part.to_string()
        };
        let whole = parse_int(&int_str)?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::BadInteger(s.to_string()));
        }
        let frac = parse_int(frac_part)?;
        let scale = BigInt::from(10u8).pow(frac_part.len() as u32);
        let magnitude = whole.abs() * &scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(Rational::new(signed, scale));
    }
    Ok(Rational::from_integer(parse_int(s)?))
}

/// Canonical text rendering: `"p/q"` in lowest terms, or `"p"` when the
/// denominator is one. `parse_rational(format_rational(r)) == r` always.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed-point decimal rendering with `digits` fractional digits, rounded
/// half-even. Used only for human-readable report columns; exact values are
/// always serialized alongside.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let negative = r.is_negative();
    let scale = BigInt::from(10u8).pow(digits as u32);
    let num = r.numer().abs() * &scale;
    let den = r.denom().clone();
    let mut quo = &num / &den;
    let rem = &num % &den;
    let twice = &rem * BigInt::from(2);
    let round_up = match twice.cmp(&den) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => (&quo % BigInt::from(2)).is_one(),
        std::cmp::Ordering::Less => false,
    };
    if round_up {
        quo += 1;
    }
    let int_part = &quo / &scale;
    let frac_part = &quo % &scale;
    let sign = if negative && !quo.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part:0>width$}", width = digits)
    }
}

/// `|a - b|`.
pub fn distance(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("k = {k} is too small; at least two facilities are required")]
    KTooSmall { k: usize },
    #[error("instance has no agents")]
    NoAgents,
    #[error("agent {agent} position {position} is outside [0, 1]")]
    PositionOutOfRange { agent: usize, position: String },
    #[error("agent {agent} reports {got} approvals for k = {expected} facilities")]
    ApprovalLengthMismatch {
        agent: usize,
        got: usize,
        expected: usize,
    },
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("candidate {candidate} is outside [0, 1]")]
    CandidateOutOfRange { candidate: String },
    #[error("duplicate candidate location {candidate}")]
    DuplicateCandidate { candidate: String },
    #[error("candidate list is not sorted ascending")]
    CandidatesUnsorted,
    #[error("lottery probability {probability} is negative")]
    NegativeProbability { probability: String },
    #[error("lottery probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: String },
    #[error("lottery repeats solution (facility {facility} at {location})")]
    DuplicateSolution { facility: usize, location: String },
}

/// One agent: a position in `[0, 1]` and a binary approval per facility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub position: Rational,
    /// `approvals[j - 1]` is the approval for facility `j`.
    pub approvals: Vec<bool>,
}

impl Agent {
    pub fn new(position: Rational, approvals: Vec<bool>) -> Self {
        Agent {
            position,
            approvals,
        }
    }

    /// Whether this agent approves facility `facility` (1-based).
    pub fn approves(&self, facility: usize) -> bool {
        self.approvals[facility - 1]
    }

    /// Whether the agent approves at least one facility.
    pub fn approves_any(&self) -> bool {
        self.approvals.iter().any(|&a| a)
    }
}

/// A problem instance: `k` facilities, the agents, and the sorted candidate
/// locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub k: usize,
    pub agents: Vec<Agent>,
    /// Strictly increasing, all in `[0, 1]`.
    pub candidates: Vec<Rational>,
}

impl Instance {
    /// Builds an instance, sorting the candidate list, and validates every
    /// invariant. Duplicate candidates are an error, not merged, so file
    /// round-trips stay exact.
    pub fn new(
        k: usize,
        agents: Vec<Agent>,
        mut candidates: Vec<Rational>,
    ) -> Result<Self, ModelError> {
        candidates.sort();
        let inst = Instance {
            k,
            agents,
            candidates,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// Checks all instance invariants, reporting the first violation.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.k < 2 {
            return Err(ModelError::KTooSmall { k: self.k });
        }
        if self.agents.is_empty() {
            return Err(ModelError::NoAgents);
        }
        let zero = Rational::zero();
        let one = Rational::one();
        for (i, agent) in self.agents.iter().enumerate() {
            if agent.position < zero || agent.position > one {
                return Err(ModelError::PositionOutOfRange {
                    agent: i,
                    position: format_rational(&agent.position),
                });
            }
            if agent.approvals.len() != self.k {
                return Err(ModelError::ApprovalLengthMismatch {
                    agent: i,
                    got: agent.approvals.len(),
                    expected: self.k,
                });
            }
        }
        if self.candidates.is_empty() {
            return Err(ModelError::EmptyCandidates);
        }
        for c in &self.candidates {
            if *c < zero || *c > one {
                return Err(ModelError::CandidateOutOfRange {
                    candidate: format_rational(c),
                });
            }
        }
        for pair in self.candidates.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateCandidate {
                    candidate: format_rational(&pair[0]),
                });
            }
            if pair[0] > pair[1] {
                return Err(ModelError::CandidatesUnsorted);
            }
        }
        Ok(())
    }

    /// Leftmost candidate location.
    pub fn leftmost(&self) -> &Rational {
        &self.candidates[0]
    }

    /// Rightmost candidate location.
    pub fn rightmost(&self) -> &Rational {
        &self.candidates[self.candidates.len() - 1]
    }

    /// Utility of `agent` under `sol`: the approval times one minus the
    /// distance to the chosen location. Always in `[0, 1]`.
    pub fn utility(&self, agent: usize, sol: &Solution) -> Rational {
        let a = &self.agents[agent];
        if !a.approves(sol.facility) {
            return Rational::zero();
        }
        Rational::one() - distance(&a.position, &sol.location)
    }

    /// Expected utility of `agent` under a lottery over solutions.
    pub fn expected_utility(&self, agent: usize, lottery: &Lottery) -> Rational {
        lottery
            .atoms
            .iter()
            .map(|(sol, p)| p * self.utility(agent, sol))
            .sum()
    }

    /// Total utility of all agents under `sol`.
    pub fn social_welfare(&self, sol: &Solution) -> Rational {
        (0..self.n()).map(|i| self.utility(i, sol)).sum()
    }

    /// Expected social welfare of a lottery, computed per atom.
    pub fn expected_social_welfare(&self, lottery: &Lottery) -> Rational {
        lottery
            .atoms
            .iter()
            .map(|(sol, p)| p * self.social_welfare(sol))
            .sum()
    }

    /// `n_j` for every facility: how many agents approve it. Agents approving
    /// several facilities are counted in each.
    pub fn approval_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for agent in &self.agents {
            for (j, &approves) in agent.approvals.iter().enumerate() {
                if approves {
                    counts[j] += 1;
                }
            }
        }
        counts
    }

    /// Number of agents whose reported approval set is nonempty.
    pub fn active_agent_count(&self) -> usize {
        self.agents.iter().filter(|a| a.approves_any()).count()
    }

    /// Stable content digest used as the instance id in reports.
    pub fn digest(&self) -> String {
        let mut text = format!("k={};C=", self.k);
        for (i, c) in self.candidates.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&format_rational(c));
        }
        text.push_str(";A=");
        for (i, agent) in self.agents.iter().enumerate() {
            if i > 0 {
                text.push('|');
            }
            text.push_str(&format_rational(&agent.position));
            text.push(':');
            for &a in &agent.approvals {
                text.push(if a { '1' } else { '0' });
            }
        }
        format!("{:016x}", fnv1a(text.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A feasible outcome: facility `facility` (1-based) built at `location`,
/// which must be one of the instance's candidates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Solution {
    pub facility: usize,
    pub location: Rational,
}

impl Solution {
    pub fn new(facility: usize, location: Rational) -> Self {
        Solution { facility, location }
    }
}

impl std::fmt::Display for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.facility, format_rational(&self.location))
    }
}

/// A finite probability distribution over solutions. Atoms are kept in
/// canonical order (facility, then location), zero-probability atoms are
/// dropped, and the probabilities sum to exactly one, so `==` is
/// distribution equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lottery {
    atoms: Vec<(Solution, Rational)>,
}

impl Lottery {
    pub fn new(atoms: Vec<(Solution, Rational)>) -> Result<Self, ModelError> {
        let mut kept: Vec<(Solution, Rational)> = Vec::with_capacity(atoms.len());
        let mut sum = Rational::zero();
        for (sol, p) in atoms {
            if p.is_negative() {
                return Err(ModelError::NegativeProbability {
                    probability: format_rational(&p),
                });
            }
            sum += &p;
            if !p.is_zero() {
                kept.push((sol, p));
            }
        }
        if !sum.is_one() {
            return Err(ModelError::ProbabilitySum {
                sum: format_rational(&sum),
            });
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in kept.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ModelError::DuplicateSolution {
                    facility: pair[0].0.facility,
                    location: format_rational(&pair[0].0.location),
                });
            }
        }
        Ok(Lottery { atoms: kept })
    }

    /// The deterministic lottery: probability one on `sol`.
    pub fn point(sol: Solution) -> Self {
        Lottery {
            atoms: vec![(sol, Rational::one())],
        }
    }

    pub fn atoms(&self) -> &[(Solution, Rational)] {
        &self.atoms
    }

    /// Re-checks the distribution invariants; used by external validity
    /// sweeps so the check does not rely on construction-time state.
    pub fn verify(&self) -> Result<(), ModelError> {
        let mut sum = Rational::zero();
        for (_, p) in &self.atoms {
            if p.is_negative() || p > &Rational::one() {
                return Err(ModelError::NegativeProbability {
                    probability: format_rational(p),
                });
            }
            sum += p;
        }
        if !sum.is_one() {
            return Err(ModelError::ProbabilitySum {
                sum: format_rational(&sum),
            });
        }
        for pair in self.atoms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ModelError::DuplicateSolution {
                    facility: pair[0].0.facility,
                    location: format_rational(&pair[0].0.location),
                });
            }
        }
        Ok(())
    }

    /// Probability assigned to one solution (zero if absent).
    pub fn probability_of(&self, sol: &Solution) -> Rational {
        self.atoms
            .iter()
            .find(|(s, _)| s == sol)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }
}

impl std::fmt::Display for Lottery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (sol, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{sol}: {}", format_rational(p))?;
        }
        write!(f, "}}")
    }
}
