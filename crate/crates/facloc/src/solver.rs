//! Brute-force welfare oracles.
//!
//! Instances are desk scale (`k * |C|` in the thousands at most), so the
//! optimal solution is found by enumerating every feasible pair and the full
//! welfare table is always materialized for reports and ratio checks.

use thiserror::Error;

use crate::model::{format_rational, Instance, Rational, Solution};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("location {location} is not a candidate of the instance")]
    LocationNotCandidate { location: String },
}

/// Result of exhaustive welfare maximization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    /// The max-welfare solution under the global tie-break: lowest facility
    /// index first, then leftmost location.
    pub best: Solution,
    pub opt_welfare: Rational,
    /// Every feasible solution with its welfare, sorted by welfare
    /// descending, then facility, then location.
    pub full_table: Vec<(Solution, Rational)>,
}

/// Enumerates all `k * |C|` feasible solutions and returns the optimum.
pub fn optimal_solution(inst: &Instance) -> OptResult {
    let mut table: Vec<(Solution, Rational)> = Vec::with_capacity(inst.k * inst.candidates.len());
    for facility in 1..=inst.k {
        for location in &inst.candidates {
            let sol = Solution::new(facility, location.clone());
            let welfare = inst.social_welfare(&sol);
            table.push((sol, welfare));
        }
    }
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (best, opt_welfare) = table[0].clone();
    OptResult {
        best,
        opt_welfare,
        full_table: table,
    }
}

/// Welfare-maximizing facility for a fixed candidate location, restricted to
/// a subset of agents. Ties go to the lowest facility index. Returns the
/// facility and the restricted welfare it attains.
pub fn best_facility_at(
    inst: &Instance,
    location: &Rational,
    subset: &[usize],
) -> Result<(usize, Rational), SolverError> {
    if !inst.candidates.contains(location) {
        return Err(SolverError::LocationNotCandidate {
            location: format_rational(location),
        });
    }
    Ok(best_facility_unchecked(inst, location, subset))
}

/// Same as [`best_facility_at`] without the membership check; for callers
/// that already hold a candidate borrowed from the instance.
pub(crate) fn best_facility_unchecked(
    inst: &Instance,
    location: &Rational,
    subset: &[usize],
) -> (usize, Rational) {
    let mut best_facility = 1usize;
    let mut best_welfare: Option<Rational> = None;
    for facility in 1..=inst.k {
        let mut welfare = Rational::from_integer(0.into());
        for &i in subset {
            let sol = Solution::new(facility, location.clone());
            welfare += inst.utility(i, &sol);
        }
        match &best_welfare {
            Some(current) if welfare <= *current => {}
            _ => {
                best_facility = facility;
                best_welfare = Some(welfare);
            }
        }
    }
    (best_facility, best_welfare.expect("k >= 2"))
}

/// All agent indices of an instance, the common `subset` argument.
pub fn all_agents(inst: &Instance) -> Vec<usize> {
    (0..inst.n()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_thm6_sequence, Thm2Variant};
    use crate::generators::gen_thm2;
    use crate::model::{rat, rat_int, Agent};

    fn agent(pos: Rational, bits: &[u8]) -> Agent {
        Agent::new(pos, bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn thm6_step0_full_table() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let opt = optimal_solution(&inst);
        assert_eq!(opt.best, Solution::new(1, rat_int(0)));
        assert_eq!(opt.opt_welfare, rat_int(3));
        let table: Vec<(usize, Rational, Rational)> = opt
            .full_table
            .iter()
            .map(|(s, w)| (s.facility, s.location.clone(), w.clone()))
            .collect();
        assert_eq!(
            table,
            vec![
                (1, rat_int(0), rat_int(3)),
                (2, rat_int(1), rat_int(3)),
                (1, rat_int(1), rat_int(2)),
                (2, rat_int(0), rat_int(2)),
            ]
        );
        // Re-enumeration: nothing beats the reported optimum.
        for (sol, _) in &opt.full_table {
            assert!(inst.social_welfare(sol) <= opt.opt_welfare);
        }
    }

    #[test]
    fn thm2_variant_j_optimum() {
        let inst = gen_thm2(3, &rat(1, 1000), Thm2Variant::J).unwrap();
        let opt = optimal_solution(&inst);
        assert_eq!(opt.best, Solution::new(1, rat_int(1)));
        assert_eq!(opt.opt_welfare, rat_int(1));
    }

    #[test]
    fn all_zero_approvals_tie_break() {
        let inst = Instance::new(
            2,
            vec![agent(rat(1, 2), &[0, 0])],
            vec![rat(1, 4), rat(3, 4)],
        )
        .unwrap();
        let opt = optimal_solution(&inst);
        assert_eq!(opt.opt_welfare, rat_int(0));
        assert_eq!(opt.best, Solution::new(1, rat(1, 4)));
    }

    #[test]
    fn opt_welfare_bounded_by_max_approval_count() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 0).unwrap();
        let max_nj = inst.approval_counts().into_iter().max().unwrap();
        assert!(optimal_solution(&inst).opt_welfare <= rat_int(max_nj as i64));
    }

    #[test]
    fn best_facility_symmetric_tie() {
        let inst = Instance::new(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[0, 1])],
            vec![rat(1, 2)],
        )
        .unwrap();
        let (f, w) = best_facility_at(&inst, &rat(1, 2), &all_agents(&inst)).unwrap();
        assert_eq!((f, w), (1, rat(1, 2)));
    }

    #[test]
    fn best_facility_restricted_subset() {
        let inst = Instance::new(
            2,
            vec![agent(rat_int(0), &[1, 0]), agent(rat_int(1), &[0, 1])],
            vec![rat(1, 10), rat(19, 20)],
        )
        .unwrap();
        let (f, w) = best_facility_at(&inst, &rat(1, 10), &[0]).unwrap();
        assert_eq!((f, w), (1, rat(9, 10)));
    }

    #[test]
    fn best_facility_empty_subset_and_bad_location() {
        let inst = Instance::new(
            2,
            vec![agent(rat_int(0), &[1, 0])],
            vec![rat(1, 2)],
        )
        .unwrap();
        let (f, w) = best_facility_at(&inst, &rat(1, 2), &[]).unwrap();
        assert_eq!((f, w), (1, rat_int(0)));
        assert!(matches!(
            best_facility_at(&inst, &rat(1, 3), &[]),
            Err(SolverError::LocationNotCandidate { .. })
        ));
    }

    #[test]
    fn best_facility_matches_optimum_at_fixed_location() {
        let inst = gen_thm6_sequence(2, &rat(1, 100), 1).unwrap();
        let subset = all_agents(&inst);
        for c in &inst.candidates {
            let (f, w) = best_facility_at(&inst, c, &subset).unwrap();
            let best_here = optimal_solution(&inst)
                .full_table
                .into_iter()
                .filter(|(s, _)| s.location == *c)
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.facility.cmp(&a.0.facility)))
                .unwrap();
            assert_eq!(w, best_here.1);
            assert_eq!(f, best_here.0.facility);
        }
    }
}
