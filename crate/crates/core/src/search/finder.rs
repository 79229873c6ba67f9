//! Locating the first failure-causing input with fixed-size-candidate-set
//! adaptive random testing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::geometry::{InputDomain, Point};
use crate::oracles::Oracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstFailure {
    pub point: Point,
    /// Test inputs executed, including the failing one.
    pub executions: u64,
}

/// Index of the candidate whose nearest executed input is farthest away.
/// Ties go to the lowest index.
pub fn select_fscs_candidate(executed: &[Point], candidates: &[Point]) -> usize {
    let mut best = 0;
    let mut best_dist = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let nearest = executed
            .iter()
            .map(|e| c.distance_squared(e))
            .fold(f64::INFINITY, f64::min);
        if nearest > best_dist {
            best_dist = nearest;
            best = i;
        }
    }
    best
}

/// Runs FSCS-ART until the oracle reports a failure or `budget` test inputs
/// have been executed.
pub fn find_first_failure<O, R>(
    oracle: &mut O,
    domain: &InputDomain,
    fscs_candidates: usize,
    rng: &mut R,
    budget: u64,
) -> Result<FirstFailure, SearchError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    if fscs_candidates == 0 {
        return Err(SearchError::InvalidConfig(
            "FSCS candidate count must be >= 1".into(),
        ));
    }
    let mut executed: Vec<Point> = Vec::new();
    let mut candidates: Vec<Point> = Vec::with_capacity(fscs_candidates);
    while (executed.len() as u64) < budget {
        let next = if executed.is_empty() {
            domain.sample(rng)
        } else {
            candidates.clear();
            candidates.extend((0..fscs_candidates).map(|_| domain.sample(rng)));
            let pick = select_fscs_candidate(&executed, &candidates);
            candidates.swap_remove(pick)
        };
        let fail = oracle.verdict(&next)?.is_fail();
        executed.push(next);
        if fail {
            return Ok(FirstFailure {
                point: executed.pop().expect("just pushed"),
                executions: executed.len() as u64 + 1,
            });
        }
    }
    Err(SearchError::NoFailureFound {
        executions: executed.len() as u64,
    })
}
