//! Subject-wise train/test partitioning.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSplit<T> {
    pub train_subjects: Vec<T>,
    pub test_subjects: Vec<T>,
    pub seed: u64,
}

/// Test-side size: `round(n · fraction)` clamped to `[1, n − 1]`.
pub fn n_test_subjects(n: usize, test_fraction: f64) -> usize {
    let raw = libm::round(n as f64 * test_fraction) as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

/// Uniformly random partition of the distinct subjects. Both sides come
/// back sorted; the result depends only on the subject set and `seed`.
pub fn subject_split<T: Clone + Ord>(subjects: &[T], test_fraction: f64, seed: u64) -> Result<SubjectSplit<T>> {
    let mut pool: Vec<T> = subjects.to_vec();
    pool.sort();
    pool.dedup();
    if pool.len() < 2 {
        return Err(Error::TooFewSubjects(pool.len()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let n_test = n_test_subjects(pool.len(), test_fraction);
    let mut rng = rng_from_seed(seed);
    pool.shuffle(&mut rng);
    let mut test_subjects = pool.split_off(pool.len() - n_test);
    let mut train_subjects = pool;
    train_subjects.sort();
    test_subjects.sort();
    Ok(SubjectSplit { train_subjects, test_subjects, seed })
}

/// Row indices (ascending) whose group is in `members`.
pub fn rows_in<T: Ord>(groups: &[T], members: &[T]) -> Vec<usize> {
    groups.iter().enumerate().filter(|(_, g)| members.binary_search(g).is_ok()).map(|(i, _)| i).collect()
}
