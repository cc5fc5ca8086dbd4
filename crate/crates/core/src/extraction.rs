//! Tall supports and tail unions.
//!
//! A term `f` with `integral(f) > 2 * eps` and values in `[0, 1]` carries an
//! open set `U` of length at least `eps` on which `f > eps`: the pieces with
//! value at most `eps` contribute at most `eps` of area, so the remaining
//! pieces carry more than `eps`, and since their height is at most one their
//! total width is at least `eps`. Tail unions `V_n = U_n u U_{n+1} u ...`
//! are then nested by construction.

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{FunctionSequence, StepFunction};
use crate::interval::{IntervalSet, OpenInterval};
use crate::rat::Rat;

/// Iteration cap for [`truncate_enumerated`].
pub const DEFAULT_TRUNCATION_CAP: usize = 1 << 16;

/// `0 < eps < 1/2`; otherwise `integral > 2 * eps` is unsatisfiable for
/// functions into `[0, 1]`.
pub fn check_epsilon(epsilon: &Rat) -> Result<()> {
    if !epsilon.is_positive() || epsilon * &Rat::from_int(2) >= Rat::one() {
        return Err(Error::InvalidEpsilon(epsilon.clone()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionConfig {
    pub epsilon: Rat,
    pub max_index: usize,
    pub subsequence: Option<Vec<usize>>,
}

impl ExtractionConfig {
    pub fn new(epsilon: Rat, max_index: usize) -> Result<Self> {
        check_epsilon(&epsilon)?;
        if max_index == 0 {
            return Err(Error::InvalidParams("max_index must be positive".into()));
        }
        Ok(ExtractionConfig {
            epsilon,
            max_index,
            subsequence: None,
        })
    }

    /// Restricts attention to the given indices (each `<= max_index`).
    pub fn with_subsequence(mut self, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&n| n == 0 || n > self.max_index) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.max_index,
            });
        }
        self.subsequence = Some(indices);
        Ok(self)
    }

    /// Indices that pass selection, honouring any configured subsequence.
    pub fn select(&self, seq: &FunctionSequence) -> Result<Vec<usize>> {
        let selected = select_subsequence(seq, &self.epsilon, self.max_index)?;
        Ok(match &self.subsequence {
            Some(sub) => selected
                .into_iter()
                .filter(|n| sub.binary_search(n).is_ok())
                .collect(),
            None => selected,
        })
    }
}

/// All `n <= max_index` with `integral(f_n) > 2 * eps`, increasing.
pub fn select_subsequence(
    seq: &FunctionSequence,
    epsilon: &Rat,
    max_index: usize,
) -> Result<Vec<usize>> {
    check_epsilon(epsilon)?;
    let two_eps = epsilon * &Rat::from_int(2);
    let last = seq.len().map_or(max_index, |len| len.min(max_index));
    let mut out = Vec::new();
    for n in 1..=last {
        if seq.term(n)?.integral() > two_eps {
            out.push(n);
        }
    }
    debug!(
        "selected {} of {} indices at eps = {}",
        out.len(),
        last,
        epsilon
    );
    Ok(out)
}

/// `U_n`: where the source term exceeds `epsilon`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TallSupport {
    pub set: IntervalSet,
    pub source_index: usize,
    pub epsilon: Rat,
}

/// Union of the open pieces of `f` with value `> epsilon`.
///
/// Fails loudly when `f` is not in unit form or `integral(f) <= 2 * epsilon`.
/// The returned support is tagged with `source_index` 0; see
/// [`tall_support_of_term`] for sequence terms.
pub fn tall_support(f: &StepFunction, epsilon: &Rat) -> Result<TallSupport> {
    tall_support_indexed(f, epsilon, None)
}

/// [`tall_support`] of the n-th term of `seq`.
pub fn tall_support_of_term(
    seq: &FunctionSequence,
    n: usize,
    epsilon: &Rat,
) -> Result<TallSupport> {
    tall_support_indexed(&seq.term(n)?, epsilon, Some(n))
}

fn tall_support_indexed(
    f: &StepFunction,
    epsilon: &Rat,
    index: Option<usize>,
) -> Result<TallSupport> {
    check_epsilon(epsilon)?;
    f.check_unit_form()?;
    let integral = f.integral();
    let two_epsilon = epsilon * &Rat::from_int(2);
    if integral <= two_epsilon {
        return Err(Error::IntegralTooSmall {
            index,
            integral,
            two_epsilon,
        });
    }
    let tall = f
        .pieces()
        .filter(|(_, _, v)| *v > epsilon)
        .map(|(lo, hi, _)| OpenInterval::new(lo.clone(), hi.clone()))
        .collect::<Result<Vec<_>>>()?;
    let set = IntervalSet::normalize(tall);

    let length = set.total_length();
    if &length < epsilon {
        return Err(Error::Postcondition(format!(
            "tall support has length {length} < eps = {epsilon}"
        )));
    }
    for iv in set.intervals() {
        // Each component is a run of tall pieces; probe every piece in it.
        for (lo, hi, v) in f.pieces() {
            if iv.lo() <= lo && hi <= iv.hi() && v <= epsilon {
                return Err(Error::Postcondition(format!(
                    "value {v} on ({lo}, {hi}) inside the tall support is not > {epsilon}"
                )));
            }
        }
    }
    Ok(TallSupport {
        set,
        source_index: index.unwrap_or(0),
        epsilon: epsilon.clone(),
    })
}

/// `V_n`: the union of all selected supports from position `n` on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TailUnion {
    pub set: IntervalSet,
    pub start_index: usize,
    pub covered_indices: Vec<usize>,
}

/// `V_1, ..., V_depth` where `V_n` unions `supports[n - 1..]`.
pub fn build_tail_unions(supports: &[TallSupport], depth: usize) -> Result<Vec<TailUnion>> {
    if depth > supports.len() {
        return Err(Error::NotEnoughSupports {
            requested: depth,
            available: supports.len(),
        });
    }
    if supports
        .windows(2)
        .any(|w| w[0].source_index >= w[1].source_index)
    {
        return Err(Error::InvalidParams(
            "supports must be strictly ordered by source index".into(),
        ));
    }
    // Suffix unions, built back to front.
    let mut suffix = vec![IntervalSet::empty(); supports.len() + 1];
    for i in (0..supports.len()).rev() {
        suffix[i] = supports[i].set.union(&suffix[i + 1]);
    }
    let mut out = Vec::with_capacity(depth);
    for n in 0..depth {
        let u = TailUnion {
            set: suffix[n].clone(),
            start_index: supports[n].source_index,
            covered_indices: supports[n..].iter().map(|s| s.source_index).collect(),
        };
        let eps = &supports[n].epsilon;
        if &u.set.total_length() < eps {
            return Err(Error::LevelTooShort {
                level: n + 1,
                length: u.set.total_length(),
                required: eps.clone(),
            });
        }
        out.push(u);
    }
    Ok(out)
}

/// Finite prefix of an enumerated open set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub set: IntervalSet,
    pub taken: usize,
    /// Declared bound on the length left out.
    pub declared_tail: Rat,
}

/// Takes intervals from `enumerator` until the declared tail bound drops to
/// `budget`.
///
/// `tail_bound(k)` must bound the total length of everything after the
/// first `k` intervals. An exhausted enumerator has tail 0.
pub fn truncate_enumerated<I, T>(enumerator: I, tail_bound: T, budget: &Rat) -> Result<Truncation>
where
    I: IntoIterator<Item = OpenInterval>,
    T: Fn(usize) -> Rat,
{
    truncate_enumerated_with_cap(enumerator, tail_bound, budget, DEFAULT_TRUNCATION_CAP)
}

pub fn truncate_enumerated_with_cap<I, T>(
    enumerator: I,
    tail_bound: T,
    budget: &Rat,
    cap: usize,
) -> Result<Truncation>
where
    I: IntoIterator<Item = OpenInterval>,
    T: Fn(usize) -> Rat,
{
    let mut it = enumerator.into_iter();
    let mut set = IntervalSet::empty();
    let mut length = Rat::zero();
    let mut taken = 0;
    loop {
        let tail = tail_bound(taken);
        if &tail <= budget {
            return Ok(Truncation {
                set,
                taken,
                declared_tail: tail,
            });
        }
        if taken >= cap {
            return Err(Error::BudgetUnreachable {
                budget: budget.clone(),
                cap,
            });
        }
        let Some(iv) = it.next() else {
            return Ok(Truncation {
                set,
                taken,
                declared_tail: Rat::zero(),
            });
        };
        let next_length = &length + &iv.length();
        set = set.union(&IntervalSet::normalize([iv]));
        if set.total_length() != next_length {
            return Err(Error::EnumerationOverlap { index: taken });
        }
        length = next_length;
        taken += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedLevel {
    /// Nested result: this level's prefix with the descendants of earlier
    /// truncated tails removed.
    pub set: IntervalSet,
    /// This level's prefix on its own.
    pub prefix: IntervalSet,
    /// `eps / 2^(n+1)` for level `n`.
    pub budget: Rat,
}

/// Truncates each level `n` (1-based) of a nested enumerated family to within
/// `eps / 2^(n+1)` and re-nests the results. Total loss stays below `eps / 2`.
pub fn truncate_levels<L, I, T>(levels: L, epsilon: &Rat) -> Result<Vec<TruncatedLevel>>
where
    L: IntoIterator<Item = (I, T)>,
    I: IntoIterator<Item = OpenInterval>,
    T: Fn(usize) -> Rat,
{
    let mut out: Vec<TruncatedLevel> = Vec::new();
    for (i, (enumerator, tail_bound)) in levels.into_iter().enumerate() {
        let level = i + 1;
        let shift =
            u32::try_from(level + 1).map_err(|_| Error::InvalidParams("too many levels".into()))?;
        let budget = epsilon * &Rat::inv_pow2(shift);
        let prefix = truncate_enumerated(enumerator, tail_bound, &budget)?.set;
        let set = match out.last() {
            Some(prev) => prefix.intersect(&prev.set),
            None => prefix.clone(),
        };
        out.push(TruncatedLevel {
            set,
            prefix,
            budget,
        });
    }
    Ok(out)
}
