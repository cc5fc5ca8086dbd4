//! Finite unions of open intervals with rational endpoints in `[0, 1]`.
//!
//! An [`IntervalSet`] is always canonical: its members are pairwise disjoint,
//! sorted by left endpoint, and two members are merged only when they overlap
//! as open sets. `(0, 1/2)` and `(1/2, 1)` therefore stay two components, since
//! the point `1/2` belongs to neither.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rat::Rat;

/// A nonempty open interval `(lo, hi)` with `0 <= lo < hi <= 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpenInterval {
    lo: Rat,
    hi: Rat,
}

impl OpenInterval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self> {
        if lo.is_negative() || hi > 1 || lo >= hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(OpenInterval { lo, hi })
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rat {
        Rat::midpoint(&self.lo, &self.hi)
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo < x && x < &self.hi
    }

    /// `other` lies inside `self` as a set.
    pub fn contains_interval(&self, other: &OpenInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &OpenInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    fn meet(&self, other: &OpenInterval) -> Option<OpenInterval> {
        let lo = Rat::max(&self.lo, &other.lo);
        let hi = Rat::min(&self.hi, &other.hi);
        (lo < hi).then(|| OpenInterval {
            lo: lo.clone(),
            hi: hi.clone(),
        })
    }
}

impl fmt::Debug for OpenInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

impl fmt::Display for OpenInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for OpenInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.lo, &self.hi).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OpenInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (lo, hi) = <(Rat, Rat)>::deserialize(deserializer)?;
        OpenInterval::new(lo, hi).map_err(de::Error::custom)
    }
}

/// Canonical finite disjoint union of open intervals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    intervals: Vec<OpenInterval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// The open unit interval `(0, 1)`.
    pub fn unit() -> Self {
        IntervalSet {
            intervals: vec![OpenInterval {
                lo: Rat::zero(),
                hi: Rat::one(),
            }],
        }
    }

    /// Canonical form of the union of `raw`, viewed as an open set.
    pub fn normalize(raw: impl IntoIterator<Item = OpenInterval>) -> Self {
        let mut raw: Vec<OpenInterval> = raw.into_iter().collect();
        raw.sort_unstable();
        IntervalSet {
            intervals: merge_sorted(raw),
        }
    }

    /// Validates and normalizes `(lo, hi)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rat, Rat)>,
    {
        let raw = pairs
            .into_iter()
            .map(|(lo, hi)| OpenInterval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalSet::normalize(raw))
    }

    pub fn intervals(&self) -> &[OpenInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> Rat {
        self.intervals.iter().map(OpenInterval::length).sum()
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.component_containing(x).is_some()
    }

    /// The member interval that contains `x`, if any.
    pub fn component_containing(&self, x: &Rat) -> Option<&OpenInterval> {
        // First member whose right end is beyond x.
        let idx = self.intervals.partition_point(|iv| iv.hi() <= x);
        self.intervals.get(idx).filter(|iv| iv.contains(x))
    }

    /// Index of the member interval that contains the whole of `iv`.
    pub fn component_covering(&self, iv: &OpenInterval) -> Option<usize> {
        let idx = self.intervals.partition_point(|c| c.hi() <= iv.lo());
        self.intervals
            .get(idx)
            .filter(|c| c.contains_interval(iv))
            .map(|_| idx)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(m) = a[i].meet(&b[j]) {
                out.push(m);
            }
            if a[i].hi() < b[j].hi() {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Already sorted and disjoint.
        IntervalSet { intervals: out }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
            if take_a {
                all.push(a[i].clone());
                i += 1;
            } else {
                all.push(b[j].clone());
                j += 1;
            }
        }
        IntervalSet {
            intervals: merge_sorted(all),
        }
    }

    /// Every point of `self` lies in `other`.
    pub fn subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals
            .iter()
            .all(|iv| other.component_covering(iv).is_some())
    }
}

fn merge_sorted(sorted: Vec<OpenInterval>) -> Vec<OpenInterval> {
    let mut out: Vec<OpenInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            // Genuine open overlap only; a shared endpoint keeps them apart.
            Some(last) if iv.lo < last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.intervals).finish()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " u ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalSetRepr {
    intervals: Vec<OpenInterval>,
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("IntervalSet", 1)?;
        st.serialize_field("intervals", &self.intervals)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = IntervalSetRepr::deserialize(deserializer)?;
        Ok(IntervalSet::normalize(repr.intervals))
    }
}
