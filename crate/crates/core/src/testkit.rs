//! Seeded generators and brute-force oracles shared by the test suites.
//!
//! The oracles here work on integer numerators over a common denominator and
//! never call into the interval algebra they are used to check.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functions::{Family, FamilyParams, FunctionSequence, StepFunction};
use crate::interval::{IntervalSet, OpenInterval};
use crate::rat::Rat;
use crate::tree::IntervalTree;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw open intervals `(lo / den, hi / den)` kept as integer numerators.
#[derive(Clone, Debug)]
pub struct GridIntervals {
    pub den: i64,
    pub raw: Vec<(i64, i64)>,
}

impl GridIntervals {
    pub fn random(rng: &mut TestRng, den: i64, max_count: usize) -> Self {
        let count = rng.gen_range(0..=max_count);
        let raw = (0..count)
            .map(|_| {
                let a = rng.gen_range(0..den);
                let b = rng.gen_range(a + 1..=den);
                (a, b)
            })
            .collect();
        GridIntervals { den, raw }
    }

    pub fn to_open_intervals(&self) -> Vec<OpenInterval> {
        self.raw
            .iter()
            .map(|&(a, b)| OpenInterval::new(Rat::new(a, self.den), Rat::new(b, self.den)).unwrap())
            .collect()
    }

    pub fn normalized(&self) -> IntervalSet {
        IntervalSet::normalize(self.to_open_intervals())
    }

    /// Direct scan: is `p / q` strictly inside some raw interval?
    pub fn member(&self, p: i64, q: i64) -> bool {
        let (p, q, d) = (p as i128, q as i128, self.den as i128);
        self.raw
            .iter()
            .any(|&(a, b)| (a as i128) * q < p * d && p * d < (b as i128) * q)
    }
}

/// Every `k / den` for `0 <= k <= den`.
pub fn grid_points(den: i64) -> impl Iterator<Item = (i64, i64)> {
    (0..=den).map(move |k| (k, den))
}

/// All reduced fractions `p / q` in `[0, 1]` with `q <= max_den`.
pub fn farey_points(max_den: i64) -> Vec<(i64, i64)> {
    let mut out = vec![(0, 1), (1, 1)];
    for q in 2..=max_den {
        for p in 1..q {
            if gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A step function on `[0, 1]` with values in `[0, 1]` and integral strictly
/// above `2 * eps`.
pub fn random_unit_step(rng: &mut TestRng, epsilon: &Rat) -> StepFunction {
    let two_eps = epsilon * &Rat::from_int(2);
    loop {
        let pieces = rng.gen_range(1..=8);
        let den = [4i64, 6, 8, 12, 16, 30, 64][rng.gen_range(0..7)];
        let mut cuts: Vec<i64> = (1..den).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<i64> = cuts.into_iter().take(pieces - 1).collect();
        cuts.sort_unstable();
        let mut bps = vec![Rat::zero()];
        bps.extend(cuts.iter().map(|&c| Rat::new(c, den)));
        bps.push(Rat::one());
        let values: Vec<Rat> = (0..bps.len() - 1)
            .map(|_| {
                let vd = [2i64, 3, 8, 16, 17][rng.gen_range(0..5)];
                Rat::new(rng.gen_range(0..=vd), vd)
            })
            .collect();
        let f = StepFunction::new(bps, values).unwrap();
        if f.integral() > two_eps {
            return f;
        }
    }
}

/// A random step function on `[lo, hi]` with values in `(-bound, bound)`.
pub fn random_step_on(rng: &mut TestRng, lo: &Rat, hi: &Rat, bound: i64) -> StepFunction {
    let pieces = rng.gen_range(1..=6);
    let den = 24i64;
    let mut cuts: Vec<i64> = (1..den).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts.into_iter().take(pieces - 1).collect();
    cuts.sort_unstable();
    let width = hi - lo;
    let mut bps = vec![lo.clone()];
    bps.extend(cuts.iter().map(|&c| lo + &(&width * &Rat::new(c, den))));
    bps.push(hi.clone());
    let vd = 7i64;
    let values = (0..bps.len() - 1)
        .map(|_| Rat::new(rng.gen_range(-(bound * vd - 1)..=(bound * vd - 1)), vd))
        .collect();
    StepFunction::new(bps, values).unwrap()
}

const MAX_SYNTHETIC_WIDTH: usize = 24;

/// Nested decreasing levels built by randomly dropping, keeping, shrinking or
/// splitting each component of the previous level. Split parts may touch.
pub fn random_nested_levels(rng: &mut TestRng, depth: usize) -> Vec<IntervalSet> {
    let first = loop {
        let g = GridIntervals::random(rng, 32, 4);
        let s = g.normalized();
        if !s.is_empty() {
            break s;
        }
    };
    let mut levels = vec![first];
    while levels.len() < depth {
        let prev = levels.last().unwrap();
        // Keep deep trees bounded: no further splitting once a level is wide.
        let roll_cap = if prev.len() >= MAX_SYNTHETIC_WIDTH {
            62
        } else {
            100
        };
        let mut next: Vec<(Rat, Rat)> = Vec::new();
        for iv in prev.intervals() {
            let w = iv.length();
            let at = |k: i64| iv.lo() + &(&w * &Rat::new(k, 8));
            match rng.gen_range(0..roll_cap) {
                0..=11 => {}
                12..=36 => next.push((iv.lo().clone(), iv.hi().clone())),
                37..=61 => {
                    let a = rng.gen_range(0..7);
                    let b = rng.gen_range(a + 1..=8);
                    next.push((at(a), at(b)));
                }
                _ => {
                    let parts = rng.gen_range(2..=3);
                    let mut pts: Vec<i64> = (0..=8).collect();
                    pts.shuffle(rng);
                    let mut pts: Vec<i64> = pts.into_iter().take(2 * parts).collect();
                    pts.sort_unstable();
                    for pair in pts.chunks(2) {
                        next.push((at(pair[0]), at(pair[1])));
                    }
                    // Sometimes make two parts touch.
                    if rng.gen_bool(0.3) && next.len() >= 2 {
                        let n = next.len();
                        let joint = next[n - 1].0.clone();
                        next[n - 2].1 = joint;
                    }
                }
            }
        }
        if next.is_empty() {
            let iv = &prev.intervals()[0];
            next.push((iv.lo().clone(), Rat::midpoint(iv.lo(), iv.hi())));
        }
        levels.push(IntervalSet::from_pairs(next).unwrap());
    }
    levels
}

/// Twice the shortest level length, so that every level clears `eps / 2`.
pub fn epsilon_for(levels: &[IntervalSet]) -> Rat {
    levels
        .iter()
        .map(IntervalSet::total_length)
        .min()
        .map(|m| m * Rat::from_int(2))
        .unwrap()
}

/// Components of `levels[depth - 1]` lying inside `(lo, hi)`. By nestedness
/// these are exactly the depth-`depth` descendants of a node `(lo, hi)`.
pub fn components_inside(levels: &[IntervalSet], depth: usize, iv: &OpenInterval) -> usize {
    levels[depth - 1]
        .intervals()
        .iter()
        .filter(|c| iv.lo() <= c.lo() && c.hi() <= iv.hi())
        .count()
}

/// Brute-force live set after terminating-node pruning of a fresh tree:
/// node at depth `<= horizon` survives iff some component of the horizon
/// level sits inside it. Returned as `(depth, interval)` pairs.
pub fn reachable_nodes(levels: &[IntervalSet], horizon: usize) -> Vec<(usize, OpenInterval)> {
    let mut out = Vec::new();
    for (i, level) in levels.iter().enumerate().take(horizon) {
        for c in level.intervals() {
            if components_inside(levels, horizon, c) > 0 {
                out.push((i + 1, c.clone()));
            }
        }
    }
    out
}

pub fn live_pairs(tree: &IntervalTree, horizon: usize) -> Vec<(usize, OpenInterval)> {
    (1..=horizon)
        .flat_map(|d| {
            tree.live_nodes_at(d)
                .map(move |id| (d, tree.node(id).interval.clone()))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Level sets `V_1..V_depth` of a family, via the extraction pipeline.
pub fn family_levels(
    family: Family,
    height: Rat,
    epsilon: &Rat,
    depth: usize,
    max_index: usize,
) -> Option<(FunctionSequence, Vec<IntervalSet>)> {
    let seq = crate::functions::make_family(family, FamilyParams { height }).ok()?;
    let selected = crate::extraction::select_subsequence(&seq, epsilon, max_index).ok()?;
    if selected.len() < depth {
        return None;
    }
    let supports = selected
        .iter()
        .map(|&n| crate::extraction::tall_support_of_term(&seq, n, epsilon))
        .collect::<crate::Result<Vec<_>>>()
        .ok()?;
    let levels = crate::extraction::build_tail_unions(&supports, depth)
        .ok()?
        .into_iter()
        .map(|u| u.set)
        .collect();
    Some((seq, levels))
}

/// An infinite enumerated open set inside `(offset, offset + width)`:
/// interval `k >= 0` is the left half of the k-th dyadic chunk
/// `[offset + width(1 - 2^-k), offset + width(1 - 2^-(k+1))]`.
/// Lengths are `width * 2^-(k+2)`; the total is `width / 2`.
/// The first `drop.len()` intervals may be dropped (`true`).
#[derive(Clone, Debug)]
pub struct DyadicStream {
    pub offset: Rat,
    pub width: Rat,
    pub drop: Vec<bool>,
}

impl DyadicStream {
    pub fn interval(&self, k: u32) -> OpenInterval {
        let lo = &self.offset + &(&self.width * &(Rat::one() - Rat::inv_pow2(k)));
        let hi = &lo + &(&self.width * &Rat::inv_pow2(k + 2));
        OpenInterval::new(lo, hi).unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = OpenInterval> + '_ {
        (0u32..)
            .filter(|&k| !self.drop.get(k as usize).copied().unwrap_or(false))
            .map(|k| self.interval(k))
    }

    /// Exact total length of the enumerated set.
    pub fn limit_length(&self) -> Rat {
        let dropped: Rat = self
            .drop
            .iter()
            .enumerate()
            .filter(|(_, d)| **d)
            .map(|(k, _)| self.interval(k as u32).length())
            .sum();
        &self.width / &Rat::from_int(2) - dropped
    }

    /// Declared bound on the length after the first `taken` enumerated
    /// intervals: the original stream's tail from position `taken`.
    pub fn tail_bound(&self, taken: usize) -> Rat {
        &self.width * &Rat::inv_pow2(taken as u32 + 1)
    }
}

/// A nested family of dyadic streams: each level drops a superset of the
/// previous level's dropped prefix.
pub fn random_stream_levels(rng: &mut TestRng, count: usize) -> Vec<DyadicStream> {
    let den = rng.gen_range(2..=8);
    let offset = Rat::new(rng.gen_range(0..den), 2 * den);
    let width = Rat::one() - &offset;
    let prefix = 6;
    let mut drop = vec![false; prefix];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let k = rng.gen_range(1..prefix);
        if rng.gen_bool(0.3) {
            drop[k] = true;
        }
        out.push(DyadicStream {
            offset: offset.clone(),
            width: width.clone(),
            drop: drop.clone(),
        });
    }
    out
}
