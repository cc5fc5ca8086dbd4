//! Witness certificates and their exact re-verification.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::witness::{FatPath, NestedWitness};
use super::IntervalTree;
use crate::error::{Error, Result};
use crate::extraction::{
    build_tail_unions, check_epsilon, select_subsequence, tall_support_of_term,
};
use crate::functions::FunctionSequence;
use crate::interval::{IntervalSet, OpenInterval};
use crate::rat::Rat;

/// Closed interval `[lo, hi]`, `lo <= hi`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ClosedInterval {
    lo: Rat,
    hi: Rat,
}

impl ClosedInterval {
    pub fn new(lo: Rat, hi: Rat) -> Option<Self> {
        (lo <= hi).then_some(ClosedInterval { lo, hi })
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `other` lies in the interior of `self`.
    pub fn strictly_contains(&self, other: &ClosedInterval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }
}

impl fmt::Debug for ClosedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for ClosedInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.lo, &self.hi).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClosedInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (lo, hi) = <(Rat, Rat)>::deserialize(deserializer)?;
        ClosedInterval::new(lo.clone(), hi.clone())
            .ok_or_else(|| de::Error::custom(format!("closed interval [{lo}, {hi}] is empty")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessMode {
    NestedClosedIntervals,
    FatPathCluster,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub level: usize,
    pub component: OpenInterval,
}

/// Finite-depth evidence that `witness` lies in `V_1, ..., V_levels` and that
/// the selected terms exceed `epsilon` there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessCertificate {
    pub witness: Rat,
    pub mode: WitnessMode,
    /// Strictly nested closed intervals (nested mode; empty otherwise).
    pub chain: Vec<ClosedInterval>,
    pub levels: usize,
    pub max_index: usize,
    pub epsilon: Rat,
    pub evidence: Vec<Evidence>,
    pub spec_hash: String,
    pub horizon: usize,
    /// Midpoints along the fat path (fat-path mode; empty otherwise).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub midpoints: Vec<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Rat>,
    /// Set when any input rests on caller-declared integrability evidence.
    #[serde(default)]
    pub conditional: bool,
}

fn evidence_for(tree: &IntervalTree, x: &Rat, levels: usize) -> Result<Vec<Evidence>> {
    (1..=levels)
        .map(|level| {
            tree.level(level)
                .component_containing(x)
                .map(|c| Evidence {
                    level,
                    component: c.clone(),
                })
                .ok_or_else(|| Error::Postcondition(format!("witness {x} is not in level {level}")))
        })
        .collect()
}

impl WitnessCertificate {
    pub fn from_nested(
        tree: &IntervalTree,
        w: &NestedWitness,
        max_index: usize,
        spec_hash: String,
    ) -> Result<Self> {
        let levels = w.certified_levels(tree);
        Ok(WitnessCertificate {
            evidence: evidence_for(tree, &w.witness, levels)?,
            witness: w.witness.clone(),
            mode: WitnessMode::NestedClosedIntervals,
            chain: w.chain.clone(),
            levels,
            max_index,
            epsilon: tree.epsilon().clone(),
            spec_hash,
            horizon: w.horizon,
            midpoints: Vec::new(),
            lambda: None,
            conditional: false,
        })
    }

    pub fn from_fat_path(
        tree: &IntervalTree,
        fp: &FatPath,
        horizon: usize,
        max_index: usize,
        spec_hash: String,
    ) -> Result<Self> {
        let levels = fp.nodes.len();
        Ok(WitnessCertificate {
            evidence: evidence_for(tree, &fp.witness, levels)?,
            witness: fp.witness.clone(),
            mode: WitnessMode::FatPathCluster,
            chain: Vec::new(),
            levels,
            max_index,
            epsilon: tree.epsilon().clone(),
            spec_hash,
            horizon,
            midpoints: fp.midpoints.clone(),
            lambda: Some(fp.lambda.clone()),
            conditional: false,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Certificate clauses, in checking order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "kebab-case")]
pub enum Clause {
    Parameters,
    /// Closed chain strictly nested, or fat path consistent.
    ChainNesting,
    LevelMembership {
        level: usize,
    },
    Evidence {
        level: usize,
    },
    ChainMembership {
        position: usize,
    },
    FunctionValue {
        index: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationFailure {
    #[serde(flatten)]
    pub clause: Clause,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub failure: Option<VerificationFailure>,
    pub witness: Rat,
    pub mode: WitnessMode,
    pub levels_checked: usize,
    /// Selected indices `k <= max_index` (those with `integral(f_k) > 2 eps`).
    pub selected_indices: Vec<usize>,
    /// Selected `k` whose tall support contains the witness.
    pub support_hits: Vec<usize>,
    /// Selected `k` with `f_k(witness) > eps`.
    pub exceed_indices: Vec<usize>,
}

impl VerificationReport {
    pub fn exceed_count(&self) -> usize {
        self.exceed_indices.len()
    }
}

struct Checker<'a> {
    cert: &'a WitnessCertificate,
    report: VerificationReport,
}

impl Checker<'_> {
    fn fail(mut self, clause: Clause, detail: impl Into<String>) -> VerificationReport {
        self.report.passed = false;
        self.report.failure = Some(VerificationFailure {
            clause,
            detail: detail.into(),
        });
        self.report
    }
}

/// Re-checks `cert` exactly against `levels` (`V_1, V_2, ...`) and `seq`.
///
/// Returns a report naming the first falsified clause; never errors.
pub fn verify_certificate(
    cert: &WitnessCertificate,
    levels: &[IntervalSet],
    seq: &FunctionSequence,
) -> VerificationReport {
    let c = Checker {
        cert,
        report: VerificationReport {
            passed: true,
            failure: None,
            witness: cert.witness.clone(),
            mode: cert.mode,
            levels_checked: 0,
            selected_indices: Vec::new(),
            support_hits: Vec::new(),
            exceed_indices: Vec::new(),
        },
    };
    verify_inner(c, levels, seq)
}

fn verify_inner(
    mut c: Checker<'_>,
    levels: &[IntervalSet],
    seq: &FunctionSequence,
) -> VerificationReport {
    let cert = c.cert;
    let x = &cert.witness;

    // (0) parameters
    if let Err(e) = check_epsilon(&cert.epsilon) {
        return c.fail(Clause::Parameters, e.to_string());
    }
    if cert.spec_hash != seq.spec_hash() {
        return c.fail(Clause::Parameters, "spec_hash does not match the sequence");
    }
    if cert.levels == 0 || cert.levels > levels.len() {
        return c.fail(
            Clause::Parameters,
            format!(
                "certificate claims {} levels, {} available",
                cert.levels,
                levels.len()
            ),
        );
    }
    if cert.evidence.len() != cert.levels
        || cert
            .evidence
            .iter()
            .enumerate()
            .any(|(i, e)| e.level != i + 1)
    {
        return c.fail(
            Clause::Parameters,
            "evidence must list levels 1..=levels in order",
        );
    }

    // (1) chain nesting / path consistency
    match cert.mode {
        WitnessMode::NestedClosedIntervals => {
            if cert.chain.is_empty() {
                return c.fail(Clause::ChainNesting, "empty closed chain");
            }
            if let Some(k) = cert
                .chain
                .windows(2)
                .position(|w| !w[0].strictly_contains(&w[1]))
            {
                return c.fail(
                    Clause::ChainNesting,
                    format!(
                        "chain element {} is not strictly inside element {}",
                        k + 1,
                        k
                    ),
                );
            }
        }
        WitnessMode::FatPathCluster => {
            let Some(lambda) = cert.lambda.as_ref().filter(|l| l.is_positive()) else {
                return c.fail(Clause::ChainNesting, "fat path needs a positive lambda");
            };
            if cert.midpoints.len() != cert.levels {
                return c.fail(Clause::ChainNesting, "one midpoint per level required");
            }
            if !cert.midpoints.contains(x) {
                return c.fail(Clause::ChainNesting, "witness is not a path midpoint");
            }
            let mut prev: Option<&OpenInterval> = None;
            for (i, m) in cert.midpoints.iter().enumerate() {
                let Some(comp) = levels[i].component_containing(m) else {
                    return c.fail(
                        Clause::ChainNesting,
                        format!("midpoint {m} is not in level {}", i + 1),
                    );
                };
                if &comp.midpoint() != m || &comp.length() < lambda {
                    return c.fail(
                        Clause::ChainNesting,
                        format!("level {} component {comp} is not a fat path node", i + 1),
                    );
                }
                if prev.is_some_and(|p| !p.contains_interval(comp)) {
                    return c.fail(
                        Clause::ChainNesting,
                        format!("path breaks between levels {} and {}", i, i + 1),
                    );
                }
                prev = Some(comp);
            }
        }
    }

    // (2) membership in every retained level
    for (i, ev) in cert.evidence.iter().enumerate() {
        let level = i + 1;
        match levels[i].component_containing(x) {
            None => {
                return c.fail(
                    Clause::LevelMembership { level },
                    format!("{x} is not in V_{level}"),
                )
            }
            Some(comp) if comp != &ev.component => {
                return c.fail(
                    Clause::Evidence { level },
                    format!("recorded component {} but {x} lies in {comp}", ev.component),
                )
            }
            Some(_) => c.report.levels_checked = level,
        }
    }

    // (3) chain membership
    if let Some(pos) = cert.chain.iter().position(|ci| !ci.contains(x)) {
        return c.fail(
            Clause::ChainMembership { position: pos },
            format!("{x} is outside chain element {pos}"),
        );
    }

    // (4) function values at the witness
    let selected = match select_subsequence(seq, &cert.epsilon, cert.max_index) {
        Ok(s) => s,
        Err(e) => return c.fail(Clause::Parameters, e.to_string()),
    };
    for &k in &selected {
        let outcome = tall_support_of_term(seq, k, &cert.epsilon)
            .and_then(|u| Ok((u, seq.term(k)?.eval(x)?)));
        let (support, value) = match outcome {
            Ok(pair) => pair,
            Err(e) => return c.fail(Clause::FunctionValue { index: k }, e.to_string()),
        };
        if value > cert.epsilon {
            c.report.exceed_indices.push(k);
        }
        if support.set.contains(x) {
            if value <= cert.epsilon {
                return c.fail(
                    Clause::FunctionValue { index: k },
                    format!("f_{k}({x}) = {value} is not > {}", cert.epsilon),
                );
            }
            c.report.support_hits.push(k);
        }
    }
    c.report.selected_indices = selected;
    c.report
}

/// Rebuilds `V_1..V_levels` from `seq` and verifies against them.
pub fn verify_against_sequence(
    cert: &WitnessCertificate,
    seq: &FunctionSequence,
) -> VerificationReport {
    let rebuild = || -> Result<Vec<IntervalSet>> {
        let selected = select_subsequence(seq, &cert.epsilon, cert.max_index)?;
        let supports = selected
            .iter()
            .map(|&k| tall_support_of_term(seq, k, &cert.epsilon))
            .collect::<Result<Vec<_>>>()?;
        Ok(build_tail_unions(&supports, cert.levels)?
            .into_iter()
            .map(|u| u.set)
            .collect())
    };
    match rebuild() {
        Ok(levels) => verify_certificate(cert, &levels, seq),
        Err(e) => VerificationReport {
            passed: false,
            failure: Some(VerificationFailure {
                clause: Clause::Parameters,
                detail: e.to_string(),
            }),
            witness: cert.witness.clone(),
            mode: cert.mode,
            levels_checked: 0,
            selected_indices: Vec::new(),
            support_hits: Vec::new(),
            exceed_indices: Vec::new(),
        },
    }
}

/// `V_1 n V_2 n ... n V_N`, exactly. The empty family gives `(0, 1)`.
pub fn exact_intersection_oracle(levels: &[IntervalSet]) -> IntervalSet {
    levels
        .iter()
        .fold(IntervalSet::unit(), |acc, level| acc.intersect(level))
}
