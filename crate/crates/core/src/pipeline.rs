//! End-to-end runs: witness search, convergence tables and epsilon scans.

use log::{debug, info};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extraction::{build_tail_unions, check_epsilon, tall_support_of_term, ExtractionConfig};
use crate::functions::FunctionSequence;
use crate::interval::IntervalSet;
use crate::rat::Rat;
use crate::tree::{
    verify_certificate, DiscardOutcome, IntervalTree, VerificationReport, WitnessCertificate,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessParams {
    pub epsilon: Rat,
    /// Number of tail unions `N`.
    pub depth: usize,
    /// Largest term index `M` consumed.
    pub max_index: usize,
    /// Defaults to `depth`.
    pub horizon: Option<usize>,
    /// Fat-path threshold; defaults to `epsilon / 2`.
    pub lambda: Option<Rat>,
    /// Minimum live length per level after the non-splitting discard;
    /// defaults to `epsilon / 4`.
    pub discard_floor: Option<Rat>,
    pub subsequence: Option<Vec<usize>>,
}

impl WitnessParams {
    pub fn new(epsilon: Rat, depth: usize, max_index: usize) -> Self {
        WitnessParams {
            epsilon,
            depth,
            max_index,
            horizon: None,
            lambda: None,
            discard_floor: None,
            subsequence: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(self.depth)
    }

    pub fn lambda(&self) -> Rat {
        self.lambda
            .clone()
            .unwrap_or_else(|| &self.epsilon / &Rat::from_int(2))
    }

    pub fn discard_floor(&self) -> Rat {
        self.discard_floor
            .clone()
            .unwrap_or_else(|| &self.epsilon / &Rat::from_int(4))
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(&self.epsilon)?;
        if self.depth == 0 || self.depth > self.max_index {
            return Err(Error::InvalidParams(format!(
                "need 1 <= depth ({}) <= max_index ({})",
                self.depth, self.max_index
            )));
        }
        let h = self.horizon();
        if h == 0 || h > self.depth {
            return Err(Error::InvalidHorizon {
                horizon: h,
                depth: self.depth,
            });
        }
        if !self.lambda().is_positive() {
            return Err(Error::InvalidParams("lambda must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisUnmet {
    pub epsilon: Rat,
    pub max_index: usize,
    pub selected: Vec<usize>,
    pub required: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct WitnessRun {
    pub certificate: WitnessCertificate,
    pub report: VerificationReport,
    pub levels: Vec<IntervalSet>,
    pub selected: Vec<usize>,
    pub tree: IntervalTree,
    pub pruned_terminating: usize,
    pub discard: DiscardOutcome,
    /// Nodes left without horizon descendants by the discard, then pruned.
    pub pruned_after_discard: usize,
    /// Why nested extraction gave way to the fat path, if it did.
    pub nested_failure: Option<String>,
}

#[derive(Clone, Debug)]
pub enum WitnessOutcome {
    Verified(Box<WitnessRun>),
    HypothesisUnmet(HypothesisUnmet),
}

/// select -> tall supports -> tail unions -> tree -> pruning -> witness
/// (nested, else fat path) -> self-verification.
pub fn run_witness(seq: &FunctionSequence, params: &WitnessParams) -> Result<WitnessOutcome> {
    params.validate()?;
    let mut cfg = ExtractionConfig::new(params.epsilon.clone(), params.max_index)?;
    if let Some(sub) = &params.subsequence {
        cfg = cfg.with_subsequence(sub.clone())?;
    }
    let selected = cfg.select(seq)?;
    info!(
        "{} indices <= {} have integral > 2*{}",
        selected.len(),
        params.max_index,
        params.epsilon
    );
    if selected.len() < params.depth {
        return Ok(WitnessOutcome::HypothesisUnmet(HypothesisUnmet {
            epsilon: params.epsilon.clone(),
            max_index: params.max_index,
            required: params.depth,
            message: format!(
                "hypothesis \"integral of f_n > 2*eps for every n\" fails: only {} of the indices \
                 <= {} satisfy it at eps = {}, fewer than the {} levels requested",
                selected.len(),
                params.max_index,
                params.epsilon,
                params.depth
            ),
            selected,
        }));
    }

    let supports = selected
        .iter()
        .map(|&n| tall_support_of_term(seq, n, &params.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<IntervalSet> = build_tail_unions(&supports, params.depth)?
        .into_iter()
        .map(|u| u.set)
        .collect();

    let horizon = params.horizon();
    let mut tree = IntervalTree::build(levels.clone(), &params.epsilon)?;
    let pruned_terminating = tree.prune_terminating(horizon)?.pruned;
    let discard = tree.discard_nonsplitting(horizon, &params.discard_floor())?;
    // Discarding O_n can strand splitting nodes whose horizon descendants
    // all ran through O nodes; restore "no terminating nodes".
    let pruned_after_discard = match discard {
        DiscardOutcome::Applied { .. } => tree.prune_terminating(horizon)?.pruned,
        DiscardOutcome::BoundNotWitnessed { .. } => 0,
    };
    debug!(
        "pruned {pruned_terminating} terminating nodes; discard: {discard:?}; \
         {pruned_after_discard} stranded nodes pruned"
    );

    let spec_hash = seq.spec_hash();
    let (certificate, nested_failure) = match tree.extract_witness(horizon) {
        Ok(w) => (
            WitnessCertificate::from_nested(&tree, &w, params.max_index, spec_hash)?,
            None,
        ),
        Err(e @ Error::InsufficientSplitting { .. }) => {
            let lambda = params.lambda();
            info!("{e}; trying a fat path at lambda = {lambda}");
            let fp = tree.detect_fat_path(&lambda).ok_or_else(|| {
                Error::Postcondition(format!(
                    "{e}, and no path keeps length >= {lambda} down to depth {}; \
                     raise the horizon or lower lambda",
                    tree.depth()
                ))
            })?;
            (
                WitnessCertificate::from_fat_path(
                    &tree,
                    &fp,
                    horizon,
                    params.max_index,
                    spec_hash,
                )?,
                Some(e.to_string()),
            )
        }
        Err(e) => return Err(e),
    };

    let report = verify_certificate(&certificate, &levels, seq);
    if !report.passed {
        return Err(Error::Postcondition(format!(
            "self-verification failed: {:?}",
            report.failure
        )));
    }
    Ok(WitnessOutcome::Verified(Box::new(WitnessRun {
        certificate,
        report,
        levels,
        selected,
        tree,
        pruned_terminating,
        discard,
        pruned_after_discard,
        nested_failure,
    })))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub integral: Rat,
    pub probe_values: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeSummary {
    pub x: Rat,
    /// Indices with `f_n(x) > eps`.
    pub exceed_count: usize,
    /// Some `n` past the midpoint of the range has `f_n(x) > eps`, and at
    /// least two do overall.
    pub recurrent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceReport {
    pub max_index: usize,
    pub epsilon: Rat,
    pub probes: Vec<Rat>,
    pub rows: Vec<ConvergenceRow>,
    /// Largest integral over the second half of the range is at most half
    /// the largest over the first half.
    pub integrals_trending_to_zero: bool,
    pub probe_summaries: Vec<ProbeSummary>,
    pub pointwise_nonconvergence_flagged: bool,
}

/// Tabulates exact integrals and probe values for `n = 1..=max_index`.
pub fn convergence_table(
    seq: &FunctionSequence,
    max_index: usize,
    probes: &[Rat],
    epsilon: &Rat,
) -> Result<ConvergenceReport> {
    if max_index == 0 {
        return Err(Error::InvalidParams("max_index must be positive".into()));
    }
    if !epsilon.is_positive() {
        return Err(Error::InvalidEpsilon(epsilon.clone()));
    }
    let terms = seq.terms(max_index)?;
    let rows = terms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            Ok(ConvergenceRow {
                n: i + 1,
                integral: f.integral(),
                probe_values: probes.iter().map(|x| f.eval(x)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let half = rows.len().div_ceil(2);
    let sup = |rs: &[ConvergenceRow]| rs.iter().map(|r| r.integral.clone()).max();
    let integrals_trending_to_zero = match (sup(&rows[..half]), sup(&rows[half..])) {
        (Some(head), Some(tail)) => tail * Rat::from_int(2) <= head,
        _ => false,
    };
    let probe_summaries: Vec<ProbeSummary> = probes
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let hits: Vec<usize> = rows
                .iter()
                .filter(|r| &r.probe_values[j] > epsilon)
                .map(|r| r.n)
                .collect();
            ProbeSummary {
                x: x.clone(),
                exceed_count: hits.len(),
                recurrent: hits.len() >= 2 && hits.iter().any(|&n| n > half),
            }
        })
        .collect();
    let pointwise_nonconvergence_flagged = probe_summaries.iter().any(|p| p.recurrent)
        || (!integrals_trending_to_zero && rows.len() >= 2);
    Ok(ConvergenceReport {
        max_index: rows.len(),
        epsilon: epsilon.clone(),
        probes: probes.to_vec(),
        rows,
        integrals_trending_to_zero,
        probe_summaries,
        pointwise_nonconvergence_flagged,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStatus {
    Verified,
    HypothesisUnmet,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanRow {
    pub epsilon: Rat,
    pub survivors: usize,
    pub status: ScanStatus,
    pub witness: Option<Rat>,
    pub detail: Option<String>,
}

/// Runs the witness pipeline once per candidate epsilon.
pub fn scan_epsilon(
    seq: &FunctionSequence,
    grid: &[Rat],
    depth: usize,
    max_index: usize,
    horizon: Option<usize>,
) -> Result<Vec<ScanRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty epsilon grid".into()));
    }
    for eps in grid {
        check_epsilon(eps)?;
    }
    // Grid points are independent runs; each pipeline stays single-threaded.
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|eps| scope.spawn(move || scan_one(seq, eps, depth, max_index, horizon)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    })
}

fn scan_one(
    seq: &FunctionSequence,
    eps: &Rat,
    depth: usize,
    max_index: usize,
    horizon: Option<usize>,
) -> Result<ScanRow> {
    let survivors = crate::extraction::select_subsequence(seq, eps, max_index)?.len();
    let mut params = WitnessParams::new(eps.clone(), depth, max_index);
    params.horizon = horizon;
    let row = match run_witness(seq, &params) {
        Ok(WitnessOutcome::Verified(run)) => ScanRow {
            epsilon: eps.clone(),
            survivors,
            status: ScanStatus::Verified,
            witness: Some(run.certificate.witness.clone()),
            detail: None,
        },
        Ok(WitnessOutcome::HypothesisUnmet(h)) => ScanRow {
            epsilon: eps.clone(),
            survivors,
            status: ScanStatus::HypothesisUnmet,
            witness: None,
            detail: Some(h.message),
        },
        Err(e) => ScanRow {
            epsilon: eps.clone(),
            survivors,
            status: ScanStatus::Error,
            witness: None,
            detail: Some(e.to_string()),
        },
    };
    Ok(row)
}
