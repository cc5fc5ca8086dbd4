//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::Rng;

use arzela_cli::{cmd_check, cmd_witness, CheckArgs, InputArgs, OutputArgs, WitnessArgs};
use arzela_core::extraction::truncate_levels;
use arzela_core::testkit::{
    components_inside, epsilon_for, family_levels, live_pairs, random_nested_levels,
    random_stream_levels, random_unit_step, reachable_nodes, rng, DyadicStream, GridIntervals,
};
use arzela_core::tree::WitnessMode;
use arzela_core::{
    build_tree, exact_intersection_oracle, select_subsequence, tall_support, Family,
    FunctionSequence, IntervalSet, Rat, WitnessOutcome,
};

const SEED: u64 = 0x5eed_a12e1a;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || {
        format!("{what} took {took:?}, limit {limit:?}")
    })
}

/// Tall supports of random unit-form step functions with integral > 2 eps.
fn tall_support_guarantee() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED ^ 1);
    let grid = [Rat::new(1, 16), Rat::new(1, 8), Rat::new(1, 4)];
    let cases = 1000;
    for case in 0..cases {
        let eps = grid[r.gen_range(0..3)].clone();
        let f = random_unit_step(&mut r, &eps);
        let u = tall_support(&f, &eps)
            .map_err(|e| format!("case {case}: {e}"))?
            .set;
        ensure(u.total_length() >= eps, || {
            format!("case {case}: length {} < eps {eps}", u.total_length())
        })?;
        // Minimum of f over U: every piece meeting U, and every breakpoint in U.
        let bps = f.breakpoints();
        for (i, v) in f.values().iter().enumerate() {
            let piece = IntervalSet::from_pairs([(bps[i].clone(), bps[i + 1].clone())]).unwrap();
            if !piece.intersect(&u).is_empty() {
                ensure(v > &eps, || format!("case {case}: value {v} <= eps on U"))?;
            }
        }
        for b in bps {
            if u.contains(b) {
                let v = f.eval(b).unwrap();
                ensure(v > eps, || format!("case {case}: f({b}) = {v} <= eps on U"))?;
            }
        }
    }
    within(start, Duration::from_secs(10), "tall-support suite")?;
    Ok(format!(
        "{cases} functions, 0 failures, {:?}",
        start.elapsed()
    ))
}

/// Truncation of nested enumerated levels to eps / 2^(n+1).
fn truncation_budget() -> Outcome {
    let mut r = rng(SEED ^ 2);
    let cases = 500;
    for case in 0..cases {
        let count = r.gen_range(1..=8);
        let levels = random_stream_levels(&mut r, count);
        let min_limit = levels.iter().map(DyadicStream::limit_length).min().unwrap();
        let eps = [
            Rat::new(1, 4),
            Rat::new(1, 8),
            Rat::new(1, 16),
            Rat::new(1, 32),
        ]
        .into_iter()
        .find(|e| e <= &min_limit)
        .ok_or_else(|| format!("case {case}: limit {min_limit} below every eps"))?;
        let inputs = levels.iter().map(|s| (s.iter(), move |k| s.tail_bound(k)));
        let out = truncate_levels(inputs, &eps).map_err(|e| format!("case {case}: {e}"))?;
        let half = &eps / &Rat::from_int(2);
        let mut losses = Rat::zero();
        for (n, (t, s)) in out.iter().zip(&levels).enumerate() {
            let limit = s.limit_length();
            let budget = &eps * &Rat::inv_pow2(n as u32 + 2);
            let kept = t.prefix.total_length();
            ensure(kept >= &limit - &budget, || {
                format!("case {case} level {}: {kept} < {limit} - {budget}", n + 1)
            })?;
            losses = losses + (&limit - &kept);
            ensure(t.set.total_length() >= half, || {
                format!(
                    "case {case} level {}: nested length {} < eps/2",
                    n + 1,
                    t.set.total_length()
                )
            })?;
        }
        ensure(losses <= half, || {
            format!("case {case}: total loss {losses} > eps/2")
        })?;
    }
    Ok(format!("{cases} nested families, 0 failures"))
}

/// Every witness returned lies in the exact intersection of the levels.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED ^ 3);
    let cases = 500;
    let (mut nested, mut fat) = (0, 0);
    for case in 0..cases {
        let depth = r.gen_range(10..=50);
        let (levels, eps) = if case % 2 == 0 {
            let levels = random_nested_levels(&mut r, depth);
            let eps = epsilon_for(&levels);
            (levels, eps)
        } else {
            loop {
                let family = Family::ALL[r.gen_range(0..4)];
                let eps =
                    [Rat::new(1, 128), Rat::new(1, 64), Rat::new(1, 32)][r.gen_range(0..3)].clone();
                let height =
                    [Rat::one(), Rat::new(3, 4), Rat::new(1, 2)][r.gen_range(0..3)].clone();
                if let Some((_, levels)) = family_levels(family, height, &eps, depth, 64) {
                    break (levels, eps);
                }
            }
        };
        let oracle = exact_intersection_oracle(&levels);
        let mut tree = build_tree(levels, &eps).map_err(|e| format!("case {case}: {e}"))?;
        tree.prune_terminating(depth)
            .map_err(|e| format!("case {case}: {e}"))?;
        if let Ok(w) = tree.extract_witness(depth) {
            nested += 1;
            ensure(oracle.contains(&w.witness), || {
                format!(
                    "case {case}: nested witness {} outside the intersection",
                    w.witness
                )
            })?;
        }
        if let Some(p) = tree.detect_fat_path(&(&eps / &Rat::from_int(2))) {
            fat += 1;
            ensure(oracle.contains(&p.witness), || {
                format!(
                    "case {case}: fat-path witness {} outside the intersection",
                    p.witness
                )
            })?;
        }
    }
    ensure(nested > 0 && fat > 0, || {
        format!("degenerate run: {nested} nested, {fat} fat-path witnesses")
    })?;
    within(start, Duration::from_secs(30), "oracle suite")?;
    Ok(format!(
        "{cases} families, {nested} nested + {fat} fat-path witnesses, 100% agreement, {:?}",
        start.elapsed()
    ))
}

/// Typewriter at eps = 1/4 with at least 12 surviving indices.
fn end_to_end_contrapositive() -> Outcome {
    let eps = Rat::new(1, 4);
    let seq = FunctionSequence::family(Family::SlidingTypewriter);
    const SEARCH: usize = 4096;
    // Survivors among 1..=M are the selected indices <= M.
    let selected = select_subsequence(&seq, &eps, SEARCH).map_err(|e| e.to_string())?;
    let chosen = (selected.len() >= 12).then(|| selected[11]);
    let Some(m) = chosen else {
        return Err(format!(
            "no M <= {SEARCH} leaves 12 indices with integral > 1/2 (survivors: {selected:?})"
        ));
    };
    let args = WitnessArgs::new(
        InputArgs::family(Family::SlidingTypewriter),
        eps.clone(),
        12,
        m,
    );
    match cmd_witness(&args).map_err(|e| e.to_string())? {
        WitnessOutcome::HypothesisUnmet(h) => Err(format!("hypothesis unmet: {}", h.message)),
        WitnessOutcome::Verified(run) => {
            let x = &run.certificate.witness;
            ensure(run.report.passed, || "certificate did not verify".into())?;
            let hits: Vec<usize> = run
                .selected
                .iter()
                .copied()
                .filter(|&k| seq.term(k).unwrap().eval(x).unwrap() > eps)
                .collect();
            ensure(hits.len() >= 3, || {
                format!("witness {x}: only {} indices exceed 1/4", hits.len())
            })?;
            Ok(format!("M = {m}, witness {x}, indices {hits:?}"))
        }
    }
}

/// Shrinking bump: exact integrals 1/n, and the witness run exits 2.
fn positive_case_sanity() -> Outcome {
    let start = Instant::now();
    let check = CheckArgs {
        input: InputArgs::family(Family::ShrinkingBump),
        max_index: 100,
        probes: vec![],
        eps: Rat::new(1, 8),
        output: OutputArgs::default(),
    };
    let report = cmd_check(&check).map_err(|e| e.to_string())?;
    ensure(report.rows.len() == 100, || {
        format!("{} rows", report.rows.len())
    })?;
    for row in &report.rows {
        ensure(row.integral == Rat::new(1, row.n as i64), || {
            format!("integral of f_{} is {}", row.n, row.integral)
        })?;
    }
    let status = Process::new(env!("CARGO_BIN_EXE_arzela"))
        .args([
            "witness",
            "--family",
            "shrinking-bump",
            "--eps",
            "1/8",
            "--max-index",
            "100",
        ])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.code() == Some(2), || {
        format!("witness exit status {status}")
    })?;
    within(start, Duration::from_secs(1), "check + witness")?;
    Ok(format!(
        "integrals 1/n for n <= 100, witness exit 2, {:?}",
        start.elapsed()
    ))
}

/// Fat-path shrinker at lambda = 1/2, depth 50.
fn fat_path_branch() -> Outcome {
    let eps = Rat::new(1, 8);
    let lambda = Rat::new(1, 2);
    let mut args = WitnessArgs::new(
        InputArgs::family(Family::FatPathShrinker),
        eps.clone(),
        50,
        50,
    );
    args.lambda = Some(lambda.clone());
    let run = match cmd_witness(&args).map_err(|e| e.to_string())? {
        WitnessOutcome::Verified(run) => run,
        WitnessOutcome::HypothesisUnmet(h) => return Err(h.message),
    };
    ensure(run.certificate.mode == WitnessMode::FatPathCluster, || {
        format!("mode {:?}", run.certificate.mode)
    })?;
    ensure(run.tree.detect_fat_path(&lambda).is_some(), || {
        "no fat path at lambda 1/2".into()
    })?;
    let (_, levels) = family_levels(Family::FatPathShrinker, Rat::one(), &eps, 50, 50)
        .ok_or("could not rebuild levels")?;
    let x = &run.certificate.witness;
    for (n, level) in levels.iter().enumerate() {
        ensure(level.contains(x), || {
            format!("witness {x} not in V_{}", n + 1)
        })?;
    }
    Ok(format!("witness {x} in all 50 levels"))
}

/// Terminating pruning and splitting classification against brute force.
fn pruning_correctness() -> Outcome {
    let mut r = rng(SEED ^ 7);
    let cases = 200;
    for case in 0..cases {
        let depth = r.gen_range(2..=20);
        let horizon = r.gen_range(1..=depth);
        let levels = random_nested_levels(&mut r, depth);
        let mut tree =
            build_tree(levels.clone(), &epsilon_for(&levels)).map_err(|e| e.to_string())?;
        tree.prune_terminating(horizon).map_err(|e| e.to_string())?;
        ensure(
            live_pairs(&tree, horizon) == reachable_nodes(&levels, horizon),
            || format!("case {case}: live set differs from reachability"),
        )?;
        for class in tree
            .classify_splitting(horizon)
            .map_err(|e| e.to_string())?
        {
            for id in tree.live_nodes_at(class.depth) {
                let brute = components_inside(&levels, horizon, &tree.node(id).interval);
                let splitting = class.splitting.contains(&id);
                let chain = class.single_chain.contains(&id);
                ensure(splitting == (brute >= 2) && chain == (brute < 2), || {
                    format!("case {case}: node {id:?} has {brute} horizon descendants")
                })?;
            }
        }
    }
    Ok(format!("{cases} trees, 100% agreement"))
}

/// Inclusion-exclusion and grid-oracle membership.
fn interval_kernel() -> Outcome {
    let mut r = rng(SEED ^ 8);
    let pairs = 10_000;
    for case in 0..pairs {
        let da = [1000, 997, 360, 64][r.gen_range(0..4)];
        let db = [1000, 991, 120, 81][r.gen_range(0..4)];
        let a = GridIntervals::random(&mut r, da, 6).normalized();
        let b = GridIntervals::random(&mut r, db, 6).normalized();
        let lhs = a.union(&b).total_length() + a.intersect(&b).total_length();
        let rhs = a.total_length() + b.total_length();
        ensure(lhs == rhs, || format!("pair {case}: {lhs} != {rhs}"))?;
    }
    let sets = 1000;
    for case in 0..sets {
        let den = [1000, 997, 250, 12][r.gen_range(0..4)];
        let g = GridIntervals::random(&mut r, den, 8);
        let s = g.normalized();
        for k in 0..=1000 {
            ensure(s.contains(&Rat::new(k, 1000)) == g.member(k, 1000), || {
                format!("set {case}: membership of {k}/1000 disagrees")
            })?;
        }
    }
    Ok(format!(
        "{pairs} pairs exact, {sets} sets x 1001 grid points agree"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 tall-support guarantee", tall_support_guarantee),
        ("2 truncation budget", truncation_budget),
        ("3 oracle equivalence", oracle_equivalence),
        ("4 end-to-end contrapositive", end_to_end_contrapositive),
        ("5 positive-case sanity", positive_case_sanity),
        ("6 fat-path branch", fat_path_branch),
        ("7 pruning correctness", pruning_correctness),
        ("8 interval-algebra kernel", interval_kernel),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(format!("panicked: {e:?}")));
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
