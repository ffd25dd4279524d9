//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The shared corpus is 500 random instances from a fixed seed base with
//! small models (at most 4 states), shallow sentences (height at most 3,
//! at most 2 fixpoints) and finite clock bounds in 1..=5, so the
//! brute-force oracle stays feasible.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mugame::formula::{parse_formula, FixKind, Formula, LabelSym};
use mugame::game::{gts_truth, GameSpec, Player, StrategySource};
use mugame::harness::{
    random_colliding_sentence, random_instance, random_operator_body, random_sentence,
    run_corpus, InstanceParams,
};
use mugame::kripke::{KripkeModel, StateId, StateSet};
use mugame::ordinal::Ordinal;
use mugame::semantics::{
    approximant_ladder, eval_bounded, eval_standard, operator_apply, Assignment,
};

const CORPUS_SEED: u64 = 20260810;
const CORPUS_SIZE: usize = 500;

struct Corpus {
    report: mugame::harness::CorpusReport,
    elapsed: Duration,
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let params = InstanceParams::default();
        let start = Instant::now();
        let report = run_corpus(CORPUS_SEED, CORPUS_SIZE, &params);
        Corpus {
            report,
            elapsed: start.elapsed(),
        }
    })
}

fn verdict(criterion: u32, name: &str, ok: bool, details: &str) {
    println!(
        "ACCEPTANCE {criterion} ({name}): {} — {details}",
        if ok { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_theorem_equivalence() {
    let c = corpus();
    let diff_failures: Vec<u64> = c
        .report
        .failures
        .iter()
        .filter(|f| !f.diff.pass)
        .map(|f| f.seed)
        .collect();
    let ok = diff_failures.is_empty()
        && c.report.total == CORPUS_SIZE
        && c.elapsed <= Duration::from_secs(300);
    verdict(
        1,
        "theorem equivalence",
        ok,
        &format!(
            "{}/{} instances with exact per-state agreement between game and \
             bounded compositional truth, corpus time {:.1?}",
            c.report.total - diff_failures.len(),
            c.report.total,
            c.elapsed
        ),
    );
    assert!(
        diff_failures.is_empty(),
        "differential mismatches at seeds {diff_failures:?}"
    );
    assert_eq!(c.report.total, CORPUS_SIZE);
    assert!(
        c.elapsed <= Duration::from_secs(300),
        "corpus took {:?}, budget is 5 minutes",
        c.elapsed
    );
}

#[test]
fn criterion_2_standard_recovery() {
    let c = corpus();
    let recovery_failures: Vec<u64> = c
        .report
        .failures
        .iter()
        .filter(|f| !f.recovery.pass)
        .map(|f| f.seed)
        .collect();
    let ok = recovery_failures.is_empty();
    verdict(
        2,
        "standard recovery",
        ok,
        &format!(
            "{}/{} instances where game and bounded truth at bound |W|+1 \
             equal standard truth at every state",
            c.report.total - recovery_failures.len(),
            c.report.total
        ),
    );
    assert!(
        recovery_failures.is_empty(),
        "recovery mismatches at seeds {recovery_failures:?}"
    );
}

const M3: &str = r#"{
    "states": ["w0", "w1", "w2"],
    "edges": [["w0", "w1"], ["w1", "w2"]],
    "valuation": {"p": ["w2"]}
}"#;
const M3_ALL_P: &str = r#"{
    "states": ["w0", "w1", "w2"],
    "edges": [["w0", "w1"], ["w1", "w2"]],
    "valuation": {"p": ["w0", "w1", "w2"]}
}"#;

fn truth_sets(m: &KripkeModel, f: &Formula, gamma: u64) -> (Vec<String>, Vec<String>) {
    let bound = Ordinal::finite(gamma);
    let bounded = eval_bounded(m, &f.to_normal_form(), &Assignment::empty(), &bound).unwrap();
    let gts: Vec<String> = m
        .states()
        .filter(|&w| gts_truth(m, w, f, &bound).unwrap())
        .map(|w| m.name(w).to_string())
        .collect();
    (gts, m.set_names(&bounded))
}

#[test]
fn criterion_3_golden_values() {
    let m = KripkeModel::load(M3).unwrap();
    let mp = KripkeModel::load(M3_ALL_P).unwrap();
    let reach = parse_formula("mu X.(p|<>X)").unwrap();
    let persist = parse_formula("nu X.(p & <>X)").unwrap();
    let mu_x = parse_formula("mu X. X").unwrap();
    let nu_x = parse_formula("nu X. X").unwrap();
    let empty: [&str; 0] = [];
    let all = ["w0", "w1", "w2"];

    let mut mismatches: Vec<String> = Vec::new();
    fn check(
        mismatches: &mut Vec<String>,
        label: &str,
        got: (Vec<String>, Vec<String>),
        want: &[&str],
    ) {
        let want: Vec<String> = want.iter().map(|s| s.to_string()).collect();
        if got.0 != want || got.1 != want {
            mismatches.push(format!(
                "[{label}]: gts={:?} comp={:?} want={want:?}",
                got.0, got.1
            ));
        }
    }

    check(&mut mismatches, "reach @2", truth_sets(&m, &reach, 2), &["w1", "w2"]);
    check(&mut mismatches, "reach @3", truth_sets(&m, &reach, 3), &all);
    check(&mut mismatches, "persist @2", truth_sets(&mp, &persist, 2), &["w0"]);
    if !eval_standard(&mp, &persist, &Assignment::empty()).is_empty() {
        mismatches.push("standard persist should be empty".to_string());
    }
    for gamma in 1..=4 {
        check(&mut mismatches, &format!("mu X. X @{gamma}"), truth_sets(&m, &mu_x, gamma), &empty);
        check(&mut mismatches, &format!("nu X. X @{gamma}"), truth_sets(&m, &nu_x, gamma), &all);
    }
    if !eval_standard(&m, &mu_x, &Assignment::empty()).is_empty() {
        mismatches.push("standard mu X. X should be empty".to_string());
    }
    if eval_standard(&m, &nu_x, &Assignment::empty()) != StateSet::full(3) {
        mismatches.push("standard nu X. X should be the full set".to_string());
    }

    let ok = mismatches.is_empty();
    verdict(
        3,
        "golden values",
        ok,
        "hand-derived truth sets on the three-state chain match exactly under both semantics",
    );
    assert!(ok, "golden mismatches: {mismatches:#?}");
}

#[test]
fn criterion_4_progress_and_finiteness() {
    // The engine asserts the strict lexicographic decrease on every move it
    // generates, in the solver, the verifier, the brute-force oracle and the
    // play loop; a violation aborts the corpus. Here every corpus instance
    // is additionally played out to its end with the solved strategies.
    let c = corpus();
    let params = InstanceParams::default();
    let mut plays = 0usize;
    let mut longest = 0usize;
    for i in 0..CORPUS_SIZE {
        let seed = CORPUS_SEED.wrapping_add(i as u64);
        let (model, formula, gamma, w0) = random_instance(seed, &params);
        let g = GameSpec::new(&model, w0, &formula, &Ordinal::finite(gamma)).unwrap();
        let solved = g.solve();
        let mut e = StrategySource::new(solved.strategy(Player::Eloise));
        let mut a = StrategySource::new(solved.strategy(Player::Abelard));
        let t = g.play(&mut e, &mut a).expect("strategies cover every reachable choice");
        assert_eq!(t.winner, solved.winner(), "seed {seed}");
        assert!(
            t.length() <= solved.stats.max_play_length as usize,
            "seed {seed}: play longer than the solver's bound"
        );
        longest = longest.max(t.length());
        plays += 1;
    }
    let ok = plays == CORPUS_SIZE && c.report.total == CORPUS_SIZE;
    verdict(
        4,
        "progress and finiteness",
        ok,
        &format!(
            "progress measure asserted on every generated move across the corpus; \
             {plays} transcripts terminated, longest play {longest} moves"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_determinacy_and_strategies() {
    let c = corpus();
    let strategy_failures: Vec<u64> = c
        .report
        .failures
        .iter()
        .filter(|f| !f.strategy_pass)
        .map(|f| f.seed)
        .collect();
    // Spot-check determinacy bookkeeping on a sample: every reachable key
    // has exactly one winner and the declared winner's strategy verifies.
    let params = InstanceParams::default();
    let mut keys_total = 0usize;
    for i in 0..50 {
        let seed = CORPUS_SEED.wrapping_add(i as u64);
        let (model, formula, gamma, w0) = random_instance(seed, &params);
        let g = GameSpec::new(&model, w0, &formula, &Ordinal::finite(gamma)).unwrap();
        let solved = g.solve();
        for key in solved.keys() {
            assert!(solved.winner_at(key).is_some());
            keys_total += 1;
        }
        let winner = solved.winner();
        let report = g.verify_strategy(winner, solved.strategy(winner));
        assert!(report.ok, "seed {seed}: {:?}", report.failure);
        assert!(report.failure.is_none());
    }
    let ok = strategy_failures.is_empty();
    verdict(
        5,
        "determinacy and strategies",
        ok,
        &format!(
            "winner strategies verified with zero counterexample plays on all \
             {} instances (and one winner per key across {keys_total} sampled keys)",
            c.report.total
        ),
    );
    assert!(
        strategy_failures.is_empty(),
        "strategy verification failed at seeds {strategy_failures:?}"
    );
}

#[test]
fn criterion_6_oracle_equivalence() {
    let c = corpus();
    let mismatches: Vec<u64> = c
        .report
        .failures
        .iter()
        .filter(|f| f.oracle.is_mismatch())
        .map(|f| f.seed)
        .collect();
    let ok = mismatches.is_empty() && c.report.oracle_checked > 0;
    verdict(
        6,
        "oracle equivalence",
        ok,
        &format!(
            "memoized solver agreed with unmemoized minimax on {} instances \
             within the {}-node budget ({} skipped over budget)",
            c.report.oracle_checked,
            mugame::harness::NAIVE_BUDGET,
            c.report.oracle_skipped
        ),
    );
    assert!(mismatches.is_empty(), "oracle mismatches at seeds {mismatches:?}");
    assert!(c.report.oracle_checked > 0);
}

#[test]
fn criterion_7_ladder_invariants() {
    let params = InstanceParams::default();
    let x = LabelSym::new("X").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1adde5);
    let mut ladders = 0usize;
    let mut pairs = 0usize;

    while ladders < 100 || pairs < 100 {
        let seed: u64 = rng.gen();
        let model = KripkeModel::random(
            rng.gen(),
            rng.gen_range(1..=4),
            0.4,
            &["p".to_string(), "q".to_string()],
        )
        .unwrap();
        let body = random_operator_body(seed, &params, &x);
        let gamma = Ordinal::finite(rng.gen_range(1..=5));
        let kind = if rng.gen_bool(0.5) { FixKind::Mu } else { FixKind::Nu };
        let s = Assignment::empty();
        let n = model.state_count();

        if ladders < 100 {
            let ladder = approximant_ladder(&model, &body, &x, &s, &gamma, kind).unwrap();
            assert!(
                ladder.stabilization_index() <= n,
                "ladder for {body} must stabilize within |W| = {n} steps"
            );
            for pair in ladder.stages().windows(2) {
                match kind {
                    FixKind::Mu => assert!(pair[0].is_subset(&pair[1]), "mu-ladder not increasing"),
                    FixKind::Nu => assert!(pair[1].is_subset(&pair[0]), "nu-ladder not decreasing"),
                }
            }
            // The recorded endpoint is a fixpoint of one more application.
            let again = operator_apply(&model, &body, &x, &s, &gamma, ladder.fixpoint()).unwrap();
            assert_eq!(&again, ladder.fixpoint());
            ladders += 1;
        }

        if pairs < 100 {
            // Random pair A ⊆ A'.
            let mut big = StateSet::empty(n);
            for w in 0..n {
                if rng.gen_bool(0.5) {
                    big.insert(StateId(w as u32));
                }
            }
            let mut small = StateSet::empty(n);
            for w in big.iter() {
                if rng.gen_bool(0.6) {
                    small.insert(w);
                }
            }
            assert!(small.is_subset(&big));
            let f_small = operator_apply(&model, &body, &x, &s, &gamma, &small).unwrap();
            let f_big = operator_apply(&model, &body, &x, &s, &gamma, &big).unwrap();
            assert!(
                f_small.is_subset(&f_big),
                "operator of {body} not monotone: F({small:?}) ⊄ F({big:?})"
            );
            pairs += 1;
        }
    }

    verdict(
        7,
        "ladder invariants",
        true,
        &format!(
            "{ladders} approximant chains monotone and stabilizing within |W| steps; \
             operator monotone on {pairs} random subset pairs"
        ),
    );
}

#[test]
fn criterion_8_normal_form_lemma() {
    let params = InstanceParams {
        max_depth: 4,
        max_fixpoints: 3,
        ..InstanceParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0111de);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 100 {
        attempts += 1;
        assert!(attempts < 10_000, "collision generator starved");
        let f = random_colliding_sentence(rng.gen(), &params);
        if f.is_normal_form() {
            continue; // only deliberately colliding sentences count
        }
        let nf = f.to_normal_form();
        assert!(nf.is_normal_form());
        let model = KripkeModel::random(
            rng.gen(),
            rng.gen_range(1..=4),
            0.4,
            &["p".to_string(), "q".to_string()],
        )
        .unwrap();
        let s = Assignment::empty();
        assert_eq!(
            eval_standard(&model, &f, &s),
            eval_standard(&model, &nf, &s),
            "standard truth changed by normalization of {f}"
        );
        let mut gammas: Vec<u64> = vec![1, 2, 3];
        gammas.push(model.state_count() as u64 + 1);
        for gamma in gammas {
            let bound = Ordinal::finite(gamma);
            assert_eq!(
                eval_bounded(&model, &f, &s, &bound).unwrap(),
                eval_bounded(&model, &nf, &s, &bound).unwrap(),
                "bounded truth changed by normalization of {f} at {gamma}"
            );
            for w in model.states() {
                assert_eq!(
                    gts_truth(&model, w, &f, &bound).unwrap(),
                    gts_truth(&model, w, &nf, &bound).unwrap(),
                    "game truth changed by normalization of {f} at {gamma}"
                );
            }
        }
        checked += 1;
    }
    verdict(
        8,
        "normal-form invariance",
        true,
        &format!(
            "{checked} label-colliding sentences keep their truth sets under \
             renaming, under both semantics, at every tested bound"
        ),
    );
}

#[test]
fn criterion_9_front_end_round_trips() {
    let params = InstanceParams::default();
    let deep = InstanceParams {
        max_depth: 5,
        max_fixpoints: 4,
        prop_count: 3,
        ..InstanceParams::default()
    };
    let x = LabelSym::new("X").unwrap();
    let mut formulas = 0usize;
    for seed in 0..400u64 {
        for f in [
            random_sentence(seed, &params),
            random_sentence(seed, &deep),
            random_colliding_sentence(seed, &deep),
            // Open formulas exercise bare labels in the printer.
            random_operator_body(seed, &params, &x),
        ] {
            let text = f.to_string();
            let back = parse_formula(&text)
                .unwrap_or_else(|e| panic!("reparse of {text:?} failed: {e}"));
            assert_eq!(back, f, "round trip changed {text:?}");
            formulas += 1;
        }
    }

    let mut models = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a5e);
    for _ in 0..120 {
        let model = KripkeModel::random(
            rng.gen(),
            rng.gen_range(1..=12),
            rng.gen_range(0.0..=1.0),
            &["p".to_string(), "q".to_string(), "r".to_string()],
        )
        .unwrap();
        let back = KripkeModel::load(&model.save()).unwrap();
        assert_eq!(back, model);
        models += 1;
    }

    verdict(
        9,
        "front-end round trips",
        formulas >= 1000 && models >= 100,
        &format!("{formulas} formulas and {models} models round-tripped exactly"),
    );
    assert!(formulas >= 1000);
    assert!(models >= 100);
}
