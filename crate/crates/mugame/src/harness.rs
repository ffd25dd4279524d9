//! Differential testing: random instance generation, cross-checks between
//! the game and compositional engines, a brute-force game solver as an
//! independent oracle, and greedy shrinking of failing instances.
//!
//! Instances are independent, so the corpus runner is data-parallel when the
//! `parallel` feature is enabled; [`run_corpus_sequential`] is always
//! available as the fallback path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{FixKind, Formula, LabelSym};
use crate::game::{gts_truth, AnnouncePolicy, GameSpec, Move, Player, Position};
use crate::kripke::{KripkeModel, ModelDoc, StateId};
use crate::ordinal::Ordinal;
use crate::semantics::{eval_bounded, eval_standard, Assignment};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("brute-force node budget of {budget} exceeded")]
    BudgetExceeded { budget: usize },
    #[error("invalid instance parameters: {0}")]
    InvalidParams(String),
}

/// Bounds for random instance generation. Defaults keep the clock-map state
/// space small enough for the brute-force oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceParams {
    pub max_states: usize,
    pub edge_density: f64,
    pub prop_count: usize,
    /// Maximum height in edges of generated syntax trees.
    pub max_depth: usize,
    pub max_fixpoints: usize,
    pub gamma_min: u64,
    pub gamma_max: u64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            max_states: 4,
            edge_density: 0.4,
            prop_count: 2,
            max_depth: 3,
            max_fixpoints: 2,
            gamma_min: 1,
            gamma_max: 5,
        }
    }
}

impl InstanceParams {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_states < 1 {
            return Err(HarnessError::InvalidParams("max_states must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return Err(HarnessError::InvalidParams(
                "edge_density must lie in [0, 1]".into(),
            ));
        }
        if self.prop_count < 1 {
            return Err(HarnessError::InvalidParams("prop_count must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(HarnessError::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.gamma_min < 1 || self.gamma_min > self.gamma_max {
            return Err(HarnessError::InvalidParams(
                "gamma range must satisfy 1 <= gamma_min <= gamma_max".into(),
            ));
        }
        Ok(())
    }

    fn prop_names(&self) -> Vec<String> {
        let alphabet = ["p", "q", "r", "s"];
        (0..self.prop_count)
            .map(|i| {
                alphabet
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("p{i}"))
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FixMask {
    Both,
    MuOnly,
    NuOnly,
}

struct Generator {
    rng: ChaCha8Rng,
    props: Vec<String>,
    fix_budget: usize,
    next_label: usize,
    mask: FixMask,
    /// When set, binder names are drawn from this pool with repetition, so
    /// the output deliberately reuses labels and shadows binders.
    collide_pool: Option<Vec<String>>,
}

impl Generator {
    fn fresh_label(&mut self) -> String {
        match &self.collide_pool {
            Some(pool) => pool[self.rng.gen_range(0..pool.len())].clone(),
            None => {
                let name = format!("X{}", self.next_label);
                self.next_label += 1;
                name
            }
        }
    }

    fn formula(&mut self, depth: usize, scope: &mut Vec<String>) -> Formula {
        let leaf_only = depth == 0;
        // Weighted pick over the constructors available here. Atoms are
        // de-emphasized while depth remains so fixpoints and recursion
        // through labels dominate the corpus.
        let mut choices: Vec<(u32, u8)> = if leaf_only {
            vec![(3, 0), (1, 1)] // prop, ~prop
        } else {
            vec![(2, 0), (1, 1)]
        };
        if !scope.is_empty() {
            choices.push((5, 2)); // bound label
        }
        if !leaf_only {
            choices.extend_from_slice(&[(3, 3), (3, 4), (3, 5), (2, 6)]); // or, and, <>, []
            if self.fix_budget > 0 {
                choices.push((6, 7));
            }
        }
        let total: u32 = choices.iter().map(|(w, _)| w).sum();
        let mut roll = self.rng.gen_range(0..total);
        let mut pick = 0;
        for (w, tag) in &choices {
            if roll < *w {
                pick = *tag;
                break;
            }
            roll -= w;
        }
        match pick {
            0 => Formula::prop(&self.props[self.rng.gen_range(0..self.props.len())].clone()),
            1 => Formula::neg_prop(&self.props[self.rng.gen_range(0..self.props.len())].clone()),
            2 => Formula::label(&scope[self.rng.gen_range(0..scope.len())].clone()),
            3 => Formula::or(self.formula(depth - 1, scope), self.formula(depth - 1, scope)),
            4 => Formula::and(self.formula(depth - 1, scope), self.formula(depth - 1, scope)),
            5 => Formula::diamond(self.formula(depth - 1, scope)),
            6 => Formula::box_(self.formula(depth - 1, scope)),
            _ => {
                self.fix_budget -= 1;
                let kind = match self.mask {
                    FixMask::Both => {
                        if self.rng.gen_bool(0.5) {
                            FixKind::Mu
                        } else {
                            FixKind::Nu
                        }
                    }
                    FixMask::MuOnly => FixKind::Mu,
                    FixMask::NuOnly => FixKind::Nu,
                };
                let name = self.fresh_label();
                scope.push(name.clone());
                let body = self.formula(depth - 1, scope);
                scope.pop();
                Formula::fix(
                    kind,
                    LabelSym::new(&name).expect("generated label is valid"),
                    body,
                )
            }
        }
    }
}

fn sentence_with(seed: u64, params: &InstanceParams, mask: FixMask, collide: bool) -> Formula {
    let pool = collide.then(|| vec!["X".to_string(), "Y".to_string()]);
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        props: params.prop_names(),
        fix_budget: params.max_fixpoints,
        next_label: 0,
        mask,
        collide_pool: pool,
    };
    gen.formula(params.max_depth, &mut Vec::new())
}

/// A deterministic random sentence: closed, in normal form, with every
/// label occurrence under its binder, respecting the depth and fixpoint
/// caps.
pub fn random_sentence(seed: u64, params: &InstanceParams) -> Formula {
    sentence_with(seed, params, FixMask::Both, false)
}

/// As [`random_sentence`] but restricted to least fixpoints.
pub fn random_sentence_mu_only(seed: u64, params: &InstanceParams) -> Formula {
    sentence_with(seed, params, FixMask::MuOnly, false)
}

/// As [`random_sentence`] but restricted to greatest fixpoints.
pub fn random_sentence_nu_only(seed: u64, params: &InstanceParams) -> Formula {
    sentence_with(seed, params, FixMask::NuOnly, false)
}

/// A deliberately label-colliding sentence: binder names come from a small
/// pool, so distinct binders reuse names and may shadow each other. Still
/// closed, but usually not in normal form.
pub fn random_colliding_sentence(seed: u64, params: &InstanceParams) -> Formula {
    sentence_with(seed, params, FixMask::Both, true)
}

/// A sentence body for operator tests: generated with `x` in scope, so the
/// designated label may occur free in the result.
pub fn random_operator_body(seed: u64, params: &InstanceParams, x: &LabelSym) -> Formula {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        props: params.prop_names(),
        fix_budget: params.max_fixpoints,
        next_label: 0,
        mask: FixMask::Both,
        collide_pool: None,
    };
    gen.formula(params.max_depth, &mut vec![x.as_str().to_string()])
}

/// The model, sentence, clock bound and designated state of one instance,
/// all derived deterministically from the seed.
pub fn random_instance(seed: u64, params: &InstanceParams) -> (KripkeModel, Formula, u64, StateId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_states = rng.gen_range(1..=params.max_states);
    let model_seed: u64 = rng.gen();
    let formula_seed: u64 = rng.gen();
    let gamma = rng.gen_range(params.gamma_min..=params.gamma_max);
    let w0 = StateId(rng.gen_range(0..n_states) as u32);
    let model = KripkeModel::random(model_seed, n_states, params.edge_density, &params.prop_names())
        .expect("validated parameters");
    let formula = random_sentence(formula_seed, params);
    (model, formula, gamma, w0)
}

/// Serializable description of an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDesc {
    pub model: ModelDoc,
    pub formula: String,
    pub gamma: String,
}

/// A shrunk failing instance, kept small enough to replay by hand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub model: ModelDoc,
    pub formula: String,
    pub gamma: String,
    pub state: Option<String>,
    pub check: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateVerdict {
    pub state: String,
    pub gts: bool,
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard: Option<bool>,
}

/// Per-state comparison of the game and compositional engines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffReport {
    pub instance: InstanceDesc,
    pub rows: Vec<StateVerdict>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

fn instance_desc(m: &KripkeModel, f: &Formula, gamma: &Ordinal) -> InstanceDesc {
    InstanceDesc {
        model: m.to_doc(),
        formula: f.to_string(),
        gamma: gamma.to_string(),
    }
}

/// Compares game truth against bounded compositional truth at every state.
/// A mismatch is an implementation bug by definition; the report then
/// carries a shrunk counterexample.
pub fn differential_check(m: &KripkeModel, f: &Formula, gamma: u64) -> DiffReport {
    assert!(gamma >= 1, "clock bound must be at least 1");
    assert!(f.is_sentence(), "differential checks run on sentences");
    let bound = Ordinal::finite(gamma);
    let rows = diff_rows(m, f, gamma);
    let pass = rows.iter().all(|r| r.gts == r.bounded);
    let counterexample = if pass {
        None
    } else {
        let (sm, sf, sg) = shrink_instance(m, f, gamma, &|m2, f2, g2| {
            diff_rows(m2, f2, g2).iter().any(|r| r.gts != r.bounded)
        });
        let bad_state = diff_rows(&sm, &sf, sg)
            .into_iter()
            .find(|r| r.gts != r.bounded)
            .map(|r| r.state);
        Some(Counterexample {
            model: sm.to_doc(),
            formula: sf.to_string(),
            gamma: Ordinal::finite(sg).to_string(),
            state: bad_state,
            check: "differential".to_string(),
        })
    };
    DiffReport {
        instance: instance_desc(m, f, &bound),
        rows,
        pass,
        counterexample,
    }
}

fn diff_rows(m: &KripkeModel, f: &Formula, gamma: u64) -> Vec<StateVerdict> {
    let bound = Ordinal::finite(gamma);
    let nf = f.to_normal_form();
    let bounded = eval_bounded(m, &nf, &Assignment::empty(), &bound).expect("bound >= 1");
    m.states()
        .map(|w| StateVerdict {
            state: m.name(w).to_string(),
            gts: gts_truth(m, w, f, &bound).expect("valid game"),
            bounded: bounded.contains(w),
            standard: None,
        })
        .collect()
}

/// At bound `|W| + 1` both bounded engines must agree with the standard
/// semantics at every state.
pub fn standard_recovery_check(m: &KripkeModel, f: &Formula) -> DiffReport {
    assert!(f.is_sentence(), "recovery checks run on sentences");
    let gamma = m.state_count() as u64 + 1;
    let bound = Ordinal::finite(gamma);
    let rows = recovery_rows(m, f, gamma);
    let pass = rows
        .iter()
        .all(|r| r.gts == r.bounded && Some(r.gts) == r.standard);
    let counterexample = if pass {
        None
    } else {
        // Recovery always pins the bound to |W| + 1, so only the model and
        // formula shrink.
        let (sm, sf, _) = shrink_instance(m, f, gamma, &|m2, f2, _| {
            recovery_rows(m2, f2, m2.state_count() as u64 + 1)
                .iter()
                .any(|r| r.gts != r.bounded || Some(r.gts) != r.standard)
        });
        let state = recovery_rows(&sm, &sf, sm.state_count() as u64 + 1)
            .into_iter()
            .find(|r| r.gts != r.bounded || Some(r.gts) != r.standard)
            .map(|r| r.state);
        Some(Counterexample {
            model: sm.to_doc(),
            formula: sf.to_string(),
            gamma: Ordinal::finite(sm.state_count() as u64 + 1).to_string(),
            state,
            check: "standard-recovery".to_string(),
        })
    };
    DiffReport {
        instance: instance_desc(m, f, &bound),
        rows,
        pass,
        counterexample,
    }
}

fn recovery_rows(m: &KripkeModel, f: &Formula, gamma: u64) -> Vec<StateVerdict> {
    let bound = Ordinal::finite(gamma);
    let nf = f.to_normal_form();
    let bounded = eval_bounded(m, &nf, &Assignment::empty(), &bound).expect("bound >= 1");
    let standard = eval_standard(m, &nf, &Assignment::empty());
    m.states()
        .map(|w| StateVerdict {
            state: m.name(w).to_string(),
            gts: gts_truth(m, w, f, &bound).expect("valid game"),
            bounded: bounded.contains(w),
            standard: Some(standard.contains(w)),
        })
        .collect()
}

/// Greedily shrinks a failing instance: drop a state, replace the sentence
/// by a closed proper subformula, or lower the bound — keeping every step
/// failing under `still_fails`. The result still fails the same check.
pub fn shrink_instance(
    m: &KripkeModel,
    f: &Formula,
    gamma: u64,
    still_fails: &dyn Fn(&KripkeModel, &Formula, u64) -> bool,
) -> (KripkeModel, Formula, u64) {
    let mut cur_m = m.clone();
    let mut cur_f = f.clone();
    let mut cur_g = gamma;
    'outer: loop {
        // Fewer states.
        if cur_m.state_count() > 1 {
            for victim in cur_m.state_names().to_vec() {
                if let Some(smaller) = drop_state(&cur_m, &victim) {
                    if still_fails(&smaller, &cur_f, cur_g) {
                        cur_m = smaller;
                        continue 'outer;
                    }
                }
            }
        }
        // Shallower sentence.
        let mut candidates: Vec<Formula> = cur_f
            .occurrences()
            .into_iter()
            .skip(1)
            .filter_map(|occ| cur_f.node_at(&occ).ok().cloned())
            .filter(|sub| sub.is_sentence())
            .collect();
        candidates.sort_by_key(|c| c.node_count());
        candidates.dedup();
        let mut shrunk = false;
        for cand in candidates {
            if still_fails(&cur_m, &cand, cur_g) {
                cur_f = cand;
                shrunk = true;
                break;
            }
        }
        if shrunk {
            continue 'outer;
        }
        // Smaller bound.
        if cur_g > 1 && still_fails(&cur_m, &cur_f, cur_g - 1) {
            cur_g -= 1;
            continue 'outer;
        }
        return (cur_m, cur_f, cur_g);
    }
}

fn drop_state(m: &KripkeModel, victim: &str) -> Option<KripkeModel> {
    let doc = m.to_doc();
    if doc.states.len() <= 1 {
        return None;
    }
    let states: Vec<String> = doc.states.into_iter().filter(|s| s != victim).collect();
    let edges: Vec<(String, String)> = doc
        .edges
        .into_iter()
        .filter(|(a, b)| a != victim && b != victim)
        .collect();
    let valuation = doc
        .valuation
        .into_iter()
        .map(|(p, mut members)| {
            members.retain(|s| s != victim);
            (p, members)
        })
        .collect();
    KripkeModel::new(states, &edges, &valuation).ok()
}

pub struct NaiveOutcome {
    pub winner: Player,
    pub nodes: usize,
}

/// Unmemoized minimax over the literal position tree: no key sharing, so it
/// is an oracle for the memoized solver. Aborts once `budget` positions have
/// been visited.
pub fn naive_solve(g: &GameSpec, budget: usize) -> Result<NaiveOutcome, HarnessError> {
    let mut nodes = 0usize;
    let winner = naive_rec(g, &g.initial_position(), budget, &mut nodes)?;
    Ok(NaiveOutcome { winner, nodes })
}

fn naive_rec(
    g: &GameSpec,
    pos: &Position,
    budget: usize,
    nodes: &mut usize,
) -> Result<Player, HarnessError> {
    *nodes += 1;
    if *nodes > budget {
        return Err(HarnessError::BudgetExceeded { budget });
    }
    match g.legal_moves(pos).expect("positions from the move relation are valid") {
        Move::Terminal(winner) => Ok(winner),
        Move::Choice { chooser, options } => {
            let measure = g.progress_measure(pos);
            let mut winner = chooser.opponent();
            for option in &options {
                assert!(
                    measure.decreases_to(&g.progress_measure(&option.next)),
                    "progress measure failed to decrease"
                );
                if naive_rec(g, &option.next, budget, nodes)? == chooser {
                    winner = chooser;
                    break;
                }
            }
            Ok(winner)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum OracleVerdict {
    /// Brute force agreed with the solver; node count attached.
    Agreed { nodes: usize },
    /// The instance exceeded the node budget and was not cross-checked.
    Skipped,
    Mismatch { naive: Player, solve: Player },
}

impl OracleVerdict {
    pub fn is_mismatch(&self) -> bool {
        matches!(self, OracleVerdict::Mismatch { .. })
    }
}

/// Everything checked for one corpus instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceReport {
    pub seed: u64,
    pub instance: InstanceDesc,
    pub initial_state: String,
    pub diff: DiffReport,
    pub recovery: DiffReport,
    pub oracle: OracleVerdict,
    pub strategy_pass: bool,
    pub fast_policy_pass: bool,
}

impl InstanceReport {
    pub fn pass(&self) -> bool {
        self.diff.pass
            && self.recovery.pass
            && !self.oracle.is_mismatch()
            && self.strategy_pass
            && self.fast_policy_pass
    }
}

/// Node budget for the brute-force oracle.
pub const NAIVE_BUDGET: usize = 100_000;

/// Runs every check on the instance derived from `seed`.
pub fn check_instance(seed: u64, params: &InstanceParams) -> InstanceReport {
    let (model, formula, gamma, w0) = random_instance(seed, params);
    let bound = Ordinal::finite(gamma);

    let diff = differential_check(&model, &formula, gamma);
    let recovery = standard_recovery_check(&model, &formula);

    let g = GameSpec::new(&model, w0, &formula, &bound).expect("valid instance");
    let solved = g.solve();
    let oracle = match naive_solve(&g, NAIVE_BUDGET) {
        Ok(outcome) if outcome.winner == solved.winner() => {
            OracleVerdict::Agreed { nodes: outcome.nodes }
        }
        Ok(outcome) => OracleVerdict::Mismatch {
            naive: outcome.winner,
            solve: solved.winner(),
        },
        Err(_) => OracleVerdict::Skipped,
    };

    // Positional determinacy: the declared winner's strategy beats every
    // opponent line, from every state of the model.
    let mut strategy_pass = true;
    for w in model.states() {
        let gw = GameSpec::new(&model, w, &formula, &bound).expect("valid instance");
        let solved_w = gw.solve();
        let winner = solved_w.winner();
        let report = gw.verify_strategy(winner, solved_w.strategy(winner));
        strategy_pass &= report.ok;
    }

    let fast_policy_pass =
        g.solve_with_policy(AnnouncePolicy::DecrementByOne).winner()
            == solved.winner();

    InstanceReport {
        seed,
        instance: instance_desc(&model, &formula, &bound),
        initial_state: model.name(w0).to_string(),
        diff,
        recovery,
        oracle,
        strategy_pass,
        fast_policy_pass,
    }
}

/// One state's verdict in a `check` query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRow {
    pub state: String,
    pub result: bool,
}

/// Machine-readable outcome of a `check` query, one row per state plus the
/// optional single-state projection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub formula: String,
    pub semantics: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    pub rows: Vec<CheckRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<CheckRow>,
    pub all_true: bool,
}

/// Aggregate outcome of a corpus run. Failures keep their full reports;
/// passing instances only contribute to the counters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusReport {
    pub total: usize,
    pub passed: usize,
    pub oracle_checked: usize,
    pub oracle_skipped: usize,
    pub failures: Vec<InstanceReport>,
}

impl CorpusReport {
    pub fn pass(&self) -> bool {
        self.passed == self.total
    }

    fn collect(reports: Vec<InstanceReport>) -> CorpusReport {
        let total = reports.len();
        let passed = reports.iter().filter(|r| r.pass()).count();
        let oracle_checked = reports
            .iter()
            .filter(|r| matches!(r.oracle, OracleVerdict::Agreed { .. }))
            .count();
        let oracle_skipped = reports
            .iter()
            .filter(|r| r.oracle == OracleVerdict::Skipped)
            .count();
        CorpusReport {
            total,
            passed,
            oracle_checked,
            oracle_skipped,
            failures: reports.into_iter().filter(|r| !r.pass()).collect(),
        }
    }
}

/// Checks `count` instances with seeds `seed, seed+1, ...` on one thread.
pub fn run_corpus_sequential(seed: u64, count: usize, params: &InstanceParams) -> CorpusReport {
    let reports = (0..count)
        .map(|i| check_instance(seed.wrapping_add(i as u64), params))
        .collect();
    CorpusReport::collect(reports)
}

/// Checks `count` instances, in parallel when the `parallel` feature is
/// enabled.
pub fn run_corpus(seed: u64, count: usize, params: &InstanceParams) -> CorpusReport {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let reports = (0..count)
            .into_par_iter()
            .map(|i| check_instance(seed.wrapping_add(i as u64), params))
            .collect();
        CorpusReport::collect(reports)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_corpus_sequential(seed, count, params)
    }
}

/// Corpus run with an explicit worker count: `Some(1)` forces the
/// sequential path, `Some(n)` uses a pool of `n` threads, `None` uses the
/// default pool. Without the `parallel` feature every variant is
/// sequential.
pub fn run_corpus_with_jobs(
    seed: u64,
    count: usize,
    params: &InstanceParams,
    jobs: Option<usize>,
) -> CorpusReport {
    match jobs {
        Some(1) => run_corpus_sequential(seed, count, params),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| run_corpus(seed, count, params)),
        #[cfg(not(feature = "parallel"))]
        Some(_) => run_corpus_sequential(seed, count, params),
        None => run_corpus(seed, count, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

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

    #[test]
    fn random_sentence_contracts() {
        let params = InstanceParams::default();
        for seed in 0..200 {
            let f = random_sentence(seed, &params);
            assert_eq!(f, random_sentence(seed, &params), "determinism");
            assert!(f.is_sentence(), "closed: {f}");
            assert!(f.is_normal_form(), "normal form: {f}");
            assert!(f.height() <= params.max_depth, "depth cap: {f}");
            assert!(
                f.fixpoint_occurrences().len() <= params.max_fixpoints,
                "fixpoint cap: {f}"
            );
        }
    }

    #[test]
    fn fixpoint_cap_zero_yields_plain_modal_formulas() {
        let params = InstanceParams {
            max_fixpoints: 0,
            ..InstanceParams::default()
        };
        for seed in 0..50 {
            assert!(random_sentence(seed, &params).fixpoint_occurrences().is_empty());
        }
    }

    #[test]
    fn colliding_sentences_collide() {
        let params = InstanceParams {
            max_depth: 4,
            max_fixpoints: 3,
            ..InstanceParams::default()
        };
        let mut seen_collision = false;
        for seed in 0..100 {
            let f = random_colliding_sentence(seed, &params);
            assert!(f.is_sentence(), "still closed: {f}");
            seen_collision |= !f.is_normal_form();
        }
        assert!(seen_collision, "the colliding generator must produce collisions");
    }

    #[test]
    fn differential_check_goldens() {
        let m = KripkeModel::load(M3).unwrap();
        let f = parse_formula("mu X. (p | <>X)").unwrap();
        let report = differential_check(&m, &f, 2);
        assert!(report.pass);
        let truths: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.gts)
            .map(|r| r.state.as_str())
            .collect();
        assert_eq!(truths, vec!["w1", "w2"]);

        let mp = KripkeModel::load(M3_ALL_P).unwrap();
        let nu = parse_formula("nu X. (p & <>X)").unwrap();
        let report = differential_check(&mp, &nu, 2);
        assert!(report.pass);
        let truths: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.gts)
            .map(|r| r.state.as_str())
            .collect();
        assert_eq!(truths, vec!["w0"]);
    }

    #[test]
    fn recovery_golden() {
        let m = KripkeModel::load(M3).unwrap();
        let f = parse_formula("mu X. (p | <>X)").unwrap();
        let report = standard_recovery_check(&m, &f);
        assert!(report.pass);
        assert!(report.rows.iter().all(|r| r.gts && r.standard == Some(true)));

        let mux = parse_formula("mu X. X").unwrap();
        let report = standard_recovery_check(&m, &mux);
        assert!(report.pass);
        assert!(report.rows.iter().all(|r| !r.gts && r.standard == Some(false)));
    }

    #[test]
    fn naive_solve_goldens() {
        let m = KripkeModel::load(M3).unwrap();
        let w0 = m.resolve("w0").unwrap();
        let p = parse_formula("p").unwrap();
        let g = GameSpec::new(&m, m.resolve("w2").unwrap(), &p, &Ordinal::finite(1)).unwrap();
        let outcome = naive_solve(&g, 10).unwrap();
        assert_eq!(outcome.winner, Player::Eloise);
        assert_eq!(outcome.nodes, 1);

        let mux = parse_formula("mu X. X").unwrap();
        let g = GameSpec::new(&m, w0, &mux, &Ordinal::finite(2)).unwrap();
        assert_eq!(naive_solve(&g, 100).unwrap().winner, Player::Abelard);

        // Budget enforcement.
        let f = parse_formula("mu X. (p | <>X)").unwrap();
        let g = GameSpec::new(&m, w0, &f, &Ordinal::finite(3)).unwrap();
        assert!(matches!(
            naive_solve(&g, 2),
            Err(HarnessError::BudgetExceeded { budget: 2 })
        ));
    }

    #[test]
    fn shrinking_finds_a_minimal_failing_instance() {
        let m = KripkeModel::load(M3).unwrap();
        let f = parse_formula("(mu X. (p | <>X)) | nu Y. q").unwrap();
        // Synthetic check: "fails" whenever the model still has w2 and the
        // formula still contains a diamond.
        let fails = |m2: &KripkeModel, f2: &Formula, _g: u64| {
            m2.state_names().iter().any(|s| s == "w2") && f2.to_string().contains("<>")
        };
        assert!(fails(&m, &f, 3));
        let (sm, sf, sg) = shrink_instance(&m, &f, 3, &fails);
        assert!(fails(&sm, &sf, sg), "shrunk instance must still fail");
        assert_eq!(sm.state_count(), 1);
        assert_eq!(sm.state_names(), ["w2"]);
        // Candidates stay closed, so the smallest failing sentence keeps
        // its binder.
        assert_eq!(sf.to_string(), "mu X. (p | <>X)");
        assert_eq!(sg, 1);
    }

    #[test]
    fn check_instance_passes_on_sample_seeds() {
        let params = InstanceParams::default();
        for seed in 0..10 {
            let report = check_instance(seed, &params);
            assert!(
                report.pass(),
                "instance {seed} failed: {}",
                serde_json::to_string_pretty(&report).unwrap()
            );
        }
    }

    #[test]
    fn corpus_runners_agree() {
        let params = InstanceParams::default();
        let a = run_corpus_sequential(123, 12, &params);
        let b = run_corpus(123, 12, &params);
        let c = run_corpus_with_jobs(123, 12, &params, Some(2));
        assert_eq!(a.total, 12);
        assert!(a.pass(), "sequential corpus failed");
        assert_eq!(a.passed, b.passed);
        assert_eq!(a.oracle_checked, b.oracle_checked);
        assert_eq!(b.passed, c.passed);
    }

    #[test]
    fn reports_round_trip_through_json() {
        let params = InstanceParams::default();
        let report = check_instance(42, &params);
        let json = serde_json::to_string(&report).unwrap();
        let back: InstanceReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.seed, report.seed);
        assert_eq!(back.pass(), report.pass());

        let corpus = run_corpus_sequential(7, 3, &params);
        let json = serde_json::to_string(&corpus).unwrap();
        let back: CorpusReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.total, corpus.total);
        assert_eq!(back.passed, corpus.passed);
    }
}
