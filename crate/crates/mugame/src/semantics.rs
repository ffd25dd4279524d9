//! Compositional semantics: standard and clock-bounded evaluation through
//! ordinal-indexed approximant ladders.
//!
//! Evaluation is set-valued over the whole state space. A `mu`-ladder starts
//! from the empty set and a `nu`-ladder from the full set; both iterate the
//! monotone body operator and stabilize within `|W|` steps, which also
//! realizes the limit-ordinal stages: on a finite model the union
//! (respectively intersection) over all earlier stages equals the stage at
//! the stabilization index.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{FixKind, Formula, LabelSym};
use crate::kripke::{KripkeModel, StateId, StateSet};
use crate::ordinal::Ordinal;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("clock bound must be at least 1")]
    ZeroBound,
    #[error("least_witness requires a mu-rooted formula, got {0}")]
    NotMuRooted(String),
}

/// A total assignment of state sets to labels; labels never set explicitly
/// default to the empty set, which sentences never consult.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Assignment {
    map: BTreeMap<LabelSym, StateSet>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, x: LabelSym, value: StateSet) {
        self.map.insert(x, value);
    }

    /// The assignment `self[value/x]`.
    pub fn with(&self, x: &LabelSym, value: StateSet) -> Assignment {
        let mut map = self.map.clone();
        map.insert(x.clone(), value);
        Assignment { map }
    }

    pub fn get(&self, x: &LabelSym, universe: usize) -> StateSet {
        self.map
            .get(x)
            .cloned()
            .unwrap_or_else(|| StateSet::empty(universe))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode<'a> {
    Standard,
    Bounded(&'a Ordinal),
}

/// The stages `F^0, F^1, ...` of one fixpoint iteration, recorded up to and
/// including the first repeated set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ApproximantLadder {
    kind: FixKind,
    stages: Vec<StateSet>,
}

impl ApproximantLadder {
    pub fn kind(&self) -> FixKind {
        self.kind
    }

    /// All recorded stages, `F^0 ..= F^{n*}`.
    pub fn stages(&self) -> &[StateSet] {
        &self.stages
    }

    /// The least `n*` with `F^{n*} = F^{n*+1}`; at most `|W|`.
    pub fn stabilization_index(&self) -> usize {
        self.stages.len() - 1
    }

    /// The stage at an arbitrary ordinal. Stages are monotone chains, so
    /// every stage at or beyond `n*` (in particular every infinite stage)
    /// equals the fixpoint, and limit stages need no transfinite unions.
    pub fn at(&self, stage: &Ordinal) -> &StateSet {
        let n = self.stabilization_index();
        match stage.to_finite() {
            Some(k) => &self.stages[(k as usize).min(n)],
            None => &self.stages[n],
        }
    }

    pub fn fixpoint(&self) -> &StateSet {
        self.stages.last().expect("ladder has at least stage 0")
    }
}

fn eval(m: &KripkeModel, f: &Formula, s: &Assignment, mode: Mode) -> StateSet {
    let n = m.state_count();
    match f {
        Formula::Prop(p) => m.proposition(p.as_str()),
        Formula::NegProp(p) => m.proposition(p.as_str()).complement(),
        Formula::Label(x) => s.get(x, n),
        Formula::Or(l, r) => eval(m, l, s, mode).union(&eval(m, r, s, mode)),
        Formula::And(l, r) => eval(m, l, s, mode).intersection(&eval(m, r, s, mode)),
        Formula::Diamond(c) => {
            let inner = eval(m, c, s, mode);
            let mut out = StateSet::empty(n);
            for w in m.states() {
                if m.successors(w).intersects(&inner) {
                    out.insert(w);
                }
            }
            out
        }
        Formula::Box(c) => {
            let inner = eval(m, c, s, mode);
            let mut out = StateSet::empty(n);
            for w in m.states() {
                if m.successors(w).is_subset(&inner) {
                    out.insert(w);
                }
            }
            out
        }
        Formula::Mu(x, body) => {
            let ladder = build_ladder(m, body, x, s, mode, FixKind::Mu);
            match mode {
                Mode::Standard => ladder.fixpoint().clone(),
                Mode::Bounded(gamma) => ladder.at(gamma).clone(),
            }
        }
        Formula::Nu(x, body) => {
            let ladder = build_ladder(m, body, x, s, mode, FixKind::Nu);
            match mode {
                Mode::Standard => ladder.fixpoint().clone(),
                Mode::Bounded(gamma) => ladder.at(gamma).clone(),
            }
        }
    }
}

fn build_ladder(
    m: &KripkeModel,
    body: &Formula,
    x: &LabelSym,
    s: &Assignment,
    mode: Mode,
    kind: FixKind,
) -> ApproximantLadder {
    let n = m.state_count();
    let start = match kind {
        FixKind::Mu => StateSet::empty(n),
        FixKind::Nu => StateSet::full(n),
    };
    let mut stages = vec![start];
    loop {
        let prev = stages.last().expect("nonempty");
        let next = eval(m, body, &s.with(x, prev.clone()), mode);
        match kind {
            FixKind::Mu => assert!(prev.is_subset(&next), "mu-ladder must grow"),
            FixKind::Nu => assert!(next.is_subset(prev), "nu-ladder must shrink"),
        }
        if next == *prev {
            break;
        }
        stages.push(next);
        assert!(stages.len() <= n + 1, "ladder must stabilize within |W| steps");
    }
    ApproximantLadder { kind, stages }
}

/// One application of the operator of `body` with respect to `x`: evaluates
/// `body` under `s[a/x]` with clock bound `gamma`.
pub fn operator_apply(
    m: &KripkeModel,
    body: &Formula,
    x: &LabelSym,
    s: &Assignment,
    gamma: &Ordinal,
    a: &StateSet,
) -> Result<StateSet, EvalError> {
    if gamma.is_zero() {
        return Err(EvalError::ZeroBound);
    }
    Ok(eval(m, body, &s.with(x, a.clone()), Mode::Bounded(gamma)))
}

/// The full approximant ladder of `body`'s operator under clock bound
/// `gamma`.
pub fn approximant_ladder(
    m: &KripkeModel,
    body: &Formula,
    x: &LabelSym,
    s: &Assignment,
    gamma: &Ordinal,
    kind: FixKind,
) -> Result<ApproximantLadder, EvalError> {
    if gamma.is_zero() {
        return Err(EvalError::ZeroBound);
    }
    Ok(build_ladder(m, body, x, s, Mode::Bounded(gamma), kind))
}

/// The approximant `F^stage` of `body`'s operator under clock bound `gamma`.
pub fn approximant(
    m: &KripkeModel,
    body: &Formula,
    x: &LabelSym,
    s: &Assignment,
    gamma: &Ordinal,
    kind: FixKind,
    stage: &Ordinal,
) -> Result<StateSet, EvalError> {
    Ok(approximant_ladder(m, body, x, s, gamma, kind)?.at(stage).clone())
}

/// The states satisfying `f` under the `gamma`-bounded semantics: fixpoint
/// subformulas evaluate to the `gamma`-th approximant of their operator,
/// where the operator itself is evaluated under the same bound.
pub fn eval_bounded(
    m: &KripkeModel,
    f: &Formula,
    s: &Assignment,
    gamma: &Ordinal,
) -> Result<StateSet, EvalError> {
    if gamma.is_zero() {
        return Err(EvalError::ZeroBound);
    }
    Ok(eval(m, f, s, Mode::Bounded(gamma)))
}

/// The states satisfying `f` under the standard semantics: fixpoint
/// subformulas evaluate to genuine least/greatest fixpoints.
pub fn eval_standard(m: &KripkeModel, f: &Formula, s: &Assignment) -> StateSet {
    eval(m, f, s, Mode::Standard)
}

/// For a mu-rooted `f`, the smallest `gamma < bound` with
/// `w ∈ F^{gamma+1}` — the clock value the verifier should announce — or
/// `None` when no stage below the bound contains `w`.
pub fn least_witness(
    m: &KripkeModel,
    w: StateId,
    f: &Formula,
    s: &Assignment,
    bound: &Ordinal,
) -> Result<Option<Ordinal>, EvalError> {
    if bound.is_zero() {
        return Err(EvalError::ZeroBound);
    }
    let (x, body) = match f {
        Formula::Mu(x, body) => (x, body.as_ref()),
        other => return Err(EvalError::NotMuRooted(other.to_string())),
    };
    let ladder = approximant_ladder(m, body, x, s, bound, FixKind::Mu)?;
    for (k, stage) in ladder.stages().iter().enumerate().skip(1) {
        if stage.contains(w) {
            let witness = Ordinal::finite(k as u64 - 1);
            return Ok(if witness < *bound { Some(witness) } else { None });
        }
    }
    Ok(None)
}
