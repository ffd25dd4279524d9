//! Clock-bounded evaluation games: positions, legal moves, a memoized
//! backward-induction solver, positional strategies, play transcripts and
//! DOT export of game trees.
//!
//! A position is a triple (state, subformula occurrence, clock map). The
//! verifier Eloise resolves disjunctions, diamonds and `mu`-clocks, the
//! falsifier Abelard conjunctions, boxes and `nu`-clocks. Reaching a bound
//! label lowers the clock of its binder and resets every clock inside the
//! binder's body to the bound. Along any move the pair (clock values on the
//! branch to the current occurrence, remaining syntax depth) strictly
//! decreases lexicographically, so plays are finite; the engine asserts this
//! at every step it generates.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{FixKind, Formula, LabelSym, OccPath};
use crate::kripke::{KripkeModel, StateId};
use crate::ordinal::Ordinal;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Player {
    Eloise,
    Abelard,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Eloise => Player::Abelard,
            Player::Abelard => Player::Eloise,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Eloise => "Eloise",
            Player::Abelard => "Abelard",
        })
    }
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("formula is not a sentence (free labels: {0})")]
    NotASentence(String),
    #[error("clock bound must be at least 1")]
    ZeroBound,
    #[error("the game engine requires a finite clock bound, got {0}")]
    InfiniteBound(Ordinal),
    #[error("clock bound {0} exceeds the supported range")]
    BoundTooLarge(Ordinal),
    #[error("state index {0} out of range")]
    InvalidState(u32),
    #[error("position is inconsistent with this game: {0}")]
    InvalidPosition(String),
}

/// Opaque handle to a subformula occurrence of the game's sentence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct OccId(u32);

impl OccId {
    fn ix(self) -> usize {
        self.0 as usize
    }
}

/// Clock values for the fixpoint occurrences of the sentence, indexed in
/// preorder. The game engine requires a finite bound, so values are plain
/// naturals `<= gamma`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ClockMap(Vec<u32>);

impl ClockMap {
    fn uniform(len: usize, value: u32) -> Self {
        ClockMap(vec![value; len])
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    fn get(&self, slot: usize) -> u32 {
        self.0[slot]
    }

    fn set(&mut self, slot: usize, value: u32) {
        self.0[slot] = value;
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Position {
    pub state: StateId,
    pub occ: OccId,
    pub clocks: ClockMap,
}

/// One choice a player can make, tagged for transcripts and DOT edges.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ChoiceLabel {
    Left,
    Right,
    Successor(StateId),
    Clock(u32),
}

#[derive(Clone, Debug)]
pub struct MoveOption {
    pub choice: ChoiceLabel,
    pub next: Position,
}

/// The rule table entry for a position: either an ending position with its
/// winner, or a choice for one of the players.
#[derive(Clone, Debug)]
pub enum Move {
    Terminal(Player),
    Choice {
        chooser: Player,
        options: Vec<MoveOption>,
    },
}

/// Memoization key: state, occurrence and the clocks of the fixpoint
/// occurrences strictly above the current occurrence on its branch (the
/// occurrence's own clock is overwritten before it is ever read, and clocks
/// off the branch are reset before they can be reached again).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Key {
    state: StateId,
    occ: OccId,
    branch_clocks: Vec<u32>,
}

/// How fixpoint clock choices are enumerated by the solver.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AnnouncePolicy {
    /// Every legal clock value. This is the reference semantics.
    Exhaustive,
    /// Announce `gamma - 1`, lower by exactly one. An optimization that
    /// must agree with `Exhaustive` on the test corpus before use.
    DecrementByOne,
}

/// The lexicographic progress measure that strictly decreases along every
/// move: clock values of the fixpoint occurrences on the branch from the
/// root to the current occurrence (outermost first), tie-broken by the
/// remaining syntax depth below it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProgressMeasure {
    branch_clocks: Vec<u32>,
    depth_below: u32,
}

impl ProgressMeasure {
    /// True when `next` is strictly below `self`: the clock tuples are
    /// compared positionwise over their common prefix (the branch only ever
    /// grows or shrinks at the tail), and on a tie the syntax depth must
    /// drop.
    pub fn decreases_to(&self, next: &ProgressMeasure) -> bool {
        for (a, b) in self.branch_clocks.iter().zip(&next.branch_clocks) {
            if b < a {
                return true;
            }
            if b > a {
                return false;
            }
        }
        next.depth_below < self.depth_below
    }
}

// Per-occurrence view of the sentence used by the engine.
struct OccNode {
    op: OccOp,
    children: Vec<u32>,
    path: OccPath,
    /// Height in edges of the subtree below this occurrence.
    height: u32,
    /// Clock slots on the branch from the root to here, inclusive.
    branch_slots: Vec<u32>,
    /// As `branch_slots` but without the occurrence's own slot at fixpoint
    /// nodes; the announce rule overwrites that clock before it is read.
    key_slots: Vec<u32>,
    text: String,
}

enum OccOp {
    Prop(String),
    NegProp(String),
    Label { rf_slot: u32 },
    Or,
    And,
    Diamond,
    BoxMod,
    Fix { kind: FixKind, slot: u32 },
}

struct SlotInfo {
    kind: FixKind,
    label: LabelSym,
    /// Occurrence of the binder's body.
    body: u32,
    /// Slots of fixpoint occurrences strictly inside the binder, reset to
    /// the bound when the binder's clock is lowered.
    resets: Vec<u32>,
    path: OccPath,
}

struct OccIndex {
    nodes: Vec<OccNode>,
    slots: Vec<SlotInfo>,
}

impl OccIndex {
    fn build(f: &Formula) -> Result<OccIndex, GameError> {
        let mut index = OccIndex {
            nodes: Vec::new(),
            slots: Vec::new(),
        };
        let mut binders: Vec<(LabelSym, u32)> = Vec::new();
        let mut branch: Vec<u32> = Vec::new();
        build_node(f, &OccPath::root(), &mut index, &mut binders, &mut branch)?;
        // Resets: every slot strictly inside another slot's subtree.
        for i in 0..index.slots.len() {
            let resets = (0..index.slots.len())
                .filter(|&j| {
                    j != i && index.slots[i].path.is_strict_ancestor_of(&index.slots[j].path)
                })
                .map(|j| j as u32)
                .collect();
            index.slots[i].resets = resets;
        }
        Ok(index)
    }
}

fn build_node(
    f: &Formula,
    path: &OccPath,
    index: &mut OccIndex,
    binders: &mut Vec<(LabelSym, u32)>,
    branch: &mut Vec<u32>,
) -> Result<u32, GameError> {
    let id = index.nodes.len() as u32;
    let mut own_slot = None;
    let op = match f {
        Formula::Prop(p) => OccOp::Prop(p.as_str().to_string()),
        Formula::NegProp(p) => OccOp::NegProp(p.as_str().to_string()),
        Formula::Label(x) => {
            let rf_slot = binders
                .iter()
                .rev()
                .find(|(sym, _)| sym == x)
                .map(|&(_, slot)| slot)
                .ok_or_else(|| GameError::NotASentence(x.to_string()))?;
            OccOp::Label { rf_slot }
        }
        Formula::Or(..) => OccOp::Or,
        Formula::And(..) => OccOp::And,
        Formula::Diamond(_) => OccOp::Diamond,
        Formula::Box(_) => OccOp::BoxMod,
        Formula::Mu(x, _) | Formula::Nu(x, _) => {
            let kind = if matches!(f, Formula::Mu(..)) {
                FixKind::Mu
            } else {
                FixKind::Nu
            };
            let slot = index.slots.len() as u32;
            index.slots.push(SlotInfo {
                kind,
                label: x.clone(),
                body: 0, // fixed up below
                resets: Vec::new(),
                path: path.clone(),
            });
            own_slot = Some((x.clone(), slot));
            OccOp::Fix { kind, slot }
        }
    };

    let key_slots = branch.clone();
    if let Some((_, slot)) = &own_slot {
        branch.push(*slot);
    }
    let branch_slots = branch.clone();

    index.nodes.push(OccNode {
        op,
        children: Vec::new(),
        path: path.clone(),
        height: 0,
        branch_slots,
        key_slots: if own_slot.is_some() {
            key_slots
        } else {
            branch.clone()
        },
        text: f.to_string(),
    });

    if let Some((sym, slot)) = &own_slot {
        binders.push((sym.clone(), *slot));
    }
    let mut children = Vec::new();
    let mut height = 0;
    for i in 0..f.child_count() {
        let child = f.child(i).expect("child in range");
        let cid = build_node(child, &path.child(i as u8), index, binders, branch)?;
        height = height.max(index.nodes[cid as usize].height + 1);
        children.push(cid);
    }
    if let Some((_, slot)) = &own_slot {
        binders.pop();
        branch.pop();
        let body = children[0];
        index.slots[*slot as usize].body = body;
    }
    index.nodes[id as usize].children = children;
    index.nodes[id as usize].height = height;
    Ok(id)
}

/// A bounded evaluation game: model, initial state, sentence (normalized at
/// construction so every label has a unique binder) and a finite clock
/// bound.
pub struct GameSpec {
    model: KripkeModel,
    initial: StateId,
    sentence: Formula,
    gamma: u32,
    index: OccIndex,
}

impl GameSpec {
    pub fn new(
        model: &KripkeModel,
        initial: StateId,
        sentence: &Formula,
        gamma: &Ordinal,
    ) -> Result<GameSpec, GameError> {
        let free = sentence.free_labels();
        if !free.is_empty() {
            let list = free
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(GameError::NotASentence(list));
        }
        let gamma = match gamma.to_finite() {
            None => return Err(GameError::InfiniteBound(gamma.clone())),
            Some(0) => return Err(GameError::ZeroBound),
            Some(g) => {
                u32::try_from(g).map_err(|_| GameError::BoundTooLarge(gamma.clone()))?
            }
        };
        if initial.index() >= model.state_count() {
            return Err(GameError::InvalidState(initial.0));
        }
        let sentence = sentence.to_normal_form();
        let index = OccIndex::build(&sentence)?;
        Ok(GameSpec {
            model: model.clone(),
            initial,
            sentence,
            gamma,
            index,
        })
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    /// The sentence actually played, in normal form.
    pub fn sentence(&self) -> &Formula {
        &self.sentence
    }

    pub fn bound(&self) -> u32 {
        self.gamma
    }

    /// Occurrence paths of the fixpoint subformulas, in clock-slot order.
    pub fn clock_domain(&self) -> Vec<OccPath> {
        self.index.slots.iter().map(|s| s.path.clone()).collect()
    }

    pub fn occ_path(&self, occ: OccId) -> &OccPath {
        &self.index.nodes[occ.ix()].path
    }

    pub fn occ_text(&self, occ: OccId) -> &str {
        &self.index.nodes[occ.ix()].text
    }

    /// The initial position: initial state, root occurrence, every clock at
    /// the bound.
    pub fn initial_position(&self) -> Position {
        Position {
            state: self.initial,
            occ: OccId(0),
            clocks: ClockMap::uniform(self.index.slots.len(), self.gamma),
        }
    }

    pub fn progress_measure(&self, pos: &Position) -> ProgressMeasure {
        let node = &self.index.nodes[pos.occ.ix()];
        ProgressMeasure {
            branch_clocks: node
                .branch_slots
                .iter()
                .map(|&s| pos.clocks.get(s as usize))
                .collect(),
            depth_below: node.height,
        }
    }

    /// The memoization key of a position. Positions with equal keys have
    /// identical move trees.
    pub fn canonical_key(&self, pos: &Position) -> Key {
        let node = &self.index.nodes[pos.occ.ix()];
        Key {
            state: pos.state,
            occ: pos.occ,
            branch_clocks: node
                .key_slots
                .iter()
                .map(|&s| pos.clocks.get(s as usize))
                .collect(),
        }
    }

    fn check_position(&self, pos: &Position) -> Result<(), GameError> {
        if pos.occ.ix() >= self.index.nodes.len() {
            return Err(GameError::InvalidPosition(format!(
                "occurrence {} out of range",
                pos.occ.0
            )));
        }
        if pos.state.index() >= self.model.state_count() {
            return Err(GameError::InvalidPosition(format!(
                "state index {} out of range",
                pos.state.0
            )));
        }
        if pos.clocks.values().len() != self.index.slots.len() {
            return Err(GameError::InvalidPosition(
                "clock map has the wrong domain".to_string(),
            ));
        }
        if pos.clocks.values().iter().any(|&c| c > self.gamma) {
            return Err(GameError::InvalidPosition(
                "clock value above the bound".to_string(),
            ));
        }
        Ok(())
    }

    /// The rule table of a position: terminal winner or the mover's options.
    pub fn legal_moves(&self, pos: &Position) -> Result<Move, GameError> {
        self.check_position(pos)?;
        Ok(self.moves(pos, AnnouncePolicy::Exhaustive))
    }

    fn moves(&self, pos: &Position, policy: AnnouncePolicy) -> Move {
        let node = &self.index.nodes[pos.occ.ix()];
        match &node.op {
            OccOp::Prop(p) => Move::Terminal(if self.model.proposition(p).contains(pos.state) {
                Player::Eloise
            } else {
                Player::Abelard
            }),
            OccOp::NegProp(p) => {
                Move::Terminal(if self.model.proposition(p).contains(pos.state) {
                    Player::Abelard
                } else {
                    Player::Eloise
                })
            }
            OccOp::Or | OccOp::And => {
                let chooser = if matches!(node.op, OccOp::Or) {
                    Player::Eloise
                } else {
                    Player::Abelard
                };
                let options = [ChoiceLabel::Left, ChoiceLabel::Right]
                    .into_iter()
                    .zip(&node.children)
                    .map(|(choice, &child)| MoveOption {
                        choice,
                        next: Position {
                            state: pos.state,
                            occ: OccId(child),
                            clocks: pos.clocks.clone(),
                        },
                    })
                    .collect();
                Move::Choice { chooser, options }
            }
            OccOp::Diamond | OccOp::BoxMod => {
                let chooser = if matches!(node.op, OccOp::Diamond) {
                    Player::Eloise
                } else {
                    Player::Abelard
                };
                let child = node.children[0];
                let options: Vec<MoveOption> = self
                    .model
                    .successors(pos.state)
                    .iter()
                    .map(|v| MoveOption {
                        choice: ChoiceLabel::Successor(v),
                        next: Position {
                            state: v,
                            occ: OccId(child),
                            clocks: pos.clocks.clone(),
                        },
                    })
                    .collect();
                if options.is_empty() {
                    // No successor: the chooser loses.
                    Move::Terminal(chooser.opponent())
                } else {
                    Move::Choice { chooser, options }
                }
            }
            OccOp::Fix { kind, slot } => {
                let chooser = match kind {
                    FixKind::Mu => Player::Eloise,
                    FixKind::Nu => Player::Abelard,
                };
                let child = node.children[0];
                let options = self
                    .clock_choices(self.gamma, policy)
                    .map(|g| {
                        let mut clocks = pos.clocks.clone();
                        clocks.set(*slot as usize, g);
                        MoveOption {
                            choice: ChoiceLabel::Clock(g),
                            next: Position {
                                state: pos.state,
                                occ: OccId(child),
                                clocks,
                            },
                        }
                    })
                    .collect();
                Move::Choice { chooser, options }
            }
            OccOp::Label { rf_slot } => {
                let slot = *rf_slot as usize;
                let info = &self.index.slots[slot];
                let current = pos.clocks.get(slot);
                if current == 0 {
                    // An exhausted mu-clock defeats the verifier, an
                    // exhausted nu-clock the falsifier.
                    return Move::Terminal(match info.kind {
                        FixKind::Mu => Player::Abelard,
                        FixKind::Nu => Player::Eloise,
                    });
                }
                let chooser = match info.kind {
                    FixKind::Mu => Player::Eloise,
                    FixKind::Nu => Player::Abelard,
                };
                let body = info.body;
                let options = self
                    .clock_choices(current, policy)
                    .map(|g| {
                        let mut clocks = pos.clocks.clone();
                        clocks.set(slot, g);
                        for &r in &info.resets {
                            clocks.set(r as usize, self.gamma);
                        }
                        MoveOption {
                            choice: ChoiceLabel::Clock(g),
                            next: Position {
                                state: pos.state,
                                occ: OccId(body),
                                clocks,
                            },
                        }
                    })
                    .collect();
                Move::Choice { chooser, options }
            }
        }
    }

    fn clock_choices(
        &self,
        below: u32,
        policy: AnnouncePolicy,
    ) -> impl Iterator<Item = u32> + '_ {
        let range = match policy {
            AnnouncePolicy::Exhaustive => 0..below,
            AnnouncePolicy::DecrementByOne => below - 1..below,
        };
        range
    }

    /// Renders a choice for transcripts and error messages.
    pub fn describe_choice(&self, choice: &ChoiceLabel) -> String {
        match choice {
            ChoiceLabel::Left => "left".to_string(),
            ChoiceLabel::Right => "right".to_string(),
            ChoiceLabel::Successor(v) => self.model.name(*v).to_string(),
            ChoiceLabel::Clock(g) => g.to_string(),
        }
    }

    /// Renders a position as `(state, subformula, clocks)`.
    pub fn describe_position(&self, pos: &Position) -> String {
        let node = &self.index.nodes[pos.occ.ix()];
        let clocks = self.describe_clocks(&pos.clocks);
        if clocks.is_empty() {
            format!("({}, {})", self.model.name(pos.state), node.text)
        } else {
            format!("({}, {}, {})", self.model.name(pos.state), node.text, clocks)
        }
    }

    pub fn describe_clocks(&self, clocks: &ClockMap) -> String {
        self.index
            .slots
            .iter()
            .zip(clocks.values())
            .map(|(info, c)| format!("{}={}", info.label, c))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn solve(&self) -> SolveResult {
        self.solve_with_policy(AnnouncePolicy::Exhaustive)
    }

    /// Memoized backward induction over canonical keys. The move relation
    /// strictly decreases the progress measure, so the recursion is
    /// well-founded; this is asserted for every generated move.
    pub fn solve_with_policy(&self, policy: AnnouncePolicy) -> SolveResult {
        let mut solver = Solver {
            g: self,
            policy,
            memo: HashMap::new(),
            eloise: HashMap::new(),
            abelard: HashMap::new(),
        };
        let root_pos = self.initial_position();
        let (_, height) = solver.run(&root_pos);
        let root = self.canonical_key(&root_pos);
        SolveResult {
            stats: SolveStats {
                keys_explored: solver.memo.len(),
                max_play_length: height,
            },
            winners: solver.memo,
            eloise: Strategy {
                player: Player::Eloise,
                choices: solver.eloise,
            },
            abelard: Strategy {
                player: Player::Abelard,
                choices: solver.abelard,
            },
            root,
        }
    }
}

struct Solver<'a> {
    g: &'a GameSpec,
    policy: AnnouncePolicy,
    memo: HashMap<Key, (Player, u32)>,
    eloise: HashMap<Key, ChoiceLabel>,
    abelard: HashMap<Key, ChoiceLabel>,
}

impl Solver<'_> {
    fn run(&mut self, pos: &Position) -> (Player, u32) {
        let key = self.g.canonical_key(pos);
        if let Some(&cached) = self.memo.get(&key) {
            return cached;
        }
        let result = match self.g.moves(pos, self.policy) {
            Move::Terminal(winner) => (winner, 0),
            Move::Choice { chooser, options } => {
                let measure = self.g.progress_measure(pos);
                let mut winning_choice = None;
                let mut height = 0;
                for option in &options {
                    assert!(
                        measure.decreases_to(&self.g.progress_measure(&option.next)),
                        "progress measure failed to decrease: {} -> {}",
                        self.g.describe_position(pos),
                        self.g.describe_position(&option.next),
                    );
                    let (winner, h) = self.run(&option.next);
                    height = height.max(h + 1);
                    if winner == chooser && winning_choice.is_none() {
                        winning_choice = Some(option.choice.clone());
                    }
                }
                let winner = if winning_choice.is_some() {
                    chooser
                } else {
                    chooser.opponent()
                };
                let recorded = winning_choice.unwrap_or_else(|| options[0].choice.clone());
                match chooser {
                    Player::Eloise => self.eloise.insert(key.clone(), recorded),
                    Player::Abelard => self.abelard.insert(key.clone(), recorded),
                };
                (winner, height)
            }
        };
        self.memo.insert(key, result);
        result
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct SolveStats {
    /// Distinct canonical keys reachable from the initial position.
    pub keys_explored: usize,
    /// Length in moves of the longest possible play.
    pub max_play_length: u32,
}

/// A positional strategy: one choice per key where the player moves.
#[derive(Clone, Debug)]
pub struct Strategy {
    player: Player,
    choices: HashMap<Key, ChoiceLabel>,
}

impl Strategy {
    pub fn player(&self) -> Player {
        self.player
    }

    pub fn choice_at(&self, key: &Key) -> Option<&ChoiceLabel> {
        self.choices.get(key)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Removes the choice at a key; used to exercise coverage failures.
    pub fn remove(&mut self, key: &Key) -> Option<ChoiceLabel> {
        self.choices.remove(key)
    }
}

pub struct SolveResult {
    winners: HashMap<Key, (Player, u32)>,
    eloise: Strategy,
    abelard: Strategy,
    root: Key,
    pub stats: SolveStats,
}

impl SolveResult {
    /// Winner at the initial position.
    pub fn winner(&self) -> Player {
        self.winners[&self.root].0
    }

    pub fn winner_at(&self, key: &Key) -> Option<Player> {
        self.winners.get(key).map(|&(w, _)| w)
    }

    pub fn root_key(&self) -> &Key {
        &self.root
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.winners.keys()
    }

    pub fn strategy(&self, player: Player) -> &Strategy {
        match player {
            Player::Eloise => &self.eloise,
            Player::Abelard => &self.abelard,
        }
    }
}

/// Truth of `f` at `w` under the bounded game semantics: normalize, build
/// the game, solve, and ask who wins the initial position.
pub fn gts_truth(
    m: &KripkeModel,
    w: StateId,
    f: &Formula,
    gamma: &Ordinal,
) -> Result<bool, GameError> {
    let g = GameSpec::new(m, w, f, gamma)?;
    Ok(g.solve().winner() == Player::Eloise)
}

/// Outcome of replaying a strategy against every opponent line.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    /// Length in moves of the longest play consistent with the strategy.
    pub max_play_length: u32,
    /// Distinct keys visited while exploring.
    pub keys_checked: usize,
    pub failure: Option<StrategyFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub enum StrategyFailure {
    /// The strategy gives no (legal) instruction at a reachable key.
    Undefined { position: String, play: Vec<String> },
    /// Some play consistent with the strategy is lost.
    Lost { play: Vec<String> },
}

enum WalkFailure {
    Undefined { position: String, tail: Vec<String> },
    Lost { tail: Vec<String> },
}

impl GameSpec {
    /// Explores every play where `player` follows `strategy` and the
    /// opponent plays arbitrarily. Reports a missing instruction or a lost
    /// play together with the play reaching it.
    pub fn verify_strategy(&self, player: Player, strategy: &Strategy) -> VerificationReport {
        let mut visited: HashMap<Key, u32> = HashMap::new();
        let outcome = self.verify_walk(player, strategy, &self.initial_position(), &mut visited);
        match outcome {
            Ok(height) => VerificationReport {
                ok: true,
                max_play_length: height,
                keys_checked: visited.len(),
                failure: None,
            },
            Err(failure) => {
                let failure = match failure {
                    WalkFailure::Undefined { position, tail } => StrategyFailure::Undefined {
                        position,
                        play: tail,
                    },
                    WalkFailure::Lost { tail } => StrategyFailure::Lost { play: tail },
                };
                VerificationReport {
                    ok: false,
                    max_play_length: 0,
                    keys_checked: visited.len(),
                    failure: Some(failure),
                }
            }
        }
    }

    fn verify_walk(
        &self,
        player: Player,
        strategy: &Strategy,
        pos: &Position,
        visited: &mut HashMap<Key, u32>,
    ) -> Result<u32, WalkFailure> {
        let key = self.canonical_key(pos);
        if let Some(&h) = visited.get(&key) {
            return Ok(h);
        }
        let here = self.describe_position(pos);
        let height = match self.moves(pos, AnnouncePolicy::Exhaustive) {
            Move::Terminal(winner) => {
                if winner != player {
                    return Err(WalkFailure::Lost { tail: vec![here] });
                }
                0
            }
            Move::Choice { chooser, options } => {
                let measure = self.progress_measure(pos);
                let followed: Vec<&MoveOption> = if chooser == player {
                    let choice = strategy.choice_at(&key);
                    let picked = choice.and_then(|c| options.iter().find(|o| o.choice == *c));
                    match picked {
                        Some(option) => vec![option],
                        None => {
                            return Err(WalkFailure::Undefined {
                                position: here.clone(),
                                tail: vec![here],
                            })
                        }
                    }
                } else {
                    options.iter().collect()
                };
                let mut height = 0;
                for option in followed {
                    assert!(
                        measure.decreases_to(&self.progress_measure(&option.next)),
                        "progress measure failed to decrease"
                    );
                    match self.verify_walk(player, strategy, &option.next, visited) {
                        Ok(h) => height = height.max(h + 1),
                        Err(mut failure) => {
                            let tail = match &mut failure {
                                WalkFailure::Undefined { tail, .. } => tail,
                                WalkFailure::Lost { tail } => tail,
                            };
                            tail.insert(0, here.clone());
                            return Err(failure);
                        }
                    }
                }
                height
            }
        };
        visited.insert(key, height);
        Ok(height)
    }
}

/// Supplies one player's choices during a play: a solved strategy, a script,
/// or anything interactive.
pub trait ChoiceSource {
    fn choose(
        &mut self,
        g: &GameSpec,
        pos: &Position,
        chooser: Player,
        options: &[MoveOption],
    ) -> Result<ChoiceLabel, ChoiceError>;
}

#[derive(Debug, Error)]
pub enum ChoiceError {
    #[error("choice source exhausted")]
    Exhausted,
    #[error("unrecognized choice {0:?}")]
    Invalid(String),
}

/// Plays the choices recorded by the solver.
pub struct StrategySource<'a> {
    strategy: &'a Strategy,
}

impl<'a> StrategySource<'a> {
    pub fn new(strategy: &'a Strategy) -> Self {
        StrategySource { strategy }
    }
}

impl ChoiceSource for StrategySource<'_> {
    fn choose(
        &mut self,
        g: &GameSpec,
        pos: &Position,
        _chooser: Player,
        _options: &[MoveOption],
    ) -> Result<ChoiceLabel, ChoiceError> {
        self.strategy
            .choice_at(&g.canonical_key(pos))
            .cloned()
            .ok_or(ChoiceError::Exhausted)
    }
}

/// Plays a fixed list of choice tokens: `left`/`right`, a state name, or a
/// clock value.
pub struct ScriptSource {
    tokens: std::collections::VecDeque<String>,
}

impl ScriptSource {
    pub fn new(tokens: Vec<String>) -> Self {
        ScriptSource {
            tokens: tokens.into(),
        }
    }
}

impl ChoiceSource for ScriptSource {
    fn choose(
        &mut self,
        g: &GameSpec,
        _pos: &Position,
        _chooser: Player,
        options: &[MoveOption],
    ) -> Result<ChoiceLabel, ChoiceError> {
        let token = self.tokens.pop_front().ok_or(ChoiceError::Exhausted)?;
        parse_choice_token(g, options, &token).ok_or(ChoiceError::Invalid(token))
    }
}

/// Parses a transcript token into a choice label. The result is not checked
/// for legality here; the play loop rejects illegal choices with the list of
/// legal ones.
pub fn parse_choice_token(g: &GameSpec, options: &[MoveOption], token: &str) -> Option<ChoiceLabel> {
    let token = token.trim();
    match token {
        "left" => return Some(ChoiceLabel::Left),
        "right" => return Some(ChoiceLabel::Right),
        _ => {}
    }
    if options
        .iter()
        .any(|o| matches!(o.choice, ChoiceLabel::Successor(_)))
    {
        if let Ok(id) = g.model().resolve(token) {
            return Some(ChoiceLabel::Successor(id));
        }
    }
    token.parse::<u32>().ok().map(ChoiceLabel::Clock)
}

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("round {round}: illegal choice {proposed:?}, legal: {}", legal.join(", "))]
    IllegalChoice {
        round: usize,
        proposed: String,
        legal: Vec<String>,
    },
    #[error("round {round}: choice source exhausted, legal: {}", legal.join(", "))]
    SourceExhausted { round: usize, legal: Vec<String> },
}

#[derive(Clone, Debug, Serialize)]
pub struct Round {
    pub position: String,
    pub chooser: Player,
    pub choice: String,
}

/// A complete play: the rounds in order, the final position and the winner.
#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub final_position: String,
    pub winner: Player,
}

impl Transcript {
    /// Number of moves played.
    pub fn length(&self) -> usize {
        self.rounds.len()
    }
}

impl GameSpec {
    /// Runs one play from the initial position, with each player's choices
    /// resolved by its source. Asserts the progress measure each round.
    pub fn play<'a>(
        &self,
        eloise: &'a mut dyn ChoiceSource,
        abelard: &'a mut dyn ChoiceSource,
    ) -> Result<Transcript, PlayError> {
        let mut pos = self.initial_position();
        let mut rounds = Vec::new();
        loop {
            match self.moves(&pos, AnnouncePolicy::Exhaustive) {
                Move::Terminal(winner) => {
                    return Ok(Transcript {
                        rounds,
                        final_position: self.describe_position(&pos),
                        winner,
                    })
                }
                Move::Choice { chooser, options } => {
                    let round = rounds.len() + 1;
                    let legal = || {
                        options
                            .iter()
                            .map(|o| self.describe_choice(&o.choice))
                            .collect::<Vec<_>>()
                    };
                    let source = match chooser {
                        Player::Eloise => &mut *eloise,
                        Player::Abelard => &mut *abelard,
                    };
                    let choice = match source.choose(self, &pos, chooser, &options) {
                        Ok(c) => c,
                        Err(ChoiceError::Exhausted) => {
                            return Err(PlayError::SourceExhausted {
                                round,
                                legal: legal(),
                            })
                        }
                        Err(ChoiceError::Invalid(token)) => {
                            return Err(PlayError::IllegalChoice {
                                round,
                                proposed: token,
                                legal: legal(),
                            })
                        }
                    };
                    let option = options.iter().find(|o| o.choice == choice).ok_or_else(|| {
                        PlayError::IllegalChoice {
                            round,
                            proposed: self.describe_choice(&choice),
                            legal: legal(),
                        }
                    })?;
                    assert!(
                        self.progress_measure(&pos)
                            .decreases_to(&self.progress_measure(&option.next)),
                        "progress measure failed to decrease"
                    );
                    rounds.push(Round {
                        position: self.describe_position(&pos),
                        chooser,
                        choice: self.describe_choice(&option.choice),
                    });
                    pos = option.next.clone();
                }
            }
        }
    }

    /// DOT digraph of the game tree, breadth-first from the initial
    /// position, truncated once `max_nodes` nodes have been emitted. Nodes
    /// whose children were cut off are drawn dashed and marked.
    pub fn export_game_tree(&self, max_nodes: usize) -> String {
        use std::collections::VecDeque;
        use std::fmt::Write;

        let mut out = String::new();
        out.push_str("digraph evaluation_game {\n");
        out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
        let mut queue: VecDeque<(usize, Position)> = VecDeque::new();
        let mut next_id = 0usize;
        let mut truncated = false;
        let mut edges = Vec::new();
        let mut nodes = Vec::new();
        if max_nodes > 0 {
            queue.push_back((next_id, self.initial_position()));
            next_id += 1;
        } else {
            truncated = true;
        }
        while let Some((id, pos)) = queue.pop_front() {
            let node = &self.index.nodes[pos.occ.ix()];
            let clocks = self.describe_clocks(&pos.clocks);
            let mut label = format!("{}\\n{}", self.model.name(pos.state), escape(&node.text));
            if !clocks.is_empty() {
                label.push_str("\\n");
                label.push_str(&escape(&clocks));
            }
            let mut attrs = String::new();
            match self.moves(&pos, AnnouncePolicy::Exhaustive) {
                Move::Terminal(winner) => {
                    label.push_str(&format!("\\n{winner} wins"));
                    attrs.push_str(", peripheries=2");
                }
                Move::Choice { chooser, options } => {
                    if next_id + options.len() <= max_nodes {
                        for option in options {
                            let cid = next_id;
                            next_id += 1;
                            edges.push(format!(
                                "  n{id} -> n{cid} [label=\"{}: {}\"];",
                                match chooser {
                                    Player::Eloise => "E",
                                    Player::Abelard => "A",
                                },
                                escape(&self.describe_choice(&option.choice))
                            ));
                            queue.push_back((cid, option.next));
                        }
                    } else {
                        truncated = true;
                        label.push_str("\\n(truncated)");
                        attrs.push_str(", style=dashed");
                    }
                }
            }
            nodes.push(format!("  n{id} [label=\"{label}\"{attrs}];"));
        }
        for line in nodes {
            let _ = writeln!(out, "{line}");
        }
        for line in edges {
            let _ = writeln!(out, "{line}");
        }
        if truncated {
            let _ = writeln!(out, "  // truncated at {max_nodes} nodes");
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
