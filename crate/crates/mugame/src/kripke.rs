//! Finite Kripke models: construction, validation, JSON serialization and
//! seeded random generation.
//!
//! States are stored sorted lexicographically and addressed by dense index,
//! so sets of states are bitsets and save/load round-trips on the canonical
//! form. Dead-end states are legal; the modal clauses handle them.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a state in its carrier model (states sorted lexicographically).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A dense subset of a model's states.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    universe: u32,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet {
            universe: universe as u32,
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.mask_tail();
        s
    }

    pub fn singleton(universe: usize, id: StateId) -> Self {
        let mut s = Self::empty(universe);
        s.insert(id);
        s
    }

    pub fn universe(&self) -> usize {
        self.universe as usize
    }

    pub fn insert(&mut self, id: StateId) {
        assert!(id.0 < self.universe, "state out of range");
        self.words[id.index() / 64] |= 1u64 << (id.index() % 64);
    }

    pub fn contains(&self, id: StateId) -> bool {
        id.0 < self.universe && self.words[id.index() / 64] >> (id.index() % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn complement(&self) -> StateSet {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        assert_eq!(self.universe, other.universe, "state set universe mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        assert_eq!(self.universe, other.universe, "state set universe mismatch");
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.universe).map(StateId).filter(|&id| self.contains(id))
    }

    fn zip_with(&self, other: &StateSet, f: impl Fn(u64, u64) -> u64) -> StateSet {
        assert_eq!(self.universe, other.universe, "state set universe mismatch");
        StateSet {
            universe: self.universe,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn mask_tail(&mut self) {
        let extra = self.words.len() * 64 - self.universe as usize;
        if extra > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX >> extra;
            }
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|s| s.0)).finish()
    }
}

#[derive(Debug, Error)]
pub enum KripkeError {
    #[error("malformed model document: {0}")]
    Malformed(String),
    #[error("duplicate state id {0:?}")]
    DuplicateState(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("a model must have at least one state")]
    EmptyStates,
    #[error("edge density must lie in [0, 1], got {0}")]
    InvalidDensity(f64),
}

/// On-disk form of a model. Canonical saves sort states, edges and
/// valuation keys lexicographically.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    pub states: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub valuation: BTreeMap<String, Vec<String>>,
}

/// A finite Kripke model: states, a transition relation and a proposition
/// valuation. Immutable after construction.
#[derive(Clone, PartialEq, Debug)]
pub struct KripkeModel {
    states: Vec<String>,
    succ: Vec<StateSet>,
    valuation: BTreeMap<String, StateSet>,
}

impl KripkeModel {
    pub fn new(
        states: Vec<String>,
        edges: &[(String, String)],
        valuation: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, KripkeError> {
        if states.is_empty() {
            return Err(KripkeError::EmptyStates);
        }
        let mut states = states;
        states.sort();
        for pair in states.windows(2) {
            if pair[0] == pair[1] {
                return Err(KripkeError::DuplicateState(pair[0].clone()));
            }
        }
        let n = states.len();
        let resolve = |name: &str| -> Result<StateId, KripkeError> {
            states
                .binary_search_by(|s| s.as_str().cmp(name))
                .map(|i| StateId(i as u32))
                .map_err(|_| KripkeError::UnknownState(name.to_string()))
        };
        let mut succ = vec![StateSet::empty(n); n];
        for (from, to) in edges {
            let f = resolve(from)?;
            let t = resolve(to)?;
            succ[f.index()].insert(t);
        }
        let mut val = BTreeMap::new();
        for (prop, members) in valuation {
            let mut set = StateSet::empty(n);
            for m in members {
                set.insert(resolve(m)?);
            }
            val.insert(prop.clone(), set);
        }
        Ok(KripkeModel {
            states,
            succ,
            valuation: val,
        })
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self, KripkeError> {
        Self::new(doc.states.clone(), &doc.edges, &doc.valuation)
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut edges = Vec::new();
        for (i, set) in self.succ.iter().enumerate() {
            for t in set.iter() {
                edges.push((self.states[i].clone(), self.states[t.index()].clone()));
            }
        }
        ModelDoc {
            states: self.states.clone(),
            edges,
            valuation: self
                .valuation
                .iter()
                .map(|(p, set)| {
                    (p.clone(), set.iter().map(|s| self.name(s).to_string()).collect())
                })
                .collect(),
        }
    }

    pub fn load(text: &str) -> Result<Self, KripkeError> {
        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| KripkeError::Malformed(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn save(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model serializes")
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn resolve(&self, name: &str) -> Result<StateId, KripkeError> {
        self.states
            .binary_search_by(|s| s.as_str().cmp(name))
            .map(|i| StateId(i as u32))
            .map_err(|_| KripkeError::UnknownState(name.to_string()))
    }

    pub fn name(&self, id: StateId) -> &str {
        &self.states[id.index()]
    }

    pub fn successors(&self, id: StateId) -> &StateSet {
        &self.succ[id.index()]
    }

    /// The set where `prop` holds; empty for propositions the valuation
    /// does not mention.
    pub fn proposition(&self, prop: &str) -> StateSet {
        self.valuation
            .get(prop)
            .cloned()
            .unwrap_or_else(|| StateSet::empty(self.state_count()))
    }

    /// Renders a set as its sorted state names.
    pub fn set_names(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|s| self.name(s).to_string()).collect()
    }

    /// Deterministic random model: every directed pair is an edge with
    /// probability `edge_density`, every (state, proposition) pair holds
    /// with probability 1/2.
    pub fn random(
        seed: u64,
        n_states: usize,
        edge_density: f64,
        props: &[String],
    ) -> Result<Self, KripkeError> {
        if n_states < 1 {
            return Err(KripkeError::EmptyStates);
        }
        if !(0.0..=1.0).contains(&edge_density) || edge_density.is_nan() {
            return Err(KripkeError::InvalidDensity(edge_density));
        }
        let width = (n_states - 1).to_string().len();
        let states: Vec<String> = (0..n_states).map(|i| format!("w{i:0width$}")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_states;
        let mut succ = vec![StateSet::empty(n); n];
        for (i, set) in succ.iter_mut().enumerate() {
            let _ = i;
            for j in 0..n {
                if rng.gen_bool(edge_density) {
                    set.insert(StateId(j as u32));
                }
            }
        }
        let mut valuation = BTreeMap::new();
        for p in props {
            let mut set = StateSet::empty(n);
            for j in 0..n {
                if rng.gen_bool(0.5) {
                    set.insert(StateId(j as u32));
                }
            }
            valuation.insert(p.clone(), set);
        }
        Ok(KripkeModel {
            states,
            succ,
            valuation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const M3: &str = r#"{
        "states": ["w0", "w1", "w2"],
        "edges": [["w0", "w1"], ["w1", "w2"]],
        "valuation": {"p": ["w2"]}
    }"#;

    #[test]
    fn load_chain() {
        let m = KripkeModel::load(M3).unwrap();
        assert_eq!(m.state_count(), 3);
        assert_eq!(m.to_doc().edges.len(), 2);
        let p = m.proposition("p");
        assert_eq!(m.set_names(&p), vec!["w2"]);
    }

    #[test]
    fn load_rejects_unknown_state() {
        let doc = r#"{"states": ["w0"], "edges": [["w0", "zz"]], "valuation": {}}"#;
        assert!(matches!(
            KripkeModel::load(doc),
            Err(KripkeError::UnknownState(s)) if s == "zz"
        ));
    }

    #[test]
    fn load_rejects_empty_states() {
        let doc = r#"{"states": [], "edges": [], "valuation": {}}"#;
        assert!(matches!(KripkeModel::load(doc), Err(KripkeError::EmptyStates)));
    }

    #[test]
    fn load_rejects_duplicates_and_garbage() {
        let doc = r#"{"states": ["a", "a"], "edges": [], "valuation": {}}"#;
        assert!(matches!(KripkeModel::load(doc), Err(KripkeError::DuplicateState(_))));
        assert!(matches!(KripkeModel::load("not json"), Err(KripkeError::Malformed(_))));
    }

    #[test]
    fn save_is_canonical_and_round_trips() {
        // States given out of order come back sorted.
        let doc = r#"{"states": ["b", "a"], "edges": [["b", "a"]], "valuation": {"p": ["b", "a"]}}"#;
        let m = KripkeModel::load(doc).unwrap();
        assert_eq!(m.state_names(), ["a", "b"]);
        let saved = m.save();
        let reloaded = KripkeModel::load(&saved).unwrap();
        assert_eq!(reloaded, m);
    }

    #[test]
    fn successors_follow_edges() {
        let m = KripkeModel::load(M3).unwrap();
        let w0 = m.resolve("w0").unwrap();
        let w2 = m.resolve("w2").unwrap();
        assert_eq!(m.set_names(m.successors(w0)), vec!["w1"]);
        assert!(m.successors(w2).is_empty()); // dead end permitted

        let cyc = r#"{"states": ["u0", "u1"], "edges": [["u0","u1"],["u1","u0"]], "valuation": {}}"#;
        let c = KripkeModel::load(cyc).unwrap();
        let u0 = c.resolve("u0").unwrap();
        assert_eq!(c.set_names(c.successors(u0)), vec!["u1"]);
    }

    #[test]
    fn random_is_deterministic() {
        let props = vec!["p".to_string(), "q".to_string()];
        let a = KripkeModel::random(7, 5, 0.4, &props).unwrap();
        let b = KripkeModel::random(7, 5, 0.4, &props).unwrap();
        assert_eq!(a, b);
        let c = KripkeModel::random(8, 5, 0.4, &props).unwrap();
        assert!(a != c || a.save() == c.save()); // different seed, almost surely different
    }

    #[test]
    fn random_density_extremes() {
        let props = vec!["p".to_string()];
        let none = KripkeModel::random(1, 4, 0.0, &props).unwrap();
        assert!(none.states().all(|w| none.successors(w).is_empty()));
        let all = KripkeModel::random(1, 4, 1.0, &props).unwrap();
        let total: usize = all.states().map(|w| all.successors(w).len()).sum();
        assert_eq!(total, 16); // complete relation including self-loops
        assert!(KripkeModel::random(1, 0, 0.5, &props).is_err());
        assert!(KripkeModel::random(1, 3, 1.5, &props).is_err());
    }

    #[test]
    fn random_round_trips_through_save() {
        for seed in 0..100u64 {
            let props = vec!["p".to_string(), "q".to_string()];
            let n = 1 + (seed as usize % 6);
            let m = KripkeModel::random(seed, n, 0.3, &props).unwrap();
            let back = KripkeModel::load(&m.save()).unwrap();
            assert_eq!(back, m, "round trip failed for seed {seed}");
        }
    }

    #[test]
    fn state_set_algebra() {
        let mut a = StateSet::empty(70);
        a.insert(StateId(0));
        a.insert(StateId(69));
        let full = StateSet::full(70);
        assert_eq!(full.len(), 70);
        assert!(a.is_subset(&full));
        assert!(!full.is_subset(&a));
        assert_eq!(a.complement().len(), 68);
        assert_eq!(a.union(&a.complement()), full);
        assert!(a.intersection(&a.complement()).is_empty());
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![StateId(0), StateId(69)]);
    }
}
