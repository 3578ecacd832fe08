use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ReprError, Result};
use crate::bits::Bits;

/// Complete DFA over `{0, 1}` with start state 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DfaFile", into = "DfaFile")]
pub struct Dfa {
    accepting: Vec<bool>,
    delta: Vec<[usize; 2]>,
}

/// On-disk form: accepting states as a sorted index list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaFile {
    pub states: usize,
    pub accepting: Vec<usize>,
    pub delta: Vec<[usize; 2]>,
}

impl TryFrom<DfaFile> for Dfa {
    type Error = ReprError;

    fn try_from(file: DfaFile) -> Result<Self> {
        if file.delta.len() != file.states {
            return Err(ReprError::InvalidDfa(format!("{} transition rows for {} states", file.delta.len(), file.states)));
        }
        let mut accepting = vec![false; file.states];
        for &s in &file.accepting {
            *accepting
                .get_mut(s)
                .ok_or_else(|| ReprError::InvalidDfa(format!("accepting state {s} out of range")))? = true;
        }
        Dfa::new(accepting, file.delta)
    }
}

impl From<Dfa> for DfaFile {
    fn from(dfa: Dfa) -> Self {
        DfaFile {
            states: dfa.delta.len(),
            accepting: (0..dfa.delta.len()).filter(|&s| dfa.accepting[s]).collect(),
            delta: dfa.delta,
        }
    }
}

/// Visited states; `trace[0]` is the start state and `trace.len() = |w| + 1`.
pub type Trace = Vec<usize>;

impl Dfa {
    pub fn new(accepting: Vec<bool>, delta: Vec<[usize; 2]>) -> Result<Self> {
        if delta.is_empty() {
            return Err(ReprError::InvalidDfa("no states".into()));
        }
        if accepting.len() != delta.len() {
            return Err(ReprError::InvalidDfa("accepting flags do not cover every state".into()));
        }
        if let Some(s) = delta.iter().position(|row| row.iter().any(|&t| t >= delta.len())) {
            return Err(ReprError::InvalidDfa(format!("state {s} has a transition out of range")));
        }
        Ok(Dfa { accepting, delta })
    }

    pub fn state_count(&self) -> usize {
        self.delta.len()
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn next(&self, state: usize, symbol: bool) -> usize {
        self.delta[state][usize::from(symbol)]
    }

    pub fn accepts(&self, w: &[bool]) -> bool {
        let end = w.iter().fold(0, |s, &b| self.next(s, b));
        self.accepting[end]
    }

    fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.delta.len()];
        let mut order = vec![0];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &t in &self.delta[s] {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }
}

pub fn run_dfa(t: &Dfa, w: &[bool]) -> (usize, Trace) {
    let mut trace = Vec::with_capacity(w.len() + 1);
    let mut state = 0;
    trace.push(state);
    for &b in w {
        state = t.next(state, b);
        trace.push(state);
    }
    (state, trace)
}

/// Trie acceptor for the positive strings. Off-tree transitions go to a
/// rejecting sink, which is only added when some transition needs it.
pub fn build_prefix_tree_dfa(sample: &[(Bits, bool)]) -> Result<Dfa> {
    let mut children: Vec<[Option<usize>; 2]> = vec![[None, None]];
    let mut label: Vec<Option<bool>> = vec![None];
    for (w, b) in sample {
        let mut node = 0;
        for bit in w.iter() {
            let slot = usize::from(bit);
            node = match children[node][slot] {
                Some(child) => child,
                None => {
                    children.push([None, None]);
                    label.push(None);
                    let child = children.len() - 1;
                    children[node][slot] = Some(child);
                    child
                }
            };
        }
        match label[node] {
            Some(existing) if existing != *b => return Err(ReprError::ContradictoryLabels(w.to_string())),
            _ => label[node] = Some(*b),
        }
    }
    let needs_sink = children.iter().any(|row| row.iter().any(Option::is_none));
    let sink = children.len();
    let mut delta: Vec<[usize; 2]> =
        children.iter().map(|row| [row[0].unwrap_or(sink), row[1].unwrap_or(sink)]).collect();
    let mut accepting: Vec<bool> = label.iter().map(|l| *l == Some(true)).collect();
    if needs_sink {
        delta.push([sink, sink]);
        accepting.push(false);
    }
    Dfa::new(accepting, delta)
}

/// Hopcroft partition refinement on the reachable part, followed by a
/// breadth-first renumbering of the blocks (symbol 0 before 1, start = 0).
pub fn minimize_dfa(t: &Dfa) -> Dfa {
    let order = t.reachable();
    let mut local = vec![usize::MAX; t.state_count()];
    for (i, &s) in order.iter().enumerate() {
        local[s] = i;
    }
    let n = order.len();
    let delta: Vec<[usize; 2]> = order.iter().map(|&s| [local[t.delta[s][0]], local[t.delta[s][1]]]).collect();
    let accepting: Vec<bool> = order.iter().map(|&s| t.accepting[s]).collect();

    let mut inverse: [Vec<Vec<usize>>; 2] = [vec![Vec::new(); n], vec![Vec::new(); n]];
    for (s, row) in delta.iter().enumerate() {
        for c in 0..2 {
            inverse[c][row[c]].push(s);
        }
    }

    let (acc, rej): (Vec<usize>, Vec<usize>) = (0..n).partition(|&s| accepting[s]);
    let mut blocks: Vec<Vec<usize>> = [acc, rej].into_iter().filter(|b| !b.is_empty()).collect();
    let mut block_of = vec![0; n];
    for (id, block) in blocks.iter().enumerate() {
        for &s in block {
            block_of[s] = id;
        }
    }
    let mut pending: Vec<[bool; 2]> = vec![[false; 2]; blocks.len()];
    let mut worklist: Vec<(usize, usize)> = Vec::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
        for c in 0..2 {
            worklist.push((smaller, c));
            pending[smaller][c] = true;
        }
    }

    let mut marked = vec![false; n];
    let mut hits = vec![0usize; n];
    while let Some((splitter, c)) = worklist.pop() {
        pending[splitter][c] = false;
        let mut preimage = Vec::new();
        for &s in &blocks[splitter] {
            for &p in &inverse[c][s] {
                if !marked[p] {
                    marked[p] = true;
                    preimage.push(p);
                }
            }
        }
        let mut touched = Vec::new();
        for &p in &preimage {
            let b = block_of[p];
            if hits[b] == 0 {
                touched.push(b);
            }
            hits[b] += 1;
        }
        for &b in &touched {
            if hits[b] < blocks[b].len() {
                let (inside, outside): (Vec<usize>, Vec<usize>) = blocks[b].iter().partition(|&&s| marked[s]);
                let fresh = blocks.len();
                for &s in &inside {
                    block_of[s] = fresh;
                }
                blocks[b] = outside;
                blocks.push(inside);
                pending.push([false; 2]);
                for d in 0..2 {
                    if pending[b][d] {
                        worklist.push((fresh, d));
                        pending[fresh][d] = true;
                    } else {
                        let smaller = if blocks[fresh].len() <= blocks[b].len() { fresh } else { b };
                        worklist.push((smaller, d));
                        pending[smaller][d] = true;
                    }
                }
            }
            hits[b] = 0;
        }
        for p in preimage {
            marked[p] = false;
        }
    }

    // Breadth-first renumbering of the quotient automaton.
    let mut number = vec![usize::MAX; blocks.len()];
    let mut queue = VecDeque::from([block_of[0]]);
    number[block_of[0]] = 0;
    let mut out_delta = Vec::with_capacity(blocks.len());
    let mut out_accepting = Vec::with_capacity(blocks.len());
    let mut next_id = 1;
    while let Some(b) = queue.pop_front() {
        let representative = blocks[b][0];
        let mut row = [0; 2];
        for c in 0..2 {
            let target = block_of[delta[representative][c]];
            if number[target] == usize::MAX {
                number[target] = next_id;
                next_id += 1;
                queue.push_back(target);
            }
            row[c] = number[target];
        }
        out_delta.push(row);
        out_accepting.push(accepting[representative]);
    }
    Dfa { accepting: out_accepting, delta: out_delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(text: &str) -> Bits {
        text.parse().unwrap()
    }

    fn parity() -> Dfa {
        Dfa::new(vec![false, true], vec![[0, 1], [1, 0]]).unwrap()
    }

    #[test]
    fn run_records_every_state() {
        let (end, trace) = run_dfa(&parity(), &[]);
        assert_eq!((end, trace), (0, vec![0]));
        let w = bits("101");
        let (end, trace) = run_dfa(&parity(), w.as_slice());
        assert_eq!(end, 0);
        assert_eq!(trace, vec![0, 1, 1, 0]);
        let (end, _) = run_dfa(&parity(), bits("100").as_slice());
        assert_eq!(end, 1);
        assert!(parity().is_accepting(end));
    }

    #[test]
    fn two_leaf_prefix_tree() {
        let t = build_prefix_tree_dfa(&[(bits("0"), false), (bits("1"), true)]).unwrap();
        assert_eq!(t.state_count(), 4);
        assert_eq!(t.delta, vec![[1, 2], [3, 3], [3, 3], [3, 3]]);
        assert!(!t.accepts(bits("0").as_slice()));
        assert!(t.accepts(bits("1").as_slice()));
        assert!(!t.accepts(bits("11").as_slice()));
        assert!(!t.accepts(&[]));
    }

    #[test]
    fn contradictory_labels_fail() {
        let err = build_prefix_tree_dfa(&[(bits("01"), false), (bits("01"), true)]).unwrap_err();
        assert_eq!(err, ReprError::ContradictoryLabels("01".into()));
    }

    #[test]
    fn minimal_parity_is_fixed_point() {
        assert_eq!(minimize_dfa(&parity()), parity());
    }

    #[test]
    fn equivalent_leaves_merge() {
        // Accepts exactly "0" and "1"; the two accepting leaves are equivalent.
        let t = build_prefix_tree_dfa(&[(bits("0"), true), (bits("1"), true)]).unwrap();
        let m = minimize_dfa(&t);
        assert_eq!(m.state_count(), 3);
        assert_eq!(m.delta, vec![[1, 1], [2, 2], [2, 2]]);
        assert_eq!(m.accepting, vec![false, true, false]);
    }

    #[test]
    fn unreachable_states_are_dropped() {
        let t = Dfa::new(vec![false, true, true], vec![[0, 1], [1, 0], [2, 2]]).unwrap();
        assert_eq!(minimize_dfa(&t), parity());
    }

    #[test]
    fn dfa_file_round_trip() {
        let t = build_prefix_tree_dfa(&[(bits("0"), false), (bits("1"), true)]).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(text, r#"{"states":4,"accepting":[2],"delta":[[1,2],[3,3],[3,3],[3,3]]}"#);
        assert_eq!(serde_json::from_str::<Dfa>(&text).unwrap(), t);
        assert!(serde_json::from_str::<Dfa>(r#"{"states":1,"accepting":[],"delta":[[0,1]]}"#).is_err());
    }
}
