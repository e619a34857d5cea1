//! P-automata: finite automata over a stack alphabet whose initial states are
//! the control states of a pushdown system.
//!
//! A transition targets a *set* of states. A configuration `p X1..Xn` is
//! accepted when there is a run from `{p}` in which every branch ends in a
//! final state after reading the whole stack. Nondeterministic automata are the
//! special case where every target set is a singleton; a transition to the
//! empty set accepts whatever lies below it.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::system::Configuration;

/// Why a transition exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Part of the automaton handed to the saturation.
    Input,
    /// Added for a rule owned by the existential player (tag identifies the rule).
    Rule(u32),
    /// Added for a universal head: every rule out of the head contributed.
    Universal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: u32,
    pub symbol: u32,
    /// Sorted, duplicate-free.
    pub to: Box<[u32]>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default)]
pub struct PAutomaton {
    control_count: u32,
    state_count: u32,
    finals: Vec<bool>,
    transitions: Vec<Transition>,
    index: HashMap<(u32, u32), Vec<usize>>,
    seen: HashSet<(u32, u32, Box<[u32]>)>,
    /// Intermediate states created by forward saturation, keyed by (control state, symbol).
    pub(crate) mid_states: HashMap<(u32, u32), u32>,
}

impl PAutomaton {
    /// An automaton with one initial state per control state and nothing accepted.
    pub fn new(control_count: usize) -> Self {
        PAutomaton {
            control_count: control_count as u32,
            state_count: control_count as u32,
            finals: vec![false; control_count],
            ..Default::default()
        }
    }

    /// Accepts exactly the listed configurations.
    pub fn from_configurations<I>(control_count: usize, configs: I) -> Self
    where
        I: IntoIterator<Item = (u32, Vec<u32>)>,
    {
        let mut a = PAutomaton::new(control_count);
        for (p, stack) in configs {
            if stack.is_empty() {
                a.set_final(p, true);
                continue;
            }
            let mut cur = p;
            for &x in &stack {
                let next = a.add_state(false);
                a.add_transition(cur, x, vec![next], Provenance::Input);
                cur = next;
            }
            a.set_final(cur, true);
        }
        a
    }

    /// `{ r ε | r ∈ states }`.
    pub fn empty_stacks<I: IntoIterator<Item = u32>>(control_count: usize, states: I) -> Self {
        let mut a = PAutomaton::new(control_count);
        for s in states {
            a.set_final(s, true);
        }
        a
    }

    /// `{ p X γ | (p, X) ∈ heads, γ ∈ Γ* }`.
    pub fn heads_then_anything<I>(control_count: usize, symbol_count: usize, heads: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut a = PAutomaton::new(control_count);
        let any = a.add_state(true);
        for y in 0..symbol_count as u32 {
            a.add_transition(any, y, vec![any], Provenance::Input);
        }
        for (p, x) in heads {
            a.add_transition(p, x, vec![any], Provenance::Input);
        }
        a
    }

    /// Every configuration.
    pub fn universal(control_count: usize, symbol_count: usize) -> Self {
        let mut a = PAutomaton::heads_then_anything(control_count, symbol_count, []);
        let any = control_count as u32;
        for p in 0..control_count as u32 {
            a.set_final(p, true);
            for y in 0..symbol_count as u32 {
                a.add_transition(p, y, vec![any], Provenance::Input);
            }
        }
        a
    }

    pub fn control_count(&self) -> usize {
        self.control_count as usize
    }

    pub fn state_count(&self) -> usize {
        self.state_count as usize
    }

    pub fn is_initial(&self, s: u32) -> bool {
        s < self.control_count
    }

    pub fn add_state(&mut self, is_final: bool) -> u32 {
        let s = self.state_count;
        self.state_count += 1;
        self.finals.push(is_final);
        s
    }

    pub fn set_final(&mut self, s: u32, is_final: bool) {
        self.finals[s as usize] = is_final;
    }

    pub fn is_final(&self, s: u32) -> bool {
        self.finals[s as usize]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition(&self, i: usize) -> &Transition {
        &self.transitions[i]
    }

    /// Indices of the transitions leaving `from` on `symbol`, in insertion order.
    pub fn outgoing(&self, from: u32, symbol: u32) -> &[usize] {
        self.index
            .get(&(from, symbol))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_alternating(&self) -> bool {
        self.transitions.iter().any(|t| t.to.len() != 1)
    }

    pub fn contains(&self, from: u32, symbol: u32, to: &[u32]) -> bool {
        self.seen.contains(&(from, symbol, to.into()))
    }

    /// True if some transition `from -symbol-> S'` with `S' ⊆ to` exists.
    pub fn subsumed(&self, from: u32, symbol: u32, to: &[u32]) -> bool {
        self.outgoing(from, symbol)
            .iter()
            .any(|&i| is_subset(&self.transitions[i].to, to))
    }

    /// Adds a transition; returns its index, or `None` if it was already present.
    pub fn add_transition(
        &mut self,
        from: u32,
        symbol: u32,
        mut to: Vec<u32>,
        provenance: Provenance,
    ) -> Option<usize> {
        to.sort_unstable();
        to.dedup();
        let to: Box<[u32]> = to.into();
        if !self.seen.insert((from, symbol, to.clone())) {
            return None;
        }
        let i = self.transitions.len();
        self.transitions.push(Transition {
            from,
            symbol,
            to,
            provenance,
        });
        self.index.entry((from, symbol)).or_default().push(i);
        Some(i)
    }

    /// `layers[i][s]`: does state `s` accept `stack[i..]`? `layers[stack.len()]` is the final set.
    pub fn acceptance_layers(&self, stack: &[u32]) -> Vec<Vec<bool>> {
        let n = self.state_count as usize;
        let mut layers = vec![Vec::new(); stack.len() + 1];
        layers[stack.len()] = self.finals.clone();
        for i in (0..stack.len()).rev() {
            let below = &layers[i + 1];
            let mut cur = vec![false; n];
            for (s, slot) in cur.iter_mut().enumerate() {
                *slot = self
                    .outgoing(s as u32, stack[i])
                    .iter()
                    .any(|&t| self.transitions[t].to.iter().all(|&q| below[q as usize]));
            }
            layers[i] = cur;
        }
        layers
    }

    pub fn accepts(&self, state: u32, stack: &[u32]) -> bool {
        if state >= self.state_count {
            return false;
        }
        self.acceptance_layers(stack)[0][state as usize]
    }

    /// Stacks accepted from `state`, up to the given height (test helper and debugging aid).
    pub fn enumerate(&self, state: u32, symbols: u32, max_height: usize) -> BTreeSet<Vec<u32>> {
        let mut out = BTreeSet::new();
        let mut frontier: Vec<Vec<u32>> = vec![vec![]];
        for h in 0..=max_height {
            for w in &frontier {
                if self.accepts(state, w) {
                    out.insert(w.clone());
                }
            }
            if h == max_height {
                break;
            }
            frontier = frontier
                .iter()
                .flat_map(|w| {
                    (0..symbols).map(move |y| {
                        let mut v = w.clone();
                        v.push(y);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

pub(crate) fn is_subset(a: &[u32], b: &[u32]) -> bool {
    // both sorted
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Acceptance of a configuration of the system the automaton was built for.
pub fn member(auto: &PAutomaton, c: &Configuration) -> bool {
    let stack: Vec<u32> = c.stack.iter().map(|s| s.0).collect();
    auto.accepts(c.state.0, &stack)
}

/// Is `{ α | both automata accept state·α }` infinite?
///
/// Builds the product over sets of states (singletons for nondeterministic
/// inputs) and looks for a cycle that is reachable and co-reachable.
pub fn infinite_intersection(a1: &PAutomaton, a2: &PAutomaton, state: u32) -> bool {
    type Node = (Box<[u32]>, Box<[u32]>);
    let mut ids: HashMap<Node, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let symbols: BTreeSet<u32> = a1
        .transitions
        .iter()
        .map(|t| t.symbol)
        .filter(|y| a2.transitions.iter().any(|t| t.symbol == *y))
        .collect();

    let start: Node = (vec![state].into(), vec![state].into());
    ids.insert(start.clone(), 0);
    nodes.push(start);
    succ.push(Vec::new());
    let mut i = 0;
    while i < nodes.len() {
        let (s1, s2) = nodes[i].clone();
        for &y in &symbols {
            let n1 = set_successors(a1, &s1, y);
            if n1.is_empty() {
                continue;
            }
            let n2 = set_successors(a2, &s2, y);
            for t1 in &n1 {
                for t2 in &n2 {
                    let node: Node = (t1.clone(), t2.clone());
                    let id = *ids.entry(node.clone()).or_insert_with(|| {
                        nodes.push(node);
                        succ.push(Vec::new());
                        nodes.len() - 1
                    });
                    succ[i].push(id);
                }
            }
        }
        i += 1;
    }
    let accepting: Vec<bool> = nodes
        .iter()
        .map(|(s1, s2)| s1.iter().all(|&s| a1.is_final(s)) && s2.iter().all(|&s| a2.is_final(s)))
        .collect();
    // co-reachability
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    let mut useful = accepting.clone();
    let mut stack: Vec<usize> = (0..nodes.len()).filter(|&u| accepting[u]).collect();
    while let Some(v) = stack.pop() {
        for &u in &pred[v] {
            if !useful[u] {
                useful[u] = true;
                stack.push(u);
            }
        }
    }
    has_cycle(&succ, &useful)
}

/// Successor sets of a set of states on one symbol.
fn set_successors(a: &PAutomaton, set: &[u32], y: u32) -> Vec<Box<[u32]>> {
    let mut acc: Vec<Vec<u32>> = vec![Vec::new()];
    for &s in set {
        let opts = a.outgoing(s, y);
        if opts.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for base in &acc {
            for &t in opts {
                let mut v = base.clone();
                v.extend_from_slice(&a.transitions[t].to);
                v.sort_unstable();
                v.dedup();
                next.push(v);
            }
        }
        next.sort();
        next.dedup();
        acc = next;
    }
    acc.into_iter().map(Into::into).collect()
}

/// Cycle detection restricted to nodes marked `keep` (iterative three-colour DFS).
fn has_cycle(succ: &[Vec<usize>], keep: &[bool]) -> bool {
    let n = succ.len();
    let mut colour = vec![0u8; n];
    for root in 0..n {
        if !keep[root] || colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        colour[root] = 1;
        while let Some(&mut (u, ref mut k)) = stack.last_mut() {
            if *k < succ[u].len() {
                let v = succ[u][*k];
                *k += 1;
                if !keep[v] {
                    continue;
                }
                match colour[v] {
                    0 => {
                        colour[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                colour[u] = 2;
                stack.pop();
            }
        }
    }
    false
}
