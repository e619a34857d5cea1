//! Explicit finite labelled transition systems and the relation checks on them.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::relations::Relation;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteLts {
    states: Vec<String>,
    actions: Vec<String>,
    state_index: HashMap<String, usize>,
    action_index: HashMap<String, usize>,
    out: Vec<Vec<(usize, usize)>>,
    transition_count: usize,
}

impl FiniteLts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of the named state, adding it if new.
    pub fn add_state(&mut self, name: &str) -> usize {
        if let Some(&i) = self.state_index.get(name) {
            return i;
        }
        let i = self.states.len();
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), i);
        self.out.push(Vec::new());
        i
    }

    pub fn add_action(&mut self, name: &str) -> usize {
        if let Some(&i) = self.action_index.get(name) {
            return i;
        }
        let i = self.actions.len();
        self.actions.push(name.to_string());
        self.action_index.insert(name.to_string(), i);
        i
    }

    /// Adds `s -a-> t`; duplicates are ignored.
    pub fn add_transition(&mut self, s: usize, a: usize, t: usize) -> Result<()> {
        if s >= self.states.len() || t >= self.states.len() || a >= self.actions.len() {
            return Err(Error::Invalid("transition references an undeclared state or action".into()));
        }
        if !self.out[s].contains(&(a, t)) {
            self.out[s].push((a, t));
            self.transition_count += 1;
        }
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transition_count
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn successors(&self, s: usize) -> &[(usize, usize)] {
        &self.out[s]
    }

    /// All transitions as `(source, action, target)`, sorted.
    pub fn transitions(&self) -> Vec<(usize, usize, usize)> {
        let mut v: Vec<_> = self
            .out
            .iter()
            .enumerate()
            .flat_map(|(s, o)| o.iter().map(move |&(a, t)| (s, a, t)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn initial_actions(&self, s: usize) -> BTreeSet<usize> {
        self.out[s].iter().map(|&(a, _)| a).collect()
    }

    /// States reachable from the given roots.
    pub fn reachable(&self, roots: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &r in roots {
            if !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
        let mut order = Vec::new();
        while let Some(s) = stack.pop() {
            order.push(s);
            for &(_, t) in &self.out[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        order.sort_unstable();
        order
    }
}

/// `s -a-> t` lines, sorted by state, action and target names.
impl fmt::Display for FiniteLts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lines: Vec<(&str, &str, &str)> = self
            .transitions()
            .into_iter()
            .map(|(s, a, t)| (self.state_name(s), self.action_name(a), self.state_name(t)))
            .collect();
        lines.sort_unstable();
        for (s, a, t) in lines {
            writeln!(f, "{s} -{a}-> {t}")?;
        }
        Ok(())
    }
}

/// Bisimulation classes of the states reachable from `roots`, by signature refinement.
/// Unreachable states get `usize::MAX`.
pub fn bisimulation_classes(lts: &FiniteLts, roots: &[usize]) -> Vec<usize> {
    let states = lts.reachable(roots);
    let mut block = vec![usize::MAX; lts.state_count()];
    for &s in &states {
        block[s] = 0;
    }
    let mut count = 1;
    loop {
        let mut ids: HashMap<(usize, Vec<(usize, usize)>), usize> = HashMap::new();
        let mut next = block.clone();
        for &s in &states {
            let mut sig: Vec<(usize, usize)> = lts.out[s].iter().map(|&(a, t)| (a, block[t])).collect();
            sig.sort_unstable();
            sig.dedup();
            let n = ids.len();
            next[s] = *ids.entry((block[s], sig)).or_insert(n);
        }
        block = next;
        if ids.len() == count {
            return block;
        }
        count = ids.len();
    }
}

/// Does `s rel t` hold in the finite system?
pub fn finite_check(lts: &FiniteLts, s: usize, t: usize, rel: Relation) -> Result<bool> {
    let observable = vec![true; lts.action_count()];
    finite_check_observing(lts, s, t, rel, &observable)
}

/// As [`finite_check`], with the completed/ready side conditions comparing only
/// the actions flagged in `observable`.
pub fn finite_check_observing(
    lts: &FiniteLts,
    s: usize,
    t: usize,
    rel: Relation,
    observable: &[bool],
) -> Result<bool> {
    for x in [s, t] {
        if x >= lts.state_count() {
            return Err(Error::Unknown {
                kind: "state",
                name: x.to_string(),
            });
        }
    }
    if rel == Relation::Bisim {
        let classes = bisimulation_classes(lts, &[s, t]);
        return Ok(classes[s] == classes[t]);
    }
    let game = FiniteGame {
        lts,
        rel,
        observable,
    };
    Ok(rel
        .finite_modes()
        .into_iter()
        .all(|m| game.defender_wins(s, t, m)))
}

/// The side Attacker currently plays on and the side switches left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Mode {
    right: bool,
    switches: u8,
}

impl Relation {
    fn finite_modes(self) -> Vec<Mode> {
        let left = Mode { right: false, switches: 0 };
        let right = Mode { right: true, switches: 0 };
        match self {
            Relation::SimPre | Relation::CsimPre | Relation::RsimPre => vec![left],
            Relation::SimEq | Relation::CsimEq | Relation::RsimEq => vec![left, right],
            Relation::TwosimPre => vec![Mode { switches: 1, ..left }],
            Relation::TwosimEq => vec![Mode { switches: 1, ..left }, Mode { switches: 1, ..right }],
            Relation::Bisim => unreachable!("bisimilarity uses partition refinement"),
        }
    }
}

struct FiniteGame<'a> {
    lts: &'a FiniteLts,
    rel: Relation,
    observable: &'a [bool],
}

impl FiniteGame<'_> {
    fn head_ok(&self, s: usize, t: usize) -> bool {
        let visible = |x: usize| -> BTreeSet<usize> {
            self.lts
                .initial_actions(x)
                .into_iter()
                .filter(|&a| self.observable[a])
                .collect()
        };
        match self.rel.preorder() {
            Relation::CsimPre => visible(s).is_empty() == visible(t).is_empty(),
            Relation::RsimPre => visible(s) == visible(t),
            _ => true,
        }
    }

    /// Builds the explicit game graph from `(s, t, mode)` and runs the Attacker attractor.
    fn defender_wins(&self, s: usize, t: usize, mode: Mode) -> bool {
        // Attacker nodes: (left, right, mode). Defender nodes: Attacker moved on a
        // side and Defender must answer with `a` from `from`.
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        enum Node {
            Att(usize, usize, Mode),
            Def { moved: usize, from: usize, a: usize, right: bool, mode: Mode },
        }
        let mut ids: HashMap<Node, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        let root = Node::Att(s, t, mode);
        ids.insert(root, 0);
        nodes.push(root);
        succ.push(Vec::new());
        queue.push_back(0);
        let mut intern = |n: Node, nodes: &mut Vec<Node>, succ: &mut Vec<Vec<usize>>, queue: &mut VecDeque<usize>| {
            *ids.entry(n).or_insert_with(|| {
                nodes.push(n);
                succ.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            })
        };
        let mut losing: Vec<bool> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let node = nodes[i];
            let mut out = Vec::new();
            match node {
                Node::Att(l, r, m) => {
                    if losing.len() <= i {
                        losing.resize(i + 1, false);
                    }
                    if !self.head_ok(l, r) {
                        losing[i] = true;
                    } else {
                        for attack_right in [false, true] {
                            let next_mode = if attack_right == m.right {
                                m
                            } else if m.switches > 0 {
                                Mode { right: attack_right, switches: m.switches - 1 }
                            } else {
                                continue;
                            };
                            let (mover, from) = if attack_right { (r, l) } else { (l, r) };
                            for &(a, moved) in self.lts.successors(mover) {
                                out.push(Node::Def { moved, from, a, right: attack_right, mode: next_mode });
                            }
                        }
                    }
                }
                Node::Def { moved, from, a, right, mode } => {
                    for &(b, reply) in self.lts.successors(from) {
                        if b == a {
                            let next = if right { Node::Att(reply, moved, mode) } else { Node::Att(moved, reply, mode) };
                            out.push(next);
                        }
                    }
                }
            }
            for n in out {
                let j = intern(n, &mut nodes, &mut succ, &mut queue);
                succ[i].push(j);
            }
        }
        losing.resize(nodes.len(), false);

        // Attacker attractor: Att node wins if losing or some successor wins;
        // Def node wins if all successors win.
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (u, vs) in succ.iter().enumerate() {
            for &v in vs {
                pred[v].push(u);
            }
        }
        let mut remaining: Vec<usize> = succ.iter().map(Vec::len).collect();
        let mut won = vec![false; nodes.len()];
        let mut work: Vec<usize> = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            let goal = match n {
                Node::Att(..) => losing[i],
                Node::Def { .. } => succ[i].is_empty(),
            };
            if goal {
                won[i] = true;
                work.push(i);
            }
        }
        while let Some(v) = work.pop() {
            for &u in &pred[v] {
                if won[u] {
                    continue;
                }
                match nodes[u] {
                    Node::Att(..) => {
                        won[u] = true;
                        work.push(u);
                    }
                    Node::Def { .. } => {
                        remaining[u] -= 1;
                        if remaining[u] == 0 {
                            won[u] = true;
                            work.push(u);
                        }
                    }
                }
            }
        }
        !won[0]
    }
}
