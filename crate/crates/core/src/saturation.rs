//! Saturation procedures on P-automata: backward reachability (`pre*`),
//! forward reachability (`post*`) and Attacker-reachability games on
//! pushdown arenas.
//!
//! Backward saturation and the game solver share one engine. A head `pX`
//! owned by the existential player gets `p -X-> S` whenever some rule
//! `pX -> qα` has a run `q -α-> S`; a universal head gets the union of one
//! run per rule, so a universal head without rules gets `p -X-> ∅` (accepts
//! any stack below `X`).

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use crate::automaton::{is_subset, PAutomaton, Provenance};
use crate::error::{Error, Result};
use crate::limits::{Budget, Limits};
use crate::system::VpdaSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Attacker,
    Defender,
}

#[derive(Debug, Clone)]
struct HeadRule {
    tag: u32,
    dst: u32,
    pushed: Vec<u32>,
}

#[derive(Debug, Clone)]
struct Head {
    state: u32,
    symbol: u32,
    owner: Player,
    target: bool,
    rules: Vec<HeadRule>,
}

fn minimize(mut sets: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<Vec<u32>> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| is_subset(k, &s)) {
            kept.push(s);
        }
    }
    kept
}

fn union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v.sort_unstable();
    v.dedup();
    v
}

/// Minimal sets `S` with a run `q -word-> S`.
fn runs(auto: &PAutomaton, q: u32, word: &[u32]) -> Vec<Vec<u32>> {
    let mut sets = vec![vec![q]];
    for &y in word {
        let mut next = Vec::new();
        for set in &sets {
            let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
            for &s in set {
                let opts = auto.outgoing(s, y);
                if opts.is_empty() {
                    combos.clear();
                    break;
                }
                let mut grown = Vec::with_capacity(combos.len() * opts.len());
                for c in &combos {
                    for &t in opts {
                        grown.push(union(c, &auto.transition(t).to));
                    }
                }
                combos = minimize(grown);
            }
            next.extend(combos);
        }
        sets = minimize(next);
        if sets.is_empty() {
            break;
        }
    }
    sets
}

fn saturate(auto: &mut PAutomaton, heads: &[Head], budget: &mut Budget) -> Result<()> {
    let mut watchers: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, h) in heads.iter().enumerate() {
        let mut syms: Vec<u32> = h.rules.iter().flat_map(|r| r.pushed.iter().copied()).collect();
        syms.sort_unstable();
        syms.dedup();
        for y in syms {
            watchers.entry(y).or_default().push(i);
        }
    }
    let mut queue: VecDeque<usize> = (0..heads.len()).collect();
    let mut queued = vec![true; heads.len()];
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        budget.tick()?;
        let h = &heads[i];
        let mut new_sets: Vec<(Vec<u32>, Provenance)> = Vec::new();
        if h.target {
            new_sets.push((Vec::new(), Provenance::Input));
        } else {
            match h.owner {
                Player::Attacker => {
                    for r in &h.rules {
                        for s in runs(auto, r.dst, &r.pushed) {
                            new_sets.push((s, Provenance::Rule(r.tag)));
                        }
                    }
                }
                Player::Defender => {
                    let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
                    for r in &h.rules {
                        let opts = runs(auto, r.dst, &r.pushed);
                        if opts.is_empty() {
                            combos.clear();
                            break;
                        }
                        let mut grown = Vec::with_capacity(combos.len() * opts.len());
                        for c in &combos {
                            for o in &opts {
                                grown.push(union(c, o));
                            }
                        }
                        combos = minimize(grown);
                    }
                    new_sets.extend(combos.into_iter().map(|s| (s, Provenance::Universal)));
                }
            }
        }
        let mut added = false;
        for (s, prov) in new_sets {
            if auto.subsumed(h.state, h.symbol, &s) {
                continue;
            }
            if auto.add_transition(h.state, h.symbol, s, prov).is_some() {
                added = true;
            }
        }
        if added {
            budget.check_transitions(auto.transition_count())?;
            if let Some(ws) = watchers.get(&h.symbol) {
                for &w in ws {
                    if !queued[w] {
                        queued[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Redirects input transitions that enter initial states to fresh copies, so
/// that saturation may treat initial states as "nothing read yet".
fn normalize(a: &PAutomaton) -> PAutomaton {
    let entered: HashSet<u32> = a
        .transitions()
        .iter()
        .filter(|t| t.provenance == Provenance::Input)
        .flat_map(|t| t.to.iter().copied())
        .filter(|&s| a.is_initial(s))
        .collect();
    if entered.is_empty() {
        return a.clone();
    }
    let mut out = PAutomaton::new(a.control_count());
    for s in a.control_count() as u32..a.state_count() as u32 {
        out.add_state(a.is_final(s));
    }
    for p in 0..a.control_count() as u32 {
        out.set_final(p, a.is_final(p));
    }
    let mut copy: HashMap<u32, u32> = HashMap::new();
    let mut entered: Vec<u32> = entered.into_iter().collect();
    entered.sort_unstable();
    for s in entered {
        copy.insert(s, out.add_state(a.is_final(s)));
    }
    let map = |t: &[u32], prov: Provenance| -> Vec<u32> {
        t.iter()
            .map(|s| match (prov, copy.get(s)) {
                (Provenance::Input, Some(&c)) => c,
                _ => *s,
            })
            .collect()
    };
    for t in a.transitions() {
        let to = map(&t.to, t.provenance);
        out.add_transition(t.from, t.symbol, to.clone(), t.provenance);
        if let Some(&c) = copy.get(&t.from) {
            out.add_transition(c, t.symbol, to, t.provenance);
        }
    }
    out.mid_states = a.mid_states.clone();
    out
}

fn check_automaton(system: &VpdaSystem, a: &PAutomaton) -> Result<()> {
    if a.control_count() != system.state_count() {
        return Err(Error::Invalid(format!(
            "automaton has {} initial states, system has {} control states",
            a.control_count(),
            system.state_count()
        )));
    }
    Ok(())
}

/// All configurations from which some configuration accepted by `target` is reachable.
pub fn pre_star(system: &VpdaSystem, target: &PAutomaton, limits: &Limits) -> Result<PAutomaton> {
    check_automaton(system, target)?;
    let mut budget = limits.start();
    let mut auto = normalize(target);
    let mut by_head: HashMap<(u32, u32), Vec<HeadRule>> = HashMap::new();
    for (i, r) in system.rules().iter().enumerate() {
        by_head
            .entry((r.src_state.0, r.src_symbol.0))
            .or_default()
            .push(HeadRule {
                tag: i as u32,
                dst: r.dst_state.0,
                pushed: r.pushed.iter().map(|s| s.0).collect(),
            });
    }
    let mut heads: Vec<Head> = by_head
        .into_iter()
        .map(|((state, symbol), rules)| Head {
            state,
            symbol,
            owner: Player::Attacker,
            target: false,
            rules,
        })
        .collect();
    heads.sort_by_key(|h| (h.state, h.symbol));
    saturate(&mut auto, &heads, &mut budget)?;
    Ok(auto)
}

/// All configurations reachable from one accepted by `source`.
///
/// Requires a nondeterministic input and rules pushing at most two symbols.
pub fn post_star(system: &VpdaSystem, source: &PAutomaton, limits: &Limits) -> Result<PAutomaton> {
    check_automaton(system, source)?;
    if source.is_alternating() {
        return Err(Error::Invalid("forward saturation needs a nondeterministic automaton".into()));
    }
    if system.max_pushed() > 2 {
        return Err(Error::Invalid("forward saturation supports rules pushing at most two symbols".into()));
    }
    let budget = limits.start();
    let mut budget = budget;
    let src = normalize(source);
    let mut out = PAutomaton::new(src.control_count());
    for s in src.control_count() as u32..src.state_count() as u32 {
        out.add_state(src.is_final(s));
    }
    for p in 0..src.control_count() as u32 {
        out.set_final(p, src.is_final(p));
    }
    out.mid_states = src.mid_states.clone();

    // rules per head
    let mut by_head: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, r) in system.rules().iter().enumerate() {
        by_head.entry((r.src_state.0, r.src_symbol.0)).or_default().push(i);
    }
    for r in system.rules() {
        if r.pushed.len() == 2 {
            let key = (r.dst_state.0, r.pushed[0].0);
            if !out.mid_states.contains_key(&key) {
                let m = out.add_state(false);
                out.mid_states.insert(key, m);
            }
        }
    }

    type T = (u32, Option<u32>, u32);
    let mut rel: HashSet<T> = HashSet::new();
    let mut prov: HashMap<T, Provenance> = HashMap::new();
    let mut out_of: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
    let mut eps_into: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut eps_from: Vec<(u32, u32)> = Vec::new();
    let mut work: VecDeque<(T, Provenance)> = VecDeque::new();

    for t in src.transitions() {
        let key = (t.from, Some(t.symbol), t.to[0]);
        if src.is_initial(t.from) {
            work.push_back((key, t.provenance));
        } else if rel.insert(key) {
            prov.insert(key, t.provenance);
            out_of.entry(t.from).or_default().push((t.symbol, t.to[0]));
        }
    }

    while let Some((t, pv)) = work.pop_front() {
        budget.tick()?;
        if !rel.insert(t) {
            continue;
        }
        prov.insert(t, pv);
        budget.check_transitions(rel.len())?;
        let (p, gamma, q) = t;
        match gamma {
            Some(g) => {
                out_of.entry(p).or_default().push((g, q));
                for &ri in by_head.get(&(p, g)).map(Vec::as_slice).unwrap_or(&[]) {
                    let r = &system.rules()[ri];
                    let tag = Provenance::Rule(ri as u32);
                    let p2 = r.dst_state.0;
                    match r.pushed.len() {
                        0 => work.push_back(((p2, None, q), tag)),
                        1 => work.push_back(((p2, Some(r.pushed[0].0), q), tag)),
                        _ => {
                            let g1 = r.pushed[0].0;
                            let g2 = r.pushed[1].0;
                            let m = out.mid_states[&(p2, g1)];
                            work.push_back(((p2, Some(g1), m), tag));
                            let inner = (m, Some(g2), q);
                            if rel.insert(inner) {
                                prov.insert(inner, tag);
                                out_of.entry(m).or_default().push((g2, q));
                                for &p3 in eps_into.get(&m).map(Vec::as_slice).unwrap_or(&[]) {
                                    work.push_back(((p3, Some(g2), q), tag));
                                }
                            }
                        }
                    }
                }
            }
            None => {
                eps_into.entry(q).or_default().push(p);
                eps_from.push((p, q));
                for &(g, q2) in out_of.get(&q).map(Vec::as_slice).unwrap_or(&[]) {
                    work.push_back(((p, Some(g), q2), pv));
                }
            }
        }
    }

    let mut all: Vec<T> = rel.iter().copied().filter(|t| t.1.is_some()).collect();
    all.sort_unstable();
    for t in all {
        out.add_transition(t.0, t.1.unwrap(), vec![t.2], prov[&t]);
    }
    for (p, q) in eps_from {
        if out.is_final(q) {
            out.set_final(p, true);
        }
    }
    Ok(out)
}

/// A move in a pushdown arena: replace the head by `target` and `pushed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArenaMove<S, Y, L> {
    pub label: L,
    pub target: S,
    pub pushed: Vec<Y>,
}

/// A pushdown game whose positions are configurations. Ownership and the
/// goal predicate may depend on the head only.
pub trait GameArena {
    type State: Clone + Eq + Hash + Debug;
    type Symbol: Clone + Eq + Hash + Debug;
    type Label: Clone + Debug;

    fn owner(&self, state: &Self::State, top: &Self::Symbol) -> Player;
    fn defender_losing(&self, state: &Self::State, top: &Self::Symbol) -> bool;
    fn moves(
        &self,
        state: &Self::State,
        top: &Self::Symbol,
    ) -> Vec<ArenaMove<Self::State, Self::Symbol, Self::Label>>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub heads: usize,
    pub moves: usize,
    pub transitions: usize,
}

struct Interner<T> {
    ids: HashMap<T, u32>,
    items: Vec<T>,
}

impl<T: Clone + Eq + Hash> Interner<T> {
    fn new() -> Self {
        Interner {
            ids: HashMap::new(),
            items: Vec::new(),
        }
    }

    fn intern(&mut self, x: &T) -> (u32, bool) {
        if let Some(&i) = self.ids.get(x) {
            return (i, false);
        }
        let i = self.items.len() as u32;
        self.ids.insert(x.clone(), i);
        self.items.push(x.clone());
        (i, true)
    }

    fn get(&self, x: &T) -> Option<u32> {
        self.ids.get(x).copied()
    }
}

struct HeadEntry {
    owner: Player,
    tags: Vec<u32>,
}

/// Attacker's winning region, as an alternating P-automaton over the interned arena.
pub struct GameSolution<A: GameArena> {
    states: Interner<A::State>,
    symbols: Interner<A::Symbol>,
    moves: Vec<ArenaMove<u32, u32, A::Label>>,
    heads: HashMap<(u32, u32), HeadEntry>,
    automaton: PAutomaton,
    pub stats: SolveStats,
}

/// A finite Attacker strategy: every leaf is a goal head or a stuck Defender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyNode<S, Y, L> {
    pub state: S,
    pub stack: Vec<Y>,
    pub step: StrategyStep<S, Y, L>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyStep<S, Y, L> {
    Goal,
    Attack {
        label: L,
        next: Box<StrategyNode<S, Y, L>>,
    },
    /// Every Defender reply; empty when Defender is stuck.
    Replies(Vec<(L, StrategyNode<S, Y, L>)>),
}

/// Explores the heads reachable from the initial configurations and solves
/// the reachability game by alternating saturation.
pub fn solve_attacker_reachability<A: GameArena>(
    arena: &A,
    initial: &[(A::State, Vec<A::Symbol>)],
    limits: &Limits,
) -> Result<GameSolution<A>> {
    let mut budget = limits.start();
    let mut states = Interner::new();
    let mut symbols = Interner::new();
    let mut moves: Vec<ArenaMove<u32, u32, A::Label>> = Vec::new();
    let mut heads: HashMap<(u32, u32), HeadEntry> = HashMap::new();
    let mut order: Vec<(u32, u32)> = Vec::new();
    let mut targets: HashSet<(u32, u32)> = HashSet::new();

    let mut queue: VecDeque<(u32, u32)> = VecDeque::new();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut pop_states: Vec<u32> = Vec::new();
    let mut pop_seen: HashSet<u32> = HashSet::new();
    let mut bottoms: Vec<u32> = Vec::new();
    let mut bottom_seen: HashSet<u32> = HashSet::new();

    fn push_head(h: (u32, u32), seen: &mut HashSet<(u32, u32)>, queue: &mut VecDeque<(u32, u32)>) {
        if seen.insert(h) {
            queue.push_back(h);
        }
    }

    macro_rules! add_bottom {
        ($y:expr) => {{
            let y = $y;
            if bottom_seen.insert(y) {
                bottoms.push(y);
                for &p in &pop_states {
                    push_head((p, y), &mut seen, &mut queue);
                }
            }
        }};
    }

    for (s, stack) in initial {
        let (sid, _) = states.intern(s);
        let ids: Vec<u32> = stack.iter().map(|y| symbols.intern(y).0).collect();
        if let Some(&top) = ids.first() {
            push_head((sid, top), &mut seen, &mut queue);
        }
        for &y in ids.iter().skip(1) {
            add_bottom!(y);
        }
    }

    while let Some((s, y)) = queue.pop_front() {
        budget.tick()?;
        budget.check_positions(seen.len())?;
        let state = states.items[s as usize].clone();
        let sym = symbols.items[y as usize].clone();
        let owner = arena.owner(&state, &sym);
        order.push((s, y));
        if arena.defender_losing(&state, &sym) {
            targets.insert((s, y));
            heads.insert((s, y), HeadEntry { owner, tags: Vec::new() });
            continue;
        }
        let mut tags = Vec::new();
        for mv in arena.moves(&state, &sym) {
            let (t, _) = states.intern(&mv.target);
            let pushed: Vec<u32> = mv.pushed.iter().map(|z| symbols.intern(z).0).collect();
            tags.push(moves.len() as u32);
            if let Some(&top) = pushed.first() {
                push_head((t, top), &mut seen, &mut queue);
                for &z in pushed.iter().skip(1) {
                    add_bottom!(z);
                }
            } else if pop_seen.insert(t) {
                pop_states.push(t);
                for &z in &bottoms {
                    push_head((t, z), &mut seen, &mut queue);
                }
            }
            moves.push(ArenaMove {
                label: mv.label,
                target: t,
                pushed,
            });
        }
        heads.insert((s, y), HeadEntry { owner, tags });
    }

    let engine_heads: Vec<Head> = order
        .iter()
        .map(|&(s, y)| {
            let e = &heads[&(s, y)];
            Head {
                state: s,
                symbol: y,
                owner: e.owner,
                target: targets.contains(&(s, y)),
                rules: e
                    .tags
                    .iter()
                    .map(|&tag| HeadRule {
                        tag,
                        dst: moves[tag as usize].target,
                        pushed: moves[tag as usize].pushed.clone(),
                    })
                    .collect(),
            }
        })
        .collect();
    let mut automaton = PAutomaton::new(states.items.len());
    saturate(&mut automaton, &engine_heads, &mut budget)?;
    let stats = SolveStats {
        heads: heads.len(),
        moves: moves.len(),
        transitions: automaton.transition_count(),
    };
    Ok(GameSolution {
        states,
        symbols,
        moves,
        heads,
        automaton,
        stats,
    })
}

type Layers = Vec<Vec<(u32, usize)>>;

impl<A: GameArena> GameSolution<A> {
    pub fn automaton(&self) -> &PAutomaton {
        &self.automaton
    }

    fn encode(&self, stack: &[A::Symbol]) -> Vec<u32> {
        stack
            .iter()
            .map(|y| self.symbols.get(y).unwrap_or(u32::MAX))
            .collect()
    }

    /// Can Attacker force the play from this configuration into a goal?
    pub fn attacker_wins(&self, state: &A::State, stack: &[A::Symbol]) -> bool {
        match self.states.get(state) {
            Some(s) => self.automaton.accepts(s, &self.encode(stack)),
            None => false,
        }
    }

    /// Owner of an explored head.
    pub fn owner(&self, state: &A::State, top: &A::Symbol) -> Option<Player> {
        let s = self.states.get(state)?;
        let y = self.symbols.get(top)?;
        self.heads.get(&(s, y)).map(|h| h.owner)
    }

    /// Accepting run of `stack` from `state`, choosing the oldest usable transition at each state.
    fn initial_run(&self, state: u32, stack: &[u32]) -> Layers {
        let acc = self.automaton.acceptance_layers(stack);
        let mut cur = vec![state];
        let mut layers = Vec::with_capacity(stack.len());
        for (i, &y) in stack.iter().enumerate() {
            let mut layer = Vec::with_capacity(cur.len());
            let mut next = Vec::new();
            for &s in &cur {
                let t = self
                    .automaton
                    .outgoing(s, y)
                    .iter()
                    .copied()
                    .find(|&t| {
                        self.automaton
                            .transition(t)
                            .to
                            .iter()
                            .all(|&q| acc[i + 1][q as usize])
                    })
                    .expect("accepted configuration has a run");
                layer.push((s, t));
                next.extend_from_slice(&self.automaton.transition(t).to);
            }
            next.sort_unstable();
            next.dedup();
            layers.push(layer);
            cur = next;
        }
        layers
    }

    /// A run `q -word-> S'` with `S' ⊆ bound`, using only transitions older than `before`.
    fn bounded_run(&self, q: u32, word: &[u32], bound: &[u32], before: usize) -> Option<(Layers, Vec<u32>)> {
        let n = self.automaton.state_count();
        let mut acc = vec![vec![false; n]; word.len() + 1];
        for &s in bound {
            acc[word.len()][s as usize] = true;
        }
        let usable = |t: usize, below: &Vec<bool>| {
            t < before
                && self
                    .automaton
                    .transition(t)
                    .to
                    .iter()
                    .all(|&x| below[x as usize])
        };
        for i in (0..word.len()).rev() {
            for s in 0..n {
                acc[i][s] = self
                    .automaton
                    .outgoing(s as u32, word[i])
                    .iter()
                    .any(|&t| usable(t, &acc[i + 1]));
            }
        }
        if !acc[0][q as usize] {
            return None;
        }
        let mut cur = vec![q];
        let mut layers = Vec::with_capacity(word.len());
        for (i, &y) in word.iter().enumerate() {
            let mut layer = Vec::new();
            let mut next = Vec::new();
            for &s in &cur {
                let t = self
                    .automaton
                    .outgoing(s, y)
                    .iter()
                    .copied()
                    .find(|&t| usable(t, &acc[i + 1]))?;
                layer.push((s, t));
                next.extend_from_slice(&self.automaton.transition(t).to);
            }
            next.sort_unstable();
            next.dedup();
            layers.push(layer);
            cur = next;
        }
        Some((layers, cur))
    }

    /// Keeps only the parts of `rest` reachable from `start`.
    fn restrict(&self, rest: &[Vec<(u32, usize)>], start: Vec<u32>) -> Layers {
        let mut cur = start;
        let mut out = Vec::with_capacity(rest.len());
        for layer in rest {
            let kept: Vec<(u32, usize)> = layer
                .iter()
                .copied()
                .filter(|(s, _)| cur.binary_search(s).is_ok())
                .collect();
            let mut next: Vec<u32> = kept
                .iter()
                .flat_map(|&(_, t)| self.automaton.transition(t).to.iter().copied())
                .collect();
            next.sort_unstable();
            next.dedup();
            out.push(kept);
            cur = next;
        }
        out
    }

    /// Attacker's strategy from a winning configuration, built by following the
    /// order in which saturation added transitions. Each step replaces one
    /// transition of the current run by strictly older ones, so the tree is finite.
    pub fn strategy(
        &self,
        state: &A::State,
        stack: &[A::Symbol],
        max_nodes: usize,
    ) -> Result<StrategyNode<A::State, A::Symbol, A::Label>> {
        if !self.attacker_wins(state, stack) {
            return Err(Error::Related);
        }
        let s = self.states.get(state).expect("known state");
        let st = self.encode(stack);
        let run = self.initial_run(s, &st);
        let mut count = 0usize;
        self.build(s, st, run, &mut count, max_nodes)
    }

    fn build(
        &self,
        s: u32,
        stack: Vec<u32>,
        run: Layers,
        count: &mut usize,
        max_nodes: usize,
    ) -> Result<StrategyNode<A::State, A::Symbol, A::Label>> {
        *count += 1;
        if *count > max_nodes {
            return Err(Error::ResourceLimit(format!("strategy larger than {max_nodes} nodes")));
        }
        let state = self.states.items[s as usize].clone();
        let visible: Vec<A::Symbol> = stack
            .iter()
            .map(|&y| self.symbols.items[y as usize].clone())
            .collect();
        let (_, t) = run[0][0];
        let tr = self.automaton.transition(t);
        let successor = |tag: u32| -> (u32, Vec<u32>, Layers) {
            let mv = &self.moves[tag as usize];
            let (path, end) = self
                .bounded_run(mv.target, &mv.pushed, &tr.to, t)
                .expect("saturation run for a recorded move");
            let mut layers = path;
            layers.extend(self.restrict(&run[1..], end));
            let mut next_stack = mv.pushed.clone();
            next_stack.extend_from_slice(&stack[1..]);
            (mv.target, next_stack, layers)
        };
        let step = match tr.provenance {
            Provenance::Input => StrategyStep::Goal,
            Provenance::Rule(tag) => {
                let (ns, nst, nrun) = successor(tag);
                StrategyStep::Attack {
                    label: self.moves[tag as usize].label.clone(),
                    next: Box::new(self.build(ns, nst, nrun, count, max_nodes)?),
                }
            }
            Provenance::Universal => {
                let tags = &self.heads[&(s, stack[0])].tags;
                let mut replies = Vec::with_capacity(tags.len());
                for &tag in tags {
                    let (ns, nst, nrun) = successor(tag);
                    replies.push((
                        self.moves[tag as usize].label.clone(),
                        self.build(ns, nst, nrun, count, max_nodes)?,
                    ));
                }
                StrategyStep::Replies(replies)
            }
        };
        Ok(StrategyNode {
            state,
            stack: visible,
            step,
        })
    }
}
