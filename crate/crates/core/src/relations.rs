//! Behavioural relations between configurations, decided as pushdown games
//! over the product system.
//!
//! Attacker moves at settled heads and picks a side (`ℓ` or `r`); Defender
//! answers on the other side with the same action. The completed and ready
//! variants make a settled head losing for Defender when the initial action
//! sets disagree. Every `_eq` relation is the conjunction of both directions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::product::{
    build_product, MergedSymbol, ProductConfig, ProductLabel, ProductSystem, Side, StatePair,
};
use crate::saturation::{
    solve_attacker_reachability, ArenaMove, GameArena, GameSolution, Player, SolveStats,
    StrategyNode, StrategyStep,
};
use crate::system::{initial_actions, step, ActionId, Configuration, VpdaSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "sim-pre")]
    SimPre,
    #[serde(rename = "sim-eq")]
    SimEq,
    #[serde(rename = "csim-pre")]
    CsimPre,
    #[serde(rename = "csim-eq")]
    CsimEq,
    #[serde(rename = "rsim-pre")]
    RsimPre,
    #[serde(rename = "rsim-eq")]
    RsimEq,
    #[serde(rename = "2sim-pre")]
    TwosimPre,
    #[serde(rename = "2sim-eq")]
    TwosimEq,
    #[serde(rename = "bisim")]
    Bisim,
}

impl Relation {
    pub const ALL: [Relation; 9] = [
        Relation::SimPre,
        Relation::SimEq,
        Relation::CsimPre,
        Relation::CsimEq,
        Relation::RsimPre,
        Relation::RsimEq,
        Relation::TwosimPre,
        Relation::TwosimEq,
        Relation::Bisim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::SimPre => "sim-pre",
            Relation::SimEq => "sim-eq",
            Relation::CsimPre => "csim-pre",
            Relation::CsimEq => "csim-eq",
            Relation::RsimPre => "rsim-pre",
            Relation::RsimEq => "rsim-eq",
            Relation::TwosimPre => "2sim-pre",
            Relation::TwosimEq => "2sim-eq",
            Relation::Bisim => "bisim",
        }
    }

    pub fn is_equivalence(self) -> bool {
        !matches!(
            self,
            Relation::SimPre | Relation::CsimPre | Relation::RsimPre | Relation::TwosimPre
        )
    }

    /// The directional preorder an `_eq` relation is built from (bisim maps to itself).
    pub fn preorder(self) -> Relation {
        match self {
            Relation::SimEq => Relation::SimPre,
            Relation::CsimEq => Relation::CsimPre,
            Relation::RsimEq => Relation::RsimPre,
            Relation::TwosimEq => Relation::TwosimPre,
            r => r,
        }
    }

    fn condition(self) -> Condition {
        match self.preorder() {
            Relation::CsimPre => Condition::Completed,
            Relation::RsimPre => Condition::Ready,
            _ => Condition::None,
        }
    }

    /// Starting modes: one per attacked direction.
    fn start_modes(self) -> Vec<(Phase, u8)> {
        match self {
            Relation::Bisim => vec![(Phase::Both, 0)],
            Relation::SimPre | Relation::CsimPre | Relation::RsimPre => vec![(Phase::Left, 0)],
            Relation::TwosimPre => vec![(Phase::Left, 1)],
            Relation::SimEq | Relation::CsimEq | Relation::RsimEq => {
                vec![(Phase::Left, 0), (Phase::Right, 0)]
            }
            Relation::TwosimEq => vec![(Phase::Left, 1), (Phase::Right, 1)],
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "relation",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Condition {
    None,
    Completed,
    Ready,
}

impl Condition {
    fn holds(self, left: &BTreeSet<ActionId>, right: &BTreeSet<ActionId>) -> bool {
        match self {
            Condition::None => true,
            Condition::Completed => left.is_empty() == right.is_empty(),
            Condition::Ready => left == right,
        }
    }
}

/// Which side Attacker currently attacks from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Left,
    Right,
    /// Free choice every round.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameState {
    pub pair: StatePair,
    pub phase: Phase,
    /// Remaining side switches.
    pub switches: u8,
}

/// The game for one relation over a product system.
pub struct RelationArena<'p, 's> {
    product: &'p ProductSystem<'s>,
    condition: Condition,
}

pub fn encode_game<'p, 's>(product: &'p ProductSystem<'s>, rel: Relation) -> RelationArena<'p, 's> {
    RelationArena {
        product,
        condition: rel.condition(),
    }
}

impl GameArena for RelationArena<'_, '_> {
    type State = GameState;
    type Symbol = MergedSymbol;
    type Label = (Side, ActionId);

    fn owner(&self, _state: &GameState, top: &MergedSymbol) -> Player {
        if top.as_settled().is_some() {
            Player::Attacker
        } else {
            Player::Defender
        }
    }

    fn defender_losing(&self, state: &GameState, top: &MergedSymbol) -> bool {
        if top.as_settled().is_none() || self.condition == Condition::None {
            return false;
        }
        let (l, r) = self.product.visible_actions(state.pair, Some(*top));
        !self.condition.holds(&l, &r)
    }

    fn moves(&self, state: &GameState, top: &MergedSymbol) -> Vec<ArenaMove<GameState, MergedSymbol, (Side, ActionId)>> {
        let settled = top.as_settled().is_some();
        let mut out = Vec::new();
        for r in self.product.rules(state.pair, *top).iter() {
            let ProductLabel::Move(side) = r.label else {
                continue;
            };
            let next = if settled {
                match attack_mode(state.phase, state.switches, side) {
                    Some((phase, switches)) => GameState {
                        pair: r.dst,
                        phase,
                        switches,
                    },
                    None => continue,
                }
            } else {
                GameState {
                    pair: r.dst,
                    ..*state
                }
            };
            out.push(ArenaMove {
                label: (side, r.action),
                target: next,
                pushed: r.pushed.clone(),
            });
        }
        out
    }
}

/// Mode after Attacker attacks from `side`, or `None` if the mode forbids it.
fn attack_mode(phase: Phase, switches: u8, side: Side) -> Option<(Phase, u8)> {
    match (phase, side) {
        (Phase::Both, _) | (Phase::Left, Side::Left) | (Phase::Right, Side::Right) => {
            Some((phase, switches))
        }
        (Phase::Left, Side::Right) | (Phase::Right, Side::Left) if switches > 0 => {
            Some((if side == Side::Left { Phase::Left } else { Phase::Right }, switches - 1))
        }
        _ => None,
    }
}

fn roots(rel: Relation, left: &Configuration, right: &Configuration) -> Result<Vec<(GameState, Vec<MergedSymbol>)>> {
    let root = ProductConfig::root(left, right)?;
    Ok(rel
        .start_modes()
        .into_iter()
        .map(|(phase, switches)| {
            (
                GameState {
                    pair: root.states,
                    phase,
                    switches,
                },
                root.stack.clone(),
            )
        })
        .collect())
}

fn check_inputs(system: &VpdaSystem, left: &Configuration, right: &Configuration) -> Result<()> {
    for c in [left, right] {
        if c.state.index() >= system.state_count() || c.stack.iter().any(|s| s.index() >= system.symbol_count()) {
            return Err(Error::BadConfiguration(format!("{c:?}")));
        }
    }
    if left.height() != right.height() {
        return Err(Error::HeightMismatch {
            left: left.height(),
            right: right.height(),
        });
    }
    Ok(())
}

/// Result of a relation query with solver statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub holds: bool,
    pub stats: SolveStats,
}

type Root = (GameState, Vec<MergedSymbol>);

fn solve<'p, 's>(
    product: &'p ProductSystem<'s>,
    left: &Configuration,
    right: &Configuration,
    rel: Relation,
    limits: &Limits,
) -> Result<(GameSolution<RelationArena<'p, 's>>, Vec<Root>)> {
    let arena = encode_game(product, rel);
    let starts = roots(rel, left, right)?;
    let sol = solve_attacker_reachability(&arena, &starts, limits)?;
    Ok((sol, starts))
}

/// Decides `left rel right` with explicit resource limits.
pub fn decide(
    system: &VpdaSystem,
    left: &Configuration,
    right: &Configuration,
    rel: Relation,
    limits: &Limits,
) -> Result<Decision> {
    check_inputs(system, left, right)?;
    let product = build_product(system)?;
    let (sol, starts) = solve(&product, left, right, rel, limits)?;
    let holds = starts.iter().all(|(s, st)| !sol.attacker_wins(s, st));
    Ok(Decision {
        holds,
        stats: sol.stats,
    })
}

/// Does `left rel right` hold? Uses the default resource limits.
pub fn check_relation(
    system: &VpdaSystem,
    left: &Configuration,
    right: &Configuration,
    rel: Relation,
) -> Result<bool> {
    decide(system, left, right, rel, &Limits::default()).map(|d| d.holds)
}

/// One node of an Attacker strategy, rendered over the product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessNode {
    pub position: String,
    pub step: WitnessStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WitnessStep {
    /// The initial action sets violate the relation's side condition.
    Mismatch { left: Vec<String>, right: Vec<String> },
    Attack {
        side: Side,
        action: String,
        next: Box<WitnessNode>,
    },
    /// All Defender answers; empty when Defender cannot answer.
    Defend { replies: Vec<WitnessReply> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReply {
    pub side: Side,
    pub action: String,
    pub next: WitnessNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub relation: Relation,
    pub root: WitnessNode,
}

impl Witness {
    /// Attacker's opening move as `side: action`, if the root is not already a mismatch.
    pub fn first_move(&self) -> Option<String> {
        match &self.root.step {
            WitnessStep::Attack { side, action, .. } => Some(format!("{side}: {action}")),
            _ => None,
        }
    }

    /// Number of Attacker moves on the longest branch.
    pub fn depth(&self) -> usize {
        fn go(n: &WitnessNode) -> usize {
            match &n.step {
                WitnessStep::Mismatch { .. } => 0,
                WitnessStep::Attack { next, .. } => 1 + go(next),
                WitnessStep::Defend { replies } => replies.iter().map(|r| go(&r.next)).max().unwrap_or(0),
            }
        }
        go(&self.root)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &WitnessNode, indent: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let pad = "  ".repeat(indent);
            match &n.step {
                WitnessStep::Mismatch { left, right } => writeln!(
                    f,
                    "{pad}{}: initial actions {{{}}} vs {{{}}}",
                    n.position,
                    left.join(","),
                    right.join(",")
                ),
                WitnessStep::Attack { side, action, next } => {
                    writeln!(f, "{pad}{}: attacker plays {action} on the {side}", n.position)?;
                    go(next, indent + 1, f)
                }
                WitnessStep::Defend { replies } if replies.is_empty() => {
                    writeln!(f, "{pad}{}: defender cannot answer", n.position)
                }
                WitnessStep::Defend { replies } => {
                    for r in replies {
                        writeln!(f, "{pad}{}: defender answers {} on the {}", n.position, r.action, r.side)?;
                        go(&r.next, indent + 1, f)?;
                    }
                    Ok(())
                }
            }
        }
        go(&self.root, 0, f)
    }
}

const MAX_WITNESS_NODES: usize = 100_000;

/// Attacker's winning strategy for a pair that is not related.
pub fn extract_witness(
    system: &VpdaSystem,
    left: &Configuration,
    right: &Configuration,
    rel: Relation,
    limits: &Limits,
) -> Result<Witness> {
    check_inputs(system, left, right)?;
    let product = build_product(system)?;
    let (sol, starts) = solve(&product, left, right, rel, limits)?;
    let Some((s, st)) = starts.iter().find(|(s, st)| sol.attacker_wins(s, st)) else {
        return Err(Error::Related);
    };
    let tree = sol.strategy(s, st, MAX_WITNESS_NODES)?;
    Ok(Witness {
        relation: rel,
        root: render(&product, &tree),
    })
}

fn render(
    product: &ProductSystem,
    node: &StrategyNode<GameState, MergedSymbol, (Side, ActionId)>,
) -> WitnessNode {
    let sys = product.base();
    let position = product.format_config(&ProductConfig {
        states: node.state.pair,
        stack: node.stack.clone(),
    });
    let names = |set: BTreeSet<ActionId>| set.into_iter().map(|a| sys.action_name(a).to_string()).collect();
    let step = match &node.step {
        StrategyStep::Goal => {
            let (l, r) = product.visible_actions(node.state.pair, node.stack.first().copied());
            WitnessStep::Mismatch {
                left: names(l),
                right: names(r),
            }
        }
        StrategyStep::Attack { label, next } => WitnessStep::Attack {
            side: label.0,
            action: sys.action_name(label.1).to_string(),
            next: Box::new(render(product, next)),
        },
        StrategyStep::Replies(replies) => WitnessStep::Defend {
            replies: replies
                .iter()
                .map(|(label, child)| WitnessReply {
                    side: label.0,
                    action: sys.action_name(label.1).to_string(),
                    next: render(product, child),
                })
                .collect(),
        },
    };
    WitnessNode { position, step }
}

/// Depth-bounded game played directly on the two configurations: true iff
/// Defender survives every play of at most `depth` rounds.
pub fn bounded_oracle(
    system: &VpdaSystem,
    left: &Configuration,
    right: &Configuration,
    rel: Relation,
    depth: usize,
    limits: &Limits,
) -> Result<bool> {
    check_inputs(system, left, right)?;
    let mut oracle = Oracle {
        system,
        condition: rel.condition(),
        memo: HashMap::new(),
        budget: limits.start(),
    };
    for (phase, switches) in rel.start_modes() {
        if !oracle.defender_wins(left, right, phase, switches, depth)? {
            return Ok(false);
        }
    }
    Ok(true)
}

type OracleKey = (Configuration, Configuration, Phase, u8, usize);

struct Oracle<'a> {
    system: &'a VpdaSystem,
    condition: Condition,
    memo: HashMap<OracleKey, bool>,
    budget: crate::limits::Budget,
}

impl Oracle<'_> {
    fn defender_wins(
        &mut self,
        s: &Configuration,
        t: &Configuration,
        phase: Phase,
        switches: u8,
        depth: usize,
    ) -> Result<bool> {
        let key = (s.clone(), t.clone(), phase, switches, depth);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.budget.tick()?;
        self.budget.check_positions(self.memo.len())?;
        self.budget.check_stack(s.height().max(t.height()))?;
        let result = self.evaluate(s, t, phase, switches, depth)?;
        self.memo.insert(key, result);
        Ok(result)
    }

    fn evaluate(
        &mut self,
        s: &Configuration,
        t: &Configuration,
        phase: Phase,
        switches: u8,
        depth: usize,
    ) -> Result<bool> {
        let sys = self.system;
        if !self
            .condition
            .holds(&initial_actions(sys, s), &initial_actions(sys, t))
        {
            return Ok(false);
        }
        if depth == 0 {
            return Ok(true);
        }
        for side in [Side::Left, Side::Right] {
            let Some((phase2, switches2)) = attack_mode(phase, switches, side) else {
                continue;
            };
            let (attacker, defender) = match side {
                Side::Left => (s, t),
                Side::Right => (t, s),
            };
            let answers = step(sys, defender);
            for (a, moved) in step(sys, attacker) {
                let mut matched = false;
                for (b, reply) in &answers {
                    if *b != a {
                        continue;
                    }
                    let (l, r) = match side {
                        Side::Left => (&moved, reply),
                        Side::Right => (reply, &moved),
                    };
                    if self.defender_wins(l, r, phase2, switches2, depth - 1)? {
                        matched = true;
                        break;
                    }
                }
                if !matched {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
