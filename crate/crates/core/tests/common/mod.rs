#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vpe_core::generators::{gen_random, RandomParams, SystemKind};
use vpe_core::product::{build_product, ProductConfig};
use vpe_core::system::{step, StateId, SymbolId};
use vpe_core::{Configuration, VpdaSystem};

pub const CHAIN_PRE: [vpe_core::relations::Relation; 5] = {
    use vpe_core::relations::Relation::*;
    [Bisim, TwosimPre, RsimPre, CsimPre, SimPre]
};

pub const CHAIN_EQ: [vpe_core::relations::Relation; 5] = {
    use vpe_core::relations::Relation::*;
    [Bisim, TwosimEq, RsimEq, CsimEq, SimEq]
};

pub fn small_vpda(seed: u64, kind: SystemKind, states: usize, symbols: usize, rules: usize) -> VpdaSystem {
    let mut p = RandomParams::new(kind, seed);
    p.states = states;
    p.symbols = symbols;
    p.rules = rules;
    p.internals = 2;
    gen_random(&p).unwrap()
}

/// A configuration of the given height with random state and stack.
pub fn random_config(sys: &VpdaSystem, rng: &mut ChaCha8Rng, height: usize) -> Configuration {
    let q = StateId(rng.gen_range(0..sys.state_count()) as u32);
    let stack = (0..height)
        .map(|_| SymbolId(rng.gen_range(0..sys.symbol_count()) as u32))
        .collect();
    Configuration::new(q, stack)
}

/// A pair of equal-height configurations whose heads have rules, when possible.
pub fn random_pair(sys: &VpdaSystem, rng: &mut ChaCha8Rng) -> (Configuration, Configuration) {
    let heads: Vec<Configuration> = sys
        .rules()
        .iter()
        .map(|r| Configuration::new(r.src_state, vec![r.src_symbol]))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pick = |rng: &mut ChaCha8Rng| match heads.choose(rng) {
        Some(c) if rng.gen_bool(0.9) => c.clone(),
        _ => random_config(sys, rng, 1),
    };
    (pick(rng), pick(rng))
}

/// Number of product positions reachable from the pair, or `None` above `cap`.
pub fn product_positions(sys: &VpdaSystem, l: &Configuration, r: &Configuration, cap: usize) -> Option<usize> {
    let prod = build_product(sys).ok()?;
    let root = ProductConfig::root(l, r).ok()?;
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(root.clone());
    queue.push_back(root);
    while let Some(c) = queue.pop_front() {
        for (_, n) in prod.step(&c) {
            if seen.insert(n.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(n);
            }
        }
    }
    Some(seen.len())
}

/// Configurations reachable from `from` without exceeding `max_stack`.
pub fn bounded_forward(sys: &VpdaSystem, from: &[Configuration], max_stack: usize) -> HashSet<Configuration> {
    let mut seen: HashSet<Configuration> = from.iter().cloned().collect();
    let mut queue: VecDeque<Configuration> = from.iter().cloned().collect();
    while let Some(c) = queue.pop_front() {
        for (_, n) in step(sys, &c) {
            if n.height() <= max_stack && seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// All configurations up to `height`.
pub fn all_configurations(sys: &VpdaSystem, height: usize) -> Vec<Configuration> {
    let mut stacks: Vec<Vec<SymbolId>> = vec![vec![]];
    let mut layer: Vec<Vec<SymbolId>> = vec![vec![]];
    for _ in 0..height {
        layer = layer
            .iter()
            .flat_map(|s| {
                (0..sys.symbol_count() as u32).map(move |y| {
                    let mut t = s.clone();
                    t.push(SymbolId(y));
                    t
                })
            })
            .collect();
        stacks.extend(layer.iter().cloned());
    }
    let mut out = Vec::new();
    for q in 0..sys.state_count() as u32 {
        for s in &stacks {
            out.push(Configuration::new(StateId(q), s.clone()));
        }
    }
    out
}
