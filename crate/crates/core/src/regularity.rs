//! Regularity: is a configuration equivalent to some finite-state process?
//!
//! For visibly systems the answer is the same for every equivalence between
//! trace equivalence and bisimilarity: a configuration is regular exactly
//! when it cannot pop its stack by unboundedly many symbols.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automaton::{infinite_intersection, PAutomaton};
use crate::error::{Error, Result};
use crate::finite::FiniteLts;
use crate::limits::Limits;
use crate::relations::Relation;
use crate::saturation::{post_star, pre_star};
use crate::system::{Configuration, StateId, SymbolId, VpdaSystem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegularityEvidence {
    /// A head `qY` reachable as a top from which stacks of any height can be emptied.
    UnboundedPopping { state: String, symbol: String },
    /// Remembering `depth` top symbols suffices; the quotient has `states` states.
    BoundedPopping { depth: usize, states: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub evidence: RegularityEvidence,
}

fn require_vpda(system: &VpdaSystem) -> Result<()> {
    if system.flags().is_vpda {
        Ok(())
    } else {
        Err(Error::WrongClass("visibly pushdown system"))
    }
}

fn encode(c: &Configuration) -> Vec<u32> {
    c.stack.iter().map(|s| s.0).collect()
}

/// A head `qY` witnessing unbounded popping from `c`, if there is one.
///
/// `qY` qualifies when `post*(qY) ∩ pre*({rε})` is infinite and `c` can reach
/// a configuration with head `qY`. The test is sound for any start stack, not
/// only single symbols.
pub fn unbounded_popping(
    system: &VpdaSystem,
    c: &Configuration,
    limits: &Limits,
) -> Result<Option<(StateId, SymbolId)>> {
    require_vpda(system)?;
    let nq = system.state_count();
    let ng = system.symbol_count();
    let emptied = pre_star(
        system,
        &PAutomaton::empty_stacks(nq, 0..nq as u32),
        limits,
    )?;
    let mut pumping = Vec::new();
    for q in system.state_ids() {
        for y in system.symbol_ids() {
            let post = post_star(
                system,
                &PAutomaton::from_configurations(nq, [(q.0, vec![y.0])]),
                limits,
            )?;
            if infinite_intersection(&post, &emptied, q.0) {
                pumping.push((q, y));
            }
        }
    }
    if pumping.is_empty() {
        return Ok(None);
    }
    let stack = encode(c);
    let all = pre_star(
        system,
        &PAutomaton::heads_then_anything(nq, ng, pumping.iter().map(|(q, y)| (q.0, y.0))),
        limits,
    )?;
    if !all.accepts(c.state.0, &stack) {
        return Ok(None);
    }
    for (q, y) in pumping {
        let one = pre_star(
            system,
            &PAutomaton::heads_then_anything(nq, ng, [(q.0, y.0)]),
            limits,
        )?;
        if one.accepts(c.state.0, &stack) {
            return Ok(Some((q, y)));
        }
    }
    unreachable!("some pumping head is reachable")
}

/// Is `c` regular with respect to `equivalence`?
///
/// The tag is accepted for documentation only: every equivalence between
/// trace equivalence and bisimilarity yields the same answer.
pub fn is_regular(
    system: &VpdaSystem,
    c: &Configuration,
    equivalence: Relation,
    limits: &Limits,
) -> Result<bool> {
    let _ = equivalence;
    Ok(unbounded_popping(system, c, limits)?.is_none())
}

/// Verdict plus evidence: the popping head, or the witness depth and size.
pub fn regularity_report(system: &VpdaSystem, c: &Configuration, limits: &Limits) -> Result<RegularityReport> {
    if let Some((q, y)) = unbounded_popping(system, c, limits)? {
        return Ok(RegularityReport {
            regular: false,
            evidence: RegularityEvidence::UnboundedPopping {
                state: system.state_name(q).to_string(),
                symbol: system.symbol_name(y).to_string(),
            },
        });
    }
    let (depth, lts) = quotient_search(system, c, limits)?;
    Ok(RegularityReport {
        regular: true,
        evidence: RegularityEvidence::BoundedPopping {
            depth,
            states: lts.state_count(),
        },
    })
}

/// A finite system bisimilar to `c`; state 0 corresponds to `c`.
pub fn regular_witness(system: &VpdaSystem, c: &Configuration, limits: &Limits) -> Result<FiniteLts> {
    if unbounded_popping(system, c, limits)?.is_some() {
        return Err(Error::NotRegular);
    }
    Ok(quotient_search(system, c, limits)?.1)
}

fn quotient_search(system: &VpdaSystem, c: &Configuration, limits: &Limits) -> Result<(usize, FiniteLts)> {
    let mut d = c.height().max(1);
    loop {
        if let Some(lts) = truncated_quotient(system, c, d, limits)? {
            return Ok((d, lts));
        }
        d += 1;
        limits.start().check_stack(d)?;
    }
}

/// The reachable quotient where only the top `d` symbols are remembered, or
/// `None` if some run pops into the forgotten part.
pub fn truncated_quotient(
    system: &VpdaSystem,
    c: &Configuration,
    d: usize,
    limits: &Limits,
) -> Result<Option<FiniteLts>> {
    type Abs = (StateId, Vec<SymbolId>, bool);
    let mut budget = limits.start();
    let name = |a: &Abs| {
        let base = system.format_configuration(&Configuration::new(a.0, a.1.clone()));
        if a.2 {
            format!("{base}*")
        } else {
            base
        }
    };
    let mut start: Abs = (c.state, c.stack.clone(), false);
    if start.1.len() > d {
        start.1.truncate(d);
        start.2 = true;
    }
    let mut lts = FiniteLts::new();
    for a in system.alphabet().ids() {
        lts.add_action(system.action_name(a));
    }
    let mut ids: HashMap<Abs, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    ids.insert(start.clone(), lts.add_state(&name(&start)));
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        budget.tick()?;
        budget.check_positions(ids.len())?;
        let from = ids[&cur];
        let Some(&top) = cur.1.first() else {
            if cur.2 {
                return Ok(None);
            }
            continue;
        };
        for r in system.rules_from(cur.0, top) {
            let mut stack = r.pushed.clone();
            stack.extend_from_slice(&cur.1[1..]);
            let mut hidden = cur.2;
            if stack.len() > d {
                stack.truncate(d);
                hidden = true;
            }
            let next: Abs = (r.dst_state, stack, hidden);
            let to = match ids.get(&next) {
                Some(&i) => i,
                None => {
                    let i = lts.add_state(&name(&next));
                    ids.insert(next.clone(), i);
                    queue.push_back(next);
                    i
                }
            };
            lts.add_transition(from, r.action.index(), to)?;
        }
    }
    Ok(Some(lts))
}

/// Counter-system view used by the one-counter test.
struct Counter<'a> {
    system: &'a VpdaSystem,
    i: SymbolId,
    z: SymbolId,
}

impl Counter<'_> {
    /// Successors of `(q, k)`, where `k` counts the `I` symbols above `Z`.
    fn successors(&self, q: StateId, k: usize) -> Vec<(StateId, usize)> {
        let top = if k > 0 { self.i } else { self.z };
        self.system
            .rules_from(q, top)
            .map(|r| {
                let k2 = if k > 0 {
                    k - 1 + r.pushed.len()
                } else {
                    r.pushed.len() - 1
                };
                (r.dst_state, k2)
            })
            .collect()
    }

    /// Positions reachable from `(q, k)` in at most `steps` moves with counters ≤ `cap`.
    fn reach(&self, q: StateId, k: usize, steps: usize, cap: usize) -> Vec<(StateId, usize)> {
        let mut seen: HashMap<(StateId, usize), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        seen.insert((q, k), 0);
        queue.push_back((q, k, 0usize));
        while let Some((q, k, s)) = queue.pop_front() {
            if s == steps {
                continue;
            }
            for (q2, k2) in self.successors(q, k) {
                if k2 > cap || seen.contains_key(&(q2, k2)) {
                    continue;
                }
                seen.insert((q2, k2), s + 1);
                queue.push_back((q2, k2, s + 1));
            }
        }
        seen.into_keys().collect()
    }
}

/// Unbounded popping from `p0(0)` for a one-counter system, by the four
/// bounded reachability conditions over `n = |Q|`:
/// `p0(0)` reaches `p(n1)` with `n1 ≥ n` keeping the counter within `n² + 2n`;
/// `p(n)` returns to `p` with a higher counter in at most `n` steps;
/// `p(n)` reaches `p'` in at most `n` steps;
/// `p'(n)` returns to `p'` with a lower counter in at most `n` steps.
pub fn v1ca_fast_path(system: &VpdaSystem, p0: StateId) -> Result<bool> {
    if !system.flags().is_v1ca {
        return Err(Error::WrongClass("visibly one-counter system"));
    }
    let counter = Counter {
        system,
        i: system.symbol_id("I").expect("one-counter systems have I"),
        z: system.symbol_id("Z").expect("one-counter systems have Z"),
    };
    let n = system.state_count();
    let cap = n * n + 2 * n;
    let far = 2 * n;
    let mut candidates: Vec<StateId> = counter
        .reach(p0, 0, usize::MAX, cap)
        .into_iter()
        .filter(|&(_, k)| k >= n)
        .map(|(p, _)| p)
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let mut descending = HashMap::new();
    for p in candidates {
        let from_p = counter.reach(p, n, n, far);
        if !from_p.iter().any(|&(q, k)| q == p && k > n) {
            continue;
        }
        for &(p2, _) in &from_p {
            let down = *descending.entry(p2).or_insert_with(|| {
                counter
                    .reach(p2, n, n, far)
                    .iter()
                    .any(|&(q, k)| q == p2 && k < n)
            });
            if down {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
