//! Single-state systems: relations between stack symbols reduce to relations
//! in a finite system whose states are symbols, the empty stack, and the
//! symbol pairs pushed by calls.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::finite::{finite_check_observing, FiniteLts};
use crate::relations::Relation;
use crate::system::{ActionKind, SymbolId, VpdaSystem};

/// Name of the empty-stack state.
pub const EMPTY_STATE: &str = "-";
/// Reserved action moving from a pair to its first component.
pub const FIRST: &str = "#1";
/// Reserved action moving from a pair to its second component.
pub const SECOND: &str = "#2";

fn require_vbpa(system: &VpdaSystem) -> Result<()> {
    if system.flags().is_vbpa {
        Ok(())
    } else {
        Err(Error::WrongClass("visibly BPA"))
    }
}

/// Symbols `Y` with `Y ->* ε`.
pub fn empties(system: &VpdaSystem) -> Result<BTreeSet<SymbolId>> {
    require_vbpa(system)?;
    Ok(emptiable(system).into_iter().enumerate().filter(|&(_, e)| e).map(|(i, _)| SymbolId(i as u32)).collect())
}

/// Linear-time fixpoint: each rule waits for its pushed symbols to become emptiable.
fn emptiable(system: &VpdaSystem) -> Vec<bool> {
    let n = system.symbol_count();
    let mut done = vec![false; n];
    let mut waiting: Vec<usize> = system.rules().iter().map(|r| r.pushed.len()).collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in system.rules().iter().enumerate() {
        for y in &r.pushed {
            users[y.index()].push(i);
        }
    }
    let mut work: Vec<usize> = Vec::new();
    for (i, r) in system.rules().iter().enumerate() {
        if waiting[i] == 0 && !done[r.src_symbol.index()] {
            done[r.src_symbol.index()] = true;
            work.push(r.src_symbol.index());
        }
    }
    while let Some(y) = work.pop() {
        for &i in &users[y] {
            waiting[i] -= 1;
            let x = system.rules()[i].src_symbol.index();
            if waiting[i] == 0 && !done[x] {
                done[x] = true;
                work.push(x);
            }
        }
    }
    done
}

fn pair_name(system: &VpdaSystem, y: SymbolId, z: SymbolId) -> String {
    format!("({},{})", system.symbol_name(y), system.symbol_name(z))
}

/// The finite system `T`. State `i < |Γ|` is the symbol with id `i`.
pub fn reduce_to_finite(system: &VpdaSystem) -> Result<FiniteLts> {
    require_vbpa(system)?;
    let empt = emptiable(system);
    let mut lts = FiniteLts::new();
    for y in system.symbol_ids() {
        lts.add_state(system.symbol_name(y));
    }
    let eps = lts.add_state(EMPTY_STATE);
    for a in system.alphabet().ids() {
        lts.add_action(system.action_name(a));
    }
    let first = lts.add_action(FIRST);
    let second = lts.add_action(SECOND);
    for r in system.rules() {
        let x = r.src_symbol.index();
        let a = r.action.index();
        match system.alphabet().kind(r.action) {
            ActionKind::Return => lts.add_transition(x, a, eps)?,
            ActionKind::Internal => lts.add_transition(x, a, r.pushed[0].index())?,
            ActionKind::Call => {
                let (y, z) = (r.pushed[0], r.pushed[1]);
                let s = lts.add_state(&pair_name(system, y, z));
                lts.add_transition(x, a, s)?;
                lts.add_transition(s, first, y.index())?;
                if empt[y.index()] {
                    lts.add_transition(s, second, z.index())?;
                }
            }
        }
    }
    Ok(lts)
}

/// `left rel right` for single-symbol configurations of a visibly BPA.
///
/// The completed and ready side conditions ignore the reserved pair actions:
/// a pair state stands for a stack whose initial actions are those of its
/// first component, and those are compared one `#1` step later.
pub fn check_relation_vbpa(system: &VpdaSystem, left: SymbolId, right: SymbolId, rel: Relation) -> Result<bool> {
    for y in [left, right] {
        if y.index() >= system.symbol_count() {
            return Err(Error::Unknown {
                kind: "stack symbol",
                name: y.0.to_string(),
            });
        }
    }
    let lts = reduce_to_finite(system)?;
    let observable: Vec<bool> = (0..lts.action_count()).map(|a| !lts.action_name(a).starts_with('#')).collect();
    finite_check_observing(&lts, left.index(), right.index(), rel, &observable)
}
