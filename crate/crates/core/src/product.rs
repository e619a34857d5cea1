//! The synchronized product of a visibly system with itself.
//!
//! A product configuration `(p,q)[α,β]` runs the left process `pα` and the
//! right process `qβ` on one merged stack. A move on one side (label `ℓ` or
//! `r`) leaves the action it used annotated on the other side's top symbol;
//! the next move must come from that other side under the same action. Self
//! loops labelled `a` / `ā` expose the initial actions of each side.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{ActionId, Configuration, StateId, SymbolId, VpdaSystem};

/// One side of a merged stack symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Eps,
    One(SymbolId),
    Two(SymbolId, SymbolId),
    /// `X_a`: symbol `X` waiting for a matching `a` move.
    Ann(SymbolId, ActionId),
}

impl Slot {
    fn from_pushed(pushed: &[SymbolId]) -> Slot {
        match *pushed {
            [] => Slot::Eps,
            [x] => Slot::One(x),
            [x, y] => Slot::Two(x, y),
            _ => unreachable!("visibly rules push at most two symbols"),
        }
    }

    fn symbols(self) -> Option<Vec<SymbolId>> {
        match self {
            Slot::Eps => Some(vec![]),
            Slot::One(x) => Some(vec![x]),
            Slot::Two(x, y) => Some(vec![x, y]),
            Slot::Ann(..) => None,
        }
    }

    pub fn is_annotated(self) -> bool {
        matches!(self, Slot::Ann(..))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MergedSymbol {
    pub left: Slot,
    pub right: Slot,
}

impl MergedSymbol {
    pub fn settled(x: SymbolId, y: SymbolId) -> Self {
        MergedSymbol {
            left: Slot::One(x),
            right: Slot::One(y),
        }
    }

    pub fn as_settled(self) -> Option<(SymbolId, SymbolId)> {
        match (self.left, self.right) {
            (Slot::One(x), Slot::One(y)) => Some((x, y)),
            _ => None,
        }
    }
}

/// `[α, β]`: pairwise zip of two equally long stacks.
pub fn merge_stacks(alpha: &[SymbolId], beta: &[SymbolId]) -> Result<Vec<MergedSymbol>> {
    if alpha.len() != beta.len() {
        return Err(Error::HeightMismatch {
            left: alpha.len(),
            right: beta.len(),
        });
    }
    Ok(alpha
        .iter()
        .zip(beta)
        .map(|(&x, &y)| MergedSymbol::settled(x, y))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Labels of the product: `ℓ`, `r`, `a` and `ā`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProductLabel {
    Move(Side),
    Loop(Side, ActionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatePair {
    pub left: StateId,
    pub right: StateId,
}

/// A generated rule, tagged with the schema (1-6) that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductRule {
    pub schema: u8,
    pub label: ProductLabel,
    /// The underlying action `a`.
    pub action: ActionId,
    pub dst: StatePair,
    pub pushed: Vec<MergedSymbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductConfig {
    pub states: StatePair,
    pub stack: Vec<MergedSymbol>,
}

impl ProductConfig {
    /// `(p,q)[α,β]`.
    pub fn root(left: &Configuration, right: &Configuration) -> Result<Self> {
        Ok(ProductConfig {
            states: StatePair {
                left: left.state,
                right: right.state,
            },
            stack: merge_stacks(&left.stack, &right.stack)?,
        })
    }

    /// Splits a settled configuration back into the two processes.
    pub fn split(&self) -> Option<(Configuration, Configuration)> {
        let mut l = Vec::with_capacity(self.stack.len());
        let mut r = Vec::with_capacity(self.stack.len());
        for m in &self.stack {
            let (x, y) = m.as_settled()?;
            l.push(x);
            r.push(y);
        }
        Some((
            Configuration::new(self.states.left, l),
            Configuration::new(self.states.right, r),
        ))
    }
}

type Head = (StatePair, MergedSymbol);

/// On-demand view of the product rules over one base system.
pub struct ProductSystem<'a> {
    base: &'a VpdaSystem,
    cache: Mutex<HashMap<Head, Arc<Vec<ProductRule>>>>,
}

impl<'a> ProductSystem<'a> {
    pub fn base(&self) -> &'a VpdaSystem {
        self.base
    }

    /// All rules with left-hand side `(p,q) top`, generated from the six schemas.
    pub fn rules(&self, states: StatePair, top: MergedSymbol) -> Arc<Vec<ProductRule>> {
        let key = (states, top);
        if let Some(r) = self.cache.lock().unwrap().get(&key) {
            return r.clone();
        }
        let rules = Arc::new(self.generate(states, top));
        self.cache
            .lock()
            .unwrap()
            .entry(key)
            .or_insert(rules)
            .clone()
    }

    fn generate(&self, st: StatePair, top: MergedSymbol) -> Vec<ProductRule> {
        let base = self.base;
        let mut out = Vec::new();
        match (top.left, top.right) {
            (Slot::One(x), Slot::One(y)) => {
                for r in base.rules_from(st.left, x) {
                    // 1: (p,p')(X,X') -ℓ-> (q,p')(α, X'_a)
                    out.push(ProductRule {
                        schema: 1,
                        label: ProductLabel::Move(Side::Left),
                        action: r.action,
                        dst: StatePair {
                            left: r.dst_state,
                            right: st.right,
                        },
                        pushed: vec![MergedSymbol {
                            left: Slot::from_pushed(&r.pushed),
                            right: Slot::Ann(y, r.action),
                        }],
                    });
                }
                for r in base.rules_from(st.right, y) {
                    // 2: (p',p)(X',X) -r-> (p',q)(X'_a, α)
                    out.push(ProductRule {
                        schema: 2,
                        label: ProductLabel::Move(Side::Right),
                        action: r.action,
                        dst: StatePair {
                            left: st.left,
                            right: r.dst_state,
                        },
                        pushed: vec![MergedSymbol {
                            left: Slot::Ann(x, r.action),
                            right: Slot::from_pushed(&r.pushed),
                        }],
                    });
                }
                let left: BTreeSet<ActionId> =
                    base.rules_from(st.left, x).map(|r| r.action).collect();
                let right: BTreeSet<ActionId> =
                    base.rules_from(st.right, y).map(|r| r.action).collect();
                // 5 and 6: self-loops exposing initial actions
                for a in left {
                    out.push(self_loop(5, Side::Left, a, st, top));
                }
                for a in right {
                    out.push(self_loop(6, Side::Right, a, st, top));
                }
            }
            (beta, Slot::Ann(x, a)) if !beta.is_annotated() => {
                // 3: (p',p)(β, X_a) -r-> (p',q)[β, α]
                let beta = beta.symbols().unwrap();
                for r in base.rules_from(st.right, x).filter(|r| r.action == a) {
                    if let Ok(pushed) = merge_stacks(&beta, &r.pushed) {
                        out.push(ProductRule {
                            schema: 3,
                            label: ProductLabel::Move(Side::Right),
                            action: a,
                            dst: StatePair {
                                left: st.left,
                                right: r.dst_state,
                            },
                            pushed,
                        });
                    }
                }
            }
            (Slot::Ann(x, a), beta) if !beta.is_annotated() => {
                // 4: (p,p')(X_a, β) -ℓ-> (q,p')[α, β]
                let beta = beta.symbols().unwrap();
                for r in base.rules_from(st.left, x).filter(|r| r.action == a) {
                    if let Ok(pushed) = merge_stacks(&r.pushed, &beta) {
                        out.push(ProductRule {
                            schema: 4,
                            label: ProductLabel::Move(Side::Left),
                            action: a,
                            dst: StatePair {
                                left: r.dst_state,
                                right: st.right,
                            },
                            pushed,
                        });
                    }
                }
            }
            _ => {}
        }
        out.sort();
        out.dedup();
        out
    }

    /// Successors of a configuration (self-loops included).
    pub fn step(&self, c: &ProductConfig) -> Vec<(ProductLabel, ProductConfig)> {
        let Some(&top) = c.stack.first() else {
            return Vec::new();
        };
        self.rules(c.states, top)
            .iter()
            .map(|r| {
                let mut stack = r.pushed.clone();
                stack.extend_from_slice(&c.stack[1..]);
                (
                    r.label,
                    ProductConfig {
                        states: r.dst,
                        stack,
                    },
                )
            })
            .collect()
    }

    /// Left and right initial actions visible through the self-loops at a settled head.
    pub fn visible_actions(
        &self,
        states: StatePair,
        top: Option<MergedSymbol>,
    ) -> (BTreeSet<ActionId>, BTreeSet<ActionId>) {
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        if let Some(top) = top {
            for r in self.rules(states, top).iter() {
                match r.label {
                    ProductLabel::Loop(Side::Left, a) => {
                        left.insert(a);
                    }
                    ProductLabel::Loop(Side::Right, a) => {
                        right.insert(a);
                    }
                    _ => {}
                }
            }
        }
        (left, right)
    }

    pub fn format_label(&self, l: ProductLabel) -> String {
        match l {
            ProductLabel::Move(Side::Left) => "l".into(),
            ProductLabel::Move(Side::Right) => "r".into(),
            ProductLabel::Loop(Side::Left, a) => self.base.action_name(a).to_string(),
            ProductLabel::Loop(Side::Right, a) => format!("~{}", self.base.action_name(a)),
        }
    }

    pub fn format_slot(&self, s: Slot) -> String {
        let b = self.base;
        match s {
            Slot::Eps => "-".into(),
            Slot::One(x) => b.symbol_name(x).into(),
            Slot::Two(x, y) => format!("{}{}", b.symbol_name(x), b.symbol_name(y)),
            Slot::Ann(x, a) => format!("{}.{}", b.symbol_name(x), b.action_name(a)),
        }
    }

    /// `(X|Y)`, `(XY|Y.a)`, `(X.b|-)`.
    pub fn format_symbol(&self, m: MergedSymbol) -> String {
        format!("({}|{})", self.format_slot(m.left), self.format_slot(m.right))
    }

    pub fn format_states(&self, s: StatePair) -> String {
        format!(
            "({},{})",
            self.base.state_name(s.left),
            self.base.state_name(s.right)
        )
    }

    pub fn format_config(&self, c: &ProductConfig) -> String {
        let stack = if c.stack.is_empty() {
            "-".to_string()
        } else {
            c.stack
                .iter()
                .map(|&m| self.format_symbol(m))
                .collect::<Vec<_>>()
                .join("")
        };
        format!("{} {}", self.format_states(c.states), stack)
    }

    /// Breadth-first dump of the transitions reachable from `root` within `depth` steps.
    pub fn explore(
        &self,
        root: &ProductConfig,
        depth: usize,
    ) -> Vec<(ProductConfig, ProductLabel, ProductConfig)> {
        let mut seen = std::collections::HashSet::new();
        let mut queue = VecDeque::new();
        let mut out = Vec::new();
        seen.insert(root.clone());
        queue.push_back((root.clone(), 0));
        while let Some((c, d)) = queue.pop_front() {
            if d >= depth {
                continue;
            }
            for (label, next) in self.step(&c) {
                out.push((c.clone(), label, next.clone()));
                if seen.insert(next.clone()) {
                    queue.push_back((next, d + 1));
                }
            }
        }
        out
    }
}

fn self_loop(schema: u8, side: Side, a: ActionId, st: StatePair, top: MergedSymbol) -> ProductRule {
    ProductRule {
        schema,
        label: ProductLabel::Loop(side, a),
        action: a,
        dst: st,
        pushed: vec![top],
    }
}

/// The product view; requires a visibly system so that heights stay synchronized.
pub fn build_product(system: &VpdaSystem) -> Result<ProductSystem<'_>> {
    if !system.flags().is_vpda {
        return Err(Error::WrongClass("visibly pushdown system"));
    }
    Ok(ProductSystem {
        base: system,
        cache: Mutex::new(HashMap::new()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    pub(crate) const WALKTHROUGH: &str = "\
calls: a
returns: b
internals:
p X -a-> q X Y
r Y -a-> s Y Y
r Y -b-> r -
";

    fn dump(prod: &ProductSystem, c: &ProductConfig) -> Vec<String> {
        let mut v: Vec<String> = prod
            .step(c)
            .into_iter()
            .map(|(l, n)| format!("{} {}", prod.format_label(l), prod.format_config(&n)))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn merge_examples() {
        let x = SymbolId(0);
        let y = SymbolId(1);
        assert_eq!(
            merge_stacks(&[x, y], &[y, y]).unwrap(),
            vec![MergedSymbol::settled(x, y), MergedSymbol::settled(y, y)]
        );
        assert!(merge_stacks(&[], &[]).unwrap().is_empty());
        assert!(matches!(
            merge_stacks(&[x], &[y, x]),
            Err(Error::HeightMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn reproduces_the_worked_product() {
        let sys = parse_system(WALKTHROUGH).unwrap();
        let prod = build_product(&sys).unwrap();
        let root = ProductConfig::root(
            &sys.parse_configuration("p:X").unwrap(),
            &sys.parse_configuration("r:Y").unwrap(),
        )
        .unwrap();
        assert_eq!(
            dump(&prod, &root),
            vec![
                "a (p,r) (X|Y)",
                "l (q,r) (XY|Y.a)",
                "r (p,r) (X.b|-)",
                "r (p,s) (X.a|YY)",
                "~a (p,r) (X|Y)",
                "~b (p,r) (X|Y)",
            ]
        );
        let after_l = prod
            .step(&root)
            .into_iter()
            .find(|(l, _)| *l == ProductLabel::Move(Side::Left))
            .unwrap()
            .1;
        assert_eq!(dump(&prod, &after_l), vec!["r (q,s) (X|Y)(Y|Y)"]);
        let stuck = prod
            .step(&root)
            .into_iter()
            .map(|(_, c)| c)
            .find(|c| prod.format_config(c) == "(p,r) (X.b|-)")
            .unwrap();
        assert!(prod.step(&stuck).is_empty());
    }

    #[test]
    fn rejects_non_visibly_systems() {
        let sys = crate::system::parse_pda("calls: a\np X -a-> p -\n").unwrap();
        assert!(build_product(&sys).is_err());
    }
}
