//! Pushdown systems over a partitioned action alphabet.
//!
//! A system is a finite set of prefix-rewrite rules `p X -a-> q α`. Names are
//! opaque tokens; they are interned into dense ids sorted lexicographically, so
//! every id order is also the name order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, VisibilityViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Call,
    Return,
    Internal,
}

impl ActionKind {
    /// Number of symbols a visibly rule under this action class pushes.
    pub fn pushed_len(self) -> usize {
        match self {
            ActionKind::Call => 2,
            ActionKind::Return => 0,
            ActionKind::Internal => 1,
        }
    }

    /// Stack height change caused by one step under this class.
    pub fn effect(self) -> i64 {
        match self {
            ActionKind::Call => 1,
            ActionKind::Return => -1,
            ActionKind::Internal => 0,
        }
    }
}

/// `Act = Act_c ∪ Act_r ∪ Act_i`, pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionAlphabet {
    names: Vec<String>,
    kinds: Vec<ActionKind>,
    index: HashMap<String, ActionId>,
}

impl ActionAlphabet {
    pub fn new<S: AsRef<str>>(calls: &[S], returns: &[S], internals: &[S]) -> Result<Self> {
        let mut all: BTreeMap<String, ActionKind> = BTreeMap::new();
        let groups = [
            (calls, ActionKind::Call),
            (returns, ActionKind::Return),
            (internals, ActionKind::Internal),
        ];
        for (names, kind) in groups {
            for n in names {
                let n = n.as_ref();
                check_name(n)?;
                if n.starts_with('#') {
                    return Err(Error::InvalidName {
                        name: n.to_string(),
                        reason: "action names starting with '#' are reserved",
                    });
                }
                if let Some(prev) = all.insert(n.to_string(), kind) {
                    if prev != kind {
                        return Err(Error::InvalidName {
                            name: n.to_string(),
                            reason: "action declared in more than one class",
                        });
                    }
                }
            }
        }
        let names: Vec<String> = all.keys().cloned().collect();
        let kinds: Vec<ActionKind> = all.values().copied().collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), ActionId(i as u32)))
            .collect();
        Ok(ActionAlphabet {
            names,
            kinds,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.names.len() as u32).map(ActionId)
    }

    pub fn lookup(&self, name: &str) -> Option<ActionId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, a: ActionId) -> &str {
        &self.names[a.index()]
    }

    pub fn kind(&self, a: ActionId) -> ActionKind {
        self.kinds[a.index()]
    }

    pub fn of_kind(&self, kind: ActionKind) -> impl Iterator<Item = &str> + '_ {
        self.names
            .iter()
            .zip(&self.kinds)
            .filter(move |(_, k)| **k == kind)
            .map(|(n, _)| n.as_str())
    }

    pub fn calls(&self) -> impl Iterator<Item = &str> + '_ {
        self.of_kind(ActionKind::Call)
    }

    pub fn returns(&self) -> impl Iterator<Item = &str> + '_ {
        self.of_kind(ActionKind::Return)
    }

    pub fn internals(&self) -> impl Iterator<Item = &str> + '_ {
        self.of_kind(ActionKind::Internal)
    }
}

/// The height function `h` lifted to words: calls +1, returns -1, internals 0.
pub fn stack_effect<S: AsRef<str>>(alphabet: &ActionAlphabet, word: &[S]) -> Result<i64> {
    word.iter().try_fold(0i64, |acc, a| {
        let a = a.as_ref();
        let id = alphabet.lookup(a).ok_or_else(|| Error::Unknown {
            kind: "action",
            name: a.to_string(),
        })?;
        Ok(acc + alphabet.kind(id).effect())
    })
}

/// `p X -a-> q α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub src_state: StateId,
    pub src_symbol: SymbolId,
    pub action: ActionId,
    pub dst_state: StateId,
    pub pushed: Vec<SymbolId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassFlags {
    pub is_vpda: bool,
    pub is_vbpa: bool,
    pub is_v1ca: bool,
}

/// Control state plus stack; `stack[0]` is the top.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub state: StateId,
    pub stack: Vec<SymbolId>,
}

impl Configuration {
    pub fn new(state: StateId, stack: Vec<SymbolId>) -> Self {
        Configuration { state, stack }
    }

    pub fn top(&self) -> Option<SymbolId> {
        self.stack.first().copied()
    }

    pub fn height(&self) -> usize {
        self.stack.len()
    }
}

#[derive(Debug, Clone)]
pub struct VpdaSystem {
    states: Vec<String>,
    symbols: Vec<String>,
    alphabet: ActionAlphabet,
    rules: Vec<Rule>,
    flags: ClassFlags,
    state_index: HashMap<String, StateId>,
    symbol_index: HashMap<String, SymbolId>,
    by_head: HashMap<(StateId, SymbolId), Vec<usize>>,
}

/// Collects names and rules, then interns and validates them.
#[derive(Debug, Clone, Default)]
pub struct SystemBuilder {
    calls: Vec<String>,
    returns: Vec<String>,
    internals: Vec<String>,
    states: BTreeSet<String>,
    symbols: BTreeSet<String>,
    rules: Vec<(String, String, String, String, Vec<String>)>,
}

impl SystemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.calls.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn returns<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.returns.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn internals<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.internals.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn state(mut self, name: impl Into<String>) -> Self {
        self.states.insert(name.into());
        self
    }

    pub fn symbol(mut self, name: impl Into<String>) -> Self {
        self.symbols.insert(name.into());
        self
    }

    pub fn add_state(&mut self, name: impl Into<String>) {
        self.states.insert(name.into());
    }

    pub fn add_symbol(&mut self, name: impl Into<String>) {
        self.symbols.insert(name.into());
    }

    pub fn add_rule(&mut self, p: &str, x: &str, a: &str, q: &str, pushed: &[&str]) {
        self.rules.push((
            p.to_string(),
            x.to_string(),
            a.to_string(),
            q.to_string(),
            pushed.iter().map(|s| s.to_string()).collect(),
        ));
    }

    pub fn rule(mut self, p: &str, x: &str, a: &str, q: &str, pushed: &[&str]) -> Self {
        self.add_rule(p, x, a, q, pushed);
        self
    }

    /// Builds and requires the visibility constraint on every rule.
    pub fn build(self) -> Result<VpdaSystem> {
        let sys = self.build_unchecked()?;
        validate_visibility(&sys)?;
        Ok(sys)
    }

    /// Builds without requiring visibility; `flags().is_vpda` reports it.
    pub fn build_unchecked(self) -> Result<VpdaSystem> {
        let alphabet = ActionAlphabet::new(&self.calls, &self.returns, &self.internals)?;
        let mut states = self.states;
        let mut symbols = self.symbols;
        for (p, x, a, q, pushed) in &self.rules {
            if alphabet.lookup(a).is_none() {
                return Err(Error::Unknown {
                    kind: "action",
                    name: a.clone(),
                });
            }
            states.insert(p.clone());
            states.insert(q.clone());
            symbols.insert(x.clone());
            symbols.extend(pushed.iter().cloned());
        }
        for n in states.iter().chain(symbols.iter()) {
            check_name(n)?;
        }
        for n in &states {
            if symbols.contains(n) || alphabet.lookup(n).is_some() {
                return Err(Error::InvalidName {
                    name: n.clone(),
                    reason: "a control state shares its name with a symbol or action",
                });
            }
        }
        for n in &symbols {
            if alphabet.lookup(n).is_some() {
                return Err(Error::InvalidName {
                    name: n.clone(),
                    reason: "a stack symbol shares its name with an action",
                });
            }
        }
        let states: Vec<String> = states.into_iter().collect();
        let symbols: Vec<String> = symbols.into_iter().collect();
        let state_index: HashMap<String, StateId> = states
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), StateId(i as u32)))
            .collect();
        let symbol_index: HashMap<String, SymbolId> = symbols
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), SymbolId(i as u32)))
            .collect();
        let mut rules: Vec<Rule> = self
            .rules
            .iter()
            .map(|(p, x, a, q, pushed)| Rule {
                src_state: state_index[p],
                src_symbol: symbol_index[x],
                action: alphabet.lookup(a).unwrap(),
                dst_state: state_index[q],
                pushed: pushed.iter().map(|s| symbol_index[s]).collect(),
            })
            .collect();
        // ids are name-sorted, so this is the lexicographic name order
        rules.sort();
        rules.dedup();
        Ok(VpdaSystem::assemble(
            states,
            symbols,
            alphabet,
            rules,
            state_index,
            symbol_index,
        ))
    }
}

impl VpdaSystem {
    pub fn builder() -> SystemBuilder {
        SystemBuilder::new()
    }

    fn assemble(
        states: Vec<String>,
        symbols: Vec<String>,
        alphabet: ActionAlphabet,
        rules: Vec<Rule>,
        state_index: HashMap<String, StateId>,
        symbol_index: HashMap<String, SymbolId>,
    ) -> Self {
        let mut by_head: HashMap<(StateId, SymbolId), Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_head.entry((r.src_state, r.src_symbol)).or_default().push(i);
        }
        let mut sys = VpdaSystem {
            states,
            symbols,
            alphabet,
            rules,
            flags: ClassFlags::default(),
            state_index,
            symbol_index,
            by_head,
        };
        sys.flags = sys.compute_flags();
        sys
    }

    fn compute_flags(&self) -> ClassFlags {
        let is_vpda = visibility_violations(self).is_empty();
        let is_vbpa = is_vpda && self.states.len() == 1;
        let is_v1ca = is_vpda && self.has_counter_shape();
        ClassFlags {
            is_vpda,
            is_vbpa,
            is_v1ca,
        }
    }

    fn has_counter_shape(&self) -> bool {
        if self.symbols.len() != 2 {
            return false;
        }
        let (Some(i), Some(z)) = (self.symbol_id("I"), self.symbol_id("Z")) else {
            return false;
        };
        self.rules.iter().all(|r| {
            if r.src_symbol == i {
                r.pushed.iter().all(|&s| s == i)
            } else {
                match r.pushed.split_last() {
                    Some((&last, rest)) => last == z && rest.iter().all(|&s| s == i),
                    None => false,
                }
            }
        })
    }

    pub fn flags(&self) -> ClassFlags {
        self.flags
    }

    pub fn alphabet(&self) -> &ActionAlphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn symbol_ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.symbols.len() as u32).map(SymbolId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.index()]
    }

    pub fn symbol_name(&self, s: SymbolId) -> &str {
        &self.symbols[s.index()]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        self.alphabet.name(a)
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.symbol_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.alphabet.lookup(name)
    }

    /// Rules whose left-hand side is `p X`.
    pub fn rules_from(&self, p: StateId, x: SymbolId) -> impl Iterator<Item = &Rule> + '_ {
        self.by_head
            .get(&(p, x))
            .into_iter()
            .flatten()
            .map(move |&i| &self.rules[i])
    }

    pub fn rule_indices_from(&self, p: StateId, x: SymbolId) -> &[usize] {
        self.by_head.get(&(p, x)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_pushed(&self) -> usize {
        self.rules.iter().map(|r| r.pushed.len()).max().unwrap_or(0)
    }

    /// A copy with the given rules replacing the current ones (names unchanged).
    pub fn with_rules(&self, rules: Vec<Rule>) -> VpdaSystem {
        let mut rules = rules;
        rules.sort();
        rules.dedup();
        VpdaSystem::assemble(
            self.states.clone(),
            self.symbols.clone(),
            self.alphabet.clone(),
            rules,
            self.state_index.clone(),
            self.symbol_index.clone(),
        )
    }

    pub fn format_rule(&self, r: &Rule) -> String {
        format!(
            "{} {} -{}-> {} {}",
            self.state_name(r.src_state),
            self.symbol_name(r.src_symbol),
            self.action_name(r.action),
            self.state_name(r.dst_state),
            self.format_symbols(&r.pushed, " ")
        )
    }

    fn format_symbols(&self, stack: &[SymbolId], sep: &str) -> String {
        if stack.is_empty() {
            "-".to_string()
        } else {
            stack
                .iter()
                .map(|&s| self.symbol_name(s))
                .collect::<Vec<_>>()
                .join(sep)
        }
    }

    /// `p:XYZ` when every symbol name is one character, `p:X1,Y2` otherwise.
    pub fn format_configuration(&self, c: &Configuration) -> String {
        let single = c
            .stack
            .iter()
            .all(|&s| self.symbol_name(s).chars().count() == 1);
        let stack = if single {
            self.format_symbols(&c.stack, "")
        } else {
            self.format_symbols(&c.stack, ",")
        };
        format!("{}:{}", self.state_name(c.state), stack)
    }

    pub fn configuration(&self, state: &str, stack: &[&str]) -> Result<Configuration> {
        let state = self.state_id(state).ok_or_else(|| Error::Unknown {
            kind: "control state",
            name: state.to_string(),
        })?;
        let stack = stack
            .iter()
            .map(|s| {
                self.symbol_id(s).ok_or_else(|| Error::Unknown {
                    kind: "stack symbol",
                    name: s.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Configuration { state, stack })
    }

    /// Parses `p:XYZ`, `p:X,Y`, `p:X Y`, `p:-`, `pXY` or the counter sugar `p(n)`.
    pub fn parse_configuration(&self, text: &str) -> Result<Configuration> {
        let text = text.trim();
        let bad = || Error::BadConfiguration(text.to_string());
        if let Some(open) = text.find('(') {
            let close = text.strip_suffix(')').ok_or_else(bad)?;
            let n: usize = close[open + 1..].trim().parse().map_err(|_| bad())?;
            let state = &text[..open];
            let mut stack = vec!["I"; n];
            stack.push("Z");
            return self.configuration(state, &stack);
        }
        if let Some((state, rest)) = text.split_once(':') {
            let rest = rest.trim();
            if rest == "-" || rest.is_empty() {
                return self.configuration(state, &[]);
            }
            let parts: Vec<&str> = if rest.contains(',') || rest.contains(' ') {
                rest.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .collect()
            } else {
                segment(rest, |s| self.symbol_index.contains_key(s)).ok_or_else(bad)?
            };
            return self.configuration(state, &parts);
        }
        // no separator: the longest state-name prefix whose rest segments into symbols
        let mut cuts: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .skip(1)
            .chain(std::iter::once(text.len()))
            .collect();
        cuts.reverse();
        for cut in cuts {
            let (state, rest) = text.split_at(cut);
            if !self.state_index.contains_key(state) {
                continue;
            }
            if let Some(parts) = segment(rest, |s| self.symbol_index.contains_key(s)) {
                return self.configuration(state, &parts);
            }
        }
        Err(bad())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

/// Splits `s` into a sequence of known names; `None` if impossible or ambiguous.
fn segment(s: &str, known: impl Fn(&str) -> bool) -> Option<Vec<&str>> {
    let n = s.len();
    // ways[i]: number of segmentations of s[i..] (capped at 2), next[i]: first cut
    let mut ways = vec![0u8; n + 1];
    let mut next = vec![0usize; n + 1];
    ways[n] = 1;
    let bounds: Vec<usize> = s
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(n))
        .collect();
    for (bi, &i) in bounds.iter().enumerate().rev().skip(1) {
        for &j in &bounds[bi + 1..] {
            if ways[j] > 0 && known(&s[i..j]) {
                ways[i] = (ways[i] + ways[j]).min(2);
                next[i] = j;
            }
        }
    }
    if ways[0] != 1 {
        return None;
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        out.push(&s[i..next[i]]);
        i = next[i];
    }
    Some(out)
}

fn check_name(n: &str) -> Result<()> {
    let reason = if n.is_empty() {
        Some("empty name")
    } else if n == "-" {
        Some("`-` denotes the empty stack")
    } else if n.contains("->") {
        Some("names may not contain `->`")
    } else if n
        .chars()
        .any(|c| c.is_whitespace() || matches!(c, ':' | '(' | ')' | ',' | '|'))
    {
        Some("names may not contain whitespace or any of `:(),|`")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::InvalidName {
            name: n.to_string(),
            reason,
        }),
        None => Ok(()),
    }
}

fn visibility_violations(sys: &VpdaSystem) -> Vec<VisibilityViolation> {
    sys.rules
        .iter()
        .filter_map(|r| {
            let expected = sys.alphabet.kind(r.action).pushed_len();
            (r.pushed.len() != expected).then(|| VisibilityViolation {
                rule: sys.format_rule(r),
                expected,
                found: r.pushed.len(),
            })
        })
        .collect()
}

/// Checks that every rule pushes 2/0/1 symbols for call/return/internal actions.
pub fn validate_visibility(system: &VpdaSystem) -> Result<()> {
    let v = visibility_violations(system);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Visibility(v))
    }
}

/// All transitions `pXγ -a-> qαγ` out of `c`.
pub fn step(system: &VpdaSystem, c: &Configuration) -> BTreeSet<(ActionId, Configuration)> {
    let Some(top) = c.top() else {
        return BTreeSet::new();
    };
    system
        .rules_from(c.state, top)
        .map(|r| {
            let mut stack = r.pushed.clone();
            stack.extend_from_slice(&c.stack[1..]);
            (r.action, Configuration::new(r.dst_state, stack))
        })
        .collect()
}

/// `I(c)`: depends only on the control state and the top symbol.
pub fn initial_actions(system: &VpdaSystem, c: &Configuration) -> BTreeSet<ActionId> {
    match c.top() {
        Some(top) => head_actions(system, c.state, top),
        None => BTreeSet::new(),
    }
}

pub fn head_actions(system: &VpdaSystem, p: StateId, x: SymbolId) -> BTreeSet<ActionId> {
    system.rules_from(p, x).map(|r| r.action).collect()
}

/// Parses a system and requires every rule to respect visibility.
pub fn parse_system(text: &str) -> Result<VpdaSystem> {
    let (builder, lines) = parse_builder(text)?;
    let sys = builder.build_unchecked().map_err(|e| attach_line(e, &lines))?;
    validate_visibility(&sys)?;
    Ok(sys)
}

/// Parses a system without requiring visibility (plain PDA / BPA inputs).
pub fn parse_pda(text: &str) -> Result<VpdaSystem> {
    let (builder, lines) = parse_builder(text)?;
    builder.build_unchecked().map_err(|e| attach_line(e, &lines))
}

fn attach_line(e: Error, lines: &HashMap<String, usize>) -> Error {
    match e {
        Error::Unknown { kind, name } => Error::Undeclared {
            line: lines.get(&name).copied().unwrap_or(0),
            kind,
            name,
        },
        other => other,
    }
}

fn parse_builder(text: &str) -> Result<(SystemBuilder, HashMap<String, usize>)> {
    let mut b = SystemBuilder::new();
    let mut declared_states: Option<BTreeSet<String>> = None;
    let mut declared_symbols: Option<BTreeSet<String>> = None;
    let mut first_use: HashMap<String, usize> = HashMap::new();
    let mut rule_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((key, rest)) = line.split_once(':') {
            let names: Vec<String> = rest.split_whitespace().map(String::from).collect();
            match key.trim() {
                "calls" => b.calls.extend(names),
                "returns" => b.returns.extend(names),
                "internals" => b.internals.extend(names),
                "states" => declared_states.get_or_insert_with(BTreeSet::new).extend(names),
                "symbols" => declared_symbols
                    .get_or_insert_with(BTreeSet::new)
                    .extend(names),
                other => {
                    return Err(Error::Syntax {
                        line: line_no,
                        message: format!("unknown declaration `{other}`"),
                    })
                }
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(Error::Syntax {
                line: line_no,
                message: "expected `p X -a-> q α` (use `-` for an empty right-hand stack)".into(),
            });
        }
        let action = toks[2]
            .strip_prefix('-')
            .and_then(|t| t.strip_suffix("->"))
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::Syntax {
                line: line_no,
                message: format!("malformed arrow `{}`", toks[2]),
            })?;
        let pushed: Vec<&str> = if toks[4..] == ["-"] {
            Vec::new()
        } else {
            toks[4..].to_vec()
        };
        if pushed.contains(&"-") {
            return Err(Error::Syntax {
                line: line_no,
                message: "`-` must stand alone for the empty stack".into(),
            });
        }
        for n in [toks[0], toks[1], action, toks[3]].iter().chain(&pushed) {
            first_use.entry(n.to_string()).or_insert(line_no);
        }
        rule_lines.push((line_no, toks[0], toks[1], action, toks[3], pushed));
    }
    let actions: BTreeSet<String> = b
        .calls
        .iter()
        .chain(&b.returns)
        .chain(&b.internals)
        .cloned()
        .collect();
    for (line, p, x, a, q, pushed) in &rule_lines {
        if !actions.contains(*a) {
            return Err(Error::Undeclared {
                line: *line,
                kind: "action",
                name: a.to_string(),
            });
        }
        if let Some(ds) = &declared_states {
            for s in [p, q] {
                if !ds.contains(*s) {
                    return Err(Error::Undeclared {
                        line: *line,
                        kind: "control state",
                        name: s.to_string(),
                    });
                }
            }
        }
        if let Some(ds) = &declared_symbols {
            for s in std::iter::once(x).chain(pushed.iter()) {
                if !ds.contains(*s) {
                    return Err(Error::Undeclared {
                        line: *line,
                        kind: "stack symbol",
                        name: s.to_string(),
                    });
                }
            }
        }
        b.add_rule(p, x, a, q, pushed);
    }
    for s in declared_states.into_iter().flatten() {
        b.add_state(s);
    }
    for s in declared_symbols.into_iter().flatten() {
        b.add_symbol(s);
    }
    Ok((b, first_use))
}

impl fmt::Display for VpdaSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |names: Vec<&str>| names.join(" ");
        writeln!(f, "calls: {}", line(self.alphabet.calls().collect()))?;
        writeln!(f, "returns: {}", line(self.alphabet.returns().collect()))?;
        writeln!(f, "internals: {}", line(self.alphabet.internals().collect()))?;
        writeln!(
            f,
            "states: {}",
            line(self.states.iter().map(String::as_str).collect())
        )?;
        writeln!(
            f,
            "symbols: {}",
            line(self.symbols.iter().map(String::as_str).collect())
        )?;
        for r in &self.rules {
            writeln!(f, "{}", self.format_rule(r))?;
        }
        Ok(())
    }
}
