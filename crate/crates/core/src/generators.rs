//! Instance generators with known answers, plus seeded random systems.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::{Configuration, SymbolId, SystemBuilder, VpdaSystem};

/// A one-way alternating automaton over the one-letter alphabet `{I}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AfaSpec {
    pub existential: BTreeSet<String>,
    pub universal: BTreeSet<String>,
    pub initial: String,
    pub delta: BTreeMap<String, BTreeSet<String>>,
    pub finals: BTreeSet<String>,
}

impl AfaSpec {
    pub fn states(&self) -> impl Iterator<Item = &String> {
        self.existential.iter().chain(&self.universal)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.existential.intersection(&self.universal).next() {
            return Err(Error::Invalid(format!("state `{q}` is both existential and universal")));
        }
        let all: BTreeSet<&String> = self.states().collect();
        if !all.contains(&self.initial) {
            return Err(Error::Invalid(format!("initial state `{}` is not declared", self.initial)));
        }
        for q in &all {
            match self.delta.get(*q) {
                Some(succ) if !succ.is_empty() => {
                    if let Some(r) = succ.iter().find(|r| !all.contains(r)) {
                        return Err(Error::Invalid(format!("successor `{r}` of `{q}` is not declared")));
                    }
                }
                _ => return Err(Error::Invalid(format!("state `{q}` needs at least one successor"))),
            }
        }
        if self.delta.keys().any(|q| !all.contains(q)) {
            return Err(Error::Invalid("transition from an undeclared state".into()));
        }
        if let Some(f) = self.finals.iter().find(|f| !all.contains(f)) {
            return Err(Error::Invalid(format!("final state `{f}` is not declared")));
        }
        for q in &all {
            if q.is_empty() || q.chars().any(|c| c.is_whitespace() || ":(),|".contains(c)) || q.contains("->") {
                return Err(Error::InvalidName {
                    name: q.to_string(),
                    reason: "not usable inside generated names",
                });
            }
        }
        Ok(())
    }
}

/// Parses `exists:`, `forall:`, `init:`, `final:` and `delta: q -> q1 q2` lines.
pub fn parse_afa(text: &str) -> Result<AfaSpec> {
    let mut afa = AfaSpec {
        existential: BTreeSet::new(),
        universal: BTreeSet::new(),
        initial: String::new(),
        delta: BTreeMap::new(),
        finals: BTreeSet::new(),
    };
    let mut init = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, rest)) = line.split_once(':') else {
            return Err(Error::Syntax {
                line: line_no,
                message: "expected `key: values`".into(),
            });
        };
        let words = rest.split_whitespace().map(String::from);
        match key.trim() {
            "exists" => afa.existential.extend(words),
            "forall" => afa.universal.extend(words),
            "final" => afa.finals.extend(words),
            "init" => {
                let w: Vec<String> = words.collect();
                if w.len() != 1 {
                    return Err(Error::Syntax {
                        line: line_no,
                        message: "`init:` takes exactly one state".into(),
                    });
                }
                init = Some(w[0].clone());
            }
            "delta" => {
                let Some((q, succ)) = rest.split_once("->") else {
                    return Err(Error::Syntax {
                        line: line_no,
                        message: "expected `delta: q -> q1 q2 ...`".into(),
                    });
                };
                afa.delta
                    .entry(q.trim().to_string())
                    .or_default()
                    .extend(succ.split_whitespace().map(String::from));
            }
            other => {
                return Err(Error::Syntax {
                    line: line_no,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    afa.initial = init.ok_or(Error::Syntax {
        line: 0,
        message: "missing `init:` line".into(),
    })?;
    afa.validate()?;
    Ok(afa)
}

impl fmt::Display for AfaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(" ");
        writeln!(f, "exists: {}", join(&self.existential))?;
        writeln!(f, "forall: {}", join(&self.universal))?;
        writeln!(f, "init: {}", self.initial)?;
        writeln!(f, "final: {}", join(&self.finals))?;
        for (q, succ) in &self.delta {
            writeln!(f, "delta: {q} -> {}", join(succ))?;
        }
        Ok(())
    }
}

/// True iff the automaton accepts no word.
///
/// `acc[k]` is the set of states accepting `I^k`; the sequence is eventually
/// periodic, so iteration stops at the first repeated set.
pub fn afa_emptiness(afa: &AfaSpec) -> bool {
    let mut acc: BTreeSet<&String> = afa.finals.iter().collect();
    let mut seen: HashSet<BTreeSet<&String>> = HashSet::new();
    loop {
        if acc.contains(&afa.initial) {
            return false;
        }
        if !seen.insert(acc.clone()) {
            return true;
        }
        acc = afa
            .states()
            .filter(|q| {
                let succ = &afa.delta[*q];
                if afa.existential.contains(*q) {
                    succ.iter().any(|r| acc.contains(r))
                } else {
                    succ.iter().all(|r| acc.contains(r))
                }
            })
            .collect();
    }
}

fn afa_state(q: &str) -> String {
    format!("s.{q}")
}

fn afa_state_primed(q: &str) -> String {
    format!("s'.{q}")
}

fn afa_test_state(q: &str) -> String {
    format!("t.{q}")
}

fn afa_return(q: &str) -> String {
    format!("d.{q}")
}

/// One-counter pair `(pZ, p'Z)` that is bisimilar when the automaton's
/// language is empty and not even similar otherwise.
///
/// Attacker first pumps the counter with `i` and enters the checking phase
/// with `a`; existential choices are Attacker's, universal choices are forced
/// onto Defender through the `t` / `t.q` gadget; at zero, final states can
/// still play `e`.
pub fn gen_hard_v1ca(afa: &AfaSpec) -> Result<(VpdaSystem, Configuration, Configuration)> {
    afa.validate()?;
    let states: Vec<&String> = afa.states().collect();
    let mut b = SystemBuilder::new()
        .calls(["i"])
        .returns(states.iter().map(|q| afa_return(q)))
        .internals(["a", "e"])
        .symbol("I")
        .symbol("Z")
        .state("p")
        .state("p'")
        .state("t");
    for q in &states {
        b.add_state(afa_state(q));
        b.add_state(afa_state_primed(q));
        b.add_state(afa_test_state(q));
    }
    let q0 = afa_state(&afa.initial);
    let q0p = afa_state_primed(&afa.initial);
    for (p, q) in [("p", &q0), ("p'", &q0p)] {
        b.add_rule(p, "Z", "i", p, &["I", "Z"]);
        b.add_rule(p, "I", "i", p, &["I", "I"]);
        b.add_rule(p, "Z", "a", q, &["Z"]);
        b.add_rule(p, "I", "a", q, &["I"]);
    }
    for q in &afa.existential {
        for qi in &afa.delta[q] {
            let d = afa_return(qi);
            b.add_rule(&afa_state(q), "I", &d, &afa_state(qi), &[]);
            b.add_rule(&afa_state_primed(q), "I", &d, &afa_state_primed(qi), &[]);
        }
    }
    for q in &afa.universal {
        b.add_rule(&afa_state(q), "I", "a", "t", &["I"]);
        for qi in &afa.delta[q] {
            b.add_rule(&afa_state_primed(q), "I", "a", &afa_test_state(qi), &["I"]);
            b.add_rule(&afa_state(q), "I", "a", &afa_test_state(qi), &["I"]);
        }
    }
    for q in &states {
        b.add_rule("t", "I", &afa_return(q), &afa_state(q), &[]);
        b.add_rule(&afa_test_state(q), "I", &afa_return(q), &afa_state_primed(q), &[]);
        for r in &states {
            if r != q {
                b.add_rule(&afa_test_state(q), "I", &afa_return(r), &afa_state(r), &[]);
            }
        }
    }
    for q in &afa.finals {
        b.add_rule(&afa_state(q), "Z", "e", &afa_state(q), &["Z"]);
    }
    let sys = b.build()?;
    let left = sys.configuration("p", &["Z"])?;
    let right = sys.configuration("p'", &["Z"])?;
    Ok((sys, left, right))
}

/// Number of rules [`gen_hard_v1ca`] produces for the automaton.
pub fn hard_v1ca_rule_count(afa: &AfaSpec) -> usize {
    let n = afa.states().count();
    let exist: usize = afa.existential.iter().map(|q| 2 * afa.delta[q].len()).sum();
    let univ: usize = afa.universal.iter().map(|q| 1 + 2 * afa.delta[q].len()).sum();
    8 + exist + univ + n * n + n + afa.finals.len()
}

fn fresh(taken: &BTreeSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Turns a single-state system into a visibly BPA by relabelling rules by
/// pushed length (2: `c`, 0: `r`, 1: `i`) and adds a probe symbol `X'` that
/// is regular exactly when `x` cannot empty its stack.
pub fn gen_regularity_instance(bpa: &VpdaSystem, x: SymbolId) -> Result<(VpdaSystem, SymbolId)> {
    if bpa.state_count() != 1 {
        return Err(Error::WrongClass("BPA"));
    }
    if let Some(r) = bpa.rules().iter().find(|r| r.pushed.len() > 2) {
        return Err(Error::Invalid(format!(
            "rule `{}` pushes more than two symbols",
            bpa.format_rule(r)
        )));
    }
    if x.index() >= bpa.symbol_count() {
        return Err(Error::Unknown {
            kind: "stack symbol",
            name: x.0.to_string(),
        });
    }
    let state = bpa.state_name(crate::system::StateId(0)).to_string();
    let mut taken: BTreeSet<String> = bpa.symbol_ids().map(|y| bpa.symbol_name(y).to_string()).collect();
    taken.insert(state.clone());
    let xname = bpa.symbol_name(x).to_string();
    let mut pick = |base: &str| {
        let n = fresh(&taken, base);
        taken.insert(n.clone());
        n
    };
    let probe = pick(&format!("{xname}'"));
    let bb = pick("B");
    let cc = pick("C");
    let dd = pick("D");
    let mut b = SystemBuilder::new()
        .calls(["c"])
        .returns(["r"])
        .internals(["i", "e"])
        .state(state.as_str());
    for y in bpa.symbol_ids() {
        b.add_symbol(bpa.symbol_name(y));
    }
    for r in bpa.rules() {
        let pushed: Vec<&str> = r.pushed.iter().map(|&y| bpa.symbol_name(y)).collect();
        let a = match pushed.len() {
            2 => "c",
            0 => "r",
            _ => "i",
        };
        b.add_rule(&state, bpa.symbol_name(r.src_symbol), a, &state, &pushed);
    }
    b.add_rule(&state, &probe, "c", &state, &[&xname, &bb]);
    b.add_rule(&state, &bb, "e", &state, &[&cc]);
    b.add_rule(&state, &cc, "c", &state, &[&cc, &dd]);
    b.add_rule(&state, &cc, "r", &state, &[]);
    b.add_rule(&state, &dd, "r", &state, &[]);
    let sys = b.build()?;
    let probe = sys.symbol_id(&probe).expect("probe symbol exists");
    Ok((sys, probe))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Visibly pushdown system.
    Vpda,
    /// Visibly BPA (one control state).
    Vbpa,
    /// Visibly one-counter system over `{I, Z}`.
    V1ca,
    /// Unrestricted pushdown system (internal actions only, pushes 0..=2 symbols).
    Pda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub kind: SystemKind,
    pub states: usize,
    pub symbols: usize,
    pub rules: usize,
    pub calls: usize,
    pub returns: usize,
    pub internals: usize,
    pub seed: u64,
}

impl RandomParams {
    pub fn new(kind: SystemKind, seed: u64) -> Self {
        RandomParams {
            kind,
            states: 3,
            symbols: 3,
            rules: 10,
            calls: 1,
            returns: 1,
            internals: 1,
            seed,
        }
    }
}

fn symbol_name(i: usize, total: usize) -> String {
    if total <= 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("X{i}")
    }
}

/// A random system with `params.rules` distinct rules (fewer only when the
/// shape space is too small), determined by the seed.
pub fn gen_random(params: &RandomParams) -> Result<VpdaSystem> {
    if params.states == 0 || params.symbols == 0 || params.rules == 0 {
        return Err(Error::Invalid("size bounds must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let nq = if params.kind == SystemKind::Vbpa { 1 } else { params.states };
    let states: Vec<String> = (0..nq).map(|i| format!("p{i}")).collect();
    let symbols: Vec<String> = if params.kind == SystemKind::V1ca {
        vec!["I".into(), "Z".into()]
    } else {
        (0..params.symbols).map(|i| symbol_name(i, params.symbols)).collect()
    };
    let (calls, returns, internals): (Vec<String>, Vec<String>, Vec<String>) = match params.kind {
        SystemKind::Pda => (vec![], vec![], (0..params.internals.max(1)).map(|i| format!("a{i}")).collect()),
        _ => (
            (0..params.calls).map(|i| format!("c{i}")).collect(),
            (0..params.returns).map(|i| format!("r{i}")).collect(),
            (0..params.internals).map(|i| format!("i{i}")).collect(),
        ),
    };
    let mut b = SystemBuilder::new()
        .calls(calls.iter().cloned())
        .returns(returns.iter().cloned())
        .internals(internals.iter().cloned());
    for s in &states {
        b.add_state(s.clone());
    }
    for y in &symbols {
        b.add_symbol(y.clone());
    }
    let classes: Vec<(usize, &Vec<String>)> = [(2, &calls), (0, &returns), (1, &internals)]
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .collect();
    if classes.is_empty() {
        return Err(Error::Invalid("no actions to generate rules with".into()));
    }
    let mut distinct: HashSet<(&str, &str, &str, &str, Vec<&str>)> = HashSet::new();
    let mut attempts = 0;
    while distinct.len() < params.rules && attempts < 4 * params.rules + 16 {
        attempts += 1;
        let p = states.choose(&mut rng).unwrap().as_str();
        let q = states.choose(&mut rng).unwrap().as_str();
        let (len, names) = *classes.choose(&mut rng).unwrap();
        let a = names.choose(&mut rng).unwrap().as_str();
        match params.kind {
            SystemKind::V1ca => {
                let on_zero = rng.gen_bool(0.4);
                let (x, pushed): (&str, Vec<&str>) = match (on_zero, len) {
                    (true, 0) => continue,
                    (true, 1) => ("Z", vec!["Z"]),
                    (true, _) => ("Z", vec!["I", "Z"]),
                    (false, 0) => ("I", vec![]),
                    (false, 1) => ("I", vec!["I"]),
                    (false, _) => ("I", vec!["I", "I"]),
                };
                distinct.insert((p, x, a, q, pushed));
            }
            SystemKind::Pda => {
                let x = symbols.choose(&mut rng).unwrap().as_str();
                let n = rng.gen_range(0..=2);
                let pushed: Vec<&str> = (0..n).map(|_| symbols.choose(&mut rng).unwrap().as_str()).collect();
                distinct.insert((p, x, a, q, pushed));
            }
            _ => {
                let x = symbols.choose(&mut rng).unwrap().as_str();
                let pushed: Vec<&str> = (0..len).map(|_| symbols.choose(&mut rng).unwrap().as_str()).collect();
                distinct.insert((p, x, a, q, pushed));
            }
        }
    }
    let mut rules: Vec<_> = distinct.into_iter().collect();
    rules.sort();
    for (p, x, a, q, pushed) in &rules {
        b.add_rule(p, x, a, q, pushed);
    }
    if params.kind == SystemKind::Pda {
        b.build_unchecked()
    } else {
        b.build()
    }
}

/// A random AFA with `n` states, for tests and the CLI.
pub fn gen_random_afa(n: usize, seed: u64) -> AfaSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n.max(1)).map(|i| format!("q{i}")).collect();
    let mut afa = AfaSpec {
        existential: BTreeSet::new(),
        universal: BTreeSet::new(),
        initial: names[0].clone(),
        delta: BTreeMap::new(),
        finals: BTreeSet::new(),
    };
    for q in &names {
        if rng.gen_bool(0.5) {
            afa.existential.insert(q.clone());
        } else {
            afa.universal.insert(q.clone());
        }
        let k = rng.gen_range(1..=names.len().min(3));
        let succ: BTreeSet<String> = names.choose_multiple(&mut rng, k).cloned().collect();
        afa.delta.insert(q.clone(), succ);
        if rng.gen_bool(0.3) {
            afa.finals.insert(q.clone());
        }
    }
    afa
}
