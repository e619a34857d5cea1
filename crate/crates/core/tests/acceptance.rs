//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpe_core::automaton::{member, PAutomaton};
use vpe_core::finite::bisimulation_classes;
use vpe_core::generators::{
    afa_emptiness, gen_hard_v1ca, gen_random, gen_random_afa, gen_regularity_instance, RandomParams, SystemKind,
};
use vpe_core::product::{build_product, ProductConfig, ProductLabel, Side};
use vpe_core::regularity::{is_regular, regular_witness, v1ca_fast_path};
use vpe_core::relations::{bounded_oracle, decide, Relation};
use vpe_core::saturation::{post_star, pre_star};
use vpe_core::system::{SymbolId, SystemBuilder};
use vpe_core::vbpa::{check_relation_vbpa, empties, reduce_to_finite};
use vpe_core::{parse_system, Configuration, Limits, VpdaSystem};

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {elapsed:?}, budget {budget:?}"))
}

fn err(e: vpe_core::Error) -> String {
    e.to_string()
}

const WALKTHROUGH: &str = "calls: a\nreturns: b\ninternals:\np X -a-> q X Y\nr Y -a-> s Y Y\nr Y -b-> r -\n";

fn product_worked_example() -> Outcome {
    let t = Instant::now();
    let sys = parse_system(WALKTHROUGH).map_err(err)?;
    let prod = build_product(&sys).map_err(err)?;
    let root = ProductConfig::root(
        &sys.parse_configuration("p:X").map_err(err)?,
        &sys.parse_configuration("r:Y").map_err(err)?,
    )
    .map_err(err)?;
    let succ = prod.step(&root);
    let mut got: Vec<String> = succ
        .iter()
        .map(|(l, n)| format!("{} {}", prod.format_label(*l), prod.format_config(n)))
        .collect();
    got.sort();
    let want = [
        "a (p,r) (X|Y)",
        "l (q,r) (XY|Y.a)",
        "r (p,r) (X.b|-)",
        "r (p,s) (X.a|YY)",
        "~a (p,r) (X|Y)",
        "~b (p,r) (X|Y)",
    ];
    ensure(got == want, || format!("transitions {got:?}"))?;
    let loops = succ.iter().filter(|(l, _)| matches!(l, ProductLabel::Loop(..))).count();
    ensure(loops == 3, || format!("{loops} self-loops"))?;
    let stuck = succ
        .iter()
        .find(|(l, n)| *l == ProductLabel::Move(Side::Right) && n.stack.len() == 1 && prod.step(n).is_empty());
    ensure(stuck.is_some(), || "no stuck successor".into())?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} transitions, 3 self-loops, 1 stuck", got.len()))
}

fn reduction_shape() -> Outcome {
    let t = Instant::now();
    let sys = parse_system("calls: c\nreturns: b\ninternals: a\ns X -a-> s Y\ns X -b-> s -\ns X -c-> s X Y\ns Y -b-> s -\n")
        .map_err(err)?;
    let lts = reduce_to_finite(&sys).map_err(err)?;
    let text = lts.to_string();
    ensure(lts.state_count() == 4 && lts.transition_count() == 6, || text.clone())?;
    ensure(
        text == "(X,Y) -#1-> X\n(X,Y) -#2-> Y\nX -a-> Y\nX -b-> -\nX -c-> (X,Y)\nY -b-> -\n",
        || text.clone(),
    )?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok("4 states, 6 transitions".into())
}

fn all_nine(sys: &VpdaSystem, l: &Configuration, r: &Configuration) -> Result<Vec<(Relation, bool)>, String> {
    Relation::ALL
        .iter()
        .map(|&rel| decide(sys, l, r, rel, &Limits::default()).map(|d| (rel, d.holds)).map_err(err))
        .collect()
}

/// Hand-made pairs separating adjacent levels, all internal actions.
const STRICTNESS_FIXTURES: &[(&str, &str, &str)] = &[
    // a vs a.b
    ("s P -a-> s N\ns Q -a-> s R\ns R -b-> s N\n", "P", "Q"),
    // a + a.b vs a.b
    ("s P -a-> s N\ns P -a-> s R\ns Q -a-> s R\ns R -b-> s N\n", "P", "Q"),
    // a.b + a.c vs a.(b+c)
    ("s P -a-> s D\ns P -a-> s F\ns D -b-> s N\ns F -c-> s N\ns Q -a-> s B\ns B -b-> s N\ns B -c-> s N\n", "P", "Q"),
    // a.(b+c) vs a.(b+c) + a.b
    ("s P -a-> s B\ns B -b-> s N\ns B -c-> s N\ns Q -a-> s B\ns Q -a-> s D\ns D -b-> s N\n", "P", "Q"),
    // a.b vs a.b + a.(b+c)
    ("s P -a-> s D\ns D -b-> s N\ns Q -a-> s D\ns Q -a-> s B\ns B -b-> s N\ns B -c-> s N\n", "P", "Q"),
    // a.(a.a + a) vs a.(a.a + a) + a.a
    ("s P -a-> s B\ns Q -a-> s B\ns Q -a-> s D\ns B -a-> s D\ns B -a-> s N\ns D -a-> s N\n", "P", "Q"),
    // a.b.(c+d) + a.(b.c + b.(c+d)) vs a.(b.c + b.(c+d))
    ("s P -a-> s X\ns P -a-> s Z\ns Q -a-> s Z\ns X -b-> s W\ns Z -b-> s K\ns Z -b-> s W\n\
      s W -c-> s N\ns W -d-> s N\ns K -c-> s N\n", "P", "Q"),
];

fn hierarchy() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut strict: BTreeSet<(Relation, Relation)> = BTreeSet::new();
    let record = |strict: &mut BTreeSet<(Relation, Relation)>, res: &[(Relation, bool)]| -> Result<(), String> {
        let holds = |r: Relation| res.iter().find(|(x, _)| *x == r).unwrap().1;
        for chain in [CHAIN_PRE, CHAIN_EQ] {
            for w in chain.windows(2) {
                ensure(!holds(w[0]) || holds(w[1]), || format!("{} holds but {} fails", w[0], w[1]))?;
                if holds(w[1]) && !holds(w[0]) {
                    strict.insert((w[0], w[1]));
                }
            }
        }
        for (e, p) in CHAIN_EQ.iter().zip(CHAIN_PRE.iter()) {
            ensure(!holds(*e) || holds(*p), || format!("{e} holds but {p} fails"))?;
        }
        Ok(())
    };
    let mut instances = 0;
    for seed in 0..200u64 {
        let sys = small_vpda(seed, SystemKind::Vpda, 1 + seed as usize % 4, 1 + seed as usize % 4, 4 + seed as usize % 9);
        let (l, r) = random_pair(&sys, &mut rng);
        let res = all_nine(&sys, &l, &r)?;
        record(&mut strict, &res).map_err(|m| format!("seed {seed}: {m}\n{sys}"))?;
        instances += 1;
    }
    let from_random = strict.len();
    let internals = "calls:\nreturns:\ninternals: a b c d\n";
    for (rules, l, r) in STRICTNESS_FIXTURES {
        let sys = parse_system(&format!("{internals}{rules}")).map_err(err)?;
        for (x, y) in [(*l, *r), (*r, *l)] {
            let lc = sys.parse_configuration(&format!("s:{x}")).map_err(err)?;
            let rc = sys.parse_configuration(&format!("s:{y}")).map_err(err)?;
            record(&mut strict, &all_nine(&sys, &lc, &rc)?)?;
        }
    }
    let missing: Vec<String> = [CHAIN_PRE, CHAIN_EQ]
        .iter()
        .flat_map(|c| c.windows(2).map(|w| (w[0], w[1])))
        .filter(|p| !strict.contains(p))
        .map(|(a, b)| format!("{a}<{b}"))
        .collect();
    ensure(missing.is_empty(), || format!("no strictness witness for {missing:?}"))?;
    within(t.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "{instances} random pairs consistent; {} strict levels ({from_random} from random pairs)",
        strict.len()
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut instances = 0;
    let mut checks = 0;
    let mut held = 0;
    let mut disagreements = Vec::new();
    let mut seed = 0u64;
    while instances < 500 {
        seed += 1;
        ensure(seed < 20_000, || format!("only {instances} small instances found"))?;
        let sys = small_vpda(seed, SystemKind::Vpda, 1 + seed as usize % 3, 1 + seed as usize % 3, 3 + seed as usize % 6);
        let (l, r) = random_pair(&sys, &mut rng);
        if product_positions(&sys, &l, &r, 2000).is_none() {
            continue;
        }
        instances += 1;
        for rel in Relation::ALL {
            let solver = decide(&sys, &l, &r, rel, &Limits::default()).map_err(err)?.holds;
            let oracle = bounded_oracle(&sys, &l, &r, rel, 8, &Limits::default()).map_err(err)?;
            checks += 1;
            held += solver as usize;
            if solver != oracle {
                disagreements.push(format!(
                    "seed {seed} {rel} {} vs {}: solver {solver}, oracle {oracle}",
                    sys.format_configuration(&l),
                    sys.format_configuration(&r)
                ));
            }
        }
    }
    ensure(disagreements.is_empty(), || {
        format!("{} disagreements, first: {}", disagreements.len(), disagreements[0])
    })?;
    Ok(format!("{instances} instances, {checks} checks ({held} hold), 0 disagreements"))
}

fn vbpa_agreement() -> Outcome {
    let mut checks = 0;
    for seed in 0..200u64 {
        let mut p = RandomParams::new(SystemKind::Vbpa, 1000 + seed);
        p.symbols = 2 + seed as usize % 4;
        p.rules = 3 + seed as usize % 8;
        p.internals = 2;
        let sys = gen_random(&p).map_err(err)?;
        let lts = reduce_to_finite(&sys).map_err(err)?;
        let bound = sys.symbol_count() + sys.rules().len() + 1;
        ensure(lts.state_count() <= bound, || format!("seed {seed}: {} states > {bound}", lts.state_count()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = SymbolId(rng.gen_range(0..sys.symbol_count()) as u32);
        let y = SymbolId(rng.gen_range(0..sys.symbol_count()) as u32);
        let s = sys.rules().first().map(|r| r.src_state).unwrap();
        let (l, r) = (Configuration::new(s, vec![x]), Configuration::new(s, vec![y]));
        for rel in Relation::ALL {
            let generic = decide(&sys, &l, &r, rel, &Limits::default()).map_err(err)?.holds;
            let fast = check_relation_vbpa(&sys, x, y, rel).map_err(err)?;
            ensure(generic == fast, || format!("seed {seed} {rel}: generic {generic}, reduction {fast}\n{sys}"))?;
            checks += 1;
        }
    }
    Ok(format!("200 systems, {checks} checks agree, size bound holds"))
}

fn gadget_ground_truth() -> Outcome {
    let t = Instant::now();
    let (mut empty, mut nonempty) = (0, 0);
    for seed in 0..30u64 {
        let afa = gen_random_afa(1 + seed as usize % 5, 500 + seed);
        let truth = afa_emptiness(&afa);
        if truth {
            empty += 1;
        } else {
            nonempty += 1;
        }
        let (sys, l, r) = gen_hard_v1ca(&afa).map_err(err)?;
        for rel in Relation::ALL {
            let holds = decide(&sys, &l, &r, rel, &Limits::default()).map_err(err)?.holds;
            ensure(holds == truth, || format!("seed {seed} {rel}: holds {holds}, empty {truth}\n{afa}"))?;
        }
    }
    within(t.elapsed(), Duration::from_secs(300))?;
    Ok(format!("30 automata ({empty} empty, {nonempty} non-empty), all nine relations match"))
}

fn rebuild_shuffled(sys: &VpdaSystem, rng: &mut ChaCha8Rng) -> Result<VpdaSystem, String> {
    let alpha = sys.alphabet();
    let mut b = SystemBuilder::new()
        .calls(alpha.calls().map(String::from))
        .returns(alpha.returns().map(String::from))
        .internals(alpha.internals().map(String::from));
    for q in sys.state_ids() {
        b.add_state(sys.state_name(q));
    }
    for y in sys.symbol_ids() {
        b.add_symbol(sys.symbol_name(y));
    }
    let mut rules = sys.rules().to_vec();
    rules.shuffle(rng);
    for r in &rules {
        let pushed: Vec<&str> = r.pushed.iter().map(|&y| sys.symbol_name(y)).collect();
        b.add_rule(
            sys.state_name(r.src_state),
            sys.symbol_name(r.src_symbol),
            sys.action_name(r.action),
            sys.state_name(r.dst_state),
            &pushed,
        );
    }
    b.build_unchecked().map_err(err)
}

fn as_automaton(sys: &VpdaSystem, configs: &[Configuration]) -> PAutomaton {
    PAutomaton::from_configurations(
        sys.state_count(),
        configs.iter().map(|c| (c.state.0, c.stack.iter().map(|y| y.0).collect())),
    )
}

fn saturation_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let limits = Limits::default();
    let mut checked = 0usize;
    let (mut in_pre, mut in_post) = (0, 0);
    for seed in 0..100u64 {
        let sys = small_vpda(2000 + seed, SystemKind::Pda, 2, 2, 3 + seed as usize % 4);
        let pick = |rng: &mut ChaCha8Rng| -> Vec<Configuration> {
            (0..2).map(|_| {
                let h = rng.gen_range(0..=2);
                random_config(&sys, rng, h)
            }).collect()
        };
        let (target, source) = (pick(&mut rng), pick(&mut rng));
        let pre = pre_star(&sys, &as_automaton(&sys, &target), &limits).map_err(err)?;
        let post = post_star(&sys, &as_automaton(&sys, &source), &limits).map_err(err)?;
        let forward = bounded_forward(&sys, &source, 6);
        for c in all_configurations(&sys, 4) {
            let reaches = bounded_forward(&sys, std::slice::from_ref(&c), 6).iter().any(|d| target.contains(d));
            ensure(member(&pre, &c) == reaches, || {
                format!("seed {seed}: pre* says {} for {}\n{sys}", member(&pre, &c), sys.format_configuration(&c))
            })?;
            ensure(member(&post, &c) == forward.contains(&c), || {
                format!("seed {seed}: post* says {} for {}\n{sys}", member(&post, &c), sys.format_configuration(&c))
            })?;
            checked += 1;
            in_pre += reaches as usize;
            in_post += forward.contains(&c) as usize;
        }
        let shuffled = rebuild_shuffled(&sys, &mut rng)?;
        let pre2 = pre_star(&shuffled, &as_automaton(&shuffled, &target), &limits).map_err(err)?;
        let post2 = post_star(&shuffled, &as_automaton(&shuffled, &source), &limits).map_err(err)?;
        for c in all_configurations(&sys, 4) {
            ensure(member(&pre, &c) == member(&pre2, &c) && member(&post, &c) == member(&post2, &c), || {
                format!("seed {seed}: permutation changed membership of {}", sys.format_configuration(&c))
            })?;
        }
    }
    Ok(format!(
        "100 systems, {checked} configurations ({in_pre} in pre*, {in_post} in post*), permutation invariant"
    ))
}

/// A single-state system whose `X` has finitely many reachable configurations.
fn finite_bpa(seed: u64) -> Option<(VpdaSystem, SymbolId)> {
    let mut p = RandomParams::new(SystemKind::Pda, seed);
    p.states = 1;
    p.symbols = 3;
    p.rules = 2 + seed as usize % 5;
    let sys = gen_random(&p).ok()?;
    let x = sys.rules().first()?.src_symbol;
    let reach = bounded_forward(&sys, &[Configuration::new(sys.rules()[0].src_state, vec![x])], 12);
    (reach.iter().all(|c| c.height() < 12)).then_some((sys, x))
}

fn regularity() -> Outcome {
    let limits = Limits::default();
    let ex23 = parse_system("calls: a\nreturns: b c\ninternals:\np X -a-> p X Y\np X -b-> p -\np Y -c-> p -\n")
        .map_err(err)?;
    let px = ex23.parse_configuration("p:X").map_err(err)?;
    ensure(!is_regular(&ex23, &px, Relation::Bisim, &limits).map_err(err)?, || "pX reported regular".into())?;
    let lp = parse_system("calls:\nreturns:\ninternals: a\np X -a-> p X\n").map_err(err)?;
    let w = regular_witness(&lp, &lp.parse_configuration("p:X").map_err(err)?, &limits).map_err(err)?;
    ensure(w.state_count() == 1 && w.transition_count() == 1, || format!("witness\n{w}"))?;
    let mut v1ca = 0;
    let mut popping = 0;
    let mut seed = 0u64;
    while v1ca < 100 {
        seed += 1;
        let sys = small_vpda(3000 + seed, SystemKind::V1ca, 1 + seed as usize % 3, 2, 3 + seed as usize % 6);
        for q in sys.state_ids() {
            let c = Configuration::new(q, vec![sys.symbol_id("Z").unwrap()]);
            let fast = v1ca_fast_path(&sys, q).map_err(err)?;
            let generic = !is_regular(&sys, &c, Relation::Bisim, &limits).map_err(err)?;
            popping += fast as usize;
            ensure(fast == generic, || format!("seed {seed} state {}: fast {fast}, generic {generic}\n{sys}", sys.state_name(q)))?;
        }
        v1ca += 1;
    }
    let mut instances = 0;
    let mut regular = 0;
    let mut seed = 0u64;
    while instances < 50 {
        seed += 1;
        ensure(seed < 10_000, || format!("only {instances} finite instances"))?;
        let Some((bpa, x)) = finite_bpa(4000 + seed) else { continue };
        let (inst, probe) = gen_regularity_instance(&bpa, x).map_err(err)?;
        let x_inst = inst.symbol_id(bpa.symbol_name(x)).unwrap();
        let language_empty = !empties(&inst).map_err(err)?.contains(&x_inst);
        let c = Configuration::new(inst.rules()[0].src_state, vec![probe]);
        let reg = is_regular(&inst, &c, Relation::Bisim, &limits).map_err(err)?;
        ensure(reg == language_empty, || format!("seed {seed}: regular {reg}, empty {language_empty}\n{inst}"))?;
        regular += reg as usize;
        instances += 1;
    }
    Ok(format!(
        "worked examples ok; 100 one-counter systems agree ({popping} non-regular starts); 50 instances ({regular} regular)"
    ))
}

fn performance() -> Outcome {
    let mut p = RandomParams::new(SystemKind::Vbpa, 9);
    p.symbols = 2000;
    p.rules = 10_000;
    p.calls = 3;
    p.returns = 3;
    p.internals = 3;
    let sys = gen_random(&p).map_err(err)?;
    let t = Instant::now();
    let lts = reduce_to_finite(&sys).map_err(err)?;
    let all: Vec<usize> = (0..lts.state_count()).collect();
    let classes = bisimulation_classes(&lts, &all).into_iter().collect::<BTreeSet<_>>().len();
    let holds = check_relation_vbpa(&sys, SymbolId(0), SymbolId(1), Relation::Bisim).map_err(err)?;
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{} rules, {} reduced states in {classes} classes, bisim {holds}, {elapsed:?}",
        sys.rules().len(),
        lts.state_count()
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("product worked example", product_worked_example),
        ("reduction shape", reduction_shape),
        ("relation hierarchy", hierarchy),
        ("bounded oracle equivalence", oracle_equivalence),
        ("vBPA path agreement", vbpa_agreement),
        ("AFA gadget ground truth", gadget_ground_truth),
        ("saturation exactness", saturation_exactness),
        ("regularity", regularity),
        ("performance smoke", performance),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.2}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.2}s] {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
