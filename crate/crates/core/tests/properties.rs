mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vpe_core::automaton::{member, PAutomaton};
use vpe_core::generators::AfaSpec;
use vpe_core::product::{build_product, ProductConfig, ProductLabel, Side};
use vpe_core::finite::{bisimulation_classes, finite_check, FiniteLts};
use vpe_core::generators::{afa_emptiness, gen_hard_v1ca, gen_random, gen_random_afa, hard_v1ca_rule_count, parse_afa, RandomParams, SystemKind};
use vpe_core::regularity::{is_regular, regular_witness};
use vpe_core::relations::{bounded_oracle, decide, extract_witness, Relation};
use vpe_core::saturation::{post_star, pre_star};
use vpe_core::system::step;
use vpe_core::vbpa::reduce_to_finite;
use vpe_core::{parse_system, Configuration, Error, Limits, VpdaSystem};

use common::*;

fn relation() -> impl Strategy<Value = Relation> {
    proptest::sample::select(Relation::ALL.to_vec())
}

fn lts_strategy() -> impl Strategy<Value = FiniteLts> {
    (1usize..7, proptest::collection::vec((0usize..7, 0usize..2, 0usize..7), 0..14)).prop_map(|(n, edges)| {
        let mut lts = FiniteLts::new();
        for i in 0..n {
            lts.add_state(&format!("s{i}"));
        }
        lts.add_action("a");
        lts.add_action("b");
        for (s, a, t) in edges {
            lts.add_transition(s % n, a, t % n).unwrap();
        }
        lts
    })
}

/// Greatest fixpoint over all pairs; cubic and obviously correct.
fn naive_bisim(lts: &FiniteLts) -> Vec<Vec<bool>> {
    let n = lts.state_count();
    let mut rel = vec![vec![true; n]; n];
    let matched = |rel: &Vec<Vec<bool>>, s: usize, t: usize| {
        lts.successors(s)
            .iter()
            .all(|&(a, s2)| lts.successors(t).iter().any(|&(b, t2)| a == b && rel[s2][t2]))
    };
    loop {
        let mut changed = false;
        for s in 0..n {
            for t in 0..n {
                if rel[s][t] && !(matched(&rel, s, t) && matched(&rel, t, s)) {
                    rel[s][t] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

/// Reachable configurations as a finite system, if there are at most `cap`.
fn explicit_lts(sys: &VpdaSystem, root: &Configuration, cap: usize) -> Option<FiniteLts> {
    let mut lts = FiniteLts::new();
    for a in sys.alphabet().ids() {
        lts.add_action(sys.action_name(a));
    }
    let mut ids: HashMap<Configuration, usize> = HashMap::new();
    ids.insert(root.clone(), lts.add_state(&format!("c:{}", sys.format_configuration(root))));
    let mut work = vec![root.clone()];
    while let Some(c) = work.pop() {
        let s = ids[&c];
        for (a, n) in step(sys, &c) {
            let t = match ids.get(&n) {
                Some(&t) => t,
                None => {
                    if ids.len() >= cap {
                        return None;
                    }
                    let t = lts.add_state(&format!("c:{}", sys.format_configuration(&n)));
                    ids.insert(n.clone(), t);
                    work.push(n);
                    t
                }
            };
            lts.add_transition(s, a.index(), t).unwrap();
        }
    }
    Some(lts)
}

fn disjoint_union(a: &FiniteLts, b: &FiniteLts) -> FiniteLts {
    let mut u = FiniteLts::new();
    for (tag, part) in [("l", a), ("r", b)] {
        for s in part.state_names() {
            u.add_state(&format!("{tag}/{s}"));
        }
        for (s, x, t) in part.transitions() {
            let s = u.state_id(&format!("{tag}/{}", part.state_name(s))).unwrap();
            let t = u.state_id(&format!("{tag}/{}", part.state_name(t))).unwrap();
            let x = u.add_action(part.action_name(x));
            u.add_transition(s, x, t).unwrap();
        }
    }
    u
}

fn vpda(seed: u64) -> VpdaSystem {
    small_vpda(seed, SystemKind::Vpda, 1 + seed as usize % 3, 1 + seed as usize % 3, 3 + seed as usize % 6)
}

/// Does the automaton accept `I^k` from `q`? Plain recursion over the computation tree.
fn afa_accepts(afa: &AfaSpec, q: &str, k: usize, memo: &mut HashMap<(String, usize), bool>) -> bool {
    if let Some(&v) = memo.get(&(q.to_string(), k)) {
        return v;
    }
    let v = if k == 0 {
        afa.finals.contains(q)
    } else {
        let succ: Vec<String> = afa.delta[q].iter().cloned().collect();
        if afa.existential.contains(q) {
            succ.iter().any(|r| afa_accepts(afa, r, k - 1, memo))
        } else {
            succ.iter().all(|r| afa_accepts(afa, r, k - 1, memo))
        }
    };
    memo.insert((q.to_string(), k), v);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_matches_naive_bisimulation(lts in lts_strategy()) {
        let all: Vec<usize> = (0..lts.state_count()).collect();
        let classes = bisimulation_classes(&lts, &all);
        let naive = naive_bisim(&lts);
        for s in 0..lts.state_count() {
            for t in 0..lts.state_count() {
                prop_assert_eq!(classes[s] == classes[t], naive[s][t]);
                prop_assert_eq!(finite_check(&lts, s, t, Relation::Bisim).unwrap(), naive[s][t]);
            }
        }
    }

    #[test]
    fn finite_relations_are_reflexive_and_ordered(lts in lts_strategy(), s in 0usize..7, t in 0usize..7) {
        let (s, t) = (s % lts.state_count(), t % lts.state_count());
        for rel in Relation::ALL {
            prop_assert!(finite_check(&lts, s, s, rel).unwrap());
        }
        let holds: BTreeSet<Relation> =
            Relation::ALL.into_iter().filter(|&r| finite_check(&lts, s, t, r).unwrap()).collect();
        for chain in [CHAIN_PRE, CHAIN_EQ] {
            for w in chain.windows(2) {
                prop_assert!(!holds.contains(&w[0]) || holds.contains(&w[1]));
            }
        }
    }

    #[test]
    fn relations_are_reflexive(seed in 0u64..5000, rel in relation()) {
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, _) = random_pair(&sys, &mut rng);
        prop_assert!(decide(&sys, &c, &c, rel, &Limits::default()).unwrap().holds);
    }

    #[test]
    fn equivalences_are_symmetric(seed in 0u64..5000, rel in relation()) {
        prop_assume!(rel.is_equivalence());
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&sys, &mut rng);
        let lr = decide(&sys, &l, &r, rel, &Limits::default()).unwrap().holds;
        let rl = decide(&sys, &r, &l, rel, &Limits::default()).unwrap().holds;
        prop_assert_eq!(lr, rl);
    }

    #[test]
    fn equivalence_is_both_preorders(seed in 0u64..5000, rel in relation()) {
        prop_assume!(rel.is_equivalence() && rel != Relation::Bisim);
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&sys, &mut rng);
        let limits = Limits::default();
        let eq = decide(&sys, &l, &r, rel, &limits).unwrap().holds;
        let pre = rel.preorder();
        let both = decide(&sys, &l, &r, pre, &limits).unwrap().holds && decide(&sys, &r, &l, pre, &limits).unwrap().holds;
        prop_assert_eq!(eq, both);
    }

    #[test]
    fn witnesses_exist_exactly_for_unrelated_pairs(seed in 0u64..5000, rel in relation()) {
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&sys, &mut rng);
        let limits = Limits::default();
        let holds = decide(&sys, &l, &r, rel, &limits).unwrap().holds;
        match extract_witness(&sys, &l, &r, rel, &limits) {
            Ok(w) => {
                prop_assert!(!holds);
                prop_assert!(!bounded_oracle(&sys, &l, &r, rel, w.depth(), &limits).unwrap());
            }
            Err(Error::Related) => prop_assert!(holds),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn system_text_round_trips(seed in 0u64..5000) {
        let sys = vpda(seed);
        let again = parse_system(&sys.to_string()).unwrap();
        prop_assert_eq!(again.to_string(), sys.to_string());
    }

    #[test]
    fn saturation_contains_its_input(seed in 0u64..5000) {
        let sys = small_vpda(seed, SystemKind::Pda, 2, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let configs: Vec<Configuration> = (0..3).map(|h| random_config(&sys, &mut rng, h)).collect();
        let auto = PAutomaton::from_configurations(
            sys.state_count(),
            configs.iter().map(|c| (c.state.0, c.stack.iter().map(|y| y.0).collect())),
        );
        let pre = pre_star(&sys, &auto, &Limits::default()).unwrap();
        let post = post_star(&sys, &auto, &Limits::default()).unwrap();
        for c in &configs {
            prop_assert!(member(&pre, c));
            prop_assert!(member(&post, c));
            for (_, n) in step(&sys, c) {
                prop_assert!(member(&post, &n));
            }
        }
        // one more round adds nothing
        let pre2 = pre_star(&sys, &pre, &Limits::default()).unwrap();
        prop_assert_eq!(pre2.transition_count(), pre.transition_count());
        let post2 = post_star(&sys, &post, &Limits::default()).unwrap();
        prop_assert_eq!(post2.transition_count(), post.transition_count());
    }

    #[test]
    fn reduction_respects_the_linear_bound(seed in 0u64..5000) {
        let mut p = RandomParams::new(SystemKind::Vbpa, seed);
        p.symbols = 1 + seed as usize % 6;
        p.rules = 1 + seed as usize % 12;
        let sys = gen_random(&p).unwrap();
        let lts = reduce_to_finite(&sys).unwrap();
        prop_assert!(lts.state_count() <= sys.symbol_count() + sys.rules().len() + 1);
    }

    #[test]
    fn finite_state_processes_are_regular_with_bisimilar_witness(seed in 0u64..5000) {
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, _) = random_pair(&sys, &mut rng);
        let limits = Limits::default();
        let regular = is_regular(&sys, &c, Relation::Bisim, &limits).unwrap();
        if explicit_lts(&sys, &c, 300).is_some() {
            prop_assert!(regular);
        }
        if regular {
            let w = regular_witness(&sys, &c, &limits).unwrap();
            // compare against the explicit system, truncated where it is infinite
            if let Some(explicit) = explicit_lts(&sys, &c, 300) {
                let u = disjoint_union(&explicit, &w);
                let a = u.state_id(&format!("l/{}", explicit.state_name(0))).unwrap();
                let b = u.state_id(&format!("r/{}", w.state_name(0))).unwrap();
                prop_assert!(finite_check(&u, a, b, Relation::Bisim).unwrap());
            }
        }
    }

    #[test]
    fn gadget_has_the_predicted_size(n in 1usize..6, seed in 0u64..1000) {
        let afa = gen_random_afa(n, seed);
        prop_assert_eq!(parse_afa(&afa.to_string()).unwrap(), afa.clone());
        let (sys, _, _) = gen_hard_v1ca(&afa).unwrap();
        prop_assert!(sys.flags().is_v1ca);
        prop_assert_eq!(sys.rules().len(), hard_v1ca_rule_count(&afa));
    }

    #[test]
    fn emptiness_matches_word_enumeration(n in 1usize..5, seed in 0u64..5000) {
        let afa = gen_random_afa(n, seed);
        let mut memo = HashMap::new();
        // the acceptance sets repeat within 2^n steps, so longer words add nothing
        let some_word = (0..=(1usize << n)).any(|k| afa_accepts(&afa, &afa.initial, k, &mut memo));
        prop_assert_eq!(afa_emptiness(&afa), !some_word);
    }

    #[test]
    fn product_rounds_project_to_matching_steps(seed in 0u64..5000) {
        let sys = vpda(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&sys, &mut rng);
        let prod = build_product(&sys).unwrap();
        let root = ProductConfig::root(&l, &r).unwrap();
        let expected: BTreeSet<(Configuration, Configuration)> = step(&sys, &l)
            .into_iter()
            .flat_map(|(a, l2)| {
                step(&sys, &r).into_iter().filter(move |(b, _)| *b == a).map(move |(_, r2)| (l2.clone(), r2))
            })
            .collect();
        for first in [Side::Left, Side::Right] {
            let mut got = BTreeSet::new();
            for (l1, mid) in prod.step(&root) {
                if l1 != ProductLabel::Move(first) {
                    continue;
                }
                prop_assert!(mid.split().is_none());
                for (l2, end) in prod.step(&mid) {
                    if l2 == ProductLabel::Move(first.other()) {
                        got.insert(end.split().unwrap());
                    }
                }
            }
            prop_assert_eq!(&got, &expected);
        }
    }
}
