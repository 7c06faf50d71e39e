mod common;

use avmac_core::adversary::{
    monte_carlo_error, ErrorEntry, ErrorProfile, ErrorValue, MonteCarloConfig, Strategy as Adversary,
};
use avmac_core::extension::{
    build_plan, concat_decode, concat_encode, erasure_budget, inner_results, min_distance, uniform_pattern,
    verify_extension, worst_case_erasures,
};
use avmac_core::feasibility::{find_overwriter, find_symmetrizer, WitnessKind};
use avmac_core::format::{
    parse_channel, parse_codebooks, parse_plan, parse_witness, serialize_channel, serialize_codebooks, serialize_plan,
    serialize_witness, PlanFile,
};
use avmac_core::rational::rational;
use avmac_core::verifier::{
    a0_a1_intersect, check_condition1, check_condition3, is_zero_error, scan_condition3_fast, VerifierConfig,
};
use avmac_core::{make_adder_channel, CanonicalDecoder, ChannelSpec, CodebookTuple, Decoder, Gamma, StateSequence};
use common::*;
use proptest::prelude::*;

fn codebooks(
    t: std::ops::RangeInclusive<usize>,
    n: std::ops::RangeInclusive<usize>,
    m: usize,
) -> impl Strategy<Value = CodebookTuple> {
    (t, n).prop_flat_map(move |(t, n)| {
        let book = prop::collection::btree_set(0u32..(1 << n), 1..=m.min(1 << n));
        prop::collection::vec(book, t).prop_map(move |books| {
            let books = books
                .into_iter()
                .map(|b| {
                    b.into_iter().map(|mask| (0..n).map(|k| ((mask >> (n - 1 - k)) & 1) as u8).collect()).collect()
                })
                .collect();
            CodebookTuple::new(books).expect("distinct words of one length")
        })
    })
}

fn gamma_strategy() -> impl Strategy<Value = Gamma> {
    (2i64..=7).prop_flat_map(|q| (1..q).prop_map(move |p| Gamma::from_ratio(p, q).unwrap()))
}

fn cfg() -> VerifierConfig {
    VerifierConfig::default()
}

fn random_channel() -> impl Strategy<Value = ChannelSpec> {
    (prop::collection::vec(1usize..=2, 2..=3), 1usize..=3, 2usize..=3).prop_flat_map(|(sizes, states, outputs)| {
        let rows = sizes.iter().product::<usize>() * states;
        prop::collection::vec(prop::collection::vec(0i64..4, outputs), rows).prop_map(move |weights| {
            let mut it = weights.into_iter();
            ChannelSpec::from_fn(sizes.clone(), states, outputs, 0, |_, _| {
                let mut w = it.next().unwrap();
                if w.iter().all(|&x| x == 0) {
                    w[0] = 1;
                }
                let total: i64 = w.iter().sum();
                w.into_iter().map(|x| rational(x, total)).collect()
            })
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn codebook_text_round_trip(cb in codebooks(2..=4, 1..=8, 4)) {
        prop_assert_eq!(parse_codebooks(&serialize_codebooks(&cb)).unwrap(), cb);
    }

    #[test]
    fn channel_toml_round_trip(ch in random_channel()) {
        let text = serialize_channel(&ch).unwrap();
        let back = parse_channel(&text).unwrap();
        prop_assert_eq!(serialize_channel(&back).unwrap(), text);
        prop_assert_eq!(back, ch);
    }

    #[test]
    fn adder_witness_round_trip(t in 2usize..=3, ell in 1usize..=2, pick in 0usize..8) {
        let ch = make_adder_channel(t, ell).unwrap();
        let subsets: Vec<Vec<usize>> = (1..=ell.min(t)).flat_map(|q| itertools::Itertools::combinations(0..t, q)).collect();
        let users = &subsets[pick % subsets.len()];
        let w = find_symmetrizer(&ch, users).unwrap().expect("q <= l is symmetrizable");
        let (back, kind) = parse_witness(&serialize_witness(&w, Some(WitnessKind::Symmetrizer)).unwrap()).unwrap();
        prop_assert_eq!(back, w);
        prop_assert_eq!(kind, Some(WitnessKind::Symmetrizer));
    }

    #[test]
    fn plan_round_trip(r in 1usize..=8, words in prop::collection::vec(prop::collection::vec(0usize..12, 8), 1..=3), g in gamma_strategy()) {
        let code: Vec<Vec<usize>> = words.into_iter().map(|w| w[..r].to_vec()).collect();
        let plan = PlanFile::new("inner.txt".into(), g, 1, r, &[code.clone(), code.clone()]);
        let back = parse_plan(&serialize_plan(&plan).unwrap()).unwrap();
        prop_assert_eq!(back.outer_codes().unwrap(), vec![code.clone(), code]);
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn required_users_is_exact_ceiling(g in gamma_strategy(), t in 2usize..=12) {
        let (p, q) = (g.value().numer().to_string().parse::<usize>().unwrap(), g.value().denom().to_string().parse::<usize>().unwrap());
        prop_assert_eq!(g.required_users(t), ceil_ratio(p, q, t));
    }

    #[test]
    fn difference_scan_matches_direct_construction(cb in codebooks(2..=3, 1..=6, 3), ell in 1usize..=2) {
        prop_assert_eq!(check_condition1(&cb, ell).is_none(), !a0_a1_intersect(&cb, ell));
    }

    #[test]
    fn fast_scan_only_reports_real_collisions(cb in codebooks(2..=3, 1..=5, 3), ell in 1usize..=2, g in gamma_strategy()) {
        if !scan_condition3_fast(&cb, ell, &g).is_empty() {
            prop_assert!(check_condition3(&cb, ell, &g).unwrap().is_some());
        }
    }

    #[test]
    fn verifier_matches_decoder_free_oracle(cb in codebooks(2..=3, 1..=3, 3), ell in 1usize..=2, g in gamma_strategy()) {
        let u = g.required_users(cb.t());
        prop_assert_eq!(is_zero_error(&cb, ell, &g, &cfg()).unwrap(), zero_error_achievable(&cb, ell, u));
    }

    #[test]
    fn verification_is_monotone_in_gamma(cb in codebooks(2..=3, 2..=5, 2), ell in 1usize..=2, a in gamma_strategy(), b in gamma_strategy()) {
        let (lo, hi) = if a.value() <= b.value() { (a, b) } else { (b, a) };
        if is_zero_error(&cb, ell, &hi, &cfg()).unwrap() {
            prop_assert!(is_zero_error(&cb, ell, &lo, &cfg()).unwrap());
        }
    }

    #[test]
    fn canonical_decoder_lands_in_success_sets(cb in codebooks(2..=3, 2..=4, 2), ell in 1usize..=2, g in gamma_strategy()) {
        let Ok(dec) = CanonicalDecoder::new(&cb, ell, &g) else { return Ok(()); };
        let u = g.required_users(cb.t());
        for s in all_vectors(ell + 1, cb.n()) {
            let clean = s.iter().all(|&x| x == 0);
            for m in message_tuples(&cb) {
                prop_assert!(succeeds(&dec.decode(&adder_output(&cb, &m, &s)), &m, clean, u), "tuple {:?} under {:?}", m, s);
            }
        }
    }

    #[test]
    fn erasure_budget_matches_search(t in 2usize..=5, u_off in 0usize..4, r in 0usize..=8) {
        let u = 1 + u_off % (t - 1);
        let budget = erasure_budget(t, u, r).unwrap();
        prop_assert_eq!(budget, worst_case_brute(t, u, r));
        let (value, pattern) = worst_case_erasures(t, u, r, 1 << 20).unwrap();
        prop_assert_eq!(value, budget);
        prop_assert!(pattern.is_admissible(u));
        prop_assert_eq!(pattern.value(u), budget);
        let spread = uniform_pattern(t, u, r).unwrap();
        prop_assert!(spread.is_admissible(u));
        prop_assert!(spread.value(u) <= budget);
    }

    #[test]
    fn error_profile_max_is_first_largest(values in prop::collection::vec((0i64..6, 1i64..6), 1..20)) {
        let entries: Vec<ErrorEntry> = values
            .iter()
            .enumerate()
            .map(|(i, &(p, q))| ErrorEntry { label: i.to_string(), value: ErrorValue::Exact { value: rational(p, q) } })
            .collect();
        let profile = ErrorProfile::new(entries.clone());
        let best = entries.iter().map(|e| e.value.exact().unwrap().clone()).max().unwrap();
        let first = entries.iter().find(|e| *e.value.exact().unwrap() == best).unwrap();
        prop_assert_eq!(profile.max.as_ref(), Some(first));
        prop_assert!(entries.iter().all(|e| e.value.exact().unwrap() <= profile.max_value().unwrap().exact().unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn concatenation_never_decodes_wrongly(
        r in 1usize..=6,
        code in prop::collection::btree_set(0u32..64, 1..=4),
        messages in prop::collection::vec(0usize..4, 3),
        states in prop::collection::vec(0usize..=1, 36),
    ) {
        let words: Vec<Vec<usize>> = code
            .into_iter()
            .map(|mask| (0..r).map(|k| ((mask >> k) & 1) as usize).collect::<Vec<_>>())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let plan = build_plan(good_triple(), vec![words.clone(); 3], r, 1, &"2/3".parse().unwrap()).unwrap();
        let truth: Vec<usize> = messages.iter().map(|m| m % words.len() + 1).collect();
        let sent = concat_encode(&plan, &truth).unwrap();
        let n = r * 6;
        let clean: Vec<usize> = (0..n).map(|k| sent.iter().map(|w| usize::from(w[k])).sum()).collect();
        let decoded = concat_decode(&plan, &inner_results(&plan, &clean).unwrap()).unwrap();
        prop_assert_eq!(&decoded.estimates, &truth);

        let noisy: Vec<usize> = clean.iter().zip(&states).map(|(y, s)| y + s).collect();
        let decoded = concat_decode(&plan, &inner_results(&plan, &noisy).unwrap()).unwrap();
        for (e, t) in decoded.estimates.iter().zip(&truth) {
            prop_assert!(*e == 0 || e == t);
        }
        if words.len() < 2 || min_distance(&words).unwrap() > plan.budget {
            prop_assert!(decoded.correct(&truth) >= plan.u);
        }
    }

    #[test]
    fn extension_verdict_matches_pattern_oracle(
        r in 1usize..=5,
        code in prop::collection::btree_set(0u32..32, 2..=4),
    ) {
        let words: Vec<Vec<usize>> = code
            .into_iter()
            .map(|mask| (0..r).map(|k| ((mask >> k) & 1) as usize).collect::<Vec<_>>())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        prop_assume!(words.len() >= 2);
        let plan = build_plan(good_triple(), vec![words.clone(); 3], r, 1, &"2/3".parse().unwrap()).unwrap();
        let verdict = verify_extension(&plan, 1 << 20).unwrap();
        if min_distance(&words).unwrap() > plan.budget {
            prop_assert!(verdict.pass);
        }
        // Each instance erases nobody or one of the three users.
        let oracle_fails = all_vectors(4, r).into_iter().any(|choice| {
            let lost = (0..3)
                .filter(|&j| {
                    let erased: Vec<bool> = choice.iter().map(|&c| c == j + 1).collect();
                    words.iter().any(|w| !recoverable(&words, w, &erased))
                })
                .count();
            lost > 3 - plan.u
        });
        prop_assert_eq!(verdict.pass, !oracle_fails);
        if let Some(f) = verdict.failure {
            prop_assert!(f.pattern.is_admissible(plan.u));
            let lost = (0..3).filter(|&j| words.iter().any(|w| !recoverable(&words, w, &f.pattern.erased[j]))).count();
            prop_assert!(lost > 3 - plan.u);
        }
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), trials in 1u64..400) {
        let cb = bad_collision();
        let ch = make_adder_channel(3, 1).unwrap();
        let dec = CanonicalDecoder::new_unchecked(&cb, 1);
        let g: Gamma = "2/3".parse().unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                monte_carlo_error(&cb, &ch, &dec, &Adversary::UniformRandom, &g, &MonteCarloConfig::new(trials, seed)).unwrap()
            })
        };
        let a = run(1);
        prop_assert_eq!(&a, &run(3));
        prop_assert_eq!(a, run(1));
    }

    #[test]
    fn zero_error_tuples_never_fail_under_sampling(seed in any::<u64>(), s in prop::collection::vec(0usize..=1, 6)) {
        let cb = good_triple();
        let ch = make_adder_channel(3, 1).unwrap();
        let g: Gamma = "2/3".parse().unwrap();
        let dec = CanonicalDecoder::new(&cb, 1, &g).unwrap();
        for strategy in [Adversary::NoAdversary, Adversary::UniformRandom, Adversary::Fixed(StateSequence(s.clone()))] {
            let p = monte_carlo_error(&cb, &ch, &dec, &strategy, &g, &MonteCarloConfig::new(200, seed)).unwrap();
            match p.max_value() {
                Some(ErrorValue::Estimate(e)) => prop_assert_eq!(e.failures, 0),
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}

#[test]
fn overwriters_never_exist_on_adder_channels() {
    for (t, ell) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
        let ch = make_adder_channel(t, ell).unwrap();
        for q in 1..=t {
            for users in itertools::Itertools::combinations(0..t, q) {
                assert!(find_overwriter(&ch, &users).unwrap().is_none(), "t={t} l={ell} users {users:?}");
            }
        }
    }
}
