use diagalg::basisgen::{change_of_basis, extract_coefficients};
use diagalg::evalfun::evaluate;
use diagalg::exactnum::FieldSpec;
use diagalg::skein::*;
use diagalg::tangle::{from_circuit, gamma_diagram, random_box_circuit, CircuitSpec, Diagram, Gate, Port, RandomCircuitOptions, Sign, VertexKind};
use diagalg::wordlang::{accepts, enumerate, Automaton};
use proptest::prelude::*;
use rand::SeedableRng;

fn configs() -> Vec<(FieldSpec, Option<usize>)> {
    vec![(FieldSpec::rational(), None), (FieldSpec::prime(2).unwrap(), Some(2)), (FieldSpec::prime(3).unwrap(), Some(3))]
}

fn named(r: &Normalized, f: &FieldSpec) -> Vec<(String, String)> {
    r.terms.iter().map(|(w, c)| (w.to_string(), f.format_elem(c))).collect()
}

#[test]
fn relations_hold_in_every_field() {
    let mut cases = vec![(FieldSpec::rational(), None)];
    for p in [2usize, 3, 5] {
        cases.push((FieldSpec::prime(p as u64).unwrap(), None));
        cases.push((FieldSpec::prime(p as u64).unwrap(), Some(p)));
    }
    for (f, p) in cases {
        let rules = builtin_rules(&f, p).unwrap();
        assert!(rules.iter().all(|r| r.verified));
        let names: Vec<&str> = rules.iter().map(|r| r.name.as_str()).collect();
        for want in ["E1", "E2", "E3", "E4", "E4'", "E5"] {
            assert!(names.contains(&want));
        }
        if let Some(p) = p {
            let s = if p == 2 { " (p=2)" } else { "" };
            for want in ["Es1", "Es2", "E6", "E7", &format!("E9{s}"), &format!("E10{s}")] {
                assert!(names.contains(&want), "{want} for p={p}");
            }
        }
    }
}

#[test]
fn swap_resolves_into_two_terms() {
    let q = FieldSpec::rational();
    let c = CircuitSpec { boundary: vec![Sign::Plus, Sign::Plus], slices: vec![vec![Gate::Swap]] };
    let d = from_circuit(&c).unwrap().flatten();
    assert_eq!(d.boundary.len(), 4);
    let r = normalize(&d, &q, None, &NormalizeOptions::default()).unwrap();
    assert_eq!(r.terms.len(), 2);
    assert!(r.terms.iter().all(|(_, c)| *c == q.one()), "{:?}", named(&r, &q));
}

#[test]
fn dot_under_a_cap() {
    let q = FieldSpec::rational();
    let mut d = Diagram::with_ground(3);
    let b = d.add_vertex(VertexKind::Bracket);
    let t = d.add_vertex(VertexKind::Dot);
    d.connect(Port::Boundary(0), Port::Leg(b, 0));
    d.connect(Port::Boundary(2), Port::Leg(b, 1));
    d.connect(Port::Boundary(1), Port::Leg(t, 0));
    let opts = NormalizeOptions { trace: true, ..Default::default() };
    let r = normalize(&d, &q, None, &opts).unwrap();
    assert_eq!(named(&r, &q), vec![("<>.".to_string(), "1".to_string()), (".<>".to_string(), "1".to_string())]);
    assert!(r.trace.iter().any(|l| l.split('\t').nth(1) == Some("E5")));
    for l in &r.trace {
        assert_eq!(l.split('\t').count(), 3);
    }
}

#[test]
fn basis_words_are_fixed_points() {
    for (f, p) in configs() {
        let rules = SkeinRules::new(&f, p).unwrap();
        let a = match p {
            Some(p) => Automaton::Np(p),
            None => Automaton::N0,
        };
        for n in 0..=7 {
            for w in enumerate(a, n) {
                let r = rules.normalize(&gamma_diagram(&w).unwrap(), &NormalizeOptions::default()).unwrap();
                assert_eq!(r.terms, vec![(w.clone(), f.one())], "{w}");
            }
        }
    }
}

#[test]
fn agrees_with_extraction() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for (f, p) in configs() {
        let rules = SkeinRules::new(&f, p).unwrap();
        let cobs: Vec<_> = (0..=8).map(|n| change_of_basis(n, &f, p).unwrap()).collect();
        for _ in 0..40 {
            let n = rand::Rng::gen_range(&mut rng, 0..=8);
            let ro = RandomCircuitOptions { slices: 6, max_wires: 10, p, max_jellies: 2 };
            let d = from_circuit(&random_box_circuit(&mut rng, n, &ro)).unwrap();
            let r = rules.normalize(&d, &NormalizeOptions::default()).unwrap();
            let x = extract_coefficients(&evaluate(&d, &f).unwrap(), n, &f, p).unwrap();
            let (words, cob) = &cobs[n];
            let mut via = vec![f.zero(); x.len()];
            for (w, c) in &r.terms {
                let row = words.iter().position(|v| v == w).unwrap();
                for (j, slot) in via.iter_mut().enumerate() {
                    *slot = f.add(slot, &f.mul(c, cob.get(row, j)));
                }
            }
            assert_eq!(via, x);
        }
    }
}

#[test]
fn step_limit_is_enforced() {
    let f = FieldSpec::prime(3).unwrap();
    let c = CircuitSpec { boundary: vec![Sign::Plus; 4], slices: vec![vec![Gate::Swap, Gate::IdPlus, Gate::IdPlus]] };
    let d = from_circuit(&c).unwrap().flatten();
    let opts = NormalizeOptions { step_limit: 1, ..Default::default() };
    assert_eq!(normalize(&d, &f, Some(3), &opts).unwrap_err(), SkeinError::StepLimitExceeded(1));
}

#[test]
fn jellyfish_need_characteristic_p() {
    let f = FieldSpec::rational();
    let t = ChordTerm::new(5, (0..5).map(|i| (End::G(i), End::J(0))).collect());
    let (d, _) = t.to_diagram(3).unwrap();
    assert_eq!(normalize(&d, &f, None, &NormalizeOptions::default()).unwrap_err(), SkeinError::NeedsCharP);
}

#[test]
fn presentation_reports() {
    let r = verify_presentation(&FieldSpec::prime(3).unwrap(), Some(3), 6, 1);
    assert!(r.all_pass(), "{:?}", r.items.iter().filter(|i| !i.pass).collect::<Vec<_>>());
    let r = verify_presentation(&FieldSpec::prime(2).unwrap(), Some(2), 6, 1);
    assert!(r.all_pass());
    // over Q everything passes except the literal -1 diagonal: the
    // diagonal is (-1)^{#L}, and every n has a word with an even count
    let r = verify_presentation(&FieldSpec::rational(), None, 6, 1);
    for i in &r.items {
        assert_eq!(i.pass, !i.name.contains("diagonal"), "{}", i.name);
    }
}

/// A random chord term: ground points, jellyfish and dots paired at random.
fn random_term(seed: u64, p: usize, n: usize, jellies: usize) -> ChordTerm {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<End> = (0..n).map(End::G).collect();
    for k in 0..jellies {
        slots.extend(std::iter::repeat(End::J(k)).take(2 * p - 1));
    }
    let mut d = 0;
    while slots.len() % 2 == 1 || rng.gen_bool(0.15) {
        slots.push(End::S(d));
        d += 1;
    }
    slots.shuffle(&mut rng);
    ChordTerm::new(n, slots.chunks(2).map(|c| (c[0], c[1])).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_sound(seed in any::<u64>(), n in 0usize..=8, which in 0usize..3) {
        let (f, p) = configs().swap_remove(which);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ro = RandomCircuitOptions { slices: 8, max_wires: 10, p, max_jellies: 3 };
        let d = from_circuit(&random_box_circuit(&mut rng, n, &ro)).unwrap();
        let opts = NormalizeOptions { check_each: true, ..Default::default() };
        let r = normalize(&d, &f, p, &opts).unwrap();
        for (w, _) in &r.terms {
            prop_assert!(accepts(w).unwrap());
            prop_assert_eq!(w.len(), n);
        }
    }

    #[test]
    fn dense_jellyfish_terms_normalize(seed in any::<u64>(), n in 0usize..=8, jellies in 0usize..=3, p in prop::sample::select(vec![2usize, 3])) {
        let f = FieldSpec::prime(p as u64).unwrap();
        let t = random_term(seed, p, n, jellies);
        let (d, _) = t.to_diagram(p).unwrap();
        let opts = NormalizeOptions { check_each: true, ..Default::default() };
        let r = normalize(&d, &f, Some(p), &opts).unwrap();
        // every surviving jellyfish touches the ground
        for (w, _) in &r.terms {
            let g = gamma_diagram(w).unwrap();
            prop_assert!(diagalg::tangle::recognize_basis_word(&g, Some(p)).is_some());
        }
    }

    #[test]
    fn chord_form_roundtrip(seed in any::<u64>(), n in 0usize..=7, jellies in 0usize..=2) {
        let f = FieldSpec::prime(3).unwrap();
        let t = random_term(seed, 3, n, jellies);
        let (d, s) = t.to_diagram(3).unwrap();
        let (u, c) = from_diagram(&d, &f).unwrap();
        let lhs = t.evaluate(&f, 3).unwrap();
        let rhs = u.evaluate(&f, 3).unwrap().scale(&c).scale(&f.from_i64(s));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_reversal_squares_to_one(k in 1usize..4, i in 0usize..3) {
        prop_assume!(i < k);
        let mut t = ChordTerm::new(2 * k, (0..k).map(|a| (End::G(2 * a), End::G(2 * a + 1))).collect());
        let q = FieldSpec::rational();
        let v = t.evaluate(&q, 0).unwrap();
        let s1 = t.orient();
        t.chords[i] = (t.chords[i].1, t.chords[i].0);
        let s2 = t.orient();
        prop_assert_eq!(s1 * s2, -1);
        prop_assert_eq!(t.evaluate(&q, 0).unwrap().scale(&q.from_i64(s1 * s2 * -1)), v);
    }
}
