use diagalg::basisgen::*;
use diagalg::evalfun::evaluate;
use diagalg::exactnum::FieldSpec;
use diagalg::tangle::recognize_basis_word;
use diagalg::unirep::{action_matrix_elem, equivariance_check, Matrix};
use diagalg::wordlang::{count, Automaton};
use num_integer::binomial;

#[test]
fn char0_rank_and_certificates() {
    let q = FieldSpec::rational();
    for n in 0..=8 {
        let ev = EvaluatedX::new(n, &q, None).unwrap();
        let want = binomial(n as u64, n as u64 / 2) as usize;
        assert_eq!(ev.words.len(), want);
        assert_eq!(ev.matrix().rank(), want, "n={n}");
        let cert = pairing_from(&ev).unwrap();
        assert!(cert.is_upper_triangular());
        // the diagonal sign is (-1)^{#L}
        for (w, d) in cert.words.iter().zip(cert.diagonal()) {
            let ls = w.letters.iter().filter(|l| **l == diagalg::wordlang::Letter::L).count() as i64;
            assert_eq!(d, q.from_i64(if ls % 2 == 0 { 1 } else { -1 }), "{w}");
        }
    }
}

#[test]
fn charp_rank_and_certificates() {
    for p in [2usize, 3, 5] {
        let f = FieldSpec::prime(p as u64).unwrap();
        for n in 0..=8 {
            let ev = EvaluatedX::new(n, &f, Some(p)).unwrap();
            let want = count(Automaton::Mp(p), n) as usize;
            assert_eq!(ev.words.len(), want);
            assert_eq!(ev.matrix().rank(), want, "p={p} n={n}");
            let cert = pairing_from(&ev).unwrap();
            assert!(cert.diagonal_mismatches().is_empty(), "p={p} n={n}");
        }
    }
}

#[test]
fn y_family_is_a_basis() {
    let cases: Vec<(FieldSpec, Option<usize>)> = vec![
        (FieldSpec::rational(), None),
        (FieldSpec::prime(2).unwrap(), Some(2)),
        (FieldSpec::prime(3).unwrap(), Some(3)),
        (FieldSpec::prime(5).unwrap(), Some(5)),
    ];
    for (f, p) in cases {
        for n in 0..=7 {
            let (words, m) = change_of_basis(n, &f, p).unwrap();
            assert_eq!(m.rank(), words.len(), "{p:?} n={n}");
            for (w, d) in y_family(n, p).unwrap().elements {
                assert_eq!(recognize_basis_word(&d, p).as_ref(), Some(&w));
            }
        }
    }
}

#[test]
fn images_are_invariant() {
    for (f, p) in [(FieldSpec::rational(), None), (FieldSpec::prime(3).unwrap(), Some(3)), (FieldSpec::finite(2).unwrap(), Some(2))] {
        let x = f.one();
        for n in 1..=6u32 {
            let g = action_matrix_elem(&x, n, &f);
            let triv = Matrix::identity(&f, 1);
            let fams = [x_family(n as usize, p).unwrap(), y_family(n as usize, p).unwrap()];
            for fam in fams {
                for (w, d) in fam.elements {
                    let v = evaluate(&d, &f).unwrap();
                    assert!(equivariance_check(&v, &g, &triv).unwrap(), "{w}");
                }
            }
        }
    }
}

#[test]
fn crossing_relation_coefficients() {
    // ⟨•⟩ with the dot crossing the cap, written as •⟨⟩ + ⟨⟩•
    use diagalg::tangle::{Diagram, Port, VertexKind};
    let q = FieldSpec::rational();
    let mut d = Diagram::with_ground(3);
    let b = d.add_vertex(VertexKind::Bracket);
    let t = d.add_vertex(VertexKind::Dot);
    d.connect(Port::Boundary(0), Port::Leg(b, 0));
    d.connect(Port::Boundary(2), Port::Leg(b, 1));
    d.connect(Port::Boundary(1), Port::Leg(t, 0));
    let v = evaluate(&d, &q).unwrap();
    let (ywords, cob) = change_of_basis(3, &q, None).unwrap();
    let c = extract_coefficients(&v, 3, &q, None).unwrap();
    // solve for Y-coefficients through the change of basis
    let y = cob.solve_left(&c).unwrap();
    let names: Vec<String> = ywords.iter().map(|w| w.to_string()).collect();
    let mut got: Vec<(String, String)> = names
        .iter()
        .zip(&y)
        .filter(|(_, c)| !c.is_zero())
        .map(|(n, c)| (n.clone(), q.format_elem(c)))
        .collect();
    got.sort();
    assert_eq!(got, vec![(".<>".to_string(), "1".to_string()), ("<>.".to_string(), "1".to_string())]);
}
