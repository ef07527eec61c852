//! Verification suites shared by the command line and the test targets.
//! Every check here calls library code; nothing is recomputed ad hoc.

use std::collections::{HashMap, HashSet};

use num_integer::binomial;
use rand::{Rng, SeedableRng};

use crate::basisgen::{change_of_basis, extract_with, pairing_from, tl_matchings, y_family, EvaluatedX};
use crate::evalfun::evaluate;
use crate::exactnum::{Elem, FieldSpec};
use crate::skein::{rule_candidates, NormalizeOptions, Report, SkeinRules};
use crate::tangle::{from_circuit, gamma_diagram, random_box_circuit, recognize_basis_word, Diagram, Port, RandomCircuitOptions, VertexKind};
use crate::unirep::{action_matrix_elem, equivariance_check, fusion_decompose, hom_basis, jelly_vector, binomial_sum_zero, Matrix};
use crate::wordlang::{accepts, count, enumerate, mountain_to_plateau, plateau_to_mountain, Automaton, Word};

fn automaton(p: Option<usize>, mountain: bool) -> Automaton {
    match (p, mountain) {
        (None, true) => Automaton::M0,
        (None, false) => Automaton::N0,
        (Some(p), true) => Automaton::Mp(p),
        (Some(p), false) => Automaton::Np(p),
    }
}

// ---------------------------------------------------------------- tables

/// Value table of small box maps: one column per diagram, one row per
/// basis vector in the listed order.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub field: FieldSpec,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Elem>)>,
}

impl ValueTable {
    pub fn to_ints(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|(_, r)| {
                r.iter()
                    .map(|e| {
                        let s = self.field.format_elem(e);
                        s.parse().unwrap_or(i64::MIN)
                    })
                    .collect()
            })
            .collect()
    }
}

/// A box diagram written with `.` for a dot and `<`/`>` for a bracketed cap
/// (leg 0 at the left end). Caps may enclose dots, unlike basis words.
pub fn token_diagram(s: &str) -> Option<Diagram> {
    let n = s.chars().count();
    let mut d = Diagram::with_ground(n);
    let mut open = vec![];
    for (i, c) in s.chars().enumerate() {
        match c {
            '.' => {
                let t = d.add_vertex(VertexKind::Dot);
                d.connect(Port::Boundary(i), Port::Leg(t, 0));
            }
            '<' => open.push(i),
            '>' => {
                let a = open.pop()?;
                let b = d.add_vertex(VertexKind::Bracket);
                d.connect(Port::Boundary(a), Port::Leg(b, 0));
                d.connect(Port::Boundary(i), Port::Leg(b, 1));
            }
            _ => return None,
        }
    }
    open.is_empty().then_some(d)
}

const TABLE2_ROWS: [&str; 4] = ["00", "01", "10", "11"];
const TABLE2_COLS: [&str; 2] = ["..", "<>"];
const TABLE2: [[i64; 2]; 4] = [[0, 0], [0, 1], [0, -1], [1, 0]];

const TABLE3_ROWS: [&str; 8] = ["000", "001", "010", "100", "110", "101", "011", "111"];
const TABLE3_COLS: [&str; 4] = ["...", ".<>", "<.>", "<>."];
const TABLE3: [[i64; 4]; 8] = [
    [0, 0, 0, 0],
    [0, 0, 0, 0],
    [0, 0, 0, 0],
    [0, 0, 0, 0],
    [0, -1, -1, 0],
    [0, 1, 0, -1],
    [0, 0, 1, 1],
    [1, 0, 0, 0],
];

/// The two- and three-strand value tables, rows in the published order.
pub fn value_table(n: usize, field: &FieldSpec) -> Option<ValueTable> {
    let (rows, cols): (&[&str], &[&str]) = match n {
        2 => (&TABLE2_ROWS, &TABLE2_COLS),
        3 => (&TABLE3_ROWS, &TABLE3_COLS),
        _ => return None,
    };
    let vals: Vec<Matrix> = cols.iter().map(|c| evaluate(&token_diagram(c)?, field).ok()).collect::<Option<_>>()?;
    let rows = rows
        .iter()
        .map(|r| {
            let idx = usize::from_str_radix(r, 2).unwrap();
            (r.to_string(), vals.iter().map(|v| v.get(0, idx).clone()).collect())
        })
        .collect();
    Some(ValueTable { field: field.clone(), columns: cols.iter().map(|s| s.to_string()).collect(), rows })
}

/// Y-coefficients of an arbitrary box diagram, through the light-leaf
/// extraction and the change of basis.
pub fn y_coefficients(d: &Diagram, n: usize, field: &FieldSpec, p: Option<usize>) -> Result<Vec<(Word, Elem)>, String> {
    let ev = EvaluatedX::new(n, field, p).map_err(|e| e.to_string())?;
    let cert = pairing_from(&ev).map_err(|e| e.to_string())?;
    let x = extract_with(&ev, &cert, &evaluate(d, field).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (words, cob) = change_of_basis(n, field, p).map_err(|e| e.to_string())?;
    let y = cob.solve_left(&x).ok_or("not in the span of the jellyfish basis")?;
    Ok(words.into_iter().zip(y).filter(|(_, c)| !c.is_zero()).collect())
}

pub fn tables_report() -> Report {
    let q = FieldSpec::rational();
    let mut rep = Report::default();
    let want2: Vec<Vec<i64>> = TABLE2.iter().map(|r| r.to_vec()).collect();
    let want3: Vec<Vec<i64>> = TABLE3.iter().map(|r| r.to_vec()).collect();
    for (n, want) in [(2, want2), (3, want3)] {
        match value_table(n, &q) {
            Some(t) => {
                let got = t.to_ints();
                let bad: Vec<String> = t.rows.iter().zip(&got).zip(&want).filter(|((_, g), w)| g != w).map(|((r, _), _)| r.0.clone()).collect();
                rep.push(format!("table n={n}"), bad.is_empty(), if bad.is_empty() { String::new() } else { format!("rows differ: {}", bad.join(",")) });
            }
            None => rep.push(format!("table n={n}"), false, "could not build the table diagrams".into()),
        }
    }
    let crossing = token_diagram("<.>").ok_or_else(|| "bad diagram".to_string()).and_then(|d| y_coefficients(&d, 3, &q, None));
    match crossing {
        Ok(c) => {
            let mut got: Vec<(String, String)> = c.iter().map(|(w, e)| (w.to_string(), q.format_elem(e))).collect();
            got.sort();
            let want = vec![(".<>".to_string(), "1".to_string()), ("<>.".to_string(), "1".to_string())];
            rep.push("crossing <.> = .<> + <>.".into(), got == want, format!("{got:?}"));
        }
        Err(e) => rep.push("crossing <.> = .<> + <>.".into(), false, e),
    }
    rep
}

// ---------------------------------------------------------------- relations

pub fn relations_report(field: &FieldSpec, p: Option<usize>) -> Report {
    let mut rep = Report::default();
    match rule_candidates(field, p) {
        Ok(rules) => {
            for mut r in rules {
                let ok = r.verify();
                let detail = match &ok {
                    Ok(true) => String::new(),
                    Ok(false) => "sides differ under evaluation".into(),
                    Err(e) => e.to_string(),
                };
                rep.push(format!("relation {}", r.name), ok == Ok(true), detail);
            }
        }
        Err(e) => rep.push("relations".into(), false, e.to_string()),
    }
    rep
}

// ---------------------------------------------------------------- bases

/// Ranks, pairing certificates, the jellyfish family, Temperley-Lieb
/// matchings, Hom spaces and fusion rules.
pub fn bases_report(field: &FieldSpec, p: Option<usize>, max_n: usize) -> Report {
    let mut rep = Report::default();
    let m = automaton(p, true);
    for n in 0..=max_n {
        let want = count(m, n) as usize;
        if p.is_none() {
            let c = binomial(n as u64, n as u64 / 2) as usize;
            rep.push(format!("count {m} n={n} = C(n, n/2)"), want == c, format!("{want} vs {c}"));
        }
        match EvaluatedX::new(n, field, p) {
            Ok(ev) => {
                let rank = ev.matrix().rank();
                rep.push(format!("rank X n={n}"), rank == want && ev.words.len() == want, format!("rank {rank}, count {want}"));
                match pairing_from(&ev) {
                    Ok(cert) => {
                        rep.push(format!("pairing n={n} triangular"), cert.is_upper_triangular(), String::new());
                        let bad = cert.diagonal_mismatches();
                        let detail = bad.iter().take(4).map(|(w, e)| format!("{w}:{}", field.format_elem(e))).collect::<Vec<_>>().join(" ");
                        rep.push(format!("pairing n={n} diagonal = {}", field.format_elem(&cert.expected_diagonal)), bad.is_empty(), detail);
                    }
                    Err(e) => rep.push(format!("pairing n={n}"), false, e.to_string()),
                }
            }
            Err(e) => rep.push(format!("rank X n={n}"), false, e.to_string()),
        }
        match (change_of_basis(n, field, p), y_family(n, p)) {
            (Ok((words, cob)), Ok(fam)) => {
                let recognized = fam.elements.iter().all(|(w, d)| recognize_basis_word(d, p).as_ref() == Some(w));
                rep.push(format!("Y n={n} basis"), cob.rank() == want && words.len() == want && recognized, format!("rank {}", cob.rank()));
            }
            (Err(e), _) => rep.push(format!("Y n={n} basis"), false, e.to_string()),
            (_, Err(e)) => rep.push(format!("Y n={n} basis"), false, e.to_string()),
        }
    }
    for k in 0..=max_n / 2 {
        match tl_matchings(2 * k) {
            Ok(ds) => {
                let catalan = binomial(2 * k as u64, k as u64) / (k as u64 + 1);
                let rows: Result<Vec<Matrix>, _> = ds.iter().map(|d| evaluate(d, field)).collect();
                let rank = rows.map(|rs| stack(field, &rs, 1 << (2 * k)).rank());
                let ok = ds.len() as u64 == catalan && rank.as_ref().map(|r| *r == ds.len()).unwrap_or(false);
                rep.push(format!("matchings 2k={}", 2 * k), ok, format!("{} matchings, rank {rank:?}", ds.len()));
            }
            Err(e) => rep.push(format!("matchings 2k={}", 2 * k), false, e.to_string()),
        }
    }
    let top = match p {
        Some(p) => p,
        None => max_n.clamp(1, 8),
    };
    for a in 1..=top {
        for b in 1..=top {
            let dim = hom_basis(a, b, field).map(|v| v.len());
            rep.push(format!("dim Hom(V{a},V{b})"), dim == Ok(a.min(b)), format!("{dim:?}"));
        }
    }
    if field.characteristic() == 0 || top >= 4 {
        let hom = |n, m, rows: &[&[[i64; 4]]]| -> bool {
            let got = hom_basis(n, m, field).unwrap_or_default();
            got.len() == rows.len()
                && got.iter().zip(rows).all(|(g, r)| *g == Matrix::from_ints(field, &r.iter().take(m).map(|row| row[..n].to_vec()).collect::<Vec<_>>()))
        };
        let t34: [&[[i64; 4]]; 3] = [
            &[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0]],
            &[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
            &[[0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
        ];
        let t43: [&[[i64; 4]]; 3] = [
            &[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
            &[[0, 0, 1, 0], [0, 0, 0, 1], [0, 0, 0, 0]],
            &[[0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0]],
        ];
        rep.push("Hom(V3,V4) explicit basis".into(), hom(3, 4, &t34), String::new());
        rep.push("Hom(V4,V3) explicit basis".into(), hom(4, 3, &t43), String::new());
    }
    for i in 1..=top {
        let want = match p {
            Some(p) if i == p => vec![p, p],
            _ if i == 1 => vec![2],
            _ => vec![i + 1, i - 1],
        };
        let got = fusion_decompose(i, field);
        rep.push(format!("fusion V x V{i}"), got.as_ref() == Ok(&want), format!("{got:?}"));
    }
    rep
}

fn stack(field: &FieldSpec, rows: &[Matrix], width: usize) -> Matrix {
    let mut m = Matrix::zeros(field, rows.len(), width);
    for (r, row) in rows.iter().enumerate() {
        for c in 0..width {
            m.set(r, c, row.get(0, c).clone());
        }
    }
    m
}

// ---------------------------------------------------------------- jellyfish vectors

/// Invariance of the jellyfish vectors and the binomial-sum identity. For
/// a finite field only its own order is checked.
pub fn jelly_report(field: &FieldSpec, max_n: usize) -> Report {
    let qs: Vec<u64> = match field.order() {
        Some(q) => vec![q],
        None => vec![2, 3, 4, 5, 7, 8, 9],
    };
    let mut rep = Report::default();
    for q in qs {
        let f = match FieldSpec::finite(q) {
            Ok(f) => f,
            Err(e) => {
                rep.push(format!("q={q}"), false, e.to_string());
                continue;
            }
        };
        let triv = Matrix::identity(&f, 1);
        for n in 1..=max_n {
            let ok = jelly_vector(q, n).map(|j| {
                f.elements().iter().all(|x| equivariance_check(&j, &action_matrix_elem(x, n as u32, &f), &triv).unwrap_or(false))
            });
            rep.push(format!("jelly vector q={q} n={n} invariant"), ok == Ok(true), format!("{ok:?}"));
        }
        let bad: Vec<u64> = (1..=40).filter(|&l| binomial_sum_zero(q, l) != Ok(true)).collect();
        rep.push(format!("binomial sums q={q} l<=40"), bad.is_empty(), format!("{bad:?}"));
    }
    rep
}

// ---------------------------------------------------------------- bijections

/// The mountain/plateau bijections on full enumerations. Heights 1..=4
/// (p = 2..=5) unless p is given.
pub fn bijections_report(p: Option<usize>, max_n: usize) -> Report {
    let mut rep = Report::default();
    let mut pairs = vec![(Automaton::M0, Automaton::N0)];
    match p {
        Some(p) => pairs.push((Automaton::Mp(p), Automaton::Np(p))),
        None => pairs.extend((2..=5).map(|p| (Automaton::Mp(p), Automaton::Np(p)))),
    }
    for (m, n_aut) in pairs {
        let mut ok = true;
        let mut detail = String::new();
        for n in 0..=max_n {
            let mountains = enumerate(m, n);
            let plateaus = enumerate(n_aut, n);
            let mut images = HashSet::new();
            for w in &mountains {
                match mountain_to_plateau(w) {
                    Ok(v) if v.len() == n && v.automaton == n_aut && accepts(&v) == Ok(true) && plateau_to_mountain(&v).as_ref() == Ok(w) => {
                        images.insert(v);
                    }
                    other => {
                        ok = false;
                        detail = format!("{w} -> {other:?}");
                    }
                }
            }
            for v in &plateaus {
                if plateau_to_mountain(v).and_then(|w| mountain_to_plateau(&w)).as_ref() != Ok(v) {
                    ok = false;
                    detail = format!("{v} does not round-trip");
                }
            }
            if images.len() != mountains.len() || mountains.len() != plateaus.len() {
                ok = false;
                detail = format!("n={n}: {} mountains, {} images, {} plateaus", mountains.len(), images.len(), plateaus.len());
            }
        }
        rep.push(format!("{m} <-> {n_aut} n<={max_n}"), ok, detail);
    }
    if p.is_none() || p == Some(5) {
        let mountain = Word::parse(Automaton::Mp(5), "RLRRRLRRBBAAABAAAAABAABBBBAAB");
        let plateau = Word::parse(Automaton::Np(5), "<>..<><<<<**><**>>><>>..<<>>.");
        let ok = match (mountain, plateau) {
            (Ok(m), Ok(pl)) => mountain_to_plateau(&m).as_ref() == Ok(&pl) && plateau_to_mountain(&pl).as_ref() == Ok(&m),
            _ => false,
        };
        rep.push("length-29 height-4 mountain word maps to its plateau word".into(), ok, String::new());
    }
    rep
}

// ---------------------------------------------------------------- normalization corpus

/// Random box circuits normalized and checked three ways: the weighted sum
/// of basis evaluations reproduces the input, every word is accepted, and
/// the coefficients agree with pairing extraction after the change of basis.
pub fn normalize_report(field: &FieldSpec, p: Option<usize>, max_n: usize, seed: u64, total: usize) -> Report {
    let mut rep = Report::default();
    let rules = match SkeinRules::new(field, p) {
        Ok(r) => r,
        Err(e) => {
            rep.push("normalize corpus".into(), false, e.to_string());
            return rep;
        }
    };
    struct Cache {
        ev: EvaluatedX,
        cert: crate::basisgen::PairingCertificate,
        words: HashMap<Word, usize>,
        cob: Matrix,
        gamma: Vec<Matrix>,
    }
    let mut caches: HashMap<usize, Cache> = HashMap::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let opts = NormalizeOptions::default();
    let ro = RandomCircuitOptions { slices: 6, max_wires: 10, p, max_jellies: 2 };
    let (mut sound, mut accepted, mut agree) = (0, 0, 0);
    let mut first = String::new();
    let mut fail = |msg: String| {
        if first.is_empty() {
            first = msg;
        }
    };
    for i in 0..total {
        let n = rng.gen_range(0..=max_n);
        let circuit = random_box_circuit(&mut rng, n, &ro);
        let d = match from_circuit(&circuit) {
            Ok(d) => d,
            Err(e) => {
                fail(format!("circuit {i}: {e}"));
                continue;
            }
        };
        let cache = match caches.entry(n) {
            std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let built = (|| -> Result<Cache, String> {
                    let ev = EvaluatedX::new(n, field, p).map_err(|e| e.to_string())?;
                    let cert = pairing_from(&ev).map_err(|e| e.to_string())?;
                    let (ws, cob) = change_of_basis(n, field, p).map_err(|e| e.to_string())?;
                    let gamma = ws.iter().map(|w| gamma_diagram(w).map_err(|e| e.to_string()).and_then(|g| evaluate(&g, field).map_err(|e| e.to_string()))).collect::<Result<_, _>>()?;
                    Ok(Cache { ev, cert, words: ws.into_iter().enumerate().map(|(i, w)| (w, i)).collect(), cob, gamma })
                })();
                match built {
                    Ok(c) => v.insert(c),
                    Err(e) => {
                        fail(e);
                        continue;
                    }
                }
            }
        };
        let out = match rules.normalize(&d, &opts) {
            Ok(o) => o,
            Err(e) => {
                fail(format!("circuit {i}: {e}"));
                continue;
            }
        };
        let input = match evaluate(&d, field) {
            Ok(v) => v,
            Err(e) => {
                fail(e.to_string());
                continue;
            }
        };
        let mut sum = Matrix::zeros(field, 1, 1 << n);
        let mut y = vec![field.zero(); cache.words.len()];
        let mut all_accepted = true;
        for (w, c) in &out.terms {
            all_accepted &= w.automaton == automaton(p, false) && accepts(w) == Ok(true);
            match cache.words.get(w) {
                Some(&k) => {
                    sum = sum.add(&cache.gamma[k].scale(c)).expect("same shape");
                    y[k] = c.clone();
                }
                None => all_accepted = false,
            }
        }
        if sum == input {
            sound += 1;
        } else {
            fail(format!("circuit {i}: weighted sum differs from the input"));
        }
        if all_accepted {
            accepted += 1;
        } else {
            fail(format!("circuit {i}: output word not accepted"));
        }
        let x = extract_with(&cache.ev, &cache.cert, &input);
        let via: Vec<Elem> = (0..cache.cob.cols)
            .map(|j| y.iter().enumerate().fold(field.zero(), |acc, (r, c)| field.add(&acc, &field.mul(c, cache.cob.get(r, j)))))
            .collect();
        if x.as_ref() == Ok(&via) {
            agree += 1;
        } else {
            fail(format!("circuit {i}: disagrees with extraction"));
        }
    }
    rep.push(format!("normalize sound ({total} circuits, n<={max_n})"), sound == total, format!("{sound}/{total} {first}"));
    rep.push("normalize words accepted".into(), accepted == total, format!("{accepted}/{total}"));
    rep.push("normalize agrees with extraction".into(), agree == total, format!("{agree}/{total}"));
    rep
}

// ---------------------------------------------------------------- aggregate

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 7] = ["relations", "presentation", "bases", "jelly", "bijections", "tables", "all"];

pub fn run_suite(name: &str, field: &FieldSpec, p: Option<usize>, max_n: usize, seed: u64) -> Option<Report> {
    let rep = match name {
        "relations" => relations_report(field, p),
        "presentation" => crate::skein::verify_presentation(field, p, max_n, seed),
        "bases" => bases_report(field, p, max_n),
        "jelly" => jelly_report(field, max_n),
        "bijections" => bijections_report(p, max_n),
        "tables" => tables_report(),
        "all" => {
            let mut rep = Report::default();
            for part in [
                relations_report(field, p),
                bases_report(field, p, max_n),
                jelly_report(field, max_n),
                bijections_report(p, max_n),
                tables_report(),
                normalize_report(field, p, max_n.min(8), seed, 100),
            ] {
                rep.items.extend(part.items);
            }
            rep
        }
        _ => return None,
    };
    Some(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_match() {
        let r = tables_report();
        assert!(r.all_pass(), "{:?}", r.items);
    }

    #[test]
    fn token_diagrams() {
        assert!(token_diagram("<.").is_none());
        assert!(token_diagram("<>x").is_none());
        assert_eq!(token_diagram("<.>").unwrap().boundary.len(), 3);
    }

    #[test]
    fn small_suites() {
        let f3 = FieldSpec::prime(3).unwrap();
        for rep in [bases_report(&f3, Some(3), 5), jelly_report(&f3, 5), bijections_report(Some(3), 8), normalize_report(&f3, Some(3), 6, 3, 20)] {
            assert!(rep.all_pass(), "{:?}", rep.items.iter().filter(|i| !i.pass).collect::<Vec<_>>());
        }
    }
}
