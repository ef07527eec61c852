//! Light-leaf and jellyfish bases of the box spaces, the triangular
//! pairing between light leaves and tensor basis vectors, and coefficient
//! extraction by back-substitution.

use thiserror::Error;

use crate::evalfun::{evaluate, evaluate_map, EvalError};
use crate::exactnum::{Elem, FieldSpec};
use crate::tangle::{gamma_diagram, Diagram, Port, Sign, TangleError, VertexKind};
use crate::unirep::{BasisVectorIndex, Matrix};
use crate::wordlang::{accepts, enumerate, Automaton, Letter, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("word `{0}` is not accepted")]
    NotAccepted(String),
    #[error("pairing matrix is not triangular: {0}")]
    TriangularityViolated(String),
    #[error("vector is not in the span of the basis (nonzero residual)")]
    NotInSpan,
    #[error("tl_matchings needs an even number of points, got {0}")]
    OddBoundary(usize),
    #[error("field of characteristic {0} does not match p = {1:?}")]
    CharMismatch(u64, Option<usize>),
    #[error("vector has length {0}, expected {1}")]
    Length(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tangle(#[from] TangleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    X0,
    Xp(usize),
    Y0,
    Yp(usize),
}

/// An ordered basis of a box space together with its index words.
#[derive(Debug, Clone)]
pub struct BasisFamily {
    pub family: FamilyKind,
    pub n: usize,
    pub elements: Vec<(Word, Diagram)>,
}

fn check_field(field: &FieldSpec, p: Option<usize>) -> Result<(), BasisError> {
    let c = field.characteristic();
    match p {
        None if c == 0 => Ok(()),
        Some(p) if c == p as u64 => Ok(()),
        _ => Err(BasisError::CharMismatch(c, p)),
    }
}

fn mountain_automaton(p: Option<usize>) -> Automaton {
    p.map_or(Automaton::M0, Automaton::Mp)
}

fn check_accepted(w: &Word) -> Result<(), BasisError> {
    if accepts(w).unwrap_or(false) {
        Ok(())
    } else {
        Err(BasisError::NotAccepted(w.to_string()))
    }
}

/// Gluing state for light leaves: the open wires (sources still looking
/// for a sink), oldest first.
struct Leaf {
    d: Diagram,
    wires: Vec<Port>,
    p: usize,
    /// char-p convention for the L box: the bracket starts at the new point
    flip_l: bool,
}

impl Leaf {
    fn letter(&mut self, l: Letter, point: Port) {
        let d = &mut self.d;
        match l {
            Letter::R => self.wires.push(point),
            Letter::L => {
                let w = self.wires.pop().expect("accepted word");
                let b = d.add_vertex(VertexKind::Bracket);
                let (l0, l1) = if self.flip_l { (point, w) } else { (w, point) };
                d.connect(l0, Port::Leg(b, 0));
                d.connect(l1, Port::Leg(b, 1));
            }
            Letter::B => {
                // dot the oldest wire, the bottom input becomes the newest
                let w = self.wires.remove(0);
                let v = d.add_vertex(VertexKind::Dot);
                d.connect(w, Port::Leg(v, 0));
                self.wires.push(point);
            }
            Letter::A => {
                let p = self.p;
                let j = d.add_vertex(VertexKind::Jelly(p));
                for (leg, &w) in self.wires.iter().enumerate() {
                    d.connect(w, Port::Leg(j, leg));
                }
                d.connect(point, Port::Leg(j, p - 1));
                let mut out = vec![];
                for k in 0..p - 1 {
                    let c = d.add_vertex(VertexKind::InvBracket);
                    d.connect(Port::Leg(c, 0), Port::Leg(j, 2 * p - 2 - k));
                    out.push(Port::Leg(c, 1));
                }
                self.wires = out;
            }
            _ => unreachable!("not a mountain letter"),
        }
    }

    fn finish_with_dots(mut self) -> Diagram {
        for w in std::mem::take(&mut self.wires) {
            let v = self.d.add_vertex(VertexKind::Dot);
            self.d.connect(w, Port::Leg(v, 0));
        }
        self.d.edges.sort();
        self.d
    }
}

/// Light-leaf diagram of a mountain word (M0 or Mp).
pub fn lightleaf(w: &Word) -> Result<Diagram, BasisError> {
    if !w.automaton.is_mountain() {
        return Err(BasisError::NotAccepted(w.to_string()));
    }
    check_accepted(w)?;
    let p = match w.automaton {
        Automaton::Mp(p) => p,
        _ => 0,
    };
    let mut leaf = Leaf { d: Diagram::with_ground(w.len()), wires: vec![], p, flip_l: p != 0 };
    for (i, &l) in w.letters.iter().enumerate() {
        leaf.letter(l, Port::Boundary(i));
    }
    Ok(leaf.finish_with_dots())
}

/// A single A or B box as a map V^{p-1} ⊗ V → V^{p-1}: the first p−1
/// inputs are the left input, the last one the bottom input.
pub fn ab_box(letter: Letter, p: usize) -> Diagram {
    let mut boundary = vec![Sign::Plus; p];
    boundary.extend(vec![Sign::Minus; p - 1]);
    let d = Diagram { boundary, inputs: p, vertices: vec![], edges: vec![], free_loops: 0 };
    let mut leaf = Leaf { d, wires: (0..p - 1).map(Port::Boundary).collect(), p, flip_l: true };
    leaf.letter(letter, Port::Boundary(p - 1));
    let mut d = leaf.d;
    for (k, w) in leaf.wires.into_iter().enumerate() {
        d.connect(w, Port::Boundary(p + k));
    }
    d.edges.sort();
    d
}

/// Jellyfish-basis diagram of a plateau word (N0 or Np).
pub fn jellyleaf(w: &Word) -> Result<Diagram, BasisError> {
    check_accepted(w)?;
    Ok(gamma_diagram(w)?)
}

/// The tensor basis vector paired with a mountain word: R and B give 1.
pub fn pairing_vec(w: &Word) -> Result<BasisVectorIndex, BasisError> {
    if !w.automaton.is_mountain() {
        return Err(BasisError::NotAccepted(w.to_string()));
    }
    check_accepted(w)?;
    Ok(BasisVectorIndex { bits: w.letters.iter().map(|l| matches!(l, Letter::R | Letter::B) as u8).collect() })
}

pub fn x_family(n: usize, p: Option<usize>) -> Result<BasisFamily, BasisError> {
    let words = enumerate(mountain_automaton(p), n);
    let elements = words.into_iter().map(|w| lightleaf(&w).map(|d| (w, d))).collect::<Result<_, _>>()?;
    Ok(BasisFamily { family: p.map_or(FamilyKind::X0, FamilyKind::Xp), n, elements })
}

/// Jellyfish basis, listed in the order of the corresponding mountain words.
pub fn y_family(n: usize, p: Option<usize>) -> Result<BasisFamily, BasisError> {
    let automaton = p.map_or(Automaton::N0, Automaton::Np);
    let words = enumerate(automaton, n);
    let elements = words.into_iter().map(|w| jellyleaf(&w).map(|d| (w, d))).collect::<Result<_, _>>()?;
    Ok(BasisFamily { family: p.map_or(FamilyKind::Y0, FamilyKind::Yp), n, elements })
}

/// Evaluations of the light leaves of length n, in canonical order.
#[derive(Debug, Clone)]
pub struct EvaluatedX {
    pub field: FieldSpec,
    pub p: Option<usize>,
    pub n: usize,
    pub words: Vec<Word>,
    pub rows: Vec<Matrix>,
    pub pairing: Vec<usize>,
}

impl EvaluatedX {
    pub fn new(n: usize, field: &FieldSpec, p: Option<usize>) -> Result<Self, BasisError> {
        check_field(field, p)?;
        let fam = x_family(n, p)?;
        let mut words = vec![];
        let mut rows = vec![];
        let mut pairing = vec![];
        for (w, d) in fam.elements {
            rows.push(evaluate(&d, field)?);
            pairing.push(pairing_vec(&w)?.index());
            words.push(w);
        }
        Ok(EvaluatedX { field: field.clone(), p, n, words, rows, pairing })
    }

    /// All evaluations stacked as a matrix, one row per word.
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(&self.field, self.rows.len(), 1 << self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for c in 0..1usize << self.n {
                m.set(r, c, row.get(0, c).clone());
            }
        }
        m
    }
}

/// The pairing matrix. Entry [i][j] is the light leaf of word j evaluated
/// at the pairing vector of word i, so that the vanishing
/// "x < y implies g(x)(f(y)) = 0" makes it upper triangular.
#[derive(Debug, Clone)]
pub struct PairingCertificate {
    pub field: FieldSpec,
    pub p: Option<usize>,
    pub words: Vec<Word>,
    pub matrix: Matrix,
    pub expected_diagonal: Elem,
}

impl PairingCertificate {
    pub fn diagonal(&self) -> Vec<Elem> {
        (0..self.words.len()).map(|i| self.matrix.get(i, i).clone()).collect()
    }

    pub fn is_upper_triangular(&self) -> bool {
        let k = self.words.len();
        (0..k).all(|i| (0..i).all(|j| self.matrix.get(i, j).is_zero()))
    }

    /// Words whose diagonal entry differs from the expected value.
    pub fn diagonal_mismatches(&self) -> Vec<(Word, Elem)> {
        self.diagonal()
            .into_iter()
            .zip(&self.words)
            .filter(|(e, _)| *e != self.expected_diagonal)
            .map(|(e, w)| (w.clone(), e))
            .collect()
    }
}

pub fn pairing_matrix(n: usize, field: &FieldSpec, p: Option<usize>) -> Result<PairingCertificate, BasisError> {
    let ev = EvaluatedX::new(n, field, p)?;
    pairing_from(&ev)
}

pub fn pairing_from(ev: &EvaluatedX) -> Result<PairingCertificate, BasisError> {
    let k = ev.words.len();
    let mut m = Matrix::zeros(&ev.field, k, k);
    for i in 0..k {
        for j in 0..k {
            m.set(i, j, ev.rows[j].get(0, ev.pairing[i]).clone());
        }
    }
    let expected_diagonal = match ev.p {
        None => ev.field.from_i64(-1),
        Some(_) => ev.field.one(),
    };
    let cert = PairingCertificate { field: ev.field.clone(), p: ev.p, words: ev.words.clone(), matrix: m, expected_diagonal };
    if !cert.is_upper_triangular() {
        return Err(BasisError::TriangularityViolated("nonzero entry below the diagonal".into()));
    }
    if let Some(i) = cert.diagonal().iter().position(|e| e.is_zero()) {
        return Err(BasisError::TriangularityViolated(format!("zero diagonal at `{}`", cert.words[i])));
    }
    Ok(cert)
}

/// Coefficients of v over the light-leaf basis, by back-substitution
/// against the pairing. The residual is checked exactly.
pub fn extract_with(ev: &EvaluatedX, cert: &PairingCertificate, v: &Matrix) -> Result<Vec<Elem>, BasisError> {
    let f = &ev.field;
    let width = 1usize << ev.n;
    if v.rows != 1 || v.cols != width {
        return Err(BasisError::Length(v.cols, width));
    }
    let k = ev.words.len();
    let mut c = vec![f.zero(); k];
    for i in (0..k).rev() {
        let mut acc = v.get(0, ev.pairing[i]).clone();
        for j in i + 1..k {
            acc = f.sub(&acc, &f.mul(&c[j], cert.matrix.get(i, j)));
        }
        c[i] = f.div(&acc, cert.matrix.get(i, i)).expect("nonzero diagonal");
    }
    for col in 0..width {
        let mut acc = v.get(0, col).clone();
        for j in 0..k {
            if !c[j].is_zero() {
                acc = f.sub(&acc, &f.mul(&c[j], ev.rows[j].get(0, col)));
            }
        }
        if !acc.is_zero() {
            return Err(BasisError::NotInSpan);
        }
    }
    Ok(c)
}

pub fn extract_coefficients(v: &Matrix, n: usize, field: &FieldSpec, p: Option<usize>) -> Result<Vec<Elem>, BasisError> {
    let ev = EvaluatedX::new(n, field, p)?;
    let cert = pairing_from(&ev)?;
    extract_with(&ev, &cert, v)
}

/// Change of basis: row y holds the X-coefficients of the evaluated
/// jellyfish-basis diagram y (rows in plateau canonical order).
pub fn change_of_basis(n: usize, field: &FieldSpec, p: Option<usize>) -> Result<(Vec<Word>, Matrix), BasisError> {
    let ev = EvaluatedX::new(n, field, p)?;
    let cert = pairing_from(&ev)?;
    let fam = y_family(n, p)?;
    let k = fam.elements.len();
    let mut m = Matrix::zeros(field, k, ev.words.len());
    let mut words = vec![];
    for (r, (w, d)) in fam.elements.into_iter().enumerate() {
        let c = extract_with(&ev, &cert, &evaluate(&d, field)?)?;
        for (j, x) in c.into_iter().enumerate() {
            m.set(r, j, x);
        }
        words.push(w);
    }
    Ok((words, m))
}

/// Noncrossing perfect matchings of m points, one bracket per cap
/// starting at the left end.
pub fn tl_matchings(m: usize) -> Result<Vec<Diagram>, BasisError> {
    if m % 2 == 1 {
        return Err(BasisError::OddBoundary(m));
    }
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo >= hi {
            return vec![vec![]];
        }
        let mut out = vec![];
        for j in (lo + 1..hi).step_by(2) {
            for inner in rec(lo + 1, j) {
                for outer in rec(j + 1, hi) {
                    let mut v = vec![(lo, j)];
                    v.extend(inner.iter().copied());
                    v.extend(outer.iter().copied());
                    out.push(v);
                }
            }
        }
        out
    }
    Ok(rec(0, m)
        .into_iter()
        .map(|pairs| {
            let mut d = Diagram::with_ground(m);
            for (a, b) in pairs {
                let v = d.add_vertex(VertexKind::Bracket);
                d.connect(Port::Boundary(a), Port::Leg(v, 0));
                d.connect(Port::Boundary(b), Port::Leg(v, 1));
            }
            d.edges.sort();
            d
        })
        .collect())
}

/// Matrix of an A or B box with its bottom input fixed to the given bit.
pub fn box_with_bottom(letter: Letter, p: usize, bottom: u8) -> Result<Matrix, BasisError> {
    let field = FieldSpec::prime(p as u64).map_err(TangleError::from)?;
    let m = evaluate_map(&ab_box(letter, p), &field)?;
    let k = p - 1;
    let mut out = Matrix::zeros(&field, 1 << k, 1 << k);
    for i in 0..1usize << k {
        for o in 0..1usize << k {
            out.set(o, i, m.get(o, (i << 1) | bottom as usize).clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(a: Automaton, s: &str) -> Word {
        Word::accepted(a, s).unwrap()
    }

    #[test]
    fn pairing_vectors() {
        assert_eq!(pairing_vec(&w(Automaton::M0, "RRLRLLRL")).unwrap().to_string(), "11010010");
        assert_eq!(pairing_vec(&w(Automaton::Mp(3), "RLRRABBA")).unwrap().to_string(), "10110110");
        assert_eq!(pairing_vec(&w(Automaton::M0, "R")).unwrap().to_string(), "1");
    }

    #[test]
    fn leaf_shapes() {
        let d = lightleaf(&w(Automaton::M0, "R")).unwrap();
        assert_eq!((d.boundary.len(), d.vertices.clone()), (1, vec![VertexKind::Dot]));
        let d = lightleaf(&w(Automaton::M0, "RRRLLRL")).unwrap();
        assert_eq!(d.count_kind(|k| k == VertexKind::Bracket), 3);
        assert_eq!(d.count_kind(|k| k == VertexKind::Dot), 1);
        let d = lightleaf(&w(Automaton::Mp(3), "RRABA")).unwrap();
        assert_eq!(d.jelly_count(), 2);
        d.validate().unwrap();
    }

    #[test]
    fn small_certificates() {
        let q = FieldSpec::rational();
        let c = pairing_matrix(3, &q, None).unwrap();
        let words: Vec<String> = c.words.iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["RLR", "RRL", "RRR"]);
        assert_eq!(c.diagonal(), vec![q.from_i64(-1), q.from_i64(-1), q.one()]);
        let f3 = FieldSpec::prime(3).unwrap();
        let c = pairing_matrix(5, &f3, Some(3)).unwrap();
        assert_eq!(c.words.len(), 11);
        assert!(c.diagonal_mismatches().is_empty());
        let c = pairing_matrix(0, &q, None).unwrap();
        assert_eq!(c.matrix.get(0, 0), &q.one());
    }

    #[test]
    fn extraction_roundtrip() {
        let f = FieldSpec::prime(3).unwrap();
        let ev = EvaluatedX::new(6, &f, Some(3)).unwrap();
        let cert = pairing_from(&ev).unwrap();
        for (i, row) in ev.rows.iter().enumerate() {
            let c = extract_with(&ev, &cert, row).unwrap();
            for (j, x) in c.iter().enumerate() {
                assert_eq!(x.is_zero(), i != j);
            }
        }
        let mut bad = Matrix::zeros(&f, 1, 64);
        bad.set(0, 0, f.one());
        assert_eq!(extract_with(&ev, &cert, &bad), Err(BasisError::NotInSpan));
    }

    #[test]
    fn catalan_matchings() {
        let counts: Vec<usize> = (0..6).map(|k| tl_matchings(2 * k).unwrap().len()).collect();
        assert_eq!(counts, [1, 1, 2, 5, 14, 42]);
        assert!(tl_matchings(3).is_err());
    }

    #[test]
    fn box_values_on_bottom_vectors() {
        for p in [2usize, 3, 5] {
            let f = FieldSpec::prime(p as u64).unwrap();
            let k = p - 1;
            let ones = (1usize << k) - 1;
            let a = box_with_bottom(Letter::A, p, 0).unwrap();
            let b = box_with_bottom(Letter::B, p, 1).unwrap();
            for alpha in 0..p as i64 {
                let mut v = Matrix::zeros(&f, 1 << k, 1);
                v.set(ones, 0, f.one());
                let cur = f.add(v.get(0, 0), &f.from_i64(alpha));
                v.set(0, 0, cur);
                let av = a.mul(&v).unwrap();
                let bv = b.mul(&v).unwrap();
                for r in 0..1usize << k {
                    let want_a = if r == ones { f.one() } else if r == 0 { f.add(&f.from_i64(alpha), &f.one()) } else { f.zero() };
                    assert_eq!(av.get(r, 0), &want_a, "A p={p} alpha={alpha} r={r}");
                    let want_b = if r == ones { f.one() } else { f.zero() };
                    assert_eq!(bv.get(r, 0), &want_b, "B p={p} alpha={alpha} r={r}");
                }
            }
        }
    }
}
