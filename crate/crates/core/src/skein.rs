//! Skein theory: the directed rewrite system, the symmetrizer, and the
//! normalization algorithm that rewrites any box diagram into the
//! jellyfish basis.
//!
//! Rewriting works on a chord form. After strand simplification every
//! strand of a box diagram is a single signed chord `w(a, b)` between two
//! ends: ground points, dots, or jellyfish slots. `w` is antisymmetric,
//! so every local relation becomes a polynomial identity in chords. The
//! meaning of a chord for each pair of end types is fixed by
//! [`ChordTerm::to_diagram`], and every rule is checked against the
//! evaluation functor before it is used.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::basisgen::BasisError;
use crate::evalfun::{evaluate, evaluate_map, relation_holds, EvalError};
use crate::exactnum::{Elem, FieldSpec};
use crate::tangle::{gamma_diagram, Diagram, LinComb, Port, Sign, TangleError, VertexKind};
use crate::unirep::Matrix;
use crate::wordlang::{accepts, enumerate, Automaton, Letter, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkeinError {
    #[error("rule {0} failed verification")]
    RuleVerificationFailed(String),
    #[error("step limit of {0} rule applications exceeded")]
    StepLimitExceeded(usize),
    #[error("rewriting result disagrees with evaluation")]
    OracleMismatch,
    #[error("{0}! is not invertible in the field")]
    FactorialNotInvertible(usize),
    #[error("diagram must be a box diagram with all `+` inputs (flatten it first)")]
    NotBoxDiagram,
    #[error("jellyfish rules need a field of characteristic p")]
    NeedsCharP,
    #[error("term left in a shape no rule handles: {0}")]
    Stuck(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tangle(#[from] TangleError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}

// ---------------------------------------------------------------- chord form

/// End of a chord. Ground points are sources; dots and jellyfish slots
/// are sinks. Dots and jellyfish are named by ids local to a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    G(usize),
    J(usize),
    S(usize),
}

impl End {
    pub fn is_sink(self) -> bool {
        !matches!(self, End::G(_))
    }
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::G(i) => write!(f, "g{i}"),
            End::J(k) => write!(f, "j{k}"),
            End::S(d) => write!(f, "s{d}"),
        }
    }
}

/// A point on the sky arc: jellyfish heads and dots sit there, in the
/// order stored in [`ChordTerm::sky`] (right to left above the ground).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkyPoint {
    Jelly(usize),
    Dot(usize),
}

/// A product of chords, together with a planar placement of its dots and
/// jellyfish on the sky arc.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChordTerm {
    pub n: usize,
    pub chords: Vec<(End, End)>,
    pub sky: Vec<SkyPoint>,
}

impl fmt::Display for ChordTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self.chords.iter().map(|(a, b)| format!("w({a},{b})")).collect();
        write!(f, "{}", cs.join(" "))
    }
}

impl ChordTerm {
    pub fn new(n: usize, chords: Vec<(End, End)>) -> Self {
        let mut t = ChordTerm { n, chords, sky: vec![] };
        t.sky = t.jelly_ids().into_iter().map(SkyPoint::Jelly).chain(t.dot_ids().into_iter().map(SkyPoint::Dot)).collect();
        t
    }

    pub fn jelly_ids(&self) -> BTreeSet<usize> {
        self.ends().filter_map(|e| if let End::J(k) = e { Some(k) } else { None }).collect()
    }

    pub fn dot_ids(&self) -> BTreeSet<usize> {
        self.ends().filter_map(|e| if let End::S(k) = e { Some(k) } else { None }).collect()
    }

    fn ends(&self) -> impl Iterator<Item = End> + '_ {
        self.chords.iter().flat_map(|&(a, b)| [a, b])
    }

    fn fresh_jelly(&self) -> usize {
        self.jelly_ids().iter().next_back().map_or(0, |k| k + 1)
    }

    fn fresh_dot(&self) -> usize {
        self.dot_ids().iter().next_back().map_or(0, |k| k + 1)
    }

    /// The diagram this term stands for, and the sign relating them:
    /// `term = sign · diagram`.
    pub fn to_diagram(&self, p: usize) -> Result<(Diagram, i64), SkeinError> {
        self.build(p, false)
    }

    /// Like `to_diagram`, but every dot is cut off and its end becomes an
    /// extra `-` boundary point (after the ground points, by dot id).
    pub fn to_open_diagram(&self, p: usize) -> Result<(Diagram, i64), SkeinError> {
        self.build(p, true)
    }

    fn build(&self, p: usize, open_dots: bool) -> Result<(Diagram, i64), SkeinError> {
        let mut d = Diagram::with_ground(self.n);
        let mut jv: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for k in self.jelly_ids() {
            if p < 2 {
                return Err(SkeinError::NeedsCharP);
            }
            jv.insert(k, (d.add_vertex(VertexKind::Jelly(p)), 0));
        }
        let mut dv: BTreeMap<usize, usize> = BTreeMap::new();
        for k in self.dot_ids() {
            if open_dots {
                dv.insert(k, d.boundary.len());
                d.boundary.push(Sign::Minus);
                d.inputs += 1;
            } else {
                dv.insert(k, d.add_vertex(VertexKind::Dot));
            }
        }
        let mut port = |e: End| -> Port {
            match e {
                End::G(i) => Port::Boundary(i),
                End::S(k) if open_dots => Port::Boundary(dv[&k]),
                End::S(k) => Port::Leg(dv[&k], 0),
                End::J(k) => {
                    let slot = jv.get_mut(&k).unwrap();
                    slot.1 += 1;
                    Port::Leg(slot.0, slot.1 - 1)
                }
            }
        };
        let mut sign = 1;
        for &(a, b) in &self.chords {
            let (pa, pb) = (port(a), port(b));
            match (a.is_sink(), b.is_sink()) {
                (false, false) => {
                    let v = d.add_vertex(VertexKind::Bracket);
                    d.connect(pa, Port::Leg(v, 0));
                    d.connect(pb, Port::Leg(v, 1));
                }
                (false, true) => d.connect(pa, pb),
                (true, false) => {
                    d.connect(pb, pa);
                    sign = -sign;
                }
                (true, true) => {
                    let v = d.add_vertex(VertexKind::InvBracket);
                    d.connect(Port::Leg(v, 0), pa);
                    d.connect(Port::Leg(v, 1), pb);
                    sign = -sign;
                }
            }
        }
        for (k, &(_, used)) in &jv {
            if used != 2 * p - 1 {
                return Err(SkeinError::Stuck(format!("jellyfish {k} has {used} legs")));
            }
        }
        d.edges.sort();
        Ok((d, sign))
    }

    pub fn evaluate(&self, field: &FieldSpec, p: usize) -> Result<Matrix, SkeinError> {
        let (d, s) = self.to_diagram(p)?;
        Ok(evaluate(&d, field)?.scale(&field.from_i64(s)))
    }

    pub fn evaluate_open(&self, field: &FieldSpec, p: usize) -> Result<Matrix, SkeinError> {
        let (d, s) = self.to_open_diagram(p)?;
        Ok(evaluate(&d, field)?.scale(&field.from_i64(s)))
    }

    /// Orients every chord by the end order (flipping signs) and sorts.
    /// Returns the accumulated sign.
    pub fn orient(&mut self) -> i64 {
        let mut s = 1;
        for c in &mut self.chords {
            if c.1 < c.0 {
                *c = (c.1, c.0);
                s = -s;
            }
        }
        self.chords.sort();
        s
    }

    /// Circle position of an end: ground points first, then the sky.
    fn pos(&self, e: End) -> Option<usize> {
        match e {
            End::G(i) => Some(i),
            End::J(k) => self.sky.iter().position(|&s| s == SkyPoint::Jelly(k)).map(|q| self.n + q),
            End::S(k) => self.sky.iter().position(|&s| s == SkyPoint::Dot(k)).map(|q| self.n + q),
        }
    }

    fn circle_len(&self) -> usize {
        self.n + self.sky.len()
    }

    /// Position spans of the chords, with chord indices; chords with an
    /// end not yet on the sky are skipped.
    fn indexed_spans(&self) -> Vec<(usize, (usize, usize))> {
        self.chords
            .iter()
            .enumerate()
            .filter_map(|(i, &(a, b))| {
                let (x, y) = (self.pos(a)?, self.pos(b)?);
                Some((i, (x.min(y), x.max(y))))
            })
            .collect()
    }

    fn spans(&self) -> Vec<(usize, usize)> {
        self.indexed_spans().into_iter().map(|(_, s)| s).collect()
    }

    /// First pair of interleaved chords: leftmost, then innermost.
    pub fn first_crossing(&self) -> Option<(usize, usize)> {
        let sp = self.indexed_spans();
        let mut best: Option<((usize, usize, usize), (usize, usize))> = None;
        for &(i, (a, c)) in &sp {
            for &(j, (b, d)) in &sp {
                if a < b && b < c && c < d {
                    let key = (a, c - a, d - b);
                    if best.map_or(true, |(k, _)| key < k) {
                        best = Some((key, (i, j)));
                    }
                }
            }
        }
        best.map(|(_, ij)| ij)
    }

    pub fn crossings(&self) -> usize {
        let sp = self.spans();
        let mut c = 0;
        for i in 0..sp.len() {
            for j in 0..sp.len() {
                let ((a, cc), (b, d)) = (sp[i], sp[j]);
                if a < b && b < cc && cc < d {
                    c += 1;
                }
            }
        }
        c
    }

    /// Distance to the sky of every gap between neighbouring ground points
    /// (gap i lies between points i and i+1), with the sky gap realizing it.
    pub fn ground_depths(&self) -> Vec<(usize, usize)> {
        let sp = self.spans();
        let len = self.circle_len();
        // gap g sits between positions g and g+1 (mod len)
        let inside = |g: usize, (a, b): (usize, usize)| a <= g && g < b;
        let sky_gaps: Vec<usize> = (self.n.saturating_sub(1)..len).collect();
        (0..self.n.saturating_sub(1))
            .map(|g| {
                sky_gaps
                    .iter()
                    .map(|&s| (sp.iter().filter(|&&c| inside(g, c) != inside(s, c)).count(), s))
                    .min()
                    .unwrap_or((0, len - 1))
            })
            .collect()
    }
}

/// A linear combination of chord terms.
pub type ChordSum = Vec<(ChordTerm, Elem)>;

/// Strand simplification: reads a box diagram as a signed chord term.
/// Bracket chains collapse (E1, E4), closed strands give their value
/// (E3), double dots and capped jellyfish give zero (E2, E9).
pub fn from_diagram(d: &Diagram, field: &FieldSpec) -> Result<(ChordTerm, Elem), SkeinError> {
    if d.inputs != d.boundary.len() || d.boundary.iter().any(|&s| s != Sign::Plus) {
        return Err(SkeinError::NotBoxDiagram);
    }
    let mut coeff = field.one();
    for _ in 0..d.free_loops {
        coeff = field.mul(&coeff, &field.from_i64(2));
    }
    let mut jid: BTreeMap<usize, usize> = BTreeMap::new();
    let mut did: BTreeMap<usize, usize> = BTreeMap::new();
    for (v, &k) in d.vertices.iter().enumerate() {
        match k {
            VertexKind::Jelly(_) => {
                let n = jid.len();
                jid.insert(v, n);
            }
            VertexKind::Dot => {
                let n = did.len();
                did.insert(v, n);
            }
            _ => {}
        }
    }
    let end = |port: Port| -> End {
        match port {
            Port::Boundary(i) => End::G(i),
            Port::Leg(v, _) => match d.vertices[v] {
                VertexKind::Jelly(_) => End::J(jid[&v]),
                VertexKind::Dot => End::S(did[&v]),
                _ => unreachable!("strand ends are terminals"),
            },
        }
    };
    let mut chords = vec![];
    for s in d.strands() {
        let chain: Vec<(VertexKind, usize)> = s.passes.iter().map(|pv| (pv.kind, pv.entered_leg)).collect();
        if s.closed {
            let v = chain_value(&chain, None, field)?;
            coeff = field.mul(&coeff, &v);
            continue;
        }
        let (a, b) = (end(s.a), end(s.b));
        let v = chain_value(&chain, Some((a.is_sink(), b.is_sink())), field)?;
        coeff = field.mul(&coeff, &v);
        chords.push((a, b));
    }
    let mut t = ChordTerm::new(d.boundary.len(), chords);
    let s = t.orient();
    coeff = field.mul(&coeff, &field.from_i64(s));
    Ok((t, coeff))
}

/// Scalar relating a strand (a chain of brackets and inverse brackets) to
/// the canonical chord between its ends; for closed strands, its value.
fn chain_value(chain: &[(VertexKind, usize)], ends: Option<(bool, bool)>, field: &FieldSpec) -> Result<Elem, SkeinError> {
    let mut d = Diagram::empty();
    let (first, last) = match ends {
        Some((sa, sb)) => {
            let sg = |sink: bool| if sink { Sign::Minus } else { Sign::Plus };
            d.boundary = vec![sg(sa), sg(sb)];
            d.inputs = 2;
            (Some(Port::Boundary(0)), Some(Port::Boundary(1)))
        }
        None => (None, None),
    };
    let mut cur = first;
    let mut first_leg = None;
    for &(k, entered) in chain {
        let v = d.add_vertex(k);
        let enter = Port::Leg(v, entered);
        match cur {
            Some(c) => link(&mut d, c, enter),
            None => first_leg = Some(enter),
        }
        cur = Some(Port::Leg(v, 1 - entered));
    }
    match (cur, last) {
        (Some(c), Some(l)) => link(&mut d, c, l),
        (Some(c), None) => link(&mut d, c, first_leg.expect("closed strand has a vertex")),
        _ => {}
    }
    let actual = evaluate(&d, field)?;
    if ends.is_none() {
        return Ok(actual.get(0, 0).clone());
    }
    let (sa, sb) = ends.unwrap();
    let canon_term = ChordTerm::new(2, vec![(canon_end(sa, 0), canon_end(sb, 1))]);
    let canon = chord_pair_eval(&canon_term, sa, sb, field)?;
    let k = (0..4).find(|&i| !canon.get(0, i).is_zero()).expect("canonical chord is nonzero");
    let ratio = field.div(actual.get(0, k), canon.get(0, k)).map_err(TangleError::from)?;
    debug_assert_eq!(canon.scale(&ratio), actual);
    Ok(ratio)
}

fn link(d: &mut Diagram, x: Port, y: Port) {
    if d.role(x).is_source() {
        d.connect(x, y);
    } else {
        d.connect(y, x);
    }
}

fn canon_end(sink: bool, i: usize) -> End {
    if sink {
        End::S(i)
    } else {
        End::G(i)
    }
}

/// Evaluation of a single chord with its sink ends opened up as boundary
/// points, matching the layout used by `chain_value`.
fn chord_pair_eval(t: &ChordTerm, sa: bool, sb: bool, field: &FieldSpec) -> Result<Matrix, SkeinError> {
    let sg = |sink: bool| if sink { Sign::Minus } else { Sign::Plus };
    let mut d = Diagram::empty();
    d.boundary = vec![sg(sa), sg(sb)];
    d.inputs = 2;
    let (a, b) = t.chords[0];
    let (pa, pb) = (Port::Boundary(0), Port::Boundary(1));
    let mut sign = 1;
    match (a.is_sink(), b.is_sink()) {
        (false, false) => {
            let v = d.add_vertex(VertexKind::Bracket);
            d.connect(pa, Port::Leg(v, 0));
            d.connect(pb, Port::Leg(v, 1));
        }
        (false, true) => d.connect(pa, pb),
        (true, false) => {
            d.connect(pb, pa);
            sign = -1;
        }
        (true, true) => {
            let v = d.add_vertex(VertexKind::InvBracket);
            d.connect(Port::Leg(v, 0), pa);
            d.connect(Port::Leg(v, 1), pb);
            sign = -1;
        }
    }
    Ok(evaluate(&d, field)?.scale(&field.from_i64(sign)))
}


// ---------------------------------------------------------------- layout

impl ChordTerm {
    /// Places jellyfish and dots on the sky so that few chords cross:
    /// jellyfish orders are tried exhaustively (up to six), then each dot
    /// goes to the sky gap where its chord crosses least.
    pub fn layout(&mut self) {
        let jellies: Vec<usize> = self.jelly_ids().into_iter().collect();
        let mut bare = ChordTerm {
            n: self.n,
            chords: self.chords.iter().copied().filter(|(a, b)| !matches!(a, End::S(_)) && !matches!(b, End::S(_))).collect(),
            sky: jellies.iter().map(|&k| SkyPoint::Jelly(k)).collect(),
        };
        if jellies.len() <= 6 {
            let mut best: Option<(usize, Vec<SkyPoint>)> = None;
            for perm in jellies.iter().copied().permutations(jellies.len()) {
                bare.sky = perm.into_iter().map(SkyPoint::Jelly).collect();
                let c = bare.crossings();
                if best.as_ref().map_or(true, |(b, _)| c < *b) {
                    best = Some((c, bare.sky.clone()));
                }
            }
            bare.sky = best.map(|b| b.1).unwrap_or_default();
        }
        self.sky = bare.sky;
        let mut dots: Vec<(usize, usize)> = vec![];
        for &(a, b) in &self.chords {
            for (x, y) in [(a, b), (b, a)] {
                if let End::S(d) = x {
                    dots.push((self.pos(y).unwrap_or(usize::MAX), d));
                }
            }
        }
        dots.sort();
        dots.dedup_by_key(|x| x.1);
        for (_, d) in dots {
            if !self.sky.contains(&SkyPoint::Dot(d)) {
                self.place(SkyPoint::Dot(d));
            }
        }
    }

    fn place(&mut self, pt: SkyPoint) {
        let mut best = (usize::MAX, 0);
        for at in 0..=self.sky.len() {
            self.sky.insert(at, pt);
            let c = self.crossings();
            self.sky.remove(at);
            if c < best.0 {
                best = (c, at);
            }
        }
        self.sky.insert(best.1, pt);
    }

    fn sky_index(&self, pt: SkyPoint) -> usize {
        self.sky.iter().position(|&s| s == pt).expect("point on the sky")
    }

    /// Other ends of the chords at `e`, with chord indices, in circle order
    /// going forward from `e`.
    fn neighbours(&self, e: End) -> Vec<(usize, End)> {
        let len = self.circle_len();
        let base = self.pos(e).expect("placed");
        let mut out: Vec<(usize, usize, End)> = vec![];
        for (i, &(a, b)) in self.chords.iter().enumerate() {
            if a == e {
                out.push(((self.pos(b).expect("placed") + len - base) % len, i, b));
            } else if b == e {
                out.push(((self.pos(a).expect("placed") + len - base) % len, i, a));
            }
        }
        out.sort();
        out.into_iter().map(|(_, i, x)| (i, x)).collect()
    }

    /// A chord that is zero on its own: both ends on dots (a double dot)
    /// or both ends on one jellyfish (a capped jellyfish).
    fn zero_chord(&self) -> Option<&'static str> {
        for &(a, b) in &self.chords {
            match (a, b) {
                (End::S(_), End::S(_)) => return Some("E2"),
                (End::J(x), End::J(y)) if x == y => return Some("E9"),
                _ => {}
            }
        }
        None
    }

    fn shared(&self, x: usize, y: usize) -> usize {
        self.chords
            .iter()
            .filter(|&&(a, b)| (a, b) == (End::J(x), End::J(y)) || (a, b) == (End::J(y), End::J(x)))
            .count()
    }

    fn dotted_jelly(&self) -> Option<(usize, usize)> {
        for &(a, b) in &self.chords {
            match (a, b) {
                (End::J(k), End::S(d)) | (End::S(d), End::J(k)) => return Some((k, d)),
                _ => {}
            }
        }
        None
    }

    pub fn measure(&self, p: Option<usize>) -> TerminationMeasure {
        let js: Vec<usize> = self.jelly_ids().into_iter().collect();
        let (mut adj, mut dotted) = (0, 0);
        if let Some(p) = p {
            for (i, &x) in js.iter().enumerate() {
                for &y in &js[i + 1..] {
                    adj += (self.shared(x, y) + 1).saturating_sub(p);
                }
            }
        }
        for &k in &js {
            if self.chords.iter().any(|&c| matches!(c, (End::J(x), End::S(_)) | (End::S(_), End::J(x)) if x == k)) {
                dotted += 1;
            }
        }
        let over = match p {
            Some(p) => self.ground_depths().iter().map(|&(d, _)| (d + 1).saturating_sub(p)).sum(),
            None => 0,
        };
        let degenerate = self
            .chords
            .iter()
            .filter(|&&(a, b)| matches!((a, b), (End::S(_), End::S(_))) || (matches!(a, End::J(_)) && a == b))
            .count();
        let floating = js.iter().filter(|&&k| !self.chords.iter().any(|&c| matches!(c, (End::G(_), End::J(x)) | (End::J(x), End::G(_)) if x == k))).count();
        TerminationMeasure { crossings: self.crossings(), over_depth: over, adjacency_excess: adj, dotted_jellies: dotted, bracket_excess: degenerate, floating }
    }

    /// Relabels jellyfish by their smallest ground point and dots by their
    /// ground point, orients and sorts. None if some jellyfish or dot does
    /// not touch the ground.
    fn canonical(&self) -> Option<(i64, Vec<(End, End)>)> {
        let mut jmin: BTreeMap<usize, usize> = BTreeMap::new();
        let mut dg: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &self.chords {
            for (x, y) in [(a, b), (b, a)] {
                match (x, y) {
                    (End::J(k), End::G(i)) => {
                        let m = jmin.entry(k).or_insert(i);
                        *m = (*m).min(i);
                    }
                    (End::S(k), End::G(i)) => {
                        dg.insert(k, i);
                    }
                    _ => {}
                }
            }
        }
        let rn = |e: End| -> Option<End> {
            Some(match e {
                End::G(i) => End::G(i),
                End::J(k) => End::J(*jmin.get(&k)?),
                End::S(k) => End::S(*dg.get(&k)?),
            })
        };
        let chords = self.chords.iter().map(|&(a, b)| Some((rn(a)?, rn(b)?))).collect::<Option<Vec<_>>>()?;
        let mut t = ChordTerm { n: self.n, chords, sky: vec![] };
        let s = t.orient();
        Some((s, t.chords))
    }
}

/// Lexicographic progress measure of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TerminationMeasure {
    pub crossings: usize,
    pub over_depth: usize,
    pub adjacency_excess: usize,
    pub dotted_jellies: usize,
    pub bracket_excess: usize,
    pub floating: usize,
}

impl fmt::Display for TerminationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{},{})",
            self.crossings, self.over_depth, self.adjacency_excess, self.dotted_jellies, self.bracket_excess, self.floating
        )
    }
}

// ---------------------------------------------------------------- local rules

/// An identity between chord terms on `k` local ground points, checked by
/// evaluation. It is applied inside a bigger term by renaming each local
/// ground point to the end it is glued to; since every chord is the same
/// antisymmetric form whatever its end types, the identity survives the
/// renaming.
#[derive(Debug, Clone)]
pub struct LocalRule {
    pub name: String,
    pub lhs: ChordTerm,
    pub rhs: ChordSum,
}

impl LocalRule {
    fn verified(self, field: &FieldSpec, p: usize) -> Result<Self, SkeinError> {
        let l = self.lhs.evaluate(field, p)?;
        let mut r = Matrix::zeros(field, 1, l.row(0).len());
        for (t, c) in &self.rhs {
            r = r.add(&t.evaluate(field, p)?.scale(c)).map_err(|_| SkeinError::RuleVerificationFailed(self.name.clone()))?;
        }
        if l != r {
            return Err(SkeinError::RuleVerificationFailed(self.name.clone()));
        }
        Ok(self)
    }

    /// Rewrites one instance. `ends[i]` is glued to local ground point i,
    /// `inner` sends the lhs's own jellyfish and dots to those of `t`, and
    /// the rhs's sky points are inserted at sky index `at` of `t`.
    fn apply(&self, t: &ChordTerm, ends: &[End], inner: &dyn Fn(End) -> End, at: usize, field: &FieldSpec) -> ChordSum {
        let rename_lhs = |e: End| match e {
            End::G(i) => ends[i],
            x => inner(x),
        };
        let mut rest = t.chords.clone();
        let mut sign = 1i64;
        for &(a, b) in &self.lhs.chords {
            let (a, b) = (rename_lhs(a), rename_lhs(b));
            if let Some(i) = rest.iter().position(|&c| c == (a, b)) {
                rest.remove(i);
            } else {
                let i = rest.iter().position(|&c| c == (b, a)).expect("rule instance is present");
                rest.remove(i);
                sign = -sign;
            }
        }
        let gone: BTreeSet<SkyPoint> = self
            .lhs
            .sky
            .iter()
            .map(|&pt| match pt {
                SkyPoint::Jelly(k) => match inner(End::J(k)) {
                    End::J(x) => SkyPoint::Jelly(x),
                    _ => unreachable!(),
                },
                SkyPoint::Dot(k) => match inner(End::S(k)) {
                    End::S(x) => SkyPoint::Dot(x),
                    _ => unreachable!(),
                },
            })
            .collect();
        let at = at - t.sky[..at].iter().filter(|s| gone.contains(s)).count();
        let base_sky: Vec<SkyPoint> = t.sky.iter().copied().filter(|s| !gone.contains(s)).collect();
        let (fj, fd) = (t.fresh_jelly(), t.fresh_dot());
        let rn = |e: End| match e {
            End::G(i) => ends[i],
            End::J(k) => End::J(fj + k),
            End::S(k) => End::S(fd + k),
        };
        let sg = field.from_i64(sign);
        self.rhs
            .iter()
            .map(|(u, c)| {
                let mut chords = rest.clone();
                chords.extend(u.chords.iter().map(|&(a, b)| (rn(a), rn(b))));
                let mut sky = base_sky.clone();
                let new: Vec<SkyPoint> = u
                    .sky
                    .iter()
                    .map(|&pt| match pt {
                        SkyPoint::Jelly(k) => SkyPoint::Jelly(fj + k),
                        SkyPoint::Dot(k) => SkyPoint::Dot(fd + k),
                    })
                    .collect();
                sky.splice(at..at, new);
                (ChordTerm { n: t.n, chords, sky }, field.mul(c, &sg))
            })
            .collect()
    }
}

/// Jellyfish-basis elements on k points in chord form, for expanding
/// local pictures.
struct LocalBasis {
    terms: Vec<(ChordTerm, Elem)>,
    rows: Matrix,
}

impl LocalBasis {
    fn new(k: usize, field: &FieldSpec, p: usize) -> Result<Self, SkeinError> {
        let fam = crate::basisgen::y_family(k, Some(p))?;
        let mut rows = Matrix::zeros(field, fam.elements.len(), 1 << k);
        let mut terms = vec![];
        for (r, (_, d)) in fam.elements.iter().enumerate() {
            let v = evaluate(d, field)?;
            for c in 0..1 << k {
                rows.set(r, c, v.get(0, c).clone());
            }
            let (mut t, c) = from_diagram(d, field)?;
            t.layout();
            terms.push((t, c));
        }
        Ok(LocalBasis { terms, rows })
    }

    /// The basis expansion of a local picture.
    fn expand(&self, lhs: &ChordTerm, field: &FieldSpec, p: usize) -> Result<ChordSum, SkeinError> {
        let v = lhs.evaluate(field, p)?;
        let coeffs = self.rows.solve_left(v.row(0)).ok_or(SkeinError::OracleMismatch)?;
        Ok(coeffs
            .into_iter()
            .zip(&self.terms)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, (t, c))| (t.clone(), field.mul(&a, c)))
            .collect())
    }
}

/// p nested caps on 2p points.
fn nested_caps(p: usize) -> ChordTerm {
    ChordTerm::new(2 * p, (0..p).map(|j| (End::G(j), End::G(2 * p - 1 - j))).collect())
}

/// A jellyfish with a dot on one leg, the other legs on 2p - 2 points.
fn dotted_jelly_term(p: usize) -> ChordTerm {
    let mut ch = vec![(End::S(0), End::J(0))];
    ch.extend((0..2 * p - 2).map(|i| (End::G(i), End::J(0))));
    ChordTerm::new(2 * p - 2, ch)
}

/// Two jellyfish joined by m strands; `pattern[i]` says whether local
/// point i is a leg of the first one.
fn joined_jellies(m: usize, pattern: &[bool]) -> ChordTerm {
    let mut ch: Vec<(End, End)> = pattern.iter().enumerate().map(|(i, &first)| (End::G(i), End::J(if first { 0 } else { 1 }))).collect();
    ch.extend(std::iter::repeat((End::J(0), End::J(1))).take(m));
    let mut t = ChordTerm::new(pattern.len(), ch);
    t.sky = vec![SkyPoint::Jelly(1), SkyPoint::Jelly(0)];
    t
}

fn e5_rule(field: &FieldSpec) -> ChordSum {
    let g = End::G;
    vec![
        (ChordTerm::new(4, vec![(g(0), g(1)), (g(2), g(3))]), field.one()),
        (ChordTerm::new(4, vec![(g(0), g(3)), (g(1), g(2))]), field.one()),
    ]
}

/// Jellyfish with a dot: minus all legs dotted, plus every pairing of the
/// first p - 1 legs with the last p - 1.
fn e6_rhs(p: usize, field: &FieldSpec) -> ChordSum {
    let k = 2 * p - 2;
    let mut dots = ChordTerm::new(k, (0..k).map(|i| (End::G(i), End::S(i))).collect());
    dots.sky = (0..k).rev().map(SkyPoint::Dot).collect();
    let mut out = vec![(dots, field.from_i64(-1))];
    for perm in (0..p - 1).permutations(p - 1) {
        let ch = (0..p - 1).map(|i| (End::G(i), End::G(k - 1 - perm[i]))).collect();
        out.push((ChordTerm::new(k, ch), field.one()));
    }
    out
}

fn patterns(r: usize) -> Vec<Vec<bool>> {
    (0..2 * r)
        .combinations(r)
        .map(|c| (0..2 * r).map(|i| c.contains(&i)).collect())
        .collect()
}

/// The verified local rules used by normalization.
#[derive(Debug, Clone)]
pub struct SkeinRules {
    pub field: FieldSpec,
    pub p: Option<usize>,
    pub e5: LocalRule,
    pub e6: Option<LocalRule>,
    pub e7: Option<LocalRule>,
    pub e10: BTreeMap<(usize, Vec<bool>), LocalRule>,
}

impl SkeinRules {
    pub fn new(field: &FieldSpec, p: Option<usize>) -> Result<Self, SkeinError> {
        let ch = field.characteristic() as usize;
        if p.is_some() && p != Some(ch) {
            return Err(SkeinError::NeedsCharP);
        }
        let g = End::G;
        let e5 = LocalRule { name: "E5".into(), lhs: ChordTerm::new(4, vec![(g(0), g(2)), (g(1), g(3))]), rhs: e5_rule(field) }.verified(field, 0)?;
        let (mut e6, mut e7, mut e10) = (None, None, BTreeMap::new());
        if let Some(p) = p {
            e6 = Some(LocalRule { name: "E6".into(), lhs: dotted_jelly_term(p), rhs: e6_rhs(p, field) }.verified(field, p)?);
            let lhs = nested_caps(p);
            let rhs = LocalBasis::new(2 * p, field, p)?.expand(&lhs, field, p)?;
            e7 = Some(LocalRule { name: "E7".into(), lhs, rhs }.verified(field, p)?);
            let mut bases: BTreeMap<usize, LocalBasis> = BTreeMap::new();
            for m in p..2 * p {
                let r = 2 * p - 1 - m;
                if !bases.contains_key(&(2 * r)) {
                    bases.insert(2 * r, LocalBasis::new(2 * r, field, p)?);
                }
                for pat in patterns(r) {
                    let lhs = joined_jellies(m, &pat);
                    let rhs = bases[&(2 * r)].expand(&lhs, field, p)?;
                    e10.insert((m, pat), LocalRule { name: "E10".into(), lhs, rhs }.verified(field, p)?);
                }
            }
        }
        Ok(SkeinRules { field: field.clone(), p, e5, e6, e7, e10 })
    }
}

// ---------------------------------------------------------------- normalization

#[derive(Debug, Clone)]
pub struct NormalizeOptions {
    pub step_limit: usize,
    pub trace: bool,
    /// Re-evaluate every rule application (slow; for testing).
    pub check_each: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        let step_limit = std::env::var("SKEIN_STEP_LIMIT").ok().and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
        NormalizeOptions { step_limit, trace: false, check_each: false }
    }
}

/// Result of normalization: coefficients over jellyfish-basis words, in
/// enumeration order, zeros dropped.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub n: usize,
    pub terms: Vec<(Word, Elem)>,
    pub trace: Vec<String>,
    pub steps: usize,
    /// Rule applications after which some produced term did not have a
    /// smaller measure than the term rewritten.
    pub non_decreasing: usize,
}

struct Run<'a> {
    rules: &'a SkeinRules,
    opts: &'a NormalizeOptions,
    steps: usize,
    non_decreasing: usize,
    trace: Vec<String>,
    gamma: HashMap<Word, Option<(i64, Vec<(End, End)>, Elem)>>,
}

impl Run<'_> {
    fn log(&mut self, rule: &str, m: Option<TerminationMeasure>) -> Result<(), SkeinError> {
        self.steps += 1;
        if self.steps > self.opts.step_limit {
            return Err(SkeinError::StepLimitExceeded(self.opts.step_limit));
        }
        if self.opts.trace {
            let ms = m.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
            self.trace.push(format!("{}\t{}\t{}", self.steps, rule, ms));
        }
        Ok(())
    }

    fn record(&mut self, name: &str, before: &ChordTerm, coeff: &Elem, out: &ChordSum) -> Result<(), SkeinError> {
        let p = self.rules.p;
        let field = &self.rules.field;
        if self.opts.check_each {
            let pp = p.unwrap_or(0);
            let want = before.evaluate(field, pp)?.scale(coeff);
            let mut got = Matrix::zeros(field, 1, 1 << before.n);
            for (t, c) in out {
                got = got.add(&t.evaluate(field, pp)?.scale(c)).map_err(|_| SkeinError::OracleMismatch)?;
            }
            if got != want {
                return Err(SkeinError::OracleMismatch);
            }
        }
        let m0 = before.measure(p);
        let ms: Vec<TerminationMeasure> = out.iter().map(|(t, _)| t.measure(p)).collect();
        if ms.iter().any(|m| *m >= m0) {
            self.non_decreasing += 1;
        }
        let worst = ms.into_iter().max();
        self.log(name, worst)
    }

    /// One rewriting step on a term; None when the term is final.
    fn step(&mut self, t: &ChordTerm, c: &Elem) -> Result<Option<ChordSum>, SkeinError> {
        let field = &self.rules.field;
        if let Some(name) = t.zero_chord() {
            self.record(name, t, c, &vec![])?;
            return Ok(Some(vec![]));
        }
        let scale = |v: ChordSum| -> ChordSum { v.into_iter().map(|(u, a)| (u, field.mul(&a, c))).collect() };
        if let Some((i, j)) = t.first_crossing() {
            let (a, b) = t.chords[i];
            let (x, y) = t.chords[j];
            let mut pts = [(t.pos(a).unwrap(), a), (t.pos(b).unwrap(), b), (t.pos(x).unwrap(), x), (t.pos(y).unwrap(), y)];
            pts.sort_by_key(|q| q.0);
            let ends: Vec<End> = pts.iter().map(|q| q.1).collect();
            let out = scale(self.rules.e5.apply(t, &ends, &|e| e, 0, field));
            self.record("E5", t, c, &out)?;
            return Ok(Some(out));
        }
        let Some(p) = self.rules.p else { return Ok(None) };
        if let Some((ends, at)) = e7_site(t, p) {
            let out = scale(self.rules.e7.as_ref().unwrap().apply(t, &ends, &|e| e, at, field));
            self.record("E7", t, c, &out)?;
            return Ok(Some(out));
        }
        let js: Vec<usize> = t.jelly_ids().into_iter().collect();
        for (ix, &x) in js.iter().enumerate() {
            for &y in &js[ix + 1..] {
                let m = t.shared(x, y);
                if m < p {
                    continue;
                }
                let mut legs: Vec<(usize, End, bool)> = vec![];
                let len = t.circle_len();
                let base = t.pos(End::J(x)).unwrap();
                for (who, first) in [(x, true), (y, false)] {
                    for (_, e) in t.neighbours(End::J(who)) {
                        if e != End::J(x) && e != End::J(y) {
                            legs.push(((t.pos(e).unwrap() + len - base) % len, e, first));
                        }
                    }
                }
                legs.sort_by_key(|l| (l.0, !l.2));
                let pat: Vec<bool> = legs.iter().map(|l| l.2).collect();
                let ends: Vec<End> = legs.iter().map(|l| l.1).collect();
                let rule = &self.rules.e10[&(m, pat)];
                let inner = |e: End| match e {
                    End::J(0) => End::J(x),
                    End::J(1) => End::J(y),
                    _ => unreachable!(),
                };
                let at = t.sky_index(SkyPoint::Jelly(x));
                let out = scale(rule.apply(t, &ends, &inner, at, field));
                self.record("E10", t, c, &out)?;
                return Ok(Some(out));
            }
        }
        if let Some((k, d)) = t.dotted_jelly() {
            let mut ends = vec![];
            let mut skipped = false;
            for (_, e) in t.neighbours(End::J(k)) {
                if e == End::S(d) && !skipped {
                    skipped = true;
                } else {
                    ends.push(e);
                }
            }
            let inner = |e: End| match e {
                End::J(_) => End::J(k),
                End::S(_) => End::S(d),
                _ => unreachable!(),
            };
            let at = t.sky_index(SkyPoint::Jelly(k));
            let out = scale(self.rules.e6.as_ref().unwrap().apply(t, &ends, &inner, at, field));
            self.record("E6", t, c, &out)?;
            return Ok(Some(out));
        }
        Ok(None)
    }

    /// Reads a final term as a basis word: term = factor · γ(word).
    fn recognize(&mut self, t: &ChordTerm) -> Result<(Word, Elem), SkeinError> {
        let field = self.rules.field.clone();
        let stuck = || SkeinError::Stuck(t.to_string());
        let (st, key) = t.canonical().ok_or_else(stuck)?;
        let automaton = match self.rules.p {
            Some(p) => Automaton::Np(p),
            None => Automaton::N0,
        };
        let mut base: Vec<Option<Letter>> = vec![None; t.n];
        let mut jlegs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &t.chords {
            for (x, y) in [(a, b), (b, a)] {
                if let End::G(i) = x {
                    match y {
                        End::G(j) => base[i] = Some(if i < j { Letter::Open } else { Letter::Close }),
                        End::S(_) => base[i] = Some(Letter::Dot),
                        End::J(k) => jlegs.entry(k).or_default().push(i),
                    }
                }
            }
        }
        let choices: Vec<Vec<usize>> = jlegs.values().map(|v| v.iter().copied().sorted().collect()).collect();
        for pick in picks(&choices) {
            let mut letters = base.clone();
            for (legs, &m) in choices.iter().zip(&pick) {
                for &g in legs {
                    letters[g] = Some(match g.cmp(&m) {
                        std::cmp::Ordering::Less => Letter::Open,
                        std::cmp::Ordering::Equal => Letter::Star,
                        std::cmp::Ordering::Greater => Letter::Close,
                    });
                }
            }
            let Some(letters) = letters.into_iter().collect::<Option<Vec<_>>>() else { continue };
            let w = Word { automaton, letters };
            if !accepts(&w).unwrap_or(false) {
                continue;
            }
            if !self.gamma.contains_key(&w) {
                let g = gamma_diagram(&w)?;
                let (tw, cw) = from_diagram(&g, &field)?;
                let entry = tw.canonical().map(|(s, k)| (s, k, cw));
                self.gamma.insert(w.clone(), entry);
            }
            if let Some(Some((sw, kw, cw))) = self.gamma.get(&w) {
                if *kw == key {
                    let f = field.div(&field.from_i64(st * sw), cw).map_err(TangleError::from)?;
                    return Ok((w, f));
                }
            }
        }
        Err(stuck())
    }
}

/// Every way of choosing one entry from each list.
fn picks(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    choices.iter().fold(vec![vec![]], |acc, c| {
        acc.into_iter().flat_map(|pre| c.iter().map(move |&x| [pre.clone(), vec![x]].concat())).collect()
    })
}

/// Where strand depth reduction applies: the leftmost ground gap at depth
/// p or more, the p outermost chords between it and the nearest sky gap
/// (as local ends x1..xp, yp..y1), and the sky index for new points.
fn e7_site(t: &ChordTerm, p: usize) -> Option<(Vec<End>, usize)> {
    let depths = t.ground_depths();
    let (g, &(_, s)) = depths.iter().enumerate().find(|(_, &(d, _))| d >= p)?;
    let len = t.circle_len();
    let rot = |x: usize| (x + len - (s + 1) % len) % len;
    let gr = rot(g);
    let mut sep: Vec<(usize, usize, End, End)> = vec![];
    for &(a, b) in &t.chords {
        let (pa, pb) = (rot(t.pos(a)?), rot(t.pos(b)?));
        let (lo, hi, el, eh) = if pa < pb { (pa, pb, a, b) } else { (pb, pa, b, a) };
        if lo <= gr && gr < hi {
            sep.push((lo, usize::MAX - hi, el, eh));
        }
    }
    sep.sort();
    sep.truncate(p);
    let mut ends: Vec<End> = sep.iter().map(|c| c.2).collect();
    ends.extend(sep.iter().rev().map(|c| c.3));
    Some((ends, s + 1 - t.n))
}

impl SkeinRules {
    /// Rewrites a box diagram into the jellyfish basis, then checks the
    /// result against direct evaluation.
    pub fn normalize(&self, d: &Diagram, opts: &NormalizeOptions) -> Result<Normalized, SkeinError> {
        let field = &self.field;
        if d.jelly_count() > 0 && self.p.is_none() {
            return Err(SkeinError::NeedsCharP);
        }
        let mut run = Run { rules: self, opts, steps: 0, non_decreasing: 0, trace: vec![], gamma: HashMap::new() };
        let (mut t0, c0) = from_diagram_logged(d, field, &mut run)?;
        t0.layout();
        let mut acc: HashMap<Word, Elem> = HashMap::new();
        let mut stack: ChordSum = if c0.is_zero() { vec![] } else { vec![(t0, c0)] };
        while let Some((t, c)) = stack.pop() {
            match run.step(&t, &c)? {
                Some(out) => stack.extend(out.into_iter().filter(|(_, a)| !a.is_zero())),
                None => {
                    let (w, f) = run.recognize(&t)?;
                    let v = field.mul(&c, &f);
                    let slot = acc.entry(w).or_insert_with(|| field.zero());
                    *slot = field.add(slot, &v);
                }
            }
        }
        let automaton = match self.p {
            Some(p) => Automaton::Np(p),
            None => Automaton::N0,
        };
        let n = d.boundary.len();
        let terms: Vec<(Word, Elem)> = enumerate(automaton, n)
            .into_iter()
            .filter_map(|w| acc.get(&w).filter(|c| !c.is_zero()).map(|c| (w, c.clone())))
            .collect();
        // the oracle
        let mut total = Matrix::zeros(field, 1, 1 << n);
        for (w, c) in &terms {
            total = total.add(&evaluate(&gamma_diagram(w)?, field)?.scale(c)).map_err(|_| SkeinError::OracleMismatch)?;
        }
        if total != evaluate(d, field)? {
            return Err(SkeinError::OracleMismatch);
        }
        Ok(Normalized { n, terms, trace: run.trace, steps: run.steps, non_decreasing: run.non_decreasing })
    }

    pub fn normalize_lincomb(&self, x: &LinComb, opts: &NormalizeOptions) -> Result<Normalized, SkeinError> {
        let field = &self.field;
        let n = x.terms.first().map_or(0, |(d, _)| d.boundary.len());
        let mut acc: HashMap<Word, Elem> = HashMap::new();
        let (mut trace, mut steps, mut nd) = (vec![], 0, 0);
        for (d, c) in &x.terms {
            let r = self.normalize(d, opts)?;
            for (w, a) in r.terms {
                let slot = acc.entry(w).or_insert_with(|| field.zero());
                *slot = field.add(slot, &field.mul(&a, c));
            }
            trace.extend(r.trace);
            steps += r.steps;
            nd += r.non_decreasing;
        }
        let automaton = match self.p {
            Some(p) => Automaton::Np(p),
            None => Automaton::N0,
        };
        let terms = enumerate(automaton, n)
            .into_iter()
            .filter_map(|w| acc.get(&w).filter(|c| !c.is_zero()).map(|c| (w, c.clone())))
            .collect();
        Ok(Normalized { n, terms, trace, steps, non_decreasing: nd })
    }
}

/// Strand simplification with one trace line per simplified strand.
fn from_diagram_logged(d: &Diagram, field: &FieldSpec, run: &mut Run) -> Result<(ChordTerm, Elem), SkeinError> {
    let (t, c) = from_diagram(d, field)?;
    for _ in 0..d.free_loops {
        run.log("E3", None)?;
    }
    for s in d.strands() {
        if s.closed {
            run.log("E3", None)?;
        } else if s.passes.len() > 1 {
            run.log("E1", None)?;
        } else if s.passes.len() == 1 && s.passes[0].entered_leg == 1 {
            run.log("E4", None)?;
        }
    }
    Ok((t, c))
}

/// Normalizes with freshly built and verified rules.
pub fn normalize(d: &Diagram, field: &FieldSpec, p: Option<usize>, opts: &NormalizeOptions) -> Result<Normalized, SkeinError> {
    SkeinRules::new(field, p)?.normalize(d, opts)
}

// ---------------------------------------------------------------- relation list

/// A directed relation between linear combinations of diagrams with the
/// same boundary, usable only once `verified` is set by evaluation.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: LinComb,
    pub rhs: LinComb,
    /// `None` for any field, `Some(p)` for characteristic p only.
    pub char_p: Option<usize>,
    pub verified: bool,
}

impl RewriteRule {
    pub fn verify(&mut self) -> Result<bool, SkeinError> {
        self.verified = relation_holds(&self.lhs, &self.rhs, &self.lhs.field)?;
        Ok(self.verified)
    }
}

fn chord_lincomb(sum: &[(ChordTerm, Elem)], field: &FieldSpec, p: usize) -> Result<LinComb, SkeinError> {
    let mut out = LinComb::zero(field);
    for (t, c) in sum {
        let (d, s) = t.to_diagram(p)?;
        out.push(d, field.mul(c, &field.from_i64(s)));
    }
    Ok(out)
}

fn rule(name: &str, lhs: LinComb, rhs: LinComb, char_p: Option<usize>) -> RewriteRule {
    RewriteRule { name: name.to_string(), lhs, rhs, char_p, verified: false }
}

fn single(field: &FieldSpec, d: Diagram, c: i64) -> LinComb {
    let mut l = LinComb::zero(field);
    l.push(d, field.from_i64(c));
    l
}

/// Two-point diagram with the given boundary signs.
fn open2(a: Sign, b: Sign) -> Diagram {
    let mut d = Diagram::empty();
    d.boundary = vec![a, b];
    d.inputs = 2;
    d
}

/// A jellyfish on 2p - 1 ground points, point i on leg perm[i].
fn permuted_jelly(p: usize, perm: &[usize]) -> Diagram {
    let mut d = Diagram::with_ground(2 * p - 1);
    let v = d.add_vertex(VertexKind::Jelly(p));
    for (i, &l) in perm.iter().enumerate() {
        d.connect(Port::Boundary(i), Port::Leg(v, l));
    }
    d.edges.sort();
    d
}

/// The relations, unverified. Defining relations E1-E5 hold in every
/// characteristic; with `p` the jellyfish relations E6, Es1, Es2 and the
/// derived relations E7-E10 are added.
pub fn rule_candidates(field: &FieldSpec, p: Option<usize>) -> Result<Vec<RewriteRule>, SkeinError> {
    use Sign::{Minus, Plus};
    let f = field;
    let mut out = vec![];
    // E1: a bracket followed by an inverse bracket is a plain strand
    {
        let mut d = open2(Plus, Minus);
        let b = d.add_vertex(VertexKind::Bracket);
        let c = d.add_vertex(VertexKind::InvBracket);
        d.connect(Port::Boundary(0), Port::Leg(b, 0));
        d.connect(Port::Leg(c, 0), Port::Leg(b, 1));
        d.connect(Port::Leg(c, 1), Port::Boundary(1));
        let mut id = open2(Plus, Minus);
        id.connect(Port::Boundary(0), Port::Boundary(1));
        out.push(rule("E1", single(f, d, 1), single(f, id, 1), None));
        let mut d = open2(Minus, Plus);
        let c = d.add_vertex(VertexKind::InvBracket);
        let b = d.add_vertex(VertexKind::Bracket);
        d.connect(Port::Leg(c, 0), Port::Boundary(0));
        d.connect(Port::Leg(c, 1), Port::Leg(b, 0));
        d.connect(Port::Boundary(1), Port::Leg(b, 1));
        let mut id = open2(Minus, Plus);
        id.connect(Port::Boundary(1), Port::Boundary(0));
        out.push(rule("E1'", single(f, d, 1), single(f, id, 1), None));
    }
    // E2: two dots joined = 0
    {
        let mut d = Diagram::empty();
        let c = d.add_vertex(VertexKind::InvBracket);
        let x = d.add_vertex(VertexKind::Dot);
        let y = d.add_vertex(VertexKind::Dot);
        d.connect(Port::Leg(c, 0), Port::Leg(x, 0));
        d.connect(Port::Leg(c, 1), Port::Leg(y, 0));
        out.push(rule("E2", single(f, d, 1), LinComb::zero(f), None));
    }
    // E3: a circle is 2, with or without a bracket pair on it
    {
        let mut d = Diagram::empty();
        let b = d.add_vertex(VertexKind::Bracket);
        let c = d.add_vertex(VertexKind::InvBracket);
        d.connect(Port::Leg(c, 0), Port::Leg(b, 1));
        d.connect(Port::Leg(c, 1), Port::Leg(b, 0));
        out.push(rule("E3", single(f, d, 1), single(f, Diagram::empty(), 2), None));
        let mut l = Diagram::empty();
        l.free_loops = 1;
        out.push(rule("E3'", single(f, l, 1), single(f, Diagram::empty(), 2), None));
    }
    // E4: reversing a bracket costs a sign
    {
        let mut d = Diagram::with_ground(2);
        let b = d.add_vertex(VertexKind::Bracket);
        d.connect(Port::Boundary(0), Port::Leg(b, 1));
        d.connect(Port::Boundary(1), Port::Leg(b, 0));
        let mut e = Diagram::with_ground(2);
        let b = e.add_vertex(VertexKind::Bracket);
        e.connect(Port::Boundary(0), Port::Leg(b, 0));
        e.connect(Port::Boundary(1), Port::Leg(b, 1));
        out.push(rule("E4", single(f, d, 1), single(f, e, -1), None));
        let mut d = open2(Minus, Minus);
        let c = d.add_vertex(VertexKind::InvBracket);
        d.connect(Port::Leg(c, 1), Port::Boundary(0));
        d.connect(Port::Leg(c, 0), Port::Boundary(1));
        let mut e = open2(Minus, Minus);
        let c = e.add_vertex(VertexKind::InvBracket);
        e.connect(Port::Leg(c, 0), Port::Boundary(0));
        e.connect(Port::Leg(c, 1), Port::Boundary(1));
        out.push(rule("E4'", single(f, d, 1), single(f, e, -1), None));
    }
    // E5: crossing caps resolve into the two planar pairings
    {
        let g = End::G;
        let lhs = [(ChordTerm::new(4, vec![(g(0), g(2)), (g(1), g(3))]), f.one())];
        out.push(rule("E5", chord_lincomb(&lhs, f, 0)?, chord_lincomb(&e5_rule(f), f, 0)?, None));
    }
    let Some(p) = p else { return Ok(out) };
    let suffix = if p == 2 { " (p=2)" } else { "" };
    let cp = Some(p);
    let ident: Vec<usize> = (0..2 * p - 1).collect();
    let mut swap = ident.clone();
    swap.swap(0, 1);
    let cycle: Vec<usize> = (0..2 * p - 1).map(|i| (i + 1) % (2 * p - 1)).collect();
    out.push(rule("Es1", single(f, permuted_jelly(p, &swap), 1), single(f, permuted_jelly(p, &ident), 1), cp));
    out.push(rule("Es2", single(f, permuted_jelly(p, &cycle), 1), single(f, permuted_jelly(p, &ident), 1), cp));
    let rules = SkeinRules::new(f, cp)?;
    for r in [rules.e6.as_ref().unwrap(), rules.e7.as_ref().unwrap()] {
        let lhs = chord_lincomb(&[(r.lhs.clone(), f.one())], f, p)?;
        out.push(rule(&r.name, lhs, chord_lincomb(&r.rhs, f, p)?, cp));
    }
    // E8: a dot under k nested caps, freed
    for k in 1..=2 {
        let mut ch: Vec<(End, End)> = (0..k).map(|j| (End::G(j), End::G(2 * k - j))).collect();
        ch.push((End::G(k), End::S(0)));
        let lhs = ChordTerm::new(2 * k + 1, ch);
        let rhs = LocalBasis::new(2 * k + 1, f, p)?.expand(&lhs, f, p)?;
        out.push(rule(&format!("E8 (k={k})"), chord_lincomb(&[(lhs, f.one())], f, p)?, chord_lincomb(&rhs, f, p)?, cp));
    }
    // E9: a jellyfish with two legs joined is 0
    {
        let mut ch = vec![(End::J(0), End::J(0))];
        ch.extend((0..2 * p - 3).map(|i| (End::G(i), End::J(0))));
        let lhs = ChordTerm::new(2 * p - 3, ch);
        out.push(rule(&format!("E9{suffix}"), chord_lincomb(&[(lhs, f.one())], f, p)?, LinComb::zero(f), cp));
    }
    // E10: jellyfish sharing m >= p strands, legs of the first on the left
    for m in p..2 * p {
        let r = 2 * p - 1 - m;
        let pat: Vec<bool> = (0..2 * r).map(|i| i < r).collect();
        let lr = &rules.e10[&(m, pat)];
        let name = if m == p { format!("E10{suffix}") } else { format!("E10{suffix} (m={m})") };
        let lhs = chord_lincomb(&[(lr.lhs.clone(), f.one())], f, p)?;
        out.push(rule(&name, lhs, chord_lincomb(&lr.rhs, f, p)?, cp));
    }
    Ok(out)
}

/// All relations for the field, verified; fails on the first one that
/// does not hold.
pub fn builtin_rules(field: &FieldSpec, p: Option<usize>) -> Result<Vec<RewriteRule>, SkeinError> {
    let mut rules = rule_candidates(field, p)?;
    for r in &mut rules {
        if !r.verify()? {
            return Err(SkeinError::RuleVerificationFailed(r.name.clone()));
        }
    }
    Ok(rules)
}

// ---------------------------------------------------------------- symmetrizer

/// The symmetrizer on n strands: the average of all permutation diagrams.
pub fn djw(n: usize, field: &FieldSpec) -> Result<LinComb, SkeinError> {
    let fact = crate::exactnum::factorial(n as u64);
    let inv = field.inv(&field.from_bigint(&fact.into())).map_err(|_| SkeinError::FactorialNotInvertible(n))?;
    let mut out = LinComb::zero(field);
    for perm in (0..n).permutations(n) {
        let mut d = Diagram::identity(&vec![Sign::Plus; n]);
        d.edges = (0..n).map(|i| (Port::Boundary(i), Port::Boundary(n + perm[i]))).collect();
        out.push(d, inv.clone());
    }
    Ok(out)
}

/// Matrix of a linear combination of morphisms.
pub fn lincomb_map(x: &LinComb) -> Result<Matrix, SkeinError> {
    let mut acc: Option<Matrix> = None;
    for (d, c) in &x.terms {
        let m = evaluate_map(d, &x.field)?.scale(c);
        acc = Some(match acc {
            None => m,
            Some(a) => a.add(&m).map_err(|_| SkeinError::OracleMismatch)?,
        });
    }
    acc.ok_or(SkeinError::OracleMismatch)
}

/// Trace over the last tensor factor of a map on V^n.
pub fn right_partial_trace(m: &Matrix, field: &FieldSpec) -> Matrix {
    let k = m.row(0).len() / 2;
    let mut out = Matrix::zeros(field, k, k);
    for o in 0..k {
        for i in 0..k {
            let v = field.add(m.get(o << 1, i << 1), m.get((o << 1) | 1, (i << 1) | 1));
            out.set(o, i, v);
        }
    }
    out
}

// ---------------------------------------------------------------- presentation check

#[derive(Debug, Clone)]
pub struct ReportItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub items: Vec<ReportItem>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn push(&mut self, name: String, pass: bool, detail: String) {
        self.items.push(ReportItem { name, pass, detail });
    }
}

/// Relations, pairing certificates, ranks and normalization against the
/// oracle on random circuits.
pub fn verify_presentation(field: &FieldSpec, p: Option<usize>, max_n: usize, seed: u64) -> Report {
    use crate::basisgen::{pairing_from, EvaluatedX};
    use crate::tangle::{from_circuit, random_box_circuit, RandomCircuitOptions};
    use rand::{Rng, SeedableRng};
    let mut rep = Report::default();
    match rule_candidates(field, p) {
        Ok(rules) => {
            for mut r in rules {
                let ok = r.verify();
                rep.push(format!("relation {}", r.name), ok == Ok(true), format!("{ok:?}"));
            }
        }
        Err(e) => rep.push("relations".into(), false, e.to_string()),
    }
    let automaton = match p {
        Some(p) => Automaton::Mp(p),
        None => Automaton::M0,
    };
    for n in 0..=max_n {
        match EvaluatedX::new(n, field, p).map_err(SkeinError::from).and_then(|ev| Ok((pairing_from(&ev)?, ev.matrix().rank()))) {
            Ok((cert, rank)) => {
                let want = crate::wordlang::count(automaton, n) as usize;
                rep.push(format!("rank n={n}"), rank == want, format!("rank {rank}, count {want}"));
                rep.push(format!("pairing n={n} triangular"), cert.is_upper_triangular(), String::new());
                let bad = cert.diagonal_mismatches();
                let detail = bad.iter().take(3).map(|(w, e)| format!("{w}:{}", field.format_elem(e))).join(" ");
                rep.push(format!("pairing n={n} diagonal = {}", field.format_elem(&cert.expected_diagonal)), bad.is_empty(), detail);
            }
            Err(e) => rep.push(format!("pairing n={n}"), false, e.to_string()),
        }
    }
    match SkeinRules::new(field, p) {
        Ok(rules) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let opts = NormalizeOptions::default();
            let (mut ok, total) = (0, 100);
            let mut first_err = String::new();
            for _ in 0..total {
                let n = rng.gen_range(0..=max_n.min(8));
                let ro = RandomCircuitOptions { slices: 6, max_wires: 10, p, max_jellies: 2 };
                let d = match from_circuit(&random_box_circuit(&mut rng, n, &ro)) {
                    Ok(d) => d,
                    Err(e) => {
                        first_err = e.to_string();
                        continue;
                    }
                };
                match rules.normalize(&d, &opts) {
                    Ok(_) => ok += 1,
                    Err(e) if first_err.is_empty() => first_err = e.to_string(),
                    Err(_) => {}
                }
            }
            rep.push("normalize vs oracle".into(), ok == total, format!("{ok}/{total} {first_err}"));
        }
        Err(e) => rep.push("normalize vs oracle".into(), false, e.to_string()),
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangle::{from_circuit, random_box_circuit, RandomCircuitOptions};
    use rand::{Rng, SeedableRng};

    fn fields() -> Vec<(FieldSpec, Option<usize>)> {
        vec![(FieldSpec::rational(), None), (FieldSpec::prime(2).unwrap(), Some(2)), (FieldSpec::prime(3).unwrap(), Some(3))]
    }

    #[test]
    fn strand_simplification_preserves_value() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (f, p) in fields() {
            for _ in 0..60 {
                let n = rng.gen_range(2..7);
                let opts = RandomCircuitOptions { slices: 6, max_wires: 10, p, max_jellies: 2 };
                let d = from_circuit(&random_box_circuit(&mut rng, n, &opts)).unwrap();
                let (t, c) = from_diagram(&d, &f).unwrap();
                let got = t.evaluate(&f, p.unwrap_or(0)).unwrap().scale(&c);
                assert_eq!(got, evaluate(&d, &f).unwrap(), "{t}");
            }
        }
    }

    #[test]
    fn plucker_for_all_end_types() {
        let q = FieldSpec::rational();
        for mask in 0..16u32 {
            // four ends in circle order; sinks are open dots
            let mut ends = vec![];
            let (mut g, mut s) = (0, 0);
            for i in 0..4 {
                if mask >> i & 1 == 1 {
                    ends.push(End::S(s));
                    s += 1;
                } else {
                    ends.push(End::G(g));
                    g += 1;
                }
            }
            let t = |x: usize, y: usize, z: usize, w: usize| ChordTerm::new(g, vec![(ends[x], ends[y]), (ends[z], ends[w])]).evaluate_open(&q, 0).unwrap();
            let lhs = t(0, 2, 1, 3);
            let rhs = t(0, 1, 2, 3).add(&t(0, 3, 1, 2)).unwrap();
            assert_eq!(lhs, rhs, "mask {mask:04b}");
        }
    }

    #[test]
    fn local_rules_build() {
        for p in [2usize, 3, 5] {
            let f = FieldSpec::prime(p as u64).unwrap();
            let r = SkeinRules::new(&f, Some(p)).unwrap();
            let e10 = r.e10.iter().filter(|((m, _), _)| *m == p).count();
            assert_eq!(e10 as u64, num_integer::binomial(2 * (p as u64 - 1), p as u64 - 1));
        }
    }

    #[test]
    fn relations_verify() {
        for (f, p) in fields().into_iter().chain([(FieldSpec::prime(5).unwrap(), Some(5))]) {
            for mut r in rule_candidates(&f, p).unwrap() {
                assert!(r.verify().unwrap(), "{} over {f}", r.name);
            }
        }
    }

    #[test]
    fn snipping_for_p2_is_a_cap() {
        let f = FieldSpec::prime(2).unwrap();
        let r = SkeinRules::new(&f, Some(2)).unwrap();
        let rule = &r.e10[&(2, vec![true, false])];
        assert_eq!(rule.rhs.len(), 1);
        assert_eq!(rule.rhs[0].0.chords, vec![(End::G(0), End::G(1))]);
    }

    #[test]
    fn symmetrizer() {
        for (f, n) in [(FieldSpec::rational(), 3), (FieldSpec::prime(3).unwrap(), 2), (FieldSpec::prime(5).unwrap(), 4)] {
            let m = lincomb_map(&djw(n, &f).unwrap()).unwrap();
            assert_eq!(m.mul(&m).unwrap(), m);
        }
        for p in [3u64, 5] {
            let f = FieldSpec::prime(p).unwrap();
            let m = lincomb_map(&djw(p as usize - 1, &f).unwrap()).unwrap();
            assert!(right_partial_trace(&m, &f).is_zero());
        }
        assert_eq!(djw(3, &FieldSpec::prime(3).unwrap()).unwrap_err(), SkeinError::FactorialNotInvertible(3));
    }

    #[test]
    fn normalize_random_circuits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (f, p) in fields() {
            let rules = SkeinRules::new(&f, p).unwrap();
            let opts = NormalizeOptions { check_each: true, ..Default::default() };
            for _ in 0..80 {
                let n = rng.gen_range(1..8);
                let ro = RandomCircuitOptions { slices: 6, max_wires: 10, p, max_jellies: 2 };
                let d = from_circuit(&random_box_circuit(&mut rng, n, &ro)).unwrap();
                let r = rules.normalize(&d, &opts).unwrap_or_else(|e| panic!("{p:?} {e}: {}", from_diagram(&d, &f).unwrap().0));
                assert!(r.terms.iter().all(|(w, _)| accepts(w).unwrap()));
            }
        }
    }
}
