//! Decorated open graphs: the diagrams of the planar algebra, built from
//! circuits of gates and combined by tensor, composition and flattening.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{Elem, FieldSpec, NumError};
use crate::wordlang::{accepts, Automaton, Letter, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TangleError {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("malformed diagram: {0}")]
    Malformed(String),
    #[error("field mismatch")]
    FieldMismatch,
    #[error("jellyfish needs p, none given")]
    MissingP,
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("bad diagram file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

pub fn parse_signature(s: &str) -> Result<Vec<Sign>, TangleError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '+' => Ok(Sign::Plus),
            '-' | '−' => Ok(Sign::Minus),
            _ => Err(TangleError::Parse(format!("bad boundary sign `{c}`"))),
        })
        .collect()
}

pub fn format_signature(s: &[Sign]) -> String {
    s.iter().map(|x| x.symbol()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKind {
    Dot,
    Bracket,
    InvBracket,
    /// Jellyfish for the given p, with 2p - 1 legs.
    Jelly(usize),
}

impl VertexKind {
    pub fn legs(self) -> usize {
        match self {
            VertexKind::Dot => 1,
            VertexKind::Bracket | VertexKind::InvBracket => 2,
            VertexKind::Jelly(p) => 2 * p - 1,
        }
    }

    pub fn leg_role(self) -> PortRole {
        match self {
            VertexKind::Dot => PortRole::DotLeg,
            VertexKind::Bracket => PortRole::BracketLeg,
            VertexKind::InvBracket => PortRole::InvBracketLeg,
            VertexKind::Jelly(_) => PortRole::JellyLeg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    Boundary(usize),
    Leg(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortRole {
    BoundaryOut,
    BoundaryIn,
    DotLeg,
    JellyLeg,
    BracketLeg,
    InvBracketLeg,
}

impl PortRole {
    pub fn is_source(self) -> bool {
        matches!(self, PortRole::BoundaryOut | PortRole::InvBracketLeg)
    }
}

/// A diagram. Boundary points `0..inputs` are the inputs of the morphism
/// it represents, the rest are outputs; box-space elements have every
/// point an input. Edges are stored as (source, sink).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagram {
    pub boundary: Vec<Sign>,
    pub inputs: usize,
    pub vertices: Vec<VertexKind>,
    pub edges: Vec<(Port, Port)>,
    pub free_loops: usize,
}

impl Diagram {
    pub fn empty() -> Self {
        Diagram { boundary: vec![], inputs: 0, vertices: vec![], edges: vec![], free_loops: 0 }
    }

    /// A box-space diagram with n `+` points and no content yet.
    pub fn with_ground(n: usize) -> Self {
        Diagram { boundary: vec![Sign::Plus; n], inputs: n, vertices: vec![], edges: vec![], free_loops: 0 }
    }

    pub fn outputs(&self) -> usize {
        self.boundary.len() - self.inputs
    }

    pub fn add_vertex(&mut self, k: VertexKind) -> usize {
        self.vertices.push(k);
        self.vertices.len() - 1
    }

    pub fn connect(&mut self, source: Port, sink: Port) {
        self.edges.push((source, sink));
    }

    pub fn role(&self, port: Port) -> PortRole {
        match port {
            Port::Boundary(i) => match self.boundary[i] {
                Sign::Plus => PortRole::BoundaryOut,
                Sign::Minus => PortRole::BoundaryIn,
            },
            Port::Leg(v, _) => self.vertices[v].leg_role(),
        }
    }

    pub fn count_kind(&self, pred: impl Fn(VertexKind) -> bool) -> usize {
        self.vertices.iter().filter(|&&k| pred(k)).count()
    }

    pub fn jelly_count(&self) -> usize {
        self.count_kind(|k| matches!(k, VertexKind::Jelly(_)))
    }

    /// Checks the port pairing and the source/sink rule.
    pub fn validate(&self) -> Result<(), TangleError> {
        let mut seen: BTreeMap<Port, usize> = BTreeMap::new();
        for &(s, t) in &self.edges {
            for port in [s, t] {
                match port {
                    Port::Boundary(i) if i >= self.boundary.len() => {
                        return Err(TangleError::Malformed(format!("boundary point {i} out of range")))
                    }
                    Port::Leg(v, l) if v >= self.vertices.len() || l >= self.vertices[v].legs() => {
                        return Err(TangleError::Malformed(format!("no port {v}.{l}")))
                    }
                    _ => {}
                }
                *seen.entry(port).or_insert(0) += 1;
            }
            if !self.role(s).is_source() || self.role(t).is_source() {
                return Err(TangleError::Malformed(format!("edge {s:?} -> {t:?} breaks the source/sink rule")));
            }
        }
        let total = self.boundary.len() + self.vertices.iter().map(|k| k.legs()).sum::<usize>();
        if seen.len() != total || seen.values().any(|&c| c != 1) {
            return Err(TangleError::Malformed("ports are not perfectly paired".into()));
        }
        if self.inputs > self.boundary.len() {
            return Err(TangleError::Malformed("more inputs than boundary points".into()));
        }
        Ok(())
    }

    /// Object type of a boundary point: true when a copy of V (rather
    /// than V*) passes through it.
    fn carries_v(&self, i: usize) -> bool {
        (i < self.inputs) == (self.boundary[i] == Sign::Plus)
    }

    pub fn input_types(&self) -> Vec<bool> {
        (0..self.inputs).map(|i| self.carries_v(i)).collect()
    }

    pub fn output_types(&self) -> Vec<bool> {
        (self.inputs..self.boundary.len()).map(|i| self.carries_v(i)).collect()
    }

    /// Identity morphism on the given signature of inputs.
    pub fn identity(sig: &[Sign]) -> Self {
        let n = sig.len();
        let mut boundary = sig.to_vec();
        boundary.extend(sig.iter().map(|s| s.flip()));
        let mut d = Diagram { boundary, inputs: n, vertices: vec![], edges: vec![], free_loops: 0 };
        for (i, s) in sig.iter().enumerate() {
            match s {
                Sign::Plus => d.connect(Port::Boundary(i), Port::Boundary(n + i)),
                Sign::Minus => d.connect(Port::Boundary(n + i), Port::Boundary(i)),
            }
        }
        d
    }

    fn shifted(&self, vshift: usize, bmap: &dyn Fn(usize) -> usize) -> Vec<(Port, Port)> {
        let m = |p: Port| match p {
            Port::Boundary(i) => Port::Boundary(bmap(i)),
            Port::Leg(v, l) => Port::Leg(v + vshift, l),
        };
        self.edges.iter().map(|&(s, t)| (m(s), m(t))).collect()
    }

    /// Side-by-side placement; inputs and outputs are concatenated separately.
    pub fn tensor(&self, other: &Diagram) -> Diagram {
        let (ai, ao, bi) = (self.inputs, self.outputs(), other.inputs);
        let mut boundary = self.boundary[..ai].to_vec();
        boundary.extend_from_slice(&other.boundary[..bi]);
        boundary.extend_from_slice(&self.boundary[ai..]);
        boundary.extend_from_slice(&other.boundary[bi..]);
        let amap = |i: usize| if i < ai { i } else { i + bi };
        let bmap = |i: usize| if i < bi { ai + i } else { ai + ao + i };
        let mut edges = self.shifted(0, &amap);
        edges.extend(other.shifted(self.vertices.len(), &bmap));
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        Diagram { boundary, inputs: ai + bi, vertices, edges, free_loops: self.free_loops + other.free_loops }
    }

    /// `top ∘ bottom`: the outputs of `bottom` are glued to the inputs of `top`.
    pub fn compose(top: &Diagram, bottom: &Diagram) -> Result<Diagram, TangleError> {
        if bottom.output_types() != top.input_types() {
            return Err(TangleError::SignatureMismatch(format!(
                "bottom outputs {} vs top inputs {}",
                format_signature(&bottom.boundary[bottom.inputs..]),
                format_signature(&top.boundary[..top.inputs])
            )));
        }
        let (bi, bo, to) = (bottom.inputs, bottom.outputs(), top.outputs());
        // temporary numbering: [bottom inputs | top outputs | glue points]
        let glue = bi + to;
        let bmap = |i: usize| if i < bi { i } else { glue + (i - bi) };
        let tmap = |i: usize| if i < top.inputs { glue + i } else { bi + (i - top.inputs) };
        let mut edges = bottom.shifted(0, &bmap);
        edges.extend(top.shifted(bottom.vertices.len(), &tmap));
        let (edges, loops) = splice(edges, |p| matches!(p, Port::Boundary(i) if i >= glue));
        let mut boundary = bottom.boundary[..bi].to_vec();
        boundary.extend_from_slice(&top.boundary[top.inputs..]);
        let mut vertices = bottom.vertices.clone();
        vertices.extend_from_slice(&top.vertices);
        let _ = bo;
        Ok(Diagram {
            boundary,
            inputs: bi,
            vertices,
            edges,
            free_loops: bottom.free_loops + top.free_loops + loops,
        })
    }

    /// Turns every output into an input: outputs carrying V are bent
    /// through a bracket, the others are relabelled. Outputs are bent down
    /// around the right side, so their order is reversed.
    pub fn flatten(&self) -> Diagram {
        let mut d = self.clone();
        let n = self.boundary.len();
        for i in self.inputs..n {
            if self.boundary[i] == Sign::Minus {
                let b = d.add_vertex(VertexKind::Bracket);
                let pos = d.edges.iter().position(|&(_, t)| t == Port::Boundary(i)).expect("paired port");
                let (src, _) = d.edges[pos];
                d.edges[pos] = (src, Port::Leg(b, 0));
                d.connect(Port::Boundary(i), Port::Leg(b, 1));
                d.boundary[i] = Sign::Plus;
            }
        }
        let (k, flip) = (self.inputs, |i: usize| if i < self.inputs { i } else { self.inputs + n - 1 - i });
        d.boundary[k..].reverse();
        for e in &mut d.edges {
            for port in [&mut e.0, &mut e.1] {
                if let Port::Boundary(i) = *port {
                    *port = Port::Boundary(flip(i));
                }
            }
        }
        d.edges.sort();
        d.inputs = n;
        d
    }

    /// Strand decomposition: maximal paths through bracket and inverse
    /// bracket vertices, plus closed cycles of such vertices.
    pub fn strands(&self) -> Vec<Strand> {
        let mut partner: BTreeMap<Port, Port> = BTreeMap::new();
        for &(s, t) in &self.edges {
            partner.insert(s, t);
            partner.insert(t, s);
        }
        let is_pass = |p: Port| {
            matches!(p, Port::Leg(v, _) if matches!(self.vertices[v], VertexKind::Bracket | VertexKind::InvBracket))
        };
        let mut used: BTreeMap<Port, bool> = BTreeMap::new();
        let mut out = vec![];
        let walk = |start: Port, used: &mut BTreeMap<Port, bool>| -> Strand {
            let mut passes = vec![];
            let mut cur = start;
            used.insert(cur, true);
            loop {
                let nxt = partner[&cur];
                used.insert(nxt, true);
                if !is_pass(nxt) {
                    return Strand { a: start, b: nxt, passes, closed: false };
                }
                let Port::Leg(v, l) = nxt else { unreachable!() };
                passes.push(PassVertex { vertex: v, kind: self.vertices[v], entered_leg: l });
                cur = Port::Leg(v, 1 - l);
                used.insert(cur, true);
            }
        };
        let terminals: Vec<Port> = partner.keys().copied().filter(|&p| !is_pass(p)).collect();
        for t in terminals {
            if used.contains_key(&t) {
                continue;
            }
            out.push(walk(t, &mut used));
        }
        // what remains are closed cycles of pass-through vertices
        for (v, k) in self.vertices.iter().enumerate() {
            if !matches!(k, VertexKind::Bracket | VertexKind::InvBracket) || used.contains_key(&Port::Leg(v, 0)) {
                continue;
            }
            let mut passes = vec![PassVertex { vertex: v, kind: *k, entered_leg: 0 }];
            used.insert(Port::Leg(v, 0), true);
            used.insert(Port::Leg(v, 1), true);
            let mut cur = Port::Leg(v, 1);
            loop {
                let Port::Leg(u, l) = partner[&cur] else { unreachable!() };
                if u == v {
                    break;
                }
                used.insert(Port::Leg(u, 0), true);
                used.insert(Port::Leg(u, 1), true);
                passes.push(PassVertex { vertex: u, kind: self.vertices[u], entered_leg: l });
                cur = Port::Leg(u, 1 - l);
            }
            out.push(Strand { a: Port::Leg(v, 0), b: Port::Leg(v, 0), passes, closed: true });
        }
        out
    }

    /// Deterministic textual summary used by the CLI and in tests.
    pub fn summary(&self) -> String {
        format!(
            "boundary={} inputs={} vertices={:?} edges={} loops={}",
            format_signature(&self.boundary),
            self.inputs,
            self.vertices,
            self.edges.len(),
            self.free_loops
        )
    }
}

/// Removes the junction ports from a set of edges by joining the two
/// edges meeting at each junction; returns the new edges and the number
/// of closed loops formed.
pub(crate) fn splice(edges: Vec<(Port, Port)>, is_junction: impl Fn(Port) -> bool) -> (Vec<(Port, Port)>, usize) {
    // each junction appears exactly once as a sink and once as a source
    let mut by_source: BTreeMap<Port, usize> = BTreeMap::new();
    for (i, &(s, _)) in edges.iter().enumerate() {
        if is_junction(s) {
            by_source.insert(s, i);
        }
    }
    let mut done = vec![false; edges.len()];
    let mut out = vec![];
    let mut loops = 0;
    for i in 0..edges.len() {
        if done[i] || is_junction(edges[i].0) {
            continue;
        }
        // walk forward from a genuine source
        let src = edges[i].0;
        let mut j = i;
        loop {
            done[j] = true;
            let t = edges[j].1;
            if is_junction(t) {
                j = by_source[&t];
            } else {
                out.push((src, t));
                break;
            }
        }
    }
    // leftover edges form cycles through junctions only
    for i in 0..edges.len() {
        if done[i] {
            continue;
        }
        let mut j = i;
        while !done[j] {
            done[j] = true;
            j = by_source[&edges[j].1];
        }
        loops += 1;
    }
    (out, loops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassVertex {
    pub vertex: usize,
    pub kind: VertexKind,
    /// The leg through which the walk entered the vertex.
    pub entered_leg: usize,
}

/// A strand from terminal port `a` to terminal port `b` (boundary points,
/// dot legs or jellyfish legs) through bracket/inverse-bracket vertices.
/// Closed strands have no terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strand {
    pub a: Port,
    pub b: Port,
    pub passes: Vec<PassVertex>,
    pub closed: bool,
}

// ---------------------------------------------------------------- circuits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    IdPlus,
    IdMinus,
    Cap,
    CapPrime,
    Cup,
    CupPrime,
    Dot,
    Bracket,
    InvBracket,
    Swap,
    Jelly(usize),
}

impl Gate {
    pub const ALL_NAMES: [&'static str; 11] =
        ["id+", "id-", "cap", "cap'", "cup", "cup'", "dot", "bracket", "invbracket", "swap", "jelly"];

    pub fn parse(name: &str, p: Option<usize>) -> Result<Gate, TangleError> {
        let n = name.trim().replace('′', "'").replace('−', "-");
        Ok(match n.as_str() {
            "id+" => Gate::IdPlus,
            "id-" => Gate::IdMinus,
            "cap" => Gate::Cap,
            "cap'" => Gate::CapPrime,
            "cup" => Gate::Cup,
            "cup'" => Gate::CupPrime,
            "dot" => Gate::Dot,
            "bracket" => Gate::Bracket,
            "invbracket" => Gate::InvBracket,
            "swap" => Gate::Swap,
            "jelly" => Gate::Jelly(p.ok_or(TangleError::MissingP)?),
            other => {
                if let Some(inner) = other.strip_prefix("jelly(").and_then(|r| r.strip_suffix(')')) {
                    let q: usize = inner.parse().map_err(|_| TangleError::UnknownGate(other.into()))?;
                    if q < 2 {
                        return Err(TangleError::UnknownGate(other.into()));
                    }
                    Gate::Jelly(q)
                } else {
                    return Err(TangleError::UnknownGate(other.into()));
                }
            }
        })
    }

    pub fn name(self) -> String {
        match self {
            Gate::IdPlus => "id+".into(),
            Gate::IdMinus => "id-".into(),
            Gate::Cap => "cap".into(),
            Gate::CapPrime => "cap'".into(),
            Gate::Cup => "cup".into(),
            Gate::CupPrime => "cup'".into(),
            Gate::Dot => "dot".into(),
            Gate::Bracket => "bracket".into(),
            Gate::InvBracket => "invbracket".into(),
            Gate::Swap => "swap".into(),
            Gate::Jelly(p) => format!("jelly({p})"),
        }
    }

    /// Input wires consumed; `None` for swap, which takes any two wires.
    pub fn inputs(self) -> Option<Vec<Sign>> {
        use Sign::*;
        Some(match self {
            Gate::IdPlus => vec![Plus],
            Gate::IdMinus => vec![Minus],
            Gate::Cap => vec![Plus, Minus],
            Gate::CapPrime => vec![Minus, Plus],
            Gate::Cup | Gate::CupPrime | Gate::InvBracket => vec![],
            Gate::Dot => vec![Plus],
            Gate::Bracket => vec![Plus, Plus],
            Gate::Swap => return None,
            Gate::Jelly(p) => vec![Plus; 2 * p - 1],
        })
    }

    pub fn arity(self) -> usize {
        self.inputs().map_or(2, |v| v.len())
    }

    pub fn help_table() -> String {
        let rows = [
            ("id+", "+", "+", "plain strand"),
            ("id-", "-", "-", "plain strand, reversed"),
            ("cap", "+ -", "", "joins two wires"),
            ("cap'", "- +", "", "joins two wires"),
            ("cup", "", "+ -", "creates a strand"),
            ("cup'", "", "- +", "creates a strand"),
            ("dot", "+", "", "dot vertex"),
            ("bracket", "+ +", "", "bracket vertex, legs left then right"),
            ("invbracket", "", "+ +", "inverse bracket vertex"),
            ("swap", "a b", "b a", "crossing (connectivity only)"),
            ("jelly", "+ x (2p-1)", "", "jellyfish; p from the file or jelly(p)"),
        ];
        let mut s = String::from("gate        in          out    \n");
        for (g, i, o, d) in rows {
            s.push_str(&format!("{g:<11} {i:<11} {o:<6} {d}\n"));
        }
        s
    }
}

/// A circuit: starting wires (the boundary) and slices of gates applied
/// top to bottom. Wires left at the bottom become output points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub boundary: Vec<Sign>,
    pub slices: Vec<Vec<Gate>>,
}

/// Piece of strand under construction in `from_circuit`.
#[derive(Debug, Clone, Default)]
struct Piece {
    source: Option<Port>,
    sink: Option<Port>,
}

struct Pieces {
    parent: Vec<usize>,
    data: Vec<Piece>,
}

impl Pieces {
    fn new() -> Self {
        Pieces { parent: vec![], data: vec![] }
    }
    fn make(&mut self, source: Option<Port>, sink: Option<Port>) -> usize {
        self.parent.push(self.parent.len());
        self.data.push(Piece { source, sink });
        self.parent.len() - 1
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    /// Merges two pieces; returns true if they were already one (a loop closed).
    fn join(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        self.parent[rb] = ra;
        let pb = std::mem::take(&mut self.data[rb]);
        let pa = &mut self.data[ra];
        pa.source = pa.source.or(pb.source);
        pa.sink = pa.sink.or(pb.sink);
        false
    }
    fn set_sink(&mut self, a: usize, port: Port) {
        let r = self.find(a);
        self.data[r].sink = Some(port);
    }
}

pub fn from_circuit(spec: &CircuitSpec) -> Result<Diagram, TangleError> {
    let mut d = Diagram { boundary: spec.boundary.clone(), inputs: spec.boundary.len(), ..Diagram::empty() };
    let mut pieces = Pieces::new();
    // frontier: (sign, piece)
    let mut wires: Vec<(Sign, usize)> = spec
        .boundary
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let pc = match s {
                Sign::Plus => pieces.make(Some(Port::Boundary(i)), None),
                Sign::Minus => pieces.make(None, Some(Port::Boundary(i))),
            };
            (s, pc)
        })
        .collect();
    for (si, slice) in spec.slices.iter().enumerate() {
        let need: usize = slice.iter().map(|g| g.arity()).sum();
        if need != wires.len() {
            return Err(TangleError::SignatureMismatch(format!(
                "slice {si} consumes {need} wires but {} are present",
                wires.len()
            )));
        }
        let mut next = vec![];
        let mut pos = 0;
        for &g in slice {
            let k = g.arity();
            let ins = &wires[pos..pos + k];
            pos += k;
            if let Some(sig) = g.inputs() {
                let got: Vec<Sign> = ins.iter().map(|w| w.0).collect();
                if got != sig {
                    return Err(TangleError::SignatureMismatch(format!(
                        "slice {si}: gate {} expects {} but wires are {}",
                        g.name(),
                        format_signature(&sig),
                        format_signature(&got)
                    )));
                }
            }
            match g {
                Gate::IdPlus | Gate::IdMinus => next.push(ins[0]),
                Gate::Swap => {
                    next.push(ins[1]);
                    next.push(ins[0]);
                }
                Gate::Cap | Gate::CapPrime => {
                    if pieces.join(ins[0].1, ins[1].1) {
                        d.free_loops += 1;
                    }
                }
                Gate::Cup => {
                    let pc = pieces.make(None, None);
                    next.push((Sign::Plus, pc));
                    next.push((Sign::Minus, pc));
                }
                Gate::CupPrime => {
                    let pc = pieces.make(None, None);
                    next.push((Sign::Minus, pc));
                    next.push((Sign::Plus, pc));
                }
                Gate::Dot | Gate::Bracket | Gate::Jelly(_) => {
                    let kind = match g {
                        Gate::Dot => VertexKind::Dot,
                        Gate::Bracket => VertexKind::Bracket,
                        Gate::Jelly(p) => VertexKind::Jelly(p),
                        _ => unreachable!(),
                    };
                    let v = d.add_vertex(kind);
                    for (l, w) in ins.iter().enumerate() {
                        pieces.set_sink(w.1, Port::Leg(v, l));
                    }
                }
                Gate::InvBracket => {
                    let v = d.add_vertex(VertexKind::InvBracket);
                    next.push((Sign::Plus, pieces.make(Some(Port::Leg(v, 0)), None)));
                    next.push((Sign::Plus, pieces.make(Some(Port::Leg(v, 1)), None)));
                }
            }
        }
        wires = next;
    }
    // leftover wires become output points
    for (s, pc) in wires {
        let i = d.boundary.len();
        d.boundary.push(s.flip());
        match s {
            Sign::Plus => pieces.set_sink(pc, Port::Boundary(i)),
            Sign::Minus => {
                let r = pieces.find(pc);
                pieces.data[r].source = Some(Port::Boundary(i));
            }
        }
    }
    let n = pieces.parent.len();
    for x in 0..n {
        if pieces.find(x) != x {
            continue;
        }
        match (pieces.data[x].source, pieces.data[x].sink) {
            (Some(s), Some(t)) => d.connect(s, t),
            (None, None) => {}
            _ => return Err(TangleError::Malformed("dangling strand".into())),
        }
    }
    d.edges.sort();
    d.validate()?;
    Ok(d)
}

// ---------------------------------------------------------------- files

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiagramFile {
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    pub boundary: String,
    pub slices: Vec<Vec<String>>,
}

impl DiagramFile {
    pub fn parse(text: &str) -> Result<DiagramFile, TangleError> {
        serde_json::from_str(text).map_err(|e| TangleError::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn field_spec(&self) -> Result<FieldSpec, TangleError> {
        Ok(self.field.parse()?)
    }

    pub fn circuit(&self) -> Result<CircuitSpec, TangleError> {
        let boundary = parse_signature(&self.boundary)?;
        let slices = self
            .slices
            .iter()
            .map(|s| s.iter().map(|g| Gate::parse(g, self.p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CircuitSpec { boundary, slices })
    }

    pub fn from_circuit_spec(field: &FieldSpec, p: Option<usize>, c: &CircuitSpec) -> DiagramFile {
        DiagramFile {
            field: field.to_string(),
            p,
            boundary: format_signature(&c.boundary),
            slices: c.slices.iter().map(|s| s.iter().map(|g| g.name()).collect()).collect(),
        }
    }
}

// ---------------------------------------------------------------- linear combinations

/// Formal linear combination of diagrams sharing one boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinComb {
    pub field: FieldSpec,
    pub terms: Vec<(Diagram, Elem)>,
}

impl LinComb {
    pub fn zero(field: &FieldSpec) -> Self {
        LinComb { field: field.clone(), terms: vec![] }
    }

    pub fn single(field: &FieldSpec, d: Diagram) -> Self {
        LinComb { field: field.clone(), terms: vec![(d, field.one())] }
    }

    pub fn push(&mut self, d: Diagram, c: Elem) {
        if c.is_zero() {
            return;
        }
        if let Some(slot) = self.terms.iter_mut().find(|(e, _)| *e == d) {
            slot.1 = self.field.add(&slot.1, &c);
        } else {
            self.terms.push((d, c));
        }
        self.terms.retain(|(_, c)| !c.is_zero());
    }

    pub fn add(&self, other: &LinComb) -> Result<LinComb, TangleError> {
        if self.field != other.field {
            return Err(TangleError::FieldMismatch);
        }
        let mut out = self.clone();
        for (d, c) in &other.terms {
            out.push(d.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Elem) -> LinComb {
        let mut out = LinComb::zero(&self.field);
        for (d, c) in &self.terms {
            out.push(d.clone(), self.field.mul(c, s));
        }
        out
    }

    pub fn tensor(&self, other: &LinComb) -> Result<LinComb, TangleError> {
        if self.field != other.field {
            return Err(TangleError::FieldMismatch);
        }
        let mut out = LinComb::zero(&self.field);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.push(a.tensor(b), self.field.mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn compose(top: &LinComb, bottom: &LinComb) -> Result<LinComb, TangleError> {
        if top.field != bottom.field {
            return Err(TangleError::FieldMismatch);
        }
        let mut out = LinComb::zero(&top.field);
        for (a, ca) in &top.terms {
            for (b, cb) in &bottom.terms {
                out.push(Diagram::compose(a, b)?, top.field.mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(&Diagram) -> Diagram) -> LinComb {
        let mut out = LinComb::zero(&self.field);
        for (d, c) in &self.terms {
            out.push(f(d), c.clone());
        }
        out
    }
}

// ---------------------------------------------------------------- normal forms

/// End of a strand in a normal-form diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormalEnd {
    Ground(usize),
    /// Jellyfish numbered by the position of its middle leg.
    Jelly(usize),
    Dot,
}

/// Strand of a normal-form diagram: ends in stored order (for brackets:
/// leg 0 then leg 1) and the kind of the single vertex on it, if any.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalStrand {
    pub ends: (NormalEnd, NormalEnd),
    pub vertex: Option<VertexKind>,
}

/// Builds the jellyfish-basis diagram of a plateau word (N0 or Np).
pub fn gamma_diagram(w: &Word) -> Result<Diagram, TangleError> {
    if !accepts(w).map_err(|e| TangleError::Malformed(e.to_string()))? || w.automaton.is_mountain() {
        return Err(TangleError::Malformed(format!("`{w}` is not an accepted plateau word")));
    }
    let p = match w.automaton {
        Automaton::Np(p) => p,
        _ => 0,
    };
    let n = w.len();
    let mut d = Diagram::with_ground(n);
    #[derive(Clone, Copy)]
    enum Item {
        Ground(usize),
        Slot(usize, usize),
    }
    let mut stack: Vec<Item> = vec![];
    for (i, &l) in w.letters.iter().enumerate() {
        match l {
            Letter::Dot => {
                let v = d.add_vertex(VertexKind::Dot);
                d.connect(Port::Boundary(i), Port::Leg(v, 0));
            }
            Letter::Open => stack.push(Item::Ground(i)),
            Letter::Close => match stack.pop().expect("accepted word") {
                Item::Ground(j) => {
                    let b = d.add_vertex(VertexKind::Bracket);
                    d.connect(Port::Boundary(j), Port::Leg(b, 0));
                    d.connect(Port::Boundary(i), Port::Leg(b, 1));
                }
                Item::Slot(v, leg) => d.connect(Port::Boundary(i), Port::Leg(v, leg)),
            },
            Letter::Star => {
                let v = d.add_vertex(VertexKind::Jelly(p));
                let mut left = vec![];
                for _ in 0..p - 1 {
                    left.push(stack.pop().expect("accepted word"));
                }
                left.reverse();
                for (leg, item) in left.into_iter().enumerate() {
                    match item {
                        Item::Ground(j) => d.connect(Port::Boundary(j), Port::Leg(v, leg)),
                        Item::Slot(u, ul) => {
                            let c = d.add_vertex(VertexKind::InvBracket);
                            d.connect(Port::Leg(c, 0), Port::Leg(u, ul));
                            d.connect(Port::Leg(c, 1), Port::Leg(v, leg));
                        }
                    }
                }
                d.connect(Port::Boundary(i), Port::Leg(v, p - 1));
                // right legs are popped last-first, so push them in reverse
                for leg in (p..2 * p - 1).rev() {
                    stack.push(Item::Slot(v, leg));
                }
            }
            _ => unreachable!(),
        }
    }
    d.edges.sort();
    Ok(d)
}

/// Recognized structure of a diagram whose strands each carry at most one
/// vertex and whose jellyfish are named by a chosen middle leg.
fn normal_structure(d: &Diagram, middle_of: &BTreeMap<usize, usize>) -> Option<Vec<NormalStrand>> {
    let end = |port: Port| -> Option<NormalEnd> {
        match port {
            Port::Boundary(i) => Some(NormalEnd::Ground(i)),
            Port::Leg(v, _) => match d.vertices[v] {
                VertexKind::Dot => Some(NormalEnd::Dot),
                VertexKind::Jelly(_) => middle_of.get(&v).map(|&m| NormalEnd::Jelly(m)),
                _ => None,
            },
        }
    };
    let mut out = vec![];
    for s in d.strands() {
        if s.closed || s.passes.len() > 1 {
            return None;
        }
        let (mut a, mut b) = (end(s.a)?, end(s.b)?);
        let vertex = s.passes.first().map(|pv| pv.kind);
        if let Some(pv) = s.passes.first() {
            // the walk entered from the `a` side through `entered_leg`
            if pv.entered_leg == 1 {
                std::mem::swap(&mut a, &mut b);
            }
        } else if b < a {
            std::mem::swap(&mut a, &mut b);
        }
        out.push(NormalStrand { ends: (a, b), vertex });
    }
    out.sort();
    Some(out)
}

/// Reads a normal-form diagram back as a plateau word. `p` selects the
/// char-p language; None means characteristic 0.
pub fn recognize_basis_word(d: &Diagram, p: Option<usize>) -> Option<Word> {
    if d.inputs != d.boundary.len() || d.boundary.iter().any(|&s| s != Sign::Plus) || d.free_loops != 0 {
        return None;
    }
    let automaton = match p {
        Some(p) => Automaton::Np(p),
        None => Automaton::N0,
    };
    let jellies: Vec<usize> = (0..d.vertices.len()).filter(|&v| matches!(d.vertices[v], VertexKind::Jelly(_))).collect();
    if p.is_none() && !jellies.is_empty() {
        return None;
    }
    if jellies.iter().any(|&v| Some(d.vertices[v]) != p.map(VertexKind::Jelly)) {
        return None;
    }
    // ground legs of each jellyfish
    let mut ground_legs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(s, t) in &d.edges {
        if let (Port::Boundary(i), Port::Leg(v, _)) = (s, t) {
            if matches!(d.vertices[v], VertexKind::Jelly(_)) {
                ground_legs.entry(v).or_default().push(i);
            }
        }
    }
    if jellies.iter().any(|v| !ground_legs.contains_key(v)) {
        return None;
    }
    for g in ground_legs.values_mut() {
        g.sort();
    }
    // letters not involving jellyfish
    let n = d.boundary.len();
    let mut base = vec![None; n];
    for s in d.strands() {
        if s.closed {
            return None;
        }
        for (x, y) in [(s.a, s.b), (s.b, s.a)] {
            if let Port::Boundary(i) = x {
                base[i] = match y {
                    Port::Boundary(j) if j > i => Some(Letter::Open),
                    Port::Boundary(_) => Some(Letter::Close),
                    Port::Leg(v, _) if d.vertices[v] == VertexKind::Dot => Some(Letter::Dot),
                    _ => None,
                };
            }
        }
    }
    // try every choice of middle leg
    let choices: Vec<&Vec<usize>> = jellies.iter().map(|v| &ground_legs[v]).collect();
    let mut idx = vec![0usize; jellies.len()];
    loop {
        let mut letters = base.clone();
        let mut middle_of = BTreeMap::new();
        for (k, &v) in jellies.iter().enumerate() {
            let m = choices[k][idx[k]];
            middle_of.insert(v, m);
            for &g in choices[k] {
                letters[g] = Some(match g.cmp(&m) {
                    std::cmp::Ordering::Less => Letter::Open,
                    std::cmp::Ordering::Equal => Letter::Star,
                    std::cmp::Ordering::Greater => Letter::Close,
                });
            }
        }
        if let Some(letters) = letters.into_iter().collect::<Option<Vec<Letter>>>() {
            let w = Word { automaton, letters };
            if accepts(&w).unwrap_or(false) {
                let g = gamma_diagram(&w).ok()?;
                let gmid: BTreeMap<usize, usize> = g
                    .edges
                    .iter()
                    .filter_map(|&(s, t)| match (s, t) {
                        (Port::Boundary(i), Port::Leg(v, l)) if l == p.unwrap_or(1) - 1 && matches!(g.vertices[v], VertexKind::Jelly(_)) => Some((v, i)),
                        _ => None,
                    })
                    .collect();
                if normal_structure(&g, &gmid).is_some() && normal_structure(&g, &gmid) == normal_structure(d, &middle_of) {
                    return Some(w);
                }
            }
        }
        // advance the odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                return None;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------- random circuits

/// Knobs for random circuit generation.
#[derive(Debug, Clone)]
pub struct RandomCircuitOptions {
    pub slices: usize,
    pub max_wires: usize,
    /// Jellyfish gates are allowed when set.
    pub p: Option<usize>,
    pub max_jellies: usize,
}

impl Default for RandomCircuitOptions {
    fn default() -> Self {
        RandomCircuitOptions { slices: 6, max_wires: 10, p: None, max_jellies: 2 }
    }
}

struct Builder {
    wires: Vec<Sign>,
    slices: Vec<Vec<Gate>>,
}

impl Builder {
    fn push(&mut self, slice: Vec<Gate>) {
        let mut next = vec![];
        let mut pos = 0;
        for &g in &slice {
            let k = g.arity();
            let ins = &self.wires[pos..pos + k];
            pos += k;
            match g {
                Gate::IdPlus | Gate::IdMinus => next.push(ins[0]),
                Gate::Swap => {
                    next.push(ins[1]);
                    next.push(ins[0]);
                }
                Gate::Cup => next.extend([Sign::Plus, Sign::Minus]),
                Gate::CupPrime => next.extend([Sign::Minus, Sign::Plus]),
                Gate::InvBracket => next.extend([Sign::Plus, Sign::Plus]),
                _ => {}
            }
        }
        assert_eq!(pos, self.wires.len(), "slice must cover every wire");
        self.wires = next;
        self.slices.push(slice);
    }

    fn id(s: Sign) -> Gate {
        match s {
            Sign::Plus => Gate::IdPlus,
            Sign::Minus => Gate::IdMinus,
        }
    }

    /// Slice applying `gates` to the wires starting at `pos`, identity elsewhere.
    fn at(&mut self, pos: usize, gates: Vec<Gate>) {
        let used: usize = gates.iter().map(|g| g.arity()).sum();
        let mut slice: Vec<Gate> = self.wires[..pos].iter().map(|&s| Self::id(s)).collect();
        slice.extend(gates);
        slice.extend(self.wires[pos + used..].iter().map(|&s| Self::id(s)));
        self.push(slice);
    }

    /// Removes the wire at `pos`.
    fn close(&mut self, pos: usize) {
        match self.wires[pos] {
            Sign::Plus => self.at(pos, vec![Gate::Dot]),
            Sign::Minus => {
                self.at(pos + 1, vec![Gate::InvBracket]);
                self.at(pos, vec![Gate::CapPrime, Gate::IdPlus]);
                self.at(pos, vec![Gate::Dot]);
            }
        }
    }

    /// Appends a fresh wire of the given sign at the right end.
    fn open(&mut self, s: Sign) {
        let end = self.wires.len();
        match s {
            Sign::Plus => {
                self.at(end, vec![Gate::InvBracket]);
                self.at(end, vec![Gate::Dot, Gate::IdPlus]);
            }
            Sign::Minus => {
                self.at(end, vec![Gate::Cup]);
                self.at(end, vec![Gate::Dot, Gate::IdMinus]);
            }
        }
    }
}

/// Random circuit from `top` wires to `bottom` wires.
pub fn random_circuit<R: rand::Rng>(rng: &mut R, top: &[Sign], bottom: &[Sign], opts: &RandomCircuitOptions) -> CircuitSpec {
    let mut b = Builder { wires: top.to_vec(), slices: vec![] };
    let mut jellies = 0;
    for _ in 0..opts.slices {
        let mut slice = vec![];
        let mut i = 0;
        let mut count = b.wires.len();
        let w = b.wires.clone();
        while i <= w.len() {
            // zero-input gates may be inserted anywhere
            if count + 2 <= opts.max_wires && rng.gen_bool(0.15) {
                slice.push(match rng.gen_range(0..3) {
                    0 => Gate::Cup,
                    1 => Gate::CupPrime,
                    _ => Gate::InvBracket,
                });
                count += 2;
            }
            if i == w.len() {
                break;
            }
            if let Some(p) = opts.p {
                let k = 2 * p - 1;
                if jellies < opts.max_jellies
                    && i + k <= w.len()
                    && w[i..i + k].iter().all(|&s| s == Sign::Plus)
                    && rng.gen_bool(0.5)
                {
                    slice.push(Gate::Jelly(p));
                    jellies += 1;
                    i += k;
                    count -= k;
                    continue;
                }
            }
            let r: f64 = rng.gen();
            let pair = i + 1 < w.len();
            if pair && r < 0.25 {
                slice.push(Gate::Swap);
                i += 2;
            } else if pair && r < 0.37 && w[i] != w[i + 1] {
                slice.push(if w[i] == Sign::Plus { Gate::Cap } else { Gate::CapPrime });
                i += 2;
                count -= 2;
            } else if pair && r < 0.47 && w[i] == Sign::Plus && w[i + 1] == Sign::Plus {
                slice.push(Gate::Bracket);
                i += 2;
                count -= 2;
            } else if r < 0.52 && w[i] == Sign::Plus {
                slice.push(Gate::Dot);
                i += 1;
                count -= 1;
            } else {
                slice.push(Builder::id(w[i]));
                i += 1;
            }
        }
        b.push(slice);
    }
    // match surviving wires to the bottom signature
    let mut keep: Vec<Option<usize>> = vec![None; bottom.len()];
    let mut taken = vec![false; b.wires.len()];
    for (j, &s) in bottom.iter().enumerate() {
        if let Some(k) = (0..b.wires.len()).find(|&k| !taken[k] && b.wires[k] == s) {
            taken[k] = true;
            keep[j] = Some(k);
        }
    }
    // close the unmatched wires, right to left so positions stay valid
    let mut ids: Vec<Option<usize>> = (0..b.wires.len()).map(|k| if taken[k] { Some(k) } else { None }).collect();
    for k in (0..b.wires.len()).rev() {
        if !taken[k] {
            b.close(k);
            ids.remove(k);
        }
    }
    // open missing wires at the end, tagged with their bottom index
    let mut tags: Vec<usize> = ids
        .iter()
        .map(|id| keep.iter().position(|&x| x == *id).unwrap())
        .collect();
    for (j, &s) in bottom.iter().enumerate() {
        if keep[j].is_none() {
            b.open(s);
            tags.push(j);
        }
    }
    // bubble the wires into bottom order
    let mut sorted = false;
    while !sorted {
        sorted = true;
        for k in 0..tags.len().saturating_sub(1) {
            if tags[k] > tags[k + 1] {
                tags.swap(k, k + 1);
                b.at(k, vec![Gate::Swap]);
                sorted = false;
            }
        }
    }
    debug_assert_eq!(b.wires, bottom);
    CircuitSpec { boundary: top.to_vec(), slices: b.slices }
}

/// Random box-space circuit on n `+` points.
pub fn random_box_circuit<R: rand::Rng>(rng: &mut R, n: usize, opts: &RandomCircuitOptions) -> CircuitSpec {
    random_circuit(rng, &vec![Sign::Plus; n], &[], opts)
}

/// Random morphism from m `+` inputs whose outputs can feed a diagram
/// with the given input signs.
pub fn random_context<R: rand::Rng>(rng: &mut R, m: usize, feeds: &[Sign]) -> Diagram {
    let opts = RandomCircuitOptions { slices: 3, max_wires: 8, p: None, max_jellies: 0 };
    let c = random_circuit(rng, &vec![Sign::Plus; m], feeds, &opts);
    from_circuit(&c).expect("generated circuits are well formed")
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordlang::enumerate;

    fn circ(b: &str, slices: &[&[&str]], p: Option<usize>) -> Diagram {
        let c = CircuitSpec {
            boundary: parse_signature(b).unwrap(),
            slices: slices.iter().map(|s| s.iter().map(|g| Gate::parse(g, p).unwrap()).collect()).collect(),
        };
        from_circuit(&c).unwrap()
    }

    #[test]
    fn cup_then_cap_is_a_loop() {
        let d = circ("", &[&["cup"], &["cap"]], None);
        assert_eq!(d.free_loops, 1);
        assert!(d.edges.is_empty());
    }

    #[test]
    fn single_dot() {
        let d = circ("+", &[&["dot"]], None);
        assert_eq!(d.vertices, vec![VertexKind::Dot]);
        assert_eq!(d.edges, vec![(Port::Boundary(0), Port::Leg(0, 0))]);
    }

    #[test]
    fn double_dot_strand() {
        let d = circ("", &[&["invbracket"], &["dot", "dot"]], None);
        let s = d.strands();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].passes.len(), 1);
        assert_eq!(recognize_basis_word(&d, None), None);
    }

    #[test]
    fn signature_errors() {
        let c = CircuitSpec { boundary: vec![Sign::Plus], slices: vec![vec![Gate::Cap]] };
        assert!(matches!(from_circuit(&c), Err(TangleError::SignatureMismatch(_))));
        let c = CircuitSpec { boundary: vec![Sign::Plus, Sign::Plus], slices: vec![vec![Gate::Cap]] };
        assert!(matches!(from_circuit(&c), Err(TangleError::SignatureMismatch(_))));
    }

    #[test]
    fn compose_cap_cup_and_identity() {
        let cup = circ("", &[&["cup"]], None);
        let cap = circ("+-", &[&["cap"]], None);
        let closed = Diagram::compose(&cap, &cup).unwrap();
        assert_eq!(closed.free_loops, 1);
        let dot = circ("+", &[&["dot"]], None);
        let id = Diagram::identity(&[Sign::Plus]);
        assert_eq!(Diagram::compose(&dot, &id).unwrap().edges, dot.edges);
        assert!(Diagram::compose(&cap, &id).is_err());
    }

    #[test]
    fn compose_invbracket_bracket_is_a_two_vertex_strand() {
        let snake = circ("+", &[&["id+", "invbracket"], &["bracket", "id+"]], None);
        assert_eq!(snake.boundary, vec![Sign::Plus, Sign::Minus]);
        let s = snake.strands();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].passes.len(), 2);
    }

    #[test]
    fn tensor_of_dots() {
        let dot = circ("+", &[&["dot"]], None);
        let dd = dot.tensor(&dot);
        let w = recognize_basis_word(&dd, None).unwrap();
        assert_eq!(w.to_string(), "..");
    }

    #[test]
    fn flatten_identity_gives_one_bracket() {
        let f = Diagram::identity(&[Sign::Plus]).flatten();
        assert_eq!(f.vertices, vec![VertexKind::Bracket]);
        assert_eq!(recognize_basis_word(&f, None).unwrap().to_string(), "<>");
        let dot = circ("+", &[&["dot"]], None);
        assert_eq!(dot.flatten(), dot);
    }

    #[test]
    fn gamma_roundtrip_small() {
        for n in 0..=8 {
            for w in enumerate(Automaton::N0, n) {
                let d = gamma_diagram(&w).unwrap();
                d.validate().unwrap();
                assert_eq!(recognize_basis_word(&d, None), Some(w));
            }
            for p in [2, 3] {
                for w in enumerate(Automaton::Np(p), n) {
                    let d = gamma_diagram(&w).unwrap();
                    d.validate().unwrap();
                    assert_eq!(d.jelly_count(), w.letters.iter().filter(|&&l| l == Letter::Star).count());
                    assert_eq!(recognize_basis_word(&d, Some(p)), Some(w));
                }
            }
        }
    }

    #[test]
    fn crossing_caps_not_normal() {
        // brackets on (0,2) and (1,3)
        let mut d = Diagram::with_ground(4);
        let a = d.add_vertex(VertexKind::Bracket);
        let b = d.add_vertex(VertexKind::Bracket);
        d.connect(Port::Boundary(0), Port::Leg(a, 0));
        d.connect(Port::Boundary(2), Port::Leg(a, 1));
        d.connect(Port::Boundary(1), Port::Leg(b, 0));
        d.connect(Port::Boundary(3), Port::Leg(b, 1));
        assert_eq!(recognize_basis_word(&d, None), None);
    }

    #[test]
    fn reversed_bracket_not_normal() {
        let mut d = Diagram::with_ground(2);
        let a = d.add_vertex(VertexKind::Bracket);
        d.connect(Port::Boundary(1), Port::Leg(a, 0));
        d.connect(Port::Boundary(0), Port::Leg(a, 1));
        assert_eq!(recognize_basis_word(&d, None), None);
    }

    #[test]
    fn random_circuits_are_well_formed() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 0..8 {
            for p in [None, Some(2), Some(3)] {
                let opts = RandomCircuitOptions { p, ..Default::default() };
                let c = random_box_circuit(&mut rng, n, &opts);
                let d = from_circuit(&c).unwrap();
                assert_eq!(d.boundary.len(), n);
                assert_eq!(d.inputs, n);
            }
            let feeds = vec![Sign::Plus, Sign::Minus, Sign::Plus];
            let ctx = random_context(&mut rng, n, &feeds);
            let target = Diagram { boundary: vec![Sign::Plus, Sign::Minus, Sign::Plus], inputs: 3, ..Diagram::empty() };
            assert_eq!(ctx.output_types(), target.input_types());
        }
    }

    #[test]
    fn file_roundtrip() {
        let text = r#"{"field":"3","p":3,"boundary":"+++++","slices":[["jelly"]]}"#;
        let f = DiagramFile::parse(text).unwrap();
        let c = f.circuit().unwrap();
        let back = DiagramFile::from_circuit_spec(&f.field_spec().unwrap(), f.p, &c);
        assert_eq!(back.circuit().unwrap(), c);
        assert_eq!(DiagramFile::parse(&back.to_text()).unwrap().circuit().unwrap(), c);
    }
}
