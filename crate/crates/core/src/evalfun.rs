//! Evaluation of diagrams as exact tensors.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactnum::{Elem, FieldSpec};
use crate::tangle::{random_context, Diagram, LinComb, Port, Sign, TangleError, VertexKind};
use crate::unirep::{jelly_vector, Matrix, RepError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("jellyfish for p={0} cannot be evaluated over a field of characteristic {1}")]
    CharMismatch(usize, u64),
    #[error("unbound port {0:?}")]
    UnboundPort(Port),
    #[error(transparent)]
    Tangle(#[from] TangleError),
    #[error(transparent)]
    Rep(#[from] RepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Identity,
    /// evaluation V* ⊗ V → 1
    Cap,
    /// coevaluation 1 → V ⊗ V*
    Cup,
    Bracket,
    InvBracket,
    Dot,
    Swap,
    Jelly,
}

/// Matrices of the generators. Maps act on column vectors.
pub fn generator_matrix(kind: GeneratorKind, field: &FieldSpec, p: Option<usize>) -> Result<Matrix, EvalError> {
    let m = |rows: &[Vec<i64>]| Matrix::from_ints(field, rows);
    Ok(match kind {
        GeneratorKind::Identity => Matrix::identity(field, 2),
        GeneratorKind::Cap => m(&[vec![1, 0, 0, 1]]),
        GeneratorKind::Cup => m(&[vec![1], vec![0], vec![0], vec![1]]),
        GeneratorKind::Bracket => m(&[vec![0, -1], vec![1, 0]]),
        GeneratorKind::InvBracket => m(&[vec![0, 1], vec![-1, 0]]),
        GeneratorKind::Dot => m(&[vec![0, 1]]),
        GeneratorKind::Swap => m(&[vec![1, 0, 0, 0], vec![0, 0, 1, 0], vec![0, 1, 0, 0], vec![0, 0, 0, 1]]),
        GeneratorKind::Jelly => {
            let p = p.ok_or(EvalError::CharMismatch(0, field.characteristic()))?;
            if field.characteristic() != p as u64 {
                return Err(EvalError::CharMismatch(p, field.characteristic()));
            }
            let mut j = jelly_vector(p as u64, 2 * p - 1)?;
            j.field = field.clone();
            j
        }
    })
}

/// Dense tensor over binary variables; `vars[0]` is the most significant bit.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    data: Vec<Elem>,
}

fn vertex_table(kind: VertexKind, field: &FieldSpec) -> Result<Vec<Elem>, EvalError> {
    let ints = |v: &[i64]| v.iter().map(|&x| field.from_i64(x)).collect::<Vec<_>>();
    Ok(match kind {
        VertexKind::Dot => ints(&[0, 1]),
        // b(x, y) with b(v0, v1) = 1
        VertexKind::Bracket => ints(&[0, 1, -1, 0]),
        // inverse form, as a tensor in V ⊗ V
        VertexKind::InvBracket => ints(&[0, -1, 1, 0]),
        VertexKind::Jelly(p) => {
            if field.characteristic() != p as u64 {
                return Err(EvalError::CharMismatch(p, field.characteristic()));
            }
            let n = 2 * p - 1;
            (0..1usize << n)
                .map(|idx| {
                    let len = idx.count_ones() as usize;
                    if len == p - 1 || len == 2 * (p - 1) {
                        field.one()
                    } else {
                        field.zero()
                    }
                })
                .collect()
        }
    })
}

/// Multiplies factors together and sums out `elim` (if any).
fn combine(field: &FieldSpec, factors: &[Factor], elim: Option<usize>) -> Factor {
    let mut all: Vec<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    if let Some(e) = elim {
        all.retain(|&v| v != e);
        all.push(e); // eliminated variable is the least significant bit
    }
    let pos: BTreeMap<usize, usize> = all.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let width = all.len();
    // for each factor, the bit positions (from the top of `all`) of its vars
    let shifts: Vec<Vec<usize>> =
        factors.iter().map(|f| f.vars.iter().map(|v| width - 1 - pos[v]).collect()).collect();
    let out_vars: Vec<usize> = if elim.is_some() { all[..width - 1].to_vec() } else { all.clone() };
    let mut data = vec![field.zero(); 1 << out_vars.len()];
    for assign in 0..1usize << width {
        let mut acc = field.one();
        let mut zero = false;
        for (f, sh) in factors.iter().zip(&shifts) {
            let mut idx = 0;
            for &s in sh {
                idx = (idx << 1) | ((assign >> s) & 1);
            }
            let v = &f.data[idx];
            if v.is_zero() {
                zero = true;
                break;
            }
            acc = field.mul(&acc, v);
        }
        if zero {
            continue;
        }
        let slot = if elim.is_some() { assign >> 1 } else { assign };
        data[slot] = field.add(&data[slot], &acc);
    }
    Factor { vars: out_vars, data }
}

/// Full tensor of a diagram, indexed by boundary points in order
/// (first point most significant). Returned as a 1 × 2^n row.
pub fn evaluate(d: &Diagram, field: &FieldSpec) -> Result<Matrix, EvalError> {
    let n = d.boundary.len();
    // one variable per edge
    let mut var_of: BTreeMap<Port, usize> = BTreeMap::new();
    for (e, &(s, t)) in d.edges.iter().enumerate() {
        var_of.insert(s, e);
        var_of.insert(t, e);
    }
    let mut factors = vec![];
    for (v, &kind) in d.vertices.iter().enumerate() {
        let vars = (0..kind.legs())
            .map(|l| var_of.get(&Port::Leg(v, l)).copied().ok_or(EvalError::UnboundPort(Port::Leg(v, l))))
            .collect::<Result<Vec<_>, _>>()?;
        factors.push(Factor { vars, data: vertex_table(kind, field)? });
    }
    let bvars = (0..n)
        .map(|i| var_of.get(&Port::Boundary(i)).copied().ok_or(EvalError::UnboundPort(Port::Boundary(i))))
        .collect::<Result<Vec<_>, _>>()?;
    let outer: BTreeSet<usize> = bvars.iter().copied().collect();
    // boundary-to-boundary strands meet no vertex
    for &v in &outer {
        if !factors.iter().any(|f| f.vars.contains(&v)) {
            factors.push(Factor { vars: vec![v], data: vec![field.one(), field.one()] });
        }
    }
    let mut internal: BTreeSet<usize> = (0..d.edges.len()).filter(|e| !outer.contains(e)).collect();
    while !internal.is_empty() {
        // eliminate the variable whose combined factor is smallest
        let best = *internal
            .iter()
            .min_by_key(|&&x| {
                factors
                    .iter()
                    .filter(|f| f.vars.contains(&x))
                    .flat_map(|f| f.vars.iter())
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .unwrap();
        internal.remove(&best);
        let (touch, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&best));
        factors = rest;
        if touch.is_empty() {
            continue;
        }
        factors.push(combine(field, &touch, Some(best)));
    }
    let total = combine(field, &factors, None);
    let pos: BTreeMap<usize, usize> = total.vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let width = total.vars.len();
    let mut loops = field.one();
    for _ in 0..d.free_loops {
        loops = field.mul(&loops, &field.from_i64(2));
    }
    let mut out = vec![field.zero(); 1 << n];
    'outer: for (idx, slot) in out.iter_mut().enumerate() {
        let mut assign = vec![None; width];
        for (i, &bv) in bvars.iter().enumerate() {
            let bit = (idx >> (n - 1 - i)) & 1;
            let k = pos[&bv];
            match assign[k] {
                None => assign[k] = Some(bit),
                Some(b) if b != bit => continue 'outer,
                _ => {}
            }
        }
        let t = assign.iter().fold(0usize, |acc, b| (acc << 1) | b.unwrap());
        *slot = field.mul(&total.data[t], &loops);
    }
    Ok(Matrix::row_vector(field, out))
}

pub fn evaluate_lincomb(x: &LinComb) -> Result<Matrix, EvalError> {
    let f = &x.field;
    let mut acc: Option<Matrix> = None;
    for (d, c) in &x.terms {
        let v = evaluate(d, f)?.scale(c);
        acc = Some(match acc {
            None => v,
            Some(a) => a.add(&v)?,
        });
    }
    Ok(match acc {
        Some(a) => a,
        None => Matrix::zeros(f, 1, 0),
    })
}

/// Matrix of the morphism V^{inputs} → V^{outputs}: entry [o][i] is the
/// tensor entry with input bits i and output bits o.
pub fn evaluate_map(d: &Diagram, field: &FieldSpec) -> Result<Matrix, EvalError> {
    let t = evaluate(d, field)?;
    let (ni, no) = (d.inputs, d.outputs());
    let mut m = Matrix::zeros(field, 1 << no, 1 << ni);
    for i in 0..1usize << ni {
        for o in 0..1usize << no {
            m.set(o, i, t.get(0, (i << no) | o).clone());
        }
    }
    Ok(m)
}

fn lincomb_row(x: &LinComb, n: usize) -> Result<Matrix, EvalError> {
    if x.terms.is_empty() {
        return Ok(Matrix::zeros(&x.field, 1, 1 << n));
    }
    evaluate_lincomb(x)
}

/// Equality under evaluation, probed again inside random contexts.
pub fn relation_holds(lhs: &LinComb, rhs: &LinComb, field: &FieldSpec) -> Result<bool, EvalError> {
    relation_holds_seeded(lhs, rhs, field, 0x5eed)
}

pub fn relation_holds_seeded(lhs: &LinComb, rhs: &LinComb, field: &FieldSpec, seed: u64) -> Result<bool, EvalError> {
    let sig = lhs
        .terms
        .first()
        .or(rhs.terms.first())
        .map(|(d, _)| (d.boundary.clone(), d.inputs))
        .unwrap_or((vec![], 0));
    let n = sig.0.len();
    if lhs.terms.iter().chain(&rhs.terms).any(|(d, _)| (d.boundary.clone(), d.inputs) != sig) {
        return Ok(false);
    }
    let restrict = |x: &LinComb| LinComb { field: field.clone(), terms: x.terms.clone() };
    let (l, r) = (restrict(lhs), restrict(rhs));
    if lincomb_row(&l, n)? != lincomb_row(&r, n)? {
        return Ok(false);
    }
    // identity strands on either side
    let id = LinComb::single(field, Diagram::identity(&[Sign::Plus]));
    for (a, b) in [(l.tensor(&id)?, r.tensor(&id)?), (id.tensor(&l)?, id.tensor(&r)?)] {
        if lincomb_row(&a, n + 2)? != lincomb_row(&b, n + 2)? {
            return Ok(false);
        }
    }
    // random contexts feeding the inputs
    if sig.1 == n && n > 0 && n <= 8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let types: Vec<Sign> = sig.0.clone();
        for _ in 0..3 {
            let m = rng.gen_range(0..=3usize);
            let ctx = random_context(&mut rng, m, &types);
            let cl = LinComb::compose(&l, &LinComb::single(field, ctx.clone()))?;
            let cr = LinComb::compose(&r, &LinComb::single(field, ctx))?;
            if lincomb_row(&cl, m)? != lincomb_row(&cr, m)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
