//! Dense exact matrices and the unipotent representations V_i.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::exactnum::{binomial, prime_power, Elem, FieldSpec, NumError, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepError {
    #[error("V_{0} does not exist in characteristic {1}")]
    DimTooLargeForCharP(usize, u64),
    #[error("matrix is not unipotent")]
    NotUnipotent,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("solver found dimension {found}, expected {expected}")]
    InternalDimensionMismatch { found: usize, expected: usize },
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Elem>,
}

impl Matrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix { field: field.clone(), rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_ints(field: &FieldSpec, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.iter().flat_map(|row| row.iter().map(|&v| field.from_i64(v))).collect();
        Matrix { field: field.clone(), rows: r, cols: c, data }
    }

    pub fn row_vector(field: &FieldSpec, entries: Vec<Elem>) -> Self {
        Matrix { field: field.clone(), rows: 1, cols: entries.len(), data: entries }
    }

    pub fn get(&self, r: usize, c: usize) -> &Elem {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn scalar(&self, r: usize, c: usize) -> Scalar {
        Scalar::new(&self.field, self.get(r, c).clone())
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, RepError> {
        if self.cols != other.rows || self.field != other.field {
            return Err(RepError::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j);
                    let v = f.add(cur, &f.mul(a, b));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, RepError> {
        if (self.rows, self.cols) != (other.rows, other.cols) || self.field != other.field {
            return Err(RepError::ShapeMismatch("add".into()));
        }
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f.add(a, b)).collect();
        Ok(Matrix { field: f.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, RepError> {
        self.add(&other.scale(&self.field.from_i64(-1)))
    }

    pub fn scale(&self, s: &Elem) -> Matrix {
        let f = &self.field;
        let data = self.data.iter().map(|a| f.mul(a, s)).collect();
        Matrix { field: f.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let f = &self.field;
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Matrix::zeros(f, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, f.mul(a, other.get(k, l)));
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Matrix {
        let mut acc = Matrix::identity(&self.field, self.rows);
        for _ in 0..e {
            acc = acc.mul(self).unwrap();
        }
        acc
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let f = &self.field;
        let mut m = self.clone();
        let mut pivots = vec![];
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = f.inv(m.get(r, c)).unwrap();
            for j in 0..m.cols {
                let v = f.mul(m.get(r, j), &inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).clone();
                for j in 0..m.cols {
                    let v = f.sub(m.get(i, j), &f.mul(&factor, m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of {x : self * x = 0}, as column vectors.
    pub fn nullspace(&self) -> Vec<Vec<Elem>> {
        let f = &self.field;
        let (m, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![f.zero(); self.cols];
                v[fc] = f.one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = f.neg(m.get(r, fc));
                }
                v
            })
            .collect()
    }

    /// Solves x * self = target for a row vector x, if possible.
    pub fn solve_left(&self, target: &[Elem]) -> Option<Vec<Elem>> {
        // x A = t  <=>  A^T x^T = t^T
        let f = &self.field;
        let at = self.transpose();
        let mut aug = Matrix::zeros(f, at.rows, at.cols + 1);
        for i in 0..at.rows {
            for j in 0..at.cols {
                aug.set(i, j, at.get(i, j).clone());
            }
            aug.set(i, at.cols, target[i].clone());
        }
        let (m, pivots) = aug.rref();
        if pivots.contains(&at.cols) {
            return None;
        }
        let mut x = vec![f.zero(); at.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = m.get(r, at.cols).clone();
        }
        Some(x)
    }

    pub fn format_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|i| {
                let cells: Vec<String> = self.row(i).iter().map(|e| self.field.format_elem(e)).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<{}>{:?}", self.field, self.format_rows())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format_rows().join("\n"))
    }
}

/// The n-bit pattern of a tensor basis vector v_{b_1} ⊗ ... ⊗ v_{b_n}.
/// As a matrix index the first factor is the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisVectorIndex {
    pub bits: Vec<u8>,
}

impl BasisVectorIndex {
    pub fn from_index(n: usize, idx: usize) -> Self {
        BasisVectorIndex { bits: (0..n).map(|i| ((idx >> (n - 1 - i)) & 1) as u8).collect() }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| acc * 2 + b as usize)
    }

    pub fn length(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn parse(s: &str) -> Option<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect::<Option<Vec<u8>>>()?;
        Some(BasisVectorIndex { bits })
    }
}

impl fmt::Display for BasisVectorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

fn check_dim(i: usize, field: &FieldSpec) -> Result<(), RepError> {
    let p = field.characteristic();
    if p != 0 && i as u64 > p {
        return Err(RepError::DimTooLargeForCharP(i, p));
    }
    Ok(())
}

pub fn jordan_block(i: usize, field: &FieldSpec) -> Result<Matrix, RepError> {
    check_dim(i, field)?;
    let mut m = Matrix::identity(field, i);
    for r in 0..i.saturating_sub(1) {
        m.set(r, r + 1, field.one());
    }
    Ok(m)
}

/// Nilpotent part N_i = J_i - I.
pub fn nilpotent_block(i: usize, field: &FieldSpec) -> Matrix {
    let mut m = Matrix::zeros(field, i, i);
    for r in 0..i.saturating_sub(1) {
        m.set(r, r + 1, field.one());
    }
    m
}

/// J_i^x acting on the t-th tensor power of V_i.
pub fn action_matrix(i: usize, x: i64, tensor_power: u32, field: &FieldSpec) -> Result<Matrix, RepError> {
    let j = jordan_block(i, field)?;
    let base = if x >= 0 {
        j.pow(x as u32)
    } else {
        // J_i^{-1} = sum (-N)^k
        let n = nilpotent_block(i, field).scale(&field.from_i64(-1));
        let mut inv = Matrix::identity(field, i);
        let mut term = Matrix::identity(field, i);
        for _ in 1..i {
            term = term.mul(&n).unwrap();
            inv = inv.add(&term).unwrap();
        }
        inv.pow((-x) as u32)
    };
    Ok(kron_power(&base, tensor_power))
}

/// The 2-dimensional action [[1,x],[0,1]] for an arbitrary field element x,
/// raised to a Kronecker power.
pub fn action_matrix_elem(x: &Elem, tensor_power: u32, field: &FieldSpec) -> Matrix {
    let mut m = Matrix::identity(field, 2);
    m.set(0, 1, x.clone());
    kron_power(&m, tensor_power)
}

pub fn kron_power(m: &Matrix, t: u32) -> Matrix {
    let mut acc = Matrix::identity(&m.field, 1);
    for _ in 0..t {
        acc = acc.kron(m);
    }
    acc
}

/// The shift maps T_0..T_{s-1} spanning Hom(V_n, V_m), s = min(n, m).
pub fn shift_maps(n: usize, m: usize, field: &FieldSpec) -> Vec<Matrix> {
    let s = n.min(m);
    (0..s)
        .map(|i| {
            let mut t = Matrix::zeros(field, m, n);
            // codomain coords 0..s, domain coords n-s..n, acting by N_s^i
            for r in 0..s {
                let c = r + i;
                if c < s {
                    t.set(r, n - s + c, field.one());
                }
            }
            t
        })
        .collect()
}

pub fn hom_basis(n: usize, m: usize, field: &FieldSpec) -> Result<Vec<Matrix>, RepError> {
    let jn = jordan_block(n, field)?;
    let jm = jordan_block(m, field)?;
    // Unknown T (m x n) flattened row-major; equations (T Jn - Jm T)_{ab} = 0.
    let mut sys = Matrix::zeros(field, m * n, m * n);
    for a in 0..m {
        for b in 0..n {
            let row = a * n + b;
            // (T Jn)_{ab} = sum_k T_{ak} Jn_{kb}
            for k in 0..n {
                let v = jn.get(k, b);
                if !v.is_zero() {
                    let cur = sys.get(row, a * n + k).clone();
                    sys.set(row, a * n + k, field.add(&cur, v));
                }
            }
            // -(Jm T)_{ab} = -sum_k Jm_{ak} T_{kb}
            for k in 0..m {
                let v = jm.get(a, k);
                if !v.is_zero() {
                    let cur = sys.get(row, k * n + b).clone();
                    sys.set(row, k * n + b, field.sub(&cur, v));
                }
            }
        }
    }
    let null = sys.nullspace();
    let expected = n.min(m);
    if null.len() != expected {
        return Err(RepError::InternalDimensionMismatch { found: null.len(), expected });
    }
    let basis = shift_maps(n, m, field);
    for t in &basis {
        let lhs = t.mul(&jn)?;
        let rhs = jm.mul(t)?;
        let as_column = Matrix { field: field.clone(), rows: m * n, cols: 1, data: t.data.clone() };
        if lhs != rhs || !sys.mul(&as_column)?.is_zero() {
            return Err(RepError::InternalDimensionMismatch { found: null.len(), expected });
        }
    }
    // the shift maps must span the solution space
    let mut stacked = Matrix::zeros(field, basis.len(), m * n);
    for (i, t) in basis.iter().enumerate() {
        for (j, e) in t.data.iter().enumerate() {
            stacked.set(i, j, e.clone());
        }
    }
    if stacked.rank() != expected {
        return Err(RepError::InternalDimensionMismatch { found: stacked.rank(), expected });
    }
    Ok(basis)
}

/// Block sizes of a unipotent matrix, largest first.
pub fn jordan_type(m: &Matrix) -> Result<Vec<usize>, RepError> {
    if m.rows != m.cols {
        return Err(RepError::ShapeMismatch("jordan_type needs a square matrix".into()));
    }
    let n = m.rows;
    let f = &m.field;
    let nil = m.sub(&Matrix::identity(f, n))?;
    let mut ranks = vec![n];
    let mut pw = Matrix::identity(f, n);
    for _ in 0..=n {
        pw = pw.mul(&nil)?;
        ranks.push(pw.rank());
    }
    if ranks[n] != 0 {
        return Err(RepError::NotUnipotent);
    }
    let mut parts = vec![];
    for s in (1..=n).rev() {
        let mult = ranks[s - 1] + ranks[s + 1] - 2 * ranks[s];
        parts.extend(std::iter::repeat(s).take(mult));
    }
    Ok(parts)
}

pub fn fusion_decompose(i: usize, field: &FieldSpec) -> Result<Vec<usize>, RepError> {
    let j2 = jordan_block(2, field)?;
    let ji = jordan_block(i, field)?;
    jordan_type(&j2.kron(&ji))
}

/// Row vector on V^{⊗n}: 1 where (q-1) divides the length and the length is not 0 or n.
pub fn jelly_vector(q: u64, n: usize) -> Result<Matrix, RepError> {
    let field = FieldSpec::finite(q)?;
    let step = (q - 1) as usize;
    let data = (0..1usize << n)
        .map(|idx| {
            let len = idx.count_ones() as usize;
            if len % step == 0 && len != 0 && len != n {
                field.one()
            } else {
                field.zero()
            }
        })
        .collect();
    Ok(Matrix::row_vector(&field, data))
}

/// M · dom == cod · M.
pub fn equivariance_check(m: &Matrix, dom: &Matrix, cod: &Matrix) -> Result<bool, RepError> {
    if m.cols != dom.rows || cod.cols != m.rows {
        return Err(RepError::ShapeMismatch("equivariance_check".into()));
    }
    Ok(m.mul(dom)? == cod.mul(m)?)
}

pub fn binomial_sum_zero(q: u64, l: u64) -> Result<bool, RepError> {
    let (p, _) = prime_power(q).ok_or(NumError::NotPrimePower(q))?;
    let step = q - 1;
    let mut s = BigUint::from(0u32);
    let mut j = 1;
    while j * step < l {
        s += binomial(l, j * step);
        j += 1;
    }
    Ok((s % BigUint::from(p)).to_u64() == Some(0))
}

/// Partition as a multiset, for display and comparison.
pub fn partition_counts(parts: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &p in parts {
        *m.entry(p).or_insert(0) += 1;
    }
    m
}
