//! Sparse operators on tensor products, exact inversion, Bareiss rank and nullspaces.
//!
//! Operators are stored row-major with only nonzero entries. Tensor-product
//! ordinals are mixed radix with the first factor most significant, so a basis
//! vector `|a> (x) |b>` of `V_A (x) V_B` has ordinal `a * dim(B) + b`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{ExactScalar, Field, NumError};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<Vec<(usize, F)>>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Vec::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].push((i, F::one()));
        }
        m
    }

    pub fn diagonal(d: &[F]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            if !v.is_zero() {
                m.data[i].push((i, v.clone()));
            }
        }
        m
    }

    pub fn from_dense(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows
            .into_iter()
            .map(|row| {
                assert_eq!(row.len(), c, "ragged dense matrix");
                row.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        Matrix { rows: r, cols: c, data }
    }

    /// Builds from an entry function; zero results are dropped.
    pub fn from_fn<E>(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> std::result::Result<F, E>) -> std::result::Result<Self, E> {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c)?;
                if !v.is_zero() {
                    m.data[r].push((c, v));
                }
            }
        }
        Ok(m)
    }

    /// Permutation `P: V_A (x) V_B -> V_B (x) V_A`, `P |a, b> = |b, a>`.
    pub fn swap(da: usize, db: usize) -> Self {
        let mut m = Self::zeros(da * db, da * db);
        for a in 0..da {
            for b in 0..db {
                m.data[b * da + a].push((a * db + b, F::one()));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, F)] {
        &self.data[r]
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        match self.data[r].binary_search_by_key(&c, |e| e.0) {
            Ok(k) => self.data[r][k].1.clone(),
            Err(_) => F::zero(),
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: F) {
        let row = &mut self.data[r];
        match row.binary_search_by_key(&c, |e| e.0) {
            Ok(k) => {
                if v.is_zero() {
                    row.remove(k);
                } else {
                    row[k].1 = v;
                }
            }
            Err(k) => {
                if !v.is_zero() {
                    row.insert(k, (c, v));
                }
            }
        }
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: F) {
        let cur = self.get(r, c);
        self.set(r, c, cur + &v);
    }

    pub fn to_dense(&self) -> Vec<Vec<F>> {
        let mut d = vec![vec![F::zero(); self.cols]; self.rows];
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                d[r][*c] = v.clone();
            }
        }
        d
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &F)> {
        self.data.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v)))
    }

    pub fn mul(&self, o: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, o.cols);
        let mut acc: Vec<Option<F>> = vec![None; o.cols];
        let mut touched: Vec<usize> = Vec::new();
        for (r, row) in self.data.iter().enumerate() {
            for (k, a) in row {
                for (c, b) in &o.data[*k] {
                    let p = a.clone() * b;
                    match &mut acc[*c] {
                        Some(s) => *s = s.clone() + &p,
                        slot @ None => {
                            *slot = Some(p);
                            touched.push(*c);
                        }
                    }
                }
            }
            touched.sort_unstable();
            for c in touched.drain(..) {
                let v = acc[c].take().unwrap();
                if !v.is_zero() {
                    out.data[r].push((c, v));
                }
            }
        }
        out
    }

    /// Product of a chain of operators, left to right.
    pub fn product<'a>(ms: impl IntoIterator<Item = &'a Matrix<F>>) -> Matrix<F> {
        let mut it = ms.into_iter();
        let first = it.next().expect("empty product").clone();
        it.fold(first, |acc, m| acc.mul(m))
    }

    pub fn add(&self, o: &Matrix<F>) -> Matrix<F> {
        self.combine(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Matrix<F>) -> Matrix<F> {
        self.combine(o, |a, b| a - b)
    }

    fn combine(&self, o: &Matrix<F>, f: impl Fn(F, F) -> F) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        let mut out = Self::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (a, b) = (&self.data[r], &o.data[r]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let (c, v) = if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                    i += 1;
                    (a[i - 1].0, f(a[i - 1].1.clone(), F::zero()))
                } else if i == a.len() || b[j].0 < a[i].0 {
                    j += 1;
                    (b[j - 1].0, f(F::zero(), b[j - 1].1.clone()))
                } else {
                    i += 1;
                    j += 1;
                    (a[i - 1].0, f(a[i - 1].1.clone(), b[j - 1].1.clone()))
                };
                if !v.is_zero() {
                    out.data[r].push((c, v));
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &F) -> Matrix<F> {
        self.map(|v| v.clone() * s)
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        self.try_map(|v| Ok::<G, ()>(f(v))).unwrap()
    }

    pub fn try_map<G: Field, E>(&self, f: impl Fn(&F) -> std::result::Result<G, E>) -> std::result::Result<Matrix<G>, E> {
        let mut out = Matrix::<G>::zeros(self.rows, self.cols);
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                let g = f(v)?;
                if !g.is_zero() {
                    out.data[r].push((*c, g));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix<F> {
        let mut out = Self::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                out.data[*c].push((r, v.clone()));
            }
        }
        out
    }

    pub fn trace(&self) -> F {
        (0..self.rows.min(self.cols)).fold(F::zero(), |acc, i| acc + &self.get(i, i))
    }

    pub fn kron(&self, o: &Matrix<F>) -> Matrix<F> {
        let mut out = Self::zeros(self.rows * o.rows, self.cols * o.cols);
        for (ra, rowa) in self.data.iter().enumerate() {
            for rb in 0..o.rows {
                let r = ra * o.rows + rb;
                for (ca, a) in rowa {
                    for (cb, b) in &o.data[rb] {
                        out.data[r].push((ca * o.cols + cb, a.clone() * b));
                    }
                }
            }
        }
        out
    }

    /// Sum of each column.
    pub fn col_sums(&self) -> Vec<F> {
        let mut s = vec![F::zero(); self.cols];
        for row in &self.data {
            for (c, v) in row {
                s[*c] = s[*c].clone() + v;
            }
        }
        s
    }

    /// `<1| A`: each column of `A` summed, i.e. the row vector `(1, .., 1) A`.
    pub fn row_vector_times(&self, v: &[F]) -> Vec<F> {
        let mut s = vec![F::zero(); self.cols];
        for (r, row) in self.data.iter().enumerate() {
            for (c, x) in row {
                s[*c] = s[*c].clone() + &(v[r].clone() * x);
            }
        }
        s
    }

    pub fn apply(&self, v: &[F]) -> Vec<F> {
        self.data
            .iter()
            .map(|row| row.iter().fold(F::zero(), |acc, (c, x)| acc + &(x.clone() * &v[*c])))
            .collect()
    }

    /// First `(row, col)` in row-major order where the two matrices differ.
    pub fn first_difference(&self, o: &Matrix<F>) -> Option<(usize, usize)> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        let d = self.sub(o);
        d.data.iter().enumerate().find_map(|(r, row)| row.first().map(|(c, _)| (r, *c)))
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && self.first_difference(&Self::identity(self.rows)).is_none()
    }

    /// Places `op`, which acts on the factors `positions` (in that order), into the
    /// tensor product with factor dimensions `dims`.
    ///
    /// `embed(S, &[1, 0], &[dI, dJ])` with `S` on `V_J (x) V_I` is `S_21`.
    pub fn embed(op: &Matrix<F>, positions: &[usize], dims: &[usize]) -> Matrix<F> {
        let sub_dims: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
        let sub_total: usize = sub_dims.iter().product();
        assert_eq!(op.rows, sub_total, "operator does not match embedded factors");
        let total: usize = dims.iter().product();
        let mut out = Self::zeros(total, total);
        for r in 0..total {
            let digits = decode(r, dims);
            let sub_r = encode(&positions.iter().map(|&p| digits[p]).collect::<Vec<_>>(), &sub_dims);
            let mut row: Vec<(usize, F)> = op.data[sub_r]
                .iter()
                .map(|(sc, v)| {
                    let sd = decode(*sc, &sub_dims);
                    let mut cd = digits.clone();
                    for (k, &p) in positions.iter().enumerate() {
                        cd[p] = sd[k];
                    }
                    (encode(&cd, dims), v.clone())
                })
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            out.data[r] = row;
        }
        out
    }

    /// Trace over tensor factor `factor`.
    pub fn partial_trace(&self, dims: &[usize], factor: usize) -> Matrix<F> {
        let rest: Vec<usize> = dims.iter().enumerate().filter(|(k, _)| *k != factor).map(|(_, d)| *d).collect();
        let n: usize = rest.iter().product();
        let mut out = Self::zeros(n, n);
        for (r, row) in self.data.iter().enumerate() {
            let rd = decode(r, dims);
            for (c, v) in row {
                let cd = decode(*c, dims);
                if rd[factor] != cd[factor] {
                    continue;
                }
                let rr = encode(&drop_digit(&rd, factor), &rest);
                let cc = encode(&drop_digit(&cd, factor), &rest);
                out.add_at(rr, cc, v.clone());
            }
        }
        out
    }

    /// Transpose in tensor factor `factor` only:
    /// `[A^{t_k}]_{.. i_k ..}^{.. i'_k ..} = A_{.. i'_k ..}^{.. i_k ..}`.
    pub fn partial_transpose(&self, dims: &[usize], factor: usize) -> Matrix<F> {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for (r, row) in self.data.iter().enumerate() {
            let mut rd = decode(r, dims);
            for (c, v) in row {
                let mut cd = decode(*c, dims);
                std::mem::swap(&mut rd[factor], &mut cd[factor]);
                out.data[encode(&rd, dims)].push((encode(&cd, dims), v.clone()));
                std::mem::swap(&mut rd[factor], &mut cd[factor]);
            }
        }
        for row in &mut out.data {
            row.sort_unstable_by_key(|e| e.0);
        }
        out
    }

    /// Exact Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Matrix<F>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.to_dense();
        let mut inv = Self::identity(n).to_dense();
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::Singular)?;
            a.swap(col, p);
            inv.swap(col, p);
            let pv = a[col][col].inv()?;
            for k in 0..n {
                a[col][k] = a[col][k].clone() * &pv;
                inv[col][k] = inv[col][k].clone() * &pv;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for k in 0..n {
                    let da = f.clone() * &a[col][k];
                    a[r][k] = a[r][k].clone() - &da;
                    let di = f.clone() * &inv[col][k];
                    inv[r][k] = inv[r][k].clone() - &di;
                }
            }
        }
        Ok(Self::from_dense(inv))
    }

    /// Adds `delta` to one entry; used to build negative controls.
    pub fn tampered(&self, row: usize, col: usize, delta: &F) -> Matrix<F> {
        let mut m = self.clone();
        m.add_at(row % self.rows, col % self.cols, delta.clone());
        m
    }
}

fn decode(mut x: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = x % dims[k];
        x /= dims[k];
    }
    d
}

fn encode(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

fn drop_digit(d: &[usize], k: usize) -> Vec<usize> {
    d.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, x)| *x).collect()
}

/// Integer rows proportional to the rational rows, by clearing denominators row by row.
fn integer_rows(m: &Matrix<ExactScalar>) -> Vec<Vec<BigInt>> {
    m.to_dense()
        .into_iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (&l / v.denom())).collect()
        })
        .collect()
}

/// Rank by fraction-free (Bareiss) elimination on integer-scaled rows.
pub fn rank_exact(m: &Matrix<ExactScalar>) -> usize {
    let mut a = integer_rows(m);
    let (rows, cols) = (m.rows(), m.cols());
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for k in col + 1..cols {
                let v = &a[rank][col] * &a[r][k] - &a[r][col] * &a[rank][k];
                a[r][k] = v / &prev;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Basis of the right nullspace `{v : m v = 0}` from the reduced row echelon form.
pub fn nullspace_exact(m: &Matrix<ExactScalar>) -> Vec<Vec<ExactScalar>> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<BigRational>> =
        m.to_dense().into_iter().map(|r| r.into_iter().map(|v| v.as_big().clone()).collect()).collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pv = a[rank][col].recip();
        for k in col..cols {
            a[rank][k] = &a[rank][k] * &pv;
        }
        for r in 0..rows {
            if r != rank && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in col..cols {
                    let d = &f * &a[rank][k];
                    a[r][k] -= d;
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (k, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[k][f].clone();
            }
            v.into_iter().map(ExactScalar::from_big).collect()
        })
        .collect()
}

/// The stationary law of a row-convention generator (`pi M = 0`, `sum pi = 1`).
pub fn left_null_probability(m: &Matrix<ExactScalar>) -> Result<Vec<ExactScalar>> {
    let ns = nullspace_exact(&m.transpose());
    if ns.len() != 1 {
        return Err(Error::DegenerateKernel(ns.len()));
    }
    let v = &ns[0];
    let s = v.iter().fold(ExactScalar::zero(), |acc, x| acc + x);
    if s.is_zero() {
        return Err(Error::Num(NumError::PoleEncountered));
    }
    v.iter().map(|x| Ok(x.div(&s)?)).collect()
}

/// Sign of an exact scalar, for rate surveys.
pub fn is_negative(x: &ExactScalar) -> bool {
    x.as_big().is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    fn r(a: i64, b: i64) -> ExactScalar {
        rat(a, b).unwrap()
    }

    fn m(rows: &[&[i64]]) -> Matrix<ExactScalar> {
        Matrix::from_dense(rows.iter().map(|row| row.iter().map(|&x| r(x, 1)).collect()).collect())
    }

    #[test]
    fn product_and_transpose() {
        let a = m(&[&[1, 2], &[0, 3]]);
        let b = m(&[&[4, 0], &[5, 6]]);
        assert_eq!(a.mul(&b), m(&[&[14, 12], &[15, 18]]));
        assert_eq!(a.transpose(), m(&[&[1, 0], &[2, 3]]));
        assert_eq!(a.add(&b).sub(&b), a);
    }

    #[test]
    fn kron_matches_embed() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 5, 1], &[6, 7, 0], &[1, 0, 2]]);
        let ab = a.kron(&b);
        let e = Matrix::embed(&a, &[0], &[2, 3]).mul(&Matrix::embed(&b, &[1], &[2, 3]));
        assert_eq!(ab, e);
    }

    #[test]
    fn swap_conjugation_reverses_kron() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[0, 5, 1], &[6, 7, 0], &[1, 0, 2]]);
        let p = Matrix::<ExactScalar>::swap(2, 3);
        let pinv = Matrix::<ExactScalar>::swap(3, 2);
        assert_eq!(pinv.mul(&b.kron(&a)).mul(&p), a.kron(&b));
        let ba = b.kron(&a);
        assert_eq!(Matrix::embed(&ba, &[1, 0], &[2, 3]), a.kron(&b));
    }

    #[test]
    fn partial_trace_and_transpose() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let b = m(&[&[5, 6], &[7, 8]]);
        let ab = a.kron(&b);
        assert_eq!(ab.partial_trace(&[2, 2], 0), b.scale(&r(5, 1)));
        assert_eq!(ab.partial_trace(&[2, 2], 1), a.scale(&r(13, 1)));
        assert_eq!(ab.partial_transpose(&[2, 2], 1), a.kron(&b.transpose()));
        assert_eq!(ab.partial_transpose(&[2, 2], 0), a.transpose().kron(&b));
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert_eq!(m(&[&[1, 2], &[2, 4]]).inverse(), Err(Error::Singular));
    }

    #[test]
    fn bareiss_rank() {
        assert_eq!(rank_exact(&m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]])), 2);
        assert_eq!(rank_exact(&Matrix::<ExactScalar>::identity(4)), 4);
        assert_eq!(rank_exact(&Matrix::<ExactScalar>::zeros(3, 3)), 0);
        let frac = Matrix::from_dense(vec![vec![r(1, 2), r(1, 3)], vec![r(3, 2), r(1, 1)]]);
        assert_eq!(rank_exact(&frac), 1);
    }

    #[test]
    fn two_state_stationary() {
        let (a, b) = (r(2, 1), r(3, 1));
        let gen = Matrix::from_dense(vec![vec![-a.clone(), a.clone()], vec![b.clone(), -b.clone()]]);
        let pi = left_null_probability(&gen).unwrap();
        assert_eq!(pi, vec![r(3, 5), r(2, 5)]);
        assert_eq!(left_null_probability(&Matrix::zeros(2, 2)), Err(Error::DegenerateKernel(2)));
    }

    #[test]
    fn nullspace_vectors_are_null() {
        let a = m(&[&[1, 2, 3, 4], &[2, 4, 6, 8], &[0, 1, 1, 0]]);
        let ns = nullspace_exact(&a);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(a.apply(&v).iter().all(|x| x.is_zero()));
        }
    }
}
