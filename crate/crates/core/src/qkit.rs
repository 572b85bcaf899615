//! Multi-index combinatorics, basis enumeration and the special functions Phi, Phi-hat and V.
//!
//! A multi-index is a plain `[i32]` slice of length `m = n - 1`. Components of
//! basis labels are non-negative; differences such as `l - j` may go negative
//! and are handled by the support conventions of each function.

use std::collections::HashMap;

use thiserror::Error;

use crate::exactnum::{Field, NumError};

pub type MultiIndex = Vec<i32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("index lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("index weight {weight} exceeds {cap}")]
    WeightExceedsJ { weight: i64, cap: i64 },
}

fn same_len(a: &[i32], b: &[i32]) -> Result<(), IndexError> {
    if a.len() != b.len() {
        return Err(IndexError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// `|a|`
pub fn weight(a: &[i32]) -> i64 {
    a.iter().map(|&x| x as i64).sum()
}

/// `(a, b) = sum_k a_k b_k`
pub fn dot(a: &[i32], b: &[i32]) -> Result<i64, IndexError> {
    same_len(a, b)?;
    Ok(dot_raw(a, b))
}

/// `Q(a, b) = sum_{l < k} a_l b_k`
pub fn qform(a: &[i32], b: &[i32]) -> Result<i64, IndexError> {
    same_len(a, b)?;
    Ok(qform_raw(a, b))
}

pub(crate) fn dot_raw(a: &[i32], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y as i64).sum()
}

pub(crate) fn qform_raw(a: &[i32], b: &[i32]) -> i64 {
    let mut prefix = 0i64;
    let mut s = 0i64;
    for k in 0..a.len() {
        s += prefix * b[k] as i64;
        prefix += a[k] as i64;
    }
    s
}

pub fn tau(a: &[i32]) -> MultiIndex {
    a.iter().rev().copied().collect()
}

/// `sigma(i_1..i_m) = (i_2, .., i_m, J - |i|)`
pub fn sigma(a: &[i32], cap: usize) -> Result<MultiIndex, IndexError> {
    let w = weight(a);
    if w > cap as i64 {
        return Err(IndexError::WeightExceedsJ { weight: w, cap: cap as i64 });
    }
    let mut out: MultiIndex = a[1..].to_vec();
    out.push((cap as i64 - w) as i32);
    Ok(out)
}

pub fn sigma_inverse(a: &[i32], cap: usize) -> Result<MultiIndex, IndexError> {
    let m = a.len();
    let first = cap as i64 - weight(a);
    if first < 0 {
        return Err(IndexError::WeightExceedsJ { weight: weight(a), cap: cap as i64 });
    }
    let mut out = Vec::with_capacity(m);
    out.push(first as i32);
    out.extend_from_slice(&a[..m - 1]);
    Ok(out)
}

/// `[i, j] = (i, j) - (I - |i|)(J - |j|)`
pub fn bracket(i: &[i32], j: &[i32], big_i: usize, big_j: usize) -> Result<i64, IndexError> {
    let (ri, rj) = remainders(i, j, big_i, big_j)?;
    Ok(dot(i, j)? - ri * rj)
}

/// `(i, j) + (I - |i|)(J - |j|)`: the pairing of the extended indices
/// `(i, I - |i|)` and `(j, J - |j|)`.
pub fn bracket_extended(i: &[i32], j: &[i32], big_i: usize, big_j: usize) -> Result<i64, IndexError> {
    let (ri, rj) = remainders(i, j, big_i, big_j)?;
    Ok(dot(i, j)? + ri * rj)
}

fn remainders(i: &[i32], j: &[i32], big_i: usize, big_j: usize) -> Result<(i64, i64), IndexError> {
    let (wi, wj) = (weight(i), weight(j));
    if wi > big_i as i64 {
        return Err(IndexError::WeightExceedsJ { weight: wi, cap: big_i as i64 });
    }
    if wj > big_j as i64 {
        return Err(IndexError::WeightExceedsJ { weight: wj, cap: big_j as i64 });
    }
    Ok((big_i as i64 - wi, big_j as i64 - wj))
}

pub(crate) fn sub(a: &[i32], b: &[i32]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[i32], b: &[i32]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Componentwise `a >= b`.
pub fn dominates(a: &[i32], b: &[i32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// All indices `b` with `lo <= b <= hi` componentwise, in lexicographic order.
pub fn index_box(lo: &[i32], hi: &[i32]) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if !dominates(hi, lo) {
        return out;
    }
    let mut cur = lo.to_vec();
    loop {
        out.push(cur.clone());
        let mut k = cur.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < hi[k] {
                cur[k] += 1;
                for t in k + 1..cur.len() {
                    cur[t] = lo[t];
                }
                break;
            }
        }
    }
}

/// The basis of V_J^(n): `(n-1)`-tuples of weight at most J in ascending lexicographic order.
#[derive(Clone, Debug)]
pub struct BasisSpace {
    pub n: usize,
    pub cap: usize,
    indices: Vec<MultiIndex>,
    ordinals: HashMap<MultiIndex, usize>,
}

impl BasisSpace {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, ordinal: usize) -> &[i32] {
        &self.indices[ordinal]
    }

    pub fn ordinal(&self, a: &[i32]) -> Option<usize> {
        self.ordinals.get(a).copied()
    }
}

pub fn enumerate_basis(n: usize, cap: usize) -> BasisSpace {
    assert!(n >= 2, "n must be at least 2");
    let m = n - 1;
    let indices: Vec<MultiIndex> = index_box(&vec![0; m], &vec![cap as i32; m])
        .into_iter()
        .filter(|a| weight(a) <= cap as i64)
        .collect();
    let ordinals = indices.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
    BasisSpace { n, cap, indices, ordinals }
}

/// `(x; q)_k`, including the reciprocal product for negative `k`.
pub fn qpochhammer<F: Field>(x: &F, q: &F, k: i64) -> Result<F, NumError> {
    let mut r = F::one();
    if k >= 0 {
        let mut t = x.clone();
        for _ in 0..k {
            r = r * &(F::one() - &t);
            t = t * q;
        }
        return Ok(r);
    }
    let mut t = x.clone() * &q.powi(k)?;
    for _ in 0..(-k) {
        let f = F::one() - &t;
        if f.is_zero() {
            return Err(NumError::PoleEncountered);
        }
        r = r * &f;
        t = t * q;
    }
    r.inv()
}

/// Gaussian binomial; zero outside `0 <= k <= m`.
pub fn qbinomial<F: Field>(m: i64, k: i64, q: &F) -> Result<F, NumError> {
    if k < 0 || k > m {
        return Ok(F::zero());
    }
    let num = qpochhammer(q, q, m)?;
    let den = qpochhammer(q, q, k)? * &qpochhammer(q, q, m - k)?;
    num.div(&den)
}

/// `Phi_q(gamma | beta; lambda, mu)`; zero unless `0 <= gamma <= beta`.
pub fn phi<F: Field>(gamma: &[i32], beta: &[i32], lambda: &F, mu: &F, q: &F) -> Result<F, NumError> {
    if gamma.iter().any(|&g| g < 0) || !dominates(beta, gamma) {
        return Ok(F::zero());
    }
    let diff = sub(beta, gamma);
    let (wg, wb) = (weight(gamma), weight(beta));
    let ratio = mu.div(lambda)?;
    let mut r = q.powi(qform_raw(&diff, gamma))? * &ratio.powi(wg)?;
    r = r * &qpochhammer(lambda, q, wg)? * &qpochhammer(&ratio, q, wb - wg)?;
    let den = qpochhammer(mu, q, wb)?;
    if den.is_zero() {
        return Err(NumError::PoleEncountered);
    }
    r = r.div(&den)?;
    for (&b, &g) in beta.iter().zip(gamma) {
        r = r * &qbinomial(b as i64, g as i64, q)?;
    }
    Ok(r)
}

/// `q^(Q(gamma, beta) - Q(beta, gamma)) Phi_q(gamma | beta; lambda, mu)`
pub fn phi_hat<F: Field>(gamma: &[i32], beta: &[i32], lambda: &F, mu: &F, q: &F) -> Result<F, NumError> {
    let p = phi(gamma, beta, lambda, mu, q)?;
    if p.is_zero() {
        return Ok(p);
    }
    Ok(q.powi(qform_raw(gamma, beta) - qform_raw(beta, gamma))? * &p)
}

/// The Ising-type weight `V_x(a, b)`; zero unless `a >= b` componentwise.
pub fn v_func<F: Field>(x: &F, q: &F, a: &[i32], b: &[i32]) -> Result<F, NumError> {
    if !dominates(a, b) {
        return Ok(F::zero());
    }
    let d = sub(a, b);
    let wd = weight(&d);
    let q2 = q.clone() * q;
    let e = 2 * qform_raw(a, b) - qform_raw(a, a) - qform_raw(b, b);
    let mut r = q.powi(e)? * &q.div(x)?.powi(wd)?;
    r = r * &qpochhammer(&(x.clone() * x), &q2, wd)?;
    for &di in &d {
        r = r.div(&qpochhammer(&q2, &q2, di as i64)?)?;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, ExactScalar};

    fn r(a: i64, b: i64) -> ExactScalar {
        rat(a, b).unwrap()
    }

    #[test]
    fn index_operations() {
        assert_eq!(weight(&[1, 2]), 3);
        assert_eq!(qform(&[1, 2], &[3, 4]).unwrap(), 4);
        assert_eq!(dot(&[1, 2], &[3, 4]).unwrap(), 11);
        assert_eq!(dot(&[1], &[3, 4]), Err(IndexError::LengthMismatch(1, 2)));
        assert_eq!(tau(&[1, 2, 3]), vec![3, 2, 1]);
        assert_eq!(tau(&[5]), vec![5]);
    }

    #[test]
    fn sigma_cases() {
        assert_eq!(sigma(&[1, 2], 5).unwrap(), vec![2, 2]);
        assert!(matches!(sigma(&[3, 3], 5), Err(IndexError::WeightExceedsJ { .. })));
        let b = enumerate_basis(3, 2);
        for a in b.indices() {
            assert_eq!(&sigma_inverse(&sigma(a, 2).unwrap(), 2).unwrap(), a);
        }
    }

    #[test]
    fn sigma_has_order_n() {
        for n in 2..=4 {
            for cap in 1..=3 {
                for a in enumerate_basis(n, cap).indices() {
                    let mut c = a.clone();
                    for _ in 0..n {
                        c = sigma(&c, cap).unwrap();
                    }
                    assert_eq!(&c, a);
                }
            }
        }
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket(&[0], &[0], 1, 1).unwrap(), -1);
        assert_eq!(bracket(&[1], &[1], 1, 1).unwrap(), 1);
        assert_eq!(bracket(&[1, 0], &[0, 1], 2, 2).unwrap(), -1);
        assert_eq!(bracket_extended(&[1, 0], &[0, 1], 2, 2).unwrap(), 1);
    }

    #[test]
    fn basis_examples() {
        let b = enumerate_basis(3, 2);
        let want: Vec<MultiIndex> =
            vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]];
        assert_eq!(b.indices(), &want[..]);
        assert_eq!(enumerate_basis(2, 1).indices(), &[vec![0], vec![1]][..]);
        assert_eq!(enumerate_basis(2, 3).len(), 4);
        assert_eq!(enumerate_basis(4, 3).len(), 20);
        assert_eq!(b.ordinal(&[1, 1]), Some(4));
    }

    #[test]
    fn pochhammer_and_binomial() {
        let (x, q) = (r(2, 3), r(5, 7));
        assert_eq!(qpochhammer(&x, &q, 0).unwrap(), r(1, 1));
        assert_eq!(
            qpochhammer(&x, &q, 2).unwrap(),
            (r(1, 1) - &x) * (r(1, 1) - &x * &q)
        );
        let q2 = &q * &q;
        assert_eq!(qpochhammer(&q2, &q2, -1), Err(NumError::PoleEncountered));
        assert_eq!(qbinomial(2, 1, &q).unwrap(), r(1, 1) + &q);
        assert_eq!(qbinomial(4, 0, &q).unwrap(), r(1, 1));
        assert_eq!(qbinomial(1, 2, &q).unwrap(), r(0, 1));
    }

    #[test]
    fn phi_examples() {
        let (l, m, q) = (r(1, 2), r(1, 3), r(3, 5));
        assert_eq!(phi(&[0], &[0], &l, &m, &q).unwrap(), r(1, 1));
        let a = phi(&[1], &[1], &l, &m, &q).unwrap();
        let b = phi(&[0], &[1], &l, &m, &q).unwrap();
        assert_eq!(a, r(1, 2));
        assert_eq!(b, r(1, 2));
        assert_eq!(phi(&[2], &[1], &l, &m, &q).unwrap(), r(0, 1));
        assert_eq!(phi(&[-1], &[1], &l, &m, &q).unwrap(), r(0, 1));
    }

    #[test]
    fn phi_hat_examples() {
        let (l, m, q) = (r(2, 7), r(3, 11), r(5, 3));
        assert_eq!(phi_hat(&[1], &[2], &l, &m, &q).unwrap(), phi(&[1], &[2], &l, &m, &q).unwrap());
        assert_eq!(
            phi_hat(&[0, 0], &[2, 1], &l, &m, &q).unwrap(),
            phi(&[0, 0], &[2, 1], &l, &m, &q).unwrap()
        );
        let (g, b) = ([1, 0], [1, 2]);
        let ratio = phi_hat(&g, &b, &l, &m, &q).unwrap().div(&phi(&g, &b, &l, &m, &q).unwrap()).unwrap();
        assert_eq!(ratio, q.powi(qform_raw(&g, &b) - qform_raw(&b, &g)).unwrap());
    }

    #[test]
    fn v_examples() {
        let (q, x) = (r(2, 1), r(3, 1));
        assert_eq!(v_func(&x, &q, &[2, 1], &[2, 1]).unwrap(), r(1, 1));
        assert_eq!(v_func(&x, &q, &[1], &[0]).unwrap(), r(16, 9));
        assert_eq!(v_func(&x, &q, &[0], &[1]).unwrap(), r(0, 1));
    }

    #[test]
    fn index_box_order() {
        assert_eq!(index_box(&[0, 1], &[1, 2]), vec![vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2]]);
        assert!(index_box(&[2], &[1]).is_empty());
    }
}
