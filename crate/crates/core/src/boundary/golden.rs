//! Printed closed forms of the boundary matrices, used as fixed oracles.

use super::{build_k, Family};
use crate::exactnum::{ExactScalar, Field, ParamPoint};
use crate::harness::{compare, sym, Eval, Tamper};
use crate::linalg::Matrix;
use crate::qkit::qpochhammer;
use crate::Result;

fn dense(rows: Vec<Vec<ExactScalar>>) -> Matrix<ExactScalar> {
    Matrix::from_dense(rows)
}

/// `n = 2`, `J = 1` matrices in the order right-upper, right-lower, left-upper, left-lower.
pub fn golden_n2(q: &ExactScalar, nu: &ExactScalar, w: &ExactScalar) -> Result<[Matrix<ExactScalar>; 4]> {
    let one = ExactScalar::one();
    let zero = ExactScalar::zero();
    let qn = q * nu;
    let w2 = w * w;
    let a = &one - &(&qn * w);
    let b = w - &qn;
    let ku = dense(vec![
        vec![one.clone(), (&qn * &(&one - &w2)).div(&(w * &a))?],
        vec![zero.clone(), b.div(&(w * &a))?],
    ]);
    let kd = dense(vec![
        vec![(w * &b).div(&a)?, zero.clone()],
        vec![(&one - &w2).div(&a)?, one.clone()],
    ]);
    let kbu = dense(vec![
        vec![one.clone(), (&w2 - &one).div(&(w * &b))?],
        vec![zero.clone(), a.div(&(w * &b))?],
    ]);
    let kbd = dense(vec![
        vec![(w * &a).div(&b)?, zero],
        vec![(&qn * &(&w2 - &one)).div(&b)?, one],
    ]);
    Ok([ku, kd, kbu, kbd])
}

/// `n = 3`, `J = 2` matrices in the order right-upper, right-lower, left-upper, left-lower,
/// written with `lambda = w/(nu q^2)`, `mu = 1/(w nu q^2)` and `p = q^2`.
pub fn golden_n3_j2(q: &ExactScalar, nu: &ExactScalar, w: &ExactScalar) -> Result<[Matrix<ExactScalar>; 4]> {
    let one = ExactScalar::one();
    let z = ExactScalar::zero();
    let p = q * q;
    let l = w.div(&(nu * &p))?;
    let m = (w * &(nu * &p)).inv()?;
    let b21 = &one + &p;
    let pp = |a: &ExactScalar, k: i64| qpochhammer(a, &p, k);
    let r = m.div(&l)?;
    let s = l.div(&m)?;
    let (r1, r2) = (pp(&r, 1)?, pp(&r, 2)?);
    let (s1, s2) = (pp(&s, 1)?, pp(&s, 2)?);
    let (l1, l2) = (pp(&l, 1)?, pp(&l, 2)?);
    let (m1, m2) = (pp(&m, 1)?, pp(&m, 2)?);

    let c1 = r1.div(&m1)?;
    let c2 = r2.div(&m2)?;
    let d1 = (&r * &l1).div(&m1)?;
    let d2 = (&(&r * &l1) * &r1).div(&m2)?;
    let d3 = (&(&r * &r) * &l2).div(&m2)?;
    let ku = dense(vec![
        vec![one.clone(), c1.clone(), c2.clone(), c1.clone(), c2.clone(), c2.clone()],
        vec![z.clone(), d1.clone(), &d2 * &b21, z.clone(), &p * &d2, z.clone()],
        vec![z.clone(), z.clone(), d3.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), z.clone(), d1.clone(), d2.clone(), &d2 * &b21],
        vec![z.clone(), z.clone(), z.clone(), z.clone(), d3.clone(), z.clone()],
        vec![z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), d3],
    ]);

    let a = l2.div(&m2)?;
    let x = (&(&l * &l1) * &r1).div(&m2)?;
    let e1 = l1.div(&m1)?;
    let f2 = (&(&l * &l) * &r2).div(&m2)?;
    let f1 = (&l * &r1).div(&m1)?;
    let kd = dense(vec![
        vec![a.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), a.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), a, z.clone(), z.clone(), z.clone()],
        vec![&x * &b21, &p * &x, z.clone(), e1.clone(), z.clone(), z.clone()],
        vec![z.clone(), x.clone(), &x * &b21, z.clone(), e1, z.clone()],
        vec![f2.clone(), f2.clone(), f2, f1.clone(), f1, one.clone()],
    ]);

    let y = (&(&m * &m1) * &s1).div(&l2)?;
    let g1 = (&m * &s1).div(&l1)?;
    let g2 = (&(&m * &m) * &s2).div(&l2)?;
    let h1 = m1.div(&l1)?;
    let h2 = m2.div(&l2)?;
    let kbu = dense(vec![
        vec![one.clone(), g1.clone(), g2.clone(), g1, g2.clone(), g2],
        vec![z.clone(), h1.clone(), &y * &b21, z.clone(), y.clone(), z.clone()],
        vec![z.clone(), z.clone(), h2.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), z.clone(), h1, &p * &y, &y * &b21],
        vec![z.clone(), z.clone(), z.clone(), z.clone(), h2.clone(), z.clone()],
        vec![z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), h2],
    ]);

    let bb = (&(&s * &s) * &m2).div(&l2)?;
    let zz = (&(&s * &m1) * &s1).div(&l2)?;
    let k1 = (&s * &m1).div(&l1)?;
    let t2 = s2.div(&l2)?;
    let t1 = s1.div(&l1)?;
    let kbd = dense(vec![
        vec![bb.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), bb.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
        vec![z.clone(), z.clone(), bb, z.clone(), z.clone(), z.clone()],
        vec![&zz * &b21, zz.clone(), z.clone(), k1.clone(), z.clone(), z.clone()],
        vec![z.clone(), &p * &zz, &zz * &b21, z.clone(), k1, z],
        vec![t2.clone(), t2.clone(), t2, t1.clone(), t1, one],
    ]);
    Ok([ku, kd, kbu, kbd])
}

/// Every family built by [`build_k`] equals its printed form, for `n = 2, J = 1` and `n = 3, J = 2`.
/// The tamper perturbs the built `n = 3` right-upper matrix.
pub fn check_golden(p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, nu, w): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "nu")?, sym(p, "w")?);
    for (n, spin, printed) in [(3, 2, golden_n3_j2(&q, &nu, &w)?), (2, 1, golden_n2(&q, &nu, &w)?)] {
        for (f, g) in Family::ALL.iter().zip(printed.iter()) {
            let mut k = build_k(n, spin, *f, &w, &nu, &q)?;
            if n == 3 && *f == Family::RightUpper {
                k = Tamper::apply(tamper, k);
            }
            if let Some(mut wit) = compare(f.id(), &k, g) {
                wit.detail = format!("{} n={} J={}", wit.detail, n, spin);
                return Ok(Some(wit));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    #[test]
    fn printed_matrices_match() {
        for (q, nu, w) in [((3, 2), (7, 3), (2, 9)), ((5, 11), (2, 7), (13, 4)), ((4, 3), (1, 5), (3, 8))] {
            let p = ParamPoint::new()
                .bind("q", rat(q.0, q.1).unwrap())
                .bind("nu", rat(nu.0, nu.1).unwrap())
                .bind("w", rat(w.0, w.1).unwrap());
            assert_eq!(check_golden(&p, None).unwrap(), None);
        }
    }
}
