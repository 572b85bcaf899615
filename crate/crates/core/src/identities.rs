//! The star-star relation, the sums of V, orthogonality and the basic
//! hypergeometric summation formulas, checked term by term as finite sums.
//!
//! Every verifier walks its index lattice in lexicographic order and numbers
//! the instances from 0. A [`Tamper`] adds its delta to the left-hand side of
//! the instance whose number equals `tamper.row`.

use crate::boundary::mu_fn;
use crate::error::Result;
use crate::exactnum::{ExactScalar, Field, ParamPoint};
use crate::harness::{params, run_check, sym, Budget, CheckRecord, Eval, Tamper, Witness};
use crate::qkit::{dominates, index_box, qpochhammer, v_func, weight, MultiIndex};

/// All tuples in `[lo, hi]` componentwise, lexicographic.
fn lattice(lo: &[i32], hi: &[i32]) -> Vec<MultiIndex> {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Vec::new();
    }
    let shifted = index_box(&vec![0; lo.len()], &hi.iter().zip(lo).map(|(h, l)| h - l).collect::<Vec<_>>());
    shifted.into_iter().map(|t| t.iter().zip(lo).map(|(a, b)| a + b).collect()).collect()
}

/// `[0, cap]^m`
pub fn tuples(m: usize, cap: i32) -> Vec<MultiIndex> {
    lattice(&vec![0; m], &vec![cap; m])
}

fn vmax(a: &[i32], b: &[i32]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

fn vmin(a: &[i32], b: &[i32]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| *x.min(y)).collect()
}

fn mismatch(ordinal: usize, what: String, lhs: &ExactScalar, rhs: &ExactScalar) -> Option<Witness> {
    (lhs != rhs).then(|| Witness::new(vec![ordinal], what, lhs, rhs))
}

/// Star-star relation for all `a >= b >= d`, `a >= c >= d` in `[0, cap]^m`.
pub fn check_star_star(m: usize, cap: i32, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, x, xp, y, yp): (ExactScalar, ExactScalar, ExactScalar, ExactScalar, ExactScalar) =
        (sym(p, "q")?, sym(p, "x")?, sym(p, "xp")?, sym(p, "y")?, sym(p, "yp")?);
    let v = |s: &ExactScalar, a: &[i32], b: &[i32]| v_func(s, &q, a, b);
    let (x_yp, yp_xp, y_x, y_xp, y_yp, x_xp) = (x.div(&yp)?, yp.div(&xp)?, y.div(&x)?, y.div(&xp)?, y.div(&yp)?, x.div(&xp)?);
    let t = tuples(m, cap);
    let mut ord = 0;
    for a in &t {
        for b in t.iter().filter(|b| dominates(a, b)) {
            for c in t.iter().filter(|c| dominates(a, c)) {
                for d in t.iter().filter(|d| dominates(b, d) && dominates(c, d)) {
                    let mut lhs = ExactScalar::zero();
                    for mm in lattice(&vmax(b, c), a) {
                        lhs = lhs + v(&x_yp, a, &mm)? * &v(&yp_xp, &mm, b)? * &v(&y_x, &mm, c)?.div(&v(&y_xp, &mm, d)?)?;
                    }
                    lhs = lhs * &v(&y_yp, b, d)?.div(&v(&y_yp, a, c)?)?;
                    let mut rhs = ExactScalar::zero();
                    for mm in lattice(d, &vmin(b, c)) {
                        rhs = rhs + v(&x_yp, &mm, d)? * &v(&yp_xp, c, &mm)? * &v(&y_x, b, &mm)?.div(&v(&y_xp, a, &mm)?)?;
                    }
                    rhs = rhs * &v(&x_xp, a, b)?.div(&v(&x_xp, c, d)?)?;
                    let lhs = Tamper::apply_scalar(tamper, ord, lhs);
                    if let Some(w) = mismatch(ord, format!("star-star a={:?} b={:?} c={:?} d={:?}", a, b, c, d), &lhs, &rhs) {
                        return Ok(Some(w));
                    }
                    ord += 1;
                }
            }
        }
    }
    Ok(None)
}

pub fn verify_star_star(m: usize, cap: i32, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("m", m.to_string()), ("cap", cap.to_string())]);
    run_check("star_star", ps, &["q", "x", "xp", "y", "yp"], budget, |p| check_star_star(m, cap, p, tamper))
}

/// First sum of V for all `m <= b <= c` in `[0, cap]^{n-1}`; the sum over `d >= c`
/// runs over the support of `V_{q^-J}(d, b)`.
pub fn check_sum1(n: usize, spin: usize, cap: i32, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, y, z): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "y")?, sym(p, "z")?);
    let v = |s: &ExactScalar, a: &[i32], b: &[i32]| v_func(s, &q, a, b);
    let (nn, j) = (n as i64, spin as i64);
    let qmj = q.powi(-j)?;
    let qn = q.powi(nn)?;
    let y_z = y.div(&z)?;
    let arg_d = y_z.clone() * &q.powi(nn - j)?;
    let mu = mu_fn(n, spin, &z, &y, &q)?;
    let (qn_z, yqn_z, z_y, qnj_z) = (qn.div(&z)?, y_z.clone() * &qn, z.div(&y)?, q.powi(nn - j)?.div(&z)?);
    let t = tuples(n - 1, cap);
    let mut ord = 0;
    for m in &t {
        for b in t.iter().filter(|b| dominates(b, m)) {
            for c in t.iter().filter(|c| dominates(c, b)) {
                let top = vec![(j + weight(b)) as i32; n - 1];
                let mut lhs = ExactScalar::zero();
                for d in lattice(c, &top) {
                    let e: i64 = (1..n).map(|k| k as i64 * (d[k - 1] - c[k - 1]) as i64).sum();
                    let f = q.powi(-2 * e + nn * (weight(&d) - weight(c)))?;
                    let num = v(&qmj, &d, b)? * &v(&y, &d, c)?;
                    let den = v(&z, &d, b)? * &v(&arg_d, &d, m)?;
                    if num.is_zero() {
                        continue;
                    }
                    lhs = lhs + f * &num.div(&den)?;
                }
                let rhs_num = mu.clone() * &v(&qmj, c, b)? * &v(&qn_z, b, m)?;
                let rhs_den = v(&yqn_z, b, m)? * &v(&z_y, c, b)? * &v(&qnj_z, c, m)?;
                let rhs = rhs_num.div(&rhs_den)?;
                let lhs = Tamper::apply_scalar(tamper, ord, lhs);
                if let Some(w) = mismatch(ord, format!("first sum of V m={:?} b={:?} c={:?}", m, b, c), &lhs, &rhs) {
                    return Ok(Some(w));
                }
                ord += 1;
            }
        }
    }
    Ok(None)
}

pub fn verify_sum1(n: usize, spin: usize, cap: i32, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("n", n.to_string()), ("J", spin.to_string()), ("cap", cap.to_string())]);
    run_check("sum1", ps, &["q", "y", "z"], budget, |p| check_sum1(n, spin, cap, p, tamper))
}

/// Second sum of V for all `a <= b`, `a <= c` in `[0, cap]^m`.
pub fn check_sum2(m: usize, cap: i32, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, x, xp, y, yp): (ExactScalar, ExactScalar, ExactScalar, ExactScalar, ExactScalar) =
        (sym(p, "q")?, sym(p, "x")?, sym(p, "xp")?, sym(p, "y")?, sym(p, "yp")?);
    let v = |s: &ExactScalar, a: &[i32], b: &[i32]| v_func(s, &q, a, b);
    let (x_yp, yp_xp, y_x, y_xp, y_yp, x_xp) = (x.div(&yp)?, yp.div(&xp)?, y.div(&x)?, y.div(&xp)?, y.div(&yp)?, x.div(&xp)?);
    let t = tuples(m, cap);
    let mut ord = 0;
    for a in &t {
        for b in t.iter().filter(|b| dominates(b, a)) {
            for c in t.iter().filter(|c| dominates(c, a)) {
                let mut s = ExactScalar::zero();
                for mm in lattice(a, &vmin(b, c)) {
                    s = s + v(&x_yp, &mm, a)? * &v(&yp_xp, b, &mm)? * &v(&y_x, c, &mm)?.div(&v(&y_xp, c, &mm)?)?;
                }
                let lhs = v(&y_yp, c, b)?.div(&v(&y_yp, c, a)?)? * &s;
                let rhs = (v(&x_xp, b, a)? * &v(&y_x, c, b)?).div(&v(&y_xp, c, a)?)?;
                let lhs = Tamper::apply_scalar(tamper, ord, lhs);
                if let Some(w) = mismatch(ord, format!("second sum of V a={:?} b={:?} c={:?}", a, b, c), &lhs, &rhs) {
                    return Ok(Some(w));
                }
                ord += 1;
            }
        }
    }
    Ok(None)
}

pub fn verify_sum2(m: usize, cap: i32, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("m", m.to_string()), ("cap", cap.to_string())]);
    run_check("sum2", ps, &["q", "x", "xp", "y", "yp"], budget, |p| check_sum2(m, cap, p, tamper))
}

/// `sum_{b <= k <= a} x^{|k|-|b|} y^{|k|-|a|} V_x(a, k) V_y(k, b) = V_{xy}(a, b)`.
pub fn check_orthogonality(m: usize, cap: i32, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, x, y): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "x")?, sym(p, "y")?);
    let xy = x.clone() * &y;
    let t = tuples(m, cap);
    let mut ord = 0;
    for a in &t {
        for b in t.iter().filter(|b| dominates(a, b)) {
            let mut lhs = ExactScalar::zero();
            for k in lattice(b, a) {
                let f = x.powi(weight(&k) - weight(b))? * &y.powi(weight(&k) - weight(a))?;
                lhs = lhs + f * &v_func(&x, &q, a, &k)? * &v_func(&y, &q, &k, b)?;
            }
            let rhs = v_func(&xy, &q, a, b)?;
            let lhs = Tamper::apply_scalar(tamper, ord, lhs);
            if let Some(w) = mismatch(ord, format!("orthogonality a={:?} b={:?}", a, b), &lhs, &rhs) {
                return Ok(Some(w));
            }
            ord += 1;
        }
    }
    Ok(None)
}

pub fn verify_orthogonality(m: usize, cap: i32, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("m", m.to_string()), ("cap", cap.to_string())]);
    run_check("orthogonality", ps, &["q", "x", "y"], budget, |p| check_orthogonality(m, cap, p, tamper))
}

fn poch(x: &ExactScalar, q: &ExactScalar, k: i64) -> Result<ExactScalar> {
    Ok(qpochhammer(x, q, k)?)
}

fn product(xs: &[ExactScalar]) -> ExactScalar {
    xs.iter().fold(ExactScalar::one(), |acc, x| acc * x)
}

/// The summation formulas over base `q`: q-binomial, q-Vandermonde, q-Pfaff-Saalschutz,
/// its two m-dimensional extensions and the composition sum, for `n <= 4`, `m <= 3`.
pub fn check_appendix_b(p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let names = ["q", "a", "b", "c", "z", "z1", "z2", "z3"];
    let v = names.iter().map(|s| sym::<ExactScalar>(p, s)).collect::<Result<Vec<_>>>()?;
    let (q, a, b, c, z) = (&v[0], &v[1], &v[2], &v[3], &v[4]);
    let zs_all = &v[5..8];
    let one = ExactScalar::one();
    let mut ord = 0;
    let mut check = |what: String, lhs: ExactScalar, rhs: ExactScalar| -> Option<Witness> {
        let lhs = Tamper::apply_scalar(tamper, ord, lhs);
        let w = mismatch(ord, what, &lhs, &rhs);
        ord += 1;
        w
    };
    for nn in 0..=4i64 {
        let qmn = q.powi(-nn)?;

        let mut lhs = ExactScalar::zero();
        for k in 0..=nn {
            lhs = lhs + poch(&qmn, q, k)?.div(&poch(q, q, k)?)? * &z.powi(k)?;
        }
        if let Some(w) = check(format!("q-binomial n={}", nn), lhs, poch(&(z * &qmn), q, nn)?) {
            return Ok(Some(w));
        }

        let mut lhs = ExactScalar::zero();
        for k in 0..=nn {
            lhs = lhs + (poch(a, q, k)? * &poch(&qmn, q, k)?).div(&(poch(c, q, k)? * &poch(q, q, k)?))? * &q.powi(k)?;
        }
        let rhs = poch(&c.div(a)?, q, nn)?.div(&poch(c, q, nn)?)? * &a.powi(nn)?;
        if let Some(w) = check(format!("q-Vandermonde n={}", nn), lhs, rhs) {
            return Ok(Some(w));
        }

        let abc = (a * b).div(c)? * &q.powi(1 - nn)?;
        let mut lhs = ExactScalar::zero();
        for k in 0..=nn {
            let num = poch(a, q, k)? * &poch(b, q, k)? * &poch(&qmn, q, k)?;
            let den = poch(c, q, k)? * &poch(&abc, q, k)? * &poch(q, q, k)?;
            lhs = lhs + num.div(&den)? * &q.powi(k)?;
        }
        let rhs = (poch(&c.div(a)?, q, nn)? * &poch(&c.div(b)?, q, nn)?).div(&(poch(c, q, nn)? * &poch(&c.div(&(a * b))?, q, nn)?))?;
        if let Some(w) = check(format!("q-Pfaff-Saalschutz n={}", nn), lhs, rhs) {
            return Ok(Some(w));
        }

        for m in 1..=3usize {
            let zs = &zs_all[..m];
            let zp = product(zs);
            let arg = b.div(c)? * &q.powi(1 - nn)? * &zp;
            let mut lhs = ExactScalar::zero();
            for k in tuples(m, nn as i32).into_iter().filter(|k| weight(k) <= nn) {
                let kk = weight(&k);
                let mut t = q.powi(kk)? * &poch(&qmn, q, kk)? * &poch(b, q, kk)?;
                t = t.div(&(poch(c, q, kk)? * &poch(&arg, q, kk)?))?;
                for (jx, zj) in zs.iter().enumerate() {
                    t = t * &poch(zj, q, k[jx] as i64)?.div(&poch(q, q, k[jx] as i64)?)? * &zj.powi(weight(&k[..jx]))?;
                }
                lhs = lhs + t;
            }
            let rhs = (poch(&c.div(&zp)?, q, nn)? * &poch(&c.div(b)?, q, nn)?)
                .div(&(poch(c, q, nn)? * &poch(&c.div(&(b * &zp))?, q, nn)?))?;
            if let Some(w) = check(format!("m-dimensional Pfaff-Saalschutz (second) n={} m={}", nn, m), lhs, rhs) {
                return Ok(Some(w));
            }
        }
    }

    for m in 1..=3usize {
        for ns in tuples(m, 3) {
            let big_n = weight(&ns);
            let arg = (a * b).div(c)? * &q.powi(1 - big_n)?;
            let mut lhs = ExactScalar::zero();
            for k in lattice(&vec![0; m], &ns) {
                let kk = weight(&k);
                let cross: i64 = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).map(|(i, j)| k[i] as i64 * ns[j] as i64).sum();
                let mut t = q.powi(kk - cross)? * &poch(a, q, kk)? * &poch(b, q, kk)?;
                t = t.div(&(poch(c, q, kk)? * &poch(&arg, q, kk)?))?;
                for i in 0..m {
                    t = t * &poch(&q.powi(-(ns[i] as i64))?, q, k[i] as i64)?.div(&poch(q, q, k[i] as i64)?)?;
                }
                lhs = lhs + t;
            }
            let rhs = (poch(&c.div(a)?, q, big_n)? * &poch(&c.div(b)?, q, big_n)?)
                .div(&(poch(c, q, big_n)? * &poch(&c.div(&(a * b))?, q, big_n)?))?;
            if let Some(w) = check(format!("m-dimensional Pfaff-Saalschutz (first) n={:?}", ns), lhs, rhs) {
                return Ok(Some(w));
            }
        }
        let zs = &zs_all[..m];
        let zp = product(zs);
        for l in 0..=3i64 {
            let mut lhs = ExactScalar::zero();
            for k in tuples(m, l as i32).into_iter().filter(|k| weight(k) == l) {
                let mut t = one.clone();
                for (jx, zj) in zs.iter().enumerate() {
                    t = t * &zj.powi(weight(&k[..jx]))? * &poch(zj, q, k[jx] as i64)?.div(&poch(q, q, k[jx] as i64)?)?;
                }
                lhs = lhs + t;
            }
            let rhs = poch(&zp, q, l)?.div(&poch(q, q, l)?)?;
            if let Some(w) = check(format!("composition sum m={} l={}", m, l), lhs, rhs) {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

pub fn verify_appendix_b(budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("appendix_b", params(&[("n_max", "4".into()), ("m_max", "3".into())]), &["q", "a", "b", "c", "z", "z1", "z2", "z3"], budget, |p| {
        check_appendix_b(p, tamper)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    fn r(a: i64, b: i64) -> ExactScalar {
        rat(a, b).unwrap()
    }

    fn pt(kv: &[(&str, (i64, i64))]) -> ParamPoint {
        kv.iter().fold(ParamPoint::new(), |p, (k, v)| p.bind(k, r(v.0, v.1)))
    }

    fn five() -> ParamPoint {
        pt(&[("q", (3, 2)), ("x", (5, 7)), ("xp", (2, 9)), ("y", (7, 3)), ("yp", (4, 5))])
    }

    #[test]
    fn lattice_enumeration() {
        assert_eq!(tuples(2, 1), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(lattice(&[1, 0], &[2, 1]).len(), 4);
        assert!(lattice(&[2], &[1]).is_empty());
    }

    #[test]
    fn star_star_and_sum2() {
        for m in [1, 2] {
            assert_eq!(check_star_star(m, 2, &five(), None).unwrap(), None);
            assert_eq!(check_sum2(m, 2, &five(), None).unwrap(), None);
        }
        let t = Tamper { row: 3, col: 0, delta: r(1, 2) };
        assert_eq!(check_star_star(1, 2, &five(), Some(&t)).unwrap().unwrap().indices, vec![3]);
    }

    #[test]
    fn star_star_at_zero_is_one() {
        // a = b = c = d = 0 is the first instance; both sides are 1.
        let t = Tamper { row: 0, col: 0, delta: r(1, 1) };
        let w = check_star_star(1, 0, &five(), Some(&t)).unwrap().unwrap();
        assert_eq!((w.lhs.as_str(), w.rhs.as_str()), ("2", "1"));
    }

    #[test]
    fn first_sum() {
        let p = pt(&[("q", (3, 2)), ("y", (5, 7)), ("z", (2, 9))]);
        assert_eq!(check_sum1(2, 2, 2, &p, None).unwrap(), None);
        assert_eq!(check_sum1(3, 2, 1, &p, None).unwrap(), None);
    }

    #[test]
    fn mu_at_n2() {
        let (q, y, z) = (r(3, 2), r(5, 7), r(2, 9));
        let one = r(1, 1);
        let j = 2;
        let z2 = &z * &z;
        let rr = z2.div(&(&y * &y)).unwrap();
        let q2 = &q * &q;
        let want = ((&one - &(&z2 * &q2.inv().unwrap())) * (&one - &(&rr * &q2.powi(j - 1).unwrap())))
            .div(&((&one - &(&z2 * &q2.powi(j - 1).unwrap())) * (&one - &(&rr * &q2.inv().unwrap()))))
            .unwrap();
        assert_eq!(mu_fn(2, j as usize, &z, &y, &q).unwrap(), want);
    }

    #[test]
    fn orthogonality() {
        let p = pt(&[("q", (3, 2)), ("x", (5, 7)), ("y", (2, 9))]);
        assert_eq!(check_orthogonality(1, 3, &p, None).unwrap(), None);
        assert_eq!(check_orthogonality(2, 2, &p, None).unwrap(), None);
    }

    #[test]
    fn appendix_b() {
        let p = pt(&[("q", (3, 2)), ("a", (5, 7)), ("b", (2, 9)), ("c", (7, 3)), ("z", (4, 5)), ("z1", (3, 11)), ("z2", (13, 6)), ("z3", (5, 4))]);
        assert_eq!(check_appendix_b(&p, None).unwrap(), None);
        let t = Tamper { row: 40, col: 0, delta: r(1, 9) };
        assert_eq!(check_appendix_b(&p, Some(&t)).unwrap().unwrap().indices, vec![40]);
    }

    #[test]
    fn q_binomial_n2() {
        let (q, z) = (r(3, 2), r(5, 7));
        let one = r(1, 1);
        let qm2 = q.powi(-2).unwrap();
        let lhs = &one
            + &(qpochhammer(&qm2, &q, 1).unwrap().div(&qpochhammer(&q, &q, 1).unwrap()).unwrap() * &z)
            + qpochhammer(&qm2, &q, 2).unwrap().div(&qpochhammer(&q, &q, 2).unwrap()).unwrap() * &(&z * &z);
        assert_eq!(lhs, qpochhammer(&(&z * &qm2), &q, 2).unwrap());
    }
}
