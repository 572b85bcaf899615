//! Stochastic R-matrices, their symmetric form, L-operators, crossing data and
//! the non-difference R-matrix, with verifiers for the bulk identities.
//!
//! Spectral parameters are always passed as squares (`u = x^2`), which keeps
//! every entry rational. The operator `S_{I,J}(u)` acts on `V_I (x) V_J`; its
//! entry at row `(i, j)` and column `(i', j')` is the weight of the transition
//! from `|i', j'>` to `|i, j>`, so every column sums to one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exactnum::{ExactScalar, Field, Jet, ParamPoint};
use crate::harness::{compare, compare_scalar, params, run_check, run_fixed, sym, Budget, CheckRecord, Eval, Tamper, Witness};
use crate::linalg::Matrix;
use crate::qkit::{
    add, bracket_extended, dominates, enumerate_basis, index_box, phi, qform_raw, qpochhammer, sigma, sub, tau,
    v_func, weight, BasisSpace, MultiIndex,
};
use crate::qkit::dot_raw;

/// Rank `n` of `sl_n` and the spins `I`, `J` of the two tensor factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub n: usize,
    pub i: usize,
    pub j: usize,
}

impl ModelConfig {
    pub fn new(n: usize, i: usize, j: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("n = {} must be at least 2", n)));
        }
        if i < 1 || j < 1 {
            return Err(Error::InvalidConfig(format!("spins I = {}, J = {} must be at least 1", i, j)));
        }
        Ok(ModelConfig { n, i, j })
    }

    /// The configuration with the two factors exchanged.
    pub fn swapped(&self) -> Self {
        ModelConfig { n: self.n, i: self.j, j: self.i }
    }

    pub fn bases(&self) -> (BasisSpace, BasisSpace) {
        (enumerate_basis(self.n, self.i), enumerate_basis(self.n, self.j))
    }

    pub fn dims(&self) -> (usize, usize) {
        let (a, b) = self.bases();
        (a.len(), b.len())
    }

    /// Crossing shift `r = q^n`.
    pub fn crossing_r<F: Field>(&self, q: &F) -> Result<F> {
        Ok(q.powi(self.n as i64)?)
    }
}

type Sector<'a> = Vec<(usize, &'a [i32], &'a [i32])>;

/// Pairs `(i, j)` grouped by the conserved total `i + j`.
fn pair_sectors<'a>(bi: &'a BasisSpace, bj: &'a BasisSpace) -> BTreeMap<MultiIndex, Sector<'a>> {
    let mut out: BTreeMap<MultiIndex, Sector<'a>> = BTreeMap::new();
    let dj = bj.len();
    for (a, i) in bi.indices().iter().enumerate() {
        for (b, j) in bj.indices().iter().enumerate() {
            out.entry(add(i, j)).or_default().push((a * dj + b, i, j));
        }
    }
    out
}

/// `S_{I,J}(u)` from the double-Phi sum over each conservation sector.
pub fn build_s<F: Field>(cfg: &ModelConfig, u: &F, q: &F) -> Result<Matrix<F>> {
    let (bi, bj) = cfg.bases();
    let (si, sj) = (cfg.i as i64, cfg.j as i64);
    let q2 = q.clone() * q;
    let lam1 = q.powi(sj - si)?.div(u)?;
    let mu1 = q.powi(-si - sj)?.div(u)?;
    let lam2 = u.div(&q.powi(si + sj)?)?;
    let mu2 = q.powi(-2 * sj)?;
    let d = bi.len() * bj.len();
    let mut out = Matrix::zeros(d, d);
    let zero = vec![0; cfg.n - 1];
    for (tot, members) in pair_sectors(&bi, &bj) {
        let ms = index_box(&zero, &tot);
        let mut second: Vec<Vec<F>> = Vec::with_capacity(ms.len());
        for m in &ms {
            let rest = sub(&tot, m);
            let row = members.iter().map(|(_, _, jp)| phi(&rest, jp, &lam2, &mu2, &q2)).collect::<std::result::Result<Vec<F>, _>>()?;
            second.push(row);
        }
        for (r, _, j) in &members {
            let mut acc = vec![F::zero(); members.len()];
            for (k, m) in ms.iter().enumerate() {
                if !dominates(m, j) {
                    continue;
                }
                let a = phi(&sub(m, j), m, &lam1, &mu1, &q2)?;
                if a.is_zero() {
                    continue;
                }
                for (c, b) in second[k].iter().enumerate() {
                    if !b.is_zero() {
                        acc[c] = acc[c].clone() + &(a.clone() * b);
                    }
                }
            }
            for (c, v) in acc.into_iter().enumerate() {
                out.set(*r, members[c].0, v);
            }
        }
    }
    Ok(out)
}

/// `S_21(u) = P S_{J,I}(u) P` on `V_I (x) V_J`.
pub fn build_s21<F: Field>(cfg: &ModelConfig, u: &F, q: &F) -> Result<Matrix<F>> {
    let (di, dj) = cfg.dims();
    Ok(Matrix::embed(&build_s(&cfg.swapped(), u, q)?, &[1, 0], &[di, dj]))
}

/// The permutation `P: V_I (x) V_J -> V_J (x) V_I`.
pub fn permutation<F: Field>(cfg: &ModelConfig) -> Matrix<F> {
    let (di, dj) = cfg.dims();
    Matrix::swap(di, dj)
}

/// Symmetric form `Rbar_{I,J}(x)`; takes `x` itself, not its square.
pub fn build_rbar<F: Field>(cfg: &ModelConfig, x: &F, q: &F) -> Result<Matrix<F>> {
    let (bi, bj) = cfg.bases();
    let s = build_s(cfg, &(x.clone() * x), q)?;
    let dj = bj.len();
    let (si, sj) = (cfg.i as i64, cfg.j as i64);
    let mut out = Matrix::zeros(s.rows(), s.cols());
    for (r, c, v) in s.entries() {
        let (i, j) = (bi.index(r / dj), bj.index(r % dj));
        let (ip, jp) = (bi.index(c / dj), bj.index(c % dj));
        let qe = dot_raw(ip, jp) - dot_raw(i, j) + sj * weight(i) - si * weight(jp) - qform_raw(j, i) + qform_raw(ip, jp);
        let f = x.powi(weight(i) - weight(ip))? * &q.powi(qe)?;
        out.set(r, c, f * v);
    }
    Ok(out)
}

/// Which tensor factor of the L-operator carries the fundamental representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LSide {
    /// `L_{1,J}` on `V_1 (x) V_J`.
    FirstFundamental,
    /// `L_{J,1}` on `V_J (x) V_1`.
    SecondFundamental,
}

/// Position `alpha` of a fundamental basis vector: 0 for the zero vector, `a` for `e_a`.
fn alpha_of(e: &[i32]) -> usize {
    e.iter().position(|&x| x == 1).map_or(0, |k| k + 1)
}

fn prefix(j: &[i32], k: usize) -> i64 {
    weight(&j[..k.min(j.len())])
}

/// Closed-form L-operators; they coincide with `S_{1,J}` and `S_{J,1}`.
pub fn build_l<F: Field>(n: usize, spin: usize, side: LSide, u: &F, q: &F) -> Result<Matrix<F>> {
    let b1 = enumerate_basis(n, 1);
    let bj = enumerate_basis(n, spin);
    let (d1, dj) = (b1.len(), bj.len());
    let big_j = spin as i64;
    let one = F::one();
    let den = one.clone() - &q.powi(-1 - big_j)?.div(u)?;
    let mut out = Matrix::zeros(d1 * dj, d1 * dj);
    for (ra, ea) in b1.indices().iter().enumerate() {
        for (rj, j) in bj.indices().iter().enumerate() {
            for (cb, eb) in b1.indices().iter().enumerate() {
                for (cl, l) in bj.indices().iter().enumerate() {
                    let (a, b) = (alpha_of(ea), alpha_of(eb));
                    let ja = if a > 0 { j[a - 1] as i64 } else { 0 };
                    let d0a = i64::from(a == 0);
                    let d0b = i64::from(b == 0);
                    let wj = weight(j);
                    let wea = weight(ea);
                    let web = weight(eb);
                    let v = if a == b {
                        if j != l {
                            continue;
                        }
                        let lead = match side {
                            LSide::FirstFundamental => q.powi(2 * wea * (prefix(j, a) - big_j))?,
                            LSide::SecondFundamental => {
                                q.powi(-2 * wj + 2 * wea * weight(&j[a.saturating_sub(1)..]))?
                            }
                        };
                        let t = one.clone() - &q.powi(big_j - 1 - 2 * ja - 2 * d0a * (big_j - wj))?.div(u)?;
                        (lead * &t).div(&den)?
                    } else {
                        if add(j, ea) != add(l, eb) {
                            continue;
                        }
                        let (e, upow, inner) = match (side, a > b) {
                            (LSide::FirstFundamental, true) => (
                                2 * (prefix(j, a - 1) - big_j - 1) + d0b * (big_j + 1),
                                -d0b,
                                2 + 2 * ja,
                            ),
                            (LSide::FirstFundamental, false) => (
                                2 * prefix(j, a.saturating_sub(1)) - 1 - big_j - d0a * (big_j + 1 - 2 * wj),
                                -wea,
                                2 * (1 + ja + d0a * (big_j - wj)),
                            ),
                            (LSide::SecondFundamental, true) => {
                                (-1 + big_j - d0b * (1 + big_j) - 2 * prefix(j, a), -web, 2 + 2 * ja)
                            }
                            (LSide::SecondFundamental, false) => (
                                -2 + d0a * (1 - big_j) - 2 * wea * prefix(j, a),
                                -d0a,
                                2 + 2 * ja + 2 * d0a * (big_j - wj),
                            ),
                        };
                        let t = one.clone() - &q.powi(inner)?;
                        -(q.powi(e)? * &u.powi(upow)? * &t).div(&den)?
                    };
                    let (r, c) = match side {
                        LSide::FirstFundamental => (ra * dj + rj, cb * dj + cl),
                        LSide::SecondFundamental => (rj * d1 + ra, cl * d1 + cb),
                    };
                    out.set(r, c, v);
                }
            }
        }
    }
    Ok(out)
}

/// Diagonal of `M`: `q^(2 sum_k (n - k) i_k)` over the basis of V_J^(n).
pub fn m_diagonal<F: Field>(n: usize, spin: usize, q: &F) -> Result<Vec<F>> {
    enumerate_basis(n, spin)
        .indices()
        .iter()
        .map(|i| {
            let e: i64 = i.iter().enumerate().map(|(k, &ik)| 2 * (n - 1 - k) as i64 * ik as i64).sum();
            Ok(q.powi(e)?)
        })
        .collect()
}

pub fn build_m<F: Field>(n: usize, spin: usize, q: &F) -> Result<Matrix<F>> {
    Ok(Matrix::diagonal(&m_diagonal(n, spin, q)?))
}

/// The crossing scalar `g_{I,J}^(n)(u)`.
pub fn crossing_g<F: Field>(cfg: &ModelConfig, u: &F, q: &F) -> Result<F> {
    let (si, sj, n) = (cfg.i as i64, cfg.j as i64, cfg.n as i64);
    let q2 = q.clone() * q;
    let p = |e: i64| -> Result<F> { Ok(qpochhammer(&(u.clone() * &q.powi(e)?), &q2, si)?) };
    let num = p(2 - si - sj)? * &p(2 * n - si + sj)?;
    let den = p(2 - si + sj)? * &p(2 * n - si - sj)?;
    Ok(num.div(&den)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TildeMethod {
    /// `((S^{t_2})^{-1})^{t_2}`
    TransposeInverse,
    /// `g_{J,I}(z)^{-1} M_2^{-1} S_21(z) M_2` with `z = 1/(q^{2n} u)`.
    Crossing,
}

/// `Stilde_{I,J}(u)` by either construction.
pub fn build_rtilde<F: Field>(cfg: &ModelConfig, u: &F, q: &F, method: TildeMethod) -> Result<Matrix<F>> {
    let (di, dj) = cfg.dims();
    match method {
        TildeMethod::TransposeInverse => {
            let pt = build_s(cfg, u, q)?.partial_transpose(&[di, dj], 1);
            let inv = pt.inverse().map_err(|e| match e {
                Error::Singular => Error::SingularPartialTranspose,
                other => other,
            })?;
            Ok(inv.partial_transpose(&[di, dj], 1))
        }
        TildeMethod::Crossing => {
            let z = (q.powi(2 * cfg.n as i64)? * u).inv()?;
            let md = m_diagonal(cfg.n, cfg.j, q)?;
            let md_inv = md.iter().map(|v| v.inv()).collect::<std::result::Result<Vec<F>, _>>()?;
            let m2 = Matrix::embed(&Matrix::diagonal(&md), &[1], &[di, dj]);
            let m2_inv = Matrix::embed(&Matrix::diagonal(&md_inv), &[1], &[di, dj]);
            let g = crossing_g(&cfg.swapped(), &z, q)?;
            Ok(Matrix::product([&m2_inv, &build_s21(cfg, &z, q)?, &m2]).scale(&g.inv()?))
        }
    }
}

fn config_params(cfg: &ModelConfig) -> Vec<(String, String)> {
    params(&[("n", cfg.n.to_string()), ("I", cfg.i.to_string()), ("J", cfg.j.to_string())])
}

/// `S_12(u/v) S_13(u/w) S_23(v/w) = S_23(v/w) S_13(u/w) S_12(u/v)` on `V_I (x) V_J (x) V_K`.
pub fn check_ybe(n: usize, spins: [usize; 3], p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let [si, sj, sk] = spins;
    let q: ExactScalar = sym(p, "q")?;
    let (u, v, w): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "u")?, sym(p, "v")?, sym(p, "w")?);
    let dims = [enumerate_basis(n, si).len(), enumerate_basis(n, sj).len(), enumerate_basis(n, sk).len()];
    let s12 = Matrix::embed(&build_s(&ModelConfig::new(n, si, sj)?, &u.div(&v)?, &q)?, &[0, 1], &dims);
    let s13 = Matrix::embed(&build_s(&ModelConfig::new(n, si, sk)?, &u.div(&w)?, &q)?, &[0, 2], &dims);
    let s23 = Matrix::embed(&build_s(&ModelConfig::new(n, sj, sk)?, &v.div(&w)?, &q)?, &[1, 2], &dims);
    let lhs = Matrix::product([&Tamper::apply(tamper, s12.clone()), &s13, &s23]);
    let rhs = Matrix::product([&s23, &s13, &s12]);
    Ok(compare("Yang-Baxter", &lhs, &rhs))
}

pub fn verify_ybe(n: usize, spins: [usize; 3], budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[
        ("n", n.to_string()),
        ("I", spins[0].to_string()),
        ("J", spins[1].to_string()),
        ("K", spins[2].to_string()),
        ("max_sector", (spins[0] + spins[1] + spins[2]).to_string()),
    ]);
    run_check("ybe", ps, &["q", "u", "v", "w"], budget, |p| check_ybe(n, spins, p, tamper))
}

/// `S_{I,J}(u) S_21(1/u) = Id`: the unitarity scalar is exactly 1.
pub fn check_unitarity(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let s = Tamper::apply(tamper, build_s(cfg, &u, &q)?);
    let lhs = s.mul(&build_s21(cfg, &u.inv()?, &q)?);
    Ok(compare("unitarity", &lhs, &Matrix::identity(lhs.rows())))
}

pub fn verify_unitarity(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("unitarity", config_params(cfg), &["q", "u"], budget, |p| check_unitarity(cfg, p, tamper))
}

/// `M_1 S^{t_1}(u) M_1^{-1} S_21^{t_1}(1/(q^{2n} u)) = g(u) Id`.
pub fn check_crossing(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let (di, dj) = cfg.dims();
    let z = (q.powi(2 * cfg.n as i64)? * &u).inv()?;
    let md = m_diagonal(cfg.n, cfg.i, &q)?;
    let md_inv = md.iter().map(|v| v.inv()).collect::<std::result::Result<Vec<_>, _>>()?;
    let m1 = Matrix::embed(&Matrix::diagonal(&md), &[0], &[di, dj]);
    let m1_inv = Matrix::embed(&Matrix::diagonal(&md_inv), &[0], &[di, dj]);
    let s = Tamper::apply(tamper, build_s(cfg, &u, &q)?).partial_transpose(&[di, dj], 0);
    let s21 = build_s21(cfg, &z, &q)?.partial_transpose(&[di, dj], 0);
    let lhs = Matrix::product([&m1, &s, &m1_inv, &s21]);
    let g = crossing_g(cfg, &u, &q)?;
    Ok(compare("crossing unitarity", &lhs, &Matrix::identity(di * dj).scale(&g)))
}

pub fn verify_crossing(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("crossing", config_params(cfg), &["q", "u"], budget, |p| check_crossing(cfg, p, tamper))
}

/// Both constructions of `Stilde` agree.
pub fn check_rtilde_methods(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let a = Tamper::apply(tamper, build_rtilde(cfg, &u, &q, TildeMethod::TransposeInverse)?);
    let b = build_rtilde(cfg, &u, &q, TildeMethod::Crossing)?;
    Ok(compare("Stilde transpose-inverse vs crossing", &a, &b))
}

pub fn verify_rtilde_methods(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("rtilde", config_params(cfg), &["q", "u"], budget, |p| check_rtilde_methods(cfg, p, tamper))
}

/// `[M (x) M, S(u)] = 0`.
pub fn check_m_commutes(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let mm = build_m(cfg.n, cfg.i, &q)?.kron(&build_m(cfg.n, cfg.j, &q)?);
    let s = build_s(cfg, &u, &q)?;
    let lhs = mm.mul(&Tamper::apply(tamper, s.clone()));
    Ok(compare("[M (x) M, S]", &lhs, &s.mul(&mm)))
}

/// `S_{I,I}(1) = P`, evaluated as the limit `u -> 1`.
pub fn check_regularity(n: usize, spin: usize, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: Jet = sym(p, "q")?;
    let cfg = ModelConfig::new(n, spin, spin)?;
    let s = build_s(&cfg, &Jet::variable(&ExactScalar::one()), &q)?;
    let s1 = Tamper::apply(tamper, s.try_map(|v| v.value())?);
    Ok(compare("regularity", &s1, &permutation(&cfg)))
}

pub fn verify_regularity(n: usize, spin: usize, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("n", n.to_string()), ("I", spin.to_string())]);
    run_check("regularity", ps, &["q"], budget, |p| check_regularity(n, spin, p, tamper))
}

/// Every column of `S` sums to one.
pub fn check_stochastic(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let s = Tamper::apply(tamper, build_s(cfg, &u, &q)?);
    Ok(s.col_sums().iter().enumerate().find_map(|(c, v)| compare_scalar("column sum", vec![c], v, &ExactScalar::one())))
}

/// The symmetries of `Rbar` and `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `Rbar_{I,J}[i,j][i',j'] = Rbar_{J,I}[tau j, tau i][tau j', tau i']`
    First,
    /// Reversal with the extended pairing and the `V_{q^-I}`, `V_{q^-J}` weights.
    Second,
    /// Invariance under the cyclic shift `sigma` up to a power of `x`.
    Third,
    /// `S_{I,J}[i,j][i',j'] = S_{J,I}[tau sigma j, tau sigma i][tau sigma j', tau sigma i']`
    TauSigma,
    /// `S_{J,J}[i,j][i',j'] = u^{|i'|-|i|} q^{2J(|j'|-|i|)} S_{J,J}[tau j, tau i][tau j', tau i']`
    SwapJJ,
}

impl Symmetry {
    pub const ALL: [Symmetry; 5] = [Symmetry::First, Symmetry::Second, Symmetry::Third, Symmetry::TauSigma, Symmetry::SwapJJ];

    pub fn id(&self) -> &'static str {
        match self {
            Symmetry::First => "symmetry.first",
            Symmetry::Second => "symmetry.second",
            Symmetry::Third => "symmetry.third",
            Symmetry::TauSigma => "symmetry.tau_sigma",
            Symmetry::SwapJJ => "symmetry.swap_jj",
        }
    }
}

struct Indexed<'a, F> {
    m: &'a Matrix<F>,
    a: &'a BasisSpace,
    b: &'a BasisSpace,
}

impl<'a, F: Field> Indexed<'a, F> {
    fn at(&self, i: &[i32], j: &[i32], ip: &[i32], jp: &[i32]) -> F {
        let db = self.b.len();
        let (Some(oi), Some(oj), Some(oip), Some(ojp)) = (self.a.ordinal(i), self.b.ordinal(j), self.a.ordinal(ip), self.b.ordinal(jp)) else {
            return F::zero();
        };
        self.m.get(oi * db + oj, oip * db + ojp)
    }
}

/// Checks one symmetry entrywise over all index quadruples. The point binds `q` and `x` (`u = x^2`).
pub fn check_symmetry(cfg: &ModelConfig, which: Symmetry, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let x: ExactScalar = sym(p, "x")?;
    let u = x.clone() * &x;
    let (bi, bj) = cfg.bases();
    let (si, sj) = (cfg.i, cfg.j);
    let dj = bj.len();
    if which == Symmetry::SwapJJ && si != sj {
        return Err(Error::InvalidConfig("the S_{J,J} symmetry needs I = J".into()));
    }
    let base = match which {
        Symmetry::First | Symmetry::Second | Symmetry::Third => build_rbar(cfg, &x, &q)?,
        Symmetry::TauSigma | Symmetry::SwapJJ => build_s(cfg, &u, &q)?,
    };
    let lhs_m = Tamper::apply(tamper, base.clone());
    let lhs = Indexed { m: &lhs_m, a: &bi, b: &bj };
    let same = Indexed { m: &base, a: &bi, b: &bj };
    let other_m = match which {
        Symmetry::First => Some(build_rbar(&cfg.swapped(), &x, &q)?),
        Symmetry::TauSigma => Some(build_s(&cfg.swapped(), &u, &q)?),
        _ => None,
    };
    let other = other_m.as_ref().map(|m| Indexed { m, a: &bj, b: &bi });
    let zero = vec![0; cfg.n - 1];
    let qi = q.powi(-(si as i64))?;
    let qj = q.powi(-(sj as i64))?;
    let ts = |a: &[i32], cap: usize| -> Result<MultiIndex> { Ok(tau(&sigma(a, cap)?)) };
    for i in bi.indices() {
        for j in bj.indices() {
            for ip in bi.indices() {
                for jp in bj.indices() {
                    let l = lhs.at(i, j, ip, jp);
                    let r = match which {
                        Symmetry::First => other.as_ref().unwrap().at(&tau(j), &tau(i), &tau(jp), &tau(ip)),
                        Symmetry::Second => {
                            let e = bracket_extended(ip, jp, si, sj)? - bracket_extended(i, j, si, sj)?;
                            let num = v_func(&qi, &q, i, &zero)? * &v_func(&qj, &q, j, &zero)?;
                            let den = v_func(&qi, &q, ip, &zero)? * &v_func(&qj, &q, jp, &zero)?;
                            q.powi(e)? * &num.div(&den)? * &same.at(&tau(ip), &tau(jp), &tau(i), &tau(j))
                        }
                        Symmetry::Third => {
                            let (sgi, sgj, sgip, sgjp) = (sigma(i, si)?, sigma(j, sj)?, sigma(ip, si)?, sigma(jp, sj)?);
                            let e = (weight(i) + weight(&sgi)) - (weight(ip) + weight(&sgip));
                            x.powi(e)? * &same.at(&sgi, &sgj, &sgip, &sgjp)
                        }
                        Symmetry::TauSigma => {
                            other.as_ref().unwrap().at(&ts(j, sj)?, &ts(i, si)?, &ts(jp, sj)?, &ts(ip, si)?)
                        }
                        Symmetry::SwapJJ => {
                            let f = u.powi(weight(ip) - weight(i))? * &q.powi(2 * sj as i64 * (weight(jp) - weight(i)))?;
                            f * &same.at(&tau(j), &tau(i), &tau(jp), &tau(ip))
                        }
                    };
                    if l != r {
                        let row = bi.ordinal(i).unwrap() * dj + bj.ordinal(j).unwrap();
                        let col = bi.ordinal(ip).unwrap() * dj + bj.ordinal(jp).unwrap();
                        return Ok(Some(Witness::new(vec![row, col], which.id(), l, r)));
                    }
                }
            }
        }
    }
    Ok(None)
}

pub fn verify_symmetry(cfg: &ModelConfig, which: Symmetry, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check(which.id(), config_params(cfg), &["q", "x"], budget, |p| check_symmetry(cfg, which, p, tamper))
}

/// All symmetries applicable to `cfg` (the `S_{J,J}` one only when `I = J`).
pub fn verify_symmetries(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> Vec<CheckRecord> {
    Symmetry::ALL
        .iter()
        .filter(|s| **s != Symmetry::SwapJJ || cfg.i == cfg.j)
        .map(|s| verify_symmetry(cfg, *s, budget, tamper))
        .collect()
}

/// `build_l` agrees with `build_s` at `(1, J)` or `(J, 1)`.
pub fn check_l_operator(n: usize, spin: usize, side: LSide, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let cfg = match side {
        LSide::FirstFundamental => ModelConfig::new(n, 1, spin)?,
        LSide::SecondFundamental => ModelConfig::new(n, spin, 1)?,
    };
    let l = Tamper::apply(tamper, build_l(n, spin, side, &u, &q)?);
    Ok(compare("L-operator vs S", &l, &build_s(&cfg, &u, &q)?))
}

/// Modified Yang-Baxter relations between `S` and `Stilde` on `V_J^{(x)3}`.
///
/// The first holds as `S_12(x) St_23(y) St_13(xy) = St_13(xy) St_23(y) S_12(x)`.
/// The second holds as `St_12(x) St_13(xy) S_32(1/y) = S_32(1/y) St_13(xy) St_12(x)`,
/// where `S_32` is `S` acting on factors 3 and 2 in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlmostYbe {
    First,
    Second,
}

pub fn check_almost_ybe(n: usize, spin: usize, form: AlmostYbe, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let (x, y): (ExactScalar, ExactScalar) = (sym(p, "x")?, sym(p, "y")?);
    let cfg = ModelConfig::new(n, spin, spin)?;
    let d = enumerate_basis(n, spin).len();
    let dims = [d, d, d];
    let st = |v: &ExactScalar| build_rtilde(&cfg, v, &q, TildeMethod::TransposeInverse);
    let xy = x.clone() * &y;
    let (a, b, c) = match form {
        AlmostYbe::First => (
            Matrix::embed(&build_s(&cfg, &x, &q)?, &[0, 1], &dims),
            Matrix::embed(&st(&y)?, &[1, 2], &dims),
            Matrix::embed(&st(&xy)?, &[0, 2], &dims),
        ),
        AlmostYbe::Second => (
            Matrix::embed(&st(&x)?, &[0, 1], &dims),
            Matrix::embed(&st(&xy)?, &[0, 2], &dims),
            Matrix::embed(&build_s(&cfg, &y.inv()?, &q)?, &[2, 1], &dims),
        ),
    };
    let lhs = Matrix::product([&Tamper::apply(tamper, a.clone()), &b, &c]);
    let rhs = Matrix::product([&c, &b, &a]);
    Ok(compare("modified Yang-Baxter", &lhs, &rhs))
}

/// Truncated space of pairs `(i, j)` of `(n-1)`-tuples with `|i| + |j| <= cap`.
#[derive(Clone, Debug)]
pub struct NondiffSpace {
    pub n: usize,
    pub cap: usize,
    states: Vec<MultiIndex>,
    pairs: Vec<(usize, usize)>,
    pair_ordinals: BTreeMap<(usize, usize), usize>,
}

impl NondiffSpace {
    pub fn new(n: usize, cap: usize) -> Self {
        let states = enumerate_basis(n, cap).indices().to_vec();
        let mut pairs = Vec::new();
        for (a, i) in states.iter().enumerate() {
            for (b, j) in states.iter().enumerate() {
                if weight(i) + weight(j) <= cap as i64 {
                    pairs.push((a, b));
                }
            }
        }
        let pair_ordinals = pairs.iter().enumerate().map(|(k, p)| (*p, k)).collect();
        NondiffSpace { n, cap, states, pairs, pair_ordinals }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> (&[i32], &[i32]) {
        let (a, b) = self.pairs[k];
        (&self.states[a], &self.states[b])
    }

    pub fn states(&self) -> &[MultiIndex] {
        &self.states
    }

    /// `P |i, j> = |j, i>`.
    pub fn swap<F: Field>(&self) -> Matrix<F> {
        let mut m = Matrix::zeros(self.len(), self.len());
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            m.set(self.pair_ordinals[&(*b, *a)], k, F::one());
        }
        m
    }

    /// `K (x) 1` (`first`) or `1 (x) K` for a one-site operator given entrywise on states.
    pub fn one_site<F: Field>(&self, first: bool, k: impl Fn(&[i32], &[i32]) -> Result<F>) -> Result<Matrix<F>> {
        let mut m = Matrix::zeros(self.len(), self.len());
        for (r, (a, b)) in self.pairs.iter().enumerate() {
            for (c, (ap, bp)) in self.pairs.iter().enumerate() {
                let v = if first && b == bp {
                    k(&self.states[*a], &self.states[*ap])?
                } else if !first && a == ap {
                    k(&self.states[*b], &self.states[*bp])?
                } else {
                    continue;
                };
                m.set(r, c, v);
            }
        }
        Ok(m)
    }
}

/// Non-difference `S(x, y)`: entry `[i+j = i'+j'] Phi_{q^2}(i | j'; x, y)` with `q^2` passed directly.
pub fn build_s_nondiff<F: Field>(space: &NondiffSpace, x: &F, y: &F, q2: &F) -> Result<Matrix<F>> {
    let mut m = Matrix::zeros(space.len(), space.len());
    for r in 0..space.len() {
        let (i, j) = space.pair(r);
        for c in 0..space.len() {
            let (ip, jp) = space.pair(c);
            if add(i, j) == add(ip, jp) {
                m.set(r, c, phi(i, jp, x, y, q2)?);
            }
        }
    }
    Ok(m)
}

/// `S(x, y) S_21(y, x) = Id` on the truncated space.
pub fn check_nondiff_inverse(n: usize, cap: usize, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (x, y, q): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "x")?, sym(p, "y")?, sym(p, "q")?);
    let q2 = q.clone() * &q;
    let sp = NondiffSpace::new(n, cap);
    let pm = sp.swap();
    let s = Tamper::apply(tamper, build_s_nondiff(&sp, &x, &y, &q2)?);
    let s21 = Matrix::product([&pm, &build_s_nondiff(&sp, &y, &x, &q2)?, &pm]);
    Ok(compare("non-difference inverse", &s.mul(&s21), &Matrix::identity(sp.len())))
}

/// `S_{I,J}` at `u = q^{J-I}` equals `[i+j = i'+j'] Phi_{q^2}(i | j'; q^{-2I}, q^{-2J})`.
///
/// On the finite modules this holds for `I <= J` only; `I > J` is rejected.
pub fn check_degeneration(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    check_degeneration_unchecked(cfg, p, tamper).and_then(|w| {
        if cfg.i > cfg.j {
            return Err(Error::InvalidConfig("degeneration is checked for I <= J".into()));
        }
        Ok(w)
    })
}

fn check_degeneration_unchecked(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let qj = Jet::constant(&q);
    let u0 = q.powi(cfg.j as i64 - cfg.i as i64)?;
    let u = Jet::variable(&u0);
    let s = build_s(cfg, &u, &qj)?.try_map(|v| v.value())?;
    let s = Tamper::apply(tamper, s);
    let (bi, bj) = cfg.bases();
    let dj = bj.len();
    let q2 = q.clone() * &q;
    let (x, y) = (q.powi(-2 * cfg.i as i64)?, q.powi(-2 * cfg.j as i64)?);
    let want = Matrix::from_fn(s.rows(), s.cols(), |r, c| -> Result<ExactScalar> {
        let (i, j) = (bi.index(r / dj), bj.index(r % dj));
        let (ip, jp) = (bi.index(c / dj), bj.index(c % dj));
        if add(i, j) != add(ip, jp) {
            return Ok(ExactScalar::zero());
        }
        Ok(phi(i, jp, &x, &y, &q2)?)
    })?;
    Ok(compare("degeneration", &s, &want))
}

pub fn verify_degeneration(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("nondiff.degeneration", config_params(cfg), &["q"], budget, |p| check_degeneration(cfg, p, tamper))
}

/// The closed form of `S_{1,1}` for `n = 2` in the basis `|0,0>, |0,1>, |1,0>, |1,1>`.
pub fn six_vertex<F: Field>(u: &F, q: &F) -> Result<Matrix<F>> {
    let one = F::one();
    let q2 = q.clone() * q;
    let den = q2.clone() * u - &one;
    let e = |num: F| -> Result<F> { Ok(num.div(&den)?) };
    let mut m = Matrix::zeros(4, 4);
    m.set(0, 0, one.clone());
    m.set(3, 3, one.clone());
    m.set(1, 1, e(q2.clone() * &(u.clone() - &one))?);
    m.set(1, 2, e((q2.clone() - &one) * u)?);
    m.set(2, 1, e(q2.clone() - &one)?);
    m.set(2, 2, e(u.clone() - &one)?);
    Ok(m)
}

pub fn check_six_vertex(p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let q: ExactScalar = sym(p, "q")?;
    let u: ExactScalar = sym(p, "u")?;
    let s = Tamper::apply(tamper, build_s(&ModelConfig::new(2, 1, 1)?, &u, &q)?);
    Ok(compare("6-vertex", &s, &six_vertex(&u, &q)?))
}

/// Fixed-point variant of [`check_regularity`] for reports without sampling.
pub fn regularity_at(n: usize, spin: usize, q: &ExactScalar) -> CheckRecord {
    let p = ParamPoint::new().bind("q", q.clone());
    run_fixed("regularity", params(&[("n", n.to_string()), ("I", spin.to_string())]), || check_regularity(n, spin, &p, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, DualScalar};

    fn r(a: i64, b: i64) -> ExactScalar {
        rat(a, b).unwrap()
    }

    fn pt(kv: &[(&str, ExactScalar)]) -> ParamPoint {
        kv.iter().fold(ParamPoint::new(), |p, (k, v)| p.bind(k, v.clone()))
    }

    #[test]
    fn six_vertex_worked_example() {
        let s = build_s(&ModelConfig::new(2, 1, 1).unwrap(), &r(9, 1), &r(2, 1)).unwrap();
        assert_eq!(s.get(1, 1), r(32, 35));
        assert_eq!(s.get(1, 2), r(27, 35));
        assert_eq!(s.get(2, 1), r(3, 35));
        assert_eq!(s.get(2, 2), r(8, 35));
        assert_eq!(s.get(0, 0), r(1, 1));
        assert_eq!(s.get(3, 3), r(1, 1));
        assert_eq!(s.nnz(), 6);
    }

    #[test]
    fn stochastic_columns() {
        let cfg = ModelConfig::new(3, 2, 2).unwrap();
        let s = build_s(&cfg, &r(7, 3), &r(5, 2)).unwrap();
        assert!(s.col_sums().iter().all(|v| *v == r(1, 1)));
    }

    #[test]
    fn conservation() {
        let cfg = ModelConfig::new(3, 1, 2).unwrap();
        let (bi, bj) = cfg.bases();
        let dj = bj.len();
        let s = build_s(&cfg, &r(3, 7), &r(4, 3)).unwrap();
        for (row, col, _) in s.entries() {
            let t1 = add(bi.index(row / dj), bj.index(row % dj));
            let t2 = add(bi.index(col / dj), bj.index(col % dj));
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn m_and_g_examples() {
        let q = r(3, 2);
        let m = build_m(2, 1, &q).unwrap();
        assert_eq!(m, Matrix::diagonal(&[r(1, 1), r(9, 4)]));
        let u = r(5, 7);
        let q2 = &q * &q;
        let one = r(1, 1);
        let want = ((&one - &u) * (&one - &u * &q2 * &q2)).div(&((&one - &u * &q2) * (&one - &u * &q2))).unwrap();
        assert_eq!(crossing_g(&ModelConfig::new(2, 1, 1).unwrap(), &u, &q).unwrap(), want);
    }

    #[test]
    fn rbar_diagonal_matches_s() {
        let cfg = ModelConfig::new(3, 1, 1).unwrap();
        let x = r(5, 3);
        let q = r(2, 7);
        let rb = build_rbar(&cfg, &x, &q).unwrap();
        let s = build_s(&cfg, &(&x * &x), &q).unwrap();
        let (bi, bj) = cfg.bases();
        let dj = bj.len();
        for k in 0..s.rows() {
            let (i, j) = (bi.index(k / dj), bj.index(k % dj));
            // With i = i' and j = j' only J|i| - I|j| survives, and the x power vanishes.
            let f = q.powi(cfg.j as i64 * weight(i) - cfg.i as i64 * weight(j) - qform_raw(j, i) + qform_raw(i, j)).unwrap();
            assert_eq!(rb.get(k, k), f * s.get(k, k));
        }
    }

    #[test]
    fn l_operators_match_s() {
        for (n, j) in [(2, 1), (2, 2), (3, 1), (3, 2), (4, 2)] {
            let (q, u) = (r(7, 3), r(2, 9));
            for side in [LSide::FirstFundamental, LSide::SecondFundamental] {
                let p = pt(&[("q", q.clone()), ("u", u.clone())]);
                assert_eq!(check_l_operator(n, j, side, &p, None).unwrap(), None, "n={} J={} {:?}", n, j, side);
            }
        }
    }

    #[test]
    fn l_operator_diagonal_term() {
        // alpha = beta = 0 with j = l = 0, n = 2, J = 1: (1 - q^{J-1-2J}/u)/(1 - q^{-1-J}/u) = 1.
        let (q, u) = (r(5, 4), r(3, 11));
        let l = build_l(2, 1, LSide::FirstFundamental, &u, &q).unwrap();
        assert_eq!(l.get(0, 0), r(1, 1));
        let q2 = &q * &q;
        let one = r(1, 1);
        // alpha = beta = 0, j = l = (1): (1 - 1/u)/(1 - q^{-2}/u).
        let want = (&one - &u.inv().unwrap()).div(&(&one - &q2.inv().unwrap().div(&u).unwrap())).unwrap();
        assert_eq!(l.get(1, 1), want);
    }

    #[test]
    fn unitarity_crossing_and_tilde() {
        for (n, i, j) in [(2, 1, 1), (3, 1, 2), (2, 2, 1)] {
            let cfg = ModelConfig::new(n, i, j).unwrap();
            let p = pt(&[("q", r(3, 5)), ("u", r(7, 4))]);
            assert_eq!(check_unitarity(&cfg, &p, None).unwrap(), None);
            assert_eq!(check_crossing(&cfg, &p, None).unwrap(), None);
            assert_eq!(check_rtilde_methods(&cfg, &p, None).unwrap(), None);
            assert_eq!(check_m_commutes(&cfg, &p, None).unwrap(), None);
        }
    }

    #[test]
    fn ybe_small_and_tampered() {
        let p = pt(&[("q", r(3, 2)), ("u", r(5, 7)), ("v", r(2, 9)), ("w", r(11, 3))]);
        assert_eq!(check_ybe(2, [1, 1, 1], &p, None).unwrap(), None);
        assert_eq!(check_ybe(3, [1, 2, 1], &p, None).unwrap(), None);
        let t = Tamper { row: 1, col: 2, delta: r(1, 3) };
        assert!(check_ybe(2, [1, 1, 1], &p, Some(&t)).unwrap().is_some());
    }

    #[test]
    fn regularity_holds() {
        for (n, i) in [(2, 1), (3, 1), (3, 2), (2, 3)] {
            let p = pt(&[("q", r(4, 3))]);
            assert_eq!(check_regularity(n, i, &p, None).unwrap(), None, "n={} I={}", n, i);
        }
    }

    #[test]
    fn plain_evaluation_at_one_is_a_pole() {
        let cfg = ModelConfig::new(2, 1, 1).unwrap();
        assert!(build_s(&cfg, &r(1, 1), &r(3, 2)).unwrap_err().is_resamplable());
    }

    #[test]
    fn symmetries_hold() {
        for (n, i, j) in [(3, 1, 1), (3, 2, 2), (3, 1, 2), (2, 2, 1)] {
            let cfg = ModelConfig::new(n, i, j).unwrap();
            let p = pt(&[("q", r(7, 5)), ("x", r(2, 3))]);
            for s in Symmetry::ALL {
                if s == Symmetry::SwapJJ && i != j {
                    continue;
                }
                assert_eq!(check_symmetry(&cfg, s, &p, None).unwrap(), None, "{:?} n={} I={} J={}", s, n, i, j);
            }
        }
    }

    #[test]
    fn almost_ybe_forms() {
        let p = pt(&[("q", r(3, 2)), ("x", r(5, 7)), ("y", r(2, 9))]);
        for n in [2, 3] {
            assert_eq!(check_almost_ybe(n, 1, AlmostYbe::First, &p, None).unwrap(), None);
            assert_eq!(check_almost_ybe(n, 1, AlmostYbe::Second, &p, None).unwrap(), None);
        }
    }

    #[test]
    fn nondiff_inverse_and_degeneration() {
        let p = pt(&[("q", r(3, 2)), ("x", r(5, 7)), ("y", r(2, 9))]);
        assert_eq!(check_nondiff_inverse(3, 3, &p, None).unwrap(), None);
        for (n, i, j) in [(2, 1, 1), (2, 1, 2), (3, 1, 2), (3, 2, 2), (2, 1, 3)] {
            let cfg = ModelConfig::new(n, i, j).unwrap();
            assert_eq!(check_degeneration(&cfg, &p, None).unwrap(), None);
        }
        // The closed form is not the limit on finite modules with I > J.
        let cfg = ModelConfig::new(2, 2, 1).unwrap();
        assert!(check_degeneration_unchecked(&cfg, &p, None).unwrap().is_some());
        assert!(check_degeneration(&cfg, &p, None).is_err());
        let sp = NondiffSpace::new(2, 0);
        let s = build_s_nondiff(&sp, &r(2, 3), &r(5, 7), &r(4, 9)).unwrap();
        assert!(s.is_identity());
    }

    #[test]
    fn dual_derivative_of_six_vertex() {
        // d/du of S[2][1] = (q^2 - 1)/(q^2 u - 1) is -(q^2 - 1) q^2 / (q^2 u - 1)^2.
        let (q, u) = (r(3, 2), r(5, 7));
        let s = build_s(&ModelConfig::new(2, 1, 1).unwrap(), &DualScalar::variable(&u), &DualScalar::from_scalar(&q)).unwrap();
        let q2 = &q * &q;
        let den = &q2 * &u - r(1, 1);
        let want = -((&q2 - &r(1, 1)) * &q2).div(&(&den * &den)).unwrap();
        assert_eq!(s.get(2, 1).deriv, want);
    }
}
