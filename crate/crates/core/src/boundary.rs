//! Boundary K-matrices: the four stochastic triangular families, the dual
//! matrices, the sigma twist and the trace maps between boundaries, plus the
//! reflection-equation verifiers and the non-difference boundary.
//!
//! Every family is a function of `w = y^2`, `nu` and `q`. `K[j][l]` is the
//! weight of `l -> j`; columns sum to one.

use crate::error::{Error, Result};
use crate::exactnum::{ExactScalar, Field, ParamPoint};
use crate::harness::{compare, compare_scalar, params, run_check, sym, Budget, CheckRecord, Eval, Tamper, Witness};
use crate::linalg::Matrix;
use crate::qkit::{add, dominates, enumerate_basis, phi, phi_hat, qpochhammer, sigma, sub, tau, weight, BasisSpace};
use crate::rmat::{build_rtilde, build_s, build_s21, build_s_nondiff, m_diagonal, ModelConfig, NondiffSpace, TildeMethod};

pub mod golden;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    RightUpper,
    RightLower,
    LeftUpper,
    LeftLower,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::RightUpper, Family::RightLower, Family::LeftUpper, Family::LeftLower];

    pub fn id(&self) -> &'static str {
        match self {
            Family::RightUpper => "right-upper",
            Family::RightLower => "right-lower",
            Family::LeftUpper => "left-upper",
            Family::LeftLower => "left-lower",
        }
    }

    pub fn is_right(&self) -> bool {
        matches!(self, Family::RightUpper | Family::RightLower)
    }

    /// The equation the family solves: right families the reflection
    /// equation, left families its barred form.
    pub fn equation(&self) -> ReflectionForm {
        if self.is_right() {
            ReflectionForm::Reflection
        } else {
            ReflectionForm::Bar
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown family {:?}", s)))
    }
}

fn from_basis<F: Field>(b: &BasisSpace, f: impl Fn(&[i32], &[i32]) -> Result<F>) -> Result<Matrix<F>> {
    Matrix::from_fn(b.len(), b.len(), |r, c| f(b.index(r), b.index(c)))
}

/// `K_J(w)` of the given family with `a = nu q^J`.
pub fn build_k<F: Field>(n: usize, spin: usize, family: Family, w: &F, nu: &F, q: &F) -> Result<Matrix<F>> {
    let b = enumerate_basis(n, spin);
    let q2 = q.clone() * q;
    let a = nu.clone() * &q.powi(spin as i64)?;
    let wa = w.clone() * &a;
    let w_a = w.div(&a)?;
    let inv_wa = wa.inv()?;
    match family {
        Family::RightUpper => from_basis(&b, |j, l| Ok(phi(j, l, &w_a, &inv_wa, &q2)?)),
        Family::RightLower => {
            let inv_w2 = (w.clone() * w).inv()?;
            from_basis(&b, |j, l| {
                let (sj, sl) = (sigma(j, spin)?, sigma(l, spin)?);
                Ok(phi_hat(&sub(&sl, &sj), &sl, &inv_w2, &inv_wa, &q2)?)
            })
        }
        Family::LeftUpper => {
            let w2 = w.clone() * w;
            from_basis(&b, |j, l| Ok(phi(&sub(l, j), l, &w2, &w_a, &q2)?))
        }
        Family::LeftLower => from_basis(&b, |j, l| {
            let (sj, sl) = (sigma(j, spin)?, sigma(l, spin)?);
            Ok(phi_hat(&sj, &sl, &inv_wa, &w_a, &q2)?)
        }),
    }
}

/// `Ktilde_J(u) = M^{-1} K_J(1/(q^n u))`, the dual matrix solving the dual reflection equation.
pub fn build_ktilde<F: Field>(n: usize, spin: usize, family: Family, u: &F, nu: &F, q: &F) -> Result<Matrix<F>> {
    let arg = (q.powi(n as i64)? * u).inv()?;
    let k = build_k(n, spin, family, &arg, nu, q)?;
    let md_inv = m_diagonal(n, spin, q)?.iter().map(|v| v.inv()).collect::<std::result::Result<Vec<F>, _>>()?;
    Ok(Matrix::diagonal(&md_inv).mul(&k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwistDirection {
    Right,
    Bar,
}

/// `K'[j][l] = c(j, l) K[sigma j][sigma l]` with the right or bar prefactors and `a = mu q^J`.
pub fn sigma_twist<F: Field>(k: &Matrix<F>, n: usize, spin: usize, w: &F, mu: &F, q: &F, dir: TwistDirection) -> Result<Matrix<F>> {
    let b = enumerate_basis(n, spin);
    let a = mu.clone() * &q.powi(spin as i64)?;
    let inv_wa = (w.clone() * &a).inv()?;
    let w_a = w.div(&a)?;
    from_basis(&b, |j, l| {
        let (sj, sl) = (sigma(j, spin)?, sigma(l, spin)?);
        let f = match dir {
            TwistDirection::Right => inv_wa.powi(-weight(&sj))? * &w_a.powi(weight(&sl))?,
            TwistDirection::Bar => w_a.powi(weight(&sj))? * &inv_wa.powi(-weight(&sl))?,
        };
        let v = k.get(b.ordinal(&sj).unwrap(), b.ordinal(&sl).unwrap());
        Ok(f * &v)
    })
}

/// `Kbar[j][l] = K[tau sigma j][tau sigma l]`; pass `K` evaluated at `1/w`.
pub fn k_to_kbar<F: Field>(k_inv: &Matrix<F>, n: usize, spin: usize) -> Result<Matrix<F>> {
    let b = enumerate_basis(n, spin);
    from_basis(&b, |j, l| {
        let (tj, tl) = (tau(&sigma(j, spin)?), tau(&sigma(l, spin)?));
        Ok(k_inv.get(b.ordinal(&tj).unwrap(), b.ordinal(&tl).unwrap()))
    })
}

/// `lambda_J^(n)(u; nu)` with `u = x^2`.
pub fn lambda_fn<F: Field>(n: usize, spin: usize, u: &F, nu: &F, q: &F) -> Result<F> {
    let j = spin as i64;
    let k = n as i64 - 1;
    let q2 = q.clone() * q;
    let u2 = u.clone() * u;
    let num = qpochhammer(&q.powi(2 * j + 2)?.div(&u2)?, &q2, k)?
        * &qpochhammer(&(nu.clone() * &q.powi(2 - j)?).div(u)?, &q2, k)?;
    let den = qpochhammer(&q2.div(&u2)?, &q2, k)? * &qpochhammer(&(nu.clone() * &q.powi(j + 2)?).div(u)?, &q2, k)?;
    Ok(num.div(&den)?)
}

/// `mu_J^(n)(z, y)` of the first sum of V, with `z` and `y` passed directly.
pub fn mu_fn<F: Field>(n: usize, spin: usize, z: &F, y: &F, q: &F) -> Result<F> {
    let (nn, j) = (n as i64, spin as i64);
    let q2 = q.clone() * q;
    let z2 = z.clone() * z;
    let r = z2.div(&(y.clone() * y))?;
    let k = nn - 1;
    let num = qpochhammer(&(q.powi(2 - 2 * nn)? * &z2), &q2, k)? * &qpochhammer(&(q.powi(2 * j - 2 * nn + 2)? * &r), &q2, k)?;
    let den = qpochhammer(&(q.powi(2 * j - 2 * nn + 2)? * &z2), &q2, k)? * &qpochhammer(&(q.powi(2 - 2 * nn)? * &r), &q2, k)?;
    Ok(num.div(&den)?)
}

fn square_config(n: usize, spin: usize) -> Result<ModelConfig> {
    ModelConfig::new(n, spin, spin)
}

/// `Kbar(u) = tr_0[(Ktilde(1/u) (x) 1) S_{J,J}(1/u^2) P]`.
pub fn kbar_from_ktilde_trace<F: Field>(
    cfg: &ModelConfig,
    u: &F,
    q: &F,
    ktilde: impl Fn(&F) -> Result<Matrix<F>>,
) -> Result<Matrix<F>> {
    if cfg.i != cfg.j {
        return Err(Error::DimensionMismatch(format!("trace map needs I = J, got I = {}, J = {}", cfg.i, cfg.j)));
    }
    let d = enumerate_basis(cfg.n, cfg.j).len();
    let kt = ktilde(&u.inv()?)?;
    let s = build_s(cfg, &(u.clone() * u).inv()?, q)?;
    let x = Matrix::product([&Matrix::embed(&kt, &[0], &[d, d]), &s, &Matrix::swap(d, d)]);
    Ok(x.partial_trace(&[d, d], 0))
}

/// `Ktilde(u) = tr_0[(Kbar(1/u) (x) 1) Stilde_{J,J}(u^2) P]`.
pub fn ktilde_from_kbar_trace<F: Field>(
    cfg: &ModelConfig,
    u: &F,
    q: &F,
    kbar: impl Fn(&F) -> Result<Matrix<F>>,
) -> Result<Matrix<F>> {
    if cfg.i != cfg.j {
        return Err(Error::DimensionMismatch(format!("trace map needs I = J, got I = {}, J = {}", cfg.i, cfg.j)));
    }
    let d = enumerate_basis(cfg.n, cfg.j).len();
    let kb = kbar(&u.inv()?)?;
    let st = build_rtilde(cfg, &(u.clone() * u), q, TildeMethod::TransposeInverse)?;
    let x = Matrix::product([&Matrix::embed(&kb, &[0], &[d, d]), &st, &Matrix::swap(d, d)]);
    Ok(x.partial_trace(&[d, d], 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionForm {
    /// `S(u/w) K1 S21(uw) K2 = K2 S(uw) K1 S21(u/w)`
    Reflection,
    /// `S21(w/u) K1 S(1/(uw)) K2 = K2 S21(1/(uw)) K1 S(w/u)`
    Bar,
    /// `K2 Stilde21(uw) K1 S21(w/u) = S(w/u) K1 Stilde(uw) K2`
    Dual,
}

impl ReflectionForm {
    pub fn id(&self) -> &'static str {
        match self {
            ReflectionForm::Reflection => "reflection",
            ReflectionForm::Bar => "reflection_bar",
            ReflectionForm::Dual => "dual_reflection",
        }
    }
}

/// Both sides of a reflection equation on `V_I (x) V_J` with `K1 = KI (x) 1`, `K2 = 1 (x) KJ`.
/// The tamper perturbs `K1` on the left-hand side.
pub fn reflection_sides<F: Field>(
    cfg: &ModelConfig,
    form: ReflectionForm,
    ki: &Matrix<F>,
    kj: &Matrix<F>,
    u: &F,
    w: &F,
    q: &F,
    tamper: Option<&Tamper>,
) -> Result<(Matrix<F>, Matrix<F>)> {
    let (di, dj) = cfg.dims();
    if ki.rows() != di || kj.rows() != dj {
        return Err(Error::DimensionMismatch(format!("K sizes {}, {} vs spaces {}, {}", ki.rows(), kj.rows(), di, dj)));
    }
    let k1 = Matrix::embed(ki, &[0], &[di, dj]);
    let k2 = Matrix::embed(kj, &[1], &[di, dj]);
    let k1t = Tamper::apply(tamper, k1.clone());
    let uw = u.clone() * w;
    Ok(match form {
        ReflectionForm::Reflection => {
            let (a, b) = (build_s(cfg, &u.div(w)?, q)?, build_s21(cfg, &uw, q)?);
            let (c, d) = (build_s(cfg, &uw, q)?, build_s21(cfg, &u.div(w)?, q)?);
            (Matrix::product([&a, &k1t, &b, &k2]), Matrix::product([&k2, &c, &k1, &d]))
        }
        ReflectionForm::Bar => {
            let inv = uw.inv()?;
            let (a, b) = (build_s21(cfg, &w.div(u)?, q)?, build_s(cfg, &inv, q)?);
            let (c, d) = (build_s21(cfg, &inv, q)?, build_s(cfg, &w.div(u)?, q)?);
            (Matrix::product([&a, &k1t, &b, &k2]), Matrix::product([&k2, &c, &k1, &d]))
        }
        ReflectionForm::Dual => {
            let st = build_rtilde(cfg, &uw, q, TildeMethod::TransposeInverse)?;
            let st21 = Matrix::embed(&build_rtilde(&cfg.swapped(), &uw, q, TildeMethod::TransposeInverse)?, &[1, 0], &[di, dj]);
            let s21 = build_s21(cfg, &w.div(u)?, q)?;
            let s = build_s(cfg, &w.div(u)?, q)?;
            (Matrix::product([&k2, &st21, &k1t, &s21]), Matrix::product([&s, &k1, &st, &k2]))
        }
    })
}

fn family_params(cfg: &ModelConfig, family: &str) -> Vec<(String, String)> {
    params(&[("n", cfg.n.to_string()), ("I", cfg.i.to_string()), ("J", cfg.j.to_string()), ("family", family.to_string())])
}

/// The family's own reflection equation with `KI(u)`, `KJ(w)` sharing `nu`.
pub fn check_reflection(cfg: &ModelConfig, family: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, u, w, nu): (ExactScalar, ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "u")?, sym(p, "w")?, sym(p, "nu")?);
    let ki = build_k(cfg.n, cfg.i, family, &u, &nu, &q)?;
    let kj = build_k(cfg.n, cfg.j, family, &w, &nu, &q)?;
    let form = family.equation();
    let (l, r) = reflection_sides(cfg, form, &ki, &kj, &u, &w, &q, tamper)?;
    Ok(compare(form.id(), &l, &r))
}

pub fn verify_reflection(cfg: &ModelConfig, family: Family, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check(family.equation().id(), family_params(cfg, family.id()), &["q", "u", "w", "nu"], budget, |p| {
        check_reflection(cfg, family, p, tamper)
    })
}

/// The dual reflection equation for `Ktilde` built from a right family.
pub fn check_dual_reflection(cfg: &ModelConfig, family: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, u, w, nu): (ExactScalar, ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "u")?, sym(p, "w")?, sym(p, "nu")?);
    let ki = build_ktilde(cfg.n, cfg.i, family, &u, &nu, &q)?;
    let kj = build_ktilde(cfg.n, cfg.j, family, &w, &nu, &q)?;
    let (l, r) = reflection_sides(cfg, ReflectionForm::Dual, &ki, &kj, &u, &w, &q, tamper)?;
    Ok(compare("dual reflection", &l, &r))
}

pub fn verify_dual_reflection(cfg: &ModelConfig, family: Family, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("dual_reflection", family_params(cfg, family.id()), &["q", "u", "w", "nu"], budget, |p| {
        check_dual_reflection(cfg, family, p, tamper)
    })
}

/// Images of the right-upper family under `k_to_kbar` solve the bar equation.
pub fn check_kbar_image(cfg: &ModelConfig, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, u, w, nu): (ExactScalar, ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "u")?, sym(p, "w")?, sym(p, "nu")?);
    let ki = k_to_kbar(&build_k(cfg.n, cfg.i, Family::RightUpper, &u.inv()?, &nu, &q)?, cfg.n, cfg.i)?;
    let kj = k_to_kbar(&build_k(cfg.n, cfg.j, Family::RightUpper, &w.inv()?, &nu, &q)?, cfg.n, cfg.j)?;
    let (l, r) = reflection_sides(cfg, ReflectionForm::Bar, &ki, &kj, &u, &w, &q, tamper)?;
    Ok(compare("reflection_bar of k_to_kbar image", &l, &r))
}

pub fn verify_reflection_bar(cfg: &ModelConfig, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    run_check("reflection_bar", family_params(cfg, "kbar-of-right-upper"), &["q", "u", "w", "nu"], budget, |p| {
        check_kbar_image(cfg, p, tamper)
    })
}

/// `sigma_twist` with an independent `mu`, applied `times` times to both right-upper matrices.
pub fn check_twisted_reflection(cfg: &ModelConfig, times: usize, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, u, w, nu, mu): (ExactScalar, ExactScalar, ExactScalar, ExactScalar, ExactScalar) =
        (sym(p, "q")?, sym(p, "u")?, sym(p, "w")?, sym(p, "nu")?, sym(p, "mu")?);
    let mut ki = build_k(cfg.n, cfg.i, Family::RightUpper, &u, &nu, &q)?;
    let mut kj = build_k(cfg.n, cfg.j, Family::RightUpper, &w, &nu, &q)?;
    for _ in 0..times {
        ki = sigma_twist(&ki, cfg.n, cfg.i, &u, &mu, &q, TwistDirection::Right)?;
        kj = sigma_twist(&kj, cfg.n, cfg.j, &w, &mu, &q, TwistDirection::Right)?;
    }
    let (l, r) = reflection_sides(cfg, ReflectionForm::Reflection, &ki, &kj, &u, &w, &q, tamper)?;
    Ok(compare("reflection of twisted K", &l, &r))
}

/// `Kbar(u)` built by the trace equals `lambda(u) Kbar_{left-upper}(u; nu)` when the
/// dual matrix inside the trace carries `1/(nu q^n)`; the inverse map returns the input.
pub fn check_trace_maps(n: usize, spin: usize, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, u, nu): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "u")?, sym(p, "nu")?);
    let cfg = square_config(n, spin)?;
    let nu_in = (nu.clone() * &q.powi(n as i64)?).inv()?;
    let kt = |v: &ExactScalar| build_ktilde(n, spin, Family::RightUpper, v, &nu_in, &q);
    let kb = Tamper::apply(tamper, kbar_from_ktilde_trace(&cfg, &u, &q, kt)?);
    let want = build_k(n, spin, Family::LeftUpper, &u, &nu, &q)?.scale(&lambda_fn(n, spin, &u, &nu, &q)?);
    if let Some(w) = compare("trace-built Kbar vs lambda * left-upper", &kb, &want) {
        return Ok(Some(ratio_note(w, &kb, &want)));
    }
    let back = ktilde_from_kbar_trace(&cfg, &u, &q, |v| kbar_from_ktilde_trace(&cfg, v, &q, kt))?;
    Ok(compare("trace round trip", &back, &kt(&u)?))
}

fn ratio_note(mut w: Witness, a: &Matrix<ExactScalar>, b: &Matrix<ExactScalar>) -> Witness {
    let ratios: Vec<String> = a
        .entries()
        .filter_map(|(r, c, v)| b.get(r, c).inv().ok().map(|bi| (v.clone() * &bi).to_string()))
        .collect();
    w.detail = format!("{}; entrywise ratios {:?}", w.detail, ratios);
    w
}

pub fn verify_trace_maps(n: usize, spin: usize, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("n", n.to_string()), ("J", spin.to_string())]);
    run_check("trace_maps", ps, &["q", "u", "nu"], budget, |p| check_trace_maps(n, spin, p, tamper))
}

/// `K(1) = I`, unit column sums and the family's triangular support.
pub fn check_family_invariants(n: usize, spin: usize, family: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, w, nu): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "w")?, sym(p, "nu")?);
    let k = Tamper::apply(tamper, build_k(n, spin, family, &w, &nu, &q)?);
    for (c, s) in k.col_sums().iter().enumerate() {
        if let Some(wt) = compare_scalar("column sum", vec![c], s, &ExactScalar::one()) {
            return Ok(Some(wt));
        }
    }
    let b = enumerate_basis(n, spin);
    for (r, c, v) in k.entries() {
        let (j, l) = (b.index(r), b.index(c));
        let allowed = match family {
            Family::RightUpper | Family::LeftUpper => dominates(l, j),
            Family::RightLower | Family::LeftLower => dominates(&sigma(l, spin)?, &sigma(j, spin)?),
        };
        if !allowed && !v.is_zero() {
            return Ok(Some(Witness::new(vec![r, c], "triangular support", v, 0)));
        }
    }
    let k1 = build_k(n, spin, family, &ExactScalar::one(), &nu, &q)?;
    Ok(compare("K(1) = I", &k1, &Matrix::identity(b.len())))
}

/// Entry accessor with out-of-range indices read as zero.
fn k_at(k: &Matrix<ExactScalar>, b: &BasisSpace, j: &[i32], l: &[i32]) -> ExactScalar {
    match (b.ordinal(j), b.ordinal(l)) {
        (Some(r), Some(c)) => k.get(r, c),
        _ => ExactScalar::zero(),
    }
}

fn unit(m: usize, a: usize) -> Vec<i32> {
    (0..m).map(|t| i32::from(t + 1 == a)).collect()
}

/// The three independent recurrences for a right-family `K` over every basis pair `(j, l)`.
///
/// The witness indices are `[equation, i, ord(j), ord(l)]`, with `i = 0` for
/// the first and third equations.
pub fn check_recurrences_of(k: &Matrix<ExactScalar>, n: usize, spin: usize, w: &ExactScalar, nu: &ExactScalar, q: &ExactScalar) -> Result<Option<Witness>> {
    let b = enumerate_basis(n, spin);
    let m = n - 1;
    let one = ExactScalar::one();
    let qp = |e: i64| q.powi(e);
    let zero = ExactScalar::zero();
    let e1 = unit(m, 1);
    let em = unit(m, m);
    let pre = |a: &[i32], t: usize| weight(&a[..t]);
    for (oj, j) in b.indices().iter().enumerate() {
        for (ol, l) in b.indices().iter().enumerate() {
            let k0 = k_at(k, &b, j, l);
            let (j0, l0) = (j[0] as i64, l[0] as i64);
            let r1 = nu.clone() * &(&one - &qp(2 * l0)?) * &k_at(k, &b, j, &sub(l, &e1))
                - qp(-(spin as i64))? * w * &(qp(2 * j0)? - &qp(2 * l0)?) * &k0
                - nu.clone() * w * w * &(&one - &qp(2 * j0 + 2)?) * &k_at(k, &b, &add(j, &e1), l);
            if r1 != zero {
                return Ok(Some(Witness::new(vec![1, 0, oj, ol], "first recurrence", r1, 0)));
            }
            for i in 1..m {
                let mut r = (qp(-2 * pre(l, i))? - &qp(-2 * pre(j, i))?) * &k0;
                let ei1 = unit(m, i + 1);
                for mm in 1..=i {
                    let emm = unit(m, mm);
                    let (lm, jm) = (l[mm - 1] as i64, j[mm - 1] as i64);
                    r = r - qp(-2 * pre(l, mm))? * &(&one - &qp(2 * lm)?) * &k_at(k, &b, j, &add(&sub(l, &emm), &ei1));
                    r = r + qp(-2 - 2 * pre(j, mm))? * &(&one - &qp(2 + 2 * jm)?) * &k_at(k, &b, &sub(&add(j, &emm), &ei1), l);
                }
                if r != zero {
                    return Ok(Some(Witness::new(vec![2, i, oj, ol], "second recurrence", r, 0)));
                }
            }
            let (jl, ll) = (j[m - 1] as i64, l[m - 1] as i64);
            let r3 = (qp(-2 * jl)? - &qp(-2 * ll)?) * &k0 - (&one - &qp(-2 * ll)?) * &k_at(k, &b, j, &sub(l, &em))
                + (&one - &qp(-2 - 2 * jl)?) * &k_at(k, &b, &add(j, &em), l);
            if r3 != zero {
                return Ok(Some(Witness::new(vec![3, 0, oj, ol], "third recurrence", r3, 0)));
            }
        }
    }
    Ok(None)
}

pub fn check_recurrences(n: usize, spin: usize, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let (q, w, nu): (ExactScalar, ExactScalar, ExactScalar) = (sym(p, "q")?, sym(p, "w")?, sym(p, "nu")?);
    let k = Tamper::apply(tamper, build_k(n, spin, Family::RightUpper, &w, &nu, &q)?);
    check_recurrences_of(&k, n, spin, &w, &nu, &q)
}

pub fn verify_recurrences(n: usize, spin: usize, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let ps = params(&[("n", n.to_string()), ("J", spin.to_string()), ("family", Family::RightUpper.id().into())]);
    run_check("recurrences", ps, &["q", "w", "nu"], budget, |p| check_recurrences(n, spin, p, tamper))
}

/// Non-difference `K[j][l] = Phi_{q^2}(j | l; z^2 x, z^2 xbar)`.
pub fn build_k_nondiff<F: Field>(j: &[i32], l: &[i32], x: &F, xbar: &F, z: &F, q2: &F) -> Result<F> {
    let z2 = z.clone() * z;
    Ok(phi(j, l, &(z2.clone() * x), &(z2 * xbar), q2)?)
}

/// Non-difference `Kbar[j][l] = Phi_{q^2}(l - j | l; xbar/x, xbar)`.
pub fn build_kbar_nondiff<F: Field>(j: &[i32], l: &[i32], x: &F, xbar: &F, q2: &F) -> Result<F> {
    Ok(phi(&sub(l, j), l, &xbar.div(x)?, xbar, q2)?)
}

/// Non-difference reflection equation (or its barred analogue) on all pairs with total at most `cap`.
pub fn check_reflection_nondiff(n: usize, cap: usize, bar: bool, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let names = ["q", "x", "xbar", "y", "ybar", "z"];
    let v = names.iter().map(|s| sym::<ExactScalar>(p, s)).collect::<Result<Vec<_>>>()?;
    let (q, x, xb, y, yb, z) = (&v[0], &v[1], &v[2], &v[3], &v[4], &v[5]);
    let q2 = q.clone() * q;
    let sp = NondiffSpace::new(n, cap);
    let pm = sp.swap();
    let s = |a: &ExactScalar, b: &ExactScalar| build_s_nondiff(&sp, a, b, &q2);
    let s21 = |a: &ExactScalar, b: &ExactScalar| -> Result<Matrix<ExactScalar>> { Ok(Matrix::product([&pm, &s(a, b)?, &pm])) };
    let (lhs, rhs) = if !bar {
        let k1 = sp.one_site(true, |j, l| build_k_nondiff(j, l, x, xb, z, &q2))?;
        let k2 = sp.one_site(false, |j, l| build_k_nondiff(j, l, y, yb, z, &q2))?;
        let k1t = Tamper::apply(tamper, k1.clone());
        (
            Matrix::product([&s(x, y)?, &k1t, &s21(y, xb)?, &k2]),
            Matrix::product([&k2, &s(x, yb)?, &k1, &s21(yb, xb)?]),
        )
    } else {
        let k1 = sp.one_site(true, |j, l| build_kbar_nondiff(j, l, x, xb, &q2))?;
        let k2 = sp.one_site(false, |j, l| build_kbar_nondiff(j, l, y, yb, &q2))?;
        let k1t = Tamper::apply(tamper, k1.clone());
        (
            Matrix::product([&s21(y, x)?, &k1t, &s(xb, y)?, &k2]),
            Matrix::product([&k2, &s21(yb, x)?, &k1, &s(xb, yb)?]),
        )
    };
    Ok(compare(if bar { "non-difference reflection_bar" } else { "non-difference reflection" }, &lhs, &rhs))
}

pub fn verify_reflection_nondiff(n: usize, cap: usize, bar: bool, budget: &Budget, tamper: Option<&Tamper>) -> CheckRecord {
    let id = if bar { "nondiff.reflection_bar" } else { "nondiff.reflection" };
    let ps = params(&[("n", n.to_string()), ("sector_cap", cap.to_string())]);
    run_check(id, ps, &["q", "x", "xbar", "y", "ybar", "z"], budget, |p| check_reflection_nondiff(n, cap, bar, p, tamper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    fn r(a: i64, b: i64) -> ExactScalar {
        rat(a, b).unwrap()
    }

    fn pt(kv: &[(&str, ExactScalar)]) -> ParamPoint {
        kv.iter().fold(ParamPoint::new(), |p, (k, v)| p.bind(k, v.clone()))
    }

    fn point() -> ParamPoint {
        pt(&[("q", r(3, 2)), ("u", r(5, 7)), ("w", r(2, 9)), ("nu", r(7, 3)), ("mu", r(4, 5))])
    }

    #[test]
    fn families_are_stochastic_and_normalized() {
        let p = point();
        for (n, j) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
            for f in Family::ALL {
                assert_eq!(check_family_invariants(n, j, f, &p, None).unwrap(), None, "{:?} n={} J={}", f, n, j);
            }
        }
    }

    #[test]
    fn reflection_small() {
        let p = point();
        for (n, i, j) in [(2, 1, 1), (3, 1, 2)] {
            let cfg = ModelConfig::new(n, i, j).unwrap();
            for f in Family::ALL {
                assert_eq!(check_reflection(&cfg, f, &p, None).unwrap(), None, "{:?}", f);
            }
            assert_eq!(check_dual_reflection(&cfg, Family::RightUpper, &p, None).unwrap(), None);
            assert_eq!(check_kbar_image(&cfg, &p, None).unwrap(), None);
        }
    }

    #[test]
    fn left_families_fail_the_unbarred_equation_for_unequal_spins() {
        let cfg = ModelConfig::new(3, 1, 2).unwrap();
        let (q, u, w, nu) = (r(3, 2), r(5, 7), r(2, 9), r(7, 3));
        let ki = build_k(3, 1, Family::LeftUpper, &u, &nu, &q).unwrap();
        let kj = build_k(3, 2, Family::LeftUpper, &w, &nu, &q).unwrap();
        let (l, rr) = reflection_sides(&cfg, ReflectionForm::Reflection, &ki, &kj, &u, &w, &q, None).unwrap();
        assert_ne!(l, rr);
    }

    #[test]
    fn twist_of_right_upper_is_right_lower() {
        let (q, w, nu) = (r(3, 2), r(2, 9), r(7, 3));
        for (n, j) in [(3, 1), (3, 2), (4, 2)] {
            let ru = build_k(n, j, Family::RightUpper, &w, &nu, &q).unwrap();
            let t = sigma_twist(&ru, n, j, &w, &nu, &q, TwistDirection::Right).unwrap();
            assert_eq!(t, build_k(n, j, Family::RightLower, &w, &nu, &q).unwrap());
        }
        let cfg = ModelConfig::new(3, 1, 2).unwrap();
        for times in 1..=2 {
            assert_eq!(check_twisted_reflection(&cfg, times, &point(), None).unwrap(), None);
        }
    }

    #[test]
    fn bar_twist_keeps_the_bar_equation() {
        let (q, u, w, nu, mu) = (r(3, 2), r(5, 7), r(2, 9), r(7, 3), r(4, 5));
        for (n, i, j) in [(3, 1, 2), (2, 2, 2)] {
            let cfg = ModelConfig::new(n, i, j).unwrap();
            let ki = build_k(n, i, Family::LeftUpper, &u, &nu, &q).unwrap();
            let kj = build_k(n, j, Family::LeftUpper, &w, &nu, &q).unwrap();
            let ti = sigma_twist(&ki, n, i, &u, &mu, &q, TwistDirection::Bar).unwrap();
            let tj = sigma_twist(&kj, n, j, &w, &mu, &q, TwistDirection::Bar).unwrap();
            let (l, rr) = reflection_sides(&cfg, ReflectionForm::Bar, &ti, &tj, &u, &w, &q, None).unwrap();
            assert_eq!(l, rr, "n={} I={} J={}", n, i, j);
        }
    }

    #[test]
    fn kbar_of_identity_is_identity() {
        let k = build_k(3, 2, Family::RightUpper, &r(1, 1), &r(2, 5), &r(3, 4)).unwrap();
        assert!(k_to_kbar(&k, 3, 2).unwrap().is_identity());
    }

    #[test]
    fn trace_maps() {
        for (n, j) in [(2, 1), (3, 1)] {
            assert_eq!(check_trace_maps(n, j, &point(), None).unwrap(), None);
        }
        let cfg = ModelConfig::new(2, 1, 2).unwrap();
        let err = kbar_from_ktilde_trace(&cfg, &r(2, 3), &r(3, 2), |_| Ok(Matrix::identity(2))).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn ktilde_at_one_is_not_identity() {
        let kt = build_ktilde(2, 1, Family::RightUpper, &r(1, 1), &r(7, 3), &r(3, 2)).unwrap();
        assert!(!kt.is_identity());
    }

    #[test]
    fn recurrences_and_corruption() {
        let p = point();
        assert_eq!(check_recurrences(3, 2, &p, None).unwrap(), None);
        assert_eq!(check_recurrences(2, 2, &p, None).unwrap(), None);
        let t = Tamper { row: 0, col: 1, delta: r(1, 5) };
        assert!(check_recurrences(3, 2, &p, Some(&t)).unwrap().is_some());
    }

    #[test]
    fn nondiff_reflection() {
        let p = pt(&[("q", r(3, 2)), ("x", r(5, 7)), ("xbar", r(2, 9)), ("y", r(7, 3)), ("ybar", r(4, 5)), ("z", r(6, 11))]);
        assert_eq!(check_reflection_nondiff(2, 2, false, &p, None).unwrap(), None);
        assert_eq!(check_reflection_nondiff(2, 3, true, &p, None).unwrap(), None);
    }

    #[test]
    fn nondiff_k_stochastic_at_equal_parameters() {
        let sp = NondiffSpace::new(3, 3);
        let (x, z, q2) = (r(5, 7), r(3, 4), r(9, 4));
        let k = sp.one_site(true, |j, l| build_k_nondiff(j, l, &x, &x, &z, &q2)).unwrap();
        assert!(k.col_sums().iter().all(|s| *s == r(1, 1)));
    }

    #[test]
    fn lambda_at_generic_point() {
        // n = 2: a single factor in each Pochhammer symbol.
        let (q, u, nu) = (r(3, 2), r(5, 7), r(7, 3));
        let q2 = &q * &q;
        let one = r(1, 1);
        let u2 = &u * &u;
        let want = ((&one - &q.powi(4).unwrap().div(&u2).unwrap()) * (&one - &nu.div(&u).unwrap() * &q))
            .div(&((&one - &q2.div(&u2).unwrap()) * (&one - &(&nu * &q.powi(3).unwrap()).div(&u).unwrap())))
            .unwrap();
        assert_eq!(lambda_fn(2, 1, &u, &nu, &q).unwrap(), want);
    }
}
