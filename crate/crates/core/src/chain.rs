//! Open chains: the double-row transfer matrix, the Hamiltonian obtained from
//! it and from local terms, stochasticity diagnostics, the Markov generator
//! and its exact and simulated stationary laws.
//!
//! The quantum space is `V_J^{(x)N}` with site 1 as the most significant
//! tensor factor. The right boundary is a right family at `nu_r`. The
//! left boundary is the dual matrix of the right-upper family at
//! `1/(nu_l q^n)`, divided by `lambda(1/u; nu_l)`, so its trace image is the
//! stochastic left-upper family at `nu_l`.

use std::time::Duration;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{build_k, build_ktilde, lambda_fn, Family};
use crate::error::{Error, Result};
use crate::exactnum::{ExactScalar, Field, Jet, ParamPoint};
use crate::harness::{compare, params, run_check, sym, Budget, CheckRecord, Eval, Tamper, Witness};
use crate::linalg::{left_null_probability, rank_exact, Matrix};
use crate::qkit::enumerate_basis;
use crate::rmat::{build_s, ModelConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub n: usize,
    pub spin: usize,
    pub sites: usize,
    pub q: ExactScalar,
    pub nu_r: ExactScalar,
    pub nu_l: ExactScalar,
    /// Family of the right boundary, `RightUpper` unless set with [`ChainSpec::with_right`].
    pub right: Family,
}

impl ChainSpec {
    pub fn new(n: usize, spin: usize, sites: usize, q: ExactScalar, nu_r: ExactScalar, nu_l: ExactScalar) -> Result<Self> {
        ModelConfig::new(n, spin, spin)?;
        if sites < 1 {
            return Err(Error::InvalidConfig("a chain needs at least one site".into()));
        }
        Ok(ChainSpec { n, spin, sites, q, nu_r, nu_l, right: Family::RightUpper })
    }

    /// Selects the right boundary family. With two upper families the empty
    /// configuration is absorbing; a right-lower boundary injects particles.
    pub fn with_right(mut self, family: Family) -> Result<Self> {
        if !family.is_right() {
            return Err(Error::InvalidConfig(format!("{} is not a right boundary family", family.id())));
        }
        self.right = family;
        Ok(self)
    }

    /// Reads `q`, `nu_r` and `nu_l` from a sampled point.
    pub fn at_point(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint) -> Result<Self> {
        ChainSpec::new(n, spin, sites, sym(p, "q")?, sym(p, "nu_r")?, sym(p, "nu_l")?)?.with_right(right)
    }

    pub fn local_dim(&self) -> usize {
        enumerate_basis(self.n, self.spin).len()
    }

    /// `dim(V_J)^N`
    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.sites as u32)
    }

    fn cfg(&self) -> ModelConfig {
        ModelConfig { n: self.n, i: self.spin, j: self.spin }
    }
}

/// The normalized left dual matrix `Ktilde(u; 1/(nu_l q^n)) / lambda(1/u; nu_l)`.
pub fn left_boundary<F: Field>(spec: &ChainSpec, u: &F) -> Result<Matrix<F>> {
    let q = F::from_scalar(&spec.q);
    let nu_l = F::from_scalar(&spec.nu_l);
    let nu_in = (nu_l.clone() * &q.powi(spec.n as i64)?).inv()?;
    let kt = build_ktilde(spec.n, spec.spin, Family::RightUpper, u, &nu_in, &q)?;
    let lam = lambda_fn(spec.n, spec.spin, &u.inv()?, &nu_l, &q)?;
    Ok(kt.scale(&lam.inv()?))
}

/// `T(u) = tr_0[Kt_0 R_01 ... R_0N K_0 R_N0 ... R_10]` with `u = x^2`.
pub fn double_row_transfer<F: Field>(spec: &ChainSpec, u: &F) -> Result<Matrix<F>> {
    let d = spec.local_dim();
    let dims = vec![d; spec.sites + 1];
    let q = F::from_scalar(&spec.q);
    let s = build_s(&spec.cfg(), u, &q)?;
    let kt = Matrix::embed(&left_boundary(spec, u)?, &[0], &dims);
    let kr = Matrix::embed(&build_k(spec.n, spec.spin, spec.right, u, &F::from_scalar(&spec.nu_r), &q)?, &[0], &dims);
    let mut x = kt;
    for k in 1..=spec.sites {
        x = x.mul(&Matrix::embed(&s, &[0, k], &dims));
    }
    x = x.mul(&kr);
    for k in (1..=spec.sites).rev() {
        x = x.mul(&Matrix::embed(&s, &[k, 0], &dims));
    }
    Ok(x.partial_trace(&dims, 0))
}

/// `u = (1 + eps)^2`: jets in `x` around `x = 1`.
fn x_at_one() -> Jet {
    let x = Jet::variable(&ExactScalar::one());
    x.clone() * &x
}

fn derivative(m: &Matrix<Jet>) -> Result<Matrix<ExactScalar>> {
    Ok(m.try_map(|v| v.derivative())?)
}

fn value(m: &Matrix<Jet>) -> Result<Matrix<ExactScalar>> {
    Ok(m.try_map(|v| v.value())?)
}

/// `tr Kt(1)` of the normalized left boundary.
pub fn left_trace_at_one(spec: &ChainSpec) -> Result<ExactScalar> {
    Ok(value(&left_boundary(spec, &x_at_one())?)?.trace())
}

/// `H = -(1/4) T'(1) / tr Kt(1)`, derivative in `x`.
pub fn hamiltonian_from_transfer(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let t = double_row_transfer(spec, &x_at_one())?;
    let tr = left_trace_at_one(spec)?;
    let f = ExactScalar::from(-4) * &tr;
    Ok(derivative(&t)?.scale(&f.inv()?))
}

/// Two-site bulk term `-(1/2) R'(1) P`.
pub fn bulk_term(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let d = spec.local_dim();
    let q = Jet::constant(&spec.q);
    let rp = derivative(&build_s(&spec.cfg(), &x_at_one(), &q)?)?;
    Ok(rp.mul(&Matrix::swap(d, d)).scale(&crate::exactnum::rat(-1, 2)?))
}

/// `B_R = -(1/4) K'(1)` for the right family at `nu_r`.
pub fn right_boundary_term(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let (q, nu) = (Jet::constant(&spec.q), Jet::constant(&spec.nu_r));
    let k = build_k(spec.n, spec.spin, spec.right, &x_at_one(), &nu, &q)?;
    Ok(derivative(&k)?.scale(&crate::exactnum::rat(-1, 4)?))
}

/// `B_L = (1/4) Kbar'(1) / tr Kt(1)` for the left-upper family at `nu_l`.
pub fn left_boundary_term(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let (q, nu) = (Jet::constant(&spec.q), Jet::constant(&spec.nu_l));
    let k = build_k(spec.n, spec.spin, Family::LeftUpper, &x_at_one(), &nu, &q)?;
    let f = ExactScalar::from(4) * &left_trace_at_one(spec)?;
    Ok(derivative(&k)?.scale(&f.inv()?))
}

/// `H = B_L (x) 1 + sum_k H_{k,k+1} + 1 (x) B_R`.
pub fn hamiltonian_local(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let dims = vec![spec.local_dim(); spec.sites];
    let mut h = Matrix::embed(&left_boundary_term(spec)?, &[0], &dims);
    let bulk = bulk_term(spec)?;
    for k in 0..spec.sites.saturating_sub(1) {
        h = h.add(&Matrix::embed(&bulk, &[k, k + 1], &dims));
    }
    Ok(h.add(&Matrix::embed(&right_boundary_term(spec)?, &[spec.sites - 1], &dims)))
}

/// Bulk terms on every bond of the ring, with no boundary terms.
pub fn hamiltonian_periodic(spec: &ChainSpec) -> Result<Matrix<ExactScalar>> {
    let dims = vec![spec.local_dim(); spec.sites];
    let dim = spec.dim();
    let bulk = bulk_term(spec)?;
    let mut h = Matrix::zeros(dim, dim);
    if spec.sites < 2 {
        return Ok(h);
    }
    let bonds = if spec.sites == 2 { 1 } else { spec.sites };
    for k in 0..bonds {
        h = h.add(&Matrix::embed(&bulk, &[k, (k + 1) % spec.sites], &dims));
    }
    Ok(h)
}

/// `M = -H^T`; `M[a][b]` is the rate of `a -> b`.
pub fn generator(h: &Matrix<ExactScalar>) -> Matrix<ExactScalar> {
    h.transpose().scale(&ExactScalar::from(-1))
}

/// The stationary law `pi M = 0`, `sum pi = 1`.
pub fn stationary_exact(m: &Matrix<ExactScalar>) -> Result<Vec<ExactScalar>> {
    left_null_probability(m)
}

/// `Some(c)` if `<1| T = c <1|`.
pub fn left_eigenvalue_of_ones(t: &Matrix<ExactScalar>) -> Option<ExactScalar> {
    let sums = t.col_sums();
    let c = sums.first()?.clone();
    sums.iter().all(|s| *s == c).then_some(c)
}

/// Off-diagonal entries of `M` that are negative, as `(from, to, rate)`.
pub fn negative_rates(m: &Matrix<ExactScalar>) -> Vec<(usize, usize, f64)> {
    m.entries()
        .filter(|(r, c, v)| r != c && v.is_negative())
        .map(|(r, c, v)| (r, c, v.to_f64()))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// `c(u)` with `<1| T(u) = c(u) <1|`, or `None` if the column sums differ.
    pub c_u: Option<ExactScalar>,
    pub u: ExactScalar,
    pub rank: usize,
    pub dim: usize,
    pub rank_is_dim_minus_one: bool,
    pub negative_rates: Vec<(usize, usize, f64)>,
    pub periodic_rank: usize,
}

impl Diagnostics {
    /// The ring without boundaries keeps extra zero modes; reported, never a failure.
    pub fn periodic_rank_deficit(&self) -> bool {
        self.periodic_rank + 1 < self.dim
    }

    pub fn summary(&self) -> String {
        format!(
            "c({}) = {}; rank H = {} of {}; periodic rank {}{}; {} negative rates",
            self.u,
            self.c_u.as_ref().map_or("not proportional".to_string(), |c| c.to_string()),
            self.rank,
            self.dim,
            self.periodic_rank,
            if self.periodic_rank_deficit() { " (deficit)" } else { "" },
            self.negative_rates.len()
        )
    }
}

pub fn markov_diagnostics(spec: &ChainSpec, u: &ExactScalar) -> Result<Diagnostics> {
    let t = double_row_transfer(spec, u)?;
    let h = hamiltonian_local(spec)?;
    let rank = rank_exact(&h);
    let dim = spec.dim();
    Ok(Diagnostics {
        c_u: left_eigenvalue_of_ones(&t),
        u: u.clone(),
        rank,
        dim,
        rank_is_dim_minus_one: rank + 1 == dim,
        negative_rates: negative_rates(&generator(&h)),
        periodic_rank: rank_exact(&hamiltonian_periodic(spec)?),
    })
}

/// Negative rates of `M = -H^T` at each `(q, nu_r, nu_l)`.
pub fn sign_survey(n: usize, spin: usize, sites: usize, points: &[(ExactScalar, ExactScalar, ExactScalar)]) -> Result<Vec<Vec<(usize, usize, f64)>>> {
    points
        .iter()
        .map(|(q, a, b)| {
            let spec = ChainSpec::new(n, spin, sites, q.clone(), a.clone(), b.clone())?;
            Ok(negative_rates(&generator(&hamiltonian_local(&spec)?)))
        })
        .collect()
}

/// `[T(u), T(v)] = 0`; the tamper perturbs `T(u)` in the first product.
pub fn check_commuting_transfer(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let spec = ChainSpec::at_point(n, spin, sites, right, p)?;
    let (u, v): (ExactScalar, ExactScalar) = (sym(p, "u")?, sym(p, "v")?);
    let tu = double_row_transfer(&spec, &u)?;
    let tv = double_row_transfer(&spec, &v)?;
    Ok(compare("[T(u), T(v)]", &Tamper::apply(tamper, tu.clone()).mul(&tv), &tv.mul(&tu)))
}

/// `T(1) = tr Kt(1) Id`, evaluated as a limit.
pub fn check_transfer_at_one(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let spec = ChainSpec::at_point(n, spin, sites, right, p)?;
    let t1 = Tamper::apply(tamper, value(&double_row_transfer(&spec, &x_at_one())?)?);
    Ok(compare("T(1)", &t1, &Matrix::identity(spec.dim()).scale(&left_trace_at_one(&spec)?)))
}

/// The transfer-matrix Hamiltonian equals the sum of local terms.
pub fn check_hamiltonians_agree(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let spec = ChainSpec::at_point(n, spin, sites, right, p)?;
    let ht = Tamper::apply(tamper, hamiltonian_from_transfer(&spec)?);
    Ok(compare("H from T vs local H", &ht, &hamiltonian_local(&spec)?))
}

/// `<1| H = 0` and `rank H = dim - 1`.
pub fn check_h_stochastic(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let spec = ChainSpec::at_point(n, spin, sites, right, p)?;
    let h = Tamper::apply(tamper, hamiltonian_local(&spec)?);
    if let Some((c, s)) = h.col_sums().iter().enumerate().find(|(_, s)| !s.is_zero()) {
        return Ok(Some(Witness::new(vec![c], "<1|H column sum", s, 0)));
    }
    let rank = rank_exact(&h);
    if rank + 1 != spec.dim() {
        return Ok(Some(Witness::new(vec![rank], "rank H", rank, spec.dim() - 1)));
    }
    Ok(None)
}

/// `<1| T(u) = c(u) <1|`.
pub fn check_transfer_stochastic(n: usize, spin: usize, sites: usize, right: Family, p: &ParamPoint, tamper: Option<&Tamper>) -> Eval {
    let spec = ChainSpec::at_point(n, spin, sites, right, p)?;
    let t = Tamper::apply(tamper, double_row_transfer(&spec, &sym::<ExactScalar>(p, "u")?)?);
    let sums = t.col_sums();
    Ok(sums.iter().position(|s| *s != sums[0]).map(|c| Witness::new(vec![0, c], "<1|T(u) column sums", &sums[c], &sums[0])))
}

const CHAIN_SYMBOLS: [&str; 5] = ["q", "nu_r", "nu_l", "u", "v"];

fn chain_check(id: &str, n: usize, spin: usize, sites: usize, right: Family, budget: &Budget, f: impl Fn(&ParamPoint) -> Eval) -> CheckRecord {
    let spec_params = params(&[("n", n.to_string()), ("J", spin.to_string()), ("N", sites.to_string()), ("right", right.id().to_string())]);
    run_check(id, spec_params, &CHAIN_SYMBOLS, budget, f)
}

/// Commuting transfer matrices, `T(1)` and `<1|T(u) ~ <1|`. The last record
/// carries the measured `c(u)`, the rank of `H` and the periodic control.
pub fn verify_transfer(n: usize, spin: usize, sites: usize, right: Family, budget: &Budget, tamper: Option<&Tamper>) -> Vec<CheckRecord> {
    let mut out = vec![
        chain_check("transfer.commute", n, spin, sites, right, budget, |p| check_commuting_transfer(n, spin, sites, right, p, tamper)),
        chain_check("transfer.at_one", n, spin, sites, right, budget, |p| check_transfer_at_one(n, spin, sites, right, p, tamper)),
    ];
    let mut rec = chain_check("transfer.stochastic", n, spin, sites, right, budget, |p| check_transfer_stochastic(n, spin, sites, right, p, tamper));
    if rec.passed() {
        let p = crate::exactnum::sample_point(&CHAIN_SYMBOLS, crate::harness::attempt_seed(budget.seed, 0), budget.bound);
        let note = ChainSpec::at_point(n, spin, sites, right, &p)
            .and_then(|s| markov_diagnostics(&s, p.get("u").map_err(Error::Num)?))
            .map_or_else(|e| format!("diagnostics unavailable: {}", e), |d| d.summary());
        rec = rec.with_note(note);
    }
    out.push(rec);
    out
}

/// The two Hamiltonians agree, `<1|H = 0` and `rank H = dim - 1`.
pub fn verify_hamiltonian(n: usize, spin: usize, sites: usize, right: Family, budget: &Budget, tamper: Option<&Tamper>) -> Vec<CheckRecord> {
    vec![
        chain_check("hamiltonian.agree", n, spin, sites, right, budget, |p| check_hamiltonians_agree(n, spin, sites, right, p, tamper)),
        chain_check("hamiltonian.stochastic", n, spin, sites, right, budget, |p| check_h_stochastic(n, spin, sites, right, p, tamper)),
    ]
}

/// [`verify_transfer`] followed by [`verify_hamiltonian`].
pub fn verify_chain(n: usize, spin: usize, sites: usize, right: Family, budget: &Budget, tamper: Option<&Tamper>) -> Vec<CheckRecord> {
    let mut out = verify_transfer(n, spin, sites, right, budget, tamper);
    out.extend(verify_hamiltonian(n, spin, sites, right, budget, tamper));
    out
}

/// Options for [`gillespie_simulate`]; the run stops at whichever limit comes first.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub t_max: f64,
    pub max_events: usize,
    pub seed: u64,
    pub initial_state: usize,
    pub record_jumps: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { t_max: f64::INFINITY, max_events: 100_000, seed: 1, initial_state: 0, record_jumps: false }
    }
}

#[derive(Clone, Debug)]
pub struct SimResult {
    /// `(time, state)` after each jump, starting with `(0, initial_state)`.
    pub jumps: Vec<(f64, usize)>,
    /// Fraction of time spent in each state.
    pub occupancy: Vec<f64>,
    pub events: usize,
    pub total_time: f64,
    pub wall: Duration,
}

/// Continuous-time jump chain for a row-convention generator.
///
/// Refuses with [`Error::NegativeRate`] if any off-diagonal rate is negative.
pub fn gillespie_simulate(m: &Matrix<ExactScalar>, cfg: &SimConfig) -> Result<SimResult> {
    let start = std::time::Instant::now();
    let dim = m.rows();
    if cfg.initial_state >= dim {
        return Err(Error::InvalidConfig(format!("initial state {} outside 0..{}", cfg.initial_state, dim)));
    }
    let mut out_rates: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (a, b, v) in m.entries() {
        if a == b {
            continue;
        }
        if v.is_negative() {
            return Err(Error::NegativeRate { from: a, to: b, rate: v.to_f64() });
        }
        if !v.is_zero() {
            out_rates[a].push((b, v.to_f64()));
        }
    }
    let choosers: Vec<Option<WeightedIndex<f64>>> =
        out_rates.iter().map(|r| WeightedIndex::new(r.iter().map(|x| x.1)).ok()).collect();
    let totals: Vec<f64> = out_rates.iter().map(|r| r.iter().map(|x| x.1).sum()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = cfg.initial_state;
    let mut t = 0.0;
    let mut time_in = vec![0.0; dim];
    let mut jumps = if cfg.record_jumps { vec![(0.0, state)] } else { Vec::new() };
    let mut events = 0;
    let mut absorbed = None;
    while events < cfg.max_events {
        let Some(chooser) = &choosers[state] else {
            // Absorbing state: it holds the rest of the time window.
            if !cfg.t_max.is_finite() {
                absorbed = Some(state);
                break;
            }
            time_in[state] += cfg.t_max - t;
            t = cfg.t_max;
            break;
        };
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let dt = -u.ln() / totals[state];
        if t + dt >= cfg.t_max {
            time_in[state] += cfg.t_max - t;
            t = cfg.t_max;
            break;
        }
        time_in[state] += dt;
        t += dt;
        state = out_rates[state][chooser.sample(&mut rng)].0;
        events += 1;
        if cfg.record_jumps {
            jumps.push((t, state));
        }
    }
    let occupancy = match absorbed {
        // An unbounded window is spent entirely in the absorbing state.
        Some(a) => (0..dim).map(|s| if s == a { 1.0 } else { 0.0 }).collect(),
        None if t > 0.0 => time_in.iter().map(|x| x / t).collect(),
        None => time_in,
    };
    Ok(SimResult { jumps, occupancy, events, total_time: t, wall: start.elapsed() })
}
