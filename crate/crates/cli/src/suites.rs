//! Verification suites: each expands to a list of independent checks.

use std::fmt;
use std::str::FromStr;

use qrefl::boundary::golden::check_golden;
use qrefl::boundary::{
    verify_dual_reflection, verify_recurrences, verify_reflection, verify_reflection_bar, verify_reflection_nondiff,
    verify_trace_maps, Family,
};
use qrefl::chain::{verify_hamiltonian, verify_transfer};
use qrefl::harness::{params, run_check};
use qrefl::identities::{verify_appendix_b, verify_orthogonality, verify_star_star, verify_sum1, verify_sum2};
use qrefl::rmat::{
    verify_crossing, verify_degeneration, verify_regularity, verify_rtilde_methods, verify_symmetries, verify_unitarity,
    verify_ybe,
};
use qrefl::{Budget, CheckRecord, Error, ModelConfig, Result, Tamper};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Ybe,
    Unitarity,
    Crossing,
    Symmetries,
    Reflection,
    Dual,
    Recurrences,
    StarStar,
    Sums,
    AppendixB,
    AppendixD,
    Transfer,
    Hamiltonian,
    Nondiff,
    All,
}

impl Suite {
    pub const ALL: [Suite; 15] = [
        Suite::Ybe,
        Suite::Unitarity,
        Suite::Crossing,
        Suite::Symmetries,
        Suite::Reflection,
        Suite::Dual,
        Suite::Recurrences,
        Suite::StarStar,
        Suite::Sums,
        Suite::AppendixB,
        Suite::AppendixD,
        Suite::Transfer,
        Suite::Hamiltonian,
        Suite::Nondiff,
        Suite::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Ybe => "ybe",
            Suite::Unitarity => "unitarity",
            Suite::Crossing => "crossing",
            Suite::Symmetries => "symmetries",
            Suite::Reflection => "reflection",
            Suite::Dual => "dual",
            Suite::Recurrences => "recurrences",
            Suite::StarStar => "starstar",
            Suite::Sums => "sums",
            Suite::AppendixB => "appendixB",
            Suite::AppendixD => "appendixD",
            Suite::Transfer => "transfer",
            Suite::Hamiltonian => "hamiltonian",
            Suite::Nondiff => "nondiff",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown suite '{}'", s))
    }
}

/// Parameters shared by all suites.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub sites: usize,
    pub cap: usize,
    pub right: Family,
    pub budget: Budget,
    pub tamper: Option<Tamper>,
}

impl SuiteConfig {
    /// Rejects configurations that no suite can run on.
    pub fn validate(&self) -> Result<ModelConfig> {
        let cfg = ModelConfig::new(self.n, self.i, self.j)?;
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.sites == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.budget.points == 0 {
            return Err(Error::InvalidConfig("--points must be at least 1".into()));
        }
        if self.budget.bound < 2 {
            return Err(Error::InvalidConfig("--bound must be at least 2".into()));
        }
        if !self.right.is_right() {
            return Err(Error::InvalidConfig(format!("{} is not a right boundary family", self.right.id())));
        }
        Ok(cfg)
    }

    fn square(&self, suite: Suite) -> Result<()> {
        if self.i != self.j {
            return Err(Error::InvalidConfig(format!("suite {} needs I = J", suite)));
        }
        Ok(())
    }
}

pub type Job = Box<dyn Fn() -> Vec<CheckRecord> + Send + Sync>;

fn one(f: impl Fn() -> CheckRecord + Send + Sync + 'static) -> Job {
    Box::new(move || vec![f()])
}

/// The checks of `suite` at `c`, or a configuration error.
pub fn jobs(suite: Suite, c: &SuiteConfig) -> Result<Vec<Job>> {
    let cfg = c.validate()?;
    let (n, i, j, b, t) = (c.n, c.i, c.j, c.budget, c.tamper.clone());
    let m = n - 1;
    let cap = c.cap as i32;
    let mut out: Vec<Job> = Vec::new();
    match suite {
        Suite::Ybe => {
            let spins = [i, j, c.k];
            out.push(one(move || verify_ybe(n, spins, &b, t.as_ref())));
        }
        Suite::Unitarity => out.push(one(move || verify_unitarity(&cfg, &b, t.as_ref()))),
        Suite::Crossing => {
            let t2 = t.clone();
            out.push(one(move || verify_crossing(&cfg, &b, t.as_ref())));
            out.push(one(move || verify_rtilde_methods(&cfg, &b, t2.as_ref())));
        }
        Suite::Symmetries => {
            if i == j {
                let t2 = t.clone();
                out.push(one(move || verify_regularity(n, i, &b, t2.as_ref())));
            }
            out.push(Box::new(move || verify_symmetries(&cfg, &b, t.as_ref())));
        }
        Suite::Reflection => {
            for f in Family::ALL {
                let t = t.clone();
                out.push(one(move || verify_reflection(&cfg, f, &b, t.as_ref())));
            }
            out.push(one(move || verify_reflection_bar(&cfg, &b, t.as_ref())));
        }
        Suite::Dual => {
            for f in [Family::RightUpper, Family::RightLower] {
                let t = t.clone();
                out.push(one(move || verify_dual_reflection(&cfg, f, &b, t.as_ref())));
            }
            if i == j {
                out.push(one(move || verify_trace_maps(n, j, &b, t.as_ref())));
            }
        }
        Suite::Recurrences => out.push(one(move || verify_recurrences(n, j, &b, t.as_ref()))),
        Suite::StarStar => out.push(one(move || verify_star_star(m, cap, &b, t.as_ref()))),
        Suite::Sums => {
            let (t2, t3) = (t.clone(), t.clone());
            out.push(one(move || verify_sum1(n, j, cap, &b, t.as_ref())));
            out.push(one(move || verify_sum2(m, cap, &b, t2.as_ref())));
            out.push(one(move || verify_orthogonality(m, cap, &b, t3.as_ref())));
        }
        Suite::AppendixB => out.push(one(move || verify_appendix_b(&b, t.as_ref()))),
        Suite::AppendixD => out.push(one(move || {
            let ps = params(&[("n", "2,3".into()), ("J", "1,2".into())]);
            run_check("golden", ps, &["q", "nu", "w"], &b, |p| check_golden(p, t.as_ref()))
        })),
        Suite::Transfer | Suite::Hamiltonian => {
            c.square(suite)?;
            let (sites, right) = (c.sites, c.right);
            let f = if suite == Suite::Transfer { verify_transfer } else { verify_hamiltonian };
            out.push(Box::new(move || f(n, j, sites, right, &b, t.as_ref())));
        }
        Suite::Nondiff => {
            let t2 = t.clone();
            let nc = c.cap;
            out.push(one(move || verify_reflection_nondiff(n, nc, false, &b, t2.as_ref())));
            let t3 = t.clone();
            out.push(one(move || verify_reflection_nondiff(n, nc, true, &b, t3.as_ref())));
            if i <= j {
                out.push(one(move || verify_degeneration(&cfg, &b, t.as_ref())));
            }
        }
        Suite::All => {
            for s in Suite::ALL {
                if s == Suite::All || (matches!(s, Suite::Transfer | Suite::Hamiltonian) && i != j) {
                    continue;
                }
                out.extend(jobs(s, c)?);
            }
        }
    }
    Ok(out)
}
