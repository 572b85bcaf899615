//! Exact matrix construction for `build` and its JSON and CSV serializations.

use std::fmt;
use std::str::FromStr;

use qrefl::boundary::{build_k, build_ktilde, k_to_kbar, Family};
use qrefl::chain::{double_row_transfer, generator, hamiltonian_local, ChainSpec};
use qrefl::rmat::{build_l, build_m, build_rbar, build_s, LSide};
use qrefl::{Error, ExactScalar, Field, Matrix, ModelConfig, Result};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Object {
    S,
    Rbar,
    L,
    M,
    K,
    Kbar,
    Ktilde,
    T,
    H,
    Generator,
}

impl FromStr for Object {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "s" => Object::S,
            "rbar" => Object::Rbar,
            "l" => Object::L,
            "m" => Object::M,
            "k" => Object::K,
            "kbar" => Object::Kbar,
            "ktilde" => Object::Ktilde,
            "t" => Object::T,
            "h" => Object::H,
            "generator" => Object::Generator,
            _ => return Err(format!("unknown object '{}'", s)),
        })
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Object::S => "S",
            Object::Rbar => "Rbar",
            Object::L => "L",
            Object::M => "M",
            Object::K => "K",
            Object::Kbar => "Kbar",
            Object::Ktilde => "Ktilde",
            Object::T => "T",
            Object::H => "H",
            Object::Generator => "generator",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{}'", s)),
        }
    }
}

/// Inputs to `build`. Only the symbols an object uses are required.
#[derive(Clone, Debug, Default)]
pub struct BuildArgs {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub sites: usize,
    pub family: Option<Family>,
    pub side: Option<LSide>,
    pub right: Option<Family>,
    pub q: Option<ExactScalar>,
    pub u: Option<ExactScalar>,
    pub x: Option<ExactScalar>,
    pub w: Option<ExactScalar>,
    pub nu: Option<ExactScalar>,
    pub nu_r: Option<ExactScalar>,
    pub nu_l: Option<ExactScalar>,
}

/// A built matrix with the bindings that produced it, in insertion order.
pub struct Built {
    pub object: Object,
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub params: Vec<(String, String)>,
    pub matrix: Matrix<ExactScalar>,
}

struct Bindings<'a> {
    args: &'a BuildArgs,
    used: Vec<(String, String)>,
}

impl Bindings<'_> {
    fn get(&mut self, name: &str, v: &Option<ExactScalar>) -> Result<ExactScalar> {
        let v = v.clone().ok_or_else(|| Error::InvalidConfig(format!("--{} is required for this object", name.replace('_', "-"))))?;
        self.used.push((name.to_string(), v.to_fraction_string()));
        Ok(v)
    }

    fn note(&mut self, name: &str, v: impl Into<String>) {
        self.used.push((name.to_string(), v.into()));
    }

    fn family(&mut self, default: Family) -> Family {
        let f = self.args.family.unwrap_or(default);
        self.note("family", f.id());
        f
    }
}

pub fn build(object: Object, a: &BuildArgs) -> Result<Built> {
    let mut b = Bindings { args: a, used: Vec::new() };
    let (mut i, j) = (a.i, a.j);
    let matrix = match object {
        Object::S | Object::Rbar => {
            let cfg = ModelConfig::new(a.n, a.i, a.j)?;
            let q = b.get("q", &a.q)?;
            if object == Object::S {
                build_s(&cfg, &b.get("u", &a.u)?, &q)?
            } else {
                build_rbar(&cfg, &b.get("x", &a.x)?, &q)?
            }
        }
        Object::L => {
            ModelConfig::new(a.n, a.j, a.j)?;
            let side = a.side.unwrap_or(LSide::FirstFundamental);
            b.note("side", side_id(side));
            i = 1;
            build_l(a.n, a.j, side, &b.get("u", &a.u)?, &b.get("q", &a.q)?)?
        }
        Object::M => {
            ModelConfig::new(a.n, a.j, a.j)?;
            i = j;
            build_m(a.n, a.j, &b.get("q", &a.q)?)?
        }
        Object::K | Object::Kbar | Object::Ktilde => {
            ModelConfig::new(a.n, a.j, a.j)?;
            i = j;
            let family = b.family(Family::RightUpper);
            let (w, nu, q) = (b.get("w", &a.w)?, b.get("nu", &a.nu)?, b.get("q", &a.q)?);
            match object {
                Object::K => build_k(a.n, a.j, family, &w, &nu, &q)?,
                Object::Kbar => {
                    right_only(family)?;
                    k_to_kbar(&build_k(a.n, a.j, family, &w.inv()?, &nu, &q)?, a.n, a.j)?
                }
                _ => {
                    right_only(family)?;
                    build_ktilde(a.n, a.j, family, &w, &nu, &q)?
                }
            }
        }
        Object::T | Object::H | Object::Generator => {
            let q = b.get("q", &a.q)?;
            let nu_r = b.get("nu_r", &a.nu_r.clone().or_else(|| a.nu.clone()))?;
            let nu_l = b.get("nu_l", &a.nu_l.clone().or_else(|| a.nu.clone()))?;
            let right = a.right.unwrap_or(Family::RightUpper);
            b.note("N", a.sites.to_string());
            b.note("right", right.id());
            let spec = ChainSpec::new(a.n, a.j, a.sites, q, nu_r, nu_l)?.with_right(right)?;
            i = j;
            match object {
                Object::T => double_row_transfer(&spec, &b.get("u", &a.u)?)?,
                Object::H => hamiltonian_local(&spec)?,
                _ => generator(&hamiltonian_local(&spec)?),
            }
        }
    };
    Ok(Built { object, n: a.n, i, j, params: b.used, matrix })
}

fn right_only(f: Family) -> Result<()> {
    if f.is_right() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("this object is built from a right family, got {}", f.id())))
    }
}

pub fn side_id(s: LSide) -> &'static str {
    match s {
        LSide::FirstFundamental => "first",
        LSide::SecondFundamental => "second",
    }
}

pub fn parse_side(s: &str) -> std::result::Result<LSide, String> {
    match s {
        "first" => Ok(LSide::FirstFundamental),
        "second" => Ok(LSide::SecondFundamental),
        _ => Err(format!("unknown side '{}' (first or second)", s)),
    }
}

/// The nonzero entries, row-major.
fn nonzero(m: &Matrix<ExactScalar>) -> impl Iterator<Item = (usize, usize, String)> + '_ {
    m.entries().filter(|(_, _, v)| !v.is_zero()).map(|(r, c, v)| (r, c, v.to_fraction_string()))
}

pub fn to_json(b: &Built) -> Value {
    let params: Map<String, Value> = b.params.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let entries: Vec<Value> = nonzero(&b.matrix).map(|(r, c, v)| json!([r, c, v])).collect();
    json!({
        "object": b.object.to_string(),
        "n": b.n,
        "I": b.i,
        "J": b.j,
        "ordering": "lex",
        "rows": b.matrix.rows(),
        "cols": b.matrix.cols(),
        "params": Value::Object(params),
        "entries": entries,
    })
}

pub fn write_csv<W: std::io::Write>(b: &Built, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "value"])?;
    for (r, c, v) in nonzero(&b.matrix) {
        w.write_record([r.to_string(), c.to_string(), v])?;
    }
    w.flush()?;
    Ok(())
}
