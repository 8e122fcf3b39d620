//! Closed forms of the first two focus quantities, stored as factored
//! integer-coefficient term lists and evaluated exactly or in binary64.
//!
//! File format: a `# title` line, `vars v1 v2 ...`, then blocks
//! `factor numerator|denominator <power>` each followed by lines
//! `<integer coefficient> <exponent per variable>`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::poly::{Monomial, QPoly};
use crate::rational::{self, Q};

pub const G1_DATA_TEXT: &str = include_str!("../data/g1_closed_form.terms");
pub const G2_DATA_TEXT: &str = include_str!("../data/g2_closed_form.terms");
pub const MANIFEST_TEXT: &str = include_str!("../data/closed_forms.manifest");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pole: denominator factor {factor} vanishes at the point")]
    Pole { factor: usize },
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub numerator: bool,
    pub power: u32,
    pub poly: QPoly,
}

/// Summary used by the transcription manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorSummary {
    pub numerator: bool,
    pub power: u32,
    pub terms: usize,
    pub total_degree: u32,
    pub bounds: Vec<u32>,
}

/// A rational function as a product of integer polynomials to powers.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunctionData {
    pub title: String,
    pub vars: Vec<String>,
    pub factors: Vec<Factor>,
}

fn perr(line: usize, message: impl Into<String>) -> OracleError {
    OracleError::Parse {
        line,
        message: message.into(),
    }
}

/// Term-by-term evaluation with Neumaier summation.
fn compensated_eval(p: &QPoly, point: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (m, c) in p.terms() {
        let mut t = rational::to_f64(c);
        for (v, e) in point.iter().zip(m.exponents()) {
            t *= v.powi(*e as i32);
        }
        let s = sum + t;
        comp += if sum.abs() >= t.abs() {
            (sum - s) + t
        } else {
            (t - s) + sum
        };
        sum = s;
    }
    sum + comp
}

impl RationalFunctionData {
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let mut title = String::new();
        let mut vars: Option<Vec<String>> = None;
        let mut factors: Vec<Factor> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if title.is_empty() {
                    title = rest.trim().to_string();
                }
                continue;
            }
            let mut words = t.split_whitespace();
            let head = words.next().unwrap_or_default();
            match head {
                "vars" => vars = Some(words.map(str::to_string).collect()),
                "factor" => {
                    let nv = vars.as_ref().ok_or_else(|| perr(line, "factor before vars"))?.len();
                    let numerator = match words.next() {
                        Some("numerator") => true,
                        Some("denominator") => false,
                        _ => return Err(perr(line, "expected numerator or denominator")),
                    };
                    let power = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| perr(line, "missing factor power"))?;
                    factors.push(Factor {
                        numerator,
                        power,
                        poly: QPoly::zero(nv),
                    });
                }
                _ => {
                    let nv = vars.as_ref().ok_or_else(|| perr(line, "term before vars"))?.len();
                    let f = factors.last_mut().ok_or_else(|| perr(line, "term before factor"))?;
                    let c: BigInt = head
                        .parse()
                        .map_err(|_| perr(line, format!("bad coefficient `{head}`")))?;
                    let exps: Vec<u16> = words
                        .map(|w| w.parse::<u16>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| perr(line, "bad exponent"))?;
                    if exps.len() != nv {
                        return Err(perr(line, format!("expected {nv} exponents, got {}", exps.len())));
                    }
                    f.poly.add_term(Monomial::new(&exps), Q::from_integer(c));
                }
            }
        }
        let vars = vars.ok_or_else(|| perr(0, "missing vars line"))?;
        if factors.iter().any(|f| !f.numerator && f.poly.is_zero()) {
            return Err(perr(0, "denominator factor is identically zero"));
        }
        Ok(RationalFunctionData { title, vars, factors })
    }

    pub fn summaries(&self) -> Vec<FactorSummary> {
        self.factors
            .iter()
            .map(|f| FactorSummary {
                numerator: f.numerator,
                power: f.power,
                terms: f.poly.len(),
                total_degree: f.poly.total_degree().unwrap_or(0),
                bounds: (0..self.vars.len()).map(|v| f.poly.degree_in(v)).collect(),
            })
            .collect()
    }

    fn check_arity(&self, n: usize) -> Result<(), OracleError> {
        if n != self.vars.len() {
            return Err(OracleError::Arity {
                expected: self.vars.len(),
                got: n,
            });
        }
        Ok(())
    }

    /// Exact value; a vanishing denominator factor is reported as a pole.
    pub fn evaluate(&self, point: &[Q]) -> Result<Q, OracleError> {
        self.check_arity(point.len())?;
        let mut num = Q::one();
        let mut den = Q::one();
        for (i, f) in self.factors.iter().enumerate() {
            let v = f.poly.evaluate(point).expect("arity checked");
            if !f.numerator && v.is_zero() {
                return Err(OracleError::Pole { factor: i });
            }
            let v = num_traits::pow(v, f.power as usize);
            if f.numerator {
                num *= v;
            } else {
                den *= v;
            }
        }
        Ok(num / den)
    }

    /// Binary64 value computed factor by factor.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64, OracleError> {
        self.check_arity(point.len())?;
        let mut out = 1.0;
        for (i, f) in self.factors.iter().enumerate() {
            let v = compensated_eval(&f.poly, point);
            if !f.numerator && v == 0.0 {
                return Err(OracleError::Pole { factor: i });
            }
            let v = v.powi(f.power as i32);
            if f.numerator {
                out *= v;
            } else {
                out /= v;
            }
        }
        Ok(out)
    }

    /// Denominator factors vanishing at `point`.
    pub fn poles_at(&self, point: &[Q]) -> Result<Vec<usize>, OracleError> {
        self.check_arity(point.len())?;
        Ok(self
            .factors
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.numerator && f.poly.evaluate(point).expect("arity checked").is_zero())
            .map(|(i, _)| i)
            .collect())
    }
}

/// `g1(k3, k4, k5)`.
pub fn g1_data() -> &'static RationalFunctionData {
    static CELL: OnceLock<RationalFunctionData> = OnceLock::new();
    CELL.get_or_init(|| RationalFunctionData::parse(G1_DATA_TEXT).expect("bundled data parses"))
}

/// `g2(k5)` at `k3 = k4 = 1/10`.
pub fn g2_data() -> &'static RationalFunctionData {
    static CELL: OnceLock<RationalFunctionData> = OnceLock::new();
    CELL.get_or_init(|| RationalFunctionData::parse(G2_DATA_TEXT).expect("bundled data parses"))
}

pub fn g1_closed_form(k3: &Q, k4: &Q, k5: &Q) -> Result<Q, OracleError> {
    g1_data().evaluate(&[k3.clone(), k4.clone(), k5.clone()])
}

/// Valid only with `k3 = k4 = 1/10`.
pub fn g2_closed_form_k5(k5: &Q) -> Result<Q, OracleError> {
    g2_data().evaluate(std::slice::from_ref(k5))
}

/// One manifest line describing a factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestFactor {
    pub file: String,
    pub index: usize,
    pub summary: FactorSummary,
}

/// Parsed transcription manifest: file digests and factor summaries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub digests: Vec<(String, String)>,
    pub factors: Vec<ManifestFactor>,
}

pub fn parse_manifest(text: &str) -> Result<Manifest, OracleError> {
    let mut m = Manifest::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let w: Vec<&str> = t.split_whitespace().collect();
        match w.as_slice() {
            ["sha256", file, digest] => m.digests.push((file.to_string(), digest.to_string())),
            ["factor", file, index, kind, power, terms, degree, bounds] => {
                let num = |s: &str| s.parse::<u32>().map_err(|_| perr(line, format!("bad number `{s}`")));
                m.factors.push(ManifestFactor {
                    file: file.to_string(),
                    index: num(index)? as usize,
                    summary: FactorSummary {
                        numerator: *kind == "numerator",
                        power: num(power)?,
                        terms: num(terms)? as usize,
                        total_degree: num(degree)?,
                        bounds: bounds.split(',').map(num).collect::<Result<_, _>>()?,
                    },
                });
            }
            _ => return Err(perr(line, "unrecognized manifest line")),
        }
    }
    Ok(m)
}

/// Decimal text of an exact value, for reports.
pub fn describe(q: &Q) -> String {
    format!("{} ({})", rational::to_f64(q), rational::to_exact_string(q))
}
