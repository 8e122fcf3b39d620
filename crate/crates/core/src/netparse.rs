//! A line-oriented reaction-network language and the generalized
//! mass-action ODEs it induces.
//!
//! ```text
//! species A1 A2 A3
//! 0 -K1-> A1
//! 4*A2[order=2] -K3-> A3
//! A2[order=eps] -K6-> 0
//! ```
//!
//! Each reaction is `lhs -RATE-> rhs`. A side is `0` or `+`-separated terms
//! `n*Species`, optionally with a kinetic-order annotation `[order=q]` on
//! reactants. The order defaults to the stoichiometry; `eps` is the only
//! symbolic order accepted by [`mass_action_odes`]. Without a `species` line
//! species are declared implicitly by first use.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::{Monomial, QPoly};
use crate::rational::{self, Q};

/// The reserved symbolic kinetic order.
pub const EPS: &str = "eps";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {kind}")]
pub struct NetParseError {
    pub line: usize,
    pub col: usize,
    pub kind: NetErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetErrorKind {
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("malformed reaction arrow, expected `-RATE->`")]
    MalformedArrow,
    #[error("duplicate rate symbol `{0}`")]
    DuplicateRate(String),
    #[error("zero stoichiometry")]
    ZeroStoichiometry,
    #[error("duplicate species declaration `{0}`")]
    DuplicateSpecies(String),
    #[error("kinetic order annotation on a product")]
    OrderOnProduct,
    #[error("unexpected `{0}`")]
    Unexpected(String),
    #[error("invalid number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OdeError {
    #[error("reaction {rate}: unsupported symbolic kinetic order `{symbol}` (only `eps` is allowed)")]
    SymbolicOrder { rate: String, symbol: String },
}

/// Kinetic order of one reactant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Order {
    Number(Q),
    Symbol(String),
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Number(q) if rational::is_integer(q) => write!(f, "{}", q.numer()),
            Order::Number(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Order::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reactant {
    pub species: usize,
    pub stoichiometry: u32,
    pub order: Order,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    pub species: usize,
    pub stoichiometry: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub reactants: Vec<Reactant>,
    pub products: Vec<Product>,
    pub rate: String,
    /// 1-based source line.
    pub line: usize,
}

impl Reaction {
    pub fn is_source(&self) -> bool {
        self.reactants.is_empty()
    }

    pub fn is_sink(&self) -> bool {
        self.products.is_empty()
    }

    /// Net stoichiometric change of `species`.
    pub fn net_change(&self, species: usize) -> i64 {
        let made: i64 = self
            .products
            .iter()
            .filter(|p| p.species == species)
            .map(|p| p.stoichiometry as i64)
            .sum();
        let used: i64 = self
            .reactants
            .iter()
            .filter(|r| r.species == species)
            .map(|r| r.stoichiometry as i64)
            .sum();
        made - used
    }
}

/// Species in declaration order and reactions in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    /// Structural equality ignoring source line numbers.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.species == other.species
            && self.reactions.len() == other.reactions.len()
            && self
                .reactions
                .iter()
                .zip(&other.reactions)
                .all(|(a, b)| a.reactants == b.reactants && a.products == b.products && a.rate == b.rate)
    }

    pub fn rate_symbols(&self) -> Vec<&str> {
        self.reactions.iter().map(|r| r.rate.as_str()).collect()
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.species.is_empty() {
            writeln!(f, "species {}", self.species.join(" "))?;
        }
        for r in &self.reactions {
            if r.reactants.is_empty() {
                f.write_str("0")?;
            }
            for (i, t) in r.reactants.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                if t.stoichiometry != 1 {
                    write!(f, "{}*", t.stoichiometry)?;
                }
                f.write_str(&self.species[t.species])?;
                let default = Order::Number(rational::int(t.stoichiometry as i64));
                if t.order != default {
                    write!(f, "[order={}]", t.order)?;
                }
            }
            write!(f, " -{}-> ", r.rate)?;
            if r.products.is_empty() {
                f.write_str("0")?;
            }
            for (i, t) in r.products.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                if t.stoichiometry != 1 {
                    write!(f, "{}*", t.stoichiometry)?;
                }
                f.write_str(&self.species[t.species])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    species: &'a mut Vec<String>,
    implicit: bool,
}

impl LineParser<'_> {
    fn err(&self, col: usize, kind: NetErrorKind) -> NetParseError {
        NetParseError {
            line: self.line,
            col,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn number(&mut self) -> Option<String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '.' || c == '/' {
                self.pos += 1;
            } else {
                break;
            }
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn species_index(&mut self, name: String, col: usize) -> Result<usize, NetParseError> {
        if let Some(i) = self.species.iter().position(|s| *s == name) {
            return Ok(i);
        }
        if self.implicit {
            self.species.push(name);
            Ok(self.species.len() - 1)
        } else {
            Err(self.err(col, NetErrorKind::UnknownSpecies(name)))
        }
    }

    /// One `n*Species[order=q]` term.
    fn term(&mut self, reactant: bool) -> Result<Reactant, NetParseError> {
        self.skip_ws();
        let start_col = self.col();
        let mut stoich = 1u32;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let text = self.number().unwrap_or_default();
            stoich = text
                .parse()
                .map_err(|_| self.err(start_col, NetErrorKind::BadNumber(text.clone())))?;
            self.skip_ws();
            if self.peek() == Some('*') {
                self.pos += 1;
                self.skip_ws();
            }
            if stoich == 0 {
                return Err(self.err(start_col, NetErrorKind::ZeroStoichiometry));
            }
        }
        let col = self.col();
        let name = self
            .ident()
            .ok_or_else(|| self.err(col, NetErrorKind::Unexpected(self.rest())))?;
        let species = self.species_index(name, col)?;
        let mut order = Order::Number(rational::int(stoich as i64));
        self.skip_ws();
        if self.peek() == Some('[') {
            let bcol = self.col();
            if !reactant {
                return Err(self.err(bcol, NetErrorKind::OrderOnProduct));
            }
            self.pos += 1;
            self.skip_ws();
            let kcol = self.col();
            if self.ident().as_deref() != Some("order") {
                return Err(self.err(kcol, NetErrorKind::Unexpected(self.rest())));
            }
            self.skip_ws();
            if self.peek() != Some('=') {
                return Err(self.err(self.col(), NetErrorKind::Unexpected(self.rest())));
            }
            self.pos += 1;
            self.skip_ws();
            let vcol = self.col();
            order = if self.peek().is_some_and(|c| c.is_alphabetic()) {
                Order::Symbol(self.ident().unwrap_or_default())
            } else {
                let neg = self.peek() == Some('-');
                if neg {
                    self.pos += 1;
                }
                let text = self.number().unwrap_or_default();
                let v = rational::parse(&text).map_err(|_| self.err(vcol, NetErrorKind::BadNumber(text.clone())))?;
                Order::Number(if neg { -v } else { v })
            };
            self.skip_ws();
            if self.peek() != Some(']') {
                return Err(self.err(self.col(), NetErrorKind::Unexpected(self.rest())));
            }
            self.pos += 1;
        }
        Ok(Reactant {
            species,
            stoichiometry: stoich,
            order,
        })
    }

    fn rest(&self) -> String {
        let s: String = self.chars[self.pos..].iter().collect();
        if s.is_empty() {
            "end of line".into()
        } else {
            s
        }
    }

    /// A side up to `stop` (a predicate on the remaining text).
    fn side(&mut self, reactant: bool, stop: impl Fn(&Self) -> bool) -> Result<Vec<Reactant>, NetParseError> {
        self.skip_ws();
        if self.peek() == Some('0') {
            let save = self.pos;
            self.pos += 1;
            self.skip_ws();
            if stop(self) {
                return Ok(Vec::new());
            }
            self.pos = save;
        }
        let mut out = vec![self.term(reactant)?];
        loop {
            self.skip_ws();
            if stop(self) {
                return Ok(out);
            }
            if self.peek() == Some('+') {
                self.pos += 1;
                out.push(self.term(reactant)?);
            } else {
                return Err(self.err(self.col(), NetErrorKind::Unexpected(self.rest())));
            }
        }
    }

    fn at_arrow(&self) -> bool {
        self.peek() == Some('-')
    }

    fn reaction(&mut self) -> Result<Reaction, NetParseError> {
        let text: String = self.chars.iter().collect();
        if !text.contains("->") {
            let col = text
                .find(['-', '=', '>'])
                .map_or(self.chars.len() + 1, |i| text[..i].chars().count() + 1);
            return Err(self.err(col, NetErrorKind::MalformedArrow));
        }
        let reactants = self.side(true, |p| p.at_arrow() || p.peek().is_none())?;
        let acol = self.col();
        if self.peek() != Some('-') {
            return Err(self.err(acol, NetErrorKind::MalformedArrow));
        }
        self.pos += 1;
        let rate = self
            .ident()
            .ok_or_else(|| self.err(acol, NetErrorKind::MalformedArrow))?;
        if self.peek() != Some('-') || self.chars.get(self.pos + 1) != Some(&'>') {
            return Err(self.err(acol, NetErrorKind::MalformedArrow));
        }
        self.pos += 2;
        let products = self
            .side(false, |p| p.peek().is_none())?
            .into_iter()
            .map(|t| Product {
                species: t.species,
                stoichiometry: t.stoichiometry,
            })
            .collect();
        Ok(Reaction {
            reactants,
            products,
            rate,
            line: self.line,
        })
    }
}

/// Parses network text. Empty input gives an empty network.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetParseError> {
    let mut species: Vec<String> = Vec::new();
    let declared = text
        .lines()
        .any(|l| l.split('#').next().unwrap_or("").trim_start().starts_with("species "));
    let mut reactions: Vec<Reaction> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let trimmed = body.trim_start();
        if let Some(rest) = trimmed.strip_prefix("species ") {
            let offset = body.len() - trimmed.len() + "species ".len();
            let mut col = offset + 1;
            for tok in rest.split(' ') {
                if !tok.is_empty() {
                    if species.iter().any(|s| s == tok) {
                        return Err(NetParseError {
                            line,
                            col,
                            kind: NetErrorKind::DuplicateSpecies(tok.into()),
                        });
                    }
                    species.push(tok.to_string());
                }
                col += tok.len() + 1;
            }
            continue;
        }
        let mut p = LineParser {
            chars: body.chars().collect(),
            pos: 0,
            line,
            species: &mut species,
            implicit: !declared,
        };
        let reaction = p.reaction()?;
        if reactions.iter().any(|r| r.rate == reaction.rate) {
            let col = body.find(&format!("-{}->", reaction.rate)).map_or(1, |c| c + 2);
            return Err(NetParseError {
                line,
                col,
                kind: NetErrorKind::DuplicateRate(reaction.rate),
            });
        }
        reactions.push(reaction);
    }
    Ok(ReactionNetwork { species, reactions })
}

/// A non-polynomial rate term `coeff * rate * monomial * Π species^order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTerm {
    pub coeff: Q,
    /// Index of the rate symbol (variable `nspecies + rate`).
    pub rate: usize,
    /// Integer-order factors, in the species-and-rates ring.
    pub monomial: Monomial,
    /// Species raised to a non-integer or symbolic order.
    pub powers: Vec<(usize, Order)>,
}

/// Rate of change of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRate {
    /// Polynomial part over species concentrations followed by rate symbols.
    pub polynomial: QPoly,
    pub power_terms: Vec<PowerTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassActionOdes {
    pub species: Vec<String>,
    pub rates: Vec<String>,
    pub equations: Vec<SpeciesRate>,
}

impl MassActionOdes {
    /// Variable names of the polynomial ring: species then rate symbols.
    pub fn variable_names(&self) -> Vec<&str> {
        self.species
            .iter()
            .chain(self.rates.iter())
            .map(String::as_str)
            .collect()
    }

    /// Sum of species rates weighted by `weights`, polynomial parts only.
    pub fn weighted_sum(&self, weights: &[Q]) -> QPoly {
        let n = self.species.len() + self.rates.len();
        let mut acc = QPoly::zero(n);
        for (eq, w) in self.equations.iter().zip(weights) {
            acc = &acc + &eq.polynomial.scale(w);
        }
        acc
    }
}

impl fmt::Display for MassActionOdes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.variable_names();
        for (s, eq) in self.species.iter().zip(&self.equations) {
            write!(f, "d{s}/dt = ")?;
            let mut empty = eq.polynomial.is_zero();
            if !empty {
                write!(f, "{}", eq.polynomial.display(&names))?;
            }
            for t in &eq.power_terms {
                let sign = if t.coeff.is_negative() { "-" } else { "+" };
                if empty {
                    if sign == "-" {
                        f.write_str("-")?;
                    }
                } else {
                    write!(f, " {sign} ")?;
                }
                empty = false;
                let mag = t.coeff.abs();
                if mag.is_one() {
                    write!(f, "{}", self.rates[t.rate])?;
                } else {
                    write!(f, "{}", QPoly::constant(names.len(), mag).display(&names))?;
                    write!(f, " * {}", self.rates[t.rate])?;
                }
                for (v, &e) in t.monomial.exponents().iter().enumerate() {
                    match e {
                        0 => {}
                        1 => write!(f, " {}", names[v])?,
                        _ => write!(f, " {}^{e}", names[v])?,
                    }
                }
                for (s, o) in &t.powers {
                    write!(f, " {}^{o}", self.species[*s])?;
                }
            }
            if empty {
                f.write_str("0")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Generalized mass-action rate of every species: for each reaction, the net
/// stoichiometric change times the rate symbol times the product of reactant
/// concentrations raised to their kinetic orders.
pub fn mass_action_odes(net: &ReactionNetwork) -> Result<MassActionOdes, OdeError> {
    let ns = net.species.len();
    let nvars = ns + net.reactions.len();
    let mut equations: Vec<SpeciesRate> = (0..ns)
        .map(|_| SpeciesRate {
            polynomial: QPoly::zero(nvars),
            power_terms: Vec::new(),
        })
        .collect();
    for (ri, r) in net.reactions.iter().enumerate() {
        let mut exps = vec![0u16; nvars];
        exps[ns + ri] = 1;
        let mut powers: BTreeMap<usize, Order> = BTreeMap::new();
        for t in &r.reactants {
            match &t.order {
                Order::Number(q) if rational::is_integer(q) && !q.is_negative() => {
                    let e: u16 = q.to_integer().try_into().unwrap_or(u16::MAX);
                    exps[t.species] += e;
                }
                Order::Symbol(s) if s != EPS => {
                    return Err(OdeError::SymbolicOrder {
                        rate: r.rate.clone(),
                        symbol: s.clone(),
                    })
                }
                other => {
                    powers.insert(t.species, other.clone());
                }
            }
        }
        let monomial = Monomial::new(&exps);
        for (s, eq) in equations.iter_mut().enumerate() {
            let change = r.net_change(s);
            if change == 0 {
                continue;
            }
            let c = rational::int(change);
            if powers.is_empty() {
                eq.polynomial.add_term(monomial.clone(), c);
            } else {
                let mut rate_free = exps.clone();
                rate_free[ns + ri] = 0;
                eq.power_terms.push(PowerTerm {
                    coeff: c,
                    rate: ri,
                    monomial: Monomial::new(&rate_free),
                    powers: powers.iter().map(|(k, v)| (*k, v.clone())).collect(),
                });
            }
        }
    }
    // Drop power terms that cancel exactly.
    for eq in &mut equations {
        eq.power_terms.retain(|t| !t.coeff.is_zero());
    }
    Ok(MassActionOdes {
        species: net.species.clone(),
        rates: net.reactions.iter().map(|r| r.rate.clone()).collect(),
        equations,
    })
}

/// The bundled calcium-oscillation network.
pub const OSN_NETWORK: &str = include_str!("../data/osn.net");
