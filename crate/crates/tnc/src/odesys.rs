//! Polynomial ODE systems, mass-action expansion, and the Hungarian check.
//!
//! A system maps each variable to a Laurent polynomial right-hand side.
//! Variables are marked `Ratio` (compiled into a top/bottom species pair) or
//! `Direct` (carried through unchanged); placeholder symbols stand for
//! external signals bound to an implementation only at simulation time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::expr::{rat, LaurentPolynomial, Monomial, Rational};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum OdeError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("rhs of `{var}` references `{symbol}`, which is neither a variable nor a placeholder")]
    UnboundSymbolInRhs { var: String, symbol: String },
    #[error("reaction rate must be positive, got {0}")]
    NonPositiveRate(String),
    #[error("species `{a}` and `{b}` collide after lowercasing")]
    SpeciesCollision { a: String, b: String },
    #[error("reaction has empty reactants and products")]
    EmptyReaction,
    #[error("cannot shift `{0}`: it occurs with a negative exponent")]
    ShiftThroughDenominator(String),
}

/// How a variable is realized in the compiled network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Implemented as the ratio of a top/bottom species pair.
    Ratio,
    /// Kept as a single species; its rhs must already be network-form.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Negative terms are not all multiples of the variable; the theorem
    /// then needs the trajectory to stay bounded away from zero.
    NonHungarian,
    /// Non-Hungarian with initial value 0: the compiled rates are singular
    /// at t = 0. Rejected outright by `compile`.
    ZeroInitialNonHungarian,
}

/// Positivity-precondition finding for one variable.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub variable: String,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.variable, self.message)
    }
}

fn valid_ident(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A polynomial ODE system with per-variable initial values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OdeSystem {
    vars: Vec<String>,
    rhs: BTreeMap<String, LaurentPolynomial>,
    init: BTreeMap<String, Rational>,
    repr: BTreeMap<String, Representation>,
    placeholders: BTreeSet<String>,
}

impl OdeSystem {
    pub fn new() -> Self {
        OdeSystem::default()
    }

    /// Declare a variable with its initial value (rhs defaults to 0,
    /// representation to `Ratio`). Negative initials are allowed here so
    /// systems can be built first and recentered with `shift_variable`;
    /// `compile` is where nonnegativity is enforced.
    pub fn add_variable(&mut self, name: &str, init: Rational) -> Result<(), OdeError> {
        if !valid_ident(name) {
            return Err(OdeError::InvalidName(name.to_string()));
        }
        if self.rhs.contains_key(name) || self.placeholders.contains(name) {
            return Err(OdeError::DuplicateName(name.to_string()));
        }
        self.vars.push(name.to_string());
        self.rhs.insert(name.to_string(), LaurentPolynomial::zero());
        self.init.insert(name.to_string(), init);
        self.repr.insert(name.to_string(), Representation::Ratio);
        Ok(())
    }

    /// Declare a placeholder symbol (external signal, no ODE of its own).
    pub fn add_placeholder(&mut self, name: &str) -> Result<(), OdeError> {
        if !valid_ident(name) {
            return Err(OdeError::InvalidName(name.to_string()));
        }
        if self.rhs.contains_key(name) || self.placeholders.contains(name) {
            return Err(OdeError::DuplicateName(name.to_string()));
        }
        self.placeholders.insert(name.to_string());
        Ok(())
    }

    pub fn set_rhs(&mut self, name: &str, rhs: LaurentPolynomial) -> Result<(), OdeError> {
        match self.rhs.get_mut(name) {
            Some(slot) => {
                *slot = rhs;
                Ok(())
            }
            None => Err(OdeError::UnknownVariable(name.to_string())),
        }
    }

    pub fn set_representation(
        &mut self,
        name: &str,
        repr: Representation,
    ) -> Result<(), OdeError> {
        match self.repr.get_mut(name) {
            Some(slot) => {
                *slot = repr;
                Ok(())
            }
            None => Err(OdeError::UnknownVariable(name.to_string())),
        }
    }

    pub fn set_initial(&mut self, name: &str, init: Rational) -> Result<(), OdeError> {
        match self.init.get_mut(name) {
            Some(slot) => {
                *slot = init;
                Ok(())
            }
            None => Err(OdeError::UnknownVariable(name.to_string())),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.rhs.contains_key(name)
    }

    pub fn rhs(&self, name: &str) -> Option<&LaurentPolynomial> {
        self.rhs.get(name)
    }

    pub fn initial(&self, name: &str) -> Option<&Rational> {
        self.init.get(name)
    }

    pub fn representation(&self, name: &str) -> Option<Representation> {
        self.repr.get(name).copied()
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.placeholders.iter().map(|s| s.as_str())
    }

    pub fn is_placeholder(&self, name: &str) -> bool {
        self.placeholders.contains(name)
    }

    /// Check closure: every symbol on a rhs must be a variable or placeholder.
    pub fn validate(&self) -> Result<(), OdeError> {
        for v in &self.vars {
            for sym in self.rhs[v].symbols() {
                if !self.rhs.contains_key(sym) && !self.placeholders.contains(sym) {
                    return Err(OdeError::UnboundSymbolInRhs {
                        var: v.clone(),
                        symbol: sym.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The Hungarian quotient `q` with `rhs = p_plus - v*q`, if every
    /// negative term contains `v` with exponent >= 1. A rhs with no negative
    /// terms is vacuously Hungarian with quotient 0.
    pub fn hungarian_quotient(&self, name: &str) -> Option<LaurentPolynomial> {
        let rhs = self.rhs.get(name)?;
        let (_, minus) = rhs.split_signs();
        let mut q = LaurentPolynomial::zero();
        for (m, c) in minus.terms() {
            if m.exponent(name) < 1 {
                return None;
            }
            q.add_term(m.divide_by_var(name), c.clone());
        }
        Some(q)
    }

    /// Rename-in-place shift `x := x + c`: substitutes `x - c` for `x` in
    /// every rhs and adds `c` to x's initial value. Used to move equilibria
    /// into the positive orthant before compiling.
    pub fn shift_variable(&self, name: &str, c: &Rational) -> Result<OdeSystem, OdeError> {
        if !self.rhs.contains_key(name) {
            return Err(OdeError::UnknownVariable(name.to_string()));
        }
        let mut bindings = BTreeMap::new();
        let mut shifted = LaurentPolynomial::variable(name);
        shifted.add_term(Monomial::one(), -c);
        bindings.insert(name.to_string(), shifted);
        let mut out = self.clone();
        for v in &self.vars {
            // Fails only if `name` occurs with a negative exponent: a shifted
            // variable in a denominator is no longer Laurent.
            let new_rhs = self.rhs[v]
                .substitute(&bindings)
                .map_err(|_| OdeError::ShiftThroughDenominator(name.to_string()))?;
            out.rhs.insert(v.clone(), new_rhs);
        }
        out.init.insert(name.to_string(), &self.init[name] + c);
        Ok(out)
    }

    /// Report which Ratio variables rely on bounded-positive trajectories
    /// (non-Hungarian), and which of those are outright singular at t = 0.
    pub fn check_positivity_preconditions(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for v in &self.vars {
            if self.repr[v] != Representation::Ratio {
                continue;
            }
            if self.hungarian_quotient(v).is_some() {
                continue;
            }
            out.push(Diagnostic {
                variable: v.clone(),
                kind: DiagnosticKind::NonHungarian,
                message: format!(
                    "rhs of `{v}` has negative terms not divisible by `{v}`; \
                     the compiled pair is faithful only while `{v}` stays bounded and positive"
                ),
            });
            if self.init[v].is_zero() {
                out.push(Diagnostic {
                    variable: v.clone(),
                    kind: DiagnosticKind::ZeroInitialNonHungarian,
                    message: format!(
                        "`{v}` is non-Hungarian with initial value 0; compiled rates would be \
                         singular at t = 0"
                    ),
                });
            }
        }
        out
    }
}

/// One irreversible mass-action reaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    reactants: BTreeMap<String, u32>,
    products: BTreeMap<String, u32>,
    rate: Rational,
}

impl Reaction {
    pub fn new(
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        rate: Rational,
    ) -> Result<Reaction, OdeError> {
        if !rate.is_positive() {
            return Err(OdeError::NonPositiveRate(rate.to_string()));
        }
        let collect = |side: &[(&str, u32)]| -> Result<BTreeMap<String, u32>, OdeError> {
            let mut m = BTreeMap::new();
            for (name, mult) in side {
                if !valid_ident(name) {
                    return Err(OdeError::InvalidName(name.to_string()));
                }
                if *mult > 0 {
                    *m.entry(name.to_string()).or_insert(0) += mult;
                }
            }
            Ok(m)
        };
        let reactants = collect(reactants)?;
        let products = collect(products)?;
        if reactants.is_empty() && products.is_empty() {
            return Err(OdeError::EmptyReaction);
        }
        Ok(Reaction {
            reactants,
            products,
            rate,
        })
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    pub fn reactants(&self) -> impl Iterator<Item = (&str, u32)> {
        self.reactants.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn products(&self) -> impl Iterator<Item = (&str, u32)> {
        self.products.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn species_in_order(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for (s, _) in self.reactants.iter().chain(self.products.iter()) {
            if !seen.contains(&s.as_str()) {
                seen.push(s.as_str());
            }
        }
        seen
    }
}

/// Expand mass-action kinetics into a polynomial ODE system. Species map to
/// concentration variables by lowercasing (`A` -> `a`); initial values are
/// keyed by the variable name and default to 0.
pub fn reactions_to_odes(
    reactions: &[Reaction],
    init: &BTreeMap<String, Rational>,
) -> Result<OdeSystem, OdeError> {
    // Variable order: first appearance across reactions, then init-only names.
    let mut order: Vec<String> = Vec::new();
    let mut species_of: BTreeMap<String, String> = BTreeMap::new();
    for r in reactions {
        for s in r.species_in_order() {
            let var = s.to_lowercase();
            match species_of.get(&var) {
                Some(existing) if existing != s => {
                    return Err(OdeError::SpeciesCollision {
                        a: existing.clone(),
                        b: s.to_string(),
                    });
                }
                Some(_) => {}
                None => {
                    species_of.insert(var.clone(), s.to_string());
                    order.push(var);
                }
            }
        }
    }
    for name in init.keys() {
        if !order.contains(name) {
            order.push(name.clone());
        }
    }

    let mut sys = OdeSystem::new();
    for var in &order {
        let i0 = init.get(var).cloned().unwrap_or_else(Rational::zero);
        sys.add_variable(var, i0)?;
    }
    for r in reactions {
        let mut rate_poly = LaurentPolynomial::constant(r.rate.clone());
        for (s, mult) in &r.reactants {
            rate_poly = rate_poly.mul_term(&Monomial::single(&s.to_lowercase(), *mult as i32), &rat(1));
        }
        for s in r.species_in_order() {
            let var = s.to_lowercase();
            let net = r.products.get(s).copied().unwrap_or(0) as i64
                - r.reactants.get(s).copied().unwrap_or(0) as i64;
            if net != 0 {
                let contrib = rate_poly.scale(&rat(net));
                let current = sys.rhs(&var).unwrap();
                let updated = current + &contrib;
                sys.set_rhs(&var, updated)?;
            }
        }
    }
    Ok(sys)
}
