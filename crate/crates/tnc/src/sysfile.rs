//! The textual system format: `.tn` files declare variables and polynomial
//! right-hand sides, `.crn` files declare species and mass-action reactions.
//!
//! Line keywords: `var`, `ode`, `direct`, `placeholder`, `bind`, `species`,
//! `rxn`, `gamma`, `beta`, `denom`, `sim`, `event`. `#` starts a comment. A
//! file uses either var/ode lines or species/rxn lines, never both. Printing
//! a parsed file and parsing it again reaches a fixed point after one pass.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::expr::{parse_expr, parse_rational, Rational};
use crate::odesys::{reactions_to_odes, OdeError, OdeSystem, Reaction, Representation};
use crate::sim::{builtin_placeholder, Event, EventAction, PlaceholderMap, SimParams};
use crate::transform::TnSystem;

#[derive(Debug, Error)]
pub enum SysFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    System(#[from] OdeError),
    #[error("placeholder `{placeholder}` is bound to unknown builtin `{func}`")]
    UnknownBuiltin { placeholder: String, func: String },
}

fn at(line: usize, message: impl Into<String>) -> SysFileError {
    SysFileError::Line {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Ode,
    Crn,
}

#[derive(Debug, Clone)]
pub struct SimSpec {
    pub t_end: f64,
    pub points: usize,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

impl SimSpec {
    pub fn params(&self) -> SimParams {
        let mut p = SimParams {
            t_end: self.t_end,
            points: self.points,
            ..SimParams::default()
        };
        if let Some(r) = self.rel_tol {
            p.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            p.abs_tol = a;
        }
        p
    }
}

/// Binding of a placeholder symbol to a named builtin applied to a variable.
#[derive(Debug, Clone)]
pub struct PlaceholderBinding {
    pub placeholder: String,
    pub func: String,
    pub arg: String,
}

/// A parsed system file: the system plus simulation metadata.
#[derive(Debug, Clone)]
pub struct SysFile {
    pub kind: FileKind,
    pub system: OdeSystem,
    pub reactions: Vec<Reaction>,
    pub species: Vec<(String, Rational)>,
    pub gamma: Option<Rational>,
    pub beta: Option<Rational>,
    pub denom: Vec<(String, Rational)>,
    pub bindings: Vec<PlaceholderBinding>,
    pub events: Vec<Event>,
    pub sim: Option<SimSpec>,
}

impl SysFile {
    pub fn load(path: impl AsRef<Path>) -> Result<SysFile, SysFileError> {
        let text = std::fs::read_to_string(path)?;
        SysFile::parse(&text)
    }

    pub fn sim_params(&self) -> SimParams {
        self.sim
            .as_ref()
            .map(|s| s.params())
            .unwrap_or_default()
    }

    /// Resolve `bind` lines into callable placeholder functions.
    pub fn placeholder_map(&self) -> Result<PlaceholderMap, SysFileError> {
        let mut map = PlaceholderMap::new();
        for b in &self.bindings {
            let f = builtin_placeholder(&b.func).ok_or_else(|| SysFileError::UnknownBuiltin {
                placeholder: b.placeholder.clone(),
                func: b.func.clone(),
            })?;
            map.bind_arc(&b.placeholder, &b.arg, f);
        }
        Ok(map)
    }

    pub fn parse(text: &str) -> Result<SysFile, SysFileError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (kw, rest) = line
                .split_once(char::is_whitespace)
                .unwrap_or((line, ""));
            entries.push((i + 1, kw, rest.trim()));
        }

        let has_ode = entries.iter().any(|(_, k, _)| *k == "var" || *k == "ode");
        let has_crn = entries
            .iter()
            .any(|(_, k, _)| *k == "species" || *k == "rxn");
        if has_ode && has_crn {
            let ln = entries
                .iter()
                .find(|(_, k, _)| *k == "species" || *k == "rxn")
                .unwrap()
                .0;
            return Err(at(ln, "species/rxn lines cannot mix with var/ode lines"));
        }
        let kind = if has_crn { FileKind::Crn } else { FileKind::Ode };

        let mut system = OdeSystem::new();
        let mut species: Vec<(String, Rational)> = Vec::new();
        let mut placeholder_lines: Vec<(usize, String)> = Vec::new();

        for (ln, kw, rest) in &entries {
            match *kw {
                "var" => {
                    let (name, value) = rest
                        .split_once('=')
                        .ok_or_else(|| at(*ln, "expected `var NAME = VALUE`"))?;
                    let mut toks = value.split_whitespace();
                    let init = toks
                        .next()
                        .ok_or_else(|| at(*ln, "missing initial value"))?;
                    let init = parse_rational(init).map_err(|e| at(*ln, e.to_string()))?;
                    if let Some(other) = toks.next() {
                        return Err(at(*ln, format!("unexpected token `{other}`")));
                    }
                    system
                        .add_variable(name.trim(), init)
                        .map_err(|e| at(*ln, e.to_string()))?;
                }
                "species" => {
                    let (name, value) = rest
                        .split_once('=')
                        .ok_or_else(|| at(*ln, "expected `species NAME = VALUE`"))?;
                    let init =
                        parse_rational(value.trim()).map_err(|e| at(*ln, e.to_string()))?;
                    let name = name.trim().to_string();
                    if species.iter().any(|(s, _)| *s == name) {
                        return Err(at(*ln, format!("duplicate species `{name}`")));
                    }
                    species.push((name, init));
                }
                "placeholder" => {
                    if rest.split_whitespace().count() != 1 {
                        return Err(at(*ln, "expected `placeholder NAME`"));
                    }
                    placeholder_lines.push((*ln, rest.to_string()));
                }
                _ => {}
            }
        }

        let mut reactions: Vec<Reaction> = Vec::new();
        let mut gamma = None;
        let mut beta = None;
        let mut denom: Vec<(String, Rational)> = Vec::new();
        let mut bindings: Vec<PlaceholderBinding> = Vec::new();
        let mut events: Vec<(usize, Event)> = Vec::new();
        let mut sim: Option<SimSpec> = None;

        for (ln, kw, rest) in &entries {
            match *kw {
                "var" | "species" | "placeholder" => {}
                "ode" => {
                    let (name, expr) = rest
                        .split_once('=')
                        .ok_or_else(|| at(*ln, "expected `ode NAME' = EXPR`"))?;
                    let name = name.trim();
                    let name = name.strip_suffix('\'').map(str::trim_end).unwrap_or(name);
                    let poly = parse_expr(expr.trim()).map_err(|e| at(*ln, e.to_string()))?;
                    system
                        .set_rhs(name, poly)
                        .map_err(|e| at(*ln, e.to_string()))?;
                }
                "direct" => {
                    let names: Vec<&str> = rest.split_whitespace().collect();
                    if names.is_empty() {
                        return Err(at(*ln, "expected `direct NAME...`"));
                    }
                    for name in names {
                        system
                            .set_representation(name, Representation::Direct)
                            .map_err(|e| at(*ln, e.to_string()))?;
                    }
                }
                "rxn" => {
                    reactions.extend(parse_reaction(rest, *ln)?);
                }
                "gamma" => {
                    if gamma.is_some() {
                        return Err(at(*ln, "duplicate gamma line"));
                    }
                    gamma = Some(parse_rational(rest).map_err(|e| at(*ln, e.to_string()))?);
                }
                "beta" => {
                    if beta.is_some() {
                        return Err(at(*ln, "duplicate beta line"));
                    }
                    beta = Some(parse_rational(rest).map_err(|e| at(*ln, e.to_string()))?);
                }
                "denom" => {
                    let (name, value) = rest
                        .split_once('=')
                        .ok_or_else(|| at(*ln, "expected `denom NAME = VALUE`"))?;
                    let d = parse_rational(value.trim()).map_err(|e| at(*ln, e.to_string()))?;
                    denom.push((name.trim().to_string(), d));
                }
                "bind" => {
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() != 3 {
                        return Err(at(*ln, "expected `bind PLACEHOLDER FUNC VAR`"));
                    }
                    bindings.push(PlaceholderBinding {
                        placeholder: toks[0].to_string(),
                        func: toks[1].to_string(),
                        arg: toks[2].to_string(),
                    });
                }
                "sim" => {
                    if sim.is_some() {
                        return Err(at(*ln, "duplicate sim line"));
                    }
                    sim = Some(parse_sim(rest, *ln)?);
                }
                "event" => {
                    events.push((*ln, parse_event(rest, *ln)?));
                }
                other => {
                    return Err(at(*ln, format!("unknown keyword `{other}`")));
                }
            }
        }

        if kind == FileKind::Crn {
            let init: BTreeMap<String, Rational> = species
                .iter()
                .map(|(s, v)| (s.to_lowercase(), v.clone()))
                .collect();
            if init.len() != species.len() {
                return Err(SysFileError::System(OdeError::SpeciesCollision {
                    a: species[0].0.clone(),
                    b: "another species differing only in case".to_string(),
                }));
            }
            system = reactions_to_odes(&reactions, &init)?;
            for (ln, ev) in &mut events {
                let lower = ev.target.to_lowercase();
                if !system.has_variable(&lower) {
                    return Err(at(*ln, format!("event targets unknown species `{}`", ev.target)));
                }
                ev.target = lower;
            }
            for (name, _) in &mut denom {
                *name = name.to_lowercase();
            }
            for b in &mut bindings {
                b.arg = b.arg.to_lowercase();
            }
        } else {
            for (ln, ev) in &events {
                if !system.has_variable(&ev.target) {
                    return Err(at(*ln, format!("event targets unknown variable `{}`", ev.target)));
                }
            }
        }
        for (ln, p) in &placeholder_lines {
            system
                .add_placeholder(p)
                .map_err(|e| at(*ln, e.to_string()))?;
        }
        system.validate()?;

        Ok(SysFile {
            kind,
            system,
            reactions,
            species,
            gamma,
            beta,
            denom,
            bindings,
            events: events.into_iter().map(|(_, e)| e).collect(),
            sim,
        })
    }

    /// Render back to file text. Parsing the result reproduces this value.
    pub fn print(&self) -> String {
        let mut out = String::new();
        match self.kind {
            FileKind::Ode => {
                for v in self.system.variables() {
                    let init = self.system.initial(v).unwrap();
                    out.push_str(&format!("var {v} = {init}\n"));
                }
                for v in self.system.variables() {
                    if self.system.representation(v).unwrap() == Representation::Direct {
                        out.push_str(&format!("direct {v}\n"));
                    }
                }
                for p in self.system.placeholders() {
                    out.push_str(&format!("placeholder {p}\n"));
                }
                for v in self.system.variables() {
                    out.push_str(&format!("ode {v}' = {}\n", self.system.rhs(v).unwrap()));
                }
            }
            FileKind::Crn => {
                for (s, init) in &self.species {
                    out.push_str(&format!("species {s} = {init}\n"));
                }
                for r in &self.reactions {
                    out.push_str(&format!(
                        "rxn {} ->{{{}}} {}\n",
                        print_side(r.reactants()),
                        r.rate(),
                        print_side(r.products())
                    ));
                }
            }
        }
        if let Some(g) = &self.gamma {
            out.push_str(&format!("gamma {g}\n"));
        }
        if let Some(b) = &self.beta {
            out.push_str(&format!("beta {b}\n"));
        }
        for (name, d) in &self.denom {
            out.push_str(&format!("denom {name} = {d}\n"));
        }
        for b in &self.bindings {
            out.push_str(&format!("bind {} {} {}\n", b.placeholder, b.func, b.arg));
        }
        if let Some(s) = &self.sim {
            out.push_str(&format!("sim t_end {} points {}", s.t_end, s.points));
            if let Some(r) = s.rel_tol {
                out.push_str(&format!(" rel_tol {r:e}"));
            }
            if let Some(a) = s.abs_tol {
                out.push_str(&format!(" abs_tol {a:e}"));
            }
            out.push('\n');
        }
        for ev in &self.events {
            match &ev.action {
                EventAction::SetRatio { top, bottom } => {
                    out.push_str(&format!(
                        "event {} set {} {} {}\n",
                        ev.time, ev.target, top, bottom
                    ));
                }
                EventAction::SetDirect { value } => {
                    out.push_str(&format!("event {} set {} {}\n", ev.time, ev.target, value));
                }
                EventAction::SetBias { value } => {
                    out.push_str(&format!("event {} bias {} {}\n", ev.time, ev.target, value));
                }
            }
        }
        out
    }

    /// Wrap a compiled network as a plain file: every species declares
    /// `direct`, and events are deliberately dropped since their targets
    /// name source variables that no longer exist. Warmup networks omit the
    /// beta line, which is how a reloaded file is recognized as warmup.
    pub fn from_network(tn: &TnSystem, sim: Option<SimSpec>, bindings: Vec<PlaceholderBinding>) -> SysFile {
        let mut system = tn.base.clone();
        let names: Vec<String> = system.variables().to_vec();
        for v in &names {
            system
                .set_representation(v, Representation::Direct)
                .unwrap();
        }
        SysFile {
            kind: FileKind::Ode,
            system,
            reactions: Vec::new(),
            species: Vec::new(),
            gamma: Some(tn.gamma.clone()),
            beta: match tn.mode {
                crate::transform::CompileMode::Stable => Some(tn.beta.clone()),
                crate::transform::CompileMode::Warmup => None,
            },
            denom: Vec::new(),
            bindings,
            events: Vec::new(),
            sim,
        }
    }
}

fn print_side<'a>(side: impl Iterator<Item = (&'a str, u32)>) -> String {
    let parts: Vec<String> = side
        .map(|(name, mult)| {
            if mult == 1 {
                name.to_string()
            } else {
                format!("{mult}{name}")
            }
        })
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

fn parse_side(src: &str, ln: usize) -> Result<Vec<(String, u32)>, SysFileError> {
    let src = src.trim();
    if src == "0" || src == "empty" {
        return Ok(Vec::new());
    }
    let mut out: Vec<(String, u32)> = Vec::new();
    for part in src.split('+') {
        let part = part.trim();
        if part.is_empty() {
            return Err(at(ln, "empty term in reaction side"));
        }
        let digits_end = part
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(part.len());
        let (mult, name) = if digits_end > 0 {
            let m: u32 = part[..digits_end]
                .parse()
                .map_err(|_| at(ln, format!("bad stoichiometry in `{part}`")))?;
            (m, part[digits_end..].trim_start_matches('*').trim())
        } else {
            (1, part)
        };
        if name.is_empty() {
            return Err(at(ln, format!("missing species name in `{part}`")));
        }
        match out.iter_mut().find(|(n, _)| n == name) {
            Some((_, m)) => *m += mult,
            None => out.push((name.to_string(), mult)),
        }
    }
    Ok(out)
}

fn parse_reaction(rest: &str, ln: usize) -> Result<Vec<Reaction>, SysFileError> {
    let (reversible, pos, arrow_len) = if let Some(p) = rest.find("<->") {
        (true, p, 3)
    } else if let Some(p) = rest.find("->") {
        (false, p, 2)
    } else {
        return Err(at(ln, "reaction needs `->` or `<->`"));
    };
    let lhs = parse_side(&rest[..pos], ln)?;
    let mut after = rest[pos + arrow_len..].trim_start();
    let mut rates = Vec::new();
    while after.starts_with('{') {
        let close = after
            .find('}')
            .ok_or_else(|| at(ln, "unterminated rate brace"))?;
        let rate =
            parse_rational(&after[1..close]).map_err(|e| at(ln, e.to_string()))?;
        rates.push(rate);
        after = after[close + 1..].trim_start();
    }
    let expected = if reversible { 2 } else { 1 };
    if rates.len() != expected {
        return Err(at(
            ln,
            format!("expected {expected} rate brace(s), found {}", rates.len()),
        ));
    }
    let rhs = parse_side(after, ln)?;
    fn as_refs(side: &[(String, u32)]) -> Vec<(&str, u32)> {
        side.iter().map(|(n, m)| (n.as_str(), *m)).collect()
    }
    let mut out = Vec::new();
    out.push(
        Reaction::new(&as_refs(&lhs), &as_refs(&rhs), rates[0].clone())
            .map_err(|e| at(ln, e.to_string()))?,
    );
    if reversible {
        out.push(
            Reaction::new(&as_refs(&rhs), &as_refs(&lhs), rates[1].clone())
                .map_err(|e| at(ln, e.to_string()))?,
        );
    }
    Ok(out)
}

fn parse_sim(rest: &str, ln: usize) -> Result<SimSpec, SysFileError> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() % 2 != 0 {
        return Err(at(ln, "expected `sim [t_end T] [points N] [rel_tol R] [abs_tol A]`"));
    }
    let defaults = SimParams::default();
    let mut spec = SimSpec {
        t_end: defaults.t_end,
        points: defaults.points,
        rel_tol: None,
        abs_tol: None,
    };
    let num = |s: &str| -> Result<f64, SysFileError> {
        s.parse().map_err(|_| at(ln, format!("bad number `{s}`")))
    };
    for kv in toks.chunks(2) {
        match kv[0] {
            "t_end" => spec.t_end = num(kv[1])?,
            "points" => {
                spec.points = kv[1]
                    .parse()
                    .map_err(|_| at(ln, format!("bad point count `{}`", kv[1])))?;
            }
            "rel_tol" => spec.rel_tol = Some(num(kv[1])?),
            "abs_tol" => spec.abs_tol = Some(num(kv[1])?),
            other => return Err(at(ln, format!("unknown sim key `{other}`"))),
        }
    }
    if !(spec.t_end > 0.0) || spec.points == 0 {
        return Err(at(ln, "t_end and points must be positive"));
    }
    Ok(spec)
}

fn parse_event(rest: &str, ln: usize) -> Result<Event, SysFileError> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() < 4 {
        return Err(at(ln, "expected `event TIME set|bias VAR VALUE...`"));
    }
    let time = parse_rational(toks[0]).map_err(|e| at(ln, e.to_string()))?;
    let target = toks[2].to_string();
    let action = match (toks[1], toks.len()) {
        ("set", 4) => EventAction::SetDirect {
            value: parse_rational(toks[3]).map_err(|e| at(ln, e.to_string()))?,
        },
        ("set", 5) => EventAction::SetRatio {
            top: parse_rational(toks[3]).map_err(|e| at(ln, e.to_string()))?,
            bottom: parse_rational(toks[4]).map_err(|e| at(ln, e.to_string()))?,
        },
        ("bias", 4) => EventAction::SetBias {
            value: parse_rational(toks[3]).map_err(|e| at(ln, e.to_string()))?,
        },
        (verb, _) => {
            return Err(at(
                ln,
                format!("bad event `{verb}` with {} argument(s)", toks.len() - 3),
            ));
        }
    };
    Ok(Event {
        time,
        target,
        action,
    })
}
