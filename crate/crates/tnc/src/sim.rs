//! Trajectory simulation for ODE systems and compiled networks.
//!
//! Systems are flattened into index-based term tables before integration;
//! placeholders become extra state slots recomputed from their argument
//! variable on every derivative call. Events split the run into epochs, and
//! samples land on the uniform grid t_i = i*t_end/points with the sample at
//! an exact event time showing the post-event state.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::expr::Rational;
use crate::odesys::OdeSystem;
use crate::solver::{integrate, SolverError, SolverOptions};
use crate::transform::TnSystem;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("placeholder `{0}` has no binding")]
    UnboundPlaceholder(String),
    #[error("placeholder `{name}` is bound to `{arg}`, which is not a simulated variable")]
    BadPlaceholderArg { name: String, arg: String },
    #[error("event at t = {time} targets unknown variable `{target}`")]
    UnknownEventTarget { time: f64, target: String },
    #[error("event time {0} is negative")]
    NegativeEventTime(f64),
    #[error("event at t = {time}: `{target}` is not a ratio pair in the compiled network")]
    EventNeedsPair { time: f64, target: String },
    #[error("event at t = {time}: `{target}` is a ratio pair; use a ratio event")]
    EventNeedsDirect { time: f64, target: String },
    #[error("bias events on direct network variables are not supported (target `{0}`)")]
    BiasOnDirect(String),
    #[error("simulation needs at least one grid interval")]
    NoGridPoints,
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub t_end: f64,
    /// Number of grid intervals; the trajectory holds points + 1 samples.
    pub points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            t_end: 10.0,
            points: 1000,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
        }
    }
}

impl SimParams {
    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            ..SolverOptions::default()
        }
    }
}

/// A timed intervention. Targets name variables of the original system; the
/// network runner maps them onto pairs or direct species itself.
#[derive(Debug, Clone)]
pub struct Event {
    pub time: Rational,
    pub target: String,
    pub action: EventAction,
}

#[derive(Debug, Clone)]
pub enum EventAction {
    /// Set the value as a ratio: v := top/bottom, or the pair species
    /// v_T := top, v_B := bottom in a compiled run.
    SetRatio { top: Rational, bottom: Rational },
    /// Set the value directly; only valid for direct variables in a
    /// compiled run.
    SetDirect { value: Rational },
    /// Replace the active additive bias on the variable's rhs. In a
    /// compiled run the pair is rebuilt with the bias joined to the
    /// matching production, so the value may be negative.
    SetBias { value: Rational },
}

/// Sampled run: `values[i]` is the series for `names[i]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// For each event, the first sample index at or after its time.
    pub event_marks: Vec<usize>,
}

impl Trajectory {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.values[i].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.last().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Name -> value map at one sample, for polynomial evaluation.
    pub fn env_at(&self, sample: usize) -> BTreeMap<String, f64> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), self.values[i][sample]))
            .collect()
    }

    /// Write a CSV with a `t` column first, 17 significant digits, LF line
    /// endings; enough to reconstruct every f64 exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for s in 0..self.times.len() {
            write!(w, "{:.16e}", self.times[s])?;
            for series in &self.values {
                write!(w, ",{:.16e}", series[s])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

type PlaceholderFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bindings for placeholder symbols: each maps to a host function applied to
/// one simulated variable's current value.
#[derive(Clone, Default)]
pub struct PlaceholderMap {
    bindings: BTreeMap<String, (String, PlaceholderFn)>,
}

impl PlaceholderMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind<F>(&mut self, placeholder: &str, arg: &str, f: F)
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.bindings
            .insert(placeholder.to_string(), (arg.to_string(), Arc::new(f)));
    }

    pub fn bind_arc(&mut self, placeholder: &str, arg: &str, f: PlaceholderFn) {
        self.bindings
            .insert(placeholder.to_string(), (arg.to_string(), f));
    }

    pub fn get(&self, name: &str) -> Option<&(String, PlaceholderFn)> {
        self.bindings.get(name)
    }

    /// Extend a name -> value environment with placeholder values computed
    /// from it. The argument may be present directly or as a _T/_B pair.
    pub fn augment(&self, env: &mut BTreeMap<String, f64>) -> Result<(), SimError> {
        for (name, (arg, f)) in &self.bindings {
            let x = match env.get(arg) {
                Some(v) => *v,
                None => {
                    let top = env.get(&format!("{arg}_T"));
                    let bottom = env.get(&format!("{arg}_B"));
                    match (top, bottom) {
                        (Some(t), Some(b)) => t / b,
                        _ => {
                            return Err(SimError::BadPlaceholderArg {
                                name: name.clone(),
                                arg: arg.clone(),
                            })
                        }
                    }
                }
            };
            env.insert(name.clone(), f(x));
        }
        Ok(())
    }
}

/// The double-well evaluation target used by the extremum-seeking demo:
/// peaks of height 1 at x = 3 and x = 5, the right one three times wider.
pub fn two_peak(x: f64) -> f64 {
    (-2.0 * (x - 3.0).powi(2)).exp() + (-2.0 * (x - 5.0).powi(2) / 3.0).exp()
}

/// Look up a named builtin placeholder function.
pub fn builtin_placeholder(name: &str) -> Option<PlaceholderFn> {
    match name {
        "two_peak" => Some(Arc::new(two_peak)),
        _ => None,
    }
}

enum ArgRef {
    Var(usize),
    Pair(usize, usize),
}

struct FlatTerm {
    coeff: f64,
    factors: Vec<(usize, i32)>,
}

struct FlatSystem {
    names: Vec<String>,
    rhs: Vec<Vec<FlatTerm>>,
    bias: Vec<f64>,
    /// (state slot written, argument, function) per placeholder.
    placeholders: Vec<(usize, ArgRef, PlaceholderFn)>,
    width: usize,
}

impl FlatSystem {
    fn build(sys: &OdeSystem, ph: &PlaceholderMap) -> Result<FlatSystem, SimError> {
        let names: Vec<String> = sys.variables().to_vec();
        let mut index: BTreeMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let n = names.len();
        let ph_names: Vec<String> = sys.placeholders().map(|s| s.to_string()).collect();
        for (j, p) in ph_names.iter().enumerate() {
            index.insert(p.as_str(), n + j);
        }

        let mut placeholders = Vec::new();
        for (j, p) in ph_names.iter().enumerate() {
            let (arg, f) = ph
                .get(p)
                .ok_or_else(|| SimError::UnboundPlaceholder(p.clone()))?;
            let arg_ref = if let Some(i) = index.get(arg.as_str()).filter(|i| **i < n) {
                ArgRef::Var(*i)
            } else {
                let top = index.get(format!("{arg}_T").as_str()).copied();
                let bottom = index.get(format!("{arg}_B").as_str()).copied();
                match (top, bottom) {
                    (Some(t), Some(b)) => ArgRef::Pair(t, b),
                    _ => {
                        return Err(SimError::BadPlaceholderArg {
                            name: p.to_string(),
                            arg: arg.clone(),
                        })
                    }
                }
            };
            placeholders.push((n + j, arg_ref, f.clone()));
        }

        let mut rhs = Vec::with_capacity(n);
        for v in &names {
            rhs.push(flatten_poly(sys.rhs(v).unwrap(), &index));
        }
        Ok(FlatSystem {
            names,
            rhs,
            bias: vec![0.0; n],
            placeholders,
            width: n + ph_names.len(),
        })
    }

    /// Derivative callback over the real state; placeholder slots live at
    /// the tail of a scratch buffer.
    fn derivative(&self, scratch: &mut [f64], y: &[f64], dy: &mut [f64]) {
        let n = self.names.len();
        scratch[..n].copy_from_slice(y);
        for (slot, arg, f) in &self.placeholders {
            let x = match arg {
                ArgRef::Var(i) => scratch[*i],
                ArgRef::Pair(t, b) => scratch[*t] / scratch[*b],
            };
            scratch[*slot] = f(x);
        }
        for i in 0..n {
            let mut sum = self.bias[i];
            for term in &self.rhs[i] {
                let mut v = term.coeff;
                for (k, e) in &term.factors {
                    v *= scratch[*k].powi(*e);
                }
                sum += v;
            }
            dy[i] = sum;
        }
    }
}

fn flatten_poly(
    poly: &crate::expr::LaurentPolynomial,
    index: &BTreeMap<&str, usize>,
) -> Vec<FlatTerm> {
    poly.terms()
        .map(|(m, c)| FlatTerm {
            coeff: c.to_f64().unwrap_or(f64::NAN),
            factors: m
                .iter()
                .map(|(name, e)| (index[name], e))
                .collect(),
        })
        .collect()
}

/// Simulate the original system. `SetRatio` and `SetDirect` both poke the
/// plain variable; `SetBias` replaces the additive constant on its rhs.
pub fn simulate(
    sys: &OdeSystem,
    events: &[Event],
    params: &SimParams,
    ph: &PlaceholderMap,
) -> Result<Trajectory, SimError> {
    let mut flat = FlatSystem::build(sys, ph)?;
    let y0: Vec<f64> = sys
        .variables()
        .iter()
        .map(|v| sys.initial(v).unwrap().to_f64().unwrap_or(f64::NAN))
        .collect();
    for e in events {
        if !sys.has_variable(&e.target) {
            return Err(SimError::UnknownEventTarget {
                time: e.time.to_f64().unwrap_or(f64::NAN),
                target: e.target.clone(),
            });
        }
    }
    run_epochs(&mut flat, y0, events, params, |flat, state, ev| {
        let i = flat.names.iter().position(|n| n == &ev.target).unwrap();
        match &ev.action {
            EventAction::SetRatio { top, bottom } => {
                state[i] = (top / bottom).to_f64().unwrap_or(f64::NAN);
            }
            EventAction::SetDirect { value } => {
                state[i] = value.to_f64().unwrap_or(f64::NAN);
            }
            EventAction::SetBias { value } => {
                flat.bias[i] = value.to_f64().unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

/// Simulate a compiled network. Event targets are original variable names;
/// ratio events poke the pair species, bias events rebuild the pair's rhs
/// from its stored productions.
pub fn simulate_tn(
    tn: &TnSystem,
    events: &[Event],
    params: &SimParams,
    ph: &PlaceholderMap,
) -> Result<Trajectory, SimError> {
    let mut flat = FlatSystem::build(&tn.base, ph)?;
    let y0: Vec<f64> = tn
        .base
        .variables()
        .iter()
        .map(|v| tn.base.initial(v).unwrap().to_f64().unwrap_or(f64::NAN))
        .collect();
    for e in events {
        let time = e.time.to_f64().unwrap_or(f64::NAN);
        let is_pair = tn.pair_for(&e.target).is_some();
        let is_direct = tn.direct.iter().any(|d| d == &e.target);
        match &e.action {
            EventAction::SetRatio { .. } if !is_pair => {
                return Err(if is_direct {
                    SimError::EventNeedsPair {
                        time,
                        target: e.target.clone(),
                    }
                } else {
                    SimError::UnknownEventTarget {
                        time,
                        target: e.target.clone(),
                    }
                });
            }
            EventAction::SetDirect { .. } if !is_direct => {
                return Err(if is_pair {
                    SimError::EventNeedsDirect {
                        time,
                        target: e.target.clone(),
                    }
                } else {
                    SimError::UnknownEventTarget {
                        time,
                        target: e.target.clone(),
                    }
                });
            }
            EventAction::SetBias { .. } if !is_pair => {
                return Err(if is_direct {
                    SimError::BiasOnDirect(e.target.clone())
                } else {
                    SimError::UnknownEventTarget {
                        time,
                        target: e.target.clone(),
                    }
                });
            }
            _ => {}
        }
    }

    run_epochs(&mut flat, y0, events, params, |flat, state, ev| {
        match &ev.action {
            EventAction::SetRatio { top, bottom } => {
                let pair = tn.pair_for(&ev.target).unwrap();
                let it = flat.names.iter().position(|n| n == &pair.top).unwrap();
                let ib = flat.names.iter().position(|n| n == &pair.bottom).unwrap();
                state[it] = top.to_f64().unwrap_or(f64::NAN);
                state[ib] = bottom.to_f64().unwrap_or(f64::NAN);
            }
            EventAction::SetDirect { value } => {
                let i = flat.names.iter().position(|n| n == &ev.target).unwrap();
                state[i] = value.to_f64().unwrap_or(f64::NAN);
            }
            EventAction::SetBias { value } => {
                let pair = tn.pair_for(&ev.target).unwrap();
                let (top_rhs, bottom_rhs) = tn.pair_rhs_with_bias(pair, value);
                let mut idx: BTreeMap<&str, usize> = flat
                    .names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.as_str(), i))
                    .collect();
                for (j, p) in tn.base.placeholders().enumerate() {
                    idx.insert(p, flat.names.len() + j);
                }
                let it = idx[pair.top.as_str()];
                let ib = idx[pair.bottom.as_str()];
                let top_flat = flatten_poly(&top_rhs, &idx);
                let bottom_flat = flatten_poly(&bottom_rhs, &idx);
                flat.rhs[it] = top_flat;
                flat.rhs[ib] = bottom_flat;
            }
        }
        Ok(())
    })
}

fn run_epochs<A>(
    flat: &mut FlatSystem,
    y0: Vec<f64>,
    events: &[Event],
    params: &SimParams,
    mut apply: A,
) -> Result<Trajectory, SimError>
where
    A: FnMut(&mut FlatSystem, &mut Vec<f64>, &Event) -> Result<(), SimError>,
{
    if params.points == 0 {
        return Err(SimError::NoGridPoints);
    }
    let t_end = params.t_end;
    let points = params.points;
    let times: Vec<f64> = (0..=points)
        .map(|i| i as f64 * t_end / points as f64)
        .collect();

    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by(|a, b| events[*a].time.cmp(&events[*b].time));
    for e in events {
        let t = e.time.to_f64().unwrap_or(f64::NAN);
        if !(t >= 0.0) {
            return Err(SimError::NegativeEventTime(t));
        }
    }
    let mut event_marks = vec![0usize; events.len()];
    for (k, e) in events.iter().enumerate() {
        let t = e.time.to_f64().unwrap();
        event_marks[k] = times.partition_point(|g| *g < t);
    }

    let n = flat.names.len();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(points + 1); n];
    let mut state = y0;
    let mut scratch = vec![0.0; flat.width];
    let mut next = 0usize;
    let mut current_t = 0.0;
    let opts = params.solver_options();

    let record = |values: &mut Vec<Vec<f64>>, state: &[f64]| {
        for (i, series) in values.iter_mut().enumerate() {
            series.push(state[i]);
        }
    };

    // Events scheduled past the horizon never fire.
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for k in order {
        let t = events[k].time.to_f64().unwrap();
        if t > t_end {
            continue;
        }
        match groups.last_mut() {
            Some((gt, idxs)) if *gt == t => idxs.push(k),
            _ => groups.push((t, vec![k])),
        }
    }

    let mut buf = vec![0.0; n];
    for (t_ev, idxs) in &groups {
        let t_ev = *t_ev;
        {
            let f = &*flat;
            let scratch = &mut scratch;
            let buf = &mut buf;
            let out = integrate(
                |_t, y: &[f64], dy: &mut [f64]| f.derivative(scratch, y, dy),
                current_t,
                &state,
                t_ev,
                &opts,
                |dense| {
                    while next < times.len() && times[next] < t_ev && times[next] <= dense.t1() {
                        dense.eval_into(times[next], buf);
                        record(&mut values, buf);
                        next += 1;
                    }
                },
            )?;
            state = out.y_end;
        }
        // Stragglers from float drift in the step endpoints: anything still
        // strictly before the event time takes the pre-event state.
        while next < times.len() && times[next] < t_ev {
            record(&mut values, &state);
            next += 1;
        }
        for k in idxs {
            apply(flat, &mut state, &events[*k])?;
        }
        while next < times.len() && times[next] <= t_ev {
            record(&mut values, &state);
            next += 1;
        }
        current_t = t_ev;
    }

    {
        let f = &*flat;
        let scratch = &mut scratch;
        let buf = &mut buf;
        let out = integrate(
            |_t, y: &[f64], dy: &mut [f64]| f.derivative(scratch, y, dy),
            current_t,
            &state,
            t_end,
            &opts,
            |dense| {
                while next < times.len() && times[next] <= dense.t1() {
                    dense.eval_into(times[next], buf);
                    record(&mut values, buf);
                    next += 1;
                }
            },
        )?;
        state = out.y_end;
    }
    while next < times.len() {
        record(&mut values, &state);
        next += 1;
    }

    Ok(Trajectory {
        names: flat.names.clone(),
        times,
        values,
        event_marks,
    })
}
