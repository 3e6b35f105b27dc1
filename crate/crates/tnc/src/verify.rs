//! Verification that a compiled network implements its source system.
//!
//! Three independent checks: the symbolic quotient identity
//! (v_T/v_B)' = rhs(v) under ratio substitution, computed in exact
//! arithmetic; the numerical ratio error between co-simulated runs; and the
//! bookend barrier keeping every denominator above min(v_B(0), beta/gamma).

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::expr::{rat, LaurentPolynomial, Monomial};
use crate::odesys::OdeSystem;
use crate::sim::{simulate, simulate_tn, Event, PlaceholderMap, SimError, SimParams, Trajectory};
use crate::transform::{validate_tn, TnSystem};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("source system has no variable `{0}`")]
    MissingVariable(String),
    #[error("trajectory lacks series `{0}`")]
    MissingSeries(String),
    #[error("trajectories sample different grids")]
    GridMismatch,
}

/// Exact residuals of the quotient identity, one per source variable.
#[derive(Debug, Clone)]
pub struct SymbolicReport {
    pub residuals: Vec<(String, LaurentPolynomial)>,
}

impl SymbolicReport {
    pub fn is_exact(&self) -> bool {
        self.residuals.iter().all(|(_, r)| r.is_zero())
    }

    pub fn offenders(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|(_, r)| !r.is_zero())
            .map(|(v, _)| v.as_str())
            .collect()
    }
}

/// Check (rhs(v_T)*v_B - v_T*rhs(v_B))/v_B^2 = rhs(v) with ratios
/// substituted, exactly, for every pair; direct variables are compared
/// against their substituted source rhs.
pub fn symbolic_ratio_identity(
    tn: &TnSystem,
    src: &OdeSystem,
) -> Result<SymbolicReport, VerifyError> {
    let bindings = tn.ratio_bindings();
    let mut residuals = Vec::new();
    for pair in &tn.pairs {
        let src_rhs = src
            .rhs(&pair.source)
            .ok_or_else(|| VerifyError::MissingVariable(pair.source.clone()))?;
        let target = src_rhs
            .substitute(&bindings)
            .expect("ratio bindings are single monomials");
        let rhs_t = tn.base.rhs(&pair.top).unwrap();
        let rhs_b = tn.base.rhs(&pair.bottom).unwrap();
        let vt = LaurentPolynomial::variable(&pair.top);
        let vb = LaurentPolynomial::variable(&pair.bottom);
        let num = &(rhs_t * &vb) - &(&vt * rhs_b);
        let quotient_derivative = num.mul_term(&Monomial::single(&pair.bottom, -2), &rat(1));
        residuals.push((pair.source.clone(), &quotient_derivative - &target));
    }
    for v in &tn.direct {
        let src_rhs = src
            .rhs(v)
            .ok_or_else(|| VerifyError::MissingVariable(v.clone()))?;
        let target = src_rhs
            .substitute(&bindings)
            .expect("ratio bindings are single monomials");
        residuals.push((v.clone(), tn.base.rhs(v).unwrap() - &target));
    }
    Ok(SymbolicReport { residuals })
}

/// Reconstruct the source-system view of a network trajectory: each pair
/// collapses to its ratio, direct variables carry over, trackers drop out.
pub fn ratio_view(tn_traj: &Trajectory, tn: &TnSystem) -> Result<Trajectory, VerifyError> {
    let mut names = Vec::new();
    let mut values = Vec::new();
    for name in tn.base.variables() {
        if let Some(pair) = tn.pairs.iter().find(|p| &p.top == name) {
            let top = tn_traj
                .series(&pair.top)
                .ok_or_else(|| VerifyError::MissingSeries(pair.top.clone()))?;
            let bottom = tn_traj
                .series(&pair.bottom)
                .ok_or_else(|| VerifyError::MissingSeries(pair.bottom.clone()))?;
            names.push(pair.source.clone());
            values.push(top.iter().zip(bottom).map(|(t, b)| t / b).collect());
        } else if tn.pairs.iter().any(|p| &p.bottom == name) {
            continue;
        } else if tn.trackers.iter().any(|hat| hat == name) {
            continue;
        } else {
            let series = tn_traj
                .series(name)
                .ok_or_else(|| VerifyError::MissingSeries(name.clone()))?;
            names.push(name.clone());
            values.push(series.to_vec());
        }
    }
    Ok(Trajectory {
        names,
        times: tn_traj.times.clone(),
        values,
        event_marks: tn_traj.event_marks.clone(),
    })
}

/// Worst-case distance between a network run and its source run.
#[derive(Debug, Clone)]
pub struct RatioReport {
    pub max_abs: f64,
    pub per_var: Vec<(String, f64)>,
    /// First denominator found at or below zero, if any.
    pub nonpositive_bottom: Option<(String, f64)>,
}

/// Compare the ratio view of a network trajectory against the original
/// trajectory, sample by sample, on identical grids.
pub fn ratio_error(
    src_traj: &Trajectory,
    tn_traj: &Trajectory,
    tn: &TnSystem,
) -> Result<RatioReport, VerifyError> {
    if src_traj.len() != tn_traj.len() {
        return Err(VerifyError::GridMismatch);
    }
    for (a, b) in src_traj.times.iter().zip(&tn_traj.times) {
        if (a - b).abs() > 1e-9 {
            return Err(VerifyError::GridMismatch);
        }
    }
    let mut report = RatioReport {
        max_abs: 0.0,
        per_var: Vec::new(),
        nonpositive_bottom: None,
    };
    for pair in &tn.pairs {
        let v = src_traj
            .series(&pair.source)
            .ok_or_else(|| VerifyError::MissingSeries(pair.source.clone()))?;
        let top = tn_traj
            .series(&pair.top)
            .ok_or_else(|| VerifyError::MissingSeries(pair.top.clone()))?;
        let bottom = tn_traj
            .series(&pair.bottom)
            .ok_or_else(|| VerifyError::MissingSeries(pair.bottom.clone()))?;
        let mut worst = 0.0_f64;
        for i in 0..v.len() {
            if bottom[i] <= 0.0 {
                if report.nonpositive_bottom.is_none() {
                    report.nonpositive_bottom =
                        Some((pair.source.clone(), tn_traj.times[i]));
                }
                worst = f64::INFINITY;
                continue;
            }
            worst = worst.max((top[i] / bottom[i] - v[i]).abs());
        }
        report.per_var.push((pair.source.clone(), worst));
        report.max_abs = report.max_abs.max(worst);
    }
    for name in &tn.direct {
        let v = src_traj
            .series(name)
            .ok_or_else(|| VerifyError::MissingSeries(name.clone()))?;
        let w = tn_traj
            .series(name)
            .ok_or_else(|| VerifyError::MissingSeries(name.clone()))?;
        let mut worst = 0.0_f64;
        for i in 0..v.len() {
            worst = worst.max((w[i] - v[i]).abs());
        }
        report.per_var.push((name.clone(), worst));
        report.max_abs = report.max_abs.max(worst);
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct BookendEntry {
    pub source: String,
    pub min_bottom: f64,
    pub barrier: f64,
}

/// Denominator barrier outcome for each pair.
#[derive(Debug, Clone)]
pub struct BookendReport {
    pub entries: Vec<BookendEntry>,
    pub passed: bool,
}

/// Check every denominator stayed above min(v_B(0), beta/gamma) - slack.
/// The bound is unconditional for stable-mode networks; warmup networks are
/// expected to violate it eventually.
pub fn bookend_check(
    tn_traj: &Trajectory,
    tn: &TnSystem,
    slack: f64,
) -> Result<BookendReport, VerifyError> {
    let floor = (tn.beta.to_f64().unwrap() / tn.gamma.to_f64().unwrap()).abs();
    let mut entries = Vec::new();
    let mut passed = true;
    for pair in &tn.pairs {
        let bottom = tn_traj
            .series(&pair.bottom)
            .ok_or_else(|| VerifyError::MissingSeries(pair.bottom.clone()))?;
        let min_bottom = bottom.iter().copied().fold(f64::INFINITY, f64::min);
        let barrier = bottom[0].min(floor) - slack;
        passed &= min_bottom >= barrier;
        entries.push(BookendEntry {
            source: pair.source.clone(),
            min_bottom,
            barrier,
        });
    }
    Ok(BookendReport { entries, passed })
}

/// Largest deviation of a weighted sum from its expected value.
pub fn conservation_drift(
    traj: &Trajectory,
    weights: &[(String, f64)],
    expected: f64,
) -> Result<f64, VerifyError> {
    let series: Vec<(&[f64], f64)> = weights
        .iter()
        .map(|(name, w)| {
            traj.series(name)
                .map(|s| (s, *w))
                .ok_or_else(|| VerifyError::MissingSeries(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut worst = 0.0_f64;
    for i in 0..traj.len() {
        let sum: f64 = series.iter().map(|(s, w)| s[i] * w).sum();
        worst = worst.max((sum - expected).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub ratio_tol: f64,
    pub slack: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            ratio_tol: 1e-6,
            slack: 1e-6,
        }
    }
}

/// Key-value summary of a verification run, one line per item.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub items: Vec<(String, String)>,
    pub passed: bool,
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.items {
            writeln!(f, "{k} = {v}")?;
        }
        write!(f, "verdict = {}", if self.passed { "pass" } else { "fail" })
    }
}

/// Run the full battery: network form, symbolic identity, co-simulation
/// ratio error, and the bookend barrier.
pub fn verify_all(
    src: &OdeSystem,
    tn: &TnSystem,
    events: &[Event],
    params: &SimParams,
    ph: &PlaceholderMap,
    opts: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let mut items = Vec::new();
    let mut passed = true;

    let form = validate_tn(&tn.base, &tn.gamma);
    passed &= form.is_ok();
    items.push((
        "network_form".to_string(),
        match &form {
            Ok(()) => "ok".to_string(),
            Err(e) => e.to_string(),
        },
    ));

    let symbolic = symbolic_ratio_identity(tn, src)?;
    passed &= symbolic.is_exact();
    items.push((
        "symbolic_identity".to_string(),
        if symbolic.is_exact() {
            "exact".to_string()
        } else {
            format!("residual in {}", symbolic.offenders().join(", "))
        },
    ));

    let src_traj = simulate(src, events, params, ph)?;
    // Warmup pairs decay below any fixed absolute floor while their ratio
    // stays meaningful, so that run needs purely relative error control.
    let mut tn_params = params.clone();
    if tn.mode == crate::transform::CompileMode::Warmup {
        tn_params.abs_tol = f64::MIN_POSITIVE;
    }
    // A network that cannot be integrated to the horizon fails verification;
    // only a failure of the source run is an infrastructure error.
    let tn_traj = match simulate_tn(tn, events, &tn_params, ph) {
        Ok(traj) => traj,
        Err(e) => {
            items.push(("network_simulation".to_string(), e.to_string()));
            return Ok(VerificationReport {
                items,
                passed: false,
            });
        }
    };

    let ratio = ratio_error(&src_traj, &tn_traj, tn)?;
    passed &= ratio.max_abs <= opts.ratio_tol;
    items.push(("max_ratio_error".to_string(), format!("{:.3e}", ratio.max_abs)));
    items.push(("ratio_tol".to_string(), format!("{:.3e}", opts.ratio_tol)));
    if let Some((var, t)) = &ratio.nonpositive_bottom {
        items.push((
            "nonpositive_denominator".to_string(),
            format!("{var} at t = {t:.6}"),
        ));
    }

    let bookend = bookend_check(&tn_traj, tn, opts.slack)?;
    passed &= bookend.passed;
    for e in &bookend.entries {
        items.push((
            format!("bookend.{}", e.source),
            format!("min {:.6e} vs barrier {:.6e}", e.min_bottom, e.barrier),
        ));
    }
    items.push((
        "bookend".to_string(),
        if bookend.passed { "ok" } else { "violated" }.to_string(),
    ));

    Ok(VerificationReport { items, passed })
}
