//! Compilation of ODE systems into transcriptional-network form.
//!
//! Every `Ratio` variable v becomes a species pair (v_T, v_B) representing
//! v = v_T/v_B. With rhs(v) split as p_plus - p_minus and ratios substituted
//! into both parts, Stable mode emits
//!
//!   v_T' = beta*v_T/v_B + p_plus*v_B - gamma*v_T
//!   v_B' = beta + p_minus*v_B^2/v_T - gamma*v_B
//!
//! and Warmup mode the same without the beta terms. The quotient
//! (v_T/v_B)' then equals rhs(v) with every ratio substituted, exactly; the
//! beta terms add equal production to both species, which pins v_B above
//! beta/gamma without disturbing the quotient. For a Hungarian variable
//! (p_minus = v*q) the v_T^-1 in the bottom equation cancels on its own
//! during canonical arithmetic.

use std::collections::BTreeMap;

use num_traits::Signed;
use thiserror::Error;

use crate::expr::{rat, LaurentPolynomial, Monomial, Rational};
use crate::odesys::{Diagnostic, DiagnosticKind, OdeError, OdeSystem, Representation};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(String),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(String),
    #[error("initial value of `{var}` is negative ({value}); shift the system into the positive orthant first")]
    NegativeInitial { var: String, value: String },
    #[error("`{var}` is non-Hungarian with initial value 0; its compiled rates are singular at t = 0")]
    ZeroInitialNonHungarian { var: String },
    #[error("placeholder `{placeholder}` must appear with exponent +1; rhs of `{var}` has `{monomial}`")]
    PlaceholderExponent {
        var: String,
        placeholder: String,
        monomial: String,
    },
    #[error("generated name `{0}` collides with an existing symbol")]
    NameCollision(String),
    #[error("rhs of direct variable `{var}` is not network-form for gamma = {gamma}: offending part {offending}")]
    DirectNotTnForm {
        var: String,
        gamma: String,
        offending: String,
    },
    #[error("not network-form: {0}")]
    NotTnForm(TnFormReport),
    #[error("denominator scale for `{var}` must be positive, got {value}")]
    NonPositiveDenomScale { var: String, value: String },
    #[error("`{0}` is not a compiled ratio pair")]
    NotAPair(String),
    #[error("tracker coefficient for `{var}` must be positive, got {value}")]
    NonPositiveTrackerCoefficient { var: String, value: String },
    #[error("tracking rate must be positive, got {0}")]
    NonPositiveTrackRate(String),
    #[error("network provides neither `{0}` nor a `{0}_T`/`{0}_B` pair")]
    MissingInNetwork(String),
}

/// Offending monomials found by `validate_tn`, one entry per negative term
/// that is not the shared decay.
#[derive(Debug, Clone, Default)]
pub struct TnFormReport {
    pub violations: Vec<(String, Monomial, Rational)>,
}

impl std::fmt::Display for TnFormReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|(var, m, c)| format!("{var}: {c}*{m}"))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompileMode {
    /// With beta terms: bottoms are barriered above beta/gamma.
    Stable,
    /// Without beta terms: the ratio is still exact, but the pair drifts.
    Warmup,
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub mode: CompileMode,
    pub gamma: Rational,
    pub beta: Rational,
    /// Initial denominator per variable: v_T(0) = v(0)*d, v_B(0) = d.
    pub denom_scale: BTreeMap<String, Rational>,
}

impl CompileOptions {
    pub fn new(gamma: Rational) -> Self {
        CompileOptions {
            mode: CompileMode::Stable,
            gamma,
            beta: rat(1),
            denom_scale: BTreeMap::new(),
        }
    }

    pub fn mode(mut self, mode: CompileMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn beta(mut self, beta: Rational) -> Self {
        self.beta = beta;
        self
    }

    pub fn denom_scale(mut self, var: &str, d: Rational) -> Self {
        self.denom_scale.insert(var.to_string(), d);
        self
    }
}

/// One compiled ratio pair, with the sign-split substituted productions kept
/// for event-time rebuilds (bias events reassemble the pair from these).
#[derive(Debug, Clone)]
pub struct TnPair {
    pub source: String,
    pub top: String,
    pub bottom: String,
    pub hungarian: bool,
    pub prod_plus: LaurentPolynomial,
    pub prod_minus: LaurentPolynomial,
}

/// A compiled transcriptional network together with its pairing metadata.
#[derive(Debug, Clone)]
pub struct TnSystem {
    pub base: OdeSystem,
    pub pairs: Vec<TnPair>,
    pub direct: Vec<String>,
    pub trackers: Vec<String>,
    pub gamma: Rational,
    pub beta: Rational,
    pub mode: CompileMode,
    pub diagnostics: Vec<Diagnostic>,
}

impl TnSystem {
    pub fn pair_for(&self, source: &str) -> Option<&TnPair> {
        self.pairs.iter().find(|p| p.source == source)
    }

    /// Bindings substituting each ratio variable by top/bottom.
    pub fn ratio_bindings(&self) -> BTreeMap<String, LaurentPolynomial> {
        self.pairs
            .iter()
            .map(|p| {
                let m = Monomial::from_pairs(&[(&p.top, 1), (&p.bottom, -1)]);
                (p.source.clone(), LaurentPolynomial::term(m, rat(1)))
            })
            .collect()
    }

    /// Rebuild the rhs of one pair for the given constant bias on the source
    /// variable: positive bias joins the positive production, negative bias
    /// joins the negative one. Returns (top rhs, bottom rhs).
    pub fn pair_rhs_with_bias(
        &self,
        pair: &TnPair,
        bias: &Rational,
    ) -> (LaurentPolynomial, LaurentPolynomial) {
        let mut plus = pair.prod_plus.clone();
        let mut minus = pair.prod_minus.clone();
        if bias.is_positive() {
            plus.add_term(Monomial::one(), bias.clone());
        } else if bias.is_negative() {
            minus.add_term(Monomial::one(), -bias);
        }
        assemble_pair(&plus, &minus, &pair.top, &pair.bottom, &self.gamma, &self.beta, self.mode)
    }
}

fn assemble_pair(
    prod_plus: &LaurentPolynomial,
    prod_minus: &LaurentPolynomial,
    top: &str,
    bottom: &str,
    gamma: &Rational,
    beta: &Rational,
    mode: CompileMode,
) -> (LaurentPolynomial, LaurentPolynomial) {
    let mut top_rhs = prod_plus.mul_term(&Monomial::var(bottom), &rat(1));
    let mut bottom_rhs = prod_minus.mul_term(
        &Monomial::from_pairs(&[(bottom, 2), (top, -1)]),
        &rat(1),
    );
    if mode == CompileMode::Stable {
        top_rhs.add_term(Monomial::from_pairs(&[(top, 1), (bottom, -1)]), beta.clone());
        bottom_rhs.add_term(Monomial::one(), beta.clone());
    }
    top_rhs.add_term(Monomial::var(top), -gamma);
    bottom_rhs.add_term(Monomial::var(bottom), -gamma);
    (top_rhs, bottom_rhs)
}

/// Compile a polynomial ODE system into a transcriptional network.
pub fn compile(sys: &OdeSystem, opts: &CompileOptions) -> Result<TnSystem, CompileError> {
    sys.validate()?;
    if !opts.gamma.is_positive() {
        return Err(CompileError::NonPositiveGamma(opts.gamma.to_string()));
    }
    if !opts.beta.is_positive() {
        return Err(CompileError::NonPositiveBeta(opts.beta.to_string()));
    }
    for (var, d) in &opts.denom_scale {
        if !sys.has_variable(var) {
            return Err(OdeError::UnknownVariable(var.clone()).into());
        }
        if !d.is_positive() {
            return Err(CompileError::NonPositiveDenomScale {
                var: var.clone(),
                value: d.to_string(),
            });
        }
    }

    for v in sys.variables() {
        let rhs = sys.rhs(v).unwrap();
        for (m, _) in rhs.terms() {
            for p in sys.placeholders() {
                let e = m.exponent(p);
                if e != 0 && e != 1 {
                    return Err(CompileError::PlaceholderExponent {
                        var: v.clone(),
                        placeholder: p.to_string(),
                        monomial: m.to_string(),
                    });
                }
            }
        }
        let init = sys.initial(v).unwrap();
        if init.is_negative() {
            return Err(CompileError::NegativeInitial {
                var: v.clone(),
                value: init.to_string(),
            });
        }
    }

    let diagnostics = sys.check_positivity_preconditions();
    if let Some(d) = diagnostics
        .iter()
        .find(|d| d.kind == DiagnosticKind::ZeroInitialNonHungarian)
    {
        return Err(CompileError::ZeroInitialNonHungarian {
            var: d.variable.clone(),
        });
    }

    let ratio_vars: Vec<&String> = sys
        .variables()
        .iter()
        .filter(|v| sys.representation(v) == Some(Representation::Ratio))
        .collect();

    let mut bindings: BTreeMap<String, LaurentPolynomial> = BTreeMap::new();
    for v in &ratio_vars {
        for candidate in [format!("{v}_T"), format!("{v}_B")] {
            if sys.has_variable(&candidate) || sys.is_placeholder(&candidate) {
                return Err(CompileError::NameCollision(candidate));
            }
        }
        let m = Monomial::from_pairs(&[(&format!("{v}_T"), 1), (&format!("{v}_B"), -1)]);
        bindings.insert((*v).clone(), LaurentPolynomial::term(m, rat(1)));
    }

    let mut base = OdeSystem::new();
    let mut pairs = Vec::new();
    let mut direct = Vec::new();
    let one = rat(1);

    for v in sys.variables() {
        let rhs = sys.rhs(v).unwrap();
        let init = sys.initial(v).unwrap();
        match sys.representation(v).unwrap() {
            Representation::Ratio => {
                let top = format!("{v}_T");
                let bottom = format!("{v}_B");
                let (p_plus, p_minus) = rhs.split_signs();
                let prod_plus = p_plus
                    .substitute(&bindings)
                    .expect("ratio bindings are single monomials");
                let prod_minus = p_minus
                    .substitute(&bindings)
                    .expect("ratio bindings are single monomials");
                let (top_rhs, bottom_rhs) = assemble_pair(
                    &prod_plus,
                    &prod_minus,
                    &top,
                    &bottom,
                    &opts.gamma,
                    &opts.beta,
                    opts.mode,
                );
                let d = opts.denom_scale.get(v).unwrap_or(&one);
                base.add_variable(&top, init * d)?;
                base.set_representation(&top, Representation::Direct)?;
                base.set_rhs(&top, top_rhs)?;
                base.add_variable(&bottom, d.clone())?;
                base.set_representation(&bottom, Representation::Direct)?;
                base.set_rhs(&bottom, bottom_rhs)?;
                pairs.push(TnPair {
                    source: v.clone(),
                    top,
                    bottom,
                    hungarian: sys.hungarian_quotient(v).is_some(),
                    prod_plus,
                    prod_minus,
                });
            }
            Representation::Direct => {
                let sub = rhs
                    .substitute(&bindings)
                    .expect("ratio bindings are single monomials");
                let mut with_decay = sub.clone();
                with_decay.add_term(Monomial::var(v), opts.gamma.clone());
                let (_, neg) = with_decay.split_signs();
                if !neg.is_zero() {
                    return Err(CompileError::DirectNotTnForm {
                        var: v.clone(),
                        gamma: opts.gamma.to_string(),
                        offending: (-&neg).to_string(),
                    });
                }
                base.add_variable(v, init.clone())?;
                base.set_representation(v, Representation::Direct)?;
                base.set_rhs(v, sub)?;
                direct.push(v.clone());
            }
        }
    }
    for p in sys.placeholders() {
        base.add_placeholder(p)?;
    }
    base.validate()?;

    let tn = TnSystem {
        base,
        pairs,
        direct,
        trackers: Vec::new(),
        gamma: opts.gamma.clone(),
        beta: opts.beta.clone(),
        mode: opts.mode,
        diagnostics,
    };
    debug_assert!(validate_tn(&tn.base, &tn.gamma).is_ok());
    Ok(tn)
}

/// Check that every rhs is `production - gamma*w` with positive production,
/// i.e. that rhs + gamma*w is a positive Laurent polynomial for every w.
pub fn validate_tn(sys: &OdeSystem, gamma: &Rational) -> Result<(), CompileError> {
    let mut report = TnFormReport::default();
    for w in sys.variables() {
        let mut q = sys.rhs(w).unwrap().clone();
        q.add_term(Monomial::var(w), gamma.clone());
        for (m, c) in q.terms() {
            if c.is_negative() {
                report
                    .violations
                    .push((w.clone(), m.clone(), c.clone()));
            }
        }
    }
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(CompileError::NotTnForm(report))
    }
}

#[derive(Debug, Error)]
pub enum GammaError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error("`{var}` is non-Hungarian and reaches {value} at t = {t}; positive values are needed to bound its rates")]
    NonpositiveAlongTrajectory { var: String, value: f64, t: f64 },
    #[error("rate bound {0} is too large to round to a usable gamma")]
    Unbounded(f64),
}

/// Estimate a decay rate sufficient to compile `sys`: simulate the original
/// system, bound each ratio variable's negative-rate quotient over the
/// trajectory (the Hungarian quotient where one exists, p_minus/v otherwise)
/// and each direct variable's own decay coefficient, scale the sup by
/// `margin`, then round up to the next half integer, at least 1/2.
pub fn estimate_gamma(
    sys: &OdeSystem,
    events: &[crate::sim::Event],
    t_end: f64,
    margin: f64,
    ph: &crate::sim::PlaceholderMap,
) -> Result<Rational, GammaError> {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    sys.validate()?;
    let params = crate::sim::SimParams {
        t_end,
        points: 2000,
        ..Default::default()
    };
    let traj = crate::sim::simulate(sys, events, &params, ph)?;

    struct Quot {
        var: String,
        hungarian: Option<LaurentPolynomial>,
        p_minus: LaurentPolynomial,
    }
    let mut quots = Vec::new();
    let mut sup = 0.0_f64;
    for v in sys.variables() {
        let rhs = sys.rhs(v).unwrap();
        match sys.representation(v).unwrap() {
            Representation::Ratio => quots.push(Quot {
                var: v.clone(),
                hungarian: sys.hungarian_quotient(v),
                p_minus: rhs.split_signs().1,
            }),
            Representation::Direct => {
                // Only a plain -c*v term can be absorbed by the shared
                // decay; anything else is compile's problem to report.
                let c = rhs.coefficient(&Monomial::var(v));
                if c.is_negative() {
                    sup = sup.max((-c).to_f64().unwrap_or(f64::INFINITY));
                }
            }
        }
    }

    for i in 0..traj.len() {
        let mut env = traj.env_at(i);
        ph.augment(&mut env)?;
        for q in &quots {
            let val = match &q.hungarian {
                Some(poly) => poly.evaluate(&env)?,
                None => {
                    let x = env[q.var.as_str()];
                    if x <= 0.0 {
                        return Err(GammaError::NonpositiveAlongTrajectory {
                            var: q.var.clone(),
                            value: x,
                            t: traj.times[i],
                        });
                    }
                    q.p_minus.evaluate(&env)? / x
                }
            };
            sup = sup.max(val);
        }
    }

    let scaled = sup * margin;
    if !scaled.is_finite() || scaled > 1e12 {
        return Err(GammaError::Unbounded(scaled));
    }
    let halves = (2.0 * scaled).ceil().max(1.0) as i64;
    Ok(Rational::new(BigInt::from(halves), BigInt::from(2)))
}

/// Append a tracker species that relaxes toward a positive combination of
/// ratio values: `name' = rate*(sum_i c_i*v_i_T/v_i_B - name)`, starting at 0.
/// The tracker reads the pairs without feeding back into them, and the result
/// stays network-form as long as `rate` does not exceed the compiled gamma.
pub fn add_tracker(
    tn: &mut TnSystem,
    name: &str,
    target: &[(Rational, String)],
    rate: &Rational,
) -> Result<(), CompileError> {
    if !rate.is_positive() {
        return Err(CompileError::NonPositiveTrackRate(rate.to_string()));
    }
    if tn.base.has_variable(name) || tn.base.is_placeholder(name) {
        return Err(CompileError::NameCollision(name.to_string()));
    }
    let mut rhs = LaurentPolynomial::zero();
    for (coeff, source) in target {
        if !coeff.is_positive() {
            return Err(CompileError::NonPositiveTrackerCoefficient {
                var: source.clone(),
                value: coeff.to_string(),
            });
        }
        let pair = tn
            .pair_for(source)
            .ok_or_else(|| CompileError::NotAPair(source.clone()))?;
        rhs.add_term(
            Monomial::from_pairs(&[(&pair.top, 1), (&pair.bottom, -1)]),
            coeff * rate,
        );
    }
    rhs.add_term(Monomial::var(name), -rate);
    tn.base.add_variable(name, rat(0))?;
    tn.base.set_representation(name, Representation::Direct)?;
    tn.base.set_rhs(name, rhs)?;
    tn.trackers.push(name.to_string());
    Ok(())
}

/// Interpret an externally supplied network as a compilation of `source`.
/// A source variable v is matched to a `v_T`/`v_B` pair when both exist in
/// the network, otherwise to a network variable named v taken as direct.
/// The sign-split productions are recovered from the written equations by
/// inverting the pair construction; the equations themselves are adopted at
/// face value, so a corrupted network surfaces as a symbolic residual during
/// verification rather than as an error here.
pub fn adopt_network(
    source: &OdeSystem,
    network: &OdeSystem,
    gamma: &Rational,
    beta: &Rational,
    mode: CompileMode,
) -> Result<TnSystem, CompileError> {
    if !gamma.is_positive() {
        return Err(CompileError::NonPositiveGamma(gamma.to_string()));
    }
    let mut pairs = Vec::new();
    let mut direct = Vec::new();
    for v in source.variables() {
        let top = format!("{v}_T");
        let bottom = format!("{v}_B");
        if network.has_variable(&top) && network.has_variable(&bottom) {
            let stable = mode == CompileMode::Stable;
            let mut p = network.rhs(&top).unwrap().clone();
            if stable {
                p.add_term(Monomial::from_pairs(&[(&top, 1), (&bottom, -1)]), -beta);
            }
            p.add_term(Monomial::var(&top), gamma.clone());
            let prod_plus = p.mul_term(&Monomial::var(&bottom).inverse(), &rat(1));
            let mut q = network.rhs(&bottom).unwrap().clone();
            if stable {
                q.add_term(Monomial::one(), -beta);
            }
            q.add_term(Monomial::var(&bottom), gamma.clone());
            let prod_minus = q.mul_term(&Monomial::from_pairs(&[(&top, 1), (&bottom, -2)]), &rat(1));
            pairs.push(TnPair {
                source: v.clone(),
                top,
                bottom,
                hungarian: source.hungarian_quotient(v).is_some(),
                prod_plus,
                prod_minus,
            });
        } else if network.has_variable(v) {
            direct.push(v.clone());
        } else {
            return Err(CompileError::MissingInNetwork(v.clone()));
        }
    }
    Ok(TnSystem {
        base: network.clone(),
        pairs,
        direct,
        trackers: Vec::new(),
        gamma: gamma.clone(),
        beta: beta.clone(),
        mode,
        diagnostics: source.check_positivity_preconditions(),
    })
}
