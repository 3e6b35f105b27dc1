//! Explicit Dormand-Prince 5(4) integrator with PI step-size control and
//! fourth-order dense output.
//!
//! The constants are the classic DOPRI5 tableau; the controller and the
//! initial step heuristic follow the widely used reference implementation.
//! Accepted steps are handed to a sink as dense interpolants so callers can
//! sample arbitrary grids without forcing the integrator onto them.

use thiserror::Error;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FACC1: f64 = 5.0;
const FACC2: f64 = 0.1;
const UROUND: f64 = 2.2e-16;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("more than {limit} steps needed, stalled near t = {t}")]
    MaxStepsExceeded { t: f64, limit: usize },
    #[error("derivative is not finite at t = {t}")]
    NonFiniteDerivative { t: f64 },
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// Dense interpolant over one accepted step, valid for t in [t0, t0 + h].
pub struct DenseOutput<'a> {
    pub t0: f64,
    pub h: f64,
    rcont: &'a [Vec<f64>; 5],
}

impl DenseOutput<'_> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Evaluate the quartic interpolant at t, writing into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rcont[0].len()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Counters describing one completed integration.
#[derive(Debug, Clone)]
pub struct Integration {
    pub y_end: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    hmax: f64,
    opts: &SolverOptions,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = opts.abs_tol + opts.rel_tol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(hmax);

    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = y[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; n];
    f(t + h, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = opts.abs_tol + opts.rel_tol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    der2 = der2.sqrt() / h;

    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        1e-6f64.max(h.abs() * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(hmax)
}

/// Integrate y' = f(t, y) from t0 to t_end, calling `sink` once per accepted
/// step with that step's dense interpolant. Forward integration only; if
/// t_end <= t0 the initial state is returned untouched.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &SolverOptions,
    mut sink: S,
) -> Result<Integration, SolverError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(&DenseOutput<'_>),
{
    let n = y0.len();
    let mut stats = Integration {
        y_end: y0.to_vec(),
        accepted: 0,
        rejected: 0,
        evals: 0,
    };
    if t_end <= t0 || n == 0 {
        return Ok(stats);
    }
    let hmax = opts.max_step.unwrap_or(t_end - t0).abs();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ystage = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);

    f(t, &y, &mut k1);
    stats.evals += 1;
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteDerivative { t });
    }
    let mut h = initial_step(&mut f, t, &y, &k1, hmax, opts);
    stats.evals += 1;

    let mut facold: f64 = 1e-4;
    let mut reject = false;
    let mut steps = 0usize;

    loop {
        if steps > opts.max_steps {
            return Err(SolverError::MaxStepsExceeded {
                t,
                limit: opts.max_steps,
            });
        }
        if 0.1 * h.abs() <= t.abs() * UROUND {
            return Err(SolverError::StepSizeUnderflow { t });
        }
        let mut last = false;
        if t + 1.01 * h - t_end > 0.0 {
            h = t_end - t;
            last = true;
        }
        steps += 1;

        for i in 0..n {
            ystage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ystage, &mut k2);
        for i in 0..n {
            ystage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ystage, &mut k3);
        for i in 0..n {
            ystage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ystage, &mut k4);
        for i in 0..n {
            ystage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ystage, &mut k5);
        for i in 0..n {
            ystage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ystage, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y1, &mut k7);
        stats.evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.abs_tol + opts.rel_tol * y[i].abs().max(y1[i].abs());
            err += (e / sk).powi(2);
        }
        err = (err / n as f64).sqrt();
        if !err.is_finite() {
            // A stage blew up; force a rejection so the step shrinks.
            err = 1e10;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // The controller reads the previous step's error before it is
            // replaced by this one.
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(FACC2, FACC1);
            facold = err.max(1e-4);
            stats.accepted += 1;

            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sink(&DenseOutput { t0: t, h, rcont: &rcont });

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            t += h;
            if last {
                stats.y_end = y;
                return Ok(stats);
            }
            let mut hnew = h / fac;
            if reject {
                hnew = hnew.min(h);
            }
            reject = false;
            h = hnew.min(hmax);
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFE).min(FACC1);
            reject = true;
        }
    }
}

/// Convenience wrapper that stores every accepted step, for callers that
/// want to interrogate the whole dense trajectory afterwards.
pub struct StoredStep {
    pub t0: f64,
    pub h: f64,
    pub rcont: [Vec<f64>; 5],
}

impl StoredStep {
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        DenseOutput {
            t0: self.t0,
            h: self.h,
            rcont: &self.rcont,
        }
        .eval_into(t, out);
    }
}

pub fn integrate_collect<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &SolverOptions,
) -> Result<(Vec<StoredStep>, Integration), SolverError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut steps = Vec::new();
    let stats = integrate(f, t0, y0, t_end, opts, |d| {
        steps.push(StoredStep {
            t0: d.t0,
            h: d.h,
            rcont: d.rcont.clone(),
        });
    })?;
    Ok((steps, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn integrates_sine_accurately() {
        let (_, out) = integrate_collect(
            |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos(),
            0.0,
            &[0.0],
            10.0,
            &opts(),
        )
        .unwrap();
        assert!((out.y_end[0] - 10.0_f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn integrates_riccati_blowup_near_singularity() {
        // y' = y^2, y(0) = 1 has the exact solution 1/(1 - t).
        let (_, out) = integrate_collect(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            0.9,
            &opts(),
        )
        .unwrap();
        assert!((out.y_end[0] - 10.0).abs() < 1e-5, "got {}", out.y_end[0]);
    }

    #[test]
    fn riccati_singularity_fails_cleanly() {
        let res = integrate_collect(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            1.5,
            &opts(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn harmonic_oscillator_closes_its_orbit() {
        let tau = std::f64::consts::TAU;
        let (_, out) = integrate_collect(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            tau,
            &opts(),
        )
        .unwrap();
        assert!((out.y_end[0] - 1.0).abs() < 1e-7);
        assert!(out.y_end[1].abs() < 1e-7);
        assert!(out.accepted > 10 && out.rejected < out.accepted);
    }

    #[test]
    fn dense_output_matches_exponential_between_steps() {
        let (steps, _) = integrate_collect(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            &opts(),
        )
        .unwrap();
        let mut buf = [0.0];
        let mut worst = 0.0_f64;
        for k in 0..=500 {
            let t = 5.0 * k as f64 / 500.0;
            let step = steps
                .iter()
                .find(|s| t >= s.t0 && t <= s.t0 + s.h)
                .expect("grid point inside some step");
            step.eval_into(t, &mut buf);
            worst = worst.max((buf[0] - (-t).exp()).abs());
        }
        assert!(worst < 1e-8, "worst dense error {worst}");
    }

    #[test]
    fn zero_length_interval_is_identity() {
        let (steps, out) = integrate_collect(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0],
            2.0,
            &[7.0],
            2.0,
            &opts(),
        )
        .unwrap();
        assert!(steps.is_empty());
        assert_eq!(out.y_end, vec![7.0]);
    }
}
