//! Acceptance gate: eleven scripted checks covering the corpus systems, the
//! decay-rate estimator, a randomized compilation sweep, and the negative
//! controls. Each check prints exactly one `criterion N <label>: pass|fail`
//! line so a run's verdict can be read off the test output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnc::corpus::{self, corpus_run};
use tnc::expr::{parse_expr, parse_rational, rat, ratio, LaurentPolynomial};
use tnc::odesys::{reactions_to_odes, OdeSystem, Reaction};
use tnc::sim::{simulate, simulate_tn, PlaceholderMap, SimParams};
use tnc::sysfile::SysFile;
use tnc::transform::{compile, estimate_gamma, CompileMode, CompileOptions};
use tnc::verify::{
    bookend_check, conservation_drift, ratio_error, ratio_view, symbolic_ratio_identity,
};

fn report(n: usize, label: &str, outcome: Result<(), String>) {
    match &outcome {
        Ok(()) => eprintln!("criterion {n} {label}: pass"),
        Err(why) => eprintln!("criterion {n} {label}: fail ({why})"),
    }
    if let Err(why) = outcome {
        panic!("criterion {n} {label}: {why}");
    }
}

fn s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn poly(text: &str) -> LaurentPolynomial {
    parse_expr(text).expect("fixture parses")
}

#[test]
fn criterion_01_sine_cosine_network_oracle() {
    report(1, "sine-cosine network oracle", (|| {
        let file = SysFile::parse(corpus::text("sine_cosine").unwrap()).map_err(s)?;
        let tn = compile(&file.system, &CompileOptions::new(ratio(5, 2))).map_err(s)?;
        let names: Vec<&str> = tn.base.variables().iter().map(|v| v.as_str()).collect();
        if names != ["x_T", "x_B", "y_T", "y_B"] {
            return Err(format!("unexpected variables {names:?}"));
        }
        let expected = [
            ("x_T", "x_B*y_T/y_B + x_T/x_B - 5/2*x_T", 2),
            ("x_B", "2*x_B^2/x_T - 5/2*x_B + 1", 1),
            ("y_T", "2*y_B + y_T/y_B - 5/2*y_T", 1),
            ("y_B", "x_T*y_B^2/(x_B*y_T) - 5/2*y_B + 1", 1),
        ];
        for (name, rhs, init) in expected {
            let got = tn.base.rhs(name).ok_or(format!("missing {name}"))?;
            if *got != poly(rhs) {
                return Err(format!("{name}' = {got}, expected {rhs}"));
            }
            if tn.base.initial(name) != Some(&rat(init)) {
                return Err(format!("{name}(0) != {init}"));
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_02_sine_cosine_co_simulation() {
    report(2, "sine-cosine co-simulation", (|| {
        let run = corpus_run("sine_cosine").map_err(s)?;
        let err = ratio_error(&run.source, &run.network, &run.tn).map_err(s)?;
        if err.max_abs > 1e-6 {
            return Err(format!("max ratio error {:.3e}", err.max_abs));
        }
        let view = ratio_view(&run.network, &run.tn).map_err(s)?;
        for name in ["x", "y"] {
            let series = view.series(name).unwrap();
            for (i, v) in series.iter().enumerate() {
                if !(1.0 - 1e-3..=3.0 + 1e-3).contains(v) {
                    return Err(format!("{name} = {v} at t = {}", view.times[i]));
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_03_gamma_estimate() {
    report(3, "gamma estimate", (|| {
        let file = SysFile::parse(corpus::text("sine_cosine").unwrap()).map_err(s)?;
        let g = estimate_gamma(
            &file.system,
            &file.events,
            file.sim_params().t_end,
            1.0,
            &file.placeholder_map().map_err(s)?,
        )
        .map_err(s)?;
        let gf = num_traits::ToPrimitive::to_f64(&g).unwrap();
        if (gf - 2.5).abs() > 0.05 {
            return Err(format!("estimate {g} = {gf}"));
        }
        Ok(())
    })());
}

#[test]
fn criterion_04_bubble_sort() {
    report(4, "bubble sort", (|| {
        let run = corpus_run("bubble_sort").map_err(s)?;
        let view = ratio_view(&run.network, &run.tn).map_err(s)?;
        let sorted = [("x1", 1.0), ("x2", 2.0), ("x3", 3.0), ("x4", 7.0)];
        let weights: Vec<(String, f64)> =
            sorted.iter().map(|(n, _)| (n.to_string(), 1.0)).collect();
        for (label, traj) in [("original", &run.source), ("compiled", &view)] {
            for (name, want) in sorted {
                let got = traj.last(name).unwrap();
                if (got - want).abs() > 1e-2 {
                    return Err(format!("{label} {name}(50) = {got}, expected {want}"));
                }
            }
            let drift = conservation_drift(traj, &weights, 13.0).map_err(s)?;
            if drift > 1e-6 {
                return Err(format!("{label} sum drift {drift:.3e}"));
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_05_schlogl_memory_protocol() {
    report(5, "schlogl memory protocol", (|| {
        let run = corpus_run("schlogl").map_err(s)?;
        let view = ratio_view(&run.network, &run.tn).map_err(s)?;
        let x = view.series("x").unwrap();
        let y = view.series("y").unwrap();
        // Reading just before each phase boundary sees that phase's settled
        // state; the sample at the boundary already shows the next input.
        let before = |t_phase: f64| {
            view.times.partition_point(|t| *t < t_phase) - 1
        };
        let phases = [
            (5.0, None, 0.1, "rest"),
            (10.0, Some(0.9), 0.984, "high input"),
            (15.0, Some(0.5), 0.9, "settled high"),
            (25.0 + 0.1, Some(0.5), 0.1, "restored low"),
        ];
        for (t_phase, x_want, y_want, label) in phases {
            let i = before(t_phase);
            if let Some(xw) = x_want {
                if (x[i] - xw).abs() > 1e-6 {
                    return Err(format!("{label}: x = {} (input not held)", x[i]));
                }
            }
            if (y[i] - y_want).abs() > 0.02 {
                return Err(format!(
                    "{label}: y = {:.4} at t = {}, expected {y_want} +- 0.02",
                    y[i], view.times[i]
                ));
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_willamowski_rossler_bounds() {
    report(6, "willamowski-rossler bounds", (|| {
        let run = corpus_run("willamowski_rossler").map_err(s)?;
        // Pointwise ratio comparison only over [0, 1]; chaos amplifies
        // solver error beyond that, so the long horizon gets bounds checks.
        let mut short_err = 0.0_f64;
        for pair in &run.tn.pairs {
            let v = run.source.series(&pair.source).unwrap();
            let top = run.network.series(&pair.top).unwrap();
            let bottom = run.network.series(&pair.bottom).unwrap();
            for (i, t) in run.source.times.iter().enumerate() {
                if *t > 1.0 {
                    break;
                }
                short_err = short_err.max((top[i] / bottom[i] - v[i]).abs());
            }
        }
        if short_err > 1e-3 {
            return Err(format!("ratio error {short_err:.3e} over [0, 1]"));
        }
        for traj in [&run.source, &run.network] {
            for (name, series) in traj.names.iter().zip(&traj.values) {
                for (i, v) in series.iter().enumerate() {
                    if !(*v > 0.0 && *v < 1e4) {
                        return Err(format!("{name} = {v} at t = {}", traj.times[i]));
                    }
                }
            }
        }
        let bookend = bookend_check(&run.network, &run.tn, 1e-6).map_err(s)?;
        if !bookend.passed {
            return Err("bookend violated".to_string());
        }
        Ok(())
    })());
}

#[test]
fn criterion_07_pid_recovery_windows() {
    report(7, "pid recovery windows", (|| {
        let run = corpus_run("pid").map_err(s)?;
        let view = ratio_view(&run.network, &run.tn).map_err(s)?;
        let v = view.series("v").unwrap();
        // Each window opens 8 time units after a disturbance and closes at
        // the next one; a window ending at a set event excludes the endpoint
        // because that sample already shows the re-disturbed state.
        let windows = [
            (18.0, 20.0, false, "set v 10"),
            (28.0, 30.0, true, "set v 4"),
            (38.0, 50.0, true, "bias +6"),
            (58.0, 60.0, true, "bias -2"),
        ];
        for (from, to, closed, label) in windows {
            for (i, t) in view.times.iter().enumerate() {
                let inside = *t >= from && (*t < to || (closed && *t == to));
                if inside && (v[i] - 8.0).abs() > 0.05 {
                    return Err(format!(
                        "after {label}: |v - 8| = {:.4} at t = {t}",
                        (v[i] - 8.0).abs()
                    ));
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_08_extremum_seeking_basins() {
    report(8, "extremum seeking basins", (|| {
        let starts = [
            ("27/10", 3.08),
            ("7/2", 3.08),
            ("9/2", 5.0),
            ("11/2", 5.0),
            ("7", 5.0),
        ];
        for (z0, peak) in starts {
            let mut file = SysFile::parse(corpus::text("extremum").unwrap()).map_err(s)?;
            file.system
                .set_initial("z", parse_rational(z0).unwrap())
                .map_err(s)?;
            let traj = simulate(
                &file.system,
                &file.events,
                &file.sim_params(),
                &file.placeholder_map().map_err(s)?,
            )
            .map_err(s)?;
            // The probe tone never switches off, so convergence is read as
            // the mean of x over the last stretch of the run.
            let x = traj.series("x").unwrap();
            let tail = traj.times.partition_point(|t| *t < 190.0);
            let mean: f64 = x[tail..].iter().sum::<f64>() / (x.len() - tail) as f64;
            if (mean - peak).abs() > 0.1 {
                return Err(format!("z(0) = {z0}: mean x = {mean:.4}, expected {peak}"));
            }
        }
        Ok(())
    })());
}

/// Drawn fresh for every index from a fixed seed: one to three variables,
/// each with a linear self-decay, a constant production, and up to two
/// random monomial terms of total degree at most three and coefficient
/// magnitude at most two. The decay and production keep a fair share of
/// draws orbiting an interior equilibrium instead of escaping immediately.
fn random_system(rng: &mut ChaCha8Rng) -> OdeSystem {
    let names = ["u", "v", "w"];
    let n = rng.random_range(1..=3);
    let mut sys = OdeSystem::new();
    for name in &names[..n] {
        let init = ratio(rng.random_range(1..=6), 2);
        sys.add_variable(name, init).unwrap();
    }
    for name in &names[..n] {
        let mut text = format!(
            "-{}*{name} + {}",
            rng.random_range(1..=3),
            ["1/2", "1", "2"][rng.random_range(0..3)]
        );
        for _ in 0..rng.random_range(0..=2) {
            let sign = if rng.random_bool(0.5) { "+" } else { "-" };
            let mag = ["1/2", "1", "2"][rng.random_range(0..3)];
            let mut mono = String::new();
            for _ in 0..rng.random_range(0..=3) {
                mono.push('*');
                mono.push_str(names[rng.random_range(0..n)]);
            }
            text.push_str(&format!(" {sign} {mag}{mono}"));
        }
        sys.set_rhs(name, poly(&text)).unwrap();
    }
    sys
}

#[test]
fn criterion_09_randomized_property_suite() {
    report(9, "randomized property suite", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ph = PlaceholderMap::new();
        let params = SimParams {
            t_end: 5.0,
            points: 200,
            ..SimParams::default()
        };
        let mut bounded = 0usize;
        for i in 0..200 {
            let sys = random_system(&mut rng);
            let tn = compile(&sys, &CompileOptions::new(rat(10))).map_err(|e| {
                format!("system {i} failed to compile: {e}")
            })?;
            let symbolic = symbolic_ratio_identity(&tn, &sys).map_err(s)?;
            if !symbolic.is_exact() {
                return Err(format!("system {i}: residual in {:?}", symbolic.offenders()));
            }
            // Empirically bounded: the original trajectory reaches t = 5
            // with every sample inside [1/20, 20]. The lower edge keeps the
            // run inside the positive region the construction assumes.
            let Ok(src_traj) = simulate(&sys, &[], &params, &ph) else {
                continue;
            };
            let tame = src_traj
                .values
                .iter()
                .all(|series| series.iter().all(|v| (0.05..20.0).contains(v)));
            if !tame {
                continue;
            }
            bounded += 1;
            let g = estimate_gamma(&sys, &[], params.t_end, 1.2, &ph)
                .map_err(|e| format!("system {i}: {e}"))?;
            let fitted = compile(&sys, &CompileOptions::new(g)).map_err(s)?;
            let net_traj = simulate_tn(&fitted, &[], &params, &ph)
                .map_err(|e| format!("system {i}: {e}"))?;
            let err = ratio_error(&src_traj, &net_traj, &fitted).map_err(s)?;
            if err.max_abs > 1e-5 {
                return Err(format!("system {i}: ratio error {:.3e}", err.max_abs));
            }
            let bookend = bookend_check(&net_traj, &fitted, 1e-6).map_err(s)?;
            if !bookend.passed {
                return Err(format!("system {i}: bookend violated"));
            }
        }
        if bounded < 20 {
            return Err(format!("only {bounded} of 200 systems were bounded"));
        }
        Ok(())
    })());
}

#[test]
fn criterion_10_negative_controls() {
    report(10, "negative controls", (|| {
        let file = SysFile::parse(corpus::text("sine_cosine").unwrap()).map_err(s)?;
        let warm = compile(
            &file.system,
            &CompileOptions::new(ratio(5, 2)).mode(CompileMode::Warmup),
        )
        .map_err(s)?;
        // Warmup pairs decay below any absolute floor, so the long co-run
        // needs purely relative step control.
        let params = SimParams {
            t_end: 100.0,
            points: 500,
            abs_tol: f64::MIN_POSITIVE,
            ..SimParams::default()
        };
        let ph = PlaceholderMap::new();
        let src_traj = simulate(&file.system, &[], &params, &ph).map_err(s)?;
        let net_traj = simulate_tn(&warm, &[], &params, &ph).map_err(s)?;
        let err = ratio_error(&src_traj, &net_traj, &warm).map_err(s)?;
        if err.max_abs > 1e-5 {
            return Err(format!("warmup ratio error {:.3e}", err.max_abs));
        }
        if bookend_check(&net_traj, &warm, 1e-6).map_err(s)?.passed {
            return Err("warmup bookend unexpectedly held".to_string());
        }

        let mut broken = compile(&file.system, &CompileOptions::new(ratio(5, 2))).map_err(s)?;
        broken
            .base
            .set_rhs("x_T", poly("x_B*y_T/y_B - 5/2*x_T"))
            .map_err(s)?;
        let symbolic = symbolic_ratio_identity(&broken, &file.system).map_err(s)?;
        if symbolic.is_exact() {
            return Err("deleted beta monomial went unnoticed".to_string());
        }
        let (_, residual) = symbolic
            .residuals
            .iter()
            .find(|(v, _)| v == "x")
            .ok_or("no x residual")?;
        if residual != &poly("-x_T/x_B^2") {
            return Err(format!("residual {residual}, expected -x_T/x_B^2"));
        }
        Ok(())
    })());
}

#[test]
fn criterion_11_mass_action_oracle() {
    report(11, "mass-action oracle", (|| {
        let k = ratio(3, 2);
        let r = Reaction::new(&[("A", 1), ("B", 2)], &[("C", 3)], k).map_err(s)?;
        let sys = reactions_to_odes(&[r], &BTreeMap::new()).map_err(s)?;
        let expected = [
            ("a", "-3/2*a*b^2"),
            ("b", "-3*a*b^2"),
            ("c", "9/2*a*b^2"),
        ];
        for (name, rhs) in expected {
            let got = sys.rhs(name).ok_or(format!("missing {name}"))?;
            if *got != poly(rhs) {
                return Err(format!("{name}' = {got}, expected {rhs}"));
            }
        }

        let r = Reaction::new(&[("X", 2)], &[("X", 3)], rat(1)).map_err(s)?;
        let mut init = BTreeMap::new();
        init.insert("x".to_string(), rat(1));
        let sys = reactions_to_odes(&[r], &init).map_err(s)?;
        if *sys.rhs("x").unwrap() != poly("x^2") {
            return Err(format!("x' = {}", sys.rhs("x").unwrap()));
        }
        let params = SimParams {
            t_end: 0.9,
            points: 90,
            ..SimParams::default()
        };
        let traj = simulate(&sys, &[], &params, &PlaceholderMap::new()).map_err(s)?;
        let got = traj.last("x").unwrap();
        if (got - 10.0).abs() > 1e-4 {
            return Err(format!("x(0.9) = {got}, expected 10"));
        }
        Ok(())
    })());
}
