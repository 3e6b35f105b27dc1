//! Command-line front end: compile system files into transcriptional
//! networks, simulate either side, verify compilations, and estimate the
//! shared decay constant. Exit codes: 0 success (and verification pass),
//! 1 verification failure, 2 any other error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tnc::expr::{parse_rational, Rational};
use tnc::sim::{simulate, simulate_tn, PlaceholderMap, SimParams, Trajectory};
use tnc::svg::line_plot;
use tnc::sysfile::SysFile;
use tnc::transform::{
    adopt_network, compile, estimate_gamma, CompileMode, CompileOptions, TnSystem,
};
use tnc::verify::{ratio_view, verify_all, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "tnc",
    version,
    about = "Compile polynomial ODE systems into transcriptional networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Stable,
    Warmup,
}

impl From<ModeArg> for CompileMode {
    fn from(m: ModeArg) -> CompileMode {
        match m {
            ModeArg::Stable => CompileMode::Stable,
            ModeArg::Warmup => CompileMode::Warmup,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a system file and write the network as a system file
    Compile {
        input: PathBuf,
        /// Decay constant; falls back to the file's gamma line, then to an
        /// estimate from a trajectory of the original system
        #[arg(long)]
        gamma: Option<String>,
        /// Constant production added to every denominator species
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Stable)]
        mode: ModeArg,
        /// Safety factor applied when gamma is estimated
        #[arg(long, default_value_t = 1.1)]
        margin: f64,
        /// Output path; stdout when omitted
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate a system file and emit CSV, optionally an SVG plot
    Simulate {
        input: PathBuf,
        /// Compile first and run the network, reporting the ratio view
        #[arg(long)]
        compiled: bool,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
        /// CSV output path; stdout when omitted
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG plot output path
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Comma-separated series to plot; all of them when omitted
        #[arg(long, value_delimiter = ',')]
        vars: Vec<String>,
    },
    /// Compile in memory and check the network against its source
    Verify {
        input: PathBuf,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Stable)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.1)]
        margin: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Verify this network file instead of compiling one
        #[arg(long)]
        tn_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        ratio_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        slack: f64,
    },
    /// Estimate the decay constant from the trajectory supremum
    Gamma {
        input: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 1.1)]
        margin: f64,
    },
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn parse_flag_rational(text: &str, flag: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| format!("--{flag} {text}: {e}"))
}

/// gamma from the flag, the file, or an estimate; the estimate is echoed so
/// callers can surface it.
fn resolve_gamma(
    file: &SysFile,
    flag: Option<&str>,
    margin: f64,
    ph: &PlaceholderMap,
) -> Result<(Rational, bool), String> {
    if let Some(text) = flag {
        return Ok((parse_flag_rational(text, "gamma")?, false));
    }
    if let Some(g) = &file.gamma {
        return Ok((g.clone(), false));
    }
    let t_end = file.sim.as_ref().map_or(SimParams::default().t_end, |s| s.t_end);
    let g = estimate_gamma(&file.system, &file.events, t_end, margin, ph)
        .map_err(|e| e.to_string())?;
    Ok((g, true))
}

fn build_network(
    file: &SysFile,
    gamma: Rational,
    beta: Option<&str>,
    mode: ModeArg,
) -> Result<TnSystem, String> {
    let mut opts = CompileOptions::new(gamma).mode(mode.into());
    if let Some(text) = beta {
        opts = opts.beta(parse_flag_rational(text, "beta")?);
    } else if let Some(b) = &file.beta {
        opts = opts.beta(b.clone());
    }
    for (v, d) in &file.denom {
        opts = opts.denom_scale(v, d.clone());
    }
    compile(&file.system, &opts).map_err(|e| e.to_string())
}

fn sim_params(
    file: &SysFile,
    t_end: Option<f64>,
    points: Option<usize>,
    rtol: Option<f64>,
    atol: Option<f64>,
) -> SimParams {
    let mut p = file.sim_params();
    if let Some(t) = t_end {
        p.t_end = t;
    }
    if let Some(n) = points {
        p.points = n;
    }
    if let Some(r) = rtol {
        p.rel_tol = r;
    }
    if let Some(a) = atol {
        p.abs_tol = a;
    }
    p
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_compile(
    input: &Path,
    gamma: Option<String>,
    beta: Option<String>,
    mode: ModeArg,
    margin: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let file = SysFile::load(input).map_err(|e| e.to_string())?;
    let ph = file.placeholder_map().map_err(|e| e.to_string())?;
    let (g, estimated) = resolve_gamma(&file, gamma.as_deref(), margin, &ph)?;
    let tn = build_network(&file, g.clone(), beta.as_deref(), mode)?;
    let printed = SysFile::from_network(&tn, file.sim.clone(), file.bindings.clone()).print();
    let text = if estimated {
        format!("# gamma estimated at {g} (margin {margin})\n{printed}")
    } else {
        printed
    };
    write_out(out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn emit_trajectory(
    traj: &Trajectory,
    csv: Option<&Path>,
    svg: Option<&Path>,
    vars: &[String],
    title: &str,
) -> Result<(), String> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(|e| e.to_string())?;
    let text = String::from_utf8(buf).expect("csv is ascii");
    write_out(csv, &text)?;
    if let Some(path) = svg {
        let selected: Vec<String> = if vars.is_empty() {
            traj.names.clone()
        } else {
            vars.to_vec()
        };
        let doc = line_plot(traj, &selected, title).map_err(|e| e.to_string())?;
        std::fs::write(path, doc).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    input: &Path,
    compiled: bool,
    t_end: Option<f64>,
    points: Option<usize>,
    rtol: Option<f64>,
    atol: Option<f64>,
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
    vars: Vec<String>,
) -> Result<ExitCode, String> {
    let file = SysFile::load(input).map_err(|e| e.to_string())?;
    let ph = file.placeholder_map().map_err(|e| e.to_string())?;
    let params = sim_params(&file, t_end, points, rtol, atol);
    let title = input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let traj = if compiled {
        let (g, _) = resolve_gamma(&file, None, 1.1, &ph)?;
        let tn = build_network(&file, g, None, ModeArg::Stable)?;
        let net = simulate_tn(&tn, &file.events, &params, &ph).map_err(|e| e.to_string())?;
        ratio_view(&net, &tn).map_err(|e| e.to_string())?
    } else {
        simulate(&file.system, &file.events, &params, &ph).map_err(|e| e.to_string())?
    };
    emit_trajectory(&traj, csv.as_deref(), svg.as_deref(), &vars, &title)?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    input: &Path,
    gamma: Option<String>,
    beta: Option<String>,
    mode: ModeArg,
    margin: f64,
    t_end: Option<f64>,
    points: Option<usize>,
    tn_file: Option<PathBuf>,
    ratio_tol: f64,
    slack: f64,
) -> Result<ExitCode, String> {
    let file = SysFile::load(input).map_err(|e| e.to_string())?;
    let ph = file.placeholder_map().map_err(|e| e.to_string())?;
    let params = sim_params(&file, t_end, points, None, None);
    let tn = match tn_file {
        Some(path) => {
            let net = SysFile::load(&path).map_err(|e| e.to_string())?;
            let g = match (&gamma, &net.gamma) {
                (Some(text), _) => parse_flag_rational(text, "gamma")?,
                (None, Some(g)) => g.clone(),
                (None, None) => {
                    return Err(format!(
                        "{}: no gamma line; pass --gamma",
                        path.display()
                    ))
                }
            };
            // A file without a beta line is a warmup network.
            let (b, net_mode) = match &net.beta {
                Some(b) => (b.clone(), CompileMode::Stable),
                None => (tnc::expr::rat(1), CompileMode::Warmup),
            };
            adopt_network(&file.system, &net.system, &g, &b, net_mode)
                .map_err(|e| e.to_string())?
        }
        None => {
            let (g, _) = resolve_gamma(&file, gamma.as_deref(), margin, &ph)?;
            build_network(&file, g, beta.as_deref(), mode)?
        }
    };
    let opts = VerifyOptions { ratio_tol, slack };
    let report = verify_all(&file.system, &tn, &file.events, &params, &ph, &opts)
        .map_err(|e| e.to_string())?;
    println!("{report}");
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_gamma(input: &Path, t_end: Option<f64>, margin: f64) -> Result<ExitCode, String> {
    let file = SysFile::load(input).map_err(|e| e.to_string())?;
    let ph = file.placeholder_map().map_err(|e| e.to_string())?;
    let horizon = t_end
        .or_else(|| file.sim.as_ref().map(|s| s.t_end))
        .unwrap_or(SimParams::default().t_end);
    let g = estimate_gamma(&file.system, &file.events, horizon, margin, &ph)
        .map_err(|e| e.to_string())?;
    println!("{g}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Compile {
            input,
            gamma,
            beta,
            mode,
            margin,
            out,
        } => cmd_compile(&input, gamma, beta, mode, margin, out),
        Cmd::Simulate {
            input,
            compiled,
            t_end,
            points,
            rtol,
            atol,
            csv,
            svg,
            vars,
        } => cmd_simulate(&input, compiled, t_end, points, rtol, atol, csv, svg, vars),
        Cmd::Verify {
            input,
            gamma,
            beta,
            mode,
            margin,
            t_end,
            points,
            tn_file,
            ratio_tol,
            slack,
        } => cmd_verify(
            &input, gamma, beta, mode, margin, t_end, points, tn_file, ratio_tol, slack,
        ),
        Cmd::Gamma {
            input,
            t_end,
            margin,
        } => cmd_gamma(&input, t_end, margin),
    };
    match result {
        Ok(code) => code,
        Err(message) => fail(message),
    }
}
