//! Bundled example systems, reachable by name from tests and the CLI.
//! Each file pins its own gamma and simulation window, so a corpus run
//! needs no further configuration.

use thiserror::Error;

use crate::sim::{simulate, simulate_tn, SimError, Trajectory};
use crate::sysfile::{SysFile, SysFileError};
use crate::transform::{compile, CompileError, CompileOptions, TnSystem};

pub const NAMES: [&str; 6] = [
    "sine_cosine",
    "bubble_sort",
    "schlogl",
    "willamowski_rossler",
    "pid",
    "extremum",
];

/// Source text of a bundled example, if the name is known.
pub fn text(name: &str) -> Option<&'static str> {
    match name {
        "sine_cosine" => Some(include_str!("../corpus/sine_cosine.tn")),
        "bubble_sort" => Some(include_str!("../corpus/bubble_sort.tn")),
        "schlogl" => Some(include_str!("../corpus/schlogl.crn")),
        "willamowski_rossler" => Some(include_str!("../corpus/willamowski_rossler.crn")),
        "pid" => Some(include_str!("../corpus/pid.tn")),
        "extremum" => Some(include_str!("../corpus/extremum.tn")),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no example named `{0}`")]
    UnknownExample(String),
    #[error("example declares no gamma")]
    MissingGamma,
    #[error(transparent)]
    File(#[from] SysFileError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The original run, the compiled run, and the network that produced it,
/// all on the grid declared by the example file.
pub struct CorpusRun {
    pub file: SysFile,
    pub tn: TnSystem,
    pub source: Trajectory,
    pub network: Trajectory,
}

pub fn corpus_run(name: &str) -> Result<CorpusRun, CorpusError> {
    let text = text(name).ok_or_else(|| CorpusError::UnknownExample(name.to_string()))?;
    run_file(SysFile::parse(text)?)
}

/// Compile and co-simulate an already parsed file. Taking the file by value
/// lets callers adjust initials or events before the run.
pub fn run_file(file: SysFile) -> Result<CorpusRun, CorpusError> {
    let gamma = file.gamma.clone().ok_or(CorpusError::MissingGamma)?;
    let mut opts = CompileOptions::new(gamma);
    if let Some(b) = &file.beta {
        opts = opts.beta(b.clone());
    }
    for (v, d) in &file.denom {
        opts = opts.denom_scale(v, d.clone());
    }
    let tn = compile(&file.system, &opts)?;
    let params = file.sim_params();
    let ph = file.placeholder_map()?;
    let source = simulate(&file.system, &file.events, &params, &ph)?;
    let network = simulate_tn(&tn, &file.events, &params, &ph)?;
    Ok(CorpusRun {
        file,
        tn,
        source,
        network,
    })
}
