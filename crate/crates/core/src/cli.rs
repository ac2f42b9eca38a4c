//! Batch driver for convergence studies.
//!
//! Settings come from long flags, then a flat `key = value` file, then
//! defaults. Keys in the file use the flag names with or without dashes
//! replaced by underscores.

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::analysis::{compute_errors, render_table, ConvergenceRecord, TableFormat};
use crate::assembly::{solve, SchemeParams, SolvePath, Variant};
use crate::error::Error;
use crate::manufactured::{ExactSolution, LShapeSolution, SmoothSolution, ZeroSolution};
use crate::mesh::{build_lshape_mesh, build_unit_cube_mesh, read_mesh, Mesh};

/// Largest discrete zero-data solution accepted by the sanity run.
pub const SANITY_TOLERANCE: f64 = 1e-12;
/// Largest `||div u_h||` accepted for HDG_s.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-8;

/// Test problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Trigonometric solution on the unit cube.
    Smooth,
    /// Corner singularity on the L-shaped prism.
    LShape,
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "smooth" => Ok(Example::Smooth),
            "lshape" | "l-shape" => Ok(Example::LShape),
            other => Err(Error::Config(format!("unknown example '{other}' (expected smooth or lshape)"))),
        }
    }
}

impl Example {
    pub fn mesh(self, n: usize) -> Mesh {
        match self {
            Example::Smooth => build_unit_cube_mesh(n),
            Example::LShape => build_lshape_mesh(n),
        }
    }

    pub fn solution(self) -> &'static dyn ExactSolution {
        match self {
            Example::Smooth => &SmoothSolution,
            Example::LShape => &LShapeSolution,
        }
    }
}

/// A validated study configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: Example,
    pub variant: Variant,
    pub k: usize,
    pub levels: Vec<usize>,
    pub tau_t_scale: f64,
    /// Zero for HDG_s.
    pub tau_n_scale: f64,
    pub condense: bool,
    pub format: TableFormat,
    pub output: Option<PathBuf>,
    pub mesh_file: Option<PathBuf>,
    /// Write measured seconds; when false the column is zero so that
    /// repeated runs produce identical bytes.
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            example: Example::Smooth,
            variant: Variant::HdgS,
            k: 1,
            levels: vec![2, 4, 8],
            tau_t_scale: 1.0,
            tau_n_scale: 0.0,
            condense: true,
            format: TableFormat::Markdown,
            output: None,
            mesh_file: None,
            timings: true,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<SchemeParams, Error> {
        SchemeParams::new(self.k, self.variant, self.tau_t_scale, self.tau_n_scale)
    }

    /// Permitted but unusual settings.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.example == Example::LShape && self.k >= 2 {
            w.push(format!(
                "lshape with k = {}: the singular solution limits every degree to the same rate; k <= 1 is the usual range",
                self.k
            ));
        }
        if self.mesh_file.is_some() && self.levels.len() > 1 {
            w.push("mesh-file given: levels are ignored and a single mesh is solved".into());
        }
        w
    }
}

/// Command line flags. Every flag is optional so that file values and
/// defaults can fill the gaps.
#[derive(Debug, Parser, Default)]
#[command(name = "hdg-maxwell", version, about = "Convergence studies for the HDG curl-curl solver")]
pub struct Args {
    /// smooth or lshape
    #[arg(long)]
    pub example: Option<String>,
    /// hdgs or hdgg
    #[arg(long)]
    pub variant: Option<String>,
    /// Polynomial degree, 0..=3
    #[arg(long)]
    pub k: Option<String>,
    /// Comma separated cells per unit length, e.g. 2,4,8
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub tau_t_scale: Option<String>,
    #[arg(long)]
    pub tau_n_scale: Option<String>,
    /// true or false
    #[arg(long)]
    pub condense: Option<String>,
    /// csv or markdown
    #[arg(long)]
    pub format: Option<String>,
    /// Write the table here instead of standard output
    #[arg(long)]
    pub output: Option<String>,
    /// Solve on this mesh instead of generated ones
    #[arg(long)]
    pub mesh_file: Option<String>,
    /// true or false
    #[arg(long)]
    pub timings: Option<String>,
    /// Flat key = value file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 11] = [
    "example",
    "variant",
    "k",
    "levels",
    "tau_t_scale",
    "tau_n_scale",
    "condense",
    "format",
    "output",
    "mesh_file",
    "timings",
];

impl Args {
    fn get(&self, key: &str) -> Option<&String> {
        match key {
            "example" => self.example.as_ref(),
            "variant" => self.variant.as_ref(),
            "k" => self.k.as_ref(),
            "levels" => self.levels.as_ref(),
            "tau_t_scale" => self.tau_t_scale.as_ref(),
            "tau_n_scale" => self.tau_n_scale.as_ref(),
            "condense" => self.condense.as_ref(),
            "format" => self.format.as_ref(),
            "output" => self.output.as_ref(),
            "mesh_file" => self.mesh_file.as_ref(),
            "timings" => self.timings.as_ref(),
            _ => None,
        }
    }
}

/// Parses flat `key = value` text. `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        out.retain(|(k, _)| *k != key);
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Error> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{value}'"))),
    }
}

fn parse_levels(value: &str) -> Result<Vec<usize>, Error> {
    let levels: Vec<usize> = value
        .split(',')
        .map(|s| parse_value::<usize>("levels", s))
        .collect::<Result<_, _>>()?;
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Config(format!("levels must be positive integers, got '{value}'")));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("levels must be strictly increasing, got '{value}'")));
    }
    Ok(levels)
}

/// Builds a configuration from command line words (without the program
/// name) and optional config file text. Flags win over file values.
pub fn parse_config<S: AsRef<str>>(argv: &[S], file_text: Option<&str>) -> Result<RunConfig, Error> {
    let args = Args::try_parse_from(std::iter::once("hdg-maxwell").chain(argv.iter().map(|s| s.as_ref())))
        .map_err(|e| Error::Config(e.to_string()))?;
    merge(&args, file_text)
}

/// Reads the file named by `--config`, if any, and merges.
pub fn load_config<S: AsRef<str>>(argv: &[S]) -> Result<RunConfig, Error> {
    let args = Args::try_parse_from(std::iter::once("hdg-maxwell").chain(argv.iter().map(|s| s.as_ref())))
        .map_err(|e| Error::Config(e.to_string()))?;
    let text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?,
        ),
        None => None,
    };
    merge(&args, text.as_deref())
}

fn merge(args: &Args, file_text: Option<&str>) -> Result<RunConfig, Error> {
    let file = match file_text {
        Some(t) => parse_config_file(t)?,
        None => Vec::new(),
    };
    let lookup = |key: &str| -> Option<String> {
        args.get(key)
            .cloned()
            .or_else(|| file.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()))
    };
    let mut cfg = RunConfig::default();
    if let Some(v) = lookup("example") {
        cfg.example = v.parse()?;
    }
    if let Some(v) = lookup("variant") {
        cfg.variant = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    }
    if let Some(v) = lookup("k") {
        cfg.k = parse_value("k", &v)?;
    }
    if let Some(v) = lookup("levels") {
        cfg.levels = parse_levels(&v)?;
    }
    if let Some(v) = lookup("tau_t_scale") {
        cfg.tau_t_scale = parse_value("tau_t_scale", &v)?;
    }
    let tau_n: Option<f64> = lookup("tau_n_scale").map(|v| parse_value("tau_n_scale", &v)).transpose()?;
    cfg.tau_n_scale = match cfg.variant {
        Variant::HdgS => tau_n.unwrap_or(0.0),
        Variant::HdgG => tau_n.unwrap_or(1.0),
    };
    if let Some(v) = lookup("condense") {
        cfg.condense = parse_bool("condense", &v)?;
    }
    if let Some(v) = lookup("format") {
        cfg.format = v.parse()?;
    }
    cfg.output = lookup("output").map(PathBuf::from);
    cfg.mesh_file = lookup("mesh_file").map(PathBuf::from);
    if let Some(v) = lookup("timings") {
        cfg.timings = parse_bool("timings", &v)?;
    }
    cfg.params()?;
    Ok(cfg)
}

/// Result of a study.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub records: Vec<ConvergenceRecord>,
    pub table: String,
    pub warnings: Vec<String>,
    /// Levels that needed the monolithic fallback.
    pub fallbacks: Vec<usize>,
}

fn annotate(level: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Level {
        level,
        source: Box::new(e),
    }
}

/// Runs the study: a zero-data sanity solve on the first mesh, then every
/// level in order. Writes the table to `config.output` when set.
pub fn run_convergence_study(config: &RunConfig) -> Result<StudyOutput, Error> {
    let params = config.params()?;
    let path = if config.condense {
        SolvePath::Condensed
    } else {
        SolvePath::Monolithic
    };
    let meshes: Vec<(usize, Mesh)> = match &config.mesh_file {
        Some(file) => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Error::Config(format!("cannot read mesh file {}: {e}", file.display())))?;
            vec![(0, read_mesh(&text)?)]
        }
        None => config.levels.iter().map(|&n| (n, config.example.mesh(n))).collect(),
    };

    let (n0, first) = &meshes[0];
    let zero = solve(first, &params, &ZeroSolution, path).map_err(annotate(*n0))?;
    let size = zero.fields.max_abs();
    if !(size <= SANITY_TOLERANCE) {
        return Err(Error::Sanity(format!(
            "zero data gave a discrete solution of size {size:e} on level n={n0}"
        )));
    }

    let mut records = Vec::with_capacity(meshes.len());
    let mut fallbacks = Vec::new();
    for (n, mesh) in &meshes {
        let start = Instant::now();
        let outcome = solve(mesh, &params, config.example.solution(), path).map_err(annotate(*n))?;
        let mut rec = compute_errors(mesh, &outcome.fields, config.example.solution()).map_err(annotate(*n))?;
        rec.wall_time = if config.timings {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        if outcome.fallback {
            fallbacks.push(*n);
        }
        if params.variant == Variant::HdgS && !(rec.err_div_u <= DIVERGENCE_TOLERANCE) {
            return Err(annotate(*n)(Error::Sanity(format!(
                "hdgs divergence {:e} exceeds {DIVERGENCE_TOLERANCE:e}",
                rec.err_div_u
            ))));
        }
        records.push(rec);
    }
    let table = render_table(&records, config.format)?;
    if let Some(out) = &config.output {
        std::fs::write(out, &table)?;
    }
    Ok(StudyOutput {
        records,
        table,
        warnings: config.warnings(),
        fallbacks,
    })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<S: AsRef<str>>(argv: &[S]) -> i32 {
    if let Err(e) = Args::try_parse_from(std::iter::once("hdg-maxwell").chain(argv.iter().map(|s| s.as_ref()))) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            print!("{e}");
            return 0;
        }
    }
    let config = match load_config(argv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    match run_convergence_study(&config) {
        Ok(out) => {
            for n in &out.fallbacks {
                eprintln!("note: level n={n} used the monolithic fallback");
            }
            if config.output.is_none() {
                print!("{}", out.table);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
