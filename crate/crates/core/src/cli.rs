//! Command-line driver.
//!
//! Output files:
//! - realizations as CSV `colat,lon,value` (radians, row-major over the grid),
//!   or binary: a 32-byte little-endian header — magic `AKLR`, `u32` format
//!   version, `u32` n_colat, `u32` n_lon, `u64` seed, `u32` truncation,
//!   `u32` reserved — followed by `n_colat * n_lon` `f64` values, row-major.
//!   Binary grids are always [`LatLonGrid::uniform`].
//! - covariance panels `L1,L2,dlon,value`;
//! - variogram tables `colat,lag,gamma_hat,gamma_theory,n_pairs,env_min,env_max,env_q025,env_q975`;
//! - convergence tables `N,mean_error,mean_max_abs_error,theory_l2,theory_bound`.
//!
//! Every command also writes `manifest.ini`: the resolved configuration plus
//! a `[manifest]` section. Passing it back through `--config` reproduces the
//! outputs bit for bit.
//!
//! Replicate `i` of a run with seed `s` draws its coefficients from
//! [`crate::sampler::replicate_seed`]`(s, i)`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{ConfigError, OutputFormat, Panel, RunConfig};
use crate::covariance::CovarianceSpec;
use crate::diagnostics::{convergence_study, empirical_variogram, LagBins};
use crate::geom::LatLonGrid;
use crate::sampler::{Ensemble, Realization, SamplerError};
use crate::spectrum::{check_c4, gamma_block, C4Branch, RhoFamily, SpectrumError, SpectrumModel, PSD_TOLERANCE};

pub const BINARY_MAGIC: [u8; 4] = *b"AKLR";
pub const BINARY_VERSION: u32 = 1;
pub const BINARY_HEADER_LEN: usize = 32;

const DEFAULT_TRUNCATION: usize = 200;
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "sphere-kl",
    version,
    about = "Axially symmetric Gaussian processes on the sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// INI configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `[output] directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Caps the worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run even when the admissibility checks fail.
    #[arg(long, global = true)]
    pub allow_unchecked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate realizations on a latitude-longitude grid.
    Simulate,
    /// Tabulate a covariance panel.
    Covariance,
    /// Empirical versus theoretical variograms along parallels.
    Variogram,
    /// Truncation-error convergence study.
    Converge {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Report the summability and positive-semidefiniteness checks.
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Reference 512, N in {16, 32, 64, 128}, 64x64 grid, 200 replicates.
    Desk,
    /// Reference 1000, N in {16, ..., 512}, 64x64 grid, 1000 replicates.
    Full,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("inadmissible model: {0}")]
    Admissibility(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Admissibility(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Spectrum(SpectrumError::InvalidParameter(m)) => CliError::Config(ConfigError::Model(m)),
            SamplerError::Spectrum(SpectrumError::SequenceTooShort { .. }) => {
                CliError::Config(ConfigError::Model(e.to_string()))
            }
            SamplerError::Truncation { .. } => CliError::Other(e.to_string()),
            _ => CliError::Admissibility(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses the process arguments, runs, and maps failures to exit codes:
/// 0 success, 1 other, 2 configuration, 3 admissibility, 4 I/O.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run(&cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(&fs::read_to_string(path).map_err(io_err(path))?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = Some(seed);
    }
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Command::Converge { preset: Some(p) } = cli.command {
        apply_preset(&mut cfg, p);
    }
    if let Some(k) = cli.threads {
        // the global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }

    let variants = cfg.model.variants()?;
    for v in &variants {
        if v.model.rho_family() == RhoFamily::Kronecker && v.model.kappa().fract() != 0.0 {
            say(
                err,
                &format!(
                    "warning: kronecker rho with non-integer kappa {} has no antisymmetric part",
                    v.model.kappa()
                ),
            );
        }
    }

    match cli.command {
        Command::Check => return cmd_check(&cfg, out),
        Command::Covariance => {}
        _ => gate(
            &cfg,
            &variants.iter().map(|v| &v.model).collect::<Vec<_>>(),
            cli.allow_unchecked,
            err,
        )?,
    }

    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let files = match cli.command {
        Command::Simulate => cmd_simulate(&cfg, out)?,
        Command::Covariance => cmd_covariance(&cfg, out)?,
        Command::Variogram => cmd_variogram(&cfg, out)?,
        Command::Converge { .. } => cmd_converge(&cfg, out)?,
        Command::Check => unreachable!(),
    };
    write_manifest(&cfg, cli.command, &files)?;
    Ok(())
}

fn say(w: &mut dyn Write, line: &str) {
    let _ = writeln!(w, "{line}");
}

pub fn apply_preset(cfg: &mut RunConfig, preset: Preset) {
    let c = &mut cfg.converge;
    let (reference, truncations, reps) = match preset {
        Preset::Desk => (512, vec![16, 32, 64, 128], 200),
        Preset::Full => (1000, vec![16, 32, 64, 128, 256, 512], 1000),
    };
    c.reference.get_or_insert(reference);
    c.truncations.get_or_insert(truncations);
    c.n_colat.get_or_insert(64);
    c.n_lon.get_or_insert(64);
    c.n_reps.get_or_insert(reps);
}

fn default_branch(model: &SpectrumModel) -> C4Branch {
    if model.rho_family() == RhoFamily::Kronecker {
        C4Branch::Kronecker
    } else {
        C4Branch::General
    }
}

/// Summability check on every swept model; the PSD check per order happens
/// when the sampler factors each block.
fn gate(cfg: &RunConfig, models: &[&SpectrumModel], allow: bool, err: &mut dyn Write) -> Result<(), CliError> {
    for model in models {
        let (cert, branch) = certificate_for(cfg, model)?;
        let report = check_c4(model, cert.as_ref(), branch);
        if !report.passed {
            let msg = format!("summability check failed for {model:?}: {}", report.reason);
            if allow {
                say(err, &format!("warning: {msg} (continuing: --allow-unchecked)"));
            } else {
                return Err(CliError::Admissibility(msg));
            }
        }
    }
    Ok(())
}

fn certificate_for(
    cfg: &RunConfig,
    model: &SpectrumModel,
) -> Result<(Option<crate::spectrum::DecayCertificate>, C4Branch), CliError> {
    match &cfg.certificate {
        Some(c) => Ok((
            Some(c.certificate()?),
            c.branch.unwrap_or_else(|| default_branch(model)),
        )),
        None => {
            let natural = model
                .xi_family()
                .natural_certificate()
                .transpose()
                .map_err(|e| ConfigError::Model(e.to_string()))?;
            Ok((natural, default_branch(model)))
        }
    }
}

fn cmd_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let truncation = cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let mut failures = Vec::new();
    for v in cfg.model.variants()? {
        let model = &v.model;
        let label = if v.sweep.is_empty() {
            "model".to_string()
        } else {
            v.tag()
        };
        let (cert, branch) = certificate_for(cfg, model)?;
        let report = check_c4(model, cert.as_ref(), branch);
        say(
            out,
            &format!(
                "{label}: summability ({:?} branch) {}: {}; variance series {:?}",
                report.branch,
                if report.passed { "passed" } else { "FAILED" },
                report.reason,
                report.variance_sum
            ),
        );
        if !report.passed {
            failures.push(format!("{label}: {}", report.reason));
        }
        model
            .check_truncation(truncation)
            .map_err(|e| ConfigError::Model(e.to_string()))?;
        for m in 0..=model.active_orders(truncation) {
            match gamma_block(model, m, truncation) {
                Ok(b) => say(
                    out,
                    &format!(
                        "{label}: order {m}: min eigenvalue {:?}, floor {:?}",
                        b.min_eigenvalue(),
                        -PSD_TOLERANCE * b.mean_diagonal()
                    ),
                ),
                Err(e) => {
                    say(out, &format!("{label}: order {m}: FAILED: {e}"));
                    failures.push(format!("{label}: {e}"));
                }
            }
        }
    }
    if failures.is_empty() {
        say(out, "all checks passed");
        Ok(())
    } else {
        Err(CliError::Admissibility(failures.join("; ")))
    }
}

fn file_name(stem: &str, tag: &str, rep: Option<usize>, ext: &str) -> String {
    let mut name = stem.to_string();
    if !tag.is_empty() {
        name.push('_');
        name.push_str(tag);
    }
    if let Some(r) = rep {
        name.push_str(&format!("_r{r}"));
    }
    format!("{name}.{ext}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<String>, CliError> {
    let truncation = cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let seed = cfg.run.seed.unwrap_or(DEFAULT_SEED);
    let n_reps = cfg.run.n_reps.unwrap_or(1);
    let grid = LatLonGrid::uniform(cfg.run.n_colat.unwrap_or(500), cfg.run.n_lon.unwrap_or(500))
        .map_err(|e| ConfigError::Model(e.to_string()))?;
    let mut files = Vec::new();
    for v in cfg.model.variants()? {
        let ens = Ensemble::new(v.model.clone(), truncation, grid.clone())?;
        for i in 0..n_reps {
            let r = ens.realization(seed, i as u64);
            let rep = (n_reps > 1).then_some(i);
            let name = match cfg.output.format {
                OutputFormat::Csv => file_name("realization", &v.tag(), rep, "csv"),
                OutputFormat::Binary => file_name("realization", &v.tag(), rep, "bin"),
            };
            let path = cfg.output.directory.join(&name);
            let mut w = create(&path)?;
            match cfg.output.format {
                OutputFormat::Csv => write_realization_csv(&mut w, &r),
                OutputFormat::Binary => write_realization_binary(&mut w, &r),
            }
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
            say(out, &format!("wrote {}", path.display()));
            files.push(name);
        }
    }
    Ok(files)
}

pub fn write_realization_csv(w: &mut dyn Write, r: &Realization) -> io::Result<()> {
    writeln!(w, "colat,lon,value")?;
    let grid = r.grid();
    for (i, &c) in grid.colats().iter().enumerate() {
        for (j, &l) in grid.lons().iter().enumerate() {
            writeln!(w, "{c:?},{l:?},{:?}", r.value(i, j))?;
        }
    }
    Ok(())
}

pub fn write_realization_binary(w: &mut dyn Write, r: &Realization) -> io::Result<()> {
    let grid = r.grid();
    let dim =
        |n: usize| u32::try_from(n).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"));
    w.write_all(&BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&dim(grid.n_colat())?.to_le_bytes())?;
    w.write_all(&dim(grid.n_lon())?.to_le_bytes())?;
    w.write_all(&r.seed().to_le_bytes())?;
    w.write_all(&dim(r.truncation())?.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in r.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Header fields and values of a binary realization file.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRealization {
    pub n_colat: usize,
    pub n_lon: usize,
    pub seed: u64,
    pub truncation: usize,
    pub values: Vec<f64>,
}

pub fn read_realization_binary(bytes: &[u8]) -> io::Result<BinaryRealization> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if bytes.len() < BINARY_HEADER_LEN || bytes[..4] != BINARY_MAGIC {
        return Err(bad("not a realization file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(4) != BINARY_VERSION {
        return Err(bad("unsupported format version"));
    }
    let (n_colat, n_lon) = (u32_at(8) as usize, u32_at(12) as usize);
    let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let truncation = u32_at(24) as usize;
    let body = &bytes[BINARY_HEADER_LEN..];
    if body.len() != 8 * n_colat * n_lon {
        return Err(bad("payload length does not match the header"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(BinaryRealization {
        n_colat,
        n_lon,
        seed,
        truncation,
        values,
    })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    // weighted form keeps symmetric ranges exactly symmetric
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| a * ((last - k as f64) / last) + b * (k as f64 / last))
        .collect()
}

fn check_colat(c: f64) -> Result<f64, CliError> {
    if (0.0..=std::f64::consts::PI).contains(&c) {
        Ok(c)
    } else {
        Err(ConfigError::Model(format!("colatitude {c} outside [0, pi]")).into())
    }
}

fn cmd_covariance(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<String>, CliError> {
    let truncation = cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let c = &cfg.covariance;
    // (L1, L2, dlon) triples in output order
    let points: Vec<(f64, f64, f64)> = match c.panel {
        Panel::Lag => {
            let l1 = check_colat(c.lat1.lat_to_colat())?;
            let l2s = linspace(c.lat2_min.lat_to_colat(), c.lat2_max.lat_to_colat(), c.n_lat);
            let dls = linspace(c.dlon_min.radians(), c.dlon_max.radians(), c.n_dlon);
            let mut p = Vec::with_capacity(l2s.len() * dls.len());
            for &l2 in &l2s {
                check_colat(l2)?;
                p.extend(dls.iter().map(|&d| (l1, l2, d)));
            }
            p
        }
        Panel::Colat => {
            let ls = linspace(c.lat_min.lat_to_colat(), c.lat_max.lat_to_colat(), c.n_lat);
            let d = c.dlon.radians();
            let mut p = Vec::with_capacity(ls.len() * ls.len());
            for &l1 in &ls {
                check_colat(l1)?;
                p.extend(ls.iter().map(|&l2| (l1, l2, d)));
            }
            p
        }
    };
    let mut files = Vec::new();
    for v in cfg.model.variants()? {
        let spec = CovarianceSpec::new(v.model.clone(), truncation).map_err(|e| ConfigError::Model(e.to_string()))?;
        let name = file_name("covariance", &v.tag(), None, "csv");
        let path = cfg.output.directory.join(&name);
        let mut w = create(&path)?;
        let write = |w: &mut BufWriter<fs::File>| -> io::Result<()> {
            writeln!(w, "L1,L2,dlon,value")?;
            for &(l1, l2, d) in &points {
                writeln!(w, "{l1:?},{l2:?},{d:?},{:?}", spec.cov(l1, l2, d))?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(&path))?;
        say(out, &format!("wrote {}", path.display()));
        files.push(name);
    }
    Ok(files)
}

fn cmd_variogram(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<String>, CliError> {
    let truncation = cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION);
    let seed = cfg.run.seed.unwrap_or(DEFAULT_SEED);
    let vs = &cfg.variogram;
    let n_reps = vs.n_reps.or(cfg.run.n_reps).unwrap_or(1000);
    let mut colats: Vec<f64> = vs.latitudes.iter().map(|a| a.lat_to_colat()).collect();
    colats.sort_by(f64::total_cmp);
    let grid = LatLonGrid::parallels(colats.clone(), vs.n_lon).map_err(|e| ConfigError::Model(e.to_string()))?;
    let mut bins = LagBins::for_grid(&grid);
    if let Some(w) = vs.bin_width {
        bins.width = w.radians();
    }
    bins.max_lag = vs.max_lag.radians();

    let mut files = Vec::new();
    for v in cfg.model.variants()? {
        let ens = Ensemble::new(v.model.clone(), truncation, grid.clone())?;
        let reals = ens.collect(n_reps, seed);
        let spec = CovarianceSpec::new(v.model.clone(), truncation).map_err(|e| ConfigError::Model(e.to_string()))?;
        let name = file_name("variogram", &v.tag(), None, "csv");
        let path = cfg.output.directory.join(&name);
        let mut w = create(&path)?;
        writeln!(
            w,
            "colat,lag,gamma_hat,gamma_theory,n_pairs,env_min,env_max,env_q025,env_q975"
        )
        .map_err(io_err(&path))?;
        for &colat in &colats {
            let est = empirical_variogram(&reals, colat, bins).map_err(|e| CliError::Other(e.to_string()))?;
            let sill = spec.variance(colat);
            let mut worst: f64 = 0.0;
            for b in 0..est.lags.len() {
                let theory = spec.variogram(colat, est.lags[b]);
                if est.n_pairs[b] > 0 && theory > 0.1 * sill {
                    worst = worst.max((est.gamma_hat[b] - theory).abs() / theory);
                }
                let e = &est.envelope;
                writeln!(
                    w,
                    "{colat:?},{:?},{:?},{theory:?},{},{:?},{:?},{:?},{:?}",
                    est.lags[b], est.gamma_hat[b], est.n_pairs[b], e.min[b], e.max[b], e.q025[b], e.q975[b]
                )
                .map_err(io_err(&path))?;
            }
            say(
                out,
                &format!("colat {colat:.6}: sill {sill:.6e}, max relative deviation {worst:.4} where gamma > 10% sill"),
            );
        }
        w.flush().map_err(io_err(&path))?;
        say(out, &format!("wrote {}", path.display()));
        files.push(name);
    }
    Ok(files)
}

fn cmd_converge(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<String>, CliError> {
    let mut resolved = cfg.clone();
    apply_preset(&mut resolved, Preset::Desk);
    let c = &resolved.converge;
    let reference = c.reference.unwrap();
    let truncations = c.truncations.clone().unwrap();
    let n_reps = c.n_reps.unwrap();
    let seed = cfg.run.seed.unwrap_or(DEFAULT_SEED);
    let grid =
        LatLonGrid::uniform(c.n_colat.unwrap(), c.n_lon.unwrap()).map_err(|e| ConfigError::Model(e.to_string()))?;

    let mut files = Vec::new();
    for v in cfg.model.variants()? {
        let model = &v.model;
        model
            .check_truncation(reference)
            .map_err(|e| ConfigError::Model(e.to_string()))?;
        let study = convergence_study(model, reference, &truncations, &grid, n_reps, seed).map_err(|e| match e {
            crate::diagnostics::DiagnosticsError::Sampler(s) => CliError::from(s),
            other => CliError::Config(ConfigError::Model(other.to_string())),
        })?;
        let sup_lambda = (0..=reference).map(|m| model.lambda(m)).fold(0.0, f64::max);
        let name = file_name("converge", &v.tag(), None, "csv");
        let path = cfg.output.directory.join(&name);
        let mut w = create(&path)?;
        let write = |w: &mut BufWriter<fs::File>| -> io::Result<()> {
            writeln!(w, "N,mean_error,mean_max_abs_error,theory_l2,theory_bound")?;
            for (k, &n) in study.truncations.iter().enumerate() {
                let bound: f64 = ((n + 1)..=reference)
                    .map(|j| (2.0 * j as f64 + 1.0) * model.xi(j))
                    .sum();
                writeln!(
                    w,
                    "{n},{:?},{:?},{:?},{:?}",
                    study.errors[k],
                    study.max_abs_errors[k],
                    study.theory[k],
                    sup_lambda * bound
                )?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(&path))?;
        let label = if v.sweep.is_empty() {
            String::new()
        } else {
            format!("{}: ", v.tag())
        };
        say(out, &format!("{label}fitted slope {:.4}", study.fitted_slope));
        say(out, &format!("{label}max-abs error slope {:.4}", study.max_abs_slope));
        let (cert, _) = certificate_for(cfg, model)?;
        match cert {
            Some(c) => say(out, &format!("{label}theoretical rate {:.4}", -(c.beta() - 2.0))),
            None => say(
                out,
                &format!("{label}theoretical rate unavailable without a decay certificate"),
            ),
        }
        say(out, &format!("wrote {}", path.display()));
        files.push(name);
    }
    Ok(files)
}

fn write_manifest(cfg: &RunConfig, command: Command, files: &[String]) -> Result<(), CliError> {
    let mut text = cfg.to_ini();
    let command = match command {
        Command::Simulate => "simulate",
        Command::Covariance => "covariance",
        Command::Variogram => "variogram",
        Command::Converge { .. } => "converge",
        Command::Check => "check",
    };
    text.push_str(&format!(
        "\n[manifest]\nversion = {}\ncommand = {command}\nseed_rule = replicate i uses splitmix64(seed + (i + 1) * 0x9e3779b97f4a7c15); order m uses chacha8 stream m\n",
        env!("CARGO_PKG_VERSION")
    ));
    if command == "variogram" {
        text.push_str("layout = parallels at the listed latitudes, n_lon equispaced longitudes from 0\n");
    } else {
        text.push_str("layout = midpoint colatitudes (i + 1/2) pi / n_colat, longitudes 2 pi j / n_lon\n");
    }
    text.push_str(&format!("files = {}\n", files.join(", ")));
    let path = cfg.output.directory.join("manifest.ini");
    fs::write(&path, text).map_err(io_err(&path))
}

/// Convenience for scripts and tests: run with explicit arguments.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Other(e.to_string()))?;
    run(&cli, out, err)
}

/// Grid and truncation for a model at the `simulate` defaults, exposed so
/// callers can reproduce a CLI realization in code.
pub fn simulate_ensemble(cfg: &RunConfig, model: SpectrumModel) -> Result<Ensemble, CliError> {
    let grid = LatLonGrid::uniform(cfg.run.n_colat.unwrap_or(500), cfg.run.n_lon.unwrap_or(500))
        .map_err(|e| ConfigError::Model(e.to_string()))?;
    Ok(Ensemble::new(
        model,
        cfg.run.truncation.unwrap_or(DEFAULT_TRUNCATION),
        grid,
    )?)
}
