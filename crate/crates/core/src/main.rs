use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;

use husimi_flow::classical::TransmissionOptions;
use husimi_flow::experiment::{
    default_momenta, energy_contour, preset, run_snapshot_pipeline, run_transmission_sweep, validate,
    QuantumRunOptions, Snapshot, SnapshotOptions,
};
use husimi_flow::husimi::PhaseSpaceWindow;
use husimi_flow::io::{self, num, ConfigFile, Header, RunSpec};
use husimi_flow::Error;

/// Exit status for bad flags, configs or inputs.
const EXIT_USAGE: u8 = 2;
/// Exit status when the simulation itself fails (norm loss, energy drift, ...).
const EXIT_PHYSICS: u8 = 3;

#[derive(Parser)]
#[command(name = "husimi-flow", version, about = "Husimi phase-space flow of a wavepacket scattering off a Gaussian barrier")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// Parameter preset: paper or desk.
    #[arg(long, global = true, default_value = "desk")]
    preset: String,
    /// TOML file overriding preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Truncation order N of the current expansion.
    #[arg(long, short = 'N', global = true)]
    order: Option<usize>,
    /// Husimi window as x_lo,x_hi,p_lo,p_hi[,nx,np].
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SnapshotArgs {
    /// Launch momentum.
    #[arg(long, default_value_t = 1.8)]
    p0: f64,
    /// Comma-separated snapshot times (multiples of dt).
    #[arg(long, value_delimiter = ',', default_value = "2.1")]
    times: Vec<f64>,
    /// Skip the grid/window cross-check of zeros.
    #[arg(long)]
    no_stability: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Quantum vs classical transmission over a list of launch momenta.
    Sweep {
        /// Comma-separated momenta (default 1.6..2.4 step 0.1).
        #[arg(long, value_delimiter = ',')]
        p0: Vec<f64>,
    },
    /// Full pipeline: wavefunction, Husimi field, current, zeros, stagnation points, separatrix.
    Snapshot(SnapshotArgs),
    /// Husimi zeros only.
    Zeros(SnapshotArgs),
    /// Current field with per-order components.
    Current(SnapshotArgs),
    /// Stagnation-point and dipole report.
    Topology(SnapshotArgs),
    /// Numerical hygiene checks.
    Validate {
        #[arg(long, default_value_t = 1.8)]
        p0: f64,
        #[arg(long, default_value_t = 2.1)]
        t: f64,
    },
}

fn parse_window(s: &str, base: &PhaseSpaceWindow<f64>) -> Result<PhaseSpaceWindow<f64>, Error> {
    let v: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::InvalidConfig(format!("window {s:?}: expected x_lo,x_hi,p_lo,p_hi[,nx,np]"));
    if v.len() != 4 && v.len() != 6 {
        return Err(bad());
    }
    let f = |i: usize| v[i].parse::<f64>().map_err(|_| bad());
    let (nx, np) = if v.len() == 6 {
        (v[4].parse().map_err(|_| bad())?, v[5].parse().map_err(|_| bad())?)
    } else {
        (base.nx, base.np)
    };
    PhaseSpaceWindow::new(f(0)?, f(1)?, f(2)?, f(3)?, nx, np)
}

fn build_spec(c: &Common) -> Result<RunSpec, Error> {
    let file = c
        .config
        .as_deref()
        .map(|p| ConfigFile::load(p).map_err(|e| Error::InvalidConfig(format!("config {}: {e}", p.display()))))
        .transpose()?;
    let name = file.as_ref().and_then(|f| f.preset.clone()).unwrap_or_else(|| c.preset.clone());
    let mut spec = preset(&name)?;
    if let Some(f) = &file {
        spec = spec.apply(f)?;
    }
    if let Some(n) = c.order {
        spec.cfg = spec.cfg.with_trunc_order(n);
    }
    if let Some(w) = &c.window {
        spec.window = parse_window(w, &spec.window)?;
    }
    Ok(spec)
}

fn header(spec: &RunSpec, extra: &str) -> Header {
    Header::new(spec.hash_with(extra)).with("preset", &spec.preset)
}

fn tag(t: f64) -> String {
    format!("t{t:.3}")
}

fn write_snapshot_files(dir: &Path, spec: &RunSpec, a: &SnapshotArgs, s: &Snapshot, verb: &str) -> anyhow::Result<()> {
    let p0 = a.p0;
    let extra = format!("p0={p0:?} stability={}", !a.no_stability);
    let h = header(spec, &extra).with("p0", num(p0)).with("time", num(s.time));
    let t = tag(s.time);
    let full = verb == "snapshot";
    if full {
        io::write_wavefunction(&dir.join(format!("psi_{t}.csv")), &h, &s.psi)?;
        io::write_husimi(&dir.join(format!("husimi_{t}.csv")), &h, &s.husimi)?;
    }
    if full || verb == "zeros" {
        io::write_zeros(&dir.join(format!("zeros_{t}.csv")), &h, &s.zeros.zeros)?;
    }
    if let (true, Some(c)) = (full || verb == "current", &s.current) {
        io::write_current(&dir.join(format!("current_{t}.csv")), &h.clone().with("order", c.trunc_order), c)?;
    }
    if let (true, Some(rep), Some(pairing)) = (full || verb == "topology", &s.stagnation, &s.pairing) {
        let h = h.clone().with("anomalies", rep.anomalies.len()).with("unconverged", rep.unconverged.len());
        io::write_stagnation(&dir.join(format!("stagnation_{t}.csv")), &h, &rep.points, pairing)?;
        for a in &rep.anomalies {
            log::warn!("t = {}: anomaly at z = {}: {}", s.time, a.z, a.reason);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let spec = build_spec(&cli.common)?;
    let out = &cli.common.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match cli.verb {
        Verb::Sweep { p0 } => {
            let momenta = if p0.is_empty() { default_momenta() } else { p0 };
            let classical = TransmissionOptions::for_config(&spec.cfg);
            let result = run_transmission_sweep(&momenta, &spec, &QuantumRunOptions::default(), &classical);
            let extra = format!("sweep={momenta:?}");
            let mut first_err = None;
            let rows: Vec<Vec<String>> = result
                .rows
                .iter()
                .map(|(p, r)| match r {
                    Ok(r) => vec![
                        num(r.p0), num(r.t_q), num(r.t_c), num(r.r_q), num(r.r_c), num(r.d_t), num(r.d_r),
                        num(r.t_c_energy), num(r.t_final), num(r.norm_drift), "ok".into(),
                    ],
                    Err(e) => {
                        if first_err.is_none() {
                            first_err = Some((e.is_physics_failure(), format!("p0 = {p}: {e}")));
                        }
                        let mut row = vec![num(*p)];
                        row.extend(std::iter::repeat_n(String::new(), 9));
                        row.push(format!("\"{e}\""));
                        row
                    }
                })
                .collect();
            io::write_table(
                &out.join("sweep.csv"),
                &header(&spec, &extra),
                &["p0", "t_q", "t_c", "r_q", "r_c", "d_t", "d_r", "t_c_energy", "t_final", "norm_drift", "status"],
                rows,
            )?;
            if let Some((physics, msg)) = first_err {
                return Err(anyhow::Error::new(RowFailed { physics, msg }));
            }
        }
        Verb::Validate { p0, t } => {
            let checks = validate(&spec, p0, t)?;
            let rows = checks.iter().map(|c| vec![c.name.to_string(), num(c.value), num(c.limit), c.pass.to_string()]);
            io::write_table(&out.join("validate.csv"), &header(&spec, &format!("validate p0={p0:?} t={t:?}")), &["check", "value", "limit", "pass"], rows)?;
            let mut failed = false;
            for c in &checks {
                println!("{} {}: {:.3e} (limit {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
                failed |= !c.pass;
            }
            if failed {
                return Err(anyhow::Error::new(CheckFailed));
            }
        }
        verb => {
            let (name, a) = match verb {
                Verb::Snapshot(a) => ("snapshot", a),
                Verb::Zeros(a) => ("zeros", a),
                Verb::Current(a) => ("current", a),
                Verb::Topology(a) => ("topology", a),
                _ => unreachable!(),
            };
            let opts = SnapshotOptions {
                check_stability: !a.no_stability,
                keep_components: name == "current" || name == "snapshot",
                zeros_only: name == "zeros",
                ..SnapshotOptions::default()
            };
            let snaps = run_snapshot_pipeline(&spec, a.p0, &a.times, &opts)?;
            for s in &snaps {
                info!("t = {}: {} zeros", s.time, s.zeros.zeros.len());
                write_snapshot_files(out, &spec, &a, s, name)?;
            }
            if name == "snapshot" {
                let h = header(&spec, "separatrix");
                let v0 = spec.cfg.v0();
                let mut rows = Vec::new();
                for level in [0.5 * v0, v0, 1.5 * v0] {
                    for (x, p) in energy_contour(&spec.cfg, level, &spec.window, 2001) {
                        rows.push(vec![num(level), num(x), num(p)]);
                    }
                }
                io::write_table(&out.join("contours.csv"), &h, &["level", "x", "p"], rows)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
#[error("validation checks failed")]
struct CheckFailed;

#[derive(Debug, thiserror::Error)]
#[error("sweep row failed: {msg}")]
struct RowFailed {
    physics: bool,
    msg: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CheckFailed>().is_some() {
        return EXIT_PHYSICS;
    }
    if let Some(r) = err.downcast_ref::<RowFailed>() {
        return if r.physics { EXIT_PHYSICS } else { EXIT_USAGE };
    }
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_physics_failure() => EXIT_PHYSICS,
        Some(Error::Io(_)) => 1,
        Some(_) => EXIT_USAGE,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
