//! Config files, config hashing and columnar text output.
//!
//! Every CSV starts with `#` comment lines carrying the crate version, the
//! config hash and any run metadata, followed by a header row. Floats are
//! written in Rust's shortest round-trip form, so the same config produces
//! byte-identical files and every value parses back bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::husimi::{HusimiField, HusimiZero, PhaseSpaceWindow, Stability};
use crate::phase_space::{GridSpec, PhaseSpaceConfig, Physics, Potential};
use crate::propagator::WavefunctionGrid;
use crate::topology::{DipolePairing, StagnationPoint};

/// Everything that determines a run: physics, grids, Husimi window, launch point.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub preset: String,
    pub cfg: PhaseSpaceConfig<f64>,
    pub window: PhaseSpaceWindow<f64>,
    pub x0: f64,
}

impl RunSpec {
    /// Canonical `key = value` text; the hash is taken over this.
    pub fn canonical(&self) -> String {
        let c = &self.cfg;
        let w = &self.window;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("physics.hbar", format!("{:?}", c.hbar()));
        kv("physics.mass", format!("{:?}", c.mass()));
        kv("physics.omega", format!("{:?}", c.omega()));
        kv("physics.v0", format!("{:?}", c.v0()));
        kv("physics.k", format!("{:?}", c.k()));
        kv("physics.potential", potential_name(c.potential()).to_string());
        kv("grid.x_min", format!("{:?}", c.x_min()));
        kv("grid.x_max", format!("{:?}", c.x_max()));
        kv("grid.dx", format!("{:?}", c.dx()));
        kv("grid.dt", format!("{:?}", c.dt()));
        kv("grid.boundary_floor", format!("{:?}", c.boundary_floor()));
        kv("window.x_lo", format!("{:?}", w.x_lo));
        kv("window.x_hi", format!("{:?}", w.x_hi));
        kv("window.p_lo", format!("{:?}", w.p_lo));
        kv("window.p_hi", format!("{:?}", w.p_hi));
        kv("window.nx", w.nx.to_string());
        kv("window.np", w.np.to_string());
        kv("run.x0", format!("{:?}", self.x0));
        kv("run.trunc_order", c.trunc_order().to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunSpec::canonical`] plus `extra`.
    pub fn hash_with(&self, extra: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        h.update(extra.as_bytes());
        h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn hash(&self) -> String {
        self.hash_with("")
    }

    /// Applies a parsed config file on top of this spec.
    pub fn apply(&self, file: &ConfigFile) -> Result<Self> {
        let mut phys = *self.cfg.physics();
        if let Some(p) = &file.physics {
            phys = Physics {
                hbar: p.hbar.unwrap_or(phys.hbar),
                mass: p.mass.unwrap_or(phys.mass),
                omega: p.omega.unwrap_or(phys.omega),
                v0: p.v0.unwrap_or(phys.v0),
                k: p.k.unwrap_or(phys.k),
                potential: p.potential.unwrap_or(phys.potential),
            };
        }
        let mut grid = *self.cfg.grid();
        if let Some(g) = &file.grid {
            grid = GridSpec {
                x_min: g.x_min.unwrap_or(grid.x_min),
                x_max: g.x_max.unwrap_or(grid.x_max),
                dx: g.dx.unwrap_or(grid.dx),
                dt: g.dt.unwrap_or(grid.dt),
            };
        }
        let order = file.run.as_ref().and_then(|r| r.trunc_order).unwrap_or(self.cfg.trunc_order());
        let mut cfg = PhaseSpaceConfig::new(phys, grid, order)?;
        if let Some(f) = file.grid.as_ref().and_then(|g| g.boundary_floor) {
            cfg = cfg.with_boundary_floor(f)?;
        }
        let w = self.window;
        let window = match &file.window {
            Some(fw) => PhaseSpaceWindow::new(
                fw.x_lo.unwrap_or(w.x_lo),
                fw.x_hi.unwrap_or(w.x_hi),
                fw.p_lo.unwrap_or(w.p_lo),
                fw.p_hi.unwrap_or(w.p_hi),
                fw.nx.unwrap_or(w.nx),
                fw.np.unwrap_or(w.np),
            )?,
            None => w,
        };
        let x0 = file.run.as_ref().and_then(|r| r.x0).unwrap_or(self.x0);
        Ok(Self { preset: self.preset.clone(), cfg, window, x0 })
    }
}

fn potential_name(p: Potential) -> &'static str {
    match p {
        Potential::Free => "free",
        Potential::GaussianBarrier => "gaussian-barrier",
        Potential::Harmonic => "harmonic",
    }
}

/// On-disk config. Every key is optional and overrides the chosen preset.
///
/// ```toml
/// preset = "desk"            # "paper" or "desk"
///
/// [physics]
/// hbar = 0.01
/// mass = 1.0
/// omega = 1.0
/// v0 = 2.0
/// k = 3.0
/// potential = "gaussian-barrier"   # or "harmonic", "free"
///
/// [grid]
/// x_min = -10.0
/// x_max = 10.0
/// dx = 0.01
/// dt = 0.01
/// boundary_floor = 1e-12
///
/// [window]
/// x_lo = -3.0
/// x_hi = 3.0
/// p_lo = -3.0
/// p_hi = 3.0
/// nx = 200
/// np = 200
///
/// [run]
/// x0 = -4.0
/// trunc_order = 6
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub physics: Option<PhysicsFile>,
    pub grid: Option<GridFile>,
    pub window: Option<WindowFile>,
    pub run: Option<RunFile>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsFile {
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub omega: Option<f64>,
    pub v0: Option<f64>,
    pub k: Option<f64>,
    pub potential: Option<Potential>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub boundary_floor: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowFile {
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub p_lo: Option<f64>,
    pub p_hi: Option<f64>,
    pub nx: Option<usize>,
    pub np: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub x0: Option<f64>,
    pub trunc_order: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Comment lines opening every output file.
#[derive(Clone, Debug, Default)]
pub struct Header {
    pub hash: String,
    pub meta: Vec<(String, String)>,
}

impl Header {
    pub fn new(hash: impl Into<String>) -> Self {
        Self { hash: hash.into(), meta: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    fn write(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "# husimi-flow {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# config-hash: {}", self.hash)?;
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// Writes a header, a column row and the rows produced by `rows`.
pub fn write_table(
    path: &Path,
    header: &Header,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    header.write(&mut out)?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Node-wise export of a Husimi field: `x, p, Q, re_amp, im_amp`.
pub fn write_husimi(path: &Path, header: &Header, field: &HusimiField<f64>) -> Result<()> {
    let w = field.window;
    write_table(
        path,
        header,
        &["x", "p", "q", "re_amp", "im_amp"],
        (0..w.len()).map(|idx| {
            let (i, j) = w.coords(idx);
            let a = field.amplitude[idx];
            vec![num(w.x(i)), num(w.p(j)), num(field.density[idx]), num(a.re), num(a.im)]
        }),
    )
}

/// `x, p, re_j, im_j, abs_j` plus `re_j{n}, im_j{n}` per order component.
pub fn write_current(
    path: &Path,
    header: &Header,
    current: &crate::current::CurrentField<f64>,
) -> Result<()> {
    let w = current.window;
    let mut cols: Vec<String> = ["x", "p", "re_j", "im_j", "abs_j"].iter().map(|s| s.to_string()).collect();
    if let Some(c) = &current.components {
        for n in 0..c.len() {
            cols.push(format!("re_j{n}"));
            cols.push(format!("im_j{n}"));
        }
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_table(
        path,
        header,
        &col_refs,
        (0..w.len()).map(|idx| {
            let (i, j) = w.coords(idx);
            let v = current.current[idx];
            let mut row = vec![num(w.x(i)), num(w.p(j)), num(v.re), num(v.im), num(v.norm())];
            if let Some(c) = &current.components {
                for comp in c {
                    row.push(num(comp[idx].re));
                    row.push(num(comp[idx].im));
                }
            }
            row
        }),
    )
}

pub fn stability_label(s: Stability) -> &'static str {
    match s {
        Stability::Unchecked => "unchecked",
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
    }
}

pub fn write_zeros(path: &Path, header: &Header, zeros: &[HusimiZero<f64>]) -> Result<()> {
    write_table(
        path,
        header,
        &["id", "x", "p", "residual", "iterations", "stability"],
        zeros.iter().enumerate().map(|(id, z)| {
            vec![
                id.to_string(),
                num(z.x),
                num(z.p),
                num(z.residual),
                z.iterations.to_string(),
                stability_label(z.stability).to_string(),
            ]
        }),
    )
}

pub fn write_stagnation(
    path: &Path,
    header: &Header,
    points: &[StagnationPoint<f64>],
    pairing: &DipolePairing<f64>,
) -> Result<()> {
    write_table(
        path,
        header,
        &["id", "x", "p", "kind", "class", "re_l1", "im_l1", "re_l2", "im_l2", "index", "residual", "partner"],
        points.iter().map(|pt| {
            let ev = pt.eigenvalues;
            vec![
                pt.id.to_string(),
                num(pt.x),
                num(pt.p),
                pt.kind.label().to_string(),
                pt.classification.map(|c| c.label()).unwrap_or("degenerate").to_string(),
                num(ev[0].re),
                num(ev[0].im),
                num(ev[1].re),
                num(ev[1].im),
                pt.index.to_string(),
                num(pt.residual),
                pairing.partner_of(pt.id).map(|i| i.to_string()).unwrap_or_else(|| "-".into()),
            ]
        }),
    )
}

pub fn write_trajectories(
    path: &Path,
    header: &Header,
    bundle: &[crate::classical::Trajectory<f64>],
) -> Result<()> {
    write_table(
        path,
        header,
        &["id", "t", "x", "p"],
        bundle.iter().enumerate().flat_map(|(id, tr)| {
            tr.samples.iter().map(move |&(t, x, p)| vec![id.to_string(), num(t), num(x), num(p)])
        }),
    )
}

/// Writes `x, re, im` rows; reloads bit-exactly with [`read_wavefunction`].
pub fn write_wavefunction(path: &Path, header: &Header, psi: &WavefunctionGrid<f64>) -> Result<()> {
    let header = header
        .clone()
        .with("time", num(psi.time))
        .with("x_min", num(psi.x_min))
        .with("dx", num(psi.dx));
    write_table(
        path,
        &header,
        &["x", "re_psi", "im_psi"],
        psi.samples
            .iter()
            .enumerate()
            .map(|(i, s)| vec![num(psi.x(i)), num(s.re), num(s.im)]),
    )
}

/// Reads a dump written by [`write_wavefunction`]; returns it with its config hash.
pub fn read_wavefunction(path: &Path) -> Result<(WavefunctionGrid<f64>, String)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let (mut hash, mut time, mut x_min, mut dx) = (None, None, None, None);
    let mut samples = Vec::new();
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    let mut saw_columns = false;
    for line in reader.lines() {
        let line = line?;
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some((k, v)) = meta.split_once(": ") {
                match k {
                    "config-hash" => hash = Some(v.to_string()),
                    "time" => time = Some(parse(v)?),
                    "x_min" => x_min = Some(parse(v)?),
                    "dx" => dx = Some(parse(v)?),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_columns {
            saw_columns = true;
            continue;
        }
        let mut it = line.split(',');
        let (_, re, im) = match (it.next(), it.next(), it.next()) {
            (Some(x), Some(re), Some(im)) => (x, re, im),
            _ => return Err(Error::Parse(format!("bad row {line:?}"))),
        };
        samples.push(Complex::new(parse(re)?, parse(im)?));
    }
    let missing = |k: &str| Error::Parse(format!("missing header field {k}"));
    Ok((
        WavefunctionGrid {
            x_min: x_min.ok_or_else(|| missing("x_min"))?,
            dx: dx.ok_or_else(|| missing("dx"))?,
            samples,
            time: time.ok_or_else(|| missing("time"))?,
        },
        hash.ok_or_else(|| missing("config-hash"))?,
    ))
}
