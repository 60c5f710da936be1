//! Generated matplotlib scripts for the standard figures.
//!
//! Each script reads the CSV files sitting next to it and saves a PNG of the
//! same name. Column names are checked before anything is written.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::output::{io_err, read_csv};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    /// `Z` of every stationary branch versus `|Ω₀|`, bistable window shaded.
    Branch,
    /// `Z` along the up and down legs of a sweep.
    Hysteresis,
    /// `|R|` along the up and down legs of a sweep.
    Polarization,
    /// Mono/bistable classification over two parameters.
    Phase,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Branch => "branch",
            Figure::Hysteresis => "hysteresis",
            Figure::Polarization => "polarization",
            Figure::Phase => "phase",
        }
    }

    /// Data file the figure is drawn from and the columns it needs.
    pub fn requirements(self) -> (&'static str, &'static [&'static str]) {
        match self {
            Figure::Branch => {
                ("branch.csv", &["omega0_abs", "n_roots", "Z_1", "Z_2", "Z_3", "stable_1", "stable_2", "stable_3"])
            }
            Figure::Hysteresis => ("hysteresis.csv", &["leg", "omega0_abs", "Z"]),
            Figure::Polarization => ("hysteresis.csv", &["leg", "omega0_abs", "R_abs"]),
            Figure::Phase => ("phase.csv", &["outcome"]),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fails with a schema error naming the first column of `required` absent
/// from `header`.
pub fn check_columns(file: &Path, header: &[String], required: &[&str]) -> Result<(), CliError> {
    match required.iter().find(|c| !header.iter().any(|h| h == *c)) {
        Some(missing) => Err(CliError::Schema { file: file.to_path_buf(), column: missing.to_string() }),
        None => Ok(()),
    }
}

const PRELUDE: &str = r##"import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def load(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    header, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(header)}


def num(values):
    return [float(v) if v not in ("", "none") else math.nan for v in values]


def broken(values, jump=0.1):
    """Inserts gaps where consecutive values jump, so branches are not joined."""
    out = list(values)
    for i in range(1, len(out)):
        if abs(values[i] - values[i - 1]) > jump:
            out[i] = math.nan
    return out

"##;

fn region_bounds(dir: &Path) -> Result<Option<(f64, f64)>, CliError> {
    let path = dir.join("region.csv");
    if !path.exists() {
        return Ok(None);
    }
    let (header, rows) = read_csv(&path)?;
    check_columns(&path, &header, &["quantity", "value"])?;
    let get = |key: &str| {
        rows.iter()
            .find(|r| r.first().map(String::as_str) == Some(key))
            .and_then(|r| r.get(1))
            .and_then(|v| v.parse::<f64>().ok())
    };
    Ok(get("omega_low").zip(get("omega_high")))
}

fn branch_script(dir: &Path) -> Result<String, CliError> {
    let shade = match region_bounds(dir)? {
        Some((lo, hi)) => format!("OMEGA_LOW, OMEGA_HIGH = {lo:?}, {hi:?}\n"),
        None => "OMEGA_LOW = OMEGA_HIGH = None\n".to_string(),
    };
    Ok(format!(
        r##"{PRELUDE}{shade}
d = load("branch.csv")
omega = num(d["omega0_abs"])
fig, ax = plt.subplots(figsize=(6, 4))
if OMEGA_LOW is not None:
    ax.axvspan(OMEGA_LOW, OMEGA_HIGH, color="0.9", label="bistable")
for i in (1, 2, 3):
    z = num(d[f"Z_{{i}}"])
    stable = num(d[f"stable_{{i}}"])
    solid = [zi if s == 1 else math.nan for zi, s in zip(z, stable)]
    dashed = [zi if s == 0 else math.nan for zi, s in zip(z, stable)]
    ax.plot(omega, broken(solid), "k-", lw=1.2)
    ax.plot(omega, broken(dashed), "k--", lw=1.0)
ax.set_xlabel(r"$|\Omega_0|$ (ns$^{{-1}}$)")
ax.set_ylabel("Z")
fig.tight_layout()
fig.savefig(HERE / "branch.png", dpi=150)
"##
    ))
}

fn sweep_script(column: &str, label: &str, png: &str) -> String {
    format!(
        r##"{PRELUDE}
d = load("hysteresis.csv")
fig, ax = plt.subplots(figsize=(6, 4))
for leg, style in (("up", "C0-"), ("down", "C3-")):
    idx = [i for i, l in enumerate(d["leg"]) if l == leg]
    omega = num([d["omega0_abs"][i] for i in idx])
    y = num([d["{column}"][i] for i in idx])
    ax.plot(omega, y, style, lw=1.2, label=leg)
ax.set_xlabel(r"$|\Omega_0|$ (ns$^{{-1}}$)")
ax.set_ylabel(r"{label}")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "{png}", dpi=150)
"##
    )
}

fn phase_script(x: &str, y: &str) -> String {
    format!(
        r##"{PRELUDE}
d = load("phase.csv")
code = {{"monostable": 0, "bistable": 1, "failed": 2}}
xs = sorted(set(num(d["{x}"])))
ys = sorted(set(num(d["{y}"])))
grid = [[math.nan] * len(xs) for _ in ys]
for xv, yv, o in zip(num(d["{x}"]), num(d["{y}"]), d["outcome"]):
    grid[ys.index(yv)][xs.index(xv)] = code[o]
fig, ax = plt.subplots(figsize=(6, 4))
mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis", vmin=0, vmax=2)
cbar = fig.colorbar(mesh, ax=ax, ticks=[0, 1, 2])
cbar.ax.set_yticklabels(["monostable", "bistable", "failed"])
ax.set_xlabel("{x}")
ax.set_ylabel("{y}")
fig.tight_layout()
fig.savefig(HERE / "phase.png", dpi=150)
"##
    )
}

/// Writes `plot_<figure>.py` into `dir` after checking the data file there.
pub fn emit_plot_script(figure: Figure, dir: &Path) -> Result<PathBuf, CliError> {
    let (file, required) = figure.requirements();
    let data = dir.join(file);
    let (header, _) = read_csv(&data)?;
    check_columns(&data, &header, required)?;
    let script = match figure {
        Figure::Branch => branch_script(dir)?,
        Figure::Hysteresis => sweep_script("Z", "Z", "hysteresis.png"),
        Figure::Polarization => sweep_script("R_abs", "$|R|$", "polarization.png"),
        Figure::Phase => {
            let axes: Vec<&String> = header.iter().filter(|h| *h != "outcome").take(2).collect();
            if header.len() < 3 || axes.len() < 2 || header[2] != "outcome" {
                return Err(CliError::Schema { file: data, column: "<axis>".into() });
            }
            phase_script(axes[0], axes[1])
        }
    };
    let path = dir.join(format!("plot_{}.py", figure.name()));
    std::fs::write(&path, script).map_err(io_err(&path))?;
    Ok(path)
}
