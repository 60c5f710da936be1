//! Experiment execution and output files.

use std::path::{Path, PathBuf};

use nanodimer::bloch::DriveParams;
use nanodimer::materials::clausius_mossotti;
use nanodimer::sweep::{
    bistable_interval, branch_diagram, default_search_range, hysteresis_run, linspace, phase_map, Axis,
    BistableInterval, CellOutcome, SweepOptions, SweepProtocol,
};
use nanodimer::{Complex64, CouplingParams, DielectricTable};

use crate::config::{Experiment, MaterialSource, MaterialSpec, RunConfig};
use crate::output::{fmt_num, fmt_opt, io_err, provenance, write_csv};
use crate::plot::{emit_plot_script, Figure};
use crate::CliError;

/// Auto upper amplitude is this multiple of the upper fold.
const AUTO_MAX_OVER_FOLD: f64 = 1.2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable `name: value` lines.
    pub summary: Vec<String>,
}

pub fn load_material(spec: &MaterialSpec) -> Result<DielectricTable, CliError> {
    match &spec.source {
        MaterialSource::BuiltinGold => Ok(DielectricTable::gold()),
        MaterialSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            Ok(DielectricTable::parse(&text, spec.format, path.display().to_string())?)
        }
    }
}

struct Context<'a> {
    config: &'a RunConfig,
    out_dir: &'a Path,
    header: String,
    table: DielectricTable,
    report: RunReport,
}

impl Context<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        let header: Vec<String> = header.iter().map(|h| h.to_string()).collect();
        let path = write_csv(&self.out_dir.join(name), &self.header, &header, rows)?;
        self.report.files.push(path);
        Ok(())
    }

    fn plot(&mut self, figure: Figure) -> Result<(), CliError> {
        let path = emit_plot_script(figure, self.out_dir)?;
        self.report.files.push(path);
        Ok(())
    }

    fn note(&mut self, name: &str, value: String) {
        self.report.summary.push(format!("{name}: {value}"));
    }

    fn coupling(&self) -> Result<(CouplingParams, DriveParams), CliError> {
        let system = &self.config.system;
        let coupling = system.coupling(&self.table)?;
        Ok((coupling, coupling.drive(system, Complex64::new(1.0, 0.0))))
    }

    fn window(&self, template: &DriveParams) -> Result<(Option<BistableInterval>, (f64, f64)), CliError> {
        let spec = &self.config.region;
        let range = (spec.search_min, spec.search_max.unwrap_or(default_search_range(template).1));
        Ok((bistable_interval(template, range, spec.tol)?, range))
    }

    /// `1.2 × Ω_high` when bistable, else the default search bound.
    fn auto_max(&self, template: &DriveParams) -> Result<f64, CliError> {
        Ok(match self.window(template)?.0 {
            Some(w) => AUTO_MAX_OVER_FOLD * w.high,
            None => default_search_range(template).1,
        })
    }
}

/// Runs the configured experiment, writing CSV files and plot scripts into
/// `out_dir` (created if missing).
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let table = load_material(&config.material)?;
    let header = provenance(config, table.source_label());
    let mut ctx = Context { config, out_dir, header, table, report: RunReport::default() };
    match config.experiment {
        Experiment::Steady => steady(&mut ctx)?,
        Experiment::Region => region(&mut ctx)?,
        Experiment::Sweep => sweep(&mut ctx)?,
        Experiment::Phase => phase(&mut ctx)?,
        Experiment::Material => material(&mut ctx)?,
    }
    Ok(ctx.report)
}

fn steady(ctx: &mut Context) -> Result<(), CliError> {
    let (_, template) = ctx.coupling()?;
    let spec = &ctx.config.steady;
    let max = match spec.omega0_max {
        Some(v) => v,
        None => ctx.auto_max(&template)?,
    };
    let rows = branch_diagram(&template, &linspace(spec.omega0_min, max, spec.points))?;

    let mut header = vec!["omega0_abs".to_string(), "n_roots".to_string()];
    for i in 1..=3 {
        for col in ["Z", "R_re", "R_im", "R_abs", "stable"] {
            header.push(format!("{col}_{i}"));
        }
    }
    let records = rows
        .iter()
        .map(|row| {
            let mut rec = vec![fmt_num(row.omega0_abs), row.points.len().to_string()];
            for i in 0..3 {
                match row.points.get(i) {
                    Some(b) => rec.extend([
                        fmt_num(b.z),
                        fmt_num(b.r.re),
                        fmt_num(b.r.im),
                        fmt_num(b.r.norm()),
                        u8::from(b.stable).to_string(),
                    ]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 5)),
                }
            }
            rec
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.csv("branch.csv", &header_refs, records)?;
    let three = rows.iter().filter(|r| r.points.len() == 3).count();
    ctx.note("rows", rows.len().to_string());
    ctx.note("three-root rows", three.to_string());
    region(ctx)?;
    ctx.plot(Figure::Branch)
}

fn region(ctx: &mut Context) -> Result<(), CliError> {
    let (coupling, template) = ctx.coupling()?;
    let alpha = ctx.config.system.alpha(&ctx.table)?;
    let (window, range) = ctx.window(&template)?;
    let rows = vec![
        ("bistable", window.is_some().to_string()),
        ("omega_low", fmt_opt(window.map(|w| w.low))),
        ("omega_high", fmt_opt(window.map(|w| w.high))),
        ("width", fmt_opt(window.map(|w| w.width()))),
        ("search_min", fmt_num(range.0)),
        ("search_max", fmt_num(range.1)),
        ("tol", fmt_num(ctx.config.region.tol)),
        ("alpha_re", fmt_num(alpha.re)),
        ("alpha_im", fmt_num(alpha.im)),
        ("eps_s_prime", fmt_num(coupling.eps_s_prime)),
        ("enhancement_re", fmt_num(coupling.enhancement.re)),
        ("enhancement_im", fmt_num(coupling.enhancement.im)),
        ("G_re", fmt_num(coupling.self_action.re)),
        ("G_im", fmt_num(coupling.self_action.im)),
    ];
    ctx.note(
        "bistable interval",
        match window {
            Some(w) => format!("[{}, {}] ns^-1", w.low, w.high),
            None => "none".into(),
        },
    );
    ctx.note("G", format!("{} ns^-1", coupling.self_action));
    let records = rows.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
    ctx.csv("region.csv", &["quantity", "value"], records)
}

fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let (_, template) = ctx.coupling()?;
    let spec = ctx.config.sweep.clone();
    let max = match spec.omega0_max {
        Some(v) => v,
        None => ctx.auto_max(&template)?,
    };
    let rate = spec
        .ramp_rate
        .unwrap_or((max - spec.omega0_min) * template.gamma.min(template.dephasing) / spec.leg_relaxations);
    let protocol = SweepProtocol::new(spec.omega0_min, max, rate, spec.phase_rad)?;
    let opts = SweepOptions {
        rel_tol: spec.rel_tol,
        abs_tol: spec.abs_tol,
        sample_stride: spec.stride_ns,
        jump_threshold: spec.jump_threshold,
    };
    let result = hysteresis_run(&template, &protocol, &opts)?;
    let (window, _) = ctx.window(&template)?;

    let records = result
        .samples
        .iter()
        .map(|(leg, s)| {
            vec![
                fmt_num(s.t),
                leg.to_string(),
                fmt_num(s.omega0.norm()),
                fmt_num(s.state.z),
                fmt_num(s.state.r.re),
                fmt_num(s.state.r.im),
                fmt_num(s.state.r.norm()),
            ]
        })
        .collect();
    ctx.csv("hysteresis.csv", &["t_ns", "leg", "omega0_abs", "Z", "R_re", "R_im", "R_abs"], records)?;

    let summary = vec![
        ("threshold_up", fmt_opt(result.threshold_up)),
        ("threshold_down", fmt_opt(result.threshold_down)),
        ("loop_area", fmt_num(result.loop_area)),
        ("area_scale", fmt_num(result.area_scale())),
        ("fold_low", fmt_opt(window.map(|w| w.low))),
        ("fold_high", fmt_opt(window.map(|w| w.high))),
        ("omega0_min", fmt_num(protocol.omega0_min)),
        ("omega0_max", fmt_num(protocol.omega0_max)),
        ("ramp_rate", fmt_num(protocol.ramp_rate)),
        ("leg_duration_ns", fmt_num(protocol.leg_duration())),
    ];
    for key in ["threshold_up", "threshold_down", "loop_area"] {
        let value = summary.iter().find(|(k, _)| *k == key).map(|(_, v)| v.clone()).unwrap_or_default();
        ctx.note(key, value);
    }
    let records = summary.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
    ctx.csv("thresholds.csv", &["quantity", "value"], records)?;
    ctx.plot(Figure::Hysteresis)?;
    ctx.plot(Figure::Polarization)
}

fn phase(ctx: &mut Context) -> Result<(), CliError> {
    let spec = ctx.config.phase.clone();
    let axis1 = Axis { parameter: spec.axis1.parameter, values: spec.axis1.values() };
    let axis2 = Axis { parameter: spec.axis2.parameter, values: spec.axis2.values() };
    let map = phase_map(&ctx.config.system, &ctx.table, axis1, axis2)?;
    let mut records = Vec::new();
    let mut counts = [0usize; 3];
    for (i, v1) in map.axis1.values.iter().enumerate() {
        for (j, v2) in map.axis2.values.iter().enumerate() {
            let (outcome, low, high, message) = match &map.cells[i][j] {
                CellOutcome::Monostable => ("monostable", None, None, String::new()),
                CellOutcome::Bistable(w) => ("bistable", Some(w.low), Some(w.high), String::new()),
                CellOutcome::Failed(m) => ("failed", None, None, m.clone()),
            };
            counts[match outcome {
                "monostable" => 0,
                "bistable" => 1,
                _ => 2,
            }] += 1;
            records.push(vec![fmt_num(*v1), fmt_num(*v2), outcome.into(), fmt_opt(low), fmt_opt(high), message]);
        }
    }
    let k1 = map.axis1.parameter.key();
    let k2 = map.axis2.parameter.key();
    ctx.csv("phase.csv", &[k1, k2, "outcome", "omega_low", "omega_high", "message"], records)?;
    ctx.note("cells", format!("{} monostable, {} bistable, {} failed", counts[0], counts[1], counts[2]));
    ctx.plot(Figure::Phase)
}

fn material(ctx: &mut Context) -> Result<(), CliError> {
    let spec = ctx.config.inspect.clone();
    let (lo, hi) = ctx.table.span();
    let energies = linspace(spec.energy_min.unwrap_or(lo), spec.energy_max.unwrap_or(hi), spec.points);
    let eps_b = ctx.config.system.eps_b;
    let mut records = Vec::with_capacity(energies.len());
    for e in energies {
        let eps = ctx.table.permittivity_at(e)?;
        let alpha = clausius_mossotti(eps, eps_b)?;
        records.push(vec![fmt_num(e), fmt_num(eps.re), fmt_num(eps.im), fmt_num(alpha.re), fmt_num(alpha.im)]);
    }
    let at = ctx.config.system.transition_energy_ev;
    if let Ok(eps) = ctx.table.permittivity_at(at) {
        ctx.note(&format!("eps({at} eV)"), eps.to_string());
    }
    ctx.csv("material.csv", &["energy_ev", "eps_re", "eps_im", "alpha_re", "alpha_im"], records)
}
