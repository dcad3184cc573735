use rayon::prelude::*;
use threshold_diffusion::validation::{run_criterion, CRITERIA};
use threshold_diffusion::{
    one_sided_down, one_sided_up, potential_density, simulate_paths, stationary_density,
    transition_density, two_sided_exit, value_function, ControlProblem, DiffusionParams, ExitQuery,
    QuadSettings, Scheme, SimConfig, ValidationOptions, ValidationReport,
};

use crate::config::Layer;
use crate::error::CliError;
use crate::output::{json_number, Block, Format, Sink, Table};
use crate::{
    Command, DensityArgs, DiffusionArgs, ExitArgs, PotentialArgs, QuadArgs, SimulateArgs,
    StationaryArgs, ValidateArgs, ValueArgs,
};

/// Runs one command and returns the process exit code.
pub fn dispatch(command: Command, layer: &Layer, format: Format, sink: &mut Sink) -> Result<u8, CliError> {
    let table = match command {
        Command::Density(args) => density(&args, layer)?,
        Command::Potential(args) => potential(&args, layer)?,
        Command::Stationary(args) => stationary(&args, layer)?,
        Command::Value(args) => value(&args, layer)?,
        Command::ExitLt(args) => exit_lt(&args, layer)?,
        Command::Simulate(args) => return simulate(&args, layer, format, sink),
        Command::Validate(args) => return validate(&args, layer, sink),
    };
    sink.write_with(|out| table.write(format, out))?;
    Ok(0)
}

fn diffusion(args: &DiffusionArgs, l: &Layer) -> Result<DiffusionParams, CliError> {
    Ok(DiffusionParams::new(
        l.f64(args.mu1, "mu1")?,
        l.f64(args.mu2, "mu2")?,
        l.f64(args.sigma1, "sigma1")?,
        l.f64(args.sigma2, "sigma2")?,
        l.f64(args.a, "a")?,
    )?)
}

fn quad(args: &QuadArgs, l: &Layer) -> Result<QuadSettings, CliError> {
    let d = QuadSettings::default();
    let settings = QuadSettings {
        abs_tol: l.opt_f64(args.abs_tol, "abs-tol")?.unwrap_or(d.abs_tol),
        rel_tol: l.opt_f64(args.rel_tol, "rel-tol")?.unwrap_or(d.rel_tol),
        max_subdivisions: l
            .opt_u64(args.max_subdivisions, "max-subdivisions")?
            .map_or(d.max_subdivisions, |n| n as usize),
        truncation_epsilon: l
            .opt_f64(args.truncation_epsilon, "truncation-epsilon")?
            .unwrap_or(d.truncation_epsilon),
    };
    settings.validate()?;
    Ok(settings)
}

fn horizon(flag: Option<f64>, l: &Layer) -> Result<f64, CliError> {
    match l.opt_f64(flag, "T")? {
        Some(t) => Ok(t),
        None => l.f64(None, "horizon").map_err(|_| CliError::Args("missing --T".into())),
    }
}

/// Evaluates `f` at every point in parallel, keeping the order.
fn sweep(points: &[f64], f: impl Fn(f64) -> threshold_diffusion::Result<f64> + Sync) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(points
        .par_iter()
        .map(|&z| f(z).map(|v| vec![z, v]))
        .collect::<threshold_diffusion::Result<Vec<_>>>()?)
}

fn density(args: &DensityArgs, l: &Layer) -> Result<Table, CliError> {
    let params = diffusion(&args.params, l)?;
    let settings = quad(&args.quad, l)?;
    let times = l.list(args.t.clone(), "t")?;
    let starts = l.list(args.x.clone(), "x")?;
    let zs = l.points(args.z_grid, args.z.clone(), "z")?;
    let mut blocks = Vec::new();
    for &t in &times {
        for &x in &starts {
            let rows = sweep(&zs, |z| transition_density(&params, t, x, z, &settings))?;
            blocks.push(Block { labels: vec![("t", t), ("x", x)], rows });
        }
    }
    Ok(Table { columns: &["z", "p"], blocks })
}

fn potential(args: &PotentialArgs, l: &Layer) -> Result<Table, CliError> {
    let params = diffusion(&args.params, l)?;
    let rates = l.list(args.q.clone(), "q")?;
    let starts = l.list(args.x.clone(), "x")?;
    let zs = l.points(args.z_grid, args.z.clone(), "z")?;
    let mut blocks = Vec::new();
    for &q in &rates {
        for &x in &starts {
            let rows = sweep(&zs, |z| potential_density(&params, q, x, z))?;
            blocks.push(Block { labels: vec![("q", q), ("x", x)], rows });
        }
    }
    Ok(Table { columns: &["z", "u"], blocks })
}

fn stationary(args: &StationaryArgs, l: &Layer) -> Result<Table, CliError> {
    let params = diffusion(&args.params, l)?;
    let zs = l.points(args.z_grid, args.z.clone(), "z")?;
    Ok(Table::single(&["z", "pi"], sweep(&zs, |z| stationary_density(&params, z))?))
}

fn value(args: &ValueArgs, l: &Layer) -> Result<Table, CliError> {
    let problem = ControlProblem::new(
        l.f64(args.mu_bar, "mu-bar")?,
        l.f64(args.sigma_bar, "sigma-bar")?,
        l.f64(args.mu_low, "mu-low")?,
        l.f64(args.sigma_low, "sigma-low")?,
        l.f64(args.a, "a")?,
        horizon(args.horizon, l)?,
    )?;
    let settings = quad(&args.quad, l)?;
    let xs = l.points(args.x_grid, args.x.clone(), "x")?;
    Ok(Table::single(&["x", "V"], sweep(&xs, |x| value_function(&problem, x, &settings))?))
}

fn exit_lt(args: &ExitArgs, l: &Layer) -> Result<Table, CliError> {
    let params = diffusion(&args.params, l)?;
    let x = l.f64(args.x, "x")?;
    let lower = l.opt_f64(args.lower, "lower")?;
    let upper = l.opt_f64(args.upper, "upper")?;
    let qs = l.points(args.q_grid, args.q.clone(), "q")?;
    // A missing barrier is never reached, so its column is zero.
    let pair = |q: f64| -> threshold_diffusion::Result<(f64, f64)> {
        match (lower, upper) {
            (Some(y), Some(z)) => two_sided_exit(&ExitQuery::new(params, q, x, y, z)?),
            (Some(y), None) => Ok((one_sided_down(&params, q, x, y)?, 0.0)),
            (None, Some(z)) => Ok((0.0, one_sided_up(&params, q, x, z)?)),
            (None, None) => unreachable!("checked below"),
        }
    };
    if lower.is_none() && upper.is_none() {
        return Err(CliError::Args("exit-lt needs --lower, --upper or both".into()));
    }
    let rows = qs
        .par_iter()
        .map(|&q| pair(q).map(|(down, up)| vec![q, down, up]))
        .collect::<threshold_diffusion::Result<Vec<_>>>()?;
    Ok(Table::single(&["q", "down", "up"], rows))
}

fn simulate(args: &SimulateArgs, l: &Layer, format: Format, sink: &mut Sink) -> Result<u8, CliError> {
    let params = diffusion(&args.params, l)?;
    let scheme = match l.opt_string(args.scheme.clone(), "scheme")?.as_deref() {
        None | Some("corrected") => Scheme::ThresholdCorrected,
        Some("euler") => Scheme::Euler,
        Some(other) => return Err(CliError::Args(format!("unknown scheme '{other}' (corrected or euler)"))),
    };
    let paths = l.opt_u64(args.paths, "paths")?.unwrap_or(10_000);
    let config = SimConfig::new(
        params,
        l.f64(args.x0, "x0")?,
        horizon(args.horizon, l)?,
        l.opt_f64(args.dt, "dt")?.unwrap_or(1e-3),
        usize::try_from(paths).map_err(|_| CliError::Args(format!("--paths {paths} is too large")))?,
        l.opt_u64(args.seed, "seed")?.unwrap_or(0),
    )?
    .with_scheme(scheme);
    let level = l.opt_f64(args.level, "level")?.unwrap_or(params.a());
    let summary_path = match &args.summary {
        Some(p) => Some(p.clone()),
        None => l.opt_string(None, "summary")?.map(Into::into),
    };
    // Open the summary file before simulating so a bad path fails fast.
    let mut summary_sink = summary_path.as_deref().map(|p| Sink::open(Some(p))).transpose()?;

    let ensemble = simulate_paths(&config)?;
    let s = ensemble.survival(level);
    let summary_json = format!(
        "{{\"survival\":{},\"se\":{},\"n\":{},\"dt\":{},\"seed\":{}}}",
        json_number(s.value),
        json_number(s.se),
        config.n_paths,
        json_number(config.dt),
        config.seed
    );

    let written = match format {
        Format::Csv => sink.write_with(|out| ensemble.write_csv(out)),
        Format::Json => sink.write_with(|out| {
            write!(out, "{{\"summary\":{summary_json},\"terminal_values\":[")?;
            for (i, &v) in ensemble.terminal_values().iter().enumerate() {
                if i > 0 {
                    out.write_all(b",")?;
                }
                out.write_all(json_number(v).as_bytes())?;
            }
            out.write_all(b"]}\n")
        }),
    };
    let result = written.and_then(|_| match summary_sink.as_mut() {
        Some(target) => target.write_with(|out| writeln!(out, "{summary_json}")),
        None => {
            if format == Format::Csv {
                eprintln!("{summary_json}");
            }
            Ok(())
        }
    });
    if result.is_err() {
        if let Some(target) = summary_sink {
            target.discard();
        }
    }
    result.map(|_| 0)
}

fn validate(args: &ValidateArgs, l: &Layer, sink: &mut Sink) -> Result<u8, CliError> {
    let d = ValidationOptions::default();
    let paths = l.opt_u64(args.paths, "paths")?.map_or(d.n_paths, |n| n as usize);
    let options = ValidationOptions {
        n_paths: paths,
        seed: l.opt_u64(args.seed, "seed")?.unwrap_or(d.seed),
        tol_override: l.opt_f64(args.tol, "tol")?,
    };
    let ids: Vec<u32> = match &args.only {
        Some(ids) => ids.clone(),
        None => CRITERIA.iter().map(|&(id, _)| id).collect(),
    };
    let mut criteria = Vec::with_capacity(ids.len());
    for id in ids {
        let report = run_criterion(id, &options)?;
        eprintln!(
            "criterion {id:>2} {:<36} {} ({:.1}s)",
            report.name,
            if report.passed { "PASS" } else { "FAIL" },
            report.seconds
        );
        criteria.push(report);
    }
    let report = ValidationReport {
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    };
    sink.write_with(|out| {
        serde_json::to_writer_pretty(&mut *out, &report)?;
        out.write_all(b"\n")
    })?;
    Ok(if report.passed { 0 } else { 1 })
}
