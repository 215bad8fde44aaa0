use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fanmarch::output::{
    fmt_f64, to_file, write_convergence_csv, write_field_csv, write_heatmap_pgm,
    write_trajectory_csv,
};
use fanmarch::{
    extract_trajectory, fan_sector_angle, refract_angles, snell_beta, Point, Scenario,
    TrajectoryOptions,
};

#[derive(Parser)]
#[command(
    name = "fanmarch",
    version,
    about = "Eikonal solver with just-in-time localized factoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario on its grid and write the field, heatmap and trajectories.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Output files are named `<prefix>_field.csv`, `<prefix>_heatmap.pgm`, ...
        #[arg(long)]
        out_prefix: String,
    },
    /// Run the scenario's refinement study and print a convergence CSV.
    Converge {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        /// Number of finest levels used to fit the order.
        #[arg(long)]
        tail: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a scenario and print the optimal trajectory from a start point as CSV.
    Trajectory {
        #[arg(long)]
        scenario: PathBuf,
        /// Start point as `x,y`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Point,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refraction angles at a slowly permeable corner.
    Snell {
        /// Incidence angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Speed ratio F_free / F_obstacle (at least 1).
        #[arg(long)]
        upsilon: f64,
    },
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts.as_slice() else {
        return Err(format!("expected `x,y`, got `{s}`"));
    };
    let x: f64 = x.parse().map_err(|e| format!("bad x in `{s}`: {e}"))?;
    let y: f64 = y.parse().map_err(|e| format!("bad y in `{s}`: {e}"))?;
    Ok(Point::new(x, y))
}

fn load(path: &PathBuf) -> Result<Scenario> {
    Scenario::from_file(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn solve(path: &PathBuf, prefix: &str) -> Result<()> {
    let scenario = load(path)?;
    let disc = scenario.problem().discretize(scenario.h())?;
    let method = scenario.method();
    let start = Instant::now();
    let result = method.solve(&disc)?;
    let elapsed = start.elapsed().as_secs_f64();
    if scenario.outputs.field_csv {
        to_file(format!("{prefix}_field.csv"), |w| {
            write_field_csv(w, &result.grid, &result.u)
        })?;
    }
    if scenario.outputs.heatmap {
        to_file(format!("{prefix}_heatmap.pgm"), |w| {
            write_heatmap_pgm(w, &result.grid, &result.u)
        })?;
    }
    for (k, &start) in scenario.outputs.trajectories.iter().enumerate() {
        let t = extract_trajectory(
            &result.u,
            &disc.grid,
            &disc.world,
            start,
            disc.sources.points(),
            TrajectoryOptions::default(),
        )
        .with_context(|| format!("trajectory from {start}"))?;
        to_file(format!("{prefix}_trajectory_{k}.csv"), |w| {
            write_trajectory_csv(w, &t)
        })?;
    }
    println!(
        "{}: {}x{} nodes, h = {}, method {}, {} corner fans, {} updates, {:.3}s",
        if scenario.name.is_empty() {
            "scenario"
        } else {
            &scenario.name
        },
        disc.grid.nx(),
        disc.grid.ny(),
        disc.grid.h(),
        method.label,
        result.corner_fans().count(),
        result.stats.updates,
        elapsed
    );
    for fan in result.corner_fans() {
        let a = fan.direction.unwrap_or_default();
        println!(
            "fan at ({}, {}) a = ({}, {}) {}",
            fan.center.x,
            fan.center.y,
            a.x,
            a.y,
            fan.factor.kind()
        );
    }
    Ok(())
}

fn converge(
    path: &PathBuf,
    levels: Option<usize>,
    tail: Option<usize>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let scenario = load(path)?;
    let study = scenario.study(levels, tail)?;
    let reports = study.run(&scenario.problem())?;
    match out {
        Some(p) => to_file(p, |w| write_convergence_csv(w, &reports))?,
        None => write_convergence_csv(std::io::stdout().lock(), &reports)?,
    }
    for r in &reports {
        eprintln!(
            "{}: order L∞ {:.3}, L1 {:.3} over the last {} levels",
            r.method, r.order_linf, r.order_l1, r.tail
        );
    }
    Ok(())
}

fn trajectory(path: &PathBuf, from: Point, out: Option<&PathBuf>) -> Result<()> {
    let scenario = load(path)?;
    let disc = scenario.problem().discretize(scenario.h())?;
    let result = scenario.method().solve(&disc)?;
    let t = extract_trajectory(
        &result.u,
        &disc.grid,
        &disc.world,
        from,
        disc.sources.points(),
        TrajectoryOptions::default(),
    )?;
    match out {
        Some(p) => to_file(p, |w| write_trajectory_csv(w, &t))?,
        None => write_trajectory_csv(std::io::stdout().lock(), &t)?,
    }
    eprintln!(
        "length {} ({:?}, {} points)",
        fmt_f64(t.length),
        t.status,
        t.points.len()
    );
    Ok(())
}

fn snell(alpha: f64, upsilon: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        bail!("alpha must lie in (0, pi/2), got {alpha}");
    }
    let beta = snell_beta(alpha, upsilon)?;
    let delta = fan_sector_angle(alpha, beta);
    let r = refract_angles(alpha, upsilon)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "beta = {}", fmt_f64(beta))?;
    writeln!(out, "delta = {}", fmt_f64(delta))?;
    writeln!(out, "theta2 = {}", fmt_f64(r.theta2))?;
    writeln!(out, "theta3 = {}", fmt_f64(r.theta3))?;
    if r.total_internal_reflection {
        writeln!(out, "total internal reflection")?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve {
            scenario,
            out_prefix,
        } => solve(scenario, out_prefix),
        Command::Converge {
            scenario,
            levels,
            tail,
            out,
        } => converge(scenario, *levels, *tail, out.as_ref()),
        Command::Trajectory {
            scenario,
            from,
            out,
        } => trajectory(scenario, *from, out.as_ref()),
        Command::Snell { alpha, upsilon } => snell(*alpha, *upsilon),
    }
}
