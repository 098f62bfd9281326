#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spdg::harness::figure::{closed_form_points, points_from_rows, render_svg, write_figure_csv};
use spdg::harness::sweep::{read_rows_csv, write_rows_csv};
use spdg::harness::{
    certify_problem, generate_problem, run_sweep, CertifyOptions, GeneratorParams, ProblemSpec,
    StartPoint, SweepConfig,
};
use spdg::rates::{Inequality, RateCertificate};
use spdg::solvers::{spdg_solve, SpdgConfig, TraceMode};

#[derive(Parser, Debug)]
#[command(
    name = "spdg",
    version,
    about = "Partial-inverse splitting solver and rate certifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the splitting method on one problem and write its trace as CSV.
    Solve(SolveArgs),
    /// Check moduli, partial-inverse monotonicity, equivalence and every rate bound.
    Certify(CertifyArgs),
    /// Print rate factors, log constants and iteration bounds for (eta, L).
    Rates(RatesArgs),
    /// Run a seeded sweep over dimension and conditioning and write result rows as CSV.
    Bench(BenchArgs),
    /// Turn sweep rows (or the closed form alone) into a factor-vs-condition SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// JSON problem file; overrides the generator flags.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    /// Defaults to dim / 2.
    #[arg(long)]
    subspace_dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Condition number L/eta.
    #[arg(long, default_value_t = 10.0)]
    cond: f64,
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    /// Also write the problem as JSON.
    #[arg(long)]
    save_problem: Option<PathBuf>,
}

impl ProblemArgs {
    fn load(&self) -> Result<ProblemSpec> {
        let spec = match &self.problem {
            Some(path) => ProblemSpec::load(path)
                .with_context(|| format!("loading problem {}", path.display()))?,
            None => {
                let params = GeneratorParams::new(
                    self.dim,
                    self.subspace_dim.unwrap_or(self.dim / 2),
                    self.eta,
                    self.eta * self.cond,
                )?
                .with_skew(self.skew)?;
                generate_problem(&params, self.seed)?
            }
        };
        if let Some(path) = &self.save_problem {
            spec.save(path)
                .with_context(|| format!("writing problem {}", path.display()))?;
        }
        Ok(spec)
    }
}

fn spec_provenance(spec: &ProblemSpec) -> Vec<(String, String)> {
    vec![
        ("seed".into(), spec.seed.to_string()),
        ("dim".into(), spec.dim().to_string()),
        ("subspace_dim".into(), spec.subspace_dim().to_string()),
        ("eta".into(), spec.eta.to_string()),
        ("L".into(), spec.lipschitz.to_string()),
        ("skew".into(), spec.params.skew_fraction.to_string()),
    ]
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Defaults to 1/L.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    rho: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Trace CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    rho: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Sampled pairs for the moduli and monotonicity checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long)]
    eta: f64,
    #[arg(long = "L")]
    lipschitz: f64,
    /// Defaults to 1/L.
    #[arg(long)]
    gamma: Option<f64>,
    /// Ratio d0^2/rho for the iteration bounds.
    #[arg(long = "d0sq-over-rho")]
    d0sq_over_rho: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 50, 100])]
    dims: Vec<usize>,
    /// Single dimension; overrides --dims.
    #[arg(long)]
    dim: Option<usize>,
    /// Subspace dimension for --dim; otherwise round(fraction * n).
    #[arg(long)]
    subspace_dim: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    subspace_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 20.0, 100.0])]
    conds: Vec<f64>,
    /// Single condition number; overrides --conds.
    #[arg(long)]
    cond: Option<f64>,
    /// Evenly spaced conditions `lo,hi,count`; overrides --conds.
    #[arg(long, value_delimiter = ',')]
    cond_range: Option<Vec<f64>>,
    /// gamma = multiplier / L.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    gamma_mults: Vec<f64>,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    #[arg(long, default_value_t = 1e-8)]
    rho: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Rows written by `bench`; without it only the closed form is drawn.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    cond_min: f64,
    #[arg(long, default_value_t = 20.0)]
    cond_max: f64,
    #[arg(long, default_value_t = 96)]
    points: usize,
    /// SVG destination.
    #[arg(long)]
    out: PathBuf,
    /// Figure data CSV; defaults to the SVG path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn header(out: &mut dyn Write, fields: &[(String, String)]) -> Result<()> {
    for (k, v) in fields {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let spec = args.problem.load()?;
    let problem = spec.problem_with_solution()?;
    let gamma = args.gamma.unwrap_or(1.0 / spec.lipschitz);
    let config = SpdgConfig::new(gamma)?
        .with_rho(args.rho)?
        .with_max_iters(args.max_iters)?
        .with_mode(TraceMode::Thin);
    let trace = spdg_solve(&problem, &config)?;

    let mut out = open_out(&args.out)?;
    let mut fields = spec_provenance(&spec);
    fields.extend([
        ("gamma".into(), gamma.to_string()),
        ("rho".into(), args.rho.to_string()),
        ("max_iters".into(), args.max_iters.to_string()),
        ("termination".into(), format!("{:?}", trace.termination)),
    ]);
    header(&mut out, &fields)?;
    writeln!(out, "k,residual,step_sq,feasibility_sq,distance_sq")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k,
            r.residual,
            r.step_sq,
            r.feasibility_sq,
            r.distance_sq.unwrap_or(f64::NAN)
        )?;
    }
    out.flush()?;
    eprintln!(
        "{:?} after {} iterations, residual {:e}",
        trace.termination,
        trace.iterations(),
        trace.final_residual().unwrap_or(0.0)
    );
    Ok(())
}

fn certify(args: CertifyArgs) -> Result<()> {
    let spec = args.problem.load()?;
    let options = CertifyOptions {
        gamma: args.gamma,
        rho: args.rho,
        max_iters: args.max_iters,
        samples: args.samples,
        seed: spec.seed,
        ..CertifyOptions::default()
    };
    let report = certify_problem(&spec, &options).context("certification failed")?;
    let mut out = open_out(&args.out)?;
    let mut fields = spec_provenance(&spec);
    fields.extend([
        ("gamma".into(), report.rates.gamma.to_string()),
        ("rho".into(), args.rho.to_string()),
        ("max_iters".into(), args.max_iters.to_string()),
        ("samples".into(), args.samples.to_string()),
    ]);
    header(&mut out, &fields)?;
    let m = &report.moduli;
    writeln!(
        out,
        "moduli: PASS ({} pairs, smallest margin monotonicity {:e}, Lipschitz {:e})",
        m.samples, m.worst_monotonicity_slack, m.worst_lipschitz_slack
    )?;
    let t = &report.monotonicity;
    writeln!(
        out,
        "partial-inverse monotonicity: PASS ({} pairs, worst ratio {:.6e} >= mu {:.6e})",
        t.samples, t.worst_ratio, t.mu
    )?;
    let e = &report.equivalence;
    writeln!(
        out,
        "proximal-point equivalence: PASS ({} iterations, resolvent {:e}, displacement {:e})",
        e.iterations, e.max_resolvent_error, e.max_displacement_error
    )?;
    let b = &report.bounds;
    for ineq in Inequality::ALL {
        let c = b.check(ineq);
        writeln!(
            out,
            "bound {}: PASS ({} iterations, tightest ratio {:.6} at k = {})",
            ineq.name(),
            b.iterations,
            c.tightest_ratio,
            c.tightest_k
        )?;
    }
    writeln!(
        out,
        "observed contraction {:.6} <= factor {:.6}",
        b.max_contraction, b.factor_new
    )?;
    match &report.iteration_bound {
        Some(ib) => writeln!(
            out,
            "iteration count: {} ({:?} <= ceil({:.3}))",
            if ib.first_k.is_some() {
                "PASS"
            } else {
                "NOT REACHED"
            },
            ib.first_k,
            ib.bound
        )?,
        None => writeln!(out, "iteration count: skipped (gamma != 1/L)")?,
    }
    writeln!(
        out,
        "termination: {:?} after {} iterations",
        report.trace.termination,
        report.trace.iterations()
    )?;
    out.flush()?;
    if let Some(ib) = &report.iteration_bound {
        if ib.first_k.is_none() {
            bail!(
                "residual target not reached within {} iterations",
                args.max_iters
            );
        }
    }
    Ok(())
}

fn rates(args: RatesArgs) -> Result<()> {
    let gamma = args.gamma.unwrap_or(1.0 / args.lipschitz);
    let mut cert = RateCertificate::new(args.eta, args.lipschitz, gamma)?;
    if let Some(ratio) = args.d0sq_over_rho {
        if !(ratio > 0.0) {
            bail!("--d0sq-over-rho must be positive, got {ratio}");
        }
        cert = cert.with_tolerance(ratio.sqrt(), 1.0)?;
    }
    let mut out = open_out(&args.out)?;
    let mut fields = vec![
        ("eta".to_string(), args.eta.to_string()),
        ("L".to_string(), args.lipschitz.to_string()),
        ("gamma".to_string(), gamma.to_string()),
    ];
    if let Some(r) = args.d0sq_over_rho {
        fields.push(("d0sq_over_rho".into(), r.to_string()));
    }
    header(&mut out, &fields)?;
    writeln!(out, "scaled_modulus   {:.12}", cert.mu_scaled)?;
    writeln!(out, "factor_old       {:.12}", cert.factor_old)?;
    writeln!(out, "factor_new       {:.12}", cert.factor_new)?;
    writeln!(out, "factor_old_opt   {:.12}", cert.factor_old_opt)?;
    writeln!(out, "factor_new_opt   {:.12}", cert.factor_new_opt)?;
    writeln!(out, "log_constant_old {:.6}", cert.log_constant_old)?;
    writeln!(out, "log_constant_new {:.6}", cert.log_constant_new)?;
    if let (Some(old), Some(new)) = (cert.iters_old, cert.iters_new) {
        writeln!(out, "iters_old        {:.6} (ceil {})", old, old.ceil())?;
        writeln!(out, "iters_new        {:.6} (ceil {})", new, new.ceil())?;
    }
    out.flush()?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let conds = if let Some(c) = args.cond {
        vec![c]
    } else if let Some(r) = &args.cond_range {
        let &[lo, hi, count] = r.as_slice() else {
            bail!("--cond-range expects exactly three values lo,hi,count");
        };
        if !(count >= 1.0) || count.fract() != 0.0 || !(hi >= lo) {
            bail!("--cond-range expects lo,hi,count with lo <= hi and a positive integer count");
        }
        let count = count as usize;
        (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1).max(1) as f64
                }
            })
            .collect()
    } else {
        args.conds.clone()
    };
    let dims = args.dim.map(|d| vec![d]).unwrap_or(args.dims.clone());
    let subspace_fraction = match (args.dim, args.subspace_dim) {
        (Some(n), Some(d)) if n > 0 => d as f64 / n as f64,
        (None, Some(_)) => bail!("--subspace-dim requires --dim"),
        _ => args.subspace_fraction,
    };
    let config = SweepConfig {
        dims,
        subspace_fraction,
        eta: args.eta,
        conds,
        gamma_multipliers: args.gamma_mults.clone(),
        seeds: (args.seed..args.seed + args.seeds).collect(),
        rho: args.rho,
        max_iters: args.max_iters,
        skew_fraction: args.skew,
        start: StartPoint::Zero,
    };
    let rows = run_sweep(&config)?;
    let out = open_out(&args.out)?;
    write_rows_csv(&rows, &config.provenance(), out)?;
    eprintln!("{} rows", rows.len());
    Ok(())
}

fn figure_csv_path(svg: &Path) -> PathBuf {
    svg.with_extension("csv")
}

fn plot(args: PlotArgs) -> Result<()> {
    let (points, mut provenance) = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let provenance: Vec<(String, String)> = text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            let rows = read_rows_csv(text.as_bytes())?;
            (points_from_rows(&rows)?, provenance)
        }
        None => (
            closed_form_points(args.cond_min, args.cond_max, args.points)?,
            vec![
                ("cond_min".into(), args.cond_min.to_string()),
                ("cond_max".into(), args.cond_max.to_string()),
                ("points".into(), args.points.to_string()),
            ],
        ),
    };
    provenance.push((
        "source".into(),
        args.input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "closed-form".into()),
    ));
    let svg = render_svg(&points, &provenance)?;
    std::fs::write(&args.out, svg).with_context(|| format!("writing {}", args.out.display()))?;
    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| figure_csv_path(&args.out));
    let file =
        File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_figure_csv(&points, &provenance, BufWriter::new(file))?;
    eprintln!(
        "{} points -> {}, {}",
        points.len(),
        args.out.display(),
        csv_path.display()
    );
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Certify(a) => certify(a),
        Command::Rates(a) => rates(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
