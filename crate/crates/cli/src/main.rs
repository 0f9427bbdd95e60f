use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use caldera::campaign::{format_float, run_campaign, CampaignConfig};
use caldera::extension::{lift_operator, Alpha, LiftMethod, LiftOptions};
use caldera::instance::Instance;
use caldera::kfunc::{profile, FunctionalKind, TGrid};
use caldera::majorization::{construct_positive_operator, OperatorCertificate};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "caldera", version, about = "K-functionals, convexified couples and operator lifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate K(t,f) or D(t,f) on a grid.
    Kprofile {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "K")]
        kind: FunctionalKind,
        #[arg(long, default_value = "geometric:1e-3,1e3,61")]
        t_grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a positive T with Tf = g on (l1, linf) and certify it.
    ConstructOperator {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build L with Lf = g on the p-convexified couple and audit it.
    Lift {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "holder")]
        method: LiftMethod,
        #[arg(long, default_value = "auto")]
        alpha: Alpha,
        #[arg(long, default_value_t = 10_000)]
        audit_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded verification campaign. Exits 1 iff any violation.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("reading instance {}", path.display()))
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Kprofile { instance, kind, t_grid, out } => {
            let inst = load(&instance)?;
            let grid = TGrid::parse(&t_grid)?;
            let prof = profile(kind, &inst.couple()?, &inst.f, &grid)?;
            let mut w = create(&out)?;
            writeln!(w, "t,value,a0_norm,a1_norm")?;
            for (k, t) in grid.points().iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    format_float(*t),
                    format_float(prof.values[k]),
                    format_float(prof.a0_norms[k]),
                    format_float(prof.a1_norms[k])
                )?;
            }
            w.flush()?;
        }
        Command::ConstructOperator { instance, out } => {
            let inst = load(&instance)?;
            let couple = inst.couple()?;
            if !couple.is_l1_linf() {
                bail!("construct-operator needs the (l1, linf) couple");
            }
            let g = inst.g()?;
            let op = construct_positive_operator(&couple.space, &inst.f, g)?;
            let cert = OperatorCertificate::compute(&op.operator, &inst.f, g)?;
            write_json(
                &out,
                &json!({
                    "entries": op.operator.to_rows(),
                    "cert": {
                        "norm1": cert.norm1,
                        "norminf": cert.norminf,
                        "residual": cert.residual,
                        "min_entry": cert.min_entry,
                    },
                    "fill": op.fill,
                    "fill_strategy": op.fill_strategy,
                }),
            )?;
        }
        Command::Lift { instance, method, alpha, audit_samples, seed, out } => {
            let inst = load(&instance)?;
            let options = LiftOptions { method, alpha, audit_samples, seed, t_grid: TGrid::default_grid() };
            let r = lift_operator(&inst.couple()?, &inst.f, inst.g()?, inst.p()?, &options)?;
            write_json(
                &out,
                &json!({
                    "L": r.l.to_rows(),
                    "method": r.method,
                    "alpha": r.alpha,
                    "p": r.p,
                    "T": r.majorant.operator().to_rows(),
                    "certificates": r.certificates,
                    "passed": r.certificates.passed(),
                }),
            )?;
            if !r.certificates.passed() {
                eprintln!("lift certificates failed");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Campaign { config, report, json } => {
            let cfg = CampaignConfig::load(&config).with_context(|| format!("reading config {}", config.display()))?;
            let rep = run_campaign(&cfg)?;
            let mut w = create(&report)?;
            rep.write_csv(&mut w)?;
            w.flush()?;
            if let Some(path) = json {
                let mut j = create(&path)?;
                j.write_all(rep.to_json()?.as_bytes())?;
                writeln!(j)?;
                j.flush()?;
            }
            let s = &rep.summary;
            eprintln!("{} rows, {} violations, {} errors", s.rows, s.violations, s.errors);
            return Ok(ExitCode::from(rep.exit_code() as u8));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
