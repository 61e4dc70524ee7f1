use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemoglimm::config::RunConfig;
use chemoglimm::diagnostics::{self, fmt_f64};
use chemoglimm::glimm::SamplingSequence;
use chemoglimm::riemann::Family;
use chemoglimm::run;
use chemoglimm::Error;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "chemoglimm", version, about = "Random-choice experiments for the hyperbolic chemotaxis system")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Switch to seeded pseudo-random sampling with this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Solve one Riemann problem and sample its similarity profile.
    Riemann,
    /// Full Glimm run: diagnostics and snapshots.
    Simulate,
    /// Glimm run followed by decay fits.
    Decay,
    /// Mesh refinement sweep.
    Convergence,
    /// Glimm against the finite-volume reference.
    OracleCompare,
}

fn load(cli: &Cli) -> chemoglimm::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        cfg.apply_override(kv)?;
    }
    if let Some(seed) = cli.seed {
        cfg.sampling = SamplingSequence::SeededPrng { seed };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> chemoglimm::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn comment(w: &mut impl Write, header: &str) -> chemoglimm::Result<()> {
    for line in header.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Minus => "minus",
        Family::Plus => "plus",
    }
}

fn execute(cli: &Cli) -> chemoglimm::Result<Vec<String>> {
    let cfg = load(cli)?;
    fs::create_dir_all(&cli.out)?;
    let header = run::header(&cfg);
    let dir = cli.out.as_path();
    let mut written = Vec::new();
    match cli.cmd {
        Cmd::Riemann => {
            let (fan, prof) = run::riemann_profile(&cfg)?;
            let mut w = create(dir, "riemann_fan.csv")?;
            comment(&mut w, &header)?;
            writeln!(w, "family,amplitude,kind,speed_lo,speed_hi,left_w1,left_w2,right_w1,right_w2")?;
            for wave in &fan.waves {
                let kind = if wave.is_shock() {
                    "shock"
                } else if wave.is_rarefaction() {
                    "rarefaction"
                } else {
                    "none"
                };
                writeln!(
                    w,
                    "{},{},{kind},{},{},{},{},{},{}",
                    family_name(wave.family),
                    fmt_f64(wave.amplitude),
                    fmt_f64(wave.speed_lo),
                    fmt_f64(wave.speed_hi),
                    fmt_f64(wave.left[0]),
                    fmt_f64(wave.left[1]),
                    fmt_f64(wave.right[0]),
                    fmt_f64(wave.right[1]),
                )?;
            }
            w.flush()?;
            let th = cfg.riemann_theta;
            let mut w = create(dir, "riemann_profile.csv")?;
            comment(&mut w, &header)?;
            writeln!(w, "# t={}", fmt_f64(cfg.riemann_t))?;
            writeln!(w, "x,xi,w1,w2,v,u")?;
            for (x, s) in prof {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(x / cfg.riemann_t),
                    fmt_f64(s[0]),
                    fmt_f64(s[1]),
                    fmt_f64(s[0] + th),
                    fmt_f64(1.0 + s[1])
                )?;
            }
            w.flush()?;
            written.extend(["riemann_fan.csv".into(), "riemann_profile.csv".into()]);
        }
        Cmd::Simulate | Cmd::Decay => {
            let out = run::simulate(&cfg)?;
            let mut w = create(dir, "diagnostics.csv")?;
            diagnostics::write_csv(&mut w, &header, &out.records)?;
            w.flush()?;
            written.push("diagnostics.csv".into());
            for (i, s) in out.snapshots.iter().enumerate() {
                let name = format!("snapshot_{i:03}.csv");
                let mut w = create(dir, &name)?;
                run::write_snapshot(&mut w, &header, s)?;
                w.flush()?;
                written.push(name);
            }
            if let Cmd::Decay = cli.cmd {
                let summary = run::decay_summary(&out, cfg.mesh.t_final)?;
                let doc = serde_json::json!({ "header": header, "summary": summary });
                let mut w = create(dir, "decay_summary.json")?;
                serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Io(e.to_string()))?;
                writeln!(w)?;
                w.flush()?;
                written.push("decay_summary.json".into());
            }
        }
        Cmd::Convergence => {
            let rows = run::convergence(&cfg)?;
            let mut w = create(dir, "convergence.csv")?;
            comment(&mut w, &header)?;
            writeln!(w, "h,flux_mismatch,flux_ratio,mass_drift,mass_ratio,l1_self_difference")?;
            for (i, r) in rows.iter().enumerate() {
                let ratio = |f: fn(&run::ConvergenceRow) -> f64| {
                    if i == 0 {
                        f64::NAN
                    } else {
                        f(&rows[i - 1]) / f(r)
                    }
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_f64(r.h),
                    fmt_f64(r.flux_mismatch),
                    fmt_f64(ratio(|r| r.flux_mismatch)),
                    fmt_f64(r.mass_drift),
                    fmt_f64(ratio(|r| r.mass_drift)),
                    fmt_f64(r.l1_self_difference)
                )?;
            }
            w.flush()?;
            written.push("convergence.csv".into());
        }
        Cmd::OracleCompare => {
            let cmp = run::oracle_compare(&cfg)?;
            let mut w = create(dir, "oracle_compare.csv")?;
            comment(&mut w, &header)?;
            writeln!(w, "# t={}", fmt_f64(cmp.t))?;
            writeln!(w, "# l1={}", fmt_f64(cmp.l1))?;
            writeln!(w, "x,glimm_w1,glimm_w2,fv_w1,fv_w2,diff_w1,diff_w2")?;
            for i in 0..cmp.x.len() {
                let (g, f) = (cmp.glimm[i], cmp.fv[i]);
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt_f64(cmp.x[i]),
                    fmt_f64(g[0]),
                    fmt_f64(g[1]),
                    fmt_f64(f[0]),
                    fmt_f64(f[1]),
                    fmt_f64(g[0] - f[0]),
                    fmt_f64(g[1] - f[1])
                )?;
            }
            w.flush()?;
            written.push("oracle_compare.csv".into());
        }
    }
    Ok(written)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::DecayHypothesis(_) | Error::Regime(_) => 2,
        e if e.is_guard() => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            if !cli.quiet {
                for f in files {
                    println!("{}", cli.out.join(f).display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
