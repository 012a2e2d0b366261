//! `bsv`: run spectra, correlation, mode, interference and statistics
//! scenarios and write their data with a hashed manifest.

mod error;
mod output;
mod params;
mod reproduce;
mod scenarios;

use clap::{Args, Parser, Subcommand, ValueEnum};
use error::CliError;
use output::{check_run, entries, read_manifest, write_run, Format, Output, Outputs, RunManifest};
use params::{parse_value, Params};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Environment variable that overrides the configured output directory.
const OUT_ENV: &str = "BSV_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "bsv", version, about = "High-gain PDC and bright squeezed vacuum simulations")]
struct Cli {
    /// TOML config with [run], [crystal], [grid] and per-scenario sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; required by stochastic scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; each run writes into <out>/<scenario or figure-id>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Override any key, e.g. --set crystal.gain=3.5 (repeatable).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Re-run and compare against the stored manifest instead of writing.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
struct CrystalArgs {
    #[arg(long, allow_hyphen_values = true)]
    material: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    length_mm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pump_nm: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi_deg: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gain: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pump_duration_ps: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Frequency-wavevector spectrum S(q, Ω)
    Spectrum(CrystalArgs),
    /// Angle-wavelength tuning curves for several orientations
    Tuning(CrystalArgs),
    /// G1 and G2 space-time correlation maps
    Coherence(CrystalArgs),
    /// Joint spectral amplitude, Schmidt number and Fedorov ratio
    Schmidt(CrystalArgs),
    /// HOM curves versus delay
    Hom(CrystalArgs),
    /// Photon-number sampling and correlation functions
    Stats {
        #[arg(long, allow_hyphen_values = true)]
        dist: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        n: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mean: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        modes: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        experiment: Option<String>,
    },
    /// Heavy-tail analysis of pushed-forward or Pareto samples
    Tails {
        #[arg(long)]
        pareto_demo: bool,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        n_min: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        samples: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        pump: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        process: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        kappa: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        order: Option<String>,
    },
    /// Fit I = I0 sinh²(B√P) to power-intensity data
    Gainfit {
        /// CSV with `power` and `intensity` columns.
        #[arg(long, allow_hyphen_values = true)]
        input: Option<String>,
    },
    /// Regenerate the data behind one catalogued figure
    Reproduce { id: String },
    /// List the figure ids known to `reproduce`
    ListReproductions {
        #[arg(long)]
        json: bool,
    },
    /// Check a configuration without running it
    Validate {
        /// Scenario or figure id; defaults to `run.scenario`.
        #[arg(long, allow_hyphen_values = true)]
        scenario: Option<String>,
    },
}

fn put(p: &mut Params, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        p.set(key, parse_value(v));
    }
}

fn crystal_flags(p: &mut Params, c: &CrystalArgs) {
    put(p, "crystal.material", &c.material);
    put(p, "crystal.length_mm", &c.length_mm);
    put(p, "crystal.pump_nm", &c.pump_nm);
    put(p, "crystal.phi_deg", &c.phi_deg);
    put(p, "crystal.gain", &c.gain);
    put(p, "crystal.pump_duration_ps", &c.pump_duration_ps);
}

/// Preset, then config file, then --set, then dedicated flags.
fn build_params(cli: &Cli, preset: Option<&str>) -> Result<Params, CliError> {
    let mut p = match preset {
        Some(t) => Params::from_toml(t)?,
        None => Params::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("--config: cannot read {}: {e}", path.display())))?;
        let t: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        p.merge_table(&t);
    }
    for s in &cli.set {
        p.set_assignment(s)?;
    }
    if let Some(s) = cli.seed {
        p.set("run.seed", toml::Value::Integer(s as i64));
    }
    match &cli.cmd {
        Cmd::Spectrum(c) | Cmd::Tuning(c) | Cmd::Coherence(c) | Cmd::Schmidt(c) | Cmd::Hom(c) => crystal_flags(&mut p, c),
        Cmd::Stats {
            dist,
            n,
            mean,
            modes,
            experiment,
        } => {
            put(&mut p, "stats.dist", dist);
            put(&mut p, "stats.n", n);
            put(&mut p, "stats.mean", mean);
            put(&mut p, "stats.modes", modes);
            put(&mut p, "stats.experiment", experiment);
        }
        Cmd::Tails {
            pareto_demo,
            alpha,
            n_min,
            samples,
            pump,
            process,
            kappa,
            order,
        } => {
            if *pareto_demo {
                p.set("tails.source", toml::Value::String("pareto".into()));
            }
            put(&mut p, "tails.alpha", alpha);
            put(&mut p, "tails.n_min", n_min);
            put(&mut p, "tails.samples", samples);
            put(&mut p, "tails.pump", pump);
            put(&mut p, "tails.process", process);
            put(&mut p, "tails.kappa", kappa);
            put(&mut p, "tails.order", order);
        }
        Cmd::Gainfit { input } => put(&mut p, "gainfit.input", input),
        _ => {}
    }
    Ok(p)
}

/// Reads the keys every run shares.
struct RunSettings {
    format: Format,
    out_root: PathBuf,
}

fn run_settings(cli: &Cli, p: &Params) -> Result<RunSettings, CliError> {
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => Format::parse(&p.str_or("run.format", "csv")?)?,
    };
    let configured = p.str_or("run.out", "bsv-out")?;
    let out_root = match (&cli.out, std::env::var_os(OUT_ENV)) {
        (Some(o), _) => o.clone(),
        (None, Some(e)) if !e.is_empty() => PathBuf::from(e),
        _ => PathBuf::from(configured),
    };
    p.note("run.out", toml::Value::String(out_root.display().to_string()));
    p.note("run.format", toml::Value::String(format.as_str().into()));
    // read so they never show up as unused
    p.opt_u64("run.seed")?;
    p.opt_str("run.scenario")?;
    Ok(RunSettings { format, out_root })
}

fn warn_unused(keys: &[String]) -> Vec<String> {
    keys.iter().map(|k| format!("unused key `{k}`")).collect()
}

struct Planned {
    name: String,
    parts: Vec<(String, Params, scenarios::Job)>,
}

fn plan(cli: &Cli, name: &str) -> Result<(Planned, RunSettings, Vec<String>), CliError> {
    let mut parts = Vec::new();
    let mut unused: Option<Vec<String>> = None;
    let mut settings = None;
    if let Some(r) = reproduce::find(name) {
        for part in r.parts {
            let p = build_params(cli, Some(part.preset))?;
            let s = run_settings(cli, &p)?;
            let job = scenarios::prepare(part.scenario, &p)?;
            let u = p.unused();
            // a key counts as unused only if no part read it
            unused = Some(match unused {
                None => u,
                Some(prev) => prev.into_iter().filter(|k| u.contains(k)).collect(),
            });
            settings = Some(s);
            let sub = if r.parts.len() > 1 { part.name.to_string() } else { String::new() };
            parts.push((sub, p, job));
        }
    } else if scenarios::SCENARIOS.contains(&name) {
        let p = build_params(cli, None)?;
        let s = run_settings(cli, &p)?;
        let job = scenarios::prepare(name, &p)?;
        unused = Some(p.unused());
        settings = Some(s);
        parts.push((String::new(), p, job));
    } else {
        return Err(CliError::Config(format!(
            "unknown scenario or figure id `{name}` (see `bsv list-reproductions`)"
        )));
    }
    let warnings = warn_unused(&unused.unwrap_or_default());
    Ok((
        Planned {
            name: name.to_string(),
            parts,
        },
        settings.expect("at least one part"),
        warnings,
    ))
}

fn execute(cli: &Cli, name: &str) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let (planned, settings, warnings) = plan(cli, name)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let mut files: Vec<Output> = Vec::new();
    let mut config = serde_json::Map::new();
    let mut seed = None;
    for (sub, p, job) in planned.parts {
        let mut out = Outputs::new(settings.format);
        job(&mut out)?;
        seed = seed.or(p.opt_u64("run.seed").ok().flatten());
        if sub.is_empty() {
            files.extend(out.files);
            config.insert("config".into(), p.echo());
        } else {
            files.extend(out.nest(&sub));
            config.insert(sub, p.echo());
        }
    }
    let config = match config.remove("config") {
        Some(c) if config.is_empty() => c,
        _ => serde_json::Value::Object(config),
    };
    let dir = settings.out_root.join(&planned.name);
    if cli.check {
        return check(&dir, &files);
    }
    let manifest = RunManifest {
        tool: "bsv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: planned.name.clone(),
        config,
        seed,
        threads: rayon::current_num_threads(),
        format: settings.format.as_str().into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings,
        outputs: entries(&files),
    };
    write_run(&dir, &files, &manifest)?;
    println!("{}: wrote {} files to {}", planned.name, files.len(), dir.display());
    Ok(())
}

fn check(dir: &Path, fresh: &[Output]) -> Result<(), CliError> {
    let stored = read_manifest(dir)?;
    let problems = check_run(dir, fresh, &stored);
    if problems.is_empty() {
        println!("check passed: {} files match {}", stored.outputs.len(), dir.join(output::MANIFEST).display());
        Ok(())
    } else {
        for p in &problems {
            eprintln!("mismatch: {p}");
        }
        Err(CliError::Numeric(format!("check failed: {} mismatches in {}", problems.len(), dir.display())))
    }
}

fn validate(cli: &Cli, scenario: Option<&str>) -> Result<(), CliError> {
    let probe = build_params(cli, None)?;
    let name = match scenario {
        Some(s) => s.to_string(),
        None => probe.opt_str("run.scenario")?.ok_or_else(|| {
            CliError::Config("missing required key `run.scenario` (or pass --scenario)".into())
        })?,
    };
    let (_, _, warnings) = plan(cli, &name)?;
    for w in &warnings {
        println!("warning: {w}");
    }
    println!("ok: `{name}` configuration is valid ({} warnings)", warnings.len());
    Ok(())
}

fn list(json: bool) {
    use std::io::Write;
    let mut text = String::new();
    if json {
        let v: Vec<_> = reproduce::CATALOG
            .iter()
            .map(|r| serde_json::json!({"id": r.id, "figure": r.figure, "description": r.description}))
            .collect();
        text = serde_json::to_string_pretty(&v).expect("serializable") + "\n";
    } else {
        for r in reproduce::CATALOG {
            text += &format!("{:<22} {:<28} {}\n", r.id, r.figure, r.description);
        }
    }
    // a closed pipe (`| head`) is not an error worth a panic
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::ListReproductions { json } => {
            list(*json);
            Ok(())
        }
        Cmd::Validate { scenario } => validate(&cli, scenario.as_deref()),
        Cmd::Reproduce { id } => {
            if reproduce::find(id).is_none() {
                Err(CliError::Config(format!("unknown figure id `{id}` (see `bsv list-reproductions`)")))
            } else {
                execute(&cli, id)
            }
        }
        Cmd::Spectrum(_) => execute(&cli, "spectrum"),
        Cmd::Tuning(_) => execute(&cli, "tuning"),
        Cmd::Coherence(_) => execute(&cli, "coherence"),
        Cmd::Schmidt(_) => execute(&cli, "schmidt"),
        Cmd::Hom(_) => execute(&cli, "hom"),
        Cmd::Stats { .. } => execute(&cli, "stats"),
        Cmd::Tails { .. } => execute(&cli, "tails"),
        Cmd::Gainfit { .. } => execute(&cli, "gainfit"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
