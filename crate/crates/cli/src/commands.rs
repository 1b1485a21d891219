//! Command implementations: load config, run, write files, map failures
//! to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use tinycollapse::output::{
    checks_text, ensemble_csv, ensemble_jsonl, oracle_csv, oracle_jsonl, scenarios_csv,
    scenarios_jsonl, scenarios_text, summary_lines, SummaryRecord,
};
use tinycollapse::validate::BatterySettings;
use tinycollapse::{
    enumerate_exact, estimate_half_decay, fixed_k_half_decay, reproduction_table, run_battery,
    run_ensemble, EvolveMode,
};

use crate::config::{ScenariosConfig, SimulateConfig, VerifyConfig};
use crate::{CliError, CommonArgs, OutputFormat, THREADS_ENV_VAR};

fn read_config(path: &Option<PathBuf>) -> Result<String, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))
}

fn resolve_threads(args: &CommonArgs) -> Result<Option<usize>, CliError> {
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        return Ok(Some(threads));
    }
    match std::env::var(THREADS_ENV_VAR) {
        Ok(value) => {
            let threads: usize = value.parse().map_err(|_| {
                CliError::Config(format!(
                    "{THREADS_ENV_VAR} must be a positive integer, got \"{value}\""
                ))
            })?;
            if threads == 0 {
                return Err(CliError::Config(format!(
                    "{THREADS_ENV_VAR} must be positive"
                )));
            }
            Ok(Some(threads))
        }
        Err(_) => Ok(None),
    }
}

fn out_dir(args: &CommonArgs) -> Result<&Path, CliError> {
    args.out
        .as_deref()
        .ok_or_else(|| CliError::Config("--out is required for this command".into()))
}

/// Write a file, refusing to overwrite unless `--force` was given.
fn write_file(dir: &Path, name: &str, contents: &str, force: bool) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    if path.exists() && !force {
        return Err(CliError::Config(format!(
            "refusing to overwrite {} (pass --force to allow)",
            path.display()
        )));
    }
    fs::write(&path, contents)?;
    Ok(())
}

pub fn simulate(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = SimulateConfig::parse(&read_config(&args.config)?)?;
    let mut cfg = parsed.to_run_config()?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    cfg.threads = resolve_threads(args)?;
    let dir = out_dir(args)?;

    let stats = run_ensemble(&cfg).map_err(CliError::from_core)?;

    let (name, data) = match args.format {
        OutputFormat::Csv => ("ensemble.csv", ensemble_csv(&stats)),
        OutputFormat::StructuredText => ("ensemble.jsonl", ensemble_jsonl(&stats)),
    };
    write_file(dir, name, &data, args.force)?;

    let fractions: Vec<f64> = stats
        .absorbed_histogram
        .iter()
        .map(|&c| c as f64 / stats.trajectories as f64)
        .collect();
    let mut records = vec![
        SummaryRecord::Run {
            mode: match cfg.mode {
                EvolveMode::ModelK => "model-k".into(),
                EvolveMode::FixedK(k) => format!("fixed-k({k})"),
            },
            levels: cfg.initial.len(),
            steps: cfg.steps,
            trajectories: cfg.trajectories,
            seed: cfg.base_seed,
            record_stride: cfg.record_stride,
            absorption_threshold: cfg.absorption_threshold,
        },
        SummaryRecord::Absorption {
            histogram: &stats.absorbed_histogram,
            fractions,
            unabsorbed: stats.unabsorbed,
        },
    ];
    // Half-decay of the first cross moment, when the run has one.
    if stats.levels >= 2 {
        let measured = estimate_half_decay(&stats, 0, 1).map_err(CliError::from_core)?;
        let prediction = match cfg.mode {
            EvolveMode::FixedK(k) if k > 0.0 => Some(fixed_k_half_decay(k)),
            _ => None,
        };
        records.push(SummaryRecord::HalfDecay {
            pair: (0, 1),
            measured_steps: measured,
            fixed_k_prediction: prediction,
            ratio: match (measured, prediction) {
                (Some(m), Some(p)) => Some(m / p),
                _ => None,
            },
        });
    }
    write_file(dir, "summary.jsonl", &summary_lines(&records), args.force)?;
    Ok(())
}

pub fn oracle(args: &CommonArgs) -> Result<(), CliError> {
    let parsed = SimulateConfig::parse(&read_config(&args.config)?)?;
    let initial = parsed.initial_distribution()?;
    let mode = parsed.mode()?;
    let spectrum = parsed.spectrum()?;
    let budget = parsed
        .run
        .node_budget
        .unwrap_or(tinycollapse::oracle::DEFAULT_NODE_BUDGET);
    let dir = out_dir(args)?;

    let moments = enumerate_exact(&initial, mode, spectrum.as_ref(), parsed.run.steps, budget)
        .map_err(CliError::from_core)?;

    let (name, data) = match args.format {
        OutputFormat::Csv => ("exact.csv", oracle_csv(&moments)),
        OutputFormat::StructuredText => ("exact.jsonl", oracle_jsonl(&moments)),
    };
    write_file(dir, name, &data, args.force)?;
    let records = vec![SummaryRecord::Oracle {
        levels: moments.levels,
        steps: moments.steps,
        node_count: moments.node_count,
    }];
    write_file(dir, "summary.jsonl", &summary_lines(&records), args.force)?;
    Ok(())
}

pub fn verify(args: &CommonArgs) -> Result<(), CliError> {
    let mut settings = BatterySettings::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = VerifyConfig::parse(&text)?;
        if let Some(section) = parsed.verify {
            if let Some(t) = section.trajectories {
                settings.trajectories = t;
            }
            if let Some(s) = section.steps {
                settings.steps = s;
            }
            if let Some(seed) = section.seed {
                settings.base_seed = seed;
            }
        }
    }
    if let Some(seed) = args.seed {
        settings.base_seed = seed;
    }
    settings.threads = resolve_threads(args)?;
    settings.validate().map_err(CliError::from_core)?;

    let outcomes = run_battery(&settings).map_err(CliError::from_core)?;
    let text = checks_text(&outcomes);
    print!("{text}");
    if let Some(dir) = &args.out {
        let records: Vec<SummaryRecord> = outcomes.iter().map(SummaryRecord::Check).collect();
        write_file(dir, "verify.jsonl", &summary_lines(&records), args.force)?;
        write_file(dir, "verify.txt", &text, args.force)?;
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(())
}

pub fn scenarios(args: &CommonArgs) -> Result<(), CliError> {
    let overrides = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            ScenariosConfig::parse(&text)?
        }
        None => ScenariosConfig::default(),
    };
    let constants = overrides.to_constants()?;
    let rows = reproduction_table(&constants).map_err(CliError::from_core)?;

    let (name, data) = match args.format {
        OutputFormat::Csv => ("scenarios.csv", scenarios_csv(&rows)),
        OutputFormat::StructuredText => ("scenarios.jsonl", scenarios_jsonl(&rows)),
    };
    match &args.out {
        Some(dir) => {
            write_file(dir, name, &data, args.force)?;
            write_file(dir, "report.txt", &scenarios_text(&rows), args.force)?;
        }
        None => print!("{data}"),
    }
    let failed = rows.iter().filter(|r| !r.within_tolerance).count();
    if failed > 0 {
        return Err(CliError::ToleranceFailed(failed));
    }
    Ok(())
}

pub fn report(args: &CommonArgs) -> Result<(), CliError> {
    let dir = out_dir(args)?;
    let mut rendered_any = false;
    for name in ["summary.jsonl", "verify.jsonl", "scenarios.jsonl"] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        rendered_any = true;
        println!("== {name}");
        let text = fs::read_to_string(&path)?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| CliError::Io(format!("{}: malformed record: {e}", path.display())))?;
            println!("{}", render_record(&value));
        }
        println!();
    }
    for name in ["ensemble.csv", "exact.csv", "report.txt"] {
        if dir.join(name).exists() {
            rendered_any = true;
            println!("data file: {}", dir.join(name).display());
        }
    }
    if !rendered_any {
        return Err(CliError::Config(format!(
            "no tinycollapse output found under {}",
            dir.display()
        )));
    }
    Ok(())
}

/// One aligned line per record: the record kind, then `key=value` pairs.
fn render_record(value: &serde_json::Value) -> String {
    let kind = value
        .get("record")
        .and_then(|v| v.as_str())
        .unwrap_or("record");
    let mut parts = Vec::new();
    if let Some(map) = value.as_object() {
        for (key, v) in map {
            if key == "record" {
                continue;
            }
            parts.push(format!("{key}={v}"));
        }
    }
    format!("  {kind:<12} {}", parts.join(" "))
}
