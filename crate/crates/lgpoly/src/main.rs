use clap::{value_parser, Arg, ArgMatches, Command};
use lgpoly::catalog::{catalog, listing, Entry};
use lgpoly::runner::{execute, read_config_file, resolve, ERROR_EXIT_CODE};
use lgpoly::RunError;
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn subcommand(entry: &Entry) -> Command {
    let mut cmd = Command::new(entry.name)
        .about(entry.claim)
        .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).help("RNG seed"))
        .arg(Arg::new("out").long("out").value_parser(value_parser!(PathBuf)).help("output directory"))
        .arg(Arg::new("config").long("config").value_parser(value_parser!(PathBuf)).help("JSON config file"));
    if let Value::Object(defaults) = entry.defaults() {
        for (key, value) in defaults {
            cmd = cmd.arg(
                Arg::new(key.clone())
                    .long(flag_name(&key))
                    .value_name("JSON")
                    .help(format!("default: {value}")),
            );
        }
    }
    cmd
}

/// Flag values are read as JSON, falling back to a plain string.
fn overrides(entry: &Entry, m: &ArgMatches) -> Map<String, Value> {
    let mut out = Map::new();
    if let Value::Object(defaults) = entry.defaults() {
        for key in defaults.keys() {
            if let Some(raw) = m.get_one::<String>(key) {
                let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
                out.insert(key.clone(), v);
            }
        }
    }
    out
}

fn run(entry: &Entry, m: &ArgMatches) -> Result<i32, RunError> {
    let file = m.get_one::<PathBuf>("config").map(|p| read_config_file(p)).transpose()?;
    let resolved = resolve(entry, file, overrides(entry, m), m.get_one::<u64>("seed").copied())?;
    let out = m.get_one::<PathBuf>("out").cloned().unwrap_or_else(|| PathBuf::from("out").join(entry.name));
    let report = execute(entry, &resolved, &out)?;
    if let Some(outcome) = &report.outcome {
        for c in &outcome.checks {
            println!("{c}");
        }
    }
    if let Some(e) = report.summary.get("error") {
        println!("aborted: {}", e.as_str().unwrap_or_default());
    }
    println!("{}: {:?}, artifacts in {}", entry.name, report.status, out.display());
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let entries = catalog();
    let cli = Command::new("lgpoly")
        .about("Experiments on the log-gamma directed polymer")
        .subcommand_required(true)
        .subcommand(Command::new("list").about("List experiments with the claim each one checks"))
        .subcommands(entries.iter().map(subcommand));
    let matches = cli.get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    if name == "list" {
        for line in listing() {
            println!("{line}");
        }
        return ExitCode::SUCCESS;
    }
    let entry = entries.iter().find(|e| e.name == name).expect("subcommands come from the catalog");
    let code = run(entry, sub).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ERROR_EXIT_CODE
    });
    ExitCode::from(code as u8)
}
