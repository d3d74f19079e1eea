mod commands;
mod config;
mod error;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches};
use equidist_core::stochastic::Verdict;

use crate::config::{Command, RunConfig, KEYS};
use crate::error::{CliError, CliResult};
use crate::report::{Destination, Format, OUTPUT_DIR_ENV};

fn about(command: Command) -> &'static str {
    match command {
        Command::Generate => "Write the point sequence of a generator and window construction",
        Command::Weyl => "Scan Weyl sums over all m up to a radius; exit 2 if some m is flagged",
        Command::Discrepancy => "Star discrepancy (exact or ETK upper bound) along the checkpoint grid",
        Command::Covariance => "Seed-space covariance tests: certificate, moment, lemma2, lemma3, del",
        Command::Wcud => "Monte Carlo check of E|S_N|/N -> 0; exit 2 if refuted",
        Command::Degenerate => "Print the frequency vector that makes Weyl sums constant",
        Command::Gamma => "Uniforms from one bit sequence via the triangular digit scheme",
    }
}

fn cli() -> clap::Command {
    let params: Vec<Arg> = KEYS
        .iter()
        .map(|(key, help)| Arg::new(*key).long(*key).value_name("VALUE").help(*help))
        .collect();
    clap::Command::new("equidist")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Generate equidistributed-mod-1 sequences and test them")
        .after_help(format!(
            "Exit status: 0 pass, 2 refuted, 1 error. Reports go to --output, else to ${OUTPUT_DIR_ENV}/<command>.<format>."
        ))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(Command::ALL.iter().map(|c| {
            clap::Command::new(c.as_str())
                .about(about(*c))
                .arg(
                    Arg::new("config")
                        .long("config")
                        .value_name("FILE")
                        .help("key=value file; flags override its entries"),
                )
                .args(params.clone())
        }))
}

fn config_from(command: Command, matches: &ArgMatches) -> CliResult<RunConfig> {
    let base = match matches.get_one::<String>("config") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: PathBuf::from(path),
                source,
            })?;
            RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?
        }
        None => RunConfig::default(),
    };
    let mut flags = RunConfig {
        command: Some(command),
        ..RunConfig::default()
    };
    for (key, _) in KEYS {
        if let Some(v) = matches.get_one::<String>(key) {
            flags.set(key, v)?;
        }
    }
    base.merged(flags)
}

/// Precision-budget failures name the parameters that drive the budget.
fn with_context(err: CliError, cfg: &RunConfig) -> CliError {
    match err {
        CliError::Core {
            source: source @ equidist_core::Error::PrecisionBudget { .. },
            ..
        } => CliError::Core {
            context: format!(
                "family {} with N = {}, hi = {}, precision-cap = {}",
                cfg.get("family").unwrap_or("?"),
                cfg.get("N").unwrap_or("default"),
                cfg.get("hi").unwrap_or("2"),
                cfg.get("precision-cap").unwrap_or("default")
            ),
            source,
        },
        other => other,
    }
}

fn execute(matches: &ArgMatches) -> CliResult<Option<Verdict>> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command: Command = name.parse()?;
    let cfg = config_from(command, sub)?;
    let format = Format::from_config(&cfg)?;
    if let Some(t) = cfg.get("threads") {
        let threads = cfg.positive_usize("threads", 1)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {t}: {e}")))?;
    }
    if let Some(path) = cfg.get("save-config") {
        let mut saved = cfg.clone();
        saved.values.remove("save-config");
        report::write(&Destination::File(PathBuf::from(path)), &saved.to_file_string())?;
    }
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let dest = Destination::resolve(&cfg, command, format, env_dir.as_deref());
    let outcome = commands::run(command, &cfg).map_err(|e| with_context(e, &cfg))?;
    let text = report::render(command, &cfg, &outcome, format)?;
    report::write(&dest, &text)?;
    for line in &outcome.summary {
        if dest == Destination::Stdout {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }
    if let Destination::File(path) = &dest {
        println!("report written to {}", path.display());
    }
    Ok(outcome.verdict)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match execute(&matches) {
        Ok(Some(Verdict::Refuted)) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_and_config_file_merge() {
        let m = cli().get_matches_from(["equidist", "degenerate", "--family", "weyl", "--p", "3"]);
        let (name, sub) = m.subcommand().unwrap();
        let cfg = config_from(name.parse().unwrap(), sub).unwrap();
        assert_eq!(cfg.get("p"), Some("3"));
        assert_eq!(cfg.command, Some(Command::Degenerate));
    }
}
