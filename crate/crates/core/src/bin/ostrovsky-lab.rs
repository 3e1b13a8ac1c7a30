use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use ostrovsky_lab::runner::{self, parse_config_text, ExperimentConfig, RunError};

fn cli() -> Command {
    let mut cmd = Command::new("ostrovsky-lab")
        .about("Numerical experiments for the negative-dispersion Ostrovsky equation")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand(Command::new("list").about("Print the experiment catalog"));
    for exp in runner::catalog() {
        let mut sub = Command::new(exp.name).about(exp.about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key=value file; command-line flags take precedence"),
        );
        sub = sub.arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .help(format!("output directory [default: runs/{}]", exp.name)),
        );
        for p in exp.params() {
            sub = sub.arg(
                Arg::new(p.key)
                    .long(p.key)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .action(ArgAction::Set)
                    .help(format!("{} [default: {}]", p.help, p.default)),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn print_catalog() {
    let mut out = std::io::stdout().lock();
    let mut text = String::from("experiments:\n");
    for (name, about) in runner::list_experiments() {
        text.push_str(&format!("  {name:<16} {about}\n"));
    }
    text.push_str("\nrun `ostrovsky-lab <experiment> --help` for its parameters\n");
    // a closed pipe is not an error worth reporting
    let _ = out.write_all(text.as_bytes());
}

fn execute(name: &str, m: &clap::ArgMatches) -> Result<i32, RunError> {
    let exp = runner::find(name).ok_or_else(|| RunError::Config(format!("unknown experiment `{name}`")))?;
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("config `{path}`: {e}")))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let specs = exp.params();
    let mut flags = BTreeMap::new();
    for key in specs.iter().map(|p| p.key).chain(["out"]) {
        if let Some(v) = m.get_one::<String>(key) {
            flags.insert(key.to_string(), v.clone());
        }
    }
    let cfg = ExperimentConfig::resolve(name, &specs, &file, &flags)?;
    let summary = runner::run(&cfg)?;
    for line in &summary.outcome.lines {
        println!("{name}: {line}");
    }
    if let Some(d) = &summary.outcome.divergence {
        eprintln!("{name}: numerical divergence: {d}");
    }
    println!("{name}: wrote {} files to {}", summary.manifest.files.len() + 1, cfg.out_dir.display());
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { runner::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match matches.subcommand() {
        None | Some(("list", _)) => {
            print_catalog();
            ExitCode::SUCCESS
        }
        Some((name, m)) => match execute(name, m) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
