use std::io::Write;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Arg, ArgAction, ArgMatches};
use sparsedom::config::RunConfig;
use sparsedom::runner::{self, Command};

const CONFIG_HELP: &str = "\
Config files hold one `key = value` per line; `#` starts a comment. See the README
for every key. Exit status: 0 when all assertions pass, 2 when one fails, 1 on a
configuration, precondition or I/O error.";

fn common_args() -> Vec<Arg> {
    vec![
        Arg::new("config")
            .value_name("CONFIG")
            .help("key = value configuration file"),
        Arg::new("set")
            .long("set")
            .value_name("KEY=VALUE")
            .action(ArgAction::Append)
            .help("Override one configuration key (repeatable)"),
        Arg::new("scope")
            .long("scope")
            .value_name("dyadic|all")
            .help("Cube scope for weight constants"),
        Arg::new("seed")
            .long("seed")
            .value_name("N")
            .value_parser(clap::value_parser!(u64))
            .help("First seed"),
        Arg::new("out")
            .long("out")
            .value_name("PATH")
            .help("Write the CSV here instead of stdout"),
        Arg::new("no-timestamp")
            .long("no-timestamp")
            .action(ArgAction::SetTrue)
            .help("Omit the timestamp comment line from the CSV"),
    ]
}

fn cli() -> clap::Command {
    let mut app = clap::Command::new("sparsedom")
        .about("Sparse operators and multilinear weight characteristics on dyadic grids")
        .after_help(CONFIG_HELP)
        .subcommand_required(true)
        .arg_required_else_help(true);
    for c in Command::ALL {
        app = app.subcommand(
            clap::Command::new(c.name())
                .args(common_args())
                .after_help(format!(
                    "CSV columns: label, {}\n\n{CONFIG_HELP}",
                    c.columns()
                )),
        );
    }
    app
}

fn load(matches: &ArgMatches) -> anyhow::Result<RunConfig> {
    let mut config = match matches.get_one::<String>("config") {
        Some(path) => {
            RunConfig::read_file(path).with_context(|| format!("reading config {path}"))?
        }
        None => RunConfig::default(),
    };
    if let Some(sets) = matches.get_many::<String>("set") {
        for s in sets {
            config.set(s)?;
        }
    }
    if let Some(scope) = matches.get_one::<String>("scope") {
        config.insert("scope", scope);
    }
    if let Some(seed) = matches.get_one::<u64>("seed") {
        config.insert("seed", seed);
    }
    Ok(config)
}

fn execute(command: Command, matches: &ArgMatches) -> anyhow::Result<bool> {
    let config = load(matches)?;
    let report = runner::run(command, &config)?;
    let mut csv = format!("# {} {}\n", report.name, report.instance);
    if !matches.get_flag("no-timestamp") {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        csv.push_str(&format!("# generated-unix={secs}\n"));
    }
    for note in &report.notes {
        csv.push_str(&format!("# note: {note}\n"));
    }
    for (k, v) in &report.metrics {
        csv.push_str(&format!("# {k}={v:.12e}\n"));
    }
    csv.push_str(&report.to_csv());
    match matches.get_one::<String>("out") {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {path}"))?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    println!("{}", report.summary_line());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command: Command = name.parse().expect("registered subcommand");
    match execute(command, sub) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
