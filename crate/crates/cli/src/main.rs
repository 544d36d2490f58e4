use clap::{Arg, ArgAction, ArgMatches};
use std::path::PathBuf;
use std::process::ExitCode;
use teukolsky_cli::{commands, execute, parse_config, CliError};

fn cli() -> clap::Command {
    let mut app = clap::Command::new("teukolsky")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Teukolsky mode solvers and propagators on non-extreme Kerr")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("TOML or JSON run config, or a manifest.json from an earlier run"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("output directory (overrides the config)"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .value_name("N")
                .global(true)
                .value_parser(clap::value_parser!(usize))
                .help("worker threads; 1 is bit-reproducible"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("U64")
                .global(true)
                .value_parser(clap::value_parser!(u64))
                .help("seed for randomized runs"),
        );
    for c in commands().names() {
        let cmd = commands().get(c).expect("registered");
        let mut sub = clap::Command::new(c).about(cmd.about());
        if c == "compare" {
            sub = sub
                .arg(Arg::new("left").value_parser(clap::value_parser!(PathBuf)).action(ArgAction::Set))
                .arg(Arg::new("right").value_parser(clap::value_parser!(PathBuf)).action(ArgAction::Set));
        }
        app = app.subcommand(sub);
    }
    app
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = m.subcommand().expect("subcommand required");
    let path = sub
        .get_one::<PathBuf>("config")
        .ok_or_else(|| CliError::Invalid("--config is required (M, a, s and k have no defaults)".into()))?;
    let mut cfg = parse_config(path)?;
    if let Some(o) = sub.get_one::<PathBuf>("out") {
        cfg.out = o.clone();
    }
    if let Some(t) = sub.get_one::<usize>("threads") {
        cfg.threads = *t;
    }
    if let Some(s) = sub.get_one::<u64>("seed") {
        cfg.seed = *s;
    }
    if let Some(l) = sub.try_get_one::<PathBuf>("left").ok().flatten() {
        cfg.compare.left = Some(l.clone());
    }
    if let Some(r) = sub.try_get_one::<PathBuf>("right").ok().flatten() {
        cfg.compare.right = Some(r.clone());
    }
    let manifest = execute(name, &cfg)?;
    println!("{}", cfg.out.join(teukolsky_cli::MANIFEST).display());
    for f in &manifest.files {
        println!("{}", cfg.out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let m = cli().get_matches();
    match run(&m) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
