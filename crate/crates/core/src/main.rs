use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gulp_core::app::report::{parse_scores, render_report};
use gulp_core::app::Config;
use gulp_core::classifier::{parse_verbal_category, Taxonomy, FIELD_TEST_ROWS};
use gulp_core::domain::normalize_label;
use gulp_core::gsm::{JobStatus, SmsJob};
use gulp_core::sim::modem::send_one;
use gulp_core::sim::{escape_bytes, parse_scenario, run, FaultMode, LinkEvent};

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   check failed (taxonomy mismatch, SMS job failed)
  2   input file missing or unreadable
  3   invalid config
  4   invalid scenario
  5   cannot write output
  6   invalid scores file
  64  usage error";

#[derive(Parser)]
#[command(name = "gulp", version, about = "Waste segregation bin controller and simulator", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario and write its event log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "GULP_CONFIG")]
        config: Option<PathBuf>,
        /// Overrides `sim.seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate characteristic means with their Likert interpretation.
    Report {
        /// Lines of `<characteristic> TAB <mean>`.
        #[arg(long)]
        scores: PathBuf,
    },
    /// Check the builtin taxonomy against the field-test table.
    TaxonomyCheck,
    /// Send one SMS through the mock modem and print the exchange.
    SmsDemo {
        #[arg(long, env = "GULP_CONFIG")]
        config: Option<PathBuf>,
        /// Recipient; defaults to the first configured one.
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value = "GULP ALERT: BIODEGRADABLE bin FULL (100%) at t=0.0s")]
        body: String,
        /// Fault to inject before sending, as `<mode>:<count>`; repeatable.
        #[arg(long = "fault", value_parser = parse_fault)]
        faults: Vec<(FaultMode, u32)>,
    },
}

fn parse_fault(s: &str) -> Result<(FaultMode, u32), String> {
    let (mode, count) = s.split_once(':').unwrap_or((s, "1"));
    let mode = FaultMode::from_token(mode)
        .ok_or_else(|| format!("unknown fault mode `{mode}` (error_reply, silence, garbage_bytes)"))?;
    let count: u32 = count.parse().ok().filter(|&c| c >= 1).ok_or("count must be a positive integer")?;
    Ok((mode, count))
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = read_input(p)?;
            Config::parse(&text).map_err(|e| fail(3, format!("{}: {e}", p.display())))
        }
    }
}

fn cmd_run(scenario: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let text = read_input(scenario)?;
    let scenario = parse_scenario(&text).map_err(|e| fail(4, format!("{}: {e}", scenario.display())))?;
    let outcome = run(&scenario, seed.unwrap_or(cfg.seed), &cfg);
    outcome.log.write_to(out).map_err(|e| fail(5, e.to_string()))?;
    let s = &outcome.summary;
    println!("deposits      {} ({} busy)", s.deposits, s.busy);
    println!("released      {}", s.released);
    for (i, n) in s.per_station.iter().enumerate() {
        let category = gulp_core::Station::ALL[i].category().token();
        println!("station {i}     {n} ({category}, {} in bin)", s.bin_counts[i]);
    }
    println!("alerts        {} raised, {} suppressed", s.alerts_raised, s.alerts_suppressed);
    println!("sms           {} sent, {} failed", s.sms_sent, s.sms_failed);
    println!("final soc     {:.4}", s.final_soc);
    println!("final state   {}", s.final_state);
    println!("event log     {} ({} records)", out.display(), outcome.log.len());
    Ok(())
}

fn cmd_report(scores: &Path) -> Result<(), Failure> {
    let text = read_input(scores)?;
    let parsed = parse_scores(&text).map_err(|e| fail(6, format!("{}: {e}", scores.display())))?;
    let table = render_report(&parsed).map_err(|e| fail(6, format!("{}: {e}", scores.display())))?;
    print!("{table}");
    Ok(())
}

fn cmd_taxonomy_check() -> Result<(), Failure> {
    let taxonomy = Taxonomy::builtin();
    let mut mismatches = 0;
    for (raw, verbal) in FIELD_TEST_ROWS {
        let expected = parse_verbal_category(verbal).expect("table categories are well formed");
        let label = normalize_label(raw).expect("table labels are non-empty");
        let got = taxonomy.get(&label);
        let ok = got == Some(expected);
        if !ok {
            mismatches += 1;
        }
        let got = got.map_or("MISSING", |c| c.token());
        println!("{} {:<28} {:<18} {}", if ok { "ok  " } else { "FAIL" }, label, expected.token(), got);
    }
    let extra = taxonomy.len().saturating_sub(FIELD_TEST_ROWS.len());
    println!("{}/{} rows match, {} extra labels", FIELD_TEST_ROWS.len() - mismatches, FIELD_TEST_ROWS.len(), extra);
    if mismatches > 0 || extra > 0 {
        return Err(fail(1, format!("{mismatches} mismatches")));
    }
    Ok(())
}

fn cmd_sms_demo(config: Option<&Path>, to: Option<&str>, body: &str, faults: &[(FaultMode, u32)]) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let recipient = match to {
        Some(r) => r.to_string(),
        None => cfg
            .gsm
            .recipients
            .first()
            .map(|r| r.as_str().to_string())
            .ok_or_else(|| fail(64, "no recipient configured; pass --to"))?,
    };
    let job = SmsJob::new(&recipient, body).map_err(|e| fail(64, e.to_string()))?;
    let (finished, events) = send_one(&cfg.gsm, job, faults);
    for e in &events {
        match e {
            LinkEvent::Tx(b) => println!(">> {}", escape_bytes(b)),
            LinkEvent::Rx(b) => println!("<< {}", escape_bytes(b)),
            LinkEvent::Token(t) => println!("   {t:?}"),
            LinkEvent::Finished(_) => {}
        }
    }
    match finished.status {
        JobStatus::Sent(r) => {
            println!("sent to {recipient}: msg_ref {r}, {} attempt(s)", finished.attempts);
            Ok(())
        }
        JobStatus::Failed(reason) => Err(fail(1, format!("failed after {} attempt(s): {reason}", finished.attempts))),
        _ => unreachable!("send_one returns finished jobs"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { scenario, config, seed, out } => cmd_run(scenario, config.as_deref(), *seed, out),
        Command::Report { scores } => cmd_report(scores),
        Command::TaxonomyCheck => cmd_taxonomy_check(),
        Command::SmsDemo { config, to, body, faults } => cmd_sms_demo(config.as_deref(), to.as_deref(), body, faults),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gulp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
