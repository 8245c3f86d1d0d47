use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use leakrep_cli::sweep::{graph_dump, schedule_dump};
use leakrep_cli::{fit_slope, run_sweep_to_output, Cli, CliError, Row};

fn report_fits(rows: &[Row], k: usize) {
    let mut groups: BTreeMap<(leakrep::Mode, usize), Vec<Row>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.mode, row.d)).or_default().push(row.clone());
    }
    for ((mode, d), group) in groups {
        match fit_slope(&group, k) {
            Ok(fit) => eprintln!(
                "fit mode={mode} d={d}: exponent={:.4} intercept={:.4} r_squared={:.4} points={}",
                fit.exponent, fit.intercept, fit.r_squared, fit.points_used
            ),
            Err(e) => eprintln!("fit mode={mode} d={d}: {e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.dump_schedule || cli.dump_graph {
        let mut stdout = std::io::stdout().lock();
        if cli.dump_schedule {
            stdout.write_all(schedule_dump(&cli.sweep)?.as_bytes())?;
        }
        if cli.dump_graph {
            stdout.write_all(graph_dump(&cli.sweep)?.as_bytes())?;
        }
        return Ok(());
    }
    if matches!(cli.fit, Some(k) if k < 2) {
        return Err(CliError::Config { flag: "--fit", message: "K must be at least 2".into() });
    }
    let rows = run_sweep_to_output(&cli.sweep)?;
    if let Some(k) = cli.fit {
        report_fits(&rows, k);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
