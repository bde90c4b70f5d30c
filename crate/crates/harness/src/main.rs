use clap::{Parser, Subcommand};
use riscsi_harness::appendix::{validate_appendix, TOLERANCE};
use riscsi_harness::figures::figure_campaign;
use riscsi_harness::{run_campaign, Campaign, CampaignError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "riscsi", about = "Multi-RIS channel acquisition campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the campaign seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the trials per point (draws for validate-appendix).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign file.
    Run { campaign: PathBuf },
    /// Compare the closed-form cascaded powers with Monte Carlo.
    ValidateAppendix,
    /// Run the shipped campaign of a figure.
    Reproduce { figure: String },
    /// List the shipped figure ids.
    Figures,
}

fn run(cli: &Cli, mut campaign: Campaign) -> Result<(), CampaignError> {
    if let Some(s) = cli.seed {
        campaign.seed = s;
    }
    if let Some(t) = cli.trials {
        campaign.trials = t;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| campaign.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let result = run_campaign(&campaign, cli.threads)?;
    let (csv, json) = result.write(&dir)?;
    eprintln!(
        "{}: {} cells, {} failed trials; wrote {} and {}",
        campaign.name,
        result.cells.len(),
        result.failed_trials(),
        csv.display(),
        json.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { campaign } => Campaign::load(campaign).and_then(|c| run(&cli, c)),
        Command::Reproduce { figure } => figure_campaign(figure).and_then(|c| run(&cli, c)),
        Command::Figures => {
            for id in riscsi_harness::figures::figure_ids() {
                println!("{id}");
            }
            Ok(())
        }
        Command::ValidateAppendix => {
            let draws = cli.trials.unwrap_or(100_000);
            match validate_appendix(draws, cli.seed.unwrap_or(1)) {
                Ok(checks) => {
                    let mut ok = true;
                    for c in &checks {
                        ok &= c.passed();
                        println!(
                            "{} {}: closed form {:.6e}, Monte Carlo {:.6e}, relative error {:.4} (limit {TOLERANCE})",
                            if c.passed() { "PASS" } else { "FAIL" },
                            c.label,
                            c.closed_form,
                            c.monte_carlo,
                            c.relative_error
                        );
                    }
                    if !ok {
                        return ExitCode::FAILURE;
                    }
                    Ok(())
                }
                Err(e) => Err(CampaignError::Invalid(e.to_string())),
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
