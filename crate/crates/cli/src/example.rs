//! End-to-end run on the bundled third-order channel at one bit per use,
//! with a report of every reference quantity and its tolerance.

use std::path::PathBuf;

use clap::Args;
use feedcap::coding::analog_mse;
use feedcap::{power_for_rate, run_analog, run_digital, ChannelModel, SimConfig};
use serde::Serialize;

use crate::{ensure_dir, print_design, CmdResult, Failure, EXIT_NUMERICAL};

const RATE: f64 = 1.0;
const PE_HORIZON: usize = 27;
const EPSILON: f64 = 0.2;
const SLOPE_HORIZON: usize = 200;
const POWER_HORIZON: usize = 500;

#[derive(Args)]
pub struct ExampleArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value = "example_out")]
    out: PathBuf,
    /// Digital trials at every horizon up to T = 27.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    analog_trials: usize,
}

#[derive(Serialize)]
struct Item {
    name: &'static str,
    value: f64,
    reference: f64,
    tolerance: f64,
    delta: f64,
    passed: bool,
}

fn item(name: &'static str, value: f64, reference: f64, tolerance: f64) -> Item {
    let delta = value - reference;
    Item {
        name,
        value,
        reference,
        tolerance,
        delta,
        passed: delta.abs() <= tolerance,
    }
}

#[derive(Serialize)]
struct Report {
    seed: u64,
    items: Vec<Item>,
}

pub fn run(args: ExampleArgs) -> CmdResult {
    ensure_dir(&args.out)?;
    let design = power_for_rate(&ChannelModel::isi3(), RATE)?;
    design.write(args.out.join("design.json"))?;
    print_design(&design)?;

    let digital = run_digital(&design, &SimConfig::digital(args.trials, PE_HORIZON, EPSILON, args.seed))?;
    digital.export(&args.out.join("digital"))?;
    let mut analog_cfg = SimConfig::analog(args.analog_trials, POWER_HORIZON, args.seed);
    analog_cfg.mse_checkpoints = vec![5, 10, 20, 50, 100, SLOPE_HORIZON];
    let analog = run_analog(&design, &analog_cfg)?;
    analog.export(&args.out.join("analog"))?;

    let pe = digital.pe.last().expect("the final horizon always has a codebook");
    let slope = -analog_mse(&design, SLOPE_HORIZON)?.determinant().log2() / (2.0 * (SLOPE_HORIZON + 1) as f64);
    let power = analog.avg_power_trace[POWER_HORIZON];
    let items = vec![
        item("encoder order n*", design.n_star as f64, 1.0, 0.0),
        item("|leading entry|", design.a_star[(design.n_star, 0)].abs(), 2.0, 1e-12),
        item("a_1", design.a_f.first().copied().unwrap_or(f64::NAN), -0.887, 0.01),
        item("steady power", design.power, 0.743, 0.005),
        item("steady power [dB]", design.power_db(), -1.290, 0.03),
        item("K_e", design.ke, 4.0, 1e-6),
        // two binomial standard deviations
        item("PE at T=27, empirical vs theory", pe.pe_emp, pe.pe_theory, 2.0 * pe.pe_emp_sigma),
        item("analog MSE exponent at T=200", slope, RATE, 0.01),
        item("average power at T=500", power, design.power, 0.05 * design.power),
    ];

    println!();
    println!("{:<34} {:>12} {:>12} {:>10}  result", "quantity", "value", "reference", "tol");
    for i in &items {
        println!(
            "{:<34} {:>12.6} {:>12.6} {:>10.2e}  {}",
            i.name,
            i.value,
            i.reference,
            i.tolerance,
            if i.passed { "pass" } else { "FAIL" }
        );
    }
    let report = Report {
        seed: args.seed,
        items,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::new(EXIT_NUMERICAL, e.to_string()))?;
    std::fs::write(args.out.join("report.json"), text).map_err(|e| Failure::from(feedcap::Error::from(e)))?;
    println!("wrote {}", args.out.display());

    let misses: Vec<String> = report
        .items
        .iter()
        .filter(|i| !i.passed)
        .map(|i| format!("{}: delta {:+.3e} exceeds {:.3e}", i.name, i.delta, i.tolerance))
        .collect();
    if misses.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_NUMERICAL, misses.join("; ")))
    }
}
