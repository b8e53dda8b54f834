//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the report lines always reach
//! stdout, in order.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use feedcap::capacity::{feedforward_capacity, gm_capacity};
use feedcap::coding::analog_mse;
use feedcap::finite_horizon::{
    input_power_with_estimator, mmse_fisher_crb, mutual_info_matrix_form, optimal_feedback_generator,
    riccati_information_bits,
};
use feedcap::random::{random_config, random_plant};
use feedcap::riccati::{
    innovation_filter, solve_steady_by_iteration, solve_steady_by_reduction, trajectory, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use feedcap::statespace::{eigen_spectrum, frequency_response};
use feedcap::{
    capacity_for_power, power_for_rate, run_analog, run_digital, theoretical_pe, upper_bound, ChannelModel,
    EncoderDesign, SimConfig,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{estimator_power, least_squares_estimator, logdet, r_squared, strictly_lower};

const RATE_GRID: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn fail(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

fn max_entry_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

fn isi3_design() -> EncoderDesign {
    power_for_rate(&ChannelModel::isi3(), 1.0).expect("rate-one design on the bundled channel")
}

fn design_reproduction() -> Outcome {
    let start = Instant::now();
    let d = match power_for_rate(&ChannelModel::isi3(), 1.0) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let elapsed = start.elapsed();
    let top = d.a_star[(d.n_star, 0)];
    let a1 = d.a_f.first().copied().unwrap_or(f64::NAN);
    let db = d.power_db();
    let ok = d.n_star == 1
        && (top.abs() - 2.0).abs() < 1e-12
        && (a1 + 0.887).abs() <= 0.01
        && (d.power - 0.743).abs() <= 0.005
        && (db + 1.290).abs() <= 0.03
        && elapsed <= Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "n*={} row=({top:+.4}, {a1:.4}) P={:.5} ({db:.4} dB) in {:.2?}",
            d.n_star, d.power, elapsed
        ),
    )
}

fn rate_identity() -> Outcome {
    let ch = ChannelModel::isi3();
    let mut worst = 0.0f64;
    for &r in &RATE_GRID {
        let d = match power_for_rate(&ch, r) {
            Ok(d) => d,
            Err(e) => return fail(e),
        };
        let plant = d.plant().expect("design plant");
        let ke = plant.innovation_variance(&d.sigma_star);
        worst = worst.max((0.5 * ke.log2() - r).abs());
        worst = worst.max((ke - (2.0 * r).exp2()).abs());
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e} over rates {RATE_GRID:?}"))
}

fn two_path_riccati() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut plants = vec![isi3_design().plant().expect("design plant")];
    for _ in 0..20 {
        match random_plant(&mut rng, 3, 3) {
            Ok(p) => plants.push(p),
            Err(e) => return fail(e),
        }
    }
    let mut worst = 0.0f64;
    for p in &plants {
        let (a, b) = match (solve_steady_by_iteration(p, DEFAULT_TOL, DEFAULT_MAX_ITER), solve_steady_by_reduction(p)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return fail(e),
        };
        worst = worst.max(max_entry_gap(&a.sigma, &b.sigma));
    }
    outcome(worst <= 1e-8, format!("max relative entry gap {worst:.2e} on {} plants", plants.len()))
}

fn finite_horizon_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ln2 = std::f64::consts::LN_2;
    let (mut chain, mut power) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let cfg = random_config(&mut rng, 2, 3, 20);
        let rep = match mmse_fisher_crb(&cfg) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let values = [
            mutual_info_matrix_form(&cfg).expect("determinant form"),
            riccati_information_bits(&cfg).expect("Riccati form"),
            0.5 * logdet(&rep.fisher_w) / ln2,
            -0.5 * logdet(&rep.mmse_w) / ln2,
            -0.5 * logdet(&rep.crb_w) / ln2,
        ];
        for a in &values {
            for b in &values {
                chain = chain.max((a - b).abs());
            }
        }
        let plant = cfg.plant().expect("plant");
        let riccati_power = trajectory(&plant, cfg.horizon()).average_power(&plant);
        power = power.max((riccati_power - rep.input_power).abs());
    }
    outcome(
        chain <= 1e-8 && power <= 1e-8,
        format!("information spread {chain:.2e}, power gap {power:.2e} on 20 configurations"),
    )
}

fn feedback_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut gap, mut undercut) = (0.0f64, f64::INFINITY);
    for _ in 0..10 {
        let cfg = random_config(&mut rng, 2, 3, 8);
        let g_hat = match optimal_feedback_generator(&cfg) {
            Ok((_, g)) => g,
            Err(e) => return fail(e),
        };
        let kalman = input_power_with_estimator(&cfg, &g_hat).expect("power");
        let oracle = estimator_power(&cfg, &least_squares_estimator(&cfg));
        gap = gap.max((kalman - oracle).abs().max((estimator_power(&cfg, &g_hat) - kalman).abs()));
        let size = cfg.horizon() + 1;
        for _ in 0..100 {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            let delta = strictly_lower(size, || scale * rng.random_range(-1.0..1.0));
            let perturbed = estimator_power(&cfg, &(&g_hat + delta));
            undercut = undercut.min(perturbed - kalman);
        }
    }
    outcome(
        gap <= 1e-8 && undercut >= -1e-12,
        format!("Kalman vs least squares {gap:.2e}; smallest perturbed excess {undercut:.2e} (1000 perturbations)"),
    )
}

fn gm_cross_oracle() -> Outcome {
    let ch = ChannelModel::isi3();
    let (c, _) = match capacity_for_power(&ch, 0.743) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    let gm = match gm_capacity(&ch, 0.743, 8) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    let gap = (gm.rate - c).abs();
    outcome(gap <= 3e-3, format!("C={c:.7} GM={:.7} gap {gap:.2e} bits", gm.rate))
}

fn all_pass_bode() -> Outcome {
    let d = isi3_design();
    let plant = d.plant().expect("plant");
    let sol = solve_steady_by_reduction(&plant).expect("steady solution");
    let filter = innovation_filter(&plant, &sol).expect("filter");
    let di: f64 = eigen_spectrum(&d.a_star)
        .expect("spectrum")
        .unstable()
        .map(|z| z.norm())
        .product();
    let mut flat = 0.0f64;
    for k in 0..128 {
        let h = frequency_response(&filter, 2.0 * PI * k as f64 / 128.0).expect("response");
        flat = flat.max((h.norm() - di).abs());
    }
    let grid = 8192;
    let bode: f64 = (0..grid)
        .map(|k| {
            frequency_response(&filter, 2.0 * PI * (k as f64 + 0.5) / grid as f64)
                .expect("response")
                .norm()
                .ln()
        })
        .sum::<f64>()
        / grid as f64;
    let bode_gap = (bode - di.ln()).abs();
    outcome(
        flat <= 1e-6 && bode_gap <= 1e-3,
        format!("DI={di:.6}, max |T| deviation {flat:.2e}, Bode gap {bode_gap:.2e}"),
    )
}

fn error_probability() -> Outcome {
    let start = Instant::now();
    let d = isi3_design();
    let r = match run_digital(&d, &SimConfig::digital(10_000, 27, 0.2, 2024)) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let row = r.pe.last().expect("final horizon row");
    let within = (row.pe_emp - row.pe_theory).abs() <= 2.0 * row.pe_emp_sigma;

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in 1..200 {
        let pe = theoretical_pe(&d, t, 0.2).expect("theoretical PE");
        if pe <= 0.0 {
            break;
        }
        if pe < 0.5 {
            xs.push(t as f64);
            ys.push((-pe.ln()).ln());
        }
    }
    let r2 = r_squared(&xs, &ys);
    let elapsed = start.elapsed();
    outcome(
        row.pe_emp < 1e-2 && within && r2 >= 0.98 && elapsed <= Duration::from_secs(600),
        format!(
            "T=27 PE={:.5} +/- {:.5} vs {:.5}; fit R^2={r2:.4} over T={}..{}; {:.2?}",
            row.pe_emp,
            row.pe_emp_sigma,
            row.pe_theory,
            xs.first().copied().unwrap_or(0.0),
            xs.last().copied().unwrap_or(0.0),
            elapsed
        ),
    )
}

fn analog_rate_distortion() -> Outcome {
    let d = isi3_design();
    let mse = match analog_mse(&d, 200) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let slope = -mse.determinant().log2() / (2.0 * 201.0);
    let r = match run_analog(&d, &SimConfig::analog(1000, 500, 77)) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let power = r.avg_power_trace[500];
    let rel = (power - 0.743).abs() / 0.743;
    outcome(
        (slope - 1.0).abs() <= 0.01 && rel <= 0.05,
        format!("slope {slope:.5} at T=200; power {power:.4} at T=500 ({:.2}% off)", 100.0 * rel),
    )
}

fn bound_and_monotonicity() -> Outcome {
    let ch = ChannelModel::isi3();
    let mut last = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for &r in &RATE_GRID {
        let (p, bound) = match (power_for_rate(&ch, r), upper_bound(&ch, r)) {
            (Ok(d), Ok(b)) => (d.power, b),
            (Err(e), _) | (_, Err(e)) => return fail(e),
        };
        ok &= p <= bound * (1.0 + 1e-12) && p >= last;
        notes.push(format!("{p:.4}<={bound:.4}"));
        last = p;
    }
    let mut min_margin = f64::INFINITY;
    for db in [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0] {
        let p = 10f64.powf(db / 10.0);
        let (fb, ff) = match (capacity_for_power(&ch, p), feedforward_capacity(&ch, p)) {
            (Ok((c, _)), Ok(f)) => (c, f),
            (Err(e), _) | (_, Err(e)) => return fail(e),
        };
        min_margin = min_margin.min(fb - ff);
    }
    ok &= min_margin >= 0.0;
    outcome(ok, format!("P(R): {}; min feedback - feedforward {min_margin:.4} bits over -5..20 dB", notes.join(", ")))
}

fn awgn_degeneracy() -> Outcome {
    let ch = ChannelModel::awgn();
    let mut worst = 0.0f64;
    for p in [1.0, 3.0, 15.0] {
        match capacity_for_power(&ch, p) {
            Ok((c, _)) => worst = worst.max((c - 0.5 * (1.0f64 + p).log2()).abs()),
            Err(e) => return fail(e),
        }
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e} at P in {{1, 3, 15}}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("design reproduction", design_reproduction),
        ("steady-state rate identity", rate_identity),
        ("two-path Riccati agreement", two_path_riccati),
        ("finite-horizon oracle chain", finite_horizon_chain),
        ("optimal-feedback optimality", feedback_optimality),
        ("GM cross-oracle", gm_cross_oracle),
        ("all-pass and Bode integral", all_pass_bode),
        ("error probability", error_probability),
        ("analog rate-distortion", analog_rate_distortion),
        ("upper bound and monotonicity", bound_and_monotonicity),
        ("AWGN degeneracy", awgn_degeneracy),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
