use feedcap::sim::{binomial_sigma, read_pe_csv, read_power_csv, trial_rng};
use feedcap::{power_for_rate, run_analog, run_digital, ChannelModel, EncoderDesign, GainSchedule, SimConfig, SimResult};
use rand::Rng;
use rand_distr::StandardNormal;

fn design() -> EncoderDesign {
    power_for_rate(&ChannelModel::isi3(), 1.0).unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let d = design();
    let cfg = SimConfig::digital(2000, 20, 0.2, 11);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| run_digital(&d, &cfg)).unwrap();
    let b = wide.install(|| run_digital(&d, &cfg)).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 12;
    assert_ne!(run_digital(&d, &other).unwrap().errors, a.errors);

    let analog = SimConfig::analog(500, 30, 3);
    let a = serial.install(|| run_analog(&d, &analog)).unwrap();
    let b = wide.install(|| run_analog(&d, &analog)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_noise_is_error_free() {
    let d = design();
    let mut cfg = SimConfig::digital(500, 27, 0.2, 1);
    cfg.noise_scale = 0.0;
    let r = run_digital(&d, &cfg).unwrap();
    assert!(r.pe.iter().all(|row| row.pe_emp == 0.0));

    let mut cfg = SimConfig::analog(100, 60, 1);
    cfg.noise_scale = 0.0;
    let r = run_analog(&d, &cfg).unwrap();
    assert!(r.sq_error_trace[60] < 1e-20);
    assert!(r.avg_power_trace.iter().all(|p| p.is_finite()));
}

#[test]
fn trial_streams_are_standard_normal() {
    let n = 1_000_000;
    let mut rng = trial_rng(2024, 7);
    let xs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (nf - 1.0);
    assert!(mean.abs() < 4.0 / nf.sqrt(), "mean {mean}");
    // the sample variance of N(0,1) has standard deviation sqrt(2/n)
    assert!((var - 1.0).abs() < 4.0 * (2.0 / nf).sqrt(), "variance {var}");
    assert!(lag1.abs() < 4.0 / nf.sqrt(), "lag-1 covariance {lag1}");

    let first: f64 = trial_rng(2024, 8).sample(StandardNormal);
    assert_ne!(first, xs[0]);
}

#[test]
fn export_round_trips() {
    let d = design();
    let r = run_digital(&d, &SimConfig::digital(300, 25, 0.2, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.export(dir.path()).unwrap();
    assert_eq!(SimResult::read_summary(dir.path()).unwrap(), r);
    assert_eq!(read_pe_csv(&dir.path().join("pe.csv")).unwrap(), r.pe);
    let power = read_power_csv(&dir.path().join("power.csv")).unwrap();
    assert_eq!(power.len(), r.avg_power_trace.len());
    for ((t, p), q) in power.iter().zip(&r.avg_power_trace) {
        assert!((p - q).abs() <= 1e-15 * q.abs(), "t={t}");
    }
    let header = std::fs::read_to_string(dir.path().join("pe.csv")).unwrap();
    assert!(header.starts_with("T,pe_emp,pe_emp_sigma,pe_theory\n"));
}

#[test]
fn empty_tables_keep_their_header() {
    let d = design();
    let mut cfg = SimConfig::analog(10, 5, 1);
    cfg.mse_checkpoints.clear();
    let r = run_analog(&d, &cfg).unwrap();
    assert!(r.pe.is_empty());
    let dir = tempfile::tempdir().unwrap();
    r.export(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("pe.csv")).unwrap();
    assert_eq!(text, "T,pe_emp,pe_emp_sigma,pe_theory\n");
    assert!(read_pe_csv(&dir.path().join("pe.csv")).unwrap().is_empty());
}

#[test]
fn error_probability_falls_with_horizon() {
    let d = design();
    let r = run_digital(&d, &SimConfig::digital(2000, 30, 0.2, 8)).unwrap();
    assert!(r.pe.len() > 5);
    for w in r.pe.windows(2) {
        assert!(w[1].horizon > w[0].horizon);
        assert!(w[1].pe_theory <= w[0].pe_theory);
    }
    // one-message books at the shortest horizons cannot err, so compare to the peak
    let peak = r.pe.iter().map(|row| row.pe_emp).fold(0.0, f64::max);
    assert!(r.pe.last().unwrap().pe_emp < 0.1 * peak);
}

#[test]
fn analog_mse_matches_its_predictor() {
    let d = design();
    for schedule in [GainSchedule::Steady, GainSchedule::TimeVarying] {
        let mut cfg = SimConfig::analog(20_000, 20, 31);
        cfg.schedule = schedule;
        cfg.mse_checkpoints = vec![5, 10, 20];
        let r = run_analog(&d, &cfg).unwrap();
        assert_eq!(r.mse.len(), 3);
        for row in &r.mse {
            for ((e, se), th) in row.entries.iter().zip(&row.entries_se).zip(&row.entries_theory) {
                assert!((e - th).abs() <= 3.0 * se, "{schedule:?} t={} {e} vs {th} (se {se})", row.t);
            }
        }
    }
}

#[test]
fn binomial_sigma_switches_to_wilson() {
    let normal = binomial_sigma(100, 10_000);
    assert!((normal - (0.01f64 * 0.99 / 1e4).sqrt()).abs() < 1e-15);
    // no errors still carries uncertainty
    assert!(binomial_sigma(0, 10_000) > 0.0);
    assert!(binomial_sigma(5, 10_000) > binomial_sigma(0, 10_000));
}
