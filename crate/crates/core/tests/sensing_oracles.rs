mod common;

use common::{ks_statistic, mean_std, rc_closed_form, rng};
use maxmin_core::channel::complex_noise;
use maxmin_core::design::design;
use maxmin_core::montecarlo::{ExperimentConfig, Simulator};
use maxmin_core::sensing::{energy_detector, matched_filter, Detector};
use maxmin_core::{Decision, DetectorConfig, IqBuffer, PulseSpec, SensingMode, SpurConfig};

fn simulator(cfg: &ExperimentConfig) -> Simulator {
    let w = design(&PulseSpec::with_rolloff(cfg.rolloff).unwrap()).unwrap();
    cfg.simulator(&w).unwrap()
}

fn config(snr_db: f64, n_symbols: usize) -> ExperimentConfig {
    ExperimentConfig {
        snr_db,
        n_symbols,
        ..Default::default()
    }
}

#[test]
fn matched_filtered_noise_has_raised_cosine_correlation() {
    let spec = PulseSpec::with_rolloff(0.25).unwrap();
    let n = 400_000;
    let noise = IqBuffer::new(complex_noise(n, 1.0, &mut rng(31)), spec.sample_rate_hz()).unwrap();
    let y = matched_filter(&noise, &spec).unwrap().buffer;
    let taps = spec.tap_count();
    let y = &y.samples()[taps..n - taps];
    let r0: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    for lag in 1..(3 * spec.oversampling) {
        let r: f64 = y
            .iter()
            .zip(&y[lag..])
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>()
            / r0;
        let t = lag as f64 / spec.oversampling as f64;
        let expect = if lag % spec.oversampling == 0 {
            0.0
        } else {
            rc_closed_form(t, 0.25, 1.0)
        };
        assert!((r - expect).abs() < 0.03, "lag {lag}: {r} vs {expect}");
    }
}

#[test]
fn statistic_is_invariant_to_input_scaling() {
    let sim = simulator(&config(-15.0, 1 << 12));
    for trial in 0..4 {
        for h1 in [false, true] {
            let raw = sim.received_window(5, trial, h1).unwrap();
            let base = sim.detector().statistics(raw.samples()).unwrap();
            for c in [1e-3, 1e3] {
                let scaled = sim.detector().statistics(raw.scaled(c).samples()).unwrap();
                for (a, b) in base.iter().zip(&scaled) {
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn noise_only_statistic_is_centred_and_identical_across_phases() {
    let sim = simulator(&config(0.0, 1 << 12));
    let rows: Vec<Vec<f64>> = (0..1200)
        .map(|t| sim.realize(8, t, false).unwrap().t_values)
        .collect();
    let crit = 1.63 * (2.0 / rows.len() as f64).sqrt();
    let phase = |p: usize| rows.iter().map(|r| r[p]).collect::<Vec<_>>();
    let p0 = phase(0);
    let (m, s) = mean_std(&p0);
    assert!(m.abs() < 0.1 * s, "mean {m} sd {s}");
    for p in 1..8 {
        let d = ks_statistic(&p0, &phase(p));
        assert!(d < crit, "phase {p}: D = {d}");
    }
}

#[test]
fn largest_branch_identifies_the_timing_offset() {
    for k in 0..8 {
        let mut cfg = config(0.0, 1 << 10);
        cfg.timing_offset_frac = k as f64 / 8.0;
        let sim = simulator(&cfg);
        assert_eq!(sim.true_phase(1, 0), k);
        for trial in 0..3 {
            let raw = sim.received_window(1, trial, true).unwrap();
            let res = sim.detector().sense(raw.samples(), &mut rng(0)).unwrap();
            assert_eq!(res.chosen_branch, k, "offset {k}/8: {:?}", res.t_values);
            assert_eq!(res.decision, Decision::H1);
        }
    }
}

#[test]
fn small_carrier_offset_keeps_most_of_the_statistic() {
    let clean = simulator(&config(-12.0, 1 << 12));
    let mut cfg = config(-12.0, 1 << 12);
    cfg.cfo = 0.05;
    let offset = simulator(&cfg);
    let t = |sim: &Simulator| -> f64 {
        (0..20)
            .map(|k| {
                sim.realize(2, k, true)
                    .unwrap()
                    .t_values
                    .iter()
                    .cloned()
                    .fold(f64::MIN, f64::max)
            })
            .sum::<f64>()
            / 20.0
    };
    let (a, b) = (t(&clean), t(&offset));
    // A residual rotation of 0.05 cycles per symbol costs some combining
    // gain (about 15% of T here) but leaves the detection margin intact.
    assert!(a > 10.0);
    assert!(b > 0.75 * a && b < a, "{a} vs {b}");
}

#[test]
fn published_threshold_gives_ten_percent_false_alarms() {
    let sim = simulator(&config(0.0, 1 << 15));
    let trials = 2000;
    let hits = (0..trials)
        .filter(|&t| {
            let r = sim.realize(17, t, false).unwrap();
            r.t_values[r.pick] > 2.96
        })
        .count();
    let pf = hits as f64 / trials as f64;
    assert!((pf - 0.1).abs() <= 0.02, "{pf}");
}

#[test]
fn spur_is_removed_by_the_quarter_rate_shift() {
    let base = config(0.0, 1 << 12);
    let mut spur_cfg = base.clone();
    spur_cfg.spur = Some(SpurConfig {
        amplitude: 3.0,
        bandwidth_hz: 0.25,
        center_hz: 0.0,
    });
    let clean = simulator(&base);
    let spurred = simulator(&spur_cfg);
    assert!(spurred.detector().config().spur_shift);
    let mut unshifted_cfg = spurred.detector().config().clone();
    unshifted_cfg.spur_shift = false;
    let unshifted = Detector::new(unshifted_cfg).unwrap();
    let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
    for t in 0..300 {
        a.push(clean.realize(4, t, false).unwrap().t_values[0]);
        b.push(spurred.realize(4, t, false).unwrap().t_values[0]);
        let raw = spurred.received_window(4, t, false).unwrap();
        c.push(unshifted.statistics(raw.samples()).unwrap()[0]);
    }
    let (ma, sa) = mean_std(&a);
    let (mb, _) = mean_std(&b);
    let (mc, _) = mean_std(&c);
    assert!(
        (mb - ma).abs() < 0.3 * sa,
        "shifted spur moves the mean: {ma} -> {mb}"
    );
    assert!(
        (mc - ma).abs() > sa,
        "in-band spur should bias the statistic: {ma} -> {mc}"
    );
}

#[test]
fn threshold_extremes_and_energy_baseline() {
    let sim = simulator(&config(0.0, 256));
    let raw = sim.received_window(3, 0, false).unwrap();
    let mut cfg = sim.detector().config().clone();
    cfg.threshold = f64::NEG_INFINITY;
    for mode in SensingMode::ALL {
        cfg.mode = mode;
        let r = Detector::new(cfg.clone())
            .unwrap()
            .sense(raw.samples(), &mut rng(1))
            .unwrap();
        assert_eq!(r.decision, Decision::H1);
    }
    let zero = IqBuffer::zeros(1000, 8.0).unwrap();
    assert_eq!(
        energy_detector(&zero, 1.0, 1000, 0.5).unwrap(),
        Decision::H0
    );
    let bad = DetectorConfig::new(cfg.weights.clone(), 8, SensingMode::AsyncEst, 0.0);
    assert!(bad.is_err());
}
