//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

use metasyn::crossbar::{run_lifetime_hw, ComparatorSetup, Crossbar};
use metasyn::device::{
    apply_pulse_with, calibrate_metastate_table, program_transition, window, DeviceParams,
    DeviceState, NoiseModel, PulseSpec,
};
use metasyn::experiment::{
    run_comparison, sweep_cf, ExperimentSpec, Realization, SweepResult, Variant,
};
use metasyn::network::{pattern_set, run_lifetime, NetworkConfig, SynapseModel};
use metasyn::rng::{stream_rng, Stream};
use metasyn::synapse::{MetaState, UpdateDirection};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn crossing(r: &SweepResult, model: SynapseModel, hardware: bool) -> f64 {
    r.summary_for(model, hardware)
        .expect("model present")
        .crossing_mean
}

fn final_learning(r: &SweepResult, model: SynapseModel, hardware: bool) -> Vec<(u64, f64)> {
    r.traces
        .iter()
        .filter(|t| t.realization == Realization { model, hardware })
        .map(|t| (t.seed, t.trace.final_learning().unwrap()))
        .collect()
}

fn comparison() -> (SweepResult, f64) {
    let start = Instant::now();
    let sw = run_comparison(&ExperimentSpec {
        models: vec![SynapseModel::Binary, SynapseModel::Multistate],
        ..ExperimentSpec::default()
    })
    .unwrap();
    (sw, start.elapsed().as_secs_f64())
}

fn criterion_1(sw: &SweepResult, secs: f64) -> Outcome {
    let b = crossing(sw, SynapseModel::Binary, false);
    let m = crossing(sw, SynapseModel::Multistate, false);
    let ratio = m / b;
    outcome(
        (1.7..=2.6).contains(&ratio) && (15.0..=30.0).contains(&b) && (35.0..=60.0).contains(&m),
        format!("binary {b:.1}, multistate {m:.1}, ratio {ratio:.3} ({secs:.1} s)"),
    )
}

fn criterion_2(sw: &SweepResult) -> Outcome {
    let hw = run_comparison(&ExperimentSpec {
        software: false,
        hardware: true,
        models: vec![SynapseModel::Binary, SynapseModel::Multistate],
        ..ExperimentSpec::default()
    })
    .unwrap();
    let b = crossing(&hw, SynapseModel::Binary, true);
    let m = crossing(&hw, SynapseModel::Multistate, true);
    let mut worse = 0;
    let mut total = 0;
    for model in [SynapseModel::Binary, SynapseModel::Multistate] {
        for ((s1, l_sw), (s2, l_hw)) in final_learning(sw, model, false)
            .into_iter()
            .zip(final_learning(&hw, model, true))
        {
            assert_eq!(s1, s2);
            total += 1;
            worse += usize::from(l_hw <= l_sw);
        }
    }
    outcome(
        (16.0..=30.0).contains(&b) && (38.0..=58.0).contains(&m) && worse == total,
        format!(
            "hw binary {b:.1}, hw multistate {m:.1}, hw learning <= sw on {worse}/{total} runs"
        ),
    )
}

fn criterion_3(sw: &SweepResult) -> Outcome {
    let mean = |m| {
        let v = final_learning(sw, m, false);
        v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64
    };
    let b = mean(SynapseModel::Binary);
    let m = mean(SynapseModel::Multistate);
    outcome(
        b >= m && b >= 0.95 && (0.84..=0.97).contains(&m),
        format!("learning[100] binary {b:.4}, multistate {m:.4}"),
    )
}

fn criterion_4() -> Outcome {
    let r = sweep_cf(&ExperimentSpec {
        variant: Variant::SweepCf,
        c_grid: vec![0.25],
        f_grid: vec![0.1, 0.5, 0.9],
        ..ExperimentSpec::default()
    })
    .unwrap();
    let at = |f| r.cell(0.25, f).unwrap().mean_at_end.unwrap();
    let (lo, mid, hi) = (at(0.1), at(0.5), at(0.9));
    outcome(
        mid < lo && mid < hi,
        format!("mean[100] at C=0.25: f=0.1 {lo:.4}, f=0.5 {mid:.4}, f=0.9 {hi:.4}"),
    )
}

fn criterion_5() -> Outcome {
    let cell = |c: f64, f: f64| {
        let r = sweep_cf(&ExperimentSpec {
            variant: Variant::SweepCf,
            hardware: true,
            c_grid: vec![c],
            f_grid: vec![f],
            ..ExperimentSpec::default()
        })
        .unwrap();
        r.cells[0].mean_at_end.unwrap()
    };
    let sparse = cell(0.1, 0.25);
    let dense = cell(0.5, 0.9);
    outcome(
        dense <= sparse - 0.10,
        format!("hw mean[100]: (C=0.1, f=0.25) {sparse:.4}, (C=0.5, f=0.9) {dense:.4}"),
    )
}

fn criterion_6() -> Outcome {
    let p = DeviceParams::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in 1..=4u16 {
        let table = calibrate_metastate_table(&p, n).unwrap();
        let xs: Vec<f64> = table.plateaus().iter().map(|e| e.1).collect();
        pass &= xs.len() == 2 * n as usize && xs.windows(2).all(|w| w[0] < w[1]);
        let ratio = table.plastic_ratio(&p);
        pass &= (4.0..=5.0).contains(&ratio);
        for (i, &(m, x)) in table.plateaus().iter().enumerate() {
            for dir in [UpdateDirection::Potentiate, UpdateDirection::Depress] {
                let after =
                    program_transition(DeviceState { x }, dir, &p, &table, &NoiseModel::off());
                let expected = if dir == UpdateDirection::Potentiate {
                    (i + 1).min(xs.len() - 1)
                } else {
                    i.saturating_sub(1)
                };
                pass &= table.decode(after) == table.plateaus()[expected].0;
                pass &= table.decode(after) == m.transition(dir);
            }
        }
        if n == 3 {
            notes.push(format!("{} plateaus, ratio {ratio:.4}", xs.len()));
        }
    }
    outcome(
        pass,
        format!(
            "n=3: {}; adjacent-plateau pulses checked for n=1..4",
            notes.join("")
        ),
    )
}

fn criterion_7() -> Outcome {
    let p = DeviceParams::default();
    let mut runner = TestRunner::new(Config {
        cases: 256,
        ..Config::default()
    });
    let pulses = runner.run(
        &(
            0.0f64..=1.0,
            proptest::collection::vec((any::<bool>(), 1e-7f64..30e-6), 1..20),
            any::<u64>(),
        ),
        |(x0, train, seed)| {
            let mut rng = stream_rng(seed, Stream::ProgrammingNoise);
            let mut s = DeviceState::new(x0).unwrap();
            for (positive, duration) in train {
                let amp = if positive { 0.6 } else { -0.6 };
                let pulse = PulseSpec::new(amp, duration, PulseSpec::DEFAULT_DT).unwrap();
                s = apply_pulse_with(s, &pulse, &p, Some(0.25), &mut rng).unwrap();
            }
            prop_assert_eq!(s.x.to_bits(), x0.to_bits());
            Ok(())
        },
    );
    let table = calibrate_metastate_table(&p, 3).unwrap();
    let mut runner = TestRunner::new(Config {
        cases: 48,
        ..Config::default()
    });
    let rows = runner.run(
        &(
            2usize..12,
            2usize..10,
            0.2f64..=1.0,
            0.2f64..=0.9,
            any::<u64>(),
        ),
        |(n_in, n_out, c, f, seed)| {
            let cfg = NetworkConfig {
                n_in,
                n_out,
                connectivity: c,
                activity: f,
                seed,
                ..NetworkConfig::default()
            };
            prop_assume!(cfg.validate().is_ok());
            let mut xb = Crossbar::new(&cfg, &p, &table).unwrap();
            let cmp = ComparatorSetup::default().resolve(&xb);
            let mut rng = stream_rng(seed, Stream::ProgrammingNoise);
            for (step, pat) in pattern_set(&cfg, 5).unwrap().iter().enumerate() {
                let before = xb.devices().to_vec();
                xb.train_two_phase(pat, &cmp, Some(0.25), &mut rng, step, None)
                    .unwrap();
                for i in (0..n_in).filter(|&i| !pat.input[i]) {
                    for j in 0..n_out {
                        prop_assert_eq!(
                            xb.device(i, j).x.to_bits(),
                            before[i * n_out + j].x.to_bits()
                        );
                    }
                }
            }
            Ok(())
        },
    );
    outcome(
        pulses.is_ok() && rows.is_ok(),
        format!(
            "0.6 V trains: {}; inactive rows during training: {}",
            pulses
                .as_ref()
                .map_or_else(|e| e.to_string(), |_| "bit-identical".into()),
            rows.as_ref()
                .map_or_else(|e| e.to_string(), |_| "bit-identical".into())
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = DeviceParams::default();
    let edges = window(0.0, &p) == 0.0 && window(1.0, &p) == 0.0;
    let mut rng = stream_rng(2024, Stream::ProgrammingNoise);
    let mut s = DeviceState::new(0.5).unwrap();
    let mut bounded = true;
    for _ in 0..10_000 {
        let amp = rng.random_range(-3.0..3.0);
        let duration = rng.random_range(1e-7..30e-6);
        let pulse = PulseSpec::new(amp, duration, PulseSpec::DEFAULT_DT).unwrap();
        s = apply_pulse_with(s, &pulse, &p, Some(0.25), &mut rng).unwrap();
        bounded &= (0.0..=1.0).contains(&s.x);
    }
    outcome(
        edges && bounded,
        format!(
            "f_w(0) = {}, f_w(1) = {}, 10^4 random pulses bounded: {bounded}",
            window(0.0, &p),
            window(1.0, &p)
        ),
    )
}

fn criterion_9() -> Outcome {
    let base = NetworkConfig::default();
    let mut binary_match = 0;
    for seed in 0..10 {
        let ms = run_lifetime(
            &base
                .with_model(SynapseModel::Multistate)
                .with_seed(seed)
                .with_levels(1),
            100,
        )
        .unwrap();
        let bin =
            run_lifetime(&base.with_model(SynapseModel::Binary).with_seed(seed), 100).unwrap();
        binary_match += usize::from(ms == bin);
    }
    let params = DeviceParams::default().without_leakage();
    let mut hw_match = 0;
    let seeds = 3;
    for seed in 0..seeds {
        let cfg = base.with_seed(seed);
        let table = calibrate_metastate_table(&params, cfg.effective_levels()).unwrap();
        let hw = run_lifetime_hw(
            &cfg,
            100,
            &params,
            &table,
            &ComparatorSetup::Ideal,
            &NoiseModel::off(),
        )
        .unwrap();
        let sw = run_lifetime(&cfg, 100).unwrap();
        hw_match += usize::from(hw == sw);
    }
    outcome(
        binary_match == 10 && hw_match == seeds as usize,
        format!("n_levels=1 == binary on {binary_match}/10 seeds; leak-free crossbar == ideal on {hw_match}/{seeds} seeds"),
    )
}

fn criterion_10() -> Outcome {
    let p = DeviceParams::default();
    let mut matched = 0;
    for seed in 0..20u64 {
        let n = 1 + (seed % 4) as u16;
        let table = calibrate_metastate_table(&p, n).unwrap();
        let mut rng = stream_rng(seed, Stream::Transitions);
        let mut meta = MetaState::plastic(metasyn::Efficacy::from_bit(rng.random()), n).unwrap();
        let mut dev = table.state_of(meta);
        let mut ok = true;
        for _ in 0..100 {
            let dir = if rng.random() {
                UpdateDirection::Potentiate
            } else {
                UpdateDirection::Depress
            };
            meta = meta.transition(dir);
            dev = program_transition(dev, dir, &p, &table, &NoiseModel::off());
            ok &= table.decode(dev) == meta;
        }
        matched += usize::from(ok);
    }
    outcome(
        matched == 20,
        format!("{matched}/20 seeds decode identically over 100 steps"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (sw, secs) = comparison();
    let results = [
        ("capacity ratio", criterion_1(&sw, secs)),
        ("hardware crossings", criterion_2(&sw)),
        ("learning-accuracy ordering", criterion_3(&sw)),
        ("f = 0.5 dip", criterion_4()),
        ("hardware dense-activity failure", criterion_5()),
        ("device calibration", criterion_6()),
        ("half-select immunity", criterion_7()),
        ("window and boundedness", criterion_8()),
        ("reductions", criterion_9()),
        ("device/behavior equivalence", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
