//! Exit criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p tasnet-core --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.

mod common;

use std::time::Instant;

use common::*;
use tasnet_core::costmodel::{count_macs, count_params, receptive_field, CostOptions, CostReport, QuantBits};
use tasnet_core::devicefit::{builtin_platforms, check_fit, find_platform, FitOptions};
use tasnet_core::io::{self, WeightStore, WeightTensor};
use tasnet_core::metrics::{pit_si_sdr, si_sdr, SiSdr};
use tasnet_core::model::{build_model, init_random};
use tasnet_core::nn::{self, ConvSpec, Tensor2D, NORM_EPS};
use tasnet_core::reference::{reference_points, ReferenceSource};
use tasnet_core::rng::SplitMix64;
use tasnet_core::{MaskActivation, ScalingConfig};

fn verdict(id: u32, title: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("PASS  criterion {id}: {title}");
    } else {
        println!("FAIL  criterion {id}: {title}");
        for f in failures {
            println!("        {f}");
        }
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:#?}");
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

/// Printed (B, R, C, params K, SI-SDR dB) rows of the reduction sweep,
/// transcribed independently of the shipped reference table.
const PRINTED_REDUCTION_ROWS: [(u32, u32, usize, u64, f64); 24] = [
    (8, 3, 512, 5100, 12.52),
    (6, 3, 512, 3800, 12.80),
    (6, 2, 512, 2600, 12.02),
    (4, 3, 512, 2600, 11.28),
    (8, 1, 512, 1800, 10.36),
    (4, 2, 512, 1800, 10.56),
    (8, 3, 128, 1400, 11.92),
    (6, 1, 512, 1400, 9.77),
    (2, 3, 512, 1400, 8.62),
    (6, 3, 128, 1100, 11.07),
    (2, 2, 512, 1000, 7.41),
    (6, 3, 64, 972, 10.28),
    (8, 3, 64, 825, 10.26),
    (6, 2, 128, 821, 10.27),
    (4, 3, 128, 821, 9.93),
    (8, 1, 128, 619, 9.24),
    (6, 2, 64, 520, 9.18),
    (4, 3, 64, 520, 8.85),
    (2, 3, 128, 518, 7.50),
    (8, 1, 64, 418, 8.31),
    (2, 2, 128, 417, 6.49),
    (6, 1, 64, 367, 7.64),
    (2, 3, 64, 367, 6.77),
    (2, 2, 64, 316, 5.90),
];

/// Printed (B, R, C, params K, [SI-SDR at base 2, 4, 8]) rows of the
/// dilation sweep; `NaN` marks a dash.
const PRINTED_DILATION_ROWS: [(u32, u32, usize, u64, [f64; 3]); 7] = [
    (8, 3, 512, 5100, [12.52, f64::NAN, f64::NAN]),
    (4, 3, 512, 2600, [11.28, 12.02, 11.10]),
    (4, 3, 128, 821, [9.90, 10.17, 9.66]),
    (4, 3, 64, 520, [8.85, 9.21, 8.51]),
    (2, 3, 512, 1400, [8.62, 8.94, 9.44]),
    (2, 3, 128, 518, [7.50, 7.83, 8.02]),
    (2, 3, 64, 367, [6.77, 7.09, 7.26]),
];

#[test]
fn criterion_1_parameter_counts_reproduce_reduction_sweep() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (b, r, c, printed_k, _) in PRINTED_REDUCTION_ROWS {
        let report = CostReport::compute(&ScalingConfig::scaled(b, r, c, 2), &CostOptions::default()).unwrap();
        let ok = within(report.params_k as f64, printed_k as f64, 0.03);
        println!(
            "        ({b},{r},{c}): params_k {} vs printed {printed_k} ({:+.2}%) {}",
            report.params_k,
            100.0 * (report.params_k as f64 / printed_k as f64 - 1.0),
            if ok { "ok" } else { "OUT OF TOLERANCE" }
        );
        if !ok {
            failures.push(format!("({b},{r},{c}) -> {} K, printed {printed_k} K", report.params_k));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("took {elapsed:.3} s, limit 1 s"));
    }
    verdict(1, "params_k within 3% for all 24 reduction-sweep rows", &failures);
}

#[test]
fn criterion_2_flops_calibration() {
    let start = Instant::now();
    let report = CostReport::compute(&ScalingConfig::baseline(), &CostOptions::default()).unwrap();
    let mut failures = Vec::new();
    if !within(report.gflops_per_second, 5.23, 0.10) {
        failures.push(format!("{:.3} GFLOP/s vs 5.23", report.gflops_per_second));
    }
    if !within(report.params as f64 / 1e6, 5.10, 0.03) {
        failures.push(format!("{:.3} M params vs 5.10", report.params as f64 / 1e6));
    }
    if start.elapsed().as_secs_f64() >= 1.0 {
        failures.push("slower than 1 s".into());
    }
    println!(
        "        baseline: {:.4} GFLOP/s, {:.4} M params",
        report.gflops_per_second,
        report.params as f64 / 1e6
    );
    verdict(2, "baseline within 10% of 5.23 GFLOP/s and 3% of 5.10 M params", &failures);
}

#[test]
fn criterion_3_receptive_field_matches_impulse_probe() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (b, r, base) in [(8, 3, 2), (4, 3, 4), (2, 3, 8), (1, 1, 2)] {
        let cfg = ScalingConfig::scaled(b, r, 512, base);
        let rf = receptive_field(&cfg).unwrap();
        let (frames, samples) = impulse_probe_receptive_field(&cfg);
        println!(
            "        ({b},{r}, base {base}): closed form {} frames / {} samples, probe {frames} / {samples}",
            rf.frames, rf.samples
        );
        if (rf.frames, rf.samples) != (frames, samples) {
            failures.push(format!("({b},{r},base {base}) mismatch"));
        }
    }
    if start.elapsed().as_secs_f64() >= 30.0 {
        failures.push("slower than 30 s".into());
    }
    verdict(3, "closed-form receptive field equals impulse-probe support", &failures);
}

#[test]
fn criterion_4_dilation_invariances() {
    let mut failures = Vec::new();
    for b in [2u32, 4] {
        for c in [64usize, 128, 512] {
            let cfgs: Vec<_> = [2u64, 4, 8].iter().map(|&base| ScalingConfig::scaled(b, 3, c, base)).collect();
            let params: Vec<_> = cfgs.iter().map(count_params).collect();
            let macs: Vec<_> = cfgs.iter().map(|c| count_macs(c, 1.0).unwrap()).collect();
            let rf: Vec<_> = cfgs.iter().map(|c| receptive_field(c).unwrap().frames).collect();
            if params.windows(2).any(|w| w[0] != w[1]) {
                failures.push(format!("({b},3,{c}) params differ: {params:?}"));
            }
            if macs.windows(2).any(|w| w[0] != w[1]) {
                failures.push(format!("({b},3,{c}) MACs differ: {macs:?}"));
            }
            if rf.windows(2).any(|w| w[0] >= w[1]) {
                failures.push(format!("({b},3,{c}) receptive field not increasing: {rf:?}"));
            }
        }
    }
    verdict(4, "params and MACs base-invariant, receptive field increasing in base", &failures);
}

#[test]
fn criterion_5_kernels_match_brute_force() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5EED);
    let mut worst = [0.0f64; 6];
    let instances = 120;
    for _ in 0..instances {
        let c = 1 + (rng.next_u64() % 32) as usize;
        let n = 8 + (rng.next_u64() % 249) as usize;
        let k = 1 + (rng.next_u64() % 5) as usize;
        let d = 1 + (rng.next_u64() % 8) as usize;
        let c_out = 1 + (rng.next_u64() % 32) as usize;
        let x = random_vec(&mut rng, c * n, 1.0);
        let t = Tensor2D::new(c, n, x.clone()).unwrap();

        let spec = ConvSpec::new(c, c_out, k).with_dilation(d);
        let w = random_vec(&mut rng, spec.weight_len(), 1.0);
        let b = random_vec(&mut rng, c_out, 1.0);
        let got = nn::conv1d(&t, &spec, &w, Some(&b)).unwrap();
        let (want, _) = naive_conv1d(&x, c, n, &w, Some(&b), c_out, k, d, 1, 1, true);
        worst[0] = worst[0].max(max_rel_err(got.data(), &want));

        let w = random_vec(&mut rng, c_out * c, 1.0);
        let got = nn::pointwise_conv(&t, c_out, &w, Some(&b)).unwrap();
        worst[1] = worst[1].max(max_rel_err(got.data(), &naive_matmul(&x, c, n, &w, &b, c_out)));

        let w = random_vec(&mut rng, c * k, 1.0);
        let bias = random_vec(&mut rng, c, 1.0);
        let got = nn::depthwise_conv(&t, k, d, &w, Some(&bias)).unwrap();
        let (want, _) = naive_conv1d(&x, c, n, &w, Some(&bias), c, k, d, 1, c, true);
        worst[2] = worst[2].max(max_rel_err(got.data(), &want));

        let kernel = 2 + (rng.next_u64() % 15) as usize;
        let stride = 1 + (rng.next_u64() % kernel as u64) as usize;
        let w = random_vec(&mut rng, c * kernel, 1.0);
        let got = nn::transposed_conv1d(&t, kernel, stride, &w).unwrap();
        worst[3] = worst[3].max(max_rel_err(got.data(), &naive_overlap_add(&x, c, n, &w, kernel, stride)));

        let slope = rng.uniform(1.0);
        let got = nn::prelu(&t, slope);
        let want: Vec<f64> = x
            .iter()
            .map(|&v| if v >= 0.0 { v as f64 } else { slope as f64 * v as f64 })
            .collect();
        worst[4] = worst[4].max(max_rel_err(got.data(), &want));

        let g = random_vec(&mut rng, c, 2.0);
        let be = random_vec(&mut rng, c, 2.0);
        let got = nn::global_layer_norm(&t, &g, &be, NORM_EPS).unwrap();
        worst[5] = worst[5].max(max_rel_err(got.data(), &naive_gln(&x, c, n, &g, &be, NORM_EPS as f64)));
    }
    let names = ["conv1d", "pointwise", "depthwise", "transposed", "prelu", "gln"];
    let mut failures = Vec::new();
    for (name, err) in names.iter().zip(worst) {
        println!("        {name}: worst relative error {err:.2e} over {instances} instances");
        if err >= 1e-5 {
            failures.push(format!("{name}: {err:.3e}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        failures.push(format!("took {elapsed:.1} s, limit 60 s"));
    }
    verdict(5, "every primitive within 1e-5 of its brute-force oracle", &failures);
}

#[test]
fn criterion_6_end_to_end_contract() {
    let mut failures = Vec::new();
    let cfg = ScalingConfig::baseline();
    let store = init_random(&cfg, 42).unwrap();
    let model = build_model(&cfg, &store).unwrap();
    let mut rng = SplitMix64::new(7);
    let audio: Vec<f32> = (0..8000).map(|_| rng.uniform(0.5)).collect();

    let start = Instant::now();
    let first = model.separate(&audio).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let second = model.separate(&audio).unwrap();
    println!("        baseline separate on 1 s: {elapsed:.2} s");

    if first.len() != 2 {
        failures.push(format!("{} outputs", first.len()));
    }
    for (i, s) in first.iter().enumerate() {
        if s.len() != 8000 {
            failures.push(format!("source {i}: {} samples", s.len()));
        }
        if !s.iter().all(|v| v.is_finite()) {
            failures.push(format!("source {i}: non-finite output"));
        }
    }
    let bits = |v: &Vec<Vec<f32>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    if bits(&first) != bits(&second) {
        failures.push("outputs differ across runs".into());
    }
    let rebuilt = build_model(&cfg, &init_random(&cfg, 42).unwrap()).unwrap();
    if bits(&rebuilt.separate(&audio).unwrap()) != bits(&first) {
        failures.push("outputs differ after re-seeding".into());
    }
    if elapsed >= 10.0 {
        failures.push(format!("took {elapsed:.2} s, limit 10 s"));
    }

    for act in [MaskActivation::Relu, MaskActivation::Sigmoid, MaskActivation::Softmax] {
        let cfg = cfg.with_mask_activation(act);
        let model = build_model(&cfg, &store).unwrap();
        let masks = model.estimate_masks(&audio).unwrap().masks;
        let n = cfg.encoder_filters;
        let ok = match act {
            MaskActivation::Relu => masks.data().iter().all(|&v| v >= 0.0),
            MaskActivation::Sigmoid => masks.data().iter().all(|&v| (0.0..=1.0).contains(&v)),
            MaskActivation::Softmax => (0..n).all(|f| {
                (0..masks.frames()).all(|t| {
                    let a = masks.get(f, t);
                    let b = masks.get(n + f, t);
                    a >= 0.0 && b >= 0.0 && ((a + b) - 1.0).abs() < 1e-5
                })
            }),
        };
        if !ok {
            failures.push(format!("{act} masks leave their range"));
        }
    }
    verdict(6, "baseline separation: shape, finiteness, determinism, speed, mask ranges", &failures);
}

#[test]
fn criterion_7_metric_suite() {
    let mut failures = Vec::new();
    let mut rng = SplitMix64::new(99);
    let signal = |rng: &mut SplitMix64| -> Vec<f64> { (0..8000).map(|_| rng.next_f64() - 0.5).collect() };

    let est = signal(&mut rng);
    let reference = signal(&mut rng);
    let base = si_sdr(&est, &reference).unwrap().db();
    let mut drift = 0.0f64;
    for exp in -3..=3 {
        for mant in [1.0, 2.5, 5.0] {
            let c = mant * 10f64.powi(exp);
            if c > 1e3 {
                continue;
            }
            let scaled: Vec<f64> = est.iter().map(|v| v * c).collect();
            drift = drift.max((si_sdr(&scaled, &reference).unwrap().db() - base).abs());
        }
    }
    println!("        max scale drift {drift:.2e} dB");
    if drift >= 1e-9 {
        failures.push(format!("scale drift {drift:e} dB"));
    }

    let case_a = si_sdr(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap().db();
    let case_b = si_sdr(&[1.0f64, 0.0], &[1.0, 1.0]).unwrap().db();
    if case_a.abs() > 1e-12 || case_b.abs() > 1e-12 {
        failures.push(format!("hand cases gave {case_a} and {case_b} dB"));
    }

    let refs = [signal(&mut rng), signal(&mut rng)];
    if pit_si_sdr(&refs, &refs).unwrap().mean_si_sdr != SiSdr::Perfect {
        failures.push("identical estimates not perfect".into());
    }
    for _ in 0..20 {
        let refs = [signal(&mut rng), signal(&mut rng)];
        let noisy: Vec<Vec<f64>> = refs
            .iter()
            .map(|r| r.iter().map(|v| v + 0.7 * (rng.next_f64() - 0.5)).collect())
            .collect();
        let ordered = pit_si_sdr(&noisy, &refs).unwrap();
        let swapped_in = [noisy[1].clone(), noisy[0].clone()];
        let swapped = pit_si_sdr(&swapped_in, &refs).unwrap();
        if ordered.mean_si_sdr != swapped.mean_si_sdr {
            failures.push("PIT mean depends on estimate order".into());
        }
        let id = (direct_si_sdr(&noisy[0], &refs[0]) + direct_si_sdr(&noisy[1], &refs[1])) / 2.0;
        let sw = (direct_si_sdr(&noisy[1], &refs[0]) + direct_si_sdr(&noisy[0], &refs[1])) / 2.0;
        if (ordered.mean_si_sdr.db() - id.max(sw)).abs() > 1e-9 {
            failures.push("PIT disagrees with exhaustive oracle".into());
        }
    }
    verdict(7, "SI-SDR scale invariance, 0 dB cases, PIT symmetry and oracle", &failures);
}

#[test]
fn criterion_8_device_fit_reproduces_mcu_claim() {
    let mut failures = Vec::new();
    let platforms = builtin_platforms();
    let baseline = ScalingConfig::baseline();
    for quant in QuantBits::ALL {
        let opts = FitOptions {
            quant,
            ..FitOptions::default()
        };
        for name in ["STM32L476RG", "TI MSP432P4111"] {
            let v = check_fit(&baseline, find_platform(&platforms, name).unwrap(), &opts).unwrap();
            if v.feasible_memory {
                failures.push(format!("baseline fits {name} at {} bits", quant.bits()));
            }
        }
        let pi = find_platform(&platforms, "Raspberry Pi 3 B+").unwrap();
        let v = check_fit(&baseline, pi, &opts).unwrap();
        println!(
            "        {} bits: baseline needs {} bytes, Pi headroom {} bytes",
            quant.bits(),
            v.required_bytes,
            v.headroom_ram
        );
        if !v.feasible_memory {
            failures.push(format!("baseline does not fit Raspberry Pi memory at {} bits", quant.bits()));
        }
    }
    verdict(8, "baseline memory-infeasible on both MCUs, feasible on Raspberry Pi", &failures);
}

#[test]
fn criterion_9_io_bit_exactness() {
    let mut failures = Vec::new();

    let cfg = ScalingConfig::scaled(2, 2, 64, 2);
    let store = init_random(&cfg, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ctwb");
    let written = io::save_weights(&store, &path).unwrap();
    if written != store.encoded_len() || io::load_weights(&path).unwrap() != store {
        failures.push("weight file round trip not exact".into());
    }

    let mut rng = SplitMix64::new(11);
    let raw: Vec<i16> = (0..8000).map(|_| rng.next_u64() as i16).collect();
    let samples: Vec<f32> = raw.iter().map(|&v| v as f32 / 32768.0).collect();
    let wav = dir.path().join("x.wav");
    io::write_wav(&wav, &samples, 8000).unwrap();
    let (back, rate) = io::read_wav(&wav).unwrap();
    if rate != 8000 || back != samples {
        failures.push("WAV round trip not exact".into());
    }

    let mut small = WeightStore::new();
    small
        .insert("t", WeightTensor::new(vec![4, 8], random_vec(&mut rng, 32, 1.0)).unwrap())
        .unwrap();
    let mut clean = Vec::new();
    io::write_weights(&small, &mut clean).unwrap();
    let mut rejected = 0;
    for _ in 0..100 {
        let bit = (rng.next_u64() % (clean.len() as u64 * 8)) as usize;
        let mut bytes = clean.clone();
        bytes[bit / 8] ^= 1 << (bit % 8);
        if io::read_weights(&bytes[..]).is_err() {
            rejected += 1;
        }
    }
    println!("        single-bit corruptions rejected: {rejected}/100");
    if rejected != 100 {
        failures.push(format!("only {rejected}/100 corruptions rejected"));
    }
    verdict(9, "weight and WAV round trips exact, CRC rejects 100/100 bit flips", &failures);
}

#[test]
fn criterion_10_reference_metadata_embedded_verbatim() {
    let mut failures = Vec::new();
    let mut expected: Vec<(ReferenceSource, (u32, u32, usize, u64), u64, f64)> = Vec::new();
    for (b, r, c, k, sdr) in PRINTED_REDUCTION_ROWS {
        expected.push((ReferenceSource::ScalingSweep, (b, r, c, 2), k, sdr));
    }
    for (b, r, c, k, sdrs) in PRINTED_DILATION_ROWS {
        for (base, sdr) in [2u64, 4, 8].into_iter().zip(sdrs) {
            if !sdr.is_nan() {
                expected.push((ReferenceSource::DilationSweep, (b, r, c, base), k, sdr));
            }
        }
    }
    let shipped: Vec<_> = reference_points().collect();
    if shipped.len() != expected.len() {
        failures.push(format!("{} shipped points, {} printed", shipped.len(), expected.len()));
    }
    for (src, key, k, sdr) in &expected {
        match shipped.iter().find(|p| p.source == *src && p.key() == *key) {
            None => failures.push(format!("{key:?} ({src:?}) missing")),
            Some(p) => {
                if p.params_k != *k || p.si_sdr_db != *sdr {
                    failures.push(format!("{key:?} ({src:?}) not verbatim"));
                }
            }
        }
    }
    for p in &shipped {
        let cfg = ScalingConfig::scaled(p.num_blocks, p.num_repeats, p.depthwise_channels, p.dilation_base);
        let computed_k = CostReport::compute(&cfg, &CostOptions::default()).unwrap().params_k;
        if !within(computed_k as f64, p.params_k as f64, 0.03) {
            failures.push(format!(
                "{:?} ({:?}): computed {computed_k} K vs printed {} K",
                p.key(),
                p.source,
                p.params_k
            ));
        }
    }
    verdict(10, "reference table verbatim and consistent with counted params", &failures);
}
