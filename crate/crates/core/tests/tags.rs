use rydpol::correlation::CorrelationKind;
use rydpol::linear::FloorLevels;
use rydpol::pair::Geometry;
use rydpol::params::{mhz, MediumProfile, PhysicalParams, C6_90S};
use rydpol::pulse::{pulse_experiment, pulse_level_g2, PulseSettings};
use rydpol::tags::{
    estimate_g2, ingest, pulse_g2_estimate, spectator_floor, synthesize_tags, write_tags, EstimatorConfig, Normalization, SynthesisModel,
    SynthesisSpec, TagFormat,
};
use rydpol::Error;

fn cfg(bin: f64) -> EstimatorConfig {
    EstimatorConfig {
        bin_width: bin,
        max_lag: 6.0,
        normalization: Normalization::Plateau,
    }
}

#[test]
fn estimate_is_invariant_under_window_relabelling() {
    let spec = SynthesisSpec::stationary(500, 200.0, 0.16, FloorLevels::MEASURED, 9);
    let s = synthesize_tags(&SynthesisModel::flat(), &spec).unwrap();
    let perm: Vec<u32> = (0..s.n_windows).rev().collect();
    let shuffled = s.relabel_windows(&perm).unwrap();
    let a = estimate_g2(&s, &cfg(0.2), CorrelationKind::Cross).unwrap();
    let b = estimate_g2(&shuffled, &cfg(0.2), CorrelationKind::Cross).unwrap();
    for (x, y) in a.g2.iter().zip(&b.g2) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn malformed_lines_are_counted_and_bad_binary_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "# window_length_us=10 windows=3\nwindow_id,detector,time_ps\n0,1,5\ngarbage\n2,2,7\n").unwrap();
    let s = ingest(&p, TagFormat::Csv).unwrap();
    assert_eq!(s.records.len(), 2);
    assert_eq!(s.skipped_lines, 1);
    assert_eq!(s.n_windows, 3);
    assert_eq!(s.window_length, 10.0);

    let b = dir.path().join("t.bin");
    write_tags(&s, &b, TagFormat::Binary, None).unwrap();
    let mut bytes = std::fs::read(&b).unwrap();
    // Swap the two records so that the stream is out of order.
    let (r0, r1) = bytes[9..].split_at_mut(13);
    r0.swap_with_slice(&mut r1[..13]);
    std::fs::write(&b, &bytes).unwrap();
    assert!(matches!(ingest(&b, TagFormat::Binary), Err(Error::Parse { .. })));
}

#[test]
fn empty_stream_and_ceiling_errors() {
    let s = rydpol::tags::TagStream::new(vec![], 10.0, 4).unwrap();
    assert!(matches!(estimate_g2(&s, &cfg(0.2), CorrelationKind::Cross), Err(Error::NoData(_))));
    let mut spec = SynthesisSpec::stationary(10, 100.0, 0.16, FloorLevels::NONE, 1);
    let mut model = SynthesisModel::flat();
    if let SynthesisModel::Stationary { cross, .. } = &mut model {
        cross.g2[0] = 3.0;
    }
    spec.ceiling = Some(2.0);
    assert!(matches!(synthesize_tags(&model, &spec), Err(Error::Config(_))));
}

#[test]
fn pulsed_synthesis_reproduces_pulse_level_g2() {
    let p = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, 0.29).unwrap();
    let prof = MediumProfile::gaussian_with_od(75.0, 20.0, 0.29, 64, 3.0).unwrap();
    let t_w = 0.8;
    let (_, map) = pulse_experiment(&p, &prof, t_w, 0.0, Geometry::Counter, PulseSettings::default()).unwrap();
    let floors = FloorLevels::MEASURED;
    let span = map.bin_width * map.map.t1.len() as f64;
    let spec = SynthesisSpec {
        n_windows: 200_000,
        window_length: span,
        rate_a: 0.6 / span,
        rate_b: 0.6 / span,
        floors,
        ceiling: None,
        seed: 4,
    };
    let stream = synthesize_tags(&SynthesisModel::Pulsed(map.clone()), &spec).unwrap();
    let delay = 20.0 / (2.0 * mhz(5.0));
    let est = pulse_g2_estimate(&stream, delay, delay, t_w).unwrap();
    let model = spectator_floor(pulse_level_g2(&map, delay, delay, t_w).unwrap(), floors.s_cross);
    assert!((est - model).abs() < 0.03, "{est} vs {model}");
}
