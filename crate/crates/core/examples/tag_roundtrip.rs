//! Synthetic photon tags drawn from a solved pair correlation, written to
//! disk, read back and analysed.

use rydpol::correlation::CorrelationKind;
use rydpol::linear::FloorLevels;
use rydpol::pair::{g2_tau_from_pair_binned, solve_dual_band, Geometry, LagBinning};
use rydpol::params::{derive, mhz, MediumProfile, PhysicalParams, C6_90S, CM2_TO_UM2};
use rydpol::tags::{estimate_g2, ingest, spectator_floor, synthesize_tags, write_tags, EstimatorConfig, Normalization, SynthesisModel, SynthesisSpec, TagFormat};

fn main() -> rydpol::Result<()> {
    let sigma_a = 2.9e-9 * CM2_TO_UM2;
    let params = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, sigma_a)?;
    let profile = MediumProfile::gaussian_with_od(75.0, 20.0, sigma_a, 256, 3.0)?;
    let d = derive(&params, &profile)?;
    let binning = LagBinning { bin_width: 0.02, extent: 3.0 };
    let cross = g2_tau_from_pair_binned(&solve_dual_band(&params, &profile, Geometry::Counter)?, &d, binning)?;
    let model = SynthesisModel::Stationary { cross: cross.clone(), self_pair: None };
    let floors = FloorLevels::MEASURED;
    let stream = synthesize_tags(&model, &SynthesisSpec::stationary(5000, 1000.0, 0.16, floors, 11))?;

    let path = std::env::temp_dir().join("rydpol_tags.bin");
    write_tags(&stream, &path, TagFormat::Binary, None)?;
    let back = ingest(&path, TagFormat::Binary)?;
    let config = EstimatorConfig { bin_width: 0.1, max_lag: 6.0, normalization: Normalization::Plateau };
    let est = estimate_g2(&back, &config, CorrelationKind::Cross)?;
    let model_bin = cross.mean_near_zero(0.05);
    println!("{} tags in {} windows", back.records.len(), back.n_windows);
    println!(
        "g2_cross(0): estimate {:.4} ± {:.4}, model {:.4}",
        est.at_zero(),
        est.error.as_ref().map_or(f64::NAN, |e| e[e.len() / 2]),
        spectator_floor(model_bin, floors.s_cross)
    );
    Ok(())
}
