//! Stationary two-photon solves in both geometries and the resulting g²(τ).

use rydpol::pair::{g2_tau_from_pair_binned, solve_dual_band, Geometry, LagBinning};
use rydpol::params::{derive, mhz, MediumProfile, PhysicalParams, C6_90S, CM2_TO_UM2};

fn main() -> rydpol::Result<()> {
    let sigma_a = 2.9e-9 * CM2_TO_UM2;
    let params = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, sigma_a)?;
    let profile = MediumProfile::gaussian_with_od(75.0, 40.0, sigma_a, 384, 3.0)?;
    let d = derive(&params, &profile)?;
    for geometry in [Geometry::Counter, Geometry::Co] {
        let field = solve_dual_band(&params, &profile, geometry)?;
        let binning = LagBinning {
            bin_width: field.setup.max_delay_step().max(0.01),
            extent: 1.5,
        };
        let g2 = g2_tau_from_pair_binned(&field, &d, binning)?;
        println!(
            "{geometry:?}: g2(0) = {:.4e}, half-width = {:.3} μs, residual = {:.1e}",
            g2.at_zero(),
            g2.half_width().unwrap_or(f64::NAN),
            field.residual
        );
    }
    Ok(())
}
