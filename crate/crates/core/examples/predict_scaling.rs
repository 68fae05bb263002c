//! Derived parameters and closed-form predictions across optical depth.

use rydpol::linear::{apply_floor, scaling_predictions, FloorLevels};
use rydpol::params::{derive_from_od, mhz, PhysicalParams, C6_90S, CM2_TO_UM2};

fn main() -> rydpol::Result<()> {
    let params = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, 2.9e-9 * CM2_TO_UM2)?;
    println!("od,od_b,tau_cross_us,tau_self_us,g2_cross0,g2_cross0_floored");
    for od in [5.0, 10.0, 20.0, 40.0, 72.0] {
        let d = derive_from_od(&params, od, 75.0)?;
        let p = scaling_predictions(&d)?;
        let floored = apply_floor(p.g2_cross_0, FloorLevels::MEASURED.s_cross);
        println!(
            "{od},{:.3},{:.4},{:.4},{:.3e},{:.4}",
            d.od_b, p.tau_cross, p.tau_self, p.g2_cross_0, floored
        );
    }
    Ok(())
}
