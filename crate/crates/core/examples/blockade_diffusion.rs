//! Uniform-medium marching solver: the blockade exponent with diffusion off
//! and the effect of switching diffusion on.

use rydpol::pair::{blockade_exponent, solve_diffusion_counter, DiffusionSettings};
use rydpol::params::{mhz, MediumProfile, PhysicalParams, C6_90S, CM2_TO_UM2};

fn main() -> rydpol::Result<()> {
    let sigma_a = 2.9e-9 * CM2_TO_UM2;
    let params = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, sigma_a)?;
    let r_b = params.blockade_radius()?;
    let length = 75.0;
    println!("od_b,g2_no_diffusion,exp(-a*od_b),g2_with_diffusion");
    for od_b in [0.5, 1.0, 2.0, 5.0] {
        let profile = MediumProfile::uniform_with_od(length, od_b * length / r_b, sigma_a, 64)?;
        let mut settings = DiffusionSettings {
            diffusion: false,
            ..DiffusionSettings::default()
        };
        let off = solve_diffusion_counter(&params, &profile, settings)?.g2_zero();
        settings.diffusion = true;
        let on = solve_diffusion_counter(&params, &profile, settings)?.g2_zero();
        println!("{od_b},{off:.5e},{:.5e},{on:.5e}", (-blockade_exponent() * od_b).exp());
    }
    Ok(())
}
