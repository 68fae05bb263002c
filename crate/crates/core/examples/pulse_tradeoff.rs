//! Counter-propagating Gaussian pulses: transmission against pulse-level g²
//! for several pulse widths, next to the closed forms.

use rydpol::linear::{pulse_g2_prediction, pulse_transmission, scaling_predictions, PulseSpec};
use rydpol::pair::Geometry;
use rydpol::params::{derive, mhz, MediumProfile, PhysicalParams, C6_90S, CM2_TO_UM2};
use rydpol::pulse::{pulse_experiment, PulseSettings};

fn main() -> rydpol::Result<()> {
    let sigma_a = 2.9e-9 * CM2_TO_UM2;
    let params = PhysicalParams::dissipative(mhz(8.5), 0.0, C6_90S, sigma_a)?;
    let profile = MediumProfile::gaussian_with_od(75.0, 88.0, sigma_a, 160, 3.0)?;
    let d = derive(&params, &profile)?;
    let tau_cross = scaling_predictions(&d)?.tau_cross;
    println!("t_w_us,t_pulse,t_pulse_closed,g2_pulse,g2_pulse_closed");
    for t_w in [0.4, 1.1, 2.3, 2.9] {
        let (summary, _) = pulse_experiment(&params, &profile, t_w, 0.0, Geometry::Counter, PulseSettings::default())?;
        let pulse = PulseSpec::gaussian(t_w, 0.0)?;
        println!(
            "{t_w},{:.4},{:.4},{:.4},{:.4}",
            summary.transmission,
            pulse_transmission(&pulse, &d, 0.0, d.od)?,
            summary.g2_pulse,
            pulse_g2_prediction(&pulse, tau_cross, 0.0)?
        );
    }
    Ok(())
}
