//! Single-polariton linear optics and the closed-form two-photon predictions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::DerivedParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Gaussian,
    Square,
}

/// Input probe pulse. `width` is the intensity FWHM T_w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub width: f64,
    pub center: f64,
    /// Mean photon rate (photons/μs).
    pub mean_rate: f64,
}

impl PulseSpec {
    pub fn gaussian(width: f64, center: f64) -> Result<Self> {
        Self::new(PulseShape::Gaussian, width, center)
    }

    pub fn square(width: f64, center: f64) -> Result<Self> {
        Self::new(PulseShape::Square, width, center)
    }

    fn new(shape: PulseShape, width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid(format!("pulse width must be > 0, got {width}")));
        }
        Ok(PulseSpec {
            shape,
            width,
            center,
            mean_rate: 0.16,
        })
    }

    /// T_σ = T_w/√(2 ln 2); the intensity is ∝ exp(−2(t−t₀)²/T_σ²).
    pub fn t_sigma(&self) -> f64 {
        self.width / (2.0 * std::f64::consts::LN_2).sqrt()
    }

    /// Field envelope normalised so that ∫|e|² dt = 1.
    pub fn envelope(&self, t: f64) -> f64 {
        let dt = t - self.center;
        match self.shape {
            PulseShape::Gaussian => {
                let ts = self.t_sigma();
                let norm = (2.0 / std::f64::consts::PI).sqrt() / ts;
                (norm * (-2.0 * dt * dt / (ts * ts)).exp()).sqrt()
            }
            PulseShape::Square => {
                if dt.abs() <= 0.5 * self.width {
                    1.0 / self.width.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// Time span outside which the envelope is negligible.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            PulseShape::Gaussian => {
                let half = 2.5 * self.t_sigma();
                (self.center - half, self.center + half)
            }
            PulseShape::Square => (self.center - 0.5 * self.width, self.center + 0.5 * self.width),
        }
    }
}

/// Spectator-photon floors on measured correlation functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorLevels {
    pub s_cross: f64,
    pub s_self: f64,
}

impl FloorLevels {
    pub const MEASURED: FloorLevels = FloorLevels {
        s_cross: 0.035,
        s_self: 0.06,
    };
    pub const NONE: FloorLevels = FloorLevels {
        s_cross: 0.0,
        s_self: 0.0,
    };

    pub fn new(s_cross: f64, s_self: f64) -> Result<Self> {
        for s in [s_cross, s_self] {
            if !(0.0..1.0).contains(&s) {
                return Err(invalid(format!("floor level {s} outside [0, 1)")));
            }
        }
        Ok(FloorLevels { s_cross, s_self })
    }
}

impl Default for FloorLevels {
    fn default() -> Self {
        Self::MEASURED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPrediction {
    pub tau_cross: f64,
    pub tau_self: f64,
    pub a_self: f64,
    pub a_cross: f64,
    pub g2_cross_0: f64,
    pub t_cw: f64,
}

/// 𝒯_CW = exp(−OD·γ/γ_E).
pub fn cw_transmission(d: &DerivedParams, gamma: f64, od: f64) -> f64 {
    (-od * gamma / d.gamma_e).exp()
}

/// 𝒯(ω) = exp(−OD·Re[1 + γ_E/(γ + iω)]⁻¹).
pub fn eit_transmission(omega: f64, d: &DerivedParams, gamma: f64, od: f64) -> Result<f64> {
    if !(od >= 0.0) {
        return Err(invalid("OD must be ≥ 0"));
    }
    if gamma == 0.0 && omega == 0.0 {
        return Ok(1.0);
    }
    let z = Complex64::new(gamma, omega);
    let chi = (Complex64::new(1.0, 0.0) + d.gamma_e / z).inv();
    Ok((-od * chi.re).exp())
}

/// Gaussian surrogate 𝒯_CW·exp(−ω²/(2B²)).
pub fn gaussian_bandwidth_transmission(omega: f64, d: &DerivedParams, gamma: f64, od: f64) -> Result<f64> {
    if !(od > 0.0) {
        return Err(invalid("OD must be > 0 for the bandwidth approximation"));
    }
    let b = d.gamma_e / (2.0 * od).sqrt();
    Ok(cw_transmission(d, gamma, od) * (-omega * omega / (2.0 * b * b)).exp())
}

/// 𝒯_pulse = 𝒯_CW / √(1 + 1/(B²T_σ²)) for a Gaussian pulse.
pub fn pulse_transmission(p: &PulseSpec, d: &DerivedParams, gamma: f64, od: f64) -> Result<f64> {
    if p.shape != PulseShape::Gaussian {
        return Err(Error::UnsupportedShape(format!("{:?}", p.shape)));
    }
    if od == 0.0 {
        return Ok(1.0);
    }
    let b = d.gamma_e / (2.0 * od).sqrt();
    let bt = b * p.t_sigma();
    Ok(cw_transmission(d, gamma, od) / (1.0 + 1.0 / (bt * bt)).sqrt())
}

/// Strip-overlap pulse correlation,
/// g²(ΔT) = 1 − ½[erf((τ_cross − ΔT)/T_σ) + erf((τ_cross + ΔT)/T_σ)].
///
/// At ΔT = 0 this is 1 − erf(τ_cross/T_σ); the ΔT dependence is the
/// strip-overlap extension (`model = "strip-overlap-extension"`).
pub fn pulse_g2_prediction(p: &PulseSpec, tau_cross: f64, delta_t: f64) -> Result<f64> {
    if p.shape != PulseShape::Gaussian {
        return Err(Error::UnsupportedShape(format!("{:?}", p.shape)));
    }
    if !(tau_cross > 0.0) {
        return Err(invalid("τ_cross must be > 0"));
    }
    let ts = p.t_sigma();
    let g = if delta_t == 0.0 {
        1.0 - libm::erf(tau_cross / ts)
    } else {
        1.0 - 0.5 * (libm::erf((tau_cross - delta_t) / ts) + libm::erf((tau_cross + delta_t) / ts))
    };
    Ok(g.clamp(0.0, 1.0))
}

pub const PULSE_G2_EXTENSION_MODEL: &str = "strip-overlap-extension";

/// Counter-propagating exponent prefactor: g²_cross(0) ≈ e^(−2 OD_b) in the
/// minimal estimate.
pub fn scaling_predictions(d: &DerivedParams) -> Result<AnalyticPrediction> {
    if !(d.od > 0.0) {
        return Err(invalid("OD must be > 0"));
    }
    let a_self = 2.1 * d.l_a * (2.0 * d.od).sqrt();
    let a_cross = d.length;
    Ok(AnalyticPrediction {
        tau_cross: a_cross / d.v_g,
        tau_self: a_self / d.v_g,
        a_self,
        a_cross,
        g2_cross_0: (-2.0 * d.od_b).exp(),
        t_cw: cw_transmission(d, d.gamma, d.od),
    })
}

/// Additive spectator floor, min(g + s, 1).
pub fn apply_floor(g: f64, s: f64) -> f64 {
    (g + s).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_from_od, mhz, PhysicalParams, C6_90S};

    fn derived(od: f64, gamma_e_mhz: f64) -> DerivedParams {
        let p = PhysicalParams::dissipative(mhz(gamma_e_mhz), 0.0, C6_90S, 0.29).unwrap();
        derive_from_od(&p, od, 75.0).unwrap()
    }

    #[test]
    fn eit_limits() {
        let d = derived(72.0, 5.0);
        assert_eq!(eit_transmission(0.0, &d, 0.0, 72.0).unwrap(), 1.0);
        let far = eit_transmission(1.0e6 * d.gamma_e, &d, 0.0, 72.0).unwrap();
        assert!((far / (-72.0f64).exp() - 1.0).abs() < 1e-6);
        // γ > 0 reduces resonant transparency monotonically
        let mut prev = 1.0;
        for g in [0.1, 0.5, 1.0, 5.0] {
            let t = eit_transmission(0.0, &d, g, 72.0).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn eit_at_bandwidth_vs_gaussian() {
        let d = derived(72.0, 5.0);
        let t = eit_transmission(d.bandwidth, &d, 0.0, 72.0).unwrap();
        // direct evaluation: OD/(1 + (γ_E/B)²) = 72/145
        assert!((t - (-72.0f64 / 145.0).exp()).abs() < 1e-12);
        assert!((t / (-0.5f64).exp() - 1.0).abs() < 0.15);
    }

    #[test]
    fn gaussian_surrogate() {
        let d = derived(72.0, 5.0);
        assert_eq!(gaussian_bandwidth_transmission(0.0, &d, 0.0, 72.0).unwrap(), 1.0);
        let t = gaussian_bandwidth_transmission(d.bandwidth, &d, 0.0, 72.0).unwrap();
        assert!((t - (-0.5f64).exp()).abs() < 1e-12);
        for od in [50.0, 72.0, 100.0] {
            let d = derived(od, 5.0);
            for k in 0..=20 {
                let w = d.bandwidth * k as f64 / 20.0;
                let exact = eit_transmission(w, &d, 0.0, od).unwrap();
                let approx = gaussian_bandwidth_transmission(w, &d, 0.0, od).unwrap();
                assert!((approx / exact - 1.0).abs() < 0.10);
            }
        }
    }

    #[test]
    fn pulse_transmission_closed_form() {
        let d = derived(72.0, 5.0);
        let ts = 1.0 / d.bandwidth;
        let tw = ts * (2.0 * std::f64::consts::LN_2).sqrt();
        let p = PulseSpec::gaussian(tw, 0.0).unwrap();
        let t = pulse_transmission(&p, &d, 0.0, 72.0).unwrap();
        assert!((t - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let long = PulseSpec::gaussian(1.0e6, 0.0).unwrap();
        assert!((pulse_transmission(&long, &d, 0.0, 72.0).unwrap() - 1.0).abs() < 1e-9);
        let sq = PulseSpec::square(1.0, 0.0).unwrap();
        assert!(matches!(pulse_transmission(&sq, &d, 0.0, 72.0), Err(Error::UnsupportedShape(_))));
        let mut prev = 0.0;
        for tw in [0.2, 0.4, 1.1, 2.3, 2.9, 10.0] {
            let t = pulse_transmission(&PulseSpec::gaussian(tw, 0.0).unwrap(), &d, 0.0, 72.0).unwrap();
            assert!(t >= prev && t <= 1.0);
            prev = t;
        }
    }

    #[test]
    fn pulse_g2_strip_overlap() {
        let p = PulseSpec::gaussian(1.0, 0.0).unwrap();
        let ts = p.t_sigma();
        let g = pulse_g2_prediction(&p, ts, 0.0).unwrap();
        assert!((g - 0.157_299_207).abs() < 1e-6);
        for dt in [0.3, 1.0, 2.5] {
            let a = pulse_g2_prediction(&p, 0.8, dt).unwrap();
            let b = pulse_g2_prediction(&p, 0.8, -dt).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        assert!((pulse_g2_prediction(&p, 0.8, 50.0).unwrap() - 1.0).abs() < 1e-12);
        let wide = PulseSpec::gaussian(1.0e7, 0.0).unwrap();
        assert!((pulse_g2_prediction(&wide, 0.8, 0.0).unwrap() - 1.0).abs() < 1e-6);
        // tiny ΔT converges to the single-erf form
        let a = pulse_g2_prediction(&p, 0.8, 1e-9).unwrap();
        let b = pulse_g2_prediction(&p, 0.8, 0.0).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn scaling_values() {
        let d = derived(72.0, 5.0);
        let s = scaling_predictions(&d).unwrap();
        assert!((s.tau_cross - 1.15).abs() < 0.005);
        assert!((s.tau_self - 0.401).abs() < 0.0005);
        assert_eq!(s.a_cross, 75.0);
        let d9 = derived(9.0, 5.0);
        let s9 = scaling_predictions(&d9).unwrap();
        assert!((s9.tau_cross / s9.tau_self - 1.0).abs() < 0.05);
        let g = (-2.0f64 * 10.4).exp();
        assert!(g < 1e-9 && g > 8e-10);
        assert!((apply_floor(g, 0.035) - 0.035).abs() < 1e-8);
    }

    #[test]
    fn scaling_power_laws() {
        let ods: Vec<f64> = (0..10).map(|k| 10.0 * (10.0f64).powf(k as f64 / 9.0)).collect();
        let preds: Vec<_> = ods.iter().map(|&od| scaling_predictions(&derived(od, 5.0)).unwrap()).collect();
        let x: Vec<f64> = ods.iter().map(|v| v.ln()).collect();
        let slope = |y: Vec<f64>| crate::stats::linear_fit(&x, &y).0;
        let s_cross = slope(preds.iter().map(|p| p.tau_cross.ln()).collect());
        let s_self = slope(preds.iter().map(|p| p.tau_self.ln()).collect());
        assert!((s_cross - 1.0).abs() < 1e-6);
        assert!((s_self - 0.5).abs() < 1e-6);
    }

    #[test]
    fn floors() {
        assert_eq!(apply_floor(0.0, 0.035), 0.035);
        assert_eq!(apply_floor(0.37, 0.0), 0.37);
        assert_eq!(apply_floor(0.98, 0.06), 1.0);
        assert!(FloorLevels::new(1.0, 0.0).is_err());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floor_never_decreases_or_exceeds_one(g in 0.0f64..2.0, s in 0.0f64..0.999) {
            let f = apply_floor(g, s);
            prop_assert!(f <= 1.0);
            prop_assert!(f >= g.min(1.0));
        }

        #[test]
        fn pulse_g2_bounded_and_even(tw in 0.05f64..10.0, tau in 0.01f64..5.0, dt in -10.0f64..10.0) {
            let p = PulseSpec::gaussian(tw, 0.0).unwrap();
            let a = pulse_g2_prediction(&p, tau, dt).unwrap();
            let b = pulse_g2_prediction(&p, tau, -dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn pulse_g2_deepens_for_shorter_pulses(tw in 0.05f64..5.0, shrink in 0.1f64..0.99, tau in 0.05f64..3.0) {
            let long = PulseSpec::gaussian(tw, 0.0).unwrap();
            let short = PulseSpec::gaussian(tw * shrink, 0.0).unwrap();
            prop_assert!(pulse_g2_prediction(&short, tau, 0.0).unwrap() <= pulse_g2_prediction(&long, tau, 0.0).unwrap() + 1e-15);
        }
    }
}
