//! Physical symbols, medium profiles and every derived quantity the solvers use.
//!
//! Internal units: lengths in μm, times in μs, angular rates in rad/μs.
//! External inputs in MHz (ordinary frequency) are converted with [`mhz`].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light in μm/μs.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Rubidium D2 half-linewidth, 2π·3.03 MHz.
pub const DEFAULT_GAMMA_P: f64 = TAU * 3.03;

/// |C6|/ħ for two 90S atoms, 16502·2π GHz·μm⁶ (attractive, sign kept).
pub const C6_90S: f64 = -16502.0 * TAU * 1.0e3;

/// cm² → μm².
pub const CM2_TO_UM2: f64 = 1.0e8;

/// cm⁻³ → μm⁻³.
pub const PER_CM3_TO_PER_UM3: f64 = 1.0e-12;

/// Converts an ordinary frequency in MHz to an angular rate in rad/μs.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Converts an angular rate in rad/μs back to MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Atomic and optical parameters of the ladder EIT scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Intermediate-state half-linewidth Γ (rad/μs).
    pub gamma_p: f64,
    /// Control Rabi frequency Ω (rad/μs).
    pub omega: f64,
    /// Rydberg decoherence rate γ (rad/μs).
    pub gamma: f64,
    /// One-photon detuning Δ (rad/μs).
    pub one_photon_detuning: f64,
    /// Two-photon detuning δ (rad/μs).
    pub two_photon_detuning: f64,
    /// C6/ħ (rad/μs·μm⁶), sign carried.
    pub c6: f64,
    /// Resonant absorption cross-section σ_a (μm²).
    pub sigma_a: f64,
    /// Speed of light (μm/μs).
    pub c: f64,
}

impl PhysicalParams {
    /// On-resonance (dissipative) parameters with the control Rabi frequency
    /// chosen so that Ω²/Γ equals `gamma_e`.
    pub fn dissipative(gamma_e: f64, gamma: f64, c6: f64, sigma_a: f64) -> Result<Self> {
        Self::dissipative_with_gamma_p(gamma_e, DEFAULT_GAMMA_P, gamma, c6, sigma_a)
    }

    pub fn dissipative_with_gamma_p(
        gamma_e: f64,
        gamma_p: f64,
        gamma: f64,
        c6: f64,
        sigma_a: f64,
    ) -> Result<Self> {
        if !(gamma_e > 0.0 && gamma_e.is_finite()) {
            return Err(invalid(format!("EIT half-linewidth must be > 0, got {gamma_e}")));
        }
        let p = PhysicalParams {
            gamma_p,
            omega: (gamma_e * gamma_p).sqrt(),
            gamma,
            one_photon_detuning: 0.0,
            two_photon_detuning: 0.0,
            c6,
            sigma_a,
            c: SPEED_OF_LIGHT,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_p,
            self.omega,
            self.gamma,
            self.one_photon_detuning,
            self.two_photon_detuning,
            self.c6,
            self.sigma_a,
            self.c,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("non-finite physical parameter"));
        }
        if self.gamma_p <= 0.0 {
            return Err(invalid("Γ must be > 0"));
        }
        if self.omega <= 0.0 {
            return Err(invalid("Ω must be > 0"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("γ must be ≥ 0"));
        }
        if self.sigma_a <= 0.0 {
            return Err(invalid("σ_a must be > 0"));
        }
        if self.c <= 0.0 {
            return Err(invalid("c must be > 0"));
        }
        Ok(())
    }

    /// EIT half-linewidth γ_E = Ω²/Γ.
    pub fn gamma_e(&self) -> f64 {
        self.omega * self.omega / self.gamma_p
    }

    /// Collective coupling constant g = √(cΓσ_a/2).
    pub fn g_coupling(&self) -> f64 {
        (self.c * self.gamma_p * self.sigma_a / 2.0).sqrt()
    }

    pub fn is_dissipative(&self) -> bool {
        self.one_photon_detuning == 0.0 && self.two_photon_detuning == 0.0
    }

    pub fn blockade_radius(&self) -> Result<f64> {
        blockade_radius(self.c6, self.gamma_e())
    }

    /// Copy with the interaction switched off (C6 = 0).
    pub fn without_interaction(&self) -> Self {
        PhysicalParams { c6: 0.0, ..*self }
    }
}

/// Uniform 1-D grid of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl SpatialGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(invalid(format!(
                "grid needs at least {} points, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(invalid(format!("bad grid bounds [{x_min}, {x_max}]")));
        }
        Ok(SpatialGrid {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Same bounds, twice the resolution (2n − 1 nodes, old nodes kept).
    pub fn refined(&self) -> Self {
        SpatialGrid {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileShape {
    /// ρ(x) = ρ(0)·exp(−πx²/L²)
    Gaussian { length: f64, rho_peak: f64 },
    /// ρ(x) = ρ₀ on |x| ≤ L/2
    Uniform { length: f64, rho0: f64 },
    /// Arbitrary tabulated density.
    Tabulated { length: f64 },
}

/// Atomic density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumProfile {
    pub grid: SpatialGrid,
    pub density: Vec<f64>,
    pub shape: ProfileShape,
}

impl MediumProfile {
    /// Gaussian cloud on a grid spanning ±`halfwidth_sigma`·σ with σ = L/√(2π).
    pub fn gaussian(length: f64, rho_peak: f64, n_points: usize, halfwidth_sigma: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(invalid("medium length must be > 0"));
        }
        if halfwidth_sigma < 3.0 {
            return Err(invalid("gaussian grid must cover at least ±3σ"));
        }
        let half = halfwidth_sigma * gaussian_sigma(length);
        let grid = SpatialGrid::new(-half, half, n_points)?;
        Self::gaussian_on(grid, length, rho_peak)
    }

    pub fn gaussian_on(grid: SpatialGrid, length: f64, rho_peak: f64) -> Result<Self> {
        if !(rho_peak >= 0.0 && rho_peak.is_finite()) {
            return Err(invalid("peak density must be finite and ≥ 0"));
        }
        let density = grid
            .nodes()
            .map(|x| rho_peak * (-PI * x * x / (length * length)).exp())
            .collect();
        Ok(MediumProfile {
            grid,
            density,
            shape: ProfileShape::Gaussian { length, rho_peak },
        })
    }

    /// Uniform slab whose grid spans exactly the medium, [−L/2, L/2].
    pub fn uniform(length: f64, rho0: f64, n_points: usize) -> Result<Self> {
        if !(length > 0.0) {
            return Err(invalid("medium length must be > 0"));
        }
        if !(rho0 >= 0.0 && rho0.is_finite()) {
            return Err(invalid("density must be finite and ≥ 0"));
        }
        let grid = SpatialGrid::new(-length / 2.0, length / 2.0, n_points)?;
        Ok(MediumProfile {
            grid,
            density: vec![rho0; n_points],
            shape: ProfileShape::Uniform { length, rho0 },
        })
    }

    pub fn tabulated(grid: SpatialGrid, density: Vec<f64>, length: f64) -> Result<Self> {
        if density.len() != grid.n_points {
            return Err(invalid("density length does not match grid"));
        }
        let p = MediumProfile {
            grid,
            density,
            shape: ProfileShape::Tabulated { length },
        };
        p.validate()?;
        Ok(p)
    }

    /// Gaussian profile scaled to a target optical depth.
    pub fn gaussian_with_od(length: f64, od: f64, sigma_a: f64, n_points: usize, halfwidth_sigma: f64) -> Result<Self> {
        Self::gaussian(length, od / (sigma_a * length), n_points, halfwidth_sigma)
    }

    /// Uniform profile scaled to a target optical depth.
    pub fn uniform_with_od(length: f64, od: f64, sigma_a: f64, n_points: usize) -> Result<Self> {
        Self::uniform(length, od / (sigma_a * length), n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.density.len() != self.grid.n_points {
            return Err(invalid("density length does not match grid"));
        }
        for (i, &rho) in self.density.iter().enumerate() {
            if !rho.is_finite() {
                return Err(invalid(format!("non-finite density at node {i}")));
            }
            if rho < 0.0 {
                return Err(invalid(format!("negative density at node {i}")));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        match self.shape {
            ProfileShape::Gaussian { length, .. }
            | ProfileShape::Uniform { length, .. }
            | ProfileShape::Tabulated { length } => length,
        }
    }

    pub fn peak_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.shape, ProfileShape::Uniform { .. })
    }

    /// Same medium with every density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let shape = match self.shape {
            ProfileShape::Gaussian { length, rho_peak } => ProfileShape::Gaussian {
                length,
                rho_peak: rho_peak * factor,
            },
            ProfileShape::Uniform { length, rho0 } => ProfileShape::Uniform {
                length,
                rho0: rho0 * factor,
            },
            s => s,
        };
        MediumProfile {
            grid: self.grid,
            density: self.density.iter().map(|r| r * factor).collect(),
            shape,
        }
    }

    /// Amplitude absorption rate per unit length, κ(x) = σ_a ρ(x)/2 = 1/(2 l_a(x)).
    pub fn amplitude_absorption(&self, sigma_a: f64) -> Vec<f64> {
        self.density.iter().map(|r| 0.5 * sigma_a * r).collect()
    }

    /// Group delay accumulated from the left edge of the grid up to each node,
    /// ∫σ_a ρ dx / (2γ_E), by trapezoidal quadrature.
    pub fn cumulative_delay(&self, sigma_a: f64, gamma_e: f64) -> Vec<f64> {
        let h = self.grid.spacing();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.density.len());
        out.push(0.0);
        for w in self.density.windows(2) {
            acc += 0.5 * h * sigma_a * (w[0] + w[1]) / (2.0 * gamma_e);
            out.push(acc);
        }
        out
    }
}

/// Standard-deviation equivalent of a Gaussian cloud with effective length L.
pub fn gaussian_sigma(length: f64) -> f64 {
    length / (2.0 * PI).sqrt()
}

/// ∫σ_a ρ(x) dx by trapezoidal quadrature on the profile grid.
pub fn optical_depth(profile: &MediumProfile, sigma_a: f64) -> Result<f64> {
    profile.validate()?;
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(invalid("σ_a must be > 0"));
    }
    let h = profile.grid.spacing();
    let interior: f64 = profile.density.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    Ok(sigma_a * h * interior)
}

/// Closed-form optical depth σ_a ρ(0) L of a Gaussian or uniform medium.
pub fn analytic_optical_depth(shape: &ProfileShape, sigma_a: f64) -> Option<f64> {
    match *shape {
        ProfileShape::Gaussian { length, rho_peak } => Some(sigma_a * rho_peak * length),
        ProfileShape::Uniform { length, rho0 } => Some(sigma_a * rho0 * length),
        ProfileShape::Tabulated { .. } => None,
    }
}

/// r_b = (|C6/ħ| / (2γ_E))^(1/6).
pub fn blockade_radius(c6: f64, gamma_e: f64) -> Result<f64> {
    if gamma_e == 0.0 {
        return Err(invalid("γ_E = 0: blockade radius undefined"));
    }
    if !(gamma_e > 0.0) {
        return Err(invalid("γ_E must be > 0"));
    }
    if c6 == 0.0 {
        return Ok(0.0);
    }
    Ok((c6.abs() / (2.0 * gamma_e)).powf(1.0 / 6.0))
}

/// OD_b = (r_b/L)·OD.
pub fn blockade_od(r_b: f64, length: f64, od: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(invalid("medium length must be > 0"));
    }
    Ok(r_b * od / length)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// γ_E = Ω²/Γ (rad/μs).
    pub gamma_e: f64,
    pub od: f64,
    /// Blockade radius (μm).
    pub r_b: f64,
    pub od_b: f64,
    /// Resonant attenuation length L/OD (μm).
    pub l_a: f64,
    /// Group velocity 2 l_a γ_E (μm/μs).
    pub v_g: f64,
    /// EIT bandwidth γ_E/√(2 OD) (rad/μs).
    pub bandwidth: f64,
    /// √(cΓσ_a/2).
    pub g_coupling: f64,
    /// Effective medium length (μm).
    pub length: f64,
    /// Rydberg decoherence carried through for the linear response (rad/μs).
    pub gamma: f64,
}

impl DerivedParams {
    /// Total group delay OD/(2γ_E).
    pub fn group_delay(&self) -> f64 {
        self.od / (2.0 * self.gamma_e)
    }
}

pub fn derive(params: &PhysicalParams, profile: &MediumProfile) -> Result<DerivedParams> {
    params.validate()?;
    let od = optical_depth(profile, params.sigma_a)?;
    let length = profile.length();
    derive_from_od(params, od, length)
}

/// Derived quantities for a medium characterised only by (OD, L).
pub fn derive_from_od(params: &PhysicalParams, od: f64, length: f64) -> Result<DerivedParams> {
    params.validate()?;
    if !(od >= 0.0 && od.is_finite()) {
        return Err(invalid("OD must be finite and ≥ 0"));
    }
    let gamma_e = params.gamma_e();
    let r_b = blockade_radius(params.c6, gamma_e)?;
    let od_b = blockade_od(r_b, length, od)?;
    let l_a = if od > 0.0 { length / od } else { f64::INFINITY };
    Ok(DerivedParams {
        gamma_e,
        od,
        r_b,
        od_b,
        l_a,
        v_g: 2.0 * l_a * gamma_e,
        bandwidth: if od > 0.0 { gamma_e / (2.0 * od).sqrt() } else { f64::INFINITY },
        g_coupling: params.g_coupling(),
        length,
        gamma: params.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn experimental_cloud_optical_depth() {
        let rho0 = 3.3e12 * PER_CM3_TO_PER_UM3;
        let sigma_a = 2.9e-9 * CM2_TO_UM2;
        let p = MediumProfile::gaussian(75.0, rho0, 1024, 4.0).unwrap();
        let od = optical_depth(&p, sigma_a).unwrap();
        assert!((od - 72.0).abs() < 0.5, "OD = {od}");
        let exact = analytic_optical_depth(&p.shape, sigma_a).unwrap();
        assert!(close(od, exact, 1e-4));
    }

    #[test]
    fn empty_and_uniform_media() {
        let p = MediumProfile::uniform(75.0, 0.0, 64).unwrap();
        assert_eq!(optical_depth(&p, 0.29).unwrap(), 0.0);
        let p = MediumProfile::uniform_with_od(75.0, 10.0, 0.29, 101).unwrap();
        assert!((optical_depth(&p, 0.29).unwrap() - 10.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_density_rejected() {
        let grid = SpatialGrid::new(-1.0, 1.0, 16).unwrap();
        let mut d = vec![1.0; 16];
        d[3] = f64::NAN;
        assert!(MediumProfile::tabulated(grid, d, 2.0).is_err());
    }

    #[test]
    fn blockade_radius_matches_quoted_values() {
        let rb = blockade_radius(C6_90S, mhz(5.0)).unwrap();
        assert!(close(rb, 10.85, 0.005), "r_b = {rb}");
        let rb = blockade_radius(C6_90S, mhz(8.5)).unwrap();
        assert!(close(rb, 9.95, 0.005), "r_b = {rb}");
        let r1 = blockade_radius(1.0e8, 30.0).unwrap();
        let r2 = blockade_radius(64.0e8, 30.0).unwrap();
        assert!(close(r2, 2.0 * r1, 1e-12));
        assert!(blockade_radius(1.0e8, 0.0).is_err());
    }

    #[test]
    fn blockade_optical_depths() {
        assert!((blockade_od(10.85, 75.0, 72.0).unwrap() - 10.4).abs() < 0.1);
        assert!((blockade_od(9.95, 74.8, 88.0).unwrap() - 11.7).abs() < 0.05);
        assert_eq!(blockade_od(10.0, 75.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn derived_quantities() {
        let p = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, 0.29).unwrap();
        let d = derive_from_od(&p, 72.0, 75.0).unwrap();
        assert!((d.group_delay() - 1.15).abs() < 0.005);
        assert!((d.v_g - 65.4).abs() < 0.1);
        assert!(close(d.length / d.v_g, d.group_delay(), 1e-12));
        assert!(close(to_mhz(d.bandwidth), 0.417, 0.002));
        assert!(close(d.gamma_e, mhz(5.0), 1e-12));
    }

    #[test]
    fn gaussian_sigma_annotation() {
        assert!(close(gaussian_sigma(75.7), 30.2, 0.01));
    }

    #[test]
    fn gaussian_density_exact_on_nodes() {
        let p = MediumProfile::gaussian(75.0, 2.0, 33, 3.0).unwrap();
        for (x, rho) in p.grid.nodes().zip(&p.density) {
            assert_eq!(*rho, 2.0 * (-PI * x * x / (75.0 * 75.0)).exp());
        }
    }
}
