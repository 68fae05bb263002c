//! Stationary two-polariton solvers.
//!
//! Amplitudes are polariton-normalised: `es[i*n + j]` is the amplitude with
//! photon 1 propagating at x₁ = x[i] and excitation 2 stored as a Rydberg
//! spin at x₂ = x[j] (and `se` the reverse), divided by the local coupling
//! so that the non-interacting dark state is identically 1. In these
//! variables the dual-band system reads
//!
//! ```text
//! ±∂₁ES + k(x₁)[(2−W)ES − W·SE] + (γ_E/c)ES = 0
//!  ∂₂SE + k(x₂)[(2−W)SE − W·ES] + (γ_E/c)SE = 0
//! ```
//!
//! with k(x) = σ_a ρ(x)/4 and W(r) = 1 − 𝒱(r) = r⁶/(r⁶ + i r_b⁶). The upper
//! sign is the co-propagating geometry. The Rydberg-pair amplitude follows as
//! SS = W·(ES + SE)/2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationKind, CorrelationMap};
use crate::error::{invalid, Error, Result};
use crate::params::{DerivedParams, MediumProfile, PhysicalParams, SpatialGrid};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Both photons travel towards +x.
    Co,
    /// Photon 1 travels towards −x, photon 2 towards +x.
    Counter,
}

impl Geometry {
    /// Sign of the x₁ advection term.
    pub fn sign(self) -> f64 {
        match self {
            Geometry::Co => 1.0,
            Geometry::Counter => -1.0,
        }
    }

    pub fn correlation_kind(self) -> CorrelationKind {
        match self {
            Geometry::Co => CorrelationKind::SelfPair,
            Geometry::Counter => CorrelationKind::Cross,
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co" => Ok(Geometry::Co),
            "counter" => Ok(Geometry::Counter),
            other => Err(invalid(format!("unknown geometry '{other}' (expected co|counter)"))),
        }
    }
}

/// Dissipative van der Waals potential 𝒱(r) = r_b⁶/(r_b⁶ − i r⁶).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub r_b: f64,
}

impl PotentialModel {
    pub fn new(r_b: f64) -> Self {
        PotentialModel { r_b: r_b.max(0.0) }
    }

    pub fn is_off(&self) -> bool {
        self.r_b == 0.0
    }

    pub fn v(&self, r: f64) -> Complex64 {
        if self.is_off() {
            return Complex64::new(0.0, 0.0);
        }
        let b6 = self.r_b.powi(6);
        let r6 = r.powi(6);
        Complex64::new(b6, 0.0) / Complex64::new(b6, -r6)
    }

    /// W(r) = 1 − 𝒱(r), the fraction of the pair that remains a Rydberg pair.
    pub fn w(&self, r: f64) -> Complex64 {
        if self.is_off() {
            return ONE;
        }
        let b6 = self.r_b.powi(6);
        let r6 = r.powi(6);
        if r6 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(r6, 0.0) / Complex64::new(r6, b6)
    }

    /// ∫ Re 𝒱 dr over the real line, 2 r_b (π/12)/sin(π/12).
    pub fn integrated_loss(&self) -> f64 {
        let a = std::f64::consts::PI / 12.0;
        2.0 * self.r_b * a / a.sin()
    }
}

/// The constant 2(π/12)/sin(π/12) relating the crossing loss to OD_b.
pub fn blockade_exponent() -> f64 {
    let a = std::f64::consts::PI / 12.0;
    2.0 * a / a.sin()
}

/// Grid-level coefficients shared by the pair, pulse and triple solvers.
#[derive(Debug, Clone)]
pub struct PairSetup {
    pub grid: SpatialGrid,
    /// k(x) = σ_a ρ(x)/4 (μm⁻¹).
    pub k: Vec<f64>,
    /// Group delay from the left edge of the grid to each node (μs).
    pub delay_from_left: Vec<f64>,
    pub potential: PotentialModel,
    /// Residual free-space attenuation γ_E/c (μm⁻¹).
    pub eps: f64,
    pub gamma_e: f64,
}

impl PairSetup {
    pub fn new(params: &PhysicalParams, profile: &MediumProfile) -> Result<Self> {
        params.validate()?;
        profile.validate()?;
        let gamma_e = params.gamma_e();
        let r_b = params.blockade_radius()?;
        Ok(PairSetup {
            grid: profile.grid,
            k: profile.density.iter().map(|r| 0.25 * params.sigma_a * r).collect(),
            delay_from_left: profile.cumulative_delay(params.sigma_a, gamma_e),
            potential: PotentialModel::new(r_b),
            eps: gamma_e / params.c,
            gamma_e,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n_points
    }

    pub fn total_delay(&self) -> f64 {
        *self.delay_from_left.last().unwrap_or(&0.0)
    }

    pub fn delay_to_right(&self, i: usize) -> f64 {
        self.total_delay() - self.delay_from_left[i]
    }

    pub fn without_interaction(&self) -> Self {
        PairSetup {
            potential: PotentialModel::new(0.0),
            ..self.clone()
        }
    }

    /// W(x_j − x_i) table indexed by the signed index offset j − i + (n − 1).
    pub fn w_table(&self) -> Vec<Complex64> {
        let n = self.n() as isize;
        let h = self.grid.spacing();
        (-(n - 1)..n).map(|d| self.potential.w(d as f64 * h)).collect()
    }

    /// Largest group-delay step between neighbouring nodes.
    pub fn max_delay_step(&self) -> f64 {
        self.delay_from_left.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Stationary dual-band amplitudes with their non-interacting reference.
#[derive(Debug, Clone)]
pub struct PairField {
    pub geometry: Geometry,
    pub setup: PairSetup,
    pub es: Vec<Complex64>,
    pub se: Vec<Complex64>,
    pub es_ref: Vec<Complex64>,
    pub se_ref: Vec<Complex64>,
    /// Max-norm residual of the discretised equations.
    pub residual: f64,
}

impl PairField {
    pub fn n(&self) -> usize {
        self.setup.n()
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n() + j
    }

    /// |(ES + SE)/2|² normalised to the non-interacting solve.
    pub fn symmetric_abs2_norm(&self, i: usize, j: usize) -> f64 {
        let k = self.idx(i, j);
        let a = 0.5 * (self.es[k] + self.se[k]);
        let b = 0.5 * (self.es_ref[k] + self.se_ref[k]);
        a.norm_sqr() / b.norm_sqr()
    }

    pub fn max_symmetric_abs2_norm(&self) -> f64 {
        let n = self.n();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                m = m.max(self.symmetric_abs2_norm(i, j));
            }
        }
        m
    }

    /// Exit-face samples (τ, g²) sorted by τ, with τ = t₂ − t₁.
    pub fn exit_samples(&self) -> Vec<(f64, f64)> {
        let n = self.n();
        let s = &self.setup;
        let mut out = Vec::with_capacity(2 * n);
        let ratio = |a: Complex64, b: Complex64| a.norm_sqr() / b.norm_sqr();
        match self.geometry {
            Geometry::Co => {
                for j in 0..n {
                    let k = self.idx(n - 1, j);
                    out.push((s.delay_to_right(j), ratio(self.es[k], self.es_ref[k])));
                }
                for i in 0..n - 1 {
                    let k = self.idx(i, n - 1);
                    out.push((-s.delay_to_right(i), ratio(self.se[k], self.se_ref[k])));
                }
            }
            Geometry::Counter => {
                for j in 0..n {
                    let k = self.idx(0, j);
                    out.push((s.delay_to_right(j), ratio(self.es[k], self.es_ref[k])));
                }
                for i in 1..n {
                    let k = self.idx(i, n - 1);
                    out.push((-s.delay_from_left[i], ratio(self.se[k], self.se_ref[k])));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

fn solve2(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64, b1: Complex64, b2: Complex64) -> (Complex64, Complex64) {
    let det = a11 * a22 - a12 * a21;
    ((b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det)
}

/// Trapezoidal (second-order) sweep along both characteristics.
///
/// Every node depends only on its upstream neighbours along the two
/// transport directions, so one ordered pass solves the discrete system
/// exactly: row-major for co-propagation, x₁ descending for counter.
fn sweep(setup: &PairSetup, geometry: Geometry) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = setup.n();
    let h = setup.grid.spacing();
    let hh = 0.5 * h;
    let w = setup.w_table();
    let eps = setup.eps;
    let mut u = vec![ONE; n * n];
    let mut v = vec![ONE; n * n];
    let wf = |i: usize, j: usize| w[j + n - 1 - i];
    // Upwind operator contributions A (on u) and B (on v) at a node.
    let a_of = |i: usize, j: usize, u: Complex64, v: Complex64| {
        let ww = wf(i, j);
        setup.k[i] * ((2.0 - ww) * u - ww * v) + eps * u
    };
    let b_of = |i: usize, j: usize, u: Complex64, v: Complex64| {
        let ww = wf(i, j);
        setup.k[j] * ((2.0 - ww) * v - ww * u) + eps * v
    };
    let rows: Vec<usize> = match geometry {
        Geometry::Co => (0..n).collect(),
        Geometry::Counter => (0..n).rev().collect(),
    };
    let u_inflow = match geometry {
        Geometry::Co => 0,
        Geometry::Counter => n - 1,
    };
    for &i in &rows {
        for j in 0..n {
            let ww = wf(i, j);
            let fixed_u = i == u_inflow;
            let fixed_v = j == 0;
            if fixed_u && fixed_v {
                continue;
            }
            let k1 = setup.k[i];
            let k2 = setup.k[j];
            let (rhs_u, rhs_v) = {
                let ru = if fixed_u {
                    ONE
                } else {
                    let ip = if geometry == Geometry::Co { i - 1 } else { i + 1 };
                    let (up, vp) = (u[ip * n + j], v[ip * n + j]);
                    up - hh * a_of(ip, j, up, vp)
                };
                let rv = if fixed_v {
                    ONE
                } else {
                    let (up, vp) = (u[i * n + j - 1], v[i * n + j - 1]);
                    vp - hh * b_of(i, j - 1, up, vp)
                };
                (ru, rv)
            };
            let a11 = ONE + hh * (k1 * (2.0 - ww) + eps);
            let a12 = -hh * k1 * ww;
            let a21 = -hh * k2 * ww;
            let a22 = ONE + hh * (k2 * (2.0 - ww) + eps);
            let (nu, nv) = if fixed_u {
                (ONE, (rhs_v - a21) / a22)
            } else if fixed_v {
                ((rhs_u - a12) / a11, ONE)
            } else {
                solve2(a11, a12, a21, a22, rhs_u, rhs_v)
            };
            u[i * n + j] = nu;
            v[i * n + j] = nv;
        }
    }
    (u, v)
}

fn sweep_residual(setup: &PairSetup, geometry: Geometry, u: &[Complex64], v: &[Complex64]) -> f64 {
    let n = setup.n();
    let h = setup.grid.spacing();
    let w = setup.w_table();
    let wf = |i: usize, j: usize| w[j + n - 1 - i];
    let a_of = |i: usize, j: usize| {
        let ww = wf(i, j);
        setup.k[i] * ((2.0 - ww) * u[i * n + j] - ww * v[i * n + j]) + setup.eps * u[i * n + j]
    };
    let b_of = |i: usize, j: usize| {
        let ww = wf(i, j);
        setup.k[j] * ((2.0 - ww) * v[i * n + j] - ww * u[i * n + j]) + setup.eps * v[i * n + j]
    };
    let mut res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let upstream = match geometry {
                Geometry::Co if i > 0 => Some(i - 1),
                Geometry::Counter if i + 1 < n => Some(i + 1),
                _ => None,
            };
            if let Some(ip) = upstream {
                let r = (u[i * n + j] - u[ip * n + j]) / h + 0.5 * (a_of(i, j) + a_of(ip, j));
                res = res.max(r.norm());
            }
            if j > 0 {
                let r = (v[i * n + j] - v[i * n + j - 1]) / h + 0.5 * (b_of(i, j) + b_of(i, j - 1));
                res = res.max(r.norm());
            }
        }
    }
    res
}

/// Solve the stationary dual-band equation on the profile grid.
pub fn solve_dual_band(params: &PhysicalParams, profile: &MediumProfile, geometry: Geometry) -> Result<PairField> {
    let setup = PairSetup::new(params, profile)?;
    solve_dual_band_setup(setup, geometry)
}

pub fn solve_dual_band_setup(setup: PairSetup, geometry: Geometry) -> Result<PairField> {
    if setup.n() > 8192 {
        return Err(Error::Config(format!("pair grid of {} nodes per axis exceeds the memory bound", setup.n())));
    }
    let (es, se) = sweep(&setup, geometry);
    let residual = sweep_residual(&setup, geometry, &es, &se);
    let reference = setup.without_interaction();
    let (es_ref, se_ref) = sweep(&reference, geometry);
    if es.iter().chain(&se).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            location: "dual-band sweep".into(),
            message: "non-finite amplitude".into(),
        });
    }
    Ok(PairField {
        geometry,
        setup,
        es,
        se,
        es_ref,
        se_ref,
        residual,
    })
}

/// Rydberg-pair amplitude SS = W(ES + SE)/2, normalised to the
/// non-interacting pair (which is identically 1).
pub fn rydberg_pair_amplitude(pf: &PairField) -> Vec<Complex64> {
    let n = pf.n();
    let w = pf.setup.w_table();
    let mut ss = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let reference = 0.5 * (pf.es_ref[k] + pf.se_ref[k]);
            ss.push(w[j + n - 1 - i] * 0.5 * (pf.es[k] + pf.se[k]) / reference);
        }
    }
    ss
}

/// Options for turning exit-face amplitudes into g²(τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagBinning {
    /// Output lag spacing (μs).
    pub bin_width: f64,
    /// Output range as a multiple of the total group delay.
    pub extent: f64,
}

impl Default for LagBinning {
    fn default() -> Self {
        LagBinning {
            bin_width: 0.01,
            extent: 1.5,
        }
    }
}

/// Resample sorted (τ, g²) samples onto a lag grid; lags beyond the sample
/// coverage are uncorrelated (the photons never share the medium).
pub(crate) fn resample_lags(
    samples: &[(f64, f64)],
    coverage: f64,
    kind: CorrelationKind,
    binning: LagBinning,
    normalization: &str,
) -> Result<CorrelationMap> {
    let (taus, vals): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let tau = CorrelationMap::lag_grid(binning.bin_width, (binning.extent * coverage).max(3.0 * binning.bin_width));
    let lo = taus.first().copied().unwrap_or(0.0);
    let hi = taus.last().copied().unwrap_or(0.0);
    let g2 = tau
        .iter()
        .map(|&t| {
            if t < lo || t > hi {
                1.0
            } else {
                crate::stats::interp(&taus, &vals, t)
            }
        })
        .collect();
    CorrelationMap::from_samples(kind, tau, g2, normalization)
}

/// g²(τ) seen by detectors on the exit faces; τ = t₂ − t₁.
pub fn g2_tau_from_pair(pf: &PairField, d: &DerivedParams) -> Result<CorrelationMap> {
    g2_tau_from_pair_binned(pf, d, LagBinning::default())
}

pub fn g2_tau_from_pair_binned(pf: &PairField, d: &DerivedParams, binning: LagBinning) -> Result<CorrelationMap> {
    if !(binning.bin_width > 0.0) {
        return Err(invalid("lag bin width must be > 0"));
    }
    let step = pf.setup.max_delay_step();
    if binning.bin_width < step {
        return Err(Error::Resolution(format!(
            "lag bin {:.4} μs is finer than the grid delay step {:.4} μs (spacing {:.3} μm, v_g {:.2} μm/μs)",
            binning.bin_width,
            step,
            pf.setup.grid.spacing(),
            d.v_g
        )));
    }
    let samples = pf.exit_samples();
    resample_lags(
        &samples,
        pf.setup.total_delay(),
        pf.geometry.correlation_kind(),
        binning,
        "non-interacting solve",
    )
}

/// Settings for the (R, r) diffusion solvers of a uniform medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSettings {
    /// Include the second-derivative term.
    pub diffusion: bool,
    /// Step along the marching coordinate (μm).
    pub march_step: f64,
    /// Node count along the diffusive coordinate.
    pub nodes: usize,
}

impl Default for DiffusionSettings {
    fn default() -> Self {
        DiffusionSettings {
            diffusion: true,
            march_step: 0.05,
            nodes: 1201,
        }
    }
}

/// Exit amplitudes of a diffusion solve.
#[derive(Debug, Clone)]
pub struct DiffusionField {
    pub geometry: Geometry,
    /// Exit samples (τ, ψ) sorted by τ.
    pub exit: Vec<(f64, Complex64)>,
    /// Group delay of the medium L/v_g.
    pub total_delay: f64,
}

impl DiffusionField {
    pub fn g2_tau(&self, binning: LagBinning) -> Result<CorrelationMap> {
        let samples: Vec<(f64, f64)> = self.exit.iter().map(|(t, p)| (*t, p.norm_sqr())).collect();
        resample_lags(
            &samples,
            self.total_delay,
            self.geometry.correlation_kind(),
            binning,
            "unit input amplitude",
        )
    }

    /// g² at zero lag, read directly from the centre exit node.
    pub fn g2_zero(&self) -> f64 {
        self.exit
            .iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .map(|(_, p)| p.norm_sqr())
            .unwrap_or(1.0)
    }
}

fn uniform_medium_parameters(params: &PhysicalParams, profile: &MediumProfile) -> Result<(f64, f64, PotentialModel, f64)> {
    if !profile.is_uniform() {
        return Err(invalid("diffusion solvers require a uniform medium"));
    }
    let od = crate::params::optical_depth(profile, params.sigma_a)?;
    if !(od > 0.0) {
        return Err(invalid("diffusion solvers require OD > 0"));
    }
    let length = profile.length();
    let l_a = length / od;
    let v_g = 2.0 * l_a * params.gamma_e();
    Ok((length, l_a, PotentialModel::new(params.blockade_radius()?), v_g))
}

/// Tridiagonal solve (Thomas) with constant off-diagonals.
fn thomas(lower: Complex64, diag: &[Complex64], upper: Complex64, rhs: &mut [Complex64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut beta = diag[0];
    c[0] = upper / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower * c[i - 1];
        c[i] = upper / beta;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
}

#[derive(Clone, Copy, PartialEq)]
enum EdgeCondition {
    /// Values outside the active interval are held fixed.
    Dirichlet,
    /// Zero gradient at the edges of the active interval.
    Neumann,
}

/// One Crank–Nicolson step of ∂ψ = D ∂²ψ over `psi[a..=b]` with step `dt`.
fn crank_nicolson(psi: &mut [Complex64], a: usize, b: usize, mu: f64, edge: EdgeCondition) {
    // mu = D dt / dx²
    if b < a {
        return;
    }
    let m = b - a + 1;
    let lo = |k: usize, psi: &[Complex64]| -> Complex64 {
        if k > a {
            psi[k - 1]
        } else if edge == EdgeCondition::Dirichlet && a > 0 {
            psi[a - 1]
        } else {
            psi[k]
        }
    };
    let hi = |k: usize, psi: &[Complex64]| -> Complex64 {
        if k < b {
            psi[k + 1]
        } else if edge == EdgeCondition::Dirichlet && b + 1 < psi.len() {
            psi[b + 1]
        } else {
            psi[k]
        }
    };
    let half = 0.5 * mu;
    let mut rhs: Vec<Complex64> = (a..=b)
        .map(|k| psi[k] + half * (lo(k, psi) - 2.0 * psi[k] + hi(k, psi)))
        .collect();
    let mut diag = vec![Complex64::new(1.0 + mu, 0.0); m];
    let off = Complex64::new(-half, 0.0);
    match edge {
        EdgeCondition::Dirichlet => {
            if a > 0 {
                rhs[0] += half * psi[a - 1];
            } else {
                diag[0] -= half;
            }
            if b + 1 < psi.len() {
                rhs[m - 1] += half * psi[b + 1];
            } else {
                diag[m - 1] -= half;
            }
        }
        EdgeCondition::Neumann => {
            diag[0] -= half;
            diag[m - 1] -= half;
        }
    }
    thomas(off, &diag, off, &mut rhs);
    psi[a..=b].copy_from_slice(&rhs);
}

fn potential_step_integral(pot: &PotentialModel, r0: f64, r1: f64) -> Complex64 {
    let m = 0.5 * (r0 + r1);
    (r1 - r0) / 6.0 * (pot.v(r0) + 4.0 * pot.v(m) + pot.v(r1))
}

/// Co-propagating symmetric-mode equation ∂_R ψ = 4 l_a ∂²_r ψ − 𝒱(r) ψ / l_a,
/// marched over the medium length with unit input.
pub fn solve_diffusion_co(params: &PhysicalParams, profile: &MediumProfile, settings: DiffusionSettings) -> Result<DiffusionField> {
    let (length, l_a, pot, v_g) = uniform_medium_parameters(params, profile)?;
    if settings.nodes < 16 || !(settings.march_step > 0.0) {
        return Err(invalid("diffusion grid needs ≥ 16 nodes and a positive step"));
    }
    let n = settings.nodes | 1;
    let r_max = length;
    let dr = 2.0 * r_max / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|k| -r_max + k as f64 * dr).collect();
    let steps = (length / settings.march_step).ceil().max(1.0) as usize;
    let ds = length / steps as f64;
    let mu = 4.0 * l_a * (0.5 * ds) / (dr * dr);
    let loss: Vec<Complex64> = r.iter().map(|&x| (-pot.v(x) * ds / l_a).exp()).collect();
    let mut psi = vec![ONE; n];
    for _ in 0..steps {
        if settings.diffusion {
            crank_nicolson(&mut psi, 1, n - 2, mu, EdgeCondition::Dirichlet);
        }
        for (p, l) in psi.iter_mut().zip(&loss) {
            *p *= l;
        }
        psi[0] = ONE;
        psi[n - 1] = ONE;
        if settings.diffusion {
            crank_nicolson(&mut psi, 1, n - 2, mu, EdgeCondition::Dirichlet);
        }
    }
    if psi.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::Numerical {
            location: "co diffusion march".into(),
            message: "non-finite amplitude; refine the march step".into(),
        });
    }
    let exit = r.iter().zip(&psi).map(|(&x, &p)| (x / v_g, p)).collect();
    Ok(DiffusionField {
        geometry: Geometry::Co,
        exit,
        total_delay: length / v_g,
    })
}

/// Counter-propagating symmetric-mode equation
/// ∂_r ψ = (l_a/2) ∂²_R ψ − 𝒱(r) ψ / (2 l_a), marched in the relative
/// coordinate from −L to L over the diamond |R| ≤ (L − |r|)/2.
///
/// Before the photons meet (r < 0) the diamond edge carries the unit input;
/// afterwards each centre-of-mass node is recorded when it leaves the
/// diamond and maps to the detection lag τ = −2R/v_g.
pub fn solve_diffusion_counter(params: &PhysicalParams, profile: &MediumProfile, settings: DiffusionSettings) -> Result<DiffusionField> {
    let (length, l_a, pot, v_g) = uniform_medium_parameters(params, profile)?;
    if settings.nodes < 16 || !(settings.march_step > 0.0) {
        return Err(invalid("diffusion grid needs ≥ 16 nodes and a positive step"));
    }
    let n = settings.nodes | 1;
    let half_l = 0.5 * length;
    let d_r = length / (n - 1) as f64;
    let big_r: Vec<f64> = (0..n).map(|m| -half_l + m as f64 * d_r).collect();
    let steps = ((2.0 * length / settings.march_step).ceil() as usize).max(2);
    let ds = 2.0 * length / steps as f64;
    let mu = 0.5 * l_a * (0.5 * ds) / (d_r * d_r);
    let tol = 1e-9 * length;
    let active_range = |r: f64| -> Option<(usize, usize)> {
        let lim = 0.5 * (length - r.abs()) + tol;
        let a = big_r.iter().position(|&x| x.abs() <= lim)?;
        let b = big_r.iter().rposition(|&x| x.abs() <= lim)?;
        Some((a, b))
    };
    let mut psi = vec![ONE; n];
    let mut recorded: Vec<Option<Complex64>> = vec![None; n];
    let mut r = -length;
    for _ in 0..steps {
        let r_next = r + ds;
        let edge = if r < 0.0 { EdgeCondition::Dirichlet } else { EdgeCondition::Neumann };
        if let Some((a, b)) = active_range(r) {
            if settings.diffusion {
                crank_nicolson(&mut psi, a, b, mu, edge);
            }
            let factor = (-potential_step_integral(&pot, r, r_next) / (2.0 * l_a)).exp();
            for p in &mut psi[a..=b] {
                *p *= factor;
            }
            if settings.diffusion {
                crank_nicolson(&mut psi, a, b, mu, edge);
            }
        }
        r = r_next;
        if r >= 0.0 {
            let range = active_range(r);
            for m in 0..n {
                let active = range.is_some_and(|(a, b)| m >= a && m <= b);
                if !active && recorded[m].is_none() {
                    recorded[m] = Some(psi[m]);
                }
            }
        }
    }
    for m in 0..n {
        if recorded[m].is_none() {
            recorded[m] = Some(psi[m]);
        }
    }
    if psi.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::Numerical {
            location: "counter diffusion march".into(),
            message: "non-finite amplitude; refine the march step".into(),
        });
    }
    let mut exit: Vec<(f64, Complex64)> = big_r
        .iter()
        .zip(recorded)
        .map(|(&x, p)| (-2.0 * x / v_g, p.unwrap_or(ONE)))
        .collect();
    exit.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DiffusionField {
        geometry: Geometry::Counter,
        exit,
        total_delay: length / v_g,
    })
}
