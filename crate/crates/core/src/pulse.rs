//! Time-dependent two-polariton propagation for finite pulses.
//!
//! The probe field is eliminated in the slow-light limit: at every instant the
//! photon amplitude E follows the spin amplitude s through the spatial ODE
//! ∂ₓE = −κ(x)(E − s) (κ = σ_a ρ/2) and only the spins evolve in time,
//!
//! ```text
//! ∂ₜs  = γ_E (E − s) − γ s                                 (one photon)
//! ∂ₜSS = γ_E (ES + SE − 2 SS) − i V(r) SS − 2γ SS          (two photons)
//! ```
//!
//! with V(r) = 2γ_E r_b⁶/r⁶. The stationary limit of the pair system is the
//! dual-band equation solved in [`crate::pair`], and the single-photon
//! frequency response is exp(−OD·[1 + γ_E/(γ − iω)]⁻¹). Transport therefore
//! happens at the group velocity without resolving vacuum-speed transients.
//!
//! Time stepping uses the second-order exponential Runge–Kutta scheme
//! (ETD2RK) with the stiff diagonal part treated exactly; pair nodes on the
//! diagonal, where V diverges, are held at SS = 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationKind, CorrelationMap, TimeMap};
use crate::error::{invalid, Error, Result};
use crate::linear::PulseSpec;
use crate::pair::{Geometry, PairField, PairSetup};
use crate::params::{MediumProfile, PhysicalParams};
use crate::stats::half_width_at_half_depth;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Uniform time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max > t_min) {
            return Err(invalid("time grid needs dt > 0 and t_max > t_min"));
        }
        let n_steps = ((t_max - t_min) / dt).ceil() as usize;
        Ok(TimeGrid {
            t_min,
            t_max: t_min + n_steps as f64 * dt,
            n_steps,
            dt,
        })
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t_min + n as f64 * self.dt
    }
}

/// Numerical settings for the time-dependent solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSettings {
    /// γ_E·dt.
    pub step_factor: f64,
    /// Spacing of recorded exit samples and map bins (μs).
    pub bin_width: f64,
    /// Extra simulated time after the last input (in units of the group delay).
    pub tail_delays: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        PulseSettings {
            step_factor: 0.1,
            bin_width: 0.05,
            tail_delays: 1.5,
        }
    }
}

impl PulseSettings {
    /// Largest γ_E·dt accepted by the stepper.
    pub const MAX_STEP_FACTOR: f64 = 1.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

/// Exact integration of ∂ₓE = −κ(E − s) across each cell for piecewise-linear s.
#[derive(Debug, Clone)]
struct Channel {
    direction: Direction,
    ce: Vec<f64>,
    c_up: Vec<f64>,
    c_down: Vec<f64>,
}

impl Channel {
    fn new(kappa: &[f64], h: f64, direction: Direction) -> Self {
        let cells = kappa.len() - 1;
        let mut ce = Vec::with_capacity(cells);
        let mut c_up = Vec::with_capacity(cells);
        let mut c_down = Vec::with_capacity(cells);
        for c in 0..cells {
            let a = 0.5 * (kappa[c] + kappa[c + 1]) * h;
            let e = (-a).exp();
            // φ = 1 − (1 − e^{−a})/a
            let phi = if a < 1e-4 {
                a / 2.0 - a * a / 6.0 + a * a * a / 24.0
            } else {
                1.0 - (1.0 - e) / a
            };
            ce.push(e);
            c_up.push((1.0 - e) - phi);
            c_down.push(phi);
        }
        Channel {
            direction,
            ce,
            c_up,
            c_down,
        }
    }

    fn n(&self) -> usize {
        self.ce.len() + 1
    }

    fn exit(&self) -> usize {
        match self.direction {
            Direction::Forward => self.n() - 1,
            Direction::Backward => 0,
        }
    }

    /// E on every node given s, with E(entry) = `e_in`.
    fn march(&self, s: &[Complex64], e_in: Complex64, e: &mut [Complex64]) {
        let n = self.n();
        match self.direction {
            Direction::Forward => {
                e[0] = e_in;
                for c in 0..n - 1 {
                    e[c + 1] = self.ce[c] * e[c] + self.c_up[c] * s[c] + self.c_down[c] * s[c + 1];
                }
            }
            Direction::Backward => {
                e[n - 1] = e_in;
                for c in (0..n - 1).rev() {
                    e[c] = self.ce[c] * e[c + 1] + self.c_up[c] * s[c + 1] + self.c_down[c] * s[c];
                }
            }
        }
    }
}

/// ETD2RK coefficients for u' = −λu + N over one step.
#[derive(Debug, Clone, Copy)]
struct Etd {
    decay: Complex64,
    c1: Complex64,
    c2: Complex64,
}

impl Etd {
    fn new(lambda: Complex64, dt: f64) -> Self {
        let z = lambda * dt;
        let (phi1, phi2) = if z.norm() < 1e-3 {
            (
                ONE - z / 2.0 + z * z / 6.0 - z * z * z / 24.0,
                0.5 * ONE - z / 6.0 + z * z / 24.0 - z * z * z / 120.0,
            )
        } else {
            let e = (-z).exp();
            ((ONE - e) / z, (e - ONE + z) / (z * z))
        };
        Etd {
            decay: (-z).exp(),
            c1: phi1 * dt,
            c2: phi2 * dt,
        }
    }

    /// Coefficients that pin the value to zero.
    fn blocked() -> Self {
        Etd {
            decay: ZERO,
            c1: ZERO,
            c2: ZERO,
        }
    }
}

/// Single-photon state evolved with the linear stepper.
#[derive(Debug, Clone)]
struct LinearPhoton {
    channel: Channel,
    etd: Etd,
    gamma_e: f64,
    s: Vec<Complex64>,
    e: Vec<Complex64>,
}

impl LinearPhoton {
    fn new(channel: Channel, gamma_e: f64, gamma: f64, dt: f64) -> Self {
        let n = channel.n();
        LinearPhoton {
            channel,
            etd: Etd::new(Complex64::new(gamma_e + gamma, 0.0), dt),
            gamma_e,
            s: vec![ZERO; n],
            e: vec![ZERO; n],
        }
    }

    /// Advance one step; `e_now` and `e_next` are the input amplitudes at the
    /// start and end of the step. Leaves `self.e` consistent with the new `s`.
    fn step(&mut self, e_now: Complex64, e_next: Complex64) {
        let n = self.s.len();
        self.channel.march(&self.s, e_now, &mut self.e);
        let ge = self.gamma_e;
        let mut a = vec![ZERO; n];
        for x in 0..n {
            a[x] = self.etd.decay * self.s[x] + self.etd.c1 * ge * self.e[x];
        }
        let mut ea = vec![ZERO; n];
        self.channel.march(&a, e_next, &mut ea);
        for x in 0..n {
            self.s[x] = a[x] + self.etd.c2 * ge * (ea[x] - self.e[x]);
        }
        self.channel.march(&self.s, e_next, &mut self.e);
    }

    fn exit_e(&self) -> Complex64 {
        self.e[self.channel.exit()]
    }
}

/// Input drive of one photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Pulse(PulseSpec),
    /// Constant unit amplitude for all times.
    Continuous,
}

impl Drive {
    fn amplitude(&self, t: f64) -> Complex64 {
        match self {
            Drive::Pulse(p) => Complex64::new(p.envelope(t), 0.0),
            Drive::Continuous => ONE,
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match self {
            Drive::Pulse(p) => Some(p.support()),
            Drive::Continuous => None,
        }
    }
}

/// Coefficients shared by every run on one medium.
#[derive(Debug, Clone)]
pub struct PulseSetup {
    pub pair: PairSetup,
    pub geometry: Geometry,
    pub gamma: f64,
    kappa: Vec<f64>,
}

impl PulseSetup {
    pub fn new(params: &PhysicalParams, profile: &MediumProfile, geometry: Geometry) -> Result<Self> {
        let pair = PairSetup::new(params, profile)?;
        Ok(PulseSetup {
            kappa: profile.amplitude_absorption(params.sigma_a),
            pair,
            geometry,
            gamma: params.gamma,
        })
    }

    pub fn without_interaction(&self) -> Self {
        PulseSetup {
            pair: self.pair.without_interaction(),
            ..self.clone()
        }
    }

    fn n(&self) -> usize {
        self.pair.n()
    }

    fn channel(&self, photon: usize) -> Channel {
        let dir = match (photon, self.geometry) {
            (1, Geometry::Counter) => Direction::Backward,
            _ => Direction::Forward,
        };
        Channel::new(&self.kappa, self.pair.grid.spacing(), dir)
    }

    pub fn gamma_e(&self) -> f64 {
        self.pair.gamma_e
    }

    fn dt(&self, settings: &PulseSettings) -> Result<f64> {
        if !(settings.step_factor > 0.0) || settings.step_factor > PulseSettings::MAX_STEP_FACTOR {
            return Err(Error::Config(format!(
                "time step γ_E·dt = {} outside the stable range (0, {}]",
                settings.step_factor,
                PulseSettings::MAX_STEP_FACTOR
            )));
        }
        let raw = settings.step_factor / self.gamma_e();
        // Align the step with the recording interval.
        let stride = (settings.bin_width / raw).ceil().max(1.0);
        Ok(settings.bin_width / stride)
    }

    /// Pair-node ETD coefficients indexed by signed offset j − i + n − 1.
    fn pair_etd(&self, dt: f64) -> Vec<Etd> {
        let n = self.n() as isize;
        let h = self.pair.grid.spacing();
        let ge = self.gamma_e();
        let pot = self.pair.potential;
        (-(n - 1)..n)
            .map(|d| {
                let r = d as f64 * h;
                if pot.is_off() {
                    Etd::new(Complex64::new(2.0 * ge + 2.0 * self.gamma, 0.0), dt)
                } else if r.abs() < 0.5 * h {
                    Etd::blocked()
                } else {
                    let v = 2.0 * ge * (pot.r_b / r).powi(6);
                    Etd::new(Complex64::new(2.0 * ge + 2.0 * self.gamma, v), dt)
                }
            })
            .collect()
    }
}

/// Result of a linear single-photon run.
#[derive(Debug, Clone)]
pub struct LinearRun {
    pub times: Vec<f64>,
    pub input: Vec<Complex64>,
    pub output: Vec<Complex64>,
    /// Spin profile at each recorded time.
    pub spins: Vec<Vec<Complex64>>,
}

impl LinearRun {
    /// ∫|E_out|² / ∫|E_in|².
    pub fn energy_transmission(&self) -> f64 {
        let a: f64 = self.output.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = self.input.iter().map(|z| z.norm_sqr()).sum();
        a / b
    }
}

fn linear_run(setup: &PulseSetup, photon: usize, drive: Drive, grid: &TimeGrid, stride: usize) -> LinearRun {
    let mut ph = LinearPhoton::new(setup.channel(photon), setup.gamma_e(), setup.gamma, grid.dt);
    let mut times = Vec::new();
    let mut input = Vec::new();
    let mut output = Vec::new();
    let mut spins = Vec::new();
    ph.channel.march(&ph.s.clone(), drive.amplitude(grid.t(0)), &mut ph.e);
    for n in 0..=grid.n_steps {
        if n % stride == 0 {
            times.push(grid.t(n));
            input.push(drive.amplitude(grid.t(n)));
            output.push(ph.exit_e());
            spins.push(ph.s.clone());
        }
        if n < grid.n_steps {
            ph.step(drive.amplitude(grid.t(n)), drive.amplitude(grid.t(n + 1)));
        }
    }
    LinearRun {
        times,
        input,
        output,
        spins,
    }
}

/// Exit amplitude of a photon released from a unit spin at each node with
/// no further input, sampled every `stride` steps up to `lags` samples.
fn green_function(setup: &PulseSetup, photon: usize, dt: f64, stride: usize, lags: usize) -> Vec<Vec<Complex64>> {
    let n = setup.n();
    let proto = LinearPhoton::new(setup.channel(photon), setup.gamma_e(), setup.gamma, dt);
    (0..n)
        .into_par_iter()
        .map(|x| {
            let mut ph = proto.clone();
            ph.s[x] = ONE;
            let mut out = Vec::with_capacity(lags);
            ph.e.fill(ZERO);
            let s0 = ph.s.clone();
            ph.channel.march(&s0, ZERO, &mut ph.e);
            for k in 0..lags {
                out.push(ph.exit_e());
                if k + 1 < lags {
                    for _ in 0..stride {
                        ph.step(ZERO, ZERO);
                    }
                }
            }
            out
        })
        .collect()
}

/// Two-photon spin field and its stepper.
struct PairState {
    n: usize,
    ch1: Channel,
    ch2: Channel,
    etd: Vec<Etd>,
    gamma_e: f64,
    ss: Vec<Complex64>,
    /// Photon-1 amplitude, stored transposed: `es_t[j*n + i]`.
    es_t: Vec<Complex64>,
    /// Photon-2 amplitude `se[i*n + j]`.
    se: Vec<Complex64>,
}

impl PairState {
    fn new(setup: &PulseSetup, dt: f64) -> Self {
        let n = setup.n();
        PairState {
            n,
            ch1: setup.channel(1),
            ch2: setup.channel(2),
            etd: setup.pair_etd(dt),
            gamma_e: setup.gamma_e(),
            ss: vec![ZERO; n * n],
            es_t: vec![ZERO; n * n],
            se: vec![ZERO; n * n],
        }
    }

    fn etd_at(&self, i: usize, j: usize) -> &Etd {
        &self.etd[j + self.n - 1 - i]
    }

    /// Photon amplitudes from spins. Boundaries: photon 1 entering with
    /// photon 2 stored as its linear spin profile, and vice versa.
    fn march(
        &self,
        ss: &[Complex64],
        e1: Complex64,
        s2: &[Complex64],
        e2: Complex64,
        s1: &[Complex64],
        es_t: &mut [Complex64],
        se: &mut [Complex64],
    ) {
        let n = self.n;
        es_t.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let col: Vec<Complex64> = (0..n).map(|i| ss[i * n + j]).collect();
            self.ch1.march(&col, e1 * s2[j], row);
        });
        se.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            self.ch2.march(&ss[i * n..(i + 1) * n], s1[i] * e2, row);
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        e1: (Complex64, Complex64),
        e2: (Complex64, Complex64),
        s1: (&[Complex64], &[Complex64]),
        s2: (&[Complex64], &[Complex64]),
    ) {
        let n = self.n;
        let ge = self.gamma_e;
        let mut es_t = std::mem::take(&mut self.es_t);
        let mut se = std::mem::take(&mut self.se);
        self.march(&self.ss, e1.0, s2.0, e2.0, s1.0, &mut es_t, &mut se);
        let mut a = vec![ZERO; n * n];
        a.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                let c = self.etd_at(i, j);
                let nl = ge * (es_t[j * n + i] + se[i * n + j]);
                row[j] = c.decay * self.ss[i * n + j] + c.c1 * nl;
            }
        });
        let mut es_a = vec![ZERO; n * n];
        let mut se_a = vec![ZERO; n * n];
        self.march(&a, e1.1, s2.1, e2.1, s1.1, &mut es_a, &mut se_a);
        let etd = &self.etd;
        self.ss.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                let c = &etd[j + n - 1 - i];
                let d = ge * (es_a[j * n + i] + se_a[i * n + j] - es_t[j * n + i] - se[i * n + j]);
                row[j] = a[i * n + j] + c.c2 * d;
            }
        });
        self.march(&self.ss, e1.1, s2.1, e2.1, s1.1, &mut es_t, &mut se);
        self.es_t = es_t;
        self.se = se;
    }

    fn face1(&self) -> Vec<Complex64> {
        let x = self.ch1.exit();
        (0..self.n).map(|j| self.es_t[j * self.n + x]).collect()
    }

    fn face2(&self) -> Vec<Complex64> {
        let x = self.ch2.exit();
        (0..self.n).map(|i| self.se[i * self.n + x]).collect()
    }

    /// Spin norm Σ κ₁κ₂|SS|² (proportional to the physical excitation norm).
    fn norm(&self, kappa: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| kappa[i] * kappa[j] * self.ss[i * n + j].norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Recorded output of a two-photon run.
#[derive(Debug, Clone)]
pub struct PairTimeField {
    pub geometry: Geometry,
    pub times: Vec<f64>,
    pub dt: f64,
    pub stride: usize,
    pub photon1: LinearRun,
    pub photon2: LinearRun,
    /// ES on photon 1's exit face per recorded time, over photon-2 nodes.
    pub face1: Vec<Vec<Complex64>>,
    /// SE on photon 2's exit face per recorded time, over photon-1 nodes.
    pub face2: Vec<Vec<Complex64>>,
    /// Spin norm Σκκ|SS|² per recorded time.
    pub norm: Vec<f64>,
    /// Last input time of either photon.
    pub injection_end: f64,
    setup: PulseSetup,
}

fn window(setup: &PulseSetup, drives: (Drive, Drive), settings: &PulseSettings) -> Result<(f64, f64)> {
    let delay = setup.pair.total_delay();
    let bw = settings.bin_width;
    match (drives.0.support(), drives.1.support()) {
        (Some(a), Some(b)) => {
            let start = a.0.min(b.0) - 2.0 * bw;
            let end = a.1.max(b.1) + settings.tail_delays * delay + 2.0 * bw;
            Ok((start, end))
        }
        _ => Err(invalid("continuous drives need an explicit window")),
    }
}

/// Propagate two photons through the medium.
pub fn propagate_pulses(
    params: &PhysicalParams,
    profile: &MediumProfile,
    pulses: (PulseSpec, PulseSpec),
    delta_t: f64,
    geometry: Geometry,
    settings: PulseSettings,
) -> Result<PairTimeField> {
    let setup = PulseSetup::new(params, profile, geometry)?;
    let mut second = pulses.1;
    second.center += delta_t;
    run_drives(&setup, (Drive::Pulse(pulses.0), Drive::Pulse(second)), None, settings)
}

pub(crate) fn run_drives(
    setup: &PulseSetup,
    drives: (Drive, Drive),
    span: Option<(f64, f64)>,
    settings: PulseSettings,
) -> Result<PairTimeField> {
    let dt = setup.dt(&settings)?;
    let stride = (settings.bin_width / dt).round().max(1.0) as usize;
    let (t0, t1) = match span {
        Some(s) => s,
        None => window(setup, drives, &settings)?,
    };
    let grid = TimeGrid::new(t0, t1, dt)?;
    if setup.n() > 1024 {
        return Err(Error::Config("time-dependent pair grid above 1024 nodes per axis".into()));
    }
    let photon1 = linear_run(setup, 1, drives.0, &grid, 1);
    let photon2 = linear_run(setup, 2, drives.1, &grid, 1);
    let mut state = PairState::new(setup, dt);
    let mut es_t = vec![ZERO; state.n * state.n];
    let mut se = vec![ZERO; state.n * state.n];
    state.march(
        &state.ss,
        photon1.input[0],
        &photon2.spins[0],
        photon2.input[0],
        &photon1.spins[0],
        &mut es_t,
        &mut se,
    );
    state.es_t = es_t;
    state.se = se;
    let mut times = Vec::new();
    let mut face1 = Vec::new();
    let mut face2 = Vec::new();
    let mut norm = Vec::new();
    for n in 0..=grid.n_steps {
        if n % stride == 0 {
            times.push(grid.t(n));
            face1.push(state.face1());
            face2.push(state.face2());
            norm.push(state.norm(&setup.kappa));
        }
        if n < grid.n_steps {
            state.step(
                (photon1.input[n], photon1.input[n + 1]),
                (photon2.input[n], photon2.input[n + 1]),
                (&photon1.spins[n], &photon1.spins[n + 1]),
                (&photon2.spins[n], &photon2.spins[n + 1]),
            );
        }
        if state.ss.iter().any(|z| !z.re.is_finite()) {
            return Err(Error::Numerical {
                location: format!("pair stepper at t = {:.4} μs", grid.t(n)),
                message: "non-finite Rydberg-pair amplitude".into(),
            });
        }
    }
    let decimate = |r: LinearRun| LinearRun {
        times: r.times.iter().step_by(stride).copied().collect(),
        input: r.input.iter().step_by(stride).copied().collect(),
        output: r.output.iter().step_by(stride).copied().collect(),
        spins: r.spins.into_iter().step_by(stride).collect(),
    };
    let injection_end = [drives.0.support(), drives.1.support()]
        .iter()
        .flatten()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PairTimeField {
        geometry: setup.geometry,
        times,
        dt,
        stride,
        photon1: decimate(photon1),
        photon2: decimate(photon2),
        face1,
        face2,
        norm,
        injection_end,
        setup: setup.clone(),
    })
}

impl PairTimeField {
    /// Joint detection amplitude A(t₁, t₂) on the recorded grid, `a[p*m + q]`
    /// for t₁ = times[p], t₂ = times[q].
    ///
    /// After the first detection the remaining photon is released from its
    /// conditional spin profile and propagates linearly.
    pub fn detection_amplitude(&self) -> Vec<Complex64> {
        let m = self.times.len();
        let n = self.setup.n();
        let max_lag = (self.setup.pair.total_delay() * 1.5 + 12.0 / bandwidth_hint(&self.setup)).max(self.dt);
        let lags = ((max_lag / (self.dt * self.stride as f64)).ceil() as usize + 1).min(m);
        let g1 = green_function(&self.setup, 1, self.dt, self.stride, lags);
        let g2 = green_function(&self.setup, 2, self.dt, self.stride, lags);
        let e1 = &self.photon1.output;
        let e2 = &self.photon2.output;
        // Interaction-induced deviation of the conditional spin profile.
        let d1: Vec<Vec<Complex64>> = (0..m)
            .map(|p| (0..n).map(|x| self.face1[p][x] - e1[p] * self.photon2.spins[p][x]).collect())
            .collect();
        let d2: Vec<Vec<Complex64>> = (0..m)
            .map(|q| (0..n).map(|x| self.face2[q][x] - e2[q] * self.photon1.spins[q][x]).collect())
            .collect();
        let mut a = vec![ZERO; m * m];
        a.par_chunks_mut(m).enumerate().for_each(|(p, row)| {
            for q in 0..m {
                let mut v = e1[p] * e2[q];
                if q >= p {
                    let lag = q - p;
                    if lag < lags {
                        v += (0..n).map(|x| g2[x][lag] * d1[p][x]).sum::<Complex64>();
                    }
                } else {
                    let lag = p - q;
                    if lag < lags {
                        v += (0..n).map(|x| g1[x][lag] * d2[q][x]).sum::<Complex64>();
                    }
                }
                row[q] = v;
            }
        });
        a
    }

    /// Single-photon arrival rates |E_out|² on each side.
    pub fn arrivals(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.photon1.output.iter().map(|z| z.norm_sqr()).collect(),
            self.photon2.output.iter().map(|z| z.norm_sqr()).collect(),
        )
    }
}

fn bandwidth_hint(setup: &PulseSetup) -> f64 {
    let delay = setup.pair.total_delay();
    if delay <= 0.0 {
        return setup.gamma_e();
    }
    // B = γ_E/√(2 OD) with OD = 2γ_E·delay.
    setup.gamma_e() / (4.0 * setup.gamma_e() * delay).sqrt()
}

/// Normalised two-time correlation map with single-photon arrival profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct G2TimeMap {
    pub map: TimeMap,
    /// |A|² and the reference |A₀|² (coincidence mass per bin).
    pub coincidences: Vec<f64>,
    pub reference: Vec<f64>,
    pub arrivals_1: Vec<f64>,
    pub arrivals_2: Vec<f64>,
    pub bin_width: f64,
    /// Bins masked because the reference amplitude vanishes.
    pub masked: usize,
}

/// g²(t₁, t₂) = |A|²/|A₀|² with A₀ from the interaction-off run.
pub fn g2_map(field: &PairTimeField, reference: &PairTimeField) -> Result<G2TimeMap> {
    if field.times.len() != reference.times.len() || field.dt != reference.dt {
        return Err(invalid("interacting and reference runs use different grids"));
    }
    let a = field.detection_amplitude();
    let a0 = reference.detection_amplitude();
    let coincidences: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let reference_mass: Vec<f64> = a0.iter().map(|z| z.norm_sqr()).collect();
    let peak = reference_mass.iter().copied().fold(0.0, f64::max);
    let floor = peak * 1e-10;
    let mut masked = 0;
    let values = coincidences
        .iter()
        .zip(&reference_mass)
        .map(|(c, r)| {
            if *r > floor && *r > 0.0 {
                c / r
            } else {
                masked += 1;
                f64::NAN
            }
        })
        .collect();
    let (arrivals_1, arrivals_2) = reference.arrivals();
    Ok(G2TimeMap {
        map: TimeMap {
            t1: field.times.clone(),
            t2: field.times.clone(),
            values,
        },
        coincidences,
        reference: reference_mass,
        arrivals_1,
        arrivals_2,
        bin_width: field.dt * field.stride as f64,
        masked,
    })
}

impl G2TimeMap {
    /// g² along t₂ − t₁ = τ through the bin centred at `t_center` = (t₁+t₂)/2.
    pub fn lag_cut(&self, t_center: f64) -> CorrelationMap {
        let t = &self.map.t1;
        let m = t.len();
        let bw = self.bin_width;
        let half = (m / 2) as i64;
        let mut tau = Vec::new();
        let mut g = Vec::new();
        for k in -half..=half {
            let lag = k as f64 * bw;
            let v = self.map.sample(t_center - 0.5 * lag, t_center + 0.5 * lag);
            if v.is_finite() {
                tau.push(lag);
                g.push(v);
            }
        }
        CorrelationMap {
            kind: CorrelationKind::Cross,
            bin_width: bw,
            tau,
            g2: g,
            error: None,
            normalization: "interaction-off run".into(),
        }
    }

    /// Half-width (in τ = t₂ − t₁) of the diagonal depletion band at `t_center`.
    pub fn band_half_width(&self, t_center: f64) -> Option<f64> {
        self.lag_cut(t_center).half_width()
    }

    /// Full width of the band measured perpendicular to the diagonal:
    /// 2·(τ half-width)/√2.
    pub fn band_width_perpendicular(&self, t_center: f64) -> Option<f64> {
        self.band_half_width(t_center).map(|h| h * std::f64::consts::SQRT_2)
    }
}

/// Coincidence mass over [T₁ ± T_w] × [T₂ ± T_w] divided by the reference mass.
pub fn pulse_level_g2(map: &G2TimeMap, t1: f64, t2: f64, t_w: f64) -> Result<f64> {
    let t = &map.map.t1;
    let lo = t.first().copied().unwrap_or(0.0);
    let hi = t.last().copied().unwrap_or(0.0);
    for c in [t1, t2] {
        if c - t_w < lo - 1e-9 || c + t_w > hi + 1e-9 {
            return Err(invalid(format!(
                "pulse bin [{:.3}, {:.3}] μs lies outside the map support [{lo:.3}, {hi:.3}]",
                c - t_w,
                c + t_w
            )));
        }
    }
    let m = t.len();
    let sel = |c: f64| -> Vec<usize> { (0..m).filter(|&k| (t[k] - c).abs() <= t_w + 1e-12).collect() };
    let rows = sel(t1);
    let cols = sel(t2);
    let mut num = 0.0;
    let mut den = 0.0;
    for &p in &rows {
        for &q in &cols {
            num += map.coincidences[p * m + q];
            den += map.reference[p * m + q];
        }
    }
    if !(den > 0.0) {
        return Err(Error::UndefinedMetric("empty pulse-level bin".into()));
    }
    Ok(num / den)
}

/// Pulse-level summary of one (T_w, ΔT) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSummary {
    pub t_w: f64,
    pub delta_t: f64,
    pub transmission: f64,
    pub g2_pulse: f64,
}

/// Interacting and reference runs for identical Gaussian pulses, reduced to
/// pulse-level transmission and g² in bins of width 2T_w at the output.
pub fn pulse_experiment(
    params: &PhysicalParams,
    profile: &MediumProfile,
    t_w: f64,
    delta_t: f64,
    geometry: Geometry,
    settings: PulseSettings,
) -> Result<(PulseSummary, G2TimeMap)> {
    let pulse = PulseSpec::gaussian(t_w, 0.0)?;
    let field = propagate_pulses(params, profile, (pulse, pulse), delta_t, geometry, settings)?;
    let reference = propagate_pulses(&params.without_interaction(), profile, (pulse, pulse), delta_t, geometry, settings)?;
    let map = g2_map(&field, &reference)?;
    let delay = field.setup.pair.total_delay();
    let g2 = pulse_level_g2(&map, delay, delay + delta_t, t_w)?;
    let transmission = reference.photon1.energy_transmission();
    Ok((
        PulseSummary {
            t_w,
            delta_t,
            transmission,
            g2_pulse: g2,
        },
        map,
    ))
}

/// Energy transmission of a single Gaussian pulse through the linear medium.
pub fn linear_pulse_transmission(params: &PhysicalParams, profile: &MediumProfile, pulse: PulseSpec, settings: PulseSettings) -> Result<f64> {
    let setup = PulseSetup::new(params, profile, Geometry::Co)?;
    let dt = setup.dt(&settings)?;
    let (t0, _) = pulse.support();
    let end = pulse.support().1 + settings.tail_delays * setup.pair.total_delay() + 12.0 / bandwidth_hint(&setup);
    let grid = TimeGrid::new(t0, end, dt)?;
    let run = linear_run(&setup, 2, Drive::Pulse(pulse), &grid, 1);
    Ok(run.energy_transmission())
}

/// Exit amplitude of a linear run, sampled at every step.
pub fn linear_response(params: &PhysicalParams, profile: &MediumProfile, pulse: PulseSpec, span: (f64, f64), settings: PulseSettings) -> Result<LinearRun> {
    let setup = PulseSetup::new(params, profile, Geometry::Co)?;
    let dt = setup.dt(&settings)?;
    let grid = TimeGrid::new(span.0, span.1, dt)?;
    Ok(linear_run(&setup, 2, Drive::Pulse(pulse), &grid, 1))
}

/// CW baseline map: square drives of `duration` μs on both sides.
pub fn cw_map(params: &PhysicalParams, profile: &MediumProfile, duration: f64, geometry: Geometry, settings: PulseSettings) -> Result<G2TimeMap> {
    let drive = Drive::Pulse(PulseSpec::square(duration, 0.0)?);
    let setup = PulseSetup::new(params, profile, geometry)?;
    let field = run_drives(&setup, (drive, drive), None, settings)?;
    let reference = run_drives(&setup.without_interaction(), (drive, drive), None, settings)?;
    g2_map(&field, &reference)
}

/// Settings for the pseudo-time relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxSettings {
    /// γ_E·Δt of the pseudo-time step.
    pub step_factor: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings {
            step_factor: 2.0,
            tolerance: 1e-9,
            max_iterations: 20_000,
        }
    }
}

/// Stationary pair field from pseudo-time relaxation of the time-dependent
/// system under continuous unit drive on both entry faces.
///
/// The ETD2RK fixed point is the exact stationary solution for any step, so
/// a large pseudo-time step is used.
pub fn relax_to_steady_state(params: &PhysicalParams, profile: &MediumProfile, geometry: Geometry) -> Result<PairField> {
    relax_with(params, profile, geometry, RelaxSettings::default())
}

pub fn relax_with(params: &PhysicalParams, profile: &MediumProfile, geometry: Geometry, settings: RelaxSettings) -> Result<PairField> {
    let setup = PulseSetup::new(params, profile, geometry)?;
    let (es, se, residual) = relax_setup(&setup, settings)?;
    let reference = setup.without_interaction();
    let (es_ref, se_ref, _) = relax_setup(&reference, settings)?;
    Ok(PairField {
        geometry,
        setup: setup.pair.clone(),
        es,
        se,
        es_ref,
        se_ref,
        residual,
    })
}

/// Stationary single-photon spin profile under unit drive.
fn steady_spin(setup: &PulseSetup, photon: usize, dt: f64, settings: RelaxSettings) -> Result<Vec<Complex64>> {
    let mut ph = LinearPhoton::new(setup.channel(photon), setup.gamma_e(), setup.gamma, dt);
    ph.s.fill(ONE);
    for it in 0..settings.max_iterations {
        let old = ph.s.clone();
        ph.step(ONE, ONE);
        let diff = old.iter().zip(&ph.s).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff < settings.tolerance {
            return Ok(ph.s);
        }
        if it + 1 == settings.max_iterations {
            return Err(Error::Convergence {
                iterations: settings.max_iterations,
                residual: diff,
            });
        }
    }
    Ok(ph.s)
}

fn relax_setup(setup: &PulseSetup, settings: RelaxSettings) -> Result<(Vec<Complex64>, Vec<Complex64>, f64)> {
    let dt = settings.step_factor / setup.gamma_e();
    let s1 = steady_spin(setup, 1, dt, settings)?;
    let s2 = steady_spin(setup, 2, dt, settings)?;
    let mut state = PairState::new(setup, dt);
    let n = state.n;
    for i in 0..n {
        for j in 0..n {
            state.ss[i * n + j] = s1[i] * s2[j];
        }
    }
    let mut es_t = vec![ZERO; n * n];
    let mut se = vec![ZERO; n * n];
    state.march(&state.ss, ONE, &s2, ONE, &s1, &mut es_t, &mut se);
    state.es_t = es_t;
    state.se = se;
    let mut diff = f64::INFINITY;
    for _ in 0..settings.max_iterations {
        let old = state.ss.clone();
        state.step((ONE, ONE), (ONE, ONE), (&s1, &s1), (&s2, &s2));
        diff = old
            .par_iter()
            .zip(state.ss.par_iter())
            .map(|(a, b)| (a - b).norm())
            .reduce(|| 0.0, f64::max);
        if diff < settings.tolerance {
            let mut es = vec![ZERO; n * n];
            for i in 0..n {
                for j in 0..n {
                    es[i * n + j] = state.es_t[j * n + i];
                }
            }
            return Ok((es, state.se, diff));
        }
    }
    Err(Error::Convergence {
        iterations: settings.max_iterations,
        residual: diff,
    })
}

/// Band half-width as a function of the distance of the cut from the
/// pulse centre; used to detect broadening along the diagonal.
pub fn band_profile(map: &G2TimeMap, center: f64, offsets: &[f64]) -> Vec<(f64, Option<f64>)> {
    offsets.iter().map(|&o| (o, map.band_half_width(center + o))).collect()
}

/// Half-width of a dip in `values` sampled at `lags` (must include zero).
pub fn dip_half_width(lags: &[f64], values: &[f64]) -> Option<f64> {
    let z = lags.iter().position(|&t| t.abs() < 1e-12)?;
    half_width_at_half_depth(lags, values, values[z], z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::pulse_transmission;
    use crate::params::{derive, mhz, C6_90S};

    fn medium(od: f64, n: usize) -> (PhysicalParams, MediumProfile) {
        let p = PhysicalParams::dissipative(mhz(8.5), 0.0, C6_90S, 0.29).unwrap();
        let prof = MediumProfile::gaussian_with_od(74.8, od, 0.29, n, 3.0).unwrap();
        (p, prof)
    }

    #[test]
    fn channel_march_is_exact_for_constant_spin() {
        let ch = Channel::new(&[0.3; 40], 0.7, Direction::Backward);
        let s = vec![Complex64::new(0.4, 0.1); 40];
        let mut e = vec![ZERO; 40];
        ch.march(&s, ONE, &mut e);
        // E relaxes towards s with rate κ.
        let expect = s[0] + (ONE - s[0]) * (-0.3f64 * 0.7 * 39.0).exp();
        assert!((e[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn linear_transmission_matches_closed_form() {
        let (p, prof) = medium(88.0, 160);
        let d = derive(&p, &prof).unwrap();
        let pulse = PulseSpec::gaussian(1.1, 0.0).unwrap();
        let numeric = linear_pulse_transmission(&p, &prof, pulse, PulseSettings::default()).unwrap();
        let analytic = pulse_transmission(&pulse, &d, 0.0, d.od).unwrap();
        assert!((numeric / analytic - 1.0).abs() < 0.02, "{numeric} vs {analytic}");
    }

    #[test]
    fn interaction_off_map_is_flat_and_norm_decreases() {
        let (p, prof) = medium(30.0, 48);
        let p0 = p.without_interaction();
        let pulse = PulseSpec::gaussian(1.1, 0.0).unwrap();
        let s = PulseSettings {
            step_factor: 0.2,
            ..Default::default()
        };
        let f = propagate_pulses(&p0, &prof, (pulse, pulse), 0.0, Geometry::Counter, s).unwrap();
        let m = g2_map(&f, &f).unwrap();
        assert!(m.map.values.iter().filter(|v| v.is_finite()).all(|v| (v - 1.0).abs() < 1e-12));
        let g = pulse_level_g2(&m, 0.3, 0.3, 1.1).unwrap();
        assert!((g - 1.0).abs() < 1e-6);
        let after: Vec<f64> = f
            .times
            .iter()
            .zip(&f.norm)
            .filter(|(t, _)| **t > f.injection_end)
            .map(|(_, n)| *n)
            .collect();
        assert!(after.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    }

    #[test]
    fn relaxation_reproduces_causal_sweep() {
        let (p, prof) = medium(20.0, 96);
        let a = relax_to_steady_state(&p, &prof, Geometry::Counter).unwrap();
        let b = crate::pair::solve_dual_band(&p, &prof, Geometry::Counter).unwrap();
        let d = derive(&p, &prof).unwrap();
        let bins = crate::pair::LagBinning {
            bin_width: 0.02,
            extent: 1.5,
        };
        let ga = crate::pair::g2_tau_from_pair_binned(&a, &d, bins).unwrap();
        let gb = crate::pair::g2_tau_from_pair_binned(&b, &d, bins).unwrap();
        assert!((ga.at_zero() / gb.at_zero() - 1.0).abs() < 0.05, "{} {}", ga.at_zero(), gb.at_zero());
    }

    #[test]
    fn non_interacting_relaxation_is_transparent() {
        let (p, prof) = medium(30.0, 64);
        let f = relax_to_steady_state(&p.without_interaction(), &prof, Geometry::Counter).unwrap();
        assert!(f.es.iter().chain(&f.se).all(|z| (z - ONE).norm() < 1e-6));
    }
}
