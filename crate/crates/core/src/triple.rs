//! Stationary three-polariton propagation: photon 1 travels towards −x
//! against a co-propagating pair (photons 2 and 3) travelling towards +x.
//!
//! Components ESS, SES and SSE carry one photon in the probe field and the
//! other two stored as Rydberg spins. Eliminating the fully stored amplitude
//! gives SSS = W₃·(ESS + SES + SSE)/3 with
//! W₃ = 1/(1 + i(2/3)·Σ r_b⁶/r_ij⁶), which vanishes whenever two photons
//! coincide. Each component relaxes towards SSS along its own characteristic,
//! so the system is solved by a single ordered sweep (x₁ descending,
//! x₂ and x₃ ascending) with a trapezoidal 3×3 solve per node.
//!
//! Entry faces are loaded with the stationary pair amplitudes of the two
//! photons already inside: the co-propagating pair on photon 1's face and
//! the counter-propagating pairs on the other two.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMap;
use crate::error::{invalid, Error, Result};
use crate::pair::{g2_tau_from_pair_binned, solve_dual_band_setup, Geometry, LagBinning, PairField, PairSetup};
use crate::params::{DerivedParams, MediumProfile, PhysicalParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest grid (nodes per axis) accepted by [`solve_three`].
pub const MAX_TRIPLE_NODES: usize = 200;

/// Stationary three-photon amplitudes, `ess[(i*n + j)*n + k]` at (x₁, x₂, x₃).
#[derive(Debug, Clone)]
pub struct TripleField {
    pub setup: PairSetup,
    pub ess: Vec<Complex64>,
    pub ses: Vec<Complex64>,
    pub sse: Vec<Complex64>,
    /// Exit faces of the interaction-off solve: ESS at x₁ = x_min over
    /// (j, k), SES at x₂ = x_max over (i, k), SSE at x₃ = x_max over (i, j).
    pub ref_faces: [Vec<Complex64>; 3],
    /// Stationary pair amplitudes SS used on the entry faces, with their
    /// interaction-off counterparts.
    pub pair_co: Vec<Complex64>,
    pub pair_counter: Vec<Complex64>,
    pub pair_co_ref: Vec<Complex64>,
    pub pair_counter_ref: Vec<Complex64>,
    /// Pair solves behind the entry faces.
    pub co: PairField,
    pub counter: PairField,
    pub residual: f64,
}

impl TripleField {
    pub fn n(&self) -> usize {
        self.setup.n()
    }

    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n();
        (i * n + j) * n + k
    }

    /// Exit faces of the interacting solve in the layout of `ref_faces`.
    pub fn exit_faces(&self) -> [Vec<Complex64>; 3] {
        let n = self.n();
        let mut f1 = Vec::with_capacity(n * n);
        let mut f2 = Vec::with_capacity(n * n);
        let mut f3 = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                f1.push(self.ess[self.idx(0, a, b)]);
                f2.push(self.ses[self.idx(a, n - 1, b)]);
                f3.push(self.sse[self.idx(a, b, n - 1)]);
            }
        }
        [f1, f2, f3]
    }

    /// |(ESS + SES + SSE)/3|² on every node, normalised to the
    /// interaction-off value on the matching exit face scale (≈ 1).
    pub fn max_symmetric_abs2(&self) -> f64 {
        self.ess
            .iter()
            .zip(&self.ses)
            .zip(&self.sse)
            .map(|((a, b), c)| ((a + b + c) / 3.0).norm_sqr())
            .fold(0.0, f64::max)
    }
}

/// Raw stationary SS = W(ES + SE)/2 of a pair solve and its W = 1 reference.
fn pair_spin(pf: &PairField) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = pf.n();
    let w = pf.setup.w_table();
    let mut ss = Vec::with_capacity(n * n);
    let mut ss_ref = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            ss.push(w[j + n - 1 - i] * 0.5 * (pf.es[k] + pf.se[k]));
            ss_ref.push(0.5 * (pf.es_ref[k] + pf.se_ref[k]));
        }
    }
    (ss, ss_ref)
}

/// Gaussian elimination with partial pivoting for a 3×3 complex system.
fn solve3(mut a: [[Complex64; 3]; 3], mut b: [Complex64; 3]) -> [Complex64; 3] {
    for c in 0..3 {
        let p = (c..3).max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm())).unwrap_or(c);
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for q in c..3 {
                let v = a[c][q];
                a[r][q] -= f * v;
            }
            let v = b[c];
            b[r] -= f * v;
        }
    }
    let mut x = [ZERO; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for q in r + 1..3 {
            s -= a[r][q] * x[q];
        }
        x[r] = s / a[r][r];
    }
    x
}

struct Kernel<'a> {
    setup: &'a PairSetup,
    /// r_b⁶/r⁶ by index distance; infinite at zero.
    blockade: Vec<f64>,
}

impl<'a> Kernel<'a> {
    fn new(setup: &'a PairSetup) -> Self {
        let n = setup.n();
        let h = setup.grid.spacing();
        let rb = setup.potential.r_b;
        let blockade = (0..n)
            .map(|d| {
                if rb == 0.0 {
                    0.0
                } else if d == 0 {
                    f64::INFINITY
                } else {
                    (rb / (d as f64 * h)).powi(6)
                }
            })
            .collect();
        Kernel { setup, blockade }
    }

    fn w3(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let s = self.blockade[i.abs_diff(j)] + self.blockade[i.abs_diff(k)] + self.blockade[j.abs_diff(k)];
        if s.is_infinite() {
            ZERO
        } else {
            ONE / Complex64::new(1.0, 2.0 / 3.0 * s)
        }
    }

    /// Per-axis attenuation κ = σ_a ρ/2 at each coordinate.
    fn kappa(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let k_ = &self.setup.k;
        [2.0 * k_[i], 2.0 * k_[j], 2.0 * k_[k]]
    }

    /// Right-hand side f with d(component)/ds = −f along each characteristic.
    fn flux(&self, i: usize, j: usize, k: usize, y: [Complex64; 3]) -> [Complex64; 3] {
        let sss = self.w3(i, j, k) * (y[0] + y[1] + y[2]) / 3.0;
        let kap = self.kappa(i, j, k);
        let eps = self.setup.eps;
        [0, 1, 2].map(|m| kap[m] * (y[m] - sss) + eps * y[m])
    }
}

struct Faces<'a> {
    /// SS of the co-propagating pair (photons 2, 3) indexed [j*n + k].
    co: &'a [Complex64],
    /// SS of the counter pair indexed [i*n + (2 or 3)].
    counter: &'a [Complex64],
}

fn sweep(setup: &PairSetup, faces: &Faces) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let n = setup.n();
    let hh = 0.5 * setup.grid.spacing();
    let ker = Kernel::new(setup);
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut ess = vec![ZERO; n * n * n];
    let mut ses = vec![ZERO; n * n * n];
    let mut sse = vec![ZERO; n * n * n];
    for i in (0..n).rev() {
        for j in 0..n {
            for k in 0..n {
                let fixed = [i == n - 1, j == 0, k == 0];
                let bc = [faces.co[j * n + k], faces.counter[i * n + k], faces.counter[i * n + j]];
                let mut rhs = [ZERO; 3];
                if !fixed[0] {
                    let u = idx(i + 1, j, k);
                    let y = [ess[u], ses[u], sse[u]];
                    rhs[0] = y[0] - hh * ker.flux(i + 1, j, k, y)[0];
                }
                if !fixed[1] {
                    let u = idx(i, j - 1, k);
                    let y = [ess[u], ses[u], sse[u]];
                    rhs[1] = y[1] - hh * ker.flux(i, j - 1, k, y)[1];
                }
                if !fixed[2] {
                    let u = idx(i, j, k - 1);
                    let y = [ess[u], ses[u], sse[u]];
                    rhs[2] = y[2] - hh * ker.flux(i, j, k - 1, y)[2];
                }
                let w = ker.w3(i, j, k) / 3.0;
                let kap = ker.kappa(i, j, k);
                let mut a = [[ZERO; 3]; 3];
                for m in 0..3 {
                    if fixed[m] {
                        a[m][m] = ONE;
                        rhs[m] = bc[m];
                    } else {
                        for q in 0..3 {
                            a[m][q] = -hh * kap[m] * w;
                        }
                        a[m][m] += ONE + hh * (kap[m] + setup.eps);
                    }
                }
                let y = solve3(a, rhs);
                let p = idx(i, j, k);
                ess[p] = y[0];
                ses[p] = y[1];
                sse[p] = y[2];
            }
        }
    }
    (ess, ses, sse)
}

fn residual(setup: &PairSetup, ess: &[Complex64], ses: &[Complex64], sse: &[Complex64]) -> f64 {
    let n = setup.n();
    let h = setup.grid.spacing();
    let ker = Kernel::new(setup);
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let y = |p: usize| [ess[p], ses[p], sse[p]];
    let mut res: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = idx(i, j, k);
                let f = ker.flux(i, j, k, y(p));
                if i + 1 < n {
                    let u = idx(i + 1, j, k);
                    let r = (ess[p] - ess[u]) / h + 0.5 * (f[0] + ker.flux(i + 1, j, k, y(u))[0]);
                    res = res.max(r.norm());
                }
                if j > 0 {
                    let u = idx(i, j - 1, k);
                    let r = (ses[p] - ses[u]) / h + 0.5 * (f[1] + ker.flux(i, j - 1, k, y(u))[1]);
                    res = res.max(r.norm());
                }
                if k > 0 {
                    let u = idx(i, j, k - 1);
                    let r = (sse[p] - sse[u]) / h + 0.5 * (f[2] + ker.flux(i, j, k - 1, y(u))[2]);
                    res = res.max(r.norm());
                }
            }
        }
    }
    res
}

/// Solve the stationary three-photon problem on the profile grid.
pub fn solve_three(params: &PhysicalParams, profile: &MediumProfile) -> Result<TripleField> {
    let setup = PairSetup::new(params, profile)?;
    let n = setup.n();
    if n > MAX_TRIPLE_NODES {
        return Err(Error::Config(format!(
            "three-photon grid of {n}³ nodes exceeds the memory bound of {MAX_TRIPLE_NODES}³"
        )));
    }
    let co = solve_dual_band_setup(setup.clone(), Geometry::Co)?;
    let counter = solve_dual_band_setup(setup.clone(), Geometry::Counter)?;
    let (pair_co, pair_co_ref) = pair_spin(&co);
    let (pair_counter, pair_counter_ref) = pair_spin(&counter);
    let (ess, ses, sse) = sweep(
        &setup,
        &Faces {
            co: &pair_co,
            counter: &pair_counter,
        },
    );
    let residual = residual(&setup, &ess, &ses, &sse);
    if ess.iter().chain(&ses).chain(&sse).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical {
            location: "three-photon sweep".into(),
            message: "non-finite amplitude".into(),
        });
    }
    let reference = setup.without_interaction();
    let (r1, r2, r3) = sweep(
        &reference,
        &Faces {
            co: &pair_co_ref,
            counter: &pair_counter_ref,
        },
    );
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut ref_faces = [Vec::with_capacity(n * n), Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
    for a in 0..n {
        for b in 0..n {
            ref_faces[0].push(r1[idx(0, a, b)]);
            ref_faces[1].push(r2[idx(a, n - 1, b)]);
            ref_faces[2].push(r3[idx(a, b, n - 1)]);
        }
    }
    Ok(TripleField {
        setup,
        ess,
        ses,
        sse,
        ref_faces,
        pair_co,
        pair_counter,
        pair_co_ref,
        pair_counter_ref,
        co,
        counter,
        residual,
    })
}

/// Convert Jacobi coordinates to (t₁ − t₃, t₂ − t₃).
pub fn jacobi_to_delays(eta: f64, zeta: f64) -> (f64, f64) {
    let a = 6f64.sqrt() * zeta;
    let b = 2f64.sqrt() * eta;
    (0.5 * (a + b), 0.5 * (a - b))
}

/// (η, ζ) = ((t₁ − t₂)/√2, (t₁ + t₂ − 2t₃)/√6).
pub fn delays_to_jacobi(t1: f64, t2: f64, t3: f64) -> (f64, f64) {
    ((t1 - t2) / 2f64.sqrt(), (t1 + t2 - 2.0 * t3) / 6f64.sqrt())
}

/// g³ over Jacobi coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMap {
    /// Bin centres, symmetric about 0.
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `g3[a * zeta.len() + b]` at (eta[a], zeta[b]).
    pub g3: Vec<f64>,
    pub bin_width: f64,
    /// Bins without solver coverage, filled with the pairwise product.
    pub filled: Vec<bool>,
    pub method: String,
}

pub const G3_MAPPING_RULE: &str = "first-exit faces with group-delay times; remaining pair evolves with its own stationary g2; \
                                   uncovered bins use the pairwise product";

impl JacobiMap {
    fn locate(axis: &[f64], v: f64) -> Option<usize> {
        let h = axis.get(1).map(|x| x - axis[0])?;
        let k = ((v - axis[0]) / h).round();
        (k >= 0.0 && (k as usize) < axis.len()).then_some(k as usize)
    }

    pub fn get(&self, eta: f64, zeta: f64) -> Option<f64> {
        let a = Self::locate(&self.eta, eta)?;
        let b = Self::locate(&self.zeta, zeta)?;
        Some(self.g3[a * self.zeta.len() + b])
    }

    /// g³(0, 0): all three detections coincide.
    pub fn at_origin(&self) -> f64 {
        self.get(0.0, 0.0).unwrap_or(f64::NAN)
    }

    /// Bilinear interpolation inside the map.
    pub fn sample(&self, eta: f64, zeta: f64) -> Option<f64> {
        let h = self.bin_width;
        let (e0, z0) = (self.eta[0], self.zeta[0]);
        let fe = (eta - e0) / h;
        let fz = (zeta - z0) / h;
        let (ne, nz) = (self.eta.len(), self.zeta.len());
        if fe < 0.0 || fz < 0.0 || fe > (ne - 1) as f64 || fz > (nz - 1) as f64 {
            return None;
        }
        let a = (fe.floor() as usize).min(ne - 2);
        let b = (fz.floor() as usize).min(nz - 2);
        let (x, y) = (fe - a as f64, fz - b as f64);
        let g = |p: usize, q: usize| self.g3[p * nz + q];
        Some((1.0 - x) * (1.0 - y) * g(a, b) + x * (1.0 - y) * g(a + 1, b) + (1.0 - x) * y * g(a, b + 1) + x * y * g(a + 1, b + 1))
    }

    pub fn extent(&self) -> f64 {
        self.eta.last().copied().unwrap_or(0.0).min(self.zeta.last().copied().unwrap_or(0.0))
    }
}

/// Binning of a Jacobi map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiBinning {
    pub bin_width: f64,
    /// Half-extent in η and ζ (μs).
    pub extent: f64,
}

impl JacobiBinning {
    /// Bins of one fifteenth of the group delay, extent five delays plus
    /// five inverse bandwidths.
    pub fn for_medium(d: &DerivedParams) -> Self {
        let delay = d.group_delay();
        JacobiBinning {
            bin_width: delay / 15.0,
            extent: 5.0 * delay + 5.0 / d.bandwidth,
        }
    }
}

/// Pairwise correlation functions behind a three-photon map.
#[derive(Debug, Clone)]
pub struct PairMaps {
    /// g²_cross(τ) with τ = t(+x photon) − t(−x photon).
    pub cross: CorrelationMap,
    /// g²_self(τ) for the co-propagating pair.
    pub self_pair: CorrelationMap,
}

impl PairMaps {
    pub fn from_triple(tf: &TripleField, d: &DerivedParams, bin_width: f64, extent: f64) -> Result<Self> {
        let b = LagBinning { bin_width, extent };
        Ok(PairMaps {
            cross: g2_tau_from_pair_binned(&tf.counter, d, b)?,
            self_pair: g2_tau_from_pair_binned(&tf.co, d, b)?,
        })
    }

    /// g²_cross(t₂−t₁)·g²_cross(t₃−t₁)·g²_self(t₃−t₂).
    pub fn product(&self, t1: f64, t2: f64, t3: f64) -> f64 {
        self.cross.value_at(t2 - t1) * self.cross.value_at(t3 - t1) * self.self_pair.value_at(t3 - t2)
    }
}

/// Detection-time map of the three-photon field.
pub fn g3_map(tf: &TripleField, d: &DerivedParams) -> Result<JacobiMap> {
    g3_map_binned(tf, d, JacobiBinning::for_medium(d))
}

pub fn g3_map_binned(tf: &TripleField, d: &DerivedParams, binning: JacobiBinning) -> Result<JacobiMap> {
    let s = &tf.setup;
    let bw = binning.bin_width;
    if !(bw > 0.0) || !(binning.extent > bw) {
        return Err(invalid("Jacobi binning needs 0 < bin width < extent"));
    }
    let step = s.max_delay_step();
    if bw < step {
        return Err(Error::Resolution(format!(
            "bin width {bw:.4} μs is below the grid delay step {step:.4} μs"
        )));
    }
    let pairs = PairMaps::from_triple(tf, d, bw.min(0.01).max(step), 2.0 * binning.extent + 2.0 * s.total_delay())?;
    let n = s.n();
    let axis = CorrelationMap::lag_grid(bw, binning.extent);
    let m = axis.len();
    let half = (m / 2) as f64;
    let mut num = vec![0.0; m * m];
    let mut den = vec![0.0; m * m];
    let mut hits = vec![0usize; m * m];
    // Delay measure around each node.
    let dl = &s.delay_from_left;
    let measure: Vec<f64> = (0..n)
        .map(|i| {
            let lo = if i == 0 { dl[0] } else { 0.5 * (dl[i - 1] + dl[i]) };
            let hi = if i + 1 == n { dl[n - 1] } else { 0.5 * (dl[i] + dl[i + 1]) };
            (hi - lo).max(0.0)
        })
        .collect();
    let mut deposit = |t1: f64, t2: f64, t3: f64, amp2: f64, norm2: f64, w: f64| {
        let (eta, zeta) = delays_to_jacobi(t1, t2, t3);
        let a = (eta / bw).round() + half;
        let b = (zeta / bw).round() + half;
        if a < 0.0 || b < 0.0 || a >= m as f64 || b >= m as f64 {
            return;
        }
        let p = a as usize * m + b as usize;
        num[p] += w * amp2;
        den[p] += w * norm2;
        hits[p] += 1;
    };
    let faces = tf.exit_faces();
    for a in 0..n {
        for b in 0..n {
            let w = measure[a] * measure[b];
            let q = a * n + b;
            // Photon 1 leaves first; photons 2, 3 stored at (a, b).
            {
                let t2 = s.delay_to_right(a);
                let t3 = s.delay_to_right(b);
                let amp = faces[0][q].norm_sqr() / tf.ref_faces[0][q].norm_sqr();
                let pair = tf.pair_co[q].norm_sqr() / tf.pair_co_ref[q].norm_sqr();
                let g = pairs.self_pair.value_at(t3 - t2);
                deposit(0.0, t2, t3, amp * g, pair, w);
            }
            // Photon 2 leaves first; photons 1, 3 stored at (a, b).
            {
                let t1 = s.delay_from_left[a];
                let t3 = s.delay_to_right(b);
                let amp = faces[1][q].norm_sqr() / tf.ref_faces[1][q].norm_sqr();
                let pair = tf.pair_counter[q].norm_sqr() / tf.pair_counter_ref[q].norm_sqr();
                let g = pairs.cross.value_at(t3 - t1);
                deposit(t1, 0.0, t3, amp * g, pair, w);
            }
            // Photon 3 leaves first; photons 1, 2 stored at (a, b).
            {
                let t1 = s.delay_from_left[a];
                let t2 = s.delay_to_right(b);
                let amp = faces[2][q].norm_sqr() / tf.ref_faces[2][q].norm_sqr();
                let pair = tf.pair_counter[q].norm_sqr() / tf.pair_counter_ref[q].norm_sqr();
                let g = pairs.cross.value_at(t2 - t1);
                deposit(t1, t2, 0.0, amp * g, pair, w);
            }
        }
    }
    let peak_den = den.iter().copied().fold(0.0, f64::max);
    let mut g3 = vec![0.0; m * m];
    let mut filled = vec![false; m * m];
    for a in 0..m {
        for b in 0..m {
            let p = a * m + b;
            if hits[p] > 0 && den[p] > 1e-12 * peak_den {
                g3[p] = num[p] / den[p];
            } else {
                let (d13, d23) = jacobi_to_delays(axis[a], axis[b]);
                g3[p] = pairs.product(d13, d23, 0.0);
                filled[p] = true;
            }
        }
    }
    Ok(JacobiMap {
        eta: axis.clone(),
        zeta: axis,
        g3,
        bin_width: bw,
        filled,
        method: G3_MAPPING_RULE.into(),
    })
}

/// [g²_cross(0)]²·g²_self(0): the expectation from independent pairwise blockade.
pub fn pairwise_prediction(g2_cross_0: f64, g2_self_0: f64) -> f64 {
    g2_cross_0 * g2_cross_0 * g2_self_0
}

/// Pairwise g²(0) values read far from the origin of a Jacobi map, where one
/// detection is well separated from the other two: (g²_cross(0), g²_self(0)).
///
/// Each value is read from the bins whose centres lie closest to the ray
/// (t₁ = t₂ with t₃ far for cross, t₂ = t₃ with t₁ far for self), in an outer
/// and an inner shell; disagreement between the shells means no plateau.
pub fn offcenter_pair_extraction(map: &JacobiMap) -> Result<(f64, f64)> {
    let nz = map.zeta.len();
    let reach = map.extent();
    if reach <= 2.0 * map.bin_width {
        return Err(Error::Extent("Jacobi map too small for off-centre extraction".into()));
    }
    // Best-aligned bin per shell: (distance from the ray, value).
    let mut best = [[(f64::INFINITY, f64::NAN); 2]; 2];
    for (a, &eta) in map.eta.iter().enumerate() {
        for (b, &zeta) in map.zeta.iter().enumerate() {
            let (d13, d23) = jacobi_to_delays(eta, zeta);
            let g = map.g3[a * nz + b];
            // (coordinate that must vanish, separation of the far photon)
            let rays = [(d13 - d23, 0.5 * (d13 + d23)), (d23, d13)];
            for (r, (off, far)) in rays.into_iter().enumerate() {
                let shell = match far.abs() / reach {
                    x if x >= 0.85 => 0,
                    x if (0.55..0.75).contains(&x) => 1,
                    _ => continue,
                };
                if off.abs() < best[r][shell].0 {
                    best[r][shell] = (off.abs(), g);
                }
            }
        }
    }
    const PLATEAU_TOLERANCE: f64 = 0.02;
    let mut out = [0.0; 2];
    for (r, name) in ["cross", "self"].iter().enumerate() {
        let [(d_far, far), (d_mid, mid)] = best[r];
        if !(d_far <= 0.25 * map.bin_width && d_mid <= 0.25 * map.bin_width) {
            return Err(Error::Extent(format!("{name} ray is not resolved by the map bins")));
        }
        if (far - mid).abs() > PLATEAU_TOLERANCE {
            return Err(Error::Extent(format!("no {name} plateau within the map: {mid:.4} → {far:.4}")));
        }
        out[r] = far;
    }
    Ok((out[0], out[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, mhz, C6_90S};

    fn setup(od: f64, n: usize) -> (PhysicalParams, MediumProfile) {
        let p = PhysicalParams::dissipative(mhz(5.0), 0.0, C6_90S, 0.29).unwrap();
        let prof = MediumProfile::gaussian_with_od(75.0, od, 0.29, n, 3.0).unwrap();
        (p, prof)
    }

    #[test]
    fn jacobi_round_trip() {
        let (eta, zeta) = delays_to_jacobi(0.7, -0.2, 0.1);
        let (a, b) = jacobi_to_delays(eta, zeta);
        assert!((a - 0.6).abs() < 1e-12 && (b + 0.3).abs() < 1e-12);
    }

    #[test]
    fn solve3_matches_direct_product() {
        let a = [
            [Complex64::new(2.0, 0.1), ONE, Complex64::new(0.0, 0.5)],
            [ZERO, Complex64::new(1.0, -1.0), ONE],
            [Complex64::new(0.3, 0.0), ONE, Complex64::new(3.0, 0.0)],
        ];
        let x = [ONE, Complex64::new(0.0, 2.0), Complex64::new(-1.0, 0.5)];
        let b = [0, 1, 2].map(|r| (0..3).map(|c| a[r][c] * x[c]).sum::<Complex64>());
        let y = solve3(a, b);
        assert!((0..3).all(|m| (y[m] - x[m]).norm() < 1e-12));
    }

    #[test]
    fn non_interacting_triple_is_flat() {
        let (p, prof) = setup(9.5, 32);
        let p0 = p.without_interaction();
        let tf = solve_three(&p0, &prof).unwrap();
        assert!(tf.residual < 1e-7);
        let d = derive(&p0, &prof).unwrap();
        let map = g3_map_binned(
            &tf,
            &d,
            JacobiBinning {
                bin_width: 0.02,
                extent: 0.5,
            },
        )
        .unwrap();
        assert!(map.g3.iter().all(|g| (g - 1.0).abs() < 1e-9));
        let (c, s) = offcenter_pair_extraction(&map).unwrap();
        assert!((c - 1.0).abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exchange_symmetry_and_bounds() {
        let (p, prof) = setup(9.5, 40);
        let tf = solve_three(&p, &prof).unwrap();
        assert!(tf.residual < 1e-7, "{}", tf.residual);
        let n = tf.n();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = tf.ses[tf.idx(i, j, k)];
                    let b = tf.sse[tf.idx(i, k, j)];
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
        assert!(tf.max_symmetric_abs2() <= 1.0 + 1e-9);
        assert_eq!(pairwise_prediction(1.0, 1.0), 1.0);
        assert_eq!(pairwise_prediction(0.0, 0.4), 0.0);
    }
}
