//! Photon time tags: file formats, correlation estimators and a Monte Carlo
//! sampler that turns model correlation functions into synthetic tag streams.
//!
//! Detector D1 sits on one side of the medium and D2, D3 share the other side
//! behind a beam splitter. Cross correlations pair D1 with either of D2/D3
//! (τ = t_B − t_A), self correlations pair D2 with D3 (τ = t₃ − t₂), and
//! triples take one photon from each detector.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationKind, CorrelationMap};
use crate::error::{invalid, Error, Result};
use crate::linear::FloorLevels;
use crate::pulse::G2TimeMap;
use crate::triple::{delays_to_jacobi, jacobi_to_delays, JacobiMap};

const PS_PER_US: f64 = 1e6;
const BINARY_MAGIC: &[u8; 5] = b"PTAG1";
const CSV_HEADER: &str = "window_id,detector,time_ps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
    D3,
}

impl Detector {
    pub fn from_id(id: u64) -> Option<Self> {
        match id {
            1 => Some(Detector::D1),
            2 => Some(Detector::D2),
            3 => Some(Detector::D3),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        self as u8 + 1
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Side of the medium a detector looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Output of the photons travelling towards −x (photon 1 in the solvers).
    A,
    /// Output of the photons travelling towards +x.
    B,
}

/// Assignment of detectors to sides: exactly one detector on one side and
/// two on the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideMap(pub [Side; 3]);

impl Default for SideMap {
    fn default() -> Self {
        SideMap([Side::A, Side::B, Side::B])
    }
}

impl SideMap {
    pub fn new(sides: [Side; 3]) -> Result<Self> {
        let a = sides.iter().filter(|s| **s == Side::A).count();
        if a == 0 || a == 3 {
            return Err(invalid("side map must put detectors on both sides"));
        }
        Ok(SideMap(sides))
    }

    pub fn side(&self, d: Detector) -> Side {
        self.0[d.index()]
    }

    /// The side holding a single detector, and that detector.
    fn lone(&self) -> (Side, Detector) {
        let a: Vec<Detector> = [Detector::D1, Detector::D2, Detector::D3]
            .into_iter()
            .filter(|d| self.side(*d) == Side::A)
            .collect();
        let b: Vec<Detector> = [Detector::D1, Detector::D2, Detector::D3]
            .into_iter()
            .filter(|d| self.side(*d) == Side::B)
            .collect();
        if a.len() == 1 {
            (Side::A, a[0])
        } else {
            (Side::B, b[0])
        }
    }

    /// The two detectors sharing a side, lower id first.
    fn pair(&self) -> (Detector, Detector) {
        let (side, _) = self.lone();
        let mut v: Vec<Detector> = [Detector::D1, Detector::D2, Detector::D3]
            .into_iter()
            .filter(|d| self.side(*d) != side)
            .collect();
        v.sort();
        (v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagRecord {
    pub window_id: u32,
    pub detector: Detector,
    pub time_ps: u64,
}

impl TagRecord {
    fn sort_key(&self) -> (u32, u64, u8) {
        (self.window_id, self.time_ps, self.detector.id())
    }
}

/// Time-ordered tags from a sequence of equal detection windows.
#[derive(Debug, Clone, PartialEq)]
pub struct TagStream {
    pub records: Vec<TagRecord>,
    /// Window length (μs).
    pub window_length: f64,
    /// Number of windows, including empty ones.
    pub n_windows: u32,
    /// Model time of tag time zero (μs).
    pub time_origin: f64,
    pub side_map: SideMap,
    /// Lines skipped as malformed during ingestion.
    pub skipped_lines: usize,
}

impl TagStream {
    pub fn new(mut records: Vec<TagRecord>, window_length: f64, n_windows: u32) -> Result<Self> {
        records.sort_by_key(TagRecord::sort_key);
        let s = TagStream {
            records,
            window_length,
            n_windows,
            time_origin: 0.0,
            side_map: SideMap::default(),
            skipped_lines: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_length > 0.0) {
            return Err(invalid("window length must be > 0"));
        }
        let limit = (self.window_length * PS_PER_US).round() as u64;
        for r in &self.records {
            if r.time_ps >= limit {
                return Err(invalid(format!(
                    "tag at {} ps in window {} exceeds the window length",
                    r.time_ps, r.window_id
                )));
            }
            if r.window_id >= self.n_windows {
                return Err(invalid(format!("window id {} ≥ window count {}", r.window_id, self.n_windows)));
            }
        }
        if self.records.windows(2).any(|w| w[0].sort_key() > w[1].sort_key()) {
            return Err(invalid("tag stream is not sorted by (window, time)"));
        }
        Ok(())
    }

    /// Index ranges of consecutive records sharing a window.
    fn window_slices(&self) -> Vec<&[TagRecord]> {
        self.records.chunk_by(|a, b| a.window_id == b.window_id).collect()
    }

    /// Stream restricted to the first `n` windows.
    pub fn first_windows(&self, n: u32) -> TagStream {
        TagStream {
            records: self.records.iter().filter(|r| r.window_id < n).copied().collect(),
            n_windows: n.min(self.n_windows),
            ..self.clone()
        }
    }

    /// Stream with window ids relabelled by `perm` (a permutation of 0..n_windows).
    pub fn relabel_windows(&self, perm: &[u32]) -> Result<TagStream> {
        if perm.len() != self.n_windows as usize {
            return Err(invalid("permutation length differs from the window count"));
        }
        let records = self
            .records
            .iter()
            .map(|r| TagRecord {
                window_id: perm[r.window_id as usize],
                ..*r
            })
            .collect();
        let mut s = TagStream::new(records, self.window_length, self.n_windows)?;
        s.side_map = self.side_map;
        s.time_origin = self.time_origin;
        Ok(s)
    }

    pub fn count(&self, d: Detector) -> usize {
        self.records.iter().filter(|r| r.detector == d).count()
    }

    /// Mean detection rate per μs on a detector.
    pub fn rate(&self, d: Detector) -> f64 {
        self.count(d) as f64 / (self.n_windows as f64 * self.window_length)
    }

    pub fn side_rate(&self, side: Side) -> f64 {
        [Detector::D1, Detector::D2, Detector::D3]
            .into_iter()
            .filter(|d| self.side_map.side(*d) == side)
            .map(|d| self.rate(d))
            .sum()
    }
}

/// On-disk tag formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagFormat {
    Csv,
    Binary,
}

impl FromStr for TagFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TagFormat::Csv),
            "bin" | "binary" | "ptag" => Ok(TagFormat::Binary),
            other => Err(Error::Format(format!("unknown tag format '{other}'"))),
        }
    }
}

impl fmt::Display for TagFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagFormat::Csv => "csv",
            TagFormat::Binary => "binary",
        })
    }
}

impl TagFormat {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::Format(format!("cannot infer tag format of {}", path.display())))?
            .parse()
    }
}

fn infer_layout(records: &[TagRecord]) -> (f64, u32) {
    let max_t = records.iter().map(|r| r.time_ps).max().unwrap_or(0);
    let windows = records.iter().map(|r| r.window_id + 1).max().unwrap_or(0);
    ((max_t as f64 / PS_PER_US).floor() + 1.0, windows)
}

/// Read a tag file. Window length and count come from the CSV metadata
/// comment when present and are otherwise inferred from the records.
pub fn ingest(path: &Path, format: TagFormat) -> Result<TagStream> {
    match format {
        TagFormat::Csv => ingest_csv(path),
        TagFormat::Binary => ingest_binary(path),
    }
}

fn ingest_csv(path: &Path) -> Result<TagStream> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut skipped = 0;
    let mut window_length = None;
    let mut n_windows = None;
    let mut origin = 0.0;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                if let Some((key, val)) = kv.split_once('=') {
                    match key {
                        "window_length_us" => window_length = val.parse().ok(),
                        "windows" => n_windows = val.parse().ok(),
                        "time_origin_us" => origin = val.parse().unwrap_or(0.0),
                        _ => {}
                    }
                }
            }
            continue;
        }
        if t == CSV_HEADER {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [w, d, tp] => match (w.parse::<u32>(), d.parse::<u64>(), tp.parse::<u64>()) {
                (Ok(w), Ok(d), Ok(tp)) => Some((w, d, tp)),
                _ => None,
            },
            _ => None,
        };
        let Some((window_id, det, time_ps)) = parsed else {
            skipped += 1;
            continue;
        };
        let detector = Detector::from_id(det).ok_or_else(|| parse_err(lineno, format!("detector {det} outside 1..=3")))?;
        records.push(TagRecord {
            window_id,
            detector,
            time_ps,
        });
    }
    let (wl, nw) = infer_layout(&records);
    let mut s = TagStream::new(records, window_length.unwrap_or(wl), n_windows.unwrap_or(nw))?;
    s.time_origin = origin;
    s.skipped_lines = skipped;
    Ok(s)
}

fn ingest_binary(path: &Path) -> Result<TagStream> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 9 || &bytes[..5] != BINARY_MAGIC {
        return Err(Error::Format(format!("{}: missing PTAG1 header", path.display())));
    }
    let count = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    const RECORD: usize = 13;
    let body = &bytes[9..];
    if body.len() != count * RECORD {
        return Err(Error::Format(format!(
            "{}: header announces {count} records but the body holds {} bytes",
            path.display(),
            body.len()
        )));
    }
    let mut records = Vec::with_capacity(count);
    for (k, chunk) in body.chunks_exact(RECORD).enumerate() {
        let window_id = u32::from_le_bytes(chunk[..4].try_into().expect("4 bytes"));
        let det = chunk[4];
        let time_ps = u64::from_le_bytes(chunk[5..13].try_into().expect("8 bytes"));
        let detector = Detector::from_id(det as u64).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message: format!("detector {det} outside 1..=3"),
        })?;
        let r = TagRecord {
            window_id,
            detector,
            time_ps,
        };
        if let Some(prev) = records.last() {
            if TagRecord::sort_key(prev) > r.sort_key() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    message: "binary stream is not sorted by (window, time)".into(),
                });
            }
        }
        records.push(r);
    }
    let (wl, nw) = infer_layout(&records);
    TagStream::new(records, wl, nw)
}

/// Write a tag stream; CSV files carry a metadata comment and may carry an
/// extra leading comment (for example a configuration hash).
pub fn write_tags(stream: &TagStream, path: &Path, format: TagFormat, comment: Option<&str>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        TagFormat::Csv => {
            if let Some(c) = comment {
                writeln!(w, "# {c}")?;
            }
            writeln!(
                w,
                "# window_length_us={} windows={} time_origin_us={}",
                stream.window_length, stream.n_windows, stream.time_origin
            )?;
            writeln!(w, "{CSV_HEADER}")?;
            for r in &stream.records {
                writeln!(w, "{},{},{}", r.window_id, r.detector.id(), r.time_ps)?;
            }
        }
        TagFormat::Binary => {
            w.write_all(BINARY_MAGIC)?;
            let n = u32::try_from(stream.records.len()).map_err(|_| Error::Format("too many records for PTAG1".into()))?;
            w.write_all(&n.to_le_bytes())?;
            for r in &stream.records {
                w.write_all(&r.window_id.to_le_bytes())?;
                w.write_all(&[r.detector.id()])?;
                w.write_all(&r.time_ps.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reference used to turn coincidence counts into g.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Singles-product expectation rescaled so that the long-lag plateau
    /// averages to one.
    Plateau,
    /// Expected uncorrelated coincidences from the measured singles.
    SinglesProduct,
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plateau" => Ok(Normalization::Plateau),
            "singles" | "singles-product" => Ok(Normalization::SinglesProduct),
            other => Err(invalid(format!("unknown normalization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Histogram bin width (μs).
    pub bin_width: f64,
    /// Largest lag (μs); for g³ the half-extent in η and ζ.
    pub max_lag: f64,
    pub normalization: Normalization,
}

impl EstimatorConfig {
    /// Bins with |τ| beyond this fraction of `max_lag` form the plateau.
    pub const PLATEAU_FRACTION: f64 = 2.0 / 3.0;
    /// Coincidences per plateau bin below which a wide-bin warning is issued.
    pub const MIN_PLATEAU_COUNTS: f64 = 100.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !(self.max_lag > 2.0 * self.bin_width) {
            return Err(invalid("estimator needs bin width > 0 and max lag > two bins"));
        }
        Ok(())
    }
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            bin_width: 0.05,
            max_lag: 6.0,
            normalization: Normalization::Plateau,
        }
    }
}

fn to_us(ps: u64) -> f64 {
    ps as f64 / PS_PER_US
}

/// Detector groups (first, second) forming the pairs of a correlation kind.
fn pair_groups(map: &SideMap, kind: CorrelationKind) -> (Vec<Detector>, Vec<Detector>) {
    let all = [Detector::D1, Detector::D2, Detector::D3];
    match kind {
        CorrelationKind::Cross => (
            all.into_iter().filter(|d| map.side(*d) == Side::A).collect(),
            all.into_iter().filter(|d| map.side(*d) == Side::B).collect(),
        ),
        CorrelationKind::SelfPair => {
            let (a, b) = map.pair();
            (vec![a], vec![b])
        }
    }
}

/// Sub-bins per lag bin in the singles-product expectation.
const SUB: usize = 8;

fn lag_histograms(stream: &TagStream, first: &[Detector], second: &[Detector], bin: f64, half: i64) -> Vec<u64> {
    let m = (2 * half + 1) as usize;
    let reach = (half as f64 + 0.5) * bin;
    stream
        .window_slices()
        .par_iter()
        .fold(
            || vec![0u64; m],
            |mut h, w| {
                let a: Vec<f64> = w.iter().filter(|r| first.contains(&r.detector)).map(|r| to_us(r.time_ps)).collect();
                let b: Vec<f64> = w.iter().filter(|r| second.contains(&r.detector)).map(|r| to_us(r.time_ps)).collect();
                let mut lo = 0;
                for ta in &a {
                    while lo < b.len() && b[lo] < ta - reach {
                        lo += 1;
                    }
                    for tb in &b[lo..] {
                        let tau = tb - ta;
                        if tau >= reach {
                            break;
                        }
                        let k = (tau / bin).round() as i64 + half;
                        if (0..m as i64).contains(&k) {
                            h[k as usize] += 1;
                        }
                    }
                }
                h
            },
        )
        .reduce(|| vec![0u64; m], |mut x, y| {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
            x
        })
}

/// Arrival-time histogram (all windows folded) of a detector group.
fn time_histogram(stream: &TagStream, group: &[Detector], h: f64) -> Vec<f64> {
    let n = (stream.window_length / h).ceil() as usize + 1;
    let mut out = vec![0.0; n];
    for r in stream.records.iter().filter(|r| group.contains(&r.detector)) {
        let k = ((to_us(r.time_ps) / h).floor() as usize).min(n - 1);
        out[k] += 1.0;
    }
    out
}

/// Expected uncorrelated coincidences per lag bin: (1/N_w)·Σ h_a(t) h_b(t+τ).
fn singles_expectation(stream: &TagStream, first: &[Detector], second: &[Detector], bin: f64, half: i64) -> Vec<f64> {
    let h = bin / SUB as f64;
    let ha = time_histogram(stream, first, h);
    let hb = time_histogram(stream, second, h);
    let m = (2 * half + 1) as usize;
    let max_d = (half * SUB as i64) + (SUB as i64) / 2;
    let nw = stream.n_windows as f64;
    let n = ha.len() as i64;
    (0..m)
        .into_par_iter()
        .map(|k| {
            let centre = (k as i64 - half) * SUB as i64;
            let lo = centre - SUB as i64 / 2;
            let mut acc = 0.0;
            for d in lo..lo + SUB as i64 {
                if d.abs() > max_d {
                    continue;
                }
                for i in 0.max(-d)..n.min(n - d) {
                    acc += ha[i as usize] * hb[(i + d) as usize];
                }
            }
            acc / nw
        })
        .collect()
}

/// g²(τ) from a tag stream.
pub fn estimate_g2(stream: &TagStream, config: &EstimatorConfig, mode: CorrelationKind) -> Result<CorrelationMap> {
    config.validate()?;
    if stream.records.is_empty() {
        return Err(Error::NoData("empty tag stream".into()));
    }
    let (first, second) = pair_groups(&stream.side_map, mode);
    let half = (config.max_lag / config.bin_width).round() as i64;
    let counts = lag_histograms(stream, &first, &second, config.bin_width, half);
    let expected = singles_expectation(stream, &first, &second, config.bin_width, half);
    let tau = CorrelationMap::lag_grid(config.bin_width, config.max_lag);
    let mut g2: Vec<f64> = counts.iter().zip(&expected).map(|(c, e)| if *e > 0.0 { *c as f64 / e } else { f64::NAN }).collect();
    let mut error: Vec<f64> = counts
        .iter()
        .zip(&expected)
        .map(|(c, e)| if *e > 0.0 { (*c as f64).max(1.0).sqrt() / e } else { f64::NAN })
        .collect();
    let plateau_from = EstimatorConfig::PLATEAU_FRACTION * config.max_lag;
    let plateau_bins: Vec<usize> = (0..tau.len()).filter(|&k| tau[k].abs() >= plateau_from && g2[k].is_finite()).collect();
    let mut label = match config.normalization {
        Normalization::Plateau => format!("long-lag plateau |τ| ≥ {plateau_from:.3} μs"),
        Normalization::SinglesProduct => "singles product".to_string(),
    };
    if config.normalization == Normalization::Plateau {
        let mean = plateau_bins.iter().map(|&k| g2[k]).sum::<f64>() / plateau_bins.len().max(1) as f64;
        if !(mean > 0.0) {
            return Err(Error::Normalization("zero long-lag plateau".into()));
        }
        g2.iter_mut().for_each(|g| *g /= mean);
        error.iter_mut().for_each(|e| *e /= mean);
    } else if expected.iter().all(|e| *e <= 0.0) {
        return Err(Error::Normalization("singles product vanishes".into()));
    }
    let plateau_counts = plateau_bins.iter().map(|&k| counts[k] as f64).sum::<f64>() / plateau_bins.len().max(1) as f64;
    if plateau_counts < EstimatorConfig::MIN_PLATEAU_COUNTS {
        label.push_str(&format!("; warning: {plateau_counts:.0} coincidences per plateau bin, consider wider bins"));
    }
    Ok(CorrelationMap {
        kind: mode,
        tau,
        g2,
        bin_width: config.bin_width,
        error: Some(error),
        normalization: label,
    })
}

/// Sub-samples per axis when integrating the g³ expectation over a bin.
const G3_SUB: usize = 6;

/// g³(η, ζ) from a tag stream, with t₁ on the lone detector and t₂, t₃ on the
/// two detectors sharing a side (lower id first).
///
/// The uncorrelated expectation assumes stationary rates within a window.
pub fn estimate_g3(stream: &TagStream, config: &EstimatorConfig) -> Result<JacobiMap> {
    config.validate()?;
    if stream.records.is_empty() {
        return Err(Error::NoData("empty tag stream".into()));
    }
    let (_, d1) = stream.side_map.lone();
    let (d2, d3) = stream.side_map.pair();
    let bw = config.bin_width;
    let axis = CorrelationMap::lag_grid(bw, config.max_lag);
    let m = axis.len();
    let half = (m / 2) as f64;
    // Largest |t_i − t_j| reachable inside the map.
    let reach = (6f64.sqrt() + 2f64.sqrt()) / 2.0 * (config.max_lag + bw);
    let counts = stream
        .window_slices()
        .par_iter()
        .fold(
            || vec![0u64; m * m],
            |mut h, w| {
                let pick = |d: Detector| -> Vec<f64> { w.iter().filter(|r| r.detector == d).map(|r| to_us(r.time_ps)).collect() };
                let (a, b, c) = (pick(d1), pick(d2), pick(d3));
                for t1 in &a {
                    for t2 in b.iter().filter(|t| (*t - t1).abs() <= reach) {
                        for t3 in c.iter().filter(|t| (*t - t1).abs() <= reach) {
                            let (eta, zeta) = delays_to_jacobi(*t1, *t2, *t3);
                            let p = (eta / bw).round() + half;
                            let q = (zeta / bw).round() + half;
                            if p >= 0.0 && q >= 0.0 && p < m as f64 && q < m as f64 {
                                h[p as usize * m + q as usize] += 1;
                            }
                        }
                    }
                }
                h
            },
        )
        .reduce(|| vec![0u64; m * m], |mut x, y| {
            x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
            x
        });
    let (r1, r2, r3) = (stream.rate(d1), stream.rate(d2), stream.rate(d3));
    let nw = stream.n_windows as f64;
    let t_win = stream.window_length;
    // dt₁₃·dt₂₃ = √3·dη·dζ.
    let cell = 3f64.sqrt() * bw * bw / (G3_SUB * G3_SUB) as f64;
    let expected: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|p| {
            let (a, b) = (p / m, p % m);
            let mut acc = 0.0;
            for u in 0..G3_SUB {
                for v in 0..G3_SUB {
                    let eta = axis[a] + bw * ((u as f64 + 0.5) / G3_SUB as f64 - 0.5);
                    let zeta = axis[b] + bw * ((v as f64 + 0.5) / G3_SUB as f64 - 0.5);
                    let (d13, d23) = jacobi_to_delays(eta, zeta);
                    let span = d13.max(d23).max(0.0) - d13.min(d23).min(0.0);
                    acc += (t_win - span).max(0.0);
                }
            }
            nw * r1 * r2 * r3 * acc * cell
        })
        .collect();
    if expected.iter().all(|e| *e <= 0.0) || r1 * r2 * r3 == 0.0 {
        return Err(Error::Normalization("no triples expected from the singles".into()));
    }
    let mut g3: Vec<f64> = counts.iter().zip(&expected).map(|(c, e)| *c as f64 / e).collect();
    let mut method = "singles product with window overlap".to_string();
    if config.normalization == Normalization::Plateau {
        let far = EstimatorConfig::PLATEAU_FRACTION * config.max_lag;
        let sel: Vec<f64> = (0..m * m)
            .filter(|p| axis[p / m].abs().max(axis[p % m].abs()) >= far)
            .map(|p| g3[p])
            .collect();
        let mean = sel.iter().sum::<f64>() / sel.len().max(1) as f64;
        if !(mean > 0.0) {
            return Err(Error::Normalization("zero three-photon plateau".into()));
        }
        g3.iter_mut().for_each(|g| *g /= mean);
        method = format!("outer plateau max(|η|,|ζ|) ≥ {far:.3} μs");
    }
    Ok(JacobiMap {
        eta: axis.clone(),
        zeta: axis,
        g3,
        bin_width: bw,
        filled: vec![false; m * m],
        method,
    })
}

/// Pulse-level g² in a single coincidence bin [T₁ ± T_w] × [T₂ ± T_w]
/// (model time), normalised by the singles product.
pub fn pulse_g2_estimate(stream: &TagStream, t1: f64, t2: f64, t_w: f64) -> Result<f64> {
    let (first, second) = pair_groups(&stream.side_map, CorrelationKind::Cross);
    let o = stream.time_origin;
    let inside = |t: f64, c: f64| (t + o - c).abs() <= t_w;
    let (pairs, na, nb) = stream
        .window_slices()
        .par_iter()
        .map(|w| {
            let a = w.iter().filter(|r| first.contains(&r.detector) && inside(to_us(r.time_ps), t1)).count();
            let b = w.iter().filter(|r| second.contains(&r.detector) && inside(to_us(r.time_ps), t2)).count();
            ((a * b) as u64, a as u64, b as u64)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    if na == 0 || nb == 0 {
        return Err(Error::UndefinedMetric("no singles inside the pulse bin".into()));
    }
    let expected = na as f64 * nb as f64 / stream.n_windows as f64;
    Ok(pairs as f64 / expected)
}

/// Spectator fractions (f_A, f_B) reproducing the floors: a pair is
/// correlated only if neither photon is a spectator, so
/// s_self = 1 − (1 − f_B)² and s_cross = 1 − (1 − f_A)(1 − f_B).
pub fn spectator_fractions(floors: &FloorLevels) -> Result<(f64, f64)> {
    let f_b = 1.0 - (1.0 - floors.s_self).sqrt();
    let f_a = 1.0 - (1.0 - floors.s_cross) / (1.0 - f_b);
    if !(0.0..1.0).contains(&f_a) {
        return Err(Error::Config(format!(
            "floors s_cross = {}, s_self = {} need a negative spectator fraction",
            floors.s_cross, floors.s_self
        )));
    }
    Ok((f_a, f_b))
}

/// Floored g² of a pair with independent spectators: s + (1 − s)·g.
pub fn spectator_floor(g: f64, s: f64) -> f64 {
    s + (1.0 - s) * g
}

/// Floored g³ for one photon on side A and two on side B: average over
/// which photons are spectators.
pub fn spectator_floor_g3(g3: f64, cross_12: f64, cross_13: f64, self_23: f64, floors: &FloorLevels) -> Result<f64> {
    let (fa, fb) = spectator_fractions(floors)?;
    let (pa, pb) = (1.0 - fa, 1.0 - fb);
    let all = pa * pb * pb;
    let only_a = fa * pb * pb;
    let only_2 = pa * fb * pb;
    let only_3 = pa * pb * fb;
    let rest = 1.0 - all - only_a - only_2 - only_3;
    Ok(all * g3 + only_a * self_23 + only_2 * cross_13 + only_3 * cross_12 + rest)
}

/// Correlation model driving the sampler.
#[derive(Debug, Clone)]
pub enum SynthesisModel {
    /// Stationary g²_cross(τ = t_B − t_A) and optional g²_self.
    Stationary {
        cross: CorrelationMap,
        self_pair: Option<CorrelationMap>,
    },
    /// Stationary pair functions plus the three-photon map.
    Triple {
        cross: CorrelationMap,
        self_pair: CorrelationMap,
        g3: JacobiMap,
    },
    /// Two-time map with single-photon arrival profiles; the window spans the map.
    Pulsed(G2TimeMap),
}

impl SynthesisModel {
    /// Uncorrelated photons.
    pub fn flat() -> Self {
        let tau = CorrelationMap::lag_grid(0.1, 1.0);
        let g2 = vec![1.0; tau.len()];
        SynthesisModel::Stationary {
            cross: CorrelationMap {
                kind: CorrelationKind::Cross,
                g2,
                tau,
                bin_width: 0.1,
                error: None,
                normalization: "flat".into(),
            },
            self_pair: None,
        }
    }

    fn max_value(&self) -> f64 {
        let mx = |m: &CorrelationMap| m.g2.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        match self {
            SynthesisModel::Stationary { cross, self_pair } => mx(cross).max(self_pair.as_ref().map_or(0.0, mx)),
            SynthesisModel::Triple { cross, self_pair, .. } => mx(cross).max(mx(self_pair)),
            SynthesisModel::Pulsed(m) => m.map.max_finite(),
        }
    }

    /// Lag beyond which photons are uncorrelated.
    fn range(&self) -> f64 {
        let ext = |m: &CorrelationMap| m.tau.iter().fold(0.0f64, |a, t| a.max(t.abs()));
        match self {
            SynthesisModel::Stationary { cross, self_pair } => ext(cross).max(self_pair.as_ref().map_or(0.0, ext)),
            SynthesisModel::Triple { cross, self_pair, g3 } => ext(cross).max(ext(self_pair)).max(2.0 * g3.extent()),
            SynthesisModel::Pulsed(m) => m.map.t1.last().unwrap_or(&0.0) - m.map.t1.first().unwrap_or(&0.0),
        }
    }

    fn cross(&self, ta: f64, tb: f64) -> f64 {
        match self {
            SynthesisModel::Stationary { cross, .. } | SynthesisModel::Triple { cross, .. } => lookup(cross, tb - ta),
            SynthesisModel::Pulsed(m) => {
                let v = m.map.sample(ta, tb);
                if v.is_finite() {
                    v
                } else {
                    1.0
                }
            }
        }
    }

    fn self_b(&self, dt: f64) -> f64 {
        match self {
            SynthesisModel::Stationary { self_pair: Some(s), .. } | SynthesisModel::Triple { self_pair: s, .. } => lookup(s, dt),
            _ => 1.0,
        }
    }

    /// g³ relative to the pairwise product for (t_A, t_B, t_B').
    fn triple_ratio(&self, ta: f64, tb: f64, tc: f64, ceiling: f64) -> f64 {
        let SynthesisModel::Triple { g3, .. } = self else {
            return 1.0;
        };
        let (t2, t3) = if tb <= tc { (tb, tc) } else { (tc, tb) };
        let (eta, zeta) = delays_to_jacobi(ta, t2, t3);
        let Some(target) = g3.get(eta, zeta) else {
            return 1.0;
        };
        let pairwise = self.cross(ta, t2) * self.cross(ta, t3) * self.self_b(t3 - t2);
        if pairwise < 1e-9 {
            1.0
        } else {
            (target / pairwise).clamp(0.0, ceiling)
        }
    }
}

/// Nearest-bin value; 1 outside the map.
fn lookup(m: &CorrelationMap, tau: f64) -> f64 {
    let k = ((tau - m.tau[0]) / m.bin_width).round();
    if k < 0.0 || k as usize >= m.tau.len() {
        1.0
    } else {
        let v = m.g2[k as usize];
        if v.is_finite() {
            v
        } else {
            1.0
        }
    }
}

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub n_windows: u32,
    /// Window length (μs); ignored for pulsed models, whose window spans the map.
    pub window_length: f64,
    /// Mean detection rate per side (photons/μs averaged over the window).
    pub rate_a: f64,
    pub rate_b: f64,
    pub floors: FloorLevels,
    /// Rejection ceiling; defaults to max(1, model maximum).
    pub ceiling: Option<f64>,
    pub seed: u64,
}

impl SynthesisSpec {
    pub fn stationary(n_windows: u32, window_length: f64, rate: f64, floors: FloorLevels, seed: u64) -> Self {
        SynthesisSpec {
            n_windows,
            window_length,
            rate_a: rate,
            rate_b: rate,
            floors,
            ceiling: None,
            seed,
        }
    }
}

/// Arrival-time sampler on [0, span).
#[derive(Debug, Clone)]
enum Profile {
    Uniform(f64),
    /// Cumulative weights at bin edges with bin width.
    Tabulated { cdf: Vec<f64>, bin: f64 },
}

impl Profile {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Profile::Uniform(t) => rng.random::<f64>() * t,
            Profile::Tabulated { cdf, bin } => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                let k = cdf.partition_point(|c| *c <= u).saturating_sub(1).min(cdf.len() - 2);
                let lo = cdf[k];
                let w = cdf[k + 1] - lo;
                let f = if w > 0.0 { (u - lo) / w } else { 0.5 };
                (k as f64 + f) * bin
            }
        }
    }

    fn tabulated(weights: &[f64], bin: f64) -> Result<Self> {
        let mut cdf = Vec::with_capacity(weights.len() + 1);
        cdf.push(0.0);
        for w in weights {
            cdf.push(cdf.last().expect("non-empty") + w.max(0.0));
        }
        if !(cdf[cdf.len() - 1] > 0.0) {
            return Err(invalid("arrival profile carries no weight"));
        }
        Ok(Profile::Tabulated { cdf, bin })
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    t: f64,
    side: Side,
    spectator: bool,
}

struct Sampler<'a> {
    model: &'a SynthesisModel,
    profiles: [Profile; 2],
    /// Mean spectator and interacting-candidate counts per window and side.
    spectators: [f64; 2],
    candidates: [f64; 2],
    ceiling: f64,
    range: f64,
    /// Model time of window time zero.
    origin: f64,
}

impl Sampler<'_> {
    fn window(&self, rng: &mut ChaCha8Rng) -> (Vec<Candidate>, usize) {
        let mut all = Vec::new();
        for (s, side) in [Side::A, Side::B].into_iter().enumerate() {
            for (mean, spectator) in [(self.spectators[s], true), (self.candidates[s], false)] {
                if mean <= 0.0 {
                    continue;
                }
                let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
                for _ in 0..n {
                    all.push(Candidate {
                        t: self.profiles[s].sample(rng),
                        side,
                        spectator,
                    });
                }
            }
        }
        all.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut kept: Vec<Candidate> = Vec::with_capacity(all.len());
        let mut active: Vec<Candidate> = Vec::new();
        let mut clipped = 0;
        for c in all {
            if c.spectator {
                kept.push(c);
                continue;
            }
            active.retain(|m| c.t - m.t <= self.range);
            let tc = c.t + self.origin;
            let mut factor = 1.0;
            for m in &active {
                let tm = m.t + self.origin;
                factor *= match (m.side, c.side) {
                    (Side::A, Side::B) => self.model.cross(tm, tc),
                    (Side::B, Side::A) => self.model.cross(tc, tm),
                    (Side::B, Side::B) => self.model.self_b(tc - tm),
                    (Side::A, Side::A) => 1.0,
                };
            }
            if matches!(self.model, SynthesisModel::Triple { .. }) {
                for (x, p) in active.iter().enumerate() {
                    for q in &active[x + 1..] {
                        let (tp, tq) = (p.t + self.origin, q.t + self.origin);
                        factor *= match (c.side, p.side, q.side) {
                            (Side::A, Side::B, Side::B) => self.model.triple_ratio(tc, tp, tq, self.ceiling),
                            (Side::B, Side::A, Side::B) => self.model.triple_ratio(tp, tc, tq, self.ceiling),
                            (Side::B, Side::B, Side::A) => self.model.triple_ratio(tq, tc, tp, self.ceiling),
                            _ => 1.0,
                        };
                    }
                }
            }
            if factor > self.ceiling {
                clipped += 1;
            }
            if rng.random::<f64>() * self.ceiling < factor {
                kept.push(c);
                active.push(c);
            }
        }
        (kept, clipped)
    }
}

fn window_rng(seed: u64, window: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window);
    rng
}

/// Windows used to calibrate the candidate rate against thinning losses.
const PILOT_WINDOWS: u64 = 400;
const PILOT_ROUNDS: usize = 4;

/// Draw a synthetic tag stream whose pair (and triple) correlations follow
/// the model, with spectator photons added to produce the floors.
pub fn synthesize_tags(model: &SynthesisModel, spec: &SynthesisSpec) -> Result<TagStream> {
    if !(spec.rate_a > 0.0) || !(spec.rate_b > 0.0) || spec.n_windows == 0 {
        return Err(invalid("synthesis needs positive rates and at least one window"));
    }
    let model_max = model.max_value();
    let ceiling = spec.ceiling.unwrap_or(model_max.max(1.0));
    if model_max > ceiling {
        return Err(Error::Config(format!(
            "model maximum {model_max:.3} exceeds the sampler ceiling {ceiling:.3}"
        )));
    }
    let (fa, fb) = spectator_fractions(&spec.floors)?;
    let (window_length, origin, profiles) = match model {
        SynthesisModel::Pulsed(m) => {
            let t = &m.map.t1;
            let bin = m.bin_width;
            let span = bin * t.len() as f64;
            (
                span,
                t[0] - 0.5 * bin,
                [Profile::tabulated(&m.arrivals_1, bin)?, Profile::tabulated(&m.arrivals_2, bin)?],
            )
        }
        _ => {
            if !(spec.window_length > 0.0) {
                return Err(invalid("window length must be > 0"));
            }
            (
                spec.window_length,
                0.0,
                [Profile::Uniform(spec.window_length), Profile::Uniform(spec.window_length)],
            )
        }
    };
    let mean = [spec.rate_a * window_length, spec.rate_b * window_length];
    let spectators = [fa * mean[0], fb * mean[1]];
    let target = [(1.0 - fa) * mean[0], (1.0 - fb) * mean[1]];
    let mut sampler = Sampler {
        model,
        profiles,
        spectators,
        candidates: target,
        ceiling,
        range: model.range(),
        origin,
    };
    // Calibrate candidate rates so that the kept interacting photons hit the target.
    for round in 0..PILOT_ROUNDS {
        let kept = (0..PILOT_WINDOWS)
            .into_par_iter()
            .map(|w| {
                let mut rng = window_rng(spec.seed ^ 0x9e37_79b9_7f4a_7c15, w + round as u64 * PILOT_WINDOWS);
                let (k, _) = sampler.window(&mut rng);
                let mut n = [0usize; 2];
                for c in k.iter().filter(|c| !c.spectator) {
                    n[(c.side == Side::B) as usize] += 1;
                }
                n
            })
            .reduce(|| [0, 0], |a, b| [a[0] + b[0], a[1] + b[1]]);
        for s in 0..2 {
            let got = kept[s] as f64 / PILOT_WINDOWS as f64;
            if target[s] > 0.0 && got > 0.0 {
                sampler.candidates[s] *= target[s] / got;
            }
        }
    }
    let windows: Vec<Vec<TagRecord>> = (0..spec.n_windows)
        .into_par_iter()
        .map(|w| {
            let mut rng = window_rng(spec.seed, w as u64);
            let (kept, _) = sampler.window(&mut rng);
            let mut out: Vec<TagRecord> = kept
                .iter()
                .map(|c| {
                    let detector = match c.side {
                        Side::A => Detector::D1,
                        Side::B => {
                            if rng.random::<bool>() {
                                Detector::D2
                            } else {
                                Detector::D3
                            }
                        }
                    };
                    let limit = (window_length * PS_PER_US) as u64 - 1;
                    TagRecord {
                        window_id: w,
                        detector,
                        time_ps: ((c.t * PS_PER_US).round() as u64).min(limit),
                    }
                })
                .collect();
            out.sort_by_key(TagRecord::sort_key);
            out
        })
        .collect();
    let records = windows.into_iter().flatten().collect();
    let mut s = TagStream::new(records, window_length, spec.n_windows)?;
    s.time_origin = origin;
    Ok(s)
}

/// RMS of (estimate − model) over bins with |τ| ≤ `radius`.
pub fn rms_deviation(estimate: &CorrelationMap, model: impl Fn(f64) -> f64, radius: f64) -> f64 {
    let d: Vec<f64> = estimate
        .tau
        .iter()
        .zip(&estimate.g2)
        .filter(|(t, g)| t.abs() <= radius && g.is_finite())
        .map(|(t, g)| (g - model(*t)).powi(2))
        .collect();
    (d.iter().sum::<f64>() / d.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(records: &[(u32, u64, u64)], window: f64, n: u32) -> TagStream {
        let r = records
            .iter()
            .map(|&(w, d, t)| TagRecord {
                window_id: w,
                detector: Detector::from_id(d).unwrap(),
                time_ps: t,
            })
            .collect();
        TagStream::new(r, window, n).unwrap()
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let s = stream(&[(0, 2, 500), (0, 1, 10), (1, 3, 999_999)], 1.0, 2);
        assert_eq!(s.records[0].time_ps, 10);
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("t.csv");
        let bin = dir.path().join("t.bin");
        write_tags(&s, &csv, TagFormat::Csv, Some("hash=abc")).unwrap();
        write_tags(&s, &bin, TagFormat::Binary, None).unwrap();
        let a = ingest(&csv, TagFormat::Csv).unwrap();
        let b = ingest(&bin, TagFormat::Binary).unwrap();
        assert_eq!(a.records, s.records);
        assert_eq!(b.records, s.records);
        assert_eq!(a.n_windows, 2);
    }

    #[test]
    fn bad_detector_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "window_id,detector,time_ps\n0,1,5\nnot,a,record\n0,5,7\n").unwrap();
        match ingest(&p, TagFormat::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!("xyz".parse::<TagFormat>().is_err());
    }

    #[test]
    fn spectator_fractions_reproduce_floors() {
        let f = FloorLevels::MEASURED;
        let (fa, fb) = spectator_fractions(&f).unwrap();
        assert!((1.0 - (1.0 - fb) * (1.0 - fb) - f.s_self).abs() < 1e-12);
        assert!((1.0 - (1.0 - fa) * (1.0 - fb) - f.s_cross).abs() < 1e-12);
        let g = spectator_floor_g3(1.0, 1.0, 1.0, 1.0, &f).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_stream_is_uncorrelated() {
        let spec = SynthesisSpec::stationary(4000, 200.0, 0.16, FloorLevels::NONE, 3);
        let s = synthesize_tags(&SynthesisModel::flat(), &spec).unwrap();
        assert!((s.side_rate(Side::A) / 0.16 - 1.0).abs() < 0.02);
        let cfg = EstimatorConfig {
            bin_width: 0.2,
            max_lag: 6.0,
            normalization: Normalization::Plateau,
        };
        let m = estimate_g2(&s, &cfg, CorrelationKind::Cross).unwrap();
        let err = m.error.as_ref().unwrap();
        let outliers = m.g2.iter().zip(err).filter(|(g, e)| (*g - 1.0).abs() > 3.0 * *e).count();
        assert!(outliers <= 1, "{outliers}");
    }
}
