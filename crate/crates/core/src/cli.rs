//! Command-line front end: run configuration, figure-panel sweeps and
//! plot-ready CSV/JSON output.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::correlation::{CorrelationKind, CorrelationMap, HALF_WIDTH_CONVENTION};
use crate::error::{invalid, Error, Result};
use crate::linear::{apply_floor, pulse_g2_prediction, pulse_transmission, scaling_predictions, FloorLevels, PulseSpec, PULSE_G2_EXTENSION_MODEL};
use crate::pair::{g2_tau_from_pair_binned, solve_diffusion_co, solve_diffusion_counter, solve_dual_band, DiffusionSettings, Geometry, LagBinning, PairSetup};
use crate::params::{derive, derive_from_od, mhz, MediumProfile, PhysicalParams, CM2_TO_UM2};
use crate::pulse::{cw_map, g2_map, propagate_pulses, pulse_level_g2, G2TimeMap, PulseSettings};
use crate::stats::{linear_fit, log_log_slope};
use crate::tags::{
    estimate_g2, estimate_g3, ingest, synthesize_tags, write_tags, EstimatorConfig, Normalization, SynthesisModel, SynthesisSpec, TagFormat,
};
use crate::triple::{g3_map, offcenter_pair_extraction, pairwise_prediction, solve_three, JacobiMap, PairMaps, G3_MAPPING_RULE};

/// Medium density profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Gaussian,
    Uniform,
}

/// Resolved run configuration, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma_e_mhz: f64,
    pub gamma_mhz: f64,
    pub gamma_p_mhz: f64,
    pub od: f64,
    pub length_um: f64,
    pub c6_ghz_um6: f64,
    pub sigma_a_cm2: f64,
    pub profile: ProfileKind,
    pub grid_points: usize,
    pub grid_halfwidth_sigma: f64,
    /// Node count of the time-dependent two-photon solver.
    pub pulse_grid_points: usize,
    /// Node count per axis of the three-photon solver.
    pub triple_grid_points: usize,
    pub floor_cross: f64,
    pub floor_self: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma_e_mhz: 5.0,
            gamma_mhz: 0.0,
            gamma_p_mhz: 3.03,
            od: 72.0,
            length_um: 75.0,
            c6_ghz_um6: -16502.0,
            sigma_a_cm2: 2.9e-9,
            profile: ProfileKind::Gaussian,
            grid_points: 1024,
            grid_halfwidth_sigma: 3.0,
            pulse_grid_points: 256,
            triple_grid_points: 128,
            floor_cross: FloorLevels::MEASURED.s_cross,
            floor_self: FloorLevels::MEASURED.s_self,
        }
    }
}

impl FromStr for RunConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_e_mhz", self.gamma_e_mhz),
            ("gamma_p_mhz", self.gamma_p_mhz),
            ("length_um", self.length_um),
            ("sigma_a_cm2", self.sigma_a_cm2),
            ("grid_halfwidth_sigma", self.grid_halfwidth_sigma),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be > 0, got {v}")));
            }
        }
        if !(self.od >= 0.0 && self.od.is_finite()) || !(self.gamma_mhz >= 0.0) || !self.c6_ghz_um6.is_finite() {
            return Err(Error::Config("od and gamma_mhz must be ≥ 0 and c6 finite".into()));
        }
        if self.grid_points < 16 || self.pulse_grid_points < 16 || self.triple_grid_points < 16 {
            return Err(Error::Config("grid point counts must be ≥ 16".into()));
        }
        FloorLevels::new(self.floor_cross, self.floor_self).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::dissipative_with_gamma_p(
            mhz(self.gamma_e_mhz),
            mhz(self.gamma_p_mhz),
            mhz(self.gamma_mhz),
            self.c6_ghz_um6 * std::f64::consts::TAU * 1.0e3,
            self.sigma_a_cm2 * CM2_TO_UM2,
        )
    }

    pub fn floors(&self) -> FloorLevels {
        FloorLevels {
            s_cross: self.floor_cross,
            s_self: self.floor_self,
        }
    }

    /// Medium with the configured shape at optical depth `od` on `n` nodes.
    pub fn profile_at(&self, od: f64, n: usize) -> Result<MediumProfile> {
        let sigma_a = self.sigma_a_cm2 * CM2_TO_UM2;
        match self.profile {
            ProfileKind::Gaussian => MediumProfile::gaussian_with_od(self.length_um, od, sigma_a, n, self.grid_halfwidth_sigma),
            ProfileKind::Uniform => MediumProfile::uniform_with_od(self.length_um, od, sigma_a, n),
        }
    }

    pub fn with_od(&self, od: f64) -> Self {
        RunConfig { od, ..self.clone() }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Sweep variable and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Od,
    Tw,
    DeltaT,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values: Vec<f64>) -> Result<Self> {
        let s = SweepSpec {
            variable,
            values,
            workers: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid("sweep needs at least one value"));
        }
        for v in &self.values {
            let ok = match self.variable {
                SweepVariable::Od | SweepVariable::Tw => *v > 0.0 && v.is_finite(),
                SweepVariable::DeltaT => v.is_finite(),
            };
            if !ok {
                return Err(invalid(format!("sweep value {v} not allowed for {:?}", self.variable)));
            }
        }
        Ok(())
    }

    /// `a:b:n` (inclusive, n points) or a comma-separated list.
    pub fn parse_values(text: &str) -> Result<Vec<f64>> {
        let bad = || Error::Config(format!("cannot parse sweep values '{text}'"));
        if let Some((a, rest)) = text.split_once(':') {
            let (b, n) = rest.split_once(':').ok_or_else(bad)?;
            let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            let n: usize = n.parse().map_err(|_| bad())?;
            if n < 2 {
                return Ok(vec![a]);
            }
            return Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect());
        }
        text.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig2Row {
    pub od: f64,
    pub od_b: f64,
    pub tau_cross_us: f64,
    pub tau_self_us: f64,
    pub g2_cross0: f64,
    pub g2_self0: f64,
    pub g2_cross0_floored: f64,
    pub g2_self0_floored: f64,
    pub tau_cross_analytic_us: f64,
    pub tau_self_analytic_us: f64,
    pub g2_cross0_analytic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig2Dataset {
    pub rows: Vec<Fig2Row>,
    pub failures: Vec<(f64, String)>,
    /// d ln τ / d ln OD.
    pub cross_exponent: f64,
    pub self_exponent: f64,
    /// Linear slope of τ_cross against OD (μs).
    pub cross_slope_us: f64,
    pub group_delay_slope_us: f64,
    pub half_width_convention: String,
}

fn pair_half_width(map: &CorrelationMap) -> f64 {
    map.half_width().unwrap_or(f64::NAN)
}

fn lag_binning(setup: &PairSetup) -> LagBinning {
    LagBinning {
        bin_width: setup.max_delay_step().max(0.01),
        extent: 1.5,
    }
}

fn fig2_row(config: &RunConfig, od: f64) -> Result<Fig2Row> {
    let params = config.params()?;
    let profile = config.profile_at(od, config.grid_points)?;
    let d = derive(&params, &profile)?;
    let floors = config.floors();
    let pred = scaling_predictions(&d)?;
    let mut maps = Vec::new();
    for geometry in [Geometry::Counter, Geometry::Co] {
        let pf = solve_dual_band(&params, &profile, geometry)?;
        maps.push(g2_tau_from_pair_binned(&pf, &d, lag_binning(&pf.setup))?);
    }
    let (cross, selfp) = (&maps[0], &maps[1]);
    Ok(Fig2Row {
        od,
        od_b: d.od_b,
        tau_cross_us: pair_half_width(cross),
        tau_self_us: pair_half_width(selfp),
        g2_cross0: cross.at_zero(),
        g2_self0: selfp.at_zero(),
        g2_cross0_floored: apply_floor(cross.at_zero(), floors.s_cross),
        g2_self0_floored: apply_floor(selfp.at_zero(), floors.s_self),
        tau_cross_analytic_us: pred.tau_cross,
        tau_self_analytic_us: pred.tau_self,
        g2_cross0_analytic: pred.g2_cross_0,
    })
}

/// Stationary pair correlations against OD.
pub fn run_figure2_suite(config: &RunConfig, od_values: &[f64]) -> Result<Fig2Dataset> {
    config.validate()?;
    SweepSpec::new(SweepVariable::Od, od_values.to_vec())?;
    let results: Vec<(f64, Result<Fig2Row>)> = od_values.par_iter().map(|&od| (od, fig2_row(config, od))).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (od, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((od, e.to_string())),
        }
    }
    let fit = |f: fn(&Fig2Row) -> f64| {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.od, f(r))).filter(|(_, y)| y.is_finite() && *y > 0.0).collect();
        if pts.len() < 2 {
            return f64::NAN;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        log_log_slope(&x, &y)
    };
    let cross_exponent = fit(|r| r.tau_cross_us);
    let self_exponent = fit(|r| r.tau_self_us);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.tau_cross_us.is_finite()).map(|r| (r.od, r.tau_cross_us)).unzip();
    let cross_slope_us = if x.len() >= 2 { linear_fit(&x, &y).0 } else { f64::NAN };
    Ok(Fig2Dataset {
        rows,
        failures,
        cross_exponent,
        self_exponent,
        cross_slope_us,
        group_delay_slope_us: 1.0 / (2.0 * mhz(config.gamma_e_mhz)),
        half_width_convention: HALF_WIDTH_CONVENTION.into(),
    })
}

/// Output of one two-photon pulse run.
#[derive(Debug, Clone)]
pub struct PulseRun {
    pub transmission: f64,
    pub g2_pulse: f64,
    pub band_half_width: Option<f64>,
    pub map: G2TimeMap,
}

/// Interacting and reference runs for a pulse pair, reduced at the group delay.
pub fn pulse_run(config: &RunConfig, pulse: PulseSpec, t_w: f64, delta_t: f64, geometry: Geometry) -> Result<PulseRun> {
    let params = config.params()?;
    let profile = config.profile_at(config.od, config.pulse_grid_points)?;
    let settings = PulseSettings::default();
    let field = propagate_pulses(&params, &profile, (pulse, pulse), delta_t, geometry, settings)?;
    let reference = propagate_pulses(&params.without_interaction(), &profile, (pulse, pulse), delta_t, geometry, settings)?;
    let map = g2_map(&field, &reference)?;
    let delay = PairSetup::new(&params, &profile)?.total_delay();
    Ok(PulseRun {
        transmission: reference.photon1.energy_transmission(),
        g2_pulse: pulse_level_g2(&map, delay, delay + delta_t, t_w)?,
        band_half_width: map.band_half_width(delay),
        map,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3TwRow {
    pub t_w_us: f64,
    pub transmission: f64,
    pub transmission_analytic: f64,
    pub g2_pulse: f64,
    pub g2_pulse_analytic: f64,
    pub g2_pulse_floored: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3DtRow {
    pub delta_t_us: f64,
    pub g2_pulse: f64,
    pub g2_pulse_analytic: f64,
    pub g2_pulse_floored: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3Dataset {
    pub tw_rows: Vec<Fig3TwRow>,
    /// Pulse width used for the ΔT scan.
    pub scan_t_w_us: f64,
    pub dt_rows: Vec<Fig3DtRow>,
    pub failures: Vec<(String, String)>,
    pub model: String,
}

/// Pulse-width trade-off and pulse-separation scan for counter-propagating pulses.
pub fn run_figure3_suite(config: &RunConfig, tw_values: &[f64], dt_values: &[f64]) -> Result<Fig3Dataset> {
    config.validate()?;
    SweepSpec::new(SweepVariable::Tw, tw_values.to_vec())?;
    SweepSpec::new(SweepVariable::DeltaT, dt_values.to_vec())?;
    let params = config.params()?;
    let d = derive_from_od(&params, config.od, config.length_um)?;
    let tau_cross = scaling_predictions(&d)?.tau_cross;
    let s = config.floors().s_cross;
    let scan_tw = tw_values.iter().copied().find(|t| (t - 1.1).abs() < 1e-9).unwrap_or(tw_values[0]);
    let jobs: Vec<(f64, f64)> = tw_values
        .iter()
        .map(|&t| (t, 0.0))
        .chain(dt_values.iter().filter(|dt| **dt != 0.0 || !tw_values.contains(&scan_tw)).map(|&dt| (scan_tw, dt)))
        .collect();
    let results: Vec<((f64, f64), Result<PulseRun>)> = jobs
        .par_iter()
        .map(|&(tw, dt)| ((tw, dt), PulseSpec::gaussian(tw, 0.0).and_then(|p| pulse_run(config, p, tw, dt, Geometry::Counter))))
        .collect();
    let mut tw_rows = Vec::new();
    let mut dt_rows = Vec::new();
    let mut failures = Vec::new();
    for ((tw, dt), r) in &results {
        let run = match r {
            Ok(run) => run,
            Err(e) => {
                failures.push((format!("t_w={tw} delta_t={dt}"), e.to_string()));
                continue;
            }
        };
        let pulse = PulseSpec::gaussian(*tw, 0.0)?;
        let g_an = pulse_g2_prediction(&pulse, tau_cross, *dt)?;
        if *dt == 0.0 && tw_rows.len() < tw_values.len() {
            tw_rows.push(Fig3TwRow {
                t_w_us: *tw,
                transmission: run.transmission,
                transmission_analytic: pulse_transmission(&pulse, &d, d.gamma, d.od)?,
                g2_pulse: run.g2_pulse,
                g2_pulse_analytic: g_an,
                g2_pulse_floored: apply_floor(run.g2_pulse, s),
            });
        }
        if *tw == scan_tw && dt_values.contains(dt) {
            dt_rows.push(Fig3DtRow {
                delta_t_us: *dt,
                g2_pulse: run.g2_pulse,
                g2_pulse_analytic: g_an,
                g2_pulse_floored: apply_floor(run.g2_pulse, s),
            });
        }
    }
    dt_rows.sort_by(|a, b| a.delta_t_us.total_cmp(&b.delta_t_us));
    Ok(Fig3Dataset {
        tw_rows,
        scan_t_w_us: scan_tw,
        dt_rows,
        failures,
        model: PULSE_G2_EXTENSION_MODEL.into(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Row {
    pub od: f64,
    pub od_b: f64,
    pub g3_00: f64,
    pub g2_cross0: f64,
    pub g2_self0: f64,
    pub pairwise_product: f64,
    pub g2_cross0_extracted: Option<f64>,
    pub g2_self0_extracted: Option<f64>,
    /// OD_b within one unit of the three-body crossover near OD_b = 3.
    pub near_crossover: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Dataset {
    pub rows: Vec<Fig4Row>,
    pub failures: Vec<(f64, String)>,
    pub mapping_rule: String,
}

/// Outcome of a three-photon solve reduced to the summary quantities.
#[derive(Debug, Clone)]
pub struct TripleRun {
    pub row: Fig4Row,
    pub map: JacobiMap,
}

pub fn triple_run(config: &RunConfig, od: f64) -> Result<TripleRun> {
    let params = config.params()?;
    let profile = config.profile_at(od, config.triple_grid_points)?;
    let d = derive(&params, &profile)?;
    let tf = solve_three(&params, &profile)?;
    let map = g3_map(&tf, &d)?;
    let bin = map.bin_width;
    let pairs = PairMaps::from_triple(&tf, &d, bin, map.extent())?;
    let (c, s) = (pairs.cross.at_zero(), pairs.self_pair.at_zero());
    let extracted = offcenter_pair_extraction(&map).ok();
    Ok(TripleRun {
        row: Fig4Row {
            od,
            od_b: d.od_b,
            g3_00: map.at_origin(),
            g2_cross0: c,
            g2_self0: s,
            pairwise_product: pairwise_prediction(c, s),
            g2_cross0_extracted: extracted.map(|e| e.0),
            g2_self0_extracted: extracted.map(|e| e.1),
            near_crossover: (d.od_b - 3.0).abs() <= 1.0,
        },
        map,
    })
}

/// Three-photon coincidence against OD.
pub fn run_figure4_suite(config: &RunConfig, od_values: &[f64]) -> Result<Fig4Dataset> {
    config.validate()?;
    SweepSpec::new(SweepVariable::Od, od_values.to_vec())?;
    let results: Vec<(f64, Result<TripleRun>)> = od_values.iter().map(|&od| (od, triple_run(config, od))).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (od, r) in results {
        match r {
            Ok(t) => rows.push(t.row),
            Err(e) => failures.push((od, e.to_string())),
        }
    }
    Ok(Fig4Dataset {
        rows,
        failures,
        mapping_rule: G3_MAPPING_RULE.into(),
    })
}

/// Tabular output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Provenance written into every output file.
#[derive(Debug, Clone)]
pub struct OutputMeta {
    pub config: RunConfig,
    pub hash: String,
    pub seed: u64,
}

impl OutputMeta {
    pub fn new(config: &RunConfig, seed: u64) -> Self {
        OutputMeta {
            config: config.clone(),
            hash: config.hash(),
            seed,
        }
    }

    fn header(&self) -> String {
        format!(
            "# rydpol {} config_hash={} seed={} config={}",
            env!("CARGO_PKG_VERSION"),
            self.hash,
            self.seed,
            serde_json::to_string(&self.config).expect("config serialises")
        )
    }

    fn json(&self) -> Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.hash,
            "seed": self.seed,
            "config": self.config,
        })
    }
}

/// Print a line, ignoring a closed stdout.
fn say(v: impl std::fmt::Display) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{v}");
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Write rows of numbers as `<stem>.csv` or `<stem>.json`.
pub fn write_table(dir: &Path, stem: &str, format: OutputFormat, meta: &OutputMeta, columns: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    match format {
        OutputFormat::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut text = meta.header();
            text.push('\n');
            text.push_str(&columns.join(","));
            text.push('\n');
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| if v.is_finite() { format!("{v}") } else { "nan".into() }).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            fs::write(&path, text)?;
            Ok(path)
        }
        OutputFormat::Json => {
            let path = dir.join(format!("{stem}.json"));
            let records: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(columns.iter().zip(r).map(|(c, v)| (c.to_string(), num(*v))).collect()))
                .collect();
            let mut doc = meta.json();
            doc["rows"] = Value::Array(records);
            fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
            Ok(path)
        }
    }
}

/// Write a JSON summary with provenance fields merged in.
pub fn write_summary(dir: &Path, name: &str, meta: &OutputMeta, body: Value) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut doc = meta.json();
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
    Ok(path)
}

/// Numeric table from a CSV file: header names and rows, `#` lines skipped.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match &header {
            None => header = Some(t.split(',').map(|s| s.trim().to_string()).collect()),
            Some(h) => {
                let row: std::result::Result<Vec<f64>, _> = t.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let row = row.map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    message: e.to_string(),
                })?;
                if row.len() != h.len() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: k + 1,
                        message: format!("expected {} fields", h.len()),
                    });
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or_else(|| Error::NoData(format!("{} has no header", path.display())))?;
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Format(format!("{} lacks column '{name}'", path.display())))
}

/// g²(τ) from a `tau_us,g2` table.
pub fn read_g2_model(path: &Path, kind: CorrelationKind) -> Result<CorrelationMap> {
    let (h, rows) = read_table(path)?;
    let (t, g) = (column(&h, "tau_us", path)?, column(&h, "g2", path)?);
    CorrelationMap::from_samples(kind, rows.iter().map(|r| r[t]).collect(), rows.iter().map(|r| r[g]).collect(), "model file")
}

/// g³(η, ζ) from an `eta_us,zeta_us,g3` table on a regular grid.
pub fn read_g3_model(path: &Path) -> Result<JacobiMap> {
    let (h, rows) = read_table(path)?;
    let (e, z, g) = (column(&h, "eta_us", path)?, column(&h, "zeta_us", path)?, column(&h, "g3", path)?);
    let axis = |c: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v
    };
    let (eta, zeta) = (axis(e), axis(z));
    if eta.len() < 2 || zeta.len() < 2 || eta.len() * zeta.len() != rows.len() {
        return Err(Error::Format(format!("{} is not a full regular (η, ζ) grid", path.display())));
    }
    let bin_width = eta[1] - eta[0];
    let mut g3 = vec![f64::NAN; rows.len()];
    for r in &rows {
        let a = ((r[e] - eta[0]) / bin_width).round() as usize;
        let b = ((r[z] - zeta[0]) / bin_width).round() as usize;
        g3[a * zeta.len() + b] = r[g];
    }
    Ok(JacobiMap {
        eta,
        zeta,
        g3,
        bin_width,
        filled: vec![false; rows.len()],
        method: "model file".into(),
    })
}

fn g3_rows(map: &JacobiMap) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(map.g3.len());
    for (a, e) in map.eta.iter().enumerate() {
        for (b, z) in map.zeta.iter().enumerate() {
            rows.push(vec![*e, *z, map.g3[a * map.zeta.len() + b]]);
        }
    }
    rows
}

#[derive(Debug, Parser)]
#[command(name = "rydpol", version, about = "Rydberg polariton correlation solvers and photon-tag analysis")]
pub struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for the tag sampler.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for sweeps and estimators.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryArg {
    Co,
    Counter,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Co => Geometry::Co,
            GeometryArg::Counter => Geometry::Counter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Gaussian,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMode {
    Cross,
    #[value(name = "self")]
    SelfPair,
    G3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived parameters and closed-form predictions.
    Predict {
        /// OD sweep `a:b:n` or a list; writes predict.csv.
        #[arg(long)]
        od_sweep: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Stationary two-photon solve.
    SolvePair {
        #[arg(long, value_enum, default_value_t = GeometryArg::Counter)]
        geometry: GeometryArg,
        /// Use the (R, r) diffusion solver of a uniform medium.
        #[arg(long)]
        diffusion_only: bool,
        /// Drop the second-derivative term in the diffusion solver.
        #[arg(long)]
        no_diffusion: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Time-dependent two-photon solve for a pulse pair.
    SolvePulse {
        #[arg(long)]
        tw_us: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        dt_offset_us: f64,
        #[arg(long, value_enum, default_value_t = ShapeArg::Gaussian)]
        shape: ShapeArg,
        /// Square drives of length tw_us approximating CW input.
        #[arg(long)]
        cw: bool,
        #[arg(long, value_enum, default_value_t = GeometryArg::Counter)]
        geometry: GeometryArg,
        #[command(flatten)]
        out: OutDir,
    },
    /// Three-photon solve and g³ map.
    SolveTriple {
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Figure-panel sweeps.
    Sweep {
        #[arg(value_enum)]
        figure: Figure,
        /// OD values (`a:b:n` or list) for fig2 and fig4.
        #[arg(long)]
        od: Option<String>,
        /// Pulse widths (μs) for fig3.
        #[arg(long)]
        tw: Option<String>,
        /// Pulse separations (μs) for fig3.
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Photon time-tag tools.
    #[command(subcommand)]
    Tags(TagsCommand),
}

#[derive(Debug, Subcommand)]
pub enum TagsCommand {
    /// Estimate g² or g³ from a tag file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = AnalyzeMode::Cross)]
        mode: AnalyzeMode,
        #[arg(long, default_value_t = 50.0)]
        bin_ns: f64,
        #[arg(long, default_value_t = 6.0)]
        max_lag_us: f64,
        #[arg(long, default_value = "plateau")]
        normalization: String,
        /// Tag format; inferred from the extension when omitted.
        #[arg(long)]
        tag_format: Option<String>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Draw synthetic tags from a model correlation file.
    Synth {
        /// `tau_us,g2` cross map or `eta_us,zeta_us,g3` map.
        #[arg(long)]
        model: PathBuf,
        /// Self-correlation map (`tau_us,g2`).
        #[arg(long)]
        self_model: Option<PathBuf>,
        /// Cross map paired with a g³ model.
        #[arg(long)]
        cross_model: Option<PathBuf>,
        #[arg(long, default_value_t = 40000)]
        windows: u32,
        #[arg(long, default_value_t = 0.16)]
        rate_per_us: f64,
        #[arg(long, default_value_t = 1000.0)]
        window_us: f64,
        /// Output tag file (.csv or .bin).
        #[arg(long)]
        out: PathBuf,
    },
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let meta = OutputMeta::new(&config, cli.seed);
    let fmt = cli.format;
    match cli.command {
        Command::Predict { od_sweep, out } => predict(&config, od_sweep.as_deref(), &out.out, fmt, &meta),
        Command::SolvePair {
            geometry,
            diffusion_only,
            no_diffusion,
            out,
        } => solve_pair_cmd(&config, geometry.into(), diffusion_only, no_diffusion, &out.out, fmt, &meta),
        Command::SolvePulse {
            tw_us,
            dt_offset_us,
            shape,
            cw,
            geometry,
            out,
        } => solve_pulse_cmd(&config, tw_us, dt_offset_us, shape, cw, geometry.into(), &out.out, fmt, &meta),
        Command::SolveTriple { grid, out } => {
            let mut c = config.clone();
            if let Some(g) = grid {
                c.triple_grid_points = g;
                c.validate()?;
            }
            let meta = OutputMeta::new(&c, cli.seed);
            let t = triple_run(&c, c.od)?;
            let p = write_table(&out.out, "g3_map", fmt, &meta, &["eta_us", "zeta_us", "g3"], &g3_rows(&t.map))?;
            let r = &t.row;
            write_summary(
                &out.out,
                "triple_summary.json",
                &meta,
                json!({
                    "g3_00": r.g3_00,
                    "g2_cross0_ext": r.g2_cross0_extracted,
                    "g2_self0_ext": r.g2_self0_extracted,
                    "pairwise_product": r.pairwise_product,
                    "g2_cross0_exit": r.g2_cross0,
                    "g2_self0_exit": r.g2_self0,
                    "mapping_rule": G3_MAPPING_RULE,
                }),
            )?;
            say(p.display());
            Ok(())
        }
        Command::Sweep { figure, od, tw, dt, out } => sweep_cmd(&config, figure, od, tw, dt, &out.out, fmt, &meta),
        Command::Tags(t) => tags_cmd(&config, t, fmt, &meta),
    }
}

fn predict(config: &RunConfig, sweep: Option<&str>, out: &Path, fmt: OutputFormat, meta: &OutputMeta) -> Result<()> {
    let params = config.params()?;
    match sweep {
        None => {
            let d = derive_from_od(&params, config.od, config.length_um)?;
            say(serde_json::to_string_pretty(&d)?);
        }
        Some(s) => {
            let ods = SweepSpec::new(SweepVariable::Od, SweepSpec::parse_values(s)?)?.values;
            let mut rows = Vec::new();
            for od in ods {
                let d = derive_from_od(&params, od, config.length_um)?;
                let p = scaling_predictions(&d)?;
                rows.push(vec![od, p.tau_cross, p.tau_self, p.g2_cross_0, apply_floor(p.g2_cross_0, config.floor_cross), p.t_cw]);
            }
            let path = write_table(
                out,
                "predict",
                fmt,
                meta,
                &["od", "tau_cross_us", "tau_self_us", "g2_cross0", "g2_cross0_floored", "t_cw"],
                &rows,
            )?;
            say(path.display());
        }
    }
    Ok(())
}

fn g2_rows(map: &CorrelationMap, s: f64) -> Vec<Vec<f64>> {
    map.tau.iter().zip(&map.g2).map(|(t, g)| vec![*t, *g, apply_floor(*g, s)]).collect()
}

fn solve_pair_cmd(
    config: &RunConfig,
    geometry: Geometry,
    diffusion_only: bool,
    no_diffusion: bool,
    out: &Path,
    fmt: OutputFormat,
    meta: &OutputMeta,
) -> Result<()> {
    let params = config.params()?;
    let profile = config.profile_at(config.od, config.grid_points)?;
    let d = derive(&params, &profile)?;
    let floor = match geometry {
        Geometry::Co => config.floor_self,
        Geometry::Counter => config.floor_cross,
    };
    let (map, residual) = if diffusion_only {
        let settings = DiffusionSettings {
            diffusion: !no_diffusion,
            ..DiffusionSettings::default()
        };
        let field = match geometry {
            Geometry::Co => solve_diffusion_co(&params, &profile, settings)?,
            Geometry::Counter => solve_diffusion_counter(&params, &profile, settings)?,
        };
        (field.g2_tau(LagBinning::default())?, None)
    } else {
        let pf = solve_dual_band(&params, &profile, geometry)?;
        let n = pf.n();
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let norm = pf.es[k].norm_sqr() / pf.es_ref[k].norm_sqr();
                rows.push(vec![
                    pf.setup.grid.x(i),
                    pf.setup.grid.x(j),
                    pf.es[k].re,
                    pf.es[k].im,
                    pf.se[k].re,
                    pf.se[k].im,
                    norm,
                    pf.symmetric_abs2_norm(i, j),
                ]);
            }
        }
        write_table(
            out,
            "pair_map",
            fmt,
            meta,
            &["x1", "x2", "re_es", "im_es", "re_se", "im_se", "abs2_norm", "ss_abs2_norm"],
            &rows,
        )?;
        (g2_tau_from_pair_binned(&pf, &d, lag_binning(&pf.setup))?, Some(pf.residual))
    };
    let p = write_table(out, "g2_tau", fmt, meta, &["tau_us", "g2", "g2_floored"], &g2_rows(&map, floor))?;
    write_summary(
        out,
        "pair_summary.json",
        meta,
        json!({
            "g2_0": map.at_zero(),
            "half_width_us": map.half_width(),
            "half_width_convention": HALF_WIDTH_CONVENTION,
            "residual": residual,
        }),
    )?;
    say(p.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve_pulse_cmd(
    config: &RunConfig,
    tw: f64,
    dt: f64,
    shape: ShapeArg,
    cw: bool,
    geometry: Geometry,
    out: &Path,
    fmt: OutputFormat,
    meta: &OutputMeta,
) -> Result<()> {
    let run = if cw {
        let params = config.params()?;
        let profile = config.profile_at(config.od, config.pulse_grid_points)?;
        let map = cw_map(&params, &profile, tw, geometry, PulseSettings::default())?;
        let delay = PairSetup::new(&params, &profile)?.total_delay();
        PulseRun {
            transmission: f64::NAN,
            g2_pulse: pulse_level_g2(&map, delay, delay + dt, tw).unwrap_or(f64::NAN),
            band_half_width: map.band_half_width(delay),
            map,
        }
    } else {
        let pulse = match shape {
            ShapeArg::Gaussian => PulseSpec::gaussian(tw, 0.0)?,
            ShapeArg::Square => PulseSpec::square(tw, 0.0)?,
        };
        pulse_run(config, pulse, tw, dt, geometry)?
    };
    let m = &run.map.map;
    let mut rows = Vec::with_capacity(m.values.len());
    for (i, a) in m.t1.iter().enumerate() {
        for (j, b) in m.t2.iter().enumerate() {
            rows.push(vec![*a, *b, m.get(i, j)]);
        }
    }
    let p = write_table(out, "g2_map", fmt, meta, &["t1_us", "t2_us", "g2"], &rows)?;
    let bw = run.map.bin_width;
    let mut arrivals = Vec::new();
    for (side, series) in [(1.0, &run.map.arrivals_1), (2.0, &run.map.arrivals_2)] {
        for (t, r) in m.t1.iter().zip(series.iter()) {
            arrivals.push(vec![*t, side, r / bw]);
        }
    }
    write_table(out, "arrivals", fmt, meta, &["t_us", "side", "rate"], &arrivals)?;
    write_summary(
        out,
        "pulse_summary.json",
        meta,
        json!({
            "t_pulse": num(run.transmission),
            "g2_pulse": num(run.g2_pulse),
            "band_halfwidth_us": run.band_half_width,
            "t_w_us": tw,
            "delta_t_us": dt,
        }),
    )?;
    say(p.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    config: &RunConfig,
    figure: Figure,
    od: Option<String>,
    tw: Option<String>,
    dt: Option<String>,
    out: &Path,
    fmt: OutputFormat,
    meta: &OutputMeta,
) -> Result<()> {
    let values = |s: Option<String>, default: &[f64]| -> Result<Vec<f64>> {
        match s {
            Some(s) => SweepSpec::parse_values(&s),
            None => Ok(default.to_vec()),
        }
    };
    match figure {
        Figure::Fig2 => {
            let ds = run_figure2_suite(config, &values(od, &[10.0, 20.0, 40.0, 72.0])?)?;
            let rows: Vec<Vec<f64>> = ds
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.od,
                        r.od_b,
                        r.tau_cross_us,
                        r.tau_self_us,
                        r.g2_cross0,
                        r.g2_self0,
                        r.g2_cross0_floored,
                        r.g2_self0_floored,
                        r.tau_cross_analytic_us,
                        r.tau_self_analytic_us,
                        r.g2_cross0_analytic,
                    ]
                })
                .collect();
            let p = write_table(
                out,
                "fig2",
                fmt,
                meta,
                &[
                    "od",
                    "od_b",
                    "tau_cross_us",
                    "tau_self_us",
                    "g2_cross0",
                    "g2_self0",
                    "g2_cross0_floored",
                    "g2_self0_floored",
                    "tau_cross_analytic_us",
                    "tau_self_analytic_us",
                    "g2_cross0_analytic",
                ],
                &rows,
            )?;
            write_summary(
                out,
                "fig2_summary.json",
                meta,
                json!({
                    "cross_exponent": num(ds.cross_exponent),
                    "self_exponent": num(ds.self_exponent),
                    "cross_slope_us": num(ds.cross_slope_us),
                    "group_delay_slope_us": ds.group_delay_slope_us,
                    "half_width_convention": ds.half_width_convention,
                    "failures": ds.failures,
                }),
            )?;
            say(p.display());
        }
        Figure::Fig3 => {
            let ds = run_figure3_suite(
                config,
                &values(tw, &[0.4, 1.1, 2.3, 2.9])?,
                &values(dt, &[-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0])?,
            )?;
            let tw_rows: Vec<Vec<f64>> = ds
                .tw_rows
                .iter()
                .map(|r| vec![r.t_w_us, r.transmission, r.transmission_analytic, r.g2_pulse, r.g2_pulse_analytic, r.g2_pulse_floored])
                .collect();
            let p = write_table(
                out,
                "fig3_tw",
                fmt,
                meta,
                &["t_w_us", "t_pulse", "t_pulse_analytic", "g2_pulse", "g2_pulse_analytic", "g2_pulse_floored"],
                &tw_rows,
            )?;
            let dt_rows: Vec<Vec<f64>> = ds
                .dt_rows
                .iter()
                .map(|r| vec![r.delta_t_us, r.g2_pulse, r.g2_pulse_analytic, r.g2_pulse_floored])
                .collect();
            write_table(out, "fig3_dt", fmt, meta, &["delta_t_us", "g2_pulse", "g2_pulse_analytic", "g2_pulse_floored"], &dt_rows)?;
            write_summary(
                out,
                "fig3_summary.json",
                meta,
                json!({ "scan_t_w_us": ds.scan_t_w_us, "model": ds.model, "failures": ds.failures }),
            )?;
            say(p.display());
        }
        Figure::Fig4 => {
            let ds = run_figure4_suite(config, &values(od, &[9.5, 33.5])?)?;
            let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
            let rows: Vec<Vec<f64>> = ds
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.od,
                        r.od_b,
                        r.g3_00,
                        r.pairwise_product,
                        opt(r.g2_cross0_extracted),
                        opt(r.g2_self0_extracted),
                        r.g2_cross0,
                        r.g2_self0,
                        if r.near_crossover { 1.0 } else { 0.0 },
                    ]
                })
                .collect();
            let p = write_table(
                out,
                "fig4",
                fmt,
                meta,
                &[
                    "od",
                    "od_b",
                    "g3_00",
                    "pairwise_product",
                    "g2_cross0_ext",
                    "g2_self0_ext",
                    "g2_cross0_exit",
                    "g2_self0_exit",
                    "near_crossover",
                ],
                &rows,
            )?;
            write_summary(
                out,
                "fig4_summary.json",
                meta,
                json!({ "mapping_rule": ds.mapping_rule, "failures": ds.failures }),
            )?;
            say(p.display());
        }
    }
    Ok(())
}

fn tags_cmd(config: &RunConfig, cmd: TagsCommand, fmt: OutputFormat, meta: &OutputMeta) -> Result<()> {
    match cmd {
        TagsCommand::Analyze {
            input,
            mode,
            bin_ns,
            max_lag_us,
            normalization,
            tag_format,
            out,
        } => {
            let format = match tag_format {
                Some(f) => f.parse()?,
                None => TagFormat::from_path(&input)?,
            };
            let stream = ingest(&input, format)?;
            let cfg = EstimatorConfig {
                bin_width: bin_ns * 1e-3,
                max_lag: max_lag_us,
                normalization: normalization.parse::<Normalization>()?,
            };
            let source = json!({ "input": input.display().to_string(), "records": stream.records.len(), "windows": stream.n_windows, "skipped_lines": stream.skipped_lines });
            let p = match mode {
                AnalyzeMode::G3 => {
                    let m = estimate_g3(&stream, &cfg)?;
                    let p = write_table(&out.out, "g3_estimate", fmt, meta, &["eta_us", "zeta_us", "g3"], &g3_rows(&m))?;
                    write_summary(&out.out, "tags_summary.json", meta, json!({ "g3_00": m.at_origin(), "normalization": m.method, "source": source }))?;
                    p
                }
                AnalyzeMode::Cross | AnalyzeMode::SelfPair => {
                    let kind = if mode == AnalyzeMode::Cross {
                        CorrelationKind::Cross
                    } else {
                        CorrelationKind::SelfPair
                    };
                    let m = estimate_g2(&stream, &cfg, kind)?;
                    let err = m.error.clone().unwrap_or_default();
                    let rows: Vec<Vec<f64>> = m.tau.iter().zip(&m.g2).zip(&err).map(|((t, g), e)| vec![*t, *g, *e]).collect();
                    let p = write_table(&out.out, "g2_estimate", fmt, meta, &["tau_us", "g2", "error"], &rows)?;
                    let zero = m.tau.len() / 2;
                    write_summary(
                        &out.out,
                        "tags_summary.json",
                        meta,
                        json!({
                            "g2_0": num(m.at_zero()),
                            "g2_0_error": err.get(zero).copied().map(num),
                            "half_width_us": m.half_width(),
                            "normalization": m.normalization,
                            "source": source,
                        }),
                    )?;
                    p
                }
            };
            say(p.display());
            Ok(())
        }
        TagsCommand::Synth {
            model,
            self_model,
            cross_model,
            windows,
            rate_per_us,
            window_us,
            out,
        } => {
            let (header, _) = read_table(&model)?;
            let self_pair = self_model.map(|p| read_g2_model(&p, CorrelationKind::SelfPair)).transpose()?;
            let synth_model = if header.iter().any(|h| h == "g3") {
                let cross = cross_model
                    .ok_or_else(|| Error::Config("a g³ model needs --cross-model".into()))
                    .and_then(|p| read_g2_model(&p, CorrelationKind::Cross))?;
                let self_pair = self_pair.ok_or_else(|| Error::Config("a g³ model needs --self-model".into()))?;
                SynthesisModel::Triple {
                    cross,
                    self_pair,
                    g3: read_g3_model(&model)?,
                }
            } else {
                SynthesisModel::Stationary {
                    cross: read_g2_model(&model, CorrelationKind::Cross)?,
                    self_pair,
                }
            };
            let mut spec = SynthesisSpec::stationary(windows, window_us, rate_per_us, config.floors(), meta.seed);
            spec.ceiling = None;
            let stream = synthesize_tags(&synth_model, &spec)?;
            let format = TagFormat::from_path(&out)?;
            let comment = format!("config_hash={} seed={}", meta.hash, meta.seed);
            write_tags(&stream, &out, format, Some(&comment))?;
            say(out.display());
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_rejects_unknown_keys() {
        let c: RunConfig = "od = 33.5\nprofile = \"uniform\"\n".parse().unwrap();
        assert_eq!(c.od, 33.5);
        assert_eq!(c.profile, ProfileKind::Uniform);
        assert!(matches!("bogus = 1".parse::<RunConfig>(), Err(Error::Config(_))));
        assert!(matches!("gamma_e_mhz = -1".parse::<RunConfig>(), Err(Error::Config(_))));
        assert_eq!(c.hash(), c.clone().hash());
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn sweep_values_parse() {
        assert_eq!(SweepSpec::parse_values("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(SweepSpec::parse_values("10, 20").unwrap(), vec![10.0, 20.0]);
        assert!(SweepSpec::new(SweepVariable::Od, vec![]).is_err());
        assert!(run_figure2_suite(&RunConfig::default(), &[]).is_err());
    }
}
