//! Synthetic drifting-plant streams.
//!
//! A hidden "compressor efficiency" trajectory drives an analytic plant
//! surrogate: nine correlated, bounded input channels map to gross power and
//! heat rate, with the efficiency scaling power up and heat rate down. The
//! efficiency never appears in the model-facing columns — it *is* the concept
//! drift. Generated series go to CSV together with an efficiency side channel
//! and a corpus manifest, and everything regenerates byte-identically from
//! the recorded seeds.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::Sample;

pub const INPUT_DIM: usize = 9;
pub const OUTPUT_DIM: usize = 2;

/// Efficiency bounds accepted by the surrogate: the drift profiles use
/// [0.9, 1.1], plus margin.
pub const EFF_MIN: f64 = 0.85;
pub const EFF_MAX: f64 = 1.15;

/// Drift pattern of a generated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Sudden,
    Gradual,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Sudden => "sudden",
            ProfileKind::Gradual => "gradual",
        }
    }
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sudden" => Ok(ProfileKind::Sudden),
            "gradual" => Ok(ProfileKind::Gradual),
            other => Err(Error::InvalidArgument(format!(
                "unknown profile kind '{other}' (expected sudden or gradual)"
            ))),
        }
    }
}

impl std::fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Hold,
    Ramp,
    /// Instantaneous level change; occupies no samples.
    Jump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub len: usize,
    pub start_eff: f64,
    pub end_eff: f64,
}

/// One concept change: the sample index where it begins and how many samples
/// the changed regime spans (used for change-window analysis).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeEvent {
    pub index: usize,
    pub range: usize,
}

/// Piecewise-linear hidden-efficiency trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftProfile {
    segments: Vec<Segment>,
    total: usize,
    change_points: Vec<ChangeEvent>,
}

impl DriftProfile {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn change_points(&self) -> &[ChangeEvent] {
        &self.change_points
    }

    /// Per-sample efficiency values, `total()` of them.
    pub fn expand(&self) -> Vec<f64> {
        let mut eff = Vec::with_capacity(self.total);
        for seg in &self.segments {
            match seg.kind {
                SegmentKind::Jump => {}
                SegmentKind::Hold => {
                    for _ in 0..seg.len {
                        eff.push(seg.start_eff);
                    }
                }
                SegmentKind::Ramp => {
                    let span = seg.end_eff - seg.start_eff;
                    for i in 0..seg.len {
                        let frac = if seg.len > 1 {
                            i as f64 / (seg.len - 1) as f64
                        } else {
                            1.0
                        };
                        eff.push(seg.start_eff + span * frac);
                    }
                }
            }
        }
        debug_assert_eq!(eff.len(), self.total);
        eff
    }
}

/// Builds a randomized drift profile of the requested pattern.
///
/// Sudden: 1.0, ramp to 0.9, jump to 1.1, ramp to 0.9, jump to 1.1, hold,
/// ramp to 0.95 — two upward discontinuities of exactly +0.2. Gradual: 1.0,
/// ramp to 0.9, hold. Segment timings are drawn per seed; levels are fixed.
pub fn build_profile(kind: ProfileKind, total: usize, seed: u64) -> Result<DriftProfile> {
    if total < 200 {
        return Err(Error::InvalidArgument(format!(
            "profile needs at least 200 samples to fit the segment pattern, got {total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frac = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let t = total as f64;

    let mut segments = Vec::new();
    let mut change_points = Vec::new();
    match kind {
        ProfileKind::Sudden => {
            let hold0 = (frac(0.05, 0.12) * t) as usize;
            let ramp1 = (frac(0.15, 0.30) * t) as usize;
            let ramp2 = (frac(0.18, 0.30) * t) as usize;
            let hold1 = (frac(0.10, 0.20) * t) as usize;
            let tail = total - hold0 - ramp1 - ramp2 - hold1;
            segments.push(Segment {
                kind: SegmentKind::Hold,
                len: hold0,
                start_eff: 1.0,
                end_eff: 1.0,
            });
            segments.push(Segment {
                kind: SegmentKind::Ramp,
                len: ramp1,
                start_eff: 1.0,
                end_eff: 0.9,
            });
            segments.push(Segment {
                kind: SegmentKind::Jump,
                len: 0,
                start_eff: 0.9,
                end_eff: 1.1,
            });
            segments.push(Segment {
                kind: SegmentKind::Ramp,
                len: ramp2,
                start_eff: 1.1,
                end_eff: 0.9,
            });
            segments.push(Segment {
                kind: SegmentKind::Jump,
                len: 0,
                start_eff: 0.9,
                end_eff: 1.1,
            });
            segments.push(Segment {
                kind: SegmentKind::Hold,
                len: hold1,
                start_eff: 1.1,
                end_eff: 1.1,
            });
            segments.push(Segment {
                kind: SegmentKind::Ramp,
                len: tail,
                start_eff: 1.1,
                end_eff: 0.95,
            });
            let c1 = hold0 + ramp1;
            let c2 = c1 + ramp2;
            change_points.push(ChangeEvent {
                index: c1,
                range: ramp2,
            });
            change_points.push(ChangeEvent {
                index: c2,
                range: total - c2,
            });
        }
        ProfileKind::Gradual => {
            let hold0 = (frac(0.15, 0.30) * t) as usize;
            let ramp = (frac(0.25, 0.45) * t) as usize;
            let tail = total - hold0 - ramp;
            segments.push(Segment {
                kind: SegmentKind::Hold,
                len: hold0,
                start_eff: 1.0,
                end_eff: 1.0,
            });
            segments.push(Segment {
                kind: SegmentKind::Ramp,
                len: ramp,
                start_eff: 1.0,
                end_eff: 0.9,
            });
            segments.push(Segment {
                kind: SegmentKind::Hold,
                len: tail,
                start_eff: 0.9,
                end_eff: 0.9,
            });
            change_points.push(ChangeEvent {
                index: hold0,
                range: ramp,
            });
        }
    }
    Ok(DriftProfile {
        segments,
        total,
        change_points,
    })
}

/// Noise and outlier settings for the plant surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    /// Gaussian noise std on the power output (absolute units).
    pub power_noise_std: f64,
    /// Gaussian noise std on the heat rate (absolute units).
    pub heat_noise_std: f64,
    /// Probability of replacing the power value with an outlier zero.
    pub outlier_prob: f64,
}

impl Default for SurrogateParams {
    /// Noise at roughly 0.5 % of each output's nominal scale and one outlier
    /// row per 500 samples.
    fn default() -> Self {
        SurrogateParams {
            power_noise_std: 0.5,
            heat_noise_std: 50.0,
            outlier_prob: 0.002,
        }
    }
}

impl SurrogateParams {
    pub fn noiseless() -> Self {
        SurrogateParams {
            power_noise_std: 0.0,
            heat_noise_std: 0.0,
            outlier_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power_noise_std >= 0.0) || !(self.heat_noise_std >= 0.0) {
            return Err(Error::Config("noise std must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_prob) {
            return Err(Error::Config("outlier probability must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Nominal gross power basis `g_P` (efficiency 1.0, zero noise); strictly
/// positive on the unit cube, range roughly 60..141.
pub fn power_basis(x: &[f64; INPUT_DIM]) -> f64 {
    80.0 + 30.0 * x[0] - 12.0 * x[1] + 8.0 * x[2] * x[3] + 10.0 * (2.0 * (x[4] - 0.5)).tanh()
        + 6.0 * x[5] * x[5]
        + 4.0 * x[6]
        + 5.0 * x[7] * x[8]
}

/// Nominal heat-rate basis `g_H`; strictly positive on the unit cube, range
/// roughly 7895..10805.
pub fn heat_basis(x: &[f64; INPUT_DIM]) -> f64 {
    9500.0 - 900.0 * x[0] + 500.0 * x[1] * x[1] + 400.0 * (2.0 * (x[2] - 0.5)).tanh()
        + 300.0 * x[3] * x[4]
        - 250.0 * x[5]
        + 200.0 * x[6] * x[7]
        - 150.0 * x[8]
}

/// Plant surrogate: `power = eff * g_P(x) + noise`,
/// `heat_rate = g_H(x) / eff + noise`. Monotone in `eff` (power up, heat rate
/// down) for every valid input at zero noise.
pub fn plant_surrogate(
    x: &[f64; INPUT_DIM],
    eff: f64,
    params: &SurrogateParams,
    noise: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    if !(EFF_MIN..=EFF_MAX).contains(&eff) {
        return Err(Error::InvalidArgument(format!(
            "efficiency {eff} outside [{EFF_MIN}, {EFF_MAX}]"
        )));
    }
    // both draws always happen so the noise stream stays aligned across configs
    let n_p: f64 = noise.sample(StandardNormal);
    let n_h: f64 = noise.sample(StandardNormal);
    let power = eff * power_basis(x) + params.power_noise_std * n_p;
    let heat = heat_basis(x) / eff + params.heat_noise_std * n_h;
    Ok((power, heat))
}

/// Nine bounded, mutually correlated input channels: a slow sinusoid plus
/// AR(1) noise per channel, coupled through a shared mean term and clamped to
/// [0, 1].
#[derive(Debug, Clone)]
pub struct InputGenerator {
    amp: [f64; INPUT_DIM],
    period: [f64; INPUT_DIM],
    phase: [f64; INPUT_DIM],
    ar_state: [f64; INPUT_DIM],
    t: usize,
    rng: ChaCha8Rng,
}

const AR_COEFF: f64 = 0.97;
const AR_INNOVATION_STD: f64 = 0.02;
const MIX: f64 = 0.3;

impl InputGenerator {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amp = [0.0; INPUT_DIM];
        let mut period = [0.0; INPUT_DIM];
        let mut phase = [0.0; INPUT_DIM];
        for i in 0..INPUT_DIM {
            amp[i] = rng.random_range(0.15..0.30);
            period[i] = rng.random_range(400.0..1600.0);
            phase[i] = rng.random_range(0.0..std::f64::consts::TAU);
        }
        InputGenerator {
            amp,
            period,
            phase,
            ar_state: [0.0; INPUT_DIM],
            t: 0,
            rng,
        }
    }

    pub fn next_point(&mut self) -> [f64; INPUT_DIM] {
        let t = self.t as f64;
        let mut base = [0.0; INPUT_DIM];
        let mut mean = 0.0;
        for i in 0..INPUT_DIM {
            let innovation: f64 = self.rng.sample(StandardNormal);
            self.ar_state[i] = AR_COEFF * self.ar_state[i] + AR_INNOVATION_STD * innovation;
            base[i] = self.amp[i] * (std::f64::consts::TAU * t / self.period[i] + self.phase[i]).sin()
                + self.ar_state[i];
            mean += base[i];
        }
        mean /= INPUT_DIM as f64;
        let mut x = [0.0; INPUT_DIM];
        for i in 0..INPUT_DIM {
            let mixed = (1.0 - MIX) * base[i] + MIX * mean;
            x[i] = (0.5 + mixed).clamp(0.0, 1.0);
        }
        self.t += 1;
        x
    }
}

/// One generated stream row. The efficiency is a side channel for analysis
/// only and never reaches the model-facing columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    pub t: usize,
    pub x: [f64; INPUT_DIM],
    pub power: f64,
    pub heat_rate: f64,
    pub efficiency: f64,
}

impl StreamRecord {
    pub fn to_sample(&self) -> Sample {
        Sample::new(self.t, self.x.to_vec(), vec![self.power, self.heat_rate])
    }
}

/// A fully generated series plus its drift metadata.
#[derive(Debug, Clone)]
pub struct GeneratedSeries {
    pub kind: ProfileKind,
    pub seed: u64,
    pub records: Vec<StreamRecord>,
    pub change_points: Vec<ChangeEvent>,
}

impl GeneratedSeries {
    pub fn to_samples(&self) -> Vec<Sample> {
        self.records.iter().map(StreamRecord::to_sample).collect()
    }
}

/// Composes profile, inputs, surrogate, and outlier injection into a series.
pub fn generate_series(
    kind: ProfileKind,
    total: usize,
    seed: u64,
    params: &SurrogateParams,
) -> Result<GeneratedSeries> {
    params.validate()?;
    let mut srng = ChaCha8Rng::seed_from_u64(seed);
    let profile_seed: u64 = srng.random();
    let input_seed: u64 = srng.random();
    let noise_seed: u64 = srng.random();
    let outlier_seed: u64 = srng.random();

    let profile = build_profile(kind, total, profile_seed)?;
    let eff = profile.expand();
    let mut inputs = InputGenerator::new(input_seed);
    let mut noise = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut outliers = ChaCha8Rng::seed_from_u64(outlier_seed);

    let mut records = Vec::with_capacity(total);
    for (t, &e) in eff.iter().enumerate() {
        let x = inputs.next_point();
        let (mut power, heat_rate) = plant_surrogate(&x, e, params, &mut noise)?;
        if params.outlier_prob > 0.0 && outliers.random::<f64>() < params.outlier_prob {
            power = 0.0;
        }
        records.push(StreamRecord {
            t,
            x,
            power,
            heat_rate,
            efficiency: e,
        });
    }
    Ok(GeneratedSeries {
        kind,
        seed,
        records,
        change_points: profile.change_points().to_vec(),
    })
}

/// Manifest entry for one corpus series.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub series_id: String,
    pub kind: ProfileKind,
    pub seed: u64,
    pub changes: Vec<ChangeEvent>,
}

impl ManifestRow {
    pub fn series_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.series_id))
    }

    pub fn efficiency_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}_eff.csv", self.series_id))
    }
}

fn format_changes(changes: &[ChangeEvent]) -> String {
    changes
        .iter()
        .map(|c| format!("{}:{}", c.index, c.range))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_changes(field: &str) -> Option<Vec<ChangeEvent>> {
    if field.is_empty() {
        return Some(Vec::new());
    }
    field
        .split(';')
        .map(|part| {
            let (idx, range) = part.split_once(':')?;
            Some(ChangeEvent {
                index: idx.parse().ok()?,
                range: range.parse().ok()?,
            })
        })
        .collect()
}

fn write_series_files(
    dir: &Path,
    row: &ManifestRow,
    series: &GeneratedSeries,
    master_seed: u64,
) -> Result<()> {
    let path = row.series_path(dir);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(&path, e);
    writeln!(
        w,
        "# master_seed={master_seed} series_seed={} kind={}",
        series.seed, series.kind
    )
    .map_err(io_err)?;
    write!(w, "t").map_err(io_err)?;
    for i in 1..=INPUT_DIM {
        write!(w, ",x{i}").map_err(io_err)?;
    }
    writeln!(w, ",power,heat_rate").map_err(io_err)?;
    for rec in &series.records {
        write!(w, "{}", rec.t).map_err(io_err)?;
        for v in rec.x.iter() {
            write!(w, ",{v}").map_err(io_err)?;
        }
        writeln!(w, ",{},{}", rec.power, rec.heat_rate).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let eff_path = row.efficiency_path(dir);
    let file = fs::File::create(&eff_path).map_err(|e| Error::io(&eff_path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(&eff_path, e);
    writeln!(
        w,
        "# master_seed={master_seed} series_seed={} kind={}",
        series.seed, series.kind
    )
    .map_err(io_err)?;
    writeln!(w, "t,efficiency").map_err(io_err)?;
    for rec in &series.records {
        writeln!(w, "{},{}", rec.t, rec.efficiency).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Generates `n_sudden + n_gradual` series, writes one CSV (plus efficiency
/// side file) per series and a manifest, and returns the manifest rows.
pub fn generate_corpus(
    n_sudden: usize,
    n_gradual: usize,
    total: usize,
    master_seed: u64,
    params: &SurrogateParams,
    out_dir: &Path,
) -> Result<Vec<ManifestRow>> {
    params.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    let mut rows = Vec::with_capacity(n_sudden + n_gradual);
    let specs = (0..n_sudden)
        .map(|i| (ProfileKind::Sudden, i))
        .chain((0..n_gradual).map(|i| (ProfileKind::Gradual, i)));
    for (kind, i) in specs {
        let seed: u64 = master.random();
        let series = generate_series(kind, total, seed, params)?;
        let row = ManifestRow {
            series_id: format!("{}_{i:03}", kind.name()),
            kind,
            seed,
            changes: series.change_points.clone(),
        };
        write_series_files(out_dir, &row, &series, master_seed)?;
        rows.push(row);
    }

    let manifest_path = out_dir.join("manifest.csv");
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(&manifest_path, e);
    writeln!(w, "# master_seed={master_seed}").map_err(io_err)?;
    writeln!(w, "series_id,kind,seed,change_points").map_err(io_err)?;
    for row in &rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.series_id,
            row.kind,
            row.seed,
            format_changes(&row.changes)
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(rows)
}

/// Reads a corpus manifest written by [`generate_corpus`].
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in content.lines().enumerate() {
        let line_num = (lineno + 1) as u64;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                line_num,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let kind: ProfileKind = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, line_num, format!("bad kind '{}'", fields[1])))?;
        let seed: u64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, line_num, format!("bad seed '{}'", fields[2])))?;
        let changes = parse_changes(fields[3])
            .ok_or_else(|| Error::parse(path, line_num, format!("bad change list '{}'", fields[3])))?;
        rows.push(ManifestRow {
            series_id: fields[0].to_string(),
            kind,
            seed,
            changes,
        });
    }
    if !saw_header {
        return Err(Error::parse(path, 1, "missing manifest header"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradual_profile_starts_high_ends_low_monotone() {
        let profile = build_profile(ProfileKind::Gradual, 2000, 9).unwrap();
        let eff = profile.expand();
        assert_eq!(eff.len(), 2000);
        assert_eq!(eff[0], 1.0);
        assert_eq!(*eff.last().unwrap(), 0.9);
        for w in eff.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert_eq!(profile.change_points().len(), 1);
    }

    #[test]
    fn sudden_profile_has_exactly_two_positive_jumps_of_point_two() {
        let profile = build_profile(ProfileKind::Sudden, 2000, 4).unwrap();
        let eff = profile.expand();
        assert_eq!(eff.len(), 2000);
        let ups: Vec<(usize, f64)> = eff
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] + 1e-9)
            .map(|(i, w)| (i + 1, w[1] - w[0]))
            .collect();
        assert_eq!(ups.len(), 2, "jumps: {ups:?}");
        for (_, size) in &ups {
            assert_relative_eq!(*size, 0.2, epsilon = 1e-12);
        }
        // recorded change points sit exactly at the discontinuities
        let recorded: Vec<usize> = profile.change_points().iter().map(|c| c.index).collect();
        let observed: Vec<usize> = ups.iter().map(|(i, _)| *i).collect();
        assert_eq!(recorded, observed);
        for c in profile.change_points() {
            assert_relative_eq!(eff[c.index - 1], 0.9, epsilon = 1e-9);
            assert_relative_eq!(eff[c.index], 1.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn profiles_are_deterministic_per_seed() {
        let a = build_profile(ProfileKind::Sudden, 1500, 77).unwrap();
        let b = build_profile(ProfileKind::Sudden, 1500, 77).unwrap();
        assert_eq!(a, b);
        let c = build_profile(ProfileKind::Sudden, 1500, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_short_profile_is_an_argument_error() {
        assert!(build_profile(ProfileKind::Sudden, 150, 1).is_err());
    }

    #[test]
    fn profile_levels_stay_inside_surrogate_bounds() {
        for seed in 0..20 {
            for kind in [ProfileKind::Sudden, ProfileKind::Gradual] {
                let eff = build_profile(kind, 600, seed).unwrap().expand();
                assert!(eff.iter().all(|&e| (EFF_MIN..=EFF_MAX).contains(&e)));
            }
        }
    }

    #[test]
    fn inputs_stay_in_unit_interval() {
        let mut generator = InputGenerator::new(5);
        for _ in 0..100_000 {
            let x = generator.next_point();
            assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn input_streams_are_deterministic() {
        let mut a = InputGenerator::new(11);
        let mut b = InputGenerator::new(11);
        for _ in 0..500 {
            assert_eq!(a.next_point(), b.next_point());
        }
    }

    #[test]
    fn input_channels_are_strongly_autocorrelated() {
        let mut generator = InputGenerator::new(13);
        let n = 10_000;
        let series: Vec<[f64; INPUT_DIM]> = (0..n).map(|_| generator.next_point()).collect();
        for ch in 0..INPUT_DIM {
            let vals: Vec<f64> = series.iter().map(|x| x[ch]).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            let cov: f64 = vals
                .windows(2)
                .map(|w| (w[0] - mean) * (w[1] - mean))
                .sum::<f64>();
            let rho = cov / var;
            assert!(rho > 0.5, "channel {ch}: lag-1 autocorrelation {rho}");
        }
    }

    #[test]
    fn surrogate_matches_documented_basis_values() {
        // hand-evaluated from the coefficient tables
        let mid = [0.5; INPUT_DIM];
        assert_relative_eq!(power_basis(&mid), 95.75, epsilon = 1e-12);
        assert_relative_eq!(heat_basis(&mid), 9100.0, epsilon = 1e-12);
        let pt = [0.2, 0.8, 0.4, 0.6, 0.9, 0.1, 0.7, 0.3, 0.5];
        assert_relative_eq!(power_basis(&pt), 88.5703677026785, epsilon = 1e-12);
        assert_relative_eq!(heat_basis(&pt), 9665.049871910038, epsilon = 1e-12);
        // zero noise, eff = 1.0 reproduces the basis exactly
        let mut noise = ChaCha8Rng::seed_from_u64(0);
        let (p, h) = plant_surrogate(&pt, 1.0, &SurrogateParams::noiseless(), &mut noise).unwrap();
        assert_eq!(p, 88.5703677026785);
        assert_eq!(h, 9665.049871910038);
    }

    #[test]
    fn surrogate_is_monotone_in_efficiency() {
        let params = SurrogateParams::noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut noise = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let mut x = [0.0; INPUT_DIM];
            for v in x.iter_mut() {
                *v = rng.random_range(0.0..1.0);
            }
            let eff = rng.random_range(EFF_MIN..(EFF_MAX - 1e-4));
            let (p_lo, h_lo) = plant_surrogate(&x, eff, &params, &mut noise).unwrap();
            let (p_hi, h_hi) = plant_surrogate(&x, eff + 1e-4, &params, &mut noise).unwrap();
            assert!(p_hi > p_lo, "power must rise with efficiency");
            assert!(h_hi < h_lo, "heat rate must fall with efficiency");
        }
        // and at the profile extremes
        let x = [0.5; INPUT_DIM];
        let (p9, h9) = plant_surrogate(&x, 0.9, &params, &mut noise).unwrap();
        let (p11, h11) = plant_surrogate(&x, 1.1, &params, &mut noise).unwrap();
        assert!(p11 > p9 && h11 < h9);
    }

    #[test]
    fn surrogate_outputs_never_cross_zero() {
        let params = SurrogateParams::noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut noise = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let mut x = [0.0; INPUT_DIM];
            for v in x.iter_mut() {
                *v = rng.random_range(0.0..1.0);
            }
            let eff = rng.random_range(EFF_MIN..EFF_MAX);
            let (p, h) = plant_surrogate(&x, eff, &params, &mut noise).unwrap();
            assert!(p > 0.0 && h > 0.0);
        }
    }

    #[test]
    fn efficiency_out_of_range_is_rejected() {
        let mut noise = ChaCha8Rng::seed_from_u64(0);
        let x = [0.5; INPUT_DIM];
        assert!(plant_surrogate(&x, 0.5, &SurrogateParams::noiseless(), &mut noise).is_err());
        assert!(plant_surrogate(&x, 1.3, &SurrogateParams::noiseless(), &mut noise).is_err());
    }

    #[test]
    fn series_has_requested_length_and_recoverable_changes() {
        let series = generate_series(ProfileKind::Sudden, 2000, 31, &SurrogateParams::default())
            .unwrap();
        assert_eq!(series.records.len(), 2000);
        // the change points are recoverable from the efficiency side channel
        for c in &series.change_points {
            let before = series.records[c.index - 1].efficiency;
            let after = series.records[c.index].efficiency;
            assert_relative_eq!(after - before, 0.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_outlier_probability_means_no_zero_power() {
        let params = SurrogateParams {
            outlier_prob: 0.0,
            ..SurrogateParams::default()
        };
        let series = generate_series(ProfileKind::Gradual, 2000, 37, &params).unwrap();
        assert!(series.records.iter().all(|r| r.power != 0.0));
    }

    #[test]
    fn outliers_appear_at_roughly_the_configured_rate() {
        let params = SurrogateParams {
            outlier_prob: 0.05,
            ..SurrogateParams::default()
        };
        let series = generate_series(ProfileKind::Gradual, 4000, 41, &params).unwrap();
        let zeros = series.records.iter().filter(|r| r.power == 0.0).count();
        assert!((100..300).contains(&zeros), "got {zeros} outliers");
    }

    #[test]
    fn series_generation_is_deterministic() {
        let a = generate_series(ProfileKind::Sudden, 800, 43, &SurrogateParams::default()).unwrap();
        let b = generate_series(ProfileKind::Sudden, 800, 43, &SurrogateParams::default()).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn corpus_writes_expected_files_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let rows = generate_corpus(2, 1, 300, 99, &SurrogateParams::default(), dir.path()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].series_id, "sudden_000");
        assert_eq!(rows[2].series_id, "gradual_000");
        for row in &rows {
            assert!(row.series_path(dir.path()).exists());
            assert!(row.efficiency_path(dir.path()).exists());
        }
        let reloaded = load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(reloaded, rows);
    }

    #[test]
    fn corpus_regeneration_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        for dir in [&dir_a, &dir_b] {
            generate_corpus(1, 1, 300, 7, &SurrogateParams::default(), dir.path()).unwrap();
        }
        for name in ["manifest.csv", "sudden_000.csv", "gradual_000.csv", "sudden_000_eff.csv"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }
}
