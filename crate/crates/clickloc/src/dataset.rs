//! Click datasets: ingestion, persistence, and synthetic generation.
//!
//! A dataset is an ordered collection of [`ClickRecord`]s, each a fixed-length
//! waveform of `n` samples with ground-truth range (meters) and azimuth
//! (radians) plus the id of the hydrophone that recorded it.
//!
//! Three interchange formats are supported:
//!
//! - **CSV clicks**: header line `n,<int>`, then one row per click:
//!   `click_id,hydrophone_id,range_m,azimuth_rad,s_0,...,s_{n-1}`.
//! - **Binary clicks** (`CCC1`): magic, u32 count, u32 n, then per click
//!   u64 click_id, u32 hydrophone_id, f64 range, f64 azimuth, n×f64 samples,
//!   all little-endian.
//! - **WAV directory**: one mono WAV per click plus a `metadata.csv` sidecar
//!   (header `n,<int>`, rows `filename,hydrophone_id,range_m,azimuth_rad`).
//!   Clips longer than `n` are center-cropped, shorter ones zero-padded
//!   symmetrically; integer PCM is scaled to [-1, 1].
//!
//! Pooled features are cached in the `CCF1` binary format (see
//! [`save_features`]), which round-trips bit-exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pooling::GlobalFeature;
use crate::seed::stream_rng;

/// One detected click waveform with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickRecord {
    /// Normalized amplitude samples, exactly `n` of them.
    pub samples: Vec<f64>,
    /// Distance to the animal in meters, ≥ 0.
    pub range_m: f64,
    /// Horizontal bearing in radians, in [-π, π).
    pub azimuth_rad: f64,
    /// Label of the recording hydrophone.
    pub hydrophone_id: u32,
    /// Unique click identifier.
    pub click_id: u64,
}

impl ClickRecord {
    fn validate(&self, n: usize, record: usize) -> Result<()> {
        if self.samples.len() != n {
            return Err(Error::Shape(format!(
                "click {} has {} samples, dataset declares n={}",
                record,
                self.samples.len(),
                n
            )));
        }
        if !self.range_m.is_finite() || self.range_m < 0.0 {
            return Err(Error::Config(format!(
                "click {}: range_m {} must be finite and >= 0",
                record, self.range_m
            )));
        }
        if !self.azimuth_rad.is_finite() || self.azimuth_rad < -PI || self.azimuth_rad >= PI {
            return Err(Error::Config(format!(
                "click {}: azimuth_rad {} must lie in [-pi, pi)",
                record, self.azimuth_rad
            )));
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config(format!(
                "click {}: samples contain non-finite values",
                record
            )));
        }
        Ok(())
    }
}

/// An ordered, immutable collection of clicks sharing one sample length.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickDataset {
    clicks: Vec<ClickRecord>,
    n: usize,
}

impl ClickDataset {
    /// Build a dataset, validating every record against the shared `n` and
    /// the label invariants.
    pub fn new(clicks: Vec<ClickRecord>, n: usize) -> Result<Self> {
        for (i, c) in clicks.iter().enumerate() {
            c.validate(n, i)?;
        }
        Ok(ClickDataset { clicks, n })
    }

    pub fn empty(n: usize) -> Self {
        ClickDataset {
            clicks: Vec::new(),
            n,
        }
    }

    /// Samples per click.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total click count N.
    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn clicks(&self) -> &[ClickRecord] {
        &self.clicks
    }

    /// Per-hydrophone click counts, keyed by hydrophone id.
    pub fn hydrophone_counts(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for c in &self.clicks {
            *m.entry(c.hydrophone_id).or_insert(0) += 1;
        }
        m
    }

    /// Number of distinct hydrophones H.
    pub fn hydrophone_count(&self) -> usize {
        self.hydrophone_counts().len()
    }

    /// Hydrophone id of every click, in dataset order.
    pub fn hydrophone_ids(&self) -> Vec<u32> {
        self.clicks.iter().map(|c| c.hydrophone_id).collect()
    }
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Configuration of the synthetic click generator.
///
/// Each click is a train of `pulse_count_base` exponentially decaying
/// sinusoid bursts. Range controls the overall amplitude (exponential decay
/// with distance) and the bandwidth (a single-pole low-pass whose cutoff is
/// inversely proportional to range); azimuth controls the inter-pulse
/// interval. Both labels are therefore recoverable from waveform shape even
/// after per-patch amplitude normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Samples per click.
    pub n: usize,
    /// Pulses per click, ≥ 1.
    pub pulse_count_base: usize,
    /// Sample rate in Hz.
    pub sample_rate_hz: f64,
    /// (min, max) range in meters, min ≥ 0, min < max.
    pub range_bounds_m: (f64, f64),
    /// (min, max) azimuth in radians, within [-π, π], min < max.
    pub azimuth_bounds_rad: (f64, f64),
    /// Standard deviation of additive Gaussian noise, ≥ 0.
    pub noise_std: f64,
    /// Root seed for the generator.
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 2000,
            pulse_count_base: 4,
            sample_rate_hz: 96_000.0,
            range_bounds_m: (100.0, 3000.0),
            azimuth_bounds_rad: (-PI, PI),
            noise_std: 1e-4,
            rng_seed: 0,
        }
    }
}

/// Amplitude e-folding distance in meters.
const RANGE_AMP_DECAY_M: f64 = 2000.0;
/// Amplitude ratio between successive pulses of one click.
const PULSE_DECAY: f64 = 0.6;
/// Carrier period of the burst sinusoid, in samples.
const CARRIER_PERIOD: f64 = 16.0;
/// Within-pulse envelope decay constant, in samples.
const PULSE_TAU: f64 = 30.0;
/// Pulse support is truncated after this many decay constants.
const PULSE_SUPPORT_TAUS: f64 = 6.0;
/// First pulse onset as a fraction of the click length.
const ONSET_FRACTION: f64 = 0.2;
/// Base inter-pulse interval as a fraction of the click length.
const BASE_IPI_FRACTION: f64 = 1.0 / 16.0;
/// Low-pass cutoff numerator: cutoff_hz = CUTOFF_HZ_M / max(range, 1 m).
const CUTOFF_HZ_M: f64 = 3.0e6;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.pulse_count_base == 0 {
            return Err(Error::Config("pulse_count_base must be >= 1".into()));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Config("sample_rate_hz must be > 0".into()));
        }
        let (rmin, rmax) = self.range_bounds_m;
        if !(rmin >= 0.0 && rmin < rmax) {
            return Err(Error::Config(format!(
                "range_bounds_m ({}, {}) must satisfy 0 <= min < max",
                rmin, rmax
            )));
        }
        let (amin, amax) = self.azimuth_bounds_rad;
        if !(amin >= -PI && amax <= PI && amin < amax) {
            return Err(Error::Config(format!(
                "azimuth_bounds_rad ({}, {}) must satisfy -pi <= min < max <= pi",
                amin, amax
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("noise_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Overall pulse amplitude at a given range: exp(-range/ρ).
    /// Strictly decreasing in range.
    pub fn pulse_amplitude(&self, range_m: f64) -> f64 {
        (-range_m / RANGE_AMP_DECAY_M).exp()
    }

    /// Low-pass filter coefficient at a given range. The filter is
    /// `y[t] = a·y[t-1] + (1-a)·x[t]` with cutoff inversely proportional to
    /// range, so `a` is strictly increasing in range (farther = smoother).
    pub fn lowpass_alpha(&self, range_m: f64) -> f64 {
        let cutoff_hz = CUTOFF_HZ_M / range_m.max(1.0);
        (-2.0 * PI * cutoff_hz / self.sample_rate_hz).exp()
    }

    /// Inter-pulse interval in samples: base·(1 + 0.5·azimuth/π).
    /// Strictly increasing in azimuth.
    pub fn inter_pulse_interval(&self, azimuth_rad: f64) -> f64 {
        self.n as f64 * BASE_IPI_FRACTION * (1.0 + 0.5 * azimuth_rad / PI)
    }
}

/// Generate `count` synthetic clicks. Pure function of `(cfg, count)`: each
/// click draws from its own derived RNG stream, so the i-th click is
/// identical no matter how many clicks are requested.
pub fn generate_synthetic(cfg: &SyntheticConfig, count: usize) -> Result<ClickDataset> {
    cfg.validate()?;
    let clicks: Vec<ClickRecord> = (0..count).map(|i| synth_click(cfg, i as u64)).collect();
    ClickDataset::new(clicks, cfg.n)
}

fn synth_click(cfg: &SyntheticConfig, index: u64) -> ClickRecord {
    let mut rng = stream_rng(cfg.rng_seed, "click", index);
    let (rmin, rmax) = cfg.range_bounds_m;
    let (amin, amax) = cfg.azimuth_bounds_rad;
    let range_m = rmin + (rmax - rmin) * rng.random::<f64>();
    let azimuth_rad = amin + (amax - amin) * rng.random::<f64>();

    let n = cfg.n;
    let mut signal = vec![0.0; n];
    let amp = cfg.pulse_amplitude(range_m);
    let ipi = cfg.inter_pulse_interval(azimuth_rad);
    let onset = ONSET_FRACTION * n as f64;
    let support = (PULSE_SUPPORT_TAUS * PULSE_TAU).ceil() as usize;

    for q in 0..cfg.pulse_count_base {
        let start = onset + q as f64 * ipi;
        if start >= n as f64 {
            break;
        }
        let pulse_amp = amp * PULSE_DECAY.powi(q as i32);
        let t0 = start.ceil() as usize;
        let t1 = (t0 + support).min(n);
        for (t, s) in signal.iter_mut().enumerate().take(t1).skip(t0) {
            let u = t as f64 - start;
            *s += pulse_amp * (-u / PULSE_TAU).exp() * (2.0 * PI * u / CARRIER_PERIOD).sin();
        }
    }

    // Single-pole low-pass: bandwidth shrinks with range.
    let alpha = cfg.lowpass_alpha(range_m);
    let mut prev = 0.0;
    for s in signal.iter_mut() {
        prev = alpha * prev + (1.0 - alpha) * *s;
        *s = prev;
    }

    if cfg.noise_std > 0.0 {
        for s in signal.iter_mut() {
            *s += cfg.noise_std * gaussian(&mut rng);
        }
    }

    ClickRecord {
        samples: signal,
        range_m,
        azimuth_rad,
        hydrophone_id: 0,
        click_id: index,
    }
}

/// Standard normal draw via Box-Muller.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

// ---------------------------------------------------------------------------
// Click I/O
// ---------------------------------------------------------------------------

/// On-disk click formats accepted by [`load_clicks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickFormat {
    Csv,
    Binary,
    WavDirectory,
}

/// Load a click dataset from `path` in the declared format.
pub fn load_clicks(path: &Path, format: ClickFormat) -> Result<ClickDataset> {
    match format {
        ClickFormat::Csv => load_clicks_csv(path),
        ClickFormat::Binary => load_clicks_binary(path),
        ClickFormat::WavDirectory => load_clicks_wav_dir(path),
    }
}

/// Save a click dataset. Only `Csv` and `Binary` can be written.
pub fn save_clicks(dataset: &ClickDataset, path: &Path, format: ClickFormat) -> Result<()> {
    match format {
        ClickFormat::Csv => save_clicks_csv(dataset, path),
        ClickFormat::Binary => save_clicks_binary(dataset, path),
        ClickFormat::WavDirectory => Err(Error::Config(
            "writing wav directories is not supported".into(),
        )),
    }
}

fn load_clicks_csv(path: &Path) -> Result<ClickDataset> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    // First non-blank line is the `n,<int>` header; a fully empty file is a
    // valid empty dataset.
    let header = loop {
        match lines.next() {
            None => return Ok(ClickDataset::empty(0)),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let n = parse_csv_header(&header)?;

    let mut clicks = Vec::new();
    let mut record = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        clicks.push(parse_click_row(&line, n, record)?);
        record += 1;
    }
    ClickDataset::new(clicks, n)
}

fn parse_csv_header(line: &str) -> Result<usize> {
    let mut parts = line.trim().splitn(2, ',');
    let key = parts.next().unwrap_or("");
    let value = parts.next();
    if key.trim() != "n" {
        return Err(Error::Format(format!(
            "expected header `n,<int>`, found {:?}",
            line.trim()
        )));
    }
    value
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::Format(format!("invalid n in header {:?}", line.trim())))
}

fn parse_click_row(line: &str, n: usize, record: usize) -> Result<ClickRecord> {
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != 4 + n {
        return Err(Error::Shape(format!(
            "record {}: expected {} fields (4 metadata + {} samples), found {}",
            record,
            4 + n,
            n,
            fields.len()
        )));
    }
    let parse_f = |s: &str, what: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
            record,
            message: format!("invalid {} {:?}", what, s),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                record,
                message: format!("non-finite {} {:?}", what, s),
            });
        }
        Ok(v)
    };
    let click_id: u64 = fields[0].trim().parse().map_err(|_| Error::Parse {
        record,
        message: format!("invalid click_id {:?}", fields[0]),
    })?;
    let hydrophone_id: u32 = fields[1].trim().parse().map_err(|_| Error::Parse {
        record,
        message: format!("invalid hydrophone_id {:?}", fields[1]),
    })?;
    let range_m = parse_f(fields[2], "range_m")?;
    let azimuth_rad = parse_f(fields[3], "azimuth_rad")?;
    let mut samples = Vec::with_capacity(n);
    for s in &fields[4..] {
        samples.push(parse_f(s, "sample")?);
    }
    let rec = ClickRecord {
        samples,
        range_m,
        azimuth_rad,
        hydrophone_id,
        click_id,
    };
    rec.validate(n, record)?;
    Ok(rec)
}

fn save_clicks_csv(dataset: &ClickDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,{}", dataset.n())?;
    for c in dataset.clicks() {
        write!(
            w,
            "{},{},{},{}",
            c.click_id, c.hydrophone_id, c.range_m, c.azimuth_rad
        )?;
        for s in &c.samples {
            write!(w, ",{}", s)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

const CLICK_MAGIC: &[u8; 4] = b"CCC1";
const FEATURE_MAGIC: &[u8; 4] = b"CCF1";

fn save_clicks_binary(dataset: &ClickDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CLICK_MAGIC)?;
    w.write_all(&(dataset.len() as u32).to_le_bytes())?;
    w.write_all(&(dataset.n() as u32).to_le_bytes())?;
    for c in dataset.clicks() {
        w.write_all(&c.click_id.to_le_bytes())?;
        w.write_all(&c.hydrophone_id.to_le_bytes())?;
        w.write_all(&c.range_m.to_le_bytes())?;
        w.write_all(&c.azimuth_rad.to_le_bytes())?;
        for s in &c.samples {
            w.write_all(&s.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load_clicks_binary(path: &Path) -> Result<ClickDataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for CCC1 header".into()))?;
    if &magic != CLICK_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected CCC1",
            String::from_utf8_lossy(&magic)
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let mut clicks = Vec::with_capacity(count);
    for record in 0..count {
        let click_id = read_u64(&mut r).map_err(|_| Error::Parse {
            record,
            message: "truncated click record".into(),
        })?;
        let hydrophone_id = read_u32(&mut r).map_err(|_| Error::Parse {
            record,
            message: "truncated click record".into(),
        })?;
        let range_m = read_f64(&mut r)?;
        let azimuth_rad = read_f64(&mut r)?;
        let mut samples = vec![0.0; n];
        for s in samples.iter_mut() {
            *s = read_f64(&mut r)?;
        }
        clicks.push(ClickRecord {
            samples,
            range_m,
            azimuth_rad,
            hydrophone_id,
            click_id,
        });
    }
    ClickDataset::new(clicks, n)
}

fn load_clicks_wav_dir(dir: &Path) -> Result<ClickDataset> {
    let meta_path = dir.join("metadata.csv");
    let file = File::open(&meta_path).map_err(|e| {
        Error::Format(format!(
            "missing metadata.csv in wav directory {}: {}",
            dir.display(),
            e
        ))
    })?;
    let mut lines = BufReader::new(file).lines();
    let header = loop {
        match lines.next() {
            None => return Ok(ClickDataset::empty(0)),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let n = parse_csv_header(&header)?;

    let mut clicks = Vec::new();
    let mut record = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Shape(format!(
                "record {}: expected `filename,hydrophone_id,range_m,azimuth_rad`, found {} fields",
                record,
                fields.len()
            )));
        }
        let hydrophone_id: u32 = fields[1].trim().parse().map_err(|_| Error::Parse {
            record,
            message: format!("invalid hydrophone_id {:?}", fields[1]),
        })?;
        let range_m: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
            record,
            message: format!("invalid range_m {:?}", fields[2]),
        })?;
        let azimuth_rad: f64 = fields[3].trim().parse().map_err(|_| Error::Parse {
            record,
            message: format!("invalid azimuth_rad {:?}", fields[3]),
        })?;
        let samples = read_wav_mono(&dir.join(fields[0].trim()), n, record)?;
        let rec = ClickRecord {
            samples,
            range_m,
            azimuth_rad,
            hydrophone_id,
            click_id: record as u64,
        };
        rec.validate(n, record)?;
        clicks.push(rec);
        record += 1;
    }
    ClickDataset::new(clicks, n)
}

/// Read a mono WAV as f64 in [-1, 1], center-cropped or symmetrically
/// zero-padded to exactly `n` samples.
fn read_wav_mono(path: &Path, n: usize, record: usize) -> Result<Vec<f64>> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::Parse {
        record,
        message: format!("cannot open wav {}: {}", path.display(), e),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Parse {
            record,
            message: format!(
                "{}: expected mono wav, found {} channels",
                path.display(),
                spec.channels
            ),
        });
    }
    let raw: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                record,
                message: format!("{}: {}", path.display(), e),
            })?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    record,
                    message: format!("{}: {}", path.display(), e),
                })?
        }
    };
    Ok(fit_length(&raw, n))
}

/// Center-crop or symmetrically zero-pad `raw` to length `n`.
fn fit_length(raw: &[f64], n: usize) -> Vec<f64> {
    if raw.len() == n {
        return raw.to_vec();
    }
    if raw.len() > n {
        let start = (raw.len() - n) / 2;
        return raw[start..start + n].to_vec();
    }
    let pad_front = (n - raw.len()) / 2;
    let mut out = vec![0.0; n];
    out[pad_front..pad_front + raw.len()].copy_from_slice(raw);
    out
}

// ---------------------------------------------------------------------------
// Feature cache (CCF1)
// ---------------------------------------------------------------------------

/// Persist pooled features and their (range, azimuth) labels.
///
/// Layout: magic `CCF1`, u32 count, u32 dimension d, count×d f64 feature
/// values (feature-major), then count×2 f64 labels, all little-endian.
pub fn save_features(features: &[GlobalFeature], labels: &[(f64, f64)], path: &Path) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let d = features.first().map_or(0, |f| f.values.len());
    for (i, f) in features.iter().enumerate() {
        if f.values.len() != d {
            return Err(Error::Shape(format!(
                "feature {} has dimension {}, expected {}",
                i,
                f.values.len(),
                d
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(features.len() as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    for f in features {
        for v in &f.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for &(r, a) in labels {
        w.write_all(&r.to_le_bytes())?;
        w.write_all(&a.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Load a `CCF1` feature cache. The cache stores no click ids, so features
/// are re-numbered 0..count in file order.
pub fn load_features(path: &Path) -> Result<(Vec<GlobalFeature>, Vec<(f64, f64)>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for CCF1 header".into()))?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected CCF1",
            String::from_utf8_lossy(&magic)
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let mut features = Vec::with_capacity(count);
    for i in 0..count {
        let mut values = vec![0.0; d];
        for v in values.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        features.push(GlobalFeature {
            values,
            click_id: i as u64,
        });
    }
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let range = read_f64(&mut r)?;
        let az = read_f64(&mut r)?;
        labels.push((range, az));
    }
    Ok((features, labels))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("unexpected end of file".into()))?;
    Ok(f64::from_le_bytes(b))
}
