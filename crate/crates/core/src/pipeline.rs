//! End-to-end run: ingest, normalize, per-record key exchange, encrypt with
//! Alice's key, decrypt with Bob's, compare row by row, aggregate, write
//! artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{
    build_layered_ansatz, build_simple_encoding, decrypt_features, encrypt_features, to_angles,
    ColumnBounds, NormalizedRecord, RawRecord, DEFAULT_LAYERS, N_FEATURES,
};
use crate::error::{Error, Result};
use crate::ingest::{load_csv, IngestConfig, IngestStats};
use crate::metrics::{
    aggregate, chsh_from_samples, composite_index, ChshEstimate, CompositeWeights, ProtocolReport,
    RecordComparison, CHSH_CONVENTION,
};
use crate::plots::{plot_data, plot_svgs, PlotFile};
use crate::protocols::{
    disclose_sample, e91_exchange, run_protocol, ChannelModel, ChshSample, ProtocolKind,
};
use crate::rng::{derive_rng, StreamPurpose};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ROW_LIMIT: usize = 100;
pub const DEFAULT_CHSH_PAIRS: usize = 50_000;
pub const QUBIT_ORDER: &str =
    "qubit 0 is the least-significant bit of the basis index; bitstrings list qubit 0 first";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFormats {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
}

impl OutputFormats {
    pub fn all() -> Self {
        Self {
            json: true,
            csv: true,
            svg: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingChoice {
    #[default]
    Simple,
    Layered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocols: Vec<ProtocolKind>,
    pub input: PathBuf,
    pub columns: Option<Vec<String>>,
    pub row_limit: usize,
    pub skip_invalid: bool,
    pub master_seed: u64,
    pub channel: ChannelModel,
    /// Not serialized, so reports from different output directories compare equal.
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub formats: OutputFormats,
    /// Disclose this fraction of each sifted key to estimate QBER.
    pub qber_sample_fraction: Option<f64>,
    /// Pairs in the dedicated E91 CHSH session (0 disables it).
    pub chsh_pairs: usize,
    /// Take min/max over every valid row of the file instead of the ingested slice.
    pub normalize_over_file: bool,
    pub encoding: EncodingChoice,
    /// Shots per record for encoding diagnostics; 0 reports exact probabilities only.
    pub encoding_shots: usize,
    pub weights: CompositeWeights,
    /// Worker threads; `None` uses the global pool. Output does not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            protocols: ProtocolKind::CANONICAL.to_vec(),
            input: input.into(),
            columns: None,
            row_limit: DEFAULT_ROW_LIMIT,
            skip_invalid: true,
            master_seed: 0,
            channel: ChannelModel::ideal(),
            out_dir: out_dir.into(),
            formats: OutputFormats::all(),
            qber_sample_fraction: None,
            chsh_pairs: DEFAULT_CHSH_PAIRS,
            normalize_over_file: false,
            encoding: EncodingChoice::Simple,
            encoding_shots: 0,
            weights: CompositeWeights::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.protocols.is_empty() {
            return Err(Error::Config("no protocols selected".into()));
        }
        let mut seen = self.protocols.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.protocols.len() {
            return Err(Error::Config("protocol listed twice".into()));
        }
        if self.row_limit == 0 {
            return Err(Error::Config("row limit must be at least 1".into()));
        }
        if let Some(f) = self.qber_sample_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!(
                    "QBER sample fraction {f} outside (0, 1]"
                )));
            }
        }
        if let Some(cols) = &self.columns {
            if cols.len() != N_FEATURES {
                return Err(Error::Config(format!(
                    "expected {N_FEATURES} column names, got {}",
                    cols.len()
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        self.channel
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    fn ingest_config(&self, row_limit: Option<usize>) -> IngestConfig {
        IngestConfig {
            path: self.input.clone(),
            field_names: self.columns.clone(),
            row_limit,
            skip_invalid: self.skip_invalid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub columns: Vec<String>,
    pub stats: IngestStats,
    pub normalization_scope: String,
    pub bounds: ColumnBounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSession {
    pub pairs: usize,
    pub estimate: ChshEstimate,
    pub key_qber: Option<f64>,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub generator: String,
    pub qubit_order: String,
    pub chsh_convention: String,
    pub key_material: String,
    pub config: RunConfig,
    pub ingest: IngestSummary,
    pub protocols: Vec<ProtocolReport>,
    pub e91_chsh_session: Option<ChshSession>,
}

/// Per-record encoding diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingRow {
    pub row_index: u64,
    pub thetas: [f64; N_FEATURES],
    /// Exact marginal P(qubit i = 1) of the encoded state.
    pub p_one: [f64; N_FEATURES],
    pub shot_frequency: Option<[f64; N_FEATURES]>,
}

/// Everything a run produces, before anything touches the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub comparisons: BTreeMap<ProtocolKind, Vec<RecordComparison>>,
    pub encoding: Vec<EncodingRow>,
    pub plots: Vec<PlotFile>,
}

fn load_records(config: &RunConfig) -> Result<(Vec<RawRecord>, Vec<String>, IngestStats)> {
    let mut stream = load_csv(&config.ingest_config(Some(config.row_limit)))?;
    let records = stream.by_ref().collect::<Result<Vec<_>>>()?;
    let columns = stream.columns().to_vec();
    let stats = stream.stats().clone();
    debug_assert_eq!(stats.rows_read, stats.rows_emitted + stats.rows_rejected);
    Ok((records, columns, stats))
}

fn file_bounds(config: &RunConfig) -> Result<ColumnBounds> {
    let mut stream = load_csv(&config.ingest_config(None))?;
    let mut bounds: Option<ColumnBounds> = None;
    for record in stream.by_ref() {
        let record = record?;
        bounds = Some(match bounds {
            None => ColumnBounds::scan(std::iter::once(&record))?,
            Some(mut b) => {
                for i in 0..N_FEATURES {
                    b.min[i] = b.min[i].min(record.values[i]);
                    b.max[i] = b.max[i].max(record.values[i]);
                }
                b
            }
        });
    }
    bounds.ok_or_else(|| Error::Data("no valid rows after cleaning".into()))
}

fn process_record(
    config: &RunConfig,
    kind: ProtocolKind,
    record: &NormalizedRecord,
) -> Result<(RecordComparison, Vec<ChshSample>)> {
    let mut rng = derive_rng(
        config.master_seed,
        Some(kind),
        StreamPurpose::KeyExchange,
        record.row_index,
    );
    let mut outcome = run_protocol(kind, N_FEATURES, &config.channel, &mut rng)?;
    if let Some(fraction) = config.qber_sample_fraction {
        let mut sample_rng = derive_rng(
            config.master_seed,
            Some(kind),
            StreamPurpose::QberSample,
            record.row_index,
        );
        outcome = disclose_sample(&outcome, fraction, &mut sample_rng)?;
    }
    let decrypted = if outcome.alice_key.is_empty() {
        None
    } else {
        let ciphertext = encrypt_features(record, &outcome.alice_key)?;
        Some(decrypt_features(&ciphertext, &outcome.bob_key)?)
    };
    let comparison = RecordComparison::new(&outcome, record, decrypted.as_ref());
    Ok((comparison, outcome.chsh_samples.unwrap_or_default()))
}

fn encoding_row(config: &RunConfig, record: &NormalizedRecord) -> Result<EncodingRow> {
    let angles = to_angles(record);
    let circuit = match config.encoding {
        EncodingChoice::Simple => build_simple_encoding(&angles),
        EncodingChoice::Layered => build_layered_ansatz(&angles, DEFAULT_LAYERS, true)?,
    };
    let state = circuit.run()?;
    let mut p_one = [0.0; N_FEATURES];
    for (q, p) in p_one.iter_mut().enumerate() {
        *p = state.prob_one(q)?;
    }
    let shot_frequency = (config.encoding_shots > 0).then(|| {
        let mut rng = derive_rng(
            config.master_seed,
            None,
            StreamPurpose::EncodingShots,
            record.row_index,
        );
        let mut ones = [0usize; N_FEATURES];
        for _ in 0..config.encoding_shots {
            let out = state.measure_all(&mut rng);
            for (q, c) in ones.iter_mut().enumerate() {
                *c += out.bit(q) as usize;
            }
        }
        ones.map(|c| c as f64 / config.encoding_shots as f64)
    });
    Ok(EncodingRow {
        row_index: record.row_index,
        thetas: angles.thetas,
        p_one,
        shot_frequency,
    })
}

fn run_chsh_session(config: &RunConfig) -> Result<Option<ChshSession>> {
    if config.chsh_pairs == 0 || !config.protocols.contains(&ProtocolKind::E91) {
        return Ok(None);
    }
    let mut rng = derive_rng(
        config.master_seed,
        Some(ProtocolKind::E91),
        StreamPurpose::ChshSession,
        0,
    );
    let outcome = e91_exchange(config.chsh_pairs, &config.channel, &mut rng)?;
    match chsh_from_samples(outcome.chsh_samples.as_deref().unwrap_or_default()) {
        Ok(estimate) => Ok(Some(ChshSession {
            pairs: config.chsh_pairs,
            estimate,
            key_qber: outcome.qber,
        })),
        Err(e @ Error::InsufficientSamples { .. }) => {
            warn!("E91 CHSH session: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs the whole pipeline in memory.
pub fn simulate(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let (raw, columns, stats) = load_records(config)?;
    let (bounds, scope) = if config.normalize_over_file {
        (file_bounds(config)?, "file")
    } else {
        (ColumnBounds::scan(&raw)?, "ingested_slice")
    };
    for col in bounds.constant_columns() {
        warn!("column {} is constant; normalized to 0.0", columns[col]);
    }
    let records = raw
        .iter()
        .map(|r| bounds.normalize(r))
        .collect::<Result<Vec<_>>>()?;
    info!("{} records from {}", records.len(), config.input.display());

    let work = || -> Result<_> {
        let mut comparisons = BTreeMap::new();
        let mut reports = Vec::with_capacity(config.protocols.len());
        for &kind in &config.protocols {
            let rows = records
                .par_iter()
                .map(|r| process_record(config, kind, r))
                .collect::<Result<Vec<_>>>()?;
            let mut samples = Vec::new();
            let mut table = Vec::with_capacity(rows.len());
            for (comparison, s) in rows {
                table.push(comparison);
                samples.extend(s);
            }
            let chsh = if kind == ProtocolKind::E91 {
                match chsh_from_samples(&samples) {
                    Ok(est) => Some(est),
                    Err(e) => {
                        warn!("E91 per-record CHSH: {e}");
                        None
                    }
                }
            } else {
                None
            };
            reports.push(aggregate(kind, &table, chsh)?);
            comparisons.insert(kind, table);
        }
        let encoding = records
            .par_iter()
            .map(|r| encoding_row(config, r))
            .collect::<Result<Vec<_>>>()?;
        let session = run_chsh_session(config)?;
        Ok((comparisons, reports, encoding, session))
    };
    let (comparisons, mut reports, encoding, session) = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    if reports.len() >= 2 {
        composite_index(&mut reports, &config.weights)?;
    } else {
        warn!("composite index and plots need at least two protocols");
    }

    let session_estimate = session.as_ref().map(|s| &s.estimate);
    let mut plots = Vec::new();
    if config.formats.csv {
        plots.extend(plot_data(&reports, session_estimate));
    }
    if config.formats.svg {
        plots.extend(plot_svgs(&reports, session_estimate));
    }

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        generator: concat!("scada-qkd ", env!("CARGO_PKG_VERSION")).to_string(),
        qubit_order: QUBIT_ORDER.to_string(),
        chsh_convention: CHSH_CONVENTION.to_string(),
        key_material: "raw sifted keys; no error correction or privacy amplification".to_string(),
        config: config.clone(),
        ingest: IngestSummary {
            columns,
            stats,
            normalization_scope: scope.to_string(),
            bounds,
        },
        protocols: reports,
        e91_chsh_session: session,
    };
    Ok(RunArtifacts {
        report,
        comparisons,
        encoding,
        plots,
    })
}

/// Table-2 style comparison CSV.
pub fn comparison_csv(rows: &[RecordComparison]) -> String {
    let mut out = String::from("Index,AliceKey,BobKey,KeySize,KeysMatch,QBER\n");
    for r in rows {
        let (matches, qber) = match r.qber {
            Some(q) => (
                if r.keys_match { "True" } else { "False" },
                format!("{q:.2}"),
            ),
            None => ("", String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{matches},{qber}",
            r.row_index, r.alice_key, r.bob_key, r.key_size
        );
    }
    out
}

fn diffs_csv(rows: &[RecordComparison]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("Index,KeySize,QBER,MeanAbsDiff,MaxAbsDiff\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.row_index,
            r.key_size,
            opt(r.qber),
            opt(r.mean_abs_feature_diff),
            opt(r.max_abs_feature_diff)
        );
    }
    out
}

fn encoding_csv(rows: &[EncodingRow]) -> String {
    let mut out = String::from("Index");
    for prefix in ["theta", "p1", "freq1"] {
        for q in 0..N_FEATURES {
            let _ = write!(out, ",{prefix}_{q}");
        }
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{}", r.row_index);
        for v in r.thetas.iter().chain(&r.p_one) {
            let _ = write!(out, ",{v}");
        }
        for q in 0..N_FEATURES {
            match r.shot_frequency {
                Some(f) => {
                    let _ = write!(out, ",{}", f[q]);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes artifacts under `out_dir`. On failure every file written so far
/// is removed again.
pub fn write_artifacts(
    artifacts: &RunArtifacts,
    out_dir: &Path,
    formats: OutputFormats,
) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if formats.json {
        let mut json = serde_json::to_string_pretty(&artifacts.report)?;
        json.push('\n');
        files.push((out_dir.join("report.json"), json));
    }
    if formats.csv {
        for (kind, rows) in &artifacts.comparisons {
            files.push((
                out_dir.join(format!("compare_{}.csv", kind.slug())),
                comparison_csv(rows),
            ));
            files.push((
                out_dir.join(format!("diffs_{}.csv", kind.slug())),
                diffs_csv(rows),
            ));
        }
        files.push((
            out_dir.join("encoding.csv"),
            encoding_csv(&artifacts.encoding),
        ));
    }
    let plot_dir = out_dir.join("plots");
    for p in &artifacts.plots {
        files.push((plot_dir.join(&p.name), p.contents.clone()));
    }

    let mut written = Vec::with_capacity(files.len());
    let made_plot_dir = !artifacts.plots.is_empty() && !plot_dir.exists();
    let result = (|| -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if !artifacts.plots.is_empty() {
            fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
        }
        for (path, contents) in &files {
            fs::write(path, contents).map_err(|e| Error::io(path, e))?;
            written.push(path.clone());
        }
        Ok(())
    })();
    if let Err(e) = result {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        if made_plot_dir {
            let _ = fs::remove_dir(&plot_dir);
        }
        return Err(e);
    }
    Ok(written)
}

/// [`simulate`] followed by [`write_artifacts`].
pub fn run_pipeline(config: &RunConfig) -> Result<RunArtifacts> {
    let artifacts = simulate(config)?;
    let written = write_artifacts(&artifacts, &config.out_dir, config.formats)?;
    info!(
        "wrote {} files to {}",
        written.len(),
        config.out_dir.display()
    );
    Ok(artifacts)
}
