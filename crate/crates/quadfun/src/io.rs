//! Sample CSVs, custom weight tables, density fixtures, experiment configs
//! and result files.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use quadfun_core::densities::make_trig_density;
use quadfun_core::harness::{ExperimentConfig, ExperimentResult, ZetaRule};
use quadfun_core::{EstimateKind, Frequency, ReferenceDensity, SampleSet, WeightTable};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::spec::parse_weight_spec;

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn fmt9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "INF" } else { "-INF" }.to_string();
    }
    format!("{}", round9(x))
}

pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// A JSON number with 9 significant digits; non-finite values become the
/// strings `INF`, `-INF` and `NaN`.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(round9(x))
            .map(Value::Number)
            .expect("finite")
    } else {
        Value::String(fmt9(x))
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_error(path, line, e.to_string())
}

fn looks_like_header(record: &csv::StringRecord) -> bool {
    record.iter().any(|f| f.parse::<f64>().is_err())
}

/// One sample per row, `D` numeric columns in `[0, 1)`. A first row with any
/// non-numeric field is a header. `dimension` defaults to the width of the
/// first data row.
pub fn read_samples(path: &Path, dimension: Option<usize>) -> Result<SampleSet> {
    read_samples_from(open(path)?, path, dimension)
}

/// [`read_samples`] over any reader; `path` only labels diagnostics.
pub fn read_samples_from<R: Read>(
    input: R,
    path: &Path,
    dimension: Option<usize>,
) -> Result<SampleSet> {
    let mut reader = csv_reader(input);
    let mut points = Vec::new();
    let mut dim = dimension;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && looks_like_header(&record) {
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let d = *dim.get_or_insert(record.len());
        if record.len() != d {
            return Err(parse_error(
                path,
                line,
                format!("expected {d} columns, found {}", record.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
            if !(0.0..1.0).contains(&v) {
                return Err(parse_error(path, line, format!("{v} is outside [0, 1)")));
            }
            points.push(v);
        }
    }
    let d = dim.unwrap_or(1);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SampleSet::new(d, points, label)?)
}

pub fn write_samples(path: &Path, samples: &SampleSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for p in samples.points() {
        w.write_record(p.iter().map(|v| format!("{v:?}")))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns `z_1, ..., z_D, weight`, one frequency per row, optional header.
/// NaN, nonpositive weights and repeated frequencies are rejected with the
/// offending line.
pub fn read_weight_table(path: &Path, dimension: usize) -> Result<WeightTable> {
    let mut reader = csv_reader(open(path)?);
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && looks_like_header(&record) {
            continue;
        }
        if record.len() != dimension + 1 {
            return Err(parse_error(
                path,
                line,
                format!("expected {} columns, found {}", dimension + 1, record.len()),
            ));
        }
        let coords = record
            .iter()
            .take(dimension)
            .map(|f| {
                f.parse::<i64>()
                    .map_err(|_| parse_error(path, line, format!("`{f}` is not an integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        let field = &record[dimension];
        let w: f64 = field
            .parse()
            .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
        if !w.is_finite() || w <= 0.0 {
            return Err(parse_error(
                path,
                line,
                format!("weight {field} must be positive and finite"),
            ));
        }
        if !seen.insert(coords.clone()) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate frequency {}", Frequency::new(coords)),
            ));
        }
        entries.push((Frequency::new(coords), w));
    }
    WeightTable::new(dimension, entries).map_err(|e| parse_error(path, 0, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub z: Vec<i64>,
    pub amplitude: f64,
}

/// `{dimension, amplitudes: [{z, amplitude}]}`: the density
/// `1 + sum amplitude sqrt(2) cos(2 pi <z, x>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFixture {
    pub dimension: usize,
    #[serde(default)]
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl DensityFixture {
    pub fn from_density(p: &ReferenceDensity) -> Self {
        DensityFixture {
            dimension: p.dimension(),
            amplitudes: p
                .amplitudes()
                .map(|(z, a)| AmplitudeEntry {
                    z: z.coords().to_vec(),
                    amplitude: a,
                })
                .collect(),
        }
    }

    /// Nonnegativity-checked density.
    pub fn to_density(&self) -> Result<ReferenceDensity> {
        let amps = self
            .amplitudes
            .iter()
            .map(|e| (Frequency::new(e.z.clone()), e.amplitude))
            .collect();
        Ok(make_trig_density(self.dimension, amps)?)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(std::io::BufReader::new(open(path)?)).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

pub fn read_density(path: &Path) -> Result<ReferenceDensity> {
    read_json::<DensityFixture>(path)?.to_density()
}

pub fn write_density(path: &Path, p: &ReferenceDensity) -> Result<()> {
    let text =
        serde_json::to_string_pretty(&DensityFixture::from_density(p)).expect("fixture serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A density given inline or as a path relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySource {
    Inline(DensityFixture),
    Path(PathBuf),
}

impl DensitySource {
    fn load(&self, base: &Path) -> Result<ReferenceDensity> {
        match self {
            DensitySource::Inline(f) => f.to_density(),
            DensitySource::Path(p) => read_density(&base.join(p)),
        }
    }
}

/// Experiment config file. `q` defaults to `p`; weights use the spec grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub p: DensitySource,
    #[serde(default)]
    pub q: Option<DensitySource>,
    pub a: String,
    pub b: String,
    pub n_grid: Vec<u64>,
    pub replications: usize,
    pub zeta_rule: ZetaRule,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_kind")]
    pub kind: EstimateKind,
}

fn default_kind() -> EstimateKind {
    EstimateKind::InnerProduct
}

impl ExperimentFile {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Resolves densities (relative to `base`) and weight specs.
    pub fn to_config(&self, base: &Path) -> Result<ExperimentConfig> {
        let p = self.p.load(base)?;
        let q = match &self.q {
            Some(q) => q.load(base)?,
            None => p.clone(),
        };
        let d = p.dimension();
        let config = ExperimentConfig {
            a: parse_weight_spec(&self.a, d)?,
            b: parse_weight_spec(&self.b, d)?,
            p,
            q,
            n_grid: self.n_grid.clone(),
            replications: self.replications,
            zeta_rule: self.zeta_rule,
            base_seed: self.base_seed,
            kind: self.kind,
        };
        config.validate()?;
        Ok(config)
    }
}

pub const RESULTS_HEADER: [&str; 6] = ["n", "zeta", "truth", "mean_estimate", "mse", "mse_stderr"];

/// Results CSV plus a JSON sidecar (same path, `.json` extension) echoing the
/// config and the fitted slope. Returns the sidecar path.
pub fn write_results(
    path: &Path,
    result: &ExperimentResult,
    config_echo: &Value,
) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(RESULTS_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for r in &result.rows {
        w.write_record([
            r.n.to_string(),
            r.zeta.to_string(),
            fmt9(r.truth),
            fmt9(r.mean_estimate),
            fmt9(r.mse),
            fmt9(r.mse_stderr),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sidecar = path.with_extension("json");
    let fit = match result.fit {
        Some(f) => serde_json::json!({
            "slope": json_num(f.slope),
            "slope_stderr": json_num(f.slope_stderr),
            "intercept": json_num(f.intercept),
        }),
        None => Value::Null,
    };
    let single_rep = result.rows.iter().any(|r| r.single_rep);
    let body = serde_json::json!({ "config": config_echo, "fit": fit, "single_rep": single_rep });
    std::fs::write(&sidecar, serde_json::to_string_pretty(&body).expect("json"))
        .map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}
