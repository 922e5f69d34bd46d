//! Sample ingestion, run configuration and result serialization.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::divergence::GsbParams;
use crate::error::{Error, Result};
use crate::robustness::{DeltaPolicy, RobustnessReport};
use crate::sim::{paper_alphas, paper_lambdas, Contamination, Distribution, RejectionTable, ScenarioSpec};
use crate::tuning::RiskSurface;
use crate::two_sample::{Bandwidth, FamilyPath, Method, TestConfig, TestResult, TwoSampleData, DEFAULT_LEVEL, DEFAULT_PERMUTATIONS};
use crate::density::DEFAULT_GRID_POINTS;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything needed to reproduce a run from its output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub level: f64,
    pub method: Method,
    pub n_perm: usize,
    pub grid_points: usize,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    pub delta_policy: DeltaPolicy,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            method: Method::Auto,
            n_perm: DEFAULT_PERMUTATIONS,
            grid_points: DEFAULT_GRID_POINTS,
            bandwidth: Bandwidth::Silverman,
            seed: 0,
            delta_policy: DeltaPolicy::default(),
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.test_config().validate()?;
        if let DeltaPolicy::Bump { eta } = self.delta_policy {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("bump width must be positive, got {eta}")));
            }
        }
        Ok(())
    }

    pub fn test_config(&self) -> TestConfig {
        TestConfig {
            level: self.level,
            method: self.method,
            n_perm: self.n_perm,
            seed: self.seed,
            grid_points: self.grid_points,
            bandwidth: self.bandwidth,
            ..TestConfig::default()
        }
    }
}

/// Where the two samples come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleSource {
    /// One file with `group` (0/1) and `y` columns.
    Grouped(PathBuf),
    /// One file per group, each with a `y` column.
    Split(PathBuf, PathBuf),
}

pub fn load_samples(source: &SampleSource) -> Result<TwoSampleData> {
    match source {
        SampleSource::Grouped(p) => read_grouped(open(p)?),
        SampleSource::Split(p0, p1) => TwoSampleData::new(read_column(open(p0)?)?, read_column(open(p1)?)?),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { line: p.line(), message: e.to_string() },
        None => Error::Io(e.to_string()),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Schema(format!("missing column \"{name}\" (found {:?})", headers.iter().collect::<Vec<_>>())))
}

fn parse_value(field: &str, line: u64) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Parse { line, message: format!("non-finite value {v}") }),
        Err(_) => Err(Error::Parse { line, message: format!("cannot parse \"{field}\" as a number") }),
    }
}

/// Reads a `group,y` table.
pub fn read_grouped<R: Read>(r: R) -> Result<TwoSampleData> {
    let mut rdr = csv_reader(r);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let (gi, yi) = (column(&headers, "group")?, column(&headers, "y")?);
    let (mut y0, mut y1) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let y = parse_value(&rec[yi], line)?;
        match &rec[gi] {
            "0" => y0.push(y),
            "1" => y1.push(y),
            g => return Err(Error::Parse { line, message: format!("group must be 0 or 1, got \"{g}\"") }),
        }
    }
    TwoSampleData::new(y0, y1)
}

/// Reads the `y` column of a one-sample table.
pub fn read_column<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv_reader(r);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let yi = column(&headers, "y")?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            parse_value(&rec[yi], rec.position().map_or(0, |p| p.line()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl From<&GsbParams> for ParamsRecord {
    fn from(p: &GsbParams) -> Self {
        Self { alpha: p.alpha, lambda: p.lambda, beta: p.beta, a: p.a(), b: p.b() }
    }
}

/// Flat view of a [`TestResult`] with the stable field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub i_hat: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub t_hat: f64,
    pub p_value: f64,
    pub method: Method,
    pub reject: bool,
    pub level: f64,
    pub params: ParamsRecord,
    pub n0: usize,
    pub n1: usize,
    pub h: f64,
    pub seed: u64,
    pub family_path: FamilyPath,
}

impl From<&TestResult> for TestRecord {
    fn from(r: &TestResult) -> Self {
        Self {
            i_hat: r.i_hat,
            mu_hat: r.moments.mu,
            sigma_hat: r.moments.sigma(),
            t_hat: r.t_hat,
            p_value: r.p_value,
            method: r.method,
            reject: r.reject,
            level: r.level,
            params: (&r.params).into(),
            n0: r.n0,
            n1: r.n1,
            h: r.h,
            seed: r.seed,
            family_path: r.moments.family_path,
        }
    }
}

/// A result body together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config: RunConfig,
    #[serde(flatten)]
    pub body: T,
}

/// Any result the command line can emit.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Test(TestResult),
    Risk(RiskSurface),
    Table(RejectionTable),
    Robustness(RobustnessReport),
}

/// Serializes `output` in `config.format`. CSV documents start with a
/// `#`-prefixed line holding the configuration as JSON.
pub fn emit_result(output: &Output, config: &RunConfig) -> Result<String> {
    match config.format {
        Format::Json => emit_json(output, config),
        Format::Csv => {
            let header = serde_json::to_string(config).map_err(|e| Error::Io(e.to_string()))?;
            Ok(format!("# config: {header}\n{}", emit_csv(output)?))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

fn emit_json(output: &Output, config: &RunConfig) -> Result<String> {
    let config = *config;
    match output {
        Output::Test(r) => to_json(&Envelope { config, body: TestRecord::from(r) }),
        Output::Risk(s) => to_json(&Envelope { config, body: RiskRecord::from(s) }),
        Output::Table(t) => to_json(&Envelope { config, body: t.clone() }),
        Output::Robustness(r) => to_json(&Envelope { config, body: r.clone() }),
    }
}

/// A risk surface with its selected candidate spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub best_params: ParamsRecord,
    pub best_risk: f64,
    #[serde(flatten)]
    pub surface: RiskSurface,
}

impl From<&RiskSurface> for RiskRecord {
    fn from(s: &RiskSurface) -> Self {
        let best = &s.entries[s.best];
        Self { best_params: (&best.params).into(), best_risk: best.risk, surface: s.clone() }
    }
}

fn emit_csv(output: &Output) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(e.to_string());
    let num = |v: f64| v.to_string();
    match output {
        Output::Test(r) => {
            let t = TestRecord::from(r);
            w.write_record([
                "i_hat", "mu_hat", "sigma_hat", "t_hat", "p_value", "method", "reject", "level", "alpha", "lambda", "beta",
                "A", "B", "n0", "n1", "h", "seed",
            ])
            .map_err(err)?;
            let method = serde_json::to_value(t.method).map_err(|e| Error::Io(e.to_string()))?;
            w.write_record([
                num(t.i_hat),
                num(t.mu_hat),
                num(t.sigma_hat),
                num(t.t_hat),
                num(t.p_value),
                method.as_str().unwrap_or_default().to_string(),
                t.reject.to_string(),
                num(t.level),
                num(t.params.alpha),
                num(t.params.lambda),
                num(t.params.beta),
                num(t.params.a),
                num(t.params.b),
                t.n0.to_string(),
                t.n1.to_string(),
                num(t.h),
                t.seed.to_string(),
            ])
            .map_err(err)?;
        }
        Output::Risk(s) => {
            w.write_record(["alpha", "lambda", "beta", "p_hat", "risk"]).map_err(err)?;
            for e in &s.entries {
                w.write_record([e.params.alpha, e.params.lambda, e.params.beta, e.p_hat, e.risk].map(num)).map_err(err)?;
            }
        }
        Output::Table(t) => {
            let head = std::iter::once("lambda".to_string()).chain(t.alphas.iter().map(|&a| num(a)));
            w.write_record(head).map_err(err)?;
            for (l, row) in t.lambdas.iter().zip(&t.cells) {
                w.write_record(std::iter::once(num(*l)).chain(row.iter().map(|&c| num(c)))).map_err(err)?;
            }
        }
        Output::Robustness(r) => {
            w.write_record(["y0", "if2"]).map_err(err)?;
            for &(y, v) in &r.if2_curve {
                w.write_record([num(y), num(v)]).map_err(err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Reads back the cells of a table written by [`emit_result`] as
/// `(alphas, lambdas, cells)`.
pub fn read_table_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut rdr = csv_reader(r);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.get(0) != Some("lambda") {
        return Err(Error::Schema("table must start with a \"lambda\" column".into()));
    }
    let alphas = headers.iter().skip(1).map(|f| parse_value(f, 1)).collect::<Result<Vec<_>>>()?;
    let (mut lambdas, mut cells) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut vals = rec.iter().map(|f| parse_value(f, line));
        lambdas.push(vals.next().transpose()?.unwrap_or(f64::NAN));
        cells.push(vals.collect::<Result<Vec<_>>>()?);
    }
    Ok((alphas, lambdas, cells))
}

/// The tuning grid of a simulation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub beta: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { alphas: paper_alphas(), lambdas: paper_lambdas(), beta: 0.0 }
    }
}

fn default_n() -> usize {
    100
}

fn default_replications() -> usize {
    200
}

fn default_level() -> f64 {
    DEFAULT_LEVEL
}

/// A simulation scenario as written in a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub model0: Distribution,
    pub model1: Distribution,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    #[serde(default = "default_n")]
    pub n0: usize,
    #[serde(default = "default_n")]
    pub n1: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
}

impl SimulationFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1) as u64);
            Error::Parse { line, message: e.message().to_string() }
        })?;
        file.scenario().validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> ScenarioSpec {
        ScenarioSpec {
            model0: self.model0.clone(),
            model1: self.model1.clone(),
            contamination: self.contamination.clone(),
            n0: self.n0,
            n1: self.n1,
            replications: self.replications,
            level: self.level,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_sample::run_test;

    fn sample_result() -> TestResult {
        let y0: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let y1: Vec<f64> = (0..40).map(|i| (i as f64 * 0.53).cos() + 0.8).collect();
        let data = TwoSampleData::new(y0, y1).unwrap();
        run_test(&data, &GsbParams::new(0.5, 0.0, 0.0).unwrap(), &TestConfig::default()).unwrap()
    }

    #[test]
    fn grouped_input() {
        let text = "group,y\n0,1.5\n1,2.0\n0,-0.5\n1,3.25\n";
        let d = read_grouped(text.as_bytes()).unwrap();
        assert_eq!(d.y0(), &[1.5, -0.5]);
        assert_eq!(d.y1(), &[2.0, 3.25]);
    }

    #[test]
    fn bad_group_names_line() {
        let text = "group,y\n0,1.0\n1,2.0\n2, 1.5\n";
        match read_grouped(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("\"2\""), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nan_rejected() {
        let text = "y\n1.0\nNaN\n";
        assert!(matches!(read_column(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_column() {
        assert!(matches!(read_grouped("g,y\n0,1\n".as_bytes()), Err(Error::Schema(_))));
        assert!(matches!(read_column("x\n1\n".as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn empty_group() {
        let text = "group,y\n0,1\n0,2\n";
        assert_eq!(read_grouped(text.as_bytes()), Err(Error::OneGroupEmpty(1)));
    }

    #[test]
    fn json_round_trip() {
        let r = sample_result();
        let config = RunConfig { seed: 9, ..RunConfig::default() };
        let json = emit_result(&Output::Test(r.clone()), &config).unwrap();
        let back: Envelope<TestRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.body, TestRecord::from(&r));
        assert_eq!(back.config, config);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["reject"].as_bool().unwrap(), r.p_value <= r.level);
        for key in ["i_hat", "mu_hat", "sigma_hat", "t_hat", "p_value", "method", "n0", "n1", "h", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["params"]["A"].as_f64().unwrap(), 1.0);
        assert_eq!(v["params"]["B"].as_f64().unwrap(), 0.5);
    }

    #[test]
    fn table_csv_first_row_is_alpha_grid() {
        let t = RejectionTable {
            alphas: vec![0.0, 0.1, 1.0 / 3.0],
            lambdas: vec![-0.5, 0.25],
            beta: 0.0,
            replications: 3,
            cells: vec![vec![0.1, 0.2, 2.0 / 3.0], vec![0.0, 1.0, 1.0 / 7.0]],
            standard_errors: vec![vec![0.0; 3]; 2],
            digests: vec![1, 2, 3],
        };
        let config = RunConfig { format: Format::Csv, ..RunConfig::default() };
        let csv = emit_result(&Output::Table(t.clone()), &config).unwrap();
        let first = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(first, format!("lambda,0,0.1,{}", 1.0 / 3.0));
        let (a, l, c) = read_table_csv(csv.as_bytes()).unwrap();
        assert_eq!((a, l, c), (t.alphas, t.lambdas, t.cells));
    }

    #[test]
    fn simulation_file() {
        let text = r#"
            seed = 7
            replications = 20
            [model0]
            kind = "normal"
            mean = 0.0
            sd = 1.0
            [model1]
            kind = "mixture"
            components = [{ weight = 0.4, mean = -1.0, sd = 1.0 }, { weight = 0.6, mean = 1.0, sd = 1.0 }]
            [contamination]
            epsilon = 0.1
            distribution = { kind = "normal", mean = 5.0, sd = 1.4142135623730951 }
            [grid]
            alphas = [0.0, 0.5]
        "#;
        let f = SimulationFile::parse(text).unwrap();
        assert_eq!(f.model1, Distribution::model2());
        assert_eq!(f.n0, 100);
        assert_eq!(f.grid.lambdas, paper_lambdas());
        assert_eq!(f.scenario().contamination.unwrap().epsilon, 0.1);
        assert!(matches!(SimulationFile::parse("seed = 1\n"), Err(Error::Parse { .. })));
    }
}
