//! Config-driven command front end.
//!
//! Everything that affects results lives in a TOML run config; command-line
//! flags only pick the command and extra artifacts. Reruns of the same
//! config produce byte-identical output files, each of which embeds the
//! config hash (and model hash where one is involved).

mod provenance;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{
    apply_decision_rule, AuditOptions, AuditReport, AuditRun, CenterAlignment, DecisionRule,
    Method, TestConfig,
};
use crate::data::{
    encode_protected, load_csv, write_csv, AttributeRole, DatasetTable, MissingValuePolicy,
    SchemaConfig,
};
use crate::error::{Error, Result};
use crate::scm::{fit_scm, DagConfig, ScmModel};
use crate::similarity::{ContinuousScale, DistanceSpec, TieBreak};

pub use provenance::{sha256_hex, Provenance};

fn default_true() -> bool {
    true
}

fn default_outcome_name() -> String {
    "Y".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingConfig {
    #[default]
    Reject,
    Abort,
}

impl From<MissingConfig> for MissingValuePolicy {
    fn from(value: MissingConfig) -> Self {
        match value {
            MissingConfig::Reject => MissingValuePolicy::RejectRow,
            MissingConfig::Abort => MissingValuePolicy::Abort,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtectedSelection {
    /// Column whose claims are audited.
    pub column: String,
    /// Original value coded as 1 (the complainant group).
    pub value: String,
}

/// Decision-rule block of the run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRuleConfig {
    pub weights: BTreeMap<String, f64>,
    pub cutoff: f64,
    #[serde(default = "default_true")]
    pub strict: bool,
    /// Name for a newly created outcome column.
    #[serde(default = "default_outcome_name")]
    pub outcome: String,
}

impl DecisionRuleConfig {
    fn rule(&self) -> DecisionRule {
        DecisionRule {
            weights: self.weights.clone(),
            cutoff: self.cutoff,
            positive_if_strictly_greater: self.strict,
        }
    }
}

/// One reproducible run: dataset, schema, model inputs, audit parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    /// DAG config; required by `fit` and by `cst` audits (unless `model`
    /// points at an already-fitted export).
    #[serde(default)]
    pub dag: Option<PathBuf>,
    /// Fitted-model JSON (as written by `fit`); `cst` audits use it as-is
    /// instead of refitting from the DAG.
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub method: Method,
    /// Neighborhood sizes to audit, e.g. [25, 50, 100, 200, 500].
    pub k: Vec<usize>,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub missing: MissingConfig,
    #[serde(default)]
    pub include_centers: bool,
    #[serde(default)]
    pub negative_outcome: u8,
    #[serde(default)]
    pub ci_level: Option<f64>,
    /// Normalization divisor for numeric attribute distances: `range`
    /// (default) or `stddev`.
    #[serde(default)]
    pub distance_scale: ContinuousScale,
    /// Neighborhood tie rule: `ascending` (default) or `descending` row id.
    #[serde(default)]
    pub tie_break: TieBreak,
    /// `cst` center placement: `none` (default) or `standardize`.
    #[serde(default)]
    pub center_alignment: CenterAlignment,
    pub protected: ProtectedSelection,
    #[serde(default)]
    pub decision_rule: Option<DecisionRuleConfig>,
}

/// A parsed run config plus the raw bytes it was read from (hashed into
/// every output).
pub struct LoadedConfig {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| Error::Config(format!("config is not utf-8: {e}")))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let loaded = LoadedConfig {
            config,
            bytes,
            base_dir,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Paths in the config are resolved relative to the config file.
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.resolve(&self.config.dataset)
    }

    pub fn schema_path(&self) -> PathBuf {
        self.resolve(&self.config.schema)
    }

    pub fn dag_path(&self) -> Option<PathBuf> {
        self.config.dag.as_ref().map(|p| self.resolve(p))
    }

    pub fn model_path(&self) -> Option<PathBuf> {
        self.config.model.as_ref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        if c.k.is_empty() {
            return Err(Error::Config("k list must not be empty".into()));
        }
        if c.k.contains(&0) {
            return Err(Error::Config("k values must be positive".into()));
        }
        for path in [
            Some(self.dataset_path()),
            Some(self.schema_path()),
            self.dag_path(),
            self.model_path(),
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "referenced path missing: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Table ready for fitting and auditing: loaded, protected columns encoded,
/// decision rule applied when configured.
pub struct PreparedData {
    pub table: DatasetTable,
    pub rejected_rows: usize,
    pub notes: Vec<String>,
}

pub fn prepare_data(loaded: &LoadedConfig) -> Result<PreparedData> {
    let config = &loaded.config;
    let schema_config = SchemaConfig::from_path(loaded.schema_path())?;

    let audited = schema_config
        .columns
        .iter()
        .find(|c| c.name == config.protected.column)
        .ok_or_else(|| {
            Error::Config(format!(
                "protected column '{}' not in schema",
                config.protected.column
            ))
        })?;
    if audited.role != AttributeRole::Protected {
        return Err(Error::Config(format!(
            "column '{}' is not declared protected",
            config.protected.column
        )));
    }
    if let Some(coded_one) = &audited.coded_one {
        if coded_one != &config.protected.value {
            return Err(Error::Config(format!(
                "protected value '{}' conflicts with schema coded_one '{}'",
                config.protected.value, coded_one
            )));
        }
    }

    let mut notes = Vec::new();
    let outcome = load_csv(loaded.dataset_path(), &schema_config, config.missing.into())?;
    let rejected_rows = outcome.rejected_rows.len();
    if rejected_rows > 0 {
        notes.push(format!("rejected {rejected_rows} rows with missing values"));
    }
    let mut table = outcome.table;

    // Encode every column that declares a coded_one (protected columns for
    // the audit, but also binary categorical regressors the structural
    // model needs as 0/1), plus the audited column itself.
    let mut encodings: Vec<(String, String)> = Vec::new();
    for column in &schema_config.columns {
        if let Some(one) = &column.coded_one {
            encodings.push((column.name.clone(), one.clone()));
        } else if column.name == config.protected.column {
            encodings.push((column.name.clone(), config.protected.value.clone()));
        }
    }
    for (column, one) in &encodings {
        table = encode_protected(&table, column, one)?;
    }

    if let Some(rule_config) = &config.decision_rule {
        if table.outcome_index().is_some() {
            notes.push("replaced existing outcome column with decision-rule labels".into());
        }
        table = apply_decision_rule(&table, &rule_config.rule(), &rule_config.outcome)?;
    }

    Ok(PreparedData {
        table,
        rejected_rows,
        notes,
    })
}

fn fit_model(loaded: &LoadedConfig, table: &DatasetTable) -> Result<ScmModel> {
    let dag_path = loaded
        .dag_path()
        .ok_or_else(|| Error::Config("this command needs a dag path in the config".into()))?;
    let graph = DagConfig::from_path(dag_path)?;
    fit_scm(table, &graph)
}

/// Read a fitted-model export: either the `fit` output (`{provenance,
/// model}`) or a bare model object. Returns the model and the SHA-256 of
/// the file bytes.
fn load_model_file(path: &Path) -> Result<(ScmModel, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("model file {}: {e}", path.display())))?;
    let model_value = value.get("model").cloned().unwrap_or(value);
    let model: ScmModel = serde_json::from_value(model_value)
        .map_err(|e| Error::Config(format!("model file {}: {e}", path.display())))?;
    Ok((model, sha256_hex(&bytes)))
}

/// Tracks files written by a command so partial outputs can be removed when
/// a later step fails.
struct OutputTracker {
    written: Vec<PathBuf>,
}

impl OutputTracker {
    fn new() -> Self {
        OutputTracker {
            written: Vec::new(),
        }
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(bytes).map_err(|e| Error::io(path, e))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    fn discard_all(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }
}

fn model_json_and_hash(model: &ScmModel) -> Result<(String, String)> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| Error::Data(format!("model serialization: {e}")))?;
    let hash = sha256_hex(json.as_bytes());
    Ok((json, hash))
}

fn write_model(
    tracker: &mut OutputTracker,
    dir: &Path,
    model: &ScmModel,
    provenance: &Provenance,
) -> Result<String> {
    let (json, hash) = model_json_and_hash(model)?;
    let mut with_provenance = provenance.clone();
    with_provenance.model_sha256 = Some(hash.clone());
    let body = format!(
        "{{\n\"provenance\": {},\n\"model\": {}\n}}\n",
        serde_json::to_string_pretty(&with_provenance).unwrap(),
        json
    );
    tracker.write(&dir.join("model.json"), body.as_bytes())?;
    Ok(hash)
}

/// `fit`: estimate the structural equations and export them.
pub fn cmd_fit(loaded: &LoadedConfig, out: &mut impl std::io::Write) -> Result<()> {
    let data = prepare_data(loaded)?;
    for note in &data.notes {
        let _ = writeln!(out, "note: {note}");
    }
    let model = fit_model(loaded, &data.table)?;

    let provenance = Provenance::new(&loaded.bytes, loaded.config.seed);
    let mut tracker = OutputTracker::new();
    let dir = loaded.output_dir();
    let result = write_model(&mut tracker, &dir, &model, &provenance);
    if result.is_err() {
        tracker.discard_all();
    }
    result?;

    for (target, equation) in &model.equations {
        let coefficients: Vec<String> = equation
            .coefficients
            .iter()
            .map(|(p, c)| format!("{c} * {p}"))
            .collect();
        let _ = writeln!(
            out,
            "{target} = {} + {} + noise(std {})",
            equation.intercept,
            coefficients.join(" + "),
            equation.noise_std_dev
        );
    }
    let _ = writeln!(out, "wrote {}", dir.join("model.json").display());
    Ok(())
}

/// `label`: apply the decision rule and write the labeled dataset.
pub fn cmd_label(loaded: &LoadedConfig, out: &mut impl std::io::Write) -> Result<()> {
    if loaded.config.decision_rule.is_none() {
        return Err(Error::Config("label needs a decision_rule block".into()));
    }
    let data = prepare_data(loaded)?;
    for note in &data.notes {
        let _ = writeln!(out, "note: {note}");
    }
    let outcome_idx = data
        .table
        .outcome_index()
        .expect("decision rule guarantees an outcome column");
    let admitted = data
        .table
        .rows()
        .iter()
        .filter(|row| row[outcome_idx].as_num() == Some(1.0))
        .count();
    let acceptance_rate = admitted as f64 / data.table.n() as f64;

    let provenance = Provenance::new(&loaded.bytes, loaded.config.seed);
    let mut csv_bytes = Vec::new();
    writeln!(&mut csv_bytes, "{}", provenance.csv_comment())
        .map_err(|e| Error::io("labeled.csv", e))?;
    write_csv(&mut csv_bytes, &data.table)?;

    let mut tracker = OutputTracker::new();
    let path = loaded.output_dir().join("labeled.csv");
    if let Err(e) = tracker.write(&path, &csv_bytes) {
        tracker.discard_all();
        return Err(e);
    }

    let _ = writeln!(
        out,
        "labeled {} rows, acceptance rate {acceptance_rate}",
        data.table.n()
    );
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

/// Flags for `audit` that cannot change any reported number: extra
/// artifacts and the execution mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuditFlags {
    /// Also write per-case neighborhood member dumps.
    pub dump_neighborhoods: bool,
    /// Evaluate complainants one by one instead of on the thread pool;
    /// outputs are byte-identical either way.
    pub sequential: bool,
}

/// `audit`: run the configured method over the k grid and write per-k
/// reports plus a summary table.
pub fn cmd_audit(
    loaded: &LoadedConfig,
    flags: AuditFlags,
    out: &mut impl std::io::Write,
) -> Result<()> {
    let mut tracker = OutputTracker::new();
    let result = audit_inner(loaded, flags, &mut tracker, out);
    if result.is_err() {
        tracker.discard_all();
    }
    result
}

fn audit_inner(
    loaded: &LoadedConfig,
    flags: AuditFlags,
    tracker: &mut OutputTracker,
    out: &mut impl std::io::Write,
) -> Result<()> {
    let config = &loaded.config;
    let data = prepare_data(loaded)?;
    for note in &data.notes {
        let _ = writeln!(out, "note: {note}");
    }
    let table = &data.table;
    if table.outcome_index().is_none() {
        return Err(Error::Config(
            "no outcome column: declare one in the schema or add a decision_rule".into(),
        ));
    }

    let spec = DistanceSpec::from_table_scaled(table, config.distance_scale)?;
    for name in &spec.zero_range {
        let _ = writeln!(out, "warning: attribute '{name}' has zero observed range");
    }

    let mut provenance = Provenance::new(&loaded.bytes, config.seed);
    let dir = loaded.output_dir();

    let model = match config.method {
        Method::St => None,
        Method::Cst => match loaded.model_path() {
            Some(path) => {
                let (model, hash) = load_model_file(&path)?;
                provenance.model_sha256 = Some(hash);
                Some(model)
            }
            None => {
                let model = fit_model(loaded, table)?;
                let hash = write_model(tracker, &dir, &model, &provenance)?;
                provenance.model_sha256 = Some(hash);
                Some(model)
            }
        },
    };

    let test_config = TestConfig {
        method: config.method,
        protected_column: config.protected.column.clone(),
        protected_value: config.protected.value.clone(),
        k: config.k[0],
        tau: config.tau,
        include_centers: config.include_centers,
        negative_outcome: config.negative_outcome,
        ci_level: config.ci_level,
        tie_break: config.tie_break,
        center_alignment: config.center_alignment,
    };
    let options = AuditOptions {
        parallel: !flags.sequential,
    };
    let k_max = *config.k.iter().max().expect("validated non-empty");
    let run = AuditRun::prepare(table, &test_config, &spec, model.as_ref(), k_max, &options)?;

    let mut summary = String::new();
    summary.push_str(&provenance.csv_comment());
    summary.push('\n');
    summary.push_str(
        "method,protected_column,protected_value,k,total_complainants,flagged_count,flagged_percent\n",
    );

    for &k in &config.k {
        let report = run.report(k)?;
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            report.method,
            report.protected_column,
            report.protected_value,
            report.k,
            report.total_complainants,
            report.flagged_count,
            report.flagged_percent * 100.0
        ));
        let _ = writeln!(
            out,
            "{} {} k={k}: flagged {} of {} ({:.2}%)",
            report.method,
            report.protected_column,
            report.flagged_count,
            report.total_complainants,
            report.flagged_percent * 100.0
        );

        let case_body = format!(
            "{{\n\"provenance\": {},\n\"report\": {}\n}}\n",
            serde_json::to_string_pretty(&provenance).unwrap(),
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Data(format!("report serialization: {e}")))?
        );
        let stem = format!("{}_{}", config.method, config.protected.column);
        tracker.write(
            &dir.join(format!("cases_{stem}_k{k}.json")),
            case_body.as_bytes(),
        )?;

        if flags.dump_neighborhoods {
            let dump = neighborhood_dump(table, &report, &provenance)?;
            tracker.write(
                &dir.join(format!("neighborhoods_{stem}_k{k}.csv")),
                dump.as_bytes(),
            )?;
        }
    }

    let stem = format!("{}_{}", config.method, config.protected.column);
    tracker.write(&dir.join(format!("summary_{stem}.csv")), summary.as_bytes())?;
    let _ = writeln!(
        out,
        "wrote {}",
        dir.join(format!("summary_{stem}.csv")).display()
    );
    Ok(())
}

/// Tidy per-member CSV of every case's neighborhoods, one row per group
/// member, for external box plotting. Group labels: `ctr` for the control
/// group, `tst-st` / `tst-cf` for the test group depending on the method.
fn neighborhood_dump(
    table: &DatasetTable,
    report: &AuditReport,
    provenance: &Provenance,
) -> Result<String> {
    let columns: Vec<(usize, String)> = table
        .non_protected_columns()
        .map(|(i, c)| (i, c.name.clone()))
        .collect();
    let outcome = table
        .outcome_index()
        .ok_or_else(|| Error::Data("dump needs an outcome column".into()))?;

    let mut body = String::new();
    body.push_str(&provenance.csv_comment());
    body.push('\n');
    body.push_str("complainant_id,group,member_id");
    for (_, name) in &columns {
        body.push(',');
        body.push_str(name);
    }
    body.push_str(",outcome\n");

    let test_label = match report.method {
        Method::St => "tst-st",
        Method::Cst => "tst-cf",
    };
    for case in &report.cases {
        for (label, hood) in [("ctr", &case.control), (test_label, &case.test)] {
            for &member in &hood.member_ids {
                body.push_str(&format!("{},{label},{member}", case.complainant_id));
                for (idx, _) in &columns {
                    body.push(',');
                    body.push_str(&table.value(member, *idx).render());
                }
                body.push_str(&format!(",{}\n", table.value(member, outcome).render()));
            }
        }
    }
    Ok(body)
}
