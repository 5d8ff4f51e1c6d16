//! Per-complainant discrimination tests and report assembly.
//!
//! Both pipelines walk the protected group. For complainant `i`:
//!
//! * the **control group** is the k nearest protected candidates around the
//!   complainant's own attributes (excluding `i` itself unless
//!   `include_centers` is set);
//! * the **test group** is the k nearest non-protected candidates — centered
//!   on the complainant's own attributes under `st`, or on the
//!   counterfactual attributes generated by the structural model under
//!   `cst`. Test candidates always keep their factual attribute values; only
//!   the center is synthetic.
//!
//! A case is flagged when `delta_p = p_c - p_t` strictly exceeds `tau`.

use std::fmt;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::audit::stats::{compute_delta_p, wald_interval};
use crate::data::{DatasetTable, IndividualProfile, Value};
use crate::error::{Error, Result};
use crate::scm::ScmModel;
use crate::similarity::{knn_with, DistanceSpec, Neighborhood, NeighborhoodCenter, TieBreak};

/// Which comparator construction to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Situation testing: attribute-flip comparator.
    St,
    /// Counterfactual situation testing: model-generated comparator.
    Cst,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::St => "st",
            Method::Cst => "cst",
        })
    }
}

/// Audit parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: Method,
    /// Protected column, already encoded 0/1 in the table.
    pub protected_column: String,
    /// Original value coded as 1 (for validation and reporting).
    pub protected_value: String,
    /// Neighborhood size.
    pub k: usize,
    /// Accepted deviation; a case is flagged when `delta_p > tau`.
    pub tau: f64,
    /// Count the complainant in its own control group. Forced off for `st`,
    /// which excludes the complainant-comparator pair; under `cst` the
    /// synthetic test center never carries an outcome, so the flag only
    /// affects the control side.
    #[serde(default)]
    pub include_centers: bool,
    /// Outcome value counted as the negative decision (default 0).
    #[serde(default)]
    pub negative_outcome: u8,
    /// Confidence level for an optional two-proportion interval per case.
    #[serde(default)]
    pub ci_level: Option<f64>,
    /// Which equally distant candidate wins the last neighborhood slots
    /// (default: ascending row id).
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Optional moment alignment of the generated `cst` centers (default:
    /// off, centers are used as generated).
    #[serde(default)]
    pub center_alignment: CenterAlignment,
}

/// How `cst` places the generated counterfactual center among the factual
/// candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterAlignment {
    /// Use the generated attribute values as they are.
    #[default]
    None,
    /// Standardize each generated attribute against the counterfactual
    /// population (the counterfactuals of every row) and re-express it in
    /// factual units, so a center sits at the same standardized position
    /// among the candidates as it does among the counterfactuals. This
    /// matches audit pipelines that z-score each table with its own scaler
    /// before measuring distances.
    Standardize,
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Audit("k must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.tau) {
            return Err(Error::Audit(format!("tau {} outside [-1, 1]", self.tau)));
        }
        if self.negative_outcome > 1 {
            return Err(Error::Audit("negative_outcome must be 0 or 1".into()));
        }
        if let Some(level) = self.ci_level {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::Audit(format!("ci level {level} outside (0, 1)")));
            }
        }
        Ok(())
    }

    fn effective_include_centers(&self) -> bool {
        match self.method {
            Method::St => false,
            Method::Cst => self.include_centers,
        }
    }
}

/// Execution knobs that must not change any reported number.
#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    /// Evaluate complainants on a thread pool. Results are ordered by
    /// complainant id either way, so parallel and sequential runs are
    /// byte-identical.
    pub parallel: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// The comparator recorded for a case: the nearest non-protected row (the
/// attribute-flip comparator is, in practice, that individual) or the
/// generated counterfactual attribute vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparatorCenter {
    Cp { row_id: usize },
    Mm { x: Vec<Value> },
}

/// Verdict for one complainant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub complainant_id: usize,
    pub comparator: ComparatorCenter,
    pub control: Neighborhood,
    pub test: Neighborhood,
    /// Share of negative outcomes among control members.
    pub p_c: f64,
    /// Share of negative outcomes among test members.
    pub p_t: f64,
    /// `p_c - p_t`.
    pub delta_p: f64,
    /// `delta_p > tau`.
    pub flagged: bool,
    /// Neighborhood sizes actually used (smaller than k when a pool runs
    /// short; the run proceeds on the full pool instead of failing).
    pub actual_k_control: usize,
    pub actual_k_test: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
}

/// Aggregate audit outcome in the shape of a flagged-count table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub method: Method,
    pub protected_column: String,
    pub protected_value: String,
    pub k: usize,
    pub tau: f64,
    pub include_centers: bool,
    pub negative_outcome: u8,
    pub total_complainants: usize,
    pub flagged_count: usize,
    /// `flagged_count / total_complainants`, in [0, 1].
    pub flagged_percent: f64,
    pub cases: Vec<CaseResult>,
}

struct PreparedCase {
    complainant_id: usize,
    comparator: ComparatorCenter,
    /// Control and test neighborhoods computed once at the largest k.
    control: Neighborhood,
    test: Neighborhood,
}

/// A prepared audit: neighbor lists computed once at the largest requested
/// k, reusable for every smaller k of a grid.
pub struct AuditRun<'a> {
    config: TestConfig,
    profiles: Vec<IndividualProfile>,
    prepared: Vec<PreparedCase>,
    #[allow(dead_code)]
    spec: &'a DistanceSpec,
    k_max: usize,
}

impl<'a> AuditRun<'a> {
    /// Validate inputs and compute every complainant's neighbor lists at
    /// `k_max`. For `cst` a fitted model covering the protected column is
    /// required.
    pub fn prepare(
        table: &'a DatasetTable,
        config: &TestConfig,
        spec: &'a DistanceSpec,
        model: Option<&'a ScmModel>,
        k_max: usize,
        options: &AuditOptions,
    ) -> Result<AuditRun<'a>> {
        config.validate()?;
        if k_max < config.k {
            return Err(Error::Audit(format!(
                "k_max {k_max} smaller than configured k {}",
                config.k
            )));
        }
        let model = match config.method {
            Method::St => None,
            Method::Cst => Some(
                model
                    .ok_or_else(|| Error::Audit("cst requires a fitted structural model".into()))?,
            ),
        };

        let column = table
            .column_index(&config.protected_column)
            .ok_or_else(|| Error::MissingColumn(config.protected_column.clone()))?;
        let column_schema = &table.schema()[column];
        if let Some(encoding) = &column_schema.encoding {
            if encoding.one != config.protected_value {
                return Err(Error::Audit(format!(
                    "protected value '{}' does not match the encoded value '{}' of column '{}'",
                    config.protected_value, encoding.one, config.protected_column
                )));
            }
        }
        let protected_position = table
            .protected_columns()
            .position(|(i, _)| i == column)
            .ok_or_else(|| {
                Error::Audit(format!(
                    "column '{}' does not have the protected role",
                    config.protected_column
                ))
            })?;

        let profiles = table.profiles()?;
        let protected_bit = |profile: &IndividualProfile| -> Result<bool> {
            let bit = profile.protected[protected_position].as_num();
            if bit == Some(1.0) {
                Ok(true)
            } else if bit == Some(0.0) {
                Ok(false)
            } else {
                Err(Error::Audit(format!(
                    "column '{}' is not 0/1 encoded (row {}); run the protected encoding first",
                    config.protected_column, profile.row_id
                )))
            }
        };

        let mut control_pool: Vec<&IndividualProfile> = Vec::new();
        let mut test_pool: Vec<&IndividualProfile> = Vec::new();
        for profile in &profiles {
            if protected_bit(profile)? {
                control_pool.push(profile);
            } else {
                test_pool.push(profile);
            }
        }
        if control_pool.is_empty() {
            return Err(Error::Audit(format!(
                "no complainants: no rows with {} = {}",
                config.protected_column, config.protected_value
            )));
        }
        if test_pool.is_empty() {
            return Err(Error::Audit(format!(
                "no non-protected candidates for {}",
                config.protected_column
            )));
        }

        let complainant_ids: Vec<usize> = control_pool.iter().map(|p| p.row_id).collect();
        let include_centers = config.effective_include_centers();
        let alignment = match (config.method, config.center_alignment) {
            (Method::Cst, CenterAlignment::Standardize) => Some(alignment_moments(
                table,
                model.expect("checked above"),
                &config.protected_column,
                spec,
            )?),
            _ => None,
        };

        let evaluate = |&complainant_id: &usize| -> Result<PreparedCase> {
            let profile = &profiles[complainant_id];
            let exclude: &[usize] = if include_centers {
                &[]
            } else {
                &[complainant_id]
            };

            let mut control = knn_with(
                spec,
                &profile.x,
                &control_pool,
                k_max,
                exclude,
                config.tie_break,
            )
            .map_err(|e| attach_complainant(e, complainant_id))?;
            control.center = NeighborhoodCenter::Factual {
                row_id: complainant_id,
            };

            let (comparator, test) = match config.method {
                Method::St => {
                    let mut test =
                        knn_with(spec, &profile.x, &test_pool, k_max, &[], config.tie_break)
                            .map_err(|e| attach_complainant(e, complainant_id))?;
                    test.center = NeighborhoodCenter::Factual {
                        row_id: complainant_id,
                    };
                    let nearest = test.member_ids[0];
                    (ComparatorCenter::Cp { row_id: nearest }, test)
                }
                Method::Cst => {
                    let model = model.expect("checked above");
                    let factual = model.node_values(table, complainant_id)?;
                    let adjusted = model
                        .counterfactual(&factual, &config.protected_column, 0.0)
                        .map_err(|e| attach_complainant(e, complainant_id))?;
                    // Counterfactual center in distance-spec order; attributes
                    // outside the model keep their factual values.
                    let center: Vec<Value> = spec
                        .attributes()
                        .iter()
                        .zip(&profile.x)
                        .map(
                            |(attribute, factual_value)| match adjusted.get(&attribute.name) {
                                Some(v) => {
                                    let aligned = match alignment
                                        .as_ref()
                                        .and_then(|moments| moments.get(&attribute.name))
                                    {
                                        Some(m) if m.cf_std > 0.0 => {
                                            m.factual_mean
                                                + m.factual_std * (v - m.cf_mean) / m.cf_std
                                        }
                                        _ => *v,
                                    };
                                    Value::Num(aligned)
                                }
                                None => factual_value.clone(),
                            },
                        )
                        .collect();
                    let test = knn_with(spec, &center, &test_pool, k_max, &[], config.tie_break)
                        .map_err(|e| attach_complainant(e, complainant_id))?;
                    (ComparatorCenter::Mm { x: center }, test)
                }
            };

            Ok(PreparedCase {
                complainant_id,
                comparator,
                control,
                test,
            })
        };

        let prepared = run_over(&complainant_ids, evaluate, options.parallel)?;

        Ok(AuditRun {
            config: config.clone(),
            profiles,
            prepared,
            spec,
            k_max,
        })
    }

    /// Assemble the report for one k (`k <= k_max`). Cases are ordered by
    /// complainant id.
    pub fn report(&self, k: usize) -> Result<AuditReport> {
        if k == 0 || k > self.k_max {
            return Err(Error::Audit(format!(
                "k {k} outside the prepared range 1..={}",
                self.k_max
            )));
        }
        let config = &self.config;
        let mut cases = Vec::with_capacity(self.prepared.len());
        for prepared in &self.prepared {
            let control = prepared.control.truncated(k);
            let test = prepared.test.truncated(k);
            let outcomes = |hood: &Neighborhood| -> Vec<u8> {
                hood.member_ids
                    .iter()
                    .map(|&id| self.profiles[id].y)
                    .collect()
            };
            let (p_c, p_t, delta_p) = compute_delta_p(
                &outcomes(&control),
                &outcomes(&test),
                config.negative_outcome,
            )?;
            let flagged = delta_p > config.tau;
            let (ci_low, ci_high) = match config.ci_level {
                Some(level) => {
                    let (low, high) = wald_interval(p_c, control.len(), p_t, test.len(), level);
                    (Some(low), Some(high))
                }
                None => (None, None),
            };
            cases.push(CaseResult {
                complainant_id: prepared.complainant_id,
                comparator: prepared.comparator.clone(),
                actual_k_control: control.len(),
                actual_k_test: test.len(),
                control,
                test,
                p_c,
                p_t,
                delta_p,
                flagged,
                ci_low,
                ci_high,
            });
        }
        let total_complainants = cases.len();
        let flagged_count = cases.iter().filter(|c| c.flagged).count();
        Ok(AuditReport {
            method: config.method,
            protected_column: config.protected_column.clone(),
            protected_value: config.protected_value.clone(),
            k,
            tau: config.tau,
            include_centers: config.effective_include_centers(),
            negative_outcome: config.negative_outcome,
            total_complainants,
            flagged_count,
            flagged_percent: flagged_count as f64 / total_complainants as f64,
            cases,
        })
    }
}

struct AlignmentMoments {
    factual_mean: f64,
    factual_std: f64,
    cf_mean: f64,
    cf_std: f64,
}

/// Per-attribute mean and population standard deviation of the factual
/// column and of the counterfactuals of every row under `column <- 0`.
/// Rows already at 0 map to themselves, so the counterfactual population
/// covers the whole table.
fn alignment_moments(
    table: &DatasetTable,
    model: &ScmModel,
    protected_column: &str,
    spec: &DistanceSpec,
) -> Result<std::collections::BTreeMap<String, AlignmentMoments>> {
    let names: Vec<&str> = spec
        .attributes()
        .iter()
        .filter(|a| a.kind.is_numeric() && model.equation(&a.name).is_some())
        .map(|a| a.name.as_str())
        .collect();
    if names.is_empty() {
        return Ok(Default::default());
    }
    let mut factual: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    let mut counterfactual: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for row_id in 0..table.n() {
        let values = model.node_values(table, row_id)?;
        let adjusted = model.counterfactual(&values, protected_column, 0.0)?;
        for &name in &names {
            factual.entry(name).or_default().push(values[name]);
            counterfactual.entry(name).or_default().push(adjusted[name]);
        }
    }
    let moments = |values: &[f64]| -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (mean, (ss / n).sqrt())
    };
    Ok(names
        .iter()
        .map(|&name| {
            let (factual_mean, factual_std) = moments(&factual[name]);
            let (cf_mean, cf_std) = moments(&counterfactual[name]);
            (
                name.to_string(),
                AlignmentMoments {
                    factual_mean,
                    factual_std,
                    cf_mean,
                    cf_std,
                },
            )
        })
        .collect())
}

fn attach_complainant(error: Error, complainant_id: usize) -> Error {
    match error {
        Error::EmptyCandidatePool { .. } => Error::EmptyCandidatePool {
            complainant: Some(complainant_id),
        },
        other => other,
    }
}

fn run_over<T: Send, F>(ids: &[usize], evaluate: F, parallel: bool) -> Result<Vec<T>>
where
    F: Fn(&usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<T>> = if parallel {
        ids.par_iter().map(&evaluate).collect()
    } else {
        ids.iter().map(&evaluate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<T>> = {
        let _ = parallel;
        ids.iter().map(&evaluate).collect()
    };
    results.into_iter().collect()
}

/// Situation testing with the attribute-flip comparator.
pub fn run_st(
    table: &DatasetTable,
    config: &TestConfig,
    spec: &DistanceSpec,
) -> Result<AuditReport> {
    run_st_with(table, config, spec, &AuditOptions::default())
}

pub fn run_st_with(
    table: &DatasetTable,
    config: &TestConfig,
    spec: &DistanceSpec,
    options: &AuditOptions,
) -> Result<AuditReport> {
    if config.method != Method::St {
        return Err(Error::Audit("config method is not st".into()));
    }
    AuditRun::prepare(table, config, spec, None, config.k, options)?.report(config.k)
}

/// Counterfactual situation testing with the model-generated comparator.
pub fn run_cst(
    table: &DatasetTable,
    config: &TestConfig,
    spec: &DistanceSpec,
    model: &ScmModel,
) -> Result<AuditReport> {
    run_cst_with(table, config, spec, model, &AuditOptions::default())
}

pub fn run_cst_with(
    table: &DatasetTable,
    config: &TestConfig,
    spec: &DistanceSpec,
    model: &ScmModel,
    options: &AuditOptions,
) -> Result<AuditReport> {
    if config.method != Method::Cst {
        return Err(Error::Audit("config method is not cst".into()));
    }
    AuditRun::prepare(table, config, spec, Some(model), config.k, options)?.report(config.k)
}
