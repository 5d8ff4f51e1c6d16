//! Interactive browser demo: generate an admissions-style dataset from a
//! configurable structural model, audit it with both comparator
//! constructions, and inspect individual complainants.
//!
//! Three operations are exported to JavaScript, all exchanging JSON
//! strings: [`generate`] (sample + label + fit), [`audit`] (st vs cst flag
//! counts and per-case deltas at one k), and [`inspect`] (one complainant's
//! neighborhoods and counterfactual). State lives in a thread local between
//! calls.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use situtest::audit::{
    apply_decision_rule, run_cst_with, run_st_with, AuditOptions, AuditReport, CaseResult,
    ComparatorCenter, DecisionRule, Method, TestConfig,
};
use situtest::data::DatasetTable;
use situtest::scm::{fit_scm, sample_from_scm, CausalGraph, ScmModel, StructuralEquation};
use situtest::similarity::DistanceSpec;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct GenerateParams {
    pub seed: u64,
    pub n: usize,
    /// Effect of the protected attributes on the two scores.
    pub race_ugpa: f64,
    pub race_lsat: f64,
    pub gender_ugpa: f64,
    pub gender_lsat: f64,
    pub noise_ugpa: f64,
    pub noise_lsat: f64,
    /// Admission cutoff for 0.6 * UGPA + 0.4 * LSAT.
    pub cutoff: f64,
    pub race_share: f64,
    pub gender_share: f64,
}

impl Default for GenerateParams {
    fn default() -> Self {
        // Defaults shaped like the admissions example the library's tests
        // reproduce: small gender effects, larger race effects.
        GenerateParams {
            seed: 42,
            n: 2000,
            race_ugpa: -0.22,
            race_lsat: -4.64,
            gender_ugpa: 0.13,
            gender_lsat: -0.61,
            noise_ugpa: 0.5,
            noise_lsat: 6.0,
            cutoff: 18.5,
            race_share: 0.161,
            gender_share: 0.438,
        }
    }
}

struct DemoState {
    table: DatasetTable,
    model: ScmModel,
    spec: DistanceSpec,
}

thread_local! {
    static STATE: RefCell<Option<DemoState>> = const { RefCell::new(None) };
}

fn admissions_graph() -> CausalGraph {
    CausalGraph::new(
        vec![
            ("race".into(), vec![]),
            ("gender".into(), vec![]),
            ("UGPA".into(), vec!["race".into(), "gender".into()]),
            ("LSAT".into(), vec!["race".into(), "gender".into()]),
        ],
        vec!["race".into(), "gender".into()],
    )
    .expect("static graph")
}

fn true_model(p: &GenerateParams) -> ScmModel {
    let equations = BTreeMap::from([
        (
            "UGPA".to_string(),
            StructuralEquation {
                target: "UGPA".into(),
                intercept: 3.21,
                coefficients: BTreeMap::from([
                    ("race".into(), p.race_ugpa),
                    ("gender".into(), p.gender_ugpa),
                ]),
                noise_std_dev: p.noise_ugpa,
            },
        ),
        (
            "LSAT".to_string(),
            StructuralEquation {
                target: "LSAT".into(),
                intercept: 37.8,
                coefficients: BTreeMap::from([
                    ("race".into(), p.race_lsat),
                    ("gender".into(), p.gender_lsat),
                ]),
                noise_std_dev: p.noise_lsat,
            },
        ),
    ]);
    ScmModel::from_parts(admissions_graph(), equations).expect("static model")
}

#[derive(Serialize)]
struct EquationOut {
    intercept: f64,
    race: f64,
    gender: f64,
    noise_std_dev: f64,
}

#[derive(Serialize)]
struct GenerateOut {
    n: usize,
    acceptance_rate: f64,
    race_share: f64,
    gender_share: f64,
    true_ugpa: EquationOut,
    true_lsat: EquationOut,
    fitted_ugpa: EquationOut,
    fitted_lsat: EquationOut,
    /// One point per row: [ugpa, lsat, y, race, gender].
    points: Vec<[f64; 5]>,
}

fn equation_out(model: &ScmModel, node: &str) -> EquationOut {
    let equation = &model.equations[node];
    EquationOut {
        intercept: equation.intercept,
        race: equation.coefficients["race"],
        gender: equation.coefficients["gender"],
        noise_std_dev: equation.noise_std_dev,
    }
}

fn row_point(table: &DatasetTable, row: usize) -> [f64; 5] {
    let get = |name: &str| {
        table
            .value(row, table.column_index(name).expect("column"))
            .as_num()
            .unwrap_or(f64::NAN)
    };
    [
        get("UGPA"),
        get("LSAT"),
        get("Y"),
        get("race"),
        get("gender"),
    ]
}

fn err(message: impl std::fmt::Display) -> String {
    message.to_string()
}

/// Sample a dataset from the configured structural model, label it with the
/// threshold rule, and fit the model back from the sample. Returns a JSON
/// summary with the sampled points and both parameter sets.
#[wasm_bindgen]
pub fn generate(params_json: &str) -> Result<String, JsError> {
    generate_impl(params_json).map_err(|e| JsError::new(&e))
}

fn generate_impl(params_json: &str) -> Result<String, String> {
    let params: GenerateParams = if params_json.trim().is_empty() {
        GenerateParams::default()
    } else {
        serde_json::from_str(params_json).map_err(err)?
    };
    if params.n < 50 || params.n > 50_000 {
        return Err(err("n must be between 50 and 50000"));
    }
    let truth = true_model(&params);
    let shares = BTreeMap::from([
        ("race".to_string(), params.race_share),
        ("gender".to_string(), params.gender_share),
    ]);
    let table = sample_from_scm(&truth, params.n, params.seed, &shares).map_err(err)?;
    let rule = DecisionRule {
        weights: BTreeMap::from([("UGPA".to_string(), 0.6), ("LSAT".to_string(), 0.4)]),
        cutoff: params.cutoff,
        positive_if_strictly_greater: true,
    };
    let table = apply_decision_rule(&table, &rule, "Y").map_err(err)?;
    let fitted = fit_scm(&table, &truth.graph).map_err(err)?;
    let spec = DistanceSpec::from_table(&table).map_err(err)?;

    let points: Vec<[f64; 5]> = (0..table.n()).map(|r| row_point(&table, r)).collect();
    let accepted = points.iter().filter(|p| p[2] == 1.0).count();
    let race_share = points.iter().filter(|p| p[3] == 1.0).count() as f64 / table.n() as f64;
    let gender_share = points.iter().filter(|p| p[4] == 1.0).count() as f64 / table.n() as f64;

    let out = GenerateOut {
        n: table.n(),
        acceptance_rate: accepted as f64 / table.n() as f64,
        race_share,
        gender_share,
        true_ugpa: equation_out(&truth, "UGPA"),
        true_lsat: equation_out(&truth, "LSAT"),
        fitted_ugpa: equation_out(&fitted, "UGPA"),
        fitted_lsat: equation_out(&fitted, "LSAT"),
        points,
    };
    let body = serde_json::to_string(&out).map_err(err)?;
    STATE.with(|state| {
        *state.borrow_mut() = Some(DemoState {
            table,
            model: fitted,
            spec,
        });
    });
    Ok(body)
}

#[derive(Serialize)]
struct MethodOut {
    flagged: usize,
    total: usize,
    percent: f64,
    /// Per-complainant [row_id, delta_p, flagged(0/1)].
    cases: Vec<[f64; 3]>,
}

#[derive(Serialize)]
struct AuditOut {
    protected: String,
    k: usize,
    tau: f64,
    st: MethodOut,
    cst: MethodOut,
}

fn method_out(report: &AuditReport) -> MethodOut {
    MethodOut {
        flagged: report.flagged_count,
        total: report.total_complainants,
        percent: report.flagged_percent * 100.0,
        cases: report
            .cases
            .iter()
            .map(|c| [c.complainant_id as f64, c.delta_p, c.flagged as u8 as f64])
            .collect(),
    }
}

fn config(method: Method, protected: &str, k: usize, tau: f64) -> TestConfig {
    TestConfig {
        method,
        protected_column: protected.into(),
        protected_value: "1".into(),
        k,
        tau,
        include_centers: false,
        negative_outcome: 0,
        ci_level: None,
        tie_break: Default::default(),
        center_alignment: Default::default(),
    }
}

/// Run both audits at one neighborhood size. `protected` is `race` or
/// `gender`.
#[wasm_bindgen]
pub fn audit(protected: &str, k: usize, tau: f64) -> Result<String, JsError> {
    audit_impl(protected, k, tau).map_err(|e| JsError::new(&e))
}

fn audit_impl(protected: &str, k: usize, tau: f64) -> Result<String, String> {
    STATE.with(|state| {
        let state = state.borrow();
        let state = state.as_ref().ok_or_else(|| err("call generate first"))?;
        let options = AuditOptions { parallel: false };
        let st = run_st_with(
            &state.table,
            &config(Method::St, protected, k, tau),
            &state.spec,
            &options,
        )
        .map_err(err)?;
        let cst = run_cst_with(
            &state.table,
            &config(Method::Cst, protected, k, tau),
            &state.spec,
            &state.model,
            &options,
        )
        .map_err(err)?;
        let out = AuditOut {
            protected: protected.to_string(),
            k,
            tau,
            st: method_out(&st),
            cst: method_out(&cst),
        };
        serde_json::to_string(&out).map_err(err)
    })
}

#[derive(Serialize)]
struct GroupOut {
    /// [ugpa, lsat, y] per member.
    members: Vec<[f64; 3]>,
    p_negative: f64,
}

#[derive(Serialize)]
struct InspectOut {
    row_id: usize,
    factual: [f64; 3],
    counterfactual: [f64; 2],
    control: GroupOut,
    test_st: GroupOut,
    test_cf: GroupOut,
    delta_p_st: f64,
    delta_p_cst: f64,
    flagged_st: bool,
    flagged_cst: bool,
}

fn group_out(table: &DatasetTable, case_group: &situtest::Neighborhood, p: f64) -> GroupOut {
    GroupOut {
        members: case_group
            .member_ids
            .iter()
            .map(|&id| {
                let point = row_point(table, id);
                [point[0], point[1], point[2]]
            })
            .collect(),
        p_negative: p,
    }
}

/// Detail view for one complainant: factual and counterfactual positions,
/// both test groups, and the shared control group.
#[wasm_bindgen]
pub fn inspect(protected: &str, row_id: usize, k: usize, tau: f64) -> Result<String, JsError> {
    inspect_impl(protected, row_id, k, tau).map_err(|e| JsError::new(&e))
}

fn inspect_impl(protected: &str, row_id: usize, k: usize, tau: f64) -> Result<String, String> {
    STATE.with(|state| {
        let state = state.borrow();
        let state = state.as_ref().ok_or_else(|| err("call generate first"))?;
        let options = AuditOptions { parallel: false };
        let st = run_st_with(
            &state.table,
            &config(Method::St, protected, k, tau),
            &state.spec,
            &options,
        )
        .map_err(err)?;
        let cst = run_cst_with(
            &state.table,
            &config(Method::Cst, protected, k, tau),
            &state.spec,
            &state.model,
            &options,
        )
        .map_err(err)?;
        let find = |report: &AuditReport| -> Option<CaseResult> {
            report
                .cases
                .iter()
                .find(|c| c.complainant_id == row_id)
                .cloned()
        };
        let st_case = find(&st).ok_or_else(|| err("row is not a complainant"))?;
        let cst_case = find(&cst).ok_or_else(|| err("row is not a complainant"))?;

        let factual = row_point(&state.table, row_id);
        let counterfactual = match &cst_case.comparator {
            ComparatorCenter::Mm { x } => {
                let mut ugpa = f64::NAN;
                let mut lsat = f64::NAN;
                for (attribute, value) in state.spec.attributes().iter().zip(x) {
                    match attribute.name.as_str() {
                        "UGPA" => ugpa = value.as_num().unwrap_or(f64::NAN),
                        "LSAT" => lsat = value.as_num().unwrap_or(f64::NAN),
                        _ => {}
                    }
                }
                [ugpa, lsat]
            }
            ComparatorCenter::Cp { .. } => [factual[0], factual[1]],
        };

        let out = InspectOut {
            row_id,
            factual: [factual[0], factual[1], factual[2]],
            counterfactual,
            control: group_out(&state.table, &st_case.control, st_case.p_c),
            test_st: group_out(&state.table, &st_case.test, st_case.p_t),
            test_cf: group_out(&state.table, &cst_case.test, cst_case.p_t),
            delta_p_st: st_case.delta_p,
            delta_p_cst: cst_case.delta_p,
            flagged_st: st_case.flagged,
            flagged_cst: cst_case.flagged,
        };
        serde_json::to_string(&out).map_err(err)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_audit_inspect_round_trip() {
        let summary = generate_impl("").unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["n"], 2000);
        let fitted = parsed["fitted_ugpa"]["race"].as_f64().unwrap();
        assert!((fitted - -0.22).abs() < 0.1);

        let audit_json = audit_impl("race", 15, 0.0).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&audit_json).unwrap();
        let st_total = parsed["st"]["total"].as_u64().unwrap();
        assert!(st_total > 200);
        assert_eq!(parsed["cst"]["total"], parsed["st"]["total"]);

        let id = parsed["st"]["cases"][0][0].as_f64().unwrap() as usize;
        let detail = inspect_impl("race", id, 15, 0.0).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&detail).unwrap();
        assert_eq!(parsed["control"]["members"].as_array().unwrap().len(), 15);
        assert!(parsed["counterfactual"][0].as_f64().unwrap().is_finite());
    }

    #[test]
    fn audit_without_state_fails_cleanly() {
        // State is thread local; a fresh thread has none.
        std::thread::spawn(|| {
            assert!(audit_impl("race", 5, 0.0).is_err());
        })
        .join()
        .unwrap();
    }

    #[test]
    fn custom_parameters_are_respected() {
        let params = r#"{"seed": 7, "n": 400, "race_ugpa": 0.0, "race_lsat": 0.0, "cutoff": 17.0}"#;
        let summary = generate_impl(params).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["n"], 400);
        assert_eq!(parsed["true_ugpa"]["race"], 0.0);
        let rate = parsed["acceptance_rate"].as_f64().unwrap();
        assert!(rate > 0.0 && rate < 1.0);
    }
}
