//! Protected-blind Gower distance and exact k-nearest-neighbor search.
//!
//! The distance averages per-attribute distances over the non-protected
//! attributes only: range-normalized Manhattan for numeric kinds, overlap
//! (0/1 mismatch) for categorical kinds. Search is an exact linear scan —
//! the pools here are tens of thousands of rows with a handful of
//! attributes, and exactness is part of the contract.

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, DatasetTable, IndividualProfile, Value};
use crate::error::{Error, Result};

/// Divisor used by the per-attribute normalized Manhattan distance.
///
/// `Range` is the default: `|a - b| / (max - min)` with the observed range,
/// which bounds in-range per-attribute distances by 1. `StdDev` divides by
/// the column's (population) standard deviation instead; some existing
/// audit pipelines standardize attributes before measuring distance, and
/// this reproduces their neighbor ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousScale {
    #[default]
    Range,
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceAttribute {
    pub name: String,
    pub kind: AttributeKind,
    /// Observed (min, max); `None` for categorical attributes.
    pub range: Option<(f64, f64)>,
    /// Normalization divisor for numeric kinds (range width or std dev).
    pub scale: Option<f64>,
}

/// Distance configuration over the non-protected attributes, in schema
/// order. Protected and outcome columns never enter the distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSpec {
    attributes: Vec<DistanceAttribute>,
    /// Numeric attributes whose normalization divisor is zero; their
    /// per-attribute distance is defined as 0 and callers should surface a
    /// warning.
    pub zero_range: Vec<String>,
}

impl DistanceSpec {
    /// Spec with the default range normalization.
    pub fn from_table(table: &DatasetTable) -> Result<Self> {
        Self::from_table_scaled(table, ContinuousScale::Range)
    }

    pub fn from_table_scaled(table: &DatasetTable, scale: ContinuousScale) -> Result<Self> {
        let mut attributes = Vec::new();
        let mut zero_range = Vec::new();
        for (index, column) in table.non_protected_columns() {
            let range = column.range();
            let divisor = if column.kind.is_numeric() {
                let (lo, hi) = match range {
                    Some((lo, hi)) if lo.is_finite() && hi >= lo => (lo, hi),
                    _ => {
                        return Err(Error::Distance(format!(
                            "attribute '{}' lacks a finite observed range",
                            column.name
                        )))
                    }
                };
                let divisor = match scale {
                    ContinuousScale::Range => hi - lo,
                    ContinuousScale::StdDev => population_std(table, index),
                };
                if divisor == 0.0 {
                    zero_range.push(column.name.clone());
                }
                Some(divisor)
            } else {
                None
            };
            attributes.push(DistanceAttribute {
                name: column.name.clone(),
                kind: column.kind,
                range,
                scale: divisor,
            });
        }
        if attributes.is_empty() {
            return Err(Error::Distance("no non-protected attributes".into()));
        }
        Ok(DistanceSpec {
            attributes,
            zero_range,
        })
    }

    /// Build a spec from explicit attribute descriptions; a missing `scale`
    /// falls back to the range width.
    pub fn from_attributes(attributes: Vec<DistanceAttribute>) -> DistanceSpec {
        let attributes: Vec<DistanceAttribute> = attributes
            .into_iter()
            .map(|mut a| {
                if a.scale.is_none() {
                    a.scale = a.range.map(|(lo, hi)| hi - lo);
                }
                a
            })
            .collect();
        let zero_range = attributes
            .iter()
            .filter(|a| a.kind.is_numeric() && a.scale == Some(0.0))
            .map(|a| a.name.clone())
            .collect();
        DistanceSpec {
            attributes,
            zero_range,
        }
    }

    pub fn attributes(&self) -> &[DistanceAttribute] {
        &self.attributes
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }
}

fn population_std(table: &DatasetTable, column: usize) -> f64 {
    let n = table.n() as f64;
    let mut mean = 0.0;
    for row in table.rows() {
        mean += row[column].as_num().unwrap_or(0.0);
    }
    mean /= n;
    let mut ss = 0.0;
    for row in table.rows() {
        let v = row[column].as_num().unwrap_or(0.0) - mean;
        ss += v * v;
    }
    (ss / n).sqrt()
}

/// Gower distance between two attribute vectors conforming to `spec`.
///
/// `(sum_i d_i) / |X|` with `d_i = |a - b| / (max - min)` for numeric kinds
/// and `d_i = [a != b]` for categorical kinds. Symmetric; 0 on identical
/// vectors; within `[0, 1]` when both vectors lie inside the observed
/// ranges. Out-of-range inputs (synthetic counterfactual centers can exceed
/// the observed maximum) are deliberately not clamped, so a per-attribute
/// distance may exceed 1 — clamping would distort neighbor ordering.
pub fn gower(spec: &DistanceSpec, x1: &[Value], x2: &[Value]) -> Result<f64> {
    if x1.len() != spec.attributes.len() || x2.len() != spec.attributes.len() {
        return Err(Error::Distance(format!(
            "arity mismatch: vectors of {} and {} for {} attributes",
            x1.len(),
            x2.len(),
            spec.attributes.len()
        )));
    }
    let mut sum = 0.0;
    for ((attribute, a), b) in spec.attributes.iter().zip(x1).zip(x2) {
        sum += per_attribute(attribute, a, b)?;
    }
    Ok(sum / spec.attributes.len() as f64)
}

fn per_attribute(attribute: &DistanceAttribute, a: &Value, b: &Value) -> Result<f64> {
    if attribute.kind.is_numeric() {
        let (a, b) = match (a.as_num(), b.as_num()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Distance(format!(
                    "attribute '{}' expects numeric values",
                    attribute.name
                )))
            }
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Distance(format!(
                "attribute '{}' has a non-finite value",
                attribute.name
            )));
        }
        let scale = attribute.scale.unwrap_or(0.0);
        if scale == 0.0 {
            // Constant column: carries no dissimilarity.
            return Ok(0.0);
        }
        Ok((a - b).abs() / scale)
    } else {
        Ok(if a == b { 0.0 } else { 1.0 })
    }
}

/// How a neighborhood was centered.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodCenter {
    /// Centered on a real row.
    Factual { row_id: usize },
    /// Centered on a generated attribute vector.
    Synthetic { x: Vec<Value> },
}

/// Result of a k-nearest-neighbor query: member row ids with their
/// distances, sorted by ascending distance then ascending row id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighborhood {
    pub center: NeighborhoodCenter,
    pub member_ids: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    /// First `k` members (the whole neighborhood if it is smaller).
    pub fn truncated(&self, k: usize) -> Neighborhood {
        let k = k.min(self.member_ids.len());
        Neighborhood {
            center: self.center.clone(),
            member_ids: self.member_ids[..k].to_vec(),
            distances: self.distances[..k].to_vec(),
        }
    }
}

/// Which of two equally distant candidates wins the last neighborhood
/// slots. Both orders are deterministic; ascending row id is the default.
/// Descending exists to reproduce audits whose selection kept later rows on
/// ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Ascending,
    Descending,
}

/// The `min(k, pool)` candidates closest to `center`, ties broken by
/// ascending row id. Deterministic: equal inputs give equal neighborhoods
/// regardless of candidate order.
pub fn knn(
    spec: &DistanceSpec,
    center: &[Value],
    candidates: &[&IndividualProfile],
    k: usize,
    exclude: &[usize],
) -> Result<Neighborhood> {
    knn_with(spec, center, candidates, k, exclude, TieBreak::Ascending)
}

/// [`knn`] with an explicit tie rule deciding which tied candidates make
/// the cut. Members are reported in selection order (ascending distance,
/// ties per rule).
pub fn knn_with(
    spec: &DistanceSpec,
    center: &[Value],
    candidates: &[&IndividualProfile],
    k: usize,
    exclude: &[usize],
    tie_break: TieBreak,
) -> Result<Neighborhood> {
    if k == 0 {
        return Err(Error::Distance("k must be at least 1".into()));
    }
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        if exclude.contains(&candidate.row_id) {
            continue;
        }
        scored.push((gower(spec, center, &candidate.x)?, candidate.row_id));
    }
    if scored.is_empty() {
        return Err(Error::EmptyCandidatePool { complainant: None });
    }

    let by_selection_order = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.total_cmp(&b.0).then_with(|| match tie_break {
            TieBreak::Ascending => a.1.cmp(&b.1),
            TieBreak::Descending => b.1.cmp(&a.1),
        })
    };
    let keep = k.min(scored.len());
    if keep < scored.len() {
        scored.select_nth_unstable_by(keep - 1, by_selection_order);
        scored.truncate(keep);
    }
    // Members stay in selection order so that a truncated neighborhood
    // equals the one a smaller k would have selected.
    scored.sort_unstable_by(by_selection_order);

    Ok(Neighborhood {
        center: NeighborhoodCenter::Synthetic { x: center.to_vec() },
        member_ids: scored.iter().map(|(_, id)| *id).collect(),
        distances: scored.iter().map(|(d, _)| *d).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttributeRole, AttributeSchema, DatasetTable};

    fn ugpa_lsat_spec() -> DistanceSpec {
        // UGPA over [0, 4], LSAT over [0, 48].
        DistanceSpec::from_attributes(vec![
            DistanceAttribute {
                name: "UGPA".into(),
                kind: AttributeKind::Continuous,
                range: Some((0.0, 4.0)),
                scale: None,
            },
            DistanceAttribute {
                name: "LSAT".into(),
                kind: AttributeKind::Continuous,
                range: Some((0.0, 48.0)),
                scale: None,
            },
        ])
    }

    fn profile(row_id: usize, x: Vec<Value>, y: u8) -> IndividualProfile {
        IndividualProfile {
            row_id,
            x,
            protected: vec![Value::Num(1.0)],
            y,
        }
    }

    #[test]
    fn identical_vectors_have_distance_zero() {
        let spec = ugpa_lsat_spec();
        let x = vec![Value::Num(3.3), Value::Num(41.0)];
        assert_eq!(gower(&spec, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn one_differing_categorical_of_two_is_half() {
        let spec = DistanceSpec::from_attributes(vec![
            DistanceAttribute {
                name: "a".into(),
                kind: AttributeKind::Categorical,
                range: None,
                scale: None,
            },
            DistanceAttribute {
                name: "b".into(),
                kind: AttributeKind::Categorical,
                range: None,
                scale: None,
            },
        ]);
        let x1 = vec![Value::Cat("p".into()), Value::Cat("s".into())];
        let x2 = vec![Value::Cat("q".into()), Value::Cat("s".into())];
        assert_eq!(gower(&spec, &x1, &x2).unwrap(), 0.5);
    }

    #[test]
    fn hand_evaluated_normalized_manhattan() {
        // |4-2|/4 = 0.5 and |48-24|/48 = 0.5, mean 0.5.
        let spec = ugpa_lsat_spec();
        let x1 = vec![Value::Num(4.0), Value::Num(48.0)];
        let x2 = vec![Value::Num(2.0), Value::Num(24.0)];
        assert_eq!(gower(&spec, &x1, &x2).unwrap(), 0.5);
    }

    #[test]
    fn arity_mismatch_rejected() {
        let spec = ugpa_lsat_spec();
        let x1 = vec![Value::Num(1.0)];
        let x2 = vec![Value::Num(1.0), Value::Num(2.0)];
        assert!(gower(&spec, &x1, &x2).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let spec = ugpa_lsat_spec();
        let x1 = vec![Value::Num(f64::NAN), Value::Num(2.0)];
        let x2 = vec![Value::Num(1.0), Value::Num(2.0)];
        assert!(gower(&spec, &x1, &x2).is_err());
    }

    #[test]
    fn out_of_range_center_may_exceed_one_per_attribute() {
        let spec = ugpa_lsat_spec();
        let synthetic = vec![Value::Num(8.0), Value::Num(0.0)];
        let candidate = vec![Value::Num(0.0), Value::Num(0.0)];
        // |8-0|/4 = 2.0 on the first attribute; not clamped.
        assert_eq!(gower(&spec, &synthetic, &candidate).unwrap(), 1.0);
    }

    #[test]
    fn zero_range_attribute_contributes_nothing() {
        let schema = vec![
            AttributeSchema::new("a", AttributeKind::Categorical, AttributeRole::Protected),
            AttributeSchema::new("x", AttributeKind::Continuous, AttributeRole::NonProtected),
            AttributeSchema::new("c", AttributeKind::Continuous, AttributeRole::NonProtected),
        ];
        let rows = vec![
            vec![Value::Cat("p".into()), Value::Num(1.0), Value::Num(7.0)],
            vec![Value::Cat("q".into()), Value::Num(3.0), Value::Num(7.0)],
        ];
        let table = DatasetTable::new(schema, rows).unwrap();
        let spec = DistanceSpec::from_table(&table).unwrap();
        assert_eq!(spec.zero_range, vec!["c".to_string()]);
        let d = gower(
            &spec,
            &[Value::Num(1.0), Value::Num(7.0)],
            &[Value::Num(3.0), Value::Num(7.0)],
        )
        .unwrap();
        assert_eq!(d, 0.5); // (|1-3|/2 + 0) / 2
    }

    #[test]
    fn stddev_scale_divides_by_population_sigma() {
        let schema = vec![
            AttributeSchema::new("a", AttributeKind::Categorical, AttributeRole::Protected),
            AttributeSchema::new("x", AttributeKind::Continuous, AttributeRole::NonProtected),
        ];
        let rows = vec![
            vec![Value::Cat("p".into()), Value::Num(2.0)],
            vec![Value::Cat("q".into()), Value::Num(4.0)],
            vec![Value::Cat("p".into()), Value::Num(6.0)],
        ];
        let table = DatasetTable::new(schema, rows).unwrap();
        let spec = DistanceSpec::from_table_scaled(&table, ContinuousScale::StdDev).unwrap();
        // mean 4, population variance (4+0+4)/3, sigma = sqrt(8/3)
        let sigma = (8.0_f64 / 3.0).sqrt();
        assert_eq!(spec.attributes()[0].scale, Some(sigma));
        let d = gower(&spec, &[Value::Num(2.0)], &[Value::Num(6.0)]).unwrap();
        assert_eq!(d, 4.0 / sigma);
        // Range scale on the same table divides by 4 instead.
        let ranged = DistanceSpec::from_table(&table).unwrap();
        let d = gower(&ranged, &[Value::Num(2.0)], &[Value::Num(6.0)]).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn descending_ties_select_later_rows_but_keep_sorted_distances() {
        let spec = ugpa_lsat_spec();
        let pool = [
            profile(1, vec![Value::Num(2.0), Value::Num(20.0)], 0),
            profile(5, vec![Value::Num(2.0), Value::Num(20.0)], 0),
            profile(9, vec![Value::Num(2.0), Value::Num(20.0)], 0),
        ];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let center = vec![Value::Num(3.0), Value::Num(30.0)];
        let hood = knn_with(&spec, &center, &refs, 2, &[], TieBreak::Descending).unwrap();
        assert_eq!(hood.member_ids, vec![9, 5]);
        // Monotone in k under the same rule.
        let bigger = knn_with(&spec, &center, &refs, 3, &[], TieBreak::Descending).unwrap();
        assert_eq!(bigger.member_ids[..2], hood.member_ids[..]);
    }

    #[test]
    fn knn_finds_exact_match_first() {
        let spec = ugpa_lsat_spec();
        let pool = [
            profile(0, vec![Value::Num(3.0), Value::Num(30.0)], 1),
            profile(1, vec![Value::Num(1.0), Value::Num(10.0)], 0),
        ];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let hood = knn(&spec, &pool[0].x, &refs, 1, &[]).unwrap();
        assert_eq!(hood.member_ids, vec![0]);
        assert_eq!(hood.distances, vec![0.0]);
    }

    #[test]
    fn knn_matches_brute_force_on_hand_placed_candidates() {
        // 1-D candidates; range [0, 10].
        let spec = DistanceSpec::from_attributes(vec![DistanceAttribute {
            name: "v".into(),
            kind: AttributeKind::Continuous,
            range: Some((0.0, 10.0)),
            scale: None,
        }]);
        let positions = [7.0, 2.0, 5.5, 4.9, 9.9];
        let pool: Vec<IndividualProfile> = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| profile(i, vec![Value::Num(p)], 0))
            .collect();
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let center = vec![Value::Num(5.0)];
        let hood = knn(&spec, &center, &refs, 3, &[]).unwrap();
        // Brute force: sort all candidates by |p - 5| / 10, then id.
        let mut all: Vec<(f64, usize)> = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| ((p - 5.0_f64).abs() / 10.0, i))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let expected: Vec<usize> = all[..3].iter().map(|(_, i)| *i).collect();
        assert_eq!(hood.member_ids, expected);
        assert_eq!(hood.member_ids, vec![3, 2, 0]);
    }

    #[test]
    fn ties_break_by_ascending_row_id() {
        let spec = ugpa_lsat_spec();
        let pool = [
            profile(9, vec![Value::Num(2.0), Value::Num(20.0)], 0),
            profile(4, vec![Value::Num(2.0), Value::Num(20.0)], 0),
        ];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let hood = knn(&spec, &[Value::Num(3.0), Value::Num(30.0)], &refs, 1, &[]).unwrap();
        assert_eq!(hood.member_ids, vec![4]);
    }

    #[test]
    fn exclusion_empties_the_pool() {
        let spec = ugpa_lsat_spec();
        let pool = [profile(0, vec![Value::Num(1.0), Value::Num(1.0)], 0)];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let result = knn(&spec, &pool[0].x, &refs, 1, &[0]);
        assert!(matches!(result, Err(Error::EmptyCandidatePool { .. })));
    }

    #[test]
    fn shortfall_returns_entire_pool() {
        let spec = ugpa_lsat_spec();
        let pool = [
            profile(0, vec![Value::Num(1.0), Value::Num(1.0)], 0),
            profile(1, vec![Value::Num(2.0), Value::Num(2.0)], 0),
        ];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let hood = knn(&spec, &[Value::Num(0.0), Value::Num(0.0)], &refs, 10, &[]).unwrap();
        assert_eq!(hood.len(), 2);
    }

    #[test]
    fn neighborhood_for_k_is_prefix_of_k_plus_one() {
        let spec = ugpa_lsat_spec();
        let pool: Vec<IndividualProfile> = (0..30)
            .map(|i| {
                profile(
                    i,
                    vec![
                        Value::Num((i % 7) as f64 / 2.0),
                        Value::Num((i % 11) as f64 * 4.0),
                    ],
                    0,
                )
            })
            .collect();
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let center = vec![Value::Num(1.7), Value::Num(20.0)];
        for k in 1..10 {
            let smaller = knn(&spec, &center, &refs, k, &[]).unwrap();
            let larger = knn(&spec, &center, &refs, k + 1, &[]).unwrap();
            assert_eq!(smaller.member_ids[..], larger.member_ids[..k]);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn spec_and_pair() -> impl Strategy<Value = (DistanceSpec, Vec<Value>, Vec<Value>)> {
            // 1-6 attributes, each categorical or continuous with an
            // in-range pair of values.
            prop::collection::vec(
                prop_oneof![
                    // categorical: a pair of small label indices
                    (0u8..4, 0u8..4).prop_map(|(a, b)| (None, a, b)),
                    // continuous: range plus two positions inside it
                    (-50.0f64..50.0, 0.1f64..30.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(
                        |(lo, span, t1, t2)| {
                            (
                                Some((lo, lo + span)),
                                (t1 * 255.0) as u8,
                                (t2 * 255.0) as u8,
                            )
                        }
                    ),
                ],
                1..6,
            )
            .prop_map(|attrs| {
                let mut descriptions = Vec::new();
                let mut x1 = Vec::new();
                let mut x2 = Vec::new();
                for (i, (range, a, b)) in attrs.into_iter().enumerate() {
                    match range {
                        None => {
                            descriptions.push(DistanceAttribute {
                                name: format!("c{i}"),
                                kind: AttributeKind::Categorical,
                                range: None,
                                scale: None,
                            });
                            x1.push(Value::Cat(format!("v{}", a % 4)));
                            x2.push(Value::Cat(format!("v{}", b % 4)));
                        }
                        Some((lo, hi)) => {
                            descriptions.push(DistanceAttribute {
                                name: format!("n{i}"),
                                kind: AttributeKind::Continuous,
                                range: Some((lo, hi)),
                                scale: None,
                            });
                            x1.push(Value::Num(lo + (hi - lo) * a as f64 / 255.0));
                            x2.push(Value::Num(lo + (hi - lo) * b as f64 / 255.0));
                        }
                    }
                }
                (DistanceSpec::from_attributes(descriptions), x1, x2)
            })
        }

        proptest! {
            #[test]
            fn gower_symmetric_zero_on_self_and_bounded((spec, x1, x2) in spec_and_pair()) {
                let d12 = gower(&spec, &x1, &x2).unwrap();
                let d21 = gower(&spec, &x2, &x1).unwrap();
                prop_assert_eq!(d12, d21);
                prop_assert_eq!(gower(&spec, &x1, &x1).unwrap(), 0.0);
                prop_assert!((0.0..=1.0).contains(&d12));
            }
        }
    }

    #[test]
    fn farther_candidate_never_changes_the_neighborhood() {
        let spec = ugpa_lsat_spec();
        let mut pool: Vec<IndividualProfile> = (0..10)
            .map(|i| profile(i, vec![Value::Num(i as f64 / 4.0), Value::Num(i as f64)], 0))
            .collect();
        let center = vec![Value::Num(0.0), Value::Num(0.0)];
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let before = knn(&spec, &center, &refs, 3, &[]).unwrap();
        // Strictly farther than the current third neighbor.
        pool.push(profile(99, vec![Value::Num(4.0), Value::Num(48.0)], 0));
        let refs: Vec<&IndividualProfile> = pool.iter().collect();
        let after = knn(&spec, &center, &refs, 3, &[]).unwrap();
        assert_eq!(before.member_ids, after.member_ids);
        assert_eq!(before.distances, after.distances);
    }
}
