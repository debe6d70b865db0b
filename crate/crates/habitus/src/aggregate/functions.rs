//! The four aggregation functions over tuple sets.
//!
//! f1 averages per-participant time means uniformly over participants; f2 is
//! the plain mean over tuples (participants weighted by contributed data);
//! f3 is the probability mass function of per-participant values; f4 is the
//! fraction of participants whose mean falls at or below a threshold.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::aggregate::{AggFunction, AggValue, IndicatorTuple};
use crate::error::{Error, Result};

/// Bins for f3: the declared category order, or explicit edges for a
/// continuous indicator (`edges.len() - 1` bins, last edge inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    Categories(Vec<String>),
    Edges(Vec<f64>),
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BinSpec::Categories(c) if c.is_empty() => Err(Error::argument("empty category list")),
            BinSpec::Edges(e) if e.len() < 2 => Err(Error::argument("need at least two bin edges")),
            BinSpec::Edges(e) if e.windows(2).any(|w| w[0] >= w[1]) => {
                Err(Error::argument("bin edges must be strictly increasing"))
            }
            _ => Ok(()),
        }
    }
}

/// Options shared by the aggregation functions.
#[derive(Debug, Clone, Default)]
pub struct AggOptions {
    pub bins: Option<BinSpec>,
    pub threshold: Option<f64>,
    /// f4 compares with strict `<` instead of `<=`.
    pub f4_strict: bool,
    /// Weight tuples by their quality score inside per-user and flat means.
    pub quality_weighted: bool,
}

/// Raw outcome of an aggregation function before privacy gating.
#[derive(Debug, Clone, PartialEq)]
pub struct AggOutcome {
    pub value: Option<AggValue>,
    pub n_participants: usize,
    pub n_tuples: usize,
    pub n_clamped: usize,
    pub mean_tuple_quality: f64,
    pub reason: Option<String>,
}

impl AggOutcome {
    fn empty() -> Self {
        AggOutcome {
            value: None,
            n_participants: 0,
            n_tuples: 0,
            n_clamped: 0,
            mean_tuple_quality: 0.0,
            reason: Some("empty".into()),
        }
    }
}

fn numeric_by_user<'a>(tuples: &[&'a IndicatorTuple]) -> Result<BTreeMap<&'a str, Vec<(f64, f64)>>> {
    let mut by_user: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for t in tuples {
        let v = t.value.as_num().ok_or_else(|| {
            Error::validation(format!("indicator {} has categorical values; use f3", t.name))
        })?;
        by_user.entry(t.u.as_str()).or_default().push((v, t.quality));
    }
    Ok(by_user)
}

fn weighted_mean(values: &[(f64, f64)], quality_weighted: bool) -> f64 {
    if quality_weighted {
        let wsum: f64 = values.iter().map(|(_, q)| q).sum();
        if wsum > 0.0 {
            return values.iter().map(|(v, q)| v * q).sum::<f64>() / wsum;
        }
    }
    values.iter().map(|(v, _)| v).sum::<f64>() / values.len() as f64
}

fn mean_quality(tuples: &[&IndicatorTuple]) -> f64 {
    if tuples.is_empty() {
        0.0
    } else {
        tuples.iter().map(|t| t.quality).sum::<f64>() / tuples.len() as f64
    }
}

/// Per-user time means, uniformly averaged over users.
pub fn f1_avg_over_individuals(tuples: &[&IndicatorTuple], opts: &AggOptions) -> Result<AggOutcome> {
    if tuples.is_empty() {
        return Ok(AggOutcome::empty());
    }
    let by_user = numeric_by_user(tuples)?;
    let user_means: Vec<f64> = by_user
        .values()
        .map(|vs| weighted_mean(vs, opts.quality_weighted))
        .collect();
    Ok(AggOutcome {
        value: Some(AggValue::Scalar(
            user_means.iter().sum::<f64>() / user_means.len() as f64,
        )),
        n_participants: by_user.len(),
        n_tuples: tuples.len(),
        n_clamped: 0,
        mean_tuple_quality: mean_quality(tuples),
        reason: None,
    })
}

/// Plain mean over all tuples.
pub fn f2_weighted_avg(tuples: &[&IndicatorTuple], opts: &AggOptions) -> Result<AggOutcome> {
    if tuples.is_empty() {
        return Ok(AggOutcome::empty());
    }
    let by_user = numeric_by_user(tuples)?;
    let all: Vec<(f64, f64)> = by_user.values().flatten().copied().collect();
    Ok(AggOutcome {
        value: Some(AggValue::Scalar(weighted_mean(&all, opts.quality_weighted))),
        n_participants: by_user.len(),
        n_tuples: tuples.len(),
        n_clamped: 0,
        mean_tuple_quality: mean_quality(tuples),
        reason: None,
    })
}

/// Per-user representative value: the mean for numeric indicators, the
/// modal category (ties to the earlier category in bin order) otherwise.
fn user_representatives<'a>(
    tuples: &[&'a IndicatorTuple],
    bins: &BinSpec,
) -> Result<Vec<ReprValue>> {
    let mut users: BTreeMap<&str, Vec<&IndicatorTuple>> = BTreeMap::new();
    for t in tuples {
        users.entry(t.u.as_str()).or_default().push(t);
    }
    let mut out = Vec::with_capacity(users.len());
    for (u, ts) in users {
        match bins {
            BinSpec::Edges(_) => {
                let vals: Vec<(f64, f64)> = ts
                    .iter()
                    .map(|t| {
                        t.value
                            .as_num()
                            .map(|v| (v, t.quality))
                            .ok_or_else(|| Error::validation(format!("user {u}: categorical value with edge bins")))
                    })
                    .collect::<Result<_>>()?;
                out.push(ReprValue::Num(weighted_mean(&vals, false)));
            }
            BinSpec::Categories(order) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for t in &ts {
                    let c = t.value.as_cat().ok_or_else(|| {
                        Error::validation(format!("user {u}: numeric value with category bins"))
                    })?;
                    *counts.entry(c).or_insert(0) += 1;
                }
                // Modal category; ties resolve to the earliest in bin order.
                let best = order
                    .iter()
                    .filter_map(|c| counts.get(c.as_str()).map(|n| (c.as_str(), *n)))
                    .max_by(|a, b| a.1.cmp(&b.1))
                    .map(|(c, _)| c);
                match best {
                    Some(c) => out.push(ReprValue::Cat(c.to_string())),
                    None => {
                        return Err(Error::validation(format!(
                            "user {u}: values outside the declared category bins"
                        )))
                    }
                }
            }
        }
    }
    Ok(out)
}

enum ReprValue {
    Num(f64),
    Cat(String),
}

/// Probability mass function of per-user values over the given bins.
pub fn f3_distribution(tuples: &[&IndicatorTuple], opts: &AggOptions) -> Result<AggOutcome> {
    let bins = opts
        .bins
        .as_ref()
        .ok_or_else(|| Error::argument("f3 needs bins (categories or edges)"))?;
    bins.validate()?;
    if tuples.is_empty() {
        return Ok(AggOutcome::empty());
    }
    let reprs = user_representatives(tuples, bins)?;
    let n_users = reprs.len();
    let mut clamped = 0usize;
    let (labels, counts): (Vec<String>, Vec<usize>) = match bins {
        BinSpec::Categories(order) => {
            let mut counts = vec![0usize; order.len()];
            for r in &reprs {
                if let ReprValue::Cat(c) = r {
                    let idx = order.iter().position(|o| o == c).expect("validated above");
                    counts[idx] += 1;
                }
            }
            (order.clone(), counts)
        }
        BinSpec::Edges(edges) => {
            let m = edges.len() - 1;
            let mut counts = vec![0usize; m];
            for r in &reprs {
                if let ReprValue::Num(v) = r {
                    let idx = if *v < edges[0] {
                        clamped += 1;
                        0
                    } else if *v > edges[m] {
                        clamped += 1;
                        m - 1
                    } else {
                        // Last edge is inclusive.
                        edges[..m]
                            .iter()
                            .rposition(|e| v >= e)
                            .unwrap_or(0)
                    };
                    counts[idx] += 1;
                }
            }
            let labels = (0..m)
                .map(|i| {
                    if i + 1 == m {
                        format!("[{}, {}]", edges[i], edges[i + 1])
                    } else {
                        format!("[{}, {})", edges[i], edges[i + 1])
                    }
                })
                .collect();
            (labels, counts)
        }
    };
    let pmf: Vec<(String, f64)> = labels
        .into_iter()
        .zip(counts.iter())
        .map(|(l, &c)| (l, c as f64 / n_users as f64))
        .collect();
    debug_assert!((pmf.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(AggOutcome {
        value: Some(AggValue::Pmf(pmf)),
        n_participants: n_users,
        n_tuples: tuples.len(),
        n_clamped: clamped,
        mean_tuple_quality: mean_quality(tuples),
        reason: None,
    })
}

/// Fraction of participants whose mean value is at or below the threshold.
pub fn f4_fraction_below(tuples: &[&IndicatorTuple], opts: &AggOptions) -> Result<AggOutcome> {
    let t = opts
        .threshold
        .ok_or_else(|| Error::argument("f4 needs a threshold"))?;
    if tuples.is_empty() {
        return Ok(AggOutcome::empty());
    }
    let by_user = numeric_by_user(tuples)?;
    let n_users = by_user.len();
    let below = by_user
        .values()
        .map(|vs| weighted_mean(vs, opts.quality_weighted))
        .filter(|m| if opts.f4_strict { *m < t } else { *m <= t })
        .count();
    Ok(AggOutcome {
        value: Some(AggValue::Scalar(below as f64 / n_users as f64)),
        n_participants: n_users,
        n_tuples: tuples.len(),
        n_clamped: 0,
        mean_tuple_quality: mean_quality(tuples),
        reason: None,
    })
}

/// Dispatch by function tag.
pub fn run_aggregate(
    function: AggFunction,
    tuples: &[&IndicatorTuple],
    opts: &AggOptions,
) -> Result<AggOutcome> {
    match function {
        AggFunction::F1 => f1_avg_over_individuals(tuples, opts),
        AggFunction::F2 => f2_weighted_avg(tuples, opts),
        AggFunction::F3 => f3_distribution(tuples, opts),
        AggFunction::F4 => f4_fraction_below(tuples, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::ModeTag;
    use crate::geocell::GeoCell;
    use crate::indicators::Value;

    fn num_tuple(u: &str, v: f64) -> IndicatorTuple {
        IndicatorTuple {
            u: u.into(),
            g: GeoCell::parse("sx0r4k").unwrap(),
            t: "20260504".into(),
            name: "x".into(),
            value: Value::Num(v),
            quality: 0.8,
            mode: ModeTag::Habits,
        }
    }

    fn cat_tuple(u: &str, c: &str) -> IndicatorTuple {
        IndicatorTuple {
            value: Value::Cat(c.into()),
            ..num_tuple(u, 0.0)
        }
    }

    /// Independent oracle: two-level mean spelled out directly.
    fn oracle_f1(tuples: &[&IndicatorTuple]) -> f64 {
        let mut users: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for t in tuples {
            users.entry(t.u.as_str()).or_default().push(t.value.as_num().unwrap());
        }
        let mut acc = 0.0;
        for vs in users.values() {
            acc += vs.iter().sum::<f64>() / vs.len() as f64;
        }
        acc / users.len() as f64
    }

    fn oracle_f2(tuples: &[&IndicatorTuple]) -> f64 {
        tuples.iter().map(|t| t.value.as_num().unwrap()).sum::<f64>() / tuples.len() as f64
    }

    #[test]
    fn f1_two_user_hand_example() {
        // User A means 2 visits/week, user B means 4: f1 = 3.
        let tuples = vec![num_tuple("a", 1.0), num_tuple("a", 3.0), num_tuple("b", 4.0)];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let out = f1_avg_over_individuals(&refs, &AggOptions::default()).unwrap();
        assert_eq!(out.value, Some(AggValue::Scalar(3.0)));
        assert_eq!(out.n_participants, 2);
    }

    #[test]
    fn f1_single_user_identity() {
        let tuples = vec![num_tuple("a", 2.0), num_tuple("a", 6.0)];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let out = f1_avg_over_individuals(&refs, &AggOptions::default()).unwrap();
        assert_eq!(out.value, Some(AggValue::Scalar(4.0)));
    }

    #[test]
    fn f1_f2_divergence_fixture() {
        // Unequal contributions split the two functions: A contributes
        // {1,1}, B contributes {4}, so f1 = (1+4)/2 = 2.5 while
        // f2 = (1+1+4)/3 = 2.0.
        let tuples = vec![num_tuple("a", 1.0), num_tuple("a", 1.0), num_tuple("b", 4.0)];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let f1 = f1_avg_over_individuals(&refs, &AggOptions::default()).unwrap();
        let f2 = f2_weighted_avg(&refs, &AggOptions::default()).unwrap();
        assert_eq!(f1.value, Some(AggValue::Scalar(2.5)));
        assert_eq!(f2.value, Some(AggValue::Scalar(2.0)));
    }

    #[test]
    fn f1_equals_f2_for_equal_contributions() {
        let tuples = vec![
            num_tuple("a", 1.0),
            num_tuple("a", 3.0),
            num_tuple("b", 5.0),
            num_tuple("b", 7.0),
        ];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let f1 = f1_avg_over_individuals(&refs, &AggOptions::default()).unwrap();
        let f2 = f2_weighted_avg(&refs, &AggOptions::default()).unwrap();
        match (f1.value.unwrap(), f2.value.unwrap()) {
            (AggValue::Scalar(a), AggValue::Scalar(b)) => assert!((a - b).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn random_instances_match_oracles() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n_users = rng.gen_range(1..20);
            let mut tuples = Vec::new();
            for u in 0..n_users {
                let n = rng.gen_range(1..15);
                for _ in 0..n {
                    tuples.push(num_tuple(&format!("u{u:02}"), rng.gen_range(0.0..100.0)));
                }
            }
            let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
            let f1 = f1_avg_over_individuals(&refs, &AggOptions::default()).unwrap();
            let f2 = f2_weighted_avg(&refs, &AggOptions::default()).unwrap();
            match f1.value.unwrap() {
                AggValue::Scalar(v) => assert!((v - oracle_f1(&refs)).abs() < 1e-12),
                _ => unreachable!(),
            }
            match f2.value.unwrap() {
                AggValue::Scalar(v) => assert!((v - oracle_f2(&refs)).abs() < 1e-12),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn f3_transport_mode_example() {
        let tuples = vec![
            cat_tuple("a", "walking"),
            cat_tuple("b", "walking"),
            cat_tuple("c", "vehicle"),
            cat_tuple("d", "cycling"),
        ];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let opts = AggOptions {
            bins: Some(BinSpec::Categories(vec![
                "walking".into(),
                "cycling".into(),
                "vehicle".into(),
            ])),
            ..Default::default()
        };
        let out = f3_distribution(&refs, &opts).unwrap();
        match out.value.unwrap() {
            AggValue::Pmf(pmf) => {
                assert_eq!(pmf[0], ("walking".to_string(), 0.5));
                assert_eq!(pmf[1], ("cycling".to_string(), 0.25));
                assert_eq!(pmf[2], ("vehicle".to_string(), 0.25));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn f3_single_user_one_hot() {
        let tuples = vec![cat_tuple("a", "walking"), cat_tuple("a", "walking")];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let opts = AggOptions {
            bins: Some(BinSpec::Categories(vec!["walking".into(), "vehicle".into()])),
            ..Default::default()
        };
        let out = f3_distribution(&refs, &opts).unwrap();
        assert_eq!(
            out.value,
            Some(AggValue::Pmf(vec![
                ("walking".to_string(), 1.0),
                ("vehicle".to_string(), 0.0)
            ]))
        );
    }

    #[test]
    fn f3_continuous_matches_histogram_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let edges = vec![0.0, 25.0, 50.0, 75.0, 100.0];
            let n_users = rng.gen_range(1..30);
            let mut tuples = Vec::new();
            for u in 0..n_users {
                for _ in 0..rng.gen_range(1..6) {
                    tuples.push(num_tuple(&format!("u{u:02}"), rng.gen_range(-10.0..110.0)));
                }
            }
            let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
            let opts = AggOptions {
                bins: Some(BinSpec::Edges(edges.clone())),
                ..Default::default()
            };
            let out = f3_distribution(&refs, &opts).unwrap();
            // Oracle: clamped histogram over per-user plain means.
            let mut users: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for t in &tuples {
                users.entry(t.u.clone()).or_default().push(t.value.as_num().unwrap());
            }
            let mut counts = vec![0usize; 4];
            for vs in users.values() {
                let m = vs.iter().sum::<f64>() / vs.len() as f64;
                let idx = if m < 0.0 {
                    0
                } else if m >= 100.0 {
                    3
                } else {
                    (m / 25.0).floor() as usize
                };
                counts[idx] += 1;
            }
            match out.value.unwrap() {
                AggValue::Pmf(pmf) => {
                    let total: f64 = pmf.iter().map(|(_, p)| p).sum();
                    assert!((total - 1.0).abs() < 1e-9);
                    for (i, (_, p)) in pmf.iter().enumerate() {
                        let oracle = counts[i] as f64 / users.len() as f64;
                        assert!((p - oracle).abs() < 1e-9, "bin {i}: {p} vs {oracle}");
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn f4_threshold_hand_example() {
        // Daily-step means 3000/4500/6000/8000 with t = 5000: half at or below.
        let tuples = vec![
            num_tuple("a", 3000.0),
            num_tuple("b", 4500.0),
            num_tuple("c", 6000.0),
            num_tuple("d", 8000.0),
        ];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let opts = AggOptions {
            threshold: Some(5000.0),
            ..Default::default()
        };
        let out = f4_fraction_below(&refs, &opts).unwrap();
        assert_eq!(out.value, Some(AggValue::Scalar(0.5)));
        // Boundary thresholds.
        let all = f4_fraction_below(
            &refs,
            &AggOptions {
                threshold: Some(10_000.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(all.value, Some(AggValue::Scalar(1.0)));
        let none = f4_fraction_below(
            &refs,
            &AggOptions {
                threshold: Some(100.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(none.value, Some(AggValue::Scalar(0.0)));
    }

    #[test]
    fn f4_is_monotone_in_threshold() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tuples: Vec<IndicatorTuple> = (0..30)
            .map(|u| num_tuple(&format!("u{u:02}"), rng.gen_range(0.0..10_000.0)))
            .collect();
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        let mut prev = -1.0;
        for t in (0..=10_500).step_by(500) {
            let out = f4_fraction_below(
                &refs,
                &AggOptions {
                    threshold: Some(t as f64),
                    ..Default::default()
                },
            )
            .unwrap();
            match out.value.unwrap() {
                AggValue::Scalar(v) => {
                    assert!((0.0..=1.0).contains(&v));
                    assert!(v >= prev);
                    prev = v;
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn order_invariance_of_all_functions() {
        let mut tuples = vec![
            num_tuple("a", 1.0),
            num_tuple("b", 5.0),
            num_tuple("a", 3.0),
            num_tuple("c", 9.0),
        ];
        let opts = AggOptions {
            threshold: Some(4.0),
            bins: Some(BinSpec::Edges(vec![0.0, 5.0, 10.0])),
            ..Default::default()
        };
        let run = |ts: &[IndicatorTuple]| {
            let refs: Vec<&IndicatorTuple> = ts.iter().collect();
            (
                f1_avg_over_individuals(&refs, &opts).unwrap(),
                f2_weighted_avg(&refs, &opts).unwrap(),
                f3_distribution(&refs, &opts).unwrap(),
                f4_fraction_below(&refs, &opts).unwrap(),
            )
        };
        let a = run(&tuples);
        tuples.reverse();
        let b = run(&tuples);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_input_is_suppressed_with_reason() {
        let out = f1_avg_over_individuals(&[], &AggOptions::default()).unwrap();
        assert!(out.value.is_none());
        assert_eq!(out.reason.as_deref(), Some("empty"));
    }

    #[test]
    fn categorical_values_rejected_by_numeric_functions() {
        let tuples = vec![cat_tuple("a", "walking")];
        let refs: Vec<&IndicatorTuple> = tuples.iter().collect();
        assert!(f1_avg_over_individuals(&refs, &AggOptions::default()).is_err());
    }
}
