//! Behavioral indicators: measurable quantities extracted from sensor
//! streams (base), taken from self-reports, or computed from other
//! indicators and timelines (derived).

pub mod activity;
pub mod derived;
pub mod sleep;
pub mod steps;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Observation window of an indicator value, UTC ms, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn minute(start: i64) -> Self {
        Window {
            start,
            end: start + crate::timeutil::MS_PER_MIN,
        }
    }
}

/// An indicator measurement: real-valued or categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Num(_) => None,
            Value::Cat(s) => Some(s),
        }
    }
}

/// One indicator observation for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub pid: String,
    #[serde(flatten)]
    pub window: Window,
    pub name: String,
    pub value: Value,
    /// Quality on the five-level scale in [0, 1].
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    SelfReported,
    Base,
    Derived,
}

/// Tuple time-key granularity of an indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Minute,
    Day,
    Week,
    /// One value for the whole observation window.
    Window,
}

/// Allowed values of an indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDomain {
    /// Real-valued, any finite number.
    Real,
    /// Real-valued, nonnegative.
    NonNegative,
    /// Categorical over a closed set.
    Categorical(Vec<String>),
    /// Categorical with an open value set (e.g. cell codes).
    OpenCategorical,
}

/// Catalog entry for one indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub id: String,
    pub kind: IndicatorKind,
    pub units: String,
    pub domain: ValueDomain,
    pub granularity: Granularity,
    /// For derived indicators: ids of the inputs they are computed from.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
}

/// The registered indicator catalog. Values may only be emitted for
/// registered ids, and values must lie in the declared domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorCatalog {
    entries: BTreeMap<String, IndicatorSpec>,
}

pub const INTENSITY_CLASSES: [&str; 4] = ["sedentary", "light", "moderate", "vigorous"];
pub const TRANSPORT_MODES: [&str; 3] = ["walking", "cycling", "vehicle"];

impl IndicatorCatalog {
    pub fn new(specs: Vec<IndicatorSpec>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for spec in specs {
            for input in &spec.inputs {
                if spec.kind != IndicatorKind::Derived {
                    return Err(Error::validation(format!(
                        "indicator {} declares inputs but is not derived",
                        spec.id
                    )));
                }
                if input == &spec.id {
                    return Err(Error::validation(format!("indicator {} depends on itself", spec.id)));
                }
            }
            if entries.insert(spec.id.clone(), spec.clone()).is_some() {
                return Err(Error::validation(format!("duplicate indicator id {}", spec.id)));
            }
        }
        Ok(IndicatorCatalog { entries })
    }

    /// Built-in catalog covering the extracted and derived indicator set.
    pub fn builtin() -> Self {
        let cat = |values: &[&str]| ValueDomain::Categorical(values.iter().map(|s| s.to_string()).collect());
        let base = |id: &str, units: &str, domain: ValueDomain, granularity: Granularity| IndicatorSpec {
            id: id.into(),
            kind: IndicatorKind::Base,
            units: units.into(),
            domain,
            granularity,
            inputs: vec![],
        };
        let derived = |id: &str, units: &str, domain: ValueDomain, granularity: Granularity, inputs: &[&str]| IndicatorSpec {
            id: id.into(),
            kind: IndicatorKind::Derived,
            units: units.into(),
            domain,
            granularity,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        };
        let mut specs = vec![
            base("activity_counts", "counts/min", ValueDomain::NonNegative, Granularity::Minute),
            base("activity_intensity", "class", cat(&INTENSITY_CLASSES), Granularity::Minute),
            base("met", "MET", ValueDomain::NonNegative, Granularity::Minute),
            base("steps", "steps/min", ValueDomain::NonNegative, Granularity::Minute),
            base("sleep_hours", "hours/night", ValueDomain::NonNegative, Granularity::Day),
            base("sleep_interruptions", "count/night", ValueDomain::NonNegative, Granularity::Day),
            base("transport_mode", "mode", cat(&TRANSPORT_MODES), Granularity::Minute),
            base("visited_cell", "geohash", ValueDomain::OpenCategorical, Granularity::Minute),
            base("eating_fast_food", "occurrence", ValueDomain::NonNegative, Granularity::Minute),
            base("eating_at_home", "occurrence", ValueDomain::NonNegative, Granularity::Minute),
            base("eating_dinner_out", "occurrence", ValueDomain::NonNegative, Granularity::Minute),
            IndicatorSpec {
                id: "meal".into(),
                kind: IndicatorKind::SelfReported,
                units: "meal type".into(),
                domain: cat(&["breakfast", "lunch", "dinner", "snack"]),
                granularity: Granularity::Minute,
                inputs: vec![],
            },
            IndicatorSpec {
                id: "food_ad".into(),
                kind: IndicatorKind::SelfReported,
                units: "occurrence".into(),
                domain: ValueDomain::NonNegative,
                granularity: Granularity::Minute,
                inputs: vec![],
            },
            derived("daily_steps", "steps/day", ValueDomain::NonNegative, Granularity::Day, &["steps"]),
            derived("fast_food_meals_per_week", "times/week", ValueDomain::NonNegative, Granularity::Window, &["meal"]),
            derived("eating_schedule_stddev_min", "minutes", ValueDomain::NonNegative, Granularity::Window, &["meal"]),
            derived("active_commute_min_per_day", "min/day", ValueDomain::NonNegative, Granularity::Window, &["transport_mode"]),
            derived("sedentary_after_school_min_per_day", "min/day", ValueDomain::NonNegative, Granularity::Window, &["activity_intensity"]),
            derived("avg_sleep_hours", "hours", ValueDomain::NonNegative, Granularity::Window, &["sleep_hours"]),
            derived("avg_sleep_interruptions", "count", ValueDomain::NonNegative, Granularity::Window, &["sleep_interruptions"]),
        ];
        for meal in ["breakfast", "lunch", "dinner", "snack"] {
            specs.push(derived(
                &format!("meal_freq_per_week_{meal}"),
                "times/week",
                ValueDomain::NonNegative,
                Granularity::Window,
                &["meal"],
            ));
        }
        for class in INTENSITY_CLASSES {
            specs.push(derived(
                &format!("pa_school_min_per_day_{class}"),
                "min/day",
                ValueDomain::NonNegative,
                Granularity::Window,
                &["activity_intensity"],
            ));
            specs.push(derived(
                &format!("pa_after_school_min_per_day_{class}"),
                "min/day",
                ValueDomain::NonNegative,
                Granularity::Window,
                &["activity_intensity"],
            ));
        }
        IndicatorCatalog::new(specs).expect("builtin catalog is consistent")
    }

    pub fn get(&self, id: &str) -> Option<&IndicatorSpec> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Check a value against the catalog; unknown ids and out-of-domain
    /// values are validation errors.
    pub fn check(&self, value: &IndicatorValue) -> Result<()> {
        let spec = self.entries.get(&value.name).ok_or_else(|| {
            Error::validation(format!("indicator {:?} not in catalog", value.name))
        })?;
        match (&spec.domain, &value.value) {
            (ValueDomain::Real, Value::Num(v)) => {
                if !v.is_finite() {
                    return Err(Error::validation(format!("{}: non-finite value", value.name)));
                }
            }
            (ValueDomain::NonNegative, Value::Num(v)) => {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::validation(format!("{}: negative or non-finite value", value.name)));
                }
            }
            (ValueDomain::Categorical(allowed), Value::Cat(c)) => {
                if !allowed.contains(c) {
                    return Err(Error::validation(format!(
                        "{}: value {c:?} outside declared domain",
                        value.name
                    )));
                }
            }
            (ValueDomain::OpenCategorical, Value::Cat(_)) => {}
            _ => {
                return Err(Error::validation(format!(
                    "{}: value type does not match declared domain",
                    value.name
                )));
            }
        }
        if !(0.0..=1.0).contains(&value.quality) {
            return Err(Error::validation(format!("{}: quality outside [0, 1]", value.name)));
        }
        Ok(())
    }
}
