//! Behavior profiles: a first-order Markov transition graph over place
//! types, with per-edge transport metadata and per-node visit metadata.
//! Coordinates are discarded; only place types survive.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::calendar::DayType;
use crate::error::{Error, Result};
use crate::mobility::{MoveEvent, Timeline};

/// Mean / standard deviation / count of one metadata variable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub count: u32,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return SummaryStats::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        SummaryStats {
            mean,
            std: var.sqrt(),
            count: values.len() as u32,
        }
    }
}

/// Per-transport-mode summaries of one transition edge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeStats {
    pub distance_m: SummaryStats,
    pub duration_min: SummaryStats,
    pub active_min: SummaryStats,
    pub steps: SummaryStats,
}

/// Metadata of one observed transition edge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeMetadata {
    pub transitions: u32,
    /// Transport-mode probability mass function over the edge's moves.
    pub mode_pmf: BTreeMap<String, f64>,
    pub by_mode: BTreeMap<String, ModeStats>,
}

/// Metadata of one visited place type.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeMetadata {
    pub visits: u32,
    pub dwell_min: SummaryStats,
    pub meals_per_visit: SummaryStats,
    pub active_min_per_visit: SummaryStats,
}

/// Per-participant, per-day-type mobility profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub participant: String,
    pub day_type: DayType,
    pub timeline_count: usize,
    /// Row-stochastic transition probabilities over place types; rows exist
    /// only for types with observed outgoing moves.
    pub transition_matrix: BTreeMap<String, BTreeMap<String, f64>>,
    /// Edge metadata, keyed origin -> destination, exactly for edges with
    /// positive probability.
    pub transition_metadata: BTreeMap<String, BTreeMap<String, EdgeMetadata>>,
    pub poi_metadata: BTreeMap<String, NodeMetadata>,
}

impl BehaviorProfile {
    /// Row sums must be 1 within 1e-9, metadata must mirror the matrix.
    pub fn validate(&self) -> Result<()> {
        for (origin, row) in &self.transition_matrix {
            let sum: f64 = row.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!("row {origin} sums to {sum}")));
            }
            for (dest, p) in row {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::validation(format!("P({origin}->{dest}) = {p}")));
                }
                let has_meta = self
                    .transition_metadata
                    .get(origin)
                    .and_then(|m| m.get(dest))
                    .is_some();
                if (*p > 0.0) != has_meta {
                    return Err(Error::validation(format!(
                        "metadata/probability mismatch on {origin}->{dest}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Build the profile for one day type from a participant's timelines.
/// Transition probabilities are empirical move frequencies; unobserved edges
/// stay at zero (no smoothing).
pub fn build_profile(timelines: &[Timeline], day_type: DayType) -> Result<BehaviorProfile> {
    let selected: Vec<&Timeline> = timelines.iter().filter(|t| t.day_type == day_type).collect();
    if selected.is_empty() {
        return Err(Error::argument(format!(
            "no timelines of day type {:?}",
            day_type.name()
        )));
    }
    let participant = selected[0].participant.clone();
    if selected.iter().any(|t| t.participant != participant) {
        return Err(Error::argument("profiles are per participant; timelines mix participants"));
    }

    let mut moves_by_edge: BTreeMap<(String, String), Vec<&MoveEvent>> = BTreeMap::new();
    let mut outgoing: BTreeMap<String, u32> = BTreeMap::new();
    for t in &selected {
        for m in t.moves() {
            *outgoing.entry(m.origin_poi.clone()).or_insert(0) += 1;
            moves_by_edge
                .entry((m.origin_poi.clone(), m.dest_poi.clone()))
                .or_default()
                .push(m);
        }
    }

    let mut transition_matrix: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut transition_metadata: BTreeMap<String, BTreeMap<String, EdgeMetadata>> = BTreeMap::new();
    for ((origin, dest), moves) in &moves_by_edge {
        let p = moves.len() as f64 / outgoing[origin] as f64;
        transition_matrix
            .entry(origin.clone())
            .or_default()
            .insert(dest.clone(), p);

        let mut by_mode_values: BTreeMap<String, Vec<&MoveEvent>> = BTreeMap::new();
        for m in moves {
            by_mode_values
                .entry(m.transport_mode.name().to_string())
                .or_default()
                .push(m);
        }
        let mut mode_pmf = BTreeMap::new();
        let mut by_mode = BTreeMap::new();
        for (mode, ms) in &by_mode_values {
            mode_pmf.insert(mode.clone(), ms.len() as f64 / moves.len() as f64);
            let collect = |f: &dyn Fn(&MoveEvent) -> f64| -> Vec<f64> { ms.iter().map(|m| f(m)).collect() };
            by_mode.insert(
                mode.clone(),
                ModeStats {
                    distance_m: SummaryStats::from_values(&collect(&|m| m.distance_m)),
                    duration_min: SummaryStats::from_values(&collect(&|m| {
                        (m.end - m.start) as f64 / 60_000.0
                    })),
                    active_min: SummaryStats::from_values(&collect(&|m| {
                        m.indicators.active_minutes() as f64
                    })),
                    steps: SummaryStats::from_values(&collect(&|m| m.indicators.steps as f64)),
                },
            );
        }
        transition_metadata.entry(origin.clone()).or_default().insert(
            dest.clone(),
            EdgeMetadata {
                transitions: moves.len() as u32,
                mode_pmf,
                by_mode,
            },
        );
    }

    let mut stop_values: BTreeMap<String, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for t in &selected {
        for s in t.stops() {
            let entry = stop_values.entry(s.poi_type.clone()).or_default();
            entry.0.push((s.end - s.start) as f64 / 60_000.0);
            entry.1.push(s.indicators.meals as f64);
            entry.2.push(s.indicators.active_minutes() as f64);
        }
    }
    let poi_metadata = stop_values
        .into_iter()
        .map(|(poi, (dwell, meals, active))| {
            (
                poi,
                NodeMetadata {
                    visits: dwell.len() as u32,
                    dwell_min: SummaryStats::from_values(&dwell),
                    meals_per_visit: SummaryStats::from_values(&meals),
                    active_min_per_visit: SummaryStats::from_values(&active),
                },
            )
        })
        .collect();

    let profile = BehaviorProfile {
        participant,
        day_type,
        timeline_count: selected.len(),
        transition_matrix,
        transition_metadata,
        poi_metadata,
    };
    profile.validate()?;
    Ok(profile)
}

/// Render the transition graph in dot syntax: one node line per place type,
/// one edge line per positive-probability transition, probabilities rounded
/// to two decimals, everything deterministically ordered.
pub fn profile_to_dot(profile: &BehaviorProfile) -> String {
    let mut out = String::from("digraph behavior_profile {\n  rankdir=LR;\n");
    let mut nodes: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for (origin, row) in &profile.transition_matrix {
        nodes.insert(origin);
        for dest in row.keys() {
            nodes.insert(dest);
        }
    }
    for node in profile.poi_metadata.keys() {
        nodes.insert(node);
    }
    for node in &nodes {
        out.push_str(&format!("  \"{node}\";\n"));
    }
    for (origin, row) in &profile.transition_matrix {
        for (dest, p) in row {
            out.push_str(&format!("  \"{origin}\" -> \"{dest}\" [label=\"{p:.2}\"];\n"));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocell::GeoPoint;
    use crate::mobility::{EventIndicators, StopEvent, TimelineEvent, TransportMode};
    use chrono::NaiveDate;

    fn day(n: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2026, 5, 1).unwrap() + chrono::Duration::days(n as i64)
    }

    fn stop(s: i64, e: i64, poi: &str) -> TimelineEvent {
        TimelineEvent::Stop(StopEvent {
            start: s,
            end: e,
            centroid: GeoPoint::new(40.62, 22.95).unwrap(),
            poi_type: poi.into(),
            indicators: EventIndicators::default(),
        })
    }

    fn mv(s: i64, e: i64, from: &str, to: &str, mode: TransportMode) -> TimelineEvent {
        TimelineEvent::Move(MoveEvent {
            start: s,
            end: e,
            origin_poi: from.into(),
            dest_poi: to.into(),
            distance_m: 1000.0,
            transport_mode: mode,
            low_quality_mode: false,
            indicators: EventIndicators::default(),
        })
    }

    fn school_day(n: u32, afternoon: &str) -> Timeline {
        let m = 60_000;
        let events = vec![
            stop(0, 100 * m, "home"),
            mv(100 * m, 120 * m, "home", "school", TransportMode::Walking),
            stop(120 * m, 400 * m, "school"),
            mv(400 * m, 420 * m, "school", afternoon, TransportMode::Walking),
            stop(420 * m, 500 * m, afternoon),
        ];
        Timeline::new("p1".into(), day(n), DayType::School, events).unwrap()
    }

    #[test]
    fn deterministic_schedule_gives_unit_probabilities() {
        let timelines: Vec<Timeline> = (0..10).map(|n| school_day(n, "home")).collect();
        let p = build_profile(&timelines, DayType::School).unwrap();
        assert_eq!(p.transition_matrix["home"]["school"], 1.0);
        assert_eq!(p.transition_matrix["school"]["home"], 1.0);
        assert_eq!(p.transition_metadata["home"]["school"].transitions, 10);
        assert_eq!(p.poi_metadata["school"].visits, 10);
    }

    #[test]
    fn mixed_destinations_split_frequencies() {
        let mut timelines: Vec<Timeline> = (0..7).map(|n| school_day(n, "home")).collect();
        timelines.extend((7..10).map(|n| school_day(n, "park")));
        let p = build_profile(&timelines, DayType::School).unwrap();
        let row = &p.transition_matrix["school"];
        assert!((row["home"] - 0.7).abs() < 1e-12);
        assert!((row["park"] - 0.3).abs() < 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn zero_moves_profile_is_valid_and_empty() {
        let t = Timeline::new(
            "p1".into(),
            day(0),
            DayType::NonSchool,
            vec![stop(0, 1000 * 60_000, "home")],
        )
        .unwrap();
        let p = build_profile(&[t], DayType::NonSchool).unwrap();
        assert!(p.transition_matrix.is_empty());
        assert_eq!(p.poi_metadata["home"].visits, 1);
        let dot = profile_to_dot(&p);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("\"home\";"));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn missing_day_type_is_an_error() {
        let timelines = vec![school_day(0, "home")];
        assert!(build_profile(&timelines, DayType::NonSchool).is_err());
    }

    #[test]
    fn profile_serialization_has_no_coordinates() {
        let timelines: Vec<Timeline> = (0..5).map(|n| school_day(n, "park")).collect();
        let p = build_profile(&timelines, DayType::School).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(!json.contains("\"lat\""));
        assert!(!json.contains("\"lon\""));
        assert!(!json.contains("centroid"));
    }

    #[test]
    fn dot_roundtrip_preserves_edges() {
        let mut timelines: Vec<Timeline> = (0..7).map(|n| school_day(n, "home")).collect();
        timelines.extend((7..10).map(|n| school_day(n, "park")));
        let p = build_profile(&timelines, DayType::School).unwrap();
        let dot = profile_to_dot(&p);
        // Re-parse the edge lines.
        let mut edges = std::collections::BTreeSet::new();
        for line in dot.lines() {
            if let Some((lhs, _)) = line.trim().split_once(" [label=") {
                if let Some((from, to)) = lhs.split_once(" -> ") {
                    edges.insert((from.trim_matches('"').to_string(), to.trim_matches('"').to_string()));
                }
            }
        }
        let mut expected = std::collections::BTreeSet::new();
        for (origin, row) in &p.transition_matrix {
            for dest in row.keys() {
                expected.insert((origin.clone(), dest.clone()));
            }
        }
        assert_eq!(edges, expected);
    }

    #[test]
    fn two_node_profile_line_counts() {
        let timelines: Vec<Timeline> = (0..3).map(|n| school_day(n, "home")).collect();
        let p = build_profile(&timelines, DayType::School).unwrap();
        let dot = profile_to_dot(&p);
        let node_lines = dot.lines().filter(|l| l.trim().ends_with("\";")).count();
        let edge_lines = dot.lines().filter(|l| l.contains("->")).count();
        assert_eq!(node_lines, 2);
        assert!(edge_lines <= 4);
    }

    #[test]
    fn statistical_recovery_of_planted_chain() {
        // Sample day sequences from a known 4-state chain and recover it.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let states = ["home", "school", "park", "fast_food"];
        let planted = [
            [0.1, 0.6, 0.2, 0.1],
            [0.5, 0.0, 0.3, 0.2],
            [0.7, 0.1, 0.1, 0.1],
            [0.8, 0.1, 0.1, 0.0],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 60_000i64;
        let mut timelines = Vec::new();
        for n in 0..400 {
            let mut events = Vec::new();
            let mut state = 0usize;
            let mut t = 0i64;
            events.push(stop(t, t + 30 * m, states[state]));
            t += 30 * m;
            for _ in 0..6 {
                let r: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = 0usize;
                for (j, p) in planted[state].iter().enumerate() {
                    acc += p;
                    if r < acc {
                        next = j;
                        break;
                    }
                }
                events.push(mv(t, t + 10 * m, states[state], states[next], TransportMode::Walking));
                t += 10 * m;
                events.push(stop(t, t + 30 * m, states[next]));
                t += 30 * m;
                state = next;
            }
            timelines.push(Timeline::new("p1".into(), day(n % 28), DayType::School, events).unwrap());
        }
        let p = build_profile(&timelines, DayType::School).unwrap();
        for (i, from) in states.iter().enumerate() {
            let row = p.transition_matrix.get(*from).unwrap();
            let sum: f64 = row.values().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for (j, to) in states.iter().enumerate() {
                let observed = row.get(*to).copied().unwrap_or(0.0);
                assert!(
                    (observed - planted[i][j]).abs() < 0.08,
                    "P({from}->{to}) = {observed}, planted {}",
                    planted[i][j]
                );
            }
        }
    }
}
