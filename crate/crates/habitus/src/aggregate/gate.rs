//! The privacy gate: region size adjusts dynamically until enough distinct
//! participants are included, or the result is suppressed. Also the artifact
//! scanner that verifies no participant id or raw coordinate ever reaches a
//! published output.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::aggregate::functions::{run_aggregate, AggOptions};
use crate::aggregate::{
    AggFunction, AggregateResult, AggregationContext, Filter, IndicatorTuple, ModeTag,
};
use crate::error::{Error, Result};
use crate::geocell::{coarsen, GeoCell};
use crate::quality::{availability_quality, Norm, Thresholds};

/// One aggregation request against the tuple store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationRequest {
    pub function: AggFunction,
    pub indicator: String,
    pub cell: GeoCell,
    pub mode: ModeTag,
    #[serde(default)]
    pub filter: Filter,
}

/// Gate parameters: the anonymity floor and the coarsest cell length to try.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub k_min: usize,
    pub min_len: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { k_min: 10, min_len: 4 }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 2 {
            return Err(Error::argument(format!("k_min must be at least 2, got {}", self.k_min)));
        }
        if self.min_len < 1 {
            return Err(Error::argument("min_len must be at least 1"));
        }
        Ok(())
    }
}

/// Quality inputs for gated results: the users-per-region thresholds and the
/// norm combining them with the tuples' own quality.
#[derive(Debug, Clone, Copy)]
pub struct ResultQuality {
    pub users_thresholds: Thresholds,
    pub norm: Norm,
}

impl Default for ResultQuality {
    fn default() -> Self {
        ResultQuality {
            users_thresholds: Thresholds { very_low: 10.0, very_high: 100.0 },
            norm: Norm::Min,
        }
    }
}

fn distinct_users(tuples: &[&IndicatorTuple]) -> usize {
    let mut users: Vec<&str> = tuples.iter().map(|t| t.u.as_str()).collect();
    users.sort_unstable();
    users.dedup();
    users.len()
}

/// Evaluate a request behind the k-anonymity gate.
///
/// Starting at the requested cell, the region is coarsened one character at
/// a time until at least `k_min` distinct participants contribute; if the
/// floor length still falls short the result is suppressed. The emitted cell
/// is always a prefix of the request, and coarsening only re-keys tuples —
/// every tuple visible at the requested cell is part of the emitted
/// aggregate.
pub fn privacy_gate(
    request: &AggregationRequest,
    ctx: &AggregationContext<'_>,
    gate: &GateConfig,
    opts: &AggOptions,
    quality: &ResultQuality,
) -> Result<AggregateResult> {
    gate.validate()?;
    let min_len = gate.min_len.min(request.cell.len());
    for len in (min_len..=request.cell.len()).rev() {
        let prefix = coarsen(&request.cell, len)?;
        let tuples: Vec<&IndicatorTuple> = ctx
            .apply_filter(
                ctx.store.select(&request.indicator, request.mode),
                &request.filter,
                request.mode,
            )
            .into_iter()
            .filter(|t| prefix.is_prefix_of(&t.g) || prefix == t.g)
            .collect();
        let users = distinct_users(&tuples);
        if users >= gate.k_min {
            let outcome = run_aggregate(request.function, &tuples, opts)?;
            let availability = availability_quality(users as f64, &quality.users_thresholds)?;
            let q = quality.norm.apply(availability.value, outcome.mean_tuple_quality);
            return Ok(AggregateResult {
                cell: prefix,
                requested_cell: request.cell.clone(),
                function: request.function,
                indicator: request.indicator.clone(),
                mode: request.mode,
                value: outcome.value,
                n_participants: outcome.n_participants,
                n_tuples: outcome.n_tuples,
                n_clamped: outcome.n_clamped,
                quality: q,
                suppressed: false,
                reason: outcome.reason,
            });
        }
    }
    Ok(AggregateResult {
        cell: coarsen(&request.cell, min_len)?,
        requested_cell: request.cell.clone(),
        function: request.function,
        indicator: request.indicator.clone(),
        mode: request.mode,
        value: None,
        n_participants: 0,
        n_tuples: 0,
        n_clamped: 0,
        quality: 0.0,
        suppressed: true,
        reason: Some("k_anonymity".into()),
    })
}

/// A forbidden token found in a published artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanFinding {
    pub file: String,
    pub token: String,
}

/// Scan every file under `dir` for forbidden tokens (participant ids, raw
/// coordinate strings). Returns all findings; an empty result means the
/// outputs are clean.
pub fn scan_artifacts(dir: &Path, forbidden: &[String]) -> Result<Vec<ScanFinding>> {
    let mut findings = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        if !d.exists() {
            continue;
        }
        let entries = std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&d, e))?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let text = String::from_utf8_lossy(&bytes);
            for token in forbidden {
                if !token.is_empty() && text.contains(token.as_str()) {
                    findings.push(ScanFinding {
                        file: path.display().to_string(),
                        token: token.clone(),
                    });
                }
            }
        }
    }
    findings.sort_by(|a, b| (&a.file, &a.token).cmp(&(&b.file, &b.token)));
    Ok(findings)
}
