//! Report files, CSV exports and run manifests for the command-line
//! front end.
//!
//! Report files are deterministic: identical inputs and seeds produce
//! byte-identical JSON and CSV. Run metadata that varies between runs
//! (wall-clock duration) lives in the manifest, which is printed to
//! stderr rather than written into any artifact.

use paced_auctions::jsonio::to_json_string;
use paced_auctions::{
    AuctionInstance, EquilibriumReport, PacingProfile, RevenueReport, SolveOptions,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Persisted output of `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReportFile {
    pub instance: AuctionInstance,
    pub options: SolveOptions,
    pub report: EquilibriumReport,
}

/// Persisted output of `simulate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReportFile {
    pub instance: AuctionInstance,
    pub profile: PacingProfile,
    pub report: RevenueReport,
}

/// A profile argument accepts either a bare profile document or a solve
/// report, whose computed profile is used.
pub fn parse_profile_document(body: &str) -> Result<PacingProfile, String> {
    if let Ok(report) = serde_json::from_str::<SolveReportFile>(body) {
        return Ok(report.report.profile);
    }
    serde_json::from_str::<PacingProfile>(body)
        .map_err(|e| format!("profile file is neither a solve report nor a profile: {e}"))
}

/// Content hash of an instance: SHA-256 over its canonical full-precision
/// JSON. Stable under serialize/parse round trips.
pub fn instance_digest(instance: &AuctionInstance) -> String {
    let body = to_json_string(instance).expect("instance serializes");
    let mut hasher = Sha256::new();
    hasher.update(body.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// One-line run record, printed to stderr at the end of every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub instance_digest: Option<String>,
    pub options: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub duration_seconds: f64,
    pub outcome: String,
}

impl RunManifest {
    pub fn emit(&self) {
        eprintln!(
            "{}",
            serde_json::to_string(self).expect("manifest serializes")
        );
    }
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// CSV of buyer weight vectors and their paced images:
/// `w1,w2,B,t,pw1,pw2`. Two-feature instances only.
pub fn export_paced_vectors(
    instance: &AuctionInstance,
    profile: &PacingProfile,
) -> Result<String, String> {
    if instance.d() != 2 {
        return Err(format!(
            "paced-vectors export needs a two-feature instance, got d = {}",
            instance.d()
        ));
    }
    let mut out = String::from("w1,w2,B,t,pw1,pw2\n");
    for (buyer, t) in instance.buyers().iter().zip(&profile.multipliers) {
        let (w1, w2) = (buyer.weights[0], buyer.weights[1]);
        push_row(
            &mut out,
            &[
                w1.to_string(),
                w2.to_string(),
                buyer.budget.to_string(),
                t.to_string(),
                (w1 / (1.0 + t)).to_string(),
                (w2 / (1.0 + t)).to_string(),
            ],
        );
    }
    Ok(out)
}

/// CSV of the multiplicative shading factor per buyer: `w1,w2,factor`
/// with `factor = 1/(1+t)`.
pub fn export_shading_surface(
    instance: &AuctionInstance,
    profile: &PacingProfile,
) -> Result<String, String> {
    if instance.d() != 2 {
        return Err(format!(
            "shading-surface export needs a two-feature instance, got d = {}",
            instance.d()
        ));
    }
    let mut out = String::from("w1,w2,factor\n");
    for (buyer, t) in instance.buyers().iter().zip(&profile.multipliers) {
        push_row(
            &mut out,
            &[
                buyer.weights[0].to_string(),
                buyer.weights[1].to_string(),
                (1.0 / (1.0 + t)).to_string(),
            ],
        );
    }
    Ok(out)
}

/// CSV of per-type payments per format: `format,type,analytic,mc,se`.
pub fn export_revenue(report: &RevenueReport) -> String {
    let mut out = String::from("format,type,analytic,mc,se\n");
    for format in &report.formats {
        for ty in 0..format.per_type_analytic.len() {
            push_row(
                &mut out,
                &[
                    format.format.tag().to_string(),
                    ty.to_string(),
                    format.per_type_analytic[ty].to_string(),
                    format.per_type_mc[ty].to_string(),
                    format.per_type_mc_se[ty].to_string(),
                ],
            );
        }
    }
    out
}

pub fn write_text(path: &Path, body: &str) -> std::io::Result<()> {
    std::fs::write(path, body)
}
