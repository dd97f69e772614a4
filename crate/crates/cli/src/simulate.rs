//! Seeded synthetic OSV snapshots for demos and end-to-end tests.
//!
//! Daily malware and vulnerability counts per ecosystem follow Poisson draws
//! around AR(1) log-intensities. Vulnerability records carry advisory and
//! article references; malware intensity responds to the previous day's
//! malware advisories.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Result};
use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::Serialize;
use serde_json::json;

use ecomal::osv::Ecosystem;

use crate::output::create;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub seed: u64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Mean records per day across all ecosystems.
    pub daily_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimulationStats {
    pub records: usize,
    pub malware: usize,
    pub out_of_scope: usize,
}

/// Relative weight of each studied ecosystem and its malware propensity.
const PROFILE: [(Ecosystem, f64, f64); 6] = [
    (Ecosystem::Npm, 0.34, 0.8),
    (Ecosystem::PyPi, 0.24, 0.6),
    (Ecosystem::RubyGems, 0.1, 0.45),
    (Ecosystem::Maven, 0.14, 0.05),
    (Ecosystem::Go, 0.12, 0.05),
    (Ecosystem::Cran, 0.06, 0.02),
];

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Writes one JSON file per record under `dest/<ecosystem>/`.
pub fn simulate_snapshot(spec: &SimulationSpec, dest: &Path) -> Result<SimulationStats> {
    if spec.start > spec.end {
        bail!("simulation window is empty");
    }
    if !(spec.daily_rate > 0.0 && spec.daily_rate.is_finite()) {
        bail!("daily rate must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let shock = Normal::new(0.0, 0.35).expect("valid sigma");
    let mut level = [0.0f64; 6];
    let mut prev_advisories = [0u64; 6];
    let mut stats = SimulationStats::default();
    let mut serial = 0u64;

    let mut day = spec.start;
    while day <= spec.end {
        for (i, &(eco, weight, mal_prop)) in PROFILE.iter().enumerate() {
            level[i] = 0.7 * level[i] + shock.sample(&mut rng);
            let base = spec.daily_rate * weight * level[i].exp();
            let n_vuln = poisson(&mut rng, base * (1.0 - mal_prop));
            let boost = 1.0 + 0.1 * prev_advisories[i] as f64;
            let n_mal = poisson(&mut rng, base * mal_prop * boost.min(3.0));
            let mut advisories = 0;
            for k in 0..n_vuln + n_mal {
                serial += 1;
                let malware = k >= n_vuln;
                let id = if malware {
                    format!("MAL-{}-{serial}", day.year())
                } else {
                    format!("GHSA-sim{serial:06}")
                };
                let mut refs = Vec::new();
                let (adv_mean, art_prob) = if malware { (0.5, 0.15) } else { (0.8, 0.3) };
                let n_adv = poisson(&mut rng, adv_mean);
                if malware {
                    advisories += n_adv;
                }
                for j in 0..n_adv {
                    refs.push(json!({"type": "ADVISORY", "url": format!("https://example.org/adv/{serial}/{j}")}));
                }
                if rng.random_bool(art_prob) {
                    refs.push(json!({"type": "ARTICLE", "url": format!("https://example.org/art/{serial}")}));
                }
                refs.push(
                    json!({"type": "WEB", "url": format!("https://example.org/pkg/{serial}")}),
                );
                let record = json!({
                    "schema_version": "1.6.0",
                    "id": id,
                    "modified": format!("{day}T12:00:00Z"),
                    "published": format!("{day}T06:00:00Z"),
                    "summary": if malware { "Malicious code in package" } else { "Vulnerability in package" },
                    "affected": [{"package": {"ecosystem": eco.as_str(), "name": format!("pkg-{serial}")}}],
                    "references": refs,
                });
                write_record(dest, eco.as_str(), &id, &record)?;
                stats.records += 1;
                stats.malware += usize::from(malware);
            }
            prev_advisories[i] = advisories;
        }
        if rng.random_bool(0.05) {
            serial += 1;
            let id = format!("RUSTSEC-sim-{serial}");
            let record = json!({
                "id": id,
                "modified": format!("{day}T00:00:00Z"),
                "published": format!("{day}T00:00:00Z"),
                "affected": [{"package": {"ecosystem": "crates.io", "name": format!("crate-{serial}")}}],
                "references": [],
            });
            write_record(dest, "crates.io", &id, &record)?;
            stats.records += 1;
            stats.out_of_scope += 1;
        }
        day = day.succ_opt().expect("date in range");
    }
    Ok(stats)
}

fn write_record(dest: &Path, ecosystem: &str, id: &str, record: &serde_json::Value) -> Result<()> {
    let mut out = create(&dest.join(ecosystem).join(format!("{id}.json")))?;
    serde_json::to_writer_pretty(&mut out, record)?;
    out.flush()?;
    Ok(())
}
