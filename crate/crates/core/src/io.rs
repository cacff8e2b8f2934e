//! File formats: profile, fuel-flow and trace CSVs, JSON documents and run
//! manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit for bit and repeated runs
//! produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::IoError;
use crate::profile::{FuelFlowRecord, DEFAULT_DT_H};
use crate::types::{FlightProfile, Phase, Schedule};

pub const PROFILE_HEADER: [&str; 3] = ["t_s", "demand_kw", "phase"];
pub const FUEL_FLOW_HEADER: [&str; 3] = ["t_s", "fuel_flow_kg_per_h", "phase"];
pub const TRACE_HEADER: [&str; 8] = [
    "t_s", "p_fc_kw", "p_li_kw", "p_al_kw", "soc_li", "soc_al", "h2_l", "al_active",
];

pub fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::File {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Rows of a headed CSV with their 1-based line numbers.
fn csv_rows(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(parse_err(1, format!("expected header '{}'", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn num(line: usize, field: &str, s: &str) -> Result<f64, IoError> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("{field}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{field} must be finite")));
    }
    Ok(v)
}

fn phase(line: usize, s: &str) -> Result<Phase, IoError> {
    s.parse().map_err(|e| parse_err(line, format!("{e}")))
}

pub fn parse_fuel_flow_csv(text: &str) -> Result<Vec<FuelFlowRecord>, IoError> {
    csv_rows(text, &FUEL_FLOW_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(FuelFlowRecord {
                t: num(line, "t_s", &f[0])? / 3600.0,
                fuel_flow: num(line, "fuel_flow_kg_per_h", &f[1])?,
                phase: phase(line, &f[2])?,
            })
        })
        .collect()
}

/// Profile CSV; the timestep is taken from the time column, or one minute
/// for a single-row file.
pub fn parse_profile_csv(text: &str, name: &str) -> Result<FlightProfile, IoError> {
    let rows = csv_rows(text, &PROFILE_HEADER)?;
    if rows.is_empty() {
        return Err(parse_err(2, "profile has no rows"));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut demand = Vec::with_capacity(rows.len());
    let mut phases = Vec::with_capacity(rows.len());
    for (line, f) in &rows {
        times.push(num(*line, "t_s", &f[0])?);
        let d = num(*line, "demand_kw", &f[1])?;
        if d < 0.0 {
            return Err(parse_err(*line, "demand_kw must be non-negative"));
        }
        demand.push(d);
        phases.push(phase(*line, &f[2])?);
    }
    let dt_s = if times.len() > 1 {
        times[1] - times[0]
    } else {
        DEFAULT_DT_H * 3600.0
    };
    if dt_s <= 0.0 {
        return Err(parse_err(rows[1].0, "time must increase"));
    }
    for (k, (line, _)) in rows.iter().enumerate() {
        let expect = times[0] + k as f64 * dt_s;
        if (times[k] - expect).abs() > 1e-6 * dt_s.max(1.0) {
            return Err(parse_err(*line, "time column must be uniformly spaced"));
        }
    }
    Ok(FlightProfile::new(name, dt_s / 3600.0, demand, phases).map_err(crate::error::ProfileError::from)?)
}

/// Step start in seconds, rounded to the microsecond so a one-minute grid
/// prints as whole numbers.
fn step_seconds(k: usize, dt_h: f64) -> f64 {
    (k as f64 * dt_h * 3600.0 * 1e6).round() / 1e6
}

pub fn profile_csv(p: &FlightProfile) -> String {
    let mut out = PROFILE_HEADER.join(",");
    out.push('\n');
    for (k, (d, ph)) in p.demand.iter().zip(&p.phase).enumerate() {
        let _ = writeln!(out, "{},{},{}", step_seconds(k, p.dt), d, ph);
    }
    out
}

/// Trace CSV with one row per step boundary. The final row carries only
/// the state columns.
pub fn trace_csv(s: &Schedule, dt: f64) -> String {
    let mut out = TRACE_HEADER.join(",");
    out.push('\n');
    let n = s.steps();
    for k in 0..=n {
        let t = step_seconds(k, dt);
        if k < n {
            let _ = writeln!(
                out,
                "{t},{},{},{},{},{},{},{}",
                s.p_fc[k],
                s.p_li[k],
                s.p_al[k],
                s.soc_li[k],
                s.soc_al[k],
                s.h2_volume[k],
                u8::from(s.al_active[k])
            );
        } else {
            let _ = writeln!(out, "{t},,,,{},{},{},", s.soc_li[k], s.soc_al[k], s.h2_volume[k]);
        }
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Schedule, IoError> {
    let rows = csv_rows(text, &TRACE_HEADER)?;
    if rows.is_empty() {
        return Err(parse_err(2, "trace has no rows"));
    }
    let n = rows.len() - 1;
    let mut s = Schedule {
        p_fc: Vec::with_capacity(n),
        p_li: Vec::with_capacity(n),
        p_al: Vec::with_capacity(n),
        soc_li: Vec::with_capacity(n + 1),
        soc_al: Vec::with_capacity(n + 1),
        h2_volume: Vec::with_capacity(n + 1),
        al_active: Vec::with_capacity(n),
    };
    for (k, (line, f)) in rows.iter().enumerate() {
        let line = *line;
        s.soc_li.push(num(line, "soc_li", &f[4])?);
        s.soc_al.push(num(line, "soc_al", &f[5])?);
        s.h2_volume.push(num(line, "h2_l", &f[6])?);
        if k == n {
            if f[1..4].iter().chain(&f[7..]).any(|v| !v.is_empty()) {
                return Err(parse_err(line, "final row must leave power and mode columns empty"));
            }
            continue;
        }
        s.p_fc.push(num(line, "p_fc_kw", &f[1])?);
        s.p_li.push(num(line, "p_li_kw", &f[2])?);
        s.p_al.push(num(line, "p_al_kw", &f[3])?);
        s.al_active.push(match f[7].as_str() {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("al_active: '{other}' is not 0 or 1"))),
        });
    }
    Ok(s)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    /// Input path -> SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    /// Every setting after defaults, config file and flags are applied.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Wall-clock seconds per stage; the only field that varies between runs.
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            seed: None,
            timings_s: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path, contents: &str) {
        self.inputs
            .insert(path.display().to_string(), sha256_hex(contents.as_bytes()));
    }

    pub fn record_output(&mut self, path: &Path, contents: &str) {
        self.outputs
            .insert(path.display().to_string(), sha256_hex(contents.as_bytes()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trip_is_exact() {
        let p = FlightProfile::new(
            "x",
            1.0 / 60.0,
            vec![60.0, 133.33333333333334, 0.1 + 0.2],
            vec![Phase::Taxi, Phase::Takeoff, Phase::Climb],
        )
        .unwrap();
        let text = profile_csv(&p);
        assert!(text.starts_with("t_s,demand_kw,phase\n0,60,taxi\n60,"));
        let back = parse_profile_csv(&text, "x").unwrap();
        assert_eq!(back.demand, p.demand);
        assert_eq!(back.phase, p.phase);
        assert!((back.dt - p.dt).abs() < 1e-15);
    }

    #[test]
    fn fuel_flow_errors_name_the_line() {
        let text = "t_s,fuel_flow_kg_per_h,phase\n0,100,cruise\n60,100,hover\n";
        match parse_fuel_flow_csv(text) {
            Err(IoError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("hover"));
            }
            other => panic!("{other:?}"),
        }
        let recs = parse_fuel_flow_csv("t_s,fuel_flow_kg_per_h,phase\n0,100,cruise\n3600,50,DESCENT\n").unwrap();
        assert_eq!(recs[1].t, 1.0);
        assert_eq!(recs[1].phase, Phase::Descent);
        assert!(parse_fuel_flow_csv("a,b,c\n").is_err());
        assert!(matches!(
            parse_fuel_flow_csv("t_s,fuel_flow_kg_per_h,phase\n0,x,cruise\n"),
            Err(IoError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let s = Schedule {
            p_fc: vec![100.0, 0.0],
            p_li: vec![-1.0 / 3.0, 5.0],
            p_al: vec![0.0, 95.0],
            soc_li: vec![1.0, 1.0000694444444444, 0.99],
            soc_al: vec![1.0, 1.0, 0.7],
            h2_volume: vec![300.0, 299.0, 299.0],
            al_active: vec![false, true],
        };
        let text = trace_csv(&s, 1.0 / 60.0);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER.join(","));
        assert!(text.lines().last().unwrap().starts_with("120,,,,"));
        assert_eq!(parse_trace_csv(&text).unwrap(), s);
    }

    #[test]
    fn nonuniform_profile_is_rejected() {
        let text = "t_s,demand_kw,phase\n0,1,taxi\n60,1,taxi\n150,1,taxi\n";
        assert!(matches!(parse_profile_csv(text, "x"), Err(IoError::Parse { line: 4, .. })));
    }

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
