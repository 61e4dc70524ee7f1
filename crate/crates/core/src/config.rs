//! Flat `key=value` run configuration with dotted namespaces.
//!
//! ```text
//! # comment
//! mesh.h=0.01
//! data.family=rational_bump
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{make_initial_data, DataFamily, InitialDataSpec};
use crate::diagnostics::DiagnosticsConfig;
use crate::error::{Error, Result};
use crate::glimm::{MeshConfig, SamplingSequence, BOUNDARY_TOL};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub sampling: SamplingSequence,
    pub model: ModelParams,
    pub data: InitialDataSpec,
    pub diag: DiagnosticsConfig,
    pub boundary_tol: f64,
    pub snapshot_times: Vec<f64>,
    /// Cell width of the finite-volume oracle.
    pub oracle_dx: f64,
    /// Mesh widths of the refinement sweep.
    pub convergence_h: Vec<f64>,
    /// Similarity profile of the `riemann` subcommand: time and sample count.
    pub riemann_t: f64,
    pub riemann_samples: usize,
    pub riemann_theta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshConfig::default(),
            sampling: SamplingSequence::VanDerCorput,
            model: ModelParams::default(),
            data: InitialDataSpec::default(),
            diag: DiagnosticsConfig::default(),
            boundary_tol: BOUNDARY_TOL,
            snapshot_times: Vec::new(),
            oracle_dx: 1e-3,
            convergence_h: vec![0.04, 0.02, 0.01],
            riemann_t: 0.2,
            riemann_samples: 401,
            riemann_theta: 0.0,
        }
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| format!("expected a number, got `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.trim() {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(parse_f64).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_table(v: &str) -> std::result::Result<Vec<[f64; 3]>, String> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|row| {
            let parts: Vec<&str> = row.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("table row `{row}` must be x:v:u"));
            }
            Ok([parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?])
        })
        .collect()
}

pub const KEYS: &[&str] = &[
    "mesh.h",
    "mesh.lambda",
    "mesh.X",
    "mesh.T",
    "mesh.boundary_tol",
    "sampling.kind",
    "sampling.seed",
    "model.rho0",
    "model.source",
    "model.theta",
    "data.family",
    "data.a",
    "data.b",
    "data.p",
    "data.shift",
    "data.mass",
    "data.left_v",
    "data.left_u",
    "data.right_v",
    "data.right_u",
    "data.table",
    "diag.kappa",
    "diag.every",
    "output.snapshots",
    "oracle.dx",
    "convergence.h",
    "riemann.t",
    "riemann.samples",
    "riemann.theta",
];

impl RunConfig {
    /// Set one key; the message names the offending key or value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "mesh.h" => self.mesh.h = parse_f64(v)?,
            "mesh.lambda" => self.mesh.lambda_cfl = parse_f64(v)?,
            "mesh.X" => self.mesh.x_half = parse_f64(v)?,
            "mesh.T" => self.mesh.t_final = parse_f64(v)?,
            "mesh.boundary_tol" => self.boundary_tol = parse_f64(v)?,
            "sampling.kind" => {
                self.sampling = match v {
                    "van_der_corput" => SamplingSequence::VanDerCorput,
                    "prng" => SamplingSequence::SeededPrng {
                        seed: match self.sampling {
                            SamplingSequence::SeededPrng { seed } => seed,
                            _ => 0,
                        },
                    },
                    _ => return Err(format!("sampling.kind must be van_der_corput or prng, got `{v}`")),
                }
            }
            "sampling.seed" => {
                let seed = v.parse::<u64>().map_err(|_| format!("expected an unsigned integer, got `{v}`"))?;
                if let SamplingSequence::SeededPrng { .. } = self.sampling {
                    self.sampling = SamplingSequence::SeededPrng { seed };
                } else if seed != 0 {
                    self.sampling = SamplingSequence::SeededPrng { seed };
                }
            }
            "model.rho0" => self.model.rho0 = parse_f64(v)?,
            "model.source" => self.model.source_enabled = parse_bool(v)?,
            "model.theta" => self.model.theta_enabled = parse_bool(v)?,
            "data.family" => {
                self.data.family = DataFamily::parse(v).ok_or_else(|| format!("unknown data family `{v}`"))?
            }
            "data.a" => self.data.a = parse_f64(v)?,
            "data.b" => self.data.b = parse_f64(v)?,
            "data.p" => self.data.p = parse_f64(v)?,
            "data.shift" => self.data.shift = parse_f64(v)?,
            "data.mass" => {
                self.data.mass = if v == "none" { None } else { Some(parse_f64(v)?) };
            }
            "data.left_v" => self.data.left[0] = parse_f64(v)?,
            "data.left_u" => self.data.left[1] = parse_f64(v)?,
            "data.right_v" => self.data.right[0] = parse_f64(v)?,
            "data.right_u" => self.data.right[1] = parse_f64(v)?,
            "data.table" => self.data.table = parse_table(v)?,
            "diag.kappa" => self.diag.kappa = parse_f64(v)?,
            "diag.every" => {
                self.diag.every = v.parse::<usize>().map_err(|_| format!("expected a positive integer, got `{v}`"))?
            }
            "output.snapshots" => self.snapshot_times = parse_list(v)?,
            "oracle.dx" => self.oracle_dx = parse_f64(v)?,
            "convergence.h" => self.convergence_h = parse_list(v)?,
            "riemann.t" => self.riemann_t = parse_f64(v)?,
            "riemann.samples" => {
                self.riemann_samples = v.parse::<usize>().map_err(|_| format!("expected an integer, got `{v}`"))?
            }
            "riemann.theta" => self.riemann_theta = parse_f64(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Apply an override of the form `key=value`.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k, v).map_err(|e| Error::Config(format!("--set {kv}: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let d = &self.data;
        Some(match key {
            "mesh.h" => self.mesh.h.to_string(),
            "mesh.lambda" => self.mesh.lambda_cfl.to_string(),
            "mesh.X" => self.mesh.x_half.to_string(),
            "mesh.T" => self.mesh.t_final.to_string(),
            "mesh.boundary_tol" => self.boundary_tol.to_string(),
            "sampling.kind" => match self.sampling {
                SamplingSequence::VanDerCorput => "van_der_corput".into(),
                SamplingSequence::SeededPrng { .. } => "prng".into(),
            },
            "sampling.seed" => match self.sampling {
                SamplingSequence::VanDerCorput => "0".into(),
                SamplingSequence::SeededPrng { seed } => seed.to_string(),
            },
            "model.rho0" => self.model.rho0.to_string(),
            "model.source" => self.model.source_enabled.to_string(),
            "model.theta" => self.model.theta_enabled.to_string(),
            "data.family" => d.family.name().into(),
            "data.a" => d.a.to_string(),
            "data.b" => d.b.to_string(),
            "data.p" => d.p.to_string(),
            "data.shift" => d.shift.to_string(),
            "data.mass" => d.mass.map_or("none".into(), |m| m.to_string()),
            "data.left_v" => d.left[0].to_string(),
            "data.left_u" => d.left[1].to_string(),
            "data.right_v" => d.right[0].to_string(),
            "data.right_u" => d.right[1].to_string(),
            "data.table" => d
                .table
                .iter()
                .map(|r| format!("{}:{}:{}", r[0], r[1], r[2]))
                .collect::<Vec<_>>()
                .join(";"),
            "diag.kappa" => self.diag.kappa.to_string(),
            "diag.every" => self.diag.every.to_string(),
            "output.snapshots" => fmt_list(&self.snapshot_times),
            "oracle.dx" => self.oracle_dx.to_string(),
            "convergence.h" => fmt_list(&self.convergence_h),
            "riemann.t" => self.riemann_t.to_string(),
            "riemann.samples" => self.riemann_samples.to_string(),
            "riemann.theta" => self.riemann_theta.to_string(),
            _ => return None,
        })
    }

    /// Every key, one per line, in a fixed order.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k}={}", self.get(k).expect("listed key"));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.model.validate()?;
        make_initial_data(&self.data).map_err(|e| match e {
            Error::Config(_) | Error::DecayHypothesis(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        if !(self.diag.kappa > 0.0) {
            return Err(Error::Config(format!("diag.kappa = {} must be positive", self.diag.kappa)));
        }
        if self.diag.every == 0 {
            return Err(Error::Config("diag.every must be at least 1".into()));
        }
        if !(self.boundary_tol >= 0.0) {
            return Err(Error::Config("mesh.boundary_tol must be >= 0".into()));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.mesh.t_final))
        {
            return Err(Error::Config(format!("output.snapshots: time {t} outside [0, mesh.T]")));
        }
        if !(self.oracle_dx > 0.0) {
            return Err(Error::Config("oracle.dx must be positive".into()));
        }
        if self.convergence_h.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Config("convergence.h entries must be positive".into()));
        }
        if !(self.riemann_t > 0.0) || self.riemann_samples < 2 {
            return Err(Error::Config("riemann.t must be positive and riemann.samples >= 2".into()));
        }
        Ok(())
    }
}
