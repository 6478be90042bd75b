//! TOML configuration files for the command-line tools.
//!
//! A config names a built-in preset and overrides any subset of its
//! parameters:
//!
//! ```toml
//! [problem]
//! kind = "hertz"          # hertz | groove-fig7 | groove-fig8
//! b = 1.0
//!
//! [mesh]
//! density = 15
//! order = 2               # 1 = linear, 2 = quadratic triangles
//! growth = 1.35
//!
//! [material.body1]
//! e = 1.0
//! nu = 0.3
//! e-ratio = 2.0
//! g-ratio = 2.0
//! hypothesis = "plane-stress"
//!
//! [contact]
//! gap = { kind = "parabolic", r = 1e-3, b = 1.0 }
//!
//! [scheme]
//! policy = "segment"      # none | all | segment | active-set
//! segment = [0.0, 1.0]    # in units of b
//! gamma = 0.72
//! c = 0.05
//! eps-u = 1e-3
//! max-iter = 400
//!
//! [sweep]
//! gamma-min = 0.02
//! gamma-max = 1.4
//! gamma-step = 0.02
//! c-list = [0.1, 0.01]
//! density-list = [32, 64]
//! eps-list = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
//! ```
//!
//! Unknown keys are rejected. Missing sections fall back to the preset.

use super::{ExperimentSpec, MaterialSpec, ProblemKind};
use crate::contact::{GapFunction, SubareaPolicy};
use crate::material::PlaneHypothesis;
use crate::mesh::ElementOrder;
use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    problem: Option<ProblemSection>,
    mesh: Option<MeshSection>,
    material: Option<MaterialSections>,
    contact: Option<ContactSection>,
    scheme: Option<SchemeSection>,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ProblemSection {
    kind: Option<String>,
    b: Option<f64>,
    r_coef: Option<f64>,
    delta_coef: Option<f64>,
    l_coef: Option<f64>,
    h_coef: Option<f64>,
    q_coef: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct MeshSection {
    density: Option<usize>,
    order: Option<u8>,
    growth: Option<f64>,
    fine_rows: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct MaterialSections {
    body1: Option<MaterialSection>,
    body2: Option<MaterialSection>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct MaterialSection {
    e: Option<f64>,
    nu: Option<f64>,
    nu_t: Option<f64>,
    e_ratio: Option<f64>,
    g_ratio: Option<f64>,
    hypothesis: Option<PlaneHypothesis>,
}

impl MaterialSection {
    fn apply(&self, base: &mut MaterialSpec) {
        if let Some(v) = self.e {
            base.e = v;
        }
        if let Some(v) = self.nu {
            base.nu = v;
            base.nu_t = self.nu_t.unwrap_or(v);
        }
        if let Some(v) = self.nu_t {
            base.nu_t = v;
        }
        if let Some(v) = self.e_ratio {
            base.e_ratio = v;
        }
        if let Some(v) = self.g_ratio {
            base.g_ratio = v;
        }
        if let Some(v) = self.hypothesis {
            base.hypothesis = v;
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ContactSection {
    gap: Option<GapFunction>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SchemeSection {
    policy: Option<String>,
    /// Fixed-segment bounds in units of b.
    segment: Option<[f64; 2]>,
    gamma: Option<f64>,
    oracle_gamma: Option<f64>,
    c: Option<f64>,
    eps_u: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SweepSection {
    gamma_min: Option<f64>,
    gamma_max: Option<f64>,
    gamma_step: Option<f64>,
    c_list: Option<Vec<f64>>,
    density_list: Option<Vec<usize>>,
    eps_list: Option<Vec<f64>>,
}

/// Sweep grids resolved from the config (or their defaults).
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub gamma_grid: Vec<f64>,
    pub c_list: Vec<f64>,
    pub density_list: Vec<usize>,
    pub eps_list: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            gamma_grid: gamma_grid(0.02, 1.4, 0.02),
            c_list: vec![0.1, 0.01],
            density_list: vec![32, 64],
            eps_list: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        }
    }
}

fn gamma_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let n = ((max - min) / step).round() as usize;
    for k in 0..=n {
        let g = min + step * k as f64;
        if g <= max + 1e-12 {
            v.push(g);
        }
    }
    v
}

/// A parsed configuration: the experiment spec, the scheme policy and the
/// sweep grids.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub spec: ExperimentSpec,
    pub policy: SubareaPolicy,
    pub sweep: SweepSettings,
}

/// Loads a TOML config file on top of its preset.
pub fn load_spec(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub(crate) fn parse_config(text: &str) -> Result<LoadedConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;

    let kind = file
        .problem
        .as_ref()
        .and_then(|p| p.kind.clone())
        .unwrap_or_else(|| "hertz".to_string());
    let mut spec = match kind.as_str() {
        "hertz" => ExperimentSpec::hertz(),
        "groove-fig7" => ExperimentSpec::groove_fig7(),
        "groove" | "groove-fig8" => ExperimentSpec::groove_fig8(),
        other => {
            return Err(Error::Config(format!(
                "unknown problem kind '{other}' (expected hertz, groove-fig7 or groove-fig8)"
            )))
        }
    };

    if let Some(p) = &file.problem {
        if let Some(v) = p.b {
            spec.b = v;
        }
        if let Some(v) = p.r_coef {
            spec.r_coef = v;
        }
        if let Some(v) = p.delta_coef {
            spec.delta_coef = v;
        }
        if let Some(v) = p.l_coef {
            spec.l_coef = v;
        }
        if let Some(v) = p.h_coef {
            spec.h_coef = v;
        }
        if let Some(v) = p.q_coef {
            spec.q_coef = v;
        }
    }
    if let Some(m) = &file.mesh {
        if let Some(v) = m.density {
            spec.density = v;
        }
        if let Some(v) = m.order {
            spec.order = match v {
                1 => ElementOrder::Linear,
                2 => ElementOrder::Quadratic,
                other => {
                    return Err(Error::Config(format!(
                        "element order must be 1 or 2, got {other}"
                    )))
                }
            };
        }
        if let Some(v) = m.growth {
            spec.growth = v;
        }
        if let Some(v) = m.fine_rows {
            spec.fine_rows = v;
        }
    }
    if let Some(m) = &file.material {
        if let Some(b1) = &m.body1 {
            b1.apply(&mut spec.materials[0]);
            // body2 follows body1 unless overridden separately
            b1.apply(&mut spec.materials[1]);
        }
        if let Some(b2) = &m.body2 {
            b2.apply(&mut spec.materials[1]);
        }
    }
    if let Some(c) = &file.contact {
        if let Some(g) = c.gap {
            spec.gap_override = Some(g);
        }
    }

    let mut policy = match spec.problem {
        ProblemKind::HertzTransversal => SubareaPolicy::FixedSegment {
            start: 0.0,
            end: spec.b,
        },
        ProblemKind::Groove => SubareaPolicy::ActiveSet,
    };
    if let Some(s) = &file.scheme {
        if let Some(v) = s.c {
            spec.c = v;
        }
        if let Some(v) = s.gamma {
            spec.gamma = v;
        }
        if let Some(v) = s.oracle_gamma {
            spec.oracle_gamma = v;
        }
        if let Some(v) = s.eps_u {
            spec.eps_u = v;
        }
        if let Some(v) = s.max_iter {
            spec.max_iter = v;
        }
        if let Some(name) = &s.policy {
            policy = match name.as_str() {
                "none" => SubareaPolicy::None,
                "all" => SubareaPolicy::All,
                "active-set" => SubareaPolicy::ActiveSet,
                "segment" => {
                    let seg = s.segment.ok_or_else(|| {
                        Error::Config("policy 'segment' needs segment = [lo, hi]".into())
                    })?;
                    SubareaPolicy::FixedSegment {
                        start: seg[0] * spec.b,
                        end: seg[1] * spec.b,
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown policy '{other}' (expected none, all, segment or active-set)"
                    )))
                }
            };
        }
    }

    let mut sweep = SweepSettings::default();
    if let Some(s) = &file.sweep {
        let min = s.gamma_min.unwrap_or(0.02);
        let max = s.gamma_max.unwrap_or(1.4);
        let step = s.gamma_step.unwrap_or(0.02);
        if !(step > 0.0 && min > 0.0 && max > min) {
            return Err(Error::Config("invalid gamma grid".into()));
        }
        sweep.gamma_grid = gamma_grid(min, max, step);
        if let Some(v) = &s.c_list {
            sweep.c_list = v.clone();
        }
        if let Some(v) = &s.density_list {
            sweep.density_list = v.clone();
        }
        if let Some(v) = &s.eps_list {
            sweep.eps_list = v.clone();
        }
    }

    spec.validate()?;
    Ok(LoadedConfig {
        spec,
        policy,
        sweep,
    })
}
