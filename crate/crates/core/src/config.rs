//! Run configuration: plain-text TOML with `key = value` sections.
//!
//! Every section except `[geometry]` has defaults. Unknown keys are
//! rejected so typos fail loudly instead of silently falling back.

use crate::error::{CoreError, Result};
use crate::geometry::{CellGeometry, Grid, ProfileSlab};
use crate::potential::PotentialSpec;
use crate::eigensolver::EigenOpts;
use crate::threshold::ThresholdConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// "straight_strip" or "custom".
    pub kind: String,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub a_minus: f64,
    #[serde(default)]
    pub a_plus: f64,
    #[serde(default = "default_one")]
    pub x2_zero: f64,
    #[serde(default = "default_one")]
    pub x2_inf: f64,
    /// Slabs `[x2_lo, x2_hi, left, right]` for the upper transition band.
    #[serde(default)]
    pub upper_profile: Vec<[f64; 4]>,
    #[serde(default)]
    pub lower_profile: Vec<[f64; 4]>,
}

fn default_d() -> f64 {
    1.0
}
fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// "zero", "gaussian", or "table".
    #[serde(default = "default_zero_kind")]
    pub kind: String,
    #[serde(default)]
    pub amp: f64,
    #[serde(default)]
    pub x1_0: f64,
    #[serde(default)]
    pub x2_0: f64,
    #[serde(default = "default_sigma")]
    pub sigma1: f64,
    #[serde(default = "default_sigma")]
    pub sigma2: f64,
    /// Support bound; defaults to the geometry's x2_inf when 0.
    #[serde(default)]
    pub support: f64,
    #[serde(default)]
    pub table_path: Option<PathBuf>,
}

fn default_zero_kind() -> String {
    "zero".into()
}
fn default_sigma() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    /// Row half-count; 0 picks `h2 ~ h1`.
    #[serde(default)]
    pub n2_half: usize,
    #[serde(default = "default_mode_cut")]
    pub mode_cut: usize,
}

fn default_n1() -> usize {
    64
}
fn default_x_max() -> f64 {
    4.0
}
fn default_mode_cut() -> usize {
    32
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n1: default_n1(), x_max: default_x_max(), n2_half: 0, mode_cut: default_mode_cut() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_krylov")]
    pub krylov_dim: usize,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
    #[serde(default = "default_fixed_point")]
    pub max_fixed_point: usize,
    /// "mode_matched" (default) or "dirichlet".
    #[serde(default = "default_bc")]
    pub bc: String,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_krylov() -> usize {
    40
}
fn default_restarts() -> usize {
    12
}
fn default_fixed_point() -> usize {
    60
}
fn default_bc() -> String {
    "mode_matched".into()
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            krylov_dim: default_krylov(),
            max_restarts: default_restarts(),
            max_fixed_point: default_fixed_point(),
            bc: default_bc(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_tau_count")]
    pub tau_count: usize,
}

fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.3, 0.2, 0.15]
}
fn default_tau_count() -> usize {
    17
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { eps_list: default_eps_list(), tau_count: default_tau_count() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    #[serde(default = "default_window_scale")]
    pub window_scale: f64,
    #[serde(default = "default_floor_mult")]
    pub floor_mult: f64,
    #[serde(default = "default_shrink")]
    pub shrink_ratio: f64,
    #[serde(default = "default_flatness")]
    pub flatness: f64,
}

fn default_window_scale() -> f64 {
    1.0
}
fn default_floor_mult() -> f64 {
    50.0
}
fn default_shrink() -> f64 {
    0.3
}
fn default_flatness() -> f64 {
    0.5
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            window_scale: default_window_scale(),
            floor_mult: default_floor_mult(),
            shrink_ratio: default_shrink(),
            flatness: default_flatness(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CoreError::Config(e.to_string()))
    }

    pub fn build_geometry(&self) -> Result<CellGeometry> {
        let g = &self.geometry;
        match g.kind.as_str() {
            "straight_strip" => Ok(CellGeometry::straight_strip()),
            "custom" => {
                let slab = |s: &[f64; 4]| ProfileSlab {
                    x2_lo: s[0],
                    x2_hi: s[1],
                    left: s[2],
                    right: s[3],
                };
                CellGeometry::new(
                    g.d,
                    g.a_minus,
                    g.a_plus,
                    g.x2_zero,
                    g.x2_inf,
                    g.upper_profile.iter().map(slab).collect(),
                    g.lower_profile.iter().map(slab).collect(),
                )
            }
            other => Err(CoreError::Config(format!(
                "geometry.kind must be \"straight_strip\" or \"custom\", got {other:?}"
            ))),
        }
    }

    pub fn build_grid(&self, geom: &CellGeometry) -> Result<Grid> {
        let gs = &self.grid;
        let n2_half = if gs.n2_half == 0 {
            ((gs.x_max * gs.n1 as f64 / geom.d).round() as usize).max(2)
        } else {
            gs.n2_half
        };
        Grid::new(geom.d, gs.n1, gs.x_max, n2_half)
    }

    pub fn build_potential(&self, geom: &CellGeometry, grid: &Grid) -> Result<PotentialSpec> {
        let p = &self.potential;
        let support = if p.support > 0.0 { p.support } else { geom.x2_inf };
        match p.kind.as_str() {
            "zero" => Ok(PotentialSpec::Zero),
            "gaussian" => {
                PotentialSpec::gaussian(p.amp, p.x1_0, p.x2_0, p.sigma1, p.sigma2, geom.d, support)
            }
            "table" => {
                let path = p.table_path.as_ref().ok_or_else(|| {
                    CoreError::Config("potential.kind = \"table\" needs table_path".into())
                })?;
                PotentialSpec::from_table_file(path, grid, support)
            }
            other => Err(CoreError::Config(format!(
                "potential.kind must be \"zero\", \"gaussian\", or \"table\", got {other:?}"
            ))),
        }
    }

    pub fn eigen_opts(&self) -> EigenOpts {
        EigenOpts {
            tol: self.solver.tol,
            krylov_dim: self.solver.krylov_dim,
            max_restarts: self.solver.max_restarts,
            max_fixed_point: self.solver.max_fixed_point,
        }
    }

    pub fn threshold_config(&self) -> ThresholdConfig {
        ThresholdConfig {
            window_scale: self.threshold.window_scale,
            floor_mult: self.threshold.floor_mult,
            shrink_ratio: self.threshold.shrink_ratio,
            flatness: self.threshold.flatness,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg: RunConfig = toml::from_str("[geometry]\nkind = \"straight_strip\"\n").unwrap();
        assert_eq!(cfg.grid.n1, 64);
        assert_eq!(cfg.sweep.eps_list.len(), 4);
        let geom = cfg.build_geometry().unwrap();
        assert_eq!(geom.d, 1.0);
        let grid = cfg.build_grid(&geom).unwrap();
        assert_eq!(grid.n2_half, 256); // h2 ~ h1
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunConfig, _> =
            toml::from_str("[geometry]\nkind = \"straight_strip\"\ntypo_key = 3\n");
        assert!(r.is_err());
        let r: std::result::Result<RunConfig, _> =
            toml::from_str("[geometry]\nkind = \"straight_strip\"\n[solver]\ntolerance = 1e-8\n");
        assert!(r.is_err(), "misspelled solver key must be rejected");
    }

    #[test]
    fn geometry_is_required() {
        let r: std::result::Result<RunConfig, _> = toml::from_str("[grid]\nn1 = 32\n");
        assert!(r.is_err());
    }
}
