//! JSON experiment configuration and its validation.
//!
//! Every numeric field is range-checked here against the preconditions of
//! the library operations it feeds, so invalid configs fail fast with exit
//! code 2 before any computation starts.

use magscatter::fields::{make_grid, Grid, PotentialSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, magscatter::MagError> {
        make_grid(self.dim, self.half_width, self.points_per_axis)
    }
}

fn zero_spec() -> PotentialSpec {
    PotentialSpec::Zero
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default = "zero_spec")]
    pub v: PotentialSpec,
    #[serde(default = "zero_spec")]
    pub w: PotentialSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub k_list: Option<Vec<f64>>,
    #[serde(default)]
    pub theta: Option<[f64; 3]>,
}

impl WaveConfig {
    pub fn ks(&self) -> Vec<f64> {
        match (&self.k, &self.k_list) {
            (Some(k), None) => vec![*k],
            (None, Some(l)) => l.clone(),
            (Some(k), Some(l)) => {
                let mut v = vec![*k];
                v.extend(l);
                v
            }
            (None, None) => vec![],
        }
    }

    pub fn theta_or_default(&self) -> [f64; 3] {
        self.theta.unwrap_or([1.0, 0.0, 0.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    BornSeries,
    Direct,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_terms() -> usize {
    60
}
fn default_max_iters() -> usize {
    400
}
fn default_delta() -> f64 {
    1.0
}
fn default_method() -> SolverMethod {
    SolverMethod::Direct
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: SolverMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Weight exponent δ for the convergence norm L²_{-δ} and diagnostics.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: default_method(),
            tol: default_tol(),
            max_terms: default_max_terms(),
            max_iters: default_max_iters(),
            delta: default_delta(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornConfig {
    /// Defaults to k/16 when absent.
    #[serde(default)]
    pub pv_shell_gap: Option<f64>,
    /// 2D: number of circle angles; 3D: polar order of the lat-long product.
    #[serde(default)]
    pub angular_order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    K,
    Resolution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvertSource {
    Born,
    Solver,
}

fn default_invert_source() -> InvertSource {
    InvertSource::Born
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub output_grid: GridConfig,
    pub k_list: Vec<f64>,
    pub n_directions: usize,
    #[serde(default = "default_invert_source")]
    pub source: InvertSource,
}

fn default_n_directions() -> usize {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub wave: WaveConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub born: BornConfig,
    /// Direction count for amplitude tables (2D circle / 3D polar order).
    #[serde(default = "default_n_directions")]
    pub n_directions: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub invert: Option<InvertConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let grid = self.grid.build().map_err(|e| e.to_string())?;
        self.potential.v.validate(&grid).map_err(|e| e.to_string())?;
        self.potential.w.validate(&grid).map_err(|e| e.to_string())?;

        let ks = self.wave.ks();
        if ks.is_empty() {
            return Err("wave: either k or k_list is required".into());
        }
        if ks.iter().any(|&k| !(k > 0.0)) {
            return Err("wave: every k must be positive".into());
        }
        let th = self.wave.theta_or_default();
        let n = (th[0] * th[0] + th[1] * th[1] + th[2] * th[2]).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(format!("wave: theta must be a unit vector, |theta| = {n}"));
        }
        if grid.dim == 2 && th[2] != 0.0 {
            return Err("wave: 2D theta must have zero z component".into());
        }

        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(format!("solver: tol must be in (0, 1), got {}", s.tol));
        }
        if s.max_terms < 2 || s.max_iters < 1 {
            return Err("solver: max_terms >= 2 and max_iters >= 1 required".into());
        }
        if !(s.delta > 0.0) {
            return Err("solver: delta must be positive".into());
        }

        if let Some(gap) = self.born.pv_shell_gap {
            let kmin = ks.iter().cloned().fold(f64::INFINITY, f64::min);
            if !(gap > 0.0 && gap < kmin / 4.0) {
                return Err(format!("born: pv_shell_gap must lie in (0, k/4), got {gap}"));
            }
        }
        if let Some(order) = self.born.angular_order {
            if order < 4 {
                return Err("born: angular_order must be >= 4".into());
            }
        }
        if self.n_directions < 4 {
            return Err("n_directions must be >= 4".into());
        }

        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err("sweep: values must be non-empty".into());
            }
            if sw.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err("sweep: values must be strictly increasing".into());
            }
            if sw.axis == SweepAxis::Resolution
                && sw.values.iter().any(|&v| v.fract() != 0.0 || v < 8.0 || (v as usize) % 2 != 0)
            {
                return Err("sweep: resolution values must be even integers >= 8".into());
            }
            if sw.values.iter().any(|&v| !(v > 0.0)) {
                return Err("sweep: values must be positive".into());
            }
        }

        if let Some(inv) = &self.invert {
            inv.output_grid.build().map_err(|e| e.to_string())?;
            if inv.k_list.len() < 3 {
                return Err("invert: k_list needs at least 3 values".into());
            }
            if inv.k_list.iter().any(|&k| !(k > 0.0)) {
                return Err("invert: every k must be positive".into());
            }
            if inv.n_directions < 4 {
                return Err("invert: n_directions must be >= 4".into());
            }
        }
        Ok(())
    }
}
