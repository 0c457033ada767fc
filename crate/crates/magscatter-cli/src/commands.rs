//! Pipelines behind the subcommands: solve, amplitude, born, compare,
//! sweep, invert, export.

use crate::config::{ExperimentConfig, InvertSource, SolverMethod, SweepAxis};
use crate::formats;
use magscatter::born::{
    backscatter_born, born_amplitude, improved_backscatter_with, remainder_bound,
    second_order_fourier, invert_backscatter,
};
use magscatter::error::MagError;
use magscatter::farfield::{
    amplitude_integral, farfield_fit, AmplitudeMethod, AmplitudeRecord, DirectionSet,
};
use magscatter::fields::{
    check_conditions, sample_potential, weighted_norm, PotentialData, PotentialSpec, ScalarFamily,
    WeightedNormParams,
};
use magscatter::ls::{
    estimate_operator_norm, residual_pde, solve_born_series_in_mode, solve_direct_in_mode,
    verify_agmon_decay, LkContext, ScatteringSolution, WaveParams,
};
use magscatter::{Complex, QuadratureMode};
use serde_json::json;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum AppError {
    /// Bad config or arguments: exit code 2.
    Validation(String),
    /// Divergence, non-convergence, quadrature failure, IO trouble: exit 3.
    Numerical(String),
}

impl AppError {
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Validation(_) => "validation",
            AppError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Numerical(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 2,
            AppError::Numerical(_) => 3,
        }
    }
}

impl From<MagError> for AppError {
    fn from(e: MagError) -> Self {
        match e {
            MagError::InvalidGrid(_)
            | MagError::InvalidSpec(_)
            | MagError::InvalidArgument(_)
            | MagError::GridMismatch => AppError::Validation(e.to_string()),
            _ => AppError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Numerical(format!("io: {e}"))
    }
}

pub type AppResult<T> = Result<T, AppError>;

pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub cfg_bytes: Vec<u8>,
    pub out: PathBuf,
    pub mode: QuadratureMode,
}

impl RunContext {
    pub fn load(config_path: &Path, out: &Path, mode: QuadratureMode) -> AppResult<Self> {
        let cfg_bytes = std::fs::read(config_path)
            .map_err(|e| AppError::Validation(format!("cannot read config {}: {e}", config_path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_slice(&cfg_bytes)
            .map_err(|e| AppError::Validation(format!("config parse error: {e}")))?;
        cfg.validate().map_err(AppError::Validation)?;
        std::fs::create_dir_all(out)?;
        let ctx = RunContext { cfg, cfg_bytes, out: out.to_path_buf(), mode };
        // config echo: byte-identical copy of the input
        formats::atomic_write(&ctx.out.join("config.json"), &ctx.cfg_bytes)?;
        Ok(ctx)
    }

    fn potential(&self) -> AppResult<PotentialData> {
        let grid = self.cfg.grid.build()?;
        if self.mode == QuadratureMode::DenseQuadrature && grid.len() > 4096 {
            return Err(AppError::Validation(format!(
                "dense quadrature is O(N^2); limited to grids with at most 4096 points \
                 (this one has {})",
                grid.len()
            )));
        }
        Ok(sample_potential(&self.cfg.potential.v, &self.cfg.potential.w, &grid)?)
    }

    fn solve_one(&self, pot: &PotentialData, k: f64) -> AppResult<ScatteringSolution> {
        let wave = WaveParams { k, theta: self.cfg.wave.theta_or_default() };
        let s = &self.cfg.solver;
        let sol = match s.method {
            SolverMethod::BornSeries => {
                solve_born_series_in_mode(pot, &wave, s.max_terms, s.tol, s.delta, self.mode)?
            }
            SolverMethod::Direct => {
                solve_direct_in_mode(pot, &wave, s.tol, s.max_iters, self.mode)?
            }
        };
        Ok(sol)
    }

    fn pv_gap(&self, k: f64) -> f64 {
        self.cfg.born.pv_shell_gap.unwrap_or(k / 16.0)
    }

    fn angular_order(&self, dim: usize) -> usize {
        self.cfg.born.angular_order.unwrap_or(if dim == 2 { 64 } else { 16 })
    }

    fn direction_set(&self, dim: usize) -> AppResult<DirectionSet> {
        Ok(match dim {
            2 => DirectionSet::circle(self.cfg.n_directions)?,
            _ => DirectionSet::sphere(self.cfg.n_directions, 2 * self.cfg.n_directions)?,
        })
    }

    fn diagnostics(
        &self,
        pot: &PotentialData,
        sol: Option<&ScatteringSolution>,
        k: f64,
    ) -> AppResult<serde_json::Value> {
        let delta = self.cfg.solver.delta;
        let c1 = estimate_operator_norm(pot, k, delta, 20)?;
        let c0 = {
            let ctx = LkContext::new(pot, k, QuadratureMode::FftConvolution)?;
            let wave = WaveParams { k, theta: self.cfg.wave.theta_or_default() };
            let t = ctx.tilde_u0(&wave)?;
            weighted_norm(&t, &pot.grid, WeightedNormParams { p: 2.0, delta: -delta })?
        };
        let rb = if c1 < 1.0 { Some(remainder_bound(c0, c1)?) } else { None };
        let report = check_conditions(pot, 2.0, delta);
        let mut doc = json!({
            "tool_version": TOOL_VERSION,
            "k": k,
            "theta": self.cfg.wave.theta_or_default(),
            "operator_norm_estimate": c1,
            "c0": c0,
            "remainder_bound": rb,
            "condition_report": report,
        });
        if let Some(sol) = sol {
            doc["iterations"] = json!(sol.iterations);
            doc["linear_residual"] = json!(sol.linear_residual);
            doc["pde_residual"] = json!(residual_pde(sol, pot));
            doc["born_ratio_history"] = json!(sol.born_ratio_history);
        }
        Ok(doc)
    }

    fn write_json(&self, name: &str, doc: &serde_json::Value) -> AppResult<()> {
        let text = serde_json::to_string_pretty(doc).expect("serializable");
        formats::atomic_write(&self.out.join(name), text.as_bytes())?;
        Ok(())
    }
}

fn amplitude_row(rec: &AmplitudeRecord) -> Vec<String> {
    let method = match rec.method {
        AmplitudeMethod::VolumeIntegral => "volume_integral",
        AmplitudeMethod::FarfieldFit => "farfield_fit",
        AmplitudeMethod::BornFirstOrder => "born_first_order",
        AmplitudeMethod::BornImproved => "born_improved",
    };
    vec![
        formats::format_float(rec.k),
        formats::format_float(rec.theta[0]),
        formats::format_float(rec.theta[1]),
        formats::format_float(rec.theta[2]),
        formats::format_float(rec.theta_prime[0]),
        formats::format_float(rec.theta_prime[1]),
        formats::format_float(rec.theta_prime[2]),
        formats::format_float(rec.value.re),
        formats::format_float(rec.value.im),
        method.to_string(),
    ]
}

const AMPLITUDE_HEADER: [&str; 10] = [
    "k", "theta_x", "theta_y", "theta_z", "theta_prime_x", "theta_prime_y", "theta_prime_z",
    "re", "im", "method",
];

pub fn cmd_solve(ctx: &RunContext) -> AppResult<()> {
    let pot = ctx.potential()?;
    let k = ctx.cfg.wave.ks()[0];
    let sol = ctx.solve_one(&pot, k)?;
    formats::write_field_complex(&ctx.out.join("u_sc.bin"), &sol.grid, &sol.u_sc)?;
    let diag = ctx.diagnostics(&pot, Some(&sol), k)?;
    ctx.write_json("diagnostics.json", &diag)
}

pub fn cmd_amplitude(ctx: &RunContext) -> AppResult<()> {
    let pot = ctx.potential()?;
    let k = ctx.cfg.wave.ks()[0];
    let sol = ctx.solve_one(&pot, k)?;
    let dirs = ctx.direction_set(pot.grid.dim)?;
    let records = amplitude_integral(&sol, &pot, &dirs)?;
    let mut rows: Vec<Vec<String>> = records.iter().map(amplitude_row).collect();
    // far-field fit cross-check at backscattering, skipped when the grid is
    // too small for a clean fit window
    let theta = ctx.cfg.wave.theta_or_default();
    let tp = [-theta[0], -theta[1], -theta[2]];
    let l = pot.grid.half_width;
    let radii: Vec<f64> = (0..8).map(|i| (0.5 + 0.3 * i as f64 / 7.0) * l).collect();
    if let Ok(fit) = farfield_fit(&sol, &pot, k, &radii, tp) {
        rows.push(amplitude_row(&AmplitudeRecord {
            k,
            theta,
            theta_prime: tp,
            value: fit,
            method: AmplitudeMethod::FarfieldFit,
        }));
    }
    formats::write_csv(&ctx.out.join("amplitude.csv"), &AMPLITUDE_HEADER, &rows)?;
    formats::write_field_complex(&ctx.out.join("u_sc.bin"), &sol.grid, &sol.u_sc)?;
    let diag = ctx.diagnostics(&pot, Some(&sol), k)?;
    ctx.write_json("diagnostics.json", &diag)
}

pub fn cmd_born(ctx: &RunContext) -> AppResult<()> {
    let pot = ctx.potential()?;
    let k = ctx.cfg.wave.ks()[0];
    let theta = ctx.cfg.wave.theta_or_default();
    let dirs = ctx.direction_set(pot.grid.dim)?;
    let mut rows = Vec::new();
    for tp in &dirs.directions {
        let a = born_amplitude(&pot, k, theta, *tp)?;
        rows.push(amplitude_row(&AmplitudeRecord {
            k,
            theta,
            theta_prime: *tp,
            value: a,
            method: AmplitudeMethod::BornFirstOrder,
        }));
    }
    let tp = [-theta[0], -theta[1], -theta[2]];
    let gap = ctx.pv_gap(k);
    let order = ctx.angular_order(pot.grid.dim);
    let improved = improved_backscatter_with(&pot, k, theta, gap, order)?;
    rows.push(amplitude_row(&AmplitudeRecord {
        k,
        theta,
        theta_prime: tp,
        value: improved,
        method: AmplitudeMethod::BornImproved,
    }));
    formats::write_csv(&ctx.out.join("born.csv"), &AMPLITUDE_HEADER, &rows)?;
    let terms = second_order_fourier(&pot, k, theta, gap, order)?;
    ctx.write_json(
        "born.json",
        &json!({
            "tool_version": TOOL_VERSION,
            "k": k,
            "theta": theta,
            "pv_shell_gap": terms.pv_shell_gap,
            "angular_order": order,
            "i1": [terms.i1.re, terms.i1.im],
            "i2": [terms.i2.re, terms.i2.im],
            "i3": [terms.i3.re, terms.i3.im],
            "i4": [terms.i4.re, terms.i4.im],
        }),
    )
}

struct CompareRow {
    value: f64,
    err_born: f64,
    err_improved: f64,
    norm_estimate: f64,
    residual: f64,
    remainder: Option<f64>,
    agmon_ratio: f64,
}

const COMPARE_HEADER: [&str; 7] = [
    "value", "abs_err_born", "abs_err_improved", "norm_estimate", "residual", "remainder_bound",
    "agmon_ratio",
];

fn compare_row_strings(r: &CompareRow) -> Vec<String> {
    vec![
        formats::format_float(r.value),
        formats::format_float(r.err_born),
        formats::format_float(r.err_improved),
        formats::format_float(r.norm_estimate),
        formats::format_float(r.residual),
        r.remainder.map(formats::format_float).unwrap_or_default(),
        formats::format_float(r.agmon_ratio),
    ]
}

fn compare_at(ctx: &RunContext, pot: &PotentialData, k: f64, value: f64) -> AppResult<CompareRow> {
    let theta = ctx.cfg.wave.theta_or_default();
    let tp = [-theta[0], -theta[1], -theta[2]];
    let sol = ctx.solve_one(pot, k)?;
    let sphere = if pot.grid.dim == 2 { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
    let one = DirectionSet { dim: pot.grid.dim, directions: vec![tp], weights: vec![sphere] };
    let a = amplitude_integral(&sol, pot, &one)?[0].value;
    let ab = backscatter_born(pot, k, theta)?;
    let improved = improved_backscatter_with(pot, k, theta, ctx.pv_gap(k), ctx.angular_order(pot.grid.dim))?;
    let delta = ctx.cfg.solver.delta;
    let c1 = estimate_operator_norm(pot, k, delta, 20)?;
    let c0 = {
        let lk = LkContext::new(pot, k, QuadratureMode::FftConvolution)?;
        let wave = WaveParams { k, theta };
        let t = lk.tilde_u0(&wave)?;
        weighted_norm(&t, &pot.grid, WeightedNormParams { p: 2.0, delta: -delta })?
    };
    let remainder = if c1 < 1.0 { Some(remainder_bound(c0, c1)?) } else { None };
    let probe: Vec<Complex> = pot.q_tilde.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let agmon = verify_agmon_decay(&pot.grid, delta, &[k], &probe)?[0].1;
    Ok(CompareRow {
        value,
        err_born: (a - ab).norm(),
        err_improved: (a - improved).norm(),
        norm_estimate: c1,
        residual: sol.linear_residual,
        remainder,
        agmon_ratio: agmon,
    })
}

pub fn cmd_compare(ctx: &RunContext) -> AppResult<()> {
    let pot = ctx.potential()?;
    let mut rows = Vec::new();
    for &k in &ctx.cfg.wave.ks() {
        let row = compare_at(ctx, &pot, k, k)?;
        rows.push(compare_row_strings(&row));
    }
    formats::write_csv(&ctx.out.join("compare.csv"), &COMPARE_HEADER, &rows)?;
    let k = ctx.cfg.wave.ks()[0];
    let diag = ctx.diagnostics(&pot, None, k)?;
    ctx.write_json("diagnostics.json", &diag)
}

fn scale_family(f: &ScalarFamily, alpha: f64) -> ScalarFamily {
    match f {
        ScalarFamily::GaussianBump { amplitude, sigma, center } => {
            ScalarFamily::GaussianBump { amplitude: alpha * amplitude, sigma: *sigma, center: *center }
        }
        ScalarFamily::SmoothCompactBump { amplitude, radius, center } => ScalarFamily::SmoothCompactBump {
            amplitude: alpha * amplitude,
            radius: *radius,
            center: *center,
        },
        ScalarFamily::PowerTail { amplitude, sigma, mu, center } => ScalarFamily::PowerTail {
            amplitude: alpha * amplitude,
            sigma: *sigma,
            mu: *mu,
            center: *center,
        },
    }
}

fn scale_spec(spec: &PotentialSpec, alpha: f64) -> PotentialSpec {
    match spec {
        PotentialSpec::Zero => PotentialSpec::Zero,
        PotentialSpec::Scalar { profile } => PotentialSpec::Scalar { profile: scale_family(profile, alpha) },
        PotentialSpec::Components { profiles } => PotentialSpec::Components {
            profiles: profiles.iter().map(|p| scale_family(p, alpha)).collect(),
        },
        PotentialSpec::PureGauge { generator } => {
            PotentialSpec::PureGauge { generator: scale_family(generator, alpha) }
        }
    }
}

fn loglog_slope(values: &[f64], errs: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(errs)
        .filter(|&(&v, &e)| v > 0.0 && e > 0.0)
        .map(|(&v, &e)| (v.ln(), e.ln()))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

pub fn cmd_sweep(ctx: &RunContext) -> AppResult<()> {
    let sweep = ctx
        .cfg
        .sweep
        .as_ref()
        .ok_or_else(|| AppError::Validation("sweep command needs a `sweep` config block".into()))?
        .clone();
    let base_k = ctx.cfg.wave.ks()[0];
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut values_done = Vec::new();
    let mut errs_born = Vec::new();
    let mut errs_improved = Vec::new();
    let mut failure: Option<AppError> = None;

    for &value in &sweep.values {
        let result = (|| -> AppResult<CompareRow> {
            match sweep.axis {
                SweepAxis::Epsilon => {
                    let grid = ctx.cfg.grid.build()?;
                    let v = scale_spec(&ctx.cfg.potential.v, value);
                    let w = scale_spec(&ctx.cfg.potential.w, value);
                    let pot = sample_potential(&v, &w, &grid)?;
                    compare_at(ctx, &pot, base_k, value)
                }
                SweepAxis::K => {
                    let pot = ctx.potential()?;
                    compare_at(ctx, &pot, value, value)
                }
                SweepAxis::Resolution => {
                    let grid = magscatter::fields::make_grid(
                        ctx.cfg.grid.dim,
                        ctx.cfg.grid.half_width,
                        value as usize,
                    )?;
                    let pot = sample_potential(&ctx.cfg.potential.v, &ctx.cfg.potential.w, &grid)?;
                    compare_at(ctx, &pot, base_k, value)
                }
            }
        })();
        match result {
            Ok(row) => {
                values_done.push(row.value);
                errs_born.push(row.err_born);
                errs_improved.push(row.err_improved);
                rows.push(compare_row_strings(&row));
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if rows.len() >= 2 {
        let sb = loglog_slope(&values_done, &errs_born);
        let si = loglog_slope(&values_done, &errs_improved);
        rows.push(vec![
            "slope".into(),
            sb.map(formats::format_float).unwrap_or_default(),
            si.map(formats::format_float).unwrap_or_default(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    formats::write_csv(&ctx.out.join("sweep.csv"), &COMPARE_HEADER, &rows)?;
    match failure {
        // partial table already written; surface the member failure
        Some(e) => Err(AppError::Numerical(format!(
            "sweep member failed after {} rows: {}",
            rows.len(),
            e.message()
        ))),
        None => Ok(()),
    }
}

fn hemisphere_directions(dim: usize, n: usize) -> Vec<[f64; 3]> {
    use std::f64::consts::PI;
    if dim == 2 {
        (0..n)
            .map(|j| {
                let phi = -PI / 2.0 + PI * (j as f64 + 0.5) / n as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect()
    } else {
        // upper half (z > 0) of a lat-long product
        let set = DirectionSet::sphere(n.max(4), 2 * n.max(4)).expect("valid orders");
        set.directions.into_iter().filter(|d| d[2] > 0.0).collect()
    }
}

pub fn cmd_invert(ctx: &RunContext) -> AppResult<()> {
    let inv = ctx
        .cfg
        .invert
        .as_ref()
        .ok_or_else(|| AppError::Validation("invert command needs an `invert` config block".into()))?
        .clone();
    let pot = ctx.potential()?;
    let dirs = hemisphere_directions(pot.grid.dim, inv.n_directions);
    let mut records = Vec::new();
    for &k in &inv.k_list {
        for &theta in &dirs {
            let tp = [-theta[0], -theta[1], -theta[2]];
            let (value, method) = match inv.source {
                InvertSource::Born => (born_amplitude(&pot, k, theta, tp)?, AmplitudeMethod::BornFirstOrder),
                InvertSource::Solver => {
                    let wave = WaveParams { k, theta };
                    let s = &ctx.cfg.solver;
                    let sol = match s.method {
                        SolverMethod::BornSeries => solve_born_series_in_mode(
                            &pot, &wave, s.max_terms, s.tol, s.delta, ctx.mode,
                        )?,
                        SolverMethod::Direct => {
                            solve_direct_in_mode(&pot, &wave, s.tol, s.max_iters, ctx.mode)?
                        }
                    };
                    let sphere = if pot.grid.dim == 2 {
                        2.0 * std::f64::consts::PI
                    } else {
                        4.0 * std::f64::consts::PI
                    };
                    let one = DirectionSet { dim: pot.grid.dim, directions: vec![tp], weights: vec![sphere] };
                    (amplitude_integral(&sol, &pot, &one)?[0].value, AmplitudeMethod::VolumeIntegral)
                }
            };
            records.push(AmplitudeRecord { k, theta, theta_prime: tp, value, method });
        }
    }
    let rows: Vec<Vec<String>> = records.iter().map(amplitude_row).collect();
    formats::write_csv(&ctx.out.join("records.csv"), &AMPLITUDE_HEADER, &rows)?;
    let out_grid = inv.output_grid.build()?;
    let field = invert_backscatter(&records, &out_grid)?;
    formats::write_field_real(&ctx.out.join("reconstruction.bin"), &out_grid, &field)?;
    ctx.write_json(
        "invert.json",
        &json!({
            "tool_version": TOOL_VERSION,
            "n_records": records.len(),
            "k_list": inv.k_list,
            "source": match inv.source { InvertSource::Born => "born", InvertSource::Solver => "solver" },
        }),
    )
}

pub fn cmd_export(out: &Path, kind: &str) -> AppResult<()> {
    match kind {
        "amplitude_angle" => {
            let src = ["amplitude.csv", "born.csv"]
                .iter()
                .map(|n| out.join(n))
                .find(|p| p.exists())
                .ok_or_else(|| {
                    AppError::Validation("no amplitude.csv or born.csv in the output directory".into())
                })?;
            let (_, rows) = formats::read_csv(&src).map_err(AppError::Validation)?;
            let mut text = String::from("# angle_rad\t|A|\n");
            for row in rows {
                let (tx, ty): (f64, f64) = (
                    row[4].parse().map_err(|_| AppError::Validation("bad CSV number".into()))?,
                    row[5].parse().map_err(|_| AppError::Validation("bad CSV number".into()))?,
                );
                let re: f64 = row[7].parse().map_err(|_| AppError::Validation("bad CSV number".into()))?;
                let im: f64 = row[8].parse().map_err(|_| AppError::Validation("bad CSV number".into()))?;
                text.push_str(&format!("{}\t{}\n", ty.atan2(tx), (re * re + im * im).sqrt()));
            }
            formats::atomic_write(&out.join("amplitude_angle.dat"), text.as_bytes())?;
            Ok(())
        }
        "field_slice" => {
            let src = ["u_sc.bin", "reconstruction.bin"]
                .iter()
                .map(|n| out.join(n))
                .find(|p| p.exists())
                .ok_or_else(|| {
                    AppError::Validation("no u_sc.bin or reconstruction.bin in the output directory".into())
                })?;
            let (grid, data, complex) = formats::read_field(&src).map_err(AppError::Validation)?;
            let m = grid.points_per_axis;
            // 3D: the central z layer; 2D: the whole plane
            let z_off = if grid.dim == 3 { (m / 2) * m * m } else { 0 };
            let mut re_text = String::from("# row-major field slice (real part)\n");
            let mut im_text = String::from("# row-major field slice (imaginary part)\n");
            for y in 0..m {
                let re_row: Vec<String> =
                    (0..m).map(|x| formats::format_float(data[z_off + y * m + x].re)).collect();
                re_text.push_str(&re_row.join("\t"));
                re_text.push('\n');
                if complex {
                    let im_row: Vec<String> =
                        (0..m).map(|x| formats::format_float(data[z_off + y * m + x].im)).collect();
                    im_text.push_str(&im_row.join("\t"));
                    im_text.push('\n');
                }
            }
            formats::atomic_write(&out.join("field_slice.dat"), re_text.as_bytes())?;
            if complex {
                formats::atomic_write(&out.join("field_slice_im.dat"), im_text.as_bytes())?;
            }
            Ok(())
        }
        "sweep_curve" => {
            let src = out.join("sweep.csv");
            if !src.exists() {
                return Err(AppError::Validation("no sweep.csv in the output directory".into()));
            }
            let (header, rows) = formats::read_csv(&src).map_err(AppError::Validation)?;
            let mut text = format!("# {}\n", header.join("\t"));
            for row in rows {
                text.push_str(&row.join("\t"));
                text.push('\n');
            }
            formats::atomic_write(&out.join("sweep_curve.dat"), text.as_bytes())?;
            Ok(())
        }
        other => Err(AppError::Validation(format!(
            "unknown export kind '{other}'; expected amplitude_angle, field_slice, or sweep_curve"
        ))),
    }
}
