//! Grids, parametric potential families, sampling, and the weighted
//! Lebesgue/Sobolev norms used throughout.
//!
//! The whole-space problem is truncated to a box [-L, L]^n with cell-centered
//! sample points, so no point lands on a cell corner and the Green's-kernel
//! singularity only ever meets the self-cell.

use crate::error::{MagError, Result};
use crate::Complex;
use serde::{Deserialize, Serialize};

/// Truncated box discretization of R^n (n = 2, 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Grid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total point count m^dim.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Axis coordinate of index i: cell centers -L + (i + 1/2) h.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Cartesian point for a flat index (x fastest). 2D points carry z = 0.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.points_per_axis;
        let ix = idx % m;
        let iy = (idx / m) % m;
        let iz = if self.dim == 3 { idx / (m * m) } else { 0 };
        [
            self.coord(ix),
            self.coord(iy),
            if self.dim == 3 { self.coord(iz) } else { 0.0 },
        ]
    }

    pub fn axis_strides(&self) -> [usize; 3] {
        let m = self.points_per_axis;
        [1, m, if self.dim == 3 { m * m } else { 0 }]
    }
}

/// make_grid(dim, half_width, points_per_axis)
pub fn make_grid(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Grid> {
    if dim != 2 && dim != 3 {
        return Err(MagError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
    }
    if !(half_width > 0.0) {
        return Err(MagError::InvalidGrid(format!("half_width must be positive, got {half_width}")));
    }
    if points_per_axis % 2 != 0 || points_per_axis < 8 {
        return Err(MagError::InvalidGrid(format!(
            "points_per_axis must be even and >= 8, got {points_per_axis}"
        )));
    }
    Ok(Grid { dim, half_width, points_per_axis })
}

/// One scalar parametric profile. Vector fields use one per component, or a
/// gauge generator via [`PotentialSpec::PureGauge`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalarFamily {
    /// amplitude * exp(-|x-c|^2 / sigma^2)
    GaussianBump { amplitude: f64, sigma: f64, #[serde(default)] center: [f64; 3] },
    /// amplitude * exp(-1/(1 - |x-c|^2/R^2)) inside |x-c| < R, zero outside
    SmoothCompactBump { amplitude: f64, radius: f64, #[serde(default)] center: [f64; 3] },
    /// amplitude / (1 + |x-c|^2/sigma^2)^{mu/2}, decays like |x|^{-mu}
    PowerTail { amplitude: f64, sigma: f64, mu: f64, #[serde(default)] center: [f64; 3] },
}

impl ScalarFamily {
    fn center(&self) -> [f64; 3] {
        match self {
            ScalarFamily::GaussianBump { center, .. }
            | ScalarFamily::SmoothCompactBump { center, .. }
            | ScalarFamily::PowerTail { center, .. } => *center,
        }
    }

    /// Declared polynomial decay exponent; super-polynomial families report
    /// infinity.
    pub fn decay_mu(&self) -> f64 {
        match self {
            ScalarFamily::PowerTail { mu, .. } => *mu,
            _ => f64::INFINITY,
        }
    }

    pub fn decay_constant(&self) -> f64 {
        match self {
            ScalarFamily::GaussianBump { amplitude, .. }
            | ScalarFamily::SmoothCompactBump { amplitude, .. } => amplitude.abs(),
            ScalarFamily::PowerTail { amplitude, sigma, mu, .. } => {
                amplitude.abs() * sigma.abs().powf(*mu)
            }
        }
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let (s, _) = self.profile(x);
        s
    }

    /// (value, d value/ds) where s = |x-c|^2 / scale^2; shared by gradient and
    /// Laplacian evaluation.
    fn radial_parts(&self, r2s: f64) -> (f64, f64, f64) {
        // returns (g(s), g'(s), g''(s)) at s = r2s
        match self {
            ScalarFamily::GaussianBump { amplitude, .. } => {
                let g = amplitude * (-r2s).exp();
                (g, -g, g)
            }
            ScalarFamily::SmoothCompactBump { amplitude, .. } => {
                if r2s >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let t = 1.0 - r2s;
                let g = amplitude * (-1.0 / t).exp();
                let g1 = -g / (t * t);
                let g2 = g / (t * t * t * t) - 2.0 * g / (t * t * t);
                (g, g1, g2)
            }
            ScalarFamily::PowerTail { amplitude, mu, .. } => {
                let e = -mu / 2.0;
                let base = 1.0 + r2s;
                let g = amplitude * base.powf(e);
                let g1 = amplitude * e * base.powf(e - 1.0);
                let g2 = amplitude * e * (e - 1.0) * base.powf(e - 2.0);
                (g, g1, g2)
            }
        }
    }

    fn scale2(&self) -> f64 {
        match self {
            ScalarFamily::GaussianBump { sigma, .. } => sigma * sigma,
            ScalarFamily::SmoothCompactBump { radius, .. } => radius * radius,
            ScalarFamily::PowerTail { sigma, .. } => sigma * sigma,
        }
    }

    fn profile(&self, x: [f64; 3]) -> (f64, [f64; 3]) {
        let c = self.center();
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let s2 = self.scale2();
        let (g, g1, _) = self.radial_parts(r2 / s2);
        // grad = g'(s) * 2 (x-c)/scale^2
        let f = 2.0 * g1 / s2;
        (g, [f * d[0], f * d[1], f * d[2]])
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        self.profile(x).1
    }

    pub fn laplacian(&self, x: [f64; 3], dim: usize) -> f64 {
        let c = self.center();
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let s2 = self.scale2();
        let (_, g1, g2) = self.radial_parts(r2 / s2);
        // lap = g''(s)|grad s|^2 + g'(s) lap s,  s = r^2/scale^2
        g2 * 4.0 * r2 / (s2 * s2) + g1 * 2.0 * dim as f64 / s2
    }
}

/// Specification of a scalar potential V or vector potential W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// Scalar field (V only).
    Scalar { profile: ScalarFamily },
    /// Component-wise vector field (W only); one profile per dimension.
    Components { profiles: Vec<ScalarFamily> },
    /// W = grad(phi); physically equivalent to zero magnetic field.
    PureGauge { generator: ScalarFamily },
}

impl PotentialSpec {
    fn families(&self) -> Vec<&ScalarFamily> {
        match self {
            PotentialSpec::Zero => vec![],
            PotentialSpec::Scalar { profile } => vec![profile],
            PotentialSpec::Components { profiles } => profiles.iter().collect(),
            PotentialSpec::PureGauge { generator } => vec![generator],
        }
    }

    /// Strict admissibility check (used by the CLI before running anything):
    /// power tails need mu > 2 and compact bumps must fit inside the box.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for fam in self.families() {
            match fam {
                ScalarFamily::PowerTail { mu, .. } if *mu <= 2.0 => {
                    return Err(MagError::InvalidSpec(format!(
                        "power_tail decay exponent mu = {mu} violates the condition mu > 2"
                    )));
                }
                ScalarFamily::SmoothCompactBump { radius, center, .. } => {
                    let c = (center[0] * center[0] + center[1] * center[1] + center[2] * center[2])
                        .sqrt();
                    if c + radius >= grid.half_width {
                        return Err(MagError::InvalidSpec(format!(
                            "compact bump (|center| {c:.3} + radius {radius:.3}) does not fit \
                             inside half_width {}",
                            grid.half_width
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Sampled potential data: V, W, div W (analytic), and q̃ = |W|^2 + V.
#[derive(Debug, Clone)]
pub struct PotentialData {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub w: Vec<[f64; 3]>,
    pub div_w: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub mu: f64,
    pub c_decay: f64,
    pub has_w: bool,
}

impl PotentialData {
    pub fn is_zero(&self) -> bool {
        !self.has_w && self.q_tilde.iter().all(|&q| q == 0.0)
    }
}

/// sample_potential(spec_V, spec_W, grid): analytic sampling of all fields.
/// div W comes from the families' closed-form derivatives, never from finite
/// differences.
pub fn sample_potential(
    spec_v: &PotentialSpec,
    spec_w: &PotentialSpec,
    grid: &Grid,
) -> Result<PotentialData> {
    let v_fam: Option<&ScalarFamily> = match spec_v {
        PotentialSpec::Zero => None,
        PotentialSpec::Scalar { profile } => Some(profile),
        PotentialSpec::PureGauge { .. } => {
            return Err(MagError::InvalidSpec(
                "pure_gauge applies only to the vector potential W, not V".into(),
            ))
        }
        PotentialSpec::Components { .. } => {
            return Err(MagError::InvalidSpec("V must be a scalar spec".into()))
        }
    };
    enum WKind<'a> {
        None,
        Components(&'a [ScalarFamily]),
        Gauge(&'a ScalarFamily),
    }
    let w_kind = match spec_w {
        PotentialSpec::Zero => WKind::None,
        PotentialSpec::Components { profiles } => {
            if profiles.len() != grid.dim {
                return Err(MagError::InvalidSpec(format!(
                    "W needs {} components, got {}",
                    grid.dim,
                    profiles.len()
                )));
            }
            WKind::Components(profiles)
        }
        PotentialSpec::PureGauge { generator } => WKind::Gauge(generator),
        PotentialSpec::Scalar { .. } => {
            return Err(MagError::InvalidSpec("W must be a vector or pure_gauge spec".into()))
        }
    };

    let n = grid.len();
    let mut v = vec![0.0; n];
    let mut w = vec![[0.0; 3]; n];
    let mut div_w = vec![0.0; n];
    let mut q_tilde = vec![0.0; n];
    let mut has_w = false;

    for idx in 0..n {
        let x = grid.point(idx);
        if let Some(fam) = v_fam {
            v[idx] = fam.value(x);
        }
        match &w_kind {
            WKind::None => {}
            WKind::Components(profiles) => {
                has_w = true;
                for (axis, fam) in profiles.iter().enumerate() {
                    w[idx][axis] = fam.value(x);
                    div_w[idx] += fam.gradient(x)[axis];
                }
            }
            WKind::Gauge(phi) => {
                has_w = true;
                w[idx] = phi.gradient(x);
                div_w[idx] = phi.laplacian(x, grid.dim);
            }
        }
        let wi = w[idx];
        q_tilde[idx] = wi[0] * wi[0] + wi[1] * wi[1] + wi[2] * wi[2] + v[idx];
    }

    let mut mu = f64::INFINITY;
    let mut c_decay: f64 = 0.0;
    for fam in spec_v.families().into_iter().chain(spec_w.families()) {
        mu = mu.min(fam.decay_mu());
        c_decay = c_decay.max(fam.decay_constant());
    }
    Ok(PotentialData { grid: *grid, v, w, div_w, q_tilde, mu, c_decay, has_w })
}

/// Weighted L^p parameters; positive delta is a growth weight L^p_delta,
/// negative a decay weight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedNormParams {
    pub p: f64,
    pub delta: f64,
}

fn point_r2(x: [f64; 3]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
}

/// || f ||_{L^p_delta} on the grid: (sum |f|^p (1+|x|^2)^{p delta/2} h^n)^{1/p}
/// for p = 2, the weighted sup for p = infinity.
pub fn weighted_norm(field: &[Complex], grid: &Grid, params: WeightedNormParams) -> Result<f64> {
    if field.len() != grid.len() {
        return Err(MagError::GridMismatch);
    }
    if field.iter().any(|v| v.re.is_nan() || v.im.is_nan()) {
        return Err(MagError::NanField);
    }
    if params.p == 2.0 {
        let mut sum = 0.0;
        for (idx, f) in field.iter().enumerate() {
            let wgt = (1.0 + point_r2(grid.point(idx))).powf(params.delta);
            sum += f.norm_sqr() * wgt;
        }
        Ok((sum * grid.cell_volume()).sqrt())
    } else if params.p.is_infinite() && params.p > 0.0 {
        let mut sup: f64 = 0.0;
        for (idx, f) in field.iter().enumerate() {
            let wgt = (1.0 + point_r2(grid.point(idx))).powf(params.delta / 2.0);
            sup = sup.max(f.norm() * wgt);
        }
        Ok(sup)
    } else {
        Err(MagError::InvalidArgument(format!(
            "weighted_norm supports p in {{2, inf}}, got {}",
            params.p
        )))
    }
}

pub fn weighted_norm_real(field: &[f64], grid: &Grid, params: WeightedNormParams) -> Result<f64> {
    let cplx: Vec<Complex> = field.iter().map(|&v| Complex::new(v, 0.0)).collect();
    weighted_norm(&cplx, grid, params)
}

/// Central-difference gradient (2nd-order one-sided at the box faces).
pub fn gradient(field: &[Complex], grid: &Grid) -> Vec<[Complex; 3]> {
    let m = grid.points_per_axis;
    let h = grid.spacing();
    let strides = grid.axis_strides();
    let mut out = vec![[Complex::default(); 3]; field.len()];
    for idx in 0..field.len() {
        let ix = idx % m;
        let iy = (idx / m) % m;
        let iz = if grid.dim == 3 { idx / (m * m) } else { 0 };
        let pos = [ix, iy, iz];
        for axis in 0..grid.dim {
            let s = strides[axis];
            let i = pos[axis];
            let d = if i == 0 {
                (-3.0 * field[idx] + 4.0 * field[idx + s] - field[idx + 2 * s]) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * field[idx] - 4.0 * field[idx - s] + field[idx - 2 * s]) / (2.0 * h)
            } else {
                (field[idx + s] - field[idx - s]) / (2.0 * h)
            };
            out[idx][axis] = d;
        }
    }
    out
}

/// H^1_{-delta} norm: sqrt(||f||^2 + ||grad f||^2), both in L^2 with the
/// decay weight (1+|x|^2)^{-delta}.
pub fn h1_weighted_norm(field: &[Complex], grid: &Grid, delta: f64) -> Result<f64> {
    if grid.points_per_axis < 4 {
        return Err(MagError::InvalidGrid("grid too small for central differences".into()));
    }
    if field.len() != grid.len() {
        return Err(MagError::GridMismatch);
    }
    let grads = gradient(field, grid);
    let mut sum = 0.0;
    for idx in 0..field.len() {
        let wgt = (1.0 + point_r2(grid.point(idx))).powf(-delta);
        let g = grads[idx];
        let g2 = g[0].norm_sqr() + g[1].norm_sqr() + g[2].norm_sqr();
        sum += (field[idx].norm_sqr() + g2) * wgt;
    }
    Ok((sum * grid.cell_volume()).sqrt())
}

/// Report from `check_conditions`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub mu: f64,
    pub mu_ok: bool,
    pub delta_required: f64,
    pub delta_ok: bool,
    pub sup_v_weighted: f64,
    pub sup_w_weighted: f64,
    pub sup_divw_weighted: f64,
    pub c_decay: f64,
    pub within_declared_bound: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Checks the decay condition mu > 2, the weight condition
/// delta > (n+1)/2 - n/p, and measures sup |.|*|x|^mu over the outer half of
/// the box against the declared decay constant.
pub fn check_conditions(potential: &PotentialData, p: f64, delta: f64) -> ConditionReport {
    let grid = &potential.grid;
    let n = grid.dim as f64;
    let mu_ok = potential.mu > 2.0;
    let delta_required = (n + 1.0) / 2.0 - n / p;
    let delta_ok = delta > delta_required;

    // |x|^inf is meaningless on a finite box; measure with a capped exponent.
    let mu_eff = potential.mu.min(6.0);
    let r_min = grid.half_width / 2.0;
    let (mut sup_v, mut sup_w, mut sup_d) = (0.0f64, 0.0f64, 0.0f64);
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let r = point_r2(x).sqrt();
        if r <= r_min {
            continue;
        }
        let wgt = r.powf(mu_eff);
        sup_v = sup_v.max(potential.v[idx].abs() * wgt);
        let w = potential.w[idx];
        sup_w = sup_w.max((w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() * wgt);
        sup_d = sup_d.max(potential.div_w[idx].abs() * wgt);
    }
    let bound = if potential.c_decay == 0.0 {
        sup_v == 0.0 && sup_w == 0.0 && sup_d == 0.0
    } else {
        // generous slack: the declared constant bounds the asymptotic regime only
        sup_v.max(sup_w).max(sup_d) <= 10.0 * potential.c_decay
    };

    let mut notes = vec![
        "a single declared mu is applied to |V|, |W| and |div W| alike; the paper's \
         per-quantity exponents are conflated here"
            .to_string(),
    ];
    if !mu_ok {
        notes.push(format!("decay exponent mu = {} <= 2", potential.mu));
    }
    if !delta_ok {
        notes.push(format!("delta = {delta} <= (n+1)/2 - n/p = {delta_required}"));
    }
    ConditionReport {
        mu: potential.mu,
        mu_ok,
        delta_required,
        delta_ok,
        sup_v_weighted: sup_v,
        sup_w_weighted: sup_w,
        sup_divw_weighted: sup_d,
        c_decay: potential.c_decay,
        within_declared_bound: bound,
        pass: mu_ok && delta_ok,
        notes,
    }
}
