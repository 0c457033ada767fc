//! Scattering-amplitude extraction.
//!
//! Two independent routes to A(k, θ', θ):
//!   * the volume integral A = ∫ e^{-ik(θ',y)} [i ∇·(W u) + i W·∇u - q̃ u] dy
//!     with u = u₀ + u_sc, evaluated by grid quadrature;
//!   * fitting the constant term of u_sc(rθ') / (c_n e^{ikr} k^{(n-3)/2}
//!     r^{-(n-1)/2}) across several radii.
//! Plus a Sommerfeld radiation-condition residual |∂_r u - ik u| on spheres.

use crate::error::{MagError, Result};
use crate::fields::{gradient, Grid, PotentialData};
use crate::ls::ScatteringSolution;
use crate::special::green_farfield_constant;
use crate::Complex;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Solutions with a worse relative fixed-point residual than this are
/// rejected by the amplitude extractors.
pub const CONVERGENCE_GATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMethod {
    VolumeIntegral,
    FarfieldFit,
    BornFirstOrder,
    BornImproved,
}

#[derive(Debug, Clone)]
pub struct AmplitudeRecord {
    pub k: f64,
    pub theta: [f64; 3],
    pub theta_prime: [f64; 3],
    pub value: Complex,
    pub method: AmplitudeMethod,
}

/// Quadrature rule on the unit circle (2D) or sphere (3D): unit directions
/// with positive weights summing to the surface measure.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub dim: usize,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by the three-term recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pprev = if n == 1 { 1.0 } else { p0 };
            let dp = n as f64 * (x * pn - pprev) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let pn = if n == 1 { x } else { p1 };
        let pprev = if n == 1 { 1.0 } else { p0 };
        let dp = n as f64 * (x * pn - pprev) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

impl DirectionSet {
    /// m equispaced angles on the unit circle, each with weight 2π/m.
    pub fn circle(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(MagError::InvalidArgument("need at least 4 directions".into()));
        }
        let w = 2.0 * PI / m as f64;
        let directions = (0..m)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / m as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect();
        Ok(DirectionSet { dim: 2, directions, weights: vec![w; m] })
    }

    /// Latitude–longitude product: Gauss–Legendre in cos(polar) × uniform
    /// azimuth, so Σ weights = 4π exactly.
    pub fn sphere(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 4 {
            return Err(MagError::InvalidArgument("need n_polar >= 2, n_azimuth >= 4".into()));
        }
        let (cos_nodes, cos_weights) = gauss_legendre(n_polar);
        let wphi = 2.0 * PI / n_azimuth as f64;
        let mut directions = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (ct, cw) in cos_nodes.iter().zip(&cos_weights) {
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..n_azimuth {
                let phi = 2.0 * PI * j as f64 / n_azimuth as f64;
                directions.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(cw * wphi);
            }
        }
        Ok(DirectionSet { dim: 3, directions, weights })
    }

    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::circle(64),
            3 => Self::sphere(16, 32),
            _ => Err(MagError::InvalidArgument(format!("dim must be 2 or 3, got {dim}"))),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Multilinear interpolation of a cell-centered grid field at an arbitrary
/// interior point.
pub fn interpolate(field: &[Complex], grid: &Grid, x: [f64; 3]) -> Complex {
    let m = grid.points_per_axis;
    let h = grid.spacing();
    let mut i0 = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for d in 0..grid.dim {
        let t = (x[d] + grid.half_width) / h - 0.5;
        let tf = t.floor().clamp(0.0, (m - 2) as f64);
        i0[d] = tf as usize;
        frac[d] = (t - tf).clamp(0.0, 1.0);
    }
    let strides = grid.axis_strides();
    let corners = 1usize << grid.dim;
    let mut acc = Complex::default();
    for c in 0..corners {
        let mut idx = 0usize;
        let mut w = 1.0;
        for d in 0..grid.dim {
            let bit = (c >> d) & 1;
            idx += (i0[d] + bit) * strides[d];
            w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
        }
        acc += field[idx] * w;
    }
    acc
}

fn check_converged(solution: &ScatteringSolution) -> Result<()> {
    if solution.linear_residual > CONVERGENCE_GATE {
        return Err(MagError::Unconverged(solution.linear_residual));
    }
    Ok(())
}

/// A(k, θ', θ) by grid quadrature of the volume representation, one record
/// per direction in `theta_prime_set`.
pub fn amplitude_integral(
    solution: &ScatteringSolution,
    potential: &PotentialData,
    theta_prime_set: &DirectionSet,
) -> Result<Vec<AmplitudeRecord>> {
    check_converged(solution)?;
    let grid = &solution.grid;
    if grid != &potential.grid {
        return Err(MagError::GridMismatch);
    }
    if theta_prime_set.dim != grid.dim {
        return Err(MagError::InvalidArgument("direction set dimension mismatch".into()));
    }
    let wave = &solution.wave;
    let k = wave.k;
    let u0 = crate::ls::incident_wave(grid, wave)?;
    let u: Vec<Complex> = u0.iter().zip(&solution.u_sc).map(|(a, b)| a + b).collect();
    // ∇u = ikθ u₀ (exact) + central differences of u_sc
    let grad_sc = if potential.has_w {
        gradient(&solution.u_sc, grid)
    } else {
        vec![[Complex::default(); 3]; u.len()]
    };
    let source: Vec<Complex> = (0..u.len())
        .map(|i| {
            let w = potential.w[i];
            let mut wgrad = Complex::default();
            for d in 0..3 {
                let g = Complex::new(0.0, k * wave.theta[d]) * u0[i] + grad_sc[i][d];
                wgrad += g * w[d];
            }
            Complex::new(0.0, 1.0) * (potential.div_w[i] * u[i] + 2.0 * wgrad)
                - potential.q_tilde[i] * u[i]
        })
        .collect();
    let hv = grid.cell_volume();
    let records: Vec<AmplitudeRecord> = theta_prime_set
        .directions
        .par_iter()
        .map(|tp| {
            let mut acc = Complex::default();
            for (idx, s) in source.iter().enumerate() {
                let y = grid.point(idx);
                let phase = -k * (y[0] * tp[0] + y[1] * tp[1] + y[2] * tp[2]);
                acc += Complex::from_polar(1.0, phase) * s;
            }
            AmplitudeRecord {
                k,
                theta: wave.theta,
                theta_prime: *tp,
                value: acc * hv,
                method: AmplitudeMethod::VolumeIntegral,
            }
        })
        .collect();
    Ok(records)
}

/// A(k, θ', θ) by sampling u_sc along the ray x = rθ', removing the outgoing
/// spherical factor, and least-squares fitting A + B/r across the radii.
pub fn farfield_fit(
    solution: &ScatteringSolution,
    potential: &PotentialData,
    k: f64,
    radii: &[f64],
    theta_prime: [f64; 3],
) -> Result<Complex> {
    check_converged(solution)?;
    let grid = &solution.grid;
    if radii.len() < 3 {
        return Err(MagError::InvalidArgument("need at least 3 fit radii".into()));
    }
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let rmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if rmax > 0.8 * grid.half_width || rmin <= 0.0 {
        return Err(MagError::InvalidArgument(format!(
            "fit radii must lie in (0, 0.8 L]; got max {rmax} with L = {}",
            grid.half_width
        )));
    }
    // the fit assumes the potential is negligible beyond the smallest radius
    let mut tail: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let mag = potential.q_tilde[idx].abs()
            + potential.div_w[idx].abs()
            + potential.w[idx].iter().map(|c| c.abs()).sum::<f64>();
        peak = peak.max(mag);
        if r >= rmin {
            tail = tail.max(mag);
        }
    }
    if peak > 0.0 && tail > 0.05 * peak {
        return Err(MagError::InvalidArgument(format!(
            "potential tail at fit radii is {:.1}% of its peak; enlarge the box or radii",
            100.0 * tail / peak
        )));
    }

    let c = green_farfield_constant(k, grid.dim);
    let exponent = (grid.dim - 1) as f64 / 2.0;
    // least squares for v(r) = A + B/r
    let (mut s00, mut s01, mut s11) = (0.0f64, 0.0f64, 0.0f64);
    let (mut b0, mut b1) = (Complex::default(), Complex::default());
    for &r in radii {
        let x = [r * theta_prime[0], r * theta_prime[1], r * theta_prime[2]];
        let usc = interpolate(&solution.u_sc, grid, x);
        let v = usc / (c * Complex::from_polar(1.0, k * r) * r.powf(-exponent));
        let basis1 = 1.0 / r;
        s00 += 1.0;
        s01 += basis1;
        s11 += basis1 * basis1;
        b0 += v;
        b1 += v * basis1;
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() < 1e-14 {
        return Err(MagError::Numerical("degenerate radius set for far-field fit".into()));
    }
    Ok((b0 * s11 - b1 * s01) / det)
}

/// r^{(n-1)/2} · RMS over directions of |∂u/∂r - ik u| at |x| = radius.
pub fn sommerfeld_residual(
    field: &[Complex],
    grid: &Grid,
    k: f64,
    radius: f64,
    directions: &DirectionSet,
) -> Result<f64> {
    if radius > 0.8 * grid.half_width || radius <= 0.0 {
        return Err(MagError::InvalidArgument("radius must lie in (0, 0.8 L]".into()));
    }
    let dr = 0.5 * grid.spacing();
    let total = directions.total_weight();
    let mut acc = 0.0;
    for (d, w) in directions.directions.iter().zip(&directions.weights) {
        let at = |r: f64| interpolate(field, grid, [r * d[0], r * d[1], r * d[2]]);
        let deriv = (at(radius + dr) - at(radius - dr)) / (2.0 * dr);
        let mismatch = deriv - Complex::new(0.0, k) * at(radius);
        acc += w * mismatch.norm_sqr();
    }
    Ok(radius.powf((grid.dim - 1) as f64 / 2.0) * (acc / total).sqrt())
}
