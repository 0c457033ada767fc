//! Discretization of the Lippmann–Schwinger operator
//!
//!   L_k f(x) = ∫ G_k⁺(|x-y|) [ i ∇·(W f) + i W·∇f - q̃ f ] dy,
//!
//! built as a convolution of the source s = i (div W) f + 2i W·∇f - q̃ f with
//! the outgoing Green's kernel, plus the solvers for u_sc = ũ₀ + L_k u_sc:
//! truncated Born iteration and a matrix-free restarted GMRES.
//!
//! The convolution is aperiodic: the kernel is tabulated on a zero-padded box
//! of twice the grid extent, and the cell containing r = 0 carries the exact
//! integral of G_k⁺ over a ball (3D) or disk (2D) of equal volume.

use crate::error::{MagError, Result};
use crate::fft::FftNd;
use crate::fields::{gradient, weighted_norm, Grid, PotentialData, WeightedNormParams};
use crate::special::{green, hankel1};
use crate::Complex;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Wavenumber and incident direction.
#[derive(Debug, Clone, Copy)]
pub struct WaveParams {
    pub k: f64,
    pub theta: [f64; 3],
}

impl WaveParams {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.k <= 0.0 {
            return Err(MagError::InvalidArgument(format!("k must be positive, got {}", self.k)));
        }
        let n2 = self.theta.iter().map(|t| t * t).sum::<f64>();
        if (n2.sqrt() - 1.0).abs() > 1e-12 {
            return Err(MagError::InvalidArgument(format!(
                "theta must be a unit vector, |theta| = {}",
                n2.sqrt()
            )));
        }
        if dim == 2 && self.theta[2] != 0.0 {
            return Err(MagError::InvalidArgument("2D direction must have zero z component".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMode {
    FftConvolution,
    DenseQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    BornSeries,
    Direct,
}

/// Scattered-field solution with solver metadata.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub grid: Grid,
    pub u_sc: Vec<Complex>,
    pub wave: WaveParams,
    pub method: SolveMethod,
    pub iterations: usize,
    pub linear_residual: f64,
    pub born_ratio_history: Vec<f64>,
}

/// Exact integral of G_k⁺ over the equal-volume ball/disk replacing the
/// singular self-cell of a cell of side h.
pub fn self_cell_weight(k: f64, h: f64, dim: usize) -> Complex {
    match dim {
        3 => {
            // ∫_{B_a} e^{ikr}/(4πr) dV = ∫_0^a r e^{ikr} dr,  (4/3)π a³ = h³
            let a = h * (3.0 / (4.0 * PI)).cbrt();
            let eika = Complex::new((k * a).cos(), (k * a).sin());
            let k2 = k * k;
            eika * Complex::new(1.0 / k2, -a / k) - Complex::new(1.0 / k2, 0.0)
        }
        2 => {
            // ∫_{D_a} (i/4) H0(kr) dA = (iπ/2k²)(ka H1(ka) + 2i/π),  π a² = h²
            let a = h / PI.sqrt();
            let h1 = hankel1(1.0, k * a).expect("k a > 0");
            Complex::new(0.0, PI / (2.0 * k * k))
                * (h1 * (k * a) + Complex::new(0.0, 2.0 / PI))
        }
        _ => panic!("self_cell_weight supports dim 2 or 3"),
    }
}

/// Tabulated Green's kernel for one (grid, k) pair. Weights include the cell
/// volume h^n so convolution is a plain weighted sum.
pub struct GreenKernel {
    grid: Grid,
    fft: FftNd,
    kernel_hat: Vec<Complex>,
    dense_table: std::sync::OnceLock<Vec<Complex>>,
    k: f64,
}

impl GreenKernel {
    pub fn new(grid: &Grid, k: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(MagError::InvalidArgument(format!("k must be positive, got {k}")));
        }
        let m = grid.points_per_axis;
        let pad = 2 * m;
        let h = grid.spacing();
        let hv = grid.cell_volume();
        let w0 = self_cell_weight(k, h, grid.dim);
        let fft = FftNd::new(grid.dim, pad);
        let mut kernel = vec![Complex::default(); fft.len()];
        let offset = |j: usize| -> f64 {
            let o = if j < m { j as isize } else { j as isize - pad as isize };
            o as f64 * h
        };
        for (idx, val) in kernel.iter_mut().enumerate() {
            let dx = offset(idx % pad);
            let dy = offset((idx / pad) % pad);
            let dz = if grid.dim == 3 { offset(idx / (pad * pad)) } else { 0.0 };
            let r = (dx * dx + dy * dy + dz * dz).sqrt();
            *val = if r == 0.0 { w0 } else { green(k, r, grid.dim)?.value * hv };
        }
        fft.forward(&mut kernel);
        Ok(GreenKernel { grid: *grid, fft, kernel_hat: kernel, dense_table: Default::default(), k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    fn dense_table(&self) -> &Vec<Complex> {
        self.dense_table.get_or_init(|| {
            let m = self.grid.points_per_axis;
            let h = self.grid.spacing();
            let hv = self.grid.cell_volume();
            let w0 = self_cell_weight(self.k, h, self.grid.dim);
            let len = m.pow(self.grid.dim as u32);
            (0..len)
                .map(|idx| {
                    let dx = (idx % m) as f64 * h;
                    let dy = ((idx / m) % m) as f64 * h;
                    let dz = if self.grid.dim == 3 { (idx / (m * m)) as f64 * h } else { 0.0 };
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    if r == 0.0 { w0 } else { green(self.k, r, self.grid.dim).unwrap().value * hv }
                })
                .collect()
        })
    }

    /// (G_k⁺ ∗ s) on the grid via zero-padded FFT.
    pub fn convolve(&self, source: &[Complex]) -> Vec<Complex> {
        let m = self.grid.points_per_axis;
        let pad = 2 * m;
        let mut buf = vec![Complex::default(); self.fft.len()];
        for (idx, &s) in source.iter().enumerate() {
            let ix = idx % m;
            let iy = (idx / m) % m;
            let iz = if self.grid.dim == 3 { idx / (m * m) } else { 0 };
            let pidx = ix + pad * iy + if self.grid.dim == 3 { pad * pad * iz } else { 0 };
            buf[pidx] = s;
        }
        self.fft.forward(&mut buf);
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(b, k)| *b *= k);
        self.fft.backward(&mut buf);
        let mut out = vec![Complex::default(); source.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let ix = idx % m;
            let iy = (idx / m) % m;
            let iz = if self.grid.dim == 3 { idx / (m * m) } else { 0 };
            let pidx = ix + pad * iy + if self.grid.dim == 3 { pad * pad * iz } else { 0 };
            *o = buf[pidx];
        }
        out
    }

    /// Direct O(N²) summation with the same kernel table; cross-check oracle
    /// for the FFT path.
    pub fn convolve_dense(&self, source: &[Complex]) -> Vec<Complex> {
        let m = self.grid.points_per_axis;
        let dim = self.grid.dim;
        let table = self.dense_table();
        let n = source.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let ix = (i % m) as isize;
                let iy = ((i / m) % m) as isize;
                let iz = if dim == 3 { (i / (m * m)) as isize } else { 0 };
                let mut acc = Complex::default();
                for (j, &s) in source.iter().enumerate() {
                    let dx = (ix - (j % m) as isize).unsigned_abs();
                    let dy = (iy - ((j / m) % m) as isize).unsigned_abs();
                    let dz = if dim == 3 { (iz - (j / (m * m)) as isize).unsigned_abs() } else { 0 };
                    acc += table[dx + m * dy + if dim == 3 { m * m * dz } else { 0 }] * s;
                }
                acc
            })
            .collect()
    }
}

/// G_k⁺ ∗ f on a grid (fresh kernel); convenience for resolvent checks.
pub fn convolve_green(grid: &Grid, k: f64, f: &[Complex]) -> Result<Vec<Complex>> {
    Ok(GreenKernel::new(grid, k)?.convolve(f))
}

/// u₀(x) = e^{ik(x,θ)} sampled at grid points.
pub fn incident_wave(grid: &Grid, wave: &WaveParams) -> Result<Vec<Complex>> {
    wave.validate(grid.dim)?;
    Ok((0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let phase = wave.k * (x[0] * wave.theta[0] + x[1] * wave.theta[1] + x[2] * wave.theta[2]);
            Complex::from_polar(1.0, phase)
        })
        .collect())
}

/// One (potential, k) operator context: kernel tables are built once and
/// shared by every application.
pub struct LkContext<'a> {
    pub potential: &'a PotentialData,
    pub kernel: GreenKernel,
    pub mode: QuadratureMode,
}

impl<'a> LkContext<'a> {
    pub fn new(potential: &'a PotentialData, k: f64, mode: QuadratureMode) -> Result<Self> {
        Ok(LkContext { potential, kernel: GreenKernel::new(&potential.grid, k)?, mode })
    }

    pub fn k(&self) -> f64 {
        self.kernel.k()
    }

    /// s = i (div W) f + 2i W·∇f - q̃ f with the caller-supplied gradient.
    fn source_with_grad(&self, f: &[Complex], grad: &[[Complex; 3]]) -> Vec<Complex> {
        let p = self.potential;
        (0..f.len())
            .map(|i| {
                let w = p.w[i];
                let wdotgrad = grad[i][0] * w[0] + grad[i][1] * w[1] + grad[i][2] * w[2];
                Complex::new(0.0, 1.0) * (p.div_w[i] * f[i] + 2.0 * wdotgrad) - p.q_tilde[i] * f[i]
            })
            .collect()
    }

    fn convolve(&self, source: &[Complex]) -> Vec<Complex> {
        match self.mode {
            QuadratureMode::FftConvolution => self.kernel.convolve(source),
            QuadratureMode::DenseQuadrature => self.kernel.convolve_dense(source),
        }
    }

    /// L_k f with central-difference gradients for f.
    pub fn apply(&self, f: &[Complex]) -> Result<Vec<Complex>> {
        if f.len() != self.potential.grid.len() {
            return Err(MagError::GridMismatch);
        }
        if self.potential.is_zero() {
            return Ok(vec![Complex::default(); f.len()]);
        }
        let grad = if self.potential.has_w {
            gradient(f, &self.potential.grid)
        } else {
            vec![[Complex::default(); 3]; f.len()]
        };
        Ok(self.convolve(&self.source_with_grad(f, &grad)))
    }

    /// ũ₀ = L_k u₀, using the exact gradient ∇u₀ = ikθ u₀.
    pub fn tilde_u0(&self, wave: &WaveParams) -> Result<Vec<Complex>> {
        let u0 = incident_wave(&self.potential.grid, wave)?;
        if self.potential.is_zero() {
            return Ok(vec![Complex::default(); u0.len()]);
        }
        let iktheta = [
            Complex::new(0.0, wave.k * wave.theta[0]),
            Complex::new(0.0, wave.k * wave.theta[1]),
            Complex::new(0.0, wave.k * wave.theta[2]),
        ];
        let grad: Vec<[Complex; 3]> =
            u0.iter().map(|&u| [iktheta[0] * u, iktheta[1] * u, iktheta[2] * u]).collect();
        Ok(self.convolve(&self.source_with_grad(&u0, &grad)))
    }
}

/// apply_Lk(potential, k, f, quadrature_mode)
pub fn apply_lk(
    potential: &PotentialData,
    k: f64,
    f: &[Complex],
    mode: QuadratureMode,
) -> Result<Vec<Complex>> {
    LkContext::new(potential, k, mode)?.apply(f)
}

fn l2_norm(f: &[Complex]) -> f64 {
    f.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn decay_norm(f: &[Complex], grid: &Grid, delta: f64) -> f64 {
    weighted_norm(f, grid, WeightedNormParams { p: 2.0, delta: -delta }).expect("finite field")
}

fn fixed_point_residual(ctx: &LkContext, u_sc: &[Complex], tilde_u0: &[Complex]) -> Result<f64> {
    let base = l2_norm(tilde_u0);
    if base == 0.0 {
        return Ok(0.0);
    }
    let lk_u = ctx.apply(u_sc)?;
    let mut r = 0.0;
    for i in 0..u_sc.len() {
        r += (u_sc[i] - tilde_u0[i] - lk_u[i]).norm_sqr();
    }
    Ok(r.sqrt() / base)
}

/// Born series u_sc = Σ_{j>=1} L_k^j u₀, truncated when the increment's
/// L²_{-delta0} norm drops below tol·‖ũ₀‖; five consecutive non-decreasing
/// increments abort with a divergence error.
pub fn solve_born_series(
    potential: &PotentialData,
    wave: &WaveParams,
    max_terms: usize,
    tol: f64,
    delta0: f64,
) -> Result<ScatteringSolution> {
    solve_born_series_in_mode(potential, wave, max_terms, tol, delta0, QuadratureMode::FftConvolution)
}

pub fn solve_born_series_in_mode(
    potential: &PotentialData,
    wave: &WaveParams,
    max_terms: usize,
    tol: f64,
    delta0: f64,
    mode: QuadratureMode,
) -> Result<ScatteringSolution> {
    wave.validate(potential.grid.dim)?;
    let ctx = LkContext::new(potential, wave.k, mode)?;
    let tilde_u0 = ctx.tilde_u0(wave)?;
    let grid = &potential.grid;
    let base = decay_norm(&tilde_u0, grid, delta0);
    if base == 0.0 {
        return Ok(ScatteringSolution {
            grid: *grid,
            u_sc: vec![Complex::default(); grid.len()],
            wave: *wave,
            method: SolveMethod::BornSeries,
            iterations: 1,
            linear_residual: 0.0,
            born_ratio_history: vec![],
        });
    }

    let mut u_sc = tilde_u0.clone();
    let mut term = tilde_u0.clone();
    let mut prev_inc = base;
    let mut ratios = Vec::new();
    let mut non_decreasing = 0usize;
    let mut iterations = 1usize;
    let mut converged = base <= tol * base;
    for _ in 2..=max_terms {
        term = ctx.apply(&term)?;
        let inc = decay_norm(&term, grid, delta0);
        ratios.push(inc / prev_inc);
        if inc >= prev_inc {
            non_decreasing += 1;
            if non_decreasing >= 5 {
                return Err(MagError::Divergence(format!(
                    "{non_decreasing} consecutive non-decreasing Born increments \
                     (last ratio {:.3}); potential too strong",
                    inc / prev_inc
                )));
            }
        } else {
            non_decreasing = 0;
        }
        for (u, t) in u_sc.iter_mut().zip(&term) {
            *u += t;
        }
        iterations += 1;
        prev_inc = inc;
        if inc <= tol * base {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MagError::NoConvergence { residual: prev_inc / base, iterations });
    }
    let linear_residual = fixed_point_residual(&ctx, &u_sc, &tilde_u0)?;
    Ok(ScatteringSolution {
        grid: *grid,
        u_sc,
        wave: *wave,
        method: SolveMethod::BornSeries,
        iterations,
        linear_residual,
        born_ratio_history: ratios,
    })
}

/// Matrix-free restarted GMRES for (I - L_k) u_sc = ũ₀.
pub fn solve_direct(
    potential: &PotentialData,
    wave: &WaveParams,
    tol: f64,
    max_iters: usize,
) -> Result<ScatteringSolution> {
    solve_direct_in_mode(potential, wave, tol, max_iters, QuadratureMode::FftConvolution)
}

pub fn solve_direct_in_mode(
    potential: &PotentialData,
    wave: &WaveParams,
    tol: f64,
    max_iters: usize,
    mode: QuadratureMode,
) -> Result<ScatteringSolution> {
    wave.validate(potential.grid.dim)?;
    let ctx = LkContext::new(potential, wave.k, mode)?;
    let tilde_u0 = ctx.tilde_u0(wave)?;
    let grid = &potential.grid;
    if l2_norm(&tilde_u0) == 0.0 {
        return Ok(ScatteringSolution {
            grid: *grid,
            u_sc: vec![Complex::default(); grid.len()],
            wave: *wave,
            method: SolveMethod::Direct,
            iterations: 0,
            linear_residual: 0.0,
            born_ratio_history: vec![],
        });
    }
    let apply = |v: &[Complex]| -> Result<Vec<Complex>> {
        let lv = ctx.apply(v)?;
        Ok(v.iter().zip(&lv).map(|(a, b)| a - b).collect())
    };
    let (u_sc, iterations, residual) = gmres(apply, &tilde_u0, tol, max_iters, 50)?;
    if residual > tol {
        return Err(MagError::NoConvergence { residual, iterations });
    }
    let linear_residual = fixed_point_residual(&ctx, &u_sc, &tilde_u0)?;
    Ok(ScatteringSolution {
        grid: *grid,
        u_sc,
        wave: *wave,
        method: SolveMethod::Direct,
        iterations,
        linear_residual,
        born_ratio_history: vec![],
    })
}

fn dot(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
fn gmres<F>(
    apply: F,
    b: &[Complex],
    tol: f64,
    max_iters: usize,
    restart: usize,
) -> Result<(Vec<Complex>, usize, f64)>
where
    F: Fn(&[Complex]) -> Result<Vec<Complex>>,
{
    let n = b.len();
    let bnorm = l2_norm(b);
    let mut x = vec![Complex::default(); n];
    let mut total_iters = 0usize;
    let mut best_rel = f64::INFINITY;

    'outer: while total_iters < max_iters {
        let ax = apply(&x)?;
        let r0: Vec<Complex> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = l2_norm(&r0);
        best_rel = best_rel.min(beta / bnorm);
        if beta / bnorm <= tol {
            return Ok((x, total_iters, beta / bnorm));
        }
        let m = restart.min(max_iters - total_iters);
        let mut basis: Vec<Vec<Complex>> = vec![r0.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![Complex::default(); m]; m + 1]; // hess[row][col]
        let mut cs = vec![Complex::default(); m];
        let mut sn = vec![Complex::default(); m];
        let mut g = vec![Complex::default(); m + 1];
        g[0] = Complex::new(beta, 0.0);
        let mut cols = 0usize;

        for j in 0..m {
            let mut w = apply(&basis[j])?;
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(vi, &w);
                hess[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hnext = l2_norm(&w);
            hess[j + 1][j] = Complex::new(hnext, 0.0);

            // previously accumulated rotations
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i].conj() * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            // new rotation zeroing hess[j+1][j]
            let (h0, h1) = (hess[j][j], hess[j + 1][j]);
            let rho = (h0.norm_sqr() + h1.norm_sqr()).sqrt();
            if rho == 0.0 {
                cs[j] = Complex::new(1.0, 0.0);
                sn[j] = Complex::default();
            } else if h0.norm() == 0.0 {
                cs[j] = Complex::default();
                sn[j] = Complex::new(1.0, 0.0);
            } else {
                cs[j] = Complex::new(h0.norm() / rho, 0.0);
                sn[j] = (h0 / h0.norm()) * (h1.conj() / rho);
            }
            let t = cs[j] * hess[j][j] + sn[j] * hess[j + 1][j];
            hess[j][j] = t;
            hess[j + 1][j] = Complex::default();
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] = cs[j] * g[j];

            cols = j + 1;
            total_iters += 1;
            let rel = g[j + 1].norm() / bnorm;
            best_rel = best_rel.min(rel);
            if rel <= tol || hnext < 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back-substitute y and update x
        let mut y = vec![Complex::default(); cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().take(cols).skip(i + 1) {
                s -= hess[i][jj] * yj;
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        if g[cols].norm() / bnorm <= tol {
            break 'outer;
        }
    }
    let ax = apply(&x)?;
    let r: Vec<Complex> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = l2_norm(&r) / bnorm;
    Ok((x, total_iters, rel.min(best_rel)))
}

/// Power-iteration estimate of the L²_{-delta} operator norm of L_k
/// (spectral-radius heuristic for Born convergence). The start vector is a
/// fixed Gaussian; no randomness.
pub fn estimate_operator_norm(
    potential: &PotentialData,
    k: f64,
    delta: f64,
    iters: usize,
) -> Result<f64> {
    if iters < 10 {
        return Err(MagError::InvalidArgument("power iteration needs iters >= 10".into()));
    }
    let grid = &potential.grid;
    let ctx = LkContext::new(potential, k, QuadratureMode::FftConvolution)?;
    let weight: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(-delta)
        })
        .collect();
    let wdot = |a: &[Complex], b: &[Complex]| -> Complex {
        a.iter().zip(b).zip(&weight).map(|((x, y), &w)| x.conj() * y * w).sum()
    };
    let mut f: Vec<Complex> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            Complex::new((-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0)
        })
        .collect();
    let mut estimate = 0.0;
    for _ in 0..iters {
        let g = ctx.apply(&f)?;
        let gn = wdot(&g, &g).re.sqrt();
        if gn < 1e-280 {
            return Ok(0.0);
        }
        estimate = wdot(&f, &g).norm() / wdot(&f, &f).re;
        f = g.iter().map(|v| v / gn).collect();
    }
    Ok(estimate)
}

/// Relative interior residual of the PDE -(∇+iW)²u + Vu = k²u for
/// u = u₀ + u_sc, central differences, 2-cell margin.
pub fn residual_pde(solution: &ScatteringSolution, potential: &PotentialData) -> f64 {
    let grid = &solution.grid;
    let wave = &solution.wave;
    let u0 = incident_wave(grid, wave).expect("solution wave already validated");
    let u: Vec<Complex> = u0.iter().zip(&solution.u_sc).map(|(a, b)| a + b).collect();
    let grad = gradient(&u, grid);
    let m = grid.points_per_axis;
    let h2 = grid.spacing() * grid.spacing();
    let strides = grid.axis_strides();
    let k2 = wave.k * wave.k;
    let margin = 2;
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in 0..grid.len() {
        let ix = idx % m;
        let iy = (idx / m) % m;
        let iz = if grid.dim == 3 { idx / (m * m) } else { margin };
        if [ix, iy, iz].iter().any(|&i| i < margin || i >= m - margin) {
            continue;
        }
        let mut lap = Complex::default();
        for s in strides.iter().take(grid.dim) {
            lap += u[idx + s] - 2.0 * u[idx] + u[idx - s];
        }
        lap /= h2;
        let w = potential.w[idx];
        let wgrad = grad[idx][0] * w[0] + grad[idx][1] * w[1] + grad[idx][2] * w[2];
        // H u - k² u = -Δu - i(div W)u - 2i W·∇u + q̃ u - k² u
        let r = -lap - Complex::new(0.0, 1.0) * (potential.div_w[idx] * u[idx] + 2.0 * wgrad)
            + (potential.q_tilde[idx] - k2) * u[idx];
        num += r.norm_sqr();
        den += (k2 * u[idx]).norm_sqr();
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// For each k, the Agmon ratio check: returns (k, k·‖G_k⁺∗f‖_{L²_{-δ}}/‖f‖_{L²_{δ}}).
pub fn verify_agmon_decay(
    grid: &Grid,
    delta: f64,
    k_list: &[f64],
    probe_source: &[Complex],
) -> Result<Vec<(f64, f64)>> {
    let fnorm = weighted_norm(probe_source, grid, WeightedNormParams { p: 2.0, delta })?;
    let mut out = Vec::with_capacity(k_list.len());
    for &k in k_list {
        if fnorm == 0.0 {
            out.push((k, 0.0));
            continue;
        }
        let conv = convolve_green(grid, k, probe_source)?;
        let cnorm = weighted_norm(&conv, grid, WeightedNormParams { p: 2.0, delta: -delta })?;
        out.push((k, k * cnorm / fnorm));
    }
    Ok(out)
}
