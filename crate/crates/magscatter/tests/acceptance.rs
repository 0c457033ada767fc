//! Acceptance gate: one test per criterion A1–A9, each printing a PASS line.
//!
//! Every tolerance here is pinned; loosening one is a contract change, not a
//! tuning knob.

use magscatter::born::{
    backscatter_born, fourier_real, improved_backscatter_with, invert_backscatter,
    second_order_fourier, second_order_spatial,
};
use magscatter::farfield::{
    amplitude_integral, farfield_fit, interpolate, AmplitudeMethod, AmplitudeRecord, DirectionSet,
};
use magscatter::fields::{
    make_grid, sample_potential, weighted_norm, Grid, PotentialData, PotentialSpec, ScalarFamily,
    WeightedNormParams,
};
use magscatter::ls::{
    convolve_green, estimate_operator_norm, solve_born_series, solve_direct, verify_agmon_decay,
    WaveParams,
};
use magscatter::Complex;
use std::f64::consts::PI;
use std::time::Instant;

const X: [f64; 3] = [1.0, 0.0, 0.0];

fn gaussian_v(amplitude: f64, sigma: f64) -> PotentialSpec {
    PotentialSpec::Scalar { profile: ScalarFamily::GaussianBump { amplitude, sigma, center: [0.0; 3] } }
}

/// Superpose two sampled potentials on the same grid (q̃ is recomputed, not
/// summed: |W₁+W₂|² ≠ |W₁|² + |W₂|²).
fn combine(a: &PotentialData, b: &PotentialData) -> PotentialData {
    assert_eq!(a.grid, b.grid);
    let v: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect();
    let w: Vec<[f64; 3]> = a
        .w
        .iter()
        .zip(&b.w)
        .map(|(x, y)| [x[0] + y[0], x[1] + y[1], x[2] + y[2]])
        .collect();
    let div_w: Vec<f64> = a.div_w.iter().zip(&b.div_w).map(|(x, y)| x + y).collect();
    let q_tilde: Vec<f64> = v
        .iter()
        .zip(&w)
        .map(|(vv, ww)| ww[0] * ww[0] + ww[1] * ww[1] + ww[2] * ww[2] + vv)
        .collect();
    PotentialData {
        grid: a.grid,
        v,
        w,
        div_w,
        q_tilde,
        mu: a.mu.min(b.mu),
        c_decay: a.c_decay + b.c_decay,
        has_w: a.has_w || b.has_w,
    }
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|v| v * v).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn single_direction(dim: usize, tp: [f64; 3]) -> DirectionSet {
    let sphere = if dim == 2 { 2.0 * PI } else { 4.0 * PI };
    DirectionSet { dim, directions: vec![tp], weights: vec![sphere] }
}

fn backscatter_via_solver(pot: &PotentialData, k: f64, theta: [f64; 3], tol: f64) -> Complex {
    let sol = solve_direct(pot, &WaveParams { k, theta }, tol, 600).expect("solver converges");
    let tp = [-theta[0], -theta[1], -theta[2]];
    amplitude_integral(&sol, pot, &single_direction(pot.grid.dim, tp)).expect("amplitude")[0].value
}

#[test]
fn a1_zero_potential_exactness() {
    let t0 = Instant::now();
    for (dim, m) in [(2usize, 128usize), (3, 32)] {
        let grid = make_grid(dim, 6.0, m).unwrap();
        let pot = sample_potential(&PotentialSpec::Zero, &PotentialSpec::Zero, &grid).unwrap();
        let k = 2.0;
        let sol = solve_direct(&pot, &WaveParams { k, theta: X }, 1e-12, 50).unwrap();
        let max_field = sol.u_sc.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_field <= 1e-13, "dim {dim}: max |u_sc| = {max_field}");

        let dirs = DirectionSet::default_for(dim).unwrap();
        for rec in amplitude_integral(&sol, &pot, &dirs).unwrap() {
            assert!(rec.value.norm() <= 1e-13);
        }
        assert!(backscatter_born(&pot, k, X).unwrap().norm() <= 1e-13);
        assert!(improved_backscatter_with(&pot, k, X, k / 16.0, 8).unwrap().norm() <= 1e-13);
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 10.0, "took {dt:.1} s");
    println!("A1 zero-potential exactness ... PASS ({dt:.1} s)");
}

/// Relative interior L2 error of (-lap - k^2)(G_k * f) against f.
fn green_identity_error(dim: usize, m: usize, half_width: f64, k: f64) -> f64 {
    let grid = make_grid(dim, half_width, m).unwrap();
    // wide bump: the FD-Laplacian truncation error scales like (h/R)^2 times
    // the bump's edge derivatives, so R should be as large as the box allows
    let bump = ScalarFamily::SmoothCompactBump {
        amplitude: 1.0,
        radius: 0.75 * half_width,
        center: [0.0; 3],
    };
    let f: Vec<Complex> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            let rr = bump_radius(&bump);
            let s = r2 / (rr * rr);
            Complex::new(if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 }, 0.0)
        })
        .collect();
    let g = convolve_green(&grid, k, &f).unwrap();
    let strides = grid.axis_strides();
    let h2 = grid.spacing() * grid.spacing();
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in 0..grid.len() {
        let ix = [idx % m, (idx / m) % m, if dim == 3 { idx / (m * m) } else { 2 }];
        if (0..dim).any(|d| ix[d] < 2 || ix[d] >= m - 2) {
            continue;
        }
        let mut lap = Complex::default();
        for d in 0..dim {
            lap += g[idx + strides[d]] + g[idx - strides[d]] - 2.0 * g[idx];
        }
        lap /= h2;
        let res = -lap - k * k * g[idx] - f[idx];
        num += res.norm_sqr();
        den += f[idx].norm_sqr();
    }
    (num / den).sqrt()
}

fn bump_radius(f: &ScalarFamily) -> f64 {
    match f {
        ScalarFamily::SmoothCompactBump { radius, .. } => *radius,
        _ => unreachable!(),
    }
}

#[test]
fn a2_green_identity() {
    let t0 = Instant::now();
    let e2 = green_identity_error(2, 256, 8.0, 2.0);
    let e2c = green_identity_error(2, 128, 8.0, 2.0);
    assert!(e2 <= 1e-2, "2D fine error {e2}");
    let ratio2 = e2c / e2;
    assert!((2.5..8.0).contains(&ratio2), "2D halving ratio {ratio2}");

    let e3 = green_identity_error(3, 48, 6.0, 1.0);
    let e3c = green_identity_error(3, 24, 6.0, 1.0);
    assert!(e3 <= 1e-2, "3D fine error {e3}");
    let ratio3 = e3c / e3;
    assert!((2.5..8.0).contains(&ratio3), "3D halving ratio {ratio3}");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 120.0, "took {dt:.1} s");
    println!("A2 Green identity (2D {e2:.2e} x{ratio2:.1}, 3D {e3:.2e} x{ratio3:.1}) ... PASS ({dt:.1} s)");
}

#[test]
fn a3_born_series_convergence() {
    let t0 = Instant::now();
    let grid = make_grid(3, 6.0, 32).unwrap();
    let pot = sample_potential(&gaussian_v(0.1, 1.0), &PotentialSpec::Zero, &grid).unwrap();
    let wave = WaveParams { k: 2.0, theta: X };
    let tol = 1e-8;
    let delta = 1.0;

    let born = solve_born_series(&pot, &wave, 60, tol, delta).unwrap();
    let c1 = estimate_operator_norm(&pot, wave.k, delta, 20).unwrap();
    for (i, &r) in born.born_ratio_history.iter().enumerate() {
        assert!(
            r >= c1 / 2.0 && r <= c1 * 2.0,
            "increment ratio {i} = {r} vs norm estimate {c1}"
        );
    }

    let direct = solve_direct(&pot, &wave, tol, 400).unwrap();
    let diff: Vec<Complex> =
        born.u_sc.iter().zip(&direct.u_sc).map(|(a, b)| a - b).collect();
    let params = WeightedNormParams { p: 2.0, delta: -delta };
    let rel = weighted_norm(&diff, &grid, params).unwrap()
        / weighted_norm(&direct.u_sc, &grid, params).unwrap();
    assert!(rel <= 10.0 * tol, "born vs direct relative diff {rel}");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 180.0, "took {dt:.1} s");
    println!("A3 Born-series convergence (c1 {c1:.3}, diff {rel:.1e}) ... PASS ({dt:.1} s)");
}

fn error_slopes(pots: &[PotentialData], eps: &[f64], k: f64) -> (f64, f64) {
    let mut err_born = Vec::new();
    let mut err_improved = Vec::new();
    for pot in pots {
        let a = backscatter_via_solver(pot, k, X, 1e-10);
        let ab = backscatter_born(pot, k, X).unwrap();
        let improved = improved_backscatter_with(pot, k, X, k / 16.0, 16).unwrap();
        err_born.push((a - ab).norm());
        err_improved.push((a - improved).norm());
    }
    (loglog_slope(eps, &err_born), loglog_slope(eps, &err_improved))
}

#[test]
fn a4_born_error_hierarchy() {
    let t0 = Instant::now();
    let eps = [0.05, 0.1, 0.2];
    let grid = make_grid(3, 5.0, 32).unwrap();
    let k = 2.0;

    // electric-only configuration
    let pots: Vec<PotentialData> = eps
        .iter()
        .map(|&e| sample_potential(&gaussian_v(e, 1.0), &PotentialSpec::Zero, &grid).unwrap())
        .collect();
    let (s_born, s_improved) = error_slopes(&pots, &eps, k);
    assert!((1.8..=2.2).contains(&s_born), "V-only first-order slope {s_born}");
    assert!((2.7..=3.3).contains(&s_improved), "V-only improved slope {s_improved}");

    // magnetic-only: pure gauge plus a genuine bump, both scaled by epsilon.
    // The gauge part is kept subdominant: its second-order contributions
    // cancel in the term sum, and a heavily cancelling sum amplifies the
    // fixed discretization bias enough to flatten the epsilon^3 slope. The
    // tighter box keeps kh small for the same reason.
    let grid_w = make_grid(3, 3.5, 32).unwrap();
    let pots_w: Vec<PotentialData> = eps
        .iter()
        .map(|&e| {
            let gauge = PotentialSpec::PureGauge {
                generator: ScalarFamily::GaussianBump { amplitude: 0.5 * e, sigma: 1.0, center: [0.0; 3] },
            };
            let bump = PotentialSpec::Components {
                profiles: vec![
                    ScalarFamily::GaussianBump { amplitude: 2.5 * e, sigma: 1.0, center: [0.3, 0.0, 0.0] },
                    ScalarFamily::GaussianBump { amplitude: 1.25 * e, sigma: 1.1, center: [0.0; 3] },
                    ScalarFamily::GaussianBump { amplitude: 0.0, sigma: 1.0, center: [0.0; 3] },
                ],
            };
            let a = sample_potential(&PotentialSpec::Zero, &gauge, &grid_w).unwrap();
            let b = sample_potential(&PotentialSpec::Zero, &bump, &grid_w).unwrap();
            combine(&a, &b)
        })
        .collect();
    let (w_born, w_improved) = error_slopes(&pots_w, &eps, k);
    assert!((1.8..=2.2).contains(&w_born), "W-only first-order slope {w_born}");
    assert!((2.7..=3.3).contains(&w_improved), "W-only improved slope {w_improved}");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 900.0, "took {dt:.1} s");
    println!(
        "A4 Born error hierarchy (V slopes {s_born:.2}/{s_improved:.2}, \
         W slopes {w_born:.2}/{w_improved:.2}) ... PASS ({dt:.1} s)"
    );
}

fn decay_exponent(sol: &magscatter::ls::ScatteringSolution) -> f64 {
    let grid = &sol.grid;
    let dirs = DirectionSet::default_for(grid.dim).unwrap();
    let radii: Vec<f64> = (0..8).map(|i| (0.4 + 0.35 * i as f64 / 7.0) * grid.half_width).collect();
    let means: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for d in &dirs.directions {
                let x = [r * d[0], r * d[1], r * d[2]];
                acc += interpolate(&sol.u_sc, grid, x).norm();
            }
            acc / dirs.directions.len() as f64
        })
        .collect();
    -loglog_slope(&radii, &means)
}

#[test]
fn a5_farfield_consistency() {
    let t0 = Instant::now();
    let grid = make_grid(3, 7.5, 48).unwrap();
    let pot = sample_potential(&gaussian_v(0.2, 1.0), &PotentialSpec::Zero, &grid).unwrap();
    let k = 2.0;
    let l = grid.half_width;
    let radii: Vec<f64> = (0..8).map(|i| (0.45 + 0.3 * i as f64 / 7.0) * l).collect();

    let thetas = DirectionSet::sphere(4, 4).unwrap().directions;
    assert_eq!(thetas.len(), 16);
    let mut worst = 0.0f64;
    let mut sol3 = None;
    for theta in thetas {
        let sol = solve_direct(&pot, &WaveParams { k, theta }, 1e-9, 400).unwrap();
        let tp = [-theta[0], -theta[1], -theta[2]];
        let a_int = amplitude_integral(&sol, &pot, &single_direction(3, tp)).unwrap()[0].value;
        let a_fit = farfield_fit(&sol, &pot, k, &radii, tp).unwrap();
        worst = worst.max((a_int - a_fit).norm() / a_int.norm());
        sol3 = Some(sol);
    }
    assert!(worst <= 0.05, "worst integral-vs-fit mismatch {worst}");

    let d3 = decay_exponent(sol3.as_ref().unwrap());
    assert!((d3 - 1.0).abs() <= 0.1, "3D decay exponent {d3}");

    let grid2 = make_grid(2, 8.0, 128).unwrap();
    let pot2 = sample_potential(&gaussian_v(0.2, 1.0), &PotentialSpec::Zero, &grid2).unwrap();
    let sol2 = solve_direct(&pot2, &WaveParams { k, theta: X }, 1e-9, 400).unwrap();
    let d2 = decay_exponent(&sol2);
    assert!((d2 - 0.5).abs() <= 0.1, "2D decay exponent {d2}");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "took {dt:.1} s");
    println!("A5 far-field consistency (mismatch {worst:.3}, exponents {d3:.2}/{d2:.2}) ... PASS ({dt:.1} s)");
}

#[test]
fn a6_agmon_decay() {
    let t0 = Instant::now();
    let grid = make_grid(2, 6.0, 256).unwrap();
    // narrow probe: its transform must still reach the resonant shell |ξ| = k
    // at the largest k, otherwise the measured ratio just reflects the
    // probe's own spectral decay instead of the resolvent bound
    let sigma = 0.2;
    let probe: Vec<Complex> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            Complex::new((-(p[0] * p[0] + p[1] * p[1]) / (sigma * sigma)).exp(), 0.0)
        })
        .collect();
    let rows = verify_agmon_decay(&grid, 1.0, &[1.0, 2.0, 4.0, 8.0], &probe).unwrap();
    let products: Vec<f64> = rows.iter().map(|&(_, p)| p).collect();
    let (lo, hi) = (
        products.iter().cloned().fold(f64::INFINITY, f64::min),
        products.iter().cloned().fold(0.0, f64::max),
    );
    assert!(hi / lo <= 3.0, "k-scaled resolvent products vary x{:.2}: {products:?}", hi / lo);
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 180.0, "took {dt:.1} s");
    println!("A6 Agmon decay (variation x{:.2}) ... PASS ({dt:.1} s)", hi / lo);
}

fn check_terms_close(pot: &PotentialData, k: f64, gap: f64, order: usize, label: &str) {
    let f = second_order_fourier(pot, k, X, gap, order).unwrap();
    let s = second_order_spatial(pot, k, X).unwrap();
    for (name, a, b) in [
        ("I1", f.i1, s.i1),
        ("I2", f.i2, s.i2),
        ("I3", f.i3, s.i3),
        ("I4", f.i4, s.i4),
    ] {
        if b.norm() < 1e-12 {
            continue;
        }
        let rel = (a - b).norm() / b.norm();
        assert!(rel <= 0.01, "{label} {name}: fourier {a} vs spatial {b}, rel {rel}");
    }
}

#[test]
fn a7_second_order_oracle_equivalence() {
    let t0 = Instant::now();

    let grid2 = make_grid(2, 4.0, 32).unwrap();
    let v2 = gaussian_v(0.6, 1.0);
    let w2 = PotentialSpec::Components {
        profiles: vec![
            ScalarFamily::GaussianBump { amplitude: 0.5, sigma: 1.0, center: [0.3, 0.0, 0.0] },
            ScalarFamily::GaussianBump { amplitude: -0.4, sigma: 1.1, center: [0.0, -0.2, 0.0] },
        ],
    };
    let pot2 = sample_potential(&v2, &w2, &grid2).unwrap();
    check_terms_close(&pot2, 2.0, 2.0 / 16.0, 64, "2D");

    let grid3 = make_grid(3, 1.8, 12).unwrap();
    let v3 = PotentialSpec::Scalar {
        profile: ScalarFamily::GaussianBump { amplitude: 0.6, sigma: 0.6, center: [0.0; 3] },
    };
    let w3 = PotentialSpec::Components {
        profiles: vec![
            ScalarFamily::GaussianBump { amplitude: 0.5, sigma: 0.6, center: [0.1, 0.0, 0.0] },
            ScalarFamily::GaussianBump { amplitude: -0.3, sigma: 0.7, center: [0.0, 0.1, 0.0] },
            ScalarFamily::GaussianBump { amplitude: 0.4, sigma: 0.6, center: [0.0; 3] },
        ],
    };
    let pot3 = sample_potential(&v3, &w3, &grid3).unwrap();
    check_terms_close(&pot3, 1.0, 1.0 / 16.0, 16, "3D");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "took {dt:.1} s");
    println!("A7 second-order oracle equivalence ... PASS ({dt:.1} s)");
}

#[test]
fn a8_gauge_identities() {
    let t0 = Instant::now();
    let grid = make_grid(2, 6.0, 64).unwrap();
    let k = 2.0;
    let gauge = PotentialSpec::PureGauge {
        generator: ScalarFamily::GaussianBump { amplitude: 2.0, sigma: 1.0, center: [0.2, -0.3, 0.0] },
    };
    let pot = sample_potential(&PotentialSpec::Zero, &gauge, &grid).unwrap();

    // the first-order magnetic term k(th+th')·FW(k(th-th')) must vanish for
    // gradient fields at every direction pair
    let dirs = DirectionSet::circle(8).unwrap().directions;
    let wx: Vec<f64> = pot.w.iter().map(|w| w[0]).collect();
    let wy: Vec<f64> = pot.w.iter().map(|w| w[1]).collect();
    for &theta in &dirs {
        for &tp in &dirs {
            let xi = [k * (theta[0] - tp[0]), k * (theta[1] - tp[1]), 0.0];
            let fx = fourier_real(&wx, &grid, &[xi]).values[0];
            let fy = fourier_real(&wy, &grid, &[xi]).values[0];
            let term = k * ((theta[0] + tp[0]) * fx + (theta[1] + tp[1]) * fy);
            let scale = k * (fx.norm() + fy.norm());
            if scale > 0.0 {
                assert!(term.norm() <= 1e-10 * scale.max(1.0), "linear magnetic term {term}");
            }
        }
    }

    // full amplitude invariance under W -> W + grad(phi), interior phi
    let grid8 = make_grid(2, 6.0, 96).unwrap();
    let w_base = PotentialSpec::Components {
        profiles: vec![
            ScalarFamily::GaussianBump { amplitude: 0.3, sigma: 1.0, center: [0.0; 3] },
            ScalarFamily::GaussianBump { amplitude: 0.2, sigma: 1.2, center: [0.3, 0.0, 0.0] },
        ],
    };
    let v_base = gaussian_v(0.3, 1.0);
    let pot_a = sample_potential(&v_base, &w_base, &grid8).unwrap();
    let phi = PotentialSpec::PureGauge {
        generator: ScalarFamily::SmoothCompactBump { amplitude: 0.5, radius: 2.0, center: [0.0; 3] },
    };
    let pot_phi = sample_potential(&PotentialSpec::Zero, &phi, &grid8).unwrap();
    let pot_b = combine(&pot_a, &pot_phi);

    let wave = WaveParams { k, theta: X };
    let sol_a = solve_direct(&pot_a, &wave, 1e-10, 400).unwrap();
    let sol_b = solve_direct(&pot_b, &wave, 1e-10, 400).unwrap();
    let set = DirectionSet::circle(8).unwrap();
    let rec_a = amplitude_integral(&sol_a, &pot_a, &set).unwrap();
    let rec_b = amplitude_integral(&sol_b, &pot_b, &set).unwrap();
    let amax = rec_a.iter().map(|r| r.value.norm()).fold(0.0, f64::max);
    let quadrature_tol = 1e-2; // observed discretization scale at this resolution
    for (ra, rb) in rec_a.iter().zip(&rec_b) {
        let rel = (ra.value - rb.value).norm() / amax;
        assert!(rel <= 3.0 * quadrature_tol, "gauge shift changed amplitude by {rel}");
    }

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 300.0, "took {dt:.1} s");
    println!("A8 gauge identities ... PASS ({dt:.1} s)");
}

fn reconstruction_metrics(field: &[f64], grid: &Grid, center: [f64; 2], truth_amp: f64, sigma: f64) -> (f64, f64) {
    let mut best = (f64::MIN, 0usize);
    for (i, &v) in field.iter().enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    let p = grid.point(best.1);
    let off = (p[0] - center[0]).abs().max((p[1] - center[1]).abs());
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in field.iter().enumerate() {
        let q = grid.point(i);
        let dx = q[0] - center[0];
        let dy = q[1] - center[1];
        let truth = truth_amp * (-(dx * dx + dy * dy) / (sigma * sigma)).exp();
        num += (v - truth) * (v - truth);
        den += truth * truth;
    }
    (off, (num / den).sqrt())
}

#[test]
fn a9_inversion_closed_loop() {
    let t0 = Instant::now();
    let center = [0.5, -0.3];
    // the lowest attainable |xi| = 2*k_min = 1 leaves an unavoidable spectral
    // hole; a sigma = 0.6 target keeps most of its energy inside the sampled
    // band, and the output box is sized to the support of the reconstruction
    let sigma = 0.6;
    let out_grid = make_grid(2, 2.0, 16).unwrap();
    let h = out_grid.spacing();
    let dirs: Vec<[f64; 3]> = (0..32)
        .map(|j| {
            let phi = -PI / 2.0 + PI * (j as f64 + 0.5) / 32.0;
            [phi.cos(), phi.sin(), 0.0]
        })
        .collect();
    let ks: Vec<f64> = (2..=16).map(|i| 0.25 * i as f64).collect(); // 0.5 .. 4

    // analytic samples of -F(qt)(2k theta) for a unit Gaussian qt
    let mut records = Vec::new();
    for &k in &ks {
        for &theta in &dirs {
            let xi = [2.0 * k * theta[0], 2.0 * k * theta[1]];
            let mag = PI * sigma * sigma
                * (-sigma * sigma * (xi[0] * xi[0] + xi[1] * xi[1]) / 4.0).exp();
            let phase = Complex::new(0.0, xi[0] * center[0] + xi[1] * center[1]).exp();
            records.push(AmplitudeRecord {
                k,
                theta,
                theta_prime: [-theta[0], -theta[1], 0.0],
                value: -mag * phase,
                method: AmplitudeMethod::BornFirstOrder,
            });
        }
    }
    let recon = invert_backscatter(&records, &out_grid).unwrap();
    let (off, l2err) = reconstruction_metrics(&recon, &out_grid, center, 1.0, sigma);
    assert!(off <= h, "analytic loop: peak offset {off} vs cell {h}");
    assert!(l2err <= 0.20, "analytic loop: relative L2 error {l2err}");

    // solver loop at epsilon = 0.05
    let grid = make_grid(2, 6.0, 96).unwrap();
    let eps = 0.05;
    let spec = PotentialSpec::Scalar {
        profile: ScalarFamily::GaussianBump { amplitude: eps, sigma, center: [center[0], center[1], 0.0] },
    };
    let pot = sample_potential(&spec, &PotentialSpec::Zero, &grid).unwrap();
    let solver_dirs: Vec<[f64; 3]> = (0..16)
        .map(|j| {
            let phi = -PI / 2.0 + PI * (j as f64 + 0.5) / 16.0;
            [phi.cos(), phi.sin(), 0.0]
        })
        .collect();
    let solver_ks: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let mut solver_records = Vec::new();
    for &k in &solver_ks {
        for &theta in &solver_dirs {
            let value = backscatter_via_solver(&pot, k, theta, 1e-9);
            solver_records.push(AmplitudeRecord {
                k,
                theta,
                theta_prime: [-theta[0], -theta[1], 0.0],
                value,
                method: AmplitudeMethod::VolumeIntegral,
            });
        }
    }
    let recon_s = invert_backscatter(&solver_records, &out_grid).unwrap();
    let (off_s, _) = reconstruction_metrics(&recon_s, &out_grid, center, eps, sigma);
    assert!(off_s <= h, "solver loop: peak offset {off_s} vs cell {h}");

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "took {dt:.1} s");
    println!("A9 inversion closed loop (L2 {l2err:.3}, offsets {off:.2}/{off_s:.2}) ... PASS ({dt:.1} s)");
}
