//! Bessel/Hankel functions of orders 0, 1/2, 1 for positive real argument and
//! the outgoing Helmholtz Green's kernel G_k⁺ in dimensions 2 and 3.
//!
//! Orders 0 and 1 use the ascending power/log series below a fixed switch
//! point and the large-argument Hankel asymptotic expansion above it; order
//! 1/2 always uses the exact closed form H⁽¹⁾_{1/2}(z) = -i √(2/(πz)) e^{iz}.

use crate::error::{MagError, Result};
use crate::Complex;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Series/asymptotic crossover; both expansions reach <=1e-8 relative here.
const SWITCH_Z: f64 = 12.0;
const SERIES_TERMS: usize = 25;
const ASYMPTOTIC_TERMS: usize = 18;

/// Which evaluation path produced a kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalRegime {
    Series,
    ClosedForm,
    Asymptotic,
}

/// Green's kernel value with regime and error bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct GreenEval {
    pub value: Complex,
    pub regime: EvalRegime,
    pub estimated_abs_error: f64,
}

/// J_n(z) and Y_n(z) for n in {0,1} via the ascending series, plus a rounding
/// estimate from the largest partial term.
fn bessel_series(n: u32, z: f64) -> (f64, f64, f64) {
    let half = z / 2.0;
    let x = half * half; // (z/2)^2
    let log_term = half.ln() + EULER_GAMMA;

    match n {
        0 => {
            // J0 = sum (-1)^m x^m / (m!)^2
            // Y0 = (2/pi)[(ln(z/2)+gamma) J0 + sum (-1)^{m+1} H_m x^m/(m!)^2]
            let mut j = 1.0;
            let mut y_sum = 0.0;
            let mut term = 1.0;
            let mut harmonic = 0.0;
            let mut max_term = 1.0f64;
            for m in 1..=SERIES_TERMS {
                let mf = m as f64;
                term *= -x / (mf * mf);
                harmonic += 1.0 / mf;
                j += term;
                y_sum -= term * harmonic;
                max_term = max_term.max(term.abs());
            }
            let y = (2.0 / PI) * (log_term * j + y_sum);
            (j, y, max_term * 8.0 * f64::EPSILON)
        }
        1 => {
            // J1 = sum (-1)^m (z/2)^{2m+1} / (m!(m+1)!)
            // Y1 = (2/pi) ln(z/2) J1 - 2/(pi z)
            //      - (1/pi) sum (-1)^m [psi(m+1)+psi(m+2)] (z/2)^{2m+1}/(m!(m+1)!)
            let mut term = half;
            let mut j = term;
            let mut h_m = 0.0; // H_m
            let mut h_m1 = 1.0; // H_{m+1}
            let mut y_sum = term * (-2.0 * EULER_GAMMA + h_m + h_m1);
            let mut max_term = term.abs();
            for m in 1..=SERIES_TERMS {
                let mf = m as f64;
                term *= -x / (mf * (mf + 1.0));
                h_m += 1.0 / mf;
                h_m1 += 1.0 / (mf + 1.0);
                j += term;
                y_sum += term * (-2.0 * EULER_GAMMA + h_m + h_m1);
                max_term = max_term.max(term.abs());
            }
            let y = (2.0 / PI) * half.ln() * j - 2.0 / (PI * z) - y_sum / PI;
            (j, y, max_term * 8.0 * f64::EPSILON)
        }
        _ => unreachable!("only orders 0 and 1 have a series path"),
    }
}

/// H⁽¹⁾_nu(z) for large z via the Hankel asymptotic expansion
/// sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} sum_k i^k a_k(nu)/z^k.
fn hankel_asymptotic(nu: f64, z: f64) -> (Complex, f64) {
    let mu = 4.0 * nu * nu;
    let mut sum = Complex::new(1.0, 0.0);
    let mut a = 1.0f64;
    let mut last = f64::INFINITY;
    let mut tail = 0.0;
    for k in 1..=ASYMPTOTIC_TERMS {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0);
        let mag = (a / z.powi(k as i32)).abs();
        if mag > last {
            tail = last;
            break;
        }
        let ipow = Complex::new(0.0, 1.0).powu(k as u32);
        sum += ipow * a / z.powi(k as i32);
        tail = mag;
        last = mag;
    }
    let omega = z - nu * PI / 2.0 - PI / 4.0;
    let prefactor = (2.0 / (PI * z)).sqrt();
    let value = prefactor * Complex::new(omega.cos(), omega.sin()) * sum;
    (value, prefactor * tail)
}

fn hankel1_eval(order: f64, z: f64) -> Result<(Complex, EvalRegime, f64)> {
    if z <= 0.0 {
        return Err(MagError::InvalidArgument(format!(
            "hankel1 requires z > 0 (branch cut), got {z}"
        )));
    }
    if order == 0.5 {
        // exact half-integer closed form
        let amp = (2.0 / (PI * z)).sqrt();
        let v = Complex::new(0.0, -amp) * Complex::new(z.cos(), z.sin());
        return Ok((v, EvalRegime::ClosedForm, 4.0 * f64::EPSILON * amp));
    }
    let n = if order == 0.0 {
        0
    } else if order == 1.0 {
        1
    } else {
        return Err(MagError::InvalidArgument(format!(
            "hankel1 supports orders 0, 0.5, 1; got {order}"
        )));
    };
    if z <= SWITCH_Z {
        let (j, y, err) = bessel_series(n, z);
        Ok((Complex::new(j, y), EvalRegime::Series, err))
    } else {
        let (v, err) = hankel_asymptotic(n as f64, z);
        Ok((v, EvalRegime::Asymptotic, err))
    }
}

/// Hankel function of the first kind, H⁽¹⁾_order(z) = J + iY, for z > 0.
pub fn hankel1(order: f64, z: f64) -> Result<Complex> {
    hankel1_eval(order, z).map(|(v, _, _)| v)
}

/// J_n(z) for n in {0,1}, z > 0.
pub fn bessel_j(n: u32, z: f64) -> f64 {
    hankel1_eval(n as f64, z).expect("z > 0").0.re
}

/// Y_n(z) for n in {0,1}, z > 0.
pub fn bessel_y(n: u32, z: f64) -> f64 {
    hankel1_eval(n as f64, z).expect("z > 0").0.im
}

/// Outgoing Helmholtz Green's kernel G_k⁺(r).
///
/// dim 3: e^{ikr}/(4πr); dim 2: (i/4) H⁽¹⁾_0(kr).
pub fn green(k: f64, r: f64, dim: usize) -> Result<GreenEval> {
    if k <= 0.0 {
        return Err(MagError::InvalidArgument(format!("green requires k > 0, got {k}")));
    }
    if r <= 0.0 {
        return Err(MagError::InvalidArgument(
            "green is singular at r = 0; the self-cell quadrature weight handles it".into(),
        ));
    }
    match dim {
        3 => {
            let kr = k * r;
            let value = Complex::new(kr.cos(), kr.sin()) / (4.0 * PI * r);
            Ok(GreenEval {
                value,
                regime: EvalRegime::ClosedForm,
                estimated_abs_error: 4.0 * f64::EPSILON * value.norm(),
            })
        }
        2 => {
            let (h, regime, err) = hankel1_eval(0.0, k * r)?;
            Ok(GreenEval {
                value: Complex::new(0.0, 0.25) * h,
                regime,
                estimated_abs_error: 0.25 * err,
            })
        }
        _ => Err(MagError::InvalidArgument(format!("green supports dim 2 or 3, got {dim}"))),
    }
}

/// The coefficient c_n k^{(n-3)/2} multiplying e^{ik|x|}/|x|^{(n-1)/2} in the
/// far-field expansion of G_k⁺.
///
/// dim 3: 1/(4π); dim 2: e^{iπ/4}/sqrt(8πk).
pub fn green_farfield_constant(k: f64, dim: usize) -> Complex {
    match dim {
        3 => Complex::new(1.0 / (4.0 * PI), 0.0),
        2 => {
            let amp = 1.0 / (8.0 * PI * k).sqrt();
            Complex::from_polar(amp, PI / 4.0)
        }
        _ => panic!("green_farfield_constant supports dim 2 or 3"),
    }
}
