//! Multidimensional complex FFT on cubic arrays, built on rustfft.
//!
//! Layout is x-fastest: idx = x + n*y (+ n^2*z). Each pass transforms the
//! contiguous axis and then cyclically rotates the axes, so after `dim`
//! passes every axis is transformed and the layout is back to the original.

use crate::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftNd {
    pub dim: usize,
    pub size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(dim: usize, size: usize) -> Self {
        assert!(dim == 2 || dim == 3);
        let mut planner = FftPlanner::new();
        FftNd {
            dim,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    fn pass(&self, data: &mut [Complex], fft: &Arc<dyn Fft<f64>>) {
        let n = self.size;
        for _ in 0..self.dim {
            data.par_chunks_exact_mut(n).for_each(|line| fft.process(line));
            rotate_axes(data, n, self.dim);
        }
    }

    pub fn forward(&self, data: &mut [Complex]) {
        assert_eq!(data.len(), self.len());
        self.pass(data, &self.forward);
    }

    /// Inverse transform including the 1/N normalization.
    pub fn backward(&self, data: &mut [Complex]) {
        assert_eq!(data.len(), self.len());
        self.pass(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

/// Cyclic axis rotation: the old second-fastest axis becomes contiguous.
fn rotate_axes(data: &mut [Complex], n: usize, dim: usize) {
    let mut out = vec![Complex::default(); data.len()];
    match dim {
        2 => {
            out.par_chunks_exact_mut(n).enumerate().for_each(|(x, row)| {
                for (y, v) in row.iter_mut().enumerate() {
                    *v = data[x + n * y];
                }
            });
        }
        3 => {
            // in: x + n y + n^2 z  ->  out: y + n z + n^2 x
            out.par_chunks_exact_mut(n * n).enumerate().for_each(|(x, plane)| {
                for z in 0..n {
                    for y in 0..n {
                        plane[y + n * z] = data[x + n * y + n * n * z];
                    }
                }
            });
        }
        _ => unreachable!(),
    }
    data.copy_from_slice(&out);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_3d() {
        let n = 6;
        let fft = FftNd::new(3, n);
        let orig: Vec<Complex> = (0..fft.len())
            .map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.backward(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_delta_2d() {
        let n = 8;
        let fft = FftNd::new(2, n);
        let (kx, ky) = (3usize, 5usize);
        let mut data: Vec<Complex> = (0..n * n)
            .map(|i| {
                let (x, y) = (i % n, i / n);
                let phase = 2.0 * std::f64::consts::PI * (kx * x + ky * y) as f64 / n as f64;
                Complex::from_polar(1.0, phase)
            })
            .collect();
        fft.forward(&mut data);
        // forward uses e^{-i 2 pi k x / n}; the peak sits at (kx, ky)
        for (i, v) in data.iter().enumerate() {
            let expect = if i == kx + n * ky { (n * n) as f64 } else { 0.0 };
            assert!((v - Complex::new(expect, 0.0)).norm() < 1e-9, "bin {i}: {v}");
        }
    }
}
