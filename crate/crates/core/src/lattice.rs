//! Zero-padded lattice convolutions on a half-plane grid.
//!
//! Every operator here has the form
//!
//! ```text
//! out(i, j) = sum_{i', j'} F(i - i', j - j') v(i', j') + M(i - i', j + j') v(i', j')
//! ```
//!
//! where `F` is a free-space kernel and `M` an image kernel depending on the
//! sum of row indices. Flipping `v` in `j` turns the image sum into an
//! ordinary convolution, so both terms share one padded FFT size of
//! `2 nx x 2 ny`, which holds every offset without wrap-around.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

struct Fft2 {
    px: usize,
    py: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(px: usize, py: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            px,
            py,
            row_fwd: planner.plan_fft_forward(px),
            row_inv: planner.plan_fft_inverse(px),
            col_fwd: planner.plan_fft_forward(py),
            col_inv: planner.plan_fft_inverse(py),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        data.par_chunks_mut(self.px).for_each(|r| row.process(r));
        // columns: transpose, transform, transpose back
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        for j in 0..self.py {
            for i in 0..self.px {
                t[i * self.py + j] = data[j * self.px + i];
            }
        }
        t.par_chunks_mut(self.py).for_each(|c| col.process(c));
        for j in 0..self.py {
            for i in 0..self.px {
                data[j * self.px + i] = t[i * self.py + j];
            }
        }
    }
}

/// A kernel pair (free, image) evaluated on lattice offsets.
pub(crate) struct KernelPair {
    free_hat: Vec<Complex64>,
    image_hat: Vec<Complex64>,
}

pub(crate) struct LatticeConvolver {
    grid: Grid,
    fft: Fft2,
    kernels: Vec<KernelPair>,
}

impl LatticeConvolver {
    /// `kernels[n] = (free(di, dj), image(di, s))` with `s = j + j'`.
    pub(crate) fn new<F, M>(grid: Grid, kernels: Vec<(F, M)>) -> Self
    where
        F: Fn(isize, isize) -> f64,
        M: Fn(isize, isize) -> f64,
    {
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        let (px, py) = (2 * grid.nx, 2 * grid.ny);
        let fft = Fft2::new(px, py);
        let wrap = |d: isize, p: usize| d.rem_euclid(p as isize) as usize;
        let kernels = kernels
            .into_iter()
            .map(|(free, image)| {
                let mut fh = vec![Complex64::new(0.0, 0.0); px * py];
                let mut ih = vec![Complex64::new(0.0, 0.0); px * py];
                for dj in (1 - ny)..ny {
                    for di in (1 - nx)..nx {
                        let k = wrap(dj, py) * px + wrap(di, px);
                        fh[k].re = free(di, dj);
                        // flipped rows: r = ny - 1 - j', so j + j' = dj + ny - 1
                        ih[k].re = image(di, dj + ny - 1);
                    }
                }
                fft.transform(&mut fh, false);
                fft.transform(&mut ih, false);
                KernelPair {
                    free_hat: fh,
                    image_hat: ih,
                }
            })
            .collect();
        Self { grid, fft, kernels }
    }

    /// Applies every kernel pair to `v`; one output vector per pair.
    pub(crate) fn apply(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let g = self.grid;
        let (px, py) = (self.fft.px, self.fft.py);
        let mut direct = vec![Complex64::new(0.0, 0.0); px * py];
        let mut flipped = vec![Complex64::new(0.0, 0.0); px * py];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let x = v[g.index(i, j)];
                direct[j * px + i].re = x;
                flipped[(g.ny - 1 - j) * px + i].re = x;
            }
        }
        self.fft.transform(&mut direct, false);
        self.fft.transform(&mut flipped, false);
        let scale = 1.0 / (px * py) as f64;
        self.kernels
            .iter()
            .map(|kp| {
                let mut acc: Vec<Complex64> = direct
                    .iter()
                    .zip(&flipped)
                    .zip(kp.free_hat.iter().zip(&kp.image_hat))
                    .map(|((a, b), (f, m))| a * f + b * m)
                    .collect();
                self.fft.transform(&mut acc, true);
                let mut out = vec![0.0; g.len()];
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        out[g.index(i, j)] = acc[j * px + i].re * scale;
                    }
                }
                out
            })
            .collect()
    }
}
