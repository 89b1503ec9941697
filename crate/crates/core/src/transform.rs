//! Three-dimensional lattice <-> position transforms built on `rustfft`.
//!
//! A lattice of wave components `k_a(m) = k_center_a + m dk_a` (m in
//! `[-N/2, N/2)`, stored in FFT order) is paired with positions
//! `y_a(j) = y0_a + j dy_a` where `dk_a dy_a = 2 pi / N_a`. Each axis carries a
//! sign `s_a` so the kernel is `exp(i s_a k_a y_a)`; the time axis of a
//! timelike plane uses `s = -1` because the contraction `kx` contains `-k0 t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeGeometry {
    pub dims: [usize; 3],
    pub dk: [f64; 3],
    pub k_center: [f64; 3],
    /// Position of index `j = 0` on each axis.
    pub y0: [f64; 3],
    pub signs: [f64; 3],
}

impl LatticeGeometry {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dy(&self, axis: usize) -> f64 {
        2.0 * PI / (self.dims[axis] as f64 * self.dk[axis])
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let [_, n1, n2] = self.dims;
        [idx / (n1 * n2), (idx / n2) % n1, idx % n2]
    }

    pub fn join(&self, q: [usize; 3]) -> usize {
        (q[0] * self.dims[1] + q[1]) * self.dims[2] + q[2]
    }

    pub fn k_component(&self, axis: usize, q: usize) -> f64 {
        self.k_center[axis] + signed_frequency(q, self.dims[axis]) as f64 * self.dk[axis]
    }

    pub fn y_component(&self, axis: usize, j: usize) -> f64 {
        self.y0[axis] + j as f64 * self.dy(axis)
    }
}

/// FFT-order index to signed frequency in `[-N/2, N/2)`.
pub fn signed_frequency(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

/// Inverse of [`signed_frequency`].
pub fn fft_index(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

fn phase_table(len: usize, f: impl Fn(usize) -> f64) -> Vec<Complex64> {
    (0..len).map(|i| Complex64::from_polar(1.0, f(i))).collect()
}

fn apply_separable(data: &mut [Complex64], g: &LatticeGeometry, tables: &[Vec<Complex64>; 3]) {
    let [_, n1, n2] = g.dims;
    data.par_chunks_mut(n1 * n2).enumerate().for_each(|(i0, slab)| {
        let p0 = tables[0][i0];
        for (i1, row) in slab.chunks_mut(n2).enumerate() {
            let p01 = p0 * tables[1][i1];
            for (v, p2) in row.iter_mut().zip(&tables[2]) {
                *v *= p01 * p2;
            }
        }
    });
}

/// In-place unnormalized DFT along each axis with the given direction.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], dirs: [FftDirection; 3]) {
    let [n0, n1, n2] = dims;
    assert_eq!(data.len(), n0 * n1 * n2);
    let mut planner = FftPlanner::<f64>::new();

    let fft = planner.plan_fft(n2, dirs[2]);
    data.par_chunks_mut(n2).for_each(|line| fft.process(line));

    for (axis, n, stride) in [(1usize, n1, n2), (0usize, n0, n1 * n2)] {
        let fft = planner.plan_fft(n, dirs[axis]);
        // Lines along `axis` are indexed by (outer, inner) with
        // idx = outer * n * stride + j * stride + inner.
        let outer = data.len() / (n * stride);
        let lines: Vec<Vec<Complex64>> = (0..outer * stride)
            .into_par_iter()
            .map(|l| {
                let (o, i) = (l / stride, l % stride);
                let base = o * n * stride + i;
                let mut line: Vec<Complex64> = (0..n).map(|j| data[base + j * stride]).collect();
                fft.process(&mut line);
                line
            })
            .collect();
        for (l, line) in lines.into_iter().enumerate() {
            let (o, i) = (l / stride, l % stride);
            let base = o * n * stride + i;
            for (j, v) in line.into_iter().enumerate() {
                data[base + j * stride] = v;
            }
        }
    }
}

fn direction(sign: f64, forward_kernel: bool) -> FftDirection {
    // rustfft: Forward = exp(-i ...), Inverse = exp(+i ...)
    let positive = (sign > 0.0) != forward_kernel;
    if positive {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    }
}

/// `out[j] = sum_q c[q] exp(i sum_a s_a k_a(q) y_a(j))`, in place.
pub fn lattice_to_positions(data: &mut [Complex64], g: &LatticeGeometry) {
    let pre: [Vec<Complex64>; 3] = std::array::from_fn(|a| {
        let n = g.dims[a];
        phase_table(n, |q| {
            g.signs[a] * signed_frequency(q, n) as f64 * g.dk[a] * g.y0[a]
        })
    });
    apply_separable(data, g, &pre);
    fft3(
        data,
        g.dims,
        std::array::from_fn(|a| direction(g.signs[a], false)),
    );
    let post: [Vec<Complex64>; 3] =
        std::array::from_fn(|a| phase_table(g.dims[a], |j| g.signs[a] * g.k_center[a] * g.y_component(a, j)));
    apply_separable(data, g, &post);
}

/// Adjoint of [`lattice_to_positions`]:
/// `c[q] = sum_j f[j] exp(-i sum_a s_a k_a(q) y_a(j))`, in place.
pub fn positions_to_lattice(data: &mut [Complex64], g: &LatticeGeometry) {
    let pre: [Vec<Complex64>; 3] = std::array::from_fn(|a| {
        phase_table(g.dims[a], |j| -g.signs[a] * g.k_center[a] * g.y_component(a, j))
    });
    apply_separable(data, g, &pre);
    fft3(data, g.dims, std::array::from_fn(|a| direction(g.signs[a], true)));
    let post: [Vec<Complex64>; 3] = std::array::from_fn(|a| {
        let n = g.dims[a];
        phase_table(n, |q| {
            -g.signs[a] * signed_frequency(q, n) as f64 * g.dk[a] * g.y0[a]
        })
    });
    apply_separable(data, g, &post);
}
