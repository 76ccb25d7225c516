//! Unnormalised multi-dimensional DFTs over row-major buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X_k = Σ_m x_m e^{-2πi km/N}`
    Forward,
    /// `x_m = Σ_k X_k e^{+2πi km/N}` (no 1/N)
    Inverse,
}

pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn cube(n: usize, dim: usize) -> Self {
        Self::new(&vec![n; dim])
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn process(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.len());
        let plans = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let dim = self.shape.len();
        let mut scratch = Vec::new();
        let mut lines = Vec::new();
        for axis in 0..dim {
            let n = self.shape[axis];
            let plan = &plans[axis];
            let inner: usize = self.shape[axis + 1..].iter().product();
            scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
            if inner == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather the `inner` strided lines of each block into contiguous
            // rows, transform them together and scatter back.
            lines.resize(n * inner, Complex64::new(0.0, 0.0));
            for block in data.chunks_exact_mut(n * inner) {
                for i in 0..inner {
                    for k in 0..n {
                        lines[i * n + k] = block[k * inner + i];
                    }
                }
                plan.process_with_scratch(&mut lines, &mut scratch);
                for i in 0..inner {
                    for k in 0..n {
                        block[k * inner + i] = lines[i * n + k];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(data: &[Complex64], shape: &[usize], sign: f64) -> Vec<Complex64> {
        let total: usize = shape.iter().product();
        let idx = |mut f: usize| {
            let mut v = vec![0; shape.len()];
            for a in (0..shape.len()).rev() {
                v[a] = f % shape[a];
                f /= shape[a];
            }
            v
        };
        (0..total)
            .map(|k| {
                let kv = idx(k);
                (0..total)
                    .map(|m| {
                        let mv = idx(m);
                        let ph: f64 = (0..shape.len()).map(|a| (kv[a] * mv[a]) as f64 / shape[a] as f64).sum();
                        data[m] * Complex64::from_polar(1.0, sign * 2.0 * PI * ph)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for shape in [vec![8], vec![4, 6], vec![3, 4, 5]] {
            let total: usize = shape.iter().product();
            let data: Vec<_> = (0..total).map(|i| Complex64::new((i as f64).sin(), (1.3 * i as f64).cos())).collect();
            let plan = FftNd::new(&shape);
            for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
                let mut d = data.clone();
                plan.process(&mut d, dir);
                let expect = naive(&data, &shape, sign);
                for (a, b) in d.iter().zip(&expect) {
                    assert!((a - b).norm() < 1e-10);
                }
            }
        }
    }
}
