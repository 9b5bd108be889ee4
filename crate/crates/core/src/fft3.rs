//! In-place 3D FFT over a first-axis-fastest array, built from 1D rustfft plans.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims,
            forward: dims.map(|n| planner.plan_fft_forward(n)),
            inverse: dims.map(|n| planner.plan_fft_inverse(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the `1/N` normalisation.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        assert_eq!(data.len(), self.len());
        let [n0, n1, n2] = self.dims;
        // Axis 0 is contiguous.
        plans[0].process(data);
        let mut line = vec![C64::new(0.0, 0.0); n1.max(n2)];
        let mut scratch = vec![
            C64::new(0.0, 0.0);
            plans[1]
                .get_inplace_scratch_len()
                .max(plans[2].get_inplace_scratch_len())
        ];
        for k in 0..n2 {
            for i in 0..n0 {
                let base = k * n0 * n1 + i;
                for j in 0..n1 {
                    line[j] = data[base + j * n0];
                }
                plans[1].process_with_scratch(&mut line[..n1], &mut scratch);
                for j in 0..n1 {
                    data[base + j * n0] = line[j];
                }
            }
        }
        let stride = n0 * n1;
        for p in 0..stride {
            for k in 0..n2 {
                line[k] = data[p + k * stride];
            }
            plans[2].process_with_scratch(&mut line[..n2], &mut scratch);
            for k in 0..n2 {
                data[p + k * stride] = line[k];
            }
        }
    }
}
