//! Spectral post-processing: projection onto the low-frequency band.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::GridFunction;
use crate::scalar::SpectralReal;

/// Removes every Fourier component with wavenumber index `|k| >= N/2`.
///
/// The `2N` nodal values sit on a uniform grid of spacing `h/2`, so a plain
/// length-`2N` DFT resolves indices `-N < k <= N`. The alias band of the
/// block scheme occupies `|k| > N/2`; both band-edge indices `+-N/2` are
/// dropped as well. A real input yields a real output.
pub fn spectral_filter<T: SpectralReal>(u: &GridFunction<T>) -> GridFunction<T> {
    let len = u.len();
    let n = u.grid().blocks() as i64;
    let mut planner = FftPlanner::new();
    let mut buf = u.values().to_vec();
    planner.plan_fft_forward(len).process(&mut buf);
    for (bin, v) in buf.iter_mut().enumerate() {
        let b = bin as i64;
        let k = if b > n { b - 2 * n } else { b };
        if 2 * k.abs() >= n {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let inv = T::one() / T::from_usize_lossy(len);
    let real = u.is_real(T::epsilon() * T::lit(16.0));
    let values = buf
        .into_iter()
        .map(|v| {
            if real {
                Complex::new(v.re * inv, T::zero())
            } else {
                v * inv
            }
        })
        .collect();
    u.with_values(values)
        .expect("filter preserves the grid size")
}
