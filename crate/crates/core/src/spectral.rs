//! Fourier tools on a uniform periodic grid over `[0, 2π)`.
//!
//! Every routine takes real samples `f[k] = f(2πk/N)` with `N` even.
//! Plans are cached per thread by `rustfft`'s planner.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward(f: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(f.len()));
    plan.process(&mut buf);
    buf
}

fn inverse_real(mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    plan.process(&mut spec);
    let scale = 1.0 / n as f64;
    spec.into_iter().map(|c| c.re * scale).collect()
}

/// Signed wavenumber of FFT bin `j`.
#[inline]
fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `m`-th derivative. Odd derivatives drop the Nyquist mode.
pub fn derivative(f: &[f64], order: u32) -> Vec<f64> {
    let n = f.len();
    let mut spec = forward(f);
    for (j, c) in spec.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        if order % 2 == 1 && j == n / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let factor = Complex64::new(0.0, k).powu(order);
        *c *= factor;
    }
    inverse_real(spec)
}

/// First and second derivative from a single forward transform.
pub fn first_and_second_derivative(f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let spec = forward(f);
    let mut d1 = spec.clone();
    let mut d2 = spec;
    for j in 0..n {
        let k = wavenumber(j, n);
        if j == n / 2 {
            d1[j] = Complex64::new(0.0, 0.0);
        } else {
            d1[j] *= Complex64::new(0.0, k);
        }
        d2[j] *= -k * k;
    }
    (inverse_real(d1), inverse_real(d2))
}

pub fn second_derivative(f: &[f64]) -> Vec<f64> {
    derivative(f, 2)
}

/// Highest wavenumber kept by [`dealiased`]: the two-thirds rule.
pub fn dealias_cutoff(n: usize) -> usize {
    n / 3
}

/// Low-passed samples and first derivative, with every mode above
/// [`dealias_cutoff`] removed, and a second derivative whose symbol `−k²` is
/// capped at `−k_c²` above the cutoff so those modes stay damped.
pub fn dealiased(f: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = f.len();
    let cutoff = dealias_cutoff(n) as f64;
    let spec = forward(f);
    let mut low = spec.clone();
    let mut d1 = spec.clone();
    let mut d2 = spec;
    for j in 0..n {
        let k = wavenumber(j, n);
        if k.abs() > cutoff {
            low[j] = Complex64::new(0.0, 0.0);
            d1[j] = Complex64::new(0.0, 0.0);
            d2[j] *= -cutoff * cutoff;
        } else {
            d1[j] *= Complex64::new(0.0, k);
            d2[j] *= -k * k;
        }
    }
    (inverse_real(low), inverse_real(d1), inverse_real(d2))
}

/// Periodic trapezoid rule, `∫₀^{2π} f dθ`.
pub fn integrate(f: &[f64]) -> f64 {
    let n = f.len();
    f.iter().sum::<f64>() * (2.0 * PI / n as f64)
}

/// `F(θ_k) = ∫₀^{θ_k} f dβ` with spectral accuracy. The mean of `f` is
/// integrated exactly as a linear ramp.
pub fn cumulative_integral(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mean = f.iter().sum::<f64>() / n as f64;
    let mut spec = forward(f);
    spec[0] = Complex64::new(0.0, 0.0);
    for (j, c) in spec.iter_mut().enumerate().skip(1) {
        if j == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= Complex64::new(0.0, wavenumber(j, n));
        }
    }
    let anti = inverse_real(spec);
    let offset = anti[0];
    let dtheta = 2.0 * PI / n as f64;
    anti.iter()
        .enumerate()
        .map(|(k, a)| a - offset + mean * dtheta * k as f64)
        .collect()
}

/// Real Fourier coefficients `(a_k, b_k)` of `f = a₀ + Σ a_k cos kθ + b_k sin kθ`
/// for `k = 0..=N/2`.
pub fn real_coefficients(f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let spec = forward(f);
    let half = n / 2;
    let mut a = vec![0.0; half + 1];
    let mut b = vec![0.0; half + 1];
    a[0] = spec[0].re / n as f64;
    for k in 1..=half {
        let scale = if k == half { 1.0 } else { 2.0 } / n as f64;
        a[k] = spec[k].re * scale;
        b[k] = -spec[k].im * scale;
    }
    (a, b)
}

/// Trigonometric interpolation onto a grid `factor` times finer.
pub fn refine(f: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1);
    let n = f.len();
    if factor == 1 {
        return f.to_vec();
    }
    let m = n * factor;
    let spec = forward(f);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for j in 0..half {
        padded[j] = spec[j];
    }
    for j in (half + 1)..n {
        padded[m - n + j] = spec[j];
    }
    // split the Nyquist bin symmetrically
    padded[half] = spec[half] * 0.5;
    padded[m - half] = spec[half] * 0.5;
    let scale = factor as f64;
    inverse_real(padded).into_iter().map(|x| x * scale).collect()
}

/// Evaluate the trigonometric interpolant of `f` at an arbitrary angle.
pub fn evaluate(f: &[f64], theta: f64) -> f64 {
    let (a, b) = real_coefficients(f);
    a.iter()
        .zip(&b)
        .enumerate()
        .map(|(k, (ak, bk))| {
            let kt = k as f64 * theta;
            ak * kt.cos() + bk * kt.sin()
        })
        .sum()
}

/// Fourth-order central difference derivatives, kept for cross-checking
/// the spectral path.
pub mod finite_difference {
    use std::f64::consts::PI;

    pub fn first(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|k| {
                let at = |o: isize| f[(k as isize + o).rem_euclid(n as isize) as usize];
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
            })
            .collect()
    }

    pub fn second(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|k| {
                let at = |o: isize| f[(k as isize + o).rem_euclid(n as isize) as usize];
                (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h)
            })
            .collect()
    }
}
