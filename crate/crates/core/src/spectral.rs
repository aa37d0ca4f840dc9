//! Uniform-grid periodic functions of time with cached discrete spectra,
//! plus Fourier-multiplier application. Everything else in the crate is
//! built on these two types.
//!
//! Conventions: a grid of `n` samples (power of two) covers one period
//! `T_per`. Functions of interest live on the window `[0, T_per/2]` and are
//! extended to the full period by even reflection, so windowed norms never
//! see an artificial jump. Spectra are normalized so that a pure mode
//! `cos(k * 2*pi*t / T_per)` has coefficient magnitude 1/2 at +-k.

use std::cell::RefCell;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [C64], forward: bool) {
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(buf.len())
        } else {
            p.plan_fft_inverse(buf.len())
        }
    });
    fft.process(buf);
}

/// A scalar function of time sampled on a uniform periodic grid.
///
/// Values may be complex; real-valued data keeps a conjugate-symmetric
/// spectrum. The spectrum is computed lazily and cached (the value array is
/// immutable after construction, so the cache is safe to share).
#[derive(Debug, Clone)]
pub struct SampledFunction {
    values: Vec<C64>,
    period: f64,
    spectrum: Arc<OnceLock<Vec<C64>>>,
}

fn check_grid(n: usize, period: f64) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(CoreError::InvalidParameter(format!(
            "grid size must be a power of two >= 8, got {n}"
        )));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(CoreError::InvalidParameter(format!("period must be positive, got {period}")));
    }
    Ok(())
}

impl SampledFunction {
    pub fn from_complex(values: Vec<C64>, period: f64) -> Result<Self> {
        check_grid(values.len(), period)?;
        Ok(Self { values, period, spectrum: Arc::new(OnceLock::new()) })
    }

    pub fn from_real(values: Vec<f64>, period: f64) -> Result<Self> {
        Self::from_complex(values.into_iter().map(|v| C64::new(v, 0.0)).collect(), period)
    }

    /// Sample `f` over one full period at `n` points.
    pub fn from_periodic_fn(f: impl Fn(f64) -> f64, n: usize, period: f64) -> Result<Self> {
        check_grid(n, period)?;
        let h = period / n as f64;
        Self::from_real((0..n).map(|i| f(i as f64 * h)).collect(), period)
    }

    /// Sample `f` on the window `[0, window]` and extend by even reflection
    /// to a periodic function of period `2 * window` on `n` points.
    pub fn from_window_fn(f: impl Fn(f64) -> f64, n: usize, window: f64) -> Result<Self> {
        let period = 2.0 * window;
        check_grid(n, period)?;
        let h = period / n as f64;
        let values = (0..n)
            .map(|i| {
                let t = i as f64 * h;
                if t <= window { f(t) } else { f(period - t) }
            })
            .collect();
        Self::from_real(values, period)
    }

    pub fn constant(value: f64, n: usize, period: f64) -> Result<Self> {
        Self::from_real(vec![value; n], period)
    }

    pub fn zeros(n: usize, period: f64) -> Result<Self> {
        Self::constant(0.0, n, period)
    }

    /// Rebuild a function from its spectrum (same normalization as
    /// [`SampledFunction::spectrum`]).
    pub fn from_spectrum(spectrum: Vec<C64>, period: f64) -> Result<Self> {
        check_grid(spectrum.len(), period)?;
        let mut buf = spectrum.clone();
        fft_in_place(&mut buf, false);
        let out = Self { values: buf, period, spectrum: Arc::new(OnceLock::new()) };
        let _ = out.spectrum.set(spectrum);
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Length of the analysis window `[0, T]`, half the period.
    pub fn window(&self) -> f64 {
        self.period / 2.0
    }

    pub fn grid_spacing(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn sample_time(&self, i: usize) -> f64 {
        i as f64 * self.grid_spacing()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> C64 {
        self.values[i]
    }

    /// Signed integer frequency index of spectrum bin `b`, in (-n/2, n/2].
    pub fn freq_index(&self, b: usize) -> i64 {
        let n = self.len() as i64;
        let b = b as i64;
        if b <= n / 2 { b } else { b - n }
    }

    /// Physical angular frequency of spectrum bin `b`: 2*pi*k / T_per.
    pub fn freq(&self, b: usize) -> f64 {
         2.0 * std::f64::consts::PI * self.freq_index(b) as f64 / self.period
    }

    /// Discrete Fourier coefficients, cached. Normalized by 1/n so a unit
    /// constant transforms to coefficient 1 at the zero bin.
    pub fn spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| {
            let n = self.values.len();
            let mut buf = self.values.clone();
            fft_in_place(&mut buf, true);
            let scale = 1.0 / n as f64;
            for c in &mut buf {
                *c *= scale;
            }
            buf
        })
    }

    /// Apply a Fourier multiplier given by `symbol` evaluated at the
    /// physical frequency of every bin.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> C64) -> Result<Self> {
        let spec = self.spectrum();
        let scale = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let occupied = 1e-13 * scale;
        let mut out = Vec::with_capacity(spec.len());
        for (b, &c) in spec.iter().enumerate() {
            let s = symbol(self.freq(b));
            if !(s.re.is_finite() && s.im.is_finite()) {
                if c.norm() > occupied {
                    return Err(CoreError::NonFiniteSymbol { freq: self.freq(b), coeff_mag: c.norm() });
                }
                out.push(C64::new(0.0, 0.0));
            } else {
                out.push(s * c);
            }
        }
        Self::from_spectrum(out, self.period)
    }

    /// Spectral time derivative. The Nyquist bin is zeroed, which keeps real
    /// data real; everything band-limited below Nyquist is differentiated
    /// exactly.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        let spec = self.spectrum();
        let mut out = Vec::with_capacity(n);
        for (b, &c) in spec.iter().enumerate() {
            if b == n / 2 {
                out.push(C64::new(0.0, 0.0));
            } else {
                out.push(C64::new(0.0, self.freq(b)) * c);
            }
        }
        Self::from_spectrum(out, self.period).expect("grid preserved")
    }

    /// Exact translation of the underlying trigonometric interpolant:
    /// returns t -> f(t + tau).
    pub fn translate(&self, tau: f64) -> Self {
        let spec = self.spectrum();
        let out = spec
            .iter()
            .enumerate()
            .map(|(b, &c)| (C64::new(0.0, self.freq(b) * tau)).exp() * c)
            .collect();
        Self::from_spectrum(out, self.period).expect("grid preserved")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.max_imag() <= 1e-11 * (1.0 + self.max_abs())
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    /// Windowed L^p norm over `[0, T_per/2]`; trapezoid quadrature for
    /// finite p, grid max for p = infinity.
    pub fn lp_window(&self, p: f64) -> f64 {
        let half = self.len() / 2;
        let pts = &self.values[..=half];
        if p.is_infinite() {
            return pts.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        assert!(p >= 1.0, "L^p exponent must be >= 1");
        let h = self.grid_spacing();
        let mut acc = 0.0;
        for (i, v) in pts.iter().enumerate() {
            let w = if i == 0 || i == half { 0.5 } else { 1.0 };
            acc += w * v.norm().powf(p);
        }
        (h * acc).powf(1.0 / p)
    }

    /// Max norm over points of `[lo, hi]` within the window; used by the
    /// shifted-difference seminorms.
    pub fn lp_window_range(&self, p: f64, lo: f64, hi: f64) -> f64 {
        let h = self.grid_spacing();
        let i0 = (lo / h).ceil() as usize;
        let i1 = (hi / h).floor() as usize;
        let i1 = i1.min(self.len() - 1);
        assert!(i1 >= i0, "empty norm window");
        let pts = &self.values[i0..=i1];
        if p.is_infinite() {
            return pts.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        assert!(p >= 1.0);
        let mut acc = 0.0;
        let last = pts.len() - 1;
        for (i, v) in pts.iter().enumerate() {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            acc += w * v.norm().powf(p);
        }
        (h * acc).powf(1.0 / p)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            period: self.period,
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        assert_eq!(self.period, other.period, "period mismatch");
        Self {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            period: self.period,
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| c * v)
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }
}

/// An m x m matrix of [`SampledFunction`]s sharing one grid.
#[derive(Debug, Clone)]
pub struct MatrixFunction {
    entries: Vec<SampledFunction>,
    m: usize,
}

impl MatrixFunction {
    pub fn new(entries: Vec<SampledFunction>, m: usize) -> Result<Self> {
        if entries.len() != m * m {
            return Err(CoreError::InvalidParameter(format!(
                "expected {} entries for a {m}x{m} matrix, got {}",
                m * m,
                entries.len()
            )));
        }
        let n = entries[0].len();
        let period = entries[0].period();
        for e in &entries {
            if e.len() != n || e.period() != period {
                return Err(CoreError::InvalidParameter("matrix entries on mismatched grids".into()));
            }
        }
        Ok(Self { entries, m })
    }

    pub fn zeros(m: usize, n: usize, period: f64) -> Result<Self> {
        let z = SampledFunction::zeros(n, period)?;
        Self::new(vec![z; m * m], m)
    }

    pub fn identity(m: usize, n: usize, period: f64) -> Result<Self> {
        let mut out = Self::zeros(m, n, period)?;
        let one = SampledFunction::constant(1.0, n, period)?;
        for i in 0..m {
            out.set(i, i, one.clone());
        }
        Ok(out)
    }

    /// Assemble from a per-sample matrix generator.
    pub fn from_samples(
        m: usize,
        n: usize,
        period: f64,
        mut at: impl FnMut(usize) -> nalgebra::DMatrix<C64>,
    ) -> Result<Self> {
        let mut cols: Vec<Vec<C64>> = vec![Vec::with_capacity(n); m * m];
        for i in 0..n {
            let a = at(i);
            assert_eq!(a.nrows(), m);
            assert_eq!(a.ncols(), m);
            for r in 0..m {
                for c in 0..m {
                    cols[r * m + c].push(a[(r, c)]);
                }
            }
        }
        let entries = cols
            .into_iter()
            .map(|v| SampledFunction::from_complex(v, period))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, m)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.entries[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.entries[0].period()
    }

    pub fn entry(&self, r: usize, c: usize) -> &SampledFunction {
        &self.entries[r * self.m + c]
    }

    pub fn set(&mut self, r: usize, c: usize, f: SampledFunction) {
        assert_eq!(f.len(), self.len());
        self.entries[r * self.m + c] = f;
    }

    pub fn at_sample(&self, i: usize) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.m, self.m, |r, c| self.entry(r, c).value(i))
    }

    pub fn map_entries(&self, f: impl Fn(&SampledFunction) -> SampledFunction) -> Self {
        Self { entries: self.entries.iter().map(f).collect(), m: self.m }
    }

    pub fn try_map_entries(
        &self,
        f: impl Fn(&SampledFunction) -> Result<SampledFunction>,
    ) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self { entries, m: self.m })
    }

    pub fn derivative(&self) -> Self {
        self.map_entries(|e| e.derivative())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m);
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect(),
            m: self.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m);
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect(),
            m: self.m,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_entries(|e| e.scale(c))
    }

    /// Pointwise-in-time matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m);
        let m = self.m;
        let n = self.len();
        let mut out = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                let mut vals = vec![C64::new(0.0, 0.0); n];
                for k in 0..m {
                    let a = self.entry(r, k).values();
                    let b = other.entry(k, c).values();
                    for i in 0..n {
                        vals[i] += a[i] * b[i];
                    }
                }
                out.push(SampledFunction::from_complex(vals, self.period()).expect("grid ok"));
            }
        }
        Self { entries: out, m }
    }

    /// Conjugate transpose, pointwise in time.
    pub fn adjoint(&self) -> Self {
        let m = self.m;
        let mut entries = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                entries.push(self.entry(c, r).map(|v| v.conj()));
            }
        }
        Self { entries, m }
    }

    /// Pointwise inverse; errors if any sample is (numerically) singular.
    pub fn inverse(&self, eps_hint: f64) -> Result<Self> {
        let m = self.m;
        let n = self.len();
        let mut inv_samples = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.at_sample(i);
            match a.clone().try_inverse() {
                Some(inv) => inv_samples.push(inv),
                None => return Err(CoreError::EpsTooLarge { eps: eps_hint, t_index: i }),
            }
        }
        Self::from_samples(m, n, self.period(), |i| inv_samples[i].clone())
    }

    /// Largest entry magnitude over all times.
    pub fn sup_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|e| e.max_imag()).fold(0.0, f64::max)
    }

    /// Largest deviation from self-adjointness over the grid.
    pub fn self_adjoint_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.m {
            for c in r..self.m {
                let a = self.entry(r, c).values();
                let b = self.entry(c, r).values();
                for i in 0..a.len() {
                    worst = worst.max((a[i] - b[i].conj()).norm());
                }
            }
        }
        worst
    }

    /// Spectral norm at one sample.
    pub fn opnorm_at(&self, i: usize) -> f64 {
        let a = self.at_sample(i);
        a.svd(false, false).singular_values.max()
    }

    /// Frobenius norm at one sample.
    pub fn frobenius_at(&self, i: usize) -> f64 {
        self.entries.iter().map(|e| e.value(i).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn grid_spacing(&self) -> f64 {
        self.entries[0].grid_spacing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const N: usize = 1024;
    const TP: f64 = 2.0 * PI;

    #[test]
    fn constant_transforms_to_dc_bin() {
        let f = SampledFunction::constant(1.0, N, TP).unwrap();
        let s = f.spectrum();
        assert_relative_eq!(s[0].re, 1.0, max_relative = 1e-14);
        for b in 1..N {
            assert!(s[b].norm() < 1e-13, "bin {b} leaked {:?}", s[b]);
        }
    }

    #[test]
    fn pure_mode_has_half_magnitude_at_pm_k() {
        let f = SampledFunction::from_periodic_fn(|t| (32.0 * t).cos(), N, TP).unwrap();
        let s = f.spectrum();
        for b in 0..N {
            let k = f.freq_index(b);
            let expect = if k.unsigned_abs() == 32 { 0.5 } else { 0.0 };
            assert!((s[b].norm() - expect).abs() < 1e-12, "bin {b} (k={k}): {:?}", s[b]);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let vals: Vec<f64> = (0..N).map(|_| rng()).collect();
        let f = SampledFunction::from_real(vals.clone(), TP).unwrap();
        let back = SampledFunction::from_spectrum(f.spectrum().to_vec(), TP).unwrap();
        let scale = f.max_abs();
        for i in 0..N {
            assert!((back.value(i).re - vals[i]).abs() <= 1e-12 * scale);
            assert!(back.value(i).im.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn real_input_spectrum_is_conjugate_symmetric() {
        let f = SampledFunction::from_periodic_fn(|t| (3.0 * t).cos() + 0.5 * (7.0 * t).sin(), N, TP)
            .unwrap();
        let s = f.spectrum();
        for b in 1..N {
            let sym = s[N - b].conj();
            assert!((s[b] - sym).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let f = SampledFunction::from_periodic_fn(|t| (5.0 * t).cos() * (1.0 + t.sin()), N, TP).unwrap();
        let g = f.apply_multiplier(|_| C64::new(1.0, 0.0)).unwrap();
        for i in 0..N {
            assert!((f.value(i) - g.value(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_multiplier_matches_analytic_derivative() {
        let f = SampledFunction::from_periodic_fn(|t| (8.0 * t).cos(), N, TP).unwrap();
        let df = f.apply_multiplier(|w| C64::new(0.0, w)).unwrap();
        for i in 0..N {
            let t = f.sample_time(i);
            let expect = -8.0 * (8.0 * t).sin();
            assert!((df.value(i).re - expect).abs() < 1e-10);
            assert!(df.value(i).im.abs() < 1e-10);
        }
    }

    #[test]
    fn non_finite_symbol_on_occupied_frequency_errors() {
        let f = SampledFunction::constant(1.0, N, TP).unwrap();
        let err = f.apply_multiplier(|w| C64::new(1.0 / w, 0.0)).unwrap_err();
        assert!(matches!(err, CoreError::NonFiniteSymbol { .. }));
        // Same symbol is fine when the DC bin is empty.
        let g = SampledFunction::from_periodic_fn(|t| (4.0 * t).cos(), N, TP).unwrap();
        assert!(g.apply_multiplier(|w| C64::new(1.0 / w, 0.0)).is_ok());
    }

    #[test]
    fn translation_is_exact_on_modes() {
        let f = SampledFunction::from_periodic_fn(|t| (6.0 * t).cos(), N, TP).unwrap();
        let tau = 0.1234567;
        let g = f.translate(tau);
        for i in 0..N {
            let t = f.sample_time(i);
            assert!((g.value(i).re - (6.0 * (t + tau)).cos()).abs() < 1e-11);
        }
    }

    #[test]
    fn window_reflection_avoids_jump() {
        let f = SampledFunction::from_window_fn(|t| t * t, N, 1.0).unwrap();
        assert_relative_eq!(f.value(0).re, 0.0, epsilon = 1e-15);
        // reflected half mirrors the window
        let h = f.grid_spacing();
        let i = (0.3 / h).round() as usize;
        let j = ((2.0 - 0.3) / h).round() as usize;
        assert_relative_eq!(f.value(i).re, f.value(j).re, epsilon = 1e-12);
    }

    #[test]
    fn parseval_holds_on_the_full_grid() {
        let f = SampledFunction::from_periodic_fn(|t| (2.0 * t).cos() + 0.3 * (9.0 * t).sin(), N, TP)
            .unwrap();
        let time_side: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / N as f64;
        let freq_side: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(time_side, freq_side, max_relative = 1e-10);
    }

    #[test]
    fn matrix_matmul_and_inverse_roundtrip() {
        let n = 64;
        let a = MatrixFunction::from_samples(2, n, TP, |i| {
            let t = i as f64 * TP / n as f64;
            nalgebra::DMatrix::from_row_slice(2, 2, &[
                C64::new(2.0 + t.sin() * 0.1, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.1, 0.0),
                C64::new(1.5, 0.0),
            ])
        })
        .unwrap();
        let inv = a.inverse(0.0).unwrap();
        let prod = a.matmul(&inv);
        let id = MatrixFunction::identity(2, n, TP).unwrap();
        assert!(prod.sub(&id).sup_abs() < 1e-12);
    }
}
