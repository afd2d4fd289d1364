//! Periodic grids standing in for `R^d`, complex fields on them, and the
//! pointwise/spectral operators everything else is built from.
//!
//! The continuum Fourier transform is realized in the unitary convention
//! `û(ξ) = (2π)^{-d/2} ∫ e^{-iξ·x} u(x) dx`. A transform written without the
//! `(2π)^{-d/2}` factor differs from ours by [`NON_UNITARY_FACTOR`] raised to
//! the dimension.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{chirp_sum, fft_nd, for_each_line};

pub type C64 = Complex64;

/// `(2π)^{1/2}`: per-dimension ratio between `∫e^{-ixy}u(y)dy` and the
/// unitary transform.
pub const NON_UNITARY_FACTOR: f64 = 2.506_628_274_631_000_7;

/// Default relative mass threshold for the aliasing monitors.
pub const DEFAULT_ALIAS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{1, 2}}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{n} points per axis: need a power of two >= 16"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {length} must be positive")));
        }
        Ok(Self { d, n, length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Coordinate of index `i` along any axis; lies in `[-L/2, L/2)`.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Signed integer wavenumber index for FFT-ordered slot `i`
    /// (`0..N/2-1` then `-N/2..-1`).
    pub fn wave_index(&self, i: usize) -> i64 {
        let h = self.n / 2;
        if i < h {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2πk/L` for FFT-ordered slot `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.wave_index(i) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest resolved angular wavenumber, `π/dx`.
    pub fn nyquist(&self) -> f64 {
        PI / self.dx()
    }

    /// Frequency-side grid of the unitary transform: spacing `2π/L`,
    /// side `2πN/L`, centered like the physical grid.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            d: self.d,
            n: self.n,
            length: 2.0 * PI * self.n as f64 / self.length,
        }
    }

    /// Per-axis indices of a flat row-major index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.d == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    /// Coordinates of a flat index (unused axes are zero).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        if self.d == 1 {
            [self.coord(idx[0]), 0.0]
        } else {
            [self.coord(idx[0]), self.coord(idx[1])]
        }
    }

    pub fn radius_sq(&self, flat: usize) -> f64 {
        let p = self.point(flat);
        p[0] * p[0] + p[1] * p[1]
    }

    /// `|ξ|²` per flat index in FFT order.
    pub fn wavenumber_sq(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        (0..self.len())
            .map(|flat| {
                let idx = self.unflatten(flat);
                if self.d == 1 {
                    k[idx[0]] * k[idx[0]]
                } else {
                    k[idx[0]] * k[idx[0]] + k[idx[1]] * k[idx[1]]
                }
            })
            .collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} N={} L={}", self.d, self.n, self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Physical,
    Lens,
}

impl Frame {
    pub fn code(self) -> u8 {
        match self {
            Frame::Physical => 0,
            Frame::Lens => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Frame::Physical),
            1 => Some(Frame::Lens),
            _ => None,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::Physical => f.write_str("physical"),
            Frame::Lens => f.write_str("lens"),
        }
    }
}

/// Aliasing monitor configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliasPolicy {
    /// Largest tolerated fraction of mass that a resampling may lose or fold.
    pub tolerance: f64,
    /// Chirps: gate on the worst-case edge gradient instead of the
    /// mass-weighted gradient.
    pub strict: bool,
}

impl Default for AliasPolicy {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_ALIAS_TOLERANCE,
            strict: false,
        }
    }
}

impl AliasPolicy {
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }

    /// Monitor that never trips; for oracles that knowingly run past the gate.
    pub fn unchecked() -> Self {
        Self {
            tolerance: f64::INFINITY,
            strict: false,
        }
    }
}

/// Complex samples on a grid with a time stamp and a frame tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<C64>,
    t: f64,
    frame: Frame,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<C64>, t: f64, frame: Frame) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite sample at {bad}")));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time stamp {t}")));
        }
        Ok(Self { grid, values, t, frame })
    }

    pub fn zeros(grid: GridSpec, t: f64, frame: Frame) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            t,
            frame,
        }
    }

    /// Samples `f(x)` at every grid point; `x` has length `d`.
    pub fn from_fn<F>(grid: GridSpec, t: f64, frame: Frame, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> C64,
    {
        let values = (0..grid.len())
            .map(|flat| {
                let p = grid.point(flat);
                f(&p[..grid.dim()])
            })
            .collect();
        Self { grid, values, t, frame }
    }

    /// Same grid/time/frame, new samples. Callers guarantee finiteness.
    pub(crate) fn with_values(&self, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self {
            grid: self.grid,
            values,
            t: self.t,
            frame: self.frame,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn in_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame != frame {
            return Err(Error::FrameMismatch {
                expected: frame.to_string(),
                found: self.frame.to_string(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    pub fn map<F: FnMut(usize, C64) -> C64>(&self, mut f: F) -> Self {
        self.with_values(self.values.iter().enumerate().map(|(i, v)| f(i, *v)).collect())
    }

    /// Pointwise sum; grids must agree.
    pub fn add(&self, other: &Field) -> Result<Self> {
        self.same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument(format!(
                "grid mismatch: {} vs {}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `M(u) = ∫|u|² dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(∫|u|^r dx)^{1/r}`; `r = ∞` is the max modulus.
    pub fn lp_norm(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 1.0 {
            return Err(Error::InvalidArgument(format!("Lebesgue exponent {r} < 1")));
        }
        if r.is_infinite() {
            return Ok(self.sup_norm());
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(r)).sum();
        Ok((s * self.grid.cell_volume()).powf(1.0 / r))
    }

    /// `⟨a, b⟩ = ∫ a · conj(b) dx`.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.same_grid(other)?;
        let s: C64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.mass().sqrt())
    }

    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Fraction of mass with some coordinate in the outer shell
    /// `|x_i| > (1/2 - margin) L`.
    pub fn boundary_mass_fraction(&self, margin: f64) -> Result<f64> {
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::InvalidArgument(format!("margin {margin} not in (0, 0.5)")));
        }
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        let edge = (0.5 - margin) * self.grid.length();
        let d = self.grid.dim();
        let outer: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(flat, _)| {
                let p = self.grid.point(*flat);
                p[..d].iter().any(|c| c.abs() > edge)
            })
            .map(|(_, v)| v.norm_sqr())
            .sum();
        Ok((outer / total).clamp(0.0, 1.0))
    }

    /// Unnormalized DFT coefficients in FFT order.
    pub fn dft(&self) -> Vec<C64> {
        let mut buf = self.values.clone();
        fft_nd(&mut buf, self.grid.points_per_axis(), self.grid.dim(), false);
        buf
    }

    /// Inverse of [`Field::dft`] onto this field's grid/time/frame.
    pub fn from_dft(&self, mut coeffs: Vec<C64>) -> Self {
        let n = self.grid.points_per_axis();
        fft_nd(&mut coeffs, n, self.grid.dim(), true);
        let s = 1.0 / self.grid.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= s);
        self.with_values(coeffs)
    }

    /// Fraction of spectral mass with some `|k_i| > fraction · N/2`.
    pub fn spectral_tail_fraction(&self, fraction: f64) -> f64 {
        let coeffs = self.dft();
        spectral_tail(&self.grid, &coeffs, fraction)
    }

    /// Unitary Fourier transform onto the dual grid (exact DFT; Parseval and
    /// round trip hold to rounding).
    pub fn fourier_forward(&self) -> Field {
        self.unitary_dft(false)
    }

    /// Inverse of [`Field::fourier_forward`].
    pub fn fourier_inverse(&self) -> Field {
        self.unitary_dft(true)
    }

    fn unitary_dft(&self, inverse: bool) -> Field {
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let step = self.grid.dx();
        let scale = step / (2.0 * PI).sqrt();
        let mut buf = self.values.clone();
        let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        for axis in 0..d {
            for_each_line(&mut buf, n, d, axis, |line| {
                line.iter_mut().enumerate().for_each(|(j, v)| *v *= sign(j));
                crate::spectral::fft_in_place(line, inverse);
                line.iter_mut()
                    .enumerate()
                    .for_each(|(m, v)| *v *= sign(m) * scale);
            });
        }
        Field {
            grid: self.grid.dual(),
            values: buf,
            t: self.t,
            frame: self.frame,
        }
    }

    /// Continuum Fourier transform (unitary; `conjugate` flips the kernel
    /// sign) sampled on `target`, by trapezoid quadrature evaluated with a
    /// chirp sum. Spectrally accurate for smooth data whose transform is
    /// resolved on `target`; not an exact discrete unitary.
    pub fn fourier_onto(&self, target: &GridSpec, conjugate: bool) -> Result<Field> {
        if target.dim() != self.grid.dim() || target.points_per_axis() != self.grid.points_per_axis()
        {
            return Err(Error::InvalidArgument(format!(
                "target grid {target} incompatible with {}",
                self.grid
            )));
        }
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let l = self.grid.length();
        let dx = self.grid.dx();
        let lt = target.length();
        let dxi = target.dx();
        let s = if conjugate { 1.0 } else { -1.0 };
        // e^{s i ξ_m x_j}, ξ_m = -L'/2 + m δ, x_j = -L/2 + j dx
        let omega = s * dxi * dx;
        let pre: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(1.0, -s * 0.5 * lt * j as f64 * dx))
            .collect();
        let post: Vec<C64> = (0..n)
            .map(|m| {
                C64::from_polar(
                    dx / (2.0 * PI).sqrt(),
                    s * 0.25 * l * lt - s * 0.5 * l * m as f64 * dxi,
                )
            })
            .collect();
        let mut buf = self.values.clone();
        for axis in 0..d {
            for_each_line(&mut buf, n, d, axis, |line| {
                let weighted: Vec<C64> = line.iter().zip(pre.iter()).map(|(v, p)| v * p).collect();
                let out = chirp_sum(&weighted, omega, n);
                for (slot, (o, p)) in line.iter_mut().zip(out.iter().zip(post.iter())) {
                    *slot = o * p;
                }
            });
        }
        Field::new(*target, buf, self.t, self.frame)
    }

    /// `g(x) = f(x / a)` by evaluating the trigonometric interpolant of `f`
    /// on the stretched lattice. Content mapped from outside the box is zero.
    pub fn dilate(&self, a: f64, policy: &AliasPolicy) -> Result<Field> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("dilation factor {a} must be positive")));
        }
        if a == 1.0 {
            return Ok(self.clone());
        }
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        let l = self.grid.length();
        let coeffs = self.dft();
        let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return Ok(self.clone());
        }
        if a < 1.0 {
            let frac = spectral_tail(&self.grid, &coeffs, a);
            if frac > policy.tolerance {
                return Err(Error::Aliasing {
                    reason: format!("spectrum beyond {a:.4} x Nyquist before contraction"),
                    fraction: frac,
                    tolerance: policy.tolerance,
                });
            }
        } else {
            let frac = self.mass_outside(0.5 * l / a);
            if frac > policy.tolerance {
                return Err(Error::Aliasing {
                    reason: format!("support beyond L/(2·{a:.4}) leaves the box after stretching"),
                    fraction: frac,
                    tolerance: policy.tolerance,
                });
            }
        }

        let dx = self.grid.dx();
        let shift = 0.5 * l * (1.0 - 1.0 / a);
        let omega = 2.0 * PI * dx / (a * l);
        let half = (n / 2) as f64;
        // Nyquist coefficient split evenly between ±N/2.
        let twist: Vec<C64> = (0..=n)
            .map(|kappa| C64::from_polar(1.0, 2.0 * PI * kappa as f64 * shift / l))
            .collect();
        let post: Vec<C64> = (0..n)
            .map(|m| {
                C64::from_polar(
                    1.0 / n as f64,
                    -PI * n as f64 * shift / l - half * omega * m as f64,
                )
            })
            .collect();
        let coords = self.grid.coords();
        let outside: Vec<bool> = coords.iter().map(|x| (x / a).abs() >= 0.5 * l).collect();

        let mut buf = self.values.clone();
        for axis in 0..d {
            for_each_line(&mut buf, n, d, axis, |line| {
                crate::spectral::fft_in_place(line, false);
                let mut ext = Vec::with_capacity(n + 1);
                let nyq = line[n / 2] * 0.5;
                ext.push(nyq);
                for kappa in 1..n {
                    // k = kappa - N/2 lives at FFT slot (k mod N)
                    let slot = (kappa + n / 2) % n;
                    ext.push(line[slot]);
                }
                ext.push(nyq);
                for (e, tw) in ext.iter_mut().zip(twist.iter()) {
                    *e *= tw;
                }
                let out = chirp_sum(&ext, omega, n);
                for (m, slot) in line.iter_mut().enumerate() {
                    *slot = if outside[m] { C64::new(0.0, 0.0) } else { out[m] * post[m] };
                }
            });
        }
        Ok(self.with_values(buf))
    }

    /// Fraction of mass with some `|x_i| > radius`.
    pub fn mass_outside(&self, radius: f64) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let d = self.grid.dim();
        let outer: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(flat, _)| self.grid.point(*flat)[..d].iter().any(|c| c.abs() > radius))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        outer / total
    }

    /// Pointwise multiplication by `e^{i c |x|²/2}`.
    ///
    /// The local phase gradient `|c||x_i|` must stay below `π/dx`: on every
    /// grid point in strict mode, otherwise on all but a `policy.tolerance`
    /// fraction of the mass.
    pub fn apply_chirp(&self, c: f64, policy: &AliasPolicy) -> Result<Field> {
        if c == 0.0 {
            return Ok(self.clone());
        }
        let nyquist = self.grid.nyquist();
        let edge_gradient = c.abs() * 0.5 * self.grid.length();
        if edge_gradient > nyquist {
            if policy.strict {
                return Err(Error::ChirpAliasing {
                    gradient: edge_gradient,
                    nyquist,
                    detail: "strict: box edge".into(),
                });
            }
            let frac = self.mass_outside(nyquist / c.abs());
            if frac > policy.tolerance {
                return Err(Error::ChirpAliasing {
                    gradient: edge_gradient,
                    nyquist,
                    detail: format!("{frac:.3e} of mass where the chirp is unresolved"),
                });
            }
        }
        Ok(self.map(|flat, v| v * C64::from_polar(1.0, 0.5 * c * self.grid.radius_sq(flat))))
    }

    /// `g(x) = f(-x)` on the lattice (`x_j ↦ x_{N-j}`, periodic).
    pub fn reflect(&self) -> Field {
        let n = self.grid.points_per_axis();
        let mut buf = self.values.clone();
        for axis in 0..self.grid.dim() {
            for_each_line(&mut buf, n, self.grid.dim(), axis, |line| {
                let copy = line.to_vec();
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = copy[(n - j) % n];
                }
            });
        }
        self.with_values(buf)
    }

    /// `g(x) = f(x - x0)` exactly on the torus via the spectral phase shift.
    pub fn translate(&self, x0: &[f64]) -> Result<Field> {
        let d = self.grid.dim();
        if x0.len() != d {
            return Err(Error::InvalidArgument(format!("shift of length {} in d={d}", x0.len())));
        }
        if x0.iter().all(|s| *s == 0.0) {
            return Ok(self.clone());
        }
        let mut coeffs = self.dft();
        let n = self.grid.points_per_axis();
        let h = n / 2;
        for (flat, c) in coeffs.iter_mut().enumerate() {
            let idx = self.grid.unflatten(flat);
            let mut phase = 0.0;
            for axis in 0..d {
                if idx[axis] == h {
                    // split evenly between ±N/2 so real data stays real
                    *c *= (self.grid.nyquist() * x0[axis]).cos();
                } else {
                    phase -= self.grid.wavenumber(idx[axis]) * x0[axis];
                }
            }
            *c *= C64::from_polar(1.0, phase);
        }
        Ok(self.from_dft(coeffs))
    }

    /// Pointwise multiplication by `e^{i v·x}`.
    pub fn modulate(&self, v: &[f64]) -> Result<Field> {
        let d = self.grid.dim();
        if v.len() != d {
            return Err(Error::InvalidArgument(format!(
                "velocity of length {} in d={d}",
                v.len()
            )));
        }
        Ok(self.map(|flat, z| {
            let p = self.grid.point(flat);
            let phase: f64 = (0..d).map(|i| v[i] * p[i]).sum();
            z * C64::from_polar(1.0, phase)
        }))
    }

    /// Spectral gradient component along `axis`.
    pub fn gradient(&self, axis: usize) -> Field {
        let mut coeffs = self.dft();
        let n = self.grid.points_per_axis();
        for (flat, c) in coeffs.iter_mut().enumerate() {
            let i = self.grid.unflatten(flat)[axis];
            let k = if i == n / 2 { 0.0 } else { self.grid.wavenumber(i) };
            *c *= C64::new(0.0, k);
        }
        self.from_dft(coeffs)
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Field {
        let mut coeffs = self.dft();
        let k2 = self.grid.wavenumber_sq();
        for (c, k) in coeffs.iter_mut().zip(k2.iter()) {
            *c *= -k;
        }
        self.from_dft(coeffs)
    }

    /// `∫|∇u|² dx` from the spectrum (Parseval).
    pub fn kinetic_integral(&self) -> f64 {
        let coeffs = self.dft();
        let k2 = self.grid.wavenumber_sq();
        let s: f64 = coeffs.iter().zip(k2.iter()).map(|(c, k)| c.norm_sqr() * k).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }
}

/// Fraction of `Σ|c|²` carried by FFT-ordered slots with some
/// `|k_i| > fraction · N/2`.
pub(crate) fn spectral_tail(grid: &GridSpec, coeffs: &[C64], fraction: f64) -> f64 {
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let cut = fraction * (grid.points_per_axis() / 2) as f64;
    let d = grid.dim();
    let tail: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(flat, _)| {
            let idx = grid.unflatten(*flat);
            (0..d).any(|a| (grid.wave_index(idx[a]) as f64).abs() > cut)
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    tail / total
}

/// One row of the diagnostics stream. Energies not defined in a frame are
/// `None` (empty CSV cells).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub classical_energy: Option<f64>,
    pub harmonic_energy: Option<f64>,
    pub pseudoconformal_energy: Option<f64>,
    pub sup_norm: f64,
    pub boundary_mass_fraction: f64,
    pub dt: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: GridSpec) -> Field {
        Field::from_fn(grid, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp(), 0.0)
        })
    }

    #[test]
    fn make_grid_examples() {
        let g = GridSpec::new(1, 256, 40.0).unwrap();
        assert_eq!(g.dx(), 0.15625);
        let g2 = GridSpec::new(2, 64, 20.0).unwrap();
        assert_eq!(g2.len(), 4096);
        assert_eq!(g2.dx(), 0.3125);
        assert!(matches!(GridSpec::new(1, 100, 10.0), Err(Error::InvalidGrid(_))));
        assert!(GridSpec::new(3, 64, 10.0).is_err());
        assert!(GridSpec::new(1, 8, 10.0).is_err());
        assert!(GridSpec::new(1, 64, -1.0).is_err());
    }

    #[test]
    fn grid_is_centered_and_lattice_symmetric() {
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        assert_eq!(g.coord(0), -4.0);
        assert_eq!(g.coord(16), 0.0);
        assert!(g.coord(31) < 4.0);
        let idx: Vec<i64> = (0..32).map(|i| g.wave_index(i)).collect();
        assert_eq!(*idx.iter().min().unwrap(), -16);
        assert_eq!(*idx.iter().max().unwrap(), 15);
    }

    #[test]
    fn gaussian_mass_and_norms() {
        let g = GridSpec::new(1, 256, 40.0).unwrap();
        let f = gaussian(g);
        assert!((f.mass() - PI.sqrt()).abs() < 1e-10);
        assert!((f.lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        // ∫ e^{-3x²} = (π/3)^{1/2}
        let expected = (PI / 3.0).powf(1.0 / 12.0);
        assert!((f.lp_norm(6.0).unwrap() - expected).abs() < 1e-10);
        assert!(f.lp_norm(0.5).is_err());
        assert_eq!(Field::zeros(g, 0.0, Frame::Physical).mass(), 0.0);
    }

    #[test]
    fn constant_field_norms() {
        let g = GridSpec::new(2, 32, 5.0).unwrap();
        let c = C64::new(0.6, -0.8) * 2.0;
        let f = Field::from_fn(g, 0.0, Frame::Physical, |_| c);
        assert!((f.lp_norm(2.0).unwrap() - 2.0 * 5.0).abs() < 1e-12);
        let g1 = GridSpec::new(1, 256, 10.0).unwrap();
        let f1 = Field::from_fn(g1, 0.0, Frame::Physical, |_| C64::new(1.0, 0.0));
        let frac = f1.boundary_mass_fraction(0.1).unwrap();
        assert!((frac - 0.2).abs() <= 2.0 / 256.0, "{frac}");
    }

    #[test]
    fn boundary_fraction_edge_cases() {
        let g = GridSpec::new(1, 512, 40.0).unwrap();
        assert!(gaussian(g).boundary_mass_fraction(0.1).unwrap() < 1e-12);
        let edge = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] - 19.0).powi(2)).exp(), 0.0)
        });
        assert!(edge.boundary_mass_fraction(0.1).unwrap() > 0.5);
        assert!(gaussian(g).boundary_mass_fraction(0.0).is_err());
        assert!(gaussian(g).boundary_mass_fraction(0.5).is_err());
    }

    #[test]
    fn unitary_gaussian_is_fixed_point() {
        let g = GridSpec::new(1, 256, 40.0).unwrap();
        let norm = PI.powf(-0.25);
        let f = gaussian(g).scaled(C64::new(norm, 0.0));
        let hat = f.fourier_forward();
        assert_eq!(hat.grid().length(), 2.0 * PI * 256.0 / 40.0);
        let expect = gaussian(*hat.grid()).scaled(C64::new(norm, 0.0));
        assert!(hat.sup_distance(&expect).unwrap() < 1e-8);
        assert!((hat.mass() - f.mass()).abs() < 1e-12);
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let g = GridSpec::new(1, 64, 10.0).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 64];
        v[32] = C64::new(1.0, 0.0);
        let f = Field::new(g, v, 0.0, Frame::Physical).unwrap();
        let hat = f.fourier_forward();
        let m0 = hat.values()[0].norm();
        assert!(hat.values().iter().all(|c| (c.norm() - m0).abs() < 1e-14));
    }

    #[test]
    fn fourier_onto_matches_dual_grid_transform() {
        let g = GridSpec::new(1, 256, 30.0).unwrap();
        let f = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::from_polar((-0.5 * (x[0] - 1.0).powi(2)).exp(), 0.7 * x[0])
        });
        let exact = f.fourier_forward();
        let onto = f.fourier_onto(&g.dual(), false).unwrap();
        assert!(exact.sup_distance(&onto).unwrap() < 1e-10);
        let back = onto.fourier_onto(&g, true).unwrap();
        assert!(back.sup_distance(&f).unwrap() < 1e-10);
    }

    #[test]
    fn dilation_of_gaussian() {
        let g = GridSpec::new(1, 512, 40.0).unwrap();
        let f = gaussian(g);
        assert_eq!(f.dilate(1.0, &AliasPolicy::default()).unwrap(), f);
        let wide = f.dilate(2.0, &AliasPolicy::default()).unwrap();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-x[0] * x[0] / 8.0).exp(), 0.0)
        });
        assert!(wide.sup_distance(&expect).unwrap() < 1e-8);
        assert!((wide.mass() - 2.0 * f.mass()).abs() < 1e-8 * f.mass());
        let narrow = f.dilate(0.5, &AliasPolicy::default()).unwrap();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-2.0 * x[0] * x[0]).exp(), 0.0)
        });
        assert!(narrow.sup_distance(&expect).unwrap() < 1e-8);
    }

    #[test]
    fn dilation_aliasing_is_reported() {
        let g = GridSpec::new(1, 256, 40.0).unwrap();
        let wide = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-x[0] * x[0] / 50.0).exp(), 0.0)
        });
        assert!(matches!(
            wide.dilate(8.0, &AliasPolicy::default()),
            Err(Error::Aliasing { .. })
        ));
        let sharp = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-x[0] * x[0] / 0.02).exp(), 0.0)
        });
        assert!(matches!(
            sharp.dilate(0.25, &AliasPolicy::default()),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn chirp_examples() {
        let g = GridSpec::new(1, 256, 20.0).unwrap();
        let f = gaussian(g);
        assert_eq!(f.apply_chirp(0.0, &AliasPolicy::strict()).unwrap(), f);
        let c = f.apply_chirp(1.0, &AliasPolicy::strict()).unwrap();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new(-0.5 * x[0] * x[0], 0.5 * x[0] * x[0]).exp()
        });
        assert!(c.sup_distance(&expect).unwrap() < 1e-12);
        assert!((c.mass() - f.mass()).abs() < 1e-14);
        // edge gradient 8 * 10 = 80 > π/dx ≈ 40.2
        assert!(matches!(
            f.apply_chirp(8.0, &AliasPolicy::strict()),
            Err(Error::ChirpAliasing { .. })
        ));
        // mass-weighted gate passes for a centered Gaussian
        assert!(f.apply_chirp(8.0, &AliasPolicy::default()).is_ok());
    }

    #[test]
    fn translate_and_reflect() {
        let g = GridSpec::new(1, 256, 30.0).unwrap();
        let f = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] - 1.0).powi(2)).exp(), 0.0)
        });
        let moved = f.translate(&[2.3]).unwrap();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] - 3.3).powi(2)).exp(), 0.0)
        });
        assert!(moved.sup_distance(&expect).unwrap() < 1e-10);
        let r = f.reflect();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] + 1.0).powi(2)).exp(), 0.0)
        });
        assert!(r.sup_distance(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn two_dimensional_dilation_is_separable() {
        let g = GridSpec::new(2, 64, 16.0).unwrap();
        let f = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0)
        });
        let w = f.dilate(1.5, &AliasPolicy::default()).unwrap();
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new((-0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.25).exp(), 0.0)
        });
        assert!(w.sup_distance(&expect).unwrap() < 1e-8);
    }

    #[test]
    fn spectral_derivatives() {
        let g = GridSpec::new(1, 256, 30.0).unwrap();
        let f = gaussian(g);
        let dfx = f.gradient(0);
        let expect = Field::from_fn(g, 0.0, Frame::Physical, |x| {
            C64::new(-x[0] * (-0.5 * x[0] * x[0]).exp(), 0.0)
        });
        assert!(dfx.sup_distance(&expect).unwrap() < 1e-10);
        // ∫ x² e^{-x²} = √π / 2
        assert!((f.kinetic_integral() - PI.sqrt() / 2.0).abs() < 1e-10);
    }
}
