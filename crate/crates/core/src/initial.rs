//! Initial-data builders. Random constructions are deterministic in the seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, GridSpec, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A e^{-|x-c|²/(2w²)} e^{i v·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Gaussian {
    /// Centered, at rest, amplitude chosen for the given mass.
    pub fn with_mass(d: usize, width: f64, mass: f64) -> Self {
        let unit = (PI * width * width).powf(-0.25 * d as f64);
        Self {
            amplitude: unit * mass.sqrt(),
            width,
            center: vec![0.0; d],
            velocity: vec![0.0; d],
        }
    }

    pub fn mass(&self, d: usize) -> f64 {
        self.amplitude * self.amplitude * (PI * self.width * self.width).powf(0.5 * d as f64)
    }

    pub fn sample(&self, grid: GridSpec, t: f64, frame: Frame) -> Result<Field> {
        let d = grid.dim();
        if self.center.len() != d || self.velocity.len() != d {
            return Err(Error::InvalidArgument(format!(
                "gaussian center/velocity must have {d} components"
            )));
        }
        if !(self.width > 0.0) {
            return Err(Error::InvalidArgument(format!("gaussian width {}", self.width)));
        }
        let w2 = self.width * self.width;
        Ok(Field::from_fn(grid, t, frame, |x| {
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for i in 0..d {
                r2 += (x[i] - self.center[i]).powi(2);
                phase += self.velocity[i] * x[i];
            }
            C64::from_polar(self.amplitude * (-0.5 * r2 / w2).exp(), phase)
        }))
    }
}

/// Normalized Hermite function `ψ_n` (eigenfunction of `-½∂² + ½x²`,
/// eigenvalue `n + ½`).
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return psi0;
    }
    let mut prev = psi0;
    let mut cur = 2f64.sqrt() * x * psi0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Tensor-product Hermite state with per-axis indices `orders`.
pub fn hermite(grid: GridSpec, orders: &[usize], frame: Frame) -> Result<Field> {
    if orders.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} Hermite orders for d={}",
            orders.len(),
            grid.dim()
        )));
    }
    Ok(Field::from_fn(grid, 0.0, frame, |x| {
        let v: f64 = x.iter().zip(orders).map(|(xi, n)| hermite_function(*n, *xi)).product();
        C64::new(v, 0.0)
    }))
}

/// Unit-mass superposition of `packets` random Gaussian wave packets with
/// centers in `[-spread, spread]^d`, widths in `[0.7, 1.5]` and velocities in
/// `[-2, 2]^d`.
pub fn random_smooth(grid: GridSpec, seed: u64, packets: usize, spread: f64) -> Field {
    let mut r = rng(seed);
    let d = grid.dim();
    let mut list = Vec::with_capacity(packets);
    for _ in 0..packets.max(1) {
        let g = Gaussian {
            amplitude: r.random_range(0.3..1.0),
            width: r.random_range(0.7..1.5),
            center: (0..d).map(|_| r.random_range(-spread..=spread)).collect(),
            velocity: (0..d).map(|_| r.random_range(-2.0..=2.0)).collect(),
        };
        let phase = r.random_range(0.0..2.0 * PI);
        list.push((g, C64::from_polar(1.0, phase)));
    }
    let mut acc = Field::zeros(grid, 0.0, Frame::Physical);
    for (g, rot) in &list {
        let s = g.sample(grid, 0.0, Frame::Physical).expect("dimensions match");
        acc = acc.add(&s.scaled(*rot)).expect("same grid");
    }
    normalize(acc)
}

/// Unit-mass i.i.d. complex Gaussian samples.
pub fn white_noise(grid: GridSpec, seed: u64) -> Field {
    let mut r = rng(seed);
    let values = (0..grid.len())
        .map(|_| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect();
    normalize(Field::new(grid, values, 0.0, Frame::Physical).expect("finite samples"))
}

/// Unit-mass random field with spectrum on the shell `k_lo ≤ |ξ| ≤ k_hi`
/// (angular wavenumbers), windowed to `|x_i| ≤ radius` by a smooth
/// super-Gaussian envelope.
pub fn band_noise(grid: GridSpec, seed: u64, k_lo: f64, k_hi: f64, radius: f64) -> Field {
    let mut r = rng(seed);
    let k2 = grid.wavenumber_sq();
    let coeffs: Vec<C64> = k2
        .iter()
        .map(|k| {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            let k = k.sqrt();
            if k >= k_lo && k <= k_hi {
                C64::new(re, im)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let base = Field::zeros(grid, 0.0, Frame::Physical).from_dft(coeffs);
    let windowed = base.map(|flat, v| {
        let p = grid.point(flat);
        let e: f64 = p[..grid.dim()].iter().map(|c| (c / radius).powi(8)).sum();
        v * (-e).exp()
    });
    normalize(windowed)
}

fn normalize(f: Field) -> Field {
    let m = f.mass();
    if m == 0.0 {
        return f;
    }
    f.scaled(C64::new(1.0 / m.sqrt(), 0.0))
}
