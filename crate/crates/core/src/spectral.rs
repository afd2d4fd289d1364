//! FFT plumbing shared by the grid operators: cached rustfft plans, per-axis
//! line iteration on row-major tensors, and a Bluestein chirp sum for
//! evaluating trigonometric sums on arbitrary uniform target lattices.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place FFT. `inverse` uses the `e^{+2πi kj/n}` kernel.
pub(crate) fn fft_in_place(buf: &mut [C64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

/// Applies `f` to every line of a `d`-dimensional, `n`-per-axis, row-major
/// tensor along `axis`. Axis `d - 1` is contiguous.
pub(crate) fn for_each_line<F>(values: &mut [C64], n: usize, d: usize, axis: usize, mut f: F)
where
    F: FnMut(&mut [C64]),
{
    debug_assert!(axis < d);
    debug_assert_eq!(values.len(), n.pow(d as u32));
    let stride = n.pow((d - 1 - axis) as u32);
    if stride == 1 {
        for line in values.chunks_mut(n) {
            f(line);
        }
        return;
    }
    let block = stride * n;
    let mut line = vec![C64::new(0.0, 0.0); n];
    for outer in (0..values.len()).step_by(block) {
        for inner in 0..stride {
            let base = outer + inner;
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = values[base + i * stride];
            }
            f(&mut line);
            for (i, v) in line.iter().enumerate() {
                values[base + i * stride] = *v;
            }
        }
    }
}

/// Unnormalized d-dimensional FFT over every axis.
pub(crate) fn fft_nd(values: &mut [C64], n: usize, d: usize, inverse: bool) {
    for axis in 0..d {
        for_each_line(values, n, d, axis, |line| fft_in_place(line, inverse));
    }
}

/// `X_m = Σ_κ a_κ e^{i ω κ m}` for `m = 0..n_out`, computed with Bluestein's
/// identity `κm = (κ² + m² − (m−κ)²)/2` and one circular convolution.
pub(crate) fn chirp_sum(input: &[C64], omega: f64, n_out: usize) -> Vec<C64> {
    let n_in = input.len();
    if n_in == 0 || n_out == 0 {
        return vec![C64::new(0.0, 0.0); n_out];
    }
    let size = (n_in + n_out - 1).next_power_of_two();
    let chirp = |j: i64| -> C64 {
        let phase = 0.5 * omega * ((j * j) as f64);
        C64::new(phase.cos(), phase.sin())
    };

    let mut b = vec![C64::new(0.0, 0.0); size];
    for (k, a) in input.iter().enumerate() {
        b[k] = a * chirp(k as i64);
    }
    let mut h = vec![C64::new(0.0, 0.0); size];
    for j in 0..n_out as i64 {
        h[j as usize] = chirp(j).conj();
    }
    for j in 1..n_in as i64 {
        h[size - j as usize] = chirp(-j).conj();
    }

    fft_in_place(&mut b, false);
    fft_in_place(&mut h, false);
    for (x, y) in b.iter_mut().zip(h.iter()) {
        *x *= y;
    }
    fft_in_place(&mut b, true);
    let scale = 1.0 / size as f64;
    (0..n_out)
        .map(|m| b[m] * scale * chirp(m as i64))
        .collect()
}
