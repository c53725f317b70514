//! Band-limited 2D transforms between retained Fourier coefficients and
//! physical samples.
//!
//! Both directions are pruned: only the `2b+1` retained rows/columns are
//! transformed along the second axis, and pairs of real rows/columns share one
//! complex FFT.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plan>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan<R>(side: usize, f: impl FnOnce(&mut Plan) -> R) -> R {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, plans) = &mut *guard;
        let plan = plans.entry(side).or_insert_with(|| {
            let forward = planner.plan_fft_forward(side);
            let inverse = planner.plan_fft_inverse(side);
            let len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            Plan {
                forward,
                inverse,
                scratch: vec![Complex64::default(); len],
                buf: vec![Complex64::default(); side],
            }
        });
        f(plan)
    })
}

#[inline]
fn wrap(k: i64, side: usize) -> usize {
    k.rem_euclid(side as i64) as usize
}

/// Coefficients `c_k = ⟨f, e_k⟩` for `|k|_∞ <= band` from the physical samples
/// of a real field, by rectangle quadrature (exact for trigonometric
/// polynomials of degree below `side`). Output is in grid storage order.
pub(crate) fn forward(values: &[f64], side: usize, band: usize) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), side * side);
    debug_assert!(2 * band < side && side % 2 == 0);
    let w = 2 * band + 1;
    let b = band as i64;
    let zero = Complex64::default();
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);

    with_plan(side, |plan| {
        // rows[x1 * w + (k2 + b)]
        let mut rows = vec![zero; side * w];
        for pair in 0..side / 2 {
            let (r0, r1) = (2 * pair, 2 * pair + 1);
            for x2 in 0..side {
                plan.buf[x2] = Complex64::new(values[r0 * side + x2], values[r1 * side + x2]);
            }
            plan.forward
                .process_with_scratch(&mut plan.buf, &mut plan.scratch);
            for k2 in -b..=b {
                let i = wrap(k2, side);
                let j = wrap(-k2, side);
                let zi = plan.buf[i];
                let zj = plan.buf[j].conj();
                let c = (k2 + b) as usize;
                rows[r0 * w + c] = (zi + zj) * half;
                rows[r1 * w + c] = (zi - zj) * minus_half_i;
            }
        }

        let scale = 2.0 * PI / (side * side) as f64;
        let mut out = vec![zero; w * w];
        for c in 0..w {
            for x1 in 0..side {
                plan.buf[x1] = rows[x1 * w + c];
            }
            plan.forward
                .process_with_scratch(&mut plan.buf, &mut plan.scratch);
            for k1 in -b..=b {
                out[(k1 + b) as usize * w + c] = plan.buf[wrap(k1, side)] * scale;
            }
        }
        out
    })
}

/// Physical samples `f(x) = Σ_k c_k e_k(x)` of the field with the given
/// retained coefficients (grid storage order, Hermitian).
pub(crate) fn inverse(coeffs: &[Complex64], side: usize, band: usize) -> Vec<f64> {
    let w = 2 * band + 1;
    debug_assert_eq!(coeffs.len(), w * w);
    debug_assert!(2 * band < side && side % 2 == 0);
    let b = band as i64;
    let zero = Complex64::default();

    with_plan(side, |plan| {
        // g[(k1 + b) * side + x2]
        let mut g = vec![zero; w * side];
        for r in 0..w {
            plan.buf.fill(zero);
            for k2 in -b..=b {
                plan.buf[wrap(k2, side)] = coeffs[r * w + (k2 + b) as usize];
            }
            plan.inverse
                .process_with_scratch(&mut plan.buf, &mut plan.scratch);
            g[r * side..(r + 1) * side].copy_from_slice(&plan.buf);
        }

        let scale = 1.0 / (2.0 * PI);
        let mut values = vec![0.0; side * side];
        for pair in 0..side / 2 {
            let (xa, xb) = (2 * pair, 2 * pair + 1);
            plan.buf.fill(zero);
            for k1 in -b..=b {
                let r = (k1 + b) as usize;
                let ga = g[r * side + xa];
                let gb = g[r * side + xb];
                // ga + i·gb
                plan.buf[wrap(k1, side)] = Complex64::new(ga.re - gb.im, ga.im + gb.re);
            }
            plan.inverse
                .process_with_scratch(&mut plan.buf, &mut plan.scratch);
            for x1 in 0..side {
                values[x1 * side + xa] = plan.buf[x1].re * scale;
                values[x1 * side + xb] = plan.buf[x1].im * scale;
            }
        }
        values
    })
}
