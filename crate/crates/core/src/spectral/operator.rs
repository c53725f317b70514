use super::field::FourierField;
use super::grid::{eigenvalue, GridSpec, Mode};

/// Real Fourier multipliers built from `A = Δ − 1`, whose symbol is
/// `−(|k|² + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearOperator {
    /// `A` itself.
    Generator,
    /// `e^{tA}`.
    Semigroup { t: f64 },
    /// `Λ^s = (−A)^{s/2}`.
    Bessel { s: f64 },
    /// `e^{t(A − damping)}`.
    DampedSemigroup { t: f64, damping: f64 },
    /// `∫_0^dt e^{s(A − damping)} ds`, the exponential-Euler weight of a
    /// forcing frozen over one step (`dt·φ₁(dt(A − damping))`).
    DampedPhiStep { dt: f64, damping: f64 },
}

impl LinearOperator {
    pub fn symbol(&self, k: Mode) -> f64 {
        let lambda = eigenvalue(k);
        match *self {
            Self::Generator => -lambda,
            Self::Semigroup { t } => (-t * lambda).exp(),
            Self::Bessel { s } => lambda.powf(0.5 * s),
            Self::DampedSemigroup { t, damping } => (-t * (lambda + damping)).exp(),
            Self::DampedPhiStep { dt, damping } => {
                let rate = lambda + damping;
                -(-dt * rate).exp_m1() / rate
            }
        }
    }

    /// Symbol values over the retained modes of `grid`, in storage order.
    pub fn table(&self, grid: GridSpec) -> Vec<f64> {
        grid.modes().map(|k| self.symbol(k)).collect()
    }

    pub fn apply(&self, f: &FourierField) -> FourierField {
        f.map_symbol(|k| self.symbol(k))
    }
}

pub fn apply_operator(op: LinearOperator, f: &FourierField) -> FourierField {
    op.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_examples() {
        let g = GridSpec::dealiased(3);
        let c = FourierField::constant(g, 1.75);
        let a = apply_operator(LinearOperator::Generator, &c);
        assert!((a.coeff([0, 0]).re + 2.0 * PI * 1.75).abs() < 1e-13);
        let h = apply_operator(LinearOperator::Semigroup { t: 1.0 }, &c);
        assert!((h.coeff([0, 0]).re - 2.0 * PI * 1.75 * (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn bessel_on_unit_mode() {
        let g = GridSpec::dealiased(2);
        let f = FourierField::from_fn(g, |k| {
            if k == [1, 0] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        let out = apply_operator(LinearOperator::Bessel { s: 2.0 }, &f);
        assert!((out.coeff([1, 0]).re - 2.0).abs() < 1e-15);
        assert!(out.is_hermitian());
    }

    #[test]
    fn phi_step_limits() {
        let op = LinearOperator::DampedPhiStep { dt: 1e-12, damping: 0.0 };
        assert!((op.symbol([3, 4]) - 1e-12).abs() < 1e-22);
        let op = LinearOperator::DampedPhiStep { dt: 50.0, damping: 1.0 };
        assert!((op.symbol([0, 0]) - 0.5).abs() < 1e-15);
    }
}
