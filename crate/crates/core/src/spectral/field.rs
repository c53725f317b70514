use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::fft;
use super::grid::{GridSpec, Mode};
use crate::error::{Error, Result};

/// Fourier coefficients of a real scalar field on the discrete torus.
///
/// Coefficients are stored densely over the retained square `|k|_∞ <= N` and
/// satisfy `coeffs[-k] = conj(coeffs[k])`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

/// Samples of a real field on the physical grid of a [`GridSpec`].
///
/// Values are stored row-major, `values[x1 * side + x2]`, at the points
/// `x = 2π (x1, x2) / side`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl FourierField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.mode_count()],
        }
    }

    /// Wraps raw coefficients. The caller's data is symmetrized so that the
    /// result is exactly Hermitian.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.mode_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.mode_count(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs }.symmetrized())
    }

    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.mode_count());
        Self { grid, coeffs }
    }

    /// The spatially constant field with physical value `value`.
    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[grid.index([0, 0]).unwrap()] = Complex64::new(2.0 * PI * value, 0.0);
        f
    }

    /// Builds a field from a per-mode rule evaluated on the half space; the
    /// other half is filled by conjugation.
    pub fn from_fn(grid: GridSpec, mut rule: impl FnMut(Mode) -> Complex64) -> Self {
        let mut coeffs = vec![Complex64::default(); grid.mode_count()];
        let half = grid.mode_count() / 2;
        for i in (half..grid.mode_count()).rev() {
            let k = grid.mode(i);
            let c = rule(k);
            if i == half {
                coeffs[i] = Complex64::new(c.re, 0.0);
            } else {
                coeffs[i] = c;
                coeffs[grid.conjugate_index(i)] = c.conj();
            }
        }
        Self { grid, coeffs }
    }

    /// Real unit-norm field along the mode `k`: `e_0` for `k = 0`, otherwise
    /// `(e_k + e_{-k}) / √2`.
    pub fn basis_direction(grid: GridSpec, k: Mode) -> Result<Self> {
        let idx = grid
            .index(k)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} not retained")))?;
        let mut f = Self::zeros(grid);
        if k == [0, 0] {
            f.coeffs[idx] = Complex64::new(1.0, 0.0);
        } else {
            let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            f.coeffs[idx] = a;
            f.coeffs[grid.conjugate_index(idx)] = a;
        }
        Ok(f)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `k`, zero when `k` is not retained.
    pub fn coeff(&self, k: Mode) -> Complex64 {
        self.grid
            .index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Exact check of `coeffs[-k] == conj(coeffs[k])`.
    pub fn is_hermitian(&self) -> bool {
        (0..self.coeffs.len())
            .all(|i| self.coeffs[self.grid.conjugate_index(i)] == self.coeffs[i].conj())
    }

    /// Projection onto Hermitian spectra. The result is exactly Hermitian.
    pub fn symmetrized(mut self) -> Self {
        let n = self.coeffs.len();
        for i in 0..=n / 2 {
            let j = self.grid.conjugate_index(i);
            let a = self.coeffs[i];
            let b = self.coeffs[j];
            let s = (a + b.conj()) * 0.5;
            self.coeffs[i] = s;
            self.coeffs[j] = s.conj();
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn to_physical(&self) -> PhysicalField {
        PhysicalField {
            grid: self.grid,
            values: fft::inverse(&self.coeffs, self.grid.side(), self.grid.cutoff()),
        }
    }

    /// `‖f‖_{L²}`, via Parseval in the orthonormal basis.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨f, g⟩_{L²}` computed from coefficients.
    pub fn inner(&self, other: &FourierField) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    /// Multiplies every retained coefficient by a real symbol.
    pub fn map_symbol(&self, symbol: impl Fn(Mode) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(self.grid.mode(i)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Multiplies coefficient `i` by `table[i]`, a precomputed symbol in
    /// storage order.
    pub fn map_table(&self, table: &[f64]) -> Self {
        assert_eq!(table.len(), self.coeffs.len(), "multiplier table size");
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(table).map(|(c, m)| c * m).collect(),
        }
    }

    /// `a ⊙ self + b ⊙ other` for precomputed symbols `a`, `b`.
    pub fn combine_tables(&self, a: &[f64], other: &FourierField, b: &[f64]) -> Result<Self> {
        self.check_grid(other)?;
        assert_eq!(a.len(), self.coeffs.len(), "multiplier table size");
        assert_eq!(b.len(), self.coeffs.len(), "multiplier table size");
        let coeffs = (0..self.coeffs.len())
            .map(|i| self.coeffs[i] * a[i] + other.coeffs[i] * b[i])
            .collect();
        Ok(Self {
            grid: self.grid,
            coeffs,
        })
    }

    /// `∂f/∂x_axis`, the odd symbol `i k_axis`.
    pub fn partial(&self, axis: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::new(0.0, self.grid.mode(i)[axis] as f64))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Same field on a grid with another cutoff (zero padding or sharp
    /// truncation). Physical resolution may change as well.
    pub fn rebanded(&self, target: GridSpec) -> Self {
        let mut out = Self::zeros(target);
        let n = self.grid.cutoff().min(target.cutoff()) as i64;
        for k1 in -n..=n {
            for k2 in -n..=n {
                let k = [k1, k2];
                out.coeffs[target.index(k).unwrap()] = self.coeffs[self.grid.index(k).unwrap()];
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &FourierField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        })
    }

    pub fn checked_add(&self, other: &FourierField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn checked_sub(&self, other: &FourierField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub(crate) fn check_grid(&self, other: &FourierField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        self.checked_add(rhs).expect("grid mismatch in field addition")
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        self.checked_sub(rhs).expect("grid mismatch in field subtraction")
    }
}

impl Mul<f64> for &FourierField {
    type Output = FourierField;
    fn mul(self, rhs: f64) -> FourierField {
        self.scaled(rhs)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scaled(-1.0)
    }
}

impl PhysicalField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.point_count()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.point_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.point_count(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = grid.side();
        let h = grid.spacing();
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Forward transform truncated to the grid's retained band.
    pub fn to_fourier(&self) -> FourierField {
        let coeffs = fft::forward(&self.values, self.grid.side(), self.grid.cutoff());
        FourierField::from_raw(self.grid, coeffs).symmetrized()
    }

    /// Forward transform onto a different band at the same resolution.
    pub fn to_fourier_band(&self, cutoff_n: usize) -> Result<FourierField> {
        let grid = self.grid.with_cutoff(cutoff_n)?;
        let coeffs = fft::forward(&self.values, grid.side(), cutoff_n);
        Ok(FourierField::from_raw(grid, coeffs).symmetrized())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same physical grid.
    pub fn zip_with(&self, other: &PhysicalField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid.side() != other.grid.side() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `∫_{𝕋²} f`, rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `∫_{𝕋²} f g`, rectangle rule.
    pub fn pairing(&self, other: &PhysicalField) -> Result<f64> {
        if self.grid.side() != other.grid.side() {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature `L^p` norm; `p = ∞` gives the maximum over grid points.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let s: f64 = if p == 2.0 {
            self.values.iter().map(|v| v * v).sum()
        } else {
            // scaled by the maximum so that large p neither over- nor underflows
            let m = self.max_abs();
            if m == 0.0 || !m.is_finite() {
                return m;
            }
            let s: f64 = self.values.iter().map(|v| (v.abs() / m).powf(p)).sum();
            return m * (s * self.grid.cell_area()).powf(1.0 / p);
        };
        (s * self.grid.cell_area()).powf(1.0 / p)
    }

    /// Circular shift of the samples by `(d1, d2)` grid points.
    pub fn shifted(&self, d1: usize, d2: usize) -> Self {
        let m = self.grid.side();
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                values[((i + d1) % m) * m + (j + d2) % m] = self.values[i * m + j];
            }
        }
        Self {
            grid: self.grid,
            values,
        }
    }
}

/// Fourier coefficients of the pointwise product `f·g`, truncated to the
/// common band. Exact on the retained modes when the grid is dealiased.
pub fn dealiased_product(f: &FourierField, g: &FourierField) -> Result<FourierField> {
    f.check_grid(g)?;
    let fp = f.to_physical();
    let gp = g.to_physical();
    Ok(fp.zip_with(&gp, |a, b| a * b)?.to_fourier())
}

/// `‖f‖_{L^p(𝕋²)}` by quadrature on the physical grid, `p ∈ [1, ∞]`.
pub fn lp_norm_physical(f: &FourierField, p: f64) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    f.to_physical().lp_norm(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::make_grid;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn cos_x1(grid: GridSpec, amp: f64) -> FourierField {
        // cos(x1) = (2π/2)(e_{(1,0)} + e_{(-1,0)})
        FourierField::from_fn(grid, |k| {
            if k == [1, 0] {
                Complex64::new(PI * amp, 0.0)
            } else {
                Complex64::default()
            }
        })
    }

    #[test]
    fn constant_field_values() {
        let g = make_grid(3, 14).unwrap();
        let f = FourierField::constant(g, 2.5);
        for v in f.to_physical().values() {
            assert!(close(*v, 2.5, 1e-14));
        }
    }

    #[test]
    fn cos_product_matches_convolution() {
        let g = GridSpec::dealiased(3);
        let f = cos_x1(g, 1.0);
        let p = dealiased_product(&f, &f).unwrap();
        // cos² = 1/2 + cos(2 x1)/2
        let two = FourierField::from_fn(g, |k| {
            if k == [2, 0] {
                Complex64::new(PI * 0.5, 0.0)
            } else {
                Complex64::default()
            }
        });
        let expected = &FourierField::constant(g, 0.5) + &two;
        for (a, b) in p.coeffs().iter().zip(expected.coeffs()) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn product_edge_cases() {
        let g = GridSpec::dealiased(2);
        let zero = FourierField::zeros(g);
        let f = cos_x1(g, 1.3);
        assert!(dealiased_product(&f, &zero).unwrap().l2_norm() < 1e-15);
        let p = dealiased_product(&FourierField::constant(g, 2.0), &FourierField::constant(g, -3.0))
            .unwrap();
        assert!((p.coeff([0, 0]).re - 2.0 * PI * -6.0).abs() < 1e-12);
        assert!(matches!(
            dealiased_product(&f, &FourierField::zeros(GridSpec::dealiased(3))),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn lp_norm_examples() {
        let g = GridSpec::dealiased(4);
        assert_eq!(lp_norm_physical(&FourierField::zeros(g), 3.0), 0.0);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            let c: f64 = -1.7;
            let expected = c.abs() * (2.0 * PI).powf(if p.is_infinite() { 0.0 } else { 2.0 / p });
            assert!(close(lp_norm_physical(&FourierField::constant(g, c), p), expected, 1e-13));
        }
        // sin(x1) = (2π)(e_{(1,0)} - e_{(-1,0)})/(2i)
        let s = FourierField::from_fn(g, |k| {
            if k == [1, 0] {
                Complex64::new(0.0, -PI)
            } else {
                Complex64::default()
            }
        });
        assert!(close(lp_norm_physical(&s, 2.0), (2.0 * PI * PI).sqrt(), 1e-13));
    }

    #[test]
    fn basis_directions_are_unit_and_real() {
        let g = GridSpec::dealiased(3);
        for k in [[0, 0], [1, 0], [1, 1], [-2, 3]] {
            let e = FourierField::basis_direction(g, k).unwrap();
            assert!(e.is_hermitian());
            assert!(close(e.l2_norm(), 1.0, 1e-15));
        }
        assert!(FourierField::basis_direction(g, [4, 0]).is_err());
    }

    #[test]
    fn translation_shift_is_a_permutation() {
        let g = GridSpec::dealiased(2);
        let f = PhysicalField::from_fn(g, |x, y| (x + 2.0 * y).sin());
        let s = f.shifted(3, 5);
        assert!(close(f.integral(), s.integral(), 1e-14));
        assert!(close(f.lp_norm(4.0), s.lp_norm(4.0), 1e-14));
    }
}
