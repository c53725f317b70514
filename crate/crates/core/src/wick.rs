//! Hermite polynomials, the cutoff renormalization constant and Wick powers.
//!
//! Wick powers are evaluated pointwise on the padded physical grid, where the
//! identities `:f²: = f² − c` and `:f³: = f³ − 3cf` hold exactly. They are
//! kept as [`PhysicalField`]s so that later products (e.g. `Y·:Z²:`) remain
//! exact on the retained modes; truncate with [`PhysicalField::to_fourier`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spectral::{eigenvalue, FourierField, GridSpec, PhysicalField};
use crate::stochastic::{mode_variance, sample_gff};

pub const MAX_DEGREE: usize = 4;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, m: usize) -> f64 {
    factorial(n) / (factorial(m) * factorial(n - m))
}

/// Coefficient of `x^{n−2j}` in `P_n`.
fn hermite_coeff(n: usize, j: usize) -> f64 {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(n) / (factorial(n - 2 * j) * factorial(j) * 2f64.powi(j as i32))
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE {
        Err(Error::UnsupportedDegree(n))
    } else {
        Ok(())
    }
}

/// Probabilists' Hermite polynomial
/// `P_n(x) = Σ_{j ≤ n/2} (−1)^j n! / ((n−2j)! j! 2^j) x^{n−2j}`.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    Ok((0..=n / 2)
        .map(|j| hermite_coeff(n, j) * x.powi((n - 2 * j) as i32))
        .sum())
}

/// `Σ_m C(n,m) P_m(s) t^{n−m}`, which equals `P_n(s + t)`.
pub fn hermite_binomial_shift(n: usize, s: f64, t: f64) -> Result<f64> {
    check_degree(n)?;
    let mut acc = 0.0;
    for m in 0..=n {
        acc += binomial(n, m) * hermite(m, s)? * t.powi((n - m) as i32);
    }
    Ok(acc)
}

/// `c^{n/2} P_n(c^{−1/2} x)`, expanded so that `c = 0` is allowed.
pub fn wick_polynomial(n: usize, c: f64, x: f64) -> f64 {
    (0..=n / 2)
        .map(|j| hermite_coeff(n, j) * c.powi(j as i32) * x.powi((n - 2 * j) as i32))
        .sum()
}

/// `c_N = (2π)^{-2} Σ_{|k|_∞ ≤ N} 1/(2(|k|²+1))`, the pointwise variance of
/// the cutoff Gaussian free field.
pub fn renorm_constant(grid: GridSpec) -> f64 {
    grid.modes().map(mode_variance).sum::<f64>() / (4.0 * PI * PI)
}

/// Shared read-only renormalization data for one grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WickContext {
    pub grid: GridSpec,
    pub c_n: f64,
}

impl WickContext {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            c_n: renorm_constant(grid),
        }
    }

    fn check(&self, grid: GridSpec) -> Result<()> {
        if grid == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// `:f^n:` on the physical grid.
pub fn wick_power(f: &FourierField, n: usize, ctx: &WickContext) -> Result<PhysicalField> {
    check_degree(n)?;
    ctx.check(f.grid())?;
    Ok(wick_power_physical(&f.to_physical(), n, ctx.c_n))
}

pub(crate) fn wick_power_physical(f: &PhysicalField, n: usize, c: f64) -> PhysicalField {
    match n {
        0 => PhysicalField::constant(f.grid(), 1.0),
        1 => f.clone(),
        2 => f.map(|x| x * x - c),
        3 => f.map(|x| x * x * x - 3.0 * c * x),
        _ => f.map(|x| wick_polynomial(n, c, x)),
    }
}

/// A Gaussian field `Z` with its renormalized powers `:Z²:` and `:Z³:`.
#[derive(Clone, Debug, PartialEq)]
pub struct WickBundle {
    pub z: FourierField,
    pub z_phys: PhysicalField,
    pub z2: PhysicalField,
    pub z3: PhysicalField,
    pub t: f64,
}

impl WickBundle {
    pub fn new(z: FourierField, t: f64, ctx: &WickContext) -> Result<Self> {
        ctx.check(z.grid())?;
        let z_phys = z.to_physical();
        let c = ctx.c_n;
        let z2 = z_phys.map(|x| x * x - c);
        let z3 = z_phys.map(|x| x * x * x - 3.0 * c * x);
        Ok(Self {
            z,
            z_phys,
            z2,
            z3,
            t,
        })
    }

    /// The bundle of `Z = 0`: `:Z²: = −c`, `:Z³: = 0`.
    pub fn zero(ctx: &WickContext) -> Self {
        Self::new(FourierField::zeros(ctx.grid), 0.0, ctx).expect("context grid")
    }

    /// `:Z^n:` for `n ≤ 3` on the physical grid.
    pub fn power(&self, n: usize) -> Result<PhysicalField> {
        match n {
            0 => Ok(PhysicalField::constant(self.z.grid(), 1.0)),
            1 => Ok(self.z_phys.clone()),
            2 => Ok(self.z2.clone()),
            3 => Ok(self.z3.clone()),
            _ => Err(Error::UnsupportedDegree(n)),
        }
    }

    /// `:Z²:` truncated to the retained band.
    pub fn z2_truncated(&self) -> FourierField {
        self.z2.to_fourier()
    }

    pub fn z3_truncated(&self) -> FourierField {
        self.z3.to_fourier()
    }
}

/// `:Z̄^n: = Σ_k C(n,k) V^{n−k} :Z^k:` for `Z̄ = Z + V`, `n ∈ {2, 3}`.
pub fn shifted_wick(
    bundle: &WickBundle,
    v: &FourierField,
    n: usize,
    ctx: &WickContext,
) -> Result<PhysicalField> {
    ctx.check(v.grid())?;
    ctx.check(bundle.z.grid())?;
    shifted_wick_physical(bundle, &v.to_physical(), n)
}

pub(crate) fn shifted_wick_physical(
    bundle: &WickBundle,
    v: &PhysicalField,
    n: usize,
) -> Result<PhysicalField> {
    let z = bundle.z_phys.values();
    let vv = v.values();
    let values: Vec<f64> = match n {
        2 => {
            let z2 = bundle.z2.values();
            (0..vv.len())
                .map(|i| vv[i] * vv[i] + 2.0 * vv[i] * z[i] + z2[i])
                .collect()
        }
        3 => {
            let z2 = bundle.z2.values();
            let z3 = bundle.z3.values();
            (0..vv.len())
                .map(|i| {
                    let a = vv[i];
                    a * a * a + 3.0 * a * a * z[i] + 3.0 * a * z2[i] + z3[i]
                })
                .collect()
        }
        _ => return Err(Error::UnsupportedDegree(n)),
    };
    PhysicalField::from_values(v.grid(), values)
}

/// `‖f‖²_{H^{−s}_2} = Σ_k (|k|²+1)^{−s} |f_k|²`.
pub fn negative_sobolev_sq(f: &FourierField, s: f64) -> f64 {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| eigenvalue(g.mode(i)).powf(-s) * c.norm_sqr())
        .sum()
}

/// Monte Carlo estimates of `E‖:φ_N^n: − :φ_{N'}^n:‖²_{H^{−s}_2}` for
/// consecutive cutoffs `N < N'` of `cutoffs`, with `φ_N` the sharp
/// truncation of one common draw `φ_{N_max}`.
pub fn wick_convergence_probe(
    n: usize,
    cutoffs: &[usize],
    s: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    check_degree(n)?;
    if n == 0 {
        return Err(Error::UnsupportedDegree(0));
    }
    if cutoffs.windows(2).any(|w| w[1] < w[0]) || cutoffs.is_empty() {
        return Err(Error::InvalidParameter(
            "cutoffs must be non-decreasing".into(),
        ));
    }
    let n_max = *cutoffs.last().unwrap();
    // resolve every Wick power's full spectrum without aliasing
    let side = GridSpec::dealiased(n * n_max).side();
    let fine = GridSpec::new(n_max, side)?;
    let band = n * n_max;
    let constants: Vec<f64> = cutoffs
        .iter()
        .map(|&c| renorm_constant(GridSpec::dealiased(c)))
        .collect();

    let mut acc = vec![0.0; cutoffs.len() - 1];
    for _ in 0..samples {
        let phi = sample_gff(fine, rng);
        let spectra: Vec<FourierField> = cutoffs
            .iter()
            .zip(&constants)
            .map(|(&cut, &c)| {
                let truncated = phi
                    .rebanded(GridSpec::new(cut, side).expect("side fits"))
                    .rebanded(fine);
                wick_power_physical(&truncated.to_physical(), n, c).to_fourier_band(band)
            })
            .collect::<Result<_>>()?;
        for (i, pair) in spectra.windows(2).enumerate() {
            acc[i] += negative_sobolev_sq(&(&pair[0] - &pair[1]), s);
        }
    }
    Ok(acc.into_iter().map(|a| a / samples as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Mode;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(2, 2.0).unwrap(), 3.0);
        assert_eq!(hermite(3, 1.0).unwrap(), -2.0);
        assert_eq!(hermite(4, 0.0).unwrap(), 3.0);
        assert_eq!(hermite(0, 7.0).unwrap(), 1.0);
        assert!(matches!(hermite(5, 1.0), Err(Error::UnsupportedDegree(5))));
        for x in [-1.3, 0.2, 2.7] {
            let p4 = x * x * x * x - 6.0 * x * x + 3.0;
            assert!((hermite(4, x).unwrap() - p4).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_shift_examples() {
        assert_eq!(hermite_binomial_shift(2, 1.0, 1.0).unwrap(), 3.0);
        assert!((hermite_binomial_shift(3, 0.0, 1.7).unwrap() - hermite(3, 1.7).unwrap()).abs() < 1e-12);
        assert!(hermite_binomial_shift(5, 0.0, 0.0).is_err());
    }

    #[test]
    fn renorm_constant_small_cutoffs() {
        let c0 = renorm_constant(GridSpec::dealiased(0));
        assert!((c0 - 1.0 / (8.0 * PI * PI)).abs() < 1e-16);
        assert!((c0 - 0.0126651).abs() < 1e-7);
        let c1 = renorm_constant(GridSpec::dealiased(1));
        let expected = (0.5 + 4.0 * 0.25 + 4.0 / 6.0) / (4.0 * PI * PI);
        assert!((c1 - expected).abs() < 1e-15);
        assert!((c1 - 0.05489).abs() < 1e-5);
        for n in 0..16 {
            assert!(renorm_constant(GridSpec::dealiased(n + 1)) > renorm_constant(GridSpec::dealiased(n)));
        }
    }

    #[test]
    fn wick_of_zero_field() {
        let ctx = WickContext::new(GridSpec::dealiased(3));
        let zero = FourierField::zeros(ctx.grid);
        let w2 = wick_power(&zero, 2, &ctx).unwrap();
        assert!(w2.values().iter().all(|&v| v == -ctx.c_n));
        let w3 = wick_power(&zero, 3, &ctx).unwrap();
        assert!(w3.values().iter().all(|&v| v == 0.0));
        assert!(wick_power(&zero, 5, &ctx).is_err());
    }

    #[test]
    fn wick_powers_have_zero_mean() {
        let ctx = WickContext::new(GridSpec::dealiased(3));
        let mut rng = RngStream::new(21, 0);
        let n = 20_000;
        for deg in [2usize, 3, 4] {
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    let phi = sample_gff(ctx.grid, &mut rng);
                    wick_power(&phi, deg, &ctx).unwrap().integral() / (4.0 * PI * PI)
                })
                .collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let se = (var / n as f64).sqrt();
            assert!(m.abs() < 4.0 * se, "degree {deg}: {m} ± {se}");
        }
    }

    /// Chaos-2 variance of `∫ :φ²: f` by the double lattice sum
    /// `2 Σ_{k,l} v_k v_l |f̂_{k+l}|² / (2π)²`.
    fn chaos2_variance(f: &FourierField) -> f64 {
        let g = f.grid();
        let modes: Vec<Mode> = g.modes().collect();
        let mut s = 0.0;
        for &k in &modes {
            for &l in &modes {
                let m = [k[0] + l[0], k[1] + l[1]];
                s += mode_variance(k) * mode_variance(l) * f.coeff(m).norm_sqr();
            }
        }
        2.0 * s / (4.0 * PI * PI)
    }

    #[test]
    fn wick_isometry_matches_lattice_sum() {
        let ctx = WickContext::new(GridSpec::dealiased(3));
        let test_fn = (&FourierField::basis_direction(ctx.grid, [1, 0]).unwrap()
            + &FourierField::basis_direction(ctx.grid, [0, 0]).unwrap().scaled(0.5))
            .scaled(1.0);
        let expected = chaos2_variance(&test_fn);
        let tp = test_fn.to_physical();
        let mut rng = RngStream::new(22, 0);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let phi = sample_gff(ctx.grid, &mut rng);
                wick_power(&phi, 2, &ctx).unwrap().pairing(&tp).unwrap().powi(2)
            })
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((m - expected).abs() < 4.0 * se, "{m} ± {se} vs {expected}");
    }

    #[test]
    fn shifted_wick_edge_cases() {
        let ctx = WickContext::new(GridSpec::dealiased(3));
        let mut rng = RngStream::new(23, 0);
        let z = sample_gff(ctx.grid, &mut rng);
        let bundle = WickBundle::new(z, 0.5, &ctx).unwrap();
        let zero = FourierField::zeros(ctx.grid);
        assert_eq!(shifted_wick(&bundle, &zero, 2, &ctx).unwrap(), bundle.z2);
        assert_eq!(shifted_wick(&bundle, &zero, 3, &ctx).unwrap(), bundle.z3);

        let v = sample_gff(ctx.grid, &mut rng);
        let vp = v.to_physical();
        let zb = WickBundle::zero(&ctx);
        let s2 = shifted_wick(&zb, &v, 2, &ctx).unwrap();
        for (a, b) in s2.values().iter().zip(vp.values()) {
            assert!((a - (b * b - ctx.c_n)).abs() < 1e-12);
        }
        assert!(matches!(shifted_wick(&zb, &v, 4, &ctx), Err(Error::UnsupportedDegree(4))));
        let other = FourierField::zeros(GridSpec::dealiased(2));
        assert!(matches!(shifted_wick(&zb, &other, 2, &ctx), Err(Error::GridMismatch)));
    }

    #[test]
    fn probe_first_order_matches_tail_sum() {
        let cutoffs = [2usize, 4];
        let s = 0.5;
        let mut rng = RngStream::new(24, 0);
        let samples = 2000;
        let est = wick_convergence_probe(1, &cutoffs, s, samples, &mut rng).unwrap();
        let tail: f64 = GridSpec::dealiased(4)
            .modes()
            .filter(|k| k[0].abs() > 2 || k[1].abs() > 2)
            .map(|k| mode_variance(k) * eigenvalue(k).powf(-s))
            .sum();
        // the estimator is a sum of many independent squared modes; 3% is ~6 SE
        assert!((est[0] - tail).abs() < 0.03 * tail, "{} vs {tail}", est[0]);
    }

    #[test]
    fn probe_identical_cutoffs_vanish() {
        let mut rng = RngStream::new(25, 0);
        let est = wick_convergence_probe(2, &[3, 3], 0.5, 5, &mut rng).unwrap();
        assert_eq!(est, vec![0.0]);
    }
}
