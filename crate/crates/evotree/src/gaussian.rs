//! Gaussian mutation on a Gaussian fitness peak.
//!
//! For a spherical Gaussian fitness peak of height `f0` and variance
//! `s²`, with isotropic Gaussian mutation of variance `σ²` per
//! coordinate, the mutation-selection balance is itself Gaussian with a
//! width `c` solving `c² − σ²c − σ²s² = 0`, and the asymptotic growth
//! factor (dominant eigenvalue of the mutation-selection operator) has
//! a closed form. This module provides those closed forms plus a
//! grid-discretized numerical cross-check in one dimension.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("discretization requires d = 1, got d = {0}")]
    NotOneDimensional(usize),
    #[error("grid must have at least 3 points and an odd count, got {0}")]
    BadGrid(usize),
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// A spherical Gaussian fitness peak with isotropic Gaussian mutation.
#[derive(Debug, Clone)]
pub struct GaussianPeak {
    pub peak_height: f64,
    pub landscape_variance: f64,
    pub mutation_variance: f64,
    pub dimension: usize,
    pub center: Vec<f64>,
}

impl GaussianPeak {
    pub fn new(
        peak_height: f64,
        landscape_variance: f64,
        mutation_variance: f64,
        dimension: usize,
        center: Vec<f64>,
    ) -> Result<Self, GaussianError> {
        for (name, value) in [
            ("peak_height", peak_height),
            ("landscape_variance", landscape_variance),
            ("mutation_variance", mutation_variance),
        ] {
            if !(value > 0.0) {
                return Err(GaussianError::NonPositive { name, value });
            }
        }
        if dimension == 0 {
            return Err(GaussianError::ZeroDimension);
        }
        let center = if center.is_empty() {
            vec![0.0; dimension]
        } else {
            center
        };
        Ok(Self {
            peak_height,
            landscape_variance,
            mutation_variance,
            dimension,
            center,
        })
    }
}

/// Equilibrium width and growth factor at mutation-selection balance.
#[derive(Debug, Clone, Copy)]
pub struct GaussianEquilibrium {
    pub width: f64,
    pub eigenvalue: f64,
}

/// Positive root of `c² − σ²c − σ²s² = 0`.
pub fn equilibrium_width(peak: &GaussianPeak) -> f64 {
    let sig2 = peak.mutation_variance;
    let s2 = peak.landscape_variance;
    (sig2 + (sig2 * sig2 + 4.0 * sig2 * s2).sqrt()) / 2.0
}

/// Dominant eigenvalue `λ = f0 (s²/(s²+c))^{d/2}`.
///
/// Also evaluates the equivalent form
/// `f0 (2/(2+ν+√(ν²+4ν)))^{d/2}` with `ν = σ²/s²` and asserts the two
/// agree; they are the same expression after dividing through by `s²`.
pub fn peak_eigenvalue(peak: &GaussianPeak) -> f64 {
    let s2 = peak.landscape_variance;
    let c = equilibrium_width(peak);
    let d = peak.dimension as f64;
    let lambda = peak.peak_height * (s2 / (s2 + c)).powf(d / 2.0);

    let nu = peak.mutation_variance / s2;
    let lambda_nu =
        peak.peak_height * (2.0 / (2.0 + nu + (nu * nu + 4.0 * nu).sqrt())).powf(d / 2.0);
    debug_assert!(
        (lambda - lambda_nu).abs() <= 1e-12 * lambda.abs().max(1.0),
        "closed-form disagreement: {lambda} vs {lambda_nu}"
    );
    lambda
}

/// Both closed forms of the eigenvalue, for explicit cross-checking.
pub fn eigenvalue_both_forms(peak: &GaussianPeak) -> (f64, f64) {
    let s2 = peak.landscape_variance;
    let c = equilibrium_width(peak);
    let d = peak.dimension as f64;
    let appendix = peak.peak_height * (s2 / (s2 + c)).powf(d / 2.0);
    let nu = peak.mutation_variance / s2;
    let nu_form =
        peak.peak_height * (2.0 / (2.0 + nu + (nu * nu + 4.0 * nu).sqrt())).powf(d / 2.0);
    (appendix, nu_form)
}

pub fn equilibrium(peak: &GaussianPeak) -> GaussianEquilibrium {
    GaussianEquilibrium {
        width: equilibrium_width(peak),
        eigenvalue: peak_eigenvalue(peak),
    }
}

/// Dominant eigenvalue of the midpoint-discretized one-dimensional
/// operator `(Aφ)(x) = ∫ q(x|y) f(y) φ(y) dy` on
/// `[θ − half_width, θ + half_width]`, by power iteration.
pub fn discretized_dominant_eigenvalue(
    peak: &GaussianPeak,
    half_width: f64,
    grid_points: usize,
    tolerance: f64,
) -> Result<f64, GaussianError> {
    if peak.dimension != 1 {
        return Err(GaussianError::NotOneDimensional(peak.dimension));
    }
    if grid_points < 3 || grid_points % 2 == 0 {
        return Err(GaussianError::BadGrid(grid_points));
    }
    if !(half_width > 0.0) {
        return Err(GaussianError::NonPositive {
            name: "half_width",
            value: half_width,
        });
    }
    let theta = peak.center.first().copied().unwrap_or(0.0);
    let n = grid_points;
    let dy = 2.0 * half_width / n as f64;
    // Midpoint grid on [θ − half_width, θ + half_width].
    let grid: Vec<f64> = (0..n)
        .map(|i| theta - half_width + (i as f64 + 0.5) * dy)
        .collect();

    let s2 = peak.landscape_variance;
    let sig2 = peak.mutation_variance;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sig2).sqrt();
    let fitness: Vec<f64> = grid
        .iter()
        .map(|y| peak.peak_height * (-(y - theta) * (y - theta) / (2.0 * s2)).exp())
        .collect();

    // kernel[i][j] = q(x_i | y_j) f(y_j) Δy
    let kernel: Vec<Vec<f64>> = grid
        .iter()
        .map(|x| {
            grid.iter()
                .zip(fitness.iter())
                .map(|(y, f)| norm * (-(x - y) * (x - y) / (2.0 * sig2)).exp() * f * dy)
                .collect()
        })
        .collect();

    let max_iterations = 100_000;
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = f64::NAN;
    for _ in 0..max_iterations {
        let mut w = vec![0.0; n];
        for (wi, row) in w.iter_mut().zip(kernel.iter()) {
            *wi = row.iter().zip(v.iter()).map(|(k, v)| k * v).sum();
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / sum).collect();
        if (sum - lambda).abs() < tolerance * sum.abs() {
            return Ok(sum);
        }
        lambda = sum;
    }
    Err(GaussianError::NoConvergence(max_iterations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlattestWinner {
    PeakA,
    PeakB,
    Tie,
}

/// Compare asymptotic growth factors of two peaks under the same
/// mutation variance.
pub fn flattest_compare(peak_a: &GaussianPeak, peak_b: &GaussianPeak) -> (f64, f64, FlattestWinner) {
    let la = peak_eigenvalue(peak_a);
    let lb = peak_eigenvalue(peak_b);
    let winner = if (la - lb).abs() <= 1e-12 {
        FlattestWinner::Tie
    } else if la > lb {
        FlattestWinner::PeakA
    } else {
        FlattestWinner::PeakB
    };
    (la, lb, winner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peak(f0: f64, s2: f64, sig2: f64, d: usize) -> GaussianPeak {
        GaussianPeak::new(f0, s2, sig2, d, vec![]).unwrap()
    }

    #[test]
    fn width_golden_ratio_case() {
        let c = equilibrium_width(&peak(1.0, 1.0, 1.0, 1));
        assert!((c - (1.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn width_vanishes_without_mutation() {
        let c = equilibrium_width(&peak(1.0, 1.0, 1e-12, 1));
        assert!(c < 2e-6);
    }

    #[test]
    fn width_quadratic_case() {
        let c = equilibrium_width(&peak(1.0, 1.0, 2.0, 1));
        assert!((c - (1.0 + 3.0_f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn width_satisfies_quadratic() {
        for &s2 in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
            for &sig2 in &[1e-3, 0.1, 1.0, 10.0, 1e3] {
                let c = equilibrium_width(&peak(1.0, s2, sig2, 1));
                let residual = c * c - sig2 * c - sig2 * s2;
                assert!(residual.abs() <= 1e-10 * (c * c).max(1.0), "{s2} {sig2}");
            }
        }
    }

    #[test]
    fn eigenvalue_golden_case() {
        let lambda = peak_eigenvalue(&peak(1.0, 1.0, 1.0, 1));
        assert!((lambda - 0.618034).abs() < 1e-6);
        let lambda2 = peak_eigenvalue(&peak(1.0, 1.0, 1.0, 2));
        assert!((lambda2 - lambda * lambda).abs() < 1e-12);
        assert!((lambda2 - 0.381966).abs() < 1e-6);
    }

    #[test]
    fn eigenvalue_no_mutation_limit() {
        let lambda = peak_eigenvalue(&peak(1.0, 1.0, 1e-12, 1));
        assert!((lambda - 1.0).abs() < 1e-5);
    }

    #[test]
    fn both_forms_agree_on_grid() {
        let decades = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
        for &s2 in &decades {
            for &sig2 in &decades {
                for d in 1..=3 {
                    let (a, b) = eigenvalue_both_forms(&peak(1.3, s2, sig2, d));
                    assert!(
                        (a - b).abs() <= 1e-12 * a.abs().max(1e-300),
                        "s2={s2} sig2={sig2} d={d}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigenvalue_monotone_in_variances() {
        let mut prev = f64::INFINITY;
        for &sig2 in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let l = peak_eigenvalue(&peak(1.0, 1.0, sig2, 1));
            assert!(l < prev);
            prev = l;
        }
        let mut prev = 0.0;
        for &s2 in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let l = peak_eigenvalue(&peak(1.0, s2, 1.0, 1));
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn discretized_matches_closed_form() {
        let p = peak(1.0, 1.0, 1.0, 1);
        let lambda = peak_eigenvalue(&p);
        let hat = discretized_dominant_eigenvalue(&p, 10.0, 2001, 1e-12).unwrap();
        assert!((hat - lambda).abs() / lambda < 1e-3, "{hat} vs {lambda}");
    }

    #[test]
    fn discretized_linear_in_height() {
        let p1 = peak(1.0, 1.0, 1.0, 1);
        let p2 = peak(2.0, 1.0, 1.0, 1);
        let l1 = discretized_dominant_eigenvalue(&p1, 8.0, 401, 1e-12).unwrap();
        let l2 = discretized_dominant_eigenvalue(&p2, 8.0, 401, 1e-12).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-10);
    }

    #[test]
    fn discretized_narrow_mutation_broad_peak() {
        let p = peak(1.0, 4.0, 0.25, 1);
        let lambda = peak_eigenvalue(&p);
        let hat = discretized_dominant_eigenvalue(&p, 15.0, 1501, 1e-12).unwrap();
        assert!((hat - lambda).abs() / lambda < 1e-3);
    }

    #[test]
    fn discretization_error_shrinks_with_grid() {
        let p = peak(1.0, 1.0, 1.0, 1);
        let lambda = peak_eigenvalue(&p);
        let mut prev_err = f64::INFINITY;
        for &n in &[101usize, 201, 401, 801] {
            let hat = discretized_dominant_eigenvalue(&p, 10.0, n, 1e-13).unwrap();
            let err = (hat - lambda).abs();
            assert!(err <= prev_err + 1e-9, "n={n}: {err} vs {prev_err}");
            prev_err = err;
        }
    }

    #[test]
    fn flattest_identical_tie() {
        let p = peak(1.0, 1.0, 1.0, 1);
        let (_, _, w) = flattest_compare(&p, &p);
        assert_eq!(w, FlattestWinner::Tie);
    }

    #[test]
    fn flattest_broad_low_beats_narrow_tall() {
        let narrow = peak(1.0, 0.05, 1.0, 1);
        let broad = peak(0.8, 10.0, 1.0, 1);
        let (ln, lb, w) = flattest_compare(&narrow, &broad);
        assert!((ln - 0.2134).abs() < 5e-4, "narrow {ln}");
        // exact: 0.8·(10/(10+c))^{1/2} with c=(1+√41)/2
        let c = (1.0 + 41.0_f64.sqrt()) / 2.0;
        let exact = 0.8 * (10.0 / (10.0 + c)).sqrt();
        assert!((lb - exact).abs() < 1e-14);
        assert!((lb - 0.68344).abs() < 5e-5, "broad {lb}");
        assert_eq!(w, FlattestWinner::PeakB);
    }

    #[test]
    fn flattest_no_mutation_taller_wins() {
        let narrow = peak(1.0, 0.05, 1e-12, 1);
        let broad = peak(0.8, 10.0, 1e-12, 1);
        let (_, _, w) = flattest_compare(&narrow, &broad);
        assert_eq!(w, FlattestWinner::PeakA);
    }
}
