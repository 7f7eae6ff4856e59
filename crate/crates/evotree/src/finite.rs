//! Finite selection-mutation model.
//!
//! A population over `N` genotypes evolves by one round of selection
//! (multiplication by the diagonal fitness matrix `F`) followed by one
//! round of mutation (multiplication by the column-stochastic matrix
//! `Q`), i.e. unnormalized abundances evolve by `A = Q F`. All
//! operations here work on normalized frequencies and are pure.

use serde::Deserialize;
use thiserror::Error;

const COLUMN_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FiniteError {
    #[error("mean fitness is zero: population is extinct")]
    ZeroMeanFitness,
    #[error("mutation matrix is not the identity (column {column})")]
    NotMutationFree { column: usize },
    #[error("mutation matrix is not symmetric at ({row},{column})")]
    NotSymmetric { row: usize, column: usize },
    #[error("mutation column {column} sums to {sum}, expected 1")]
    ColumnNotStochastic { column: usize, sum: f64 },
    #[error("negative entry in mutation column {column}, row {row}")]
    NegativeMutation { column: usize, row: usize },
    #[error("negative fitness for genotype {index}")]
    NegativeFitness { index: usize },
    #[error("mutation column {column} has length {got}, expected {expected}")]
    ColumnLength {
        column: usize,
        got: usize,
        expected: usize,
    },
    #[error("frequencies sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("negative frequency at index {index}")]
    NegativeFrequency { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model parse error: {0}")]
    Parse(String),
}

/// Fitness vector plus column-stochastic mutation matrix.
///
/// `mutation[m][n]` is the probability that an offspring of parent
/// genotype `m` is of genotype `n` (matrix stored column-by-column, one
/// column per parent).
#[derive(Debug, Clone)]
pub struct FiniteModel {
    fitness: Vec<f64>,
    mutation: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteModelDoc {
    fitness: Vec<f64>,
    mutation: Vec<Vec<f64>>,
}

impl FiniteModel {
    pub fn new(fitness: Vec<f64>, mutation: Vec<Vec<f64>>) -> Result<Self, FiniteError> {
        let n = fitness.len();
        for (i, f) in fitness.iter().enumerate() {
            if !(*f >= 0.0) {
                return Err(FiniteError::NegativeFitness { index: i });
            }
        }
        if mutation.len() != n {
            return Err(FiniteError::DimensionMismatch {
                expected: n,
                got: mutation.len(),
            });
        }
        for (m, column) in mutation.iter().enumerate() {
            if column.len() != n {
                return Err(FiniteError::ColumnLength {
                    column: m,
                    got: column.len(),
                    expected: n,
                });
            }
            let mut sum = 0.0;
            for (row, q) in column.iter().enumerate() {
                if !(*q >= 0.0) {
                    return Err(FiniteError::NegativeMutation { column: m, row });
                }
                sum += q;
            }
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(FiniteError::ColumnNotStochastic { column: m, sum });
            }
        }
        Ok(Self { fitness, mutation })
    }

    /// Identity mutation: pure selection.
    pub fn selection_only(fitness: Vec<f64>) -> Result<Self, FiniteError> {
        let n = fitness.len();
        let mutation = (0..n)
            .map(|m| (0..n).map(|r| if r == m { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(fitness, mutation)
    }

    /// Load from a JSON document with keys `fitness` (array) and
    /// `mutation` (array of column arrays).
    pub fn from_json(text: &str) -> Result<Self, FiniteError> {
        let doc: FiniteModelDoc =
            serde_json::from_str(text).map_err(|e| FiniteError::Parse(e.to_string()))?;
        Self::new(doc.fitness, doc.mutation)
    }

    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    /// Column `m` of the mutation matrix: offspring distribution of parent `m`.
    pub fn mutation_column(&self, m: usize) -> &[f64] {
        &self.mutation[m]
    }

    pub fn is_mutation_free(&self) -> bool {
        self.mutation.iter().enumerate().all(|(m, column)| {
            column
                .iter()
                .enumerate()
                .all(|(r, q)| (*q - if r == m { 1.0 } else { 0.0 }).abs() <= COLUMN_SUM_TOL)
        })
    }

    fn symmetry_violation(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for m in 0..n {
            for r in (m + 1)..n {
                if (self.mutation[m][r] - self.mutation[r][m]).abs() > COLUMN_SUM_TOL {
                    return Some((r, m));
                }
            }
        }
        None
    }

    /// `A x` where `A = Q F`, returned unnormalized.
    fn apply_evolution(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for m in 0..n {
            let w = self.fitness[m] * x[m];
            if w == 0.0 {
                continue;
            }
            for (r, q) in self.mutation[m].iter().enumerate() {
                y[r] += q * w;
            }
        }
        y
    }

    /// `Aᵀ x`, used for the left Perron vector.
    fn apply_evolution_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for m in 0..n {
            let mut acc = 0.0;
            for (r, q) in self.mutation[m].iter().enumerate() {
                acc += q * x[r];
            }
            y[m] = self.fitness[m] * acc;
        }
        y
    }
}

/// Normalized genotype frequencies (a point on the simplex).
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    frequencies: Vec<f64>,
}

impl PopulationState {
    pub fn new(frequencies: Vec<f64>) -> Result<Self, FiniteError> {
        let mut sum = 0.0;
        for (i, x) in frequencies.iter().enumerate() {
            if !(*x >= 0.0) {
                return Err(FiniteError::NegativeFrequency { index: i });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > COLUMN_SUM_TOL {
            return Err(FiniteError::NotNormalized { sum });
        }
        Ok(Self { frequencies })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            frequencies: vec![1.0 / n as f64; n],
        }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

/// One-step Price decomposition of the change in a trait mean.
#[derive(Debug, Clone, Copy)]
pub struct PriceTerms {
    /// Covariance term `Cov(f/⟨f⟩, z)`.
    pub selection: f64,
    /// Transmission term `Σ xˢᵉˡ (z' − z)`.
    pub mutation: f64,
    /// Independently computed `z̄(t+1) − z̄(t)`.
    pub total: f64,
}

/// Dominant eigenpair of the evolution matrix `A = Q F`.
#[derive(Debug, Clone)]
pub struct PerronResult {
    pub eigenvalue: f64,
    /// Right eigenvector, normalized to the simplex.
    pub right_vector: Vec<f64>,
    /// Left eigenvector, scaled so `left · right = 1`.
    pub left_vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn mean_fitness_finite(model: &FiniteModel, x: &PopulationState) -> f64 {
    model
        .fitness
        .iter()
        .zip(x.frequencies.iter())
        .map(|(f, x)| f * x)
        .sum()
}

/// One selection-mutation step: `x ↦ QFx / ‖QFx‖₁`.
pub fn step_finite(model: &FiniteModel, x: &PopulationState) -> Result<PopulationState, FiniteError> {
    let mean = mean_fitness_finite(model, x);
    if mean <= 0.0 {
        return Err(FiniteError::ZeroMeanFitness);
    }
    let y = model.apply_evolution(&x.frequencies);
    let total: f64 = y.iter().sum();
    Ok(PopulationState {
        frequencies: y.into_iter().map(|v| v / total).collect(),
    })
}

/// Price decomposition of the one-step change of the mean of `z`.
///
/// `selection` is the covariance of `z` with relative fitness,
/// `mutation` the selection-weighted mean change of `z` under the
/// offspring kernel, and `total` the directly propagated change
/// `z̄(t+1) − z̄(t)`; the identity `total = selection + mutation` holds
/// up to rounding.
pub fn price_decomposition(
    model: &FiniteModel,
    x: &PopulationState,
    z: &[f64],
) -> Result<PriceTerms, FiniteError> {
    let n = model.len();
    if z.len() != n {
        return Err(FiniteError::DimensionMismatch {
            expected: n,
            got: z.len(),
        });
    }
    let mean_f = mean_fitness_finite(model, x);
    if mean_f <= 0.0 {
        return Err(FiniteError::ZeroMeanFitness);
    }

    let z_bar: f64 = x.frequencies.iter().zip(z).map(|(x, z)| x * z).sum();
    let fz_bar: f64 = x
        .frequencies
        .iter()
        .zip(model.fitness.iter())
        .zip(z)
        .map(|((x, f), z)| x * f * z)
        .sum();
    let selection = (fz_bar - mean_f * z_bar) / mean_f;

    let mut mutation = 0.0;
    for parent in 0..n {
        let x_sel = model.fitness[parent] * x.frequencies[parent] / mean_f;
        if x_sel == 0.0 {
            continue;
        }
        let z_offspring: f64 = model.mutation[parent]
            .iter()
            .zip(z)
            .map(|(q, z)| q * z)
            .sum();
        mutation += x_sel * (z_offspring - z[parent]);
    }

    let next = step_finite(model, x)?;
    let z_bar_next: f64 = next.frequencies.iter().zip(z).map(|(x, z)| x * z).sum();
    Ok(PriceTerms {
        selection,
        mutation,
        total: z_bar_next - z_bar,
    })
}

/// Mutation-free change of mean fitness versus `Var(f)/⟨f⟩`.
///
/// Requires `Q` to be the identity; the two returned numbers agree up
/// to rounding and are non-negative.
pub fn fisher_delta(model: &FiniteModel, x: &PopulationState) -> Result<(f64, f64), FiniteError> {
    if let Some(column) = (0..model.len()).find(|&m| {
        model.mutation[m]
            .iter()
            .enumerate()
            .any(|(r, q)| (*q - if r == m { 1.0 } else { 0.0 }).abs() > COLUMN_SUM_TOL)
    }) {
        return Err(FiniteError::NotMutationFree { column });
    }
    let mean = mean_fitness_finite(model, x);
    if mean <= 0.0 {
        return Err(FiniteError::ZeroMeanFitness);
    }
    let var: f64 = model
        .fitness
        .iter()
        .zip(x.frequencies.iter())
        .map(|(f, x)| x * (f - mean) * (f - mean))
        .sum();
    let next = step_finite(model, x)?;
    let delta = mean_fitness_finite(model, &next) - mean;
    Ok((delta, var / mean))
}

/// Dominant eigenpair of `A = Q F` by power iteration.
///
/// Both the right vector (iterating `A`) and the left vector (iterating
/// `Aᵀ`) are tracked, simplex-normalizing each sweep. Convergence is a
/// relative change below `tolerance` in both eigenvalue estimates on
/// consecutive sweeps; on failure the best iterate is returned with
/// `converged = false` rather than guessing.
pub fn perron_eigenpair(
    model: &FiniteModel,
    tolerance: f64,
    max_iterations: usize,
) -> PerronResult {
    let n = model.len();
    let mut right = vec![1.0 / n as f64; n];
    let mut left = vec![1.0 / n as f64; n];
    let mut lambda_right = f64::NAN;
    let mut lambda_left = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iterations {
        iterations = it;
        let yr = model.apply_evolution(&right);
        let sum_r: f64 = yr.iter().sum();
        let yl = model.apply_evolution_transpose(&left);
        let sum_l: f64 = yl.iter().sum();
        if sum_r <= 0.0 || sum_l <= 0.0 {
            // All mass annihilated: dominant eigenvalue 0.
            lambda_right = 0.0;
            converged = true;
            break;
        }
        right = yr.into_iter().map(|v| v / sum_r).collect();
        left = yl.into_iter().map(|v| v / sum_l).collect();
        let rel = |new: f64, old: f64| (new - old).abs() / new.abs().max(f64::MIN_POSITIVE);
        if rel(sum_r, lambda_right) < tolerance && rel(sum_l, lambda_left) < tolerance {
            lambda_right = sum_r;
            converged = true;
            break;
        }
        lambda_right = sum_r;
        lambda_left = sum_l;
    }

    // Scale the left vector so that left · right = 1.
    let dot: f64 = left.iter().zip(right.iter()).map(|(w, v)| w * v).sum();
    if dot > 0.0 {
        for w in &mut left {
            *w /= dot;
        }
    }
    PerronResult {
        eigenvalue: if lambda_right.is_nan() { 0.0 } else { lambda_right },
        right_vector: right,
        left_vector: left,
        iterations,
        converged,
    }
}

/// `B = F^{1/2} Q F^{1/2}`, defined for symmetric `Q`; shares the
/// dominant eigenvalue of `A = Q F`.
pub fn symmetrized_operator(model: &FiniteModel) -> Result<Vec<Vec<f64>>, FiniteError> {
    if let Some((row, column)) = model.symmetry_violation() {
        return Err(FiniteError::NotSymmetric { row, column });
    }
    let n = model.len();
    let sqrt_f: Vec<f64> = model.fitness.iter().map(|f| f.sqrt()).collect();
    let mut b = vec![vec![0.0; n]; n];
    for r in 0..n {
        for m in 0..n {
            // mutation is stored by column: Q_{rm} = mutation[m][r].
            b[r][m] = sqrt_f[r] * model.mutation[m][r] * sqrt_f[m];
        }
    }
    Ok(b)
}

/// Per-step record of a finite-model trajectory.
#[derive(Debug, Clone)]
pub struct FiniteTrajectory {
    /// `(state, mean fitness)` at each time, starting with the input state.
    pub states: Vec<(PopulationState, f64)>,
    /// Step at which mean fitness hit zero, if the run died early.
    pub extinct_at: Option<usize>,
}

pub fn evolve_finite(model: &FiniteModel, x0: &PopulationState, steps: usize) -> FiniteTrajectory {
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    let mut extinct_at = None;
    states.push((x.clone(), mean_fitness_finite(model, &x)));
    for t in 0..steps {
        match step_finite(model, &x) {
            Ok(next) => {
                x = next;
                states.push((x.clone(), mean_fitness_finite(model, &x)));
            }
            Err(_) => {
                extinct_at = Some(t);
                break;
            }
        }
    }
    FiniteTrajectory { states, extinct_at }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap_model(fitness: Vec<f64>) -> FiniteModel {
        FiniteModel::new(fitness, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn step_identity_mutation_pure_selection() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let next = step_finite(&model, &x).unwrap();
        assert!((next.frequencies()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((next.frequencies()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn step_uniform_fitness_is_identity() {
        let model = FiniteModel::selection_only(vec![3.0, 3.0]).unwrap();
        let x = PopulationState::new(vec![0.2, 0.8]).unwrap();
        let next = step_finite(&model, &x).unwrap();
        assert_eq!(next.frequencies(), x.frequencies());
    }

    #[test]
    fn step_swap_mutation() {
        let model = swap_model(vec![1.0, 2.0]);
        let x = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let next = step_finite(&model, &x).unwrap();
        assert!((next.frequencies()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((next.frequencies()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn step_zero_mean_fitness_errors() {
        let model = FiniteModel::selection_only(vec![0.0, 1.0]).unwrap();
        let x = PopulationState::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            step_finite(&model, &x),
            Err(FiniteError::ZeroMeanFitness)
        ));
    }

    #[test]
    fn mean_fitness_examples() {
        let m2 = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x2 = PopulationState::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(mean_fitness_finite(&m2, &x2), 1.5);

        let m0 = FiniteModel::selection_only(vec![0.0, 0.0]).unwrap();
        assert_eq!(mean_fitness_finite(&m0, &x2), 0.0);

        let m3 = FiniteModel::selection_only(vec![1.0, 2.0, 4.0]).unwrap();
        let x3 = PopulationState::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(mean_fitness_finite(&m3, &x3), 2.25);
    }

    #[test]
    fn price_identity_mutation_z_equals_f() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let terms = price_decomposition(&model, &x, &[1.0, 2.0]).unwrap();
        assert!((terms.selection - 1.0 / 6.0).abs() < 1e-14);
        assert!(terms.mutation.abs() < 1e-14);
        assert!((terms.total - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn price_constant_trait_is_zero() {
        let model = swap_model(vec![1.0, 2.0]);
        let x = PopulationState::new(vec![0.3, 0.7]).unwrap();
        let terms = price_decomposition(&model, &x, &[5.0, 5.0]).unwrap();
        assert!(terms.selection.abs() < 1e-14);
        assert!(terms.mutation.abs() < 1e-14);
        assert!(terms.total.abs() < 1e-14);
    }

    #[test]
    fn price_swap_example() {
        let model = swap_model(vec![1.0, 2.0]);
        let x = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let terms = price_decomposition(&model, &x, &[1.0, 2.0]).unwrap();
        assert!((terms.selection - 1.0 / 6.0).abs() < 1e-14);
        assert!((terms.mutation + 1.0 / 3.0).abs() < 1e-14);
        assert!((terms.total + 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn fisher_two_types() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let (delta, ratio) = fisher_delta(&model, &x).unwrap();
        assert!((delta - 0.25 / 1.5).abs() < 1e-14);
        assert!((delta - ratio).abs() < 1e-14);
    }

    #[test]
    fn fisher_constant_fitness_zero_delta() {
        let model = FiniteModel::selection_only(vec![2.0, 2.0, 2.0]).unwrap();
        let x = PopulationState::new(vec![0.2, 0.3, 0.5]).unwrap();
        let (delta, ratio) = fisher_delta(&model, &x).unwrap();
        assert!(delta.abs() < 1e-15);
        assert!(ratio.abs() < 1e-15);
    }

    #[test]
    fn fisher_three_types_uniform() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0, 3.0]).unwrap();
        let x = PopulationState::uniform(3);
        let (delta, ratio) = fisher_delta(&model, &x).unwrap();
        assert!((delta - 1.0 / 3.0).abs() < 1e-14);
        assert!((ratio - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fisher_rejects_mutation() {
        let model = swap_model(vec![1.0, 2.0]);
        let x = PopulationState::uniform(2);
        assert!(matches!(
            fisher_delta(&model, &x),
            Err(FiniteError::NotMutationFree { .. })
        ));
    }

    #[test]
    fn perron_symmetric_two_by_two() {
        let model = FiniteModel::new(
            vec![3.0, 3.0],
            vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]],
        )
        .unwrap();
        let res = perron_eigenpair(&model, 1e-12, 100_000);
        assert!(res.converged);
        assert!((res.eigenvalue - 3.0).abs() < 1e-10);
        assert!((res.right_vector[0] - 0.5).abs() < 1e-10);
        assert!((res.right_vector[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn perron_diagonal_dominant_entry() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let res = perron_eigenpair(&model, 1e-12, 100_000);
        assert!(res.converged);
        assert!((res.eigenvalue - 2.0).abs() < 1e-10);
        assert!(res.right_vector[0].abs() < 1e-9);
        assert!((res.right_vector[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perron_residual_random_ten_by_ten() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 10;
        let mut columns = Vec::new();
        for _ in 0..n {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            columns.push(raw.into_iter().map(|v| v / s).collect::<Vec<_>>());
        }
        let fitness: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let model = FiniteModel::new(fitness, columns).unwrap();
        let res = perron_eigenpair(&model, 1e-14, 100_000);
        assert!(res.converged);
        let av = model.apply_evolution(&res.right_vector);
        let residual: f64 = av
            .iter()
            .zip(res.right_vector.iter())
            .map(|(a, v)| (a - res.eigenvalue * v).abs())
            .sum();
        assert!(residual <= 1e-10, "residual {residual}");
        let atw = model.apply_evolution_transpose(&res.left_vector);
        let norm: f64 = res.left_vector.iter().sum();
        let residual_left: f64 = atw
            .iter()
            .zip(res.left_vector.iter())
            .map(|(a, w)| (a - res.eigenvalue * w).abs())
            .sum::<f64>()
            / norm;
        assert!(residual_left <= 1e-10, "left residual {residual_left}");
        let dot: f64 = res
            .left_vector
            .iter()
            .zip(res.right_vector.iter())
            .map(|(w, v)| w * v)
            .sum();
        assert!((dot - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetrized_diagonal_case() {
        let model = FiniteModel::selection_only(vec![1.0, 4.0]).unwrap();
        let b = symmetrized_operator(&model).unwrap();
        assert_eq!(b, vec![vec![1.0, 0.0], vec![0.0, 4.0]]);
    }

    #[test]
    fn symmetrized_unit_fitness_is_q() {
        let model = FiniteModel::new(
            vec![1.0, 1.0],
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        )
        .unwrap();
        let b = symmetrized_operator(&model).unwrap();
        assert!((b[0][0] - 0.7).abs() < 1e-15);
        assert!((b[0][1] - 0.3).abs() < 1e-15);
        assert!((b[1][1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn symmetrized_spectrum_agrees_with_evolution_matrix() {
        let model = FiniteModel::new(
            vec![1.0, 4.0],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let b = symmetrized_operator(&model).unwrap();
        assert!((b[0][0] - 0.5).abs() < 1e-15);
        assert!((b[0][1] - 1.0).abs() < 1e-15);
        assert!((b[1][0] - 1.0).abs() < 1e-15);
        assert!((b[1][1] - 2.0).abs() < 1e-15);
        // Dominant eigenvalue of ((0.5,1),(1,2)) is 2.5, equal to that of A = QF.
        let res = perron_eigenpair(&model, 1e-13, 100_000);
        assert!((res.eigenvalue - 2.5).abs() < 1e-10);
    }

    #[test]
    fn symmetrized_rejects_asymmetric_q() {
        let model = swap_model(vec![1.0, 2.0]);
        // swap matrix is symmetric; use a genuinely asymmetric one instead
        let asym = FiniteModel::new(
            vec![1.0, 2.0],
            vec![vec![0.9, 0.1], vec![0.4, 0.6]],
        )
        .unwrap();
        assert!(symmetrized_operator(&model).is_ok());
        assert!(matches!(
            symmetrized_operator(&asym),
            Err(FiniteError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn evolve_zero_steps() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x0 = PopulationState::uniform(2);
        let traj = evolve_finite(&model, &x0, 0);
        assert_eq!(traj.states.len(), 1);
        assert!(traj.extinct_at.is_none());
    }

    #[test]
    fn evolve_selection_fixates_fitter_type() {
        let model = FiniteModel::selection_only(vec![1.0, 2.0]).unwrap();
        let x0 = PopulationState::new(vec![0.5, 0.5]).unwrap();
        let traj = evolve_finite(&model, &x0, 50);
        let last = &traj.states.last().unwrap().0;
        assert!(last.frequencies()[0] < 1e-10);
        assert!((last.frequencies()[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn evolve_limit_is_perron_vector() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let mut columns = Vec::new();
        for _ in 0..n {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            columns.push(raw.into_iter().map(|v| v / s).collect::<Vec<_>>());
        }
        let fitness: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let model = FiniteModel::new(fitness, columns).unwrap();
        let res = perron_eigenpair(&model, 1e-14, 100_000);
        assert!(res.converged);
        let traj = evolve_finite(&model, &PopulationState::uniform(n), 500);
        let last = &traj.states.last().unwrap().0;
        for (a, b) in last.frequencies().iter().zip(res.right_vector.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn json_load_and_column_validation() {
        let model =
            FiniteModel::from_json(r#"{"fitness":[1,2],"mutation":[[0.5,0.5],[0.25,0.75]]}"#)
                .unwrap();
        assert_eq!(model.len(), 2);

        let err = FiniteModel::from_json(r#"{"fitness":[1,2],"mutation":[[0.5,0.5],[0.2,0.7]]}"#)
            .unwrap_err();
        match err {
            FiniteError::ColumnNotStochastic { column, .. } => assert_eq!(column, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    /// Strategy: a model of size n with strictly positive fitness and
    /// strictly positive stochastic mutation columns, plus a start
    /// state and a trait vector.
    fn model_state_trait(
    ) -> impl Strategy<Value = (FiniteModel, PopulationState, Vec<f64>)> {
        (2usize..6).prop_flat_map(|n| {
            let fitness = proptest::collection::vec(0.1f64..4.0, n);
            let columns = proptest::collection::vec(
                proptest::collection::vec(0.05f64..1.0, n),
                n,
            );
            let weights = proptest::collection::vec(0.05f64..1.0, n);
            let z = proptest::collection::vec(-3.0f64..3.0, n);
            (fitness, columns, weights, z).prop_map(|(fitness, columns, weights, z)| {
                let columns: Vec<Vec<f64>> = columns
                    .into_iter()
                    .map(|c| {
                        let s: f64 = c.iter().sum();
                        c.into_iter().map(|v| v / s).collect()
                    })
                    .collect();
                let model = FiniteModel::new(fitness, columns).unwrap();
                let total: f64 = weights.iter().sum();
                let state = PopulationState::new(
                    weights.into_iter().map(|w| w / total).collect(),
                )
                .unwrap();
                (model, state, z)
            })
        })
    }

    proptest! {
        #[test]
        fn step_preserves_the_simplex((model, state, _z) in model_state_trait()) {
            let next = step_finite(&model, &state).unwrap();
            let total: f64 = next.frequencies().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(next.frequencies().iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn price_terms_sum_to_the_total((model, state, z) in model_state_trait()) {
            let terms = price_decomposition(&model, &state, &z).unwrap();
            prop_assert!((terms.selection + terms.mutation - terms.total).abs() < 1e-10);
        }

        #[test]
        fn fisher_delta_is_nonnegative_without_mutation(
            (model, state, _z) in model_state_trait()
        ) {
            let pure = FiniteModel::selection_only(model.fitness().to_vec()).unwrap();
            let (delta, variance_ratio) = fisher_delta(&pure, &state).unwrap();
            prop_assert!((delta - variance_ratio).abs() < 1e-10);
            prop_assert!(delta >= -1e-14);
        }
    }
}
