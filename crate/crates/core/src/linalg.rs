//! Dense vector math in `f64`: cosine, mean pooling, pair centering and the
//! top principal component by power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("empty input")]
    Empty,
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("principal component needs at least 2 rows, found {0}")]
    TooFewRows(usize),
    #[error("all matrix rows are zero")]
    AllZero,
    #[error("power iteration did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, LinalgError> {
    if a.len() != b.len() {
        return Err(LinalgError::LengthMismatch(a.len(), b.len()));
    }
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(LinalgError::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Component-wise arithmetic mean.
pub fn mean_pool<V: AsRef<[f64]>>(vs: &[V]) -> Result<Vec<f64>, LinalgError> {
    let first = vs.first().ok_or(LinalgError::Empty)?.as_ref();
    let mut acc = vec![0.0; first.len()];
    for v in vs {
        let v = v.as_ref();
        if v.len() != acc.len() {
            return Err(LinalgError::LengthMismatch(acc.len(), v.len()));
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = vs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<V: AsRef<[f64]>>(rows: &[V]) -> Result<Matrix, LinalgError> {
        let cols = rows.first().ok_or(LinalgError::Empty)?.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::LengthMismatch(cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Mᵀ(M v)` without forming `MᵀM`.
    fn gram_apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for row in self.iter_rows() {
            let p = dot(row, v);
            for (o, r) in out.iter_mut().zip(row) {
                *o += p * r;
            }
        }
    }
}

/// For each pair `(u, v)` emits rows `u - m` and `v - m`, `m = (u + v) / 2`.
pub fn pair_center<V: AsRef<[f64]>>(pairs: &[(V, V)]) -> Result<Matrix, LinalgError> {
    let cols = pairs.first().ok_or(LinalgError::Empty)?.0.as_ref().len();
    let mut data = Vec::with_capacity(2 * pairs.len() * cols);
    for (u, v) in pairs {
        let (u, v) = (u.as_ref(), v.as_ref());
        if u.len() != cols {
            return Err(LinalgError::LengthMismatch(cols, u.len()));
        }
        if v.len() != cols {
            return Err(LinalgError::LengthMismatch(cols, v.len()));
        }
        data.extend(u.iter().zip(v).map(|(a, b)| a - (a + b) / 2.0));
        data.extend(u.iter().zip(v).map(|(a, b)| b - (a + b) / 2.0));
    }
    Matrix::new(2 * pairs.len(), cols, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    /// Convergence threshold on the distance between successive unit iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tolerance: 1e-10,
            max_iterations: 10_000,
            seed: DEFAULT_SEED,
        }
    }
}

impl PowerIterationOptions {
    pub fn with_seed(seed: u64) -> Self {
        PowerIterationOptions {
            seed,
            ..Default::default()
        }
    }
}

/// Relative gap below which the top two eigenvalues count as tied.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponent {
    /// Unit eigenvector of `MᵀM` for the largest eigenvalue. Sign is arbitrary.
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    /// Estimate of the second-largest eigenvalue of `MᵀM`.
    pub second_eigenvalue: f64,
    pub iterations: usize,
    /// Top two eigenvalues lie within [`DEGENERACY_GAP`] of each other.
    pub degenerate: bool,
}

impl PrincipalComponent {
    /// `λ₂ / λ₁`; near 1 means the direction is poorly determined.
    pub fn eigenvalue_ratio(&self) -> f64 {
        self.second_eigenvalue / self.eigenvalue
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

struct PowerRun {
    vector: Vec<f64>,
    eigenvalue: f64,
    iterations: usize,
    converged: bool,
}

/// Power iteration for a PSD operator given as `apply(v, out)`.
fn power_run(
    dim: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    opts: &PowerIterationOptions,
    rng: &mut ChaCha8Rng,
) -> PowerRun {
    let mut v = random_unit(rng, dim);
    let mut next = vec![0.0; dim];
    let mut restarts = 0;
    for it in 1..=opts.max_iterations {
        apply(&v, &mut next);
        if normalize(&mut next) == 0.0 {
            // Start landed in the null space; a fresh draw fixes that unless
            // the operator itself is zero.
            restarts += 1;
            if restarts > 3 {
                return PowerRun {
                    vector: v,
                    eigenvalue: 0.0,
                    iterations: it,
                    converged: true,
                };
            }
            v = random_unit(rng, dim);
            continue;
        }
        let step = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut next);
        if step < opts.tolerance {
            apply(&v, &mut next);
            return PowerRun {
                eigenvalue: dot(&v, &next),
                vector: v,
                iterations: it,
                converged: true,
            };
        }
    }
    apply(&v, &mut next);
    PowerRun {
        eigenvalue: dot(&v, &next),
        vector: v,
        iterations: opts.max_iterations,
        converged: false,
    }
}

/// Top eigenvector of `MᵀM` by seeded power iteration, with a deflated second
/// run to estimate the spectral gap.
pub fn principal_component(
    m: &Matrix,
    opts: &PowerIterationOptions,
) -> Result<PrincipalComponent, LinalgError> {
    if m.rows() < 2 {
        return Err(LinalgError::TooFewRows(m.rows()));
    }
    if m.as_slice().iter().all(|&x| x == 0.0) {
        return Err(LinalgError::AllZero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let top = power_run(m.cols(), |v, out| m.gram_apply(v, out), opts, &mut rng);
    if !top.converged {
        return Err(LinalgError::NotConverged {
            iterations: top.iterations,
        });
    }
    if top.eigenvalue <= 0.0 {
        return Err(LinalgError::AllZero);
    }

    let second = if m.cols() == 1 {
        0.0
    } else {
        let lambda = top.eigenvalue;
        let u = &top.vector;
        let run = power_run(
            m.cols(),
            |v, out| {
                m.gram_apply(v, out);
                let p = lambda * dot(u, v);
                for (o, ui) in out.iter_mut().zip(u) {
                    *o -= p * ui;
                }
            },
            opts,
            &mut rng,
        );
        run.eigenvalue.clamp(0.0, lambda)
    };

    Ok(PrincipalComponent {
        degenerate: (top.eigenvalue - second) <= DEGENERACY_GAP * top.eigenvalue,
        vector: top.vector,
        eigenvalue: top.eigenvalue,
        second_eigenvalue: second,
        iterations: top.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[3.0, -4.0], &[3.0, -4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[0.6, 0.8], &[1.0, 0.0]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(LinalgError::ZeroNorm));
        assert_eq!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(LinalgError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn cosine_is_clamped() {
        let v = [1e-3, 3e-3, 7e-3];
        let c = cosine(&v, &v).unwrap();
        assert!(c <= 1.0);
    }

    #[test]
    fn mean_pool_examples() {
        assert_eq!(
            mean_pool(&[[1.0, 0.0], [0.0, 1.0]]).unwrap(),
            vec![0.5, 0.5]
        );
        assert_eq!(mean_pool(&[[0.25, -3.0]]).unwrap(), vec![0.25, -3.0]);
        assert_eq!(mean_pool::<Vec<f64>>(&[]), Err(LinalgError::Empty));
        assert!(matches!(
            mean_pool(&[vec![1.0], vec![1.0, 2.0]]),
            Err(LinalgError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn mean_pool_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let mut expected = [0.0; 4];
        for j in 0..4 {
            expected[j] = (vs[0][j] + vs[1][j] + vs[2][j]) / 3.0;
        }
        assert!(close(&mean_pool(&vs).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn pair_center_examples() {
        let m = pair_center(&[([2.0, 0.0], [0.0, 2.0])]).unwrap();
        assert_eq!(m.row(0), &[1.0, -1.0]);
        assert_eq!(m.row(1), &[-1.0, 1.0]);
        let m = pair_center(&[([0.3, 7.0], [0.3, 7.0])]).unwrap();
        assert!(m.as_slice().iter().all(|&x| x == 0.0));
        assert!(matches!(
            pair_center(&[(vec![1.0], vec![1.0, 1.0])]),
            Err(LinalgError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            pair_center::<Vec<f64>>(&[]),
            Err(LinalgError::Empty)
        ));
    }

    #[test]
    fn principal_component_examples() {
        let opts = PowerIterationOptions::default();
        let pc = principal_component(
            &Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap(),
            &opts,
        )
        .unwrap();
        assert!((pc.vector[0].abs() - 1.0).abs() < 1e-12 && pc.vector[1].abs() < 1e-9);

        let pc = principal_component(
            &Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap(),
            &opts,
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let aligned = pc.vector[0].signum();
        assert!(close(
            &[pc.vector[0] * aligned, pc.vector[1] * aligned],
            &[s, -s],
            1e-9
        ));
        assert!((pc.eigenvalue - 4.0).abs() < 1e-9);
        assert!(pc.second_eigenvalue.abs() < 1e-9);
        assert!(!pc.degenerate);
    }

    #[test]
    fn principal_component_errors() {
        let opts = PowerIterationOptions::default();
        assert_eq!(
            principal_component(
                &Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap(),
                &opts
            ),
            Err(LinalgError::AllZero)
        );
        assert_eq!(
            principal_component(&Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), &opts),
            Err(LinalgError::TooFewRows(1))
        );
        let tight = PowerIterationOptions {
            max_iterations: 2,
            ..opts
        };
        let m = Matrix::from_rows(&[[1.0, 0.2, 0.1], [0.9, 0.3, -0.2], [0.1, 1.0, 0.4]]).unwrap();
        assert_eq!(
            principal_component(&m, &tight),
            Err(LinalgError::NotConverged { iterations: 2 })
        );
    }

    #[test]
    fn tied_eigenvalues_flag_degeneracy() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let pc = principal_component(&m, &PowerIterationOptions::default()).unwrap();
        assert!(pc.degenerate);
        assert!((norm(&pc.vector) - 1.0).abs() < 1e-12);
        assert!((pc.eigenvalue_ratio() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(LinalgError::Shape { .. })
        ));
        assert_eq!(
            Matrix::new(1, 1, vec![f64::NAN]),
            Err(LinalgError::NonFinite)
        );
    }

    fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, dim)
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(a in vec_strategy(5), b in vec_strategy(5), s in 0.01f64..100.0, t in 0.01f64..100.0) {
            prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
            let base = cosine(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
            let tb: Vec<f64> = b.iter().map(|x| x * t).collect();
            prop_assert!((cosine(&sa, &tb).unwrap() - base).abs() <= 1e-12);
        }

        #[test]
        fn mean_pool_permutation_invariant(vs in proptest::collection::vec(vec_strategy(3), 1..6), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = vs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(close(&mean_pool(&vs).unwrap(), &mean_pool(&shuffled).unwrap(), 1e-12));
        }

        #[test]
        fn pair_center_rows_sum_to_zero(pairs in proptest::collection::vec((vec_strategy(4), vec_strategy(4)), 1..6)) {
            let m = pair_center(&pairs).unwrap();
            prop_assert_eq!(m.rows(), 2 * pairs.len());
            for j in 0..4 {
                let mean: f64 = m.iter_rows().map(|r| r[j]).sum::<f64>() / m.rows() as f64;
                prop_assert!(mean.abs() <= 1e-12);
            }
        }

        #[test]
        fn principal_component_unit_and_permutation_invariant(rows in proptest::collection::vec(vec_strategy(4), 2..8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let m = Matrix::from_rows(&rows).unwrap();
            prop_assume!(m.as_slice().iter().any(|&x| x != 0.0));
            let pc = principal_component(&m, &PowerIterationOptions::default());
            prop_assume!(pc.is_ok());
            let pc = pc.unwrap();
            prop_assume!(pc.eigenvalue_ratio() < 0.99);
            prop_assert!((norm(&pc.vector) - 1.0).abs() <= 1e-12);
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let other = principal_component(&Matrix::from_rows(&shuffled).unwrap(), &PowerIterationOptions::default()).unwrap();
            prop_assert!(dot(&pc.vector, &other.vector).abs() >= 1.0 - 1e-8);
        }
    }
}
