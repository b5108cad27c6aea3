//! Dense linear algebra helpers: Kronecker products, column-major
//! vectorization and an LU solver with a condition estimate.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots with magnitude below this are treated as exact singularity.
pub const SINGULAR_PIVOT: f64 = 1e-300;
/// Condition estimate above which one step of iterative refinement is applied.
pub const REFINE_CONDITION: f64 = 1e10;
/// Condition estimate above which a warning is logged.
pub const WARN_CONDITION: f64 = 1e14;

/// Kronecker product A ⊗ B.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Stacks the columns of `a` into one vector.
pub fn vec_of(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Dense LU factorization with partial pivoting, PA = LU.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
    anorm: f64,
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl LuFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let anorm = one_norm(a);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].abs());
            for r in (k + 1)..n {
                let v = lu[(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best >= SINGULAR_PIVOT) {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: best,
                });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for r in (k + 1)..n {
                lu[(r, k)] /= pivot;
            }
            for c in (k + 1)..n {
                let ukc = lu[(k, c)];
                if ukc == 0.0 {
                    continue;
                }
                for r in (k + 1)..n {
                    let l = lu[(r, k)];
                    lu[(r, c)] -= l * ukc;
                }
            }
        }
        Ok(Self { lu, perm, anorm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves Aᵀ x = b.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s;
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        Ok(x)
    }

    /// Hager/Higham estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let Ok(y) = self.solve(&x) else {
                return f64::INFINITY;
            };
            let ynorm: f64 = y.iter().map(|v| v.abs()).sum();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let Ok(z) = self.solve_transpose(&xi) else {
                return f64::INFINITY;
            };
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.abs()))
                .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if ynorm <= est {
                break;
            }
            est = ynorm;
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[jmax] = 1.0;
        }
        est * self.anorm
    }
}

/// Outcome of [`solve_dense`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DVector<f64>,
    pub condition: f64,
    pub refined: bool,
}

/// Solves A x = b by LU with partial pivoting. One step of iterative
/// refinement is applied when the condition estimate exceeds
/// [`REFINE_CONDITION`]; a warning is logged above [`WARN_CONDITION`].
pub fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SolveReport> {
    let lu = LuFactor::new(a)?;
    let mut x = lu.solve(b)?;
    let condition = lu.condition_estimate();
    let refined = condition >= REFINE_CONDITION;
    if refined {
        let r = b - a * &x;
        x += lu.solve(&r)?;
    }
    if condition >= WARN_CONDITION {
        warn!("linear system is ill-conditioned (1-norm condition estimate {condition:.3e})");
    }
    Ok(SolveReport {
        solution: x,
        condition,
        refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn kron_example() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let i = DMatrix::identity(2, 2);
        let k = kron(&i, &a);
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k[(1, 1)], 4.0);
        assert_eq!(k[(2, 2)], 1.0);
        assert_eq!(k[(0, 2)], 0.0);
        assert_eq!(k[(3, 3)], 4.0);
    }

    #[test]
    fn vec_example() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec_of(&a).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvec(&vec_of(&a), 2, 2).unwrap(), a);
        assert!(unvec(&vec_of(&a), 3, 2).is_err());
    }

    #[test]
    fn solve_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let b = DVector::from_column_slice(&[2.0, 8.0]);
        let x = solve_dense(&a, &b).unwrap().solution;
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            solve_dense(&s, &b),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn hilbert_gets_refined() {
        let n = 10;
        let h = DMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
        let want = DVector::from_element(n, 1.0);
        let b = &h * &want;
        let rep = solve_dense(&h, &b).unwrap();
        assert!(rep.condition > 1e12);
        assert!(rep.refined);
        assert!((&h * &rep.solution - &b).amax() < 1e-12);
    }

    #[test]
    fn condition_estimate_on_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 10.0, 1e-3]));
        let c = LuFactor::new(&a).unwrap().condition_estimate();
        assert!((c - 1e4).abs() < 1e-6);
    }

    #[test]
    fn transpose_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 7, 7) + DMatrix::identity(7, 7) * 3.0;
        let b = DVector::from_fn(7, |i, _| i as f64 - 2.0);
        let lu = LuFactor::new(&a).unwrap();
        let x = lu.solve_transpose(&b).unwrap();
        assert!((a.transpose() * x - b).amax() < 1e-12);
    }

    proptest! {
        #[test]
        fn vec_identity(seed in 0u64..1000, m in 1usize..6, n in 1usize..6, p in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, m, n);
            let x = random_matrix(&mut rng, n, p);
            let b = random_matrix(&mut rng, p, 4);
            let lhs = vec_of(&(&a * &x * &b));
            let rhs = kron(&b.transpose(), &a) * vec_of(&x);
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }

        #[test]
        fn lu_residual_small(seed in 0u64..1000, n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 0.5;
            let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            if let Ok(rep) = solve_dense(&a, &b) {
                let r = (&a * &rep.solution - &b).amax();
                prop_assert!(r <= 1e-10 * (1.0 + rep.condition * 1e-6));
            }
        }
    }
}
