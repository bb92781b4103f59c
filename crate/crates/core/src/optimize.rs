//! Small derivative-free local optimizers used by the decomposition search and
//! the recovery-measurement optimizer.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions<T> {
    pub initial_step: T,
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below this.
    pub ftol: T,
    /// Stop once the simplex diameter falls below this.
    pub xtol: T,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            initial_step: T::lit(0.5),
            max_evals: 2000,
            ftol: T::epsilon() * T::lit(16.0),
            xtol: T::epsilon().sqrt() * T::lit(0.01),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
}

/// Minimizes `f` by the Nelder–Mead simplex method (standard coefficients,
/// reflection 1, expansion 2, contraction ½, shrink ½).
pub fn nelder_mead<T: Real>(
    f: impl Fn(&[T]) -> T,
    x0: &[T],
    opts: &NelderMeadOptions<T>,
) -> Minimum<T> {
    let n = x0.len();
    if n == 0 {
        return Minimum {
            x: Vec::new(),
            f: f(x0),
            evals: 1,
        };
    }
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[T]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let fx0 = eval(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] = x[i] + opts.initial_step;
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (*a - *b).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max);
        if evals.get() >= opts.max_evals
            || (spread <= opts.ftol * (T::one() + best.abs()) && diameter <= opts.xtol)
        {
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c = *c + *v;
            }
        }
        let nn = T::from_usize_lossy(n);
        for c in centroid.iter_mut() {
            *c = *c / nn;
        }
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| *c + t * (*c - *w))
                .collect()
        };

        let xr = along(T::one());
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(two);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(half);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-half);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1) {
            let x: Vec<T> = item
                .0
                .iter()
                .zip(&x_best)
                .map(|(v, b)| *b + half * (*v - *b))
                .collect();
            let fx = eval(&x);
            *item = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        evals: evals.get(),
    }
}

/// Solves the dense system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` for a numerically singular matrix.
pub fn solve_linear<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= T::min_positive_value() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s: T = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[derive(Debug, Clone)]
pub struct LeastSquaresOptions<T> {
    pub max_iters: usize,
    /// Stop once `‖r‖` falls below this.
    pub target: T,
    /// Step for central finite differences.
    pub fd_step: T,
}

impl<T: Real> Default for LeastSquaresOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            target: T::epsilon() * T::lit(4.0),
            fd_step: T::epsilon().cbrt(),
        }
    }
}

fn sq_norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum()
}

/// Levenberg–Marquardt on `min ‖r(x)‖²` with a central-difference Jacobian.
///
/// Works for under-determined systems too: the damping term selects a short
/// step, which is what projecting onto a constraint manifold needs.
pub fn levenberg_marquardt<T: Real>(
    r: impl Fn(&[T]) -> Vec<T>,
    x0: &[T],
    opts: &LeastSquaresOptions<T>,
) -> (Vec<T>, T) {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut cost = sq_norm(&res);
    let mut lambda = T::lit(1e-3);
    let two = T::lit(2.0);
    for _ in 0..opts.max_iters {
        if cost.sqrt() <= opts.target || n == 0 {
            break;
        }
        let m = res.len();
        let mut jac = vec![vec![T::zero(); n]; m];
        for j in 0..n {
            let h = opts.fd_step * (T::one() + x[j].abs());
            let mut xp = x.clone();
            xp[j] = xp[j] + h;
            let mut xm = x.clone();
            xm[j] = xm[j] - h;
            let rp = r(&xp);
            let rm = r(&xm);
            for i in 0..m {
                jac[i][j] = (rp[i] - rm[i]) / (two * h);
            }
        }
        let mut jtj = vec![vec![T::zero(); n]; n];
        let mut jtr = vec![T::zero(); n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] = jtr[a] + jac[i][a] * res[i];
                for b in 0..n {
                    jtj[a][b] = jtj[a][b] + jac[i][a] * jac[i][b];
                }
            }
        }
        let scale = (0..n).map(|a| jtj[a][a]).fold(T::zero(), T::max).max(T::one());
        let mut improved = false;
        for _ in 0..30 {
            let mut sys = jtj.clone();
            for (a, row) in sys.iter_mut().enumerate() {
                row[a] = row[a] + lambda * scale;
            }
            let rhs: Vec<T> = jtr.iter().map(|&v| -v).collect();
            if let Some(step) = solve_linear(sys, rhs) {
                let xn: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
                let rn = r(&xn);
                let cn = sq_norm(&rn);
                if cn < cost {
                    x = xn;
                    res = rn;
                    cost = cn;
                    lambda = (lambda / T::lit(3.0)).max(T::lit(1e-15));
                    improved = true;
                    break;
                }
            }
            lambda = lambda * T::lit(4.0);
            if lambda > T::lit(1e12) {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (x, cost.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 5000,
            ..Default::default()
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &opts);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn solve_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x: Vec<f64> = solve_linear(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn lm_underdetermined_projection() {
        // Project onto the unit circle x² + y² = 1 from (0.3, 0.4).
        let r = |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0];
        let (x, res) = levenberg_marquardt(r, &[0.3, 0.4], &LeastSquaresOptions::default());
        assert!(res < 1e-14);
        // short step keeps the direction
        assert!((x[1] / x[0] - 4.0 / 3.0).abs() < 1e-6);
    }
}
