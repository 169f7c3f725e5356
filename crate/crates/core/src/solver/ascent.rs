//! Projected gradient ascent with Armijo backtracking over a product of
//! symmetric matrix blocks.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

const F_NOISE: f64 = 64.0 * f64::EPSILON;

pub(crate) type Blocks = Vec<DMatrix<f64>>;

pub(crate) trait Problem {
    /// Objective value and gradient, or `None` outside the domain.
    fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)>;

    /// Euclidean projection onto the feasible set.
    fn project(&self, x: &[DMatrix<f64>]) -> Blocks;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AscentSettings {
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub tol_grad: f64,
    pub record_history: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct AscentOutcome {
    pub x: Blocks,
    pub value: f64,
    pub pg_norm: f64,
    pub converged: bool,
    /// Accepted objective values, first entry at the start point.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

pub(crate) fn norm(x: &[DMatrix<f64>]) -> f64 {
    x.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| crate::linalg::inner(x, y)).sum()
}

fn axpy(x: &[DMatrix<f64>], t: f64, d: &[DMatrix<f64>]) -> Blocks {
    x.iter().zip(d).map(|(a, b)| a + b * t).collect()
}

fn diff(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Norm of `P(x + g) - x`, the fixed-point residual of the projected step.
pub(crate) fn projected_grad_norm<P: Problem>(p: &P, x: &[DMatrix<f64>], g: &[DMatrix<f64>]) -> f64 {
    norm(&diff(&p.project(&axpy(x, 1.0, g)), x))
}

/// Runs ascent from `x0`, which must lie in the domain after projection.
/// Returns `None` if the projected start point is outside the domain.
pub(crate) fn maximize<P: Problem>(p: &P, x0: &[DMatrix<f64>], cfg: &AscentSettings) -> Option<AscentOutcome> {
    let mut x = p.project(x0);
    let (mut f, mut g) = p.value_grad(&x)?;
    let mut history = Vec::new();
    if cfg.record_history {
        history.push(f);
    }
    let mut step = cfg.step_init;
    let mut pg = projected_grad_norm(p, &x, &g);
    let mut iterations = 0;
    let mut converged = pg <= cfg.tol_grad;
    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let y = p.project(&axpy(&x, t, &g));
            let d = diff(&y, &x);
            let dn = norm(&d);
            if dn == 0.0 {
                break;
            }
            if let Some((fy, gy)) = p.value_grad(&y) {
                let slope = dot(&g, &d);
                let armijo = fy >= f + cfg.armijo_c * slope;
                // Near a maximizer the change in f drowns in rounding; then
                // accept on the trapezoid estimate of the gain as long as f
                // has not visibly dropped (approximate Armijo condition).
                // `|d|^2 / t` bounds the slope from below and, unlike
                // `<g, d>`, is not swamped when the projection's rounding
                // meets a large gradient normal to an active face; the same
                // noise cancels in `<gy - g, d>`.
                let q = dn * dn / t;
                let approx = fy >= f - F_NOISE * f.abs().max(1.0)
                    && dot(&diff(&gy, &g), &d) >= -(2.0 - 2.0 * cfg.armijo_c) * q;
                if armijo || approx {
                    accepted = Some((y, fy, gy));
                    break;
                }
            }
            t *= cfg.armijo_shrink;
        }
        let Some((y, fy, gy)) = accepted else {
            // No ascent step exists at machine precision; x is stationary as
            // far as this arithmetic can tell.
            break;
        };
        x = y;
        f = fy;
        g = gy;
        if cfg.record_history {
            history.push(f);
        }
        step = (t / cfg.armijo_shrink).min(cfg.step_init * 1e6);
        pg = projected_grad_norm(p, &x, &g);
        converged = pg <= cfg.tol_grad;
    }
    Some(AscentOutcome { x, value: f, pg_norm: pg, converged, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maximize -(x - 2)^2 over x in [0, 1].
    struct Quad;

    impl Problem for Quad {
        fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)> {
            let v = x[0][(0, 0)];
            Some((-(v - 2.0) * (v - 2.0), alloc::vec![DMatrix::from_element(1, 1, -2.0 * (v - 2.0))]))
        }

        fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
            alloc::vec![x[0].map(|v| v.clamp(0.0, 1.0))]
        }
    }

    #[test]
    fn reaches_boundary_optimum_monotonically() {
        let cfg = AscentSettings {
            max_iters: 100,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            tol_grad: 1e-12,
            record_history: true,
        };
        let out = maximize(&Quad, &[DMatrix::zeros(1, 1)], &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.x[0][(0, 0)], 1.0);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    }

    /// `-sum_ij w_ij (x_ij - c_ij)^2` over symmetric `0 <= x <= I`.
    struct Bowl {
        w: DMatrix<f64>,
        c: DMatrix<f64>,
    }

    impl Problem for Bowl {
        fn value_grad(&self, x: &[DMatrix<f64>]) -> Option<(f64, Blocks)> {
            let d = &x[0] - &self.c;
            let f = -self.w.component_mul(&d).component_mul(&d).sum();
            Some((f, alloc::vec![crate::linalg::symmetrize(&(self.w.component_mul(&d) * -2.0))]))
        }

        fn project(&self, x: &[DMatrix<f64>]) -> Blocks {
            alloc::vec![crate::linalg::clip_eigenvalues(&crate::linalg::symmetrize(&x[0]), 0.0, 1.0)]
        }
    }

    proptest::proptest! {
        #[test]
        fn history_is_monotone_up_to_rounding(
            w in proptest::collection::vec(0.1..10.0_f64, 3),
            c in proptest::collection::vec(-2.0..2.0_f64, 3),
        ) {
            let sym = |v: &[f64]| DMatrix::from_row_slice(2, 2, &[v[0], v[1], v[1], v[2]]);
            let p = Bowl { w: sym(&w), c: sym(&c) };
            let cfg = AscentSettings {
                max_iters: 500,
                step_init: 1.0,
                armijo_c: 1e-4,
                armijo_shrink: 0.5,
                tol_grad: 1e-10,
                record_history: true,
            };
            let out = maximize(&p, &[DMatrix::zeros(2, 2)], &cfg).unwrap();
            for pair in out.history.windows(2) {
                proptest::prop_assert!(pair[1] >= pair[0] - F_NOISE * pair[0].abs().max(1.0));
            }
        }
    }
}
