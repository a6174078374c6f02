//! First nonzero eigenvalue of the Laplace–Beltrami operator of the round
//! sphere, discretized in a log-polar chart, compared with the lower bound
//! `λ₁ ≥ 2α` for `Rc ≥ α g`.

use crate::error::{Error, Result};
use crate::geometry::{curvature, ChartGeometry};
use crate::models::{LogPolarChart, RoundSphere};
use crate::tensor::{compensated_sum, Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenConfig {
    /// The chart covers `s ∈ [−s_max, s_max]`, Neumann at both ends.
    pub s_max: f64,
    pub n_s: usize,
    pub n_theta: usize,
    /// Stop once successive Rayleigh quotients agree to this relative amount.
    pub tol: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl EigenConfig {
    /// Square-ish grid with `n` points per direction.
    pub fn with_resolution(n: usize) -> Self {
        Self {
            s_max: 5.0,
            n_s: n,
            n_theta: n,
            tol: 1e-12,
            max_iter: 500,
            cg_tol: 1e-12,
            cg_max_iter: 20_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s < 32 || self.n_theta < 32 {
            return Err(Error::config("resolution", format!("need at least 32 points, got {}x{}", self.n_s, self.n_theta)));
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::config("s_max", "must be positive"));
        }
        if !(self.tol > 0.0) || !(self.cg_tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.max_iter == 0 || self.cg_max_iter == 0 {
            return Err(Error::config("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub lambda1: f64,
    /// Smallest Ricci eigenvalue `α` over the grid.
    pub ricci_min: f64,
    /// `2α`.
    pub bound: f64,
    pub iterations: usize,
    /// `‖Lu − λWu‖ / ‖λWu‖` of the returned vector.
    pub residual: f64,
    pub eigenvector: Vec<f64>,
}

/// Conservative five-point operator `−∂_a(√g g^{ab} ∂_b u)` on a cell-centred
/// grid, periodic in `θ`, zero flux at the `s` ends, and the mass `√g`.
#[derive(Clone, Debug)]
pub struct WeightedLaplacian {
    n: [usize; 2],
    /// Face coefficients divided by `Δ²`: `east[k]` couples `(i, j)` and
    /// `(i + 1, j)`, `north[k]` couples `(i, j)` and `(i, j + 1)`.
    east: Vec<f64>,
    north: Vec<f64>,
    pub mass: Vec<f64>,
}

fn flux_coefficients(g: &Matrix<2>) -> Result<(f64, f64)> {
    if g[(0, 1)].abs() > 1e-10 * (g[(0, 0)].abs() + g[(1, 1)].abs()) {
        return Err(Error::config("chart", "the five-point operator needs an orthogonal chart"));
    }
    let det = g[(0, 0)] * g[(1, 1)];
    if !(det > 0.0) {
        return Err(Error::DegenerateMetric {
            point: g.iter().copied().collect(),
        });
    }
    let sq = det.sqrt();
    Ok((sq / g[(0, 0)], sq / g[(1, 1)]))
}

impl WeightedLaplacian {
    pub fn assemble<G: ChartGeometry<2>>(chart: &G, cfg: &EigenConfig) -> Result<Self> {
        let [ns, nt] = [cfg.n_s, cfg.n_theta];
        let ds = 2.0 * cfg.s_max / ns as f64;
        let dt = std::f64::consts::TAU / nt as f64;
        let s_at = |x: f64| -cfg.s_max + x * ds;
        let mut east = vec![0.0; ns * nt];
        let mut north = vec![0.0; ns * nt];
        let mut mass = vec![0.0; ns * nt];
        for i in 0..ns {
            for j in 0..nt {
                let k = i * nt + j;
                let theta = j as f64 * dt;
                let p = Vector::<2>::new(s_at(i as f64 + 0.5), theta);
                chart.check_point(&p)?;
                let g = chart.metric(&p);
                mass[k] = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).sqrt();
                if i + 1 < ns {
                    let (a_ss, _) = flux_coefficients(&chart.metric(&Vector::<2>::new(s_at(i as f64 + 1.0), theta)))?;
                    east[k] = a_ss / (ds * ds);
                }
                let (_, a_tt) = flux_coefficients(&chart.metric(&Vector::<2>::new(p[0], theta + 0.5 * dt)))?;
                north[k] = a_tt / (dt * dt);
            }
        }
        Ok(Self {
            n: [ns, nt],
            east,
            north,
            mass,
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `Lu`, without the mass.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let [ns, nt] = self.n;
        out.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..ns {
            for j in 0..nt {
                let k = i * nt + j;
                let kn = i * nt + (j + 1) % nt;
                let flux = self.north[k] * (u[kn] - u[k]);
                out[k] -= flux;
                out[kn] += flux;
                if i + 1 < ns {
                    let ke = k + nt;
                    let flux = self.east[k] * (u[ke] - u[k]);
                    out[k] -= flux;
                    out[ke] += flux;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Remove the `W`-weighted mean.
fn deflate_constants(u: &mut [f64], mass: &[f64]) {
    let m = dot(u, mass) / compensated_sum(mass.iter().copied());
    u.iter_mut().for_each(|x| *x -= m);
}

/// Conjugate gradients for `Lx = b` with `b ⟂ 1`; the iterate stays in the
/// complement of the constants.
fn conjugate_gradient(op: &WeightedLaplacian, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    op.apply(x, &mut ap);
    for k in 0..n {
        r[k] = b[k] - ap[k];
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * dot(b, b);
    for it in 0..max_iter {
        if rr <= stop {
            return Ok(it);
        }
        op.apply(&p, &mut ap);
        let step = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        let next = dot(&r, &r);
        let beta = next / rr;
        rr = next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: max_iter,
        residual: (rr / dot(b, b)).sqrt(),
    })
}

/// Block size of the subspace iteration; the sphere's `λ₁` is threefold.
pub const BLOCK: usize = 4;

fn w_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).zip(w).map(|((x, y), m)| x * y * m))
}

/// Modified Gram–Schmidt in the `W` inner product.
fn w_orthonormalize(block: &mut [Vec<f64>], w: &[f64]) -> Result<()> {
    for a in 0..block.len() {
        for b in 0..a {
            let c = w_dot(&block[a], &block[b], w);
            let (lo, hi) = block.split_at_mut(a);
            hi[0].iter_mut().zip(&lo[b]).for_each(|(x, y)| *x -= c * y);
        }
        let norm = w_dot(&block[a], &block[a], w).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::EigenNonConvergence {
                iterations: 0,
                residual: f64::NAN,
            });
        }
        block[a].iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

/// Smallest nonzero eigenvalue of `Lu = λWu` by block inverse iteration with
/// the constants deflated and a Rayleigh–Ritz step per sweep. Returns
/// `(λ, u, iterations, relative residual)`.
pub fn smallest_nonzero_eigenvalue(
    op: &WeightedLaplacian,
    cfg: &EigenConfig,
    start: &[Vec<f64>],
) -> Result<(f64, Vec<f64>, usize, f64)> {
    let n = op.len();
    let w = &op.mass;
    let mut block: Vec<Vec<f64>> = start.to_vec();
    for u in &mut block {
        deflate_constants(u, w);
    }
    w_orthonormalize(&mut block, w)?;
    let mut lambda = f64::INFINITY;
    let mut lu = vec![0.0; n];
    for it in 1..=cfg.max_iter {
        for u in &mut block {
            let b: Vec<f64> = u.iter().zip(w).map(|(x, m)| x * m).collect();
            let mut x = u.clone();
            conjugate_gradient(op, &b, &mut x, cfg.cg_tol, cfg.cg_max_iter)?;
            deflate_constants(&mut x, w);
            *u = x;
        }
        w_orthonormalize(&mut block, w)?;
        let k = block.len();
        let lblock: Vec<Vec<f64>> = block
            .iter()
            .map(|u| {
                op.apply(u, &mut lu);
                lu.clone()
            })
            .collect();
        let small = nalgebra::DMatrix::<f64>::from_fn(k, k, |a, b| {
            0.5 * (dot(&block[a], &lblock[b]) + dot(&block[b], &lblock[a]))
        });
        let eig = small.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&c| {
                    let mut v = vec![0.0; n];
                    for (a, s) in src.iter().enumerate() {
                        let q = eig.eigenvectors[(a, c)];
                        v.iter_mut().zip(s).for_each(|(x, y)| *x += q * y);
                    }
                    v
                })
                .collect()
        };
        block = rotate(&block);
        let lrot = rotate(&lblock);
        let next = eig.eigenvalues[order[0]];
        let change = (next - lambda).abs();
        lambda = next;
        if change <= cfg.tol * lambda.abs() {
            let u = &block[0];
            let res: Vec<f64> = lrot[0].iter().zip(u).zip(w).map(|((l, x), m)| l - lambda * m * x).collect();
            let scale: Vec<f64> = u.iter().zip(w).map(|(x, m)| lambda * m * x).collect();
            let residual = (dot(&res, &res) / dot(&scale, &scale)).sqrt();
            return Ok((lambda, block.swap_remove(0), it, residual));
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: cfg.max_iter,
        residual: f64::NAN,
    })
}

/// Smallest eigenvalue of `g⁻¹Rc`, i.e. the best `α` with `Rc ≥ α g`.
pub fn ricci_lower_bound(rc: &Matrix<2>, g: &Matrix<2>) -> Result<f64> {
    let m = g.try_inverse().ok_or_else(|| Error::DegenerateMetric {
        point: g.iter().copied().collect(),
    })? * rc;
    let tr = m.trace();
    let det = m.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    Ok(0.5 * tr - disc)
}

/// `λ₁` of the round sphere of the given radius, with the curvature bound
/// read off the same chart.
pub fn eigenvalue_experiment(sphere: RoundSphere, cfg: &EigenConfig) -> Result<EigenReport> {
    cfg.validate()?;
    let chart = LogPolarChart::new(sphere, sphere.radius());
    let op = WeightedLaplacian::assemble(&chart, cfg)?;
    let nt = cfg.n_theta;
    let ds = 2.0 * cfg.s_max / cfg.n_s as f64;
    let dt = std::f64::consts::TAU / nt as f64;
    // smooth generic start vectors
    let start: Vec<Vec<f64>> = (0..BLOCK)
        .map(|b| {
            let phase = 0.7 * b as f64;
            (0..op.len())
                .map(|k| {
                    let s = -cfg.s_max + ((k / nt) as f64 + 0.5) * ds;
                    let t = (k % nt) as f64 * dt;
                    (s + phase).tanh() + (t + phase).cos() / s.cosh() + 0.5 * ((b + 1) as f64 * t).sin() / s.cosh()
                })
                .collect()
        })
        .collect();
    let (lambda1, eigenvector, iterations, residual) = smallest_nonzero_eigenvalue(&op, cfg, &start)?;
    let mut ricci_min = f64::INFINITY;
    for i in 0..cfg.n_s {
        let p = Vector::<2>::new(-cfg.s_max + (i as f64 + 0.5) * ds, 0.0);
        let rc = curvature(&chart, &p)?.ricci;
        ricci_min = ricci_min.min(ricci_lower_bound(&rc, &chart.metric(&p))?);
    }
    Ok(EigenReport {
        lambda1,
        ricci_min,
        bound: 2.0 * ricci_min,
        iterations,
        residual,
        eigenvector,
    })
}
