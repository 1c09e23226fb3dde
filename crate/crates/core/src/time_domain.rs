//! Conditional sojourn density `p_n(t)` and survival `q_n(t) = ∫_t^∞ p_n`
//! on a time grid, by ODE integration, spectral expansion, or numerical
//! inversion of the resolvent; plus tail-slope extraction.
//!
//! Both `p` and `q` solve `y' = A y`; they differ only in the initial
//! vector (`1/(n+1)` versus all ones).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{generator_matrix, initial_density, GeneratorMatrix, ModelParams};
use crate::spectrum::theta_s_exact;
use crate::transform::solve_shifted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMethod {
    Ode,
    Spectral,
    Inversion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Density,
    Survival,
    Both,
}

impl Quantity {
    fn density(self) -> bool {
        matches!(self, Quantity::Density | Quantity::Both)
    }
    fn survival(self) -> bool {
        matches!(self, Quantity::Survival | Quantity::Both)
    }
}

/// Values on a time grid. Row `j` of `density` / `survival` holds all `n`
/// at `t_grid[j]`; a matrix that was not requested is left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGridSolution {
    pub params: ModelParams,
    pub t_grid: Vec<f64>,
    pub density: Vec<Vec<f64>>,
    pub survival: Vec<Vec<f64>>,
    pub method: TimeMethod,
}

impl TimeGridSolution {
    pub fn density_column(&self, n: usize) -> Vec<f64> {
        self.density.iter().map(|row| row[n]).collect()
    }

    pub fn survival_column(&self, n: usize) -> Vec<f64> {
        self.survival.iter().map(|row| row[n]).collect()
    }
}

/// `t = 0` followed by `points` geometric nodes from `1e-2` to `10/|θ_s|`.
pub fn default_time_grid(params: &ModelParams, points: usize) -> Vec<f64> {
    let t_max = 10.0 / theta_s_exact(params).abs();
    geometric_grid(1e-2, t_max, points)
}

pub fn geometric_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if points == 1 {
        grid.push(t_min);
    } else if points > 1 {
        let ratio = (t_max / t_min).ln() / (points - 1) as f64;
        grid.extend((0..points).map(|j| t_min * (ratio * j as f64).exp()));
    }
    grid
}

fn check_grid(t_grid: &[f64], allow_zero: bool) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if !t_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    if allow_zero {
        if t_grid[0] != 0.0 {
            return Err(Error::Domain(format!("time grid must start at 0, got {}", t_grid[0])));
        }
    } else if t_grid[0] < 0.0 {
        return Err(Error::Domain("times must be non-negative".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ODE

/// Local error target per accepted step.
pub const ODE_LOCAL_TOL: f64 = 1e-10;
pub const ODE_MIN_STEP: f64 = 1e-12;

struct Rk4<'a> {
    gen: &'a GeneratorMatrix,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(gen: &'a GeneratorMatrix) -> Self {
        let n = gen.capacity;
        Rk4 {
            gen,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, y: &[f64], h: f64, out: &mut [f64]) {
        let n = y.len();
        self.gen.apply(y, &mut self.k[0]);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[0][i];
        }
        self.gen.apply(&self.tmp, &mut self.k[1]);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k[1][i];
        }
        self.gen.apply(&self.tmp, &mut self.k[2]);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k[2][i];
        }
        self.gen.apply(&self.tmp, &mut self.k[3]);
        for i in 0..n {
            out[i] = y[i] + h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
    }
}

/// Integrates `y' = A y` from `y0`, recording `y` at every grid time.
/// Step doubling estimates the local error; the accepted value carries the
/// Richardson correction.
fn integrate(gen: &GeneratorMatrix, y0: Vec<f64>, t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let h_max = 0.1 / gen.norm_inf();
    let mut rk = Rk4::new(gen);
    let mut y = y0;
    let (mut full, mut half, mut two) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    let mut h = h_max;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            let remaining = target - t;
            let step = h.min(remaining);
            rk.step(&y, step, &mut full);
            rk.step(&y, 0.5 * step, &mut half);
            rk.step(&half, 0.5 * step, &mut two);
            let mut err = 0.0f64;
            for i in 0..n {
                err = err.max((two[i] - full[i]).abs() / 15.0);
            }
            let factor = if err == 0.0 {
                2.0
            } else {
                (0.9 * (ODE_LOCAL_TOL / err).powf(0.2)).clamp(0.1, 2.0)
            };
            if err <= ODE_LOCAL_TOL {
                for i in 0..n {
                    y[i] = two[i] + (two[i] - full[i]) / 15.0;
                }
                t = if step == remaining { target } else { t + step };
                if step == h || factor < 1.0 {
                    h = (step * factor).min(h_max);
                }
            } else {
                h = step * factor;
                if h < ODE_MIN_STEP {
                    return Err(Error::StepUnderflow { t, step: h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Fourth-order Runge-Kutta integration on `t_grid` (which must start at 0).
pub fn ode_evolve(params: &ModelParams, t_grid: &[f64], quantity: Quantity) -> Result<TimeGridSolution> {
    check_grid(t_grid, true)?;
    let gen = generator_matrix(params);
    let k = params.capacity();
    let density = if quantity.density() {
        integrate(&gen, initial_density(k), t_grid)?
    } else {
        Vec::new()
    };
    let survival = if quantity.survival() {
        integrate(&gen, vec![1.0; k], t_grid)?
    } else {
        Vec::new()
    };
    Ok(TimeGridSolution {
        params: *params,
        t_grid: t_grid.to_vec(),
        density,
        survival,
        method: TimeMethod::Ode,
    })
}

// ---------------------------------------------------------------------------
// Spectral expansion

/// Largest spread of the symmetrizing scale factors accepted.
pub const MAX_CONDITION: f64 = 1e10;

/// Modal data: `p(t) = Σ_j e^{λ_j t} coef_j modes[:, j]`, eigenvalues
/// ascending.
#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `modes[n][j]`: component `n` of mode `j` in the original coordinates.
    pub modes: Vec<Vec<f64>>,
    /// Coefficients of the density initial vector.
    pub coef: Vec<f64>,
}

impl ModalDecomposition {
    /// Weight of mode `j` in `p_n(t)`.
    pub fn density_weight(&self, n: usize, j: usize) -> f64 {
        self.modes[n][j] * self.coef[j]
    }

    /// Weight of mode `j` in `q_n(t)`.
    pub fn survival_weight(&self, n: usize, j: usize) -> f64 {
        self.density_weight(n, j) / -self.eigenvalues[j]
    }
}

pub fn modal_decomposition(params: &ModelParams) -> Result<ModalDecomposition> {
    let k = params.capacity();
    let gen = generator_matrix(params);
    let ln_rho = params.rho().ln();
    // ln d_n^2 = n ln rho + ln(n+1)
    let ln_d2: Vec<f64> = (0..k).map(|n| n as f64 * ln_rho + (n as f64 + 1.0).ln()).collect();
    let spread = ln_d2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ln_d2.iter().cloned().fold(f64::INFINITY, f64::min);
    let estimate = (0.5 * spread).exp();
    if estimate > MAX_CONDITION {
        return Err(Error::IllConditioned { estimate });
    }

    let off = gen.symmetric_offdiag();
    let mut s = DMatrix::<f64>::zeros(k, k);
    for n in 0..k {
        s[(n, n)] = gen.diag[n];
        if n + 1 < k {
            s[(n, n + 1)] = off[n];
            s[(n + 1, n)] = off[n];
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    // D p(0) has entries sqrt(rho^n / (n+1)).
    let dp0: Vec<f64> = (0..k)
        .map(|n| (0.5 * (n as f64 * ln_rho - (n as f64 + 1.0).ln())).exp())
        .collect();
    let inv_d: Vec<f64> = ln_d2.iter().map(|l| (-0.5 * l).exp()).collect();

    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let coef = order
        .iter()
        .map(|&j| (0..k).map(|n| eig.eigenvectors[(n, j)] * dp0[n]).sum())
        .collect();
    let modes = (0..k)
        .map(|n| order.iter().map(|&j| inv_d[n] * eig.eigenvectors[(n, j)]).collect())
        .collect();
    Ok(ModalDecomposition {
        eigenvalues,
        modes,
        coef,
    })
}

/// Sum of decaying exponentials from the symmetrized eigenproblem.
pub fn spectral_expand(params: &ModelParams, t_grid: &[f64]) -> Result<TimeGridSolution> {
    check_grid(t_grid, false)?;
    let modal = modal_decomposition(params)?;
    let k = params.capacity();
    let row = |t: f64, survival: bool| -> Vec<f64> {
        (0..k)
            .map(|n| {
                (0..k)
                    .map(|j| {
                        let w = if survival {
                            modal.survival_weight(n, j)
                        } else {
                            modal.density_weight(n, j)
                        };
                        w * (modal.eigenvalues[j] * t).exp()
                    })
                    .sum()
            })
            .collect()
    };
    Ok(TimeGridSolution {
        params: *params,
        t_grid: t_grid.to_vec(),
        density: t_grid.iter().map(|&t| row(t, false)).collect(),
        survival: t_grid.iter().map(|&t| row(t, true)).collect(),
        method: TimeMethod::Spectral,
    })
}

// ---------------------------------------------------------------------------
// Inversion

/// Node count of the fixed cotangent contour.
pub const TALBOT_NODES: usize = 32;
pub const COLLISION_TOL: f64 = 1e-6;

fn talbot_nodes(t: f64) -> (f64, Vec<(Complex64, Complex64)>) {
    let m = TALBOT_NODES as f64;
    let r = 2.0 * m / (5.0 * t);
    let nodes = (1..TALBOT_NODES)
        .map(|k| {
            let phi = k as f64 * std::f64::consts::PI / m;
            let cot = 1.0 / phi.tan();
            let theta = Complex64::new(r * phi * cot, r * phi);
            let sigma = phi + (phi * cot - 1.0) * cot;
            (theta, Complex64::new(1.0, sigma))
        })
        .collect();
    (r, nodes)
}

fn check_collision(params: &ModelParams, nodes: &[Complex64]) -> Result<()> {
    let lo = -(1.0 + params.rho().sqrt()).powi(2);
    let hi = 0.0;
    for z in nodes {
        let dist = if z.re < lo {
            (z - lo).norm()
        } else if z.re > hi {
            (z - hi).norm()
        } else {
            z.im.abs()
        };
        if dist < COLLISION_TOL {
            return Err(Error::ContourCollision { distance: dist });
        }
    }
    Ok(())
}

/// Inverts `(θI - A)^{-1} y0` at each `t > 0`; returns rows over `n`.
fn invert_rows(params: &ModelParams, y0: &[f64], t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let gen = generator_matrix(params);
    let rhs: Vec<Complex64> = y0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let k = params.capacity();
    t_grid
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("inversion needs t > 0, got {t}")));
            }
            let (r, nodes) = talbot_nodes(t);
            let mut all: Vec<Complex64> = nodes.iter().map(|n| n.0).collect();
            all.push(Complex64::new(r, 0.0));
            check_collision(params, &all)?;
            let f0 = solve_shifted(&gen, Complex64::new(r, 0.0), &rhs)?;
            let mut acc: Vec<f64> = f0.iter().map(|v| 0.5 * (r * t).exp() * v.re).collect();
            for (theta, weight) in &nodes {
                let f = solve_shifted(&gen, *theta, &rhs)?;
                let e = (theta * t).exp() * weight;
                for n in 0..k {
                    acc[n] += (e * f[n]).re;
                }
            }
            Ok(acc.into_iter().map(|v| v * r / TALBOT_NODES as f64).collect())
        })
        .collect()
}

/// `p_n(t)` by inverting the resolvent on a fixed cotangent contour.
pub fn invert_transform(params: &ModelParams, n: usize, t_grid: &[f64]) -> Result<Vec<f64>> {
    if n >= params.capacity() {
        return Err(Error::InvalidInitial {
            n,
            capacity: params.capacity(),
        });
    }
    let rows = invert_rows(params, &initial_density(params.capacity()), t_grid)?;
    Ok(rows.into_iter().map(|r| r[n]).collect())
}

/// `q_n(t)` by the same inversion with the all-ones initial vector.
pub fn invert_survival(params: &ModelParams, n: usize, t_grid: &[f64]) -> Result<Vec<f64>> {
    if n >= params.capacity() {
        return Err(Error::InvalidInitial {
            n,
            capacity: params.capacity(),
        });
    }
    let rows = invert_rows(params, &vec![1.0; params.capacity()], t_grid)?;
    Ok(rows.into_iter().map(|r| r[n]).collect())
}

/// Full grid solution by inversion. A leading `t = 0` row takes the initial
/// values directly.
pub fn invert_solution(params: &ModelParams, t_grid: &[f64]) -> Result<TimeGridSolution> {
    check_grid(t_grid, false)?;
    let k = params.capacity();
    let (head, tail) = if t_grid[0] == 0.0 { (true, &t_grid[1..]) } else { (false, t_grid) };
    let mut density = invert_rows(params, &initial_density(k), tail)?;
    let mut survival = invert_rows(params, &vec![1.0; k], tail)?;
    if head {
        density.insert(0, initial_density(k));
        survival.insert(0, vec![1.0; k]);
    }
    Ok(TimeGridSolution {
        params: *params,
        t_grid: t_grid.to_vec(),
        density,
        survival,
        method: TimeMethod::Inversion,
    })
}

// ---------------------------------------------------------------------------
// Tail exponent

/// Relative slope bias from the subdominant modes above which a fit window
/// is rejected.
pub const MAX_WINDOW_BIAS: f64 = 0.01;

/// Least-squares line through `ln q_n(t)` for grid times in `[t1, t2]`.
/// Returns `(slope, intercept)`.
pub fn tail_fit(solution: &TimeGridSolution, n: usize, window: (f64, f64)) -> Result<(f64, f64)> {
    let params = &solution.params;
    if n >= params.capacity() {
        return Err(Error::InvalidInitial {
            n,
            capacity: params.capacity(),
        });
    }
    if solution.survival.is_empty() {
        return Err(Error::Domain("solution carries no survival values".into()));
    }
    let (t1, t2) = window;
    let pts: Vec<(f64, f64)> = solution
        .t_grid
        .iter()
        .zip(&solution.survival)
        .filter(|(t, _)| **t >= t1 && **t <= t2)
        .map(|(t, row)| (*t, row[n]))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain(format!("fewer than two grid points in [{t1}, {t2}]")));
    }
    if let Some((t, q)) = pts.iter().find(|(_, q)| !(*q > 0.0)) {
        return Err(Error::Domain(format!("survival {q} is not positive at t = {t}")));
    }

    let times: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let bias = window_bias(params, n, &times)?;
    if bias > MAX_WINDOW_BIAS {
        return Err(Error::WindowTooEarly { bias: 100.0 * bias });
    }
    let logs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Ok(least_squares(&times, &logs))
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / m;
    let mean_y = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mean_x) * (b - mean_y);
        sxx += (a - mean_x) * (a - mean_x);
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

/// Relative error `|slope - θ_s| / |θ_s|` of the least-squares slope that
/// the exact modal survival `q_n` would produce on `times`.
pub fn window_bias(params: &ModelParams, n: usize, times: &[f64]) -> Result<f64> {
    if params.capacity() == 1 || times.len() < 2 {
        return Ok(0.0);
    }
    let modal = modal_decomposition(params)?;
    let k = params.capacity();
    let top = modal.eigenvalues[k - 1];
    let w_top = modal.survival_weight(n, k - 1);
    // ln q_n(t) - θ_s t, evaluated relative to the dominant mode
    let logs: Vec<f64> = times
        .iter()
        .map(|&t| {
            let rest: f64 = (0..k - 1)
                .map(|j| modal.survival_weight(n, j) * ((modal.eigenvalues[j] - top) * t).exp())
                .sum();
            (w_top + rest).abs().ln()
        })
        .collect();
    let (excess, _) = least_squares(times, &logs);
    Ok(excess.abs() / top.abs())
}
