//! Time integration of the augmented system with the implicit midpoint rule.
//!
//! The unknowns are ψ on the grid nodes and θ on the quadrature nodes. In
//! semi-discrete form
//!
//! ```text
//! ψ' = i A ψ − (ζ/m_N) e_N Σ_j w_j η_j θ_j
//! θ_j' = −(ξ_j² + ℘) θ_j + η_j ψ_N
//! ```
//!
//! which dissipates `E = ½ Σ m_i|ψ_i|² + ζ/2 Σ w_j |θ_j|²` at the rate
//! `−ζ Σ w_j (ξ_j²+℘)|θ_j|²`. The midpoint rule keeps that balance exactly
//! from step to step. For α̃ = 1 the memory is replaced by the direct term
//! `ψ_N' ⊃ −(ρ/m_N) ψ_N` with rate `−ρ|ψ_N|²`.

use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kernel::{build_quadrature, DiffusiveQuadrature};
use crate::model::{BcBranch, GridConfig, ModelConfig};
use crate::numerics::{linear_fit, quadratic_fit};
use crate::operator::{assemble_operator, build_grid, DegenerateGrid, OperatorMatrix};
use crate::tridiag::{BorderedSolver, TridiagLu};

/// Relative slope change across the fit window above which a trace is not
/// treated as a power law.
pub const CURVATURE_LIMIT: f64 = 0.5;

/// Energies below this fraction of the largest sampled value are treated as
/// round-off.
pub const ENERGY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// ψ on all n_x + 1 grid nodes (ψ_0 = 0 on the Dirichlet branch).
    pub psi: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    pub t: f64,
}

impl State {
    pub fn new(psi: Vec<Complex64>, n_xi: usize) -> Self {
        State {
            psi,
            theta: vec![Complex64::new(0.0, 0.0); n_xi],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi
            .iter()
            .chain(&self.theta)
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        State {
            psi: self.psi.iter().map(|z| z * a).collect(),
            theta: self.theta.iter().map(|z| z * a).collect(),
            t: self.t,
        }
    }
}

/// Trapezoid masses of all grid nodes.
pub fn node_masses(grid: &DegenerateGrid) -> Vec<f64> {
    let n = grid.n_cells();
    (0..=n)
        .map(|i| {
            let l = if i > 0 { grid.dx[i - 1] } else { 0.0 };
            let r = if i < n { grid.dx[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

fn check_shapes(
    state: &State,
    grid: &DegenerateGrid,
    quad: Option<&DiffusiveQuadrature>,
) -> Result<()> {
    if state.psi.len() != grid.x_nodes.len() {
        return Err(Error::Shape {
            what: "psi",
            expected: grid.x_nodes.len(),
            got: state.psi.len(),
        });
    }
    if let Some(q) = quad {
        if state.theta.len() != q.len() {
            return Err(Error::Shape {
                what: "theta",
                expected: q.len(),
                got: state.theta.len(),
            });
        }
    }
    Ok(())
}

/// `½ Σ m_i |ψ_i|² + ζ/2 Σ w_j |θ_j|²`.
pub fn energy(
    state: &State,
    grid: &DegenerateGrid,
    quad: &DiffusiveQuadrature,
    zeta: f64,
) -> Result<f64> {
    check_shapes(state, grid, Some(quad))?;
    Ok(psi_energy(&state.psi, &node_masses(grid)) + memory_energy(&state.theta, quad, zeta))
}

fn psi_energy(psi: &[Complex64], mass: &[f64]) -> f64 {
    0.5 * psi
        .iter()
        .zip(mass)
        .map(|(p, m)| m * p.norm_sqr())
        .sum::<f64>()
}

fn memory_energy(theta: &[Complex64], quad: &DiffusiveQuadrature, zeta: f64) -> f64 {
    if zeta == 0.0 {
        return 0.0;
    }
    0.5 * zeta
        * theta
            .iter()
            .zip(&quad.weights)
            .map(|(t, w)| w * t.norm_sqr())
            .sum::<f64>()
}

/// `−ζ Σ w_j (ξ_j²+℘) |θ_j|²`.
pub fn dissipation_rate(theta: &[Complex64], quad: &DiffusiveQuadrature, zeta: f64) -> Result<f64> {
    if theta.len() != quad.len() {
        return Err(Error::Shape {
            what: "theta",
            expected: quad.len(),
            got: theta.len(),
        });
    }
    Ok(-zeta
        * theta
            .iter()
            .enumerate()
            .map(|(j, t)| quad.weights[j] * quad.rate(j) * t.norm_sqr())
            .sum::<f64>())
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// E' at the midpoint of the step ending at each sample.
    pub dissipation: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,E,E_dot_audit")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.times[i], self.energy[i], self.dissipation[i]
            )?;
        }
        Ok(())
    }

    /// Reads the format written by [`EnergyTrace::write_csv`].
    pub fn read_csv<R: std::io::BufRead>(input: R) -> Result<Self> {
        let mut trace = EnergyTrace {
            times: Vec::new(),
            energy: Vec::new(),
            dissipation: Vec::new(),
        };
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('t')) {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 3 {
                return Err(Error::Config(format!(
                    "line {}: expected t,E,E_dot_audit",
                    lineno + 1
                )));
            }
            trace.times.push(cols[0]);
            trace.energy.push(cols[1]);
            trace.dissipation.push(cols[2]);
        }
        Ok(trace)
    }
}

/// Worst per-step deviations seen during a run.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AuditStats {
    pub steps: usize,
    /// max |E^{n+1} − E^n − dt·E'(midpoint)| / E^n
    pub max_balance_error: f64,
    /// max (E^{n+1} − E^n), positive only if energy ever grew
    pub max_increase: f64,
    /// max |E^{n+1} − E^n| / E^n
    pub max_relative_change: f64,
}

impl AuditStats {
    fn record(&mut self, e0: f64, e1: f64, rate: f64, dt: f64) {
        self.steps += 1;
        let scale = if e0 > 0.0 { e0 } else { 1.0 };
        let de = e1 - e0;
        self.max_balance_error = self.max_balance_error.max((de - dt * rate).abs() / scale);
        self.max_increase = self.max_increase.max(de);
        self.max_relative_change = self.max_relative_change.max(de.abs() / scale);
    }
}

#[derive(Debug, Clone)]
enum Damping {
    Memory(DiffusiveQuadrature),
    Direct,
}

/// Prefactored implicit midpoint step for a fixed model, grid and dt.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub model: ModelConfig,
    pub grid: DegenerateGrid,
    pub op: OperatorMatrix,
    pub dt: f64,
    mass: Vec<f64>,
    damping: Damping,
    // ψ-block of I + dt/2 L (explicit half)
    ex_lower: Vec<Complex64>,
    ex_diag: Vec<Complex64>,
    ex_upper: Vec<Complex64>,
    memory_solver: Option<BorderedSolver>,
    direct_solver: Option<TridiagLu>,
}

impl Stepper {
    /// `quad` is required unless α̃ = 1.
    pub fn new(
        model: &ModelConfig,
        grid: DegenerateGrid,
        quad: Option<DiffusiveQuadrature>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        let op = assemble_operator(&grid, model.bc_branch);
        let (lo, di, up) = op.bands();
        let h = 0.5 * dt;
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let n = op.len();
        let last = n - 1;
        let m_n = op.mass[last];
        let ex_lower: Vec<Complex64> = lo.iter().map(|&v| i * v * h).collect();
        let mut ex_diag: Vec<Complex64> = di.iter().map(|&v| one + i * v * h).collect();
        let ex_upper: Vec<Complex64> = up.iter().map(|&v| i * v * h).collect();
        let im_lower: Vec<Complex64> = lo.iter().map(|&v| -i * v * h).collect();
        let mut im_diag: Vec<Complex64> = di.iter().map(|&v| one - i * v * h).collect();
        let im_upper: Vec<Complex64> = up.iter().map(|&v| -i * v * h).collect();

        let damping = if model.is_direct_damping() {
            Damping::Direct
        } else {
            match quad {
                Some(q) => {
                    if q.alpha_frac != model.alpha_frac || q.wp != model.wp {
                        return Err(Error::param(
                            "quadrature",
                            "built for a different alpha_frac or wp than the model",
                        ));
                    }
                    Damping::Memory(q)
                }
                None => {
                    return Err(Error::param("quadrature", "required when alpha_frac < 1"));
                }
            }
        };

        let (memory_solver, direct_solver) = match &damping {
            Damping::Direct => {
                let g = h * model.rho / m_n;
                ex_diag[last] -= g;
                im_diag[last] += g;
                (
                    None,
                    Some(TridiagLu::factor(&im_lower, &im_diag, &im_upper)?),
                )
            }
            Damping::Memory(q) => {
                let p: Vec<Complex64> = (0..q.len())
                    .map(|j| Complex64::new(h * model.zeta * q.weights[j] * q.eta[j] / m_n, 0.0))
                    .collect();
                let qv: Vec<Complex64> =
                    q.eta.iter().map(|&e| Complex64::new(-h * e, 0.0)).collect();
                let d: Vec<Complex64> = (0..q.len())
                    .map(|j| Complex64::new(1.0 + h * q.rate(j), 0.0))
                    .collect();
                (
                    Some(BorderedSolver::factor(
                        &im_lower, &im_diag, &im_upper, p, qv, d,
                    )?),
                    None,
                )
            }
        };
        Ok(Stepper {
            model: *model,
            mass: node_masses(&grid),
            grid,
            op,
            dt,
            damping,
            ex_lower,
            ex_diag,
            ex_upper,
            memory_solver,
            direct_solver,
        })
    }

    /// Builds grid and certified quadrature from a grid configuration.
    pub fn from_config(model: &ModelConfig, grid_cfg: &GridConfig) -> Result<Self> {
        grid_cfg.validate()?;
        let grid = build_grid(grid_cfg.n_x, model.alpha_deg)?;
        let quad = if model.is_direct_damping() {
            None
        } else {
            Some(build_quadrature(
                model.alpha_frac,
                model.wp,
                grid_cfg.n_xi,
                grid_cfg.xi_min,
                grid_cfg.xi_max,
            )?)
        };
        Stepper::new(model, grid, quad, grid_cfg.dt)
    }

    pub fn quadrature(&self) -> Option<&DiffusiveQuadrature> {
        match &self.damping {
            Damping::Memory(q) => Some(q),
            Damping::Direct => None,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.quadrature().map_or(0, |q| q.len())
    }

    /// Zero memory, ψ from the given nodal values.
    pub fn initial_state(&self, psi0: &[Complex64]) -> Result<State> {
        if psi0.len() != self.grid.x_nodes.len() {
            return Err(Error::Shape {
                what: "psi0",
                expected: self.grid.x_nodes.len(),
                got: psi0.len(),
            });
        }
        if self.model.bc_branch == BcBranch::DirichletLeft {
            let scale = psi0.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if psi0[0].norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::param(
                    "psi0",
                    "must vanish at x = 0 on the Dirichlet branch",
                ));
            }
        }
        let mut psi = psi0.to_vec();
        if self.op.first == 1 {
            psi[0] = Complex64::new(0.0, 0.0);
        }
        Ok(State::new(psi, self.n_theta()))
    }

    pub fn energy(&self, state: &State) -> f64 {
        let e = psi_energy(&state.psi, &self.mass);
        match &self.damping {
            Damping::Memory(q) => e + memory_energy(&state.theta, q, self.model.zeta),
            Damping::Direct => e,
        }
    }

    /// E' of the semi-discrete system at `state`.
    pub fn dissipation(&self, state: &State) -> f64 {
        match &self.damping {
            Damping::Memory(q) => {
                -self.model.zeta
                    * state
                        .theta
                        .iter()
                        .enumerate()
                        .map(|(j, t)| q.weights[j] * q.rate(j) * t.norm_sqr())
                        .sum::<f64>()
            }
            Damping::Direct => -self.model.rho * state.psi.last().map_or(0.0, |p| p.norm_sqr()),
        }
    }

    /// One implicit midpoint step.
    pub fn step(&self, state: &State, step_index: usize) -> Result<State> {
        check_shapes(state, &self.grid, self.quadrature())?;
        let first = self.op.first;
        let n = self.op.len();
        let last = n - 1;
        let u = &state.psi[first..first + n];
        let h = 0.5 * self.dt;

        let mut x: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = self.ex_diag[i] * u[i];
                if i > 0 {
                    s += self.ex_lower[i - 1] * u[i - 1];
                }
                if i < last {
                    s += self.ex_upper[i] * u[i + 1];
                }
                s
            })
            .collect();
        let mut theta = state.theta.clone();
        match &self.damping {
            Damping::Memory(q) => {
                let m_n = self.op.mass[last];
                let mut coupling = Complex64::new(0.0, 0.0);
                for j in 0..q.len() {
                    coupling += state.theta[j] * (q.weights[j] * q.eta[j]);
                }
                x[last] -= coupling * (h * self.model.zeta / m_n);
                let psi_n = u[last];
                for (j, th) in theta.iter_mut().enumerate() {
                    *th = *th * (1.0 - h * q.rate(j)) + psi_n * (h * q.eta[j]);
                }
                self.memory_solver
                    .as_ref()
                    .expect("memory solver")
                    .solve_in_place(&mut x, &mut theta);
            }
            Damping::Direct => {
                self.direct_solver
                    .as_ref()
                    .expect("direct solver")
                    .solve_in_place(&mut x);
            }
        }
        let mut psi = state.psi.clone();
        psi[first..first + n].copy_from_slice(&x);
        let next = State {
            psi,
            theta,
            t: state.t + self.dt,
        };
        if !next.is_finite() {
            return Err(Error::NonFinite {
                step: step_index,
                t: next.t,
            });
        }
        Ok(next)
    }

    /// Advances `n_steps`, sampling the energy every `output_every` steps
    /// (and at the start).
    pub fn run(
        &self,
        mut state: State,
        n_steps: usize,
        output_every: usize,
    ) -> Result<SimulationResult> {
        let every = output_every.max(1);
        let mut trace = EnergyTrace {
            times: vec![state.t],
            energy: vec![self.energy(&state)],
            dissipation: vec![0.0],
        };
        let mut audit = AuditStats::default();
        let mut e0 = trace.energy[0];
        for k in 0..n_steps {
            let next = self.step(&state, k)?;
            let mid = State {
                psi: state
                    .psi
                    .iter()
                    .zip(&next.psi)
                    .map(|(a, b)| (a + b) * 0.5)
                    .collect(),
                theta: state
                    .theta
                    .iter()
                    .zip(&next.theta)
                    .map(|(a, b)| (a + b) * 0.5)
                    .collect(),
                t: state.t + 0.5 * self.dt,
            };
            let rate = self.dissipation(&mid);
            let e1 = self.energy(&next);
            audit.record(e0, e1, rate, self.dt);
            e0 = e1;
            state = next;
            if (k + 1) % every == 0 || k + 1 == n_steps {
                trace.times.push(state.t);
                trace.energy.push(e1);
                trace.dissipation.push(rate);
            }
        }
        Ok(SimulationResult {
            trace,
            audit,
            final_state: state,
        })
    }

    pub fn write_state_csv<W: Write>(&self, state: &State, mut out: W) -> Result<()> {
        writeln!(out, "x,re_psi,im_psi")?;
        for (x, p) in self.grid.x_nodes.iter().zip(&state.psi) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", x, p.re, p.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trace: EnergyTrace,
    pub audit: AuditStats,
    pub final_state: State,
}

/// One midpoint step built from scratch; prefer [`Stepper`] for loops.
pub fn step(
    state: &State,
    dt: f64,
    model: &ModelConfig,
    grid: &DegenerateGrid,
    quad: Option<&DiffusiveQuadrature>,
) -> Result<State> {
    Stepper::new(model, grid.clone(), quad.cloned(), dt)?.step(state, 0)
}

/// Number of steps covering `t_final` with step `dt`.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt).round() as usize
}

/// Runs from ψ₀ (nodal values on the uniform grid of `grid_cfg`) with zero
/// memory to `t_final`.
pub fn run_simulation(
    model: &ModelConfig,
    grid_cfg: &GridConfig,
    psi0: &[Complex64],
    output_every: usize,
) -> Result<SimulationResult> {
    let stepper = Stepper::from_config(model, grid_cfg)?;
    let state = stepper.initial_state(psi0)?;
    stepper.run(
        state,
        step_count(grid_cfg.t_final, grid_cfg.dt),
        output_every,
    )
}

/// Decay-experiment initial data scaled to unit energy.
///
/// Weak branch: x^{(1−α)/2} sin(π x^{(2−α)/2}). Strong branch, where that
/// profile is singular at 0: 1 + cos(πx).
pub fn initial_data(grid: &DegenerateGrid, bc_branch: BcBranch) -> Vec<Complex64> {
    let a = grid.alpha_deg;
    let raw: Vec<f64> = grid
        .x_nodes
        .iter()
        .map(|&x| match bc_branch {
            BcBranch::DirichletLeft => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf((1.0 - a) / 2.0) * (std::f64::consts::PI * x.powf((2.0 - a) / 2.0)).sin()
                }
            }
            BcBranch::NeumannFluxLeft => 1.0 + (std::f64::consts::PI * x).cos(),
        })
        .collect();
    let mass = node_masses(grid);
    let e: f64 = 0.5 * raw.iter().zip(&mass).map(|(v, m)| m * v * v).sum::<f64>();
    let s = 1.0 / e.sqrt();
    raw.iter().map(|v| Complex64::new(v * s, 0.0)).collect()
}

/// Result of a log-log fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Slope change across the window relative to |slope|.
    pub curvature: f64,
}

/// Least-squares slope of ln E against ln t over the final decade of the
/// trace.
pub fn fit_decay_exponent(trace: &EnergyTrace) -> Result<DecayFit> {
    fit_decay_window(trace, None)
}

/// Same as [`fit_decay_exponent`] with an explicit window start.
pub fn fit_decay_window(trace: &EnergyTrace, t_start: Option<f64>) -> Result<DecayFit> {
    let t_end = *trace.times.last().ok_or_else(|| Error::FitWindow {
        reason: "empty trace".into(),
    })?;
    let t0 = t_start.unwrap_or(t_end / 10.0);
    if !(t0 > 0.0 && t0 < t_end) {
        return Err(Error::FitWindow {
            reason: format!("window [{t0}, {t_end}] is empty or not positive"),
        });
    }
    let e_ref = trace.energy.iter().cloned().fold(0.0, f64::max);
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (&t, &e) in trace.times.iter().zip(&trace.energy) {
        if t >= t0 && t <= t_end {
            if !(e > ENERGY_FLOOR * e_ref) {
                return Err(Error::FitWindow {
                    reason: format!("energy {e:.3e} at t = {t} is at the round-off floor"),
                });
            }
            u.push(t.ln());
            y.push(e.ln());
        }
    }
    if u.len() < 20 {
        return Err(Error::FitWindow {
            reason: format!("only {} samples in [{t0}, {t_end}], need 20", u.len()),
        });
    }
    let (intercept, slope) = linear_fit(&u, &y);
    let c = quadratic_fit(&u, &y);
    let span = u.last().unwrap() - u[0];
    let curvature = (2.0 * c[2] * span).abs() / slope.abs().max(f64::MIN_POSITIVE);
    if curvature > CURVATURE_LIMIT {
        return Err(Error::FitWindow {
            reason: format!(
                "ln E is not linear in ln t: slope changes by {:.0}% across the window",
                100.0 * curvature
            ),
        });
    }
    Ok(DecayFit {
        slope,
        intercept,
        t_start: t0,
        t_end,
        samples: u.len(),
        curvature,
    })
}
