//! Time integration and equilibrium solves.
//!
//! One backward-Euler step solves the nonlinear system assembled by
//! [`crate::transport`] with damped Newton iterations. The Jacobian is
//! built by finite differences in banded form (columns separated by more
//! than the band width share one perturbation), with the two solid-phase
//! potentials handled as dense border columns and the voltage/gauge
//! constraints as border rows; the linear solve eliminates the border
//! through the Schur complement. After the residual meets tolerance one
//! extra polish iteration drives it to the rounding floor, which keeps
//! the discrete conservation telescoping at machine precision.

use alloc::vec;
use alloc::vec::Vec;

use crate::constants::M_NACL;
use crate::edl;
use crate::error::{Error, Result};
use crate::grid::{Grid, Region};
use crate::linalg::{solve_bordered, BandMatrix};
use crate::params::CellParams;
use crate::transport::{self, Assembler, CellState, Layout};

/// Newton and step-control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Convergence tolerance on the scaled residual max-norm.
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    /// Initial time step (s).
    pub dt_init: f64,
    /// Hard floor for the adaptive step (s).
    pub dt_min: f64,
    /// Cap for the adaptive step (s).
    pub dt_max: f64,
    /// Step growth factor after fast Newton convergence.
    pub dt_growth: f64,
    /// Step shrink factor after a rejected step.
    pub dt_shrink: f64,
    /// Duration of the linear voltage ramp applied at half-cycle starts (s).
    pub ramp_time: f64,
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::Domain("newton_tol must be > 0"));
        }
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::Domain("need dt_min <= dt_init <= dt_max"));
        }
        if !(self.dt_min > 0.0) {
            return Err(Error::Domain("dt_min must be > 0"));
        }
        if !(self.dt_growth >= 1.0 && self.dt_shrink > 0.0 && self.dt_shrink < 1.0) {
            return Err(Error::Domain("step factors must satisfy growth >= 1 > shrink > 0"));
        }
        if !(self.ramp_time >= 0.0) {
            return Err(Error::Domain("ramp_time must be >= 0"));
        }
        Ok(())
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 25,
            dt_init: 1e-3,
            dt_min: 1e-9,
            dt_max: 2.0,
            dt_growth: 1.4,
            dt_shrink: 0.5,
            ramp_time: 0.1,
        }
    }
}

/// Per-row residual scales: flux-balance rows scale with the storage and
/// advection terms, potential rows are already O(1).
fn residual_scales(grid: &Grid, params: &CellParams, layout: &Layout, c_feed: f64, dt: f64) -> Vec<f64> {
    let mut s = vec![1.0; layout.n_total()];
    let v = params.superficial_velocity;
    for i in 0..grid.n_cells() {
        let flux_scale = c_feed * grid.width(i) / dt + v * c_feed;
        s[layout.salt_row(i)] = flux_scale;
        s[layout.charge_row(i)] = flux_scale;
        // closure rows stay at 1 (dimensionless potentials)
    }
    s
}

fn scaled_norm(r: &[f64], scales: &[f64]) -> f64 {
    r.iter()
        .zip(scales)
        .map(|(ri, si)| (ri / si).abs())
        .fold(0.0, f64::max)
}

/// Typical magnitudes for finite-difference steps, per banded unknown.
fn typical_values(grid: &Grid, layout: &Layout, c_feed: f64) -> Vec<f64> {
    let mut typ = vec![1.0; layout.n_banded()];
    for i in 0..grid.n_cells() {
        typ[layout.c_index(i)] = c_feed;
        typ[layout.phi_index(i)] = 1.0;
        if let Some(j) = layout.sigma_index(grid, i) {
            typ[j] = c_feed.max(10.0);
        }
    }
    typ
}

struct FdJacobian {
    band: BandMatrix,
    border_cols: [Vec<f64>; 2],
    border_rows: [Vec<f64>; 2],
    corner: [f64; 4],
}

/// Finite-difference Jacobian: banded block by grouped column
/// perturbations, border columns by two extra evaluations.
fn fd_jacobian(
    asm: &Assembler<'_>,
    u: &[f64],
    border: &[f64; 2],
    r0: &[f64],
    typ: &[f64],
) -> Result<FdJacobian> {
    let layout = asm.layout;
    let n = layout.n_banded();
    let (kl, ku) = layout.band_widths();
    let stride = kl + ku + 1;
    let sqrt_eps = 1.4901161193847656e-8; // sqrt(f64::EPSILON)

    let mut band = BandMatrix::new(n, kl, ku);
    // The constraint rows are linear with fixed structure: the voltage
    // row touches only the border unknowns, the gauge row only φ[0].
    // Grouped perturbations cannot disaggregate dense rows, so these are
    // set directly.
    let mut border_rows = [vec![0.0; n], vec![0.0; n]];
    border_rows[1][layout.phi_index(0)] = 1.0;
    let mut u_p = u.to_vec();
    let mut r_p = vec![0.0; layout.n_total()];
    let vrow = layout.voltage_row();
    let grow = layout.gauge_row();

    for g in 0..stride {
        let mut any = false;
        let mut j = g;
        while j < n {
            let h = sqrt_eps * u[j].abs().max(typ[j]);
            u_p[j] = u[j] + h;
            any = true;
            j += stride;
        }
        if !any {
            continue;
        }
        asm.residual(&u_p, border, &mut r_p)?;
        let mut j = g;
        while j < n {
            let h = u_p[j] - u[j];
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                if band.in_band(i, j) {
                    band.set(i, j, (r_p[i] - r0[i]) / h);
                }
            }
            u_p[j] = u[j];
            j += stride;
        }
    }

    let mut border_cols = [vec![0.0; n], vec![0.0; n]];
    let mut corner = [0.0; 4];
    for (bc, col) in border_cols.iter_mut().enumerate() {
        let h = sqrt_eps * border[bc].abs().max(1.0);
        let mut b_p = *border;
        b_p[bc] += h;
        asm.residual(u, &b_p, &mut r_p)?;
        for i in 0..n {
            col[i] = (r_p[i] - r0[i]) / h;
        }
        corner[bc] = (r_p[vrow] - r0[vrow]) / h;
        corner[2 + bc] = (r_p[grow] - r0[grow]) / h;
    }

    Ok(FdJacobian {
        band,
        border_cols,
        border_rows,
        corner,
    })
}

/// Damped Newton solve of the implicit step equations; returns the
/// iteration count. `u`/`border` hold the converged iterate on success.
fn newton_solve(
    asm: &Assembler<'_>,
    u: &mut Vec<f64>,
    border: &mut [f64; 2],
    scales: &[f64],
    typ: &[f64],
    settings: &SolverSettings,
    time: f64,
) -> Result<u32> {
    let layout = asm.layout;
    let n = layout.n_banded();
    let mut r = vec![0.0; layout.n_total()];
    asm.residual(u, border, &mut r)?;
    let mut norm = scaled_norm(&r, scales);
    let mut polished = false;

    for it in 0..settings.newton_max_iter + 1 {
        let converged = norm <= settings.newton_tol;
        if converged && polished {
            return Ok(it);
        }
        if !converged && it == settings.newton_max_iter {
            return Err(Error::NewtonDiverged {
                time,
                dt: asm.dt,
                scaled_residual: norm,
                iterations: it,
            });
        }

        let jac = fd_jacobian(asm, u, border, &r, typ)?;
        let f: Vec<f64> = r[..n].iter().map(|v| -v).collect();
        let g = [-r[layout.voltage_row()], -r[layout.gauge_row()]];
        let (dx, dy) = solve_bordered(
            jac.band,
            &jac.border_cols,
            &jac.border_rows,
            &jac.corner,
            &f,
            &g,
        )?;

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut u_try = vec![0.0; n];
        let mut r_try = vec![0.0; layout.n_total()];
        for _ in 0..6 {
            for (k, (ui, di)) in u.iter().zip(&dx).enumerate() {
                u_try[k] = ui + lambda * di;
            }
            let b_try = [border[0] + lambda * dy[0], border[1] + lambda * dy[1]];
            if asm.residual(&u_try, &b_try, &mut r_try).is_ok() {
                let n_try = scaled_norm(&r_try, scales);
                if n_try.is_finite() && (n_try < norm || converged) {
                    // a polish step is kept only if it does not regress
                    if converged && n_try > norm {
                        break;
                    }
                    u.copy_from_slice(&u_try);
                    *border = b_try;
                    r.copy_from_slice(&r_try);
                    norm = n_try;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if converged {
            // polish done (accepted or safely skipped)
            polished = true;
            if !accepted {
                return Ok(it);
            }
            continue;
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                time,
                dt: asm.dt,
                scaled_residual: norm,
                iterations: it,
            });
        }
    }
    unreachable!("newton loop always returns");
}

fn step_inner(
    state: &CellState,
    dt: f64,
    v_cell: f64,
    c_feed: f64,
    grid: &Grid,
    params: &CellParams,
    layout: &Layout,
    settings: &SolverSettings,
) -> Result<(CellState, u32)> {
    let asm = Assembler::new(grid, params, layout, state, dt, v_cell, c_feed)?;
    let (mut u, mut border) = layout.pack(grid, state);
    let scales = residual_scales(grid, params, layout, c_feed, dt);
    let typ = typical_values(grid, layout, c_feed);
    let iters = newton_solve(&asm, &mut u, &mut border, &scales, &typ, settings, state.time)?;
    Ok((layout.unpack(grid, &u, border, state.time + dt), iters))
}

/// Advances the cell by one backward-Euler step at applied voltage
/// `v_cell`, solving the implicit system to `settings.newton_tol`.
pub fn step(
    state: &CellState,
    dt: f64,
    v_cell: f64,
    c_feed: f64,
    grid: &Grid,
    params: &CellParams,
    settings: &SolverSettings,
) -> Result<CellState> {
    settings.validate()?;
    state.check_shape(grid)?;
    let layout = Layout::new(grid);
    step_inner(state, dt, v_cell, c_feed, grid, params, &layout, settings).map(|(s, _)| s)
}

/// Stop criteria for a half-cycle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    /// Current magnitude below which the cell counts as relaxed (A).
    pub current_tol: f64,
    /// Outlet concentration deviation from feed below which the effluent
    /// counts as recovered (mol/m³).
    pub conc_tol: f64,
    /// Simulated-time cap for one half-cycle (s).
    pub max_time: f64,
}

impl StopCriteria {
    /// Defaults: 1 μA, 1% of the feed, 2 h simulated.
    pub fn for_feed(c_feed: f64) -> Self {
        Self {
            current_tol: 1e-6,
            conc_tol: 0.01 * c_feed,
            max_time: 7200.0,
        }
    }
}

/// Why a half-cycle run returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    /// Both stop criteria met.
    Equilibrated,
    /// Simulated-time cap hit first; the result is partial.
    MaxTimeExceeded,
    /// The adaptive step collapsed below `dt_min`; the result is partial.
    StepFailed { time: f64, dt: f64 },
}

/// Time series recorded at every accepted step.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub time: Vec<f64>,
    /// Cell current (A), positive while charging.
    pub current: Vec<f64>,
    /// Salt concentration in the last cell (mol/m³).
    pub c_outlet: Vec<f64>,
    /// Thickness-averaged σ_ionic of the anode (mol/m³).
    pub mean_sigma_anode: Vec<f64>,
    /// Thickness-averaged σ_ionic of the cathode (mol/m³).
    pub mean_sigma_cathode: Vec<f64>,
    /// Total salt inventory of the cell (mol).
    pub salt_inventory: Vec<f64>,
}

impl Trace {
    fn record(&mut self, state: &CellState, grid: &Grid, params: &CellParams) -> Result<()> {
        self.time.push(state.time);
        self.current.push(transport::cell_current(state, grid, params));
        self.c_outlet.push(state.c[grid.n_cells() - 1]);
        self.mean_sigma_anode
            .push(transport::mean_sigma(state, grid, Region::Anode));
        self.mean_sigma_cathode
            .push(transport::mean_sigma(state, grid, Region::Cathode));
        self.salt_inventory
            .push(transport::salt_inventory(state, grid, params)?);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Result of a half-cycle run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: CellState,
    pub trace: Trace,
    pub stop: StopReason,
}

fn retryable(err: &Error) -> bool {
    matches!(
        err,
        Error::NewtonDiverged { .. }
            | Error::SingularMatrix { .. }
            | Error::RootFind { .. }
            | Error::Domain(_)
    )
}

/// Advances from `initial` toward the target voltage (linear ramp over
/// `settings.ramp_time`, starting from the voltage implied by the state)
/// and keeps stepping adaptively until current and effluent meet the stop
/// criteria, the time cap expires, or the step controller gives up.
pub fn run_to_equilibrium(
    initial: &CellState,
    v_target: f64,
    c_feed: f64,
    grid: &Grid,
    params: &CellParams,
    settings: &SolverSettings,
    stop: &StopCriteria,
) -> Result<RunOutcome> {
    settings.validate()?;
    initial.check_shape(grid)?;
    if !(stop.current_tol > 0.0 && stop.conc_tol > 0.0 && stop.max_time > 0.0) {
        return Err(Error::Domain("stop criteria must be positive"));
    }
    let layout = Layout::new(grid);
    let t0 = initial.time;
    let v_start = initial.cell_voltage(params);
    let ramping = (v_target - v_start).abs() > 1e-12 && settings.ramp_time > 0.0;
    let ramp_end = t0 + if ramping { settings.ramp_time } else { 0.0 };
    let v_at = |t: f64| {
        if !ramping || t >= ramp_end {
            v_target
        } else {
            v_start + (v_target - v_start) * (t - t0) / settings.ramp_time
        }
    };
    let stop_met = |state: &CellState| {
        let i = transport::cell_current(state, grid, params);
        let c_out = state.c[grid.n_cells() - 1];
        i.abs() < stop.current_tol && (c_out - c_feed).abs() < stop.conc_tol
    };

    let mut trace = Trace::default();
    trace.record(initial, grid, params)?;
    let mut state = initial.clone();

    if !ramping && (v_target - v_start).abs() <= 1e-12 && stop_met(&state) {
        return Ok(RunOutcome {
            state,
            trace,
            stop: StopReason::Equilibrated,
        });
    }

    let mut dt = settings.dt_init;
    let outcome = loop {
        let elapsed = state.time - t0;
        if elapsed >= stop.max_time {
            break StopReason::MaxTimeExceeded;
        }
        let mut dt_try = dt.clamp(settings.dt_min, settings.dt_max);
        if ramping && state.time < ramp_end {
            // resolve the ramp and land exactly on its end
            dt_try = dt_try
                .min(settings.ramp_time / 4.0)
                .min(ramp_end - state.time);
        }
        dt_try = dt_try.min(t0 + stop.max_time - state.time);

        match step_inner(
            &state,
            dt_try,
            v_at(state.time + dt_try),
            c_feed,
            grid,
            params,
            &layout,
            settings,
        ) {
            Ok((next, iters)) => {
                state = next;
                trace.record(&state, grid, params)?;
                if state.time >= ramp_end && stop_met(&state) {
                    break StopReason::Equilibrated;
                }
                // keep the recorded series smooth enough for trapezoidal
                // metrics: cap growth while current or effluent move fast
                let n_rec = trace.len();
                let fast_change = if n_rec >= 2 {
                    let (i1, i0) = (trace.current[n_rec - 1], trace.current[n_rec - 2]);
                    let (c1, c0) = (trace.c_outlet[n_rec - 1], trace.c_outlet[n_rec - 2]);
                    let i_scale = i1.abs().max(i0.abs()).max(10.0 * stop.current_tol);
                    let c_scale = (c1 - c_feed)
                        .abs()
                        .max((c0 - c_feed).abs())
                        .max(2.0 * stop.conc_tol);
                    (i1 - i0).abs() > 0.1 * i_scale || (c1 - c0).abs() > 0.1 * c_scale
                } else {
                    false
                };
                dt = if iters >= 10 {
                    (dt_try * settings.dt_shrink).max(settings.dt_min)
                } else if fast_change {
                    (dt_try * 0.7).max(settings.dt_min)
                } else if iters <= 4 {
                    (dt_try * settings.dt_growth).min(settings.dt_max)
                } else {
                    dt_try
                };
            }
            Err(err) if retryable(&err) => {
                dt = dt_try * settings.dt_shrink;
                if dt < settings.dt_min {
                    break StopReason::StepFailed {
                        time: state.time,
                        dt,
                    };
                }
            }
            Err(err) => return Err(err),
        }
    };

    Ok(RunOutcome {
        state,
        trace,
        stop: outcome,
    })
}

/// Equilibrium of the cell at one (V_cell, c_feed) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub v_cell: f64,
    pub c_feed: f64,
    /// Charge stored per electrode (C).
    pub charge_coulombs: f64,
    /// Salt adsorbed by both electrodes (mol of NaCl).
    pub salt_adsorbed_mol: f64,
    /// Equilibrium salt adsorption capacity (mg salt per g of total
    /// electrode mass).
    pub eq_sac_mg_per_g: f64,
    /// Charge efficiency Λ; NaN when no charge is stored.
    pub charge_efficiency: f64,
}

/// Direct equilibrium solve: uniform concentration at the feed value,
/// zero current, and the cell voltage split evenly across the two
/// identical electrodes, Δφ_D + Δφ_S = ±V_cell/(2·V_T).
pub fn solve_equilibrium(params: &CellParams, v_cell: f64, c_feed: f64) -> Result<EquilibriumPoint> {
    if !(v_cell >= 0.0) {
        return Err(Error::Domain("equilibrium voltage must be >= 0"));
    }
    if !(c_feed > 0.0) {
        return Err(Error::Domain("feed concentration must be > 0"));
    }
    params.validate()?;
    let v_t = params.constants.thermal_voltage();
    let micro_volume =
        params.edl.micropore_porosity * params.electrode_thickness * params.area;

    if v_cell == 0.0 {
        return Ok(EquilibriumPoint {
            v_cell,
            c_feed,
            charge_coulombs: 0.0,
            salt_adsorbed_mol: 0.0,
            eq_sac_mg_per_g: 0.0,
            charge_efficiency: f64::NAN,
        });
    }

    // anode side carries +V/2V_T; the cathode mirrors it
    let anode = edl::state_from_potential(c_feed, v_cell / (2.0 * v_t), &params.edl, &params.constants)?;
    let zero = edl::zero_charge_state(c_feed, &params.edl)?;
    let sigma_mag = anode.sigma_ionic.abs();
    let charge_mol = micro_volume * sigma_mag;
    let charge_coulombs = params.constants.faraday * charge_mol;
    // both electrodes store the same salt; the ½ pairs ions into NaCl
    let salt_adsorbed_mol = micro_volume * (anode.c_mi_ions - zero.c_mi_ions);
    let eq_sac = salt_adsorbed_mol * M_NACL / params.electrode_mass();
    let lambda = if charge_mol > 0.0 {
        salt_adsorbed_mol / charge_mol
    } else {
        f64::NAN
    };
    Ok(EquilibriumPoint {
        v_cell,
        c_feed,
        charge_coulombs,
        salt_adsorbed_mol,
        eq_sac_mg_per_g: eq_sac,
        charge_efficiency: lambda,
    })
}
