//! Finite-volume assembly of the macropore salt and charge balances over
//! the anode–spacer–cathode stack.
//!
//! Per cell the unknowns are the macropore salt concentration c, the
//! electrolyte potential φ (dimensionless) and, in electrode cells, the
//! micropore ionic charge σ. Two scalar unknowns complete the system: the
//! solid-phase potentials of anode and cathode. The assembled equations
//! are, per cell,
//!
//! * salt balance: ∂c_eff/∂t + ∂/∂x(v·c − D ∂c/∂x) = 0 with
//!   c_eff = p_mA·c + ½·p_mi·c_mi,ions in electrodes and p_sp·c in the
//!   spacer,
//! * charge balance: p_mi ∂σ/∂t + ∂J_ch/∂x = 0 with
//!   J_ch = −2·D·c·∂φ/∂x (zero micropore storage in the spacer),
//! * Donnan closure (electrode cells): φ_1 − φ = Δφ_D + Δφ_S,
//!
//! plus the voltage constraint φ_1,A − φ_1,C = V_cell/V_T and the gauge
//! φ[0] = 0. Advection is first-order upwind; diffusive face coefficients
//! use half-cell harmonic means so salt flux and current stay continuous
//! across the electrode–spacer interfaces. The upstream salt flux is the
//! reservoir-balance boundary condition (advective supply at the feed
//! concentration); downstream the diffusive flux is dropped. No ionic
//! current crosses the outer faces.

use alloc::vec;
use alloc::vec::Vec;

use crate::edl::{self, MicroporeState};
use crate::error::{Error, Result};
use crate::grid::{Grid, Region};
use crate::params::CellParams;

/// Nodal fields of the cell plus the two solid-phase potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    /// Macropore (or spacer) salt concentration per cell (mol/m³).
    pub c: Vec<f64>,
    /// Electrolyte potential per cell (dimensionless).
    pub phi: Vec<f64>,
    /// Micropore ionic charge per electrode cell (mol/m³); indexed by
    /// [`Grid::sigma_slot`].
    pub sigma: Vec<f64>,
    /// Solid-phase anode potential (dimensionless).
    pub phi1_anode: f64,
    /// Solid-phase cathode potential (dimensionless).
    pub phi1_cathode: f64,
    /// Simulation time (s).
    pub time: f64,
}

impl CellState {
    /// Uncharged equilibrium state at the feed concentration: uniform c,
    /// zero potentials, zero micropore charge.
    pub fn uncharged(grid: &Grid, c_feed: f64) -> Result<Self> {
        if !(c_feed > 0.0) || !c_feed.is_finite() {
            return Err(Error::Domain("feed concentration must be positive"));
        }
        Ok(Self {
            c: vec![c_feed; grid.n_cells()],
            phi: vec![0.0; grid.n_cells()],
            sigma: vec![0.0; grid.n_electrode_cells()],
            phi1_anode: 0.0,
            phi1_cathode: 0.0,
            time: 0.0,
        })
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.c.len() != grid.n_cells()
            || self.phi.len() != grid.n_cells()
            || self.sigma.len() != grid.n_electrode_cells()
        {
            return Err(Error::Config(alloc::format!(
                "state shape ({}, {}, {}) does not match grid ({}, {})",
                self.c.len(),
                self.phi.len(),
                self.sigma.len(),
                grid.n_cells(),
                grid.n_electrode_cells()
            )));
        }
        Ok(())
    }

    /// Applied cell voltage implied by the solid-phase potentials (V).
    pub fn cell_voltage(&self, params: &CellParams) -> f64 {
        (self.phi1_anode - self.phi1_cathode) * params.constants.thermal_voltage()
    }
}

/// Geometry and transport coefficients of the two half-cells meeting at
/// one interior face.
#[derive(Debug, Clone, Copy)]
pub struct FaceGeometry {
    pub width_left: f64,
    pub width_right: f64,
    pub diff_left: f64,
    pub diff_right: f64,
}

impl FaceGeometry {
    /// Center-to-center distance across the face.
    #[inline]
    pub fn delta(&self) -> f64 {
        0.5 * (self.width_left + self.width_right)
    }
}

/// Effective diffusivity of the region a cell belongs to.
#[inline]
pub fn region_diffusivity(params: &CellParams, region: Region) -> f64 {
    match region {
        Region::Spacer => params.diffusivity_spacer(),
        _ => params.diffusivity_macro(),
    }
}

fn face_geometry(grid: &Grid, params: &CellParams, left: usize) -> FaceGeometry {
    FaceGeometry {
        width_left: grid.width(left),
        width_right: grid.width(left + 1),
        diff_left: region_diffusivity(params, grid.region(left)),
        diff_right: region_diffusivity(params, grid.region(left + 1)),
    }
}

/// Superficial salt flux v·c_upwind − D_face·Δc/δ through an interior
/// face (mol/(m²·s)). The face diffusivity is the half-cell-width
/// harmonic mean, which keeps the discrete flux continuous across
/// region interfaces.
pub fn face_salt_flux(c_left: f64, c_right: f64, geom: &FaceGeometry, velocity: f64) -> f64 {
    let delta = geom.delta();
    let d_face = delta / (0.5 * geom.width_left / geom.diff_left
        + 0.5 * geom.width_right / geom.diff_right);
    let upwind = if velocity >= 0.0 { c_left } else { c_right };
    velocity * upwind - d_face * (c_right - c_left) / delta
}

/// Ionic charge flux −2·(Dc)_face·Δφ/δ through an interior face, in salt
/// units (mol/(m²·s)); multiply by F for A/m². The face conductivity is
/// the half-cell harmonic mean of D·c.
pub fn face_charge_flux(
    c_left: f64,
    c_right: f64,
    phi_left: f64,
    phi_right: f64,
    geom: &FaceGeometry,
) -> f64 {
    let delta = geom.delta();
    let k_face = delta
        / (0.5 * geom.width_left / (geom.diff_left * c_left)
            + 0.5 * geom.width_right / (geom.diff_right * c_right));
    -2.0 * k_face * (phi_right - phi_left) / delta
}

/// Unknown/equation numbering for the banded solve.
///
/// Within the banded block, cell `i` occupies consecutive slots
/// `[c_i, φ_i, σ_i]` (σ only in electrode cells); its equations use the
/// same slots in the order `[salt, charge, closure]`. The two border
/// unknowns are `[φ_1,A, φ_1,C]` and the two border equations
/// `[voltage constraint, gauge φ[0] = 0]`.
#[derive(Debug, Clone)]
pub struct Layout {
    offsets: Vec<usize>,
    n_banded: usize,
    kl: usize,
    ku: usize,
}

impl Layout {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_cells();
        let mut offsets = Vec::with_capacity(n);
        let mut off = 0usize;
        for i in 0..n {
            offsets.push(off);
            off += if grid.is_electrode(i) { 3 } else { 2 };
        }
        let n_banded = off;
        // exact band half-widths from the nearest-neighbor stencil
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..n {
            let rows = offsets[i]..offsets[i] + if grid.is_electrode(i) { 3 } else { 2 };
            let lo_cell = i.saturating_sub(1);
            let hi_cell = (i + 1).min(n - 1);
            let col_lo = offsets[lo_cell];
            let col_hi =
                offsets[hi_cell] + if grid.is_electrode(hi_cell) { 2 } else { 1 };
            for r in rows {
                kl = kl.max(r.saturating_sub(col_lo));
                ku = ku.max(col_hi.saturating_sub(r));
            }
        }
        Self {
            offsets,
            n_banded,
            kl,
            ku,
        }
    }

    #[inline]
    pub fn n_banded(&self) -> usize {
        self.n_banded
    }

    /// Banded unknowns plus the two solid-phase potentials.
    #[inline]
    pub fn n_total(&self) -> usize {
        self.n_banded + 2
    }

    #[inline]
    pub fn band_widths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    pub fn c_index(&self, cell: usize) -> usize {
        self.offsets[cell]
    }

    #[inline]
    pub fn phi_index(&self, cell: usize) -> usize {
        self.offsets[cell] + 1
    }

    #[inline]
    pub fn sigma_index(&self, grid: &Grid, cell: usize) -> Option<usize> {
        grid.sigma_slot(cell).map(|_| self.offsets[cell] + 2)
    }

    #[inline]
    pub fn salt_row(&self, cell: usize) -> usize {
        self.offsets[cell]
    }

    #[inline]
    pub fn charge_row(&self, cell: usize) -> usize {
        self.offsets[cell] + 1
    }

    #[inline]
    pub fn closure_row(&self, grid: &Grid, cell: usize) -> Option<usize> {
        grid.sigma_slot(cell).map(|_| self.offsets[cell] + 2)
    }

    /// Row index of the voltage constraint (first border row).
    #[inline]
    pub fn voltage_row(&self) -> usize {
        self.n_banded
    }

    /// Row index of the gauge condition (second border row).
    #[inline]
    pub fn gauge_row(&self) -> usize {
        self.n_banded + 1
    }

    /// Scatters a state into (banded unknowns, [φ1_A, φ1_C]).
    pub fn pack(&self, grid: &Grid, state: &CellState) -> (Vec<f64>, [f64; 2]) {
        let mut u = vec![0.0; self.n_banded];
        for i in 0..grid.n_cells() {
            u[self.c_index(i)] = state.c[i];
            u[self.phi_index(i)] = state.phi[i];
            if let Some(slot) = grid.sigma_slot(i) {
                u[self.sigma_index(grid, i).expect("electrode cell")] = state.sigma[slot];
            }
        }
        (u, [state.phi1_anode, state.phi1_cathode])
    }

    /// Gathers a state back from packed unknowns.
    pub fn unpack(&self, grid: &Grid, u: &[f64], border: [f64; 2], time: f64) -> CellState {
        let n = grid.n_cells();
        let mut c = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut sigma = vec![0.0; grid.n_electrode_cells()];
        for i in 0..n {
            c.push(u[self.c_index(i)]);
            phi.push(u[self.phi_index(i)]);
            if let Some(slot) = grid.sigma_slot(i) {
                sigma[slot] = u[self.sigma_index(grid, i).expect("electrode cell")];
            }
        }
        CellState {
            c,
            phi,
            sigma,
            phi1_anode: border[0],
            phi1_cathode: border[1],
            time,
        }
    }
}

/// Micropore closure state for one electrode cell of a `CellState`.
pub fn micropore_state(
    state: &CellState,
    grid: &Grid,
    params: &CellParams,
    cell: usize,
) -> Result<MicroporeState> {
    let slot = grid
        .sigma_slot(cell)
        .ok_or(Error::Domain("micropore state requested in the spacer"))?;
    edl::state_from_charge(
        state.c[cell],
        state.sigma[slot],
        &params.edl,
        &params.constants,
    )
}

/// Effective (volume-averaged) salt concentration of one cell:
/// p_mA·c + ½·p_mi·c_mi,ions in electrodes, p_sp·c in the spacer.
pub fn effective_concentration(
    state: &CellState,
    grid: &Grid,
    params: &CellParams,
    cell: usize,
) -> Result<f64> {
    match grid.region(cell) {
        Region::Spacer => Ok(params.spacer_porosity * state.c[cell]),
        _ => {
            let mi = micropore_state(state, grid, params, cell)?;
            Ok(params.macro_porosity * state.c[cell]
                + 0.5 * params.edl.micropore_porosity * mi.c_mi_ions)
        }
    }
}

/// Total salt inventory ∑ c_eff·ΔV over the cell (mol).
pub fn salt_inventory(state: &CellState, grid: &Grid, params: &CellParams) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..grid.n_cells() {
        total += effective_concentration(state, grid, params, i)? * grid.width(i) * params.area;
    }
    Ok(total)
}

/// Width-weighted mean micropore ionic charge of one electrode (mol/m³).
pub fn mean_sigma(state: &CellState, grid: &Grid, region: Region) -> f64 {
    let cells = match region {
        Region::Anode => grid.anode_cells(),
        Region::Cathode => grid.cathode_cells(),
        Region::Spacer => return 0.0,
    };
    let mut weighted = 0.0;
    let mut length = 0.0;
    for i in cells {
        let slot = grid.sigma_slot(i).expect("electrode cell");
        weighted += state.sigma[slot] * grid.width(i);
        length += grid.width(i);
    }
    weighted / length
}

/// Ionic current density through the spacer from the integrated Ohmic
/// relation J_ch·∫c⁻¹dx = −2·D_sp·Δφ, discretized over the interior
/// spacer faces (mol/(m²·s); multiply by F·A for amperes).
pub fn spacer_current_density(state: &CellState, grid: &Grid, params: &CellParams) -> f64 {
    let spacer = grid.spacer_cells();
    let first = spacer.start;
    let last = spacer.end - 1;
    let d_sp = params.diffusivity_spacer();
    let mut resistance = 0.0; // ∑ δ_f / (D·c)_face over interior spacer faces
    for j in first..last {
        resistance += 0.5 * grid.width(j) / (d_sp * state.c[j])
            + 0.5 * grid.width(j + 1) / (d_sp * state.c[j + 1]);
    }
    -2.0 * (state.phi[last] - state.phi[first]) / resistance
}

/// Cell current I = F·A·J_ch (A); positive while charging.
pub fn cell_current(state: &CellState, grid: &Grid, params: &CellParams) -> f64 {
    params.constants.faraday * params.area * spacer_current_density(state, grid, params)
}

/// Residual assembler for the backward-Euler system. Holds everything
/// fixed over one nonlinear solve: the previous state's storage terms,
/// the applied voltage and the feed concentration.
pub(crate) struct Assembler<'a> {
    pub grid: &'a Grid,
    pub params: &'a CellParams,
    pub layout: &'a Layout,
    pub dt: f64,
    pub v_cell: f64,
    pub c_feed: f64,
    /// c_eff of the previous state, per cell.
    prev_ceff: Vec<f64>,
    /// σ of the previous state, per electrode slot.
    prev_sigma: Vec<f64>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        grid: &'a Grid,
        params: &'a CellParams,
        layout: &'a Layout,
        prev: &CellState,
        dt: f64,
        v_cell: f64,
        c_feed: f64,
    ) -> Result<Self> {
        prev.check_shape(grid)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain("dt must be positive and finite"));
        }
        if !v_cell.is_finite() || !c_feed.is_finite() || !(c_feed > 0.0) {
            return Err(Error::NonFinite("cell voltage or feed concentration"));
        }
        let mut prev_ceff = Vec::with_capacity(grid.n_cells());
        for i in 0..grid.n_cells() {
            prev_ceff.push(effective_concentration(prev, grid, params, i)?);
        }
        Ok(Self {
            grid,
            params,
            layout,
            dt,
            v_cell,
            c_feed,
            prev_ceff,
            prev_sigma: prev.sigma.clone(),
        })
    }

    /// Evaluates the residual of the packed iterate into `out`
    /// (length `n_banded + 2`; border rows last).
    pub fn residual(&self, u: &[f64], border: &[f64; 2], out: &mut [f64]) -> Result<()> {
        let grid = self.grid;
        let params = self.params;
        let lay = self.layout;
        let n = grid.n_cells();
        let v = params.superficial_velocity;
        let p_mi = params.edl.micropore_porosity;
        debug_assert_eq!(u.len(), lay.n_banded());
        debug_assert_eq!(out.len(), lay.n_total());

        // per-cell closure states (electrode cells)
        let mut ceff = vec![0.0; n];
        let mut dphi_edl = vec![0.0; n];
        for i in 0..n {
            let c_i = u[lay.c_index(i)];
            if !(c_i > 0.0) {
                return Err(Error::Domain("non-positive concentration in iterate"));
            }
            if grid.is_electrode(i) {
                let sig = u[lay.sigma_index(grid, i).expect("electrode cell")];
                let mi = edl::state_from_charge(c_i, sig, &params.edl, &params.constants)?;
                ceff[i] = params.macro_porosity * c_i + 0.5 * p_mi * mi.c_mi_ions;
                dphi_edl[i] = mi.dphi_total();
            } else {
                ceff[i] = params.spacer_porosity * c_i;
            }
        }

        // face fluxes: salt and charge, boundary faces included
        let mut salt_flux = vec![0.0; n + 1];
        let mut charge_flux = vec![0.0; n + 1];
        salt_flux[0] = v * self.c_feed; // reservoir balance at the inlet
        salt_flux[n] = v * u[lay.c_index(n - 1)]; // advective outflow only
        charge_flux[0] = 0.0;
        charge_flux[n] = 0.0;
        for f in 1..n {
            let (l, r) = (f - 1, f);
            let geom = face_geometry(grid, params, l);
            let cl = u[lay.c_index(l)];
            let cr = u[lay.c_index(r)];
            salt_flux[f] = face_salt_flux(cl, cr, &geom, v);
            charge_flux[f] =
                face_charge_flux(cl, cr, u[lay.phi_index(l)], u[lay.phi_index(r)], &geom);
        }

        for i in 0..n {
            let dx = grid.width(i);
            out[lay.salt_row(i)] =
                (ceff[i] - self.prev_ceff[i]) * dx / self.dt + salt_flux[i + 1] - salt_flux[i];
            out[lay.charge_row(i)] = match grid.sigma_slot(i) {
                Some(slot) => {
                    let sig = u[lay.sigma_index(grid, i).expect("electrode cell")];
                    p_mi * (sig - self.prev_sigma[slot]) * dx / self.dt + charge_flux[i + 1]
                        - charge_flux[i]
                }
                None => charge_flux[i + 1] - charge_flux[i],
            };
            if let Some(row) = lay.closure_row(grid, i) {
                let phi1 = match grid.region(i) {
                    Region::Anode => border[0],
                    Region::Cathode => border[1],
                    Region::Spacer => unreachable!("closure row in spacer"),
                };
                out[row] = (phi1 - u[lay.phi_index(i)]) - dphi_edl[i];
            }
        }

        let v_t = params.constants.thermal_voltage();
        out[lay.voltage_row()] = border[0] - border[1] - self.v_cell / v_t;
        out[lay.gauge_row()] = u[lay.phi_index(0)];
        Ok(())
    }
}

/// Residual of the fully implicit step from `state_prev` to `state` over
/// `dt` at applied voltage `v_cell`: one entry per unknown, ordered as
/// documented on [`Layout`] (cell rows first, then the voltage and gauge
/// rows). A converged step has all entries at solver tolerance.
pub fn assemble_residual(
    state: &CellState,
    state_prev: &CellState,
    dt: f64,
    v_cell: f64,
    c_feed: f64,
    grid: &Grid,
    params: &CellParams,
) -> Result<Vec<f64>> {
    state.check_shape(grid)?;
    let layout = Layout::new(grid);
    let asm = Assembler::new(grid, params, &layout, state_prev, dt, v_cell, c_feed)?;
    let (u, border) = layout.pack(grid, state);
    for value in u.iter().chain(border.iter()) {
        if !value.is_finite() {
            return Err(Error::NonFinite("state"));
        }
    }
    let mut out = vec![0.0; layout.n_total()];
    asm.residual(&u, &border, &mut out)?;
    Ok(out)
}
