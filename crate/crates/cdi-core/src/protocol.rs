//! Constant-voltage charge/discharge cycles and the reported metrics:
//! charge stored, equilibrium salt adsorption capacity and charge
//! efficiency.

use alloc::vec::Vec;

use crate::constants::M_NACL;
use crate::downstream::{self, DownstreamParams};
use crate::dynamics::{self, RunOutcome, SolverSettings, StopCriteria, StopReason};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::CellParams;
use crate::transport::CellState;

/// One constant-voltage charge/discharge cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    /// Charging voltage (V).
    pub v_charge: f64,
    /// Discharge voltage (V), typically 0.
    pub v_discharge: f64,
    /// Feed concentration (mol/m³).
    pub c_feed: f64,
    /// Volumetric flow rate (m³/s); consistent with v_sup·area.
    pub flow_rate: f64,
    pub stop_charge: StopCriteria,
    pub stop_discharge: StopCriteria,
}

impl CycleSpec {
    /// Cycle spec with the flow rate derived from the cell parameters and
    /// default stop criteria for the feed.
    pub fn new(v_charge: f64, v_discharge: f64, c_feed: f64, params: &CellParams) -> Result<Self> {
        let spec = Self {
            v_charge,
            v_discharge,
            c_feed,
            flow_rate: params.flow_rate(),
            stop_charge: StopCriteria::for_feed(c_feed),
            stop_discharge: StopCriteria::for_feed(c_feed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_charge >= self.v_discharge && self.v_discharge >= 0.0) {
            return Err(Error::Domain("need V_charge >= V_discharge >= 0"));
        }
        if !(self.c_feed > 0.0) {
            return Err(Error::Domain("feed concentration must be > 0"));
        }
        if !(self.flow_rate > 0.0) {
            return Err(Error::Domain("flow rate must be > 0"));
        }
        Ok(())
    }
}

/// How a cycle finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleStatus {
    Complete,
    /// A half-cycle stopped early; the series hold what was computed.
    Partial {
        during_charge: bool,
        reason: StopReason,
    },
}

/// Recorded cycle: time series plus integrated metrics.
#[derive(Debug, Clone)]
pub struct CycleResult {
    /// Sample times (s), shared by all series.
    pub time: Vec<f64>,
    /// Cell current (A), positive while charging.
    pub current: Vec<f64>,
    /// Concentration at the cell exit (mol/m³).
    pub c_outlet: Vec<f64>,
    /// Concentration at the conductivity sensor, after the downstream
    /// mixing tank and plug delay (mol/m³).
    pub c_sensed: Vec<f64>,
    /// Thickness-averaged anode / cathode micropore charge (mol/m³).
    pub mean_sigma_anode: Vec<f64>,
    pub mean_sigma_cathode: Vec<f64>,
    /// Total salt inventory of the cell (mol).
    pub salt_inventory: Vec<f64>,
    /// Index of the last sample of the charge half-cycle.
    pub charge_end: usize,
    pub status: CycleStatus,
    /// ∫|I|dt over the charge half-cycle (C).
    pub charge_in_coulombs: f64,
    /// ∫|I|dt over the discharge half-cycle (C).
    pub charge_out_coulombs: f64,
    /// Equilibrium salt adsorption capacity from the effluent integral
    /// (mg per g of total electrode mass).
    pub eq_sac_mg_per_g: f64,
    /// Charge efficiency Λ (salt moles × F / discharge charge).
    pub charge_efficiency: f64,
}

fn trapezoid(time: &[f64], values: &[f64], lo: usize, hi: usize) -> f64 {
    let mut acc = 0.0;
    for k in lo + 1..=hi {
        acc += 0.5 * (values[k] + values[k - 1]) * (time[k] - time[k - 1]);
    }
    acc
}

/// Charge recovered during discharge: trapezoidal ∫|I|dt over the
/// discharge half-cycle (C).
pub fn charge_stored(result: &CycleResult) -> f64 {
    let abs_i: Vec<f64> = result.current.iter().map(|i| i.abs()).collect();
    trapezoid(
        &result.time,
        &abs_i,
        result.charge_end,
        result.time.len() - 1,
    )
}

/// Salt removed during the charge half-cycle, from the effluent deficit
/// integral, normalized by electrode mass (mg/g).
pub fn eq_sac(result: &CycleResult, spec: &CycleSpec, electrode_mass_kg: f64) -> f64 {
    let deficit: Vec<f64> = result
        .c_outlet
        .iter()
        .map(|c| spec.c_feed - c)
        .collect();
    let moles = spec.flow_rate * trapezoid(&result.time, &deficit, 0, result.charge_end);
    moles * M_NACL / electrode_mass_kg
}

/// Charge efficiency: moles of salt stored (effluent integral over the
/// charge half) × F over the discharge charge. NaN when no charge moved.
pub fn charge_efficiency(result: &CycleResult, spec: &CycleSpec, params: &CellParams) -> f64 {
    let deficit: Vec<f64> = result
        .c_outlet
        .iter()
        .map(|c| spec.c_feed - c)
        .collect();
    let moles = spec.flow_rate * trapezoid(&result.time, &deficit, 0, result.charge_end);
    let q = charge_stored(result);
    if q > 0.0 {
        moles * params.constants.faraday / q
    } else {
        f64::NAN
    }
}

/// Runs one constant-voltage cycle from the uncharged equilibrium:
/// charge at `spec.v_charge` to its stop criteria, then discharge at
/// `spec.v_discharge` to its own. The sensed concentration applies the
/// downstream model across the whole cycle.
pub fn run_cv_cycle(
    params: &CellParams,
    grid: &Grid,
    spec: &CycleSpec,
    downstream_params: &DownstreamParams,
    settings: &SolverSettings,
) -> Result<CycleResult> {
    spec.validate()?;
    let initial = CellState::uncharged(grid, spec.c_feed)?;
    let charge: RunOutcome = dynamics::run_to_equilibrium(
        &initial,
        spec.v_charge,
        spec.c_feed,
        grid,
        params,
        settings,
        &spec.stop_charge,
    )?;

    let mut time = charge.trace.time;
    let mut current = charge.trace.current;
    let mut c_outlet = charge.trace.c_outlet;
    let mut mean_sigma_anode = charge.trace.mean_sigma_anode;
    let mut mean_sigma_cathode = charge.trace.mean_sigma_cathode;
    let mut salt_inventory = charge.trace.salt_inventory;
    let charge_end = time.len() - 1;
    let mut status = match charge.stop {
        StopReason::Equilibrated => CycleStatus::Complete,
        reason => CycleStatus::Partial {
            during_charge: true,
            reason,
        },
    };

    if status == CycleStatus::Complete {
        let discharge = dynamics::run_to_equilibrium(
            &charge.state,
            spec.v_discharge,
            spec.c_feed,
            grid,
            params,
            settings,
            &spec.stop_discharge,
        )?;
        // first sample duplicates the half-cycle boundary
        time.extend_from_slice(&discharge.trace.time[1..]);
        current.extend_from_slice(&discharge.trace.current[1..]);
        c_outlet.extend_from_slice(&discharge.trace.c_outlet[1..]);
        mean_sigma_anode.extend_from_slice(&discharge.trace.mean_sigma_anode[1..]);
        mean_sigma_cathode.extend_from_slice(&discharge.trace.mean_sigma_cathode[1..]);
        salt_inventory.extend_from_slice(&discharge.trace.salt_inventory[1..]);
        if let StopReason::MaxTimeExceeded | StopReason::StepFailed { .. } = discharge.stop {
            status = CycleStatus::Partial {
                during_charge: false,
                reason: discharge.stop,
            };
        }
    }

    let c_sensed =
        downstream::sensed_concentration(&time, &c_outlet, downstream_params, spec.c_feed)?;

    let mut result = CycleResult {
        time,
        current,
        c_outlet,
        c_sensed,
        mean_sigma_anode,
        mean_sigma_cathode,
        salt_inventory,
        charge_end,
        status,
        charge_in_coulombs: 0.0,
        charge_out_coulombs: 0.0,
        eq_sac_mg_per_g: 0.0,
        charge_efficiency: f64::NAN,
    };
    let abs_i: Vec<f64> = result.current.iter().map(|i| i.abs()).collect();
    result.charge_in_coulombs = trapezoid(&result.time, &abs_i, 0, result.charge_end);
    result.charge_out_coulombs = charge_stored(&result);
    result.eq_sac_mg_per_g = eq_sac(&result, spec, params.electrode_mass());
    result.charge_efficiency = charge_efficiency(&result, spec, params);
    Ok(result)
}

/// Direct equilibrium solves over a list of charging voltages.
/// Per-point failures are kept in place; the sweep continues.
pub fn equilibrium_sweep(
    params: &CellParams,
    voltages: &[f64],
    c_feed: f64,
) -> Vec<Result<dynamics::EquilibriumPoint>> {
    voltages
        .iter()
        .map(|&v| dynamics::solve_equilibrium(params, v, c_feed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn rectangle_result(time: Vec<f64>, current: Vec<f64>, c_outlet: Vec<f64>, charge_end: usize) -> CycleResult {
        let n = time.len();
        CycleResult {
            c_sensed: c_outlet.clone(),
            time,
            current,
            c_outlet,
            mean_sigma_anode: alloc::vec![0.0; n],
            mean_sigma_cathode: alloc::vec![0.0; n],
            salt_inventory: alloc::vec![0.0; n],
            charge_end,
            status: CycleStatus::Complete,
            charge_in_coulombs: 0.0,
            charge_out_coulombs: 0.0,
            eq_sac_mg_per_g: 0.0,
            charge_efficiency: f64::NAN,
        }
    }

    #[test]
    fn charge_stored_examples() {
        // zero current
        let t: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let r = rectangle_result(t.clone(), alloc::vec![0.0; t.len()], alloc::vec![5.0; t.len()], 0);
        assert_eq!(charge_stored(&r), 0.0);

        // constant 1 mA over 100 s of discharge
        let r = rectangle_result(t.clone(), alloc::vec![1e-3; t.len()], alloc::vec![5.0; t.len()], 0);
        assert!((charge_stored(&r) - 0.1).abs() < 1e-15);

        // exponential decay sampled at tau/100 reproduces I0·tau
        let tau = 40.0;
        let i0 = 2e-3;
        let tt: Vec<f64> = (0..=1000).map(|k| k as f64 * tau / 100.0).collect();
        let ii: Vec<f64> = tt.iter().map(|&x| i0 * math::exp(-x / tau)).collect();
        let r = rectangle_result(tt, ii, alloc::vec![5.0; 1001], 0);
        let q = charge_stored(&r);
        assert!(
            (q - i0 * tau).abs() < 1e-3 * i0 * tau,
            "exponential integral off: {q} vs {}",
            i0 * tau
        );
    }

    #[test]
    fn eq_sac_rectangular_depletion() {
        // 1 mol/m³ depletion for 60 s at 1 mL/min, 0.1 g of electrodes
        let params = CellParams::default();
        let t: Vec<f64> = (0..=60).map(|k| k as f64).collect();
        let c_out = alloc::vec![4.0; t.len()];
        let r = rectangle_result(t, alloc::vec![0.0; 61], c_out, 60);
        let spec = CycleSpec {
            v_charge: 1.2,
            v_discharge: 0.0,
            c_feed: 5.0,
            flow_rate: 1e-6 / 60.0,
            stop_charge: StopCriteria::for_feed(5.0),
            stop_discharge: StopCriteria::for_feed(5.0),
        };
        let sac = eq_sac(&r, &spec, 1e-4);
        assert!((sac - 0.5844).abs() < 1e-10, "sac = {sac}");
        // no depletion, no adsorption
        let r0 = rectangle_result(
            (0..=60).map(|k| k as f64).collect(),
            alloc::vec![0.0; 61],
            alloc::vec![5.0; 61],
            60,
        );
        assert_eq!(eq_sac(&r0, &spec, 1e-4), 0.0);
    }

    #[test]
    fn sweep_keeps_going_past_bad_points() {
        let params = CellParams::default();
        let out = equilibrium_sweep(&params, &[0.0, -1.0, 0.4], 5.0);
        assert_eq!(out.len(), 3);
        assert!(out[0].is_ok());
        assert!(out[1].is_err());
        assert!(out[2].is_ok());
        assert!(out[2].as_ref().unwrap().charge_coulombs > 0.0);
    }

    #[test]
    fn spec_validation() {
        let params = CellParams::default();
        assert!(CycleSpec::new(0.5, 0.0, 5.0, &params).is_ok());
        assert!(CycleSpec::new(0.5, 0.6, 5.0, &params).is_err());
        assert!(CycleSpec::new(0.5, 0.0, -5.0, &params).is_err());
    }
}
