//! Fits the three electrode parameters (micropore volume v_mi,
//! attraction energy E, Stern capacitance C_S) to equilibrium charge and
//! salt-adsorption measurements across voltages and feed concentrations.
//!
//! The objective is a scaled least-squares sum over the dataset rows,
//! minimized by derivative-free Nelder-Mead simplex search in
//! box-normalized coordinates with penalty walls and two restarts.

use alloc::vec::Vec;

use crate::dynamics::solve_equilibrium;
use crate::error::{Error, Result};
use crate::math;
use crate::params::CellParams;

/// One equilibrium measurement row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumRow {
    /// Charging voltage (V).
    pub v_cell: f64,
    /// Feed concentration (mol/m³).
    pub c_feed: f64,
    /// Measured charge stored (C).
    pub charge_coulombs: f64,
    /// Measured eq-SAC (mg/g).
    pub eq_sac_mg_per_g: f64,
    /// Relative row weight.
    pub weight: f64,
}

/// Equilibrium dataset used for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumDataset {
    pub rows: Vec<EquilibriumRow>,
}

impl EquilibriumDataset {
    pub fn new(rows: Vec<EquilibriumRow>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::Config(alloc::format!(
                "need at least 3 rows to fit 3 parameters, got {}",
                rows.len()
            )));
        }
        for (k, row) in rows.iter().enumerate() {
            if !(row.v_cell > 0.0) {
                return Err(Error::Config(alloc::format!(
                    "row {k}: charging voltage must be > 0"
                )));
            }
            if !(row.c_feed > 0.0) || !(row.weight > 0.0) {
                return Err(Error::Config(alloc::format!(
                    "row {k}: feed concentration and weight must be > 0"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// RMS scales of the measured charges and eq-SACs, used to balance
    /// the two residual families.
    fn scales(&self) -> (f64, f64) {
        let n = self.rows.len() as f64;
        let sq = self.rows.iter().map(|r| r.charge_coulombs * r.charge_coulombs).sum::<f64>() / n;
        let ss = self.rows.iter().map(|r| r.eq_sac_mg_per_g * r.eq_sac_mg_per_g).sum::<f64>() / n;
        (math::sqrt(sq).max(1e-300), math::sqrt(ss).max(1e-300))
    }
}

/// Box bounds for the three fit parameters, in model units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    /// Micropore volume (m³/kg).
    pub micropore_volume: (f64, f64),
    /// Attraction energy (thermal-energy units · mol/m³).
    pub attraction_energy: (f64, f64),
    /// Stern capacitance (F/m³).
    pub stern_capacitance: (f64, f64),
}

impl Default for FitBounds {
    /// 0.1–1.5 mL/g, 0–3000, 30–500 F/mL.
    fn default() -> Self {
        Self {
            micropore_volume: (1e-4, 1.5e-3),
            attraction_energy: (0.0, 3000.0),
            stern_capacitance: (3e7, 5e8),
        }
    }
}

impl FitBounds {
    fn as_array(&self) -> [(f64, f64); 3] {
        [
            self.micropore_volume,
            self.attraction_energy,
            self.stern_capacitance,
        ]
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        self.as_array()
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }
}

/// Result of a calibration run.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted micropore volume (m³/kg).
    pub micropore_volume: f64,
    /// Fitted attraction energy.
    pub attraction_energy: f64,
    /// Fitted Stern capacitance (F/m³).
    pub stern_capacitance: f64,
    /// Square root of the scaled objective at the optimum.
    pub residual_norm: f64,
    /// Scaled (charge, eq-SAC) residuals per dataset row.
    pub per_row_residuals: Vec<(f64, f64)>,
    pub converged: bool,
    pub evaluations: u64,
}

/// Scaled least-squares objective at one parameter point; model failures
/// return a large penalty so the search can continue around them.
pub fn fit_objective(
    base: &CellParams,
    data: &EquilibriumDataset,
    x: &[f64; 3],
    bounds: &FitBounds,
) -> f64 {
    let barray = bounds.as_array();
    let mut violation = 0.0;
    for ((lo, hi), &v) in barray.iter().zip(x) {
        let span = hi - lo;
        if v < *lo {
            let d = (lo - v) / span;
            violation += d * d;
        } else if v > *hi {
            let d = (v - hi) / span;
            violation += d * d;
        }
    }
    if violation > 0.0 {
        return 1e12 * (1.0 + violation);
    }
    let params = match base.with_fit_parameters(x[0], x[1], x[2]) {
        Ok(p) => p,
        Err(_) => return 1e12,
    };
    let (scale_q, scale_s) = data.scales();
    let mut obj = 0.0;
    for row in &data.rows {
        match solve_equilibrium(&params, row.v_cell, row.c_feed) {
            Ok(eq) => {
                let rq = (eq.charge_coulombs - row.charge_coulombs) / scale_q;
                let rs = (eq.eq_sac_mg_per_g - row.eq_sac_mg_per_g) / scale_s;
                obj += row.weight * (rq * rq + rs * rs);
            }
            Err(_) => return 1e12,
        }
    }
    obj
}

struct Simplex {
    // points in box-normalized coordinates with their objective values
    points: Vec<([f64; 3], f64)>,
}

const NM_ALPHA: f64 = 1.0; // reflection
const NM_GAMMA: f64 = 2.0; // expansion
const NM_RHO: f64 = 0.5; // contraction
const NM_SIGMA: f64 = 0.5; // shrink

fn nelder_mead<F>(
    mut f: F,
    start: [f64; 3],
    spread: f64,
    max_iter: u32,
    tol: f64,
    evals: &mut u64,
) -> ([f64; 3], f64)
where
    F: FnMut(&[f64; 3]) -> f64,
{
    let mut eval = |x: &[f64; 3], evals: &mut u64| {
        *evals += 1;
        f(x)
    };
    let mut simplex = Simplex { points: Vec::with_capacity(4) };
    let f0 = eval(&start, evals);
    simplex.points.push((start, f0));
    for d in 0..3 {
        let mut p = start;
        p[d] += spread;
        let fp = eval(&p, evals);
        simplex.points.push((p, fp));
    }

    for _ in 0..max_iter {
        simplex
            .points
            .sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        let best = simplex.points[0].1;
        let worst = simplex.points[3].1;
        // converged when the simplex is flat and small
        let mut size = 0.0f64;
        for p in &simplex.points[1..] {
            for d in 0..3 {
                size = size.max((p.0[d] - simplex.points[0].0[d]).abs());
            }
        }
        if (worst - best).abs() <= tol * (1.0 + best.abs()) && size <= math::sqrt(tol) * 1e-2 {
            break;
        }

        let mut centroid = [0.0; 3];
        for p in &simplex.points[..3] {
            for d in 0..3 {
                centroid[d] += p.0[d] / 3.0;
            }
        }
        let xw = simplex.points[3].0;
        let mut reflected = [0.0; 3];
        for d in 0..3 {
            reflected[d] = centroid[d] + NM_ALPHA * (centroid[d] - xw[d]);
        }
        let fr = eval(&reflected, evals);

        if fr < simplex.points[0].1 {
            let mut expanded = [0.0; 3];
            for d in 0..3 {
                expanded[d] = centroid[d] + NM_GAMMA * (reflected[d] - centroid[d]);
            }
            let fe = eval(&expanded, evals);
            simplex.points[3] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex.points[2].1 {
            simplex.points[3] = (reflected, fr);
        } else {
            // contract toward the better of worst/reflected
            let (xc_base, fc_base) = if fr < simplex.points[3].1 {
                (reflected, fr)
            } else {
                (xw, simplex.points[3].1)
            };
            let mut contracted = [0.0; 3];
            for d in 0..3 {
                contracted[d] = centroid[d] + NM_RHO * (xc_base[d] - centroid[d]);
            }
            let fc = eval(&contracted, evals);
            if fc < fc_base {
                simplex.points[3] = (contracted, fc);
            } else {
                // shrink toward the best point
                let xb = simplex.points[0].0;
                for k in 1..4 {
                    let mut p = [0.0; 3];
                    for d in 0..3 {
                        p[d] = xb[d] + NM_SIGMA * (simplex.points[k].0[d] - xb[d]);
                    }
                    let fp = eval(&p, evals);
                    simplex.points[k] = (p, fp);
                }
            }
        }
    }
    simplex
        .points
        .sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    simplex.points[0]
}

/// Fits (v_mi, E, C_S) to the dataset starting from `initial`
/// (model units: m³/kg, energy units, F/m³), within `bounds`.
pub fn fit_equilibrium(
    base: &CellParams,
    data: &EquilibriumDataset,
    initial: [f64; 3],
    bounds: &FitBounds,
) -> Result<FitResult> {
    if !bounds.contains(&initial) {
        return Err(Error::Config(alloc::string::String::from(
            "initial fit point must lie inside the bounds",
        )));
    }
    let barray = bounds.as_array();
    let to_norm = |x: &[f64; 3]| {
        let mut y = [0.0; 3];
        for d in 0..3 {
            y[d] = (x[d] - barray[d].0) / (barray[d].1 - barray[d].0);
        }
        y
    };
    let from_norm = |y: &[f64; 3]| {
        let mut x = [0.0; 3];
        for d in 0..3 {
            x[d] = barray[d].0 + y[d] * (barray[d].1 - barray[d].0);
        }
        x
    };

    let mut evals: u64 = 0;
    let objective = |y: &[f64; 3]| fit_objective(base, data, &from_norm(y), bounds);
    let f_init = fit_objective(base, data, &initial, bounds);
    evals += 1;

    // simplex search with two restarts around the running best
    let mut best_y = to_norm(&initial);
    let mut best_f = f_init;
    for (round, spread) in [0.08, 0.02, 0.005].iter().enumerate() {
        let (y, fy) = nelder_mead(objective, best_y, *spread, 400, 1e-14, &mut evals);
        if fy <= best_f {
            best_y = y;
            best_f = fy;
        }
        let _ = round;
    }

    let x = from_norm(&best_y);
    let converged = best_f < 1e12 && best_f <= f_init;
    let fitted = base.with_fit_parameters(x[0], x[1], x[2])?;
    let (scale_q, scale_s) = data.scales();
    let mut per_row = Vec::with_capacity(data.rows.len());
    for row in &data.rows {
        let eq = solve_equilibrium(&fitted, row.v_cell, row.c_feed)?;
        per_row.push((
            (eq.charge_coulombs - row.charge_coulombs) / scale_q,
            (eq.eq_sac_mg_per_g - row.eq_sac_mg_per_g) / scale_s,
        ));
    }
    Ok(FitResult {
        micropore_volume: x[0],
        attraction_energy: x[1],
        stern_capacitance: x[2],
        residual_norm: math::sqrt(best_f.max(0.0)),
        per_row_residuals: per_row,
        converged,
        evaluations: evals,
    })
}

/// Builds a synthetic dataset from model equilibria at the given
/// parameters (unit weights).
pub fn synthetic_dataset(
    params: &CellParams,
    voltages: &[f64],
    feeds: &[f64],
) -> Result<EquilibriumDataset> {
    let mut rows = Vec::with_capacity(voltages.len() * feeds.len());
    for &c in feeds {
        for &v in voltages {
            let eq = solve_equilibrium(params, v, c)?;
            rows.push(EquilibriumRow {
                v_cell: v,
                c_feed: c,
                charge_coulombs: eq.charge_coulombs,
                eq_sac_mg_per_g: eq.eq_sac_mg_per_g,
                weight: 1.0,
            });
        }
    }
    EquilibriumDataset::new(rows)
}
