//! Finite-volume grid over the anode–spacer–cathode stack.
//!
//! Cell-centered, uniform within each region. Region boundaries always
//! coincide with faces, at x = l_e and x = l_e + l_sp.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::CellParams;

/// Region tag of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Anode,
    Spacer,
    Cathode,
}

impl Region {
    /// True in either electrode.
    #[inline]
    pub fn is_electrode(self) -> bool {
        matches!(self, Region::Anode | Region::Cathode)
    }
}

/// Discretization of the 1D cell domain.
#[derive(Debug, Clone)]
pub struct Grid {
    n_electrode: usize,
    n_spacer: usize,
    faces: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
    regions: Vec<Region>,
    /// Per-cell index into the σ vector; usize::MAX in the spacer.
    sigma_slots: Vec<usize>,
}

/// Builds a grid with `n_e` cells per electrode and `n_sp` spacer cells.
pub fn build_grid(params: &CellParams, n_e: usize, n_sp: usize) -> Result<Grid> {
    if n_e < 2 || n_sp < 2 {
        return Err(Error::Config(alloc::format!(
            "grid needs at least 2 cells per region (got n_e = {n_e}, n_sp = {n_sp})"
        )));
    }
    params.validate()?;
    let l_e = params.electrode_thickness;
    let l_sp = params.spacer_thickness;
    let n_cells = 2 * n_e + n_sp;

    let mut faces = Vec::with_capacity(n_cells + 1);
    for j in 0..=n_e {
        faces.push(l_e * j as f64 / n_e as f64);
    }
    for j in 1..=n_sp {
        faces.push(l_e + l_sp * j as f64 / n_sp as f64);
    }
    for j in 1..=n_e {
        faces.push(l_e + l_sp + l_e * j as f64 / n_e as f64);
    }

    let mut centers = Vec::with_capacity(n_cells);
    let mut widths = Vec::with_capacity(n_cells);
    let mut regions = Vec::with_capacity(n_cells);
    let mut sigma_slots = Vec::with_capacity(n_cells);
    let mut slot = 0usize;
    for i in 0..n_cells {
        centers.push(0.5 * (faces[i] + faces[i + 1]));
        widths.push(faces[i + 1] - faces[i]);
        let region = if i < n_e {
            Region::Anode
        } else if i < n_e + n_sp {
            Region::Spacer
        } else {
            Region::Cathode
        };
        regions.push(region);
        if region.is_electrode() {
            sigma_slots.push(slot);
            slot += 1;
        } else {
            sigma_slots.push(usize::MAX);
        }
    }

    Ok(Grid {
        n_electrode: n_e,
        n_spacer: n_sp,
        faces,
        centers,
        widths,
        regions,
        sigma_slots,
    })
}

impl Grid {
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.regions.len()
    }

    /// Number of cells per electrode.
    #[inline]
    pub fn cells_per_electrode(&self) -> usize {
        self.n_electrode
    }

    #[inline]
    pub fn cells_in_spacer(&self) -> usize {
        self.n_spacer
    }

    /// Total number of electrode cells (anode + cathode).
    #[inline]
    pub fn n_electrode_cells(&self) -> usize {
        2 * self.n_electrode
    }

    /// Face positions (m), `n_cells + 1` entries.
    #[inline]
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Cell center positions (m).
    #[inline]
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    #[inline]
    pub fn width(&self, cell: usize) -> f64 {
        self.widths[cell]
    }

    #[inline]
    pub fn region(&self, cell: usize) -> Region {
        self.regions[cell]
    }

    #[inline]
    pub fn is_electrode(&self, cell: usize) -> bool {
        self.regions[cell].is_electrode()
    }

    /// Index of this cell's entry in the σ vector (electrode cells only).
    #[inline]
    pub fn sigma_slot(&self, cell: usize) -> Option<usize> {
        if self.is_electrode(cell) {
            Some(self.sigma_slots[cell])
        } else {
            None
        }
    }

    #[inline]
    pub fn anode_cells(&self) -> core::ops::Range<usize> {
        0..self.n_electrode
    }

    #[inline]
    pub fn spacer_cells(&self) -> core::ops::Range<usize> {
        self.n_electrode..self.n_electrode + self.n_spacer
    }

    #[inline]
    pub fn cathode_cells(&self) -> core::ops::Range<usize> {
        self.n_electrode + self.n_spacer..self.n_cells()
    }

    #[inline]
    pub fn total_length(&self) -> f64 {
        *self.faces.last().expect("grid has faces")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_resolution_grid() {
        let p = CellParams::default();
        let g = build_grid(&p, 40, 10).unwrap();
        assert_eq!(g.n_cells(), 90);
        assert!((g.total_length() - 1.26e-3).abs() < 1e-18);
        // region boundaries sit exactly on faces
        assert_eq!(g.faces()[40], 500e-6);
        assert_eq!(g.faces()[50], 760e-6);
        assert_eq!(g.n_electrode_cells(), 80);
    }

    #[test]
    fn minimal_grid() {
        let p = CellParams::default();
        let g = build_grid(&p, 2, 2).unwrap();
        assert_eq!(g.n_cells(), 6);
        assert_eq!(g.faces()[2], p.electrode_thickness);
        assert_eq!(g.faces()[4], p.electrode_thickness + p.spacer_thickness);
        assert_eq!(g.region(0), Region::Anode);
        assert_eq!(g.region(2), Region::Spacer);
        assert_eq!(g.region(5), Region::Cathode);
        assert_eq!(g.sigma_slot(0), Some(0));
        assert_eq!(g.sigma_slot(2), None);
        assert_eq!(g.sigma_slot(4), Some(2));
    }

    #[test]
    fn equal_region_sizes_give_uniform_widths() {
        let mut p = CellParams::default();
        p.spacer_thickness = p.electrode_thickness;
        let n = 5;
        let g = build_grid(&p, n, n).unwrap();
        let w0 = p.electrode_thickness / n as f64;
        for i in 0..g.n_cells() {
            assert!((g.width(i) - w0).abs() < 1e-12 * w0);
        }
        // faces strictly monotone
        for w in g.faces().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn rejects_too_few_cells() {
        let p = CellParams::default();
        assert!(build_grid(&p, 1, 10).is_err());
        assert!(build_grid(&p, 10, 1).is_err());
    }
}
