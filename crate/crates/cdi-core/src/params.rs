//! Cell geometry, porosities, transport and double-layer parameters.
//!
//! Defaults reproduce the reference experimental cell: 500 μm activated
//! carbon electrodes around a 260 μm spacer, fed at 66.4 μm/s superficial
//! velocity, with fitted electrode parameters v_mi = 0.55 mL/g,
//! E = 700 (thermal-energy units · mol/m³) and C_S = 145 F/mL.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::math;

/// Parameters of the modified-Donnan double layer in electrode micropores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EDLParams {
    /// Ion attraction energy E (thermal-energy units × mol/m³). The
    /// attraction term is μ_att = E / c_mi,ions.
    pub attraction_energy: f64,
    /// Volumetric Stern layer capacitance (F/m³). `f64::INFINITY`
    /// disables the Stern drop.
    pub stern_capacitance: f64,
    /// Micropore porosity p_mi = ρ_elec · v_mi (dimensionless).
    pub micropore_porosity: f64,
    /// Specific micropore volume v_mi (m³/kg).
    pub micropore_volume: f64,
    /// Electrode mass density ρ_elec (kg/m³).
    pub electrode_density: f64,
}

impl EDLParams {
    /// Builds the EDL parameter set; the micropore porosity is derived as
    /// ρ_elec · v_mi so the porosity relation holds exactly.
    pub fn new(
        attraction_energy: f64,
        stern_capacitance: f64,
        micropore_volume: f64,
        electrode_density: f64,
    ) -> Result<Self> {
        let p = Self {
            attraction_energy,
            stern_capacitance,
            micropore_porosity: electrode_density * micropore_volume,
            micropore_volume,
            electrode_density,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.attraction_energy >= 0.0) {
            return Err(Error::Domain("attraction energy must be >= 0"));
        }
        if !(self.stern_capacitance > 0.0) {
            return Err(Error::Domain("Stern capacitance must be > 0"));
        }
        if !(self.micropore_porosity > 0.0 && self.micropore_porosity < 1.0) {
            return Err(Error::Domain("micropore porosity must lie in (0, 1)"));
        }
        let derived = self.electrode_density * self.micropore_volume;
        if (self.micropore_porosity - derived).abs() > 1e-12 * derived.max(1.0) {
            return Err(Error::Domain("micropore porosity must equal rho_elec * v_mi"));
        }
        Ok(())
    }
}

impl Default for EDLParams {
    /// Fitted electrode parameters of the reference cell.
    fn default() -> Self {
        Self::new(700.0, 1.45e8, 5.5e-4, 250.0).expect("default EDL parameters are valid")
    }
}

/// Geometry, porosities and transport parameters of the full
/// anode–spacer–cathode stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Electrode thickness l_e (m), identical for anode and cathode.
    pub electrode_thickness: f64,
    /// Spacer thickness l_sp (m).
    pub spacer_thickness: f64,
    /// Flow cross-section area (m²).
    pub area: f64,
    /// Electrode macropore porosity p_mA.
    pub macro_porosity: f64,
    /// Carbon skeleton volume fraction p_sk.
    pub skeleton_porosity: f64,
    /// Spacer porosity p_sp.
    pub spacer_porosity: f64,
    /// Superficial fluid velocity (m/s), uniform across all regions.
    pub superficial_velocity: f64,
    /// Micropore double-layer parameters.
    pub edl: EDLParams,
    /// Physical constants bundle.
    pub constants: PhysicalConstants,
}

impl CellParams {
    /// Replaces the three fitted electrode parameters, re-deriving the
    /// porosity split (p_mi = ρ_elec·v_mi, p_mA = 1 − p_mi − p_sk).
    pub fn with_fit_parameters(
        &self,
        micropore_volume: f64,
        attraction_energy: f64,
        stern_capacitance: f64,
    ) -> Result<Self> {
        let edl = EDLParams::new(
            attraction_energy,
            stern_capacitance,
            micropore_volume,
            self.edl.electrode_density,
        )?;
        let mut p = *self;
        p.edl = edl;
        p.macro_porosity = 1.0 - edl.micropore_porosity - p.skeleton_porosity;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.edl.validate()?;
        if !(self.electrode_thickness > 0.0 && self.spacer_thickness > 0.0) {
            return Err(Error::Domain("layer thicknesses must be > 0"));
        }
        if !(self.area > 0.0) {
            return Err(Error::Domain("flow area must be > 0"));
        }
        if !(self.superficial_velocity > 0.0) {
            return Err(Error::Domain("superficial velocity must be > 0"));
        }
        if !(self.macro_porosity > 0.0 && self.macro_porosity < 1.0) {
            return Err(Error::Domain("macropore porosity must lie in (0, 1)"));
        }
        if !(self.spacer_porosity > 0.0 && self.spacer_porosity <= 1.0) {
            return Err(Error::Domain("spacer porosity must lie in (0, 1]"));
        }
        let sum = self.macro_porosity + self.edl.micropore_porosity + self.skeleton_porosity;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("electrode porosities must sum to 1"));
        }
        Ok(())
    }

    /// Bruggeman tortuosity τ = p^{-1/2} of the electrode macropores.
    #[inline]
    pub fn tortuosity_macro(&self) -> f64 {
        1.0 / math::sqrt(self.macro_porosity)
    }

    /// Bruggeman tortuosity of the spacer.
    #[inline]
    pub fn tortuosity_spacer(&self) -> f64 {
        1.0 / math::sqrt(self.spacer_porosity)
    }

    /// Effective electrode diffusivity D_mA = D_∞ · p_mA / τ_mA (m²/s).
    #[inline]
    pub fn diffusivity_macro(&self) -> f64 {
        self.constants.free_diffusivity * self.macro_porosity / self.tortuosity_macro()
    }

    /// Effective spacer diffusivity D_sp = D_∞ · p_sp / τ_sp (m²/s).
    #[inline]
    pub fn diffusivity_spacer(&self) -> f64 {
        self.constants.free_diffusivity * self.spacer_porosity / self.tortuosity_spacer()
    }

    /// Electrode Peclet number Pe = v·l_e/D_mA, the ratio of advective to
    /// diffusive transport rates across one electrode.
    #[inline]
    pub fn peclet(&self) -> f64 {
        self.superficial_velocity * self.electrode_thickness / self.diffusivity_macro()
    }

    /// Volumetric flow rate v·A (m³/s).
    #[inline]
    pub fn flow_rate(&self) -> f64 {
        self.superficial_velocity * self.area
    }

    /// Total dry electrode mass of both electrodes, 2·ρ_elec·l_e·A (kg).
    #[inline]
    pub fn electrode_mass(&self) -> f64 {
        2.0 * self.edl.electrode_density * self.electrode_thickness * self.area
    }
}

impl Default for CellParams {
    /// Reference cell parameter set. The default area is chosen so that
    /// the default superficial velocity corresponds to a 1 mL/min feed.
    fn default() -> Self {
        let edl = EDLParams::default();
        let skeleton_porosity = 250.0 / 1900.0; // rho_elec / rho_skeleton
        Self {
            electrode_thickness: 500e-6,
            spacer_thickness: 260e-6,
            area: (1e-6 / 60.0) / 66.4e-6,
            macro_porosity: 1.0 - edl.micropore_porosity - skeleton_porosity,
            skeleton_porosity,
            spacer_porosity: 0.85,
            superficial_velocity: 66.4e-6,
            edl,
            constants: PhysicalConstants::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_porosities_close_table_values() {
        let p = CellParams::default();
        p.validate().unwrap();
        assert!((p.edl.micropore_porosity - 0.1375).abs() < 1e-12);
        assert!((p.skeleton_porosity - 0.1316).abs() < 1e-4);
        assert!((p.macro_porosity - 0.7309).abs() < 1e-4);
        assert_eq!(
            p.macro_porosity + p.edl.micropore_porosity + p.skeleton_porosity,
            1.0
        );
    }

    #[test]
    fn bruggeman_diffusivities() {
        let p = CellParams::default();
        let d_ma = 1.68e-9 * p.macro_porosity * math::sqrt(p.macro_porosity);
        assert!((p.diffusivity_macro() - d_ma).abs() < 1e-24);
        assert!(p.diffusivity_spacer() > p.diffusivity_macro());
    }

    #[test]
    fn peclet_scales_linearly_with_thickness() {
        let p = CellParams::default();
        let mut doubled = p;
        doubled.electrode_thickness *= 2.0;
        assert!((doubled.peclet() - 2.0 * p.peclet()).abs() < 1e-12 * p.peclet());
        let mut still = p;
        still.superficial_velocity = f64::MIN_POSITIVE;
        assert!(still.peclet() < 1e-100);
    }

    #[test]
    fn fit_parameters_rebuild_porosity_split() {
        let p = CellParams::default();
        let q = p.with_fit_parameters(4.0e-4, 900.0, 1.0e8).unwrap();
        assert!((q.edl.micropore_porosity - 0.1).abs() < 1e-15);
        assert_eq!(
            q.macro_porosity + q.edl.micropore_porosity + q.skeleton_porosity,
            1.0
        );
        assert_eq!(q.skeleton_porosity, p.skeleton_porosity);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(EDLParams::new(-1.0, 1.0e8, 5.5e-4, 250.0).is_err());
        assert!(EDLParams::new(700.0, 0.0, 5.5e-4, 250.0).is_err());
        assert!(EDLParams::new(700.0, 1.0e8, 5.0e-3, 250.0).is_err()); // p_mi > 1
        let mut p = CellParams::default();
        p.electrode_thickness = -1.0;
        assert!(p.validate().is_err());
    }
}
