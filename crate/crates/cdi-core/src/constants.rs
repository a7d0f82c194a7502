//! Physical constants and the NaCl transport baseline.

/// Faraday constant (C/mol).
pub const FARADAY: f64 = 96_485.332_12;

/// Molar gas constant (J/(mol·K)).
pub const GAS_CONSTANT: f64 = 8.314_462_618;

/// Molar mass of NaCl (g/mol).
pub const M_NACL: f64 = 58.44;

/// Free-solution NaCl salt diffusivity, (D_Na + D_Cl)/2 (m²/s).
pub const D_FREE_NACL: f64 = 1.68e-9;

/// Temperature-dependent constants bundle used throughout the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Faraday constant (C/mol).
    pub faraday: f64,
    /// Gas constant (J/(mol·K)).
    pub gas_constant: f64,
    /// Absolute temperature (K).
    pub temperature: f64,
    /// Free-solution salt diffusivity (m²/s).
    pub free_diffusivity: f64,
}

impl PhysicalConstants {
    /// NaCl constants at the given temperature.
    pub fn at_temperature(temperature: f64) -> Self {
        Self {
            faraday: FARADAY,
            gas_constant: GAS_CONSTANT,
            temperature,
            free_diffusivity: D_FREE_NACL,
        }
    }

    /// Thermal voltage RT/F (V). Dimensionless potentials in this crate
    /// are dimensional voltages divided by this value.
    #[inline]
    pub fn thermal_voltage(&self) -> f64 {
        self.gas_constant * self.temperature / self.faraday
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::at_temperature(298.15)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_voltage_is_rt_over_f() {
        let k = PhysicalConstants::default();
        assert_eq!(
            k.thermal_voltage(),
            k.gas_constant * k.temperature / k.faraday
        );
        // ~25.7 mV at room temperature
        assert!((k.thermal_voltage() - 0.0257).abs() < 4e-4);
    }
}
