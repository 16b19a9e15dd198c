//! Unit systems. Everything runs with ħ = 1.

use serde::{Deserialize, Serialize};

/// ħc in MeV·fm.
pub const HBAR_C_MEV_FM: f64 = 197.327;
/// Average nucleon rest energy in MeV.
pub const NUCLEON_MASS_MEV: f64 = 938.918;
/// Hydrogen mass in electron masses.
pub const HYDROGEN_MASS_AU: f64 = 1836.15;
/// Hartree in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Ångström in bohr.
pub const ANGSTROM_BOHR: f64 = 1.0 / 0.529_177_210_903;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub energy: String,
    pub length: String,
    pub time: String,
    pub mass_note: String,
}

impl UnitSystem {
    /// MeV and fm; time in ħ/MeV. Masses enter as μc²/(ħc)² in MeV⁻¹·fm⁻²
    /// so that the kinetic energy reads k²/(2μ).
    pub fn nuclear() -> Self {
        Self {
            energy: "MeV".into(),
            length: "fm".into(),
            time: "hbar/MeV".into(),
            mass_note: "mass = m c^2 / (hbar c)^2 [1/(MeV fm^2)]".into(),
        }
    }

    pub fn atomic() -> Self {
        Self {
            energy: "hartree".into(),
            length: "bohr".into(),
            time: "hbar/hartree".into(),
            mass_note: "mass in electron masses".into(),
        }
    }
}

/// Two-nucleon reduced mass m_N/2 in MeV⁻¹·fm⁻².
pub fn nucleon_reduced_mass() -> f64 {
    0.5 * NUCLEON_MASS_MEV / (HBAR_C_MEV_FM * HBAR_C_MEV_FM)
}
