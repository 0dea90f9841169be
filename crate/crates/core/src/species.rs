//! Ion species, physical constants and trap optics.
//!
//! Every downstream calculation reads species data through a
//! [`SpeciesRegistry`]. The built-in registry carries the four ions used
//! throughout the crate (Hg II, Ca II, Ba II, Yb II); a species file can add
//! entries or override built-ins.
//!
//! # Species file format
//!
//! A species file is TOML with one `[[species]]` table per ion:
//!
//! ```toml
//! # comment lines start with '#'
//! [[species]]
//! name = "Ca II"       # unique, case-sensitive
//! Z = 1                # degree of ionization, integer >= 1
//! A = 40               # mass number (u), > 0
//! lambda_nm = 729      # qubit transition wavelength in nanometres, > 0
//! tau0_s = 1.14        # excited-state lifetime in seconds, > 0
//! note = "electric quadrupole"   # optional
//! ```
//!
//! Unknown keys are rejected. A name that matches a built-in replaces it in
//! place; new names are appended in file order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds per day used for lifetime conversion.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, PartialEq)]
pub enum SpeciesError {
    #[error("unknown species '{0}'")]
    NotFound(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("species '{name}': {reason}")]
    Invalid { name: String, reason: String },
    #[error("duplicate species '{0}' in document")]
    Duplicate(String),
}

/// A candidate qubit ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSpecies {
    pub name: String,
    /// Degree of ionization.
    #[serde(rename = "Z")]
    pub z: u32,
    /// Atomic mass number in unified atomic mass units.
    #[serde(rename = "A")]
    pub mass_number: f64,
    /// Transition wavelength in nanometres.
    pub lambda_nm: f64,
    /// Natural lifetime of the upper qubit level in seconds.
    #[serde(rename = "tau0_s")]
    pub tau0: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl IonSpecies {
    pub fn new(
        name: impl Into<String>,
        z: u32,
        mass_number: f64,
        lambda_nm: f64,
        tau0: f64,
    ) -> Result<Self, SpeciesError> {
        let species = Self {
            name: name.into(),
            z,
            mass_number,
            lambda_nm,
            tau0,
            note: String::new(),
        };
        species.validate()?;
        Ok(species)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Wavelength in metres.
    pub fn lambda(&self) -> f64 {
        self.lambda_nm * 1e-9
    }

    /// Ion mass in kilograms.
    pub fn mass(&self, constants: &PhysicalConstants) -> f64 {
        self.mass_number * constants.u
    }

    pub fn validate(&self) -> Result<(), SpeciesError> {
        let fail = |reason: &str| {
            Err(SpeciesError::Invalid {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.name.trim().is_empty() {
            return fail("name must not be empty");
        }
        if self.z < 1 {
            return fail("Z must be at least 1");
        }
        if !(self.mass_number > 0.0 && self.mass_number.is_finite()) {
            return fail("A must be positive");
        }
        if !(self.lambda_nm > 0.0 && self.lambda_nm.is_finite()) {
            return fail("lambda must be positive");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return fail("tau0 must be positive");
        }
        Ok(())
    }
}

/// Physical constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub e: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Unified atomic mass unit (kg).
    pub u: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Speed of light (m/s).
    pub c: f64,
}

/// CODATA 2018 values.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    e: 1.602_176_634e-19,
    eps0: 8.854_187_812_8e-12,
    u: 1.660_539_066_60e-27,
    hbar: 1.054_571_817e-34,
    c: 2.997_924_58e8,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

impl PhysicalConstants {
    /// Coulomb constant times e², i.e. e²/(4πε₀), in J·m.
    pub fn coulomb_e2(&self) -> f64 {
        self.e * self.e / (4.0 * std::f64::consts::PI * self.eps0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrapConfigError {
    #[error("f-number must be positive, got {0}")]
    FNumber(f64),
    #[error("safety factor must be at least 1, got {0}")]
    Safety(f64),
    #[error("laser angle must be finite, got {0}")]
    Theta(f64),
}

/// Addressing optics and pulse safety margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    /// f-number F of the focusing system.
    pub f_number: f64,
    /// Safety factor y multiplying the minimum pulse duration.
    pub safety: f64,
    /// Angle between laser and trap axis (radians).
    pub theta: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            f_number: 1.0,
            safety: 1.0,
            theta: 0.0,
        }
    }
}

impl TrapConfig {
    pub fn new(f_number: f64, safety: f64, theta: f64) -> Result<Self, TrapConfigError> {
        if !(f_number > 0.0 && f_number.is_finite()) {
            return Err(TrapConfigError::FNumber(f_number));
        }
        if !(safety >= 1.0 && safety.is_finite()) {
            return Err(TrapConfigError::Safety(safety));
        }
        if !theta.is_finite() {
            return Err(TrapConfigError::Theta(theta));
        }
        Ok(Self {
            f_number,
            safety,
            theta,
        })
    }

    /// True for F = 1, which is hard to achieve with real optics.
    pub fn is_optimistic_f_number(&self) -> bool {
        self.f_number <= 1.0
    }
}

/// An ordered, immutable set of species keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRegistry {
    entries: Vec<IonSpecies>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesDocument {
    #[serde(default)]
    species: Vec<IonSpecies>,
}

fn builtin(name: &str, z: u32, a: f64, lambda_nm: f64, tau0: f64, note: &str) -> IonSpecies {
    IonSpecies {
        name: name.to_string(),
        z,
        mass_number: a,
        lambda_nm,
        tau0,
        note: note.to_string(),
    }
}

/// Hg II, Ca II, Ba II and Yb II.
///
/// Yb II uses A = 171; its lifetime is 1533 days.
pub fn builtin_registry() -> SpeciesRegistry {
    SpeciesRegistry {
        entries: vec![
            builtin("Hg II", 1, 198.0, 281.5, 0.1, "electric quadrupole"),
            builtin("Ca II", 1, 40.0, 729.0, 1.14, "electric quadrupole"),
            builtin("Ba II", 1, 137.0, 1760.0, 47.0, "electric quadrupole"),
            builtin(
                "Yb II",
                1,
                171.0,
                467.0,
                1533.0 * SECONDS_PER_DAY,
                "electric octupole",
            ),
        ],
    }
}

/// Built-ins overlaid with the entries of a species document.
pub fn load_registry(source: &str) -> Result<SpeciesRegistry, SpeciesError> {
    let mut registry = builtin_registry();
    for species in parse_document(source)? {
        registry.insert(species);
    }
    Ok(registry)
}

fn parse_document(source: &str) -> Result<Vec<IonSpecies>, SpeciesError> {
    let doc: SpeciesDocument = toml::from_str(source).map_err(|err| {
        let line = err
            .span()
            .map(|span| line_of(source, span.start))
            .unwrap_or(0);
        SpeciesError::Parse {
            line,
            message: err.message().to_string(),
        }
    })?;
    let mut seen = std::collections::HashSet::new();
    for species in &doc.species {
        if !seen.insert(species.name.as_str()) {
            return Err(SpeciesError::Duplicate(species.name.clone()));
        }
        species.validate()?;
    }
    Ok(doc.species)
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

impl SpeciesRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Case-sensitive lookup.
    pub fn lookup(&self, name: &str) -> Result<&IonSpecies, SpeciesError> {
        self.entries
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| SpeciesError::NotFound(name.to_string()))
    }

    /// Replaces an entry with the same name, otherwise appends.
    pub fn insert(&mut self, species: IonSpecies) {
        match self.entries.iter_mut().find(|s| s.name == species.name) {
            Some(slot) => *slot = species,
            None => self.entries.push(species),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &IonSpecies> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes every entry in species file format.
    pub fn to_document(&self) -> String {
        let doc = SpeciesDocument {
            species: self.entries.clone(),
        };
        toml::to_string(&doc).expect("species registry serializes")
    }

    /// Reads a document as a standalone registry (no built-ins).
    pub fn from_document(source: &str) -> Result<Self, SpeciesError> {
        Ok(Self {
            entries: parse_document(source)?,
        })
    }
}
