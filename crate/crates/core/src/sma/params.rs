//! Material parameters and their identifiers.

use serde::{Deserialize, Serialize};

use super::SmaError;

/// Full parameter set of the transformation model, in SI units.
///
/// The first fourteen fields are the screenable material properties; `t0`
/// and `anchor_stress` are fixed modelling constants. `t0` only enters the
/// thermal-expansion and specific-heat contributions, which are disabled in
/// this reduced uniaxial form, and `anchor_stress` is the stress at which
/// the stress-temperature slopes `c_m` / `c_a` are imposed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParameters {
    /// Austenite Young's modulus, Pa.
    pub e_a: f64,
    /// Martensite Young's modulus, Pa.
    pub e_m: f64,
    /// Martensite start temperature, K.
    pub m_s: f64,
    /// Martensite finish temperature, K.
    pub m_f: f64,
    /// Austenite start temperature, K.
    pub a_s: f64,
    /// Austenite finish temperature, K.
    pub a_f: f64,
    /// Austenite stress influence coefficient, Pa/K.
    pub c_a: f64,
    /// Martensite stress influence coefficient, Pa/K.
    pub c_m: f64,
    /// Saturated maximum transformation strain.
    pub h_sat: f64,
    /// Exponential saturation rate of the transformation strain, 1/Pa.
    pub k: f64,
    /// Smooth-hardening exponents, each in (0, 1].
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    /// Reference temperature, K (inert in this reduced form).
    pub t0: f64,
    /// Calibration stress for the slope conditions, Pa.
    pub anchor_stress: f64,
}

impl MaterialParameters {
    /// Compliance difference between the phases, 1/Pa.
    #[inline]
    pub fn delta_s(&self) -> f64 {
        1.0 / self.e_m - 1.0 / self.e_a
    }

    /// Cheap feasibility check used inside sampling loops.
    #[inline]
    pub fn is_feasible(&self) -> bool {
        self.e_a > 0.0
            && self.e_m > 0.0
            && self.c_a > 0.0
            && self.c_m > 0.0
            && self.h_sat > 0.0
            && self.h_sat < 0.2
            && self.k > 0.0
            && self.t0 > 0.0
            && self.anchor_stress > 0.0
            && self.m_f > 0.0
            && self.m_f < self.m_s
            && self.m_s < self.a_s
            && self.a_s < self.a_f
            && Self::valid_exponent(self.n1)
            && Self::valid_exponent(self.n2)
            && Self::valid_exponent(self.n3)
            && Self::valid_exponent(self.n4)
    }

    #[inline]
    fn valid_exponent(n: f64) -> bool {
        n > 0.0 && n <= 1.0
    }

    /// Feasibility check reporting the first violated constraint.
    pub fn validate(&self) -> Result<(), SmaError> {
        let fail = |detail: String| Err(SmaError::InfeasibleParameters { detail });
        for (name, v) in [
            ("E_A", self.e_a),
            ("E_M", self.e_m),
            ("C_A", self.c_a),
            ("C_M", self.c_m),
            ("H_sat", self.h_sat),
            ("k", self.k),
            ("T0", self.t0),
            ("anchor stress", self.anchor_stress),
            ("M_f", self.m_f),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if self.h_sat >= 0.2 {
            return fail(format!("H_sat must be below 0.2, got {}", self.h_sat));
        }
        if !(self.m_f < self.m_s && self.m_s < self.a_s && self.a_s < self.a_f) {
            return fail(format!(
                "transformation temperatures must satisfy M_f < M_s < A_s < A_f, got \
                 M_f = {}, M_s = {}, A_s = {}, A_f = {}",
                self.m_f, self.m_s, self.a_s, self.a_f
            ));
        }
        for (name, n) in [("n1", self.n1), ("n2", self.n2), ("n3", self.n3), ("n4", self.n4)] {
            if !Self::valid_exponent(n) {
                return fail(format!("{name} must lie in (0, 1], got {n}"));
            }
        }
        Ok(())
    }
}

/// Identifier for each screenable material property, the shared vocabulary
/// between factor screening, calibration, and propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamId {
    EA,
    EM,
    Ms,
    Mf,
    As,
    Af,
    CA,
    CM,
    HSat,
    K,
    N1,
    N2,
    N3,
    N4,
}

impl ParamId {
    pub const ALL: [ParamId; 14] = [
        ParamId::EA,
        ParamId::EM,
        ParamId::Ms,
        ParamId::Mf,
        ParamId::As,
        ParamId::Af,
        ParamId::CA,
        ParamId::CM,
        ParamId::HSat,
        ParamId::K,
        ParamId::N1,
        ParamId::N2,
        ParamId::N3,
        ParamId::N4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::EA => "E_A",
            ParamId::EM => "E_M",
            ParamId::Ms => "M_s",
            ParamId::Mf => "M_f",
            ParamId::As => "A_s",
            ParamId::Af => "A_f",
            ParamId::CA => "C_A",
            ParamId::CM => "C_M",
            ParamId::HSat => "H_sat",
            ParamId::K => "k",
            ParamId::N1 => "n1",
            ParamId::N2 => "n2",
            ParamId::N3 => "n3",
            ParamId::N4 => "n4",
        }
    }

    pub fn parse(name: &str) -> Option<ParamId> {
        ParamId::ALL.into_iter().find(|id| id.name() == name)
    }

    pub fn get(self, p: &MaterialParameters) -> f64 {
        match self {
            ParamId::EA => p.e_a,
            ParamId::EM => p.e_m,
            ParamId::Ms => p.m_s,
            ParamId::Mf => p.m_f,
            ParamId::As => p.a_s,
            ParamId::Af => p.a_f,
            ParamId::CA => p.c_a,
            ParamId::CM => p.c_m,
            ParamId::HSat => p.h_sat,
            ParamId::K => p.k,
            ParamId::N1 => p.n1,
            ParamId::N2 => p.n2,
            ParamId::N3 => p.n3,
            ParamId::N4 => p.n4,
        }
    }

    pub fn set(self, p: &mut MaterialParameters, value: f64) {
        match self {
            ParamId::EA => p.e_a = value,
            ParamId::EM => p.e_m = value,
            ParamId::Ms => p.m_s = value,
            ParamId::Mf => p.m_f = value,
            ParamId::As => p.a_s = value,
            ParamId::Af => p.a_f = value,
            ParamId::CA => p.c_a = value,
            ParamId::CM => p.c_m = value,
            ParamId::HSat => p.h_sat = value,
            ParamId::K => p.k = value,
            ParamId::N1 => p.n1 = value,
            ParamId::N2 => p.n2 = value,
            ParamId::N3 => p.n3 = value,
            ParamId::N4 => p.n4 = value,
        }
    }
}

impl std::fmt::Display for ParamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
