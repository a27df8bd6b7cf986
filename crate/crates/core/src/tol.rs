//! Numerical tolerances shared by validation and the SDP layers.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Hermiticity of states and effects.
    pub herm: f64,
    /// Eigenvalue floor for positive semidefiniteness.
    pub psd: f64,
    /// Trace preservation, Kraus completeness and POVM normalization.
    pub tp: f64,
    /// Agreement between two representations of the same map.
    pub rep: f64,
    /// SDP feasibility: equality residuals and slack margins.
    pub feas: f64,
    /// Parent-POVM certificate reconstruction.
    pub cert: f64,
    /// Allowed slack between lower and upper robustness bounds.
    pub gap: f64,
    /// Trace of a filtered state below which the branch is treated as empty.
    pub zero_branch: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-8,
            psd: 1e-8,
            tp: 1e-7,
            rep: 1e-8,
            feas: 1e-7,
            cert: 1e-6,
            gap: 1e-6,
            zero_branch: 1e-12,
        }
    }
}

impl Tolerances {
    /// Applies `key=value` overrides such as `psd=1e-9`.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        let slot = match key {
            "herm" => &mut self.herm,
            "psd" => &mut self.psd,
            "tp" => &mut self.tp,
            "rep" => &mut self.rep,
            "feas" => &mut self.feas,
            "cert" => &mut self.cert,
            "gap" => &mut self.gap,
            "zero_branch" => &mut self.zero_branch,
            other => return Err(format!("unknown tolerance `{other}`")),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance `{key}` must be positive, got {value}"));
        }
        *slot = value;
        Ok(())
    }
}
