//! JSON instance files.
//!
//! ```json
//! {"weights": [1, 1, 1], "f": [3, 1, 2], "g": [1, 1, 1], "p": 2,
//!  "couple": {"norm0": {"type": "weighted_p", "p": 1},
//!             "norm1": {"type": "weighted_p", "p": "inf"}}}
//! ```
//!
//! `couple` defaults to `(ℓ¹(w), ℓ∞)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Couple, Exponent, LatticeVector, MeasureSpace, NormSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupleSpec {
    pub norm0: NormSpec,
    pub norm1: NormSpec,
}

impl Default for CoupleSpec {
    fn default() -> Self {
        Self { norm0: NormSpec::l1(), norm1: NormSpec::linf() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub weights: Vec<f64>,
    pub f: LatticeVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<LatticeVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    #[serde(default)]
    pub couple: CoupleSpec,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.space()?;
        space.check(&self.f)?;
        if let Some(g) = &self.g {
            space.check(g)?;
        }
        self.couple()?;
        Ok(())
    }

    pub fn space(&self) -> Result<MeasureSpace> {
        MeasureSpace::new(self.weights.clone())
    }

    /// The couple on this instance's atoms; `(ℓ¹, ℓ∞)` carries `C = 1`.
    pub fn couple(&self) -> Result<Couple> {
        let space = self.space()?;
        if self.couple == CoupleSpec::default() {
            return Ok(Couple::l1_linf(space));
        }
        Couple::new(space, self.couple.norm0.clone(), self.couple.norm1.clone(), None)
    }

    pub fn g(&self) -> Result<&LatticeVector> {
        self.g.as_ref().ok_or_else(|| Error::Format("instance has no \"g\"".into()))
    }

    /// The convexification exponent, which must be finite.
    pub fn p(&self) -> Result<f64> {
        match self.p {
            Some(Exponent::Finite(p)) => Ok(p),
            Some(Exponent::Infinity) => Err(Error::Format("\"p\" must be finite here".into())),
            None => Err(Error::Format("instance has no \"p\"".into())),
        }
    }
}
