//! Finitely generated ℤ-modules `Z^rank ⊕ torsion` with a norm on the free part.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::rational::QMatrix;
use crate::ring::RingRegistry;

/// Invariant factors `d_1 | d_2 | ...`, each at least 2.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TorsionData {
    invariant_factors: Vec<u64>,
}

impl TorsionData {
    pub fn new(invariant_factors: Vec<u64>) -> Result<Self> {
        if let Some(d) = invariant_factors.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidInput(format!("invariant factor {d} is below 2")));
        }
        if let Some(w) = invariant_factors.windows(2).find(|w| w[1] % w[0] != 0) {
            return Err(Error::InvalidInput(format!("invariant factor {} does not divide {}", w[0], w[1])));
        }
        Ok(TorsionData { invariant_factors })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    /// `log #M_tor`.
    pub fn log_order(&self) -> f64 {
        self.invariant_factors.iter().map(|&d| (d as f64).ln()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormedZModule {
    pub rank: usize,
    pub torsion: TorsionData,
    pub norm: NormSpec,
}

impl NormedZModule {
    pub fn new(rank: usize, torsion: TorsionData, norm: NormSpec) -> Result<Self> {
        if norm.dim() != rank {
            return Err(Error::DimensionMismatch { expected: rank, got: norm.dim() });
        }
        norm.validate()?;
        Ok(NormedZModule { rank, torsion, norm })
    }

    pub fn free(norm: NormSpec) -> Result<Self> {
        Self::new(norm.dim(), TorsionData::none(), norm)
    }

    pub fn zero() -> Self {
        NormedZModule { rank: 0, torsion: TorsionData::none(), norm: NormSpec::Ellipsoid { gram: QMatrix::zeros(0, 0) } }
    }

    /// `(M^∨, ‖·‖^∨)`; the dual of a finite group is zero, so torsion is dropped.
    pub fn dual(&self) -> Result<Self> {
        Ok(NormedZModule { rank: self.rank, torsion: TorsionData::none(), norm: self.norm.dual()? })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rank": self.rank,
            "torsion": self.torsion.invariant_factors(),
            "norm": self.norm.to_json(),
        })
    }

    pub fn from_json(v: &Value, rings: &mut RingRegistry) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("module must be an object".into()))?;
        let rank = obj
            .get("rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("module needs a nonnegative integer \"rank\"".into()))?;
        let torsion = match obj.get("torsion") {
            None | Some(Value::Null) => Vec::new(),
            Some(t) => serde_json::from_value::<Vec<u64>>(t.clone())?,
        };
        let norm = obj.get("norm").ok_or_else(|| Error::Parse("module needs \"norm\"".into()))?;
        let norm = NormSpec::from_json(norm, rings)?;
        Self::new(rank as usize, TorsionData::new(torsion)?, norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torsion_chain() {
        assert!(TorsionData::new(vec![2, 4, 12]).is_ok());
        assert!(TorsionData::new(vec![2, 3]).is_err());
        assert!(TorsionData::new(vec![1]).is_err());
        assert!((TorsionData::new(vec![5]).unwrap().log_order() - 5f64.ln()).abs() < 1e-15);
        assert_eq!(TorsionData::none().log_order(), 0.0);
    }

    #[test]
    fn module_json() {
        let mut reg = RingRegistry::new();
        let v: Value = serde_json::from_str(r#"{"rank":1,"torsion":[5],"norm":{"kind":"ellipsoid","gram":[[1]]}}"#).unwrap();
        let m = NormedZModule::from_json(&v, &mut reg).unwrap();
        assert_eq!(m.rank, 1);
        assert_eq!(NormedZModule::from_json(&m.to_json(), &mut reg).unwrap(), m);
        let v: Value = serde_json::from_str(r#"{"rank":2,"norm":{"kind":"ellipsoid","gram":[[1]]}}"#).unwrap();
        assert!(NormedZModule::from_json(&v, &mut reg).is_err());
        let z: Value = serde_json::from_str(r#"{"rank":0,"norm":{"kind":"ellipsoid","gram":[]}}"#).unwrap();
        assert_eq!(NormedZModule::from_json(&z, &mut reg).unwrap().rank, 0);
    }
}
