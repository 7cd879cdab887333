//! Norm oracles for weighted, variable and Musielak–Orlicz Lebesgue spaces, Morrey and block
//! spaces, and the constructions closed over them (Köthe dual, concavification, weak type).

pub mod dual;
pub(crate) mod morrey;
pub mod norm;
pub mod phi;

use serde::{Deserialize, Serialize};

use crate::dyadic::{GridFunction, Mesh};
use crate::error::{domain, structural, Result};

pub use dual::{kothe_dual_norm, kothe_dual_norm_with, norming_witness, Certification, DualEstimate, DualOptions, Estimate};
pub use norm::{mixed_norm, norm, norm_estimate, weak_norm, MixedFamily};
pub use phi::{conjugate_exponent, delta2_check, CellPhi, Delta2Report, PhiFunction};

/// Exponents serialize as numbers, with `"inf"` for `∞`.
pub(crate) mod exponent {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(crate) fn to_repr(p: f64) -> Repr {
        if p.is_infinite() && p > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Num(p)
        }
    }

    pub(crate) fn from_repr(r: Repr) -> Result<f64, String> {
        match r {
            Repr::Num(p) => Ok(p),
            Repr::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Text(s) => s.parse::<f64>().map_err(|_| format!("bad exponent {s:?}")),
        }
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*p).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod exponent_vec {
    use super::exponent::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(p: &[f64], s: S) -> Result<S::Ok, S::Error> {
        p.iter().map(|&x| to_repr(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(|r| from_repr(r).map_err(serde::de::Error::custom)).collect()
    }
}

/// A function space over the cells of a mesh.
///
/// Weights follow the multiplier convention `‖f‖_{L^p_w} = ‖f w‖_{L^p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    WeightedLebesgue {
        #[serde(with = "exponent")]
        p: f64,
        w: GridFunction,
    },
    VariableLebesgue {
        #[serde(with = "exponent_vec")]
        p: Vec<f64>,
        w: GridFunction,
    },
    MusielakOrlicz {
        phi: PhiFunction,
    },
    /// `‖f‖ = max_Q |Q|^{1/q−1/p} (∫_Q |f w|^p)^{1/p}`, `1 ≤ p ≤ q ≤ ∞`.
    Morrey {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
        w: GridFunction,
    },
    /// Block space `B^{p,q}_w = (M^{p',q'}_{1/w})'`, `p ≥ q`.
    Block {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
        w: GridFunction,
    },
    /// `‖f‖_{X^r} = ‖|f|^{1/r}‖_X^r`.
    Concavification {
        inner: Box<SpaceSpec>,
        r: f64,
    },
    KotheDual {
        inner: Box<SpaceSpec>,
    },
    WeakType {
        inner: Box<SpaceSpec>,
    },
}

impl SpaceSpec {
    pub fn lebesgue(mesh: Mesh, p: f64) -> SpaceSpec {
        SpaceSpec::WeightedLebesgue { p, w: GridFunction::constant(mesh, 1.0) }
    }

    pub fn weighted(p: f64, w: GridFunction) -> Result<SpaceSpec> {
        let x = SpaceSpec::WeightedLebesgue { p, w };
        x.validate()?;
        Ok(x)
    }

    pub fn morrey(p: f64, q: f64, w: GridFunction) -> Result<SpaceSpec> {
        let x = SpaceSpec::Morrey { p, q, w };
        x.validate()?;
        Ok(x)
    }

    pub fn variable(p: Vec<f64>, w: GridFunction) -> Result<SpaceSpec> {
        let x = SpaceSpec::VariableLebesgue { p, w };
        x.validate()?;
        Ok(x)
    }

    pub fn kothe_dual(self) -> SpaceSpec {
        SpaceSpec::KotheDual { inner: Box::new(self) }
    }

    pub fn weak(self) -> SpaceSpec {
        SpaceSpec::WeakType { inner: Box::new(self) }
    }

    pub fn concavify(self, r: f64) -> SpaceSpec {
        SpaceSpec::Concavification { inner: Box::new(self), r }
    }

    pub fn mesh(&self) -> Mesh {
        match self {
            SpaceSpec::WeightedLebesgue { w, .. }
            | SpaceSpec::VariableLebesgue { w, .. }
            | SpaceSpec::Morrey { w, .. }
            | SpaceSpec::Block { w, .. } => w.mesh(),
            SpaceSpec::MusielakOrlicz { phi } => phi.mesh,
            SpaceSpec::Concavification { inner, .. }
            | SpaceSpec::KotheDual { inner }
            | SpaceSpec::WeakType { inner } => inner.mesh(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weight = |w: &GridFunction| {
            if w.is_positive() {
                Ok(())
            } else {
                domain("weights must be positive on every cell")
            }
        };
        match self {
            SpaceSpec::WeightedLebesgue { p, w } => {
                if !(*p > 0.0) {
                    return domain(format!("Lebesgue exponent must lie in (0, inf], got {p}"));
                }
                weight(w)
            }
            SpaceSpec::VariableLebesgue { p, w } => {
                if p.len() != w.len() {
                    return structural("exponent field and weight live on different meshes");
                }
                if let Some(bad) = p.iter().find(|&&x| !(x >= 1.0)) {
                    return domain(format!("variable exponent must lie in [1, inf], got {bad}"));
                }
                weight(w)
            }
            SpaceSpec::MusielakOrlicz { phi } => {
                for c in &phi.cells {
                    c.validate()?;
                }
                Ok(())
            }
            SpaceSpec::Morrey { p, q, w } => {
                if !(*p >= 1.0 && p <= q) {
                    return domain(format!("Morrey exponents need 1 <= p <= q, got p={p}, q={q}"));
                }
                weight(w)
            }
            SpaceSpec::Block { p, q, w } => {
                if !(*q >= 1.0 && q <= p) {
                    return domain(format!("block exponents need 1 <= q <= p, got p={p}, q={q}"));
                }
                weight(w)
            }
            SpaceSpec::Concavification { inner, r } => {
                if !(*r > 0.0 && r.is_finite()) {
                    return domain(format!("concavification exponent must be positive, got {r}"));
                }
                inner.validate()
            }
            SpaceSpec::KotheDual { inner } | SpaceSpec::WeakType { inner } => inner.validate(),
        }
    }

    /// Quasi-triangle constant `K_X`.
    pub fn quasi_constant(&self) -> f64 {
        match self {
            SpaceSpec::WeightedLebesgue { p, .. } if *p < 1.0 => 2f64.powf(1.0 / p - 1.0),
            SpaceSpec::Concavification { inner, r } => {
                let k = inner.quasi_constant();
                if *r <= 1.0 && k == 1.0 {
                    1.0
                } else {
                    k.powf(*r) * 2f64.powf((r - 1.0).max(0.0))
                }
            }
            SpaceSpec::WeakType { inner } => 2.0 * inner.quasi_constant(),
            _ => 1.0,
        }
    }

    /// `(p, w)` when the space is, after unfolding duals and concavifications, a weighted Lebesgue space.
    pub fn as_weighted_lebesgue(&self) -> Option<(f64, GridFunction)> {
        match self {
            SpaceSpec::WeightedLebesgue { p, w } => Some((*p, w.clone())),
            SpaceSpec::Morrey { p, q, w } if p == q => Some((*p, w.clone())),
            SpaceSpec::KotheDual { inner } => {
                let (p, w) = inner.as_weighted_lebesgue()?;
                if p < 1.0 {
                    return None;
                }
                Some((conjugate_exponent(p), w.map(|v| 1.0 / v)))
            }
            SpaceSpec::Concavification { inner, r } => {
                let (p, w) = inner.as_weighted_lebesgue()?;
                Some((p / r, w.map(|v| v.powf(*r))))
            }
            _ => None,
        }
    }

    /// The Köthe dual, simplified to a closed form where one is known.
    pub fn dual(&self) -> SpaceSpec {
        match self {
            SpaceSpec::WeightedLebesgue { p, w } if *p >= 1.0 => {
                SpaceSpec::WeightedLebesgue { p: conjugate_exponent(*p), w: w.map(|v| 1.0 / v) }
            }
            SpaceSpec::Morrey { p, q, w } if p < q => {
                SpaceSpec::Block { p: conjugate_exponent(*p), q: conjugate_exponent(*q), w: w.map(|v| 1.0 / v) }
            }
            other => other.clone().kothe_dual(),
        }
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        let weighted = |w: &GridFunction| !w.values().iter().all(|&v| v == 1.0);
        let exp = |p: f64| if p.is_infinite() { "inf".to_string() } else { format!("{p}") };
        match self {
            SpaceSpec::WeightedLebesgue { p, w } => {
                format!("L^{}{}", exp(*p), if weighted(w) { "_w" } else { "" })
            }
            SpaceSpec::VariableLebesgue { w, .. } => format!("L^p(.){}", if weighted(w) { "_w" } else { "" }),
            SpaceSpec::MusielakOrlicz { .. } => "L^phi".into(),
            SpaceSpec::Morrey { p, q, w } => {
                format!("M^{{{},{}}}{}", exp(*p), exp(*q), if weighted(w) { "_w" } else { "" })
            }
            SpaceSpec::Block { p, q, w } => {
                format!("B^{{{},{}}}{}", exp(*p), exp(*q), if weighted(w) { "_w" } else { "" })
            }
            SpaceSpec::Concavification { inner, r } => format!("({})^{r}", inner.label()),
            SpaceSpec::KotheDual { inner } => format!("({})'", inner.label()),
            SpaceSpec::WeakType { inner } => format!("({})_weak", inner.label()),
        }
    }

    /// Stable one-line rendering used for golden files and report keys.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("space specs always serialize")
    }

    pub fn from_canonical(text: &str) -> Result<SpaceSpec> {
        let x: SpaceSpec = serde_json::from_str(text)
            .map_err(|e| crate::Error::Config { line: Some(e.line()), message: e.to_string() })?;
        x.validate()?;
        Ok(x)
    }

    pub(crate) fn check_mesh(&self, f: &GridFunction) -> Result<()> {
        f.mesh().check_same(&self.mesh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let m = Mesh::new(1, 2).unwrap();
        let w = GridFunction::new(m, vec![1.0, 2.0, 0.5, 1.0]).unwrap();
        let specs = vec![
            SpaceSpec::weighted(f64::INFINITY, w.clone()).unwrap(),
            SpaceSpec::variable(vec![1.0, 2.0, f64::INFINITY, 3.0], w.clone()).unwrap(),
            SpaceSpec::morrey(1.5, 3.0, w.clone()).unwrap().kothe_dual().weak(),
            SpaceSpec::lebesgue(m, 2.0).concavify(0.5),
        ];
        for x in specs {
            let text = x.canonical();
            let back = SpaceSpec::from_canonical(&text).unwrap();
            assert_eq!(back, x);
            assert_eq!(back.canonical(), text);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let m = Mesh::new(1, 1).unwrap();
        let w = GridFunction::new(m, vec![1.0, 0.0]).unwrap();
        assert!(SpaceSpec::weighted(2.0, w).is_err());
        assert!(SpaceSpec::morrey(3.0, 2.0, GridFunction::constant(m, 1.0)).is_err());
        assert!(SpaceSpec::from_canonical(r#"{"kind":"weighted_lebesgue","p":2,"w":{"mesh":{"dim":1,"depth":1},"values":[1.0]}}"#).is_err());
    }

    #[test]
    fn lebesgue_unfolding() {
        let m = Mesh::new(1, 1).unwrap();
        let w = GridFunction::new(m, vec![1.0, 2.0]).unwrap();
        let x = SpaceSpec::weighted(3.0, w).unwrap();
        let (p, w2) = x.clone().kothe_dual().as_weighted_lebesgue().unwrap();
        assert!((p - 1.5).abs() < 1e-15);
        assert_eq!(w2.values(), &[1.0, 0.5]);
        let (p, w3) = x.concavify(3.0).as_weighted_lebesgue().unwrap();
        assert_eq!(p, 1.0);
        assert!((w3.values()[1] - 8.0).abs() < 1e-12);
    }
}
