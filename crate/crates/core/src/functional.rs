//! Finite batteries of positive linear functionals.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::element::{parse_rational_value, Element};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::space::{Index, SpaceKind, SpaceRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functional {
    Coordinate(Index),
    /// Sum of all coordinates; only defined on elements without a tail.
    OnesSum,
    Weighted(BTreeMap<Index, Rational>),
    /// `(f⊗g)(z) = Σ f_i g_j z_ij` on a tensor grid.
    Product(Box<Functional>, Box<Functional>),
}

impl Functional {
    pub fn product(f: Functional, g: Functional) -> Self {
        Functional::Product(Box::new(f), Box::new(g))
    }

    /// Weight the functional puts on one coordinate.
    fn weight(&self, index: Index) -> Result<Rational> {
        Ok(match self {
            Functional::Coordinate(k) => {
                if *k == index {
                    rational::one()
                } else {
                    Rational::zero()
                }
            }
            Functional::OnesSum => rational::one(),
            Functional::Weighted(w) => w.get(&index).cloned().unwrap_or_else(Rational::zero),
            Functional::Product(f, g) => {
                let (i, j) = index
                    .pair()
                    .ok_or_else(|| Error::InvalidFunctional("product functional needs pair indices".into()))?;
                f.weight(Index::At(i))? * g.weight(Index::At(j))?
            }
        })
    }

    /// Whether the functional has infinitely many nonzero weights.
    fn spreads(&self) -> bool {
        match self {
            Functional::Coordinate(_) | Functional::Weighted(_) => false,
            Functional::OnesSum => true,
            Functional::Product(f, g) => f.spreads() || g.spreads(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Functional::Coordinate(_) | Functional::OnesSum => true,
            Functional::Weighted(w) => w.values().all(|v| !v.is_negative()),
            Functional::Product(f, g) => f.is_positive() && g.is_positive(),
        }
    }

    pub fn validate(&self, space: &SpaceRef) -> Result<()> {
        match self {
            Functional::Coordinate(k) => space.validate_index(*k),
            Functional::OnesSum => Ok(()),
            Functional::Weighted(w) => w.keys().try_for_each(|k| space.validate_index(*k)),
            Functional::Product(f, g) => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidFunctional(format!("product functional on `{}`", space.id)))?;
                f.validate(l)?;
                g.validate(r)
            }
        }
    }

    pub fn apply(&self, x: &Element) -> Result<Rational> {
        self.validate(x.space())?;
        if !x.tail().is_zero() {
            if self.spreads() {
                return Err(Error::InvalidFunctional(
                    "ones-sum is undefined on an element with a nonzero tail".into(),
                ));
            }
            return self.apply_with_tail(x);
        }
        let mut acc = Rational::zero();
        for (k, v) in x.coords() {
            let w = self.weight(*k)?;
            if !w.is_zero() {
                acc += w * v;
            }
        }
        Ok(acc)
    }

    fn apply_with_tail(&self, x: &Element) -> Result<Rational> {
        match self {
            Functional::Coordinate(k) => Ok(x.get(*k)),
            Functional::Weighted(w) => Ok(w.iter().map(|(k, c)| c * x.get(*k)).sum()),
            Functional::Product(f, g) => {
                let (mut acc, fs, gs) = (Rational::zero(), f.support(), g.support());
                for i in &fs {
                    for j in &gs {
                        let idx = Index::Pair(*i, *j);
                        acc += self.weight(idx)? * x.get(idx);
                    }
                }
                Ok(acc)
            }
            Functional::OnesSum => unreachable!("checked by caller"),
        }
    }

    fn support(&self) -> Vec<u32> {
        match self {
            Functional::Coordinate(k) => k.single().into_iter().collect(),
            Functional::Weighted(w) => w.keys().filter_map(|k| k.single()).collect(),
            _ => Vec::new(),
        }
    }

    /// Coordinate functionals of every grid point, or of `1..=count` on
    /// sequence models.
    pub fn coordinate_battery(space: &SpaceRef, count: u32) -> Vec<Functional> {
        let n = match &space.kind {
            SpaceKind::FiniteGrid { points } => points.len() as u32,
            _ => count,
        };
        (1..=n).map(|k| Functional::Coordinate(Index::At(k))).collect()
    }

    /// All products `f⊗g` in battery order.
    pub fn product_battery(left: &[Functional], right: &[Functional]) -> Vec<Functional> {
        left.iter()
            .flat_map(|f| right.iter().map(move |g| Functional::product(f.clone(), g.clone())))
            .collect()
    }

    pub fn to_json(&self, space: &SpaceRef) -> Value {
        match self {
            Functional::Coordinate(k) => json!({"kind": "coordinate", "index": space.index_key(*k)}),
            Functional::OnesSum => json!({"kind": "ones-sum"}),
            Functional::Weighted(w) => {
                let m: Map<String, Value> = w
                    .iter()
                    .map(|(k, v)| (space.index_key(*k), Value::String(rational::fmt(v))))
                    .collect();
                json!({"kind": "weighted", "weights": m})
            }
            Functional::Product(f, g) => match space.factors() {
                Some((l, r)) => json!({"kind": "product", "f": f.to_json(l), "g": g.to_json(r)}),
                None => json!({"kind": "product"}),
            },
        }
    }

    pub fn from_json(value: &Value, space: &SpaceRef) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("functional needs a string `kind`".into()))?;
        let f = match kind {
            "coordinate" => {
                let key = match value.get("index") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => return Err(Error::Parse("coordinate functional needs `index`".into())),
                };
                Functional::Coordinate(space.parse_index_key(&key)?)
            }
            "ones-sum" => Functional::OnesSum,
            "weighted" => {
                let w = value
                    .get("weights")
                    .and_then(Value::as_object)
                    .ok_or_else(|| Error::Parse("weighted functional needs `weights`".into()))?;
                let mut map = BTreeMap::new();
                for (k, v) in w {
                    map.insert(space.parse_index_key(k)?, parse_rational_value(v)?);
                }
                Functional::Weighted(map)
            }
            "product" => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidFunctional(format!("product functional on `{}`", space.id)))?;
                let part = |name: &str, sp: &SpaceRef| {
                    value
                        .get(name)
                        .ok_or_else(|| Error::Parse(format!("product functional needs `{name}`")))
                        .and_then(|v| Functional::from_json(v, sp))
                };
                Functional::product(part("f", l)?, part("g", r)?)
            }
            other => return Err(Error::Parse(format!("unknown functional kind `{other}`"))),
        };
        f.validate(space)?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::space::{NormTag, Space};

    #[test]
    fn examples() {
        let s = Space::seq("S", NormTag::L1);
        let x = Element::from_ints(&s, &[5, 7]).unwrap();
        assert_eq!(Functional::Coordinate(Index::At(2)).apply(&x).unwrap(), int(7));
        let y = Element::from_ints(&s, &[1, 2, 3]).unwrap();
        assert_eq!(Functional::OnesSum.apply(&y).unwrap(), int(6));
        let w = Functional::Weighted([(Index::At(1), frac(1, 2))].into_iter().collect());
        assert_eq!(w.apply(&Element::from_ints(&s, &[4, 9]).unwrap()).unwrap(), int(2));
    }

    #[test]
    fn ones_sum_rejects_tail() {
        let l = Space::linf("L");
        let x = Element::new(&l, [], int(1)).unwrap();
        assert!(Functional::OnesSum.apply(&x).is_err());
        assert_eq!(Functional::Coordinate(Index::At(9)).apply(&x).unwrap(), int(1));
    }

    #[test]
    fn product_functional() {
        let k = Space::numbered_grid("K", 2).unwrap();
        let t = Space::tensor("T", &k, &k).unwrap();
        let z = Element::from_int_matrix(&t, &[&[1, 2], &[3, 4]]).unwrap();
        let f = Functional::product(
            Functional::Weighted([(Index::At(1), int(1)), (Index::At(2), int(10))].into_iter().collect()),
            Functional::OnesSum,
        );
        assert_eq!(f.apply(&z).unwrap(), int(1 + 2 + 30 + 40));
        let c = Functional::product(
            Functional::Coordinate(Index::At(2)),
            Functional::Coordinate(Index::At(1)),
        );
        assert_eq!(c.apply(&z).unwrap(), int(3));
        assert_eq!(Functional::from_json(&f.to_json(&t), &t).unwrap(), f);
    }

    #[test]
    fn positivity() {
        let w = Functional::Weighted([(Index::At(1), int(-1))].into_iter().collect());
        assert!(!w.is_positive());
        assert!(Functional::OnesSum.is_positive());
    }
}
