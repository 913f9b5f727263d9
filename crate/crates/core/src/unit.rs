//! Designated positive units and the `|x| ∧ e` kernel behind every
//! unbounded convergence notion.

use num::{Signed, Zero};
use serde_json::{json, Value};

use crate::element::{Element, NormValue};
use crate::error::{Error, Result};
use crate::fremlin;
use crate::rational::{self, Rational};
use crate::space::{Index, SpaceKind, SpaceRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitSpec {
    /// The order unit `𝟙` of a grid or of the eventually constant model.
    ConstantOne,
    /// `k ↦ 2^(-k)` on a sequence model.
    Geometric,
    Explicit(Element),
    Tensor(Box<UnitSpec>, Box<UnitSpec>),
    Join(Box<UnitSpec>, Box<UnitSpec>),
}

impl UnitSpec {
    pub fn tensor(u: UnitSpec, v: UnitSpec) -> Self {
        UnitSpec::Tensor(Box::new(u), Box::new(v))
    }

    /// `u ∨ v`, collapsing equal and explicit operands.
    pub fn join(u: &UnitSpec, v: &UnitSpec) -> Self {
        match (u, v) {
            _ if u == v => u.clone(),
            (UnitSpec::Explicit(a), UnitSpec::Explicit(b)) if a.space().same(b.space()) => {
                UnitSpec::Explicit(a.sup(b).expect("same space"))
            }
            _ => UnitSpec::Join(Box::new(u.clone()), Box::new(v.clone())),
        }
    }

    /// The natural unit of a space: `𝟙` where it exists, the geometric
    /// unit on sequence models, and the product unit on tensor grids.
    pub fn default_for(space: &SpaceRef) -> Self {
        match &space.kind {
            SpaceKind::FiniteGrid { .. } | SpaceKind::LinfModel => UnitSpec::ConstantOne,
            SpaceKind::SeqModel { .. } => UnitSpec::Geometric,
            SpaceKind::TensorGrid { left, right } => {
                UnitSpec::tensor(Self::default_for(left), Self::default_for(right))
            }
        }
    }

    fn check_kind(&self, space: &SpaceRef) -> Result<()> {
        let invalid = |why: &str| Err(Error::InvalidUnit(format!("{why} on `{}`", space.id)));
        match (self, &space.kind) {
            (UnitSpec::ConstantOne, SpaceKind::FiniteGrid { .. } | SpaceKind::LinfModel) => Ok(()),
            (UnitSpec::ConstantOne, SpaceKind::TensorGrid { left, right }) => {
                UnitSpec::ConstantOne.check_kind(left)?;
                UnitSpec::ConstantOne.check_kind(right)
            }
            (UnitSpec::ConstantOne, _) => invalid("constant-one unit"),
            (UnitSpec::Geometric, SpaceKind::SeqModel { .. }) => Ok(()),
            (UnitSpec::Geometric, _) => invalid("geometric unit"),
            (UnitSpec::Explicit(e), _) => {
                e.space().check_same(space)?;
                if !e.is_nonneg() {
                    return Err(Error::InvalidUnit("explicit unit has a negative entry".into()));
                }
                Ok(())
            }
            (UnitSpec::Tensor(u, v), SpaceKind::TensorGrid { left, right }) => {
                u.check_kind(left)?;
                v.check_kind(right)
            }
            (UnitSpec::Tensor(..), _) => invalid("tensor unit"),
            (UnitSpec::Join(u, v), _) => {
                u.check_kind(space)?;
                v.check_kind(space)
            }
        }
    }

    /// Checks that the unit denotes a nonnegative, nonzero element of `space`.
    pub fn validate(&self, space: &SpaceRef) -> Result<()> {
        self.check_kind(space)?;
        if space.allows_tail() && self.materialize(space)?.is_none() {
            return Err(Error::InvalidUnit(format!(
                "unit is not representable on `{}`",
                space.id
            )));
        }
        if self.is_zero_on(space)? {
            return Err(Error::InvalidUnit("unit is zero".into()));
        }
        Ok(())
    }

    fn is_zero_on(&self, space: &SpaceRef) -> Result<bool> {
        Ok(match self {
            UnitSpec::ConstantOne | UnitSpec::Geometric => false,
            UnitSpec::Explicit(e) => e.is_zero(),
            UnitSpec::Tensor(u, v) => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidUnit("tensor unit".into()))?;
                u.is_zero_on(l)? || v.is_zero_on(r)?
            }
            UnitSpec::Join(u, v) => u.is_zero_on(space)? && v.is_zero_on(space)?,
        })
    }

    /// Value of the unit at one coordinate.
    pub fn value_at(&self, space: &SpaceRef, index: Index) -> Result<Rational> {
        space.validate_index(index)?;
        match self {
            UnitSpec::ConstantOne => Ok(rational::one()),
            UnitSpec::Geometric => {
                let k = index
                    .single()
                    .ok_or_else(|| Error::InvalidUnit("geometric unit".into()))?;
                Ok(rational::pow2_neg(k))
            }
            UnitSpec::Explicit(e) => Ok(e.get(index)),
            UnitSpec::Tensor(u, v) => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidUnit("tensor unit".into()))?;
                let (i, j) = index.pair().ok_or_else(|| Error::InvalidUnit("tensor unit".into()))?;
                Ok(u.value_at(l, Index::At(i))? * v.value_at(r, Index::At(j))?)
            }
            UnitSpec::Join(u, v) => Ok(rational::max(&u.value_at(space, index)?, &v.value_at(space, index)?)),
        }
    }

    /// The unit as an element, when it has finite support or a constant tail.
    pub fn materialize(&self, space: &SpaceRef) -> Result<Option<Element>> {
        Ok(match self {
            UnitSpec::ConstantOne => Some(Element::constant(space, rational::one())?),
            UnitSpec::Geometric => None,
            UnitSpec::Explicit(e) => Some(e.clone()),
            UnitSpec::Tensor(u, v) => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidUnit("tensor unit".into()))?;
                match (u.materialize(l)?, v.materialize(r)?) {
                    (Some(a), Some(b)) => match fremlin::tensor(space, &a, &b) {
                        Ok(t) => Some(t),
                        Err(Error::Unrepresentable) => None,
                        Err(e) => return Err(e),
                    },
                    _ => None,
                }
            }
            UnitSpec::Join(u, v) => match (u.materialize(space)?, v.materialize(space)?) {
                (Some(a), Some(b)) => Some(a.sup(&b)?),
                _ => None,
            },
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            UnitSpec::ConstantOne => json!({"kind": "constant-one"}),
            UnitSpec::Geometric => json!({"kind": "geometric"}),
            UnitSpec::Explicit(e) => json!({"kind": "explicit", "element": e.to_json()}),
            UnitSpec::Tensor(u, v) => json!({"kind": "tensor", "u": u.to_json(), "v": v.to_json()}),
            UnitSpec::Join(u, v) => json!({"kind": "join", "u": u.to_json(), "v": v.to_json()}),
        }
    }

    /// Parses a unit for `space`; explicit elements are read in that space
    /// and tensor operands in its factors.
    pub fn from_json(value: &Value, space: &SpaceRef) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("unit needs a string `kind`".into()))?;
        let operand = |name: &str, sp: &SpaceRef| -> Result<UnitSpec> {
            let v = value
                .get(name)
                .ok_or_else(|| Error::Parse(format!("unit `{kind}` needs `{name}`")))?;
            UnitSpec::from_json(v, sp)
        };
        let unit = match kind {
            "constant-one" => UnitSpec::ConstantOne,
            "geometric" => UnitSpec::Geometric,
            "explicit" => {
                let e = value
                    .get("element")
                    .ok_or_else(|| Error::Parse("explicit unit needs `element`".into()))?;
                UnitSpec::Explicit(Element::from_json_in(e, space)?)
            }
            "tensor" => {
                let (l, r) = space
                    .factors()
                    .ok_or_else(|| Error::InvalidUnit(format!("tensor unit on `{}`", space.id)))?;
                UnitSpec::tensor(operand("u", l)?, operand("v", r)?)
            }
            "join" => UnitSpec::Join(Box::new(operand("u", space)?), Box::new(operand("v", space)?)),
            other => return Err(Error::Parse(format!("unknown unit kind `{other}`"))),
        };
        unit.validate(space)?;
        Ok(unit)
    }
}

/// `|x| ∧ e`. Off the support of `x` the meet vanishes, so lazily defined
/// units are only evaluated where `x` is nonzero.
pub fn unit_meet(x: &Element, unit: &UnitSpec) -> Result<Element> {
    let space = x.space();
    unit.validate(space)?;
    if x.tail().is_zero() {
        let mut coords = Vec::with_capacity(x.coords().len());
        for (k, v) in x.coords() {
            coords.push((*k, rational::min(&v.abs(), &unit.value_at(space, *k)?)));
        }
        return Element::new(space, coords, Rational::zero());
    }
    let e = unit
        .materialize(space)?
        .ok_or_else(|| Error::InvalidUnit("unit must be representable for tailed elements".into()))?;
    x.abs().inf(&e)
}

/// `ρ_e(x) = ‖ |x| ∧ e ‖`.
pub fn rho(x: &Element, unit: &UnitSpec) -> Result<NormValue> {
    Ok(unit_meet(x, unit)?.norm())
}

/// Decides `ρ_e(x) < ρ_e(y)`-style comparisons between two seminorm values
/// that may be squares.
pub fn norm_value_lt(a: &NormValue, b: &NormValue) -> bool {
    debug_assert_eq!(a.squared, b.squared);
    a.value < b.value
}

/// Exact check of `ρ(x+y) ≤ ρ(x) + ρ(y)` for (possibly squared) values.
pub fn subadditive(sum: &NormValue, a: &NormValue, b: &NormValue) -> bool {
    if !sum.squared {
        return sum.value <= &a.value + &b.value;
    }
    // s ≤ (√a + √b)^2  ⇔  s - a - b ≤ 2√(ab)
    let d = &sum.value - &a.value - &b.value;
    d.is_negative() || d.is_zero() || &d * &d <= rational::int(4) * &a.value * &b.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::space::{NormTag, Space};

    #[test]
    fn geometric_meet_examples() {
        let s = Space::seq("S", NormTag::Sup);
        let x = Element::from_ints(&s, &[3]).unwrap();
        let m = unit_meet(&x, &UnitSpec::Geometric).unwrap();
        assert_eq!(m, Element::from_fracs(&s, &[(1, 2)]).unwrap());
        assert!(unit_meet(&Element::zero(&s), &UnitSpec::Geometric).unwrap().is_zero());
    }

    #[test]
    fn linf_constant_one_meet() {
        let l = Space::linf("L");
        let x = Element::new(&l, [(Index::At(1), frac(1, 3)), (Index::At(2), int(-4))], int(5)).unwrap();
        let m = unit_meet(&x, &UnitSpec::ConstantOne).unwrap();
        assert_eq!(m.tail(), &int(1));
        assert_eq!(m.get(Index::At(1)), frac(1, 3));
        assert_eq!(m.get(Index::At(2)), int(1));
    }

    #[test]
    fn unit_validity() {
        let s = Space::seq("S", NormTag::L1);
        let k = Space::numbered_grid("K", 2).unwrap();
        assert!(UnitSpec::ConstantOne.validate(&s).is_err());
        assert!(UnitSpec::Geometric.validate(&k).is_err());
        let neg = Element::from_ints(&k, &[1, -1]).unwrap();
        assert!(UnitSpec::Explicit(neg).validate(&k).is_err());
        assert!(UnitSpec::Explicit(Element::zero(&k)).validate(&k).is_err());
        let x = Element::from_ints(&k, &[1, 2]).unwrap();
        assert!(matches!(
            unit_meet(&x, &UnitSpec::Geometric),
            Err(Error::InvalidUnit(_))
        ));
    }

    #[test]
    fn tensor_units() {
        let s = Space::seq("S", NormTag::Sup);
        let t = Space::tensor("T", &s, &s).unwrap();
        let u = UnitSpec::tensor(UnitSpec::Geometric, UnitSpec::Geometric);
        u.validate(&t).unwrap();
        assert_eq!(u.value_at(&t, Index::Pair(1, 2)).unwrap(), frac(1, 8));
        let l = Space::linf("L");
        let tl = Space::tensor("TL", &l, &l).unwrap();
        let one = UnitSpec::tensor(UnitSpec::ConstantOne, UnitSpec::ConstantOne);
        one.validate(&tl).unwrap();
        assert_eq!(one.materialize(&tl).unwrap().unwrap().tail(), &int(1));
    }

    #[test]
    fn join_takes_entrywise_max() {
        let k = Space::numbered_grid("K", 2).unwrap();
        let u1 = UnitSpec::Explicit(Element::basis(&k, 1).unwrap());
        let u2 = UnitSpec::Explicit(Element::basis(&k, 2).unwrap());
        let j = UnitSpec::join(&u1, &u2);
        assert_eq!(j, UnitSpec::Explicit(Element::from_ints(&k, &[1, 1]).unwrap()));
        assert_eq!(UnitSpec::join(&u1, &u1), u1);
        let s = Space::seq("S", NormTag::Sup);
        let mixed = UnitSpec::join(
            &UnitSpec::Geometric,
            &UnitSpec::Explicit(Element::from_ints(&s, &[0, 1]).unwrap()),
        );
        assert_eq!(mixed.value_at(&s, Index::At(2)).unwrap(), int(1));
        assert_eq!(mixed.value_at(&s, Index::At(3)).unwrap(), frac(1, 8));
    }

    #[test]
    fn squared_subadditivity() {
        let sq = |v: i64| NormValue {
            value: int(v),
            squared: true,
        };
        // √9 ≤ √4 + √1
        assert!(subadditive(&sq(9), &sq(4), &sq(1)));
        assert!(!subadditive(&sq(10), &sq(4), &sq(1)));
    }

    #[test]
    fn json_roundtrip() {
        let k = Space::numbered_grid("K", 2).unwrap();
        let t = Space::tensor("T", &k, &k).unwrap();
        let u = UnitSpec::tensor(
            UnitSpec::ConstantOne,
            UnitSpec::Explicit(Element::from_ints(&k, &[2, 1]).unwrap()),
        );
        assert_eq!(UnitSpec::from_json(&u.to_json(), &t).unwrap(), u);
    }
}
