//! Solid zero-neighborhoods `{x : ρ_u(x) < ε}` and the base
//! `W = Sol(U⊗V)` they generate on a tensor grid.

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::convergence::{trace_eval, TraceSpec};
use crate::element::{Element, NormValue};
use crate::error::{Error, Result};
use crate::fremlin::{self, Certificate, MembershipVerdict, Rank1Witness, SearchOptions};
use crate::rational::{self, Rational};
use crate::space::{Index, SpaceRef};
use crate::unit::{self, UnitSpec};
use crate::verdict::{Checkpoint, Status, TraceIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolidNbhd {
    pub space: SpaceRef,
    pub unit: UnitSpec,
    pub eps: Rational,
}

impl SolidNbhd {
    pub fn new(space: &SpaceRef, unit: UnitSpec, eps: Rational) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::InvalidConfig(format!("threshold {eps} must be positive")));
        }
        unit.validate(space)?;
        Ok(SolidNbhd {
            space: space.clone(),
            unit,
            eps,
        })
    }

    pub fn rho(&self, x: &Element) -> Result<NormValue> {
        self.space.check_same(x.space())?;
        unit::rho(x, &self.unit)
    }

    /// `ρ_unit(x) < ε`, compared exactly (through squares for `l2`).
    pub fn contains(&self, x: &Element) -> Result<bool> {
        Ok(self.rho(x)?.lt(&self.eps))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "space": self.space.id,
            "unit": self.unit.to_json(),
            "eps": rational::fmt(&self.eps),
        })
    }

    pub fn from_json(value: &Value, space: &SpaceRef) -> Result<Self> {
        let unit = value
            .get("unit")
            .map(|u| UnitSpec::from_json(u, space))
            .transpose()?
            .unwrap_or_else(|| UnitSpec::default_for(space));
        let eps = value
            .get("eps")
            .ok_or_else(|| Error::Parse("neighborhood needs `eps`".into()))
            .and_then(crate::element::parse_rational_value)?;
        SolidNbhd::new(space, unit, eps)
    }
}

/// `ρ_unit(x) < ε`.
pub fn nbhd_contains(n: &SolidNbhd, x: &Element) -> Result<bool> {
    n.contains(x)
}

/// `W = Sol(U⊗V)` on a registered tensor grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorNbhd {
    pub target: SpaceRef,
    pub u: SolidNbhd,
    pub v: SolidNbhd,
}

impl TensorNbhd {
    pub fn new(target: &SpaceRef, u: SolidNbhd, v: SolidNbhd) -> Result<Self> {
        let (l, r) = target
            .factors()
            .ok_or_else(|| Error::UnregisteredTensor(target.id.clone()))?;
        l.check_same(&u.space)?;
        r.check_same(&v.space)?;
        Ok(TensorNbhd {
            target: target.clone(),
            u,
            v,
        })
    }

    pub fn membership(&self, z: &Element, opts: &SearchOptions) -> Result<MembershipVerdict> {
        self.target.check_same(z.space())?;
        fremlin::sol_membership(z, &self.u, &self.v, opts)
    }

    pub fn witness_validates(&self, z: &Element, w: &Rank1Witness) -> Result<bool> {
        w.validates(z, &self.u, &self.v)
    }

    pub fn to_json(&self) -> Value {
        json!({"space": self.target.id, "U": self.u.to_json(), "V": self.v.to_json()})
    }
}

/// A neighborhood inside both inputs: unit join and the smaller threshold on
/// each factor. A larger unit gives a larger seminorm, so any witness for the
/// result is a witness for both inputs.
pub fn nbhd_meet(w1: &TensorNbhd, w2: &TensorNbhd) -> Result<TensorNbhd> {
    w1.target.check_same(&w2.target)?;
    let factor = |a: &SolidNbhd, b: &SolidNbhd| {
        SolidNbhd::new(
            &a.space,
            UnitSpec::join(&a.unit, &b.unit),
            rational::min(&a.eps, &b.eps),
        )
    };
    TensorNbhd::new(&w1.target, factor(&w1.u, &w2.u)?, factor(&w1.v, &w2.v)?)
}

/// Halves both factor thresholds, so that `W0 + W0 ⊆ W`.
pub fn nbhd_half(w: &TensorNbhd) -> Result<TensorNbhd> {
    let half = |n: &SolidNbhd| SolidNbhd::new(&n.space, n.unit.clone(), &n.eps / rational::int(2));
    TensorNbhd::new(&w.target, half(&w.u)?, half(&w.v)?)
}

/// Witness for `z1 + z2` from witnesses of `z1` and `z2`:
/// `|z1+z2| ≤ a1⊗b1 + a2⊗b2 ≤ (a1+a2)⊗(b1+b2)`.
pub fn sum_witness(w1: &Rank1Witness, w2: &Rank1Witness) -> Result<Rank1Witness> {
    Ok(Rank1Witness {
        a: w1.a.add(&w2.a)?,
        b: w1.b.add(&w2.b)?,
    })
}

/// Checks `λz ∈ W` for `|λ| ≤ 1` through the witness `(|λ|·a, b)`.
pub fn scalar_absorb_check(w: &TensorNbhd, lambda: &Rational, z: &Element, witness: &Rank1Witness) -> Result<bool> {
    if lambda.abs() > rational::one() {
        return Err(Error::ScalarOutOfRange(lambda.to_string()));
    }
    if !w.witness_validates(z, witness)? {
        return Err(Error::Precondition("witness does not certify z ∈ W".into()));
    }
    let scaled = Rank1Witness {
        a: witness.a.scale(&lambda.abs()),
        b: witness.b.clone(),
    };
    w.witness_validates(&z.scale(lambda), &scaled)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separation {
    pub u: SolidNbhd,
    pub v: SolidNbhd,
    pub certificate: Certificate,
}

impl Separation {
    pub fn to_json(&self) -> Value {
        json!({"U": self.u.to_json(), "V": self.v.to_json(), "certificate": self.certificate.to_json()})
    }
}

fn half_rho(x: &Element, unit: &UnitSpec) -> Result<Rational> {
    let r = unit::rho(x, unit)?;
    let plain = if r.squared {
        rational::exact_sqrt(&r.value)
            .ok_or_else(|| Error::Precondition("single-coordinate seminorm is not rational".into()))?
    } else {
        r.value
    };
    Ok(plain / rational::int(2))
}

/// Separates `z ≠ 0` from 0: a positive minorant `x1⊗y1` sitting on one
/// entry of `|z|`, and neighborhoods whose thresholds are half of `ρ(x1)`
/// and `ρ(y1)`, so that neither factor lies inside.
pub fn hausdorff_separation(z: &Element) -> Result<Separation> {
    if z.is_zero() {
        return Err(Error::ZeroElement);
    }
    let target = z.space().clone();
    let (l, r) = target
        .factors()
        .ok_or_else(|| Error::UnregisteredTensor(target.id.clone()))?;
    let m = z.abs();
    let (i, j, val) = match m.coords().iter().find(|(_, v)| v.is_positive()) {
        Some((idx, v)) => {
            let (i, j) = idx.pair().expect("tensor index");
            (i, j, v.clone())
        }
        None => {
            let far = m
                .coords()
                .keys()
                .filter_map(|k| k.pair())
                .map(|(i, j)| i.max(j))
                .max()
                .unwrap_or(0)
                + 1;
            (far, far, m.tail().clone())
        }
    };
    let (p, q) = match rational::exact_sqrt(&val) {
        Some(s) => (s.clone(), s),
        None => (val.clone(), rational::one()),
    };
    let x1 = Element::new(l, [(Index::At(i), p)], Rational::zero())?;
    let y1 = Element::new(r, [(Index::At(j), q)], Rational::zero())?;
    let (ul, ur) = (UnitSpec::default_for(l), UnitSpec::default_for(r));
    let eps_u = half_rho(&x1, &ul)?;
    let eps_v = half_rho(&y1, &ur)?;
    let u = SolidNbhd::new(l, ul, eps_u)?;
    let v = SolidNbhd::new(r, ur, eps_v)?;
    let certificate = Certificate::dichotomy(x1, y1);
    if !certificate.validates(z, &u, &v)? {
        return Err(Error::Precondition("separation certificate failed to validate".into()));
    }
    Ok(Separation { u, v, certificate })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauVerdict {
    pub status: Status,
    /// Earliest index from which every `x_α` (up to the horizon) lies in `U`.
    pub alpha0: Option<u64>,
    pub beta0: Option<u64>,
    pub x_trace: Vec<Checkpoint>,
    pub y_trace: Vec<Checkpoint>,
    /// First checkpoint keeping a tail from entering its neighborhood.
    pub witness: Option<Checkpoint>,
    /// Corner products `x_α⊗y_β` of the tail block, each certified in `W`
    /// through the witness `(|x_α|, |y_β|)`.
    pub certified_corners: Vec<TraceIndex>,
}

impl TauVerdict {
    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status,
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "witness": self.witness.as_ref().map(Checkpoint::to_json),
            "certified_corners": self.certified_corners.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "x_trace": self.x_trace.iter().map(Checkpoint::to_json).collect::<Vec<_>>(),
            "y_trace": self.y_trace.iter().map(Checkpoint::to_json).collect::<Vec<_>>(),
        })
    }
}

fn membership_trace(t: &TraceSpec, n: &SolidNbhd, horizon: u64) -> Result<(Vec<Checkpoint>, Vec<Element>)> {
    let mut cps = Vec::with_capacity(horizon as usize);
    let mut xs = Vec::with_capacity(horizon as usize);
    for k in 1..=horizon {
        let x = trace_eval(t, k)?;
        let r = n.rho(&x)?;
        cps.push(Checkpoint {
            index: TraceIndex::Single(k),
            threshold: r.scaled_threshold(&n.eps),
            ok: r.lt(&n.eps),
            value: r.value,
            arg: None,
        });
        xs.push(x);
    }
    Ok((cps, xs))
}

fn tail_start(cps: &[Checkpoint]) -> Option<u64> {
    let mut start = None;
    for cp in cps.iter().rev() {
        if !cp.ok {
            break;
        }
        if let TraceIndex::Single(k) = cp.index {
            start = Some(k);
        }
    }
    start
}

/// Double-trace τ-convergence: passes when both factor traces stay inside
/// their neighborhoods from some index up to the horizon, which puts every
/// `x_α⊗y_β` of the tail block in `U⊗V ⊆ Sol(U⊗V)`.
pub fn tau_null(xs: &TraceSpec, ys: &TraceSpec, w: &TensorNbhd, horizon: u64) -> Result<TauVerdict> {
    if horizon == 0 {
        return Err(Error::EmptyTrace);
    }
    let (x_trace, x_vals) = membership_trace(xs, &w.u, horizon)?;
    let (y_trace, y_vals) = membership_trace(ys, &w.v, horizon)?;
    let alpha0 = tail_start(&x_trace);
    let beta0 = tail_start(&y_trace);
    let mut certified_corners = Vec::new();
    let status = match (alpha0, beta0) {
        (Some(a0), Some(b0)) => {
            let mut corners = vec![(a0, b0), (a0, horizon), (horizon, b0), (horizon, horizon)];
            corners.dedup();
            for (a, b) in corners {
                let (x, y) = (&x_vals[a as usize - 1], &y_vals[b as usize - 1]);
                let z = fremlin::tensor(&w.target, x, y)?;
                let wit = Rank1Witness { a: x.abs(), b: y.abs() };
                if !w.witness_validates(&z, &wit)? {
                    return Err(Error::Precondition(format!("corner ({a},{b}) failed to certify")));
                }
                certified_corners.push(TraceIndex::Double(a, b));
            }
            Status::Pass
        }
        _ => Status::Fail,
    };
    let witness = if status == Status::Fail {
        x_trace
            .iter()
            .rev()
            .find(|c| !c.ok)
            .or_else(|| y_trace.iter().rev().find(|c| !c.ok))
            .cloned()
    } else {
        None
    };
    Ok(TauVerdict {
        status,
        alpha0,
        beta0,
        x_trace,
        y_trace,
        witness,
        certified_corners,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementSample {
    pub sample: usize,
    pub member: Element,
    pub witness: Rank1Witness,
    /// `‖ |z| ∧ u⊗v ‖` (squared for `l2`).
    pub value: NormValue,
    /// `ρ_u(a) · ρ_v(b)` in the same units as `value`.
    pub product: Rational,
    pub threshold: Rational,
    pub in_w: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementReport {
    pub status: Status,
    pub samples: Vec<RefinementSample>,
    pub violations: usize,
}

impl RefinementReport {
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.samples
                .iter()
                .map(|s| {
                    json!({
                        "sample": s.sample,
                        "value": rational::fmt(&s.value.value),
                        "product": rational::fmt(&s.product),
                        "threshold": rational::fmt(&s.threshold),
                        "verdict": if s.in_w { "pass" } else { "fail" },
                    })
                })
                .collect(),
        )
    }
}

/// Coordinates drawn when sampling an infinite sequence model.
const SAMPLE_SUPPORT: u32 = 4;

fn sample_dims(space: &SpaceRef) -> u32 {
    space.dim().map_or(SAMPLE_SUPPORT, |d| d as u32)
}

fn random_nonneg(space: &SpaceRef, rng: &mut ChaCha8Rng) -> Result<Element> {
    let n = sample_dims(space);
    let coords = (1..=n).map(|k| {
        let num: i64 = if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=40) };
        (Index::At(k), rational::frac(num, 20))
    });
    Element::new(space, coords.collect::<Vec<_>>(), Rational::zero())
}

/// Random element of `N₊`: a random draw halved until it enters `N`.
pub fn sample_member(n: &SolidNbhd, rng: &mut ChaCha8Rng) -> Result<Element> {
    let mut x = random_nonneg(&n.space, rng)?;
    let half = rational::frac(1, 2);
    while !n.contains(&x)? {
        x = x.scale(&half);
    }
    Ok(x)
}

/// Random member of `Sol(U⊗V)` with the witness that certifies it.
pub fn sample_sol_member(w: &TensorNbhd, rng: &mut ChaCha8Rng) -> Result<(Element, Rank1Witness)> {
    let a = sample_member(&w.u, rng)?;
    let b = sample_member(&w.v, rng)?;
    let ab = fremlin::tensor(&w.target, &a, &b)?;
    let coords: Vec<(Index, Rational)> = ab
        .coords()
        .iter()
        .map(|(idx, v)| {
            let frac = rational::frac(rng.gen_range(0..=4), 4);
            let sign = if rng.gen_bool(0.5) {
                rational::int(-1)
            } else {
                rational::one()
            };
            (*idx, v * frac * sign)
        })
        .collect();
    let z = Element::new(&w.target, coords, Rational::zero())?;
    let witness = Rank1Witness { a, b };
    debug_assert!(w.witness_validates(&z, &witness)?);
    Ok((z, witness))
}

/// Samples members of `Sol(U⊗V)` and checks each lies in the
/// un-neighborhood `W_un = {z : ‖ |z| ∧ u⊗v ‖ < ε}`.
pub fn un_refinement_check(
    w_un: &SolidNbhd,
    u: &SolidNbhd,
    v: &SolidNbhd,
    samples: usize,
    seed: u64,
) -> Result<RefinementReport> {
    for n in [u, v] {
        if n.eps >= rational::one() {
            return Err(Error::InvalidConfig(format!("threshold {} must lie in (0, 1)", n.eps)));
        }
    }
    let (l, r) = w_un
        .space
        .factors()
        .ok_or_else(|| Error::UnregisteredTensor(w_un.space.id.clone()))?;
    l.check_same(&u.space)?;
    r.check_same(&v.space)?;
    let w = TensorNbhd::new(&w_un.space, u.clone(), v.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut violations = 0;
    for sample in 0..samples {
        let (z, witness) = sample_sol_member(&w, &mut rng)?;
        if !w.witness_validates(&z, &witness)? {
            return Err(Error::Precondition(format!("sample {sample} lost its witness")));
        }
        let value = w_un.rho(&z)?;
        let product = u.rho(&witness.a)?.value * v.rho(&witness.b)?.value;
        let in_w = value.lt(&w_un.eps);
        if !in_w {
            violations += 1;
        }
        out.push(RefinementSample {
            sample,
            threshold: value.scaled_threshold(&w_un.eps),
            member: z,
            witness,
            value,
            product,
            in_w,
        });
    }
    Ok(RefinementReport {
        status: if violations == 0 { Status::Pass } else { Status::Fail },
        samples: out,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence::{Coef, TraceSpec};
    use crate::rational::{frac, int};
    use crate::space::{NormTag, Space};

    fn grid_pair(n: usize) -> (SpaceRef, SpaceRef, SpaceRef) {
        let k = Space::numbered_grid("K", n).unwrap();
        let l = Space::numbered_grid("L", n).unwrap();
        let t = Space::tensor("T", &k, &l).unwrap();
        (k, l, t)
    }

    #[test]
    fn contains_examples() {
        let li = Space::linf("Li");
        let n = SolidNbhd::new(&li, UnitSpec::ConstantOne, frac(1, 10)).unwrap();
        assert!(n.contains(&Element::zero(&li)).unwrap());
        for k in 1..=30u32 {
            let v = Element::new(&li, [(Index::At(k), frac(1, k as i64))], int(0)).unwrap();
            assert_eq!(n.contains(&v).unwrap(), k > 10, "n = {k}");
        }
        let half = SolidNbhd::new(&li, UnitSpec::ConstantOne, frac(1, 2)).unwrap();
        assert!(!half.contains(&Element::basis(&li, 1).unwrap()).unwrap());
        let k = Space::numbered_grid("K", 2).unwrap();
        assert!(n.contains(&Element::zero(&k)).is_err());
    }

    #[test]
    fn meet_examples() {
        let (k, l, t) = grid_pair(2);
        let e = |s: &SpaceRef, i| UnitSpec::Explicit(Element::basis(s, i).unwrap());
        let w1 = TensorNbhd::new(
            &t,
            SolidNbhd::new(&k, e(&k, 1), frac(1, 2)).unwrap(),
            SolidNbhd::new(&l, e(&l, 1), frac(1, 2)).unwrap(),
        )
        .unwrap();
        let w2 = TensorNbhd::new(
            &t,
            SolidNbhd::new(&k, e(&k, 2), frac(1, 3)).unwrap(),
            SolidNbhd::new(&l, e(&l, 2), frac(1, 3)).unwrap(),
        )
        .unwrap();
        let w0 = nbhd_meet(&w1, &w2).unwrap();
        assert_eq!(w0.u.unit, UnitSpec::Explicit(Element::from_ints(&k, &[1, 1]).unwrap()));
        assert_eq!(w0.u.eps, frac(1, 3));
        assert_eq!(nbhd_meet(&w1, &w1).unwrap(), w1);
    }

    #[test]
    fn half_examples() {
        let (k, l, t) = grid_pair(2);
        let w = TensorNbhd::new(
            &t,
            SolidNbhd::new(&k, UnitSpec::ConstantOne, int(1)).unwrap(),
            SolidNbhd::new(&l, UnitSpec::ConstantOne, int(1)).unwrap(),
        )
        .unwrap();
        let h = nbhd_half(&w).unwrap();
        assert_eq!((h.u.eps.clone(), h.v.eps.clone()), (frac(1, 2), frac(1, 2)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (z1, w1) = sample_sol_member(&h, &mut rng).unwrap();
        let (z2, w2) = sample_sol_member(&h, &mut rng).unwrap();
        let sum = sum_witness(&w1, &w2).unwrap();
        assert!(w.witness_validates(&z1.add(&z2).unwrap(), &sum).unwrap());
        let zero = Element::zero(&t);
        let zw = Rank1Witness {
            a: Element::zero(&k),
            b: Element::zero(&l),
        };
        assert!(w.witness_validates(&zero, &sum_witness(&zw, &zw).unwrap()).unwrap());
    }

    #[test]
    fn scalar_absorb_examples() {
        let (k, l, t) = grid_pair(2);
        let w = TensorNbhd::new(
            &t,
            SolidNbhd::new(&k, UnitSpec::ConstantOne, frac(1, 2)).unwrap(),
            SolidNbhd::new(&l, UnitSpec::ConstantOne, frac(1, 2)).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (z, wit) = sample_sol_member(&w, &mut rng).unwrap();
        for lambda in [int(0), int(-1), frac(1, 2)] {
            assert!(scalar_absorb_check(&w, &lambda, &z, &wit).unwrap());
        }
        assert!(matches!(
            scalar_absorb_check(&w, &frac(3, 2), &z, &wit),
            Err(Error::ScalarOutOfRange(_))
        ));
    }

    #[test]
    fn separation_examples() {
        let (k, l, t) = grid_pair(2);
        let e11 = Element::new(&t, [(Index::Pair(1, 1), int(1))], int(0)).unwrap();
        let s = hausdorff_separation(&e11).unwrap();
        assert_eq!(s.certificate.x1.as_ref().unwrap(), &Element::basis(&k, 1).unwrap());
        assert_eq!(s.u.eps, frac(1, 2));
        assert_eq!(s.v.eps, frac(1, 2));
        assert!(
            fremlin::sol_membership(&e11, &s.u, &s.v, &SearchOptions::default())
                .unwrap()
                .status
                == Status::Fail
        );

        let four = Element::new(&t, [(Index::Pair(1, 1), int(4))], int(0)).unwrap();
        let s = hausdorff_separation(&four).unwrap();
        assert_eq!(s.certificate.x1.unwrap(), Element::from_ints(&k, &[2]).unwrap());
        assert_eq!(s.certificate.y1.unwrap(), Element::from_ints(&l, &[2]).unwrap());

        let three = Element::new(&t, [(Index::Pair(1, 2), int(3))], int(0)).unwrap();
        let s = hausdorff_separation(&three).unwrap();
        assert_eq!(s.certificate.x1.unwrap(), Element::from_ints(&k, &[3]).unwrap());
        assert_eq!(s.certificate.y1.unwrap(), Element::basis(&l, 2).unwrap());

        assert_eq!(hausdorff_separation(&Element::zero(&t)), Err(Error::ZeroElement));
    }

    #[test]
    fn tau_examples() {
        let (k, l, t) = grid_pair(2);
        let w = TensorNbhd::new(
            &t,
            SolidNbhd::new(&k, UnitSpec::ConstantOne, frac(1, 10)).unwrap(),
            SolidNbhd::new(&l, UnitSpec::ConstantOne, frac(1, 10)).unwrap(),
        )
        .unwrap();
        let xs = TraceSpec::scaled(&k, Coef::parse("1/n").unwrap(), Element::basis(&k, 1).unwrap());
        let ys = TraceSpec::scaled(&l, Coef::parse("1/n").unwrap(), Element::basis(&l, 1).unwrap());
        let v = tau_null(&xs, &ys, &w, 50).unwrap();
        assert_eq!(v.status, Status::Pass);
        assert_eq!(v.alpha0, Some(11));
        assert!(!v.certified_corners.is_empty());

        let constant = TraceSpec::constant(Element::basis(&k, 1).unwrap());
        let v = tau_null(&constant, &ys, &w, 50).unwrap();
        assert_eq!(v.status, Status::Fail);
        assert!(v.witness.is_some());
        assert_eq!(tau_null(&xs, &ys, &w, 0), Err(Error::EmptyTrace));

        let s = Space::seq("S", NormTag::Sup);
        let ts = Space::tensor("TS", &s, &s).unwrap();
        let ws = TensorNbhd::new(
            &ts,
            SolidNbhd::new(&s, UnitSpec::Geometric, frac(1, 100)).unwrap(),
            SolidNbhd::new(&s, UnitSpec::Geometric, frac(1, 100)).unwrap(),
        )
        .unwrap();
        let d = TraceSpec::scaled_basis(&s, Coef::parse("1/n").unwrap());
        assert_eq!(tau_null(&d, &d, &ws, 40).unwrap().status, Status::Pass);
    }

    #[test]
    fn refinement_with_order_unit() {
        let (k, l, t) = grid_pair(4);
        let u = SolidNbhd::new(&k, UnitSpec::ConstantOne, frac(1, 2)).unwrap();
        let v = SolidNbhd::new(&l, UnitSpec::ConstantOne, frac(1, 2)).unwrap();
        let w_un = SolidNbhd::new(
            &t,
            UnitSpec::tensor(UnitSpec::ConstantOne, UnitSpec::ConstantOne),
            frac(1, 2),
        )
        .unwrap();
        let rep = un_refinement_check(&w_un, &u, &v, 200, 5).unwrap();
        assert_eq!(rep.status, Status::Pass);
        for s in &rep.samples {
            assert!(s.value.value <= s.product);
            assert!(s.product < frac(1, 4));
        }
        let too_big = SolidNbhd::new(&k, UnitSpec::ConstantOne, int(1)).unwrap();
        assert!(matches!(
            un_refinement_check(&w_un, &too_big, &v, 1, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    /// With a unit below ε on one factor that factor's neighborhood is the
    /// whole space, and `Sol(U⊗V)` escapes the un-neighborhood.
    #[test]
    fn refinement_fails_for_small_units() {
        let k = Space::numbered_grid("K", 1).unwrap();
        let t = Space::tensor("T", &k, &k).unwrap();
        let big = UnitSpec::Explicit(Element::from_ints(&k, &[10]).unwrap());
        let small = UnitSpec::Explicit(Element::from_fracs(&k, &[(1, 10)]).unwrap());
        let u = SolidNbhd::new(&k, big.clone(), frac(1, 4)).unwrap();
        let v = SolidNbhd::new(&k, small.clone(), frac(1, 4)).unwrap();
        let w_un = SolidNbhd::new(&t, UnitSpec::tensor(big, small), frac(1, 4)).unwrap();
        let x = Element::from_fracs(&k, &[(1, 10)]).unwrap();
        let y = Element::from_ints(&k, &[10]).unwrap();
        assert!(u.contains(&x).unwrap() && v.contains(&y).unwrap());
        let z = fremlin::tensor(&t, &x, &y).unwrap();
        assert!(!w_un.contains(&z).unwrap());
    }
}
