//! Brute-force ground truth: exhaustive rank-1 domination search and
//! exhaustive or seeded-random identity audits on small rational grids.
//!
//! The enumeration works on raw rationals, independently of the other
//! modules; every reported witness is re-checked through them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::fremlin::{self, Certificate, Rank1Witness};
use crate::rational::{self, Rational};
use crate::space::{Index, NormTag, Space, SpaceKind, SpaceRef};
use crate::topology::SolidNbhd;
use crate::unit::{self, UnitSpec};
use crate::verdict::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimId {
    WedgeEquality,
    WedgeLowerBound,
    MixedUpperBound,
    Dichotomy,
    CrossNorm,
    DisjointnessPreservation,
    RefinementInclusion,
}

impl ClaimId {
    pub const ALL: [ClaimId; 7] = [
        ClaimId::WedgeEquality,
        ClaimId::WedgeLowerBound,
        ClaimId::MixedUpperBound,
        ClaimId::Dichotomy,
        ClaimId::CrossNorm,
        ClaimId::DisjointnessPreservation,
        ClaimId::RefinementInclusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::WedgeEquality => "wedge_equality",
            ClaimId::WedgeLowerBound => "wedge_lower_bound",
            ClaimId::MixedUpperBound => "mixed_upper_bound",
            ClaimId::Dichotomy => "dichotomy",
            ClaimId::CrossNorm => "cross_norm",
            ClaimId::DisjointnessPreservation => "disjointness_preservation",
            ClaimId::RefinementInclusion => "refinement_inclusion",
        }
    }

    /// The statement being audited.
    pub fn statement(self) -> &'static str {
        match self {
            ClaimId::WedgeEquality => "(a⊗b)∧(c⊗d) = (a∧c)⊗(b∧d)",
            ClaimId::WedgeLowerBound => "(a∧c)⊗(b∧d) ≤ (a⊗b)∧(c⊗d)",
            ClaimId::MixedUpperBound => "(a⊗b)∧(c⊗d) ≤ (a∧c)⊗(b∨d)",
            ClaimId::Dichotomy => "a⊗b ≤ c⊗d implies a ≤ c or b ≤ d",
            ClaimId::CrossNorm => "‖x⊗y‖ = ‖x‖·‖y‖",
            ClaimId::DisjointnessPreservation => "x1 ⊥ x2 implies x1⊗y1 ⊥ x2⊗y2",
            ClaimId::RefinementInclusion => "‖|x|∧u‖ < ε and ‖|y|∧v‖ < ε imply ‖(|x|⊗|y|)∧(u⊗v)‖ < ε",
        }
    }

    /// Outcome the audit is expected to produce on the default grid.
    pub fn expected(self) -> AuditStatus {
        match self {
            ClaimId::WedgeEquality | ClaimId::RefinementInclusion => AuditStatus::Falsified,
            _ => AuditStatus::VerifiedOnSpace,
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown claim `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuditStatus {
    VerifiedOnSpace,
    Falsified,
}

impl AuditStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditStatus::VerifiedOnSpace => "verified-on-space",
            AuditStatus::Falsified => "falsified",
        }
    }
}

impl fmt::Display for AuditStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verified-on-space" | "verified" => Ok(AuditStatus::VerifiedOnSpace),
            "falsified" => Ok(AuditStatus::Falsified),
            other => Err(Error::Parse(format!("unknown audit status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMode {
    Exhaustive,
    Randomized { trials: u64, seed: u64 },
}

impl AuditMode {
    fn to_json(self) -> Value {
        match self {
            AuditMode::Exhaustive => json!({"kind": "exhaustive"}),
            AuditMode::Randomized { trials, seed } => json!({"kind": "randomized", "trials": trials, "seed": seed}),
        }
    }
}

pub const DEFAULT_CAP: u128 = 1_000_000_000_000;

pub fn default_values() -> Vec<Rational> {
    (0..=4).map(|k| rational::frac(k, 2)).collect()
}

/// Thresholds used by the refinement claim.
pub fn default_eps() -> Vec<Rational> {
    vec![rational::frac(1, 4), rational::frac(1, 2), rational::frac(9, 10)]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditClaim {
    pub id: ClaimId,
    /// Nonnegative value grid; signed claims use its symmetric closure.
    pub values: Vec<Rational>,
    /// Factor dimensions `(|K|, |L|)`.
    pub dims: Vec<(usize, usize)>,
    pub eps: Vec<Rational>,
    pub mode: AuditMode,
    /// Largest raw search space an exhaustive audit may enumerate.
    pub cap: u128,
}

impl AuditClaim {
    pub fn exhaustive(id: ClaimId) -> Self {
        AuditClaim {
            id,
            values: default_values(),
            dims: vec![(2, 2), (3, 3)],
            eps: default_eps(),
            mode: AuditMode::Exhaustive,
            cap: DEFAULT_CAP,
        }
    }

    pub fn randomized(id: ClaimId, trials: u64, seed: u64) -> Self {
        AuditClaim {
            mode: AuditMode::Randomized { trials, seed },
            ..Self::exhaustive(id)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(Signed::is_negative) {
            return Err(Error::InvalidConfig(
                "value grid must be nonempty and nonnegative".into(),
            ));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&(n, m)| n == 0 || m == 0) {
            return Err(Error::InvalidConfig("audit dimensions must be positive".into()));
        }
        if self.id == ClaimId::RefinementInclusion && (self.eps.is_empty() || self.eps.iter().any(|e| !e.is_positive()))
        {
            return Err(Error::InvalidConfig("refinement thresholds must be positive".into()));
        }
        if let AuditMode::Randomized { trials: 0, .. } = self.mode {
            return Err(Error::InvalidConfig("randomized audits need at least one trial".into()));
        }
        Ok(())
    }

    fn signed_values(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.values.iter().flat_map(|x| [-x.clone(), x.clone()]).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// A falsifying input with both sides of the claim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditWitness {
    pub dims: (usize, usize),
    pub inputs: Vec<(String, Vec<Rational>)>,
    pub eps: Option<Rational>,
    pub norm: Option<NormTag>,
    pub lhs: Value,
    pub rhs: Value,
}

impl AuditWitness {
    pub fn to_json(&self) -> Value {
        let inputs: serde_json::Map<String, Value> = self
            .inputs
            .iter()
            .map(|(k, v)| {
                (
                    k.clone(),
                    Value::Array(v.iter().map(|q| Value::String(rational::fmt(q))).collect()),
                )
            })
            .collect();
        let mut out = json!({
            "dims": [self.dims.0, self.dims.1],
            "inputs": inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
        });
        if let Some(e) = &self.eps {
            out["eps"] = Value::String(rational::fmt(e));
        }
        if let Some(n) = self.norm {
            out["norm"] = json!(n);
        }
        out
    }

    pub fn input(&self, name: &str) -> Option<&[Rational]> {
        self.inputs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditResult {
    pub claim_id: ClaimId,
    pub mode: AuditMode,
    pub status: AuditStatus,
    /// Input tuples examined (after hypothesis filtering).
    pub cases: u128,
    pub witnesses: Vec<AuditWitness>,
}

impl AuditResult {
    pub fn to_json(&self) -> Value {
        json!({
            "claim_id": self.claim_id.as_str(),
            "statement": self.claim_id.statement(),
            "mode": self.mode.to_json(),
            "status": self.status.as_str(),
            "cases": self.cases.to_string(),
            "witnesses": self.witnesses.iter().map(AuditWitness::to_json).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Re-validation through the primary modules.

struct Grids {
    k: SpaceRef,
    l: SpaceRef,
    t: SpaceRef,
}

fn grids(n: usize, m: usize) -> Result<Grids> {
    let k = Space::numbered_grid("K", n)?;
    let l = Space::numbered_grid("L", m)?;
    let t = Space::tensor("K⊗L", &k, &l)?;
    Ok(Grids { k, l, t })
}

fn seqs(norm: NormTag) -> Result<Grids> {
    let k = Space::seq("E", norm);
    let l = Space::seq("F", norm);
    let t = Space::tensor("E⊗F", &k, &l)?;
    Ok(Grids { k, l, t })
}

fn matrix_json(x: &Element) -> Value {
    match x.to_matrix() {
        Some(rows) => Value::Array(
            rows.iter()
                .map(|r| Value::Array(r.iter().map(|q| Value::String(rational::fmt(q))).collect()))
                .collect(),
        ),
        None => x.to_json(),
    }
}

fn norm_json(v: &crate::element::NormValue) -> Value {
    if v.squared {
        json!({"squared": rational::fmt(&v.value)})
    } else {
        Value::String(rational::fmt(&v.value))
    }
}

/// One instance of a claim evaluated exactly through lattice-core and
/// fremlin: whether it holds, and both sides.
pub fn evaluate(w: &AuditWitness, id: ClaimId) -> Result<(bool, Value, Value)> {
    let g = match w.norm {
        Some(NormTag::L1) | Some(NormTag::L2) => seqs(w.norm.unwrap())?,
        _ => grids(w.dims.0, w.dims.1)?,
    };
    let get = |name: &str, space: &SpaceRef| -> Result<Element> {
        let v = w
            .input(name)
            .ok_or_else(|| Error::Parse(format!("witness lacks input `{name}`")))?;
        Element::from_values(space, v)
    };
    Ok(match id {
        ClaimId::WedgeEquality | ClaimId::WedgeLowerBound | ClaimId::MixedUpperBound | ClaimId::Dichotomy => {
            let (a, b, c, d) = (get("a", &g.k)?, get("b", &g.l)?, get("c", &g.k)?, get("d", &g.l)?);
            match id {
                ClaimId::WedgeEquality => {
                    let r = fremlin::meet_of_elementary(&g.t, &a, &b, &c, &d)?;
                    (r.equal, matrix_json(&r.lhs), matrix_json(&r.rhs))
                }
                ClaimId::WedgeLowerBound => {
                    let r = fremlin::meet_of_elementary(&g.t, &a, &b, &c, &d)?;
                    (r.rhs.leq(&r.lhs)?, matrix_json(&r.rhs), matrix_json(&r.lhs))
                }
                ClaimId::MixedUpperBound => {
                    let lhs = fremlin::tensor(&g.t, &a, &b)?.inf(&fremlin::tensor(&g.t, &c, &d)?)?;
                    let rhs = fremlin::tensor(&g.t, &a.inf(&c)?, &b.sup(&d)?)?;
                    (
                        fremlin::mixed_bound_check(&g.t, &a, &b, &c, &d)?,
                        matrix_json(&lhs),
                        matrix_json(&rhs),
                    )
                }
                _ => {
                    let ab = fremlin::tensor(&g.t, &a, &b)?;
                    let cd = fremlin::tensor(&g.t, &c, &d)?;
                    let holds = match fremlin::dominance_dichotomy(&g.t, &a, &b, &c, &d) {
                        Ok(r) => r.a_le_c || r.b_le_d,
                        Err(Error::DominationFailure { .. }) => true,
                        Err(e) => return Err(e),
                    };
                    (holds, matrix_json(&ab), matrix_json(&cd))
                }
            }
        }
        ClaimId::CrossNorm => {
            let (x, y) = (get("x", &g.k)?, get("y", &g.l)?);
            let lhs = fremlin::tensor(&g.t, &x, &y)?.norm();
            let (nx, ny) = (x.norm(), y.norm());
            let rhs = crate::element::NormValue {
                value: &nx.value * &ny.value,
                squared: nx.squared,
            };
            (lhs == rhs, norm_json(&lhs), norm_json(&rhs))
        }
        ClaimId::DisjointnessPreservation => {
            let (x1, x2, y1, y2) = (get("x1", &g.k)?, get("x2", &g.k)?, get("y1", &g.l)?, get("y2", &g.l)?);
            let p = fremlin::tensor(&g.t, &x1, &y1)?;
            let q = fremlin::tensor(&g.t, &x2, &y2)?;
            let meet = p.abs().inf(&q.abs())?;
            let holds = !x1.disjoint(&x2)? || p.disjoint(&q)?;
            (holds, matrix_json(&meet), matrix_json(&Element::zero(&g.t)))
        }
        ClaimId::RefinementInclusion => {
            let eps = w
                .eps
                .clone()
                .ok_or_else(|| Error::Parse("refinement witness needs `eps`".into()))?;
            let (x, u, y, v) = (get("x", &g.k)?, get("u", &g.k)?, get("y", &g.l)?, get("v", &g.l)?);
            if u.is_zero() || v.is_zero() {
                return Ok((true, Value::Null, Value::String(rational::fmt(&eps))));
            }
            let un = SolidNbhd::new(&g.k, UnitSpec::Explicit(u.clone()), eps.clone())?;
            let vn = SolidNbhd::new(&g.l, UnitSpec::Explicit(v.clone()), eps.clone())?;
            let z = fremlin::tensor(&g.t, &x.abs(), &y.abs())?;
            let val = unit::rho(&z, &UnitSpec::tensor(un.unit.clone(), vn.unit.clone()))?;
            let hyp = un.contains(&x)? && vn.contains(&y)?;
            (
                !hyp || val.lt(&eps),
                norm_json(&val),
                Value::String(rational::fmt(&eps)),
            )
        }
    })
}

fn revalidated(mut w: AuditWitness, id: ClaimId) -> Result<AuditWitness> {
    let (holds, lhs, rhs) = evaluate(&w, id)?;
    if holds {
        return Err(Error::Precondition(format!("{id} witness did not re-validate")));
    }
    w.lhs = lhs;
    w.rhs = rhs;
    Ok(w)
}

/// `a=(2,1), b=(1,3), c=(1,2), d=(2,1)` on 2×2 grids.
pub fn bundled_wedge_witness() -> Result<AuditWitness> {
    let v = |xs: &[i64]| xs.iter().map(|&k| rational::int(k)).collect::<Vec<_>>();
    let w = AuditWitness {
        dims: (2, 2),
        inputs: vec![
            ("a".into(), v(&[2, 1])),
            ("b".into(), v(&[1, 3])),
            ("c".into(), v(&[1, 2])),
            ("d".into(), v(&[2, 1])),
        ],
        eps: None,
        norm: None,
        lhs: Value::Null,
        rhs: Value::Null,
    };
    revalidated(w, ClaimId::WedgeEquality)
}

// ---------------------------------------------------------------------------
// Exhaustive engine.
//
// Claims over four vectors split into a left pair (entries i) and a right
// pair (entries j), and their entrywise part depends only on the values at
// (i, j). A left tuple is summarized by the set of right pair-values that
// would make some entry bad; a right tuple by the set of pair-values it
// uses. Tuples with equal summaries are interchangeable.

type Pair = (Rational, Rational);
type EntryTest<'a> = &'a dyn Fn(&Pair, &Pair) -> bool;
type TupleFilter<'a> = &'a dyn Fn(&[&Pair]) -> bool;
/// Left and right index tuples of a violation.
type Hit = (Vec<usize>, Vec<usize>);

#[derive(Clone, Copy, PartialEq, Eq)]
enum Seek {
    /// A violation is some bad entry.
    AnyBad,
    /// A violation is a filtered tuple with no bad entry.
    NoBad,
}

struct Engine<'a> {
    pairs: Vec<Pair>,
    bad: &'a dyn Fn(&Pair, &Pair) -> bool,
    left_ok: &'a dyn Fn(&[&Pair]) -> bool,
    right_ok: &'a dyn Fn(&[&Pair]) -> bool,
    seek: Seek,
}

fn for_each_tuple(p: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut t = vec![0usize; len];
    loop {
        f(&t);
        let mut k = len;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            t[k] += 1;
            if t[k] < p {
                break;
            }
            t[k] = 0;
        }
    }
}

impl Engine<'_> {
    /// Lexicographic-first violating `(left, right)` tuple, and the number of
    /// filtered cases examined.
    fn run(&self, n: usize, m: usize) -> (u128, Option<Hit>) {
        let p = self.pairs.len();
        assert!(p <= 128, "pair grid too large for the mask engine");
        let rows: Vec<u128> = self
            .pairs
            .iter()
            .map(|l| {
                self.pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| (self.bad)(l, r))
                    .fold(0u128, |acc, (k, _)| acc | (1u128 << k))
            })
            .collect();
        let mut left: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
        let mut left_count = 0u128;
        for_each_tuple(p, n, |t| {
            let vals: Vec<&Pair> = t.iter().map(|&k| &self.pairs[k]).collect();
            if (self.left_ok)(&vals) {
                left_count += 1;
                let mask = t.iter().fold(0u128, |acc, &k| acc | rows[k]);
                left.entry(mask).or_insert_with(|| t.to_vec());
            }
        });
        let mut right: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
        let mut right_count = 0u128;
        for_each_tuple(p, m, |t| {
            let vals: Vec<&Pair> = t.iter().map(|&k| &self.pairs[k]).collect();
            if (self.right_ok)(&vals) {
                right_count += 1;
                let used = t.iter().fold(0u128, |acc, &k| acc | (1u128 << k));
                right.entry(used).or_insert_with(|| t.to_vec());
            }
        });
        let violates = |mask: u128, used: u128| match self.seek {
            Seek::AnyBad => mask & used != 0,
            Seek::NoBad => mask & used == 0,
        };
        let mut best: Option<Hit> = None;
        for (&mask, lt) in &left {
            if best.as_ref().is_some_and(|(bl, _)| bl <= lt) {
                continue;
            }
            let rt = right
                .iter()
                .filter(|(&used, _)| violates(mask, used))
                .map(|(_, rt)| rt)
                .min();
            if let Some(rt) = rt {
                best = Some((lt.clone(), rt.clone()));
            }
        }
        (left_count * right_count, best)
    }
}

fn split(pairs: &[Pair], t: &[usize]) -> (Vec<Rational>, Vec<Rational>) {
    t.iter().map(|&k| pairs[k].clone()).unzip()
}

fn pair_grid(values: &[Rational]) -> Vec<Pair> {
    values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a.clone(), b.clone())))
        .collect()
}

fn space_size(p: usize, n: usize, m: usize) -> Option<u128> {
    (p as u128).checked_pow((n + m) as u32)
}

fn check_cap(size: Option<u128>, cap: u128) -> Result<()> {
    match size {
        Some(s) if s <= cap => Ok(()),
        Some(s) => Err(Error::SearchSpaceOverflow { size: s, cap }),
        None => Err(Error::SearchSpaceOverflow { size: u128::MAX, cap }),
    }
}

fn min_r(a: &Rational, b: &Rational) -> Rational {
    rational::min(a, b)
}

/// Names of the four inputs, as (left-pair, right-pair) components.
fn input_names(id: ClaimId) -> [&'static str; 4] {
    match id {
        ClaimId::DisjointnessPreservation => ["x1", "x2", "y1", "y2"],
        ClaimId::RefinementInclusion => ["x", "u", "y", "v"],
        _ => ["a", "c", "b", "d"],
    }
}

fn engine_witness(
    id: ClaimId,
    pairs: &[Pair],
    dims: (usize, usize),
    lt: &[usize],
    rt: &[usize],
    eps: Option<Rational>,
) -> AuditWitness {
    let names = input_names(id);
    let (l1, l2) = split(pairs, lt);
    let (r1, r2) = split(pairs, rt);
    let mut inputs = vec![
        (names[0].to_string(), l1),
        (names[2].to_string(), r1),
        (names[1].to_string(), l2),
        (names[3].to_string(), r2),
    ];
    if id == ClaimId::RefinementInclusion {
        inputs.swap(1, 2);
    }
    AuditWitness {
        dims,
        inputs,
        eps,
        norm: None,
        lhs: Value::Null,
        rhs: Value::Null,
    }
}

fn exhaustive_engine(claim: &AuditClaim) -> Result<(u128, Option<AuditWitness>)> {
    let id = claim.id;
    let values = if id == ClaimId::DisjointnessPreservation {
        claim.signed_values()
    } else {
        claim.values.clone()
    };
    let pairs = pair_grid(&values);
    let eps_list: Vec<Option<Rational>> = if id == ClaimId::RefinementInclusion {
        claim.eps.iter().cloned().map(Some).collect()
    } else {
        vec![None]
    };
    for &(n, m) in &claim.dims {
        check_cap(
            space_size(pairs.len(), n, m).map(|s| s * eps_list.len() as u128),
            claim.cap,
        )?;
    }
    let mut cases = 0u128;
    for &(n, m) in &claim.dims {
        for eps in &eps_list {
            let e = eps.clone().unwrap_or_else(Rational::zero);
            let any = |_: &[&Pair]| true;
            let not_below = |v: &[&Pair]| v.iter().any(|(a, c)| a > c);
            let disjoint = |v: &[&Pair]| v.iter().all(|(a, c)| a.is_zero() || c.is_zero());
            let inside = |v: &[&Pair]| v.iter().any(|(_, u)| !u.is_zero()) && v.iter().all(|(x, u)| min_r(x, u) < e);
            let bad_wedge_eq = |(a, c): &Pair, (b, d): &Pair| min_r(&(a * b), &(c * d)) != min_r(a, c) * min_r(b, d);
            let bad_lower = |(a, c): &Pair, (b, d): &Pair| min_r(a, c) * min_r(b, d) > min_r(&(a * b), &(c * d));
            let bad_mixed =
                |(a, c): &Pair, (b, d): &Pair| min_r(&(a * b), &(c * d)) > min_r(a, c) * rational::max(b, d);
            let bad_hyp = |(a, c): &Pair, (b, d): &Pair| a * b > c * d;
            let bad_disj = |(x1, x2): &Pair, (y1, y2): &Pair| !min_r(&(x1 * y1).abs(), &(x2 * y2).abs()).is_zero();
            let bad_refine = |(x, u): &Pair, (y, v): &Pair| min_r(&(x * y), &(u * v)) >= e;
            let (bad, lf, rf, seek): (EntryTest, TupleFilter, TupleFilter, Seek) = match id {
                ClaimId::WedgeEquality => (&bad_wedge_eq, &any, &any, Seek::AnyBad),
                ClaimId::WedgeLowerBound => (&bad_lower, &any, &any, Seek::AnyBad),
                ClaimId::MixedUpperBound => (&bad_mixed, &any, &any, Seek::AnyBad),
                ClaimId::Dichotomy => (&bad_hyp, &not_below, &not_below, Seek::NoBad),
                ClaimId::DisjointnessPreservation => (&bad_disj, &disjoint, &any, Seek::AnyBad),
                ClaimId::RefinementInclusion => (&bad_refine, &inside, &inside, Seek::AnyBad),
                ClaimId::CrossNorm => unreachable!("cross norm is enumerated directly"),
            };
            let engine = Engine {
                pairs: pairs.clone(),
                bad,
                left_ok: lf,
                right_ok: rf,
                seek,
            };
            let (c, found) = engine.run(n, m);
            cases += c;
            if let Some((lt, rt)) = found {
                let w = engine_witness(id, &pairs, (n, m), &lt, &rt, eps.clone());
                return Ok((cases, Some(revalidated(w, id)?)));
            }
        }
    }
    Ok((cases, None))
}

fn oracle_norm(x: &[Rational], tag: NormTag) -> Rational {
    match tag {
        NormTag::Sup => x.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero),
        NormTag::L1 => x.iter().map(|v| v.abs()).sum(),
        NormTag::L2 => x.iter().map(|v| v * v).sum(),
    }
}

fn exhaustive_cross_norm(claim: &AuditClaim) -> Result<(u128, Option<AuditWitness>)> {
    let values = claim.signed_values();
    let p = values.len();
    for &(n, m) in &claim.dims {
        check_cap(space_size(p, n, m).map(|s| s * 3), claim.cap)?;
    }
    let mut cases = 0u128;
    for &(n, m) in &claim.dims {
        for tag in [NormTag::Sup, NormTag::L1, NormTag::L2] {
            let g = if tag == NormTag::Sup { grids(n, m)? } else { seqs(tag)? };
            let mut xs = Vec::new();
            for_each_tuple(p, n, |t| {
                xs.push(t.iter().map(|&k| values[k].clone()).collect::<Vec<_>>())
            });
            let mut ys = Vec::new();
            for_each_tuple(p, m, |t| {
                ys.push(t.iter().map(|&k| values[k].clone()).collect::<Vec<_>>())
            });
            let ey = ys
                .iter()
                .map(|y| Element::from_values(&g.l, y))
                .collect::<Result<Vec<_>>>()?;
            for x in &xs {
                let ex = Element::from_values(&g.k, x)?;
                let nx = oracle_norm(x, tag);
                for (y, e) in ys.iter().zip(&ey) {
                    cases += 1;
                    let lhs = fremlin::tensor(&g.t, &ex, e)?.norm();
                    if lhs.value != &nx * oracle_norm(y, tag) {
                        let w = AuditWitness {
                            dims: (n, m),
                            inputs: vec![("x".into(), x.clone()), ("y".into(), y.clone())],
                            eps: None,
                            norm: Some(tag),
                            lhs: Value::Null,
                            rhs: Value::Null,
                        };
                        return Ok((cases, Some(revalidated(w, ClaimId::CrossNorm)?)));
                    }
                }
            }
        }
    }
    Ok((cases, None))
}

// ---------------------------------------------------------------------------
// Randomized mode.

fn random_value(rng: &mut ChaCha8Rng, max: &Rational, signed: bool) -> Rational {
    let den: i64 = rng.gen_range(1..=4);
    let top = (max * Rational::from_integer(den.into())).floor().to_integer();
    let top: i64 = top.try_into().unwrap_or(8);
    let num = rng.gen_range(0..=top.max(0));
    let v = rational::frac(num, den);
    if signed && rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

fn random_instance(claim: &AuditClaim, rng: &mut ChaCha8Rng) -> AuditWitness {
    let (n, m) = claim.dims[rng.gen_range(0..claim.dims.len())];
    let max = claim.values.iter().max().cloned().unwrap_or_else(rational::one);
    let signed = matches!(claim.id, ClaimId::CrossNorm | ClaimId::DisjointnessPreservation);
    let vec = |len: usize, rng: &mut ChaCha8Rng| (0..len).map(|_| random_value(rng, &max, signed)).collect::<Vec<_>>();
    let (inputs, eps, norm) = match claim.id {
        ClaimId::CrossNorm => {
            let tag = [NormTag::Sup, NormTag::L1, NormTag::L2][rng.gen_range(0..3)];
            (
                vec![("x".into(), vec(n, rng)), ("y".into(), vec(m, rng))],
                None,
                Some(tag),
            )
        }
        ClaimId::DisjointnessPreservation => {
            let x1 = vec(n, rng);
            let x2 = x1
                .iter()
                .map(|v| {
                    if v.is_zero() {
                        random_value(rng, &max, true)
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            (
                vec![
                    ("x1".into(), x1),
                    ("y1".into(), vec(m, rng)),
                    ("x2".into(), x2),
                    ("y2".into(), vec(m, rng)),
                ],
                None,
                None,
            )
        }
        ClaimId::RefinementInclusion => {
            let eps = claim.eps[rng.gen_range(0..claim.eps.len())].clone();
            (
                vec![
                    ("x".into(), vec(n, rng)),
                    ("u".into(), vec(n, rng)),
                    ("y".into(), vec(m, rng)),
                    ("v".into(), vec(m, rng)),
                ],
                Some(eps),
                None,
            )
        }
        _ => (
            vec![
                ("a".into(), vec(n, rng)),
                ("b".into(), vec(m, rng)),
                ("c".into(), vec(n, rng)),
                ("d".into(), vec(m, rng)),
            ],
            None,
            None,
        ),
    };
    AuditWitness {
        dims: (n, m),
        inputs,
        eps,
        norm,
        lhs: Value::Null,
        rhs: Value::Null,
    }
}

fn randomized(claim: &AuditClaim, trials: u64, seed: u64) -> Result<(u128, Option<AuditWitness>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let w = random_instance(claim, &mut rng);
        let (holds, lhs, rhs) = evaluate(&w, claim.id)?;
        if !holds {
            return Ok((t as u128 + 1, Some(AuditWitness { lhs, rhs, ..w })));
        }
    }
    Ok((trials as u128, None))
}

/// Runs one claim. Exhaustive mode enumerates the full value grid and stops
/// at the lexicographically first violation; randomized mode draws seeded
/// tuples of rationals with denominators up to 4.
pub fn audit(claim: &AuditClaim) -> Result<AuditResult> {
    claim.validate()?;
    let (cases, witness) = match claim.mode {
        AuditMode::Exhaustive if claim.id == ClaimId::CrossNorm => exhaustive_cross_norm(claim)?,
        AuditMode::Exhaustive => exhaustive_engine(claim)?,
        AuditMode::Randomized { trials, seed } => randomized(claim, trials, seed)?,
    };
    Ok(AuditResult {
        claim_id: claim.id,
        mode: claim.mode,
        status: if witness.is_some() {
            AuditStatus::Falsified
        } else {
            AuditStatus::VerifiedOnSpace
        },
        cases,
        witnesses: witness.into_iter().collect(),
    })
}

// ---------------------------------------------------------------------------
// Rank-1 domination.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominatorVerdict {
    pub status: Status,
    pub witness: Option<Rank1Witness>,
    /// Present on failure: exhaustion at the stated resolution, not a proof.
    pub certificate: Option<Certificate>,
    /// Grid points of `b` considered.
    pub grid_points: u128,
}

impl DominatorVerdict {
    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status,
            "witness": self.witness.as_ref().map(Rank1Witness::to_json),
            "certificate": self.certificate.as_ref().map(Certificate::to_json),
            "grid_points": self.grid_points.to_string(),
        })
    }
}

fn finite_dims(space: &SpaceRef) -> Result<usize> {
    match &space.kind {
        SpaceKind::FiniteGrid { points } => Ok(points.len()),
        _ => Err(Error::NonFiniteFactor),
    }
}

/// Searches `b` over the `r`-grid `{r, 2r, …, B}` on the active columns of
/// `M`, with `B = ⌈max(1, max M, max active v_j)⌉`, taking for each `b` the
/// least `a` with `a⊗b ≥ M`. Grid seminorms are sup-norms, so both
/// neighborhood constraints split into per-column conditions and the search
/// backtracks column by column.
pub fn brute_force_dominator(m: &Element, u: &SolidNbhd, v: &SolidNbhd, r: &Rational) -> Result<DominatorVerdict> {
    if !r.is_positive() {
        return Err(Error::InvalidConfig("resolution must be positive".into()));
    }
    let target = m.space().clone();
    let (l, rt) = target
        .factors()
        .ok_or_else(|| Error::UnregisteredTensor(target.id.clone()))?;
    let (n, k) = (finite_dims(l)?, finite_dims(rt)?);
    l.check_same(&u.space)?;
    rt.check_same(&v.space)?;
    if !m.is_nonneg() {
        return Err(Error::NegativeInput("M".into()));
    }
    if m.is_zero() {
        return Ok(DominatorVerdict {
            status: Status::Pass,
            witness: Some(Rank1Witness {
                a: Element::zero(l),
                b: Element::zero(rt),
            }),
            certificate: None,
            grid_points: 1,
        });
    }
    let mat = m.to_matrix().expect("finite grid");
    let uvals = (1..=n as u32)
        .map(|i| u.unit.value_at(l, Index::At(i)))
        .collect::<Result<Vec<_>>>()?;
    let vvals = (1..=k as u32)
        .map(|j| v.unit.value_at(rt, Index::At(j)))
        .collect::<Result<Vec<_>>>()?;
    let active: Vec<usize> = (0..k).filter(|&j| mat.iter().any(|row| !row[j].is_zero())).collect();
    let mut bound = rational::one();
    for row in &mat {
        for x in row {
            bound = rational::max(&bound, x);
        }
    }
    for &j in &active {
        bound = rational::max(&bound, &vvals[j]);
    }
    let bound = bound.ceil();
    let steps: i64 = (&bound / r).floor().to_integer().try_into().unwrap_or(i64::MAX);
    let grid: Vec<Rational> = (1..=steps).map(|s| r * rational::int(s)).collect();

    // Per column, the b_j values keeping column j inside both constraints:
    // min(b_j, v_j) < ε_V and min(M_ij / b_j, u_i) < ε_U for every row i.
    let feasible: Vec<Vec<Rational>> = active
        .iter()
        .map(|&j| {
            grid.iter()
                .filter(|b| min_r(b, &vvals[j]) < v.eps && (0..n).all(|i| min_r(&(&mat[i][j] / *b), &uvals[i]) < u.eps))
                .cloned()
                .collect()
        })
        .collect();
    let grid_points = (grid.len() as u128).saturating_pow(active.len() as u32);
    // Backtracking finds the lexicographically first assignment; with every
    // condition per-column it is the first feasible value of each column.
    if feasible.iter().any(Vec::is_empty) {
        return Ok(DominatorVerdict {
            status: Status::Fail,
            witness: None,
            certificate: Some(Certificate::oracle(r.clone())),
            grid_points,
        });
    }
    let mut bvals = vec![Rational::zero(); k];
    for (slot, &j) in active.iter().enumerate() {
        bvals[j] = feasible[slot][0].clone();
    }
    let mut avals = vec![Rational::zero(); n];
    for (i, row) in mat.iter().enumerate() {
        for &j in &active {
            let q = &row[j] / &bvals[j];
            if q > avals[i] {
                avals[i] = q;
            }
        }
    }
    let w = Rank1Witness {
        a: Element::from_values(l, &avals)?,
        b: Element::from_values(rt, &bvals)?,
    };
    if !w.validates(m, u, v)? {
        return Err(Error::Precondition("oracle witness failed re-validation".into()));
    }
    Ok(DominatorVerdict {
        status: Status::Pass,
        witness: Some(w),
        certificate: None,
        grid_points,
    })
}

/// A random instance for comparing `sol_membership` against the oracle:
/// grids up to 4×4, at most three active columns.
#[derive(Debug, Clone)]
pub struct MembershipInstance {
    pub z: Element,
    pub u: SolidNbhd,
    pub v: SolidNbhd,
}

pub fn random_membership_instance(rng: &mut ChaCha8Rng) -> Result<MembershipInstance> {
    let (n, k) = (rng.gen_range(1..=4usize), rng.gen_range(1..=4usize));
    let g = grids(n, k)?;
    let entries = [(0, 1), (1, 100), (1, 20), (1, 10), (1, 4), (1, 2), (1, 1)];
    let cols: Vec<u32> = (1..=k as u32).filter(|_| rng.gen_bool(0.6)).take(3).collect();
    let mut coords = Vec::new();
    for i in 1..=n as u32 {
        for &j in &cols {
            let (p, q) = entries[rng.gen_range(0..entries.len())];
            let sign = if rng.gen_bool(0.5) { -1 } else { 1 };
            coords.push((Index::Pair(i, j), rational::frac(sign * p, q)));
        }
    }
    let z = Element::new(&g.t, coords, Rational::zero())?;
    let unit_choices = [(1, 4), (1, 2), (1, 1), (2, 1)];
    let nbhd = |space: &SpaceRef, dim: usize, rng: &mut ChaCha8Rng| -> Result<SolidNbhd> {
        let unit = if rng.gen_bool(0.5) {
            UnitSpec::ConstantOne
        } else {
            let vals: Vec<Rational> = (0..dim)
                .map(|_| {
                    let (p, q) = unit_choices[rng.gen_range(0..unit_choices.len())];
                    rational::frac(p, q)
                })
                .collect();
            UnitSpec::Explicit(Element::from_values(space, &vals)?)
        };
        let eps = [(1, 10), (1, 4), (1, 2), (1, 1)][rng.gen_range(0..4)];
        SolidNbhd::new(space, unit, rational::frac(eps.0, eps.1))
    };
    let u = nbhd(&g.k, n, rng)?;
    let v = nbhd(&g.l, k, rng)?;
    Ok(MembershipInstance { z, u, v })
}
