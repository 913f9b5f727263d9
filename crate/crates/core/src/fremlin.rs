//! Elementary tensors on entrywise ordered grids and rank-1 domination.
//!
//! For finite grids the algebraic tensor product already fills the whole
//! grid, so the Fremlin product is the grid itself with the entrywise order.
//! Membership in `Sol(U⊗V)` asks for `a ∈ U₊`, `b ∈ V₊` with `|z| ≤ a⊗b`.
//! That is a nonconvex feasibility question, so the search answers in three
//! values and only reports answers it can certify.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde_json::{json, Value};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::space::{Index, SpaceRef};
use crate::topology::SolidNbhd;
use crate::verdict::Status;

fn factors_of(target: &SpaceRef) -> Result<(&SpaceRef, &SpaceRef)> {
    target
        .factors()
        .ok_or_else(|| Error::UnregisteredTensor(target.id.clone()))
}

fn check_factors(target: &SpaceRef, x: &Element, y: &Element) -> Result<()> {
    let (l, r) = factors_of(target)?;
    if !l.same(x.space()) || !r.same(y.space()) {
        return Err(Error::UnregisteredTensor(format!(
            "{} is not {}⊗{}",
            target.id,
            x.space().id,
            y.space().id
        )));
    }
    Ok(())
}

fn require_nonneg(name: &str, x: &Element) -> Result<()> {
    if x.is_nonneg() {
        Ok(())
    } else {
        Err(Error::NegativeInput(format!("{name} = {x:?}")))
    }
}

/// `(x⊗y)(i,j) = x_i·y_j`.
///
/// Products of elements with nonzero tails are representable only when both
/// factors are constant; anything else is rejected as unrepresentable.
pub fn tensor(target: &SpaceRef, x: &Element, y: &Element) -> Result<Element> {
    check_factors(target, x, y)?;
    if x.is_zero() || y.is_zero() {
        return Ok(Element::zero(target));
    }
    match (x.tail().is_zero(), y.tail().is_zero()) {
        (true, true) => {
            let mut coords = Vec::with_capacity(x.coords().len() * y.coords().len());
            for (i, xi) in x.coords() {
                for (j, yj) in y.coords() {
                    let (i, j) = (i.single().expect("factor index"), j.single().expect("factor index"));
                    coords.push((Index::Pair(i, j), xi * yj));
                }
            }
            Element::new(target, coords, Rational::zero())
        }
        (false, false) if x.coords().is_empty() && y.coords().is_empty() => {
            Element::new(target, [], x.tail() * y.tail())
        }
        _ => Err(Error::Unrepresentable),
    }
}

/// Writes `z` as a sum of elementary tensors, grouping proportional rows
/// (or columns, when that gives fewer terms).
pub fn decompose_elementary(z: &Element) -> Result<Vec<(Element, Element)>> {
    let target = z.space().clone();
    let (l, r) = factors_of(&target)?;
    if !l.is_finite() || !r.is_finite() {
        return Err(Error::NonFiniteFactor);
    }
    let rows = z.to_matrix().ok_or(Error::NonFiniteFactor)?;
    let by_rows = group_proportional(&rows);
    let cols = transpose(&rows);
    let by_cols = group_proportional(&cols);
    let mut pairs = Vec::new();
    if by_rows.len() <= by_cols.len() {
        for (coef, dir) in by_rows {
            pairs.push((Element::from_values(l, &coef)?, Element::from_values(r, &dir)?));
        }
    } else {
        for (coef, dir) in by_cols {
            pairs.push((Element::from_values(l, &dir)?, Element::from_values(r, &coef)?));
        }
    }
    Ok(pairs)
}

fn transpose(m: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Groups nonzero rows by direction. Each group is `(coefficients, direction)`
/// where the direction is the group's first row, so the first coefficient is 1.
fn group_proportional(rows: &[Vec<Rational>]) -> Vec<(Vec<Rational>, Vec<Rational>)> {
    let mut groups: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let Some(lead) = row.iter().position(|v| !v.is_zero()) else {
            continue;
        };
        let found = groups.iter_mut().find(|(_, dir)| {
            !dir[lead].is_zero() && {
                let c = &row[lead] / &dir[lead];
                dir.iter().zip(row).all(|(d, v)| &(d * &c) == v)
            }
        });
        match found {
            Some((coef, dir)) => coef[i] = &row[lead] / &dir[lead],
            None => {
                let mut coef = vec![Rational::zero(); rows.len()];
                coef[i] = rational::one();
                groups.push((coef, row.clone()));
            }
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WedgeAudit {
    /// `(a⊗b) ∧ (c⊗d)`
    pub lhs: Element,
    /// `(a∧c) ⊗ (b∧d)`
    pub rhs: Element,
    pub equal: bool,
}

/// Compares `(a⊗b)∧(c⊗d)` with `(a∧c)⊗(b∧d)`. Only `rhs ≤ lhs` holds in
/// general; `equal` records whether the two sides coincide for this input.
pub fn meet_of_elementary(target: &SpaceRef, a: &Element, b: &Element, c: &Element, d: &Element) -> Result<WedgeAudit> {
    for (n, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        require_nonneg(n, x)?;
    }
    let lhs = tensor(target, a, b)?.inf(&tensor(target, c, d)?)?;
    let rhs = tensor(target, &a.inf(c)?, &b.inf(d)?)?;
    let equal = lhs == rhs;
    Ok(WedgeAudit { lhs, rhs, equal })
}

/// `(a⊗b)∧(c⊗d) ≤ (a∧c)⊗(b∨d)`.
pub fn mixed_bound_check(target: &SpaceRef, a: &Element, b: &Element, c: &Element, d: &Element) -> Result<bool> {
    for (n, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        require_nonneg(n, x)?;
    }
    let lhs = tensor(target, a, b)?.inf(&tensor(target, c, d)?)?;
    let rhs = tensor(target, &a.inf(c)?, &b.sup(d)?)?;
    lhs.leq(&rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dichotomy {
    pub a_le_c: bool,
    pub b_le_d: bool,
}

/// Given `a⊗b ≤ c⊗d` with nonnegative factors, reports which of `a ≤ c`
/// and `b ≤ d` hold. At least one always does.
pub fn dominance_dichotomy(target: &SpaceRef, a: &Element, b: &Element, c: &Element, d: &Element) -> Result<Dichotomy> {
    for (n, x) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        require_nonneg(n, x)?;
    }
    let ab = tensor(target, a, b)?;
    let cd = tensor(target, c, d)?;
    if let Some(idx) = ab.first_excess(&cd)? {
        return Err(Error::DominationFailure {
            index: target.index_key(idx),
            lhs: ab.get(idx).to_string(),
            rhs: cd.get(idx).to_string(),
        });
    }
    Ok(Dichotomy {
        a_le_c: a.leq(c)?,
        b_le_d: b.leq(d)?,
    })
}

fn nonneg_finite(m: &Element) -> Result<()> {
    require_nonneg("M", m)?;
    if !m.tail().is_zero() {
        return Err(Error::Unrepresentable);
    }
    Ok(())
}

/// Least `a` with `a⊗b ≥ M` for this `b`: `a_i = max_j M_ij / b_j` over the
/// active columns, and 0 on zero rows.
pub fn minimal_dominator_given_b(m: &Element, b: &Element) -> Result<Element> {
    nonneg_finite(m)?;
    require_nonneg("b", b)?;
    let target = m.space().clone();
    let (l, r) = factors_of(&target)?;
    r.check_same(b.space())?;
    let mut a: BTreeMap<u32, Rational> = BTreeMap::new();
    for (idx, v) in m.coords() {
        let (i, j) = idx.pair().expect("tensor index");
        let bj = b.get(Index::At(j));
        if bj.is_zero() {
            return Err(Error::ZeroOnActiveColumn(r.index_key(Index::At(j))));
        }
        let q = v / bj;
        let slot = a.entry(i).or_insert_with(Rational::zero);
        if q > *slot {
            *slot = q;
        }
    }
    Element::new(l, a.into_iter().map(|(i, v)| (Index::At(i), v)), Rational::zero())
}

/// Mirror of [`minimal_dominator_given_b`]: least `b` with `a⊗b ≥ M`.
pub fn minimal_dominator_given_a(m: &Element, a: &Element) -> Result<Element> {
    nonneg_finite(m)?;
    require_nonneg("a", a)?;
    let target = m.space().clone();
    let (l, r) = factors_of(&target)?;
    l.check_same(a.space())?;
    let mut b: BTreeMap<u32, Rational> = BTreeMap::new();
    for (idx, v) in m.coords() {
        let (i, j) = idx.pair().expect("tensor index");
        let ai = a.get(Index::At(i));
        if ai.is_zero() {
            return Err(Error::ZeroOnActiveColumn(l.index_key(Index::At(i))));
        }
        let q = v / ai;
        let slot = b.entry(j).or_insert_with(Rational::zero);
        if q > *slot {
            *slot = q;
        }
    }
    Element::new(r, b.into_iter().map(|(j, v)| (Index::At(j), v)), Rational::zero())
}

/// A pair `(a, b)` proving `z ∈ Sol(U⊗V)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rank1Witness {
    pub a: Element,
    pub b: Element,
}

impl Rank1Witness {
    /// Exact re-check: `a, b ≥ 0`, `a ∈ U`, `b ∈ V`, `|z| ≤ a⊗b`.
    pub fn validates(&self, z: &Element, u: &SolidNbhd, v: &SolidNbhd) -> Result<bool> {
        if !self.a.is_nonneg() || !self.b.is_nonneg() {
            return Ok(false);
        }
        let ab = tensor(z.space(), &self.a, &self.b)?;
        Ok(u.contains(&self.a)? && v.contains(&self.b)? && z.abs().leq(&ab)?)
    }

    pub fn to_json(&self) -> Value {
        json!({"a": self.a.to_json(), "b": self.b.to_json()})
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Sound: a positive minorant `x1⊗y1 ≤ |z|` with `x1 ∉ U`, `y1 ∉ V`.
    Dichotomy,
    /// Exhaustion of the brute-force grid at a resolution; not a proof.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub x1: Option<Element>,
    pub y1: Option<Element>,
    pub resolution: Option<Rational>,
}

impl Certificate {
    pub fn dichotomy(x1: Element, y1: Element) -> Self {
        Certificate {
            kind: CertificateKind::Dichotomy,
            x1: Some(x1),
            y1: Some(y1),
            resolution: None,
        }
    }

    pub fn oracle(resolution: Rational) -> Self {
        Certificate {
            kind: CertificateKind::Oracle,
            x1: None,
            y1: None,
            resolution: Some(resolution),
        }
    }

    /// Exact re-check of a dichotomy certificate. Oracle certificates never
    /// validate as proofs.
    pub fn validates(&self, z: &Element, u: &SolidNbhd, v: &SolidNbhd) -> Result<bool> {
        let (Some(x1), Some(y1)) = (&self.x1, &self.y1) else {
            return Ok(false);
        };
        if self.kind != CertificateKind::Dichotomy || !x1.is_nonneg() || !y1.is_nonneg() {
            return Ok(false);
        }
        let t = tensor(z.space(), x1, y1)?;
        Ok(!t.is_zero() && t.leq(&z.abs())? && !u.contains(x1)? && !v.contains(y1)?)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": match self.kind {
                CertificateKind::Dichotomy => "dichotomy",
                CertificateKind::Oracle => "oracle",
            },
            "x1": self.x1.as_ref().map(Element::to_json),
            "y1": self.y1.as_ref().map(Element::to_json),
            "resolution": self.resolution.as_ref().map(rational::fmt),
        })
    }
}

fn sup_abs(x: &Element) -> Rational {
    x.coords()
        .values()
        .map(|v| v.abs())
        .fold(x.tail().abs(), |a, b| rational::max(&a, &b))
}

/// Candidate scales `s` for splitting a minorant `p⊗q` as `(s·p)⊗(q/s)`.
fn split_scales(p: &Element, q: &Element, u: &SolidNbhd, v: &SolidNbhd) -> Vec<Rational> {
    let (np, nq) = (sup_abs(p), sup_abs(q));
    let mut out = Vec::new();
    if np.is_zero() || nq.is_zero() {
        return out;
    }
    if let Some(s) = rational::exact_sqrt(&(&nq / &np)) {
        out.push(s);
    }
    out.push(&u.eps / &np);
    out.push(&nq / &v.eps);
    out.push(rational::one());
    for k in 1..=16u32 {
        let p2 = Rational::from_integer(num::BigInt::from(1u64 << k));
        out.push(p2.clone());
        out.push(rational::one() / p2);
    }
    out
}

/// Searches for `x1, y1 ≥ 0` with `0 < x1⊗y1 ≤ |z|`, `x1 ∉ U`, `y1 ∉ V`.
/// Any dominator `a⊗b ≥ |z|` then has `x1 ≤ a` or `y1 ≤ b`, and solidity
/// puts `x1` in `U` or `y1` in `V`, so such a pair proves `z ∉ Sol(U⊗V)`.
/// `None` means no conclusion.
pub fn non_membership_certificate(z: &Element, u: &SolidNbhd, v: &SolidNbhd) -> Result<Option<Certificate>> {
    if z.is_zero() {
        return Err(Error::ZeroElement);
    }
    let target = z.space().clone();
    let (l, r) = factors_of(&target)?;
    l.check_same(&u.space)?;
    r.check_same(&v.space)?;
    let m = z.abs();
    let mut entries: Vec<(u32, u32, Rational)> = m
        .coords()
        .iter()
        .filter(|(_, val)| val.is_positive())
        .map(|(idx, val)| {
            let (i, j) = idx.pair().expect("tensor index");
            (i, j, val.clone())
        })
        .collect();
    if m.tail().is_positive() {
        // Beyond every stored coordinate the grid is constant.
        let far = m
            .coords()
            .keys()
            .filter_map(|k| k.pair())
            .map(|(i, j)| i.max(j))
            .max()
            .unwrap_or(0)
            + 1;
        entries.push((far, far, m.tail().clone()));
    }
    // Larger entries first: they leave the most room for excluded factors.
    entries.sort_by(|x, y| y.2.cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));

    let mut shapes: Vec<(Element, Element)> = Vec::new();
    for (i, j, val) in &entries {
        shapes.push((
            Element::basis(l, *i)?,
            Element::new(r, [(Index::At(*j), val.clone())], Rational::zero())?,
        ));
    }
    if m.tail().is_zero() {
        let mut rows: BTreeMap<u32, Vec<(Index, Rational)>> = BTreeMap::new();
        let mut cols: BTreeMap<u32, Vec<(Index, Rational)>> = BTreeMap::new();
        for (idx, val) in m.coords() {
            let (i, j) = idx.pair().expect("tensor index");
            rows.entry(i).or_default().push((Index::At(j), val.clone()));
            cols.entry(j).or_default().push((Index::At(i), val.clone()));
        }
        for (j, col) in cols {
            shapes.push((Element::new(l, col, Rational::zero())?, Element::basis(r, j)?));
        }
        for (i, row) in rows {
            shapes.push((Element::basis(l, i)?, Element::new(r, row, Rational::zero())?));
        }
    }

    for (p, q) in &shapes {
        for s in split_scales(p, q, u, v) {
            let x1 = p.scale(&s);
            let y1 = q.scale(&(rational::one() / &s));
            if !u.contains(&x1)? && !v.contains(&y1)? {
                let cert = Certificate::dichotomy(x1, y1);
                if cert.validates(z, u, v)? {
                    return Ok(Some(cert));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Extra `b` shapes to try, e.g. suggested by an oracle.
    pub suggested_b: Vec<Element>,
    /// Bisection steps per shape.
    pub max_steps: u32,
    /// Doubling steps when bracketing the scale.
    pub max_doublings: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            suggested_b: Vec::new(),
            max_steps: 64,
            max_doublings: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipVerdict {
    pub status: Status,
    pub witness: Option<Rank1Witness>,
    pub certificate: Option<Certificate>,
}

impl MembershipVerdict {
    pub fn member(w: Rank1Witness) -> Self {
        MembershipVerdict {
            status: Status::Pass,
            witness: Some(w),
            certificate: None,
        }
    }

    pub fn non_member(c: Certificate) -> Self {
        MembershipVerdict {
            status: Status::Fail,
            witness: None,
            certificate: Some(c),
        }
    }

    pub fn inconclusive() -> Self {
        MembershipVerdict {
            status: Status::Inconclusive,
            witness: None,
            certificate: None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status,
            "witness": self.witness.as_ref().map(Rank1Witness::to_json),
            "certificate": self.certificate.as_ref().map(Certificate::to_json),
        })
    }
}

enum Probe {
    Both,
    /// `a/t ∉ U`: the scale is too small.
    TooSmall,
    /// `t·b ∉ V`: the scale is too large.
    TooLarge,
    Neither,
}

fn probe(a: &Element, b: &Element, t: &Rational, u: &SolidNbhd, v: &SolidNbhd) -> Result<Probe> {
    let in_u = u.contains(&a.scale(&(rational::one() / t)))?;
    let in_v = v.contains(&b.scale(t))?;
    Ok(match (in_u, in_v) {
        (true, true) => Probe::Both,
        (false, true) => Probe::TooSmall,
        (true, false) => Probe::TooLarge,
        (false, false) => Probe::Neither,
    })
}

/// Looks for `t > 0` with `a/t ∈ U` and `t·b ∈ V`. The first condition is
/// monotone increasing in `t`, the second decreasing, so a bracket plus exact
/// bisection either finds `t` or shows none exists for this shape.
fn scale_search(
    a: &Element,
    b: &Element,
    u: &SolidNbhd,
    v: &SolidNbhd,
    opts: &SearchOptions,
) -> Result<Option<Rational>> {
    let two = rational::int(2);
    let mut t = rational::one();
    let (na, nb) = (sup_abs(a), sup_abs(b));
    if !na.is_zero() && !nb.is_zero() {
        if let Some(s) = rational::exact_sqrt(&(&na / &nb)) {
            t = s;
        }
    }
    let (mut lo, mut hi) = match probe(a, b, &t, u, v)? {
        Probe::Both => return Ok(Some(t)),
        Probe::Neither => return Ok(None),
        Probe::TooSmall => {
            let mut lo = t.clone();
            let mut found = None;
            for _ in 0..opts.max_doublings {
                let next = &lo * &two;
                match probe(a, b, &next, u, v)? {
                    Probe::Both => return Ok(Some(next)),
                    Probe::Neither => return Ok(None),
                    Probe::TooSmall => lo = next,
                    Probe::TooLarge => {
                        found = Some(next);
                        break;
                    }
                }
            }
            match found {
                Some(hi) => (lo, hi),
                None => return Ok(None),
            }
        }
        Probe::TooLarge => {
            let mut hi = t.clone();
            let mut found = None;
            for _ in 0..opts.max_doublings {
                let next = &hi / &two;
                match probe(a, b, &next, u, v)? {
                    Probe::Both => return Ok(Some(next)),
                    Probe::Neither => return Ok(None),
                    Probe::TooLarge => hi = next,
                    Probe::TooSmall => {
                        found = Some(next);
                        break;
                    }
                }
            }
            match found {
                Some(lo) => (lo, hi),
                None => return Ok(None),
            }
        }
    };
    for _ in 0..opts.max_steps {
        let mid = (&lo + &hi) / &two;
        match probe(a, b, &mid, u, v)? {
            Probe::Both => return Ok(Some(mid)),
            Probe::Neither => return Ok(None),
            Probe::TooSmall => lo = mid,
            Probe::TooLarge => hi = mid,
        }
    }
    Ok(None)
}

/// Decides `z ∈ Sol(U⊗V)` where it can: a re-validated witness on success,
/// a dichotomy certificate on failure, inconclusive otherwise.
pub fn sol_membership(z: &Element, u: &SolidNbhd, v: &SolidNbhd, opts: &SearchOptions) -> Result<MembershipVerdict> {
    let target = z.space().clone();
    let (l, r) = factors_of(&target)?;
    l.check_same(&u.space)?;
    r.check_same(&v.space)?;
    if z.is_zero() {
        let w = Rank1Witness {
            a: Element::zero(l),
            b: Element::zero(r),
        };
        debug_assert!(w.validates(z, u, v)?);
        return Ok(MembershipVerdict::member(w));
    }
    if let Some(cert) = non_membership_certificate(z, u, v)? {
        return Ok(MembershipVerdict::non_member(cert));
    }
    let m = z.abs();
    if !m.tail().is_zero() {
        return Ok(MembershipVerdict::inconclusive());
    }

    let mut rows: BTreeMap<u32, Rational> = BTreeMap::new();
    let mut cols: BTreeMap<u32, Rational> = BTreeMap::new();
    for (idx, val) in m.coords() {
        let (i, j) = idx.pair().expect("tensor index");
        let rv = rows.entry(i).or_insert_with(Rational::zero);
        *rv = rational::max(rv, val);
        let cv = cols.entry(j).or_insert_with(Rational::zero);
        *cv = rational::max(cv, val);
    }
    let col_max = Element::new(
        r,
        cols.iter().map(|(j, v)| (Index::At(*j), v.clone())),
        Rational::zero(),
    )?;
    let col_ones = Element::new(
        r,
        cols.keys().map(|j| (Index::At(*j), rational::one())),
        Rational::zero(),
    )?;
    let row_max = Element::new(
        l,
        rows.iter().map(|(i, v)| (Index::At(*i), v.clone())),
        Rational::zero(),
    )?;
    let row_ones = Element::new(
        l,
        rows.keys().map(|i| (Index::At(*i), rational::one())),
        Rational::zero(),
    )?;

    let mut pairs: Vec<(Element, Element)> = Vec::new();
    for b in [col_max, col_ones].iter().chain(&opts.suggested_b) {
        match minimal_dominator_given_b(&m, b) {
            Ok(a) => pairs.push((a, b.clone())),
            Err(Error::ZeroOnActiveColumn(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    for a in [row_max, row_ones] {
        let b = minimal_dominator_given_a(&m, &a)?;
        pairs.push((a, b));
    }

    for (a, b) in &pairs {
        if let Some(t) = scale_search(a, b, u, v, opts)? {
            let w = Rank1Witness {
                a: a.scale(&(rational::one() / &t)),
                b: b.scale(&t),
            };
            if w.validates(z, u, v)? {
                return Ok(MembershipVerdict::member(w));
            }
        }
    }
    Ok(MembershipVerdict::inconclusive())
}
