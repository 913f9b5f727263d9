//! Trace generators and windowed checkers for norm, un, uaw and uo
//! convergence, the uaw metric, and tensor double traces.
//!
//! Every checker is a semidecision: "null within horizon `H` at tolerance
//! `tol` over the last `K` checkpoints", relative to a designated unit and a
//! finite functional battery.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::element::{Element, NormValue};
use crate::error::{Error, Result};
use crate::fremlin;
use crate::functional::Functional;
use crate::rational::{self, Rational};
use crate::space::{Index, Registry, SpaceKind, SpaceRef};
use crate::unit::{self, UnitSpec};
use crate::verdict::{Checkpoint, Status, TraceIndex, Verdict};

/// Closed-form coefficient `n ↦ c(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coef {
    pub alternating: bool,
    pub kind: CoefKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoefKind {
    /// `c · n^p`, `p` possibly negative.
    Power { c: Rational, p: i32 },
    /// `c · 2^(-n)`.
    Geometric { c: Rational },
}

impl Coef {
    pub fn constant(c: Rational) -> Self {
        Coef {
            alternating: false,
            kind: CoefKind::Power { c, p: 0 },
        }
    }

    pub fn power(c: Rational, p: i32) -> Self {
        Coef {
            alternating: false,
            kind: CoefKind::Power { c, p },
        }
    }

    pub fn alternate(mut self) -> Self {
        self.alternating = !self.alternating;
        self
    }

    /// Parses `c`, `c/n`, `c/n^p`, `n`, `n^p`, `c*n`, `c*n^p`, `2^-n`,
    /// `c*2^-n`, each optionally prefixed by `(-1)^n*`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized coefficient `{s}`"));
        let mut t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut alternating = false;
        if let Some(rest) = t.strip_prefix("(-1)^n*") {
            alternating = true;
            t = rest.to_string();
        } else if t == "(-1)^n" {
            alternating = true;
            t = "1".into();
        }
        let exponent = |e: &str| e.parse::<i32>().map_err(|_| bad());
        let n_power = |term: &str| -> Result<Option<i32>> {
            if term == "n" {
                Ok(Some(1))
            } else if let Some(e) = term.strip_prefix("n^") {
                Ok(Some(exponent(e)?))
            } else {
                Ok(None)
            }
        };
        let kind = if t == "2^-n" {
            CoefKind::Geometric { c: rational::one() }
        } else if let Some(c) = t.strip_suffix("*2^-n") {
            CoefKind::Geometric { c: rational::parse(c)? }
        } else if let Some(p) = n_power(&t)? {
            CoefKind::Power { c: rational::one(), p }
        } else if let Some((c, rest)) = t.split_once('*') {
            let p = n_power(rest)?.ok_or_else(bad)?;
            CoefKind::Power {
                c: rational::parse(c)?,
                p,
            }
        } else if let Some((c, rest)) = t.rsplit_once('/').filter(|(_, r)| r.starts_with('n')) {
            let p = n_power(rest)?.ok_or_else(bad)?;
            CoefKind::Power {
                c: rational::parse(c)?,
                p: -p,
            }
        } else {
            CoefKind::Power {
                c: rational::parse(&t)?,
                p: 0,
            }
        };
        Ok(Coef { alternating, kind })
    }

    pub fn eval(&self, n: u64) -> Rational {
        let nn = BigInt::from(n);
        let v = match &self.kind {
            CoefKind::Power { c, p } => {
                let m = Rational::from_integer(num::pow(nn, p.unsigned_abs() as usize));
                if *p >= 0 {
                    c * m
                } else {
                    c / m
                }
            }
            CoefKind::Geometric { c } => c / Rational::from_integer(num::pow(BigInt::from(2), n as usize)),
        };
        if self.alternating && n % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alternating {
            write!(f, "(-1)^n*")?;
        }
        match &self.kind {
            CoefKind::Power { c, p: 0 } => write!(f, "{c}"),
            CoefKind::Power { c, p } if *p > 0 => write!(f, "{c}*n^{p}"),
            CoefKind::Power { c, p } => write!(f, "{c}/n^{}", -p),
            CoefKind::Geometric { c } => write!(f, "{c}*2^-n"),
        }
    }
}

impl FromStr for Coef {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Coef::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `c(n)·e_n`; cyclic over the points of a finite grid.
    ScaledBasis(Coef),
    Basis,
    /// `n·e_n`.
    DiagonalScaled,
    /// `c(n)·x`.
    Scaled(Coef, Element),
    Constant(Element),
    /// Listed elements, then the last one forever.
    Explicit(Vec<Element>),
    /// `Σ_k c_k(n)·e_k`.
    Coordinatewise(Vec<Coef>),
    Sum(Box<TraceSpec>, Box<TraceSpec>),
    Difference(Box<TraceSpec>, Box<TraceSpec>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSpec {
    pub space: SpaceRef,
    pub family: Family,
}

impl TraceSpec {
    pub fn scaled_basis(space: &SpaceRef, c: Coef) -> Self {
        Self::new(space, Family::ScaledBasis(c))
    }

    pub fn basis(space: &SpaceRef) -> Self {
        Self::new(space, Family::Basis)
    }

    pub fn diagonal_scaled(space: &SpaceRef) -> Self {
        Self::new(space, Family::DiagonalScaled)
    }

    pub fn scaled(space: &SpaceRef, c: Coef, x: Element) -> Self {
        Self::new(space, Family::Scaled(c, x))
    }

    pub fn constant(x: Element) -> Self {
        Self::new(&x.space().clone(), Family::Constant(x))
    }

    pub fn zero(space: &SpaceRef) -> Self {
        Self::constant(Element::zero(space))
    }

    pub fn explicit(space: &SpaceRef, xs: Vec<Element>) -> Self {
        Self::new(space, Family::Explicit(xs))
    }

    pub fn coordinatewise(space: &SpaceRef, cs: Vec<Coef>) -> Self {
        Self::new(space, Family::Coordinatewise(cs))
    }

    pub fn sum(a: TraceSpec, b: TraceSpec) -> Self {
        Self::new(&a.space.clone(), Family::Sum(Box::new(a), Box::new(b)))
    }

    pub fn difference(a: TraceSpec, b: TraceSpec) -> Self {
        Self::new(&a.space.clone(), Family::Difference(Box::new(a), Box::new(b)))
    }

    fn new(space: &SpaceRef, family: Family) -> Self {
        TraceSpec {
            space: space.clone(),
            family,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let malformed = |why: String| Err(Error::InvalidConfig(why));
        match &self.family {
            Family::ScaledBasis(_) | Family::Basis | Family::DiagonalScaled if self.space.is_tensor() => {
                malformed(format!("basis traces need a factor space, not `{}`", self.space.id))
            }
            Family::Scaled(_, x) | Family::Constant(x) => self.space.check_same(x.space()),
            Family::Explicit(xs) if xs.is_empty() => malformed("explicit trace is empty".into()),
            Family::Explicit(xs) => xs.iter().try_for_each(|x| self.space.check_same(x.space())),
            Family::Coordinatewise(cs) => {
                if self.space.is_tensor() {
                    return malformed("coordinatewise traces need a factor space".into());
                }
                (1..=cs.len() as u32).try_for_each(|k| self.space.validate_index(Index::At(k)))
            }
            Family::Sum(a, b) | Family::Difference(a, b) => {
                self.space.check_same(&a.space)?;
                self.space.check_same(&b.space)?;
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }

    fn basis_index(&self, n: u64) -> u32 {
        match self.space.dim() {
            Some(d) => ((n - 1) % d as u64) as u32 + 1,
            None => n as u32,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = match &self.family {
            Family::ScaledBasis(c) => json!({"family": "scaled_basis", "coef": c.to_string()}),
            Family::Basis => json!({"family": "basis"}),
            Family::DiagonalScaled => json!({"family": "diagonal_scaled"}),
            Family::Scaled(c, x) => json!({"family": "scaled", "coef": c.to_string(), "x": x.to_json()}),
            Family::Constant(x) => json!({"family": "constant", "x": x.to_json()}),
            Family::Explicit(xs) => {
                json!({"family": "explicit", "elements": xs.iter().map(Element::to_json).collect::<Vec<_>>()})
            }
            Family::Coordinatewise(cs) => {
                json!({"family": "coordinatewise", "coefs": cs.iter().map(ToString::to_string).collect::<Vec<_>>()})
            }
            Family::Sum(a, b) => json!({"family": "sum", "left": a.to_json(), "right": b.to_json()}),
            Family::Difference(a, b) => json!({"family": "difference", "left": a.to_json(), "right": b.to_json()}),
        };
        v["space"] = Value::String(self.space.id.clone());
        v
    }

    pub fn from_json(value: &Value, registry: &Registry) -> Result<Self> {
        let field = |name: &str| {
            value
                .get(name)
                .ok_or_else(|| Error::Parse(format!("trace needs `{name}`")))
        };
        let space = registry.get(
            field("space")?
                .as_str()
                .ok_or_else(|| Error::Parse("trace `space` must be a string".into()))?,
        )?;
        let coef = || -> Result<Coef> {
            match field("coef")? {
                Value::String(s) => Coef::parse(s),
                other => Ok(Coef::constant(crate::element::parse_rational_value(other)?)),
            }
        };
        let element = |v: &Value| Element::from_json_in(v, &space);
        let sub = |name: &str| TraceSpec::from_json(field(name)?, registry);
        let family = field("family")?
            .as_str()
            .ok_or_else(|| Error::Parse("trace `family` must be a string".into()))?;
        let t = match family {
            "scaled_basis" => TraceSpec::scaled_basis(&space, coef()?),
            "basis" => TraceSpec::basis(&space),
            "diagonal_scaled" => TraceSpec::diagonal_scaled(&space),
            "scaled" => TraceSpec::scaled(&space, coef()?, element(field("x")?)?),
            "constant" => TraceSpec::new(&space, Family::Constant(element(field("x")?)?)),
            "zero" => TraceSpec::zero(&space),
            "explicit" => {
                let xs = field("elements")?
                    .as_array()
                    .ok_or_else(|| Error::Parse("`elements` must be a list".into()))?
                    .iter()
                    .map(element)
                    .collect::<Result<Vec<_>>>()?;
                TraceSpec::explicit(&space, xs)
            }
            "coordinatewise" => {
                let cs = field("coefs")?
                    .as_array()
                    .ok_or_else(|| Error::Parse("`coefs` must be a list".into()))?
                    .iter()
                    .map(|c| match c {
                        Value::String(s) => Coef::parse(s),
                        other => Ok(Coef::constant(crate::element::parse_rational_value(other)?)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                TraceSpec::coordinatewise(&space, cs)
            }
            "sum" => TraceSpec::new(&space, Family::Sum(Box::new(sub("left")?), Box::new(sub("right")?))),
            "difference" => TraceSpec::new(
                &space,
                Family::Difference(Box::new(sub("left")?), Box::new(sub("right")?)),
            ),
            other => return Err(Error::Parse(format!("unknown trace family `{other}`"))),
        };
        t.validate()?;
        Ok(t)
    }
}

pub fn trace_eval(t: &TraceSpec, n: u64) -> Result<Element> {
    if n == 0 {
        return Err(Error::InvalidConfig("trace indices start at 1".into()));
    }
    t.validate()?;
    eval_unchecked(t, n)
}

fn eval_unchecked(t: &TraceSpec, n: u64) -> Result<Element> {
    let at = |c: Rational| Element::new(&t.space, [(Index::At(t.basis_index(n)), c)], Rational::zero());
    match &t.family {
        Family::ScaledBasis(c) => at(c.eval(n)),
        Family::Basis => at(rational::one()),
        Family::DiagonalScaled => at(Rational::from_integer(BigInt::from(n))),
        Family::Scaled(c, x) => Ok(x.scale(&c.eval(n))),
        Family::Constant(x) => Ok(x.clone()),
        Family::Explicit(xs) => Ok(xs[(n as usize).min(xs.len()) - 1].clone()),
        Family::Coordinatewise(cs) => Element::new(
            &t.space,
            cs.iter().enumerate().map(|(k, c)| (Index::At(k as u32 + 1), c.eval(n))),
            Rational::zero(),
        ),
        Family::Sum(a, b) => eval_unchecked(a, n)?.add(&eval_unchecked(b, n)?),
        Family::Difference(a, b) => eval_unchecked(a, n)?.sub(&eval_unchecked(b, n)?),
    }
}

/// Coefficients whose traces are null at desk horizons (`H ≥ 100`).
pub const FAST_NULL_COEFS: [&str; 5] = ["1/n^2", "2^-n", "1/n^3", "(-1)^n*1/n^2", "3*2^-n"];
/// Coefficients bounded away from zero.
pub const PERSISTENT_COEFS: [&str; 4] = ["1", "(-1)^n", "1/2", "n"];
/// Null, but slowly enough to straddle small tolerances.
pub const SLOW_NULL_COEFS: [&str; 2] = ["1/n", "(-1)^n*1/n"];

/// A seeded trace on a factor space: coordinatewise, scaled-basis, scaled
/// vector, or a sum of two such, with coefficients drawn from `coefs` and
/// vector entries from the nonzero integers in `[-2, 2]`.
pub fn random_trace(space: &SpaceRef, coefs: &[&str], rng: &mut impl rand::Rng) -> Result<TraceSpec> {
    fn one(space: &SpaceRef, coefs: &[&str], rng: &mut impl rand::Rng) -> Result<TraceSpec> {
        let coef = |rng: &mut dyn rand::RngCore| Coef::parse(coefs[(rng.next_u32() as usize) % coefs.len()]);
        let dim = space.dim().unwrap_or(SEQ_BATTERY_COORDS as usize).min(5);
        let entry = |rng: &mut dyn rand::RngCore| [-2i64, -1, 1, 2][(rng.next_u32() % 4) as usize];
        Ok(match rng.gen_range(0..3) {
            0 => TraceSpec::coordinatewise(space, (0..dim).map(|_| coef(rng)).collect::<Result<Vec<_>>>()?),
            1 => TraceSpec::scaled_basis(space, coef(rng)?),
            _ => {
                let v: Vec<Rational> = (0..dim).map(|_| rational::int(entry(rng))).collect();
                TraceSpec::scaled(space, coef(rng)?, Element::from_values(space, &v)?)
            }
        })
    }
    let t = one(space, coefs, rng)?;
    if rng.gen_bool(0.25) {
        Ok(TraceSpec::sum(t, one(space, coefs, rng)?))
    } else {
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Norm,
    Un,
    Uaw,
    Uo,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Norm => "norm",
            Kind::Un => "un",
            Kind::Uaw => "uaw",
            Kind::Uo => "uo",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(Kind::Norm),
            "un" => Ok(Kind::Un),
            "uaw" => Ok(Kind::Uaw),
            "uo" => Ok(Kind::Uo),
            other => Err(Error::Parse(format!("unknown convergence kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckerConfig {
    pub horizon: u64,
    pub window: u64,
    pub tol: Rational,
    pub unit: UnitSpec,
    pub battery: Vec<Functional>,
}

/// Coordinates probed on infinite models.
pub const SEQ_BATTERY_COORDS: u32 = 4;

/// Grids and `ℓ∞`: coordinate functionals. Sequence models add the
/// ones-sum. Tensor grids: all products of the factor batteries.
pub fn default_battery(space: &SpaceRef) -> Vec<Functional> {
    match &space.kind {
        SpaceKind::FiniteGrid { .. } | SpaceKind::LinfModel => {
            Functional::coordinate_battery(space, SEQ_BATTERY_COORDS)
        }
        SpaceKind::SeqModel { .. } => {
            let mut b = Functional::coordinate_battery(space, SEQ_BATTERY_COORDS);
            b.push(Functional::OnesSum);
            b
        }
        SpaceKind::TensorGrid { left, right } => {
            Functional::product_battery(&default_battery(left), &default_battery(right))
        }
    }
}

impl CheckerConfig {
    pub fn new(space: &SpaceRef, horizon: u64, window: u64, tol: Rational) -> Self {
        CheckerConfig {
            horizon,
            window,
            tol,
            unit: UnitSpec::default_for(space),
            battery: default_battery(space),
        }
    }

    pub fn validate(&self, space: &SpaceRef) -> Result<()> {
        if self.horizon == 0 || self.window == 0 || self.window > self.horizon {
            return Err(Error::InvalidConfig(format!(
                "need 1 ≤ window ≤ horizon, got window {} and horizon {}",
                self.window, self.horizon
            )));
        }
        if !self.tol.is_positive() {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        self.unit.validate(space)?;
        for f in &self.battery {
            if !f.is_positive() {
                return Err(Error::InvalidFunctional("battery functionals must be positive".into()));
            }
            f.validate(space)?;
        }
        Ok(())
    }

    pub fn window_range(&self) -> std::ops::RangeInclusive<u64> {
        (self.horizon - self.window + 1)..=self.horizon
    }

    /// Start of the square double-trace block `[H/2, H]²`.
    pub fn block_start(&self) -> u64 {
        (self.horizon / 2).max(1)
    }
}

/// The checked quantity of one element, with the coordinate or functional
/// attaining it when it is a maximum.
fn quantity(kind: Kind, x: &Element, cfg: &CheckerConfig) -> Result<(NormValue, Option<String>)> {
    match kind {
        Kind::Norm => Ok((x.norm(), None)),
        Kind::Un => Ok((unit::rho(x, &cfg.unit)?, None)),
        Kind::Uaw => {
            if cfg.battery.is_empty() {
                return Err(Error::InvalidConfig("uaw check needs a nonempty battery".into()));
            }
            let m = unit::unit_meet(x, &cfg.unit)?;
            let mut best = (Rational::zero(), None);
            for (k, f) in cfg.battery.iter().enumerate() {
                let v = f.apply(&m)?.abs();
                if v > best.0 {
                    best = (v, Some(functional_label(f, k, x.space())));
                }
            }
            Ok((NormValue::plain(best.0), best.1))
        }
        Kind::Uo => {
            let m = unit::unit_meet(x, &cfg.unit)?;
            Ok(sup_entry(&m))
        }
    }
}

fn functional_label(f: &Functional, k: usize, space: &SpaceRef) -> String {
    match f {
        Functional::Coordinate(i) => space.index_key(*i),
        Functional::OnesSum => "ones-sum".into(),
        _ => format!("f{}", k + 1),
    }
}

/// Largest modulus over coordinates and tail.
fn sup_entry(m: &Element) -> (NormValue, Option<String>) {
    let mut best = (m.tail().abs(), (!m.tail().is_zero()).then(|| "tail".to_string()));
    for (k, v) in m.coords() {
        if v.abs() > best.0 {
            best = (v.abs(), Some(m.space().index_key(*k)));
        }
    }
    (NormValue::plain(best.0), best.1)
}

fn checkpoint(index: TraceIndex, q: (NormValue, Option<String>), tol: &Rational) -> Checkpoint {
    let (v, arg) = q;
    Checkpoint {
        index,
        threshold: v.scaled_threshold(tol),
        ok: v.lt(tol),
        value: v.value,
        arg,
    }
}

fn squared_for(kind: Kind, space: &SpaceRef) -> bool {
    matches!(kind, Kind::Norm | Kind::Un) && space.norm_tag() == crate::space::NormTag::L2
}

/// Replaces each value by the largest value at or after it, so the uo
/// checkpoint is the dominating envelope of the window.
fn envelope(cps: &mut [Checkpoint], tol: &Rational) {
    let mut run: Option<(Rational, Option<String>)> = None;
    for cp in cps.iter_mut().rev() {
        match &run {
            Some((v, a)) if *v > cp.value => {
                cp.value = v.clone();
                cp.arg = a.clone();
            }
            _ => run = Some((cp.value.clone(), cp.arg.clone())),
        }
        cp.ok = cp.value < *tol;
    }
}

/// Windowed check of one kind on a single-index trace.
pub fn check(kind: Kind, t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    t.validate()?;
    cfg.validate(&t.space)?;
    let mut cps = cfg
        .window_range()
        .map(|n| {
            Ok(checkpoint(
                TraceIndex::Single(n),
                quantity(kind, &eval_unchecked(t, n)?, cfg)?,
                &cfg.tol,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    if kind == Kind::Uo {
        envelope(&mut cps, &cfg.tol);
    }
    Ok(Verdict::from_checkpoints(cps, squared_for(kind, &t.space)))
}

pub fn is_norm_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    check(Kind::Norm, t, cfg)
}

/// `ρ_unit(x_n) < tol` over the window.
pub fn is_un_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    check(Kind::Un, t, cfg)
}

/// `max_f |f(|x_n| ∧ unit)| < tol` over the window.
pub fn is_uaw_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    check(Kind::Uaw, t, cfg)
}

/// Coordinatewise: the nonincreasing envelope of `|x_n| ∧ unit` over the
/// window stays below `tol` at every coordinate.
pub fn is_uo_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    check(Kind::Uo, t, cfg)
}

/// Direct pointwise check `max_k |x_n(k)| < tol` over the window.
pub fn is_pointwise_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    t.validate()?;
    cfg.validate(&t.space)?;
    let cps = cfg
        .window_range()
        .map(|n| {
            Ok(checkpoint(
                TraceIndex::Single(n),
                sup_entry(&eval_unchecked(t, n)?),
                &cfg.tol,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Verdict::from_checkpoints(cps, false))
}

/// `d(x,y) = Σ_k q_k/(1+q_k) · 2^(-k)` with `q_k = |f_k(|x−y| ∧ e)|`,
/// over the battery in order.
pub fn uaw_metric(x: &Element, y: &Element, cfg: &CheckerConfig) -> Result<Rational> {
    let m = unit::unit_meet(&x.sub(y)?, &cfg.unit)?;
    let mut d = Rational::zero();
    for (k, f) in cfg.battery.iter().enumerate() {
        let q = f.apply(&m)?.abs();
        d += &q / (rational::one() + &q) * rational::pow2_neg(k as u32 + 1);
    }
    Ok(d)
}

/// Metric threshold `tol·2^(-m)/(1+tol)` for a battery of `m` functionals:
/// below it every `q_k` is below `tol`.
pub fn metric_tol(cfg: &CheckerConfig) -> Rational {
    &cfg.tol * rational::pow2_neg(cfg.battery.len() as u32) / (rational::one() + &cfg.tol)
}

/// Windowed `d(x_n, 0) < metric_tol`.
pub fn is_metric_null(t: &TraceSpec, cfg: &CheckerConfig) -> Result<Verdict> {
    t.validate()?;
    cfg.validate(&t.space)?;
    let zero = Element::zero(&t.space);
    let dtol = metric_tol(cfg);
    let cps = cfg
        .window_range()
        .map(|n| {
            let d = uaw_metric(&eval_unchecked(t, n)?, &zero, cfg)?;
            Ok(checkpoint(TraceIndex::Single(n), (NormValue::plain(d), None), &dtol))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Verdict::from_checkpoints(cps, false))
}

/// `(m,n) ↦ x_m ⊗ y_n` on a registered tensor grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleTrace {
    pub target: SpaceRef,
    pub xs: TraceSpec,
    pub ys: TraceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleMode {
    /// The square tail block `[H/2, H]²` in the product order.
    Block,
    /// `m = n` over the last-`K` window.
    Diagonal,
}

impl FromStr for DoubleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(DoubleMode::Block),
            "diagonal" => Ok(DoubleMode::Diagonal),
            other => Err(Error::Parse(format!("unknown double-trace mode `{other}`"))),
        }
    }
}

pub fn tensor_double_trace(target: &SpaceRef, xs: &TraceSpec, ys: &TraceSpec) -> Result<DoubleTrace> {
    let (l, r) = target
        .factors()
        .ok_or_else(|| Error::UnregisteredTensor(target.id.clone()))?;
    l.check_same(&xs.space)?;
    r.check_same(&ys.space)?;
    xs.validate()?;
    ys.validate()?;
    Ok(DoubleTrace {
        target: target.clone(),
        xs: xs.clone(),
        ys: ys.clone(),
    })
}

impl DoubleTrace {
    pub fn eval(&self, m: u64, n: u64) -> Result<Element> {
        fremlin::tensor(&self.target, &trace_eval(&self.xs, m)?, &trace_eval(&self.ys, n)?)
    }

    pub fn indices(&self, cfg: &CheckerConfig, mode: DoubleMode) -> Vec<(u64, u64)> {
        match mode {
            DoubleMode::Block => {
                let r = cfg.block_start()..=cfg.horizon;
                r.clone().flat_map(|m| r.clone().map(move |n| (m, n))).collect()
            }
            DoubleMode::Diagonal => cfg.window_range().map(|n| (n, n)).collect(),
        }
    }
}

/// Windowed check of one kind on a double trace; uo uses the product-order
/// envelope over the block.
pub fn check_double(kind: Kind, dt: &DoubleTrace, cfg: &CheckerConfig, mode: DoubleMode) -> Result<Verdict> {
    cfg.validate(&dt.target)?;
    let first = match mode {
        DoubleMode::Block => cfg.block_start(),
        DoubleMode::Diagonal => cfg.horizon - cfg.window + 1,
    };
    let xs = (first..=cfg.horizon)
        .map(|n| eval_unchecked(&dt.xs, n))
        .collect::<Result<Vec<_>>>()?;
    let ys = (first..=cfg.horizon)
        .map(|n| eval_unchecked(&dt.ys, n))
        .collect::<Result<Vec<_>>>()?;
    let idx = dt.indices(cfg, mode);
    let mut cps = idx
        .par_iter()
        .map(|&(m, n)| {
            let z = fremlin::tensor(&dt.target, &xs[(m - first) as usize], &ys[(n - first) as usize])?;
            Ok(checkpoint(TraceIndex::Double(m, n), quantity(kind, &z, cfg)?, &cfg.tol))
        })
        .collect::<Result<Vec<_>>>()?;
    if kind == Kind::Uo {
        match mode {
            DoubleMode::Diagonal => envelope(&mut cps, &cfg.tol),
            DoubleMode::Block => block_envelope(&mut cps, (cfg.horizon - first + 1) as usize, &cfg.tol),
        }
    }
    Ok(Verdict::from_checkpoints(cps, squared_for(kind, &dt.target)))
}

/// Row-major `side × side` block; each value becomes the max over the
/// upper-right quadrant it dominates in the product order.
fn block_envelope(cps: &mut [Checkpoint], side: usize, tol: &Rational) {
    for r in (0..side).rev() {
        for c in (0..side).rev() {
            let mut best = r * side + c;
            for other in [
                (r + 1 < side).then(|| (r + 1) * side + c),
                (c + 1 < side).then(|| r * side + c + 1),
            ]
            .into_iter()
            .flatten()
            {
                if cps[other].value > cps[best].value {
                    best = other;
                }
            }
            if best != r * side + c {
                let (v, a) = (cps[best].value.clone(), cps[best].arg.clone());
                let cp = &mut cps[r * side + c];
                cp.value = v;
                cp.arg = a;
            }
            let cp = &mut cps[r * side + c];
            cp.ok = cp.value < *tol;
        }
    }
}

/// Tensor configuration from factor configurations: unit `u⊗v`, battery of
/// all products `f⊗g`.
pub fn tensor_config(
    cfg_e: &CheckerConfig,
    cfg_f: &CheckerConfig,
    horizon: u64,
    window: u64,
    tol: Rational,
) -> CheckerConfig {
    CheckerConfig {
        horizon,
        window,
        tol,
        unit: UnitSpec::tensor(cfg_e.unit.clone(), cfg_f.unit.clone()),
        battery: Functional::product_battery(&cfg_e.battery, &cfg_f.battery),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreservationReport {
    pub kind: Kind,
    pub factor_x: Verdict,
    pub factor_y: Verdict,
    pub tensor: Verdict,
}

impl PreservationReport {
    pub fn status(&self) -> Status {
        self.tensor.status
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind.to_string(),
            "factor_x": self.factor_x.to_json(),
            "factor_y": self.factor_y.to_json(),
            "tensor": self.tensor.to_json(),
        })
    }
}

/// Runs the factor checkers of `kind` (both must pass), then the same
/// checker on the double trace over the tensor configuration. Factor checks
/// use the tensor horizon and cover the indices the double check visits:
/// `[H/2, H]` in block mode, the last-`K` window in diagonal mode.
#[allow(clippy::too_many_arguments)]
pub fn preservation_experiment(
    kind: Kind,
    target: &SpaceRef,
    xs: &TraceSpec,
    ys: &TraceSpec,
    cfg_e: &CheckerConfig,
    cfg_f: &CheckerConfig,
    cfg_t: &CheckerConfig,
    mode: DoubleMode,
) -> Result<PreservationReport> {
    if kind == Kind::Norm {
        return Err(Error::InvalidConfig("preservation covers un, uaw and uo".into()));
    }
    let dt = tensor_double_trace(target, xs, ys)?;
    cfg_t.validate(target)?;
    let window = match mode {
        DoubleMode::Block => cfg_t.horizon - cfg_t.block_start() + 1,
        DoubleMode::Diagonal => cfg_t.window,
    };
    let span = |c: &CheckerConfig| CheckerConfig {
        horizon: cfg_t.horizon,
        window,
        ..c.clone()
    };
    let factor_x = check(kind, xs, &span(cfg_e))?;
    let factor_y = check(kind, ys, &span(cfg_f))?;
    for (name, v) in [("left", &factor_x), ("right", &factor_y)] {
        if !v.passed() {
            return Err(Error::Precondition(format!("{name} factor trace is not {kind}-null")));
        }
    }
    let tensor = check_double(kind, &dt, cfg_t, mode)?;
    Ok(PreservationReport {
        kind,
        factor_x,
        factor_y,
        tensor,
    })
}
