//! Vectors of the model lattices and their coordinatewise lattice operations.
//!
//! An element is a finite coordinate map plus a constant tail value. Stored
//! coordinates never equal the tail, so structural equality is lattice
//! equality.

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::space::{Index, NormTag, Registry, SpaceRef};

#[derive(Clone, PartialEq, Eq)]
pub struct Element {
    space: SpaceRef,
    coords: BTreeMap<Index, Rational>,
    tail: Rational,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{", self.space.id)?;
        for (i, (k, v)) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        if !self.tail.is_zero() {
            write!(f, "; tail {}", self.tail)?;
        }
        write!(f, "}}")
    }
}

/// A norm value; for `l2` spaces it holds the exact squared norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormValue {
    pub value: Rational,
    pub squared: bool,
}

impl NormValue {
    pub fn plain(value: Rational) -> Self {
        NormValue { value, squared: false }
    }

    /// The threshold in the same units as `value`.
    pub fn scaled_threshold(&self, eps: &Rational) -> Rational {
        if self.squared {
            eps * eps
        } else {
            eps.clone()
        }
    }

    pub fn lt(&self, eps: &Rational) -> bool {
        self.value < self.scaled_threshold(eps)
    }

    pub fn le(&self, eps: &Rational) -> bool {
        self.value <= self.scaled_threshold(eps)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.squared {
            write!(f, "{}^(1/2)", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

impl Element {
    pub fn new(space: &SpaceRef, coords: impl IntoIterator<Item = (Index, Rational)>, tail: Rational) -> Result<Self> {
        if !tail.is_zero() && !space.allows_tail() {
            return Err(Error::InvalidTail(space.id.clone()));
        }
        let mut map = BTreeMap::new();
        for (k, v) in coords {
            space.validate_index(k)?;
            if v != tail {
                map.insert(k, v);
            } else {
                map.remove(&k);
            }
        }
        Ok(Element {
            space: space.clone(),
            coords: map,
            tail,
        })
    }

    pub fn zero(space: &SpaceRef) -> Self {
        Element {
            space: space.clone(),
            coords: BTreeMap::new(),
            tail: Rational::zero(),
        }
    }

    pub fn basis(space: &SpaceRef, k: u32) -> Result<Self> {
        Self::new(space, [(Index::At(k), rational::one())], rational::zero())
    }

    /// Constant element; only the sup-norm models with tails can carry it.
    pub fn constant(space: &SpaceRef, c: Rational) -> Result<Self> {
        match space.indices() {
            Some(idx) => Self::new(space, idx.into_iter().map(|i| (i, c.clone())), rational::zero()),
            None => Self::new(space, [], c),
        }
    }

    /// Coordinates `1..=values.len()` of a one-index space.
    pub fn from_values(space: &SpaceRef, values: &[Rational]) -> Result<Self> {
        Self::new(
            space,
            values
                .iter()
                .enumerate()
                .map(|(k, v)| (Index::At(k as u32 + 1), v.clone())),
            rational::zero(),
        )
    }

    /// Shorthand for tests and fixtures: `(p, q)` pairs.
    pub fn from_fracs(space: &SpaceRef, values: &[(i64, i64)]) -> Result<Self> {
        let v: Vec<Rational> = values.iter().map(|&(p, q)| rational::frac(p, q)).collect();
        Self::from_values(space, &v)
    }

    pub fn from_ints(space: &SpaceRef, values: &[i64]) -> Result<Self> {
        let v: Vec<Rational> = values.iter().map(|&p| rational::int(p)).collect();
        Self::from_values(space, &v)
    }

    /// Row-major matrix on a tensor grid.
    pub fn from_matrix(space: &SpaceRef, rows: &[Vec<Rational>]) -> Result<Self> {
        let coords = rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, v)| (Index::Pair(i as u32 + 1, j as u32 + 1), v.clone()))
        });
        Self::new(space, coords, rational::zero())
    }

    pub fn from_int_matrix(space: &SpaceRef, rows: &[&[i64]]) -> Result<Self> {
        let rows: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| rational::int(v)).collect())
            .collect();
        Self::from_matrix(space, &rows)
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn tail(&self) -> &Rational {
        &self.tail
    }

    /// Stored coordinates (those that differ from the tail).
    pub fn coords(&self) -> &BTreeMap<Index, Rational> {
        &self.coords
    }

    pub fn get(&self, index: Index) -> Rational {
        self.coords.get(&index).cloned().unwrap_or_else(|| self.tail.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty() && self.tail.is_zero()
    }

    pub fn is_nonneg(&self) -> bool {
        !self.tail.is_negative() && self.coords.values().all(|v| !v.is_negative())
    }

    /// Indices with a nonzero value, when that set is finite.
    pub fn support(&self) -> Option<Vec<Index>> {
        if !self.tail.is_zero() {
            return None;
        }
        Some(self.coords.keys().copied().collect())
    }

    /// Dense coordinate vector of a finite one-index space.
    pub fn to_vec(&self) -> Option<Vec<Rational>> {
        let n = self.space.dim()?;
        if self.space.is_tensor() {
            return None;
        }
        Some((1..=n as u32).map(|k| self.get(Index::At(k))).collect())
    }

    /// Dense row-major matrix of a finite tensor grid.
    pub fn to_matrix(&self) -> Option<Vec<Vec<Rational>>> {
        let (l, r) = self.space.factors()?;
        let (n, m) = (l.dim()? as u32, r.dim()? as u32);
        Some(
            (1..=n)
                .map(|i| (1..=m).map(|j| self.get(Index::Pair(i, j))).collect())
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        let tail = f(&self.tail);
        let coords = self.coords.iter().map(|(k, v)| (*k, f(v)));
        Self::canonical(&self.space, coords, tail)
    }

    /// Applies `f` entrywise on the union of both supports and on the tails.
    pub fn zip_with(&self, other: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Result<Self> {
        self.space.check_same(&other.space)?;
        let tail = f(&self.tail, &other.tail);
        let mut out = BTreeMap::new();
        for k in self.coords.keys().chain(other.coords.keys()) {
            if out.contains_key(k) {
                continue;
            }
            out.insert(*k, f(&self.get(*k), &other.get(*k)));
        }
        Ok(Self::canonical(&self.space, out, tail))
    }

    fn canonical(space: &SpaceRef, coords: impl IntoIterator<Item = (Index, Rational)>, tail: Rational) -> Self {
        let coords = coords.into_iter().filter(|(_, v)| *v != tail).collect();
        Element {
            space: space.clone(),
            coords,
            tail,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|a| a * c)
    }

    pub fn sup(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, rational::max)
    }

    pub fn inf(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, rational::min)
    }

    pub fn abs(&self) -> Self {
        self.map(|a| a.abs())
    }

    /// `x ∨ 0`.
    pub fn pos(&self) -> Self {
        self.map(|a| rational::max(a, &Rational::zero()))
    }

    /// `(-x) ∨ 0`.
    pub fn neg_part(&self) -> Self {
        self.map(|a| rational::max(&-a, &Rational::zero()))
    }

    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.space.check_same(&other.space)?;
        if self.tail > other.tail {
            return Ok(false);
        }
        Ok(self
            .coords
            .keys()
            .chain(other.coords.keys())
            .all(|k| self.get(*k) <= other.get(*k)))
    }

    /// First index where `self > other`, if any.
    pub fn first_excess(&self, other: &Self) -> Result<Option<Index>> {
        self.space.check_same(&other.space)?;
        let mut keys: Vec<Index> = self.coords.keys().chain(other.coords.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        Ok(keys.into_iter().find(|k| self.get(*k) > other.get(*k)))
    }

    /// Norm of the space: `l1` sum, squared `l2` sum, or sup of the moduli.
    pub fn norm(&self) -> NormValue {
        match self.space.norm_tag() {
            NormTag::L1 => NormValue::plain(self.coords.values().map(|v| v.abs()).sum()),
            NormTag::L2 => NormValue {
                value: self.coords.values().map(|v| v * v).sum(),
                squared: true,
            },
            NormTag::Sup => NormValue::plain(
                self.coords
                    .values()
                    .map(|v| v.abs())
                    .fold(self.tail.abs(), |a, b| rational::max(&a, &b)),
            ),
        }
    }

    pub fn disjoint(&self, other: &Self) -> Result<bool> {
        Ok(self.abs().inf(&other.abs())?.is_zero())
    }

    pub fn to_json(&self) -> Value {
        let mut coords = Map::new();
        for (k, v) in &self.coords {
            coords.insert(self.space.index_key(*k), Value::String(rational::fmt(v)));
        }
        json!({
            "space": self.space.id,
            "coords": Value::Object(coords),
            "tail": rational::fmt(&self.tail),
        })
    }

    pub fn from_json(value: &Value, registry: &Registry) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("element must be an object".into()))?;
        let space_id = obj
            .get("space")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("element needs a string `space`".into()))?;
        let space = registry.get(space_id)?;
        Self::from_json_in(value, &space)
    }

    /// Parses an element whose space is known from context; a `space`
    /// field, when present, must agree.
    pub fn from_json_in(value: &Value, space: &SpaceRef) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("element must be an object".into()))?;
        if let Some(id) = obj.get("space").and_then(Value::as_str) {
            if id != space.id {
                return Err(Error::SpaceMismatch {
                    left: id.to_string(),
                    right: space.id.clone(),
                });
            }
        }
        let tail = match obj.get("tail") {
            None | Some(Value::Null) => Rational::zero(),
            Some(v) => parse_rational_value(v)?,
        };
        let mut coords = Vec::new();
        if let Some(c) = obj.get("coords") {
            let c = c
                .as_object()
                .ok_or_else(|| Error::Parse("`coords` must be an object".into()))?;
            for (k, v) in c {
                coords.push((space.parse_index_key(k)?, parse_rational_value(v)?));
            }
        }
        Self::new(space, coords, tail)
    }
}

/// Accepts `"p/q"` strings or JSON integers.
pub fn parse_rational_value(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => rational::parse(s),
        Value::Number(n) if n.is_i64() => Ok(rational::int(n.as_i64().unwrap_or_default())),
        other => Err(Error::Parse(format!("expected a rational string, got {other}"))),
    }
}
