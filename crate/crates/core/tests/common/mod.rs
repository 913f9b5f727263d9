#![allow(dead_code)]

use proptest::prelude::*;
use riesz_core::rational::{frac, Rational};
use riesz_core::{Element, Index, SpaceRef};

/// Rationals in `[-2, 2]` with denominators up to 4.
pub fn rat() -> impl Strategy<Value = Rational> {
    (-8i64..=8, 1i64..=4).prop_map(|(p, q)| frac(p, q))
}

pub fn nonneg_rat() -> impl Strategy<Value = Rational> {
    (0i64..=8, 1i64..=4).prop_map(|(p, q)| frac(p, q))
}

pub fn vec_in(space: &SpaceRef, n: usize, signed: bool) -> impl Strategy<Value = Element> {
    let space = space.clone();
    let values = if signed { rat().boxed() } else { nonneg_rat().boxed() };
    prop::collection::vec(values, n).prop_map(move |v| Element::from_values(&space, &v).unwrap())
}

/// Finitely supported element with a tail, on a model that allows one.
pub fn tailed(space: &SpaceRef, n: u32) -> impl Strategy<Value = Element> {
    let space = space.clone();
    (prop::collection::vec(rat(), n as usize), rat()).prop_map(move |(v, t)| {
        Element::new(
            &space,
            v.into_iter().enumerate().map(|(k, x)| (Index::At(k as u32 + 1), x)),
            t,
        )
        .unwrap()
    })
}
