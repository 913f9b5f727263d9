//! Descriptors of the concrete model lattices.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormTag {
    #[serde(rename = "l1")]
    L1,
    /// Compared through exact squares.
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "sup-c0")]
    Sup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceKind {
    /// `C(K)` for a finite set `K` of labelled points.
    FiniteGrid { points: Vec<String> },
    /// Finitely supported sequences under the given norm.
    SeqModel { norm: NormTag },
    /// Eventually constant sequences under the sup norm.
    LinfModel,
    /// Entrywise ordered grid over pairs of indices.
    TensorGrid { left: SpaceRef, right: SpaceRef },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    pub id: String,
    pub kind: SpaceKind,
}

pub type SpaceRef = Arc<Space>;

/// Coordinate index. Every model is indexed from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    At(u32),
    Pair(u32, u32),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::At(k) => write!(f, "{k}"),
            Index::Pair(i, j) => write!(f, "{i},{j}"),
        }
    }
}

impl Index {
    pub fn single(self) -> Option<u32> {
        match self {
            Index::At(k) => Some(k),
            Index::Pair(..) => None,
        }
    }

    pub fn pair(self) -> Option<(u32, u32)> {
        match self {
            Index::Pair(i, j) => Some((i, j)),
            Index::At(_) => None,
        }
    }
}

impl Space {
    pub fn grid(id: impl Into<String>, points: &[&str]) -> Result<SpaceRef> {
        Self::grid_owned(id, points.iter().map(|p| p.to_string()).collect())
    }

    pub fn grid_owned(id: impl Into<String>, points: Vec<String>) -> Result<SpaceRef> {
        let id = id.into();
        if points.is_empty() {
            return Err(Error::InvalidSpace(format!("grid `{id}` has no points")));
        }
        for p in &points {
            if p.is_empty() || p.contains(',') {
                return Err(Error::InvalidSpace(format!("bad point label {p:?}")));
            }
        }
        let mut seen = points.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != points.len() {
            return Err(Error::InvalidSpace(format!("grid `{id}` repeats a label")));
        }
        Ok(Arc::new(Space {
            id,
            kind: SpaceKind::FiniteGrid { points },
        }))
    }

    /// Grid with points labelled `1..=n`.
    pub fn numbered_grid(id: impl Into<String>, n: usize) -> Result<SpaceRef> {
        Self::grid_owned(id, (1..=n).map(|k| k.to_string()).collect())
    }

    pub fn seq(id: impl Into<String>, norm: NormTag) -> SpaceRef {
        Arc::new(Space {
            id: id.into(),
            kind: SpaceKind::SeqModel { norm },
        })
    }

    pub fn linf(id: impl Into<String>) -> SpaceRef {
        Arc::new(Space {
            id: id.into(),
            kind: SpaceKind::LinfModel,
        })
    }

    pub fn tensor(id: impl Into<String>, left: &SpaceRef, right: &SpaceRef) -> Result<SpaceRef> {
        let id = id.into();
        for f in [left, right] {
            if matches!(f.kind, SpaceKind::TensorGrid { .. }) {
                return Err(Error::InvalidSpace(format!(
                    "tensor grid `{id}` cannot nest tensor factor `{}`",
                    f.id
                )));
            }
        }
        Ok(Arc::new(Space {
            id,
            kind: SpaceKind::TensorGrid {
                left: left.clone(),
                right: right.clone(),
            },
        }))
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self.kind, SpaceKind::TensorGrid { .. })
    }

    pub fn factors(&self) -> Option<(&SpaceRef, &SpaceRef)> {
        match &self.kind {
            SpaceKind::TensorGrid { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// Number of coordinates for finite grids (product for tensor grids of grids).
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::FiniteGrid { points } => Some(points.len()),
            SpaceKind::TensorGrid { left, right } => Some(left.dim()? * right.dim()?),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dim().is_some()
    }

    /// Whether a nonzero constant tail is meaningful.
    pub fn allows_tail(&self) -> bool {
        match &self.kind {
            SpaceKind::LinfModel => true,
            SpaceKind::TensorGrid { left, right } => left.allows_tail() && right.allows_tail(),
            _ => false,
        }
    }

    pub fn norm_tag(&self) -> NormTag {
        match &self.kind {
            SpaceKind::FiniteGrid { .. } | SpaceKind::LinfModel => NormTag::Sup,
            SpaceKind::SeqModel { norm } => *norm,
            SpaceKind::TensorGrid { left, right } => match (left.norm_tag(), right.norm_tag()) {
                (NormTag::L1, NormTag::L1) => NormTag::L1,
                (NormTag::L2, NormTag::L2) => NormTag::L2,
                _ => NormTag::Sup,
            },
        }
    }

    /// True when both spaces describe the same lattice.
    pub fn same(&self, other: &Space) -> bool {
        std::ptr::eq(self, other) || self == other
    }

    pub fn check_same(&self, other: &Space) -> Result<()> {
        if self.same(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.id.clone(),
                right: other.id.clone(),
            })
        }
    }

    pub fn validate_index(&self, index: Index) -> Result<()> {
        let ok = match (&self.kind, index) {
            (SpaceKind::FiniteGrid { points }, Index::At(k)) => k >= 1 && (k as usize) <= points.len(),
            (SpaceKind::SeqModel { .. } | SpaceKind::LinfModel, Index::At(k)) => k >= 1,
            (SpaceKind::TensorGrid { left, right }, Index::Pair(i, j)) => {
                left.validate_index(Index::At(i)).is_ok() && right.validate_index(Index::At(j)).is_ok()
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidIndex {
                space: self.id.clone(),
                index: index.to_string(),
            })
        }
    }

    /// All indices of a finite space in lexicographic order.
    pub fn indices(&self) -> Option<Vec<Index>> {
        match &self.kind {
            SpaceKind::FiniteGrid { points } => Some((1..=points.len() as u32).map(Index::At).collect()),
            SpaceKind::TensorGrid { left, right } => {
                let (n, m) = (left.dim()? as u32, right.dim()? as u32);
                Some((1..=n).flat_map(|i| (1..=m).map(move |j| Index::Pair(i, j))).collect())
            }
            _ => None,
        }
    }

    /// JSON key of an index: grid label, natural number, or `"i,j"`.
    pub fn index_key(&self, index: Index) -> String {
        match (&self.kind, index) {
            (SpaceKind::FiniteGrid { points }, Index::At(k)) => {
                points.get(k as usize - 1).cloned().unwrap_or_else(|| k.to_string())
            }
            (SpaceKind::TensorGrid { left, right }, Index::Pair(i, j)) => {
                format!("{},{}", left.index_key(Index::At(i)), right.index_key(Index::At(j)))
            }
            (_, idx) => idx.to_string(),
        }
    }

    pub fn parse_index_key(&self, key: &str) -> Result<Index> {
        let bad = || Error::InvalidIndex {
            space: self.id.clone(),
            index: key.to_string(),
        };
        let index = match &self.kind {
            SpaceKind::FiniteGrid { points } => {
                let pos = points.iter().position(|p| p == key).ok_or_else(bad)?;
                Index::At(pos as u32 + 1)
            }
            SpaceKind::SeqModel { .. } | SpaceKind::LinfModel => Index::At(key.trim().parse().map_err(|_| bad())?),
            SpaceKind::TensorGrid { left, right } => {
                let (a, b) = key.split_once(',').ok_or_else(bad)?;
                let i = left.parse_index_key(a.trim())?.single().ok_or_else(bad)?;
                let j = right.parse_index_key(b.trim())?.single().ok_or_else(bad)?;
                Index::Pair(i, j)
            }
        };
        self.validate_index(index)?;
        Ok(index)
    }
}

/// Spaces by id, in registration order.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    spaces: BTreeMap<String, SpaceRef>,
    order: Vec<String>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, space: SpaceRef) -> Result<SpaceRef> {
        if let Some(existing) = self.spaces.get(&space.id) {
            if existing.same(&space) {
                return Ok(existing.clone());
            }
            return Err(Error::InvalidSpace(format!("duplicate space id `{}`", space.id)));
        }
        self.order.push(space.id.clone());
        self.spaces.insert(space.id.clone(), space.clone());
        Ok(space)
    }

    pub fn get(&self, id: &str) -> Result<SpaceRef> {
        self.spaces
            .get(id)
            .cloned()
            .ok_or_else(|| Error::InvalidSpace(format!("unknown space `{id}`")))
    }

    /// The registered tensor grid with the given factors.
    pub fn tensor_of(&self, left: &Space, right: &Space) -> Result<SpaceRef> {
        self.order
            .iter()
            .map(|id| &self.spaces[id])
            .find(|s| matches!(s.factors(), Some((l, r)) if l.same(left) && r.same(right)))
            .cloned()
            .ok_or_else(|| Error::UnregisteredTensor(format!("{}⊗{}", left.id, right.id)))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpaceRef> {
        self.order.iter().map(|id| &self.spaces[id])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_points() {
        assert!(Space::grid("K", &[]).is_err());
        assert!(Space::grid("K", &["a", "a"]).is_err());
        assert!(Space::grid("K", &["a,b"]).is_err());
    }

    #[test]
    fn tensor_does_not_nest() {
        let k = Space::numbered_grid("K", 2).unwrap();
        let t = Space::tensor("T", &k, &k).unwrap();
        assert!(Space::tensor("TT", &t, &k).is_err());
    }

    #[test]
    fn index_keys_roundtrip() {
        let k = Space::grid("K", &["p", "q"]).unwrap();
        let s = Space::seq("S", NormTag::L1);
        let t = Space::tensor("T", &k, &s).unwrap();
        let idx = Index::Pair(2, 7);
        assert_eq!(t.index_key(idx), "q,7");
        assert_eq!(t.parse_index_key("q,7").unwrap(), idx);
        assert!(k.parse_index_key("r").is_err());
        assert!(s.validate_index(Index::At(0)).is_err());
    }

    #[test]
    fn registry_finds_tensor() {
        let mut reg = Registry::new();
        let k = reg.insert(Space::numbered_grid("K", 2).unwrap()).unwrap();
        let l = reg.insert(Space::numbered_grid("L", 3).unwrap()).unwrap();
        let t = reg.insert(Space::tensor("T", &k, &l).unwrap()).unwrap();
        assert_eq!(reg.tensor_of(&k, &l).unwrap().id, t.id);
        assert!(reg.tensor_of(&l, &k).is_err());
        assert_eq!(t.dim(), Some(6));
    }
}
