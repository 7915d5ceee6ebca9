//! Brute-force reference implementations.
//!
//! Everything here works straight from the definitions: open sets are found
//! by testing every subset against the incidence condition, continuity by
//! checking that preimages of open sets are open, homeomorphisms by trying
//! every bijection. All of it is exponential and refuses inputs above a
//! [`SizeGuard`]. The fast paths elsewhere in the crate are tested against
//! these functions.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::maps::SpaceMap;
use crate::space::{ElementId, Space};

/// Upper bound on the element count an oracle will accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeGuard {
    pub max_elements: usize,
}

impl SizeGuard {
    /// Default guard for open-set enumeration.
    pub const ENUMERATION: SizeGuard = SizeGuard { max_elements: 12 };
    /// Default guard for searches over maps.
    pub const MAP_SEARCH: SizeGuard = SizeGuard { max_elements: 8 };

    pub fn new(max_elements: usize) -> Result<Self> {
        if max_elements == 0 || max_elements > 63 {
            return Err(Error::SizeBound {
                size: max_elements,
                bound: 63,
            });
        }
        Ok(SizeGuard { max_elements })
    }

    pub fn check(&self, space: &Space) -> Result<()> {
        if space.len() > self.max_elements {
            return Err(Error::SizeBound {
                size: space.len(),
                bound: self.max_elements,
            });
        }
        Ok(())
    }
}

impl Default for SizeGuard {
    fn default() -> Self {
        SizeGuard::ENUMERATION
    }
}

/// Every open set of a small space, as bitmasks over the space's element
/// order, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenSetFamily {
    elements: Vec<ElementId>,
    masks: Vec<u64>,
}

impl OpenSetFamily {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn contains_mask(&self, mask: u64) -> bool {
        self.masks.binary_search(&mask).is_ok()
    }

    pub fn contains<I, S>(&self, set: I) -> bool
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut mask = 0u64;
        for id in set {
            match self.elements.iter().position(|e| e.as_str() == id.as_ref()) {
                Some(i) => mask |= 1 << i,
                None => return false,
            }
        }
        self.contains_mask(mask)
    }

    pub fn full_mask(&self) -> u64 {
        full(self.elements.len())
    }

    pub fn sets(&self) -> Vec<BTreeSet<ElementId>> {
        self.masks.iter().map(|&m| self.decode(m)).collect()
    }

    pub fn decode(&self, mask: u64) -> BTreeSet<ElementId> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, id)| id.clone())
            .collect()
    }
}

fn full(n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        u64::MAX >> (64 - n)
    }
}

// Direct check of the defining condition: b ∈ A and (a, b) ∈ R imply a ∈ A.
fn open_by_definition(pairs: &[(usize, usize)], mask: u64) -> bool {
    pairs
        .iter()
        .all(|&(a, b)| mask >> b & 1 == 0 || mask >> a & 1 == 1)
}

fn raw_pairs(space: &Space) -> Vec<(usize, usize)> {
    space
        .incidence()
        .map(|(a, b)| {
            (
                space.index_of(a.as_str()).expect("own element"),
                space.index_of(b.as_str()).expect("own element"),
            )
        })
        .collect()
}

/// All open sets of `space`, found by testing each of the `2^n` subsets.
pub fn enumerate_topology(space: &Space, guard: SizeGuard) -> Result<OpenSetFamily> {
    guard.check(space)?;
    let pairs = raw_pairs(space);
    let masks = (0..=full(space.len()))
        .filter(|&m| open_by_definition(&pairs, m))
        .collect();
    Ok(OpenSetFamily {
        elements: space.ids().to_vec(),
        masks,
    })
}

/// Continuity as "every open preimage is open".
pub fn oracle_is_continuous(map: &SpaceMap, guard: SizeGuard) -> Result<bool> {
    guard.check(map.domain())?;
    let target = enumerate_topology(map.codomain(), guard)?;
    let domain = map.domain();
    let pairs = raw_pairs(domain);
    let image: Vec<usize> = map
        .pairs()
        .map(|(_, to)| map.codomain().index_of(to.as_str()).expect("own element"))
        .collect();
    Ok(target.masks().iter().all(|&open| {
        let preimage = image
            .iter()
            .enumerate()
            .filter(|(_, &j)| open >> j & 1 == 1)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        open_by_definition(&pairs, preimage)
    }))
}

/// Outcome of [`oracle_axiom_check`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub open_sets: usize,
    pub violations: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the topology axioms on the enumerated family: `∅` and `X` are open,
/// unions and intersections of open sets are open, and the intersection of
/// all open sets around each point (an arbitrary intersection) is open.
pub fn oracle_axiom_check(space: &Space, guard: SizeGuard) -> Result<AxiomReport> {
    let family = enumerate_topology(space, guard)?;
    let members: HashSet<u64> = family.masks().iter().copied().collect();
    let mut report = AxiomReport {
        open_sets: family.len(),
        violations: Vec::new(),
    };
    let describe = |m: u64| format!("{:?}", family.decode(m));

    if !members.contains(&0) {
        report.violations.push("empty set is not open".into());
    }
    if !members.contains(&family.full_mask()) {
        report.violations.push("whole space is not open".into());
    }
    let masks = family.masks();
    // Pairwise closure of a finite family gives closure under every finite,
    // hence every, union and intersection of members.
    for (i, &u) in masks.iter().enumerate() {
        for &v in &masks[i..] {
            if !members.contains(&(u | v)) {
                report
                    .violations
                    .push(format!("union of {} and {} is not open", describe(u), describe(v)));
            }
            if !members.contains(&(u & v)) {
                report.violations.push(format!(
                    "intersection of {} and {} is not open",
                    describe(u),
                    describe(v)
                ));
            }
        }
    }
    for p in 0..space.len() {
        let around = masks
            .iter()
            .filter(|&&m| m >> p & 1 == 1)
            .fold(family.full_mask(), |acc, &m| acc & m);
        if !members.contains(&around) {
            report.violations.push(format!(
                "intersection of all open sets around {} is not open",
                space.id(p)
            ));
        }
    }
    let all = masks.iter().fold(family.full_mask(), |acc, &m| acc & m);
    if !members.contains(&all) {
        report
            .violations
            .push("intersection of the whole family is not open".into());
    }
    Ok(report)
}

/// Closure as the complement of the largest open set missing `subset`.
pub fn closure_by_enumeration<I, S>(space: &Space, subset: I, guard: SizeGuard) -> Result<BTreeSet<ElementId>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let family = enumerate_topology(space, guard)?;
    let target = subset_mask(space, subset)?;
    let outside = family
        .masks()
        .iter()
        .filter(|&&m| m & target == 0)
        .fold(0u64, |acc, &m| acc | m);
    Ok(family.decode(family.full_mask() & !outside))
}

/// Star as the intersection of all open supersets of `subset`.
pub fn star_by_enumeration<I, S>(space: &Space, subset: I, guard: SizeGuard) -> Result<BTreeSet<ElementId>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let family = enumerate_topology(space, guard)?;
    let target = subset_mask(space, subset)?;
    let smallest = family
        .masks()
        .iter()
        .filter(|&&m| m & target == target)
        .fold(family.full_mask(), |acc, &m| acc & m);
    Ok(family.decode(smallest))
}

fn subset_mask<I, S>(space: &Space, subset: I) -> Result<u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut mask = 0u64;
    for id in subset {
        let i = space
            .index_of(id.as_ref())
            .ok_or_else(|| Error::UnknownElement(id.as_ref().to_string()))?;
        mask |= 1 << i;
    }
    Ok(mask)
}

/// Tries every bijection `x → y` and returns the first (in lexicographic
/// permutation order) that maps the open-set family of `x` onto that of `y`.
pub fn exhaustive_homeomorphism(
    x: &Space,
    y: &Space,
    guard: SizeGuard,
) -> Result<Option<Vec<(ElementId, ElementId)>>> {
    guard.check(x)?;
    guard.check(y)?;
    if x.len() != y.len() {
        return Ok(None);
    }
    let fx = enumerate_topology(x, SizeGuard::ENUMERATION.widen(guard))?;
    let fy = enumerate_topology(y, SizeGuard::ENUMERATION.widen(guard))?;
    if fx.len() != fy.len() {
        return Ok(None);
    }
    let n = x.len();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let maps_onto = fx.masks().iter().all(|&m| {
            let image = (0..n)
                .filter(|&i| m >> i & 1 == 1)
                .fold(0u64, |acc, i| acc | 1 << perm[i]);
            fy.contains_mask(image)
        });
        if maps_onto {
            return Ok(Some(
                (0..n)
                    .map(|i| (x.id(i).clone(), y.id(perm[i]).clone()))
                    .collect(),
            ));
        }
        if !next_permutation(&mut perm) {
            return Ok(None);
        }
    }
}

impl SizeGuard {
    fn widen(self, other: SizeGuard) -> SizeGuard {
        SizeGuard {
            max_elements: self.max_elements.max(other.max_elements),
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).expect("exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}
