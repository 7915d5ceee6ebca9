//! Functions between spaces, continuity, and homeomorphism search.
//!
//! A map between incidence spaces `(X, R) → (Y, S)` is continuous exactly
//! when every stored pair `(a, b) ∈ R` lands in the target preorder:
//! `(f(a), f(b)) ∈ S*`. This only touches `|R|` pairs instead of every open
//! set of the codomain, and on failure the offending pair is returned.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::space::{ElementId, Space};

/// Default cap on the number of elements `find_homeomorphism` accepts.
pub const DEFAULT_HOMEOMORPHISM_BOUND: usize = 10;

/// A total function between the element sets of two spaces, stored as a table.
#[derive(Clone)]
pub struct SpaceMap {
    domain: Arc<Space>,
    codomain: Arc<Space>,
    table: Vec<usize>,
}

/// An incidence pair whose image is not in the codomain's preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub from: ElementId,
    pub to: ElementId,
    pub image_from: ElementId,
    pub image_to: ElementId,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}) maps to ({}, {}), which is not in the target preorder",
            self.from, self.to, self.image_from, self.image_to
        )
    }
}

impl SpaceMap {
    /// Builds a map from `(from, to)` pairs. Every domain element must appear
    /// exactly once and every image must be a codomain element.
    pub fn new<I, S, T>(domain: Arc<Space>, codomain: Arc<Space>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut table = vec![usize::MAX; domain.len()];
        for (from, to) in pairs {
            let i = domain.require(from.as_ref())?;
            let j = codomain.require(to.as_ref())?;
            if table[i] != usize::MAX {
                return Err(Error::DuplicateMapping(domain.id(i).clone()));
            }
            table[i] = j;
        }
        if let Some(i) = table.iter().position(|&j| j == usize::MAX) {
            return Err(Error::NotTotal(domain.id(i).clone()));
        }
        Ok(SpaceMap {
            domain,
            codomain,
            table,
        })
    }

    pub(crate) fn from_table(domain: Arc<Space>, codomain: Arc<Space>, table: Vec<usize>) -> Self {
        debug_assert_eq!(domain.len(), table.len());
        debug_assert!(table.iter().all(|&j| j < codomain.len()));
        SpaceMap {
            domain,
            codomain,
            table,
        }
    }

    pub fn identity(space: Arc<Space>) -> Self {
        let table = (0..space.len()).collect();
        SpaceMap {
            domain: space.clone(),
            codomain: space,
            table,
        }
    }

    /// The map sending everything to `target`.
    pub fn constant(domain: Arc<Space>, codomain: Arc<Space>, target: &str) -> Result<Self> {
        let j = codomain.require(target)?;
        let table = vec![j; domain.len()];
        Ok(SpaceMap {
            domain,
            codomain,
            table,
        })
    }

    pub fn domain(&self) -> &Arc<Space> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Space> {
        &self.codomain
    }

    pub(crate) fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, id: &str) -> Option<&ElementId> {
        self.domain
            .index_of(id)
            .map(|i| self.codomain.id(self.table[i]))
    }

    /// `(from, to)` pairs in domain order.
    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (&ElementId, &ElementId)> + '_ {
        self.table
            .iter()
            .enumerate()
            .map(move |(i, &j)| (self.domain.id(i), self.codomain.id(j)))
    }

    /// First incidence pair (in sorted order) whose image leaves the target
    /// preorder, or `None` if the map is continuous.
    pub fn continuity_witness(&self) -> Option<Witness> {
        self.domain
            .incidence_indices()
            .iter()
            .find(|&&(a, b)| !self.codomain.reaches(self.table[a], self.table[b]))
            .map(|&(a, b)| Witness {
                from: self.domain.id(a).clone(),
                to: self.domain.id(b).clone(),
                image_from: self.codomain.id(self.table[a]).clone(),
                image_to: self.codomain.id(self.table[b]).clone(),
            })
    }

    pub fn is_continuous(&self) -> bool {
        self.continuity_witness().is_none()
    }

    /// `g ∘ f`: first `f`, then `g`.
    pub fn compose(g: &SpaceMap, f: &SpaceMap) -> Result<SpaceMap> {
        if !same_space(&f.codomain, &g.domain) {
            return Err(Error::DomainMismatch {
                expected: f.codomain.name().to_string(),
                found: g.domain.name().to_string(),
            });
        }
        let table = f.table.iter().map(|&j| g.table[j]).collect();
        Ok(SpaceMap {
            domain: f.domain.clone(),
            codomain: g.codomain.clone(),
            table,
        })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &SpaceMap) -> Result<SpaceMap> {
        SpaceMap::compose(other, self)
    }

    pub fn is_identity(&self) -> bool {
        same_space(&self.domain, &self.codomain) && self.table.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_bijective(&self) -> bool {
        if self.domain.len() != self.codomain.len() {
            return false;
        }
        let mut hit = FixedBitSet::with_capacity(self.codomain.len());
        self.table.iter().all(|&j| {
            let fresh = !hit.contains(j);
            hit.insert(j);
            fresh
        })
    }

    /// The same table between renamed copies of the end spaces. Both
    /// replacements must have the same element lists as the originals.
    pub fn with_spaces(&self, domain: Arc<Space>, codomain: Arc<Space>) -> Result<SpaceMap> {
        if domain.ids() != self.domain.ids() {
            return Err(Error::DomainMismatch {
                expected: self.domain.name().to_string(),
                found: domain.name().to_string(),
            });
        }
        if codomain.ids() != self.codomain.ids() {
            return Err(Error::DomainMismatch {
                expected: self.codomain.name().to_string(),
                found: codomain.name().to_string(),
            });
        }
        Ok(SpaceMap {
            domain,
            codomain,
            table: self.table.clone(),
        })
    }
}

impl PartialEq for SpaceMap {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.domain, &other.domain)
            && same_space(&self.codomain, &other.codomain)
            && self.table == other.table
    }
}

impl fmt::Debug for SpaceMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceMap")
            .field("domain", &self.domain.name())
            .field("codomain", &self.codomain.name())
            .field("pairs", &self.pairs().collect::<Vec<_>>())
            .finish()
    }
}

pub(crate) fn same_space(a: &Arc<Space>, b: &Arc<Space>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// `f: X → Y` and `g: Y → X` are mutually inverse continuous maps.
pub fn is_homeomorphism(f: &SpaceMap, g: &SpaceMap) -> Result<bool> {
    if !same_space(&f.codomain, &g.domain) {
        return Err(Error::DomainMismatch {
            expected: f.codomain.name().to_string(),
            found: g.domain.name().to_string(),
        });
    }
    if !same_space(&g.codomain, &f.domain) {
        return Err(Error::DomainMismatch {
            expected: f.domain.name().to_string(),
            found: g.codomain.name().to_string(),
        });
    }
    Ok(f.is_continuous()
        && g.is_continuous()
        && SpaceMap::compose(g, f)?.is_identity()
        && SpaceMap::compose(f, g)?.is_identity())
}

/// Per-element invariants preserved by homeomorphisms. Used for pruning.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Signature {
    dimension: usize,
    codimension: usize,
    covers_down: usize,
    covers_up: usize,
    closure_size: usize,
    star_size: usize,
}

fn signatures(space: &Space, hasse: &[(usize, usize)]) -> Vec<Signature> {
    let n = space.len();
    let dims = space.dimensions();
    let mut covered_by = vec![Vec::new(); n];
    for &(a, b) in hasse {
        covered_by[b].push(a);
    }
    // every element covering b has a strictly larger dimension
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(dims[i]));
    let mut codims = vec![0usize; n];
    for &b in &order {
        codims[b] = covered_by[b]
            .iter()
            .map(|&a| codims[a] + 1)
            .max()
            .unwrap_or(0);
    }
    let above = space.above();
    let below = space.below();
    (0..n)
        .map(|i| Signature {
            dimension: dims[i],
            codimension: codims[i],
            covers_down: hasse.iter().filter(|&&(a, _)| a == i).count(),
            covers_up: covered_by[i].len(),
            closure_size: below[i].count_ones(..),
            star_size: above[i].count_ones(..),
        })
        .collect()
}

/// Exact search for a homeomorphism `x → y`.
///
/// Both spaces must have at most `bound` elements. Elements of `x` are
/// assigned in id order and candidates tried in id order, so the result is
/// deterministic. A bijection is a homeomorphism iff it preserves and
/// reflects the preorder, which is what each extension step checks.
pub fn find_homeomorphism(x: &Arc<Space>, y: &Arc<Space>, bound: usize) -> Result<Option<SpaceMap>> {
    for s in [x, y] {
        if s.len() > bound {
            return Err(Error::SizeBound {
                size: s.len(),
                bound,
            });
        }
    }
    if x.len() != y.len() {
        return Ok(None);
    }
    let hx = crate::space::hasse(&x.strict_below());
    let hy = crate::space::hasse(&y.strict_below());
    if hx.len() != hy.len() {
        return Ok(None);
    }
    let sx = signatures(x, &hx);
    let sy = signatures(y, &hy);
    let mut px = sx.clone();
    let mut py = sy.clone();
    px.sort();
    py.sort();
    if px != py {
        return Ok(None);
    }

    let mut candidates: BTreeMap<Signature, Vec<usize>> = BTreeMap::new();
    for (j, sig) in sy.iter().enumerate() {
        candidates.entry(*sig).or_default().push(j);
    }

    let n = x.len();
    let mut assignment = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if extend(x, y, &sx, &candidates, 0, &mut assignment, &mut used) {
        let map = SpaceMap::from_table(x.clone(), y.clone(), assignment);
        debug_assert!(map.is_continuous());
        Ok(Some(map))
    } else {
        Ok(None)
    }
}

fn extend(
    x: &Space,
    y: &Space,
    sx: &[Signature],
    candidates: &BTreeMap<Signature, Vec<usize>>,
    next: usize,
    assignment: &mut [usize],
    used: &mut [bool],
) -> bool {
    if next == x.len() {
        return true;
    }
    for &cand in &candidates[&sx[next]] {
        if used[cand] {
            continue;
        }
        let consistent = (0..next).all(|u| {
            let fu = assignment[u];
            x.reaches(next, u) == y.reaches(cand, fu) && x.reaches(u, next) == y.reaches(fu, cand)
        });
        if !consistent {
            continue;
        }
        assignment[next] = cand;
        used[cand] = true;
        if extend(x, y, sx, candidates, next + 1, assignment, used) {
            return true;
        }
        used[cand] = false;
    }
    assignment[next] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(s: Space) -> Arc<Space> {
        Arc::new(s)
    }

    fn segment() -> Arc<Space> {
        arc(Space::from_strs("seg", ["e", "v1", "v2"], [("e", "v1"), ("e", "v2")]).unwrap())
    }

    fn ex1() -> Arc<Space> {
        arc(Space::from_strs(
            "EX1",
            ["A", "B", "a", "e", "f", "g"],
            [("A", "a"), ("B", "a"), ("B", "e"), ("B", "f"), ("B", "g")],
        )
        .unwrap())
    }

    fn ex2() -> Arc<Space> {
        arc(Space::from_strs(
            "EX2",
            ["C", "b", "c", "x"],
            [("C", "c"), ("C", "b"), ("c", "x"), ("b", "x")],
        )
        .unwrap())
    }

    #[test]
    fn construction_checks_totality() {
        let s = segment();
        let err = SpaceMap::new(s.clone(), s.clone(), [("e", "e"), ("v1", "v1")]).unwrap_err();
        assert!(matches!(err, Error::NotTotal(id) if id.as_str() == "v2"));
        let err = SpaceMap::new(s.clone(), s.clone(), [("e", "e"), ("e", "v1")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateMapping(_)));
        let err = SpaceMap::new(s.clone(), s.clone(), [("e", "zz")]).unwrap_err();
        assert!(matches!(err, Error::UnknownElement(_)));
    }

    #[test]
    fn identity_maps() {
        for s in [ex1(), ex2(), arc(Space::empty("none"))] {
            let id = SpaceMap::identity(s.clone());
            assert_eq!(id.pairs().len(), s.len());
            assert!(id.is_continuous());
            assert!(is_homeomorphism(&id, &id).unwrap());
        }
    }

    #[test]
    fn swapped_segment_is_not_continuous() {
        let s = segment();
        let f = SpaceMap::new(s.clone(), s.clone(), [("e", "v1"), ("v1", "e"), ("v2", "v2")]).unwrap();
        let w = f.continuity_witness().unwrap();
        assert_eq!((w.from.as_str(), w.to.as_str()), ("e", "v1"));
        assert_eq!((w.image_from.as_str(), w.image_to.as_str()), ("v1", "e"));
    }

    #[test]
    fn composition() {
        let s = segment();
        let id = SpaceMap::identity(s.clone());
        assert_eq!(SpaceMap::compose(&id, &id).unwrap(), id);

        let point = arc(Space::from_strs("pt", ["P"], Vec::<(&str, &str)>::new()).unwrap());
        let c = SpaceMap::constant(s.clone(), point.clone(), "P").unwrap();
        let swap = SpaceMap::new(s.clone(), s.clone(), [("e", "e"), ("v1", "v2"), ("v2", "v1")]).unwrap();
        assert_eq!(SpaceMap::compose(&c, &swap).unwrap(), c);
        assert!(c.is_continuous());

        let err = SpaceMap::compose(&swap, &c).unwrap_err();
        assert!(matches!(err, Error::DomainMismatch { .. }));
    }

    #[test]
    fn homeomorphism_checks() {
        let s = segment();
        let swap = SpaceMap::new(s.clone(), s.clone(), [("e", "e"), ("v1", "v2"), ("v2", "v1")]).unwrap();
        assert!(is_homeomorphism(&swap, &swap).unwrap());

        let e2 = ex2();
        let c = SpaceMap::constant(e2.clone(), e2.clone(), "x").unwrap();
        let id = SpaceMap::identity(e2.clone());
        assert!(!is_homeomorphism(&c, &id).unwrap());
        assert!(is_homeomorphism(&c, &SpaceMap::identity(s)).is_err());
    }

    #[test]
    fn continuous_bijection_need_not_be_homeomorphism() {
        // finer (discrete) to coarser relation on the same points
        let discrete = arc(Space::from_strs("d", ["a", "b"], Vec::<(&str, &str)>::new()).unwrap());
        let chain = arc(Space::from_strs("c", ["a", "b"], [("a", "b")]).unwrap());
        let f = SpaceMap::new(discrete.clone(), chain.clone(), [("a", "a"), ("b", "b")]).unwrap();
        let g = SpaceMap::new(chain.clone(), discrete.clone(), [("a", "a"), ("b", "b")]).unwrap();
        assert!(f.is_continuous() && f.is_bijective());
        let w = g.continuity_witness().unwrap();
        assert_eq!((w.from.as_str(), w.to.as_str()), ("a", "b"));
        assert!(!is_homeomorphism(&f, &g).unwrap());
    }

    #[test]
    fn homeomorphism_search() {
        assert!(find_homeomorphism(&ex1(), &ex2(), 10).unwrap().is_none());

        let renamed = arc(Space::from_strs("seg2", ["E", "p", "q"], [("E", "p"), ("E", "q")]).unwrap());
        let f = find_homeomorphism(&segment(), &renamed, 10).unwrap().unwrap();
        assert_eq!(f.apply("e").unwrap().as_str(), "E");

        let swapped = arc(Space::from_strs(
            "EX2'",
            ["C", "b", "c", "x"],
            [("C", "b"), ("C", "c"), ("b", "x"), ("c", "x")],
        )
        .unwrap());
        let f = find_homeomorphism(&ex2(), &swapped, 10).unwrap().unwrap();
        let g = find_homeomorphism(&swapped, &ex2(), 10).unwrap().unwrap();
        assert!(is_homeomorphism(&f, &g).unwrap());

        let err = find_homeomorphism(&ex1(), &ex1(), 5).unwrap_err();
        assert!(matches!(err, Error::SizeBound { size: 6, bound: 5 }));
    }

    #[test]
    fn transitive_pairs_do_not_affect_homeomorphism() {
        let reduced = arc(Space::from_strs("r", ["s", "f", "v"], [("s", "f"), ("f", "v")]).unwrap());
        let full = arc(Space::from_strs("t", ["s", "f", "v"], [("s", "f"), ("f", "v"), ("s", "v")]).unwrap());
        assert!(find_homeomorphism(&reduced, &full, 10).unwrap().is_some());
    }
}
