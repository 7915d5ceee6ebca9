//! Finite topological spaces stored as incidence relations.
//!
//! A [`Space`] is an element set `X` together with a relation `R ⊆ X × X`.
//! A pair `(a, b)` in `R` reads "`a` is bounded by `b`": faces are bounded by
//! edges, edges by vertices. The relation generates the topology whose open
//! sets are the subsets `A` such that `b ∈ A` implies `a ∈ A` for every
//! `(a, b) ∈ R`. Closure therefore walks the incidence downward (towards
//! vertices) and the star walks it upward (towards solids).
//!
//! The incidence is kept exactly as given. It must be acyclic and free of
//! self-pairs; the reflexive-transitive closure `R*` (the specialisation
//! preorder) is computed lazily and cached.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque key/value annotations on an element (coordinates, semantic class, ...).
pub type Attributes = BTreeMap<String, String>;

/// Identifier of a single element. Non-empty, no whitespace, no `,`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(Error::InvalidId(id));
        }
        Ok(ElementId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ElementId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        ElementId::new(value)
    }
}

impl TryFrom<&str> for ElementId {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        ElementId::new(value)
    }
}

impl FromStr for ElementId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ElementId::new(s)
    }
}

impl From<ElementId> for String {
    fn from(id: ElementId) -> Self {
        id.0
    }
}

impl Borrow<str> for ElementId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for ElementId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A finite topological data type `(X, R)`.
///
/// Elements are kept sorted by id, so element indices are stable and
/// canonical. Values are immutable once built and safe to share across
/// threads; the cached preorder is filled at most once.
#[derive(Clone)]
pub struct Space {
    name: String,
    ids: Vec<ElementId>,
    index: HashMap<ElementId, usize>,
    attrs: Vec<Attributes>,
    incidence: Vec<(usize, usize)>,
    boundary: Vec<Vec<usize>>,
    coboundary: Vec<Vec<usize>>,
    // every pair (a, b) of the incidence has a before b
    topo_order: Vec<usize>,
    below: OnceLock<Vec<FixedBitSet>>,
    above: OnceLock<Vec<FixedBitSet>>,
    dims: OnceLock<Vec<usize>>,
}

impl Space {
    /// Builds and validates a space. The incidence is stored as given.
    pub fn new<E, P>(name: impl Into<String>, elements: E, incidence: P) -> Result<Self>
    where
        E: IntoIterator<Item = ElementId>,
        P: IntoIterator<Item = (ElementId, ElementId)>,
    {
        Self::with_attributes(
            name,
            elements.into_iter().map(|id| (id, Attributes::new())),
            incidence,
        )
    }

    /// Like [`Space::new`] but with per-element attributes.
    pub fn with_attributes<E, P>(name: impl Into<String>, elements: E, incidence: P) -> Result<Self>
    where
        E: IntoIterator<Item = (ElementId, Attributes)>,
        P: IntoIterator<Item = (ElementId, ElementId)>,
    {
        let elements: Vec<(ElementId, Attributes)> = elements.into_iter().collect();
        let mut position = HashMap::with_capacity(elements.len());
        for (i, (id, _)) in elements.iter().enumerate() {
            if position.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateElement(id.clone()));
            }
        }
        let mut pairs = Vec::new();
        for (a, b) in incidence {
            match (position.get(&a), position.get(&b)) {
                (Some(&i), Some(&j)) => pairs.push((i, j)),
                _ => {
                    return Err(Error::DanglingIncidence {
                        from: a.0,
                        to: b.0,
                    })
                }
            }
        }
        Self::from_unsorted(name.into(), elements, pairs).map(|(space, _)| space)
    }

    /// Convenience constructor from string ids, validating each token.
    pub fn from_strs<E, S, P, T>(name: impl Into<String>, elements: E, incidence: P) -> Result<Self>
    where
        E: IntoIterator<Item = S>,
        S: AsRef<str>,
        P: IntoIterator<Item = (T, T)>,
        T: AsRef<str>,
    {
        let elements = elements
            .into_iter()
            .map(|s| ElementId::new(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let incidence = incidence
            .into_iter()
            .map(|(a, b)| Ok((ElementId::new(a.as_ref())?, ElementId::new(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, elements, incidence)
    }

    /// The empty space.
    pub fn empty(name: impl Into<String>) -> Self {
        Self::from_parts(name.into(), Vec::new(), Vec::new(), Vec::new())
            .expect("empty space is valid")
    }

    /// Builds a space from elements in arbitrary order and incidence given as
    /// positions into that order. Returns the space together with the map
    /// from input position to element index.
    pub(crate) fn from_unsorted(
        name: String,
        elements: Vec<(ElementId, Attributes)>,
        pairs: Vec<(usize, usize)>,
    ) -> Result<(Self, Vec<usize>)> {
        let mut order: Vec<usize> = (0..elements.len()).collect();
        order.sort_by(|&a, &b| elements[a].0.cmp(&elements[b].0));
        for w in order.windows(2) {
            if elements[w[0]].0 == elements[w[1]].0 {
                return Err(Error::DuplicateElement(elements[w[0]].0.clone()));
            }
        }
        let mut rank = vec![0; elements.len()];
        for (sorted, &pos) in order.iter().enumerate() {
            rank[pos] = sorted;
        }
        let mut slots: Vec<Option<(ElementId, Attributes)>> =
            elements.into_iter().map(Some).collect();
        let (ids, attrs): (Vec<_>, Vec<_>) = order
            .iter()
            .map(|&pos| slots[pos].take().expect("each position taken once"))
            .unzip();
        let mut incidence = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (a, b) = (rank[a], rank[b]);
            if a == b {
                return Err(Error::SelfLoop(ids[a].clone()));
            }
            incidence.push((a, b));
        }
        let space = Self::from_parts(name, ids, attrs, incidence)?;
        Ok((space, rank))
    }

    /// `ids` must be sorted and unique, pairs in range and irreflexive.
    pub(crate) fn from_parts(
        name: String,
        ids: Vec<ElementId>,
        attrs: Vec<Attributes>,
        mut incidence: Vec<(usize, usize)>,
    ) -> Result<Self> {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(ids.len(), attrs.len());
        incidence.sort_unstable();
        incidence.dedup();

        let n = ids.len();
        let mut boundary = vec![Vec::new(); n];
        let mut coboundary = vec![Vec::new(); n];
        for &(a, b) in &incidence {
            debug_assert_ne!(a, b);
            boundary[a].push(b);
            coboundary[b].push(a);
        }

        let mut pending: Vec<usize> = coboundary.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut topo_order = Vec::with_capacity(n);
        while let Some(a) = queue.pop_front() {
            topo_order.push(a);
            for &b in &boundary[a] {
                pending[b] -= 1;
                if pending[b] == 0 {
                    queue.push_back(b);
                }
            }
        }
        if topo_order.len() < n {
            let cycle = find_cycle(&coboundary, &pending);
            return Err(Error::CyclicIncidence {
                cycle: cycle.into_iter().map(|i| ids[i].clone()).collect(),
            });
        }

        let index = ids.iter().cloned().zip(0..).collect();
        Ok(Space {
            name,
            ids,
            index,
            attrs,
            incidence,
            boundary,
            coboundary,
            topo_order,
            below: OnceLock::new(),
            above: OnceLock::new(),
            dims: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Same space under another name.
    pub fn renamed(&self, name: impl Into<String>) -> Space {
        let mut s = self.clone();
        s.name = name.into();
        s
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Element ids in canonical (lexicographic) order.
    pub fn ids(&self) -> &[ElementId] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &ElementId {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn attributes(&self, id: &str) -> Option<&Attributes> {
        self.index_of(id).map(|i| &self.attrs[i])
    }

    pub(crate) fn attributes_at(&self, index: usize) -> &Attributes {
        &self.attrs[index]
    }

    /// Stored incidence pairs, sorted.
    pub fn incidence(&self) -> impl ExactSizeIterator<Item = (&ElementId, &ElementId)> + '_ {
        self.incidence
            .iter()
            .map(move |&(a, b)| (&self.ids[a], &self.ids[b]))
    }

    pub(crate) fn incidence_indices(&self) -> &[(usize, usize)] {
        &self.incidence
    }

    /// Reflexive downward closure of each element: `below()[a]` holds every
    /// `b` with `(a, b) ∈ R*`.
    pub(crate) fn below(&self) -> &[FixedBitSet] {
        self.below.get_or_init(|| {
            let n = self.len();
            let mut below = vec![FixedBitSet::with_capacity(n); n];
            for &a in self.topo_order.iter().rev() {
                let mut set = FixedBitSet::with_capacity(n);
                set.insert(a);
                for &b in &self.boundary[a] {
                    set.union_with(&below[b]);
                }
                below[a] = set;
            }
            below
        })
    }

    /// Reflexive upward closure: `above()[b]` holds every `a` with `(a, b) ∈ R*`.
    pub(crate) fn above(&self) -> &[FixedBitSet] {
        self.above.get_or_init(|| {
            let n = self.len();
            let mut above = vec![FixedBitSet::with_capacity(n); n];
            for &b in &self.topo_order {
                let mut set = FixedBitSet::with_capacity(n);
                set.insert(b);
                for &a in &self.coboundary[b] {
                    set.union_with(&above[a]);
                }
                above[b] = set;
            }
            above
        })
    }

    /// `(a, b) ∈ R*` by index.
    pub(crate) fn reaches(&self, a: usize, b: usize) -> bool {
        self.below()[a].contains(b)
    }

    /// `(a, b) ∈ R*`, i.e. `b` lies in the closure of `{a}`.
    pub fn in_preorder(&self, a: &str, b: &str) -> Result<bool> {
        let a = self.require(a)?;
        let b = self.require(b)?;
        Ok(self.reaches(a, b))
    }

    pub(crate) fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownElement(id.to_string()))
    }

    pub(crate) fn mask<I, S>(&self, items: I) -> Result<FixedBitSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut mask = FixedBitSet::with_capacity(self.len());
        for item in items {
            mask.insert(self.require(item.as_ref())?);
        }
        Ok(mask)
    }

    fn ids_of(&self, mask: &FixedBitSet) -> BTreeSet<ElementId> {
        mask.ones().map(|i| self.ids[i].clone()).collect()
    }

    /// Whether `subset` is open: no stored pair leads out of it upward.
    pub fn is_open<I, S>(&self, subset: I) -> Result<bool>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mask = self.mask(subset)?;
        Ok(self.is_open_mask(&mask))
    }

    pub(crate) fn is_open_mask(&self, mask: &FixedBitSet) -> bool {
        self.incidence
            .iter()
            .all(|&(a, b)| !mask.contains(b) || mask.contains(a))
    }

    /// The specialisation preorder `R*` as sorted pairs.
    pub fn preorder(&self) -> Vec<(ElementId, ElementId)> {
        let below = self.below();
        let mut pairs = Vec::new();
        for (a, set) in below.iter().enumerate() {
            for b in set.ones() {
                pairs.push((self.ids[a].clone(), self.ids[b].clone()));
            }
        }
        pairs
    }

    /// Smallest closed superset of `subset`.
    pub fn closure<I, S>(&self, subset: I) -> Result<BTreeSet<ElementId>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mask = self.mask(subset)?;
        Ok(self.ids_of(&self.closure_mask(&mask)))
    }

    pub(crate) fn closure_mask(&self, mask: &FixedBitSet) -> FixedBitSet {
        let below = self.below();
        let mut out = FixedBitSet::with_capacity(self.len());
        for a in mask.ones() {
            out.union_with(&below[a]);
        }
        out
    }

    /// Smallest open superset of `subset`.
    pub fn star<I, S>(&self, subset: I) -> Result<BTreeSet<ElementId>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mask = self.mask(subset)?;
        Ok(self.ids_of(&self.star_mask(&mask)))
    }

    pub(crate) fn star_mask(&self, mask: &FixedBitSet) -> FixedBitSet {
        let above = self.above();
        let mut out = FixedBitSet::with_capacity(self.len());
        for b in mask.ones() {
            out.union_with(&above[b]);
        }
        out
    }

    /// Per-element dimension, indexed like [`Space::ids`].
    pub fn dimensions(&self) -> &[usize] {
        self.dims.get_or_init(|| {
            let mut dims = vec![0; self.len()];
            for &a in self.topo_order.iter().rev() {
                dims[a] = self.boundary[a]
                    .iter()
                    .map(|&b| dims[b] + 1)
                    .max()
                    .unwrap_or(0);
            }
            dims
        })
    }

    /// Length of the longest incidence chain starting at `id`.
    pub fn dimension(&self, id: &str) -> Result<usize> {
        let i = self.require(id)?;
        Ok(self.dimensions()[i])
    }

    /// Maximum element dimension, `-1` for the empty space.
    pub fn space_dimension(&self) -> i64 {
        self.dimensions()
            .iter()
            .max()
            .map_or(-1, |&d| d as i64)
    }

    /// Number of elements per dimension.
    pub fn dimension_profile(&self) -> BTreeMap<usize, usize> {
        let mut profile = BTreeMap::new();
        for &d in self.dimensions() {
            *profile.entry(d).or_insert(0) += 1;
        }
        profile
    }

    /// The same space with its incidence replaced by the transitive reduction.
    pub fn transitive_reduce(&self) -> Space {
        let incidence = hasse(&self.strict_below());
        Space::from_parts(self.name.clone(), self.ids.clone(), self.attrs.clone(), incidence)
            .expect("reduction of an acyclic relation is acyclic")
    }

    pub(crate) fn strict_below(&self) -> Vec<FixedBitSet> {
        self.below()
            .iter()
            .enumerate()
            .map(|(a, set)| {
                let mut set = set.clone();
                set.set(a, false);
                set
            })
            .collect()
    }
}

/// Covering pairs of a strict partial order given as per-element down-sets.
/// `strict` must be irreflexive and transitive.
pub(crate) fn hasse(strict: &[FixedBitSet]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (a, down) in strict.iter().enumerate() {
        let mut covers = down.clone();
        for c in down.ones() {
            covers.difference_with(&strict[c]);
        }
        pairs.extend(covers.ones().map(|b| (a, b)));
    }
    pairs
}

// Kahn left `pending[i] > 0` for every node on or behind a cycle; each such
// node has a predecessor that is also pending, so walking predecessors must
// revisit a node.
fn find_cycle(coboundary: &[Vec<usize>], pending: &[usize]) -> Vec<usize> {
    let start = (0..pending.len())
        .find(|&i| pending[i] > 0)
        .expect("a cycle exists");
    let mut seen = vec![usize::MAX; pending.len()];
    let mut path = Vec::new();
    let mut cur = start;
    while seen[cur] == usize::MAX {
        seen[cur] = path.len();
        path.push(cur);
        cur = *coboundary[cur]
            .iter()
            .find(|&&p| pending[p] > 0)
            .expect("pending node has a pending predecessor");
    }
    let mut cycle = path.split_off(seen[cur]);
    // walked against the incidence direction
    cycle.reverse();
    cycle.push(cycle[0]);
    cycle
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.ids == other.ids
            && self.incidence == other.incidence
            && self.attrs == other.attrs
    }
}

impl Eq for Space {}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("name", &self.name)
            .field("elements", &self.ids)
            .field("incidence", &self.incidence().collect::<Vec<_>>())
            .finish()
    }
}
