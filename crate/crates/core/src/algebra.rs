//! Topological counterparts of the relational operators.
//!
//! | relational op | construction | maps returned             |
//! |---------------|--------------|---------------------------|
//! | selection     | subspace     | inclusion into the input  |
//! | projection    | quotient     | projection onto classes   |
//! | union         | pasting      | inclusions of both inputs |
//! | intersection  | pullback     | inclusions into inputs    |
//! | product       | product      | two projections           |
//! | Θ-join        | subspace of the product | two projections |
//! | equi-join     | fibre product | two projections          |
//!
//! Every returned map is continuous; in debug builds this is asserted after
//! each operation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::maps::{same_space, SpaceMap};
use crate::space::{hasse, Attributes, ElementId, Space};

pub const DEFAULT_SEPARATOR: &str = "×";
pub const DEFAULT_PRODUCT_WARN_LIMIT: usize = 1_000_000;

/// How pair elements of products and joins are named.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairOptions {
    /// Placed between the two component ids: `left{separator}right`.
    pub separator: String,
    /// A warning is logged when a product would exceed this many elements.
    pub warn_limit: usize,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            separator: DEFAULT_SEPARATOR.to_string(),
            warn_limit: DEFAULT_PRODUCT_WARN_LIMIT,
        }
    }
}

impl PairOptions {
    pub fn render(&self, left: &ElementId, right: &ElementId) -> Result<ElementId> {
        ElementId::new(format!("{left}{}{right}", self.separator))
    }
}

/// Result of a selection: the subspace and its inclusion into the source.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub space: Arc<Space>,
    pub inclusion: SpaceMap,
}

/// Result of a quotient: the class space and the projection onto it.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub space: Arc<Space>,
    pub projection: SpaceMap,
}

/// A result with maps back to both inputs (pullback, product, joins).
#[derive(Clone, Debug)]
pub struct Span {
    pub space: Arc<Space>,
    pub left: SpaceMap,
    pub right: SpaceMap,
}

/// A result with maps from both inputs into it (pasting).
#[derive(Clone, Debug)]
pub struct Cospan {
    pub space: Arc<Space>,
    pub left: SpaceMap,
    pub right: SpaceMap,
}

impl Subspace {
    pub fn renamed(self, name: &str) -> Subspace {
        let space = Arc::new(self.space.renamed(name));
        let inclusion = rewire(&self.inclusion, Some(&space), None);
        Subspace { space, inclusion }
    }
}

impl Quotient {
    pub fn renamed(self, name: &str) -> Quotient {
        let space = Arc::new(self.space.renamed(name));
        let projection = rewire(&self.projection, None, Some(&space));
        Quotient { space, projection }
    }
}

impl Span {
    pub fn renamed(self, name: &str) -> Span {
        let space = Arc::new(self.space.renamed(name));
        Span {
            left: rewire(&self.left, Some(&space), None),
            right: rewire(&self.right, Some(&space), None),
            space,
        }
    }
}

impl Cospan {
    pub fn renamed(self, name: &str) -> Cospan {
        let space = Arc::new(self.space.renamed(name));
        Cospan {
            left: rewire(&self.left, None, Some(&space)),
            right: rewire(&self.right, None, Some(&space)),
            space,
        }
    }
}

fn rewire(map: &SpaceMap, domain: Option<&Arc<Space>>, codomain: Option<&Arc<Space>>) -> SpaceMap {
    map.with_spaces(
        domain.unwrap_or(map.domain()).clone(),
        codomain.unwrap_or(map.codomain()).clone(),
    )
    .expect("renaming keeps the element lists")
}

fn checked(map: SpaceMap) -> SpaceMap {
    debug_assert!(
        map.is_continuous(),
        "emitted map {} -> {} is not continuous: {:?}",
        map.domain().name(),
        map.codomain().name(),
        map.continuity_witness()
    );
    map
}

/// Subspace on `keep`, with the inclusion map into `source`.
///
/// The incidence is the transitive reduction of the source preorder
/// restricted to `keep`, so chains through dropped elements survive.
pub fn select_subspace<I, S>(source: &Arc<Space>, keep: I) -> Result<Subspace>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mask = source.mask(keep)?;
    Ok(restrict(source, &mask, format!("select({})", source.name())))
}

/// Subspace of the elements satisfying `predicate`.
pub fn select_where<F>(source: &Arc<Space>, mut predicate: F) -> Subspace
where
    F: FnMut(&ElementId, &Attributes) -> bool,
{
    let mut mask = FixedBitSet::with_capacity(source.len());
    for i in 0..source.len() {
        if predicate(source.id(i), source.attributes_at(i)) {
            mask.insert(i);
        }
    }
    restrict(source, &mask, format!("select({})", source.name()))
}

fn restrict(source: &Arc<Space>, mask: &FixedBitSet, name: String) -> Subspace {
    let kept: Vec<usize> = mask.ones().collect();
    let mut local = vec![usize::MAX; source.len()];
    for (li, &g) in kept.iter().enumerate() {
        local[g] = li;
    }
    let below = source.below();
    let strict: Vec<FixedBitSet> = kept
        .iter()
        .map(|&g| {
            let mut set = FixedBitSet::with_capacity(kept.len());
            for b in below[g].intersection(mask) {
                if b != g {
                    set.insert(local[b]);
                }
            }
            set
        })
        .collect();
    let ids = kept.iter().map(|&g| source.id(g).clone()).collect();
    let attrs = kept
        .iter()
        .map(|&g| source.attributes_at(g).clone())
        .collect();
    let space = Space::from_parts(name, ids, attrs, hasse(&strict))
        .expect("restriction of a partial order is acyclic");
    let space = Arc::new(space);
    let inclusion = checked(SpaceMap::from_table(space.clone(), source.clone(), kept));
    Subspace { space, inclusion }
}

/// Assignment of every element of a space to a class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: BTreeMap<ElementId, ElementId>,
}

impl Partition {
    /// Builds a partition from explicit classes. Elements not listed in any
    /// class form singleton classes labelled by their own id.
    pub fn from_classes<I, L, M, S>(space: &Space, classes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, M)>,
        L: AsRef<str>,
        M: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut labels = BTreeMap::new();
        let mut seen_labels = BTreeSet::new();
        for (label, members) in classes {
            let label = ElementId::new(label.as_ref())?;
            if !seen_labels.insert(label.clone()) {
                return Err(Error::Partition(format!("class label {label} is used twice")));
            }
            for member in members {
                let i = space.require(member.as_ref())?;
                let id = space.id(i).clone();
                if labels.insert(id.clone(), label.clone()).is_some() {
                    return Err(Error::Partition(format!("{id} is listed in two classes")));
                }
            }
        }
        for id in space.ids() {
            if !labels.contains_key(id) {
                if seen_labels.contains(id) {
                    return Err(Error::Partition(format!(
                        "class label {id} collides with the unlisted element {id}"
                    )));
                }
                labels.insert(id.clone(), id.clone());
            }
        }
        Ok(Partition { labels })
    }

    /// Groups elements by the value of attribute `key`. Elements without the
    /// attribute stay singletons.
    pub fn by_attribute(space: &Space, key: &str) -> Result<Self> {
        let mut groups: BTreeMap<String, Vec<ElementId>> = BTreeMap::new();
        for id in space.ids() {
            if let Some(value) = space.attributes(id.as_str()).and_then(|a| a.get(key)) {
                groups.entry(value.clone()).or_default().push(id.clone());
            }
        }
        Partition::from_classes(space, groups)
    }

    pub fn label_of(&self, id: &str) -> Option<&ElementId> {
        self.labels.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ElementId, &ElementId)> {
        self.labels.iter()
    }
}

/// What `quotient` does when the induced class relation has a cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CyclePolicy {
    #[default]
    Error,
    /// Merge each strongly connected set of classes into one class labelled
    /// `scc:<least member id>`.
    Collapse,
}

/// Quotient by `partition`. The class incidence is the image of the source
/// incidence with self-pairs dropped, stored unreduced.
pub fn quotient(source: &Arc<Space>, partition: &Partition, policy: CyclePolicy) -> Result<Quotient> {
    let mut class_label: Vec<ElementId> = Vec::with_capacity(source.len());
    for id in source.ids() {
        let label = partition
            .label_of(id.as_str())
            .ok_or_else(|| Error::Partition(format!("no class for element {id}")))?;
        class_label.push(label.clone());
    }

    let (labels, class_of, induced) = induce(source, &class_label);
    let components = strongly_connected(labels.len(), &induced);
    let (labels, class_of, induced) = if components.iter().all(|c| c.len() == 1) {
        (labels, class_of, induced)
    } else {
        let cyclic = components
            .iter()
            .find(|c| c.len() > 1)
            .expect("some component is non-trivial");
        match policy {
            CyclePolicy::Error => {
                return Err(Error::QuotientCycle {
                    classes: cyclic.iter().map(|&c| labels[c].clone()).collect(),
                })
            }
            CyclePolicy::Collapse => {
                let mut merged_label = labels.clone();
                for comp in components.iter().filter(|c| c.len() > 1) {
                    let least = (0..source.len())
                        .filter(|&i| comp.contains(&class_of[i]))
                        .map(|i| source.id(i))
                        .min()
                        .expect("classes are non-empty");
                    let label = ElementId::new(format!("scc:{least}"))?;
                    if labels.contains(&label) {
                        return Err(Error::Partition(format!(
                            "collapsed class label {label} is already in use"
                        )));
                    }
                    for &c in comp {
                        merged_label[c] = label.clone();
                    }
                }
                let relabelled: Vec<ElementId> = class_of
                    .iter()
                    .map(|&c| merged_label[c].clone())
                    .collect();
                induce(source, &relabelled)
            }
        }
    };

    let space = Space::from_parts(
        format!("quotient({})", source.name()),
        labels,
        vec![Attributes::new(); class_of.iter().max().map_or(0, |m| m + 1)],
        induced.into_iter().collect(),
    )?;
    let space = Arc::new(space);
    let projection = checked(SpaceMap::from_table(source.clone(), space.clone(), class_of));
    Ok(Quotient { space, projection })
}

// Sorted class labels, class index per element, induced pairs between classes.
fn induce(
    source: &Space,
    class_label: &[ElementId],
) -> (Vec<ElementId>, Vec<usize>, BTreeSet<(usize, usize)>) {
    let labels: Vec<ElementId> = class_label
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&ElementId, usize> = labels.iter().zip(0..).collect();
    let class_of: Vec<usize> = class_label.iter().map(|l| index[l]).collect();
    let induced = source
        .incidence_indices()
        .iter()
        .map(|&(a, b)| (class_of[a], class_of[b]))
        .filter(|(ca, cb)| ca != cb)
        .collect();
    (labels, class_of, induced)
}

// Strongly connected components by mutual reachability; each sorted, listed
// by least member.
fn strongly_connected(n: usize, pairs: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut next = vec![Vec::new(); n];
    for &(a, b) in pairs {
        next[a].push(b);
    }
    let reach: Vec<FixedBitSet> = (0..n)
        .map(|start| {
            let mut seen = FixedBitSet::with_capacity(n);
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(v) = stack.pop() {
                for &w in &next[v] {
                    if !seen.contains(w) {
                        seen.insert(w);
                        stack.push(w);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = FixedBitSet::with_capacity(n);
    let mut components = Vec::new();
    for v in 0..n {
        if assigned.contains(v) {
            continue;
        }
        let comp: Vec<usize> = reach[v].ones().filter(|&w| reach[w].contains(v)).collect();
        for &w in &comp {
            assigned.insert(w);
        }
        components.push(comp);
    }
    components
}

/// Pasting: glue `x` and `y` along elements with equal ids.
///
/// The incidence is the transitive reduction of the union of both
/// relations. Where both inputs carry the same attribute key, `x` wins.
pub fn paste_union(x: &Arc<Space>, y: &Arc<Space>) -> Result<Cospan> {
    let mut merged: BTreeMap<ElementId, Attributes> = BTreeMap::new();
    for s in [y, x] {
        for (i, id) in s.ids().iter().enumerate() {
            merged
                .entry(id.clone())
                .or_default()
                .extend(s.attributes_at(i).clone());
        }
    }
    let position: HashMap<&ElementId, usize> = merged.keys().zip(0..).collect();
    let mut pairs = Vec::new();
    for s in [x, y] {
        for (a, b) in s.incidence() {
            pairs.push((position[a], position[b]));
        }
    }
    let elements: Vec<(ElementId, Attributes)> = merged.into_iter().collect();
    let (glued, _) = Space::from_unsorted(format!("union({},{})", x.name(), y.name()), elements, pairs)?;
    let space = Arc::new(glued.transitive_reduce());
    let inclusion = |s: &Arc<Space>| {
        let table = s
            .ids()
            .iter()
            .map(|id| space.index_of(id.as_str()).expect("glued space contains input"))
            .collect();
        checked(SpaceMap::from_table(s.clone(), space.clone(), table))
    };
    let (left, right) = (inclusion(x), inclusion(y));
    Ok(Cospan { space, left, right })
}

/// Pullback: the common elements with the intersection of both preorders.
/// Attributes are taken from `x`.
pub fn pullback_intersection(x: &Arc<Space>, y: &Arc<Space>) -> Span {
    let common: Vec<(usize, usize)> = x
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| y.index_of(id.as_str()).map(|j| (i, j)))
        .collect();
    let strict: Vec<FixedBitSet> = common
        .iter()
        .enumerate()
        .map(|(p, &(xa, ya))| {
            let mut set = FixedBitSet::with_capacity(common.len());
            for (q, &(xb, yb)) in common.iter().enumerate() {
                if p != q && x.reaches(xa, xb) && y.reaches(ya, yb) {
                    set.insert(q);
                }
            }
            set
        })
        .collect();
    let ids = common.iter().map(|&(i, _)| x.id(i).clone()).collect();
    let attrs = common
        .iter()
        .map(|&(i, _)| x.attributes_at(i).clone())
        .collect();
    let space = Space::from_parts(
        format!("intersect({},{})", x.name(), y.name()),
        ids,
        attrs,
        hasse(&strict),
    )
    .expect("intersection of partial orders is a partial order");
    let space = Arc::new(space);
    let left = checked(SpaceMap::from_table(
        space.clone(),
        x.clone(),
        common.iter().map(|&(i, _)| i).collect(),
    ));
    let right = checked(SpaceMap::from_table(
        space.clone(),
        y.clone(),
        common.iter().map(|&(_, j)| j).collect(),
    ));
    Span { space, left, right }
}

/// Product space with the default pair naming.
pub fn product(x: &Arc<Space>, y: &Arc<Space>) -> Result<Span> {
    product_with(x, y, &PairOptions::default())
}

/// Product space `(X × Y, XS ∪ RY)`: a copy of `y`'s incidence for every
/// element of `x`, and a copy of `x`'s incidence for every element of `y`.
pub fn product_with(x: &Arc<Space>, y: &Arc<Space>, options: &PairOptions) -> Result<Span> {
    let (nx, ny) = (x.len(), y.len());
    if nx.saturating_mul(ny) > options.warn_limit {
        log::warn!(
            "product of {} ({nx}) and {} ({ny}) has {} elements, above the limit {}",
            x.name(),
            y.name(),
            nx.saturating_mul(ny),
            options.warn_limit
        );
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for a in x.ids() {
        for b in y.ids() {
            elements.push((options.render(a, b)?, Attributes::new()));
        }
    }
    let mut pairs = Vec::with_capacity(nx * y.incidence().len() + ny * x.incidence().len());
    for i in 0..nx {
        for &(a, b) in y.incidence_indices() {
            pairs.push((i * ny + a, i * ny + b));
        }
    }
    for &(c, d) in x.incidence_indices() {
        for j in 0..ny {
            pairs.push((c * ny + j, d * ny + j));
        }
    }
    let name = format!("product({},{})", x.name(), y.name());
    let (space, rank) = Space::from_unsorted(name, elements, pairs).map_err(collision)?;
    let space = Arc::new(space);
    let mut left = vec![0; nx * ny];
    let mut right = vec![0; nx * ny];
    for (pos, &idx) in rank.iter().enumerate() {
        left[idx] = pos / ny;
        right[idx] = pos % ny;
    }
    Ok(Span {
        left: checked(SpaceMap::from_table(space.clone(), x.clone(), left)),
        right: checked(SpaceMap::from_table(space.clone(), y.clone(), right)),
        space,
    })
}

fn collision(err: Error) -> Error {
    match err {
        Error::DuplicateElement(id) => Error::IdCollision(id.as_str().to_string()),
        other => other,
    }
}

/// An explicit set of cross-space pairs, e.g. "these two cells intersect".
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThetaRelation {
    pairs: BTreeSet<(ElementId, ElementId)>,
}

impl ThetaRelation {
    pub fn new<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ElementId, ElementId)>,
    {
        ThetaRelation {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn from_strs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let pairs = pairs
            .into_iter()
            .map(|(a, b)| Ok((ElementId::new(a.as_ref())?, ElementId::new(b.as_ref())?)))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(ThetaRelation { pairs })
    }

    /// Every pair of `x × y`.
    pub fn all(x: &Space, y: &Space) -> Self {
        let pairs = x
            .ids()
            .iter()
            .flat_map(|a| y.ids().iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        ThetaRelation { pairs }
    }

    /// Pairs whose `left_key` and `right_key` attributes are present and equal.
    pub fn equi_join(x: &Space, y: &Space, left_key: &str, right_key: &str) -> Self {
        let mut by_value: BTreeMap<&str, Vec<&ElementId>> = BTreeMap::new();
        for b in y.ids() {
            if let Some(v) = y.attributes(b.as_str()).and_then(|a| a.get(right_key)) {
                by_value.entry(v.as_str()).or_default().push(b);
            }
        }
        let mut pairs = BTreeSet::new();
        for a in x.ids() {
            let value = x.attributes(a.as_str()).and_then(|attrs| attrs.get(left_key));
            if let Some(matches) = value.and_then(|v| by_value.get(v.as_str())) {
                pairs.extend(matches.iter().map(|&b| (a.clone(), b.clone())));
            }
        }
        ThetaRelation { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, left: &str, right: &str) -> bool {
        self.pairs
            .iter()
            .any(|(a, b)| a.as_str() == left && b.as_str() == right)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ElementId, ElementId)> {
        self.pairs.iter()
    }
}

/// Θ-join with the default pair naming.
pub fn theta_join(x: &Arc<Space>, y: &Arc<Space>, theta: &ThetaRelation) -> Result<Span> {
    theta_join_with(x, y, theta, &PairOptions::default())
}

/// Subspace of `x × y` on the pairs in `theta`, computed without building
/// the product: two pairs are comparable iff both components are, so the
/// order among the selected pairs comes straight from the input preorders.
pub fn theta_join_with(
    x: &Arc<Space>,
    y: &Arc<Space>,
    theta: &ThetaRelation,
    options: &PairOptions,
) -> Result<Span> {
    let pairs = resolve_theta(x, y, theta)?;
    join_on(x, y, pairs, format!("theta_join({},{})", x.name(), y.name()), options)
}

fn resolve_theta(x: &Space, y: &Space, theta: &ThetaRelation) -> Result<Vec<(usize, usize)>> {
    // BTreeSet iteration keeps these sorted and unique
    theta
        .iter()
        .map(|(a, b)| Ok((x.require(a.as_str())?, y.require(b.as_str())?)))
        .collect()
}

fn join_on(
    x: &Arc<Space>,
    y: &Arc<Space>,
    pairs: Vec<(usize, usize)>,
    name: String,
    options: &PairOptions,
) -> Result<Span> {
    let k = pairs.len();
    let mut by_left: Vec<Vec<usize>> = vec![Vec::new(); x.len()];
    for (p, &(a, _)) in pairs.iter().enumerate() {
        by_left[a].push(p);
    }
    let (bx, by) = (x.below(), y.below());
    let strict: Vec<FixedBitSet> = pairs
        .iter()
        .enumerate()
        .map(|(p, &(a, b))| {
            let mut set = FixedBitSet::with_capacity(k);
            for c in bx[a].ones() {
                for &q in &by_left[c] {
                    if q != p && by[b].contains(pairs[q].1) {
                        set.insert(q);
                    }
                }
            }
            set
        })
        .collect();
    let elements = pairs
        .iter()
        .map(|&(a, b)| Ok((options.render(x.id(a), y.id(b))?, Attributes::new())))
        .collect::<Result<Vec<_>>>()?;
    let (space, rank) = Space::from_unsorted(name, elements, hasse(&strict)).map_err(collision)?;
    let space = Arc::new(space);
    let mut left = vec![0; k];
    let mut right = vec![0; k];
    for (p, &idx) in rank.iter().enumerate() {
        left[idx] = pairs[p].0;
        right[idx] = pairs[p].1;
    }
    Ok(Span {
        left: checked(SpaceMap::from_table(space.clone(), x.clone(), left)),
        right: checked(SpaceMap::from_table(space.clone(), y.clone(), right)),
        space,
    })
}

/// Θ-join by its definition: build the full product, then select. Slow;
/// kept as the reference the direct join is compared against.
pub fn naive_theta_join(
    x: &Arc<Space>,
    y: &Arc<Space>,
    theta: &ThetaRelation,
    options: &PairOptions,
) -> Result<Span> {
    let product = product_with(x, y, options)?;
    let mut mask = FixedBitSet::with_capacity(product.space.len());
    for (a, b) in theta.iter() {
        x.require(a.as_str())?;
        y.require(b.as_str())?;
        let id = options.render(a, b)?;
        mask.insert(product.space.require(id.as_str())?);
    }
    let selected = restrict(
        &product.space,
        &mask,
        format!("theta_join({},{})", x.name(), y.name()),
    );
    Ok(Span {
        left: SpaceMap::compose(&product.left, &selected.inclusion)?,
        right: SpaceMap::compose(&product.right, &selected.inclusion)?,
        space: selected.space,
    })
}

/// Fibre product with the default pair naming.
pub fn fibre_product(u: &SpaceMap, p: &SpaceMap) -> Result<Span> {
    fibre_product_with(u, p, &PairOptions::default())
}

/// Fibre product of `u: X → I` and `p: Y → I`: the subspace of `X × Y` on
/// the pairs `(x, y)` with `u(x) = p(y)`. Both maps must be continuous.
pub fn fibre_product_with(u: &SpaceMap, p: &SpaceMap, options: &PairOptions) -> Result<Span> {
    if !same_space(u.codomain(), p.codomain()) {
        return Err(Error::CodomainMismatch {
            left: u.codomain().name().to_string(),
            right: p.codomain().name().to_string(),
        });
    }
    for (side, map) in [("left", u), ("right", p)] {
        if let Some(witness) = map.continuity_witness() {
            return Err(Error::NotContinuous {
                map: side.to_string(),
                witness,
            });
        }
    }
    let mut fibres: Vec<Vec<usize>> = vec![Vec::new(); p.codomain().len()];
    for (j, &t) in p.table().iter().enumerate() {
        fibres[t].push(j);
    }
    let mut pairs = Vec::new();
    for (i, &t) in u.table().iter().enumerate() {
        pairs.extend(fibres[t].iter().map(|&j| (i, j)));
    }
    let (x, y) = (u.domain(), p.domain());
    join_on(
        x,
        y,
        pairs,
        format!("fibre_product({},{})", x.name(), y.name()),
        options,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(s: Space) -> Arc<Space> {
        Arc::new(s)
    }

    fn none() -> Vec<(&'static str, &'static str)> {
        Vec::new()
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

    fn pairs(s: &Space) -> Vec<(String, String)> {
        s.incidence()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn owned(items: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut v: Vec<_> = items
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn subspace_keeps_transitive_closeness() {
        let sub = select_subspace(&ex2(), ["C", "x"]).unwrap();
        assert_eq!(pairs(&sub.space), owned(&[("C", "x")]));
        assert!(sub.inclusion.is_continuous());

        let all = select_subspace(&ex1(), ex1().ids().iter()).unwrap();
        assert_eq!(pairs(&all.space), pairs(&ex1()));

        let point = select_subspace(&ex2(), ["x"]).unwrap();
        assert_eq!(point.space.len(), 1);
        assert!(pairs(&point.space).is_empty());

        assert!(matches!(
            select_subspace(&ex2(), ["q"]),
            Err(Error::UnknownElement(_))
        ));
    }

    #[test]
    fn select_by_attribute() {
        let mut kind = Attributes::new();
        kind.insert("kind".into(), "vertex".into());
        let s = arc(Space::with_attributes(
            "s",
            [
                (ElementId::new("e").unwrap(), Attributes::new()),
                (ElementId::new("v").unwrap(), kind.clone()),
                (ElementId::new("w").unwrap(), kind),
            ],
            [
                (ElementId::new("e").unwrap(), ElementId::new("v").unwrap()),
                (ElementId::new("e").unwrap(), ElementId::new("w").unwrap()),
            ],
        )
        .unwrap());
        let sub = select_where(&s, |_, attrs| attrs.get("kind").map(String::as_str) == Some("vertex"));
        assert_eq!(sub.space.len(), 2);
        assert_eq!(sub.space.attributes("v").unwrap()["kind"], "vertex");
    }

    #[test]
    fn quotient_merges_classes() {
        let s = ex2();
        let p = Partition::from_classes(&s, [("m", ["c", "x"])]).unwrap();
        let q = quotient(&s, &p, CyclePolicy::Error).unwrap();
        assert_eq!(pairs(&q.space), owned(&[("C", "m"), ("C", "b"), ("b", "m")]));
        assert_eq!(q.projection.apply("x").unwrap().as_str(), "m");
        assert!(q.projection.is_continuous());
    }

    #[test]
    fn quotient_cycles() {
        let s = ex2();
        let p = Partition::from_classes(&s, [("k", ["C", "x"])]).unwrap();
        match quotient(&s, &p, CyclePolicy::Error).unwrap_err() {
            Error::QuotientCycle { classes } => {
                let names: Vec<&str> = classes.iter().map(ElementId::as_str).collect();
                assert!(names.contains(&"k") && names.contains(&"c"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let q = quotient(&s, &p, CyclePolicy::Collapse).unwrap();
        assert_eq!(q.space.ids().len(), 1);
        assert_eq!(q.space.id(0).as_str(), "scc:C");
        assert!(q.projection.is_continuous());
    }

    #[test]
    fn collapse_only_merges_the_cycle() {
        // t bounds u and w; gluing t with v (below u) makes u and the t-class cyclic
        let s = arc(Space::from_strs(
            "s",
            ["t", "u", "v", "w"],
            [("t", "u"), ("u", "v"), ("t", "w")],
        )
        .unwrap());
        let p = Partition::from_classes(&s, [("k", ["t", "v"])]).unwrap();
        let q = quotient(&s, &p, CyclePolicy::Collapse).unwrap();
        let ids: Vec<&str> = q.space.ids().iter().map(ElementId::as_str).collect();
        assert_eq!(ids, vec!["scc:t", "w"]);
        assert_eq!(pairs(&q.space), owned(&[("scc:t", "w")]));
    }

    #[test]
    fn singleton_quotient_is_a_copy() {
        let s = ex1();
        let p = Partition::from_classes(&s, Vec::<(&str, Vec<&str>)>::new()).unwrap();
        let q = quotient(&s, &p, CyclePolicy::Error).unwrap();
        assert_eq!(q.space.ids(), s.ids());
        assert_eq!(pairs(&q.space), pairs(&s));
    }

    #[test]
    fn partition_errors() {
        let s = ex2();
        assert!(matches!(
            Partition::from_classes(&s, [("m", ["c"]), ("n", ["c"])]),
            Err(Error::Partition(_))
        ));
        assert!(matches!(
            Partition::from_classes(&s, [("m", ["c"]), ("m", ["x"])]),
            Err(Error::Partition(_))
        ));
        // label equal to an element outside the class
        assert!(matches!(
            Partition::from_classes(&s, [("x", ["c", "b"])]),
            Err(Error::Partition(_))
        ));
        assert!(matches!(
            Partition::from_classes(&s, [("m", ["nope"])]),
            Err(Error::UnknownElement(_))
        ));
    }

    #[test]
    fn pasting() {
        let p1 = arc(Space::from_strs("p1", ["e1", "v1", "v2"], [("e1", "v1"), ("e1", "v2")]).unwrap());
        let p2 = arc(Space::from_strs("p2", ["e2", "v2", "v3"], [("e2", "v2"), ("e2", "v3")]).unwrap());
        let glued = paste_union(&p1, &p2).unwrap();
        assert_eq!(glued.space.len(), 5);
        assert_eq!(
            pairs(&glued.space),
            owned(&[("e1", "v1"), ("e1", "v2"), ("e2", "v2"), ("e2", "v3")])
        );
        assert!(glued.left.is_continuous() && glued.right.is_continuous());

        let twice = paste_union(&ex1(), &ex1()).unwrap();
        assert_eq!(pairs(&twice.space), pairs(&ex1()));

        let ab = arc(Space::from_strs("ab", ["a", "b"], [("a", "b")]).unwrap());
        let ba = arc(Space::from_strs("ba", ["a", "b"], [("b", "a")]).unwrap());
        assert!(matches!(
            paste_union(&ab, &ba),
            Err(Error::CyclicIncidence { .. })
        ));
    }

    #[test]
    fn pullback() {
        let p1 = arc(Space::from_strs("p1", ["e1", "v1", "v2"], [("e1", "v1"), ("e1", "v2")]).unwrap());
        let p2 = arc(Space::from_strs("p2", ["e2", "v2", "v3"], [("e2", "v2"), ("e2", "v3")]).unwrap());
        let meet = pullback_intersection(&p1, &p2);
        assert_eq!(meet.space.ids().len(), 1);
        assert_eq!(meet.space.id(0).as_str(), "v2");

        let same = pullback_intersection(&ex1(), &ex1());
        assert_eq!(pairs(&same.space), pairs(&ex1()));
        assert!(pullback_intersection(&ex1(), &ex2()).space.is_empty());
    }

    #[test]
    fn product_lifts_both_relations() {
        let prod = product(&ex1(), &ex2()).unwrap();
        assert_eq!(prod.space.len(), 24);
        let got = pairs(&prod.space);
        for (a, b) in [
            ("A×C", "A×c"),
            ("B×C", "B×c"),
            ("a×C", "a×c"),
            ("e×C", "e×c"),
            ("f×C", "f×c"),
            ("g×C", "g×c"),
            ("A×C", "a×C"),
        ] {
            assert!(got.contains(&(a.into(), b.into())), "missing ({a}, {b})");
        }
        assert_eq!(got.len(), 6 * 4 + 5 * 4);
        assert_eq!(prod.space.dimension("B×b").unwrap(), 2);
        assert!(prod.left.is_continuous() && prod.right.is_continuous());
    }

    #[test]
    fn product_with_a_point() {
        let point = arc(Space::from_strs("pt", ["o"], none()).unwrap());
        let prod = product(&ex2(), &point).unwrap();
        assert_eq!(prod.space.len(), 4);
        assert_eq!(
            pairs(&prod.space),
            owned(&[("C×o", "c×o"), ("C×o", "b×o"), ("c×o", "x×o"), ("b×o", "x×o")])
        );
    }

    #[test]
    fn rendered_ids_must_be_unique() {
        let x = arc(Space::from_strs("x", ["a", "a-b"], none()).unwrap());
        let y = arc(Space::from_strs("y", ["b-c", "c"], none()).unwrap());
        let opts = PairOptions {
            separator: "-".into(),
            ..PairOptions::default()
        };
        // a-b-c arises from (a, b-c) and (a-b, c)
        assert!(matches!(product_with(&x, &y, &opts), Err(Error::IdCollision(_))));
        let bad = PairOptions {
            separator: " ".into(),
            ..PairOptions::default()
        };
        assert!(matches!(product_with(&x, &y, &bad), Err(Error::InvalidId(_))));
    }

    #[test]
    fn theta_join_matches_naive_on_examples() {
        let theta = ThetaRelation::from_strs([("B", "b"), ("B", "x"), ("e", "b"), ("e", "x"), ("A", "C")]).unwrap();
        let fast = theta_join(&ex1(), &ex2(), &theta).unwrap();
        let slow = naive_theta_join(&ex1(), &ex2(), &theta, &PairOptions::default()).unwrap();
        assert_eq!(*fast.space, *slow.space);
        assert_eq!(fast.left, slow.left);
        assert_eq!(fast.right, slow.right);
    }

    #[test]
    fn theta_join_rejects_unknown_elements() {
        let theta = ThetaRelation::from_strs([("Z", "b")]).unwrap();
        assert!(matches!(
            theta_join(&ex1(), &ex2(), &theta),
            Err(Error::UnknownElement(_))
        ));
    }

    #[test]
    fn equi_join_by_attribute() {
        let attrs = |v: &str| {
            let mut a = Attributes::new();
            a.insert("k".into(), v.into());
            a
        };
        let id = |s: &str| ElementId::new(s).unwrap();
        let x = Space::with_attributes("x", [(id("p"), attrs("1")), (id("q"), attrs("2"))], []).unwrap();
        let y = Space::with_attributes("y", [(id("r"), attrs("2")), (id("s"), Attributes::new())], []).unwrap();
        let theta = ThetaRelation::equi_join(&x, &y, "k", "k");
        assert_eq!(theta.len(), 1);
        assert!(theta.contains("q", "r"));
    }

    #[test]
    fn fibre_product_places_details() {
        let locations = arc(Space::from_strs("X", ["p1", "p2"], none()).unwrap());
        let index = arc(Space::from_strs("I", ["m"], none()).unwrap());
        let details = segment();
        let u = SpaceMap::constant(locations.clone(), index.clone(), "m").unwrap();
        let p = SpaceMap::constant(details.clone(), index.clone(), "m").unwrap();
        let fp = fibre_product(&u, &p).unwrap();
        assert_eq!(fp.space.len(), 6);
        assert_eq!(
            pairs(&fp.space),
            owned(&[
                ("p1×e", "p1×v1"),
                ("p1×e", "p1×v2"),
                ("p2×e", "p2×v1"),
                ("p2×e", "p2×v2"),
            ])
        );
    }

    #[test]
    fn fibre_product_of_identities_is_diagonal() {
        let s = ex2();
        let id = SpaceMap::identity(s.clone());
        let fp = fibre_product(&id, &id).unwrap();
        assert_eq!(fp.space.len(), 4);
        assert_eq!(
            pairs(&fp.space),
            owned(&[("C×C", "b×b"), ("C×C", "c×c"), ("b×b", "x×x"), ("c×c", "x×x")])
        );
    }

    #[test]
    fn fibre_product_errors() {
        let two = arc(Space::from_strs("I", ["i", "j"], none()).unwrap());
        let other = arc(Space::from_strs("J", ["i", "j", "k"], none()).unwrap());
        let s = segment();
        let u = SpaceMap::constant(s.clone(), two.clone(), "i").unwrap();
        let p = SpaceMap::constant(s.clone(), two.clone(), "j").unwrap();
        assert!(fibre_product(&u, &p).unwrap().space.is_empty());

        let q = SpaceMap::constant(s.clone(), other, "i").unwrap();
        assert!(matches!(fibre_product(&u, &q), Err(Error::CodomainMismatch { .. })));

        let swap = SpaceMap::new(s.clone(), s.clone(), [("e", "v1"), ("v1", "e"), ("v2", "v2")]).unwrap();
        let id = SpaceMap::identity(s);
        match fibre_product(&swap, &id).unwrap_err() {
            Error::NotContinuous { map, witness } => {
                assert_eq!(map, "left");
                assert_eq!(witness.from.as_str(), "e");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renaming_rewires_maps() {
        let prod = product(&ex1(), &ex2()).unwrap().renamed("P");
        assert_eq!(prod.space.name(), "P");
        assert_eq!(prod.left.domain().name(), "P");
        assert!(prod.left.is_continuous());
    }
}
