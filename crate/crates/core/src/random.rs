//! Seeded random instances for property tests and benchmarks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::ThetaRelation;
use crate::maps::SpaceMap;
use crate::space::{ElementId, Space};

/// A random acyclic incidence space on `n` elements named `{prefix}0..`.
///
/// A hidden random ranking orients every pair, so the id order is unrelated
/// to the incidence direction. Each forward pair is kept with probability
/// `density`.
pub fn random_space<R: Rng + ?Sized>(rng: &mut R, name: &str, prefix: &str, n: usize, density: f64) -> Space {
    let ids: Vec<ElementId> = (0..n)
        .map(|i| ElementId::new(format!("{prefix}{i}")).expect("valid id"))
        .collect();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                pairs.push((ids[rank[i]].clone(), ids[rank[j]].clone()));
            }
        }
    }
    Space::new(name, ids, pairs).expect("ranked pairs are acyclic")
}

/// A uniformly random total map between two spaces. `codomain` must be non-empty
/// unless `domain` is empty.
pub fn random_map<R: Rng + ?Sized>(rng: &mut R, domain: &Arc<Space>, codomain: &Arc<Space>) -> SpaceMap {
    let pairs: Vec<(ElementId, ElementId)> = domain
        .ids()
        .iter()
        .map(|id| {
            let j = rng.gen_range(0..codomain.len());
            (id.clone(), codomain.id(j).clone())
        })
        .collect();
    SpaceMap::new(domain.clone(), codomain.clone(), pairs).expect("total by construction")
}

/// A copy of `space` with ids renamed through a random bijection.
pub fn relabelled<R: Rng + ?Sized>(rng: &mut R, space: &Space, name: &str, prefix: &str) -> Space {
    let mut targets: Vec<usize> = (0..space.len()).collect();
    targets.shuffle(rng);
    let rename = |id: &ElementId| {
        let i = space.index_of(id.as_str()).expect("own element");
        ElementId::new(format!("{prefix}{}", targets[i])).expect("valid id")
    };
    Space::new(
        name,
        space.ids().iter().map(rename),
        space.incidence().map(|(a, b)| (rename(a), rename(b))),
    )
    .expect("relabelling preserves validity")
}

/// Each cross pair kept with probability `density`.
pub fn random_theta<R: Rng + ?Sized>(rng: &mut R, left: &Space, right: &Space, density: f64) -> ThetaRelation {
    let mut pairs = Vec::new();
    for a in left.ids() {
        for b in right.ids() {
            if rng.gen_bool(density) {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    ThetaRelation::new(pairs)
}

/// A random map that is continuous whenever the choices allow it.
///
/// Domain elements are visited boundary-first; each picks uniformly among the
/// codomain elements lying above the images of its whole boundary. When no
/// such element exists the pick is unconstrained, so the result may still be
/// discontinuous.
pub fn random_monotone_map<R: Rng + ?Sized>(rng: &mut R, domain: &Arc<Space>, codomain: &Arc<Space>) -> SpaceMap {
    let dims = domain.dimensions();
    let mut order: Vec<usize> = (0..domain.len()).collect();
    order.sort_by_key(|&i| dims[i]);
    let mut table = vec![usize::MAX; domain.len()];
    let below = domain.below();
    for &a in &order {
        let images: Vec<usize> = below[a]
            .ones()
            .filter(|&b| b != a)
            .map(|b| table[b])
            .collect();
        let candidates: Vec<usize> = (0..codomain.len())
            .filter(|&y| images.iter().all(|&t| codomain.reaches(y, t)))
            .collect();
        table[a] = match candidates.choose(rng) {
            Some(&y) => y,
            None => rng.gen_range(0..codomain.len()),
        };
    }
    SpaceMap::from_table(domain.clone(), codomain.clone(), table)
}
