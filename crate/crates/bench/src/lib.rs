//! Seeded inputs shared by the benchmarks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topo_core::random::{random_space, random_theta, relabelled};
use topo_core::{quotient, CyclePolicy, Partition, Space, SpaceMap, ThetaRelation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two random spaces of `n` elements each and a Θ keeping about `theta_density`
/// of their pairs.
pub fn join_inputs(seed: u64, n: usize, theta_density: f64) -> (Arc<Space>, Arc<Space>, ThetaRelation) {
    let mut r = rng(seed);
    let x = Arc::new(random_space(&mut r, "X", "x", n, 4.0 / n as f64));
    let y = Arc::new(random_space(&mut r, "Y", "y", n, 4.0 / n as f64));
    let theta = random_theta(&mut r, &x, &y, theta_density);
    (x, y, theta)
}

/// A continuous map: the projection of a random space onto a quotient with
/// about `n / 4` classes. Checking it has to visit every incidence pair.
pub fn continuous_map(seed: u64, n: usize) -> SpaceMap {
    let mut r = rng(seed);
    let x = Arc::new(random_space(&mut r, "X", "x", n, 4.0 / n as f64));
    let classes = (n / 4).max(1);
    let groups = (0..classes).map(|k| {
        let members: Vec<_> = x.ids().iter().skip(k).step_by(classes).cloned().collect();
        (format!("k{k}"), members)
    });
    let partition = Partition::from_classes(&x, groups).expect("labels are fresh");
    quotient(&x, &partition, CyclePolicy::Collapse)
        .expect("collapse never fails")
        .projection
}

/// A random space and a relabelled copy of it.
pub fn homeomorphic_pair(seed: u64, n: usize) -> (Arc<Space>, Arc<Space>) {
    let mut r = rng(seed);
    let x = random_space(&mut r, "X", "x", n, 3.0 / n as f64);
    let y = relabelled(&mut r, &x, "Y", "y");
    (Arc::new(x), Arc::new(y))
}
