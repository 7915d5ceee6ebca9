//! Continuous foreign keys over a catalog of spaces.
//!
//! A foreign key from one stored space into another is a function between
//! their element sets. In `plain` mode it only has to be a total function
//! into existing elements; in `continuous` mode it must also be continuous.
//! Chains of such keys model levels of detail linked by `part_of` maps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maps::{SpaceMap, Witness};
use crate::space::Space;

/// A map as stored in a catalog: names and raw pairs, not yet checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapTable {
    pub domain: String,
    pub codomain: String,
    pub pairs: Vec<(String, String)>,
}

impl From<&SpaceMap> for MapTable {
    fn from(map: &SpaceMap) -> Self {
        MapTable {
            domain: map.domain().name().to_string(),
            codomain: map.codomain().name().to_string(),
            pairs: map
                .pairs()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyMode {
    Plain,
    Continuous,
}

impl fmt::Display for KeyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyMode::Plain => "plain",
            KeyMode::Continuous => "continuous",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForeignKeyConstraint {
    pub name: String,
    pub map: String,
    pub mode: KeyMode,
}

/// Named spaces, named maps, and the constraints declared on them.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub spaces: BTreeMap<String, Arc<Space>>,
    pub maps: BTreeMap<String, MapTable>,
    pub constraints: Vec<ForeignKeyConstraint>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a space under its own name.
    pub fn add_space(&mut self, space: Arc<Space>) -> Result<()> {
        let name = space.name().to_string();
        if self.spaces.contains_key(&name) {
            return Err(Error::Rebound(name));
        }
        self.spaces.insert(name, space);
        Ok(())
    }

    pub fn add_map(&mut self, name: impl Into<String>, table: MapTable) -> Result<()> {
        let name = name.into();
        if self.maps.contains_key(&name) {
            return Err(Error::Rebound(name));
        }
        self.maps.insert(name, table);
        Ok(())
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, map: impl Into<String>, mode: KeyMode) {
        self.constraints.push(ForeignKeyConstraint {
            name: name.into(),
            map: map.into(),
            mode,
        });
    }

    pub fn space(&self, name: &str) -> Result<&Arc<Space>> {
        self.spaces
            .get(name)
            .ok_or_else(|| Error::UnresolvedReference(format!("space {name}")))
    }

    fn table(&self, name: &str) -> Result<&MapTable> {
        self.maps
            .get(name)
            .ok_or_else(|| Error::UnresolvedReference(format!("map {name}")))
    }

    /// Resolves a stored map into a checked [`SpaceMap`].
    pub fn resolve_map(&self, name: &str) -> Result<SpaceMap> {
        let table = self.table(name)?;
        let domain = self.space(&table.domain)?.clone();
        let codomain = self.space(&table.codomain)?.clone();
        SpaceMap::new(domain, codomain, table.pairs.iter().map(|(a, b)| (a, b)))
    }
}

/// Why a constraint failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownSource(String),
    UnknownTarget { from: String, to: String },
    DuplicateSource(String),
    Missing(String),
    Discontinuous(Witness),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSource(a) => write!(f, "{a} is not an element of the domain"),
            Violation::UnknownTarget { from, to } => {
                write!(f, "{from} refers to {to}, which is not an element of the codomain")
            }
            Violation::DuplicateSource(a) => write!(f, "{a} refers to more than one element"),
            Violation::Missing(a) => write!(f, "{a} has no reference"),
            Violation::Discontinuous(w) => write!(f, "not continuous: {w}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintOutcome {
    pub name: String,
    pub map: String,
    pub mode: KeyMode,
    pub violation: Option<Violation>,
}

impl ConstraintOutcome {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for ConstraintOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "PASS {} ({} {})", self.name, self.mode, self.map),
            Some(v) => write!(f, "FAIL {} ({} {}): {v}", self.name, self.mode, self.map),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub outcomes: Vec<ConstraintOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(ConstraintOutcome::passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for outcome in &self.outcomes {
            writeln!(f, "{outcome}")?;
        }
        let failed = self.outcomes.iter().filter(|o| !o.passed()).count();
        write!(f, "{} constraints, {failed} failed", self.outcomes.len())
    }
}

// Referential integrity of the raw table, then the map itself.
fn check_references(dataset: &Dataset, map_name: &str) -> Result<std::result::Result<SpaceMap, Violation>> {
    let table = dataset.table(map_name)?;
    let domain = dataset.space(&table.domain)?;
    let codomain = dataset.space(&table.codomain)?;
    let mut seen = BTreeSet::new();
    for (from, to) in &table.pairs {
        if !domain.contains(from) {
            return Ok(Err(Violation::UnknownSource(from.clone())));
        }
        if !codomain.contains(to) {
            return Ok(Err(Violation::UnknownTarget {
                from: from.clone(),
                to: to.clone(),
            }));
        }
        if !seen.insert(from.as_str()) {
            return Ok(Err(Violation::DuplicateSource(from.clone())));
        }
    }
    if let Some(missing) = domain.ids().iter().find(|id| !seen.contains(id.as_str())) {
        return Ok(Err(Violation::Missing(missing.to_string())));
    }
    Ok(Ok(dataset.resolve_map(map_name)?))
}

fn check(dataset: &Dataset, name: &str, map_name: &str, mode: KeyMode) -> Result<ConstraintOutcome> {
    let violation = match check_references(dataset, map_name)? {
        Err(v) => Some(v),
        Ok(map) if mode == KeyMode::Continuous => map.continuity_witness().map(Violation::Discontinuous),
        Ok(_) => None,
    };
    Ok(ConstraintOutcome {
        name: name.to_string(),
        map: map_name.to_string(),
        mode,
        violation,
    })
}

/// Checks every declared constraint. Outcomes follow declaration order.
pub fn validate(dataset: &Dataset) -> Result<ValidationReport> {
    let outcomes = dataset
        .constraints
        .iter()
        .map(|c| check(dataset, &c.name, &c.map, c.mode))
        .collect::<Result<_>>()?;
    Ok(ValidationReport { outcomes })
}

/// Report for a chain of maps `X0 → X1 → ... → Xn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    /// Continuity of each link.
    pub links: Vec<ConstraintOutcome>,
    /// Continuity of each composite `X0 → Xk`, for `k ≥ 2`.
    pub composites: Vec<ConstraintOutcome>,
    /// Space name and elements per dimension, finest first.
    pub profiles: Vec<(String, BTreeMap<usize, usize>)>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.links.iter().chain(&self.composites).all(ConstraintOutcome::passed)
    }

    /// Index of the first failing link.
    pub fn first_failure(&self) -> Option<usize> {
        self.links.iter().position(|o| !o.passed())
    }
}

impl fmt::Display for ChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, link) in self.links.iter().enumerate() {
            writeln!(f, "link {i}: {link}")?;
        }
        for c in &self.composites {
            writeln!(f, "composite: {c}")?;
        }
        for (name, profile) in &self.profiles {
            let dims: Vec<String> = profile.iter().map(|(d, n)| format!("{d}:{n}")).collect();
            writeln!(f, "stage {name}: {}", dims.join(" "))?;
        }
        write!(f, "{}", if self.passed() { "chain PASS" } else { "chain FAIL" })
    }
}

/// Checks a chain of stored maps, each as a continuous key, plus the
/// composites from the first space to every later one.
pub fn validate_chain<S: AsRef<str>>(dataset: &Dataset, chain: &[S]) -> Result<ChainReport> {
    let mut links = Vec::with_capacity(chain.len());
    let mut resolved = Vec::with_capacity(chain.len());
    for (i, name) in chain.iter().enumerate() {
        let name = name.as_ref();
        let table = dataset.table(name)?;
        if i > 0 {
            let prev = dataset.table(chain[i - 1].as_ref())?;
            if prev.codomain != table.domain {
                return Err(Error::DomainMismatch {
                    expected: prev.codomain.clone(),
                    found: table.domain.clone(),
                });
            }
        }
        let outcome = check(dataset, &format!("link {i}"), name, KeyMode::Continuous)?;
        links.push(outcome);
        resolved.push(check_references(dataset, name)?.ok());
    }

    let mut composites = Vec::new();
    if resolved.iter().all(Option::is_some) {
        let maps: Vec<SpaceMap> = resolved.into_iter().flatten().collect();
        let mut acc = maps.first().cloned();
        for (k, next) in maps.iter().enumerate().skip(1) {
            let composite = acc.take().expect("set on every iteration").then(next)?;
            composites.push(ConstraintOutcome {
                name: format!("composite 0..={k}"),
                map: chain[..=k]
                    .iter()
                    .map(|s| s.as_ref())
                    .collect::<Vec<_>>()
                    .join(" then "),
                mode: KeyMode::Continuous,
                violation: composite.continuity_witness().map(Violation::Discontinuous),
            });
            acc = Some(composite);
        }
    }

    let mut profiles = Vec::new();
    if let Some(first) = chain.first() {
        let first = dataset.table(first.as_ref())?;
        let mut stages = vec![first.domain.clone()];
        for name in chain {
            stages.push(dataset.table(name.as_ref())?.codomain.clone());
        }
        for stage in stages {
            let space = dataset.space(&stage)?;
            profiles.push((stage, space.dimension_profile()));
        }
    }
    Ok(ChainReport {
        links,
        composites,
        profiles,
    })
}
