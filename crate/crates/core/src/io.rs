//! JSON file formats for spaces, maps, Θ relations, partitions and dataset
//! manifests.
//!
//! Spaces and maps are written in a canonical layout: elements and pairs
//! sorted, one item per line, so files diff cleanly and serialization is
//! idempotent.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Partition, ThetaRelation};
use crate::error::{Error, Result};
use crate::lod::{Dataset, KeyMode, MapTable};
use crate::maps::SpaceMap;
use crate::space::{Attributes, ElementId, Space};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    name: String,
    elements: Vec<ElementDoc>,
    incidence: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Attributes::is_empty")]
    attrs: Attributes,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    domain: String,
    codomain: String,
    pairs: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaDoc {
    left: String,
    right: String,
    pairs: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    space: String,
    classes: Vec<ClassDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    label: String,
    members: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    #[serde(default)]
    spaces: Vec<PathBuf>,
    #[serde(default)]
    maps: Vec<PathBuf>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    name: String,
    map: String,
    mode: ModeDoc,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeDoc {
    Continuous,
    Plain,
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn parse_space(text: &str) -> Result<Space> {
    let doc: SpaceDoc = from_json(text)?;
    let elements = doc
        .elements
        .into_iter()
        .map(|e| Ok((ElementId::new(e.id)?, e.attrs)))
        .collect::<Result<Vec<_>>>()?;
    let incidence = doc
        .incidence
        .into_iter()
        .map(|(a, b)| Ok((ElementId::new(a)?, ElementId::new(b)?)))
        .collect::<Result<Vec<_>>>()?;
    Space::with_attributes(doc.name, elements, incidence)
}

pub fn serialize_space(space: &Space) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"name\": {},\n", json_string(space.name())));
    out.push_str("  \"elements\": [");
    let elements: Vec<String> = space
        .ids()
        .iter()
        .map(|id| {
            let doc = ElementDoc {
                id: id.to_string(),
                attrs: space.attributes(id.as_str()).cloned().unwrap_or_default(),
            };
            format!("    {}", serde_json::to_string(&doc).expect("plain data"))
        })
        .collect();
    push_items(&mut out, &elements);
    out.push_str(",\n  \"incidence\": [");
    let pairs: Vec<String> = space
        .incidence()
        .map(|(a, b)| format!("    [{}, {}]", json_string(a.as_str()), json_string(b.as_str())))
        .collect();
    push_items(&mut out, &pairs);
    out.push_str("\n}\n");
    out
}

fn push_items(out: &mut String, items: &[String]) {
    if items.is_empty() {
        out.push(']');
        return;
    }
    out.push('\n');
    out.push_str(&items.join(",\n"));
    out.push_str("\n  ]");
}

pub fn read_space(path: impl AsRef<Path>) -> Result<Space> {
    parse_space(&fs::read_to_string(path)?)
}

pub fn write_space(path: impl AsRef<Path>, space: &Space) -> Result<()> {
    fs::write(path, serialize_space(space))?;
    Ok(())
}

/// A parsed map file. The optional `name` field names the map in a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapFile {
    pub name: Option<String>,
    pub table: MapTable,
}

pub fn parse_map(text: &str) -> Result<MapFile> {
    let doc: MapDoc = from_json(text)?;
    Ok(MapFile {
        name: doc.name,
        table: MapTable {
            domain: doc.domain,
            codomain: doc.codomain,
            pairs: doc.pairs,
        },
    })
}

pub fn serialize_map_table(table: &MapTable) -> String {
    let mut pairs = table.pairs.clone();
    pairs.sort();
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"domain\": {},\n", json_string(&table.domain)));
    out.push_str(&format!("  \"codomain\": {},\n", json_string(&table.codomain)));
    out.push_str("  \"pairs\": [");
    let items: Vec<String> = pairs
        .iter()
        .map(|(a, b)| format!("    [{}, {}]", json_string(a), json_string(b)))
        .collect();
    push_items(&mut out, &items);
    out.push_str("\n}\n");
    out
}

pub fn serialize_map(map: &SpaceMap) -> String {
    serialize_map_table(&MapTable::from(map))
}

/// A parsed Θ file: the names of the two spaces and the pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaFile {
    pub left: String,
    pub right: String,
    pub relation: ThetaRelation,
}

pub fn parse_theta(text: &str) -> Result<ThetaFile> {
    let doc: ThetaDoc = from_json(text)?;
    Ok(ThetaFile {
        left: doc.left,
        right: doc.right,
        relation: ThetaRelation::from_strs(doc.pairs)?,
    })
}

/// A parsed partition file. Classes are resolved against a space with
/// [`PartitionFile::partition`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionFile {
    pub space: String,
    pub classes: Vec<(String, Vec<String>)>,
}

impl PartitionFile {
    pub fn partition(&self, space: &Space) -> Result<Partition> {
        Partition::from_classes(space, self.classes.iter().map(|(l, m)| (l, m)))
    }
}

pub fn parse_partition(text: &str) -> Result<PartitionFile> {
    let doc: PartitionDoc = from_json(text)?;
    Ok(PartitionFile {
        space: doc.space,
        classes: doc
            .classes
            .into_iter()
            .map(|c| (c.label, c.members))
            .collect(),
    })
}

/// Any of the file kinds, told apart by their fields.
#[derive(Clone, Debug)]
pub enum Document {
    Space(Box<Space>),
    Map(MapFile),
    Theta(ThetaFile),
    Partition(PartitionFile),
}

pub fn parse_document(text: &str) -> Result<Document> {
    let value: serde_json::Value = from_json(text)?;
    let has = |key: &str| value.get(key).is_some();
    if has("elements") {
        parse_space(text).map(|s| Document::Space(Box::new(s)))
    } else if has("domain") {
        parse_map(text).map(Document::Map)
    } else if has("left") {
        parse_theta(text).map(Document::Theta)
    } else if has("classes") {
        parse_partition(text).map(Document::Partition)
    } else {
        Err(Error::parse(
            1,
            1,
            "unrecognised document: expected a space, map, theta or partition file",
        ))
    }
}

pub fn read_document(path: impl AsRef<Path>) -> Result<Document> {
    parse_document(&fs::read_to_string(path)?)
}

/// Loads a manifest and every file it lists. Paths are relative to the
/// manifest. A map is named by its `name` field, or else its file stem.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let doc: ManifestDoc = from_json(&fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut dataset = Dataset::new();
    for rel in &doc.spaces {
        dataset.add_space(Arc::new(read_space(base.join(rel))?))?;
    }
    for rel in &doc.maps {
        let file = parse_map(&fs::read_to_string(base.join(rel))?)?;
        let name = match file.name {
            Some(name) => name,
            None => rel
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::UnresolvedReference(rel.display().to_string()))?,
        };
        dataset.add_map(name, file.table)?;
    }
    for c in doc.constraints {
        let mode = match c.mode {
            ModeDoc::Continuous => KeyMode::Continuous,
            ModeDoc::Plain => KeyMode::Plain,
        };
        dataset.add_constraint(c.name, c.map, mode);
    }
    Ok(dataset)
}
