//! The planning universe: localities, union councils, vaccination centres and
//! the road network that joins them.

mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synth::{generate_synthetic, ShapeError, SyntheticShape};

/// JSON Schema every dataset file must satisfy before semantic validation.
pub const DISTRICT_SCHEMA: &str = include_str!("../../schema/district.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgeCategory {
    /// 0-1 years, five vaccination stages a year.
    Infant,
    /// 4-5 years, one visit.
    Preschool,
}

impl AgeCategory {
    pub const ALL: [AgeCategory; 2] = [AgeCategory::Infant, AgeCategory::Preschool];

    pub fn default_visits(self) -> u32 {
        match self {
            AgeCategory::Infant => 5,
            AgeCategory::Preschool => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgeCategory::Infant => "INFANT",
            AgeCategory::Preschool => "PRESCHOOL",
        }
    }
}

impl fmt::Display for AgeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Visits per child per year, keyed by age category.
pub type Schedule = BTreeMap<AgeCategory, u32>;

pub fn default_schedule() -> Schedule {
    AgeCategory::ALL
        .iter()
        .map(|&a| (a, a.default_visits()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locality {
    pub id: String,
    pub name: String,
}

/// Population is counted at the union council headquarters node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionCouncil {
    pub id: String,
    pub name: String,
    pub locality_id: String,
    pub population: BTreeMap<AgeCategory, u64>,
    pub network_node: String,
}

impl UnionCouncil {
    pub fn population_of(&self, age: AgeCategory) -> u64 {
        self.population.get(&age).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaccinationCentre {
    pub id: String,
    pub name: String,
    pub locality_id: String,
    pub network_node: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Surface {
    Metalled,
    Unmetalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub a: String,
    pub b: String,
    pub length_km: f64,
    pub surface: Surface,
}

/// Undirected road graph. Parallel edges are allowed; connectivity is not required.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<String>,
    pub edges: Vec<RoadEdge>,
}

/// Unvalidated dataset contents, exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistrictData {
    pub localities: Vec<Locality>,
    pub union_councils: Vec<UnionCouncil>,
    pub centres: Vec<VaccinationCentre>,
    pub network: RoadNetwork,
    pub schedule: Schedule,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{owner} references unknown locality {locality:?}")]
    UnknownLocality { owner: String, locality: String },
    #[error("{owner} references unknown network node {node:?}")]
    UnknownNode { owner: String, node: String },
    #[error("edge {index} ({a} - {b}) has non-positive or non-finite length {length_km} km")]
    EdgeLength {
        index: usize,
        a: String,
        b: String,
        length_km: f64,
    },
    #[error("district has no {0}")]
    Empty(&'static str),
    #[error("schedule for {0} must be at least one visit per child")]
    ScheduleVisits(AgeCategory),
    #[error("union council {union_council} has population for {category}, which the schedule does not list")]
    UnscheduledCategory {
        union_council: String,
        category: AgeCategory,
    },
}

#[derive(Debug, Error)]
pub enum DistrictError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed district file: {0}")]
    Parse(String),
    #[error("invalid district: {0}")]
    Validation(#[from] ValidationError),
}

/// A validated district. Immutable once built.
#[derive(Debug, Clone)]
pub struct District {
    data: DistrictData,
    locality_index: HashMap<String, usize>,
    uc_index: HashMap<String, usize>,
    centre_index: HashMap<String, usize>,
}

impl PartialEq for District {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

fn index_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a String>,
) -> Result<HashMap<String, usize>, ValidationError> {
    let mut index = HashMap::new();
    for (i, id) in ids.enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(ValidationError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(index)
}

impl District {
    pub fn new(data: DistrictData) -> Result<District, ValidationError> {
        let locality_index = index_unique("locality", data.localities.iter().map(|l| &l.id))?;
        let uc_index = index_unique("union council", data.union_councils.iter().map(|u| &u.id))?;
        let centre_index = index_unique("centre", data.centres.iter().map(|c| &c.id))?;
        let nodes = index_unique("network node", data.network.nodes.iter())?;

        if data.centres.is_empty() {
            return Err(ValidationError::Empty("vaccination centres"));
        }
        if data.union_councils.is_empty() {
            return Err(ValidationError::Empty("union councils"));
        }

        let placed = data
            .union_councils
            .iter()
            .map(|u| (format!("union council {}", u.id), &u.locality_id, &u.network_node))
            .chain(
                data.centres
                    .iter()
                    .map(|c| (format!("centre {}", c.id), &c.locality_id, &c.network_node)),
            );
        for (owner, locality, node) in placed {
            if !locality_index.contains_key(locality) {
                return Err(ValidationError::UnknownLocality {
                    owner,
                    locality: locality.clone(),
                });
            }
            if !nodes.contains_key(node) {
                return Err(ValidationError::UnknownNode {
                    owner,
                    node: node.clone(),
                });
            }
        }

        for (index, edge) in data.network.edges.iter().enumerate() {
            for end in [&edge.a, &edge.b] {
                if !nodes.contains_key(end) {
                    return Err(ValidationError::UnknownNode {
                        owner: format!("edge {index}"),
                        node: end.clone(),
                    });
                }
            }
            if !(edge.length_km.is_finite() && edge.length_km > 0.0) {
                return Err(ValidationError::EdgeLength {
                    index,
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                    length_km: edge.length_km,
                });
            }
        }

        if data.schedule.is_empty() {
            return Err(ValidationError::Empty("visit schedule"));
        }
        for (&category, &visits) in &data.schedule {
            if visits < 1 {
                return Err(ValidationError::ScheduleVisits(category));
            }
        }
        for uc in &data.union_councils {
            if let Some(&category) = uc
                .population
                .keys()
                .find(|c| !data.schedule.contains_key(c))
            {
                return Err(ValidationError::UnscheduledCategory {
                    union_council: uc.id.clone(),
                    category,
                });
            }
        }

        Ok(District {
            data,
            locality_index,
            uc_index,
            centre_index,
        })
    }

    pub fn from_json_str(text: &str) -> Result<District, DistrictError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| DistrictError::Parse(e.to_string()))?;
        check_schema(&value)?;
        let data: DistrictData =
            serde_json::from_value(value).map_err(|e| DistrictError::Parse(e.to_string()))?;
        Ok(District::new(data)?)
    }

    /// Pretty JSON in the dataset file format, newline-terminated.
    pub fn to_json_string(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&self.data).expect("district data always serializes");
        text.push('\n');
        text
    }

    pub fn data(&self) -> &DistrictData {
        &self.data
    }

    pub fn localities(&self) -> &[Locality] {
        &self.data.localities
    }

    pub fn union_councils(&self) -> &[UnionCouncil] {
        &self.data.union_councils
    }

    pub fn centres(&self) -> &[VaccinationCentre] {
        &self.data.centres
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.data.network
    }

    pub fn schedule(&self) -> &Schedule {
        &self.data.schedule
    }

    /// Age categories in schedule order.
    pub fn categories(&self) -> Vec<AgeCategory> {
        self.data.schedule.keys().copied().collect()
    }

    pub fn locality_position(&self, id: &str) -> Option<usize> {
        self.locality_index.get(id).copied()
    }

    pub fn union_council_position(&self, id: &str) -> Option<usize> {
        self.uc_index.get(id).copied()
    }

    pub fn centre_position(&self, id: &str) -> Option<usize> {
        self.centre_index.get(id).copied()
    }

    /// Localities that contain at least one centre or union council, by id.
    pub fn populated_localities(&self) -> HashSet<&str> {
        self.data
            .union_councils
            .iter()
            .map(|u| u.locality_id.as_str())
            .chain(self.data.centres.iter().map(|c| c.locality_id.as_str()))
            .collect()
    }
}

fn check_schema(value: &serde_json::Value) -> Result<(), DistrictError> {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    let validator = VALIDATOR.get_or_init(|| {
        let schema: serde_json::Value =
            serde_json::from_str(DISTRICT_SCHEMA).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    });
    let problems: Vec<String> = validator
        .iter_errors(value)
        .take(5)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(DistrictError::Parse(problems.join("; ")))
    }
}

pub fn load_district(path: impl AsRef<Path>) -> Result<District, DistrictError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DistrictError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    District::from_json_str(&text)
}

pub fn save_district(district: &District, path: impl AsRef<Path>) -> Result<(), DistrictError> {
    let path = path.as_ref();
    fs::write(path, district.to_json_string()).map_err(|source| DistrictError::Io {
        path: path.to_path_buf(),
        source,
    })
}
