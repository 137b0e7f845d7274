//! Annual immunization need: population times visits per child.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::district::{AgeCategory, District};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedRow {
    pub union_council_id: String,
    pub visits: BTreeMap<AgeCategory, u64>,
}

impl NeedRow {
    pub fn total(&self) -> u64 {
        self.visits.values().sum()
    }
}

/// Required child-visits per year for every (union council, age category),
/// rows in district order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedMatrix {
    pub categories: Vec<AgeCategory>,
    pub rows: Vec<NeedRow>,
    pub total_visits: u64,
}

impl NeedMatrix {
    /// Need of the union council at district position `uc`.
    pub fn get(&self, uc: usize, age: AgeCategory) -> u64 {
        self.rows[uc].visits.get(&age).copied().unwrap_or(0)
    }

    pub fn by_id(&self, union_council_id: &str, age: AgeCategory) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.union_council_id == union_council_id)
            .map(|r| r.visits.get(&age).copied().unwrap_or(0))
    }

    pub fn category_total(&self, age: AgeCategory) -> u64 {
        self.rows
            .iter()
            .map(|r| r.visits.get(&age).copied().unwrap_or(0))
            .sum()
    }
}

pub fn compute_need(district: &District) -> NeedMatrix {
    let categories = district.categories();
    let rows: Vec<NeedRow> = district
        .union_councils()
        .iter()
        .map(|uc| NeedRow {
            union_council_id: uc.id.clone(),
            visits: district
                .schedule()
                .iter()
                .map(|(&age, &per_child)| (age, uc.population_of(age) * u64::from(per_child)))
                .collect(),
        })
        .collect();
    let total_visits = rows.iter().map(NeedRow::total).sum();
    NeedMatrix {
        categories,
        rows,
        total_visits,
    }
}
