use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MobilityTable;
use crate::category::Category;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationEntry {
    pub country_code: String,
    pub category: Category,
    pub missing_count: usize,
    pub total_count: usize,
    /// `missing_count / total_count`.
    pub missing_rate: f64,
    /// Mean of the present values; the value written into every missing cell.
    pub fill_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub entries: Vec<ImputationEntry>,
}

impl ImputationReport {
    pub fn entry(&self, country_code: &str, category: Category) -> Option<&ImputationEntry> {
        self.entries
            .iter()
            .find(|e| e.country_code == country_code && e.category == category)
    }
}

#[derive(Default)]
struct Tally {
    sum: f64,
    present: usize,
    missing: usize,
}

/// Single mean imputation: each absent cell takes the mean of all present
/// values of the same country and category over the whole table.
pub fn impute_missing(table: &MobilityTable) -> Result<(MobilityTable, ImputationReport)> {
    let mut tallies: BTreeMap<(&str, Category), Tally> = BTreeMap::new();
    for r in table.records() {
        for c in Category::ALL {
            let t = tallies.entry((r.country_code.as_str(), c)).or_default();
            match r.value(c) {
                Some(v) => {
                    t.sum += v;
                    t.present += 1;
                }
                None => t.missing += 1,
            }
        }
    }

    let mut entries = Vec::with_capacity(tallies.len());
    let mut fills: BTreeMap<(&str, Category), f64> = BTreeMap::new();
    for (&(country, category), t) in &tallies {
        if t.present == 0 {
            return Err(Error::Unimputable {
                country: country.to_string(),
                category: category.key().to_string(),
            });
        }
        let fill = t.sum / t.present as f64;
        let total = t.present + t.missing;
        fills.insert((country, category), fill);
        entries.push(ImputationEntry {
            country_code: country.to_string(),
            category,
            missing_count: t.missing,
            total_count: total,
            missing_rate: t.missing as f64 / total as f64,
            fill_value: fill,
        });
    }

    let records = table
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for c in Category::ALL {
                if r.values[c.index()].is_none() {
                    r.values[c.index()] = Some(fills[&(r.country_code.as_str(), c)]);
                }
            }
            r
        })
        .collect();
    Ok((table.with_records(records), ImputationReport { entries }))
}
