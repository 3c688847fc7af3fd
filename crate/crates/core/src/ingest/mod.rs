//! Mobility-report tables: parsing, region selection and mean imputation.

mod impute;
mod parse;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};

pub use impute::{impute_missing, ImputationEntry, ImputationReport};
pub use parse::{parse_cmr_csv, write_csv, ParseMode, ParseOptions, ParsedTable, RowIssue};

/// Inclusive calendar-date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::param(format!("empty date window {start}..{end}")));
        }
        Ok(DateWindow { start, end })
    }

    /// 2020-01-03 ..= 2020-02-06, the reference period of the reports.
    pub fn default_baseline() -> Self {
        DateWindow {
            start: NaiveDate::from_ymd_opt(2020, 1, 3).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 2, 6).unwrap(),
        }
    }

    /// 2020-02-15 ..= 2020-05-16.
    pub fn default_analysis() -> Self {
        DateWindow {
            start: NaiveDate::from_ymd_opt(2020, 2, 15).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 5, 16).unwrap(),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.days() as i64).map(move |d| self.start + Duration::days(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityRecord {
    pub region_id: String,
    pub country_code: String,
    /// `None` for national rows.
    pub sub_region: Option<String>,
    pub date: NaiveDate,
    /// Percent change from baseline, indexed by [`Category::index`].
    pub values: [Option<f64>; 6],
}

impl MobilityRecord {
    pub fn value(&self, category: Category) -> Option<f64> {
        self.values[category.index()]
    }
}

/// Region key: `country_code/sub_region` (sub-region empty for national rows).
pub fn region_key(country_code: &str, sub_region: Option<&str>) -> String {
    format!("{}/{}", country_code, sub_region.unwrap_or(""))
}

/// Long-format table, one record per (region, date), ordered by (region_id, date).
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTable {
    records: Vec<MobilityRecord>,
    coverage: DateWindow,
    baseline: DateWindow,
}

impl MobilityTable {
    /// Sorts the records and checks (region, date) uniqueness and value bounds.
    pub fn new(mut records: Vec<MobilityRecord>, baseline: DateWindow) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::data("table has no records"));
        }
        records.sort_by(|a, b| (&a.region_id, a.date).cmp(&(&b.region_id, b.date)));
        for pair in records.windows(2) {
            if pair[0].region_id == pair[1].region_id && pair[0].date == pair[1].date {
                return Err(Error::data(format!(
                    "duplicate record for region `{}` on {}",
                    pair[0].region_id, pair[0].date
                )));
            }
        }
        for r in &records {
            for c in Category::ALL {
                if let Some(v) = r.value(c) {
                    if !(v >= -100.0) || !v.is_finite() {
                        return Err(Error::data(format!(
                            "region `{}` on {}: {} = {v} is below -100%",
                            r.region_id, r.date, c
                        )));
                    }
                }
            }
        }
        let start = records.iter().map(|r| r.date).min().unwrap();
        let end = records.iter().map(|r| r.date).max().unwrap();
        Ok(MobilityTable {
            records,
            coverage: DateWindow { start, end },
            baseline,
        })
    }

    pub fn records(&self) -> &[MobilityRecord] {
        &self.records
    }

    pub fn coverage(&self) -> DateWindow {
        self.coverage
    }

    pub fn baseline(&self) -> DateWindow {
        self.baseline
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn missing_cells(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.values.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    pub fn region_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.region_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn countries(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.country_code.as_str()).collect()
    }

    /// Records of each region, in date order.
    pub fn series(&self) -> BTreeMap<&str, &[MobilityRecord]> {
        let mut out = BTreeMap::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            if i == self.records.len() || self.records[i].region_id != self.records[start].region_id
            {
                out.insert(self.records[start].region_id.as_str(), &self.records[start..i]);
                start = i;
            }
        }
        out
    }

    pub fn region(&self, region_id: &str) -> Option<&[MobilityRecord]> {
        self.series().get(region_id).copied()
    }

    /// Missing dates inside each region's own date span.
    pub fn gaps(&self) -> Vec<(String, NaiveDate)> {
        let mut gaps = Vec::new();
        for (id, recs) in self.series() {
            for pair in recs.windows(2) {
                let mut d = pair[0].date + Duration::days(1);
                while d < pair[1].date {
                    gaps.push((id.to_string(), d));
                    d += Duration::days(1);
                }
            }
        }
        gaps
    }

    pub(crate) fn subset(&self, keep: impl Fn(&MobilityRecord) -> bool) -> Option<MobilityTable> {
        let records: Vec<_> = self.records.iter().filter(|r| keep(r)).cloned().collect();
        if records.is_empty() {
            return None;
        }
        let start = records.iter().map(|r| r.date).min().unwrap();
        let end = records.iter().map(|r| r.date).max().unwrap();
        Some(MobilityTable {
            records,
            coverage: DateWindow { start, end },
            baseline: self.baseline,
        })
    }

    pub(crate) fn with_records(&self, records: Vec<MobilityRecord>) -> MobilityTable {
        MobilityTable {
            records,
            coverage: self.coverage,
            baseline: self.baseline,
        }
    }
}

/// Selects one country's national rows (`sub_region = None`) or a single sub-region.
pub fn filter_region(
    table: &MobilityTable,
    country_code: &str,
    sub_region: Option<&str>,
) -> Result<MobilityTable> {
    let countries = table.countries();
    if !countries.contains(country_code) {
        return Err(Error::NotFound {
            what: format!("country `{country_code}`"),
            available: countries.iter().map(|s| s.to_string()).collect(),
        });
    }
    table
        .subset(|r| r.country_code == country_code && r.sub_region.as_deref() == sub_region)
        .ok_or_else(|| Error::NotFound {
            what: match sub_region {
                Some(s) => format!("sub-region `{s}` of `{country_code}`"),
                None => format!("national rows of `{country_code}`"),
            },
            available: sub_regions(table, country_code),
        })
}

/// Every sub-regional row of a country (national rows excluded).
pub fn filter_subregions(table: &MobilityTable, country_code: &str) -> Result<MobilityTable> {
    table
        .subset(|r| r.country_code == country_code && r.sub_region.is_some())
        .ok_or_else(|| Error::NotFound {
            what: format!("sub-regions of `{country_code}`"),
            available: table.countries().iter().map(|s| s.to_string()).collect(),
        })
}

fn sub_regions(table: &MobilityTable, country_code: &str) -> Vec<String> {
    let set: BTreeSet<String> = table
        .records
        .iter()
        .filter(|r| r.country_code == country_code)
        .map(|r| r.sub_region.clone().unwrap_or_default())
        .collect();
    set.into_iter().collect()
}
