use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{region_key, DateWindow, MobilityRecord, MobilityTable};
use crate::category::Category;
use crate::error::{Error, Result};

const COUNTRY: &str = "country_code";
const SUB_REGION_1: &str = "sub_region_1";
const SUB_REGION_2: &str = "sub_region_2";
const DATE: &str = "date";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// The first bad row or date gap aborts the parse.
    #[default]
    Strict,
    /// Bad rows are skipped and reported; gaps are reported.
    Lenient,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Logical column key -> header name in the file. Keys are `country_code`,
    /// `sub_region_1`, `sub_region_2`, `date` and the category keys.
    pub column_map: HashMap<String, String>,
    pub mode: ParseMode,
    pub baseline: DateWindow,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            column_map: HashMap::new(),
            mode: ParseMode::Strict,
            baseline: DateWindow::default_baseline(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    /// 1-based line number; `None` for table-level findings such as gaps.
    pub line: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub table: MobilityTable,
    pub issues: Vec<RowIssue>,
}

struct Columns {
    country: usize,
    sub1: Option<usize>,
    sub2: Option<usize>,
    date: usize,
    categories: [usize; 6],
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, map: &HashMap<String, String>) -> Result<Self> {
        let name_for = |key: &str, default: &str| -> String {
            map.get(key).cloned().unwrap_or_else(|| default.to_string())
        };
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);

        let mut missing = Vec::new();
        let mut required = |key: &str, default: &str| -> usize {
            let name = name_for(key, default);
            find(&name).unwrap_or_else(|| {
                missing.push(name);
                usize::MAX
            })
        };
        let country = required(COUNTRY, "country_region_code");
        let date = required(DATE, "date");
        let mut categories = [0; 6];
        for c in Category::ALL {
            categories[c.index()] = required(c.key(), c.default_header());
        }
        if !missing.is_empty() {
            return Err(Error::Schema { missing });
        }
        Ok(Columns {
            country,
            sub1: find(&name_for(SUB_REGION_1, SUB_REGION_1)),
            sub2: find(&name_for(SUB_REGION_2, SUB_REGION_2)),
            date,
            categories,
        })
    }
}

fn non_empty(s: Option<&str>) -> Option<&str> {
    s.map(str::trim).filter(|s| !s.is_empty())
}

fn parse_row(row: &csv::StringRecord, cols: &Columns) -> std::result::Result<MobilityRecord, String> {
    let country = non_empty(row.get(cols.country)).ok_or("empty country code")?;
    let sub1 = cols.sub1.and_then(|i| non_empty(row.get(i)));
    let sub2 = cols.sub2.and_then(|i| non_empty(row.get(i)));
    let sub_region = match (sub1, sub2) {
        (Some(a), Some(b)) => Some(format!("{a} > {b}")),
        (a, b) => a.or(b).map(String::from),
    };
    let raw_date = row.get(cols.date).unwrap_or("").trim();
    let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d")
        .map_err(|_| format!("unparseable date `{raw_date}`"))?;

    let mut values = [None; 6];
    for c in Category::ALL {
        let cell = row.get(cols.categories[c.index()]).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format!("non-numeric {} value `{cell}`", c.key()))?;
        if v < -100.0 {
            return Err(format!("{} value {v} is below -100", c.key()));
        }
        values[c.index()] = Some(v);
    }

    Ok(MobilityRecord {
        region_id: region_key(country, sub_region.as_deref()),
        country_code: country.to_string(),
        sub_region,
        date,
        values,
    })
}

/// Parses a mobility-report CSV into a normalized table.
///
/// Empty cells become absent values. In strict mode the first malformed row,
/// duplicate (region, date) pair or date gap is an error; in lenient mode
/// those rows are skipped (gaps kept) and listed in [`ParsedTable::issues`].
pub fn parse_cmr_csv<R: Read>(source: R, options: &ParseOptions) -> Result<ParsedTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = Columns::resolve(&headers, &options.column_map)?;
    let strict = options.mode == ParseMode::Strict;

    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parsed = parse_row(&row, &cols).and_then(|rec| {
            match seen.insert((rec.region_id.clone(), rec.date), line) {
                Some(first) => Err(format!(
                    "duplicate record for `{}` on {} (first seen on line {first})",
                    rec.region_id, rec.date
                )),
                None => Ok(rec),
            }
        });
        match parsed {
            Ok(rec) => records.push(rec),
            Err(message) if strict => return Err(Error::Row { line, message }),
            Err(message) => issues.push(RowIssue {
                line: Some(line),
                message,
            }),
        }
    }

    let table = MobilityTable::new(records, options.baseline)?;
    let gaps = table.gaps();
    if let Some((region, date)) = gaps.first() {
        if strict {
            return Err(Error::data(format!(
                "region `{region}` has {} missing date(s), first {date}",
                gaps.iter().filter(|g| &g.0 == region).count()
            )));
        }
        for (region, date) in gaps {
            issues.push(RowIssue {
                line: None,
                message: format!("region `{region}` has no row for {date}"),
            });
        }
    }
    Ok(ParsedTable { table, issues })
}

/// Writes the table in canonical column order with the default report headers.
pub fn write_csv<W: Write>(table: &MobilityTable, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["country_region_code", "sub_region_1", "date"];
    header.extend(Category::ALL.iter().map(|c| c.default_header()));
    w.write_record(&header)?;
    for r in table.records() {
        let mut row = vec![
            r.country_code.clone(),
            r.sub_region.clone().unwrap_or_default(),
            r.date.format("%Y-%m-%d").to_string(),
        ];
        row.extend(
            r.values
                .iter()
                .map(|v| v.map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
