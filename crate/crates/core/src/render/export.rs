use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::spatial::{feature_id, GeoCollection, LisaResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // f64 Display is the shortest string that parses back exactly.
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(raw: &str) -> Cell {
        match raw.parse::<f64>() {
            Ok(v) if v.to_string() == raw => Cell::Num(v),
            _ => Cell::Text(raw.to_string()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub id: String,
    pub cells: Vec<Cell>,
}

/// Per-region results keyed by region id. `columns` excludes the leading
/// `region_id` column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, cells: Vec<Cell>) -> Result<()> {
        if cells.len() != self.columns.len() {
            return Err(Error::Dimension {
                expected: self.columns.len(),
                got: cells.len(),
            });
        }
        self.rows.push(ResultRow {
            id: id.into(),
            cells,
        });
        Ok(())
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(writer);
        out.write_record(std::iter::once("region_id").chain(self.columns.iter().map(String::as_str)))?;
        for row in &self.rows {
            out.write_record(std::iter::once(row.id.clone()).chain(row.cells.iter().map(Cell::render)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::data(e.to_string()))
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("region_id") {
            return Err(Error::Schema {
                missing: vec!["region_id".into()],
            });
        }
        let mut table = ResultTable::new(headers.iter().skip(1).map(str::to_string).collect());
        for rec in rdr.records() {
            let rec = rec?;
            let id = rec.get(0).unwrap_or_default().to_string();
            table.push(id, rec.iter().skip(1).map(Cell::parse).collect())?;
        }
        Ok(table)
    }

    /// Copies each row into the properties of the matching feature. Every
    /// row must have a feature and every feature a row.
    pub fn to_geojson(&self, collection: &GeoCollection) -> Result<String> {
        let mut doc = collection.document.clone();
        let features = doc
            .get_mut("features")
            .and_then(Value::as_array_mut)
            .ok_or_else(|| Error::Geometry("FeatureCollection without features".into()))?;
        let by_id: HashMap<&str, &ResultRow> = self.rows.iter().map(|r| (r.id.as_str(), r)).collect();
        let geo_ids: BTreeSet<String> = features
            .iter()
            .filter_map(|f| feature_id(f, &collection.id_property))
            .collect();
        let only_in_geometry: Vec<String> =
            geo_ids.iter().filter(|id| !by_id.contains_key(id.as_str())).cloned().collect();
        let only_in_data: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !geo_ids.contains(&r.id))
            .map(|r| r.id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !only_in_geometry.is_empty() || !only_in_data.is_empty() {
            return Err(Error::IdMismatch {
                only_in_geometry,
                only_in_data,
            });
        }
        for f in features.iter_mut() {
            let Some(id) = feature_id(f, &collection.id_property) else {
                continue;
            };
            let row = by_id[id.as_str()];
            let obj = f.as_object_mut().expect("feature is an object");
            let props = obj
                .entry("properties")
                .or_insert_with(|| Value::Object(Map::new()));
            if !props.is_object() {
                *props = Value::Object(Map::new());
            }
            let props = props.as_object_mut().expect("properties object");
            for (col, cell) in self.columns.iter().zip(&row.cells) {
                props.insert(col.clone(), cell.to_json());
            }
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }
}

impl From<&LisaResult> for ResultTable {
    fn from(lisa: &LisaResult) -> Self {
        ResultTable {
            columns: ["I_i", "p", "quadrant", "tier"].map(String::from).to_vec(),
            rows: lisa
                .regions
                .iter()
                .map(|r| ResultRow {
                    id: r.region_id.clone(),
                    cells: vec![
                        Cell::Num(r.local_i),
                        Cell::Num(r.p),
                        Cell::Text(r.cluster.as_str().into()),
                        Cell::Text(r.tier.as_str().into()),
                    ],
                })
                .collect(),
        }
    }
}
