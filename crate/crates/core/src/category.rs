use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The six place categories of a mobility report, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    RetailRecreation,
    GroceryPharmacy,
    Parks,
    TransitStations,
    Workplaces,
    Residential,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::RetailRecreation,
        Category::GroceryPharmacy,
        Category::Parks,
        Category::TransitStations,
        Category::Workplaces,
        Category::Residential,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Category::RetailRecreation => "retail_recreation",
            Category::GroceryPharmacy => "grocery_pharmacy",
            Category::Parks => "parks",
            Category::TransitStations => "transit_stations",
            Category::Workplaces => "workplaces",
            Category::Residential => "residential",
        }
    }

    /// Column header used by the published report files.
    pub fn default_header(self) -> &'static str {
        match self {
            Category::RetailRecreation => "retail_and_recreation_percent_change_from_baseline",
            Category::GroceryPharmacy => "grocery_and_pharmacy_percent_change_from_baseline",
            Category::Parks => "parks_percent_change_from_baseline",
            Category::TransitStations => "transit_stations_percent_change_from_baseline",
            Category::Workplaces => "workplaces_percent_change_from_baseline",
            Category::Residential => "residential_percent_change_from_baseline",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::RetailRecreation => "Retail & recreation",
            Category::GroceryPharmacy => "Grocery & pharmacy",
            Category::Parks => "Parks",
            Category::TransitStations => "Transit stations",
            Category::Workplaces => "Workplaces",
            Category::Residential => "Residential",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.key() == s || c.default_header() == s)
            .ok_or_else(|| Error::NotFound {
                what: format!("category `{s}`"),
                available: Category::ALL.iter().map(|c| c.key().to_string()).collect(),
            })
    }
}
