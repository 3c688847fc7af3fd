use serde::Serialize;

use super::moran::{moran_local, Quadrant, ValueField};
use super::weights::SpatialWeights;
use crate::error::{Error, Result};

/// Finest conventional significance level a p-value reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tier {
    NotSignificant,
    P05,
    P01,
    P001,
}

impl Tier {
    pub const LEVELS: [Tier; 3] = [Tier::P05, Tier::P01, Tier::P001];

    pub fn from_p(p: f64) -> Tier {
        if p <= 0.001 {
            Tier::P001
        } else if p <= 0.01 {
            Tier::P01
        } else if p <= 0.05 {
            Tier::P05
        } else {
            Tier::NotSignificant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::NotSignificant => "ns",
            Tier::P05 => "0.05",
            Tier::P01 => "0.01",
            Tier::P001 => "0.001",
        }
    }

    pub fn parse(s: &str) -> Option<Tier> {
        [Tier::NotSignificant, Tier::P05, Tier::P01, Tier::P001]
            .into_iter()
            .find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cluster-map category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ClusterLabel {
    Significant(Quadrant),
    NotSignificant,
}

impl ClusterLabel {
    pub const ALL: [ClusterLabel; 5] = [
        ClusterLabel::Significant(Quadrant::HH),
        ClusterLabel::Significant(Quadrant::LL),
        ClusterLabel::Significant(Quadrant::LH),
        ClusterLabel::Significant(Quadrant::HL),
        ClusterLabel::NotSignificant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClusterLabel::Significant(q) => q.as_str(),
            ClusterLabel::NotSignificant => "ns",
        }
    }
}

impl std::fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LisaRegion {
    pub region_id: String,
    pub z: f64,
    pub lag: f64,
    pub local_i: f64,
    pub p: f64,
    pub quadrant: Quadrant,
    pub cluster: ClusterLabel,
    pub tier: Tier,
    pub island: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LisaResult {
    pub alpha: f64,
    pub regions: Vec<LisaRegion>,
}

impl LisaResult {
    pub fn clusters(&self) -> Vec<ClusterLabel> {
        self.regions.iter().map(|r| r.cluster).collect()
    }
}

/// Labels each region: `ns` when `p > alpha` (or the region is an island),
/// otherwise its scatterplot quadrant, with the finest tier reached.
pub fn lisa_classify(field: &ValueField, w: &SpatialWeights, p: &[f64], alpha: f64) -> Result<LisaResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if p.len() != field.len() {
        return Err(Error::Dimension {
            expected: field.len(),
            got: p.len(),
        });
    }
    let local = moran_local(field, w)?;
    let regions = (0..field.len())
        .map(|i| {
            let quadrant = Quadrant::from_signs(field.z[i], local.lag[i]);
            let island = w.is_island(i);
            let significant = !island && p[i] <= alpha;
            LisaRegion {
                region_id: w.ids()[i].clone(),
                z: field.z[i],
                lag: local.lag[i],
                local_i: local.values[i],
                p: p[i],
                quadrant,
                cluster: if significant {
                    ClusterLabel::Significant(quadrant)
                } else {
                    ClusterLabel::NotSignificant
                },
                tier: if significant { Tier::from_p(p[i]) } else { Tier::NotSignificant },
                island,
            }
        })
        .collect();
    Ok(LisaResult { alpha, regions })
}
