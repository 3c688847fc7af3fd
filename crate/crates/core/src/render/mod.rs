//! SVG figures and tabular/GeoJSON exports.
//!
//! Every renderer is a pure function of its inputs: numbers are printed with
//! fixed precision and iteration follows input order, so identical inputs
//! give byte-identical documents.

mod charts;
mod color;
mod export;
mod maps;
mod svg;

pub use charts::{render_indicator_series, render_moran_scatter, render_radar, SeriesLine};
pub use color::{ColorScale, Rgb, ScaleKind};
pub use export::{Cell, ResultRow, ResultTable};
pub use maps::{
    cluster_color, render_choropleth, render_lisa_maps, tier_color, LisaMaps,
};

/// Canvas size, title and margins of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub margin: f64,
    pub legend_title: Option<String>,
}

impl Default for FigureSpec {
    fn default() -> Self {
        FigureSpec {
            width: 640.0,
            height: 480.0,
            title: String::new(),
            margin: 40.0,
            legend_title: None,
        }
    }
}

impl FigureSpec {
    pub fn titled(title: impl Into<String>) -> Self {
        FigureSpec {
            title: title.into(),
            ..Default::default()
        }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.width > 0.0 && self.height > 0.0 && self.margin >= 0.0)
            || 2.0 * self.margin >= self.width.min(self.height)
        {
            return Err(crate::Error::param(format!(
                "invalid figure size {}x{} with margin {}",
                self.width, self.height, self.margin
            )));
        }
        Ok(())
    }
}
