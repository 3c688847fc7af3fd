use std::fmt::Write as _;

use super::FigureSpec;

/// Fixed-precision number without trailing zeros.
pub(crate) fn num(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub(crate) struct Svg {
    out: String,
}

impl Svg {
    pub(crate) fn new(spec: &FigureSpec) -> Svg {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">",
            w = num(spec.width, 2),
            h = num(spec.height, 2)
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
            num(spec.width, 2),
            num(spec.height, 2)
        );
        if !spec.title.is_empty() {
            let _ = writeln!(
                out,
                "<text id=\"title\" x=\"{}\" y=\"{}\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
                num(spec.width / 2.0, 2),
                num(spec.margin.clamp(16.0, 24.0), 2),
                escape(&spec.title)
            );
        }
        Svg { out }
    }

    pub(crate) fn line(&mut self, s: impl AsRef<str>) {
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    pub(crate) fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, body: &str) {
        self.line(format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\">{}</text>",
            num(x, 2),
            num(y, 2),
            num(size, 1),
            escape(body)
        ));
    }

    /// Legend as a column of swatches starting at (`x`, `y`).
    pub(crate) fn legend(&mut self, x: f64, y: f64, title: Option<&str>, entries: &[(String, String)]) {
        self.line("<g id=\"legend\">");
        let mut y = y;
        if let Some(t) = title {
            self.text(x, y, 12.0, "start", t);
            y += 6.0;
        }
        for (color, label) in entries {
            self.line(format!(
                "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\" stroke=\"#555555\" stroke-width=\"0.5\"/>",
                num(x, 2),
                num(y, 2)
            ));
            self.text(x + 16.0, y + 10.0, 11.0, "start", label);
            y += 16.0;
        }
        self.line("</g>");
    }

    pub(crate) fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}
