//! Deterministic SVG output for windows, labellings, conflicts and paths.
//! Coordinates are float shadows printed at a fixed precision.

use std::fmt::Write;

use snf_core::complexes::Window;
use snf_core::labeling::{Alphabet, Conflict};
use snf_core::FieldElement;

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    /// Canvas width and height in px.
    pub size: f64,
    pub margin: f64,
    /// Decimal places for every coordinate.
    pub precision: usize,
    pub fill: String,
    pub stroke: String,
    pub highlight: String,
    pub font_size: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            size: 600.0,
            margin: 24.0,
            precision: 3,
            fill: "#dde6f0".into(),
            stroke: "#1f3a5f".into(),
            highlight: "#c0392b".into(),
            font_size: 12.0,
        }
    }
}

type Pt = (f64, f64);

#[derive(Debug, Clone)]
struct Polygon {
    pts: Vec<Pt>,
    emphasis: bool,
}

#[derive(Debug, Clone)]
struct Text {
    at: Pt,
    text: String,
    emphasis: bool,
}

/// Everything to draw, in world coordinates.
#[derive(Debug, Clone, Default)]
pub struct Drawing {
    polygons: Vec<Polygon>,
    texts: Vec<Text>,
    markers: Vec<Pt>,
    polylines: Vec<Vec<Pt>>,
}

fn shadow(v: &FieldElement) -> Pt {
    v.to_complex()
}

fn window_polygons(w: &Window) -> Vec<Polygon> {
    w.cells()
        .iter()
        .map(|cell| Polygon {
            pts: cell.iter().map(|&v| shadow(w.vertex(v))).collect(),
            emphasis: false,
        })
        .collect()
}

impl Drawing {
    pub fn window(w: &Window) -> Self {
        Drawing {
            polygons: window_polygons(w),
            ..Default::default()
        }
    }

    /// Complexes as polygons and one annotation per vertex.
    pub fn labelled(w: &Window, labels: &[String]) -> Self {
        let mut d = Self::window(w);
        d.texts = w
            .vertices()
            .iter()
            .zip(labels)
            .map(|(v, l)| Text {
                at: shadow(v),
                text: l.clone(),
                emphasis: false,
            })
            .collect();
        d
    }

    /// The window with the two complexes of a conflict emphasized and the
    /// conflicting vertex marked with both forced labels.
    pub fn conflict(w: &Window, c: &Conflict, alphabet: &Alphabet) -> Self {
        let mut d = Self::window(w);
        for a in [c.complex_a(), c.complex_b()] {
            d.polygons.push(Polygon {
                pts: a.vertices(w.spec()).iter().map(shadow).collect(),
                emphasis: true,
            });
        }
        let at = shadow(&c.vertex);
        d.markers.push(at);
        d.texts.push(Text {
            at,
            text: format!(
                "{} / {}",
                alphabet.name(c.label_a),
                alphabet.name(c.label_b)
            ),
            emphasis: true,
        });
        d
    }

    pub fn paths(paths: &[Vec<FieldElement>]) -> Self {
        Drawing {
            polylines: paths
                .iter()
                .map(|p| p.iter().map(shadow).collect())
                .collect(),
            ..Default::default()
        }
    }

    pub fn num_polygons(&self) -> usize {
        self.polygons.len()
    }
    pub fn num_texts(&self) -> usize {
        self.texts.len()
    }

    fn points(&self) -> impl Iterator<Item = &Pt> {
        self.polygons
            .iter()
            .flat_map(|p| &p.pts)
            .chain(self.texts.iter().map(|t| &t.at))
            .chain(&self.markers)
            .chain(self.polylines.iter().flatten())
    }
}

/// `-0.000` prints as `0.000` so that output does not depend on the sign of zero.
fn num(x: f64, prec: usize) -> String {
    let s = format!("{x:.prec$}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_svg(d: &Drawing, style: &Style) -> String {
    let p = style.precision;
    let size = num(style.size, p);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )
    .unwrap();
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in d.points() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0.is_finite() {
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let s = (style.size - 2.0 * style.margin) / span;
        // y grows downwards on the canvas.
        let map = |&(x, y): &Pt| {
            (
                style.margin + (x - x0) * s,
                style.size - style.margin - (y - y0) * s,
            )
        };
        let pts = |v: &[Pt]| {
            v.iter()
                .map(|q| {
                    let (a, b) = map(q);
                    format!("{},{}", num(a, p), num(b, p))
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        for poly in &d.polygons {
            let (fill, stroke, width) = if poly.emphasis {
                ("none", style.highlight.as_str(), 2.0)
            } else {
                (style.fill.as_str(), style.stroke.as_str(), 1.0)
            };
            writeln!(
                out,
                r#"<polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="{}"/>"#,
                pts(&poly.pts),
                num(width, 1)
            )
            .unwrap();
        }
        for line in &d.polylines {
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.0" stroke-opacity="0.5"/>"#, pts(line), style.stroke).unwrap();
        }
        for m in &d.markers {
            let (a, b) = map(m);
            writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                num(a, p),
                num(b, p),
                num(style.font_size / 2.0, p),
                style.highlight
            )
            .unwrap();
        }
        for t in &d.texts {
            let (a, b) = map(&t.at);
            let color = if t.emphasis {
                &style.highlight
            } else {
                &style.stroke
            };
            writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="{}" fill="{color}">{}</text>"#,
                num(a + style.font_size / 3.0, p),
                num(b - style.font_size / 3.0, p),
                num(style.font_size, p),
                escape(&t.text)
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use snf_core::budget::Budget;
    use snf_core::FractalSpec;

    #[test]
    fn empty_drawing_is_a_bare_canvas() {
        let s = render_svg(&Drawing::paths(&[]), &Style::default());
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(num(-0.0001, 3), "0.000");
        assert_eq!(num(-0.5, 1), "-0.5");
    }

    #[test]
    fn window_is_deterministic() {
        let w = Window::new(
            &FractalSpec::builtin("vicsek").unwrap(),
            0,
            2,
            &Budget::unlimited(),
        )
        .unwrap();
        let a = render_svg(&Drawing::window(&w), &Style::default());
        assert_eq!(a, render_svg(&Drawing::window(&w), &Style::default()));
        assert_eq!(a.matches("<polygon").count(), 25);
    }
}
