//! SVG overlay of a scene: scene objects, trajectories colored by group,
//! group boxes with event names and role names at trajectory ends.

use std::collections::HashMap;
use std::fmt::Write;

use crate::model::{Dataset, Geometry, Point, Solution};

const WIDTH: f64 = 960.0;
const MARGIN: f64 = 40.0;
const NEUTRAL: &str = "#888888";
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Scene-to-canvas transform: uniform scale, fixed margin, y pointing down.
struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Point>) -> (Frame, f64) {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Point::new(0.0, 0.0);
            hi = Point::new(1.0, 1.0);
        }
        let span_x = (hi.x - lo.x).max(1e-9);
        let span_y = (hi.y - lo.y).max(1e-9);
        let scale = (WIDTH - 2.0 * MARGIN) / span_x.max(span_y);
        let height = span_y * scale + 2.0 * MARGIN;
        (Frame { x0: lo.x, y0: lo.y, scale }, height)
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p.x - self.x0) * self.scale, MARGIN + (p.y - self.y0) * self.scale)
    }
}

pub fn render_svg(dataset: &Dataset, solution: Option<&Solution>) -> String {
    let vocab = &dataset.vocabulary;
    let all = dataset
        .trajectories
        .iter()
        .flat_map(|t| t.samples().iter().map(|s| s.point()))
        .chain(dataset.scene.objects.iter().flat_map(|o| o.geometry.vertices()));
    let (frame, height) = Frame::fit(all);

    // trajectory id -> (group index, role)
    let mut label: HashMap<&str, (usize, usize)> = HashMap::new();
    if let Some(s) = solution {
        for (gi, g) in s.groups.iter().enumerate() {
            for m in &g.members {
                label.insert(m.as_str(), (gi, g.parse.roles.get(m).copied().unwrap_or(usize::MAX)));
            }
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for o in &dataset.scene.objects {
        let name = escape(&vocab.scene_classes[o.class]);
        let anchor = match &o.geometry {
            Geometry::Point(p) => {
                let (x, y) = frame.map(*p);
                let _ = writeln!(svg, r##"<circle class="scene" cx="{x:.2}" cy="{y:.2}" r="6" fill="#cccccc" stroke="#999999"/>"##);
                (x, y)
            }
            Geometry::Polygon(v) => {
                let pts: Vec<String> = v.iter().map(|p| frame.map(*p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(svg, r##"<polygon class="scene" points="{}" fill="#dddddd" stroke="#999999"/>"##, pts.join(" "));
                frame.map(v[0])
            }
        };
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#666666">{name}</text>"##, anchor.0 + 8.0, anchor.1);
    }

    for t in &dataset.trajectories {
        let color = match label.get(t.id.as_str()) {
            Some(&(gi, _)) => PALETTE[gi % PALETTE.len()],
            None => NEUTRAL,
        };
        let pts: Vec<String> = t.samples().iter().map(|s| frame.map(s.point())).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="trajectory" data-id="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(&t.id),
            pts.join(" ")
        );
        if let Some(&(_, role)) = label.get(t.id.as_str()) {
            if role < vocab.n_labels() {
                let (x, y) = frame.map(t.samples()[t.samples().len() - 1].point());
                let _ = writeln!(
                    svg,
                    r#"<text class="role" x="{:.2}" y="{:.2}" font-size="9" fill="{color}">{}</text>"#,
                    x + 3.0,
                    y - 3.0,
                    escape(vocab.label_name(role))
                );
            }
        }
    }

    if let Some(s) = solution {
        let index = dataset.index_map();
        for (gi, g) in s.groups.iter().enumerate() {
            let pts: Vec<(f64, f64)> = g
                .members
                .iter()
                .filter_map(|m| index.get(m.as_str()))
                .flat_map(|&i| dataset.trajectories[i].samples().iter().map(|s| frame.map(s.point())))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let (x0, y0, x1, y1) = pts.iter().fold(
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), &(x, y)| (a.min(x), b.min(y), c.max(x), d.max(y)),
            );
            let color = PALETTE[gi % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<rect class="group" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{color}" stroke-dasharray="6 3"/>"#,
                x0 - 6.0,
                y0 - 6.0,
                x1 - x0 + 12.0,
                y1 - y0 + 12.0
            );
            let event = vocab.events.get(g.parse.event).map(String::as_str).unwrap_or("?");
            let _ = writeln!(
                svg,
                r#"<text class="event" x="{:.2}" y="{:.2}" font-size="12" font-weight="bold" fill="{color}">{}</text>"#,
                x0 - 6.0,
                y0 - 10.0,
                escape(event)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
