//! SVG drawing with the origin at the bottom-left of the box.

use std::fmt::Write;

use rectmoment::{Instance, Layout};

const PALETTE: [&str; 8] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
];

pub fn svg(inst: &Instance, layout: &Layout, px: f64, labels: bool) -> String {
    let bbox = inst.bbox();
    let (w, h) = (bbox.width * px, bbox.height * px);
    let stroke = (px / 50.0).max(0.5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="{m} {m} {vw} {vh}">"#,
        m = -stroke,
        vw = w + 2.0 * stroke,
        vh = h + 2.0 * stroke,
    );
    let _ = writeln!(
        s,
        r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="black" stroke-width="{}"/>"#,
        2.0 * stroke
    );
    for (i, (p, r)) in layout.placements.iter().zip(inst.rects()).enumerate() {
        let x = p.x_lo * px;
        let y = (bbox.height - p.y_hi) * px;
        let _ = writeln!(
            s,
            r#"  <rect x="{x}" y="{y}" width="{}" height="{}" fill="{}" stroke="black" stroke-width="{stroke}"/>"#,
            p.dx() * px,
            p.dy() * px,
            PALETTE[i % PALETTE.len()],
        );
        if labels {
            let size = (p.dx().min(p.dy()) * px * 0.4).max(1.0);
            let _ = writeln!(
                s,
                r#"  <text x="{}" y="{}" font-size="{size}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
                p.cx() * px,
                (bbox.height - p.cy()) * px,
                r.id,
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
