//! Static SVG pictures of generalized equations: items along a horizontal
//! interval, bases as labeled arcs above it.

use std::collections::BTreeMap;
use std::fmt::Write;

use lambda_geq::GenEq;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Clone, Debug)]
pub struct RenderOptions {
    /// Horizontal width of one item, in pixels.
    pub item_width: i64,
    /// Vertical distance between arc levels.
    pub level_height: i64,
    pub show_connections: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { item_width: 80, level_height: 28, show_connections: true }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Greedy levels: each base takes the lowest level whose bases it does not
/// overlap, and sits above every base it contains.
fn levels(g: &GenEq) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.bases.len()).collect();
    order.sort_by_key(|&k| {
        let b = &g.bases[k];
        (b.right() - b.left(), b.left(), b.id.clone())
    });
    let mut level = vec![0; g.bases.len()];
    for (n, &k) in order.iter().enumerate() {
        let b = &g.bases[k];
        let mut lv = 1;
        loop {
            let clash = order[..n].iter().any(|&j| {
                let c = &g.bases[j];
                let overlap = c.left() < b.right() && b.left() < c.right();
                let inside = b.left() <= c.left() && c.right() <= b.right();
                level[j] == lv && overlap || inside && level[j] >= lv
            });
            if !clash {
                break;
            }
            lv += 1;
        }
        level[k] = lv;
    }
    level
}

pub fn render(g: &GenEq, opts: &RenderOptions) -> String {
    let margin = 40;
    let w = opts.item_width;
    let lv = levels(g);
    let top = lv.iter().copied().max().unwrap_or(0) as i64;
    let axis = margin + (top + 1) * opts.level_height;
    let conn_rows = if opts.show_connections { g.connections.len() as i64 } else { 0 };
    let width = 2 * margin + g.rho.max(1) as i64 * w;
    let height = axis + 70 + conn_rows * 16 + margin / 2;
    let x = |b: usize| margin + (b as i64 - 1) * w;

    let mut pair_color: BTreeMap<String, &str> = BTreeMap::new();
    for b in &g.bases {
        if !pair_color.contains_key(&b.id) {
            let c = PALETTE[pair_color.len() / 2 % PALETTE.len()];
            pair_color.insert(b.id.clone(), c);
            pair_color.insert(b.dual.clone(), c);
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    );
    s.push_str("<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"7\" markerHeight=\"7\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#444444\"/></marker></defs>\n");
    let _ = writeln!(s, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);

    for sec in &g.sections {
        let dash = if sec.active { "" } else { r#" stroke-dasharray="6,4""# };
        let color = if sec.active { "#000000" } else { "#888888" };
        let _ = writeln!(
            s,
            r#"<line class="section" x1="{}" y1="{axis}" x2="{}" y2="{axis}" stroke="{color}" stroke-width="3"{dash}/>"#,
            x(sec.start),
            x(sec.end)
        );
    }
    for b in 1..=g.rho + 1 {
        let closed = g.is_closed(b) || g.sections.iter().any(|s| s.start == b || s.end == b);
        let tick = if closed { 8 } else { 4 };
        let _ = writeln!(
            s,
            r##"<line class="boundary" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#000000" stroke-width="1.5"/>"##,
            x(b),
            axis - tick,
            axis + tick
        );
        let _ = writeln!(s, r##"<text x="{}" y="{}" text-anchor="middle" fill="#555555">{b}</text>"##, x(b), axis + 40);
    }
    for i in 1..=g.rho {
        let _ = writeln!(s, r#"<text class="item" x="{}" y="{}" text-anchor="middle">h{i}</text>"#, x(i) + w / 2, axis + 20);
    }

    for (k, b) in g.bases.iter().enumerate() {
        let (x1, x2) = (x(b.alpha), x(b.beta));
        let h = lv[k] as i64 * opts.level_height;
        let color = pair_color.get(&b.id).copied().unwrap_or("#000000");
        let _ = writeln!(
            s,
            r#"<path class="base" d="M {x1} {axis} C {x1} {y}, {x2} {y}, {x2} {axis}" fill="none" stroke="{color}" stroke-width="2" marker-end="url(#arrow)"/>"#,
            y = axis - h * 4 / 3
        );
        let label = escape(&b.id);
        let _ = writeln!(
            s,
            r#"<text class="label" x="{}" y="{}" text-anchor="middle" fill="{color}">{label}</text>"#,
            (x1 + x2) / 2,
            axis - h - 4
        );
    }

    if opts.show_connections {
        for (n, c) in g.connections.iter().enumerate() {
            let _ = writeln!(
                s,
                r##"<text class="connection" x="{margin}" y="{}" fill="#333333">({}, {}, {})</text>"##,
                axis + 64 + n as i64 * 16,
                c.p,
                escape(&c.lambda),
                c.q
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
