//! Output formats. Everything written here is deterministic for a fixed
//! seed and platform: floats go through Rust's shortest-roundtrip `{}`
//! formatting (so a dump re-parses to bitwise-equal values), JSON maps are
//! key-sorted, and the SVG plots are plain polyline emissions with no
//! timestamps or randomness.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use solwave::analysis::SegregationRecord;
use solwave::discretize::{describe, Grid};
use solwave::nehari::State;

/// Bumped whenever any on-disk schema changes shape.
pub const FORMAT_VERSION: u32 = 1;

/// Shortest representation that round-trips to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_solution_csv(path: &Path, grid: &Grid, state: &State) -> io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
    let _ = writeln!(out, "# grid = {}", describe(grid));
    let mut header = String::from("x");
    for i in 0..state.d() {
        let _ = write!(header, ",u{}", i + 1);
    }
    let _ = writeln!(out, "{header}");
    for k in 0..grid.n_interior() {
        let _ = write!(out, "{}", fmt_f64(grid.node_coord(k)));
        for i in 0..state.d() {
            let _ = write!(out, ",{}", fmt_f64(state.component(i).values()[k]));
        }
        out.push('\n');
    }
    fs::write(path, out)
}

/// Reloads a solution dump: node coordinates plus one value column per
/// component. Comment lines and the header are skipped.
pub fn read_solution_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut coords = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
            continue;
        }
        let mut fields = line.split(',');
        let x = fields
            .next()
            .ok_or_else(|| format!("line {}: empty row", lineno + 1))?
            .parse::<f64>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        coords.push(x);
        let mut row = Vec::new();
        for f in fields {
            row.push(f.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1))?);
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); row.len()];
        }
        if row.len() != columns.len() {
            return Err(format!("line {}: ragged row", lineno + 1));
        }
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    if coords.is_empty() || columns.is_empty() {
        return Err(format!("{}: no data rows", path.display()));
    }
    Ok((coords, columns))
}

/// One sweep row per line, sorted by |b| ascending before writing.
pub fn write_sweep_csv(
    path: &Path,
    pairs: &[(usize, usize)],
    rows: &[SegregationRecord],
) -> io::Result<()> {
    let mut sorted: Vec<&SegregationRecord> = rows.iter().collect();
    sorted.sort_by(|a, b| a.b.abs().partial_cmp(&b.b.abs()).unwrap());
    let mut out = String::new();
    let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
    let mut header = String::from("b,energy");
    for (i, j) in pairs {
        let _ = write!(header, ",overlap_{}_{}", i + 1, j + 1);
    }
    header.push_str(",competitive_mass,limit_energy,max_limit_residual,min_component_l4");
    let _ = writeln!(out, "{header}");
    for r in sorted {
        let _ = write!(out, "{},{}", fmt_f64(r.b), fmt_f64(r.energy));
        for v in &r.overlaps {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let max_res = r.limit_nehari_residuals.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            fmt_f64(r.competitive_mass),
            fmt_f64(r.limit_energy),
            fmt_f64(max_res),
            fmt_f64(r.min_component_l4)
        );
    }
    fs::write(path, out)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: f64 = 52.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<!-- format_version = {FORMAT_VERSION} -->"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="monospace" font-size="13">{title}</text>"#,
        MARGIN
    );
    s
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN);
        let py = H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN);
        (px, py)
    }
}

fn svg_axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        MARGIN,
        MARGIN,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="monospace" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, label_x) in [(f.x0, true), (f.x1, true)] {
        let (px, _) = f.map(v, f.y0);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{}" font-family="monospace" font-size="11" text-anchor="middle">{}</text>"#,
            H - MARGIN + 16.0,
            trim_tick(v, label_x)
        );
    }
    for v in [f.y0, f.y1] {
        let (_, py) = f.map(f.x0, v);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{py:.1}" font-family="monospace" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            trim_tick(v, true)
        );
    }
}

fn trim_tick(v: f64, _x: bool) -> String {
    if v == 0.0 {
        "0".to_owned()
    } else if v.abs() >= 0.01 && v.abs() < 1e4 {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        format!("{v:.2e}")
    }
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let mut attr = String::new();
    for (x, y) in pts {
        let (px, py) = f.map(*x, *y);
        let _ = write!(attr, "{px:.2},{py:.2} ");
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        attr.trim_end()
    );
}

/// Line plot of every component against the spatial coordinate.
pub fn svg_components(grid: &Grid, state: &State, title: &str) -> String {
    let n = grid.n_interior();
    let mut lo = 0.0f64;
    let mut hi = f64::MIN;
    for i in 0..state.d() {
        for v in state.component(i).values() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let f = Frame { x0: 0.0, x1: grid.size(), y0: lo - pad, y1: hi + pad };
    let mut s = svg_open(title);
    svg_axes(&mut s, &f, "x", "u");
    for i in 0..state.d() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = Vec::with_capacity(n + 2);
        // The Dirichlet boundary values close the curve.
        pts.push((0.0, 0.0));
        for k in 0..n {
            pts.push((grid.node_coord(k), state.component(i).values()[k]));
        }
        pts.push((grid.size(), 0.0));
        polyline(&mut s, &f, &pts, color);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">u{}</text>"#,
            W - MARGIN + 8.0,
            MARGIN + 16.0 * (i + 1) as f64,
            i + 1
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log scatter-with-line of positive samples, e.g. overlap against
/// competition strength.
pub fn svg_loglog(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    assert!(!points.is_empty());
    let logged: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (libm::log10(x.abs().max(1e-300)), libm::log10(y.abs().max(1e-300))))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &logged {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let padx = 0.06 * (x1 - x0);
    let pady = 0.06 * (y1 - y0);
    let f = Frame { x0: x0 - padx, x1: x1 + padx, y0: y0 - pady, y1: y1 + pady };
    let mut s = svg_open(title);
    svg_axes(&mut s, &f, x_label, y_label);
    polyline(&mut s, &f, &logged, PALETTE[0]);
    for &(x, y) in &logged {
        let (px, py) = f.map(x, y);
        let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{}"/>"#, PALETTE[0]);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use solwave::discretize::Field;

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.csv");
        let g = Grid::interval(3.0, 17).unwrap();
        // Gnarly values: accumulated decimals, tiny magnitudes, long
        // mantissas.
        let u = Field::from_fn(&g, |x| 0.1 + 0.2 * libm::sin(137.035999 * x));
        let v = Field::from_fn(&g, |x| 1e-300 * (1.0 + x) + libm::exp(-x) / 3.0);
        let state = State::new(vec![u, v]);
        write_solution_csv(&path, &g, &state).unwrap();
        let (coords, cols) = read_solution_csv(&path).unwrap();
        assert_eq!(coords.len(), 17);
        assert_eq!(cols.len(), 2);
        for k in 0..17 {
            assert_eq!(coords[k].to_bits(), g.node_coord(k).to_bits());
            assert_eq!(cols[0][k].to_bits(), state.component(0).values()[k].to_bits());
            assert_eq!(cols[1][k].to_bits(), state.component(1).values()[k].to_bits());
        }
    }

    #[test]
    fn svg_is_self_contained_polylines() {
        let g = Grid::interval(2.0, 9).unwrap();
        let state = State::new(vec![Field::from_fn(&g, |x| x * (2.0 - x))]);
        let svg = svg_components(&g, &state, "components");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains(&format!("format_version = {FORMAT_VERSION}")));
        assert!(svg.trim_end().ends_with("</svg>"));
        let again = svg_components(&g, &state, "components");
        assert_eq!(svg, again);
    }
}
