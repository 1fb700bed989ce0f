//! SVG rendering of labeled grids: one run-length rectangle per label run.

use std::fmt::Write;

use crate::geometry::GridSpec;

const PALETTE: [&str; 24] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
    "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5", "#393b79", "#637939", "#8c6d31", "#843c39",
];

pub fn cell_color(label: usize) -> &'static str {
    PALETTE[label % PALETTE.len()]
}

/// Body of one panel in grid units (`M × M`), drawn at horizontal offset `x_off`.
fn panel(out: &mut String, grid: &GridSpec, labels: &[u32], targets: &[[f64; 2]], x_off: usize) {
    let m = grid.resolution();
    let (dx, dy) = grid.cell_size();
    let b = grid.bounds();
    let _ = writeln!(out, r#"<g transform="translate({x_off},0)" shape-rendering="crispEdges">"#);
    for row in 0..m {
        let line = &labels[row * m..(row + 1) * m];
        // Rows run bottom-up in the domain, top-down in SVG.
        let y = m - 1 - row;
        let mut start = 0;
        while start < m {
            let label = line[start];
            let mut end = start + 1;
            while end < m && line[end] == label {
                end += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{start}" y="{y}" width="{}" height="1" fill="{}"/>"#,
                end - start,
                cell_color(label as usize)
            );
            start = end;
        }
    }
    let _ = writeln!(out, "</g>");
    let r = (m as f64 / 128.0).max(1.0);
    let _ = writeln!(out, r#"<g transform="translate({x_off},0)" fill="black">"#);
    for t in targets {
        let cx = (t[0] - b.x0) / dx;
        let cy = m as f64 - (t[1] - b.y0) / dy;
        let _ = writeln!(out, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}"/>"#);
    }
    let _ = writeln!(out, "</g>");
}

fn document(width: usize, height: usize, body: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    // Rendered 600 px tall whatever the grid resolution.
    let scale = 600.0 / height as f64;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {width} {height}" width="{:.0}" height="600">"#,
        width as f64 * scale
    );
    out.push_str(body);
    out.push_str("</svg>\n");
    out
}

/// A tessellation with black target markers.
pub fn tessellation_svg(grid: &GridSpec, labels: &[u32], targets: &[[f64; 2]]) -> String {
    let m = grid.resolution();
    assert_eq!(labels.len(), m * m, "label count must match the grid");
    let mut body = String::new();
    panel(&mut body, grid, labels, targets, 0);
    document(m, m, &body)
}

/// Two tessellations of the same grid side by side (hedonic sides 1 and 2).
pub fn paired_svg(grid: &GridSpec, left: &[u32], right: &[u32], targets: &[[f64; 2]]) -> String {
    let m = grid.resolution();
    assert!(left.len() == m * m && right.len() == m * m, "label count must match the grid");
    let gap = (m / 16).max(1);
    let mut body = String::new();
    panel(&mut body, grid, left, targets, 0);
    panel(&mut body, grid, right, targets, m + gap);
    document(2 * m + gap, m, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_merge_within_rows() {
        let grid = GridSpec::unit_square(8).unwrap();
        let labels: Vec<u32> = (0..64).map(|p| u32::from(p % 8 >= 4)).collect();
        let svg = tessellation_svg(&grid, &labels, &[[0.5, 0.5]]);
        assert_eq!(svg.matches("<rect").count(), 16);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains(cell_color(0)) && svg.contains(cell_color(1)));
        let pair = paired_svg(&grid, &labels, &vec![0; 64], &[]);
        assert_eq!(pair.matches("<rect").count(), 24);
    }
}
