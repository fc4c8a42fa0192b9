//! SVG and Graphviz renderings of object graphs and correspondences.

use std::fmt::Write as _;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::graph::{NodeId, ObjectGraph};

/// Projects positions onto their two dominant principal axes.
///
/// Axis signs are fixed so the largest-magnitude component of each axis is
/// positive, which keeps the picture stable across runs.
pub fn pca_project(points: &[[f64; 3]]) -> Vec<[f64; 2]> {
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p)) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(*p) - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let axes: Vec<Vector3<f64>> = order[..2]
        .iter()
        .map(|&k| {
            let v = eig.eigenvectors.column(k).into_owned();
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                -v
            } else {
                v
            }
        })
        .collect();
    points
        .iter()
        .map(|p| {
            let d = Vector3::from(*p) - mean;
            [d.dot(&axes[0]), d.dot(&axes[1])]
        })
        .collect()
}

struct Panel {
    origin: [f64; 2],
    size: f64,
}

fn fit(coords: &[[f64; 2]], panel: &Panel) -> Vec<[f64; 2]> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let margin = 30.0;
    let scale = (panel.size - 2.0 * margin) / span;
    coords
        .iter()
        .map(|c| {
            [
                panel.origin[0] + margin + (c[0] - lo[0]) * scale,
                // SVG y grows downwards
                panel.origin[1] + panel.size - margin - (c[1] - lo[1]) * scale,
            ]
        })
        .collect()
}

fn draw_graph(out: &mut String, g: &ObjectGraph, xy: &[[f64; 2]], color: &str) {
    for e in g.edges() {
        let (a, b) = (g.index_of(e.i).unwrap(), g.index_of(e.j).unwrap());
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-opacity="0.5"/>"#,
            xy[a][0], xy[a][1], xy[b][0], xy[b][1]
        );
    }
    for (n, p) in g.nodes().iter().zip(xy) {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{color}"/>"#, p[0], p[1]);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="monospace">{}</text>"#,
            p[0] + 6.0,
            p[1] - 6.0,
            n.id
        );
    }
}

/// Side-by-side SVG of two graphs with correspondence lines between matched
/// nodes. Each graph is projected onto its own principal plane.
pub fn match_svg(g1: &ObjectGraph, g2: &ObjectGraph, pairs: &[(NodeId, NodeId)]) -> String {
    let size = 400.0;
    let positions = |g: &ObjectGraph| g.nodes().iter().map(|n| n.position).collect::<Vec<_>>();
    let xy1 = fit(&pca_project(&positions(g1)), &Panel { origin: [0.0, 0.0], size });
    let xy2 = fit(&pca_project(&positions(g2)), &Panel { origin: [size, 0.0], size });
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        2.0 * size,
        size,
        2.0 * size,
        size
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    draw_graph(&mut s, g1, &xy1, "#1f77b4");
    draw_graph(&mut s, g2, &xy2, "#d62728");
    for &(i, a) in pairs {
        if let (Some(p), Some(q)) = (g1.index_of(i), g2.index_of(a)) {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#2ca02c" stroke-dasharray="4 3"/>"##,
                xy1[p][0], xy1[p][1], xy2[q][0], xy2[q][1]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn dot_body(out: &mut String, g: &ObjectGraph, prefix: &str, indent: &str) {
    for n in g.nodes() {
        let _ = writeln!(
            out,
            "{indent}{prefix}{} [label=\"{}\", pos=\"{:.3},{:.3}!\"];",
            n.id, n.id, n.position[0], n.position[1]
        );
    }
    for e in g.edges() {
        let _ = writeln!(out, "{indent}{prefix}{} -- {prefix}{} [label=\"{:.2}\"];", e.i, e.j, e.length);
    }
}

/// Undirected Graphviz document for one graph, edges labelled with lengths.
pub fn graph_dot(g: &ObjectGraph) -> String {
    let mut s = format!("graph \"{}\" {{\n", g.frame_id().replace('"', "'"));
    dot_body(&mut s, g, "n", "  ");
    s.push_str("}\n");
    s
}

/// Both graphs as clusters plus dashed correspondence edges.
pub fn match_dot(g1: &ObjectGraph, g2: &ObjectGraph, pairs: &[(NodeId, NodeId)]) -> String {
    let mut s = String::from("graph match {\n");
    for (k, (g, prefix)) in [(g1, "a"), (g2, "b")].into_iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{k} {{\n    label=\"{}\";", g.frame_id().replace('"', "'"));
        dot_body(&mut s, g, prefix, "    ");
        s.push_str("  }\n");
    }
    for &(i, a) in pairs {
        let _ = writeln!(s, "  a{i} -- b{a} [style=dashed, color=green];");
    }
    s.push_str("}\n");
    s
}
