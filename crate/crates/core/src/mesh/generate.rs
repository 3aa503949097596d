//! Structured generators for the test geometries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryTag, Mesh2D};
use crate::{Error, Result};

/// Splits the quad `a b c d` (counter-clockwise) along one diagonal.
fn split_quad(a: usize, b: usize, c: usize, d: usize, along_ac: bool) -> [[usize; 3]; 2] {
    if along_ac {
        [[a, b, c], [a, c, d]]
    } else {
        [[a, b, d], [b, c, d]]
    }
}

/// Structured triangulation of `[0, length] x [0, height]`.
///
/// Each of the `nx * ny` cells is cut by one diagonal whose direction
/// alternates in a checkerboard pattern. Left edge Inflow, right edge
/// Outflow, top and bottom Wall.
pub fn gen_channel(length: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh2D> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("channel resolution must be at least 1x1".into()));
    }
    if !(length > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument("channel extents must be positive".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { length } else { length * i as f64 / nx as f64 };
            let y = if j == ny { height } else { height * j as f64 / ny as f64 };
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let quad = split_quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 0);
            triangles.extend_from_slice(&quad);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        boundary.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            tag: BoundaryTag::Inflow,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(nx, j), id(nx, j + 1)],
            tag: BoundaryTag::Outflow,
        });
    }
    for i in 0..nx {
        boundary.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: BoundaryTag::Wall,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(i + 1, ny), id(i, ny)],
            tag: BoundaryTag::Wall,
        });
    }
    Mesh2D::new(nodes, triangles, boundary)
}

/// Rectangle `rect = [x0, y0, x1, y1]` minus a polygonized disk.
///
/// The disk is replaced by the regular `resolution`-gon inscribed in it;
/// its edges are tagged Free. The rest of the domain is an O-grid of
/// `ceil(resolution / 6)` geometrically graded layers whose rays run from
/// the polygon vertices to matching points on the rectangle, the four
/// corners included. Left side Inflow, right side Outflow, top and bottom
/// Wall.
///
/// Also returns the polygonization area defect `pi r^2 - (n/2) r^2 sin(2 pi / n)`,
/// which bounds `|volume - (rect area - pi r^2)|`.
pub fn gen_rect_with_hole(rect: [f64; 4], center: [f64; 2], radius: f64, resolution: usize) -> Result<(Mesh2D, f64)> {
    let [x0, y0, x1, y1] = rect;
    let [cx, cy] = center;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidArgument("rectangle must have positive extent".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("disk radius must be positive".into()));
    }
    if !(cx - radius > x0 && cx + radius < x1 && cy - radius > y0 && cy + radius < y1) {
        return Err(Error::InvalidArgument(
            "disk must lie strictly inside the rectangle".into(),
        ));
    }
    if resolution < 8 {
        return Err(Error::InvalidArgument("hole resolution must be at least 8".into()));
    }
    let n = resolution;
    let layers = n.div_ceil(6).max(2);

    // corner angles about the disk center, counter-clockwise from +x
    let angle = |x: f64, y: f64| {
        let a = (y - cy).atan2(x - cx);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    let corners = [[x1, y1], [x0, y1], [x0, y0], [x1, y0]];
    let corner_angle: Vec<f64> = corners.iter().map(|c| angle(c[0], c[1])).collect();
    let mut corner_index: Vec<usize> = corner_angle
        .iter()
        .map(|a| (a * n as f64 / (2.0 * PI)).round() as usize)
        .collect();
    corner_index[0] = corner_index[0].max(1);
    for k in 1..4 {
        corner_index[k] = corner_index[k].max(corner_index[k - 1] + 1);
    }
    if corner_index[3] >= n {
        return Err(Error::InvalidArgument(
            "hole resolution too coarse for the rectangle".into(),
        ));
    }

    // side s runs from corner s-1 to corner s (side 0 = right, wraps through index 0)
    let side_of = |j: usize| -> usize {
        if j < corner_index[0] || j >= corner_index[3] {
            0
        } else if j < corner_index[1] {
            1
        } else if j < corner_index[2] {
            2
        } else {
            3
        }
    };
    let outer_point = |j: usize| -> [f64; 2] {
        if let Some(k) = corner_index.iter().position(|&c| c == j) {
            return corners[k];
        }
        let s = side_of(j);
        let (j_start, j_end, a_start, a_end) = if s == 0 {
            (
                corner_index[3] as f64 - n as f64,
                corner_index[0] as f64,
                corner_angle[3] - 2.0 * PI,
                corner_angle[0],
            )
        } else {
            (
                corner_index[s - 1] as f64,
                corner_index[s] as f64,
                corner_angle[s - 1],
                corner_angle[s],
            )
        };
        let jj = if s == 0 && j >= corner_index[3] {
            j as f64 - n as f64
        } else {
            j as f64
        };
        let a = a_start + (a_end - a_start) * (jj - j_start) / (j_end - j_start);
        let (sin, cos) = a.sin_cos();
        match s {
            0 => [x1, cy + (x1 - cx) * sin / cos],
            1 => [cx + (y1 - cy) * cos / sin, y1],
            2 => [x0, cy + (x0 - cx) * sin / cos],
            _ => [cx + (y0 - cy) * cos / sin, y0],
        }
    };

    let inner: Vec<[f64; 2]> = (0..n)
        .map(|j| {
            let (sin, cos) = (2.0 * PI * j as f64 / n as f64).sin_cos();
            [cx + radius * cos, cy + radius * sin]
        })
        .collect();
    let outer: Vec<[f64; 2]> = (0..n).map(outer_point).collect();

    // geometric grading: first layer about as thick as the polygon edge
    let mean_ray = inner
        .iter()
        .zip(&outer)
        .map(|(p, q)| (q[0] - p[0]).hypot(q[1] - p[1]))
        .sum::<f64>()
        / n as f64;
    let target = (2.0 * PI * radius / n as f64) / mean_ray;
    let ratio = grading_ratio(layers, target);
    let fractions: Vec<f64> = (0..=layers)
        .map(|k| {
            if k == layers {
                1.0
            } else if ratio == 1.0 {
                k as f64 / layers as f64
            } else {
                (ratio.powi(k as i32) - 1.0) / (ratio.powi(layers as i32) - 1.0)
            }
        })
        .collect();

    let id = |k: usize, j: usize| k * n + (j % n);
    let mut nodes = Vec::with_capacity(n * (layers + 1));
    for &s in &fractions {
        for j in 0..n {
            let (p, q) = (inner[j], outer[j]);
            nodes.push(if s == 1.0 {
                q
            } else {
                [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
            });
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * layers);
    for k in 0..layers {
        for j in 0..n {
            let (a, b, c, d) = (id(k, j), id(k + 1, j), id(k + 1, j + 1), id(k, j + 1));
            let dist = |u: usize, v: usize| (nodes[u][0] - nodes[v][0]).hypot(nodes[u][1] - nodes[v][1]);
            triangles.extend_from_slice(&split_quad(a, b, c, d, dist(a, c) <= dist(b, d)));
        }
    }
    let mut boundary = Vec::with_capacity(2 * n);
    for j in 0..n {
        boundary.push(BoundaryEdge {
            nodes: [id(0, j), id(0, j + 1)],
            tag: BoundaryTag::Free,
        });
    }
    for j in 0..n {
        let tag = match side_of(j) {
            0 => BoundaryTag::Outflow,
            2 => BoundaryTag::Inflow,
            _ => BoundaryTag::Wall,
        };
        boundary.push(BoundaryEdge {
            nodes: [id(layers, j), id(layers, j + 1)],
            tag,
        });
    }
    let mesh = Mesh2D::new(nodes, triangles, boundary)?;
    let defect = PI * radius * radius - 0.5 * n as f64 * radius * radius * (2.0 * PI / n as f64).sin();
    Ok((mesh, defect))
}

/// Growth ratio `q >= 1` with `(q - 1) / (q^m - 1) = first`, or 1 when a
/// uniform spacing is already thin enough.
fn grading_ratio(layers: usize, first: f64) -> f64 {
    if first >= 1.0 / layers as f64 {
        return 1.0;
    }
    let f = |q: f64| (q - 1.0) / (q.powi(layers as i32) - 1.0) - first;
    let (mut lo, mut hi) = (1.0 + 1e-12, 4.0);
    if f(hi) > 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Parameters of the bent-channel (cannula) geometry.
///
/// The centerline runs right from `(0, inlet_y0 + width / 2)` for
/// `leg_in`, turns clockwise through a quarter circle of radius
/// `bend_radius`, then runs down for `leg_out`. The walls within `stub`
/// of either end are fixed; the remaining walls are Free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BentChannel {
    pub inlet_y0: f64,
    pub width: f64,
    pub leg_in: f64,
    pub bend_radius: f64,
    pub leg_out: f64,
    pub stub: f64,
    pub n_along: usize,
    pub n_across: usize,
}

impl Default for BentChannel {
    /// Inlet `y in [2, 2.35]` (the cannula inlet), 448 triangles on 285 nodes.
    fn default() -> Self {
        BentChannel {
            inlet_y0: 2.0,
            width: 0.35,
            leg_in: 1.0,
            bend_radius: 0.25,
            leg_out: 1.65,
            stub: 0.1,
            n_along: 56,
            n_across: 4,
        }
    }
}

impl BentChannel {
    pub fn centerline_length(&self) -> f64 {
        self.leg_in + 0.5 * PI * self.bend_radius + self.leg_out
    }

    /// Centerline point and unit tangent at arc length `s`.
    fn centerline(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let yc = self.inlet_y0 + 0.5 * self.width;
        let arc_end = self.leg_in + 0.5 * PI * self.bend_radius;
        if s <= self.leg_in {
            ([s, yc], [1.0, 0.0])
        } else if s <= arc_end {
            let phi = (s - self.leg_in) / self.bend_radius;
            let (sin, cos) = phi.sin_cos();
            (
                [
                    self.leg_in + self.bend_radius * sin,
                    yc - self.bend_radius + self.bend_radius * cos,
                ],
                [cos, -sin],
            )
        } else {
            (
                [self.leg_in + self.bend_radius, yc - self.bend_radius - (s - arc_end)],
                [0.0, -1.0],
            )
        }
    }
}

/// Bent channel mapped from a structured `n_along x n_across` grid.
pub fn gen_bent_channel(p: &BentChannel) -> Result<Mesh2D> {
    if p.n_along == 0 || p.n_across == 0 {
        return Err(Error::InvalidArgument(
            "bent channel resolution must be at least 1x1".into(),
        ));
    }
    if !(p.width > 0.0 && p.bend_radius > 0.5 * p.width && p.leg_in > 0.0 && p.leg_out > 0.0) {
        return Err(Error::InvalidArgument(
            "bent channel needs positive legs and a bend radius above half the width".into(),
        ));
    }
    let length = p.centerline_length();
    if !(p.stub >= 0.0 && 2.0 * p.stub < length) {
        return Err(Error::InvalidArgument("fixed stubs overlap".into()));
    }
    let (na, nc) = (p.n_along, p.n_across);
    let id = |i: usize, j: usize| i * (nc + 1) + j;
    let mut nodes = Vec::with_capacity((na + 1) * (nc + 1));
    for i in 0..=na {
        let s = length * i as f64 / na as f64;
        let (c, t) = p.centerline(s);
        let left = [-t[1], t[0]];
        for j in 0..=nc {
            let off = p.width * (j as f64 / nc as f64 - 0.5);
            nodes.push([c[0] + off * left[0], c[1] + off * left[1]]);
        }
    }
    // pin inlet and outlet coordinates exactly
    for j in 0..=nc {
        nodes[id(0, j)][0] = 0.0;
        nodes[id(0, j)][1] = p.inlet_y0 + p.width * j as f64 / nc as f64;
    }
    let mut triangles = Vec::with_capacity(2 * na * nc);
    for i in 0..na {
        for j in 0..nc {
            let quad = split_quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) % 2 == 0);
            triangles.extend_from_slice(&quad);
        }
    }
    let wall_tag = |i: usize| {
        let mid = length * (i as f64 + 0.5) / na as f64;
        if mid < p.stub || mid > length - p.stub {
            BoundaryTag::Wall
        } else {
            BoundaryTag::Free
        }
    };
    let mut boundary = Vec::new();
    for j in 0..nc {
        boundary.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            tag: BoundaryTag::Inflow,
        });
        boundary.push(BoundaryEdge {
            nodes: [id(na, j), id(na, j + 1)],
            tag: BoundaryTag::Outflow,
        });
    }
    for i in 0..na {
        boundary.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: wall_tag(i),
        });
        boundary.push(BoundaryEdge {
            nodes: [id(i + 1, nc), id(i, nc)],
            tag: wall_tag(i),
        });
    }
    Mesh2D::new(nodes, triangles, boundary)
}
