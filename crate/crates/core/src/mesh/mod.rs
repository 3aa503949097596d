//! Triangulated fluid domains with tagged boundaries.
//!
//! A [`Mesh2D`] is immutable once built. Every constructor runs the full
//! validation, so holding a `Mesh2D` means holding a conforming,
//! counter-clockwise triangulation whose boundary edges are tagged exactly
//! once.

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generate::{gen_bent_channel, gen_channel, gen_rect_with_hole, BentChannel};
pub use io::{load_mesh, save_mesh};

/// Boundary part a boundary edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    /// Prescribed velocity.
    Inflow,
    /// Prescribed traction.
    Outflow,
    /// Fixed no-slip wall.
    Wall,
    /// No-slip wall that is subject to optimization.
    Free,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Inflow,
        BoundaryTag::Outflow,
        BoundaryTag::Wall,
        BoundaryTag::Free,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::Wall => "wall",
            BoundaryTag::Free => "free",
        }
    }

    /// Tags whose nodes stay fixed while the shape moves.
    pub fn is_fixed(self) -> bool {
        !matches!(self, BoundaryTag::Free)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Boundary edge oriented along its owning triangle (fluid on the left).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedEdge {
    pub from: usize,
    pub to: usize,
    pub triangle: usize,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh2D {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    oriented: Vec<OrientedEdge>,
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, boundary: Vec<BoundaryEdge>) -> Result<Self> {
        let oriented = validate(&nodes, &triangles, &boundary)?;
        Ok(Mesh2D {
            nodes,
            triangles,
            boundary,
            oriented,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Boundary edges in input order, each oriented counter-clockwise with
    /// respect to its triangle.
    pub fn oriented_boundary(&self) -> &[OrientedEdge] {
        &self.oriented
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_nodes(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_nodes(t);
        signed_area(a, b, c)
    }

    /// Sum of the triangles' signed areas.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary.iter().any(|e| e.tag == tag)
    }

    /// `true` for every node lying on at least one edge with the given tag.
    pub fn nodes_on(&self, tag: BoundaryTag) -> Vec<bool> {
        let mut on = vec![false; self.nodes.len()];
        for e in self.boundary.iter().filter(|e| e.tag == tag) {
            on[e.nodes[0]] = true;
            on[e.nodes[1]] = true;
        }
        on
    }

    /// `true` for nodes on an Inflow, Outflow or Wall edge.
    pub fn fixed_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.nodes.len()];
        for e in self.boundary.iter().filter(|e| e.tag.is_fixed()) {
            on[e.nodes[0]] = true;
            on[e.nodes[1]] = true;
        }
        on
    }

    /// Sorted node indices on edges with the given tag.
    pub fn tag_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        self.nodes_on(tag)
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
            .collect()
    }

    /// Unit outward normals at the nodes of one boundary part, sorted by node.
    ///
    /// Each node takes the normalized sum of the unit normals of its adjacent
    /// edges with that tag. Both edges meet a polygon vertex under the same
    /// incident angle, so angle weighting reduces to the bisector.
    pub fn boundary_normals(&self, tag: BoundaryTag) -> Result<Vec<(usize, [f64; 2])>> {
        if !self.has_tag(tag) {
            return Err(Error::MissingTag(tag));
        }
        let mut acc: HashMap<usize, [f64; 2]> = HashMap::new();
        for e in self.oriented.iter().filter(|e| e.tag == tag) {
            let n = self.edge_normal(e);
            for node in [e.from, e.to] {
                let s = acc.entry(node).or_insert([0.0, 0.0]);
                s[0] += n[0];
                s[1] += n[1];
            }
        }
        let mut out: Vec<(usize, [f64; 2])> = acc
            .into_iter()
            .map(|(i, n)| {
                let len = n[0].hypot(n[1]);
                (i, [n[0] / len, n[1] / len])
            })
            .collect();
        out.sort_by_key(|&(i, _)| i);
        Ok(out)
    }

    /// Unit outward normal of an oriented boundary edge.
    pub fn edge_normal(&self, e: &OrientedEdge) -> [f64; 2] {
        let a = self.nodes[e.from];
        let b = self.nodes[e.to];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    pub fn edge_length(&self, e: &OrientedEdge) -> f64 {
        let a = self.nodes[e.from];
        let b = self.nodes[e.to];
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Moves every node by `step * d`.
    ///
    /// Fails with [`Error::InvertedElement`] if a triangle area drops to
    /// `1e-12` times its current area or below.
    pub fn deform(&self, d: &DisplacementField, step: f64) -> Result<Mesh2D> {
        if d.len() != self.nodes.len() {
            return Err(Error::Mismatch(format!(
                "displacement has {} vectors, mesh has {} nodes",
                d.len(),
                self.nodes.len()
            )));
        }
        d.check_fixed(self)?;
        let nodes: Vec<[f64; 2]> = self
            .nodes
            .iter()
            .zip(d.vectors())
            .map(|(p, v)| [p[0] + step * v[0], p[1] + step * v[1]])
            .collect();
        for (t, tri) in self.triangles.iter().enumerate() {
            let floor = 1e-12 * self.triangle_area(t);
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > floor) {
                return Err(Error::InvertedElement { triangle: t });
            }
        }
        Ok(Mesh2D {
            nodes,
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            oriented: self.oriented.clone(),
        })
    }

    /// Index-aligned copy with replaced coordinates; runs full validation.
    pub fn with_nodes(&self, nodes: Vec<[f64; 2]>) -> Result<Mesh2D> {
        Mesh2D::new(nodes, self.triangles.clone(), self.boundary.clone())
    }
}

fn validate(nodes: &[[f64; 2]], triangles: &[[usize; 3]], boundary: &[BoundaryEdge]) -> Result<Vec<OrientedEdge>> {
    let bad = |msg: String| Err(Error::InvalidMesh(msg));
    if triangles.is_empty() {
        return bad("mesh has no triangles".into());
    }
    for (i, p) in nodes.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return bad(format!("node {i} has a non-finite coordinate"));
        }
    }
    let mut used = vec![false; nodes.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            if v >= nodes.len() {
                return bad(format!("triangle {t} references missing node {v}"));
            }
            used[v] = true;
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return bad(format!("triangle {t} repeats a node"));
        }
        let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
        if !(area > 0.0) {
            return bad(format!("triangle {t} has non-positive area"));
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return bad(format!("node {i} is not used by any triangle"));
    }

    // directed half-edges: (from, to) -> triangle
    let mut half: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if half.insert((a, b), t).is_some() {
                return bad(format!(
                    "edge ({a}, {b}) is traversed twice in the same direction (triangle {t})"
                ));
            }
        }
    }

    let mut tagged: HashMap<(usize, usize), usize> = HashMap::with_capacity(boundary.len());
    let mut oriented = Vec::with_capacity(boundary.len());
    for (k, e) in boundary.iter().enumerate() {
        let [a, b] = e.nodes;
        if a >= nodes.len() || b >= nodes.len() || a == b {
            return bad(format!("boundary edge {k} has invalid nodes ({a}, {b})"));
        }
        if let Some(prev) = tagged.insert(edge_key(a, b), k) {
            return bad(format!("boundary edge {k} duplicates boundary edge {prev}"));
        }
        let fwd = half.get(&(a, b)).copied();
        let bwd = half.get(&(b, a)).copied();
        let (from, to, triangle) = match (fwd, bwd) {
            (Some(t), None) => (a, b, t),
            (None, Some(t)) => (b, a, t),
            (Some(_), Some(_)) => return bad(format!("boundary edge {k} ({a}, {b}) is an interior edge")),
            (None, None) => return bad(format!("boundary edge {k} ({a}, {b}) is not a triangle edge")),
        };
        oriented.push(OrientedEdge {
            from,
            to,
            triangle,
            tag: e.tag,
        });
    }

    // every half-edge without a twin must be tagged
    let mut untagged: Vec<(usize, usize)> = half
        .keys()
        .filter(|&&(a, b)| !half.contains_key(&(b, a)) && !tagged.contains_key(&edge_key(a, b)))
        .copied()
        .collect();
    if !untagged.is_empty() {
        untagged.sort();
        let (a, b) = untagged[0];
        return bad(format!("topological boundary edge ({a}, {b}) has no tag"));
    }
    Ok(oriented)
}

/// Per-node displacement vectors that vanish on the fixed boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    vectors: Vec<[f64; 2]>,
}

impl DisplacementField {
    /// Wraps vectors after checking they vanish on Inflow/Outflow/Wall nodes.
    pub fn new(mesh: &Mesh2D, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != mesh.node_count() {
            return Err(Error::Mismatch(format!(
                "displacement has {} vectors, mesh has {} nodes",
                vectors.len(),
                mesh.node_count()
            )));
        }
        let field = DisplacementField { vectors };
        field.check_fixed(mesh)?;
        Ok(field)
    }

    /// Like [`DisplacementField::new`] but zeroes fixed nodes instead of
    /// rejecting them.
    pub fn new_clamped(mesh: &Mesh2D, mut vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != mesh.node_count() {
            return Err(Error::Mismatch(format!(
                "displacement has {} vectors, mesh has {} nodes",
                vectors.len(),
                mesh.node_count()
            )));
        }
        for (v, fixed) in vectors.iter_mut().zip(mesh.fixed_nodes()) {
            if fixed {
                *v = [0.0, 0.0];
            }
        }
        Ok(DisplacementField { vectors })
    }

    pub fn zeros(mesh: &Mesh2D) -> Self {
        DisplacementField {
            vectors: vec![[0.0, 0.0]; mesh.node_count()],
        }
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        DisplacementField {
            vectors: self.vectors.iter().map(|v| [s * v[0], s * v[1]]).collect(),
        }
    }

    fn check_fixed(&self, mesh: &Mesh2D) -> Result<()> {
        for (i, (v, fixed)) in self.vectors.iter().zip(mesh.fixed_nodes()).enumerate() {
            if fixed && (v[0] != 0.0 || v[1] != 0.0) {
                return Err(Error::InvalidDisplacement(format!(
                    "node {i} lies on a fixed boundary but has displacement ({}, {})",
                    v[0], v[1]
                )));
            }
        }
        Ok(())
    }
}
