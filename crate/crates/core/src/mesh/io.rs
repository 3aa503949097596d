//! JSON mesh interchange:
//! `{"nodes":[[x,y],...],"triangles":[[i,j,k],...],"boundary":[[i,j,"tag"],...]}`.

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryTag, Mesh2D};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<(usize, usize, BoundaryTag)>,
}

/// Parses and validates a JSON mesh.
pub fn load_mesh(bytes: &[u8]) -> Result<Mesh2D> {
    let file: MeshFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let boundary = file
        .boundary
        .into_iter()
        .map(|(a, b, tag)| BoundaryEdge { nodes: [a, b], tag })
        .collect();
    Mesh2D::new(file.nodes, file.triangles, boundary)
}

/// Serializes a mesh; coordinates use the shortest round-tripping decimal form.
pub fn save_mesh(mesh: &Mesh2D) -> Vec<u8> {
    let file = MeshFile {
        nodes: mesh.nodes().to_vec(),
        triangles: mesh.triangles().to_vec(),
        boundary: mesh
            .boundary()
            .iter()
            .map(|e| (e.nodes[0], e.nodes[1], e.tag))
            .collect(),
    };
    serde_json::to_vec(&file).expect("mesh serialization cannot fail")
}
