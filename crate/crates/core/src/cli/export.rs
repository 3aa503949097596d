//! Result files: legacy VTK, history CSV and atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::flow::MixedField;
use crate::mesh::Mesh2D;
use crate::shape_opt::IterationRecord;
use crate::{Error, Result};

pub const HISTORY_HEADER: &str = "iter,J,volume,multiplier,step,grad_norm,newton_iters,accepted";

/// Writes `bytes` to a temporary file next to `path` and renames it into place,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn num(out: &mut String, v: f64) {
    // 17 significant digits round-trip every double
    let _ = write!(out, "{v:.16e}");
}

/// Legacy ASCII VTK of a triangle mesh with nodal velocity and pressure.
pub fn vtk_string(mesh: &Mesh2D, velocity: &[[f64; 2]], pressure: &[f64], title: &str) -> Result<String> {
    let n = mesh.node_count();
    if velocity.len() != n || pressure.len() != n {
        return Err(Error::Mismatch(format!(
            "{} velocities and {} pressures for {n} nodes",
            velocity.len(),
            pressure.len()
        )));
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(title.lines().next().unwrap_or(""));
    s.push_str("\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        num(&mut s, p[0]);
        s.push(' ');
        num(&mut s, p[1]);
        s.push_str(" 0\n");
    }
    let t = mesh.triangle_count();
    let _ = writeln!(s, "\nCELLS {t} {}", 4 * t);
    for tri in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]);
    }
    let _ = writeln!(s, "\nCELL_TYPES {t}");
    for _ in 0..t {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "\nPOINT_DATA {n}");
    s.push_str("VECTORS velocity double\n");
    for v in velocity {
        num(&mut s, v[0]);
        s.push(' ');
        num(&mut s, v[1]);
        s.push_str(" 0\n");
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for &p in pressure {
        num(&mut s, p);
        s.push('\n');
    }
    Ok(s)
}

/// Nodal velocity and pressure of a mixed field (bubbles are zero at the nodes).
pub fn nodal_fields(field: &MixedField) -> (Vec<[f64; 2]>, Vec<f64>) {
    let n = field.node_count();
    (
        (0..n).map(|i| field.velocity(i)).collect(),
        (0..n).map(|i| field.pressure(i)).collect(),
    )
}

pub fn export_vtk(path: &Path, mesh: &Mesh2D, field: &MixedField, title: &str) -> Result<()> {
    let (u, p) = nodal_fields(field);
    write_atomic(path, vtk_string(mesh, &u, &p, title)?.as_bytes())
}

pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from(HISTORY_HEADER);
    s.push('\n');
    for r in history {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{},{}",
            r.iter, r.energy, r.volume, r.multiplier, r.step, r.grad_norm, r.newton_iters, r.accepted
        );
    }
    s
}

pub fn export_history_csv(path: &Path, history: &[IterationRecord]) -> Result<()> {
    write_atomic(path, history_csv(history).as_bytes())
}
