//! Field output: per-vertex CSV and legacy ASCII VTK.

use super::assembly::TaylorHoodSystem;
use crate::error::{Error, Result};
use std::io::Write;

/// Element fields at one time level, with optional vertex values of
/// porosity and permeability that replace the element averages in the
/// per-vertex output.
pub struct ElementFields<'a> {
    pub theta: &'a [f64],
    pub kappa: &'a [f64],
    pub velocity: &'a [[f64; 2]],
    pub vertex_theta: Option<&'a [f64]>,
    pub vertex_kappa: Option<&'a [f64]>,
}

pub const FIELD_COLUMNS: [&str; 9] = ["x", "y", "ux", "uy", "p", "theta", "kappa", "vx", "vy"];

/// One row per vertex: coordinates, nodal displacement and pressure, and
/// element quantities averaged over the triangles sharing the vertex.
pub fn vertex_rows(
    sys: &TaylorHoodSystem,
    u: &[f64],
    p: &[f64],
    fields: &ElementFields,
) -> Result<Vec<[f64; 9]>> {
    let mesh = &sys.mesh;
    let ne = mesh.triangle_count();
    if u.len() != 2 * sys.n_u() || p.len() != sys.n_p() {
        return Err(Error::param("field vectors do not match the mesh"));
    }
    if fields.theta.len() != ne || fields.kappa.len() != ne || fields.velocity.len() != ne {
        return Err(Error::param("element fields do not match the mesh"));
    }
    let nv = mesh.vertex_count();
    if fields.vertex_theta.is_some_and(|t| t.len() != nv)
        || fields.vertex_kappa.is_some_and(|k| k.len() != nv)
    {
        return Err(Error::param("vertex fields do not match the mesh"));
    }
    let mut acc = vec![[0.0; 5]; mesh.vertex_count()];
    for e in 0..ne {
        for v in mesh.triangle_vertices(e) {
            let a = &mut acc[v];
            a[0] += fields.theta[e];
            a[1] += fields.kappa[e];
            a[2] += fields.velocity[e][0];
            a[3] += fields.velocity[e][1];
            a[4] += 1.0;
        }
    }
    Ok(mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, xy)| {
            let n = mesh.vertex_node(v);
            let a = acc[v];
            let theta = fields.vertex_theta.map_or(a[0] / a[4], |t| t[v]);
            let kappa = fields.vertex_kappa.map_or(a[1] / a[4], |k| k[v]);
            [
                xy[0],
                xy[1],
                u[2 * n],
                u[2 * n + 1],
                p[v],
                theta,
                kappa,
                a[2] / a[4],
                a[3] / a[4],
            ]
        })
        .collect())
}

pub fn write_fields_csv<W: Write>(mut out: W, header: &[String], rows: &[[f64; 9]]) -> Result<()> {
    crate::percolation::write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIELD_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Legacy ASCII unstructured grid of the P1 triangles. Displacement,
/// pressure and averaged velocity go in point data; porosity,
/// permeability and velocity per triangle in cell data.
pub fn write_vtk<W: Write>(
    mut out: W,
    title: &str,
    sys: &TaylorHoodSystem,
    u: &[f64],
    p: &[f64],
    fields: &ElementFields,
) -> Result<()> {
    let rows = vertex_rows(sys, u, p, fields)?;
    let mesh = &sys.mesh;
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", rows.len())?;
    for r in &rows {
        writeln!(out, "{} {} 0", r[0], r[1])?;
    }
    let ne = mesh.triangle_count();
    writeln!(out, "CELLS {} {}", ne, 4 * ne)?;
    for e in 0..ne {
        let [a, b, c] = mesh.triangle_vertices(e);
        writeln!(out, "3 {a} {b} {c}")?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(out, "5")?;
    }
    writeln!(out, "POINT_DATA {}", rows.len())?;
    writeln!(out, "VECTORS displacement double")?;
    for r in &rows {
        writeln!(out, "{} {} 0", r[2], r[3])?;
    }
    writeln!(out, "SCALARS pressure double 1\nLOOKUP_TABLE default")?;
    for r in &rows {
        writeln!(out, "{}", r[4])?;
    }
    writeln!(out, "VECTORS velocity_avg double")?;
    for r in &rows {
        writeln!(out, "{} {} 0", r[7], r[8])?;
    }
    writeln!(out, "CELL_DATA {ne}")?;
    writeln!(out, "SCALARS porosity double 1\nLOOKUP_TABLE default")?;
    for t in fields.theta {
        writeln!(out, "{t}")?;
    }
    writeln!(out, "SCALARS permeability double 1\nLOOKUP_TABLE default")?;
    for k in fields.kappa {
        writeln!(out, "{k}")?;
    }
    writeln!(out, "VECTORS velocity double")?;
    for v in fields.velocity {
        writeln!(out, "{} {} 0", v[0], v[1])?;
    }
    Ok(())
}
