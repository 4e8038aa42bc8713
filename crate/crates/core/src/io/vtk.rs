//! Legacy-ASCII VTK unstructured grids over the full `(n+1)²` node set, with
//! point data only, plus a reader that understands exactly what the writer emits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::UnitCellMesh;

/// One point-data array on the periodic DOFs; it is expanded to every node.
#[derive(Debug, Clone, Copy)]
pub enum PointData<'a> {
    Scalars(&'a str, &'a [f64]),
    Integers(&'a str, &'a [i32]),
    /// Interleaved `(x, y)` pairs.
    Vectors(&'a str, &'a [f64]),
}

const VTK_TRIANGLE: u8 = 5;

pub fn format_vtk(title: &str, mesh: &UnitCellMesh, data: &[PointData<'_>]) -> String {
    let nodes = mesh.nodes();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", nodes.len());
    for p in nodes {
        let _ = writeln!(s, "{:.9e} {:.9e} 0", p[0], p[1]);
    }
    let elems = mesh.elements();
    let _ = writeln!(s, "CELLS {} {}", elems.len(), 4 * elems.len());
    for e in elems {
        let _ = writeln!(s, "3 {} {} {}", e.nodes[0], e.nodes[1], e.nodes[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", elems.len());
    for _ in elems {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(s, "POINT_DATA {}", nodes.len());
    let dof: Vec<usize> = (0..nodes.len()).map(|k| mesh.dof_of_node(k)).collect();
    for item in data {
        match *item {
            PointData::Scalars(name, v) => {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for &d in &dof {
                    let _ = writeln!(s, "{:.9e}", v[d]);
                }
            }
            PointData::Integers(name, v) => {
                let _ = writeln!(s, "SCALARS {name} int 1\nLOOKUP_TABLE default");
                for &d in &dof {
                    let _ = writeln!(s, "{}", v[d]);
                }
            }
            PointData::Vectors(name, v) => {
                let _ = writeln!(s, "VECTORS {name} double");
                for &d in &dof {
                    let _ = writeln!(s, "{:.9e} {:.9e} 0", v[2 * d], v[2 * d + 1]);
                }
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, title: &str, mesh: &UnitCellMesh, data: &[PointData<'_>]) -> Result<()> {
    super::write_atomic(path, format_vtk(title, mesh, data).as_bytes())
}

/// Contents of a file produced by [`write_vtk`].
#[derive(Debug, Clone, Default)]
pub struct VtkFile {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub scalars: BTreeMap<String, Vec<f64>>,
    pub vectors: BTreeMap<String, Vec<[f64; 2]>>,
}

pub fn parse_vtk(text: &str, path: &Path) -> Result<VtkFile> {
    let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
    let mut tokens = text.lines().skip(2).flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or_else(|| bad(format!("unexpected end reading {what}")));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad(format!("bad number \"{t}\"")));
    let int = |t: &str| t.parse::<usize>().map_err(|_| bad(format!("bad integer \"{t}\"")));

    let mut out = VtkFile::default();
    let mut npoints = 0;
    while let Ok(tok) = next("keyword") {
        match tok {
            "ASCII" | "DATASET" | "UNSTRUCTURED_GRID" => {}
            "POINTS" => {
                npoints = int(next("point count")?)?;
                next("point type")?;
                for _ in 0..npoints {
                    let x = num(next("x")?)?;
                    let y = num(next("y")?)?;
                    next("z")?;
                    out.points.push([x, y]);
                }
            }
            "CELLS" => {
                let count = int(next("cell count")?)?;
                next("cell size")?;
                for _ in 0..count {
                    if int(next("cell arity")?)? != 3 {
                        return Err(bad("only triangles are supported".into()));
                    }
                    let a = int(next("node")?)?;
                    let b = int(next("node")?)?;
                    let c = int(next("node")?)?;
                    out.triangles.push([a, b, c]);
                }
            }
            "CELL_TYPES" => {
                let count = int(next("cell type count")?)?;
                for _ in 0..count {
                    next("cell type")?;
                }
            }
            "POINT_DATA" => {
                int(next("point data count")?)?;
            }
            "SCALARS" => {
                let name = next("name")?.to_string();
                next("type")?;
                next("components")?;
                next("LOOKUP_TABLE")?;
                next("table name")?;
                let mut v = Vec::with_capacity(npoints);
                for _ in 0..npoints {
                    v.push(num(next("value")?)?);
                }
                out.scalars.insert(name, v);
            }
            "VECTORS" => {
                let name = next("name")?.to_string();
                next("type")?;
                let mut v = Vec::with_capacity(npoints);
                for _ in 0..npoints {
                    let x = num(next("x")?)?;
                    let y = num(next("y")?)?;
                    next("z")?;
                    v.push([x, y]);
                }
                out.vectors.insert(name, v);
            }
            other => return Err(bad(format!("unexpected token \"{other}\""))),
        }
    }
    Ok(out)
}

pub fn read_vtk(path: &Path) -> Result<VtkFile> {
    parse_vtk(&super::read_to_string(path)?, path)
}
