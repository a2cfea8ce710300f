//! VTK legacy ASCII export of meshes and nodal fields: UNSTRUCTURED_GRID
//! with one point per global DOF, VTK_LINE/VTK_TRIANGLE cells, and one
//! SCALARS block per field. Doubles are printed with 17 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::meshing::{DiscreteField, Element, Mesh};

const VTK_LINE: u8 = 3;
const VTK_TRIANGLE: u8 = 5;

pub fn write_vtk<W: Write>(
    w: &mut W,
    mesh: &Mesh,
    fields: &[(&str, &DiscreteField)],
    title: &str,
) -> io::Result<()> {
    for (name, field) in fields {
        assert_eq!(
            field.len(),
            mesh.n_dofs,
            "field {} sized {} against {} dofs",
            name,
            field.len(),
            mesh.n_dofs
        );
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;

    let points = mesh.dof_positions();
    writeln!(w, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }

    let mut n_cells = 0usize;
    let mut payload = 0usize;
    for comp in &mesh.components {
        for el in &comp.elements {
            n_cells += 1;
            payload += match el {
                Element::Line(_) => 3,
                Element::Tri(_) => 4,
            };
        }
    }
    writeln!(w, "CELLS {} {}", n_cells, payload)?;
    for (c, comp) in mesh.components.iter().enumerate() {
        for el in &comp.elements {
            match el {
                Element::Line([a, b]) => {
                    writeln!(w, "2 {} {}", mesh.dof[c][*a], mesh.dof[c][*b])?;
                }
                Element::Tri([a, b, c_]) => {
                    writeln!(
                        w,
                        "3 {} {} {}",
                        mesh.dof[c][*a], mesh.dof[c][*b], mesh.dof[c][*c_]
                    )?;
                }
            }
        }
    }
    writeln!(w, "CELL_TYPES {}", n_cells)?;
    for comp in &mesh.components {
        for el in &comp.elements {
            let code = match el {
                Element::Line(_) => VTK_LINE,
                Element::Tri(_) => VTK_TRIANGLE,
            };
            writeln!(w, "{}", code)?;
        }
    }

    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", points.len())?;
        for (name, field) in fields {
            writeln!(w, "SCALARS {} double 1", name)?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in &field.0 {
                writeln!(w, "{:.16e}", v)?;
            }
        }
    }
    Ok(())
}

/// Write to a file path.
pub fn emit_vtk(
    mesh: &Mesh,
    fields: &[(&str, &DiscreteField)],
    path: &Path,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vtk(&mut w, mesh, fields, "lowdim-heat output")
}
