//! Plain-text exports: node CSVs, OBJ meshes, and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::gaussmap::Ambient;
use crate::grid::{ComplexField, RealField};
use crate::immersion::ImmersionPatch;
use crate::verify::CurvatureReport;

/// Slots of the four-slot layout shown as `(x1, x2, x3)` for an R^3 patch.
pub const R3_SLOTS: [usize; 3] = [0, 1, 3];
/// Slots written to the OBJ of an R^4 patch; slot 3 goes to the sidecar.
pub const R4_OBJ_SLOTS: [usize; 3] = [0, 1, 2];

/// Writes through a sibling temp file and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn complex_field_csv(field: &ComplexField) -> String {
    let g = field.grid();
    let mut out = String::from("i,j,u,v,re,im\n");
    for (i, j) in g.active_nodes() {
        let z = field.at(i, j);
        let _ = writeln!(out, "{i},{j},{},{},{},{}", g.u(i), g.v(j), z.re, z.im);
    }
    out
}

pub fn real_field_csv(field: &RealField) -> String {
    let g = field.grid();
    let mut out = String::from("i,j,u,v,value\n");
    for (i, j) in g.active_nodes() {
        let _ = writeln!(out, "{i},{j},{},{},{}", g.u(i), g.v(j), field.at(i, j));
    }
    out
}

fn coordinate_slots(ambient: Ambient) -> &'static [usize] {
    match ambient {
        Ambient::R3 => &R3_SLOTS,
        Ambient::R4 => &[0, 1, 2, 3],
    }
}

/// One row per active node: `i,j,u,v,x1,..` with three or four coordinates.
pub fn patch_csv(patch: &ImmersionPatch) -> String {
    let g = patch.grid();
    let slots = coordinate_slots(patch.ambient);
    let mut out = String::from("i,j,u,v");
    for k in 1..=slots.len() {
        let _ = write!(out, ",x{k}");
    }
    out.push('\n');
    for (i, j) in g.active_nodes() {
        let x = patch.x.at(i, j);
        let _ = write!(out, "{i},{j},{},{}", g.u(i), g.v(j));
        for &s in slots {
            let _ = write!(out, ",{}", x[s]);
        }
        out.push('\n');
    }
    out
}

/// Triangle mesh over the cells whose four corners are active, two
/// triangles per cell. Vertices are the active nodes in row-major order.
pub fn patch_obj(patch: &ImmersionPatch, slots: [usize; 3]) -> String {
    let g = patch.grid();
    let mut vertex = vec![0usize; g.len()];
    let mut out = String::new();
    for (n, (i, j)) in g.active_nodes().enumerate() {
        let x = patch.x.at(i, j);
        let _ = writeln!(out, "v {} {} {}", x[slots[0]], x[slots[1]], x[slots[2]]);
        vertex[g.index(i, j)] = n + 1;
    }
    for j in 0..g.n_v().saturating_sub(1) {
        for i in 0..g.n_u().saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if !corners.iter().all(|&(a, b)| g.is_active(a, b)) {
                continue;
            }
            let [a, b, c, d] = corners.map(|(p, q)| vertex[g.index(p, q)]);
            let _ = writeln!(out, "f {a} {b} {c}");
            let _ = writeln!(out, "f {a} {c} {d}");
        }
    }
    out
}

/// The fourth coordinate of an R^4 patch, one row per OBJ vertex.
pub fn x4_sidecar_csv(patch: &ImmersionPatch) -> String {
    let g = patch.grid();
    let mut out = String::from("vertex,x4\n");
    for (n, (i, j)) in g.active_nodes().enumerate() {
        let _ = writeln!(out, "{},{}", n + 1, patch.x.at(i, j)[3]);
    }
    out
}

/// Per-node `H`, `(-e4)^perp` and the pointwise residual.
pub fn curvature_csv(report: &CurvatureReport) -> String {
    let g = report.translator_residual.grid();
    let mut out = String::from("i,j,u,v,h1,h2,h3,h4,p1,p2,p3,p4,residual\n");
    for (i, j) in g.active_nodes() {
        let (h, p) = (report.h.at(i, j), report.e4_perp.at(i, j));
        let _ = write!(out, "{i},{j},{},{}", g.u(i), g.v(j));
        for x in h.iter().chain(p.iter()) {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{}", report.translator_residual.at(i, j));
    }
    out
}

/// Writes the mesh, the coordinate CSV and, for R^4, the sidecar into
/// `dir` as `patch.obj`, `patch.csv`, `patch_x4.csv`.
pub fn write_patch(dir: &Path, patch: &ImmersionPatch) -> io::Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let slots = match patch.ambient {
        Ambient::R3 => R3_SLOTS,
        Ambient::R4 => R4_OBJ_SLOTS,
    };
    let mut put = |name: &str, text: String| -> io::Result<()> {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
        Ok(())
    };
    put("patch.obj", patch_obj(patch, slots))?;
    put("patch.csv", patch_csv(patch))?;
    if patch.ambient == Ambient::R4 {
        put("patch_x4.csv", x4_sidecar_csv(patch))?;
    }
    Ok(written)
}
