//! CSV emission and parsing. All reals are printed with 17 significant
//! digits so that repeated runs produce byte-identical files.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::pme::SimState;

/// 17 significant digits, scientific; enough to round-trip any f64.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `snap_t<time>.csv`, with the time printed in its shortest form.
pub fn snapshot_filename(t: f64) -> String {
    format!("snap_t{t}.csv")
}

pub const SNAPSHOT_HEADER: &str = "x,u,c,P,gradP";

/// Write one snapshot as `x,u,c,P,gradP` rows; the pressure gradient is
/// reported at cell centers as the mean of the two adjacent face gradients.
pub fn write_snapshot(w: &mut impl Write, state: &SimState, grid: &Grid1D) -> io::Result<()> {
    let grad_p = grid
        .face_gradient(&state.pressure)
        .expect("pressure lives on the grid");
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for (i, x) in grid.centers().enumerate() {
        let gp = 0.5 * (grad_p[i] + grad_p[i + 1]);
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_real(x),
            fmt_real(state.density[i]),
            fmt_real(state.chemo[i]),
            fmt_real(state.pressure[i]),
            fmt_real(gp)
        )?;
    }
    Ok(())
}

pub fn write_snapshot_file(dir: &Path, state: &SimState, grid: &Grid1D) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(snapshot_filename(state.time));
    let mut file = io::BufWriter::new(std::fs::File::create(&path)?);
    write_snapshot(&mut file, state, grid)?;
    Ok(path)
}

pub const DIAGNOSTICS_HEADER: &str = "t,mass,u_min,u_max,comp_residual_l1,\
excess_sat_l2_sq_increment,grad_P_energy_increment,defect_increment,\
sat_product_P,sat_product_gradP";

pub fn diagnostics_row(rec: &DiagnosticsRecord) -> String {
    [
        rec.t,
        rec.mass,
        rec.u_min,
        rec.u_max,
        rec.comp_residual_l1,
        rec.excess_sat_l2_sq_increment,
        rec.grad_p_energy_increment,
        rec.defect_increment,
        rec.sat_product_p,
        rec.sat_product_grad_p,
    ]
    .map(fmt_real)
    .join(",")
}

/// Parse the density column of a snapshot CSV produced by
/// [`write_snapshot`].
pub fn read_snapshot_density(path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == SNAPSHOT_HEADER => {}
        other => {
            return Err(Error::Usage(format!(
                "{}: expected header `{SNAPSHOT_HEADER}`, got {other:?}",
                path.display()
            )))
        }
    }
    let mut u = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Usage(format!(
                "{}: line {}: expected 5 columns",
                path.display(),
                lineno + 2
            )));
        }
        let v: f64 = cols[1].trim().parse().map_err(|_| {
            Error::Usage(format!(
                "{}: line {}: bad density value `{}`",
                path.display(),
                lineno + 2,
                cols[1]
            ))
        })?;
        u.push(v);
    }
    Ok(Field::new(u))
}
