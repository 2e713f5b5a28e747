//! `BWF1` field dumps: an ASCII header line
//! `BWF1 NX NY NZ d lam1x lam1y lam2x lam2y` followed by little-endian
//! `f64` samples, component-major, then Z, Y, X. `NZ` counts node layers.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::CliError;
use crate::fields::SampledVectorField;
use crate::geometry::{Grid, Lattice, MappedGrid};

pub fn write_bwf1(path: &Path, field: &SampledVectorField) -> Result<(), CliError> {
    let g = field.grid();
    let (l1, l2) = (g.lattice.lambda1, g.lattice.lambda2);
    let mut out = format!(
        "BWF1 {} {} {} {} {} {} {} {}\n",
        g.nx,
        g.ny,
        g.layers(),
        g.depth,
        l1[0],
        l1[1],
        l2[0],
        l2[1]
    )
    .into_bytes();
    out.reserve(3 * 8 * g.len());
    for c in &field.comps {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_bwf1(path: &Path) -> Result<(Grid, SampledVectorField), CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let file = std::fs::File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut r = BufReader::new(file);
    let mut header = String::new();
    r.read_line(&mut header).map_err(|e| bad(e.to_string()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 9 || parts[0] != "BWF1" {
        return Err(bad("not a BWF1 header".into()));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s}: {e}")));
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
    let (nx, ny, layers) = (int(parts[1])?, int(parts[2])?, int(parts[3])?);
    if layers < 2 {
        return Err(bad("need at least two layers".into()));
    }
    let d = num(parts[4])?;
    let lat = Lattice::new([num(parts[5])?, num(parts[6])?], [num(parts[7])?, num(parts[8])?])
        .map_err(|e| bad(e.to_string()))?;
    let grid = Grid::new(lat, d, nx, ny, layers - 1).map_err(|e| bad(e.to_string()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| bad(e.to_string()))?;
    if bytes.len() != 3 * 8 * grid.len() {
        return Err(bad(format!("expected {} data bytes, found {}", 3 * 8 * grid.len(), bytes.len())));
    }
    let mut vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let comps = [0, 1, 2].map(|_| vals.by_ref().take(grid.len()).collect::<Vec<f64>>());
    let field = SampledVectorField::new(grid, comps)?;
    Ok((grid, field))
}

/// One row per node: indices, physical position, components.
pub fn write_csv(path: &Path, mg: &MappedGrid, field: &SampledVectorField) -> Result<(), CliError> {
    let g = mg.grid();
    let mut s = String::from("i,j,k,x,y,z,v1,v2,v3\n");
    for n in 0..g.len() {
        let (i, j, k) = g.ijk(n);
        let p = mg.position(n);
        let v = field.at(n);
        writeln!(s, "{i},{j},{k},{},{},{},{},{},{}", p.x, p.y, p.z, v.x, v.y, v.z).unwrap();
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(s.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}
