//! Binary field dump.
//!
//! Layout, little endian:
//! `b"MLFIELD\0"`, version `u32`, `nx u32`, `ny u32`, `lx f64`, `ly f64`,
//! `ncomp u32`, `nrec u32`, then per record a time `f64` followed by
//! `ncomp` fields of `nx * ny` row-major `(re f32, im f32)` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use modlab_spectral::{Field, Grid, Rep, C64};

use crate::{CorrectorSet, PacketError};

const MAGIC: &[u8; 8] = b"MLFIELD\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct DumpFile {
    pub grid: Grid,
    pub ncomp: usize,
    /// `(t, fields)` per record; fields are physical.
    pub records: Vec<(f64, Vec<Field>)>,
}

pub fn write_dump(path: &Path, grid: &Grid, records: &[(f64, Vec<Field>)]) -> Result<(), PacketError> {
    let ncomp = records.first().map(|r| r.1.len()).unwrap_or(0);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    for v in [VERSION, grid.nx as u32, grid.ny as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&grid.lx.to_le_bytes())?;
    w.write_all(&grid.ly.to_le_bytes())?;
    w.write_all(&(ncomp as u32).to_le_bytes())?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (t, fields) in records {
        if fields.len() != ncomp {
            return Err(PacketError::BadParam("ragged dump records".into()));
        }
        w.write_all(&t.to_le_bytes())?;
        for f in fields {
            if !f.grid().same_lattice(grid) || f.rep() != Rep::Physical {
                return Err(PacketError::GridMismatch("dump field must be physical on the dump grid".into()));
            }
            for c in f.data() {
                w.write_all(&(c.re as f32).to_le_bytes())?;
                w.write_all(&(c.im as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N], PacketError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_dump(path: &Path) -> Result<DumpFile, PacketError> {
    let mut r = BufReader::new(File::open(path)?);
    if &take::<8>(&mut r)? != MAGIC {
        return Err(PacketError::BadParam("not a field dump".into()));
    }
    let u = |r: &mut BufReader<File>| -> Result<u32, PacketError> { Ok(u32::from_le_bytes(take::<4>(r)?)) };
    let version = u(&mut r)?;
    if version != VERSION {
        return Err(PacketError::BadParam(format!("dump version {version}")));
    }
    let (nx, ny) = (u(&mut r)? as usize, u(&mut r)? as usize);
    let lx = f64::from_le_bytes(take::<8>(&mut r)?);
    let ly = f64::from_le_bytes(take::<8>(&mut r)?);
    let grid = Grid::new(nx, ny, lx, ly)?;
    let (ncomp, nrec) = (u(&mut r)? as usize, u(&mut r)? as usize);
    let mut records = Vec::with_capacity(nrec);
    for _ in 0..nrec {
        let t = f64::from_le_bytes(take::<8>(&mut r)?);
        let mut fields = Vec::with_capacity(ncomp);
        for _ in 0..ncomp {
            let mut data = Vec::with_capacity(nx * ny);
            for _ in 0..nx * ny {
                let re = f32::from_le_bytes(take::<4>(&mut r)?);
                let im = f32::from_le_bytes(take::<4>(&mut r)?);
                data.push(C64::new(re as f64, im as f64));
            }
            fields.push(Field::new(grid, data, Rep::Physical)?);
        }
        records.push((t, fields));
    }
    Ok(DumpFile { grid, ncomp, records })
}

impl CorrectorSet {
    /// Writes every checkpoint of `A^1 .. A^d` on the slow grid.
    pub fn dump(&self, path: &Path) -> Result<(), PacketError> {
        let recs: Vec<(f64, Vec<Field>)> = self.states.iter().map(|s| (s.t, s.a.clone())).collect();
        write_dump(path, &self.params().slow, &recs)
    }
}
