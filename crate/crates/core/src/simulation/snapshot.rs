//! Binary snapshots and grayscale displacement maps.
//!
//! Snapshot layout, all integers and floats little-endian:
//!
//! | field        | type                | notes                                  |
//! |--------------|---------------------|----------------------------------------|
//! | magic        | 8 bytes             | `IBSHSNAP`                             |
//! | version      | u32                 | currently 1                            |
//! | N, n1, n2    | 3 × u64             | fluid and shell lattice dimensions     |
//! | step         | u64                 |                                        |
//! | t, dt        | 2 × f64             |                                        |
//! | param length | u64                 | byte length of the next field          |
//! | params       | UTF-8               | the run configuration as TOML          |
//! | X            | n1·n2·3 × f64       | node-major (`k1·n2 + k2`), then xyz    |
//! | X − X0       | n1·n2·3 × f64       | same order                             |
//! | u            | 3·N³ × f64          | component-major, `x + N(y + N z)`      |
//! | p            | N³ × f64            | `x + N(y + N z)`                       |

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::stepper::Simulation;

const MAGIC: &[u8; 8] = b"IBSHSNAP";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub params: String,
    pub x: Vec<[f64; 3]>,
    pub displacement: Vec<[f64; 3]>,
    pub u: [Vec<f64>; 3],
    pub p: Vec<f64>,
}

impl Snapshot {
    pub fn capture<T: Real>(sim: &Simulation<T>) -> Self {
        let v3 = |v: &[[T; 3]]| v.iter().map(|x| x.map(|c| c.as_f64())).collect();
        let s = |v: &[T]| v.iter().map(|c| c.as_f64()).collect();
        Snapshot {
            n: sim.cfg.n,
            n1: sim.grid.lattice.n1,
            n2: sim.grid.lattice.n2,
            step: sim.shell.step,
            t: sim.shell.t.as_f64(),
            dt: sim.cfg.dt,
            params: sim.cfg.to_toml_string(),
            x: v3(&sim.positions()),
            displacement: v3(&sim.shell.displacement),
            u: [s(&sim.fluid.u[0]), s(&sim.fluid.u[1]), s(&sim.fluid.u[2])],
            p: s(&sim.fluid.p),
        }
    }

    fn check_shape(&self) -> Result<()> {
        let nodes = self.n1 * self.n2;
        let pts = self.n * self.n * self.n;
        if self.x.len() != nodes
            || self.displacement.len() != nodes
            || self.p.len() != pts
            || self.u.iter().any(|c| c.len() != pts)
        {
            return Err(Error::ShapeMismatch("snapshot arrays do not match header".into()));
        }
        Ok(())
    }
}

pub fn write_snapshot(snap: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    snap.check_shape()?;
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io);
    put(MAGIC)?;
    put(&VERSION.to_le_bytes())?;
    for v in [snap.n, snap.n1, snap.n2, snap.step] {
        put(&(v as u64).to_le_bytes())?;
    }
    put(&snap.t.to_le_bytes())?;
    put(&snap.dt.to_le_bytes())?;
    put(&(snap.params.len() as u64).to_le_bytes())?;
    put(snap.params.as_bytes())?;
    for v in snap.x.iter().chain(&snap.displacement).flatten().chain(snap.u.iter().flatten()).chain(&snap.p) {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(io)
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: not a snapshot file", path.display())));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("{}: unsupported snapshot version {version}", path.display())));
    }
    let mut b8 = [0u8; 8];
    let mut u64_ = |r: &mut BufReader<std::fs::File>| -> Result<u64> {
        r.read_exact(&mut b8).map_err(io)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = u64_(&mut r)? as usize;
    let n1 = u64_(&mut r)? as usize;
    let n2 = u64_(&mut r)? as usize;
    let step = u64_(&mut r)? as usize;
    let t = f64::from_bits(u64_(&mut r)?);
    let dt = f64::from_bits(u64_(&mut r)?);
    let plen = u64_(&mut r)? as usize;
    let mut pbytes = vec![0u8; plen];
    r.read_exact(&mut pbytes).map_err(io)?;
    let params = String::from_utf8(pbytes).map_err(|_| Error::Format("parameter block is not UTF-8".into()))?;
    let mut floats = |count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf).map_err(io)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let nodes = n1 * n2;
    let pts = n * n * n;
    let to3 = |v: Vec<f64>| v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>();
    let x = to3(floats(3 * nodes)?);
    let displacement = to3(floats(3 * nodes)?);
    let u = [floats(pts)?, floats(pts)?, floats(pts)?];
    let p = floats(pts)?;
    Ok(Snapshot { n, n1, n2, step, t, dt, params, x, displacement, u, p })
}

/// 8-bit gray levels for a signed field: black at the largest downward value,
/// white at the largest upward value, mid-gray 128 at zero.
pub fn graymap(values: &[f64]) -> Vec<u8> {
    let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .map(|&v| {
            if m == 0.0 {
                128
            } else if v < 0.0 {
                (128.0 + 128.0 * v / m).round().clamp(0.0, 255.0) as u8
            } else {
                (128.0 + 127.0 * v / m).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect()
}

/// Writes `ω` on the `n1 × n2` lattice as a binary graymap, one image row per
/// `k2` column so the strip's length runs horizontally.
pub fn write_displacement_map(omega: &[f64], n1: usize, n2: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if omega.len() != n1 * n2 {
        return Err(Error::ShapeMismatch(format!("{} values for a {n1}x{n2} map", omega.len())));
    }
    let gray = graymap(omega);
    let mut bytes = format!("P5\n{n1} {n2}\n255\n").into_bytes();
    for k2 in 0..n2 {
        for k1 in 0..n1 {
            bytes.push(gray[k1 * n2 + k2]);
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_levels() {
        assert_eq!(graymap(&[0.0, 0.0]), vec![128, 128]);
        assert_eq!(graymap(&[-2.0, 2.0, 0.0]), vec![0, 255, 128]);
        assert_eq!(graymap(&[-1.0, 0.5]), vec![0, 192]);
    }

    #[test]
    fn graymap_file_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.pgm");
        write_displacement_map(&[0.0; 6], 3, 2, &p).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert!(b.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&b[b.len() - 6..], &[128; 6]);
        assert!(write_displacement_map(&[0.0; 5], 3, 2, &p).is_err());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"NOTASNAPSHOT....").unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Format(_))));
        assert!(matches!(read_snapshot(dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
