//! Sampling grids and field snapshot export.
//!
//! Binary layout (little-endian): magic `QFSNAP01`, `u64` dims `nx ny nz`
//! (zeros for scattered points), `u64` point count, `f64` time, then twelve
//! `f64` columns `x y z Ax Ay Az Ex Ey Ez Bx By Bz`, each of point-count length.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Vec3;

const MAGIC: &[u8; 8] = b"QFSNAP01";

/// Uniform tensor grid, `n[i]` points from `lower[i]` to `upper[i]` inclusive.
/// Points are ordered with `z` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub n: [usize; 3],
}

impl GridSpec {
    /// `n^3` points spanning the box `[-L/2, L/2]^3`.
    pub fn cube(length: f64, n: usize) -> Self {
        Self {
            lower: [-0.5 * length; 3],
            upper: [0.5 * length; 3],
            n: [n; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if self.n[i] == 0 || !(self.lower[i].is_finite() && self.upper[i].is_finite()) {
                return Err(invalid("grid needs finite bounds and at least one point per axis"));
            }
            if self.n[i] > 1 && self.upper[i] <= self.lower[i] {
                return Err(invalid("grid upper bound must exceed lower bound"));
            }
        }
        Ok(())
    }

    pub fn axis(&self, i: usize) -> Vec<f64> {
        let n = self.n[i];
        if n == 1 {
            return vec![0.5 * (self.lower[i] + self.upper[i])];
        }
        let h = (self.upper[i] - self.lower[i]) / (n - 1) as f64;
        (0..n).map(|j| self.lower[i] + h * j as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec3> {
        let [xs, ys, zs] = [self.axis(0), self.axis(1), self.axis(2)];
        let mut out = Vec::with_capacity(self.len());
        for x in &xs {
            for y in &ys {
                for z in &zs {
                    out.push(Vec3::new(*x, *y, *z));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub t: f64,
    /// Tensor-grid dimensions when the points came from a `GridSpec`.
    pub dims: Option<[usize; 3]>,
    pub points: Vec<[f64; 3]>,
    pub a: Vec<[f64; 3]>,
    pub e: Vec<[f64; 3]>,
    pub b: Vec<[f64; 3]>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

impl FieldSnapshot {
    pub(crate) fn from_parts(t: f64, dims: Option<[usize; 3]>, points: &[Vec3], f: &[[Vec3; 3]]) -> Self {
        Self {
            t,
            dims,
            points: points.iter().map(arr).collect(),
            a: f.iter().map(|v| arr(&v[0])).collect(),
            e: f.iter().map(|v| arr(&v[1])).collect(),
            b: f.iter().map(|v| arr(&v[2])).collect(),
        }
    }

    /// Snapshot from `(E, B)` pairs; `A` has no gauge-free reference value and is stored as zero.
    pub fn from_oracle(t: f64, points: &[Vec3], eb: &[(Vec3, Vec3)]) -> Self {
        let f: Vec<[Vec3; 3]> = eb.iter().map(|(e, b)| [Vec3::zeros(), *e, *b]).collect();
        Self::from_parts(t, None, points, &f)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,z,Ax,Ay,Az,Ex,Ey,Ez,Bx,By,Bz")?;
        for i in 0..self.len() {
            let row: Vec<String> = [self.points[i], self.a[i], self.e[i], self.b[i]]
                .iter()
                .flat_map(|v| v.iter().map(|c| format!("{c:e}")))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for d in self.dims.unwrap_or([0; 3]) {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        for col in [&self.points, &self.a, &self.e, &self.b] {
            for c in 0..3 {
                for v in col.iter() {
                    w.write_all(&v[c].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(invalid("not a field snapshot (bad magic)"));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = u64::from_le_bytes(next(&mut r)?) as usize;
        }
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let t = f64::from_le_bytes(next(&mut r)?);
        let mut cols = vec![vec![[0.0; 3]; n]; 4];
        for col in cols.iter_mut() {
            for c in 0..3 {
                for v in col.iter_mut() {
                    v[c] = f64::from_le_bytes(next(&mut r)?);
                }
            }
        }
        let b = cols.pop().unwrap();
        let e = cols.pop().unwrap();
        let a = cols.pop().unwrap();
        let points = cols.pop().unwrap();
        Ok(Self {
            t,
            dims: (dims != [0; 3]).then_some(dims),
            points,
            a,
            e,
            b,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSnapshot {
        let grid = GridSpec {
            lower: [-1.0, 0.0, 2.0],
            upper: [1.0, 0.5, 2.0],
            n: [3, 2, 1],
        };
        let pts = grid.points();
        let f: Vec<[Vec3; 3]> = pts.iter().map(|p| [p * 2.0, p * -1.0, Vec3::new(p[2], 0.1, 1e-300)]).collect();
        FieldSnapshot::from_parts(0.25, Some(grid.n), &pts, &f)
    }

    #[test]
    fn grid_ordering() {
        let g = GridSpec::cube(2.0, 3);
        let p = g.points();
        assert_eq!(p.len(), 27);
        assert_eq!(p[0], Vec3::new(-1.0, -1.0, -1.0));
        assert_eq!(p[1], Vec3::new(-1.0, -1.0, 0.0));
        assert_eq!(p[26], Vec3::new(1.0, 1.0, 1.0));
        assert!(GridSpec { lower: [0.0; 3], upper: [0.0; 3], n: [2, 1, 1] }.validate().is_err());
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"QFSNAP01");
        assert_eq!(buf.len(), 8 + 5 * 8 + 12 * 8 * s.len());
        assert_eq!(FieldSnapshot::read_binary(&buf[..]).unwrap(), s);
        assert!(FieldSnapshot::read_binary(&b"NOTASNAP"[..]).is_err());
    }

    #[test]
    fn csv_and_json() {
        let s = sample();
        let mut csv = Vec::new();
        s.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,z,Ax,Ay,Az,Ex,Ey,Ez,Bx,By,Bz");
        assert_eq!(lines.len(), 1 + s.len());
        let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[0], -1.0);
        assert_eq!(first[3], -2.0);
        let mut js = Vec::new();
        s.write_json(&mut js).unwrap();
        let back: FieldSnapshot = serde_json::from_slice(&js).unwrap();
        assert_eq!(back, s);
    }
}
