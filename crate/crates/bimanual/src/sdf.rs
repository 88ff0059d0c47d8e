//! Voxelized interior-distance fields.
//!
//! For a watertight triangle mesh, [`VoxelSdf::voxelize`] fills an
//! `N×N×N` grid where each voxel center stores
//!
//! ```text
//! ψ(x) = distance to the nearest surface point   if x is inside
//!        0                                       otherwise
//! ```
//!
//! a clamped, flipped signed-distance field: zero everywhere outside,
//! positive and growing with depth inside.
//!
//! Inside/outside is decided by signed ray crossings (a crossing counts
//! the sign of the face normal along the ray, so overlapping closed
//! components still classify correctly), evaluated as axis-aligned
//! scanlines and settled by majority vote over the three axis
//! directions. Distances for inside voxels are exact point-to-triangle
//! distances found with an expanding ring search over a uniform triangle
//! grid.
//!
//! The grid is cubic-celled, centered on the mesh bounding box with at
//! least `margin` cells of padding on every side, so boundary voxels are
//! always outside and hold exact zeros. [`VoxelSdf::sample`]
//! interpolates trilinearly between voxel centers and returns 0 beyond
//! the outermost centers, which keeps the sampled field continuous
//! everywhere.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::Error;
use crate::Result;

/// Grid construction parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Voxels per axis.
    pub resolution: usize,
    /// Padding cells guaranteed between the mesh bounding box and the
    /// grid boundary.
    pub margin_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            margin_cells: 2,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return Err(Error::InvalidConfig(format!(
                "grid resolution {} below minimum 8",
                self.resolution
            )));
        }
        if self.margin_cells < 2 {
            return Err(Error::InvalidConfig(
                "grid margin must be at least 2 cells".into(),
            ));
        }
        if self.resolution <= 2 * self.margin_cells {
            return Err(Error::InvalidConfig(
                "grid resolution must exceed twice the margin".into(),
            ));
        }
        Ok(())
    }
}

/// Interior-distance voxel grid.
#[derive(Clone, Debug)]
pub struct VoxelSdf {
    resolution: usize,
    /// World position of the center of voxel (0,0,0).
    origin: Point3<f64>,
    cell_size: f64,
    /// Row-major values: index (ix, iy, iz) lives at (ix·N + iy)·N + iz.
    values: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"PSIGRID1";

impl VoxelSdf {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.resolution + iy) * self.resolution + iz
    }

    pub fn value_at(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.idx(ix, iy, iz)]
    }

    /// World position of a voxel center.
    pub fn center(&self, ix: usize, iy: usize, iz: usize) -> Point3<f64> {
        self.origin + Vector3::new(ix as f64, iy as f64, iz as f64) * self.cell_size
    }

    /// Voxelize a watertight mesh. See the module docs for semantics.
    pub fn voxelize(
        vertices: &[Point3<f64>],
        faces: &[[u32; 3]],
        config: &GridConfig,
    ) -> Result<Self> {
        config.validate()?;
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::InvalidInput("empty mesh".into()));
        }
        if vertices
            .iter()
            .any(|v| !v.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite("mesh vertices".into()));
        }
        check_watertight(faces, vertices.len())?;

        let n = config.resolution;
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let extent = hi - lo;
        let max_extent = extent.iter().cloned().fold(0.0, f64::max);
        if max_extent <= 0.0 {
            return Err(Error::InvalidInput("mesh has zero extent".into()));
        }
        let interior = n - 2 * config.margin_cells;
        let cell = max_extent / interior as f64;
        let center = Point3::from((lo.coords + hi.coords) * 0.5);
        let grid_min = center - Vector3::repeat(n as f64 * cell * 0.5);
        let origin = grid_min + Vector3::repeat(cell * 0.5);

        let mut grid = VoxelSdf {
            resolution: n,
            origin,
            cell_size: cell,
            values: vec![0.0; n * n * n],
        };

        let inside = classify_inside(&grid, vertices, faces);
        let tri_grid = TriangleGrid::build(&grid, vertices, faces);
        let mut stamps = vec![u32::MAX; faces.len()];
        let mut query = 0u32;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let i = grid.idx(ix, iy, iz);
                    if inside[i] {
                        let p = grid.center(ix, iy, iz);
                        let d2 = tri_grid.nearest_distance_squared(
                            &p, vertices, faces, &mut stamps, query,
                        );
                        grid.values[i] = d2.sqrt();
                        query += 1;
                    }
                }
            }
        }
        Ok(grid)
    }

    /// Trilinearly interpolated ψ at a world point; 0 outside the voxel
    /// center hull.
    pub fn sample(&self, p: &Point3<f64>) -> f64 {
        self.sample_with_gradient(p).0
    }

    /// Sample ψ and its spatial gradient. The gradient is the in-cell
    /// derivative of the trilinear interpolant (a subgradient on cell
    /// boundaries) and zero outside the center hull.
    pub fn sample_with_gradient(&self, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let n = self.resolution;
        let g = (p - self.origin) / self.cell_size;
        let mut i0 = [0usize; 3];
        let mut f = [0.0f64; 3];
        for a in 0..3 {
            if g[a] <= 0.0 || g[a] >= (n - 1) as f64 {
                return (0.0, Vector3::zeros());
            }
            let fl = g[a].floor();
            i0[a] = fl as usize;
            f[a] = g[a] - fl;
        }
        let c = |dx: usize, dy: usize, dz: usize| -> f64 {
            self.values[self.idx(i0[0] + dx, i0[1] + dy, i0[2] + dz)]
        };
        let (fx, fy, fz) = (f[0], f[1], f[2]);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;

        let c00 = lerp(c(0, 0, 0), c(1, 0, 0), fx);
        let c10 = lerp(c(0, 1, 0), c(1, 1, 0), fx);
        let c01 = lerp(c(0, 0, 1), c(1, 0, 1), fx);
        let c11 = lerp(c(0, 1, 1), c(1, 1, 1), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        let value = lerp(c0, c1, fz);

        let inv = 1.0 / self.cell_size;
        let dx = {
            let d00 = c(1, 0, 0) - c(0, 0, 0);
            let d10 = c(1, 1, 0) - c(0, 1, 0);
            let d01 = c(1, 0, 1) - c(0, 0, 1);
            let d11 = c(1, 1, 1) - c(0, 1, 1);
            lerp(lerp(d00, d10, fy), lerp(d01, d11, fy), fz) * inv
        };
        let dy = {
            let d0 = c10 - c00;
            let d1 = c11 - c01;
            lerp(d0, d1, fz) * inv
        };
        let dz = (c1 - c0) * inv;
        (value, Vector3::new(dx, dy, dz))
    }

    /// Binary dump: `PSIGRID1`, u32 resolution, origin (3×f64), cell
    /// size (f64), then resolution³ row-major f64 values. All fields
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.resolution as u32).to_le_bytes())?;
        for a in 0..3 {
            w.write_all(&self.origin[a].to_le_bytes())?;
        }
        w.write_all(&self.cell_size.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed("bad grid magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        let mut scalar = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let origin = Point3::new(scalar(&mut r)?, scalar(&mut r)?, scalar(&mut r)?);
        let cell_size = scalar(&mut r)?;
        let mut values = vec![0.0; n * n * n];
        for v in values.iter_mut() {
            *v = scalar(&mut r)?;
        }
        Ok(Self {
            resolution: n,
            origin,
            cell_size,
            values,
        })
    }
}

/// Verify that every edge is shared by exactly two faces with opposite
/// orientation and that all indices are in range.
pub fn check_watertight(faces: &[[u32; 3]], vertex_count: usize) -> Result<()> {
    // encode each directed edge as (min, max, direction) in one u64 and
    // sort; a closed consistently wound mesh yields exactly one forward
    // and one backward use per undirected edge
    let mut codes = Vec::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        if f[0] == f[1] || f[1] == f[2] || f[2] == f[0] {
            return Err(Error::Topology(format!("degenerate face {fi}")));
        }
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            if a as usize >= vertex_count || b as usize >= vertex_count {
                return Err(Error::Topology(format!(
                    "face {fi} references vertex out of range"
                )));
            }
            let (lo, hi, dir) = if a < b { (a, b, 0u64) } else { (b, a, 1u64) };
            codes.push(((lo as u64) << 33) | ((hi as u64) << 1) | dir);
        }
    }
    codes.sort_unstable();
    let mut i = 0;
    while i < codes.len() {
        let key = codes[i] >> 1;
        let mut fwd = 0;
        let mut bwd = 0;
        while i < codes.len() && codes[i] >> 1 == key {
            if codes[i] & 1 == 0 {
                fwd += 1;
            } else {
                bwd += 1;
            }
            i += 1;
        }
        if (fwd, bwd) != (1, 1) {
            let (lo, hi) = ((key >> 32) as u32, (key & 0xffff_ffff) as u32);
            return Err(Error::Topology(format!(
                "edge ({lo}, {hi}) is not shared by exactly two opposite faces"
            )));
        }
    }
    Ok(())
}

/// Inside classification by majority vote of signed scanline crossings
/// along the three axes.
fn classify_inside(grid: &VoxelSdf, vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> Vec<bool> {
    let n = grid.resolution;
    let mut votes = vec![0u8; n * n * n];
    for axis in 0..3 {
        scanline_votes(grid, vertices, faces, axis, &mut votes);
    }
    votes.iter().map(|&v| v >= 2).collect()
}

/// Accumulate one inside-vote per voxel for the given scan axis.
fn scanline_votes(
    grid: &VoxelSdf,
    vertices: &[Point3<f64>],
    faces: &[[u32; 3]],
    axis: usize,
    votes: &mut [u8],
) {
    let n = grid.resolution;
    let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
    // tiny deterministic offsets keep scanlines off edges and vertices
    let ju = 0.137e-4 * grid.cell_size;
    let jv = 0.271e-4 * grid.cell_size;

    // bin triangles by their (u, v) projected footprint; a column at
    // index u has coordinate origin_u + u·cell + jitter, so the covered
    // index interval is [ceil((lo−o−j)/cell), floor((hi−o−j)/cell)]
    let mut counts = vec![0u32; n * n];
    let mut spans = Vec::with_capacity(faces.len());
    for f in faces {
        let (mut lo_u, mut hi_u) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY);
        for &vi in f {
            let p = &vertices[vi as usize];
            lo_u = lo_u.min(p[u_axis]);
            hi_u = hi_u.max(p[u_axis]);
            lo_v = lo_v.min(p[v_axis]);
            hi_v = hi_v.max(p[v_axis]);
        }
        let first = |w: f64, a: usize, j: f64| -> i64 { ((w - grid.origin[a] - j) / grid.cell_size).ceil() as i64 };
        let last = |w: f64, a: usize, j: f64| -> i64 { ((w - grid.origin[a] - j) / grid.cell_size).floor() as i64 };
        let u0 = first(lo_u, u_axis, ju).clamp(0, n as i64) as usize;
        let u1 = (last(hi_u, u_axis, ju) + 1).clamp(u0 as i64, n as i64) as usize;
        let v0 = first(lo_v, v_axis, jv).clamp(0, n as i64) as usize;
        let v1 = (last(hi_v, v_axis, jv) + 1).clamp(v0 as i64, n as i64) as usize;
        spans.push((u0, u1, v0, v1));
        for u in u0..u1 {
            for v in v0..v1 {
                counts[u * n + v] += 1;
            }
        }
    }
    let mut offsets = vec![0u32; n * n + 1];
    for i in 0..n * n {
        offsets[i + 1] = offsets[i] + counts[i];
    }
    let mut bins = vec![0u32; offsets[n * n] as usize];
    let mut cursor = offsets.clone();
    for (ti, &(u0, u1, v0, v1)) in spans.iter().enumerate() {
        for u in u0..u1 {
            for v in v0..v1 {
                let c = u * n + v;
                bins[cursor[c] as usize] = ti as u32;
                cursor[c] += 1;
            }
        }
    }

    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for u in 0..n {
        for v in 0..n {
            let cu = grid.origin[u_axis] + u as f64 * grid.cell_size + ju;
            let cv = grid.origin[v_axis] + v as f64 * grid.cell_size + jv;
            crossings.clear();
            let c = u * n + v;
            for &ti in &bins[offsets[c] as usize..offsets[c + 1] as usize] {
                let f = &faces[ti as usize];
                let p0 = &vertices[f[0] as usize];
                let p1 = &vertices[f[1] as usize];
                let p2 = &vertices[f[2] as usize];
                // 2D edge functions in the (u, v) projection
                let e = |a: &Point3<f64>, b: &Point3<f64>| -> f64 {
                    (b[u_axis] - a[u_axis]) * (cv - a[v_axis])
                        - (b[v_axis] - a[v_axis]) * (cu - a[u_axis])
                };
                let e0 = e(p0, p1);
                let e1 = e(p1, p2);
                let e2 = e(p2, p0);
                let inside_2d = (e0 > 0.0 && e1 > 0.0 && e2 > 0.0)
                    || (e0 < 0.0 && e1 < 0.0 && e2 < 0.0);
                if !inside_2d {
                    continue;
                }
                let n3 = (p1 - p0).cross(&(p2 - p0));
                let n_axis = n3[axis];
                if n_axis == 0.0 {
                    continue;
                }
                let t = (n3.dot(&p0.coords) - n3[u_axis] * cu - n3[v_axis] * cv) / n_axis;
                crossings.push((t, if n_axis > 0.0 { 1 } else { -1 }));
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // walk voxel centers from far to near accumulating the
            // winding number beyond each center
            let mut acc = 0i32;
            let mut ptr = crossings.len();
            for i in (0..n).rev() {
                let coord = grid.origin[axis] + i as f64 * grid.cell_size;
                while ptr > 0 && crossings[ptr - 1].0 > coord {
                    acc += crossings[ptr - 1].1;
                    ptr -= 1;
                }
                if acc != 0 {
                    let idx = match axis {
                        0 => (i * n + u) * n + v,
                        1 => (v * n + i) * n + u,
                        _ => (u * n + v) * n + i,
                    };
                    votes[idx] += 1;
                }
            }
        }
    }
}

/// Uniform grid of triangle indices used by the distance queries,
/// coarser than the voxel grid (fewer cells to enumerate; the AABB
/// prune keeps the extra candidates cheap).
struct TriangleGrid {
    n: usize,
    origin: Point3<f64>,
    cell: f64,
    offsets: Vec<u32>,
    entries: Vec<u32>,
    /// Per-triangle bounds (min, max) for cheap lower-bound pruning.
    tri_bounds: Vec<[f64; 6]>,
}

impl TriangleGrid {
    fn build(grid: &VoxelSdf, vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> Self {
        let n = grid.resolution;
        let cell = grid.cell_size;
        // the grid corner, half a voxel before the first center
        let origin = grid.origin - Vector3::repeat(grid.cell_size * 0.5);
        let cell_range = |f: &[u32; 3]| -> [(usize, usize); 3] {
            let mut out = [(0usize, 0usize); 3];
            for a in 0..3 {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &vi in f {
                    lo = lo.min(vertices[vi as usize][a]);
                    hi = hi.max(vertices[vi as usize][a]);
                }
                let i0 = (((lo - origin[a]) / cell).floor() as i64).clamp(0, n as i64 - 1) as usize;
                let i1 = (((hi - origin[a]) / cell).ceil() as i64).clamp(0, n as i64 - 1) as usize;
                out[a] = (i0, i1);
            }
            out
        };
        let mut counts = vec![0u32; n * n * n];
        for f in faces {
            let r = cell_range(f);
            for x in r[0].0..=r[0].1 {
                for y in r[1].0..=r[1].1 {
                    for z in r[2].0..=r[2].1 {
                        counts[(x * n + y) * n + z] += 1;
                    }
                }
            }
        }
        let mut offsets = vec![0u32; n * n * n + 1];
        for i in 0..n * n * n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut entries = vec![0u32; offsets[n * n * n] as usize];
        // reuse the counts buffer as the per-cell write cursor
        counts.iter_mut().for_each(|c| *c = 0);
        let mut tri_bounds = Vec::with_capacity(faces.len());
        for (ti, f) in faces.iter().enumerate() {
            let r = cell_range(f);
            for x in r[0].0..=r[0].1 {
                for y in r[1].0..=r[1].1 {
                    for z in r[2].0..=r[2].1 {
                        let c = (x * n + y) * n + z;
                        entries[(offsets[c] + counts[c]) as usize] = ti as u32;
                        counts[c] += 1;
                    }
                }
            }
            let mut b = [f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
            for &vi in f {
                let p = &vertices[vi as usize];
                for a in 0..3 {
                    b[a] = b[a].min(p[a]);
                    b[3 + a] = b[3 + a].max(p[a]);
                }
            }
            tri_bounds.push(b);
        }
        Self { n, origin, cell, offsets, entries, tri_bounds }
    }

    /// Exact squared distance from a voxel center to the nearest
    /// triangle, found by expanding Chebyshev rings of cells. `stamps`
    /// deduplicates triangles shared by several cells of one query.
    #[allow(clippy::too_many_arguments)]
    fn nearest_distance_squared(
        &self,
        p: &Point3<f64>,
        vertices: &[Point3<f64>],
        faces: &[[u32; 3]],
        stamps: &mut [u32],
        query: u32,
    ) -> f64 {
        let n = self.n as i64;
        let c = [
            (((p.x - self.origin.x) / self.cell).floor() as i64).clamp(0, n - 1),
            (((p.y - self.origin.y) / self.cell).floor() as i64).clamp(0, n - 1),
            (((p.z - self.origin.z) / self.cell).floor() as i64).clamp(0, n - 1),
        ];
        let mut best = f64::INFINITY;
        let mut scan_cell = |x: i64, y: i64, z: i64, best: &mut f64| {
            if x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n {
                return;
            }
            let idx = ((x * n + y) * n + z) as usize;
            for &ti in &self.entries[self.offsets[idx] as usize..self.offsets[idx + 1] as usize] {
                let t = ti as usize;
                if stamps[t] == query {
                    continue;
                }
                stamps[t] = query;
                let b = &self.tri_bounds[t];
                let mut lb = 0.0;
                for a in 0..3 {
                    let d = (b[a] - p[a]).max(p[a] - b[3 + a]).max(0.0);
                    lb += d * d;
                }
                if lb >= *best {
                    continue;
                }
                let f = &faces[t];
                let d2 = point_triangle_distance_squared(
                    p,
                    &vertices[f[0] as usize],
                    &vertices[f[1] as usize],
                    &vertices[f[2] as usize],
                );
                if d2 < *best {
                    *best = d2;
                }
            }
        };
        for ring in 0..self.n as i64 {
            if ring == 0 {
                scan_cell(c[0], c[1], c[2], &mut best);
            } else {
                let (x0, x1) = (c[0] - ring, c[0] + ring);
                for x in [x0, x1] {
                    for y in c[1] - ring..=c[1] + ring {
                        for z in c[2] - ring..=c[2] + ring {
                            scan_cell(x, y, z, &mut best);
                        }
                    }
                }
                for y in [c[1] - ring, c[1] + ring] {
                    for x in c[0] - ring + 1..=c[0] + ring - 1 {
                        for z in c[2] - ring..=c[2] + ring {
                            scan_cell(x, y, z, &mut best);
                        }
                    }
                }
                for z in [c[2] - ring, c[2] + ring] {
                    for x in c[0] - ring + 1..=c[0] + ring - 1 {
                        for y in c[1] - ring + 1..=c[1] + ring - 1 {
                            scan_cell(x, y, z, &mut best);
                        }
                    }
                }
            }
            // queries sit at cell midpoints, so any cell at ring r+1
            // is at least (r + 0.5)·cell away
            let bound = (ring as f64 + 0.5) * self.cell;
            if best <= bound * bound {
                break;
            }
        }
        best
    }
}

/// Squared distance from a point to a triangle (Ericson's region-based
/// closest-point construction).
pub fn point_triangle_distance_squared(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm_squared();
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm_squared();
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm_squared();
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm_squared();
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm_squared();
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm_squared();
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm_squared()
}

/// Axis-aligned unit cube mesh `[0,1]³` (12 triangles, outward).
pub fn unit_cube_mesh() -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    let vertices = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [3, 0, 4],
        [3, 4, 7],
    ];
    (vertices, faces)
}

/// Icosphere of the given radius (subdivision ≥ 0; 2 gives 642 vertices,
/// 3 gives 2562).
pub fn icosphere_mesh(radius: f64, subdivisions: usize) -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = ((vertices[a as usize] + vertices[b as usize]) * 0.5).normalize();
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                });
            }
            new_faces.push([f[0], mid[0], mid[2]]);
            new_faces.push([f[1], mid[1], mid[0]]);
            new_faces.push([f[2], mid[2], mid[1]]);
            new_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = new_faces;
    }
    (
        vertices
            .into_iter()
            .map(|v| Point3::from(v * radius))
            .collect(),
        faces,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn cube_center_distance() {
        let (v, f) = unit_cube_mesh();
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig { resolution: 33, margin_cells: 2 }).unwrap();
        // center of the cube: nearest face is 0.5 away
        let psi = grid.sample(&Point3::new(0.5, 0.5, 0.5));
        assert!((psi - 0.5).abs() < 2.0 * grid.cell_size(), "psi {psi}");
    }

    #[test]
    fn outside_points_are_zero() {
        let (v, f) = unit_cube_mesh();
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let standoff = 2.0 * grid.cell_size();
        let mut tested = 0;
        while tested < 2000 {
            let p = Point3::new(
                rng.gen_range(-1.0..2.0),
                rng.gen_range(-1.0..2.0),
                rng.gen_range(-1.0..2.0),
            );
            let outside = p.iter().any(|&c| c < -standoff || c > 1.0 + standoff);
            if outside {
                assert_eq!(grid.sample(&p), 0.0);
                tested += 1;
            }
        }
    }

    #[test]
    fn boundary_voxels_are_zero() {
        let (v, f) = icosphere_mesh(0.8, 2);
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let n = grid.resolution();
        for a in 0..n {
            for b in 0..n {
                for (x, y, z) in [
                    (0, a, b),
                    (n - 1, a, b),
                    (a, 0, b),
                    (a, n - 1, b),
                    (a, b, 0),
                    (a, b, n - 1),
                ] {
                    assert_eq!(grid.value_at(x, y, z), 0.0);
                }
            }
        }
    }

    #[test]
    fn values_are_non_negative_probe() {
        let (v, f) = icosphere_mesh(0.6, 2);
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..10_000 {
            let p = Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            assert!(grid.sample(&p) >= 0.0);
        }
    }

    #[test]
    fn sphere_interior_matches_analytic() {
        let (v, f) = icosphere_mesh(1.0, 3);
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig { resolution: 48, margin_cells: 2 }).unwrap();
        let mut rng = StdRng::seed_from_u64(17);
        let tol = 2.0 * grid.cell_size();
        for _ in 0..2000 {
            let p = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let r = p.norm();
            if r >= 0.999 {
                continue;
            }
            let psi = grid.sample(&Point3::from(p));
            assert!(
                (psi - (1.0 - r)).abs() <= tol,
                "psi {psi} vs analytic {} at r {r}",
                1.0 - r
            );
        }
    }

    #[test]
    fn sample_at_center_returns_stored_value() {
        let (v, f) = unit_cube_mesh();
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let n = grid.resolution();
        for (ix, iy, iz) in [(n / 2, n / 2, n / 2), (n / 3, n / 2, 2 * n / 3)] {
            let p = grid.center(ix, iy, iz);
            assert_abs_diff_eq!(grid.sample(&p), grid.value_at(ix, iy, iz), epsilon = 1e-12);
        }
    }

    #[test]
    fn midpoint_interpolates_linearly() {
        let (v, f) = unit_cube_mesh();
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let n = grid.resolution();
        let a = grid.value_at(n / 2, n / 2, n / 2);
        let b = grid.value_at(n / 2 + 1, n / 2, n / 2);
        let mid = Point3::from(
            (grid.center(n / 2, n / 2, n / 2).coords + grid.center(n / 2 + 1, n / 2, n / 2).coords) * 0.5,
        );
        assert_abs_diff_eq!(grid.sample(&mid), (a + b) * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (v, f) = icosphere_mesh(0.7, 2);
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig::default()).unwrap();
        let mut rng = StdRng::seed_from_u64(23);
        let h = 1e-7;
        let mut checked = 0;
        while checked < 200 {
            let p = Point3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            // keep clear of cell boundaries where the interpolant kinks
            let g = (p - grid.origin()) / grid.cell_size();
            if g.iter().any(|c| (c - c.round()).abs() < 1e-3 || (c - c.floor() - 0.5).abs() > 0.499) {
                continue;
            }
            let (_, grad) = grid.sample_with_gradient(&p);
            for a in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                let fd = (grid.sample(&pp) - grid.sample(&pm)) / (2.0 * h);
                assert!((fd - grad[a]).abs() <= 1e-6 + 1e-4 * fd.abs().max(grad[a].abs()));
            }
            checked += 1;
        }
    }

    #[test]
    fn non_watertight_rejected() {
        let (v, mut f) = unit_cube_mesh();
        f.pop();
        assert!(matches!(
            VoxelSdf::voxelize(&v, &f, &GridConfig::default()),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn binary_roundtrip() {
        let (v, f) = icosphere_mesh(0.5, 1);
        let grid = VoxelSdf::voxelize(&v, &f, &GridConfig { resolution: 16, margin_cells: 2 }).unwrap();
        let mut buf = Vec::new();
        grid.write_binary(&mut buf).unwrap();
        let back = VoxelSdf::read_binary(buf.as_slice()).unwrap();
        assert_eq!(grid.resolution(), back.resolution());
        assert_eq!(grid.values(), back.values());
        assert_eq!(grid.origin(), back.origin());
        assert_eq!(grid.cell_size(), back.cell_size());
    }

    #[test]
    fn invalid_grid_config_rejected() {
        let (v, f) = unit_cube_mesh();
        assert!(VoxelSdf::voxelize(&v, &f, &GridConfig { resolution: 4, margin_cells: 2 }).is_err());
        assert!(VoxelSdf::voxelize(&v, &f, &GridConfig { resolution: 8, margin_cells: 4 }).is_err());
    }
}
