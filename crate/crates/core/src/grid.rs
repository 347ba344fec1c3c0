//! Uniform volumetric grids with trilinear interpolation.
//!
//! Storage is row-major with x slowest: `data[(ix * ny + iy) * nz + iz]`,
//! the layout the flat binary dumps use.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Uniform isotropic grid over an axis-aligned box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid3 {
    pub origin: [f64; 3],
    pub spacing: f64,
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Grid3 {
    /// Grid of zeros covering `[origin, origin + (dims-1)*spacing]` at nodes.
    pub fn zeros(origin: Vector3<f64>, spacing: f64, dims: [usize; 3]) -> Self {
        Grid3 {
            origin: [origin.x, origin.y, origin.z],
            spacing,
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    /// Symmetric grid over [-half, half]³ with n nodes per axis.
    pub fn centered(half: f64, n: usize) -> Self {
        let spacing = 2.0 * half / (n as f64 - 1.0);
        Self::zeros(Vector3::new(-half, -half, -half), spacing, [n, n, n])
    }

    /// Fill nodes from an evaluator.
    pub fn fill<F: Fn(Vector3<f64>) -> f64 + Sync>(&mut self, f: F) {
        use rayon::prelude::*;
        let (ny, nz) = (self.dims[1], self.dims[2]);
        let origin = Vector3::new(self.origin[0], self.origin[1], self.origin[2]);
        let h = self.spacing;
        self.data.par_chunks_mut(ny * nz).enumerate().for_each(|(ix, slab)| {
            for iy in 0..ny {
                for iz in 0..nz {
                    let p = origin + h * Vector3::new(ix as f64, iy as f64, iz as f64);
                    slab[iy * nz + iz] = f(p);
                }
            }
        });
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize, iz: usize) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + ix as f64 * self.spacing,
            self.origin[1] + iy as f64 * self.spacing,
            self.origin[2] + iz as f64 * self.spacing,
        )
    }

    /// Trilinear interpolation; zero outside the grid.
    pub fn sample(&self, p: Vector3<f64>) -> f64 {
        let h = self.spacing;
        let fx = (p.x - self.origin[0]) / h;
        let fy = (p.y - self.origin[1]) / h;
        let fz = (p.z - self.origin[2]) / h;
        if fx < 0.0 || fy < 0.0 || fz < 0.0 {
            return 0.0;
        }
        let (ix, iy, iz) = (fx.floor() as usize, fy.floor() as usize, fz.floor() as usize);
        if ix + 1 >= self.dims[0] || iy + 1 >= self.dims[1] || iz + 1 >= self.dims[2] {
            return 0.0;
        }
        let (tx, ty, tz) = (fx - ix as f64, fy - iy as f64, fz - iz as f64);
        let mut acc = 0.0;
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    let w = (if dx == 0 { 1.0 - tx } else { tx })
                        * (if dy == 0 { 1.0 - ty } else { ty })
                        * (if dz == 0 { 1.0 - tz } else { tz });
                    acc += w * self.data[self.index(ix + dx, iy + dy, iz + dz)];
                }
            }
        }
        acc
    }

    /// Iterate over (node position, value).
    pub fn nodes(&self) -> impl Iterator<Item = (Vector3<f64>, f64)> + '_ {
        let (ny, nz) = (self.dims[1], self.dims[2]);
        self.data.iter().enumerate().map(move |(i, &v)| {
            let ix = i / (ny * nz);
            let iy = (i / nz) % ny;
            let iz = i % nz;
            (self.node(ix, iy, iz), v)
        })
    }

    /// Volume element of one node cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trilinear_reproduces_affine_fields() {
        let mut g = Grid3::centered(1.0, 9);
        g.fill(|p| 1.0 + 2.0 * p.x - 0.5 * p.y + 3.0 * p.z);
        for p in [
            Vector3::new(0.13, -0.72, 0.55),
            Vector3::new(-0.9, 0.2, -0.1),
            Vector3::new(0.0, 0.0, 0.0),
        ] {
            assert_relative_eq!(
                g.sample(p),
                1.0 + 2.0 * p.x - 0.5 * p.y + 3.0 * p.z,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn outside_is_zero() {
        let mut g = Grid3::centered(1.0, 5);
        g.fill(|_| 1.0);
        assert_eq!(g.sample(Vector3::new(2.0, 0.0, 0.0)), 0.0);
    }
}
