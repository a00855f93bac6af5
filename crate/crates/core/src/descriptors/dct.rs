//! Block DCT texture energy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::y4m::LumaFrame;

/// Orthonormal 2-D DCT-II of a square block, with the texture weighting
/// `exp(|(i·j/w²)² − 1|)` precomputed for the same size.
#[derive(Debug, Clone)]
pub struct BlockDct {
    size: usize,
    basis: Vec<f64>,
    weights: Vec<f64>,
}

impl BlockDct {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "block size must be positive");
        let n = size as f64;
        let mut basis = Vec::with_capacity(size * size);
        for u in 0..size {
            let scale = if u == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for x in 0..size {
                basis.push(scale * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos());
            }
        }
        let w2 = n * n;
        let mut weights = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let r = (i * j) as f64 / w2;
                weights.push((r * r - 1.0).abs().exp());
            }
        }
        BlockDct { size, basis, weights }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Transforms `block` (row-major, `size²` values) into `out`.
    pub fn forward(&self, block: &[f64], out: &mut [f64]) {
        let n = self.size;
        assert_eq!(block.len(), n * n);
        assert_eq!(out.len(), n * n);
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            let row = &block[r * n..(r + 1) * n];
            for v in 0..n {
                let b = &self.basis[v * n..(v + 1) * n];
                tmp[r * n + v] = row.iter().zip(b).map(|(x, c)| x * c).sum();
            }
        }
        for u in 0..n {
            let b = &self.basis[u * n..(u + 1) * n];
            for v in 0..n {
                out[u * n + v] = (0..n).map(|r| b[r] * tmp[r * n + v]).sum();
            }
        }
    }

    /// Weighted absolute coefficient sum of one block.
    pub fn texture(&self, block: &[f64]) -> f64 {
        let mut coeffs = vec![0.0; block.len()];
        self.forward(block, &mut coeffs);
        coeffs.iter().zip(&self.weights).map(|(c, w)| w * c.abs()).sum()
    }

    /// Texture of every full block of `frame`, row-major over blocks.
    pub fn frame_textures(&self, frame: &LumaFrame) -> Result<Vec<f64>> {
        let (bx, by) = full_blocks(frame, self.size)?;
        let mut block = vec![0.0; self.size * self.size];
        let mut out = Vec::with_capacity(bx * by);
        for j in 0..by {
            for i in 0..bx {
                self.load_block(frame, i, j, &mut block);
                out.push(self.texture(&block));
            }
        }
        Ok(out)
    }

    fn load_block(&self, frame: &LumaFrame, bx: usize, by: usize, block: &mut [f64]) {
        let n = self.size;
        for y in 0..n {
            let row = &frame.row(by * n + y)[bx * n..(bx + 1) * n];
            for (dst, &s) in block[y * n..(y + 1) * n].iter_mut().zip(row) {
                *dst = f64::from(s);
            }
        }
    }
}

fn full_blocks(frame: &LumaFrame, size: usize) -> Result<(usize, usize)> {
    let (bx, by) = (frame.width() / size, frame.height() / size);
    if bx == 0 || by == 0 {
        return Err(Error::DegenerateInput(format!(
            "frame {}x{} is smaller than one {size}x{size} block",
            frame.width(),
            frame.height()
        )));
    }
    Ok((bx, by))
}

/// Texture `H_k` of block `k` (row-major block address) of `frame`.
pub fn block_texture(frame: &LumaFrame, k: usize, size: usize) -> Result<f64> {
    let (bx, by) = full_blocks(frame, size)?;
    if k >= bx * by {
        return Err(Error::Index(format!("block {k} of {} full blocks", bx * by)));
    }
    let dct = BlockDct::new(size);
    let mut block = vec![0.0; size * size];
    dct.load_block(frame, k % bx, k / bx, &mut block);
    Ok(dct.texture(&block))
}

/// Mean texture per pixel: `Σ_k H_k / (C · w²)`.
pub fn normalized_texture_sum(textures: &[f64], size: usize) -> f64 {
    textures.iter().sum::<f64>() / (textures.len() * size * size) as f64
}

/// Mean absolute texture change per pixel between two frames' block textures.
pub fn normalized_texture_sad(prev: &[f64], cur: &[f64], size: usize) -> f64 {
    debug_assert_eq!(prev.len(), cur.len());
    let sad: f64 = prev.iter().zip(cur).map(|(a, b)| (b - a).abs()).sum();
    sad / (cur.len() * size * size) as f64
}

/// Texture of a constant block, `e · w · c`, kept for reference in tests.
#[cfg(test)]
pub(crate) fn constant_block_texture(size: usize, value: f64) -> f64 {
    std::f64::consts::E * size as f64 * value
}
