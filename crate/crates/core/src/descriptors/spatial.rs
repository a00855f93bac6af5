//! Per-frame gradient, difference, and block-variance measures.

use crate::error::{Error, Result};
use crate::y4m::LumaFrame;

/// Block edge used by the block-variance descriptor.
pub const VARIANCE_BLOCK: usize = 64;

/// Sobel gradient magnitude `sqrt(Gx² + Gy²)` per pixel, with replicated edges.
pub fn sobel_magnitude(frame: &LumaFrame) -> Result<Vec<f64>> {
    let (w, h) = (frame.width(), frame.height());
    if w < 3 || h < 3 {
        return Err(Error::DegenerateInput(format!(
            "Sobel needs at least 3x3 pixels, frame is {w}x{h}"
        )));
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let above = frame.row(y.saturating_sub(1));
        let here = frame.row(y);
        let below = frame.row((y + 1).min(h - 1));
        for x in 0..w {
            let l = x.saturating_sub(1);
            let r = (x + 1).min(w - 1);
            let p = |row: &[u8], i: usize| f64::from(row[i]);
            let gx = (p(above, r) + 2.0 * p(here, r) + p(below, r)) - (p(above, l) + 2.0 * p(here, l) + p(below, l));
            let gy = (p(below, l) + 2.0 * p(below, x) + p(below, r)) - (p(above, l) + 2.0 * p(above, x) + p(above, r));
            out.push(gx.hypot(gy));
        }
    }
    Ok(out)
}

fn rms(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    (values.map(|v| v * v).sum::<f64>() / n as f64).sqrt()
}

/// Spatial information of one frame: RMS of the Sobel magnitude.
pub fn frame_spatial_information(frame: &LumaFrame) -> Result<f64> {
    let grid = sobel_magnitude(frame)?;
    Ok(rms(grid.iter().copied(), grid.len()))
}

/// Temporal information of one frame pair: RMS of the pixel difference.
pub fn pair_temporal_information(prev: &LumaFrame, cur: &LumaFrame) -> f64 {
    debug_assert_eq!(prev.samples().len(), cur.samples().len());
    let diffs = prev
        .samples()
        .iter()
        .zip(cur.samples())
        .map(|(&a, &b)| f64::from(b) - f64::from(a));
    rms(diffs, cur.samples().len())
}

/// Population variance of every full `size`×`size` block, row-major over blocks.
pub fn block_variances(frame: &LumaFrame, size: usize) -> Result<Vec<f64>> {
    let (bx, by) = (frame.width() / size, frame.height() / size);
    if bx == 0 || by == 0 {
        return Err(Error::DegenerateInput(format!(
            "frame {}x{} is smaller than one {size}x{size} block",
            frame.width(),
            frame.height()
        )));
    }
    let n = (size * size) as f64;
    let mut out = Vec::with_capacity(bx * by);
    for j in 0..by {
        for i in 0..bx {
            let (mut sum, mut sum_sq) = (0u64, 0u64);
            for y in j * size..(j + 1) * size {
                for &s in &frame.row(y)[i * size..(i + 1) * size] {
                    sum += u64::from(s);
                    sum_sq += u64::from(s) * u64::from(s);
                }
            }
            // exact integer moments, so the variance is shift-invariant to rounding
            let num = n as u128 * u128::from(sum_sq) - u128::from(sum) * u128::from(sum);
            out.push(num as f64 / (n * n));
        }
    }
    Ok(out)
}

/// Block-variance descriptor of one frame: `Σ_k var_k / (C · 64²)`.
pub fn frame_block_variance(frame: &LumaFrame) -> Result<f64> {
    let vars = block_variances(frame, VARIANCE_BLOCK)?;
    let denom = (vars.len() * VARIANCE_BLOCK * VARIANCE_BLOCK) as f64;
    Ok(vars.iter().sum::<f64>() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_has_zero_gradient() {
        let f = LumaFrame::filled(8, 6, 77, 0);
        assert!(sobel_magnitude(&f).unwrap().iter().all(|&g| g == 0.0));
        assert_eq!(frame_spatial_information(&f).unwrap(), 0.0);
    }

    #[test]
    fn step_edge_magnitude_is_four_delta() {
        let delta = 10u8;
        let f = LumaFrame::from_fn(8, 8, 0, |x, _| if x < 4 { 50 } else { 50 + delta });
        let g = sobel_magnitude(&f).unwrap();
        for y in 0..8 {
            assert_eq!(g[y * 8 + 3], 4.0 * f64::from(delta));
            assert_eq!(g[y * 8 + 4], 4.0 * f64::from(delta));
            assert_eq!(g[y * 8 + 1], 0.0);
        }
    }

    #[test]
    fn dc_offset_does_not_change_gradient() {
        let a = LumaFrame::from_fn(9, 7, 0, |x, y| ((x * 13 + y * 29) % 200) as u8);
        let b = LumaFrame::from_fn(9, 7, 0, |x, y| ((x * 13 + y * 29) % 200) as u8 + 40);
        assert_eq!(sobel_magnitude(&a).unwrap(), sobel_magnitude(&b).unwrap());
    }

    #[test]
    fn tiny_frame_is_degenerate() {
        let f = LumaFrame::filled(2, 5, 0, 0);
        assert!(matches!(sobel_magnitude(&f), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn ti_of_constant_shift() {
        let a = LumaFrame::filled(4, 4, 10, 0);
        let b = LumaFrame::filled(4, 4, 12, 1);
        assert_eq!(pair_temporal_information(&a, &b), 2.0);
    }

    #[test]
    fn half_split_block_variance() {
        let f = LumaFrame::from_fn(64, 64, 0, |x, _| if x < 32 { 0 } else { 255 });
        let v = block_variances(&f, 64).unwrap();
        assert_eq!(v, vec![16256.25]);
        assert_eq!(frame_block_variance(&f).unwrap(), 16256.25 / 4096.0);
    }

    #[test]
    fn partial_blocks_are_dropped() {
        let f = LumaFrame::filled(130, 70, 3, 0);
        assert_eq!(block_variances(&f, 64).unwrap().len(), 2);
        assert!(matches!(
            frame_block_variance(&LumaFrame::filled(63, 100, 0, 0)),
            Err(Error::DegenerateInput(_))
        ));
    }
}
