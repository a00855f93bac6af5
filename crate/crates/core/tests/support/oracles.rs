//! Straightforward reference implementations used to cross-check the
//! optimized descriptor and fitting code. Loops are written out in full on
//! purpose; speed does not matter here.
#![allow(dead_code, clippy::needless_range_loop)]

use encost_core::y4m::LumaFrame;

fn px(f: &LumaFrame, x: isize, y: isize) -> f64 {
    let xc = x.clamp(0, f.width() as isize - 1) as usize;
    let yc = y.clamp(0, f.height() as isize - 1) as usize;
    f64::from(f.get(xc, yc))
}

pub fn sobel(f: &LumaFrame, x: usize, y: usize) -> f64 {
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (mut gx, mut gy) = (0.0, 0.0);
    for j in 0..3 {
        for i in 0..3 {
            let v = px(f, x as isize + i as isize - 1, y as isize + j as isize - 1);
            gx += kx[j][i] * v;
            gy += ky[j][i] * v;
        }
    }
    (gx * gx + gy * gy).sqrt()
}

pub fn frame_si(f: &LumaFrame) -> f64 {
    let mut acc = 0.0;
    for y in 0..f.height() {
        for x in 0..f.width() {
            acc += sobel(f, x, y).powi(2);
        }
    }
    (acc / (f.width() * f.height()) as f64).sqrt()
}

pub fn si(frames: &[LumaFrame]) -> f64 {
    frames.iter().map(frame_si).sum::<f64>() / frames.len() as f64
}

pub fn ti(frames: &[LumaFrame]) -> f64 {
    if frames.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for p in 1..frames.len() {
        let (a, b) = (&frames[p - 1], &frames[p]);
        let mut acc = 0.0;
        for y in 0..a.height() {
            for x in 0..a.width() {
                let d = f64::from(b.get(x, y)) - f64::from(a.get(x, y));
                acc += d * d;
            }
        }
        total += (acc / (a.width() * a.height()) as f64).sqrt();
    }
    total / (frames.len() - 1) as f64
}

/// `cos(π(2x+1)k / 2w)` indexed `[k][x]`.
pub fn cosine_table(w: usize) -> Vec<Vec<f64>> {
    let n = w as f64;
    (0..w)
        .map(|k| {
            (0..w)
                .map(|x| (std::f64::consts::PI * (2 * x + 1) as f64 * k as f64 / (2.0 * n)).cos())
                .collect()
        })
        .collect()
}

/// Coefficient `(u, v)` of the orthonormal DCT-II of the `w`×`w` block at `(bx, by)`.
pub fn dct_coefficient(f: &LumaFrame, bx: usize, by: usize, cos: &[Vec<f64>], u: usize, v: usize) -> f64 {
    let w = cos.len();
    let n = w as f64;
    let a = |k: usize| if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
    let mut acc = 0.0;
    for y in 0..w {
        for x in 0..w {
            acc += f64::from(f.get(bx + x, by + y)) * cos[u][y] * cos[v][x];
        }
    }
    a(u) * a(v) * acc
}

pub fn block_texture(f: &LumaFrame, bx: usize, by: usize, w: usize) -> f64 {
    let cos = cosine_table(w);
    let mut h = 0.0;
    for i in 0..w {
        for j in 0..w {
            let r = (i * j) as f64 / (w * w) as f64;
            h += (r * r - 1.0).abs().exp() * dct_coefficient(f, bx, by, &cos, i, j).abs();
        }
    }
    h
}

/// Textures of all full blocks in raster order.
pub fn textures(f: &LumaFrame, w: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for by in 0..f.height() / w {
        for bx in 0..f.width() / w {
            out.push(block_texture(f, bx * w, by * w, w));
        }
    }
    out
}

pub fn vca_spatial(frames: &[LumaFrame], w: usize) -> f64 {
    let per_frame: Vec<f64> = frames
        .iter()
        .map(|f| {
            let t = textures(f, w);
            t.iter().sum::<f64>() / (t.len() * w * w) as f64
        })
        .collect();
    per_frame.iter().sum::<f64>() / per_frame.len() as f64
}

pub fn vca_temporal(frames: &[LumaFrame], w: usize) -> f64 {
    if frames.len() < 2 {
        return 0.0;
    }
    let tex: Vec<Vec<f64>> = frames.iter().map(|f| textures(f, w)).collect();
    let mut total = 0.0;
    for p in 1..tex.len() {
        let sad: f64 = tex[p].iter().zip(&tex[p - 1]).map(|(a, b)| (a - b).abs()).sum();
        total += sad / (tex[p].len() * w * w) as f64;
    }
    total / (frames.len() - 1) as f64
}

pub fn block_variance(frames: &[LumaFrame]) -> f64 {
    let w = 64;
    let mut total = 0.0;
    for f in frames {
        let mut sum_var = 0.0;
        let mut blocks = 0;
        for by in 0..f.height() / w {
            for bx in 0..f.width() / w {
                let mut mean = 0.0;
                for y in 0..w {
                    for x in 0..w {
                        mean += f64::from(f.get(bx * w + x, by * w + y));
                    }
                }
                mean /= (w * w) as f64;
                let mut var = 0.0;
                for y in 0..w {
                    for x in 0..w {
                        var += (f64::from(f.get(bx * w + x, by * w + y)) - mean).powi(2);
                    }
                }
                sum_var += var / (w * w) as f64;
                blocks += 1;
            }
        }
        total += sum_var / (blocks * w * w) as f64;
    }
    total / frames.len() as f64
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Least squares through the normal equations `XᵀX β = Xᵀy`.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    gauss_solve(xtx, xty)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
