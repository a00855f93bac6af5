//! Dense two-frame optical flow by polynomial expansion (Farnebäck).
//!
//! Each pyramid level approximates the neighbourhood of every pixel by a
//! quadratic polynomial `xᵀAx + bᵀx + c` using Gaussian applicability
//! weights. The displacement `d` that best maps the first polynomial onto the
//! second satisfies `A d = -½ Δb`; the normal equations are averaged over a
//! box window and solved per pixel, then refined coarse to fine.
//!
//! The structure follows the widely used reference implementation so results
//! are comparable to it, with one difference: samples that land exactly on
//! the last row or column are interpolated with clamped neighbours instead of
//! being treated as outside the frame. That keeps the flow of two identical
//! frames at exactly zero.

use crate::y4m::LumaFrame;

const MIN_LEVEL_SIZE: f64 = 32.0;
const BORDER: usize = 5;
const BORDER_WEIGHTS: [f32; BORDER] = [0.14, 0.14, 0.4472, 0.8172, 0.9727];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarnebackParams {
    /// Number of downscaled levels below the full-resolution image.
    pub levels: usize,
    pub pyr_scale: f64,
    pub win_size: usize,
    pub iterations: usize,
    /// Half-width of the polynomial fitting neighbourhood.
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FarnebackParams {
    fn default() -> Self {
        FarnebackParams {
            levels: 3,
            pyr_scale: 0.5,
            win_size: 15,
            iterations: 3,
            poly_n: 5,
            poly_sigma: 1.1,
        }
    }
}

#[derive(Debug, Clone)]
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Plane {
    fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height * channels],
        }
    }
}

/// Dense displacement field; `dx`/`dy` are row-major per pixel.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f32>,
    pub dy: Vec<f32>,
}

impl FlowField {
    /// Per-frame means of the absolute horizontal and vertical components.
    pub fn mean_abs_components(&self) -> (f64, f64) {
        let n = self.dx.len() as f64;
        let u = self.dx.iter().map(|v| f64::from(v.abs())).sum::<f64>() / n;
        let v = self.dy.iter().map(|v| f64::from(v.abs())).sum::<f64>() / n;
        (u, v)
    }
}

/// Polynomial expansions of one frame at every pyramid level, finest first.
#[derive(Debug, Clone)]
pub struct FlowPyramid {
    width: usize,
    height: usize,
    levels: Vec<Plane>,
}

#[derive(Debug, Clone)]
pub struct Farneback {
    params: FarnebackParams,
    kernels: PolyKernels,
}

impl Farneback {
    pub fn new(params: FarnebackParams) -> Self {
        let kernels = PolyKernels::new(params.poly_n, params.poly_sigma);
        Farneback { params, kernels }
    }

    pub fn params(&self) -> &FarnebackParams {
        &self.params
    }

    fn level_count(&self, width: usize, height: usize) -> usize {
        let mut scale = 1.0;
        let mut k = 0;
        while k < self.params.levels {
            scale *= self.params.pyr_scale;
            if width as f64 * scale < MIN_LEVEL_SIZE || height as f64 * scale < MIN_LEVEL_SIZE {
                break;
            }
            k += 1;
        }
        k
    }

    /// Expands one frame at every level so it can serve as either side of a pair.
    pub fn prepare(&self, frame: &LumaFrame) -> FlowPyramid {
        let (width, height) = (frame.width(), frame.height());
        let source = Plane {
            width,
            height,
            data: frame.samples().iter().map(|&s| f32::from(s)).collect(),
        };
        let levels = (0..=self.level_count(width, height))
            .map(|k| {
                let scale = self.params.pyr_scale.powi(k as i32);
                let sigma = (1.0 / scale - 1.0) * 0.5;
                let ksize = ((sigma * 5.0).round() as usize | 1).max(3);
                let blurred = gaussian_blur(&source, ksize, sigma);
                let w = (width as f64 * scale).round() as usize;
                let h = (height as f64 * scale).round() as usize;
                let resized = resize_bilinear(&blurred, w, h, 1);
                poly_expand(&resized, &self.kernels)
            })
            .collect();
        FlowPyramid { width, height, levels }
    }

    /// Flow from `prev` to `next`.
    pub fn flow(&self, prev: &FlowPyramid, next: &FlowPyramid) -> FlowField {
        assert_eq!(
            (prev.width, prev.height),
            (next.width, next.height),
            "pyramid geometry mismatch"
        );
        let mut flow: Option<Plane> = None;
        for k in (0..prev.levels.len()).rev() {
            let r0 = &prev.levels[k];
            let r1 = &next.levels[k];
            let mut current = match flow.take() {
                None => Plane::zeros(r0.width, r0.height, 2),
                Some(coarse) => {
                    let mut up = resize_bilinear(&coarse, r0.width, r0.height, 2);
                    let factor = (1.0 / self.params.pyr_scale) as f32;
                    up.data.iter_mut().for_each(|v| *v *= factor);
                    up
                }
            };
            let mut m = update_matrices(r0, r1, &current);
            for i in 0..self.params.iterations {
                let blurred = box_blur(&m, self.params.win_size, 5);
                solve_flow(&blurred, &mut current);
                if i + 1 < self.params.iterations {
                    m = update_matrices(r0, r1, &current);
                }
            }
            flow = Some(current);
        }
        let flow = flow.expect("at least one pyramid level");
        let (dx, dy) = flow.data.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
        FlowField {
            width: flow.width,
            height: flow.height,
            dx,
            dy,
        }
    }

    pub fn flow_between(&self, prev: &LumaFrame, next: &LumaFrame) -> FlowField {
        self.flow(&self.prepare(prev), &self.prepare(next))
    }
}

impl Default for Farneback {
    fn default() -> Self {
        Farneback::new(FarnebackParams::default())
    }
}

#[derive(Debug, Clone)]
struct PolyKernels {
    n: usize,
    g: Vec<f32>,
    xg: Vec<f32>,
    xxg: Vec<f32>,
    ig11: f64,
    ig03: f64,
    ig33: f64,
    ig55: f64,
}

impl PolyKernels {
    /// Gaussian applicability kernels and the needed entries of the inverse
    /// Gram matrix of the quadratic basis `{1, x, y, x², y², xy}`.
    fn new(n: usize, sigma: f64) -> Self {
        let sigma = if sigma < f64::from(f32::EPSILON) {
            n as f64 * 0.3
        } else {
            sigma
        };
        let len = 2 * n + 1;
        let raw: Vec<f64> = (0..len)
            .map(|i| {
                let x = i as f64 - n as f64;
                (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let s: f64 = raw.iter().sum();
        let g: Vec<f32> = raw.iter().map(|v| (v / s) as f32).collect();
        let xg: Vec<f32> = (0..len).map(|i| (i as f32 - n as f32) * g[i]).collect();
        let xxg: Vec<f32> = (0..len)
            .map(|i| {
                let x = i as f32 - n as f32;
                x * x * g[i]
            })
            .collect();

        let (mut g00, mut g11, mut g33, mut g55) = (0.0, 0.0, 0.0, 0.0);
        for yi in 0..len {
            let y = yi as f64 - n as f64;
            for xi in 0..len {
                let x = xi as f64 - n as f64;
                let w = f64::from(g[yi]) * f64::from(g[xi]);
                g00 += w;
                g11 += w * x * x;
                g33 += w * x * x * x * x;
                g55 += w * x * x * y * y;
            }
        }
        let mut gram = nalgebra::Matrix6::<f64>::zeros();
        gram[(0, 0)] = g00;
        gram[(1, 1)] = g11;
        gram[(2, 2)] = g11;
        gram[(0, 3)] = g11;
        gram[(0, 4)] = g11;
        gram[(3, 0)] = g11;
        gram[(4, 0)] = g11;
        gram[(3, 3)] = g33;
        gram[(4, 4)] = g33;
        gram[(3, 4)] = g55;
        gram[(4, 3)] = g55;
        gram[(5, 5)] = g55;
        let inv = gram
            .try_inverse()
            .expect("polynomial basis Gram matrix is positive definite");
        PolyKernels {
            n,
            g,
            xg,
            xxg,
            ig11: inv[(1, 1)],
            ig03: inv[(0, 3)],
            ig33: inv[(3, 3)],
            ig55: inv[(5, 5)],
        }
    }
}

/// Per-pixel quadratic coefficients `[b_y, b_x, a_yy, a_xx, a_xy]`.
fn poly_expand(src: &Plane, k: &PolyKernels) -> Plane {
    let (width, height, n) = (src.width, src.height, k.n);
    let mut dst = Plane::zeros(width, height, 5);
    // three vertically convolved channels, padded by n pixels on each side
    let mut row = vec![0f32; (width + 2 * n) * 3];
    let c = |x: usize| (x + n) * 3;

    for y in 0..height {
        let srow0 = &src.data[y * width..(y + 1) * width];
        for x in 0..width {
            row[c(x)] = srow0[x] * k.g[n];
            row[c(x) + 1] = 0.0;
            row[c(x) + 2] = 0.0;
        }
        for kk in 1..=n {
            let (g0, g1, g2) = (k.g[n + kk], k.xg[n + kk], k.xxg[n + kk]);
            let up = y.saturating_sub(kk);
            let down = (y + kk).min(height - 1);
            let r0 = &src.data[up * width..(up + 1) * width];
            let r1 = &src.data[down * width..(down + 1) * width];
            for x in 0..width {
                let p = r0[x] + r1[x];
                row[c(x)] += g0 * p;
                row[c(x) + 1] += g1 * (r1[x] - r0[x]);
                row[c(x) + 2] += g2 * p;
            }
        }
        // replicate the edge pixels into the horizontal padding
        for x in 0..n {
            for ch in 0..3 {
                row[x * 3 + ch] = row[c(0) + ch];
                row[c(width + x) + ch] = row[c(width - 1) + ch];
            }
        }

        let drow = &mut dst.data[y * width * 5..(y + 1) * width * 5];
        for x in 0..width {
            let g0 = f64::from(k.g[n]);
            let mut b1 = f64::from(row[c(x)]) * g0;
            let mut b2 = 0.0;
            let mut b3 = f64::from(row[c(x) + 1]) * g0;
            let mut b4 = 0.0;
            let mut b5 = f64::from(row[c(x) + 2]) * g0;
            let mut b6 = 0.0;
            for kk in 1..=n {
                let right = c(x + kk);
                let left = c(x) - kk * 3;
                let g0 = f64::from(k.g[n + kk]);
                let xg = f64::from(k.xg[n + kk]);
                let tg = f64::from(row[right] + row[left]);
                b1 += tg * g0;
                b4 += tg * f64::from(k.xxg[n + kk]);
                b2 += f64::from(row[right] - row[left]) * xg;
                b3 += f64::from(row[right + 1] + row[left + 1]) * g0;
                b6 += f64::from(row[right + 1] - row[left + 1]) * xg;
                b5 += f64::from(row[right + 2] + row[left + 2]) * g0;
            }
            drow[x * 5] = (b3 * k.ig11) as f32;
            drow[x * 5 + 1] = (b2 * k.ig11) as f32;
            drow[x * 5 + 2] = (b1 * k.ig03 + b5 * k.ig33) as f32;
            drow[x * 5 + 3] = (b1 * k.ig03 + b4 * k.ig33) as f32;
            drow[x * 5 + 4] = (b6 * k.ig55) as f32;
        }
    }
    dst
}

/// Builds the per-pixel normal-equation terms `[g11, g12, g22, h1, h2]` for
/// the current flow estimate.
fn update_matrices(r0: &Plane, r1: &Plane, flow: &Plane) -> Plane {
    let (width, height) = (flow.width, flow.height);
    let mut m = Plane::zeros(width, height, 5);
    let at = |x: usize, y: usize, ch: usize| r1.data[(y * width + x) * 5 + ch];

    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let (dx, dy) = (flow.data[i * 2], flow.data[i * 2 + 1]);
            let fx = x as f32 + dx;
            let fy = y as f32 + dy;
            let p0 = &r0.data[i * 5..i * 5 + 5];

            let (mut r2, mut r3, r4, r5, r6);
            if fx >= 0.0 && fy >= 0.0 && fx <= (width - 1) as f32 && fy <= (height - 1) as f32 {
                let x1 = fx.floor() as usize;
                let y1 = fy.floor() as usize;
                let x2 = (x1 + 1).min(width - 1);
                let y2 = (y1 + 1).min(height - 1);
                let (ax, ay) = (fx - x1 as f32, fy - y1 as f32);
                let a00 = (1.0 - ax) * (1.0 - ay);
                let a01 = ax * (1.0 - ay);
                let a10 = (1.0 - ax) * ay;
                let a11 = ax * ay;
                let s = |ch| a00 * at(x1, y1, ch) + a01 * at(x2, y1, ch) + a10 * at(x1, y2, ch) + a11 * at(x2, y2, ch);
                r2 = s(0);
                r3 = s(1);
                r4 = (p0[2] + s(2)) * 0.5;
                r5 = (p0[3] + s(3)) * 0.5;
                r6 = (p0[4] + s(4)) * 0.25;
            } else {
                r2 = 0.0;
                r3 = 0.0;
                r4 = p0[2];
                r5 = p0[3];
                r6 = p0[4] * 0.5;
            }
            r2 = (p0[0] - r2) * 0.5;
            r3 = (p0[1] - r3) * 0.5;
            r2 += r4 * dy + r6 * dx;
            r3 += r6 * dy + r5 * dx;

            let mut out = [
                r4 * r4 + r6 * r6,
                (r4 + r5) * r6,
                r5 * r5 + r6 * r6,
                r4 * r2 + r6 * r3,
                r6 * r2 + r5 * r3,
            ];
            if x < BORDER || y < BORDER || x >= width.saturating_sub(BORDER) || y >= height.saturating_sub(BORDER) {
                let edge = |pos: usize, len: usize| {
                    let mut s = 1.0;
                    if pos < BORDER {
                        s *= BORDER_WEIGHTS[pos];
                    }
                    if pos + BORDER >= len {
                        s *= BORDER_WEIGHTS[len - pos - 1];
                    }
                    s
                };
                let scale = edge(x, width) * edge(y, height);
                // the terms are quadratic in the scaled coefficients
                let s2 = scale * scale;
                out.iter_mut().for_each(|v| *v *= s2);
            }
            m.data[i * 5..i * 5 + 5].copy_from_slice(&out);
        }
    }
    m
}

fn solve_flow(m: &Plane, flow: &mut Plane) {
    for (terms, d) in m.data.chunks_exact(5).zip(flow.data.chunks_exact_mut(2)) {
        let [g11, g12, g22, h1, h2] = [terms[0], terms[1], terms[2], terms[3], terms[4]].map(f64::from);
        let idet = 1.0 / (g11 * g22 - g12 * g12 + 1e-3);
        d[0] = ((g11 * h2 - g12 * h1) * idet) as f32;
        d[1] = ((g22 * h1 - g12 * h2) * idet) as f32;
    }
}

/// Box filter with replicated borders, normalised by `size²`.
fn box_blur(src: &Plane, size: usize, channels: usize) -> Plane {
    let (width, height) = (src.width, src.height);
    let half = size / 2;
    let scale = 1.0 / (size * size) as f64;
    let stride = width * channels;

    let mut vsum = vec![0f64; stride];
    let mut tmp = vec![0f64; stride];
    let mut dst = Plane::zeros(width, height, channels);
    for y in 0..height {
        vsum.iter_mut().for_each(|v| *v = 0.0);
        for dy in 0..=2 * half {
            let yy = (y + dy).saturating_sub(half).min(height - 1);
            for (acc, &v) in vsum.iter_mut().zip(&src.data[yy * stride..(yy + 1) * stride]) {
                *acc += f64::from(v);
            }
        }
        for x in 0..width {
            for ch in 0..channels {
                let mut acc = 0.0;
                for dx in 0..=2 * half {
                    let xx = (x + dx).saturating_sub(half).min(width - 1);
                    acc += vsum[xx * channels + ch];
                }
                tmp[x * channels + ch] = acc;
            }
        }
        for (d, &t) in dst.data[y * stride..(y + 1) * stride].iter_mut().zip(&tmp) {
            *d = (t * scale) as f32;
        }
    }
    dst
}

/// Separable Gaussian blur with reflect-101 borders. A non-positive sigma
/// selects the fixed 3-tap binomial kernel.
fn gaussian_blur(src: &Plane, ksize: usize, sigma: f64) -> Plane {
    let kernel: Vec<f64> = if sigma <= 0.0 && ksize == 3 {
        vec![0.25, 0.5, 0.25]
    } else {
        let sigma = if sigma > 0.0 {
            sigma
        } else {
            0.3 * ((ksize as f64 - 1.0) * 0.5 - 1.0) + 0.8
        };
        let c = (ksize as f64 - 1.0) / 2.0;
        let raw: Vec<f64> = (0..ksize)
            .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    };
    let half = (ksize / 2) as isize;
    let (width, height) = (src.width, src.height);

    let mut horiz = vec![0f32; width * height];
    for y in 0..height {
        let row = &src.data[y * width..(y + 1) * width];
        for x in 0..width {
            let acc: f64 = kernel
                .iter()
                .enumerate()
                .map(|(i, &k)| k * f64::from(row[reflect101(x as isize + i as isize - half, width)]))
                .sum();
            horiz[y * width + x] = acc as f32;
        }
    }
    let mut out = Plane::zeros(width, height, 1);
    for y in 0..height {
        for x in 0..width {
            let acc: f64 = kernel
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let yy = reflect101(y as isize + i as isize - half, height);
                    k * f64::from(horiz[yy * width + x])
                })
                .sum();
            out.data[y * width + x] = acc as f32;
        }
    }
    out
}

fn reflect101(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let len = len as isize;
    let mut i = i;
    while i < 0 || i >= len {
        i = if i < 0 { -i } else { 2 * len - 2 - i };
    }
    i as usize
}

/// Bilinear resize with pixel-centre alignment and clamped borders.
fn resize_bilinear(src: &Plane, width: usize, height: usize, channels: usize) -> Plane {
    if src.width == width && src.height == height {
        return src.clone();
    }
    let sx = src.width as f64 / width as f64;
    let sy = src.height as f64 / height as f64;
    let coord = |d: usize, s: f64, len: usize| {
        let f = ((d as f64 + 0.5) * s - 0.5).max(0.0);
        let i0 = (f.floor() as usize).min(len - 1);
        let i1 = (i0 + 1).min(len - 1);
        let a = (f - i0 as f64).clamp(0.0, 1.0) as f32;
        (i0, i1, a)
    };
    let mut dst = Plane::zeros(width, height, channels);
    for y in 0..height {
        let (y0, y1, ay) = coord(y, sy, src.height);
        for x in 0..width {
            let (x0, x1, ax) = coord(x, sx, src.width);
            for ch in 0..channels {
                let p = |xx: usize, yy: usize| src.data[(yy * src.width + xx) * channels + ch];
                let top = p(x0, y0) * (1.0 - ax) + p(x1, y0) * ax;
                let bottom = p(x0, y1) * (1.0 - ax) + p(x1, y1) * ax;
                dst.data[(y * width + x) * channels + ch] = top * (1.0 - ay) + bottom * ay;
            }
        }
    }
    dst
}
