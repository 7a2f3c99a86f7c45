//! Grayscale images and Canny edge detection.
//!
//! Pipeline: Gaussian smoothing, Sobel gradients, non-maximum suppression
//! along the gradient direction quantized to four bins, a double threshold
//! relative to the largest gradient magnitude, and hysteresis by 8-connected
//! flood fill from strong pixels.

use crate::error::{Error, Result};
use crate::geometry::{EdgeMap, Point2, PointSet2, SetRole};

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidImage(format!(
                "pixel {i} has value {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn transpose(&self) -> GrayImage {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for x in 0..self.width {
            for y in 0..self.height {
                pixels.push(self.get(x, y));
            }
        }
        GrayImage {
            width: self.height,
            height: self.width,
            pixels,
        }
    }
}

/// Per-pixel Sobel gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)`, in `(-π, π]`.
    pub direction: Vec<f64>,
}

impl GradientField {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub sigma: f64,
    /// Weak threshold as a fraction of the largest gradient magnitude.
    pub low: f64,
    /// Strong threshold as a fraction of the largest gradient magnitude.
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 0.1,
            high: 0.2,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.low > 0.0 && self.low < self.high) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy 0 < low < high, got low={} high={}",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// Width of the frame around the image where no edges are reported.
    pub fn border(&self) -> usize {
        kernel_radius(self.sigma) + 1
    }
}

pub(crate) fn kernel_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = kernel_radius(sigma) as isize;
    let two_s2 = 2.0 * sigma * sigma;
    let taps: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / two_s2).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with edge-clamped borders.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (img.width, img.height);

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                acc += k * img.clamped(x as isize + t as isize - r, y as isize);
            }
            horiz[y * w + x] = acc;
        }
    }
    let tmp = GrayImage {
        width: w,
        height: h,
        pixels: horiz,
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                acc += k * tmp.clamped(x as isize, y as isize + t as isize - r);
            }
            out[y * w + x] = acc.clamp(0.0, 1.0);
        }
    }
    Ok(GrayImage {
        width: w,
        height: h,
        pixels: out,
    })
}

/// Sobel gradient with edge-clamped borders.
pub fn gradient(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let n = w * h;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut magnitude = vec![0.0; n];
    let mut direction = vec![0.0; n];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| img.clamped(x + dx, y + dy);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let i = y as usize * w + x as usize;
            gx[i] = sx;
            gy[i] = sy;
            magnitude[i] = (sx * sx + sy * sy).sqrt();
            direction[i] = sy.atan2(sx);
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
        direction,
    })
}

/// Unit pixel step along the gradient direction quantized to 0°, 45°, 90°
/// or 135° (image axes, `v` down).
pub fn quantized_step(theta: f64) -> (isize, isize) {
    use std::f64::consts::PI;
    let mut a = theta;
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    if !(PI / 8.0..7.0 * PI / 8.0).contains(&a) {
        (1, 0)
    } else if a < 3.0 * PI / 8.0 {
        (1, 1)
    } else if a < 5.0 * PI / 8.0 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Non-maximum suppression. A pixel survives when its magnitude is positive,
/// strictly greater than the neighbor behind it and at least the neighbor
/// ahead of it along the quantized direction; the asymmetric tie rule keeps
/// one pixel out of an equal-magnitude pair.
pub fn non_max_suppression(field: &GradientField) -> Vec<bool> {
    let (w, h) = (field.width as isize, field.height as isize);
    let mag = |x: isize, y: isize| {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        field.magnitude[y * field.width + x]
    };
    let mut keep = vec![false; field.magnitude.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = field.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = quantized_step(field.direction[i]);
            let ahead = mag(x + dx, y + dy);
            let behind = mag(x - dx, y - dy);
            keep[i] = m > behind && m >= ahead;
        }
    }
    keep
}

/// Full Canny detector. Output points are pixel centers in row-major order.
pub fn canny(img: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    if img.width < 3 || img.height < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let smoothed = gaussian_smooth(img, params.sigma)?;
    let field = gradient(&smoothed)?;
    let mask = canny_mask(&field, params);
    let mut points = Vec::new();
    for y in 0..field.height {
        for x in 0..field.width {
            if mask[y * field.width + x] {
                points.push(Point2::new(x as f64, y as f64));
            }
        }
    }
    PointSet2::new(points, SetRole::EdgeMap)
}

/// Thresholding and hysteresis on an already computed gradient field.
pub fn canny_mask(field: &GradientField, params: &CannyParams) -> Vec<bool> {
    let (w, h) = (field.width, field.height);
    let gmax = field.max_magnitude();
    let mut out = vec![false; w * h];
    if gmax <= 0.0 {
        return out;
    }
    let border = params.border();
    let interior = |x: usize, y: usize| x >= border && y >= border && x + border < w && y + border < h;

    let nms = non_max_suppression(field);
    let low = params.low * gmax;
    let high = params.high * gmax;
    let weak: Vec<bool> = (0..w * h)
        .map(|i| nms[i] && interior(i % w, i / w) && field.magnitude[i] >= low)
        .collect();

    let mut stack: Vec<usize> = (0..w * h)
        .filter(|&i| weak[i] && field.magnitude[i] >= high)
        .collect();
    for &i in &stack {
        out[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if weak[j] && !out[j] {
                    out[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(w: usize, h: usize, col: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x >= col { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn constant_is_preserved_by_smoothing() {
        let img = GrayImage::constant(20, 15, 0.37).unwrap();
        let s = gaussian_smooth(&img, 1.4).unwrap();
        for v in s.pixels() {
            assert!((v - 0.37).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_response_is_kernel() {
        let (w, h) = (41, 41);
        let img = GrayImage::from_fn(w, h, |x, y| if x == 20 && y == 20 { 1.0 } else { 0.0 }).unwrap();
        let sigma = 1.4;
        let s = gaussian_smooth(&img, sigma).unwrap();
        let k = gaussian_kernel(sigma);
        let r = k.len() / 2;
        for dy in 0..k.len() {
            for dx in 0..k.len() {
                let v = s.get(20 + dx - r, 20 + dy - r);
                assert!((v - k[dx] * k[dy]).abs() < 1e-15);
            }
        }
        let total: f64 = s.pixels().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smoothed_step_is_a_monotone_ramp() {
        let s = gaussian_smooth(&step(30, 10, 15), 1.4).unwrap();
        for y in 0..10 {
            for x in 1..30 {
                assert!(s.get(x, y) >= s.get(x - 1, y));
            }
            assert!(s.get(14, y) > 0.0 && s.get(15, y) < 1.0);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = gradient(&GrayImage::constant(5, 5, 0.5).unwrap()).unwrap();
        assert!(f.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn gradient_of_vertical_step() {
        let f = gradient(&step(10, 6, 5)).unwrap();
        for y in 0..6 {
            for x in 0..10 {
                let i = f.at(x, y);
                if x == 4 || x == 5 {
                    assert_eq!(f.magnitude[i], 4.0);
                    assert_eq!(f.direction[i], 0.0);
                } else {
                    assert_eq!(f.magnitude[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_transposes() {
        let img = GrayImage::from_fn(9, 7, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        let a = gradient(&img).unwrap();
        let b = gradient(&img.transpose()).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(b.gy[b.at(y, x)], a.gx[a.at(x, y)]);
                assert_eq!(b.gx[b.at(y, x)], a.gy[a.at(x, y)]);
            }
        }
    }

    #[test]
    fn too_small() {
        let img = GrayImage::constant(2, 10, 0.0).unwrap();
        assert!(matches!(gradient(&img), Err(Error::ImageTooSmall { .. })));
        assert!(matches!(
            canny(&img, &CannyParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn constant_has_no_edges() {
        let e = canny(&GrayImage::constant(32, 32, 0.8).unwrap(), &CannyParams::default()).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn vertical_step_gives_one_edge_per_row() {
        let (w, h, c) = (40, 30, 20);
        let params = CannyParams::default();
        let e = canny(&step(w, h, c), &params).unwrap();
        let b = params.border();
        assert_eq!(e.len(), h - 2 * b);
        for p in e.points() {
            assert!((p.u - c as f64).abs() <= 1.0 || (p.u - (c as f64 - 1.0)).abs() <= 1.0);
            assert!(p.u >= (c - 1) as f64 && p.u <= (c + 1) as f64);
        }
    }

    #[test]
    fn shift_equivariance() {
        let blob = |ox: usize| {
            GrayImage::from_fn(60, 40, move |x, y| {
                let (dx, dy) = (x as f64 - (25 + ox) as f64, y as f64 - 20.0);
                if dx * dx / 64.0 + dy * dy / 36.0 <= 1.0 {
                    0.9
                } else {
                    0.1
                }
            })
            .unwrap()
        };
        let p = CannyParams::default();
        let a = canny(&blob(0), &p).unwrap();
        let b = canny(&blob(5), &p).unwrap();
        assert!(!a.is_empty());
        let shifted: Vec<Point2> = a.points().iter().map(|q| Point2::new(q.u + 5.0, q.v)).collect();
        assert_eq!(shifted, b.points());
    }

    #[test]
    fn bad_params() {
        let img = GrayImage::constant(8, 8, 0.0).unwrap();
        let p = CannyParams {
            sigma: 1.0,
            low: 0.3,
            high: 0.2,
        };
        assert!(matches!(canny(&img, &p), Err(Error::InvalidParameter(_))));
    }
}
