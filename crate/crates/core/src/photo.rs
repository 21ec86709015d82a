//! Six-parameter photo color enhancement and the CIEDE2000 mean per-pixel
//! distance used to compare enhanced photos.
//!
//! The enhancement stages run in a fixed order, each clamped to `[0,1]`:
//!
//! 1. color balance: `ch += 0.3 * (2 p_ch - 1)`
//! 2. brightness: `ch *= 2^(2 p_b - 1)`
//! 3. contrast: `ch = (ch - 0.5) * 2^(2 p_c - 1) + 0.5`
//! 4. saturation: `ch = lum + (ch - lum) * 2^(2 p_s - 1)` with Rec. 601 luma
//!
//! A value of 0.5 on every axis leaves the image untouched.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::{DesignPoint, Error, Result};

pub type Rgb = [f64; 3];
pub type Lab = [f64; 3];

/// Row-major RGB image with channels in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::argument("image dimensions must be positive"));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::argument(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Range("pixel channel outside [0, 1]".into()));
        }
        Ok(Self { width, height, pixels })
    }

    /// Uniformly colored image.
    pub fn filled(width: u32, height: u32, rgb: Rgb) -> Result<Self> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    /// Deterministic colorful scene with smooth gradients and a few soft
    /// blobs, quantized to 8 bits so it survives a PNG round trip exactly.
    pub fn test_pattern(width: u32, height: u32) -> Self {
        let blobs = [
            ([0.3, 0.35], [0.85, 0.45, 0.25]),
            ([0.7, 0.6], [0.2, 0.55, 0.8]),
            ([0.45, 0.8], [0.35, 0.75, 0.3]),
        ];
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for yi in 0..height {
            for xi in 0..width {
                let x = (xi as f64 + 0.5) / width as f64;
                let y = (yi as f64 + 0.5) / height as f64;
                let sky = [0.45 + 0.2 * x, 0.5 + 0.15 * (1.0 - y), 0.55 + 0.25 * (1.0 - y)];
                let mut px = sky.map(|c| c * (0.6 + 0.3 * y));
                for (c, col) in &blobs {
                    let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
                    let w = (-d2 / 0.02).exp();
                    for k in 0..3 {
                        px[k] = px[k] * (1.0 - w) + col[k] * w;
                    }
                }
                pixels.push(px.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() / 255.0));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn from_rgb8(img: &RgbImage) -> Result<Self> {
        let pixels = img.pixels().map(|p| p.0.map(|c| c as f64 / 255.0)).collect();
        Self::new(img.width(), img.height(), pixels)
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let raw = self
            .pixels
            .iter()
            .flat_map(|p| p.map(|c| (c * 255.0).round() as u8))
            .collect();
        RgbImage::from_raw(self.width, self.height, raw).expect("buffer matches dimensions")
    }

    /// Reads a PNG or PPM file (chosen by extension or content).
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_rgb8(&img.to_rgb8())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes).map_err(|e| Error::Io(e.to_string()))?;
        Self::from_rgb8(&img.to_rgb8())
    }

    /// Writes PNG or PPM depending on the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding does not fail");
        out.into_inner()
    }
}

/// The six enhancement parameters, each in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhanceParams {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub balance_r: f64,
    pub balance_g: f64,
    pub balance_b: f64,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl EnhanceParams {
    pub const DIM: usize = 6;

    pub fn identity() -> Self {
        Self::from_array([0.5; 6])
    }

    fn from_array(v: [f64; 6]) -> Self {
        Self { brightness: v[0], contrast: v[1], saturation: v[2], balance_r: v[3], balance_g: v[4], balance_b: v[5] }
    }

    /// `[brightness, contrast, saturation, balance_r, balance_g, balance_b]`.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; 6] = v
            .try_into()
            .map_err(|_| Error::dimension(Self::DIM, v.len()))?;
        if let Some(x) = arr.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Range(format!("enhancement parameter {x} is outside [0, 1]")));
        }
        Ok(Self::from_array(arr))
    }

    pub fn from_point(x: &DesignPoint) -> Result<Self> {
        Self::from_slice(x.coords())
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.brightness, self.contrast, self.saturation, self.balance_r, self.balance_g, self.balance_b]
    }
}

fn gain(p: f64) -> f64 {
    (2.0 * p - 1.0).exp2()
}

fn enhance_pixel(px: Rgb, p: &EnhanceParams) -> Rgb {
    let mut c = px;
    for (ch, bal) in c.iter_mut().zip([p.balance_r, p.balance_g, p.balance_b]) {
        *ch = (*ch + 0.3 * (2.0 * bal - 1.0)).clamp(0.0, 1.0);
    }
    let b = gain(p.brightness);
    for ch in &mut c {
        *ch = (*ch * b).clamp(0.0, 1.0);
    }
    // Unit gains are skipped: (ch - 0.5) + 0.5 is not always ch in floating
    // point.
    let k = gain(p.contrast);
    if k != 1.0 {
        for ch in &mut c {
            *ch = ((*ch - 0.5) * k + 0.5).clamp(0.0, 1.0);
        }
    }
    let s = gain(p.saturation);
    if s != 1.0 {
        let lum = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
        for ch in &mut c {
            *ch = (lum + (*ch - lum) * s).clamp(0.0, 1.0);
        }
    }
    c
}

pub fn enhance(img: &Image, p: &EnhanceParams) -> Image {
    Image {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&px| enhance_pixel(px, p)).collect(),
    }
}

// sRGB primaries, D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB (D65) to CIELAB. The reference white is the image of RGB white
/// under the same matrix, so `(1,1,1)` maps to `L = 100, a = b = 0`.
pub fn rgb_to_lab(rgb: Rgb) -> Lab {
    let lin = rgb.map(srgb_to_linear);
    let xyz = RGB_TO_XYZ.map(|row| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]);
    let white = RGB_TO_XYZ.map(|row| row[0] + row[1] + row[2]);
    let [fx, fy, fz] = [lab_f(xyz[0] / white[0]), lab_f(xyz[1] / white[1]), lab_f(xyz[2] / white[2])];
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// CIEDE2000 color difference with unit weighting factors.
pub fn ciede2000(lab1: Lab, lab2: Lab) -> f64 {
    let [l1, a1, b1] = lab1;
    let [l2, a2, b2] = lab2;
    const POW25_7: f64 = 6_103_515_625.0; // 25^7

    let c_bar = 0.5 * (a1.hypot(b1) + a2.hypot(b2));
    let c7 = c_bar.powi(7);
    let g = 0.5 * (1.0 - (c7 / (c7 + POW25_7)).sqrt());
    let a1p = (1.0 + g) * a1;
    let a2p = (1.0 + g) * a2;
    let c1p = a1p.hypot(b1);
    let c2p = a2p.hypot(b2);
    let hue = |b: f64, a: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            b.atan2(a).to_degrees().rem_euclid(360.0)
        }
    };
    let h1p = hue(b1, a1p);
    let h2p = hue(b2, a2p);

    let dl = l2 - l1;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;
    let dh_angle = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dh = 2.0 * chroma_product.sqrt() * (dh_angle.to_radians() / 2.0).sin();

    let l_bar = 0.5 * (l1 + l2);
    let cp_bar = 0.5 * (c1p + c2p);
    let h_bar = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        0.5 * (h1p + h2p)
    } else if h1p + h2p < 360.0 {
        0.5 * (h1p + h2p + 360.0)
    } else {
        0.5 * (h1p + h2p - 360.0)
    };

    let t = 1.0 - 0.17 * (h_bar - 30.0).to_radians().cos()
        + 0.24 * (2.0 * h_bar).to_radians().cos()
        + 0.32 * (3.0 * h_bar + 6.0).to_radians().cos()
        - 0.20 * (4.0 * h_bar - 63.0).to_radians().cos();
    let d_theta = 30.0 * (-((h_bar - 275.0) / 25.0).powi(2)).exp();
    let cp7 = cp_bar.powi(7);
    let r_c = 2.0 * (cp7 / (cp7 + POW25_7)).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * cp_bar;
    let s_h = 1.0 + 0.015 * cp_bar * t;
    let r_t = -(2.0 * d_theta).to_radians().sin() * r_c;

    let (tl, tc, th) = (dl / s_l, dc / s_c, dh / s_h);
    (tl * tl + tc * tc + th * th + r_t * tc * th).max(0.0).sqrt()
}

/// Mean CIEDE2000 difference over corresponding pixels.
pub fn mean_perceptual_distance(a: &Image, b: &Image) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::argument(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let total: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| ciede2000(rgb_to_lab(*p), rgb_to_lab(*q)))
        .sum();
    Ok(total / a.pixels.len() as f64)
}
