//! Brushstroke rendering onto a grayscale canvas.
//!
//! A stroke is a quadratic Bézier with a thickness and an ink
//! intensity, all eight parameters normalized to [0,1]. Rasterization
//! builds a distance field to the curve (densely sampled at 256
//! points, inclusive of both endpoints) and applies a half-pixel soft
//! edge:
//!
//!   value = intensity · clamp(radius + 0.5 − dist, 0, 1)
//!   radius = 0.5 + thickness · size/8      (pixels)
//!
//! Strokes composite onto the canvas with a per-pixel max by default,
//! which makes rendering order-invariant, idempotent, and monotone.
//! An additive-clamp mode is available behind [`Compositing`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of parameter samples used for the curve distance field.
/// Sub-pixel accurate for canvases up to 64 px.
const CURVE_SAMPLES: usize = 256;

/// Minimum supported canvas side, in pixels.
pub const MIN_CANVAS_SIZE: usize = 8;

/// One parametrized mark: quadratic Bézier endpoints/control point in
/// normalized coordinates, plus thickness and ink intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Brushstroke {
    pub x0: f64,
    pub y0: f64,
    pub cx: f64,
    pub cy: f64,
    pub x1: f64,
    pub y1: f64,
    pub thickness: f64,
    pub intensity: f64,
}

impl Brushstroke {
    /// Build from `[x0, y0, cx, cy, x1, y1, thickness, intensity]`,
    /// validating that every parameter lies in [0,1].
    pub fn new(params: [f64; 8]) -> Result<Self> {
        for (i, p) in params.iter().enumerate() {
            if !(0.0..=1.0).contains(p) || !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "stroke parameter {i} = {p} outside [0,1]"
                )));
            }
        }
        Ok(Brushstroke {
            x0: params[0],
            y0: params[1],
            cx: params[2],
            cy: params[3],
            x1: params[4],
            y1: params[5],
            thickness: params[6],
            intensity: params[7],
        })
    }

    pub fn params(&self) -> [f64; 8] {
        [
            self.x0,
            self.y0,
            self.cx,
            self.cy,
            self.x1,
            self.y1,
            self.thickness,
            self.intensity,
        ]
    }

    /// Curve point at parameter t, in normalized coordinates.
    fn at(&self, t: f64) -> (f64, f64) {
        let u = 1.0 - t;
        let x = u * u * self.x0 + 2.0 * u * t * self.cx + t * t * self.x1;
        let y = u * u * self.y0 + 2.0 * u * t * self.cy + t * t * self.y1;
        (x, y)
    }
}

/// An ordered stroke sequence; `terminated_early` records whether the
/// sender cut the message short of the length cap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Message {
    pub strokes: Vec<Brushstroke>,
    pub terminated_early: bool,
}

impl Message {
    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }
}

/// Grayscale float raster in [0,1]; 0 is blank, 1 is full ink.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Canvas {
    /// Blank square canvas.
    pub fn blank(size: usize) -> Self {
        Canvas {
            width: size,
            height: size,
            pixels: vec![0.0; size * size],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{}x{} canvas needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(Canvas {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixel buffer.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    /// Sum of all pixel values.
    pub fn ink_mass(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

/// How a new stroke combines with ink already on the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compositing {
    /// Per-pixel max: order-invariant and idempotent.
    #[default]
    Max,
    /// Per-pixel saturating add.
    Additive,
}

fn check_size(size: usize) -> Result<()> {
    if size < MIN_CANVAS_SIZE {
        return Err(Error::InvalidInput(format!(
            "canvas size {size} below minimum {MIN_CANVAS_SIZE}"
        )));
    }
    Ok(())
}

/// Rasterize one stroke onto a blank square canvas.
pub fn rasterize_stroke(stroke: &Brushstroke, size: usize) -> Result<Canvas> {
    Brushstroke::new(stroke.params())?;
    check_size(size)?;

    let mut canvas = Canvas::blank(size);
    if stroke.intensity == 0.0 {
        return Ok(canvas);
    }
    let radius = 0.5 + stroke.thickness * (size as f64 / 8.0);
    let reach = radius + 0.5;

    // Squared distance field, updated by splatting each curve sample
    // over the pixels it can reach. A pixel untouched by every sample
    // is farther than `reach` from the whole curve, so its ink is 0.
    let mut dist_sq = vec![f64::INFINITY; size * size];
    let half = reach.ceil() as isize + 1;
    for k in 0..CURVE_SAMPLES {
        let t = k as f64 / (CURVE_SAMPLES - 1) as f64;
        let (nx, ny) = stroke.at(t);
        let px = nx * size as f64;
        let py = ny * size as f64;
        let col0 = ((px - 0.5).floor() as isize - half).max(0);
        let col1 = ((px - 0.5).ceil() as isize + half).min(size as isize - 1);
        let row0 = ((py - 0.5).floor() as isize - half).max(0);
        let row1 = ((py - 0.5).ceil() as isize + half).min(size as isize - 1);
        for row in row0..=row1 {
            let cy = row as f64 + 0.5;
            for col in col0..=col1 {
                let cx = col as f64 + 0.5;
                let d2 = (cx - px) * (cx - px) + (cy - py) * (cy - py);
                let cell = &mut dist_sq[row as usize * size + col as usize];
                if d2 < *cell {
                    *cell = d2;
                }
            }
        }
    }

    for (p, d2) in canvas.pixels.iter_mut().zip(&dist_sq) {
        if d2.is_finite() {
            let coverage = (reach - d2.sqrt()).clamp(0.0, 1.0);
            *p = stroke.intensity * coverage;
        }
    }
    Ok(canvas)
}

/// Composite one stroke onto an existing canvas (per-pixel max).
/// The input canvas is left untouched.
pub fn render_incremental(canvas: &Canvas, stroke: &Brushstroke) -> Result<Canvas> {
    render_incremental_with(canvas, stroke, Compositing::Max)
}

pub fn render_incremental_with(
    canvas: &Canvas,
    stroke: &Brushstroke,
    mode: Compositing,
) -> Result<Canvas> {
    if canvas.width != canvas.height {
        return Err(Error::Shape(format!(
            "non-square canvas {}x{}",
            canvas.width, canvas.height
        )));
    }
    let layer = rasterize_stroke(stroke, canvas.width)?;
    let mut out = canvas.clone();
    match mode {
        Compositing::Max => {
            for (o, l) in out.pixels.iter_mut().zip(&layer.pixels) {
                if *l > *o {
                    *o = *l;
                }
            }
        }
        Compositing::Additive => {
            for (o, l) in out.pixels.iter_mut().zip(&layer.pixels) {
                *o = (*o + *l).min(1.0);
            }
        }
    }
    Ok(out)
}

/// Render a whole message: left fold of [`render_incremental`] over
/// the strokes, starting from a blank canvas.
pub fn render(message: &Message, size: usize) -> Result<Canvas> {
    render_with(message, size, Compositing::Max)
}

pub fn render_with(message: &Message, size: usize, mode: Compositing) -> Result<Canvas> {
    check_size(size)?;
    let mut canvas = Canvas::blank(size);
    for stroke in &message.strokes {
        canvas = render_incremental_with(&canvas, stroke, mode)?;
    }
    Ok(canvas)
}

/// Dequantize discrete action bins to stroke parameters: bin b of n
/// maps to (b + 0.5) / n.
pub fn stroke_from_action(bins: &[usize], bin_counts: &[usize]) -> Result<Brushstroke> {
    if bins.len() != 8 || bin_counts.len() != 8 {
        return Err(Error::InvalidInput(format!(
            "expected 8 bins and 8 counts, got {} and {}",
            bins.len(),
            bin_counts.len()
        )));
    }
    let mut params = [0.0; 8];
    for i in 0..8 {
        if bin_counts[i] == 0 || bins[i] >= bin_counts[i] {
            return Err(Error::InvalidInput(format!(
                "bin {} out of range for {} bins (parameter {i})",
                bins[i], bin_counts[i]
            )));
        }
        params[i] = (bins[i] as f64 + 0.5) / bin_counts[i] as f64;
    }
    Brushstroke::new(params)
}
