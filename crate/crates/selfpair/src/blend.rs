//! Fourier-domain blending of a copy-pasted image with its original, plus the
//! Gaussian-alpha alternative. Amplitude inside the low-frequency mask comes
//! from the original, everything else (and all phase) from the pasted image.

use crate::error::{Error, Result};
use crate::raster::{RasterImage, SemanticMask};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Unnormalized forward transform of one channel, DC at (0,0), row-major.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub coefficients: Vec<Complex<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendMode {
    None,
    Gaussian,
    Fourier,
}

/// Blend mode plus its parameters: beta sizes the low-frequency mask,
/// sigma is the Gaussian alpha falloff.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlendSpec {
    pub mode: BlendMode,
    pub beta: f64,
    pub sigma: f64,
}

impl Default for BlendSpec {
    fn default() -> Self {
        Self {
            mode: BlendMode::Fourier,
            beta: 0.05,
            sigma: 2.0,
        }
    }
}

impl BlendSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "beta must be in [0, 1], got {}",
                self.beta
            )));
        }
        if self.mode == BlendMode::Gaussian && self.sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

fn fft_pass(grid: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for row in grid.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex::default(); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = grid[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            grid[r * width + c] = column[r];
        }
    }
}

/// Forward 2D DFT of a real grid, unnormalized.
pub fn fft2(channel: &[f64], width: usize, height: usize) -> Spectrum {
    assert_eq!(channel.len(), width * height);
    let mut grid: Vec<Complex<f64>> = channel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_pass(&mut grid, width, height, false);
    Spectrum {
        width,
        height,
        coefficients: grid,
    }
}

/// Inverse transform back to a real grid (imaginary parts discarded),
/// normalized by 1/(H*W).
pub fn ifft2(spectrum: &Spectrum) -> Vec<f64> {
    let mut grid = spectrum.coefficients.clone();
    fft_pass(&mut grid, spectrum.width, spectrum.height, true);
    let scale = 1.0 / (spectrum.width * spectrum.height) as f64;
    grid.into_iter().map(|c| c.re * scale).collect()
}

/// Polar decomposition. Zero coefficients get phase 0 by convention.
pub fn amp_phase(spectrum: &Spectrum) -> (Vec<f64>, Vec<f64>) {
    let mut amp = Vec::with_capacity(spectrum.coefficients.len());
    let mut phase = Vec::with_capacity(spectrum.coefficients.len());
    for c in &spectrum.coefficients {
        let a = c.norm();
        amp.push(a);
        phase.push(if a == 0.0 { 0.0 } else { c.arg() });
    }
    (amp, phase)
}

/// Rebuilds a spectrum from amplitude and phase grids.
pub fn recompose(width: usize, height: usize, amp: &[f64], phase: &[f64]) -> Spectrum {
    let coefficients = amp
        .iter()
        .zip(phase)
        .map(|(&a, &p)| Complex::from_polar(a, p))
        .collect();
    Spectrum {
        width,
        height,
        coefficients,
    }
}

/// Low-frequency mask of relative size beta. In centered coordinates the
/// mask is 1 on [center-b, center+b) per axis with b = floor(beta*dim/2);
/// returned in unshifted layout matching Spectrum indexing.
pub fn beta_mask(height: usize, width: usize, beta: f64) -> Vec<u8> {
    let ch = height / 2;
    let cw = width / 2;
    let bh = (beta * height as f64 / 2.0).floor() as i64;
    let bw = (beta * width as f64 / 2.0).floor() as i64;
    let mut mask = vec![0u8; width * height];
    for r in 0..height {
        for c in 0..width {
            // shifted position of this unshifted index
            let sr = ((r + ch) % height) as i64;
            let sc = ((c + cw) % width) as i64;
            let in_rows = sr >= ch as i64 - bh && sr < ch as i64 + bh;
            let in_cols = sc >= cw as i64 - bw && sc < cw as i64 + bw;
            if in_rows && in_cols {
                mask[r * width + c] = 1;
            }
        }
    }
    mask
}

/// Float-domain Fourier blend of one channel: amplitude mixed by the beta
/// mask, phase taken from `cp`.
fn fourier_blend_channel(
    original: &[f64],
    cp: &[f64],
    width: usize,
    height: usize,
    mask: &[u8],
) -> Vec<f64> {
    let spec_orig = fft2(original, width, height);
    let spec_cp = fft2(cp, width, height);
    let (amp_orig, _) = amp_phase(&spec_orig);
    let (amp_cp, phase_cp) = amp_phase(&spec_cp);
    let amp: Vec<f64> = amp_orig
        .iter()
        .zip(&amp_cp)
        .zip(mask)
        .map(|((&ao, &ac), &m)| if m == 1 { ao } else { ac })
        .collect();
    ifft2(&recompose(width, height, &amp, &phase_cp))
}

/// Fourier blend before quantization: per-channel float grids.
pub fn fourier_blend_float(
    original: &RasterImage,
    cp: &RasterImage,
    beta: f64,
) -> Result<Vec<Vec<f64>>> {
    if !original.same_shape(cp) {
        return Err(Error::DimensionMismatch(
            "fourier_blend inputs differ in shape".into(),
        ));
    }
    let (w, h) = (original.width(), original.height());
    let mask = beta_mask(h, w, beta);
    Ok((0..original.channels())
        .map(|ch| {
            fourier_blend_channel(&original.channel_f64(ch), &cp.channel_f64(ch), w, h, &mask)
        })
        .collect())
}

/// Fourier blend, clamped and rounded to 8 bits once at the end.
pub fn fourier_blend(original: &RasterImage, cp: &RasterImage, beta: f64) -> Result<RasterImage> {
    let channels = fourier_blend_float(original, cp, beta)?;
    quantize(original, &channels)
}

fn quantize(shape: &RasterImage, channels: &[Vec<f64>]) -> Result<RasterImage> {
    let (w, h, ch) = (shape.width(), shape.height(), shape.channels());
    let mut data = vec![0u8; w * h * ch];
    for (k, grid) in channels.iter().enumerate() {
        for (px, &v) in grid.iter().enumerate() {
            data[px * ch + k] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RasterImage::new(w, h, ch, data)
}

/// 1D Gaussian kernel truncated at 3*sigma, normalized to sum 1.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }
    kernel
}

/// Separable Gaussian blur with edge replication.
fn gaussian_blur(grid: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0f64; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let cc = (c as i64 + i as i64 - radius).clamp(0, width as i64 - 1) as usize;
                acc += k * grid[r * width + cc];
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0f64; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let rr = (r as i64 + i as i64 - radius).clamp(0, height as i64 - 1) as usize;
                acc += k * tmp[rr * width + c];
            }
            out[r * width + c] = acc;
        }
    }
    out
}

/// Alpha blend with a Gaussian-feathered paste mask:
/// out = alpha*cp + (1-alpha)*original.
pub fn gaussian_blend(
    original: &RasterImage,
    cp: &RasterImage,
    paste_mask: &SemanticMask,
    sigma: f64,
) -> Result<RasterImage> {
    if !original.same_shape(cp) || !paste_mask.matches_image(original) {
        return Err(Error::DimensionMismatch(
            "gaussian_blend inputs differ in shape".into(),
        ));
    }
    let (w, h) = (original.width(), original.height());
    let mask_f: Vec<f64> = paste_mask.data().iter().map(|&v| v as f64).collect();
    let alpha = gaussian_blur(&mask_f, w, h, sigma);
    let channels: Vec<Vec<f64>> = (0..original.channels())
        .map(|ch| {
            let o = original.channel_f64(ch);
            let p = cp.channel_f64(ch);
            alpha
                .iter()
                .zip(o.iter().zip(&p))
                .map(|(&a, (&ov, &pv))| a * pv + (1.0 - a) * ov)
                .collect()
        })
        .collect();
    quantize(original, &channels)
}

/// Dispatch on the blend spec; `BlendMode::None` returns the pasted image as is.
pub fn apply_blend(
    original: &RasterImage,
    cp: &RasterImage,
    paste_mask: &SemanticMask,
    spec: &BlendSpec,
) -> Result<RasterImage> {
    spec.validate()?;
    match spec.mode {
        BlendMode::None => Ok(cp.clone()),
        BlendMode::Gaussian => gaussian_blend(original, cp, paste_mask, spec.sigma),
        BlendMode::Fourier => fourier_blend(original, cp, spec.beta),
    }
}
