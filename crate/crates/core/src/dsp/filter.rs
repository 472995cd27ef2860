//! Butterworth band-pass / high-pass design (bilinear transform) and
//! zero-phase forward-backward application.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Digital IIR filter as transfer-function coefficients, `a[0] == 1`.
#[derive(Debug, Clone)]
pub struct IirFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

fn butterworth_prototype_poles(order: usize) -> Vec<Complex64> {
    (1..=order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// Expand a monic polynomial from its roots.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Bilinear transform of analog zeros/poles at sample rate `fs`.
/// Analog zeros at infinity map to z = -1.
fn bilinear(
    zeros: &[Complex64],
    poles: &[Complex64],
    fs: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let fs2 = Complex64::new(2.0 * fs, 0.0);
    let map = |s: Complex64| (fs2 + s) / (fs2 - s);
    let mut z: Vec<Complex64> = zeros.iter().map(|&s| map(s)).collect();
    let p: Vec<Complex64> = poles.iter().map(|&s| map(s)).collect();
    while z.len() < p.len() {
        z.push(Complex64::new(-1.0, 0.0));
    }
    (z, p)
}

fn transfer_at(b: &[f64], a: &[f64], z: Complex64) -> Complex64 {
    let eval = |c: &[f64]| {
        let mut acc = Complex64::new(0.0, 0.0);
        // coefficients are in descending powers of z^-1? No: b[k] * z^-k
        let zi = z.inv();
        let mut zp = Complex64::new(1.0, 0.0);
        for &ck in c {
            acc += ck * zp;
            zp *= zi;
        }
        acc
    };
    eval(b) / eval(a)
}

fn realize(
    zeros: &[Complex64],
    poles: &[Complex64],
    norm_freq_hz: f64,
    fs: f64,
) -> IirFilter {
    let b_c = poly_from_roots(zeros);
    let a_c = poly_from_roots(poles);
    let mut b: Vec<f64> = b_c.iter().map(|c| c.re).collect();
    let a: Vec<f64> = a_c.iter().map(|c| c.re).collect();
    // unit gain at the normalization frequency
    let w = 2.0 * std::f64::consts::PI * norm_freq_hz / fs;
    let z = Complex64::new(w.cos(), w.sin());
    let gain = transfer_at(&b, &a, z).norm();
    for c in &mut b {
        *c /= gain;
    }
    IirFilter { b, a }
}

/// 4th-order Butterworth band-pass (order-2 low-pass prototype).
pub fn butter_bandpass(low_hz: f64, high_hz: f64, fs: f64) -> Result<IirFilter> {
    let nyq = fs / 2.0;
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < nyq) {
        return Err(Error::Signal(format!(
            "band [{low_hz}, {high_hz}] Hz invalid for fs = {fs} Hz"
        )));
    }
    let w1 = 2.0 * fs * (std::f64::consts::PI * low_hz / fs).tan();
    let w2 = 2.0 * fs * (std::f64::consts::PI * high_hz / fs).tan();
    let bw = w2 - w1;
    let w0sq = w1 * w2;

    let mut poles = Vec::with_capacity(4);
    for p in butterworth_prototype_poles(2) {
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0sq).sqrt();
        poles.push((pb + disc) / 2.0);
        poles.push((pb - disc) / 2.0);
    }
    // two zeros at s = 0, two at infinity
    let zeros = vec![Complex64::new(0.0, 0.0); 2];
    let (z, p) = bilinear(&zeros, &poles, fs);
    // normalize at the geometric band centre (in the digital domain)
    let w0 = w0sq.sqrt();
    let f_center = fs / std::f64::consts::PI * (w0 / (2.0 * fs)).atan();
    Ok(realize(&z, &p, f_center, fs))
}

/// 4th-order Butterworth high-pass. Used when the requested band's upper
/// edge sits at Nyquist and a band-pass would be degenerate.
pub fn butter_highpass(cutoff_hz: f64, fs: f64) -> Result<IirFilter> {
    let nyq = fs / 2.0;
    if !(0.0 < cutoff_hz && cutoff_hz < nyq) {
        return Err(Error::Signal(format!(
            "high-pass cutoff {cutoff_hz} Hz invalid for fs = {fs} Hz"
        )));
    }
    let wc = 2.0 * fs * (std::f64::consts::PI * cutoff_hz / fs).tan();
    let poles: Vec<Complex64> = butterworth_prototype_poles(4)
        .into_iter()
        .map(|p| Complex64::new(wc, 0.0) / p)
        .collect();
    let zeros = vec![Complex64::new(0.0, 0.0); 4];
    let (z, p) = bilinear(&zeros, &poles, fs);
    // unit gain at Nyquist
    Ok(realize(&z, &p, nyq * (1.0 - 1e-9), fs))
}

/// Direct-form II transposed single-pass filter.
pub fn lfilter(filter: &IirFilter, x: &[f64]) -> Vec<f64> {
    let b = &filter.b;
    let a = &filter.a;
    let order = b.len().max(a.len()) - 1;
    let mut state = vec![0.0; order];
    let mut y = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = b[0] * xi + state[0];
        for k in 0..order {
            let bk = b.get(k + 1).copied().unwrap_or(0.0);
            let ak = a.get(k + 1).copied().unwrap_or(0.0);
            let next = if k + 1 < order { state[k + 1] } else { 0.0 };
            state[k] = bk * xi + next - ak * yi;
        }
        y.push(yi);
    }
    y
}

/// Zero-phase filtering: forward pass, reverse, backward pass, reverse.
/// The signal is extended by odd reflection at both ends to suppress
/// start-up transients.
pub fn filtfilt(filter: &IirFilter, x: &[f64]) -> Vec<f64> {
    let ntaps = filter.b.len().max(filter.a.len());
    let pad = (3 * (ntaps - 1)).min(x.len().saturating_sub(1));
    if x.is_empty() {
        return Vec::new();
    }

    let mut ext = Vec::with_capacity(x.len() + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    let last = x[x.len() - 1];
    for i in 1..=pad {
        ext.push(2.0 * last - x[x.len() - 1 - i]);
    }

    let mut y = lfilter(filter, &ext);
    y.reverse();
    let mut y = lfilter(filter, &y);
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}
