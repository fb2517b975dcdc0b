//! Direct convolution for the exponential fractional integral
//!
//! ```text
//! I^{β,℘} w(t) = 1/Γ(β) ∫_0^t (t−s)^{β−1} e^{−℘(t−s)} w(s) ds,   β = 1 − α̃,
//! ```
//!
//! used as an independent reference for the diffusive realization. The
//! samples are interpolated linearly between grid points and each kernel
//! moment is integrated exactly (series on the singular first interval,
//! Gauss–Legendre elsewhere), so constant and linear data are reproduced to
//! round-off.

use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

const GL_ORDER: usize = 16;

/// ∫_a^b σ^{β−1+j} e^{−℘σ} dσ for j ∈ {0, 1}, with a = p·dt, b = (p+1)·dt.
fn interval_moments(
    p: usize,
    dt: f64,
    beta: f64,
    wp: f64,
    gl: &(Vec<f64>, Vec<f64>),
) -> (f64, f64) {
    if p == 0 {
        let series = |j: f64| {
            let mut sum = 0.0;
            let mut term = 1.0; // (−℘dt)^m / m!
            for m in 0..200 {
                let add = term / (beta + j + m as f64);
                sum += add;
                if add.abs() < 1e-17 * sum.abs() {
                    break;
                }
                term *= -wp * dt / (m + 1) as f64;
            }
            dt.powf(beta + j) * sum
        };
        return (series(0.0), series(1.0));
    }
    let a = p as f64 * dt;
    let half = 0.5 * dt;
    let mid = a + half;
    let (mut k0, mut k1) = (0.0, 0.0);
    for (x, w) in gl.0.iter().zip(&gl.1) {
        let s = mid + half * x;
        let f = s.powf(beta - 1.0) * (-wp * s).exp() * w * half;
        k0 += f;
        k1 += f * s;
    }
    (k0, k1)
}

/// Product-integration approximation of `I^{1−α̃,℘} w` at every sample time.
///
/// For α̃ = 1 the operator is the identity and the samples are returned.
pub fn fractional_integral_oracle(
    samples: &[Complex64],
    alpha_frac: f64,
    wp: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    if !(alpha_frac > 0.0 && alpha_frac <= 1.0) {
        return Err(Error::param(
            "alpha_frac",
            format!("order must lie in (0, 1], got {alpha_frac}"),
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(wp >= 0.0) {
        return Err(Error::param("wp", format!("must be >= 0, got {wp}")));
    }
    if alpha_frac == 1.0 {
        return Ok(samples.to_vec());
    }
    let beta = 1.0 - alpha_frac;
    let n = samples.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let gl = gauss_legendre(GL_ORDER);
    let g = gamma(beta);
    // weights on the sample at the near (A) and far (B) end of each interval
    let mut near = Vec::with_capacity(n);
    let mut far = Vec::with_capacity(n);
    for p in 0..n.saturating_sub(1) {
        let (k0, k1) = interval_moments(p, dt, beta, wp, &gl);
        let a = p as f64 * dt;
        let b = a + dt;
        // on σ ∈ [a, b]: w(t−σ) = w_hi (b−σ)/dt + w_lo (σ−a)/dt
        near.push((b * k0 - k1) / (dt * g));
        far.push((k1 - a * k0) / (dt * g));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate().skip(1) {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..i {
            acc += samples[i - p] * near[p] + samples[i - p - 1] * far[p];
        }
        *o = acc;
    }
    Ok(out)
}

/// Writes `t, Re w, Im w` rows with 17 significant digits.
pub fn write_series_csv<W: Write>(
    mut out: W,
    t0: f64,
    dt: f64,
    values: &[Complex64],
) -> Result<()> {
    writeln!(out, "t,re,im")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            t0 + i as f64 * dt,
            v.re,
            v.im
        )?;
    }
    Ok(())
}

/// Reads a uniformly sampled `t, Re w, Im w` series; returns `(dt, values)`.
pub fn read_series_csv<R: BufRead>(input: R) -> Result<(f64, Vec<Complex64>)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::Config(format!(
                "line {}: expected t,re[,im]",
                lineno + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))
        };
        times.push(parse(cols[0])?);
        let im = if cols.len() > 2 { parse(cols[2])? } else { 0.0 };
        values.push(Complex64::new(parse(cols[1])?, im));
    }
    if times.len() < 2 {
        return Err(Error::Config("series needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::Config("series is not uniformly sampled".into()));
        }
    }
    Ok((dt, values))
}
