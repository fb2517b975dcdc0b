//! Bessel functions of the first kind for complex argument.
//!
//! Small arguments use the ascending series accumulated in double-double
//! arithmetic: on the real axis near |z| = 25 the terms reach ~1e10 while the
//! sum is O(0.1), so plain f64 would lose about ten digits. Large arguments
//! use Hankel's expansion truncated at its smallest term.

use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// |z| at which evaluation switches from the series to the asymptotic form.
pub const SWITCH_RADIUS: f64 = 25.0;

#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let s = Dd::quick(s.hi, s.lo + t.hi);
        Dd::quick(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(q2)).neg());
        let q3 = r.hi / o.hi;
        Dd::quick(q1, q2).add(Dd::new(q3))
    }
}

#[derive(Debug, Clone, Copy)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from_c(z: Complex64) -> Self {
        Cdd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn scale_div(self, d: Dd) -> Cdd {
        Cdd {
            re: self.re.div(d),
            im: self.im.div(d),
        }
    }

    fn to_c(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }

    fn abs_hi(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
}

fn is_integer(nu: f64) -> bool {
    nu.fract() == 0.0
}

fn check_branch(nu: f64, z: Complex64) -> Result<()> {
    if !(nu >= -1.0) {
        return Err(Error::param("nu", format!("order must be >= -1, got {nu}")));
    }
    if !is_integer(nu) && z.im == 0.0 && z.re < 0.0 {
        return Err(Error::BranchCut {
            what: "J_nu(z)",
            arg: z,
        });
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::param("z", "argument must be finite"));
    }
    Ok(())
}

/// J_ν(z) for ν ≥ −1 and |arg z| < π.
pub fn bessel_j(nu: f64, z: Complex64) -> Result<Complex64> {
    check_branch(nu, z)?;
    if z.norm() <= SWITCH_RADIUS {
        Ok(series_unchecked(nu, z))
    } else {
        Ok(hankel_unchecked(nu, z))
    }
}

/// Ascending series, any |z|.
pub fn bessel_j_series(nu: f64, z: Complex64) -> Result<Complex64> {
    check_branch(nu, z)?;
    Ok(series_unchecked(nu, z))
}

/// Hankel's large-argument expansion with optimal truncation.
pub fn bessel_j_asymptotic(nu: f64, z: Complex64) -> Result<Complex64> {
    check_branch(nu, z)?;
    if z.norm() == 0.0 {
        return Err(Error::param("z", "asymptotic expansion needs z != 0"));
    }
    Ok(hankel_unchecked(nu, z))
}

/// The first three terms of the large-argument expansion,
/// `√(2/(πz)) [cos ω − (ν²−¼)/2 · sin ω / z − (ν²−¼)(ν²−9/4)/8 · cos ω / z²]`,
/// with error O(|z|^{-3}) relative to the envelope.
pub fn bessel_j_three_term(nu: f64, z: Complex64) -> Result<Complex64> {
    check_branch(nu, z)?;
    if z.norm() == 0.0 {
        return Err(Error::param("z", "asymptotic expansion needs z != 0"));
    }
    let omega = z - nu * FRAC_PI_2 - FRAC_PI_4;
    let a = (nu - 0.5) * (nu + 0.5);
    let b = a * (nu - 1.5) * (nu + 1.5);
    let bracket = omega.cos() - omega.sin() / z * (a / 2.0) - omega.cos() / (z * z) * (b / 8.0);
    Ok((2.0 / (PI * z)).sqrt() * bracket)
}

fn series_unchecked(nu: f64, z: Complex64) -> Complex64 {
    if nu == -1.0 {
        return -series_unchecked(1.0, z);
    }
    if z.norm() == 0.0 {
        return if nu == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let zc = Cdd::from_c(z);
    let z2 = zc.mul(zc);
    let w = Cdd {
        re: z2.re.mul(Dd::new(-0.25)),
        im: z2.im.mul(Dd::new(-0.25)),
    };
    let mut term = Cdd::from_c(Complex64::new(1.0, 0.0));
    let mut sum = term;
    let mut largest = 1.0f64;
    let half = z.norm() / 2.0;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        let denom = Dd::new(mf).mul(Dd::new(mf).add(Dd::new(nu)));
        term = term.mul(w).scale_div(denom);
        sum = sum.add(term);
        let t = term.abs_hi();
        largest = largest.max(t);
        if mf > half && t <= 1e-32 * largest {
            break;
        }
        m += 1;
        if m > 2000 {
            break;
        }
    }
    // integer ν must not pick up a branch phase
    let prefactor = if is_integer(nu) {
        (z / 2.0).powi(nu as i32) / gamma(nu + 1.0)
    } else {
        (z / 2.0).powf(nu) / gamma(nu + 1.0)
    };
    prefactor * sum.to_c()
}

fn hankel_unchecked(nu: f64, z: Complex64) -> Complex64 {
    // Beyond |arg z| = π/2 the neglected exponentially small part is no longer
    // small; rotate into the right half-plane with J_ν(z e^{±iπ}) = e^{±iνπ} J_ν(z).
    if z.re < 0.0 {
        let phase = if z.im >= 0.0 { nu * PI } else { -nu * PI };
        return Complex64::from_polar(1.0, phase) * hankel_unchecked(nu, -z);
    }
    let mu4 = 4.0 * nu * nu;
    let inv = 1.0 / z;
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut a = 1.0f64; // a_k(ν)
    let mut zk = Complex64::new(1.0, 0.0); // z^{-k}
    let mut last = f64::INFINITY;
    for k in 1..200usize {
        let kf = k as f64;
        a *= (mu4 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
        zk *= inv;
        let term = zk * a;
        let size = term.norm();
        if size > last || size == 0.0 {
            break;
        }
        last = size;
        // (−1)^j a_{2j} z^{−2j} into P, (−1)^j a_{2j+1} z^{−2j−1} into Q
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += term * sign;
        } else {
            q += term * sign;
        }
        if size < 1e-17 * p.norm().max(q.norm()) {
            break;
        }
    }
    let omega = z - nu * FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (PI * z)).sqrt() * (p * omega.cos() - q * omega.sin())
}

/// The n-th positive zero of J_ν, n ≥ 1, by scanning for sign changes and
/// bisecting on the real axis.
pub fn bessel_zero(nu: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "zeros are numbered from 1"));
    }
    if !(nu > -1.0) {
        return Err(Error::param("nu", format!("need nu > -1, got {nu}")));
    }
    let f = |x: f64| bessel_j(nu, Complex64::new(x, 0.0)).map(|v| v.re);
    let step = 0.05;
    let mut a = 1e-3;
    let mut fa = f(a)?;
    let mut found = 0;
    loop {
        let b = a + step;
        let fb = f(b)?;
        if fa == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == n {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f(mid)?;
                    if fm == 0.0 {
                        return Ok(mid);
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
        }
        a = b;
        fa = fb;
        if a > 1e5 {
            return Err(Error::param("n", "zero index out of range"));
        }
    }
}
