//! Uniform sampling on the unit sphere and on the sphere with a polar cap removed.
//!
//! For a uniform point `y` on the unit sphere in R^d (d >= 2) and a unit axis `a`, the
//! projection `s = y.a` has density proportional to `(1 - s^2)^((d-3)/2)` on `[-1, 1]`,
//! and its CDF is the regularized incomplete beta function
//! `I_{(1+s)/2}((d-1)/2, (d-1)/2)`. Cap thresholds and the polar-angle inverse-CDF
//! sampler are both built on that CDF.

use rand::Rng;
use statrs::function::beta::beta_reg;

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::vector::{check_dim, VectorD};

const BISECTION_TOL: f64 = 1e-12;

/// Uniform point on the unit sphere in R^d, by normalizing a standard Gaussian vector.
/// For `d = 1` this is `+1` or `-1` with probability 1/2 each.
pub fn sample_uniform_sphere<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> VectorD<T> {
    let mut v = VectorD::zeros(dim);
    if dim == 1 {
        v[0] = if rng.random::<bool>() { T::one() } else { -T::one() };
        return v;
    }
    loop {
        for c in v.as_mut_slice() {
            *c = T::standard_normal(rng);
        }
        let norm = v.norm();
        if norm > T::zero() && norm.is_finite() {
            return v.scale(norm.recip());
        }
    }
}

/// Normalized surface measure of `{y : y.axis <= t}` on the unit sphere in R^d.
pub fn lower_cap_fraction(dim: usize, t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    match dim {
        2 => 1.0 - t.acos() / std::f64::consts::PI,
        3 => 0.5 * (1.0 + t),
        _ => {
            let a = 0.5 * (dim as f64 - 1.0);
            beta_reg(a, a, 0.5 * (1.0 + t))
        }
    }
}

/// Height `t` such that the cap `{y.axis <= t}` has relative surface `cap_fraction`.
///
/// `cap_fraction = 0` gives `t = -1` (used with a strict `>` acceptance test, so the
/// excluded set is empty).
pub fn cap_threshold(dim: usize, cap_fraction: f64) -> Result<f64> {
    check_dim(dim)?;
    if dim < 2 {
        return Err(CoreError::param("dim", "cap sampling needs d >= 2"));
    }
    if !(0.0..1.0).contains(&cap_fraction) {
        return Err(CoreError::param(
            "cap_fraction",
            format!("{cap_fraction} not in [0, 1)"),
        ));
    }
    if cap_fraction == 0.0 {
        return Ok(-1.0);
    }
    Ok(match dim {
        2 => -(std::f64::consts::PI * cap_fraction).cos(),
        3 => 2.0 * cap_fraction - 1.0,
        _ => invert_lower_cap(dim, cap_fraction),
    })
}

fn invert_lower_cap(dim: usize, fraction: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if lower_cap_fraction(dim, mid) < fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sampler for the uniform law on `{y in S : y.axis > t}` with `t` fixed at construction.
///
/// Rejection from the uniform sphere is used while the cap is at most half the sphere;
/// larger caps sample the polar coordinate by inverse CDF.
#[derive(Clone, Copy, Debug)]
pub struct CapSampler<T> {
    axis: VectorD<T>,
    cap_fraction: f64,
    threshold: f64,
}

impl<T: Scalar> CapSampler<T> {
    pub fn new(axis: VectorD<T>, cap_fraction: f64) -> Result<Self> {
        let norm = axis.norm().to_f64_lossy();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CoreError::param("axis", format!("norm {norm} is not 1")));
        }
        let threshold = cap_threshold(axis.dim(), cap_fraction)?;
        Ok(Self {
            axis,
            cap_fraction,
            threshold,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn cap_fraction(&self) -> f64 {
        self.cap_fraction
    }

    /// Draws one sample, also returning how many uniform proposals were consumed
    /// (always 1 on the inverse-CDF path).
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (VectorD<T>, u32) {
        if self.cap_fraction <= 0.5 {
            self.sample_rejection(rng)
        } else {
            (self.sample_inverse_cdf(rng), 1)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> VectorD<T> {
        self.sample_counted(rng).0
    }

    pub(crate) fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> (VectorD<T>, u32) {
        let t = T::lit(self.threshold);
        let mut trials = 0;
        loop {
            trials += 1;
            let v: VectorD<T> = sample_uniform_sphere(self.axis.dim(), rng);
            if v.dot(&self.axis) > t {
                return (v, trials);
            }
        }
    }

    pub(crate) fn sample_inverse_cdf<R: Rng + ?Sized>(&self, rng: &mut R) -> VectorD<T> {
        let dim = self.axis.dim();
        let u = self.cap_fraction + (1.0 - self.cap_fraction) * rng.random::<f64>();
        let s = match dim {
            2 => -(std::f64::consts::PI * u).cos(),
            3 => 2.0 * u - 1.0,
            _ => invert_lower_cap(dim, u),
        }
        .max(self.threshold.next_up())
        .min(1.0);
        let perp = sample_orthogonal_unit(&self.axis, rng);
        let radial = T::lit((1.0 - s * s).max(0.0).sqrt());
        self.axis.scale(T::lit(s)) + perp.scale(radial)
    }
}

/// Unit vector uniform on the great sphere orthogonal to `axis`.
fn sample_orthogonal_unit<T: Scalar, R: Rng + ?Sized>(axis: &VectorD<T>, rng: &mut R) -> VectorD<T> {
    loop {
        let w: VectorD<T> = sample_uniform_sphere(axis.dim(), rng);
        let p = w - axis.scale(w.dot(axis));
        let norm = p.norm();
        if norm > T::lit(1e-6) {
            return p.scale(norm.recip());
        }
    }
}

/// Uniform on the sphere minus the cap `{y.axis <= t}` of relative surface `cap_fraction`.
pub fn sample_sphere_minus_cap<T: Scalar, R: Rng + ?Sized>(
    axis: &VectorD<T>,
    cap_fraction: f64,
    rng: &mut R,
) -> Result<VectorD<T>> {
    Ok(CapSampler::new(*axis, cap_fraction)?.sample(rng))
}
