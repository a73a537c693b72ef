//! Increment laws for the walk.
//!
//! Four families are supported, all with uniformly bounded jumps:
//!
//! * `lattice_biased`: unit steps along an orthonormal frame `b_1 = x/|x|, b_2, .., b_d`,
//!   with the `+-b_1` probabilities tilted by `(rho/2)|x|^-beta` and clamped so that
//!   each stays at least `eps0`;
//! * `shifted_sphere`: a uniform point on the unit sphere shifted by `rho |x|^-beta x/|x|`
//!   while that shift is at most 1/2;
//! * `cap_excluded`: uniform on the unit sphere minus the polar cap of relative surface
//!   `rho |x|^-beta` facing `-x`;
//! * `simple_random_walk`: `+-e_i` with probability `1/(2d)` each.
//!
//! The reference vector `x` is `X_n - G_n` for barycentric bias or `X_n` for drift
//! relative to the origin; choosing between them is the caller's job (see the engine).

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;
use crate::sphere::{cap_threshold, sample_uniform_sphere, CapSampler};
use crate::vector::{check_dim, VectorD, ZeroDirection};

/// Largest cap fraction used by the cap-excluded law.
pub const CAP_MAX: f64 = 0.5;

/// Largest shift magnitude for which the shifted-sphere law applies its drift.
pub const SHIFT_MAX: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LatticeBiased,
    ShiftedSphere,
    CapExcluded,
    SimpleRandomWalk,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LatticeBiased => "lattice_biased",
            Family::ShiftedSphere => "shifted_sphere",
            Family::CapExcluded => "cap_excluded",
            Family::SimpleRandomWalk => "simple_random_walk",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lattice_biased" => Family::LatticeBiased,
            "shifted_sphere" => Family::ShiftedSphere,
            "cap_excluded" => Family::CapExcluded,
            "simple_random_walk" | "srw" => Family::SimpleRandomWalk,
            _ => return None,
        })
    }
}

/// What the drift points away from: the running centre of mass or the fixed origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasTarget {
    #[default]
    Barycentre,
    Origin,
}

impl BiasTarget {
    pub fn name(self) -> &'static str {
        match self {
            BiasTarget::Barycentre => "barycentre",
            BiasTarget::Origin => "origin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "barycentre" | "barycenter" => Some(BiasTarget::Barycentre),
            "origin" => Some(BiasTarget::Origin),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec<T> {
    pub family: Family,
    pub dim: usize,
    pub rho: T,
    pub beta: T,
    /// Ellipticity floor, only meaningful for `lattice_biased`.
    pub eps0: T,
    pub bias_target: BiasTarget,
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![T::zero(); dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, value: T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = value;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    /// `self += weight * v v^T`
    pub fn add_outer(&mut self, v: &VectorD<T>, weight: T) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.entries[i * self.dim + j] = self.entries[i * self.dim + j] + weight * v[i] * v[j];
            }
        }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    /// `v^T M v`
    pub fn quadratic_form(&self, v: &VectorD<T>) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc = acc + v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }
}

/// Exact conditional first and second moments of one increment.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary<T> {
    pub mean_drift: VectorD<T>,
    pub second_moments: SquareMatrix<T>,
    pub jump_bound: T,
}

impl<T: Scalar> MomentSummary<T> {
    /// `E[(u.D)^2]` for a unit vector `u`.
    pub fn radial_second_moment(&self, unit: &VectorD<T>) -> T {
        self.second_moments.quadratic_form(unit)
    }

    /// `(1/2) E[|D|^2 - (u.D)^2]`: the curvature contribution to the drift of a norm.
    pub fn transverse_half_variance(&self, unit: &VectorD<T>) -> T {
        T::lit(0.5) * (self.second_moments.trace() - self.radial_second_moment(unit))
    }
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(
        family: Family,
        dim: usize,
        rho: T,
        beta: T,
        eps0: T,
        bias_target: BiasTarget,
    ) -> Result<Self> {
        let spec = Self {
            family,
            dim,
            rho,
            beta,
            eps0,
            bias_target,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lattice_biased(dim: usize, rho: T, beta: T, eps0: T) -> Result<Self> {
        Self::new(Family::LatticeBiased, dim, rho, beta, eps0, BiasTarget::Barycentre)
    }

    pub fn shifted_sphere(dim: usize, rho: T, beta: T) -> Result<Self> {
        Self::new(Family::ShiftedSphere, dim, rho, beta, T::zero(), BiasTarget::Barycentre)
    }

    pub fn cap_excluded(dim: usize, rho: T, beta: T) -> Result<Self> {
        Self::new(Family::CapExcluded, dim, rho, beta, T::zero(), BiasTarget::Barycentre)
    }

    pub fn simple_random_walk(dim: usize) -> Result<Self> {
        Self::new(
            Family::SimpleRandomWalk,
            dim,
            T::zero(),
            T::zero(),
            T::zero(),
            BiasTarget::Barycentre,
        )
    }

    pub fn with_bias_target(mut self, bias_target: BiasTarget) -> Self {
        self.bias_target = bias_target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if self.family == Family::SimpleRandomWalk {
            return Ok(());
        }
        if !self.rho.is_finite() {
            return Err(CoreError::param("rho", "must be finite"));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(CoreError::param("beta", format!("{} must be >= 0", self.beta)));
        }
        match self.family {
            Family::LatticeBiased => {
                let upper = T::one() / (T::lit(2.0) * self.dim_t());
                if !(self.eps0 > T::zero() && self.eps0 < upper) {
                    return Err(CoreError::param(
                        "eps0",
                        format!("{} must lie in (0, 1/(2d)) = (0, {upper})", self.eps0),
                    ));
                }
            }
            Family::CapExcluded => {
                if self.dim < 2 {
                    return Err(CoreError::param("dim", "cap_excluded needs d >= 2"));
                }
                if !(self.rho > T::zero()) {
                    return Err(CoreError::param("rho", "cap_excluded needs rho > 0"));
                }
            }
            Family::ShiftedSphere | Family::SimpleRandomWalk => {}
        }
        Ok(())
    }

    #[inline]
    fn dim_t(&self) -> T {
        T::from_count(self.dim as u64)
    }

    /// Almost-sure bound `B` on the increment norm.
    pub fn jump_bound(&self) -> T {
        match self.family {
            Family::ShiftedSphere => T::one() + T::lit(SHIFT_MAX),
            _ => T::one(),
        }
    }

    /// Per-coordinate second moment `sigma^2` away from the clamping region.
    pub fn sigma2(&self) -> T {
        self.dim_t().recip()
    }

    /// `rho |x|^-beta`, with `|0|^-beta = +inf` for `beta > 0`.
    #[inline]
    pub fn drift_strength(&self, norm: T) -> T {
        if self.family == Family::SimpleRandomWalk || self.rho == T::zero() {
            T::zero()
        } else if self.beta == T::zero() {
            self.rho
        } else if norm == T::zero() {
            self.rho.signum() * T::infinity()
        } else {
            self.rho * norm.powf(-self.beta)
        }
    }

    /// Smallest `R` such that for `|x| >= R` no clamp is active and the mean increment is
    /// exactly `rho |x|^-beta x/|x|` (for the cap law: the cap fraction is unclamped).
    pub fn validity_radius(&self) -> T {
        let limit = match self.family {
            Family::SimpleRandomWalk => return T::zero(),
            Family::LatticeBiased => {
                let c = self.rho.abs() / T::lit(2.0);
                let m = T::one() / (T::lit(2.0) * self.dim_t()) - self.eps0;
                return radius_for(c, m, self.beta);
            }
            Family::ShiftedSphere => T::lit(SHIFT_MAX),
            Family::CapExcluded => T::lit(CAP_MAX),
        };
        radius_for(self.rho.abs(), limit, self.beta)
    }

    /// Whether the law at `|x| = norm` is outside every clamping branch.
    pub fn is_unclamped(&self, norm: T) -> bool {
        match self.family {
            Family::SimpleRandomWalk => true,
            Family::LatticeBiased => {
                let a = self.drift_strength(norm) / T::lit(2.0);
                a.abs() <= self.lattice_margin()
            }
            Family::ShiftedSphere => self.drift_strength(norm).abs() <= T::lit(SHIFT_MAX),
            Family::CapExcluded => norm >= self.validity_radius() && norm > T::zero(),
        }
    }

    fn lattice_margin(&self) -> T {
        T::one() / (T::lit(2.0) * self.dim_t()) - self.eps0
    }

    /// Probability of the `+b_1` step of the lattice law, with the three clamping branches.
    pub fn lattice_plus_probability(&self, norm: T) -> T {
        let base = T::one() / (T::lit(2.0) * self.dim_t());
        let a = self.drift_strength(norm) / T::lit(2.0);
        let m = self.lattice_margin();
        if a.abs() <= m {
            base + a
        } else if a > m {
            self.dim_t().recip() - self.eps0
        } else {
            self.eps0
        }
    }

    /// Relative surface of the excluded cap at `|x| = norm` (zero inside the validity radius).
    pub fn cap_fraction(&self, norm: T) -> T {
        if self.family != Family::CapExcluded || !self.is_unclamped(norm) {
            T::zero()
        } else {
            self.drift_strength(norm).min(T::lit(CAP_MAX))
        }
    }

    /// Full outcome list `(step, probability)` of a discrete law (lattice or SRW).
    pub fn lattice_outcomes(&self, reference: &VectorD<T>) -> Vec<(VectorD<T>, T)> {
        let d = self.dim;
        let mut out = Vec::with_capacity(2 * d);
        match self.family {
            Family::SimpleRandomWalk => {
                let p = (T::lit(2.0) * self.dim_t()).recip();
                for i in 0..d {
                    let e = VectorD::basis(d, i);
                    out.push((e, p));
                    out.push((-e, p));
                }
            }
            Family::LatticeBiased => {
                let xhat = reference.unit_direction(ZeroDirection::FirstAxis);
                let p_plus = self.lattice_plus_probability(reference.norm());
                out.push((xhat, p_plus));
                out.push((-xhat, self.dim_t().recip() - p_plus));
                let p = (T::lit(2.0) * self.dim_t()).recip();
                for i in 1..d {
                    let b = frame_vector(&xhat, i);
                    out.push((b, p));
                    out.push((-b, p));
                }
            }
            _ => {}
        }
        out
    }

    /// Draws one increment given the drift reference `x`.
    pub fn sample_increment<R: Rng + ?Sized>(
        &self,
        reference: &VectorD<T>,
        rng: &mut R,
    ) -> Result<VectorD<T>> {
        if !reference.is_finite() {
            return Err(CoreError::NonFiniteReference);
        }
        let d = self.dim;
        let step = match self.family {
            Family::SimpleRandomWalk => {
                let k = rng.random_range(0..2 * d);
                let e = VectorD::basis(d, k / 2);
                if k % 2 == 0 {
                    e
                } else {
                    -e
                }
            }
            Family::LatticeBiased => {
                let norm = reference.norm();
                let xhat = reference.unit_direction(ZeroDirection::FirstAxis);
                let p_plus = self.lattice_plus_probability(norm);
                let axis_mass = self.dim_t().recip();
                let u = T::unit_uniform(rng);
                if u < p_plus {
                    xhat
                } else if u < axis_mass || d == 1 {
                    -xhat
                } else {
                    let slots = 2 * (d - 1);
                    let v = (u - axis_mass) / (T::one() - axis_mass);
                    let k = (v * T::from_count(slots as u64))
                        .to_usize()
                        .unwrap_or(0)
                        .min(slots - 1);
                    let b = frame_vector(&xhat, 1 + k / 2);
                    if k.is_multiple_of(2) {
                        b
                    } else {
                        -b
                    }
                }
            }
            Family::ShiftedSphere => {
                let u: VectorD<T> = sample_uniform_sphere(d, rng);
                let s = self.drift_strength(reference.norm());
                if s.abs() <= T::lit(SHIFT_MAX) {
                    u + reference.unit_direction(ZeroDirection::Zero).scale(s)
                } else {
                    u
                }
            }
            Family::CapExcluded => {
                let fraction = self.cap_fraction(reference.norm());
                if fraction > T::zero() {
                    let axis = reference.unit_direction(ZeroDirection::FirstAxis);
                    CapSampler::new(axis, fraction.to_f64_lossy())?.sample(rng)
                } else {
                    sample_uniform_sphere(d, rng)
                }
            }
        };
        Ok(step)
    }

    /// Exact conditional moments of the increment at reference `x`.
    ///
    /// Fails with [`CoreError::ClampRegion`] when `x` lies where a clamp is active.
    pub fn analytic_moments(&self, reference: &VectorD<T>) -> Result<MomentSummary<T>> {
        if !reference.is_finite() {
            return Err(CoreError::NonFiniteReference);
        }
        let norm = reference.norm();
        if !self.is_unclamped(norm) {
            return Err(CoreError::ClampRegion {
                norm: norm.to_f64_lossy(),
                radius: self.validity_radius().to_f64_lossy(),
            });
        }
        let d = self.dim;
        let jump_bound = self.jump_bound();
        let summary = match self.family {
            Family::SimpleRandomWalk | Family::LatticeBiased => {
                let mut mean = VectorD::zeros(d);
                let mut second = SquareMatrix::zeros(d);
                for (v, p) in self.lattice_outcomes(reference) {
                    mean += v.scale(p);
                    second.add_outer(&v, p);
                }
                MomentSummary {
                    mean_drift: mean,
                    second_moments: second,
                    jump_bound,
                }
            }
            Family::ShiftedSphere => {
                let xhat = reference.unit_direction(ZeroDirection::Zero);
                let s = self.drift_strength(norm);
                let mut second = SquareMatrix::scaled_identity(d, self.dim_t().recip());
                second.add_outer(&xhat, s * s);
                MomentSummary {
                    mean_drift: xhat.scale(s),
                    second_moments: second,
                    jump_bound,
                }
            }
            Family::CapExcluded => {
                let xhat = reference.unit_direction(ZeroDirection::FirstAxis);
                let fraction = self.cap_fraction(norm).to_f64_lossy();
                let (m1, m2) = cap_polar_moments(d, fraction)?;
                let (m1, m2) = (T::lit(m1), T::lit(m2));
                let transverse = (T::one() - m2) / T::from_count(d as u64 - 1);
                let mut second = SquareMatrix::scaled_identity(d, transverse);
                second.add_outer(&xhat, m2 - transverse);
                MomentSummary {
                    mean_drift: xhat.scale(m1),
                    second_moments: second,
                    jump_bound,
                }
            }
        };
        Ok(summary)
    }
}

fn radius_for<T: Scalar>(strength: T, limit: T, beta: T) -> T {
    if strength == T::zero() {
        T::zero()
    } else if beta == T::zero() {
        if strength <= limit {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        (strength / limit).powf(beta.recip())
    }
}

/// `i`-th vector (`i >= 1`) of the orthonormal frame whose first vector is `xhat`.
///
/// The Householder reflection `H = I - 2ww^T/|w|^2` with `w = e_1 + xhat` sends `e_1` to
/// `-xhat`, so `H e_i` (i >= 2) completes `xhat` to an orthonormal basis. Near
/// `xhat = -e_1`, where that `w` vanishes, `w = xhat - e_1` is used instead.
pub fn frame_vector<T: Scalar>(xhat: &VectorD<T>, i: usize) -> VectorD<T> {
    let d = xhat.dim();
    let mut e = VectorD::basis(d, i);
    let mut w = *xhat;
    w[0] = if xhat[0] > T::lit(-0.5) {
        w[0] + T::one()
    } else {
        w[0] - T::one()
    };
    // |w|^2 is taken from w itself so that H stays orthogonal when |xhat| is off by rounding.
    let w_sq = w.norm_sq();
    let coef = T::lit(2.0) * w[i] / w_sq;
    e -= w.scale(coef);
    e
}

fn gauss_legendre_64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// `(E[s], E[s^2])` for `s = y.a` with `y` uniform on the sphere minus the cap
/// `{y.a <= t}` of relative surface `fraction`, by quadrature over the polar angle.
pub fn cap_polar_moments(dim: usize, fraction: f64) -> Result<(f64, f64)> {
    let t = cap_threshold(dim, fraction)?;
    let theta_max = t.clamp(-1.0, 1.0).acos();
    let rule = gauss_legendre_64();
    let weight = |theta: f64| theta.sin().powi(dim as i32 - 2);
    let z = rule.integrate(0.0, theta_max, weight);
    let m1 = rule.integrate(0.0, theta_max, |th| th.cos() * weight(th)) / z;
    let m2 = rule.integrate(0.0, theta_max, |th| th.cos().powi(2) * weight(th)) / z;
    Ok((m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    fn vec2(a: f64, b: f64) -> VectorD<f64> {
        VectorD::from_slice(&[a, b]).unwrap()
    }

    #[test]
    fn lattice_probabilities_at_norm_ten() {
        let spec = ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.01).unwrap();
        let outcomes = spec.lattice_outcomes(&vec2(10.0, 0.0));
        let prob = |target: VectorD<f64>| -> f64 {
            outcomes
                .iter()
                .filter(|(v, _)| v.distance(&target) < 1e-12)
                .map(|(_, p)| *p)
                .sum()
        };
        assert!((prob(vec2(1.0, 0.0)) - 0.255).abs() < 1e-15);
        assert!((prob(vec2(-1.0, 0.0)) - 0.245).abs() < 1e-15);
        assert!((prob(vec2(0.0, 1.0)) - 0.25).abs() < 1e-15);
        assert!((prob(vec2(0.0, -1.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lattice_probabilities_sum_to_one_in_every_branch() {
        let spec = ModelSpec::<f64>::lattice_biased(3, 0.5, 1.0, 0.02).unwrap();
        let neg = ModelSpec::<f64>::lattice_biased(3, -0.5, 1.0, 0.02).unwrap();
        // margin = 1/6 - 0.02; |a| = 0.25/|x|
        let upper = spec.lattice_plus_probability(1.0);
        assert!((upper - (1.0 / 3.0 - 0.02)).abs() < 1e-15);
        let lower = neg.lattice_plus_probability(1.0);
        assert!((lower - 0.02).abs() < 1e-15);
        let middle = spec.lattice_plus_probability(10.0);
        assert!((middle - (1.0 / 6.0 + 0.025)).abs() < 1e-15);
        for (s, norm) in [(spec, 1.0), (neg, 1.0), (spec, 10.0), (spec, 0.0)] {
            let x = VectorD::from_slice(&[norm, 0.0, 0.0]).unwrap();
            let total: f64 = s.lattice_outcomes(&x).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn middle_branch_takes_ties() {
        // (|rho|/2) |x|^-beta == margin exactly at |x| = 1 with rho = 2 * margin
        let margin = 0.25 - 0.05;
        let spec = ModelSpec::<f64>::lattice_biased(2, 2.0 * margin, 1.0, 0.05).unwrap();
        assert!(spec.is_unclamped(1.0));
        assert!((spec.lattice_plus_probability(1.0) - (0.25 + margin)).abs() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        for raw in [
            [0.3, -0.5, 0.2, 0.7],
            [-1.0, 1e-9, 0.0, 0.0],
            [-0.4, 0.3, -0.8, 0.1],
            [1.0, 0.0, 0.0, 0.0],
        ] {
            let xhat = VectorD::<f64>::from_slice(&raw)
                .unwrap()
                .unit_direction(ZeroDirection::Zero);
            let mut frame = vec![xhat];
            frame.extend((1..4).map(|i| frame_vector(&xhat, i)));
            for i in 0..4 {
                for j in 0..4 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((frame[i].dot(&frame[j]) - expected).abs() < 1e-14, "{raw:?}");
                }
            }
        }
    }

    #[test]
    fn lattice_moments_at_norm_ten() {
        let spec = ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.01).unwrap();
        let m = spec.analytic_moments(&vec2(10.0, 0.0)).unwrap();
        // enumerate by hand: 0.255*(1) + 0.245*(-1) = 0.01
        assert!((m.mean_drift[0] - 0.01).abs() < 1e-15);
        assert!(m.mean_drift[1].abs() < 1e-15);
        assert!((m.second_moments.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((m.second_moments.get(1, 1) - 0.5).abs() < 1e-15);
        assert!(m.second_moments.get(0, 1).abs() < 1e-15);
        assert_eq!(m.jump_bound, 1.0);
    }

    #[test]
    fn srw_moments_are_isotropic() {
        for d in 1..=5 {
            let spec = ModelSpec::<f64>::simple_random_walk(d).unwrap();
            let m = spec.analytic_moments(&VectorD::zeros(d)).unwrap();
            for i in 0..d {
                assert_eq!(m.mean_drift[i], 0.0);
                for j in 0..d {
                    let expected = if i == j { 1.0 / d as f64 } else { 0.0 };
                    assert!((m.second_moments.get(i, j) - expected).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn shifted_sphere_without_drift_is_isotropic() {
        let spec = ModelSpec::<f64>::shifted_sphere(3, 0.0, 1.0).unwrap();
        let x = VectorD::from_slice(&[1.0, 2.0, 3.0]).unwrap();
        let m = spec.analytic_moments(&x).unwrap();
        assert_eq!(m.mean_drift.norm(), 0.0);
        for i in 0..3 {
            assert!((m.second_moments.get(i, i) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shifted_sphere_drops_large_shift() {
        let spec = ModelSpec::<f64>::shifted_sphere(2, 1.0, 1.0).unwrap();
        let mut rng = RngHandle::new(11, 0);
        let x = vec2(1.0, 0.0);
        for _ in 0..1000 {
            let step = spec.sample_increment(&x, &mut rng).unwrap();
            assert!((step.norm() - 1.0).abs() < 1e-12);
        }
        assert!(spec.analytic_moments(&x).is_err());
    }

    #[test]
    fn validity_radii() {
        let lattice = ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.01).unwrap();
        assert!((lattice.validity_radius() - 0.05 / 0.24).abs() < 1e-14);
        let srw = ModelSpec::<f64>::simple_random_walk(2).unwrap();
        assert_eq!(srw.validity_radius(), 0.0);
        let shifted = ModelSpec::<f64>::shifted_sphere(2, 1.0, 0.5).unwrap();
        assert!((shifted.validity_radius() - 4.0).abs() < 1e-12);
        assert!(shifted.is_unclamped(4.0));
        assert!(!shifted.is_unclamped(3.99));
        let cap = ModelSpec::<f64>::cap_excluded(3, 0.2, 1.0).unwrap();
        assert!((cap.validity_radius() - 0.4).abs() < 1e-14);
        let flat = ModelSpec::<f64>::lattice_biased(2, 1.0, 0.0, 0.01).unwrap();
        assert!(flat.validity_radius().is_infinite());
    }

    #[test]
    fn validation_errors() {
        assert!(ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.25).is_err());
        assert!(ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.0).is_err());
        assert!(ModelSpec::<f64>::lattice_biased(2, 0.1, -1.0, 0.01).is_err());
        assert!(ModelSpec::<f64>::cap_excluded(1, 0.1, 1.0).is_err());
        assert!(ModelSpec::<f64>::cap_excluded(2, -0.1, 1.0).is_err());
        assert!(ModelSpec::<f64>::simple_random_walk(0).is_err());
        assert!(ModelSpec::<f64>::simple_random_walk(17).is_err());
    }

    #[test]
    fn rejects_non_finite_reference() {
        let spec = ModelSpec::<f64>::lattice_biased(2, 0.1, 1.0, 0.01).unwrap();
        let mut rng = RngHandle::new(1, 0);
        let bad = vec2(f64::NAN, 0.0);
        assert!(matches!(
            spec.sample_increment(&bad, &mut rng),
            Err(CoreError::NonFiniteReference)
        ));
    }

    #[test]
    fn cap_polar_moments_match_closed_forms() {
        // d = 3: s uniform on (t, 1) with t = 2f - 1, so E[s] = f, E[s^2] = (1 + t + t^2)/3.
        for &f in &[0.01, 0.1, 0.3, 0.5] {
            let (m1, m2) = cap_polar_moments(3, f).unwrap();
            let t = 2.0 * f - 1.0;
            assert!((m1 - f).abs() < 1e-12, "m1 {m1} f {f}");
            assert!((m2 - (1.0 + t + t * t) / 3.0).abs() < 1e-12);
        }
        // d = 2: polar angle uniform on (0, pi(1 - f)).
        for &f in &[0.01, 0.2, 0.5] {
            let a = std::f64::consts::PI * (1.0 - f);
            let (m1, m2) = cap_polar_moments(2, f).unwrap();
            assert!((m1 - a.sin() / a).abs() < 1e-12);
            assert!((m2 - (0.5 + (2.0 * a).sin() / (4.0 * a))).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_moments_are_consistent() {
        let spec = ModelSpec::<f64>::cap_excluded(4, 0.5, 1.0).unwrap();
        let x = VectorD::from_slice(&[0.0, 20.0, 0.0, 0.0]).unwrap();
        let m = spec.analytic_moments(&x).unwrap();
        assert!((m.second_moments.trace() - 1.0).abs() < 1e-12);
        assert!(m.mean_drift[1] > 0.0);
        assert!(m.mean_drift.norm() <= m.jump_bound);
    }
}
