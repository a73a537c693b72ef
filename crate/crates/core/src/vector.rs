//! Small fixed-capacity vectors in R^d.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::CoreError;
use crate::scalar::Scalar;

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

/// A point or increment in R^d, `1 <= d <= MAX_DIM`. Stored inline so it is `Copy`.
#[derive(Clone, Copy, Debug)]
pub struct VectorD<T> {
    dim: usize,
    coords: [T; MAX_DIM],
}

/// Which vector `unit_direction` returns for the zero vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroDirection {
    /// The zero vector maps to itself (used when analysing directions).
    Zero,
    /// The zero vector maps to `e_1` (used by the lattice model's basis).
    FirstAxis,
}

pub fn check_dim(dim: usize) -> Result<(), CoreError> {
    if dim == 0 || dim > MAX_DIM {
        Err(CoreError::Dimension(dim))
    } else {
        Ok(())
    }
}

impl<T: Scalar> VectorD<T> {
    /// Zero vector. Panics if `dim` is outside `1..=MAX_DIM`.
    pub fn zeros(dim: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&dim),
            "dimension {dim} outside 1..={MAX_DIM}"
        );
        Self {
            dim,
            coords: [T::zero(); MAX_DIM],
        }
    }

    /// The `axis`-th standard basis vector (0-based).
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[axis] = T::one();
        v
    }

    pub fn from_slice(coords: &[T]) -> Result<Self, CoreError> {
        check_dim(coords.len())?;
        let mut v = Self::zeros(coords.len());
        v.coords[..coords.len()].copy_from_slice(coords);
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coords[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        (*self - *other).norm()
    }

    pub fn scale(mut self, factor: T) -> Self {
        for c in self.as_mut_slice() {
            *c = *c * factor;
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    /// `v / |v|`, with the zero vector handled per `zero`.
    pub fn unit_direction(&self, zero: ZeroDirection) -> Self {
        let norm = self.norm();
        if norm > T::zero() {
            self.scale(norm.recip())
        } else {
            match zero {
                ZeroDirection::Zero => Self::zeros(self.dim),
                ZeroDirection::FirstAxis => Self::basis(self.dim, 0),
            }
        }
    }

    /// Angle in radians between two nonzero vectors.
    pub fn angle_to(&self, other: &Self) -> T {
        let c = self.dot(other) / (self.norm() * other.norm());
        c.max(-T::one()).min(T::one()).acos()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.as_slice().iter().map(|c| c.to_f64_lossy()).collect()
    }
}

/// Free-function form of [`VectorD::unit_direction`].
pub fn unit_direction<T: Scalar>(v: &VectorD<T>, zero: ZeroDirection) -> VectorD<T> {
    v.unit_direction(zero)
}

impl<T: PartialEq> PartialEq for VectorD<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords[..self.dim] == other.coords[..other.dim]
    }
}

impl<T> Index<usize> for VectorD<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        assert!(i < self.dim);
        &self.coords[i]
    }
}

impl<T> IndexMut<usize> for VectorD<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        assert!(i < self.dim);
        &mut self.coords[i]
    }
}

impl<T: Scalar> Add for VectorD<T> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar> AddAssign for VectorD<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] = self.coords[i] + rhs.coords[i];
        }
    }
}

impl<T: Scalar> Sub for VectorD<T> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Scalar> SubAssign for VectorD<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] = self.coords[i] - rhs.coords[i];
        }
    }
}

impl<T: Scalar> Mul<T> for VectorD<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> Neg for VectorD<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Serialize for VectorD<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for c in self.as_slice() {
            seq.serialize_element(&c.to_f64_lossy())?;
        }
        seq.end()
    }
}
