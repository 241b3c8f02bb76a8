//! Complex hypersphere and complex oblique manifold primitives: tangent
//! projection, retraction, vector transport and the Riemannian metric.
//!
//! The sphere carries N×K beamformer matrices with fixed Frobenius norm
//! (total power); the oblique manifold carries K×N matrices with fixed
//! column norms (per-antenna power). Both projectors carry the 1/P₀ (resp.
//! N/P₀) normalization so tangency holds for arbitrary power levels, not
//! just the unit-radius case.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian;
use crate::error::{RadcomError, Result};
use crate::CMat;

/// Riemannian metric: Re tr(x^H y), the real inner product on the ambient
/// complex space.
///
/// Panics if shapes differ.
pub fn inner(x: &CMat, y: &CMat) -> f64 {
    assert_eq!(x.shape(), y.shape(), "inner product shape mismatch");
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// A tangent vector together with the point it is based at. Combining
/// vectors from different base points without transport is a contract
/// violation caught in debug builds.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub mat: CMat,
    pub base: CMat,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector { mat: &self.mat * Complex64::new(s, 0.0), base: self.base.clone() }
    }

    /// self + s·other, both tangent at the same base point.
    pub fn add_scaled(&self, other: &TangentVector, s: f64) -> TangentVector {
        debug_assert_eq!(self.base, other.base, "combining tangent vectors from different base points");
        TangentVector {
            mat: &self.mat + &other.mat * Complex64::new(s, 0.0),
            base: self.base.clone(),
        }
    }
}

/// Common surface of the two power manifolds, as used by the RCG solver.
pub trait Manifold: Sync {
    /// (rows, cols) of points on the manifold.
    fn shape(&self) -> (usize, usize);

    /// Total transmit power P₀ encoded by the constraint.
    fn total_power(&self) -> f64;

    /// Orthogonal projection of an ambient matrix onto the tangent space at
    /// `point`.
    fn project(&self, point: &CMat, ambient: &CMat) -> TangentVector;

    /// Move from `point` along `step`·ξ and map back onto the manifold.
    fn retract(&self, point: &CMat, xi: &TangentVector, step: f64) -> Result<CMat>;

    /// Transport a tangent vector based elsewhere into the tangent space at
    /// `point` (projection transport).
    fn transport(&self, point: &CMat, v: &TangentVector) -> TangentVector {
        self.project(point, &v.mat)
    }

    /// Relative violation of the manifold constraint at `point`.
    fn constraint_residual(&self, point: &CMat) -> f64;

    /// Relative violation of tangency of `v` at `point`.
    fn tangency_residual(&self, point: &CMat, v: &CMat) -> f64;

    /// Uniform-random point: a Gaussian matrix normalized onto the manifold.
    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<CMat>;
}

/// Complex hypersphere: N×K matrices with ‖T̃‖_F = √P₀.
#[derive(Debug, Clone)]
pub struct Sphere {
    pub n: usize,
    pub k: usize,
    /// Total power P₀; the sphere radius is √P₀.
    pub p0: f64,
}

impl Sphere {
    pub fn new(n: usize, k: usize, p0: f64) -> Result<Self> {
        if p0 <= 0.0 {
            return Err(RadcomError::Domain("sphere power must be > 0".into()));
        }
        Ok(Self { n, k, p0 })
    }

    pub fn radius(&self) -> f64 {
        self.p0.sqrt()
    }
}

impl Manifold for Sphere {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    fn total_power(&self) -> f64 {
        self.p0
    }

    fn project(&self, point: &CMat, ambient: &CMat) -> TangentVector {
        let radial = inner(point, ambient) / self.p0;
        TangentVector {
            mat: ambient - point * Complex64::new(radial, 0.0),
            base: point.clone(),
        }
    }

    fn retract(&self, point: &CMat, xi: &TangentVector, step: f64) -> Result<CMat> {
        let moved = point + &xi.mat * Complex64::new(step, 0.0);
        let norm = moved.norm();
        if norm < 1e-14 {
            return Err(RadcomError::DegenerateRetraction(
                "moved point has vanishing Frobenius norm".into(),
            ));
        }
        Ok(moved * Complex64::new(self.radius() / norm, 0.0))
    }

    fn constraint_residual(&self, point: &CMat) -> f64 {
        (point.norm() - self.radius()).abs() / self.radius()
    }

    fn tangency_residual(&self, point: &CMat, v: &CMat) -> f64 {
        let denom = (v.norm() * point.norm()).max(f64::MIN_POSITIVE);
        inner(point, v).abs() / denom
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<CMat> {
        let g = complex_gaussian(self.n, self.k, rng);
        let norm = g.norm();
        if norm < 1e-14 {
            return Err(RadcomError::DegenerateRetraction("degenerate random draw".into()));
        }
        Ok(g * Complex64::new(self.radius() / norm, 0.0))
    }
}

/// Complex oblique manifold: K×N matrices whose columns all have norm
/// √(P₀/N), one column per antenna.
#[derive(Debug, Clone)]
pub struct Oblique {
    pub k: usize,
    pub n: usize,
    pub p0: f64,
}

impl Oblique {
    pub fn new(k: usize, n: usize, p0: f64) -> Result<Self> {
        if p0 <= 0.0 {
            return Err(RadcomError::Domain("oblique power must be > 0".into()));
        }
        Ok(Self { k, n, p0 })
    }

    pub fn col_norm(&self) -> f64 {
        (self.p0 / self.n as f64).sqrt()
    }
}

impl Manifold for Oblique {
    fn shape(&self) -> (usize, usize) {
        (self.k, self.n)
    }

    fn total_power(&self) -> f64 {
        self.p0
    }

    fn project(&self, point: &CMat, ambient: &CMat) -> TangentVector {
        let scale = self.n as f64 / self.p0;
        let mut out = ambient.clone();
        for j in 0..self.n {
            let x = point.column(j);
            let f = ambient.column(j);
            let radial: f64 = x.iter().zip(f.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            let coeff = Complex64::new(radial * scale, 0.0);
            let mut col = out.column_mut(j);
            for (o, p) in col.iter_mut().zip(x.iter()) {
                *o -= coeff * p;
            }
        }
        TangentVector { mat: out, base: point.clone() }
    }

    fn retract(&self, point: &CMat, xi: &TangentVector, step: f64) -> Result<CMat> {
        let mut moved = point + &xi.mat * Complex64::new(step, 0.0);
        let target = self.col_norm();
        for j in 0..self.n {
            let norm = moved.column(j).norm();
            if norm < 1e-14 {
                return Err(RadcomError::DegenerateRetraction(format!(
                    "column {j} has vanishing norm"
                )));
            }
            let s = Complex64::new(target / norm, 0.0);
            for v in moved.column_mut(j).iter_mut() {
                *v *= s;
            }
        }
        Ok(moved)
    }

    fn constraint_residual(&self, point: &CMat) -> f64 {
        let target = self.col_norm();
        (0..self.n)
            .map(|j| (point.column(j).norm() - target).abs() / target)
            .fold(0.0, f64::max)
    }

    fn tangency_residual(&self, point: &CMat, v: &CMat) -> f64 {
        let denom = (v.norm() * point.norm()).max(f64::MIN_POSITIVE);
        (0..self.n)
            .map(|j| {
                let x = point.column(j);
                let f = v.column(j);
                let r: f64 = x.iter().zip(f.iter()).map(|(a, b)| (a.conj() * b).re).sum();
                r.abs()
            })
            .fold(0.0, f64::max)
            / denom
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<CMat> {
        let g = complex_gaussian(self.k, self.n, rng);
        let zero = TangentVector { mat: CMat::zeros(self.k, self.n), base: g.clone() };
        self.retract(&g, &zero, 0.0)
    }
}

/// Validated point on the sphere. The constructor checks the norm invariant.
#[derive(Debug, Clone)]
pub struct SpherePoint {
    pub mat: CMat,
    pub manifold: Sphere,
}

impl SpherePoint {
    pub fn new(mat: CMat, manifold: Sphere) -> Result<Self> {
        if mat.shape() != manifold.shape() {
            return Err(RadcomError::DimensionMismatch("sphere point shape".into()));
        }
        if manifold.constraint_residual(&mat) > 1e-12 {
            return Err(RadcomError::Domain(format!(
                "Frobenius norm {} does not match radius {}",
                mat.norm(),
                manifold.radius()
            )));
        }
        Ok(Self { mat, manifold })
    }
}

/// Validated point on the oblique manifold.
#[derive(Debug, Clone)]
pub struct ObliquePoint {
    pub mat: CMat,
    pub manifold: Oblique,
}

impl ObliquePoint {
    pub fn new(mat: CMat, manifold: Oblique) -> Result<Self> {
        if mat.shape() != manifold.shape() {
            return Err(RadcomError::DimensionMismatch("oblique point shape".into()));
        }
        if manifold.constraint_residual(&mat) > 1e-12 {
            return Err(RadcomError::Domain("column norms do not match √(P₀/N)".into()));
        }
        Ok(Self { mat, manifold })
    }
}
