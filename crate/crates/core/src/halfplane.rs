//! Upper half-plane kernel: points, the (non-metric) hyperbolic distance,
//! real Moebius maps, and the free Green's function with its branch convention.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HalfPlaneError {
    #[error("point must have strictly positive imaginary part, got im = {0}")]
    NotInUpperHalfPlane(f64),
    #[error("coordinates must be finite, got ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("moebius coefficients must satisfy ad - bc > 0, got det = {0}")]
    DegenerateMap(f64),
    #[error("branching factor must be >= 2, got {0}")]
    BadBranching(u32),
    #[error("spectral broadening must be > 0, got {0}")]
    BadEta(f64),
}

/// A point of the open upper half-plane. `im > 0` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    re: f64,
    im: f64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self, HalfPlaneError> {
        if !re.is_finite() || !im.is_finite() {
            return Err(HalfPlaneError::NonFinite(re, im));
        }
        if im <= 0.0 {
            return Err(HalfPlaneError::NotInUpperHalfPlane(im));
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(z: Complex64) -> Result<Self, HalfPlaneError> {
        Self::new(z.re, z.im)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// |z - w|^2 / (Im z Im w). Symmetric, zero iff z == w, and not a metric.
/// Falls back to a log-domain evaluation when the direct quotient overflows;
/// beyond the representable range it returns +inf.
pub fn hyp_dist(z: HalfPlanePoint, w: HalfPlanePoint) -> f64 {
    let dr = z.re - w.re;
    let di = z.im - w.im;
    let num = dr * dr + di * di;
    let d = num / (z.im * w.im);
    if d.is_finite() {
        return d;
    }
    let log_num = 2.0 * dr.hypot(di).ln();
    let t = log_num - z.im.ln() - w.im.ln();
    if t > f64::MAX.ln() {
        f64::INFINITY
    } else {
        t.exp()
    }
}

/// Square root of `e^z = e^{z/2}` type: the argument of `z`, taken in
/// (-pi, pi], is halved. Negative reals land on the upper side of the cut,
/// so `branch_sqrt(-4) = 2i` regardless of the sign of the zero in Im z.
pub fn branch_sqrt(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = z.norm();
    let mut theta = z.im.atan2(z.re);
    if z.im == 0.0 && z.re < 0.0 {
        theta = std::f64::consts::PI;
    }
    Complex64::from_polar(r.sqrt(), theta / 2.0)
}

/// The free punctured Green's function
/// `w_z = (-z + sqrt(z + 2 sqrt K) sqrt(z - 2 sqrt K)) / (2K)`,
/// a root of `K w^2 + z w + 1 = 0`. For Im z >= 0 the result lies in the
/// closed upper half-plane; it is real exactly when Im z = 0 and |E| >= 2 sqrt K.
pub fn free_green(z: Complex64, k: u32) -> Complex64 {
    let sk = 2.0 * (k as f64).sqrt();
    let root = branch_sqrt(z + sk) * branch_sqrt(z - sk);
    (-z + root) / (2.0 * k as f64)
}

/// Real-coefficient Moebius map z -> (az + b)/(cz + d) with ad - bc > 0,
/// normalized to determinant 1 at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl MoebiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, HalfPlaneError> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(HalfPlaneError::DegenerateMap(det));
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    /// phi_E(z) = -1/(Kz + E), the self-consistent map.
    pub fn phi(k: u32, e: f64) -> Self {
        Self::new(0.0, -1.0, k as f64, e).expect("det = K > 0")
    }

    /// psi(z) = -1/z.
    pub fn psi() -> Self {
        Self::new(0.0, -1.0, 1.0, 0.0).expect("det = 1")
    }

    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn apply(&self, z: HalfPlanePoint) -> HalfPlanePoint {
        let out = self.apply_complex(z.as_complex());
        // det > 0 and Im z > 0 force Im out = det Im z / |cz+d|^2 > 0
        HalfPlanePoint::from_complex(out).expect("moebius maps H into H")
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// self after other: (self . other)(z) = self(other(z)).
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        MoebiusMap::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
        .expect("composition of nondegenerate maps")
    }
}

/// Spectral parameter z = E + i eta on a (K+1)-regular tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub e: f64,
    pub eta: f64,
    pub k: u32,
}

impl EnergyPoint {
    pub fn new(e: f64, eta: f64, k: u32) -> Result<Self, HalfPlaneError> {
        if k < 2 {
            return Err(HalfPlaneError::BadBranching(k));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(HalfPlaneError::BadEta(eta));
        }
        Ok(Self { e, eta, k })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }

    /// w_{E + i eta}; lies in the open upper half-plane since eta > 0.
    pub fn free_point(&self) -> HalfPlanePoint {
        HalfPlanePoint::from_complex(free_green(self.z(), self.k))
            .expect("free green has positive imaginary part for eta > 0")
    }
}
