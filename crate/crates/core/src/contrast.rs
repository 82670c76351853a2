//! Source priors and the MM weights they induce.
//!
//! A spherical prior `exp(-G(r))` on the per-frame activity `r` gives the
//! weighting `phi(r) = G'(r) / (2 r)` used to build the weighted covariance.

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContrastKind {
    /// Time-invariant Laplace: `G(r) = r`.
    Laplace,
    /// Time-varying Gauss: `G(r) = 2 F log r`.
    Gauss,
}

impl ContrastKind {
    pub fn name(self) -> &'static str {
        match self {
            ContrastKind::Laplace => "laplace",
            ContrastKind::Gauss => "gauss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laplace" => Some(ContrastKind::Laplace),
            "gauss" => Some(ContrastKind::Gauss),
            _ => None,
        }
    }
}

/// Per-frame weighting applied when forming a weighted covariance.
pub trait Weighting {
    fn phi(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Weighting for F {
    fn phi(&self, r: f64) -> f64 {
        self(r)
    }
}

/// A contrast bound to the number of frequency bins it is applied over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastModel {
    pub kind: ContrastKind,
    pub num_bins: usize,
}

impl ContrastModel {
    pub fn new(kind: ContrastKind, num_bins: usize) -> Self {
        Self { kind, num_bins }
    }

    pub fn laplace() -> Self {
        Self::new(ContrastKind::Laplace, 1)
    }

    pub fn gauss(num_bins: usize) -> Self {
        Self::new(ContrastKind::Gauss, num_bins)
    }

    /// `G(r)`.
    pub fn g(&self, r: f64) -> f64 {
        match self.kind {
            ContrastKind::Laplace => r,
            ContrastKind::Gauss => 2.0 * self.num_bins as f64 * r.ln(),
        }
    }

    /// `G` continued below `floor` by the quadratic whose weight is
    /// `phi(floor)`, so that `phi(max(r, floor)) = G~'(r) / 2r` everywhere and
    /// the surrogate stays a majorizer for activities under the floor.
    pub fn g_floored(&self, r: f64, floor: f64) -> f64 {
        if r >= floor {
            self.g(r)
        } else {
            self.g(floor) + self.phi(floor) * (r * r - floor * floor)
        }
    }

    /// `G'(r)`.
    pub fn g_prime(&self, r: f64) -> f64 {
        match self.kind {
            ContrastKind::Laplace => 1.0,
            ContrastKind::Gauss => 2.0 * self.num_bins as f64 / r,
        }
    }
}

impl Weighting for ContrastModel {
    fn phi(&self, r: f64) -> f64 {
        match self.kind {
            ContrastKind::Laplace => 0.5 / r,
            ContrastKind::Gauss => self.num_bins as f64 / (r * r),
        }
    }
}
