//! Geometry of the Z-directed thin dipole above the interface: uniform
//! segmentation into overlapping triangle (rooftop) basis functions and the
//! delta-gap excitation vector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::wavelength;
use crate::error::{Error, Result};

/// Physical description of the dipole. Lengths in metres, frequency in hertz.
///
/// `height` is the gap between the lower wire end and the interface, so the
/// wire occupies z ∈ [height, height + length].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpec {
    pub length: f64,
    pub height: f64,
    pub radius: f64,
    pub frequency: f64,
    /// Number of interior basis functions; must be odd and >= 3.
    pub segments: usize,
}

impl DipoleSpec {
    /// Half-wave dipole at `frequency`, radius λ/1000, segmented with `n`
    /// basis functions, bottom end `height` metres above the interface.
    pub fn half_wave(frequency: f64, height: f64, n: usize) -> Self {
        let lambda = wavelength(frequency);
        DipoleSpec {
            length: 0.5 * lambda,
            height,
            radius: lambda / 1000.0,
            frequency,
            segments: n,
        }
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.frequency)
    }

    pub fn wavenumber(&self) -> f64 {
        crate::constants::wavenumber(self.frequency)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("length", self.length),
            ("height", self.height),
            ("radius", self.radius),
            ("frequency", self.frequency),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveDimension { name, value });
            }
        }
        let limit = self.wavelength() / 100.0;
        if self.radius >= limit {
            return Err(Error::RadiusTooLarge {
                radius: self.radius,
                limit,
            });
        }
        if self.segments < 3 {
            return Err(Error::TooFewSegments(self.segments));
        }
        if self.segments.is_multiple_of(2) {
            return Err(Error::EvenSegmentCount(self.segments));
        }
        Ok(())
    }
}

/// Discretised dipole: `n + 2` nodes spanning [h, h+L] define `n + 1` uniform
/// segments; basis function `i` (0-based) is the triangle peaking at interior
/// node `i + 1` with support over segments `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WireMesh {
    pub spec: DipoleSpec,
    /// Strictly increasing node coordinates; `node_z[0] = h`, `node_z[n+1] = h + L`.
    pub node_z: Vec<f64>,
    /// 0-based index of the basis function at the dipole centre.
    pub feed_index: usize,
}

impl WireMesh {
    /// Number of basis functions (unknowns).
    pub fn num_basis(&self) -> usize {
        self.spec.segments
    }

    /// Number of wire segments.
    pub fn num_segments(&self) -> usize {
        self.node_z.len() - 1
    }

    /// Segment length (uniform mesh).
    pub fn segment_len(&self) -> f64 {
        self.spec.length / self.num_segments() as f64
    }

    /// Segment endpoints (z_lo, z_hi) for 0-based segment `s`.
    pub fn segment(&self, s: usize) -> (f64, f64) {
        (self.node_z[s], self.node_z[s + 1])
    }

    /// Value of basis function `i` at coordinate `z` (0 outside its support).
    pub fn basis_value(&self, i: usize, z: f64) -> f64 {
        let (lo, peak, hi) = (self.node_z[i], self.node_z[i + 1], self.node_z[i + 2]);
        if z <= lo || z >= hi {
            0.0
        } else if z <= peak {
            (z - lo) / (peak - lo)
        } else {
            (hi - z) / (hi - peak)
        }
    }

    /// d/dz of basis `i` on segment `s` (constant per segment; 0 off-support).
    pub fn basis_slope(&self, i: usize, s: usize) -> f64 {
        let delta = self.segment_len();
        if s == i {
            1.0 / delta
        } else if s == i + 1 {
            -1.0 / delta
        } else {
            0.0
        }
    }

    /// Current distribution along the wire for a coefficient vector.
    pub fn current_profile(&self, coeffs: &[Complex64], z: f64) -> Complex64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.basis_value(i, z))
            .sum()
    }
}

/// Uniformly segment the dipole into triangle basis functions.
pub fn segment_dipole(spec: &DipoleSpec) -> Result<WireMesh> {
    spec.validate()?;
    let n = spec.segments;
    let num_nodes = n + 2;
    let delta = spec.length / (n + 1) as f64;
    let mut node_z = Vec::with_capacity(num_nodes);
    for k in 0..num_nodes {
        node_z.push(spec.height + delta * k as f64);
    }
    // pin the endpoints exactly
    node_z[0] = spec.height;
    node_z[n + 1] = spec.height + spec.length;
    Ok(WireMesh {
        spec: *spec,
        node_z,
        feed_index: (n - 1) / 2,
    })
}

/// Delta-gap excitation: the tested incident field is nonzero only for the
/// basis function whose peak sits at the feed node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationVector {
    pub v: Vec<Complex64>,
    pub feed_index: usize,
}

pub fn delta_gap_excitation(mesh: &WireMesh, voltage: Complex64) -> ExcitationVector {
    let mut v = vec![Complex64::ZERO; mesh.num_basis()];
    v[mesh.feed_index] = voltage;
    ExcitationVector {
        v,
        feed_index: mesh.feed_index,
    }
}
