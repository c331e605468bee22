//! Membership-testable subsets of the complex plane.

use crate::rng::SampleRng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Plane,
    Disk {
        center: Complex64,
        radius: f64,
    },
    /// `{center + rho e^{i theta} : rho > 0, angle_lo <= theta < angle_hi}`.
    Sector {
        center: Complex64,
        angle_lo: f64,
        angle_hi: f64,
    },
    /// `lo <= |z - center| < hi`; `hi` may be infinite.
    GapAnnulus {
        center: Complex64,
        lo: f64,
        hi: f64,
    },
    /// `center_modulus / ratio <= |z - center| < center_modulus * ratio`.
    DyadicAnnulus {
        center: Complex64,
        center_modulus: f64,
        ratio: f64,
    },
    /// Points strictly closer to `roots[root_index]` than to every other root.
    NearestRootCell {
        root_index: usize,
        roots: Vec<Complex64>,
    },
    Intersection(Vec<Region>),
}

/// Local torsion data attached to cells of a polynomial curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMeta {
    pub k: u32,
    pub hk: f64,
    /// Root of `phi'''` the cell is built around.
    pub center: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<CellMeta>,
}

fn origin() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Argument of `z` in `[0, 2 pi)`.
pub fn angle(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        (a + TAU).min(TAU.next_down())
    } else {
        a
    }
}

impl Region {
    pub fn new(kind: RegionKind) -> Self {
        Self { kind, meta: None }
    }

    pub fn plane() -> Self {
        Self::new(RegionKind::Plane)
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(RegionKind::Disk {
            center: origin(),
            radius,
        })
    }

    pub fn sector(angle_lo: f64, angle_hi: f64) -> Self {
        Self::sector_at(origin(), angle_lo, angle_hi)
    }

    pub fn sector_at(center: Complex64, angle_lo: f64, angle_hi: f64) -> Self {
        debug_assert!(0.0 <= angle_lo && angle_lo < angle_hi && angle_hi <= TAU + 1e-12);
        Self::new(RegionKind::Sector {
            center,
            angle_lo,
            angle_hi,
        })
    }

    pub fn annulus_at(center: Complex64, lo: f64, hi: f64) -> Self {
        Self::new(RegionKind::GapAnnulus { center, lo, hi })
    }

    pub fn intersection(parts: Vec<Region>) -> Self {
        Self::new(RegionKind::Intersection(parts))
    }

    pub fn with_meta(mut self, meta: CellMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match &self.kind {
            RegionKind::Plane => true,
            RegionKind::Disk { center, radius } => (z - center).norm() <= *radius,
            RegionKind::Sector {
                center,
                angle_lo,
                angle_hi,
            } => {
                let w = z - center;
                if w.norm() == 0.0 {
                    return false;
                }
                let a = angle(w);
                *angle_lo <= a && a < *angle_hi
            }
            RegionKind::GapAnnulus { center, lo, hi } => {
                let r = (z - center).norm();
                *lo <= r && r < *hi
            }
            RegionKind::DyadicAnnulus {
                center,
                center_modulus,
                ratio,
            } => {
                let r = (z - center).norm();
                center_modulus / ratio <= r && r < center_modulus * ratio
            }
            RegionKind::NearestRootCell { root_index, roots } => {
                let own = (z - roots[*root_index]).norm();
                roots
                    .iter()
                    .enumerate()
                    .all(|(i, u)| i == *root_index || own < (z - u).norm())
            }
            RegionKind::Intersection(parts) => parts.iter().all(|p| p.contains(z)),
        }
    }

    fn flatten<'a>(&'a self, out: &mut Vec<&'a Region>) {
        match &self.kind {
            RegionKind::Intersection(parts) => parts.iter().for_each(|p| p.flatten(out)),
            RegionKind::Plane => {}
            _ => out.push(self),
        }
    }

    /// Polar coordinates box `(center, theta range, rho range)` of a simple part.
    fn polar_part(&self) -> Option<PolarBox> {
        let full = |center, rlo: f64, rhi: f64| PolarBox {
            center,
            theta: (0.0, TAU),
            rho: (rlo, rhi),
        };
        match &self.kind {
            RegionKind::Disk { center, radius } => Some(full(*center, 0.0, *radius)),
            RegionKind::Sector {
                center,
                angle_lo,
                angle_hi,
            } => Some(PolarBox {
                center: *center,
                theta: (*angle_lo, *angle_hi),
                rho: (0.0, f64::INFINITY),
            }),
            RegionKind::GapAnnulus { center, lo, hi } => Some(full(*center, *lo, *hi)),
            RegionKind::DyadicAnnulus {
                center,
                center_modulus,
                ratio,
            } => Some(full(
                *center,
                center_modulus / ratio,
                center_modulus * ratio,
            )),
            _ => None,
        }
    }

    /// Sampling envelope for `self ∩ domain`, where `domain` must be bounded.
    pub fn envelope(&self, domain: &Region) -> Envelope {
        let mut parts = Vec::new();
        self.flatten(&mut parts);
        domain.flatten(&mut parts);
        // merge polar parts sharing a center, keep the smallest bounded box
        let mut boxes: Vec<PolarBox> = Vec::new();
        for p in &parts {
            if let Some(b) = p.polar_part() {
                match boxes.iter_mut().find(|x| x.center == b.center) {
                    Some(x) => x.intersect(&b),
                    None => boxes.push(b),
                }
            }
        }
        let best = boxes
            .into_iter()
            .filter(|b| b.rho.1.is_finite())
            .min_by(|a, b| a.area().partial_cmp(&b.area()).unwrap())
            .expect("envelope requires a bounded domain");
        Envelope {
            polar: best,
            constraint: Region::intersection(vec![self.clone(), domain.clone()]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PolarBox {
    center: Complex64,
    theta: (f64, f64),
    rho: (f64, f64),
}

impl PolarBox {
    fn intersect(&mut self, other: &PolarBox) {
        self.theta = (
            self.theta.0.max(other.theta.0),
            self.theta.1.min(other.theta.1),
        );
        self.rho = (self.rho.0.max(other.rho.0), self.rho.1.min(other.rho.1));
    }

    fn area(&self) -> f64 {
        let dt = (self.theta.1 - self.theta.0).max(0.0);
        let (a, b) = self.rho;
        if b <= a {
            return 0.0;
        }
        0.5 * dt * (b * b - a * a)
    }
}

/// Uniform proposal distribution covering a bounded region.
#[derive(Debug, Clone)]
pub struct Envelope {
    polar: PolarBox,
    constraint: Region,
}

impl Envelope {
    /// Area of the proposal box (an upper bound for the region's area).
    pub fn area(&self) -> f64 {
        self.polar.area()
    }

    /// Radius of the smallest disk around the origin containing the box.
    pub fn outer_radius(&self) -> f64 {
        self.polar.center.norm() + self.polar.rho.1
    }

    /// Draws a uniform proposal; `None` when it falls outside the region.
    pub fn propose(&self, rng: &mut SampleRng) -> Option<Complex64> {
        if self.area() == 0.0 {
            return None;
        }
        let (a, b) = self.polar.rho;
        let rho = (a * a + (b * b - a * a) * rng.uniform()).sqrt();
        let theta = rng.range(self.polar.theta.0, self.polar.theta.1);
        let z = self.polar.center + Complex64::from_polar(rho, theta);
        self.constraint.contains(z).then_some(z)
    }

    /// Rejection sampling with at most `tries` proposals.
    pub fn sample(&self, rng: &mut SampleRng, tries: usize) -> Option<Complex64> {
        (0..tries).find_map(|_| self.propose(rng))
    }
}
