//! Torus geometry: the square `(-L/2, L/2]^2` of the integer lattice with
//! coordinates identified mod `L`, lattice point sets, and torus frequencies.
//!
//! Grid storage is row-major over canonical representatives: the site
//! `(x, y)` lives at `(x + L/2 - 1) * L + (y + L/2 - 1)`. Spectral arrays
//! use the same map, so the frequency stored at index `i` is the one whose
//! integer label `y` sits at index `i`.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("torus side must be a positive even integer, got {0}")]
    BadSide(usize),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

/// A lattice point. On a torus it is read as a canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Site { x, y }
    }

    pub fn is_origin(self) -> bool {
        self == Self::ORIGIN
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y
    }

    /// Euclidean norm `|x|`.
    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn sup_norm(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i64, i64)> for Site {
    fn from((x, y): (i64, i64)) -> Self {
        Site::new(x, y)
    }
}

/// Side length `L` of the torus `T_L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusSpec {
    side: usize,
}

impl TorusSpec {
    pub fn new(side: usize) -> Result<Self, TorusError> {
        if side < 2 || !side.is_multiple_of(2) {
            return Err(TorusError::BadSide(side));
        }
        Ok(TorusSpec { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn half(&self) -> i64 {
        (self.side / 2) as i64
    }

    /// `|T_L| = L^2`.
    pub fn size(&self) -> usize {
        self.side * self.side
    }

    fn wrap_coord(&self, v: i64) -> i64 {
        let l = self.side as i64;
        let r = v.rem_euclid(l);
        if r > l / 2 {
            r - l
        } else {
            r
        }
    }

    /// Canonical representative of `p` in `(-L/2, L/2]^2`.
    pub fn wrap(&self, p: Site) -> Site {
        Site::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
    }

    /// Row-major storage index of (the wrap of) `p`.
    pub fn index(&self, p: Site) -> usize {
        let w = self.wrap(p);
        let off = self.half() - 1;
        ((w.x + off) as usize) * self.side + (w.y + off) as usize
    }

    /// Inverse of [`TorusSpec::index`].
    pub fn site(&self, index: usize) -> Site {
        debug_assert!(index < self.size());
        let off = self.half() - 1;
        Site::new((index / self.side) as i64 - off, (index % self.side) as i64 - off)
    }

    pub fn origin_index(&self) -> usize {
        self.index(Site::ORIGIN)
    }

    /// Index in natural DFT order, where coordinate `v` sits at `v mod L`.
    pub fn dft_index(&self, p: Site) -> usize {
        let l = self.side as i64;
        (p.x.rem_euclid(l) as usize) * self.side + p.y.rem_euclid(l) as usize
    }

    /// All sites of `T_L` in storage order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.size()).map(move |i| self.site(i))
    }

    /// Every `y` in `T_L` paired with `theta = 2 pi y / L`, in storage order.
    pub fn frequencies<T: Real>(&self) -> Vec<Frequency<T>> {
        let scale = T::TAU() / T::from_count(self.side);
        self.sites()
            .map(|y| Frequency { label: y, theta: [T::lit(y.x as f64) * scale, T::lit(y.y as f64) * scale] })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency<T> {
    pub label: Site,
    pub theta: [T; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `Lambda_k = [-k/2, k/2]^2`.
    LatticeBox { k: f64 },
    /// `T_r = (-r/2, r/2]^2`; `r` need not be an integer.
    TorusSquare { side: f64 },
    /// `D_k = { |x| <= k/2 }`.
    Disc { k: f64 },
    /// `A_L(alpha, v)`, a subset of `T_L`.
    Annulus { spec: TorusSpec, alpha: f64, v: f64 },
}

/// A finite lattice point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    shape: Shape,
    punctured: bool,
}

fn in_torus_square(p: Site, side: f64) -> bool {
    let h = side / 2.0;
    let inside = |v: i64| (v as f64) > -h && (v as f64) <= h;
    inside(p.x) && inside(p.y)
}

impl Region {
    pub fn lattice_box(k: f64) -> Self {
        Region { shape: Shape::LatticeBox { k }, punctured: false }
    }

    pub fn torus_square(side: f64) -> Self {
        Region { shape: Shape::TorusSquare { side }, punctured: false }
    }

    pub fn disc(k: f64) -> Self {
        Region { shape: Shape::Disc { k }, punctured: false }
    }

    /// The start-point region `A_L(alpha, v)`:
    /// `T'_v` for `alpha = 0`, `T_{L^a v} \ T_{L^a / v}` for `0 < alpha < 1`,
    /// and `T_L \ T_{L/v}` for `alpha = 1`, all intersected with `T_L`.
    pub fn annulus(spec: TorusSpec, alpha: f64, v: f64) -> Self {
        Region { shape: Shape::Annulus { spec, alpha, v }, punctured: false }
    }

    /// `A' = A \ {0}`.
    pub fn punctured(mut self) -> Self {
        self.punctured = true;
        self
    }

    pub fn validate(&self) -> Result<(), TorusError> {
        let size_ok = |v: f64| v.is_finite() && v >= 0.0;
        match self.shape {
            Shape::LatticeBox { k } | Shape::Disc { k } if !size_ok(k) => {
                Err(TorusError::InvalidRegion(format!("size parameter {k} must be finite and >= 0")))
            }
            Shape::TorusSquare { side } if !size_ok(side) => {
                Err(TorusError::InvalidRegion(format!("side {side} must be finite and >= 0")))
            }
            Shape::Annulus { alpha, v, .. } => {
                if !(0.0..=1.0).contains(&alpha) {
                    Err(TorusError::InvalidRegion(format!("alpha {alpha} outside [0, 1]")))
                } else if !(v.is_finite() && v > 0.0) {
                    Err(TorusError::InvalidRegion(format!("v {v} must be finite and > 0")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, p: Site) -> bool {
        if self.punctured && p.is_origin() {
            return false;
        }
        match self.shape {
            Shape::LatticeBox { k } => {
                let h = k / 2.0;
                (p.x.abs() as f64) <= h && (p.y.abs() as f64) <= h
            }
            Shape::TorusSquare { side } => in_torus_square(p, side),
            Shape::Disc { k } => (p.norm_sq() as f64) <= (k / 2.0) * (k / 2.0),
            Shape::Annulus { spec, alpha, v } => {
                if spec.wrap(p) != p {
                    return false;
                }
                let l = spec.side() as f64;
                if alpha == 0.0 {
                    !p.is_origin() && in_torus_square(p, v)
                } else if alpha == 1.0 {
                    !in_torus_square(p, l / v)
                } else {
                    let scale = l.powf(alpha);
                    in_torus_square(p, scale * v) && !in_torus_square(p, scale / v)
                }
            }
        }
    }

    /// The exact point set, sorted lexicographically (storage order for
    /// subsets of a torus). An empty region yields an empty vector.
    pub fn enumerate(&self) -> Result<Vec<Site>, TorusError> {
        self.validate()?;
        let reach = match self.shape {
            Shape::LatticeBox { k } | Shape::Disc { k } => (k / 2.0).floor() as i64,
            Shape::TorusSquare { side } => (side / 2.0).floor() as i64,
            Shape::Annulus { spec, .. } => {
                return Ok(spec.sites().filter(|&p| self.contains(p)).collect());
            }
        };
        let mut out = Vec::new();
        for x in -reach..=reach {
            for y in -reach..=reach {
                let p = Site::new(x, y);
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}
