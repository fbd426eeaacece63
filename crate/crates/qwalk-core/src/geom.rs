//! Lattice coordinates and rectangular regions.

use serde::{Deserialize, Serialize};

/// A lattice site in absolute coordinates.
pub type Site = (i64, i64);

/// A rectangular block of lattice sites: `x ∈ [x0, x0+width)`, `y ∈ [y0, y0+height)`.
///
/// Regions index row-major: site `(x, y)` maps to `(y - y0) * width + (x - x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
}

impl Region {
    /// Region centered on the origin with the given odd extent.
    pub fn centered(width: usize, height: usize) -> Region {
        debug_assert!(width % 2 == 1 && height % 2 == 1);
        Region {
            x0: -((width as i64 - 1) / 2),
            y0: -((height as i64 - 1) / 2),
            width,
            height,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inclusive maximum x coordinate.
    #[inline]
    pub fn x1(&self) -> i64 {
        self.x0 + self.width as i64 - 1
    }

    /// Inclusive maximum y coordinate.
    #[inline]
    pub fn y1(&self) -> i64 {
        self.y0 + self.height as i64 - 1
    }

    #[inline]
    pub fn contains(&self, (x, y): Site) -> bool {
        x >= self.x0 && x <= self.x1() && y >= self.y0 && y <= self.y1()
    }

    /// Row-major index of a site known to be inside the region.
    #[inline]
    pub fn index(&self, (x, y): Site) -> usize {
        debug_assert!(self.contains((x, y)));
        (y - self.y0) as usize * self.width + (x - self.x0) as usize
    }

    /// The region enlarged by `margin` sites on every side.
    pub fn grown(&self, margin: usize) -> Region {
        Region {
            x0: self.x0 - margin as i64,
            y0: self.y0 - margin as i64,
            width: self.width + 2 * margin,
            height: self.height + 2 * margin,
        }
    }

    /// Iterate all sites in row-major order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = *self;
        (r.y0..=r.y1()).flat_map(move |y| (r.x0..=r.x1()).map(move |x| (x, y)))
    }
}
