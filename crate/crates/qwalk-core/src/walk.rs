//! Real-space evolution of the split-step walk over an occupancy mask.
//!
//! One protocol step applies, for each `(θ, δ)` sub-step pair, a site-local coin
//! rotation followed by a reflection-modified conditional translation: the up
//! component at `r` moves to `r + δ` and the down component to `r − δ`, and a
//! component whose destination site is absent stays at `r` with its coin
//! flipped. Equivalently, as a gather over destination sites `r`:
//!
//! ```text
//! up'(r)   = up(r − δ)    if r − δ occupied,  else  down(r)
//! down'(r) = down(r + δ)  if r + δ occupied,  else  up(r)
//! ```
//!
//! for occupied `r` (absent sites carry exactly zero amplitude). Every source
//! component lands in exactly one destination, so each sub-step is a permutation
//! composed with an orthogonal rotation — unitary to rounding. Sites beyond the
//! stored region count as absent: the region boundary reflects. Production walks
//! therefore grow the region (and mask) whenever any probability above a
//! threshold approaches the boundary, so the walker never feels the box.
//!
//! The kernel is matrix-free: rotation and translation are fused into a single
//! gather sweep per sub-step over the active window (the rectangle that can hold
//! nonzero amplitude, expanded by `δ` per sub-step), ping-ponging between two
//! dense buffers over the mask's stored region.

use crate::error::{Error, Result};
use crate::geom::{Region, Site};
use crate::lattice::OccupancyMask;
use crate::protocol::ProtocolSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Two-component amplitude at one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Spinor {
    pub u: Complex64,
    pub d: Complex64,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor {
        u: Complex64::new(0.0, 0.0),
        d: Complex64::new(0.0, 0.0),
    };

    #[inline(always)]
    pub fn prob(&self) -> f64 {
        self.u.norm_sqr() + self.d.norm_sqr()
    }
}

/// Rotated up component: `cos(θ/2)·u + sin(θ/2)·d`.
#[inline(always)]
fn rot_u(s: Spinor, c: f64, sn: f64) -> Complex64 {
    Complex64::new(c * s.u.re + sn * s.d.re, c * s.u.im + sn * s.d.im)
}

/// Rotated down component: `−sin(θ/2)·u + cos(θ/2)·d`.
#[inline(always)]
fn rot_d(s: Spinor, c: f64, sn: f64) -> Complex64 {
    Complex64::new(c * s.d.re - sn * s.u.re, c * s.d.im - sn * s.u.im)
}

/// Inclusive rectangle of lattice sites (the active window).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: i64,
    x1: i64,
    y0: i64,
    y1: i64,
}

impl Rect {
    fn single(site: Site) -> Rect {
        Rect {
            x0: site.0,
            x1: site.0,
            y0: site.1,
            y1: site.1,
        }
    }

    fn full(r: Region) -> Rect {
        Rect {
            x0: r.x0,
            x1: r.x1(),
            y0: r.y0,
            y1: r.y1(),
        }
    }

    fn expand_clamped(&self, dx: i64, dy: i64, r: Region) -> Rect {
        Rect {
            x0: (self.x0 - dx).max(r.x0),
            x1: (self.x1 + dx).min(r.x1()),
            y0: (self.y0 - dy).max(r.y0),
            y1: (self.y1 + dy).min(r.y1()),
        }
    }

    fn intersect(&self, other: Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (r.x0 <= r.x1 && r.y0 <= r.y1).then_some(r)
    }
}

/// Allocate a zeroed spinor buffer, failing softly on impossible sizes.
fn alloc_spinors(w: usize, h: usize) -> Result<Vec<Spinor>> {
    let n = w
        .checked_mul(h)
        .ok_or_else(|| Error::resource(format!("state extent {w}x{h} overflows address space")))?;
    let mut v = Vec::new();
    v.try_reserve_exact(n).map_err(|_| {
        Error::resource(format!(
            "cannot allocate {:.1} GiB state buffer ({w}x{h} sites)",
            (n * std::mem::size_of::<Spinor>()) as f64 / (1u64 << 30) as f64
        ))
    })?;
    v.resize(n, Spinor::ZERO);
    Ok(v)
}

/// Complex two-component amplitude field over a mask's stored region.
#[derive(Debug, Clone)]
pub struct WalkerState {
    region: Region,
    window: Rect,
    buf: Vec<Spinor>,
    scratch: Vec<Spinor>,
    zero_row: Vec<u64>,
    step_count: u64,
}

impl WalkerState {
    /// Unit-norm state with all amplitude on the origin in the protocol's
    /// initial coin state.
    pub fn init(mask: &OccupancyMask, spec: &ProtocolSpec) -> Result<WalkerState> {
        let region = mask.region();
        let mut buf = alloc_spinors(region.width, region.height)?;
        let (u, d) = spec.initial_coin.amplitudes();
        buf[region.index((0, 0))] = Spinor { u, d };
        Ok(WalkerState {
            region,
            window: Rect::single((0, 0)),
            buf,
            scratch: alloc_spinors(region.width, region.height)?,
            zero_row: vec![0u64; region.width.div_ceil(64)],
            step_count: 0,
        })
    }

    /// Build a state from an arbitrary amplitude function (window spans the
    /// whole region). Intended for tests and analysis tools; no normalization
    /// or mask-support constraint is imposed.
    pub fn from_fn(
        region: Region,
        f: impl Fn(Site) -> (Complex64, Complex64),
    ) -> Result<WalkerState> {
        let mut buf = alloc_spinors(region.width, region.height)?;
        for (i, site) in region.sites().enumerate() {
            let (u, d) = f(site);
            buf[i] = Spinor { u, d };
        }
        Ok(WalkerState {
            region,
            window: Rect::full(region),
            buf,
            scratch: alloc_spinors(region.width, region.height)?,
            zero_row: vec![0u64; region.width.div_ceil(64)],
            step_count: 0,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Amplitudes at a site (zero outside the stored region).
    pub fn amplitude(&self, site: Site) -> (Complex64, Complex64) {
        if self.region.contains(site) {
            let s = self.buf[self.region.index(site)];
            (s.u, s.d)
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        }
    }

    /// Total probability (squared norm).
    pub fn norm_sqr(&self) -> f64 {
        self.fold_window(0.0, |acc, _, _, s| acc + s.prob())
    }

    /// Mean square displacement from the origin: `Σ (x² + y²)·prob`.
    pub fn msd(&self) -> f64 {
        self.fold_window(0.0, |acc, x, y, s| {
            acc + ((x * x + y * y) as f64) * s.prob()
        })
    }

    /// Per-site probability over the stored region. Sums to the squared norm.
    pub fn probability_snapshot(&self) -> ProbabilityField {
        let mut probs = vec![0.0; self.region.len()];
        let w = self.region.width;
        for y in self.window.y0..=self.window.y1 {
            let base = (y - self.region.y0) as usize * w;
            for x in self.window.x0..=self.window.x1 {
                let i = base + (x - self.region.x0) as usize;
                probs[i] = self.buf[i].prob();
            }
        }
        ProbabilityField {
            region: self.region,
            probs,
        }
    }

    #[inline]
    fn fold_window<A>(&self, init: A, mut f: impl FnMut(A, i64, i64, &Spinor) -> A) -> A {
        let mut acc = init;
        let w = self.region.width;
        for y in self.window.y0..=self.window.y1 {
            let base = (y - self.region.y0) as usize * w;
            let jx0 = (self.window.x0 - self.region.x0) as usize;
            let jx1 = (self.window.x1 - self.region.x0) as usize;
            let row = &self.buf[base + jx0..=base + jx1];
            let mut x = self.window.x0;
            for s in row {
                acc = f(acc, x, y, s);
                x += 1;
            }
        }
        acc
    }

    /// Site-local coin rotation by θ at every site.
    pub fn coin_rotate(&mut self, theta: f64) {
        let (c, sn) = {
            let h = 0.5 * theta;
            (h.cos(), h.sin())
        };
        let w = self.region.width;
        for y in self.window.y0..=self.window.y1 {
            let base = (y - self.region.y0) as usize * w;
            let jx0 = (self.window.x0 - self.region.x0) as usize;
            let jx1 = (self.window.x1 - self.region.x0) as usize;
            for s in &mut self.buf[base + jx0..=base + jx1] {
                *s = Spinor {
                    u: rot_u(*s, c, sn),
                    d: rot_d(*s, c, sn),
                };
            }
        }
    }

    /// Reflection-modified conditional translation by `delta` (no rotation).
    pub fn shift_reflect(&mut self, mask: &OccupancyMask, delta: (i64, i64)) -> Result<()> {
        self.check_delta(delta)?;
        self.check_region(mask)?;
        self.pass(mask, 0.0, delta);
        Ok(())
    }

    fn check_delta(&self, delta: (i64, i64)) -> Result<()> {
        match delta {
            (1, 1) | (0, 1) | (1, 0) => Ok(()),
            other => Err(Error::invalid(format!(
                "translation delta {other:?} not one of (1,1), (0,1), (1,0)"
            ))),
        }
    }

    fn check_region(&self, mask: &OccupancyMask) -> Result<()> {
        if mask.region() != self.region {
            return Err(Error::invalid(
                "state and mask cover different stored regions",
            ));
        }
        Ok(())
    }

    /// Fused sub-step: coin rotation by θ followed by the conditional
    /// translation by `delta`, in one gather sweep. Bitwise-identical to
    /// `coin_rotate(theta)` followed by `shift_reflect(mask, delta)` because
    /// both use the same per-site rotation expressions.
    pub(crate) fn pass(&mut self, mask: &OccupancyMask, theta: f64, delta: (i64, i64)) {
        debug_assert_eq!(mask.region(), self.region);
        let r = self.region;
        let (dx, dy) = delta;
        let (c, sn) = {
            let h = 0.5 * theta;
            (h.cos(), h.sin())
        };
        let dest = self.window.expand_clamped(dx, dy, r);
        let w = r.width;
        let w_u64 = w as u64;
        let src = &self.buf;
        let dst = &mut self.scratch;

        // Occupancy of column jx in a row's bit-words; false outside [0, w).
        #[inline(always)]
        fn occ_bit(row: &[u64], jx: i64, w_u64: u64) -> bool {
            (jx as u64) < w_u64 && (row[(jx >> 6) as usize] >> (jx & 63)) & 1 != 0
        }

        for y in dest.y0..=dest.y1 {
            let iy = (y - r.y0) as usize;
            let base = iy * w;
            let m_self = mask.row_words(iy);
            // Rows y∓dy fall outside the region at the sweep edges; an all-zero
            // occupancy row makes the gather take the reflect branch there.
            let m_up = if y - dy >= r.y0 && y - dy <= r.y1() {
                mask.row_words((y - dy - r.y0) as usize)
            } else {
                &self.zero_row
            };
            let m_dn = if y + dy >= r.y0 && y + dy <= r.y1() {
                mask.row_words((y + dy - r.y0) as usize)
            } else {
                &self.zero_row
            };
            let base_up = base.wrapping_sub((dy as usize).wrapping_mul(w));
            let base_dn = base + dy as usize * w;

            let jx0 = (dest.x0 - r.x0) as usize;
            let jx1 = (dest.x1 - r.x0) as usize;
            for jx in jx0..=jx1 {
                let out = &mut dst[base + jx];
                if !occ_bit(m_self, jx as i64, w_u64) {
                    *out = Spinor::ZERO;
                    continue;
                }
                let ju = jx as i64 - dx;
                let u = if occ_bit(m_up, ju, w_u64) {
                    // Source row is inside the region whenever its bit is set.
                    rot_u(src[base_up + ju as usize], c, sn)
                } else {
                    rot_d(src[base + jx], c, sn)
                };
                let jd = jx as i64 + dx;
                let d = if occ_bit(m_dn, jd, w_u64) {
                    rot_d(src[base_dn + jd as usize], c, sn)
                } else {
                    rot_u(src[base + jx], c, sn)
                };
                *out = Spinor { u, d };
            }
        }
        self.window = dest;
        std::mem::swap(&mut self.buf, &mut self.scratch);
    }

    /// Move the state into a larger stored region (same absolute coordinates).
    ///
    /// Buffers here reach gigabytes for weakly diluted long walks, so the peak
    /// footprint matters: free the scratch buffer before allocating the new
    /// state buffer, and allocate the replacement scratch only after the old
    /// state buffer has been dropped. Peak live memory is then `old + new`
    /// rather than `2·(old + new)`.
    fn reembed(&mut self, new_region: Region) -> Result<()> {
        debug_assert!(new_region.x0 <= self.region.x0 && new_region.x1() >= self.region.x1());
        debug_assert!(new_region.y0 <= self.region.y0 && new_region.y1() >= self.region.y1());
        self.scratch = Vec::new();
        let mut buf = alloc_spinors(new_region.width, new_region.height)?;
        let (ow, nw) = (self.region.width, new_region.width);
        for y in self.window.y0..=self.window.y1 {
            let o_base = (y - self.region.y0) as usize * ow;
            let n_base = (y - new_region.y0) as usize * nw;
            let jx0_o = (self.window.x0 - self.region.x0) as usize;
            let jx1_o = (self.window.x1 - self.region.x0) as usize;
            let jx0_n = (self.window.x0 - new_region.x0) as usize;
            buf[n_base + jx0_n..n_base + jx0_n + (jx1_o - jx0_o + 1)]
                .copy_from_slice(&self.buf[o_base + jx0_o..=o_base + jx1_o]);
        }
        self.buf = buf;
        self.scratch = alloc_spinors(new_region.width, new_region.height)?;
        self.zero_row = vec![0u64; new_region.width.div_ceil(64)];
        self.region = new_region;
        Ok(())
    }

    /// Largest probability within `band` sites of the stored-region boundary.
    fn max_prob_near_boundary(&self, band: usize) -> f64 {
        let r = Rect::full(self.region);
        let b = band as i64;
        let strips = [
            Rect { x0: r.x0, x1: (r.x0 + b - 1).min(r.x1), y0: r.y0, y1: r.y1 },
            Rect { x0: (r.x1 - b + 1).max(r.x0), x1: r.x1, y0: r.y0, y1: r.y1 },
            Rect { x0: r.x0, x1: r.x1, y0: r.y0, y1: (r.y0 + b - 1).min(r.y1) },
            Rect { x0: r.x0, x1: r.x1, y0: (r.y1 - b + 1).max(r.y0), y1: r.y1 },
        ];
        let mut max = 0.0f64;
        let w = self.region.width;
        for strip in strips {
            if let Some(s) = strip.intersect(self.window) {
                for y in s.y0..=s.y1 {
                    let base = (y - self.region.y0) as usize * w;
                    let jx0 = (s.x0 - self.region.x0) as usize;
                    let jx1 = (s.x1 - self.region.x0) as usize;
                    for sp in &self.buf[base + jx0..=base + jx1] {
                        max = max.max(sp.prob());
                    }
                }
            }
        }
        max
    }
}

/// Per-site probability over a region (dense, row-major).
#[derive(Debug, Clone)]
pub struct ProbabilityField {
    pub region: Region,
    pub probs: Vec<f64>,
}

impl ProbabilityField {
    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// When and how the stored region grows during a walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPolicy {
    /// Support must stay at least this many sites from the boundary.
    pub margin: usize,
    /// Probability above which a site counts as support for the growth check.
    pub threshold: f64,
    /// Least growth increment per side.
    pub min_increment: usize,
    /// Growth increment as a fraction of the current extent (per side).
    pub frac_increment: f64,
    /// Half-extent of the initially allocated region for new walks.
    pub initial_half_extent: usize,
    /// Never grow: the stored region is a closed, reflecting box.
    pub fixed_region: bool,
}

impl Default for GrowthPolicy {
    fn default() -> GrowthPolicy {
        GrowthPolicy {
            margin: 4,
            threshold: 1e-24,
            min_increment: 64,
            frac_increment: 0.125,
            initial_half_extent: 32,
            fixed_region: false,
        }
    }
}

impl GrowthPolicy {
    /// Fixed-region policy (used with explicit masks: boundary reflects).
    pub fn fixed() -> GrowthPolicy {
        GrowthPolicy {
            fixed_region: true,
            ..GrowthPolicy::default()
        }
    }
}

/// One walk realization: mask, state and protocol evolving together.
#[derive(Debug, Clone)]
pub struct Walk {
    mask: OccupancyMask,
    state: WalkerState,
    spec: ProtocolSpec,
    policy: GrowthPolicy,
}

impl Walk {
    /// Generate a fresh percolation mask and start a walk on it.
    pub fn new(p: f64, seed: u64, spec: ProtocolSpec, policy: GrowthPolicy) -> Result<Walk> {
        let half = policy.initial_half_extent.max(policy.margin + 3);
        let extent = 2 * half + 1;
        let mask = OccupancyMask::generate(p, seed, (extent, extent))?;
        Walk::with_mask(mask, spec, policy)
    }

    /// Start a walk on an existing mask. Non-growable (explicit) masks force a
    /// fixed region regardless of the policy.
    pub fn with_mask(mask: OccupancyMask, spec: ProtocolSpec, policy: GrowthPolicy) -> Result<Walk> {
        let mut policy = policy;
        if !mask.growable() {
            policy.fixed_region = true;
        }
        let state = WalkerState::init(&mask, &spec)?;
        Ok(Walk {
            mask,
            state,
            spec,
            policy,
        })
    }

    pub fn state(&self) -> &WalkerState {
        &self.state
    }

    pub fn mask(&self) -> &OccupancyMask {
        &self.mask
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn step_count(&self) -> u64 {
        self.state.step_count
    }

    pub fn msd(&self) -> f64 {
        self.state.msd()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.state.norm_sqr()
    }

    pub fn probability_snapshot(&self) -> ProbabilityField {
        self.state.probability_snapshot()
    }

    /// Advance one protocol step, growing the stored region first if support
    /// approaches the boundary.
    pub fn step(&mut self) -> Result<()> {
        if !self.policy.fixed_region {
            // Support can move cone_speed sites per step; growing when any
            // above-threshold probability is within margin + cone_speed of the
            // boundary keeps it at least `margin` away after the step.
            let (cx, cy) = self.spec.cone_speed();
            let band = self.policy.margin + cx.max(cy) as usize;
            if self.state.max_prob_near_boundary(band) > self.policy.threshold {
                let extent = self.mask.region().width.max(self.mask.region().height);
                let inc = self
                    .policy
                    .min_increment
                    .max((extent as f64 * self.policy.frac_increment) as usize);
                self.mask = self.mask.grow(inc)?;
                self.state.reembed(self.mask.region())?;
            }
        }
        for (theta, delta) in self.spec.passes() {
            self.state.pass(&self.mask, theta, delta);
        }
        self.state.step_count += 1;
        Ok(())
    }

    /// Advance to the given step count.
    pub fn run_to(&mut self, t: u64) -> Result<()> {
        while self.state.step_count < t {
            self.step()?;
        }
        Ok(())
    }
}
