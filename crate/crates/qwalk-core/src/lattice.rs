//! Site-percolation occupancy masks with deterministic, growth-stable randomness.
//!
//! Every site other than the origin is an independent Bernoulli(p) draw computed
//! as a *pure function* of `(seed, x, y)` — a counter-based hash rather than a
//! sequential RNG stream. Growing the stored region therefore never resamples
//! previously materialized sites, no matter in which order or by which path the
//! region was enlarged, and masks are bit-reproducible under any parallel
//! scheduling of their consumers.
//!
//! The origin `(0, 0)` is forced occupied: walks start there, and a vacant start
//! site would yield a trivially frozen walk. The ensemble is thus conditioned on
//! an occupied origin (the unconditioned alternative merely rescales averages by
//! the survival probability `p`).

use crate::error::{Error, Result};
use crate::geom::{Region, Site};
use std::fmt::Write as _;

/// Site-percolation threshold of the square lattice (for reference in analyses;
/// the engine itself makes no use of it).
pub const P_PERC: f64 = 0.592_746_05;

/// How a mask's bits were obtained. Hash-backed masks can grow; explicit ones
/// (loaded from a file or built cell-by-cell) have a fixed region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MaskSource {
    Hash,
    Explicit,
}

/// Bernoulli(p) occupancy over a rectangular region of the square lattice.
#[derive(Debug, Clone)]
pub struct OccupancyMask {
    region: Region,
    p: f64,
    seed: u64,
    growth_events: u32,
    words_per_row: usize,
    bits: Vec<u64>,
    source: MaskSource,
}

/// SplitMix64 finalizer: full-avalanche bijection on 64-bit words.
#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pure hash of (seed, site) driving the occupancy draw. Two finalizer rounds
/// with distinct odd multipliers between absorptions give good avalanche even
/// for adjacent coordinates.
#[inline]
pub fn site_hash(seed: u64, x: i64, y: i64) -> u64 {
    let mut z = seed ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = splitmix(z);
    z ^= (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    splitmix(z)
}

/// The Bernoulli(p) draw for one site: uniform in [0, 1) from the top 53 hash
/// bits, compared against p. Pure in (seed, x, y).
#[inline]
pub fn site_occupied(seed: u64, p: f64, x: i64, y: i64) -> bool {
    if x == 0 && y == 0 {
        return true;
    }
    let u = (site_hash(seed, x, y) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u < p
}

impl OccupancyMask {
    /// Generate a mask over a region of the given odd extent centered on the origin.
    pub fn generate(p: f64, seed: u64, extent: (usize, usize)) -> Result<OccupancyMask> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("p={p} outside [0, 1]")));
        }
        let (w, h) = extent;
        if w < 3 || h < 3 || w % 2 == 0 || h % 2 == 0 {
            return Err(Error::invalid(format!(
                "extent ({w},{h}) must be odd and at least 3 in each dimension"
            )));
        }
        let region = Region::centered(w, h);
        let mut mask = OccupancyMask {
            region,
            p,
            seed,
            growth_events: 0,
            words_per_row: w.div_ceil(64),
            bits: Vec::new(),
            source: MaskSource::Hash,
        };
        mask.fill_from_hash()?;
        Ok(mask)
    }

    /// Build a mask from explicit cells (row-major over `region`). Used by the
    /// text-format reader and by tests; the resulting mask cannot grow.
    pub fn from_cells(
        region: Region,
        cells: &[bool],
        p: f64,
        seed: u64,
    ) -> Result<OccupancyMask> {
        if cells.len() != region.len() {
            return Err(Error::invalid(format!(
                "cell count {} does not match region extent {}x{}",
                cells.len(),
                region.width,
                region.height
            )));
        }
        if !region.contains((0, 0)) {
            return Err(Error::invalid("region must contain the origin"));
        }
        if !cells[region.index((0, 0))] {
            return Err(Error::invalid("origin site must be occupied"));
        }
        let words_per_row = region.width.div_ceil(64);
        let mut bits = vec![0u64; words_per_row * region.height];
        for iy in 0..region.height {
            for ix in 0..region.width {
                if cells[iy * region.width + ix] {
                    bits[iy * words_per_row + ix / 64] |= 1u64 << (ix % 64);
                }
            }
        }
        Ok(OccupancyMask {
            region,
            p,
            seed,
            growth_events: 0,
            words_per_row,
            bits,
            source: MaskSource::Explicit,
        })
    }

    fn fill_from_hash(&mut self) -> Result<()> {
        let w = self.region.width;
        let h = self.region.height;
        let wpr = w.div_ceil(64);
        let n_words = wpr.checked_mul(h).ok_or_else(|| {
            Error::resource(format!("mask extent {w}x{h} overflows address space"))
        })?;
        let mut bits = vec![0u64; n_words];
        let (seed, p) = (self.seed, self.p);
        for iy in 0..h {
            let y = self.region.y0 + iy as i64;
            let row = &mut bits[iy * wpr..(iy + 1) * wpr];
            for ix in 0..w {
                let x = self.region.x0 + ix as i64;
                if site_occupied(seed, p, x, y) {
                    row[ix / 64] |= 1u64 << (ix % 64);
                }
            }
        }
        self.words_per_row = wpr;
        self.bits = bits;
        Ok(())
    }

    /// Grow the stored region by `margin` sites on every side. All previously
    /// materialized occupancy values are preserved (the draw is a pure function
    /// of seed and coordinates).
    pub fn grow(&self, margin: usize) -> Result<OccupancyMask> {
        if margin == 0 {
            return Err(Error::invalid("growth margin must be at least 1"));
        }
        if self.source == MaskSource::Explicit {
            return Err(Error::invalid(
                "masks loaded from explicit cells have a fixed region and cannot grow",
            ));
        }
        let mut grown = OccupancyMask {
            region: self.region.grown(margin),
            p: self.p,
            seed: self.seed,
            growth_events: self.growth_events + 1,
            words_per_row: 0,
            bits: Vec::new(),
            source: MaskSource::Hash,
        };
        grown.fill_from_hash()?;
        Ok(grown)
    }

    /// Occupation bit of a site inside the stored region.
    pub fn is_occupied(&self, site: Site) -> Result<bool> {
        if !self.region.contains(site) {
            return Err(Error::invalid(format!(
                "site ({}, {}) outside stored region x:[{}, {}] y:[{}, {}]",
                site.0,
                site.1,
                self.region.x0,
                self.region.x1(),
                self.region.y0,
                self.region.y1()
            )));
        }
        Ok(self.occ(site))
    }

    /// Occupation with absent-outside semantics: sites beyond the stored region
    /// count as unoccupied. This is the query the evolution kernel uses — the
    /// walker treats the region boundary like any other vacancy and reflects.
    #[inline]
    pub fn occ(&self, (x, y): Site) -> bool {
        if !self.region.contains((x, y)) {
            return false;
        }
        let ix = (x - self.region.x0) as usize;
        let iy = (y - self.region.y0) as usize;
        (self.bits[iy * self.words_per_row + ix / 64] >> (ix % 64)) & 1 != 0
    }

    /// Bit-words of one row (row index relative to the region's corner).
    #[inline]
    pub fn row_words(&self, iy: usize) -> &[u64] {
        &self.bits[iy * self.words_per_row..(iy + 1) * self.words_per_row]
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn growth_events(&self) -> u32 {
        self.growth_events
    }

    /// True when the mask can grow on demand (hash-backed).
    pub fn growable(&self) -> bool {
        self.source == MaskSource::Hash
    }

    pub fn occupied_count(&self) -> usize {
        // Trailing bits of each row word are never set, so popcount is exact.
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of occupied sites excluding the (forced) origin.
    pub fn occupied_fraction_excluding_origin(&self) -> f64 {
        let n = self.region.len() - 1;
        (self.occupied_count() - 1) as f64 / n as f64
    }

    /// Serialize to the plain-text mask format:
    /// a header `PERCMASK v1 p=<p> seed=<seed> origin=<x0>,<y0> extent=<w>,<h>`
    /// followed by `h` rows of `w` characters (`1` occupied, `0` absent),
    /// starting at the region corner `(x0, y0)`.
    pub fn to_text(&self) -> String {
        let r = self.region;
        let mut out = String::with_capacity((r.width + 1) * (r.height + 1) + 64);
        let _ = writeln!(
            out,
            "PERCMASK v1 p={} seed={} origin={},{} extent={},{}",
            self.p, self.seed, r.x0, r.y0, r.width, r.height
        );
        for iy in 0..r.height {
            for ix in 0..r.width {
                let bit = (self.bits[iy * self.words_per_row + ix / 64] >> (ix % 64)) & 1;
                out.push(if bit != 0 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parse the text format written by [`OccupancyMask::to_text`]. Round-trips
    /// bit-exactly. The resulting mask is explicit (fixed region).
    pub fn from_text(text: &str) -> Result<OccupancyMask> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(Some(1), "empty mask file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "PERCMASK" || fields[1] != "v1" {
            return Err(Error::format(
                Some(1),
                "expected header `PERCMASK v1 p=<p> seed=<s> origin=<x>,<y> extent=<w>,<h>`",
            ));
        }
        fn kv<'a>(field: &'a str, key: &str) -> Result<&'a str> {
            field.strip_prefix(key).and_then(|s| s.strip_prefix('=')).ok_or_else(|| {
                Error::format(Some(1), format!("expected `{key}=...` in header, got `{field}`"))
            })
        }
        fn pair(s: &str, what: &str) -> Result<(i64, i64)> {
            let (a, b) = s
                .split_once(',')
                .ok_or_else(|| Error::format(Some(1), format!("{what} must be `<a>,<b>`")))?;
            let pa = a.parse::<i64>();
            let pb = b.parse::<i64>();
            match (pa, pb) {
                (Ok(a), Ok(b)) => Ok((a, b)),
                _ => Err(Error::format(Some(1), format!("{what} components must be integers"))),
            }
        }
        let p: f64 = kv(fields[2], "p")?
            .parse()
            .map_err(|_| Error::format(Some(1), "p must be a float"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::format(Some(1), format!("p={p} outside [0, 1]")));
        }
        let seed: u64 = kv(fields[3], "seed")?
            .parse()
            .map_err(|_| Error::format(Some(1), "seed must be a u64"))?;
        let (x0, y0) = pair(kv(fields[4], "origin")?, "origin")?;
        let (w, h) = pair(kv(fields[5], "extent")?, "extent")?;
        if w <= 0 || h <= 0 {
            return Err(Error::format(Some(1), "extent components must be positive"));
        }
        let region = Region {
            x0,
            y0,
            width: w as usize,
            height: h as usize,
        };
        let mut cells = vec![false; region.len()];
        for iy in 0..region.height {
            let lineno = iy + 2;
            let line = lines.next().ok_or_else(|| {
                Error::format(Some(lineno), format!("expected {} rows, file ends early", h))
            })?;
            if line.len() != region.width {
                return Err(Error::format(
                    Some(lineno),
                    format!("row has {} characters, expected {}", line.len(), region.width),
                ));
            }
            for (ix, c) in line.bytes().enumerate() {
                cells[iy * region.width + ix] = match c {
                    b'1' => true,
                    b'0' => false,
                    other => {
                        return Err(Error::format(
                            Some(lineno),
                            format!("unexpected character `{}` (only 0/1 allowed)", other as char),
                        ))
                    }
                };
            }
        }
        if let Some(extra) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(Error::format(
                    Some(region.height + 2),
                    "trailing content after final row",
                ));
            }
        }
        OccupancyMask::from_cells(region, &cells, p, seed).map_err(|e| match e {
            Error::InvalidParam(msg) => Error::format(None, msg),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_occupation_at_p_one() {
        let m = OccupancyMask::generate(1.0, 7, (5, 5)).unwrap();
        assert_eq!(m.occupied_count(), 25);
        assert!(m.is_occupied((2, 2)).unwrap());
    }

    #[test]
    fn only_origin_at_p_zero() {
        let m = OccupancyMask::generate(0.0, 7, (5, 5)).unwrap();
        assert_eq!(m.occupied_count(), 1);
        assert!(m.is_occupied((0, 0)).unwrap());
        assert!(!m.is_occupied((1, 0)).unwrap());
    }

    #[test]
    fn occupied_fraction_within_binomial_band() {
        // 101x101 = 10201 sites, one forced; 3-sigma band for 10200 Bernoulli(0.75)
        // draws is 3*sqrt(0.75*0.25/10200) = 0.012862.
        let m = OccupancyMask::generate(0.75, 42, (101, 101)).unwrap();
        let f = m.occupied_fraction_excluding_origin();
        assert!((f - 0.75).abs() < 0.012862, "fraction {f} outside band");
    }

    #[test]
    fn mean_fraction_over_many_seeds_converges() {
        // 100 seeds x (51x51 - 1) draws; 3-sigma band 3*sqrt(0.6*0.4/260000).
        let mut acc = 0.0;
        for seed in 0..100u64 {
            let m = OccupancyMask::generate(0.6, seed, (51, 51)).unwrap();
            acc += m.occupied_fraction_excluding_origin();
        }
        let mean = acc / 100.0;
        let band = 3.0 * (0.6 * 0.4 / 260_000.0_f64).sqrt();
        assert!((mean - 0.6).abs() < band, "mean {mean} outside {band}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = OccupancyMask::generate(0.5, 123, (33, 33)).unwrap();
        let b = OccupancyMask::generate(0.5, 123, (33, 33)).unwrap();
        assert_eq!(a.bits, b.bits);
        let c = OccupancyMask::generate(0.5, 124, (33, 33)).unwrap();
        assert_ne!(a.bits, c.bits);
    }

    #[test]
    fn growth_preserves_materialized_sites() {
        let m = OccupancyMask::generate(0.75, 42, (101, 101)).unwrap();
        let g = m.grow(10).unwrap();
        assert_eq!(g.region().width, 121);
        assert_eq!(g.growth_events(), 1);
        for s in m.region().sites() {
            assert_eq!(m.is_occupied(s).unwrap(), g.is_occupied(s).unwrap(), "site {s:?}");
        }
    }

    #[test]
    fn growth_path_independence() {
        let m = OccupancyMask::generate(0.33, 9, (11, 11)).unwrap();
        let twice = m.grow(1).unwrap().grow(1).unwrap();
        let once = m.grow(2).unwrap();
        assert_eq!(twice.bits, once.bits);
        assert_eq!(twice.region(), once.region());
    }

    #[test]
    fn grow_of_full_mask_stays_full() {
        let g = OccupancyMask::generate(1.0, 5, (5, 5)).unwrap().grow(2).unwrap();
        assert_eq!(g.region().width, 9);
        assert_eq!(g.occupied_count(), 81);
    }

    #[test]
    fn out_of_bounds_query_is_an_error() {
        let m = OccupancyMask::generate(0.5, 1, (5, 5)).unwrap();
        assert!(m.is_occupied((3, 0)).is_err());
        assert!(!m.occ((3, 0)));
    }

    #[test]
    fn parameter_validation() {
        assert!(OccupancyMask::generate(-0.1, 1, (5, 5)).is_err());
        assert!(OccupancyMask::generate(1.1, 1, (5, 5)).is_err());
        assert!(OccupancyMask::generate(0.5, 1, (4, 5)).is_err());
        assert!(OccupancyMask::generate(0.5, 1, (5, 1)).is_err());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let m = OccupancyMask::generate(0.6, 77, (21, 9)).unwrap();
        let text = m.to_text();
        let back = OccupancyMask::from_text(&text).unwrap();
        assert_eq!(back.region(), m.region());
        assert_eq!(back.p(), m.p());
        assert_eq!(back.seed(), m.seed());
        for s in m.region().sites() {
            assert_eq!(m.occ(s), back.occ(s), "site {s:?}");
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_reader_rejects_malformed_input() {
        let good = OccupancyMask::generate(0.6, 77, (5, 5)).unwrap().to_text();
        assert!(OccupancyMask::from_text("").is_err());
        assert!(OccupancyMask::from_text("MASK v1 p=0.5 seed=1 origin=0,0 extent=3,3").is_err());
        let bad_char = good.replace('1', "2");
        assert!(OccupancyMask::from_text(&bad_char).is_err());
        let truncated: String = good.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(OccupancyMask::from_text(&truncated).is_err());
        let mut short_row = good.clone();
        short_row.truncate(good.len() - 2); // clip final row
        assert!(OccupancyMask::from_text(&short_row).is_err());
    }

    #[test]
    fn explicit_masks_do_not_grow() {
        let m = OccupancyMask::generate(0.6, 77, (5, 5)).unwrap();
        let explicit = OccupancyMask::from_text(&m.to_text()).unwrap();
        assert!(!explicit.growable());
        assert!(explicit.grow(1).is_err());
    }

    #[test]
    fn site_hash_has_no_obvious_axis_correlation() {
        // Neighbouring sites must decorrelate: check a crude pair statistic.
        let mut same = 0usize;
        let n = 20_000i64;
        for i in 0..n {
            let a = site_occupied(99, 0.5, i, 3);
            let b = site_occupied(99, 0.5, i + 1, 3);
            if a == b {
                same += 1;
            }
        }
        let frac = same as f64 / n as f64;
        // 3-sigma band around 1/2 for 20k pairs: 3*sqrt(0.25/20000) = 0.0106.
        assert!((frac - 0.5).abs() < 0.0106, "pair agreement {frac}");
    }
}
