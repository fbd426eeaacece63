//! Shared test support: a dense-matrix reference implementation of the walk
//! step and reusable invariant checks. Each check returns `Err(reason)` so the
//! acceptance suite can report failures without panicking.

#![allow(dead_code)]

use num_complex::Complex64;
use qwalk_core::diffusion::{alpha_series, fit_asymptotics, sample_times, MsdSeries};
use qwalk_core::ensemble::{ensemble_msd, EnsembleParams};
use qwalk_core::lattice::OccupancyMask;
use qwalk_core::momentum::{bloch_unitary, quasienergy_cos, winding_vector};
use qwalk_core::protocol::{CoinState, ProtocolSpec, WalkKind};
use qwalk_core::walk::{GrowthPolicy, Walk};
use qwalk_core::{Region, Site};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Dense row-major complex matrix over the spin-resolved site basis
/// (`2 * site_index + spin`, spin 0 = up).
#[derive(Clone)]
pub struct DMat {
    pub dim: usize,
    pub a: Vec<Complex64>,
}

impl DMat {
    pub fn zeros(dim: usize) -> DMat {
        DMat { dim, a: vec![C0; dim * dim] }
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.dim + j] = v;
    }

    pub fn mul(&self, rhs: &DMat) -> DMat {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = DMat::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let v = self.at(i, l);
                if v == C0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += v * rhs.at(l, j);
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![C0; n];
        for i in 0..n {
            let mut acc = C0;
            for j in 0..n {
                acc += self.at(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }
}

/// Dense matrix of one (coin, conditional-translation) pass over `mask`:
/// rotate by θ on every occupied site, then translate up-components by +δ and
/// down-components by −δ with reflection (spin flip) where the destination
/// neighbour is absent. Out-of-region counts as absent.
pub fn dense_pass(mask: &OccupancyMask, theta: f64, delta: (i64, i64)) -> DMat {
    let region = mask.region();
    let n_sites = region.len();
    let dim = 2 * n_sites;
    let occ = |site: Site| -> bool {
        region.contains(site) && mask.is_occupied(site).unwrap()
    };

    let mut rot = DMat::zeros(dim);
    let (sn, c) = (0.5 * theta).sin_cos();
    for site in region.sites() {
        if !occ(site) {
            continue;
        }
        let s = region.index(site);
        rot.set(2 * s, 2 * s, Complex64::new(c, 0.0));
        rot.set(2 * s, 2 * s + 1, Complex64::new(sn, 0.0));
        rot.set(2 * s + 1, 2 * s, Complex64::new(-sn, 0.0));
        rot.set(2 * s + 1, 2 * s + 1, Complex64::new(c, 0.0));
    }

    let mut shift = DMat::zeros(dim);
    for site in region.sites() {
        if !occ(site) {
            continue;
        }
        let r = region.index(site);
        let behind = (site.0 - delta.0, site.1 - delta.1);
        if occ(behind) {
            shift.set(2 * r, 2 * region.index(behind), C1);
        } else {
            shift.set(2 * r, 2 * r + 1, C1);
        }
        let ahead = (site.0 + delta.0, site.1 + delta.1);
        if occ(ahead) {
            shift.set(2 * r + 1, 2 * region.index(ahead) + 1, C1);
        } else {
            shift.set(2 * r + 1, 2 * r, C1);
        }
    }

    shift.mul(&rot)
}

/// Dense matrix of one full protocol step (passes applied left to right in
/// protocol order, i.e. the first pass is the rightmost factor).
pub fn dense_step(mask: &OccupancyMask, spec: &ProtocolSpec) -> DMat {
    let mut u: Option<DMat> = None;
    for (theta, delta) in spec.passes() {
        let pass = dense_pass(mask, theta, delta);
        u = Some(match u {
            None => pass,
            Some(prev) => pass.mul(&prev),
        });
    }
    u.unwrap()
}

/// Max |U†U − P| entry, where P projects onto spin states of occupied sites.
/// A correct step matrix is unitary on that subspace and zero off it.
pub fn occupied_subspace_unitarity_defect(mask: &OccupancyMask, u: &DMat) -> f64 {
    let region = mask.region();
    let n = u.dim;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = C0;
            for l in 0..n {
                acc += u.at(l, i).conj() * u.at(l, j);
            }
            let site_i = i / 2;
            let expected = if i == j {
                let site = region_site(region, site_i);
                if mask.is_occupied(site).unwrap() {
                    C1
                } else {
                    C0
                }
            } else {
                C0
            };
            worst = worst.max((acc - expected).norm());
        }
    }
    worst
}

fn region_site(region: Region, idx: usize) -> Site {
    let ix = (idx % region.width) as i64;
    let iy = (idx / region.width) as i64;
    (region.x0 + ix, region.y0 + iy)
}

/// Spin-resolved dense state vector of an engine walker state.
pub fn state_vec(state: &qwalk_core::walk::WalkerState) -> Vec<Complex64> {
    let region = state.region();
    let mut v = vec![C0; 2 * region.len()];
    for site in region.sites() {
        let (up, down) = state.amplitude(site);
        let s = region.index(site);
        v[2 * s] = up;
        v[2 * s + 1] = down;
    }
    v
}

/// Initial dense state: the protocol's coin at the origin.
pub fn initial_vec(region: Region, spec: &ProtocolSpec) -> Vec<Complex64> {
    let mut v = vec![C0; 2 * region.len()];
    let s = region.index((0, 0));
    let (up, down) = spec.initial_coin.amplitudes();
    v[2 * s] = up;
    v[2 * s + 1] = down;
    v
}

fn random_coin(rng: &mut ChaCha8Rng) -> CoinState {
    let parts: [f64; 4] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let norm = parts.iter().map(|x| x * x).sum::<f64>().sqrt();
    CoinState::Custom {
        up: Complex64::new(parts[0] / norm, parts[1] / norm),
        down: Complex64::new(parts[2] / norm, parts[3] / norm),
    }
}

// ---------------------------------------------------------------------------
// Reusable invariant checks (the engine-correctness gate).
// ---------------------------------------------------------------------------

/// Norm drift stays below `tol` over `steps` steps for a randomized set of
/// parameters covering both protocols, dilutions `ps`, and all coin kinds.
pub fn check_norm_drift(ps: &[(f64, WalkKind)], steps: u64, tol: f64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (case, &(p, kind)) in ps.iter().enumerate() {
        let theta1 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let theta2 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let coin = match case % 3 {
            0 => CoinState::SigmaYPlus,
            1 => CoinState::SigmaXPlus,
            _ => random_coin(&mut rng),
        };
        let seed = rng.gen::<u64>();
        let spec = ProtocolSpec::new(kind, theta1, theta2, coin);
        let mut walk = Walk::new(p, seed, spec, GrowthPolicy::default())
            .map_err(|e| format!("case {case}: init failed: {e}"))?;
        let mut worst = 0.0f64;
        for t in 1..=steps {
            walk.step().map_err(|e| format!("case {case}: step {t} failed: {e}"))?;
            worst = worst.max((walk.norm_sqr() - 1.0).abs());
        }
        if worst >= tol {
            return Err(format!(
                "case {case} (p={p}, {kind:?}, θ=({theta1:.3}, {theta2:.3}), seed {seed}): \
                 norm drift {worst:.3e} ≥ {tol:.0e} over {steps} steps"
            ));
        }
    }
    Ok(())
}

/// Engine evolution matches the dense-matrix reference on small lattices for
/// both protocols, several coins, and assorted masks, to `tol` per amplitude.
pub fn check_dense_oracle(tol: f64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7_771);
    let mut masks: Vec<OccupancyMask> = Vec::new();

    for (i, p) in [1.0, 0.9, 0.7, 0.5, 0.35].into_iter().enumerate() {
        masks.push(
            OccupancyMask::generate(p, 1000 + i as u64, (5, 5))
                .map_err(|e| format!("mask generation failed: {e}"))?,
        );
    }
    // Explicit 6×6 random masks (even extent exercises asymmetric boxes).
    for case in 0..4 {
        let region = Region { x0: -3, y0: -2, width: 6, height: 6 };
        let mut cells: Vec<bool> = (0..region.len()).map(|_| rng.gen_bool(0.6)).collect();
        cells[region.index((0, 0))] = true;
        masks.push(
            OccupancyMask::from_cells(region, &cells, 0.6, 5_000 + case)
                .map_err(|e| format!("explicit mask failed: {e}"))?,
        );
    }
    // Degenerate patterns: isolated origin; a single open row; a plus shape.
    let r3 = Region { x0: -1, y0: -1, width: 3, height: 3 };
    let mut isolated = vec![false; 9];
    isolated[r3.index((0, 0))] = true;
    masks.push(OccupancyMask::from_cells(r3, &isolated, 0.1, 1).unwrap());
    let r5 = Region { x0: -2, y0: -2, width: 5, height: 5 };
    let mut row_only = vec![false; 25];
    for x in -2..=2 {
        row_only[r5.index((x, 0))] = true;
    }
    masks.push(OccupancyMask::from_cells(r5, &row_only, 0.2, 2).unwrap());
    let mut plus = vec![false; 25];
    for d in -2..=2 {
        plus[r5.index((d, 0))] = true;
        plus[r5.index((0, d))] = true;
    }
    masks.push(OccupancyMask::from_cells(r5, &plus, 0.2, 3).unwrap());

    let thetas = [
        (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        (std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_2),
        (1.234, -0.77),
        (0.0, 0.0),
    ];

    for (mi, mask) in masks.iter().enumerate() {
        for kind in [WalkKind::ThreeStepChern, WalkKind::TwoStepFloquet] {
            for (ti, &(t1, t2)) in thetas.iter().enumerate() {
                let coin = match (mi + ti) % 3 {
                    0 => CoinState::SigmaYPlus,
                    1 => CoinState::SigmaXPlus,
                    _ => random_coin(&mut rng),
                };
                let spec = ProtocolSpec::new(kind, t1, t2, coin);
                let u = dense_step(mask, &spec);
                let defect = occupied_subspace_unitarity_defect(mask, &u);
                if defect > 1e-12 {
                    return Err(format!(
                        "dense step not unitary on occupied subspace \
                         (mask {mi}, {kind:?}, θ set {ti}): defect {defect:.3e}"
                    ));
                }
                let mut vec = initial_vec(mask.region(), &spec);
                let mut walk = Walk::with_mask(mask.clone(), spec, GrowthPolicy::fixed())
                    .map_err(|e| format!("walk init failed: {e}"))?;
                for t in 1..=10u64 {
                    vec = u.apply(&vec);
                    walk.step().map_err(|e| format!("step failed: {e}"))?;
                    let engine = state_vec(walk.state());
                    for (idx, (a, b)) in engine.iter().zip(&vec).enumerate() {
                        if (a - b).norm() > tol {
                            return Err(format!(
                                "engine and dense reference disagree at t={t}, \
                                 mask {mi}, {kind:?}, θ set {ti}, basis {idx}: \
                                 {a} vs {b}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// The momentum-space closed forms reconstruct the Bloch unitary:
/// `U(k) = cos E·I − i sin E (n·σ)` at `points` random gapped points.
pub fn check_reconstruction(points: usize, tol: f64) -> Result<(), String> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0usize;
    while checked < points {
        let k = (rng.gen_range(-FRAC_PI_2..FRAC_PI_2), rng.gen_range(-FRAC_PI_2..FRAC_PI_2));
        let t1 = rng.gen_range(-PI..PI);
        let t2 = rng.gen_range(-PI..PI);
        let cos_e = quasienergy_cos(k, t1, t2).clamp(-1.0, 1.0);
        let sin_e = (1.0 - cos_e * cos_e).sqrt();
        if sin_e < 1e-3 {
            continue;
        }
        let n = winding_vector(k, t1, t2).map_err(|e| e.to_string())?;
        let u = bloch_unitary(k, t1, t2);
        let recon = [
            [
                Complex64::new(cos_e, -sin_e * n[2]),
                Complex64::new(-sin_e * n[1], -sin_e * n[0]),
            ],
            [
                Complex64::new(sin_e * n[1], -sin_e * n[0]),
                Complex64::new(cos_e, sin_e * n[2]),
            ],
        ];
        for i in 0..2 {
            for j in 0..2 {
                let err = (u[i][j] - recon[i][j]).norm();
                if err > tol {
                    return Err(format!(
                        "reconstruction error {err:.3e} > {tol:.0e} at \
                         k=({:.4}, {:.4}), θ=({t1:.4}, {t2:.4})",
                        k.0, k.1
                    ));
                }
            }
        }
        checked += 1;
    }
    Ok(())
}

/// Synthetic exact power laws `msd = A·t^b` are recovered by the running-fit
/// pipeline to `tol` in the exponent and relative `tol` in the prefactor.
pub fn check_power_law(tol: f64) -> Result<(), String> {
    for (a, b) in [(1.0, 2.0), (5.0, 1.0), (2.2, 0.87), (0.4, 1.31), (7.0, 0.5)] {
        let times = sample_times(10_000);
        let msd: Vec<f64> = times
            .iter()
            .map(|&t| if t == 0 { 0.0 } else { a * (t as f64).powf(b) })
            .collect();
        let series = MsdSeries {
            stderr: vec![0.0; times.len()],
            times,
            msd,
            n_configs: 1,
            per_config: None,
        };
        let diff = alpha_series(&series, 0.25).map_err(|e| e.to_string())?;
        let fit = fit_asymptotics(&diff, 100, 10_000).map_err(|e| e.to_string())?;
        if (fit.alpha_inf - b).abs() > tol {
            return Err(format!(
                "power law A={a}, b={b}: recovered exponent {} off by {:.3e}",
                fit.alpha_inf,
                (fit.alpha_inf - b).abs()
            ));
        }
        if (fit.d_inf - a).abs() / a > tol {
            return Err(format!(
                "power law A={a}, b={b}: recovered prefactor {} relative error {:.3e}",
                fit.d_inf,
                (fit.d_inf - a).abs() / a
            ));
        }
    }
    Ok(())
}

/// Ensemble averages are bit-identical across 1-, 2-, and 8-thread pools.
pub fn check_thread_determinism(p: f64, n_seeds: u64, t_max: u64) -> Result<(), String> {
    let spec = ProtocolSpec::new(
        WalkKind::ThreeStepChern,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        CoinState::SigmaYPlus,
    );
    let params = EnsembleParams::new(p, spec, (0..n_seeds).collect(), t_max);
    let mut reference: Option<MsdSeries> = None;
    for threads in [1usize, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| format!("pool({threads}): {e}"))?;
        let series = pool
            .install(|| ensemble_msd(&params))
            .map_err(|e| format!("ensemble({threads} threads): {e}"))?;
        match &reference {
            None => reference = Some(series),
            Some(r) => {
                if r.msd != series.msd || r.stderr != series.stderr {
                    let idx = r
                        .msd
                        .iter()
                        .zip(&series.msd)
                        .position(|(a, b)| a != b)
                        .unwrap_or(usize::MAX);
                    return Err(format!(
                        "{threads}-thread ensemble differs from 1-thread at sample {idx}"
                    ));
                }
            }
        }
    }
    Ok(())
}
