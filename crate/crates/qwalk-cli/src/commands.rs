//! The four commands: walk, ensemble, chern, fit.

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::params::{ChernParams, EnsembleRun, FitParams, WalkParams};
use qwalk_core::diffusion::{alpha_series, fit_asymptotics, localization_verdict};
use qwalk_core::ensemble::{ensemble_msd, EnsembleParams};
use qwalk_core::export::{
    read_diffusion_csv, write_diffusion_csv, write_json, write_phase_csv, write_snapshot_csv,
    write_snapshot_pgm, FitReport,
};
use qwalk_core::momentum::phase_diagram;
use qwalk_core::walk::{GrowthPolicy, Walk};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::resource(format!("cannot create {}: {e}", dir.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::resource(format!("cannot create {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush()
        .map_err(|e| CliError::resource(format!("cannot write {}: {e}", path.display())))
}

/// Evolve one realization, writing CSV + PGM snapshots at the requested times.
pub fn cmd_walk(params: &WalkParams, out_dir: &Path) -> CliResult<RunManifest> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let policy = GrowthPolicy::default();
    let mut manifest = RunManifest::new("walk");
    manifest.walk = Some(params.clone());
    manifest.growth = Some(policy.clone());

    let mut walk = Walk::new(params.p, params.seed, params.spec.clone(), policy)?;
    for &t in &params.snapshots {
        walk.run_to(t)?;
        let field = walk.probability_snapshot();

        let csv_path = out_dir.join(format!("snapshot_t{t}.csv"));
        let mut w = create(&csv_path)?;
        write_snapshot_csv(&field, &mut w)?;
        finish(w, &csv_path)?;
        manifest.record_output(out_dir, &csv_path)?;

        let pgm_path = out_dir.join(format!("snapshot_t{t}.pgm"));
        let mut w = create(&pgm_path)?;
        let scale = write_snapshot_pgm(&field, &mut w)?;
        finish(w, &pgm_path)?;
        manifest.record_output(out_dir, &pgm_path)?;

        let scale_path = out_dir.join(format!("snapshot_t{t}.scale.json"));
        let mut w = create(&scale_path)?;
        write_json(&scale, &mut w)?;
        finish(w, &scale_path)?;
        manifest.record_output(out_dir, &scale_path)?;

        println!(
            "t={t}: msd={:.6e} max_prob={:.3e} region={}x{} -> {}",
            walk.msd(),
            field.max(),
            field.region.width,
            field.region.height,
            csv_path.display()
        );
    }
    manifest.wall_time = started.elapsed().as_secs_f64();
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Run configuration-averaged ensembles for each p and write the diffusion
/// table and fit report per p.
pub fn cmd_ensemble(run: &EnsembleRun, out_dir: &Path) -> CliResult<RunManifest> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let policy = GrowthPolicy::default();
    let mut manifest = RunManifest::new("ensemble");
    manifest.ensemble = Some(run.clone());
    manifest.growth = Some(policy.clone());

    for &p in &run.ps {
        log::info!(
            "ensemble p={p}: {} configurations to t={} ({:?})",
            run.seeds.count,
            run.t_max,
            run.spec.kind
        );
        let params = EnsembleParams {
            p,
            spec: run.spec.clone(),
            seeds: run.seeds.seeds(),
            t_max: run.t_max,
            schedule: run.schedule,
            policy: policy.clone(),
        };
        let series = ensemble_msd(&params)?;
        let diff = alpha_series(&series, run.window)?;
        let fit = fit_asymptotics(&diff, (run.t_max / 10).max(1), run.t_max)?;
        let verdict = localization_verdict(&diff);

        let csv_path = out_dir.join(format!("diffusion_p{p}.csv"));
        let mut w = create(&csv_path)?;
        write_diffusion_csv(&diff, &mut w)?;
        finish(w, &csv_path)?;
        manifest.record_output(out_dir, &csv_path)?;

        let report = FitReport {
            alpha_inf: fit.alpha_inf,
            d_inf: fit.d_inf,
            t_min: fit.t_min,
            t_max: fit.t_max,
            residual: fit.residual,
            verdict,
        };
        let fit_path = out_dir.join(format!("fit_p{p}.json"));
        let mut w = create(&fit_path)?;
        write_json(&report, &mut w)?;
        finish(w, &fit_path)?;
        manifest.record_output(out_dir, &fit_path)?;

        println!(
            "p={p}: alpha_inf={:.4} d_inf={:.4} residual={:.4} verdict={} (n={})",
            fit.alpha_inf, fit.d_inf, fit.residual, verdict, series.n_configs
        );
    }
    manifest.wall_time = started.elapsed().as_secs_f64();
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Compute the coin-parameter phase diagram and write it as CSV.
pub fn cmd_chern(params: &ChernParams, out_dir: &Path) -> CliResult<RunManifest> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new("chern");
    manifest.chern = Some(params.clone());

    let pd = phase_diagram(params.grid_theta, params.grid_k)?;
    let csv_path = out_dir.join("phase_diagram.csv");
    let mut w = create(&csv_path)?;
    write_phase_csv(&pd, &mut w)?;
    finish(w, &csv_path)?;
    manifest.record_output(out_dir, &csv_path)?;

    let indeterminate = pd.cells.iter().filter(|c| c.chern.is_none()).count();
    println!(
        "phase diagram {}x{} (k-grid {}): values {:?}, {} indeterminate cells -> {}",
        params.grid_theta,
        params.grid_theta,
        params.grid_k,
        pd.values_present(),
        indeterminate,
        csv_path.display()
    );
    manifest.wall_time = started.elapsed().as_secs_f64();
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Recompute the asymptotic fit and verdict from a stored diffusion CSV.
pub fn cmd_fit(params: &FitParams, out_dir: &Path) -> CliResult<RunManifest> {
    let started = Instant::now();
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new("fit");
    manifest.fit = Some(params.clone());

    let file = File::open(&params.input).map_err(|e| {
        CliError::input(format!("cannot open {}: {e}", params.input.display()))
    })?;
    let stored = read_diffusion_csv(BufReader::new(file)).map_err(|e| {
        CliError::input(format!("{}: {e}", params.input.display()))
    })?;
    manifest.record_input(out_dir, &params.input)?;

    let diff = alpha_series(&stored.base, params.window)?;
    let last_t = *stored.base.times.last().unwrap();
    let t_min = params.fit_tmin.unwrap_or((last_t / 10).max(1));
    let t_max = params.fit_tmax.unwrap_or(last_t);
    let fit = fit_asymptotics(&diff, t_min, t_max)?;
    let verdict = localization_verdict(&diff);
    let report = FitReport {
        alpha_inf: fit.alpha_inf,
        d_inf: fit.d_inf,
        t_min: fit.t_min,
        t_max: fit.t_max,
        residual: fit.residual,
        verdict,
    };

    let fit_path = out_dir.join("fit.json");
    let mut w = create(&fit_path)?;
    write_json(&report, &mut w)?;
    finish(w, &fit_path)?;
    manifest.record_output(out_dir, &fit_path)?;

    println!(
        "fit over [{t_min}, {t_max}]: alpha_inf={:.4} d_inf={:.4} residual={:.4} verdict={}",
        fit.alpha_inf, fit.d_inf, fit.residual, verdict
    );
    manifest.wall_time = started.elapsed().as_secs_f64();
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Re-run a saved manifest and report whether the regenerated outputs match
/// its recorded digests.
pub fn replay(manifest_path: &Path, command: &str, out_dir: PathBuf) -> CliResult<()> {
    let stored = RunManifest::load(manifest_path)?;
    if stored.command != command {
        return Err(CliError::input(format!(
            "manifest {} records a {:?} run, not {command:?}",
            manifest_path.display(),
            stored.command
        )));
    }
    let fresh = match command {
        "walk" => {
            let params = stored
                .walk
                .as_ref()
                .ok_or_else(|| CliError::input("manifest lacks walk parameters".to_string()))?;
            cmd_walk(params, &out_dir)?
        }
        "ensemble" => {
            let params = stored
                .ensemble
                .as_ref()
                .ok_or_else(|| CliError::input("manifest lacks ensemble parameters".to_string()))?;
            cmd_ensemble(params, &out_dir)?
        }
        "chern" => {
            let params = stored
                .chern
                .as_ref()
                .ok_or_else(|| CliError::input("manifest lacks chern parameters".to_string()))?;
            cmd_chern(params, &out_dir)?
        }
        "fit" => {
            let params = stored
                .fit
                .as_ref()
                .ok_or_else(|| CliError::input("manifest lacks fit parameters".to_string()))?;
            cmd_fit(params, &out_dir)?
        }
        other => return Err(CliError::input(format!("unknown manifest command {other:?}"))),
    };

    let mut matched = 0usize;
    for old in &stored.outputs {
        match fresh.outputs.iter().find(|n| n.path == old.path) {
            Some(new) if new.sha256 == old.sha256 => matched += 1,
            Some(_) => log::warn!("digest mismatch for {}", old.path),
            None => log::warn!("output {} was not regenerated", old.path),
        }
    }
    println!(
        "replayed {command}: {matched}/{} recorded outputs match bit-for-bit",
        stored.outputs.len()
    );
    Ok(())
}
