//! Run one configured experiment and write its result bundle:
//! `manifest.json`, `summary.json` and `data/*.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qwalk_core::coin::{
    konno_evolve, sample_phases, verify_general_reduction, verify_konno_gauge, CoinParams, GeneralCoin,
};
use qwalk_core::evolution::{moment_series, MomentSeries, Regime};
use qwalk_core::fourier::{ballistic_constant_on_grid, bands, is_off_diagonal};
use qwalk_core::greens::{decay_fit, fractional_moment, write_fm_csv, FractionalMomentSpec};
use qwalk_core::seeds::replica_seed;
use qwalk_core::state::{basis_state, Spin, WalkState};
use qwalk_core::stats::MeanStderr;
use qwalk_core::temporal::{
    diffusion_constant, gaussian_limit, generating_function, mc_vs_exact, moment_scaling, prw_distribution,
    prw_params,
};
use qwalk_core::transfer::{annulus_grid, lyapunov_estimate, write_lyapunov_csv};
use qwalk_core::C64;

use crate::config::{ExperimentConfig, ExperimentKind};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] qwalk_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot encode output: {0}")]
    Encode(#[from] serde_json::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Location and headline numbers of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Value,
}

/// Relative-path registry of the data files a run writes.
struct DataDir {
    root: PathBuf,
    files: Vec<String>,
}

impl DataDir {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, RunError> {
        let rel = format!("data/{name}");
        let path = self.root.join(&rel);
        let f = File::create(&path).map_err(|source| RunError::Io { path, source })?;
        self.files.push(rel);
        Ok(BufWriter::new(f))
    }

    fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), RunError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), RunError>,
    {
        let mut w = self.create(name)?;
        body(&mut w)?;
        let path = self.root.join("data").join(name);
        w.flush().map_err(|source| RunError::Io { path, source })
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Core(e.into())
}

fn write_json(path: &Path, v: &Value) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// SHA-256 of the config fields that affect results (`workers` and `out` excluded).
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let mut c = cfg.clone();
    c.workers = None;
    c.out = PathBuf::new();
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&c)?)))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let data = cfg.out.join("data");
    fs::create_dir_all(&data).map_err(|source| RunError::Io { path: data.clone(), source })?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    let mut dir = DataDir { root: cfg.out.clone(), files: Vec::new() };
    let summary = pool.install(|| match cfg.experiment {
        ExperimentKind::Ballistic => ballistic(cfg, &mut dir),
        ExperimentKind::SpatialLocalization => spatial_localization(cfg, &mut dir),
        ExperimentKind::TemporalDiffusion => temporal_diffusion(cfg, &mut dir),
        ExperimentKind::LyapunovScan => lyapunov_scan(cfg, &mut dir),
        ExperimentKind::GreensDecay => greens_decay(cfg, &mut dir),
        ExperimentKind::GaugeCheck => gauge_check(cfg, &mut dir),
    })?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    let manifest = json!({
        "tool": "qwalk",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": qwalk_core::VERSION,
        "experiment": cfg.experiment.name(),
        "config_hash": config_hash(cfg)?,
        "config": cfg,
        "workers": pool.current_num_threads(),
        "started_unix": started,
        "wall_time_seconds": clock.elapsed().as_secs_f64(),
        "files": dir.files,
    });
    write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { dir: cfg.out.clone(), files: dir.files, summary })
}

fn coin_of(cfg: &ExperimentConfig) -> Result<CoinParams, RunError> {
    Ok(CoinParams::new(cfg.coin.t)?)
}

fn initial_state(cfg: &ExperimentConfig) -> [C64; 2] {
    let [ur, ui] = cfg.initial.up;
    let [dr, di] = cfg.initial.down;
    [C64::new(ur, ui), C64::new(dr, di)]
}

/// `n,L,value,seed` rows of one run.
fn write_moments<W: Write>(w: &mut csv::Writer<W>, series: &[MomentSeries], seed: u64) -> Result<(), RunError> {
    for s in series {
        for (n, v) in s.values.iter().enumerate() {
            w.write_record([n.to_string(), s.order.to_string(), v.to_string(), seed.to_string()]).map_err(csv_err)?;
        }
    }
    Ok(())
}

fn ballistic(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let c = coin.normal_form();
    let init = WalkState::local(initial_state(cfg), 0);
    let est = ballistic_constant_on_grid(&c, &init, cfg.sizes.grid)?;
    let band = bands(&c, cfg.sizes.grid)?;
    dir.write_with("bands.csv", |w| Ok(band.write_csv(w)?))?;

    let mut orders = cfg.sizes.orders.clone();
    if !orders.contains(&2) {
        orders.push(2);
    }
    let n = cfg.sizes.n_max;
    let series = moment_series(&init, &coin, Regime::Deterministic, &orders, n)?;
    dir.write_with("moments.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["n", "L", "value", "seed"]).map_err(csv_err)?;
        write_moments(&mut w, &series, cfg.seed)?;
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;
    let x2 = series.iter().find(|s| s.order == 2).map(|s| s.values[n]).unwrap_or(f64::NAN);
    let direct = x2 / (n as f64).powi(2);
    Ok(json!({
        "B": est.b,
        "quadrature_error": est.error,
        "grid_size": est.grid_size,
        "off_diagonal": is_off_diagonal(&c),
        "n_max": n,
        "direct_ratio": direct,
        "relative_gap": if est.b != 0.0 { (direct - est.b).abs() / est.b } else { direct.abs() },
        "max_fd_mismatch": band.max_fd_mismatch(),
    }))
}

fn spatial_localization(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let init = WalkState::local(initial_state(cfg), 0);
    let n = cfg.sizes.n_max;
    let runs: Vec<(u64, Vec<MomentSeries>)> = (0..cfg.sizes.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let seed = replica_seed(cfg.seed, i);
            let regime = Regime::Spatial { dist: cfg.distribution, seed };
            Ok((seed, moment_series(&init, &coin, regime, &cfg.sizes.orders, n)?))
        })
        .collect::<Result<_, RunError>>()?;

    dir.write_with("moments.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["n", "L", "value", "seed"]).map_err(csv_err)?;
        for (seed, series) in &runs {
            write_moments(&mut w, series, *seed)?;
        }
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;
    dir.write_with("moments_mean.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["n", "L", "mean", "stderr", "replicas"]).map_err(csv_err)?;
        for (j, &order) in cfg.sizes.orders.iter().enumerate() {
            for t in 0..=n {
                let xs: Vec<f64> = runs.iter().map(|(_, s)| s[j].values[t]).collect();
                let m = MeanStderr::from_samples(&xs);
                w.write_record([
                    t.to_string(),
                    order.to_string(),
                    m.mean.to_string(),
                    m.stderr.to_string(),
                    runs.len().to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;

    // late/early running maxima of the first requested moment
    let half = (n / 2).max(1);
    let ratios: Vec<Value> = runs
        .iter()
        .map(|(seed, s)| {
            let v = &s[0].values;
            let early = v[1.min(n)..=half.min(n)].iter().copied().fold(0.0, f64::max);
            let late = v[half.min(n)..=n].iter().copied().fold(0.0, f64::max);
            json!({ "seed": seed, "early_max": early, "late_max": late, "ratio": late / early })
        })
        .collect();
    let saturated = ratios.iter().filter(|r| r["ratio"].as_f64().is_some_and(|x| x < 1.05)).count();
    let finals: Vec<f64> = runs.iter().map(|(_, s)| s[0].values[n]).collect();
    let fm = MeanStderr::from_samples(&finals);
    Ok(json!({
        "n_max": n,
        "replicas": runs.len(),
        "order": cfg.sizes.orders[0],
        "final_mean": fm.mean,
        "final_stderr": fm.stderr,
        "saturated_below_5_percent": saturated,
        "saturation": ratios,
    }))
}

/// `10, 20, 50, 100, ...` below `n_max`, then `n_max`.
fn log_grid(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 10usize;
    while decade < n_max {
        for m in [1, 2, 5] {
            if decade * m < n_max {
                out.push(decade * m);
            }
        }
        decade = decade.saturating_mul(10);
    }
    out.push(n_max);
    out
}

fn temporal_diffusion(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let phi0 = initial_state(cfg);
    let n = cfg.sizes.n_max;
    let grid = log_grid(n);
    let mut scaling = Vec::new();
    for &l in &cfg.sizes.orders {
        scaling.push((l, moment_scaling(l, &coin, phi0, &grid)?));
    }
    dir.write_with("scaling.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["n", "L", "moment", "ratio"]).map_err(csv_err)?;
        for (l, rows) in &scaling {
            for p in rows {
                w.write_record([p.n.to_string(), l.to_string(), p.moment.to_string(), p.ratio.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;
    let params = prw_params(phi0, &coin)?;
    let table = prw_distribution(&params, n)?;
    dir.write_with("distribution.csv", |w| Ok(table.write_csv(w)?))?;

    let cmp = mc_vs_exact(&coin, phi0, cfg.distribution, cfg.sizes.mc_steps, cfg.sizes.replicas, cfg.seed)?;
    dir.write_with("mc_comparison.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["k", "exact", "mean", "stderr", "z_score"]).map_err(csv_err)?;
        for s in &cmp.sites {
            w.write_record([
                s.k.to_string(),
                s.exact.to_string(),
                s.mean.to_string(),
                s.stderr.to_string(),
                s.z_score.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;
    dir.write_with("mc_comparison.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &cmp)?;
        w.write_all(b"\n").map_err(|source| RunError::Io { path: "mc_comparison.json".into(), source })
    })?;

    let moments: Vec<Value> = scaling
        .iter()
        .map(|(l, rows)| {
            let last = rows.last().expect("grid ends at n_max");
            let d = diffusion_constant(*l, &coin)?;
            Ok(json!({
                "L": l,
                "ratio_at_n_max": last.ratio,
                "D_L": d,
                "relative_gap": if d != 0.0 { (last.ratio - d).abs() / d } else { last.ratio.abs() },
            }))
        })
        .collect::<Result<_, RunError>>()?;
    let gaussian: Vec<Value> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&y| {
            let psi = generating_function(C64::new(y / (n as f64).sqrt(), 0.0), n, &params)?;
            Ok(json!({ "y": y, "gap": (psi - gaussian_limit(y, &coin)?).norm() }))
        })
        .collect::<Result<_, RunError>>()?;
    Ok(json!({
        "n_max": n,
        "a": params.a,
        "b": params.b,
        "moments": moments,
        "gaussian_limit": gaussian,
        "monte_carlo": {
            "n": cmp.n,
            "replicas": cmp.replicas,
            "max_abs_deviation": cmp.max_abs_deviation,
            "within_4_stderr": cmp.within(4.0),
        },
    }))
}

fn lyapunov_scan(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let zs = annulus_grid(&cfg.z_grid.radii, cfg.z_grid.angles);
    let rows = zs
        .iter()
        .map(|&z| lyapunov_estimate(z, &coin, cfg.distribution, cfg.sizes.n_max, cfg.sizes.replicas, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    dir.write_with("lyapunov.csv", |w| Ok(write_lyapunov_csv(&rows, w)?))?;
    let gammas: Vec<f64> = rows.iter().map(|r| r.gamma_hat).collect();
    let (lo, hi) = gammas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
    let mean = gammas.iter().sum::<f64>() / gammas.len() as f64;
    let min_sig = rows.iter().map(|r| r.gamma_hat / r.stderr).fold(f64::INFINITY, f64::min);
    Ok(json!({
        "points": rows.len(),
        "n": cfg.sizes.n_max,
        "replicas": cfg.sizes.replicas,
        "gamma_min": lo,
        "gamma_max": hi,
        "relative_variation": (hi - lo) / mean,
        "min_significance": min_sig,
    }))
}

fn greens_decay(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let [lo, hi] = cfg.sizes.window;
    let spec = FractionalMomentSpec {
        z: C64::new(cfg.z_grid.z[0], cfg.z_grid.z[1]),
        s: cfg.sizes.s,
        pairs: (4..=cfg.sizes.d_max).map(|d| (d, 0)).collect(),
        window: lo..=hi,
        dist: cfg.distribution,
        coin,
        replicas: cfg.sizes.replicas,
        seed: cfg.seed,
    };
    let est = fractional_moment(&spec)?;
    dir.write_with("fractional_moments.csv", |w| Ok(write_fm_csv(&est, w)?))?;
    let fit = decay_fit(&est.by_distance)?;
    Ok(json!({
        "s": spec.s,
        "re_z": spec.z.re,
        "im_z": spec.z.im,
        "window": [lo, hi],
        "replicas": spec.replicas,
        "fit": fit,
    }))
}

fn gauge_check(cfg: &ExperimentConfig, dir: &mut DataDir) -> Result<Value, RunError> {
    let coin = coin_of(cfg)?;
    let general = GeneralCoin::new(cfg.coin.t, cfg.coin.alpha, cfg.coin.gamma, cfg.coin.theta)?;
    let n = cfg.sizes.n_max;
    let reach = 2 * n as i64 + 6;
    let rows: Vec<[f64; 3]> = (0..cfg.sizes.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let phases = sample_phases(cfg.distribution, -reach..=reach, replica_seed(cfg.seed, i))?;
            let mut dist_gap = 0.0f64;
            for spin in [Spin::Up, Spin::Down] {
                let init = basis_state(spin, 0);
                let random = konno_evolve(&coin, Some(&phases), &init, n);
                let clean = konno_evolve(&coin, None, &init, n);
                for k in -(n as i64) - 1..=n as i64 + 1 {
                    dist_gap = dist_gap.max((random.site_probability(k) - clean.site_probability(k)).abs());
                }
            }
            Ok([dist_gap, verify_konno_gauge(&coin, &phases)?, verify_general_reduction(&general, &phases)?])
        })
        .collect::<Result<_, RunError>>()?;
    dir.write_with("gauge.csv", |w| {
        let mut w = csv_writer(w);
        w.write_record(["realization", "seed", "konno_distribution_gap", "konno_band_gap", "general_band_gap"])
            .map_err(csv_err)?;
        for (i, r) in rows.iter().enumerate() {
            w.write_record([
                i.to_string(),
                replica_seed(cfg.seed, i as u64).to_string(),
                r[0].to_string(),
                r[1].to_string(),
                r[2].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| RunError::Core(e.into()))
    })?;
    let max = |j: usize| rows.iter().map(|r| r[j]).fold(0.0, f64::max);
    let tolerance = 1e-10;
    Ok(json!({
        "n": n,
        "realizations": rows.len(),
        "konno_distribution_gap": max(0),
        "konno_band_gap": max(1),
        "general_band_gap": max(2),
        "tolerance": tolerance,
        "passed": max(0) <= tolerance && max(1) <= tolerance && max(2) <= tolerance,
    }))
}
