//! Experiment configuration: TOML in, range-checked and default-filled out.

use std::fmt;
use std::path::PathBuf;

use qwalk_core::coin::PhaseDistribution;
use qwalk_core::greens::UNIT_CIRCLE_MARGIN;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ballistic,
    SpatialLocalization,
    TemporalDiffusion,
    LyapunovScan,
    GreensDecay,
    GaugeCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Ballistic,
        ExperimentKind::SpatialLocalization,
        ExperimentKind::TemporalDiffusion,
        ExperimentKind::LyapunovScan,
        ExperimentKind::GreensDecay,
        ExperimentKind::GaugeCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Ballistic => "ballistic",
            ExperimentKind::SpatialLocalization => "spatial-localization",
            ExperimentKind::TemporalDiffusion => "temporal-diffusion",
            ExperimentKind::LyapunovScan => "lyapunov-scan",
            ExperimentKind::GreensDecay => "greens-decay",
            ExperimentKind::GaugeCheck => "gauge-check",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Ballistic => "deterministic coin: ballistic constant by quadrature vs direct evolution",
            ExperimentKind::SpatialLocalization => "phases frozen in space: per-realization position moments over time",
            ExperimentKind::TemporalDiffusion => "phases renewed each step: exact persistent-walk moments and Monte Carlo check",
            ExperimentKind::LyapunovScan => "Lyapunov exponent of transfer-matrix products over a grid of z",
            ExperimentKind::GreensDecay => "fractional moments of the Green's function vs distance, with exponential fit",
            ExperimentKind::GaugeCheck => "gauge equivalences of the Konno model and of general coins",
        }
    }

    fn needs_bounded_density(self) -> bool {
        matches!(
            self,
            ExperimentKind::SpatialLocalization | ExperimentKind::LyapunovScan | ExperimentKind::GreensDecay
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinConfig {
    pub t: f64,
    /// Extra phases of a general coin; read by `gauge-check` only.
    pub alpha: f64,
    pub gamma: f64,
    pub theta: f64,
}

/// Initial coin state `φ₀ = up |↑⟩ + down |↓⟩` at site 0, as `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub up: [f64; 2],
    pub down: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    pub n_max: usize,
    pub replicas: usize,
    /// Relabeled index window `[lo, hi]` of the Green's function solve.
    pub window: [i64; 2],
    pub s: f64,
    pub orders: Vec<u32>,
    pub d_max: i64,
    pub grid: usize,
    pub mc_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGrid {
    pub radii: Vec<f64>,
    pub angles: usize,
    /// Spectral parameter of `greens-decay`, `[re, im]`.
    pub z: [f64; 2],
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub coin: CoinConfig,
    pub distribution: PhaseDistribution,
    pub initial: InitialConfig,
    pub sizes: Sizes,
    pub z_grid: ZGrid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoin {
    t: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    theta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    up: Option<[f64; 2]>,
    down: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSizes {
    n_max: Option<usize>,
    replicas: Option<usize>,
    window: Option<[i64; 2]>,
    s: Option<f64>,
    orders: Option<Vec<u32>>,
    d_max: Option<i64>,
    grid: Option<usize>,
    mc_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZGrid {
    radii: Option<Vec<f64>>,
    angles: Option<usize>,
    z: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    coin: RawCoin,
    distribution: Option<PhaseDistribution>,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    sizes: RawSizes,
    #[serde(default)]
    z_grid: RawZGrid,
}

/// One problem with a config, tied to the dotted field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn validate_config(text: &str) -> Result<ExperimentConfig, ValidationErrors> {
    validate_with(text, &Overrides::default())
}

pub fn validate_with(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ValidationErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        ValidationErrors(vec![FieldError { field: "config".into(), message: e.message().to_string() }])
    })?;
    resolve(raw, overrides)
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn check(&mut self, ok: bool, field: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.0.push(FieldError { field: field.into(), message: message() });
        }
    }
}

fn resolve(raw: RawConfig, overrides: &Overrides) -> Result<ExperimentConfig, ValidationErrors> {
    use ExperimentKind as E;
    let kind = raw.experiment;
    let mut c = Checker(Vec::new());

    let coin = CoinConfig {
        t: raw.coin.t.unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
        alpha: raw.coin.alpha.unwrap_or(0.3),
        gamma: raw.coin.gamma.unwrap_or(1.1),
        theta: raw.coin.theta.unwrap_or(-0.4),
    };
    c.check((0.0..=1.0).contains(&coin.t), "coin.t", || format!("must lie in [0, 1], got {}", coin.t));
    for (name, v) in [("coin.alpha", coin.alpha), ("coin.gamma", coin.gamma), ("coin.theta", coin.theta)] {
        c.check(v.is_finite(), name, || format!("must be finite, got {v}"));
    }
    if matches!(kind, E::LyapunovScan) {
        c.check(coin.t > 0.0, "coin.t", || "lyapunov-scan needs t > 0 (transfer matrices)".into());
    }
    if matches!(kind, E::TemporalDiffusion) {
        c.check(coin.t < 1.0, "coin.t", || "temporal-diffusion needs t < 1 (finite diffusion constant)".into());
    }

    let distribution = raw.distribution.unwrap_or(PhaseDistribution::UniformFull);
    if let Err(e) = distribution.validate() {
        c.check(false, "distribution", || e.to_string());
    }
    if kind.needs_bounded_density() {
        c.check(distribution.has_bounded_density(), "distribution", || {
            format!("{} is incompatible with point-mass phases (no bounded density)", kind.name())
        });
    }
    if matches!(kind, E::TemporalDiffusion) {
        c.check(distribution.mean_exp_minus_i().norm() <= 1e-12, "distribution", || {
            "temporal-diffusion needs phases with zero circular mean E[e^{-iω}]".into()
        });
    }

    let initial = InitialConfig { up: raw.initial.up.unwrap_or([1.0, 0.0]), down: raw.initial.down.unwrap_or([0.0, 0.0]) };
    let norm = initial.up.iter().chain(&initial.down).map(|x| x * x).sum::<f64>();
    c.check((norm - 1.0).abs() <= 1e-9, "initial", || format!("coin state must have unit norm, got |φ|² = {norm}"));

    let d_max = raw.sizes.d_max.unwrap_or(40);
    let default_window = [-2 * d_max, 3 * d_max];
    let sizes = Sizes {
        n_max: raw.sizes.n_max.unwrap_or(match kind {
            E::Ballistic | E::SpatialLocalization => 1000,
            E::TemporalDiffusion | E::LyapunovScan => 10_000,
            E::GreensDecay => 0,
            E::GaugeCheck => 20,
        }),
        replicas: raw.sizes.replicas.unwrap_or(match kind {
            E::Ballistic => 1,
            E::SpatialLocalization => 20,
            E::TemporalDiffusion => 500,
            E::LyapunovScan => 32,
            E::GreensDecay => 1000,
            E::GaugeCheck => 10,
        }),
        window: raw.sizes.window.unwrap_or(default_window),
        s: raw.sizes.s.unwrap_or(1.0 / 3.0),
        orders: raw.sizes.orders.unwrap_or_else(|| match kind {
            E::TemporalDiffusion => vec![2, 4],
            _ => vec![2],
        }),
        d_max,
        grid: raw.sizes.grid.unwrap_or(qwalk_core::fourier::DEFAULT_GRID),
        mc_steps: raw.sizes.mc_steps.unwrap_or(30),
    };
    let n_limit = if matches!(kind, E::TemporalDiffusion | E::LyapunovScan) { 10_000_000 } else { 100_000 };
    if !matches!(kind, E::GreensDecay) {
        c.check((1..=n_limit).contains(&sizes.n_max), "sizes.n_max", || {
            format!("must lie in [1, {n_limit}] for {}, got {}", kind.name(), sizes.n_max)
        });
    }
    if !matches!(kind, E::Ballistic) {
        let lo = if matches!(kind, E::GaugeCheck) { 1 } else { 2 };
        c.check((lo..=10_000_000).contains(&sizes.replicas), "sizes.replicas", || {
            format!("must lie in [{lo}, 10000000], got {}", sizes.replicas)
        });
    }
    c.check(
        !sizes.orders.is_empty() && sizes.orders.iter().all(|l| (1..=12).contains(l)),
        "sizes.orders",
        || format!("needs at least one moment order, each in [1, 12], got {:?}", sizes.orders),
    );
    c.check(sizes.grid >= 16 && sizes.grid.is_multiple_of(2) && sizes.grid <= 1 << 22, "sizes.grid", || {
        format!("must be even and in [16, 4194304], got {}", sizes.grid)
    });
    c.check((1..=1000).contains(&sizes.mc_steps), "sizes.mc_steps", || {
        format!("must lie in [1, 1000], got {}", sizes.mc_steps)
    });
    if matches!(kind, E::GreensDecay) {
        c.check(sizes.s > 0.0 && sizes.s < 1.0, "sizes.s", || format!("must lie in (0, 1), got {}", sizes.s));
        c.check((16..=10_000).contains(&d_max), "sizes.d_max", || format!("must lie in [16, 10000], got {d_max}"));
        let [lo, hi] = sizes.window;
        c.check(lo % 2 == 0 && hi % 2 == 0, "sizes.window", || format!("endpoints must be even, got [{lo}, {hi}]"));
        c.check(lo <= 0 && hi >= d_max, "sizes.window", || {
            format!("must contain column 0 and rows up to d_max = {d_max}, got [{lo}, {hi}]")
        });
        c.check(hi - lo <= 1_000_000, "sizes.window", || "at most 10^6 indices".into());
    }

    let z_grid = ZGrid {
        radii: raw.z_grid.radii.unwrap_or_else(|| vec![0.98, 1.0, 1.02]),
        angles: raw.z_grid.angles.unwrap_or(1),
        z: raw.z_grid.z.unwrap_or([0.95, 0.0]),
    };
    if matches!(kind, E::LyapunovScan) {
        c.check(
            !z_grid.radii.is_empty() && z_grid.radii.iter().all(|r| r.is_finite() && *r > 0.0),
            "z_grid.radii",
            || format!("needs positive finite radii, got {:?}", z_grid.radii),
        );
        c.check((1..=4096).contains(&z_grid.angles), "z_grid.angles", || {
            format!("must lie in [1, 4096], got {}", z_grid.angles)
        });
    }
    if matches!(kind, E::GreensDecay) {
        let m = z_grid.z[0].hypot(z_grid.z[1]);
        c.check(m.is_finite() && (m - 1.0).abs() >= UNIT_CIRCLE_MARGIN && m > 0.0, "z_grid.z", || {
            format!("|z| must be finite, nonzero and at least {UNIT_CIRCLE_MARGIN} away from 1, got {m}")
        });
    }

    let workers = overrides.workers.or(raw.workers);
    if let Some(w) = workers {
        c.check(w >= 1, "workers", || "must be at least 1".into());
    }

    if !c.0.is_empty() {
        return Err(ValidationErrors(c.0));
    }
    Ok(ExperimentConfig {
        experiment: kind,
        seed: overrides.seed.or(raw.seed).unwrap_or(0),
        workers,
        out: overrides.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from(format!("qwalk-out/{}", kind.name()))),
        coin,
        distribution,
        initial,
        sizes,
        z_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(text: &str) -> Vec<String> {
        validate_config(text).unwrap_err().0.into_iter().map(|e| e.field).collect()
    }

    #[test]
    fn out_of_range_t_names_the_field() {
        let errs = validate_config("experiment = \"ballistic\"\n[coin]\nt = 1.5\n").unwrap_err();
        assert_eq!(errs.0[0].field, "coin.t");
        assert!(errs.to_string().starts_with("coin.t: must lie in [0, 1]"));
    }

    #[test]
    fn point_mass_rejected_for_localization() {
        for exp in ["spatial-localization", "lyapunov-scan", "greens-decay"] {
            let text = format!("experiment = \"{exp}\"\n[distribution]\nkind = \"point-mass\"\nvalue = 0.5\n");
            assert_eq!(fields(&text), vec!["distribution"], "{exp}");
        }
        let ok = "experiment = \"ballistic\"\n[distribution]\nkind = \"point-mass\"\nvalue = 0.5\n";
        assert!(validate_config(ok).is_ok());
    }

    #[test]
    fn biased_law_rejected_for_temporal_diffusion() {
        let text = "experiment = \"temporal-diffusion\"\n[distribution]\nkind = \"uniform-interval\"\na = 0.0\nb = 1.0\n";
        assert_eq!(fields(text), vec!["distribution"]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert_eq!(fields("experiment = \"ballistic\"\nsteps = 4\n"), vec!["config"]);
        assert_eq!(fields("experiment = \"ballistic\"\n[sizes]\nn = 4\n"), vec!["config"]);
    }

    #[test]
    fn several_errors_reported_together() {
        let text = "experiment = \"greens-decay\"\n[sizes]\ns = 1.2\nwindow = [-3, 10]\n[z_grid]\nz = [1.0, 0.0]\n";
        assert_eq!(fields(text), vec!["sizes.s", "sizes.window", "sizes.window", "z_grid.z"]);
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = validate_config("experiment = \"greens-decay\"\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.sizes.window, [-80, 120]);
        assert_eq!(cfg.sizes.replicas, 1000);
        assert_eq!(cfg.distribution, PhaseDistribution::UniformFull);
        assert_eq!(cfg.out, PathBuf::from("qwalk-out/greens-decay"));
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { seed: Some(9), workers: Some(2), out: Some("x".into()) };
        let cfg = validate_with("experiment = \"ballistic\"\nseed = 4\nworkers = 8\n", &o).unwrap();
        assert_eq!((cfg.seed, cfg.workers, cfg.out), (9, Some(2), PathBuf::from("x")));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = validate_config("experiment = \"lyapunov-scan\"\n").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
