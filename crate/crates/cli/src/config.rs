//! JSON experiment configuration: parsing, defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use latticesir::first_moments::Rates;
use latticesir::intermittency::Space;
use latticesir::kernel::{
    build_kernel, build_kernel_asymmetric, kernel_gaussian, kernel_nearest_neighbor, MobilityKernel,
};
use latticesir::lattice::{Coord, LatticeSpec};
use latticesir::simulator::{Figure1Config, Mode, DEFAULT_EVENT_BUDGET, MIN_REPLICAS};

use crate::error::{CliError, CliResult};

pub const DEFAULT_N: usize = 64;
pub const DEFAULT_H: f64 = 1.0;
pub const DEFAULT_RHO0: f64 = 1.0;
pub const DEFAULT_GAUSSIAN_VARIANCE: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    KernelInfo,
    Moments,
    Green,
    Simulate,
    Intermittency,
    Classify,
    Figure1,
    Tables,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::KernelInfo => "kernel-info",
            Subcommand::Moments => "moments",
            Subcommand::Green => "green",
            Subcommand::Simulate => "simulate",
            Subcommand::Intermittency => "intermittency",
            Subcommand::Classify => "classify",
            Subcommand::Figure1 => "figure1",
            Subcommand::Tables => "tables",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    d: Option<usize>,
    n: Option<usize>,
    h: Option<f64>,
    kernel: Option<Value>,
    #[serde(alias = "κ")]
    kappa: Option<f64>,
    #[serde(alias = "β")]
    beta: Option<f64>,
    #[serde(alias = "γ")]
    gamma: Option<f64>,
    #[serde(alias = "ρ₀", alias = "ρ0")]
    rho0: Option<f64>,
    mode: Option<Mode>,
    times: Option<Vec<f64>>,
    k: Option<Frequencies>,
    separations: Option<Vec<Vec<i64>>>,
    site: Option<Vec<i64>>,
    replicas: Option<usize>,
    seed: Option<u64>,
    snapshots: Option<Vec<f64>>,
    event_budget: Option<u64>,
    lambda: Option<f64>,
    decay_times: Option<Vec<f64>>,
    space: Option<Space>,
    figure1: Option<RawFigure1>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Frequencies {
    One(Vec<f64>),
    Many(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    preset: Option<String>,
    variance: Option<f64>,
    radius: Option<u32>,
    entries: Option<Vec<KernelEntry>>,
    #[serde(default)]
    asymmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub offset: Vec<i64>,
    pub weight: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure1 {
    n: Option<usize>,
    events: Option<u64>,
    seed: Option<u64>,
    #[serde(alias = "κ")]
    kappa: Option<f64>,
    #[serde(alias = "β")]
    beta: Option<f64>,
    #[serde(alias = "γ")]
    gamma: Option<f64>,
    mode: Option<Mode>,
    msd_stride: Option<u64>,
    variance: Option<f64>,
    radius: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum KernelConfig {
    NearestNeighbor,
    Gaussian { variance: f64, radius: u32 },
    Explicit { entries: Vec<KernelEntry>, asymmetric: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureSettings {
    pub run: Figure1Config,
    pub variance: f64,
    pub radius: u32,
}

/// Validated configuration with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub d: Option<usize>,
    pub n: usize,
    /// Whether `n` came from the file rather than the default.
    pub n_given: bool,
    pub h: f64,
    pub kernel: Option<KernelConfig>,
    pub kappa: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub rho0: f64,
    pub mode: Mode,
    pub times: Vec<f64>,
    pub k: Option<Vec<Vec<f64>>>,
    pub separations: Option<Vec<Vec<i64>>>,
    pub site: Option<Vec<i64>>,
    pub replicas: usize,
    pub seed: u64,
    pub snapshots: Option<Vec<f64>>,
    pub event_budget: u64,
    pub lambda: f64,
    pub decay_times: Vec<f64>,
    pub space: Space,
    pub figure1: FigureSettings,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub snapshots: Option<Vec<f64>>,
}

/// Splits a serde error into the offending field path and a message.
fn field_error(prefix: &str, err: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let inner = err.inner().to_string();
    let mut path = err.path().to_string();
    if path == "." {
        path.clear();
    }
    let join = |a: &str, b: &str| match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a}.{b}"),
    };
    let mut field = join(prefix, &path);
    // Some serde versions leave the unknown key out of the path.
    if let Some(rest) = inner.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            if !field.rsplit('.').next().is_some_and(|last| last == key) {
                field = join(&field, key);
            }
        }
    }
    let field = if field.is_empty() { None } else { Some(field) };
    let message = match &field {
        Some(f) => format!("{f}: {inner}"),
        None => inner,
    };
    CliError::Validation { field, message }
}

pub fn parse_config(path: &Path) -> CliResult<Value> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("malformed JSON: {e}")))
}

fn positive_finite(field: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::invalid(field, format!("{field} = {v} must be positive and finite")))
    }
}

fn nonnegative(field: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::invalid(field, format!("{field} = {v} must be nonnegative and finite")))
    }
}

fn times_field(field: &str, ts: &[f64]) -> CliResult<()> {
    if ts.is_empty() {
        return Err(CliError::invalid(field, format!("{field} must not be empty")));
    }
    for t in ts {
        nonnegative(field, *t)?;
    }
    Ok(())
}

fn kernel_config(value: &Value) -> CliResult<KernelConfig> {
    let raw = match value {
        Value::String(name) => {
            RawKernel { preset: Some(name.clone()), variance: None, radius: None, entries: None, asymmetric: false }
        }
        Value::Object(_) => serde_path_to_error::deserialize(value.clone()).map_err(|e| field_error("kernel", e))?,
        _ => return Err(CliError::invalid("kernel", "kernel must be a preset name or an object")),
    };
    match (raw.preset.as_deref(), raw.entries) {
        (Some(_), Some(_)) => Err(CliError::invalid("kernel", "give either a preset or explicit entries, not both")),
        (None, None) => Err(CliError::invalid("kernel", "kernel needs a preset or explicit entries")),
        (None, Some(entries)) => {
            if raw.variance.is_some() || raw.radius.is_some() {
                return Err(CliError::invalid("kernel", "variance and radius apply only to the gaussian preset"));
            }
            Ok(KernelConfig::Explicit { entries, asymmetric: raw.asymmetric })
        }
        (Some("nearest_neighbor"), None) => {
            if raw.variance.is_some() || raw.radius.is_some() || raw.asymmetric {
                return Err(CliError::invalid("kernel", "nearest_neighbor takes no parameters"));
            }
            Ok(KernelConfig::NearestNeighbor)
        }
        (Some("gaussian"), None) => {
            if raw.asymmetric {
                return Err(CliError::invalid("kernel.asymmetric", "the gaussian preset is symmetric"));
            }
            let variance = positive_finite("kernel.variance", raw.variance.unwrap_or(DEFAULT_GAUSSIAN_VARIANCE))?;
            let radius = raw.radius.unwrap_or_else(|| (4.0 * variance.sqrt()).ceil().max(1.0) as u32);
            if radius == 0 {
                return Err(CliError::invalid("kernel.radius", "radius must be at least 1"));
            }
            Ok(KernelConfig::Gaussian { variance, radius })
        }
        (Some(other), None) => Err(CliError::invalid(
            "kernel.preset",
            format!("unknown kernel preset {other:?}; expected \"nearest_neighbor\" or \"gaussian\""),
        )),
    }
}

fn figure_settings(raw: Option<RawFigure1>) -> CliResult<FigureSettings> {
    let raw = raw.unwrap_or_default();
    let mut run = Figure1Config::default();
    if let Some(n) = raw.n {
        if n < 3 {
            return Err(CliError::invalid("figure1.n", "figure1.n must be at least 3"));
        }
        run.n = n;
    }
    if let Some(e) = raw.events {
        run.events = e;
    }
    if let Some(s) = raw.seed {
        run.seed = s;
    }
    if let Some(m) = raw.mode {
        run.mode = m;
    }
    if let Some(s) = raw.msd_stride {
        if s == 0 {
            return Err(CliError::invalid("figure1.msd_stride", "figure1.msd_stride must be positive"));
        }
        run.msd_stride = s;
    }
    let kappa = nonnegative("figure1.kappa", raw.kappa.unwrap_or(run.rates.kappa))?;
    let beta = nonnegative("figure1.beta", raw.beta.unwrap_or(run.rates.beta))?;
    let gamma = nonnegative("figure1.gamma", raw.gamma.unwrap_or(run.rates.gamma))?;
    run.rates = Rates::new(kappa, beta, gamma, 1.0)?;
    let variance = positive_finite("figure1.variance", raw.variance.unwrap_or(DEFAULT_GAUSSIAN_VARIANCE))?;
    let radius = raw.radius.unwrap_or(16);
    if radius == 0 {
        return Err(CliError::invalid("figure1.radius", "figure1.radius must be at least 1"));
    }
    Ok(FigureSettings { run, variance, radius })
}

impl ExperimentConfig {
    /// Applies defaults and overrides, then checks everything that does not
    /// depend on the subcommand.
    pub fn from_value(value: &Value, overrides: &Overrides) -> CliResult<Self> {
        if !value.is_object() {
            return Err(CliError::Validation { field: None, message: "configuration must be a JSON object".into() });
        }
        let raw: RawConfig = serde_path_to_error::deserialize(value.clone()).map_err(|e| field_error("", e))?;
        if let Some(d) = raw.d {
            if !(1..=3).contains(&d) {
                return Err(CliError::invalid("d", format!("d = {d} must be 1, 2 or 3")));
            }
        }
        let n = raw.n.unwrap_or(DEFAULT_N);
        if n < 2 {
            return Err(CliError::invalid("n", format!("n = {n} must be at least 2")));
        }
        let h = positive_finite("h", raw.h.unwrap_or(DEFAULT_H))?;
        let kernel = raw.kernel.as_ref().map(kernel_config).transpose()?;
        let rate = |name: &str, v: Option<f64>| v.map(|x| nonnegative(name, x)).transpose();
        let kappa = rate("kappa", raw.kappa)?;
        let beta = rate("beta", raw.beta)?;
        let gamma = rate("gamma", raw.gamma)?;
        let rho0 = nonnegative("rho0", raw.rho0.unwrap_or(DEFAULT_RHO0))?;
        let times = raw.times.unwrap_or_else(|| vec![1.0]);
        times_field("times", &times)?;
        let k = raw.k.map(|f| match f {
            Frequencies::One(v) => vec![v],
            Frequencies::Many(v) => v,
        });
        if let Some(ks) = &k {
            if ks.is_empty() {
                return Err(CliError::invalid("k", "k must not be empty"));
            }
            if ks.iter().flatten().any(|x| !x.is_finite()) {
                return Err(CliError::invalid("k", "frequencies must be finite"));
            }
        }
        if let Some(seps) = &raw.separations {
            if seps.is_empty() {
                return Err(CliError::invalid("separations", "separations must not be empty"));
            }
            if seps.iter().any(|v| v.iter().all(|&c| c == 0)) {
                return Err(CliError::invalid("separations", "separations must be nonzero"));
            }
        }
        let replicas = overrides.replicas.or(raw.replicas).unwrap_or(MIN_REPLICAS);
        if replicas < MIN_REPLICAS {
            return Err(CliError::invalid(
                "replicas",
                format!("replicas = {replicas} is below the minimum of {MIN_REPLICAS}"),
            ));
        }
        let snapshots = overrides.snapshots.clone().or(raw.snapshots);
        if let Some(s) = &snapshots {
            times_field("snapshots", s)?;
        }
        let event_budget = raw.event_budget.unwrap_or(DEFAULT_EVENT_BUDGET);
        if event_budget == 0 {
            return Err(CliError::invalid("event_budget", "event_budget must be positive"));
        }
        let lambda = nonnegative("lambda", raw.lambda.unwrap_or(0.0))?;
        let decay_times = raw.decay_times.unwrap_or_default();
        if !decay_times.is_empty() {
            for t in &decay_times {
                positive_finite("decay_times", *t)?;
            }
            if decay_times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::invalid("decay_times", "decay_times must be increasing"));
            }
        }
        let cfg = ExperimentConfig {
            d: raw.d,
            n,
            n_given: raw.n.is_some(),
            h,
            kernel,
            kappa,
            beta,
            gamma,
            rho0,
            mode: overrides.mode.or(raw.mode).unwrap_or_default(),
            times,
            k,
            separations: raw.separations,
            site: raw.site,
            replicas,
            seed: overrides.seed.or(raw.seed).unwrap_or(1),
            snapshots,
            event_budget,
            lambda,
            decay_times,
            space: raw.space.unwrap_or(Space::Inhomogeneous),
            figure1: figure_settings(raw.figure1)?,
        };
        cfg.check_dimensions()?;
        Ok(cfg)
    }

    fn check_dimensions(&self) -> CliResult<()> {
        let Some(d) = self.d else { return Ok(()) };
        let arity = |field: &str, v: &[i64]| {
            if v.len() == d {
                Ok(())
            } else {
                Err(CliError::invalid(field, format!("{field} entries need {d} components, got {}", v.len())))
            }
        };
        if let Some(ks) = &self.k {
            for k in ks {
                if k.len() != d {
                    return Err(CliError::invalid("k", format!("k entries need {d} components, got {}", k.len())));
                }
            }
        }
        for v in self.separations.iter().flatten() {
            arity("separations", v)?;
        }
        if let Some(s) = &self.site {
            arity("site", s)?;
        }
        if let Some(KernelConfig::Explicit { entries, .. }) = &self.kernel {
            for e in entries {
                arity("kernel.entries", &e.offset)?;
            }
        }
        Ok(())
    }

    /// Checks the fields a subcommand needs before any work starts.
    pub fn require(&self, sub: Subcommand) -> CliResult<()> {
        let need = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(CliError::invalid(field, format!("{} needs `{field}`", sub.name())))
            }
        };
        match sub {
            Subcommand::Figure1 | Subcommand::Tables => return Ok(()),
            _ => {}
        }
        need("d", self.d.is_some())?;
        need("kernel", self.kernel.is_some())?;
        if sub == Subcommand::KernelInfo {
            return Ok(());
        }
        need("kappa", self.kappa.is_some())?;
        if sub == Subcommand::Green {
            if self.lambda == 0.0 && self.kappa == Some(0.0) {
                return Err(CliError::invalid("kappa", "the Green function at lambda = 0 needs kappa > 0"));
            }
            return Ok(());
        }
        need("beta", self.beta.is_some())?;
        need("gamma", self.gamma.is_some())?;
        if sub == Subcommand::Classify && self.gamma == Some(0.0) {
            return Err(CliError::invalid(
                "gamma",
                "classification needs gamma > 0 (reproduction numbers divide by gamma)",
            ));
        }
        if sub == Subcommand::Simulate && self.rho0.fract() != 0.0 {
            return Err(CliError::invalid("rho0", format!("simulation needs an integer rho0, got {}", self.rho0)));
        }
        Ok(())
    }

    pub fn dimension(&self) -> CliResult<usize> {
        self.d.ok_or_else(|| CliError::invalid("d", "missing `d`"))
    }

    pub fn kernel(&self) -> CliResult<MobilityKernel> {
        let d = self.dimension()?;
        let spec = self.kernel.as_ref().ok_or_else(|| CliError::invalid("kernel", "missing `kernel`"))?;
        let built = match spec {
            KernelConfig::NearestNeighbor => kernel_nearest_neighbor(d),
            KernelConfig::Gaussian { variance, radius } => kernel_gaussian(d, *variance, *radius),
            KernelConfig::Explicit { entries, asymmetric } => {
                let list: Vec<(Vec<i64>, f64)> = entries.iter().map(|e| (e.offset.clone(), e.weight)).collect();
                if *asymmetric {
                    build_kernel_asymmetric(d, &list)
                } else {
                    build_kernel(d, &list)
                }
            }
        };
        built.map_err(|e| CliError::invalid("kernel", e.to_string()))
    }

    pub fn rates(&self) -> CliResult<Rates> {
        let get = |name: &str, v: Option<f64>| v.ok_or_else(|| CliError::invalid(name, format!("missing `{name}`")));
        Ok(Rates::new(get("kappa", self.kappa)?, get("beta", self.beta)?, get("gamma", self.gamma)?, self.rho0)?)
    }

    pub fn lattice(&self) -> CliResult<LatticeSpec> {
        LatticeSpec::with_spacing(self.dimension()?, self.n, self.h).map_err(|e| CliError::invalid("n", e.to_string()))
    }

    pub fn frequencies(&self) -> CliResult<Vec<Vec<f64>>> {
        Ok(self.k.clone().unwrap_or_else(|| vec![vec![0.0; self.d.unwrap_or(1)]]))
    }

    /// Pair separations, defaulting to the first unit vector.
    pub fn separation_coords(&self) -> CliResult<Vec<Coord>> {
        let d = self.dimension()?;
        let list = self.separations.clone().unwrap_or_else(|| {
            let mut e = vec![0; d];
            e[0] = 1;
            vec![e]
        });
        Ok(list.iter().map(|v| to_coord(v)).collect())
    }

    pub fn site_coord(&self) -> Option<Coord> {
        self.site.as_ref().map(|s| to_coord(s))
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.clone().unwrap_or_else(|| self.times.clone())
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self, sub: Subcommand, order: Option<u8>) -> String {
        use sha2::{Digest, Sha256};
        #[derive(Serialize)]
        struct Keyed<'a> {
            subcommand: &'a str,
            order: Option<u8>,
            config: &'a ExperimentConfig,
        }
        let bytes = serde_json::to_vec(&Keyed { subcommand: sub.name(), order, config: self }).expect("serializable");
        hex(&Sha256::digest(bytes))
    }
}

pub fn to_coord(v: &[i64]) -> Coord {
    let mut c = [0i64; 3];
    c[..v.len().min(3)].copy_from_slice(&v[..v.len().min(3)]);
    c
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
