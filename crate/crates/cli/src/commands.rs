//! Subcommand implementations and the reports they emit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use latticesir::first_moments::{
    classify_first_moment, classify_first_moment_homogeneous, m1_inhomogeneous, reproduction_numbers, Compartment,
    FirstMomentLabel, HomogeneousLabel, Rates, RegimeReport,
};
use latticesir::intermittency::{
    classify_intermittency, classify_intermittency_with, IntermittencyReport, LimitLabel, Space,
};
use latticesir::kernel::{
    effective_diffusion, grid_frequency, kernel_gaussian, kernel_nearest_neighbor, kernel_variance, symbol_grid,
};
use latticesir::lattice::Coord;
use latticesir::second_moments::{
    classify_second_moment, m2_inhomogeneous, Asymptote, PairKind, SecondMomentRegime, INHOMOGENEOUS_ROWS,
};
use latticesir::simulator::{
    figure1_experiment, init_state, mc_moments, Dynamics, McConfig, Mode, Quantity, Simulation, SpreadRun,
};
use latticesir::torus::{green_function, p00, p00_decay_fit, walk_regime, DecayFit, WalkRegime};

use crate::config::{ExperimentConfig, KernelEntry};
use crate::error::{CliError, CliResult};
use crate::output::{axis_names, num, Outputs, Table};

/// Environment variable capping the replica worker count.
pub const THREADS_ENV: &str = "LATTICESIR_THREADS";

fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn coord_cells(c: &Coord, d: usize) -> Vec<String> {
    c[..d].iter().map(|v| v.to_string()).collect()
}

fn coord_tag(c: &Coord, d: usize) -> String {
    c[..d].iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelInfo {
    pub d: usize,
    pub symmetric: bool,
    pub conjectural: bool,
    pub support: Vec<KernelEntry>,
    pub mass: f64,
    pub variance: f64,
    pub drift: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub covariance_rank: usize,
    pub walk_regime: WalkRegime,
    pub smallk_order: u32,
    pub h: f64,
    /// `kappa h^2 sigma^2 / 2`, present when `kappa` is configured.
    pub effective_diffusion: Option<f64>,
    pub symbol_grid_n: usize,
}

pub fn kernel_info(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<KernelInfo> {
    let k = cfg.kernel()?;
    let lattice = cfg.lattice()?;
    let d = k.d();
    let (regime, order) = walk_regime(&k);
    let cov = k.covariance();
    let info = KernelInfo {
        d,
        symmetric: k.is_symmetric(),
        conjectural: !k.is_symmetric(),
        support: k.support().iter().map(|(z, w)| KernelEntry { offset: z[..d].to_vec(), weight: *w }).collect(),
        mass: k.mass(),
        variance: kernel_variance(&k),
        drift: k.drift()[..d].to_vec(),
        covariance: cov[..d].iter().map(|row| row[..d].to_vec()).collect(),
        covariance_rank: k.covariance_rank(),
        walk_regime: regime,
        smallk_order: order,
        h: cfg.h,
        effective_diffusion: cfg.kappa.map(|kappa| effective_diffusion(&k, kappa, cfg.h)),
        symbol_grid_n: lattice.n(),
    };
    if out.enabled() {
        let sym = symbol_grid(&k, &lattice)?;
        let mut header = vec!["index".to_string()];
        header.extend(axis_names("k", d));
        header.extend(["re".to_string(), "im".to_string()]);
        let mut t = Table::new(&header)?;
        for i in 0..lattice.sites() {
            let f = grid_frequency(&lattice, i);
            let mut row = vec![i.to_string()];
            row.extend(f[..d].iter().map(|v| num(*v)));
            row.extend([num(sym.re[i]), num(sym.im[i])]);
            t.row(&row)?;
        }
        out.csv("symbol.csv", t)?;
        out.json("kernel.json", &info)?;
    }
    Ok(info)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub t: f64,
    pub file: String,
    pub total: f64,
    /// Sites where the susceptible moment is below zero.
    pub negative_s_sites: Vec<usize>,
    pub conjectural: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproductionSummary {
    pub r0: f64,
    pub r0m_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMomentReport {
    pub d: usize,
    pub n: usize,
    pub rates: Rates,
    pub fields: Vec<FieldSummary>,
    pub homogeneous_label: HomogeneousLabel,
    /// One entry per requested frequency; empty when `gamma = 0`.
    pub regimes: Vec<RegimeReport>,
    pub reproduction: Option<ReproductionSummary>,
}

pub fn moments_first(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<FirstMomentReport> {
    let (k, rates, lattice) = (cfg.kernel()?, cfg.rates()?, cfg.lattice()?);
    let d = lattice.d();
    let mut fields = Vec::new();
    for (j, &t) in cfg.times.iter().enumerate() {
        let f = m1_inhomogeneous(&k, &rates, t, &lattice)?;
        let file = format!("m1_t{j}.csv");
        let mut header = vec!["site_index".to_string()];
        header.extend(axis_names("x", d));
        header.extend(["m1_S", "m1_I", "m1_R"].map(String::from));
        let mut table = Table::new(&header)?;
        for x in 0..lattice.sites() {
            let mut row = vec![x.to_string()];
            row.extend(coord_cells(&lattice.coords(x), d));
            row.extend([num(f.s.values[x]), num(f.i.values[x]), num(f.r.values[x])]);
            table.row(&row)?;
        }
        out.csv(&file, table)?;
        fields.push(FieldSummary {
            t,
            file,
            total: f.total(),
            negative_s_sites: (0..lattice.sites()).filter(|&x| f.s.values[x] < 0.0).collect(),
            conjectural: f.i.conjectural,
        });
    }
    let (regimes, reproduction) = if rates.gamma > 0.0 {
        let regimes =
            cfg.frequencies()?.iter().map(|kv| classify_first_moment(&k, &rates, kv)).collect::<Result<Vec<_>, _>>()?;
        let r = reproduction_numbers(&k, &rates, &lattice)?;
        (regimes, Some(ReproductionSummary { r0: r.r0, r0m_max: r.max }))
    } else {
        (Vec::new(), None)
    };
    let report = FirstMomentReport {
        d,
        n: lattice.n(),
        rates,
        fields,
        homogeneous_label: classify_first_moment_homogeneous(&rates),
        regimes,
        reproduction,
    };
    out.json("moments_order1.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentRow {
    pub kind: PairKind,
    pub v: Vec<i64>,
    pub t: f64,
    pub value: f64,
    pub compartment_pair: String,
    pub conjectural: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentReport {
    pub d: usize,
    pub n: usize,
    pub rates: Rates,
    pub site: Vec<i64>,
    pub rows: Vec<SecondMomentRow>,
    pub classification: Vec<SecondMomentRegime>,
}

pub fn moments_second(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<SecondMomentReport> {
    let (k, rates, lattice) = (cfg.kernel()?, cfg.rates()?, cfg.lattice()?);
    let d = lattice.d();
    let site = cfg.site_coord();
    let seps = cfg.separation_coords()?;
    let mut header = vec!["kind".to_string()];
    header.extend(axis_names("v", d));
    header.extend(["t", "value", "compartment_pair"].map(String::from));
    let mut table = Table::new(&header)?;
    let mut rows = Vec::new();
    for &t in &cfg.times {
        let mut push = |kind: PairKind, v: Option<Coord>| -> CliResult<()> {
            let m = m2_inhomogeneous(&k, &rates, t, &lattice, kind, v, site)?;
            let vc = v.unwrap_or([0; 3]);
            let pair = label(&m.compartment_pair);
            let mut cells = vec![label(&kind)];
            cells.extend(coord_cells(&vc, d));
            cells.extend([num(t), num(m.value), pair.clone()]);
            table.row(&cells)?;
            rows.push(SecondMomentRow {
                kind,
                v: vc[..d].to_vec(),
                t,
                value: m.value,
                compartment_pair: pair,
                conjectural: m.conjectural,
            });
            Ok(())
        };
        push(PairKind::SameSite, None)?;
        for v in &seps {
            push(PairKind::Pair, Some(*v))?;
        }
    }
    out.csv("m2.csv", table)?;
    let classification =
        cfg.frequencies()?.iter().map(|kv| classify_second_moment(&k, &rates, kv)).collect::<Result<Vec<_>, _>>()?;
    let report = SecondMomentReport {
        d,
        n: lattice.n(),
        rates,
        site: site.unwrap_or([0; 3])[..d].to_vec(),
        rows,
        classification,
    };
    out.json("moments_order2.json", &report)?;
    Ok(report)
}

/// Serialized as the string `"infinite"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Infinite {
    #[serde(rename = "infinite")]
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GreenValue {
    Finite(f64),
    Marker(Infinite),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenReport {
    pub lambda: f64,
    pub value: GreenValue,
    pub regime: WalkRegime,
    pub smallk_order: u32,
    pub resolutions_used: Vec<usize>,
    pub conjectural: bool,
    pub decay: Option<DecayFit>,
}

pub fn green(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<GreenReport> {
    let k = cfg.kernel()?;
    let lattice = cfg.lattice()?;
    let kappa = cfg.kappa.ok_or_else(|| CliError::invalid("kappa", "missing `kappa`"))?;
    let g = green_function(&k, kappa, cfg.lambda, &lattice)?;
    let decay = if cfg.decay_times.is_empty() {
        None
    } else {
        let mut t = Table::new(&["t", "p00"])?;
        for &s in &cfg.decay_times {
            t.row(&[num(s), num(p00(&k, kappa, s, &lattice)?)])?;
        }
        out.csv("decay.csv", t)?;
        Some(p00_decay_fit(&k, kappa, &cfg.decay_times, &lattice)?)
    };
    let report = GreenReport {
        lambda: g.lambda,
        value: g.value.map(GreenValue::Finite).unwrap_or(GreenValue::Marker(Infinite::Infinite)),
        regime: g.regime,
        smallk_order: g.smallk_order,
        resolutions_used: g.resolutions_used,
        conjectural: g.conjectural,
        decay,
    };
    out.json("green.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub t: f64,
    pub quantity: String,
    pub mean: f64,
    pub standard_error: f64,
    pub replicas: usize,
    pub seed_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub d: usize,
    pub n: usize,
    pub rates: Rates,
    pub mode: Mode,
    pub seed: u64,
    pub replicas: usize,
    pub snapshots: Vec<f64>,
    pub trajectory_events: u64,
    pub trajectory_clock: f64,
    pub trajectory_extinct: bool,
    pub estimates: Vec<EstimateRow>,
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::invalid(THREADS_ENV, format!("{THREADS_ENV} = {s:?} must be a positive integer"))),
        },
    }
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<SimulateReport> {
    let (k, rates, lattice) = (cfg.kernel()?, cfg.rates()?, cfg.lattice()?);
    let threads = thread_cap()?;
    let d = lattice.d();
    let mut times = cfg.snapshot_times();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let horizon = *times.last().expect("validated nonempty");

    let mut sim = Simulation::new(init_state(&lattice, &rates, cfg.seed)?, Dynamics::new(&k, &rates, cfg.mode)?);
    let snaps = sim.run(horizon, &times, cfg.event_budget)?;
    let mut header = vec!["t".to_string(), "clock".into(), "events".into(), "site_index".into()];
    header.extend(axis_names("x", d));
    header.extend(["S", "I", "R"].map(String::from));
    let mut traj = Table::new(&header)?;
    for (t, snap) in times.iter().zip(&snaps) {
        for x in 0..lattice.sites() {
            let mut row = vec![num(*t), num(snap.clock), snap.events.to_string(), x.to_string()];
            row.extend(coord_cells(&lattice.coords(x), d));
            row.extend([snap.s[x], snap.i[x], snap.r[x]].map(|v| v.to_string()));
            traj.row(&row)?;
        }
    }
    out.csv("trajectory.csv", traj)?;

    let site = cfg.site_coord().unwrap_or([0; 3]);
    let mut quantities: Vec<Quantity> = [Compartment::S, Compartment::I, Compartment::R]
        .into_iter()
        .map(|c| Quantity::FirstMoment { compartment: c, site })
        .collect();
    quantities.push(Quantity::InfectedPair { x: site, y: site });
    for v in cfg.separation_coords()? {
        let y = lattice.coords(lattice.shift(lattice.index(&site), &v));
        quantities.push(Quantity::InfectedPair { x: site, y });
    }
    let mut estimates = Vec::new();
    let mut table = Table::new(&["t", "quantity", "mean", "standard_error", "replicas", "seed_base"])?;
    for &t in &times {
        let mc = McConfig {
            t,
            replicas: cfg.replicas,
            seed_base: cfg.seed,
            mode: cfg.mode,
            quantities: quantities.clone(),
            event_budget: cfg.event_budget,
            threads,
        };
        for e in mc_moments(&lattice, &rates, &k, &mc)? {
            let row = EstimateRow {
                t,
                quantity: e.quantity.tag(),
                mean: e.mean,
                standard_error: e.standard_error,
                replicas: e.replicas,
                seed_base: e.seed_base,
            };
            table.row(&[
                num(t),
                row.quantity.clone(),
                num(row.mean),
                num(row.standard_error),
                row.replicas.to_string(),
                row.seed_base.to_string(),
            ])?;
            estimates.push(row);
        }
    }
    out.csv("mc_estimates.csv", table)?;
    let report = SimulateReport {
        d,
        n: lattice.n(),
        rates,
        mode: cfg.mode,
        seed: cfg.seed,
        replicas: cfg.replicas,
        snapshots: times,
        trajectory_events: sim.state.events,
        trajectory_clock: sim.state.clock,
        trajectory_extinct: sim.state.i.iter().all(|&c| c == 0),
        estimates,
    };
    out.json("simulate.json", &report)?;
    Ok(report)
}

pub fn intermittency(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<IntermittencyReport> {
    let (k, rates) = (cfg.kernel()?, cfg.rates()?);
    let report = if cfg.n_given && cfg.space == Space::Inhomogeneous {
        classify_intermittency_with(&rates, &k, cfg.space, Some(cfg.lattice()?))?
    } else {
        classify_intermittency(&rates, &k, cfg.space)?
    };
    let d = k.d();
    let pair = format!("ratio_pair_v{}", coord_tag(&report.v, d));
    let mut t = Table::new(&["t", "ratio_same_site", pair.as_str()])?;
    for p in &report.series {
        t.row(&[num(p.t), num(p.same_site), num(p.pair)])?;
    }
    out.csv("intermittency.csv", t)?;
    out.json("intermittency.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub first_moment: Vec<RegimeReport>,
    pub homogeneous_first_moment: HomogeneousLabel,
    pub second_moment: Vec<SecondMomentRegime>,
    pub reproduction: ReproductionSummary,
    pub conjectural: bool,
}

pub fn classify(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<ClassifyReport> {
    let (k, rates, lattice) = (cfg.kernel()?, cfg.rates()?, cfg.lattice()?);
    let ks = cfg.frequencies()?;
    let first = ks.iter().map(|kv| classify_first_moment(&k, &rates, kv)).collect::<Result<Vec<_>, _>>()?;
    let second = ks.iter().map(|kv| classify_second_moment(&k, &rates, kv)).collect::<Result<Vec<_>, _>>()?;
    let r = reproduction_numbers(&k, &rates, &lattice)?;
    if out.enabled() {
        let d = lattice.d();
        let mut header = vec!["index".to_string()];
        header.extend(axis_names("k", d));
        header.push("r0m".into());
        let mut t = Table::new(&header)?;
        for (i, v) in r.per_mode.iter().enumerate() {
            let f = grid_frequency(&lattice, i);
            let mut row = vec![i.to_string()];
            row.extend(f[..d].iter().map(|x| num(*x)));
            row.push(num(*v));
            t.row(&row)?;
        }
        out.csv("r0m.csv", t)?;
    }
    let report = ClassifyReport {
        first_moment: first,
        homogeneous_first_moment: classify_first_moment_homogeneous(&rates),
        second_moment: second,
        reproduction: ReproductionSummary { r0: r.r0, r0m_max: r.max },
        conjectural: r.conjectural,
    };
    out.json("classify.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadSummary {
    pub distinct_sites: usize,
    pub final_msd: f64,
    pub events: u64,
    pub clock: f64,
    pub extinct: bool,
}

impl From<&SpreadRun> for SpreadSummary {
    fn from(r: &SpreadRun) -> Self {
        SpreadSummary {
            distinct_sites: r.distinct_sites,
            final_msd: r.final_msd,
            events: r.events,
            clock: r.clock,
            extinct: r.extinct,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Report {
    pub n: usize,
    /// Zero-based start site.
    pub start: Vec<i64>,
    pub seed: u64,
    pub events: u64,
    pub rates: Rates,
    pub mode: Mode,
    pub gaussian_variance: f64,
    pub gaussian_radius: u32,
    pub msd_ratio: f64,
    pub distinct_ratio: f64,
    pub nonlocal: SpreadSummary,
    pub local: SpreadSummary,
}

fn occupancy_grid(occ: &[u64], n: usize) -> CliResult<Table> {
    let mut t = Table::bare();
    for row in 0..n {
        let cells: Vec<String> = (0..n).map(|col| occ[col + n * row].to_string()).collect();
        t.row(&cells)?;
    }
    Ok(t)
}

pub fn figure1(cfg: &ExperimentConfig, out: &mut Outputs) -> CliResult<Figure1Report> {
    let fig = &cfg.figure1;
    let gauss = kernel_gaussian(2, fig.variance, fig.radius)?;
    let local = kernel_nearest_neighbor(2)?;
    let res = figure1_experiment(&gauss, &local, &fig.run)?;
    let n = res.n;
    out.csv("occupancy_nonlocal.csv", occupancy_grid(&res.nonlocal.occupancy, n)?)?;
    out.csv("occupancy_local.csv", occupancy_grid(&res.local.occupancy, n)?)?;
    let mut msd = Table::new(&["events", "msd_nonlocal", "msd_local"])?;
    let mut events: Vec<u64> = res.nonlocal.msd.iter().chain(&res.local.msd).map(|p| p.0).collect();
    events.sort_unstable();
    events.dedup();
    let find = |series: &[(u64, f64)], e: u64| series.iter().find(|p| p.0 == e).map(|p| num(p.1)).unwrap_or_default();
    for e in events {
        msd.row(&[e.to_string(), find(&res.nonlocal.msd, e), find(&res.local.msd, e)])?;
    }
    out.csv("msd.csv", msd)?;
    let report = Figure1Report {
        n,
        start: res.start[..2].to_vec(),
        seed: res.seed,
        events: fig.run.events,
        rates: res.rates,
        mode: res.mode,
        gaussian_variance: fig.variance,
        gaussian_radius: fig.radius,
        msd_ratio: res.msd_ratio(),
        distinct_ratio: res.distinct_ratio(),
        nonlocal: (&res.nonlocal).into(),
        local: (&res.local).into(),
    };
    out.json("figure1.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub space: String,
    pub condition: String,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub r0m: Option<f64>,
    pub label: String,
    pub expected: String,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub condition: String,
    pub beta: f64,
    pub gamma: f64,
    pub same_site: Asymptote,
    pub pair: Asymptote,
    pub expected_same_site: Asymptote,
    pub expected_pair: Asymptote,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    pub row: usize,
    pub condition: String,
    pub feasible: bool,
    pub kappa: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub matched_row: Option<usize>,
    pub same_site: Option<Asymptote>,
    pub pair: Option<Asymptote>,
    pub expected_same_site: Asymptote,
    pub expected_pair: Asymptote,
    pub agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table5Row {
    pub space: Space,
    pub condition: String,
    pub beta: f64,
    pub gamma: f64,
    pub label: LimitLabel,
    pub expected: LimitLabel,
    pub agrees: bool,
    pub witness_growth: f64,
    pub limit_same_site: Option<f64>,
    pub limit_pair: Option<f64>,
    pub lattice_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablesReport {
    pub kernel: String,
    pub table2: Vec<Table2Row>,
    pub table3: Vec<Table3Row>,
    pub table4: Vec<Table4Row>,
    pub table5: Vec<Table5Row>,
    pub sweep_points: usize,
}

fn condition_text(row: &latticesir::second_moments::InhomogeneousRow) -> String {
    use latticesir::second_moments::{RateCombination, SignCondition};
    let sign = |s: SignCondition| match s {
        SignCondition::Negative => "< 0",
        SignCondition::Zero => "= 0",
        SignCondition::Positive => "> 0",
        SignCondition::NonPositive => "<= 0",
    };
    let (comb, exp) = match row.combination {
        RateCombination::Difference => ("beta - gamma", "theta"),
        RateCombination::Sum => ("beta + gamma", "mu"),
    };
    format!("{comb} {}, alpha {}, {exp} {}", sign(row.combination_sign), sign(row.alpha), sign(row.exponent))
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_label<T: Serialize>(x: &Option<T>) -> String {
    x.as_ref().map(label).unwrap_or_default()
}

pub fn tables(out: &mut Outputs) -> CliResult<TablesReport> {
    let k = kernel_nearest_neighbor(1)?;
    let rates = |kappa: f64, beta: f64, gamma: f64| Rates::new(kappa, beta, gamma, 1.0);

    let mut table2 = Vec::new();
    let inhomogeneous = [
        ("theta < 0", (1.0, 0.4, 0.6, PI / 2.0), FirstMomentLabel::Vanish),
        ("theta = 0", (1.0, 0.5, 0.5, 0.0), FirstMomentLabel::SteadyDelta),
        ("alpha = 0, theta > 0", (0.0, 0.6, 0.4, PI / 2.0), FirstMomentLabel::GrowOriginOnly),
        ("alpha < 0, theta > 0", (0.1, 0.6, 0.4, PI / 2.0), FirstMomentLabel::GrowEverywhere),
    ];
    for (condition, (kappa, beta, gamma, kx), want) in inhomogeneous {
        let r = classify_first_moment(&k, &rates(kappa, beta, gamma)?, &[kx])?;
        table2.push(Table2Row {
            space: "inhomogeneous".into(),
            condition: condition.into(),
            kappa,
            beta,
            gamma,
            k: Some(kx),
            alpha: Some(r.alpha),
            theta: Some(r.theta),
            r0m: Some(r.r0m),
            label: r.label.as_str().into(),
            expected: want.as_str().into(),
            agrees: r.label == want,
        });
    }
    let homogeneous = [
        ("beta < gamma", (0.4, 0.6), HomogeneousLabel::Vanish),
        ("beta = gamma", (0.5, 0.5), HomogeneousLabel::SteadyState),
        ("beta > gamma", (0.6, 0.4), HomogeneousLabel::Grow),
    ];
    for (condition, (beta, gamma), want) in homogeneous {
        let got = classify_first_moment_homogeneous(&rates(0.0, beta, gamma)?);
        table2.push(Table2Row {
            space: "homogeneous".into(),
            condition: condition.into(),
            kappa: 0.0,
            beta,
            gamma,
            k: None,
            alpha: None,
            theta: None,
            r0m: None,
            label: label(&got),
            expected: label(&want),
            agrees: got == want,
        });
    }

    let mut table3 = Vec::new();
    for (condition, (beta, gamma), (es, ep)) in [
        ("beta > gamma", (0.6, 0.4), (Asymptote::Infinite, Asymptote::Infinite)),
        ("beta < gamma", (0.4, 0.6), (Asymptote::Zero, Asymptote::Zero)),
        ("beta = gamma", (0.5, 0.5), (Asymptote::Infinite, Asymptote::Zero)),
    ] {
        let s = classify_second_moment(&k, &rates(1.0, beta, gamma)?, &[0.0])?;
        table3.push(Table3Row {
            condition: condition.into(),
            beta,
            gamma,
            same_site: s.homogeneous_same_site,
            pair: s.homogeneous_pair,
            expected_same_site: es,
            expected_pair: ep,
            agrees: (s.homogeneous_same_site, s.homogeneous_pair) == (es, ep),
        });
    }

    // Representative parameters per row; rows 3 and 4 need beta + gamma < 0.
    let representatives: [Option<(f64, f64, f64, f64)>; 6] = [
        Some((1.0, 0.5, 0.5, PI / 2.0)),
        Some((1.0, 0.5, 0.5, 0.0)),
        None,
        None,
        Some((1.0, 0.1, 0.2, PI)),
        Some((1.0, 0.6, 0.4, 0.0)),
    ];
    let mut table4 = Vec::new();
    for (i, (row, rep)) in INHOMOGENEOUS_ROWS.iter().zip(representatives).enumerate() {
        let mut entry = Table4Row {
            row: i + 1,
            condition: condition_text(row),
            feasible: row.feasible,
            kappa: None,
            beta: None,
            gamma: None,
            k: None,
            alpha: None,
            theta: None,
            mu: None,
            matched_row: None,
            same_site: None,
            pair: None,
            expected_same_site: row.same_site,
            expected_pair: row.pair,
            agrees: None,
        };
        if let Some((kappa, beta, gamma, kx)) = rep {
            let s = classify_second_moment(&k, &rates(kappa, beta, gamma)?, &[kx])?;
            entry.kappa = Some(kappa);
            entry.beta = Some(beta);
            entry.gamma = Some(gamma);
            entry.k = Some(kx);
            entry.alpha = Some(s.alpha);
            entry.theta = Some(s.theta);
            entry.mu = Some(s.mu);
            entry.matched_row = s.inhomogeneous_row;
            entry.same_site = s.inhomogeneous_same_site;
            entry.pair = s.inhomogeneous_pair;
            entry.agrees = Some(
                s.inhomogeneous_row == Some(i + 1)
                    && s.inhomogeneous_same_site == Some(row.same_site)
                    && s.inhomogeneous_pair == Some(row.pair),
            );
        }
        table4.push(entry);
    }

    let mut table5 = Vec::new();
    for (space, condition, beta, gamma, want) in [
        (Space::Inhomogeneous, "beta < gamma", 0.4, 0.6, LimitLabel::Intermittent),
        (Space::Inhomogeneous, "beta = gamma", 0.5, 0.5, LimitLabel::Intermittent),
        (Space::Inhomogeneous, "beta > gamma", 0.6, 0.4, LimitLabel::Intermittent),
        (Space::Homogeneous, "beta <= gamma", 0.4, 0.6, LimitLabel::Intermittent),
        (Space::Homogeneous, "beta <= gamma", 0.5, 0.5, LimitLabel::Intermittent),
        (Space::Homogeneous, "beta > gamma", 0.6, 0.4, LimitLabel::Bounded),
    ] {
        let rep = classify_intermittency(&rates(1.0, beta, gamma)?, &k, space)?;
        table5.push(Table5Row {
            space,
            condition: condition.into(),
            beta,
            gamma,
            label: rep.limit_label,
            expected: want,
            agrees: rep.limit_label == want,
            witness_growth: rep.witness_growth,
            limit_same_site: rep.limit_value,
            limit_pair: rep.pair_limit_value,
            lattice_n: rep.lattice_n,
        });
    }

    // Sweep over rates and grid frequencies.
    let grid = [0.0, 0.1, 0.2, 0.4, 0.5, 0.6, 1.0];
    let ks: Vec<f64> = (0..8).map(|j| -PI + 2.0 * PI * j as f64 / 8.0).collect();
    let mut sweep = Table::new(&[
        "kappa",
        "beta",
        "gamma",
        "k",
        "alpha",
        "theta",
        "mu",
        "r0m",
        "first_moment",
        "inhomogeneous_row",
        "inhomogeneous_same_site",
        "inhomogeneous_pair",
        "homogeneous_same_site",
        "homogeneous_pair",
    ])?;
    let mut points = 0;
    for kappa in [0.0, 0.5, 1.0] {
        for &beta in &grid {
            for &gamma in &grid[1..] {
                let r = rates(kappa, beta, gamma)?;
                for &kx in &ks {
                    let f = classify_first_moment(&k, &r, &[kx])?;
                    let s = classify_second_moment(&k, &r, &[kx])?;
                    sweep.row(&[
                        num(kappa),
                        num(beta),
                        num(gamma),
                        num(kx),
                        num(f.alpha),
                        num(f.theta),
                        num(f.mu),
                        num(f.r0m),
                        f.label.as_str().to_string(),
                        s.inhomogeneous_row.map(|v| v.to_string()).unwrap_or_default(),
                        opt_label(&s.inhomogeneous_same_site),
                        opt_label(&s.inhomogeneous_pair),
                        label(&s.homogeneous_same_site),
                        label(&s.homogeneous_pair),
                    ])?;
                    points += 1;
                }
            }
        }
    }

    let mut t2 = Table::new(&[
        "space",
        "condition",
        "kappa",
        "beta",
        "gamma",
        "k",
        "alpha",
        "theta",
        "r0m",
        "label",
        "expected",
        "agrees",
    ])?;
    for r in &table2 {
        t2.row(&[
            r.space.clone(),
            r.condition.clone(),
            num(r.kappa),
            num(r.beta),
            num(r.gamma),
            opt(r.k),
            opt(r.alpha),
            opt(r.theta),
            opt(r.r0m),
            r.label.clone(),
            r.expected.clone(),
            r.agrees.to_string(),
        ])?;
    }
    let mut t3 = Table::new(&[
        "condition",
        "beta",
        "gamma",
        "same_site",
        "pair",
        "expected_same_site",
        "expected_pair",
        "agrees",
    ])?;
    for r in &table3 {
        t3.row(&[
            r.condition.clone(),
            num(r.beta),
            num(r.gamma),
            label(&r.same_site),
            label(&r.pair),
            label(&r.expected_same_site),
            label(&r.expected_pair),
            r.agrees.to_string(),
        ])?;
    }
    let mut t4 = Table::new(&[
        "row",
        "condition",
        "feasible",
        "kappa",
        "beta",
        "gamma",
        "k",
        "alpha",
        "theta",
        "mu",
        "matched_row",
        "same_site",
        "pair",
        "expected_same_site",
        "expected_pair",
        "agrees",
    ])?;
    for r in &table4 {
        let status = |x: Option<Asymptote>| if r.feasible { opt_label(&x) } else { "infeasible".to_string() };
        t4.row(&[
            r.row.to_string(),
            r.condition.clone(),
            r.feasible.to_string(),
            opt(r.kappa),
            opt(r.beta),
            opt(r.gamma),
            opt(r.k),
            opt(r.alpha),
            opt(r.theta),
            opt(r.mu),
            r.matched_row.map(|v| v.to_string()).unwrap_or_default(),
            status(r.same_site),
            status(r.pair),
            label(&r.expected_same_site),
            label(&r.expected_pair),
            r.agrees.map(|b| b.to_string()).unwrap_or_else(|| "infeasible".into()),
        ])?;
    }
    let mut t5 = Table::new(&[
        "space",
        "condition",
        "beta",
        "gamma",
        "label",
        "expected",
        "agrees",
        "witness_growth",
        "limit_same_site",
        "limit_pair",
        "lattice_n",
    ])?;
    for r in &table5 {
        t5.row(&[
            label(&r.space),
            r.condition.clone(),
            num(r.beta),
            num(r.gamma),
            label(&r.label),
            label(&r.expected),
            r.agrees.to_string(),
            num(r.witness_growth),
            opt(r.limit_same_site),
            opt(r.limit_pair),
            r.lattice_n.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.csv("table2.csv", t2)?;
    out.csv("table3.csv", t3)?;
    out.csv("table4.csv", t4)?;
    out.csv("table5.csv", t5)?;
    out.csv("sweep.csv", sweep)?;
    let report = TablesReport {
        kernel: "nearest_neighbor, d = 1, kappa = 1 unless stated".into(),
        table2,
        table3,
        table4,
        table5,
        sweep_points: points,
    };
    out.json("tables.json", &report)?;
    Ok(report)
}
