//! Exact event simulation of the lattice SIR system and Monte Carlo moments.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::first_moments::{Compartment, Rates};
use crate::kernel::MobilityKernel;
use crate::lattice::{Coord, LatticeSpec};
use crate::summation::Neumaier;

/// Default cap on events per run.
pub const DEFAULT_EVENT_BUDGET: u64 = 100_000_000;
/// Fewest replicas accepted by [`mc_moments`].
pub const MIN_REPLICAS: usize = 100;
/// Events between full rebuilds of the rate tree.
const REBUILD_INTERVAL: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Infection fires at rate `beta I(x)` whatever `S(x)` is.
    #[default]
    Linear,
    /// Infection is suppressed at sites with no susceptible.
    Clamped,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Linear => "linear",
            Mode::Clamped => "clamped",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Event {
    Migration { compartment: Compartment, from: usize, to: usize },
    Infection { site: usize },
    Recovery { site: usize },
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub lattice: LatticeSpec,
    pub s: Vec<i64>,
    pub i: Vec<i64>,
    pub r: Vec<i64>,
    pub clock: f64,
    pub events: u64,
    pub rng: ChaCha8Rng,
}

impl SimState {
    pub fn population(&self) -> i64 {
        self.s.iter().chain(&self.i).chain(&self.r).sum()
    }

    pub fn total(&self, c: Compartment) -> i64 {
        self.counts(c).iter().sum()
    }

    pub fn counts(&self, c: Compartment) -> &[i64] {
        match c {
            Compartment::S => &self.s,
            Compartment::I => &self.i,
            Compartment::R => &self.r,
        }
    }

    fn counts_mut(&mut self, c: Compartment) -> &mut [i64] {
        match c {
            Compartment::S => &mut self.s,
            Compartment::I => &mut self.i,
            Compartment::R => &mut self.r,
        }
    }

    /// Copy without the generator, for trajectories.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot { clock: self.clock, events: self.events, s: self.s.clone(), i: self.i.clone(), r: self.r.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub clock: f64,
    pub events: u64,
    pub s: Vec<i64>,
    pub i: Vec<i64>,
    pub r: Vec<i64>,
}

/// `S = rho0` everywhere, one infected at the origin.
pub fn init_state(lattice: &LatticeSpec, rates: &Rates, seed: u64) -> Result<SimState> {
    init_state_with_density(lattice, rates.rho0, seed)
}

/// As [`init_state`] with an explicit density, which may be zero.
pub fn init_state_with_density(lattice: &LatticeSpec, rho0: f64, seed: u64) -> Result<SimState> {
    if !(rho0 >= 0.0 && rho0.fract() == 0.0 && rho0 <= i64::MAX as f64) {
        return Err(Error::NonIntegerDensity(rho0));
    }
    let n = lattice.sites();
    let mut i = vec![0; n];
    i[0] = 1;
    Ok(SimState {
        lattice: lattice.clone(),
        s: vec![rho0 as i64; n],
        i,
        r: vec![0; n],
        clock: 0.0,
        events: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

/// Prefix sums over per-site rates.
#[derive(Clone, Debug)]
struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    fn new(values: Vec<f64>) -> Self {
        let mut f = Fenwick { tree: vec![0.0; values.len() + 1], values };
        f.rebuild();
        f
    }

    fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.iter_mut().for_each(|v| *v = 0.0);
        for k in 1..=n {
            self.tree[k] += self.values[k - 1];
            let parent = k + (k & k.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[k];
            }
        }
    }

    fn set(&mut self, idx: usize, value: f64) {
        let delta = value - self.values[idx];
        if delta == 0.0 {
            return;
        }
        self.values[idx] = value;
        let mut k = idx + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.values.len();
        let mut acc = 0.0;
        while k > 0 {
            acc += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        acc
    }

    /// Site whose cumulative interval contains `u`, with the offset into it.
    fn find(&self, mut u: f64) -> (usize, f64) {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        // Roundoff can push past the last positive rate.
        let mut idx = pos.min(n - 1);
        while self.values[idx] <= 0.0 && idx > 0 {
            idx -= 1;
            u = self.values[idx];
        }
        (idx, u.min(self.values[idx]))
    }
}

/// Event sampler bound to one kernel, rate set and mode.
#[derive(Clone, Debug)]
pub struct Dynamics {
    rates: Rates,
    mode: Mode,
    offsets: Vec<Coord>,
    jumps: WeightedIndex<f64>,
}

impl Dynamics {
    pub fn new(kernel: &MobilityKernel, rates: &Rates, mode: Mode) -> Result<Self> {
        let offsets: Vec<Coord> = kernel.support().iter().map(|(z, _)| *z).collect();
        let jumps = WeightedIndex::new(kernel.support().iter().map(|(_, w)| *w))
            .map_err(|e| Error::InvalidArgument(format!("kernel weights: {e}")))?;
        Ok(Dynamics { rates: *rates, mode, offsets, jumps })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn infection_rate(&self, s: i64, i: i64) -> f64 {
        match self.mode {
            Mode::Clamped if s <= 0 => 0.0,
            _ => self.rates.beta * i as f64,
        }
    }

    fn site_rate(&self, st: &SimState, x: usize) -> f64 {
        let (s, i, r) = (st.s[x], st.i[x], st.r[x]);
        let k = self.rates.kappa;
        k * (s.unsigned_abs() + i as u64 + r as u64) as f64 + self.infection_rate(s, i) + self.rates.gamma * i as f64
    }
}

/// A state together with its rate tree.
pub struct Simulation {
    pub state: SimState,
    dynamics: Dynamics,
    tree: Fenwick,
    since_rebuild: u64,
}

impl Simulation {
    pub fn new(state: SimState, dynamics: Dynamics) -> Self {
        let rates = (0..state.lattice.sites()).map(|x| dynamics.site_rate(&state, x)).collect();
        Simulation { state, dynamics, tree: Fenwick::new(rates), since_rebuild: 0 }
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    fn refresh(&mut self, x: usize) {
        let r = self.dynamics.site_rate(&self.state, x);
        self.tree.set(x, r);
    }

    /// Waiting time to the next event; `Extinct` if nothing can happen.
    fn waiting_time(&mut self) -> Result<f64> {
        let total = self.tree.total();
        if !(total > 0.0) {
            return Err(Error::Extinct);
        }
        let e: f64 = self.state.rng.sample(Exp1);
        Ok(e / total)
    }

    /// Chooses and applies one event, without advancing the clock.
    fn fire(&mut self) -> Event {
        let total = self.tree.total();
        let u = self.state.rng.random::<f64>() * total;
        let (x, mut w) = self.tree.find(u);
        let st = &self.state;
        let d = &self.dynamics;
        let k = d.rates.kappa;
        let (s, i, r) = (st.s[x], st.i[x], st.r[x]);
        let parts = [
            (k * s.unsigned_abs() as f64, 0u8),
            (k * i as f64, 1),
            (k * r as f64, 2),
            (d.infection_rate(s, i), 3),
            (d.rates.gamma * i as f64, 4),
        ];
        let mut kind = parts.iter().rev().find(|p| p.0 > 0.0).map(|p| p.1).unwrap_or(1);
        for &(rate, tag) in &parts {
            if rate > 0.0 && w < rate {
                kind = tag;
                break;
            }
            w -= rate;
        }
        let event = match kind {
            0..=2 => {
                let c = [Compartment::S, Compartment::I, Compartment::R][kind as usize];
                let z = self.dynamics.offsets[self.dynamics.jumps.sample(&mut self.state.rng)];
                let to = self.state.lattice.shift(x, &z);
                let unit = if c == Compartment::S { s.signum() } else { 1 };
                let counts = self.state.counts_mut(c);
                counts[x] -= unit;
                counts[to] += unit;
                Event::Migration { compartment: c, from: x, to }
            }
            3 => {
                self.state.s[x] -= 1;
                self.state.i[x] += 1;
                Event::Infection { site: x }
            }
            _ => {
                self.state.i[x] -= 1;
                self.state.r[x] += 1;
                Event::Recovery { site: x }
            }
        };
        self.refresh(x);
        if let Event::Migration { to, .. } = event {
            self.refresh(to);
        }
        self.state.events += 1;
        self.since_rebuild += 1;
        if self.since_rebuild >= REBUILD_INTERVAL {
            self.tree.rebuild();
            self.since_rebuild = 0;
        }
        event
    }

    /// One exact event: returns the event and its waiting time.
    pub fn step(&mut self) -> Result<(Event, f64)> {
        let dt = self.waiting_time()?;
        let ev = self.fire();
        self.state.clock += dt;
        Ok((ev, dt))
    }

    /// Advances to `horizon`, recording the state in force at each snapshot time.
    pub fn run(&mut self, horizon: f64, snapshot_times: &[f64], budget: u64) -> Result<Vec<Snapshot>> {
        if snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("snapshot times must be sorted".into()));
        }
        if snapshot_times.last().is_some_and(|&t| t > horizon) {
            return Err(Error::InvalidArgument("snapshot times must not exceed the horizon".into()));
        }
        let mut out = Vec::with_capacity(snapshot_times.len());
        let mut pending = snapshot_times.iter().copied().peekable();
        let start = self.state.events;
        loop {
            let dt = match self.waiting_time() {
                Ok(dt) => dt,
                Err(Error::Extinct) => break,
                Err(e) => return Err(e),
            };
            let next = self.state.clock + dt;
            while pending.next_if(|&t| t < next).is_some() {
                out.push(self.state.snapshot());
            }
            if next > horizon {
                break;
            }
            if self.state.events - start >= budget {
                return Err(Error::EventBudgetExceeded(budget));
            }
            self.fire();
            self.state.clock = next;
        }
        out.extend(pending.map(|_| self.state.snapshot()));
        self.state.clock = self.state.clock.max(horizon);
        Ok(out)
    }
}

/// Single event on a copy of `state`.
pub fn step(state: &SimState, rates: &Rates, kernel: &MobilityKernel, mode: Mode) -> Result<(SimState, f64)> {
    let mut sim = Simulation::new(state.clone(), Dynamics::new(kernel, rates, mode)?);
    let (_, dt) = sim.step()?;
    Ok((sim.state, dt))
}

/// Runs `state` to `horizon` and returns the snapshots, the first being the
/// initial state.
pub fn run(
    state: SimState,
    rates: &Rates,
    kernel: &MobilityKernel,
    mode: Mode,
    horizon: f64,
    snapshot_times: &[f64],
    budget: u64,
) -> Result<Vec<Snapshot>> {
    if !(horizon >= 0.0) {
        return Err(Error::NegativeTime(horizon));
    }
    let mut sim = Simulation::new(state, Dynamics::new(kernel, rates, mode)?);
    let mut out = vec![sim.state.snapshot()];
    out.extend(sim.run(horizon, snapshot_times, budget)?);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Quantity {
    /// `E[C(t, site)]`.
    FirstMoment { compartment: Compartment, site: Coord },
    /// `E[I(t, x) I(t, y)]`.
    InfectedPair { x: Coord, y: Coord },
}

impl Quantity {
    pub fn tag(&self) -> String {
        let fmt = |c: &Coord| format!("{},{},{}", c[0], c[1], c[2]);
        match self {
            Quantity::FirstMoment { compartment, site } => format!("m1_{compartment:?}({})", fmt(site)),
            Quantity::InfectedPair { x, y } => format!("m2_II({};{})", fmt(x), fmt(y)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub quantity: Quantity,
    pub mean: f64,
    pub standard_error: f64,
    pub replicas: usize,
    pub seed_base: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub t: f64,
    pub replicas: usize,
    pub seed_base: u64,
    pub mode: Mode,
    pub quantities: Vec<Quantity>,
    pub event_budget: u64,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    /// `E[S], E[I], E[R]` at the origin and `E[I(0)^2]`.
    pub fn origin(t: f64, replicas: usize, seed_base: u64) -> Self {
        let o = [0, 0, 0];
        McConfig {
            t,
            replicas,
            seed_base,
            mode: Mode::Linear,
            quantities: vec![
                Quantity::FirstMoment { compartment: Compartment::S, site: o },
                Quantity::FirstMoment { compartment: Compartment::I, site: o },
                Quantity::FirstMoment { compartment: Compartment::R, site: o },
                Quantity::InfectedPair { x: o, y: o },
            ],
            event_budget: DEFAULT_EVENT_BUDGET,
            threads: None,
        }
    }
}

fn observe(lattice: &LatticeSpec, snap: &Snapshot, q: &Quantity) -> f64 {
    match q {
        Quantity::FirstMoment { compartment, site } => {
            let x = lattice.index(site);
            (match compartment {
                Compartment::S => snap.s[x],
                Compartment::I => snap.i[x],
                Compartment::R => snap.r[x],
            }) as f64
        }
        Quantity::InfectedPair { x, y } => (snap.i[lattice.index(x)] * snap.i[lattice.index(y)]) as f64,
    }
}

/// Independent replicas seeded `seed_base + i`, reduced in replica order.
pub fn mc_moments(
    lattice: &LatticeSpec,
    rates: &Rates,
    kernel: &MobilityKernel,
    config: &McConfig,
) -> Result<Vec<McEstimate>> {
    if config.replicas < MIN_REPLICAS {
        return Err(Error::InvalidArgument(format!(
            "replicas = {} is below the minimum of {MIN_REPLICAS}",
            config.replicas
        )));
    }
    if !(config.t >= 0.0) {
        return Err(Error::NegativeTime(config.t));
    }
    let dynamics = Dynamics::new(kernel, rates, config.mode)?;
    let one = |i: usize| -> Result<Vec<f64>> {
        let state = init_state(lattice, rates, config.seed_base.wrapping_add(i as u64))?;
        let mut sim = Simulation::new(state, dynamics.clone());
        let snap = sim.run(config.t, &[config.t], config.event_budget)?.remove(0);
        Ok(config.quantities.iter().map(|q| observe(lattice, &snap, q)).collect())
    };
    let samples: Vec<Vec<f64>> = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| (0..config.replicas).into_par_iter().map(one).collect::<Result<_>>())?,
        None => (0..config.replicas).into_par_iter().map(one).collect::<Result<_>>()?,
    };
    let r = config.replicas as f64;
    Ok(config
        .quantities
        .iter()
        .enumerate()
        .map(|(q, quantity)| {
            let mut sum = Neumaier::default();
            samples.iter().for_each(|s| sum.add(s[q]));
            let mean = sum.value() / r;
            let mut sq = Neumaier::default();
            samples.iter().for_each(|s| sq.add((s[q] - mean).powi(2)));
            let sd = (sq.value() / (r - 1.0)).sqrt();
            McEstimate {
                quantity: quantity.clone(),
                mean,
                standard_error: sd / r.sqrt(),
                replicas: config.replicas,
                seed_base: config.seed_base,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadRun {
    /// Arrivals of infected individuals per site, row-major, starting site included.
    pub occupancy: Vec<u64>,
    /// `(events, mean squared displacement of the infected from the start)`.
    pub msd: Vec<(u64, f64)>,
    pub distinct_sites: usize,
    pub final_msd: f64,
    pub events: u64,
    pub clock: f64,
    pub extinct: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Result {
    pub n: usize,
    /// Zero-based start coordinates.
    pub start: Coord,
    pub rates: Rates,
    pub mode: Mode,
    pub seed: u64,
    pub nonlocal: SpreadRun,
    pub local: SpreadRun,
}

impl Figure1Result {
    pub fn msd_ratio(&self) -> f64 {
        self.nonlocal.final_msd / self.local.final_msd
    }

    pub fn distinct_ratio(&self) -> f64 {
        self.nonlocal.distinct_sites as f64 / self.local.distinct_sites as f64
    }
}

/// Settings of the local versus nonlocal spread comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Config {
    pub n: usize,
    pub events: u64,
    pub seed: u64,
    pub rates: Rates,
    pub mode: Mode,
    /// Events between MSD samples.
    pub msd_stride: u64,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config {
            n: 51,
            events: 50_000,
            seed: 1,
            rates: Rates { kappa: 1.0, beta: 2.0, gamma: 0.05, rho0: 1.0 },
            mode: Mode::Clamped,
            msd_stride: 500,
        }
    }
}

fn spread_run(kernel: &MobilityKernel, cfg: &Figure1Config, start: usize) -> Result<SpreadRun> {
    let lattice = LatticeSpec::new(2, cfg.n)?;
    let mut state = init_state(&lattice, &cfg.rates, cfg.seed)?;
    state.i[0] = 0;
    state.i[start] = 1;
    let mut sim = Simulation::new(state, Dynamics::new(kernel, &cfg.rates, cfg.mode)?);
    let n = lattice.sites();
    let dist2: Vec<f64> = (0..n).map(|x| lattice.torus_distance2(x, start) as f64).collect();
    let msd_of = |st: &SimState| {
        let total: i64 = st.i.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let mut acc = Neumaier::default();
        for (x, &c) in st.i.iter().enumerate() {
            if c != 0 {
                acc.add(c as f64 * dist2[x]);
            }
        }
        acc.value() / total as f64
    };
    let mut occupancy = vec![0u64; n];
    occupancy[start] = 1;
    let mut msd = vec![(0, 0.0)];
    let mut extinct = false;
    let mut last_msd = 0.0;
    for e in 1..=cfg.events {
        match sim.step() {
            Ok((ev, _)) => match ev {
                Event::Migration { compartment: Compartment::I, to, .. } => occupancy[to] += 1,
                Event::Infection { site } => occupancy[site] += 1,
                _ => {}
            },
            Err(Error::Extinct) => {
                extinct = true;
                break;
            }
            Err(err) => return Err(err),
        }
        if sim.state.i.iter().any(|&c| c > 0) {
            if e % cfg.msd_stride == 0 || e == cfg.events {
                last_msd = msd_of(&sim.state);
                msd.push((e, last_msd));
            }
        } else {
            extinct = true;
            break;
        }
    }
    Ok(SpreadRun {
        distinct_sites: occupancy.iter().filter(|&&c| c > 0).count(),
        occupancy,
        msd,
        final_msd: last_msd,
        events: sim.state.events,
        clock: sim.state.clock,
        extinct,
    })
}

/// Runs both kernels from one infected at the grid centre with the same seed.
pub fn figure1_experiment(
    nonlocal: &MobilityKernel,
    local: &MobilityKernel,
    cfg: &Figure1Config,
) -> Result<Figure1Result> {
    if nonlocal.d() != 2 || local.d() != 2 {
        return Err(Error::UnsupportedDimension(if nonlocal.d() != 2 { nonlocal.d() } else { local.d() }));
    }
    let lattice = LatticeSpec::new(2, cfg.n)?;
    let c = (cfg.n / 2) as i64;
    let start_coord = [c, c, 0];
    let start = lattice.index(&start_coord);
    Ok(Figure1Result {
        n: cfg.n,
        start: start_coord,
        rates: cfg.rates,
        mode: cfg.mode,
        seed: cfg.seed,
        nonlocal: spread_run(nonlocal, cfg, start)?,
        local: spread_run(local, cfg, start)?,
    })
}
