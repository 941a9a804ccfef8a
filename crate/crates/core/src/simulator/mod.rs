//! Run-by-run Monte Carlo of the query protocols.
//!
//! Each run samples its inputs, Charlie's answer, Alice's output and Bob's
//! output in protocol order. Branch probabilities come from the exact
//! quantum update in [`tree`]; randomness is a ChaCha8 stream keyed by
//! `(seed, run index)`, so counts do not depend on thread count or chunking.

pub mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value as Json};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quantum::{CMat, QuantumRealization, C64};
use crate::scenario::{Behavior, BellFunctional, Scenario};
pub use tree::{policy, policy_names, CollapsePolicy, Engine, QueryNode};

/// Branch weights below this fraction of their parent are treated as
/// numerical underflow: a run that lands on one is resampled.
pub const UNDERFLOW: f64 = 1e-15;
const CHUNK: u64 = 4096;
/// Significance level of the reduction check.
pub const REDUCTION_LEVEL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    /// "Yes" given without consulting the register.
    Forced,
}

/// How Charlie answers "is c = x?".
pub trait QueryDevice: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// `p_yes` is the normalised probability of "yes" on the current state.
    fn answer(&self, p_yes: f64, rng: &mut ChaCha8Rng) -> Answer;
}

struct Honest;
/// Says "yes" to the input query with probability [`FAULT_RATE`] regardless
/// of the register, so the reported `c` depends on `x`.
struct Faulty;

pub const FAULT_RATE: f64 = 0.2;

impl QueryDevice for Honest {
    fn name(&self) -> &'static str {
        "honest"
    }
    fn description(&self) -> &'static str {
        "answers from the device register"
    }
    fn answer(&self, p_yes: f64, rng: &mut ChaCha8Rng) -> Answer {
        if rng.random::<f64>() < p_yes {
            Answer::Yes
        } else {
            Answer::No
        }
    }
}

impl QueryDevice for Faulty {
    fn name(&self) -> &'static str {
        "faulty"
    }
    fn description(&self) -> &'static str {
        "answers yes to the input query with probability 0.2 without looking"
    }
    fn answer(&self, p_yes: f64, rng: &mut ChaCha8Rng) -> Answer {
        if rng.random::<f64>() < FAULT_RATE {
            Answer::Forced
        } else {
            Honest.answer(p_yes, rng)
        }
    }
}

static DEVICES: [&dyn QueryDevice; 2] = [&Honest, &Faulty];

pub fn device(name: &str) -> Result<&'static dyn QueryDevice> {
    DEVICES
        .iter()
        .copied()
        .find(|d| d.name() == name)
        .ok_or_else(|| Error::unknown("device", name, &device_names()))
}

pub fn device_names() -> Vec<&'static str> {
    DEVICES.iter().map(|d| d.name()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Protocol {
    Main,
    /// Alice first asks "is c = t?" for a random `t`; `None` never asks.
    Two { t_distribution: Option<Vec<f64>> },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Main => "main",
            Protocol::Two { .. } => "protocol2",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Name echoed into outputs (usually the preset name).
    pub label: String,
    pub realization: QuantumRealization,
    pub runs: u64,
    pub seed: u64,
    pub policy: String,
    pub device: String,
    pub protocol: Protocol,
    /// `None` is uniform.
    pub x_distribution: Option<Vec<f64>>,
    pub y_distribution: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(label: &str, realization: QuantumRealization, runs: u64, seed: u64) -> Self {
        RunConfig {
            label: label.to_string(),
            realization,
            runs,
            seed,
            policy: "lueders".into(),
            device: "honest".into(),
            protocol: Protocol::Main,
            x_distribution: None,
            y_distribution: None,
        }
    }

    pub fn with_policy(mut self, policy: &str) -> Self {
        self.policy = policy.to_string();
        self
    }

    pub fn with_device(mut self, device: &str) -> Self {
        self.device = device.to_string();
        self
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol = protocol;
        self
    }

    pub fn to_json(&self) -> Json {
        let t = match &self.protocol {
            Protocol::Main => Json::Null,
            Protocol::Two { t_distribution: None } => json!("never"),
            Protocol::Two { t_distribution: Some(d) } => json!(d),
        };
        json!({
            "realization": self.label,
            "runs": self.runs,
            "seed": self.seed,
            "policy": self.policy,
            "device": self.device,
            "protocol": self.protocol.name(),
            "x_distribution": self.x_distribution,
            "y_distribution": self.y_distribution,
            "t_distribution": t,
        })
    }
}

fn distribution(d: &Option<Vec<f64>>, n: usize, what: &str) -> Result<Vec<f64>> {
    match d {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(v) => {
            let sum: f64 = v.iter().sum();
            if v.len() != n || v.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "{what} distribution must have {n} nonnegative entries summing to 1"
                )));
            }
            Ok(v.clone())
        }
    }
}

/// Label of the protocol-II stratum: the `t` asked and whether `c = t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub t: usize,
    pub c_is_t: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunCounts {
    pub scenario: Scenario,
    /// Empty for unstratified runs; otherwise one table per stratum.
    pub strata: Vec<Stratum>,
    /// `tables[s][scenario.index(a,b,x,y)]`.
    pub tables: Vec<Vec<u64>>,
    pub runs: u64,
    /// Runs drawn again after landing on an underflowed branch.
    pub resampled: u64,
}

impl RunCounts {
    fn empty(scenario: Scenario, strata: Vec<Stratum>) -> Self {
        let n = strata.len().max(1);
        RunCounts {
            scenario,
            strata,
            tables: vec![vec![0; scenario.dim()]; n],
            runs: 0,
            resampled: 0,
        }
    }

    fn merge(mut self, other: RunCounts) -> Self {
        for (t, o) in self.tables.iter_mut().zip(&other.tables) {
            for (a, b) in t.iter_mut().zip(o) {
                *a += b;
            }
        }
        self.runs += other.runs;
        self.resampled += other.resampled;
        self
    }

    /// Counts summed over strata.
    pub fn aggregate(&self) -> Vec<u64> {
        let mut out = vec![0; self.scenario.dim()];
        for t in &self.tables {
            for (a, b) in out.iter_mut().zip(t) {
                *a += b;
            }
        }
        out
    }

    pub fn stratum(&self, t: usize, c_is_t: bool) -> Option<&[u64]> {
        self.strata
            .iter()
            .position(|s| s.t == t && s.c_is_t == c_is_t)
            .map(|i| self.tables[i].as_slice())
    }

    pub fn total(&self) -> u64 {
        self.tables.iter().flatten().sum()
    }

    pub fn to_json(&self, config: &RunConfig) -> Json {
        let s = &self.scenario;
        let table_json = |t: &[u64]| -> Vec<Json> {
            s.entries()
                .zip(t)
                .filter(|(_, n)| **n > 0)
                .map(|(e, n)| json!({"a": e.a, "b": e.b, "x": e.x, "y": e.y, "n": n}))
                .collect()
        };
        let strata: Vec<Json> = if self.strata.is_empty() {
            vec![json!({"counts": table_json(&self.tables[0])})]
        } else {
            self.strata
                .iter()
                .zip(&self.tables)
                .map(|(st, t)| json!({"t": st.t, "c_is_t": st.c_is_t, "counts": table_json(t)}))
                .collect()
        };
        json!({
            "version": crate::schema::VERSION,
            "kind": "run-counts",
            "config": config.to_json(),
            "scenario": crate::schema::scenario_json(s),
            "runs": self.runs,
            "resampled": self.resampled,
            "strata": strata,
        })
    }
}

/// Index drawn with probability `weights[i] / total`; `None` if the drawn
/// branch is an underflow.
fn pick(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> Option<usize> {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = Some(i);
        acc += w;
        if u < acc {
            return (w > UNDERFLOW * total).then_some(i);
        }
    }
    last.filter(|&i| weights[i] > UNDERFLOW * total)
}

/// Per-input branch tables of one stratum.
struct Stage {
    /// `nodes[x][y]`.
    nodes: Vec<Vec<QueryNode>>,
}

fn stage(engine: &Engine, rho: &CMat, s: &Scenario) -> Stage {
    Stage {
        nodes: (0..s.alice_inputs)
            .map(|x| (0..s.bob_inputs).map(|y| engine.query(rho, x, y)).collect())
            .collect(),
    }
}

struct Plan {
    scenario: Scenario,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `None`: no `t` query. Otherwise `(t distribution, per t: [(weight, stage) for c≠t, c=t])`.
    t: Option<(Vec<f64>, Vec<[(f64, Stage); 2]>)>,
    main: Option<Stage>,
    device: &'static dyn QueryDevice,
}

fn plan(cfg: &RunConfig) -> Result<Plan> {
    let r = &cfg.realization;
    let s = r.scenario();
    let engine = Engine::new(r)?;
    let pol = policy(&cfg.policy)?;
    let dev = device(&cfg.device)?;
    let x = distribution(&cfg.x_distribution, s.alice_inputs, "x")?;
    let y = distribution(&cfg.y_distribution, s.bob_inputs, "y")?;
    let rho = engine.after_charlie(r.state(), pol);
    let (t, main) = match &cfg.protocol {
        Protocol::Main | Protocol::Two { t_distribution: None } => (None, Some(stage(&engine, &rho, &s))),
        Protocol::Two { t_distribution: Some(d) } => {
            let k = s.charlie_outputs;
            let td = distribution(&Some(d.clone()), k, "t")?;
            let per_t = (0..k)
                .map(|t| {
                    let rest: Vec<usize> = (0..k).filter(|&m| m != t).collect();
                    let no = engine.project_register(&rho, &rest);
                    let yes = engine.project_register(&rho, &[t]);
                    [
                        (no.trace().re.max(0.0), stage(&engine, &no, &s)),
                        (yes.trace().re.max(0.0), stage(&engine, &yes, &s)),
                    ]
                })
                .collect();
            (Some((td, per_t)), None)
        }
    };
    Ok(Plan {
        scenario: s,
        x,
        y,
        t,
        main,
        device: dev,
    })
}

/// One run: `(stratum index, table index)`, or `None` on underflow.
fn one_run(p: &Plan, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
    let s = &p.scenario;
    let (stratum, stage) = match &p.t {
        None => (0, p.main.as_ref().expect("unstratified plan")),
        Some((td, per_t)) => {
            let t = pick(td, 1.0, rng)?;
            let w = [per_t[t][0].0, per_t[t][1].0];
            let c_is_t = pick(&w, w[0] + w[1], rng)?;
            (2 * t + c_is_t, &per_t[t][c_is_t].1)
        }
    };
    let x = pick(&p.x, 1.0, rng)?;
    let y = pick(&p.y, 1.0, rng)?;
    let node = &stage.nodes[x][y];
    let (a, b) = match p.device.answer(node.p_yes / node.weight, rng) {
        Answer::Yes => (x, pick(&node.yes_bob, node.p_yes, rng)?),
        Answer::Forced => (x, pick(&node.bob_marginal, node.weight, rng)?),
        Answer::No => {
            let ab = pick(&node.no_ab, node.weight - node.p_yes, rng)?;
            (ab / s.bob_outputs, ab % s.bob_outputs)
        }
    };
    Some((stratum, s.index(a, b, x, y)))
}

/// Simulates `cfg.runs` runs. Deterministic in `(cfg, seed)`.
pub fn simulate_runs(cfg: &RunConfig) -> Result<RunCounts> {
    let p = plan(cfg)?;
    let s = p.scenario;
    let strata: Vec<Stratum> = match &p.t {
        None => vec![],
        Some(_) => (0..s.charlie_outputs)
            .flat_map(|t| [false, true].map(|c_is_t| Stratum { t, c_is_t }))
            .collect(),
    };
    let chunks = cfg.runs.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = RunCounts::empty(s, strata.clone());
            for run in c * CHUNK..((c + 1) * CHUNK).min(cfg.runs) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(run);
                loop {
                    match one_run(&p, &mut rng) {
                        Some((st, i)) => {
                            local.tables[st][i] += 1;
                            break;
                        }
                        None => local.resampled += 1,
                    }
                }
                local.runs += 1;
            }
            local
        })
        .reduce(|| RunCounts::empty(s, strata.clone()), RunCounts::merge);
    Ok(counts)
}

/// Exact behaviour the protocol samples from (inputs uniform, strata summed).
pub fn expected_behavior(cfg: &RunConfig) -> Result<Behavior> {
    let p = plan(cfg)?;
    let s = p.scenario;
    let mut v = vec![0.0; s.dim()];
    let mut add = |stage: &Stage, weight: f64| {
        for x in 0..s.alice_inputs {
            for y in 0..s.bob_inputs {
                let node = &stage.nodes[x][y];
                let forced = match p.device.name() {
                    "faulty" => FAULT_RATE,
                    _ => 0.0,
                };
                let scale = weight / node.weight;
                for b in 0..s.bob_outputs {
                    v[s.index(x, b, x, y)] += scale
                        * ((1.0 - forced) * node.yes_bob[b] + forced * node.bob_marginal[b]);
                    for a in 0..s.alice_outputs {
                        v[s.index(a, b, x, y)] += scale * (1.0 - forced) * node.no_ab[a * s.bob_outputs + b];
                    }
                }
            }
        }
    };
    match &p.t {
        None => add(p.main.as_ref().expect("unstratified plan"), 1.0),
        Some((td, per_t)) => {
            for (t, branches) in per_t.iter().enumerate() {
                for (w, st) in branches {
                    if *w > 0.0 {
                        add(st, td[t] * w);
                    }
                }
            }
        }
    }
    Behavior::float(s, v)
}

#[derive(Clone, Debug)]
pub struct Estimate {
    pub scenario: Scenario,
    /// Conditional frequency per entry; `None` where the `(x,y)` cell had no runs.
    pub frequencies: Vec<Option<f64>>,
    /// Binomial standard error `sqrt(p(1−p)/n)`.
    pub std_errors: Vec<Option<f64>>,
    /// `(x, y)` cells without runs.
    pub missing: Vec<(usize, usize)>,
    /// Runs per `(x, y)` cell, indexed `x * Y + y`.
    pub cell_runs: Vec<u64>,
}

impl Estimate {
    /// The estimated behaviour, if every cell has runs.
    pub fn behavior(&self) -> Option<Behavior> {
        let v: Option<Vec<f64>> = self.frequencies.iter().copied().collect();
        v.and_then(|v| Behavior::float(self.scenario, v).ok())
    }

    /// Value of `f` on the estimate with its standard error from independent
    /// multinomial cells.
    pub fn functional(&self, f: &BellFunctional) -> Option<(f64, f64)> {
        let s = &self.scenario;
        let coef: Vec<f64> = f.coefficients().iter().map(crate::rational::to_f64).collect();
        let mut value = crate::rational::to_f64(f.offset());
        let mut var = 0.0;
        for x in 0..s.alice_inputs {
            for y in 0..s.bob_inputs {
                let n = self.cell_runs[x * s.bob_inputs + y];
                let (mut m1, mut m2) = (0.0, 0.0);
                let mut used = false;
                for a in 0..s.alice_outputs {
                    for b in 0..s.bob_outputs {
                        let i = s.index(a, b, x, y);
                        if coef[i] != 0.0 {
                            used = true;
                        }
                        let p = self.frequencies[i].unwrap_or(0.0);
                        m1 += coef[i] * p;
                        m2 += coef[i] * coef[i] * p;
                    }
                }
                if used && n == 0 {
                    return None;
                }
                value += m1;
                if n > 0 {
                    var += (m2 - m1 * m1).max(0.0) / n as f64;
                }
            }
        }
        Some((value, var.sqrt()))
    }

    pub fn mean_std_error(&self) -> f64 {
        let v: Vec<f64> = self.std_errors.iter().flatten().copied().collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}

/// Frequencies conditioned per `(x,y)` cell of an arbitrary count table.
pub fn estimate_table(s: Scenario, counts: &[u64]) -> Estimate {
    let mut cell_runs = vec![0u64; s.alice_inputs * s.bob_inputs];
    for e in s.entries() {
        cell_runs[e.x * s.bob_inputs + e.y] += counts[s.index(e.a, e.b, e.x, e.y)];
    }
    let mut frequencies = vec![None; s.dim()];
    let mut std_errors = vec![None; s.dim()];
    for e in s.entries() {
        let n = cell_runs[e.x * s.bob_inputs + e.y];
        if n > 0 {
            let i = s.index(e.a, e.b, e.x, e.y);
            let p = counts[i] as f64 / n as f64;
            frequencies[i] = Some(p);
            std_errors[i] = Some((p * (1.0 - p) / n as f64).sqrt());
        }
    }
    let missing = (0..s.alice_inputs)
        .flat_map(|x| (0..s.bob_inputs).map(move |y| (x, y)))
        .filter(|&(x, y)| cell_runs[x * s.bob_inputs + y] == 0)
        .collect();
    Estimate {
        scenario: s,
        frequencies,
        std_errors,
        missing,
        cell_runs,
    }
}

pub fn estimate_behavior(c: &RunCounts) -> Estimate {
    estimate_table(c.scenario, &c.aggregate())
}

#[derive(Clone, Debug)]
pub struct ReductionCheck {
    /// `None` for the pooled check.
    pub t: Option<usize>,
    pub runs: u64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Runs observed in cells the induced main protocol gives probability 0.
    pub impossible_events: u64,
}

impl ReductionCheck {
    pub fn consistent(&self) -> bool {
        self.impossible_events == 0 && self.p_value >= REDUCTION_LEVEL
    }
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub checks: Vec<ReductionCheck>,
    /// Pooled test over all `t`.
    pub combined: ReductionCheck,
}

impl ReductionReport {
    pub fn consistent(&self) -> bool {
        self.combined.consistent()
    }

    pub fn to_json(&self) -> Json {
        let one = |c: &ReductionCheck| {
            json!({
                "t": c.t, "runs": c.runs, "chi_square": c.chi_square, "dof": c.dof,
                "p_value": c.p_value, "impossible_events": c.impossible_events,
                "consistent": c.consistent(),
            })
        };
        json!({
            "level": REDUCTION_LEVEL,
            "per_t": self.checks.iter().map(one).collect::<Vec<_>>(),
            "combined": one(&self.combined),
            "consistent": self.consistent(),
        })
    }
}

/// `Π ρ Π / tr` with `Π` the projector off `|t⟩` on Alice's system.
fn condition_off(r: &QuantumRealization, t: usize) -> Result<QuantumRealization> {
    let (da, db) = (r.dim_a(), r.dim_b());
    let mut p = CMat::identity(da, da);
    p[(t, t)] = C64::new(0.0, 0.0);
    let big = p.kronecker(&CMat::identity(db, db));
    let post = &big * r.state() * &big;
    let w = post.trace().re;
    if w <= UNDERFLOW {
        return Err(Error::ZeroProbability);
    }
    r.with_state(post / C64::new(w, 0.0))
}

/// Compares, for each `t`, the runs with `c ≠ t` and `x ≠ t` against the main
/// protocol run on the state conditioned on `c ≠ t` (computed independently
/// by projecting Alice's system before Charlie measures).
pub fn reduction_report(cfg: &RunConfig, counts: &RunCounts) -> Result<ReductionReport> {
    if counts.strata.is_empty() {
        return Err(Error::Invalid("reduction report needs protocol-II counts stratified by t".into()));
    }
    let s = counts.scenario;
    let mut checks = Vec::new();
    for t in 0..s.charlie_outputs {
        let table = counts.stratum(t, false).expect("every t has a stratum");
        let induced_cfg = RunConfig {
            realization: condition_off(&cfg.realization, t)?,
            protocol: Protocol::Main,
            x_distribution: None,
            y_distribution: None,
            ..cfg.clone()
        };
        // The honest induced protocol: a faulty device is exactly what the
        // check is meant to expose.
        let induced = expected_behavior(&induced_cfg.with_device("honest"))?.to_f64_vec();
        let mut check = ReductionCheck {
            t: Some(t),
            runs: 0,
            chi_square: 0.0,
            dof: 0,
            p_value: 1.0,
            impossible_events: 0,
        };
        for x in (0..s.alice_inputs).filter(|&x| x != t) {
            for y in 0..s.bob_inputs {
                let idx: Vec<usize> = (0..s.alice_outputs)
                    .flat_map(|a| (0..s.bob_outputs).map(move |b| (a, b)))
                    .map(|(a, b)| s.index(a, b, x, y))
                    .collect();
                let n: u64 = idx.iter().map(|&i| table[i]).sum();
                if n == 0 {
                    continue;
                }
                check.runs += n;
                let mut cells = 0;
                for &i in &idx {
                    let e = n as f64 * induced[i];
                    if induced[i] <= 1e-12 {
                        check.impossible_events += table[i];
                    } else {
                        cells += 1;
                        check.chi_square += (table[i] as f64 - e).powi(2) / e;
                    }
                }
                check.dof += cells.max(1) - 1;
            }
        }
        check.p_value = p_value(check.chi_square, check.dof);
        checks.push(check);
    }
    let mut combined = ReductionCheck {
        t: None,
        runs: checks.iter().map(|c| c.runs).sum(),
        chi_square: checks.iter().map(|c| c.chi_square).sum(),
        dof: checks.iter().map(|c| c.dof).sum(),
        p_value: 1.0,
        impossible_events: checks.iter().map(|c| c.impossible_events).sum(),
    };
    combined.p_value = p_value(combined.chi_square, combined.dof);
    Ok(ReductionReport { checks, combined })
}

fn p_value(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map_or(1.0, |d| d.sf(chi2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn zero_runs_give_empty_counts() {
        let c = simulate_runs(&RunConfig::new("Q1", presets::q1_realization(), 0, 1)).unwrap();
        assert_eq!(c.total(), 0);
        let e = estimate_behavior(&c);
        assert_eq!(e.missing.len(), 6);
        assert!(e.behavior().is_none());
    }

    #[test]
    fn q2_is_not_query_compatible() {
        assert!(matches!(
            simulate_runs(&RunConfig::new("Q2", presets::q2_realization(), 10, 1)),
            Err(Error::InvalidRealization(_))
        ));
    }

    #[test]
    fn pick_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(pick(&[0.0, 0.5, 0.0], 0.5, &mut rng), Some(1));
        }
    }
}
