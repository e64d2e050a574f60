//! Endogenous waiting-time dynamics.
//!
//! Given per-hospital service rates (quotas), the minimum equilibrium
//! waiting vector `w_bar` is what the bidder-optimal matching prices out.
//! This module builds that equilibrium together with its demand graph and
//! precedence order, then simulates the continuous-time demand dynamics
//! with an explicit Euler step:
//!
//! ```text
//! w_i(t+dt) - w_i(t) = (d_i(t)/quota_i - 1) * dt   if w_i(t) > 0 or d_i(t) >= quota_i
//!                    = 0                            otherwise
//! ```
//!
//! where `d_i(t)` sums the unit arrival rates of the patient types whose
//! utility `v_ij - w_i(t)` is maximal at `i` (after precedence-based tie
//! filtering). For independent populations the trajectory stays below
//! `w_bar`, the potential `P(t) = sum_i quota_i w_i + sum_j u_j` decreases
//! at rate at least `1/(k * quota_max)` until convergence, and convergence
//! happens within `2 k quota_max MSW` time units. `verify_trace` checks the
//! discretized counterparts of those statements with an `O(dt)` slack.

use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::matching::{auction_from_quotas, extract_assignment, stable_match};
use crate::model::Instance;
use crate::Result;

/// Utility differences below this are treated as ties; exact ties are
/// knife-edge under Euler drift.
pub const TIE_EPSILON: f64 = 1e-9;

/// Bipartite graph linking each patient type to the hospitals that
/// maximize his utility at `w_bar`. Hospitals are nodes `0..k`, patient
/// types are implicit on the other side.
#[derive(Debug, Clone)]
pub struct DemandGraph {
    /// `(hospital, patient)` pairs.
    pub edges: Vec<(usize, usize)>,
    /// Component id per hospital.
    pub hospital_component: Vec<usize>,
    /// Component id per patient.
    pub patient_component: Vec<usize>,
    pub num_components: usize,
}

/// Ancestor order on hospitals within each demand-graph component, rooted
/// at the component's zero-wait hospital and oriented away from it.
#[derive(Debug, Clone)]
pub struct Precedence {
    ancestor: Vec<Vec<bool>>,
    /// Roots per component, by hospital index.
    pub roots: Vec<usize>,
}

impl Precedence {
    /// True iff hospital `a` strictly precedes hospital `b` (same
    /// component, `a` on the path from the root to `b`).
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        a != b && self.ancestor[a][b]
    }
}

/// The minimum equilibrium for a quota vector: waits, assignment, demand
/// graph, and precedence order, plus diagnostics for every structural
/// invariant that failed. For independent instances the diagnostics list
/// is empty.
#[derive(Debug, Clone)]
pub struct MinEquilibrium {
    pub w_bar: Vec<u64>,
    pub h_bar: Vec<usize>,
    /// Input quotas (service rates); may exceed the realized head counts.
    pub quotas: Vec<u64>,
    /// Realized head counts `|h_bar^{-1}(i)|`.
    pub loads: Vec<u64>,
    pub demand_graph: DemandGraph,
    pub precedence: Precedence,
    /// Structure invariants that failed (expected empty when the patients
    /// are independent). Dependent instances get diagnostics, not errors.
    pub diagnostics: Vec<String>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// Computes the minimum equilibrium waiting vector and its structure for
/// quotas with `quota_i > 0` and `sum quota_i >= m`.
pub fn min_equilibrium(instance: &Instance, quotas: &[u64]) -> Result<MinEquilibrium> {
    let k = instance.num_hospitals();
    let m = instance.num_patients();
    if quotas.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} quotas for {k} hospitals",
            quotas.len()
        )));
    }
    if quotas.iter().any(|&q| q == 0) {
        return Err(Error::InvalidInput("every quota must be positive".into()));
    }
    let total: u128 = quotas.iter().map(|&q| q as u128).sum();
    if total < m as u128 {
        return Err(Error::InvalidInput(format!(
            "total quota {total} cannot serve {m} patients"
        )));
    }

    let auction = auction_from_quotas(instance, quotas)?;
    let matching = stable_match(&auction);
    let assignment = extract_assignment(instance, &auction, &matching)?;
    let w_bar: Vec<u64> = assignment
        .waiting_times
        .iter()
        .map(|w| {
            w.to_integer()
                .to_u64()
                .expect("stable-match prices are nonnegative integers")
        })
        .collect();
    let h_bar = assignment.assignment.clone();
    let loads = assignment.quotas.clone();

    // Demand graph at w_bar, exact integer comparisons.
    let mut edges = Vec::new();
    for j in 0..m {
        let best = (0..k)
            .map(|i| instance.value(j, i) as i64 - w_bar[i] as i64)
            .max()
            .expect("k >= 1");
        for i in 0..k {
            if instance.value(j, i) as i64 - w_bar[i] as i64 == best {
                edges.push((i, j));
            }
        }
    }

    let mut uf = UnionFind::new(k + m);
    for &(i, j) in &edges {
        uf.union(i, k + j);
    }
    let mut component_ids: Vec<usize> = Vec::new();
    let mut hospital_component = vec![0usize; k];
    let mut patient_component = vec![0usize; m];
    for i in 0..k {
        let root = uf.find(i);
        let id = component_ids.iter().position(|&r| r == root).unwrap_or_else(|| {
            component_ids.push(root);
            component_ids.len() - 1
        });
        hospital_component[i] = id;
    }
    for j in 0..m {
        let root = uf.find(k + j);
        let id = component_ids.iter().position(|&r| r == root).unwrap_or_else(|| {
            component_ids.push(root);
            component_ids.len() - 1
        });
        patient_component[j] = id;
    }
    let num_components = component_ids.len();

    let mut diagnostics = Vec::new();
    if w_bar.iter().min().copied().unwrap_or(0) != 0 {
        diagnostics.push("no hospital has zero waiting time".to_string());
    }
    for i in 0..k {
        if w_bar[i] > 0 && loads[i] != quotas[i] {
            diagnostics.push(format!(
                "hospital {i} waits {} but serves {} of quota {}",
                w_bar[i], loads[i], quotas[i]
            ));
        }
    }
    // Forest check: a connected component with n nodes and >= n edges has
    // a cycle.
    for c in 0..num_components {
        let nodes = hospital_component.iter().filter(|&&x| x == c).count()
            + patient_component.iter().filter(|&&x| x == c).count();
        let edge_count = edges
            .iter()
            .filter(|&&(i, _)| hospital_component[i] == c)
            .count();
        if edge_count + 1 != nodes {
            diagnostics.push(format!(
                "component {c} has {nodes} nodes but {edge_count} demand edges (not a tree)"
            ));
        }
    }
    // Exactly one zero-wait hospital per component.
    let mut roots = vec![usize::MAX; num_components];
    for c in 0..num_components {
        let zero_waits: Vec<usize> = (0..k)
            .filter(|&i| hospital_component[i] == c && w_bar[i] == 0)
            .collect();
        match zero_waits.len() {
            1 => roots[c] = zero_waits[0],
            0 => {
                diagnostics.push(format!("component {c} has no zero-wait hospital"));
            }
            n => {
                diagnostics.push(format!("component {c} has {n} zero-wait hospitals"));
                roots[c] = zero_waits[0];
            }
        }
        if roots[c] == usize::MAX {
            // Fall back to the smallest-wait hospital so the precedence
            // order stays usable for diagnostics-only simulation.
            roots[c] = (0..k)
                .filter(|&i| hospital_component[i] == c)
                .min_by_key(|&i| (w_bar[i], i))
                .expect("every component contains a hospital");
        }
    }

    // Root each component and derive the hospital ancestor relation via
    // BFS (ignoring back edges, so dependent instances stay processable).
    let mut hospital_adj: Vec<Vec<usize>> = vec![Vec::new(); k]; // hospital -> patients
    let mut patient_adj: Vec<Vec<usize>> = vec![Vec::new(); m]; // patient -> hospitals
    for &(i, j) in &edges {
        hospital_adj[i].push(j);
        patient_adj[j].push(i);
    }
    let mut parent_hospital: Vec<Option<usize>> = vec![None; k];
    let mut seen_h = vec![false; k];
    let mut seen_p = vec![false; m];
    for &root in &roots {
        if seen_h[root] {
            continue;
        }
        seen_h[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for &j in &hospital_adj[i] {
                if seen_p[j] {
                    continue;
                }
                seen_p[j] = true;
                for &i2 in &patient_adj[j] {
                    if !seen_h[i2] {
                        seen_h[i2] = true;
                        parent_hospital[i2] = Some(i);
                        queue.push_back(i2);
                    }
                }
            }
        }
    }
    let mut ancestor = vec![vec![false; k]; k];
    for b in 0..k {
        let mut cursor = parent_hospital[b];
        while let Some(a) = cursor {
            ancestor[a][b] = true;
            cursor = parent_hospital[a];
        }
    }

    Ok(MinEquilibrium {
        w_bar,
        h_bar,
        quotas: quotas.to_vec(),
        loads,
        demand_graph: DemandGraph {
            edges,
            hospital_component,
            patient_component,
            num_components,
        },
        precedence: Precedence { ancestor, roots },
        diagnostics,
    })
}

/// How patient types split their unit rate among tied best hospitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieSplit {
    /// Equal shares across surviving maximizers.
    Equal,
    /// Seeded random shares; used to probe robustness of the convergence
    /// guarantees to arbitrary tie-breaking.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Euler step, in time units.
    pub dt: f64,
    /// Hard stop, in time units.
    pub t_max: f64,
    /// Convergence threshold on `max_i |w_i - w_bar_i|`.
    pub tolerance: f64,
    pub tie_split: TieSplit,
}

impl SimConfig {
    pub fn new(dt: f64, t_max: f64, tolerance: f64, tie_split: TieSplit) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt {dt} must be positive")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance {tolerance} must be positive"
            )));
        }
        if !(t_max >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_max {t_max} must be nonnegative"
            )));
        }
        Ok(Self {
            dt,
            t_max,
            tolerance,
            tie_split,
        })
    }
}

/// Recorded trajectory: waits, demand rates, and potential per step.
#[derive(Debug, Clone)]
pub struct DynamicsTrace {
    pub dt: f64,
    pub tolerance: f64,
    pub num_hospitals: usize,
    pub times: Vec<f64>,
    w_flat: Vec<f64>,
    d_flat: Vec<f64>,
    pub potential: Vec<f64>,
    pub converged_at: Option<f64>,
}

impl DynamicsTrace {
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn waits_at(&self, step: usize) -> &[f64] {
        let k = self.num_hospitals;
        &self.w_flat[step * k..(step + 1) * k]
    }

    pub fn demand_at(&self, step: usize) -> &[f64] {
        let k = self.num_hospitals;
        &self.d_flat[step * k..(step + 1) * k]
    }

    /// CSV with columns `t, w_1..w_k, d_1..d_k, potential`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.num_hospitals;
        write!(out, "t")?;
        for i in 1..=k {
            write!(out, ",w_{i}")?;
        }
        for i in 1..=k {
            write!(out, ",d_{i}")?;
        }
        writeln!(out, ",potential")?;
        for s in 0..self.steps() {
            write!(out, "{}", self.times[s])?;
            for w in self.waits_at(s) {
                write!(out, ",{w}")?;
            }
            for d in self.demand_at(s) {
                write!(out, ",{d}")?;
            }
            writeln!(out, ",{}", self.potential[s])?;
        }
        Ok(())
    }
}

/// `2 k quota_max MSW`: the guaranteed convergence horizon for independent
/// populations.
pub fn convergence_bound(instance: &Instance, quotas: &[u64]) -> f64 {
    let k = instance.num_hospitals() as f64;
    let quota_max = quotas.iter().copied().max().unwrap_or(0) as f64;
    let msw = instance.max_social_welfare() as f64;
    2.0 * k * quota_max * msw
}

/// Demand rates at waits `w`: each type's unit rate is split among its
/// utility-maximizing hospitals that survive the precedence filter (a tied
/// hospital is dropped when another tied hospital in the same component is
/// its strict ancestor).
fn demand_rates(
    values: &[Vec<f64>],
    w: &[f64],
    eq: &MinEquilibrium,
    split: &mut dyn FnMut(usize) -> Vec<f64>,
    d_out: &mut [f64],
) {
    let k = w.len();
    d_out.iter_mut().for_each(|d| *d = 0.0);
    let mut tied: Vec<usize> = Vec::with_capacity(k);
    for row in values {
        let mut best = f64::NEG_INFINITY;
        for i in 0..k {
            let u = row[i] - w[i];
            if u > best {
                best = u;
            }
        }
        tied.clear();
        for i in 0..k {
            if row[i] - w[i] >= best - TIE_EPSILON {
                tied.push(i);
            }
        }
        let survives = |b: usize, tied: &[usize]| {
            !tied
                .iter()
                .any(|&a| a != b && eq.precedence.precedes(a, b))
        };
        let survivors: Vec<usize> = tied
            .iter()
            .copied()
            .filter(|&b| survives(b, &tied))
            .collect();
        let weights = split(survivors.len());
        for (idx, &i) in survivors.iter().enumerate() {
            d_out[i] += weights[idx];
        }
    }
}

/// Runs the Euler-discretized dynamics from `w(0) = 0` until the waits are
/// within `tolerance` of `w_bar` (in max norm) or `t_max` elapses. The
/// trace records state *before* each step, so row `s` holds the demand
/// rates generated at the recorded waits.
pub fn simulate(instance: &Instance, eq: &MinEquilibrium, config: &SimConfig) -> DynamicsTrace {
    let k = instance.num_hospitals();
    let m = instance.num_patients();
    let values: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..k).map(|i| instance.value(j, i) as f64).collect())
        .collect();
    let wbar: Vec<f64> = eq.w_bar.iter().map(|&w| w as f64).collect();
    let rates: Vec<f64> = eq.quotas.iter().map(|&q| q as f64).collect();

    let mut rng = match config.tie_split {
        TieSplit::Equal => None,
        TieSplit::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut split = |n: usize| -> Vec<f64> {
        match rng.as_mut() {
            None => vec![1.0 / n as f64; n],
            Some(rng) => {
                if n == 1 {
                    return vec![1.0];
                }
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / total).collect()
            }
        }
    };

    let mut trace = DynamicsTrace {
        dt: config.dt,
        tolerance: config.tolerance,
        num_hospitals: k,
        times: Vec::new(),
        w_flat: Vec::new(),
        d_flat: Vec::new(),
        potential: Vec::new(),
        converged_at: None,
    };

    let mut w = vec![0.0f64; k];
    let mut d = vec![0.0f64; k];
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * config.dt;
        demand_rates(&values, &w, eq, &mut split, &mut d);

        let potential: f64 = w
            .iter()
            .zip(&rates)
            .map(|(wi, qi)| wi * qi)
            .sum::<f64>()
            + values
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&w)
                        .map(|(v, wi)| v - wi)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum::<f64>();

        trace.times.push(t);
        trace.w_flat.extend_from_slice(&w);
        trace.d_flat.extend_from_slice(&d);
        trace.potential.push(potential);

        let gap = w
            .iter()
            .zip(&wbar)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if gap <= config.tolerance {
            trace.converged_at = Some(t);
            break;
        }
        if t >= config.t_max {
            break;
        }

        for i in 0..k {
            if w[i] > 0.0 || d[i] >= rates[i] {
                w[i] += (d[i] / rates[i] - 1.0) * config.dt;
                if w[i] < 0.0 {
                    w[i] = 0.0;
                }
            }
        }
        step += 1;
    }
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceCheck {
    /// (a) `w_i(t) <= w_bar_i + slack` at every step.
    WaitCeiling,
    /// (b) `P` never increases by more than `slack` across a step.
    PotentialNonIncreasing,
    /// (c) while unconverged, `P` falls at rate `>= 1/(2 k quota_max) - slack`.
    PotentialDecreaseRate,
    /// (d) at steps where `w ~= w_bar`, all right derivatives vanish.
    StationaryAtEquilibrium,
}

#[derive(Debug, Clone)]
pub struct TraceCheckFailure {
    pub check: TraceCheck,
    pub step: usize,
    pub time: f64,
    pub hospital: Option<usize>,
    /// How far past the allowed bound the quantity landed.
    pub excess: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TraceReport {
    pub failures: Vec<TraceCheckFailure>,
}

impl TraceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn passed_check(&self, check: TraceCheck) -> bool {
        !self.failures.iter().any(|f| f.check == check)
    }
}

/// Verifies a trace against the equilibrium it should approach, with a
/// discretization slack (callers typically use `2 * dt`).
pub fn verify_trace(trace: &DynamicsTrace, eq: &MinEquilibrium, slack: f64) -> TraceReport {
    let mut report = TraceReport::default();
    let k = trace.num_hospitals;
    let quota_max = eq.quotas.iter().copied().max().unwrap_or(1) as f64;
    let required_rate = 1.0 / (2.0 * k as f64 * quota_max) - slack;

    for s in 0..trace.steps() {
        let w = trace.waits_at(s);
        let d = trace.demand_at(s);
        let t = trace.times[s];

        // (a) the trajectory never exceeds the minimum equilibrium waits.
        for i in 0..k {
            let ceiling = eq.w_bar[i] as f64 + slack;
            if w[i] > ceiling {
                report.failures.push(TraceCheckFailure {
                    check: TraceCheck::WaitCeiling,
                    step: s,
                    time: t,
                    hospital: Some(i),
                    excess: w[i] - ceiling,
                });
            }
        }

        let gap = w
            .iter()
            .zip(&eq.w_bar)
            .map(|(a, &b)| (a - b as f64).abs())
            .fold(0.0f64, f64::max);

        if s + 1 < trace.steps() {
            let drop = trace.potential[s] - trace.potential[s + 1];
            // (b) the potential is non-increasing up to slack.
            if -drop > slack {
                report.failures.push(TraceCheckFailure {
                    check: TraceCheck::PotentialNonIncreasing,
                    step: s,
                    time: t,
                    hospital: None,
                    excess: -drop - slack,
                });
            }
            // (c) strict decrease while unconverged.
            if gap > trace.tolerance {
                let rate = drop / trace.dt;
                if rate < required_rate {
                    report.failures.push(TraceCheckFailure {
                        check: TraceCheck::PotentialDecreaseRate,
                        step: s,
                        time: t,
                        hospital: None,
                        excess: required_rate - rate,
                    });
                }
            }
        }

        // (d) right derivatives vanish once the trajectory sits on w_bar.
        if gap <= TIE_EPSILON {
            for i in 0..k {
                let quota = eq.quotas[i] as f64;
                let derivative = if w[i] > 0.0 || d[i] >= quota {
                    d[i] / quota - 1.0
                } else {
                    0.0
                };
                if derivative.abs() > slack {
                    report.failures.push(TraceCheckFailure {
                        check: TraceCheck::StationaryAtEquilibrium,
                        step: s,
                        time: t,
                        hospital: Some(i),
                        excess: derivative.abs() - slack,
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::minimal_stable_waits;

    fn three_patient_example() -> Instance {
        Instance::new(
            vec![500, 3000],
            vec![vec![0, 10], vec![0, 7], vec![0, 3]],
            6000,
        )
        .unwrap()
    }

    #[test]
    fn min_equilibrium_matches_worked_example() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[2, 1]).unwrap();
        assert_eq!(eq.w_bar, vec![0, 7]);
        assert_eq!(eq.h_bar, vec![1, 0, 0]);
        assert_eq!(eq.loads, vec![2, 1]);
        assert!(eq.diagnostics.is_empty(), "unexpected: {:?}", eq.diagnostics);
        // One component rooted at the zero-wait hospital; the expensive
        // hospital is its descendant.
        assert_eq!(eq.demand_graph.num_components, 1);
        assert!(eq.precedence.precedes(0, 1));
        assert!(!eq.precedence.precedes(1, 0));
    }

    #[test]
    fn ample_quotas_mean_zero_waits() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[3, 3]).unwrap();
        assert_eq!(eq.w_bar, vec![0, 0]);
        // Everyone goes where his value is highest.
        assert_eq!(eq.h_bar, vec![1, 1, 1]);
    }

    #[test]
    fn min_equilibrium_validates_quotas() {
        let instance = three_patient_example();
        assert!(min_equilibrium(&instance, &[0, 3]).is_err());
        assert!(min_equilibrium(&instance, &[1, 1]).is_err());
        assert!(min_equilibrium(&instance, &[1]).is_err());
    }

    /// The stable-match waits are componentwise minimal across every
    /// assignment function compatible with the quotas.
    #[test]
    fn waits_are_componentwise_minimal() {
        let instance = Instance::new(
            vec![1, 1, 1],
            vec![vec![1, 2, 4], vec![8, 16, 32], vec![64, 128, 256], vec![512, 1024, 2048]],
            100,
        )
        .unwrap();
        let quotas = [2, 1, 1];
        let eq = min_equilibrium(&instance, &quotas).unwrap();
        let k = instance.num_hospitals();
        let m = instance.num_patients();

        let mut h = vec![0usize; m];
        let mut minima = vec![i64::MAX; k];
        'outer: loop {
            let mut loads = vec![0u64; k];
            for &i in &h {
                loads[i] += 1;
            }
            if loads.iter().zip(&quotas).all(|(&l, &q)| l <= q) {
                let force_zero: Vec<bool> =
                    loads.iter().zip(&quotas).map(|(&l, &q)| l < q).collect();
                if let Some(waits) = minimal_stable_waits(&instance, &h, Some(&force_zero)) {
                    for i in 0..k {
                        minima[i] = minima[i].min(waits[i]);
                    }
                }
            }
            let mut pos = 0;
            loop {
                if pos == m {
                    break 'outer;
                }
                h[pos] += 1;
                if h[pos] < k {
                    break;
                }
                h[pos] = 0;
                pos += 1;
            }
        }
        let oracle: Vec<u64> = minima.into_iter().map(|w| w as u64).collect();
        assert_eq!(eq.w_bar, oracle);
    }

    /// With independent patients there is exactly one equilibrium
    /// assignment at (w_bar, quotas).
    #[test]
    fn equilibrium_assignment_is_unique_at_w_bar() {
        let instance = Instance::new(
            vec![1, 1],
            vec![vec![1, 2], vec![4, 8], vec![16, 32]],
            100,
        )
        .unwrap();
        let quotas = [2, 1];
        let eq = min_equilibrium(&instance, &quotas).unwrap();
        assert!(eq.diagnostics.is_empty());

        let k = instance.num_hospitals();
        let m = instance.num_patients();
        let mut h = vec![0usize; m];
        let mut count = 0usize;
        'outer: loop {
            let mut loads = vec![0u64; k];
            for &i in &h {
                loads[i] += 1;
            }
            let ok_loads = loads.iter().zip(&quotas).all(|(&l, &q)| l <= q)
                && (0..k).all(|i| eq.w_bar[i] == 0 || loads[i] == quotas[i]);
            if ok_loads {
                let all_max = (0..m).all(|j| {
                    let u = instance.value(j, h[j]) as i64 - eq.w_bar[h[j]] as i64;
                    let best = (0..k)
                        .map(|i| instance.value(j, i) as i64 - eq.w_bar[i] as i64)
                        .max()
                        .unwrap();
                    u == best && u >= 0
                });
                if all_max {
                    count += 1;
                }
            }
            let mut pos = 0;
            loop {
                if pos == m {
                    break 'outer;
                }
                h[pos] += 1;
                if h[pos] < k {
                    break;
                }
                h[pos] = 0;
                pos += 1;
            }
        }
        assert_eq!(count, 1);
    }

    #[test]
    fn simulation_with_slack_quotas_converges_immediately() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[3, 3]).unwrap();
        let config = SimConfig::new(0.01, 10.0, 0.05, TieSplit::Equal).unwrap();
        let trace = simulate(&instance, &eq, &config);
        assert_eq!(trace.converged_at, Some(0.0));
        assert_eq!(trace.steps(), 1);
        assert!(verify_trace(&trace, &eq, 0.02).passed());
    }

    #[test]
    fn simulation_reaches_worked_example_waits() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[2, 1]).unwrap();
        let config = SimConfig::new(0.01, 1000.0, 0.05, TieSplit::Equal).unwrap();
        let trace = simulate(&instance, &eq, &config);
        let converged = trace.converged_at.expect("must converge");
        assert!(converged <= convergence_bound(&instance, &eq.quotas));
        let last = trace.waits_at(trace.steps() - 1);
        assert!((last[0] - 0.0).abs() <= 0.05);
        assert!((last[1] - 7.0).abs() <= 0.05);
        let report = verify_trace(&trace, &eq, 2.0 * config.dt);
        assert!(report.passed(), "failures: {:?}", report.failures);
        // The potential starts at the no-scarcity welfare.
        assert_eq!(trace.potential[0], instance.max_social_welfare() as f64);
    }

    #[test]
    fn corrupted_trace_fails_wait_ceiling() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[2, 1]).unwrap();
        let config = SimConfig::new(0.01, 1000.0, 0.05, TieSplit::Equal).unwrap();
        let mut trace = simulate(&instance, &eq, &config);
        let k = trace.num_hospitals;
        let step = trace.steps() / 2;
        trace.w_flat[step * k + 1] = eq.w_bar[1] as f64 + 1.0;
        let report = verify_trace(&trace, &eq, 2.0 * config.dt);
        assert!(!report.passed_check(TraceCheck::WaitCeiling));
        assert!(report
            .failures
            .iter()
            .any(|f| f.check == TraceCheck::WaitCeiling && f.step == step));
    }

    #[test]
    fn random_tie_splits_preserve_guarantees() {
        let instance = Instance::new(
            vec![1, 2],
            vec![vec![1, 2], vec![4, 8], vec![16, 32]],
            100,
        )
        .unwrap();
        let eq = min_equilibrium(&instance, &[2, 2]).unwrap();
        assert!(eq.diagnostics.is_empty());
        for seed in [1, 2, 3] {
            let config =
                SimConfig::new(0.01, 10_000.0, 0.05, TieSplit::Random { seed }).unwrap();
            let trace = simulate(&instance, &eq, &config);
            assert!(trace.converged_at.is_some());
            let report = verify_trace(&trace, &eq, 2.0 * config.dt);
            assert!(report.passed(), "seed {seed}: {:?}", report.failures);
        }
    }

    #[test]
    fn demand_rates_sum_to_one_per_type() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[2, 1]).unwrap();
        let config = SimConfig::new(0.01, 1000.0, 0.05, TieSplit::Equal).unwrap();
        let trace = simulate(&instance, &eq, &config);
        let m = instance.num_patients() as f64;
        for s in 0..trace.steps() {
            let total: f64 = trace.demand_at(s).iter().sum();
            assert!((total - m).abs() < 1e-9, "step {s}: total {total}");
        }
    }

    #[test]
    fn csv_has_expected_columns() {
        let instance = three_patient_example();
        let eq = min_equilibrium(&instance, &[3, 3]).unwrap();
        let config = SimConfig::new(0.01, 10.0, 0.05, TieSplit::Equal).unwrap();
        let trace = simulate(&instance, &eq, &config);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,w_1,w_2,d_1,d_2,potential"));
        assert_eq!(lines.count(), trace.steps());
    }
}
