//! Exact optimal-equilibrium search, the brute-force oracle used to verify
//! it, and the knapsack reduction.
//!
//! The exact solver enumerates quota vectors (`sum = m`, within budget) and
//! takes the bidder-optimal matching per quota; since that matching
//! maximizes every patient's utility simultaneously for a fixed quota, the
//! best value over quotas is the optimal equilibrium welfare. The oracle
//! instead enumerates assignment functions and solves each stability
//! system directly, giving an independent route to the same number.

use rayon::prelude::*;

use crate::error::Error;
use crate::matching::{auction_from_quotas, extract_assignment, stable_match};
use crate::model::{
    check_equilibrium, check_feasible, evaluate, reassign_indifferent_to_cheapest, Assignment,
    Instance, WelfareReport,
};
use crate::rational::{rat, Rational};
use crate::Result;

/// Default cap on the number of quota vectors `C(m+k-1, k-1)` the exact
/// solver will enumerate.
pub const DEFAULT_QUOTA_CAP: u128 = 10_000_000;

/// Default cap on the number of assignment functions `k^m` the oracle will
/// enumerate.
pub const DEFAULT_ORACLE_CAP: u128 = 1_000_000;

/// A 0/1 knapsack: pick items maximizing total value with total cost at
/// most the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnapsackInstance {
    values: Vec<u64>,
    costs: Vec<u64>,
    budget: u64,
}

impl KnapsackInstance {
    pub fn new(values: Vec<u64>, costs: Vec<u64>, budget: u64) -> Result<Self> {
        if values.len() != costs.len() {
            return Err(Error::InvalidInput(format!(
                "{} values but {} costs",
                values.len(),
                costs.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("knapsack needs at least one item".into()));
        }
        if values.iter().any(|&v| v == 0) || costs.iter().any(|&c| c == 0) {
            return Err(Error::InvalidInput(
                "knapsack values and costs must be positive".into(),
            ));
        }
        Ok(Self {
            values,
            costs,
            budget,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }
}

/// Encodes a knapsack as a provision problem: one hospital per item (cost
/// `c_i`) valued `v_i` only by its dedicated patient, plus a free hospital
/// nobody values. The optimal equilibrium welfare of the output equals the
/// knapsack optimum.
pub fn reduce_knapsack(kp: &KnapsackInstance) -> Instance {
    let k = kp.len();
    let mut costs = kp.costs().to_vec();
    costs.push(0);
    let valuations = (0..k)
        .map(|j| {
            let mut row = vec![0u64; k + 1];
            row[j] = kp.values()[j];
            row
        })
        .collect();
    Instance::new(costs, valuations, kp.budget()).expect("reduction is structurally valid")
}

fn binomial(n: u64, r: u64) -> u128 {
    let r = r.min(n - r.min(n));
    let mut out: u128 = 1;
    for i in 0..r {
        out = out.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if out > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    out
}

/// Calls `f` for every composition of `remaining` into `quota[idx..]`,
/// in lexicographically ascending order of the full vector.
fn for_each_tail_composition(
    quota: &mut Vec<u64>,
    idx: usize,
    remaining: u64,
    f: &mut impl FnMut(&[u64]),
) {
    let k = quota.len();
    if idx == k - 1 {
        quota[idx] = remaining;
        f(quota);
        quota[idx] = 0;
        return;
    }
    for value in 0..=remaining {
        quota[idx] = value;
        for_each_tail_composition(quota, idx + 1, remaining - value, f);
    }
    quota[idx] = 0;
}

#[derive(Clone)]
struct Candidate {
    welfare: i64,
    quota: Vec<u64>,
}

/// Higher welfare wins; equal welfare falls back to the lexicographically
/// smallest quota vector, independent of evaluation order.
fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if x.welfare > y.welfare || (x.welfare == y.welfare && x.quota <= y.quota) {
                Some(x)
            } else {
                Some(y)
            }
        }
    }
}

fn finish_candidate(
    instance: &Instance,
    quota: &[u64],
) -> Result<(Assignment, WelfareReport)> {
    let auction = auction_from_quotas(instance, quota)?;
    let matching = stable_match(&auction);
    let extracted = extract_assignment(instance, &auction, &matching)?;
    let assignment = reassign_indifferent_to_cheapest(instance, &extracted);
    let report = evaluate(instance, &assignment)?;
    let violations = check_equilibrium(instance, &assignment)?;
    if !violations.is_empty() {
        return Err(Error::InternalInvariant(format!(
            "solver output violates equilibrium: {}",
            violations[0]
        )));
    }
    if !check_feasible(instance, &assignment, &Rational::from_integer(1.into()))? {
        return Err(Error::InternalInvariant("solver output over budget".into()));
    }
    if assignment.waiting_times.iter().any(|w| !w.is_integer()) {
        return Err(Error::InternalInvariant(
            "exact solver produced a non-integer wait".into(),
        ));
    }
    Ok((assignment, report))
}

/// Optimal equilibrium assignment by quota enumeration, with the default
/// work cap.
pub fn solve_exact(instance: &Instance) -> Result<(Assignment, WelfareReport)> {
    solve_exact_capped(instance, DEFAULT_QUOTA_CAP)
}

/// Optimal equilibrium assignment by quota enumeration.
///
/// Errors with [`Error::CapExceeded`] when the composition count
/// `C(m+k-1, k-1)` exceeds `cap`, and with `InvalidInput` when no quota
/// vector fits the budget (the instance admits no feasible assignment).
pub fn solve_exact_capped(instance: &Instance, cap: u128) -> Result<(Assignment, WelfareReport)> {
    let m = instance.num_patients() as u64;
    let k = instance.num_hospitals();
    let work = binomial(m + k as u64 - 1, k as u64 - 1);
    if work > cap {
        return Err(Error::CapExceeded { work, cap });
    }
    let budget = instance.budget() as u128;

    let best = (0..=m)
        .into_par_iter()
        .map(|first| {
            let mut local: Option<Candidate> = None;
            let mut quota = vec![0u64; k];
            quota[0] = first;
            let mut visit = |q: &[u64]| {
                let cost: u128 = q
                    .iter()
                    .zip(instance.hospital_costs())
                    .map(|(&n, &c)| n as u128 * c as u128)
                    .sum();
                if cost > budget {
                    return;
                }
                let auction = auction_from_quotas(instance, q).expect("sum is m >= 1");
                let welfare = stable_match(&auction).total_utility();
                local = better(
                    local.take(),
                    Some(Candidate {
                        welfare,
                        quota: q.to_vec(),
                    }),
                );
            };
            if k == 1 {
                if first == m {
                    let q = quota.clone();
                    visit(&q);
                }
            } else {
                for_each_tail_composition(&mut quota, 1, m - first, &mut visit);
            }
            local
        })
        .reduce(|| None, better);

    let winner = best.ok_or_else(|| {
        Error::InvalidInput(
            "no quota vector fits the budget; the instance admits no feasible assignment".into(),
        )
    })?;
    finish_candidate(instance, &winner.quota)
}

/// Minimal stable waiting times for a fixed assignment function, or `None`
/// when no equilibrium waits exist for it.
///
/// Solves the difference-constraint system `w_{h(j)} - w_i <= v_{h(j)j} -
/// v_ij`, `w_{h(j)} <= v_{h(j)j}`, `w >= 0` (plus `w_i = 0` where
/// `force_zero` says so) by shortest paths from a super-source, which
/// yields the componentwise-minimum solution.
pub fn minimal_stable_waits(
    instance: &Instance,
    h: &[usize],
    force_zero: Option<&[bool]>,
) -> Option<Vec<i64>> {
    let k = instance.num_hospitals();
    let m = instance.num_patients();
    let source = k;
    let mut edges: Vec<(usize, usize, i64)> = Vec::with_capacity(k + m * k + m);
    for i in 0..k {
        edges.push((source, i, 0));
    }
    for (j, &hj) in h.iter().enumerate() {
        let v_assigned = instance.value(j, hj) as i64;
        edges.push((hj, source, v_assigned));
        for i in 0..k {
            if i != hj {
                edges.push((hj, i, v_assigned - instance.value(j, i) as i64));
            }
        }
    }
    if let Some(mask) = force_zero {
        for (i, &forced) in mask.iter().enumerate() {
            if forced {
                edges.push((i, source, 0));
            }
        }
    }

    // Bellman-Ford over k+1 nodes; a negative cycle means the stability
    // system is infeasible.
    let n = k + 1;
    let mut dist = vec![i64::MAX / 2; n];
    dist[source] = 0;
    for _ in 0..n - 1 {
        let mut changed = false;
        for &(a, b, w) in &edges {
            if dist[a] + w < dist[b] {
                dist[b] = dist[a] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for &(a, b, w) in &edges {
        if dist[a] + w < dist[b] {
            return None;
        }
    }
    Some((0..k).map(|i| -dist[i]).collect())
}

/// Independent welfare oracle: enumerate every assignment function within
/// budget, solve its stability system for the welfare-maximal waits, and
/// return the best social welfare found.
pub fn brute_force_oracle(instance: &Instance) -> Result<Rational> {
    brute_force_oracle_capped(instance, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_oracle_capped(instance: &Instance, cap: u128) -> Result<Rational> {
    let k = instance.num_hospitals();
    let m = instance.num_patients();
    let work = (k as u128)
        .checked_pow(m as u32)
        .unwrap_or(u128::MAX);
    if work > cap {
        return Err(Error::CapExceeded { work, cap });
    }
    let budget = instance.budget() as u128;

    let mut h = vec![0usize; m];
    let mut best: Option<i64> = None;
    loop {
        let cost: u128 = h.iter().map(|&i| instance.cost(i) as u128).sum();
        if cost <= budget {
            if let Some(waits) = minimal_stable_waits(instance, &h, None) {
                let welfare: i64 = h
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| instance.value(j, i) as i64 - waits[i])
                    .sum();
                best = Some(best.map_or(welfare, |b| b.max(welfare)));
            }
        }
        // Odometer step through [k]^m.
        let mut pos = 0;
        loop {
            if pos == m {
                return best.map(rat).ok_or_else(|| {
                    Error::InvalidInput(
                        "no assignment fits the budget; the instance admits no feasible assignment"
                            .into(),
                    )
                });
            }
            h[pos] += 1;
            if h[pos] < k {
                break;
            }
            h[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive 0/1 knapsack optimum by subset enumeration; test oracle for
/// the reduction.
pub fn knapsack_optimum_by_enumeration(kp: &KnapsackInstance) -> u64 {
    let n = kp.len();
    assert!(n < 26, "subset enumeration limited to 25 items");
    let mut best = 0u64;
    for mask in 0u32..(1 << n) {
        let mut value = 0u64;
        let mut cost = 0u128;
        for item in 0..n {
            if mask & (1 << item) != 0 {
                value += kp.values()[item];
                cost += kp.costs()[item] as u128;
            }
        }
        if cost <= kp.budget() as u128 {
            best = best.max(value);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn three_patient_example() -> Instance {
        Instance::new(
            vec![500, 3000],
            vec![vec![0, 10], vec![0, 7], vec![0, 3]],
            6000,
        )
        .unwrap()
    }

    #[test]
    fn solves_three_patient_example() {
        let instance = three_patient_example();
        let (assignment, report) = solve_exact(&instance).unwrap();
        assert_eq!(report.social_welfare, rat(3));
        assert_eq!(assignment.waiting_times, vec![rat(0), rat(7)]);
        assert_eq!(assignment.quotas, vec![2, 1]);
    }

    #[test]
    fn solves_correlated_two_patient_examples() {
        // Same marginal value distributions per hospital, different optima.
        let a = Instance::new(vec![9, 1], vec![vec![10, 0], vec![4, 6]], 10).unwrap();
        let (assignment_a, report_a) = solve_exact(&a).unwrap();
        assert_eq!(report_a.social_welfare, rat(16));
        assert_eq!(assignment_a.waiting_times, vec![rat(0), rat(0)]);

        let b = Instance::new(vec![9, 1], vec![vec![10, 6], vec![4, 0]], 10).unwrap();
        let (assignment_b, report_b) = solve_exact(&b).unwrap();
        assert_eq!(report_b.social_welfare, rat(6));
        assert_eq!(assignment_b.waiting_times, vec![rat(4), rat(0)]);
    }

    #[test]
    fn oracle_agrees_on_paper_examples() {
        for instance in [
            three_patient_example(),
            Instance::new(vec![9, 1], vec![vec![10, 0], vec![4, 6]], 10).unwrap(),
            Instance::new(vec![9, 1], vec![vec![10, 6], vec![4, 0]], 10).unwrap(),
        ] {
            let (_, report) = solve_exact(&instance).unwrap();
            let oracle = brute_force_oracle(&instance).unwrap();
            assert_eq!(report.social_welfare, oracle);
        }
    }

    #[test]
    fn unanimous_preferences_collapse_to_one_hospital() {
        // All patients share (8, 5, 1); only the mid hospital is affordable
        // for everyone.
        let instance = Instance::new(
            vec![10, 3, 1],
            vec![vec![8, 5, 1]; 4],
            13,
        )
        .unwrap();
        let (_, report) = solve_exact(&instance).unwrap();
        assert_eq!(report.social_welfare, rat(4 * 5));
    }

    #[test]
    fn cap_errors_are_explicit() {
        let instance = three_patient_example();
        assert!(matches!(
            solve_exact_capped(&instance, 1),
            Err(Error::CapExceeded { .. })
        ));
        assert!(matches!(
            brute_force_oracle_capped(&instance, 1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn knapsack_reduction_examples() {
        let kp = KnapsackInstance::new(vec![6, 5], vec![3, 3], 3).unwrap();
        let instance = reduce_knapsack(&kp);
        assert_eq!(instance.num_hospitals(), 3);
        assert_eq!(instance.num_patients(), 2);
        let (_, report) = solve_exact(&instance).unwrap();
        assert_eq!(report.social_welfare, rat(6));
        assert_eq!(knapsack_optimum_by_enumeration(&kp), 6);

        let broke = KnapsackInstance::new(vec![6, 5], vec![3, 3], 0).unwrap();
        let (_, report) = solve_exact(&reduce_knapsack(&broke)).unwrap();
        assert_eq!(report.social_welfare, Rational::zero());

        let rich = KnapsackInstance::new(vec![6, 5], vec![3, 3], 6).unwrap();
        let (_, report) = solve_exact(&reduce_knapsack(&rich)).unwrap();
        assert_eq!(report.social_welfare, rat(11));
    }

    #[test]
    fn knapsack_rejects_zero_entries() {
        assert!(KnapsackInstance::new(vec![0], vec![1], 1).is_err());
        assert!(KnapsackInstance::new(vec![1], vec![0], 1).is_err());
        assert!(KnapsackInstance::new(vec![1, 2], vec![1], 1).is_err());
    }
}
