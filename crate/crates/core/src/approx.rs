//! Deficit-budget approximation: enumerate quota vectors drawn from a
//! geometric grid instead of all compositions.
//!
//! For any target vector there is a "good guess" on the grid within a
//! `(1+eps)` factor per coordinate, so the best surviving candidate is
//! worth at least the optimal equilibrium welfare at budget `B` while
//! spending at most `(1+eps)B`.

use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;

use crate::error::Error;
use crate::matching::{auction_from_quotas, extract_assignment, stable_match};
use crate::model::{
    check_equilibrium, check_feasible, evaluate, reassign_indifferent_to_cheapest, Assignment,
    EquilibriumViolation, Instance, WelfareReport,
};
use crate::rational::{rat_u, Rational};
use crate::Result;

/// The grid `C_0 = 0, C_l = floor((1+eps)^l)` for `l = 1..=L` with
/// `L = ceil(log_{1+eps} m)`, kept with duplicates as derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxConfig {
    pub epsilon: Rational,
    pub levels: Vec<u64>,
}

impl ApproxConfig {
    /// Distinct grid values in ascending order; duplicates in the raw level
    /// sequence do not change the candidate set.
    pub fn grid_values(&self) -> Vec<u64> {
        let mut values = self.levels.clone();
        values.sort_unstable();
        values.dedup();
        values
    }
}

/// Builds the quota grid for `m` patients. Exact rational arithmetic keeps
/// `floor((1+eps)^l)` honest at grid boundaries.
pub fn grid_of(m: u64, epsilon: &Rational) -> Result<ApproxConfig> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidInput("need at least one patient".into()));
    }

    let base = Rational::one() + epsilon;
    let mut levels = vec![0u64];
    if m == 1 {
        // L = 0 would leave the grid without a way to serve the single
        // patient; force {0, 1} so the good-guess property survives.
        levels.push(1);
    } else {
        let target = rat_u(m);
        let mut power = Rational::one();
        loop {
            power *= &base;
            let floored = power.floor().to_integer().to_u64().ok_or_else(|| {
                Error::InvalidInput(format!("grid value overflows u64 (epsilon {epsilon})"))
            })?;
            levels.push(floored);
            if power >= target {
                break;
            }
        }
    }

    let config = ApproxConfig {
        epsilon: epsilon.clone(),
        levels,
    };

    // Multiplicative covering: every n in [1, m] has a grid value in
    // [n, (1+eps) n].
    let values = config.grid_values();
    for n in 1..=m {
        let ceiling = &base * rat_u(n);
        let covered = values
            .iter()
            .any(|&c| c >= n && rat_u(c) <= ceiling);
        if !covered {
            return Err(Error::InternalInvariant(format!(
                "grid misses the covering property at n = {n}"
            )));
        }
    }
    Ok(config)
}

#[derive(Clone)]
struct Candidate {
    welfare: i64,
    quota: Vec<u64>,
}

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

/// Equilibrium assignment with cost at most `(1+eps) B` and welfare at
/// least the budget-`B` optimum.
pub fn solve_approx(
    instance: &Instance,
    config: &ApproxConfig,
) -> Result<(Assignment, WelfareReport)> {
    solve_with_budget(instance, config, rat_u(instance.budget()))
}

/// Runs the same search against the shrunk budget `B / (1+eps)`, so the
/// output never exceeds `B`. The welfare guarantee weakens accordingly: it
/// matches the optimum at budget `B / (1+eps)`, which can be far below the
/// budget-`B` optimum.
pub fn solve_approx_strict_budget(
    instance: &Instance,
    config: &ApproxConfig,
) -> Result<(Assignment, WelfareReport)> {
    let shrunk = rat_u(instance.budget()) / (Rational::one() + &config.epsilon);
    solve_with_budget(instance, config, shrunk)
}

fn solve_with_budget(
    instance: &Instance,
    config: &ApproxConfig,
    effective_budget: Rational,
) -> Result<(Assignment, WelfareReport)> {
    let m = instance.num_patients() as u64;
    let k = instance.num_hospitals();
    let one_plus_eps = Rational::one() + &config.epsilon;
    let sum_cap = &one_plus_eps * rat_u(m);
    let cost_cap = &one_plus_eps * &effective_budget;

    let values = config.grid_values();
    let mut candidates: Vec<Vec<u64>> = Vec::new();
    let mut index = vec![0usize; k];
    'enumerate: loop {
        let quota: Vec<u64> = index.iter().map(|&i| values[i]).collect();
        let sum: u128 = quota.iter().map(|&q| q as u128).sum();
        if sum >= m as u128 && rat_u(sum as u64) <= sum_cap {
            let cost: u128 = quota
                .iter()
                .zip(instance.hospital_costs())
                .map(|(&q, &c)| q as u128 * c as u128)
                .sum();
            if Rational::from_integer(cost.into()) <= cost_cap {
                candidates.push(quota);
            }
        }
        // Odometer over grid indices; `values` is ascending, so candidates
        // come out in lexicographic quota order.
        let mut pos = k;
        loop {
            if pos == 0 {
                break 'enumerate;
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < values.len() {
                break;
            }
            index[pos] = 0;
        }
    }

    let best = candidates
        .par_iter()
        .map(|quota| {
            let auction = auction_from_quotas(instance, quota).expect("sum >= m >= 1");
            let welfare = stable_match(&auction).total_utility();
            Some(Candidate {
                welfare,
                quota: quota.clone(),
            })
        })
        .reduce(|| None, better);

    let winner = best.ok_or_else(|| {
        Error::InvalidInput(
            "no grid quota vector fits the deficit budget; the instance admits no feasible \
             assignment"
                .into(),
        )
    })?;

    let auction = auction_from_quotas(instance, &winner.quota)?;
    let matching = stable_match(&auction);
    let extracted = extract_assignment(instance, &auction, &matching)?;
    let assignment = reassign_indifferent_to_cheapest(instance, &extracted);
    let report = evaluate(instance, &assignment)?;

    // All equilibrium conditions except the budget clause must hold
    // exactly, and the deficit bound must hold against the original budget.
    let violations = check_equilibrium(instance, &assignment)?;
    if violations
        .iter()
        .any(|v| !matches!(v, EquilibriumViolation::BudgetExceeded { .. }))
    {
        return Err(Error::InternalInvariant(format!(
            "deficit solver output violates equilibrium: {}",
            violations[0]
        )));
    }
    let deficit_factor = Rational::one() + &config.epsilon;
    if !check_feasible(instance, &assignment, &deficit_factor)? {
        return Err(Error::InternalInvariant(
            "deficit solver exceeded the (1+eps) budget".into(),
        ));
    }
    if assignment.waiting_times.iter().any(|w| !w.is_integer()) {
        return Err(Error::InternalInvariant(
            "deficit solver produced a non-integer wait".into(),
        ));
    }
    Ok((assignment, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_oracle;
    use crate::rational::{rat, ratio};

    #[test]
    fn grid_for_m10_eps1() {
        let config = grid_of(10, &rat(1)).unwrap();
        assert_eq!(config.levels, vec![0, 2, 4, 8, 16]);
    }

    #[test]
    fn grid_for_single_patient() {
        let config = grid_of(1, &ratio(1, 2)).unwrap();
        assert_eq!(config.levels, vec![0, 1]);
    }

    #[test]
    fn grid_covers_every_count() {
        let config = grid_of(6, &ratio(1, 2)).unwrap();
        let values = config.grid_values();
        for n in 1u64..=6 {
            let ok = values
                .iter()
                .any(|&c| c >= n && rat_u(c) <= ratio(3, 2) * rat_u(n));
            assert!(ok, "n = {n} uncovered by {values:?}");
        }
    }

    #[test]
    fn grid_rejects_bad_epsilon() {
        assert!(grid_of(5, &rat(0)).is_err());
        assert!(grid_of(5, &rat(-1)).is_err());
    }

    #[test]
    fn deficit_solution_dominates_exact_on_example() {
        let instance = Instance::new(
            vec![500, 3000],
            vec![vec![0, 10], vec![0, 7], vec![0, 3]],
            6000,
        )
        .unwrap();
        let config = grid_of(3, &ratio(1, 2)).unwrap();
        let (assignment, report) = solve_approx(&instance, &config).unwrap();
        let oracle = brute_force_oracle(&instance).unwrap();
        assert!(report.social_welfare >= oracle);
        assert!(report.total_cost <= 9000); // (1 + 1/2) * 6000
        assert!(check_feasible(&instance, &assignment, &ratio(3, 2)).unwrap());
    }

    #[test]
    fn exact_grid_point_reproduces_optimum() {
        // m = 4 and eps = 1 puts 4 = C_2 on the grid, and the optimal quota
        // (0, 4) is a grid tuple, so the deficit answer is exactly optimal.
        let instance = Instance::new(vec![2, 1], vec![vec![1, 5]; 4], 8).unwrap();
        let config = grid_of(4, &rat(1)).unwrap();
        let (_, report) = solve_approx(&instance, &config).unwrap();
        assert_eq!(report.social_welfare, rat(20));
        assert_eq!(report.total_cost, 4);
    }

    #[test]
    fn strict_budget_never_overruns() {
        let instance = Instance::new(
            vec![500, 3000],
            vec![vec![0, 10], vec![0, 7], vec![0, 3]],
            6000,
        )
        .unwrap();
        let config = grid_of(3, &ratio(1, 2)).unwrap();
        let (assignment, _) = solve_approx_strict_budget(&instance, &config).unwrap();
        assert!(check_feasible(&instance, &assignment, &rat(1)).unwrap());
    }
}
