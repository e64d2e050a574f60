//! Core domain types: problem instances, assignments, welfare accounting,
//! and the feasibility/equilibrium predicates every solver shares.
//!
//! All types are immutable after construction and all operations are pure,
//! so values can be shared freely across threads.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::{rat_u, Rational};
use crate::Result;

/// A provision problem: hospitals with per-patient costs, integer patient
/// valuations, and the payer's per-time-unit budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    hospital_costs: Vec<u64>,
    /// `valuations[j][i]` is patient `j`'s value for hospital `i`.
    valuations: Vec<Vec<u64>>,
    budget: u64,
}

impl Instance {
    pub fn new(hospital_costs: Vec<u64>, valuations: Vec<Vec<u64>>, budget: u64) -> Result<Self> {
        if hospital_costs.is_empty() {
            return Err(Error::InvalidInput("need at least one hospital".into()));
        }
        if valuations.is_empty() {
            return Err(Error::InvalidInput("need at least one patient".into()));
        }
        let k = hospital_costs.len();
        for (j, row) in valuations.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidInput(format!(
                    "patient {j} has {} values, expected one per hospital ({k})",
                    row.len()
                )));
            }
        }
        Ok(Self {
            hospital_costs,
            valuations,
            budget,
        })
    }

    pub fn num_hospitals(&self) -> usize {
        self.hospital_costs.len()
    }

    pub fn num_patients(&self) -> usize {
        self.valuations.len()
    }

    pub fn hospital_costs(&self) -> &[u64] {
        &self.hospital_costs
    }

    pub fn cost(&self, hospital: usize) -> u64 {
        self.hospital_costs[hospital]
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// `v_{ij}`: patient `j`'s value for hospital `i`.
    pub fn value(&self, patient: usize, hospital: usize) -> u64 {
        self.valuations[patient][hospital]
    }

    pub fn patient_values(&self, patient: usize) -> &[u64] {
        &self.valuations[patient]
    }

    /// Sum over patients of their best value: the welfare of a world
    /// without scarcity, and the initial value of the dynamics potential.
    pub fn max_social_welfare(&self) -> u64 {
        self.valuations
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .sum()
    }

    /// Non-fatal diagnostics. The solvers stay well-defined when the budget
    /// sits outside `[m*c_min, m*c_max)`, but such instances are degenerate:
    /// either nothing is affordable or everything is.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = self.num_patients() as u128;
        let c_min = *self.hospital_costs.iter().min().expect("nonempty") as u128;
        let c_max = *self.hospital_costs.iter().max().expect("nonempty") as u128;
        let b = self.budget as u128;
        if b < m * c_min {
            out.push(format!(
                "budget {b} cannot cover all patients at the cheapest hospital (needs {})",
                m * c_min
            ));
        }
        if b >= m * c_max {
            out.push(format!(
                "budget {b} covers every patient at the most expensive hospital ({})",
                m * c_max
            ));
        }
        out
    }

    fn check_patient(&self, patient: usize) -> Result<()> {
        if patient >= self.num_patients() {
            return Err(Error::IndexOutOfRange {
                kind: "patient",
                index: patient,
                limit: self.num_patients(),
            });
        }
        Ok(())
    }

    fn check_hospital(&self, hospital: usize) -> Result<()> {
        if hospital >= self.num_hospitals() {
            return Err(Error::IndexOutOfRange {
                kind: "hospital",
                index: hospital,
                limit: self.num_hospitals(),
            });
        }
        Ok(())
    }
}

/// An assignment triple: waiting times per hospital, a hospital per patient,
/// and the quota (head count) per hospital.
///
/// Waiting times are rationals rather than integers because the dynamics
/// produces non-integer values; solvers that promise integer waits assert
/// integrality on their own outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub waiting_times: Vec<Rational>,
    pub assignment: Vec<usize>,
    pub quotas: Vec<u64>,
}

impl Assignment {
    /// Builds the quota vector from the assignment function.
    pub fn from_waits_and_hospitals(
        instance: &Instance,
        waiting_times: Vec<Rational>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        let mut quotas = vec![0u64; instance.num_hospitals()];
        for &h in &assignment {
            instance.check_hospital(h)?;
            quotas[h] += 1;
        }
        let out = Self {
            waiting_times,
            assignment,
            quotas,
        };
        out.validate(instance)?;
        Ok(out)
    }

    /// Structural validity: shapes match the instance, waits are
    /// nonnegative, and `|h^{-1}(i)| = quota_i` with quotas summing to `m`.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let k = instance.num_hospitals();
        let m = instance.num_patients();
        if self.waiting_times.len() != k {
            return Err(Error::InvalidInput(format!(
                "{} waiting times for {k} hospitals",
                self.waiting_times.len()
            )));
        }
        if self.assignment.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} assigned patients, instance has {m}",
                self.assignment.len()
            )));
        }
        if self.quotas.len() != k {
            return Err(Error::InvalidInput(format!(
                "{} quotas for {k} hospitals",
                self.quotas.len()
            )));
        }
        if self.waiting_times.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidInput("negative waiting time".into()));
        }
        let mut counts = vec![0u64; k];
        for &h in &self.assignment {
            instance.check_hospital(h)?;
            counts[h] += 1;
        }
        if counts != self.quotas {
            return Err(Error::InvalidInput(
                "quota vector disagrees with assignment head counts".into(),
            ));
        }
        Ok(())
    }

    /// Total money spent: `sum_i quota_i * c_i`.
    pub fn total_cost(&self, instance: &Instance) -> u128 {
        self.quotas
            .iter()
            .zip(instance.hospital_costs())
            .map(|(&q, &c)| q as u128 * c as u128)
            .sum()
    }
}

/// Exact per-patient utilities and their aggregates for one assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WelfareReport {
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub utilities: Vec<Rational>,
    #[serde(with = "crate::rational::serde_rational")]
    pub social_welfare: Rational,
    pub total_cost: u128,
}

/// One failed equilibrium condition. Margins say how much the inequality
/// fails by, so simulated (inexact) assignments can be checked against a
/// tolerance instead of exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquilibriumViolation {
    /// Condition 1: total cost exceeds the budget.
    BudgetExceeded { cost: u128, limit: Rational },
    /// Condition 2: an assigned patient has negative utility.
    NegativeUtility { patient: usize, utility: Rational },
    /// Condition 3: a patient would gain `margin > 0` by switching.
    PreferredAlternative {
        patient: usize,
        hospital: usize,
        margin: Rational,
    },
}

impl std::fmt::Display for EquilibriumViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::BudgetExceeded { cost, limit } => {
                write!(f, "total cost {cost} exceeds budget limit {limit}")
            }
            Self::NegativeUtility { patient, utility } => {
                write!(f, "patient {patient} has negative utility {utility}")
            }
            Self::PreferredAlternative {
                patient,
                hospital,
                margin,
            } => write!(
                f,
                "patient {patient} prefers hospital {hospital} by margin {margin}"
            ),
        }
    }
}

/// Exact utilities, social welfare, and money cost of an assignment.
pub fn evaluate(instance: &Instance, assignment: &Assignment) -> Result<WelfareReport> {
    assignment.validate(instance)?;
    let utilities: Vec<Rational> = assignment
        .assignment
        .iter()
        .enumerate()
        .map(|(j, &h)| rat_u(instance.value(j, h)) - &assignment.waiting_times[h])
        .collect();
    let social_welfare = utilities.iter().fold(Rational::zero(), |acc, u| acc + u);
    Ok(WelfareReport {
        utilities,
        social_welfare,
        total_cost: assignment.total_cost(instance),
    })
}

/// True iff `sum_i quota_i * c_i <= budget_factor * B`. A factor of 1 is
/// strict feasibility; `1 + eps` is deficit feasibility.
pub fn check_feasible(
    instance: &Instance,
    assignment: &Assignment,
    budget_factor: &Rational,
) -> Result<bool> {
    if budget_factor < &Rational::one() {
        return Err(Error::InvalidInput(format!(
            "budget factor {budget_factor} must be >= 1"
        )));
    }
    assignment.validate(instance)?;
    let cost = Rational::from_integer(assignment.total_cost(instance).into());
    Ok(cost <= budget_factor * rat_u(instance.budget()))
}

/// Collects every violated equilibrium condition. An empty report means the
/// assignment is feasible, individually rational, and envy-free given the
/// waiting times. Violations are data, not errors.
pub fn check_equilibrium(
    instance: &Instance,
    assignment: &Assignment,
) -> Result<Vec<EquilibriumViolation>> {
    assignment.validate(instance)?;
    let mut violations = Vec::new();

    let cost = assignment.total_cost(instance);
    if cost > instance.budget() as u128 {
        violations.push(EquilibriumViolation::BudgetExceeded {
            cost,
            limit: rat_u(instance.budget()),
        });
    }

    for (j, &h) in assignment.assignment.iter().enumerate() {
        let utility = rat_u(instance.value(j, h)) - &assignment.waiting_times[h];
        if utility.is_negative() {
            violations.push(EquilibriumViolation::NegativeUtility {
                patient: j,
                utility: utility.clone(),
            });
        }
        for i in 0..instance.num_hospitals() {
            let alternative = rat_u(instance.value(j, i)) - &assignment.waiting_times[i];
            if alternative > utility {
                violations.push(EquilibriumViolation::PreferredAlternative {
                    patient: j,
                    hospital: i,
                    margin: alternative - &utility,
                });
            }
        }
    }
    Ok(violations)
}

/// Collapses a fractional (probabilistic) assignment into a deterministic
/// one by sending each patient to the cheapest hospital in his support.
///
/// Requires each row to sum to 1 and every supported hospital to maximize
/// the patient's utility under `waiting_times`; under those conditions the
/// result has exactly the expected welfare of the input and at most its
/// expected cost.
pub fn derandomize(
    instance: &Instance,
    fractional: &[Vec<Rational>],
    waiting_times: &[Rational],
) -> Result<Assignment> {
    let k = instance.num_hospitals();
    let m = instance.num_patients();
    if fractional.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} fractional rows for {m} patients",
            fractional.len()
        )));
    }
    if waiting_times.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} waiting times for {k} hospitals",
            waiting_times.len()
        )));
    }
    let one = Rational::from_integer(1.into());
    let mut assignment = Vec::with_capacity(m);
    for (j, row) in fractional.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidInput(format!(
                "fractional row {j} has {} entries, expected {k}",
                row.len()
            )));
        }
        if row.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidInput(format!(
                "fractional row {j} has a negative probability"
            )));
        }
        let total = row.iter().fold(Rational::zero(), |acc, p| acc + p);
        if total != one {
            return Err(Error::InvalidInput(format!(
                "fractional row {j} sums to {total}, expected 1"
            )));
        }
        let best = (0..k)
            .map(|i| rat_u(instance.value(j, i)) - &waiting_times[i])
            .max()
            .expect("k >= 1");
        let mut chosen: Option<usize> = None;
        for (i, p) in row.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let utility = rat_u(instance.value(j, i)) - &waiting_times[i];
            if utility != best {
                return Err(Error::ContractViolation(format!(
                    "patient {j} supports hospital {i}, which does not maximize his utility"
                )));
            }
            chosen = Some(match chosen {
                Some(prev) if instance.cost(prev) <= instance.cost(i) => prev,
                _ => i,
            });
        }
        assignment.push(chosen.expect("row sums to 1, so some entry is positive"));
    }
    Assignment::from_waits_and_hospitals(instance, waiting_times.to_vec(), assignment)
}

/// Re-sends every indifferent patient to the cheapest hospital among his
/// utility maximizers (ties by lowest index). Utilities and welfare are
/// unchanged; cost never increases. Solvers apply this before returning so
/// that patients following the "go to the cheapest tie" convention realize
/// exactly the published assignment.
pub fn reassign_indifferent_to_cheapest(instance: &Instance, assignment: &Assignment) -> Assignment {
    let k = instance.num_hospitals();
    let mut reassigned = Vec::with_capacity(assignment.assignment.len());
    for (j, &_h) in assignment.assignment.iter().enumerate() {
        let utilities: Vec<Rational> = (0..k)
            .map(|i| rat_u(instance.value(j, i)) - &assignment.waiting_times[i])
            .collect();
        let best = utilities.iter().max().expect("k >= 1").clone();
        let cheapest = (0..k)
            .filter(|&i| utilities[i] == best)
            .min_by_key(|&i| (instance.cost(i), i))
            .expect("some maximizer exists");
        reassigned.push(cheapest);
    }
    let mut quotas = vec![0u64; k];
    for &h in &reassigned {
        quotas[h] += 1;
    }
    Assignment {
        waiting_times: assignment.waiting_times.clone(),
        assignment: reassigned,
        quotas,
    }
}
