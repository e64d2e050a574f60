//! The two-hospital continuous model: a unit mass of patients on `[0, 1]`
//! with nondecreasing piecewise-linear willingness-to-wait `v(x)`, a payer
//! budget `B` in `(0, 1)` (cost density 1 at the good hospital, 0 at the
//! other), and allocation schemes ranging from randomized assignment to
//! arbitrary contract menus.
//!
//! Curves and menus are piecewise linear with rational coordinates, so
//! every welfare integral here is computed exactly.

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::rational::Rational;
use crate::Result;

/// Piecewise-linear, nondecreasing `v(x)` on `[0, 1]` with `v(0) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuationCurve {
    points: Vec<(Rational, Rational)>,
}

impl ValuationCurve {
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput(
                "curve needs at least two breakpoints".into(),
            ));
        }
        if points[0].0 != Rational::zero() || points[points.len() - 1].0 != Rational::one() {
            return Err(Error::InvalidInput(
                "curve must span x = 0 to x = 1".into(),
            ));
        }
        if !points[0].1.is_zero() {
            return Err(Error::InvalidInput("curve must satisfy v(0) = 0".into()));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidInput(
                    "breakpoint x coordinates must strictly increase".into(),
                ));
            }
            if pair[1].1 < pair[0].1 {
                return Err(Error::InvalidInput("curve must be nondecreasing".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn value_at(&self, x: &Rational) -> Rational {
        let pts = &self.points;
        if *x <= pts[0].0 {
            return pts[0].1.clone();
        }
        for pair in pts.windows(2) {
            let (x0, v0) = &pair[0];
            let (x1, v1) = &pair[1];
            if x <= x1 {
                return v0 + (v1 - v0) * (x - x0) / (x1 - x0);
            }
        }
        pts[pts.len() - 1].1.clone()
    }

    /// Segment slopes, one per consecutive breakpoint pair.
    fn slopes(&self) -> Vec<Rational> {
        self.points
            .windows(2)
            .map(|pair| (&pair[1].1 - &pair[0].1) / (&pair[1].0 - &pair[0].0))
            .collect()
    }

    /// Concavity is a computed flag, not an invariant.
    pub fn is_concave(&self) -> bool {
        self.slopes().windows(2).all(|s| s[0] >= s[1])
    }

    /// Discrete form of "`(1-x) v'(x)` is nonincreasing", evaluated at
    /// segment starts. Concave curves always qualify; so do fine samplings
    /// of smooth curves satisfying the continuous condition (e.g. e^x - 1).
    pub fn weighted_slope_nonincreasing(&self) -> bool {
        let slopes = self.slopes();
        let one = Rational::one();
        let weighted: Vec<Rational> = self
            .points
            .iter()
            .zip(&slopes)
            .map(|((x, _), s)| (&one - x) * s)
            .collect();
        weighted.windows(2).all(|w| w[0] >= w[1])
    }

    /// Exact `int_0^1 v(x) dx` by trapezoids.
    pub fn integral(&self) -> Rational {
        self.points
            .windows(2)
            .map(|pair| {
                let (x0, v0) = &pair[0];
                let (x1, v1) = &pair[1];
                (v0 + v1) * (x1 - x0) / Rational::from_integer(2.into())
            })
            .fold(Rational::zero(), |acc, a| acc + a)
    }

    /// Largest `x` with `v(x) <= threshold` (1 if the whole curve fits).
    fn rightmost_at_or_below(&self, threshold: &Rational) -> Rational {
        let pts = &self.points;
        if pts[pts.len() - 1].1 <= *threshold {
            return Rational::one();
        }
        // Find the first breakpoint strictly above the threshold and invert
        // the segment leading into it.
        for idx in 1..pts.len() {
            if pts[idx].1 > *threshold {
                let (x0, v0) = &pts[idx - 1];
                let (x1, v1) = &pts[idx];
                if v0 > threshold {
                    return x0.clone();
                }
                // v0 <= threshold < v1 on a strictly rising stretch.
                return x0 + (threshold - v0) * (x1 - x0) / (v1 - v0);
            }
        }
        unreachable!("last value exceeds threshold, so some breakpoint does");
    }
}

/// A probability of treatment at the good hospital and the waiting time
/// attached to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub probability: Rational,
    pub wait: Rational,
}

impl Contract {
    pub fn new(probability: Rational, wait: Rational) -> Result<Self> {
        if probability.is_negative() || probability > Rational::one() {
            return Err(Error::InvalidInput(format!(
                "contract probability {probability} outside [0, 1]"
            )));
        }
        if wait.is_negative() {
            return Err(Error::InvalidInput(format!(
                "contract wait {wait} is negative"
            )));
        }
        Ok(Self { probability, wait })
    }

    /// Expected waiting cost `p * w`.
    fn cost(&self) -> Rational {
        &self.probability * &self.wait
    }
}

/// A finite set of contracts. Patients may mix contracts, so the effective
/// offer set is the lower convex hull of the `(p, p*w)` points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryMenu {
    contracts: Vec<Contract>,
}

impl LotteryMenu {
    pub fn new(contracts: Vec<Contract>) -> Result<Self> {
        if contracts.is_empty() {
            return Err(Error::InvalidInput("menu needs at least one contract".into()));
        }
        Ok(Self { contracts })
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    /// Vertices `(p, p*w)` of the lower convex hull of the offered points,
    /// with strictly increasing `p`. Only these vertices can be strict
    /// best responses; everything above the hull is dominated by mixing.
    pub fn effective_offers(&self) -> Vec<(Rational, Rational)> {
        let mut points: Vec<(Rational, Rational)> = self
            .contracts
            .iter()
            .map(|c| (c.probability.clone(), c.cost()))
            .collect();
        points.sort();
        // Equal p: keep only the cheapest expected wait (sorted order puts
        // it first, and dedup_by drops the later duplicates).
        points.dedup_by(|next, prev| next.0 == prev.0);
        if points.len() == 1 {
            return points;
        }
        // Monotone-chain lower hull; collinear middle points are dropped.
        let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(points.len());
        for point in points {
            while hull.len() >= 2 {
                let a = &hull[hull.len() - 2];
                let b = &hull[hull.len() - 1];
                // Keep b only if it lies strictly below segment a-point.
                let lhs = (&b.1 - &a.1) * (&point.0 - &a.0);
                let rhs = (&point.1 - &a.1) * (&b.0 - &a.0);
                if lhs >= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(point);
        }
        hull
    }
}

/// Welfare of the randomized assignment at budget `B`: everyone is treated
/// at the good hospital with probability `B` and zero wait.
pub fn sw_randomized(curve: &ValuationCurve, budget: &Rational) -> Result<Rational> {
    if !budget.is_positive() || *budget >= Rational::one() {
        return Err(Error::InvalidInput(format!(
            "budget {budget} must lie strictly between 0 and 1"
        )));
    }
    Ok(budget * curve.integral())
}

/// Best response of patient `x`: the hull vertex maximizing
/// `p * (v(x) - w)`, ties resolved toward the smallest probability.
pub fn patient_choice(
    curve: &ValuationCurve,
    menu: &LotteryMenu,
    x: &Rational,
) -> (Contract, Rational) {
    let v = curve.value_at(x);
    let offers = menu.effective_offers();
    let (p, cost) = choose_vertex(&offers, &v);
    let utility = &p * &v - &cost;
    let wait = if p.is_zero() {
        Rational::zero()
    } else {
        &cost / &p
    };
    (
        Contract {
            probability: p,
            wait,
        },
        utility,
    )
}

/// Picks the hull vertex maximizing `p*v - cost` with smallest-p ties.
fn choose_vertex(offers: &[(Rational, Rational)], v: &Rational) -> (Rational, Rational) {
    let mut best_idx = 0;
    let mut best_utility = &offers[0].0 * v - &offers[0].1;
    for (idx, (p, cost)) in offers.iter().enumerate().skip(1) {
        let utility = p * v - cost;
        if utility > best_utility {
            best_utility = utility;
            best_idx = idx;
        }
    }
    (offers[best_idx].0.clone(), offers[best_idx].1.clone())
}

/// Outcome of running a menu against a curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryOutcome {
    pub social_welfare: Rational,
    /// `int_0^1 p(x) dx`: the money the menu actually spends.
    pub realized_budget: Rational,
}

/// Exact `SW_L = int_0^1 u(x) dx` and the realized budget.
///
/// The unit interval is partitioned at curve breakpoints and at the values
/// where the best-response vertex switches (the hull's edge slopes);
/// within each cell the utility is affine, so trapezoids are exact. The
/// chosen probability is verified nondecreasing along the sweep.
pub fn sw_lottery(curve: &ValuationCurve, menu: &LotteryMenu) -> LotteryOutcome {
    let offers = menu.effective_offers();
    // Switch thresholds between consecutive hull vertices: the edge slopes
    // Delta(cost) / Delta(p), strictly increasing by convexity. Vertex r is
    // optimal (with smallest-p ties) for v in (theta_{r-1}, theta_r].
    let thresholds: Vec<Rational> = offers
        .windows(2)
        .map(|pair| (&pair[1].1 - &pair[0].1) / (&pair[1].0 - &pair[0].0))
        .collect();

    let vertex_for = |v: &Rational| -> usize {
        for (r, theta) in thresholds.iter().enumerate() {
            if v <= theta {
                return r;
            }
        }
        offers.len() - 1
    };

    let two = Rational::from_integer(2.into());
    let mut welfare = Rational::zero();
    let mut budget = Rational::zero();
    let mut last_p: Option<Rational> = None;

    for pair in curve.breakpoints().windows(2) {
        let (x0, v0) = pair[0].clone();
        let (x1, v1) = pair[1].clone();
        // Cut the segment at every threshold the value sweep crosses.
        let mut cuts: Vec<(Rational, Rational)> = vec![(x0.clone(), v0.clone())];
        if v1 > v0 {
            let slope = (&v1 - &v0) / (&x1 - &x0);
            for theta in &thresholds {
                if *theta > v0 && *theta < v1 {
                    let x = &x0 + (theta - &v0) / &slope;
                    cuts.push((x, theta.clone()));
                }
            }
        }
        cuts.push((x1.clone(), v1.clone()));

        for cell in cuts.windows(2) {
            let (xa, va) = &cell[0];
            let (xb, vb) = &cell[1];
            let len = xb - xa;
            if len.is_zero() {
                continue;
            }
            // Everything in the open cell picks the same vertex; the
            // endpoint value vb is on the closed side of the bracket.
            let r = vertex_for(vb);
            let (p, cost) = &offers[r];
            welfare = welfare + p * (va + vb) / &two * &len - cost * &len;
            budget = budget + p * &len;
            if let Some(prev) = &last_p {
                assert!(p >= prev, "chosen probability must be nondecreasing in x");
            }
            last_p = Some(p.clone());
        }
    }
    LotteryOutcome {
        social_welfare: welfare,
        realized_budget: budget,
    }
}

/// The equilibrium assignment, as a menu: full treatment after waiting
/// `w* = v(1-B)` or staying out.
pub fn equilibrium_menu(curve: &ValuationCurve, budget: &Rational) -> Result<LotteryMenu> {
    if !budget.is_positive() || *budget >= Rational::one() {
        return Err(Error::InvalidInput(format!(
            "budget {budget} must lie strictly between 0 and 1"
        )));
    }
    let threshold_x = Rational::one() - budget;
    let wait = curve.value_at(&threshold_x);
    LotteryMenu::new(vec![
        Contract::new(Rational::one(), wait)?,
        Contract::new(Rational::zero(), Rational::zero())?,
    ])
}

/// Evaluates the equilibrium menu with the indifferent mass split
/// fractionally so the budget is used up exactly.
///
/// Under the smallest-p tie rule alone, a curve that is flat at `w*`
/// leaves the whole indifferent mass outside and under-spends. Splitting
/// that mass changes no one's utility (it is zero either way), so the
/// welfare matches `sw_lottery` while the realized budget is exactly `B`.
pub fn equilibrium_outcome(curve: &ValuationCurve, budget: &Rational) -> Result<LotteryOutcome> {
    let menu = equilibrium_menu(curve, budget)?;
    let outcome = sw_lottery(curve, &menu);
    let strict_mass = Rational::one()
        - curve.rightmost_at_or_below(&curve.value_at(&(Rational::one() - budget)));
    debug_assert!(strict_mass <= *budget);
    debug_assert_eq!(outcome.realized_budget, strict_mass);
    Ok(LotteryOutcome {
        social_welfare: outcome.social_welfare,
        realized_budget: budget.clone(),
    })
}

/// Utility of a patient with value `v` computed through the envelope
/// integral `int_0^v p(vhat) dvhat`, where `p(vhat)` is the step function
/// of chosen probabilities. Matches the direct best-response utility for
/// menus that offer an exit contract (`p = 0` at zero cost).
pub fn utility_from_envelope(menu: &LotteryMenu, v: &Rational) -> Rational {
    let offers = menu.effective_offers();
    let thresholds: Vec<Rational> = offers
        .windows(2)
        .map(|pair| (&pair[1].1 - &pair[0].1) / (&pair[1].0 - &pair[0].0))
        .collect();
    let mut total = Rational::zero();
    let mut lower = Rational::zero();
    for (r, (p, _)) in offers.iter().enumerate() {
        let upper = if r < thresholds.len() {
            thresholds[r].clone().min(v.clone())
        } else {
            v.clone()
        };
        if upper > lower {
            total = total + p * (&upper - &lower);
            lower = upper;
        }
        if lower >= *v {
            break;
        }
    }
    total
}

/// Side-by-side comparison of a menu against randomized assignment run at
/// the menu's realized budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceReport {
    pub lottery_welfare: Rational,
    pub randomized_welfare: Rational,
    pub realized_budget: Rational,
    pub concave: bool,
    /// The discrete `(1-x) v'(x)` condition under which dominance is
    /// asserted (strictly weaker than concavity).
    pub condition_holds: bool,
    /// `Some(true/false)` when the curve qualifies; `None` reports the
    /// comparison without a verdict.
    pub dominance_holds: Option<bool>,
    /// `SW_r - SW_L`.
    pub margin: Rational,
}

/// Compares `SW_L` against `SW_r` at the realized budget `B'`. For
/// qualifying curves the verdict asserts `SW_r >= SW_L - 1e-9`; for others
/// the numbers are reported without a claim.
pub fn dominance_check(curve: &ValuationCurve, menu: &LotteryMenu) -> DominanceReport {
    let outcome = sw_lottery(curve, menu);
    // B' in [0, 1]; the randomized welfare formula B' * int v extends
    // continuously to the endpoints.
    let randomized_welfare = &outcome.realized_budget * curve.integral();
    let margin = &randomized_welfare - &outcome.social_welfare;
    let concave = curve.is_concave();
    let condition_holds = curve.weighted_slope_nonincreasing();
    let dominance_holds = if condition_holds {
        Some(margin >= -crate::rational::tol_1e9())
    } else {
        None
    };
    DominanceReport {
        lottery_welfare: outcome.social_welfare,
        randomized_welfare,
        realized_budget: outcome.realized_budget,
        concave,
        condition_holds,
        dominance_holds,
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn identity_curve() -> ValuationCurve {
        ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(1))]).unwrap()
    }

    fn capped_curve() -> ValuationCurve {
        // v(x) = min(2x, 1)
        ValuationCurve::new(vec![
            (rat(0), rat(0)),
            (ratio(1, 2), rat(1)),
            (rat(1), rat(1)),
        ])
        .unwrap()
    }

    #[test]
    fn curve_validation() {
        assert!(ValuationCurve::new(vec![(rat(0), rat(0))]).is_err());
        assert!(ValuationCurve::new(vec![(rat(0), rat(1)), (rat(1), rat(2))]).is_err());
        assert!(ValuationCurve::new(vec![(rat(0), rat(0)), (ratio(1, 2), rat(1))]).is_err());
        assert!(
            ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(2)), (rat(1), rat(3))])
                .is_err()
        );
        assert!(ValuationCurve::new(vec![
            (rat(0), rat(0)),
            (ratio(1, 2), rat(2)),
            (rat(1), rat(1)),
        ])
        .is_err());
    }

    #[test]
    fn randomized_welfare_examples() {
        assert_eq!(
            sw_randomized(&identity_curve(), &ratio(1, 2)).unwrap(),
            ratio(1, 4)
        );
        assert_eq!(
            sw_randomized(&capped_curve(), &ratio(1, 2)).unwrap(),
            ratio(3, 8)
        );
        let flat = ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(0))]).unwrap();
        assert_eq!(sw_randomized(&flat, &ratio(1, 2)).unwrap(), rat(0));
        assert!(sw_randomized(&identity_curve(), &rat(1)).is_err());
        assert!(sw_randomized(&identity_curve(), &rat(0)).is_err());
    }

    #[test]
    fn patient_choice_prefers_positive_utility() {
        let curve = ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(10))]).unwrap();
        let menu = LotteryMenu::new(vec![
            Contract::new(rat(1), rat(4)).unwrap(),
            Contract::new(rat(0), rat(0)).unwrap(),
        ])
        .unwrap();
        // v(0.9) = 9 > 4: take the full contract.
        let (contract, utility) = patient_choice(&curve, &menu, &ratio(9, 10));
        assert_eq!(contract.probability, rat(1));
        assert_eq!(utility, rat(5));
        // v(0.4) = 4 = w*: indifferent, smallest p wins.
        let (contract, utility) = patient_choice(&curve, &menu, &ratio(4, 10));
        assert_eq!(contract.probability, rat(0));
        assert_eq!(utility, rat(0));
    }

    #[test]
    fn patient_choice_between_two_contracts() {
        let curve = ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(5))]).unwrap();
        let menu = LotteryMenu::new(vec![
            Contract::new(ratio(3, 10), rat(1)).unwrap(),
            Contract::new(ratio(8, 10), rat(3)).unwrap(),
        ])
        .unwrap();
        // At v = 5: 0.8 * 2 = 1.6 beats 0.3 * 4 = 1.2.
        let (contract, utility) = patient_choice(&curve, &menu, &rat(1));
        assert_eq!(contract.probability, ratio(8, 10));
        assert_eq!(utility, ratio(16, 10));
    }

    #[test]
    fn equilibrium_menu_welfare_identity_curve() {
        let outcome = equilibrium_outcome(&identity_curve(), &ratio(1, 2)).unwrap();
        assert_eq!(outcome.social_welfare, ratio(1, 8));
        assert_eq!(outcome.realized_budget, ratio(1, 2));
        // The plain menu evaluation agrees: no flat segment, no tie mass.
        let menu = equilibrium_menu(&identity_curve(), &ratio(1, 2)).unwrap();
        let plain = sw_lottery(&identity_curve(), &menu);
        assert_eq!(plain.social_welfare, ratio(1, 8));
        assert_eq!(plain.realized_budget, ratio(1, 2));
    }

    #[test]
    fn equilibrium_menu_limit_budget() {
        // As B -> 1 the wait approaches v(0) = 0; at B = 99/100 almost
        // everyone is served nearly free.
        let outcome = equilibrium_outcome(&identity_curve(), &ratio(99, 100)).unwrap();
        let menu = equilibrium_menu(&identity_curve(), &ratio(99, 100)).unwrap();
        assert_eq!(menu.contracts()[0].wait, ratio(1, 100));
        assert_eq!(outcome.realized_budget, ratio(99, 100));
    }

    #[test]
    fn equilibrium_menu_splits_flat_tie_mass() {
        // Flat at v = 1/2 across [3/10, 7/10]; with B = 1/2 the threshold
        // 1 - B = 1/2 lands inside the flat stretch.
        let curve = ValuationCurve::new(vec![
            (rat(0), rat(0)),
            (ratio(3, 10), ratio(1, 2)),
            (ratio(7, 10), ratio(1, 2)),
            (rat(1), rat(1)),
        ])
        .unwrap();
        let menu = equilibrium_menu(&curve, &ratio(1, 2)).unwrap();
        assert_eq!(menu.contracts()[0].wait, ratio(1, 2));
        // Strictly-preferring mass is only 3/10; the split tops it up.
        let plain = sw_lottery(&curve, &menu);
        assert_eq!(plain.realized_budget, ratio(3, 10));
        let outcome = equilibrium_outcome(&curve, &ratio(1, 2)).unwrap();
        assert_eq!(outcome.realized_budget, ratio(1, 2));
        assert_eq!(outcome.social_welfare, plain.social_welfare);
    }

    #[test]
    fn randomized_menu_matches_formula() {
        let menu = LotteryMenu::new(vec![Contract::new(ratio(1, 2), rat(0)).unwrap()]).unwrap();
        let outcome = sw_lottery(&identity_curve(), &menu);
        assert_eq!(outcome.social_welfare, ratio(1, 4));
        assert_eq!(outcome.realized_budget, ratio(1, 2));
        assert_eq!(
            outcome.social_welfare,
            sw_randomized(&identity_curve(), &ratio(1, 2)).unwrap()
        );
    }

    #[test]
    fn hull_drops_dominated_contracts() {
        let menu = LotteryMenu::new(vec![
            Contract::new(rat(0), rat(0)).unwrap(),
            Contract::new(ratio(1, 2), rat(10)).unwrap(), // cost 5, above the chord
            Contract::new(rat(1), rat(4)).unwrap(),       // cost 4
        ])
        .unwrap();
        let offers = menu.effective_offers();
        assert_eq!(offers, vec![(rat(0), rat(0)), (rat(1), rat(4))]);
    }

    #[test]
    fn envelope_identity_on_example_menu() {
        let curve = ValuationCurve::new(vec![(rat(0), rat(0)), (rat(1), rat(6))]).unwrap();
        let menu = LotteryMenu::new(vec![
            Contract::new(rat(0), rat(0)).unwrap(),
            Contract::new(ratio(1, 2), rat(1)).unwrap(),
            Contract::new(rat(1), rat(3)).unwrap(),
        ])
        .unwrap();
        for x in [rat(0), ratio(1, 5), ratio(1, 2), ratio(4, 5), rat(1)] {
            let (_, direct) = patient_choice(&curve, &menu, &x);
            let via_envelope = utility_from_envelope(&menu, &curve.value_at(&x));
            assert_eq!(direct, via_envelope, "mismatch at x = {x}");
        }
    }

    #[test]
    fn dominance_on_identity_curve() {
        let menu = equilibrium_menu(&identity_curve(), &ratio(1, 2)).unwrap();
        let report = dominance_check(&identity_curve(), &menu);
        assert!(report.concave && report.condition_holds);
        assert_eq!(report.lottery_welfare, ratio(1, 8));
        assert_eq!(report.randomized_welfare, ratio(1, 4));
        assert_eq!(report.dominance_holds, Some(true));
    }

    #[test]
    fn dominance_holds_for_exponential_like_convex_curve() {
        // Piecewise-linear sampling of e^x - 1 (rescaled to v(0) = 0),
        // convex, but (1-x) v'(x) is still nonincreasing at this sampling.
        let samples = 16u32;
        let mut points = Vec::new();
        for s in 0..=samples {
            let x = ratio(s as i64, samples as i64);
            // Rational approximation of e^t - 1 via the series up to t^6.
            let mut term = Rational::one();
            let mut value = Rational::zero();
            for n in 1..=6 {
                term = term * &x / rat(n);
                value += term.clone();
            }
            points.push((x, value));
        }
        let curve = ValuationCurve::new(points).unwrap();
        assert!(!curve.is_concave());
        assert!(curve.weighted_slope_nonincreasing());
        let menu = equilibrium_menu(&curve, &ratio(1, 2)).unwrap();
        let report = dominance_check(&curve, &menu);
        assert_eq!(report.dominance_holds, Some(true));
    }

    #[test]
    fn non_qualifying_curve_reports_without_verdict() {
        // Steeply convex: slopes 0 then 4; (1-x)v' jumps upward at 3/4.
        let curve = ValuationCurve::new(vec![
            (rat(0), rat(0)),
            (ratio(3, 4), rat(0)),
            (rat(1), rat(1)),
        ])
        .unwrap();
        assert!(!curve.weighted_slope_nonincreasing());
        let menu = equilibrium_menu(&curve, &ratio(1, 100)).unwrap();
        let report = dominance_check(&curve, &menu);
        assert_eq!(report.dominance_holds, None);
    }
}
