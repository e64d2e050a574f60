//! Bidder-optimal stable matching for unit-demand auctions with integer
//! valuations, and the bridge between quota vectors and auctions.
//!
//! The matcher is an ascending-price procedure over integer prices: start
//! at zero, repeatedly locate a minimal overdemanded set of goods in the
//! demand graph, and raise its prices by one. With integer valuations this
//! terminates at the componentwise-minimal stable price vector, whose
//! matching maximizes every bidder's utility simultaneously. Reserve and
//! maximum prices are deliberately absent; without maximum prices a
//! bidder-optimal matching always exists.

use crate::error::Error;
use crate::model::{Assignment, Instance};
use crate::rational::rat;
use crate::Result;

/// Identifies which hospital a good is a copy of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoodLabel {
    pub hospital: usize,
    pub copy: usize,
}

/// A unit-demand auction: `g` goods, `m` bidders, and a `g x m` integer
/// valuation matrix. Goods carry hospital labels; goods with the same
/// hospital label must have identical valuation rows.
#[derive(Debug, Clone)]
pub struct Auction {
    /// `valuations[i][j]` is bidder `j`'s value for good `i`.
    valuations: Vec<Vec<i64>>,
    labels: Vec<GoodLabel>,
}

impl Auction {
    pub fn new(valuations: Vec<Vec<i64>>, labels: Vec<GoodLabel>) -> Result<Self> {
        if valuations.is_empty() {
            return Err(Error::InvalidInput("auction needs at least one good".into()));
        }
        if labels.len() != valuations.len() {
            return Err(Error::InvalidInput("one label per good required".into()));
        }
        let m = valuations[0].len();
        if m == 0 {
            return Err(Error::InvalidInput("auction needs at least one bidder".into()));
        }
        for row in &valuations {
            if row.len() != m {
                return Err(Error::InvalidInput("ragged valuation matrix".into()));
            }
            if row.iter().any(|&v| v < 0) {
                return Err(Error::InvalidInput("negative valuation".into()));
            }
        }
        let auction = Self { valuations, labels };
        for (a, la) in auction.labels.iter().enumerate() {
            for (b, lb) in auction.labels.iter().enumerate() {
                if la.hospital == lb.hospital && auction.valuations[a] != auction.valuations[b] {
                    return Err(Error::InvalidInput(format!(
                        "goods {a} and {b} share hospital {} but differ in valuations",
                        la.hospital
                    )));
                }
            }
        }
        Ok(auction)
    }

    pub fn num_goods(&self) -> usize {
        self.valuations.len()
    }

    pub fn num_bidders(&self) -> usize {
        self.valuations[0].len()
    }

    pub fn value(&self, good: usize, bidder: usize) -> i64 {
        self.valuations[good][bidder]
    }

    pub fn labels(&self) -> &[GoodLabel] {
        &self.labels
    }
}

/// A matching outcome: utilities per bidder, prices per good, and the
/// matched (good, bidder) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub utilities: Vec<i64>,
    pub prices: Vec<i64>,
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn good_of(&self, bidder: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(_, j)| j == bidder).map(|&(i, _)| i)
    }

    pub fn bidder_of(&self, good: usize) -> Option<usize> {
        self.pairs.iter().find(|&&(i, _)| i == good).map(|&(_, j)| j)
    }

    /// Sum of bidder utilities; equals the social welfare of the extracted
    /// assignment.
    pub fn total_utility(&self) -> i64 {
        self.utilities.iter().sum()
    }
}

/// Per-round working state: current demand sets under the running prices.
struct Demand {
    /// `best[j] = max_i v_ij - p_i` (may be negative).
    best: Vec<i64>,
    /// Goods attaining `best[j]`, for bidders with `best[j] >= 0`.
    sets: Vec<Vec<usize>>,
}

fn demand_at(auction: &Auction, prices: &[i64]) -> Demand {
    let g = auction.num_goods();
    let m = auction.num_bidders();
    let mut best = vec![i64::MIN; m];
    let mut sets = vec![Vec::new(); m];
    for j in 0..m {
        for i in 0..g {
            let u = auction.value(i, j) - prices[i];
            if u > best[j] {
                best[j] = u;
                sets[j].clear();
                sets[j].push(i);
            } else if u == best[j] {
                sets[j].push(i);
            }
        }
        if best[j] < 0 {
            sets[j].clear();
        }
    }
    Demand { best, sets }
}

/// Kuhn's augmenting-path matching restricted to the given bidders.
/// `good_of[i]` / `bidder_of` style arrays use `usize::MAX` as "free".
fn max_matching(demand: &Demand, bidders: &[usize], g: usize) -> (Vec<usize>, Vec<usize>) {
    const FREE: usize = usize::MAX;
    let m = demand.sets.len();
    let mut matched_good = vec![FREE; m]; // bidder -> good
    let mut matched_bidder = vec![FREE; g]; // good -> bidder

    fn try_augment(
        j: usize,
        demand: &Demand,
        matched_good: &mut [usize],
        matched_bidder: &mut [usize],
        visited: &mut [bool],
    ) -> bool {
        for &i in &demand.sets[j] {
            if visited[i] {
                continue;
            }
            visited[i] = true;
            if matched_bidder[i] == usize::MAX
                || try_augment(matched_bidder[i], demand, matched_good, matched_bidder, visited)
            {
                matched_good[j] = i;
                matched_bidder[i] = j;
                return true;
            }
        }
        false
    }

    for &j in bidders {
        let mut visited = vec![false; g];
        try_augment(j, demand, &mut matched_good, &mut matched_bidder, &mut visited);
    }
    (matched_good, matched_bidder)
}

/// Goods reachable from an unmatched bidder by alternating (demand edge,
/// matched edge) walks; under a maximum matching this is a minimal
/// overdemanded set.
fn overdemanded_set(
    demand: &Demand,
    start: usize,
    matched_bidder: &[usize],
    g: usize,
) -> Vec<usize> {
    let mut in_set = vec![false; g];
    let mut queue = vec![start];
    let mut seen_bidder = vec![false; demand.sets.len()];
    seen_bidder[start] = true;
    while let Some(j) = queue.pop() {
        for &i in &demand.sets[j] {
            if in_set[i] {
                continue;
            }
            in_set[i] = true;
            let owner = matched_bidder[i];
            if owner != usize::MAX && !seen_bidder[owner] {
                seen_bidder[owner] = true;
                queue.push(owner);
            }
        }
    }
    (0..g).filter(|&i| in_set[i]).collect()
}

/// Computes the bidder-optimal matching: stable, feasible, and maximizing
/// every bidder's utility over all stable weakly-feasible matchings. Output
/// prices and utilities are integers; identical goods get equal prices; and
/// when there are at least as many goods as bidders, every bidder ends up
/// matched.
pub fn stable_match(auction: &Auction) -> Matching {
    const FREE: usize = usize::MAX;
    let g = auction.num_goods();
    let m = auction.num_bidders();
    let mut prices = vec![0i64; g];

    let demand = loop {
        let demand = demand_at(auction, &prices);
        // Bidders with strictly positive utility must be matched within
        // their demand set; everyone else tolerates being unmatched.
        let strict: Vec<usize> = (0..m).filter(|&j| demand.best[j] > 0).collect();
        let (matched_good, matched_bidder) = max_matching(&demand, &strict, g);
        match strict.iter().find(|&&j| matched_good[j] == FREE) {
            None => break demand,
            Some(&j0) => {
                for i in overdemanded_set(&demand, j0, &matched_bidder, g) {
                    prices[i] += 1;
                }
            }
        }
    };

    // Final construction. Stage A: all strict bidders matched.
    let strict: Vec<usize> = (0..m).filter(|&j| demand.best[j] > 0).collect();
    let (mut matched_good, mut matched_bidder) = max_matching(&demand, &strict, g);
    assert!(
        strict.iter().all(|&j| matched_good[j] != FREE),
        "no overdemanded set, yet a strict bidder stayed unmatched"
    );

    // Stage B: every positively priced good must be sold. Walk alternating
    // paths from the unsold good; success is reaching a free bidder
    // (augment) or a sold zero-price good (relocate, freeing it instead).
    for start in 0..g {
        if prices[start] == 0 || matched_bidder[start] != FREE {
            continue;
        }
        let mut parent_good: Vec<Option<(usize, usize)>> = vec![None; g]; // good -> (prev good, bidder)
        let mut seen_good = vec![false; g];
        seen_good[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut terminal: Option<(usize, usize)> = None; // (good, bidder taking it)
        'search: while let Some(i) = queue.pop_front() {
            for j in 0..m {
                if demand.best[j] < 0 || !demand.sets[j].contains(&i) {
                    continue;
                }
                let next = matched_good[j];
                if next == FREE {
                    terminal = Some((i, j));
                    break 'search;
                }
                if !seen_good[next] {
                    seen_good[next] = true;
                    parent_good[next] = Some((i, j));
                    if prices[next] == 0 {
                        // Shift the chain onto `next`'s bidder, leaving the
                        // zero-price good unsold.
                        terminal = Some((i, matched_bidder[next]));
                        break 'search;
                    }
                    queue.push_back(next);
                }
            }
        }
        let (mut good, mut bidder) =
            terminal.expect("minimal stable prices always admit a feasible matching");
        // In the relocation case the terminal bidder abandons a zero-price
        // good outside the chain; release it before re-linking.
        if matched_good[bidder] != FREE {
            matched_bidder[matched_good[bidder]] = FREE;
        }
        loop {
            let prev = parent_good[good];
            matched_good[bidder] = good;
            matched_bidder[good] = bidder;
            match prev {
                None => break,
                Some((prev_good, prev_bidder)) => {
                    good = prev_good;
                    bidder = prev_bidder;
                }
            }
        }
        debug_assert!(matched_bidder[start] != FREE);
    }

    // Stage C: pad remaining bidders with unsold goods. Stability forces
    // the value of any such pair to zero, so pairing keeps utilities exact.
    let spare_goods: Vec<usize> = (0..g).filter(|&i| matched_bidder[i] == FREE).collect();
    let mut spare_goods = spare_goods.into_iter();
    for j in 0..m {
        if matched_good[j] != FREE {
            continue;
        }
        if let Some(i) = spare_goods.next() {
            assert_eq!(
                auction.value(i, j) - prices[i],
                0,
                "padding pair would change bidder {j}'s utility"
            );
            matched_good[j] = i;
            matched_bidder[i] = j;
        }
    }

    let utilities: Vec<i64> = (0..m).map(|j| demand.best[j].max(0)).collect();
    let pairs: Vec<(usize, usize)> = (0..g)
        .filter(|&i| matched_bidder[i] != FREE)
        .map(|i| (i, matched_bidder[i]))
        .collect();
    let matching = Matching {
        utilities,
        prices,
        pairs,
    };
    assert_valid(auction, &matching);
    matching
}

/// Checks every structural matching invariant, panicking on violation.
/// Run on every `stable_match` output; cheap relative to the search.
fn assert_valid(auction: &Auction, matching: &Matching) {
    let g = auction.num_goods();
    let m = auction.num_bidders();
    let mut good_used = vec![false; g];
    let mut bidder_used = vec![false; m];
    for &(i, j) in &matching.pairs {
        assert!(!good_used[i] && !bidder_used[j], "good or bidder matched twice");
        good_used[i] = true;
        bidder_used[j] = true;
        assert_eq!(
            matching.utilities[j],
            auction.value(i, j) - matching.prices[i],
            "matched pair utility mismatch"
        );
    }
    for j in 0..m {
        if !bidder_used[j] {
            assert_eq!(matching.utilities[j], 0, "unmatched bidder with nonzero utility");
        }
    }
    for i in 0..g {
        if !good_used[i] {
            assert_eq!(matching.prices[i], 0, "unsold good with positive price");
        }
    }
    for i in 0..g {
        for j in 0..m {
            assert!(
                matching.utilities[j] >= auction.value(i, j) - matching.prices[i],
                "unstable: bidder {j} envies good {i}"
            );
        }
    }
    if g >= m {
        assert!(bidder_used.iter().all(|&b| b), "unmatched bidder despite g >= m");
    }
    // Identical goods (same hospital label) must carry equal prices.
    for a in 0..g {
        for b in (a + 1)..g {
            if auction.labels[a].hospital == auction.labels[b].hospital {
                assert_eq!(
                    matching.prices[a], matching.prices[b],
                    "identical goods priced differently"
                );
            }
        }
    }
}

/// Expands a quota vector into an auction: hospital `i` contributes
/// `quotas[i]` identical goods carrying its valuation column.
pub fn auction_from_quotas(instance: &Instance, quotas: &[u64]) -> Result<Auction> {
    if quotas.len() != instance.num_hospitals() {
        return Err(Error::InvalidInput(format!(
            "{} quotas for {} hospitals",
            quotas.len(),
            instance.num_hospitals()
        )));
    }
    if quotas.iter().all(|&q| q == 0) {
        return Err(Error::InvalidInput("quota vector is all zero".into()));
    }
    let m = instance.num_patients();
    let mut valuations = Vec::new();
    let mut labels = Vec::new();
    for (i, &q) in quotas.iter().enumerate() {
        let row: Vec<i64> = (0..m).map(|j| instance.value(j, i) as i64).collect();
        for copy in 0..q as usize {
            valuations.push(row.clone());
            labels.push(GoodLabel { hospital: i, copy });
        }
    }
    Auction::new(valuations, labels)
}

/// Reads the waiting-time vector and assignment function out of a matching
/// on a quota auction.
///
/// Hospital `i`'s wait is the price of its first copy (all copies agree).
/// Hospitals absent from the auction get the smallest wait that prices
/// them out: `max_j (v_ij - u_j)`, clamped at zero. The returned quotas are
/// the realized head counts, which never cost more than the auctioned
/// quota vector.
pub fn extract_assignment(
    instance: &Instance,
    auction: &Auction,
    matching: &Matching,
) -> Result<Assignment> {
    let m = instance.num_patients();
    let k = instance.num_hospitals();
    if auction.num_bidders() != m {
        return Err(Error::InvalidInput(format!(
            "auction has {} bidders, instance has {m} patients",
            auction.num_bidders()
        )));
    }

    let mut waits: Vec<Option<i64>> = vec![None; k];
    for (good, label) in auction.labels().iter().enumerate() {
        if label.copy == 0 {
            waits[label.hospital] = Some(matching.prices[good]);
        }
    }

    let mut hospital_of_good = vec![0usize; auction.num_goods()];
    for (good, label) in auction.labels().iter().enumerate() {
        hospital_of_good[good] = label.hospital;
    }

    let mut assignment = vec![usize::MAX; m];
    for &(i, j) in &matching.pairs {
        assignment[j] = hospital_of_good[i];
    }
    if let Some(j) = assignment.iter().position(|&h| h == usize::MAX) {
        return Err(Error::InternalInvariant(format!(
            "bidder {j} unmatched after padding"
        )));
    }

    let waiting_times: Vec<_> = waits
        .iter()
        .enumerate()
        .map(|(i, w)| match w {
            Some(p) => rat(*p),
            None => {
                let priced_out = (0..m)
                    .map(|j| instance.value(j, i) as i64 - matching.utilities[j])
                    .max()
                    .unwrap_or(0)
                    .max(0);
                rat(priced_out)
            }
        })
        .collect();

    Assignment::from_waits_and_hospitals(instance, waiting_times, assignment)
}
