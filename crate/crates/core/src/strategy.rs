//! Linear precoding strategies, transcripts and the rank-based decodability
//! test.
//!
//! Information symbols are abstract: receiver `j` owns `m_j` symbol columns
//! and the global symbol order is receiver 0's symbols, then receiver 1's,
//! and so on. A slot precoder is the `m × M` matrix mapping all `M` symbols to
//! the transmit antennas.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{csit_view, ChannelError, ChannelRealization, CsitConfig, CsitView};
use crate::exactlin::{
    format_rational, hstack_all, orthogonal_complement, rat, vstack_all, LinalgError, Rational, RationalMatrix,
};

/// Entry range for random precoder coefficients.
pub const PRECODER_RANGE: i64 = 9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("degenerate channel: {0}")]
    Degenerate(String),
    #[error("non-reproducible generator: two runs on the same channel disagree")]
    NonReproducible,
    #[error("generator failed: {0}")]
    Generator(String),
    #[error("unknown strategy kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Set of receivers as a bitmask; supports up to 64 receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ReceiverSet(u64);

impl ReceiverSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn all(k: usize) -> Self {
        assert!(k <= 64, "at most 64 receivers");
        Self(if k == 64 { u64::MAX } else { (1u64 << k) - 1 })
    }

    pub fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn singleton(j: usize) -> Self {
        Self(1 << j)
    }

    pub fn contains(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub fn with(self, j: usize) -> Self {
        Self(self.0 | 1 << j)
    }

    pub fn without(self, j: usize) -> Self {
        Self(self.0 & !(1 << j))
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&j| self.contains(j))
    }

    /// All subsets of `self`, in increasing mask order.
    pub fn subsets(self) -> Vec<ReceiverSet> {
        let mut out = Vec::with_capacity(1 << self.len());
        let mut sub = 0u64;
        loop {
            out.push(Self(sub));
            if sub == self.0 {
                break;
            }
            sub = (sub.wrapping_sub(self.0)) & self.0;
        }
        out.sort();
        out
    }
}

impl FromIterator<usize> for ReceiverSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(Self::empty(), Self::with)
    }
}

impl fmt::Display for ReceiverSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|j| j.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl Serialize for ReceiverSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

/// Precoders `V_j(t)` for every receiver and slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearStrategy {
    config: CsitConfig,
    m: usize,
    n: usize,
    symbol_counts: Vec<usize>,
    /// `precoders[t][j]` has shape `m × m_j`.
    precoders: Vec<Vec<RationalMatrix>>,
    tag: String,
}

impl LinearStrategy {
    pub fn new(
        config: CsitConfig,
        m: usize,
        symbol_counts: Vec<usize>,
        precoders: Vec<Vec<RationalMatrix>>,
        tag: impl Into<String>,
    ) -> Result<Self, StrategyError> {
        let k = config.k();
        if symbol_counts.len() != k {
            return Err(StrategyError::Dimensions(format!("{} symbol counts for {k} receivers", symbol_counts.len())));
        }
        for (t, slot) in precoders.iter().enumerate() {
            if slot.len() != k {
                return Err(StrategyError::Dimensions(format!("slot {t} has {} precoders", slot.len())));
            }
            for (j, v) in slot.iter().enumerate() {
                if v.shape() != (m, symbol_counts[j]) {
                    return Err(StrategyError::Dimensions(format!(
                        "V_{j}({t}) is {}x{}, expected {m}x{}",
                        v.rows(),
                        v.cols(),
                        symbol_counts[j]
                    )));
                }
            }
        }
        Ok(Self { config, m, n: precoders.len(), symbol_counts, precoders, tag: tag.into() })
    }

    /// Strategy that sends nothing useful: every precoder is zero.
    pub fn zero(config: CsitConfig, m: usize, n: usize, symbol_counts: Vec<usize>) -> Self {
        let precoders = (0..n)
            .map(|_| symbol_counts.iter().map(|&c| RationalMatrix::zeros(m, c)).collect())
            .collect();
        Self::new(config, m, symbol_counts, precoders, "zero").expect("consistent zero strategy")
    }

    /// Builds a strategy from whole-slot precoders of shape `m × M`.
    pub fn from_slot_precoders(
        config: CsitConfig,
        m: usize,
        symbol_counts: Vec<usize>,
        slots: &[RationalMatrix],
        tag: impl Into<String>,
    ) -> Result<Self, StrategyError> {
        let offsets = offsets(&symbol_counts);
        let total = *offsets.last().expect("offsets nonempty");
        let precoders = slots
            .iter()
            .enumerate()
            .map(|(t, w)| {
                if w.shape() != (m, total) {
                    return Err(StrategyError::Dimensions(format!(
                        "slot {t} precoder is {}x{}, expected {m}x{total}",
                        w.rows(),
                        w.cols()
                    )));
                }
                Ok((0..symbol_counts.len())
                    .map(|j| w.select_columns(&(offsets[j]..offsets[j + 1]).collect::<Vec<_>>()))
                    .collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(config, m, symbol_counts, precoders, tag)
    }

    pub fn config(&self) -> &CsitConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbol_counts(&self) -> &[usize] {
        &self.symbol_counts
    }

    pub fn total_symbols(&self) -> usize {
        self.symbol_counts.iter().sum()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn precoder(&self, j: usize, t: usize) -> &RationalMatrix {
        &self.precoders[t][j]
    }

    /// `m × M` precoder of slot `t`.
    pub fn slot_precoder(&self, t: usize) -> RationalMatrix {
        hstack_all(self.m, &self.precoders[t]).expect("shapes checked at construction")
    }

    /// `V_j^n`: the `nm × m_j` stack of all slot precoders of receiver `j`.
    pub fn stacked(&self, j: usize) -> RationalMatrix {
        let parts: Vec<RationalMatrix> = (0..self.n).map(|t| self.precoders[t][j].clone()).collect();
        vstack_all(self.symbol_counts[j], &parts).expect("shapes checked at construction")
    }

    /// First symbol column of each receiver, plus the total at the end.
    pub fn symbol_offsets(&self) -> Vec<usize> {
        offsets(&self.symbol_counts)
    }
}

fn offsets(counts: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(counts.len() + 1);
    let mut acc = 0;
    out.push(0);
    for &c in counts {
        acc += c;
        out.push(acc);
    }
    out
}

/// A precoding rule that only ever sees the transmitter's view of the
/// channel.
pub trait CausalPolicy {
    /// Slot precoder (`m × M`) for slot `view.t()`. `past` holds the slot
    /// precoders already emitted.
    fn precode(&mut self, view: &CsitView, past: &[RationalMatrix]) -> Result<RationalMatrix, StrategyError>;
}

/// Runs a policy slot by slot, feeding it only the permitted view.
pub fn run_policy(
    config: &CsitConfig,
    realization: &ChannelRealization,
    symbol_counts: Vec<usize>,
    policy: &mut dyn CausalPolicy,
    tag: impl Into<String>,
) -> Result<LinearStrategy, StrategyError> {
    if config.k() != realization.k() {
        return Err(StrategyError::Dimensions(format!(
            "config has {} receivers, channel has {}",
            config.k(),
            realization.k()
        )));
    }
    let mut slots = Vec::with_capacity(realization.n());
    for t in 0..realization.n() {
        let view = csit_view(config, realization, t);
        let w = policy.precode(&view, &slots)?;
        slots.push(w);
    }
    LinearStrategy::from_slot_precoders(config.clone(), realization.m(), symbol_counts, &slots, tag)
}

/// A strategy evaluated on a channel realization.
#[derive(Debug)]
pub struct Transcript {
    strategy: LinearStrategy,
    realization: ChannelRealization,
    offsets: Vec<usize>,
    /// `products[j] = G_j^n [V_1^n … V_k^n]`, shape `n × M`.
    products: Vec<RationalMatrix>,
    rank_memo: Mutex<HashMap<(usize, u64), usize>>,
}

impl Clone for Transcript {
    fn clone(&self) -> Self {
        Self {
            strategy: self.strategy.clone(),
            realization: self.realization.clone(),
            offsets: self.offsets.clone(),
            products: self.products.clone(),
            rank_memo: Mutex::new(self.rank_memo.lock().expect("memo lock").clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DecodabilityRecord {
    pub receiver: usize,
    pub symbols: usize,
    pub achieved: bool,
    pub lhs_rank: usize,
    pub interference_rank: usize,
    pub own_rank: usize,
}

pub fn assemble(strategy: &LinearStrategy, realization: &ChannelRealization) -> Result<Transcript, StrategyError> {
    Transcript::new(strategy.clone(), realization.clone())
}

impl Transcript {
    pub fn new(strategy: LinearStrategy, realization: ChannelRealization) -> Result<Self, StrategyError> {
        if strategy.k() != realization.k() || strategy.m() != realization.m() || strategy.n() != realization.n() {
            return Err(StrategyError::Dimensions(format!(
                "strategy (k={}, m={}, n={}) vs channel (k={}, m={}, n={})",
                strategy.k(),
                strategy.m(),
                strategy.n(),
                realization.k(),
                realization.m(),
                realization.n()
            )));
        }
        let total = strategy.total_symbols();
        let slot_precoders: Vec<RationalMatrix> = (0..strategy.n()).map(|t| strategy.slot_precoder(t)).collect();
        let products = (0..strategy.k())
            .map(|j| {
                let rows: Vec<Vec<Rational>> = slot_precoders
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w.left_mul_vector(realization.g(j, t)))
                    .collect::<Result<_, _>>()?;
                Ok(RationalMatrix::from_rows(total, &rows)?)
            })
            .collect::<Result<Vec<_>, StrategyError>>()?;
        Ok(Self {
            offsets: strategy.symbol_offsets(),
            strategy,
            realization,
            products,
            rank_memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn strategy(&self) -> &LinearStrategy {
        &self.strategy
    }

    pub fn realization(&self) -> &ChannelRealization {
        &self.realization
    }

    pub fn config(&self) -> &CsitConfig {
        self.strategy.config()
    }

    pub fn k(&self) -> usize {
        self.strategy.k()
    }

    pub fn n(&self) -> usize {
        self.strategy.n()
    }

    pub fn everyone(&self) -> ReceiverSet {
        ReceiverSet::all(self.k())
    }

    fn columns(&self, set: ReceiverSet) -> Vec<usize> {
        set.iter().filter(|&i| i < self.k()).flat_map(|i| self.offsets[i]..self.offsets[i + 1]).collect()
    }

    /// `G_j^n [∪_{i∈S} V_i^n]`, an `n × Σ_{i∈S} m_i` matrix.
    pub fn received(&self, j: usize, set: ReceiverSet) -> RationalMatrix {
        self.products[j].select_columns(&self.columns(set))
    }

    /// `[∪_{i∈S} V_i(t)]`, the slot-`t` precoder restricted to the symbols of
    /// `set` (`m × Σ_{i∈S} m_i`).
    pub fn slot_precoder(&self, t: usize, set: ReceiverSet) -> RationalMatrix {
        self.strategy.slot_precoder(t).select_columns(&self.columns(set))
    }

    /// First `rows` rows of [`Self::received`], i.e. the slots before `rows`.
    pub fn received_prefix(&self, j: usize, set: ReceiverSet, rows: usize) -> RationalMatrix {
        self.received(j, set).top_rows(rows)
    }

    /// Rank of [`Self::received`], memoized.
    pub fn received_rank(&self, j: usize, set: ReceiverSet) -> usize {
        if let Some(&r) = self.rank_memo.lock().expect("memo lock").get(&(j, set.mask())) {
            return r;
        }
        let r = self.received(j, set).rank();
        self.rank_memo.lock().expect("memo lock").insert((j, set.mask()), r);
        r
    }

    /// Rank of the received matrices of several receivers stacked vertically.
    pub fn stacked_rank(&self, receivers: &[usize], set: ReceiverSet) -> usize {
        let cols = self.columns(set).len();
        let parts: Vec<RationalMatrix> = receivers.iter().map(|&j| self.received(j, set)).collect();
        vstack_all(cols, &parts).expect("equal widths").rank()
    }

    /// Interference-free dimension actually delivered to receiver `j`.
    pub fn effective_symbols(&self, j: usize) -> usize {
        let all = self.everyone();
        self.received_rank(j, all) - self.received_rank(j, all.without(j))
    }

    pub fn check_decodability(&self) -> Vec<DecodabilityRecord> {
        let all = self.everyone();
        (0..self.k())
            .map(|j| {
                let lhs_rank = self.received_rank(j, all);
                let interference_rank = self.received_rank(j, all.without(j));
                let own_rank = self.received_rank(j, ReceiverSet::singleton(j));
                let symbols = self.strategy.symbol_counts()[j];
                DecodabilityRecord {
                    receiver: j,
                    symbols,
                    achieved: lhs_rank - interference_rank == symbols && own_rank == symbols,
                    lhs_rank,
                    interference_rank,
                    own_rank,
                }
            })
            .collect()
    }

    pub fn decodable(&self) -> bool {
        self.check_decodability().iter().all(|r| r.achieved)
    }

    /// Exact `m_j / n` per receiver.
    pub fn dof(&self) -> Vec<Rational> {
        let n = self.n() as i64;
        self.strategy.symbol_counts().iter().map(|&c| crate::exactlin::ratio(c as i64, n)).collect()
    }

    /// JSON record of the transcript; `full` adds channel and precoders.
    pub fn to_json(&self, full: bool) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "tag": self.strategy.tag(),
            "config": self.config().to_string(),
            "seed": self.realization.seed(),
            "k": self.k(),
            "m": self.strategy.m(),
            "n": self.n(),
            "symbolCounts": self.strategy.symbol_counts(),
            "dof": self.dof().iter().map(format_rational).collect::<Vec<_>>(),
            "decodability": self.check_decodability(),
        });
        if full {
            let precoders: Vec<Vec<Vec<Vec<String>>>> = (0..self.n())
                .map(|t| {
                    (0..self.k())
                        .map(|j| {
                            let v = self.strategy.precoder(j, t);
                            (0..v.rows()).map(|r| v.row(r).iter().map(format_rational).collect()).collect()
                        })
                        .collect()
                })
                .collect();
            doc["channel"] = self.realization.to_json();
            doc["precoders"] = serde_json::json!(precoders);
        }
        doc
    }
}

/// Replay audit of the causality constraint.
///
/// For each trial and each slot `t`, every coefficient the transmitter may not
/// see at `t` is redrawn and the generator rerun; the precoders of slots
/// `0..=t` must not change. A generator that gives different output on the
/// same channel twice is rejected outright.
pub fn validate_csit_compliance<F, E>(
    generator: F,
    config: &CsitConfig,
    realization: &ChannelRealization,
    seed: u64,
    trials: usize,
) -> Result<bool, StrategyError>
where
    F: Fn(&ChannelRealization) -> Result<LinearStrategy, E>,
    E: fmt::Display,
{
    const RETRIES: u64 = 16;
    let run = |r: &ChannelRealization| generator(r).map_err(|e| StrategyError::Generator(e.to_string()));
    let reference = run(realization)?;
    if run(realization)? != reference {
        return Err(StrategyError::NonReproducible);
    }
    for trial in 0..trials {
        for t in 0..realization.n() {
            let mut perturbed = None;
            for attempt in 0..RETRIES {
                let s = seed
                    .wrapping_mul(1_000_003)
                    .wrapping_add((trial * realization.n() + t) as u64)
                    .wrapping_mul(RETRIES)
                    .wrapping_add(attempt);
                let alt = realization.resample_hidden(config, t, s)?;
                // A perturbed channel may violate a generator's own genericity
                // needs; try another draw.
                if let Ok(strategy) = generator(&alt) {
                    perturbed = Some(strategy);
                    break;
                }
            }
            let Some(strategy) = perturbed else {
                return Err(StrategyError::Generator(format!("no usable perturbation at slot {t}")));
            };
            for s in 0..=t {
                for j in 0..config.k() {
                    if strategy.precoder(j, s) != reference.precoder(j, s) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Families of random CSIT-respecting strategies used as test inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomKind {
    Oblivious,
    DelayedMixing,
    ZeroForcingHybrid,
}

impl RandomKind {
    pub const ALL: [RandomKind; 3] = [RandomKind::Oblivious, RandomKind::DelayedMixing, RandomKind::ZeroForcingHybrid];

    pub fn name(self) -> &'static str {
        match self {
            RandomKind::Oblivious => "oblivious",
            RandomKind::DelayedMixing => "delayed-mixing",
            RandomKind::ZeroForcingHybrid => "zero-forcing-hybrid",
        }
    }
}

impl fmt::Display for RandomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RandomKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RandomKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| StrategyError::UnknownKind(s.to_string()))
    }
}

/// Number of random monomials added to each entry by the delayed-mixing kind.
const MIXING_TERMS: usize = 2;
const MIXING_STREAM: u64 = 0x6d69_7869_6e67;

struct RandomPolicy {
    kind: RandomKind,
    config: CsitConfig,
    counts: Vec<usize>,
    base: ChaCha8Rng,
    mixing: ChaCha8Rng,
}

impl RandomPolicy {
    fn small(rng: &mut ChaCha8Rng) -> Rational {
        rat(rng.gen_range(-PRECODER_RANGE..=PRECODER_RANGE))
    }

    fn block(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RationalMatrix {
        let entries = (0..rows * cols).map(|_| Self::small(rng)).collect();
        RationalMatrix::new(rows, cols, entries).expect("sized entries")
    }

    fn mixing_term(&mut self, past: &[&Rational]) -> Rational {
        let mut acc = Rational::zero();
        for _ in 0..MIXING_TERMS {
            let degree = self.mixing.gen_range(1..=2);
            let mut term = Self::small(&mut self.mixing);
            for _ in 0..degree {
                term *= past[self.mixing.gen_range(0..past.len())];
            }
            acc += term;
        }
        acc
    }
}

impl CausalPolicy for RandomPolicy {
    fn precode(&mut self, view: &CsitView, _past: &[RationalMatrix]) -> Result<RationalMatrix, StrategyError> {
        let m = view.m();
        let t = view.t();
        let mut blocks = Vec::with_capacity(self.counts.len());
        let p_set = self.config.p_set();
        for (j, c) in self.counts.clone().into_iter().enumerate() {
            let block = match self.kind {
                RandomKind::ZeroForcingHybrid if p_set.contains(&j) => {
                    let others: Vec<Vec<Rational>> = p_set
                        .iter()
                        .filter(|&&l| l != j)
                        .map(|&l| view.get(l, t).expect("current P channel is visible").to_vec())
                        .collect();
                    let g = RationalMatrix::from_rows(m, &others)?;
                    let comp = orthogonal_complement(&g)
                        .map_err(|e| StrategyError::Degenerate(format!("slot {t}, receiver {j}: {e}")))?;
                    let r = Self::block(&mut self.base, comp.rows(), c);
                    comp.transpose().mul(&r)?
                }
                RandomKind::Oblivious | RandomKind::ZeroForcingHybrid => Self::block(&mut self.base, m, c),
                RandomKind::DelayedMixing => {
                    let mut v = Self::block(&mut self.base, m, c);
                    let past: Vec<&Rational> = view.past_rows().flatten().collect();
                    if !past.is_empty() {
                        for r in 0..m {
                            for col in 0..c {
                                let extra = self.mixing_term(&past);
                                let cur = v.get(r, col) + extra;
                                v.set(r, col, cur);
                            }
                        }
                    }
                    v
                }
            };
            blocks.push(block);
        }
        Ok(hstack_all(m, &blocks)?)
    }
}

/// Random strategy of the given kind, built causally from CSIT views only.
pub fn random_strategy(
    config: &CsitConfig,
    kind: RandomKind,
    symbol_counts: &[usize],
    realization: &ChannelRealization,
    seed: u64,
) -> Result<LinearStrategy, StrategyError> {
    if symbol_counts.len() != config.k() {
        return Err(StrategyError::Dimensions(format!(
            "{} symbol counts for {} receivers",
            symbol_counts.len(),
            config.k()
        )));
    }
    let mut policy = RandomPolicy {
        kind,
        config: config.clone(),
        counts: symbol_counts.to_vec(),
        base: ChaCha8Rng::seed_from_u64(seed),
        mixing: ChaCha8Rng::seed_from_u64(seed ^ MIXING_STREAM),
    };
    run_policy(config, realization, symbol_counts.to_vec(), &mut policy, format!("{kind}:{seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;

    fn cfg(s: &str) -> CsitConfig {
        s.parse().unwrap()
    }

    #[test]
    fn receiver_set_basics() {
        let s: ReceiverSet = [0, 2].into_iter().collect();
        assert!(s.contains(0) && !s.contains(1) && s.contains(2));
        assert_eq!(s.len(), 2);
        assert_eq!(s.without(0), ReceiverSet::singleton(2));
        assert_eq!(s.subsets().len(), 4);
        assert_eq!(ReceiverSet::all(3).mask(), 7);
        assert_eq!(s.to_string(), "{0,2}");
    }

    #[test]
    fn zero_strategy_is_trivially_decodable() {
        let r = sample_channel(3, 3, 2, 1, 100).unwrap();
        let s = LinearStrategy::zero(cfg("PDD"), 3, 2, vec![0, 0, 0]);
        let tr = assemble(&s, &r).unwrap();
        assert!(tr.check_decodability().iter().all(|d| d.achieved));
        assert_eq!(tr.received(0, ReceiverSet::all(3)).shape(), (2, 0));
    }

    #[test]
    fn too_many_symbols_are_not_decodable() {
        let r = sample_channel(1, 1, 1, 1, 100).unwrap();
        let s = random_strategy(&cfg("P"), RandomKind::Oblivious, &[2], &r, 0).unwrap();
        let tr = assemble(&s, &r).unwrap();
        let rec = &tr.check_decodability()[0];
        assert!(!rec.achieved);
        assert!(rec.lhs_rank <= 1);
    }

    #[test]
    fn assembly_is_deterministic_and_checks_shapes() {
        let r = sample_channel(3, 3, 2, 1, 100).unwrap();
        let s = random_strategy(&cfg("PDN"), RandomKind::DelayedMixing, &[1, 1, 1], &r, 4).unwrap();
        let a = assemble(&s, &r).unwrap();
        let b = assemble(&s, &r).unwrap();
        assert_eq!(a.to_json(true), b.to_json(true));
        let short = sample_channel(3, 3, 3, 1, 100).unwrap();
        assert!(assemble(&s, &short).is_err());
    }

    #[test]
    fn oblivious_shapes() {
        let r = sample_channel(3, 3, 2, 8, 100).unwrap();
        let s = random_strategy(&cfg("PDD"), RandomKind::Oblivious, &[1, 1, 1], &r, 1).unwrap();
        let mut count = 0;
        for t in 0..2 {
            for j in 0..3 {
                let v = s.precoder(j, t);
                assert_eq!(v.shape(), (3, 1));
                assert!(v.entries().iter().all(|q| q.is_integer()));
                count += 1;
            }
        }
        assert_eq!(count, 6);
    }

    #[test]
    fn delayed_mixing_without_history_matches_oblivious() {
        let r = sample_channel(3, 3, 3, 8, 100).unwrap();
        let a = random_strategy(&cfg("NNN"), RandomKind::DelayedMixing, &[1, 2, 1], &r, 5).unwrap();
        let b = random_strategy(&cfg("NNN"), RandomKind::Oblivious, &[1, 2, 1], &r, 5).unwrap();
        for t in 0..3 {
            assert_eq!(a.slot_precoder(t), b.slot_precoder(t));
        }
    }

    #[test]
    fn delayed_mixing_uses_history() {
        let r = sample_channel(3, 3, 3, 8, 100).unwrap();
        let a = random_strategy(&cfg("DDD"), RandomKind::DelayedMixing, &[1, 1, 1], &r, 5).unwrap();
        let b = random_strategy(&cfg("DDD"), RandomKind::Oblivious, &[1, 1, 1], &r, 5).unwrap();
        assert_eq!(a.slot_precoder(0), b.slot_precoder(0));
        assert_ne!(a.slot_precoder(1), b.slot_precoder(1));
    }

    #[test]
    fn zero_forcing_hybrid_nulls_other_p_receivers() {
        let r = sample_channel(3, 3, 4, 3, 100).unwrap();
        let s = random_strategy(&cfg("PPN"), RandomKind::ZeroForcingHybrid, &[2, 2, 1], &r, 9).unwrap();
        let tr = assemble(&s, &r).unwrap();
        assert_eq!(tr.received_rank(1, ReceiverSet::singleton(0)), 0);
        assert_eq!(tr.received_rank(0, ReceiverSet::singleton(1)), 0);
        assert!(tr.received_rank(0, ReceiverSet::singleton(0)) > 0);
    }

    #[test]
    fn received_rank_is_subadditive_seed_12() {
        let r = sample_channel(3, 3, 6, 12, 100).unwrap();
        for kind in RandomKind::ALL {
            let s = random_strategy(&cfg("PDN"), kind, &[2, 2, 1], &r, 12).unwrap();
            let tr = assemble(&s, &r).unwrap();
            for j in 0..3 {
                for a in ReceiverSet::all(3).subsets() {
                    for b in ReceiverSet::all(3).subsets() {
                        assert!(tr.received_rank(j, a.union(b)) <= tr.received_rank(j, a) + tr.received_rank(j, b));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_accounting_invariants() {
        let r = sample_channel(3, 3, 5, 2, 100).unwrap();
        for kind in RandomKind::ALL {
            let s = random_strategy(&cfg("PDD"), kind, &[2, 2, 2], &r, 3).unwrap();
            let tr = assemble(&s, &r).unwrap();
            for rec in tr.check_decodability() {
                assert!(rec.interference_rank <= rec.lhs_rank && rec.lhs_rank <= 5);
                assert!(rec.own_rank <= rec.symbols.min(5));
            }
        }
    }

    #[test]
    fn decodability_survives_column_scaling_and_permutation() {
        let r = sample_channel(2, 2, 3, 2, 100).unwrap();
        let s = random_strategy(&cfg("PP"), RandomKind::ZeroForcingHybrid, &[2, 1], &r, 1).unwrap();
        let base = assemble(&s, &r).unwrap().check_decodability();
        let slots: Vec<RationalMatrix> = (0..3)
            .map(|t| {
                let w = s.slot_precoder(t);
                let mut w = w.select_columns(&[1, 0, 2]);
                for row in 0..2 {
                    let v = w.get(row, 2) * rat(-7);
                    w.set(row, 2, v);
                }
                w
            })
            .collect();
        let s2 = LinearStrategy::from_slot_precoders(cfg("PP"), 2, vec![2, 1], &slots, "permuted").unwrap();
        let other = assemble(&s2, &r).unwrap().check_decodability();
        let verdicts = |v: &[DecodabilityRecord]| v.iter().map(|d| d.achieved).collect::<Vec<_>>();
        assert_eq!(verdicts(&base), verdicts(&other));
    }

    #[test]
    fn random_strategies_pass_the_replay_audit() {
        let r = sample_channel(3, 3, 3, 4, 100).unwrap();
        for c in ["PDN", "PPD", "DDN"] {
            let c = cfg(c);
            for kind in RandomKind::ALL {
                let gen = |ch: &ChannelRealization| random_strategy(&c, kind, &[1, 1, 1], ch, 17);
                assert!(validate_csit_compliance(gen, &c, &r, 0, 2).unwrap(), "{kind} under {c}");
            }
        }
    }

    #[test]
    fn cheating_generator_is_caught() {
        let r = sample_channel(3, 3, 3, 4, 100).unwrap();
        let c = cfg("PDD");
        // Beamforms along the current channel of a delayed receiver.
        let cheat = |ch: &ChannelRealization| -> Result<LinearStrategy, StrategyError> {
            let slots: Vec<RationalMatrix> = (0..ch.n()).map(|t| ch.g_matrix(1, t).transpose()).collect();
            LinearStrategy::from_slot_precoders(c.clone(), 3, vec![1, 0, 0], &slots, "cheat")
        };
        assert!(!validate_csit_compliance(cheat, &c, &r, 0, 1).unwrap());
    }

    #[test]
    fn nondeterministic_generator_is_rejected() {
        let r = sample_channel(2, 2, 2, 4, 100).unwrap();
        let c = cfg("PD");
        let calls = std::cell::Cell::new(0i64);
        let flaky = |_: &ChannelRealization| -> Result<LinearStrategy, StrategyError> {
            calls.set(calls.get() + 1);
            let w = RationalMatrix::new(2, 1, vec![rat(calls.get()), rat(0)]).unwrap();
            LinearStrategy::from_slot_precoders(c.clone(), 2, vec![1, 0], &[w.clone(), w], "flaky")
        };
        assert_eq!(validate_csit_compliance(flaky, &c, &r, 0, 1), Err(StrategyError::NonReproducible));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in RandomKind::ALL {
            assert_eq!(k.name().parse::<RandomKind>().unwrap(), k);
        }
        assert!("nope".parse::<RandomKind>().is_err());
    }
}
