//! CSIT configurations, generic channel sampling and transmitter-side views.
//!
//! Receivers and slots are indexed from 0. A receiver in state `P` reveals its
//! channel for slots `0..=t` at slot `t`, a `D` receiver for slots `0..t`, and
//! an `N` receiver never.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{format_rational, parse_rational, rat, LinalgError, Rational, RationalMatrix};

/// Give up after this many redraws of a single slot.
pub const MAX_RESAMPLES: usize = 1000;

pub const DEFAULT_RANGE: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("invalid CSIT configuration {0:?}: expected a string over P, D, N")]
    InvalidConfig(String),
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("could not draw a generic slot after {0} attempts")]
    GenericityExhausted(usize),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("malformed channel document: {0}")]
    Json(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CsitState {
    P,
    D,
    N,
}

impl CsitState {
    pub fn as_char(self) -> char {
        match self {
            CsitState::P => 'P',
            CsitState::D => 'D',
            CsitState::N => 'N',
        }
    }

    /// Whether the transmitter sees this receiver's slot `s` channel at slot `t`.
    pub fn visible(self, s: usize, t: usize) -> bool {
        match self {
            CsitState::P => s <= t,
            CsitState::D => s < t,
            CsitState::N => false,
        }
    }
}

impl TryFrom<char> for CsitState {
    type Error = ChannelError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        match c.to_ascii_uppercase() {
            'P' => Ok(CsitState::P),
            'D' => Ok(CsitState::D),
            'N' => Ok(CsitState::N),
            _ => Err(ChannelError::InvalidConfig(c.to_string())),
        }
    }
}

/// One CSIT state per receiver.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CsitConfig {
    states: Vec<CsitState>,
}

impl CsitConfig {
    pub fn new(states: Vec<CsitState>) -> Self {
        Self { states }
    }

    /// Config with `p` P receivers, then `d` D receivers, then `nn` N receivers.
    pub fn ordered(p: usize, d: usize, nn: usize) -> Self {
        let mut states = vec![CsitState::P; p];
        states.extend(std::iter::repeat_n(CsitState::D, d));
        states.extend(std::iter::repeat_n(CsitState::N, nn));
        Self { states }
    }

    pub fn k(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[CsitState] {
        &self.states
    }

    pub fn state(&self, j: usize) -> CsitState {
        self.states[j]
    }

    fn members(&self, s: CsitState) -> Vec<usize> {
        (0..self.k()).filter(|&j| self.states[j] == s).collect()
    }

    pub fn p_set(&self) -> Vec<usize> {
        self.members(CsitState::P)
    }

    pub fn d_set(&self) -> Vec<usize> {
        self.members(CsitState::D)
    }

    pub fn n_set(&self) -> Vec<usize> {
        self.members(CsitState::N)
    }

    /// Same multiset of states sorted as P…D…N.
    pub fn canonical(&self) -> Self {
        let mut states = self.states.clone();
        states.sort();
        Self { states }
    }

    /// The ten three-receiver classes in table order.
    pub fn three_user_classes() -> Vec<CsitConfig> {
        ["PPP", "PPD", "PPN", "PDD", "PDN", "DDD", "DDN", "PNN", "DNN", "NNN"]
            .iter()
            .map(|s| s.parse().expect("static config"))
            .collect()
    }
}

impl fmt::Display for CsitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.states {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for CsitConfig {
    type Err = ChannelError;

    /// Accepts `PDD` as well as separated lists such as `P,D,D` or `P D D`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: Vec<char> = s.chars().filter(|c| !matches!(c, ',' | ' ' | '\t')).collect();
        if cleaned.is_empty() {
            return Err(ChannelError::InvalidConfig(s.to_string()));
        }
        let states = cleaned
            .into_iter()
            .map(|c| CsitState::try_from(c).map_err(|_| ChannelError::InvalidConfig(s.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Self { states })
    }
}

impl Serialize for CsitConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CsitConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Channel coefficients `g_j(t)` for all receivers and slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelRealization {
    k: usize,
    m: usize,
    n: usize,
    seed: u64,
    range: u64,
    resamples: usize,
    /// `g[t][j]` is the length-`m` row of receiver `j` in slot `t`.
    g: Vec<Vec<Vec<Rational>>>,
}

fn draw_row(rng: &mut ChaCha8Rng, m: usize, range: u64) -> Vec<Rational> {
    let r = range as i64;
    (0..m).map(|_| rat(rng.gen_range(-r..=r))).collect()
}

fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    go(0, n, size, &mut cur, &mut out);
    out
}

/// True when every `k×k` minor of the `k×m` slot block is nonzero.
pub fn slot_is_generic(rows: &[Vec<Rational>]) -> bool {
    let k = rows.len();
    if k == 0 {
        return true;
    }
    let m = rows[0].len();
    let block = RationalMatrix::from_rows(m, rows).expect("rows share a width");
    combinations(m, k).iter().all(|cols| block.select_columns(cols).rank() == k)
}

/// Draws a realization with entries uniform in `[-range, range]`, redrawing
/// any slot that fails the minor condition.
pub fn sample_channel(k: usize, m: usize, n: usize, seed: u64, range: u64) -> Result<ChannelRealization, ChannelError> {
    if k == 0 || m < k || n == 0 || range == 0 {
        return Err(ChannelError::Dimensions(format!(
            "need 1 ≤ k ≤ m, n ≥ 1 and range ≥ 1 (got k={k}, m={m}, n={n}, range={range})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Vec::with_capacity(n);
    let mut resamples = 0;
    for _ in 0..n {
        let mut attempts = 0;
        let slot = loop {
            let slot: Vec<Vec<Rational>> = (0..k).map(|_| draw_row(&mut rng, m, range)).collect();
            if slot_is_generic(&slot) {
                break slot;
            }
            attempts += 1;
            resamples += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(ChannelError::GenericityExhausted(attempts));
            }
        };
        g.push(slot);
    }
    Ok(ChannelRealization { k, m, n, seed, range, resamples, g })
}

impl ChannelRealization {
    /// Builds a realization from explicit coefficients `g[t][j][a]` without
    /// any genericity check.
    pub fn from_coefficients(m: usize, g: Vec<Vec<Vec<Rational>>>) -> Result<Self, ChannelError> {
        let n = g.len();
        let k = g.first().map_or(0, |s| s.len());
        if n == 0 || k == 0 {
            return Err(ChannelError::Dimensions("empty coefficient table".into()));
        }
        for slot in &g {
            if slot.len() != k || slot.iter().any(|row| row.len() != m) {
                return Err(ChannelError::Dimensions("ragged coefficient table".into()));
            }
        }
        Ok(Self { k, m, n, seed: 0, range: 0, resamples: 0, g })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn resamples(&self) -> usize {
        self.resamples
    }

    /// Row `g_j(t)`.
    pub fn g(&self, j: usize, t: usize) -> &[Rational] {
        &self.g[t][j]
    }

    pub fn g_matrix(&self, j: usize, t: usize) -> RationalMatrix {
        RationalMatrix::row_vector(&self.g[t][j])
    }

    pub fn slot_is_generic(&self, t: usize) -> bool {
        slot_is_generic(&self.g[t])
    }

    /// `n × nm` matrix carrying `g_j(t)` in row `t`, columns `t·m..(t+1)·m`.
    pub fn block_diagonal(&self, j: usize) -> Result<RationalMatrix, ChannelError> {
        if j >= self.k {
            return Err(ChannelError::OutOfRange(format!("receiver {j} of {}", self.k)));
        }
        let mut out = RationalMatrix::zeros(self.n, self.n * self.m);
        for t in 0..self.n {
            for (a, v) in self.g[t][j].iter().enumerate() {
                out.set(t, t * self.m + a, v.clone());
            }
        }
        Ok(out)
    }

    /// Copy in which every coefficient hidden from the transmitter at slot `t`
    /// is redrawn. Slots stay generic.
    pub fn resample_hidden(&self, config: &CsitConfig, t: usize, seed: u64) -> Result<Self, ChannelError> {
        if config.k() != self.k {
            return Err(ChannelError::Dimensions(format!("config for {} receivers, channel for {}", config.k(), self.k)));
        }
        let range = self.range.max(DEFAULT_RANGE);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for s in 0..self.n {
            let hidden: Vec<usize> = (0..self.k).filter(|&j| !config.state(j).visible(s, t)).collect();
            if hidden.is_empty() {
                continue;
            }
            let mut attempts = 0;
            loop {
                for &j in &hidden {
                    out.g[s][j] = draw_row(&mut rng, self.m, range);
                }
                if slot_is_generic(&out.g[s]) {
                    break;
                }
                attempts += 1;
                if attempts >= MAX_RESAMPLES {
                    return Err(ChannelError::GenericityExhausted(attempts));
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<Vec<Vec<String>>> = self
            .g
            .iter()
            .map(|slot| slot.iter().map(|row| row.iter().map(format_rational).collect()).collect())
            .collect();
        serde_json::json!({
            "k": self.k,
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "range": self.range,
            "resamples": self.resamples,
            "entries": entries,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ChannelError> {
        let field = |name: &str| {
            v.get(name)
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| ChannelError::Json(format!("missing field {name}")))
        };
        let (m, seed, range) = (field("m")? as usize, field("seed")?, field("range")?);
        let entries: Vec<Vec<Vec<String>>> = serde_json::from_value(
            v.get("entries").cloned().ok_or_else(|| ChannelError::Json("missing entries".into()))?,
        )
        .map_err(|e| ChannelError::Json(e.to_string()))?;
        let g = entries
            .iter()
            .map(|slot| {
                slot.iter()
                    .map(|row| {
                        row.iter()
                            .map(|s| parse_rational(s).ok_or_else(|| ChannelError::Json(format!("bad rational {s:?}"))))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Self::from_coefficients(m, g)?;
        if field("k")? as usize != out.k || field("n")? as usize != out.n {
            return Err(ChannelError::Json("declared dimensions disagree with entries".into()));
        }
        out.seed = seed;
        out.range = range;
        out.resamples = v.get("resamples").and_then(serde_json::Value::as_u64).unwrap_or(0) as usize;
        Ok(out)
    }
}

/// The channel coefficients the transmitter may use at slot `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsitView {
    t: usize,
    k: usize,
    m: usize,
    entries: BTreeMap<(usize, usize), Vec<Rational>>,
}

impl CsitView {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `g_j(s)` if visible.
    pub fn get(&self, j: usize, s: usize) -> Option<&[Rational]> {
        self.entries.get(&(j, s)).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Visible `(receiver, slot)` pairs in ascending order.
    pub fn keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.keys().copied()
    }

    /// Visible rows of past slots (`s < t`), in ascending `(receiver, slot)` order.
    pub fn past_rows(&self) -> impl Iterator<Item = &[Rational]> + '_ {
        self.entries.iter().filter(|((_, s), _)| *s < self.t).map(|(_, v)| v.as_slice())
    }

    pub fn coefficient_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }
}

pub fn csit_view(config: &CsitConfig, realization: &ChannelRealization, t: usize) -> CsitView {
    assert_eq!(config.k(), realization.k(), "config and realization disagree on k");
    assert!(t < realization.n(), "slot {t} outside block of length {}", realization.n());
    let mut entries = BTreeMap::new();
    for j in 0..config.k() {
        for s in 0..=t {
            if config.state(j).visible(s, t) {
                entries.insert((j, s), realization.g(j, s).to_vec());
            }
        }
    }
    CsitView { t, k: realization.k(), m: realization.m(), entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    /// Leibniz-formula determinant, independent of elimination.
    fn det_leibniz(m: &[Vec<Rational>]) -> Rational {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..n {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = m.len();
        let mut total = Rational::zero();
        for p in perms(n) {
            let mut inversions = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if p[a] > p[b] {
                        inversions += 1;
                    }
                }
            }
            let mut term = rat(1);
            for (r, &c) in p.iter().enumerate() {
                term *= &m[r][c];
            }
            if inversions % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn config_parsing_and_sets() {
        let c: CsitConfig = "PDN".parse().unwrap();
        assert_eq!(c.k(), 3);
        assert_eq!((c.p_set(), c.d_set(), c.n_set()), (vec![0], vec![1], vec![2]));
        assert_eq!("P,D,D".parse::<CsitConfig>().unwrap().to_string(), "PDD");
        assert_eq!("pdd".parse::<CsitConfig>().unwrap().to_string(), "PDD");
        assert!("PXZ".parse::<CsitConfig>().is_err());
        assert!("".parse::<CsitConfig>().is_err());
        assert_eq!("NDP".parse::<CsitConfig>().unwrap().canonical().to_string(), "PDN");
    }

    #[test]
    fn state_sets_partition_receivers() {
        for c in CsitConfig::three_user_classes() {
            let mut all: Vec<usize> = c.p_set().into_iter().chain(c.d_set()).chain(c.n_set()).collect();
            all.sort();
            assert_eq!(all, (0..c.k()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn seed_7_slot_minors_are_nonzero() {
        let r = sample_channel(3, 3, 4, 7, 100).unwrap();
        assert_eq!((r.n(), r.k()), (4, 3));
        for t in 0..4 {
            let rows: Vec<Vec<Rational>> = (0..3).map(|j| r.g(j, t).to_vec()).collect();
            assert!(!det_leibniz(&rows).is_zero(), "slot {t}");
            for j in 0..3 {
                assert!(r.g(j, t).iter().all(|x| x.is_integer() && x.numer().magnitude().bits() <= 7));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_channel(3, 4, 5, 42, 100).unwrap(), sample_channel(3, 4, 5, 42, 100).unwrap());
        assert_ne!(sample_channel(3, 4, 5, 42, 100).unwrap(), sample_channel(3, 4, 5, 43, 100).unwrap());
    }

    #[test]
    fn tiny_range_resamples_away_zero() {
        let r = sample_channel(1, 1, 1, 0, 1).unwrap();
        assert!(!r.g(0, 0)[0].is_zero());
    }

    #[test]
    fn wide_slots_check_every_minor() {
        let r = sample_channel(2, 4, 3, 9, 5).unwrap();
        for t in 0..3 {
            let rows: Vec<Vec<Rational>> = (0..2).map(|j| r.g(j, t).to_vec()).collect();
            for cols in combinations(4, 2) {
                let sub: Vec<Vec<Rational>> =
                    rows.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
                assert!(!det_leibniz(&sub).is_zero());
            }
        }
    }

    #[test]
    fn bad_dimensions_are_rejected() {
        assert!(sample_channel(3, 2, 4, 0, 100).is_err());
        assert!(sample_channel(3, 3, 0, 0, 100).is_err());
    }

    #[test]
    fn block_diagonal_single_slot_is_the_row() {
        let r = sample_channel(2, 2, 1, 3, 100).unwrap();
        assert_eq!(r.block_diagonal(1).unwrap(), r.g_matrix(1, 0));
    }

    #[test]
    fn block_diagonal_placement() {
        let r = sample_channel(2, 2, 2, 3, 100).unwrap();
        let b = r.block_diagonal(0).unwrap();
        assert_eq!(b.shape(), (2, 4));
        for t in 0..2 {
            for c in 0..4 {
                let expected = if c / 2 == t { r.g(0, t)[c % 2].clone() } else { Rational::zero() };
                assert_eq!(b.get(t, c), &expected);
            }
        }
        assert_eq!(b.rank(), 2);
        assert!(r.block_diagonal(2).is_err());
    }

    #[test]
    fn views_follow_states() {
        let r = sample_channel(3, 3, 4, 1, 100).unwrap();
        let nnn: CsitConfig = "NNN".parse().unwrap();
        for t in 0..4 {
            assert!(csit_view(&nnn, &r, t).is_empty());
        }
        let pdd: CsitConfig = "PDD".parse().unwrap();
        let v = csit_view(&pdd, &r, 0);
        assert_eq!(v.keys().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(v.get(0, 0).unwrap(), r.g(0, 0));
        let pdn: CsitConfig = "PDN".parse().unwrap();
        let v = csit_view(&pdn, &r, 2);
        assert_eq!(v.keys().collect::<Vec<_>>(), vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)]);
    }

    #[test]
    fn views_grow_monotonically() {
        let r = sample_channel(3, 3, 4, 2, 100).unwrap();
        for c in CsitConfig::three_user_classes() {
            for t in 0..3 {
                let now = csit_view(&c, &r, t);
                let next = csit_view(&c, &r, t + 1);
                for key in now.keys() {
                    assert_eq!(now.get(key.0, key.1), next.get(key.0, key.1));
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample_channel(3, 3, 2, 5, 100).unwrap();
        let back = ChannelRealization::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn hidden_resampling_keeps_visible_part() {
        let r = sample_channel(3, 3, 4, 5, 100).unwrap();
        let c: CsitConfig = "PDN".parse().unwrap();
        let t = 2;
        let p = r.resample_hidden(&c, t, 99).unwrap();
        let before = csit_view(&c, &r, t);
        let after = csit_view(&c, &p, t);
        assert_eq!(before, after);
        assert_ne!(p.g(2, 0), r.g(2, 0));
        assert_ne!(p.g(1, 2), r.g(1, 2));
        for s in 0..4 {
            assert!(p.slot_is_generic(s));
        }
    }
}
