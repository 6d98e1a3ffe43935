//! Rank inequalities of the converse argument, evaluated exactly on
//! transcripts, plus a seeded trial harness that runs them over random
//! CSIT-respecting strategies.
//!
//! Every check returns its two sides as exact rationals. Checks refuse
//! parameterizations that break the CSIT hypothesis they rely on, because the
//! inequalities can genuinely fail without it.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{sample_channel, ChannelError, CsitConfig, CsitState};
use crate::exactlin::{coordinate_intersection_dim, format_rational, hstack, rat, vstack, Rational, RationalMatrix};
use crate::strategy::{random_strategy, RandomKind, ReceiverSet, StrategyError, Transcript};

/// Coefficient range for channels drawn by the harness.
///
/// The inequalities hold for all channels outside a measure-zero set. With
/// small integer coefficients the harness occasionally lands on that set, so
/// trial channels are drawn from a much wider range.
pub const LEMMA_RANGE: u64 = 1_000_000_000_000;

/// Parameterizations sampled per lemma and trial.
pub const PARAMS_PER_TRIAL: usize = 3;

#[derive(Debug, Error)]
pub enum LemmaError {
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("claim requires achieved m_j: transcript is not decodable")]
    NotDecodable,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    Idb,
    IdbSubRank,
    IdbSubIncrement,
    Rri,
    Lal,
    Submodularity,
    SubmodularityRows,
    DcsitEvent,
    ClaimInduction,
    ClaimMimo,
    Dimrank,
    Conditioning,
    ConditionalSubadditivity,
    ConversePdd,
    ConversePdn,
}

impl LemmaId {
    pub const ALL: [LemmaId; 15] = [
        LemmaId::Idb,
        LemmaId::IdbSubRank,
        LemmaId::IdbSubIncrement,
        LemmaId::Rri,
        LemmaId::Lal,
        LemmaId::Submodularity,
        LemmaId::SubmodularityRows,
        LemmaId::DcsitEvent,
        LemmaId::ClaimInduction,
        LemmaId::ClaimMimo,
        LemmaId::Dimrank,
        LemmaId::Conditioning,
        LemmaId::ConditionalSubadditivity,
        LemmaId::ConversePdd,
        LemmaId::ConversePdn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::Idb => "idb",
            LemmaId::IdbSubRank => "idb-sub-rank",
            LemmaId::IdbSubIncrement => "idb-sub-increment",
            LemmaId::Rri => "rri",
            LemmaId::Lal => "lal",
            LemmaId::Submodularity => "submodularity",
            LemmaId::SubmodularityRows => "submodularity-rows",
            LemmaId::DcsitEvent => "dcsit-event",
            LemmaId::ClaimInduction => "claim-induction",
            LemmaId::ClaimMimo => "claim-mimo",
            LemmaId::Dimrank => "dimrank",
            LemmaId::Conditioning => "conditioning",
            LemmaId::ConditionalSubadditivity => "conditional-subadditivity",
            LemmaId::ConversePdd => "converse-pdd",
            LemmaId::ConversePdn => "converse-pdn",
        }
    }

    /// Whether the config admits at least one parameterization.
    pub fn applicable(self, config: &CsitConfig) -> bool {
        let k = config.k();
        let (np, nd, nn) = (config.p_set().len(), config.d_set().len(), config.n_set().len());
        match self {
            LemmaId::Idb | LemmaId::IdbSubRank | LemmaId::IdbSubIncrement | LemmaId::Rri => nd >= 1 && k >= 2,
            LemmaId::Lal => nn >= 1,
            LemmaId::DcsitEvent => nd + nn >= 1,
            LemmaId::ClaimInduction => nd >= 1 && np + nd >= 2,
            LemmaId::ClaimMimo => nd >= 1,
            LemmaId::Submodularity
            | LemmaId::SubmodularityRows
            | LemmaId::Dimrank
            | LemmaId::Conditioning
            | LemmaId::ConditionalSubadditivity => k >= 1,
            LemmaId::ConversePdd => config.to_string() == "PDD",
            LemmaId::ConversePdn => config.to_string() == "PDN",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    Le,
    /// `lhs = rhs`
    Eq,
}

/// Parameters of a single check; only the fields a lemma uses are set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<ReceiverSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set2: Option<ReceiverSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckResult {
    pub lemma_id: LemmaId,
    pub parameters: Params,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub lhs: Rational,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub rhs: Rational,
    pub relation: Relation,
    pub pass: bool,
    pub seed: u64,
    pub strategy_tag: String,
}

impl CheckResult {
    fn new(tr: &Transcript, lemma_id: LemmaId, parameters: Params, lhs: Rational, rhs: Rational, relation: Relation) -> Self {
        let pass = match relation {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
        };
        Self {
            lemma_id,
            parameters,
            lhs,
            rhs,
            relation,
            pass,
            seed: tr.realization().seed(),
            strategy_tag: tr.strategy().tag().to_string(),
        }
    }

    /// `rhs − lhs`.
    pub fn slack(&self) -> Rational {
        &self.rhs - &self.lhs
    }
}

/// How the symbol counts `m_j` entering a claim are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counts {
    /// Declared counts; the transcript must be decodable.
    Achieved,
    /// Interference-free dimension actually delivered to each receiver. Every
    /// step that uses decodability remains valid with these, by
    /// sub-modularity.
    Effective,
}

fn counts(tr: &Transcript, mode: Counts) -> Result<Vec<Rational>, LemmaError> {
    match mode {
        Counts::Achieved => {
            if !tr.decodable() {
                return Err(LemmaError::NotDecodable);
            }
            Ok(tr.strategy().symbol_counts().iter().map(|&c| rat(c as i64)).collect())
        }
        Counts::Effective => Ok((0..tr.k()).map(|j| rat(tr.effective_symbols(j) as i64)).collect()),
    }
}

fn r(tr: &Transcript, j: usize, set: ReceiverSet) -> Rational {
    rat(tr.received_rank(j, set) as i64)
}

fn stacked(tr: &Transcript, receivers: &[usize], set: ReceiverSet) -> Rational {
    rat(tr.stacked_rank(receivers, set) as i64)
}

fn require_state(tr: &Transcript, j: usize, allowed: &[CsitState], lemma: LemmaId) -> Result<(), LemmaError> {
    let state = tr.config().state(j);
    if allowed.contains(&state) {
        Ok(())
    } else {
        Err(LemmaError::Hypothesis(format!("{lemma} needs receiver {j} in state {allowed:?}, found {state:?}")))
    }
}

fn require_receivers(tr: &Transcript, ids: &[usize], set: ReceiverSet) -> Result<(), LemmaError> {
    let k = tr.k();
    if let Some(bad) = ids.iter().find(|&&i| i >= k) {
        return Err(LemmaError::InvalidParameters(format!("receiver {bad} out of range for k = {k}")));
    }
    if !set.is_subset(ReceiverSet::all(k)) {
        return Err(LemmaError::InvalidParameters(format!("set {set} out of range for k = {k}")));
    }
    Ok(())
}

fn idb_preconditions(tr: &Transcript, set: ReceiverSet, ell: usize, j: usize, lemma: LemmaId) -> Result<(), LemmaError> {
    require_receivers(tr, &[ell, j], set)?;
    if !set.contains(ell) {
        return Err(LemmaError::InvalidParameters(format!("ℓ = {ell} must lie in S = {set}")));
    }
    if set.contains(j) {
        return Err(LemmaError::InvalidParameters(format!("j = {j} must lie outside S = {set}")));
    }
    require_state(tr, j, &[CsitState::D], lemma)
}

/// `(rank G_ℓ[V_S] − rank G_ℓ[V_{S∖ℓ}] + rank G_j[V_{S∖ℓ}]) / 2 ≤ rank G_j[V_S]`
/// for `ℓ ∈ S`, `j ∉ S` with delayed CSIT.
pub fn check_idb(tr: &Transcript, set: ReceiverSet, ell: usize, j: usize) -> Result<CheckResult, LemmaError> {
    idb_preconditions(tr, set, ell, j, LemmaId::Idb)?;
    let rest = set.without(ell);
    let lhs = (r(tr, ell, set) - r(tr, ell, rest) + r(tr, j, rest)) / rat(2);
    let params = Params { set: Some(set), ell: Some(ell), j: Some(j), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Idb, params, lhs, r(tr, j, set), Relation::Le))
}

/// `rank[Y_{i1};…;Y_{i(j+1)}] / (j+1) ≤ rank[Y_{i1};…;Y_{ij}] / j` with
/// `Y_i = G_i[V_S]`, distinct receivers, the first `j` delayed.
pub fn check_rri(tr: &Transcript, set: ReceiverSet, seq: &[usize]) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, seq, set)?;
    if seq.len() < 2 {
        return Err(LemmaError::InvalidParameters("sequence needs at least two receivers".into()));
    }
    let distinct: ReceiverSet = seq.iter().copied().collect();
    if distinct.len() != seq.len() {
        return Err(LemmaError::InvalidParameters(format!("receivers {seq:?} are not distinct")));
    }
    let j = seq.len() - 1;
    for &i in &seq[..j] {
        require_state(tr, i, &[CsitState::D], LemmaId::Rri)?;
    }
    let lhs = stacked(tr, seq, set) / rat(j as i64 + 1);
    let rhs = stacked(tr, &seq[..j], set) / rat(j as i64);
    let params = Params { set: Some(set), seq: Some(seq.to_vec()), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Rri, params, lhs, rhs, Relation::Le))
}

/// `rank G_ℓ[V_S] ≤ rank G_j[V_S]` for a receiver `j` without CSIT.
pub fn check_lal(tr: &Transcript, set: ReceiverSet, j: usize, ell: usize) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[ell, j], set)?;
    require_state(tr, j, &[CsitState::N], LemmaId::Lal)?;
    let params = Params { set: Some(set), ell: Some(ell), j: Some(j), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Lal, params, r(tr, ell, set), r(tr, j, set), Relation::Le))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TSetResult {
    /// Slots where the received dimension of `G_ℓ[V_S]` grows.
    pub t1: Vec<usize>,
    /// Slots of `t1` whose new row at ℓ already lies in the span of what `j`
    /// received before.
    pub t2: Vec<usize>,
}

pub fn compute_t_sets(tr: &Transcript, set: ReceiverSet, ell: usize, j: usize) -> Result<TSetResult, LemmaError> {
    require_receivers(tr, &[ell, j], set)?;
    let at_ell = tr.received(ell, set);
    let at_j = tr.received(j, set);
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for t in 0..tr.n() {
        let row = at_ell.row(t);
        if at_ell.top_rows(t).row_span_contains(row) {
            continue;
        }
        t1.push(t);
        if at_j.top_rows(t).row_span_contains(row) {
            t2.push(t);
        }
    }
    Ok(TSetResult { t1, t2 })
}

/// The two halves whose sum is the interference decomposition bound:
/// `rank G_ℓ[V_S] − |T2| ≤ rank G_j[V_S]` and
/// `|T2| − rank G_ℓ[V_{S∖ℓ}] ≤ rank G_j[V_S] − rank G_j[V_{S∖ℓ}]`.
pub fn check_idb_sublemmas(
    tr: &Transcript,
    set: ReceiverSet,
    ell: usize,
    j: usize,
) -> Result<(CheckResult, CheckResult), LemmaError> {
    idb_preconditions(tr, set, ell, j, LemmaId::IdbSubRank)?;
    let sets = compute_t_sets(tr, set, ell, j)?;
    let t2 = rat(sets.t2.len() as i64);
    let rest = set.without(ell);
    let params = Params { set: Some(set), ell: Some(ell), j: Some(j), ..Default::default() };
    let first = CheckResult::new(
        tr,
        LemmaId::IdbSubRank,
        params.clone(),
        r(tr, ell, set) - &t2,
        r(tr, j, set),
        Relation::Le,
    );
    let second = CheckResult::new(
        tr,
        LemmaId::IdbSubIncrement,
        params,
        &t2 - r(tr, ell, rest),
        r(tr, j, set) - r(tr, j, rest),
        Relation::Le,
    );
    Ok((first, second))
}

/// Slots where the dimension at `j` stays flat (`A_t`) although the slot's
/// precoder rows are not all in the span of `j`'s past observations (not
/// `B_t`). Empty for compliant strategies on generic channels.
pub fn check_dcsit_event(tr: &Transcript, set: ReceiverSet, j: usize) -> Result<Vec<usize>, LemmaError> {
    require_receivers(tr, &[j], set)?;
    require_state(tr, j, &[CsitState::D, CsitState::N], LemmaId::DcsitEvent)?;
    let at_j = tr.received(j, set);
    let mut slots = Vec::new();
    for t in 0..tr.n() {
        let past = at_j.top_rows(t);
        let flat = past.row_span_contains(at_j.row(t));
        if !flat {
            continue;
        }
        let joint = vstack(&past, &tr.slot_precoder(t, set)).expect("same width");
        if joint.rank() != past.rank() {
            slots.push(t);
        }
    }
    Ok(slots)
}

/// [`check_dcsit_event`] as a pass/fail record: `#slots ≤ 0`.
pub fn dcsit_event_result(tr: &Transcript, set: ReceiverSet, j: usize) -> Result<CheckResult, LemmaError> {
    let slots = check_dcsit_event(tr, set, j)?;
    let params = Params { set: Some(set), j: Some(j), seq: Some(slots.clone()), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::DcsitEvent, params, rat(slots.len() as i64), Rational::zero(), Relation::Le))
}

/// Canonical ordering for the induction claim: P receivers, then D
/// receivers, so the last entry is delayed.
pub fn canonical_order(config: &CsitConfig) -> Vec<usize> {
    config.p_set().into_iter().chain(config.d_set()).collect()
}

/// `Σ_{t<L} m_{o_t} / 2^{t+1} ≤ rank G_{o_L}[V_{o_0} … V_{o_{L−1}}]` for an
/// ordering `o` of the P and D receivers whose last entry `o_L` is delayed.
pub fn check_claim_induction(tr: &Transcript, order: &[usize], mode: Counts) -> Result<CheckResult, LemmaError> {
    let config = tr.config();
    let mut expected = canonical_order(config);
    let mut given = order.to_vec();
    expected.sort_unstable();
    given.sort_unstable();
    if expected != given || order.len() < 2 {
        return Err(LemmaError::InvalidParameters(format!(
            "ordering {order:?} must list every P and D receiver (at least two)"
        )));
    }
    let (&last, head) = order.split_last().expect("nonempty ordering");
    require_state(tr, last, &[CsitState::D], LemmaId::ClaimInduction)?;
    let m = counts(tr, mode)?;
    let mut lhs = Rational::zero();
    let mut weight = Rational::one();
    for &i in head {
        weight /= rat(2);
        lhs += &m[i] * &weight;
    }
    let rhs = r(tr, last, head.iter().copied().collect());
    let params = Params { seq: Some(order.to_vec()), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::ClaimInduction, params, lhs, rhs, Relation::Le))
}

/// `rank[G_1;…;G_k][V_P] / k ≤ rank[G_D][V_P] / |D|`.
pub fn check_claim_mimo(tr: &Transcript) -> Result<CheckResult, LemmaError> {
    let config = tr.config();
    let d = config.d_set();
    if d.is_empty() {
        return Err(LemmaError::Hypothesis("claim-mimo needs at least one D receiver".into()));
    }
    let p: ReceiverSet = config.p_set().into_iter().collect();
    let everyone: Vec<usize> = (0..tr.k()).collect();
    let lhs = stacked(tr, &everyone, p) / rat(tr.k() as i64);
    let rhs = stacked(tr, &d, p) / rat(d.len() as i64);
    Ok(CheckResult::new(tr, LemmaId::ClaimMimo, Params { set: Some(p), ..Default::default() }, lhs, rhs, Relation::Le))
}

/// Column sub-modularity at receiver `j`:
/// `rank A_{S1∩S2} + rank A_{S1∪S2} ≤ rank A_{S1} + rank A_{S2}`.
pub fn check_submodularity(tr: &Transcript, j: usize, s1: ReceiverSet, s2: ReceiverSet) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[j], s1.union(s2))?;
    let lhs = r(tr, j, s1.intersection(s2)) + r(tr, j, s1.union(s2));
    let rhs = r(tr, j, s1) + r(tr, j, s2);
    let params = Params { set: Some(s1), set2: Some(s2), j: Some(j), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Submodularity, params, lhs, rhs, Relation::Le))
}

/// Row sub-modularity over blocks of receivers observing `V_S`.
pub fn check_submodularity_rows(
    tr: &Transcript,
    set: ReceiverSet,
    rows1: ReceiverSet,
    rows2: ReceiverSet,
) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[], set.union(rows1).union(rows2))?;
    let block = |rows: ReceiverSet| stacked(tr, &rows.iter().collect::<Vec<_>>(), set);
    let lhs = block(rows1.intersection(rows2)) + block(rows1.union(rows2));
    let rhs = block(rows1) + block(rows2);
    let params = Params { set: Some(set), set2: Some(rows1), seq: Some(rows2.iter().collect()), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::SubmodularityRows, params, lhs, rhs, Relation::Le))
}

/// With `A = G_j V_ℓ` and `B = G_j[V_{S∖ℓ}]`: the rows of `rowspan[A B]`
/// vanishing on `B`'s columns span `rank[A B] − rank B` dimensions.
pub fn check_dimrank(tr: &Transcript, j: usize, set: ReceiverSet, ell: usize) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[j, ell], set)?;
    if !set.contains(ell) {
        return Err(LemmaError::InvalidParameters(format!("ℓ = {ell} must lie in S = {set}")));
    }
    let a = tr.received(j, ReceiverSet::singleton(ell));
    let b = tr.received(j, set.without(ell));
    let ab = hstack(&a, &b).expect("same row count");
    let zero_cols: Vec<usize> = (a.cols()..ab.cols()).collect();
    let lhs = rat(coordinate_intersection_dim(&ab, &zero_cols).expect("columns in range") as i64);
    let rhs = rat(ab.rank() as i64 - b.rank() as i64);
    let params = Params { set: Some(set), ell: Some(ell), j: Some(j), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Dimrank, params, lhs, rhs, Relation::Eq))
}

fn cond(a: &RationalMatrix, b: &RationalMatrix) -> Rational {
    rat(crate::exactlin::conditional_rank(a, b).expect("same width") as i64)
}

/// `rank[Y_a | Y_b; Y_c] ≤ rank[Y_a | Y_b]` with `Y_i = G_i[V_S]`.
pub fn check_conditioning(tr: &Transcript, set: ReceiverSet, a: usize, b: usize, c: usize) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[a, b, c], set)?;
    let (ya, yb, yc) = (tr.received(a, set), tr.received(b, set), tr.received(c, set));
    let lhs = cond(&ya, &vstack(&yb, &yc).expect("same width"));
    let rhs = cond(&ya, &yb);
    let params = Params { set: Some(set), seq: Some(vec![a, b, c]), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::Conditioning, params, lhs, rhs, Relation::Le))
}

/// `rank[Y_a; Y_b | Y_c] ≤ rank[Y_a | Y_c] + rank[Y_b | Y_c]`.
pub fn check_conditional_subadditivity(
    tr: &Transcript,
    set: ReceiverSet,
    a: usize,
    b: usize,
    c: usize,
) -> Result<CheckResult, LemmaError> {
    require_receivers(tr, &[a, b, c], set)?;
    let (ya, yb, yc) = (tr.received(a, set), tr.received(b, set), tr.received(c, set));
    let lhs = cond(&vstack(&ya, &yb).expect("same width"), &yc);
    let rhs = cond(&ya, &yc) + cond(&yb, &yc);
    let params = Params { set: Some(set), seq: Some(vec![a, b, c]), ..Default::default() };
    Ok(CheckResult::new(tr, LemmaId::ConditionalSubadditivity, params, lhs, rhs, Relation::Le))
}

fn require_config(tr: &Transcript, name: &str) -> Result<(), LemmaError> {
    if tr.config().to_string() == name {
        Ok(())
    } else {
        Err(LemmaError::Hypothesis(format!("chain is stated for {name}, transcript is {}", tr.config())))
    }
}

fn step(tr: &Transcript, id: LemmaId, name: &'static str, lhs: Rational, rhs: Rational) -> CheckResult {
    CheckResult::new(tr, id, Params { step: Some(name), ..Default::default() }, lhs, rhs, Relation::Le)
}

/// Every link of the converse chain for `m_1/2 + m_2/4 + m_3 ≤ n` under PDD
/// (receivers 0: P, 1: D, 2: D).
pub fn check_converse_pdd(tr: &Transcript, mode: Counts) -> Result<Vec<CheckResult>, LemmaError> {
    require_config(tr, "PDD")?;
    let m = counts(tr, mode)?;
    let id = LemmaId::ConversePdd;
    let s = |v: &[usize]| -> ReceiverSet { v.iter().copied().collect() };
    let two = rat(2);
    let n = rat(tr.n() as i64);
    let g3_v12 = r(tr, 2, s(&[0, 1]));
    Ok(vec![
        step(tr, id, "idb", r(tr, 0, s(&[0, 1])) - r(tr, 0, s(&[1])) + r(tr, 2, s(&[1])), &two * &g3_v12),
        step(tr, id, "decode-rx1", m[0].clone(), r(tr, 0, s(&[0, 1])) - r(tr, 0, s(&[1]))),
        step(tr, id, "rri", stacked(tr, &[2, 1], s(&[1])) / &two, r(tr, 2, s(&[1]))),
        step(tr, id, "decode-rx2", m[1].clone(), stacked(tr, &[2, 1], s(&[1]))),
        step(tr, id, "interference-rx3", &g3_v12 + &m[2], n.clone()),
        step(tr, id, "combined", &m[0] + &m[1] / &two, &two * &g3_v12),
        step(tr, id, "objective", &m[0] + &m[1] / &two + &two * &m[2], &two * &n),
    ])
}

/// Every link of the two converse chains under PDN (receivers 0: P, 1: D,
/// 2: N): `m_1/2 + m_2 + m_3 ≤ n` and `m_1 + m_3 ≤ n`.
pub fn check_converse_pdn(tr: &Transcript, mode: Counts) -> Result<Vec<CheckResult>, LemmaError> {
    require_config(tr, "PDN")?;
    let m = counts(tr, mode)?;
    let id = LemmaId::ConversePdn;
    let s = |v: &[usize]| -> ReceiverSet { v.iter().copied().collect() };
    let all = tr.everyone();
    let two = rat(2);
    let n = rat(tr.n() as i64);
    Ok(vec![
        step(tr, id, "decode-rx2", m[1].clone(), r(tr, 1, all) - r(tr, 1, s(&[0, 2]))),
        step(tr, id, "submod-rx2", r(tr, 1, all) - r(tr, 1, s(&[0, 2])), r(tr, 1, s(&[0, 1])) - r(tr, 1, s(&[0]))),
        step(tr, id, "rri", stacked(tr, &[1, 0], s(&[0])) / &two, r(tr, 1, s(&[0]))),
        step(tr, id, "lal", r(tr, 1, s(&[0, 1])), r(tr, 2, s(&[0, 1]))),
        step(tr, id, "objective-1", &m[0] / &two + &m[1] + &m[2], n.clone()),
        step(tr, id, "submod-rx3", r(tr, 2, all) - r(tr, 2, s(&[0, 1])), r(tr, 2, s(&[0, 2])) - r(tr, 2, s(&[0]))),
        step(tr, id, "lal-rx1", r(tr, 0, s(&[0])), r(tr, 2, s(&[0]))),
        step(tr, id, "objective-2", &m[0] + &m[2], n),
    ])
}

// ---------------------------------------------------------------------------
// Trial harness

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    pub kinds: Vec<RandomKind>,
    pub range: u64,
    pub params_per_trial: usize,
}

impl SuiteOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, kinds: RandomKind::ALL.to_vec(), range: LEMMA_RANGE, params_per_trial: PARAMS_PER_TRIAL }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub check: CheckResult,
    pub transcript: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteEntry {
    pub config: CsitConfig,
    pub lemma: LemmaId,
    pub kind: RandomKind,
    pub trials: usize,
    /// Trials in which every sampled check passed.
    pub passes: usize,
    pub checks: usize,
    #[serde(serialize_with = "serialize_slack")]
    pub min_slack: Option<Rational>,
    pub violations: Vec<Violation>,
}

fn serialize_slack<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_str(&format_rational(q)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub config: CsitConfig,
    pub seed: u64,
    pub trials: usize,
    pub entries: Vec<SuiteEntry>,
    /// Lemmas whose hypotheses no parameterization of this config meets.
    pub skipped: Vec<LemmaId>,
}

impl SuiteReport {
    pub fn violation_count(&self) -> usize {
        self.entries.iter().map(|e| e.violations.len()).sum()
    }
}

fn random_subset(rng: &mut ChaCha8Rng, pool: ReceiverSet) -> ReceiverSet {
    pool.iter().filter(|_| rng.gen_bool(0.5)).collect()
}

fn pick(rng: &mut ChaCha8Rng, v: &[usize]) -> usize {
    *v.choose(rng).expect("nonempty choice")
}

/// Samples parameterizations of `lemma` and evaluates them on `tr`.
fn sample_checks(
    tr: &Transcript,
    lemma: LemmaId,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Result<Vec<CheckResult>, LemmaError> {
    let config = tr.config();
    let k = tr.k();
    let all = tr.everyone();
    let everyone: Vec<usize> = (0..k).collect();
    let d = config.d_set();
    let mut out = Vec::new();
    match lemma {
        LemmaId::ConversePdd => return check_converse_pdd(tr, Counts::Effective),
        LemmaId::ConversePdn => return check_converse_pdn(tr, Counts::Effective),
        LemmaId::ClaimMimo => return Ok(vec![check_claim_mimo(tr)?]),
        _ => {}
    }
    for _ in 0..count {
        match lemma {
            LemmaId::Idb | LemmaId::IdbSubRank | LemmaId::IdbSubIncrement => {
                let j = pick(rng, &d);
                let others = all.without(j);
                let ell = pick(rng, &others.iter().collect::<Vec<_>>());
                let set = random_subset(rng, others).with(ell);
                match lemma {
                    LemmaId::Idb => out.push(check_idb(tr, set, ell, j)?),
                    LemmaId::IdbSubRank => out.push(check_idb_sublemmas(tr, set, ell, j)?.0),
                    _ => out.push(check_idb_sublemmas(tr, set, ell, j)?.1),
                }
            }
            LemmaId::Rri => {
                let len = rng.gen_range(1..=d.len().min(k - 1));
                let mut head = d.clone();
                head.shuffle(rng);
                head.truncate(len);
                let used: ReceiverSet = head.iter().copied().collect();
                let last = pick(rng, &all.iter().filter(|&i| !used.contains(i)).collect::<Vec<_>>());
                head.push(last);
                out.push(check_rri(tr, random_subset(rng, all), &head)?);
            }
            LemmaId::Lal => {
                let j = pick(rng, &config.n_set());
                let ell = pick(rng, &everyone);
                out.push(check_lal(tr, random_subset(rng, all), j, ell)?);
            }
            LemmaId::DcsitEvent => {
                let hidden: Vec<usize> = config.d_set().into_iter().chain(config.n_set()).collect();
                let j = pick(rng, &hidden);
                out.push(dcsit_event_result(tr, random_subset(rng, all), j)?);
            }
            LemmaId::ClaimInduction => {
                let last = pick(rng, &d);
                let mut order: Vec<usize> = canonical_order(config).into_iter().filter(|&i| i != last).collect();
                order.shuffle(rng);
                order.push(last);
                out.push(check_claim_induction(tr, &order, Counts::Effective)?);
            }
            LemmaId::Submodularity => {
                let j = pick(rng, &everyone);
                out.push(check_submodularity(tr, j, random_subset(rng, all), random_subset(rng, all))?);
            }
            LemmaId::SubmodularityRows => {
                out.push(check_submodularity_rows(
                    tr,
                    random_subset(rng, all),
                    random_subset(rng, all),
                    random_subset(rng, all),
                )?);
            }
            LemmaId::Dimrank => {
                let j = pick(rng, &everyone);
                let ell = pick(rng, &everyone);
                out.push(check_dimrank(tr, j, random_subset(rng, all).with(ell), ell)?);
            }
            LemmaId::Conditioning | LemmaId::ConditionalSubadditivity => {
                let (a, b, c) = (pick(rng, &everyone), pick(rng, &everyone), pick(rng, &everyone));
                let set = random_subset(rng, all);
                out.push(if lemma == LemmaId::Conditioning {
                    check_conditioning(tr, set, a, b, c)?
                } else {
                    check_conditional_subadditivity(tr, set, a, b, c)?
                });
            }
            LemmaId::ClaimMimo | LemmaId::ConversePdd | LemmaId::ConversePdn => unreachable!("handled above"),
        }
    }
    Ok(out)
}

/// Random transcript used by trial `seed`: `m = k` antennas, `n = 2k` slots,
/// symbol counts drawn from `1..=k`.
pub fn trial_transcript(config: &CsitConfig, kind: RandomKind, seed: u64, range: u64) -> Result<Transcript, LemmaError> {
    let k = config.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472_6961_6c73);
    let counts: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=k)).collect();
    let realization = sample_channel(k, k, 2 * k, seed, range)?;
    let strategy = random_strategy(config, kind, &counts, &realization, seed)?;
    Ok(Transcript::new(strategy, realization)?)
}

/// Runs every applicable lemma over `options.trials` random transcripts per
/// strategy kind. Trial `i` uses seed `options.seed + i`.
pub fn run_suite(config: &CsitConfig, options: &SuiteOptions) -> Result<SuiteReport, LemmaError> {
    let lemmas: Vec<LemmaId> = LemmaId::ALL.into_iter().filter(|l| l.applicable(config)).collect();
    let skipped = LemmaId::ALL.into_iter().filter(|l| !l.applicable(config)).collect();
    let mut entries = Vec::new();
    for &kind in &options.kinds {
        let per_trial: Vec<(Vec<Vec<CheckResult>>, Option<serde_json::Value>)> = (0..options.trials)
            .into_par_iter()
            .map(|i| {
                let seed = options.seed.wrapping_add(i as u64);
                let tr = trial_transcript(config, kind, seed, options.range)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_7261_6d73);
                let results = lemmas
                    .iter()
                    .map(|&l| sample_checks(&tr, l, &mut rng, options.params_per_trial))
                    .collect::<Result<Vec<_>, _>>()?;
                let failed = results.iter().flatten().any(|c| !c.pass);
                Ok((results, failed.then(|| tr.to_json(true))))
            })
            .collect::<Result<_, LemmaError>>()?;
        let mut by_lemma: BTreeMap<LemmaId, SuiteEntry> = lemmas
            .iter()
            .map(|&lemma| {
                let entry = SuiteEntry {
                    config: config.clone(),
                    lemma,
                    kind,
                    trials: options.trials,
                    passes: 0,
                    checks: 0,
                    min_slack: None,
                    violations: Vec::new(),
                };
                (lemma, entry)
            })
            .collect();
        for (results, transcript) in per_trial {
            for (lemma, checks) in lemmas.iter().zip(results) {
                let entry = by_lemma.get_mut(lemma).expect("entry per lemma");
                entry.checks += checks.len();
                if checks.iter().all(|c| c.pass) {
                    entry.passes += 1;
                }
                for c in checks {
                    let slack = c.slack();
                    if entry.min_slack.as_ref().is_none_or(|m| slack < *m) {
                        entry.min_slack = Some(slack);
                    }
                    if !c.pass {
                        let transcript = transcript.clone().expect("failing trial keeps its transcript");
                        entry.violations.push(Violation { check: c, transcript });
                    }
                }
            }
        }
        entries.extend(by_lemma.into_values());
    }
    Ok(SuiteReport { config: config.clone(), seed: options.seed, trials: options.trials, entries, skipped })
}
