//! Constructive achievable schemes, emitted as [`LinearStrategy`] values.
//!
//! Every scheme is built slot by slot from [`CsitView`]s only, so causality
//! holds by construction; the replay audit in the strategy module checks it
//! independently.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::channel::{csit_view, ChannelError, ChannelRealization, CsitConfig, CsitView};
use crate::exactlin::{orthogonal_complement, ratio, LinalgError, Rational, RationalMatrix};
use crate::strategy::{LinearStrategy, ReceiverSet, StrategyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("non-generic channel, resample: {0}")]
    NonGeneric(String),
    #[error("invalid scheme parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    ZeroForcing,
    Pdd,
    KuserD1,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::ZeroForcing => "zf",
            SchemeKind::Pdd => "pdd",
            SchemeKind::KuserD1 => "kuser-d1",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SchemeKind::ZeroForcing, SchemeKind::Pdd, SchemeKind::KuserD1]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SchemeError::InvalidParameters(format!("unknown scheme {s:?}")))
    }
}

/// What a scheme promises: block length and per-receiver symbol counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSpec {
    pub name: String,
    pub config: CsitConfig,
    pub n: usize,
    pub target_symbols: Vec<usize>,
}

impl SchemeSpec {
    pub fn zero_forcing(config: &CsitConfig, n: usize) -> Self {
        let target_symbols = config.states().iter().map(|&s| if s == crate::CsitState::P { n } else { 0 }).collect();
        Self { name: "zf".into(), config: config.clone(), n, target_symbols }
    }

    pub fn pdd() -> Self {
        Self { name: "pdd".into(), config: "PDD".parse().expect("static"), n: 4, target_symbols: vec![3, 2, 2] }
    }

    pub fn kuser_d1(k: usize) -> Result<Self, SchemeError> {
        if !(2..=16).contains(&k) {
            return Err(SchemeError::InvalidParameters(format!("K must be in 2..=16, got {k}")));
        }
        let n = 1usize << (k - 1);
        let mut target_symbols = vec![n; k - 1];
        target_symbols.push(1);
        Ok(Self { name: "kuser-d1".into(), config: CsitConfig::ordered(k - 1, 1, 0), n, target_symbols })
    }

    pub fn target_dof(&self) -> Vec<Rational> {
        achieved_dof(&self.target_symbols, self.n).expect("spec has n ≥ 1")
    }
}

/// Exact `m_j / n`.
pub fn achieved_dof(symbol_counts: &[usize], n: usize) -> Result<Vec<Rational>, SchemeError> {
    if n == 0 {
        return Err(SchemeError::InvalidParameters("block length 0".into()));
    }
    Ok(symbol_counts.iter().map(|&c| ratio(c as i64, n as i64)).collect())
}

fn unit_column(m: usize, a: usize) -> RationalMatrix {
    let mut e = RationalMatrix::zeros(m, 1);
    e.set(a, 0, Rational::from_integer(1.into()));
    e
}

/// Adds `beam · coeffs` (outer product, `m × 1` by `1 × M`) into `w`.
fn add_outer(w: &mut RationalMatrix, beam: &[Rational], coeffs: &[Rational]) {
    for (a, b) in beam.iter().enumerate() {
        if b.is_zero() {
            continue;
        }
        for (c, x) in coeffs.iter().enumerate() {
            if !x.is_zero() {
                let v = w.get(a, c) + b * x;
                w.set(a, c, v);
            }
        }
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn visible(view: &CsitView, j: usize, s: usize) -> Result<&[Rational], SchemeError> {
    view.get(j, s)
        .ok_or_else(|| SchemeError::InvalidParameters(format!("g_{j}({s}) is not visible at slot {}", view.t())))
}

/// Complement of the listed receivers' slot-`s` channels.
fn complement_of(view: &CsitView, receivers: &[usize], s: usize) -> Result<RationalMatrix, SchemeError> {
    let rows = receivers.iter().map(|&l| visible(view, l, s).map(<[Rational]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    let g = RationalMatrix::from_rows(view.m(), &rows)?;
    orthogonal_complement(&g).map_err(|e| SchemeError::NonGeneric(format!("slot {s}: {e}")))
}

/// Each P receiver gets one fresh symbol per slot, beamformed orthogonally to
/// every other P receiver's current channel.
pub fn zero_forcing_scheme(config: &CsitConfig, realization: &ChannelRealization) -> Result<LinearStrategy, SchemeError> {
    let p_set = config.p_set();
    if p_set.is_empty() {
        return Err(SchemeError::InvalidParameters("zero-forcing needs at least one P receiver".into()));
    }
    if config.k() != realization.k() {
        return Err(SchemeError::InvalidParameters("config and channel disagree on k".into()));
    }
    let (m, n) = (realization.m(), realization.n());
    let spec = SchemeSpec::zero_forcing(config, n);
    let counts = spec.target_symbols.clone();
    let mut precoders = Vec::with_capacity(n);
    for t in 0..n {
        let view = csit_view(config, realization, t);
        let mut slot: Vec<RationalMatrix> = counts.iter().map(|&c| RationalMatrix::zeros(m, c)).collect();
        for &j in &p_set {
            let others: Vec<usize> = p_set.iter().copied().filter(|&l| l != j).collect();
            let comp = complement_of(&view, &others, t)?;
            let own = visible(&view, j, t)?;
            let beam = (0..comp.rows())
                .map(|r| comp.row(r))
                .find(|u| !dot(own, u).is_zero())
                .ok_or_else(|| SchemeError::NonGeneric(format!("receiver {j} lies in the null space at slot {t}")))?;
            for (a, v) in beam.iter().enumerate() {
                slot[j].set(a, t, v.clone());
            }
        }
        precoders.push(slot);
    }
    Ok(LinearStrategy::new(config.clone(), m, counts, precoders, "zf")?)
}

/// Three-receiver scheme for the P/D/D configuration delivering (3, 2, 2)
/// symbols in 4 slots.
///
/// Slot 0 sends receiver 0's three symbols uncoded. Slots 1 and 2 replay what
/// receivers 1 and 2 overheard in slot 0 on antenna 0, together with two fresh
/// symbols for receiver 1 (resp. 2) zero-forced away from receiver 0. Slot 3
/// sends the sum of receiver 2's slot-1 and receiver 1's slot-2 observations.
pub fn pdd_scheme(realization: &ChannelRealization) -> Result<LinearStrategy, SchemeError> {
    if (realization.k(), realization.m(), realization.n()) != (3, 3, 4) {
        return Err(SchemeError::InvalidParameters(format!(
            "needs k = m = 3 and n = 4, got k={}, m={}, n={}",
            realization.k(),
            realization.m(),
            realization.n()
        )));
    }
    let spec = SchemeSpec::pdd();
    let config = &spec.config;
    let (m, total) = (3, 7);
    let e0: Vec<Rational> = unit_column(m, 0).entries().to_vec();
    let sym = |c: usize| -> Vec<Rational> {
        let mut v = vec![Rational::zero(); total];
        v[c] = Rational::from_integer(1.into());
        v
    };
    let mut w: Vec<RationalMatrix> = Vec::with_capacity(4);

    let mut w0 = RationalMatrix::zeros(m, total);
    for a in 0..3 {
        w0.set(a, a, Rational::from_integer(1.into()));
    }
    w.push(w0);

    // Slots 1 and 2: replay receiver r's slot-0 observation plus fresh symbols
    // at columns `first`, `first + 1`.
    for (t, r, first) in [(1usize, 1usize, 3usize), (2, 2, 5)] {
        let view = csit_view(config, realization, t);
        let overheard = w[0].left_mul_vector(visible(&view, r, 0)?)?;
        let comp = complement_of(&view, &[0], t)?;
        let mut wt = RationalMatrix::zeros(m, total);
        add_outer(&mut wt, &e0, &overheard);
        add_outer(&mut wt, comp.row(0), &sym(first));
        add_outer(&mut wt, comp.row(1), &sym(first + 1));
        w.push(wt);
    }

    let view = csit_view(config, realization, 3);
    let l2 = w[1].left_mul_vector(visible(&view, 2, 1)?)?;
    let l3 = w[2].left_mul_vector(visible(&view, 1, 2)?)?;
    let sum: Vec<Rational> = l2.iter().zip(&l3).map(|(a, b)| a + b).collect();
    let mut w3 = RationalMatrix::zeros(m, total);
    add_outer(&mut w3, &e0, &sum);
    w.push(w3);

    Ok(LinearStrategy::from_slot_precoders(config.clone(), m, spec.target_symbols, &w, "pdd")?)
}

/// Phase `i` of the single-delayed-receiver scheme: one slot per `i`-subset of
/// the P receivers (the repetition set), in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    pub phase: usize,
    /// `(repetition, fresh)` per slot.
    pub slots: Vec<(ReceiverSet, ReceiverSet)>,
}

impl PhasePlan {
    pub fn duration(&self) -> usize {
        self.slots.len()
    }
}

fn lex_subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
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
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Phases `0..K` for `K` receivers (the first `K - 1` in state P).
pub fn phase_plan(k: usize) -> Vec<PhasePlan> {
    let p_all = ReceiverSet::all(k - 1);
    (0..k)
        .map(|i| PhasePlan {
            phase: i,
            slots: lex_subsets(k - 1, i)
                .into_iter()
                .map(|r| {
                    let rep: ReceiverSet = r.into_iter().collect();
                    (rep, ReceiverSet::from_mask(p_all.mask() & !rep.mask()))
                })
                .collect(),
        })
        .collect()
}

struct PendingEquation {
    slot: usize,
    repetition: ReceiverSet,
    /// `(beam, previous equation)` per repetition receiver.
    cancel: Vec<(Vec<Rational>, Vec<Rational>)>,
}

/// Scheme for `K - 1` P receivers and one D receiver (the last) over
/// `2^(K-1)` slots, delivering `2^(K-1)` symbols to each P receiver and one to
/// the D receiver.
///
/// The transmitter tracks the equations the D receiver can form after
/// cancelling repeated symbols; all of them are recomputed from past channel
/// rows of the D receiver, which its delayed feedback makes available.
pub fn kuser_d1_scheme(realization: &ChannelRealization) -> Result<LinearStrategy, SchemeError> {
    let k = realization.k();
    let spec = SchemeSpec::kuser_d1(k)?;
    if realization.m() != k || realization.n() != spec.n {
        return Err(SchemeError::InvalidParameters(format!(
            "needs m = {k} and n = {}, got m={}, n={}",
            spec.n,
            realization.m(),
            realization.n()
        )));
    }
    let config = &spec.config;
    let (m, last) = (k, k - 1);
    let counts = spec.target_symbols.clone();
    let offsets: Vec<usize> = counts.iter().scan(0, |acc, &c| {
        let o = *acc;
        *acc += c;
        Some(o)
    }).collect();
    let total: usize = counts.iter().sum();
    let owner = |c: usize| offsets.iter().rposition(|&o| o <= c).expect("column has an owner");
    let mut next_fresh = vec![0usize; k - 1];
    let mut fresh_symbol = |p: usize| -> usize {
        let c = offsets[p] + next_fresh[p];
        next_fresh[p] += 1;
        c
    };
    let support = |eq: &[Rational]| -> ReceiverSet {
        eq.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(c, _)| owner(c)).filter(|&j| j != last).collect()
    };
    let unit = |c: usize| {
        let mut v = vec![Rational::zero(); total];
        v[c] = Rational::from_integer(1.into());
        v
    };

    let mut slots: Vec<RationalMatrix> = Vec::with_capacity(spec.n);
    // Keyed by repetition set, so the size of the key is the phase.
    let mut equations: BTreeMap<ReceiverSet, Vec<Rational>> = BTreeMap::new();
    let mut pending: Option<PendingEquation> = None;

    for plan in phase_plan(k) {
        for (repetition, fresh) in plan.slots {
            let t = slots.len();
            let view = csit_view(config, realization, t);

            // Form the D receiver's equation from the previous slot now that
            // its channel row is known.
            if let Some(p) = pending.take() {
                let g = visible(&view, last, p.slot)?;
                let mut eq = slots[p.slot].left_mul_vector(g)?;
                for (beam, prev) in &p.cancel {
                    let alpha = dot(g, beam);
                    for (x, y) in eq.iter_mut().zip(prev) {
                        *x -= &alpha * y;
                    }
                }
                if !support(&eq).intersection(p.repetition).is_empty() {
                    return Err(SchemeError::NonGeneric(format!("slot {} equation kept repeated symbols", p.slot)));
                }
                equations.insert(p.repetition, eq);
            }
            let p_all: Vec<usize> = (0..k - 1).collect();
            let previous = || equations.iter().filter(|(key, _)| key.len() + 1 == plan.phase).map(|(_, eq)| eq);
            let mut w = RationalMatrix::zeros(m, total);
            let mut cancel = Vec::new();

            for p in repetition.iter() {
                let others: Vec<usize> = p_all.iter().copied().filter(|&l| l != p).collect();
                let beam = complement_of(&view, &others, t)?.row(0).to_vec();
                let chosen: Vec<&Vec<Rational>> = previous()
                    .filter(|eq| {
                        let s = support(eq);
                        fresh.is_subset(s) && s.intersection(repetition) == ReceiverSet::singleton(p)
                    })
                    .collect();
                if chosen.len() != 1 {
                    return Err(SchemeError::NonGeneric(format!(
                        "slot {t}: {} stored equations carry receiver {p} alongside {fresh}",
                        chosen.len()
                    )));
                }
                let prev = chosen[0].clone();
                let own: Vec<Rational> = prev
                    .iter()
                    .enumerate()
                    .map(|(c, x)| if owner(c) == p { x.clone() } else { Rational::zero() })
                    .collect();
                add_outer(&mut w, &beam, &own);
                cancel.push((beam, prev));
            }
            if plan.phase > 0 {
                let usable = previous()
                    .filter(|eq| fresh.is_subset(support(eq)))
                    .count();
                if usable != plan.phase {
                    return Err(SchemeError::NonGeneric(format!(
                        "slot {t}: expected {} stored equations covering {fresh}, found {usable}",
                        plan.phase
                    )));
                }
            }

            for p in fresh.iter() {
                let others: Vec<usize> = p_all.iter().copied().filter(|&l| l != p).collect();
                let comp = complement_of(&view, &others, t)?;
                add_outer(&mut w, comp.row(0), &unit(fresh_symbol(p)));
                add_outer(&mut w, comp.row(1), &unit(fresh_symbol(p)));
            }
            if plan.phase == 0 {
                let comp = complement_of(&view, &p_all, t)?;
                add_outer(&mut w, comp.row(0), &unit(offsets[last]));
            }

            slots.push(w);
            pending = Some(PendingEquation { slot: t, repetition, cancel });
        }
    }

    for (p, used) in next_fresh.iter().enumerate() {
        debug_assert!(*used <= counts[p], "receiver {p} used {used} fresh symbols");
    }
    Ok(LinearStrategy::from_slot_precoders(config.clone(), m, counts, &slots, "kuser-d1")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::exactlin::rat;
    use crate::strategy::{assemble, validate_csit_compliance};

    fn cfg(s: &str) -> CsitConfig {
        s.parse().unwrap()
    }

    fn binom(n: usize, r: usize) -> usize {
        if r > n {
            return 0;
        }
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn zero_forcing_ppn() {
        let r = sample_channel(3, 3, 3, 5, 100).unwrap();
        let s = zero_forcing_scheme(&cfg("PPN"), &r).unwrap();
        assert_eq!(s.symbol_counts(), &[3, 3, 0]);
        let tr = assemble(&s, &r).unwrap();
        assert!(tr.decodable());
        assert_eq!(achieved_dof(s.symbol_counts(), 3).unwrap(), vec![rat(1), rat(1), rat(0)]);
    }

    #[test]
    fn zero_forcing_pnn_and_ppp() {
        let r = sample_channel(3, 3, 2, 6, 100).unwrap();
        let s = zero_forcing_scheme(&cfg("PNN"), &r).unwrap();
        assert_eq!(s.symbol_counts(), &[2, 0, 0]);
        assert!(assemble(&s, &r).unwrap().decodable());
        let r = sample_channel(3, 3, 1, 6, 100).unwrap();
        let s = zero_forcing_scheme(&cfg("PPP"), &r).unwrap();
        assert_eq!(s.symbol_counts(), &[1, 1, 1]);
        assert!(assemble(&s, &r).unwrap().decodable());
        assert!(zero_forcing_scheme(&cfg("DDN"), &r).is_err());
    }

    #[test]
    fn pdd_scheme_seed_7() {
        let r = sample_channel(3, 3, 4, 7, 100).unwrap();
        let s = pdd_scheme(&r).unwrap();
        let tr = assemble(&s, &r).unwrap();
        assert!(tr.decodable(), "{:?}", tr.check_decodability());
        assert_eq!(achieved_dof(s.symbol_counts(), 4).unwrap(), vec![ratio(3, 4), ratio(1, 2), ratio(1, 2)]);
        let shapes: Vec<(usize, usize)> = (0..3).map(|j| s.stacked(j).shape()).collect();
        assert_eq!(shapes, vec![(12, 3), (12, 2), (12, 2)]);
    }

    #[test]
    fn pdd_slot_1_fresh_beams_null_receiver_0() {
        let r = sample_channel(3, 3, 4, 7, 100).unwrap();
        let s = pdd_scheme(&r).unwrap();
        let v = s.precoder(1, 1);
        assert!(r.g_matrix(0, 1).mul(v).unwrap().is_zero());
    }

    #[test]
    fn pdd_scheme_is_causal() {
        let r = sample_channel(3, 3, 4, 7, 100).unwrap();
        assert!(validate_csit_compliance(pdd_scheme, &cfg("PDD"), &r, 1, 10).unwrap());
    }

    #[test]
    fn pdd_rejects_wrong_shape() {
        let r = sample_channel(3, 3, 3, 7, 100).unwrap();
        assert!(matches!(pdd_scheme(&r), Err(SchemeError::InvalidParameters(_))));
    }

    #[test]
    fn phase_plan_durations() {
        for k in 2..=6 {
            let plan = phase_plan(k);
            assert_eq!(plan.len(), k);
            for p in &plan {
                assert_eq!(p.duration(), binom(k - 1, p.phase));
                for (rep, fresh) in &p.slots {
                    assert_eq!(rep.len(), p.phase);
                    assert_eq!(rep.union(*fresh), ReceiverSet::all(k - 1));
                    assert!(rep.intersection(*fresh).is_empty());
                }
            }
            assert_eq!(plan.iter().map(PhasePlan::duration).sum::<usize>(), 1 << (k - 1));
        }
    }

    #[test]
    fn equation_accounting_per_p_receiver() {
        for k in 2..=6 {
            let plan = phase_plan(k);
            let fresh: usize = plan.iter().flat_map(|p| &p.slots).filter(|(_, f)| f.contains(0)).count();
            let rep: usize = plan.iter().flat_map(|p| &p.slots).filter(|(r, _)| r.contains(0)).count();
            let by_formula_fresh: usize = (0..=k - 2).map(|i| binom(k - 2, i)).sum();
            let by_formula_rep: usize = (1..k).map(|i| binom(k - 2, i - 1)).sum();
            assert_eq!((fresh, rep), (by_formula_fresh, by_formula_rep));
            assert_eq!(fresh + rep, 1 << (k - 1));
        }
    }

    #[test]
    fn kuser_two_users() {
        let r = sample_channel(2, 2, 2, 3, 100).unwrap();
        let s = kuser_d1_scheme(&r).unwrap();
        assert_eq!(s.symbol_counts(), &[2, 1]);
        assert!(assemble(&s, &r).unwrap().decodable());
        assert_eq!(achieved_dof(s.symbol_counts(), 2).unwrap(), vec![rat(1), ratio(1, 2)]);
    }

    #[test]
    fn kuser_three_and_four_users() {
        let r = sample_channel(3, 3, 4, 3, 100).unwrap();
        let s = kuser_d1_scheme(&r).unwrap();
        assert_eq!(s.symbol_counts(), &[4, 4, 1]);
        assert!(assemble(&s, &r).unwrap().decodable());
        let r = sample_channel(4, 4, 8, 3, 100).unwrap();
        let s = kuser_d1_scheme(&r).unwrap();
        assert_eq!(s.symbol_counts(), &[8, 8, 8, 1]);
        let tr = assemble(&s, &r).unwrap();
        assert!(tr.decodable(), "{:?}", tr.check_decodability());
        let dof = achieved_dof(s.symbol_counts(), 8).unwrap();
        assert_eq!(dof.iter().sum::<Rational>(), ratio(25, 8));
    }

    #[test]
    fn kuser_is_causal() {
        let r = sample_channel(3, 3, 4, 11, 100).unwrap();
        assert!(validate_csit_compliance(kuser_d1_scheme, &cfg("PPD"), &r, 2, 3).unwrap());
    }

    #[test]
    fn kuser_rejects_bad_parameters() {
        assert!(SchemeSpec::kuser_d1(1).is_err());
        let r = sample_channel(3, 3, 3, 1, 100).unwrap();
        assert!(kuser_d1_scheme(&r).is_err());
    }

    #[test]
    fn achieved_dof_edge_cases() {
        assert_eq!(achieved_dof(&[0, 0], 3).unwrap(), vec![rat(0), rat(0)]);
        assert_eq!(achieved_dof(&[8, 8, 8, 1], 8).unwrap(), vec![rat(1), rat(1), rat(1), ratio(1, 8)]);
        assert!(achieved_dof(&[1], 0).is_err());
    }

    #[test]
    fn scheme_kind_names() {
        for s in ["zf", "pdd", "kuser-d1"] {
            assert_eq!(s.parse::<SchemeKind>().unwrap().to_string(), s);
        }
        assert!("mat".parse::<SchemeKind>().is_err());
    }
}
