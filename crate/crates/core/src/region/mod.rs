//! Degrees-of-freedom region polytopes, sum-DoF linear programs, vertex
//! enumeration and closed-form sum-DoF bounds.
//!
//! A region lives in `[0, 1]^k` and is cut by inequalities `a·d ≤ 1` with
//! nonnegative coefficients, drawn from three families:
//!
//! * [`Family::Idb`]: for a D receiver `i` and an ordering of the other P and
//!   D receivers, weights `1/2, 1/4, …` along the ordering, 1 on `i`, and 1 on
//!   every N receiver.
//! * [`Family::MatWeighted`]: `1/k` on every P receiver, weights `1, 1/2,
//!   1/3, …` along an ordering of the D receivers, and 1 on every N receiver.
//! * [`Family::NSum`]: 1 on a single P or D receiver and on every N receiver.
//!
//! For three receivers the region is exact; beyond that it is an outer bound.

pub mod lp;
mod vertices;

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::channel::{CsitConfig, CsitState};
use crate::exactlin::{format_rational, rat, ratio, Rational};

pub use lp::{maximize, LpError, LpSolution};
pub use vertices::{is_nontrivial, nontrivial_vertices, vertices, MAX_VERTEX_K};

/// Largest receiver count for which the families are listed explicitly.
pub const MAX_REGION_K: usize = 7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("explicit region construction is capped at k = {max} (got k = {k})")]
    TooLarge { k: usize, max: usize },
    #[error("vertex enumeration unsupported above k={max} (got k = {k})")]
    VertexUnsupported { k: usize, max: usize },
    #[error("outside the constant-gap regime: {0}")]
    Regime(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Idb,
    MatWeighted,
    NSum,
    Box,
    Averaged,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Idb => "idb",
            Family::MatWeighted => "mat-weighted",
            Family::NSum => "n-sum",
            Family::Box => "box",
            Family::Averaged => "averaged",
        }
    }
}

/// `Σ_j coefficients[j] · d_j ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Inequality {
    #[serde(with = "crate::exactlin::serde_rational::vec")]
    pub coefficients: Vec<Rational>,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub rhs: Rational,
    pub family: Family,
}

impl Inequality {
    pub fn new(coefficients: Vec<Rational>, family: Family) -> Self {
        Self { coefficients, rhs: Rational::one(), family }
    }

    pub fn evaluate(&self, d: &[Rational]) -> Rational {
        self.coefficients.iter().zip(d).fold(Rational::zero(), |acc, (a, x)| acc + a * x)
    }

    pub fn satisfied(&self, d: &[Rational]) -> bool {
        self.evaluate(d) <= self.rhs
    }

    pub fn tight(&self, d: &[Rational]) -> bool {
        self.evaluate(d) == self.rhs
    }

    /// Every coefficient at most the matching coefficient of `other` (same
    /// right-hand side), so `other` implies `self` on the nonnegative orthant.
    pub fn dominated_by(&self, other: &Inequality) -> bool {
        self.rhs == other.rhs && self.coefficients.iter().zip(&other.coefficients).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for Inequality {
    /// Renders with 1-based variable names, e.g. `d1/2 + d2/4 + d3 <= 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (j, a) in self.coefficients.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let name = format!("d{}", j + 1);
            let term = if a.is_one() {
                name
            } else if a.numer().is_one() {
                format!("{name}/{}", a.denom())
            } else {
                format!("{}*{name}", format_rational(a))
            };
            terms.push(term);
        }
        if terms.is_empty() {
            terms.push("0".into());
        }
        write!(f, "{} <= {}", terms.join(" + "), format_rational(&self.rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofRegion {
    config: CsitConfig,
    inequalities: Vec<Inequality>,
}

impl DofRegion {
    pub fn config(&self) -> &CsitConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    /// Non-box inequalities.
    pub fn inequalities(&self) -> &[Inequality] {
        &self.inequalities
    }

    /// `d_j ≤ 1` rows.
    pub fn box_rows(&self) -> Vec<Inequality> {
        (0..self.k()).map(|j| Inequality::new(unit(self.k(), j), Family::Box)).collect()
    }

    /// Non-box inequalities followed by the box rows.
    pub fn all_rows(&self) -> Vec<Inequality> {
        let mut rows = self.inequalities.clone();
        rows.extend(self.box_rows());
        rows
    }

    pub fn contains(&self, d: &[Rational]) -> bool {
        d.len() == self.k()
            && d.iter().all(|x| !x.is_negative() && *x <= Rational::one())
            && self.inequalities.iter().all(|q| q.satisfied(d))
    }

    /// Maximum of `objective · d` over the region.
    pub fn maximize(&self, objective: &[Rational]) -> Result<LpSolution, RegionError> {
        let rows = self.all_rows();
        let a: Vec<Vec<Rational>> = rows.iter().map(|r| r.coefficients.clone()).collect();
        let b: Vec<Rational> = rows.iter().map(|r| r.rhs.clone()).collect();
        Ok(maximize(objective, &a, &b)?)
    }

    /// Whether inequality `idx` is implied by the remaining rows.
    pub fn is_redundant(&self, idx: usize) -> Result<bool, RegionError> {
        let target = &self.inequalities[idx];
        let rest = DofRegion {
            config: self.config.clone(),
            inequalities: self.inequalities.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, q)| q.clone()).collect(),
        };
        Ok(rest.maximize(&target.coefficients)?.value <= target.rhs)
    }

    /// Report label: the three-receiver region is exact, larger ones are
    /// outer bounds.
    pub fn label(&self) -> &'static str {
        region_label(self.k())
    }
}

pub fn region_label(k: usize) -> &'static str {
    if k == 3 {
        "exact region (k = 3)"
    } else {
        "outer bound (k != 3)"
    }
}

fn unit(k: usize, j: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); k];
    v[j] = Rational::one();
    v
}

fn pow2_inv(e: usize) -> Rational {
    Rational::new(1.into(), num_bigint::BigInt::from(1) << e)
}

/// Every inequality of the three families, without pruning.
pub fn raw_inequalities(config: &CsitConfig) -> Result<Vec<Inequality>, RegionError> {
    let k = config.k();
    if k > MAX_REGION_K {
        return Err(RegionError::TooLarge { k, max: MAX_REGION_K });
    }
    let (p_set, d_set, n_set) = (config.p_set(), config.d_set(), config.n_set());
    let base = || {
        let mut v = vec![Rational::zero(); k];
        for &j in &n_set {
            v[j] = Rational::one();
        }
        v
    };
    let mut out = Vec::new();
    for &i in &d_set {
        let others: Vec<usize> = p_set.iter().chain(&d_set).copied().filter(|&j| j != i).collect();
        for perm in others.iter().copied().permutations(others.len()) {
            let mut v = base();
            v[i] = Rational::one();
            for (pos, &j) in perm.iter().enumerate() {
                v[j] = pow2_inv(pos + 1);
            }
            out.push(Inequality::new(v, Family::Idb));
        }
    }
    for perm in d_set.iter().copied().permutations(d_set.len()) {
        let mut v = base();
        for &j in &p_set {
            v[j] = ratio(1, k as i64);
        }
        for (pos, &j) in perm.iter().enumerate() {
            v[j] = ratio(1, pos as i64 + 1);
        }
        out.push(Inequality::new(v, Family::MatWeighted));
    }
    for &i in p_set.iter().chain(&d_set) {
        let mut v = base();
        v[i] = Rational::one();
        out.push(Inequality::new(v, Family::NSum));
    }
    Ok(out)
}

/// Region for `config`: the three families with exact duplicates removed and
/// rows dropped when another row (or a box row) dominates them coefficientwise.
pub fn build_region(config: &CsitConfig) -> Result<DofRegion, RegionError> {
    let k = config.k();
    let raw = raw_inequalities(config)?;
    let mut seen = BTreeSet::new();
    let unique: Vec<Inequality> = raw.into_iter().filter(|q| seen.insert(q.coefficients.clone())).collect();
    let boxes: Vec<Inequality> = (0..k).map(|j| Inequality::new(unit(k, j), Family::Box)).collect();
    let kept = unique
        .iter()
        .enumerate()
        .filter(|(i, q)| {
            let by_box = boxes.iter().any(|b| q.dominated_by(b));
            let by_other = unique.iter().enumerate().any(|(j, o)| j != *i && q.dominated_by(o));
            !by_box && !by_other
        })
        .map(|(_, q)| q.clone())
        .collect();
    Ok(DofRegion { config: config.clone(), inequalities: kept })
}

/// Exact maximum of `Σ d_j` over the region.
pub fn sumdof(region: &DofRegion) -> Result<Rational, RegionError> {
    let ones = vec![Rational::one(); region.k()];
    Ok(region.maximize(&ones)?.value)
}

/// Most violated inequality of the families at `d`, if any is violated.
fn separate(config: &CsitConfig, d: &[Rational]) -> Option<Inequality> {
    let k = config.k();
    let (p_set, d_set, n_set) = (config.p_set(), config.d_set(), config.n_set());
    let n_sum: Rational = n_set.iter().map(|&j| d[j].clone()).sum();
    let descending = |set: Vec<usize>| -> Vec<usize> {
        let mut s = set;
        s.sort_by(|&a, &b| d[b].cmp(&d[a]).then(a.cmp(&b)));
        s
    };
    let mut candidates = Vec::new();
    for &i in &d_set {
        let order = descending(p_set.iter().chain(&d_set).copied().filter(|&j| j != i).collect());
        let mut v = vec![Rational::zero(); k];
        for &j in &n_set {
            v[j] = Rational::one();
        }
        v[i] = Rational::one();
        for (pos, &j) in order.iter().enumerate() {
            v[j] = pow2_inv(pos + 1);
        }
        candidates.push(Inequality::new(v, Family::Idb));
    }
    let order = descending(d_set.clone());
    let mut v = vec![Rational::zero(); k];
    for &j in &n_set {
        v[j] = Rational::one();
    }
    for &j in &p_set {
        v[j] = ratio(1, k as i64);
    }
    for (pos, &j) in order.iter().enumerate() {
        v[j] = ratio(1, pos as i64 + 1);
    }
    candidates.push(Inequality::new(v, Family::MatWeighted));
    for &i in p_set.iter().chain(&d_set) {
        if &d[i] + &n_sum > Rational::one() {
            let mut v = vec![Rational::zero(); k];
            for &j in &n_set {
                v[j] = Rational::one();
            }
            v[i] = Rational::one();
            candidates.push(Inequality::new(v, Family::NSum));
        }
    }
    candidates
        .into_iter()
        .map(|q| (q.evaluate(d) - &q.rhs, q))
        .filter(|(slack, _)| slack.is_positive())
        .max_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, q)| q)
}

/// Sum-DoF of the outer-bound region for any `k`, by constraint generation:
/// the families are never listed, only their most violated member at the
/// current LP optimum is added.
pub fn outer_bound_sumdof(config: &CsitConfig) -> Result<Rational, RegionError> {
    let k = config.k();
    let ones = vec![Rational::one(); k];
    let mut rows: Vec<Inequality> = (0..k).map(|j| Inequality::new(unit(k, j), Family::Box)).collect();
    let mut seen: BTreeSet<Vec<Rational>> = rows.iter().map(|r| r.coefficients.clone()).collect();
    loop {
        let a: Vec<Vec<Rational>> = rows.iter().map(|r| r.coefficients.clone()).collect();
        let b: Vec<Rational> = rows.iter().map(|r| r.rhs.clone()).collect();
        let sol = maximize(&ones, &a, &b)?;
        match separate(config, &sol.point) {
            Some(cut) if seen.insert(cut.coefficients.clone()) => rows.push(cut),
            Some(_) => unreachable!("a row already in the program cannot be violated"),
            None => return Ok(sol.value),
        }
    }
}

/// `|P| + 1/2^|P|`.
pub fn prop2_value(size_p: usize) -> Rational {
    rat(size_p as i64) + pow2_inv(size_p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SumDofBounds {
    #[serde(with = "crate::exactlin::serde_rational")]
    pub lower: Rational,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub upper: Rational,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub gap: Rational,
    /// `|P| / 2^|P|`, the coarser bound on the gap.
    #[serde(with = "crate::exactlin::serde_rational")]
    pub cap: Rational,
    /// Known exact value (single delayed receiver, or none).
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt")]
    pub exact: Option<Rational>,
}

fn serialize_opt<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_str(&format_rational(q)),
        None => s.serialize_none(),
    }
}

/// Closed-form bounds on the sum-DoF for `|P| ≥ |D|`: zero-forcing gives
/// `|P|`, and the permutation-averaged inequality gives
/// `|P| + |D| / (2^|P| + 1 - 1/2^(|D|-1))`.
pub fn prop1_bounds(size_p: usize, size_d: usize) -> Result<SumDofBounds, RegionError> {
    let p = rat(size_p as i64);
    let cap = &p * pow2_inv(size_p);
    if size_d == 0 {
        return Ok(SumDofBounds { lower: p.clone(), upper: p.clone(), gap: Rational::zero(), cap, exact: Some(p) });
    }
    if size_p < size_d {
        return Err(RegionError::Regime(format!("needs |P| ≥ |D| ≥ 1, got |P| = {size_p}, |D| = {size_d}")));
    }
    let denom = Rational::from_integer(num_bigint::BigInt::from(1) << size_p) + Rational::one() - pow2_inv(size_d - 1);
    let gap = rat(size_d as i64) / denom;
    let upper = &p + &gap;
    let exact = (size_d == 1).then(|| prop2_value(size_p));
    Ok(SumDofBounds { lower: p, upper, gap, cap, exact })
}

/// Average of the delayed-receiver family over all joint relabelings of the P
/// receivers and of the D receivers. Needs at least one P and one D receiver.
pub fn averaged_inequality(config: &CsitConfig) -> Result<Inequality, RegionError> {
    let (np, nd) = (config.p_set().len(), config.d_set().len());
    if np == 0 || nd == 0 {
        return Err(RegionError::Regime("averaging needs at least one P and one D receiver".into()));
    }
    let p_coef = (Rational::one() - pow2_inv(np)) / rat(np as i64);
    let d_coef = (Rational::one() + pow2_inv(np) - pow2_inv(np + nd - 1)) / rat(nd as i64);
    let coefficients = config
        .states()
        .iter()
        .map(|s| match s {
            CsitState::P => p_coef.clone(),
            CsitState::D => d_coef.clone(),
            CsitState::N => Rational::one(),
        })
        .collect();
    Ok(Inequality::new(coefficients, Family::Averaged))
}

/// Published three-receiver sum-DoF values.
pub fn table1_golden() -> Vec<(CsitConfig, Rational)> {
    let values = [(3, 1), (9, 4), (2, 1), (9, 5), (3, 2), (18, 11), (4, 3), (1, 1), (1, 1), (1, 1)];
    CsitConfig::three_user_classes().into_iter().zip(values).map(|(c, (p, q))| (c, ratio(p, q))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub config: CsitConfig,
    pub label: &'static str,
    pub inequalities: Vec<Inequality>,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub sumdof: Rational,
    #[serde(with = "crate::exactlin::serde_rational")]
    pub golden: Rational,
    pub matches: bool,
}

/// Region and sum-DoF for the ten three-receiver classes, checked against the
/// published values.
pub fn table1_report() -> Result<Vec<Table1Row>, RegionError> {
    table1_golden()
        .into_iter()
        .map(|(config, golden)| {
            let region = build_region(&config)?;
            let value = sumdof(&region)?;
            Ok(Table1Row {
                label: region.label(),
                inequalities: region.inequalities().to_vec(),
                matches: value == golden,
                sumdof: value,
                golden,
                config,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
