//! Exact simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so the slack basis is a valid start. The tableau
//! is kept in compact form (one column per nonbasic variable) and Bland's rule
//! rules out cycling.

use num_traits::{One, Signed, Zero};

use crate::exactlin::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub point: Vec<Rational>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("malformed program: {0}")]
    Malformed(String),
}

pub fn maximize(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Result<LpSolution, LpError> {
    let nvars = c.len();
    let rows = a.len();
    if b.len() != rows || a.iter().any(|r| r.len() != nvars) {
        return Err(LpError::Malformed("inconsistent dimensions".into()));
    }
    if b.iter().any(Signed::is_negative) {
        return Err(LpError::Malformed("right-hand side must be nonnegative".into()));
    }
    // Variables 0..nvars are structural, nvars.. are slacks.
    let mut nonbasic: Vec<usize> = (0..nvars).collect();
    let mut basic: Vec<usize> = (nvars..nvars + rows).collect();
    let mut beta: Vec<Rational> = b.to_vec();
    let mut alpha: Vec<Vec<Rational>> = a.to_vec();
    let mut gamma: Vec<Rational> = c.to_vec();
    let mut z = Rational::zero();
    let mut pivots = 0;

    loop {
        let entering = (0..nvars)
            .filter(|&j| gamma[j].is_positive())
            .min_by_key(|&j| nonbasic[j]);
        let Some(q) = entering else { break };
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if !alpha[r][q].is_positive() {
                continue;
            }
            let ratio = &beta[r] / &alpha[r][q];
            let better = match &leave {
                None => true,
                Some((p, best)) => ratio < *best || (ratio == *best && basic[r] < basic[*p]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let Some((p, _)) = leave else { return Err(LpError::Unbounded) };

        let piv = alpha[p][q].clone();
        let inv = Rational::one() / &piv;
        beta[p] = &beta[p] * &inv;
        for (j, a) in alpha[p].iter_mut().enumerate() {
            *a = if j == q { inv.clone() } else { &*a * &inv };
        }
        let prow = alpha[p].clone();
        for r in 0..rows {
            if r == p || alpha[r][q].is_zero() {
                continue;
            }
            let f = alpha[r][q].clone();
            beta[r] = &beta[r] - &f * &beta[p];
            for j in 0..nvars {
                alpha[r][j] = if j == q { -&f * &prow[q] } else { &alpha[r][j] - &f * &prow[j] };
            }
        }
        let g = gamma[q].clone();
        z += &g * &beta[p];
        for j in 0..nvars {
            gamma[j] = if j == q { -&g * &prow[q] } else { &gamma[j] - &g * &prow[j] };
        }
        std::mem::swap(&mut basic[p], &mut nonbasic[q]);
        pivots += 1;
    }

    let mut point = vec![Rational::zero(); nvars];
    for (r, &v) in basic.iter().enumerate() {
        if v < nvars {
            point[v] = beta[r].clone();
        }
    }
    Ok(LpSolution { value: z, point, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{rat, ratio};

    #[test]
    fn textbook_program() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let c = vec![rat(3), rat(5)];
        let a = vec![vec![rat(1), rat(0)], vec![rat(0), rat(2)], vec![rat(3), rat(2)]];
        let b = vec![rat(4), rat(12), rat(18)];
        let s = maximize(&c, &a, &b).unwrap();
        assert_eq!(s.value, rat(36));
        assert_eq!(s.point, vec![rat(2), rat(6)]);
    }

    #[test]
    fn fractional_optimum() {
        // max x + y s.t. x/2 + y ≤ 1, x + y/2 ≤ 1 → 4/3.
        let c = vec![rat(1), rat(1)];
        let a = vec![vec![ratio(1, 2), rat(1)], vec![rat(1), ratio(1, 2)]];
        let s = maximize(&c, &a, &[rat(1), rat(1)]).unwrap();
        assert_eq!(s.value, ratio(4, 3));
    }

    #[test]
    fn unbounded_detected() {
        let c = vec![rat(1), rat(0)];
        let a = vec![vec![rat(0), rat(1)]];
        assert_eq!(maximize(&c, &a, &[rat(1)]), Err(LpError::Unbounded));
    }

    #[test]
    fn degenerate_program_terminates() {
        // Several constraints through the same vertex.
        let c = vec![rat(1), rat(1), rat(1)];
        let a = vec![
            vec![rat(1), rat(1), rat(0)],
            vec![rat(1), rat(0), rat(1)],
            vec![rat(0), rat(1), rat(1)],
            vec![rat(1), rat(1), rat(1)],
            vec![rat(2), rat(2), rat(2)],
        ];
        let b = vec![rat(1), rat(1), rat(1), rat(1), rat(2)];
        assert_eq!(maximize(&c, &a, &b).unwrap().value, rat(1));
    }
}
