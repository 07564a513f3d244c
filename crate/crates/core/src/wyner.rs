//! Wyner's common information C(X;Y) = min over X−U−Y of I(X,Y;U), which is
//! also the optimal common-message rate when no shared randomness is
//! available.
//!
//! The Markov constraint is handled with a penalty: for each λ of the
//! schedule, I(X,Y;U) + λ I(X;Y|U) is minimized by exponentiated gradient,
//! warm-started from the previous stage. Restarts run in parallel and are
//! merged by a total order, so the result does not depend on scheduling.
//! The reported value is the best feasible point found, an upper bound on
//! C(X;Y); global optimality is not certified.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{binary_entropy, conditional_mutual_information, entropy, mutual_information, Bits};
use crate::optim::{eg_minimize, stream, ChannelProblem, Objective, SolverOptions};
use crate::pmf::{compose, AuxChannel, Axis, JointPmf};

/// Largest I(X;Y|U) accepted as satisfying X−U−Y.
pub const MARKOV_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WynerResult {
    /// I(X,Y;U) of `channel`.
    pub value: Bits,
    pub channel: AuxChannel,
    /// I(X;Y|U) of `channel`.
    pub markov_defect: Bits,
    /// I(X;Y), which no feasible U can beat.
    pub lower_bound: Bits,
    /// min{H(X), H(Y)}, attained by U = X or U = Y.
    pub upper_bound: Bits,
    /// Restarts that ended inside the Markov tolerance.
    pub feasible_restarts: usize,
}

struct Candidate {
    rows: Vec<f64>,
    i_joint: f64,
    i_cond: f64,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub fn wyner_ci(q: &JointPmf, card_u: usize, opts: &SolverOptions) -> Result<WynerResult> {
    opts.validate()?;
    if card_u == 0 {
        return Err(Error::OutOfRange("card_u must be at least 1".into()));
    }
    let problem = ChannelProblem::new(q, card_u);

    let candidates: Vec<Candidate> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rows = problem.random_rows(&mut stream(opts.seed, r));
            for &lambda in &opts.penalty_schedule {
                eg_minimize(
                    &problem,
                    &mut rows,
                    Objective::Penalty(lambda),
                    opts.max_iters,
                    opts.tol_objective,
                );
            }
            let t = problem.evaluate(&rows, None);
            Candidate {
                rows,
                i_joint: t.i_joint,
                i_cond: t.i_cond,
            }
        })
        .collect();

    let feasible_restarts = candidates.iter().filter(|c| c.i_cond <= MARKOV_TOL).count();
    let best = candidates.iter().filter(|c| c.i_cond <= MARKOV_TOL).min_by(|a, b| {
        a.i_joint
            .total_cmp(&b.i_joint)
            .then(a.i_cond.total_cmp(&b.i_cond))
            .then_with(|| lexicographic(&a.rows, &b.rows))
    });
    let Some(best) = best else {
        let defect = candidates.iter().map(|c| c.i_cond).fold(f64::INFINITY, f64::min);
        return Err(Error::SolverInfeasible {
            defect,
            tol: MARKOV_TOL,
        });
    };

    let channel = problem.to_channel(&best.rows);
    let full = compose(q, &channel)?;
    let value = mutual_information(&full, &[Axis::X, Axis::Y], &[Axis::U])?;
    let markov_defect = conditional_mutual_information(&full, &[Axis::X], &[Axis::Y], &[Axis::U])?;
    if markov_defect > MARKOV_TOL {
        return Err(Error::SolverInfeasible {
            defect: markov_defect,
            tol: MARKOV_TOL,
        });
    }
    let lower_bound = mutual_information(&full, &[Axis::X], &[Axis::Y])?;
    let upper_bound = entropy(&q.marginal_x()).min(entropy(&q.marginal_y()));
    Ok(WynerResult {
        value,
        channel,
        markov_defect: markov_defect.max(0.0),
        lower_bound,
        upper_bound,
        feasible_restarts,
    })
}

/// Optimal rate without shared randomness; the auxiliary gets |X||Y|+2 symbols.
pub fn no_sr_rate(q: &JointPmf, opts: &SolverOptions) -> Result<WynerResult> {
    wyner_ci(q, q.nx() * q.ny() + 2, opts)
}

/// Wyner's closed-form minimizer for DSBS(a):
/// p(0|0,1) = p(1|1,0) = 1/2 and p(0|1,1) = p(1|0,0) = b²/(1−a),
/// with b = (1 − √(1−2a))/2.
pub fn dsbs_wyner_channel(a: f64) -> Result<AuxChannel> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::OutOfRange(format!("DSBS crossover {a} must lie in (0, 0.5)")));
    }
    let b = dsbs_b(a);
    let r = b * b / (1.0 - a);
    AuxChannel::from_u_rows(
        2,
        2,
        2,
        vec![vec![1.0 - r, r], vec![0.5, 0.5], vec![0.5, 0.5], vec![r, 1.0 - r]],
    )
}

/// b = (1 − √(1−2a))/2, the crossover of each processor's view of U.
pub(crate) fn dsbs_b(a: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * a).sqrt())
}

/// C(X;Y) = 1 + h(a) − 2h(b) for DSBS(a).
pub fn dsbs_common_information(a: f64) -> Result<Bits> {
    if !(0.0..=0.5).contains(&a) {
        return Err(Error::OutOfRange(format!("DSBS crossover {a} outside [0, 0.5]")));
    }
    Ok(1.0 + binary_entropy(a)? - 2.0 * binary_entropy(dsbs_b(a))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{dsbs_joint, Pmf};

    fn terms(q: &JointPmf, ch: &AuxChannel) -> (f64, f64) {
        let full = compose(q, ch).unwrap();
        (
            mutual_information(&full, &[Axis::X, Axis::Y], &[Axis::U]).unwrap(),
            conditional_mutual_information(&full, &[Axis::X], &[Axis::Y], &[Axis::U]).unwrap(),
        )
    }

    #[test]
    fn closed_form_channel() {
        let b = dsbs_b(0.1);
        assert!((b - 0.052786404500042).abs() < 1e-14);
        let ch = dsbs_wyner_channel(0.1).unwrap();
        assert!((ch.row(1, 1).unwrap()[0] - b * b / 0.9).abs() < 1e-17);
        assert!((ch.row(1, 1).unwrap()[0] - 0.003096).abs() < 1e-6);
        for x in 0..2 {
            for y in 0..2 {
                assert!((ch.row(x, y).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        let (ij, ic) = terms(&dsbs_joint(0.1).unwrap(), &ch);
        assert!(ic.abs() < 1e-9);
        assert!((ij - 0.872760566800152).abs() < 1e-9);
        assert!((dsbs_common_information(0.1).unwrap() - 0.872760566800152).abs() < 1e-12);
        assert!(dsbs_wyner_channel(0.0).is_err());
        assert!(dsbs_wyner_channel(0.5).is_err());
    }

    #[test]
    fn independent_source_with_trivial_auxiliary() {
        let q = JointPmf::product(&Pmf::new(vec![0.3, 0.7]).unwrap(), &Pmf::new(vec![0.6, 0.4]).unwrap()).unwrap();
        let res = wyner_ci(&q, 1, &SolverOptions::default()).unwrap();
        assert!(res.value.abs() < 1e-12);
        assert!(res.markov_defect < 1e-12);
        assert_eq!(res.channel.card_u(), 1);
    }

    #[test]
    fn dependent_source_with_trivial_auxiliary_is_infeasible() {
        let q = dsbs_joint(0.2).unwrap();
        let res = wyner_ci(&q, 1, &SolverOptions::default());
        assert!(matches!(res, Err(Error::SolverInfeasible { .. })));
    }

    #[test]
    fn dsbs_small_run_is_deterministic() {
        let q = dsbs_joint(0.2).unwrap();
        let opts = SolverOptions {
            restarts: 6,
            seed: 11,
            ..Default::default()
        };
        let a = wyner_ci(&q, 2, &opts).unwrap();
        let b = wyner_ci(&q, 2, &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.channel, b.channel);
        assert!(a.markov_defect <= MARKOV_TOL);
        assert!(a.value >= a.lower_bound - 1e-6 && a.value <= a.upper_bound + 1e-6);
    }
}
