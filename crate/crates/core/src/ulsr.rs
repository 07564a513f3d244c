//! Optimal common-message rate when both shared-randomness rates are
//! unlimited:
//!
//! min over p(u|x,y) of max{I(X;Y|U), I(X,Y;U)}
//!   = min over p(u|x,y) of max{I(X;Y|U), ½(I(X,Y;U) + I(X;Y|U))},
//!
//! with |U| ≤ |X||Y| + 2. The max is smoothed by log-sum-exp with an
//! annealed inverse temperature and then polished on the exact max.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsbs::interpolated_channel;
use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, mutual_information, Bits};
use crate::optim::{eg_minimize, stream, ChannelProblem, Objective, Pair, SolverOptions};
use crate::pmf::{compose, AuxChannel, Axis, JointPmf};
use crate::wyner::{dsbs_wyner_channel, wyner_ci};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UlsrForm {
    /// max{I(X;Y|U), I(X,Y;U)}
    MaxPair,
    /// max{I(X;Y|U), ½(I(X,Y;U) + I(X;Y|U))}
    MaxAvg,
}

impl UlsrForm {
    pub fn combine(self, i_joint: Bits, i_cond: Bits) -> Bits {
        match self {
            UlsrForm::MaxPair => i_cond.max(i_joint),
            UlsrForm::MaxAvg => i_cond.max(0.5 * (i_joint + i_cond)),
        }
    }

    fn pair(self) -> Pair {
        match self {
            UlsrForm::MaxPair => Pair {
                a: (0.0, 1.0),
                b: (1.0, 0.0),
            },
            UlsrForm::MaxAvg => Pair {
                a: (0.0, 1.0),
                b: (0.5, 0.5),
            },
        }
    }
}

impl fmt::Display for UlsrForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UlsrForm::MaxPair => write!(f, "maxpair"),
            UlsrForm::MaxAvg => write!(f, "maxavg"),
        }
    }
}

/// Where the winning restart began.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StartKind {
    Degenerate,
    Wyner,
    Interpolated(f64),
    Random,
}

#[derive(Debug, Clone)]
pub struct UlsrResult {
    pub form: UlsrForm,
    pub value: Bits,
    pub channel: AuxChannel,
    /// I(X;Y|U)
    pub term_cond: Bits,
    /// I(X,Y;U)
    pub term_joint: Bits,
    pub restarts_run: usize,
    pub best_start: StartKind,
}

/// Evaluates the chosen form at a fixed channel.
pub fn ulsr_objective(q: &JointPmf, ch: &AuxChannel, form: UlsrForm) -> Result<UlsrResult> {
    let full = compose(q, ch)?;
    let term_joint = mutual_information(&full, &[Axis::X, Axis::Y], &[Axis::U])?;
    let term_cond = conditional_mutual_information(&full, &[Axis::X], &[Axis::Y], &[Axis::U])?;
    Ok(UlsrResult {
        form,
        value: form.combine(term_joint, term_cond),
        channel: ch.clone(),
        term_cond,
        term_joint,
        restarts_run: 0,
        best_start: StartKind::Random,
    })
}

/// Crossover `a` when q is DSBS(a) with 0 < a < 1/2.
fn dsbs_crossover(q: &JointPmf) -> Option<f64> {
    if q.nx() != 2 || q.ny() != 2 {
        return None;
    }
    let (d0, d1, o0, o1) = (q.get(0, 0), q.get(1, 1), q.get(0, 1), q.get(1, 0));
    let symmetric = (d0 - d1).abs() <= 1e-12 && (o0 - o1).abs() <= 1e-12 && (d0 + o0 - 0.5).abs() <= 1e-12;
    let a = o0 + o1;
    (symmetric && a > 0.0 && a < 0.5).then_some(a)
}

fn structured_starts(q: &JointPmf, opts: &SolverOptions) -> Vec<(StartKind, AuxChannel)> {
    let mut starts = vec![(StartKind::Degenerate, AuxChannel::degenerate(q.nx(), q.ny()))];
    if let Some(a) = dsbs_crossover(q) {
        if let Ok(ch) = dsbs_wyner_channel(a) {
            starts.push((StartKind::Wyner, ch));
        }
        for t in [0.25, 0.5, 0.75] {
            if let Ok(ch) = interpolated_channel(a, t) {
                starts.push((StartKind::Interpolated(t), ch));
            }
        }
    } else {
        let wopts = SolverOptions {
            restarts: opts.restarts.min(8),
            ..opts.clone()
        };
        if let Ok(w) = wyner_ci(q, q.nx() * q.ny(), &wopts) {
            starts.push((StartKind::Wyner, w.channel));
        }
    }
    starts
}

struct Candidate {
    start: StartKind,
    rows: Vec<f64>,
    value: f64,
    i_cond: f64,
}

/// Best channel found over |U| = |X||Y| + 2 from structured and random starts.
pub fn ulsr_rate(q: &JointPmf, form: UlsrForm, opts: &SolverOptions) -> Result<UlsrResult> {
    opts.validate()?;
    let problem = ChannelProblem::new(q, q.nx() * q.ny() + 2);
    let structured = structured_starts(q, opts);
    let pair = form.pair();

    let candidates: Vec<Candidate> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| -> Result<Candidate> {
            let (start, mut rows) = match structured.get(r) {
                Some((kind, ch)) => (*kind, problem.rows_from_channel(ch, 1e-6)?),
                None => (StartKind::Random, problem.random_rows(&mut stream(opts.seed, r as u64))),
            };
            for &beta in &opts.temperatures {
                eg_minimize(
                    &problem,
                    &mut rows,
                    Objective::SmoothMax(pair, beta),
                    opts.max_iters,
                    opts.tol_objective,
                );
            }
            eg_minimize(
                &problem,
                &mut rows,
                Objective::Max(pair),
                opts.max_iters,
                opts.tol_objective,
            );
            let t = problem.evaluate(&rows, None);
            Ok(Candidate {
                start,
                value: form.combine(t.i_joint, t.i_cond),
                i_cond: t.i_cond,
                rows,
            })
        })
        .collect::<Result<_>>()?;

    let best = candidates
        .iter()
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.i_cond.total_cmp(&b.i_cond))
                .then_with(|| {
                    a.rows
                        .iter()
                        .zip(&b.rows)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(Ordering::Equal)
                })
        })
        .ok_or_else(|| Error::OutOfRange("no restarts".into()))?;

    let mut result = ulsr_objective(q, &problem.to_channel(&best.rows), form)?;
    result.restarts_run = candidates.len();
    result.best_start = best.start;
    Ok(result)
}
