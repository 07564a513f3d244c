//! Exponentiated-gradient descent over conditional p.m.f.s p(u|x,y).
//!
//! Only the rows for support cells of q are optimized. The two quantities
//! every objective is built from, I(X,Y;U) and I(X;Y|U), are evaluated here
//! together with their gradients, scaled per row by 1/q(x,y) so that the
//! update is invariant to how much mass a cell carries.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::Bits;
use crate::pmf::{AuxChannel, JointPmf};

const LN2: f64 = std::f64::consts::LN_2;
const FLOOR: f64 = 1e-300;

/// Knobs shared by the Wyner and unlimited-shared-randomness solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol_objective: f64,
    /// Markov-penalty weights, swept in order with warm starts.
    pub penalty_schedule: Vec<f64>,
    /// Inverse temperatures (1/bits) of the smooth max, swept in order.
    pub temperatures: Vec<f64>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 50,
            max_iters: 5000,
            tol_objective: 1e-9,
            penalty_schedule: vec![1.0, 10.0, 100.0, 1000.0],
            temperatures: vec![10.0, 100.0, 1000.0],
            seed: 0,
        }
    }
}

fn strictly_increasing_positive(v: &[f64]) -> bool {
    !v.is_empty() && v[0] > 0.0 && v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite())
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::OutOfRange("restarts and max_iters must be at least 1".into()));
        }
        if self.tol_objective.is_nan() || self.tol_objective <= 0.0 {
            return Err(Error::OutOfRange(format!(
                "tol_objective {} must be positive",
                self.tol_objective
            )));
        }
        if !strictly_increasing_positive(&self.penalty_schedule) {
            return Err(Error::OutOfRange(
                "penalty schedule must be positive and strictly increasing".into(),
            ));
        }
        if !strictly_increasing_positive(&self.temperatures) {
            return Err(Error::OutOfRange(
                "temperatures must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream `(seed, index)`.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Terms {
    pub i_joint: Bits,
    pub i_cond: Bits,
}

/// Source support and auxiliary cardinality.
#[derive(Debug, Clone)]
pub(crate) struct ChannelProblem {
    nx: usize,
    ny: usize,
    k: usize,
    cells: Vec<(usize, usize, f64)>,
}

impl ChannelProblem {
    pub fn new(q: &JointPmf, k: usize) -> Self {
        ChannelProblem {
            nx: q.nx(),
            ny: q.ny(),
            k,
            cells: q.support().collect(),
        }
    }

    #[cfg(test)]
    pub fn card_u(&self) -> usize {
        self.k
    }

    #[cfg(test)]
    pub fn cells(&self) -> &[(usize, usize, f64)] {
        &self.cells
    }

    /// Dirichlet(1) rows.
    pub fn random_rows(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut rows = Vec::with_capacity(self.cells.len() * self.k);
        for _ in &self.cells {
            let start = rows.len();
            for _ in 0..self.k {
                let u: f64 = rng.random();
                rows.push(-(1.0 - u).ln() + FLOOR);
            }
            let s: f64 = rows[start..].iter().sum();
            rows[start..].iter_mut().for_each(|v| *v /= s);
        }
        rows
    }

    /// Rows of `ch` on the support, zero-padded to `k` symbols and mixed
    /// with weight `smoothing` of the uniform row.
    pub fn rows_from_channel(&self, ch: &AuxChannel, smoothing: f64) -> Result<Vec<f64>> {
        if ch.card_u() > self.k || ch.cards()[1] != 1 || ch.cards()[2] != 1 {
            return Err(Error::InvalidDistribution(
                "start channel does not fit the problem".into(),
            ));
        }
        let mut rows = Vec::with_capacity(self.cells.len() * self.k);
        for &(x, y, _) in &self.cells {
            let r = ch.row(x, y).ok_or(Error::MissingRow { x, y })?;
            for u in 0..self.k {
                let p = r.get(u).copied().unwrap_or(0.0);
                rows.push((1.0 - smoothing) * p + smoothing / self.k as f64);
            }
        }
        Ok(rows)
    }

    pub fn to_channel(&self, rows: &[f64]) -> AuxChannel {
        let mut full = vec![None; self.nx * self.ny];
        for (c, &(x, y, _)) in self.cells.iter().enumerate() {
            let row = &rows[c * self.k..(c + 1) * self.k];
            let s: f64 = row.iter().sum();
            // rows are kept on the simplex up to round-off; fold that back in
            full[x * self.ny + y] = Some(row.iter().map(|v| v / s).collect());
        }
        AuxChannel::new(self.nx, self.ny, [self.k, 1, 1], full).expect("optimizer rows stay on the simplex")
    }

    /// Both terms, and with `grads` the row-scaled gradients (joint, cond).
    pub fn evaluate(&self, rows: &[f64], grads: Option<(&mut [f64], &mut [f64])>) -> Terms {
        let (nx, ny, k) = (self.nx, self.ny, self.k);
        let mut pu = vec![0.0; k];
        let mut pxu = vec![0.0; nx * k];
        let mut pyu = vec![0.0; ny * k];
        for (c, &(x, y, q)) in self.cells.iter().enumerate() {
            for u in 0..k {
                let j = q * rows[c * k + u];
                pu[u] += j;
                pxu[x * k + u] += j;
                pyu[y * k + u] += j;
            }
        }
        let mut i_joint = 0.0;
        let mut i_cond = 0.0;
        for (c, &(x, y, q)) in self.cells.iter().enumerate() {
            for u in 0..k {
                let r = rows[c * k + u];
                let j = q * r;
                if j > 0.0 {
                    let (lr, lpu) = (r.ln(), pu[u].ln());
                    i_joint += j * (lr - lpu);
                    i_cond += j * (j.ln() + lpu - pxu[x * k + u].ln() - pyu[y * k + u].ln());
                }
            }
        }
        if let Some((gj, gc)) = grads {
            for (c, &(x, y, q)) in self.cells.iter().enumerate() {
                for u in 0..k {
                    let i = c * k + u;
                    let lr = rows[i].max(FLOOR).ln();
                    let lpu = pu[u].max(FLOOR).ln();
                    gj[i] = (lr - lpu) / LN2;
                    let lpxu = pxu[x * k + u].max(FLOOR).ln();
                    let lpyu = pyu[y * k + u].max(FLOOR).ln();
                    gc[i] = (q.ln() + lr + lpu - lpxu - lpyu) / LN2;
                }
            }
        }
        Terms {
            i_joint: i_joint / LN2,
            i_cond: i_cond / LN2,
        }
    }
}

/// Which scalar function of the two terms is being minimized.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective {
    /// I(X,Y;U) + λ I(X;Y|U).
    Penalty(f64),
    /// log-sum-exp of (a, b) at inverse temperature β, a/b from `Pair`.
    SmoothMax(Pair, f64),
    /// max(a, b), with the gradient of the larger term.
    Max(Pair),
}

/// The two arguments of a min-max form, as weights on (I(X,Y;U), I(X;Y|U)).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pair {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Pair {
    fn eval(&self, t: &Terms) -> (f64, f64) {
        (
            self.a.0 * t.i_joint + self.a.1 * t.i_cond,
            self.b.0 * t.i_joint + self.b.1 * t.i_cond,
        )
    }
}

impl Objective {
    fn value(&self, t: &Terms) -> f64 {
        match *self {
            Objective::Penalty(l) => t.i_joint + l * t.i_cond,
            Objective::SmoothMax(p, beta) => {
                let (a, b) = p.eval(t);
                let m = a.max(b);
                m + ((beta * (a - m)).exp() + (beta * (b - m)).exp()).ln() / beta
            }
            Objective::Max(p) => {
                let (a, b) = p.eval(t);
                a.max(b)
            }
        }
    }

    /// Weights (w_joint, w_cond) of the two term gradients.
    fn weights(&self, t: &Terms) -> (f64, f64) {
        match *self {
            Objective::Penalty(l) => (1.0, l),
            Objective::SmoothMax(p, beta) => {
                let (a, b) = p.eval(t);
                let wa = 1.0 / (1.0 + (beta * (b - a)).exp());
                let wb = 1.0 - wa;
                (wa * p.a.0 + wb * p.b.0, wa * p.a.1 + wb * p.b.1)
            }
            Objective::Max(p) => {
                let (a, b) = p.eval(t);
                if a >= b {
                    p.a
                } else {
                    p.b
                }
            }
        }
    }
}

/// Minimizes `obj` from `rows` in place; returns the final objective.
pub(crate) fn eg_minimize(
    problem: &ChannelProblem,
    rows: &mut Vec<f64>,
    obj: Objective,
    max_iters: usize,
    tol: f64,
) -> f64 {
    let k = problem.k;
    let n = rows.len();
    let mut gj = vec![0.0; n];
    let mut gc = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut cand = vec![0.0; n];

    let mut terms = problem.evaluate(rows, Some((&mut gj, &mut gc)));
    let mut f = obj.value(&terms);
    let mut step = 1.0 / obj.weights(&terms).1.max(1.0);

    for _ in 0..max_iters {
        let (wj, wc) = obj.weights(&terms);
        for i in 0..n {
            dir[i] = wj * gj[i] + wc * gc[i];
        }
        let mut accepted = None;
        while step > 1e-14 {
            for (c_rows, (r_rows, d_rows)) in cand.chunks_mut(k).zip(rows.chunks(k).zip(dir.chunks(k))) {
                let shift = d_rows.iter().copied().fold(f64::INFINITY, f64::min);
                let mut s = 0.0;
                for ((c, &r), &d) in c_rows.iter_mut().zip(r_rows).zip(d_rows) {
                    *c = (r * (-step * (d - shift)).exp()).max(FLOOR);
                    s += *c;
                }
                c_rows.iter_mut().for_each(|c| *c /= s);
            }
            let t = problem.evaluate(&cand, None);
            let fc = obj.value(&t);
            if fc < f {
                accepted = Some(fc);
                break;
            }
            step *= 0.5;
        }
        let Some(fc) = accepted else { break };
        std::mem::swap(rows, &mut cand);
        terms = problem.evaluate(rows, Some((&mut gj, &mut gc)));
        let improvement = f - fc;
        f = fc;
        step = (step * 2.0).min(1e3);
        if improvement < tol {
            break;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{conditional_mutual_information, mutual_information};
    use crate::pmf::{compose, dsbs_joint, Axis};

    fn random_problem(seed: u64) -> (JointPmf, ChannelProblem, Vec<f64>) {
        let mut rng = stream(seed, 0);
        let raw: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = raw.iter().sum();
        let q = JointPmf::from_flat(2, 3, raw.iter().map(|v| v / s).collect()).unwrap();
        let p = ChannelProblem::new(&q, 3);
        let rows = p.random_rows(&mut rng);
        (q, p, rows)
    }

    #[test]
    fn terms_match_generic_kernel() {
        for seed in 0..5 {
            let (q, p, rows) = random_problem(seed);
            let t = p.evaluate(&rows, None);
            let full = compose(&q, &p.to_channel(&rows)).unwrap();
            let ij = mutual_information(&full, &[Axis::X, Axis::Y], &[Axis::U]).unwrap();
            let ic = conditional_mutual_information(&full, &[Axis::X], &[Axis::Y], &[Axis::U]).unwrap();
            assert!((t.i_joint - ij).abs() < 1e-12);
            assert!((t.i_cond - ic).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (_, p, rows) = random_problem(7);
        let n = rows.len();
        let mut gj = vec![0.0; n];
        let mut gc = vec![0.0; n];
        p.evaluate(&rows, Some((&mut gj, &mut gc)));
        let k = p.card_u();
        let h = 1e-6;
        // directional derivative along e_i - e_j within a row stays on the simplex
        for c in 0..p.cells().len() {
            let q = p.cells()[c].2;
            let (i, j) = (c * k, c * k + 1);
            let mut plus = rows.clone();
            let mut minus = rows.clone();
            plus[i] += h;
            plus[j] -= h;
            minus[i] -= h;
            minus[j] += h;
            let (tp, tm) = (p.evaluate(&plus, None), p.evaluate(&minus, None));
            let fd_j = (tp.i_joint - tm.i_joint) / (2.0 * h);
            let fd_c = (tp.i_cond - tm.i_cond) / (2.0 * h);
            assert!(
                (fd_j - q * (gj[i] - gj[j])).abs() < 1e-6,
                "joint {fd_j} vs {}",
                q * (gj[i] - gj[j])
            );
            assert!(
                (fd_c - q * (gc[i] - gc[j])).abs() < 1e-6,
                "cond {fd_c} vs {}",
                q * (gc[i] - gc[j])
            );
        }
    }

    #[test]
    fn minimizing_joint_term_alone_reaches_zero() {
        let q = dsbs_joint(0.2).unwrap();
        let p = ChannelProblem::new(&q, 2);
        let mut rows = p.random_rows(&mut stream(3, 0));
        let f = eg_minimize(&p, &mut rows, Objective::Penalty(0.0), 5000, 1e-14);
        assert!(f < 1e-8, "{f}");
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions {
            penalty_schedule: vec![10.0, 1.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverOptions {
            tol_objective: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn derived_streams_differ_and_repeat() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }
}
