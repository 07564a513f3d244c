//! Monte Carlo run of the bin-indexed coordination scheme.
//!
//! Each processor shares randomness w_i = (m0i, b_i) with the coordinator.
//! The bin index m0 is the concatenation of m01 and m02. Inside bin m0 the
//! coordinator looks for the first m* whose triple
//! (u^n(m0,m*), x^n(m0,m*,b1), y^n(m0,m*,b2)) is jointly typical, and
//! broadcasts (m01 ⊕ m02, m*). Processor i XORs its own half back out,
//! recovers m0 and emits its codeword. The broadcast costs
//! R = R0/2 + R* bits/symbol and processor i uses R̃i + R0/2 bits/symbol of
//! shared randomness.
//!
//! Codewords are drawn i.i.d. from p(u), then per symbol from p(x|u) and
//! p(y|u). Codebooks are never materialized: every codeword is generated
//! on demand from a stream keyed by (codebook seed, indices), which is the
//! same random object as a stored codebook.
//!
//! The report pools the (x_t, y_t) letters of all positions and trials into
//! one empirical joint. Its distance to q lower-bounds the n-letter total
//! variation, so it can certify failure but not success.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, mutual_information, Bits};
use crate::optim::{derive_seed, mix64, stream};
use crate::pmf::{compose, tv_distance, AuxChannel, Axis, JointPmf, Pmf};

/// Largest number of m* candidates the coordinator enumerates per bin.
pub const MAX_MSTAR: u64 = 1 << 20;
/// Largest bit length of each half of the bin index.
pub const MAX_HALF_BITS: u32 = 31;
/// Largest bit length of a codebook index b_i.
pub const MAX_B_BITS: f64 = 62.0;
/// Largest I(X;Y|U) accepted: the processors' outputs are conditionally
/// independent given u^n, so the scheme presumes X−U−Y.
pub const CHAIN_TOL: f64 = 1e-6;

/// Scheme rates in bits/symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimRates {
    pub r0: f64,
    pub r_star: f64,
    pub rt1: f64,
    pub rt2: f64,
}

impl SimRates {
    pub fn new(r0: f64, r_star: f64, rt1: f64, rt2: f64) -> Result<Self> {
        if [r0, r_star, rt1, rt2].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::OutOfRange("scheme rates must be finite and nonnegative".into()));
        }
        Ok(SimRates { r0, r_star, rt1, rt2 })
    }

    /// Broadcast rate R = R0/2 + R*.
    pub fn message_rate(&self) -> f64 {
        self.r0 / 2.0 + self.r_star
    }

    /// Shared-randomness rate of processor 1, R̃1 + R0/2.
    pub fn shared_rate1(&self) -> f64 {
        self.rt1 + self.r0 / 2.0
    }

    pub fn shared_rate2(&self) -> f64 {
        self.rt2 + self.r0 / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub q: JointPmf,
    /// p(u|x,y); U1 and U2 must be degenerate.
    pub channel: AuxChannel,
    pub n: usize,
    pub rates: SimRates,
    pub eps_typ: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 {
            return Err(Error::OutOfRange(
                "block length and trial count must be at least 1".into(),
            ));
        }
        if self.eps_typ.is_nan() || self.eps_typ <= 0.0 {
            return Err(Error::OutOfRange(format!(
                "typicality slack {} must be positive",
                self.eps_typ
            )));
        }
        index_sizes(self.n, &self.rates).map(|_| ())
    }
}

/// Per-letter joint p(u, x, y), row-major in (u, x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct TripleJoint {
    pub dims: [usize; 3],
    pub probs: Vec<f64>,
}

impl TripleJoint {
    fn index(&self, u: usize, x: usize, y: usize) -> usize {
        (u * self.dims[1] + x) * self.dims[2] + y
    }
}

/// What the codebook generator and the typicality test need.
#[derive(Debug, Clone)]
pub struct Components {
    pub p_u: Pmf,
    /// Row u is p(x|u).
    pub p_x_given_u: Vec<Vec<f64>>,
    /// Row u is p(y|u).
    pub p_y_given_u: Vec<Vec<f64>>,
    pub joint: TripleJoint,
    /// I(X;Y|U), at most [`CHAIN_TOL`].
    pub i_cond: Bits,
    /// I(X,Y;U)
    pub i_joint: Bits,
}

pub fn derive_components(channel: &AuxChannel, q: &JointPmf) -> Result<Components> {
    if channel.cards()[1] != 1 || channel.cards()[2] != 1 {
        return Err(Error::InvalidDistribution(
            "the scheme uses a single auxiliary U".into(),
        ));
    }
    let full = compose(q, channel)?;
    let i_cond = conditional_mutual_information(&full, &[Axis::X], &[Axis::Y], &[Axis::U])?;
    if i_cond > CHAIN_TOL {
        return Err(Error::MarkovViolation {
            defect: i_cond,
            tol: CHAIN_TOL,
        });
    }
    let (k, nx, ny) = (channel.card_u(), q.nx(), q.ny());
    let uxy = full.marginal(&[Axis::U, Axis::X, Axis::Y])?;
    let p_u = full.marginal(&[Axis::U])?;
    let conditional = |axis: Axis, m: usize| -> Result<Vec<Vec<f64>>> {
        let table = full.marginal(&[Axis::U, axis])?;
        Ok((0..k)
            .map(|u| {
                let pu = p_u.get(u);
                if pu > 0.0 {
                    table.as_slice()[u * m..(u + 1) * m].iter().map(|v| v / pu).collect()
                } else {
                    // never drawn
                    vec![1.0 / m as f64; m]
                }
            })
            .collect())
    };
    Ok(Components {
        p_x_given_u: conditional(Axis::X, nx)?,
        p_y_given_u: conditional(Axis::Y, ny)?,
        i_cond,
        i_joint: mutual_information(&full, &[Axis::X, Axis::Y], &[Axis::U])?,
        joint: TripleJoint {
            dims: [k, nx, ny],
            probs: uxy.as_slice().to_vec(),
        },
        p_u,
    })
}

/// Index-set sizes after rounding ⌈2^{n·rate}⌉.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexSizes {
    /// Bits in each of m01 and m02; |M0| = 2^(2·m0_half_bits).
    pub m0_half_bits: u32,
    pub m_star: u64,
    pub b1: u64,
    pub b2: u64,
}

fn ceil_with_slack(v: f64) -> f64 {
    (v - 1e-9).ceil().max(0.0)
}

pub fn index_sizes(n: usize, rates: &SimRates) -> Result<IndexSizes> {
    let n = n as f64;
    let half = ceil_with_slack(n * rates.r0 / 2.0);
    if half > MAX_HALF_BITS as f64 {
        return Err(Error::SizeGuard(format!(
            "bin index halves need {half} bits, limit {MAX_HALF_BITS}"
        )));
    }
    let count = |rate: f64, what: &str, limit_bits: f64| -> Result<u64> {
        let bits = n * rate;
        if bits > limit_bits {
            return Err(Error::SizeGuard(format!(
                "{what} needs 2^{bits:.2} entries, limit 2^{limit_bits}"
            )));
        }
        Ok(ceil_with_slack(bits.exp2()).max(1.0) as u64)
    };
    let m_star = count(rates.r_star, "m*", 20.0)?;
    if m_star > MAX_MSTAR {
        return Err(Error::SizeGuard(format!(
            "m* needs {m_star} entries, limit {MAX_MSTAR}"
        )));
    }
    Ok(IndexSizes {
        m0_half_bits: half as u32,
        m_star,
        b1: count(rates.rt1, "b1", MAX_B_BITS)?,
        b2: count(rates.rt2, "b2", MAX_B_BITS)?,
    })
}

const TAG_U: u64 = 0x5555_0000_0000_0001;
const TAG_X: u64 = 0x5555_0000_0000_0002;
const TAG_Y: u64 = 0x5555_0000_0000_0003;

fn sample(probs: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    // r landed in the round-off gap above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// The three random codebooks of one trial.
#[derive(Debug, Clone)]
pub struct Codebooks {
    components: Arc<Components>,
    n: usize,
    sizes: IndexSizes,
    seed: u64,
}

impl Codebooks {
    pub fn new(components: Arc<Components>, n: usize, sizes: IndexSizes, seed: u64) -> Self {
        Codebooks {
            components,
            n,
            sizes,
            seed,
        }
    }

    pub fn sizes(&self) -> IndexSizes {
        self.sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    fn key(&self, tag: u64, parts: &[u64]) -> u64 {
        parts.iter().fold(mix64(self.seed ^ tag), |h, &p| mix64(h ^ p))
    }

    /// u^n(m0, m*), i.i.d. from p(u).
    pub fn u_word(&self, m0: u64, m_star: u64) -> Vec<usize> {
        let mut rng = stream(self.key(TAG_U, &[m0, m_star]), 0);
        let pu = self.components.p_u.as_slice();
        (0..self.n).map(|_| sample(pu, rng.random())).collect()
    }

    /// x^n(m0, m*, b1), letter t drawn from p(x | u_t).
    pub fn x_word(&self, m0: u64, m_star: u64, b1: u64, u: &[usize]) -> Vec<usize> {
        let mut rng = stream(self.key(TAG_X, &[m0, m_star, b1]), 0);
        u.iter()
            .map(|&ut| sample(&self.components.p_x_given_u[ut], rng.random()))
            .collect()
    }

    /// y^n(m0, m*, b2), letter t drawn from p(y | u_t).
    pub fn y_word(&self, m0: u64, m_star: u64, b2: u64, u: &[usize]) -> Vec<usize> {
        let mut rng = stream(self.key(TAG_Y, &[m0, m_star, b2]), 0);
        u.iter()
            .map(|&ut| sample(&self.components.p_y_given_u[ut], rng.random()))
            .collect()
    }
}

pub fn build_codebooks(cfg: &SimConfig, trial_seed: u64) -> Result<Codebooks> {
    cfg.validate()?;
    let sizes = index_sizes(cfg.n, &cfg.rates)?;
    let components = Arc::new(derive_components(&cfg.channel, &cfg.q)?);
    Ok(Codebooks::new(components, cfg.n, sizes, derive_seed(trial_seed, 0)))
}

/// Shared randomness between the coordinator and one processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedRandomness {
    /// This processor's half of the bin index, `m0_half_bits` bits.
    pub m0_part: u64,
    pub b: u64,
}

/// The common broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub m0_xor: u64,
    pub m_star: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub message: Message,
    /// No candidate in the bin was typical; m* fell back to the first index.
    pub failed: bool,
    pub u_word: Vec<usize>,
}

fn join_halves(m01: u64, m02: u64, bits: u32) -> u64 {
    (m01 << bits) | m02
}

/// Empirical type of (u, x, y) within `eps` of p on every cell, and no
/// letter on a zero-probability cell.
pub fn typicality_test(u: &[usize], x: &[usize], y: &[usize], p: &TripleJoint, eps: f64) -> bool {
    let n = u.len();
    if n == 0 || x.len() != n || y.len() != n {
        return false;
    }
    let mut counts = vec![0u32; p.probs.len()];
    for ((&ut, &xt), &yt) in u.iter().zip(x).zip(y) {
        let i = p.index(ut, xt, yt);
        if p.probs[i] == 0.0 {
            return false;
        }
        counts[i] += 1;
    }
    let n = n as f64;
    counts
        .iter()
        .zip(&p.probs)
        .all(|(&c, &pr)| (c as f64 / n - pr).abs() <= eps)
}

pub fn coordinator_select(w1: &SharedRandomness, w2: &SharedRandomness, books: &Codebooks, eps_typ: f64) -> Selection {
    let bits = books.sizes.m0_half_bits;
    let m0 = join_halves(w1.m0_part, w2.m0_part, bits);
    let message = |m_star| Message {
        m0_xor: w1.m0_part ^ w2.m0_part,
        m_star,
    };
    let joint = &books.components.joint;
    let mut first = None;
    for m_star in 0..books.sizes.m_star {
        let u = books.u_word(m0, m_star);
        let x = books.x_word(m0, m_star, w1.b, &u);
        let y = books.y_word(m0, m_star, w2.b, &u);
        if typicality_test(&u, &x, &y, joint, eps_typ) {
            return Selection {
                message: message(m_star),
                failed: false,
                u_word: u,
            };
        }
        if first.is_none() {
            first = Some(u);
        }
    }
    Selection {
        message: message(0),
        failed: true,
        u_word: first.unwrap_or_default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Processor {
    First,
    Second,
}

/// Output of one processor from the broadcast and its own randomness only.
pub fn processor_output(
    which: Processor,
    msg: &Message,
    w: &SharedRandomness,
    books: &Codebooks,
) -> Result<Vec<usize>> {
    let sizes = books.sizes;
    let half_limit = 1u64 << sizes.m0_half_bits;
    let b_limit = match which {
        Processor::First => sizes.b1,
        Processor::Second => sizes.b2,
    };
    if w.m0_part >= half_limit || msg.m0_xor >= half_limit || msg.m_star >= sizes.m_star || w.b >= b_limit {
        return Err(Error::OutOfRange(format!(
            "message {msg:?} or randomness {w:?} outside index sets {sizes:?}"
        )));
    }
    let other = msg.m0_xor ^ w.m0_part;
    let m0 = match which {
        Processor::First => join_halves(w.m0_part, other, sizes.m0_half_bits),
        Processor::Second => join_halves(other, w.m0_part, sizes.m0_half_bits),
    };
    let u = books.u_word(m0, msg.m_star);
    Ok(match which {
        Processor::First => books.x_word(m0, msg.m_star, w.b, &u),
        Processor::Second => books.y_word(m0, msg.m_star, w.b, &u),
    })
}

/// Rates as configured, as implied by R = R0/2 + R*, and after rounding.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub card_u: usize,
    pub rates: SimRates,
    /// (R, R1, R2) implied by the configured rates.
    pub message_rate: f64,
    pub shared_rate1: f64,
    pub shared_rate2: f64,
    pub index_sizes: IndexSizes,
    /// (R0, R*, R̃1, R̃2) realized after rounding the index sets.
    pub effective_rates: [f64; 4],
    pub eps_typ: f64,
    pub trials: usize,
    pub seed: u64,
    pub i_joint: Bits,
    pub i_cond: Bits,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub empirical_joint: JointPmf,
    pub tv_per_letter: f64,
    pub mstar_failure_rate: f64,
    pub trials_run: usize,
    /// Pooled counts of (u_t, x_t, y_t), row-major.
    pub uxy_counts: Vec<u64>,
    pub config_echo: ConfigEcho,
}

#[derive(Serialize)]
struct SimReportFile<'a> {
    empirical_joint: Vec<Vec<f64>>,
    tv_per_letter: f64,
    mstar_failure_rate: f64,
    trials_run: usize,
    config_echo: &'a ConfigEcho,
}

impl SimReport {
    pub fn to_json_string(&self) -> String {
        let file = SimReportFile {
            empirical_joint: self.empirical_joint.rows().map(<[f64]>::to_vec).collect(),
            tv_per_letter: self.tv_per_letter,
            mstar_failure_rate: self.mstar_failure_rate,
            trials_run: self.trials_run,
            config_echo: &self.config_echo,
        };
        serde_json::to_string_pretty(&file).expect("report serializes")
    }
}

#[derive(Default)]
struct Tally {
    uxy: Vec<u64>,
    failures: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.uxy.is_empty() {
            return other;
        }
        for (a, b) in self.uxy.iter_mut().zip(other.uxy) {
            *a += b;
        }
        self.failures += other.failures;
        self
    }
}

fn run_trial(cfg: &SimConfig, components: &Arc<Components>, sizes: IndexSizes, trial: u64) -> Result<Tally> {
    let trial_seed = derive_seed(cfg.seed, trial);
    let books = Codebooks::new(Arc::clone(components), cfg.n, sizes, derive_seed(trial_seed, 0));
    let mut rng = stream(trial_seed, 1);
    let half = 1u64 << sizes.m0_half_bits;
    let w1 = SharedRandomness {
        m0_part: rng.random_range(0..half),
        b: rng.random_range(0..sizes.b1),
    };
    let w2 = SharedRandomness {
        m0_part: rng.random_range(0..half),
        b: rng.random_range(0..sizes.b2),
    };

    let sel = coordinator_select(&w1, &w2, &books, cfg.eps_typ);
    let x = processor_output(Processor::First, &sel.message, &w1, &books)?;
    let y = processor_output(Processor::Second, &sel.message, &w2, &books)?;

    let joint = &components.joint;
    let mut uxy = vec![0u64; joint.probs.len()];
    for ((&u, &xt), &yt) in sel.u_word.iter().zip(&x).zip(&y) {
        uxy[joint.index(u, xt, yt)] += 1;
    }
    Ok(Tally {
        uxy,
        failures: sel.failed as u64,
    })
}

pub fn run_trials(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let sizes = index_sizes(cfg.n, &cfg.rates)?;
    let components = Arc::new(derive_components(&cfg.channel, &cfg.q)?);

    let tally = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &components, sizes, t))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let [k, nx, ny] = components.joint.dims;
    let total = (cfg.n * cfg.trials) as f64;
    let mut xy = vec![0u64; nx * ny];
    for u in 0..k {
        for (i, c) in xy.iter_mut().enumerate() {
            *c += tally.uxy[u * nx * ny + i];
        }
    }
    let empirical_joint = JointPmf::from_flat(nx, ny, xy.iter().map(|&c| c as f64 / total).collect())?;
    let tv_per_letter = tv_distance(&empirical_joint, &cfg.q)?;

    let n = cfg.n as f64;
    let config_echo = ConfigEcho {
        n: cfg.n,
        card_u: k,
        rates: cfg.rates,
        message_rate: cfg.rates.message_rate(),
        shared_rate1: cfg.rates.shared_rate1(),
        shared_rate2: cfg.rates.shared_rate2(),
        index_sizes: sizes,
        effective_rates: [
            2.0 * sizes.m0_half_bits as f64 / n,
            (sizes.m_star as f64).log2() / n,
            (sizes.b1 as f64).log2() / n,
            (sizes.b2 as f64).log2() / n,
        ],
        eps_typ: cfg.eps_typ,
        trials: cfg.trials,
        seed: cfg.seed,
        i_joint: components.i_joint,
        i_cond: components.i_cond,
    };
    Ok(SimReport {
        empirical_joint,
        tv_per_letter,
        mstar_failure_rate: tally.failures as f64 / cfg.trials as f64,
        trials_run: cfg.trials,
        uxy_counts: tally.uxy,
        config_echo,
    })
}
