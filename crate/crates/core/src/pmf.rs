//! Finite-alphabet probability objects.
//!
//! Everything here is validated on construction and immutable afterwards.
//! Nothing is renormalized: a table that does not sum to one within
//! [`SIMPLEX_TOL`] is rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on simplex sums for validated inputs.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Tolerance for internally composed tables.
pub const COMPOSE_TOL: f64 = 1e-12;

/// Common view over the dense probability tables of this module.
pub trait Distribution {
    fn shape(&self) -> Vec<usize>;
    fn probs(&self) -> &[f64];
}

fn validate_simplex(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("{what}: entry {i} is not finite")));
        }
        if p < 0.0 {
            return Err(Error::InvalidDistribution(format!("{what}: negative entry {p} at {i}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// A probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_simplex(&probs, "pmf")?;
        Ok(Pmf { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("pmf: empty alphabet".into()));
        }
        Ok(Pmf {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(Error::OutOfRange(format!(
                "point mass at {at} outside alphabet of {size}"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Ok(Pmf { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

impl Distribution for Pmf {
    fn shape(&self) -> Vec<usize> {
        vec![self.probs.len()]
    }
    fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Joint p.m.f. q(x, y), stored row-major with x as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
    labels_x: Option<Vec<String>>,
    labels_y: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JointPmfFile {
    #[serde(default)]
    alphabet_x: Option<Vec<String>>,
    #[serde(default)]
    alphabet_y: Option<Vec<String>>,
    pmf: Vec<Vec<f64>>,
}

impl JointPmf {
    pub fn from_flat(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || probs.len() != nx * ny {
            return Err(Error::InvalidDistribution(format!(
                "joint pmf: {} entries for a {nx}x{ny} grid",
                probs.len()
            )));
        }
        validate_simplex(&probs, "joint pmf")?;
        Ok(JointPmf {
            nx,
            ny,
            probs,
            labels_x: None,
            labels_y: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidDistribution("joint pmf: ragged rows".into()));
        }
        Self::from_flat(nx, ny, rows.concat())
    }

    /// Product distribution p ⊗ q.
    pub fn product(px: &Pmf, py: &Pmf) -> Result<Self> {
        let probs = px
            .as_slice()
            .iter()
            .flat_map(|&a| py.as_slice().iter().map(move |&b| a * b))
            .collect();
        Self::from_flat(px.len(), py.len(), probs)
    }

    pub fn with_labels(mut self, labels_x: Vec<String>, labels_y: Vec<String>) -> Result<Self> {
        if labels_x.len() != self.nx || labels_y.len() != self.ny {
            return Err(Error::InvalidDistribution(
                "alphabet labels do not match pmf shape".into(),
            ));
        }
        self.labels_x = Some(labels_x);
        self.labels_y = Some(labels_y);
        Ok(self)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn labels_x(&self) -> Option<&[String]> {
        self.labels_x.as_deref()
    }

    pub fn labels_y(&self) -> Option<&[String]> {
        self.labels_y.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.ny)
    }

    /// Cells with positive probability as `(x, y, q(x,y))`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let ny = self.ny;
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (i / ny, i % ny, p))
    }

    pub fn marginal_x(&self) -> Pmf {
        Pmf {
            probs: self.rows().map(|r| r.iter().sum()).collect(),
        }
    }

    pub fn marginal_y(&self) -> Pmf {
        let mut probs = vec![0.0; self.ny];
        for row in self.rows() {
            for (acc, &p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Pmf { probs }
    }

    /// True when `q(x,y) = q(x) q(y)` within `tol` on every cell.
    pub fn is_product(&self, tol: f64) -> bool {
        let (px, py) = (self.marginal_x(), self.marginal_y());
        (0..self.nx).all(|x| (0..self.ny).all(|y| (self.get(x, y) - px.get(x) * py.get(y)).abs() <= tol))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: JointPmfFile = serde_json::from_str(s)?;
        let q = Self::from_rows(&file.pmf)?;
        match (file.alphabet_x, file.alphabet_y) {
            (Some(lx), Some(ly)) => q.with_labels(lx, ly),
            (None, None) => Ok(q),
            _ => Err(Error::Parse("alphabet_x and alphabet_y must be given together".into())),
        }
    }

    pub fn to_json_string(&self) -> String {
        let default = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let file = JointPmfFile {
            alphabet_x: Some(self.labels_x.clone().unwrap_or_else(|| default(self.nx))),
            alphabet_y: Some(self.labels_y.clone().unwrap_or_else(|| default(self.ny))),
            pmf: self.rows().map(<[f64]>::to_vec).collect(),
        };
        serde_json::to_string_pretty(&file).expect("joint pmf serializes")
    }
}

impl Distribution for JointPmf {
    fn shape(&self) -> Vec<usize> {
        vec![self.nx, self.ny]
    }
    fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Reads a joint distribution file (`alphabet_x`, `alphabet_y`, `pmf`).
pub fn load_joint_pmf(path: impl AsRef<Path>) -> Result<JointPmf> {
    JointPmf::from_json_str(&fs::read_to_string(path)?)
}

/// Doubly symmetric binary source with crossover probability `a`.
pub fn dsbs_joint(a: f64) -> Result<JointPmf> {
    if !(0.0..=0.5).contains(&a) {
        return Err(Error::OutOfRange(format!("DSBS crossover {a} outside [0, 0.5]")));
    }
    let same = 0.5 * (1.0 - a);
    let diff = 0.5 * a;
    JointPmf::from_flat(2, 2, vec![same, diff, diff, same])
}

/// Total variation distance, half the L1 difference.
pub fn tv_distance<D: Distribution>(p: &D, q: &D) -> Result<f64> {
    let (sp, sq) = (p.shape(), q.shape());
    if sp != sq {
        return Err(Error::ShapeMismatch { left: sp, right: sq });
    }
    let l1: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * l1)
}

/// The five random variables a [`FullJoint`] ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    U,
    U1,
    U2,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::X, Axis::Y, Axis::U, Axis::U1, Axis::U2];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Conditional p.m.f. p(u, u1, u2 | x, y).
///
/// Rows are indexed by `x * ny + y` and flattened in (u, u1, u2) row-major
/// order. Rows for zero-probability source cells may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    nx: usize,
    ny: usize,
    cards: [usize; 3],
    rows: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AuxChannelFile {
    card_u: usize,
    card_u1: usize,
    card_u2: usize,
    cond: BTreeMap<String, Vec<f64>>,
}

impl AuxChannel {
    pub fn new(nx: usize, ny: usize, cards: [usize; 3], rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if cards.contains(&0) {
            return Err(Error::InvalidDistribution("aux channel: zero cardinality".into()));
        }
        if rows.len() != nx * ny {
            return Err(Error::InvalidDistribution(format!(
                "aux channel: {} rows for a {nx}x{ny} source",
                rows.len()
            )));
        }
        let width = cards.iter().product::<usize>();
        for (i, row) in rows.iter().enumerate() {
            if let Some(row) = row {
                if row.len() != width {
                    return Err(Error::InvalidDistribution(format!(
                        "aux channel: row ({},{}) has {} entries, expected {width}",
                        i / ny,
                        i % ny,
                        row.len()
                    )));
                }
                validate_simplex(row, &format!("aux channel row ({},{})", i / ny, i % ny))?;
            }
        }
        Ok(AuxChannel { nx, ny, cards, rows })
    }

    /// p(u|x,y) with U1 and U2 degenerate; `rows` in x-major order.
    pub fn from_u_rows(nx: usize, ny: usize, card_u: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(nx, ny, [card_u, 1, 1], rows.into_iter().map(Some).collect())
    }

    /// All auxiliaries constant.
    pub fn degenerate(nx: usize, ny: usize) -> Self {
        AuxChannel {
            nx,
            ny,
            cards: [1, 1, 1],
            rows: vec![Some(vec![1.0]); nx * ny],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cards(&self) -> [usize; 3] {
        self.cards
    }

    pub fn card_u(&self) -> usize {
        self.cards[0]
    }

    pub fn width(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn row(&self, x: usize, y: usize) -> Option<&[f64]> {
        self.rows[x * self.ny + y].as_deref()
    }

    /// Returns the channel (U, U1 = X, U2 = Y) built from this p(u|x,y).
    pub fn with_sources(&self) -> Result<Self> {
        if self.cards[1] != 1 || self.cards[2] != 1 {
            return Err(Error::InvalidDistribution(
                "with_sources expects degenerate U1 and U2".into(),
            ));
        }
        let (nx, ny, ku) = (self.nx, self.ny, self.cards[0]);
        let rows = (0..nx * ny)
            .map(|i| {
                self.rows[i].as_ref().map(|pu| {
                    let (x, y) = (i / ny, i % ny);
                    let mut row = vec![0.0; ku * nx * ny];
                    for (u, &p) in pu.iter().enumerate() {
                        row[(u * nx + x) * ny + y] = p;
                    }
                    row
                })
            })
            .collect();
        Self::new(nx, ny, [ku, nx, ny], rows)
    }

    pub fn from_json_str(s: &str, nx: usize, ny: usize) -> Result<Self> {
        let file: AuxChannelFile = serde_json::from_str(s)?;
        let mut rows = vec![None; nx * ny];
        for (key, row) in file.cond {
            let (x, y) = parse_cell_key(&key)?;
            if x >= nx || y >= ny {
                return Err(Error::Parse(format!("cond key \"{key}\" outside {nx}x{ny} source")));
            }
            rows[x * ny + y] = Some(row);
        }
        Self::new(nx, ny, [file.card_u, file.card_u1, file.card_u2], rows)
    }

    pub fn to_json_string(&self) -> String {
        let cond = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                r.as_ref()
                    .map(|r| (format!("{},{}", i / self.ny, i % self.ny), r.clone()))
            })
            .collect();
        let file = AuxChannelFile {
            card_u: self.cards[0],
            card_u1: self.cards[1],
            card_u2: self.cards[2],
            cond,
        };
        serde_json::to_string_pretty(&file).expect("aux channel serializes")
    }
}

fn parse_cell_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("cond key \"{key}\" is not of the form \"x,y\""));
    let (x, y) = key.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

/// Reads an auxiliary-channel file for a source of shape `nx × ny`.
pub fn load_aux_channel(path: impl AsRef<Path>, nx: usize, ny: usize) -> Result<AuxChannel> {
    AuxChannel::from_json_str(&fs::read_to_string(path)?, nx, ny)
}

/// Dense joint table over (x, y, u, u1, u2).
#[derive(Debug, Clone, PartialEq)]
pub struct FullJoint {
    dims: [usize; 5],
    probs: Vec<f64>,
}

impl FullJoint {
    pub fn new(dims: [usize; 5], probs: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) || dims.iter().product::<usize>() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "full joint: {} entries for dims {dims:?}",
                probs.len()
            )));
        }
        validate_simplex(&probs, "full joint")?;
        Ok(FullJoint { dims, probs })
    }

    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    pub fn card(&self, axis: Axis) -> usize {
        self.dims[axis.index()]
    }

    /// Marginal over `axes`, flattened row-major in the order given.
    pub fn marginal(&self, axes: &[Axis]) -> Result<Pmf> {
        if axes.is_empty() {
            return Err(Error::InvalidAxes("empty axis set".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::InvalidAxes(format!("axis {a:?} repeated")));
            }
        }
        Ok(Pmf {
            probs: self.marginal_table(axes),
        })
    }

    /// Unvalidated marginal table; `axes` may be empty (yields `[1.0]`).
    pub(crate) fn marginal_table(&self, axes: &[Axis]) -> Vec<f64> {
        let out_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a.index()]).collect();
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut idx = [0usize; 5];
        for &p in &self.probs {
            if p != 0.0 {
                let mut o = 0;
                for (&a, &d) in axes.iter().zip(&out_dims) {
                    o = o * d + idx[a.index()];
                }
                out[o] += p;
            }
            for k in (0..5).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    pub fn xy_marginal(&self) -> JointPmf {
        JointPmf {
            nx: self.dims[0],
            ny: self.dims[1],
            probs: self.marginal_table(&[Axis::X, Axis::Y]),
            labels_x: None,
            labels_y: None,
        }
    }
}

impl Distribution for FullJoint {
    fn shape(&self) -> Vec<usize> {
        self.dims.to_vec()
    }
    fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Chain rule p(x,y) · p(u,u1,u2|x,y).
pub fn compose(q: &JointPmf, aux: &AuxChannel) -> Result<FullJoint> {
    if q.nx != aux.nx || q.ny != aux.ny {
        return Err(Error::ShapeMismatch {
            left: q.shape(),
            right: vec![aux.nx, aux.ny],
        });
    }
    let width = aux.width();
    let mut probs = vec![0.0; q.nx * q.ny * width];
    for (x, y, p) in q.support() {
        let row = aux.row(x, y).ok_or(Error::MissingRow { x, y })?;
        let base = (x * q.ny + y) * width;
        for (dst, &c) in probs[base..base + width].iter_mut().zip(row) {
            *dst = p * c;
        }
    }
    let [ku, k1, k2] = aux.cards;
    Ok(FullJoint {
        dims: [q.nx, q.ny, ku, k1, k2],
        probs,
    })
}
