//! Rate-region membership.
//!
//! For an auxiliary p(u,u1,u2|x,y) with X−(U,U1)−(U,U2)−Y, a triple
//! (R, R1, R2) is achievable when
//!
//! ```text
//! R + R1        ≥ I(X,Y;U,U1)
//! R + R2        ≥ I(X,Y;U,U2)
//! R             ≥ I(U1;U2|U)
//! R + R1 + R2   ≥ I(U1;U2|U) + I(X,Y;U,U1,U2)
//! 2R + R1 + R2  ≥ I(U1;U2|U) + I(X,Y;U) + I(X,Y;U,U1,U2)
//! 2R            ≥ I(U1;U2|U) + I(X,Y;U)
//! ```
//!
//! This is an inner bound in general. When X = Y almost surely the region
//! is exactly R + min{R1, R2} ≥ H(X), R ≥ H(X)/2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, mutual_information, Bits};
use crate::pmf::{compose, AuxChannel, Axis, FullJoint, JointPmf};

/// Slack applied to every region inequality.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Largest Markov defect for which the region formula is applied.
pub const QUADRUPLE_TOL: f64 = 1e-6;

/// Common-message rate and the two shared-randomness rates, bits/symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTriple {
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateTriple {
    pub fn new(r: f64, r1: f64, r2: f64) -> Result<Self> {
        if [r, r1, r2].iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::OutOfRange(format!(
                "rates ({r}, {r1}, {r2}) must be finite and nonnegative"
            )));
        }
        Ok(RateTriple { r, r1, r2 })
    }
}

/// Right-hand sides of the six region inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionBounds {
    pub b_r_r1: Bits,
    pub b_r_r2: Bits,
    pub b_r: Bits,
    pub b_r_r1_r2: Bits,
    pub b_2r_r1_r2: Bits,
    pub b_2r: Bits,
    pub markov_defect: Bits,
}

impl RegionBounds {
    pub fn contains(&self, rates: &RateTriple) -> bool {
        let RateTriple { r, r1, r2 } = *rates;
        [
            (r + r1, self.b_r_r1),
            (r + r2, self.b_r_r2),
            (r, self.b_r),
            (r + r1 + r2, self.b_r_r1_r2),
            (2.0 * r + r1 + r2, self.b_2r_r1_r2),
            (2.0 * r, self.b_2r),
        ]
        .iter()
        .all(|&(lhs, rhs)| lhs >= rhs - MEMBERSHIP_SLACK)
    }
}

/// Defect I(X; Y,U2 | U,U1) + I(Y; X,U1 | U,U2) of X−(U,U1)−(U,U2)−Y.
pub fn check_markov_quadruple(full: &FullJoint, tol: f64) -> Result<(bool, Bits)> {
    use Axis::*;
    let d1 = conditional_mutual_information(full, &[X], &[Y, U2], &[U, U1])?;
    let d2 = conditional_mutual_information(full, &[Y], &[X, U1], &[U, U2])?;
    let defect = (d1 + d2).max(0.0);
    Ok((defect <= tol, defect))
}

pub fn achievable_bounds(q: &JointPmf, aux: &AuxChannel) -> Result<RegionBounds> {
    use Axis::*;
    let full = compose(q, aux)?;
    let (ok, markov_defect) = check_markov_quadruple(&full, QUADRUPLE_TOL)?;
    if !ok {
        return Err(Error::MarkovViolation {
            defect: markov_defect,
            tol: QUADRUPLE_TOL,
        });
    }
    let xy = [X, Y];
    let i_u1_u2_u = conditional_mutual_information(&full, &[U1], &[U2], &[U])?;
    let i_u = mutual_information(&full, &xy, &[U])?;
    let i_all = mutual_information(&full, &xy, &[U, U1, U2])?;
    Ok(RegionBounds {
        b_r_r1: mutual_information(&full, &xy, &[U, U1])?,
        b_r_r2: mutual_information(&full, &xy, &[U, U2])?,
        b_r: i_u1_u2_u,
        b_r_r1_r2: i_u1_u2_u + i_all,
        b_2r_r1_r2: i_u1_u2_u + i_u + i_all,
        b_2r: i_u1_u2_u + i_u,
        markov_defect,
    })
}

pub fn in_achievable_region(q: &JointPmf, aux: &AuxChannel, rates: &RateTriple) -> Result<bool> {
    Ok(achievable_bounds(q, aux)?.contains(rates))
}

/// Exact region when X = Y with entropy `hx`.
pub fn xy_equal_region(hx: Bits, rates: &RateTriple) -> Result<bool> {
    if !hx.is_finite() || hx < 0.0 {
        return Err(Error::OutOfRange(format!(
            "entropy {hx} must be finite and nonnegative"
        )));
    }
    Ok(rates.r + rates.r1.min(rates.r2) >= hx - MEMBERSHIP_SLACK && rates.r >= 0.5 * hx - MEMBERSHIP_SLACK)
}
