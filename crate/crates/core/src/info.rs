//! Shannon information measures in bits.
//!
//! Mutual informations are assembled from marginal entropies of a
//! [`FullJoint`], with `0 log 0 = 0`.

use crate::error::{Error, Result};
use crate::pmf::{Axis, FullJoint, Pmf, SIMPLEX_TOL};

/// Information quantity in bits (log base 2).
pub type Bits = f64;

/// Entropy of an unvalidated nonnegative table.
pub(crate) fn entropy_of(probs: &[f64]) -> Bits {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

pub fn entropy(p: &Pmf) -> Bits {
    entropy_of(p.as_slice())
}

pub fn binary_entropy(a: f64) -> Result<Bits> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange(format!("binary entropy argument {a} outside [0, 1]")));
    }
    Ok(entropy_of(&[a, 1.0 - a]))
}

/// The unique x in [0, 1/2] with h(x) = y, by bisection.
pub fn inverse_binary_entropy(y: Bits) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfRange(format!(
            "inverse binary entropy argument {y} outside [0, 1]"
        )));
    }
    if y == 1.0 {
        // h is flat to machine precision near 1/2, so bisection can't find it
        return Ok(0.5);
    }
    let h = |x: f64| entropy_of(&[x, 1.0 - x]);
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever bracket end is closer in h
    Ok(if (h(lo) - y).abs() <= (h(hi) - y).abs() { lo } else { hi })
}

/// Entropy of a four-point distribution.
pub fn entropy_vec4(p: [f64; 4]) -> Result<Bits> {
    if p.iter().any(|&v| v.is_nan() || v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{p:?} is not a point of the 4-simplex"
        )));
    }
    Ok(entropy_of(&p))
}

fn check_groups(groups: &[&[Axis]]) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        for (j, a) in g.iter().enumerate() {
            if g[..j].contains(a) || groups[..i].iter().any(|h| h.contains(a)) {
                return Err(Error::InvalidAxes(format!("axis {a:?} appears in more than one place")));
            }
        }
    }
    Ok(())
}

fn joint_entropy(full: &FullJoint, groups: &[&[Axis]]) -> Bits {
    let axes: Vec<Axis> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    entropy_of(&full.marginal_table(&axes))
}

/// I(A; B) for disjoint nonempty axis groups.
pub fn mutual_information(full: &FullJoint, a: &[Axis], b: &[Axis]) -> Result<Bits> {
    conditional_mutual_information(full, a, b, &[])
}

/// I(A; B | C); `c` may be empty.
pub fn conditional_mutual_information(full: &FullJoint, a: &[Axis], b: &[Axis], c: &[Axis]) -> Result<Bits> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidAxes("mutual information needs nonempty groups".into()));
    }
    check_groups(&[a, b, c])?;
    Ok(joint_entropy(full, &[a, c]) + joint_entropy(full, &[b, c])
        - joint_entropy(full, &[a, b, c])
        - joint_entropy(full, &[c]))
}

/// H(A | C).
pub fn conditional_entropy(full: &FullJoint, a: &[Axis], c: &[Axis]) -> Result<Bits> {
    if a.is_empty() {
        return Err(Error::InvalidAxes("conditional entropy needs a nonempty group".into()));
    }
    check_groups(&[a, c])?;
    Ok(joint_entropy(full, &[a, c]) - joint_entropy(full, &[c]))
}
