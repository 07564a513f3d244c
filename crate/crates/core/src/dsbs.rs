//! Closed forms for the doubly symmetric binary source.
//!
//! The channel family p^t = t·p⊥ + (1−t)·p* interpolates between an
//! auxiliary independent of (X, Y) (t = 1) and Wyner's minimizer (t = 0).
//! Along it both information terms have closed forms in
//! α = (1−t)b² + (t/2)(1−a), and the min-max objective
//! f(t) = max{I(X;Y|U), ½(I(X,Y;U) + I(X;Y|U))} has its kink at t*, where
//! the two terms coincide.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::info::{binary_entropy, entropy_vec4, inverse_binary_entropy, Bits};
use crate::pmf::AuxChannel;
use crate::wyner::{dsbs_b, dsbs_wyner_channel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsbsParams {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub alpha: f64,
}

impl DsbsParams {
    /// Accepts the closed interval a ∈ [0, 0.5]; the formulas stay finite there.
    pub fn new(a: f64, t: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&a) {
            return Err(Error::OutOfRange(format!("DSBS crossover {a} outside [0, 0.5]")));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("interpolation parameter {t} outside [0, 1]")));
        }
        let b = dsbs_b(a);
        let alpha = (1.0 - t) * b * b + 0.5 * t * (1.0 - a);
        Ok(DsbsParams { a, b, t, alpha })
    }

    /// h(α, a/2, a/2, 1−a−α), the entropy of (X, Y) given U up to a shift.
    fn h4(&self) -> Result<Bits> {
        let a = self.a;
        let rest = (1.0 - a - self.alpha).max(0.0);
        entropy_vec4([self.alpha, a / 2.0, a / 2.0, rest])
    }

    pub fn i_joint(&self) -> Result<Bits> {
        Ok(1.0 + binary_entropy(self.a)? - self.h4()?)
    }

    pub fn i_cond(&self) -> Result<Bits> {
        let arg = (self.alpha + self.a / 2.0).min(1.0);
        Ok(2.0 * binary_entropy(arg)? - self.h4()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub f: Bits,
    pub i_joint: Bits,
    pub i_cond: Bits,
}

/// p^t(u|x,y) for DSBS(a).
pub fn interpolated_channel(a: f64, t: f64) -> Result<AuxChannel> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("interpolation parameter {t} outside [0, 1]")));
    }
    let star = dsbs_wyner_channel(a)?;
    let rows = (0..2)
        .flat_map(|x| (0..2).map(move |y| (x, y)))
        .map(|(x, y)| {
            star.row(x, y)
                .expect("closed form covers every cell")
                .iter()
                .map(|&p| t * 0.5 + (1.0 - t) * p)
                .collect()
        })
        .collect();
    AuxChannel::from_u_rows(2, 2, 2, rows)
}

pub fn i_joint_closed_form(a: f64, t: f64) -> Result<Bits> {
    DsbsParams::new(a, t)?.i_joint()
}

pub fn i_cond_closed_form(a: f64, t: f64) -> Result<Bits> {
    DsbsParams::new(a, t)?.i_cond()
}

pub fn f_of_t(a: f64, t: f64) -> Result<CurvePoint> {
    let p = DsbsParams::new(a, t)?;
    let (i_joint, i_cond) = (p.i_joint()?, p.i_cond()?);
    Ok(CurvePoint {
        t,
        f: i_cond.max(0.5 * (i_joint + i_cond)),
        i_joint,
        i_cond,
    })
}

/// The t at which I(X,Y;U) = I(X;Y|U) along p^t, in closed form.
pub fn t_star(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::OutOfRange(format!("t* needs a crossover in (0, 0.5), got {a}")));
    }
    let b = dsbs_b(a);
    let denom = 0.5 * (1.0 - a) - b * b;
    if denom <= 1e-9 {
        return Err(Error::OutOfRange(format!("t* is degenerate at a = {a}")));
    }
    let target = inverse_binary_entropy(0.5 * (1.0 + binary_entropy(a)?))?;
    Ok((target - 0.5 * a - b * b) / denom)
}

/// `num_points` uniformly spaced values of t in [0, 1], endpoints exact.
pub fn emit_curve(a: f64, num_points: usize) -> Result<Vec<CurvePoint>> {
    if num_points < 2 {
        return Err(Error::OutOfRange(format!(
            "a curve needs at least 2 points, got {num_points}"
        )));
    }
    let last = (num_points - 1) as f64;
    (0..num_points)
        .map(|i| {
            let t = if i + 1 == num_points { 1.0 } else { i as f64 / last };
            f_of_t(a, t)
        })
        .collect()
}

/// CSV with header `t,f,i_joint,i_cond`, LF line endings.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "t,f,i_joint,i_cond")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            format_sig(p.t, 15),
            format_sig(p.f, 15),
            format_sig(p.i_joint, 15),
            format_sig(p.i_cond, 15)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_endpoints_and_midpoint() {
        let ch = interpolated_channel(0.1, 1.0).unwrap();
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(ch.row(x, y).unwrap(), &[0.5, 0.5]);
        }
        assert_eq!(
            interpolated_channel(0.1, 0.0).unwrap(),
            dsbs_wyner_channel(0.1).unwrap()
        );
        let mid = interpolated_channel(0.1, 0.5).unwrap();
        let b = dsbs_b(0.1);
        let expected = 0.5 * b * b / 0.9 + 0.25;
        assert!((mid.row(1, 1).unwrap()[0] - expected).abs() < 1e-16);
        assert!((mid.row(1, 1).unwrap()[0] - 0.251548).abs() < 1e-6);
        assert!(interpolated_channel(0.1, 1.5).is_err());
        assert!(interpolated_channel(0.5, 0.5).is_err());
    }

    #[test]
    fn closed_form_terms() {
        assert!((i_joint_closed_form(0.1, 0.0).unwrap() - 0.872760566800152).abs() < 1e-12);
        assert!(i_joint_closed_form(0.1, 1.0).unwrap().abs() < 1e-12);
        assert!((i_joint_closed_form(0.2, 0.0).unwrap() - 0.705904900983266).abs() < 1e-12);
        assert!(i_cond_closed_form(0.1, 0.0).unwrap().abs() < 1e-12);
        assert!((i_cond_closed_form(0.1, 1.0).unwrap() - 0.531004406410719).abs() < 1e-12);
        assert!((i_cond_closed_form(0.2, 1.0).unwrap() - 0.278071905112638).abs() < 1e-12);
    }

    #[test]
    fn curve_values() {
        assert!((f_of_t(0.1, 0.0).unwrap().f - 0.436380283400076).abs() < 1e-12);
        assert!((f_of_t(0.1, 0.2142).unwrap().f - 0.323121673675278).abs() < 1e-12);
        assert!((f_of_t(0.2, 1.0).unwrap().f - 0.278071905112638).abs() < 1e-12);
        let p = f_of_t(0.3, 0.4).unwrap();
        assert!((p.f - p.i_cond.max(0.5 * (p.i_joint + p.i_cond))).abs() < 1e-12);
    }

    #[test]
    fn endpoint_identities_hold_on_the_closed_interval() {
        for a in [0.0, 0.05, 0.2, 0.35, 0.5] {
            let h = binary_entropy(a).unwrap();
            let b = dsbs_b(a);
            let f0 = f_of_t(a, 0.0).unwrap().f;
            let f1 = f_of_t(a, 1.0).unwrap().f;
            assert!(
                (f0 - 0.5 * (1.0 + h - 2.0 * binary_entropy(b).unwrap())).abs() < 1e-12,
                "a={a}"
            );
            assert!((f1 - (1.0 - h)).abs() < 1e-12, "a={a}");
        }
    }

    #[test]
    fn t_star_values() {
        let t1 = t_star(0.1).unwrap();
        let t2 = t_star(0.2).unwrap();
        assert!((t1 - 0.343436).abs() < 1e-4);
        assert!((t2 - 0.442523).abs() < 1e-4);
        for (a, t) in [(0.1, t1), (0.2, t2)] {
            let p = f_of_t(a, t).unwrap();
            assert!((p.i_joint - p.i_cond).abs() <= 1e-9);
        }
        let f = |t| f_of_t(0.1, t).unwrap().f;
        assert!(f(t1) <= f(0.0).min(f(1.0)) - 0.1);
        assert!(t_star(0.0).is_err());
        assert!(t_star(0.5).is_err());
    }

    #[test]
    fn curve_emission() {
        let pts = emit_curve(0.1, 11).unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0].t, 0.0);
        assert_eq!(pts[10].t, 1.0);
        assert!((pts[0].f - 0.436380283400076).abs() < 1e-12);
        assert!((pts[10].f - 0.531004406410719).abs() < 1e-12);
        let pts2 = emit_curve(0.2, 2).unwrap();
        assert!((pts2[0].f - 0.352952450491633).abs() < 1e-12);
        assert!((pts2[1].f - 0.278071905112638).abs() < 1e-12);
        assert!(emit_curve(0.1, 1).is_err());

        let mut buf = Vec::new();
        write_curve_csv(&pts2, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.split('\n').collect();
        assert_eq!(lines[0], "t,f,i_joint,i_cond");
        assert_eq!(lines[1].split(',').nth(1).unwrap(), "0.352952450491633");
        assert_eq!(lines.len(), 4);
        assert!(!s.contains('\r'));
    }
}
