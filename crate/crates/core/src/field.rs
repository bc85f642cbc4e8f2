//! Sampled control fields.
//!
//! A field is stored as a zero-order-hold sequence: sample `i` holds the
//! value on `[times[i], times[i+1])` and the last sample holds up to
//! `duration`. This matches both GRAPE-style discretizations and bang-bang
//! pulses exactly, and smooth extremal fields are sampled at interval
//! midpoints so the held value is the midpoint-rule representative of the
//! underlying continuous pulse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    /// Unconstrained (u_x, u_y) samples.
    General,
    /// Unit-amplitude field u = (cos phi, sin phi); the continuous phase is
    /// kept so it round-trips through the `t,phi` CSV format.
    PhaseOnly { phi: Vec<f64> },
    /// Constant-amplitude x-axis field, u_x = +/-1 flipping at the switch
    /// times (first segment is +1).
    BangBang { switches: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    kind: FieldKind,
    times: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    duration: f64,
}

impl ControlField {
    pub fn from_samples(times: Vec<f64>, ux: Vec<f64>, uy: Vec<f64>, duration: f64) -> Result<Self> {
        Self::build(FieldKind::General, times, ux, uy, duration)
    }

    pub fn phase_only(times: Vec<f64>, phi: Vec<f64>, duration: f64) -> Result<Self> {
        if times.len() != phi.len() {
            return Err(Error::config("times/phi length mismatch"));
        }
        let ux = phi.iter().map(|p| p.cos()).collect();
        let uy = phi.iter().map(|p| p.sin()).collect();
        Self::build(FieldKind::PhaseOnly { phi }, times, ux, uy, duration)
    }

    /// Bang-bang pulse: u_x = +1 on [0, switches[0]), then alternating sign
    /// at each switch, u_y = 0 throughout.
    pub fn bang_bang(switches: Vec<f64>, duration: f64) -> Result<Self> {
        let mut times = vec![0.0];
        let mut ux = vec![1.0];
        let mut sign = 1.0;
        for &s in &switches {
            if s <= *times.last().unwrap() || s >= duration {
                return Err(Error::config(format!(
                    "switch time {s} not strictly inside (0, {duration})"
                )));
            }
            sign = -sign;
            times.push(s);
            ux.push(sign);
        }
        let n = times.len();
        Self::build(FieldKind::BangBang { switches }, times, ux, vec![0.0; n], duration)
    }

    fn build(
        kind: FieldKind,
        times: Vec<f64>,
        ux: Vec<f64>,
        uy: Vec<f64>,
        duration: f64,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != ux.len() || times.len() != uy.len() {
            return Err(Error::config("empty or mismatched field sample arrays"));
        }
        if times[0] != 0.0 {
            return Err(Error::config("field time grid must start at 0"));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("field time grid must be strictly increasing"));
        }
        if duration <= *times.last().unwrap() && times.len() > 1 {
            return Err(Error::config("field duration must exceed last sample time"));
        }
        if let FieldKind::PhaseOnly { .. } = kind {
            for i in 0..ux.len() {
                let n2 = ux[i] * ux[i] + uy[i] * uy[i];
                if (n2 - 1.0).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "phase-only sample {i} has |u|^2 = {n2}, expected 1"
                    )));
                }
            }
        }
        Ok(ControlField {
            kind,
            times,
            ux,
            uy,
            duration,
        })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    /// Held value at time `t` (clamped to the valid range).
    pub fn value_at(&self, t: f64) -> (f64, f64) {
        let i = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        (self.ux[i], self.uy[i])
    }

    /// Iterates the constant-field intervals overlapping [0, t_final].
    pub fn intervals_until(&self, t_final: f64) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let n = self.times.len();
        (0..n).filter_map(move |i| {
            let t0 = self.times[i];
            let t1 = if i + 1 < n { self.times[i + 1] } else { self.duration };
            let t1 = t1.min(t_final);
            (t1 > t0).then_some((t0, t1, self.ux[i], self.uy[i]))
        })
    }

    /// Pulse area int_0^upto |u(t)| dt; exact for the held representation.
    pub fn area(&self, upto: f64) -> f64 {
        self.intervals_until(upto)
            .map(|(t0, t1, ux, uy)| (t1 - t0) * ux.hypot(uy))
            .sum()
    }

    /// Pulse energy int_0^upto (u_x^2 + u_y^2) dt.
    pub fn energy(&self, upto: f64) -> f64 {
        self.intervals_until(upto)
            .map(|(t0, t1, ux, uy)| (t1 - t0) * (ux * ux + uy * uy))
            .sum()
    }

    /// Continuous phase samples; reconstructed by unwrapped atan2 unless the
    /// field is phase-only (then the stored phase is returned verbatim).
    pub fn phase(&self) -> Vec<f64> {
        if let FieldKind::PhaseOnly { phi } = &self.kind {
            return phi.clone();
        }
        let mut out = Vec::with_capacity(self.len());
        let mut prev = 0.0;
        for i in 0..self.len() {
            let raw = self.uy[i].atan2(self.ux[i]);
            let wrapped = if i == 0 {
                raw
            } else {
                let mut d = raw - prev;
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d < -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                prev + d
            };
            out.push(wrapped);
            prev = wrapped;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zoh_lookup_and_area() {
        let f = ControlField::from_samples(
            vec![0.0, 1.0, 2.0],
            vec![1.0, -1.0, 0.5],
            vec![0.0, 0.0, 0.0],
            3.0,
        )
        .unwrap();
        assert_eq!(f.value_at(0.5), (1.0, 0.0));
        assert_eq!(f.value_at(1.0), (-1.0, 0.0));
        assert_eq!(f.value_at(2.7), (0.5, 0.0));
        assert_relative_eq!(f.area(3.0), 1.0 + 1.0 + 0.5, epsilon = 1e-14);
        assert_relative_eq!(f.energy(3.0), 1.0 + 1.0 + 0.25, epsilon = 1e-14);
        assert_relative_eq!(f.area(1.5), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn bang_bang_switch_validation() {
        let f = ControlField::bang_bang(vec![1.5], 2.0).unwrap();
        assert_eq!(f.value_at(1.0), (1.0, 0.0));
        assert_eq!(f.value_at(1.7), (-1.0, 0.0));
        assert!(ControlField::bang_bang(vec![2.5], 2.0).is_err());
        assert!(ControlField::bang_bang(vec![1.0, 0.5], 2.0).is_err());
    }

    #[test]
    fn grid_must_start_at_zero_and_increase() {
        assert!(ControlField::from_samples(vec![0.1], vec![1.0], vec![0.0], 1.0).is_err());
        assert!(
            ControlField::from_samples(vec![0.0, 0.0], vec![1.0; 2], vec![0.0; 2], 1.0).is_err()
        );
    }

    #[test]
    fn phase_only_stores_unit_samples() {
        let phi = vec![0.0, 1.0, 2.5];
        let f = ControlField::phase_only(vec![0.0, 0.5, 1.0], phi.clone(), 1.5).unwrap();
        for i in 0..f.len() {
            assert_relative_eq!(
                f.ux()[i] * f.ux()[i] + f.uy()[i] * f.uy()[i],
                1.0,
                epsilon = 1e-12
            );
        }
        assert_eq!(f.phase(), phi);
    }
}
