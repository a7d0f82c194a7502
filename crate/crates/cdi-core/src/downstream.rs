//! Downstream dead-volume model between cell exit and conductivity
//! sensor: an ideally stirred tank followed by a plug-flow delay.
//!
//! The tank obeys t_mix·dc_cs/dt = c_in − c_cs and is integrated exactly
//! per sample interval assuming the input is linear between samples, so
//! the sensed trace carries no time-step artifacts. The plug-flow stage
//! shifts the trace by t_plug.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Residence times of the downstream volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownstreamParams {
    /// Mixing-tank residence time (s).
    pub t_mix: f64,
    /// Plug-flow delay (s).
    pub t_plug: f64,
}

impl DownstreamParams {
    pub fn new(t_mix: f64, t_plug: f64) -> Result<Self> {
        if !(t_mix >= 0.0) || !(t_plug >= 0.0) {
            return Err(Error::Domain("downstream residence times must be >= 0"));
        }
        Ok(Self { t_mix, t_plug })
    }
}

impl Default for DownstreamParams {
    /// Reference setup: 60 s mixing vessel, 15 s plug-flow line.
    fn default() -> Self {
        Self {
            t_mix: 60.0,
            t_plug: 15.0,
        }
    }
}

fn check_times(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::Config(alloc::format!(
            "series lengths differ: {} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(alloc::string::String::from(
                "time base must be strictly increasing",
            )));
        }
    }
    Ok(())
}

/// Stirred-tank response to a sampled input, starting from `c0`.
///
/// Exact exponential update per interval with linearly interpolated
/// input; `t_mix = 0` returns the input unchanged.
pub fn mixing_tank(times: &[f64], values: &[f64], t_mix: f64, c0: f64) -> Result<Vec<f64>> {
    if !(t_mix >= 0.0) {
        return Err(Error::Domain("t_mix must be >= 0"));
    }
    check_times(times, values)?;
    if t_mix == 0.0 {
        return Ok(values.to_vec());
    }
    let mut out = Vec::with_capacity(values.len());
    let mut c = c0;
    if !values.is_empty() {
        // the first sample only sets the input; the tank still holds c0
        out.push(c0);
    }
    for k in 1..values.len() {
        let dt = times[k] - times[k - 1];
        let slope = (values[k] - values[k - 1]) / dt;
        // particular solution for a ramp input: u(t) − slope·t_mix
        let decay = math::exp(-dt / t_mix);
        c = (values[k] - slope * t_mix) + (c - values[k - 1] + slope * t_mix) * decay;
        out.push(c);
    }
    Ok(out)
}

/// Pure transport delay: output(t) = input(t − t_plug), `c0` before the
/// first delayed sample arrives. Evaluated on the input time base with
/// linear interpolation.
pub fn plug_delay(times: &[f64], values: &[f64], t_plug: f64, c0: f64) -> Result<Vec<f64>> {
    if !(t_plug >= 0.0) {
        return Err(Error::Domain("t_plug must be >= 0"));
    }
    check_times(times, values)?;
    if t_plug == 0.0 {
        return Ok(values.to_vec());
    }
    let mut out = Vec::with_capacity(values.len());
    for &t in times {
        let tq = t - t_plug;
        if times.is_empty() || tq < times[0] {
            out.push(c0);
            continue;
        }
        // last index with times[idx] <= tq
        let idx = times.partition_point(|&x| x <= tq) - 1;
        if idx + 1 >= times.len() {
            out.push(values[times.len() - 1]);
        } else if times[idx] == tq {
            out.push(values[idx]);
        } else {
            let w = (tq - times[idx]) / (times[idx + 1] - times[idx]);
            out.push(values[idx] + w * (values[idx + 1] - values[idx]));
        }
    }
    Ok(out)
}

/// Full downstream chain: mixing tank, then plug delay.
pub fn sensed_concentration(
    times: &[f64],
    values: &[f64],
    params: &DownstreamParams,
    c0: f64,
) -> Result<Vec<f64>> {
    let tank = mixing_tank(times, values, params.t_mix, c0)?;
    plug_delay(times, &tank, params.t_plug, c0)
}
