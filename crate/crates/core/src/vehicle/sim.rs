use std::io::Write;

use serde::{Deserialize, Serialize};

use super::controller::{controller_steering, ControllerParams, TrackingErrors};
use super::track::Track;
use super::VehicleError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub wheelbase: f64,
    pub max_steer: f64,
    /// Time constant of the first-order steering actuator.
    pub steer_lag: f64,
    /// Time constant of the low-pass on the cross-track rate.
    pub rate_filter: f64,
    /// Disturbance injection time.
    pub t1: f64,
    /// Episode end.
    pub t2: f64,
    /// Offset added to the measured cross-track error from `t1` on, in m.
    pub disturbance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            wheelbase: 2.7,
            max_steer: 0.5,
            steer_lag: 0.2,
            rate_filter: 0.1,
            t1: 100.0,
            t2: 120.0,
            disturbance: 1.0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), VehicleError> {
        let pos = [self.dt, self.wheelbase, self.max_steer, self.t1];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || !(self.steer_lag >= 0.0 && self.rate_filter >= 0.0)
            || !(self.t2 > self.t1)
            || !self.disturbance.is_finite()
        {
            return Err(VehicleError::Config(format!("invalid simulation config {self:?}")));
        }
        Ok(())
    }

    pub fn steps_to(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

/// Sampled lap with the timeline markers as sample indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub v: Vec<f64>,
    pub delta: Vec<f64>,
    pub e_ct: Vec<f64>,
    pub e_ca: Vec<f64>,
    pub yaw_rate: Vec<f64>,
    /// Index of the first sample at or after `T1`.
    pub k1: usize,
    /// Index of the sample at `T2`.
    pub k2: usize,
    pub diverged: bool,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Trace carrying only error signals, used to evaluate metrics directly.
    pub fn from_signals(
        dt: f64,
        t1: f64,
        e_ct: Vec<f64>,
        e_ca: Vec<f64>,
        yaw_rate: Vec<f64>,
    ) -> Self {
        let n = e_ct.len();
        assert!(e_ca.len() == n && yaw_rate.len() == n);
        Self {
            dt,
            t: (0..n).map(|k| k as f64 * dt).collect(),
            x: vec![0.0; n],
            y: vec![0.0; n],
            psi: vec![0.0; n],
            v: vec![0.0; n],
            delta: vec![0.0; n],
            e_ct,
            e_ca,
            yaw_rate,
            k1: (t1 / dt).round() as usize,
            k2: n.saturating_sub(1),
            diverged: false,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,psi,v,delta,e_ct,e_ca,yaw_rate")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[k],
                self.x[k],
                self.y[k],
                self.psi[k],
                self.v[k],
                self.delta[k],
                self.e_ct[k],
                self.e_ca[k],
                self.yaw_rate[k]
            )?;
        }
        Ok(())
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

/// Integrates one episode from the track start pose with the given gains.
pub fn simulate_lap(
    params: &ControllerParams,
    track: &Track,
    cfg: &SimConfig,
) -> Result<SimTrace, VehicleError> {
    cfg.validate()?;
    let k1 = cfg.steps_to(cfg.t1);
    let k2 = cfg.steps_to(cfg.t2);
    let n = k2 + 1;
    let mut tr = SimTrace {
        dt: cfg.dt,
        k1,
        k2,
        ..SimTrace::default()
    };
    for v in [
        &mut tr.t,
        &mut tr.x,
        &mut tr.y,
        &mut tr.psi,
        &mut tr.v,
        &mut tr.delta,
        &mut tr.e_ct,
        &mut tr.e_ca,
        &mut tr.yaw_rate,
    ] {
        v.reserve(n);
    }

    let bb = track.bounding_box();
    let (cx, cy) = (0.5 * (bb[0] + bb[2]), 0.5 * (bb[1] + bb[3]));
    let (hx, hy) = (5.0 * (bb[2] - bb[0]), 5.0 * (bb[3] - bb[1]));

    let s0 = track.config().start_offset;
    let (p0, mut psi) = track.pose(s0);
    let (mut x, mut y) = (p0[0], p0[1]);
    let mut delta = (cfg.wheelbase * track.curvature(s0)).atan();
    let mut measured_prev: Option<f64> = None;
    let mut rate = 0.0;
    let rate_gain = cfg.dt / (cfg.rate_filter + cfg.dt);
    let steer_gain = if cfg.steer_lag > 0.0 {
        (cfg.dt / cfg.steer_lag).min(1.0)
    } else {
        1.0
    };

    for k in 0..n {
        let t = k as f64 * cfg.dt;
        let pr = track.project([x, y]);
        let v = track.speed(pr.s);
        let e_ct = pr.lateral;
        let e_ca = wrap_angle(psi - pr.heading);
        let yaw = v * delta.tan() / cfg.wheelbase;

        tr.t.push(t);
        tr.x.push(x);
        tr.y.push(y);
        tr.psi.push(psi);
        tr.v.push(v);
        tr.delta.push(delta);
        tr.e_ct.push(e_ct);
        tr.e_ca.push(e_ca);
        tr.yaw_rate.push(yaw);

        let finite = [x, y, psi, delta].iter().all(|v| v.is_finite());
        if !finite || (x - cx).abs() > hx || (y - cy).abs() > hy {
            tr.diverged = true;
            break;
        }
        if k == k2 {
            break;
        }

        let measured = if k >= k1 { e_ct + cfg.disturbance } else { e_ct };
        if let Some(prev) = measured_prev {
            rate += rate_gain * ((measured - prev) / cfg.dt - rate);
        }
        measured_prev = Some(measured);
        let errors = TrackingErrors {
            cross_track: measured,
            course_angle: e_ca,
            cross_track_rate: rate,
            curvature: pr.curvature,
        };
        let cmd = controller_steering(&errors, params, cfg.wheelbase, cfg.max_steer);

        x += v * psi.cos() * cfg.dt;
        y += v * psi.sin() * cfg.dt;
        psi += yaw * cfg.dt;
        delta += steer_gain * (cmd - delta);
    }
    Ok(tr)
}
