//! Physical fields from the Lagrangian map and finite-difference checks of
//! the Eulerian system.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{linspace, Evaluator};
use crate::invariants::InvariantJets;

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-3;

const NEWTON_MAX: usize = 50;
const NEWTON_STEP_TOL: f64 = 1e-12;
const POSITION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub omega: f64,
    pub jac: f64,
    /// The invariant β at the same particle, for comparison with `omega`.
    pub beta: f64,
}

pub fn fields_at(eval: &dyn Evaluator, t: f64, xi: f64, c: f64) -> Result<FieldSample> {
    let z = eval.jet(t, xi, c)?;
    let pos = z.value();
    let vel = z.deriv(1, 0, 0)?;
    let (zx, ze) = (z.deriv(0, 1, 0)?, z.deriv(0, 0, 1)?);
    let (vx, ve) = (z.deriv(1, 1, 0)?, z.deriv(1, 0, 1)?);
    let jac = zx.re * ze.im - ze.re * zx.im;
    // v_x − u_y through the adjugate of ∂(x, y)/∂(ξ, η).
    let omega = (vx.im * ze.im - ve.im * zx.im - ve.re * zx.re + vx.re * ze.re) / jac;
    let beta = InvariantJets::of(&z).beta.value().re;
    Ok(FieldSample { x: pos.re, y: pos.im, u: vel.re, v: vel.im, p: z.base().eta, omega, jac, beta })
}

/// Lagrangian chart point `(ξ, c)` of the particle at `(x, y)` at time `t`,
/// by damped Newton iteration from `guess`.
pub fn invert_position(eval: &dyn Evaluator, t: f64, x: f64, y: f64, guess: (f64, f64)) -> Result<(f64, f64)> {
    let residual = |xi: f64, c: f64| -> Result<(f64, f64, [f64; 4])> {
        let z = eval.jet(t, xi, c)?;
        let (_, rate) = eval.eta_rate(c)?;
        let v = z.value();
        let zx = z.deriv(0, 1, 0)?;
        let zc = z.deriv(0, 0, 1)? * rate;
        Ok((v.re - x, v.im - y, [zx.re, zc.re, zx.im, zc.im]))
    };
    let (mut xi, mut c) = guess;
    let (mut fx, mut fy, mut m) = residual(xi, c)?;
    for _ in 0..NEWTON_MAX {
        let det = m[0] * m[3] - m[1] * m[2];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian("position inversion"));
        }
        let dxi = (m[3] * fx - m[1] * fy) / det;
        let dc = (m[0] * fy - m[2] * fx) / det;
        let norm0 = fx.hypot(fy);
        let mut lambda = 1.0;
        let accepted = loop {
            let (xn, cn) = (xi - lambda * dxi, c - lambda * dc);
            if let Ok((gx, gy, mn)) = residual(xn, cn) {
                if gx.hypot(gy) < norm0 || lambda < 1e-3 || norm0 < POSITION_TOL {
                    break Some((xn, cn, gx, gy, mn));
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                break None;
            }
        };
        let Some((xn, cn, gx, gy, mn)) = accepted else {
            return Err(Error::NoConvergence { what: "position inversion", iterations: NEWTON_MAX });
        };
        let step = (lambda * dxi).hypot(lambda * dc);
        (xi, c, fx, fy, m) = (xn, cn, gx, gy, mn);
        if step < NEWTON_STEP_TOL * (1.0 + xi.abs() + c.abs()) {
            return if fx.hypot(fy) < POSITION_TOL * (1.0 + x.abs() + y.abs()) {
                Ok((xi, c))
            } else {
                Err(Error::NoConvergence { what: "position inversion", iterations: NEWTON_MAX })
            };
        }
    }
    Err(Error::NoConvergence { what: "position inversion", iterations: NEWTON_MAX })
}

/// Residuals of the Eulerian system at a point: x-momentum, y-momentum,
/// divergence, pressure transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerResiduals {
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub divergence: f64,
    pub transport: f64,
}

impl EulerResiduals {
    pub fn max(&self) -> f64 {
        self.momentum_x.abs().max(self.momentum_y.abs()).max(self.divergence.abs()).max(self.transport.abs())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.momentum_x, self.momentum_y, self.divergence, self.transport]
    }
}

/// `(u, v, p)` at an Eulerian point.
fn uvp(
    eval: &dyn Evaluator,
    pressure: &(dyn Fn(f64) -> f64 + Sync),
    t: f64,
    x: f64,
    y: f64,
    guess: (f64, f64),
) -> Result<[f64; 3]> {
    let (xi, c) = invert_position(eval, t, x, y, guess)?;
    let z = eval.jet(t, xi, c)?;
    let vel = z.deriv(1, 0, 0)?;
    Ok([vel.re, vel.im, pressure(z.base().eta)])
}

/// Central difference with one Richardson level.
fn richardson(f: impl Fn(f64) -> Result<[f64; 3]>, h: f64) -> Result<[f64; 3]> {
    let d = |step: f64| -> Result<[f64; 3]> {
        let (p, m) = (f(step)?, f(-step)?);
        Ok([0, 1, 2].map(|i| (p[i] - m[i]) / (2.0 * step)))
    };
    let (coarse, fine) = (d(h)?, d(0.5 * h)?);
    Ok([0, 1, 2].map(|i| (4.0 * fine[i] - coarse[i]) / 3.0))
}

/// Eulerian residuals with an arbitrary pressure law `p = pressure(η)`.
pub fn euler_residuals_with_pressure(
    eval: &dyn Evaluator,
    t: f64,
    x: f64,
    y: f64,
    h: f64,
    guess: (f64, f64),
    pressure: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<EulerResiduals> {
    let (xi, c) = invert_position(eval, t, x, y, guess)?;
    let here = uvp(eval, pressure, t, x, y, (xi, c))?;
    let seed = (xi, c);
    let d_t = richardson(|s| uvp(eval, pressure, t + s, x, y, seed), h)?;
    let d_x = richardson(|s| uvp(eval, pressure, t, x + s, y, seed), h)?;
    let d_y = richardson(|s| uvp(eval, pressure, t, x, y + s, seed), h)?;
    let [u, v, _] = here;
    Ok(EulerResiduals {
        momentum_x: d_t[0] + u * d_x[0] + v * d_y[0] + d_x[2],
        momentum_y: d_t[1] + u * d_x[1] + v * d_y[1] + d_y[2],
        divergence: d_x[0] + d_y[1],
        transport: d_t[2] + u * d_x[2] + v * d_y[2],
    })
}

pub fn euler_residuals(eval: &dyn Evaluator, t: f64, x: f64, y: f64, h: f64, guess: (f64, f64)) -> Result<EulerResiduals> {
    euler_residuals_with_pressure(eval, t, x, y, h, guess, &|eta| eta)
}

/// Eulerian rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridNode {
    pub x: f64,
    pub y: f64,
    /// `None` where the position could not be inverted.
    pub sample: Option<FieldSample>,
}

/// Coarse Lagrangian table used to seed Newton when no neighbour converged.
fn coarse_seeds(eval: &dyn Evaluator, t: f64) -> Vec<((f64, f64), (f64, f64))> {
    let b = eval.sample_box();
    let widen = |(lo, hi): (f64, f64)| {
        let w = hi - lo;
        (lo - w, hi + w)
    };
    let mut out = Vec::new();
    for xi in linspace(widen(b.xi), 25) {
        for c in linspace(widen(b.c), 25) {
            if let Ok(z) = eval.jet(t, xi, c) {
                let v = z.value();
                out.push(((v.re, v.im), (xi, c)));
            }
        }
    }
    out
}

/// Fields on an `nx × ny` Eulerian grid at time `t`. Nodes are resolved in
/// a sequential march, each seeded from the last converged node, then
/// evaluated in parallel.
pub fn field_grid(eval: &dyn Evaluator, t: f64, bbox: BBox, nx: usize, ny: usize) -> Vec<GridNode> {
    let xs = linspace((bbox.x0, bbox.x1), nx);
    let ys = linspace((bbox.y0, bbox.y1), ny);
    let seeds = coarse_seeds(eval, t);
    let nearest = |x: f64, y: f64| {
        seeds
            .iter()
            .min_by(|a, b| {
                let da = (a.0 .0 - x).hypot(a.0 .1 - y);
                let db = (b.0 .0 - x).hypot(b.0 .1 - y);
                da.total_cmp(&db)
            })
            .map(|s| s.1)
    };
    let mut labels: Vec<(f64, f64, Option<(f64, f64)>)> = Vec::with_capacity(nx * ny);
    let mut last: Option<(f64, f64)> = None;
    for (j, &y) in ys.iter().enumerate() {
        for i in 0..nx {
            // Serpentine order keeps consecutive nodes adjacent.
            let x = if j % 2 == 0 { xs[i] } else { xs[nx - 1 - i] };
            let attempt = |g: Option<(f64, f64)>| g.and_then(|g| invert_position(eval, t, x, y, g).ok());
            let found = attempt(last).or_else(|| attempt(nearest(x, y)));
            if found.is_some() {
                last = found;
            }
            labels.push((x, y, found));
        }
    }
    let mut nodes: Vec<GridNode> = labels
        .par_iter()
        .map(|&(x, y, label)| GridNode {
            x,
            y,
            sample: label.and_then(|(xi, c)| fields_at(eval, t, xi, c).ok()),
        })
        .collect();
    nodes.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub particle: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

/// Paths of particles with chart labels `(ξ, c)` for `t` from `t0` to `t1`.
pub fn trajectories(eval: &dyn Evaluator, particles: &[(f64, f64)], t0: f64, t1: f64, dt: f64) -> Result<Vec<TrajectoryRow>> {
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Error::Invalid(format!("bad time range {t0}..{t1} with step {dt}")));
    }
    let steps = ((t1 - t0) / dt + 1e-9).floor() as usize;
    let per: Vec<Vec<TrajectoryRow>> = particles
        .par_iter()
        .enumerate()
        .map(|(k, &(xi, c))| {
            (0..=steps)
                .map(|n| {
                    let t = t0 + n as f64 * dt;
                    let z = eval.jet(t, xi, c)?;
                    let (pos, vel) = (z.value(), z.deriv(1, 0, 0)?);
                    Ok(TrajectoryRow { particle: k, t, x: pos.re, y: pos.im, u: vel.re, v: vel.im, p: z.base().eta })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}
