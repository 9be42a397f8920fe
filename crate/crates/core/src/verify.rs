//! The full residual suite for one solution instance.

use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerian::{euler_residuals, fields_at, FD_STEP};
use crate::expr::Expr;
use crate::families::{passive_residuals, Evaluator, FamilyId, GridBox, GridSpec, SolutionInstance};
use crate::geometry::{curvature, wall_relation_residual};
use crate::invariants::{
    conservation_residuals_jet, constancy_residuals, invariant_relation_residual, invariant_set, trajectory_ode_residuals, omega_residual,
    structure_residuals,
};
use crate::report::{CheckItem, MaxAcc, VerifyReport};
use crate::symmetry::{verify_symmetry, GroupElement};

macro_rules! tolerances {
    ($($field:ident = $default:expr),* $(,)?) => {
        /// Per-check tolerances; all residuals are compared with `<`.
        #[derive(Debug, Clone, Copy, PartialEq, Serialize)]
        pub struct Tolerances {
            $(pub $field: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Tolerances { $($field: $default,)* }
            }
        }

        impl Tolerances {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($field),)*];

            pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
                match name {
                    $(stringify!($field) => self.$field = value,)*
                    _ => return Err(Error::Invalid(format!(
                        "unknown tolerance `{name}` (known: {})", Self::NAMES.join(", ")
                    ))),
                }
                Ok(())
            }
        }
    };
}

tolerances! {
    structure = 1e-9,
    passive = 1e-9,
    alpha = 1e-9,
    constancy = 1e-8,
    conservation = 1e-8,
    trajectory_ode = 1e-8,
    omega = 1e-7,
    invariant_relation = 1e-7,
    kt = 1e-9,
    vorticity = 1e-8,
    pairing = 1e-6,
    euler = 1e-6,
    curvature = 1e-9,
    wall = 1e-8,
    shape = 1e-7,
    symmetry = 1e-8,
}

impl FromStr for Tolerances {
    type Err = Error;

    /// Parses `name=value,name=value` overrides on top of the defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut tol = Tolerances::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) =
                part.split_once('=').ok_or_else(|| Error::Invalid(format!("bad tolerance override `{part}`")))?;
            let value: f64 =
                value.trim().parse().map_err(|_| Error::Invalid(format!("bad tolerance value in `{part}`")))?;
            tol.set(name.trim(), value)?;
        }
        Ok(tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub grid: GridSpec,
    pub tol: Tolerances,
    pub seed: u64,
    pub euler_points: usize,
    pub pairing_samples: usize,
    pub fd_step: f64,
    pub symmetry_param: f64,
    pub phi: Expr,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            grid: GridSpec::default(),
            tol: Tolerances::default(),
            seed: 0,
            euler_points: 20,
            pairing_samples: 200,
            fd_step: FD_STEP,
            symmetry_param: 0.7,
            phi: Expr::parse("eta^2").expect("default phi"),
        }
    }
}

/// Residuals gathered at one grid point, in the order of `POINT_CHECKS`.
const POINT_CHECKS: [&str; 18] = [
    "structure_evolution",
    "structure_jacobian",
    "alpha_unit",
    "beta_constant",
    "gamma_constant",
    "delta_constant",
    "epsilon_constant",
    "conservation",
    "trajectory_ode",
    "trajectory_ode_leading",
    "omega_identity",
    "invariant_relation",
    "kt_values",
    "vorticity_beta",
    "field_jacobian",
    "curvature_closed_form",
    "wall_relation",
    "shape_preservation",
];

fn point_residuals(inst: &SolutionInstance, t: f64, xi: f64, c: f64) -> Result<([f64; 18], Vec<(&'static str, f64)>)> {
    let z = inst.eval_jet(t, xi, c)?;
    let eta = z.base().eta;
    let mut r = [0.0; 18];
    let (evo, jac) = structure_residuals(&z)?;
    r[0] = evo;
    r[1] = jac;
    let inv = invariant_set(&z)?;
    r[2] = (inv.alpha - 1.0).abs();
    let cr = constancy_residuals(&z)?;
    for k in 0..4 {
        r[3 + k] = cr[k].0.max(cr[k].1);
    }
    r[7] = conservation_residuals_jet(&z)?.into_iter().fold(0.0, f64::max);
    let (lv, ld) = trajectory_ode_residuals(&z)?;
    r[8] = lv;
    r[9] = ld;
    r[10] = omega_residual(&z)?;
    r[11] = invariant_relation_residual(&z)?;
    let expected_kt = match (inst.k_m(), inst.n_expr()) {
        (Some((k, m)), _) => Some((k, k * k + m)),
        (None, Some(n)) if !n.is_constant() => {
            let nv = n.eval(eta)?;
            Some((nv, nv * nv))
        }
        (None, Some(_)) => None,
        (None, None) => Some((0.0, 0.0)),
    };
    r[12] = match expected_kt {
        Some((k0, t0)) => {
            let (k, tt) = inv.kt()?;
            (k - k0).abs().max((tt - t0).abs())
        }
        None => 0.0,
    };
    let f = fields_at(inst, t, xi, c)?;
    r[13] = (f.omega - inv.beta).abs();
    r[14] = (f.jac - 1.0).abs();
    let cs = curvature(&z)?;
    let ztt = z.deriv(2, 0, 0)?;
    r[15] = match (inst.family(), inst.k_m(), inst.n_expr()) {
        (FamilyId::A, _, _) => cs.kappa.abs(),
        (_, None, Some(n)) => {
            let nv = n.eval(eta)?;
            (cs.kappa + nv * nv / ztt.norm()).abs()
        }
        (_, Some((k, m)), _) => {
            let z3 = z.deriv(3, 0, 0)?;
            let sp = ztt.norm_sqr();
            let closed = ((crate::jets::I * k * (ztt.conj() * z3 - ztt * z3.conj())).re + (k * k + m) * sp) / sp.powf(1.5);
            (cs.kappa - closed).abs()
        }
        _ => f64::NAN,
    };
    r[16] = wall_relation_residual(inst, t, xi, c)?;
    r[17] = cs.shape_residual;
    let passive = passive_residuals(inst, t, xi, c)?;
    Ok((r, passive))
}

fn interior(b: GridBox) -> GridBox {
    let shrink = |(lo, hi): (f64, f64)| {
        let m = 0.1 * (hi - lo);
        (lo + m, hi - m)
    };
    GridBox { t: shrink(b.t), xi: shrink(b.xi), c: shrink(b.c) }
}

fn random_point(rng: &mut ChaCha8Rng, b: GridBox) -> [f64; 3] {
    let mut pick = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    [pick(b.t), pick(b.xi), pick(b.c)]
}

/// Runs every check on `inst` and collects the maxima into a report.
pub fn verify_instance(inst: &SolutionInstance, opts: &SuiteOptions) -> VerifyReport {
    let started = Instant::now();
    let tol = &opts.tol;
    let mut report = VerifyReport::new(inst.family().name(), inst.spec().describe(), opts.grid);
    let points = inst.sample_box().points(opts.grid);

    let gathered: Result<Vec<([f64; 18], Vec<(&'static str, f64)>)>> =
        points.par_iter().map(|&[t, xi, c]| point_residuals(inst, t, xi, c)).collect();
    match gathered {
        Ok(rows) => {
            let n = rows.len();
            let col = |k: usize| {
                let mut acc = MaxAcc::default();
                rows.iter().for_each(|r| acc.push(r.0[k]));
                acc.value()
            };
            let tols = [
                tol.structure,
                tol.structure,
                tol.alpha,
                tol.constancy,
                tol.constancy,
                tol.constancy,
                tol.constancy,
                tol.conservation,
                tol.trajectory_ode,
                tol.trajectory_ode,
                tol.omega,
                tol.invariant_relation,
                tol.kt,
                tol.vorticity,
                tol.structure,
                tol.curvature,
                tol.wall,
                tol.shape,
            ];
            for (k, name) in POINT_CHECKS.iter().enumerate() {
                let item = if *name == "epsilon_constant" && inst.family() == FamilyId::B {
                    CheckItem::advisory(*name, col(k), tols[k], n)
                } else {
                    CheckItem::new(*name, col(k), tols[k], n)
                };
                let item = match (*name, inst.n_expr()) {
                    ("kt_values", Some(e)) if e.is_constant() => {
                        item.with_note("gamma = beta^2 for constant N; K and T undefined")
                    }
                    _ => item,
                };
                report.push(item);
            }
            if let Some(first) = rows.first() {
                for (j, (name, _)) in first.1.iter().enumerate() {
                    let mut acc = MaxAcc::default();
                    rows.iter().for_each(|r| acc.push(r.1[j].1));
                    report.push(CheckItem::new(format!("passive_{name}"), acc.value(), tol.passive, n));
                }
            }
        }
        Err(e) => report.push(CheckItem::error("grid_evaluation", e.to_string())),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let inner = interior(inst.sample_box());

    // Pairs sharing a pressure label but at different (t, ξ).
    let pairs: Vec<([f64; 3], [f64; 3])> = (0..opts.pairing_samples / 2)
        .map(|_| {
            let a = random_point(&mut rng, inner);
            let mut b = random_point(&mut rng, inner);
            b[2] = a[2];
            (a, b)
        })
        .collect();
    let pairing: Result<MaxAcc> = pairs
        .par_iter()
        .map(|(a, b)| {
            let fa = fields_at(inst, a[0], a[1], a[2])?;
            let fb = fields_at(inst, b[0], b[1], b[2])?;
            let mut acc = MaxAcc::default();
            if (fa.p - fb.p).abs() < 1e-9 {
                acc.push((fa.omega - fb.omega).abs());
            }
            Ok(acc)
        })
        .try_reduce(MaxAcc::default, |x, y| Ok(x.merge(y)));
    report.push(match pairing {
        Ok(acc) => CheckItem::new("vorticity_pressure_pairing", acc.value(), tol.pairing, acc.count),
        Err(e) => CheckItem::error("vorticity_pressure_pairing", e.to_string()),
    });

    let euler_pts: Vec<[f64; 3]> = (0..opts.euler_points).map(|_| random_point(&mut rng, inner)).collect();
    let euler: Result<Vec<[f64; 4]>> = euler_pts
        .par_iter()
        .map(|&[t, xi, c]| {
            let f = fields_at(inst, t, xi, c)?;
            Ok(euler_residuals(inst, t, f.x, f.y, opts.fd_step, (xi, c))?.as_array())
        })
        .collect();
    match euler {
        Ok(rows) => {
            for (k, name) in ["euler_momentum_x", "euler_momentum_y", "euler_divergence", "euler_transport"]
                .iter()
                .enumerate()
            {
                let mut acc = MaxAcc::default();
                rows.iter().for_each(|r| acc.push(r[k].abs()));
                report.push(CheckItem::new(*name, acc.value(), tol.euler, acc.count));
            }
        }
        Err(e) => report.push(CheckItem::error("euler", e.to_string())),
    }

    let shared: Arc<dyn Evaluator> = Arc::new(inst.clone());
    for g in GroupElement::all(opts.symmetry_param, &opts.phi) {
        let name = format!("symmetry_{}", g.kind.name());
        report.push(match verify_symmetry(shared.clone(), g, opts.grid) {
            Ok(r) => {
                let worst = r.items.iter().map(|i| i.max_residual).fold(0.0, f64::max);
                let n = r.items.first().map_or(0, |i| i.samples);
                CheckItem::new(name, worst, tol.symmetry, n)
            }
            Err(e) => CheckItem::error(name, e.to_string()),
        });
    }

    report.elapsed_ms = started.elapsed().as_millis();
    report
}
