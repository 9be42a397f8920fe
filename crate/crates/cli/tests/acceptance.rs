//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines show up in plain `cargo test` output.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use lagflow_cas::{
    depends_on, pq_sequence_with, rat, verify_auxiliary, verify_compatibility, LPoly, PqSequence, RatFn, Shift, Var,
};
use lagflow_core::eulerian::{euler_residuals, euler_residuals_with_pressure, fields_at, FD_STEP};
use lagflow_core::expr::Expr;
use lagflow_core::families::{
    i_function, make_instance, Chart, Evaluator, FamilyId, FamilyParams, GridBox, GridSpec, SolutionInstance,
};
use lagflow_core::invariants::{invariant_set, structure_residuals};
use lagflow_core::jets::CJet;
use lagflow_core::report::VerifyReport;
use lagflow_core::symmetry::{verify_action, Action};
use lagflow_core::verify::{verify_instance, SuiteOptions};

struct Line {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
}

/// What the run must show for the harness to succeed.
enum Expect {
    Pass,
    /// Known not to hold; the check still runs and prints FAIL.
    DocumentedFail(bool),
}

struct Catalog {
    instances: Vec<SolutionInstance>,
    reports: Vec<VerifyReport>,
}

impl Catalog {
    fn build() -> Catalog {
        let instances: Vec<_> =
            FamilyId::ALL.iter().map(|id| make_instance(FamilyParams::default_for(*id)).unwrap()).collect();
        let reports = instances.iter().map(|i| verify_instance(i, &SuiteOptions::default())).collect();
        Catalog { instances, reports }
    }

    /// Worst value of the named items over all families, and whether all passed.
    fn items(&self, pick: impl Fn(&str) -> bool) -> (bool, f64, Vec<String>) {
        let (mut ok, mut worst, mut bad) = (true, 0.0f64, vec![]);
        for r in &self.reports {
            for item in r.items.iter().filter(|i| pick(&i.name)) {
                if !item.passed() {
                    ok = false;
                    bad.push(format!("{}:{}={:.2e}", r.family, item.name, item.max_residual));
                }
                if item.max_residual.is_finite() && item.status == lagflow_core::report::Status::Pass {
                    worst = worst.max(item.max_residual / item.tolerance);
                }
            }
        }
        (ok, worst, bad)
    }
}

fn summary(ok: bool, worst: f64, bad: &[String]) -> String {
    if ok {
        format!("worst residual/tolerance {worst:.2e}")
    } else {
        format!("failing: {}", bad.join(" "))
    }
}

fn shrink(b: GridBox) -> GridBox {
    let s = |(lo, hi): (f64, f64)| {
        let m = 0.1 * (hi - lo);
        (lo + m, hi - m)
    };
    GridBox { t: s(b.t), xi: s(b.xi), c: s(b.c) }
}

fn structure(cat: &Catalog) -> Line {
    let started = Instant::now();
    let mut worst = [0.0f64; 2];
    for inst in &cat.instances {
        for [t, xi, c] in inst.sample_box().points(GridSpec::default()) {
            let (evo, jac) = structure_residuals(&inst.eval_jet(t, xi, c).unwrap()).unwrap();
            worst[0] = worst[0].max(evo);
            worst[1] = worst[1].max(jac);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Line {
        id: 1,
        title: "structure equations",
        pass: worst[0] < 1e-9 && worst[1] < 1e-9 && secs < 5.0,
        detail: format!("evolution {:.2e}, jacobian {:.2e}, {secs:.2} s", worst[0], worst[1]),
    }
}

fn passive(cat: &Catalog) -> Line {
    let (ok, worst, bad) = cat.items(|n| n.starts_with("passive_"));
    let c1 = make_instance(FamilyParams::default_for(FamilyId::C1)).unwrap();
    let c4 = make_instance(FamilyParams::default_for(FamilyId::C4)).unwrap();
    let mut spot = 0.0f64;
    for s in [-0.6, -0.1, 0.0, 0.45, 0.9] {
        let z = c1.eval_chart_jet(0.3, 0.2, s).unwrap();
        spot = spot.max((i_function(&z, 0.0).unwrap() + 2.0).abs());
        spot = spot.max((c1.eta_of_sigma(s).unwrap() + 2.0 * s).abs());
        let z = c4.eval_chart_jet(0.3, 0.2, s).unwrap();
        let i4 = i_function(&z, 1.0).unwrap();
        spot = spot.max((i4 - 4.0 * (s + 1.0)).abs());
        let (eta, rate) = c4.eta_rate(s).unwrap();
        spot = spot.max((rate - i4).abs()).max((eta - c4.eta_of_sigma(s).unwrap()).abs());
    }
    Line {
        id: 2,
        title: "passive systems",
        pass: ok && spot < 1e-9,
        detail: format!("{}; C1/C4 spot values {spot:.2e}", summary(ok, worst, &bad)),
    }
}

fn invariants(cat: &Catalog) -> Line {
    let names = [
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
    ];
    let (ok, worst, bad) = cat.items(|n| names.contains(&n));
    let flagged: Vec<String> = cat
        .reports
        .iter()
        .flat_map(|r| {
            r.items
                .iter()
                .filter(|i| i.status == lagflow_core::report::Status::Flagged)
                .map(move |i| format!("{}:{} {:.2e}", r.family, i.name, i.max_residual))
        })
        .collect();
    let c2 = &cat.instances[FamilyId::ALL.iter().position(|f| *f == FamilyId::C2).unwrap()];
    let (k, tt) = invariant_set(&c2.eval_jet(0.4, 1.1, c2.sample_box().center()[2]).unwrap()).unwrap().kt().unwrap();
    let kt_ok = (k - 0.5).abs() < 1e-9 && tt.abs() < 1e-9;
    let mut detail = format!("{}; C2 (K, T) = ({k:.12}, {tt:.1e})", summary(ok, worst, &bad));
    if !flagged.is_empty() {
        detail += &format!("; advisory {}", flagged.join(" "));
    }
    Line { id: 3, title: "invariant suite", pass: ok && kt_ok, detail }
}

fn vorticity(cat: &Catalog) -> Line {
    let (ok, worst, bad) = cat.items(|n| n == "vorticity_beta" || n == "vorticity_pressure_pairing");
    let pairs: usize = cat
        .reports
        .iter()
        .flat_map(|r| r.items.iter().filter(|i| i.name == "vorticity_pressure_pairing"))
        .map(|i| i.samples)
        .min()
        .unwrap_or(0);
    Line {
        id: 4,
        title: "vorticity",
        pass: ok,
        detail: format!("{}; fewest label pairs {pairs}", summary(ok, worst, &bad)),
    }
}

fn eulerian(cat: &Catalog) -> Line {
    let (ok, worst, bad) = cat.items(|n| n.starts_with("euler_"));
    let a = make_instance(FamilyParams::A { s: Expr::Const(0.0) }).unwrap();
    let (mut field_err, mut resid) = (0.0f64, 0.0f64);
    for [t, xi, c] in shrink(a.sample_box()).points(GridSpec { nt: 3, nxi: 3, nc: 3 }) {
        let f = fields_at(&a, t, xi, c).unwrap();
        // x = ξ, y = η − t²/2: u = 0, v = −t, p = y + t²/2.
        field_err = field_err.max(f.u.abs()).max((f.v + t).abs()).max((f.p - f.y - 0.5 * t * t).abs());
        resid = resid.max(euler_residuals(&a, t, f.x, f.y, FD_STEP, (xi, c)).unwrap().max());
    }
    Line {
        id: 5,
        title: "Eulerian residuals",
        pass: ok && field_err == 0.0 && resid < 1e-12,
        detail: format!(
            "{}; A with S=0: field error {field_err:.1e}, difference residual {resid:.1e}",
            summary(ok, worst, &bad)
        ),
    }
}

fn geometry(cat: &Catalog) -> Line {
    let names = ["curvature_closed_form", "wall_relation", "shape_preservation"];
    let (ok, worst, bad) = cat.items(|n| names.contains(&n));
    Line { id: 6, title: "geometry", pass: ok, detail: summary(ok, worst, &bad) }
}

fn broken_dilation(cat: &Catalog) -> f64 {
    cat.instances
        .iter()
        .map(|inst| {
            let shared: Arc<dyn Evaluator> = Arc::new(inst.clone());
            let r = verify_action(shared, Action::BrokenDilation(0.7), GridSpec::default(), 1e-8).unwrap();
            r.items.iter().map(|i| i.max_residual).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn symmetry(cat: &Catalog) -> Line {
    let (ok, worst, bad) = cat.items(|n| n.starts_with("symmetry_"));
    let per_family =
        cat.reports.iter().map(|r| r.items.iter().filter(|i| i.name.starts_with("symmetry_")).count()).min().unwrap();
    let broken = broken_dilation(cat);
    Line {
        id: 7,
        title: "symmetry group",
        pass: ok && per_family == 12 && broken > 1e-3,
        detail: format!(
            "{}; {per_family} elements per family; broken dilation smallest residual {broken:.2e}",
            summary(ok, worst, &bad)
        ),
    }
}

fn poly(terms: &[((u32, u32, i32), i64, i64)]) -> RatFn {
    RatFn::from_poly(LPoly::from_terms(terms.iter().map(|&(e, n, d)| (e, rat(n, d)))))
}

fn relations_hold(seq: &PqSequence, k: usize) -> bool {
    verify_compatibility(seq, k) && verify_auxiliary(seq, k)
}

/// Returns the line and whether the outcome matches the documented state:
/// the printed product fails from second order on, the even product passes.
fn counterexample() -> (Line, bool) {
    let started = Instant::now();
    let seq = pq_sequence_with(4, Shift::Unit);
    let low_terms = seq.p[1].equals(&poly(&[((0, 1, -1), -1, 4)]))
        && seq.q[1].equals(&poly(&[((1, 1, -2), 1, 4)]))
        && seq.p[2].equals(&poly(&[((0, 2, -2), -1, 16), ((2, 1, -3), -1, 16)]))
        && seq.q[2].equals(&poly(&[((1, 2, -3), 2, 16), ((3, 1, -4), 1, 16)]));
    let printed: Vec<bool> = (1..=3).map(|k| relations_hold(&seq, k)).collect();
    let dependence = depends_on(&seq.p[2], Var::T) && depends_on(&seq.p[2], Var::J);
    let secs = started.elapsed().as_secs_f64();

    let even = pq_sequence_with(4, Shift::Even);
    let even_ok: Vec<bool> = (1..=3).map(|k| relations_hold(&even, k)).collect();
    let even_dependence = depends_on(&even.p[2], Var::T) && depends_on(&even.p[2], Var::J);

    let pass = low_terms && printed.iter().all(|b| *b) && dependence && secs < 30.0;
    let documented = low_terms
        && printed == [true, false, false]
        && dependence
        && secs < 30.0
        && even_ok.iter().all(|b| *b)
        && even_dependence;
    let line = Line {
        id: 8,
        title: "exact recurrence counterexample",
        pass,
        detail: format!(
            "p1,q1,p2,q2 exact: {low_terms}; relations k=1..3 with (s^2+n^2): {printed:?}; \
             p2 depends on t and j: {dependence}; {secs:.2} s; with (s^2+4n^2): {even_ok:?}"
        ),
    };
    (line, documented)
}

/// Adds `0.01 t²` to every jet, which breaks `z_ξ = i z_tt`.
struct Perturbed(SolutionInstance);

impl Evaluator for Perturbed {
    fn chart(&self) -> Chart {
        self.0.chart()
    }
    fn eta_rate(&self, c: f64) -> lagflow_core::Result<(f64, f64)> {
        self.0.eta_rate(c)
    }
    fn jet(&self, t: f64, xi: f64, c: f64) -> lagflow_core::Result<CJet> {
        let z = self.0.jet(t, xi, c)?;
        let tv = CJet::var_t(z.base());
        Ok(z.checked_add(&(tv.checked_mul(&tv)? * 0.01))?)
    }
    fn sample_box(&self) -> GridBox {
        self.0.sample_box()
    }
}

fn negative_controls(cat: &Catalog) -> Line {
    let (mut jet_min, mut pressure_min) = (f64::INFINITY, f64::INFINITY);
    for inst in &cat.instances {
        let [t, xi, c] = inst.sample_box().center();
        let bad = Perturbed(inst.clone());
        let (evo, _) = structure_residuals(&bad.jet(t, xi, c).unwrap()).unwrap();
        jet_min = jet_min.min(evo);
        let f = fields_at(inst, t, xi, c).unwrap();
        let r = euler_residuals_with_pressure(inst, t, f.x, f.y, FD_STEP, (xi, c), &|eta| 2.0 * eta).unwrap();
        pressure_min = pressure_min.min(r.momentum_x.abs().max(r.momentum_y.abs()));
    }
    let broken = broken_dilation(cat);
    let mut seq = pq_sequence_with(3, Shift::Even);
    seq.p[2] = &seq.p[2] + &poly(&[((1, 0, -4), 1, 1000)]);
    let cas_caught = !relations_hold(&seq, 2);
    Line {
        id: 9,
        title: "negative controls",
        pass: jet_min > 1e-3 && pressure_min > 1e-3 && broken > 1e-3 && cas_caught,
        detail: format!(
            "perturbed jet {jet_min:.2e}, wrong pressure momentum {pressure_min:.2e}, \
             broken dilation {broken:.2e}, perturbed p2 rejected: {cas_caught}"
        ),
    }
}

fn main() -> ExitCode {
    // libtest flags such as `--list` or a name filter are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let started = Instant::now();
    let cat = Catalog::build();
    let (cas_line, documented) = counterexample();
    let lines = [
        (structure(&cat), Expect::Pass),
        (passive(&cat), Expect::Pass),
        (invariants(&cat), Expect::Pass),
        (vorticity(&cat), Expect::Pass),
        (eulerian(&cat), Expect::Pass),
        (geometry(&cat), Expect::Pass),
        (symmetry(&cat), Expect::Pass),
        (cas_line, Expect::DocumentedFail(documented)),
        (negative_controls(&cat), Expect::Pass),
    ];
    let mut ok = true;
    for (line, expect) in &lines {
        let verdict = if line.pass { "PASS" } else { "FAIL" };
        let note = match expect {
            Expect::DocumentedFail(true) if !line.pass => " (known, matches recorded analysis)",
            Expect::DocumentedFail(_) => " (differs from recorded analysis)",
            Expect::Pass => "",
        };
        println!("criterion {} {:<32} {verdict}{note}  {}", line.id, line.title, line.detail);
        ok &= match expect {
            Expect::Pass => line.pass,
            Expect::DocumentedFail(matches) => *matches && !line.pass,
        };
    }
    println!("acceptance finished in {:.1} s", started.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
