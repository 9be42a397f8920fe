use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::anyhow;
use lagflow_cas::Shift;
use lagflow_core::eulerian::{field_grid, trajectories, BBox};
use lagflow_core::expr::Expr;
use lagflow_core::families::{linspace, make_instance, Evaluator, FamilyId, FamilyParams, SolutionInstance};
use lagflow_core::geometry::boundary_curve;
use lagflow_core::report::{VerifyReport, SCHEMA};
use lagflow_core::symmetry::{verify_action, Action, GroupElement, GroupKind, SYMMETRY_TOL};
use lagflow_core::verify::{verify_instance, SuiteOptions};
use serde::Serialize;

use crate::config::{self, parse_list, FileConfig};
use crate::output::{cell, num, write_csv, write_json};
use crate::{
    BoundaryArgs, Cli, Command, CounterexampleArgs, FamilyArgs, FieldsArgs, SymmetryArgs, TrajectoryArgs, VerifyArgs,
};

/// A failure with its exit status: 2 for invalid input, 1 otherwise.
pub struct Exit {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Exit {
    pub fn invalid(error: anyhow::Error) -> Exit {
        Exit { code: 2, error }
    }

    pub fn failed(error: anyhow::Error) -> Exit {
        Exit { code: 1, error }
    }
}

impl From<lagflow_core::Error> for Exit {
    fn from(e: lagflow_core::Error) -> Exit {
        use lagflow_core::Error as E;
        let code = match e {
            E::Constraint(_) | E::OutOfDomain { .. } | E::Invalid(_) | E::Expr(_) | E::Singular { .. } => 2,
            _ => 1,
        };
        Exit { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Exit {
        Exit::failed(e)
    }
}

const MAX_KMAX: usize = 5;

fn init_threads() -> Result<(), Exit> {
    let Ok(v) = std::env::var("LAGFLOW_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Exit::invalid(anyhow!("LAGFLOW_THREADS must be a positive integer (got `{v}`)")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Exit::failed(e.into()))
}

pub fn run(cli: Cli) -> Result<bool, Exit> {
    init_threads()?;
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    match cli.command {
        Command::List => list(),
        Command::Verify(a) => verify(a, &file, seed),
        Command::Fields(a) => fields(a, &file),
        Command::Trajectories(a) => trajectories_cmd(a, &file),
        Command::Boundary(a) => boundary(a, &file),
        Command::Symmetry(a) => symmetry(a, &file),
        Command::Counterexample(a) => counterexample(a, &file, seed),
    }
}

fn instance(flags: &FamilyArgs, file: &FileConfig) -> Result<SolutionInstance, Exit> {
    let params = config::family_params(flags, file)?;
    Ok(make_instance(params)?)
}

fn list() -> Result<bool, Exit> {
    for id in FamilyId::ALL {
        let inst = make_instance(FamilyParams::default_for(id))?;
        println!("{:<3} {}", id.name(), id.formula());
        println!("    constraints: {}", id.constraints());
        println!("    domain ({}): {}", inst.chart().coord_name(), inst.domain());
        let params = inst.spec().describe();
        if !params.is_empty() {
            let text: Vec<String> = params.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            println!("    catalog default: {}", text.join(", "));
        }
        let refs = id.cross_references();
        if refs.is_empty() {
            println!("    cross-reference: none");
        } else {
            let text: Vec<String> = refs.iter().map(|(n, f)| format!("solution {n} {f}")).collect();
            println!("    cross-reference: {}", text.join("; "));
        }
        if let Some(note) = id.note() {
            println!("    note: {note}");
        }
    }
    Ok(true)
}

fn print_report(r: &VerifyReport) {
    println!("family {} ({} checks, {} ms)", r.family, r.items.len(), r.elapsed_ms);
    for item in &r.items {
        let status = serde_json::to_value(item.status).ok().and_then(|v| v.as_str().map(str::to_string));
        print!(
            "  {:<32} {:>11.3e}  tol {:>8.1e}  {}",
            item.name,
            item.max_residual,
            item.tolerance,
            status.unwrap_or_default().to_uppercase()
        );
        match &item.note {
            Some(n) => println!("  ({n})"),
            None => println!(),
        }
    }
    println!("{}: {}", r.family, if r.passed { "PASS" } else { "FAIL" });
}

fn verify(a: VerifyArgs, file: &FileConfig, seed: u64) -> Result<bool, Exit> {
    let opts = SuiteOptions {
        grid: config::grid(&a.grid, file)?,
        tol: config::tolerances(&a.tol, file)?,
        seed,
        ..SuiteOptions::default()
    };
    let name = a.family.family.clone().or_else(|| file.family.clone());
    if name.as_deref().is_some_and(|n| n.eq_ignore_ascii_case("all")) {
        if a.family.has_params() {
            return Err(Exit::invalid(anyhow!("family parameters cannot be combined with --family all")));
        }
        let reports: Vec<VerifyReport> = FamilyId::ALL
            .iter()
            .map(|id| Ok(verify_instance(&make_instance(FamilyParams::default_for(*id))?, &opts)))
            .collect::<Result<_, Exit>>()?;
        reports.iter().for_each(print_report);
        if let Some(path) = &a.report {
            write_json(path, &reports)?;
        }
        return Ok(reports.iter().all(|r| r.passed));
    }
    let inst = instance(&a.family, file)?;
    let report = verify_instance(&inst, &opts);
    print_report(&report);
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(report.passed)
}

#[derive(Serialize)]
struct FieldsManifest {
    schema: &'static str,
    family: String,
    params: BTreeMap<String, String>,
    time: f64,
    bbox: [f64; 4],
    n: [usize; 2],
    resolved: usize,
    missing: usize,
    max_jacobian_error: f64,
    max_vorticity_minus_beta: f64,
    tolerances: BTreeMap<&'static str, f64>,
    passed: bool,
}

fn counts<const N: usize>(text: &str, what: &str) -> Result<[usize; N], Exit> {
    let vals = parse_list::<N>(text, what)?;
    let mut out = [0; N];
    for (o, v) in out.iter_mut().zip(vals) {
        if !(v >= 1.0 && v.fract() == 0.0) {
            return Err(Exit::invalid(anyhow!("{what} must be positive integers (got `{text}`)")));
        }
        *o = v as usize;
    }
    Ok(out)
}

fn fields(a: FieldsArgs, file: &FileConfig) -> Result<bool, Exit> {
    let inst = instance(&a.family, file)?;
    let t = a.time.or(file.time).unwrap_or(0.0);
    let [x0, x1, y0, y1] = parse_list::<4>(&a.bbox, "--bbox")?;
    let [nx, ny] = counts::<2>(&a.n, "--n")?;
    let nodes = field_grid(&inst, t, BBox { x0, x1, y0, y1 }, nx, ny);
    let rows = nodes.iter().map(|node| {
        let s = node.sample;
        vec![
            num(t),
            num(node.x),
            num(node.y),
            cell(s.map(|s| s.u)),
            cell(s.map(|s| s.v)),
            cell(s.map(|s| s.p)),
            cell(s.map(|s| s.omega)),
            cell(s.map(|s| s.jac)),
        ]
    });
    write_csv(a.out.as_deref(), "t,x,y,u,v,p,omega,jac", rows)?;
    let resolved: Vec<_> = nodes.iter().filter_map(|n| n.sample).collect();
    let jac_err = resolved.iter().map(|s| (s.jac - 1.0).abs()).fold(0.0, f64::max);
    let vort = resolved.iter().map(|s| (s.omega - s.beta).abs()).fold(0.0, f64::max);
    let tol = lagflow_core::verify::Tolerances::default();
    let passed = jac_err < tol.structure && vort < tol.vorticity;
    if let Some(path) = &a.manifest {
        let manifest = FieldsManifest {
            schema: SCHEMA,
            family: inst.family().name().to_string(),
            params: inst.spec().describe().into_iter().collect(),
            time: t,
            bbox: [x0, x1, y0, y1],
            n: [nx, ny],
            resolved: resolved.len(),
            missing: nodes.len() - resolved.len(),
            max_jacobian_error: jac_err,
            max_vorticity_minus_beta: vort,
            tolerances: BTreeMap::from([("jacobian", tol.structure), ("vorticity", tol.vorticity)]),
            passed,
        };
        write_json(path, &manifest)?;
    }
    if resolved.is_empty() {
        eprintln!("warning: no grid node could be mapped back to a particle");
    }
    Ok(true)
}

fn shrink((lo, hi): (f64, f64)) -> (f64, f64) {
    let m = 0.1 * (hi - lo);
    (lo + m, hi - m)
}

fn trajectories_cmd(a: TrajectoryArgs, file: &FileConfig) -> Result<bool, Exit> {
    let inst = instance(&a.family, file)?;
    let particles: Vec<(f64, f64)> = match &a.particles {
        Some(text) => text
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_list::<2>(p, "--particles").map(|[xi, c]| (xi, c)))
            .collect::<Result<_, _>>()?,
        None => {
            let b = inst.sample_box();
            let xis = linspace(shrink(b.xi), 3);
            let cs = linspace(shrink(b.c), 3);
            xis.iter().flat_map(|&xi| cs.iter().map(move |&c| (xi, c))).collect()
        }
    };
    let rows = trajectories(&inst, &particles, a.t0, a.t1, a.dt)?;
    let rows = rows
        .iter()
        .map(|r| vec![r.particle.to_string(), num(r.t), num(r.x), num(r.y), num(r.u), num(r.v), num(r.p)]);
    write_csv(a.out.as_deref(), "particle,t,x,y,u,v,p", rows)?;
    Ok(true)
}

fn boundary(a: BoundaryArgs, file: &FileConfig) -> Result<bool, Exit> {
    let inst = instance(&a.family, file)?;
    let b = inst.sample_box();
    let eta = match a.eta {
        Some(e) => e,
        None => inst.eta_at(b.center()[2])?,
    };
    let t = a.time.or(file.time).unwrap_or(0.0);
    let xi = match &a.xi {
        Some(text) => {
            let [x0, x1] = parse_list::<2>(text, "--xi")?;
            (x0, x1)
        }
        None => b.xi,
    };
    let samples = boundary_curve(&inst, eta, t, xi, a.n)?;
    let rows = samples.iter().map(|s| vec![num(s.x), num(s.y), num(s.kappa), num(s.s)]);
    write_csv(a.out.as_deref(), "x,y,kappa,s", rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct SymmetryReport {
    schema: &'static str,
    family: String,
    params: BTreeMap<String, String>,
    param: f64,
    phi: String,
    tolerance: f64,
    elements: Vec<ElementResult>,
    passed: bool,
}

#[derive(Serialize)]
struct ElementResult {
    element: String,
    max_residual: f64,
    passed: bool,
    report: VerifyReport,
}

fn symmetry(a: SymmetryArgs, file: &FileConfig) -> Result<bool, Exit> {
    let inst = instance(&a.family, file)?;
    let defaults = SuiteOptions::default();
    let param = a.param.or(file.param).unwrap_or(defaults.symmetry_param);
    let phi = match a.phi.as_ref().or(file.phi.as_ref()) {
        Some(t) => Expr::parse(t).map_err(|e| Exit::invalid(anyhow!("phi: {e}")))?,
        None => defaults.phi.clone(),
    };
    let grid = config::grid(&a.grid, file)?;
    let tol = a.tol.unwrap_or(SYMMETRY_TOL);
    let el = a.element.to_ascii_lowercase();
    let actions: Vec<Action> = match el.as_str() {
        "all" => GroupElement::all(param, &phi).into_iter().map(Action::Element).collect(),
        "broken" | "broken_dilation" => vec![Action::BrokenDilation(param)],
        _ => {
            let kind: GroupKind = a.element.parse()?;
            let g = if kind == GroupKind::X1 { GroupElement::x1(param, phi.clone()) } else { GroupElement::new(kind, param) };
            vec![Action::Element(g)]
        }
    };
    let family = inst.family().name().to_string();
    let params = inst.spec().describe().into_iter().collect();
    let inner: Arc<dyn Evaluator> = Arc::new(inst);
    let mut elements = Vec::new();
    for action in actions {
        let label = action.label();
        let report = verify_action(inner.clone(), action, grid, tol)?;
        let max_residual = report.items.iter().map(|i| i.max_residual).fold(0.0, |m: f64, r| if r.is_nan() { f64::NAN } else { m.max(r) });
        println!("  {:<24} {:>11.3e}  {}", label, max_residual, if report.passed { "PASS" } else { "FAIL" });
        elements.push(ElementResult { element: label, max_residual, passed: report.passed, report });
    }
    let passed = elements.iter().all(|e| e.passed);
    println!("{family}: {}", if passed { "PASS" } else { "FAIL" });
    if let Some(path) = &a.report {
        let r = SymmetryReport {
            schema: SCHEMA,
            family,
            params,
            param,
            phi: phi.to_string(),
            tolerance: tol,
            elements,
            passed,
        };
        write_json(path, &r)?;
    }
    Ok(passed)
}

fn counterexample(a: CounterexampleArgs, file: &FileConfig, seed: u64) -> Result<bool, Exit> {
    let kmax = a.kmax.or(file.kmax).unwrap_or(3);
    if kmax > MAX_KMAX {
        return Err(Exit::invalid(anyhow!("--kmax must be at most {MAX_KMAX} (got {kmax})")));
    }
    let shift: Shift = match a.shift.as_ref().or(file.shift.as_ref()) {
        Some(t) => t.parse().map_err(|e: String| Exit::invalid(anyhow!(e)))?,
        None => Shift::default(),
    };
    let report = lagflow_cas::counterexample(kmax, shift, seed);
    for s in &report.terms {
        println!("p{} = {}", s.k, s.p);
        println!("q{} = {}", s.k, s.q);
    }
    for c in &report.checks {
        println!(
            "  k={} {:<22} {}  points {}/{}  residual terms {}  {:.1} ms",
            c.k,
            c.relation.name(),
            if c.pass { "PASS" } else { "FAIL" },
            c.points_agreed,
            c.points_tried,
            c.residual_num_terms,
            c.wall_ms
        );
    }
    for (k, (t, j)) in report.depends_on_t.iter().zip(&report.depends_on_j).enumerate() {
        println!("  p{k} depends on t: {t}, on j: {j}");
    }
    println!("counterexample (kmax {kmax}): {}  {:.0} ms", if report.passed { "PASS" } else { "FAIL" }, report.elapsed_ms);
    if !report.passed && shift == Shift::Unit {
        eprintln!("note: with h_k built from (s^2 + n^2) the relations fail from k = 2; `--shift even` uses (s^2 + 4n^2)");
    }
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(report.passed)
}
