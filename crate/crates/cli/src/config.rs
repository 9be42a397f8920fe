//! Merging of flags, the optional TOML file and built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context};
use lagflow_core::expr::Expr;
use lagflow_core::families::{FamilyId, FamilyParams, GridSpec};
use lagflow_core::verify::Tolerances;
use serde::Deserialize;

use crate::commands::Exit;
use crate::FamilyArgs;

/// Keys accepted in the `--config` file. Names match the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    #[serde(rename = "S")]
    pub s: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<String>,
    #[serde(rename = "S0")]
    pub s0: Option<f64>,
    pub eta0: Option<f64>,
    pub eta_range: Option<(f64, f64)>,
    pub k: Option<f64>,
    pub theta: Option<f64>,
    pub sigma_domain: Option<(f64, f64)>,
    pub grid: Option<String>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub time: Option<f64>,
    pub param: Option<f64>,
    pub phi: Option<String>,
    pub kmax: Option<usize>,
    pub shift: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, Exit> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(Exit::invalid)?;
        toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(Exit::invalid)
    }
}

pub fn parse_list<const N: usize>(text: &str, what: &str) -> Result<[f64; N], Exit> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Exit::invalid(anyhow!("bad {what} `{text}`")))?;
    vals.try_into()
        .map_err(|_| Exit::invalid(anyhow!("{what} needs {N} comma-separated numbers (got `{text}`)")))
}

fn parse_expr(text: &str, what: &str) -> Result<Expr, Exit> {
    Expr::parse(text).map_err(|e| Exit::invalid(anyhow!("{what}: {e}")))
}

/// Family parameters from flags over the file over the catalog defaults.
pub fn family_params(flags: &FamilyArgs, file: &FileConfig) -> Result<FamilyParams, Exit> {
    let name = flags
        .family
        .clone()
        .or_else(|| file.family.clone())
        .ok_or_else(|| Exit::invalid(anyhow!("missing --family")))?;
    let id = FamilyId::from_str(&name).map_err(|e| Exit::invalid(e.into()))?;
    let pair = |flag: &Option<String>, conf: Option<(f64, f64)>, what: &str| -> Result<Option<(f64, f64)>, Exit> {
        match flag {
            Some(t) => parse_list::<2>(t, what).map(|[a, b]| Some((a, b))),
            None => Ok(conf),
        }
    };
    let s = flags.s.clone().or_else(|| file.s.clone());
    let n = flags.n.clone().or_else(|| file.n.clone());
    let s0 = flags.s0.or(file.s0);
    let eta0 = flags.eta0.or(file.eta0);
    let eta_range = pair(&flags.eta_range, file.eta_range, "--eta-range")?;
    let k = flags.k.or(file.k);
    let theta = flags.theta.or(file.theta);
    let sigma_domain = pair(&flags.sigma_domain, file.sigma_domain, "--sigma-domain")?;

    let given: [(&str, bool, &[FamilyId]); 8] = [
        ("S", s.is_some(), &[FamilyId::A]),
        ("N", n.is_some(), &[FamilyId::B]),
        ("S0", s0.is_some(), &[FamilyId::B]),
        ("eta0", eta0.is_some(), &[FamilyId::B]),
        ("eta-range", eta_range.is_some(), &[FamilyId::B]),
        ("k", k.is_some(), &[FamilyId::C3]),
        ("theta", theta.is_some(), &[FamilyId::C5, FamilyId::C6]),
        ("sigma-domain", sigma_domain.is_some(), &[FamilyId::C5]),
    ];
    for (flag, set, families) in given {
        if set && !families.contains(&id) {
            return Err(Exit::invalid(anyhow!("--{flag} does not apply to family {id}")));
        }
    }

    let default = FamilyParams::default_for(id);
    Ok(match default {
        FamilyParams::A { s: ds } => FamilyParams::A { s: s.map_or(Ok(ds), |t| parse_expr(&t, "S"))? },
        FamilyParams::B { n: dn, eta0: de, s0: ds0, eta_range: dr } => {
            let eta0_v = eta0.unwrap_or(de);
            // A moved start point gets a range starting there, where S grows away from S0.
            let range = eta_range.unwrap_or(if eta0.is_some() { (eta0_v, eta0_v + 2.5) } else { dr });
            FamilyParams::B {
                n: n.map_or(Ok(dn), |t| parse_expr(&t, "N"))?,
                eta0: eta0_v,
                s0: s0.unwrap_or(ds0),
                eta_range: range,
            }
        }
        FamilyParams::C3 { k: dk } => FamilyParams::C3 { k: k.unwrap_or(dk) },
        FamilyParams::C5 { theta: dt, sigma_domain: dd } => {
            FamilyParams::C5 { theta: theta.unwrap_or(dt), sigma_domain: sigma_domain.unwrap_or(dd) }
        }
        FamilyParams::C6 { theta: dt } => FamilyParams::C6 { theta: theta.unwrap_or(dt) },
        other => other,
    })
}

pub fn grid(flag: &Option<String>, file: &FileConfig) -> Result<GridSpec, Exit> {
    match flag.as_ref().or(file.grid.as_ref()) {
        Some(t) => t.parse().map_err(|e: lagflow_core::Error| Exit::invalid(e.into())),
        None => Ok(GridSpec::default()),
    }
}

pub fn tolerances(flag: &Option<String>, file: &FileConfig) -> Result<Tolerances, Exit> {
    let mut tol = Tolerances::default();
    let from_flag = flag.iter().flat_map(|t| t.split(',')).filter(|p| !p.trim().is_empty()).map(|part| {
        let (name, value) = part.split_once('=').ok_or_else(|| anyhow!("bad tolerance override `{part}`"))?;
        let value: f64 = value.trim().parse().map_err(|_| anyhow!("bad tolerance value in `{part}`"))?;
        Ok((name.trim().to_string(), value))
    });
    let entries: Vec<(String, f64)> = file
        .tol
        .iter()
        .map(|(k, v)| Ok((k.clone(), *v)))
        .chain(from_flag)
        .collect::<anyhow::Result<_>>()
        .map_err(Exit::invalid)?;
    for (name, value) in entries {
        tol.set(&name, value).map_err(|e| Exit::invalid(e.into()))?;
    }
    Ok(tol)
}
