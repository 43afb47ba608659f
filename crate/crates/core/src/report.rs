//! JSON and aligned-text rendering of experiment results.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::observables::Beta;
use crate::oracles::{second_moment_normalized, MomentOracleInput};
use crate::phase::{PhaseLabel, ScalingRule};
use crate::stats::{
    BarrierReport, CltReport, Estimate, FreeEnergyRow, MartingaleReport, ReplicaTable, SmoothingReport,
};

pub const SCHEMA: u32 = 1;

/// Formats `x` with 12 significant digits and no trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        let s = format!("{x:.11e}");
        let (m, e) = s.split_once('e').expect("exponent form");
        let m = m.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn complex(re: f64, im: f64) -> String {
    let sign = if im.is_sign_negative() { "-" } else { "+" };
    format!("{}{}{}i", fmt_num(re), sign, fmt_num(im.abs()))
}

fn est(e: &Estimate) -> String {
    format!("{} ± {}", fmt_num(e.mean), fmt_num(e.se))
}

/// Space-padded columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.iter().map(|s| s.to_string()).collect());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.clone()));
        out.push('\n');
    }
    out
}

fn pairs(items: &[(&str, String)]) -> String {
    let w = items.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    items.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub beta: Beta,
    pub label: PhaseLabel,
    pub free_energy: f64,
    pub clt_rule: Option<ScalingRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub horizon: f64,
    pub nodes: usize,
    pub leaves: usize,
    pub branching_events: usize,
    pub total_lifetime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub t: f64,
    pub particles: Estimate,
    pub mckean_re: Estimate,
    pub mckean_im: Estimate,
    /// `E |N(t)|^2`
    pub normalized_second_moment: Estimate,
    pub normalized_second_moment_oracle: f64,
    pub m2sigma: Estimate,
    pub derivative: Estimate,
    pub seneta_heyde: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub beta: Beta,
    pub rho: f64,
    pub replicas: usize,
    pub horizons: Vec<HorizonSummary>,
    pub barrier: Option<BarrierReport>,
}

impl SimulationReport {
    /// Summary of pair 0 of `table` at every horizon.
    pub fn from_table(table: &ReplicaTable, k: f64, barrier: Option<BarrierReport>) -> Result<Self> {
        let (beta, rho) = table.pairs[0];
        let mut horizons = Vec::new();
        for (h, &t) in table.horizons.iter().enumerate() {
            let col: Vec<_> = table.column(h, 0).collect();
            let of = |f: &dyn Fn(&crate::stats::ReplicaRow) -> f64| -> Result<Estimate> {
                Estimate::of(&col.iter().map(|r| f(r)).collect::<Vec<f64>>())
            };
            horizons.push(HorizonSummary {
                t,
                particles: of(&|r| r.particles as f64)?,
                mckean_re: of(&|r| r.mckean.re)?,
                mckean_im: of(&|r| r.mckean.im)?,
                normalized_second_moment: of(&|r| r.normalized().norm_sqr())?,
                normalized_second_moment_oracle: second_moment_normalized(&MomentOracleInput { beta, rho, t, k }),
                m2sigma: of(&|r| r.m2sigma)?,
                derivative: of(&|r| r.deriv)?,
                seneta_heyde: of(&|r| r.sh)?,
            });
        }
        Ok(Self {
            beta,
            rho,
            replicas: table.replica_count(),
            horizons,
            barrier,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyMap {
    pub rho: f64,
    pub t: f64,
    pub replicas: u64,
    pub rows: Vec<FreeEnergyRow>,
}

/// Everything a subcommand can report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Phase(PhaseReport),
    Tree(TreeReport),
    Simulation(SimulationReport),
    FreeEnergy(FreeEnergyMap),
    Clt(Box<CltReport>),
    Martingale(MartingaleReport),
    Smoothing(SmoothingReport),
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: u32,
    command: &'a str,
    config: serde_json::Value,
    result: &'a Outcome,
}

/// Versioned JSON document; a pure function of the results and the
/// result-determining part of the configuration.
pub fn render_json(config: &ExperimentConfig, outcome: &Outcome) -> String {
    let env = Envelope {
        schema: SCHEMA,
        command: config.command.name(),
        config: config.fingerprint(),
        result: outcome,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_text(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Phase(p) => format!("{}  {}\n", p.label, fmt_num(p.free_energy)),
        Outcome::Tree(t) => pairs(&[
            ("horizon", fmt_num(t.horizon)),
            ("nodes", t.nodes.to_string()),
            ("leaves", t.leaves.to_string()),
            ("branching events", t.branching_events.to_string()),
            ("total lifetime", fmt_num(t.total_lifetime)),
        ]),
        Outcome::Simulation(s) => {
            let mut out = pairs(&[
                ("beta", s.beta.to_string()),
                ("rho", fmt_num(s.rho)),
                ("replicas", s.replicas.to_string()),
            ]);
            let rows: Vec<Vec<String>> = s
                .horizons
                .iter()
                .map(|h| {
                    vec![
                        fmt_num(h.t),
                        est(&h.mckean_re),
                        est(&h.mckean_im),
                        est(&h.normalized_second_moment),
                        fmt_num(h.normalized_second_moment_oracle),
                        est(&h.m2sigma),
                        est(&h.derivative),
                        est(&h.seneta_heyde),
                    ]
                })
                .collect();
            out.push('\n');
            out.push_str(&table(
                &["t", "Re M", "Im M", "E|N|^2", "oracle", "M_2sigma", "Z", "SH"],
                &rows,
            ));
            if let Some(b) = &s.barrier {
                out.push('\n');
                out.push_str(&pairs(&[
                    ("barrier r", fmt_num(b.r)),
                    ("barrier A", fmt_num(b.a)),
                    ("barrier gamma", fmt_num(b.gamma)),
                    ("E|N^c|^2", est(&b.constrained_second_moment)),
                    ("P(|N - N^c| > delta)", est(&b.exceed_probability)),
                ]));
            }
            out
        }
        Outcome::FreeEnergy(m) => {
            let rows: Vec<Vec<String>> = m
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_num(r.beta.sigma),
                        fmt_num(r.beta.tau),
                        r.label.to_string(),
                        fmt_num(r.median),
                        fmt_num(r.formula),
                        fmt_num(r.gap),
                    ]
                })
                .collect();
            table(&["sigma", "tau", "phase", "median", "formula", "gap"], &rows)
        }
        Outcome::Clt(c) => pairs(&[
            ("beta", c.beta.to_string()),
            ("phase", c.rule.label.to_string()),
            ("rho", fmt_num(c.rho)),
            ("r", fmt_num(c.r)),
            ("t", fmt_num(c.t)),
            ("replicas", c.replicas.to_string()),
            ("excluded", c.excluded.to_string()),
            ("C hat", format!("{} ± {}", fmt_num(c.c_hat), fmt_num(c.c_hat_se))),
            ("C oracle", c.c_hat_oracle.map_or("-".into(), fmt_num)),
            ("KS Re W", fmt_num(c.ks_re)),
            ("KS Im W", fmt_num(c.ks_im)),
            ("KS 1% critical", fmt_num(c.ks_critical_1pct)),
            ("|mean W^2|", fmt_num(c.mixed_moment)),
            ("mean |W|^2", fmt_num(c.mean_abs_w_sq)),
            ("mean W", complex(c.mean_w_re, c.mean_w_im)),
            (
                "intercept",
                format!("{} ± {}", fmt_num(c.regression.intercept), fmt_num(c.regression.intercept_se)),
            ),
            ("slope", format!("{} ± {}", fmt_num(c.regression.slope), fmt_num(c.regression.slope_se))),
            ("origin slope", fmt_num(c.origin_slope)),
        ]),
        Outcome::Martingale(m) => {
            let mut out = pairs(&[
                ("beta", m.beta.to_string()),
                ("phase", m.label.to_string()),
                ("rho", fmt_num(m.rho)),
                ("p", fmt_num(m.p)),
                ("p max", fmt_num(m.p_max)),
                ("growth rate", fmt_num(m.growth_rate)),
                ("replicas", m.replicas.to_string()),
            ]);
            let rows: Vec<Vec<String>> = m
                .horizons
                .iter()
                .map(|h| {
                    vec![
                        fmt_num(h.t),
                        est(&h.mean_re),
                        est(&h.mean_im),
                        est(&h.pth_moment),
                        fmt_num(h.second_moment_oracle),
                    ]
                })
                .collect();
            out.push('\n');
            out.push_str(&table(&["t", "Re M", "Im M", "E|M|^p", "E|M|^2 oracle"], &rows));
            let rows: Vec<Vec<String>> = m
                .increments
                .iter()
                .map(|i| vec![fmt_num(i.t1), fmt_num(i.t2), est(&i.l1)])
                .collect();
            out.push('\n');
            out.push_str(&table(&["t1", "t2", "E|M(t2) - M(t1)|"], &rows));
            out
        }
        Outcome::Smoothing(s) => pairs(&[
            ("beta", s.beta.to_string()),
            ("rho", fmt_num(s.rho)),
            ("r", fmt_num(s.r)),
            ("t", fmt_num(s.t)),
            ("replicas", s.replicas.to_string()),
            ("KS Re", fmt_num(s.ks_re)),
            ("KS Im", fmt_num(s.ks_im)),
            ("KS 1% critical", fmt_num(s.critical_1pct)),
        ]),
    }
}
