//! Command-line front end.
//!
//! ```text
//! pkfield classify --gamma 2
//! pkfield lattice --a1 0 0 --a2 4.25
//! pkfield figure4 --r-list 0.5,1 --t-steps 21 --out fig4.csv
//! ```
//!
//! Exit status: 0 on success, 2 for inputs outside the domain, 3 for a
//! numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use pkfield::genus1_spectral::{t_samples, Genus1Data};
use pkfield::genus2_spectral::{period_lattice, HyperCurve};
use pkfield::immersion_willmore::{
    closing_points_g1, conformality_defect, figure4_row, immersion, period_grid,
    periodicity_defect, willmore_report,
};
use pkfield::io::{
    figure3_table, figure4_table, immersion_obj, trajectory_table, LatticeJson, QuarticJson,
};
use pkfield::lax_flows::{integrate_flow, Grid, Trajectory};
use pkfield::modular_lattice::{reduce, tau_hat};
use pkfield::potentials::{
    classify, Potential, Quartic, SpectralQuartic, StratumClass, DEFAULT_CLASSIFY_TOL,
};
use pkfield::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "pkfield",
    version,
    about = "Polynomial Killing fields, spectral lattices and Willmore tori"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Spectral quartic and stratum of a potential or quartic
    Classify(Source),
    /// Flow a potential along a path and report the invariant drift
    Flow(FlowArgs),
    /// Period lattice of the spectral curve
    Lattice(Source),
    /// Conformal classes τ̃ and τ̂
    Tau(Source),
    /// Willmore energy by the explicit, residue and direct routes
    Willmore(WillmoreArgs),
    /// τ̃ against t for several r
    Figure3(FigureArgs),
    /// τ̂ and W against t for several r
    Figure4(FigureArgs),
    /// Sampled immersion as an OBJ mesh
    ImmersionExport(ExportArgs),
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// α as RE IM
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    alpha: Option<Vec<f64>>,
    /// β as RE IM
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    beta: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Quartic coefficient a₁ as RE [IM]
    #[arg(long, num_args = 1..=2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    a1: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    a2: Option<f64>,
    /// Genus-one family parameter r ∈ (0, 1]
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Relative backward-error tolerance for root clustering
    #[arg(long, default_value_t = DEFAULT_CLASSIFY_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"], default_values_t = [0.0, 0.0])]
    alpha: Vec<f64>,
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"], default_values_t = [0.0, 0.0])]
    beta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// End point z = X + iY
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["X", "Y"])]
    to: Vec<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Nodes per side of the trajectory grid over [0, X] × [0, Y] (csv)
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct WillmoreArgs {
    #[arg(long)]
    r: f64,
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Nodes per side for the direct quadrature
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    r_list: Vec<f64>,
    #[arg(long, default_value_t = 41)]
    t_steps: usize,
    /// Sample t over [−T, T] for every r instead of the default range
    #[arg(long)]
    t_range: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    r: f64,
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Cells per side over one period cell of the closing lattice
    #[arg(long, default_value_t = 24)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// ℝ⁴ coordinate dropped for the ℝ³ vertices
    #[arg(long, default_value_t = 3)]
    drop: usize,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn c2(v: &Option<Vec<f64>>) -> C64 {
    match v.as_deref() {
        Some([re, im]) => C64::new(*re, *im),
        Some([re]) => C64::new(*re, 0.0),
        _ => C64::new(0.0, 0.0),
    }
}

fn cplx(z: C64) -> Value {
    json!([z.re, z.im])
}

fn domain(msg: &str) -> Error {
    Error::Domain(msg.to_string())
}

/// What a `Source` resolves to.
enum Resolved {
    Quartic(SpectralQuartic),
    Family(Box<Genus1Data>),
}

impl Source {
    fn config(&self) -> Value {
        json!({
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "a1": self.a1, "a2": self.a2, "r": self.r, "t": self.t, "phi": self.phi, "tol": self.tol,
        })
    }

    fn potential(&self) -> Result<Option<Potential>> {
        match self.gamma {
            Some(g) => Ok(Some(Potential::new(c2(&self.alpha), c2(&self.beta), g)?)),
            None if self.alpha.is_some() || self.beta.is_some() => {
                Err(domain("--gamma is required with --alpha/--beta"))
            }
            None => Ok(None),
        }
    }

    fn quartic(&self) -> Result<SpectralQuartic> {
        match self.resolve()? {
            Resolved::Quartic(sq) => Ok(sq),
            Resolved::Family(d) => d.spectral_quartic(),
        }
    }

    fn resolve(&self) -> Result<Resolved> {
        if let Some(p) = self.potential()? {
            return Ok(Resolved::Quartic(classify(&p.quartic(), self.tol)?));
        }
        if self.a1.is_some() || self.a2.is_some() {
            let a2 = self
                .a2
                .ok_or_else(|| domain("--a2 is required with --a1"))?;
            return Ok(Resolved::Quartic(classify(
                &Quartic::new(c2(&self.a1), a2),
                self.tol,
            )?));
        }
        if let Some(r) = self.r {
            return Ok(Resolved::Family(Box::new(match (self.t, self.phi) {
                (Some(t), None) => Genus1Data::new(r, t)?,
                (None, Some(phi)) => Genus1Data::from_r_phi(r, phi)?,
                _ => return Err(domain("give exactly one of --t and --phi with --r")),
            })));
        }
        Err(domain(
            "no input: give --gamma [--alpha --beta], --a1 --a2, or --r with --t or --phi",
        ))
    }

    fn genus1(&self) -> Result<Option<Genus1Data>> {
        match self.resolve()? {
            Resolved::Family(d) => Ok(Some(*d)),
            Resolved::Quartic(sq) => match sq.class {
                StratumClass::M22 | StratumClass::M23 => Ok(Some(Genus1Data::from_quartic(&sq)?)),
                _ => Ok(None),
            },
        }
    }
}

fn cmd_classify(s: &Source) -> Result<Value> {
    let sq = s.quartic()?;
    let mut v = serde_json::to_value(QuarticJson::from(&sq)).expect("plain data");
    v["genus"] = json!(sq.class.genus());
    v["config"] = s.config();
    Ok(v)
}

fn cmd_lattice(s: &Source) -> Result<Value> {
    if let Some(d) = s.genus1()? {
        let (w1, w2) = d.generators();
        let class = if d.r == 1.0 {
            StratumClass::M23
        } else {
            StratumClass::M22
        };
        return Ok(json!({
            "class": class, "omega1": cplx(w1), "omega2": cplx(w2),
            "hat_omega1": cplx(d.hat_generators().0), "hat_omega2": cplx(d.hat_generators().1),
            "r": d.r, "t": d.t, "phi": d.phi, "config": s.config(),
        }));
    }
    let sq = s.quartic()?;
    if sq.class != StratumClass::M21 {
        return Err(Error::Class {
            expected: "M2_1, M2_2 or M2_3".into(),
            found: sq.class.label().into(),
        });
    }
    let l = period_lattice(&HyperCurve::from_quartic(&sq)?)?;
    let mut v = serde_json::to_value(LatticeJson::from(&l)).expect("plain data");
    v["a_residual"] = json!(l.a_residual);
    v["bperiod_real_part"] = json!(l.real_part);
    v["self_convergence"] = json!(l.self_convergence);
    v["config"] = s.config();
    Ok(v)
}

fn cmd_tau(s: &Source) -> Result<Value> {
    if let Some(d) = s.genus1()? {
        let tt = d.tau_tilde();
        let red = reduce(C64::new(1.0, 0.0), tt)?;
        let th = tau_hat(tt)?;
        return Ok(json!({
            "tau_tilde": cplx(tt), "tau_tilde_reduced": cplx(red.tau), "tau_hat": cplx(th.tau),
            "unimodular": th.unimodular, "config": s.config(),
        }));
    }
    let sq = s.quartic()?;
    if sq.class != StratumClass::M21 {
        return Err(Error::Class {
            expected: "M2_1, M2_2 or M2_3".into(),
            found: sq.class.label().into(),
        });
    }
    let l = period_lattice(&HyperCurve::from_quartic(&sq)?)?;
    let red = reduce(l.omega1, l.omega2)?;
    Ok(json!({
        "tau_tilde_reduced": cplx(red.tau), "unimodular": red.unimodular,
        "bperiod_residual": l.bperiod_residual, "config": s.config(),
    }))
}

fn write_out(path: &Option<std::path::PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| domain(&format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())
                .map_err(|e| domain(&e.to_string()))
        }
    }
}

fn cmd_flow(a: &FlowArgs) -> Result<Option<Value>> {
    let p0 = Potential::new(
        C64::new(a.alpha[0], a.alpha[1]),
        C64::new(a.beta[0], a.beta[1]),
        a.gamma,
    )?;
    let to = C64::new(a.to[0], a.to[1]);
    let config = vec![
        ("command".to_string(), "flow".to_string()),
        ("alpha".into(), format!("{} {}", a.alpha[0], a.alpha[1])),
        ("beta".into(), format!("{} {}", a.beta[0], a.beta[1])),
        ("gamma".into(), a.gamma.to_string()),
        ("to".into(), format!("{} {}", a.to[0], a.to[1])),
        ("tol".into(), format!("{:e}", a.tol)),
        ("grid".into(), a.grid.to_string()),
    ];
    match a.format {
        Format::Json => {
            let tr = integrate_flow(&p0, &[to], a.tol)?;
            let end = tr.states.last().expect("path has an end point");
            Ok(Some(json!({
                "start": p0, "end": end, "drift": tr.max_drift, "tol": a.tol,
                "config": config.into_iter().collect::<std::collections::BTreeMap<_, _>>(),
            })))
        }
        Format::Csv => {
            if a.grid < 2 {
                return Err(Error::GridTooSmall {
                    n1: a.grid,
                    n2: a.grid,
                });
            }
            let m = (a.grid - 1) as f64;
            let grid = Grid::rect(0.0, 0.0, to.re / m, to.im / m, a.grid, a.grid);
            let t = Trajectory::compute(&p0, grid, a.tol)?;
            let mut cfg = config;
            cfg.push(("max_drift".into(), format!("{:.3e}", t.max_drift())));
            write_out(&a.out, &trajectory_table(&t).with_config(&cfg).to_csv())?;
            Ok(None)
        }
    }
}

fn cmd_willmore(a: &WillmoreArgs) -> Result<Value> {
    let d = Genus1Data::new(a.r, a.t)?;
    let w = willmore_report(&d, a.grid, a.tol)?;
    let mut v = serde_json::to_value(w).expect("plain data");
    v["config"] = json!({"r": a.r, "t": a.t, "grid": a.grid, "tol": a.tol});
    Ok(v)
}

fn figure_config(name: &str, a: &FigureArgs) -> Vec<(String, String)> {
    let rl: Vec<String> = a.r_list.iter().map(|r| r.to_string()).collect();
    vec![
        ("command".into(), name.into()),
        ("r_list".into(), rl.join(",")),
        ("t_steps".into(), a.t_steps.to_string()),
        (
            "t_range".into(),
            a.t_range.map_or("default".into(), |t| t.to_string()),
        ),
    ]
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| domain(&format!("thread pool: {e}")))
}

/// (r, t) pairs in output order.
fn figure_params(a: &FigureArgs) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for &r in &a.r_list {
        let ts = match a.t_range {
            None => t_samples(r, a.t_steps)?,
            Some(tr) => {
                if !(tr > 0.0) || a.t_steps < 2 {
                    return Err(domain("--t-range needs T > 0 and at least two steps"));
                }
                let m = (a.t_steps - 1) as f64;
                (0..a.t_steps)
                    .map(|i| tr * (2.0 * i as f64 - m) / m)
                    .collect()
            }
        };
        out.extend(ts.into_iter().map(|t| (r, t)));
    }
    Ok(out)
}

fn cmd_figure(name: &str, a: &FigureArgs) -> Result<()> {
    let params = figure_params(a)?;
    let cfg = figure_config(name, a);
    // rows keep parameter order whatever the completion order
    let text = if name == "figure3" {
        let rows: Result<Vec<_>> = pool(a.jobs)?.install(|| {
            params
                .par_iter()
                .map(|&(r, t)| {
                    Genus1Data::new(r, t).map(|d| pkfield::genus1_spectral::Figure3Row {
                        r,
                        t,
                        tau_tilde: d.tau_tilde(),
                    })
                })
                .collect()
        });
        let rows = rows?;
        match a.format {
            Format::Csv => figure3_table(&rows).with_config(&cfg).to_csv(),
            Format::Json => json!({"config": cfg_map(&cfg), "rows": rows}).to_string() + "\n",
        }
    } else {
        let rows: Result<Vec<_>> =
            pool(a.jobs)?.install(|| params.par_iter().map(|&(r, t)| figure4_row(r, t)).collect());
        let rows = rows?;
        match a.format {
            Format::Csv => figure4_table(&rows).with_config(&cfg).to_csv(),
            Format::Json => json!({"config": cfg_map(&cfg), "rows": rows}).to_string() + "\n",
        }
    };
    write_out(&a.out, &text)
}

fn cfg_map(cfg: &[(String, String)]) -> std::collections::BTreeMap<String, String> {
    cfg.iter().cloned().collect()
}

fn cmd_export(a: &ExportArgs) -> Result<Value> {
    let d = Genus1Data::new(a.r, a.t)?;
    let cd = closing_points_g1(&d)?;
    let (h1, h2) = cd.hat_generators;
    let g = immersion(&cd.p0, &cd, period_grid(h1, h2, a.grid), a.tol)?;
    let cfg = vec![
        ("command".to_string(), "immersion-export".to_string()),
        ("r".into(), a.r.to_string()),
        ("t".into(), a.t.to_string()),
        ("grid".into(), a.grid.to_string()),
        ("tol".into(), format!("{:e}", a.tol)),
        ("drop".into(), a.drop.to_string()),
    ];
    let obj = immersion_obj(&g, a.drop, &cfg)?;
    let summary = json!({
        "vertices": g.f.len(),
        "closing_defect": cd.closing_defect(),
        "periodicity_defect": periodicity_defect(&g),
        "conformality_defect": conformality_defect(&g)?,
        "analytic_conformality": g.analytic_conformality,
        "structure_defect": g.structure_defect,
        "hopf_defect": g.hopf_defect,
        "config": cfg_map(&cfg),
    });
    match &a.out {
        Some(_) => {
            write_out(&a.out, &obj)?;
            Ok(summary)
        }
        None => {
            write_out(&None, &obj)?;
            Ok(Value::Null)
        }
    }
}

fn run(cli: Cli) -> Result<Option<Value>> {
    match cli.cmd {
        Cmd::Classify(s) => cmd_classify(&s).map(Some),
        Cmd::Flow(a) => cmd_flow(&a),
        Cmd::Lattice(s) => cmd_lattice(&s).map(Some),
        Cmd::Tau(s) => cmd_tau(&s).map(Some),
        Cmd::Willmore(a) => cmd_willmore(&a).map(Some),
        Cmd::Figure3(a) => cmd_figure("figure3", &a).map(|_| None),
        Cmd::Figure4(a) => cmd_figure("figure4", &a).map(|_| None),
        Cmd::ImmersionExport(a) => cmd_export(&a).map(|v| if v.is_null() { None } else { Some(v) }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Some(v)) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_domain() { 2 } else { 3 })
        }
    }
}
