//! Configuration-driven runs: `polaron-lab <subcommand> --config <path> [--out <dir>]`.
//!
//! Every run writes its payload files atomically and then `manifest.json`
//! with the resolved configuration, so a manifest is enough to repeat a run.
//! Exit codes: 0 success, 1 validation error, 2 numerical non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::branch::{BranchSolver, LambdaGrid};
use crate::budget::{self, Constants, ExponentSpec, ExponentVector};
use crate::error::{Error, Result};
use crate::froehlich::{self, FockConfig, Hamiltonian, LanczosOptions};
use crate::grid::{fmt17, Grid, GridFunction};
use crate::measure::{MeasureSpec, TestMeasure};
use crate::pekar::{self, PekarOptions};
use crate::perturb::{self, Perturbation};
use crate::potential::{Potential, PotentialSpec};

const MODULE: &str = "cli";

pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_DELTAS: [f64; 8] = [-0.2, -0.1, -0.05, -0.025, 0.025, 0.05, 0.1, 0.2];

#[derive(Debug, Parser)]
#[command(
    name = "polaron-lab",
    version,
    about = "Desk-scale numerics for the one-dimensional polaron"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimize the Pekar functional.
    Pekar,
    /// Trace the solution branch over a λ grid.
    Branch,
    /// Perturbed energies and bracket rows.
    Perturb,
    /// Truncated Fröhlich ground states and densities.
    Froehlich,
    /// α scan of the Fröhlich energy and density pairing.
    Scan,
    /// Error-budget order arithmetic.
    Budget {
        #[arg(value_enum, default_value_t = BudgetAction::Optimize)]
        action: BudgetAction,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pekar => "pekar",
            Command::Branch => "branch",
            Command::Perturb => "perturb",
            Command::Froehlich => "froehlich",
            Command::Scan => "scan",
            Command::Budget { .. } => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetAction {
    /// Min–max exponents with the dual certificate.
    Optimize,
    /// Term orders at the configured exponents.
    Orders,
    /// Numeric sandwich at one α.
    Sandwich,
}

/// Configuration form: `{"R": 40.0, "n": 4097}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "R")]
    pub half_width: f64,
    #[serde(rename = "n")]
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = Grid::production();
        GridSpec {
            half_width: g.half_width(),
            points: g.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<[f64; 4]>,
    #[serde(default, rename = "e_V", skip_serializing_if = "Option::is_none")]
    pub e_v: Option<f64>,
}

/// One JSON document per run. Fields a subcommand does not use are ignored
/// by it but still validated when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<FockConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_fd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<LambdaGrid>,
    /// Branch: also run the norm-matching search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_match: Option<bool>,
    /// Branch: write one profile CSV per λ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pekar: Option<PekarOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanczos: Option<LanczosOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(MODULE, "config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(MODULE, "config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Validated inputs with every default filled in.
#[derive(Debug, Clone)]
struct Job {
    command: Command,
    config: RunConfig,
    out: PathBuf,
}

impl Job {
    fn grid(&self) -> Result<Grid> {
        let g = self.config.grid.unwrap_or_default();
        Grid::new(g.half_width, g.points).map_err(|e| rename(e, "grid"))
    }

    fn potential(&self) -> Result<Potential> {
        let spec = self
            .config
            .potential
            .as_ref()
            .ok_or_else(|| Error::invalid(MODULE, "potential", format!("required by `{}`", self.command.name())))?;
        Potential::from_spec(spec)
    }

    fn measure(&self) -> Result<TestMeasure> {
        let spec = self
            .config
            .measure
            .as_ref()
            .ok_or_else(|| Error::invalid(MODULE, "measure", format!("required by `{}`", self.command.name())))?;
        TestMeasure::from_spec(spec)
    }

    fn pekar_opts(&self) -> PekarOptions {
        self.config.pekar.clone().unwrap_or_default()
    }

    fn lanczos_opts(&self) -> LanczosOptions {
        self.config.lanczos.clone().unwrap_or_default()
    }

    fn fock(&self) -> Result<FockConfig> {
        let f = self.config.fock.clone().unwrap_or_default();
        f.validate()?;
        Ok(f)
    }

    fn alphas(&self) -> Result<Vec<f64>> {
        let a = self.config.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
        if a.is_empty() || a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid(
                MODULE,
                "alphas",
                "need a nonempty list of positive values",
            ));
        }
        Ok(a)
    }

    fn deltas(&self) -> Result<Vec<f64>> {
        let d = self.config.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
        if d.is_empty() || d.iter().any(|x| !(x.is_finite() && x.abs() <= perturb::MAX_DELTA)) {
            return Err(Error::invalid(
                MODULE,
                "deltas",
                format!("need a nonempty list with |δ| <= {}", perturb::MAX_DELTA),
            ));
        }
        Ok(d)
    }

    /// Resolve defaults used by the subcommand and validate everything it reads.
    fn resolve(command: Command, mut config: RunConfig, out: Option<PathBuf>) -> Result<Self> {
        let out = out
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        config.out = Some(out.clone());
        match command {
            Command::Pekar | Command::Branch | Command::Perturb => {
                config.grid.get_or_insert_with(GridSpec::default);
                config.pekar.get_or_insert_with(PekarOptions::default);
            }
            Command::Froehlich | Command::Scan => {
                config.grid.get_or_insert_with(GridSpec::default);
                config.pekar.get_or_insert_with(PekarOptions::default);
                config.fock.get_or_insert_with(FockConfig::default);
                config.lanczos.get_or_insert_with(LanczosOptions::default);
                config.alphas.get_or_insert_with(|| DEFAULT_ALPHAS.to_vec());
            }
            Command::Budget { .. } => {}
        }
        if command == Command::Perturb {
            config.deltas.get_or_insert_with(|| DEFAULT_DELTAS.to_vec());
        }
        let job = Job { command, config, out };
        job.validate()?;
        Ok(job)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        if c.potential.is_some() {
            self.potential()?;
        }
        if c.measure.is_some() {
            self.measure()?;
        }
        if c.grid.is_some() {
            self.grid()?;
        }
        if c.fock.is_some() {
            self.fock()?;
        }
        if c.alphas.is_some() {
            self.alphas()?;
        }
        if c.deltas.is_some() {
            self.deltas()?;
        }
        if let Some(d) = c.delta_fd {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(MODULE, "delta_fd", format!("must be positive, got {d}")));
            }
        }
        match self.command {
            Command::Pekar => {
                self.potential()?.validate_on(&self.grid()?)?;
            }
            Command::Branch => {
                self.potential()?.validate_on(&self.grid()?)?;
                if c.lambda_grid.is_none() {
                    return Err(Error::invalid(MODULE, "lambda_grid", "required by `branch`"));
                }
            }
            Command::Perturb | Command::Scan => {
                let grid = self.grid()?;
                self.potential()?.validate_on(&grid)?;
                self.measure()?.weights(&grid)?;
            }
            Command::Froehlich => {
                self.potential()?.validate_on(&self.grid()?)?;
                if c.delta_fd.is_some() {
                    self.measure()?;
                }
            }
            Command::Budget { action } => {
                let b = c.budget.clone().unwrap_or_default();
                if let Some(spec) = &b.exponents {
                    ExponentVector::from_spec(spec)?;
                }
                if action == BudgetAction::Sandwich && (b.alpha.is_none() || b.e_v.is_none()) {
                    return Err(Error::invalid(MODULE, "budget", "`sandwich` needs `alpha` and `e_V`"));
                }
            }
        }
        Ok(())
    }
}

fn rename(e: Error, prefix: &str) -> Error {
    match e {
        Error::Invalid { module, param, reason } => Error::Invalid {
            module,
            param: format!("{prefix}.{param}"),
            reason,
        },
        other => other,
    }
}

/// Collects output files under one directory; each is written to a
/// temporary name and renamed into place.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.dir.join(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<BudgetAction>,
    config: &'a RunConfig,
    outputs: &'a [String],
    status: &'a str,
    created_unix: u64,
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Execute one subcommand. Returns the exit code for runs that completed with
/// recorded per-row failures.
pub fn run(cli: &Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None if matches!(cli.command, Command::Budget { .. }) => RunConfig::default(),
        None => return Err(Error::invalid(MODULE, "config", "`--config <path>` is required")),
    };
    let job = Job::resolve(cli.command, config, cli.out.clone())?;
    let mut out = Outputs::new(&job.out)?;
    let code = match job.command {
        Command::Pekar => run_pekar(&job, &mut out)?,
        Command::Branch => run_branch(&job, &mut out)?,
        Command::Perturb => run_perturb(&job, &mut out)?,
        Command::Froehlich => run_froehlich(&job, &mut out)?,
        Command::Scan => run_scan(&job, &mut out)?,
        Command::Budget { action } => run_budget(&job, action, &mut out)?,
    };
    let files = out.files.clone();
    out.json(
        "manifest.json",
        &Manifest {
            tool: "polaron-lab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: job.command.name(),
            action: match job.command {
                Command::Budget { action } => Some(action),
                _ => None,
            },
            config: &job.config,
            outputs: &files,
            status: if code == 0 { "ok" } else { "partial" },
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        },
    )?;
    Ok(code)
}

fn profile_csv(u: &GridFunction<f64>) -> impl FnOnce(&mut Vec<u8>) -> std::io::Result<()> + '_ {
    move |buf| u.write_csv(buf)
}

fn run_pekar(job: &Job, out: &mut Outputs) -> Result<i32> {
    let res = pekar::minimize(&job.potential()?, &job.grid()?, &job.pekar_opts())?;
    out.json("pekar.json", &res.summary())?;
    out.csv("profile.csv", profile_csv(&res.minimizer))?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct BranchRecord {
    lambda: f64,
    norm2_sq: f64,
    height: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct BranchJson {
    lambda0: f64,
    monotone: bool,
    points: Vec<BranchRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_match: Option<BranchRecord>,
}

fn branch_record(p: &crate::branch::BranchPoint) -> BranchRecord {
    BranchRecord {
        lambda: p.lambda,
        norm2_sq: p.norm2_sq,
        height: p.height,
        residual: p.residual,
    }
}

fn run_branch(job: &Job, out: &mut Outputs) -> Result<i32> {
    let solver = BranchSolver::new(&job.potential()?, &job.grid()?)?;
    let spec = job.config.lambda_grid.as_ref().expect("validated");
    let lambdas = spec.values(solver.lambda0())?;
    let curve = solver.trace(&lambdas)?;
    let matched = if job.config.norm_match.unwrap_or(false) {
        Some(solver.norm_match()?)
    } else {
        None
    };
    out.csv("branch.csv", |buf| curve.write_csv(buf))?;
    if job.config.profiles.unwrap_or(false) {
        for (i, p) in curve.samples.iter().enumerate() {
            out.csv(&format!("profile_{i:03}.csv"), profile_csv(&p.u))?;
        }
    }
    if let Some(m) = &matched {
        out.csv("norm_match.csv", profile_csv(&m.u))?;
    }
    out.json(
        "branch.json",
        &BranchJson {
            lambda0: curve.lambda0,
            monotone: curve.is_monotone(),
            points: curve.samples.iter().map(branch_record).collect(),
            norm_match: matched.as_ref().map(branch_record),
        },
    )?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct EnergyRecord {
    delta: f64,
    energy: f64,
    lambda: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct PerturbJson {
    unperturbed_energy: f64,
    hf_derivative: f64,
    energies: Vec<EnergyRecord>,
    brackets: Vec<perturb::Bracket>,
    ordered: bool,
}

fn run_perturb(job: &Job, out: &mut Outputs) -> Result<i32> {
    let p = Perturbation::new(&job.potential()?, &job.measure()?, &job.grid()?, &job.pekar_opts())?;
    let deltas = job.deltas()?;
    let results = p.energies(&deltas)?;
    let base = p.unperturbed().energy;
    let brackets: Vec<perturb::Bracket> = results
        .iter()
        .filter(|r| r.delta != 0.0 && r.delta.abs() <= perturb::MAX_BRACKET_DELTA)
        .map(|r| p.bracket_from(r))
        .collect();
    out.csv("brackets.csv", |buf| perturb::write_brackets(&brackets, buf))?;
    out.csv("energies.csv", |buf| {
        use std::io::Write;
        writeln!(buf, "delta,energy")?;
        for r in &results {
            writeln!(buf, "{},{}", fmt17(r.delta), fmt17(r.energy))?;
        }
        Ok(())
    })?;
    out.json(
        "perturb.json",
        &PerturbJson {
            unperturbed_energy: base,
            hf_derivative: p.hf_derivative(),
            energies: results
                .iter()
                .map(|r| EnergyRecord {
                    delta: r.delta,
                    energy: r.energy,
                    lambda: r.lambda,
                    residual: r.el_residual,
                })
                .collect(),
            ordered: brackets.iter().all(|b| b.is_ordered()),
            brackets,
        },
    )?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct FroehlichRecord {
    alpha: f64,
    energy: f64,
    residual: f64,
    matvecs: usize,
    density_file: String,
    density_mass: f64,
    density_evenness_defect: f64,
    ansatz: froehlich::AnsatzEnergy,
    #[serde(skip_serializing_if = "Option::is_none")]
    hf_check: Option<froehlich::HfCheck>,
}

#[derive(Debug, Serialize)]
struct FroehlichJson {
    dimension: usize,
    coupling: froehlich::Coupling,
    rows: Vec<FroehlichRecord>,
}

fn run_froehlich(job: &Job, out: &mut Outputs) -> Result<i32> {
    use rayon::prelude::*;
    let v = job.potential()?;
    let cfg = job.fock()?;
    let opts = job.lanczos_opts();
    let u = pekar::minimize(&v, &job.grid()?, &job.pekar_opts())?.minimizer;
    let measure = match job.config.delta_fd {
        Some(_) => Some(job.measure()?),
        None => None,
    };
    let rows = job
        .alphas()?
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| -> Result<(FroehlichRecord, froehlich::DensityProfile)> {
            let h = Hamiltonian::new(alpha, &v, &cfg)?;
            let gs = froehlich::ground_state(&h, &opts)?;
            let rho = froehlich::electron_density(&gs, &cfg);
            let ansatz = froehlich::product_ansatz_energy(&h, &froehlich::electron_orbital(&u, alpha, &cfg)?)?;
            let hf_check = match (&measure, job.config.delta_fd) {
                (Some(w), Some(d)) => Some(froehlich::hf_check(alpha, &v, w, d, &cfg, &opts)?),
                _ => None,
            };
            Ok((
                FroehlichRecord {
                    alpha,
                    energy: gs.energy,
                    residual: gs.residual,
                    matvecs: gs.matvecs,
                    density_file: format!("density_{i:03}.csv"),
                    density_mass: rho.mass(),
                    density_evenness_defect: rho.evenness_defect(),
                    ansatz,
                    hf_check,
                },
                rho,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(rows.len());
    for (rec, rho) in rows {
        out.csv(&rec.density_file, |buf| {
            use std::io::Write;
            writeln!(buf, "x,value")?;
            for (x, r) in rho.nodes.iter().zip(&rho.values) {
                writeln!(buf, "{},{}", fmt17(*x), fmt17(*r))?;
            }
            Ok(())
        })?;
        records.push(rec);
    }
    out.json(
        "froehlich.json",
        &FroehlichJson {
            dimension: cfg.dimension().expect("validated"),
            coupling: cfg.coupling,
            rows: records,
        },
    )?;
    Ok(0)
}

fn run_scan(job: &Job, out: &mut Outputs) -> Result<i32> {
    let report = froehlich::convergence_scan(
        &job.alphas()?,
        &job.potential()?,
        &job.measure()?,
        &job.fock()?,
        &job.grid()?,
        &job.pekar_opts(),
        &job.lanczos_opts(),
    )?;
    out.csv("scan.csv", |buf| froehlich::write_scan_csv(&report, buf))?;
    out.json("scan.json", &report)?;
    Ok(report.rows.iter().filter_map(|r| r.exit_code).max().unwrap_or(0))
}

fn run_budget(job: &Job, action: BudgetAction, out: &mut Outputs) -> Result<i32> {
    let b = job.config.budget.clone().unwrap_or_default();
    let exponents = b.exponents.as_ref().map(ExponentVector::from_spec).transpose()?;
    match action {
        BudgetAction::Optimize => out.json("budget.json", &budget::optimize()?.to_json())?,
        BudgetAction::Orders => {
            let ev = exponents.unwrap_or_else(ExponentVector::published);
            out.json("budget.json", &budget::term_orders(&ev).to_json())?;
        }
        BudgetAction::Sandwich => {
            let ev = match exponents {
                Some(ev) => ev,
                None => budget::optimize()?.report.exponents,
            };
            let c = Constants(b.constants.unwrap_or([1.0; 4]));
            let s = budget::numeric_sandwich(b.alpha.expect("validated"), &ev, &c, b.e_v.expect("validated"))?;
            #[derive(Serialize)]
            struct SandwichJson {
                exponents: ExponentSpec,
                constants: [f64; 4],
                #[serde(flatten)]
                sandwich: budget::Sandwich,
                gap: f64,
            }
            out.json(
                "budget.json",
                &SandwichJson {
                    exponents: ev.to_spec(),
                    constants: c.0,
                    sandwich: s,
                    gap: s.gap(),
                },
            )?;
        }
    }
    Ok(0)
}
