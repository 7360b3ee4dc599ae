//! `modlab` command line: TOML config in, CSV/JSON out.

pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use modlab_harness::{
    dispersion_check, emit_csv, emit_manifest, envelope_sup, grids_for, modulation_identity_check, norm_growth_experiment, packet_set,
    remainder_sweep, HarnessError, Manifest, SweepConfig, Table,
};
use modlab_nls::{mass, run_nls, NlsError, NlsParams};
use modlab_packet::{write_dump, PacketError, PacketParams};
use modlab_progenitor::{calibrated_omega, ProgenitorError};
use modlab_spectral::{Grid, Transform};
use thiserror::Error;

pub use config::{parse_config, ConfigError, OmegaMode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "modlab", version, about = "Modulated wave packet experiments")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[output].dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads per sweep. MODLAB_THREADS wins when set.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Envelope equation alone: mass and amplitude trace, state dump.
    NlsRun,
    /// Corrector hierarchy at `[packet].epsilon`: dump and residual trace.
    PacketBuild,
    /// One progenitor run at `[packet].epsilon`: trace and penalty ledger.
    ProgenitorRun,
    /// Remainder sup norms over `[sweep].epsilons`, with fits.
    SweepRemainder,
    /// Carrier frequency and group velocity.
    CheckDispersion {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Packet pairing against the envelope prediction.
    CheckIdentity,
    /// H^s norm and growth functional of the envelope.
    GrowthTrack,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::NlsRun => "nls-run",
            Command::PacketBuild => "packet-build",
            Command::ProgenitorRun => "progenitor-run",
            Command::SweepRemainder => "sweep-remainder",
            Command::CheckDispersion { .. } => "check-dispersion",
            Command::CheckIdentity => "check-identity",
            Command::GrowthTrack => "growth-track",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {msg}")]
    Write { path: PathBuf, msg: String },
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Nls(#[from] NlsError),
    #[error(transparent)]
    Progenitor(#[from] ProgenitorError),
}

fn progenitor_code(e: &ProgenitorError) -> i32 {
    match e {
        ProgenitorError::PenaltyScaleInvalid(_) | ProgenitorError::BadParam(_) | ProgenitorError::DomainError(_) => 2,
        ProgenitorError::BlowupPenalty { .. } => 3,
        ProgenitorError::NoConvergence { .. } => 4,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Usage(_) => 64,
            CliError::Progenitor(e) => progenitor_code(e),
            CliError::Harness(HarnessError::Progenitor { source, .. }) => progenitor_code(source),
            CliError::Harness(HarnessError::BadConfig(_)) => 2,
            CliError::Harness(HarnessError::Packet(PacketError::BadParam(_))) | CliError::Packet(PacketError::BadParam(_)) => 2,
            _ => 1,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    eprintln!("{}", msg.lines().next().unwrap_or("usage error"));
                    64
                }
            };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    Ok(parse_config(&text)?)
}

fn threads(cli: &Cli) -> Result<Option<usize>, CliError> {
    match std::env::var("MODLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::Validation(format!("MODLAB_THREADS = {v:?} is not a positive integer")).into()),
        },
        Err(_) => match cli.threads {
            Some(0) => Err(CliError::Usage("--threads must be positive".into())),
            t => Ok(t),
        },
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Ctx<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.cli.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn csv(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        if self.cfg.output.wants("csv") {
            let p = self.out.join(name);
            emit_csv(t, &p)?;
            self.manifest.outputs.push(name.into());
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        if self.cfg.output.wants("json") {
            self.manifest.outputs.push("manifest.json".into());
            emit_manifest(&self.manifest, &self.out.join("manifest.json"))?;
        }
        self.say(format!("outputs in {}", self.out.display()));
        Ok(())
    }

    /// Sweep settings with threads and `omega` resolved.
    fn sweep(&self, epsilons: Vec<f64>) -> Result<SweepConfig, CliError> {
        let mut sc = self.cfg.sweep_config(epsilons);
        sc.threads = threads(self.cli)?;
        if self.cfg.progenitor.omega_mode == OmegaMode::Calibrated {
            let e0 = sc.epsilons[0];
            let u = envelope_sup(&sc, e0)?;
            let w = calibrated_omega(self.cfg.progenitor.c_const, sc.p, sc.horizon_t, u, sc.q)?;
            self.say(format!("calibrated omega = {w:.6} (sup |A| = {u:.6})"));
            sc.omega = Some(w);
        }
        sc.validate()?;
        Ok(sc)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Command::CheckDispersion { k, p } = cli.command {
        let cfg = match &cli.config {
            Some(_) => Some(load(cli)?),
            None => None,
        };
        let k = k.or(cfg.as_ref().map(|c| c.packet.k)).unwrap_or(1.0);
        let p = p.or(cfg.as_ref().map(|c| c.packet.p)).unwrap_or(1.0);
        let rep = dispersion_check(k, p, 1.0)?;
        println!("k = {k}, p = {p}: omega = {}, omega' = {}", rep.omega, rep.omega_p);
        if !cli.quiet {
            println!("carrier phase relative error {:.3e}", rep.phase_rel);
        }
        return Ok(());
    }
    let cfg = load(cli)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let manifest = Manifest::new(cli.command.name(), &cfg)?;
    let mut cx = Ctx { cli, cfg, out, manifest };
    let clock = Instant::now();
    match cli.command {
        Command::NlsRun => nls_run(&mut cx)?,
        Command::PacketBuild => packet_build(&mut cx)?,
        Command::ProgenitorRun => {
            let sc = cx.sweep(vec![cx.cfg.packet.epsilon])?;
            sweep_outputs(&mut cx, &sc)?
        }
        Command::SweepRemainder => {
            let sc = cx.sweep(cx.cfg.sweep.epsilons.clone())?;
            sweep_outputs(&mut cx, &sc)?
        }
        Command::CheckIdentity => {
            let sc = cx.sweep(cx.cfg.sweep.epsilons.clone())?;
            let o = modulation_identity_check(&sc)?;
            for (e, r) in o.epsilons.windows(2).zip(&o.halving_ratios) {
                cx.say(format!("eps {} -> {}: difference ratio per halving {r:.3}", e[0], e[1]));
            }
            cx.csv("identity.csv", &o.table())?;
        }
        Command::GrowthTrack => {
            let o = norm_growth_experiment(&cx.cfg.growth_config())?;
            cx.say(format!("max relative change of the H^s norm {:.3e}", o.max_rel_change));
            if let Some(f) = &o.fit {
                cx.say(format!("log-log slope against 1+T {:.4}", f.slope));
            }
            cx.csv("growth.csv", &o.trace)?;
        }
        Command::CheckDispersion { .. } => unreachable!(),
    }
    cx.manifest.time("total", clock.elapsed());
    cx.finish()
}

fn nls_run(cx: &mut Ctx) -> Result<(), CliError> {
    let (g, pk, nc) = (&cx.cfg.grid, &cx.cfg.packet, &cx.cfg.nls);
    let grid = Grid::new(g.nx, g.ny, g.lx, g.ly).map_err(HarnessError::from)?;
    let mut prm = NlsParams::new(pk.p, pk.q, pk.s, pk.k, grid)?.with_dt(nc.dt)?.with_t1(pk.t1)?;
    if !nc.nonlinear {
        prm.cnl = 0.0;
    }
    let steps = (nc.t_end / prm.dt - 1e-12).ceil().max(1.0) as usize;
    let every = (steps / nc.samples.max(1)).max(1);
    let a0 = cx.cfg.sweep.profile.sample(grid);
    let traj = run_nls(&a0, prm, nc.t_end, every)?;
    let tr = Transform::for_grid(&grid);
    let mut t = Table::new(&["t", "mass", "max_abs"]);
    for s in &traj.states {
        t.push(vec![s.t, mass(&s.a, &tr), s.a.max_abs()]);
    }
    let m = t.column("mass").expect("column");
    let drift = m.iter().map(|v| (v - m[0]).abs() / m[0]).fold(0.0, f64::max);
    cx.say(format!("{} states to T = {}, relative mass drift {drift:.3e}", traj.states.len(), nc.t_end));
    cx.csv("nls_trace.csv", &t)?;
    let recs: Vec<_> = traj.states.iter().map(|s| (s.t, vec![s.a.clone()])).collect();
    write_to(cx, "nls_states.bin", |p| write_dump(p, &grid, &recs))
}

fn write_to(cx: &mut Ctx, name: &str, f: impl FnOnce(&Path) -> Result<(), PacketError>) -> Result<(), CliError> {
    std::fs::create_dir_all(&cx.out).map_err(|e| CliError::Write { path: cx.out.clone(), msg: e.to_string() })?;
    f(&cx.out.join(name))?;
    cx.manifest.outputs.push(name.into());
    Ok(())
}

fn packet_build(cx: &mut Ctx) -> Result<(), CliError> {
    let eps = cx.cfg.packet.epsilon;
    let sc = cx.sweep(vec![eps])?;
    let (slow, fast) = grids_for(&sc, eps)?;
    let mut pp = PacketParams::new(eps, sc.k, sc.p, sc.q, sc.s, sc.nu, sc.depth, slow, fast)?.with_dt(sc.dt)?;
    if !sc.nonlinear {
        pp = pp.with_c_omega(0.0);
    }
    let clock = Instant::now();
    let set = packet_set(&pp, &sc.profile, sc.horizon_t)?;
    cx.manifest.time("build", clock.elapsed());
    cx.say(format!("depth {} correctors to T = {} ({} checkpoints)", sc.depth, sc.horizon_t, set.states.len()));
    let horizon = sc.horizon_t / (eps * eps);
    let n = sc.samples.max(1);
    let mut t = Table::new(&["t", "residual_l2"]);
    for i in 0..=n {
        let ti = horizon * i as f64 / n as f64;
        t.push(vec![ti, set.residual_norm(ti)?]);
    }
    let sup = t.column("residual_l2").expect("column").into_iter().fold(0.0, f64::max);
    cx.say(format!("sup residual {sup:.3e}"));
    cx.csv("residual.csv", &t)?;
    write_to(cx, "correctors.bin", |p| set.dump(p))
}

fn sweep_outputs(cx: &mut Ctx, sc: &SweepConfig) -> Result<(), CliError> {
    let clock = Instant::now();
    let o = remainder_sweep(sc)?;
    cx.manifest.time("sweep", clock.elapsed());
    for r in &o.runs {
        let s = r.sup();
        cx.say(format!(
            "eps {}: sup r {:.3e}, r_t {:.3e}, r_tt {:.3e}, max lambda {:.4} ({:.1} s)",
            r.eps,
            s.sup_r_hse,
            s.sup_rt_hse,
            s.sup_rtt_hse,
            r.max_lambda(),
            r.seconds
        ));
    }
    if let Some(f) = &o.fits {
        cx.say(format!("slopes r {:.3}, r_t {:.3}, r_tt {:.3}", f[0].slope, f[1].slope, f[2].slope));
    }
    cx.csv("sweep.csv", &o.sup_table())?;
    if o.fits.is_some() {
        cx.csv("fits.csv", &o.fits_table())?;
    }
    for r in &o.runs {
        cx.csv(&format!("trace_eps{}.csv", r.eps), &r.trace_table())?;
        if cx.cfg.output.wants("csv") {
            let name = format!("ledger_eps{}.csv", r.eps);
            let path = cx.out.join(&name);
            r.ledger.write_csv(&path).map_err(|e| CliError::Write { path: path.clone(), msg: e.to_string() })?;
            cx.manifest.outputs.push(name);
        }
    }
    Ok(())
}
