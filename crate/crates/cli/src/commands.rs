//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lsgate::crystal::{lamb_dicke, ModeId};
use lsgate::error_budget::{assemble_budget, d_scatter_error, Provenance};
use lsgate::evolve::{calibrate, staged_error, transient_populations, CalibrationOptions, Channel};
use lsgate::hamiltonian::{Tier, Truncation};
use lsgate::pulse::Segment;
use lsgate::setup::GateSetup;
use lsgate::srb::{
    catalog, clifford_group, fit_srb, gap_benchmark, generate_sequence, run_srb, sequence_seed, LsChannel,
    SrbDataset, SrbNoise, SrbRecord,
};
use lsgate::units::rad_to_hz;
use lsgate::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, LsSource, RunConfig, SrbNoiseKind};
use crate::output::{num, Outputs};
use crate::{Cli, Command, SrbAction, TierArg};

/// A failed run: bad input (exit 2) or a failed computation (exit 1).
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Compute(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Compute(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema(m) | Failure::Compute(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_schema() {
            Failure::Schema(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Self {
        match t {
            TierArg::Sdf => Tier::Sdf,
            TierArg::Lightshift => Tier::LightShift,
            TierArg::Full => Tier::Full,
        }
    }
}

struct Run {
    cfg: RunConfig,
    text: String,
    out: Outputs,
    started: Instant,
}

impl Run {
    fn setup(&self) -> Result<GateSetup, Failure> {
        Ok(GateSetup::new(&self.cfg.setup_params()?)?)
    }

    fn finish(self, command: &str) -> Result<(), Failure> {
        self.out.finish(command, &self.text, self.cfg.seed, self.started.elapsed())
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Schema(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = cli.set.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(o) = &cli.out {
        let v = toml::Value::String(o.display().to_string());
        overrides.push(format!("output_dir={v}"));
    }
    Ok(config::load(&text, &overrides)?)
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Compute(e.to_string()))?;
    }
    let started = Instant::now();
    let cfg = resolve(&cli)?;
    let text = config::to_toml(&cfg);
    if let Command::Config = cli.command {
        print!("{text}");
        return Ok(());
    }
    let out = Outputs::new(&PathBuf::from(&cfg.output_dir))?;
    let mut run = Run { cfg, text, out, started };
    let name = match cli.command {
        Command::Config => unreachable!(),
        Command::Modes => {
            modes(&mut run)?;
            "modes"
        }
        Command::Schedule => {
            schedule(&mut run)?;
            "schedule"
        }
        Command::Simulate => {
            simulate(&mut run)?;
            "simulate"
        }
        Command::Populations => {
            populations(&mut run)?;
            "populations"
        }
        Command::Budget => {
            budget(&mut run)?;
            "budget"
        }
        Command::Srb { action } => match action {
            SrbAction::Generate => {
                srb_generate(&mut run)?;
                "srb-generate"
            }
            SrbAction::Simulate => {
                srb_simulate(&mut run)?;
                "srb-simulate"
            }
            SrbAction::Fit { data } => {
                srb_fit(&mut run, &data)?;
                "srb-fit"
            }
            SrbAction::Gap => {
                srb_gap(&mut run)?;
                "srb-gap"
            }
        },
        Command::Sweep { param, values, grid, simulate } => {
            let mut values = values;
            if let Some(g) = grid {
                values.extend(parse_grid(&g)?);
            }
            sweep(&mut run, &param, &values, simulate.map(Tier::from))?;
            "sweep"
        }
    };
    run.finish(name)
}

#[derive(Serialize)]
struct ModeRow {
    mode: String,
    frequency_hz: f64,
    participation: [f64; 2],
    eta: [f64; 2],
}

#[derive(Serialize)]
struct ModesReport {
    spacing_m: f64,
    delta_k: [f64; 3],
    gate_eta: f64,
    modes: Vec<ModeRow>,
}

fn modes(run: &mut Run) -> Result<(), Failure> {
    let setup = run.setup()?;
    let ld = lamb_dicke(&setup.spectrum, setup.beams.delta_k())?;
    let rows = setup
        .spectrum
        .modes
        .iter()
        .map(|m| {
            Ok(ModeRow {
                mode: m.id().to_string(),
                frequency_hz: rad_to_hz(m.frequency),
                participation: m.participation,
                eta: ld.pair(m.id())?,
            })
        })
        .collect::<lsgate::Result<Vec<_>>>()?;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.mode.clone(),
                num(r.frequency_hz),
                num(r.participation[0]),
                num(r.participation[1]),
                num(r.eta[0]),
                num(r.eta[1]),
            ]
        })
        .collect();
    run.out.csv("modes.csv", &["mode", "frequency_hz", "participation_1", "participation_2", "eta_1", "eta_2"], &csv)?;
    let report = ModesReport { spacing_m: setup.spectrum.spacing(), delta_k: ld.delta_k, gate_eta: ld.gate(), modes: rows };
    run.out.json("modes.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    Ok(())
}

fn schedule(run: &mut Run) -> Result<(), Failure> {
    let setup = run.setup()?;
    let s = &setup.schedule;
    let rows: Vec<Vec<String>> = s
        .segments
        .iter()
        .map(|seg| match *seg {
            Segment::Laser { loop_index, start, duration } => vec![
                "laser".into(),
                loop_index.to_string(),
                num(start),
                num(duration),
                String::new(),
                String::new(),
            ],
            Segment::Microwave { start, duration, rotation } => vec![
                "microwave".into(),
                String::new(),
                num(start),
                num(duration),
                num(rotation.phi),
                num(rotation.theta),
            ],
        })
        .collect();
    run.out.csv("schedule.csv", &["kind", "loop", "start_s", "duration_s", "phi_rad", "theta_rad"], &rows)?;
    run.out.json("schedule.json", s)?;
    println!("{} segments, total {:.3} us, detuning {:.3} kHz", s.segments.len(), s.total_time() * 1e6, rad_to_hz(s.delta) * 1e-3);
    Ok(())
}

fn simulate(run: &mut Run) -> Result<(), Failure> {
    let setup = run.setup()?;
    let tier = run.cfg.simulation.tier;
    let r = staged_error(&setup, tier, &run.cfg.staged_options())?;
    run.out.json("simulate.json", &r)?;
    println!(
        "amplitude {:.9}  stage-1 error {:.4e}  leakage {:.3e}  radial {:.4e}  total {:.4e}",
        r.stage1.amplitude, r.stage1.error, r.stage1.leakage, r.radial_total, r.total
    );
    Ok(())
}

#[derive(Serialize)]
struct ChannelSummary {
    channel: Channel,
    final_value: f64,
    plateau_mean: f64,
}

#[derive(Serialize)]
struct PopulationReport {
    amplitude: f64,
    window_s: f64,
    channels: Vec<ChannelSummary>,
}

fn populations(run: &mut Run) -> Result<(), Failure> {
    let setup = run.setup()?;
    let tier = run.cfg.simulation.tier;
    let target = setup.process.target_phase;
    let gate_only = setup.with_truncation(Truncation::gate_only(setup.truncation.gate));
    let model = gate_only.build(tier)?;
    let seed = gate_only.seed_amplitude(tier, target)?;
    let cal = calibrate(&model, &setup.schedule, target, seed, &CalibrationOptions::default(), setup.propagation())?;

    let channels = run.cfg.channels()?;
    let spectators: Vec<(ModeId, usize)> = channels
        .iter()
        .filter_map(|c| match c {
            Channel::Mode(m) => Some((*m, run.cfg.truncation.spectator)),
            Channel::DStates => None,
        })
        .collect();
    let traced = setup.with_truncation(Truncation { gate: setup.truncation.gate, spectators });
    let model = traced.build(tier)?;
    let tr = transient_populations(
        &model,
        &traced.schedule,
        cal.amplitude,
        &channels,
        &run.cfg.transient_options(),
        traced.propagation(),
    )?;

    let mut header = vec!["time_s".to_string()];
    for c in &tr.channels {
        header.push(format!("{}_raw", c.channel));
        header.push(format!("{}_filtered", c.channel));
    }
    let rows: Vec<Vec<String>> = tr
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut r = vec![num(*t)];
            for c in &tr.channels {
                r.push(num(c.raw[i]));
                r.push(num(c.filtered[i]));
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.out.csv("populations.csv", &header, &rows)?;
    let report = PopulationReport {
        amplitude: cal.amplitude,
        window_s: tr.window,
        channels: tr
            .channels
            .iter()
            .map(|c| ChannelSummary { channel: c.channel, final_value: c.final_value, plateau_mean: c.plateau_mean })
            .collect(),
    };
    run.out.json("populations.json", &report)?;
    for c in &report.channels {
        println!("{:<10} final {:.3e}  plateau {:.3e}", c.channel.to_string(), c.final_value, c.plateau_mean);
    }
    Ok(())
}

fn budget(run: &mut Run) -> Result<(), Failure> {
    let setup = run.setup()?;
    let mut inputs = run.cfg.budget_inputs(setup.scheme.delta);
    if run.cfg.budget.simulate_off_resonant {
        let r = staged_error(&setup, run.cfg.simulation.tier, &run.cfg.staged_options())?;
        inputs.off_resonant = Some(r.total);
        inputs.off_resonant_provenance = Some(Provenance::Simulated);
    }
    let b = assemble_budget(&inputs)?;
    run.out.json("budget.json", &b)?;
    let table = b.table();
    run.out.write("budget.txt", table.as_bytes())?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct CatalogReport<'a> {
    elements: usize,
    mean_ls: f64,
    mean_1q: f64,
    max_ls: usize,
    max_error: f64,
    entries: &'a [lsgate::srb::NativeSequence],
}

fn srb_generate(run: &mut Run) -> Result<(), Failure> {
    let group = clifford_group();
    let cat = catalog();
    run.out.json(
        "catalog.json",
        &CatalogReport {
            elements: group.len(),
            mean_ls: cat.mean_ls(),
            mean_1q: cat.mean_1q(),
            max_ls: cat.max_ls(),
            max_error: cat.max_error(group),
            entries: &cat.entries,
        },
    )?;
    let settings = run.cfg.srb_settings();
    settings.validate()?;
    let mut rows = Vec::new();
    for (i, &l) in settings.lengths.iter().enumerate() {
        for j in 0..settings.sequences {
            let seq = generate_sequence(l, sequence_seed(settings.seed, i, j));
            let elems: Vec<String> = seq.elements.iter().map(|e| e.to_string()).collect();
            rows.push(vec![l.to_string(), seq.seed.to_string(), elems.join(" ")]);
        }
    }
    run.out.csv("sequences.csv", &["length", "seed", "elements"], &rows)?;
    println!(
        "{} Cliffords, {:.3} LS gates and {:.3} rotations per Clifford on average; {} sequences",
        group.len(),
        cat.mean_ls(),
        cat.mean_1q(),
        rows.len()
    );
    Ok(())
}

fn noise(run: &Run) -> Result<SrbNoise, Failure> {
    let s = &run.cfg.srb;
    Ok(match s.noise {
        SrbNoiseKind::Ideal => SrbNoise::Ideal,
        SrbNoiseKind::Clifford => SrbNoise::Clifford { error: s.clifford_error },
        SrbNoiseKind::Native => {
            let ls = match s.ls {
                LsSource::Ideal => LsChannel::Ideal,
                LsSource::Depolarizing => LsChannel::Depolarizing { error: s.ls_error },
                LsSource::Simulated => {
                    let setup = run.setup()?;
                    let r = staged_error(&setup, run.cfg.simulation.tier, &run.cfg.staged_options())?;
                    LsChannel::from_gate(&r.stage1.result, &setup.schedule, setup.process.target_phase)
                }
            };
            SrbNoise::Native { ls, single_qubit_error: s.single_qubit_error }
        }
    })
}

fn dataset_rows(data: &SrbDataset) -> Vec<Vec<String>> {
    data.records
        .iter()
        .map(|r| vec![r.length.to_string(), r.seed.to_string(), r.shots.to_string(), num(r.survival)])
        .collect()
}

const DATA_HEADER: [&str; 4] = ["length", "seed", "shots", "survival"];

fn report_fit(run: &mut Run, data: &SrbDataset) -> Result<(), Failure> {
    let fit = fit_srb(data, &run.cfg.fit_options())?;
    run.out.json("srb_fit.json", &fit)?;
    println!(
        "p {:.6}  Clifford fidelity {:.6}({:.0})  LS fidelity {:.6}({:.0})  counts LS {:.3} 1q {:.3}",
        fit.p,
        fit.clifford_fidelity,
        fit.sigma_clifford_fidelity * 1e6,
        fit.ls_fidelity,
        fit.sigma_ls_fidelity * 1e6,
        fit.n_ls,
        fit.n_1q
    );
    Ok(())
}

fn srb_simulate(run: &mut Run) -> Result<(), Failure> {
    let noise = noise(run)?;
    let data = run_srb(&noise, &run.cfg.srb_settings())?;
    run.out.csv("srb_data.csv", &DATA_HEADER, &dataset_rows(&data))?;
    report_fit(run, &data)
}

fn read_dataset(path: &Path) -> Result<SrbDataset, Failure> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?.clone();
    if header.iter().collect::<Vec<_>>() != DATA_HEADER {
        return Err(Failure::Schema(format!(
            "{}: header must be {}, found {}",
            path.display(),
            DATA_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let records = rdr
        .deserialize::<SrbRecord>()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Failure::Schema(format!("{} row {}: {e}", path.display(), i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    SrbDataset::from_records(records, path.display().to_string()).map_err(|e| Failure::Schema(e.to_string()))
}

fn srb_fit(run: &mut Run, path: &Path) -> Result<(), Failure> {
    let data = read_dataset(path)?;
    report_fit(run, &data)
}

fn srb_gap(run: &mut Run) -> Result<(), Failure> {
    let s = &run.cfg.srb;
    let points = gap_benchmark(s.single_qubit_error, &s.gap_lengths, s.sequences, run.cfg.seed)?;
    let rows: Vec<Vec<String>> =
        points.iter().map(|p| vec![p.length.to_string(), num(p.survival), num(p.rotations)]).collect();
    run.out.csv("gap.csv", &["length", "survival", "rotations"], &rows)?;
    run.out.json("gap.json", &points)?;
    for p in &points {
        println!("length {:>4}  survival {:.5}  rotations {:.2}", p.length, p.survival, p.rotations);
    }
    Ok(())
}

/// `lin:START:STOP:N` or `log:START:STOP:N`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Schema(format!("grid `{spec}` must look like lin:START:STOP:N or log:START:STOP:N"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [kind, a, b, n] = parts[..] else { return Err(bad()) };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    let t = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    match kind {
        "lin" => Ok((0..n).map(|i| a + (b - a) * t(i)).collect()),
        "log" if a > 0.0 && b > 0.0 => Ok((0..n).map(|i| a * (b / a).powf(t(i))).collect()),
        _ => Err(bad()),
    }
}

fn with_value(base: &toml::Table, path: &str, v: f64) -> lsgate::Result<toml::Table> {
    let mut doc = base.clone();
    let value = if v.fract() == 0.0 && v.abs() < 9e15 && is_integer_field(base, path) {
        toml::Value::Integer(v as i64)
    } else {
        toml::Value::Float(v)
    };
    config::set_path(&mut doc, path, value)?;
    Ok(doc)
}

fn is_integer_field(doc: &toml::Table, path: &str) -> bool {
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for k in &keys[..keys.len() - 1] {
        match cur.get(*k).and_then(toml::Value::as_table) {
            Some(t) => cur = t,
            None => return false,
        }
    }
    matches!(cur.get(keys[keys.len() - 1]), Some(toml::Value::Integer(_)))
}

#[derive(Default)]
struct SweepRow {
    phi: Option<f64>,
    omega_hz: Option<f64>,
    eps_scatter_d: Option<f64>,
    gate_error: Option<f64>,
    error: String,
}

fn sweep_point(doc: toml::Table, tier: Option<Tier>) -> lsgate::Result<SweepRow> {
    let cfg = config::from_table(doc)?;
    let setup = GateSetup::new(&cfg.setup_params()?)?;
    let b = &cfg.budget;
    let mut row = SweepRow {
        phi: Some(setup.predicted_phase(Tier::Sdf, 1.0)?),
        omega_hz: Some(rad_to_hz(setup.nominal_omega(Tier::Sdf)?)),
        eps_scatter_d: Some(d_scatter_error(1.0 / b.d_lifetime_s, setup.scheme.delta, cfg.schedule.loops, b.eta)),
        ..SweepRow::default()
    };
    if let Some(t) = tier {
        row.gate_error = Some(staged_error(&setup, t, &cfg.staged_options())?.total);
    }
    Ok(row)
}

fn sweep(run: &mut Run, param: &str, values: &[f64], tier: Option<Tier>) -> Result<(), Failure> {
    let base: toml::Table = run.text.parse().map_err(|e: toml::de::Error| Failure::Compute(e.to_string()))?;
    // The parameter must name a numeric field: probe the schema once.
    let probe = with_value(&base, param, 1.0)?;
    let probe: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(probe)).map_err(|e| {
        Failure::Schema(format!("sweep parameter `{param}` is not a numeric field ({}: {})", e.path(), e.inner().message()))
    })?;
    drop(probe);

    let rows: Vec<Vec<String>> = values
        .par_iter()
        .map(|&v| {
            let r = with_value(&base, param, v).and_then(|doc| sweep_point(doc, tier)).unwrap_or_else(|e| SweepRow {
                error: e.to_string(),
                ..SweepRow::default()
            });
            let f = |x: Option<f64>| x.map(num).unwrap_or_default();
            vec![num(v), f(r.phi), f(r.omega_hz), f(r.eps_scatter_d), f(r.gate_error), r.error]
        })
        .collect();
    run.out.csv("sweep.csv", &["value", "phi_rad", "omega_hz", "eps_scatter_d", "gate_error", "error"], &rows)?;
    let failed = rows.iter().filter(|r| !r[5].is_empty()).count();
    println!("{} points, {} failed", rows.len(), failed);
    Ok(())
}
