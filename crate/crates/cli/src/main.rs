//! `mazesim`: maze generation, line unfolding, quantum-stochastic-walk runs
//! and sweeps, photonic ensemble propagation, oracle benchmarks and the
//! prebaked experiment recipes.
//!
//! Parameter precedence, lowest to highest: built-in defaults, `--config`
//! file, the global `--seed`/`--threads`/`--out` flags, then per-verb flags.
//! Every CSV carries a `# config_hash=` comment so outputs can be traced
//! back to the exact effective configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mazesim_core::couplings;
use mazesim_core::layout::{self, Layout};
use mazesim_core::maze::{self, GridSpec};
use mazesim_core::oracles::{
    lindblad_chain_profiles, linear_array_profiles, profile_rms_table, LinearArraySpec,
};
use mazesim_core::photonic::{calibrate_p, ensemble_efficiency, PhotonicParams};
use mazesim_core::qsw::{
    build_generator, evolve, pure_state, sweep_p, transfer_efficiency, EfficiencyTrace,
    EvolveOptions, SinkSpec,
};
use mazesim_core::{Result, SimError};
use mazesim_experiments::config::ExperimentConfig;
use mazesim_experiments::recipes::{regenerate, write_bundle, z_samples};
use mazesim_experiments::showcase::{showcase_couplings, showcase_layout};
use mazesim_experiments::table::Table;

#[derive(Parser)]
#[command(name = "mazesim", version, about = "Maze escape by mixed coherent/incoherent walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file; verb flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output path: a file for single-output verbs, a directory for recipes.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Base seed; derived streams use consecutive seeds from here.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Perfect-maze generation.
    #[command(subcommand)]
    Maze(MazeCmd),

    /// Unfold a maze onto a main line with perpendicular tails.
    Unfold {
        /// Maze JSON produced by `maze gen`.
        #[arg(long)]
        maze: PathBuf,
        /// Also export the coupling matrix as coordinate-list CSV.
        #[arg(long, value_name = "FILE")]
        couplings: Option<PathBuf>,
        /// Nearest-neighbour rate for the exported couplings.
        #[arg(long)]
        t_rate: Option<f64>,
        /// Diagonal-neighbour rate as a fraction of the nearest-neighbour one.
        #[arg(long)]
        nnn_ratio: Option<f64>,
        /// Append a sink chain of this many guides to the exported couplings.
        #[arg(long)]
        sink_len: Option<usize>,
    },

    /// Lindblad walk evolution.
    #[command(subcommand)]
    Qsw(QswCmd),

    /// Coupled-mode propagation with segmented detuning noise.
    #[command(subcommand)]
    Photonic(PhotonicCmd),

    /// Closed-form and semi-analytic benchmarks.
    #[command(subcommand)]
    Oracle(OracleCmd),

    /// Prebaked experiment bundles with manifests.
    #[command(subcommand)]
    Recipe(RecipeCmd),
}

#[derive(Subcommand)]
enum MazeCmd {
    /// Generate a perfect maze on a rows x cols grid (default maze.json).
    Gen {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
    },
}

#[derive(Subcommand)]
enum QswCmd {
    /// Evolve one (p, Gamma) pair; emits t,E,trace,min_eig,purity (trace.csv).
    Run {
        /// Coupling matrix CSV (coordinate list, as exported by `unfold`).
        #[arg(long)]
        couplings: PathBuf,
        /// Mixing parameter in [0, 1].
        #[arg(long)]
        p: Option<f64>,
        /// Sink rate Gamma.
        #[arg(long)]
        gamma: Option<f64>,
        /// Evolution time (default 10 x node count).
        #[arg(long)]
        t_end: Option<f64>,
        /// Integration step; 0 picks the stability bound automatically.
        #[arg(long)]
        dt: Option<f64>,
        /// Initially populated node (default 0).
        #[arg(long)]
        start: Option<usize>,
        /// Node the sink drains (default the last node).
        #[arg(long)]
        attach: Option<usize>,
    },

    /// Sweep E over a p grid and Gamma list; emits p,gamma,t_end,E (sweep.csv).
    Sweep {
        #[arg(long)]
        couplings: PathBuf,
        /// Grid as `start:end:step` or a comma list.
        #[arg(long)]
        p_grid: Option<String>,
        /// Comma list of sink rates.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        attach: Option<usize>,
    },
}

#[derive(Subcommand)]
enum PhotonicCmd {
    /// Ensemble of noisy propagations; emits z_mm,mean_E,std_E,n (ensemble.csv).
    Run {
        /// Layout JSON from `unfold`; omitted, the built-in 18-site maze is used.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Nearest-neighbour coupling in 1/mm.
        #[arg(long)]
        kappa: Option<f64>,
        /// Detuning amplitude: delta beta drawn uniformly within this bound.
        #[arg(long)]
        dbeta_max: Option<f64>,
        /// Segment length in mm over which each detuning is held.
        #[arg(long)]
        segment: Option<f64>,
        /// Propagation length in mm; measurement lengths beyond it are dropped.
        #[arg(long)]
        z_end: Option<f64>,
        /// Number of noise realizations.
        #[arg(long)]
        realizations: Option<usize>,
        /// Sink-chain length in guides.
        #[arg(long)]
        sink_len: Option<usize>,
        /// Uniform maze-guide loss in dB per reference length (default lossless).
        #[arg(long)]
        loss_db: Option<f64>,
    },

    /// Fit the Lindblad mixing p that best matches an ensemble CSV.
    Calibrate {
        /// Ensemble CSV from `photonic run` (z_mm and mean_E columns).
        #[arg(long)]
        ensemble: PathBuf,
        /// Candidate p grid (default the calib_p_grid config key).
        #[arg(long)]
        p_grid: Option<String>,
        /// Layout JSON; omitted, the built-in 18-site maze is used.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Sink rate for the Lindblad side (default kappa).
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Noisy linear-array output profiles vs Lindblad chain populations.
    LinearArray {
        /// Comma list of detuning amplitudes.
        #[arg(long)]
        dbeta_list: Option<String>,
        /// Candidate mixing parameters for the Lindblad side.
        #[arg(long)]
        p_grid: Option<String>,
        /// Number of waveguides (odd keeps the excitation centred).
        #[arg(long)]
        count: Option<usize>,
        /// Array length in mm.
        #[arg(long)]
        z_mm: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        realizations: Option<usize>,
    },
}

#[derive(Subcommand)]
enum RecipeCmd {
    /// Escape-efficiency scaling over maze sizes at p = 0, 0.1, 1.
    Fig2 {
        /// Maze JSON replacing the generated ensemble.
        #[arg(long)]
        maze: Option<PathBuf>,
    },
    /// E(p) sweep per maze size with the optimality-window check.
    Psweep {
        #[arg(long)]
        maze: Option<PathBuf>,
    },
    /// 18-site photonic maze: single shots, ensemble and Lindblad overlay.
    Maze18 {
        #[arg(long)]
        maze: Option<PathBuf>,
    },
    /// Loss-overestimation study: lossy vs ideal sink fraction.
    Loss {
        #[arg(long)]
        maze: Option<PathBuf>,
    },
    /// Rerun a manifest and verify the outputs are byte-identical.
    Regen {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_text(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if cfg.threads > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let out = cli.out;

    match cli.command {
        Command::Maze(MazeCmd::Gen { rows, cols }) => {
            if let Some(v) = rows {
                cfg.rows = v;
            }
            if let Some(v) = cols {
                cfg.cols = v;
            }
            let spec = GridSpec { rows: cfg.rows, cols: cfg.cols, seed: cfg.seed };
            let m = maze::generate_maze(spec)?;
            write_out(&out.unwrap_or_else(|| "maze.json".into()), &maze::to_json(&m)?)
        }

        Command::Unfold { maze: maze_path, couplings: coup_out, t_rate, nnn_ratio, sink_len } => {
            if let Some(v) = t_rate {
                cfg.t_rate = v;
            }
            if let Some(v) = nnn_ratio {
                cfg.nnn_ratio = v;
            }
            if let Some(v) = sink_len {
                cfg.sink_len = v;
            }
            cfg.validate()?;
            let m = maze::from_json(&fs::read_to_string(&maze_path)?)?;
            let l = layout::unfold(&m)?;
            write_out(&out.unwrap_or_else(|| "layout.json".into()), &layout::to_json(&l)?)?;
            if let Some(path) = coup_out {
                let block = couplings::layout_to_couplings(&l, cfg.t_rate, cfg.nnn_ratio)?;
                let full = if sink_len.is_some() && cfg.sink_len > 0 {
                    couplings::append_sink_chain(&block, &l, cfg.sink_len, cfg.t_rate)?.0
                } else {
                    block
                };
                write_out(&path, &couplings::to_csv(&full))?;
            }
            Ok(())
        }

        Command::Qsw(QswCmd::Run { couplings: path, p, gamma, t_end, dt, start, attach }) => {
            if let Some(v) = p {
                cfg.p = v;
            }
            if let Some(v) = gamma {
                cfg.gamma = v;
            }
            if let Some(v) = dt {
                cfg.dt = v;
            }
            cfg.validate()?;
            let c = couplings::from_csv(&fs::read_to_string(&path)?)?;
            let n = c.size();
            let t_end = t_end.unwrap_or(10.0 * n as f64);
            let start = start.unwrap_or(0);
            let attach = attach.unwrap_or(n - 1);
            let gen = build_generator(&c, cfg.p, Some(SinkSpec { attach, gamma: cfg.gamma }))?;
            let bound = if gen.max_rate() > 0.0 { 0.1 / gen.max_rate() } else { t_end };
            let h = if cfg.dt > 0.0 { cfg.dt.min(bound) } else { bound };
            let opts = EvolveOptions { diagnostics: true, ..Default::default() };
            let traj = evolve(&gen, &pure_state(gen.dim(), start), t_end, h, &opts)?;
            let eff = transfer_efficiency(&traj)?;
            let mut table = Table::new(&["t", "E", "trace", "min_eig", "purity"]);
            for i in 0..traj.times.len() {
                table.push(vec![
                    traj.times[i],
                    eff.values[i],
                    traj.trace[i],
                    traj.min_eig[i],
                    traj.purity[i],
                ]);
            }
            write_out(&out.unwrap_or_else(|| "trace.csv".into()), &table.to_csv(&cfg.config_hash()))
        }

        Command::Qsw(QswCmd::Sweep { couplings: path, p_grid, gammas, t_end, start, attach }) => {
            if let Some(v) = p_grid {
                cfg.p_grid = v;
            }
            if let Some(v) = gammas {
                cfg.gammas = v;
            }
            cfg.validate()?;
            let c = couplings::from_csv(&fs::read_to_string(&path)?)?;
            let n = c.size();
            let t_end = t_end.unwrap_or(10.0 * n as f64);
            let rows = sweep_p(
                &c,
                attach.unwrap_or(n - 1),
                start.unwrap_or(0),
                &cfg.gammas_values()?,
                &cfg.p_grid_values()?,
                t_end,
            )?;
            let mut table = Table::new(&["p", "gamma", "t_end", "E"]);
            for r in &rows {
                table.push(vec![r.p, r.gamma, r.t_end, r.e]);
            }
            write_out(&out.unwrap_or_else(|| "sweep.csv".into()), &table.to_csv(&cfg.config_hash()))
        }

        Command::Photonic(PhotonicCmd::Run {
            layout: layout_path,
            kappa,
            dbeta_max,
            segment,
            z_end,
            realizations,
            sink_len,
            loss_db,
        }) => {
            if let Some(v) = kappa {
                cfg.kappa = v;
            }
            if let Some(v) = dbeta_max {
                cfg.dbeta_max = v;
            }
            if let Some(v) = segment {
                cfg.segment_mm = v;
            }
            if let Some(v) = z_end {
                cfg.z_end_mm = v;
                // A shorter window prunes measurement lengths outside it;
                // segment boundaries keep the sample grid dense anyway.
                let kept: Vec<String> = cfg
                    .z_grid_values()?
                    .into_iter()
                    .filter(|&z| z <= v + 1e-9)
                    .map(|z| z.to_string())
                    .collect();
                cfg.z_grid_mm = if kept.is_empty() { v.to_string() } else { kept.join(",") };
            }
            if let Some(v) = realizations {
                cfg.realizations = v;
            }
            if let Some(v) = sink_len {
                cfg.sink_len = v;
            }
            cfg.validate()?;
            let (full, sink, l) = load_structure(layout_path.as_deref(), &cfg)?;
            let params = PhotonicParams {
                kappa: cfg.kappa,
                nnn_ratio: cfg.nnn_ratio,
                dbeta_max: cfg.dbeta_max,
                segment_length: cfg.segment_mm,
                sink_length: cfg.sink_len,
                maze_loss_db: loss_db.unwrap_or(0.0),
                reference_length: cfg.loss_ref_mm,
                width: cfg.width()?,
            };
            let zs = z_samples(&cfg)?;
            let ens = ensemble_efficiency(
                &full,
                l.in_node(),
                &sink,
                &params,
                &zs,
                cfg.realizations,
                cfg.seed,
            )?;
            let mut table = Table::new(&["z_mm", "mean_E", "std_E", "n"]);
            for i in 0..ens.zs.len() {
                table.push(vec![ens.zs[i], ens.mean[i], ens.std[i], ens.n as f64]);
            }
            write_out(
                &out.unwrap_or_else(|| "ensemble.csv".into()),
                &table.to_csv(&cfg.config_hash()),
            )
        }

        Command::Photonic(PhotonicCmd::Calibrate {
            ensemble,
            p_grid,
            layout: layout_path,
            gamma,
        }) => {
            if let Some(v) = p_grid {
                cfg.calib_p_grid = v;
            }
            cfg.validate()?;
            let table = Table::from_csv(&fs::read_to_string(&ensemble)?)?;
            let trace =
                EfficiencyTrace { times: table.column("z_mm")?, values: table.column("mean_E")? };
            let l = match layout_path {
                Some(p) => layout::from_json(&fs::read_to_string(&p)?)?,
                None => showcase_layout(),
            };
            let block = couplings::layout_to_couplings(&l, cfg.kappa, cfg.nnn_ratio)?;
            let cal = calibrate_p(
                &trace,
                &block,
                l.out_node(),
                l.in_node(),
                gamma.unwrap_or(cfg.kappa),
                &cfg.calib_p_grid_values()?,
            )?;
            println!("best p = {} (rms residual {:.6})", cal.best_p, cal.residual);
            let doc = serde_json::json!({
                "best_p": cal.best_p,
                "residual": cal.residual,
                "config_hash": cfg.config_hash(),
                "table": cal.table,
            });
            write_out(
                &out.unwrap_or_else(|| "calibration.json".into()),
                &serde_json::to_string_pretty(&doc).map_err(SimError::from)?,
            )
        }

        Command::Oracle(OracleCmd::LinearArray {
            dbeta_list,
            p_grid,
            count,
            z_mm,
            kappa,
            realizations,
        }) => {
            if let Some(v) = dbeta_list {
                cfg.dbeta_list = v;
            }
            if let Some(v) = p_grid {
                cfg.array_p_grid = v;
            }
            if let Some(v) = count {
                cfg.array_count = v;
            }
            if let Some(v) = z_mm {
                cfg.array_z_mm = v;
            }
            if let Some(v) = kappa {
                cfg.array_kappa = v;
            }
            if let Some(v) = realizations {
                cfg.array_realizations = v;
            }
            cfg.validate()?;
            let spec = LinearArraySpec {
                count: cfg.array_count,
                length: cfg.array_z_mm,
                kappa: cfg.array_kappa,
                segment_length: cfg.segment_mm,
                n_realizations: cfg.array_realizations,
                base_seed: cfg.seed,
                width: cfg.width()?,
            };
            let profiles = linear_array_profiles(&spec, &cfg.dbeta_list_values()?)?;
            let lindblad = lindblad_chain_profiles(&spec, &cfg.array_p_grid_values()?)?;
            let hash = cfg.config_hash();

            let mut photonic =
                Table::new(&["waveguide_index", "mean_intensity", "std_intensity", "dbeta_max"]);
            for prof in &profiles {
                for w in 0..spec.count {
                    photonic.push(vec![w as f64, prof.mean[w], prof.std[w], prof.dbeta_max]);
                }
            }
            let mut model =
                Table::new(&["waveguide_index", "mean_intensity", "std_intensity", "p"]);
            for (p, prof) in &lindblad {
                for (w, &v) in prof.iter().enumerate() {
                    model.push(vec![w as f64, v, 0.0, *p]);
                }
            }
            let mut rms = Table::new(&["dbeta_max", "p", "rms"]);
            for (db, p, r) in profile_rms_table(&profiles, &lindblad) {
                rms.push(vec![db, p, r]);
            }

            let base = out.unwrap_or_else(|| "profiles.csv".into());
            write_out(&base, &photonic.to_csv(&hash))?;
            write_out(&sibling(&base, "_lindblad"), &model.to_csv(&hash))?;
            write_out(&sibling(&base, "_rms"), &rms.to_csv(&hash))
        }

        Command::Recipe(cmd) => {
            let (name, maze_path) = match cmd {
                RecipeCmd::Fig2 { maze } => ("fig2", maze),
                RecipeCmd::Psweep { maze } => ("psweep", maze),
                RecipeCmd::Maze18 { maze } => ("maze18", maze),
                RecipeCmd::Loss { maze } => ("loss", maze),
                RecipeCmd::Regen { manifest } => {
                    let report = regenerate(&manifest)?;
                    if report.mismatches.is_empty() {
                        println!("regenerated {} outputs: all byte-identical", report.outputs);
                        return Ok(());
                    }
                    for m in &report.mismatches {
                        eprintln!("mismatch: {m}");
                    }
                    return Err(SimError::Postcondition(format!(
                        "{} of {} outputs differ from the manifest",
                        report.mismatches.len(),
                        report.outputs
                    )));
                }
            };
            cfg.recipe = name.into();
            if let Some(p) = maze_path {
                cfg.maze_file = p.to_string_lossy().into_owned();
            }
            let dir = PathBuf::from(&cfg.out_dir);
            let manifest = write_bundle(&cfg, &dir)?;
            for rec in &manifest.outputs {
                println!("wrote {}", dir.join(&rec.file).display());
            }
            println!("wrote {}", dir.join("manifest.json").display());
            Ok(())
        }
    }
}

/// Maze block plus sink chain: from a layout file, or the built-in
/// 18-site showcase when none is given.
fn load_structure(
    layout_path: Option<&Path>,
    cfg: &ExperimentConfig,
) -> Result<(couplings::CouplingMatrix, Vec<usize>, Layout)> {
    match layout_path {
        Some(path) => {
            let l = layout::from_json(&fs::read_to_string(path)?)?;
            let block = couplings::layout_to_couplings(&l, cfg.kappa, cfg.nnn_ratio)?;
            let (full, sink) = couplings::append_sink_chain(&block, &l, cfg.sink_len, cfg.kappa)?;
            Ok((full, sink, l))
        }
        None => showcase_couplings(cfg.kappa, cfg.nnn_ratio, cfg.sink_len),
    }
}

/// profiles.csv -> profiles_lindblad.csv and friends.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}
