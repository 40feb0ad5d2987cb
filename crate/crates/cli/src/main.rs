use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exo_design::energetics::energy_report;
use exo_design::gait::{load_gait_csv, phase_bounds, synth_gait_with_samples, write_gait_csv, DEFAULT_SAMPLES};
use exo_design::io::{self, NumericTable};
use exo_design::overlay::{apply_overlays, OverlayParams};
use exo_design::pareto::{dominance_filter, read_front_csv, sweep, write_front_csv};
use exo_design::pipeline::{run_pipeline, RunConfig, DEFAULT_SEED};
use exo_design::reactions::newton_euler_reactions;
use exo_design::redundancy::solve_cycle;
use exo_design::stats::{rmse_per_phase, write_stats_csv, StatsRow, WindowSummary};
use exo_design::svg;
use exo_design::{Condition, Error, GaitPhase, ExoDesign, ExoVariant, GaitCycle, MuscleSet, Result, SolverWeights, Subject};

/// Multi-criteria design of lower-limb exoskeletons.
#[derive(Parser, Debug)]
#[command(name = "exodesign", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic gait cycle (CSV plus .meta sidecar)
    Synth {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "noload")]
        condition: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve muscle redundancy over one cycle and report energetics
    Solve {
        #[command(flatten)]
        input: GaitInput,
        #[command(flatten)]
        design: DesignArgs,
        /// Energy report (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Per-sample torques and activations (CSV)
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Sweep the 5x5 torque grid and write the grid and its Pareto front
    Pareto {
        #[command(flatten)]
        input: GaitInput,
        #[arg(long, default_value = "mono")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep, then apply regeneration and mass/inertia effects
    Overlay {
        #[command(flatten)]
        input: GaitInput,
        #[arg(long, default_value = "mono")]
        variant: String,
        #[arg(long, default_value_t = 0.0)]
        eta_regen: f64,
        /// Skip the mass and inertia penalties
        #[arg(long)]
        no_inertia: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joint reaction loads (CSV); unassisted without --variant
    Reactions {
        #[command(flatten)]
        input: GaitInput,
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Phase-wise RMSE and peak-to-peak difference of one column in two CSVs
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = 60.0)]
        toe_off: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// SVG scatter of a fronts CSV
    Plot {
        #[arg(long)]
        fronts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full run from a key=value config
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eta_regen: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct GaitInput {
    /// Gait CSV; synthetic gait when absent
    #[arg(long)]
    gait: Option<PathBuf>,
    #[arg(long, default_value = "noload")]
    condition: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Muscle set CSV; bundled set when absent
    #[arg(long)]
    muscles: Option<PathBuf>,
    #[arg(long, default_value_t = 1000.0)]
    w_exo: f64,
    #[arg(long, default_value_t = 1.0)]
    w_r: f64,
}

impl GaitInput {
    fn load(&self) -> Result<(GaitCycle, MuscleSet, SolverWeights)> {
        let gait = match &self.gait {
            Some(p) => load_gait_csv(p)?,
            None => synth_gait_with_samples(self.seed, self.condition.parse()?, DEFAULT_SAMPLES),
        };
        let muscles = match &self.muscles {
            Some(p) => MuscleSet::load_csv(p)?,
            None => MuscleSet::default(),
        };
        if !(self.w_exo > 0.0 && self.w_r > 0.0) {
            return Err(Error::config("w_exo", "weights must be positive"));
        }
        Ok((
            gait,
            muscles,
            SolverWeights {
                exo: self.w_exo,
                reserve: self.w_r,
            },
        ))
    }
}

#[derive(Args, Debug)]
struct DesignArgs {
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, default_value_t = 70.0)]
    hip_peak: f64,
    #[arg(long, default_value_t = 70.0)]
    knee_peak: f64,
    /// Design file (key=value); overrides the three flags above
    #[arg(long)]
    design: Option<PathBuf>,
}

impl DesignArgs {
    fn resolve(&self, subject: &Subject) -> Result<Option<ExoDesign>> {
        let design = match (&self.design, &self.variant) {
            (Some(p), _) => ExoDesign::load(p, subject)?,
            (None, Some(v)) => ExoDesign::new(v.parse()?, self.hip_peak, self.knee_peak, subject),
            (None, None) => return Ok(None),
        };
        design.validate()?;
        Ok(Some(design))
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    io::write_string(path, &(text + "\n"))
}

fn run(cli: Cli) -> Result<()> {
    let subject = Subject::default();
    match cli.command {
        Command::Synth {
            seed,
            condition,
            samples,
            out,
        } => {
            let condition: Condition = condition.parse()?;
            if samples < 3 {
                return Err(Error::config("samples", "need at least 3 samples"));
            }
            write_gait_csv(&synth_gait_with_samples(seed, condition, samples), &out)
        }
        Command::Solve {
            input,
            design,
            out,
            series,
        } => {
            let (gait, muscles, weights) = input.load()?;
            let design = design.resolve(&subject)?;
            let base = solve_cycle(&gait, &muscles, None, &weights)?;
            let base_rate = energy_report(&base, None)?.gross_metabolic_rate;
            let sol = match &design {
                Some(d) => solve_cycle(&gait, &muscles, Some(d), &weights)?,
                None => base,
            };
            write_json(&out, &energy_report(&sol, Some(base_rate))?)?;
            if let Some(path) = series {
                let mut headers = vec!["pct".to_string(), "hip_exo_nm".into(), "knee_exo_nm".into()];
                headers.extend(muscles.groups.iter().map(|g| format!("act_{}", g.name)));
                headers.extend(["hip_reserve_nm", "knee_reserve_nm", "ankle_reserve_nm", "objective", "residual_nm"].map(String::from));
                let rows = (0..sol.len())
                    .map(|k| {
                        let mut row = vec![sol.pct[k], sol.exo_torques[k].hip, sol.exo_torques[k].knee];
                        row.extend(&sol.activations[k]);
                        row.extend(sol.reserves[k]);
                        row.extend([sol.objective[k], sol.residual[k]]);
                        row
                    })
                    .collect();
                NumericTable { headers, rows }.write(&path)?;
            }
            Ok(())
        }
        Command::Pareto { input, variant, out } => {
            let (gait, muscles, weights) = input.load()?;
            let variant: ExoVariant = variant.parse()?;
            let s = sweep(std::slice::from_ref(&gait), &muscles, variant, &subject, &weights)?.remove(0);
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_front_csv(&out.join("grid.csv"), &s.points)?;
            write_front_csv(&out.join("fronts.csv"), &dominance_filter(&s.points)?.points)
        }
        Command::Overlay {
            input,
            variant,
            eta_regen,
            no_inertia,
            out,
        } => {
            let (gait, muscles, weights) = input.load()?;
            let variant: ExoVariant = variant.parse()?;
            let params = OverlayParams {
                regen_eta: eta_regen,
                mass_inertia: !no_inertia,
                ..Default::default()
            };
            params.validate().map_err(|e| Error::config("eta_regen", e.to_string()))?;
            let s = sweep(std::slice::from_ref(&gait), &muscles, variant, &subject, &weights)?.remove(0);
            let (overlaid, front) = apply_overlays(&s.points, &subject, &params)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let grid: Vec<_> = overlaid.iter().map(|o| o.point.clone()).collect();
            write_front_csv(&out.join("grid.csv"), &grid)?;
            write_front_csv(&out.join("fronts.csv"), &front.points)?;
            let maf: Vec<_> = overlaid
                .iter()
                .map(|o| serde_json::json!({"label": o.point.label, "maf_w_kg": o.maf, "mass_delta": o.mass_delta, "inertia_delta": o.inertia_delta}))
                .collect();
            write_json(&out.join("overlay.json"), &maf)
        }
        Command::Reactions { input, design, out } => {
            let (gait, muscles, weights) = input.load()?;
            let design = design.resolve(&subject)?;
            let sol = solve_cycle(&gait, &muscles, design.as_ref(), &weights)?;
            newton_euler_reactions(&gait, &subject, Some(&sol))?.write_csv(&out)
        }
        Command::Stats {
            a,
            b,
            column,
            toe_off,
            out,
        } => {
            let ta = NumericTable::read(&a)?;
            let tb = NumericTable::read(&b)?;
            let pct = ta.column("pct")?;
            if tb.column("pct")? != pct {
                return Err(Error::Data {
                    row: 0,
                    message: "the two files use different pct grids".into(),
                });
            }
            let phases = phase_bounds(toe_off).map_err(|e| Error::config("toe_off", e.to_string()))?;
            let stats = rmse_per_phase(&ta.column(&column)?, &tb.column(&column)?, &pct, &phases)?;
            let mut rows = vec![StatsRow::new("", &column, &WindowSummary::single("whole_cycle", &stats.whole))];
            for (w, phase) in stats.phases.iter().zip(GaitPhase::ALL) {
                rows.push(StatsRow::new("", &column, &WindowSummary::single(phase.name(), w)));
            }
            write_stats_csv(&out, &rows)
        }
        Command::Plot { fronts, out } => {
            let rows = read_front_csv(&fronts)?;
            let mut groups: Vec<(String, Vec<(f64, f64, String)>)> = Vec::new();
            for r in rows {
                let key = format!("{} {}", r.variant, r.condition);
                let point = (r.metabolic_reduction_pct, r.abs_power_w_kg, r.label);
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, pts)) => pts.push(point),
                    None => groups.push((key, vec![point])),
                }
            }
            let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
            let series: Vec<svg::Series> = groups
                .into_iter()
                .enumerate()
                .map(|(i, (name, points))| svg::Series {
                    name,
                    color: palette[i % palette.len()].into(),
                    points,
                    connect: true,
                })
                .collect();
            io::write_string(
                &out,
                &svg::scatter("Pareto fronts", "metabolic reduction (%)", "absolute device power (W/kg)", &series),
            )
        }
        Command::Pipeline {
            config,
            out,
            seed,
            eta_regen,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(eta) = eta_regen {
                cfg.overlay.regen_eta = eta;
            }
            cfg.validate()?;
            let result = run_pipeline(&cfg);
            if let Err(e) = &result {
                // Best effort: the output directory may be the thing that failed.
                let _ = std::fs::create_dir_all(&cfg.out).and_then(|_| {
                    std::fs::write(cfg.out.join("error.json"), serde_json::to_string_pretty(&e.to_json()).unwrap_or_default())
                });
            }
            result.map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
