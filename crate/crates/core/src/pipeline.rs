//! End-to-end run: sweep, filter, overlays, reactions and statistics, with
//! every artifact written under one output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::energetics::EnergyReport;
use crate::error::{Error, Result};
use crate::gait::{load_gait_csv, synth_gait, Condition, GaitCycle, Joint, Subject};
use crate::io::{self, parse_f64};
use crate::kinematics::ExoVariant;
use crate::overlay::{apply_overlays, InertiaDelta, MassDelta, OverlayParams};
use crate::pareto::{dominance_filter, front_csv_string, sweep, DesignPoint, Sweep};
use crate::reactions::{newton_euler_reactions, peak_reduction, PeakReduction};
use crate::redundancy::{solve_cycle, MuscleSet, SolverWeights};
use crate::stats::{rmse_per_phase, stats_csv_string, summarize, StatsRow};
use crate::svg;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub variants: Vec<ExoVariant>,
    pub conditions: Vec<Condition>,
    pub out: PathBuf,
    pub overlay: OverlayParams,
    pub weights: SolverWeights,
    /// Measured gait per condition; synthetic when absent.
    pub gait_files: BTreeMap<Condition, PathBuf>,
    pub muscles: Option<PathBuf>,
    pub subject_mass: f64,
    pub subject_height: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            variants: vec![ExoVariant::Mono, ExoVariant::Bi],
            conditions: Condition::ALL.to_vec(),
            out: PathBuf::from("out"),
            overlay: OverlayParams::default(),
            weights: SolverWeights::default(),
            gait_files: BTreeMap::new(),
            muscles: None,
            subject_mass: 75.0,
            subject_height: 1.75,
        }
    }
}

fn parse_list<T>(field: &str, value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).map_err(|e| Error::config(field, e.to_string())))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::config(field, "list is empty"));
    }
    Ok(items)
}

fn parse_array<const N: usize>(field: &str, value: &str) -> Result<[f64; N]> {
    let v = parse_list(field, value, |s| parse_f64(field, s))?;
    v.try_into()
        .map_err(|v: Vec<f64>| Error::config(field, format!("expected {N} values, got {}", v.len())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let entries = io::read_key_values(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_entries(&entries, base)
    }

    /// Builds a config from `key=value` entries. Relative paths resolve
    /// against `base`.
    pub fn from_entries(entries: &BTreeMap<String, String>, base: &Path) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (key, value) in entries {
            let value = value.as_str();
            match key.as_str() {
                "seed" => c.seed = value.parse().map_err(|_| Error::config("seed", format!("not an unsigned integer: {value}")))?,
                "variants" => c.variants = parse_list("variants", value, |s| s.parse())?,
                "conditions" => c.conditions = parse_list("conditions", value, |s| s.parse())?,
                "out" => c.out = resolve(value),
                "regen_eta" => c.overlay.regen_eta = parse_f64(key, value)?,
                "muscle_tendon_eta" => c.overlay.muscle_tendon_eta = parse_f64(key, value)?,
                "beta" => c.overlay.beta = parse_array("beta", value)?,
                "gamma" => c.overlay.gamma = parse_array("gamma", value)?,
                "inertia_effects" => {
                    c.overlay.mass_inertia = value
                        .parse()
                        .map_err(|_| Error::config("inertia_effects", format!("expected true or false, got {value}")))?
                }
                "w_exo" => c.weights.exo = parse_f64(key, value)?,
                "w_r" => c.weights.reserve = parse_f64(key, value)?,
                "gait_noload" => {
                    c.gait_files.insert(Condition::NoLoad, resolve(value));
                }
                "gait_loaded" => {
                    c.gait_files.insert(Condition::Loaded, resolve(value));
                }
                "muscles" => c.muscles = Some(resolve(value)),
                "subject_mass_kg" => c.subject_mass = parse_f64(key, value)?,
                "subject_height_m" => c.subject_height = parse_f64(key, value)?,
                _ => return Err(Error::config(key.clone(), "unknown key")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::config("variants", "list is empty"));
        }
        if self.conditions.is_empty() {
            return Err(Error::config("conditions", "list is empty"));
        }
        self.overlay
            .validate()
            .map_err(|e| if let Error::Domain(m) = e { Error::config("regen_eta", m) } else { e })?;
        if !(self.weights.exo > 0.0 && self.weights.exo.is_finite()) {
            return Err(Error::config("w_exo", "must be positive"));
        }
        if !(self.weights.reserve > 0.0 && self.weights.reserve.is_finite()) {
            return Err(Error::config("w_r", "must be positive"));
        }
        if !(self.subject_mass > 0.0 && self.subject_height > 0.0) {
            return Err(Error::config("subject_mass_kg", "subject mass and height must be positive"));
        }
        for (cond, path) in &self.gait_files {
            if !path.is_file() {
                return Err(Error::config(format!("gait_{cond}"), format!("file not found: {}", path.display())));
            }
        }
        if let Some(p) = &self.muscles {
            if !p.is_file() {
                return Err(Error::config("muscles", format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn subject(&self) -> Subject {
        Subject::from_anthropometry(self.subject_mass, self.subject_height)
    }

    pub fn load_gait(&self, condition: Condition) -> Result<GaitCycle> {
        match self.gait_files.get(&condition) {
            Some(path) => {
                let g = load_gait_csv(path)?;
                if g.condition != condition {
                    return Err(Error::config(
                        format!("gait_{condition}"),
                        format!("file holds {} gait", g.condition),
                    ));
                }
                Ok(g)
            }
            None => Ok(synth_gait(self.seed, condition)),
        }
    }

    pub fn load_muscles(&self) -> Result<MuscleSet> {
        match &self.muscles {
            Some(p) => MuscleSet::load_csv(p),
            None => Ok(MuscleSet::default()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PointEnergy<'a> {
    label: &'a str,
    report: &'a EnergyReport,
    overlay_metabolic_reduction: f64,
    overlay_abs_power: f64,
    mass_delta: MassDelta,
    inertia_delta: InertiaDelta,
    maf: f64,
    on_front: bool,
    on_overlay_front: bool,
}

#[derive(Debug, Clone, Serialize)]
struct SweepEnergy<'a> {
    variant: ExoVariant,
    condition: Condition,
    unassisted: &'a EnergyReport,
    max_residual_nm: f64,
    points: Vec<PointEnergy<'a>>,
    /// Design used for the reaction comparison.
    reaction_design: String,
    reaction_peak_reduction: Vec<PeakReduction>,
}

/// Paths of the files written by [`run_pipeline`], in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub files: Vec<PathBuf>,
}

/// Design with the largest raw metabolic reduction; ties go to the lower power.
fn best_design(points: &[DesignPoint]) -> &DesignPoint {
    points
        .iter()
        .max_by(|a, b| {
            a.metabolic_reduction
                .partial_cmp(&b.metabolic_reduction)
                .unwrap()
                .then(b.abs_power.partial_cmp(&a.abs_power).unwrap())
                .then(b.label.cmp(&a.label))
        })
        .expect("sweep has points")
}

pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let subject = config.subject();
    subject.validate()?;
    let muscles = config.load_muscles()?;
    let gaits: Vec<GaitCycle> = config.conditions.iter().map(|&c| config.load_gait(c)).collect::<Result<_>>()?;

    let mut sweeps: Vec<Sweep> = Vec::new();
    for &variant in &config.variants {
        sweeps.extend(sweep(&gaits, &muscles, variant, &subject, &config.weights)?);
    }

    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let mut files = Vec::new();
    let mut write = |name: &str, contents: &str| -> Result<()> {
        let path = config.out.join(name);
        io::write_string(&path, contents)?;
        files.push(path);
        Ok(())
    };

    let mut grid_raw = Vec::new();
    let mut grid_overlay = Vec::new();
    let mut fronts_raw = Vec::new();
    let mut fronts_overlay = Vec::new();
    let mut energy = Vec::new();
    let mut plot_series = Vec::new();
    let mut reaction_files: Vec<(String, String)> = Vec::new();
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

    for s in &sweeps {
        let raw_front = dominance_filter(&s.points)?;
        let (overlaid, overlay_front) = apply_overlays(&s.points, &subject, &config.overlay)?;
        let gait = &gaits[config.conditions.iter().position(|&c| c == s.condition).unwrap()];

        let best = best_design(&s.points);
        let assisted = solve_cycle(gait, &muscles, Some(&best.design), &config.weights)?;
        let unassisted_reactions = newton_euler_reactions(gait, &subject, Some(&s.unassisted))?;
        let assisted_reactions = newton_euler_reactions(gait, &subject, Some(&assisted))?;
        let peaks = peak_reduction(&assisted_reactions, &unassisted_reactions, &gait.phases()?)?;
        let unassisted_name = format!("reactions_{}_unassisted.csv", s.condition);
        if !reaction_files.iter().any(|(n, _)| *n == unassisted_name) {
            reaction_files.push((unassisted_name, unassisted_reactions.to_table().to_csv_string()));
        }
        reaction_files.push((
            format!("reactions_{}_{}_{}.csv", s.variant, s.condition, best.label),
            assisted_reactions.to_table().to_csv_string(),
        ));

        let raw_labels = raw_front.labels();
        let overlay_labels = overlay_front.labels();
        energy.push(SweepEnergy {
            variant: s.variant,
            condition: s.condition,
            unassisted: &s.unassisted_report,
            max_residual_nm: s.points.iter().map(|p| p.max_residual).fold(s.unassisted.max_residual(), f64::max),
            points: s
                .points
                .iter()
                .zip(&overlaid)
                .map(|(p, o)| PointEnergy {
                    label: &p.label,
                    report: &p.report,
                    overlay_metabolic_reduction: o.point.metabolic_reduction,
                    overlay_abs_power: o.point.abs_power,
                    mass_delta: o.mass_delta,
                    inertia_delta: o.inertia_delta,
                    maf: o.maf,
                    on_front: raw_labels.contains(&p.label.as_str()),
                    on_overlay_front: overlay_labels.contains(&p.label.as_str()),
                })
                .collect(),
            reaction_design: best.label.clone(),
            reaction_peak_reduction: peaks,
        });

        let color = palette[plot_series.len() / 2 % palette.len()].to_string();
        let to_points = |ps: &[DesignPoint]| ps.iter().map(|p| (p.metabolic_reduction, p.abs_power, p.label.clone())).collect();
        plot_series.push(svg::Series {
            name: format!("{} {}", s.variant, s.condition),
            color: color.clone(),
            points: to_points(&raw_front.points),
            connect: true,
        });
        plot_series.push(svg::Series {
            name: format!("{} {} overlay", s.variant, s.condition),
            color,
            points: to_points(&overlay_front.points),
            connect: false,
        });

        grid_raw.extend(s.points.iter().cloned());
        grid_overlay.extend(overlaid.into_iter().map(|o| o.point));
        fronts_raw.extend(raw_front.points);
        fronts_overlay.extend(overlay_front.points);
    }

    write("grid.csv", &front_csv_string(&grid_raw))?;
    write("grid_overlay.csv", &front_csv_string(&grid_overlay))?;
    write("fronts_raw.csv", &front_csv_string(&fronts_raw))?;
    write("fronts.csv", &front_csv_string(&fronts_overlay))?;
    let json = serde_json::to_string_pretty(&energy).map_err(|e| Error::Format(e.to_string()))?;
    write("energy.json", &(json + "\n"))?;
    for (name, contents) in &reaction_files {
        write(name, contents)?;
    }
    write("stats.csv", &stats_csv_string(&assist_statistics(&sweeps, &gaits)?))?;
    write(
        "fronts.svg",
        &svg::scatter("Pareto fronts", "metabolic reduction (%)", "absolute device power (W/kg)", &plot_series),
    )?;
    Ok(PipelineOutput { files })
}

/// Phase-wise comparison of the joint-space assistance of the first two
/// variants, over all 25 grid designs of each condition.
fn assist_statistics(sweeps: &[Sweep], gaits: &[GaitCycle]) -> Result<Vec<StatsRow>> {
    let mut rows = Vec::new();
    for gait in gaits {
        let of_cond: Vec<&Sweep> = sweeps.iter().filter(|s| s.condition == gait.condition).collect();
        let [a, b, ..] = of_cond.as_slice() else {
            continue;
        };
        let phases = gait.phases()?;
        for joint in [Joint::Hip, Joint::Knee] {
            let per_design = a
                .points
                .iter()
                .zip(&b.points)
                .map(|(pa, pb)| {
                    let sa: Vec<f64> = pa.assist_moments.iter().map(|m| m.get(joint.index())).collect();
                    let sb: Vec<f64> = pb.assist_moments.iter().map(|m| m.get(joint.index())).collect();
                    rmse_per_phase(&sa, &sb, &gait.pct, &phases)
                })
                .collect::<Result<Vec<_>>>()?;
            let series = format!("{}_vs_{}_{}_assist_nm", a.variant, b.variant, joint.name());
            for w in summarize(&per_design)? {
                rows.push(StatsRow::new(gait.condition.as_str(), &series, &w));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn unknown_variant_names_field() {
        let err = RunConfig::from_entries(&entries(&[("variants", "mono,tri")]), Path::new(".")).unwrap_err();
        assert_eq!(err.field(), Some("variants"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_entries(&entries(&[("sed", "7")]), Path::new(".")).unwrap_err();
        assert_eq!(err.field(), Some("sed"));
    }

    #[test]
    fn overlay_keys_parse() {
        let c = RunConfig::from_entries(
            &entries(&[("regen_eta", "0.5"), ("beta", "1,2,3,4"), ("gamma", "5, 6, 7"), ("seed", "11")]),
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.overlay.regen_eta, 0.5);
        assert_eq!(c.overlay.beta, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c.overlay.gamma, [5.0, 6.0, 7.0]);
        assert_eq!(c.seed, 11);
        let err = RunConfig::from_entries(&entries(&[("gamma", "1,2")]), Path::new(".")).unwrap_err();
        assert_eq!(err.field(), Some("gamma"));
        let err = RunConfig::from_entries(&entries(&[("regen_eta", "0.9")]), Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_gait_file() {
        let err = RunConfig::from_entries(&entries(&[("gait_noload", "/nonexistent/g.csv")]), Path::new(".")).unwrap_err();
        assert_eq!(err.field(), Some("gait_noload"));
    }
}
