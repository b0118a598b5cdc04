use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig, PhysicsConfig};
use super::output::{heatmap, line_plot, Cell, Plot, Results, Series, Table};
use super::stats::{median, pooled_std, StatSummary};
use crate::center::{default_schedule, frame_start, locate_center_from, CenterEstimate, QualityMap, ScanStage, Scene};
use crate::error::{Error, Result};
use crate::genome::SlmGenome;
use crate::grid::{expand_genome, parity_decompose, Center, PhaseScreen, ZernikeKind};
use crate::optim::{evolve, CoincidenceObjective, Feedback, GaConfig, Mode, Objective, RateModel, RunOutcome};
use crate::physics::{
    contrast, emccd_capture, make_diffuser, rate_full, single_rate, CorrelationMap, DetectionModel, TwinPhotonModel,
};
use crate::rng::Stream;

/// One pass/fail property of an experiment's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Summary of one optimizer mode under one condition.
#[derive(Debug, Clone)]
pub struct ModeResult {
    pub mode: &'static str,
    pub finals: StatSummary,
    /// Mean best enhancement per generation across runs.
    pub curve: Vec<f64>,
    pub runs: Vec<RunOutcome>,
}

impl ModeResult {
    /// Run with the largest final enhancement (first on ties).
    pub fn best_run(&self) -> &RunOutcome {
        let mut best = &self.runs[0];
        for r in &self.runs[1..] {
            if r.trace.final_enhancement > best.trace.final_enhancement {
                best = r;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapContrast {
    pub label: &'static str,
    /// NaN when the background has no spread.
    pub contrast: f64,
    pub peak: (isize, isize),
}

#[derive(Debug, Clone)]
pub struct Fig3Outcome {
    pub ga: ModeResult,
    pub sga: ModeResult,
    /// First generation (1-based) at which the sGA mean curve reaches the
    /// GA's final-generation mean.
    pub catch_up_generation: Option<usize>,
    /// Flat, GA-best and sGA-best maps, in that order.
    pub contrasts: Vec<MapContrast>,
}

#[derive(Debug, Clone)]
pub struct ConditionSweep {
    /// Integration times or center shifts.
    pub conditions: Vec<f64>,
    pub ga: Vec<StatSummary>,
    pub sga: Vec<StatSummary>,
}

#[derive(Debug, Clone)]
pub struct AppendixBOutcome {
    pub ga: ModeResult,
    pub sga: ModeResult,
    pub single_on_axis: f64,
    pub single_displaced: f64,
    /// Mean in-beam odd-part energy of each mode's best phases.
    pub ga_odd_energy: f64,
    pub sga_odd_energy: f64,
}

#[derive(Debug, Clone)]
pub struct CenterScanOutcome {
    pub truth: Center,
    pub exact: Center,
    pub estimates: Vec<Center>,
    pub median_abs_error: (f64, f64),
    pub stages: usize,
    pub last_step: i64,
}

#[derive(Debug, Clone)]
pub struct CustomOutcome {
    pub modes: Vec<ModeResult>,
    pub contrasts: Vec<MapContrast>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Fig3(Fig3Outcome),
    Fig4(ConditionSweep),
    AppendixA(ConditionSweep),
    AppendixB(AppendixBOutcome),
    CenterScan(CenterScanOutcome),
    Custom(CustomOutcome),
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

impl Outcome {
    /// The properties `--assert` enforces.
    pub fn checks(&self) -> Vec<Check> {
        match self {
            Outcome::Fig3(o) => {
                let (g, s) = (o.ga.finals.mean, o.sga.finals.mean);
                let mut out = vec![
                    Check::new("sga_gain", s >= 1.10 * g, format!("sGA {s:.3} vs GA {g:.3} (ratio {:.3}, need >= 1.10)", s / g)),
                    Check::new(
                        "sga_catch_up",
                        o.catch_up_generation.is_some_and(|c| c <= 50),
                        format!("sGA reaches GA's final mean at generation {:?} (need <= 50)", o.catch_up_generation),
                    ),
                ];
                if let [flat, _, sga] = o.contrasts.as_slice() {
                    out.push(Check::new(
                        "emccd_contrast",
                        sga.contrast >= 3.0 * flat.contrast && sga.peak == (0, 0),
                        format!(
                            "sGA-best contrast {:.3} vs flat {:.3} (need >= 3x), peak {:?}",
                            sga.contrast, flat.contrast, sga.peak
                        ),
                    ));
                }
                out
            }
            Outcome::Fig4(o) => {
                let mean = |v: &[StatSummary]| v.iter().map(|s| s.mean).collect::<Vec<_>>();
                let std = |v: &[StatSummary]| v.iter().map(|s| s.std).collect::<Vec<_>>();
                let mut out = Vec::new();
                for (name, v) in [("sga", &o.sga), ("ga", &o.ga)] {
                    out.push(Check::new(
                        &format!("{name}_mean_increases"),
                        strictly_increasing(&mean(v)),
                        format!("means {} over t_int {}", fmt_list(&mean(v)), fmt_list(&o.conditions)),
                    ));
                    out.push(Check::new(
                        &format!("{name}_std_non_increasing"),
                        non_increasing(&std(v)),
                        format!("stds {}", fmt_list(&std(v))),
                    ));
                }
                out
            }
            Outcome::AppendixA(o) => {
                let sga: Vec<f64> = o.sga.iter().map(|s| s.mean).collect();
                let ga: Vec<f64> = o.ga.iter().map(|s| s.mean).collect();
                let mut out = vec![Check::new("sga_non_increasing", non_increasing(&sga), format!("sGA means {}", fmt_list(&sga)))];
                if sga.len() > 1 {
                    let (first, last) = (sga[0], sga[sga.len() - 1]);
                    out.push(Check::new(
                        "sga_degradation",
                        last <= 0.8 * first,
                        format!("last/first = {:.3} (need <= 0.80)", last / first),
                    ));
                }
                let spread = ga.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ga.iter().cloned().fold(f64::INFINITY, f64::min);
                let pooled = pooled_std(&o.ga);
                out.push(Check::new(
                    "ga_insensitive",
                    spread <= pooled,
                    format!("GA means {} spread {spread:.3} vs pooled std {pooled:.3}", fmt_list(&ga)),
                ));
                out
            }
            Outcome::AppendixB(o) => {
                let diff = (o.ga.finals.mean - o.sga.finals.mean).abs();
                let pooled = pooled_std(&[o.ga.finals, o.sga.finals]);
                vec![
                    Check::new(
                        "similar_performance",
                        diff <= pooled,
                        format!("|GA - sGA| = {diff:.3} vs pooled std {pooled:.3}"),
                    ),
                    Check::new(
                        "ga_odd_energy",
                        o.ga_odd_energy > o.sga_odd_energy,
                        format!("odd energy GA {:.3} vs sGA {:.3}", o.ga_odd_energy, o.sga_odd_energy),
                    ),
                    Check::new(
                        "single_rate_drops",
                        o.single_displaced < o.single_on_axis,
                        format!("singles displaced {:.4} vs on axis {:.4}", o.single_displaced, o.single_on_axis),
                    ),
                ]
            }
            Outcome::CenterScan(o) => {
                let err = (o.exact.cx - o.truth.cx, o.exact.cy - o.truth.cy);
                if o.stages == 4 {
                    vec![
                        Check::new("exact_recovery", err == (0.0, 0.0), format!("noiseless estimate off by {err:?}")),
                        Check::new(
                            "noisy_median_error",
                            o.median_abs_error.0 <= 2.0 && o.median_abs_error.1 <= 2.0,
                            format!("median |error| {:?} px (need <= 2 per axis)", o.median_abs_error),
                        ),
                    ]
                } else {
                    let step = o.last_step as f64;
                    vec![Check::new(
                        "within_last_step",
                        err.0.abs() <= step && err.1.abs() <= step,
                        format!("noiseless estimate off by {err:?}, last step {step}"),
                    )]
                }
            }
            Outcome::Custom(_) => Vec::new(),
        }
    }
}

/// Result of [`run_experiment`]: whatever was produced, plus the outcome
/// or the error that stopped the run.
pub struct Execution {
    pub results: Results,
    pub outcome: Result<Outcome>,
}

/// Run the configured experiment. Tables and plots produced before a
/// failure are kept in `results`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Execution {
    let mut results = Results::default();
    let outcome = match cfg.validate() {
        Err(e) => Err(e),
        Ok(()) => match cfg.experiment {
            Experiment::Fig3 => run_fig3(cfg, &mut results).map(Outcome::Fig3),
            Experiment::Fig4 => run_fig4(cfg, &mut results).map(Outcome::Fig4),
            Experiment::AppendixA => run_appendix_a(cfg, &mut results).map(Outcome::AppendixA),
            Experiment::AppendixB => run_appendix_b(cfg, &mut results).map(Outcome::AppendixB),
            Experiment::CenterScan => run_center_scan(cfg, &mut results).map(Outcome::CenterScan),
            Experiment::Custom => run_custom(cfg, &mut results).map(Outcome::Custom),
        },
    };
    Execution { results, outcome }
}

fn root(cfg: &ExperimentConfig) -> Stream {
    Stream::root(cfg.seeds.master).label(cfg.experiment.name())
}

fn objective(physics: &PhysicsConfig, det: DetectionModel, rate: RateModel, feedback: Feedback) -> Result<CoincidenceObjective> {
    let model = physics.model()?;
    let diffuser = make_diffuser(&model, &physics.diffuser.spec()?);
    CoincidenceObjective::new(model, diffuser, det, rate, feedback)
}

/// Per-run, per-generation and summary tables shared by the optimizer experiments.
struct RunTables {
    condition: Option<&'static str>,
    traces: Table,
    finals: Table,
    curves: Table,
    summary: Table,
}

impl RunTables {
    fn new(condition: Option<(&'static str, &'static str)>) -> Self {
        let with = |cols: &[(&'static str, &'static str)]| -> Vec<(&'static str, &'static str)> {
            condition.into_iter().chain(cols.iter().copied()).collect()
        };
        RunTables {
            condition: condition.map(|c| c.0),
            traces: Table::new(
                "traces",
                "best individual of every generation of every run",
                &with(&[
                    ("mode", "ga or sga"),
                    ("run", "run index"),
                    ("generation", "generation number, 1-based"),
                    ("best_counts", "coincidence counts of the best individual over one t_int"),
                    ("best_enhancement", "best_counts divided by the run's flat baseline"),
                    ("genome_hash", "SHA-256 of the best phenotype"),
                ]),
            ),
            finals: Table::new(
                "finals",
                "final enhancement of every run, measured over t_final",
                &with(&[
                    ("mode", "ga or sga"),
                    ("run", "run index"),
                    ("final_enhancement", "best-genome counts over flat counts, both over t_final"),
                    ("flat_baseline_counts", "flat-SLM counts scaled to one t_int"),
                    ("stream_key", "hex key of the run's random stream"),
                ]),
            ),
            curves: Table::new(
                "curve_summary",
                "per-generation mean and across-run std of best_enhancement",
                &with(&[
                    ("mode", "ga or sga"),
                    ("generation", "generation number, 1-based"),
                    ("mean", "mean best_enhancement across runs"),
                    ("std", "sample std across runs"),
                    ("runs", "number of runs"),
                ]),
            ),
            summary: Table::new(
                "summary",
                "final enhancement statistics per mode and condition",
                &with(&[
                    ("mode", "ga or sga"),
                    ("mean", "mean final_enhancement"),
                    ("std", "sample std of final_enhancement across runs"),
                    ("runs", "number of runs"),
                ]),
            ),
        }
    }

    fn row(&self, condition: Option<f64>, rest: Vec<Cell>) -> Vec<Cell> {
        match (self.condition, condition) {
            (Some(_), Some(v)) => std::iter::once(Cell::Real(v)).chain(rest).collect(),
            _ => rest,
        }
    }

    fn add(&mut self, condition: Option<f64>, mode: &'static str, runs: Vec<(u64, RunOutcome)>) -> ModeResult {
        for (r, (key, o)) in runs.iter().enumerate() {
            for (g, rec) in o.trace.records.iter().enumerate() {
                let row = self.row(
                    condition,
                    vec![
                        mode.into(),
                        r.into(),
                        (g + 1).into(),
                        rec.best_counts.into(),
                        rec.best_enhancement.into(),
                        rec.genome_hash.clone().into(),
                    ],
                );
                self.traces.push(row);
            }
            let row = self.row(
                condition,
                vec![
                    mode.into(),
                    r.into(),
                    o.trace.final_enhancement.into(),
                    o.trace.flat_baseline_counts.into(),
                    format!("{key:016x}").into(),
                ],
            );
            self.finals.push(row);
        }
        let generations = runs.iter().map(|(_, o)| o.trace.records.len()).min().unwrap_or(0);
        let mut curve = Vec::with_capacity(generations);
        for g in 0..generations {
            let values: Vec<f64> = runs.iter().map(|(_, o)| o.trace.records[g].best_enhancement).collect();
            let s = StatSummary::of(&values);
            curve.push(s.mean);
            let row = self.row(condition, vec![mode.into(), (g + 1).into(), s.mean.into(), s.std.into(), s.runs.into()]);
            self.curves.push(row);
        }
        let finals: Vec<f64> = runs.iter().map(|(_, o)| o.trace.final_enhancement).collect();
        let s = StatSummary::of(&finals);
        let row = self.row(condition, vec![mode.into(), s.mean.into(), s.std.into(), s.runs.into()]);
        self.summary.push(row);
        ModeResult {
            mode,
            finals: s,
            curve,
            runs: runs.into_iter().map(|(_, o)| o).collect(),
        }
    }

    fn finish(self, results: &mut Results) {
        results.tables.extend([self.traces, self.finals, self.curves, self.summary]);
    }
}

/// `runs` independent optimizations; run `r` draws from `base.index(r)`.
fn run_mode(
    cfg: &GaConfig,
    mode: Mode,
    objective: &dyn Objective,
    base: Stream,
    label: &str,
    results: &mut Results,
) -> Result<Vec<(u64, RunOutcome)>> {
    let outcomes = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            let s = base.index(r as u64);
            evolve(cfg, mode, objective, s).map(|o| (s.key(), o))
        })
        .collect::<Result<Vec<_>>>()?;
    for (r, (key, _)) in outcomes.iter().enumerate() {
        results.run_seeds.push((format!("{label}/run{r}"), *key));
    }
    Ok(outcomes)
}

fn curve_series(label: String, m: &ModeResult) -> Series {
    let generations = m.curve.len();
    let band = (0..generations)
        .map(|g| {
            let v: Vec<f64> = m.runs.iter().map(|o| o.trace.records[g].best_enhancement).collect();
            StatSummary::of(&v).std
        })
        .collect();
    Series {
        label,
        x: (1..=generations).map(|g| g as f64).collect(),
        y: m.curve.clone(),
        band: Some(band),
    }
}

fn trace_plot(name: &str, title: &str, series: Vec<Series>) -> Plot {
    Plot {
        name: name.to_string(),
        svg: line_plot(title, "generation", "enhancement", &series, false),
    }
}

/// EMCCD maps for the flat SLM and for each given genome; tables, heatmaps
/// and contrasts are appended to `results`.
fn emccd_maps(
    cfg: &ExperimentConfig,
    objective: &CoincidenceObjective,
    genomes: &[(&'static str, &SlmGenome)],
    results: &mut Results,
) -> Result<Vec<MapContrast>> {
    let model = objective.model();
    let spec = cfg.emccd.spec(model)?;
    let stream = root(cfg).label("emccd");
    let flat = PhaseScreen::from_fn(*model.spec(), |_, _| 0.0);
    let mut screens: Vec<(&'static str, PhaseScreen)> = vec![("flat", flat)];
    for (label, g) in genomes {
        screens.push((label, expand_genome(g, *model.spec())?));
    }
    let mut contrasts = Vec::new();
    let mut table = Table::new(
        "contrasts",
        "contrast of each EMCCD correlation map",
        &[
            ("map", "flat, ga or sga"),
            ("contrast", "(mean peak - mean background) / std background; NaN if undefined"),
            ("peak_dx", "argmax column offset in bins"),
            ("peak_dy", "argmax row offset in bins"),
        ],
    );
    for (label, slm) in screens {
        let total = objective.diffuser().add(&slm)?;
        let map = emccd_capture(model, &total, &spec, stream.label(label))?;
        let c = match contrast(&map, cfg.emccd.peak_halfwidth) {
            Ok(c) => c,
            Err(Error::UndefinedContrast) => {
                results.notes.push(format!("contrast of the {label} map is undefined"));
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        let peak = map.argmax();
        table.push(vec![label.into(), c.into(), (peak.0 as i64).into(), (peak.1 as i64).into()]);
        results.tables.push(map_table(label, &map));
        results.plots.push(Plot {
            name: format!("map_{label}"),
            svg: heatmap(&format!("coincidence map: {label}"), map.size(), map.size(), map.values()),
        });
        contrasts.push(MapContrast { label, contrast: c, peak });
    }
    results.tables.push(table);
    Ok(contrasts)
}

fn map_table(label: &str, map: &CorrelationMap) -> Table {
    let mut t = Table::new(
        format!("map_{label}"),
        format!("background-subtracted EMCCD coincidence map, {label} SLM"),
        &[
            ("dx", "column offset in bins"),
            ("dy", "row offset in bins"),
            ("value", "coincidence estimate per frame"),
        ],
    );
    let r = map.radius() as isize;
    for dy in -r..=r {
        for dx in -r..=r {
            t.push(vec![(dx as i64).into(), (dy as i64).into(), map.at(dx, dy).into()]);
        }
    }
    t
}

fn catch_up(sga: &[f64], target: f64) -> Option<usize> {
    sga.iter().position(|&v| v >= target).map(|g| g + 1)
}

/// GA against sGA behind one diffuser, with EMCCD maps of the best genomes.
pub fn run_fig3(cfg: &ExperimentConfig, results: &mut Results) -> Result<Fig3Outcome> {
    let obj = objective(&cfg.physics, cfg.detection.model()?, RateModel::Delta, Feedback::Poisson)?;
    let base = root(cfg);
    let center = obj.model().beam_center();
    let mut tables = RunTables::new(None);
    let ga_runs = run_mode(&cfg.optimizer, Mode::Ga, &obj, base.label("ga"), "ga", results)?;
    let ga = tables.add(None, "ga", ga_runs);
    let sga_runs = run_mode(&cfg.optimizer, Mode::Sga(center), &obj, base.label("sga"), "sga", results)?;
    let sga = tables.add(None, "sga", sga_runs);
    tables.finish(results);
    let catch_up_generation = ga.curve.last().and_then(|&t| catch_up(&sga.curve, t));
    let mut cmp = Table::new(
        "comparison",
        "derived GA versus sGA figures",
        &[("quantity", "name"), ("value", "value (empty when undefined)")],
    );
    cmp.push(vec!["sga_over_ga_final".into(), (sga.finals.mean / ga.finals.mean).into()]);
    cmp.push(vec![
        "sga_catch_up_generation".into(),
        catch_up_generation.map_or(Cell::Text(String::new()), Cell::from),
    ]);
    results.tables.push(cmp);
    results.plots.push(trace_plot(
        "traces",
        "best enhancement per generation (mean, 1 std band)",
        vec![curve_series("GA".into(), &ga), curve_series("sGA".into(), &sga)],
    ));
    let contrasts = emccd_maps(cfg, &obj, &[("ga", &ga.best_run().best), ("sga", &sga.best_run().best)], results)?;
    Ok(Fig3Outcome {
        ga,
        sga,
        catch_up_generation,
        contrasts,
    })
}

/// Final enhancement against integration time. Run `r` of a mode uses the
/// same stream at every integration time.
pub fn run_fig4(cfg: &ExperimentConfig, results: &mut Results) -> Result<ConditionSweep> {
    let base = root(cfg);
    let det = cfg.detection.model()?;
    let mut tables = RunTables::new(Some(("t_int", "integration time per measurement (s)")));
    let mut sweep = ConditionSweep {
        conditions: cfg.fig4.t_ints.clone(),
        ga: Vec::new(),
        sga: Vec::new(),
    };
    let mut series = Vec::new();
    for &t in &cfg.fig4.t_ints {
        let obj = objective(&cfg.physics, det.with_t_int(t)?, RateModel::Delta, Feedback::Poisson)?;
        let center = obj.model().beam_center();
        for mode in [Mode::Ga, Mode::Sga(center)] {
            let name = mode.name();
            let runs = run_mode(&cfg.optimizer, mode, &obj, base.label(name), &format!("{name}/t_int={t}"), results)?;
            let m = tables.add(Some(t), name, runs);
            series.push(curve_series(format!("{} t_int={t}", name.to_uppercase()), &m));
            match mode {
                Mode::Ga => sweep.ga.push(m.finals),
                Mode::Sga(_) => sweep.sga.push(m.finals),
            }
        }
    }
    tables.finish(results);
    results.plots.push(trace_plot("traces", "best enhancement per generation", series));
    let band = |v: &[StatSummary]| Series {
        label: String::new(),
        x: sweep.conditions.clone(),
        y: v.iter().map(|s| s.mean).collect(),
        band: Some(v.iter().map(|s| s.std).collect()),
    };
    let finals = vec![
        Series {
            label: "GA".into(),
            ..band(&sweep.ga)
        },
        Series {
            label: "sGA".into(),
            ..band(&sweep.sga)
        },
    ];
    results.plots.push(Plot {
        name: "final_vs_t_int".into(),
        svg: line_plot("final enhancement against integration time", "t_int (s)", "final enhancement", &finals, true),
    });
    Ok(sweep)
}

/// GA and sGA with the optimization center displaced along x. sGA runs share
/// streams across shifts; GA, which has no center, gets fresh runs per shift.
pub fn run_appendix_a(cfg: &ExperimentConfig, results: &mut Results) -> Result<ConditionSweep> {
    let base = root(cfg);
    let obj = objective(&cfg.physics, cfg.detection.model()?, RateModel::Delta, Feedback::Poisson)?;
    let beam = obj.model().beam_center();
    let mut tables = RunTables::new(Some(("shift_px", "displacement of the optimization center along x (pixels)")));
    let mut sweep = ConditionSweep {
        conditions: cfg.appendix_a.shifts.clone(),
        ga: Vec::new(),
        sga: Vec::new(),
    };
    let (mut ga_series, mut sga_series) = (Vec::new(), Vec::new());
    for (i, &shift) in cfg.appendix_a.shifts.iter().enumerate() {
        let c = beam.offset(shift, 0.0);
        if !obj.model().spec().contains(c) {
            return Err(Error::config(format!("shift {shift} moves the optimization center off the grid")));
        }
        let runs = run_mode(&cfg.optimizer, Mode::Ga, &obj, base.label("ga").index(i as u64), &format!("ga/shift={shift}"), results)?;
        let ga = tables.add(Some(shift), "ga", runs);
        let runs = run_mode(&cfg.optimizer, Mode::Sga(c), &obj, base.label("sga"), &format!("sga/shift={shift}"), results)?;
        let sga = tables.add(Some(shift), "sga", runs);
        ga_series.push(curve_series(format!("shift {shift} px"), &ga));
        sga_series.push(curve_series(format!("shift {shift} px"), &sga));
        sweep.ga.push(ga.finals);
        sweep.sga.push(sga.finals);
    }
    tables.finish(results);
    results.plots.push(trace_plot("traces_ga", "GA with a displaced optimization center", ga_series));
    results.plots.push(trace_plot("traces_sga", "sGA with a displaced optimization center", sga_series));
    Ok(sweep)
}

fn odd_energy(model: &TwinPhotonModel, g: &SlmGenome) -> Result<f64> {
    let screen = expand_genome(g, *model.spec())?;
    let (_, odd) = parity_decompose(&screen, model.beam_center())?;
    Ok(model.beam_pixels().iter().map(|&(r, c)| odd.get(r, c).powi(2)).sum())
}

/// Both detectors displaced together, scored with the finite-pump-width rate.
pub fn run_appendix_b(cfg: &ExperimentConfig, results: &mut Results) -> Result<AppendixBOutcome> {
    let base = root(cfg);
    let physics = cfg.appendix_b_physics();
    let model = physics.model()?;
    let shift = cfg.appendix_b.displacement * 2.0 * model.detector_beam_radius();
    let (on_axis, displaced) = (Center::new(0.0, 0.0), Center::new(shift, 0.0));
    let d = &cfg.detection;
    let det = DetectionModel::new(displaced, displaced, d.kappa, d.t_int, d.t_final)?;
    let obj = objective(&physics, det, RateModel::Full, Feedback::Poisson)?;
    let diffuser = obj.diffuser().clone();

    let single_on_axis = single_rate(&model, &diffuser, on_axis)?;
    let single_displaced = single_rate(&model, &diffuser, displaced)?;
    let mut diag = Table::new(
        "diagnostics",
        "flat-SLM rates behind the diffuser, normalized to the bare on-axis values",
        &[("quantity", "name"), ("value", "value")],
    );
    diag.push(vec!["detector_displacement".into(), shift.into()]);
    diag.push(vec!["single_rate_on_axis".into(), single_on_axis.into()]);
    diag.push(vec!["single_rate_displaced".into(), single_displaced.into()]);
    diag.push(vec!["coincidence_rate_on_axis".into(), rate_full(&model, &diffuser, on_axis, on_axis)?.into()]);
    diag.push(vec!["coincidence_rate_displaced".into(), rate_full(&model, &diffuser, displaced, displaced)?.into()]);
    results.tables.push(diag);

    let mut tables = RunTables::new(None);
    let runs = run_mode(&cfg.optimizer, Mode::Ga, &obj, base.label("ga"), "ga", results)?;
    let ga = tables.add(None, "ga", runs);
    let runs = run_mode(&cfg.optimizer, Mode::Sga(model.beam_center()), &obj, base.label("sga"), "sga", results)?;
    let sga = tables.add(None, "sga", runs);
    tables.finish(results);

    let mut odd = Table::new(
        "odd_energy",
        "in-beam energy of the odd part of each run's best phase about the beam center",
        &[("mode", "ga or sga"), ("run", "run index"), ("odd_energy", "sum of squared odd-part phase (rad^2)")],
    );
    let mut means = [0.0; 2];
    for (k, m) in [&ga, &sga].into_iter().enumerate() {
        for (r, o) in m.runs.iter().enumerate() {
            let e = odd_energy(&model, &o.best)?;
            means[k] += e / m.runs.len() as f64;
            odd.push(vec![m.mode.into(), r.into(), e.into()]);
        }
    }
    results.tables.push(odd);

    let step = 2.0 * model.sigma_minus();
    let radius = cfg.appendix_b.profile_radius as i64;
    let screens = [
        diffuser.clone(),
        diffuser.add(&expand_genome(&ga.best_run().best, *model.spec())?)?,
        diffuser.add(&expand_genome(&sga.best_run().best, *model.spec())?)?,
    ];
    let mut profiles = Table::new(
        "profiles",
        "coincidence rate with detector 1 at the displaced position and detector 2 offset from it",
        &[
            ("offset", "detector-2 offset in units of 2 sigma_-"),
            ("flat", "rate with a flat SLM"),
            ("ga", "rate with the best GA genome"),
            ("sga", "rate with the best sGA genome"),
        ],
    );
    let mut series: Vec<Series> = ["flat", "GA", "sGA"]
        .iter()
        .map(|l| Series {
            label: l.to_string(),
            x: Vec::new(),
            y: Vec::new(),
            band: None,
        })
        .collect();
    for j in -radius..=radius {
        let x2 = displaced.offset(j as f64 * step, 0.0);
        let mut row: Vec<Cell> = vec![j.into()];
        for (s, screen) in series.iter_mut().zip(&screens) {
            let r = rate_full(&model, screen, displaced, x2)?;
            s.x.push(j as f64);
            s.y.push(r);
            row.push(r.into());
        }
        profiles.push(row);
    }
    results.tables.push(profiles);
    results.plots.push(trace_plot(
        "traces",
        "off-center detectors: best enhancement per generation",
        vec![curve_series("GA".into(), &ga), curve_series("sGA".into(), &sga)],
    ));
    results.plots.push(Plot {
        name: "profiles".into(),
        svg: line_plot("coincidence profile at displaced detectors", "detector-2 offset (2 sigma_-)", "rate", &series, false),
    });
    Ok(AppendixBOutcome {
        ga,
        sga,
        single_on_axis,
        single_displaced,
        ga_odd_energy: means[0],
        sga_odd_energy: means[1],
    })
}

/// `locate_center_from` with one retry after a boundary hit: the schedule
/// resumes at the stage that hit the edge, centered on the edge point.
fn locate_with_retry(schedule: &[ScanStage], scene: &Scene, stream: Stream) -> Result<(CenterEstimate, bool)> {
    match locate_center_from(schedule, frame_start(scene.model()), scene, stream) {
        Ok(est) => Ok((est, false)),
        Err((Error::ScanBoundary { cx, cy }, mut maps)) => {
            let failed = (maps.len() - 1) / 2;
            let est = locate_center_from(&schedule[failed..], (cx, cy), scene, stream.label("retry")).map_err(|(e, _)| e)?;
            maps.extend(est.maps);
            Ok((CenterEstimate { center: est.center, maps }, true))
        }
        Err((e, _)) => Err(e),
    }
}

fn push_maps(table: &mut Table, source: &str, maps: &[QualityMap]) {
    for (i, m) in maps.iter().enumerate() {
        let axis = match m.kind {
            ZernikeKind::ComaX => "x",
            ZernikeKind::ComaY => "y",
        };
        for (&(x, y), &q) in m.points.iter().zip(&m.values) {
            table.push(vec![source.into(), (i / 2 + 1).into(), axis.into(), x.into(), y.into(), q.into()]);
        }
    }
}

/// Center location with odd coma scans: one noiseless pass and
/// `repeats` shot-noise passes.
pub fn run_center_scan(cfg: &ExperimentConfig, results: &mut Results) -> Result<CenterScanOutcome> {
    let base = root(cfg);
    let c = &cfg.center_scan;
    let physics = cfg.center_physics();
    let model = physics.model()?;
    let truth = Center::new(c.true_center[0], c.true_center[1]);
    let d = &cfg.detection;
    let det = DetectionModel::on_axis(d.kappa, d.t_int, d.t_final)?;
    let mut scene = Scene::new(model, det, c.amplitude, Feedback::Exact)?;
    if c.with_diffuser {
        scene = scene.with_diffuser(make_diffuser(&model, &physics.diffuser.spec()?))?;
    }
    let schedule: Vec<ScanStage> = default_schedule().into_iter().take(c.stages).collect();

    let mut maps = Table::new(
        "center_maps",
        "correlation quality at every scanned point",
        &[
            ("source", "exact, or the repeat index"),
            ("stage", "schedule stage, 1-based"),
            ("axis", "x for the ComaX scan, y for the ComaY scan"),
            ("x", "trial center column"),
            ("y", "trial center row"),
            ("quality", "coincidence counts (expected counts for the exact pass)"),
        ],
    );
    let mut estimates = Table::new(
        "center_estimates",
        "final center estimate of every pass",
        &[
            ("source", "exact, or the repeat index"),
            ("cx", "estimated column"),
            ("cy", "estimated row"),
            ("error_x", "cx minus the true column"),
            ("error_y", "cy minus the true row"),
            ("retried", "1 if a boundary hit forced a retry from the edge point"),
        ],
    );
    let (exact, retried) = locate_with_retry(&schedule, &scene, base.label("exact"))?;
    push_maps(&mut maps, "exact", &exact.maps);
    estimates.push(vec![
        "exact".into(),
        exact.center.cx.into(),
        exact.center.cy.into(),
        (exact.center.cx - truth.cx).into(),
        (exact.center.cy - truth.cy).into(),
        (retried as usize).into(),
    ]);
    for (s, stage_maps) in exact.maps.chunks(2).enumerate() {
        let series = stage_maps
            .iter()
            .map(|m| {
                let (origin, label) = match m.kind {
                    ZernikeKind::ComaX => (truth.cx, "ComaX scan"),
                    ZernikeKind::ComaY => (truth.cy, "ComaY scan"),
                };
                // best quality at each coordinate along the measured axis
                let mut profile = std::collections::BTreeMap::<i64, f64>::new();
                for (&(x, y), &q) in m.points.iter().zip(&m.values) {
                    let v = if m.kind == ZernikeKind::ComaX { x } else { y };
                    let e = profile.entry(v).or_insert(q);
                    *e = e.max(q);
                }
                Series {
                    label: label.into(),
                    x: profile.keys().map(|&v| v as f64 - origin).collect(),
                    y: profile.into_values().collect(),
                    band: None,
                }
            })
            .collect::<Vec<_>>();
        results.plots.push(Plot {
            name: format!("center_stage{}", s + 1),
            svg: line_plot(
                &format!("stage {}: r = {}", s + 1, schedule[s].r),
                "trial center minus true center (px)",
                "expected counts",
                &series,
                true,
            ),
        });
    }

    let noisy = scene.with_feedback(c.feedback);
    let runs = (0..c.repeats)
        .into_par_iter()
        .map(|i| locate_with_retry(&schedule, &noisy, base.label("repeat").index(i as u64)))
        .collect::<Vec<Result<_>>>();
    let mut found = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        results.run_seeds.push((format!("repeat{i}"), base.label("repeat").index(i as u64).key()));
        let (est, retried) = match run {
            Ok(v) => v,
            Err(e) => {
                results.tables.extend([maps, estimates]);
                return Err(e);
            }
        };
        push_maps(&mut maps, &i.to_string(), &est.maps);
        estimates.push(vec![
            i.to_string().into(),
            est.center.cx.into(),
            est.center.cy.into(),
            (est.center.cx - truth.cx).into(),
            (est.center.cy - truth.cy).into(),
            (retried as usize).into(),
        ]);
        found.push(est.center);
    }
    let ex: Vec<f64> = found.iter().map(|e| (e.cx - truth.cx).abs()).collect();
    let ey: Vec<f64> = found.iter().map(|e| (e.cy - truth.cy).abs()).collect();
    let median_abs_error = (median(&ex), median(&ey));
    let mut summary = Table::new("center_summary", "center-scan summary", &[("quantity", "name"), ("value", "value")]);
    summary.push(vec!["true_cx".into(), truth.cx.into()]);
    summary.push(vec!["true_cy".into(), truth.cy.into()]);
    summary.push(vec!["exact_cx".into(), exact.center.cx.into()]);
    summary.push(vec!["exact_cy".into(), exact.center.cy.into()]);
    summary.push(vec!["median_abs_error_x".into(), median_abs_error.0.into()]);
    summary.push(vec!["median_abs_error_y".into(), median_abs_error.1.into()]);
    results.tables.extend([maps, estimates, summary]);
    Ok(CenterScanOutcome {
        truth,
        exact: exact.center,
        estimates: found,
        median_abs_error,
        stages: schedule.len(),
        last_step: schedule.last().map_or(0, |s| s.step),
    })
}

/// Any mix of modes, rate model and feedback from the `custom` section.
pub fn run_custom(cfg: &ExperimentConfig, results: &mut Results) -> Result<CustomOutcome> {
    let base = root(cfg);
    let c = &cfg.custom;
    let obj = objective(&cfg.physics, cfg.detection.model()?, c.rate_model, c.feedback)?;
    let center = obj.model().beam_center().offset(c.sga_offset[0], c.sga_offset[1]);
    let mut tables = RunTables::new(None);
    let mut modes = Vec::new();
    for name in &c.modes {
        let mode = if name == "sga" { Mode::Sga(center) } else { Mode::Ga };
        let runs = run_mode(&cfg.optimizer, mode, &obj, base.label(mode.name()), mode.name(), results)?;
        modes.push(tables.add(None, mode.name(), runs));
    }
    tables.finish(results);
    results.plots.push(trace_plot(
        "traces",
        "best enhancement per generation",
        modes.iter().map(|m| curve_series(m.mode.to_uppercase(), m)).collect(),
    ));
    let contrasts = if c.emccd_maps {
        let genomes: Vec<(&'static str, &SlmGenome)> = modes.iter().map(|m| (m.mode, &m.best_run().best)).collect();
        emccd_maps(cfg, &obj, &genomes, results)?
    } else {
        Vec::new()
    };
    Ok(CustomOutcome { modes, contrasts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(e: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(e).with_runs(2);
        cfg.physics.grid = 32;
        cfg.physics.beam_radius = 12.0;
        cfg.physics.diffuser.corr_len = 8.0;
        cfg.optimizer.generations = 3;
        cfg.optimizer.superpixel = 4;
        cfg.emccd.frames = 500;
        cfg.emccd.detector_pixels = 16;
        cfg.emccd.map_radius = 4;
        cfg
    }

    #[test]
    fn catch_up_is_one_based() {
        assert_eq!(catch_up(&[1.0, 2.0, 3.0], 2.0), Some(2));
        assert_eq!(catch_up(&[1.0], 2.0), None);
    }

    #[test]
    fn fig3_smoke_produces_the_inventory() {
        let exec = run_experiment(&tiny(Experiment::Fig3));
        let Outcome::Fig3(o) = exec.outcome.unwrap() else { panic!("wrong outcome") };
        assert_eq!(o.contrasts.len(), 3);
        let names: Vec<&str> = exec.results.plots.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["traces", "map_flat", "map_ga", "map_sga"]);
        assert_eq!(exec.results.table("traces").unwrap().rows.len(), 2 * 2 * 3);
    }

    #[test]
    fn summaries_match_the_run_rows() {
        let exec = run_experiment(&tiny(Experiment::Fig4));
        let finals = exec.results.table("finals").unwrap();
        let summary = exec.results.table("summary").unwrap();
        let col = |t: &Table, n: &str| t.column(n).unwrap();
        for row in &summary.rows {
            let key = (&row[col(summary, "t_int")], &row[col(summary, "mode")]);
            let values: Vec<f64> = finals
                .rows
                .iter()
                .filter(|r| (&r[col(finals, "t_int")], &r[col(finals, "mode")]) == key)
                .map(|r| match r[col(finals, "final_enhancement")] {
                    Cell::Real(v) => v,
                    _ => unreachable!(),
                })
                .collect();
            let s = StatSummary::of(&values);
            assert_eq!(row[col(summary, "mean")], Cell::Real(s.mean));
            assert_eq!(row[col(summary, "std")], Cell::Real(s.std));
        }
    }

    #[test]
    fn appendix_a_rejects_off_grid_shifts() {
        let mut cfg = tiny(Experiment::AppendixA);
        cfg.appendix_a.shifts = vec![100.0];
        assert!(matches!(run_experiment(&cfg).outcome, Err(Error::Config(_))));
    }

    #[test]
    fn single_stage_center_scan_is_within_one_step() {
        let mut cfg = ExperimentConfig::preset(Experiment::CenterScan);
        cfg.center_scan.stages = 1;
        cfg.center_scan.repeats = 2;
        let exec = run_experiment(&cfg);
        let outcome = exec.outcome.unwrap();
        assert!(outcome.checks().iter().all(|c| c.passed), "{:?}", outcome.checks());
    }
}
