//! Genetic optimization of SLM genomes from coincidence-count feedback.
//!
//! [`evolve`] runs either the plain GA, whose genes are every super-pixel,
//! or the symmetrized GA, whose genes are the inversion orbits about a
//! chosen center. Each generation keeps the elites with their recorded
//! counts and refills the population from rank-weighted parents by uniform
//! crossover and per-gene mutation.

mod objective;

pub use objective::{final_enhancement, fitness, quantize_screen, CoincidenceObjective, Feedback, Objective, RateModel};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{SlmGenome, Symmetry};
use crate::grid::Center;
use crate::rng::Stream;
use objective::flat_reference;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub mutation_rate: f64,
    pub elites: usize,
    pub generations: usize,
    pub runs: usize,
    /// Super-pixel side in screen pixels.
    pub superpixel: usize,
    pub levels: u8,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 15,
            mutation_rate: 0.1,
            elites: 3,
            generations: 100,
            runs: 5,
            superpixel: 8,
            levels: 16,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("population must be at least 2"));
        }
        if self.elites >= self.population {
            return Err(Error::config(format!(
                "elites ({}) must be fewer than the population ({})",
                self.elites, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config(format!("mutation rate {} is outside [0, 1]", self.mutation_rate)));
        }
        if self.generations == 0 || self.runs == 0 {
            return Err(Error::config("generations and runs must be at least 1"));
        }
        if self.levels < 2 {
            return Err(Error::config("at least two phase levels are needed"));
        }
        if self.superpixel == 0 {
            return Err(Error::config("super-pixel size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ga,
    /// Symmetrized GA about the given center in screen pixels.
    Sga(Center),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Ga => "ga",
            Mode::Sga(_) => "sga",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub best_counts: f64,
    pub best_enhancement: f64,
    pub genome_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<GenerationRecord>,
    /// Flat-SLM counts, scaled to one `t_int` window.
    pub flat_baseline_counts: f64,
    pub final_enhancement: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub best: SlmGenome,
}

struct Individual {
    genes: Vec<u8>,
    counts: f64,
}

/// Maps gene vectors onto full genomes.
struct Layout {
    template: SlmGenome,
    orbits: Vec<Vec<usize>>,
    center: Option<Center>,
}

impl Layout {
    fn new(template: SlmGenome, mode: Mode) -> Self {
        match mode {
            Mode::Ga => Layout {
                orbits: (0..template.len()).map(|i| vec![i]).collect(),
                template,
                center: None,
            },
            Mode::Sga(c) => {
                let sym = template.symmetrize(c);
                Layout {
                    orbits: sym.orbits(),
                    template: sym,
                    center: Some(c),
                }
            }
        }
    }

    fn phenotype(&self, genes: &[u8]) -> Result<SlmGenome> {
        let mut levels = vec![0u8; self.template.len()];
        for (orbit, &g) in self.orbits.iter().zip(genes) {
            for &i in orbit {
                levels[i] = g;
            }
        }
        let g = SlmGenome::from_levels(&self.template, levels)?;
        match self.center {
            None => Ok(g),
            Some(c) => {
                if !g.is_symmetric_about(c) {
                    return Err(Error::Objective("sGA phenotype violates inversion symmetry".into()));
                }
                Ok(g.symmetrize(c))
            }
        }
    }
}

fn random_genes(n: usize, levels: u8, stream: Stream) -> Vec<u8> {
    let mut rng = stream.rng();
    (0..n).map(|_| rng.random_range(0..levels)).collect()
}

fn breed(cfg: &GaConfig, parents: &[Individual], pick: &WeightedIndex<f64>, stream: Stream) -> Vec<u8> {
    let mut rng = stream.rng();
    let a = &parents[pick.sample(&mut rng)].genes;
    let b = &parents[pick.sample(&mut rng)].genes;
    a.iter()
        .zip(b)
        .map(|(&ga, &gb)| {
            let gene = if rng.random_bool(0.5) { ga } else { gb };
            if rng.random_bool(cfg.mutation_rate) {
                rng.random_range(0..cfg.levels)
            } else {
                gene
            }
        })
        .collect()
}

/// Run one GA or sGA optimization.
///
/// Streams used under `stream`: `flat` for the baseline, `init/i` for the
/// initial population, `gen/g/child/i/{breed,measure}` for offspring and
/// `final` for the closing enhancement measurement.
pub fn evolve(cfg: &GaConfig, mode: Mode, objective: &dyn Objective, stream: Stream) -> Result<RunOutcome> {
    cfg.validate()?;
    let template = SlmGenome::for_grid(&objective.grid(), cfg.superpixel, cfg.levels)?;
    let layout = Layout::new(template, mode);
    let n_genes = layout.orbits.len();

    let flat = SlmGenome::from_levels(&layout.template, vec![0; layout.template.len()])?;
    let (flat_counts, flat_window) = flat_reference(objective, &flat, objective.t_final(), stream.label("flat"))?;
    let baseline = flat_counts * objective.t_int() / flat_window;

    let evaluate = |genes: Vec<u8>, s: Stream| -> Result<Individual> {
        let g = layout.phenotype(&genes)?;
        let counts = objective.measure(&g, objective.t_int(), s)?;
        Ok(Individual { genes, counts })
    };

    let init = stream.label("init");
    let mut population: Vec<Individual> = (0..cfg.population)
        .into_par_iter()
        .map(|i| {
            let s = init.index(i as u64);
            evaluate(random_genes(n_genes, cfg.levels, s.label("genes")), s.label("measure"))
        })
        .collect::<Result<_>>()?;

    // Linear rank weights: best gets `population`, worst gets 1.
    let weights: Vec<f64> = (0..cfg.population).rev().map(|w| (w + 1) as f64).collect();
    let pick = WeightedIndex::new(&weights).expect("rank weights are positive");

    let mut records = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        // Stable sort keeps the earlier individual first on equal counts.
        population.sort_by(|a, b| b.counts.total_cmp(&a.counts));
        let best = &population[0];
        records.push(GenerationRecord {
            best_counts: best.counts,
            best_enhancement: best.counts / baseline,
            genome_hash: layout.phenotype(&best.genes)?.digest(),
        });
        if generation + 1 == cfg.generations {
            break;
        }
        let gen_stream = stream.label("gen").index(generation as u64);
        let children: Vec<Individual> = (0..cfg.population - cfg.elites)
            .into_par_iter()
            .map(|i| {
                let s = gen_stream.label("child").index(i as u64);
                evaluate(breed(cfg, &population, &pick, s.label("breed")), s.label("measure"))
            })
            .collect::<Result<_>>()?;
        population.truncate(cfg.elites);
        population.extend(children);
    }

    let best = layout.phenotype(&population[0].genes)?;
    let final_enhancement = final_enhancement(objective, &best, stream.label("final"))?;
    Ok(RunOutcome {
        trace: RunTrace {
            records,
            flat_baseline_counts: baseline,
            final_enhancement,
        },
        best,
    })
}

/// True when `g` carries the symmetry tag an sGA run would give it.
pub fn is_sga_phenotype(g: &SlmGenome, c: Center) -> bool {
    g.symmetry() == Symmetry::Inversion(c) && g.is_symmetric_about(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_screen, parity_decompose, GridSpec, PhaseScreen};
    use crate::physics::{make_diffuser, DetectionModel, DiffuserSpec, TwinPhotonModel};

    fn objective(kappa: f64, feedback: Feedback, phase_std: f64) -> CoincidenceObjective {
        let spec = GridSpec::new(48, 1.0).unwrap();
        let model = TwinPhotonModel::standard(spec, 20.0, 34.6).unwrap();
        let d = make_diffuser(&model, &DiffuserSpec::new(5, 12.0, phase_std).unwrap());
        let det = DetectionModel::on_axis(kappa, 1.0, 50.0).unwrap();
        CoincidenceObjective::new(model, d, det, RateModel::Delta, feedback).unwrap()
    }

    fn small() -> GaConfig {
        GaConfig {
            generations: 30,
            superpixel: 4,
            ..GaConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig { elites: 15, ..GaConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = GaConfig { mutation_rate: 1.5, ..GaConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn elitism_is_monotone_without_noise() {
        let obj = objective(100.0, Feedback::Exact, 2.5);
        let c = obj.model().beam_center();
        for mode in [Mode::Ga, Mode::Sga(c)] {
            let out = evolve(&small(), mode, &obj, Stream::root(1)).unwrap();
            assert_eq!(out.trace.records.len(), 30);
            for w in out.trace.records.windows(2) {
                assert!(w[1].best_counts >= w[0].best_counts);
            }
            assert!(out.trace.records[29].best_enhancement > out.trace.records[0].best_enhancement);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let obj = objective(50.0, Feedback::Poisson, 2.5);
        let c = obj.model().beam_center();
        let a = evolve(&small(), Mode::Sga(c), &obj, Stream::root(7)).unwrap();
        let b = evolve(&small(), Mode::Sga(c), &obj, Stream::root(7)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best, b.best);
        let other = evolve(&small(), Mode::Sga(c), &obj, Stream::root(8)).unwrap();
        assert_ne!(a.trace, other.trace);
    }

    #[test]
    fn sga_phenotypes_are_symmetric() {
        let obj = objective(50.0, Feedback::Poisson, 2.5);
        for c in [obj.model().beam_center(), obj.model().beam_center().offset(5.0, 0.0)] {
            let out = evolve(&small(), Mode::Sga(c), &obj, Stream::root(3)).unwrap();
            assert!(is_sga_phenotype(&out.best, c));
            let screen = crate::grid::expand_genome(&out.best, obj.grid()).unwrap();
            if c == obj.model().beam_center() {
                let odd = parity_decompose(&screen, c).unwrap().1;
                assert_eq!(odd.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn odd_screens_do_not_change_ga_fitness() {
        let obj = objective(50.0, Feedback::Exact, 2.5);
        let out = evolve(&GaConfig { generations: 5, ..small() }, Mode::Ga, &obj, Stream::root(2)).unwrap();
        let screen = crate::grid::expand_genome(&out.best, obj.grid()).unwrap();
        let base = obj.rate_of_screen(&screen).unwrap();
        let c = obj.model().beam_center();
        let mut rng = Stream::root(4).rng();
        for _ in 0..10 {
            let s = PhaseScreen::from_fn(obj.grid(), |_, _| rng.random_range(-3.0..3.0));
            let odd = parity_decompose(&s, c).unwrap().1;
            let r = obj.rate_of_screen(&screen.add(&odd).unwrap()).unwrap();
            assert!((r - base).abs() <= 1e-10 * base);
        }
    }

    #[test]
    fn nothing_to_correct_without_diffuser() {
        let obj = objective(200.0, Feedback::Poisson, 0.0);
        let zero = make_screen(obj.grid(), 0.0).unwrap();
        assert_eq!(obj.diffuser(), &zero);
        let out = evolve(&small(), Mode::Ga, &obj, Stream::root(5)).unwrap();
        // A flat SLM is already optimal; best-of-15 draws only add selection noise.
        let last = out.trace.records.last().unwrap().best_enhancement;
        assert!(last < 1.3, "{last}");
        assert!(out.trace.final_enhancement < 1.1, "{}", out.trace.final_enhancement);
    }
}
