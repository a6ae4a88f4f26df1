//! Genetic-programming construction of a single feature.
//!
//! Individuals are expression trees over the selected features (see
//! [`tree`] for the text form). The loop is generational with elitism and
//! tournament selection. Each non-elite slot of the next generation is
//! bred from its own random stream keyed by (generation, slot), and every
//! distinct tree is scored once, so results do not depend on how fitness
//! evaluation is scheduled.

mod ops;
pub mod tree;

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use ops::{build_tree, crossover, mutate, ramped_half_and_half, random_tree, tournament_select, Method};
pub use tree::{BinaryOp, ConstructedColumn, Expr, UnaryOp};

const PHASE_INIT: u64 = 0;
const PHASE_BREED: u64 = 1;

/// What the constructed feature is scored alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionMode {
    /// Selected features plus the constructed column.
    #[default]
    Augmented,
    /// The constructed column on its own.
    Solo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub population: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub init_depth_range: (usize, usize),
    pub max_depth: usize,
    pub elitism_count: usize,
    pub mode: ConstructionMode,
    /// Put `f0` and the constant `(- f0 f0)` in the first two slots of the
    /// initial population.
    pub seed_slots: bool,
    #[serde(skip)]
    pub master_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population: 50,
            max_generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            tournament_size: 3,
            init_depth_range: (2, 6),
            max_depth: 8,
            elitism_count: 1,
            mode: ConstructionMode::Augmented,
            seed_slots: true,
            master_seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("gp {msg}")));
        if self.population == 0 || self.max_generations == 0 || self.tournament_size == 0 {
            return bad("population, max_generations and tournament_size must be positive".into());
        }
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.crossover_rate)
            || !rate_ok(self.mutation_rate)
            || self.crossover_rate + self.mutation_rate > 1.0 + 1e-12
        {
            return bad(format!(
                "rates must lie in [0, 1] and sum to at most 1, got crossover {} mutation {}",
                self.crossover_rate, self.mutation_rate
            ));
        }
        let (lo, hi) = self.init_depth_range;
        if lo > hi || hi > self.max_depth {
            return bad(format!(
                "init_depth_range ({lo}, {hi}) must be ordered and within max_depth {}",
                self.max_depth
            ));
        }
        if self.elitism_count > self.population {
            return bad(format!(
                "elitism_count {} exceeds population {}",
                self.elitism_count, self.population
            ));
        }
        Ok(())
    }
}

/// Initial population: the optional seeded slots followed by a ramped
/// half-and-half fill.
pub fn initial_population(config: &GpConfig, terminals: usize) -> Vec<Expr> {
    let mut pop = Vec::with_capacity(config.population);
    if config.seed_slots {
        pop.push(Expr::Feature(0));
        pop.push(Expr::binary(BinaryOp::Sub, Expr::Feature(0), Expr::Feature(0)));
        pop.truncate(config.population);
    }
    let mut rng = seed::stream(config.master_seed, &[PHASE_INIT]);
    let rest = config.population - pop.len();
    pop.extend(ramped_half_and_half(rest, config.init_depth_range, terminals, &mut rng));
    pop
}

pub struct Evolution {
    config: GpConfig,
    terminals: usize,
    population: Vec<Expr>,
    fitness: Vec<f64>,
    cache: HashMap<Expr, f64>,
    best: Expr,
    best_fitness: f64,
    history: Vec<f64>,
    generation: usize,
}

impl Evolution {
    pub fn new<F>(config: GpConfig, terminals: usize, fitness: &F) -> Result<Self>
    where
        F: Fn(&Expr) -> Result<f64> + Sync,
    {
        config.validate()?;
        if terminals == 0 {
            return Err(Error::InvalidArgument("gp needs at least one terminal".into()));
        }
        let population = initial_population(&config, terminals);
        let mut evo = Evolution {
            config,
            terminals,
            fitness: Vec::new(),
            cache: HashMap::new(),
            best: population[0].clone(),
            best_fitness: f64::NEG_INFINITY,
            history: Vec::new(),
            generation: 0,
            population,
        };
        evo.score(fitness)?;
        Ok(evo)
    }

    fn score<F>(&mut self, fitness: &F) -> Result<()>
    where
        F: Fn(&Expr) -> Result<f64> + Sync,
    {
        let mut fresh: Vec<&Expr> = Vec::new();
        for t in &self.population {
            if !self.cache.contains_key(t) && !fresh.contains(&t) {
                fresh.push(t);
            }
        }
        let scores: Vec<f64> = fresh.par_iter().map(|t| fitness(t)).collect::<Result<_>>()?;
        let fresh: Vec<Expr> = fresh.into_iter().cloned().collect();
        self.cache.extend(fresh.into_iter().zip(scores));
        self.fitness = self.population.iter().map(|t| self.cache[t]).collect();
        for (t, &f) in self.population.iter().zip(&self.fitness) {
            if f > self.best_fitness {
                self.best_fitness = f;
                self.best = t.clone();
            }
        }
        self.history.push(self.best_fitness);
        Ok(())
    }

    fn breed(&self, slot: usize) -> Expr {
        let c = &self.config;
        let mut rng = seed::stream(c.master_seed, &[PHASE_BREED, self.generation as u64, slot as u64]);
        let pick = |rng: &mut seed::Rng| &self.population[tournament_select(&self.fitness, c.tournament_size, rng)];
        let r: f64 = rng.gen();
        if r < c.crossover_rate {
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            crossover(a, b, c.max_depth, &mut rng).0
        } else if r < c.crossover_rate + c.mutation_rate {
            mutate(pick(&mut rng), self.terminals, c.max_depth, &mut rng)
        } else {
            pick(&mut rng).clone()
        }
    }

    pub fn step<F>(&mut self, fitness: &F) -> Result<()>
    where
        F: Fn(&Expr) -> Result<f64> + Sync,
    {
        self.generation += 1;
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| self.fitness[b].total_cmp(&self.fitness[a]).then(a.cmp(&b)));
        let elites = self.config.elitism_count;
        let mut next: Vec<Expr> = order[..elites].iter().map(|&i| self.population[i].clone()).collect();
        let bred: Vec<Expr> = (elites..self.config.population)
            .into_par_iter()
            .map(|slot| self.breed(slot))
            .collect();
        next.extend(bred);
        self.population = next;
        self.score(fitness)?;
        log::info!(
            "gp generation {}: best {:.6} ({} distinct trees scored)",
            self.generation,
            self.best_fitness,
            self.cache.len()
        );
        Ok(())
    }

    pub fn population(&self) -> &[Expr] {
        &self.population
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitness
    }

    pub fn best(&self) -> (&Expr, f64) {
        (&self.best, self.best_fitness)
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Distinct trees scored so far.
    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }

    pub fn into_outcome(self) -> GpOutcome {
        GpOutcome {
            evaluations: self.cache.len(),
            best_tree: self.best,
            best_fitness: self.best_fitness,
            history: self.history,
            generations: self.generation,
            seed: self.config.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpOutcome {
    pub best_tree: Expr,
    pub best_fitness: f64,
    /// Best fitness so far; entry 0 is the initial population.
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    pub seed: u64,
}

/// Persistable summary of a construction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionRecord {
    pub expression: Expr,
    pub fitness: f64,
    pub generations: usize,
    pub seed: u64,
}

impl GpOutcome {
    pub fn record(&self) -> ExpressionRecord {
        ExpressionRecord {
            expression: self.best_tree.clone(),
            fitness: self.best_fitness,
            generations: self.generations,
            seed: self.seed,
        }
    }
}

/// Evolves trees over `terminals` features for `config.max_generations`
/// generations.
pub fn run_gp<F>(config: &GpConfig, terminals: usize, fitness: F) -> Result<GpOutcome>
where
    F: Fn(&Expr) -> Result<f64> + Sync,
{
    let mut evo = Evolution::new(config.clone(), terminals, &fitness)?;
    for _ in 0..config.max_generations {
        evo.step(&fitness)?;
    }
    Ok(evo.into_outcome())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GpConfig {
        GpConfig {
            population: 30,
            max_generations: 15,
            master_seed: seed,
            ..GpConfig::default()
        }
    }

    /// Negative squared error against f0*f1 on a fixed grid.
    fn product_fit(t: &Expr) -> Result<f64> {
        let mut err = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let row = [i as f64 / 4.0, j as f64 / 4.0, 0.5];
                let d = t.eval_row(&row) - row[0] * row[1];
                err += d * d;
            }
        }
        Ok(-err)
    }

    #[test]
    fn config_validation() {
        assert!(GpConfig::default().validate().is_ok());
        let c = GpConfig { crossover_rate: 0.8, mutation_rate: 0.3, ..GpConfig::default() };
        assert!(c.validate().is_err());
        let c = GpConfig { init_depth_range: (2, 9), ..GpConfig::default() };
        assert!(c.validate().is_err());
        let c = GpConfig { elitism_count: 51, ..GpConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_without_seed() {
        let c = GpConfig { master_seed: 9, ..GpConfig::default() };
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("master_seed"));
        let back: GpConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, GpConfig::default());
        assert!(serde_json::from_str::<GpConfig>(r#"{"popsize": 3}"#).is_err());
    }

    #[test]
    fn seeded_slots_lead_the_initial_population() {
        let pop = initial_population(&GpConfig::default(), 4);
        assert_eq!(pop.len(), 50);
        assert_eq!(pop[0].to_string(), "f0");
        assert_eq!(pop[1].to_string(), "(- f0 f0)");
        assert!(pop[2..].iter().all(|t| (2..=6).contains(&t.depth())));
        let pop = initial_population(&GpConfig { seed_slots: false, ..GpConfig::default() }, 4);
        assert!(pop.iter().all(|t| t.depth() >= 2));
    }

    #[test]
    fn history_is_monotone_and_population_well_formed() {
        let cfg = small(3);
        let mut evo = Evolution::new(cfg.clone(), 3, &product_fit).unwrap();
        for _ in 0..cfg.max_generations {
            evo.step(&product_fit).unwrap();
            assert_eq!(evo.population().len(), cfg.population);
            assert!(evo.population().iter().all(|t| t.is_valid(3, cfg.max_depth)));
        }
        let out = evo.into_outcome();
        assert_eq!(out.history.len(), cfg.max_generations + 1);
        assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(product_fit(&out.best_tree).unwrap(), out.best_fitness);
    }

    #[test]
    fn finds_the_product() {
        let cfg = GpConfig { population: 60, max_generations: 30, master_seed: 11, ..GpConfig::default() };
        let out = run_gp(&cfg, 3, product_fit).unwrap();
        assert!(out.best_fitness > -0.05, "{} {}", out.best_tree, out.best_fitness);
        assert!(out.best_fitness > out.history[0]);
    }

    #[test]
    fn terminal_census() {
        for seed in 0..20 {
            let out = run_gp(&GpConfig { max_generations: 1, master_seed: seed, ..GpConfig::default() }, 4, |t: &Expr| {
                Ok(if t.is_terminal() { 1.0 } else { 0.0 })
            })
            .unwrap();
            assert_eq!(out.history[0], 1.0);
        }
    }

    #[test]
    fn same_result_under_any_pool() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_gp(&small(5), 3, product_fit).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn record_json_fields() {
        let out = run_gp(&small(1), 3, product_fit).unwrap();
        let json = serde_json::to_value(out.record()).unwrap();
        for key in ["expression", "fitness", "generations", "seed"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: Expr = json["expression"].as_str().unwrap().parse().unwrap();
        assert_eq!(back, out.best_tree);
    }
}
