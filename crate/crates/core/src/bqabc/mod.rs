//! Binary quantum-inspired artificial bee colony over feature masks.
//!
//! Each food source carries a string of qubits plus the mask last observed
//! from it. Employed and onlooker bees rotate a source's qubits toward a
//! peer's mask, observe the result and keep it only when fitness strictly
//! improves. A source that stalls for `abandonment_limit` visits is
//! replaced by a fresh uniform superposition (at most one per iteration).

mod qubit;

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMask;
use crate::error::{Error, Result};
use crate::seed;

pub use qubit::{repair, Qubit, QubitString};

const PHASE_INIT: u64 = 0;
const PHASE_EMPLOYED: u64 = 1;
const PHASE_PICK: u64 = 2;
const PHASE_ONLOOKER: u64 = 3;
const PHASE_SCOUT: u64 = 4;

/// Which mask a neighbourhood move rotates toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attractor {
    /// Observed mask of a uniformly chosen other source.
    #[default]
    Peer,
    /// Best mask found so far.
    GlobalBest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BqabcConfig {
    pub population: usize,
    pub max_iterations: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Consecutive failed visits before a source is abandoned. Defaults to
    /// `population * m / 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abandonment_limit: Option<usize>,
    pub attractor: Attractor,
    #[serde(skip)]
    pub master_seed: u64,
}

impl Default for BqabcConfig {
    fn default() -> Self {
        BqabcConfig {
            population: 50,
            max_iterations: 100,
            theta_min: 0.001 * PI,
            theta_max: 0.05 * PI,
            abandonment_limit: None,
            attractor: Attractor::Peer,
            master_seed: 0,
        }
    }
}

impl BqabcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.max_iterations == 0 {
            return Err(Error::Config("bqabc population and max_iterations must be positive".into()));
        }
        if !(self.theta_min > 0.0 && self.theta_min <= self.theta_max && self.theta_max < PI / 2.0) {
            return Err(Error::Config(format!(
                "bqabc rotation bounds need 0 < theta_min <= theta_max < pi/2, got [{}, {}]",
                self.theta_min, self.theta_max
            )));
        }
        if self.abandonment_limit == Some(0) {
            return Err(Error::Config("bqabc abandonment_limit must be positive".into()));
        }
        Ok(())
    }

    pub fn limit_for(&self, m: usize) -> usize {
        self.abandonment_limit.unwrap_or((self.population * m / 2).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoodSource {
    pub quantum: QubitString,
    pub observed: FeatureMask,
    pub fitness: f64,
    /// Consecutive visits without improvement.
    pub trials: usize,
}

/// `p_i = fit_i / sum(fit)`. All-zero input yields a uniform vector and
/// `true` as the degenerate flag.
pub fn onlooker_probabilities(fitnesses: &[f64]) -> (Vec<f64>, bool) {
    let total: f64 = fitnesses.iter().map(|f| f.max(0.0)).sum();
    if total > 0.0 && total.is_finite() {
        (fitnesses.iter().map(|f| f.max(0.0) / total).collect(), false)
    } else {
        let n = fitnesses.len() as f64;
        (vec![1.0 / n; fitnesses.len()], true)
    }
}

fn roulette<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn other_index<R: Rng + ?Sized>(n: usize, i: usize, rng: &mut R) -> usize {
    if n < 2 {
        return i;
    }
    let k = rng.gen_range(0..n - 1);
    if k >= i {
        k + 1
    } else {
        k
    }
}

fn fresh_source<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (QubitString, FeatureMask) {
    let q = QubitString::superposition(m);
    let mask = repair(q.observe(rng), &q);
    (q, mask)
}

fn evaluate_all<F>(candidates: &[(QubitString, FeatureMask)], fitness: &F) -> Result<Vec<f64>>
where
    F: Fn(&FeatureMask) -> Result<f64> + Sync,
{
    candidates.par_iter().map(|(_, mask)| fitness(mask)).collect()
}

/// S food sources in uniform superposition, observed, repaired and scored.
pub fn init_population<F>(config: &BqabcConfig, m: usize, fitness: &F) -> Result<Vec<FoodSource>>
where
    F: Fn(&FeatureMask) -> Result<f64> + Sync,
{
    let candidates: Vec<_> = (0..config.population)
        .map(|i| fresh_source(m, &mut seed::stream(config.master_seed, &[PHASE_INIT, 0, i as u64])))
        .collect();
    let scores = evaluate_all(&candidates, fitness)?;
    Ok(candidates
        .into_iter()
        .zip(scores)
        .map(|((quantum, observed), fitness)| FoodSource {
            quantum,
            observed,
            fitness,
            trials: 0,
        })
        .collect())
}

/// Colony state between iterations.
pub struct Colony {
    config: BqabcConfig,
    m: usize,
    limit: usize,
    sources: Vec<FoodSource>,
    best_mask: FeatureMask,
    best_fitness: f64,
    history: Vec<f64>,
    iteration: usize,
    evaluations: usize,
    scouts: usize,
}

impl Colony {
    pub fn new<F>(config: BqabcConfig, m: usize, fitness: &F) -> Result<Self>
    where
        F: Fn(&FeatureMask) -> Result<f64> + Sync,
    {
        config.validate()?;
        if m == 0 {
            return Err(Error::InvalidArgument("no features to select from".into()));
        }
        let sources = init_population(&config, m, fitness)?;
        let mut colony = Colony {
            limit: config.limit_for(m),
            config,
            m,
            best_mask: sources[0].observed.clone(),
            best_fitness: f64::NEG_INFINITY,
            sources: Vec::new(),
            history: Vec::new(),
            iteration: 0,
            evaluations: 0,
            scouts: 0,
        };
        for s in &sources {
            colony.record(&s.observed, s.fitness);
        }
        colony.sources = sources;
        Ok(colony)
    }

    fn record(&mut self, mask: &FeatureMask, fitness: f64) {
        self.evaluations += 1;
        if fitness > self.best_fitness {
            self.best_fitness = fitness;
            self.best_mask = mask.clone();
        }
    }

    fn target(&self, peer: usize) -> &FeatureMask {
        match self.config.attractor {
            Attractor::Peer => &self.sources[peer].observed,
            Attractor::GlobalBest => &self.best_mask,
        }
    }

    fn neighbour<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (QubitString, FeatureMask) {
        let peer = other_index(self.sources.len(), i, rng);
        let q = self.sources[i].quantum.rotate_toward(
            self.target(peer),
            self.config.theta_min,
            self.config.theta_max,
            rng,
        );
        let mask = repair(q.observe(rng), &q);
        (q, mask)
    }

    fn greedy(&mut self, i: usize, quantum: QubitString, observed: FeatureMask, fitness: f64) {
        self.record(&observed, fitness);
        let s = &mut self.sources[i];
        if fitness > s.fitness {
            *s = FoodSource {
                quantum,
                observed,
                fitness,
                trials: 0,
            };
        } else {
            s.trials += 1;
        }
    }

    /// One employed + onlooker + scout cycle.
    pub fn step<F>(&mut self, fitness: &F) -> Result<()>
    where
        F: Fn(&FeatureMask) -> Result<f64> + Sync,
    {
        let t = self.iteration as u64 + 1;
        let master = self.config.master_seed;
        let n = self.sources.len();

        // Employed bees: one proposal per source from the phase-start snapshot.
        let proposals: Vec<_> = (0..n)
            .map(|i| self.neighbour(i, &mut seed::stream(master, &[PHASE_EMPLOYED, t, i as u64])))
            .collect();
        let scores = evaluate_all(&proposals, fitness)?;
        for (i, ((q, mask), f)) in proposals.into_iter().zip(scores).enumerate() {
            self.greedy(i, q, mask, f);
        }

        // Onlooker bees: roulette over the post-employed fitnesses.
        let fits: Vec<f64> = self.sources.iter().map(|s| s.fitness).collect();
        let (probs, _) = onlooker_probabilities(&fits);
        let mut pick_rng = seed::stream(master, &[PHASE_PICK, t]);
        let picks: Vec<usize> = (0..n).map(|_| roulette(&probs, &mut pick_rng)).collect();
        let proposals: Vec<_> = picks
            .iter()
            .enumerate()
            .map(|(o, &j)| self.neighbour(j, &mut seed::stream(master, &[PHASE_ONLOOKER, t, o as u64])))
            .collect();
        let scores = evaluate_all(&proposals, fitness)?;
        for (&j, ((q, mask), f)) in picks.iter().zip(proposals.into_iter().zip(scores)) {
            self.greedy(j, q, mask, f);
        }

        // Scout: the most stalled source past the limit, if any.
        let abandoned = (0..n)
            .filter(|&i| self.sources[i].trials >= self.limit)
            .max_by(|&a, &b| self.sources[a].trials.cmp(&self.sources[b].trials).then(b.cmp(&a)));
        if let Some(i) = abandoned {
            let (quantum, observed) = fresh_source(self.m, &mut seed::stream(master, &[PHASE_SCOUT, t]));
            let f = fitness(&observed)?;
            self.record(&observed, f);
            self.sources[i] = FoodSource {
                quantum,
                observed,
                fitness: f,
                trials: 0,
            };
            self.scouts += 1;
        }

        self.iteration += 1;
        self.history.push(self.best_fitness);
        log::info!(
            "bqabc iteration {}/{}: best fitness {:.4} with {} features",
            self.iteration,
            self.config.max_iterations,
            self.best_fitness,
            self.best_mask.count()
        );
        Ok(())
    }

    pub fn sources(&self) -> &[FoodSource] {
        &self.sources
    }

    pub fn best(&self) -> (&FeatureMask, f64) {
        (&self.best_mask, self.best_fitness)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn abandonment_limit(&self) -> usize {
        self.limit
    }

    pub fn into_outcome(self) -> BqabcOutcome {
        BqabcOutcome {
            best_mask: self.best_mask,
            best_fitness: self.best_fitness,
            history: self.history,
            iterations: self.iteration,
            evaluations: self.evaluations,
            scouts: self.scouts,
            seed: self.config.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqabcOutcome {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    /// Best fitness so far after each iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub scouts: usize,
    pub seed: u64,
}

/// Persistable summary of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub mask: FeatureMask,
    pub fitness: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub seed: u64,
}

impl BqabcOutcome {
    pub fn record(&self) -> MaskRecord {
        MaskRecord {
            mask: self.best_mask.clone(),
            fitness: self.best_fitness,
            iterations: self.iterations,
            evaluations: self.evaluations,
            seed: self.seed,
        }
    }
}

/// Runs the colony for `config.max_iterations` iterations over masks of
/// length `m`.
pub fn run_bqabc<F>(config: &BqabcConfig, m: usize, fitness: F) -> Result<BqabcOutcome>
where
    F: Fn(&FeatureMask) -> Result<f64> + Sync,
{
    let mut colony = Colony::new(config.clone(), m, &fitness)?;
    for _ in 0..config.max_iterations {
        colony.step(&fitness)?;
    }
    Ok(colony.into_outcome())
}
