//! Integer search over the loop count: exhaustive grid, hill climbing with
//! random restarts, and a small genetic algorithm.
//!
//! Every strategy evaluates `alpha = 0` at least once, so the best found
//! fitness can never fall below the untouched baseline on the selection
//! protocol. Fitness values are memoized per alpha: the callable runs at
//! most once per distinct candidate.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Grid,
    HillClimb,
    Sga,
}

impl std::fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SearchStrategy::Grid => write!(f, "grid"),
            SearchStrategy::HillClimb => write!(f, "hill_climb"),
            SearchStrategy::Sga => write!(f, "sga"),
        }
    }
}

/// Ordered record of every (alpha, fitness) evaluation plus the selected
/// optimum.
///
/// `best_fitness` is the maximum over the evaluations; among the alphas
/// achieving it exactly, the smallest `|alpha|` wins with positive preferred
/// over negative. Grid traces are ordered by alpha; other strategies record
/// first-evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearchTrace {
    pub evaluations: Vec<(i64, f64)>,
    pub best_alpha: i64,
    pub best_fitness: f64,
    pub strategy: SearchStrategy,
}

impl AlphaSearchTrace {
    fn from_evaluations(evaluations: Vec<(i64, f64)>, strategy: SearchStrategy) -> Result<Self> {
        let best_fitness = evaluations
            .iter()
            .map(|&(_, f)| f)
            .max_by(f64::total_cmp)
            .ok_or_else(|| Error::Range("search evaluated no candidates".into()))?;
        let best_alpha = evaluations
            .iter()
            .filter(|&&(_, f)| f == best_fitness)
            .map(|&(a, _)| a)
            .min_by_key(|&a| (a.unsigned_abs(), a < 0))
            .expect("at least one evaluation achieves the maximum");
        Ok(AlphaSearchTrace {
            evaluations,
            best_alpha,
            best_fitness,
            strategy,
        })
    }

    /// Two-column `alpha,accuracy_percent` table over the evaluations,
    /// optionally restricted to an inclusive alpha range.
    pub fn to_table(&self, bounds: Option<(i64, i64)>) -> String {
        let mut rows: Vec<(i64, f64)> = self
            .evaluations
            .iter()
            .copied()
            .filter(|&(a, _)| bounds.is_none_or(|(lo, hi)| a >= lo && a <= hi))
            .collect();
        rows.sort_by_key(|&(a, _)| a);
        let mut out = String::from("alpha,accuracy_percent\n");
        for (a, f) in rows {
            out.push_str(&format!("{a},{f:?}\n"));
        }
        out
    }
}

/// Memoizing wrapper around a fitness callable keyed by alpha.
pub struct MemoFitness<F> {
    f: F,
    cache: BTreeMap<i64, f64>,
    order: Vec<(i64, f64)>,
    calls: usize,
}

impl<F: FnMut(i64) -> Result<f64>> MemoFitness<F> {
    pub fn new(f: F) -> Self {
        MemoFitness {
            f,
            cache: BTreeMap::new(),
            order: Vec::new(),
            calls: 0,
        }
    }

    pub fn eval(&mut self, alpha: i64) -> Result<f64> {
        if let Some(&v) = self.cache.get(&alpha) {
            return Ok(v);
        }
        self.calls += 1;
        let v = (self.f)(alpha)?;
        if v.is_nan() {
            return Err(Error::Numerical(format!(
                "fitness at alpha = {alpha} is NaN"
            )));
        }
        self.cache.insert(alpha, v);
        self.order.push((alpha, v));
        Ok(v)
    }

    /// Number of underlying fitness invocations (distinct alphas evaluated).
    pub fn call_count(&self) -> usize {
        self.calls
    }

    /// Evaluations in first-evaluation order.
    pub fn into_trace(self, strategy: SearchStrategy) -> Result<AlphaSearchTrace> {
        let mut evaluations = self.order;
        if strategy == SearchStrategy::Grid {
            evaluations.sort_by_key(|&(a, _)| a);
        }
        AlphaSearchTrace::from_evaluations(evaluations, strategy)
    }
}

/// Evaluate every integer in `[alpha_min, alpha_max]`, plus `alpha = 0` when
/// the range excludes it. The trace is ordered by alpha.
pub fn grid_search<F>(fitness: F, alpha_min: i64, alpha_max: i64) -> Result<AlphaSearchTrace>
where
    F: FnMut(i64) -> Result<f64>,
{
    if alpha_min > alpha_max {
        return Err(Error::Range(format!(
            "alpha_min {alpha_min} exceeds alpha_max {alpha_max}"
        )));
    }
    let mut memo = MemoFitness::new(fitness);
    memo.eval(0)?;
    for alpha in alpha_min..=alpha_max {
        memo.eval(alpha)?;
    }
    memo.into_trace(SearchStrategy::Grid)
}

/// Steepest-ascent hill climbing over the integers with random restarts.
///
/// The first climb starts at `start_alpha`; each later restart starts at a
/// uniform draw from `[alpha_min, alpha_max]`. A climb repeatedly moves to
/// the better of `alpha - 1` / `alpha + 1` while that strictly improves
/// fitness, for at most `max_steps` moves. `alpha = 0` is always evaluated,
/// and the best alpha over every evaluation is returned.
#[allow(clippy::too_many_arguments)]
pub fn hill_climb<F>(
    fitness: F,
    start_alpha: i64,
    max_steps: usize,
    restarts: usize,
    alpha_min: i64,
    alpha_max: i64,
    seed: u64,
) -> Result<AlphaSearchTrace>
where
    F: FnMut(i64) -> Result<f64>,
{
    if max_steps < 1 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }
    if alpha_min > alpha_max {
        return Err(Error::Range(format!(
            "alpha_min {alpha_min} exceeds alpha_max {alpha_max}"
        )));
    }
    let mut memo = MemoFitness::new(fitness);
    memo.eval(0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = restarts.max(1);
    for restart in 0..starts {
        let mut cur = if restart == 0 {
            start_alpha.clamp(alpha_min, alpha_max)
        } else {
            rng.random_range(alpha_min..=alpha_max)
        };
        let mut cur_fit = memo.eval(cur)?;
        for _ in 0..max_steps {
            let mut moved = false;
            let mut best_neighbor = cur;
            let mut best_fit = cur_fit;
            // Candidates ordered so ties prefer the value closer to zero,
            // positive first at equal magnitude.
            let mut neighbors = [cur - 1, cur + 1];
            neighbors.sort_by_key(|&a| (a.unsigned_abs(), a < 0));
            for next in neighbors {
                if next < alpha_min || next > alpha_max {
                    continue;
                }
                let f = memo.eval(next)?;
                if f > best_fit {
                    best_fit = f;
                    best_neighbor = next;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            cur = best_neighbor;
            cur_fit = best_fit;
        }
    }
    memo.into_trace(SearchStrategy::HillClimb)
}

/// Genetic-algorithm parameters. Bounds must bracket zero so the baseline
/// stays reachable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub alpha_min: i64,
    pub alpha_max: i64,
    pub seed: u64,
}

impl Default for SgaConfig {
    fn default() -> Self {
        SgaConfig {
            population: 20,
            generations: 30,
            mutation_rate: 0.15,
            crossover_rate: 0.9,
            alpha_min: -10,
            alpha_max: 80,
            seed: 0,
        }
    }
}

impl SgaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if !(self.alpha_min <= 0 && 0 <= self.alpha_max) {
            return Err(Error::Config(format!(
                "bounds [{}, {}] must bracket 0",
                self.alpha_min, self.alpha_max
            )));
        }
        for (name, rate) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!(
                    "{name} must be in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Simple genetic algorithm over binary-encoded offsets from `alpha_min`:
/// tournament selection of size 2, single-point crossover, per-bit mutation,
/// elitism of one. `alpha = 0` is seeded into the initial population.
pub fn sga_search<F>(fitness: F, config: &SgaConfig) -> Result<AlphaSearchTrace>
where
    F: FnMut(i64) -> Result<f64>,
{
    config.validate()?;
    let span = (config.alpha_max - config.alpha_min) as u64 + 1;
    let bits = if span <= 1 {
        0
    } else {
        64 - (span - 1).leading_zeros()
    };
    // Bit patterns beyond the span wrap around, so every genome decodes to
    // an in-range alpha instead of piling up at the upper bound.
    let decode = |genome: u64| -> i64 { config.alpha_min + (genome % span) as i64 };

    let mut memo = MemoFitness::new(fitness);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<u64> = Vec::with_capacity(config.population);
    population.push((0 - config.alpha_min) as u64); // alpha = 0
    while population.len() < config.population {
        population.push(rng.random_range(0..span));
    }

    let mut scores: Vec<f64> = Vec::with_capacity(config.population);
    for &g in &population {
        scores.push(memo.eval(decode(g))?);
    }

    for _ in 0..config.generations {
        // Elite: highest fitness; ties prefer the smaller decoded |alpha|,
        // positive over negative, matching the trace rule.
        let elite = (0..population.len())
            .min_by(|&i, &j| {
                let (a, b) = (decode(population[i]), decode(population[j]));
                scores[j]
                    .total_cmp(&scores[i])
                    .then((a.unsigned_abs(), a < 0).cmp(&(b.unsigned_abs(), b < 0)))
            })
            .expect("population is nonempty");
        let mut next = Vec::with_capacity(config.population);
        next.push(population[elite]);

        while next.len() < config.population {
            let p1 = tournament(&population, &scores, &mut rng);
            let p2 = tournament(&population, &scores, &mut rng);
            let (mut c1, mut c2) =
                if bits >= 2 && rng.random_range(0.0..1.0) < config.crossover_rate {
                    let point = rng.random_range(1..bits);
                    let low_mask = (1u64 << point) - 1;
                    (
                        (p1 & !low_mask) | (p2 & low_mask),
                        (p2 & !low_mask) | (p1 & low_mask),
                    )
                } else {
                    (p1, p2)
                };
            for child in [&mut c1, &mut c2] {
                for b in 0..bits {
                    if rng.random_range(0.0..1.0) < config.mutation_rate {
                        *child ^= 1u64 << b;
                    }
                }
            }
            next.push(c1);
            if next.len() < config.population {
                next.push(c2);
            }
        }
        population = next;
        scores.clear();
        for &g in &population {
            scores.push(memo.eval(decode(g))?);
        }
    }
    memo.into_trace(SearchStrategy::Sga)
}

/// Scores are fetched from the memo before selection, so fitness ties
/// resolve to the first of the two draws.
fn tournament(population: &[u64], scores: &[f64], rng: &mut ChaCha8Rng) -> u64 {
    let a = rng.random_range(0..population.len());
    let b = rng.random_range(0..population.len());
    if scores[a] >= scores[b] {
        population[a]
    } else {
        population[b]
    }
}
