use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Objective, OptimizationResult, OptimizerConfig, Recorder};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, rng_from_seed, uniform_point, Bounds, SeedRng};

fn check_budget(cfg: &OptimizerConfig) -> Result<()> {
    if cfg.n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    Ok(())
}

/// Compass search on the objective itself, from the box center.
///
/// Polls `+e1, -e1, +e2, ...` at the current step (unit-cube scale,
/// starting at `cfg.inner.init_step`), moves on the first improvement and
/// shrinks the step by `cfg.inner.shrink` after a failed poll. Stops at
/// `n_max` evaluations or once the step falls below `cfg.inner.min_step`.
/// Points already evaluated are not evaluated again.
pub fn pattern_search(objective: &Objective, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    let start = vec![0.5; objective.bounds().dim()];
    pattern_search_from(objective, cfg, start)
}

pub(crate) fn pattern_search_from(
    objective: &Objective,
    cfg: &OptimizerConfig,
    start_unit: Vec<f64>,
) -> Result<OptimizationResult> {
    check_budget(cfg)?;
    let bounds = objective.bounds();
    let mut rec = Recorder::new(objective, "pattern", None, cfg.n_max, cfg.record_timing);
    let mut seen: HashMap<Vec<u64>, f64> = HashMap::new();
    let key = |u: &[f64]| u.iter().map(|v| v.to_bits()).collect::<Vec<_>>();

    let mut x = start_unit;
    let mut fx = rec.evaluate(bounds.from_unit(&x))?;
    seen.insert(key(&x), fx);
    let mut step = cfg.inner.init_step;
    'outer: while rec.remaining() > 0 && step >= cfg.inner.min_step {
        let mut improved = false;
        'poll: for j in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (y[j] + sign * step).clamp(0.0, 1.0);
                if y[j] == x[j] {
                    continue;
                }
                let fy = match seen.get(&key(&y)) {
                    Some(&v) => v,
                    None => {
                        if rec.remaining() == 0 {
                            break 'outer;
                        }
                        let v = rec.evaluate(bounds.from_unit(&y))?;
                        seen.insert(key(&y), v);
                        v
                    }
                };
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'poll;
                }
            }
        }
        if !improved {
            step *= cfg.inner.shrink;
        }
    }
    rec.finish()
}

/// `n_max` independent uniform draws.
pub fn random_search(objective: &Objective, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    check_budget(cfg)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut rec = Recorder::new(
        objective,
        "random",
        Some(cfg.seed),
        cfg.n_max,
        cfg.record_timing,
    );
    while rec.remaining() > 0 {
        let x = uniform_point(objective.bounds(), &mut rng);
        rec.evaluate(x)?;
    }
    rec.finish()
}

/// Real-coded GA operators. Genes live in the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    /// BLX-alpha extension of the parent interval.
    pub blend: f64,
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            tournament: 2,
            blend: 0.5,
            mutation_sigma: 0.1,
            mutation_rate: 0.2,
            elitism: 1,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 || self.tournament == 0 || self.elitism >= self.population {
            return Err(Error::Config(
                "GA needs population >= 2, tournament >= 1 and elitism < population".into(),
            ));
        }
        if !(self.mutation_sigma >= 0.0
            && (0.0..=1.0).contains(&self.mutation_rate)
            && self.blend >= 0.0)
        {
            return Err(Error::Config(
                "GA mutation and blend parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

/// GA with the default operators and a uniform random initial population.
pub fn genetic_algorithm(
    objective: &Objective,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    genetic_algorithm_with(objective, cfg, &GaConfig::default(), None)
}

/// Generational GA with tournament selection, blend crossover, Gaussian
/// mutation and elitism. Every child costs one evaluation; elites are carried
/// over without re-evaluation, and the run stops after exactly `n_max`
/// evaluations. `initial` (unit-cube genes) replaces the random population.
pub fn genetic_algorithm_with(
    objective: &Objective,
    cfg: &OptimizerConfig,
    ga: &GaConfig,
    initial: Option<Vec<Vec<f64>>>,
) -> Result<OptimizationResult> {
    check_budget(cfg)?;
    ga.validate()?;
    let bounds = objective.bounds();
    let d = bounds.dim();
    let unit = Bounds::unit(d)?;
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let mut rec = Recorder::new(
        objective,
        "ga",
        Some(cfg.seed),
        cfg.n_max,
        cfg.record_timing,
    );

    let genes: Vec<Vec<f64>> = match initial {
        Some(p) => {
            if p.len() != ga.population || p.iter().any(|g| g.len() != d || !unit.contains(g)) {
                return Err(Error::Usage(format!(
                    "initial population must hold {} unit-cube points of dimension {d}",
                    ga.population
                )));
            }
            p
        }
        None => (0..ga.population)
            .map(|_| uniform_point(&unit, &mut rng))
            .collect(),
    };
    let take = genes.len().min(rec.remaining());
    let genes: Vec<Vec<f64>> = genes.into_iter().take(take).collect();
    let values = rec.evaluate_batch(genes.iter().map(|g| bounds.from_unit(g)).collect())?;
    let mut pop: Vec<(Vec<f64>, f64)> = genes.into_iter().zip(values).collect();

    let normal = Normal::new(0.0, ga.mutation_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    while rec.remaining() > 0 {
        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| pop[a].1.total_cmp(&pop[b].1).then(a.cmp(&b)));
        let mut next: Vec<(Vec<f64>, f64)> = ranked[..ga.elitism]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < ga.population && rec.remaining() > 0 {
            let a = tournament(&pop, ga.tournament, &mut rng);
            let b = tournament(&pop, ga.tournament, &mut rng);
            let mut child: Vec<f64> = (0..d)
                .map(|j| {
                    let (lo, hi) = (pop[a].0[j].min(pop[b].0[j]), pop[a].0[j].max(pop[b].0[j]));
                    let ext = ga.blend * (hi - lo);
                    let u: f64 = rng.random();
                    (lo - ext + u * (hi - lo + 2.0 * ext)).clamp(0.0, 1.0)
                })
                .collect();
            for g in child.iter_mut() {
                let r: f64 = rng.random();
                if r < ga.mutation_rate {
                    *g = (*g + normal.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
            let f = rec.evaluate(bounds.from_unit(&child))?;
            next.push((child, f));
        }
        pop = next;
    }
    rec.finish()
}

fn tournament(pop: &[(Vec<f64>, f64)], k: usize, rng: &mut SeedRng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].1 < pop[best].1 || (pop[c].1 == pop[best].1 && c < best) {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> Objective {
        Objective::new(Bounds::unit(2).unwrap(), |x| {
            Ok(x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum())
        })
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn pattern_search_stagnates_at_optimum() {
        let r = pattern_search(&sphere(), &OptimizerConfig::new(2, 100, 0)).unwrap();
        assert_eq!(r.best_point, vec![0.5, 0.5]);
        assert_eq!(r.best_value, 0.0);
        assert!(r.trace.len() <= 100);
    }

    #[test]
    fn pattern_search_finds_kink() {
        let obj = Objective::new(Bounds::unit(1).unwrap(), |x| Ok((x[0] - 0.3).abs()));
        let r = pattern_search(&obj, &OptimizerConfig::new(1, 100, 0)).unwrap();
        assert!((r.best_point[0] - 0.3).abs() < 1e-3, "{:?}", r.best_point);
        assert!(r.trace.len() <= 100);
    }

    #[test]
    fn pattern_search_stops_at_budget() {
        let obj = Objective::new(Bounds::unit(3).unwrap(), |x| {
            Ok(x.iter().map(|v| (v - 0.123).powi(2)).sum())
        });
        let r = pattern_search(&obj, &OptimizerConfig::new(3, 17, 0)).unwrap();
        assert_eq!(r.trace.len(), 17);
    }

    #[test]
    fn random_search_single_draw() {
        let r = random_search(&sphere(), &OptimizerConfig::new(2, 1, 4)).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.best_point, r.trace.records[0].point);
    }

    #[test]
    fn random_search_best_so_far_nonincreasing() {
        let r = random_search(&sphere(), &OptimizerConfig::new(2, 50, 4)).unwrap();
        assert!(r
            .trace
            .records
            .windows(2)
            .all(|w| w[1].best_f <= w[0].best_f));
        assert_eq!(r.best_value, r.trace.records.last().unwrap().best_f);
    }

    #[test]
    fn ga_identical_population_without_mutation() {
        let ga = GaConfig {
            mutation_rate: 0.0,
            ..GaConfig::default()
        };
        let init = vec![vec![0.2, 0.9]; 20];
        let r = genetic_algorithm_with(&sphere(), &OptimizerConfig::new(2, 80, 1), &ga, Some(init))
            .unwrap();
        let first = r.trace.records[0].f;
        assert!(r
            .trace
            .records
            .iter()
            .all(|t| t.f == first && t.best_f == first));
        assert_eq!(r.trace.len(), 80);
    }

    #[test]
    fn ga_sphere_median() {
        let best: Vec<f64> = (0..5)
            .map(|s| {
                genetic_algorithm(&sphere(), &OptimizerConfig::new(2, 100, s))
                    .unwrap()
                    .best_value
            })
            .collect();
        assert!(median(best) <= 0.05);
    }

    #[test]
    fn ga_is_deterministic_and_exact_budget() {
        let cfg = OptimizerConfig::new(2, 53, 8);
        let a = genetic_algorithm(&sphere(), &cfg).unwrap();
        let b = genetic_algorithm(&sphere(), &cfg).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        assert_eq!(a.trace.len(), 53);
    }
}
