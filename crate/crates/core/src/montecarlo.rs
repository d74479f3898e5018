//! Seeded forward simulation of play under a fixed equilibrium.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Draws are split into
//! consecutive chunks of [`CHUNK_DRAWS`]; chunk `k` uses the generator
//! seeded with `seed_from_u64(seed)` on stream `k`. Each draw consumes exactly
//! four uniforms (type, state, signal, success). Chunks are simulated in
//! parallel and merged as integer counts, so results depend only on
//! `(seed, n_draws, equilibrium)` and never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{AgentType, Equilibrium, Outcome, Policy, Regime, Retention, Signal};
use crate::error::{ModelError, Result};
use crate::params::Params;

pub const CHUNK_DRAWS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_draws: u64,
    pub seed: u64,
    pub regime: Regime,
    pub params: Params,
}

/// Counts indexed by (type, signal, good state, outcome).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCounts {
    counts: [[[[u64; 3]; 2]; 2]; 2],
}

fn outcome_index(o: Outcome) -> usize {
    match o {
        Outcome::Success => 0,
        Outcome::Failure => 1,
        Outcome::StatusQuo => 2,
    }
}

impl CellCounts {
    pub fn get(&self, agent: AgentType, signal: Signal, good_state: bool, outcome: Outcome) -> u64 {
        self.counts[agent as usize][signal as usize][usize::from(!good_state)]
            [outcome_index(outcome)]
    }

    fn bump(&mut self, t: usize, s: usize, w: usize, o: usize) {
        self.counts[t][s][w][o] += 1;
    }

    fn merge(mut self, other: &CellCounts) -> CellCounts {
        for (a, b) in self
            .counts
            .iter_mut()
            .flatten()
            .flatten()
            .flatten()
            .zip(other.counts.iter().flatten().flatten().flatten())
        {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().flatten().flatten().sum()
    }

    fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, usize, u64)> + '_ {
        (0..2).flat_map(move |t| {
            (0..2).flat_map(move |s| {
                (0..2).flat_map(move |w| (0..3).map(move |o| (t, s, w, o, self.counts[t][s][w][o])))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; `None` with fewer than two draws.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFrequencies {
    pub success: f64,
    pub failure: f64,
    pub status_quo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub regime: Regime,
    pub seed: u64,
    pub n_draws: u64,
    /// Principal's policy payoff.
    pub payoff: Estimate,
    pub retention_rate_congruent: Option<f64>,
    pub retention_rate_noncongruent: Option<f64>,
    pub congruent_given_retained: Option<f64>,
    pub outcomes: OutcomeFrequencies,
    pub q: Estimate,
    pub counts: CellCounts,
}

/// Per-cell actions and per-(cell, outcome) retention and selection values,
/// resolved once from the equilibrium.
struct DrawTable {
    pi: f64,
    phi: f64,
    p: f64,
    reform: [[bool; 2]; 2],
    effort: [[f64; 2]; 2],
    retained: [[[bool; 3]; 2]; 2],
    q_value: [[[f64; 3]; 2]; 2],
    d: f64,
}

impl DrawTable {
    fn new(eq: &Equilibrium, params: &Params) -> Result<Self> {
        let mut table = DrawTable {
            pi: params.pi,
            phi: params.phi,
            p: params.p,
            reform: [[false; 2]; 2],
            effort: [[0.0; 2]; 2],
            retained: [[[false; 3]; 2]; 2],
            q_value: [[[params.pi; 3]; 2]; 2],
            d: params.d,
        };
        for (agent, signal, action) in eq.profile.iter() {
            let (t, s) = (agent as usize, signal as usize);
            table.reform[t][s] = action.policy == Policy::Reform;
            table.effort[t][s] = action.effort;
            if !eq.accountable() {
                continue;
            }
            let outcomes: &[Outcome] = match action.policy {
                Policy::Reform => &[Outcome::Success, Outcome::Failure],
                Policy::StatusQuo => &[Outcome::StatusQuo],
            };
            for &o in outcomes {
                let rule = eq.resolve(&eq.observe(action, o))?;
                let i = outcome_index(o);
                table.retained[t][s][i] = rule.decision == Retention::Retain;
                table.q_value[t][s][i] = if table.retained[t][s][i] {
                    rule.belief
                } else {
                    params.pi
                };
            }
        }
        Ok(table)
    }

    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng, counts: &mut CellCounts) {
        let u_type: f64 = rng.gen();
        let u_state: f64 = rng.gen();
        let u_signal: f64 = rng.gen();
        let u_success: f64 = rng.gen();
        let t = usize::from(u_type >= self.pi);
        let good = u_state < self.phi;
        let correct = u_signal < self.p;
        let s = usize::from(good != correct);
        let o = if !self.reform[t][s] {
            2
        } else if good && u_success < self.effort[t][s] {
            0
        } else {
            1
        };
        counts.bump(t, s, usize::from(!good), o);
    }

    fn run(&self, rng: &mut ChaCha8Rng, n: u64, counts: &mut CellCounts) {
        for _ in 0..n {
            self.draw(rng, counts);
        }
    }

    fn stats(&self, counts: &CellCounts, regime: Regime, seed: u64) -> SimStats {
        let n = counts.total();
        let nf = n as f64;
        let (mut pay, mut pay2, mut q, mut q2) = (0.0, 0.0, 0.0, 0.0);
        let mut outcome = [0u64; 3];
        let mut by_type = [0u64; 2];
        let mut retained_by_type = [0u64; 2];
        for (t, s, _, o, c) in counts.iter() {
            if c == 0 {
                continue;
            }
            let cf = c as f64;
            let v = [1.0, 0.0, self.d][o];
            pay += cf * v;
            pay2 += cf * v * v;
            let qv = self.q_value[t][s][o];
            q += cf * qv;
            q2 += cf * qv * qv;
            outcome[o] += c;
            by_type[t] += c;
            if self.retained[t][s][o] {
                retained_by_type[t] += c;
            }
        }
        let estimate = |sum: f64, sum2: f64| {
            let mean = sum / nf;
            let se = (n >= 2).then(|| {
                let var = ((sum2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            });
            Estimate { mean, se }
        };
        let rate = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let retained_total = retained_by_type[0] + retained_by_type[1];
        SimStats {
            regime,
            seed,
            n_draws: n,
            payoff: estimate(pay, pay2),
            retention_rate_congruent: rate(retained_by_type[0], by_type[0]),
            retention_rate_noncongruent: rate(retained_by_type[1], by_type[1]),
            congruent_given_retained: rate(retained_by_type[0], retained_total),
            outcomes: OutcomeFrequencies {
                success: outcome[0] as f64 / nf,
                failure: outcome[1] as f64 / nf,
                status_quo: outcome[2] as f64 / nf,
            },
            q: estimate(q, q2),
            counts: *counts,
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn check_config(config: &SimConfig, eq: &Equilibrium) -> Result<()> {
    config.params.validate()?;
    if config.n_draws == 0 {
        return Err(ModelError::InvalidSimulation(
            "n_draws must be at least 1".into(),
        ));
    }
    if eq.regime != config.regime {
        return Err(ModelError::RegimeMismatch {
            expected: config.regime,
            found: eq.regime,
        });
    }
    Ok(())
}

pub fn simulate(config: &SimConfig, eq: &Equilibrium) -> Result<SimStats> {
    check_config(config, eq)?;
    let table = DrawTable::new(eq, &config.params)?;
    let n_chunks = config.n_draws.div_ceil(CHUNK_DRAWS);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(config.seed, k);
            let mut counts = CellCounts::default();
            let len = CHUNK_DRAWS.min(config.n_draws - k * CHUNK_DRAWS);
            table.run(&mut rng, len, &mut counts);
            counts
        })
        .reduce(CellCounts::default, |a, b| a.merge(&b));
    Ok(table.stats(&counts, config.regime, config.seed))
}

/// Statistics at each checkpoint from one stream of draws; the entry for
/// checkpoint `n` equals `simulate` with `n_draws = n`.
pub fn convergence_sweep(
    config: &SimConfig,
    eq: &Equilibrium,
    checkpoints: &[u64],
) -> Result<Vec<SimStats>> {
    check_config(config, eq)?;
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(ModelError::InvalidSimulation(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    let table = DrawTable::new(eq, &config.params)?;
    let mut counts = CellCounts::default();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut done = 0u64;
    let mut chunk = 0u64;
    let mut rng = chunk_rng(config.seed, chunk);
    let mut used_in_chunk = 0u64;
    for &target in checkpoints {
        while done < target {
            if used_in_chunk == CHUNK_DRAWS {
                chunk += 1;
                rng = chunk_rng(config.seed, chunk);
                used_in_chunk = 0;
            }
            let take = (CHUNK_DRAWS - used_in_chunk).min(target - done);
            table.run(&mut rng, take, &mut counts);
            used_in_chunk += take;
            done += take;
        }
        out.push(table.stats(&counts, config.regime, config.seed));
    }
    Ok(out)
}
