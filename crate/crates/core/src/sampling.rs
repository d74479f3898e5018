//! Seeded rejection sampler over the parameter domains, for property suites
//! and randomized acceptance runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{solve, Regime};
use crate::model::{check_assumptions, RentMode};
use crate::params::{Params, DEFAULT_EPS_TOL};

/// Upper end of the rent range the sampler draws from; the rent domain
/// itself is unbounded.
pub const RENT_MAX: f64 = 3.0;

pub struct ParamSampler {
    rng: ChaCha8Rng,
}

impl ParamSampler {
    pub fn new(seed: u64) -> Self {
        ParamSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn open_unit(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform draw from the declared domains (rent from `(0, RENT_MAX]`,
    /// accuracy from `[1/2, 1)`).
    pub fn draw(&mut self) -> Params {
        Params {
            p: 0.5 + 0.5 * self.rng.gen::<f64>(),
            phi: self.open_unit(),
            d: self.open_unit(),
            lambda: self.open_unit(),
            rent: RENT_MAX * self.open_unit(),
            pi: self.open_unit(),
            selection_weight: 0.0,
            eps_tol: DEFAULT_EPS_TOL,
        }
    }

    /// First draw accepted by `accept`, giving up after `max_tries`.
    pub fn draw_where(
        &mut self,
        max_tries: usize,
        mut accept: impl FnMut(&Params) -> bool,
    ) -> Option<Params> {
        (0..max_tries).map(|_| self.draw()).find(|p| accept(p))
    }

    /// A draw satisfying signal informativeness, moderate rent (per `mode`)
    /// and the effort bound.
    pub fn draw_assumption_set(&mut self, mode: RentMode) -> Params {
        self.draw_where(usize::MAX, |p| {
            check_assumptions(p).is_ok_and(|r| r.base_set_holds(mode))
        })
        .expect("unbounded retries")
    }

    /// A draw at which every compared regime's equilibrium can be built.
    pub fn draw_all_regimes(&mut self, mode: RentMode) -> Params {
        self.draw_where(usize::MAX, |p| {
            check_assumptions(p).is_ok_and(|r| r.base_set_holds(mode))
                && Regime::COMPARED.iter().all(|&g| solve(p, g, mode).is_ok())
        })
        .expect("unbounded retries")
    }
}
