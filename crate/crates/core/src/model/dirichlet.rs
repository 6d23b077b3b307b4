// Copyright 2026 The aspectval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Variational Dirichlet factors over multinomial parameters.

use serde::{Deserialize, Serialize};

use super::special::{digamma, ln_gamma};

/// A Dirichlet posterior `q(theta) = Dir(concentration)` with its prior.
///
/// The support may be a subset of the full event space: `implicit_mass` is
/// the total prior concentration of events outside the explicit support. Those
/// events never receive counts, so their posterior equals their prior and they
/// only enter through the normalizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletFactor {
    prior: Vec<f64>,
    concentration: Vec<f64>,
    implicit_mass: f64,
    #[serde(skip)]
    expected_log: Vec<f64>,
    #[serde(skip)]
    total: f64,
}

impl PartialEq for DirichletFactor {
    fn eq(&self, other: &Self) -> bool {
        self.prior == other.prior
            && self.concentration == other.concentration
            && self.implicit_mass == other.implicit_mass
    }
}

impl DirichletFactor {
    pub fn symmetric(size: usize, alpha: f64) -> Self {
        Self::from_prior(vec![alpha; size])
    }

    pub fn from_prior(prior: Vec<f64>) -> Self {
        Self::with_implicit(prior, 0.0)
    }

    pub fn with_implicit(prior: Vec<f64>, implicit_mass: f64) -> Self {
        debug_assert!(prior.iter().all(|&a| a > 0.0));
        let mut f = DirichletFactor {
            concentration: prior.clone(),
            prior,
            implicit_mass,
            expected_log: Vec::new(),
            total: 0.0,
        };
        f.refresh();
        f
    }

    pub fn len(&self) -> usize {
        self.concentration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concentration.is_empty()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn implicit_mass(&self) -> f64 {
        self.implicit_mass
    }

    /// Sum of all concentrations, implicit mass included.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `E_q[log theta_k] = digamma(alpha_k) - digamma(sum alpha)`.
    #[inline]
    pub fn expected_log(&self, k: usize) -> f64 {
        self.expected_log[k]
    }

    pub fn expected_logs(&self) -> &[f64] {
        &self.expected_log
    }

    /// Posterior mean of element `k`.
    pub fn mean(&self, k: usize) -> f64 {
        self.concentration[k] / self.total
    }

    /// Sets the posterior to prior plus `counts` and refreshes the cache.
    pub fn set_counts(&mut self, counts: &[f64]) {
        assert_eq!(counts.len(), self.prior.len(), "count vector length");
        for ((c, &p), &n) in self.concentration.iter_mut().zip(&self.prior).zip(counts) {
            *c = p + n;
        }
        self.refresh();
    }

    pub fn reset_to_prior(&mut self) {
        self.concentration.copy_from_slice(&self.prior);
        self.refresh();
    }

    pub(crate) fn refresh(&mut self) {
        self.total = self.concentration.iter().sum::<f64>() + self.implicit_mass;
        if self.total > 0.0 {
            let digamma_total = digamma(self.total);
            self.expected_log = self
                .concentration
                .iter()
                .map(|&a| digamma(a) - digamma_total)
                .collect();
        } else {
            self.expected_log.clear();
        }
    }

    /// `KL(q || prior)` in nats.
    pub fn kl_from_prior(&self) -> f64 {
        if self.concentration == self.prior {
            return 0.0;
        }
        let prior_total = self.prior.iter().sum::<f64>() + self.implicit_mass;
        let digamma_total = digamma(self.total);
        let mut kl = ln_gamma(self.total) - ln_gamma(prior_total);
        for (&a, &b) in self.concentration.iter().zip(&self.prior) {
            kl -= ln_gamma(a) - ln_gamma(b);
            kl += (a - b) * (digamma(a) - digamma_total);
        }
        kl
    }
}

/// Word-topic transitions: a row from `start` over topics, and one row per
/// topic over topics plus `end`. `start -> end` carries no mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFactor {
    start: DirichletFactor,
    rows: Vec<DirichletFactor>,
}

impl TransitionFactor {
    /// `base` everywhere, plus `self_boost` on the diagonal and extra boosts
    /// on selected self-transitions.
    pub fn from_prior(num_topics: usize, base: f64, self_boost: &[f64]) -> Self {
        assert_eq!(self_boost.len(), num_topics);
        let start = DirichletFactor::symmetric(num_topics, base);
        let rows = (0..num_topics)
            .map(|from| {
                let mut prior = vec![base; num_topics + 1];
                prior[from] += self_boost[from];
                DirichletFactor::from_prior(prior)
            })
            .collect();
        TransitionFactor { start, rows }
    }

    pub fn num_topics(&self) -> usize {
        self.rows.len()
    }

    /// Column index of `end` within a topic row.
    pub fn end(&self) -> usize {
        self.rows.len()
    }

    pub fn start_row(&self) -> &DirichletFactor {
        &self.start
    }

    pub fn row(&self, from: usize) -> &DirichletFactor {
        &self.rows[from]
    }

    #[inline]
    pub fn start_log(&self, to: usize) -> f64 {
        self.start.expected_log(to)
    }

    #[inline]
    pub fn log(&self, from: usize, to: usize) -> f64 {
        self.rows[from].expected_log(to)
    }

    #[inline]
    pub fn end_log(&self, from: usize) -> f64 {
        self.rows[from].expected_log(self.rows.len())
    }

    /// `start_counts` has one entry per topic; `row_counts` is row-major
    /// `topics x (topics + 1)`.
    pub fn set_counts(&mut self, start_counts: &[f64], row_counts: &[f64]) {
        let width = self.rows.len() + 1;
        assert_eq!(row_counts.len(), self.rows.len() * width);
        self.start.set_counts(start_counts);
        for (row, counts) in self.rows.iter_mut().zip(row_counts.chunks(width)) {
            row.set_counts(counts);
        }
    }

    pub fn kl_from_prior(&self) -> f64 {
        self.start.kl_from_prior() + self.rows.iter().map(DirichletFactor::kl_from_prior).sum::<f64>()
    }

    pub(crate) fn refresh(&mut self) {
        self.start.refresh();
        for row in &mut self.rows {
            row.refresh();
        }
    }

    /// Posterior-mean table: the start row then one row per topic, each over
    /// topics followed by `end` (zero for the start row).
    pub fn mean_table(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        let mut table = Vec::with_capacity(n + 1);
        let mut start: Vec<f64> = (0..n).map(|t| self.start.mean(t)).collect();
        start.push(0.0);
        table.push(start);
        for row in &self.rows {
            table.push((0..=n).map(|t| row.mean(t)).collect());
        }
        table
    }
}
