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

//! Model distributions, hyperparameters and the variational state.

mod dirichlet;
mod hyperparams;
pub mod special;
mod state;
mod topics;

pub use dirichlet::{DirichletFactor, TransitionFactor};
pub use hyperparams::{Hyperparameters, Schedule};
pub use state::{build_priors, init_state, Layout, VariationalState, STATE_FORMAT_VERSION};
pub(crate) use state::snippet_seed;
pub use topics::{TopicSet, WordTopic};


/// `E[log theta_k]` under a Dirichlet factor.
pub fn expected_log(factor: &DirichletFactor, element: usize) -> f64 {
    factor.expected_log(element)
}
