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

//! Joint aspect clustering and value assignment for short opinion snippets.
//!
//! Snippets are grouped by entity. Each snippet gets one latent aspect and one
//! latent value type; each word gets a latent word topic (aspect, value,
//! background and optionally ignore) drawn from a first-order Markov chain.
//! Posteriors are fit with mean-field variational inference.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod generator;
pub mod inference;
pub mod model;
pub mod report;

pub use error::{Error, Result};
