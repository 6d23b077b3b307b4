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

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::WordLabel;

/// Which distribution emits a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WordTopic {
    Aspect = 0,
    Value = 1,
    Background = 2,
    Ignore = 3,
}

impl WordTopic {
    pub const ALL: [WordTopic; 4] = [
        WordTopic::Aspect,
        WordTopic::Value,
        WordTopic::Background,
        WordTopic::Ignore,
    ];

    pub fn short(self) -> &'static str {
        match self {
            WordTopic::Aspect => "A",
            WordTopic::Value => "V",
            WordTopic::Background => "B",
            WordTopic::Ignore => "I",
        }
    }

    /// Evaluation label; ignored words count as background.
    pub fn label(self) -> WordLabel {
        match self {
            WordTopic::Aspect => WordLabel::A,
            WordTopic::Value => WordLabel::V,
            WordTopic::Background | WordTopic::Ignore => WordLabel::B,
        }
    }
}

impl fmt::Display for WordTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// The enabled word topics in a fixed order (A, V?, B, I?).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSet {
    topics: Vec<WordTopic>,
    #[serde(skip)]
    slots: [Option<usize>; 4],
}

impl TopicSet {
    pub fn new(with_value: bool, with_ignore: bool) -> Self {
        let topics = WordTopic::ALL
            .into_iter()
            .filter(|t| match t {
                WordTopic::Value => with_value,
                WordTopic::Ignore => with_ignore,
                _ => true,
            })
            .collect();
        Self::from_topics(topics)
    }

    pub fn from_topics(topics: Vec<WordTopic>) -> Self {
        let mut slots = [None; 4];
        for (i, &t) in topics.iter().enumerate() {
            slots[t as usize] = Some(i);
        }
        TopicSet { topics, slots }
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topics(&self) -> &[WordTopic] {
        &self.topics
    }

    pub fn topic(&self, slot: usize) -> WordTopic {
        self.topics[slot]
    }

    pub fn slot(&self, topic: WordTopic) -> Option<usize> {
        self.slots[topic as usize]
    }

    pub fn contains(&self, topic: WordTopic) -> bool {
        self.slot(topic).is_some()
    }

    pub(crate) fn rebuild(&mut self) {
        *self = Self::from_topics(std::mem::take(&mut self.topics));
    }
}
