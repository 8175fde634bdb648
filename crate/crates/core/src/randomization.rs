//! Sequential treatment assignment: simple randomization, stratified permuted
//! blocks and Pocock-Simon minimization.
//!
//! Each patient is described by a vector of margin levels `z`, one entry per
//! discrete baseline factor. Permuted blocks stratify on the joint level of
//! `z`; minimization balances each margin separately.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Simple,
    PermutedBlock,
    Minimization,
}

impl SchemeKind {
    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::Simple => "simple",
            SchemeKind::PermutedBlock => "permuted_block",
            SchemeKind::Minimization => "minimization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Target proportion assigned to arm 1.
    pub pi: f64,
    pub block_size: usize,
    /// Probability of assigning the arm that minimizes imbalance.
    pub p_prefer: f64,
    /// Number of levels of each margin of `z`.
    pub margins: Vec<usize>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Simple,
            pi: 0.5,
            block_size: 4,
            p_prefer: 0.8,
            margins: vec![2, 3],
        }
    }
}

impl SchemeConfig {
    pub fn simple(pi: f64) -> Self {
        Self {
            kind: SchemeKind::Simple,
            pi,
            ..Self::default()
        }
    }

    pub fn permuted_block(pi: f64, block_size: usize) -> Self {
        Self {
            kind: SchemeKind::PermutedBlock,
            pi,
            block_size,
            ..Self::default()
        }
    }

    pub fn minimization(p_prefer: f64) -> Self {
        Self {
            kind: SchemeKind::Minimization,
            p_prefer,
            ..Self::default()
        }
    }

    pub fn with_margins(mut self, margins: Vec<usize>) -> Self {
        self.margins = margins;
        self
    }

    /// Number of arm-1 slots per block.
    pub fn block_ones(&self) -> usize {
        (self.block_size as f64 * self.pi).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidConfig(format!("pi = {} not in (0, 1)", self.pi)));
        }
        if self.margins.contains(&0) {
            return Err(Error::InvalidConfig("margins need at least one level".into()));
        }
        match self.kind {
            SchemeKind::Simple => {}
            SchemeKind::PermutedBlock => {
                let b = self.block_size;
                if b == 0 || !b.is_multiple_of(2) {
                    return Err(Error::InvalidConfig(format!(
                        "block size {b} must be a positive even integer"
                    )));
                }
                let ones = b as f64 * self.pi;
                if (ones - ones.round()).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "block size {b} times pi {} is not an integer",
                        self.pi
                    )));
                }
            }
            SchemeKind::Minimization => {
                if !(0.5..=1.0).contains(&self.p_prefer) {
                    return Err(Error::InvalidConfig(format!(
                        "p_prefer = {} not in [0.5, 1]",
                        self.p_prefer
                    )));
                }
                if self.pi != 0.5 {
                    return Err(Error::InvalidConfig(
                        "minimization balances arms 1:1 and requires pi = 0.5".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Mutable state of a running assignment sequence.
#[derive(Debug, Clone)]
pub struct AssignmentState<R = StreamRng> {
    config: SchemeConfig,
    rng: R,
    /// Remaining slots of the current block, per joint level.
    blocks: HashMap<Vec<usize>, Vec<u8>>,
    /// `counts[m][level] = [arm0, arm1]`.
    counts: Vec<Vec<[u64; 2]>>,
}

impl<R: Rng> AssignmentState<R> {
    pub fn new(config: SchemeConfig, rng: R) -> Result<Self> {
        config.validate()?;
        let counts = config.margins.iter().map(|&l| vec![[0u64; 2]; l]).collect();
        Ok(Self {
            config,
            rng,
            blocks: HashMap::new(),
            counts,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Arm counts per margin level.
    pub fn marginal_counts(&self) -> &[Vec<[u64; 2]>] {
        &self.counts
    }

    fn check(&self, z: &[usize]) -> Result<()> {
        if z.len() != self.config.margins.len() {
            return Err(Error::InvalidMarginVector {
                expected: self.config.margins.len(),
                got: z.len(),
            });
        }
        for (m, (&level, &levels)) in z.iter().zip(&self.config.margins).enumerate() {
            if level >= levels {
                return Err(Error::InvalidMarginLevel {
                    margin: m,
                    level,
                    levels,
                });
            }
        }
        Ok(())
    }

    pub fn assign_next(&mut self, z: &[usize]) -> Result<u8> {
        self.check(z)?;
        let arm = match self.config.kind {
            SchemeKind::Simple => self.rng.random_bool(self.config.pi) as u8,
            SchemeKind::PermutedBlock => self.next_block_slot(z),
            SchemeKind::Minimization => self.minimize(z),
        };
        for (m, &level) in z.iter().enumerate() {
            self.counts[m][level][arm as usize] += 1;
        }
        Ok(arm)
    }

    fn next_block_slot(&mut self, z: &[usize]) -> u8 {
        let size = self.config.block_size;
        let ones = self.config.block_ones();
        let queue = self.blocks.entry(z.to_vec()).or_default();
        if queue.is_empty() {
            queue.extend((0..size).map(|i| u8::from(i < ones)));
            queue.shuffle(&mut self.rng);
        }
        queue.pop().expect("block refilled above")
    }

    /// Sum over margins of `|n1 - n0|` after a hypothetical assignment.
    pub fn imbalance_if(&self, z: &[usize], arm: u8) -> u64 {
        z.iter()
            .enumerate()
            .map(|(m, &level)| {
                let [c0, c1] = self.counts[m][level];
                let (c0, c1) = if arm == 1 { (c0, c1 + 1) } else { (c0 + 1, c1) };
                c0.abs_diff(c1)
            })
            .sum()
    }

    fn minimize(&mut self, z: &[usize]) -> u8 {
        let imb1 = self.imbalance_if(z, 1);
        let imb0 = self.imbalance_if(z, 0);
        let preferred = match imb1.cmp(&imb0) {
            std::cmp::Ordering::Less => 1u8,
            std::cmp::Ordering::Greater => 0u8,
            std::cmp::Ordering::Equal => return self.rng.random_bool(0.5) as u8,
        };
        if self.rng.random_bool(self.config.p_prefer) {
            preferred
        } else {
            1 - preferred
        }
    }
}

/// Assigns a whole sequence with the randomization stream of `seed`.
pub fn assign_all(config: &SchemeConfig, z_sequence: &[Vec<usize>], seed: u64) -> Result<Vec<u8>> {
    let mut state = AssignmentState::new(config.clone(), stream(seed, 0, Purpose::Randomization))?;
    z_sequence.iter().map(|z| state.assign_next(z)).collect()
}
