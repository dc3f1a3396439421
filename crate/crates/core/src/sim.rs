//! Finite-statistics simulation of a ladder Bell test.
//!
//! Each setting pair `(k, k')` draws its shots from its own ChaCha8 stream,
//! derived from the user seed and the pair's block index, so blocks can be
//! sampled in parallel without changing the result.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, HardyZero, Scenario};
use crate::error::{Error, Result};

/// Generator identification recorded with every counts table.
pub const RNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9;seed_from_u64(seed);stream=block_index";

/// Reported in place of `±∞` when the CHSH estimate has zero standard error.
pub const VIOLATION_SENTINEL: f64 = f64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub k: usize,
    #[serde(rename = "shots")]
    pub shots_per_pair: u64,
    pub seed: u64,
    pub rng: String,
    /// Flat counts in the behavior table order.
    pub counts: Vec<u64>,
}

impl CountsTable {
    pub fn validate(&self) -> Result<()> {
        let s = Scenario::new(self.k)?;
        if self.shots_per_pair == 0 {
            return Err(Error::ZeroShots);
        }
        if self.counts.len() != s.table_len() {
            return Err(Error::WrongLength {
                expected: s.table_len(),
                got: self.counts.len(),
            });
        }
        for (block, chunk) in self.counts.chunks_exact(4).enumerate() {
            let sum: u64 = chunk.iter().sum();
            if sum != self.shots_per_pair {
                return Err(Error::BadCounts {
                    k: block / s.settings(),
                    k_prime: block % s.settings(),
                    sum,
                    shots: self.shots_per_pair,
                });
            }
        }
        Ok(())
    }

    pub fn block(&self, a: usize, b: usize) -> [u64; 4] {
        let start = 4 * (a * (self.k + 1) + b);
        let mut out = [0; 4];
        out.copy_from_slice(&self.counts[start..start + 4]);
        out
    }
}

fn sample_block(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> [u64; 4] {
    // conditional binomial decomposition of the four-outcome multinomial
    let mut out = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (slot, &p) in probs.iter().enumerate().take(3) {
        if remaining == 0 {
            break;
        }
        let conditional = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, conditional)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        out[slot] = draw;
        remaining -= draw;
        mass -= p;
    }
    out[3] = remaining;
    out
}

/// Draws `shots_per_pair` outcomes for every setting pair of `b`.
pub fn sample_counts(b: &Behavior, shots_per_pair: u64, seed: u64) -> Result<CountsTable> {
    if shots_per_pair == 0 {
        return Err(Error::ZeroShots);
    }
    let counts: Vec<u64> = b
        .table()
        .par_chunks_exact(4)
        .enumerate()
        .flat_map_iter(|(block, probs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            sample_block(probs, shots_per_pair, &mut rng)
        })
        .collect();
    Ok(CountsTable {
        k: b.k(),
        shots_per_pair,
        seed,
        rng: RNG_NAME.to_string(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub k: usize,
    pub shots_per_pair: u64,
    pub seed: u64,
    pub rng: String,
    #[serde(skip)]
    pub behavior_hat: Option<Behavior>,
    pub p_k_hat: Estimate,
    pub chsh_hat: Estimate,
    pub ch_plus_hat: Estimate,
    /// `chsh_hat - 2K - 4 ch_plus_hat`; zero only for exactly non-signaling frequencies.
    pub cere3_gap: Estimate,
    /// `(chsh_hat - 2K) / se`, or `±VIOLATION_SENTINEL` when `se = 0`.
    pub violation_sigmas: f64,
    pub zero_terms: Vec<(HardyZero, Estimate)>,
}

impl EstimateReport {
    pub fn behavior_hat(&self) -> &Behavior {
        self.behavior_hat.as_ref().expect("report built from counts")
    }

    /// Rows `quantity,estimate,std_error`.
    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = String::from("quantity,estimate,std_error\n");
        let mut row = |name: &str, e: &Estimate| {
            let _ = writeln!(
                out,
                "{name},{:.p$},{:.p$}",
                e.value,
                e.std_error,
                p = precision
            );
        };
        row("P_K", &self.p_k_hat);
        row("CHSH_K", &self.chsh_hat);
        row("CH_K", &self.ch_plus_hat);
        row("CHSH_K-2K-4CH_K", &self.cere3_gap);
        for (z, e) in &self.zero_terms {
            row(&z.to_string(), e);
        }
        let _ = writeln!(
            out,
            "violation_sigmas,{:.p$},",
            self.violation_sigmas,
            p = precision
        );
        out
    }
}

/// Variance of `Σ c_i p̂_i` for one multinomial block of `n` shots.
fn linear_block_variance(p: [f64; 4], c: [f64; 4], n: f64) -> f64 {
    let mean: f64 = p.iter().zip(&c).map(|(p, c)| p * c).sum();
    let second: f64 = p.iter().zip(&c).map(|(p, c)| p * c * c).sum();
    ((second - mean * mean) / n).max(0.0)
}

fn unit(slot: usize) -> [f64; 4] {
    let mut c = [0.0; 4];
    c[slot] = 1.0;
    c
}

/// Plug-in estimates with delta-method standard errors, blocks independent.
pub fn estimate_report(c: &CountsTable) -> Result<EstimateReport> {
    c.validate()?;
    let n = c.shots_per_pair as f64;
    let kk = c.k;
    let table: Vec<f64> = c.counts.iter().map(|&x| x as f64 / n).collect();
    let b = Behavior::from_table(kk, table)?;

    let single = |a: usize, bb: usize, slot: usize| -> Estimate {
        let p = b.block(a, bb);
        Estimate {
            value: p[slot],
            std_error: linear_block_variance(p, unit(slot), n).sqrt(),
        }
    };

    const PP: usize = 0;
    const PM: usize = 1;
    const MP: usize = 2;
    const MM: usize = 3;

    let p_k_hat = single(kk, kk, PP);

    let corr = [1.0, -1.0, -1.0, 1.0];
    let mut chsh_var = 0.0;
    for ((a, bb), _) in Behavior::chain_pairs(kk) {
        chsh_var += linear_block_variance(b.block(a, bb), corr, n);
    }
    let chsh_value = b.chsh_k();

    // CH_K and the gap 2(CH^- - CH^+) each touch one or two entries per chain block
    let ch = b.ch_values();
    let mut ch_var = 0.0;
    let mut gap_var = 0.0;
    let mut accumulate = |a: usize, bb: usize, plus: [f64; 4], minus: [f64; 4]| {
        let p = b.block(a, bb);
        ch_var += linear_block_variance(p, plus, n);
        let gap: [f64; 4] = std::array::from_fn(|i| 2.0 * (minus[i] - plus[i]));
        gap_var += linear_block_variance(p, gap, n);
    };
    accumulate(kk, kk, unit(PP), unit(MM));
    accumulate(0, 0, unit(PP).map(|v| -v), unit(MM).map(|v| -v));
    for k in 1..=kk {
        accumulate(k, k - 1, unit(PM).map(|v| -v), unit(MP).map(|v| -v));
        accumulate(k - 1, k, unit(MP).map(|v| -v), unit(PM).map(|v| -v));
    }

    let chsh_se = chsh_var.sqrt();
    let excess = chsh_value - 2.0 * kk as f64;
    let violation_sigmas = if chsh_se > 0.0 {
        excess / chsh_se
    } else if excess > 0.0 {
        VIOLATION_SENTINEL
    } else if excess < 0.0 {
        -VIOLATION_SENTINEL
    } else {
        0.0
    };

    let zero_terms = b
        .scenario()
        .hardy_zeros()
        .into_iter()
        .map(|z| {
            let idx = z.index();
            let slot = (idx.a_outcome.index() << 1) | idx.b_outcome.index();
            (z, single(idx.a_setting, idx.b_setting, slot))
        })
        .collect();

    Ok(EstimateReport {
        k: kk,
        shots_per_pair: c.shots_per_pair,
        seed: c.seed,
        rng: c.rng.clone(),
        p_k_hat,
        chsh_hat: Estimate {
            value: chsh_value,
            std_error: chsh_se,
        },
        ch_plus_hat: Estimate {
            value: ch.ch_plus,
            std_error: ch_var.sqrt(),
        },
        cere3_gap: Estimate {
            value: chsh_value - 2.0 * kk as f64 - 4.0 * ch.ch_plus,
            std_error: gap_var.sqrt(),
        },
        violation_sigmas,
        zero_terms,
        behavior_hat: Some(b),
    })
}
