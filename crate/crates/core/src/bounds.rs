//! Bound curves for the chained CHSH sum and the Hardy fraction, local
//! deterministic strategies, the extremal non-signaling box, and local
//! polytope membership.

use std::f64::consts::PI;
use std::fmt::Write as _;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, Outcome, Scenario};
use crate::error::{Error, Result};
use crate::quantum::p_k_qm_unchecked;

/// Largest K accepted by [`lr_max_chsh`].
pub const LR_ENUMERATION_BUDGET: usize = 12;
/// Largest K accepted by [`local_membership`].
pub const MEMBERSHIP_BUDGET: usize = 5;
/// Decision tolerance on the L1 distance to the local polytope.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Absolute tolerance in `x` for [`maximize_hardy`].
pub const HARDY_X_TOL: f64 = 1e-10;
/// Hardy fraction reached by the extremal box for every K.
pub const GPT_LIMIT: f64 = 0.5;
/// Largest K accepted by [`fig1_dataset`].
pub const FIG1_MAX_K: usize = 10_000;

fn scenario(k_param: usize) -> Result<Scenario> {
    Scenario::new(k_param).map_err(|_| Error::Domain(format!("K must be >= 1, got {k_param}")))
}

/// Quantum maximum of the chained CHSH sum, `2(K+1) cos(π / 2(K+1))`.
pub fn tsirelson_bound(k_param: usize) -> Result<f64> {
    scenario(k_param)?;
    let n = (k_param + 1) as f64;
    Ok(2.0 * n * (PI / (2.0 * n)).cos())
}

/// Upper limit on the Hardy fraction, `(tsirelson - 2K) / 4`.
pub fn upper_limit_l(k_param: usize) -> Result<f64> {
    Ok((tsirelson_bound(k_param)? - 2.0 * k_param as f64) / 4.0)
}

/// One local deterministic assignment. Bit `k` of `a_bits` set means `A_k = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub k: usize,
    pub a_bits: u64,
    pub b_bits: u64,
}

impl DeterministicStrategy {
    pub fn new(k_param: usize, a_bits: u64, b_bits: u64) -> Result<Self> {
        scenario(k_param)?;
        if k_param >= 32 {
            return Err(Error::BudgetExceeded { k: k_param, max: 31 });
        }
        let mask = (1u64 << (k_param + 1)) - 1;
        Ok(Self {
            k: k_param,
            a_bits: a_bits & mask,
            b_bits: b_bits & mask,
        })
    }

    /// Enumeration order: `a_bits` is the high half.
    pub fn encoding(&self) -> u64 {
        (self.a_bits << (self.k + 1)) | self.b_bits
    }

    pub fn from_encoding(k_param: usize, encoding: u64) -> Result<Self> {
        Self::new(k_param, encoding >> (k_param + 1), encoding)
    }

    pub fn a_outcome(&self, setting: usize) -> Outcome {
        bit_outcome(self.a_bits, setting)
    }

    pub fn b_outcome(&self, setting: usize) -> Outcome {
        bit_outcome(self.b_bits, setting)
    }

    pub fn behavior(&self) -> Behavior {
        Behavior::from_fn(self.k, |ix| {
            if ix.a_outcome == self.a_outcome(ix.a_setting)
                && ix.b_outcome == self.b_outcome(ix.b_setting)
            {
                1.0
            } else {
                0.0
            }
        })
        .expect("deterministic tables are normalized")
    }

    /// Chained CHSH value of this strategy, computed from outcome signs.
    pub fn chsh(&self) -> i64 {
        chsh_from_bits(self.k, self.a_bits, self.b_bits)
    }
}

fn bit_outcome(bits: u64, setting: usize) -> Outcome {
    if bits >> setting & 1 == 1 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

fn chsh_from_bits(k_param: usize, a_bits: u64, b_bits: u64) -> i64 {
    // E(A_a, B_b) = +1 when the bits agree, -1 otherwise
    let corr = |a: usize, b: usize| -> i64 {
        if (a_bits >> a ^ b_bits >> b) & 1 == 0 {
            1
        } else {
            -1
        }
    };
    let mut total = corr(k_param, k_param) - corr(0, 0);
    for k in 1..=k_param {
        total += corr(k, k - 1) + corr(k - 1, k);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrMax {
    pub max_value: f64,
    pub witness: DeterministicStrategy,
}

pub fn lr_max_chsh(k_param: usize) -> Result<LrMax> {
    lr_max_chsh_with_budget(k_param, LR_ENUMERATION_BUDGET)
}

/// Exhaustive maximum of the chained CHSH sum over all `2^{2(K+1)}`
/// deterministic strategies. Ties go to the smallest encoding.
pub fn lr_max_chsh_with_budget(k_param: usize, budget: usize) -> Result<LrMax> {
    scenario(k_param)?;
    if k_param > budget || k_param >= 31 {
        return Err(Error::BudgetExceeded {
            k: k_param,
            max: budget.min(30),
        });
    }
    let width = k_param + 1;
    let mask = (1u64 << width) - 1;
    let (best, encoding) = (0..1u64 << (2 * width))
        .into_par_iter()
        .map(|enc| (chsh_from_bits(k_param, enc >> width, enc & mask), enc))
        .reduce(
            || (i64::MIN, u64::MAX),
            |l, r| {
                if l.0 > r.0 || (l.0 == r.0 && l.1 < r.1) {
                    l
                } else {
                    r
                }
            },
        );
    let witness = DeterministicStrategy::from_encoding(k_param, encoding)?;
    // cross-check through the full table
    let via_table = witness.behavior().chsh_k();
    if via_table != best as f64 {
        return Err(Error::DerivationFailed(format!(
            "witness evaluates to {via_table} via its table but {best} via its bits"
        )));
    }
    Ok(LrMax {
        max_value: best as f64,
        witness,
    })
}

/// Generalized PR box: perfectly correlated outcomes on every setting pair
/// except `(0,0)`, where they are perfectly anti-correlated.
pub fn extremal_ns_box(k_param: usize) -> Result<Behavior> {
    Behavior::from_fn(k_param, |ix| {
        let same = ix.a_outcome == ix.b_outcome;
        let origin = ix.a_setting == 0 && ix.b_setting == 0;
        if same != origin {
            0.5
        } else {
            0.0
        }
    })
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyMax {
    pub x_star: f64,
    pub p_max: f64,
}

/// Maximum of the quantum Hardy fraction over the Schmidt parameter.
pub fn maximize_hardy(k_param: usize) -> Result<HardyMax> {
    scenario(k_param)?;
    let (x_star, p_max) =
        golden_section_max(|x| p_k_qm_unchecked(x, k_param), 0.0, 1.0, HARDY_X_TOL);
    Ok(HardyMax { x_star, p_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRecord {
    pub k: usize,
    pub lr_bound: f64,
    pub tsirelson: f64,
    pub algebraic: f64,
    pub l_k: f64,
    pub p_max_qm: f64,
    pub x_star: f64,
    pub gpt_limit: f64,
}

pub fn bounds_record(k_param: usize) -> Result<BoundsRecord> {
    let hardy = maximize_hardy(k_param)?;
    Ok(BoundsRecord {
        k: k_param,
        lr_bound: 2.0 * k_param as f64,
        tsirelson: tsirelson_bound(k_param)?,
        algebraic: 2.0 * k_param as f64 + 2.0,
        l_k: upper_limit_l(k_param)?,
        p_max_qm: hardy.p_max,
        x_star: hardy.x_star,
        gpt_limit: GPT_LIMIT,
    })
}

/// One [`BoundsRecord`] per K in `1..=k_max`, ordered by K.
pub fn fig1_dataset(k_max: usize) -> Result<Vec<BoundsRecord>> {
    if !(1..=FIG1_MAX_K).contains(&k_max) {
        return Err(Error::Domain(format!(
            "k_max must lie in 1..={FIG1_MAX_K}, got {k_max}"
        )));
    }
    (1..=k_max).into_par_iter().map(bounds_record).collect()
}

pub const FIG1_CSV_HEADER: &str = "K,L_K,Pmax_QM,x_star,GPT_limit,LR,Tsirelson,Algebraic";

pub fn fig1_csv(records: &[BoundsRecord], precision: usize) -> String {
    let mut out = String::from(FIG1_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$},{:.p$}",
            r.k,
            r.l_k,
            r.p_max_qm,
            r.x_star,
            r.gpt_limit,
            r.lr_bound,
            r.tsirelson,
            r.algebraic,
            p = precision
        );
    }
    out
}

/// Convex mixture of `parts` uniformly drawn deterministic strategies with
/// weights sampled uniformly from `[0, 1)` and renormalized. Always local.
pub fn random_local_mixture<R: Rng + ?Sized>(k_param: usize, parts: usize, rng: &mut R) -> Result<Behavior> {
    scenario(k_param)?;
    let width = k_param + 1;
    let vertices: Vec<(f64, Behavior)> = (0..parts.max(1))
        .map(|_| {
            let enc = rng.random_range(0..1u64 << (2 * width));
            let s = DeterministicStrategy::from_encoding(k_param, enc)?;
            Ok((rng.random::<f64>() + f64::EPSILON, s.behavior()))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<(f64, &Behavior)> = vertices.iter().map(|(w, b)| (*w, b)).collect();
    Behavior::mixture(&refs)
}

/// Convex mixture of random deterministic strategies, the extremal box and the
/// uniform behavior, all with uniform random weights. Always non-signaling.
pub fn random_ns_mixture<R: Rng + ?Sized>(k_param: usize, parts: usize, rng: &mut R) -> Result<Behavior> {
    let local = random_local_mixture(k_param, parts, rng)?;
    let pr = extremal_ns_box(k_param)?;
    let uniform = Behavior::uniform(k_param)?;
    let (w_local, w_pr, w_uniform) = (
        rng.random::<f64>() * parts.max(1) as f64,
        rng.random::<f64>(),
        rng.random::<f64>(),
    );
    Behavior::mixture(&[(w_local + f64::EPSILON, &local), (w_pr, &pr), (w_uniform, &uniform)])
}

/// L1 distance from `b` to the local polytope, by linear programming over the
/// convex hull of all deterministic strategies.
pub fn local_distance(b: &Behavior) -> Result<f64> {
    let k_param = b.k();
    if k_param > MEMBERSHIP_BUDGET {
        return Err(Error::BudgetExceeded {
            k: k_param,
            max: MEMBERSHIP_BUDGET,
        });
    }
    let width = k_param + 1;
    let n_entries = b.table().len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut rows: Vec<Vec<(microlp::Variable, f64)>> = vec![Vec::new(); n_entries];
    let mut normalization = Vec::with_capacity(1 << (2 * width));
    for enc in 0..1u64 << (2 * width) {
        let w = problem.add_var(0.0, (0.0, f64::INFINITY));
        normalization.push((w, 1.0));
        let s = DeterministicStrategy::from_encoding(k_param, enc)?;
        for a in 0..width {
            for bb in 0..width {
                let flat = crate::behavior::ProbIndex::new(a, bb, s.a_outcome(a), s.b_outcome(bb))
                    .flat(k_param);
                rows[flat].push((w, 1.0));
            }
        }
    }
    for (row, &target) in rows.iter_mut().zip(b.table()) {
        let over = problem.add_var(1.0, (0.0, f64::INFINITY));
        let under = problem.add_var(1.0, (0.0, f64::INFINITY));
        row.push((over, 1.0));
        row.push((under, -1.0));
        problem.add_constraint(row.as_slice(), ComparisonOp::Eq, target);
    }
    problem.add_constraint(normalization.as_slice(), ComparisonOp::Eq, 1.0);
    let outcome = problem.solve().map_err(|e| Error::Solver(e.to_string()))?;
    let solution = outcome
        .into_solution()
        .map_err(|_| Error::Solver("solve interrupted".into()))?;
    Ok(solution.objective().max(0.0))
}

/// True iff `b` lies in the local polytope within [`MEMBERSHIP_TOL`].
pub fn local_membership(b: &Behavior) -> Result<bool> {
    Ok(local_distance(b)? <= MEMBERSHIP_TOL)
}
