//! Bipartite two-outcome behaviors for the ladder scenario.
//!
//! A [`Behavior`] stores `P(A_k = i, B_k' = j)` for all settings
//! `k, k' ∈ 0..=K` and outcomes `i, j ∈ {+1, -1}`. The flat layout is settings
//! row-major in `(k, k')` with outcomes ordered `(++, +-, -+, --)` inside each
//! block.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied when a table is constructed.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Negative entries down to this value are treated as rounding noise and clamped.
pub const NEGATIVE_CLAMP: f64 = -1e-15;
/// Default tolerance for the analysis checks (NS, relation residuals).
pub const ANALYSIS_TOL: f64 = 1e-9;
/// Constant `C` in `|CHSH_K - 2K - 4 P_K| <= C ε`, valid whenever every
/// marginal equality holds to `ε` and every Hardy zero is at most `ε`.
///
/// The exact certificate writes the all-minus balance as half the sum of
/// `4(K+1)` marginal differences minus the `2K+1` zero terms, and
/// `CHSH_K - 2K - 4 P_K` is twice that balance minus twice the zero terms,
/// so `C = 2(2(K+1) + 2(2K+1)) = 12K + 8`.
pub fn hardy_relation_constant(k_param: usize) -> f64 {
    12.0 * k_param as f64 + 8.0
}

/// Wire tag for the flat table ordering.
pub const TABLE_ORDER: &str = "kkp-rowmajor;pp,pm,mp,mm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// A single joint probability `P(A_a = i, B_b = j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProbIndex {
    pub a_setting: usize,
    pub b_setting: usize,
    pub a_outcome: Outcome,
    pub b_outcome: Outcome,
}

impl ProbIndex {
    pub fn new(a_setting: usize, b_setting: usize, a_outcome: Outcome, b_outcome: Outcome) -> Self {
        Self {
            a_setting,
            b_setting,
            a_outcome,
            b_outcome,
        }
    }

    /// Exchange the roles of the two parties: `P_{kk'}^{ij} -> P_{k'k}^{ji}`.
    pub fn swapped(self) -> Self {
        Self::new(self.b_setting, self.a_setting, self.b_outcome, self.a_outcome)
    }

    /// Position in the flat table of a scenario with `k_param` ladder steps.
    pub fn flat(self, k_param: usize) -> usize {
        let n = k_param + 1;
        ((self.a_setting * n + self.b_setting) << 2)
            | (self.a_outcome.index() << 1)
            | self.b_outcome.index()
    }
}

impl fmt::Display for ProbIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P[{},{}]^{}{}",
            self.a_setting,
            self.b_setting,
            self.a_outcome.symbol(),
            self.b_outcome.symbol()
        )
    }
}

/// Scenario with `K+1` dichotomic settings per party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    k_param: usize,
}

impl Scenario {
    pub fn new(k_param: usize) -> Result<Self> {
        if k_param == 0 {
            return Err(Error::InvalidScenario(k_param));
        }
        Ok(Self { k_param })
    }

    pub fn k(&self) -> usize {
        self.k_param
    }

    pub fn settings(&self) -> usize {
        self.k_param + 1
    }

    pub fn table_len(&self) -> usize {
        4 * self.settings() * self.settings()
    }

    /// The `2K+1` probabilities required to vanish in the ladder argument.
    pub fn hardy_zeros(&self) -> Vec<HardyZero> {
        let mut out = Vec::with_capacity(2 * self.k_param + 1);
        out.push(HardyZero::Origin);
        for k in 1..=self.k_param {
            out.push(HardyZero::Ascending(k));
            out.push(HardyZero::Descending(k));
        }
        out
    }
}

/// One of the Hardy zero conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HardyZero {
    /// `P(A_0 = +1, B_0 = +1)`
    Origin,
    /// `P(A_k = +1, B_{k-1} = -1)`
    Ascending(usize),
    /// `P(A_{k-1} = -1, B_k = +1)`
    Descending(usize),
}

impl HardyZero {
    pub fn index(self) -> ProbIndex {
        use Outcome::{Minus, Plus};
        match self {
            HardyZero::Origin => ProbIndex::new(0, 0, Plus, Plus),
            HardyZero::Ascending(k) => ProbIndex::new(k, k - 1, Plus, Minus),
            HardyZero::Descending(k) => ProbIndex::new(k - 1, k, Minus, Plus),
        }
    }
}

impl fmt::Display for HardyZero {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardyZero::Origin => write!(f, "P(A0=+1,B0=+1)"),
            HardyZero::Ascending(k) => write!(f, "P(A{}=+1,B{}=-1)", k, k - 1),
            HardyZero::Descending(k) => write!(f, "P(A{}=-1,B{}=+1)", k - 1, k),
        }
    }
}

/// A marginal equality: the marginal of `party`'s `setting` for `outcome` is the
/// same whether the remote party measures `remote.0` or `remote.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NsConstraint {
    pub party: Party,
    pub setting: usize,
    pub outcome: Outcome,
    pub remote: (usize, usize),
}

impl fmt::Display for NsConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (local, remote) = match self.party {
            Party::A => ('A', 'B'),
            Party::B => ('B', 'A'),
        };
        write!(
            f,
            "P({local}{}={}1) under {remote}{} vs {remote}{}",
            self.setting,
            self.outcome.symbol(),
            self.remote.0,
            self.remote.1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub p_k: f64,
    pub max_zero_violation: f64,
    pub zero_terms: Vec<(HardyZero, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsReport {
    pub max_residual: f64,
    pub worst_constraint: NsConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChValues {
    pub ch_plus: f64,
    pub ch_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationResiduals {
    /// `|CHSH_K - 2K - 4 CH_K|`; vanishes on every non-signaling behavior.
    pub cere3_residual: f64,
    /// `|lhs - rhs|` of the all-minus probability balance; vanishes on
    /// non-signaling behaviors that also satisfy the Hardy zeros.
    pub cere2_residual: f64,
}

/// Validated joint-probability table for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    table: Vec<f64>,
}

impl Behavior {
    /// Builds a behavior from a flat table in [`TABLE_ORDER`] order.
    pub fn from_table(k_param: usize, entries: Vec<f64>) -> Result<Self> {
        let scenario = Scenario::new(k_param)?;
        if entries.len() != scenario.table_len() {
            return Err(Error::WrongLength {
                expected: scenario.table_len(),
                got: entries.len(),
            });
        }
        let mut table = entries;
        for (index, p) in table.iter_mut().enumerate() {
            if !p.is_finite() || *p < NEGATIVE_CLAMP {
                return Err(Error::NegativeEntry { index, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let n = scenario.settings();
        for (block, chunk) in table.chunks_exact(4).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    k: block / n,
                    k_prime: block % n,
                    sum,
                });
            }
        }
        Ok(Self { scenario, table })
    }

    /// Builds a behavior by evaluating `f(k, k', i, j)` on every entry.
    pub fn from_fn(k_param: usize, mut f: impl FnMut(ProbIndex) -> f64) -> Result<Self> {
        let scenario = Scenario::new(k_param)?;
        let n = scenario.settings();
        let mut table = Vec::with_capacity(scenario.table_len());
        for a in 0..n {
            for b in 0..n {
                for i in Outcome::BOTH {
                    for j in Outcome::BOTH {
                        table.push(f(ProbIndex::new(a, b, i, j)));
                    }
                }
            }
        }
        Self::from_table(k_param, table)
    }

    /// Convex combination `Σ w_r b_r`. Weights are renormalized to sum to one.
    pub fn mixture(parts: &[(f64, &Behavior)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Domain("empty mixture".into()))?
            .1;
        let k = first.k();
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if total.is_nan() || total <= 0.0 || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::Domain("mixture weights must be non-negative with positive sum".into()));
        }
        let mut table = vec![0.0; first.table.len()];
        for (w, b) in parts {
            if b.k() != k {
                return Err(Error::Domain(format!("mixing K={} with K={}", k, b.k())));
            }
            for (acc, p) in table.iter_mut().zip(&b.table) {
                *acc += w / total * p;
            }
        }
        Self::from_table(k, table)
    }

    pub fn uniform(k_param: usize) -> Result<Self> {
        Self::from_fn(k_param, |_| 0.25)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn k(&self) -> usize {
        self.scenario.k()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn into_table(self) -> Vec<f64> {
        self.table
    }

    pub fn prob(&self, idx: ProbIndex) -> f64 {
        self.table[idx.flat(self.k())]
    }

    /// Shorthand for `P(A_a = i, B_b = j)`; settings must be in range.
    pub fn p(&self, a: usize, b: usize, i: Outcome, j: Outcome) -> f64 {
        self.prob(ProbIndex::new(a, b, i, j))
    }

    pub fn block(&self, a: usize, b: usize) -> [f64; 4] {
        let start = ProbIndex::new(a, b, Outcome::Plus, Outcome::Plus).flat(self.k());
        let mut out = [0.0; 4];
        out.copy_from_slice(&self.table[start..start + 4]);
        out
    }

    fn check_setting(&self, s: usize) -> Result<()> {
        if s > self.k() {
            return Err(Error::SettingOutOfRange {
                setting: s,
                max: self.k(),
            });
        }
        Ok(())
    }

    /// `E(A_k, B_k') = P^{++} + P^{--} - P^{+-} - P^{-+}`.
    pub fn correlation(&self, k: usize, k_prime: usize) -> Result<f64> {
        self.check_setting(k)?;
        self.check_setting(k_prime)?;
        Ok(self.corr(k, k_prime))
    }

    fn corr(&self, a: usize, b: usize) -> f64 {
        let [pp, pm, mp, mm] = self.block(a, b);
        (pp + mm) - (pm + mp)
    }

    /// The `2K+2` setting pairs of the chained sum, each with its sign.
    pub fn chain_pairs(k_param: usize) -> Vec<((usize, usize), f64)> {
        let mut pairs = Vec::with_capacity(2 * k_param + 2);
        for k in 1..=k_param {
            pairs.push(((k, k - 1), 1.0));
        }
        for k in 1..=k_param {
            pairs.push(((k - 1, k), 1.0));
        }
        pairs.push(((k_param, k_param), 1.0));
        pairs.push(((0, 0), -1.0));
        pairs
    }

    /// Chained CHSH sum `Σ E(A_k,B_{k-1}) + Σ E(A_{k-1},B_k) + E(A_K,B_K) - E(A_0,B_0)`.
    pub fn chsh_k(&self) -> f64 {
        Self::chain_pairs(self.k())
            .into_iter()
            .map(|((a, b), s)| s * self.corr(a, b))
            .sum()
    }

    /// Left-hand sides of the all-plus and all-minus chained CH expressions.
    pub fn ch_values(&self) -> ChValues {
        use Outcome::{Minus, Plus};
        let kk = self.k();
        let mut ch_plus = self.p(kk, kk, Plus, Plus) - self.p(0, 0, Plus, Plus);
        let mut ch_minus = self.p(kk, kk, Minus, Minus) - self.p(0, 0, Minus, Minus);
        for k in 1..=kk {
            ch_plus -= self.p(k, k - 1, Plus, Minus) + self.p(k - 1, k, Minus, Plus);
            ch_minus -= self.p(k, k - 1, Minus, Plus) + self.p(k - 1, k, Plus, Minus);
        }
        ChValues { ch_plus, ch_minus }
    }

    /// Marginal of `party`'s `setting` for `outcome` when the remote party
    /// measures `remote`.
    pub fn marginal(&self, party: Party, setting: usize, outcome: Outcome, remote: usize) -> f64 {
        Outcome::BOTH
            .iter()
            .map(|&o| match party {
                Party::A => self.p(setting, remote, outcome, o),
                Party::B => self.p(remote, setting, o, outcome),
            })
            .sum()
    }

    /// Largest violation of the marginal equalities over all remote pairs.
    pub fn ns_residual(&self) -> NsReport {
        let n = self.scenario.settings();
        let mut worst = NsReport {
            max_residual: 0.0,
            worst_constraint: NsConstraint {
                party: Party::A,
                setting: 0,
                outcome: Outcome::Plus,
                remote: (0, 1),
            },
        };
        for party in [Party::A, Party::B] {
            for setting in 0..n {
                for outcome in Outcome::BOTH {
                    let m: Vec<f64> = (0..n)
                        .map(|r| self.marginal(party, setting, outcome, r))
                        .collect();
                    let (mut lo, mut hi) = (0, 0);
                    for r in 1..n {
                        if m[r] < m[lo] {
                            lo = r;
                        }
                        if m[r] > m[hi] {
                            hi = r;
                        }
                    }
                    let spread = m[hi] - m[lo];
                    if spread > worst.max_residual {
                        worst = NsReport {
                            max_residual: spread,
                            worst_constraint: NsConstraint {
                                party,
                                setting,
                                outcome,
                                remote: (lo.min(hi), lo.max(hi)),
                            },
                        };
                    }
                }
            }
        }
        worst
    }

    pub fn hardy_report(&self) -> HardyReport {
        let kk = self.k();
        let zero_terms: Vec<(HardyZero, f64)> = self
            .scenario
            .hardy_zeros()
            .into_iter()
            .map(|z| (z, self.prob(z.index())))
            .collect();
        let max_zero_violation = zero_terms.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        HardyReport {
            p_k: self.p(kk, kk, Outcome::Plus, Outcome::Plus),
            max_zero_violation,
            zero_terms,
        }
    }

    /// Both sides of the all-minus balance
    /// `P_KK^{--} = P_KK^{++} + P_00^{--} + Σ P_{k,k-1}^{-+} + Σ P_{k-1,k}^{+-}`.
    pub fn cere2_sides(&self) -> (f64, f64) {
        use Outcome::{Minus, Plus};
        let kk = self.k();
        let lhs = self.p(kk, kk, Minus, Minus);
        let mut rhs = self.p(kk, kk, Plus, Plus) + self.p(0, 0, Minus, Minus);
        for k in 1..=kk {
            rhs += self.p(k, k - 1, Minus, Plus) + self.p(k - 1, k, Plus, Minus);
        }
        (lhs, rhs)
    }

    pub fn relation_residuals(&self) -> RelationResiduals {
        let ch = self.ch_values();
        let (lhs, rhs) = self.cere2_sides();
        RelationResiduals {
            cere3_residual: (self.chsh_k() - 2.0 * self.k() as f64 - 4.0 * ch.ch_plus).abs(),
            cere2_residual: (lhs - rhs).abs(),
        }
    }

    /// The party-exchanged behavior `P'_{kk'}^{ij} = P_{k'k}^{ji}`.
    pub fn swap_parties(&self) -> Behavior {
        let table = (0..self.table.len())
            .map(|flat| {
                let idx = index_of_flat(self.k(), flat);
                self.prob(idx.swapped())
            })
            .collect();
        Behavior {
            scenario: self.scenario,
            table,
        }
    }

    pub fn to_json_value(&self) -> BehaviorJson {
        BehaviorJson {
            k: self.k(),
            order: TABLE_ORDER.to_string(),
            table: self.table.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("behavior serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BehaviorJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    /// One row per setting pair: `k,kp,pp,pm,mp,mm`.
    pub fn to_csv(&self, precision: usize) -> String {
        let n = self.scenario.settings();
        let mut out = String::from("k,kp,pp,pm,mp,mm\n");
        for a in 0..n {
            for b in 0..n {
                let [pp, pm, mp, mm] = self.block(a, b);
                let _ = writeln!(
                    out,
                    "{a},{b},{pp:.p$},{pm:.p$},{mp:.p$},{mm:.p$}",
                    p = precision
                );
            }
        }
        out
    }
}

/// Inverse of [`ProbIndex::flat`].
pub fn index_of_flat(k_param: usize, flat: usize) -> ProbIndex {
    let n = k_param + 1;
    let block = flat >> 2;
    let pick = |bit: usize| if flat & bit == 0 { Outcome::Plus } else { Outcome::Minus };
    ProbIndex::new(block / n, block % n, pick(2), pick(1))
}

/// Wire form of a behavior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorJson {
    pub k: usize,
    pub order: String,
    pub table: Vec<f64>,
}

impl TryFrom<BehaviorJson> for Behavior {
    type Error = Error;

    fn try_from(raw: BehaviorJson) -> Result<Self> {
        if raw.order != TABLE_ORDER {
            return Err(Error::UnsupportedOrder(raw.order));
        }
        Behavior::from_table(raw.k, raw.table)
    }
}
