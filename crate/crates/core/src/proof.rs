//! Exact certificates for the all-minus balance
//!
//! ```text
//! P_KK^{--} = P_KK^{++} + P_00^{--} + Σ_k P_{k,k-1}^{-+} + Σ_k P_{k-1,k}^{+-}
//! ```
//!
//! as a linear consequence of the non-signaling equalities and the Hardy
//! zeros. Two independent routes are provided:
//!
//! * [`derive_cere2`] sums `4(K+1)` hand-picked marginal equalities (two
//!   party-symmetric subsets of `2K+2`). The plain sum is twice the target,
//!   so every multiplier is `1/2`; the check is that the combination minus
//!   the target is supported on the Hardy zeros only.
//! * [`span_certificate`] runs sparse exact Gaussian elimination over the
//!   adjacent-pair non-signaling system together with the zero set and
//!   recovers multipliers without any knowledge of the pattern.
//!
//! All arithmetic is over arbitrary-precision rationals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::behavior::{Behavior, NsConstraint, Outcome, Party, ProbIndex, Scenario};
use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest K accepted by [`derive_cere2`].
pub const PROOF_BUDGET: usize = 64;

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Sparse linear form over joint probabilities with an exact constant term.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    pub coefficients: BTreeMap<ProbIndex, Rational>,
    pub constant: Rational,
}

impl LinearExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(idx: ProbIndex, coeff: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(idx, coeff);
        e
    }

    pub fn add_term(&mut self, idx: ProbIndex, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.coefficients.entry(idx).or_insert_with(Rational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.coefficients.remove(&idx);
        }
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: &Rational, other: &LinearExpr) {
        for (idx, c) in &other.coefficients {
            self.add_term(*idx, factor * c);
        }
        self.constant += factor * &other.constant;
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty() && self.constant.is_zero()
    }

    pub fn coefficient(&self, idx: ProbIndex) -> Rational {
        self.coefficients.get(&idx).cloned().unwrap_or_else(Rational::zero)
    }

    /// Drops every term whose probability is in `zeros`.
    pub fn reduce_mod(&self, zeros: &BTreeSet<ProbIndex>) -> LinearExpr {
        LinearExpr {
            coefficients: self
                .coefficients
                .iter()
                .filter(|(idx, _)| !zeros.contains(idx))
                .map(|(idx, c)| (*idx, c.clone()))
                .collect(),
            constant: self.constant.clone(),
        }
    }

    pub fn eval(&self, b: &Behavior) -> f64 {
        self.coefficients
            .iter()
            .map(|(idx, c)| to_f64(c) * b.prob(*idx))
            .sum::<f64>()
            + to_f64(&self.constant)
    }

    /// Sum of absolute coefficients.
    pub fn l1_weight(&self) -> Rational {
        self.coefficients.values().map(|c| c.abs()).sum()
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in &self.coefficients {
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if c.abs() != Rational::one() {
                write!(f, "{}*", c.abs())?;
            }
            write!(f, "{idx}")?;
            first = false;
        }
        if !self.constant.is_zero() {
            write!(f, " + {}", self.constant)?;
        }
        Ok(())
    }
}

/// Short stable identifier of a marginal equality, e.g. `A1+|B0-B2`
/// for `P(A_1=+1 | B_0) - P(A_1=+1 | B_2)`.
pub fn equality_id(c: &NsConstraint) -> String {
    let (local, remote) = match c.party {
        Party::A => ('A', 'B'),
        Party::B => ('B', 'A'),
    };
    let o = match c.outcome {
        Outcome::Plus => '+',
        Outcome::Minus => '-',
    };
    format!(
        "{local}{}{o}|{remote}{}-{remote}{}",
        c.setting, c.remote.0, c.remote.1
    )
}

/// `marginal(remote.0) - marginal(remote.1)` as a linear form.
pub fn equality_expr(c: &NsConstraint) -> LinearExpr {
    let mut e = LinearExpr::zero();
    for (remote, sign) in [(c.remote.0, 1), (c.remote.1, -1)] {
        for other in Outcome::BOTH {
            let idx = match c.party {
                Party::A => ProbIndex::new(c.setting, remote, c.outcome, other),
                Party::B => ProbIndex::new(remote, c.setting, other, c.outcome),
            };
            e.add_term(idx, q(sign));
        }
    }
    e
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsEquality {
    pub id: NsConstraint,
    pub expr: LinearExpr,
}

fn scenario(k_param: usize) -> Result<Scenario> {
    Scenario::new(k_param).map_err(|_| Error::Domain(format!("K must be >= 1, got {k_param}")))
}

/// All elementary non-signaling equalities in adjacent-pair form:
/// remote settings `m` and `m+1`, for both parties, every local setting and
/// outcome. There are `4(K+1)K` of them.
pub fn ns_system(k_param: usize) -> Result<Vec<NsEquality>> {
    let s = scenario(k_param)?;
    let mut out = Vec::with_capacity(4 * s.settings() * k_param);
    for party in [Party::A, Party::B] {
        for outcome in Outcome::BOTH {
            for setting in 0..s.settings() {
                for m in 0..k_param {
                    let id = NsConstraint {
                        party,
                        setting,
                        outcome,
                        remote: (m, m + 1),
                    };
                    out.push(NsEquality {
                        expr: equality_expr(&id),
                        id,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The `2K+1` probabilities that vanish under the Hardy conditions.
pub fn hardy_zero_set(k_param: usize) -> Result<Vec<ProbIndex>> {
    Ok(scenario(k_param)?
        .hardy_zeros()
        .into_iter()
        .map(|z| z.index())
        .collect())
}

/// `lhs - rhs` of the all-minus balance.
pub fn cere2_target(k_param: usize) -> Result<LinearExpr> {
    use Outcome::Minus;
    scenario(k_param)?;
    let kk = k_param;
    let mut e = LinearExpr::term(ProbIndex::new(kk, kk, Minus, Minus), q(1));
    for idx in cere2_rhs(kk) {
        e.add_term(idx, q(-1));
    }
    Ok(e)
}

/// The `2K+2` probabilities on the right of the all-minus balance.
pub fn cere2_rhs(k_param: usize) -> Vec<ProbIndex> {
    use Outcome::{Minus, Plus};
    let kk = k_param;
    let mut out = vec![
        ProbIndex::new(kk, kk, Plus, Plus),
        ProbIndex::new(0, 0, Minus, Minus),
    ];
    for k in 1..=kk {
        out.push(ProbIndex::new(k, k - 1, Minus, Plus));
        out.push(ProbIndex::new(k - 1, k, Plus, Minus));
    }
    out
}

/// One of the two party-mirrored subsets of `2K+2` marginal equalities.
///
/// For the `+1` outcome of local setting `k` the marginal under remote
/// `max(k-1, 0)` is compared with the one under `min(k+1, K)`; for `-1` the
/// order is reversed. The mirrored subset uses party `B`.
pub fn selected_subset(k_param: usize, party: Party) -> Result<Vec<NsConstraint>> {
    scenario(k_param)?;
    let kk = k_param;
    let mut out = Vec::with_capacity(2 * kk + 2);
    for outcome in Outcome::BOTH {
        for setting in 0..=kk {
            let lower = setting.saturating_sub(1);
            let upper = (setting + 1).min(kk);
            let remote = match outcome {
                Outcome::Plus => (lower, upper),
                Outcome::Minus => (upper, lower),
            };
            out.push(NsConstraint {
                party,
                setting,
                outcome,
                remote,
            });
        }
    }
    Ok(out)
}

/// Machine-checked combination of marginal equalities.
#[derive(Debug, Clone)]
pub struct ProofCertificate {
    pub k: usize,
    pub selected: Vec<(NsConstraint, Rational)>,
    /// `Σ multiplier·equality - target`, reduced modulo the Hardy zeros.
    pub residual: LinearExpr,
    /// Coefficients left on the Hardy-zero probabilities before reduction.
    pub zero_support: LinearExpr,
    /// Whether the independent elimination route also certified the target
    /// and reproduced the same combined expression.
    pub elimination_agrees: bool,
}

impl ProofCertificate {
    pub fn verified(&self) -> bool {
        self.residual.is_zero() && self.elimination_agrees
    }

    /// The unreduced combination `Σ multiplier·equality`.
    pub fn combination(&self) -> LinearExpr {
        let mut sum = LinearExpr::zero();
        for (c, m) in &self.selected {
            sum.add_scaled(m, &equality_expr(c));
        }
        sum
    }

    /// Worst-case `|target|` on a behavior whose marginal equalities hold to
    /// `ns_eps` and whose Hardy zeros are at most `zero_eps`.
    pub fn soundness_bound(&self, ns_eps: f64, zero_eps: f64) -> f64 {
        let mult: f64 = self.selected.iter().map(|(_, m)| to_f64(m).abs()).sum();
        mult * ns_eps + to_f64(&self.zero_support.l1_weight()) * zero_eps
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            k: self.k,
            terms: self
                .selected
                .iter()
                .map(|(c, m)| CertificateTerm {
                    equality: equality_id(c),
                    multiplier: RationalString(m.clone()),
                })
                .collect(),
            verified: self.verified(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub k: usize,
    pub terms: Vec<CertificateTerm>,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateTerm {
    pub equality: String,
    pub multiplier: RationalString,
}

/// Serializes as `"p/q"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalString(pub Rational);

impl fmt::Display for RationalString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for RationalString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Builds the pattern certificate and confirms it against the elimination route.
pub fn derive_cere2(k_param: usize) -> Result<ProofCertificate> {
    scenario(k_param)?;
    if k_param > PROOF_BUDGET {
        return Err(Error::BudgetExceeded {
            k: k_param,
            max: PROOF_BUDGET,
        });
    }
    let zeros: BTreeSet<ProbIndex> = hardy_zero_set(k_param)?.into_iter().collect();
    let target = cere2_target(k_param)?;
    let half = Rational::new(BigInt::from(1), BigInt::from(2));

    let selected: Vec<(NsConstraint, Rational)> = [Party::A, Party::B]
        .into_iter()
        .map(|p| selected_subset(k_param, p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .map(|c| (c, half.clone()))
        .collect();

    let mut cert = ProofCertificate {
        k: k_param,
        selected,
        residual: LinearExpr::zero(),
        zero_support: LinearExpr::zero(),
        elimination_agrees: false,
    };
    let mut diff = cert.combination();
    diff.add_scaled(&q(-1), &target);
    cert.residual = diff.reduce_mod(&zeros);
    if !cert.residual.is_zero() {
        return Err(Error::DerivationFailed(format!(
            "pattern combination leaves residual {}",
            cert.residual
        )));
    }
    cert.zero_support = diff;

    let span = span_certificate(k_param)?;
    // Both routes must produce the target once the zero-set terms are dropped,
    // and the pattern route, rewritten in the adjacent basis, must be a solution
    // of the same linear system the elimination solved.
    let adjacent = expand_to_adjacent(&cert.selected);
    let mut pattern_expr = LinearExpr::zero();
    for (c, m) in &adjacent {
        pattern_expr.add_scaled(m, &equality_expr(c));
    }
    cert.elimination_agrees = span.residual.is_zero()
        && pattern_expr.reduce_mod(&zeros) == span.combination_reduced(&zeros)
        && pattern_expr.reduce_mod(&zeros) == target.reduce_mod(&zeros);
    if !cert.elimination_agrees {
        return Err(Error::DerivationFailed(
            "pattern and elimination certificates disagree".into(),
        ));
    }
    Ok(cert)
}

/// Rewrites arbitrary-remote equalities as telescoping sums of adjacent ones.
pub fn expand_to_adjacent(terms: &[(NsConstraint, Rational)]) -> BTreeMap<NsConstraint, Rational> {
    let mut out: BTreeMap<NsConstraint, Rational> = BTreeMap::new();
    for (c, m) in terms {
        let (l, r) = c.remote;
        let (lo, hi, sign) = if l <= r { (l, r, q(1)) } else { (r, l, q(-1)) };
        for step in lo..hi {
            let adj = NsConstraint {
                remote: (step, step + 1),
                ..*c
            };
            let slot = out.entry(adj).or_insert_with(Rational::zero);
            *slot += &sign * m;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Generators used by the elimination route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Ns(NsConstraint),
    Zero(ProbIndex),
}

/// Result of the elimination route: multipliers over the adjacent
/// non-signaling equalities and the Hardy-zero unit vectors.
#[derive(Debug, Clone)]
pub struct SpanCertificate {
    pub k: usize,
    pub multipliers: BTreeMap<Generator, Rational>,
    /// `Σ multiplier·generator - target`; must be the zero form.
    pub residual: LinearExpr,
    pub rank: usize,
}

impl SpanCertificate {
    fn combination_reduced(&self, zeros: &BTreeSet<ProbIndex>) -> LinearExpr {
        let mut sum = LinearExpr::zero();
        for (g, m) in &self.multipliers {
            if let Generator::Ns(c) = g {
                sum.add_scaled(m, &equality_expr(c));
            }
        }
        sum.reduce_mod(zeros)
    }
}

type SparseVec = BTreeMap<usize, Rational>;

struct EchelonRow {
    values: SparseVec,
    combo: BTreeMap<usize, Rational>,
}

fn sub_scaled<K: Ord + Copy>(dst: &mut BTreeMap<K, Rational>, factor: &Rational, src: &BTreeMap<K, Rational>) {
    for (k, v) in src {
        let slot = dst.entry(*k).or_insert_with(Rational::zero);
        *slot -= factor * v;
        if slot.is_zero() {
            dst.remove(k);
        }
    }
}

/// Reduces `values` against the echelon rows, returning the accumulated
/// row multipliers as a generator combination.
fn reduce(
    values: &mut SparseVec,
    combo: &mut BTreeMap<usize, Rational>,
    pivots: &HashMap<usize, EchelonRow>,
) {
    let mut cursor = 0usize;
    loop {
        let next = values
            .range(cursor..)
            .find(|(col, _)| pivots.contains_key(col))
            .map(|(col, v)| (*col, v.clone()));
        let Some((col, factor)) = next else { break };
        let row = &pivots[&col];
        sub_scaled(values, &factor, &row.values);
        sub_scaled(combo, &factor, &row.combo);
        cursor = col + 1;
    }
}

/// Finds multipliers expressing the target as a combination of the adjacent
/// non-signaling equalities and the Hardy-zero unit vectors by exact sparse
/// Gaussian elimination.
pub fn span_certificate(k_param: usize) -> Result<SpanCertificate> {
    span_certificate_with_zeros(k_param, &hardy_zero_set(k_param)?)
}

/// Elimination route with a caller-chosen set of vanishing probabilities.
pub fn span_certificate_with_zeros(k_param: usize, zeros: &[ProbIndex]) -> Result<SpanCertificate> {
    scenario(k_param)?;
    let mut generators: Vec<(Generator, LinearExpr)> = ns_system(k_param)?
        .into_iter()
        .map(|e| (Generator::Ns(e.id), e.expr))
        .collect();
    for &idx in zeros {
        generators.push((Generator::Zero(idx), LinearExpr::term(idx, q(1))));
    }
    let to_sparse = |e: &LinearExpr| -> SparseVec {
        e.coefficients
            .iter()
            .map(|(idx, c)| (idx.flat(k_param), c.clone()))
            .collect()
    };

    let mut pivots: HashMap<usize, EchelonRow> = HashMap::new();
    for (g, (_, expr)) in generators.iter().enumerate() {
        let mut values = to_sparse(expr);
        let mut combo = BTreeMap::from([(g, q(1))]);
        reduce(&mut values, &mut combo, &pivots);
        let Some((&lead, lead_value)) = values.iter().next() else {
            continue;
        };
        let inv = lead_value.recip();
        for v in values.values_mut() {
            *v *= &inv;
        }
        for v in combo.values_mut() {
            *v *= &inv;
        }
        pivots.insert(lead, EchelonRow { values, combo });
    }

    let target = cere2_target(k_param)?;
    let mut values = to_sparse(&target);
    // combo tracks -(multipliers) since reduce subtracts
    let mut neg = BTreeMap::new();
    reduce(&mut values, &mut neg, &pivots);
    if !values.is_empty() {
        return Err(Error::DerivationFailed(format!(
            "target is not in the span ({} coefficients remain)",
            values.len()
        )));
    }
    let multipliers: BTreeMap<Generator, Rational> = neg
        .into_iter()
        .map(|(g, m)| (generators[g].0, -m))
        .collect();

    let mut residual = LinearExpr::zero();
    for (g, m) in &multipliers {
        let expr = match g {
            Generator::Ns(c) => equality_expr(c),
            Generator::Zero(idx) => LinearExpr::term(*idx, q(1)),
        };
        residual.add_scaled(m, &expr);
    }
    residual.add_scaled(&q(-1), &target);
    if !residual.is_zero() {
        return Err(Error::DerivationFailed(format!(
            "elimination multipliers leave residual {residual}"
        )));
    }
    Ok(SpanCertificate {
        k: k_param,
        multipliers,
        residual,
        rank: pivots.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Minus, Plus};

    fn p(a: usize, b: usize, i: Outcome, j: Outcome) -> ProbIndex {
        ProbIndex::new(a, b, i, j)
    }

    #[test]
    fn ns_system_sizes() {
        assert_eq!(ns_system(1).unwrap().len(), 8);
        assert_eq!(ns_system(2).unwrap().len(), 24);
        assert_eq!(ns_system(5).unwrap().len(), 4 * 6 * 5);
        assert!(matches!(ns_system(0), Err(Error::Domain(_))));
        let uniform = Behavior::uniform(3).unwrap();
        for e in ns_system(3).unwrap() {
            assert_eq!(e.expr.eval(&uniform), 0.0);
        }
    }

    #[test]
    fn first_k1_equality() {
        // P00++ + P00+- = P01++ + P01+-
        let eqs = ns_system(1).unwrap();
        let e = &eqs[0].expr;
        assert_eq!(e.coefficient(p(0, 0, Plus, Plus)), q(1));
        assert_eq!(e.coefficient(p(0, 0, Plus, Minus)), q(1));
        assert_eq!(e.coefficient(p(0, 1, Plus, Plus)), q(-1));
        assert_eq!(e.coefficient(p(0, 1, Plus, Minus)), q(-1));
        assert_eq!(e.coefficients.len(), 4);
    }

    #[test]
    fn zero_sets() {
        let z1: BTreeSet<_> = hardy_zero_set(1).unwrap().into_iter().collect();
        let expected: BTreeSet<_> = [
            p(0, 0, Plus, Plus),
            p(0, 1, Minus, Plus),
            p(1, 0, Plus, Minus),
        ]
        .into_iter()
        .collect();
        assert_eq!(z1, expected);
        let z2 = hardy_zero_set(2).unwrap();
        assert!(z2.contains(&p(1, 2, Minus, Plus)));
        assert!(z2.contains(&p(2, 1, Plus, Minus)));
        assert_eq!(z2.len(), 5);
        assert_eq!(hardy_zero_set(7).unwrap().len(), 15);
    }

    /// Written-out relationships after dropping the zeros, `lhs - rhs`.
    fn relation(lhs: &[ProbIndex], rhs: &[ProbIndex]) -> LinearExpr {
        let mut e = LinearExpr::zero();
        for &i in lhs {
            e.add_term(i, q(1));
        }
        for &i in rhs {
            e.add_term(i, q(-1));
        }
        e
    }

    #[test]
    fn k1_subsets_match_hand_derivation() {
        let zeros: BTreeSet<_> = hardy_zero_set(1).unwrap().into_iter().collect();
        let written = [
            relation(&[p(0, 0, Plus, Minus)], &[p(0, 1, Plus, Plus), p(0, 1, Plus, Minus)]),
            relation(&[p(1, 0, Plus, Plus)], &[p(1, 1, Plus, Plus), p(1, 1, Plus, Minus)]),
            relation(&[p(0, 1, Minus, Minus)], &[p(0, 0, Minus, Plus), p(0, 0, Minus, Minus)]),
            relation(
                &[p(1, 1, Minus, Minus), p(1, 1, Minus, Plus)],
                &[p(1, 0, Minus, Plus), p(1, 0, Minus, Minus)],
            ),
            relation(&[p(0, 0, Minus, Plus)], &[p(1, 0, Plus, Plus), p(1, 0, Minus, Plus)]),
            relation(&[p(0, 1, Plus, Plus)], &[p(1, 1, Plus, Plus), p(1, 1, Minus, Plus)]),
            relation(&[p(1, 0, Minus, Minus)], &[p(0, 0, Plus, Minus), p(0, 0, Minus, Minus)]),
            relation(
                &[p(1, 1, Minus, Minus), p(1, 1, Plus, Minus)],
                &[p(0, 1, Plus, Minus), p(0, 1, Minus, Minus)],
            ),
        ];
        let chosen: Vec<_> = selected_subset(1, Party::A)
            .unwrap()
            .into_iter()
            .chain(selected_subset(1, Party::B).unwrap())
            .collect();
        // each subset lists outcome + then -, settings ascending
        for (i, c) in chosen.iter().enumerate() {
            assert_eq!(
                equality_expr(c).reduce_mod(&zeros),
                written[i],
                "relationship {i}: {}",
                equality_id(c)
            );
        }
    }

    #[test]
    fn k2_subset_matches_hand_derivation() {
        let zeros: BTreeSet<_> = hardy_zero_set(2).unwrap().into_iter().collect();
        let a = selected_subset(2, Party::A).unwrap();
        // P10++ = P12++ + P12+-
        assert_eq!(
            equality_expr(&a[1]).reduce_mod(&zeros),
            relation(&[p(1, 0, Plus, Plus)], &[p(1, 2, Plus, Plus), p(1, 2, Plus, Minus)])
        );
        // P12-- = P10-+ + P10--
        assert_eq!(
            equality_expr(&a[4]).reduce_mod(&zeros),
            relation(&[p(1, 2, Minus, Minus)], &[p(1, 0, Minus, Plus), p(1, 0, Minus, Minus)])
        );
        let b = selected_subset(2, Party::B).unwrap();
        // P01++ = P21++ + P21-+
        assert_eq!(
            equality_expr(&b[1]).reduce_mod(&zeros),
            relation(&[p(0, 1, Plus, Plus)], &[p(2, 1, Plus, Plus), p(2, 1, Minus, Plus)])
        );
    }

    #[test]
    fn certificates_small_k() {
        let c1 = derive_cere2(1).unwrap();
        assert_eq!(c1.selected.len(), 8);
        assert!(c1.verified());
        let c2 = derive_cere2(2).unwrap();
        assert_eq!(c2.selected.len(), 12);
        assert!(c2.verified());
        let half = Rational::new(BigInt::from(1), BigInt::from(2));
        assert!(c2.selected.iter().all(|(_, m)| *m == half));
    }

    #[test]
    fn certificate_k6_and_elimination() {
        let c = derive_cere2(6).unwrap();
        assert_eq!(c.selected.len(), 28);
        assert!(c.residual.is_zero());
        let s = span_certificate(6).unwrap();
        assert!(s.residual.is_zero());
    }

    #[test]
    fn budget() {
        assert!(matches!(
            derive_cere2(PROOF_BUDGET + 1),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(derive_cere2(0), Err(Error::Domain(_))));
    }

    #[test]
    fn telescoping_expansion() {
        let c = NsConstraint {
            party: Party::A,
            setting: 1,
            outcome: Minus,
            remote: (3, 0),
        };
        let adj = expand_to_adjacent(&[(c, q(1))]);
        assert_eq!(adj.len(), 3);
        assert!(adj.values().all(|v| *v == q(-1)));
        let mut sum = LinearExpr::zero();
        for (c, m) in &adj {
            sum.add_scaled(m, &equality_expr(c));
        }
        assert_eq!(sum, equality_expr(&c));
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(derive_cere2(1).unwrap().to_json()).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["verified"], true);
        assert_eq!(v["terms"].as_array().unwrap().len(), 8);
        assert_eq!(v["terms"][0]["multiplier"], "1/2");
        assert_eq!(v["terms"][0]["equality"], "A0+|B0-B1");
    }
}
