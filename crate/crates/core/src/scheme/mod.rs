//! Grid-partition SDMM scheme with evaluation points at powers of a
//! primitive root of unity.
//!
//! `A` is cut into a `t x s` grid and `B` into an `s x d` grid. The user
//! builds two Laurent polynomials
//!
//! ```text
//! f_A(x) = sum_{i,j} A_{i,j} x^{(i-1)s + j - 1}       + sum_k R_k x^{ts + k - 1}
//! f_B(x) = sum_{i,j} B_{i,j} x^{(1-j)(ts+T) + (1-i)}  + sum_k S_k x^{-d(ts+T) - k + 1}
//! ```
//!
//! and sends `f_A(alpha^n), f_B(alpha^n)` to server `n`. Block `(i, j)` of
//! the product sits at exponent `(i-1)s + (1-j)(ts+T)` of `h = f_A f_B` and
//! is recovered by a weighted root-of-unity sum over all `N` responses.
//!
//! Indices in this module are zero-based unless a doc comment says otherwise;
//! server indices are one-based (`1..=N`) to match evaluation points `alpha^n`.

mod audit;
mod codec;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::field::{self, FieldError, PrimeField, RootOfUnity};
use crate::grid::GridError;

pub use audit::{exhaustive_security_check, mask_matrix, Side, DEFAULT_ENUMERATION_BUDGET};
pub use codec::{decode, encode, encode_with_masks, server_multiply, Masks, Share, ShareSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("invalid partition parameters: {0}")]
    InvalidParams(String),
    #[error("N = {n} is not a valid evaluation order: {violation}")]
    InvalidN { n: u64, violation: Violation },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("expected {expected} server products, got {actual}")]
    ProductCount { expected: usize, actual: usize },
    #[error("server index {index} out of range 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },
    #[error("server index {0} listed twice")]
    DuplicateIndex(u64),
    #[error("too many indices: {got} given, at most {max} allowed")]
    TooManyIndices { got: usize, max: usize },
    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Grid partition `(t, s, d)` and collusion tolerance `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartitionParams {
    /// `t`: row bands of `A` (and of the product).
    pub row_parts: usize,
    /// `s`: column bands of `A`, row bands of `B`.
    pub inner_parts: usize,
    /// `d`: column bands of `B` (and of the product).
    pub col_parts: usize,
    /// `T`: number of servers that may collude.
    pub security: usize,
}

impl PartitionParams {
    pub fn new(t: usize, s: usize, d: usize, security: usize) -> Result<Self, SchemeError> {
        if t == 0 || s == 0 || d == 0 {
            return Err(SchemeError::InvalidParams(format!(
                "t, s, d must be positive (got t={t}, s={s}, d={d})"
            )));
        }
        if security == 0 {
            return Err(SchemeError::InvalidParams(
                "T must be at least 1".to_string(),
            ));
        }
        Ok(Self {
            row_parts: t,
            inner_parts: s,
            col_parts: d,
            security,
        })
    }

    /// `ts + T`: the stride between column bands in the `f_B` exponents.
    pub fn stride(&self) -> i64 {
        (self.row_parts * self.inner_parts + self.security) as i64
    }

    /// Number of product blocks, `td`.
    pub fn product_blocks(&self) -> usize {
        self.row_parts * self.col_parts
    }
}

impl fmt::Display for PartitionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(t={}, s={}, d={}, T={})",
            self.row_parts, self.inner_parts, self.col_parts, self.security
        )
    }
}

/// A coefficient slot of `f_A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ATerm {
    Block { row: usize, col: usize },
    Mask(usize),
}

/// A coefficient slot of `f_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BTerm {
    Block { row: usize, col: usize },
    Mask(usize),
}

/// Exponents of every coefficient of `f_A`, `f_B` and of the desired
/// coefficients of `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentLayout {
    params: PartitionParams,
    a_blocks: Vec<i64>,
    a_masks: Vec<i64>,
    b_blocks: Vec<i64>,
    b_masks: Vec<i64>,
    desired: Vec<i64>,
}

impl ExponentLayout {
    pub fn params(&self) -> PartitionParams {
        self.params
    }

    /// Exponent of `A_{row,col}` (zero-based block indices).
    pub fn a_block(&self, row: usize, col: usize) -> i64 {
        self.a_blocks[row * self.params.inner_parts + col]
    }

    pub fn a_mask(&self, k: usize) -> i64 {
        self.a_masks[k]
    }

    /// Exponent of `B_{row,col}` (zero-based block indices).
    pub fn b_block(&self, row: usize, col: usize) -> i64 {
        self.b_blocks[row * self.params.col_parts + col]
    }

    pub fn b_mask(&self, k: usize) -> i64 {
        self.b_masks[k]
    }

    /// Exponent of `h` carrying product block `(row, col)`.
    pub fn desired(&self, row: usize, col: usize) -> i64 {
        self.desired[row * self.params.col_parts + col]
    }

    pub fn a_mask_exponents(&self) -> &[i64] {
        &self.a_masks
    }

    pub fn b_mask_exponents(&self) -> &[i64] {
        &self.b_masks
    }

    /// All `(term, exponent)` pairs of `f_A`, blocks first.
    pub fn a_terms(&self) -> Vec<(ATerm, i64)> {
        let s = self.params.inner_parts;
        let blocks = self.a_blocks.iter().enumerate().map(|(idx, &e)| {
            (
                ATerm::Block {
                    row: idx / s,
                    col: idx % s,
                },
                e,
            )
        });
        let masks = self
            .a_masks
            .iter()
            .enumerate()
            .map(|(k, &e)| (ATerm::Mask(k), e));
        blocks.chain(masks).collect()
    }

    /// All `(term, exponent)` pairs of `f_B`, blocks first.
    pub fn b_terms(&self) -> Vec<(BTerm, i64)> {
        let d = self.params.col_parts;
        let blocks = self.b_blocks.iter().enumerate().map(|(idx, &e)| {
            (
                BTerm::Block {
                    row: idx / d,
                    col: idx % d,
                },
                e,
            )
        });
        let masks = self
            .b_masks
            .iter()
            .enumerate()
            .map(|(k, &e)| (BTerm::Mask(k), e));
        blocks.chain(masks).collect()
    }
}

pub fn build_layout(params: PartitionParams) -> ExponentLayout {
    let (t, s, d, tt) = (
        params.row_parts,
        params.inner_parts,
        params.col_parts,
        params.security,
    );
    let stride = params.stride();
    let ts = (t * s) as i64;

    let mut a_blocks = Vec::with_capacity(t * s);
    for i in 0..t {
        for j in 0..s {
            a_blocks.push((i * s + j) as i64);
        }
    }
    let a_masks = (0..tt).map(|k| ts + k as i64).collect();

    let mut b_blocks = Vec::with_capacity(s * d);
    for i in 0..s {
        for j in 0..d {
            b_blocks.push(-(j as i64) * stride - i as i64);
        }
    }
    let b_masks = (0..tt).map(|k| -(d as i64) * stride - k as i64).collect();

    let mut desired = Vec::with_capacity(t * d);
    for i in 0..t {
        for j in 0..d {
            desired.push((i * s) as i64 - j as i64 * stride);
        }
    }

    ExponentLayout {
        params,
        a_blocks,
        a_masks,
        b_blocks,
        b_masks,
        desired,
    }
}

/// The first evaluation-order condition that fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Two `f_A` exponents share a residue.
    ACollision { first: i64, second: i64 },
    /// Two `f_B` exponents share a residue.
    BCollision { first: i64, second: i64 },
    /// Two desired exponents share a residue.
    DesiredCollision { first: i64, second: i64 },
    /// A product term not belonging to block `target` lands on its residue.
    Interference {
        exponent: i64,
        residue: u64,
        target: (usize, usize),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ACollision { first, second } => {
                write!(f, "f_A exponents {first} and {second} collide")
            }
            Violation::BCollision { first, second } => {
                write!(f, "f_B exponents {first} and {second} collide")
            }
            Violation::DesiredCollision { first, second } => {
                write!(f, "desired exponents {first} and {second} collide")
            }
            Violation::Interference {
                exponent,
                residue,
                target,
            } => write!(
                f,
                "interference exponent {exponent} = {residue} collides with block ({},{})",
                target.0 + 1,
                target.1 + 1
            ),
        }
    }
}

fn residue(e: i64, n: u64) -> u64 {
    (e as i128).rem_euclid(n as i128) as u64
}

fn first_collision(exponents: impl IntoIterator<Item = i64>, n: u64) -> Option<(i64, i64)> {
    let mut seen: HashMap<u64, i64> = HashMap::new();
    for e in exponents {
        if let Some(&prev) = seen.get(&residue(e, n)) {
            return Some((prev, e));
        }
        seen.insert(residue(e, n), e);
    }
    None
}

/// Checks all four evaluation-order conditions with exponents taken mod `n`.
///
/// Every pair in `supp(f_A) x supp(f_B)` is labelled: `A_{i,l} B_{l,j}`
/// contributes to block `(i, j)`, everything else is interference. A desired
/// residue is clean only if every pair landing on it belongs to its block.
pub fn check_n(params: PartitionParams, n: u64) -> Result<(), Violation> {
    assert!(n >= 1, "evaluation order must be positive");
    let layout = build_layout(params);
    let a_terms = layout.a_terms();
    let b_terms = layout.b_terms();

    if let Some((first, second)) = first_collision(a_terms.iter().map(|&(_, e)| e), n) {
        return Err(Violation::ACollision { first, second });
    }
    if let Some((first, second)) = first_collision(b_terms.iter().map(|&(_, e)| e), n) {
        return Err(Violation::BCollision { first, second });
    }
    if let Some((first, second)) = first_collision(layout.desired.iter().copied(), n) {
        return Err(Violation::DesiredCollision { first, second });
    }

    let d = params.col_parts;
    let targets: HashMap<u64, (usize, usize)> = layout
        .desired
        .iter()
        .enumerate()
        .map(|(idx, &e)| (residue(e, n), (idx / d, idx % d)))
        .collect();

    for &(a_term, a_exp) in &a_terms {
        for &(b_term, b_exp) in &b_terms {
            let exponent = a_exp + b_exp;
            let r = residue(exponent, n);
            let Some(&target) = targets.get(&r) else {
                continue;
            };
            let contributes = match (a_term, b_term) {
                (ATerm::Block { row, col: l1 }, BTerm::Block { row: l2, col }) => {
                    l1 == l2 && (row, col) == target
                }
                _ => false,
            };
            if !contributes {
                return Err(Violation::Interference {
                    exponent,
                    residue: r,
                    target,
                });
            }
        }
    }
    Ok(())
}

pub fn is_valid_n(params: PartitionParams, n: u64) -> bool {
    n >= 1 && check_n(params, n).is_ok()
}

/// Closed-form server count: `(d+1)(t+T) - 1` when `s = 1`, otherwise
/// `dst + dT + ts + T`.
pub fn theorem1_n(params: PartitionParams) -> u64 {
    let (t, s, d, tt) = (
        params.row_parts as u64,
        params.inner_parts as u64,
        params.col_parts as u64,
        params.security as u64,
    );
    if s == 1 {
        (d + 1) * (t + tt) - 1
    } else {
        d * s * t + d * tt + t * s + tt
    }
}

/// Smallest `N` passing [`check_n`], searching upward from `td`.
pub fn minimal_valid_n(params: PartitionParams) -> Result<u64, SchemeError> {
    let upper = theorem1_n(params);
    if let Err(v) = check_n(params, upper) {
        return Err(SchemeError::Internal(format!(
            "closed-form N = {upper} fails validation for {params}: {v}"
        )));
    }
    let start = params.product_blocks() as u64;
    Ok((start..=upper)
        .find(|&n| is_valid_n(params, n))
        .unwrap_or(upper))
}

/// How the evaluation order `N` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NChoice {
    #[default]
    Minimal,
    Theorem1,
    Explicit(u64),
}

/// A fully resolved scheme instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemePlan {
    params: PartitionParams,
    n: u64,
    field: PrimeField,
    root: RootOfUnity,
    layout: ExponentLayout,
}

impl SchemePlan {
    pub fn params(&self) -> PartitionParams {
        self.params
    }

    /// Number of servers / evaluation points.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn root(&self) -> &RootOfUnity {
        &self.root
    }

    pub fn layout(&self) -> &ExponentLayout {
        &self.layout
    }

    /// Decode weight exponent `delta_{i,j} = -(desired exponent)` for
    /// zero-based product block `(row, col)`.
    pub fn decode_exponent(&self, row: usize, col: usize) -> i64 {
        -self.layout.desired(row, col)
    }
}

pub fn make_plan(
    params: PartitionParams,
    choice: NChoice,
    min_q: u64,
) -> Result<SchemePlan, SchemeError> {
    let n = match choice {
        NChoice::Minimal => minimal_valid_n(params)?,
        NChoice::Theorem1 => theorem1_n(params),
        NChoice::Explicit(n) => n,
    };
    if n == 0 {
        return Err(SchemeError::InvalidParams("N must be positive".into()));
    }
    check_n(params, n).map_err(|violation| SchemeError::InvalidN { n, violation })?;
    let q = field::find_field_modulus(n, min_q.max(2))?;
    plan_with_modulus(params, n, q)
}

/// Builds a plan over an explicitly chosen prime `q` (which must satisfy
/// `N | q - 1`).
pub fn plan_with_modulus(
    params: PartitionParams,
    n: u64,
    q: u64,
) -> Result<SchemePlan, SchemeError> {
    check_n(params, n).map_err(|violation| SchemeError::InvalidN { n, violation })?;
    let field = PrimeField::new(q)?;
    let root = field::nth_root_of_unity(field, n)?;
    Ok(SchemePlan {
        params,
        n,
        field,
        root,
        layout: build_layout(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: usize, s: usize, d: usize, tt: usize) -> PartitionParams {
        PartitionParams::new(t, s, d, tt).unwrap()
    }

    #[test]
    fn layout_worked_example() {
        let l = build_layout(p(2, 2, 2, 1));
        assert_eq!(
            [
                l.a_block(0, 0),
                l.a_block(0, 1),
                l.a_block(1, 0),
                l.a_block(1, 1)
            ],
            [0, 1, 2, 3]
        );
        assert_eq!(l.a_mask_exponents(), &[4]);
        // B_{1,1} + B_{2,1} x^-1 + B_{1,2} x^-5 + B_{2,2} x^-6 + S x^-10
        assert_eq!(
            [
                l.b_block(0, 0),
                l.b_block(1, 0),
                l.b_block(0, 1),
                l.b_block(1, 1)
            ],
            [0, -1, -5, -6]
        );
        assert_eq!(l.b_mask_exponents(), &[-10]);
        assert_eq!(
            [
                l.desired(0, 0),
                l.desired(1, 0),
                l.desired(0, 1),
                l.desired(1, 1)
            ],
            [0, 2, -5, -3]
        );
    }

    #[test]
    fn layout_smallest_instance() {
        let l = build_layout(p(1, 1, 1, 1));
        assert_eq!(l.a_block(0, 0), 0);
        assert_eq!(l.a_mask_exponents(), &[1]);
        assert_eq!(l.b_block(0, 0), 0);
        assert_eq!(l.b_mask_exponents(), &[-2]);
        assert_eq!(l.desired(0, 0), 0);
    }

    #[test]
    fn desired_is_sum_over_inner_index() {
        for t in 1..4 {
            for s in 1..4 {
                for d in 1..4 {
                    for tt in 1..3 {
                        let l = build_layout(p(t, s, d, tt));
                        let mut a: Vec<i64> = l.a_terms().iter().map(|x| x.1).collect();
                        let mut b: Vec<i64> = l.b_terms().iter().map(|x| x.1).collect();
                        a.sort();
                        a.dedup();
                        b.sort();
                        b.dedup();
                        assert_eq!(a.len(), t * s + tt);
                        assert_eq!(b.len(), s * d + tt);
                        for i in 0..t {
                            for j in 0..d {
                                for ell in 0..s {
                                    assert_eq!(
                                        l.a_block(i, ell) + l.b_block(ell, j),
                                        l.desired(i, j)
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn validity_examples() {
        assert!(is_valid_n(p(2, 2, 2, 1), 13));
        assert!(matches!(
            check_n(p(2, 2, 2, 1), 12),
            Err(Violation::Interference {
                exponent: -10,
                residue: 2,
                ..
            })
        ));
        assert!(!is_valid_n(p(1, 2, 1, 1), 3));
        assert!(!is_valid_n(p(1, 1, 1, 1), 0));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(theorem1_n(p(2, 1, 2, 1)), 8);
        assert_eq!(theorem1_n(p(2, 2, 2, 1)), 15);
        assert_eq!(theorem1_n(p(1, 2, 1, 1)), 6);
    }

    #[test]
    fn minimal_values() {
        assert_eq!(minimal_valid_n(p(2, 2, 2, 1)).unwrap(), 13);
        assert_eq!(minimal_valid_n(p(1, 2, 1, 1)).unwrap(), 4);
        assert_eq!(minimal_valid_n(p(2, 1, 2, 1)).unwrap(), 8);
    }

    #[test]
    fn zero_security_rejected() {
        assert!(matches!(
            PartitionParams::new(1, 1, 1, 0),
            Err(SchemeError::InvalidParams(_))
        ));
        assert!(PartitionParams::new(0, 1, 1, 1).is_err());
    }

    #[test]
    fn plan_examples() {
        let plan = make_plan(p(2, 2, 2, 1), NChoice::Minimal, 2).unwrap();
        assert_eq!((plan.n(), plan.field().modulus()), (13, 53));
        let plan = make_plan(p(1, 2, 1, 1), NChoice::Minimal, 2).unwrap();
        assert_eq!((plan.n(), plan.field().modulus()), (4, 5));
        assert_eq!(plan.root().alpha().value(), 2);
        assert!(matches!(
            make_plan(p(2, 2, 2, 1), NChoice::Explicit(12), 2),
            Err(SchemeError::InvalidN { n: 12, .. })
        ));
        let plan = make_plan(p(2, 2, 2, 1), NChoice::Theorem1, 1000).unwrap();
        assert_eq!(plan.n(), 15);
        assert!(plan.field().modulus() >= 1000);
        assert_eq!((plan.field().modulus() - 1) % 15, 0);
    }

    #[test]
    fn decode_weights_worked_example() {
        let plan = make_plan(p(2, 2, 2, 1), NChoice::Minimal, 2).unwrap();
        let r = |i, j| residue(plan.decode_exponent(i, j), 13);
        assert_eq!([r(0, 0), r(0, 1), r(1, 0), r(1, 1)], [0, 5, 11, 3]);
    }

    #[test]
    fn explicit_modulus_must_fit_order() {
        assert!(matches!(
            plan_with_modulus(p(1, 2, 1, 1), 4, 7),
            Err(SchemeError::Field(FieldError::OrderDoesNotDivide { .. }))
        ));
        assert!(plan_with_modulus(p(1, 2, 1, 1), 4, 13).is_ok());
    }
}
