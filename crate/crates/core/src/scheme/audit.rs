//! T-security audits: mask-matrix rank checks and brute-force enumeration
//! of colluding views over tiny fields.

use std::collections::{BTreeSet, HashMap};

use super::{SchemeError, SchemePlan};
use crate::grid::DenseMatrix;

/// Default cap on the number of share evaluations an exhaustive audit may
/// perform.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

fn check_indices(plan: &SchemePlan, indices: &[u64]) -> Result<(), SchemeError> {
    let mut seen = BTreeSet::new();
    for &index in indices {
        if index == 0 || index > plan.n() {
            return Err(SchemeError::IndexOutOfRange { index, n: plan.n() });
        }
        if !seen.insert(index) {
            return Err(SchemeError::DuplicateIndex(index));
        }
    }
    Ok(())
}

/// `T x k` matrix with entry `(m, j) = (alpha^{i_j})^{e_m}`, where `e_m` is
/// the `m`-th mask exponent on `side` and `i_1..i_k` are the colluding
/// servers. Full column rank means the masks hide the data blocks from
/// those servers.
pub fn mask_matrix(
    plan: &SchemePlan,
    indices: &[u64],
    side: Side,
) -> Result<DenseMatrix, SchemeError> {
    check_indices(plan, indices)?;
    let tt = plan.params().security;
    if indices.len() > tt {
        return Err(SchemeError::TooManyIndices {
            got: indices.len(),
            max: tt,
        });
    }
    if indices.is_empty() {
        return Err(SchemeError::InvalidParams(
            "mask matrix needs at least one server index".into(),
        ));
    }
    let exponents = match side {
        Side::A => plan.layout().a_mask_exponents(),
        Side::B => plan.layout().b_mask_exponents(),
    };
    let root = plan.root();
    Ok(DenseMatrix::from_fn(
        plan.field(),
        tt,
        indices.len(),
        |m, j| root.pow_at(indices[j], exponents[m]).value(),
    ))
}

/// Enumerates every mask value for `1 x 1` blocks and checks that the joint
/// view of `colluding` on `f_A` (and separately on `f_B`) is uniform and the
/// same for every input tried.
///
/// All inputs are tried when `q^(blocks + T)` fits in `budget`; otherwise the
/// all-zero and all-one inputs are compared.
pub fn exhaustive_security_check(
    plan: &SchemePlan,
    colluding: &[u64],
    budget: u128,
) -> Result<bool, SchemeError> {
    check_indices(plan, colluding)?;
    if colluding.is_empty() {
        return Ok(true);
    }
    Ok(side_is_hidden(plan, colluding, Side::A, budget)?
        && side_is_hidden(plan, colluding, Side::B, budget)?)
}

fn side_is_hidden(
    plan: &SchemePlan,
    colluding: &[u64],
    side: Side,
    budget: u128,
) -> Result<bool, SchemeError> {
    let params = plan.params();
    let layout = plan.layout();
    let field = plan.field();
    let q = field.modulus();
    let (block_exponents, mask_exponents): (Vec<i64>, &[i64]) = match side {
        Side::A => (
            layout
                .a_terms()
                .iter()
                .take(params.row_parts * params.inner_parts)
                .map(|&(_, e)| e)
                .collect(),
            layout.a_mask_exponents(),
        ),
        Side::B => (
            layout
                .b_terms()
                .iter()
                .take(params.inner_parts * params.col_parts)
                .map(|&(_, e)| e)
                .collect(),
            layout.b_mask_exponents(),
        ),
    };

    let pow = |base: u64, exp: usize| (base as u128).checked_pow(exp as u32);
    let mask_space = pow(q, mask_exponents.len()).unwrap_or(u128::MAX);
    let input_space = pow(q, block_exponents.len()).unwrap_or(u128::MAX);
    let all_inputs = input_space.saturating_mul(mask_space) <= budget;
    let needed = 2u128.saturating_mul(mask_space);
    if !all_inputs && needed > budget {
        return Err(SchemeError::BudgetExceeded { needed, budget });
    }

    let root = plan.root();
    let block_weights: Vec<Vec<u64>> = colluding
        .iter()
        .map(|&i| {
            block_exponents
                .iter()
                .map(|&e| root.pow_at(i, e).value())
                .collect()
        })
        .collect();
    let mask_weights: Vec<Vec<u64>> = colluding
        .iter()
        .map(|&i| {
            mask_exponents
                .iter()
                .map(|&e| root.pow_at(i, e).value())
                .collect()
        })
        .collect();

    let inputs: Box<dyn Iterator<Item = Vec<u64>>> = if all_inputs {
        Box::new(Odometer::new(q, block_exponents.len()))
    } else {
        Box::new(
            [
                vec![0; block_exponents.len()],
                vec![1 % q; block_exponents.len()],
            ]
            .into_iter(),
        )
    };

    let dot = |weights: &[u64], values: &[u64]| {
        weights
            .iter()
            .zip(values)
            .fold(0, |acc, (&w, &v)| field.add(acc, field.mul(w, v)))
    };

    let k = colluding.len() as u32;
    let view_space = (q as u128).checked_pow(k);
    let mut reference: Option<HashMap<Vec<u64>, u128>> = None;
    for input in inputs {
        let base: Vec<u64> = block_weights.iter().map(|w| dot(w, &input)).collect();
        let mut histogram: HashMap<Vec<u64>, u128> = HashMap::new();
        for masks in Odometer::new(q, mask_exponents.len()) {
            let view: Vec<u64> = base
                .iter()
                .zip(&mask_weights)
                .map(|(&b, w)| field.add(b, dot(w, &masks)))
                .collect();
            *histogram.entry(view).or_default() += 1;
        }
        let uniform = match view_space {
            Some(space) if space <= mask_space && mask_space % space == 0 => {
                histogram.len() as u128 == space
                    && histogram.values().all(|&c| c == mask_space / space)
            }
            _ => false,
        };
        if !uniform {
            return Ok(false);
        }
        match &reference {
            None => reference = Some(histogram),
            Some(r) if *r != histogram => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// All vectors of `len` digits in `[0, base)`, last digit fastest.
struct Odometer {
    base: u64,
    digits: Vec<u64>,
    done: bool,
}

impl Odometer {
    fn new(base: u64, len: usize) -> Self {
        Self {
            base,
            digits: vec![0; len],
            done: false,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        self.done = true;
        for digit in self.digits.iter_mut().rev() {
            *digit += 1;
            if *digit < self.base {
                self.done = false;
                break;
            }
            *digit = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{make_plan, plan_with_modulus, NChoice, PartitionParams};

    fn p(t: usize, s: usize, d: usize, tt: usize) -> PartitionParams {
        PartitionParams::new(t, s, d, tt).unwrap()
    }

    #[test]
    fn odometer_counts() {
        assert_eq!(Odometer::new(3, 2).count(), 9);
        assert_eq!(
            Odometer::new(5, 0).collect::<Vec<_>>(),
            vec![Vec::<u64>::new()]
        );
    }

    #[test]
    fn single_mask_matrix_is_nonzero() {
        let plan = make_plan(p(2, 2, 2, 1), NChoice::Minimal, 2).unwrap();
        for i in 1..=plan.n() {
            let m = mask_matrix(&plan, &[i], Side::A).unwrap();
            assert_eq!(m.shape(), (1, 1));
            assert_eq!(m.element(0, 0), plan.root().pow_at(i, 4));
            assert_eq!(m.rank(), 1);
        }
    }

    // Independent determinant for 2x2 matrices.
    fn det2(m: &DenseMatrix) -> u64 {
        let f = m.field();
        f.sub(
            f.mul(m.get(0, 0), m.get(1, 1)),
            f.mul(m.get(0, 1), m.get(1, 0)),
        )
    }

    #[test]
    fn pairs_have_full_rank() {
        let plan = make_plan(p(1, 2, 1, 2), NChoice::Minimal, 2).unwrap();
        for i in 1..=plan.n() {
            for j in (i + 1)..=plan.n() {
                for side in [Side::A, Side::B] {
                    let m = mask_matrix(&plan, &[i, j], side).unwrap();
                    assert_ne!(det2(&m), 0);
                    assert_eq!(m.rank(), 2);
                }
            }
        }
    }

    #[test]
    fn mask_matrix_rejects_bad_indices() {
        let plan = make_plan(p(1, 2, 1, 2), NChoice::Minimal, 2).unwrap();
        assert_eq!(
            mask_matrix(&plan, &[1, 1], Side::A),
            Err(SchemeError::DuplicateIndex(1))
        );
        assert!(matches!(
            mask_matrix(&plan, &[0], Side::A),
            Err(SchemeError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            mask_matrix(&plan, &[1, 2, 3], Side::B),
            Err(SchemeError::TooManyIndices { got: 3, max: 2 })
        ));
    }

    #[test]
    fn single_server_sees_each_value_once() {
        // (1,1,1,1) at N = 4 over F_5: a + r alpha^i hits every residue once
        let plan = plan_with_modulus(p(1, 1, 1, 1), 4, 5).unwrap();
        let root = plan.root();
        for i in 1..=4 {
            for a in 0..5u64 {
                let mut seen: Vec<u64> = (0..5u64)
                    .map(|r| (a + r * root.pow_at(i, 1).value()) % 5)
                    .collect();
                seen.sort();
                assert_eq!(seen, vec![0, 1, 2, 3, 4]);
            }
            assert!(exhaustive_security_check(&plan, &[i], DEFAULT_ENUMERATION_BUDGET).unwrap());
        }
    }

    #[test]
    fn inner_partition_views_are_uniform() {
        let plan = make_plan(p(1, 2, 1, 1), NChoice::Minimal, 2).unwrap();
        assert_eq!(plan.field().modulus(), 5);
        for i in 1..=plan.n() {
            assert!(exhaustive_security_check(&plan, &[i], DEFAULT_ENUMERATION_BUDGET).unwrap());
        }
        assert!(exhaustive_security_check(&plan, &[], 0).unwrap());
    }

    #[test]
    fn too_many_colluders_leak() {
        let plan = plan_with_modulus(p(1, 1, 1, 1), 4, 5).unwrap();
        assert!(!exhaustive_security_check(&plan, &[1, 2], DEFAULT_ENUMERATION_BUDGET).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let plan = make_plan(p(1, 2, 1, 1), NChoice::Minimal, 2).unwrap();
        assert!(matches!(
            exhaustive_security_check(&plan, &[1], 3),
            Err(SchemeError::BudgetExceeded { .. })
        ));
        // two fixed inputs still fit
        assert!(exhaustive_security_check(&plan, &[1], 10).unwrap());
    }
}
