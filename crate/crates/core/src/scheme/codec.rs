//! Share generation, server-side multiplication and root-of-unity decoding.

use rand::Rng;

use super::{SchemeError, SchemePlan};
use crate::grid::{partition, reassemble, BlockGrid, DenseMatrix};

/// The random matrices `R_1..R_T` (shaped like an `A` block) and
/// `S_1..S_T` (shaped like a `B` block).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masks {
    pub a: Vec<DenseMatrix>,
    pub b: Vec<DenseMatrix>,
}

impl Masks {
    /// Draws every mask entry independently and uniformly from `[0, q)`.
    pub fn random<R: Rng + ?Sized>(
        plan: &SchemePlan,
        a_block: (usize, usize),
        b_block: (usize, usize),
        rng: &mut R,
    ) -> Self {
        let field = plan.field();
        let q = field.modulus();
        let mut draw = |(rows, cols): (usize, usize)| {
            DenseMatrix::from_fn(field, rows, cols, |_, _| rng.gen_range(0..q))
        };
        let tt = plan.params().security;
        let a = (0..tt).map(|_| draw(a_block)).collect();
        let b = (0..tt).map(|_| draw(b_block)).collect();
        Self { a, b }
    }

    pub fn zeros(plan: &SchemePlan, a_block: (usize, usize), b_block: (usize, usize)) -> Self {
        let field = plan.field();
        let tt = plan.params().security;
        Self {
            a: vec![DenseMatrix::zeros(field, a_block.0, a_block.1); tt],
            b: vec![DenseMatrix::zeros(field, b_block.0, b_block.1); tt],
        }
    }
}

/// What server `server` (one-based) receives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub server: u64,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSet {
    pub shares: Vec<Share>,
}

impl ShareSet {
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn get(&self, server: u64) -> Option<&Share> {
        self.shares.get(server.checked_sub(1)? as usize)
    }
}

fn check_inputs(a: &DenseMatrix, b: &DenseMatrix, plan: &SchemePlan) -> Result<(), SchemeError> {
    let field = plan.field();
    if a.field() != field || b.field() != field {
        return Err(SchemeError::Dimension(format!(
            "inputs must be reduced into the plan field F_{}",
            field.modulus()
        )));
    }
    if a.cols() != b.rows() {
        return Err(SchemeError::Dimension(format!(
            "A is {}x{} but B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Evaluates `sum coeff * (alpha^point)^exponent`.
fn evaluate<'a>(
    plan: &SchemePlan,
    terms: impl Iterator<Item = (&'a DenseMatrix, i64)>,
    shape: (usize, usize),
    point: u64,
) -> DenseMatrix {
    let mut acc = DenseMatrix::zeros(plan.field(), shape.0, shape.1);
    for (coeff, exponent) in terms {
        let weight = plan.root().pow_at(point, exponent).value();
        acc.add_assign_scaled(coeff, weight);
    }
    acc
}

/// Encodes with caller-supplied masks. Production callers use [`encode`];
/// this entry point exists for audits and deterministic tests.
pub fn encode_with_masks(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &SchemePlan,
    masks: &Masks,
) -> Result<ShareSet, SchemeError> {
    check_inputs(a, b, plan)?;
    let params = plan.params();
    let grid_a = partition(a, params.row_parts, params.inner_parts)?;
    let grid_b = partition(b, params.inner_parts, params.col_parts)?;
    let (a_shape, b_shape) = (grid_a.block_shape(), grid_b.block_shape());
    let tt = params.security;
    if masks.a.len() != tt
        || masks.b.len() != tt
        || masks
            .a
            .iter()
            .any(|m| m.shape() != a_shape || m.field() != plan.field())
        || masks
            .b
            .iter()
            .any(|m| m.shape() != b_shape || m.field() != plan.field())
    {
        return Err(SchemeError::Dimension(format!(
            "expected {tt} masks of shape {a_shape:?} and {b_shape:?}"
        )));
    }

    let layout = plan.layout();
    let a_coeffs: Vec<(&DenseMatrix, i64)> = grid_a
        .blocks()
        .iter()
        .enumerate()
        .map(|(idx, blk)| {
            let (i, j) = (idx / params.inner_parts, idx % params.inner_parts);
            (blk, layout.a_block(i, j))
        })
        .chain(
            masks
                .a
                .iter()
                .enumerate()
                .map(|(k, m)| (m, layout.a_mask(k))),
        )
        .collect();
    let b_coeffs: Vec<(&DenseMatrix, i64)> = grid_b
        .blocks()
        .iter()
        .enumerate()
        .map(|(idx, blk)| {
            let (i, j) = (idx / params.col_parts, idx % params.col_parts);
            (blk, layout.b_block(i, j))
        })
        .chain(
            masks
                .b
                .iter()
                .enumerate()
                .map(|(k, m)| (m, layout.b_mask(k))),
        )
        .collect();

    let shares = (1..=plan.n())
        .map(|point| Share {
            server: point,
            a: evaluate(plan, a_coeffs.iter().copied(), a_shape, point),
            b: evaluate(plan, b_coeffs.iter().copied(), b_shape, point),
        })
        .collect();
    Ok(ShareSet { shares })
}

/// Draws fresh masks from `rng` and evaluates `f_A`, `f_B` at
/// `alpha^1, ..., alpha^N`.
pub fn encode<R: Rng + ?Sized>(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &SchemePlan,
    rng: &mut R,
) -> Result<ShareSet, SchemeError> {
    check_inputs(a, b, plan)?;
    let params = plan.params();
    let a_block = block_shape(a, params.row_parts, params.inner_parts)?;
    let b_block = block_shape(b, params.inner_parts, params.col_parts)?;
    let masks = Masks::random(plan, a_block, b_block, rng);
    encode_with_masks(a, b, plan, &masks)
}

fn block_shape(m: &DenseMatrix, rows: usize, cols: usize) -> Result<(usize, usize), SchemeError> {
    // partition reports which axis fails
    if !m.rows().is_multiple_of(rows) || !m.cols().is_multiple_of(cols) {
        partition(m, rows, cols)?;
    }
    Ok((m.rows() / rows, m.cols() / cols))
}

/// The only work a server does: one plain product.
pub fn server_multiply(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, SchemeError> {
    Ok(a.matmul(b)?)
}

/// Recovers `AB` from all `N` server products.
///
/// Block `(i, j)` is `N^-1 * sum_n (alpha^n)^{delta_{i,j}} h(alpha^n)`; every
/// other coefficient of `h` cancels because its residue class differs.
pub fn decode(products: &[DenseMatrix], plan: &SchemePlan) -> Result<DenseMatrix, SchemeError> {
    let n = plan.n();
    if products.len() as u64 != n {
        return Err(SchemeError::ProductCount {
            expected: n as usize,
            actual: products.len(),
        });
    }
    let shape = products[0].shape();
    let field = plan.field();
    if let Some((idx, bad)) = products
        .iter()
        .enumerate()
        .find(|(_, m)| m.shape() != shape || m.field() != field)
    {
        return Err(SchemeError::Dimension(format!(
            "product from server {} is {:?} over F_{}, expected {:?} over F_{}",
            idx + 1,
            bad.shape(),
            bad.field().modulus(),
            shape,
            field.modulus()
        )));
    }
    let params = plan.params();
    let n_inv = field.inv(field.reduce(n))?;
    let mut blocks = Vec::with_capacity(params.product_blocks());
    for i in 0..params.row_parts {
        for j in 0..params.col_parts {
            let delta = plan.decode_exponent(i, j);
            let mut acc = DenseMatrix::zeros(field, shape.0, shape.1);
            for (point, h) in (1..=n).zip(products) {
                let weight = plan.root().pow_at(point, delta).value();
                acc.add_assign_scaled(h, weight);
            }
            blocks.push(acc.scale(n_inv));
        }
    }
    let grid = BlockGrid::new(params.row_parts, params.col_parts, blocks)?;
    Ok(reassemble(&grid))
}
