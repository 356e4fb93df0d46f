//! Communication and computation accounting, kept in exact rationals.
//!
//! Every cost of the scheme is a linear form in the monomials `ab`, `bc`
//! and `ac`, so costs are first built symbolically and then evaluated at
//! concrete dimensions.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::scheme::{minimal_valid_n, PartitionParams, SchemeError};

pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("matrix dimensions must be positive (a={a}, b={b}, c={c})")]
    NonPositive { a: u64, b: u64, c: u64 },
    #[error("{name} = {value} is not divisible by {parts}")]
    NotDivisible {
        name: &'static str,
        value: u64,
        parts: u64,
    },
    #[error("server count must be positive")]
    ZeroServers,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

fn r(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// `ab * x + bc * y + ac * z` with rational coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SymbolicCost {
    pub ab: Rational,
    pub bc: Rational,
    pub ac: Rational,
}

impl SymbolicCost {
    pub fn new(ab: Rational, bc: Rational, ac: Rational) -> Self {
        Self { ab, bc, ac }
    }

    /// `coeff * (ab + bc)`.
    pub fn ab_plus_bc(coeff: Rational) -> Self {
        Self::new(coeff, coeff, r(0))
    }

    /// `coeff * ac`.
    pub fn ac(coeff: Rational) -> Self {
        Self::new(r(0), r(0), coeff)
    }

    pub fn eval(&self, a: u64, b: u64, c: u64) -> Rational {
        let (a, b, c) = (a as i128, b as i128, c as i128);
        self.ab * r(a * b) + self.bc * r(b * c) + self.ac * r(a * c)
    }
}

fn fmt_coeff(c: &Rational) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for SymbolicCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let zero = r(0);
        let mut parts = Vec::new();
        if self.ab == self.bc && self.ab != zero {
            parts.push(format!("{}(ab+bc)", fmt_coeff(&self.ab)));
        } else {
            if self.ab != zero {
                parts.push(format!("{}ab", fmt_coeff(&self.ab)));
            }
            if self.bc != zero {
                parts.push(format!("{}bc", fmt_coeff(&self.bc)));
            }
        }
        if self.ac != zero {
            parts.push(format!("{}ac", fmt_coeff(&self.ac)));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Symbolic costs of one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolicCosts {
    pub upload: SymbolicCost,
    pub download: SymbolicCost,
    pub encode: SymbolicCost,
    pub decode: SymbolicCost,
}

impl SymbolicCosts {
    pub fn eval(&self, a: u64, b: u64, c: u64) -> [Rational; 4] {
        [
            self.upload.eval(a, b, c),
            self.download.eval(a, b, c),
            self.encode.eval(a, b, c),
            self.decode.eval(a, b, c),
        ]
    }
}

/// Costs of the scheme with `n` servers as linear forms in `ab, bc, ac`.
///
/// * upload: `N(ab/(ts) + bc/(sd))` elements
/// * download: `N ac/(td)` elements
/// * encode: Horner evaluation, `2(ts+T-1)` operations per `A`-share entry
///   and `2(sd+T-1)` per `B`-share entry, at each of the `N` points
/// * decode: `td - 1` weighted sums costing `2N` per entry, plus one
///   unweighted sum costing `N + 1` per entry
pub fn symbolic_costs(params: PartitionParams, n: u64) -> SymbolicCosts {
    let (t, s, d, tt) = (
        params.row_parts as i128,
        params.inner_parts as i128,
        params.col_parts as i128,
        params.security as i128,
    );
    let n = n as i128;
    let per_a = Rational::new(n, t * s);
    let per_b = Rational::new(n, s * d);
    let per_out = Rational::new(1, t * d);
    SymbolicCosts {
        upload: SymbolicCost::new(per_a, per_b, r(0)),
        download: SymbolicCost::ac(per_out * r(n)),
        encode: SymbolicCost::new(
            per_a * r(2 * (t * s + tt - 1)),
            per_b * r(2 * (s * d + tt - 1)),
            r(0),
        ),
        decode: SymbolicCost::ac(per_out * r((t * d - 1) * 2 * n + n + 1)),
    }
}

/// Concrete cost figures for one multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub upload_elements: Rational,
    pub download_elements: Rational,
    pub encode_ops: Rational,
    pub decode_ops: Rational,
    /// Useful output elements over all elements moved: `ac / (up + down)`.
    pub total_rate: Rational,
}

fn check_dims(params: PartitionParams, a: u64, b: u64, c: u64) -> Result<(), CostError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(CostError::NonPositive { a, b, c });
    }
    for (name, value, parts) in [
        ("a", a, params.row_parts as u64),
        ("b", b, params.inner_parts as u64),
        ("c", c, params.col_parts as u64),
    ] {
        if value % parts != 0 {
            return Err(CostError::NotDivisible { name, value, parts });
        }
    }
    Ok(())
}

pub fn communication_costs(
    params: PartitionParams,
    n: u64,
    a: u64,
    b: u64,
    c: u64,
) -> Result<CostReport, CostError> {
    if n == 0 {
        return Err(CostError::ZeroServers);
    }
    check_dims(params, a, b, c)?;
    let [upload, download, encode, decode] = symbolic_costs(params, n).eval(a, b, c);
    let useful = r(a as i128 * c as i128);
    Ok(CostReport {
        upload_elements: upload,
        download_elements: download,
        encode_ops: encode,
        decode_ops: decode,
        total_rate: useful / (upload + download),
    })
}

/// `( N (b/(cts) + b/(asd) + 1/(td)) )^-1`, evaluated directly.
pub fn closed_form_rate(params: PartitionParams, n: u64, a: u64, b: u64, c: u64) -> Rational {
    let (t, s, d) = (
        params.row_parts as i128,
        params.inner_parts as i128,
        params.col_parts as i128,
    );
    let (a, b, c, n) = (a as i128, b as i128, c as i128, n as i128);
    let inner = Rational::new(b, c * t * s) + Rational::new(b, a * s * d) + Rational::new(1, t * d);
    (r(n) * inner).recip()
}

/// Rate with `a = b = c`, where it no longer depends on the dimension.
pub fn square_rate(params: PartitionParams, n: u64) -> Rational {
    closed_form_rate(params, n, 1, 1, 1)
}

/// One row of the comparison against the outer- and inner-partition
/// baselines for `(t, s, d, T) = (2, 2, 2, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub scheme: &'static str,
    pub costs: SymbolicCosts,
    /// `[upload, download, encode, decode]` at the requested dimensions.
    pub values: [Rational; 4],
}

pub const PROPOSED: &str = "Proposed";
pub const GASP: &str = "GASP";
pub const INNER_PRODUCT: &str = "Inner-product";

/// Reference constants for the baselines at the (2,2,2,1) example with
/// per-server work fixed to `ac(b-1)/4`. Only valid for that example.
pub fn baseline_costs() -> [(&'static str, SymbolicCosts); 2] {
    [
        (
            GASP,
            SymbolicCosts {
                upload: SymbolicCost::ab_plus_bc(Rational::new(7, 2)),
                download: SymbolicCost::ac(Rational::new(7, 4)),
                encode: SymbolicCost::ab_plus_bc(r(28)),
                decode: SymbolicCost::ac(r(27)),
            },
        ),
        (
            INNER_PRODUCT,
            SymbolicCosts {
                upload: SymbolicCost::ab_plus_bc(Rational::new(3, 2)),
                download: SymbolicCost::ac(r(7)),
                encode: SymbolicCost::ab_plus_bc(r(12)),
                decode: SymbolicCost::ac(r(7)),
            },
        ),
    ]
}

/// The three-scheme comparison at `(t, s, d, T) = (2, 2, 2, 1)`; the
/// proposed row comes from [`symbolic_costs`] at the minimal `N`.
pub fn comparison_table(a: u64, b: u64, c: u64) -> Result<Vec<ComparisonRow>, CostError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(CostError::NonPositive { a, b, c });
    }
    for (name, value) in [("a", a), ("b", b), ("c", c)] {
        if value % 4 != 0 {
            return Err(CostError::NotDivisible {
                name,
                value,
                parts: 4,
            });
        }
    }
    let params = PartitionParams::new(2, 2, 2, 1)?;
    let n = minimal_valid_n(params)?;
    let proposed = symbolic_costs(params, n);
    let mut rows = vec![ComparisonRow {
        scheme: PROPOSED,
        costs: proposed,
        values: proposed.eval(a, b, c),
    }];
    rows.extend(
        baseline_costs()
            .into_iter()
            .map(|(scheme, costs)| ComparisonRow {
                scheme,
                costs,
                values: costs.eval(a, b, c),
            }),
    );
    Ok(rows)
}

pub fn fmt_rational(x: &Rational) -> String {
    fmt_coeff(x)
}

const HEADER: [&str; 5] = ["scheme", "upload", "download", "encode", "decode"];

/// Aligned text table with symbolic and evaluated entries.
pub fn render_table(rows: &[ComparisonRow]) -> String {
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|row| {
            let sym = [
                row.costs.upload,
                row.costs.download,
                row.costs.encode,
                row.costs.decode,
            ];
            let mut cells: [String; 5] = Default::default();
            cells[0] = row.scheme.to_string();
            for k in 0..4 {
                cells[k + 1] = format!("{} = {}", sym[k], fmt_rational(&row.values[k]));
            }
            cells
        })
        .collect();
    let mut widths = HEADER.map(str::len);
    for cells in &body {
        for (w, cell) in widths.iter_mut().zip(cells) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 5]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(HEADER);
    out.push('\n');
    for cells in &body {
        out.push_str(&line([
            &cells[0], &cells[1], &cells[2], &cells[3], &cells[4],
        ]));
        out.push('\n');
    }
    out
}

/// CSV with evaluated entries.
pub fn render_csv(rows: &[ComparisonRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for row in rows {
        let vals: Vec<String> = row.values.iter().map(fmt_rational).collect();
        out.push_str(&format!("{},{}\n", row.scheme, vals.join(",")));
    }
    out
}

/// Outcome of the speedup-region test for the (2,2,2,1) example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpeedupCheck {
    pub inside: bool,
    pub reason: Option<&'static str>,
}

/// Whether the (2,2,2,1) scheme with unit-cost transmission and arithmetic
/// beats local `2abc - ac` multiplication: `a > 234/7`,
/// `b > 216a / (7a - 234)` and `c > 234ab / (7ab - 216a - 234b)`.
pub fn speedup_region(a: u64, b: u64, c: u64) -> SpeedupCheck {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    let outside = |reason| SpeedupCheck {
        inside: false,
        reason: Some(reason),
    };
    if a == 0 || b == 0 || c == 0 {
        return outside("dimensions must be positive");
    }
    if 7 * a <= 234 {
        return outside("a must exceed 234/7");
    }
    // b > 216a / (7a - 234) with a positive denominator
    if b * (7 * a - 234) <= 216 * a {
        return outside("b below 216a/(7a-234)");
    }
    let denom = 7 * a * b - 216 * a - 234 * b;
    if denom <= 0 {
        return outside("7ab - 216a - 234b is not positive");
    }
    if c * denom <= 234 * a * b {
        return outside("c below 234ab/(7ab-216a-234b)");
    }
    SpeedupCheck {
        inside: true,
        reason: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: usize, s: usize, d: usize, tt: usize) -> PartitionParams {
        PartitionParams::new(t, s, d, tt).unwrap()
    }

    #[test]
    fn worked_example_costs() {
        let costs = symbolic_costs(p(2, 2, 2, 1), 13);
        assert_eq!(costs.upload, SymbolicCost::ab_plus_bc(Rational::new(13, 4)));
        assert_eq!(costs.download, SymbolicCost::ac(Rational::new(13, 4)));
        assert_eq!(costs.encode, SymbolicCost::ab_plus_bc(r(26)));
        assert_eq!(costs.decode, SymbolicCost::ac(r(23)));
        assert_eq!(costs.upload.to_string(), "13/4(ab+bc)");
        assert_eq!(costs.decode.to_string(), "23ac");
    }

    #[test]
    fn rate_examples() {
        let rep = communication_costs(p(2, 2, 2, 1), 13, 8, 8, 8).unwrap();
        assert_eq!(rep.total_rate, Rational::new(4, 39));
        let rep = communication_costs(p(1, 1, 1, 1), 3, 1, 1, 1).unwrap();
        assert_eq!(rep.upload_elements, r(6));
        assert_eq!(rep.download_elements, r(3));
        assert_eq!(rep.total_rate, Rational::new(1, 9));
        assert_eq!(square_rate(p(2, 2, 2, 1), 13), Rational::new(4, 39));
    }

    #[test]
    fn divisibility_and_positivity() {
        assert!(matches!(
            communication_costs(p(2, 2, 2, 1), 13, 3, 4, 4),
            Err(CostError::NotDivisible { name: "a", .. })
        ));
        assert!(matches!(
            communication_costs(p(1, 1, 1, 1), 3, 0, 1, 1),
            Err(CostError::NonPositive { .. })
        ));
        assert!(comparison_table(0, 0, 0).is_err());
        assert!(comparison_table(4, 6, 4).is_err());
    }

    #[test]
    fn table_at_four() {
        let rows = comparison_table(4, 4, 4).unwrap();
        let uploads: Vec<Rational> = rows.iter().map(|r| r.values[0]).collect();
        assert_eq!(uploads, vec![r(104), r(112), r(48)]);
        assert_eq!(rows[0].values[1], r(52));
        assert_eq!(rows[0].values[3], r(368));
        let csv = render_csv(&rows);
        assert!(csv.starts_with("scheme,upload,download,encode,decode\n"));
        assert!(csv.contains("Proposed,104,52,832,368"));
        assert!(render_table(&rows).contains("13/4(ab+bc) = 104"));
    }

    #[test]
    fn speedup_examples() {
        assert!(!speedup_region(10, 10, 10).inside);
        assert!(speedup_region(1000, 1000, 1000).inside);
        let check = speedup_region(34, 10, 10);
        assert!(!check.inside);
        assert_eq!(check.reason, Some("b below 216a/(7a-234)"));
        // b bound is 1836 at a = 34
        assert!(!speedup_region(34, 1836, 1_000_000).inside);
        assert!(!speedup_region(34, 1837, 3_653_793).inside);
        assert!(speedup_region(34, 1837, 3_653_794).inside);
    }
}
