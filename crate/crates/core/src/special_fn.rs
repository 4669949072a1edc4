//! Special functions used throughout the crate: Stirling numbers of the
//! second kind, rising factorials, the integer-order upper incomplete gamma
//! function and a Lanczos log-gamma.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest order held by the shared table used by [`stirling2`].
pub const STIRLING_MAX_ORDER: usize = 20;

/// Triangular table of Stirling numbers of the second kind `S(k, l)`,
/// `1 <= l <= k <= max_order`, in exact integer arithmetic.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    max_order: usize,
    // rows[k - 1][l - 1] = S(k, l)
    rows: Vec<Vec<u64>>,
}

impl StirlingTable {
    /// Builds the table with `S(k+1, l) = l S(k, l) + S(k, l-1)`.
    ///
    /// Fails if an entry does not fit in a `u64` (first happens at order 27).
    pub fn new(max_order: usize) -> Result<Self> {
        if max_order == 0 {
            return Err(Error::domain("Stirling table needs max_order >= 1"));
        }
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max_order);
        rows.push(vec![1]);
        for k in 1..max_order {
            let prev = &rows[k - 1];
            let mut row = vec![0u64; k + 1];
            for l in 1..=k + 1 {
                let stay = if l <= k {
                    (l as u64).checked_mul(prev[l - 1])
                } else {
                    Some(0)
                };
                let new_block = if l >= 2 { prev[l - 2] } else { 0 };
                row[l - 1] = stay
                    .and_then(|v| v.checked_add(new_block))
                    .ok_or_else(|| {
                        Error::domain(format!("S({}, {l}) overflows u64", k + 1))
                    })?;
            }
            rows.push(row);
        }
        Ok(Self { max_order, rows })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn get(&self, k: usize, l: usize) -> Result<u64> {
        if l == 0 || l > k || k > self.max_order {
            return Err(Error::domain(format!(
                "Stirling number S({k}, {l}) requires 1 <= l <= k <= {}",
                self.max_order
            )));
        }
        Ok(self.rows[k - 1][l - 1])
    }

    /// Row `k` as `[S(k,1), ..., S(k,k)]`.
    pub fn row(&self, k: usize) -> Result<&[u64]> {
        if k == 0 || k > self.max_order {
            return Err(Error::domain(format!(
                "Stirling row {k} outside 1..={}",
                self.max_order
            )));
        }
        Ok(&self.rows[k - 1])
    }
}

fn shared_table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(STIRLING_MAX_ORDER).expect("order 20 fits in u64"))
}

/// Number of partitions of a `k`-set into `l` non-empty blocks.
pub fn stirling2(k: usize, l: usize) -> Result<u64> {
    shared_table().get(k, l)
}

/// `[S(k,1), ..., S(k,k)]` from the shared table.
pub fn stirling2_row(k: usize) -> Result<&'static [u64]> {
    shared_table().row(k)
}

/// Rising factorial `(a)_l = a (a+1) ... (a+l-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, l: u32) -> f64 {
    (0..l).fold(1.0, |acc, j| acc * (a + j as f64))
}

/// `ln (a)_l` for `a > 0`, summed term by term so that large `a` does not
/// overflow.
pub fn ln_pochhammer(a: f64, l: u32) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("ln_pochhammer needs a > 0, got {a}")));
    }
    Ok((0..l).map(|j| (a + j as f64).ln()).sum())
}

/// `n!` as a float. Exact for `n <= 22`.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Upper incomplete gamma `Γ(l+1, x) = e^{-x} Σ_{m=0}^{l} (l!/m!) x^m` for
/// integer order `l + 1 >= 1`.
pub fn upper_incomplete_gamma_int(l_plus_1: u32, x: f64) -> Result<f64> {
    if l_plus_1 == 0 {
        return Err(Error::domain("incomplete gamma order must be >= 1"));
    }
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::domain(format!(
            "incomplete gamma argument must be finite and >= 0, got {x}"
        )));
    }
    let l = l_plus_1 - 1;
    // Horner from the top term: l!/m! x^m for m = l, l-1, ..., 0.
    let mut sum = 1.0;
    for m in (1..=l).rev() {
        sum = 1.0 + sum * x / m as f64;
    }
    Ok((-x).exp() * sum * factorial(l))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `a > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let x = a - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate::{integrate_semi_infinite, Tolerance};
    use approx::assert_relative_eq;

    // Partitions of {0..k-1} into exactly l blocks, by restricted growth strings.
    fn count_partitions(k: usize, l: usize) -> u64 {
        fn rec(i: usize, k: usize, max_block: usize, l: usize) -> u64 {
            if i == k {
                return u64::from(max_block == l);
            }
            let mut total = 0;
            for b in 0..=max_block.min(l - 1) {
                let next = if b == max_block { max_block + 1 } else { max_block };
                if next <= l {
                    total += rec(i + 1, k, next, l);
                }
            }
            total
        }
        rec(0, k, 0, l)
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling2(1, 1).unwrap(), 1);
        assert_eq!(stirling2(3, 2).unwrap(), 3);
        assert_eq!(stirling2(4, 2).unwrap(), 7);
        assert_eq!(count_partitions(3, 2), 3);
        assert_eq!(count_partitions(4, 2), 7);
    }

    #[test]
    fn stirling_matches_enumeration() {
        for k in 1..=9 {
            for l in 1..=k {
                assert_eq!(stirling2(k, l).unwrap(), count_partitions(k, l), "S({k},{l})");
            }
        }
    }

    #[test]
    fn stirling_edges_and_recurrence() {
        let t = StirlingTable::new(20).unwrap();
        for k in 1..=20 {
            assert_eq!(t.get(k, 1).unwrap(), 1);
            assert_eq!(t.get(k, k).unwrap(), 1);
        }
        for k in 2..20 {
            for l in 2..=k {
                let lhs = t.get(k + 1, l).unwrap();
                let rhs = l as u64 * t.get(k, l).unwrap() + t.get(k, l - 1).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn stirling_rows_sum_to_bell_numbers() {
        // Bell triangle, independent of the Stirling recurrence.
        let mut bell = vec![1u64];
        let mut row = vec![1u64];
        for _ in 0..10 {
            let mut next = vec![*row.last().unwrap()];
            for v in &row {
                let last = *next.last().unwrap();
                next.push(last + v);
            }
            bell.push(next[0]);
            row = next;
        }
        for (k, b) in bell.iter().enumerate().take(11).skip(1) {
            let s: u64 = stirling2_row(k).unwrap().iter().sum();
            assert_eq!(s, *b, "Bell({k})");
        }
    }

    #[test]
    fn stirling_out_of_range() {
        assert!(stirling2(0, 0).is_err());
        assert!(stirling2(3, 4).is_err());
        assert!(stirling2(21, 1).is_err());
        assert!(stirling2(5, 0).is_err());
        assert!(StirlingTable::new(0).is_err());
        assert!(StirlingTable::new(30).is_err());
        assert!(StirlingTable::new(25).is_ok());
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.0, 1), 3.0);
        assert_eq!(pochhammer(2.0, 2), 6.0);
        assert_relative_eq!(pochhammer(0.5, 3), 1.875, max_relative = 1e-15);
        assert_eq!(pochhammer(-4.2, 0), 1.0);
    }

    #[test]
    fn pochhammer_matches_gamma_ratio() {
        for &a in &[0.3, 0.75, 1.0, 2.5, 4.0, 11.3, 37.0] {
            for l in 0..8 {
                let direct = pochhammer(a, l);
                let via_gamma = (ln_gamma(a + l as f64) - ln_gamma(a)).exp();
                assert_relative_eq!(direct, via_gamma, max_relative = 1e-12);
                assert_relative_eq!(
                    ln_pochhammer(a, l).unwrap(),
                    direct.ln(),
                    epsilon = 1e-13,
                    max_relative = 1e-13
                );
            }
        }
        assert!(ln_pochhammer(0.0, 2).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        for n in 1..20u32 {
            assert_relative_eq!(ln_gamma(n as f64 + 1.0), factorial(n).ln(), epsilon = 1e-13, max_relative = 1e-13);
        }
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(1.5), (std::f64::consts::PI.sqrt() / 2.0).ln(), max_relative = 1e-13);
    }

    #[test]
    fn incomplete_gamma_examples() {
        assert_eq!(upper_incomplete_gamma_int(1, 0.0).unwrap(), 1.0);
        assert_eq!(upper_incomplete_gamma_int(2, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            upper_incomplete_gamma_int(3, 1.0).unwrap(),
            5.0 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(upper_incomplete_gamma_int(3, -0.5).is_err());
        assert!(upper_incomplete_gamma_int(0, 1.0).is_err());
    }

    #[test]
    fn incomplete_gamma_matches_quadrature() {
        let tol = Tolerance {
            rel: 1e-13,
            abs: 0.0,
            max_subdivisions: 2000,
        };
        for l in 0..=8u32 {
            for &x in &[0.0, 0.5, 1.0, 5.0] {
                let closed = upper_incomplete_gamma_int(l + 1, x).unwrap();
                let numeric = integrate_semi_infinite(
                    |z| z.powi(l as i32) * (-z).exp(),
                    x,
                    1.0,
                    &tol,
                )
                .unwrap()
                .value;
                assert_relative_eq!(closed, numeric, max_relative = 1e-10);
            }
        }
    }
}
