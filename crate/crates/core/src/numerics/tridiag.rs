//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for
//! eigenvalues, inverse iteration for eigenvectors.

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::param("diag", "matrix must have at least one row"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::param(
                "offdiag",
                format!(
                    "expected {} off-diagonal entries, got {}",
                    diag.len() - 1,
                    offdiag.len()
                ),
            ));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::param("diag", "entries must be finite"));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.diag[i].abs() + self.coupling(i))
            .fold(0.0, f64::max)
    }

    fn coupling(&self, i: usize) -> f64 {
        let left = if i > 0 {
            self.offdiag[i - 1].abs()
        } else {
            0.0
        };
        let right = self.offdiag.get(i).map_or(0.0, |e| e.abs());
        left + right
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        (0..self.dim()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = self.coupling(i);
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (count of negative pivots of
    /// the LDLᵀ factorization of `T − xI`).
    pub fn sturm_count(&self, x: f64) -> usize {
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut pivot = self.diag[0] - x;
        if pivot.abs() < pivmin {
            pivot = -pivmin;
        }
        if pivot < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let e = self.offdiag[i - 1];
            pivot = (self.diag[i] - x) - e * e / pivot;
            if pivot.abs() < pivmin {
                pivot = -pivmin;
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn pivot_floor(&self) -> f64 {
        let max_e2 = self.offdiag.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * max_e2
    }

    /// The `index`-th smallest eigenvalue, bisected until the bracket cannot
    /// shrink further in floating point.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::param(
                "index",
                format!("{index} out of range for dimension {}", self.dim()),
            ));
        }
        let (g_lo, g_hi) = self.gershgorin();
        let pad = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE) * 4.0;
        let mut lo = g_lo - pad;
        let mut hi = g_hi + pad;
        for _ in 0..2048 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Eigenvalue, unit eigenvector and the achieved residual `‖Tv − λv‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Entries smaller than this (relative to the largest) do not decide the sign.
const SIGN_THRESHOLD: f64 = 1e-12;
const MAX_INVERSE_STEPS: usize = 12;

/// Returns the `index`-th smallest eigenpair with the eigenvector normalized
/// and its first non-negligible entry positive. Fails if the residual
/// `‖Tv − λv‖` does not drop below `tol · ‖T‖∞`.
pub fn eigen_lowest(matrix: &SymTridiag, index: usize, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let value = matrix.eigenvalue(index)?;
    let n = matrix.dim();
    let scale = matrix.norm_inf().max(f64::MIN_POSITIVE);

    if n == 1 {
        return Ok(EigenPair {
            value,
            vector: vec![1.0],
            residual: 0.0,
        });
    }

    let lu = ShiftedLu::factor(matrix, value, f64::EPSILON * scale);
    // deterministic start vector with no special symmetry
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    normalize(&mut v);

    let mut residual = f64::INFINITY;
    for step in 0..MAX_INVERSE_STEPS {
        lu.solve(&mut v);
        normalize(&mut v);
        let tv = matrix.mul_vec(&v);
        residual = tv
            .iter()
            .zip(&v)
            .map(|(t, x)| (t - value * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if step >= 1 && residual <= tol * scale {
            fix_sign(&mut v);
            return Ok(EigenPair {
                value,
                vector: v,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "inverse iteration",
        residual,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// LU factorization with partial pivoting of `T − σI` (LAPACK `dgttrf`
/// layout: multipliers `dl`, diagonal `d`, first and second superdiagonals
/// `du`, `du2`).
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(matrix: &SymTridiag, shift: f64, tiny: f64) -> Self {
        let n = matrix.dim();
        let mut d: Vec<f64> = matrix.diag.iter().map(|x| x - shift).collect();
        let mut dl = matrix.offdiag.clone();
        let mut du = matrix.offdiag.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        // guard against overflow for an (almost) exactly singular shift
        let max = b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !max.is_finite() || max > 1e250 {
            let s = if max.is_finite() { 1.0 / max } else { 0.0 };
            b.iter_mut()
                .for_each(|x| *x = if x.is_finite() { *x * s } else { x.signum() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn mat(d: &[f64], e: &[f64]) -> SymTridiag {
        SymTridiag::new(d.to_vec(), e.to_vec()).unwrap()
    }

    /// Mathieu ce-even recurrence matrix, built independently of the mathieu module.
    fn ce_even(q: f64, k: usize) -> SymTridiag {
        let d = (0..k).map(|i| 4.0 * (i * i) as f64).collect();
        let mut e = vec![q; k - 1];
        e[0] = SQRT_2 * q;
        SymTridiag::new(d, e).unwrap()
    }

    #[test]
    fn decoupled_pair() {
        let p = eigen_lowest(&mat(&[1.0, 2.0], &[0.0]), 0, 1e-14).unwrap();
        assert!((p.value - 1.0).abs() < 1e-15);
        assert!((p.vector[0] - 1.0).abs() < 1e-14 && p.vector[1].abs() < 1e-14);
    }

    #[test]
    fn two_by_two_symmetric() {
        let p = eigen_lowest(&mat(&[0.0, 0.0], &[1.0]), 0, 1e-14).unwrap();
        assert!((p.value + 1.0).abs() < 1e-15);
        let s = 1.0 / SQRT_2;
        assert!((p.vector[0] - s).abs() < 1e-12 && (p.vector[1] + s).abs() < 1e-12);
    }

    #[test]
    fn mathieu_ground_value() {
        // a₀(1) = −0.455138604107...; the Sturm-count bracket below is an
        // independent oracle on the same K = 64 matrix.
        let m = ce_even(1.0, 64);
        assert!(m.sturm_count(-0.455_138_605) == 0);
        assert!(m.sturm_count(-0.455_138_603) == 1);
        let p = eigen_lowest(&m, 0, 1e-14).unwrap();
        assert!((p.value + 0.455_138_604_107).abs() < 1e-11);
    }

    #[test]
    fn truncation_convergence_at_q2() {
        let small = ce_even(2.0, 64);
        let large = ce_even(2.0, 128);
        for i in 0..5 {
            let a = small.eigenvalue(i).unwrap();
            let b = large.eigenvalue(i).unwrap();
            assert!((a - b).abs() < 1e-13, "index {i}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymTridiag::new(vec![], vec![]).is_err());
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiag::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
        assert!(eigen_lowest(&mat(&[1.0, 2.0], &[0.5]), 2, 1e-12).is_err());
    }

    #[test]
    fn ordered_and_orthogonal() {
        let m = ce_even(7.5, 40);
        let pairs: Vec<EigenPair> = (0..8)
            .map(|i| eigen_lowest(&m, i, 1e-13).unwrap())
            .collect();
        for w in pairs.windows(2) {
            assert!(w[0].value <= w[1].value);
        }
        for i in 0..pairs.len() {
            for j in 0..i {
                let dot: f64 = pairs[i]
                    .vector
                    .iter()
                    .zip(&pairs[j].vector)
                    .map(|(a, b)| a * b)
                    .sum();
                assert!(dot.abs() < 1e-10, "({i},{j}) dot {dot}");
            }
        }
    }

    #[test]
    fn first_entry_positive() {
        let m = ce_even(3.0, 32);
        for i in 0..4 {
            let p = eigen_lowest(&m, i, 1e-13).unwrap();
            assert!(p.vector[0] > 0.0);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eigenvalues_nondecreasing_and_vectors_orthogonal(
                diag in prop::collection::vec(-10.0f64..10.0, 2..24),
                seed in prop::collection::vec(-3.0f64..3.0, 23),
            ) {
                let n = diag.len();
                let off: Vec<f64> = seed[..n - 1].iter().map(|x| x + 0.5f64.copysign(*x)).collect();
                let m = SymTridiag::new(diag, off).unwrap();
                let values: Vec<f64> = (0..n).map(|i| m.eigenvalue(i).unwrap()).collect();
                for w in values.windows(2) {
                    prop_assert!(w[0] <= w[1]);
                }
                let trace: f64 = m.diag().iter().sum();
                prop_assert!((values.iter().sum::<f64>() - trace).abs() < 1e-9 * (1.0 + trace.abs()));
                // |offdiag| ≥ 0.5 keeps the spectrum simple, so vectors are well defined
                let vecs: Vec<Vec<f64>> = (0..n).map(|i| eigen_lowest(&m, i, 1e-12).unwrap().vector).collect();
                for i in 0..n {
                    for j in 0..i {
                        let gap = (values[i] - values[j]).abs();
                        if gap > 1e-4 {
                            let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                            prop_assert!(dot.abs() < 1e-10 / gap.min(1.0), "dot {} gap {}", dot, gap);
                        }
                    }
                }
            }
        }
    }
}
