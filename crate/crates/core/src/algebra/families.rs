//! Classical compact families with explicit orthonormal bases.
//!
//! All three are realized as real skew-symmetric matrices: u(n) through the
//! realification `a + ib -> [[a, -b], [b, a]]`, sp(n) through left
//! multiplication of quaternions on `R^4`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use super::{Family, LieAlgebraModel, Representation};
use crate::error::{Error, Result};

fn index_label(prefix: &str, idx: &[usize], wide: bool) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    if wide {
        format!("{prefix}{}", parts.join("_"))
    } else {
        format!("{prefix}{}", parts.concat())
    }
}

/// so(n) with basis `f_ij = E_ij - E_ji`, `i < j`, in lexicographic order and
/// `<X, Y> = -1/2 tr(XY)`.
pub fn build_so(n: usize) -> Result<LieAlgebraModel> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("so(n) requires n >= 2, got {n}")));
    }
    let wide = n >= 10;
    let mut labels = Vec::new();
    let mut supports = Vec::new();
    let mut matrices = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
            matrices.push(m);
            labels.push(index_label("f", &[i, j], wide));
            supports.push(vec![i, j]);
        }
    }
    Ok(LieAlgebraModel::from_representation(
        Family::So(n),
        labels,
        supports,
        Representation {
            matrices,
            trace_scale: 0.5,
        },
        n / 2,
    ))
}

/// so(3) in the rigid-body basis where the bracket is the cross product:
/// `e_1 -> E_32 - E_23`, `e_2 -> E_13 - E_31`, `e_3 -> E_21 - E_12`.
pub fn build_rigid_body() -> LieAlgebraModel {
    let mut matrices = Vec::new();
    for (a, b) in [(2, 1), (0, 2), (1, 0)] {
        let mut m = DMatrix::zeros(3, 3);
        m[(a, b)] = 1.0;
        m[(b, a)] = -1.0;
        matrices.push(m);
    }
    LieAlgebraModel::from_representation(
        Family::RigidBody,
        vec!["L1".into(), "L2".into(), "L3".into()],
        vec![vec![1, 2], vec![0, 2], vec![0, 1]],
        Representation {
            matrices,
            trace_scale: 0.5,
        },
        1,
    )
}

/// Writes the `k x k` real block `block` at block position `(a, b)`.
fn put_block(m: &mut DMatrix<f64>, a: usize, b: usize, block: &DMatrix<f64>) {
    let k = block.nrows();
    let mut view = m.view_mut((a * k, b * k), (k, k));
    view += block;
}

fn complex_unit(re: f64, im: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[re, -im, im, re])
}

/// u(n) realified on `R^{2n}`. Basis order: diagonal imaginary units `d_a`,
/// then real-skew pairs `r_ab = (E_ab - E_ba)/sqrt2`, then imaginary-symmetric
/// pairs `i_ab = i(E_ab + E_ba)/sqrt2`, with `<X, Y> = -Re tr_C(XY)`.
pub fn build_u(n: usize) -> Result<LieAlgebraModel> {
    if n < 1 {
        return Err(Error::InvalidArgument("u(n) requires n >= 1".into()));
    }
    let wide = n >= 10;
    let size = 2 * n;
    let mut labels = Vec::new();
    let mut supports = Vec::new();
    let mut matrices = Vec::new();
    let one = complex_unit(1.0, 0.0);
    let i_unit = complex_unit(0.0, 1.0);
    for a in 0..n {
        let mut m = DMatrix::zeros(size, size);
        put_block(&mut m, a, a, &i_unit);
        matrices.push(m);
        labels.push(index_label("d", &[a], wide));
        supports.push(vec![a]);
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let mut m = DMatrix::zeros(size, size);
            put_block(&mut m, a, b, &(&one * FRAC_1_SQRT_2));
            put_block(&mut m, b, a, &(&one * -FRAC_1_SQRT_2));
            matrices.push(m);
            labels.push(index_label("r", &[a, b], wide));
            supports.push(vec![a, b]);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let mut m = DMatrix::zeros(size, size);
            put_block(&mut m, a, b, &(&i_unit * FRAC_1_SQRT_2));
            put_block(&mut m, b, a, &(&i_unit * FRAC_1_SQRT_2));
            matrices.push(m);
            labels.push(index_label("i", &[a, b], wide));
            supports.push(vec![a, b]);
        }
    }
    Ok(LieAlgebraModel::from_representation(
        Family::U(n),
        labels,
        supports,
        Representation {
            matrices,
            trace_scale: 0.5,
        },
        n,
    ))
}

/// Hamilton product of quaternions stored as `[re, i, j, k]`.
fn quat_mul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

/// Matrix of left multiplication by `q` on `R^4 = H`.
fn quat_left(q: [f64; 4]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, 4);
    for c in 0..4 {
        let mut e = [0.0; 4];
        e[c] = 1.0;
        let img = quat_mul(q, e);
        for r in 0..4 {
            m[(r, c)] = img[r];
        }
    }
    m
}

/// sp(n), quaternionic skew-Hermitian `n x n` matrices realified on `R^{4n}`.
/// Basis order: diagonal units `i_a, j_a, k_a`, then real-skew pairs `r_ab`,
/// then `i_ab, j_ab, k_ab = q(E_ab + E_ba)/sqrt2`, with `<X, Y> = -Re tr_H(XY)`.
pub fn build_sp(n: usize) -> Result<LieAlgebraModel> {
    if n < 1 {
        return Err(Error::InvalidArgument("sp(n) requires n >= 1".into()));
    }
    let wide = n >= 10;
    let size = 4 * n;
    let units = [
        ("i", [0.0, 1.0, 0.0, 0.0]),
        ("j", [0.0, 0.0, 1.0, 0.0]),
        ("k", [0.0, 0.0, 0.0, 1.0]),
    ];
    let one = quat_left([1.0, 0.0, 0.0, 0.0]);
    let mut labels = Vec::new();
    let mut supports = Vec::new();
    let mut matrices = Vec::new();
    for a in 0..n {
        for (name, q) in units {
            let mut m = DMatrix::zeros(size, size);
            put_block(&mut m, a, a, &quat_left(q));
            matrices.push(m);
            labels.push(index_label(name, &[a], wide));
            supports.push(vec![a]);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let mut m = DMatrix::zeros(size, size);
            put_block(&mut m, a, b, &(&one * FRAC_1_SQRT_2));
            put_block(&mut m, b, a, &(&one * -FRAC_1_SQRT_2));
            matrices.push(m);
            labels.push(index_label("r", &[a, b], wide));
            supports.push(vec![a, b]);
        }
    }
    for (name, q) in units {
        let lq = quat_left(q) * FRAC_1_SQRT_2;
        for a in 0..n {
            for b in (a + 1)..n {
                let mut m = DMatrix::zeros(size, size);
                put_block(&mut m, a, b, &lq);
                put_block(&mut m, b, a, &lq);
                matrices.push(m);
                labels.push(index_label(name, &[a, b], wide));
                supports.push(vec![a, b]);
            }
        }
    }
    Ok(LieAlgebraModel::from_representation(
        Family::Sp(n),
        labels,
        supports,
        Representation {
            matrices,
            trace_scale: 0.25,
        },
        n,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgElement;
    use nalgebra::DVector;

    fn gram_defect(g: &LieAlgebraModel) -> f64 {
        let rep = g.representation().unwrap();
        let n = g.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let ip = -rep.trace_scale * (&rep.matrices[i] * &rep.matrices[j]).trace();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - expect).abs());
            }
        }
        worst
    }

    #[test]
    fn dimensions_and_ranks() {
        let so3 = build_so(3).unwrap();
        assert_eq!((so3.dim(), so3.rank()), (3, 1));
        let so4 = build_so(4).unwrap();
        assert_eq!((so4.dim(), so4.rank()), (6, 2));
        assert_eq!(build_so(5).unwrap().dim(), 10);
        assert_eq!(build_u(2).unwrap().dim(), 4);
        assert_eq!(build_u(3).unwrap().rank(), 3);
        assert_eq!(build_sp(1).unwrap().dim(), 3);
        assert_eq!(build_sp(2).unwrap().dim(), 10);
        assert_eq!(build_sp(3).unwrap().dim(), 21);
    }

    #[test]
    fn rejects_small_n() {
        assert!(build_so(1).is_err());
        assert!(build_so(0).is_err());
        assert!(build_u(0).is_err());
        assert!(build_sp(0).is_err());
    }

    #[test]
    fn bases_are_orthonormal() {
        for g in [
            build_so(4).unwrap(),
            build_u(3).unwrap(),
            build_sp(2).unwrap(),
            build_rigid_body(),
        ] {
            assert!(gram_defect(&g) < 1e-14, "{:?}", g.family());
        }
    }

    #[test]
    fn so3_labels_follow_lexicographic_order() {
        let g = build_so(3).unwrap();
        assert_eq!(g.labels(), &["f12", "f13", "f23"]);
        let g = build_u(2).unwrap();
        assert_eq!(g.labels(), &["d1", "d2", "r12", "i12"]);
    }

    #[test]
    fn rigid_body_bracket_is_cross_product() {
        let g = build_rigid_body();
        let x: AlgElement = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let y: AlgElement = DVector::from_vec(vec![-0.5, 4.0, 1.0]);
        assert!((g.bracket(&x, &y) - x.cross(&y)).norm() < 1e-14);
    }

    #[test]
    fn sp1_is_so3_after_halving_the_basis() {
        // [i, j] = 2k for unit quaternions, so the basis q/2 has [e1, e2] = e3.
        let g = build_sp(1).unwrap();
        let eps = |i: usize, j: usize, k: usize| -> f64 {
            match (i, j, k) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (1, 0, 2) | (2, 1, 0) | (0, 2, 1) => -1.0,
                _ => 0.0,
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert!((g.c(i, j, k) - 2.0 * eps(i, j, k)).abs() < 1e-14);
                }
            }
        }
    }
}
