use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::AlgebraElement;

/// Which constraint and exp dispatch a group uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    So3,
    Se3,
    Sl2,
    Heisenberg3,
    Gl(usize),
    Rplus,
}

/// Descriptor of a matrix Lie group: ambient size, algebra basis, constraint.
#[derive(Debug)]
pub struct LieGroupSpec {
    kind: GroupKind,
    name: String,
    ambient_dim: usize,
    basis: Vec<DMatrix<f64>>,
    /// Columns are vectorized basis matrices, n^2 x m.
    basis_mat: DMatrix<f64>,
    /// (B^T B)^{-1} B^T — coordinates of the orthogonal projection.
    coord_solver: DMatrix<f64>,
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

impl LieGroupSpec {
    fn build(kind: GroupKind, name: &str, ambient_dim: usize, basis: Vec<DMatrix<f64>>) -> Arc<Self> {
        let m = basis.len();
        let n2 = ambient_dim * ambient_dim;
        let mut basis_mat = DMatrix::zeros(n2, m);
        for (k, b) in basis.iter().enumerate() {
            basis_mat.set_column(k, &vec_of(b));
        }
        let gram = basis_mat.transpose() * &basis_mat;
        let gram_inv = gram
            .try_inverse()
            .expect("algebra basis must be linearly independent");
        let coord_solver = gram_inv * basis_mat.transpose();
        Arc::new(Self {
            kind,
            name: name.to_string(),
            ambient_dim,
            basis,
            basis_mat,
            coord_solver,
        })
    }

    pub fn so3() -> Arc<Self> {
        let l = |i: usize, j: usize| {
            let mut m = DMatrix::zeros(3, 3);
            m[(i, j)] = -1.0;
            m[(j, i)] = 1.0;
            m
        };
        // L1, L2, L3 with [L1, L2] = L3 cyclically
        Self::build(GroupKind::So3, "so3", 3, vec![l(1, 2), l(2, 0), l(0, 1)])
    }

    pub fn se3() -> Arc<Self> {
        let mut basis = Vec::new();
        for (i, j) in [(1usize, 2usize), (2, 0), (0, 1)] {
            let mut m = DMatrix::zeros(4, 4);
            m[(i, j)] = -1.0;
            m[(j, i)] = 1.0;
            basis.push(m);
        }
        for i in 0..3 {
            let mut m = DMatrix::zeros(4, 4);
            m[(i, 3)] = 1.0;
            basis.push(m);
        }
        Self::build(GroupKind::Se3, "se3", 4, basis)
    }

    pub fn sl2() -> Arc<Self> {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        Self::build(GroupKind::Sl2, "sl2", 2, vec![h, e, f])
    }

    pub fn heisenberg3() -> Arc<Self> {
        let e = |i: usize, j: usize| {
            let mut m = DMatrix::zeros(3, 3);
            m[(i, j)] = 1.0;
            m
        };
        Self::build(
            GroupKind::Heisenberg3,
            "heisenberg3",
            3,
            vec![e(0, 1), e(1, 2), e(0, 2)],
        )
    }

    pub fn gl(n: usize) -> Arc<Self> {
        let mut basis = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = 1.0;
                basis.push(m);
            }
        }
        Self::build(GroupKind::Gl(n), &format!("gl{n}"), n, basis)
    }

    pub fn rplus() -> Arc<Self> {
        Self::build(
            GroupKind::Rplus,
            "rplus",
            1,
            vec![DMatrix::from_element(1, 1, 1.0)],
        )
    }

    /// Look a group up by its string id.
    pub fn from_name(name: &str) -> Result<Arc<Self>> {
        match name {
            "so3" => Ok(Self::so3()),
            "se3" => Ok(Self::se3()),
            "sl2" => Ok(Self::sl2()),
            "heisenberg3" => Ok(Self::heisenberg3()),
            "gl3" => Ok(Self::gl(3)),
            "rplus" => Ok(Self::rplus()),
            other => Err(Error::UnknownGroup(other.to_string())),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn basis_element(self: &Arc<Self>, k: usize) -> AlgebraElement {
        AlgebraElement::unchecked(self.clone(), self.basis[k].clone())
    }

    /// Algebra element from basis coordinates.
    pub fn from_coords(self: &Arc<Self>, coords: &[f64]) -> AlgebraElement {
        assert_eq!(coords.len(), self.algebra_dim());
        let mut m = DMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for (c, b) in coords.iter().zip(&self.basis) {
            m += b.scale(*c);
        }
        AlgebraElement::unchecked(self.clone(), m)
    }

    /// Coordinates of the orthogonal projection of `m` onto the basis span.
    pub fn coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        &self.coord_solver * vec_of(m)
    }

    /// Orthogonal projection onto span(basis), as an ambient matrix.
    pub fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let v = &self.basis_mat * (&self.coord_solver * vec_of(m));
        DMatrix::from_column_slice(self.ambient_dim, self.ambient_dim, v.as_slice())
    }

    /// Frobenius distance of `m` to span(basis).
    pub fn span_distance(&self, m: &DMatrix<f64>) -> f64 {
        (m - self.project(m)).norm()
    }

    /// Residual of the per-group constraint; 0 means on the group.
    pub fn constraint_residual(&self, m: &DMatrix<f64>) -> f64 {
        match self.kind {
            GroupKind::So3 => rotation_residual(&m.clone_owned()),
            GroupKind::Se3 => {
                let r = m.view((0, 0), (3, 3)).clone_owned();
                let mut res = rotation_residual(&r);
                for j in 0..4 {
                    let want = if j == 3 { 1.0 } else { 0.0 };
                    res += (m[(3, j)] - want).abs();
                }
                res
            }
            GroupKind::Sl2 => (m.determinant() - 1.0).abs(),
            GroupKind::Heisenberg3 => {
                let mut res = 0.0;
                for i in 0..3 {
                    res += (m[(i, i)] - 1.0).abs();
                    for j in 0..i {
                        res += m[(i, j)].abs();
                    }
                }
                res
            }
            GroupKind::Gl(_) => {
                if m.determinant().abs() > 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GroupKind::Rplus => {
                if m[(0, 0)] > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

fn rotation_residual(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    let ortho = (r.transpose() * r - DMatrix::<f64>::identity(n, n)).norm();
    ortho + (r.determinant() - 1.0).abs()
}
