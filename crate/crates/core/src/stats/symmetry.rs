//! Crystal symmetry operators acting on orientation quaternions.
//!
//! Each operator is right multiplication by a symmetry quaternion `s`,
//! `x ↦ x ⊗ s`, held both as the quaternion and as its orthogonal 4×4
//! matrix. Since `q` and `-q` describe the same rotation, operator sets are
//! closed up to sign: the cubic group has 24 operators, one per rotation.

use crate::error::{Error, Result};
use crate::field::{self, Quat};

pub type Mat4 = [[f64; 4]; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGroup {
    quats: Vec<Quat>,
    matrices: Vec<Mat4>,
    /// Some product of two operators is the negative of an operator.
    signed: bool,
}

/// Matrix of `x ↦ x ⊗ s`.
fn right_mul_matrix(s: &Quat) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (j, basis) in [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
    .iter()
    .enumerate()
    {
        let col = field::mul(basis, s);
        for i in 0..4 {
            m[i][j] = col[i];
        }
    }
    m
}

/// Sign convention: first component with magnitude above 1e-9 is positive.
fn canonical_sign(q: Quat) -> Quat {
    let lead = q.iter().copied().find(|c| c.abs() > 1e-9).unwrap_or(1.0);
    if lead < 0.0 {
        [-q[0], -q[1], -q[2], -q[3]]
    } else {
        q
    }
}

fn same_rotation(a: &Quat, b: &Quat, tol: f64) -> bool {
    (field::dot(a, b).abs() - 1.0).abs() <= tol
}

impl SymmetryGroup {
    /// Builds the operator set from unit quaternions, deduplicating `±s`.
    pub fn from_quaternions(quats: &[Quat]) -> Result<Self> {
        let mut unique: Vec<Quat> = Vec::new();
        for q in quats {
            let q = field::normalize(q).ok_or_else(|| Error::Domain("zero symmetry quaternion".into()))?;
            let q = canonical_sign(q);
            if !unique.iter().any(|u| same_rotation(u, &q, 1e-9)) {
                unique.push(q);
            }
        }
        if !unique.iter().any(|u| same_rotation(u, &[1.0, 0.0, 0.0, 0.0], 1e-9)) {
            return Err(Error::Domain("symmetry group lacks the identity".into()));
        }
        let matrices = unique.iter().map(right_mul_matrix).collect();
        let signed = unique.iter().any(|a| {
            unique.iter().any(|b| {
                let p = field::mul(a, b);
                !unique.iter().any(|c| (field::dot(c, &p) - 1.0).abs() <= 1e-9)
            })
        });
        Ok(SymmetryGroup {
            quats: unique,
            matrices,
            signed,
        })
    }

    /// Closure of the given generators under composition.
    pub fn generated_by(generators: &[Quat]) -> Result<Self> {
        let mut elems: Vec<Quat> = vec![[1.0, 0.0, 0.0, 0.0]];
        let mut frontier = elems.clone();
        while let Some(g) = frontier.pop() {
            for h in generators {
                let p = canonical_sign(field::mul(&g, h));
                if !elems.iter().any(|e| same_rotation(e, &p, 1e-9)) {
                    elems.push(p);
                    frontier.push(p);
                }
                if elems.len() > 1024 {
                    return Err(Error::Domain("generators do not span a finite group".into()));
                }
            }
        }
        SymmetryGroup::from_quaternions(&elems)
    }

    /// The 24 proper rotations of the cube, generated by a 4-fold rotation
    /// about z and a 3-fold rotation about the body diagonal.
    pub fn cubic() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SymmetryGroup::generated_by(&[[h, 0.0, 0.0, h], [0.5, 0.5, 0.5, 0.5]])
            .expect("cubic generators span a group")
    }

    pub fn trivial() -> Self {
        SymmetryGroup::from_quaternions(&[[1.0, 0.0, 0.0, 0.0]]).expect("identity group")
    }

    pub fn len(&self) -> usize {
        self.quats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quats.is_empty()
    }

    /// Whether the operators are closed under composition only up to sign,
    /// so that densities must also include the negated operators to stay
    /// invariant.
    pub fn needs_sign_doubling(&self) -> bool {
        self.signed
    }

    pub fn quaternions(&self) -> &[Quat] {
        &self.quats
    }

    pub fn matrices(&self) -> &[Mat4] {
        &self.matrices
    }

    /// `Q_m x`.
    pub fn apply(&self, m: usize, x: &Quat) -> Quat {
        mat_vec(&self.matrices[m], x)
    }

    /// `Q_mᵀ x`, the inverse action.
    pub fn apply_transpose(&self, m: usize, x: &Quat) -> Quat {
        let q = &self.matrices[m];
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = q[0][i] * x[0] + q[1][i] * x[1] + q[2][i] * x[2] + q[3][i] * x[3];
        }
        out
    }

    /// Whether every product of two operators is (up to sign) an operator.
    pub fn is_closed(&self, tol: f64) -> bool {
        self.matrices.iter().all(|a| {
            self.matrices.iter().all(|b| {
                let ab = mat_mul(a, b);
                self.matrices.iter().any(|c| {
                    let plus = max_abs_diff(&ab, c, 1.0);
                    let minus = max_abs_diff(&ab, c, -1.0);
                    plus.min(minus) <= tol
                })
            })
        })
    }
}

pub(crate) fn mat_vec(m: &Mat4, x: &Quat) -> Quat {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2] + m[i][3] * x[3];
    }
    out
}

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn max_abs_diff(a: &Mat4, b: &Mat4, sign: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - sign * b[i][j]).abs());
        }
    }
    worst
}
