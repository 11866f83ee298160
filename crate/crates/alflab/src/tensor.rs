//! Pointwise tensor algebra on R⁴ ≅ C².
//!
//! Conventions, fixed once and tested rather than assumed:
//!  - coordinates (x1, x2, x3, x4) with z1 = x1 + i x2, z2 = x3 + i x4;
//!  - complex structures act on vector components, (J v)^a = J^a_b v^b;
//!  - the induced action on 1-forms is (J α)(X) = -α(J X), so that
//!    d^c = J ∘ d and dd^c = 2 i ∂∂̄;
//!  - a 2-form is stored as the antisymmetric matrix w_ab = ω(∂_a, ∂_b);
//!  - a Kähler form and its metric are related by g = w·J (then g(X,Y) =
//!    ω(X, JY)), which sends the Euclidean Kähler form dx1∧dx2 + dx3∧dx4
//!    to the identity matrix.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::{Error, Result};

/// Point of R⁴.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealPoint4(pub [f64; 4]);

/// Point of C².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl RealPoint4 {
    pub fn to_complex(self) -> ComplexPoint {
        ComplexPoint {
            z1: Complex64::new(self.0[0], self.0[1]),
            z2: Complex64::new(self.0[2], self.0[3]),
        }
    }

    pub fn norm(self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn shifted(self, axis: usize, delta: f64) -> Self {
        let mut x = self.0;
        x[axis] += delta;
        Self(x)
    }
}

impl ComplexPoint {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    pub fn from_re(a: f64, b: f64) -> Self {
        Self {
            z1: Complex64::new(a, 0.0),
            z2: Complex64::new(b, 0.0),
        }
    }

    pub fn to_real(self) -> RealPoint4 {
        RealPoint4([self.z1.re, self.z1.im, self.z2.re, self.z2.im])
    }

    pub fn norm(self) -> f64 {
        (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt()
    }
}

/// 1-form, components against (dx1, .., dx4).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OneForm4(pub [f64; 4]);

/// Vector field value, components against (∂/∂x1, .., ∂/∂x4).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VectorField4(pub [f64; 4]);

impl OneForm4 {
    pub fn pair(&self, x: &VectorField4) -> f64 {
        (0..4).map(|a| self.0[a] * x.0[a]).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self([c * self.0[0], c * self.0[1], c * self.0[2], c * self.0[3]])
    }

    pub fn add(&self, o: &Self) -> Self {
        Self([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl VectorField4 {
    pub fn scale(&self, c: f64) -> Self {
        Self([c * self.0[0], c * self.0[1], c * self.0[2], c * self.0[3]])
    }

    pub fn add(&self, o: &Self) -> Self {
        Self([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// 2-form as the antisymmetric matrix w_ab = ω(∂_a, ∂_b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoForm4(pub Matrix4<f64>);

impl TwoForm4 {
    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    /// Build from the six independent components ω(∂_a, ∂_b), a < b.
    pub fn from_upper(c: [f64; 6]) -> Self {
        let [w12, w13, w14, w23, w24, w34] = c;
        let mut m = Matrix4::zeros();
        m[(0, 1)] = w12;
        m[(0, 2)] = w13;
        m[(0, 3)] = w14;
        m[(1, 2)] = w23;
        m[(1, 3)] = w24;
        m[(2, 3)] = w34;
        Self(m - m.transpose())
    }

    pub fn apply(&self, x: &VectorField4, y: &VectorField4) -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += self.0[(a, b)] * x.0[a] * y.0[b];
            }
        }
        s
    }

    pub fn interior(&self, x: &VectorField4) -> OneForm4 {
        let mut out = [0.0; 4];
        for b in 0..4 {
            for a in 0..4 {
                out[b] += x.0[a] * self.0[(a, b)];
            }
        }
        OneForm4(out)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0 + o.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0 * c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self(self.0 - o.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        (self.0 + self.0.transpose()).amax()
    }
}

/// Symmetric 2-tensor (a metric when positive-definite).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric4(pub Matrix4<f64>);

impl Metric4 {
    pub fn euclidean() -> Self {
        Self(Matrix4::identity())
    }

    pub fn apply(&self, x: &VectorField4, y: &VectorField4) -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += self.0[(a, b)] * x.0[a] * y.0[b];
            }
        }
        s
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let se = nalgebra::SymmetricEigen::new(self.0);
        let mut ev = [0.0; 4];
        for i in 0..4 {
            ev[i] = se.eigenvalues[i];
        }
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn is_positive(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.try_inverse().map(Self)
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// Norm of a 1-form: sqrt(g^{ab} α_a α_b).
    pub fn form_norm(&self, alpha: &OneForm4) -> f64 {
        let gi = self.inverse().expect("metric must be invertible").0;
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += gi[(a, b)] * alpha.0[a] * alpha.0[b];
            }
        }
        s.max(0.0).sqrt()
    }

    /// Norm of a (0,2)-tensor: sqrt(g^{ac} g^{bd} T_ab T_cd).
    pub fn tensor2_norm(&self, t: &Matrix4<f64>) -> f64 {
        let gi = self.inverse().expect("metric must be invertible").0;
        let lifted = gi * t * gi;
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += lifted[(a, b)] * t[(a, b)];
            }
        }
        s.max(0.0).sqrt()
    }
}

/// Almost complex structure as the matrix of its action on vector components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlmostComplexStructure(pub Matrix4<f64>);

impl AlmostComplexStructure {
    pub fn apply_vector(&self, x: &VectorField4) -> VectorField4 {
        let mut out = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                out[a] += self.0[(a, b)] * x.0[b];
            }
        }
        VectorField4(out)
    }

    /// Action on 1-forms with the convention (J α)(X) = -α(J X).
    pub fn apply_form(&self, alpha: &OneForm4) -> OneForm4 {
        let mut out = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                out[a] -= self.0[(b, a)] * alpha.0[b];
            }
        }
        OneForm4(out)
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self(self.0 * o.0)
    }

    /// ‖J² + Id‖_∞.
    pub fn square_defect(&self) -> f64 {
        (self.0 * self.0 + Matrix4::identity()).amax()
    }
}

/// The three standard complex structures on R⁴ from the coordinate pairings
/// z = x1 + i x2, x3 + i x4 (I1), then x1 + i x3, x4 + i x2 (I2), and
/// x1 + i x4, x2 + i x3 (I3). They satisfy the quaternion relations
/// I1 I2 = -I2 I1 = I3.
pub fn standard_complex_structures() -> (
    AlmostComplexStructure,
    AlmostComplexStructure,
    AlmostComplexStructure,
) {
    // columns are the images of the basis vectors
    let i1 = Matrix4::from_columns(&[
        nalgebra::Vector4::new(0.0, 1.0, 0.0, 0.0),
        nalgebra::Vector4::new(-1.0, 0.0, 0.0, 0.0),
        nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0),
        nalgebra::Vector4::new(0.0, 0.0, -1.0, 0.0),
    ]);
    let i2 = Matrix4::from_columns(&[
        nalgebra::Vector4::new(0.0, 0.0, 1.0, 0.0),
        nalgebra::Vector4::new(0.0, 0.0, 0.0, -1.0),
        nalgebra::Vector4::new(-1.0, 0.0, 0.0, 0.0),
        nalgebra::Vector4::new(0.0, 1.0, 0.0, 0.0),
    ]);
    let i3 = Matrix4::from_columns(&[
        nalgebra::Vector4::new(0.0, 0.0, 0.0, 1.0),
        nalgebra::Vector4::new(0.0, 0.0, 1.0, 0.0),
        nalgebra::Vector4::new(0.0, -1.0, 0.0, 0.0),
        nalgebra::Vector4::new(-1.0, 0.0, 0.0, 0.0),
    ]);
    (
        AlmostComplexStructure(i1),
        AlmostComplexStructure(i2),
        AlmostComplexStructure(i3),
    )
}

/// Euclidean Kähler form dx1∧dx2 + dx3∧dx4.
pub fn euclidean_kahler_form() -> TwoForm4 {
    TwoForm4::from_upper([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}

/// (a ∧ b)(X, Y) = a(X) b(Y) - a(Y) b(X).
pub fn wedge(a: &OneForm4, b: &OneForm4) -> TwoForm4 {
    let mut m = Matrix4::zeros();
    for p in 0..4 {
        for q in 0..4 {
            m[(p, q)] = a.0[p] * b.0[q] - a.0[q] * b.0[p];
        }
    }
    TwoForm4(m)
}

/// Coefficient of w1 ∧ w2 against dx1∧dx2∧dx3∧dx4.
pub fn wedge_coefficient(w1: &TwoForm4, w2: &TwoForm4) -> f64 {
    let a = &w1.0;
    let b = &w2.0;
    a[(0, 1)] * b[(2, 3)] + a[(2, 3)] * b[(0, 1)] - a[(0, 2)] * b[(1, 3)] - a[(1, 3)] * b[(0, 2)]
        + a[(0, 3)] * b[(1, 2)]
        + a[(1, 2)] * b[(0, 3)]
}

/// Coefficient of w1 ∧ w2 against the standard volume form.
pub fn two_form_wedge_ratio(w1: &TwoForm4, w2: &TwoForm4) -> f64 {
    wedge_coefficient(w1, w2)
}

/// (1,1)-form with hermitian coefficient matrix [[h11, h12], [conj h12, h22]]
/// against (i dz_j ∧ dz̄_k), returned as a real 2-form.
pub fn one_one_form(h11: f64, h22: f64, h12: Complex64) -> TwoForm4 {
    let (a, b) = (h12.re, h12.im);
    TwoForm4::from_upper([2.0 * h11, -2.0 * b, 2.0 * a, -2.0 * a, -2.0 * b, 2.0 * h22])
}

/// Hermitian coefficients of a (1,1)-form, inverse of [`one_one_form`].
pub fn hermitian_coefficients(w: &TwoForm4) -> (f64, f64, Complex64) {
    let m = &w.0;
    let h11 = 0.5 * m[(0, 1)];
    let h22 = 0.5 * m[(2, 3)];
    let a = 0.25 * (m[(0, 3)] - m[(1, 2)]);
    let b = -0.25 * (m[(0, 2)] + m[(1, 3)]);
    (h11, h22, Complex64::new(a, b))
}

/// Metric of a Kähler form: g = w·J, symmetrized against roundoff.
pub fn metric_from_form(w: &TwoForm4, j: &AlmostComplexStructure) -> Metric4 {
    let g = w.0 * j.0;
    Metric4(0.5 * (g + g.transpose()))
}

/// dd^c of a scalar function by finite differences: dd^c φ = -(J H + H J)
/// with H the Hessian. Fourth-order stencils, step h.
pub fn ddc_fd(phi: &dyn Fn(RealPoint4) -> f64, p: RealPoint4, h: f64) -> Result<TwoForm4> {
    if h <= 0.0 {
        return Err(Error::InvalidStep(h));
    }
    let hess = hessian4(phi, p, h);
    let (i1, _, _) = standard_complex_structures();
    let j = i1.0;
    Ok(TwoForm4(-(j * hess + hess * j)))
}

/// i ∂∂̄ of a scalar function by finite differences (half of dd^c).
pub fn i_del_delbar_fd(phi: &dyn Fn(RealPoint4) -> f64, p: RealPoint4, h: f64) -> Result<TwoForm4> {
    ddc_fd(phi, p, h).map(|w| w.scale(0.5))
}

/// i ∂∂̄ from an explicitly known real Hessian.
pub fn i_del_delbar_from_hessian(hess: &Matrix4<f64>) -> TwoForm4 {
    let (i1, _, _) = standard_complex_structures();
    let j = i1.0;
    TwoForm4(-0.5 * (j * hess + hess * j))
}

/// Abstract 2-form on R³ in the (dy2∧dy3, dy3∧dy1, dy1∧dy2) basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Star3Form {
    pub c23: f64,
    pub c31: f64,
    pub c12: f64,
}

/// Hodge star of R³ applied to a 1-form with components (a, b, c) against
/// (dy1, dy2, dy3): a dy2∧dy3 + b dy3∧dy1 + c dy1∧dy2.
pub fn hodge_star_r3(dv: (f64, f64, f64)) -> Star3Form {
    Star3Form {
        c23: dv.0,
        c31: dv.1,
        c12: dv.2,
    }
}

impl Star3Form {
    /// Materialize against concrete coordinate expressions of dy1, dy2, dy3.
    pub fn to_two_form(&self, dy1: &OneForm4, dy2: &OneForm4, dy3: &OneForm4) -> TwoForm4 {
        wedge(dy2, dy3)
            .scale(self.c23)
            .add(&wedge(dy3, dy1).scale(self.c31))
            .add(&wedge(dy1, dy2).scale(self.c12))
    }
}

/// Antisymmetrized finite-difference exterior derivative of a 1-form field,
/// (dα)_ab = ∂_a α_b - ∂_b α_a, second-order central differences.
pub fn exterior_derivative(
    field: &dyn Fn(RealPoint4) -> OneForm4,
    p: RealPoint4,
    h: f64,
) -> Result<TwoForm4> {
    if h <= 0.0 {
        return Err(Error::InvalidStep(h));
    }
    let mut grad = [[0.0; 4]; 4]; // grad[a][b] = ∂_a α_b
    for a in 0..4 {
        let fp = field(p.shifted(a, h));
        let fm = field(p.shifted(a, -h));
        for b in 0..4 {
            grad[a][b] = (fp.0[b] - fm.0[b]) / (2.0 * h);
        }
    }
    let mut m = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            m[(a, b)] = grad[a][b] - grad[b][a];
        }
    }
    Ok(TwoForm4(m))
}

// ---------------------------------------------------------------------------
// finite-difference helpers shared across modules
// ---------------------------------------------------------------------------

/// Fourth-order central first derivative along one axis.
pub fn partial4(f: &dyn Fn(RealPoint4) -> f64, p: RealPoint4, axis: usize, h: f64) -> f64 {
    let f1 = f(p.shifted(axis, h)) - f(p.shifted(axis, -h));
    let f2 = f(p.shifted(axis, 2.0 * h)) - f(p.shifted(axis, -2.0 * h));
    (8.0 * f1 - f2) / (12.0 * h)
}

/// Sixth-order central first derivative along one axis.
pub fn partial6(f: &dyn Fn(RealPoint4) -> f64, p: RealPoint4, axis: usize, h: f64) -> f64 {
    let f1 = f(p.shifted(axis, h)) - f(p.shifted(axis, -h));
    let f2 = f(p.shifted(axis, 2.0 * h)) - f(p.shifted(axis, -2.0 * h));
    let f3 = f(p.shifted(axis, 3.0 * h)) - f(p.shifted(axis, -3.0 * h));
    (45.0 * f1 - 9.0 * f2 + f3) / (60.0 * h)
}

/// Full Hessian with fourth-order stencils (pure seconds direct, mixed nested).
pub fn hessian4(f: &dyn Fn(RealPoint4) -> f64, p: RealPoint4, h: f64) -> Matrix4<f64> {
    let mut hess = Matrix4::zeros();
    for a in 0..4 {
        let f0 = f(p);
        let f1 = f(p.shifted(a, h)) + f(p.shifted(a, -h));
        let f2 = f(p.shifted(a, 2.0 * h)) + f(p.shifted(a, -2.0 * h));
        hess[(a, a)] = (-30.0 * f0 + 16.0 * f1 - f2) / (12.0 * h * h);
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            let g = |q: RealPoint4| partial4(f, q, b, h);
            let v = partial4(&g, p, a, h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}
