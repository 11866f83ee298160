//! Binary dihedral group actions on C² and the invariant-polynomial model of
//! the quotient singularity.
//!
//! D_k ⊂ SU(2) has order 4k, generated by ζ_k(z1,z2) = (e^{iπ/k}z1, e^{-iπ/k}z2)
//! and τ(z1,z2) = (z2, -z1). The invariant polynomials
//!
//! ```text
//! u = ½(z1^{2k+1} z2 - z2^{2k+1} z1),  v = (i/2)(z1^{2k} + z2^{2k}),  w = z1² z2²
//! ```
//!
//! satisfy the syzygy u² + v² w + w^{k+1} = 0 cutting out the quotient model.

use num_complex::Complex64;

use crate::taubnut::{metric_f, potential_phi, solve_uv, TaubNutPoint};
use crate::tensor::ComplexPoint;
use crate::{Error, Result};

/// 2×2 complex matrix acting on (z1, z2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2C(pub [[Complex64; 2]; 2]);

impl Mat2C {
    pub fn identity() -> Self {
        Self([
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    out[i][j] += self.0[i][l] * o.0[l][j];
                }
            }
        }
        Self(out)
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, z: ComplexPoint) -> ComplexPoint {
        ComplexPoint::new(
            self.0[0][0] * z.z1 + self.0[0][1] * z.z2,
            self.0[1][0] * z.z1 + self.0[1][1] * z.z2,
        )
    }

    pub fn max_dev(&self, o: &Self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - o.0[i][j]).norm());
            }
        }
        d
    }

    /// Real 4×4 matrix of the action on (x1, x2, x3, x4).
    pub fn real_matrix(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::zeros();
        // images of the basis vectors (1,0), (i,0), (0,1), (0,i)
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let images = [
            self.apply(ComplexPoint::new(one, zero)),
            self.apply(ComplexPoint::new(Complex64::i(), zero)),
            self.apply(ComplexPoint::new(zero, one)),
            self.apply(ComplexPoint::new(zero, Complex64::i())),
        ];
        for (col, im) in images.iter().enumerate() {
            let x = im.to_real().0;
            for row in 0..4 {
                m[(row, col)] = x[row];
            }
        }
        m
    }
}

/// Group element in the normal form ζ_k^a τ^b.
#[derive(Clone, Copy, Debug)]
pub struct DihedralElement {
    pub k: usize,
    /// power of ζ_k, in [0, 2k)
    pub a: usize,
    /// whether τ is applied
    pub b: bool,
    pub mat: Mat2C,
}

pub fn zeta_gen(k: usize) -> Mat2C {
    let th = std::f64::consts::PI / k as f64;
    Mat2C([
        [Complex64::from_polar(1.0, th), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, -th)],
    ])
}

pub fn tau_gen() -> Mat2C {
    Mat2C([
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        [Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)],
    ])
}

/// The binary dihedral group of order 4k, enumerated in normal form.
#[derive(Clone, Debug)]
pub struct DihedralGroup {
    pub k: usize,
    pub elements: Vec<DihedralElement>,
}

impl DihedralGroup {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadConfig(format!(
                "binary dihedral group needs k >= 2, got {k}"
            )));
        }
        let zeta = zeta_gen(k);
        let tau = tau_gen();
        let mut elements = Vec::with_capacity(4 * k);
        let mut pow = Mat2C::identity();
        for a in 0..(2 * k) {
            elements.push(DihedralElement {
                k,
                a,
                b: false,
                mat: pow,
            });
            elements.push(DihedralElement {
                k,
                a,
                b: true,
                mat: pow.mul(&tau),
            });
            pow = pow.mul(&zeta);
        }
        Ok(Self { k, elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Worst deviation of any pairwise product from the enumerated matrices.
    pub fn closure_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for g in &self.elements {
            for h in &self.elements {
                let p = g.mat.mul(&h.mat);
                let best = self
                    .elements
                    .iter()
                    .map(|e| e.mat.max_dev(&p))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        worst
    }
}

/// Matrix action of a group element on a point.
pub fn act(g: &DihedralElement, z: ComplexPoint) -> ComplexPoint {
    g.mat.apply(z)
}

/// Values of the three invariant polynomials.
#[derive(Clone, Copy, Debug)]
pub struct InvariantTriple {
    pub u: Complex64,
    pub v: Complex64,
    pub w: Complex64,
}

pub fn invariant_triple(z: ComplexPoint, k: usize) -> InvariantTriple {
    let n = 2 * k as i32;
    let u = 0.5 * (z.z1.powi(n + 1) * z.z2 - z.z2.powi(n + 1) * z.z1);
    let v = 0.5 * Complex64::i() * (z.z1.powi(n) + z.z2.powi(n));
    let w = z.z1 * z.z1 * z.z2 * z.z2;
    InvariantTriple { u, v, w }
}

impl InvariantTriple {
    /// Relative residual of u² + v² w + w^{k+1} = 0.
    pub fn syzygy_residual(&self, k: usize) -> f64 {
        let t1 = self.u * self.u;
        let t2 = self.v * self.v * self.w;
        let t3 = self.w.powu(k as u32 + 1);
        let scale = t1.norm().max(t2.norm()).max(t3.norm()).max(1e-300);
        (t1 + t2 + t3).norm() / scale
    }
}

/// Extra generator of the binary tetrahedral group (together with D_2).
pub fn binary_tetrahedral_extra() -> Mat2C {
    let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2C([[s * e.powu(7), s * e.powu(7)], [s * e.powu(5), s * e]])
}

/// Extra generator of the binary octahedral group (together with the
/// tetrahedral group).
pub fn binary_octahedral_extra() -> Mat2C {
    let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    Mat2C([
        [e, Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), e.powu(7)],
    ])
}

/// Invariance report of the implicit coordinates, the potential and the
/// metric under the whole group, plus the tetrahedral non-invariance witness.
#[derive(Clone, Debug)]
pub struct InvarianceReport {
    /// worst residual of u(ζz) = u(z), u(τz) = v(z) style relations
    pub uv_residual: f64,
    /// worst relative |φ(gz) - φ(z)|
    pub phi_residual: f64,
    /// worst relative metric pushforward deviation
    pub metric_residual: f64,
    /// max over samples of relative |φ(Tz) - φ(z)| for the tetrahedral extra
    pub tetrahedral_witness: f64,
}

pub fn check_potential_invariance(
    k: usize,
    m: f64,
    samples: &[ComplexPoint],
) -> Result<InvarianceReport> {
    let group = DihedralGroup::new(k)?;
    let mut uv_res = 0.0f64;
    let mut phi_res = 0.0f64;
    let mut metric_res = 0.0f64;
    let mut witness = 0.0f64;
    let tet = binary_tetrahedral_extra();
    for &z in samples {
        let p = TaubNutPoint::new(z, m)?;
        let phi = potential_phi(&p);
        let f = metric_f(&p)?;
        for g in &group.elements {
            let gz = act(g, z);
            let (gu, gv) = solve_uv(gz, m);
            // ζ_k preserves (u, v); τ interchanges them
            let (eu, ev) = if g.b { (p.v, p.u) } else { (p.u, p.v) };
            uv_res = uv_res.max((gu - eu).abs().max((gv - ev).abs()) / (1.0 + eu.max(ev)));
            let gp = TaubNutPoint::new(gz, m)?;
            phi_res = phi_res.max((potential_phi(&gp) - phi).abs() / (1.0 + phi.abs()));
            // pushforward invariance: Mᵀ f(Mx) M = f(x)
            let mat = g.mat.real_matrix();
            let fg = metric_f(&gp)?;
            let pulled = mat.transpose() * fg.0 * mat;
            metric_res = metric_res.max((pulled - f.0).amax() / (1.0 + f.0.amax()));
        }
        let tz = tet.apply(z);
        let tp = TaubNutPoint::new(tz, m)?;
        witness = witness.max((potential_phi(&tp) - phi).abs() / (1.0 + phi.abs()));
    }
    Ok(InvarianceReport {
        uv_residual: uv_res,
        phi_residual: phi_res,
        metric_residual: metric_res,
        tetrahedral_witness: witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_z(rng: &mut SplitMix64, r: f64) -> ComplexPoint {
        crate::tensor::RealPoint4(rng.on_sphere(r)).to_complex()
    }

    #[test]
    fn tau_action_and_square() {
        let tau = tau_gen();
        let z = ComplexPoint::new(Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25));
        let tz = tau.apply(z);
        assert_eq!(tz.z1, z.z2);
        assert_eq!(tz.z2, -z.z1);
        // τ² = -Id (multiply the matrices)
        let t2 = tau.mul(&tau);
        let minus_id = Mat2C([
            [Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
        ]);
        assert!(t2.max_dev(&minus_id) < 1e-15);
    }

    #[test]
    fn zeta_order_and_central_element() {
        for k in [2usize, 3, 5] {
            let zeta = zeta_gen(k);
            let mut pow = Mat2C::identity();
            for _ in 0..(2 * k) {
                pow = pow.mul(&zeta);
            }
            assert!(pow.max_dev(&Mat2C::identity()) < 1e-13, "ζ^2k ≠ Id");
            // ζ^k = τ² = -Id
            let mut half = Mat2C::identity();
            for _ in 0..k {
                half = half.mul(&zeta);
            }
            assert!(half.max_dev(&tau_gen().mul(&tau_gen())) < 1e-13);
        }
    }

    #[test]
    fn group_axioms() {
        for k in [2usize, 3, 5] {
            let g = DihedralGroup::new(k).unwrap();
            assert_eq!(g.order(), 4 * k);
            assert!(g.closure_defect() < 1e-12, "closure fails for k = {k}");
            for e in &g.elements {
                assert!(
                    (e.mat.det() - Complex64::new(1.0, 0.0)).norm() < 1e-12,
                    "det ≠ 1 (not in SU(2))"
                );
            }
            // all 4k matrices distinct
            for (i, a) in g.elements.iter().enumerate() {
                for b in &g.elements[i + 1..] {
                    assert!(a.mat.max_dev(&b.mat) > 1e-6);
                }
            }
        }
    }

    #[test]
    fn action_is_free_outside_origin() {
        let mut rng = SplitMix64::new(2).split("free");
        let g = DihedralGroup::new(3).unwrap();
        for _ in 0..20 {
            let r = rng.log_range(0.1, 10.0);
            let z = random_z(&mut rng, r);
            for e in g.elements.iter().skip(1) {
                let gz = act(e, z);
                let moved = (gz.z1 - z.z1).norm() + (gz.z2 - z.z2).norm();
                assert!(moved > 1e-8 * z.norm(), "fixed point off origin");
            }
        }
    }

    #[test]
    fn invariant_triple_basics() {
        let zero = ComplexPoint::from_re(0.0, 0.0);
        let t = invariant_triple(zero, 2);
        assert_eq!(t.u.norm(), 0.0);
        assert_eq!(t.v.norm(), 0.0);
        assert_eq!(t.w.norm(), 0.0);
        assert_eq!(t.syzygy_residual(2), 0.0);
        let mut rng = SplitMix64::new(7).split("syzygy");
        for k in [2usize, 3, 5] {
            for _ in 0..50 {
                let r = rng.log_range(0.3, 2.0);
                let z = random_z(&mut rng, r);
                let t = invariant_triple(z, k);
                assert!(
                    t.syzygy_residual(k) < 1e-10,
                    "syzygy residual {} at k = {k}",
                    t.syzygy_residual(k)
                );
            }
        }
    }

    #[test]
    fn triple_invariant_under_group() {
        let mut rng = SplitMix64::new(13).split("inv");
        for k in [2usize, 3, 5] {
            let g = DihedralGroup::new(k).unwrap();
            for _ in 0..10 {
                let r = rng.log_range(0.3, 1.5);
                let z = random_z(&mut rng, r);
                let t = invariant_triple(z, k);
                for e in &g.elements {
                    let tg = invariant_triple(act(e, z), k);
                    let scale = t.u.norm().max(t.v.norm()).max(t.w.norm()).max(1.0);
                    let dev = (tg.u - t.u)
                        .norm()
                        .max((tg.v - t.v).norm())
                        .max((tg.w - t.w).norm());
                    assert!(dev / scale < 1e-12, "triple moved by {dev} (k={k})");
                }
            }
        }
    }

    #[test]
    fn potential_and_metric_invariance() {
        let mut rng = SplitMix64::new(17).split("phi-inv");
        for k in [2usize, 3, 5] {
            let samples: Vec<ComplexPoint> = (0..8)
                .map(|_| {
                    let r = rng.log_range(0.5, 5.0);
                    random_z(&mut rng, r)
                })
                .collect();
            let rep = check_potential_invariance(k, 1.0, &samples).unwrap();
            assert!(rep.uv_residual < 1e-10, "uv residual {}", rep.uv_residual);
            assert!(rep.phi_residual < 1e-10, "phi residual {}", rep.phi_residual);
            assert!(
                rep.metric_residual < 1e-9,
                "metric residual {}",
                rep.metric_residual
            );
            assert!(
                rep.tetrahedral_witness > 1e-3,
                "tetrahedral witness too weak: {}",
                rep.tetrahedral_witness
            );
        }
    }

    #[test]
    fn tau_swaps_uv() {
        let mut rng = SplitMix64::new(19).split("tau-swap");
        for _ in 0..20 {
            let r = rng.log_range(0.3, 5.0);
            let z = random_z(&mut rng, r);
            let m = rng.log_range(0.1, 5.0);
            let (u, v) = solve_uv(z, m);
            let (ut, vt) = solve_uv(tau_gen().apply(z), m);
            assert!((ut - v).abs() < 1e-12 * (1.0 + v));
            assert!((vt - u).abs() < 1e-12 * (1.0 + u));
        }
    }

    #[test]
    fn witness_generators_are_unitary() {
        for g in [binary_tetrahedral_extra(), binary_octahedral_extra()] {
            assert!((g.det().norm() - 1.0).abs() < 1e-14);
        }
    }
}
