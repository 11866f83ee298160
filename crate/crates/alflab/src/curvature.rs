//! Finite-difference Riemannian curvature of a pointwise-evaluable metric.
//!
//! Christoffel symbols come from sixth-order central differences of the
//! metric components; the Riemann tensor from sixth-order differences of the
//! Christoffels. High order matters: the curvature norms being measured decay
//! like R⁻³ while the raw metric entries spread over a wide dynamic range, so
//! second-order stencils would drown the signal in truncation error.

use nalgebra::Matrix4;

use crate::tensor::RealPoint4;

pub type MetricFn<'a> = &'a (dyn Fn(RealPoint4) -> Matrix4<f64> + Sync);

fn partial6_mat(g: MetricFn, p: RealPoint4, axis: usize, h: f64) -> Matrix4<f64> {
    let f1 = g(p.shifted(axis, h)) - g(p.shifted(axis, -h));
    let f2 = g(p.shifted(axis, 2.0 * h)) - g(p.shifted(axis, -2.0 * h));
    let f3 = g(p.shifted(axis, 3.0 * h)) - g(p.shifted(axis, -3.0 * h));
    (45.0 * f1 - 9.0 * f2 + f3) / (60.0 * h)
}

/// Christoffel symbols Γ^a_{bc} of the metric at p.
pub fn christoffels(g: MetricFn, p: RealPoint4, h: f64) -> [[[f64; 4]; 4]; 4] {
    let g0 = g(p);
    let gi = g0.try_inverse().expect("metric not invertible");
    let dg: Vec<Matrix4<f64>> = (0..4).map(|a| partial6_mat(g, p, a, h)).collect();
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for d in 0..4 {
                    s += gi[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                }
                gamma[a][b][c] = 0.5 * s;
            }
        }
    }
    gamma
}

/// Lowered Riemann tensor R_{abcd} = g_{ae} R^e_{bcd} with
/// R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} - Γ^a_{de} Γ^e_{cb}.
pub fn riemann_lowered(g: MetricFn, p: RealPoint4, h: f64) -> [[[[f64; 4]; 4]; 4]; 4] {
    let gamma = christoffels(g, p, h);
    // ∂_c Γ, sixth-order nested differences
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4]; // dgamma[c][a][d][b] = ∂_c Γ^a_{db}
    for c in 0..4 {
        let mut acc = [[[0.0; 4]; 4]; 4];
        for (off, wt) in [
            (1.0, 45.0),
            (-1.0, -45.0),
            (2.0, -9.0),
            (-2.0, 9.0),
            (3.0, 1.0),
            (-3.0, -1.0),
        ] {
            let gm = christoffels(g, p.shifted(c, off * h), h);
            for a in 0..4 {
                for d in 0..4 {
                    for b in 0..4 {
                        acc[a][d][b] += wt * gm[a][d][b];
                    }
                }
            }
        }
        for a in 0..4 {
            for d in 0..4 {
                for b in 0..4 {
                    dgamma[c][a][d][b] = acc[a][d][b] / (60.0 * h);
                }
            }
        }
    }
    let g0 = g(p);
    let mut rm = [[[[0.0; 4]; 4]; 4]; 4];
    for b in 0..4 {
        for c in 0..4 {
            for d in 0..4 {
                for a in 0..4 {
                    let mut up = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..4 {
                        up += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    // lower the first index on the fly
                    for f in 0..4 {
                        rm[f][b][c][d] += g0[(f, a)] * up;
                    }
                }
            }
        }
    }
    rm
}

/// Ricci tensor Ric_{bd} = R^a_{bad}, from the lowered tensor and the metric.
pub fn ricci(g0: &Matrix4<f64>, rm: &[[[[f64; 4]; 4]; 4]; 4]) -> Matrix4<f64> {
    let gi = g0.try_inverse().expect("metric not invertible");
    let mut ric = Matrix4::zeros();
    for b in 0..4 {
        for d in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for e in 0..4 {
                    s += gi[(a, e)] * rm[e][b][a][d];
                }
            }
            ric[(b, d)] = s;
        }
    }
    ric
}

/// ‖Rm‖_g for the lowered tensor: all four indices raised with g⁻¹.
pub fn riemann_norm(g0: &Matrix4<f64>, rm: &[[[[f64; 4]; 4]; 4]; 4]) -> f64 {
    let gi = g0.try_inverse().expect("metric not invertible");
    let mut raised = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = 0.0;
                    for p in 0..4 {
                        for q in 0..4 {
                            for r in 0..4 {
                                for t in 0..4 {
                                    s += gi[(a, p)]
                                        * gi[(b, q)]
                                        * gi[(c, r)]
                                        * gi[(d, t)]
                                        * rm[p][q][r][t];
                                }
                            }
                        }
                    }
                    raised[a][b][c][d] = s;
                }
            }
        }
    }
    let mut n2 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    n2 += raised[a][b][c][d] * rm[a][b][c][d];
                }
            }
        }
    }
    n2.max(0.0).sqrt()
}

/// ‖T‖_g of a symmetric 2-tensor.
pub fn tensor2_norm(g0: &Matrix4<f64>, t: &Matrix4<f64>) -> f64 {
    let gi = g0.try_inverse().expect("metric not invertible");
    let lifted = gi * t * gi;
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += lifted[(a, b)] * t[(a, b)];
        }
    }
    s.max(0.0).sqrt()
}
