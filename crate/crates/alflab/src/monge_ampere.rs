//! Desk-scale continuity method for the complex Monge-Ampère equation
//!
//! ```text
//! (ω_Y + i∂∂̄φ)² = e^{tf} ω_Y²,    t: 0 → 1,
//! ```
//!
//! discretized on a bounded 4D lattice with Dirichlet data standing in for
//! decay at infinity. The complex Hessian i∂∂̄φ is assembled from the ten
//! second differences through the standard complex structure; each continuity
//! stage is solved by Newton iteration, whose linearization is the Laplacian
//! of the current Kähler form (scaled by the density e^{tf}), inverted
//! matrix-free by preconditioned BiCGStab.

use std::sync::Arc;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::taubnut::{kahler_form_f, TaubNutPoint};
use crate::tensor::{
    euclidean_kahler_form, hermitian_coefficients, i_del_delbar_from_hessian, metric_from_form,
    standard_complex_structures, wedge_coefficient, RealPoint4, TwoForm4,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// lattice and fields
// ---------------------------------------------------------------------------

/// Axis-aligned 4D lattice over a box, with a Dirichlet boundary layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid4 {
    /// total nodes per axis, including the boundary layer
    pub n: [usize; 4],
    pub lo: [f64; 4],
    pub h: [f64; 4],
    /// boundary layer width in cells (≥ 2)
    pub boundary: usize,
}

impl Grid4 {
    /// Box [lo, hi]⁴ with `interior` interior nodes per axis and a Dirichlet
    /// layer of width ≥ 2.
    pub fn new(lo: [f64; 4], hi: [f64; 4], interior: [usize; 4], boundary: usize) -> Result<Self> {
        if boundary < 2 {
            return Err(Error::BadConfig(format!(
                "boundary layer must be ≥ 2 cells, got {boundary}"
            )));
        }
        let mut n = [0usize; 4];
        let mut h = [0.0; 4];
        for a in 0..4 {
            if hi[a] <= lo[a] || interior[a] == 0 {
                return Err(Error::BadConfig("degenerate domain".to_string()));
            }
            n[a] = interior[a] + 2 * boundary;
            h[a] = (hi[a] - lo[a]) / (n[a] - 1) as f64;
        }
        Ok(Self { n, lo, h, boundary })
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.n[1] + i[1]) * self.n[2] + i[2]) * self.n[3] + i[3]
    }

    pub fn coords(&self, mut l: usize) -> [usize; 4] {
        let mut i = [0usize; 4];
        i[3] = l % self.n[3];
        l /= self.n[3];
        i[2] = l % self.n[2];
        l /= self.n[2];
        i[1] = l % self.n[1];
        i[0] = l / self.n[1];
        i
    }

    pub fn point(&self, i: [usize; 4]) -> RealPoint4 {
        RealPoint4([
            self.lo[0] + i[0] as f64 * self.h[0],
            self.lo[1] + i[1] as f64 * self.h[1],
            self.lo[2] + i[2] as f64 * self.h[2],
            self.lo[3] + i[3] as f64 * self.h[3],
        ])
    }

    pub fn is_interior(&self, i: [usize; 4]) -> bool {
        (0..4).all(|a| i[a] >= self.boundary && i[a] < self.n[a] - self.boundary)
    }

    /// Distance (in cells) to the data edge.
    pub fn depth(&self, i: [usize; 4]) -> usize {
        (0..4)
            .map(|a| i[a].min(self.n[a] - 1 - i[a]))
            .min()
            .unwrap()
    }

    pub fn interior_indices(&self) -> Vec<[usize; 4]> {
        let b = self.boundary;
        let mut out = Vec::new();
        for i0 in b..self.n[0] - b {
            for i1 in b..self.n[1] - b {
                for i2 in b..self.n[2] - b {
                    for i3 in b..self.n[3] - b {
                        out.push([i0, i1, i2, i3]);
                    }
                }
            }
        }
        out
    }

    pub fn interior_count(&self) -> usize {
        (0..4).map(|a| self.n[a] - 2 * self.boundary).product()
    }
}

/// Scalar field on the lattice; boundary-layer values are Dirichlet data.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: Arc<Grid4>,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Arc<Grid4>) -> Self {
        let n = grid.len();
        Self {
            grid,
            data: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid4>, f: impl Fn(RealPoint4) -> f64) -> Self {
        let data = (0..grid.len()).map(|l| f(grid.point(grid.coords(l)))).collect();
        Self { grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.grid
            .interior_indices()
            .iter()
            .map(|&i| self.data[self.grid.idx(i)].abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    #[inline]
    fn at(&self, i: [usize; 4]) -> f64 {
        self.data[self.grid.idx(i)]
    }

    #[inline]
    fn at_off(&self, i: [usize; 4], off: [isize; 4]) -> f64 {
        let j = [
            (i[0] as isize + off[0]) as usize,
            (i[1] as isize + off[1]) as usize,
            (i[2] as isize + off[2]) as usize,
            (i[3] as isize + off[3]) as usize,
        ];
        self.data[self.grid.idx(j)]
    }

    /// Real Hessian at a node (all ±1 neighbors must exist).
    pub fn hessian(&self, i: [usize; 4]) -> Matrix4<f64> {
        let h = self.grid.h;
        let mut m = Matrix4::zeros();
        let c = self.at(i);
        for a in 0..4 {
            let mut up = [0isize; 4];
            up[a] = 1;
            let mut dn = [0isize; 4];
            dn[a] = -1;
            m[(a, a)] = (self.at_off(i, up) - 2.0 * c + self.at_off(i, dn)) / (h[a] * h[a]);
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let mut pp = [0isize; 4];
                pp[a] = 1;
                pp[b] = 1;
                let mut pm = pp;
                pm[b] = -1;
                let mut mp = pp;
                mp[a] = -1;
                let mut mm = pp;
                mm[a] = -1;
                mm[b] = -1;
                let v = (self.at_off(i, pp) - self.at_off(i, pm) - self.at_off(i, mp)
                    + self.at_off(i, mm))
                    / (4.0 * h[a] * h[b]);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    /// Central gradient at a node.
    pub fn gradient(&self, i: [usize; 4]) -> [f64; 4] {
        let h = self.grid.h;
        let mut g = [0.0; 4];
        for a in 0..4 {
            let mut up = [0isize; 4];
            up[a] = 1;
            let mut dn = [0isize; 4];
            dn[a] = -1;
            g[a] = (self.at_off(i, up) - self.at_off(i, dn)) / (2.0 * h[a]);
        }
        g
    }

    /// Symmetric third-derivative tensor at a node (needs depth ≥ 2).
    pub fn third(&self, i: [usize; 4]) -> [[[f64; 4]; 4]; 4] {
        let h = self.grid.h;
        let mut t = [[[0.0; 4]; 4]; 4];
        let off = |a: usize, s: isize| {
            let mut o = [0isize; 4];
            o[a] = s;
            o
        };
        // pure: ∂_a³
        for a in 0..4 {
            let v = (self.at_off(i, off(a, 2)) - 2.0 * self.at_off(i, off(a, 1))
                + 2.0 * self.at_off(i, off(a, -1))
                - self.at_off(i, off(a, -2)))
                / (2.0 * h[a].powi(3));
            t[a][a][a] = v;
        }
        // ∂_a² ∂_b, a ≠ b: central difference of the second difference
        for a in 0..4 {
            for b in 0..4 {
                if a == b {
                    continue;
                }
                let h2 = |s: isize| {
                    let mut up = off(a, 1);
                    up[b] += s;
                    let mut mid = [0isize; 4];
                    mid[b] = s;
                    let mut dn = off(a, -1);
                    dn[b] += s;
                    (self.at_off(i, up) - 2.0 * self.at_off(i, mid) + self.at_off(i, dn))
                        / (h[a] * h[a])
                };
                let v = (h2(1) - h2(-1)) / (2.0 * h[b]);
                t[a][a][b] = v;
                t[a][b][a] = v;
                t[b][a][a] = v;
            }
        }
        // ∂_a ∂_b ∂_c, all distinct
        for a in 0..4 {
            for b in (a + 1)..4 {
                for c in (b + 1)..4 {
                    let mut v = 0.0;
                    for sa in [-1isize, 1] {
                        for sb in [-1isize, 1] {
                            for sc in [-1isize, 1] {
                                let mut o = [0isize; 4];
                                o[a] = sa;
                                o[b] = sb;
                                o[c] = sc;
                                v += (sa * sb * sc) as f64 * self.at_off(i, o);
                            }
                        }
                    }
                    v /= 8.0 * h[a] * h[b] * h[c];
                    for perm in [
                        [a, b, c],
                        [a, c, b],
                        [b, a, c],
                        [b, c, a],
                        [c, a, b],
                        [c, b, a],
                    ] {
                        t[perm[0]][perm[1]][perm[2]] = v;
                    }
                }
            }
        }
        t
    }
}

// ---------------------------------------------------------------------------
// background Kähler data
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Background {
    Euclidean,
    Taubnut { m: f64 },
}

/// Background form ω_Y cached at the grid nodes, with density and radius.
#[derive(Clone, Debug)]
pub struct BackgroundKahler {
    pub grid: Arc<Grid4>,
    pub kind: Background,
    pub w: Vec<TwoForm4>,
    /// wedge coefficient ω_Y ∧ ω_Y (twice the volume density)
    pub dens: Vec<f64>,
    /// smooth radius function ρ ≥ 1 at the nodes
    pub rho: Vec<f64>,
}

impl BackgroundKahler {
    pub fn new(grid: Arc<Grid4>, kind: Background) -> Result<Self> {
        let nodes = grid.len();
        let mut w = Vec::with_capacity(nodes);
        let mut dens = Vec::with_capacity(nodes);
        let mut rho = Vec::with_capacity(nodes);
        for l in 0..nodes {
            let x = grid.point(grid.coords(l));
            let (form, r) = match kind {
                Background::Euclidean => {
                    (euclidean_kahler_form(), (1.0 + x.norm().powi(2)).sqrt())
                }
                Background::Taubnut { m } => {
                    let p = TaubNutPoint::from_real(x, m)?;
                    (kahler_form_f(&p), (1.0 + p.big_r * p.big_r).sqrt())
                }
            };
            dens.push(wedge_coefficient(&form, &form));
            w.push(form);
            rho.push(r);
        }
        Ok(Self {
            grid,
            kind,
            w,
            dens,
            rho,
        })
    }

    /// ω_Y as a continuum closure (for curvature probes).
    pub fn omega_at(&self, x: RealPoint4) -> TwoForm4 {
        match self.kind {
            Background::Euclidean => euclidean_kahler_form(),
            Background::Taubnut { m } => {
                kahler_form_f(&TaubNutPoint::from_real(x, m).expect("positive mass"))
            }
        }
    }

    /// Inverse Riemannian metric at a node.
    pub fn ginv(&self, l: usize) -> Matrix4<f64> {
        let (i1, _, _) = standard_complex_structures();
        metric_from_form(&self.w[l], &i1)
            .0
            .try_inverse()
            .expect("background must be nondegenerate")
    }
}

// ---------------------------------------------------------------------------
// the Monge-Ampère operator
// ---------------------------------------------------------------------------

fn positivity_minors(g: &Matrix4<f64>) -> bool {
    if g[(0, 0)] <= 0.0 {
        return false;
    }
    let d2 = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if d2 <= 0.0 {
        return false;
    }
    let m3 = g.fixed_view::<3, 3>(0, 0).determinant();
    if m3 <= 0.0 {
        return false;
    }
    g.determinant() > 0.0
}

/// ω_φ = ω_Y + i∂∂̄φ at an interior node.
pub fn omega_phi_at(phi: &GridField, bg: &BackgroundKahler, i: [usize; 4]) -> TwoForm4 {
    let l = phi.grid.idx(i);
    bg.w[l].add(&i_del_delbar_from_hessian(&phi.hessian(i)))
}

/// Node-wise value of (ω_Y + i∂∂̄φ)²/ω_Y² - e^f.
///
/// Errors with the offending node if ω_φ leaves the Kähler cone.
pub fn ma_residual(phi: &GridField, bg: &BackgroundKahler, f: &GridField) -> Result<GridField> {
    let grid = phi.grid.clone();
    let (i1, _, _) = standard_complex_structures();
    let mut out = GridField::zeros(grid.clone());
    for i in grid.interior_indices() {
        let l = grid.idx(i);
        let w_phi = omega_phi_at(phi, bg, i);
        let g_phi = metric_from_form(&w_phi, &i1);
        if !positivity_minors(&g_phi.0) {
            return Err(Error::NotPositive {
                point: grid.point(i).0,
                eigs: g_phi.eigenvalues(),
            });
        }
        out.data[l] = wedge_coefficient(&w_phi, &w_phi) / bg.dens[l] - f.data[l].exp();
    }
    Ok(out)
}

/// Linearization of the Monge-Ampère map at φ: ψ ↦ 2 ω_φ ∧ i∂∂̄ψ / ω_Y².
///
/// On the euclidean background at φ = 0 this is half the flat Laplacian; in
/// general it is the Laplacian of ω_φ scaled by the current density.
pub struct LinearizedMa {
    grid: Arc<Grid4>,
    /// per-node coefficients of the ten independent Hessian entries,
    /// order (00,11,22,33,01,02,03,12,13,23)
    coeff: Vec<[f64; 10]>,
    diag: Vec<f64>,
}

impl LinearizedMa {
    pub fn new(phi: &GridField, bg: &BackgroundKahler) -> Result<Self> {
        let grid = phi.grid.clone();
        let (i1, _, _) = standard_complex_structures();
        let n = grid.len();
        let mut coeff = vec![[0.0; 10]; n];
        let mut diag = vec![1.0; n];
        // basis responses: i∂∂̄ of each symmetric second-derivative slot
        let mut basis = Vec::with_capacity(10);
        let slots: [(usize, usize); 10] = [
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (1, 3),
            (2, 3),
        ];
        for &(a, b) in &slots {
            let mut e = Matrix4::zeros();
            e[(a, b)] = 1.0;
            e[(b, a)] = 1.0;
            basis.push(i_del_delbar_from_hessian(&e));
        }
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            let w_phi = omega_phi_at(phi, bg, i);
            let g_phi = metric_from_form(&w_phi, &i1);
            if !positivity_minors(&g_phi.0) {
                return Err(Error::NotPositive {
                    point: grid.point(i).0,
                    eigs: g_phi.eigenvalues(),
                });
            }
            let mut c = [0.0; 10];
            for (k, bform) in basis.iter().enumerate() {
                c[k] = 2.0 * wedge_coefficient(&w_phi, bform) / bg.dens[l];
            }
            coeff[l] = c;
            let mut d = 0.0;
            for a in 0..4 {
                d += c[a] * (-2.0 / (grid.h[a] * grid.h[a]));
            }
            diag[l] = if d.abs() > 1e-300 { d } else { 1.0 };
        }
        Ok(Self { grid, coeff, diag })
    }

    /// Apply to a field (interior nodes only; src boundary values are read,
    /// dst boundary left zero).
    pub fn apply(&self, src: &GridField, dst: &mut GridField) {
        let h = self.grid.h;
        for i in self.grid.interior_indices() {
            let l = self.grid.idx(i);
            let c = &self.coeff[l];
            let center = src.at(i);
            let mut acc = 0.0;
            for a in 0..4 {
                let mut up = [0isize; 4];
                up[a] = 1;
                let mut dn = [0isize; 4];
                dn[a] = -1;
                acc += c[a] * (src.at_off(i, up) - 2.0 * center + src.at_off(i, dn))
                    / (h[a] * h[a]);
            }
            let mixed: [(usize, usize, usize); 6] = [
                (4, 0, 1),
                (5, 0, 2),
                (6, 0, 3),
                (7, 1, 2),
                (8, 1, 3),
                (9, 2, 3),
            ];
            for &(k, a, b) in &mixed {
                if c[k] == 0.0 {
                    continue;
                }
                let mut pp = [0isize; 4];
                pp[a] = 1;
                pp[b] = 1;
                let mut pm = pp;
                pm[b] = -1;
                let mut mp = pp;
                mp[a] = -1;
                let mut mm = pp;
                mm[a] = -1;
                mm[b] = -1;
                acc += c[k]
                    * (src.at_off(i, pp) - src.at_off(i, pm) - src.at_off(i, mp)
                        + src.at_off(i, mm))
                    / (4.0 * h[a] * h[b]);
            }
            dst.data[l] = acc;
        }
    }
}

fn dot_interior(grid: &Grid4, a: &GridField, b: &GridField) -> f64 {
    let mut s = 0.0;
    for i in grid.interior_indices() {
        let l = grid.idx(i);
        s += a.data[l] * b.data[l];
    }
    s
}

/// Solve L ψ = rhs with Dirichlet data `bc` (zero when absent), by
/// Jacobi-preconditioned BiCGStab to relative residual 1e-10.
pub fn linearized_solve(
    phi: &GridField,
    bg: &BackgroundKahler,
    rhs: &GridField,
    bc: Option<&GridField>,
) -> Result<GridField> {
    let op = LinearizedMa::new(phi, bg)?;
    solve_with_operator(&op, rhs, bc)
}

pub fn solve_with_operator(
    op: &LinearizedMa,
    rhs: &GridField,
    bc: Option<&GridField>,
) -> Result<GridField> {
    let grid = op.grid.clone();
    // lift the boundary data: x0 carries bc on the boundary, zero inside
    let mut x = GridField::zeros(grid.clone());
    if let Some(b) = bc {
        for l in 0..grid.len() {
            if !grid.is_interior(grid.coords(l)) {
                x.data[l] = b.data[l];
            }
        }
    }
    let mut lx = GridField::zeros(grid.clone());
    op.apply(&x, &mut lx);
    let mut r = GridField::zeros(grid.clone());
    for i in grid.interior_indices() {
        let l = grid.idx(i);
        r.data[l] = rhs.data[l] - lx.data[l];
    }
    let b_norm = dot_interior(&grid, &r, &r).sqrt().max(1e-300);
    let tol = 1e-10;

    let r_hat = r.clone();
    let mut rho_old = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = GridField::zeros(grid.clone());
    let mut p = GridField::zeros(grid.clone());
    let mut y = GridField::zeros(grid.clone());
    let mut z = GridField::zeros(grid.clone());
    let mut t = GridField::zeros(grid.clone());
    let max_iters = 20_000;
    for iter in 0..max_iters {
        let res_norm = dot_interior(&grid, &r, &r).sqrt();
        if res_norm <= tol * b_norm {
            return Ok(x);
        }
        let rho = dot_interior(&grid, &r_hat, &r);
        if rho.abs() < 1e-300 {
            return Err(Error::SolverStall {
                residual: res_norm / b_norm,
                iters: iter,
            });
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            p.data[l] = r.data[l] + beta * (p.data[l] - omega * v.data[l]);
        }
        // Jacobi preconditioner
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            y.data[l] = p.data[l] / op.diag[l];
        }
        op.apply(&y, &mut v);
        let rhv = dot_interior(&grid, &r_hat, &v);
        if rhv.abs() < 1e-300 {
            return Err(Error::SolverStall {
                residual: res_norm / b_norm,
                iters: iter,
            });
        }
        alpha = rho / rhv;
        // s stored in r
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            r.data[l] -= alpha * v.data[l];
        }
        let s_norm = dot_interior(&grid, &r, &r).sqrt();
        if s_norm <= tol * b_norm {
            x.axpy(alpha, &y);
            return Ok(x);
        }
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            z.data[l] = r.data[l] / op.diag[l];
        }
        op.apply(&z, &mut t);
        let tt = dot_interior(&grid, &t, &t);
        let ts = dot_interior(&grid, &t, &r);
        if tt < 1e-300 {
            return Err(Error::SolverStall {
                residual: s_norm / b_norm,
                iters: iter,
            });
        }
        omega = ts / tt;
        x.axpy(alpha, &y);
        x.axpy(omega, &z);
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            r.data[l] -= omega * t.data[l];
        }
        rho_old = rho;
    }
    let res = dot_interior(&grid, &r, &r).sqrt() / b_norm;
    Err(Error::SolverStall {
        residual: res,
        iters: max_iters,
    })
}

// ---------------------------------------------------------------------------
// continuity method
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schedule {
    /// initial t-step (default 0.1)
    pub t_step: f64,
    /// smallest admitted t-step before reporting cone exit
    pub min_step: f64,
    /// Newton stopping tolerance on the max-norm of the residual
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            t_step: 0.1,
            min_step: 1e-3,
            newton_tol: 1e-9,
            max_newton: 30,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageLog {
    pub t: f64,
    pub newton_residuals: Vec<f64>,
    /// e_{k+1}/e_k² ratios observed on full Newton steps
    pub quadratic_ratios: Vec<f64>,
}

/// State of the continuity path.
#[derive(Clone, Debug)]
pub struct ContinuityState {
    pub t: f64,
    pub phi: GridField,
    pub residual: f64,
    pub stages: Vec<StageLog>,
}

fn newton_stage(
    phi: &mut GridField,
    bg: &BackgroundKahler,
    tf: &GridField,
    sched: &Schedule,
) -> Result<StageLog> {
    let mut log = StageLog {
        t: 0.0,
        newton_residuals: Vec::new(),
        quadratic_ratios: Vec::new(),
    };
    let mut res = ma_residual(phi, bg, tf)?;
    let mut res_norm = res.max_abs_interior();
    log.newton_residuals.push(res_norm);
    for _ in 0..sched.max_newton {
        if res_norm <= sched.newton_tol {
            return Ok(log);
        }
        let delta = linearized_solve(phi, bg, &res.scaled(-1.0), None)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let mut trial = phi.clone();
            trial.axpy(lambda, &delta);
            match ma_residual(&trial, bg, tf) {
                Ok(r) => {
                    let n = r.max_abs_interior();
                    if n < res_norm {
                        if lambda == 1.0 && res_norm > 0.0 {
                            log.quadratic_ratios.push(n / (res_norm * res_norm));
                        }
                        *phi = trial;
                        res = r;
                        res_norm = n;
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
                // cone exit: shorten the step
                Err(Error::NotPositive { .. }) => lambda *= 0.5,
                Err(e) => return Err(e),
            }
        }
        log.newton_residuals.push(res_norm);
        if !accepted {
            return Err(Error::SolverStall {
                residual: res_norm,
                iters: log.newton_residuals.len(),
            });
        }
    }
    if res_norm <= sched.newton_tol {
        Ok(log)
    } else {
        Err(Error::SolverStall {
            residual: res_norm,
            iters: sched.max_newton,
        })
    }
}

/// Solve (E_1) directly by Newton iteration from the given initial guess
/// (used by uniqueness cross-checks against the continuity path).
pub fn newton_direct(
    phi: &mut GridField,
    bg: &BackgroundKahler,
    f: &GridField,
    sched: &Schedule,
) -> Result<StageLog> {
    newton_stage(phi, bg, f, sched)
}

/// Path-follow (E_t) from t = 0 to t = 1 with adaptive step halving.
pub fn continuity_method(
    bg: &BackgroundKahler,
    f: &GridField,
    sched: &Schedule,
) -> Result<ContinuityState> {
    let mut phi = GridField::zeros(f.grid.clone());
    let mut stages = Vec::new();
    let mut t = 0.0f64;
    let mut step = sched.t_step;
    while t < 1.0 {
        let target = if t + step >= 1.0 - 1e-12 {
            1.0
        } else {
            t + step
        };
        let tf = f.scaled(target);
        let mut trial = phi.clone();
        match newton_stage(&mut trial, bg, &tf, sched) {
            Ok(mut log) => {
                log.t = target;
                stages.push(log);
                phi = trial;
                t = target;
                step = (step * 2.0).min(sched.t_step);
            }
            Err(Error::NotPositive { .. }) | Err(Error::SolverStall { .. }) => {
                step *= 0.5;
                if step < sched.min_step {
                    return Err(Error::ConeExit { last_t: t });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let residual = ma_residual(&phi, bg, f)?.max_abs_interior();
    Ok(ContinuityState {
        t,
        phi,
        residual,
        stages,
    })
}

// ---------------------------------------------------------------------------
// weighted norms
// ---------------------------------------------------------------------------

/// Parameters of a discrete weighted Hölder norm C^{k,α}_δ.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
}

impl WeightedNorm {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.alpha >= 1.0 {
            return Err(Error::BadConfig(format!(
                "Hölder exponent must lie in [0,1), got {}",
                self.alpha
            )));
        }
        if self.k > 2 {
            return Err(Error::BadConfig(
                "discrete weighted norms support k ≤ 2".to_string(),
            ));
        }
        Ok(())
    }
}

/// Weighted norm over a sub-box of interior nodes (None = whole interior):
/// sup ρ^{δ+j} |D^j u| for j ≤ k plus the sampled Hölder seminorm of D^k u
/// over node pairs within a two-cell cap.
pub fn weighted_norm_in(
    field: &GridField,
    bg: &BackgroundKahler,
    spec: &WeightedNorm,
    sub: Option<([usize; 4], [usize; 4])>,
) -> Result<f64> {
    spec.validate()?;
    let grid = &field.grid;
    let in_sub = |i: [usize; 4]| -> bool {
        match sub {
            None => true,
            Some((lo, hi)) => (0..4).all(|a| i[a] >= lo[a] && i[a] < hi[a]),
        }
    };
    let deriv_stack = |i: [usize; 4]| -> Vec<f64> {
        // max-abs of the j-th difference tensors, j = 0..=k
        let mut out = vec![field.at(i).abs()];
        if spec.k >= 1 {
            let g = field.gradient(i);
            out.push(g.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        if spec.k >= 2 {
            let h = field.hessian(i);
            out.push(h.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        out
    };
    let mut norm = 0.0f64;
    for i in grid.interior_indices() {
        if !in_sub(i) {
            continue;
        }
        let l = grid.idx(i);
        let rho = bg.rho[l];
        let stack = deriv_stack(i);
        for (j, d) in stack.iter().enumerate() {
            norm = norm.max(rho.powf(spec.delta + j as f64) * d);
        }
        if spec.alpha > 0.0 {
            // Hölder seminorm of the top difference over near pairs
            let top = *stack.last().unwrap();
            for a in 0..4 {
                for s in [1usize, 2] {
                    let mut j = i;
                    j[a] += s;
                    if !grid.is_interior(j) || !in_sub(j) {
                        continue;
                    }
                    let lj = grid.idx(j);
                    let top_j = *deriv_stack(j).last().unwrap();
                    let d = (s as f64) * grid.h[a];
                    let w = bg.rho[l]
                        .min(bg.rho[lj])
                        .powf(spec.alpha + spec.delta + spec.k as f64);
                    norm = norm.max(w * (top - top_j).abs() / d.powf(spec.alpha));
                }
            }
        }
    }
    Ok(norm)
}

pub fn weighted_norm(field: &GridField, bg: &BackgroundKahler, spec: &WeightedNorm) -> Result<f64> {
    weighted_norm_in(field, bg, spec, None)
}

// ---------------------------------------------------------------------------
// Sobolev / Hardy quadrature checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SobolevReport {
    /// (∫ u⁴ ρ⁻¹)^{1/4} / (∫ |du|²)^{1/2} per sample
    pub sobolev_ratios: Vec<f64>,
    /// ∫ u² ρ⁻² / ∫ |du|² per sample
    pub hardy_ratios: Vec<f64>,
}

/// Quadrature both sides of the weighted Sobolev and Hardy inequalities for
/// compactly supported fields; the reported ratios should stay bounded
/// across the family and under refinement.
pub fn sobolev_check(bg: &BackgroundKahler, samples: &[GridField]) -> Result<SobolevReport> {
    let grid = &bg.grid;
    let cell = grid.h.iter().product::<f64>();
    let mut sps = Vec::new();
    let mut hds = Vec::new();
    for u in samples {
        if u.grid.as_ref() != grid.as_ref() {
            return Err(Error::BadConfig(
                "sample field lives on a different grid".to_string(),
            ));
        }
        let mut i4 = 0.0;
        let mut energy = 0.0;
        let mut hardy = 0.0;
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            let vol = 0.5 * bg.dens[l] * cell;
            let v = u.data[l];
            i4 += v.powi(4) / bg.rho[l] * vol;
            hardy += v * v / (bg.rho[l] * bg.rho[l]) * vol;
            let gr = u.gradient(i);
            let gi = bg.ginv(l);
            let mut e = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    e += gi[(a, b)] * gr[a] * gr[b];
                }
            }
            energy += e * vol;
        }
        if energy <= 0.0 {
            sps.push(0.0);
            hds.push(0.0);
        } else {
            sps.push(i4.powf(0.25) / energy.sqrt());
            hds.push(hardy / energy);
        }
    }
    Ok(SobolevReport {
        sobolev_ratios: sps,
        hardy_ratios: hds,
    })
}

// ---------------------------------------------------------------------------
// trace bound and the second-order identity probe
// ---------------------------------------------------------------------------

/// min over interior nodes of tr^{ω_Y}(ω_φ) - 4 e^{f/2}.
pub fn trace_bound_margin(phi: &GridField, bg: &BackgroundKahler, f: &GridField) -> f64 {
    let grid = &phi.grid;
    let mut margin = f64::INFINITY;
    for i in grid.interior_indices() {
        let l = grid.idx(i);
        let w_phi = omega_phi_at(phi, bg, i);
        let tr = 4.0 * wedge_coefficient(&w_phi, &bg.w[l]) / bg.dens[l];
        margin = margin.min(tr - 4.0 * (0.5 * f.data[l]).exp());
    }
    margin
}

type C2 = [[Complex64; 2]; 2];

fn c2_inverse_raised(g: &C2) -> C2 {
    // raised metric g^{ab̄} with g^{ab̄} g_{cb̄} = δ_ac, i.e. conj(G⁻¹)
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [
        [g[1][1] / det, -g[0][1] / det],
        [-g[1][0] / det, g[0][0] / det],
    ];
    [
        [inv[0][0].conj(), inv[0][1].conj()],
        [inv[1][0].conj(), inv[1][1].conj()],
    ]
}

/// Complex Hessian φ_{jk̄} from the real Hessian.
fn complex_hessian(h: &Matrix4<f64>) -> C2 {
    let h11 = 0.25 * (h[(0, 0)] + h[(1, 1)]);
    let h22 = 0.25 * (h[(2, 2)] + h[(3, 3)]);
    let h12 = 0.25
        * Complex64::new(
            h[(0, 2)] + h[(1, 3)],
            h[(0, 3)] - h[(1, 2)],
        );
    [
        [Complex64::new(h11, 0.0), h12],
        [h12.conj(), Complex64::new(h22, 0.0)],
    ]
}

/// Third complex derivatives φ_{α β̄ γ} from the real third tensor.
fn complex_third(t: &[[[f64; 4]; 4]; 4]) -> [[[Complex64; 2]; 2]; 2] {
    // ∂_{z_j} = ½(∂_{x(j)} - i ∂_{y(j)}), ∂_{z̄_j} = ½(∂_{x(j)} + i ∂_{y(j)})
    let ax = [0usize, 2]; // real axes of z1, z2
    let ay = [1usize, 3];
    let mut out = [[[Complex64::new(0.0, 0.0); 2]; 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            for ga in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                // (x - iy)(x + iy)(x - iy)/8 expansion
                for (sa, ca) in [
                    (ax[al], Complex64::new(1.0, 0.0)),
                    (ay[al], Complex64::new(0.0, -1.0)),
                ] {
                    for (sb, cb) in [
                        (ax[be], Complex64::new(1.0, 0.0)),
                        (ay[be], Complex64::new(0.0, 1.0)),
                    ] {
                        for (sc, cc) in [
                            (ax[ga], Complex64::new(1.0, 0.0)),
                            (ay[ga], Complex64::new(0.0, -1.0)),
                        ] {
                            acc += ca * cb * cc * t[sa][sb][sc];
                        }
                    }
                }
                out[al][be][ga] = 0.125 * acc;
            }
        }
    }
    out
}

/// Complex background data at a point: g_{jk̄}, ∂_l g_{jk̄} and the Kähler
/// curvature R_{jk̄lm̄} = -∂_l∂_m̄ g_{jk̄} + g^{pq̄} ∂_l g_{jq̄} ∂_m̄ g_{pk̄},
/// by finite differences of the continuum background.
fn background_complex_data(
    bg: &BackgroundKahler,
    x: RealPoint4,
    h: f64,
) -> (C2, [[[Complex64; 2]; 2]; 2], [[[[Complex64; 2]; 2]; 2]; 2]) {
    let entry = |q: RealPoint4| -> C2 {
        let (h11, h22, h12) = hermitian_coefficients(&bg.omega_at(q));
        [
            [Complex64::new(h11, 0.0), h12],
            [h12.conj(), Complex64::new(h22, 0.0)],
        ]
    };
    let g0 = entry(x);
    // real partials of the entries
    let mut dre = [[[0.0f64; 2]; 2]; 4]; // dre[axis][j][k] of Re g_{jk̄}
    let mut dim = [[[0.0f64; 2]; 2]; 4];
    for a in 0..4 {
        let gp = entry(x.shifted(a, h));
        let gp2 = entry(x.shifted(a, 2.0 * h));
        let gm = entry(x.shifted(a, -h));
        let gm2 = entry(x.shifted(a, -2.0 * h));
        for j in 0..2 {
            for k in 0..2 {
                let d = (8.0 * (gp[j][k] - gm[j][k]) - (gp2[j][k] - gm2[j][k])) / (12.0 * h);
                dre[a][j][k] = d.re;
                dim[a][j][k] = d.im;
            }
        }
    }
    let ax = [0usize, 2];
    let ay = [1usize, 3];
    let mut dg = [[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; // dg[l][j][k] = ∂_l g_{jk̄}
    for l in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let dx = Complex64::new(dre[ax[l]][j][k], dim[ax[l]][j][k]);
                let dy = Complex64::new(dre[ay[l]][j][k], dim[ay[l]][j][k]);
                dg[l][j][k] = 0.5 * (dx - Complex64::i() * dy);
            }
        }
    }
    // mixed second derivatives ∂_l ∂_m̄ g_{jk̄} from real Hessians of entries
    let mut hess_re = [[Matrix4::zeros(); 2]; 2];
    let mut hess_im = [[Matrix4::zeros(); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let fre = |q: RealPoint4| entry(q)[j][k].re;
            let fim = |q: RealPoint4| entry(q)[j][k].im;
            hess_re[j][k] = crate::tensor::hessian4(&fre, x, h);
            hess_im[j][k] = crate::tensor::hessian4(&fim, x, h);
        }
    }
    let cplx_mixed = |l: usize, m: usize, j: usize, k: usize| -> Complex64 {
        // ¼ (∂_xl - i∂_yl)(∂_xm + i∂_ym) applied to the complex entry
        let hr = &hess_re[j][k];
        let hi = &hess_im[j][k];
        let comb = |p: usize, q: usize| Complex64::new(hr[(p, q)], hi[(p, q)]);
        0.25 * (comb(ax[l], ax[m])
            + Complex64::i() * comb(ax[l], ay[m])
            - Complex64::i() * comb(ay[l], ax[m])
            + comb(ay[l], ay[m]))
    };
    let graised = c2_inverse_raised(&g0);
    let mut rm = [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2]; // rm[j][k][l][m] = R_{jk̄lm̄}
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                for m in 0..2 {
                    let mut v = -cplx_mixed(l, m, j, k);
                    for p in 0..2 {
                        for q in 0..2 {
                            // ∂_m̄ g_{pk̄} = conj(∂_m g_{kp̄})
                            v += graised[p][q] * dg[l][j][q] * dg[m][k][p].conj();
                        }
                    }
                    rm[j][k][l][m] = v;
                }
            }
        }
    }
    (g0, dg, rm)
}

#[derive(Clone, Debug, Serialize)]
pub struct YauProbeReport {
    /// ‖lhs - rhs‖_∞ over probes / ‖rhs‖_∞
    pub rel_discrepancy: f64,
    pub probes: usize,
}

/// Evaluate both sides of the second-order identity satisfied by solutions:
///
/// ```text
/// Δ'(Δφ) = -2Δf + 4 g^{γδ̄} g'^{jl̄} g'^{mk̄} ∇_{ml̄δ̄}φ ∇_{jk̄γ}φ
///          + 4 [ g^{γδ̄}(g'^{jk̄}-g^{jk̄}) R_{jk̄γδ̄}
///              + g'^{γδ̄} g^{jl̄} g^{mk̄} φ_{jk̄} R_{ml̄γδ̄} ],
/// ```
///
/// with Δ = -(real-trace Laplacian of g_Y), Δ' that of ω_φ, the third-order
/// covariant derivatives corrected by the Kähler Christoffels, and the
/// curvature of the background computed by finite differences.
pub fn aubin_yau_probe(
    phi: &GridField,
    bg: &BackgroundKahler,
    f: &GridField,
    max_probes: usize,
) -> Result<YauProbeReport> {
    let grid = phi.grid.clone();
    // Δφ on every node of depth ≥ 1
    let mut dlap = GridField::zeros(grid.clone());
    for l in 0..grid.len() {
        let i = grid.coords(l);
        if grid.depth(i) < 1 {
            continue;
        }
        let gc = complex_hessian(&phi.hessian(i));
        let (h11, h22, h12) = hermitian_coefficients(&bg.w[l]);
        let g0: C2 = [
            [Complex64::new(h11, 0.0), h12],
            [h12.conj(), Complex64::new(h22, 0.0)],
        ];
        let gr = c2_inverse_raised(&g0);
        let mut tr = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                tr += gr[a][b] * gc[a][b];
            }
        }
        dlap.data[l] = -2.0 * tr.re;
    }
    // probe nodes: interior, away from the edge by ≥ 2 extra cells
    let probes: Vec<[usize; 4]> = grid
        .interior_indices()
        .into_iter()
        .filter(|&i| grid.depth(i) >= grid.boundary + 1)
        .collect();
    let stride = (probes.len() / max_probes.max(1)).max(1);
    let mut max_gap = 0.0f64;
    let mut max_rhs = 0.0f64;
    let mut count = 0usize;
    let fd_h = 0.5 * grid.h.iter().cloned().fold(f64::INFINITY, f64::min);
    for i in probes.into_iter().step_by(stride) {
        let x = grid.point(i);
        let (g0, dg, rm) = background_complex_data(bg, x, fd_h);
        let graised = c2_inverse_raised(&g0);
        let phic = complex_hessian(&phi.hessian(i));
        let mut gprime = g0;
        for a in 0..2 {
            for b in 0..2 {
                gprime[a][b] += phic[a][b];
            }
        }
        let gpraised = c2_inverse_raised(&gprime);
        // LHS: Δ'(Δφ) at the node
        let dl_hess = complex_hessian(&dlap.hessian(i));
        let mut lhs_tr = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                lhs_tr += gpraised[a][b] * dl_hess[a][b];
            }
        }
        let lhs = -2.0 * lhs_tr.re;
        // RHS
        let fh = complex_hessian(&f.hessian(i));
        let mut ftr = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                ftr += graised[a][b] * fh[a][b];
            }
        }
        let lap_f = -2.0 * ftr.re;
        // covariant third derivatives: ∇_{αβ̄γ}φ = φ_{αβ̄γ} - Γ^σ_{γα} φ_{σβ̄}
        let raw3 = complex_third(&phi.third(i));
        let mut christ = [[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; // Γ^σ_{γα}
        for s in 0..2 {
            for ga in 0..2 {
                for al in 0..2 {
                    let mut v = Complex64::new(0.0, 0.0);
                    for nu in 0..2 {
                        v += graised[s][nu] * dg[ga][al][nu];
                    }
                    christ[s][ga][al] = v;
                }
            }
        }
        let mut cov3 = [[[Complex64::new(0.0, 0.0); 2]; 2]; 2];
        for al in 0..2 {
            for be in 0..2 {
                for ga in 0..2 {
                    let mut v = raw3[al][be][ga];
                    for s in 0..2 {
                        v -= christ[s][ga][al] * phic[s][be];
                    }
                    cov3[al][be][ga] = v;
                }
            }
        }
        // third-order square: 4 g^{γδ̄} g'^{jl̄} g'^{mk̄} conj(∇_{lm̄δ}φ) ∇_{jk̄γ}φ
        let mut t3 = Complex64::new(0.0, 0.0);
        for ga in 0..2 {
            for de in 0..2 {
                for j in 0..2 {
                    for lidx in 0..2 {
                        for m in 0..2 {
                            for k in 0..2 {
                                t3 += graised[ga][de]
                                    * gpraised[j][lidx]
                                    * gpraised[m][k]
                                    * cov3[lidx][m][de].conj()
                                    * cov3[j][k][ga];
                            }
                        }
                    }
                }
            }
        }
        // curvature terms
        let mut term_a = Complex64::new(0.0, 0.0);
        for ga in 0..2 {
            for de in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        term_a += graised[ga][de]
                            * (gpraised[j][k] - graised[j][k])
                            * rm[j][k][ga][de];
                    }
                }
            }
        }
        let mut term_b = Complex64::new(0.0, 0.0);
        for ga in 0..2 {
            for de in 0..2 {
                for j in 0..2 {
                    for lidx in 0..2 {
                        for m in 0..2 {
                            for k in 0..2 {
                                term_b += gpraised[ga][de]
                                    * graised[j][lidx]
                                    * graised[m][k]
                                    * phic[j][k]
                                    * rm[m][lidx][ga][de];
                            }
                        }
                    }
                }
            }
        }
        let rhs = -2.0 * lap_f + 4.0 * t3.re + 4.0 * (term_a + term_b).re;
        max_gap = max_gap.max((lhs - rhs).abs());
        max_rhs = max_rhs.max(rhs.abs().max(lhs.abs()));
        count += 1;
    }
    Ok(YauProbeReport {
        rel_discrepancy: max_gap / max_rhs.max(1e-300),
        probes: count,
    })
}

// ---------------------------------------------------------------------------
// solver configuration and run records
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: [f64; 4],
    pub radius: f64,
}

impl BumpSpec {
    /// Smooth compactly supported bump amp·exp(-t/(1-t)), t = |x-c|²/r².
    pub fn eval(&self, x: RealPoint4) -> f64 {
        let mut d2 = 0.0;
        for a in 0..4 {
            let d = x.0[a] - self.center[a];
            d2 += d * d;
        }
        let t = d2 / (self.radius * self.radius);
        if t >= 1.0 {
            0.0
        } else {
            self.amplitude * (-t / (1.0 - t)).exp()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub interior: [usize; 4],
    pub background: Background,
    pub bump: BumpSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
}

impl SolverConfig {
    pub fn build(&self) -> Result<(Arc<Grid4>, BackgroundKahler, GridField)> {
        let grid = Arc::new(Grid4::new(self.lo, self.hi, self.interior, 2)?);
        let bg = BackgroundKahler::new(grid.clone(), self.background)?;
        let f = GridField::from_fn(grid.clone(), |x| self.bump.eval(x));
        // the data must vanish on the boundary layer
        for l in 0..grid.len() {
            let i = grid.coords(l);
            if !grid.is_interior(i) && f.data[l] != 0.0 {
                return Err(Error::BadConfig(
                    "source bump reaches the Dirichlet boundary layer".to_string(),
                ));
            }
        }
        Ok((grid, bg, f))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: SolverConfig,
    pub reached_t: f64,
    pub final_residual: f64,
    pub stages: Vec<StageLog>,
    pub phi_min: f64,
    pub phi_max: f64,
    pub trace_margin: f64,
}

/// Run the full continuity solve described by a config.
pub fn run_solve(config: &SolverConfig) -> Result<(RunRecord, ContinuityState)> {
    let (_, bg, f) = config.build()?;
    let state = continuity_method(&bg, &f, &config.schedule)?;
    let phi_min = state.phi.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let phi_max = state.phi.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let trace_margin = trace_bound_margin(&state.phi, &bg, &f);
    Ok((
        RunRecord {
            config: config.clone(),
            reached_t: state.t,
            final_residual: state.residual,
            stages: state.stages.clone(),
            phi_min,
            phi_max,
            trace_margin,
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(n: usize, half: f64) -> Arc<Grid4> {
        Arc::new(
            Grid4::new(
                [-half; 4],
                [half; 4],
                [n; 4],
                2,
            )
            .unwrap(),
        )
    }

    fn euclid_bg(grid: Arc<Grid4>) -> BackgroundKahler {
        BackgroundKahler::new(grid, Background::Euclidean).unwrap()
    }

    #[test]
    fn grid_indexing_roundtrip() {
        let grid = small_grid(5, 2.0);
        for l in (0..grid.len()).step_by(17) {
            assert_eq!(grid.idx(grid.coords(l)), l);
        }
        assert_eq!(grid.interior_count(), 5usize.pow(4));
        assert!(Grid4::new([-1.0; 4], [1.0; 4], [5; 4], 1).is_err());
    }

    #[test]
    fn residual_zero_for_trivial_data() {
        let grid = small_grid(5, 2.0);
        let bg = euclid_bg(grid.clone());
        let phi = GridField::zeros(grid.clone());
        let f = GridField::zeros(grid.clone());
        let r = ma_residual(&phi, &bg, &f).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        // Taub-NUT background, φ = 0, f = 0: restates ω_f² = 2Ω_e
        let bgt = BackgroundKahler::new(grid.clone(), Background::Taubnut { m: 1.0 }).unwrap();
        let r = ma_residual(&phi, &bgt, &f).unwrap();
        assert!(r.max_abs() < 1e-9, "residual {}", r.max_abs());
    }

    #[test]
    fn residual_of_constant_complex_hessian() {
        // φ = c(r²/4)·2 has i∂∂̄φ = (c/2)·dd^c(r²/2)... use φ = c·r²/2:
        // i∂∂̄(r²/2) = ω_e so (ω + c ω)² /ω² = (1+c)².
        let grid = small_grid(5, 1.5);
        let bg = euclid_bg(grid.clone());
        let c = 0.3;
        let phi = GridField::from_fn(grid.clone(), |x| {
            0.5 * c * x.0.iter().map(|v| v * v).sum::<f64>()
        });
        let f = GridField::zeros(grid.clone());
        let r = ma_residual(&phi, &bg, &f).unwrap();
        let expect = (1.0 + c) * (1.0 + c) - 1.0;
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            assert!(
                (r.data[l] - expect).abs() < 1e-12,
                "residual {} ≠ {expect}",
                r.data[l]
            );
        }
    }

    #[test]
    fn residual_flags_cone_exit() {
        let grid = small_grid(5, 1.5);
        let bg = euclid_bg(grid.clone());
        // strongly concave potential exits the Kähler cone
        let phi = GridField::from_fn(grid.clone(), |x| {
            -2.0 * x.0.iter().map(|v| v * v).sum::<f64>()
        });
        let f = GridField::zeros(grid.clone());
        assert!(matches!(
            ma_residual(&phi, &bg, &f),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn manufactured_solution_consistency_order() {
        // smooth manufactured φ*, analytic density f* = log((ω+i∂∂̄φ*)²/ω²);
        // the discrete residual of (φ*, f*) decreases at order h².
        // interior counts 7/17/37 halve the spacing exactly.
        let mut errs = Vec::new();
        for &n in &[7usize, 17, 37] {
            let grid = small_grid(n, 1.5);
            let bg = euclid_bg(grid.clone());
            let phi_exact = |x: RealPoint4| {
                0.05 * (x.0[0]).sin() * (x.0[1]).cos() * (x.0[2] + 0.3).sin() * (x.0[3]).cos()
            };
            let phi = GridField::from_fn(grid.clone(), phi_exact);
            let f = GridField::from_fn(grid.clone(), |x| {
                // analytic complex Hessian via high-accuracy dd^c of the closure
                let w = crate::tensor::i_del_delbar_fd(&phi_exact, x, 1e-3)
                    .unwrap()
                    .add(&euclidean_kahler_form());
                (wedge_coefficient(&w, &w) / 2.0).ln()
            });
            let r = ma_residual(&phi, &bg, &f).unwrap();
            errs.push((grid.h[0], r.max_abs_interior()));
        }
        let order = crate::log_log_slope(&errs);
        assert!(
            (order - 2.0).abs() < 0.3,
            "consistency order {order}, errors {errs:?}"
        );
    }

    #[test]
    fn linear_solve_recovers_quadratic_with_boundary_data() {
        let grid = small_grid(7, 1.5);
        let bg = euclid_bg(grid.clone());
        let phi = GridField::zeros(grid.clone());
        // ψ* quadratic: L ψ* = ½ Δψ* is constant; stencils are exact
        let q = |x: RealPoint4| x.0[0] * x.0[0] + 0.5 * x.0[1] * x.0[2] - x.0[3] * x.0[3] * 0.25;
        let psi_exact = GridField::from_fn(grid.clone(), q);
        let rhs = GridField::from_fn(grid.clone(), |_| 0.5 * (2.0 - 0.5));
        let psi = linearized_solve(&phi, &bg, &rhs, Some(&psi_exact)).unwrap();
        let mut dev = 0.0f64;
        for i in grid.interior_indices() {
            let l = grid.idx(i);
            dev = dev.max((psi.data[l] - psi_exact.data[l]).abs());
        }
        assert!(dev < 1e-8, "quadratic recovery dev {dev:.2e}");
    }

    #[test]
    fn linear_solve_zero_rhs_and_maximum_principle() {
        let grid = small_grid(7, 1.5);
        let bg = euclid_bg(grid.clone());
        let phi = GridField::zeros(grid.clone());
        let zero = GridField::zeros(grid.clone());
        let psi = linearized_solve(&phi, &bg, &zero, None).unwrap();
        assert!(psi.max_abs() < 1e-14);
        // rhs ≥ 0 ⇒ ψ ≤ 0 for the M-matrix discretization
        let rhs = GridField::from_fn(grid.clone(), |x| {
            if x.norm() < 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let psi = linearized_solve(&phi, &bg, &rhs, None).unwrap();
        let max = psi.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max <= 1e-12, "maximum principle violated: max ψ = {max}");
    }

    fn bump_config(n: usize, amp: f64, bgk: Background) -> SolverConfig {
        SolverConfig {
            lo: [-3.0; 4],
            hi: [3.0; 4],
            interior: [n; 4],
            background: bgk,
            bump: BumpSpec {
                amplitude: amp,
                center: [0.0; 4],
                radius: 1.6,
            },
            schedule: Schedule::default(),
            seed: 0,
        }
    }

    #[test]
    fn continuity_zero_source_stays_zero() {
        let cfg = bump_config(7, 0.0, Background::Euclidean);
        let (record, state) = run_solve(&cfg).unwrap();
        assert_eq!(record.reached_t, 1.0);
        assert!(state.phi.max_abs() <= 1e-10);
        // every stage converged immediately
        for s in &state.stages {
            assert!(s.newton_residuals[0] <= 1e-12);
        }
    }

    #[test]
    fn continuity_bump_solves_and_is_unique() {
        let cfg = bump_config(9, 0.1, Background::Euclidean);
        let (record, state) = run_solve(&cfg).unwrap();
        assert_eq!(record.reached_t, 1.0);
        assert!(record.final_residual <= 1e-8, "residual {}", record.final_residual);
        assert!(record.trace_margin >= -1e-9, "trace bound {}", record.trace_margin);
        // direct solve at t = 1 from zero initial guess
        let (_, bg, f) = cfg.build().unwrap();
        let sched = Schedule::default();
        let mut phi_direct = GridField::zeros(state.phi.grid.clone());
        newton_stage(&mut phi_direct, &bg, &f, &sched).unwrap();
        let mut dev = 0.0f64;
        for l in 0..state.phi.data.len() {
            dev = dev.max((phi_direct.data[l] - state.phi.data[l]).abs());
        }
        assert!(dev < 1e-7, "path vs direct dev {dev:.2e}");
        // perturbed initial guess lands on the same solution
        let mut phi_pert = GridField::from_fn(state.phi.grid.clone(), |x| {
            1e-3 * (x.0[0] * 1.3).sin() * (-x.norm()).exp()
        });
        for l in 0..phi_pert.data.len() {
            let i = phi_pert.grid.coords(l);
            if !phi_pert.grid.is_interior(i) {
                phi_pert.data[l] = 0.0;
            }
        }
        newton_stage(&mut phi_pert, &bg, &f, &sched).unwrap();
        let mut dev = 0.0f64;
        for l in 0..state.phi.data.len() {
            dev = dev.max((phi_pert.data[l] - state.phi.data[l]).abs());
        }
        assert!(dev < 1e-7, "uniqueness dev {dev:.2e}");
        // quadratic convergence evidence was logged
        let ratios: usize = state.stages.iter().map(|s| s.quadratic_ratios.len()).sum();
        assert!(ratios > 0);
    }

    #[test]
    fn solve_is_deterministic_across_seeds() {
        // the solver itself is deterministic; the seed only labels the run
        let mut cfg = bump_config(7, 0.05, Background::Euclidean);
        cfg.seed = 1;
        let (_, s1) = run_solve(&cfg).unwrap();
        cfg.seed = 2;
        let (_, s2) = run_solve(&cfg).unwrap();
        for l in 0..s1.phi.data.len() {
            assert_eq!(s1.phi.data[l].to_bits(), s2.phi.data[l].to_bits());
        }
    }

    #[test]
    fn continuity_cone_exit_reports_last_good_t() {
        // a deep negative density collapse pushes Newton out of the cone
        let cfg = SolverConfig {
            lo: [-3.0; 4],
            hi: [3.0; 4],
            interior: [7; 4],
            background: Background::Euclidean,
            bump: BumpSpec {
                amplitude: -40.0,
                center: [0.0; 4],
                radius: 1.9,
            },
            schedule: Schedule {
                t_step: 0.1,
                min_step: 0.02,
                newton_tol: 1e-9,
                max_newton: 12,
            },
            seed: 0,
        };
        match run_solve(&cfg) {
            Err(Error::ConeExit { last_t }) => {
                assert!(last_t > 0.0 && last_t < 1.0, "last good t = {last_t}");
            }
            other => panic!("expected cone exit, got {other:?}"),
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let grid = small_grid(9, 2.0);
        let bg = BackgroundKahler::new(grid.clone(), Background::Taubnut { m: 1.0 }).unwrap();
        // constant field, δ = 0, k = 0
        let c = GridField::from_fn(grid.clone(), |_| 3.25);
        let spec = WeightedNorm {
            k: 0,
            alpha: 0.0,
            delta: 0.0,
        };
        assert_eq!(weighted_norm(&c, &bg, &spec).unwrap(), 3.25);
        // field = ρ⁻¹ with δ = 1, k = 0: the weight cancels
        let mut inv_rho = GridField::zeros(grid.clone());
        for l in 0..grid.len() {
            inv_rho.data[l] = 1.0 / bg.rho[l];
        }
        let spec = WeightedNorm {
            k: 0,
            alpha: 0.0,
            delta: 1.0,
        };
        let v = weighted_norm(&inv_rho, &bg, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // monotone under restriction to sub-boxes
        let f = GridField::from_fn(grid.clone(), |x| (x.0[0] + 0.2 * x.0[2]).sin());
        let spec = WeightedNorm {
            k: 2,
            alpha: 0.5,
            delta: 0.7,
        };
        let full = weighted_norm(&f, &bg, &spec).unwrap();
        let sub = weighted_norm_in(&f, &bg, &spec, Some(([3, 3, 3, 3], [7, 7, 7, 7]))).unwrap();
        assert!(sub <= full + 1e-15);
        // invalid Hölder exponent rejected
        let bad = WeightedNorm {
            k: 0,
            alpha: 1.0,
            delta: 0.0,
        };
        assert!(weighted_norm(&f, &bg, &bad).is_err());
    }

    #[test]
    fn sobolev_zero_field() {
        let grid = small_grid(5, 2.0);
        let bg = BackgroundKahler::new(grid.clone(), Background::Taubnut { m: 1.0 }).unwrap();
        let rep = sobolev_check(&bg, &[GridField::zeros(grid)]).unwrap();
        assert_eq!(rep.sobolev_ratios[0], 0.0);
        assert_eq!(rep.hardy_ratios[0], 0.0);
    }

    #[test]
    fn solution_weighted_norm_stable_under_refinement() {
        // C⁰_δ norm of the converged solution depends on the data, not the
        // grid: stable across two refinements
        let mut norms = Vec::new();
        for &n in &[7usize, 9, 11] {
            let cfg = bump_config(n, 0.08, Background::Taubnut { m: 1.0 });
            let (_, state) = run_solve(&cfg).unwrap();
            let (_, bg, _) = cfg.build().unwrap();
            let spec = WeightedNorm {
                k: 0,
                alpha: 0.0,
                delta: 0.5,
            };
            norms.push(weighted_norm(&state.phi, &bg, &spec).unwrap());
        }
        for w in norms.windows(2) {
            let ratio = w[1] / w[0];
            assert!(
                (0.75..=1.25).contains(&ratio),
                "solution norm unstable under refinement: {norms:?}"
            );
        }
    }

    #[test]
    fn sobolev_and_hardy_ratios_bounded() {
        let mut reports = Vec::new();
        for &n in &[9usize, 17] {
            let grid = small_grid(n, 3.0);
            let bg = BackgroundKahler::new(grid.clone(), Background::Taubnut { m: 1.0 }).unwrap();
            let mut samples = Vec::new();
            for &scale in &[0.6, 1.0, 1.6] {
                let bump = BumpSpec {
                    amplitude: 1.0,
                    center: [0.0; 4],
                    radius: scale,
                };
                samples.push(GridField::from_fn(grid.clone(), |x| bump.eval(x)));
            }
            let rep = sobolev_check(&bg, &samples).unwrap();
            assert_eq!(rep.sobolev_ratios.len(), 3);
            for (&s, &h) in rep.sobolev_ratios.iter().zip(rep.hardy_ratios.iter()) {
                assert!(s.is_finite() && s > 0.0);
                assert!(h.is_finite() && h > 0.0);
            }
            reports.push(rep);
        }
        // refinement stability: ratios grow by no more than 10%
        for k in 0..3 {
            let coarse = reports[0].sobolev_ratios[k];
            let fine = reports[1].sobolev_ratios[k];
            assert!(fine <= 1.1 * coarse, "Sobolev ratio grew: {coarse} -> {fine}");
            let hc = reports[0].hardy_ratios[k];
            let hf = reports[1].hardy_ratios[k];
            assert!(hf <= 1.1 * hc, "Hardy ratio grew: {hc} -> {hf}");
        }
    }

    #[test]
    fn trace_bound_at_zero_solution() {
        let grid = small_grid(5, 2.0);
        let bg = euclid_bg(grid.clone());
        let phi = GridField::zeros(grid.clone());
        let f = GridField::zeros(grid.clone());
        // tr^ω(ω) = 4 = 4e⁰ exactly
        let margin = trace_bound_margin(&phi, &bg, &f);
        assert!(margin.abs() < 1e-12);
    }

    #[test]
    fn yau_probe_trivial_and_flat() {
        // φ = 0, f = 0: both sides vanish
        let grid = small_grid(9, 2.0);
        let bg = euclid_bg(grid.clone());
        let phi = GridField::zeros(grid.clone());
        let f = GridField::zeros(grid.clone());
        let rep = aubin_yau_probe(&phi, &bg, &f, 64).unwrap();
        assert!(rep.rel_discrepancy < 1e-10 || rep.probes == 0);

        // flat background, converged solution: identity reduces to
        // Δ'(Δφ) = -2Δf + third-order square
        let cfg = bump_config(11, 0.08, Background::Euclidean);
        let (_, state) = run_solve(&cfg).unwrap();
        let (_, bg, f) = cfg.build().unwrap();
        let rep = aubin_yau_probe(&state.phi, &bg, &f, 200).unwrap();
        assert!(
            rep.rel_discrepancy < 5e-2,
            "flat-background discrepancy {}",
            rep.rel_discrepancy
        );
    }

    #[test]
    fn yau_probe_improves_under_refinement() {
        let mut devs = Vec::new();
        for &n in &[9usize, 17] {
            let cfg = bump_config(n, 0.08, Background::Euclidean);
            let (_, state) = run_solve(&cfg).unwrap();
            let (_, bg, f) = cfg.build().unwrap();
            let rep = aubin_yau_probe(&state.phi, &bg, &f, 200).unwrap();
            devs.push(rep.rel_discrepancy);
        }
        assert!(
            devs[1] < devs[0],
            "probe discrepancy did not improve: {devs:?}"
        );
    }
}
