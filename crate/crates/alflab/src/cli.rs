//! Batch entry points: verification suites, sweeps and Monge-Ampère solves,
//! emitting machine-readable CSV/JSON. One 64-bit seed is split per suite;
//! point checks are dispatched across worker threads and aggregated in point
//! order, so identical seeds give bit-identical output.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::gluing::{self, AleModel};
use crate::monge_ampere::{self, SolverConfig};
use crate::rng::SplitMix64;
use crate::taubnut::{self, TaubNutPoint};
use crate::tensor::{metric_from_form, standard_complex_structures, two_form_wedge_ratio};
use crate::{dihedral, Error, Result};

/// Reproducibility header attached to run records.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: u64,
    pub seed: u64,
    pub version: String,
    pub timestamp_epoch_s: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: &str, seed: u64) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in config.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        Self {
            command: command.to_string(),
            config_hash: h,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_epoch_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// One residual check; passes when residual ≤ tolerance.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub suite: &'static str,
    pub index: usize,
    /// base point of the check ([0; 4] for aggregate rows)
    pub point: [f64; 4],
    pub m: f64,
    pub k: usize,
    /// name of the verified identity
    pub identity: &'static str,
    pub residual: f64,
    pub tol: f64,
}

impl CheckRow {
    pub fn pass(&self) -> bool {
        self.residual <= self.tol
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn rows_to_csv(rows: &[CheckRow]) -> String {
    let mut s =
        String::from("suite,index,x1,x2,x3,x4,m,k,identity,residual,tolerance,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.suite,
            r.index,
            fmt_f(r.point[0]),
            fmt_f(r.point[1]),
            fmt_f(r.point[2]),
            fmt_f(r.point[3]),
            fmt_f(r.m),
            r.k,
            r.identity,
            fmt_f(r.residual),
            fmt_f(r.tol),
            r.pass()
        );
    }
    s
}

// ---------------------------------------------------------------------------
// verify suites
// ---------------------------------------------------------------------------

fn taubnut_identity_rows(m: f64, seed: u64, n: usize) -> Vec<CheckRow> {
    let points: Vec<TaubNutPoint> = {
        let mut rng = SplitMix64::new(seed).split("taubnut-identities");
        // keep (2 m r²)² ε below the row tolerances
        let r_hi = (150.0 / m).sqrt().clamp(2.0, 12.0);
        (0..n)
            .map(|_| taubnut::sample_point(&mut rng, m, 0.3, r_hi))
            .collect()
    };
    let (i1, _, _) = standard_complex_structures();
    points
        .par_iter()
        .enumerate()
        .flat_map(|(index, p)| {
            let w = taubnut::kahler_form_f(p);
            let wedge_dev = (two_form_wedge_ratio(&w, &w) - 2.0).abs();
            let eta_dev = (taubnut::eta_at(p).pair(&taubnut::xi_at(p)) - 1.0).abs();
            let f = metric_from_form(&w, &i1);
            let gh = taubnut::metric_gh(p).expect("off origin");
            let gh_dev = (f.0 - gh.0).amax() / (1.0 + f.0.amax());
            let phi_dev = (taubnut::potential_phi(p) - taubnut::potential_phi_moment(p)).abs()
                / (1.0 + taubnut::potential_phi(p));
            let (lo_v, hi_v) = taubnut::radius_bound_violation(p);
            let radius_dev = lo_v.max(hi_v).max(0.0);
            let mk = |identity, residual, tol| CheckRow {
                suite: "taubnut-identities",
                index,
                point: p.x().0,
                m,
                k: 0,
                identity,
                residual,
                tol,
            };
            vec![
                mk("omega_f_wedge_ratio_2", wedge_dev, 1e-9),
                mk("eta_xi_pairing_1", eta_dev, 1e-10),
                mk("gibbons_hawking_reassembly", gh_dev, 1e-9),
                mk("potential_moment_identity", phi_dev, 1e-12),
                mk("radius_bounds_2R_r2_exp", radius_dev, 1e-10),
                mk("implicit_system_residual", p.implicit_residual(), 1e-12),
            ]
        })
        .collect()
}

fn dihedral_rows(k: usize, m: f64, seed: u64, n: usize) -> Result<Vec<CheckRow>> {
    let group = dihedral::DihedralGroup::new(k)?;
    let mut rng = SplitMix64::new(seed).split("dihedral");
    let mut rows = Vec::new();
    rows.push(CheckRow {
        suite: "dihedral",
        index: 0,
        point: [0.0; 4],
        m,
        k,
        identity: "group_closure_su2",
        residual: group.closure_defect(),
        tol: 1e-12,
    });
    let samples: Vec<crate::tensor::ComplexPoint> = (0..n.max(4))
        .map(|_| {
            let r = rng.log_range(0.5, 4.0);
            crate::tensor::RealPoint4(rng.on_sphere(r)).to_complex()
        })
        .collect();
    for (index, &z) in samples.iter().enumerate() {
        let t = dihedral::invariant_triple(z, k);
        rows.push(CheckRow {
            suite: "dihedral",
            index,
            point: z.to_real().0,
            m,
            k,
            identity: "syzygy_u2_v2w_wk1",
            residual: t.syzygy_residual(k),
            tol: 1e-10,
        });
        // τ-swap of the implicit coordinates
        let (u, v) = taubnut::solve_uv(z, m);
        let (ut, vt) = taubnut::solve_uv(dihedral::tau_gen().apply(z), m);
        rows.push(CheckRow {
            suite: "dihedral",
            index,
            point: z.to_real().0,
            m,
            k,
            identity: "tau_swaps_uv",
            residual: ((ut - v).abs().max((vt - u).abs())) / (1.0 + u.max(v)),
            tol: 1e-10,
        });
    }
    let rep = dihedral::check_potential_invariance(k, m, &samples)?;
    for (identity, residual, tol) in [
        ("uv_equivariance", rep.uv_residual, 1e-10),
        ("potential_invariance", rep.phi_residual, 1e-10),
        ("metric_pushforward_invariance", rep.metric_residual, 1e-9),
        (
            "tetrahedral_witness_noninvariance",
            1e-3 - rep.tetrahedral_witness,
            0.0,
        ),
    ] {
        rows.push(CheckRow {
            suite: "dihedral",
            index: 0,
            point: [0.0; 4],
            m,
            k,
            identity,
            residual,
            tol,
        });
    }
    Ok(rows)
}

fn gluing_rows(m: f64, seed: u64, n: usize) -> Result<Vec<CheckRow>> {
    let cfg = gluing::auto_tune(m, AleModel::EguchiHansonCorrection { amp: 0.05 })?;
    let angles = (n / 28).clamp(4, 64);
    let sweep = gluing::sweep_points(&cfg, angles, seed);
    let rep = gluing::zone_bounds_check(&cfg, &sweep)?;
    let base = cfg.seam_hi() + 2.0;
    let radii = [base, base * 2.0, base * 4.0];
    let decay = gluing::decay_report(&cfg, &radii)?;
    let rows = vec![
        CheckRow {
            suite: "gluing",
            index: 0,
            point: [0.0; 4],
            m,
            k: 0,
            identity: "gm_positive_min_eigenvalue",
            residual: -rep.min_eig_gm,
            tol: 0.0,
        },
        CheckRow {
            suite: "gluing",
            index: 0,
            point: [0.0; 4],
            m,
            k: 0,
            identity: "zone_inner_ge_omega_g",
            residual: -rep.inner_margin,
            tol: 1e-9,
        },
        CheckRow {
            suite: "gluing",
            index: 0,
            point: [0.0; 4],
            m,
            k: 0,
            identity: "zone_annulus_ge_quarter_omega_f",
            residual: -rep.annulus_margin,
            tol: 0.0,
        },
        CheckRow {
            suite: "gluing",
            index: 0,
            point: [0.0; 4],
            m,
            k: 0,
            identity: "zone_outer_ge_half_omega_f",
            residual: -rep.outer_margin,
            tol: 0.0,
        },
        CheckRow {
            suite: "gluing",
            index: 0,
            point: [0.0; 4],
            m,
            k: 0,
            identity: "gm_minus_f_decay_slope_3",
            residual: (decay.slope_gm + 3.0).abs(),
            tol: 0.3,
        },
    ];
    Ok(rows)
}

fn frames_rows(m: f64, seed: u64, n: usize) -> Vec<CheckRow> {
    let points: Vec<TaubNutPoint> = {
        let mut rng = SplitMix64::new(seed).split("frames");
        let mut pts = Vec::new();
        while pts.len() < n {
            let p = taubnut::sample_point(&mut rng, m, 3.2, 10.0);
            if p.big_r >= 5.0 && p.big_r <= 50.0 {
                pts.push(p);
            }
        }
        pts
    };
    points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let rep = taubnut::frame_and_brackets(p).expect("off origin");
            CheckRow {
                suite: "frames",
                index,
                point: p.x().0,
                m,
                k: 0,
                identity: "lie_bracket_table",
                residual: rep.max_rel_dev,
                tol: 1e-4,
            }
        })
        .collect()
}

fn curvature_rows(m: f64) -> Result<Vec<CheckRow>> {
    let rep = taubnut::curvature_decay(m, &[10.0, 30.0, 100.0])?;
    let mut rows = vec![CheckRow {
        suite: "curvature",
        index: 0,
        point: [0.0; 4],
        m,
        k: 0,
        identity: "riemann_decay_slope_3",
        residual: (rep.slope + 3.0).abs(),
        tol: 0.4,
    }];
    rows.push(CheckRow {
        suite: "curvature",
        index: 0,
        point: [0.0; 4],
        m,
        k: 0,
        identity: "ricci_flatness",
        residual: rep.ricci_max,
        tol: 1e-4,
    });
    Ok(rows)
}

/// Run a verification suite; returns (exit code, csv).
pub fn cmd_verify(suite: &str, m: f64, k: usize, seed: u64, n: usize) -> Result<(i32, String)> {
    let rows = match suite {
        "taubnut-identities" => taubnut_identity_rows(m, seed, n),
        "dihedral" => dihedral_rows(k, m, seed, n.min(64))?,
        "gluing" => gluing_rows(m, seed, n)?,
        "frames" => frames_rows(m, seed, n.min(200)),
        "curvature" => curvature_rows(m)?,
        other => {
            return Err(Error::BadConfig(format!(
                "unknown suite '{other}' (expected taubnut-identities, dihedral, gluing, frames, curvature)"
            )))
        }
    };
    let csv = rows_to_csv(&rows);
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass()).collect();
    if let Some(first) = failed.first() {
        eprintln!(
            "FAIL {}[{}] {}: residual {:.3e} > tol {:.3e}",
            first.suite, first.index, first.identity, first.residual, first.tol
        );
        Ok((1, csv))
    } else {
        Ok((0, csv))
    }
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

pub fn cmd_sweep(kind: &str, m: f64, seed: u64, n: usize) -> Result<String> {
    let mut s = String::new();
    match kind {
        "comparison-bounds" => {
            let mut rng = SplitMix64::new(seed).split("sweep-comparison");
            let _ = writeln!(s, "r2,twoR,twoR_exp4mR,det_f");
            for _ in 0..n {
                // keep 4 m R within exp range
                let p = taubnut::sample_point(&mut rng, m, 0.3, (120.0 / m).sqrt().min(30.0));
                let f = taubnut::metric_f(&p).expect("off origin");
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt_f(p.r2),
                    fmt_f(2.0 * p.big_r),
                    fmt_f(2.0 * p.big_r * (4.0 * m * p.big_r).exp()),
                    fmt_f(f.det())
                );
            }
        }
        "fiber-length" => {
            let _ = writeln!(s, "R,fiber_length,limit_pi_sqrt_2_over_m");
            let limit = std::f64::consts::PI * (2.0 / m).sqrt();
            for i in 0..n {
                let big_r = 10.0 * 1.5f64.powi(i as i32);
                let p = taubnut::diagonal_point(m, big_r, 0.3, 1.1);
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    fmt_f(big_r),
                    fmt_f(taubnut::fiber_length(&p)),
                    fmt_f(limit)
                );
            }
        }
        "decay" => {
            let cfg = gluing::auto_tune(m, AleModel::EguchiHansonCorrection { amp: 0.05 })?;
            let radii: Vec<f64> = (0..n.max(3))
                .map(|i| (cfg.seam_hi() + 2.0) * 1.6f64.powi(i as i32))
                .collect();
            let rep = gluing::decay_report(&cfg, &radii)?;
            let _ = writeln!(s, "r,R,min_eigenvalue_gm,dev_gm_f,dev_vol");
            for row in &rep.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    fmt_f(row.r),
                    fmt_f(row.big_r),
                    fmt_f(row.min_eig_gm),
                    fmt_f(row.dev_gm_f),
                    fmt_f(row.dev_vol)
                );
            }
        }
        "decay-euclidean" => {
            let cfg = gluing::auto_tune(m, AleModel::Euclidean)?;
            let radii: Vec<f64> = (0..n.max(3))
                .map(|i| (cfg.seam_hi() + 2.0) * 1.6f64.powi(i as i32))
                .collect();
            let rep = gluing::decay_report(&cfg, &radii)?;
            let _ = writeln!(s, "r,R,min_eigenvalue_gm,dev_gm_f,dev_vol");
            for row in &rep.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    fmt_f(row.r),
                    fmt_f(row.big_r),
                    fmt_f(row.min_eig_gm),
                    fmt_f(row.dev_gm_f),
                    fmt_f(row.dev_vol)
                );
            }
        }
        other => {
            return Err(Error::BadConfig(format!(
                "unknown sweep '{other}' (expected comparison-bounds, decay, decay-euclidean, fiber-length)"
            )))
        }
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveOutput<'a> {
    manifest: &'a RunManifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    record: Option<&'a monge_ampere::RunRecord>,
    failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_good_t: Option<f64>,
}

/// Run a solver config; writes record JSON and the φ field CSV into out_dir.
/// Exit code 2 on cone exit.
pub fn cmd_solve(config_path: &Path, out_dir: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(config_path)?;
    let config: SolverConfig = serde_json::from_str(&text)?;
    let manifest = RunManifest::new("solve", &text, config.seed);
    std::fs::create_dir_all(out_dir)?;
    match monge_ampere::run_solve(&config) {
        Ok((record, state)) => {
            let out = SolveOutput {
                manifest: &manifest,
                record: Some(&record),
                failed: false,
                last_good_t: None,
            };
            std::fs::write(
                out_dir.join("record.json"),
                serde_json::to_string_pretty(&out)?,
            )?;
            let mut csv = String::from("i0,i1,i2,i3,x1,x2,x3,x4,phi\n");
            let grid = &state.phi.grid;
            for l in 0..grid.len() {
                let i = grid.coords(l);
                let x = grid.point(i);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    i[0],
                    i[1],
                    i[2],
                    i[3],
                    fmt_f(x.0[0]),
                    fmt_f(x.0[1]),
                    fmt_f(x.0[2]),
                    fmt_f(x.0[3]),
                    fmt_f(state.phi.data[l])
                );
            }
            std::fs::write(out_dir.join("phi.csv"), csv)?;
            Ok(0)
        }
        Err(Error::ConeExit { last_t }) => {
            let out = SolveOutput {
                manifest: &manifest,
                record: None,
                failed: true,
                last_good_t: Some(last_t),
            };
            std::fs::write(
                out_dir.join("record.json"),
                serde_json::to_string_pretty(&out)?,
            )?;
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

/// Emit plot-ready model curves.
pub fn cmd_export(kind: &str, m: f64, n: usize) -> Result<String> {
    let mut s = String::new();
    match kind {
        "cutoffs" => {
            let c = gluing::CutoffPair;
            let _ = writeln!(s, "t,chi,chi_prime,kappa");
            for i in 0..=n {
                let t = -0.5 + 2.0 * i as f64 / n as f64;
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt_f(t),
                    fmt_f(c.chi(t)),
                    fmt_f(c.chi_d(t)),
                    fmt_f(c.kappa(t))
                );
            }
        }
        "potential" => {
            let _ = writeln!(s, "r,R_diagonal,phi_diagonal,phi_axis");
            for i in 1..=n {
                let r = 0.2 * i as f64;
                let diag = TaubNutPoint::from_real(
                    crate::tensor::RealPoint4([
                        r / 2.0f64.sqrt(),
                        0.0,
                        r / 2.0f64.sqrt(),
                        0.0,
                    ]),
                    m,
                )?;
                let axis =
                    TaubNutPoint::from_real(crate::tensor::RealPoint4([r, 0.0, 0.0, 0.0]), m)?;
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    fmt_f(r),
                    fmt_f(diag.big_r),
                    fmt_f(taubnut::potential_phi(&diag)),
                    fmt_f(taubnut::potential_phi(&axis))
                );
            }
        }
        other => {
            return Err(Error::BadConfig(format!(
                "unknown export '{other}' (expected cutoffs, potential)"
            )))
        }
    }
    Ok(s)
}
