//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use flatsteer::gevrey_core::{make_bump, make_cutoff, product_certificate, GevreyCertificate, WeightSequence};
use flatsteer::heatsim::{solve_heat, BcKind, BoundarySpec, SolveOptions};
use flatsteer::quad::adaptive_gk;
use flatsteer::Prec;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Unit mass, support in [0, a], nonnegativity and the derivative bound.
pub fn bump_invariants(ratio: f64, depth: usize) -> Check {
    let w = WeightSequence::geometric(depth + 8, ratio).map_err(|e| e.to_string())?;
    let b = make_bump(&w, depth, Prec(128)).map_err(|e| e.to_string())?;
    let right = b.truncated_support();
    ensure(right <= w.sum_from(0) + 1e-12, || format!("support {right} beyond a = {}", w.sum_from(0)))?;
    let mass = adaptive_gk(|x| b.value(x), 0.0, right, 1e-13).map_err(|e| e.to_string())?;
    ensure((mass - 1.0).abs() < 1e-10, || format!("mass {mass}"))?;
    ensure(b.value(-1e-9) == 0.0 && b.value(right + 1e-9) == 0.0, || "nonzero outside the support".into())?;
    for i in 0..=200 {
        let v = b.value(right * i as f64 / 200.0);
        ensure(v >= -1e-12, || format!("negative value {v}"))?;
    }
    let kmax = depth.saturating_sub(2).min(6);
    let r = b.max_bound_ratio(kmax, 400, |k| b.ln_derivative_bound(k));
    ensure(r <= 1.0 + 1e-9, || format!("derivative bound ratio {r} for depth {depth}"))
}

/// φ ≡ 1 with vanishing derivatives on the plateau, 0 outside the radius.
pub fn cutoff_vanishing(ratio: f64, delta: f64, depth: usize, frac: f64) -> Check {
    let w = WeightSequence::geometric(60, ratio).map_err(|e| e.to_string())?;
    let c = make_cutoff(&w, delta, depth, Prec(128)).map_err(|e| e.to_string())?;
    let x = frac * c.plateau();
    let j = c.jet(&x, 8);
    ensure(j[0] == 1.0, || format!("φ({x}) = {}", j[0]))?;
    ensure(j[1..].iter().all(|v| *v == 0.0), || format!("nonzero derivative at {x}: {j:?}"))?;
    ensure(c.value(c.radius * (1.0 + 1e-9)) == 0.0, || "nonzero beyond the radius".into())?;
    let y = c.plateau() + frac * (c.radius - c.plateau());
    ensure((c.value(y) - c.value(-y)).abs() < 1e-13, || "cutoff is not even".into())
}

/// The product of a Gevrey-s function with a lower-order multiplier keeps (s, R).
pub fn product_same_radius(s_f: f64, s_g: f64, c_f: f64, c_g: f64, r: f64, rho: f64) -> Check {
    let f = GevreyCertificate::new(s_f, c_f, r).map_err(|e| e.to_string())?;
    let g = GevreyCertificate::new(s_g, c_g, rho).map_err(|e| e.to_string())?;
    let p = product_certificate(&f, &g).map_err(|e| e.to_string())?;
    ensure(p.r == r && p.s == s_f, || format!("product changed (s, R) to ({}, {})", p.s, p.r))?;
    ensure(p.c >= 2.0 * c_f * c_g * (1.0 - 1e-12), || format!("constant {} below 2 C_f C_g", p.c))?;
    ensure(product_certificate(&g, &f).is_err(), || "reversed orders accepted".into())
}

/// Even and odd data on [−1, 1] keep their parity under symmetric boundary conditions.
pub fn parity_preserved(kind: BcKind, coeffs: &[f64], odd: bool) -> Check {
    let nx = 64;
    let nt = 64;
    let init: Vec<f64> = (0..=nx)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / nx as f64;
            let s: f64 = coeffs.iter().enumerate().map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x * 0.5).cos()).sum();
            if odd {
                x * s
            } else {
                s
            }
        })
        .collect();
    let bc = BoundarySpec::homogeneous(kind).map_err(|e| e.to_string())?;
    let f = solve_heat(&bc, &bc, &init, (-1.0, 1.0), 0.05, nx, nt, SolveOptions { store_every: 8 })
        .map_err(|e| e.to_string())?;
    let scale = init.iter().map(|v| v.abs()).fold(1e-300, f64::max);
    for k in 0..f.ts.len() {
        let row = f.row(k);
        for i in 0..=nx {
            let mirror = if odd { -row[nx - i] } else { row[nx - i] };
            ensure((row[i] - mirror).abs() <= 1e-12 * scale, || format!("parity broken at row {k}, node {i}"))?;
        }
    }
    Ok(())
}
