//! Prüfer-angle shooting for one scalar mode block.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c64, cx, I};

use super::ModeBlock;

type Vec2 = [c64; 2];
type Mat2c = [[c64; 2]; 2];

fn matvec(a: &Mat2c, u: &Vec2) -> Vec2 {
    [a[0][0] * u[0] + a[0][1] * u[1], a[1][0] * u[0] + a[1][1] * u[1]]
}

fn axpy(u: &Vec2, h: f64, terms: &[(f64, &Vec2)]) -> Vec2 {
    let mut out = *u;
    for (c, v) in terms {
        out[0] += v[0] * (h * c);
        out[1] += v[1] * (h * c);
    }
    out
}

fn norm(u: &Vec2) -> f64 {
    (u[0].norm_sqr() + u[1].norm_sqr()).sqrt()
}

/// The linear system `u' = (M₀ + σ(r)) u` for fixed `λ`.
struct ModeOde<'a> {
    block: &'a ModeBlock,
    m0: Mat2c,
}

impl<'a> ModeOde<'a> {
    fn new(block: &'a ModeBlock, lambda: f64) -> Self {
        // u' = i ρ_r⁻¹ (λ - κ ρ_φ - q) u - (i c_r + ½ ℓ') u
        let rr = block.rho_r();
        let rp = block.rho_phi();
        let z2 = block.z().norm_sqr();
        let mut m0 = [[c64::ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c64::ZERO;
                for l in 0..2 {
                    let lam = if l == j { cx(lambda, 0.0) } else { c64::ZERO };
                    acc += rr[i][l] * (lam - rp[l][j] * block.kappa - block.q[l][j]);
                }
                m0[i][j] = I * acc / z2;
            }
        }
        Self { block, m0 }
    }

    fn rhs(&self, r: f64, u: &Vec2) -> Vec2 {
        let s = self.block.scalar_rate(r);
        let v = matvec(&self.m0, u);
        [v[0] + s * u[0], v[1] + s * u[1]]
    }
}

// Dormand–Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn dp_step(ode: &ModeOde, r: f64, u: &Vec2, h: f64) -> (Vec2, f64) {
    let k1 = ode.rhs(r, u);
    let k2 = ode.rhs(r + C[1] * h, &axpy(u, h, &[(A2[0], &k1)]));
    let k3 = ode.rhs(r + C[2] * h, &axpy(u, h, &[(A3[0], &k1), (A3[1], &k2)]));
    let k4 = ode.rhs(r + C[3] * h, &axpy(u, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]));
    let k5 = ode.rhs(r + C[4] * h, &axpy(u, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]));
    let k6 = ode.rhs(
        r + C[5] * h,
        &axpy(u, h, &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
    );
    let y5 = axpy(u, h, &[(B5[0], &k1), (B5[2], &k3), (B5[3], &k4), (B5[4], &k5), (B5[5], &k6)]);
    let k7 = ode.rhs(r + h, &y5);
    let y4 = axpy(u, h, &[(B4[0], &k1), (B4[2], &k3), (B4[3], &k4), (B4[4], &k5), (B4[5], &k6), (B4[6], &k7)]);
    let err = norm(&[y5[0] - y4[0], y5[1] - y4[1]]);
    (y5, err)
}

/// `e^{2iθ}` for the Prüfer angle with `tan θ = w₂/w₁`.
fn double_angle_phase(block: &ModeBlock, u: &Vec2) -> c64 {
    let w1 = u[0];
    let w2 = -I * block.frame_phase().conj() * u[1];
    (w1 + I * w2) / (w1 - I * w2)
}

const MAX_STEPS: usize = 200_000;

/// Unwrapped Prüfer angle at `r_out` when shooting from the inner boundary condition.
pub(crate) fn prufer_end_angle(block: &ModeBlock, lambda: f64, tol: f64) -> Result<f64> {
    let ode = ModeOde::new(block, lambda);
    let tau_in = block.tau_in();
    let mut u: Vec2 = [c64::ONE, I * block.frame_phase() * tau_in];
    let n0 = norm(&u);
    u = [u[0] / n0, u[1] / n0];
    let mut two_theta = 2.0 * tau_in.atan();
    let mut phase = double_angle_phase(block, &u);
    let (r0, r1) = (block.r_in, block.r_out);
    let mut r = r0;
    let mut h = ((r1 - r0) / 64.0).min(0.25 / (lambda.abs() + block.kappa.abs() + 1.0));
    let mut steps = 0;
    while r < r1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::EigensolveFailure(format!("shooting did not finish for λ = {lambda}")));
        }
        let last = r + h >= r1;
        let step = if last { r1 - r } else { h };
        let (y, err) = dp_step(&ode, r, &u, step);
        let ratio = err / tol;
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        if ratio > 1.0 {
            h = step * factor;
            continue;
        }
        let ny = norm(&y);
        let y = [y[0] / ny, y[1] / ny];
        let new_phase = double_angle_phase(block, &y);
        let delta = (new_phase * phase.conj()).arg();
        if delta.abs() >= PI / 2.0 {
            h = step * 0.5;
            continue;
        }
        two_theta += delta;
        phase = new_phase;
        u = y;
        r = if last { r1 } else { r + step };
        h = step * factor;
    }
    Ok(0.5 * two_theta)
}

/// `F(λ) = (θ(r_out; λ) - arctan τ_out)/π`; eigenvalues are where `F` is an integer.
pub(crate) fn prufer_count(block: &ModeBlock, lambda: f64, tol: f64) -> Result<f64> {
    Ok((prufer_end_angle(block, lambda, tol)? - block.tau_out().atan()) / PI)
}

const SNAP: f64 = 1e-10;

/// Roots of `F(λ) = n` in `[lo, hi]` found by scanning with spacing at most
/// `step` and refining each bracket. Returns `(λ, n)` pairs.
pub(crate) fn scan_roots(block: &ModeBlock, lo: f64, hi: f64, step: f64, tol: f64, eig_tol: f64) -> Result<Vec<(f64, i64)>> {
    let n_steps = (((hi - lo) / step).ceil() as usize).max(1);
    let grid: Vec<f64> = (0..=n_steps).map(|i| lo + (hi - lo) * i as f64 / n_steps as f64).collect();
    let values = grid.iter().map(|&l| prufer_count(block, l, tol)).collect::<Result<Vec<_>>>()?;
    let snap = |f: f64| if (f - f.round()).abs() < SNAP { f.round() } else { f };
    let mut roots = Vec::new();
    for i in 0..n_steps {
        let (fa, fb) = (snap(values[i]), snap(values[i + 1]));
        let (lo_f, hi_f) = (fa.min(fb), fa.max(fb));
        let mut n = lo_f.ceil() as i64;
        while (n as f64) <= hi_f {
            let nf = n as f64;
            // A root on a grid point belongs to the interval on its right.
            if nf != fb || i + 1 == n_steps {
                let lambda = if nf == fa {
                    grid[i]
                } else if nf == fb {
                    grid[i + 1]
                } else {
                    refine_root(block, grid[i], grid[i + 1], fa - nf, fb - nf, nf, tol, eig_tol)?
                };
                roots.push((lambda, n));
            }
            n += 1;
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    roots.dedup_by(|a, b| a.1 == b.1 && (a.0 - b.0).abs() < eig_tol);
    Ok(roots)
}

/// Illinois-modified regula falsi on `F(λ) - n`.
#[allow(clippy::too_many_arguments)]
fn refine_root(block: &ModeBlock, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64, n: f64, tol: f64, eig_tol: f64) -> Result<f64> {
    let target = 1e-3 * eig_tol;
    let mut side = 0i8;
    for _ in 0..200 {
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let gc = prufer_count(block, c, tol)? - n;
        if gc == 0.0 || (b - a).abs() < target {
            return Ok(c);
        }
        if (gc > 0.0) == (gb > 0.0) {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if gc.abs() < 1e-14 {
            return Ok(c);
        }
    }
    Ok(0.5 * (a + b))
}
