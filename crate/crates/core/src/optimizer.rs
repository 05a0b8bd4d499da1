//! Derivative-free maximizers for the two-dimensional concentrated
//! likelihood: Nelder-Mead in unconstrained internal coordinates (default)
//! and a nested golden-section search.

/// Outcome of a maximization run.
#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: [f64; 2],
    pub f: f64,
    pub n_evals: usize,
    pub converged: bool,
    /// Best objective value seen after each accepted iteration; nondecreasing.
    pub best_trace: Vec<f64>,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5) maximizing `f` from `start` with initial simplex offsets
/// `step`. Converges when the simplex function spread falls below
/// `tol * max(1, |f_best|)` and the simplex diameter below `sqrt(tol)`.
pub fn nelder_mead_max<F>(
    mut f: F,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_evals: usize,
) -> OptimOutcome
where
    F: FnMut(&[f64; 2]) -> f64,
{
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64; 2], n_evals: &mut usize| -> f64 {
        *n_evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    let f0 = eval(&start, &mut n_evals);
    simplex.push((start, f0));
    for d in 0..2 {
        let mut p = start;
        p[d] += step[d];
        let fp = eval(&p, &mut n_evals);
        simplex.push((p, fp));
    }

    let mut best_trace = vec![simplex.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)];
    let mut converged = false;

    while n_evals < max_evals {
        // descending by objective: best first
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0];
        let worst = simplex[2];

        let spread = best.1 - worst.1;
        let diam = simplex
            .iter()
            .map(|(p, _)| ((p[0] - best.0[0]).abs()).max((p[1] - best.0[1]).abs()))
            .fold(0.0f64, f64::max);
        if best.1.is_finite()
            && spread.abs() <= tol * best.1.abs().max(1.0)
            && diam <= tol.sqrt()
        {
            converged = true;
            break;
        }

        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let reflect = [
            centroid[0] + (centroid[0] - worst.0[0]),
            centroid[1] + (centroid[1] - worst.0[1]),
        ];
        let f_r = eval(&reflect, &mut n_evals);

        if f_r > best.1 {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - worst.0[0]),
                centroid[1] + 2.0 * (centroid[1] - worst.0[1]),
            ];
            let f_e = eval(&expand, &mut n_evals);
            simplex[2] = if f_e > f_r { (expand, f_e) } else { (reflect, f_r) };
        } else if f_r > simplex[1].1 {
            simplex[2] = (reflect, f_r);
        } else {
            let contract = if f_r > worst.1 {
                // outside contraction
                [
                    centroid[0] + 0.5 * (reflect[0] - centroid[0]),
                    centroid[1] + 0.5 * (reflect[1] - centroid[1]),
                ]
            } else {
                // inside contraction
                [
                    centroid[0] - 0.5 * (centroid[0] - worst.0[0]),
                    centroid[1] - 0.5 * (centroid[1] - worst.0[1]),
                ]
            };
            let f_c = eval(&contract, &mut n_evals);
            if f_c > f_r.max(worst.1) {
                simplex[2] = (contract, f_c);
            } else {
                // shrink toward the best point
                for k in 1..3 {
                    let p = [
                        simplex[0].0[0] + 0.5 * (simplex[k].0[0] - simplex[0].0[0]),
                        simplex[0].0[1] + 0.5 * (simplex[k].0[1] - simplex[0].0[1]),
                    ];
                    let fp = eval(&p, &mut n_evals);
                    simplex[k] = (p, fp);
                }
            }
        }
        let cur_best = simplex.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let prev = *best_trace.last().unwrap();
        best_trace.push(cur_best.max(prev));
    }

    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    OptimOutcome {
        x: simplex[0].0,
        f: simplex[0].1,
        n_evals,
        converged,
        best_trace,
    }
}

/// Newton refinement on a fixed-width central-difference stencil, run after
/// the simplex search. The stencil width stays far above rounding noise, so
/// the iteration finds the root of the smoothed gradient deterministically
/// and lands on the same point for numerically equivalent objectives; the
/// O(h^2) offset from the exact stationary point is orders of magnitude
/// below any statistical scale.
pub fn newton_polish<F>(
    mut f: F,
    start: [f64; 2],
    f_start: f64,
    h0: f64,
    max_iter: usize,
) -> ([f64; 2], f64, usize)
where
    F: FnMut(&[f64; 2]) -> f64,
{
    let mut x = start;
    let mut fx = f_start;
    let mut n_evals = 0usize;
    let mut h = h0;
    let mut iter = 0usize;
    while iter < max_iter && h > 1e-6 {
        iter += 1;
        let mut eval = |dx: f64, dy: f64, n: &mut usize| {
            *n += 1;
            f(&[x[0] + dx, x[1] + dy])
        };
        let fp0 = eval(h, 0.0, &mut n_evals);
        let fm0 = eval(-h, 0.0, &mut n_evals);
        let f0p = eval(0.0, h, &mut n_evals);
        let f0m = eval(0.0, -h, &mut n_evals);
        let fpp = eval(h, h, &mut n_evals);
        let fpm = eval(h, -h, &mut n_evals);
        let fmp = eval(-h, h, &mut n_evals);
        let fmm = eval(-h, -h, &mut n_evals);
        let all = [fp0, fm0, f0p, f0m, fpp, fpm, fmp, fmm];
        if all.iter().any(|v| !v.is_finite()) {
            // stencil touches an invalid region (interval edge); tighten
            h *= 0.5;
            continue;
        }
        let gx = (fp0 - fm0) / (2.0 * h);
        let gy = (f0p - f0m) / (2.0 * h);
        let hxx = (fp0 - 2.0 * fx + fm0) / (h * h);
        let hyy = (f0p - 2.0 * fx + f0m) / (h * h);
        let hxy = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        let det = hxx * hyy - hxy * hxy;

        let (mut sx, mut sy) = if hxx < 0.0 && det > 0.0 {
            // full Newton step toward the stationary point
            (
                -(hyy * gx - hxy * gy) / det,
                -(hxx * gy - hxy * gx) / det,
            )
        } else {
            // curvature unusable in at least one direction (boundary-flat
            // objective); fall back to coordinate-wise steps where possible
            (
                if hxx < 0.0 { -gx / hxx } else { 0.0 },
                if hyy < 0.0 { -gy / hyy } else { 0.0 },
            )
        };
        let cap = 50.0 * h;
        sx = sx.clamp(-cap, cap);
        sy = sy.clamp(-cap, cap);
        if sx == 0.0 && sy == 0.0 {
            break;
        }
        let xn = [x[0] + sx, x[1] + sy];
        let fn_ = f(&xn);
        n_evals += 1;
        if !fn_.is_finite() || fn_ < fx - 1e-6 * fx.abs().max(1.0) {
            h *= 0.5;
            continue;
        }
        x = xn;
        fx = fn_;
        if sx.abs().max(sy.abs()) < 1e-10 {
            break;
        }
    }
    (x, fx, n_evals)
}

/// Golden-section maximization of a unimodal function on [lo, hi].
/// Returns (argmax, max, evals).
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, tol_x: f64, max_evals: usize) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2usize;
    while (b - a).abs() > tol_x && evals < max_evals {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc > fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}
