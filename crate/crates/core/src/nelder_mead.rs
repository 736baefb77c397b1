//! Box-constrained Nelder–Mead in two dimensions.
//!
//! Trial points are projected onto the box, which keeps the simplex feasible
//! without penalty terms.

pub(crate) struct Bounds {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Bounds {
    pub fn project(&self, x: [f64; 2]) -> [f64; 2] {
        [
            x[0].clamp(self.lo[0], self.hi[0]),
            x[1].clamp(self.lo[1], self.hi[1]),
        ]
    }
}

pub(crate) struct NmResult {
    pub x: [f64; 2],
    pub f: f64,
    pub iterations: usize,
}

/// Minimise `f` from `start` with an initial simplex of edge `step`.
/// Stops once `f` at the best vertex is at most `f_target`, the simplex
/// values agree to `f_tol`, or after `max_iter` iterations.
pub(crate) fn minimize<F>(
    f: F,
    start: [f64; 2],
    step: [f64; 2],
    bounds: &Bounds,
    f_target: f64,
    f_tol: f64,
    max_iter: usize,
) -> NmResult
where
    F: Fn([f64; 2]) -> f64,
{
    let eval = |x: [f64; 2]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let x0 = bounds.project(start);
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    simplex.push((x0, eval(x0)));
    for d in 0..2 {
        let mut x = x0;
        x[d] += step[d];
        if x[d] > bounds.hi[d] {
            x[d] = x0[d] - step[d];
        }
        let x = bounds.project(x);
        simplex.push((x, eval(x)));
    }

    let mut it = 0;
    while it < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[2].1);
        if best <= f_target || (worst - best).abs() <= f_tol * (best.abs() + f_tol) {
            break;
        }
        it += 1;
        let c = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let w = simplex[2].0;
        let along = |t: f64| bounds.project([c[0] + t * (w[0] - c[0]), c[1] + t * (w[1] - c[1])]);

        let xr = along(-1.0);
        let fr = eval(xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(xe);
            simplex[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let x = along(-0.5);
                (x, eval(x))
            } else {
                let x = along(0.5);
                (x, eval(x))
            };
            if fc < worst.min(fr) {
                simplex[2] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let x = [0.5 * (b[0] + v.0[0]), 0.5 * (b[1] + v.0[1])];
                    *v = (x, eval(x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmResult {
        x: simplex[0].0,
        f: simplex[0].1,
        iterations: it,
    }
}
