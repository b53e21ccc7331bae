//! Box-constrained Nelder–Mead over the unit cube.
//!
//! Every trial point is clipped into `[0, 1]^n`. Failed evaluations score
//! `+inf` and are simply never accepted.

use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Initial simplex edge length in unit-cube coordinates.
    pub step: f64,
    /// Stop once the simplex values span less than this.
    pub f_tol: f64,
    /// ... and its vertices lie within this distance of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 200,
            step: 0.25,
            f_tol: 1e-7,
            x_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best value seen after each evaluation.
    pub trace: Vec<f64>,
}

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Counter<'_, F> {
    fn record(&mut self, x: &[f64], v: f64) {
        self.evals += 1;
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = sanitize((self.f)(x));
        self.record(x, v);
        v
    }

    /// Evaluates a batch in parallel, recording in input order.
    fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        let f = self.f;
        let vals: Vec<f64> = xs.par_iter().map(|x| sanitize(f(x))).collect();
        for (x, v) in xs.iter().zip(&vals) {
            self.record(x, *v);
        }
        vals
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn clip(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// Evaluates a full factorial grid with `per_dim` levels per axis in parallel.
/// Returns the points and their values in lexicographic order.
pub fn grid_search<F>(f: &F, dim: usize, per_dim: usize) -> Vec<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let per_dim = per_dim.max(1);
    let total = per_dim.pow(dim as u32);
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for slot in x.iter_mut().rev() {
                let level = idx % per_dim;
                idx /= per_dim;
                *slot = if per_dim == 1 {
                    0.5
                } else {
                    (level as f64 + 0.5) / per_dim as f64
                };
            }
            x
        })
        .collect();
    let vals: Vec<f64> = points.par_iter().map(|x| sanitize(f(x))).collect();
    points.into_iter().zip(vals).collect()
}

/// Minimizes `f` over `[0,1]^n` starting from `start`.
pub fn minimize<F>(f: &F, start: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut c = Counter {
        f,
        evals: 0,
        best_x: start.to_vec(),
        best: f64::INFINITY,
        trace: Vec::new(),
    };
    let mut x0 = start.to_vec();
    clip(&mut x0);

    let mut restart_from = x0;
    let mut step = opts.step;
    while c.evals < opts.max_evals {
        let before = c.evals;
        run_simplex(&mut c, &restart_from, step, opts);
        if c.evals == before {
            break;
        }
        // Restart around the best point with a smaller simplex.
        restart_from = c.best_x.clone();
        step = (step * 0.5).max(1e-3);
    }
    Minimum {
        x: c.best_x,
        value: c.best,
        evaluations: c.evals,
        trace: c.trace,
    }
}

fn run_simplex<F>(c: &mut Counter<'_, F>, start: &[f64], step: f64, opts: &NelderMeadOptions)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = start.len();
    let budget = opts.max_evals;
    if c.evals + n + 1 > budget {
        return;
    }
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] + step <= 1.0 {
            v[i] + step
        } else {
            v[i] - step
        };
        clip(&mut v);
        simplex.push(v);
    }
    let mut values = c.eval_batch(&simplex);

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while c.evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread < opts.f_tol) && size < opts.x_tol {
            return;
        }
        if size < 1e-9 {
            return;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clip(&mut p);
            p
        };

        let xr = along(alpha);
        let fr = c.eval(&xr);
        if fr < values[0] {
            if c.evals >= budget {
                simplex[n] = xr;
                values[n] = fr;
                return;
            }
            let xe = along(gamma);
            let fe = c.eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if c.evals >= budget {
            return;
        }
        let (xc, fc) = if fr < values[n] {
            let p = along(rho);
            let v = c.eval(&p);
            (p, v)
        } else {
            let p = along(-rho);
            let v = c.eval(&p);
            (p, v)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        if c.evals + n > budget {
            return;
        }
        let best = simplex[0].clone();
        let shrunk: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|v| {
                let mut p: Vec<f64> = best.iter().zip(v).map(|(b, x)| b + sigma * (x - b)).collect();
                clip(&mut p);
                p
            })
            .collect();
        let vals = c.eval_batch(&shrunk);
        for (i, (p, v)) in shrunk.into_iter().zip(vals).enumerate() {
            simplex[i + 1] = p;
            values[i + 1] = v;
        }
    }
}
