//! Central finite-difference checks for every differentiable tape operation.

use super::graph::{Graph, Var};
use super::Tensor;
use crate::error::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
const RELATIVE_FLOOR: f64 = 1e-4;

type Builder = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var>>;

/// A named scalar-valued function of some inputs, built on a tape.
pub struct GradCheck {
    pub name: &'static str,
    pub input_shapes: Vec<Vec<usize>>,
    build: Builder,
}

impl GradCheck {
    pub fn new(
        name: &'static str,
        input_shapes: Vec<Vec<usize>>,
        build: impl Fn(&mut Graph, &[Var]) -> Result<Var> + 'static,
    ) -> Self {
        GradCheck {
            name,
            input_shapes,
            build: Box::new(build),
        }
    }

    /// Evaluates the check on `inputs`, reducing a non-scalar output with
    /// fixed `weights` so every output element matters.
    fn eval(&self, g: &mut Graph, inputs: &[Var], weights: &Tensor) -> Result<Var> {
        let out = (self.build)(g, inputs)?;
        if g.value(out).numel() == 1 {
            return Ok(out);
        }
        let w = g.constant(Tensor::new(
            g.value(out).shape().to_vec(),
            weights.data()[..g.value(out).numel()].to_vec(),
        )?);
        let p = g.mul(out, w)?;
        Ok(g.sum(p))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckRow {
    pub op: &'static str,
    pub trials: usize,
    pub max_relative_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub rows: Vec<GradCheckRow>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&format!(
                "{:<24} trials={:<3} max_rel_err={:.3e}  {}\n",
                r.op,
                r.trials,
                r.max_relative_error,
                if r.passed { "ok" } else { "FAIL" }
            ));
        }
        s
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Central differences of `f` around `x`, one coordinate at a time.
pub fn finite_difference_gradient(
    x: &[f64],
    step: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn random_input<R: Rng>(shape: &[usize], rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            // keep clear of the relu kink so the stencil never straddles it
            let v: f64 = rng.random_range(-2.0..2.0);
            if v.abs() > 1e-3 {
                break v;
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape from product")
}

fn run_one(check: &GradCheck, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let inputs: Vec<Tensor> = check
            .input_shapes
            .iter()
            .map(|s| random_input(s, &mut rng))
            .collect();
        let weights = Tensor::vector((0..256).map(|_| rng.random_range(-1.0..1.0)).collect());

        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
        let loss = check.eval(&mut g, &vars, &weights)?;
        g.backward(loss)?;

        for (k, t) in inputs.iter().enumerate() {
            let analytic = g
                .grad(vars[k])
                .map(|s| s.to_vec())
                .unwrap_or_else(|| vec![0.0; t.numel()]);
            let numeric = finite_difference_gradient(t.data(), GRADCHECK_STEP, |probe| {
                let mut g2 = Graph::new();
                let vs: Vec<Var> = inputs
                    .iter()
                    .enumerate()
                    .map(|(j, u)| {
                        if j == k {
                            g2.constant(Tensor::new(u.shape().to_vec(), probe.to_vec()).unwrap())
                        } else {
                            g2.constant(u.clone())
                        }
                    })
                    .collect();
                let out = check.eval(&mut g2, &vs, &weights).expect("forward");
                g2.value(out).item()
            });
            for (a, n) in analytic.iter().zip(&numeric) {
                worst = worst.max(relative_error(*a, *n));
            }
        }
    }
    Ok(worst)
}

/// Runs every check for `trials` random draws in `[-2, 2]`.
pub fn run_gradcheck(checks: &[GradCheck], trials: usize, seed: u64) -> GradCheckReport {
    let rows = checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let err = run_one(c, trials, seed.wrapping_add(i as u64)).unwrap_or(f64::INFINITY);
            GradCheckRow {
                op: c.name,
                trials,
                max_relative_error: err,
                passed: err < GRADCHECK_TOLERANCE,
            }
        })
        .collect();
    GradCheckReport { rows }
}

/// Checks for the tensor-level operations.
pub fn default_checks() -> Vec<GradCheck> {
    vec![
        GradCheck::new("matmul", vec![vec![3, 4], vec![4, 2]], |g, v| {
            g.matmul(v[0], v[1])
        }),
        GradCheck::new("matmul_vector", vec![vec![4], vec![4, 3]], |g, v| {
            g.matmul(v[0], v[1])
        }),
        GradCheck::new("add", vec![vec![5], vec![5]], |g, v| g.add(v[0], v[1])),
        GradCheck::new("add_scalar", vec![vec![5], vec![]], |g, v| g.add(v[0], v[1])),
        GradCheck::new("sub", vec![vec![2, 3], vec![2, 3]], |g, v| g.sub(v[0], v[1])),
        GradCheck::new("mul", vec![vec![5], vec![5]], |g, v| g.mul(v[0], v[1])),
        GradCheck::new("mul_scalar", vec![vec![], vec![4]], |g, v| g.mul(v[0], v[1])),
        GradCheck::new("scale", vec![vec![4]], |g, v| Ok(g.scale(v[0], -1.7))),
        GradCheck::new("tanh", vec![vec![6]], |g, v| Ok(g.tanh(v[0]))),
        GradCheck::new("relu", vec![vec![6]], |g, v| Ok(g.relu(v[0]))),
        GradCheck::new("sigmoid", vec![vec![6]], |g, v| Ok(g.sigmoid(v[0]))),
        GradCheck::new("exp", vec![vec![4]], |g, v| Ok(g.exp(v[0]))),
        GradCheck::new("softmax", vec![vec![5]], |g, v| g.softmax(v[0], 1.0)),
        GradCheck::new("softmax_temperature", vec![vec![5]], |g, v| {
            g.softmax(v[0], 0.7)
        }),
        GradCheck::new("log_softmax", vec![vec![5]], |g, v| g.log_softmax(v[0])),
        GradCheck::new("sum", vec![vec![3, 2]], |g, v| {
            let t = g.tanh(v[0]);
            Ok(g.sum(t))
        }),
        GradCheck::new("mean", vec![vec![7]], |g, v| {
            let t = g.tanh(v[0]);
            Ok(g.mean(t))
        }),
        GradCheck::new("concat", vec![vec![2], vec![3]], |g, v| g.concat(&[v[0], v[1]])),
        GradCheck::new("stack", vec![vec![3], vec![3]], |g, v| g.stack(&[v[0], v[1]])),
        GradCheck::new("slice", vec![vec![6]], |g, v| g.slice(v[0], 2, 3)),
        GradCheck::new("pick", vec![vec![4]], |g, v| {
            let t = g.tanh(v[0]);
            g.pick(t, 2)
        }),
        GradCheck::new("dot", vec![vec![4], vec![4]], |g, v| g.dot(v[0], v[1])),
        GradCheck::new("gaussian_noise", vec![vec![5]], |g, v| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let n = g.gaussian_noise(v[0], 0.5, &mut rng);
            Ok(g.tanh(n))
        }),
        GradCheck::new("categorical_log_prob", vec![vec![4]], |g, v| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            Ok(g.categorical_sample(v[0], &mut rng)?.log_prob)
        }),
    ]
}

/// A deliberately wrong backward rule, for exercising the harness.
pub fn corrupted_square_check() -> GradCheck {
    GradCheck::new("corrupted_square", vec![vec![3]], |g, v| {
        let x = g.value(v[0]).clone();
        let y = Tensor::vector(x.data().iter().map(|a| a * a).collect());
        // correct rule is 2x
        Ok(g.custom(&[v[0]], y, |ins, _out, gr| {
            vec![ins[0].data().iter().zip(gr).map(|(a, b)| 3.0 * a * b).collect()]
        }))
    })
}
