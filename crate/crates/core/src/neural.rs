//! Fully connected network mapping a boundary coordinate to `(Re p, Im p)`.
//!
//! Spatial derivatives are carried forward as tangents alongside the values.
//! Parameter gradients are obtained by reverse accumulation through both the
//! values and the tangents, which covers losses that consume `∂p/∂x`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{BinnError, Result};
use crate::scalar::{Point2, Real};

/// Points per parallel work unit; fixed so that gradient sums do not depend
/// on the thread count.
const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Arctan,
    Sigmoid,
    Swish,
    Softplus,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Arctan,
        Activation::Sigmoid,
        Activation::Swish,
        Activation::Softplus,
        Activation::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Arctan => "arctan",
            Activation::Sigmoid => "sigmoid",
            Activation::Swish => "swish",
            Activation::Softplus => "softplus",
            Activation::Tanh => "tanh",
        }
    }

    #[inline]
    pub fn value<T: Real>(self, z: T) -> T {
        self.eval(z).0
    }

    /// `(σ(z), σ'(z), σ''(z))`.
    #[inline]
    pub fn eval<T: Real>(self, z: T) -> (T, T, T) {
        let one = T::one();
        let two = T::cst(2.0);
        match self {
            Activation::Arctan => {
                let d = one / (one + z * z);
                (z.atan(), d, -two * z * d * d)
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                let ds = s * (one - s);
                (s, ds, ds * (one - two * s))
            }
            Activation::Swish => {
                let s = sigmoid(z);
                let ds = s * (one - s);
                (z * s, s + z * ds, ds * (two + z * (one - two * s)))
            }
            Activation::Softplus => {
                let s = sigmoid(z);
                let v = z.max(T::zero()) + (-z.abs()).exp().ln_1p();
                (v, s, s * (one - s))
            }
            Activation::Tanh => {
                let t = z.tanh();
                let d = one - t * t;
                (t, d, -two * t * d)
            }
        }
    }
}

#[inline]
fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = BinnError;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| BinnError::Config(format!("unknown activation '{s}'")))
    }
}

/// Affine map `x' = (x - offset) * scale` applied before the first layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputScaling<T> {
    pub offset: Point2<T>,
    pub scale: Point2<T>,
}

/// Network values and spatial gradients at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointOutput<T> {
    /// `(Re p, Im p)`.
    pub value: [T; 2],
    /// `grad[o][d] = ∂value[o]/∂x_d`.
    pub grad: [[T; 2]; 2],
}

/// Sensitivities of a loss with respect to one [`PointOutput`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointAdjoint<T> {
    pub value: [T; 2],
    pub grad: [[T; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<usize>,
    activation: Activation,
    seed: u64,
    input_scaling: Option<InputScaling<T>>,
    params: Vec<T>,
}

/// Offsets of one layer's weights and biases in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct LayerSlice {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
}

fn parameter_count(layers: &[usize]) -> usize {
    layers.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Network with Glorot-uniform weights and zero biases. `hidden` lists the
/// hidden-layer widths; input and output widths are fixed at 2.
pub fn init_model<T: Real>(
    hidden: &[usize],
    activation: Activation,
    seed: u64,
) -> Result<MlpModel<T>> {
    let layers = layers_from_hidden(hidden)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(parameter_count(&layers));
    for w in layers.windows(2) {
        let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        for _ in 0..w[0] * w[1] {
            params.push(T::cst(dist.sample(&mut rng)));
        }
        params.extend(std::iter::repeat_n(T::zero(), w[1]));
    }
    Ok(MlpModel {
        layers,
        activation,
        seed,
        input_scaling: None,
        params,
    })
}

fn layers_from_hidden(hidden: &[usize]) -> Result<Vec<usize>> {
    if hidden.is_empty() {
        return Err(BinnError::Config(
            "network needs at least one hidden layer".into(),
        ));
    }
    if hidden.contains(&0) {
        return Err(BinnError::Config(
            "hidden layer widths must be positive".into(),
        ));
    }
    let mut layers = vec![2];
    layers.extend_from_slice(hidden);
    layers.push(2);
    Ok(layers)
}

impl<T: Real> MlpModel<T> {
    /// Builds a model from explicit parameters.
    pub fn from_parameters(
        hidden: &[usize],
        activation: Activation,
        params: Vec<T>,
    ) -> Result<Self> {
        let layers = layers_from_hidden(hidden)?;
        let expected = parameter_count(&layers);
        if params.len() != expected {
            return Err(BinnError::Dimension {
                expected,
                got: params.len(),
            });
        }
        Ok(Self {
            layers,
            activation,
            seed: 0,
            input_scaling: None,
            params,
        })
    }

    /// Full layer sizes including the two inputs and two outputs.
    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn hidden(&self) -> &[usize] {
        &self.layers[1..self.layers.len() - 1]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_scaling(&self) -> Option<InputScaling<T>> {
        self.input_scaling
    }

    pub fn set_input_scaling(&mut self, scaling: Option<InputScaling<T>>) {
        self.input_scaling = scaling;
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(BinnError::Dimension {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn slices(&self) -> Vec<LayerSlice> {
        let mut off = 0;
        self.layers
            .windows(2)
            .map(|w| {
                let s = LayerSlice {
                    n_in: w[0],
                    n_out: w[1],
                    w: off,
                    b: off + w[0] * w[1],
                };
                off += w[0] * w[1] + w[1];
                s
            })
            .collect()
    }

    /// Scaled input and its two tangent directions.
    fn input(&self, x: Point2<T>) -> ([T; 2], [[T; 2]; 2]) {
        match self.input_scaling {
            None => ([x.x, x.y], [[T::one(), T::zero()], [T::zero(), T::one()]]),
            Some(s) => (
                [
                    (x.x - s.offset.x) * s.scale.x,
                    (x.y - s.offset.y) * s.scale.y,
                ],
                [[s.scale.x, T::zero()], [T::zero(), s.scale.y]],
            ),
        }
    }

    /// `(Re p, Im p)` at `x`.
    pub fn forward(&self, x: Point2<T>) -> (T, T) {
        let slices = self.slices();
        let (a0, _) = self.input(x);
        let mut a = a0.to_vec();
        let last = slices.len() - 1;
        for (l, s) in slices.iter().enumerate() {
            let mut next = Vec::with_capacity(s.n_out);
            for i in 0..s.n_out {
                let row = &self.params[s.w + i * s.n_in..s.w + (i + 1) * s.n_in];
                let z = row
                    .iter()
                    .zip(&a)
                    .fold(self.params[s.b + i], |acc, (&w, &v)| acc + w * v);
                next.push(if l == last {
                    z
                } else {
                    self.activation.value(z)
                });
            }
            a = next;
        }
        (a[0], a[1])
    }

    /// `((∂Re/∂x1, ∂Re/∂x2), (∂Im/∂x1, ∂Im/∂x2))`.
    pub fn input_gradient(&self, x: Point2<T>) -> [[T; 2]; 2] {
        self.evaluate(x).grad
    }

    /// Values and spatial gradients in one pass.
    pub fn evaluate(&self, x: Point2<T>) -> PointOutput<T> {
        let trace = self.trace(x);
        trace.output
    }

    pub fn evaluate_batch(&self, points: &[Point2<T>]) -> Vec<PointOutput<T>> {
        points.par_iter().map(|&x| self.evaluate(x)).collect()
    }

    fn trace(&self, x: Point2<T>) -> Trace<T> {
        let slices = self.slices();
        let (a0, da0) = self.input(x);
        let mut layers = Vec::with_capacity(slices.len());
        let mut a = a0.to_vec();
        let mut da = [vec![da0[0][0], da0[1][0]], vec![da0[0][1], da0[1][1]]];
        let last = slices.len() - 1;
        for (l, s) in slices.iter().enumerate() {
            let mut z = vec![T::zero(); s.n_out];
            let mut dz = [vec![T::zero(); s.n_out], vec![T::zero(); s.n_out]];
            for i in 0..s.n_out {
                let row = &self.params[s.w + i * s.n_in..s.w + (i + 1) * s.n_in];
                let mut acc = self.params[s.b + i];
                let mut acc0 = T::zero();
                let mut acc1 = T::zero();
                for (k, &w) in row.iter().enumerate() {
                    acc += w * a[k];
                    acc0 += w * da[0][k];
                    acc1 += w * da[1][k];
                }
                z[i] = acc;
                dz[0][i] = acc0;
                dz[1][i] = acc1;
            }
            let input = std::mem::take(&mut a);
            let dinput = std::mem::take(&mut da);
            if l == last {
                layers.push(LayerTrace {
                    input,
                    dinput,
                    d1: Vec::new(),
                    d2: Vec::new(),
                    dz: [Vec::new(), Vec::new()],
                });
                a = z;
                da = dz;
            } else {
                let mut d1 = vec![T::zero(); s.n_out];
                let mut d2 = vec![T::zero(); s.n_out];
                let mut out = vec![T::zero(); s.n_out];
                let mut dout = [vec![T::zero(); s.n_out], vec![T::zero(); s.n_out]];
                for i in 0..s.n_out {
                    let (v, s1, s2) = self.activation.eval(z[i]);
                    out[i] = v;
                    d1[i] = s1;
                    d2[i] = s2;
                    dout[0][i] = s1 * dz[0][i];
                    dout[1][i] = s1 * dz[1][i];
                }
                layers.push(LayerTrace {
                    input,
                    dinput,
                    d1,
                    d2,
                    dz,
                });
                a = out;
                da = dout;
            }
        }
        Trace {
            layers,
            output: PointOutput {
                value: [a[0], a[1]],
                grad: [[da[0][0], da[1][0]], [da[0][1], da[1][1]]],
            },
        }
    }

    /// Accumulates `d(loss)/dθ` for one point into `grad`.
    fn backward(&self, trace: &Trace<T>, adj: &PointAdjoint<T>, grad: &mut [T]) {
        let slices = self.slices();
        // Adjoints of the current layer's output values and tangents.
        let mut abar = adj.value.to_vec();
        let mut dbar = [
            vec![adj.grad[0][0], adj.grad[1][0]],
            vec![adj.grad[0][1], adj.grad[1][1]],
        ];
        let last = slices.len() - 1;
        for l in (0..slices.len()).rev() {
            let s = slices[l];
            let t = &trace.layers[l];
            // Adjoints with respect to the pre-activation z and its tangents.
            let (zbar, dzbar) = if l == last {
                (abar, dbar)
            } else {
                let mut zbar = vec![T::zero(); s.n_out];
                let mut dzbar = [vec![T::zero(); s.n_out], vec![T::zero(); s.n_out]];
                for i in 0..s.n_out {
                    zbar[i] = abar[i] * t.d1[i]
                        + t.d2[i] * (dbar[0][i] * t.dz[0][i] + dbar[1][i] * t.dz[1][i]);
                    dzbar[0][i] = dbar[0][i] * t.d1[i];
                    dzbar[1][i] = dbar[1][i] * t.d1[i];
                }
                (zbar, dzbar)
            };
            for i in 0..s.n_out {
                let wrow = s.w + i * s.n_in;
                for k in 0..s.n_in {
                    grad[wrow + k] += zbar[i] * t.input[k]
                        + dzbar[0][i] * t.dinput[0][k]
                        + dzbar[1][i] * t.dinput[1][k];
                }
                grad[s.b + i] += zbar[i];
            }
            if l == 0 {
                break;
            }
            let mut next_a = vec![T::zero(); s.n_in];
            let mut next_d = [vec![T::zero(); s.n_in], vec![T::zero(); s.n_in]];
            for i in 0..s.n_out {
                let row = &self.params[s.w + i * s.n_in..s.w + (i + 1) * s.n_in];
                for (k, &w) in row.iter().enumerate() {
                    next_a[k] += w * zbar[i];
                    next_d[0][k] += w * dzbar[0][i];
                    next_d[1][k] += w * dzbar[1][i];
                }
            }
            abar = next_a;
            dbar = next_d;
        }
    }

    /// Gradient of a loss over `points` with respect to every parameter.
    ///
    /// `loss` receives the network values and spatial gradients at all points
    /// and returns the loss with its sensitivity to each of them.
    pub fn parameter_gradient<F>(&self, points: &[Point2<T>], loss: F) -> Result<(T, Vec<T>)>
    where
        F: FnOnce(&[PointOutput<T>]) -> (T, Vec<PointAdjoint<T>>),
    {
        let traces: Vec<Trace<T>> = points.par_iter().map(|&x| self.trace(x)).collect();
        let outputs: Vec<PointOutput<T>> = traces.iter().map(|t| t.output).collect();
        if let Some(i) = outputs.iter().position(|o| !output_finite(o)) {
            return Err(BinnError::NonFinite { index: i });
        }
        let (value, adjoints) = loss(&outputs);
        if adjoints.len() != points.len() {
            return Err(BinnError::Dimension {
                expected: points.len(),
                got: adjoints.len(),
            });
        }
        if let Some(i) = adjoints.iter().position(|a| !adjoint_finite(a)) {
            return Err(BinnError::NonFinite { index: i });
        }
        if !value.is_finite() {
            return Err(BinnError::NonFinite { index: 0 });
        }
        let np = self.params.len();
        let partials: Vec<Vec<T>> = traces
            .par_chunks(CHUNK)
            .zip(adjoints.par_chunks(CHUNK))
            .map(|(ts, adj)| {
                let mut g = vec![T::zero(); np];
                for (t, a) in ts.iter().zip(adj) {
                    self.backward(t, a, &mut g);
                }
                g
            })
            .collect();
        let mut grad = vec![T::zero(); np];
        for part in partials {
            for (g, p) in grad.iter_mut().zip(part) {
                *g += p;
            }
        }
        Ok((value, grad))
    }

    /// Self-describing text form; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::from("binn-mlp 1\n");
        let layers: Vec<String> = self.layers.iter().map(|n| n.to_string()).collect();
        s += &format!("layers {}\n", layers.join(" "));
        s += &format!("activation {}\n", self.activation);
        s += &format!("seed {}\n", self.seed);
        match self.input_scaling {
            None => s += "input_scaling none\n",
            Some(sc) => {
                s += &format!(
                    "input_scaling {} {} {} {}\n",
                    sc.offset.x, sc.offset.y, sc.scale.x, sc.scale.y
                )
            }
        }
        s += &format!("params {}\n", self.params.len());
        for p in &self.params {
            s += &format!("{p}\n");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (no, line) = lines.next().ok_or(BinnError::Parse {
                line: 0,
                reason: format!("missing '{key}'"),
            })?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(BinnError::Parse {
                    line: no,
                    reason: format!("expected '{key}'"),
                });
            }
            Ok((no, parts.collect()))
        };
        let perr = |line: usize, reason: &str| BinnError::Parse {
            line,
            reason: reason.to_string(),
        };
        let (no, v) = next("binn-mlp")?;
        if v != ["1"] {
            return Err(perr(no, "unsupported format version"));
        }
        let (no, v) = next("layers")?;
        let layers: Vec<usize> = v
            .iter()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(no, "bad layer size"))?;
        if layers.len() < 3 || layers[0] != 2 || *layers.last().unwrap() != 2 {
            return Err(perr(
                no,
                "layers must read 2 ... 2 with at least one hidden layer",
            ));
        }
        let (no, v) = next("activation")?;
        let activation: Activation = v
            .first()
            .ok_or_else(|| perr(no, "missing activation"))?
            .parse()
            .map_err(|_| perr(no, "unknown activation"))?;
        let (no, v) = next("seed")?;
        let seed: u64 = v
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(no, "bad seed"))?;
        let (no, v) = next("input_scaling")?;
        let input_scaling = match v.as_slice() {
            ["none"] => None,
            [a, b, c, d] => {
                let f = |t: &str| t.parse::<T>().map_err(|_| perr(no, "bad scaling value"));
                Some(InputScaling {
                    offset: Point2::new(f(a)?, f(b)?),
                    scale: Point2::new(f(c)?, f(d)?),
                })
            }
            _ => return Err(perr(no, "input_scaling takes 'none' or four numbers")),
        };
        let (no, v) = next("params")?;
        let count: usize = v
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(no, "bad parameter count"))?;
        let mut model = Self::from_parameters(
            &layers[1..layers.len() - 1],
            activation,
            vec![T::zero(); parameter_count(&layers)],
        )
        .map_err(|e| perr(no, &e.to_string()))?;
        if count != model.params.len() {
            return Err(perr(no, "parameter count does not match layers"));
        }
        for p in model.params.iter_mut() {
            let (no, line) = lines
                .next()
                .ok_or_else(|| perr(0, "truncated parameter list"))?;
            *p = line.parse().map_err(|_| perr(no, "bad parameter value"))?;
            if !p.is_finite() {
                return Err(perr(no, "non-finite parameter"));
            }
        }
        if let Some((no, _)) = lines.next() {
            return Err(perr(no, "trailing content"));
        }
        model.seed = seed;
        model.input_scaling = input_scaling;
        Ok(model)
    }
}

fn output_finite<T: Real>(o: &PointOutput<T>) -> bool {
    o.value
        .iter()
        .chain(o.grad.iter().flatten())
        .all(|v| v.is_finite())
}

fn adjoint_finite<T: Real>(a: &PointAdjoint<T>) -> bool {
    a.value
        .iter()
        .chain(a.grad.iter().flatten())
        .all(|v| v.is_finite())
}

struct LayerTrace<T> {
    input: Vec<T>,
    /// Tangents of `input` along `x1` and `x2`.
    dinput: [Vec<T>; 2],
    /// `σ'(z)`, `σ''(z)` and the tangents of `z`; empty for the output layer.
    d1: Vec<T>,
    d2: Vec<T>,
    dz: [Vec<T>; 2],
}

struct Trace<T> {
    layers: Vec<LayerTrace<T>>,
    output: PointOutput<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_model(act: Activation) -> MlpModel<f64> {
        let mut m = init_model(&[3], act, 1).unwrap();
        m.params_mut().iter_mut().for_each(|p| *p = 0.0);
        let n = m.n_params();
        m.params_mut()[n - 2] = 0.3;
        m.params_mut()[n - 1] = -0.2;
        m
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(
            init_model::<f64>(&[10], Activation::Swish, 0)
                .unwrap()
                .n_params(),
            52
        );
        assert_eq!(
            init_model::<f64>(&[20, 20], Activation::Swish, 0)
                .unwrap()
                .n_params(),
            522
        );
        assert!(matches!(
            init_model::<f64>(&[], Activation::Swish, 0),
            Err(BinnError::Config(_))
        ));
    }

    #[test]
    fn seeded_initialization_is_reproducible() {
        let a = init_model::<f64>(&[10, 10], Activation::Tanh, 7).unwrap();
        let b = init_model::<f64>(&[10, 10], Activation::Tanh, 7).unwrap();
        let c = init_model::<f64>(&[10, 10], Activation::Tanh, 8).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
        // Biases start at zero.
        assert!(a.params()[20..30].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn activation_values_at_zero() {
        assert_eq!(Activation::Arctan.value(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.value(0.0), 0.5);
        assert_eq!(Activation::Swish.value(0.0), 0.0);
        assert!((Activation::Softplus.value(0.0_f64) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(Activation::Tanh.value(0.0), 0.0);
        assert!((Activation::Swish.value(1.0_f64) - 0.731058578630005).abs() < 1e-15);
    }

    #[test]
    fn activation_derivatives_match_differences() {
        let h = 1e-5;
        for act in Activation::ALL {
            for z in [-3.0_f64, -0.4, 0.0, 0.9, 4.0] {
                let (_, d1, d2) = act.eval(z);
                let fd1 = (act.value(z + h) - act.value(z - h)) / (2.0 * h);
                let fd2 = (act.eval(z + h).1 - act.eval(z - h).1) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-9, "{act} σ' at {z}");
                assert!((d2 - fd2).abs() < 1e-9, "{act} σ'' at {z}");
            }
        }
        assert!(Activation::Softplus.value(800.0_f64).is_finite());
        assert!(Activation::Sigmoid.value(-800.0) >= 0.0);
    }

    #[test]
    fn zero_weights_collapse_to_head_bias() {
        for act in [Activation::Arctan, Activation::Swish, Activation::Tanh] {
            let m = zero_model(act);
            assert_eq!(m.forward(Point2::new(0.7, -1.3)), (0.3, -0.2));
            assert_eq!(m.input_gradient(Point2::new(0.7, -1.3)), [[0.0; 2]; 2]);
        }
    }

    #[test]
    fn single_unit_gradient_ratio() {
        // One tanh unit with weights (a, b), head picks it up on both outputs.
        let (a, b) = (0.7_f64, -1.9);
        let params = vec![a, b, 0.1, 1.0, 1.0, 0.0, 0.0];
        let m = MlpModel::from_parameters(&[1], Activation::Tanh, params).unwrap();
        let g = m.input_gradient(Point2::new(0.2, 0.4));
        assert!((g[0][0] / g[0][1] - a / b).abs() < 1e-14);
    }

    #[test]
    fn stationary_structure_with_zero_weights() {
        let m = zero_model(Activation::Tanh);
        let pts = [Point2::new(0.1, 0.2), Point2::new(-1.0, 0.5)];
        let (_, g) = m
            .parameter_gradient(&pts, |outs| {
                let loss = outs
                    .iter()
                    .map(|o| o.value[0] * o.value[0] + o.value[1] * o.value[1])
                    .sum();
                let adj = outs
                    .iter()
                    .map(|o| PointAdjoint {
                        value: [2.0 * o.value[0], 2.0 * o.value[1]],
                        grad: [[0.0; 2]; 2],
                    })
                    .collect();
                (loss, adj)
            })
            .unwrap();
        let n = g.len();
        assert!(g[..n - 2].iter().all(|&v| v == 0.0));
        assert_eq!(g[n - 2], 4.0 * 0.3);
        assert_eq!(g[n - 1], 4.0 * -0.2);
        // A loss that ignores the network has zero gradient.
        let (_, g) = m
            .parameter_gradient(&pts, |outs| {
                (1.0, vec![PointAdjoint::default(); outs.len()])
            })
            .unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_loss_names_point() {
        let m = init_model::<f64>(&[4], Activation::Swish, 3).unwrap();
        let pts = [
            Point2::new(0.1, 0.2),
            Point2::new(0.3, 0.4),
            Point2::new(0.5, 0.6),
        ];
        let err = m
            .parameter_gradient(&pts, |outs| {
                let mut adj = vec![PointAdjoint::default(); outs.len()];
                adj[2].value[0] = f64::NAN;
                (f64::NAN, adj)
            })
            .unwrap_err();
        assert_eq!(err, BinnError::NonFinite { index: 2 });
    }

    #[test]
    fn text_round_trip() {
        let mut m = init_model::<f64>(&[5, 3], Activation::Softplus, 99).unwrap();
        m.set_input_scaling(Some(InputScaling {
            offset: Point2::new(1.5, 0.75),
            scale: Point2::new(2.0 / 3.0, 4.0 / 3.0),
        }));
        let back = MlpModel::<f64>::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let bad = m.to_text().replace("softplus", "relu");
        assert!(matches!(
            MlpModel::<f64>::from_text(&bad),
            Err(BinnError::Parse { line: 3, .. })
        ));
        let truncated: String = m.to_text().lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            MlpModel::<f64>::from_text(&truncated),
            Err(BinnError::Parse { .. })
        ));
    }

    #[test]
    fn single_precision_forward() {
        let m = init_model::<f32>(&[6], Activation::Swish, 5).unwrap();
        let m64 = init_model::<f64>(&[6], Activation::Swish, 5).unwrap();
        let (a, b) = m.forward(Point2::new(0.3, -0.2));
        let (c, d) = m64.forward(Point2::new(0.3, -0.2));
        assert!((a as f64 - c).abs() < 1e-5 && (b as f64 - d).abs() < 1e-5);
    }
}
