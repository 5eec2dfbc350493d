use rand_chacha::ChaCha8Rng;

use super::activation::sigmoid;
use super::scalar::{matmul, matmul_at, matmul_bt};
use super::{glorot_uniform, Layer, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Unidirectional LSTM with gate layout `[input, forget, candidate, output]`.
///
/// `weight_ih` is `[4H, N]`, `weight_hh` is `[4H, H]`, `bias` is `[4H]`.
#[derive(Clone, Debug)]
pub struct Lstm<T> {
    pub weight_ih: Param<T>,
    pub weight_hh: Param<T>,
    pub bias: Param<T>,
    inputs: usize,
    hidden: usize,
    cache: Vec<LstmCache<T>>,
}

#[derive(Clone, Debug)]
struct LstmCache<T> {
    x: Tensor<T>,
    /// Post-activation gates `[T, 4H]`.
    gates: Tensor<T>,
    cell: Tensor<T>,
    hidden: Tensor<T>,
}

impl<T: Scalar> Lstm<T> {
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.data_mut()[hidden..2 * hidden].iter_mut().for_each(|b| *b = T::one());
        Lstm {
            weight_ih: Param::new(
                format!("{name}.weight_ih"),
                glorot_uniform(&[4 * hidden, inputs], inputs, 4 * hidden, rng),
                true,
            ),
            weight_hh: Param::new(
                format!("{name}.weight_hh"),
                glorot_uniform(&[4 * hidden, hidden], hidden, 4 * hidden, rng),
                true,
            ),
            bias: Param::new(format!("{name}.bias"), bias, false),
            inputs,
            hidden,
            cache: Vec::new(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn run(&self, x: &Tensor<T>) -> Result<LstmCache<T>> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.inputs || s[0] == 0 {
            return Err(Error::Dimension(format!(
                "lstm expects [T >= 1, {}], got {:?}",
                self.inputs, s
            )));
        }
        let steps = s[0];
        let h = self.hidden;
        let mut gates = Tensor::zeros(&[steps, 4 * h]);
        for t in 0..steps {
            gates.row_mut(t).copy_from_slice(self.bias.value.data());
        }
        matmul_bt(steps, self.inputs, 4 * h, x.data(), self.weight_ih.value.data(), T::one(), gates.data_mut());
        let mut cell = Tensor::zeros(&[steps, h]);
        let mut hidden = Tensor::zeros(&[steps, h]);
        let whh = self.weight_hh.value.data();
        let mut h_prev = vec![T::zero(); h];
        let mut c_prev = vec![T::zero(); h];
        for t in 0..steps {
            let z = gates.row_mut(t);
            if t > 0 {
                for (j, zj) in z.iter_mut().enumerate() {
                    let w = &whh[j * h..(j + 1) * h];
                    *zj += w.iter().zip(&h_prev).map(|(&a, &b)| a * b).sum::<T>();
                }
            }
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                z[j] = i;
                z[h + j] = f;
                z[2 * h + j] = g;
                z[3 * h + j] = o;
                let c = f * c_prev[j] + i * g;
                c_prev[j] = c;
                h_prev[j] = o * c.tanh();
            }
            cell.row_mut(t).copy_from_slice(&c_prev);
            hidden.row_mut(t).copy_from_slice(&h_prev);
        }
        Ok(LstmCache {
            x: x.clone(),
            gates,
            cell,
            hidden,
        })
    }

    /// Hidden state at every step, `[T, H]`, without caching.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.run(x)?.hidden)
    }

    /// Runs one sequence and caches it; caches are consumed by `backward` in
    /// reverse call order.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.run(x)?;
        let out = cache.hidden.clone();
        self.cache.push(cache);
        Ok(out)
    }

    /// Backpropagates `dh` (`[T, H]`, one row per returned hidden state).
    pub fn backward(&mut self, dh: &Tensor<T>) -> Result<Tensor<T>> {
        let c = self
            .cache
            .pop()
            .ok_or_else(|| Error::State("lstm backward called before forward".into()))?;
        let steps = c.x.dim(0);
        let h = self.hidden;
        if dh.shape() != [steps, h] {
            return Err(Error::Dimension(format!(
                "lstm upstream gradient {:?}, expected [{steps}, {h}]",
                dh.shape()
            )));
        }
        let whh = self.weight_hh.value.data();
        let mut dz = Tensor::zeros(&[steps, 4 * h]);
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        for t in (0..steps).rev() {
            let g = c.gates.row(t);
            let cell = c.cell.row(t);
            let dzt = dz.row_mut(t);
            for j in 0..h {
                let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let c_prev = if t > 0 { c.cell.row(t - 1)[j] } else { T::zero() };
                let tc = cell[j].tanh();
                let dhj = dh.row(t)[j] + dh_next[j];
                let d_o = dhj * tc;
                let dc = dhj * o * (T::one() - tc * tc) + dc_next[j];
                let di = dc * cand;
                let dg = dc * i;
                let df = dc * c_prev;
                dc_next[j] = dc * f;
                dzt[j] = di * i * (T::one() - i);
                dzt[h + j] = df * f * (T::one() - f);
                dzt[2 * h + j] = dg * (T::one() - cand * cand);
                dzt[3 * h + j] = d_o * o * (T::one() - o);
            }
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            if t > 0 {
                for (row, &d) in dzt.iter().enumerate() {
                    if d != T::zero() {
                        let w = &whh[row * h..(row + 1) * h];
                        for (acc, &wv) in dh_next.iter_mut().zip(w) {
                            *acc += d * wv;
                        }
                    }
                }
            }
        }
        // Recurrent weights see h_{t-1} for t >= 1.
        if steps > 1 {
            matmul_at(
                4 * h,
                steps - 1,
                h,
                &dz.data()[4 * h..],
                &c.hidden.data()[..(steps - 1) * h],
                T::one(),
                self.weight_hh.grad.data_mut(),
            );
        }
        matmul_at(4 * h, steps, self.inputs, dz.data(), c.x.data(), T::one(), self.weight_ih.grad.data_mut());
        for t in 0..steps {
            for (b, &g) in self.bias.grad.data_mut().iter_mut().zip(dz.row(t)) {
                *b += g;
            }
        }
        let mut dx = Tensor::zeros(&[steps, self.inputs]);
        matmul(steps, 4 * h, self.inputs, dz.data(), self.weight_ih.value.data(), T::zero(), dx.data_mut());
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

impl<T: Scalar> Layer<T> for Lstm<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight_ih, &self.weight_hh, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight_ih, &mut self.weight_hh, &mut self.bias]
    }
}

fn reverse_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let n = x.dim(0);
    let parts: Vec<_> = (0..n).rev().map(|t| x.slice_rows(t, t + 1)).collect();
    Tensor::concat_rows(&parts).expect("rows share a shape")
}

/// Bidirectional LSTM: `[forward_t, backward_t]` concatenated per step.
#[derive(Clone, Debug)]
pub struct BiLstm<T> {
    pub forward: Lstm<T>,
    pub backward: Lstm<T>,
}

impl<T: Scalar> BiLstm<T> {
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        BiLstm {
            forward: Lstm::new(&format!("{name}.fwd"), inputs, hidden, rng),
            backward: Lstm::new(&format!("{name}.bwd"), inputs, hidden, rng),
        }
    }

    pub fn output_width(&self) -> usize {
        2 * self.forward.hidden()
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let f = self.forward.infer(x)?;
        let b = reverse_rows(&self.backward.infer(&reverse_rows(x))?);
        Tensor::concat_cols(&[&f, &b])
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let f = self.forward.forward(x)?;
        let b = reverse_rows(&self.backward.forward(&reverse_rows(x))?);
        Tensor::concat_cols(&[&f, &b])
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let h = self.forward.hidden();
        let parts = dy.split_cols(&[h, h])?;
        let mut dx = self.forward.backward(&parts[0])?;
        let dxb = reverse_rows(&self.backward.backward(&reverse_rows(&parts[1]))?);
        dx.add_assign(&dxb);
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.forward.clear_cache();
        self.backward.clear_cache();
    }
}

impl<T: Scalar> Layer<T> for BiLstm<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.forward.params();
        p.extend(self.backward.params());
        p
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.forward.params_mut();
        p.extend(self.backward.params_mut());
        p
    }
}

/// Runs an LSTM over `[T, N]`; returns `[T, H]` or, without `return_all`, the
/// final hidden state `[H]`.
pub fn lstm_seq<T: Scalar>(inputs: &Tensor<T>, layer: &Lstm<T>, return_all: bool) -> Result<Tensor<T>> {
    let all = layer.infer(inputs)?;
    if return_all {
        Ok(all)
    } else {
        let last = all.dim(0) - 1;
        let h = all.dim(1);
        all.slice_rows(last, last + 1).reshape(&[h])
    }
}

pub fn bilstm_seq<T: Scalar>(inputs: &Tensor<T>, layer: &BiLstm<T>) -> Result<Tensor<T>> {
    layer.infer(inputs)
}
