use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Init, NnetError, ParamId, ParamStore, Tape, Var};

/// Gated recurrent unit:
///
/// ```text
/// z = σ(W_z x + U_z h + b_z)
/// r = σ(W_r x + U_r h + b_r)
/// n = tanh(W_n x + U_n (r ⊙ h) + b_n)
/// h' = (1 - z) ⊙ h + z ⊙ n
/// ```
///
/// starting from `h = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruEncoder {
    pub input: usize,
    pub hidden: usize,
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_n: ParamId,
    u_n: ParamId,
    b_n: ParamId,
}

impl GruEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut w = |suffix: &str, cols: usize, init: Init, rng: &mut R| {
            store.add(&format!("{name}.{suffix}"), hidden, cols, init, rng)
        };
        Self {
            input,
            hidden,
            w_z: w("w_z", input, Init::Glorot, rng),
            u_z: w("u_z", hidden, Init::Glorot, rng),
            b_z: w("b_z", 1, Init::Zeros, rng),
            w_r: w("w_r", input, Init::Glorot, rng),
            u_r: w("u_r", hidden, Init::Glorot, rng),
            b_r: w("b_r", 1, Init::Zeros, rng),
            w_n: w("w_n", input, Init::Glorot, rng),
            u_n: w("u_n", hidden, Init::Glorot, rng),
            b_n: w("b_n", 1, Init::Zeros, rng),
        }
    }

    pub fn param_ids(&self) -> [ParamId; 9] {
        [
            self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r, self.w_n, self.u_n,
            self.b_n,
        ]
    }

    fn gate(&self, tape: &mut Tape, w: ParamId, u: ParamId, b: ParamId, x: Var, h: Var) -> Result<Var, NnetError> {
        let wx = tape.matvec(w, x)?;
        let uh = tape.matvec(u, h)?;
        let bias = tape.param(b);
        let s = tape.add(wx, uh);
        let s = tape.add(s, bias);
        Ok(tape.sigmoid(s))
    }

    /// Runs the recurrence over `inputs` and returns the last hidden state.
    pub fn forward(&self, tape: &mut Tape, inputs: &[Var]) -> Result<Var, NnetError> {
        if inputs.is_empty() {
            return Err(NnetError::EmptySequence);
        }
        let mut h = tape.constant(vec![0.0; self.hidden]);
        for &x in inputs {
            let got = tape.value(x).len();
            if got != self.input {
                return Err(NnetError::WidthMismatch {
                    expected: self.input,
                    got,
                });
            }
            let z = self.gate(tape, self.w_z, self.u_z, self.b_z, x, h)?;
            let r = self.gate(tape, self.w_r, self.u_r, self.b_r, x, h)?;
            let rh = tape.mul(r, h);
            let wx = tape.matvec(self.w_n, x)?;
            let urh = tape.matvec(self.u_n, rh)?;
            let bias = tape.param(self.b_n);
            let s = tape.add(wx, urh);
            let s = tape.add(s, bias);
            let n = tape.tanh(s);
            // h' = h + z ⊙ (n - h)
            let diff = tape.sub(n, h);
            let step = tape.mul(z, diff);
            h = tape.add(h, step);
        }
        Ok(h)
    }

    /// Direct evaluation on plain rows.
    pub fn run(&self, store: &ParamStore, rows: &[Vec<f64>]) -> Result<Vec<f64>, NnetError> {
        let mut tape = Tape::new(store);
        let inputs: Vec<Var> = rows.iter().map(|r| tape.constant(r.clone())).collect();
        let h = self.forward(&mut tape, &inputs)?;
        Ok(tape.value(h).to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub input: usize,
    pub output: usize,
    weight: ParamId,
    bias: ParamId,
}

impl LinearHead {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            input,
            output,
            weight: store.add(&format!("{name}.weight"), output, input, Init::Glorot, rng),
            bias: store.add(&format!("{name}.bias"), output, 1, Init::Zeros, rng),
        }
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var, NnetError> {
        let wx = tape.matvec(self.weight, x)?;
        let b = tape.param(self.bias);
        Ok(tape.add(wx, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zeroed(store: &mut ParamStore) {
        for p in store.params_mut() {
            p.value.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    #[test]
    fn zero_weights_keep_hidden_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let gru = GruEncoder::new(&mut store, "g", 3, 8, &mut rng);
        zeroed(&mut store);
        let h = gru
            .run(&store, &[vec![1.0, -2.0, 0.5], vec![3.0, 3.0, 3.0]])
            .unwrap();
        assert_eq!(h, vec![0.0; 8]);
    }

    #[test]
    fn single_step_matches_length_one_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let gru = GruEncoder::new(&mut store, "g", 2, 4, &mut rng);
        let x = vec![0.3, -0.7];
        let h = gru.run(&store, std::slice::from_ref(&x)).unwrap();
        // Hand recurrence from h = 0: r has no effect, h' = z ⊙ n.
        let p = |name: &str| {
            store
                .params()
                .iter()
                .find(|p| p.name == name)
                .unwrap()
                .value
                .clone()
        };
        let (wz, wn) = (p("g.w_z"), p("g.w_n"));
        for i in 0..4 {
            let z = crate::nnet::sigmoid(wz[2 * i] * x[0] + wz[2 * i + 1] * x[1]);
            let n = (wn[2 * i] * x[0] + wn[2 * i + 1] * x[1]).tanh();
            assert!((h[i] - z * n).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_empty_and_mismatched_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let gru = GruEncoder::new(&mut store, "g", 2, 4, &mut rng);
        assert_eq!(gru.run(&store, &[]).unwrap_err(), NnetError::EmptySequence);
        assert_eq!(
            gru.run(&store, &[vec![1.0, 2.0, 3.0]]).unwrap_err(),
            NnetError::WidthMismatch {
                expected: 2,
                got: 3
            }
        );
    }
}
