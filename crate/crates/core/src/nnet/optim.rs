use serde::{Deserialize, Serialize};

use super::{Gradients, NnetError, ParamStore};

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(store: &ParamStore, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .params()
            .iter()
            .map(|p| vec![0.0; p.value.len()])
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update. A non-finite gradient aborts before any parameter moves.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<(), NnetError> {
        if grads.grads.len() != store.len() || self.m.len() != store.len() {
            return Err(NnetError::ShapeMismatch);
        }
        for (p, g) in store.params().iter().zip(&grads.grads) {
            if g.len() != p.value.len() {
                return Err(NnetError::ShapeMismatch);
            }
            if let Some(index) = g.iter().position(|x| !x.is_finite()) {
                return Err(NnetError::NonFiniteGradient {
                    param: p.name.clone(),
                    index,
                });
            }
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, p) in store.params_mut().iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads.grads[k]);
            for i in 0..p.value.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Result of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter name and entry of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Denominator floor for the relative error, so entries whose true gradient is
/// numerically zero are judged on absolute error.
const REL_FLOOR: f64 = 1e-6;

/// Compares `analytic` against central differences of `loss` with step `h`.
///
/// Relative error per entry is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn finite_diff_check<F>(loss: F, store: &ParamStore, analytic: &Gradients, h: f64) -> GradCheck
where
    F: Fn(&ParamStore) -> f64,
{
    let mut probe = store.clone();
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
    };
    for k in 0..store.len() {
        for i in 0..store.params()[k].value.len() {
            let orig = store.params()[k].value[i];
            probe.params_mut()[k].value[i] = orig + h;
            let up = loss(&probe);
            probe.params_mut()[k].value[i] = orig - h;
            let down = loss(&probe);
            probe.params_mut()[k].value[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.grads[k][i];
            report.checked += 1;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((store.params()[k].name.clone(), i));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{Init, ParamId, ParamStore, Tape, Var};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_param(value: f64) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        store.add("x", 1, 1, Init::Zeros, &mut rng);
        store.params_mut()[0].value[0] = value;
        store
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut store = one_param(1.5);
        let mut adam = AdamState::new(&store, 0.1);
        let zero = store.zero_gradients();
        for _ in 0..10 {
            adam.step(&mut store, &zero).unwrap();
        }
        assert_eq!(store.params()[0].value[0], 1.5);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut store = one_param(0.0);
        let mut adam = AdamState::new(&store, 0.01);
        let mut g = store.zero_gradients();
        g.grads[0][0] = 3.0;
        for _ in 0..100 {
            adam.step(&mut store, &g).unwrap();
        }
        assert!(store.params()[0].value[0] < -0.5);
        g.grads[0][0] = -0.2;
        let before = store.params()[0].value[0];
        for _ in 0..200 {
            adam.step(&mut store, &g).unwrap();
        }
        assert!(store.params()[0].value[0] > before);
    }

    #[test]
    fn quadratic_converges() {
        // loss = (x - 3)^2, lr 1e-2.
        let mut store = one_param(-2.0);
        let mut adam = AdamState::new(&store, 1e-2);
        let mut steps = 0;
        loop {
            let x = store.params()[0].value[0];
            if (x - 3.0).powi(2) < 1e-6 {
                break;
            }
            assert!(steps < 5000, "no convergence, x = {x}");
            let mut g = store.zero_gradients();
            g.grads[0][0] = 2.0 * (x - 3.0);
            adam.step(&mut store, &g).unwrap();
            steps += 1;
        }
    }

    #[test]
    fn nan_gradient_aborts() {
        let mut store = one_param(1.0);
        let mut adam = AdamState::new(&store, 0.1);
        let mut g = store.zero_gradients();
        g.grads[0][0] = f64::NAN;
        assert!(matches!(
            adam.step(&mut store, &g),
            Err(NnetError::NonFiniteGradient { index: 0, .. })
        ));
        assert_eq!(store.params()[0].value[0], 1.0);
        assert_eq!(adam.step, 0);
    }

    #[test]
    fn tape_gradients() {
        // d/dw (w·x) = x
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let w = store.add("w", 1, 3, Init::Glorot, &mut rng);
        let mut tape = Tape::new(&store);
        let x = tape.constant(vec![0.5, -1.0, 2.0]);
        let y = tape.matvec(w, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(w), &[0.5, -1.0, 2.0]);

        // constant root: zero gradient everywhere
        let mut tape = Tape::new(&store);
        let c = tape.constant(vec![4.0]);
        let g = tape.backward(c).unwrap();
        assert_eq!(g.max_abs(), 0.0);

        // non-scalar root
        let mut tape = Tape::new(&store);
        let v = tape.param(w);
        assert_eq!(tape.backward(v).unwrap_err(), NnetError::NonScalarRoot(3));
    }

    #[test]
    fn elementwise_ops_pass_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        let a = store.add("a", 4, 1, Init::Glorot, &mut rng);
        let s = store.add("s", 1, 1, Init::Glorot, &mut rng);
        fn build(store: &ParamStore, a: ParamId, s: ParamId) -> (Tape<'_>, Var, f64) {
            let mut tape = Tape::new(store);
            let av = tape.param(a);
            let sv = tape.param(s);
            let e = tape.exp(av);
            let sg = tape.sigmoid(av);
            let m = tape.mul(e, sv);
            let t = tape.tanh(m);
            let c = tape.cos(sv);
            let sn = tape.sin(av);
            let p = tape.add(t, c);
            let p = tape.sub(p, sn);
            let l = tape.offset(sg, 1.0);
            let l = tape.ln(l);
            let p = tape.mul(p, l);
            let q = tape.offset(sg, 0.5);
            let p = tape.div(p, q);
            let ls = tape.log_softmax(p);
            let pick = tape.pick(ls, 2);
            let sp = tape.softplus(p);
            let p = tape.add(p, sp);
            let r = tape.relu(p);
            let sum = tape.sum(r);
            let out = tape.add(pick, sum);
            let out = tape.scale(out, 0.7);
            let v = tape.scalar(out);
            (tape, out, v)
        }
        let (tape, out, _) = build(&store, a, s);
        let g = tape.backward(out).unwrap();
        let check = finite_diff_check(|st| build(st, a, s).2, &store, &g, 1e-5);
        assert!(check.max_relative_error < 1e-6, "{check:?}");
    }
}
