use crate::error::{Error, Result};

/// A fixed, ordered collection of named trainable tensors.
///
/// Gradient structures are values of the same type, so two collections can
/// be walked in lock-step by name.
pub trait Parameters {
    fn tensors(&self) -> Vec<(String, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])>;

    fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Sets every scalar to zero.
    fn zero(&mut self) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// `self *= factor` on every scalar.
    fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

impl Parameters for Vec<f64> {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        vec![("w".to_string(), self.as_slice())]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        vec![("w".to_string(), self.as_mut_slice())]
    }
}

/// Plain SGD with L2 decay: `w ← w − lr·(g + l2·w)`.
pub fn sgd_step<P: Parameters>(params: &mut P, grads: &P, lr: f64, l2: f64) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::config("lr", format!("must be > 0, got {lr}")));
    }
    if !(l2 >= 0.0) {
        return Err(Error::config("l2", format!("must be >= 0, got {l2}")));
    }
    let gs = grads.tensors();
    let mut ps = params.tensors_mut();
    if gs.len() != ps.len() {
        return Err(Error::shape("gradient set", ps.len(), gs.len()));
    }
    for ((pn, p), (gn, g)) in ps.iter_mut().zip(&gs) {
        if pn != gn || p.len() != g.len() {
            return Err(Error::shape(
                format!("gradient for {pn}"),
                format!("{pn}[{}]", p.len()),
                format!("{gn}[{}]", g.len()),
            ));
        }
        for (w, d) in p.iter_mut().zip(g.iter()) {
            *w -= lr * (d + l2 * *w);
        }
    }
    Ok(())
}

/// `acc += other` for two collections of the same layout.
pub fn accumulate<P: Parameters>(acc: &mut P, other: &P) {
    let os = other.tensors();
    for ((_, a), (_, o)) in acc.tensors_mut().into_iter().zip(os) {
        for (x, y) in a.iter_mut().zip(o) {
            *x += y;
        }
    }
}
