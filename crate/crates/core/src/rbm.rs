//! Contrastive-divergence training of RBMs with Adam, binary datasets and a
//! synthetic Bernoulli-mixture generator.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::energy::{EnergyModel, RbmFreeEnergy};
use crate::error::{Error, Result};
use crate::math::{log_sum_exp, sigmoid, sqrt};
use crate::oracle::{checked_count, TARGET_LIMIT};
use crate::rng::{mix64, uniform, StreamRng};

/// Rows of `{0, 1}` visible vectors of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    dim: usize,
    data: Vec<u8>,
}

impl BinaryDataset {
    pub fn new(dim: usize, data: Vec<u8>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::invalid("dataset must be nonempty with positive dimension"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|&b| b > 1) {
            return Err(Error::invalid(alloc::format!(
                "dataset entry {pos} is {}, expected 0 or 1",
                data[pos]
            )));
        }
        Ok(BinaryDataset { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbmTrainConfig {
    pub hidden: usize,
    pub cd_k: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for RbmTrainConfig {
    fn default() -> Self {
        RbmTrainConfig {
            hidden: 8,
            cd_k: 10,
            learning_rate: 1e-3,
            iterations: 1000,
            batch_size: 128,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl RbmTrainConfig {
    pub fn validate(&self, data: &BinaryDataset) -> Result<()> {
        if self.hidden == 0 || self.cd_k == 0 || self.batch_size == 0 {
            return Err(Error::invalid("hidden, cd_k and batch_size must be positive"));
        }
        if self.batch_size > data.len() {
            return Err(Error::invalid(alloc::format!(
                "batch size {} exceeds dataset size {}",
                self.batch_size,
                data.len()
            )));
        }
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.learning_rate) || !pos(self.eps) {
            return Err(Error::invalid("learning rate and eps must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Log-likelihood ascent direction for `(W, c, b)`, averaged over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CdGradient {
    pub dw: Vec<f64>,
    pub dc: Vec<f64>,
    pub db: Vec<f64>,
    /// Mean free energy of the data minus that of the negative samples.
    pub free_energy_gap: f64,
}

fn gibbs_visible<R: Rng + ?Sized>(rbm: &RbmFreeEnergy, v: &mut [f64], h: &mut [f64], a: &mut [f64], rng: &mut R) {
    rbm.hidden_input(v, h);
    for x in h.iter_mut() {
        *x = if uniform(rng) < sigmoid(*x) { 1.0 } else { 0.0 };
    }
    rbm.visible_input(h, a);
    for (x, &z) in v.iter_mut().zip(a.iter()) {
        *x = if uniform(rng) < sigmoid(z) { 1.0 } else { 0.0 };
    }
}

fn accumulate(rbm: &RbmFreeEnergy, v: &[f64], sign: f64, ph: &mut [f64], g: &mut CdGradient) {
    let d = rbm.visible();
    rbm.hidden_input(v, ph);
    for (j, p) in ph.iter_mut().enumerate() {
        *p = sigmoid(*p);
        g.dc[j] += sign * *p;
        let row = &mut g.dw[j * d..(j + 1) * d];
        for (w, &x) in row.iter_mut().zip(v) {
            *w += sign * *p * x;
        }
    }
    for (b, &x) in g.db.iter_mut().zip(v) {
        *b += sign * x;
    }
}

/// CD-k gradient: hidden means at the data minus hidden means after `k`
/// block-Gibbs steps started at each data row. `batch` is flat with
/// stride `rbm.visible()`. `k = 0` gives an exactly zero gradient.
pub fn cd_gradient<R: Rng + ?Sized>(rbm: &RbmFreeEnergy, batch: &[u8], k: usize, rng: &mut R) -> Result<CdGradient> {
    let d = rbm.visible();
    let m = rbm.hidden();
    if batch.is_empty() || !batch.len().is_multiple_of(d) {
        return Err(Error::invalid("batch must be a nonempty multiple of the visible dimension"));
    }
    let n = batch.len() / d;
    let mut g = CdGradient {
        dw: vec![0.0; m * d],
        dc: vec![0.0; m],
        db: vec![0.0; d],
        free_energy_gap: 0.0,
    };
    let (mut ph, mut h, mut a) = (vec![0.0; m], vec![0.0; m], vec![0.0; d]);
    let mut v = vec![0.0; d];
    for row in batch.chunks_exact(d) {
        for (x, &b) in v.iter_mut().zip(row) {
            *x = f64::from(b);
        }
        accumulate(rbm, &v, 1.0, &mut ph, &mut g);
        let u_data = rbm.value_at(&v);
        for _ in 0..k {
            gibbs_visible(rbm, &mut v, &mut h, &mut a, rng);
        }
        accumulate(rbm, &v, -1.0, &mut ph, &mut g);
        g.free_energy_gap += u_data - rbm.value_at(&v);
    }
    let inv = 1.0 / n as f64;
    for x in g.dw.iter_mut().chain(g.dc.iter_mut()).chain(g.db.iter_mut()) {
        *x *= inv;
    }
    g.free_energy_gap *= inv;
    Ok(g)
}

/// Adam moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// One ascent step along `grad`.
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p += self.lr * (*m / c1) / (sqrt(*v / c2) + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: RbmFreeEnergy,
    /// Free-energy gap per iteration.
    pub loss: Vec<f64>,
}

fn train_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(mix64(seed ^ 0x5EED_0FC0_27A1_u64))
}

/// `W ~ N(0, 0.01²)`, zero biases.
pub fn init_rbm<R: Rng + ?Sized>(hidden: usize, visible: usize, rng: &mut R) -> Result<RbmFreeEnergy> {
    let normal = Normal::new(0.0, 0.01).map_err(|_| Error::invalid("bad init scale"))?;
    let w = (0..hidden * visible).map(|_| normal.sample(rng)).collect();
    RbmFreeEnergy::new(w, vec![0.0; hidden], vec![0.0; visible])
}

/// CD-k with minibatches drawn without replacement each iteration and Adam
/// updates on `(W, c, b)`. Deterministic given `config.seed`.
pub fn train_rbm(data: &BinaryDataset, config: &RbmTrainConfig) -> Result<TrainOutcome> {
    config.validate(data)?;
    let mut rng = train_rng(config.seed);
    let (m, d) = (config.hidden, data.dim());
    let mut model = init_rbm(m, d, &mut rng)?;
    let opt = |len| Adam::new(len, config.learning_rate, config.beta1, config.beta2, config.eps);
    let (mut ow, mut oc, mut ob) = (opt(m * d), opt(m), opt(d));
    let mut batch = vec![0u8; config.batch_size * d];
    let mut loss = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let picks = rand::seq::index::sample(&mut rng, data.len(), config.batch_size);
        for (slot, i) in batch.chunks_exact_mut(d).zip(picks.iter()) {
            slot.copy_from_slice(data.row(i));
        }
        let g = cd_gradient(&model, &batch, config.cd_k, &mut rng)?;
        let (w, c, b) = model.params_mut();
        ow.ascend(w, &g.dw);
        oc.ascend(c, &g.dc);
        ob.ascend(b, &g.db);
        loss.push(g.free_energy_gap);
    }
    Ok(TrainOutcome { model, loss })
}

/// `modes` random prototypes, each emitted `per_mode` times with
/// independent bit flips of probability `flip_prob`.
pub fn synth_bernoulli_mixture(dim: usize, modes: usize, per_mode: usize, flip_prob: f64, seed: u64) -> Result<BinaryDataset> {
    if modes == 0 || per_mode == 0 {
        return Err(Error::invalid("need at least one mode and one row per mode"));
    }
    if !(0.0..0.5).contains(&flip_prob) {
        return Err(Error::invalid("flip probability must lie in [0, 0.5)"));
    }
    let mut rng = train_rng(seed.wrapping_add(0xDA7A));
    let protos: Vec<u8> = (0..modes * dim).map(|_| rng.random_range(0..2u8)).collect();
    let mut data = Vec::with_capacity(modes * per_mode * dim);
    for p in protos.chunks_exact(dim.max(1)) {
        for _ in 0..per_mode {
            data.extend(p.iter().map(|&b| if uniform(&mut rng) < flip_prob { 1 - b } else { b }));
        }
    }
    BinaryDataset::new(dim, data)
}

/// Log partition function `log Σ_v exp(U(v))` by enumeration.
pub fn exact_log_partition(rbm: &RbmFreeEnergy) -> Result<f64> {
    let domain = rbm.domain();
    let n = checked_count(domain, TARGET_LIMIT)?;
    let d = domain.dim();
    let mut v = vec![0.0; d];
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        for (c, x) in v.iter_mut().enumerate() {
            *x = ((i >> (d - 1 - c)) & 1) as f64;
        }
        u.push(rbm.value_at(&v));
    }
    Ok(log_sum_exp(&u))
}

/// Mean exact log-likelihood of the rows of `data`.
pub fn exact_log_likelihood(rbm: &RbmFreeEnergy, data: &BinaryDataset) -> Result<f64> {
    if data.dim() != rbm.visible() {
        return Err(Error::DimensionMismatch {
            expected: rbm.visible(),
            got: data.dim(),
        });
    }
    let lz = exact_log_partition(rbm)?;
    let mut v = vec![0.0; data.dim()];
    let mut acc = 0.0;
    for row in data.rows() {
        for (x, &b) in v.iter_mut().zip(row) {
            *x = f64::from(b);
        }
        acc += rbm.value_at(&v) - lz;
    }
    Ok(acc / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_stream;

    #[test]
    fn zero_step_cd_cancels() {
        let mut rng = aux_stream(5);
        let rbm = init_rbm(3, 4, &mut rng).unwrap();
        let g = cd_gradient(&rbm, &[1, 0, 1, 1, 0, 0, 1, 0], 0, &mut rng).unwrap();
        assert!(g.dw.iter().chain(&g.dc).chain(&g.db).all(|&x| x == 0.0));
    }

    #[test]
    fn zero_iterations_returns_init() {
        let data = synth_bernoulli_mixture(6, 2, 10, 0.1, 1).unwrap();
        let cfg = RbmTrainConfig {
            hidden: 3,
            iterations: 0,
            batch_size: 4,
            ..Default::default()
        };
        let out = train_rbm(&data, &cfg).unwrap();
        assert!(out.model.hidden_bias().iter().chain(out.model.visible_bias()).all(|&x| x == 0.0));
        let w = out.model.weights();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(w.iter().all(|x| x.abs() < 0.06) && mean.abs() < 0.01);
        assert!(out.loss.is_empty());
    }

    #[test]
    fn noiseless_mixture_repeats_prototypes() {
        let data = synth_bernoulli_mixture(8, 3, 5, 0.0, 9).unwrap();
        assert_eq!(data.len(), 15);
        for m in 0..3 {
            for r in 1..5 {
                assert_eq!(data.row(m * 5 + r), data.row(m * 5));
            }
        }
        assert_eq!(data, synth_bernoulli_mixture(8, 3, 5, 0.0, 9).unwrap());
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut a = Adam::new(2, 0.1, 0.9, 0.999, 1e-8);
        let mut p = [0.0, 0.0];
        a.ascend(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.1).abs() < 1e-7 && (p[1] + 0.1).abs() < 1e-7);
    }

    #[test]
    fn dataset_validation() {
        assert!(BinaryDataset::new(3, vec![0, 1]).is_err());
        assert!(BinaryDataset::new(2, vec![0, 2]).is_err());
        assert!(BinaryDataset::new(2, vec![]).is_err());
    }
}
