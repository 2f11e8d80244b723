use drexel_core::oracle::enumerate_target;
use drexel_core::rbm::{cd_gradient, exact_log_likelihood, synth_bernoulli_mixture, train_rbm, Adam, BinaryDataset, RbmTrainConfig};
use drexel_core::rng::aux_stream;
use drexel_core::RbmFreeEnergy;
use rand::Rng;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Exact log-likelihood gradient by enumeration: data term minus model term
/// of `(σ(Wv + c) vᵀ, σ(Wv + c), v)`.
fn exact_gradient(rbm: &RbmFreeEnergy, data: &BinaryDataset) -> Vec<f64> {
    let (m, d) = (rbm.hidden(), rbm.visible());
    let stats = |v: &[f64]| {
        let mut out = vec![0.0; m * d + m + d];
        for j in 0..m {
            let a: f64 = rbm.hidden_bias()[j] + (0..d).map(|i| rbm.weights()[j * d + i] * v[i]).sum::<f64>();
            let p = sigmoid(a);
            for i in 0..d {
                out[j * d + i] = p * v[i];
            }
            out[m * d + j] = p;
        }
        out[m * d + m..].copy_from_slice(v);
        out
    };
    let mut g = vec![0.0; m * d + m + d];
    for row in data.rows() {
        let v: Vec<f64> = row.iter().map(|&b| b as f64).collect();
        for (a, b) in g.iter_mut().zip(stats(&v)) {
            *a += b / data.len() as f64;
        }
    }
    let pi = enumerate_target(rbm).unwrap();
    for (i, &p) in pi.probs().iter().enumerate() {
        let v: Vec<f64> = pi.domain().state_from_index(i).indices().iter().map(|&k| k as f64).collect();
        for (a, b) in g.iter_mut().zip(stats(&v)) {
            *a -= p * b;
        }
    }
    g
}

fn flat(g: &drexel_core::rbm::CdGradient) -> Vec<f64> {
    g.dw.iter().chain(&g.dc).chain(&g.db).copied().collect()
}

fn random_rbm(m: usize, d: usize, scale: f64, seed: u64) -> RbmFreeEnergy {
    let mut rng = aux_stream(seed);
    RbmFreeEnergy::new(
        (0..m * d).map(|_| rng.random_range(-scale..scale)).collect(),
        (0..m).map(|_| rng.random_range(-scale..scale)).collect(),
        (0..d).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .unwrap()
}

#[test]
fn all_ones_batch_on_zero_rbm() {
    let rbm = RbmFreeEnergy::zeros(3, 6).unwrap();
    let batch = vec![1u8; 4 * 6];
    let mut rng = aux_stream(40);
    let n = 10_000;
    let mut mean = 0.0;
    for _ in 0..n {
        let g = cd_gradient(&rbm, &batch, 1, &mut rng).unwrap();
        mean += g.db.iter().sum::<f64>() / 6.0;
    }
    mean /= n as f64;
    // each batch-unit average has variance 0.25 / 24
    let se = (0.25 / 24.0 / n as f64).sqrt();
    assert!((mean - 0.5).abs() <= 3.0 * se, "{mean}");
}

#[test]
fn long_cd_approaches_exact_gradient() {
    let rbm = random_rbm(3, 6, 1.0, 41);
    let data = synth_bernoulli_mixture(6, 2, 10, 0.1, 42).unwrap();
    let exact = exact_gradient(&rbm, &data);
    // 10⁴ chains: the dataset tiled 500 times
    let batch: Vec<u8> = (0..500).flat_map(|_| data.as_bytes().iter().copied()).collect();
    let g = flat(&cd_gradient(&rbm, &batch, 50, &mut aux_stream(43)).unwrap());
    let err: f64 = g.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(err / norm <= 0.05, "relative error {}", err / norm);
}

#[test]
fn cd_ascent_increases_exact_likelihood() {
    let data = synth_bernoulli_mixture(6, 3, 20, 0.05, 44).unwrap();
    let mut rbm = random_rbm(3, 6, 0.01, 45);
    let mut rng = aux_stream(46);
    let (m, d) = (3, 6);
    let mut opt = Adam::new(m * d + m + d, 0.01, 0.9, 0.999, 1e-8);
    let mut params: Vec<f64> = rbm.weights().iter().chain(rbm.hidden_bias()).chain(rbm.visible_bias()).copied().collect();
    let mut ll = exact_log_likelihood(&rbm, &data).unwrap();
    let mut ups = 0;
    for _ in 0..200 {
        let g = flat(&cd_gradient(&rbm, data.as_bytes(), 10, &mut rng).unwrap());
        opt.ascend(&mut params, &g);
        rbm = RbmFreeEnergy::new(params[..m * d].to_vec(), params[m * d..m * d + m].to_vec(), params[m * d + m..].to_vec()).unwrap();
        let next = exact_log_likelihood(&rbm, &data).unwrap();
        if next > ll {
            ups += 1;
        }
        ll = next;
    }
    assert!(ups >= 190, "{ups} of 200 steps increased the likelihood");
}

fn split(data: &BinaryDataset) -> (BinaryDataset, BinaryDataset) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, r) in data.rows().enumerate() {
        if i % 5 == 0 { test.extend_from_slice(r) } else { train.extend_from_slice(r) }
    }
    (BinaryDataset::new(data.dim(), train).unwrap(), BinaryDataset::new(data.dim(), test).unwrap())
}

#[test]
fn training_improves_held_out_likelihood() {
    let all = synth_bernoulli_mixture(16, 4, 250, 0.05, 47).unwrap();
    let (train, test) = split(&all);
    let cfg = RbmTrainConfig {
        hidden: 8,
        cd_k: 1,
        iterations: 0,
        seed: 48,
        ..Default::default()
    };
    let init = train_rbm(&train, &cfg).unwrap().model;
    let trained = train_rbm(&train, &RbmTrainConfig { iterations: 1000, ..cfg }).unwrap();
    let before = exact_log_likelihood(&init, &test).unwrap();
    let after = exact_log_likelihood(&trained.model, &test).unwrap();
    assert!(after >= before * 0.8, "{before} -> {after}");
    assert_eq!(trained.loss.len(), 1000);
}

#[test]
fn training_is_seed_deterministic() {
    let data = synth_bernoulli_mixture(8, 2, 40, 0.1, 49).unwrap();
    let cfg = RbmTrainConfig {
        hidden: 4,
        cd_k: 2,
        iterations: 50,
        batch_size: 16,
        seed: 50,
        ..Default::default()
    };
    let a = train_rbm(&data, &cfg).unwrap();
    let b = train_rbm(&data, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train_rbm(&data, &RbmTrainConfig { seed: 51, ..cfg }).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn near_half_flip_rows_look_uniform() {
    let data = synth_bernoulli_mixture(64, 1, 400, 0.499, 52).unwrap();
    let proto_dist: f64 = {
        // prototypes are not exposed, so compare against the first row
        let r0 = data.row(0);
        data.rows().skip(1).map(|r| r.iter().zip(r0).filter(|(a, b)| a != b).count() as f64).sum::<f64>() / 399.0
    };
    assert!((proto_dist - 32.0).abs() < 2.0, "{proto_dist}");
    let ones = data.as_bytes().iter().filter(|&&b| b == 1).count() as f64 / data.as_bytes().len() as f64;
    assert!((ones - 0.5).abs() < 0.02);
}
