//! The full VAE loss against central finite differences with frozen ε.

use nn_core::{grad_check, GradCheckConfig, Graph, ParamStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wearecg_vae::{
    reparameterize_graph, sample_eps, total_loss, MaskSpec, VaeDescriptor, VaeModel,
};

fn vae_loss(model: &VaeModel, x_masked: &[f64], x_full: &[f64], t: usize, eps: &[f64]) -> f64 {
    let mut g = Graph::new();
    let x = g.constant(vec![1, 12, t], x_masked.to_vec());
    let target = g.constant(vec![1, 12, t], x_full.to_vec());
    let (mu, logvar) = model.encode_graph(&mut g, x).unwrap();
    let e = g.constant(vec![1, 4, t / 8], eps.to_vec());
    let z = reparameterize_graph(&mut g, mu, logvar, e).unwrap();
    let x_hat = model.decode_graph(&mut g, z).unwrap();
    let (_, parts) = total_loss(&mut g, x_hat, target, mu, logvar, 1e-4).unwrap();
    parts.total
}

#[test]
fn full_vae_loss_passes_finite_difference_check() {
    let mut model = VaeModel::new(VaeDescriptor::desk(vec![8, 12, 16]), 17).unwrap();
    // Perturb every parameter (the posterior heads start at zero, which
    // would leave the encoder body untested).
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ids: Vec<_> = model.store.ids().collect();
    for id in ids {
        for v in model.store.data_mut(id) {
            *v += rng.gen_range(-0.05..0.05);
        }
    }

    let t = 64usize;
    let x_full: Vec<f64> = (0..12 * t).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mask = MaskSpec::ii_v1_v5();
    let mut x_masked = x_full.clone();
    mask.apply_flat(&mut x_masked, 1, t);
    let eps = sample_eps(4 * (t / 8), 0xf00d);

    // Analytic pass.
    model.store.zero_grads();
    {
        let mut g = Graph::new();
        let x = g.constant(vec![1, 12, t], x_masked.clone());
        let target = g.constant(vec![1, 12, t], x_full.clone());
        let (mu, logvar) = model.encode_graph(&mut g, x).unwrap();
        let e = g.constant(vec![1, 4, t / 8], eps.clone());
        let z = reparameterize_graph(&mut g, mu, logvar, e).unwrap();
        let x_hat = model.decode_graph(&mut g, z).unwrap();
        let (loss, _) = total_loss(&mut g, x_hat, target, mu, logvar, 1e-4).unwrap();
        g.backward(loss, &mut model.store).unwrap();
    }

    // Numeric probes evaluate a twin model whose store is swapped in;
    // construction is deterministic, so parameter ids line up.
    let probe = std::cell::RefCell::new(VaeModel::new(model.descriptor.clone(), 0).unwrap());
    let mut store = std::mem::replace(&mut model.store, ParamStore::new());
    let report = grad_check(
        &mut store,
        |s| {
            probe.borrow_mut().store = s.clone();
            let p = probe.borrow();
            Ok(vae_loss(&p, &x_masked, &x_full, t, &eps))
        },
        &GradCheckConfig {
            h: 1e-4,
            tol: 1e-3,
            coords: 96,
            seed: 31,
        },
    )
    .unwrap();
    model.store = store;
    assert!(
        report.pass,
        "full VAE loss FD check failed: max rel err {} at {:?}",
        report.max_rel_err, report.worst
    );
}
