use nn_core::{conv1d_out_len, Graph, Mhsa, ParamStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn conv_identity_kernel_passes_input_through() {
    let mut g = Graph::new();
    // k=1, stride=1, weight = identity over 3 channels, bias 0.
    let x_data: Vec<f64> = (0..3 * 5).map(|i| i as f64 * 0.5 - 2.0).collect();
    let x = g.constant(vec![1, 3, 5], x_data.clone());
    let mut w = vec![0.0; 3 * 3];
    for c in 0..3 {
        w[c * 3 + c] = 1.0;
    }
    let w = g.constant(vec![3, 3, 1], w);
    let b = g.constant(vec![3], vec![0.0; 3]);
    let y = g.conv1d(x, w, b, 1).unwrap();
    assert_eq!(g.value(y), x_data.as_slice());
}

#[test]
fn conv_same_padding_hand_case() {
    let mut g = Graph::new();
    let x = g.constant(vec![1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]);
    let w = g.constant(vec![1, 1, 3], vec![1.0, 1.0, 1.0]);
    let b = g.constant(vec![1], vec![0.0]);
    let y = g.conv1d(x, w, b, 1).unwrap();
    assert_eq!(g.value(y), &[3.0, 6.0, 9.0, 7.0]);
}

#[test]
fn conv_output_lengths_match_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 1..=64usize {
        assert_eq!(conv1d_out_len(t, 1), t);
        assert_eq!(conv1d_out_len(t, 2), t.div_ceil(2));

        let mut g = Graph::new();
        let x_data: Vec<f64> = (0..2 * t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = g.constant(vec![1, 2, t], x_data);
        let w_data: Vec<f64> = (0..3 * 2 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = g.constant(vec![3, 2, 3], w_data);
        let b = g.constant(vec![3], vec![0.1; 3]);
        let y1 = g.conv1d(x, w, b, 1).unwrap();
        assert_eq!(g.shape(y1), &[1, 3, t]);
        let y2 = g.conv1d(x, w, b, 2).unwrap();
        assert_eq!(g.shape(y2), &[1, 3, t.div_ceil(2)]);
    }
}

#[test]
fn group_norm_defining_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (b, c, t, groups) = (2usize, 8usize, 16usize, 4usize);
    let mut g = Graph::new();
    let x_data: Vec<f64> = (0..b * c * t).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let x = g.constant(vec![b, c, t], x_data);
    let gamma = g.constant(vec![c], vec![1.0; c]);
    let beta = g.constant(vec![c], vec![0.0; c]);
    let y = g.group_norm(x, gamma, beta, groups, 1e-10).unwrap();

    let cg = c / groups;
    let span = cg * t;
    for chunk in g.value(y).chunks(span) {
        let mean = chunk.iter().sum::<f64>() / span as f64;
        let var = chunk.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / span as f64;
        assert!(mean.abs() < 1e-6, "group mean {mean}");
        assert!((var - 1.0).abs() < 1e-4, "group var {var}");
    }

    // Constant input → zeros pre-affine.
    let xc = g.constant(vec![1, c, t], vec![5.5; c * t]);
    let yc = g.group_norm(xc, gamma, beta, groups, 1e-10).unwrap();
    assert!(g.value(yc).iter().all(|&v| v.abs() < 1e-6));

    // gamma=0, beta=constant → output is that constant.
    let gz = g.constant(vec![c], vec![0.0; c]);
    let bc = g.constant(vec![c], vec![2.5; c]);
    let ya = g.group_norm(x, gz, bc, groups, 1e-10).unwrap();
    assert!(g.value(ya).iter().all(|&v| (v - 2.5).abs() < 1e-12));
}

#[test]
fn group_norm_invariant_to_group_affine_input_rescale() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (c, t, groups) = (8usize, 10usize, 2usize);
    let x_data: Vec<f64> = (0..c * t).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Per-group positive scale a and constant offset b applied to the input.
    let scaled: Vec<f64> = x_data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let group = (i / t) / (c / groups);
            let a = [2.0, 0.5][group];
            let off = [-1.0, 3.0][group];
            a * v + off
        })
        .collect();

    let mut g = Graph::new();
    let gamma = g.constant(vec![c], vec![1.0; c]);
    let beta = g.constant(vec![c], vec![0.0; c]);
    let x0 = g.constant(vec![1, c, t], x_data);
    let x1 = g.constant(vec![1, c, t], scaled);
    let y0 = g.group_norm(x0, gamma, beta, groups, 1e-12).unwrap();
    let y1 = g.group_norm(x1, gamma, beta, groups, 1e-12).unwrap();
    for (a, b) in g.value(y0).iter().zip(g.value(y1)) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn silu_oracles() {
    let mut g = Graph::new();
    let x = g.constant(vec![3], vec![0.0, 30.0, 1.0]);
    let y = g.silu(x);
    let v = g.value(y);
    assert_eq!(v[0], 0.0);
    assert!((v[1] - 30.0).abs() < 1e-9);
    assert!((v[2] - 0.7310585786300049).abs() < 1e-10);
}

#[test]
fn mhsa_single_timestep_collapses_to_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut store = ParamStore::new();
    let attn = Mhsa::new(&mut store, "attn", 8, 4, &mut rng);

    let x_data: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g = Graph::new();
    let x = g.constant(vec![1, 8, 1], x_data.clone());
    let y = attn.forward(&mut g, &store, x).unwrap();

    // With T=1 attention weights are 1, so the result is Wo·(Wv·x).
    let vx = attn.wv.forward(&mut g, &store, x).unwrap();
    let expect = attn.wo.forward(&mut g, &store, vx).unwrap();
    for (a, b) in g.value(y).iter().zip(g.value(expect)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mhsa_is_time_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut store = ParamStore::new();
    let (c, t) = (8usize, 4usize);
    let attn = Mhsa::new(&mut store, "attn", c, 2, &mut rng);

    let x_data: Vec<f64> = (0..c * t).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let perm = [2usize, 0, 3, 1];
    let mut x_perm = vec![0.0; c * t];
    for ch in 0..c {
        for (dst, &src) in perm.iter().enumerate() {
            x_perm[ch * t + dst] = x_data[ch * t + src];
        }
    }

    let mut g = Graph::new();
    let x = g.constant(vec![1, c, t], x_data);
    let xp = g.constant(vec![1, c, t], x_perm);
    let y = attn.forward(&mut g, &store, x).unwrap();
    let yp = attn.forward(&mut g, &store, xp).unwrap();

    for ch in 0..c {
        for (dst, &src) in perm.iter().enumerate() {
            let a = g.value(yp)[ch * t + dst];
            let b = g.value(y)[ch * t + src];
            assert!((a - b).abs() < 1e-9, "channel {ch}: {a} vs {b}");
        }
    }
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut g = Graph::new();
    let data: Vec<f64> = (0..2 * 5 * 7).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let x = g.constant(vec![2, 5, 7], data);
    let y = g.softmax_last(x).unwrap();
    for row in g.value(y).chunks(7) {
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
}

#[test]
fn backward_polynomial_identities() {
    // loss = sum(x) → grad ones; loss = sum(x⊙x) → grad 2x.
    let mut store = ParamStore::new();
    let data = vec![0.5, -1.5, 2.0, 0.0, 3.25, -0.75];
    let id = store.add("x", vec![6], data.clone());

    let mut g = Graph::new();
    let x = g.param(&store, id);
    let loss = g.sum_all(x);
    g.backward(loss, &mut store).unwrap();
    assert!(store.grad(id).iter().all(|&v| v == 1.0));

    store.zero_grads();
    let mut g = Graph::new();
    let x = g.param(&store, id);
    let sq = g.mul(x, x).unwrap();
    let loss = g.sum_all(sq);
    g.backward(loss, &mut store).unwrap();
    for (gv, xv) in store.grad(id).iter().zip(&data) {
        assert!((gv - 2.0 * xv).abs() < 1e-12);
    }
}

#[test]
fn backward_accumulates_across_calls() {
    let mut store = ParamStore::new();
    let id = store.add("x", vec![2], vec![1.0, 2.0]);
    let mut g = Graph::new();
    let x = g.param(&store, id);
    let loss = g.sum_all(x);
    g.backward(loss, &mut store).unwrap();
    g.backward(loss, &mut store).unwrap();
    assert_eq!(store.grad(id), &[2.0, 2.0]);
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let mut store = ParamStore::new();
    let id = store.add("x", vec![2], vec![1.0, 2.0]);
    let mut g = Graph::new();
    let x = g.param(&store, id);
    assert!(matches!(
        g.backward(x, &mut store),
        Err(nn_core::NnError::NonScalarLoss(_))
    ));
}

#[test]
fn frozen_params_receive_no_gradient() {
    let mut store = ParamStore::new();
    let id = store.add("x", vec![3], vec![1.0, 2.0, 3.0]);
    store.set_frozen(id, true);
    let mut g = Graph::new();
    let x = g.param(&store, id);
    let sq = g.mul(x, x).unwrap();
    let loss = g.sum_all(sq);
    g.backward(loss, &mut store).unwrap();
    assert!(store.grad(id).iter().all(|&v| v == 0.0));
}

#[test]
fn bce_with_logits_oracles() {
    let mut g = Graph::new();
    // Zero logits → ln 2 regardless of targets.
    let l = g.constant(vec![2, 2], vec![0.0; 4]);
    let t = g.constant(vec![2, 2], vec![1.0, 0.0, 1.0, 0.0]);
    let loss = g.bce_with_logits(l, t).unwrap();
    assert!((g.scalar(loss) - std::f64::consts::LN_2).abs() < 1e-12);

    // Saturated correct logit contributes ~0.
    let l = g.constant(vec![1, 1], vec![30.0]);
    let t = g.constant(vec![1, 1], vec![1.0]);
    let loss = g.bce_with_logits(l, t).unwrap();
    assert!(g.scalar(loss) < 1e-9);

    // ℓ=1, t=1 → −ln σ(1).
    let l = g.constant(vec![1, 1], vec![1.0]);
    let loss = g.bce_with_logits(l, t).unwrap();
    assert!((g.scalar(loss) - 0.31326168751822286).abs() < 1e-12);

    // Targets outside {0,1} rejected.
    let bad = g.constant(vec![1, 1], vec![0.5]);
    assert!(g.bce_with_logits(l, bad).is_err());
}

#[test]
fn forward_is_bitwise_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut store = ParamStore::new();
        let attn = Mhsa::new(&mut store, "a", 16, 4, &mut rng);
        let conv = nn_core::Conv1d::new(
            &mut store,
            "c",
            16,
            16,
            3,
            2,
            nn_core::Init::HeUniform,
            &mut rng,
        );
        let mut g = Graph::new();
        let x_data: Vec<f64> = (0..16 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = g.constant(vec![1, 16, 32], x_data);
        let h = attn.forward(&mut g, &store, x).unwrap();
        let y = conv.forward(&mut g, &store, h).unwrap();
        g.value(y).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
