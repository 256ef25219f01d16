use crate::params::ParamStore;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub h: f64,
    /// Pass threshold on the max relative error.
    pub tol: f64,
    /// Number of randomly sampled coordinates to probe.
    pub coords: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            h: 1e-3,
            tol: 1e-4,
            coords: 64,
            seed: 0x6ead,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub pass: bool,
    /// (parameter name, flat index, analytic, numeric) of the worst coordinate.
    pub worst: Option<(String, usize, f64, f64)>,
}

/// Compare the analytic gradients already accumulated in `store`
/// against central finite differences of `loss_fn`, probing at least
/// `coords` randomly chosen coordinates (seeded). `loss_fn` must be
/// deterministic — freeze any sampling noise before calling.
pub fn grad_check<F>(
    store: &mut ParamStore,
    mut loss_fn: F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    let ids: Vec<_> = store.ids().filter(|&id| !store.is_frozen(id)).collect();
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for &id in &ids {
        for i in 0..store.data(id).len() {
            coords.push((id.0, i));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_probe = cfg.coords.min(coords.len());
    // Partial Fisher-Yates: the first n_probe entries become the sample.
    for i in 0..n_probe {
        let j = rng.gen_range(i..coords.len());
        coords.swap(i, j);
    }

    let mut max_rel_err: f64 = 0.0;
    let mut worst = None;
    for &(raw_id, i) in coords.iter().take(n_probe) {
        let id = crate::ParamId(raw_id);
        let orig = store.data(id)[i];

        store.data_mut(id)[i] = orig + cfg.h;
        let plus = loss_fn(store)?;
        store.data_mut(id)[i] = orig - cfg.h;
        let minus = loss_fn(store)?;
        store.data_mut(id)[i] = orig;

        let numeric = (plus - minus) / (2.0 * cfg.h);
        let analytic = store.grad(id)[i];
        let rel = (analytic - numeric).abs() / (analytic.abs().max(numeric.abs()) + 1e-4);
        if rel > max_rel_err {
            max_rel_err = rel;
            worst = Some((store.name(id).to_string(), i, analytic, numeric));
        }
    }

    Ok(GradCheckReport {
        max_rel_err,
        checked: n_probe,
        pass: max_rel_err <= cfg.tol,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Graph;

    #[test]
    fn quadratic_is_exact_under_central_differences() {
        let mut store = ParamStore::new();
        let id = store.add("p", vec![1], vec![3.0]);
        let mut g = Graph::new();
        let p = g.param(&store, id);
        let p0 = g.reshape(p, vec![]).unwrap();
        let loss = g.mul(p0, p0).unwrap();
        g.backward(loss, &mut store).unwrap();
        assert!((store.grad(id)[0] - 6.0).abs() < 1e-12);

        let report = grad_check(
            &mut store,
            |s| {
                let v = s.data(crate::ParamId(0))[0];
                Ok(v * v)
            },
            &GradCheckConfig { h: 1e-4, tol: 1e-8, coords: 8, seed: 1 },
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut store = ParamStore::new();
        let id = store.add("p", vec![1], vec![3.0]);
        let mut g = Graph::new();
        let p = g.param(&store, id);
        let p0 = g.reshape(p, vec![]).unwrap();
        let loss = g.mul(p0, p0).unwrap();
        g.backward(loss, &mut store).unwrap();
        g.backward(loss, &mut store).unwrap(); // double-accumulate: grad is now 2×

        let report = grad_check(
            &mut store,
            |s| {
                let v = s.data(crate::ParamId(0))[0];
                Ok(v * v)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(!report.pass);
    }
}
