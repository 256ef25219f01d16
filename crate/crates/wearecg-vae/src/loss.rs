use crate::model::LatentGaussian;
use crate::Result;
use nn_core::{Graph, Tensor};

/// Loss components for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Closed-form KL(q ‖ N(0,I)) summed over latent dims and timesteps,
/// averaged over the batch: −½ Σ (1 + logvar − μ² − exp(logvar)).
pub fn kl_divergence(q: &LatentGaussian) -> f64 {
    let sum: f64 = q
        .mu
        .iter()
        .zip(&q.logvar)
        .map(|(&m, &lv)| 1.0 + lv - m * m - lv.exp())
        .sum();
    -0.5 * sum / q.batch as f64
}

/// Graph-side KL with the same normalization.
pub fn kl_divergence_graph(g: &mut Graph, mu: Tensor, logvar: Tensor) -> Result<Tensor> {
    let batch = g.shape(mu)[0] as f64;
    let one_plus = g.add_scalar(logvar, 1.0);
    let mu_sq = g.mul(mu, mu)?;
    let var = g.exp(logvar);
    let a = g.sub(one_plus, mu_sq)?;
    let b = g.sub(a, var)?;
    let s = g.sum_all(b);
    Ok(g.scale(s, -0.5 / batch))
}

/// Mean squared error over every element (B·12·T). The target is the
/// full 12-lead signal; masking only ever applies to the input side.
pub fn recon_loss(g: &mut Graph, x_hat: Tensor, x: Tensor) -> Result<Tensor> {
    Ok(g.mse(x_hat, x)?)
}

/// L = L_recon + β·KL. Returns the graph node for backward plus the
/// component values for logging.
pub fn total_loss(
    g: &mut Graph,
    x_hat: Tensor,
    x: Tensor,
    mu: Tensor,
    logvar: Tensor,
    beta_kl: f64,
) -> Result<(Tensor, LossParts)> {
    let recon = recon_loss(g, x_hat, x)?;
    let kl = kl_divergence_graph(g, mu, logvar)?;
    let weighted = g.scale(kl, beta_kl);
    let total = g.add(recon, weighted)?;
    Ok((
        total,
        LossParts {
            total: g.scalar(total),
            recon: g.scalar(recon),
            kl: g.scalar(kl),
        },
    ))
}
