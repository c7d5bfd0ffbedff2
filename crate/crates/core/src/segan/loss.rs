use super::SeganError;
use crate::tensorgrad::{Graph, Var};

/// Graph handles of the two objectives and the raw L1 term.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub loss: Var,
    pub l1: Var,
}

/// `½·mean((d_real − 1)²) + ½·mean(d_fake²)`.
pub fn d_loss_graph(g: &mut Graph, d_real: Var, d_fake: Var) -> Result<Var, SeganError> {
    let n = g.value(d_real).len();
    let ones = g.constant(g.shape(d_real).to_vec(), vec![1.0; n])?;
    let zeros = g.constant(g.shape(d_fake).to_vec(), vec![0.0; g.value(d_fake).len()])?;
    let real = g.mse_loss(d_real, ones)?;
    let fake = g.mse_loss(d_fake, zeros)?;
    let sum = g.add(real, fake)?;
    Ok(g.scale(sum, 0.5)?)
}

/// `½·mean((d_fake − 1)²) + λ·mean|x_hat − x_clean|`.
pub fn g_loss_graph(g: &mut Graph, d_fake: Var, x_hat: Var, x_clean: Var, lambda_l1: f64) -> Result<LossVars, SeganError> {
    let ones = g.constant(g.shape(d_fake).to_vec(), vec![1.0; g.value(d_fake).len()])?;
    let adv = g.mse_loss(d_fake, ones)?;
    let adv = g.scale(adv, 0.5)?;
    let l1 = g.l1_loss(x_hat, x_clean)?;
    let weighted = g.scale(l1, lambda_l1 as f32)?;
    let loss = g.add(adv, weighted)?;
    Ok(LossVars { loss, l1 })
}

/// Plain evaluation of both objectives in f64.
pub fn losses(d_real: &[f32], d_fake: &[f32], x_hat: &[f32], x_clean: &[f32], lambda_l1: f64) -> Result<(f64, f64), SeganError> {
    if d_real.is_empty() || d_real.len() != d_fake.len() || x_hat.is_empty() || x_hat.len() != x_clean.len() {
        return Err(SeganError::Shape("loss inputs differ in length or are empty".into()));
    }
    let mean = |it: &mut dyn Iterator<Item = f64>, n: usize| it.sum::<f64>() / n as f64;
    let real = mean(&mut d_real.iter().map(|&v| (v as f64 - 1.0).powi(2)), d_real.len());
    let fake = mean(&mut d_fake.iter().map(|&v| (v as f64).powi(2)), d_fake.len());
    let adv = mean(&mut d_fake.iter().map(|&v| (v as f64 - 1.0).powi(2)), d_fake.len());
    let l1 = mean(&mut x_hat.iter().zip(x_clean).map(|(&a, &b)| (a as f64 - b as f64).abs()), x_hat.len());
    Ok((0.5 * real + 0.5 * fake, 0.5 * adv + lambda_l1 * l1))
}
