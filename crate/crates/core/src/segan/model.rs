use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DiscriminatorConfig, GeneratorConfig, SeganError};
use crate::tensorgrad::{ConvSpec, ConvTransposeSpec, Graph, Parameter, Tensor, Var};

const PRELU_INIT: f32 = 0.25;

fn conv_weight(rng: &mut ChaCha8Rng, name: String, shape: [usize; 3], fan_in: usize, fan_out: usize) -> Parameter {
    // Glorot normal.
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("positive std");
    let t = Tensor::from_fn(shape.to_vec(), |_| dist.sample(rng) as f32);
    Parameter::new(name, t)
}

fn zeros(name: String, n: usize) -> Parameter {
    Parameter::new(name, Tensor::zeros(vec![n]))
}

/// Expected `(name, shape)` list for the generator, in binding order.
pub fn generator_layout(cfg: &GeneratorConfig) -> Vec<(String, Vec<usize>)> {
    let k = cfg.kernel_width;
    let mut out = Vec::new();
    let mut cin = 1;
    for (i, &c) in cfg.encoder_channels.iter().enumerate() {
        out.push((format!("g.enc.{i}.weight"), vec![c, cin, k]));
        out.push((format!("g.enc.{i}.bias"), vec![c]));
        out.push((format!("g.enc.{i}.alpha"), vec![c]));
        cin = c;
    }
    let n = cfg.n_layers();
    for i in 0..n {
        let (ci, co) = (cfg.decoder_in_channels(i), cfg.decoder_out_channels(i));
        out.push((format!("g.dec.{i}.weight"), vec![ci, co, k]));
        out.push((format!("g.dec.{i}.bias"), vec![co]));
        if i + 1 < n {
            out.push((format!("g.dec.{i}.alpha"), vec![co]));
        }
    }
    out
}

/// Expected `(name, shape)` list for the discriminator, in binding order.
pub fn discriminator_layout(cfg: &DiscriminatorConfig) -> Vec<(String, Vec<usize>)> {
    let k = cfg.kernel_width;
    let mut out = Vec::new();
    let mut cin = 2;
    for (i, &c) in cfg.channels.iter().enumerate() {
        out.push((format!("d.conv.{i}.weight"), vec![c, cin, k]));
        out.push((format!("d.conv.{i}.bias"), vec![c]));
        cin = c;
    }
    out.push(("d.reduce.weight".into(), vec![1, cin, 1]));
    out.push(("d.reduce.bias".into(), vec![1]));
    out.push(("d.linear.weight".into(), vec![1, 1, cfg.final_len()]));
    out.push(("d.linear.bias".into(), vec![1]));
    out
}

fn init_from_layout(layout: Vec<(String, Vec<usize>)>, rng: &mut ChaCha8Rng) -> Vec<Parameter> {
    layout
        .into_iter()
        .map(|(name, shape)| {
            if name.ends_with(".weight") {
                let (fan_in, fan_out) = if name.starts_with("g.dec.") {
                    (shape[0] * shape[2], shape[1] * shape[2])
                } else {
                    (shape[1] * shape[2], shape[0] * shape[2])
                };
                conv_weight(rng, name, [shape[0], shape[1], shape[2]], fan_in, fan_out)
            } else if name.ends_with(".alpha") {
                Parameter::new(name, Tensor::full(shape, PRELU_INIT))
            } else {
                zeros(name, shape[0])
            }
        })
        .collect()
}

pub fn init_generator(cfg: &GeneratorConfig, seed: u64) -> Result<Vec<Parameter>, SeganError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    Ok(init_from_layout(generator_layout(cfg), &mut rng))
}

pub fn init_discriminator(cfg: &DiscriminatorConfig, seed: u64) -> Result<Vec<Parameter>, SeganError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    Ok(init_from_layout(discriminator_layout(cfg), &mut rng))
}

/// Checks names and shapes against the layout, in order.
pub(crate) fn check_layout(params: &[Parameter], layout: &[(String, Vec<usize>)]) -> Result<(), SeganError> {
    if params.len() != layout.len() {
        return Err(SeganError::Architecture(format!("{} parameters, expected {}", params.len(), layout.len())));
    }
    for (p, (name, shape)) in params.iter().zip(layout) {
        if &p.name != name || p.shape() != shape.as_slice() {
            return Err(SeganError::Architecture(format!(
                "parameter {} {:?}, expected {name} {shape:?}",
                p.name,
                p.shape()
            )));
        }
    }
    Ok(())
}

pub fn bind(g: &mut Graph, params: &[Parameter], trainable: bool) -> Result<Vec<Var>, SeganError> {
    params.iter().map(|p| g.param(p, trainable).map_err(SeganError::from)).collect()
}

/// Records the generator on `g`. `vars` come from [`bind`] over
/// parameters in [`generator_layout`] order. Returns `(x_hat, c)`.
pub fn generator_graph(g: &mut Graph, cfg: &GeneratorConfig, vars: &[Var], x: Var, z: Var) -> Result<(Var, Var), SeganError> {
    let spec = ConvSpec { stride: cfg.stride, pad: cfg.pad() };
    let tspec = ConvTransposeSpec { stride: cfg.stride, pad: cfg.pad(), output_padding: cfg.stride + 2 * cfg.pad() - cfg.kernel_width };
    let mut it = vars.iter().copied();
    let mut next = || it.next().ok_or_else(|| SeganError::Architecture("too few generator parameters".into()));
    let mut skips = Vec::with_capacity(cfg.n_layers());
    let mut h = x;
    for _ in 0..cfg.n_layers() {
        let (w, b, a) = (next()?, next()?, next()?);
        h = g.conv1d(h, w, Some(b), spec)?;
        h = g.prelu(h, a)?;
        skips.push(h);
    }
    let c = h;
    if g.shape(z) != g.shape(c) {
        return Err(SeganError::Shape(format!("z {:?} does not match encoder output {:?}", g.shape(z), g.shape(c))));
    }
    h = g.concat_channels(c, z)?;
    let n = cfg.n_layers();
    for i in 0..n {
        let (w, b) = (next()?, next()?);
        h = g.conv_transpose1d(h, w, Some(b), tspec)?;
        if i + 1 < n {
            let a = next()?;
            h = g.prelu(h, a)?;
            h = g.concat_channels(h, skips[n - 2 - i])?;
        }
    }
    Ok((g.tanh(h)?, c))
}

/// Records the discriminator; output shape `[B,1]`.
pub fn discriminator_graph(g: &mut Graph, cfg: &DiscriminatorConfig, vars: &[Var], candidate: Var, x_tilde: Var) -> Result<Var, SeganError> {
    if g.shape(candidate) != g.shape(x_tilde) {
        return Err(SeganError::Shape(format!("candidate {:?} vs conditioning {:?}", g.shape(candidate), g.shape(x_tilde))));
    }
    let batch = g.shape(candidate)[0];
    let spec = ConvSpec { stride: cfg.stride, pad: cfg.pad() };
    let mut it = vars.iter().copied();
    let mut next = || it.next().ok_or_else(|| SeganError::Architecture("too few discriminator parameters".into()));
    let mut h = g.concat_channels(candidate, x_tilde)?;
    for _ in 0..cfg.channels.len() {
        let (w, b) = (next()?, next()?);
        h = g.conv1d(h, w, Some(b), spec)?;
        h = g.leaky_relu(h, cfg.leaky_slope)?;
    }
    let (w, b) = (next()?, next()?);
    h = g.conv1d(h, w, Some(b), ConvSpec { stride: 1, pad: 0 })?;
    let (w, b) = (next()?, next()?);
    h = g.conv1d(h, w, Some(b), ConvSpec { stride: 1, pad: 0 })?;
    Ok(g.reshape(h, vec![batch, 1])?)
}

fn check_input(name: &str, t: &Tensor, window: usize) -> Result<(), SeganError> {
    match t.shape() {
        &[_, 1, w] if w == window => Ok(()),
        s => Err(SeganError::Shape(format!("{name} {s:?}, expected [B,1,{window}]"))),
    }
}

/// Forward pass without gradient bookkeeping.
pub fn generator_forward(cfg: &GeneratorConfig, params: &[Parameter], x_tilde: &Tensor, z: &Tensor) -> Result<Tensor, SeganError> {
    check_input("x_tilde", x_tilde, cfg.window_len)?;
    let mut g = Graph::new();
    let vars = bind(&mut g, params, false)?;
    let x = g.constant(x_tilde.shape().to_vec(), x_tilde.data().to_vec())?;
    let zv = g.constant(z.shape().to_vec(), z.data().to_vec())?;
    let (out, _) = generator_graph(&mut g, cfg, &vars, x, zv)?;
    Ok(g.to_tensor(out))
}

/// Encoder output `c` alone.
pub fn encode(cfg: &GeneratorConfig, params: &[Parameter], x_tilde: &Tensor) -> Result<Tensor, SeganError> {
    check_input("x_tilde", x_tilde, cfg.window_len)?;
    let mut g = Graph::new();
    let vars = bind(&mut g, params, false)?;
    let mut h = g.constant(x_tilde.shape().to_vec(), x_tilde.data().to_vec())?;
    let spec = ConvSpec { stride: cfg.stride, pad: cfg.pad() };
    for i in 0..cfg.n_layers() {
        h = g.conv1d(h, vars[3 * i], Some(vars[3 * i + 1]), spec)?;
        h = g.prelu(h, vars[3 * i + 2])?;
    }
    Ok(g.to_tensor(h))
}

pub fn discriminator_forward(cfg: &DiscriminatorConfig, params: &[Parameter], candidate: &Tensor, x_tilde: &Tensor) -> Result<Tensor, SeganError> {
    check_input("candidate", candidate, cfg.window_len)?;
    check_input("x_tilde", x_tilde, cfg.window_len)?;
    let mut g = Graph::new();
    let vars = bind(&mut g, params, false)?;
    let c = g.constant(candidate.shape().to_vec(), candidate.data().to_vec())?;
    let x = g.constant(x_tilde.shape().to_vec(), x_tilde.data().to_vec())?;
    let out = discriminator_graph(&mut g, cfg, &vars, c, x)?;
    Ok(g.to_tensor(out))
}

/// Standard-normal latent of shape `[B, c, l]`.
pub fn sample_z(rng: &mut ChaCha8Rng, batch: usize, dims: (usize, usize)) -> Tensor {
    Tensor::from_fn(vec![batch, dims.0, dims.1], |_| {
        let v: f64 = rand_distr::StandardNormal.sample(rng);
        v as f32
    })
}
