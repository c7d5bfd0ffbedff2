//! Tape-based reverse-mode differentiation over the closed SEGAN op set.

use super::kernels::{col2im_add, im2col};
use super::scalar::{gemm, MatRef};
use super::{Parameter, Scalar, Tensor, TensorError};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Stride and zero padding of a strided convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: usize,
    pub pad: usize,
}

/// Geometry of a transposed convolution. `output_padding` extends the output
/// on the right so a layer can hit an exact length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvTransposeSpec {
    pub stride: usize,
    pub pad: usize,
    pub output_padding: usize,
}

/// `floor((len + 2·pad − kernel) / stride) + 1`, or `None` when the kernel
/// does not fit.
pub fn conv1d_out_len(len: usize, kernel: usize, spec: ConvSpec) -> Option<usize> {
    if spec.stride == 0 || kernel == 0 || kernel > len + 2 * spec.pad {
        return None;
    }
    Some((len + 2 * spec.pad - kernel) / spec.stride + 1)
}

/// `(len − 1)·stride − 2·pad + kernel + output_padding`.
pub fn conv_transpose1d_out_len(len: usize, kernel: usize, spec: ConvTransposeSpec) -> Option<usize> {
    if spec.stride == 0 || kernel == 0 || len == 0 || (spec.output_padding > 0 && spec.output_padding >= spec.stride) {
        return None;
    }
    let full = (len - 1) * spec.stride + kernel + spec.output_padding;
    full.checked_sub(2 * spec.pad).filter(|&n| n > 0)
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Conv1d { x: Var, w: Var, b: Option<Var>, spec: ConvSpec },
    ConvTranspose1d { x: Var, w: Var, b: Option<Var>, spec: ConvTransposeSpec },
    Prelu { x: Var, alpha: Var },
    LeakyRelu { x: Var, slope: T },
    Tanh { x: Var },
    Concat { a: Var, b: Var },
    Add { a: Var, b: Var },
    Scale { x: Var, factor: T },
    Reshape { x: Var },
    L1 { a: Var, b: Var },
    Mse { a: Var, b: Var },
}

#[derive(Debug)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Per-node gradients produced by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

/// A single forward pass. Every op validates shapes and rejects non-finite
/// outputs; [`Graph::backward`] then walks the tape in reverse.
#[derive(Debug, Default)]
pub struct Graph<T: Scalar = f32> {
    nodes: Vec<Node<T>>,
}

fn mismatch(op: &'static str, detail: String) -> TensorError {
    TensorError::ShapeMismatch { op, detail }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op_name: &'static str, shape: Vec<usize>, value: Vec<T>, op: Op<T>, needs_grad: bool) -> Result<Var, TensorError> {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        if !value.iter().all(|v| v.is_finite()) {
            return Err(TensorError::NonFinite { op: op_name, stage: "forward" });
        }
        self.nodes.push(Node { shape, value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records a tensor as a leaf; `requires_grad` follows the tensor's flag.
    pub fn leaf(&mut self, t: &Tensor<T>) -> Result<Var, TensorError> {
        self.push("leaf", t.shape().to_vec(), t.data().to_vec(), Op::Leaf, t.requires_grad())
    }

    /// Records a constant input that never receives a gradient.
    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<Var, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(mismatch("constant", format!("shape {shape:?} vs {} values", data.len())));
        }
        self.push("constant", shape, data, Op::Leaf, false)
    }

    /// Records a parameter; `trainable = false` binds it as a constant so
    /// gradients still flow through it to upstream inputs but not into it.
    pub fn param(&mut self, p: &Parameter<T>, trainable: bool) -> Result<Var, TensorError> {
        self.push("param", p.shape().to_vec(), p.tensor.data().to_vec(), Op::Leaf, trainable)
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn to_tensor(&self, v: Var) -> Tensor<T> {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("node shape is consistent")
    }

    /// The single value of a scalar node.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[0]
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn dims3(&self, op: &'static str, v: Var) -> Result<(usize, usize, usize), TensorError> {
        match self.shape(v) {
            &[b, c, l] => Ok((b, c, l)),
            s => Err(mismatch(op, format!("expected rank-3 tensor, got {s:?}"))),
        }
    }

    fn check_bias(&self, op: &'static str, b: Option<Var>, channels: usize) -> Result<(), TensorError> {
        if let Some(b) = b {
            if self.shape(b) != [channels] {
                return Err(mismatch(op, format!("bias shape {:?}, expected [{channels}]", self.shape(b))));
            }
        }
        Ok(())
    }

    /// Strided cross-correlation: `x[B,Cin,L] ⋆ w[Cout,Cin,K] + b[Cout]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Option<Var>, spec: ConvSpec) -> Result<Var, TensorError> {
        let (batch, cin, len) = self.dims3("conv1d", x)?;
        let (cout, wcin, kernel) = self.dims3("conv1d", w)?;
        if wcin != cin {
            return Err(mismatch("conv1d", format!("input has {cin} channels, weight expects {wcin}")));
        }
        self.check_bias("conv1d", b, cout)?;
        let lout = conv1d_out_len(len, kernel, spec).ok_or_else(|| {
            mismatch("conv1d", format!("kernel {kernel} with stride {} pad {} does not fit length {len}", spec.stride, spec.pad))
        })?;
        let ck = cin * kernel;
        let mut out = vec![T::zero(); batch * cout * lout];
        let mut cols = vec![T::zero(); ck * lout];
        {
            let xv = self.value(x);
            let wv = self.value(w);
            for bi in 0..batch {
                im2col(&xv[bi * cin * len..(bi + 1) * cin * len], cin, len, kernel, spec.stride, spec.pad, lout, &mut cols);
                gemm(
                    MatRef::row_major(wv, cout, ck),
                    MatRef::row_major(&cols, ck, lout),
                    T::zero(),
                    &mut out[bi * cout * lout..(bi + 1) * cout * lout],
                );
            }
            if let Some(b) = b {
                add_channel_bias(&mut out, self.value(b), batch, cout, lout);
            }
        }
        let needs = self.needs(x) || self.needs(w) || b.is_some_and(|b| self.needs(b));
        self.push("conv1d", vec![batch, cout, lout], out, Op::Conv1d { x, w, b, spec }, needs)
    }

    /// Fractional-strided convolution `x[B,Cin,L]`, `w[Cin,Cout,K]`; the
    /// adjoint of [`Graph::conv1d`] with the same geometry.
    pub fn conv_transpose1d(&mut self, x: Var, w: Var, b: Option<Var>, spec: ConvTransposeSpec) -> Result<Var, TensorError> {
        let (batch, cin, len) = self.dims3("conv_transpose1d", x)?;
        let (wcin, cout, kernel) = self.dims3("conv_transpose1d", w)?;
        if wcin != cin {
            return Err(mismatch("conv_transpose1d", format!("input has {cin} channels, weight expects {wcin}")));
        }
        self.check_bias("conv_transpose1d", b, cout)?;
        let lout = conv_transpose1d_out_len(len, kernel, spec).ok_or_else(|| {
            mismatch("conv_transpose1d", format!("invalid geometry {spec:?} for kernel {kernel}, length {len}"))
        })?;
        let ck = cout * kernel;
        let mut out = vec![T::zero(); batch * cout * lout];
        let mut cols = vec![T::zero(); ck * len];
        {
            let xv = self.value(x);
            let wv = self.value(w);
            for bi in 0..batch {
                gemm(
                    MatRef::row_major(wv, cin, ck).t(),
                    MatRef::row_major(&xv[bi * cin * len..(bi + 1) * cin * len], cin, len),
                    T::zero(),
                    &mut cols,
                );
                col2im_add(&cols, cout, lout, kernel, spec.stride, spec.pad, len, &mut out[bi * cout * lout..(bi + 1) * cout * lout]);
            }
            if let Some(b) = b {
                add_channel_bias(&mut out, self.value(b), batch, cout, lout);
            }
        }
        let needs = self.needs(x) || self.needs(w) || b.is_some_and(|b| self.needs(b));
        self.push("conv_transpose1d", vec![batch, cout, lout], out, Op::ConvTranspose1d { x, w, b, spec }, needs)
    }

    /// Parametric ReLU with one learnable negative slope per channel.
    pub fn prelu(&mut self, x: Var, alpha: Var) -> Result<Var, TensorError> {
        let (batch, ch, len) = self.dims3("prelu", x)?;
        if self.shape(alpha) != [ch] {
            return Err(mismatch("prelu", format!("alpha shape {:?} for {ch} channels", self.shape(alpha))));
        }
        let xv = self.value(x);
        let av = self.value(alpha);
        let mut out = xv.to_vec();
        for (i, v) in out.iter_mut().enumerate() {
            if *v <= T::zero() {
                *v = *v * av[(i / len) % ch];
            }
        }
        let needs = self.needs(x) || self.needs(alpha);
        self.push("prelu", vec![batch, ch, len], out, Op::Prelu { x, alpha }, needs)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Result<Var, TensorError> {
        let out = self.value(x).iter().map(|&v| if v > T::zero() { v } else { v * slope }).collect();
        let shape = self.shape(x).to_vec();
        let needs = self.needs(x);
        self.push("leaky_relu", shape, out, Op::LeakyRelu { x, slope }, needs)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).iter().map(|v| v.tanh()).collect();
        let shape = self.shape(x).to_vec();
        let needs = self.needs(x);
        self.push("tanh", shape, out, Op::Tanh { x }, needs)
    }

    /// Concatenates along the channel axis.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ba, ca, la) = self.dims3("concat_channels", a)?;
        let (bb, cb, lb) = self.dims3("concat_channels", b)?;
        if ba != bb || la != lb {
            return Err(mismatch("concat_channels", format!("[{ba},_,{la}] vs [{bb},_,{lb}]")));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = Vec::with_capacity(ba * (ca + cb) * la);
        for bi in 0..ba {
            out.extend_from_slice(&av[bi * ca * la..(bi + 1) * ca * la]);
            out.extend_from_slice(&bv[bi * cb * lb..(bi + 1) * cb * lb]);
        }
        let needs = self.needs(a) || self.needs(b);
        self.push("concat_channels", vec![ba, ca + cb, la], out, Op::Concat { a, b }, needs)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch("add", format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        let out = self.value(a).iter().zip(self.value(b)).map(|(&p, &q)| p + q).collect();
        let shape = self.shape(a).to_vec();
        let needs = self.needs(a) || self.needs(b);
        self.push("add", shape, out, Op::Add { a, b }, needs)
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Result<Var, TensorError> {
        let out = self.value(x).iter().map(|&v| v * factor).collect();
        let shape = self.shape(x).to_vec();
        let needs = self.needs(x);
        self.push("scale", shape, out, Op::Scale { x, factor }, needs)
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(mismatch("reshape", format!("{:?} into {shape:?}", self.shape(x))));
        }
        let out = self.value(x).to_vec();
        let needs = self.needs(x);
        self.push("reshape", shape, out, Op::Reshape { x }, needs)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        if self.value(a).is_empty() {
            return Err(mismatch(op, "empty operands".into()));
        }
        Ok(())
    }

    /// Mean absolute difference.
    pub fn l1_loss(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("l1_loss", a, b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let sum: f64 = av.iter().zip(bv).map(|(&p, &q)| (p - q).abs().as_f64()).sum();
        let mean = T::lit(sum / av.len() as f64);
        let needs = self.needs(a) || self.needs(b);
        self.push("l1_loss", Vec::new(), vec![mean], Op::L1 { a, b }, needs)
    }

    /// Mean squared difference.
    pub fn mse_loss(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mse_loss", a, b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let sum: f64 = av.iter().zip(bv).map(|(&p, &q)| ((p - q) * (p - q)).as_f64()).sum();
        let mean = T::lit(sum / av.len() as f64);
        let needs = self.needs(a) || self.needs(b);
        self.push("mse_loss", Vec::new(), vec![mean], Op::Mse { a, b }, needs)
    }

    /// Backpropagates from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, TensorError> {
        if self.value(loss).len() != 1 {
            return Err(TensorError::NotScalar { shape: self.shape(loss).to_vec() });
        }
        self.backward_with_seed(loss, vec![T::one()])
    }

    /// Vector-Jacobian product: backpropagates `seed` (same length as `out`).
    pub fn backward_with_seed(&self, out: Var, seed: Vec<T>) -> Result<Gradients<T>, TensorError> {
        if seed.len() != self.value(out).len() {
            return Err(mismatch("backward", format!("seed of length {} for {:?}", seed.len(), self.shape(out))));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(seed);
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            if !g.iter().all(|v| v.is_finite()) {
                return Err(TensorError::NonFinite { op: op_name(&node.op), stage: "backward" });
            }
            self.backprop_node(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        match node.op {
            Op::Leaf => {}
            Op::Conv1d { x, w, b, spec } => self.conv1d_backward(node, g, x, w, b, spec, grads),
            Op::ConvTranspose1d { x, w, b, spec } => self.conv_transpose1d_backward(node, g, x, w, b, spec, grads),
            Op::Prelu { x, alpha } => {
                let (ch, len) = (node.shape[1], node.shape[2]);
                let xv = self.value(x);
                let av = self.value(alpha);
                if self.needs(x) {
                    let dx = grad_slot(grads, x, xv.len());
                    for (i, (d, (&gi, &xi))) in dx.iter_mut().zip(g.iter().zip(xv)).enumerate() {
                        *d += if xi > T::zero() { gi } else { gi * av[(i / len) % ch] };
                    }
                }
                if self.needs(alpha) {
                    let da = grad_slot(grads, alpha, ch);
                    for (i, (&gi, &xi)) in g.iter().zip(xv).enumerate() {
                        if xi <= T::zero() {
                            da[(i / len) % ch] += gi * xi;
                        }
                    }
                }
            }
            Op::LeakyRelu { x, slope } => {
                if self.needs(x) {
                    let xv = self.value(x);
                    let dx = grad_slot(grads, x, xv.len());
                    for (d, (&gi, &xi)) in dx.iter_mut().zip(g.iter().zip(xv)) {
                        *d += if xi > T::zero() { gi } else { gi * slope };
                    }
                }
            }
            Op::Tanh { x } => {
                if self.needs(x) {
                    let dx = grad_slot(grads, x, node.value.len());
                    for (d, (&gi, &yi)) in dx.iter_mut().zip(g.iter().zip(&node.value)) {
                        *d += gi * (T::one() - yi * yi);
                    }
                }
            }
            Op::Concat { a, b } => {
                let (batch, len) = (node.shape[0], node.shape[2]);
                let ca = self.shape(a)[1];
                let cb = self.shape(b)[1];
                let stride = (ca + cb) * len;
                if self.needs(a) {
                    let da = grad_slot(grads, a, batch * ca * len);
                    for bi in 0..batch {
                        add_into(&mut da[bi * ca * len..(bi + 1) * ca * len], &g[bi * stride..bi * stride + ca * len]);
                    }
                }
                if self.needs(b) {
                    let db = grad_slot(grads, b, batch * cb * len);
                    for bi in 0..batch {
                        add_into(&mut db[bi * cb * len..(bi + 1) * cb * len], &g[bi * stride + ca * len..(bi + 1) * stride]);
                    }
                }
            }
            Op::Add { a, b } => {
                for v in [a, b] {
                    if self.needs(v) {
                        add_into(grad_slot(grads, v, g.len()), g);
                    }
                }
            }
            Op::Scale { x, factor } => {
                if self.needs(x) {
                    let dx = grad_slot(grads, x, g.len());
                    dx.iter_mut().zip(g).for_each(|(d, &gi)| *d += gi * factor);
                }
            }
            Op::Reshape { x } => {
                if self.needs(x) {
                    add_into(grad_slot(grads, x, g.len()), g);
                }
            }
            Op::L1 { a, b } => {
                let (av, bv) = (self.value(a), self.value(b));
                let scale = g[0] / T::lit(av.len() as f64);
                let sign = |p: T, q: T| {
                    if p > q {
                        scale
                    } else if p < q {
                        -scale
                    } else {
                        T::zero()
                    }
                };
                if self.needs(a) {
                    let da = grad_slot(grads, a, av.len());
                    da.iter_mut().zip(av.iter().zip(bv)).for_each(|(d, (&p, &q))| *d += sign(p, q));
                }
                if self.needs(b) {
                    let db = grad_slot(grads, b, bv.len());
                    db.iter_mut().zip(av.iter().zip(bv)).for_each(|(d, (&p, &q))| *d -= sign(p, q));
                }
            }
            Op::Mse { a, b } => {
                let (av, bv) = (self.value(a), self.value(b));
                let scale = g[0] * T::lit(2.0 / av.len() as f64);
                if self.needs(a) {
                    let da = grad_slot(grads, a, av.len());
                    da.iter_mut().zip(av.iter().zip(bv)).for_each(|(d, (&p, &q))| *d += scale * (p - q));
                }
                if self.needs(b) {
                    let db = grad_slot(grads, b, bv.len());
                    db.iter_mut().zip(av.iter().zip(bv)).for_each(|(d, (&p, &q))| *d -= scale * (p - q));
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conv1d_backward(&self, node: &Node<T>, g: &[T], x: Var, w: Var, b: Option<Var>, spec: ConvSpec, grads: &mut [Option<Vec<T>>]) {
        let (batch, cin, len) = (self.shape(x)[0], self.shape(x)[1], self.shape(x)[2]);
        let (cout, kernel) = (self.shape(w)[0], self.shape(w)[2]);
        let lout = node.shape[2];
        let ck = cin * kernel;
        let xv = self.value(x);
        let wv = self.value(w);
        if let Some(b) = b.filter(|&b| self.needs(b)) {
            bias_grad(grad_slot(grads, b, cout), g, batch, cout, lout);
        }
        let mut cols = vec![T::zero(); ck * lout];
        if self.needs(w) {
            let dw = grad_slot(grads, w, cout * ck);
            for bi in 0..batch {
                im2col(&xv[bi * cin * len..(bi + 1) * cin * len], cin, len, kernel, spec.stride, spec.pad, lout, &mut cols);
                gemm(
                    MatRef::row_major(&g[bi * cout * lout..(bi + 1) * cout * lout], cout, lout),
                    MatRef::row_major(&cols, ck, lout).t(),
                    T::one(),
                    dw,
                );
            }
        }
        if self.needs(x) {
            let dx = grad_slot(grads, x, batch * cin * len);
            for bi in 0..batch {
                gemm(
                    MatRef::row_major(wv, cout, ck).t(),
                    MatRef::row_major(&g[bi * cout * lout..(bi + 1) * cout * lout], cout, lout),
                    T::zero(),
                    &mut cols,
                );
                col2im_add(&cols, cin, len, kernel, spec.stride, spec.pad, lout, &mut dx[bi * cin * len..(bi + 1) * cin * len]);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conv_transpose1d_backward(
        &self,
        node: &Node<T>,
        g: &[T],
        x: Var,
        w: Var,
        b: Option<Var>,
        spec: ConvTransposeSpec,
        grads: &mut [Option<Vec<T>>],
    ) {
        let (batch, cin, len) = (self.shape(x)[0], self.shape(x)[1], self.shape(x)[2]);
        let (cout, kernel) = (self.shape(w)[1], self.shape(w)[2]);
        let lout = node.shape[2];
        let ck = cout * kernel;
        let xv = self.value(x);
        let wv = self.value(w);
        if let Some(b) = b.filter(|&b| self.needs(b)) {
            bias_grad(grad_slot(grads, b, cout), g, batch, cout, lout);
        }
        if !self.needs(w) && !self.needs(x) {
            return;
        }
        let mut cols = vec![T::zero(); ck * len];
        for bi in 0..batch {
            im2col(&g[bi * cout * lout..(bi + 1) * cout * lout], cout, lout, kernel, spec.stride, spec.pad, len, &mut cols);
            if self.needs(w) {
                let dw = grad_slot(grads, w, cin * ck);
                gemm(
                    MatRef::row_major(&xv[bi * cin * len..(bi + 1) * cin * len], cin, len),
                    MatRef::row_major(&cols, ck, len).t(),
                    T::one(),
                    dw,
                );
            }
            if self.needs(x) {
                let dx = grad_slot(grads, x, batch * cin * len);
                gemm(
                    MatRef::row_major(wv, cin, ck),
                    MatRef::row_major(&cols, ck, len),
                    T::one(),
                    &mut dx[bi * cin * len..(bi + 1) * cin * len],
                );
            }
        }
    }
}

fn op_name<T>(op: &Op<T>) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Conv1d { .. } => "conv1d",
        Op::ConvTranspose1d { .. } => "conv_transpose1d",
        Op::Prelu { .. } => "prelu",
        Op::LeakyRelu { .. } => "leaky_relu",
        Op::Tanh { .. } => "tanh",
        Op::Concat { .. } => "concat_channels",
        Op::Add { .. } => "add",
        Op::Scale { .. } => "scale",
        Op::Reshape { .. } => "reshape",
        Op::L1 { .. } => "l1_loss",
        Op::Mse { .. } => "mse_loss",
    }
}

fn grad_slot<T: Scalar>(grads: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut [T] {
    grads[v.0].get_or_insert_with(|| vec![T::zero(); len])
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    dst.iter_mut().zip(src).for_each(|(d, &s)| *d += s);
}

fn add_channel_bias<T: Scalar>(out: &mut [T], bias: &[T], batch: usize, ch: usize, len: usize) {
    for bi in 0..batch {
        for (c, &bv) in bias.iter().enumerate().take(ch) {
            let off = (bi * ch + c) * len;
            out[off..off + len].iter_mut().for_each(|v| *v += bv);
        }
    }
}

fn bias_grad<T: Scalar>(db: &mut [T], g: &[T], batch: usize, ch: usize, len: usize) {
    for bi in 0..batch {
        for (c, d) in db.iter_mut().enumerate().take(ch) {
            let off = (bi * ch + c) * len;
            *d += g[off..off + len].iter().copied().sum::<T>();
        }
    }
}
