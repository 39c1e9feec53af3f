//! 1D convolution and its adjoint, the transposed convolution.
//!
//! Both are lowered to one matrix product over the whole batch through an
//! `im2col` buffer with rows `(channel, tap)` and columns `(sample, position)`.
//! The transposed convolution is literally the adjoint map: it scatters with
//! `col2im` what the convolution gathers with `im2col`, using the same weight
//! array.

use super::gemm::{gemm, MatRef};
use super::tensor::{fmt_dims, Batch3};
use crate::{Error, Result};

/// Weights and geometry shared by [`conv1d_forward`] and [`tconv1d_forward`].
///
/// Weights are stored as `(d0, d1, kernel)` row-major. For a convolution
/// `d0` is the output channel count and `d1` the input channel count. A
/// transposed convolution reuses the same array as the adjoint of that
/// convolution, so it reads `d0` channels and writes `d1` channels; its bias
/// therefore has length `d1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    dims: [usize; 3],
    pub stride: usize,
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    /// Zero-initialised convolution mapping `in_channels → out_channels`.
    pub fn conv(
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Self {
            weights: vec![0.0; out_channels * in_channels * kernel],
            bias: vec![0.0; out_channels],
            dims: [out_channels, in_channels, kernel],
            stride,
            padding,
        }
    }

    /// Zero-initialised transposed convolution mapping
    /// `in_channels → out_channels`.
    pub fn transposed(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Self {
            weights: vec![0.0; in_channels * out_channels * kernel],
            bias: vec![0.0; out_channels],
            dims: [in_channels, out_channels, kernel],
            stride,
            padding,
        }
    }

    pub fn from_parts(
        weights: Vec<f64>,
        dims: [usize; 3],
        bias: Vec<f64>,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        if dims.contains(&0) || stride == 0 {
            return Err(Error::InvalidConfig(format!(
                "conv dims {dims:?} and stride {stride} must be positive"
            )));
        }
        if weights.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::shape(
                "ConvParams::from_parts",
                dims[0] * dims[1] * dims[2],
                weights.len(),
            ));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite convolution parameter".into()));
        }
        Ok(Self {
            weights,
            bias,
            dims,
            stride,
            padding,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn kernel(&self) -> usize {
        self.dims[2]
    }

    fn check_bias(&self, op: &'static str, want: usize) -> Result<()> {
        if self.bias.len() != want {
            return Err(Error::shape(
                op,
                format!("bias of length {want}"),
                self.bias.len(),
            ));
        }
        Ok(())
    }
}

/// `floor((len + 2·padding − kernel) / stride) + 1`, or `None` when the
/// padded input is shorter than the kernel.
pub fn conv_output_len(len: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = len + 2 * padding;
    if stride == 0 || padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// `(len − 1)·stride − 2·padding + kernel + output_padding`, or `None` when
/// that is not positive.
pub fn tconv_output_len(
    len: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    output_padding: usize,
) -> Option<usize> {
    let grown = (len.checked_sub(1)?) * stride + kernel + output_padding;
    grown.checked_sub(2 * padding).filter(|&l| l > 0)
}

struct Geometry {
    batch: usize,
    channels: usize,
    /// Length of the "wide" side: the conv input / tconv output.
    wide: usize,
    /// Length of the "narrow" side: the conv output / tconv input.
    narrow: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
}

impl Geometry {
    fn cols(&self) -> usize {
        self.batch * self.narrow
    }

    /// Wide-side position touched by tap `k` of narrow position `t`.
    #[inline]
    fn source(&self, t: usize, k: usize) -> Option<usize> {
        (t * self.stride + k)
            .checked_sub(self.padding)
            .filter(|&p| p < self.wide)
    }
}

/// Gathers `(B, C, wide)` into a `(C·K) × (B·narrow)` matrix.
fn im2col(x: &Batch3, g: &Geometry) -> Vec<f64> {
    let cols = g.cols();
    let mut col = vec![0.0; g.channels * g.kernel * cols];
    for c in 0..g.channels {
        for k in 0..g.kernel {
            let row = &mut col[(c * g.kernel + k) * cols..(c * g.kernel + k + 1) * cols];
            for b in 0..g.batch {
                let src = x.row(b, c);
                let dst = &mut row[b * g.narrow..(b + 1) * g.narrow];
                for (t, d) in dst.iter_mut().enumerate() {
                    if let Some(p) = g.source(t, k) {
                        *d = src[p];
                    }
                }
            }
        }
    }
    col
}

/// Scatter-adds a `(C·K) × (B·narrow)` matrix into a `(B, C, wide)` batch.
fn col2im(col: &[f64], g: &Geometry) -> Batch3 {
    let cols = g.cols();
    let mut out = Batch3::zeros(g.batch, g.channels, g.wide);
    let wide = g.wide;
    let data = out.data_mut();
    for b in 0..g.batch {
        for c in 0..g.channels {
            let dst = &mut data[(b * g.channels + c) * wide..(b * g.channels + c + 1) * wide];
            for k in 0..g.kernel {
                let src = &col[(c * g.kernel + k) * cols + b * g.narrow..][..g.narrow];
                for (t, &v) in src.iter().enumerate() {
                    if let Some(p) = g.source(t, k) {
                        dst[p] += v;
                    }
                }
            }
        }
    }
    out
}

fn add_bias(x: &mut Batch3, bias: &[f64]) {
    let (b_n, c_n, l_n) = x.dims();
    let data = x.data_mut();
    for b in 0..b_n {
        for (c, &beta) in bias.iter().enumerate().take(c_n) {
            let start = (b * c_n + c) * l_n;
            data[start..start + l_n].iter_mut().for_each(|v| *v += beta);
        }
    }
}

fn bias_grad(grad_out: &Batch3) -> Vec<f64> {
    let (b_n, c_n, _) = grad_out.dims();
    let mut g = vec![0.0; c_n];
    for b in 0..b_n {
        for (c, gc) in g.iter_mut().enumerate() {
            *gc += grad_out.row(b, c).iter().sum::<f64>();
        }
    }
    g
}

fn conv_geometry(input: &Batch3, p: &ConvParams, op: &'static str) -> Result<Geometry> {
    let [c_out, c_in, k] = p.dims;
    let (b, c, l) = input.dims();
    if c != c_in {
        return Err(Error::shape(
            op,
            format!("{c_in} input channels"),
            format!("input dims {}", fmt_dims(input.dims())),
        ));
    }
    p.check_bias(op, c_out)?;
    let narrow = conv_output_len(l, k, p.stride, p.padding).ok_or_else(|| {
        Error::shape(
            op,
            format!("padded length ≥ kernel {k}"),
            format!("length {l} with padding {}", p.padding),
        )
    })?;
    Ok(Geometry {
        batch: b,
        channels: c_in,
        wide: l,
        narrow,
        kernel: k,
        stride: p.stride,
        padding: p.padding,
    })
}

/// Cross-correlation `out[b, o, t] = bias[o] + Σ_{i,k} w[o, i, k]·x[b, i, t·stride + k − padding]`
/// with zero padding.
pub fn conv1d_forward(input: &Batch3, p: &ConvParams) -> Result<Batch3> {
    let g = conv_geometry(input, p, "conv1d_forward")?;
    let [c_out, c_in, k] = p.dims;
    let col = im2col(input, &g);
    let mut out_cm = vec![0.0; c_out * g.cols()];
    gemm(
        MatRef::row_major(&p.weights, c_out, c_in * k),
        MatRef::row_major(&col, c_in * k, g.cols()),
        0.0,
        &mut out_cm,
    );
    let mut out = Batch3::from_channel_major(g.batch, c_out, g.narrow, &out_cm);
    add_bias(&mut out, &p.bias);
    Ok(out)
}

/// Gradients of a scalar loss with respect to the convolution input,
/// weights and bias, given the loss gradient at the forward output.
pub fn conv1d_backward(
    input: &Batch3,
    p: &ConvParams,
    grad_out: &Batch3,
) -> Result<(Batch3, ConvGrads)> {
    let g = conv_geometry(input, p, "conv1d_backward")?;
    let [c_out, c_in, k] = p.dims;
    grad_out.expect_dims("conv1d_backward", (g.batch, c_out, g.narrow))?;
    let col = im2col(input, &g);
    let gout_cm = grad_out.to_channel_major();
    let gout = MatRef::row_major(&gout_cm, c_out, g.cols());

    let mut grad_w = vec![0.0; c_out * c_in * k];
    gemm(
        gout,
        MatRef::row_major(&col, c_in * k, g.cols()).t(),
        0.0,
        &mut grad_w,
    );

    let mut grad_col = vec![0.0; c_in * k * g.cols()];
    gemm(
        MatRef::row_major(&p.weights, c_out, c_in * k).t(),
        gout,
        0.0,
        &mut grad_col,
    );
    let grad_in = col2im(&grad_col, &g);
    Ok((
        grad_in,
        ConvGrads {
            weights: grad_w,
            bias: bias_grad(grad_out),
        },
    ))
}

fn tconv_geometry(
    input: &Batch3,
    p: &ConvParams,
    output_padding: usize,
    op: &'static str,
) -> Result<Geometry> {
    let [c_in, c_out, k] = p.dims;
    let (b, c, l) = input.dims();
    if c != c_in {
        return Err(Error::shape(
            op,
            format!("{c_in} input channels"),
            format!("input dims {}", fmt_dims(input.dims())),
        ));
    }
    if output_padding >= p.stride {
        return Err(Error::InvalidConfig(format!(
            "{op}: output_padding {output_padding} must be smaller than stride {}",
            p.stride
        )));
    }
    p.check_bias(op, c_out)?;
    let wide = tconv_output_len(l, k, p.stride, p.padding, output_padding).ok_or_else(|| {
        Error::shape(
            op,
            "positive output length",
            format!("length {l}, kernel {k}, padding {}", p.padding),
        )
    })?;
    Ok(Geometry {
        batch: b,
        channels: c_out,
        wide,
        narrow: l,
        kernel: k,
        stride: p.stride,
        padding: p.padding,
    })
}

/// Transposed convolution: the adjoint of [`conv1d_forward`] with the same
/// weight array, plus a bias over the `d1` output channels.
pub fn tconv1d_forward(input: &Batch3, p: &ConvParams, output_padding: usize) -> Result<Batch3> {
    let g = tconv_geometry(input, p, output_padding, "tconv1d_forward")?;
    let [c_in, c_out, k] = p.dims;
    let in_cm = input.to_channel_major();
    let mut col = vec![0.0; c_out * k * g.cols()];
    gemm(
        MatRef::row_major(&p.weights, c_in, c_out * k).t(),
        MatRef::row_major(&in_cm, c_in, g.cols()),
        0.0,
        &mut col,
    );
    let mut out = col2im(&col, &g);
    add_bias(&mut out, &p.bias);
    Ok(out)
}

/// The output padding is recovered from the gradient's length.
pub fn tconv1d_backward(
    input: &Batch3,
    p: &ConvParams,
    grad_out: &Batch3,
) -> Result<(Batch3, ConvGrads)> {
    let [c_in, c_out, k] = p.dims;
    let base = tconv_output_len(input.len(), k, p.stride, p.padding, 0).unwrap_or(0);
    let output_padding = grad_out.len().checked_sub(base).ok_or_else(|| {
        Error::shape(
            "tconv1d_backward",
            format!("gradient length ≥ {base}"),
            grad_out.len(),
        )
    })?;
    let g = tconv_geometry(input, p, output_padding, "tconv1d_backward")?;
    grad_out.expect_dims("tconv1d_backward", (g.batch, c_out, g.wide))?;

    let gcol = im2col(grad_out, &g);
    let gcol_ref = MatRef::row_major(&gcol, c_out * k, g.cols());

    let mut grad_in_cm = vec![0.0; c_in * g.cols()];
    gemm(
        MatRef::row_major(&p.weights, c_in, c_out * k),
        gcol_ref,
        0.0,
        &mut grad_in_cm,
    );
    let grad_in = Batch3::from_channel_major(g.batch, c_in, g.narrow, &grad_in_cm);

    let in_cm = input.to_channel_major();
    let mut grad_w = vec![0.0; c_in * c_out * k];
    gemm(
        MatRef::row_major(&in_cm, c_in, g.cols()),
        gcol_ref.t(),
        0.0,
        &mut grad_w,
    );
    Ok((
        grad_in,
        ConvGrads {
            weights: grad_w,
            bias: bias_grad(grad_out),
        },
    ))
}
