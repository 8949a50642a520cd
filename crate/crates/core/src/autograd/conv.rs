use super::{matmul, Real};
use crate::error::{invalid, Result};

/// Spatial output size of a convolution along one axis.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (input + 2 * padding - kernel) / stride + 1
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeometry {
    pub(crate) fn new(x: &[usize], w: &[usize], b: &[usize], stride: usize, pad: usize) -> Result<Self> {
        if x.len() != 4 || w.len() != 4 {
            return invalid(format!("conv2d expects 4-D input and weights, got {x:?} and {w:?}"));
        }
        if w[1] != x[1] {
            return invalid(format!("conv2d: input has {} channels, weights expect {}", x[1], w[1]));
        }
        if b.iter().product::<usize>() != w[0] {
            return invalid(format!("conv2d: bias {b:?} does not match {} filters", w[0]));
        }
        if stride == 0 {
            return invalid("conv2d: stride must be positive");
        }
        if x[2] + 2 * pad < w[2] || x[3] + 2 * pad < w[3] {
            return invalid(format!("conv2d: kernel {w:?} larger than padded input {x:?}"));
        }
        Ok(Self {
            n: x[0],
            c: x[1],
            h: x[2],
            w: x[3],
            k: w[0],
            kh: w[2],
            kw: w[3],
            stride,
            pad,
            ho: conv_output_size(x[2], w[2], stride, pad),
            wo: conv_output_size(x[3], w[3], stride, pad),
        })
    }

    pub(crate) fn output_shape(&self) -> [usize; 4] {
        [self.n, self.k, self.ho, self.wo]
    }

    fn patch(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.ho * self.wo
    }
}

/// Column matrix of shape `(C·kh·kw) × (N·Ho·Wo)`.
fn im2col<F: Real>(g: &ConvGeometry, x: &[F]) -> Vec<F> {
    let cols = g.n * g.positions();
    let mut out = vec![F::zero(); g.patch() * cols];
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst_row = &mut out[row * cols..(row + 1) * cols];
                for n in 0..g.n {
                    let src = &x[(n * g.c + c) * g.h * g.w..(n * g.c + c + 1) * g.h * g.w];
                    let dst = &mut dst_row[n * g.positions()..(n + 1) * g.positions()];
                    for oh in 0..g.ho {
                        let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                        if ih < 0 || ih >= g.h as isize {
                            continue;
                        }
                        let src_row = &src[ih as usize * g.w..(ih as usize + 1) * g.w];
                        for ow in 0..g.wo {
                            let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                            if iw >= 0 && iw < g.w as isize {
                                dst[oh * g.wo + ow] = src_row[iw as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn col2im<F: Real>(g: &ConvGeometry, cols_data: &[F]) -> Vec<F> {
    let cols = g.n * g.positions();
    let mut dx = vec![F::zero(); g.n * g.c * g.h * g.w];
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src_row = &cols_data[row * cols..(row + 1) * cols];
                for n in 0..g.n {
                    let dst = &mut dx[(n * g.c + c) * g.h * g.w..(n * g.c + c + 1) * g.h * g.w];
                    let src = &src_row[n * g.positions()..(n + 1) * g.positions()];
                    for oh in 0..g.ho {
                        let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                        if ih < 0 || ih >= g.h as isize {
                            continue;
                        }
                        for ow in 0..g.wo {
                            let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                            if iw >= 0 && iw < g.w as isize {
                                let d = &mut dst[ih as usize * g.w + iw as usize];
                                *d = *d + src[oh * g.wo + ow];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

pub(crate) fn conv2d_forward<F: Real>(g: &ConvGeometry, x: &[F], w: &[F], b: &[F]) -> Vec<F> {
    let cols = im2col(g, x);
    let total = g.n * g.positions();
    // K × (N·Ho·Wo)
    let mut tmp = vec![F::zero(); g.k * total];
    matmul(w, false, &cols, false, &mut tmp, g.k, g.patch(), total, F::zero());
    let p = g.positions();
    let mut out = vec![F::zero(); g.n * g.k * p];
    for k in 0..g.k {
        for n in 0..g.n {
            let src = &tmp[k * total + n * p..k * total + (n + 1) * p];
            let dst = &mut out[(n * g.k + k) * p..(n * g.k + k + 1) * p];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s + b[k];
            }
        }
    }
    out
}

pub(crate) struct ConvGrads<F> {
    pub dx: Option<Vec<F>>,
    pub dw: Vec<F>,
    pub db: Vec<F>,
}

pub(crate) fn conv2d_backward<F: Real>(
    g: &ConvGeometry,
    x: &[F],
    w: &[F],
    dout: &[F],
    want_dx: bool,
) -> ConvGrads<F> {
    let p = g.positions();
    let total = g.n * p;
    // dout N×K×P → K×(N·P)
    let mut dtmp = vec![F::zero(); g.k * total];
    let mut db = vec![F::zero(); g.k];
    for n in 0..g.n {
        for k in 0..g.k {
            let src = &dout[(n * g.k + k) * p..(n * g.k + k + 1) * p];
            dtmp[k * total + n * p..k * total + (n + 1) * p].copy_from_slice(src);
            db[k] = db[k] + src.iter().copied().sum::<F>();
        }
    }
    let cols = im2col(g, x);
    let mut dw = vec![F::zero(); g.k * g.patch()];
    matmul(&dtmp, false, &cols, true, &mut dw, g.k, total, g.patch(), F::zero());
    let dx = want_dx.then(|| {
        let mut dcols = cols;
        matmul(w, true, &dtmp, false, &mut dcols, g.patch(), g.k, total, F::zero());
        col2im(g, &dcols)
    });
    ConvGrads { dx, dw, db }
}
