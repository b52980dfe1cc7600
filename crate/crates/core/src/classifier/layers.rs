//! Forward and backward kernels on flat channel-major buffers.
//!
//! Backward kernels add into parameter gradients and overwrite input
//! gradients.

use super::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub in_h: usize,
    pub in_w: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        self.in_h - self.k + 1
    }

    pub fn out_w(&self) -> usize {
        self.in_w - self.k + 1
    }

    fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_c + i) * self.k + ky) * self.k + kx
    }
}

pub(crate) fn conv_forward<T: Scalar>(g: &ConvGeom, w: &[T], b: &[T], input: &[T], out: &mut [T]) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let in_plane = g.in_h * g.in_w;
    for o in 0..g.out_c {
        let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        plane.fill(b[o]);
        for i in 0..g.in_c {
            let src = &input[i * in_plane..(i + 1) * in_plane];
            for ky in 0..g.k {
                for kx in 0..g.k {
                    let wv = w[g.weight(o, i, ky, kx)];
                    for y in 0..oh {
                        let row = &src[(y + ky) * g.in_w + kx..][..ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, &s) in dst.iter_mut().zip(row) {
                            *d = *d + wv * s;
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_backward<T: Scalar>(
    g: &ConvGeom,
    w: &[T],
    input: &[T],
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    mut din: Option<&mut [T]>,
) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let in_plane = g.in_h * g.in_w;
    if let Some(d) = din.as_deref_mut() {
        d.fill(T::zero());
    }
    for o in 0..g.out_c {
        let grad = &dout[o * oh * ow..(o + 1) * oh * ow];
        db[o] = db[o] + grad.iter().copied().sum();
        for i in 0..g.in_c {
            let src = &input[i * in_plane..(i + 1) * in_plane];
            for ky in 0..g.k {
                for kx in 0..g.k {
                    let mut acc = T::zero();
                    for y in 0..oh {
                        let row = &src[(y + ky) * g.in_w + kx..][..ow];
                        let gr = &grad[y * ow..(y + 1) * ow];
                        acc = acc + gr.iter().zip(row).map(|(&a, &b)| a * b).sum();
                    }
                    let wi = g.weight(o, i, ky, kx);
                    dw[wi] = dw[wi] + acc;
                    if let Some(d) = din.as_deref_mut() {
                        let wv = w[wi];
                        let dplane = &mut d[i * in_plane..(i + 1) * in_plane];
                        for y in 0..oh {
                            let drow = &mut dplane[(y + ky) * g.in_w + kx..][..ow];
                            let gr = &grad[y * ow..(y + 1) * ow];
                            for (d, &v) in drow.iter_mut().zip(gr) {
                                *d = *d + wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn pool_forward<T: Scalar>(c: usize, h: usize, w: usize, s: usize, input: &[T], out: &mut [T]) {
    let (oh, ow) = (h / s, w / s);
    let scale = T::one() / super::cast((s * s) as f64);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = T::zero();
                for dy in 0..s {
                    let row = &input[(ch * h + y * s + dy) * w + x * s..][..s];
                    acc = acc + row.iter().copied().sum();
                }
                out[(ch * oh + y) * ow + x] = acc * scale;
            }
        }
    }
}

pub(crate) fn pool_backward<T: Scalar>(c: usize, h: usize, w: usize, s: usize, dout: &[T], din: &mut [T]) {
    let (oh, ow) = (h / s, w / s);
    let scale = T::one() / super::cast((s * s) as f64);
    din.fill(T::zero());
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let g = dout[(ch * oh + y) * ow + x] * scale;
                for dy in 0..s {
                    for v in &mut din[(ch * h + y * s + dy) * w + x * s..][..s] {
                        *v = g;
                    }
                }
            }
        }
    }
}

pub(crate) fn tanh_forward<T: Scalar>(input: &[T], out: &mut [T]) {
    for (o, &v) in out.iter_mut().zip(input) {
        *o = v.tanh();
    }
}

/// Uses the layer output: d tanh = 1 - tanh².
pub(crate) fn tanh_backward<T: Scalar>(output: &[T], dout: &[T], din: &mut [T]) {
    for ((d, &y), &g) in din.iter_mut().zip(output).zip(dout) {
        *d = g * (T::one() - y * y);
    }
}

pub(crate) fn dense_forward<T: Scalar>(inputs: usize, w: &[T], b: &[T], x: &[T], out: &mut [T]) {
    for (j, o) in out.iter_mut().enumerate() {
        let row = &w[j * inputs..(j + 1) * inputs];
        *o = b[j] + row.iter().zip(x).map(|(&a, &v)| a * v).sum();
    }
}

pub(crate) fn dense_backward<T: Scalar>(
    inputs: usize,
    w: &[T],
    x: &[T],
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    mut dx: Option<&mut [T]>,
) {
    if let Some(d) = dx.as_deref_mut() {
        d.fill(T::zero());
    }
    for (j, &g) in dout.iter().enumerate() {
        db[j] = db[j] + g;
        let wrow = &w[j * inputs..(j + 1) * inputs];
        let dwrow = &mut dw[j * inputs..(j + 1) * inputs];
        for (d, &v) in dwrow.iter_mut().zip(x) {
            *d = *d + g * v;
        }
        if let Some(d) = dx.as_deref_mut() {
            for (d, &wv) in d.iter_mut().zip(wrow) {
                *d = *d + g * wv;
            }
        }
    }
}
