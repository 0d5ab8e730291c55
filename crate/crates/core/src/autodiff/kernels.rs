//! Forward and backward loops for the fused ops. Layouts are row-major
//! `[batch, time, channel]`; filters are `[out, in, k]`.

use super::scalar::sigmoid;
use super::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeometry {
    pub stride: usize,
    pub dilation: usize,
    pub pad_left: usize,
}

impl ConvGeometry {
    fn out_len(&self, t: usize, k: usize) -> usize {
        let span = (k - 1) * self.dilation + 1;
        let padded = t + self.pad_left;
        if padded < span {
            0
        } else {
            (padded - span) / self.stride + 1
        }
    }

    /// Input index for output step `t`, tap `j`, or `None` when it falls in the padding.
    #[inline]
    fn src(&self, t: usize, j: usize, len: usize) -> Option<usize> {
        let pos = t * self.stride + j * self.dilation;
        if pos < self.pad_left {
            return None;
        }
        let idx = pos - self.pad_left;
        (idx < len).then_some(idx)
    }
}

/// Eight independent partial sums so the loop vectorises; the order is fixed.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    let pairs = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    s + ((pairs[0] + pairs[2]) + (pairs[1] + pairs[3]))
}

#[inline]
pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (o, &v) in y.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

/// `out[m, n] += a[m, k] * b[k, n]`.
pub(crate) fn matmul_acc<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &av) in arow.iter().enumerate() {
            if av != T::zero() {
                axpy(av, &b[p * n..(p + 1) * n], orow);
            }
        }
    }
}

/// Patch matrix `[F * k, T_out]` for one batch item, row `fi * k + j`, so a
/// filter row `w[li]` lines up with it and the inner loops run over time.
fn patches<T: Scalar>(x: &[T], t: usize, f: usize, k: usize, to: usize, geom: ConvGeometry, out: &mut [T]) {
    for fi in 0..f {
        for j in 0..k {
            let row = &mut out[(fi * k + j) * to..(fi * k + j + 1) * to];
            for (ti, v) in row.iter_mut().enumerate() {
                *v = match geom.src(ti, j, t) {
                    Some(src) => x[src * f + fi],
                    None => T::zero(),
                };
            }
        }
    }
}

pub(crate) fn conv1d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: Option<&Tensor<T>>,
    geom: ConvGeometry,
) -> Tensor<T> {
    let (bn, t, f) = (x.dim(0), x.dim(1), x.dim(2));
    let (l, k) = (w.dim(0), w.dim(2));
    let fk = f * k;
    let to = geom.out_len(t, k);
    let mut out = Tensor::zeros(&[bn, to, l]);
    let od = out.data_mut();
    let (xd, wd) = (x.data(), w.data());
    let mut p = vec![T::zero(); fk * to];
    let mut ot = vec![T::zero(); l * to];
    for bi in 0..bn {
        patches(&xd[bi * t * f..(bi + 1) * t * f], t, f, k, to, geom, &mut p);
        for li in 0..l {
            let orow = &mut ot[li * to..(li + 1) * to];
            orow.fill(b.map_or(T::zero(), |b| b.data()[li]));
            for (q, &wv) in wd[li * fk..(li + 1) * fk].iter().enumerate() {
                axpy(wv, &p[q * to..(q + 1) * to], orow);
            }
        }
        let ob = &mut od[bi * to * l..(bi + 1) * to * l];
        for li in 0..l {
            for ti in 0..to {
                ob[ti * l + li] = ot[li * to + ti];
            }
        }
    }
    out
}

pub(crate) fn conv1d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    g: &Tensor<T>,
    geom: ConvGeometry,
) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
    let (bn, t, f) = (x.dim(0), x.dim(1), x.dim(2));
    let (l, k) = (w.dim(0), w.dim(2));
    let fk = f * k;
    let to = g.dim(1);
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[l]);
    let (xd, wd, gd) = (x.data(), w.data(), g.data());
    let mut p = vec![T::zero(); fk * to];
    let mut dp = vec![T::zero(); fk * to];
    let mut gt = vec![T::zero(); l * to];
    for bi in 0..bn {
        patches(&xd[bi * t * f..(bi + 1) * t * f], t, f, k, to, geom, &mut p);
        let gb = &gd[bi * to * l..(bi + 1) * to * l];
        for li in 0..l {
            for ti in 0..to {
                gt[li * to + ti] = gb[ti * l + li];
            }
        }
        dp.fill(T::zero());
        let dwd = dw.data_mut();
        for li in 0..l {
            let grow = &gt[li * to..(li + 1) * to];
            db.data_mut()[li] += grow.iter().fold(T::zero(), |a, &v| a + v);
            for q in 0..fk {
                dwd[li * fk + q] += dot(grow, &p[q * to..(q + 1) * to]);
                let wv = wd[li * fk + q];
                if wv != T::zero() {
                    axpy(wv, grow, &mut dp[q * to..(q + 1) * to]);
                }
            }
        }
        let dxb = &mut dx.data_mut()[bi * t * f..(bi + 1) * t * f];
        for fi in 0..f {
            for j in 0..k {
                let row = &dp[(fi * k + j) * to..(fi * k + j + 1) * to];
                for (ti, &v) in row.iter().enumerate() {
                    if let Some(src) = geom.src(ti, j, t) {
                        dxb[src * f + fi] += v;
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

pub(crate) fn softmax_rows<T: Scalar>(logits: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); logits.len()];
    for (row, orow) in logits.chunks(n).zip(out.chunks_mut(n)) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for (o, &v) in orow.iter_mut().zip(row) {
            *o = (v - m).exp();
            s += *o;
        }
        for o in orow.iter_mut() {
            *o /= s;
        }
    }
    out
}

/// Post-activation gates `[B, T, 4H]` (i, f, g, o) and cell states `[B, T, H]`.
pub(crate) struct LstmCache<T> {
    gates: Vec<T>,
    cells: Vec<T>,
}

pub(crate) fn lstm_forward<T: Scalar>(
    x: &Tensor<T>,
    w_ih: &Tensor<T>,
    w_hh: &Tensor<T>,
    b: &Tensor<T>,
) -> (Tensor<T>, LstmCache<T>) {
    let (bn, t, c) = (x.dim(0), x.dim(1), x.dim(2));
    let h = w_hh.dim(0);
    let g4 = 4 * h;
    // input projections for every step at once
    let mut gates = vec![T::zero(); bn * t * g4];
    for r in 0..bn * t {
        gates[r * g4..(r + 1) * g4].copy_from_slice(b.data());
    }
    matmul_acc(x.data(), w_ih.data(), &mut gates, bn * t, c, g4);

    let mut cells = vec![T::zero(); bn * t * h];
    let mut out = Tensor::zeros(&[bn, t, h]);
    let od = out.data_mut();
    let whh = w_hh.data();
    for bi in 0..bn {
        for ti in 0..t {
            let row = (bi * t + ti) * g4;
            if ti > 0 {
                let prev = (bi * t + ti - 1) * h;
                let (z, hp) = (&mut gates[row..row + g4], &od[prev..prev + h]);
                for (hi, &hv) in hp.iter().enumerate() {
                    if hv != T::zero() {
                        axpy(hv, &whh[hi * g4..(hi + 1) * g4], z);
                    }
                }
            }
            let z = &mut gates[row..row + g4];
            for q in 0..h {
                z[q] = sigmoid(z[q]);
                z[h + q] = sigmoid(z[h + q]);
                z[2 * h + q] = z[2 * h + q].tanh();
                z[3 * h + q] = sigmoid(z[3 * h + q]);
            }
            let cur = (bi * t + ti) * h;
            for q in 0..h {
                let c_prev = if ti > 0 { cells[cur - h + q] } else { T::zero() };
                let cv = z[h + q] * c_prev + z[q] * z[2 * h + q];
                cells[cur + q] = cv;
                od[cur + q] = z[3 * h + q] * cv.tanh();
            }
        }
    }
    (out, LstmCache { gates, cells })
}

pub(crate) struct LstmGrads<T> {
    pub dx: Tensor<T>,
    pub dw_ih: Tensor<T>,
    pub dw_hh: Tensor<T>,
    pub db: Tensor<T>,
}

pub(crate) fn lstm_backward<T: Scalar>(
    x: &Tensor<T>,
    w_ih: &Tensor<T>,
    w_hh: &Tensor<T>,
    out: &Tensor<T>,
    cache: &LstmCache<T>,
    g: &Tensor<T>,
) -> LstmGrads<T> {
    let (bn, t, c) = (x.dim(0), x.dim(1), x.dim(2));
    let h = w_hh.dim(0);
    let g4 = 4 * h;
    let hd = out.data();
    let gd = g.data();
    let whh = w_hh.data();
    let mut dz_all = vec![T::zero(); bn * t * g4];
    let mut dw_hh = Tensor::zeros(w_hh.shape());
    let mut dh = vec![T::zero(); h];
    let mut dh_next = vec![T::zero(); h];
    let mut dc_next = vec![T::zero(); h];

    for bi in 0..bn {
        dh_next.iter_mut().for_each(|v| *v = T::zero());
        dc_next.iter_mut().for_each(|v| *v = T::zero());
        for ti in (0..t).rev() {
            let cur = (bi * t + ti) * h;
            let row = (bi * t + ti) * g4;
            let z = &cache.gates[row..row + g4];
            for q in 0..h {
                dh[q] = gd[cur + q] + dh_next[q];
            }
            let dz = &mut dz_all[row..row + g4];
            for q in 0..h {
                let (i, f, gg, o) = (z[q], z[h + q], z[2 * h + q], z[3 * h + q]);
                let tc = cache.cells[cur + q].tanh();
                let c_prev = if ti > 0 { cache.cells[cur - h + q] } else { T::zero() };
                let d_o = dh[q] * tc;
                let dc = dh[q] * o * (T::one() - tc * tc) + dc_next[q];
                dc_next[q] = dc * f;
                dz[q] = dc * gg * i * (T::one() - i);
                dz[h + q] = dc * c_prev * f * (T::one() - f);
                dz[2 * h + q] = dc * i * (T::one() - gg * gg);
                dz[3 * h + q] = d_o * o * (T::one() - o);
            }
            for hi in 0..h {
                dh_next[hi] = dot(dz, &whh[hi * g4..(hi + 1) * g4]);
            }
            if ti > 0 {
                let prev = cur - h;
                let dwd = dw_hh.data_mut();
                for hi in 0..h {
                    let hv = hd[prev + hi];
                    if hv != T::zero() {
                        axpy(hv, dz, &mut dwd[hi * g4..(hi + 1) * g4]);
                    }
                }
            }
        }
    }

    let mut dx = Tensor::zeros(x.shape());
    let mut dw_ih = Tensor::zeros(w_ih.shape());
    let mut db = Tensor::zeros(&[g4]);
    let wih = w_ih.data();
    let xd = x.data();
    for r in 0..bn * t {
        let dz = &dz_all[r * g4..(r + 1) * g4];
        for (acc, &v) in db.data_mut().iter_mut().zip(dz) {
            *acc += v;
        }
        let xrow = &xd[r * c..(r + 1) * c];
        let dxrow = &mut dx.data_mut()[r * c..(r + 1) * c];
        for ci in 0..c {
            dxrow[ci] = dot(dz, &wih[ci * g4..(ci + 1) * g4]);
        }
        let dwd = dw_ih.data_mut();
        for (ci, &xv) in xrow.iter().enumerate() {
            if xv != T::zero() {
                axpy(xv, dz, &mut dwd[ci * g4..(ci + 1) * g4]);
            }
        }
    }
    LstmGrads { dx, dw_ih, dw_hh, db }
}
