//! Small dense kernels. Every reduction runs in a fixed order so results are
//! bitwise reproducible regardless of how agents are scheduled.

/// Dot product with eight interleaved partial sums (vectorizes without
/// reassociation, and the summation order is fixed by the code).
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        let x: &[f32; 8] = x.try_into().unwrap();
        let y: &[f32; 8] = y.try_into().unwrap();
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    reduce(&acc, tail)
}

#[inline(always)]
fn reduce(acc: &[f32; 8], tail: f32) -> f32 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Outputs handled per pass; their partial sums stay in registers.
const BLOCK: usize = 32;

/// `out += W x` for input-major `W` (`[x.len(), out.len()]`). Each output
/// accumulates its terms strictly in input order, so lanes are independent
/// and the result does not depend on vector width.
#[inline(always)]
fn matvec_acc_generic(w: &[f32], x: &[f32], out: &mut [f32]) {
    let m = out.len();
    let mut start = 0;
    while start < m {
        let len = BLOCK.min(m - start);
        if len == BLOCK {
            let mut acc: [f32; BLOCK] = out[start..start + BLOCK].try_into().unwrap();
            for (j, &xj) in x.iter().enumerate() {
                let col: &[f32; BLOCK] = w[j * m + start..j * m + start + BLOCK].try_into().unwrap();
                for k in 0..BLOCK {
                    acc[k] += col[k] * xj;
                }
            }
            out[start..start + BLOCK].copy_from_slice(&acc);
        } else {
            let acc = &mut out[start..start + len];
            for (j, &xj) in x.iter().enumerate() {
                let col = &w[j * m + start..j * m + start + len];
                for (a, c) in acc.iter_mut().zip(col) {
                    *a += c * xj;
                }
            }
        }
        start += len;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn matvec_acc_avx(w: &[f32], x: &[f32], out: &mut [f32]) {
    matvec_acc_generic(w, x, out);
}

#[cfg(target_arch = "x86_64")]
#[inline]
fn has_avx() -> bool {
    std::arch::is_x86_feature_detected!("avx")
}

/// `out += W x` with `W` stored input-major: entry `(j, o)` at `j * out.len() + o`.
///
/// Uses wider registers when the CPU has them; the arithmetic (unfused
/// multiply then add, same order) and therefore the result is unchanged.
#[inline]
pub fn linear_acc(w: &[f32], x: &[f32], out: &mut [f32]) {
    assert_eq!(w.len(), out.len() * x.len());
    #[cfg(target_arch = "x86_64")]
    if has_avx() {
        // SAFETY: the feature was detected at runtime
        unsafe { matvec_acc_avx(w, x, out) };
        return;
    }
    matvec_acc_generic(w, x, out);
}

/// `out = b + W x`, same layout as [`linear_acc`].
#[inline]
pub fn linear(w: &[f32], b: &[f32], x: &[f32], out: &mut [f32]) {
    out.copy_from_slice(b);
    linear_acc(w, x, out);
}

/// Hyperbolic tangent as a clamped 13/6 rational function (the Eigen
/// coefficients). Branch-free, so slice loops vectorize; absolute error
/// stays below 1e-6. NaN propagates.
#[inline(always)]
pub fn tanh(x: f32) -> f32 {
    const CLAMP: f32 = 7.905_311;
    const A: [f32; 7] = [
        4.893_524_6e-3,
        6.372_619_3e-4,
        1.485_722_4e-5,
        5.122_297e-8,
        -8.604_671_5e-11,
        2.000_187_9e-13,
        -2.760_768_5e-16,
    ];
    const B: [f32; 4] = [4.893_525e-3, 2.268_434_6e-3, 1.185_347e-4, 1.198_258_4e-6];
    let x = x.clamp(-CLAMP, CLAMP);
    let x2 = x * x;
    let mut p = A[6];
    for a in A[..6].iter().rev() {
        p = p * x2 + a;
    }
    let p = x * p;
    let mut q = B[3];
    for b in B[..3].iter().rev() {
        q = q * x2 + b;
    }
    p / q
}

#[inline]
pub fn tanh_inplace(x: &mut [f32]) {
    for v in x {
        *v = tanh(*v);
    }
}

#[inline(always)]
pub fn sigmoid(x: f32) -> f32 {
    0.5 + 0.5 * tanh(0.5 * x)
}

#[inline]
pub fn sigmoid_inplace(x: &mut [f32]) {
    for v in x {
        *v = sigmoid(*v);
    }
}

/// Softmax over `scores` restricted to `mask`; masked entries get weight 0.
/// All-masked input yields all zeros.
pub fn masked_softmax(scores: &mut [f32], mask: &[bool]) {
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(f32::NEG_INFINITY, f32::max);
    if max == f32::NEG_INFINITY {
        scores.fill(0.0);
        return;
    }
    let mut sum = 0.0f32;
    for (s, &m) in scores.iter_mut().zip(mask) {
        *s = if m { (*s - max).exp() } else { 0.0 };
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}
