//! Dense 3-D linear convolution with zero padding.
//!
//! `out[i] = ΔV · Σ_m kernel[m] · f[i − (m − origin)]` over the whole input
//! grid. The FFT route packs the two real operands into one complex
//! transform; the direct route is the plain quadruple sum and serves as a
//! reference on small inputs.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::kernels::SampledKernel3D;

fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

struct Fft3 {
    shape: [usize; 3],
    plans: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(planner: &mut FftPlanner<f64>, shape: [usize; 3], dir: FftDirection) -> Self {
        let plans = std::array::from_fn(|a| planner.plan_fft(shape[a], dir));
        Self { shape, plans }
    }

    fn process(&self, buf: &mut [Complex64]) {
        let [n0, n1, n2] = self.shape;
        let scratch_len = self
            .plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let mut scratch = vec![Complex64::default(); scratch_len];

        for line in buf.chunks_exact_mut(n2) {
            self.plans[2].process_with_scratch(line, &mut scratch);
        }

        let mut line = vec![Complex64::default(); n1.max(n0)];
        for i0 in 0..n0 {
            let plane = &mut buf[i0 * n1 * n2..(i0 + 1) * n1 * n2];
            for i2 in 0..n2 {
                for i1 in 0..n1 {
                    line[i1] = plane[i1 * n2 + i2];
                }
                self.plans[1].process_with_scratch(&mut line[..n1], &mut scratch);
                for i1 in 0..n1 {
                    plane[i1 * n2 + i2] = line[i1];
                }
            }
        }

        let stride = n1 * n2;
        for r in 0..stride {
            for i0 in 0..n0 {
                line[i0] = buf[i0 * stride + r];
            }
            self.plans[0].process_with_scratch(&mut line[..n0], &mut scratch);
            for i0 in 0..n0 {
                buf[i0 * stride + r] = line[i0];
            }
        }
    }
}

pub(crate) fn convolve_fft(f: &[f64], shape: [usize; 3], k: &SampledKernel3D) -> Vec<f64> {
    let padded: [usize; 3] = std::array::from_fn(|a| smooth_size(shape[a] + k.shape[a] - 1));
    let [p0, p1, p2] = padded;
    let total = p0 * p1 * p2;
    let mut buf = vec![Complex64::default(); total];

    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            let src = (i0 * shape[1] + i1) * shape[2];
            let dst = (i0 * p1 + i1) * p2;
            for i2 in 0..shape[2] {
                buf[dst + i2].re = f[src + i2];
            }
        }
    }
    for m0 in 0..k.shape[0] {
        for m1 in 0..k.shape[1] {
            let src = (m0 * k.shape[1] + m1) * k.shape[2];
            let dst = (m0 * p1 + m1) * p2;
            for m2 in 0..k.shape[2] {
                buf[dst + m2].im = k.values[src + m2];
            }
        }
    }

    let mut planner = FftPlanner::new();
    Fft3::new(&mut planner, padded, FftDirection::Forward).process(&mut buf);

    // Z = F + iK with F, K Hermitian-symmetric; F·K = (Z² − conj(Z₋)²) / 4i.
    let mirror = |i: usize, n: usize| if i == 0 { 0 } else { n - i };
    let quarter_i = Complex64::new(0.0, -0.25);
    for i0 in 0..p0 {
        let m0 = mirror(i0, p0);
        for i1 in 0..p1 {
            let m1 = mirror(i1, p1);
            for i2 in 0..p2 {
                let m2 = mirror(i2, p2);
                let a = (i0 * p1 + i1) * p2 + i2;
                let b = (m0 * p1 + m1) * p2 + m2;
                if b < a {
                    continue;
                }
                let za = buf[a];
                let zb = buf[b];
                let pa = (za * za - zb.conj() * zb.conj()) * quarter_i;
                let pb = (zb * zb - za.conj() * za.conj()) * quarter_i;
                buf[a] = pa;
                buf[b] = pb;
            }
        }
    }

    Fft3::new(&mut planner, padded, FftDirection::Inverse).process(&mut buf);

    let scale = k.spacing.iter().product::<f64>() / total as f64;
    let mut out = vec![0.0; f.len()];
    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            let dst = (i0 * shape[1] + i1) * shape[2];
            let src = ((i0 + k.origin[0]) * p1 + i1 + k.origin[1]) * p2 + k.origin[2];
            for i2 in 0..shape[2] {
                out[dst + i2] = buf[src + i2].re * scale;
            }
        }
    }
    out
}

pub(crate) fn convolve_direct(f: &[f64], shape: [usize; 3], k: &SampledKernel3D) -> Vec<f64> {
    let cell = k.spacing.iter().product::<f64>();
    let mut out = vec![0.0; f.len()];
    let off = k.offsets();
    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            for i2 in 0..shape[2] {
                let i = [i0 as isize, i1 as isize, i2 as isize];
                let mut acc = 0.0;
                for j0 in off[0].0..=off[0].1 {
                    let s0 = i[0] - j0;
                    if s0 < 0 || s0 >= shape[0] as isize {
                        continue;
                    }
                    for j1 in off[1].0..=off[1].1 {
                        let s1 = i[1] - j1;
                        if s1 < 0 || s1 >= shape[1] as isize {
                            continue;
                        }
                        let krow = (((j0 - off[0].0) as usize) * k.shape[1] + (j1 - off[1].0) as usize) * k.shape[2];
                        let frow = (s0 as usize * shape[1] + s1 as usize) * shape[2];
                        for j2 in off[2].0..=off[2].1 {
                            let s2 = i[2] - j2;
                            if s2 < 0 || s2 >= shape[2] as isize {
                                continue;
                            }
                            acc += k.values[krow + (j2 - off[2].0) as usize] * f[frow + s2 as usize];
                        }
                    }
                }
                out[(i0 * shape[1] + i1) * shape[2] + i2] = acc * cell;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(rng: &mut ChaCha8Rng, shape: [usize; 3], origin: [usize; 3]) -> SampledKernel3D {
        SampledKernel3D {
            values: (0..shape.iter().product())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            shape,
            origin,
            spacing: [1.0, 0.5, 2.0],
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(13), 14);
        assert_eq!(smooth_size(97), 98);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (shape, kshape, origin) in [
            ([7, 5, 9], [3, 4, 5], [1, 2, 0]),
            ([4, 6, 3], [5, 1, 2], [4, 0, 1]),
            ([1, 1, 8], [1, 1, 3], [0, 0, 0]),
        ] {
            let f: Vec<f64> = (0..shape.iter().product())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let k = random_kernel(&mut rng, kshape, origin);
            let a = convolve_fft(&f, shape, &k);
            let b = convolve_direct(&f, shape, &k);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_kernel(&mut rng, [3, 3, 3], [1, 1, 1]);
        let shape = [5, 5, 5];
        let mut f = vec![0.0; 125];
        f[(2 * 5 + 2) * 5 + 2] = 1.0;
        let out = convolve_fft(&f, shape, &k);
        let cell = 1.0;
        for m0 in 0..3 {
            for m1 in 0..3 {
                for m2 in 0..3 {
                    let o = out[((1 + m0) * 5 + 1 + m1) * 5 + 1 + m2];
                    let kv = k.values[(m0 * 3 + m1) * 3 + m2] * k.spacing.iter().product::<f64>() * cell;
                    assert!((o - kv).abs() < 1e-14);
                }
            }
        }
    }
}
