use super::{Mode, Real};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

pub(crate) struct BnSaved<F> {
    xhat: Vec<F>,
    inv_std: Vec<F>,
    train: bool,
}

pub(crate) fn batchnorm_forward<F: Real>(
    shape: &[usize],
    x: &[F],
    gamma: &[F],
    beta: &[F],
    running_mean: &mut [F],
    running_var: &mut [F],
    mode: Mode,
) -> (Vec<F>, BnSaved<F>) {
    let (n, c, plane) = (shape[0], shape[1], shape[2] * shape[3]);
    let m = (n * plane) as f64;
    let mut xhat = vec![F::zero(); x.len()];
    let mut y = vec![F::zero(); x.len()];
    let mut inv_std = vec![F::zero(); c];
    for ch in 0..c {
        let slices = (0..n).map(|i| (i * c + ch) * plane..(i * c + ch + 1) * plane);
        let (mean, var) = match mode {
            Mode::Train => {
                let mut sum = 0.0;
                for r in slices.clone() {
                    sum += x[r].iter().map(|v| v.as_f64()).sum::<f64>();
                }
                let mean = sum / m;
                let mut sq = 0.0;
                for r in slices.clone() {
                    sq += x[r].iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>();
                }
                let var = sq / m;
                let mom = BN_MOMENTUM;
                running_mean[ch] = F::from_f64_lossy((1.0 - mom) * running_mean[ch].as_f64() + mom * mean);
                let unbiased = if m > 1.0 { var * m / (m - 1.0) } else { var };
                running_var[ch] = F::from_f64_lossy((1.0 - mom) * running_var[ch].as_f64() + mom * unbiased);
                (mean, var)
            }
            Mode::Eval => (running_mean[ch].as_f64(), running_var[ch].as_f64()),
        };
        let istd = 1.0 / (var + BN_EPS).sqrt();
        inv_std[ch] = F::from_f64_lossy(istd);
        let (mean_f, istd_f) = (F::from_f64_lossy(mean), inv_std[ch]);
        for r in slices {
            for i in r {
                let h = (x[i] - mean_f) * istd_f;
                xhat[i] = h;
                y[i] = gamma[ch] * h + beta[ch];
            }
        }
    }
    (
        y,
        BnSaved {
            xhat,
            inv_std,
            train: mode == Mode::Train,
        },
    )
}

pub(crate) fn batchnorm_backward<F: Real>(
    shape: &[usize],
    gamma: &[F],
    saved: &BnSaved<F>,
    dy: &[F],
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let (n, c, plane) = (shape[0], shape[1], shape[2] * shape[3]);
    let m = F::from_usize(n * plane).unwrap();
    let mut dx = vec![F::zero(); dy.len()];
    let mut dgamma = vec![F::zero(); c];
    let mut dbeta = vec![F::zero(); c];
    for ch in 0..c {
        let slices = (0..n).map(|i| (i * c + ch) * plane..(i * c + ch + 1) * plane);
        let (mut sg, mut sb) = (0.0f64, 0.0f64);
        for r in slices.clone() {
            for i in r {
                sg += (dy[i] * saved.xhat[i]).as_f64();
                sb += dy[i].as_f64();
            }
        }
        dgamma[ch] = F::from_f64_lossy(sg);
        dbeta[ch] = F::from_f64_lossy(sb);
        let k = gamma[ch] * saved.inv_std[ch];
        if saved.train {
            let (sg, sb) = (dgamma[ch], dbeta[ch]);
            for r in slices {
                for i in r {
                    dx[i] = k / m * (m * dy[i] - sb - saved.xhat[i] * sg);
                }
            }
        } else {
            for r in slices {
                for i in r {
                    dx[i] = k * dy[i];
                }
            }
        }
    }
    (dx, dgamma, dbeta)
}
