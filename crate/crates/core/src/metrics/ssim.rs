use super::features::log_mel;
use crate::audio::Waveform;
use crate::error::{Error, Result};

const WIN: usize = 8;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Summed-area table with a zero border row and column.
struct Integral {
    cols: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let w = cols + 1;
        let mut data = vec![0.0; (rows + 1) * w];
        for i in 0..rows {
            let mut row_sum = 0.0;
            for j in 0..cols {
                row_sum += f(i, j);
                data[(i + 1) * w + j + 1] = data[i * w + j + 1] + row_sum;
            }
        }
        Self { cols, data }
    }

    fn window_sum(&self, i: usize, j: usize) -> f64 {
        let w = self.cols + 1;
        let (i2, j2) = (i + WIN, j + WIN);
        self.data[i2 * w + j2] - self.data[i * w + j2] - self.data[i2 * w + j] + self.data[i * w + j]
    }
}

/// Mean SSIM over every 8x8 window of two equally sized matrices.
pub fn ssim_2d(a: &[Vec<f64>], b: &[Vec<f64>], dynamic_range: f64) -> Result<f64> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if b.len() != rows || b.first().map_or(0, Vec::len) != cols {
        return Err(Error::ShapeMismatch("ssim inputs differ in shape".into()));
    }
    if rows < WIN || cols < WIN {
        return Err(Error::TooShort { needed: WIN, got: rows.min(cols) });
    }
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let sa = Integral::new(rows, cols, |i, j| a[i][j]);
    let sb = Integral::new(rows, cols, |i, j| b[i][j]);
    let saa = Integral::new(rows, cols, |i, j| a[i][j] * a[i][j]);
    let sbb = Integral::new(rows, cols, |i, j| b[i][j] * b[i][j]);
    let sab = Integral::new(rows, cols, |i, j| a[i][j] * b[i][j]);
    let n = (WIN * WIN) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..=rows - WIN {
        for j in 0..=cols - WIN {
            let ma = sa.window_sum(i, j) / n;
            let mb = sb.window_sum(i, j) / n;
            let va = (saa.window_sum(i, j) / n - ma * ma).max(0.0);
            let vb = (sbb.window_sum(i, j) / n - mb * mb).max(0.0);
            let cov = sab.window_sum(i, j) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

/// SSIM between the dB mel spectrograms of two equally long waveforms.
///
/// Each spectrogram is referenced to its own maximum, so a global gain change has no effect.
pub fn mel_ssim(a: &Waveform, b: &Waveform) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let relative = |wf: &Waveform| -> Result<Vec<Vec<f64>>> {
        let mut db = log_mel(wf)?;
        let max = db.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        db.iter_mut().flatten().for_each(|v| *v -= max);
        Ok(db)
    };
    let (da, db) = (relative(a)?, relative(b)?);
    let (lo, hi) = da
        .iter()
        .chain(&db)
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ssim_2d(&da, &db, (hi - lo).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn naive(a: &[Vec<f64>], b: &[Vec<f64>], l: f64) -> f64 {
        let (c1, c2) = ((K1 * l).powi(2), (K2 * l).powi(2));
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..=a.len() - WIN {
            for j in 0..=a[0].len() - WIN {
                let (mut xs, mut ys) = (vec![], vec![]);
                for di in 0..WIN {
                    for dj in 0..WIN {
                        xs.push(a[i + di][j + dj]);
                        ys.push(b[i + di][j + dj]);
                    }
                }
                let n = xs.len() as f64;
                let mx = xs.iter().sum::<f64>() / n;
                let my = ys.iter().sum::<f64>() / n;
                let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
                let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
                let c = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
                total += ((2.0 * mx * my + c1) * (2.0 * c + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn integral_images_match_direct_windows() {
        let a: Vec<Vec<f64>> = (0..12).map(|i| (0..10).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
        let b: Vec<Vec<f64>> = (0..12).map(|i| (0..10).map(|j| ((i * 5 + j * j) % 13) as f64).collect()).collect();
        let fast = ssim_2d(&a, &b, 13.0).unwrap();
        assert!((fast - naive(&a, &b, 13.0)).abs() < 1e-9);
    }

    #[test]
    fn identical_is_one_and_symmetric() {
        let a = synth::pink_noise_with_clicks(3.0, 1);
        let b = synth::pink_noise_with_clicks(3.0, 2);
        assert!((mel_ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let ab = mel_ssim(&a, &b).unwrap();
        assert!((ab - mel_ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn gain_invariant() {
        let a = synth::music(3.0, 4);
        let s = mel_ssim(&a, &a.scaled(0.1)).unwrap();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
    }

    #[test]
    fn strong_noise_decorrelates() {
        let a = synth::music(3.0, 5);
        let n = synth::white_noise(a.len(), 1.0, 6);
        assert!(mel_ssim(&a, &n).unwrap() < 0.3);
    }
}
