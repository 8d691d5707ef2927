//! Regression, image and classification metrics.

use serde::{Deserialize, Serialize};

use crate::data_io::GrayImage;
use crate::error::{Error, Result};

/// Reported PSNR when the two images are identical.
pub const PSNR_CAP_DB: f64 = 99.0;
pub const SSIM_WINDOW: usize = 8;

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::NoObservations);
    }
    Ok(y_true.iter().zip(y_pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y_true.len() as f64)
}

pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    mse(y_true, y_pred).map(f64::sqrt)
}

fn same_shape(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// `10 log10(peak^2 / MSE)` in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(reference: &GrayImage, test: &GrayImage, peak: f64) -> Result<f64> {
    same_shape(reference, test)?;
    if !(peak > 0.0) {
        return Err(Error::invalid("peak must be > 0"));
    }
    let m = mse(reference.pixels(), test.pixels())?;
    Ok(psnr_from_mse(m, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

/// Mean SSIM over all 8x8 windows (stride 1, uniform weights, population moments).
pub fn ssim(reference: &GrayImage, test: &GrayImage, peak: f64) -> Result<f64> {
    same_shape(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall { width: w, height: h, min: SSIM_WINDOW });
    }
    let x = reference.pixels();
    let y = test.pixels();
    // summed-area tables of x, y, x^2, y^2, xy with a zero border row/column
    let sw = w + 1;
    let mut tables = vec![[0.0f64; 5]; sw * (h + 1)];
    for r in 0..h {
        let mut row_acc = [0.0f64; 5];
        for c in 0..w {
            let (a, b) = (x[r * w + c], y[r * w + c]);
            let v = [a, b, a * a, b * b, a * b];
            for k in 0..5 {
                row_acc[k] += v[k];
                tables[(r + 1) * sw + c + 1][k] = tables[r * sw + c + 1][k] + row_acc[k];
            }
        }
    }
    let win = SSIM_WINDOW;
    let n = (win * win) as f64;
    let (c1, c2) = ssim_constants(peak);
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..=(h - win) {
        for c in 0..=(w - win) {
            let mut s = [0.0f64; 5];
            for (k, v) in s.iter_mut().enumerate() {
                *v = tables[(r + win) * sw + c + win][k] - tables[r * sw + c + win][k] - tables[(r + win) * sw + c][k]
                    + tables[r * sw + c][k];
            }
            total += ssim_from_sums(s, n, c1, c2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

pub(crate) fn ssim_constants(peak: f64) -> (f64, f64) {
    ((0.01 * peak).powi(2), (0.03 * peak).powi(2))
}

/// Local SSIM from window sums `[x, y, x^2, y^2, xy]` over `n` pixels.
pub(crate) fn ssim_from_sums(s: [f64; 5], n: f64, c1: f64, c2: f64) -> f64 {
    let mx = s[0] / n;
    let my = s[1] / n;
    let vx = (s[2] / n - mx * mx).max(0.0);
    let vy = (s[3] / n - my * my).max(0.0);
    let cxy = s[4] / n - mx * my;
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Binary confusion counts with class 1 as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Rows are the true class (1 then 0), columns the predicted class (1 then 0).
    pub fn to_csv_string(&self) -> String {
        format!(",pred_1,pred_0\ntrue_1,{},{}\ntrue_0,{},{}\n", self.tp, self.fn_, self.fp, self.tn)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn confusion(labels_true: &[u8], labels_pred: &[u8]) -> Result<ConfusionMatrix> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::LengthMismatch { left: labels_true.len(), right: labels_pred.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in labels_true.iter().zip(labels_pred) {
        match (t != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 }
}

/// Positive-class scores.
pub fn report(cm: &ConfusionMatrix) -> ClassificationReport {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    ClassificationReport { accuracy: ratio(cm.tp + cm.tn, cm.total()), precision, recall, f1: f1(precision, recall) }
}

/// Precision, recall and F1 averaged over both classes.
pub fn macro_report(cm: &ConfusionMatrix) -> ClassificationReport {
    let pos = report(cm);
    let swapped = ConfusionMatrix { tp: cm.tn, fp: cm.fn_, fn_: cm.fp, tn: cm.tp };
    let neg = report(&swapped);
    ClassificationReport {
        accuracy: pos.accuracy,
        precision: 0.5 * (pos.precision + neg.precision),
        recall: 0.5 * (pos.recall + neg.recall),
        f1: 0.5 * (pos.f1 + neg.f1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RngStream;
    use rand::Rng;

    fn img(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f64) -> GrayImage {
        let px = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        GrayImage::new(w, h, px).unwrap()
    }

    /// Direct window-by-window SSIM with no running sums.
    fn naive_ssim(a: &GrayImage, b: &GrayImage, peak: f64) -> f64 {
        let (w, h) = (a.width(), a.height());
        let (c1, c2) = ((0.01 * peak).powi(2), (0.03 * peak).powi(2));
        let n = 64.0;
        let mut acc = 0.0;
        let mut cnt = 0.0;
        for r in 0..=h - 8 {
            for c in 0..=w - 8 {
                let mut mx = 0.0;
                let mut my = 0.0;
                for i in 0..8 {
                    for j in 0..8 {
                        mx += a.get(c + j, r + i);
                        my += b.get(c + j, r + i);
                    }
                }
                mx /= n;
                my /= n;
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for i in 0..8 {
                    for j in 0..8 {
                        let dx = a.get(c + j, r + i) - mx;
                        let dy = b.get(c + j, r + i) - my;
                        vx += dx * dx;
                        vy += dy * dy;
                        cxy += dx * dy;
                    }
                }
                vx /= n;
                vy /= n;
                cxy /= n;
                acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                cnt += 1.0;
            }
        }
        acc / cnt
    }

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        let (a, b) = ([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]);
        assert!((rmse(&a, &b).unwrap().powi(2) - mse(&a, &b).unwrap()).abs() < 1e-15);
        assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
    }

    #[test]
    fn psnr_values() {
        let a = img(16, 16, |r, c| ((r * 16 + c) % 7) as f64 / 7.0);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), PSNR_CAP_DB);
        assert!((psnr_from_mse(1.0, 255.0) - 48.1308).abs() < 1e-4);
        let flat = img(16, 16, |_, _| 0.5);
        let off = img(16, 16, |_, _| 0.6);
        assert!((psnr(&flat, &off, 1.0).unwrap() - 20.0).abs() < 1e-9);
        assert!(psnr(&flat, &img(8, 16, |_, _| 0.5), 1.0).is_err());
    }

    #[test]
    fn psnr_and_ssim_fall_with_noise_amplitude() {
        let clean = img(32, 32, |r, c| 0.3 + 0.4 * ((r + c) as f64 / 62.0));
        let mut g = RngStream::new(8).generator();
        let field: Vec<f64> = (0..32 * 32).map(|_| g.random_range(-1.0..1.0)).collect();
        let noisy = |amp: f64| {
            GrayImage::new(32, 32, clean.pixels().iter().zip(&field).map(|(p, n)| p + amp * n).collect()).unwrap()
        };
        let p: Vec<f64> = [0.02, 0.05, 0.1].iter().map(|&a| psnr(&clean, &noisy(a), 1.0).unwrap()).collect();
        assert!(p[0] > p[1] && p[1] > p[2]);
        let s_small = ssim(&clean, &noisy(0.02), 1.0).unwrap();
        let s_large = ssim(&clean, &noisy(0.1), 1.0).unwrap();
        assert!(s_large < s_small);
    }

    #[test]
    fn ssim_identity_and_oracle() {
        let a = img(32, 32, |r, c| (r as f64 + 2.0 * c as f64) / 100.0);
        assert!((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let shifted = img(32, 32, |r, c| (r as f64 + 2.0 * (c + 1) as f64) / 100.0);
        let fast = ssim(&a, &shifted, 1.0).unwrap();
        let slow = naive_ssim(&a, &shifted, 1.0);
        assert!((fast - slow).abs() < 1e-8, "{fast} vs {slow}");

        let mut g = RngStream::new(3).generator();
        let r1 = img(20, 24, |_, _| g.random::<f64>());
        let mut g = RngStream::new(4).generator();
        let r2 = img(20, 24, |_, _| g.random::<f64>());
        assert!((ssim(&r1, &r2, 1.0).unwrap() - naive_ssim(&r1, &r2, 1.0)).abs() < 1e-8);
        assert!(matches!(ssim(&img(7, 20, |_, _| 0.0), &img(7, 20, |_, _| 0.0), 1.0), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn classification_reports() {
        let t = [1, 0, 1, 0, 1, 1];
        let cm = confusion(&t, &t).unwrap();
        let r = report(&cm);
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));

        let cm = ConfusionMatrix { tp: 2, fp: 1, fn_: 1, tn: 6 };
        let r = report(&cm);
        assert!((r.accuracy - 0.8).abs() < 1e-15);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);

        let truth = [1, 0, 1, 0, 1, 0, 1, 0];
        let r = report(&confusion(&truth, &[1; 8]).unwrap());
        assert_eq!((r.recall, r.precision, r.accuracy), (1.0, 0.5, 0.5));
        let m = macro_report(&confusion(&truth, &[1; 8]).unwrap());
        assert_eq!(m.recall, 0.5);
        assert!(confusion(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn accuracy_is_order_invariant() {
        let t = [1u8, 0, 0, 1, 1, 0, 1];
        let p = [1u8, 1, 0, 0, 1, 0, 1];
        let a = report(&confusion(&t, &p).unwrap()).accuracy;
        let perm = [6, 2, 0, 5, 1, 4, 3];
        let tp: Vec<u8> = perm.iter().map(|&i| t[i]).collect();
        let pp: Vec<u8> = perm.iter().map(|&i| p[i]).collect();
        assert_eq!(report(&confusion(&tp, &pp).unwrap()).accuracy, a);
    }
}
