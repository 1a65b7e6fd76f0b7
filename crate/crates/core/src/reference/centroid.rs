use super::texture::{PALETTE, TAG_SIDE};
use crate::image::ImageBuffer;
use crate::protocol::Verdict;

pub const SOFTMAX_TEMPERATURE: f64 = 20.0;

/// Mean RGB over every pixel outside the top-left tag block.
pub fn mean_rgb_excluding_tag(img: &ImageBuffer) -> [f64; 3] {
    let mut sum = [0u64; 3];
    let mut n = 0u64;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if x < TAG_SIDE && y < TAG_SIDE {
                continue;
            }
            let p = img.pixel(x, y);
            for c in 0..3 {
                sum[c] += p[c] as u64;
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    sum.map(|s| s as f64 / n)
}

pub fn centroid_classify(img: &ImageBuffer) -> Verdict {
    centroid_classify_k(img, PALETTE.len())
}

/// Nearest-anchor classifier over the first `k` palette colors:
/// probs = softmax(-distance / 20).
pub fn centroid_classify_k(img: &ImageBuffer, k: usize) -> Verdict {
    let mean = mean_rgb_excluding_tag(img);
    let logits: Vec<f64> = PALETTE[..k]
        .iter()
        .map(|a| {
            let d = (0..3)
                .map(|c| (mean[c] - a[c] as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            -d / SOFTMAX_TEMPERATURE
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let probs = exps.into_iter().map(|e| e / total).collect();
    Verdict::from_probs(probs, k).expect("softmax is a valid distribution")
}
