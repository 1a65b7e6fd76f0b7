use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::{self, SplitMix64};

/// Anchor colors, one per default catalog class.
pub const PALETTE: [[u8; 3]; 9] = [
    [235, 205, 175],
    [245, 245, 245],
    [120, 70, 50],
    [60, 40, 140],
    [170, 220, 200],
    [200, 120, 120],
    [220, 150, 200],
    [150, 150, 90],
    [90, 30, 90],
];

/// Side of the square top-left block carrying the rendered class.
pub const TAG_SIDE: u32 = 2;

const STRIPE_DARKEN: f64 = 0.7;
const MAX_SIGMA: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextureRecipe {
    pub class_id: usize,
    pub anchor_rgb: [u8; 3],
    pub stripe_period: u32,
}

impl TextureRecipe {
    pub fn for_class(class_id: usize) -> Self {
        Self {
            class_id,
            anchor_rgb: PALETTE[class_id],
            stripe_period: 4 + 2 * class_id as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityParams {
    /// 1 renders clean textures; lower values add Gaussian noise with
    /// sigma = 80 * (1 - fidelity).
    pub fidelity: f64,
    /// Probability of rendering a uniformly chosen wrong class.
    pub error_rate: f64,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self::perfect()
    }
}

impl FidelityParams {
    pub fn perfect() -> Self {
        Self {
            fidelity: 1.0,
            error_rate: 0.0,
        }
    }

    pub fn new(fidelity: f64, error_rate: f64) -> Result<Self> {
        let p = Self {
            fidelity,
            error_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fidelity) || !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::Config(format!(
                "fidelity {} and error rate {} must both lie in [0,1]",
                self.fidelity, self.error_rate
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        MAX_SIGMA * (1.0 - self.fidelity)
    }
}

/// Renders a texture for `class_id` in a nine-class palette. See
/// [`render_texture`].
pub fn texture_generate(
    class_id: usize,
    seed: u64,
    w: u32,
    h: u32,
    params: FidelityParams,
) -> ImageBuffer {
    render_texture(PALETTE.len(), class_id, seed, w, h, params).0
}

/// Renders a texture and returns it together with the class actually drawn.
///
/// With probability `error_rate` another class (uniform over the other
/// `k - 1`) is drawn instead of `class_id`. The image is the anchor color,
/// with every `stripe_period`-th row darkened to 70%, plus clamped Gaussian
/// noise; the top-left 2x2 block is then overwritten with the rendered class
/// id in all channels.
pub fn render_texture(
    k: usize,
    class_id: usize,
    seed: u64,
    w: u32,
    h: u32,
    params: FidelityParams,
) -> (ImageBuffer, usize) {
    assert!(
        k >= 2 && k <= PALETTE.len(),
        "palette supports 2..=9 classes"
    );
    assert!(class_id < k, "class {class_id} out of range");
    let mut rng = SplitMix64::new(rng::derive_seed(seed, rng::purpose::TEXTURE));
    let draw = rng.next_f64();
    let rendered = if draw < params.error_rate {
        let other = rng.below(k as u64 - 1) as usize;
        if other >= class_id {
            other + 1
        } else {
            other
        }
    } else {
        class_id
    };
    let recipe = TextureRecipe::for_class(rendered);
    let sigma = params.sigma();
    let mut pixels = Vec::with_capacity(w as usize * h as usize * 3);
    for y in 0..h {
        let shade = if y % recipe.stripe_period == 0 {
            STRIPE_DARKEN
        } else {
            1.0
        };
        for _ in 0..w {
            for &a in &recipe.anchor_rgb {
                let noise = if sigma > 0.0 {
                    sigma * rng.gaussian()
                } else {
                    0.0
                };
                pixels.push((a as f64 * shade + noise).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    let mut img = ImageBuffer::new_with_min(w, h, pixels, TAG_SIDE).expect("dimensions match");
    let tag = rendered as u8;
    for y in 0..TAG_SIDE.min(h) {
        for x in 0..TAG_SIDE.min(w) {
            img.set_pixel(x, y, [tag; 3]);
        }
    }
    (img, rendered)
}

/// Reads the class tag: the value `v` shared by all 12 samples of the
/// top-left 2x2 block, if there is one and `v < k`.
pub fn read_tag(img: &ImageBuffer, k: usize) -> Option<usize> {
    if img.width() < TAG_SIDE || img.height() < TAG_SIDE {
        return None;
    }
    let v = img.pixel(0, 0)[0];
    let consistent = (0..TAG_SIDE).all(|y| (0..TAG_SIDE).all(|x| img.pixel(x, y) == [v; 3]));
    (consistent && (v as usize) < k).then_some(v as usize)
}
