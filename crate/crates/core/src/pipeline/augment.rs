use serde::{Deserialize, Serialize};

use crate::image::ReflectionImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub enabled: bool,
    /// Gaussian blur standard deviation in pixels.
    pub blur_sigma: f64,
    /// Also emit the flipped-then-blurred variant.
    pub compose: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { enabled: true, blur_sigma: 1.0, compose: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Flip,
    Blur,
    FlipBlur,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Original => "orig",
            Variant::Flip => "flip",
            Variant::Blur => "blur",
            Variant::FlipBlur => "flipblur",
        }
    }
}

impl AugmentConfig {
    pub fn variants(&self) -> Vec<Variant> {
        let mut v = vec![Variant::Original];
        if self.enabled {
            v.extend([Variant::Flip, Variant::Blur]);
            if self.compose {
                v.push(Variant::FlipBlur);
            }
        }
        v
    }

    pub fn factor(&self) -> usize {
        self.variants().len()
    }
}

pub fn apply_variant(img: &ReflectionImage, variant: Variant, blur_sigma: f64) -> ReflectionImage {
    match variant {
        Variant::Original => img.clone(),
        Variant::Flip => img.flip_vertical(),
        Variant::Blur => img.gaussian_blur(blur_sigma),
        Variant::FlipBlur => img.flip_vertical().gaussian_blur(blur_sigma),
    }
}

/// The augmented variants of one pair; every variant carries a clone of
/// `label`.
pub fn augment<L: Clone>(img: &ReflectionImage, label: &L, config: &AugmentConfig) -> Vec<(Variant, ReflectionImage, L)> {
    config.variants().into_iter().map(|v| (v, apply_variant(img, v, config.blur_sigma), label.clone())).collect()
}
