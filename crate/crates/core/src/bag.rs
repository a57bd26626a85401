use crate::error::{ClamError, Result};
use crate::numerics::Matrix;

/// One slide: `K` instance feature vectors, their patch coordinates, and the
/// slide-level label.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBag {
    pub slide_id: String,
    /// Slide label; negative values mean "unlabeled".
    pub label: i32,
    /// `K × D` instance features.
    pub features: Matrix,
    /// Top-left corner of each instance's patch, full-resolution pixels.
    pub coords: Vec<[i32; 2]>,
    pub patch_size: u32,
    pub step: u32,
    /// Indices of instances that carry class signal, when known (synthetic data).
    pub evidence: Option<Vec<usize>>,
}

impl FeatureBag {
    /// A bag without spatial information; coordinates are laid out on a
    /// single row of 256-pixel tiles.
    pub fn from_features(slide_id: impl Into<String>, label: i32, features: Matrix) -> Self {
        let coords = (0..features.rows()).map(|k| [(k as i32) * 256, 0]).collect();
        FeatureBag {
            slide_id: slide_id.into(),
            label,
            features,
            coords,
            patch_size: 256,
            step: 256,
            evidence: None,
        }
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// The label as a class index below `n_classes`.
    pub fn class(&self, n_classes: usize) -> Result<usize> {
        usize::try_from(self.label)
            .ok()
            .filter(|&c| c < n_classes)
            .ok_or_else(|| {
                ClamError::Label(format!(
                    "slide {} has label {} outside 0..{n_classes}",
                    self.slide_id, self.label
                ))
            })
    }
}
