use crate::autograd::{Real, Tensor};
use crate::dsp::DopplerTimeMap;
use crate::error::{invalid, Result};
use crate::repr::{to_channels, ReprFormat};

/// Network-ready channel stacks of many maps in one format.
#[derive(Debug, Clone)]
pub struct FeatureBank<F: Real> {
    format: ReprFormat,
    side: usize,
    data: Vec<F>,
    n: usize,
}

impl<F: Real> FeatureBank<F> {
    pub fn from_maps<'a>(maps: impl IntoIterator<Item = &'a DopplerTimeMap>, format: ReprFormat) -> Result<Self> {
        let mut data = Vec::new();
        let mut n = 0;
        let mut side = 0;
        for m in maps {
            let s = to_channels(m, format)?;
            if s.height() != s.width() || (n > 0 && s.height() != side) {
                return invalid("feature bank maps must share one square size");
            }
            side = s.height();
            data.extend(s.data().iter().map(|&v| F::from_f64_lossy(v)));
            n += 1;
        }
        Ok(Self { format, side, data, n })
    }

    pub fn format(&self) -> ReprFormat {
        self.format
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn sample_len(&self) -> usize {
        self.format.channels() * self.side * self.side
    }

    /// `len(idx) × C × S × S` batch.
    pub fn batch(&self, idx: &[usize]) -> Result<Tensor<F>> {
        let per = self.sample_len();
        let mut out = Vec::with_capacity(idx.len() * per);
        for &i in idx {
            if i >= self.n {
                return invalid(format!("sample {i} outside a bank of {}", self.n));
            }
            out.extend_from_slice(&self.data[i * per..(i + 1) * per]);
        }
        Tensor::new(&[idx.len(), self.format.channels(), self.side, self.side], out)
    }
}
