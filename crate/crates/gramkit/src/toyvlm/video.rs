//! Synthetic frame tensors. No media decoding happens anywhere; frames are
//! numeric arrays supplied by the caller.

/// One frame, channel-major: `data[c * h * w + y * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FrameTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), channels * height * width, "frame data length");
        FrameTensor {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[c * self.height * self.width + y * self.width + x]
    }

    /// Mean value per channel over one patch of the (rows x cols) grid.
    pub fn patch_channel_means(&self, rows: usize, cols: usize, r: usize, c: usize) -> Vec<f32> {
        let ph = self.height / rows;
        let pw = self.width / cols;
        let mut means = Vec::with_capacity(self.channels);
        for ch in 0..self.channels {
            let mut acc = 0.0f64;
            for y in r * ph..(r + 1) * ph {
                for x in c * pw..(c + 1) * pw {
                    acc += self.at(ch, y, x) as f64;
                }
            }
            means.push((acc / (ph * pw) as f64) as f32);
        }
        means
    }
}
