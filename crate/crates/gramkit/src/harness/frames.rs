//! Procedural frame tensors: gradient plus checker plus a seeded sinusoid,
//! evolving per frame so attention has real structure to differ over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::toyvlm::FrameTensor;

const FRAME_SALT: u64 = 0x5851_f42d_4c95_7f2d;

pub fn synth_frames(
    seed: u64,
    n_frames: usize,
    channels: usize,
    height: usize,
    width: usize,
) -> Vec<FrameTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ FRAME_SALT);
    let phases: Vec<f32> = (0..channels)
        .map(|_| rng.gen_range(0.0..std::f32::consts::TAU))
        .collect();
    let freq_x: f32 = rng.gen_range(1.0..3.0);
    let freq_y: f32 = rng.gen_range(1.0..3.0);
    let checker = 4.max(height / 4);

    (0..n_frames)
        .map(|f| {
            let mut data = Vec::with_capacity(channels * height * width);
            for (c, phase) in phases.iter().enumerate() {
                for y in 0..height {
                    for x in 0..width {
                        let gx = x as f32 / width.max(1) as f32;
                        let gy = y as f32 / height.max(1) as f32;
                        let grad = 0.5 * (gx + gy);
                        let check = ((x / checker + y / checker + f) % 2) as f32 * 0.4;
                        let wave = (std::f32::consts::TAU * (freq_x * gx + freq_y * gy)
                            + phase
                            + 0.7 * f as f32
                            + 0.3 * c as f32)
                            .sin()
                            * 0.25;
                        data.push(grad + check + wave);
                    }
                }
            }
            FrameTensor::new(channels, height, width, data)
        })
        .collect()
}
