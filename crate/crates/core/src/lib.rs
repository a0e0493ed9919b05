//! Region-of-interest segmentation by CUSUM boundary tracking.
//!
//! A walker zig-zags across the boundary of a bright region; every crossing
//! shows up as a change-point in the stream of sampled intensities. The
//! detected crossings form a polygon that is filled into a binary mask and
//! scored against a reference with the Dice index.
//!
//! ```
//! use cusumseg::imgio::{gen_phantom, Noise, PhantomSpec, Shape};
//! use cusumseg::{metrics, pipeline, tracker::TrackerConfig};
//!
//! let spec = PhantomSpec {
//!     width: 128,
//!     height: 128,
//!     background: 200,
//!     shapes: vec![Shape::Disk { center: [64.0, 64.0], radius: 40.0, intensity: 1000, brain: true }],
//!     noise: Noise::Gaussian { sigma: 50.0 },
//!     rng_seed: 1,
//! };
//! let (image, truth) = gen_phantom(&spec).unwrap();
//! let (seed, inside_dir) = spec.seed_point().unwrap();
//! let seg = pipeline::segment(&image, seed, inside_dir, &TrackerConfig::default()).unwrap();
//! assert!(metrics::dice(&seg.mask, &truth).unwrap() > 0.95);
//! ```

pub mod cli;
pub mod cusum;
mod error;
pub mod geom;
pub mod imgio;
pub mod mask;
pub mod metrics;
pub mod pipeline;
pub mod tracker;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cusum.md")]
    mod cusum {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/masks-and-dice.md")]
    mod masks_and_dice {}
    #[doc = include_str!("../../../book/src/phantoms.md")]
    mod phantoms {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
