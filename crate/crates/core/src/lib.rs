//! Multi-frame super-resolution for short image sequences.
//!
//! The reconstruction runs in three stages:
//!
//! 1. [`registration`] estimates sub-pixel translation or affine motion of
//!    every frame against a reference frame.
//! 2. [`interp`] projects all frame pixels onto the reference frame and fits
//!    overlapping local models, each a linear combination of continuous
//!    principal-component patches from [`pcbasis`], then smooths the model
//!    field and evaluates it on the high-resolution grid.
//! 3. [`restore`] applies a rotationally symmetric linear filter learned
//!    against ground truth rendered by [`obsmodel`].
//!
//! [`pipeline`] wires the stages together behind the `pcsr` binary, and
//! [`charts`] generates synthetic text-and-line test scenes.

pub mod charts;
pub mod error;
mod fft;
pub mod image;
pub mod interp;
mod linalg;
pub mod obsmodel;
pub mod pcbasis;
pub mod pipeline;
pub mod registration;
pub mod restore;
pub mod rng;

pub use error::{Error, Result};
pub use image::{GeomTransform, Image, QualityReport, TransformKind};
