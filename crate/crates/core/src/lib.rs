//! Synthesizes novel perspective views and illumination of labelled OCR
//! text-line images through a simulated 3D scene (pinhole camera, light
//! sources, billboarded text plane on a circular trajectory), extracts the
//! augmented lines back out, and evaluates OCR output with CER/WER metrics.

pub mod config;
pub mod extract;
pub mod geometry;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod render;
