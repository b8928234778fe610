//! CPU Gaussian splatting: primitives, tiled rendering with analytic
//! gradients, photometric optimization, degradations and image metrics.

mod degrade;
mod gaussian;
mod image;
mod init;
mod metrics;
mod optimize;
mod render;

pub use degrade::{degrade_mask, degrade_noise, NoiseSigmas};
pub use gaussian::{
    covariance_of, logit, rotation_matrix, sigmoid, Gaussian3D, GaussianSet, MAX_LOG_SCALE,
    MAX_OPACITY_LOGIT, MIN_LOG_SCALE, PARAMS_PER_GAUSSIAN,
};
pub use image::Image;
pub use init::{nearest_neighbor_distances, seed_from_points};
pub use metrics::{
    gaussian_window, l1, mse, photometric_loss, photometric_loss_with_grad, psnr, ssim,
    ssim_with_grad, PSNR_CAP, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW,
};
pub use optimize::{
    evaluate_loss, loss_and_gradient, optimize, optimize_with_state, AdamState, LearningRates,
    OptimizeConfig, OptimizeReport, View,
};
pub use render::{
    pixel_support, render, render_backward, render_frame, Frame, RenderOutput, GUARD_BAND,
    MIN_TRANSMITTANCE, TILE_SIZE, TRUNCATION_SIGMA,
};
