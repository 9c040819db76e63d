//! Sparse autoencoder anomaly detector.
//!
//! A logistic-sigmoid encoder compresses the flattened image x (J pixels)
//! into K hidden units; a linear decoder reconstructs it. Training on
//! no-jam images only minimizes
//!
//!   L(batch) = mean_b MSE(x_b, xhat_b)
//!            + beta * KL(rho || rho_hat)
//!            + lambda * (||W1||^2 + ||W2||^2)
//!
//! where rho_hat is the batch-mean hidden activation and KL is the
//! Bernoulli divergence summed over hidden units. After training, the
//! reconstruction MSEs of the training set set the detection threshold
//!
//!   tau = mean(MSE_train) + mult * std(MSE_train)
//!
//! (sample std, n-1 denominator; the multiplier defaults to 3.5). An image
//! with MSE > tau is flagged as jammed; MSE == tau stays no-jam.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::nn::{axpy, dot, logsig};
use crate::detectors::Verdict;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::iq::Label;
use crate::linksim::rng_stream;

/// Training hyperparameters. Defaults: K=16 hidden units, sparsity weight
/// 0.5 at target 0.05, L2 weight 0.01, 250 epochs of momentum SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeHyper {
    pub hidden: usize,
    pub sparsity_weight: f64,
    pub sparsity_target: f64,
    pub l2_weight: f64,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub threshold_mult: f64,
    pub seed: u64,
}

impl Default for AeHyper {
    fn default() -> Self {
        Self {
            hidden: 16,
            sparsity_weight: 0.5,
            sparsity_target: 0.05,
            l2_weight: 0.01,
            epochs: 250,
            batch: 10,
            learning_rate: 0.01,
            momentum: 0.9,
            threshold_mult: 3.5,
            seed: 0,
        }
    }
}

/// Fitted threshold state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeThreshold {
    pub tau: f64,
    pub mse_train_mean: f64,
    pub mse_train_std: f64,
    pub mult: f64,
}

/// The autoencoder parameters. `w1` is K x J row-major (encoder), `w2t`
/// holds the decoder transposed as K rows of J so both passes stream
/// memory sequentially.
#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2t: Vec<f64>,
    pub(crate) b2: Vec<f64>,
    pub sparsity_weight: f64,
    pub sparsity_target: f64,
    pub l2_weight: f64,
    pub threshold: Option<AeThreshold>,
}

impl AeModel {
    /// Zero-initialized model (useful for hand-built fixtures; training
    /// uses seeded random init).
    pub fn zeroed(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w1: vec![0.0; hidden_dim * input_dim],
            b1: vec![0.0; hidden_dim],
            w2t: vec![0.0; hidden_dim * input_dim],
            b2: vec![0.0; input_dim],
            sparsity_weight: 0.5,
            sparsity_target: 0.05,
            l2_weight: 0.01,
            threshold: None,
        }
    }

    /// Glorot weights; the decoder bias starts at the mean training image
    /// (the gradient of a J-dim mean-MSE objective is too small to build
    /// the template from zero in 250 epochs) and the encoder bias at
    /// logit(rho) so hidden units open at the sparsity target.
    fn seeded(input_dim: usize, hidden_dim: usize, hyper: &AeHyper, mean_image: &[f64]) -> Self {
        let mut rng = rng_stream(hyper.seed, 0xae00);
        let r = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let mut model = Self::zeroed(input_dim, hidden_dim);
        model.w1.iter_mut().for_each(|w| *w = rng.gen_range(-r..r));
        model.w2t.iter_mut().for_each(|w| *w = rng.gen_range(-r..r));
        let rho = hyper.sparsity_target.clamp(RHO_CLAMP, 1.0 - RHO_CLAMP);
        model.b1.fill((rho / (1.0 - rho)).ln());
        model.b2.copy_from_slice(mean_image);
        model.sparsity_weight = hyper.sparsity_weight;
        model.sparsity_target = hyper.sparsity_target;
        model.l2_weight = hyper.l2_weight;
        model
    }

    pub(crate) fn from_parts(
        input_dim: usize,
        hidden_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2t: Vec<f64>,
        b2: Vec<f64>,
        sparsity_weight: f64,
        sparsity_target: f64,
        l2_weight: f64,
        threshold: Option<AeThreshold>,
    ) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w1,
            b1,
            w2t,
            b2,
            sparsity_weight,
            sparsity_target,
            l2_weight,
            threshold,
        }
    }

    pub(crate) fn raw_arrays(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        (&self.w1, &self.b1, &self.w2t, &self.b2)
    }

    /// Encoder activations for one flattened image.
    fn encode(&self, x: &[f64], h: &mut [f64]) {
        let j = self.input_dim;
        for k in 0..self.hidden_dim {
            h[k] = logsig(dot(&self.w1[k * j..(k + 1) * j], x) + self.b1[k]);
        }
    }

    /// Linear decode into `xhat`.
    fn decode(&self, h: &[f64], xhat: &mut [f64]) {
        let j = self.input_dim;
        xhat.copy_from_slice(&self.b2);
        for k in 0..self.hidden_dim {
            axpy(xhat, h[k], &self.w2t[k * j..(k + 1) * j]);
        }
    }
}

/// Forward-pass output: the reconstruction and its mean squared error.
#[derive(Debug, Clone)]
pub struct AeForward {
    pub reconstruction: Vec<f64>,
    pub mse: f64,
}

fn flat_input<'a>(model_dim: usize, img: &'a GrayImage) -> Result<&'a [f64]> {
    let px = img.pixels();
    if px.len() != model_dim {
        return Err(Error::Shape(format!(
            "image has {} pixels, model expects {}",
            px.len(),
            model_dim
        )));
    }
    Ok(px)
}

/// h = logsig(W1 x + b1); xhat = W2 h + b2; mse = mean((xhat - x)^2).
pub fn ae_forward(model: &AeModel, img: &GrayImage) -> Result<AeForward> {
    let x = flat_input(model.input_dim, img)?;
    let mut h = vec![0.0; model.hidden_dim];
    model.encode(x, &mut h);
    let mut xhat = vec![0.0; model.input_dim];
    model.decode(&h, &mut xhat);
    let mse = xhat
        .iter()
        .zip(x)
        .map(|(r, v)| (r - v) * (r - v))
        .sum::<f64>()
        / model.input_dim as f64;
    Ok(AeForward { reconstruction: xhat, mse })
}

/// tau = mean + mult * sample std (n-1 denominator; a singleton has std 0).
pub fn compute_threshold(mses: &[f64], mult: f64) -> Result<f64> {
    let (mean, std) = mean_and_sample_std(mses)?;
    Ok(mean + mult * std)
}

fn mean_and_sample_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Data("cannot compute threshold of an empty MSE list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

/// Jam iff mse > tau (the boundary itself stays no-jam).
pub fn ae_detect(model: &AeModel, img: &GrayImage) -> Result<Verdict> {
    let thr = model
        .threshold
        .ok_or_else(|| Error::UnfittedModel("autoencoder has no threshold; train or load a fitted model".into()))?;
    let fwd = ae_forward(model, img)?;
    Ok(Verdict {
        label: if fwd.mse > thr.tau { Label::Jam } else { Label::NoJam },
        score: fwd.mse,
    })
}

/// One epoch row of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStat {
    pub epoch: usize,
    pub loss: f64,
    pub mean_mse: f64,
}

/// A trained model plus its per-epoch log.
#[derive(Debug, Clone)]
pub struct AeTrainResult {
    pub model: AeModel,
    pub log: Vec<EpochStat>,
}

const RHO_CLAMP: f64 = 1e-6;

fn kl_bernoulli(rho: f64, rho_hat: f64) -> f64 {
    let rh = rho_hat.clamp(RHO_CLAMP, 1.0 - RHO_CLAMP);
    rho * (rho / rh).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - rh)).ln()
}

fn kl_bernoulli_grad(rho: f64, rho_hat: f64) -> f64 {
    let rh = rho_hat.clamp(RHO_CLAMP, 1.0 - RHO_CLAMP);
    -rho / rh + (1.0 - rho) / (1.0 - rh)
}

/// The exact batch objective minimized by `ae_train`, exposed for
/// finite-difference verification.
pub fn ae_batch_loss(model: &AeModel, batch: &[&[f64]], hyper: &AeHyper) -> f64 {
    let j = model.input_dim;
    let k_dim = model.hidden_dim;
    let b = batch.len() as f64;
    let mut h = vec![0.0; k_dim];
    let mut xhat = vec![0.0; j];
    let mut rho_hat = vec![0.0; k_dim];
    let mut recon = 0.0;
    for x in batch {
        model.encode(x, &mut h);
        model.decode(&h, &mut xhat);
        recon += xhat.iter().zip(*x).map(|(r, v)| (r - v) * (r - v)).sum::<f64>() / j as f64;
        for (acc, &hk) in rho_hat.iter_mut().zip(&h) {
            *acc += hk / b;
        }
    }
    recon /= b;
    let kl: f64 = rho_hat
        .iter()
        .map(|&rh| kl_bernoulli(hyper.sparsity_target, rh))
        .sum();
    let l2 = model.w1.iter().map(|w| w * w).sum::<f64>()
        + model.w2t.iter().map(|w| w * w).sum::<f64>();
    recon + hyper.sparsity_weight * kl + hyper.l2_weight * l2
}

/// Gradient accumulator mirroring the model arrays.
pub(crate) struct AeGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2t: Vec<f64>,
    pub b2: Vec<f64>,
}

impl AeGrads {
    fn zeroed(j: usize, k: usize) -> Self {
        Self {
            w1: vec![0.0; k * j],
            b1: vec![0.0; k],
            w2t: vec![0.0; k * j],
            b2: vec![0.0; j],
        }
    }

    fn clear(&mut self) {
        self.w1.fill(0.0);
        self.b1.fill(0.0);
        self.w2t.fill(0.0);
        self.b2.fill(0.0);
    }
}

/// Analytic gradient of `ae_batch_loss`. Returns (loss, mean batch MSE).
pub(crate) fn ae_batch_gradient(
    model: &AeModel,
    batch: &[&[f64]],
    hyper: &AeHyper,
    grads: &mut AeGrads,
) -> (f64, f64) {
    let j = model.input_dim;
    let k_dim = model.hidden_dim;
    let b = batch.len() as f64;
    grads.clear();

    let mut hs = vec![0.0; batch.len() * k_dim];
    let mut deltas = vec![0.0; batch.len() * j];
    let mut rho_hat = vec![0.0; k_dim];
    let mut xhat = vec![0.0; j];
    let mut recon = 0.0;

    for (bi, x) in batch.iter().enumerate() {
        let h = &mut hs[bi * k_dim..(bi + 1) * k_dim];
        model.encode(x, h);
        model.decode(h, &mut xhat);
        let delta = &mut deltas[bi * j..(bi + 1) * j];
        let mut err = 0.0;
        for ((d, r), v) in delta.iter_mut().zip(&xhat).zip(*x) {
            let e = r - v;
            err += e * e;
            *d = 2.0 * e / (j as f64 * b); // dL_recon / dxhat
        }
        recon += err / j as f64;
        for (acc, &hk) in rho_hat.iter_mut().zip(h.iter()) {
            *acc += hk / b;
        }
    }
    recon /= b;

    let kl: f64 = rho_hat
        .iter()
        .map(|&rh| kl_bernoulli(hyper.sparsity_target, rh))
        .sum();
    // dKL/dh_k^(b) = beta * g'(rho_hat_k) / B, identical for every sample
    let kl_h: Vec<f64> = rho_hat
        .iter()
        .map(|&rh| hyper.sparsity_weight * kl_bernoulli_grad(hyper.sparsity_target, rh) / b)
        .collect();

    for (bi, x) in batch.iter().enumerate() {
        let h = &hs[bi * k_dim..(bi + 1) * k_dim];
        let delta = &deltas[bi * j..(bi + 1) * j];
        axpy(&mut grads.b2, 1.0, delta);
        for k in 0..k_dim {
            axpy(&mut grads.w2t[k * j..(k + 1) * j], h[k], delta);
            let dh = dot(&model.w2t[k * j..(k + 1) * j], delta) + kl_h[k];
            let dpre = dh * h[k] * (1.0 - h[k]);
            grads.b1[k] += dpre;
            axpy(&mut grads.w1[k * j..(k + 1) * j], dpre, x);
        }
    }

    // L2 term
    let mut l2 = 0.0;
    for (g, w) in grads.w1.iter_mut().zip(&model.w1) {
        l2 += w * w;
        *g += 2.0 * hyper.l2_weight * w;
    }
    for (g, w) in grads.w2t.iter_mut().zip(&model.w2t) {
        l2 += w * w;
        *g += 2.0 * hyper.l2_weight * w;
    }

    (recon + hyper.sparsity_weight * kl + hyper.l2_weight * l2, recon)
}

/// Largest relative deviation between the analytic gradient of
/// `ae_batch_loss` and central finite differences, probed at the model's
/// current parameters. Verification hook for the from-scratch backprop.
pub fn gradient_check(model: &AeModel, batch: &[&[f64]], hyper: &AeHyper) -> f64 {
    let mut grads = AeGrads::zeroed(model.input_dim, model.hidden_dim);
    ae_batch_gradient(model, batch, hyper, &mut grads);
    let eps = 1e-6;
    let mut max_rel = 0.0f64;
    type Select = fn(&mut AeModel) -> &mut Vec<f64>;
    let selectors: [(Select, &Vec<f64>); 4] = [
        ((|m| &mut m.w1) as Select, &grads.w1),
        ((|m| &mut m.b1) as Select, &grads.b1),
        ((|m| &mut m.w2t) as Select, &grads.w2t),
        ((|m| &mut m.b2) as Select, &grads.b2),
    ];
    for (select, analytic) in selectors {
        for idx in 0..analytic.len() {
            let mut m = model.clone();
            select(&mut m)[idx] += eps;
            let up = ae_batch_loss(&m, batch, hyper);
            let mut m = model.clone();
            select(&mut m)[idx] -= eps;
            let down = ae_batch_loss(&m, batch, hyper);
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[idx] - numeric).abs()
                / analytic[idx].abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    max_rel
}

/// Train on no-jam images with momentum SGD, then fit the threshold from
/// the training-set reconstruction MSEs. Deterministic for a given seed.
pub fn ae_train(images: &[GrayImage], hyper: &AeHyper) -> Result<AeTrainResult> {
    if images.len() < 2 {
        return Err(Error::Data(format!(
            "autoencoder training needs at least 2 images, got {}",
            images.len()
        )));
    }
    let (w, h) = (images[0].width(), images[0].height());
    if images.iter().any(|im| im.width() != w || im.height() != h) {
        return Err(Error::Shape("training images have mixed dimensions".into()));
    }
    if hyper.hidden == 0 || hyper.epochs == 0 || hyper.batch == 0 {
        return Err(Error::Parameter("hidden, epochs and batch must be > 0".into()));
    }
    let j = w * h;
    if hyper.hidden >= j {
        return Err(Error::Parameter(format!(
            "hidden dim {} must be smaller than the input dim {j}",
            hyper.hidden
        )));
    }

    let mut mean_image = vec![0.0; j];
    for im in images {
        axpy(&mut mean_image, 1.0 / images.len() as f64, im.pixels());
    }
    let mut model = AeModel::seeded(j, hyper.hidden, hyper, &mean_image);
    let mut grads = AeGrads::zeroed(j, hyper.hidden);
    let mut vel = AeGrads::zeroed(j, hyper.hidden);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut shuffle_rng = rng_stream(hyper.seed, 0xae01);
    let mut log = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        // Fisher-Yates with the persistent stream
        for i in (1..order.len()).rev() {
            let swap = shuffle_rng.gen_range(0..=i);
            order.swap(i, swap);
        }
        let mut epoch_loss = 0.0;
        let mut epoch_mse = 0.0;
        let mut batches = 0.0;
        for ids in order.chunks(hyper.batch) {
            let batch: Vec<&[f64]> = ids.iter().map(|&i| images[i].pixels()).collect();
            let (loss, mse) = ae_batch_gradient(&model, &batch, hyper, &mut grads);
            epoch_loss += loss;
            epoch_mse += mse;
            batches += 1.0;
            momentum_step(&mut model.w1, &mut vel.w1, &grads.w1, hyper);
            momentum_step(&mut model.b1, &mut vel.b1, &grads.b1, hyper);
            momentum_step(&mut model.w2t, &mut vel.w2t, &grads.w2t, hyper);
            momentum_step(&mut model.b2, &mut vel.b2, &grads.b2, hyper);
        }
        log.push(EpochStat {
            epoch: epoch + 1,
            loss: epoch_loss / batches,
            mean_mse: epoch_mse / batches,
        });
    }

    let mses: Vec<f64> = images
        .iter()
        .map(|im| ae_forward(&model, im).map(|f| f.mse))
        .collect::<Result<_>>()?;
    let (mean, std) = mean_and_sample_std(&mses)?;
    model.threshold = Some(AeThreshold {
        tau: mean + hyper.threshold_mult * std,
        mse_train_mean: mean,
        mse_train_std: std,
        mult: hyper.threshold_mult,
    });
    Ok(AeTrainResult { model, log })
}

fn momentum_step(params: &mut [f64], vel: &mut [f64], grads: &[f64], hyper: &AeHyper) {
    for ((p, v), g) in params.iter_mut().zip(vel.iter_mut()).zip(grads) {
        *v = hyper.momentum * *v - hyper.learning_rate * g;
        *p += *v;
    }
}
