//! Compact CNN binary classifier trained from scratch.
//!
//! Architecture: three conv blocks (3x3 kernels, zero padding 1) with
//! channel widths 8/16/32 by default, ReLU activations, 2x2 max pools
//! after the first two blocks, global average pooling after the third,
//! and a fully connected 2-class head. Cross-entropy loss, momentum SGD,
//! 30 epochs with mini-batches of 35 by default. The single input channel
//! is the [0, 1] grayscale plane.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::detectors::nn::{
    conv3x3_same, conv3x3_same_backward, maxpool2, maxpool2_backward, relu_backward_inplace,
    relu_inplace, softmax,
};
use crate::detectors::Verdict;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::iq::Label;
use crate::linksim::rng_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnHyper {
    pub channels: [usize; 3],
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for CnnHyper {
    fn default() -> Self {
        Self {
            channels: [8, 16, 32],
            epochs: 30,
            batch: 35,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
        }
    }
}

/// Trained classifier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub input_h: usize,
    pub input_w: usize,
    pub channels: [usize; 3],
    pub(crate) conv1_w: Vec<f64>,
    pub(crate) conv1_b: Vec<f64>,
    pub(crate) conv2_w: Vec<f64>,
    pub(crate) conv2_b: Vec<f64>,
    pub(crate) conv3_w: Vec<f64>,
    pub(crate) conv3_b: Vec<f64>,
    pub(crate) fc_w: Vec<f64>,
    pub(crate) fc_b: Vec<f64>,
}

impl CnnModel {
    /// Zero-initialized model with the given geometry.
    pub fn zeroed(input_h: usize, input_w: usize, channels: [usize; 3]) -> Result<Self> {
        if input_h / 4 == 0 || input_w / 4 == 0 {
            return Err(Error::Parameter(format!(
                "input {input_h}x{input_w} too small: two 2x2 pools need at least 4x4"
            )));
        }
        if channels.iter().any(|&c| c == 0) {
            return Err(Error::Parameter("channel widths must be > 0".into()));
        }
        let [c1, c2, c3] = channels;
        Ok(Self {
            input_h,
            input_w,
            channels,
            conv1_w: vec![0.0; c1 * 9],
            conv1_b: vec![0.0; c1],
            conv2_w: vec![0.0; c2 * c1 * 9],
            conv2_b: vec![0.0; c2],
            conv3_w: vec![0.0; c3 * c2 * 9],
            conv3_b: vec![0.0; c3],
            fc_w: vec![0.0; 2 * c3],
            fc_b: vec![0.0; 2],
        })
    }

    fn seeded(input_h: usize, input_w: usize, hyper: &CnnHyper) -> Result<Self> {
        let mut model = Self::zeroed(input_h, input_w, hyper.channels)?;
        let mut rng = rng_stream(hyper.seed, 0xc44);
        let [c1, c2, c3] = hyper.channels;
        for (w, fan_in) in [
            (&mut model.conv1_w, 9.0),
            (&mut model.conv2_w, c1 as f64 * 9.0),
            (&mut model.conv3_w, c2 as f64 * 9.0),
        ] {
            let he = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("valid stddev");
            w.iter_mut().for_each(|v| *v = he.sample(&mut rng));
        }
        let r = (6.0 / (c3 + 2) as f64).sqrt();
        model.fc_w.iter_mut().for_each(|v| *v = rng.gen_range(-r..r));
        Ok(model)
    }

    pub(crate) fn raw_arrays(&self) -> [&[f64]; 8] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.conv3_w,
            &self.conv3_b,
            &self.fc_w,
            &self.fc_b,
        ]
    }

    #[allow(clippy::type_complexity)]
    pub(crate) fn from_parts(
        input_h: usize,
        input_w: usize,
        channels: [usize; 3],
        arrays: [Vec<f64>; 8],
    ) -> Result<Self> {
        let mut model = Self::zeroed(input_h, input_w, channels)?;
        let [c1w, c1b, c2w, c2b, c3w, c3b, fcw, fcb] = arrays;
        let expect = |name: &str, got: usize, want: usize| -> Result<()> {
            if got != want {
                return Err(Error::Format(format!("{name}: {got} values, expected {want}")));
            }
            Ok(())
        };
        expect("conv1_w", c1w.len(), model.conv1_w.len())?;
        expect("conv1_b", c1b.len(), model.conv1_b.len())?;
        expect("conv2_w", c2w.len(), model.conv2_w.len())?;
        expect("conv2_b", c2b.len(), model.conv2_b.len())?;
        expect("conv3_w", c3w.len(), model.conv3_w.len())?;
        expect("conv3_b", c3b.len(), model.conv3_b.len())?;
        expect("fc_w", fcw.len(), model.fc_w.len())?;
        expect("fc_b", fcb.len(), model.fc_b.len())?;
        model.conv1_w = c1w;
        model.conv1_b = c1b;
        model.conv2_w = c2w;
        model.conv2_b = c2b;
        model.conv3_w = c3w;
        model.conv3_b = c3b;
        model.fc_w = fcw;
        model.fc_b = fcb;
        Ok(model)
    }

    fn geometry(&self) -> Geometry {
        let (h, w) = (self.input_h, self.input_w);
        Geometry {
            h0: h,
            w0: w,
            h1: h / 2,
            w1: w / 2,
            h2: h / 4,
            w2: w / 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    h0: usize,
    w0: usize,
    h1: usize,
    w1: usize,
    h2: usize,
    w2: usize,
}

/// Per-sample activation buffers, reused across the training set.
struct Workspace {
    a1: Vec<f64>,
    p1: Vec<f64>,
    arg1: Vec<usize>,
    a2: Vec<f64>,
    p2: Vec<f64>,
    arg2: Vec<usize>,
    a3: Vec<f64>,
    gap: Vec<f64>,
    scores: [f64; 2],
    d_a1: Vec<f64>,
    d_p1: Vec<f64>,
    d_a2: Vec<f64>,
    d_p2: Vec<f64>,
    d_a3: Vec<f64>,
    d_input: Vec<f64>,
}

impl Workspace {
    fn new(model: &CnnModel) -> Self {
        let g = model.geometry();
        let [c1, c2, c3] = model.channels;
        Self {
            a1: vec![0.0; c1 * g.h0 * g.w0],
            p1: vec![0.0; c1 * g.h1 * g.w1],
            arg1: vec![0; c1 * g.h1 * g.w1],
            a2: vec![0.0; c2 * g.h1 * g.w1],
            p2: vec![0.0; c2 * g.h2 * g.w2],
            arg2: vec![0; c2 * g.h2 * g.w2],
            a3: vec![0.0; c3 * g.h2 * g.w2],
            gap: vec![0.0; c3],
            scores: [0.0; 2],
            d_a1: vec![0.0; c1 * g.h0 * g.w0],
            d_p1: vec![0.0; c1 * g.h1 * g.w1],
            d_a2: vec![0.0; c2 * g.h1 * g.w1],
            d_p2: vec![0.0; c2 * g.h2 * g.w2],
            d_a3: vec![0.0; c3 * g.h2 * g.w2],
            d_input: vec![0.0; g.h0 * g.w0],
        }
    }
}

fn forward(model: &CnnModel, x: &[f64], ws: &mut Workspace) {
    let g = model.geometry();
    let [c1, c2, c3] = model.channels;
    conv3x3_same(x, 1, g.h0, g.w0, &model.conv1_w, &model.conv1_b, c1, &mut ws.a1);
    relu_inplace(&mut ws.a1);
    maxpool2(&ws.a1, c1, g.h0, g.w0, &mut ws.p1, &mut ws.arg1);
    conv3x3_same(&ws.p1, c1, g.h1, g.w1, &model.conv2_w, &model.conv2_b, c2, &mut ws.a2);
    relu_inplace(&mut ws.a2);
    maxpool2(&ws.a2, c2, g.h1, g.w1, &mut ws.p2, &mut ws.arg2);
    conv3x3_same(&ws.p2, c2, g.h2, g.w2, &model.conv3_w, &model.conv3_b, c3, &mut ws.a3);
    relu_inplace(&mut ws.a3);
    let plane = g.h2 * g.w2;
    for c in 0..c3 {
        ws.gap[c] = ws.a3[c * plane..(c + 1) * plane].iter().sum::<f64>() / plane as f64;
    }
    for k in 0..2 {
        ws.scores[k] = model.fc_b[k]
            + ws.gap
                .iter()
                .enumerate()
                .map(|(c, &v)| model.fc_w[k * c3 + c] * v)
                .sum::<f64>();
    }
}

struct CnnGrads {
    conv1_w: Vec<f64>,
    conv1_b: Vec<f64>,
    conv2_w: Vec<f64>,
    conv2_b: Vec<f64>,
    conv3_w: Vec<f64>,
    conv3_b: Vec<f64>,
    fc_w: Vec<f64>,
    fc_b: Vec<f64>,
}

impl CnnGrads {
    fn zeroed(model: &CnnModel) -> Self {
        Self {
            conv1_w: vec![0.0; model.conv1_w.len()],
            conv1_b: vec![0.0; model.conv1_b.len()],
            conv2_w: vec![0.0; model.conv2_w.len()],
            conv2_b: vec![0.0; model.conv2_b.len()],
            conv3_w: vec![0.0; model.conv3_w.len()],
            conv3_b: vec![0.0; model.conv3_b.len()],
            fc_w: vec![0.0; model.fc_w.len()],
            fc_b: vec![0.0; model.fc_b.len()],
        }
    }

    fn clear(&mut self) {
        for v in [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.conv3_w,
            &mut self.conv3_b,
            &mut self.fc_w,
            &mut self.fc_b,
        ] {
            v.fill(0.0);
        }
    }
}

/// Backprop one sample whose loss is weighted by `scale` (1/batch for a
/// batch-mean objective). `d_scores` is dL/dscores for that weight.
fn backward(
    model: &CnnModel,
    x: &[f64],
    ws: &mut Workspace,
    d_scores: [f64; 2],
    grads: &mut CnnGrads,
) {
    let g = model.geometry();
    let [c1, c2, c3] = model.channels;
    let plane = g.h2 * g.w2;

    let mut d_gap = vec![0.0; c3];
    for k in 0..2 {
        grads.fc_b[k] += d_scores[k];
        for c in 0..c3 {
            grads.fc_w[k * c3 + c] += d_scores[k] * ws.gap[c];
            d_gap[c] += d_scores[k] * model.fc_w[k * c3 + c];
        }
    }
    for c in 0..c3 {
        let dv = d_gap[c] / plane as f64;
        ws.d_a3[c * plane..(c + 1) * plane].fill(dv);
    }
    relu_backward_inplace(&mut ws.d_a3, &ws.a3);
    conv3x3_same_backward(
        &ws.p2, c2, g.h2, g.w2, &model.conv3_w, c3, &ws.d_a3,
        &mut ws.d_p2, &mut grads.conv3_w, &mut grads.conv3_b,
    );
    maxpool2_backward(&ws.d_p2, &ws.arg2, &mut ws.d_a2);
    relu_backward_inplace(&mut ws.d_a2, &ws.a2);
    conv3x3_same_backward(
        &ws.p1, c1, g.h1, g.w1, &model.conv2_w, c2, &ws.d_a2,
        &mut ws.d_p1, &mut grads.conv2_w, &mut grads.conv2_b,
    );
    maxpool2_backward(&ws.d_p1, &ws.arg1, &mut ws.d_a1);
    relu_backward_inplace(&mut ws.d_a1, &ws.a1);
    conv3x3_same_backward(
        x, 1, g.h0, g.w0, &model.conv1_w, c1, &ws.d_a1,
        &mut ws.d_input, &mut grads.conv1_w, &mut grads.conv1_b,
    );
}

fn label_index(label: Label) -> usize {
    match label {
        Label::NoJam => 0,
        Label::Jam => 1,
    }
}

/// Mean cross-entropy of a batch under the current parameters, exposed for
/// finite-difference verification.
pub fn cnn_batch_loss(model: &CnnModel, batch: &[(&[f64], Label)]) -> f64 {
    let mut ws = Workspace::new(model);
    let mut loss = 0.0;
    for (x, label) in batch {
        forward(model, x, &mut ws);
        let p = softmax(&ws.scores);
        loss += -p[label_index(*label)].max(1e-300).ln();
    }
    loss / batch.len() as f64
}

/// Per-epoch training log entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnnEpochStat {
    pub epoch: usize,
    pub loss: f64,
    /// Running accuracy of the shuffled training batches during the epoch.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct CnnTrainResult {
    pub model: CnnModel,
    pub log: Vec<CnnEpochStat>,
}

/// Train the binary classifier. Requires both classes, balanced within one
/// image. Deterministic for a given seed.
pub fn cnn_train(images: &[(GrayImage, Label)], hyper: &CnnHyper) -> Result<CnnTrainResult> {
    if images.is_empty() {
        return Err(Error::Data("no training images".into()));
    }
    let n_jam = images.iter().filter(|(_, l)| *l == Label::Jam).count();
    let n_nojam = images.len() - n_jam;
    if n_jam == 0 || n_nojam == 0 {
        return Err(Error::Data(format!(
            "binary training needs both classes (got {n_nojam} nojam, {n_jam} jam)"
        )));
    }
    if n_jam.abs_diff(n_nojam) > 1 {
        return Err(Error::Data(format!(
            "classes must be balanced within one image (got {n_nojam} nojam, {n_jam} jam)"
        )));
    }
    let (w, h) = (images[0].0.width(), images[0].0.height());
    if images.iter().any(|(im, _)| im.width() != w || im.height() != h) {
        return Err(Error::Shape("training images have mixed dimensions".into()));
    }
    if hyper.epochs == 0 || hyper.batch == 0 {
        return Err(Error::Parameter("epochs and batch must be > 0".into()));
    }

    let mut model = CnnModel::seeded(h, w, hyper)?;
    let mut ws = Workspace::new(&model);
    let mut grads = CnnGrads::zeroed(&model);
    let mut vel = CnnGrads::zeroed(&model);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut shuffle_rng = rng_stream(hyper.seed, 0xc45);
    let mut log = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        for i in (1..order.len()).rev() {
            let swap = shuffle_rng.gen_range(0..=i);
            order.swap(i, swap);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        let mut correct = 0usize;
        for ids in order.chunks(hyper.batch) {
            grads.clear();
            let scale = 1.0 / ids.len() as f64;
            let mut batch_loss = 0.0;
            for &i in ids {
                let (img, label) = &images[i];
                forward(&model, img.pixels(), &mut ws);
                let p = softmax(&ws.scores);
                let t = label_index(*label);
                batch_loss += -p[t].max(1e-300).ln() * scale;
                let predicted = if ws.scores[1] > ws.scores[0] { 1 } else { 0 };
                if predicted == t {
                    correct += 1;
                }
                let mut d_scores = [p[0] * scale, p[1] * scale];
                d_scores[t] -= scale;
                backward(&model, img.pixels(), &mut ws, d_scores, &mut grads);
            }
            epoch_loss += batch_loss;
            batches += 1.0;
            for (p, (v, g)) in [
                (&mut model.conv1_w, (&mut vel.conv1_w, &grads.conv1_w)),
                (&mut model.conv1_b, (&mut vel.conv1_b, &grads.conv1_b)),
                (&mut model.conv2_w, (&mut vel.conv2_w, &grads.conv2_w)),
                (&mut model.conv2_b, (&mut vel.conv2_b, &grads.conv2_b)),
                (&mut model.conv3_w, (&mut vel.conv3_w, &grads.conv3_w)),
                (&mut model.conv3_b, (&mut vel.conv3_b, &grads.conv3_b)),
                (&mut model.fc_w, (&mut vel.fc_w, &grads.fc_w)),
                (&mut model.fc_b, (&mut vel.fc_b, &grads.fc_b)),
            ] {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = hyper.momentum * *vi - hyper.learning_rate * gi;
                    *pi += *vi;
                }
            }
        }
        log.push(CnnEpochStat {
            epoch: epoch + 1,
            loss: epoch_loss / batches,
            train_accuracy: correct as f64 / images.len() as f64,
        });
    }
    Ok(CnnTrainResult { model, log })
}

/// Largest relative deviation between the training-path batch gradient
/// and central finite differences of `cnn_batch_loss`, on a seeded
/// miniature of the architecture. Verification hook for the conv backprop.
pub fn gradient_check(input_h: usize, input_w: usize, channels: [usize; 3], seed: u64) -> f64 {
    let hyper = CnnHyper { channels, seed, ..CnnHyper::default() };
    let mut model = CnnModel::seeded(input_h, input_w, &hyper).expect("miniature geometry");
    model.fc_b = vec![0.05, -0.02];
    let mut rng = rng_stream(seed, 0xfd);
    let data: Vec<(Vec<f64>, Label)> = (0..3)
        .map(|k| {
            let px: Vec<f64> = (0..input_h * input_w).map(|_| rng.gen_range(0.0..1.0)).collect();
            (px, if k % 2 == 0 { Label::NoJam } else { Label::Jam })
        })
        .collect();
    let batch: Vec<(&[f64], Label)> = data.iter().map(|(v, l)| (v.as_slice(), *l)).collect();

    let mut ws = Workspace::new(&model);
    let mut grads = CnnGrads::zeroed(&model);
    let scale = 1.0 / batch.len() as f64;
    for (x, label) in &batch {
        forward(&model, x, &mut ws);
        let p = softmax(&ws.scores);
        let t = label_index(*label);
        let mut d_scores = [p[0] * scale, p[1] * scale];
        d_scores[t] -= scale;
        backward(&model, x, &mut ws, d_scores, &mut grads);
    }

    let eps = 1e-5;
    let mut max_rel = 0.0f64;
    type Select = fn(&mut CnnModel) -> &mut Vec<f64>;
    let selectors: [(Select, &Vec<f64>); 8] = [
        ((|m| &mut m.conv1_w) as Select, &grads.conv1_w),
        ((|m| &mut m.conv1_b) as Select, &grads.conv1_b),
        ((|m| &mut m.conv2_w) as Select, &grads.conv2_w),
        ((|m| &mut m.conv2_b) as Select, &grads.conv2_b),
        ((|m| &mut m.conv3_w) as Select, &grads.conv3_w),
        ((|m| &mut m.conv3_b) as Select, &grads.conv3_b),
        ((|m| &mut m.fc_w) as Select, &grads.fc_w),
        ((|m| &mut m.fc_b) as Select, &grads.fc_b),
    ];
    for (select, analytic) in selectors {
        for idx in 0..analytic.len() {
            let mut m = model.clone();
            select(&mut m)[idx] += eps;
            let up = cnn_batch_loss(&m, &batch);
            let mut m = model.clone();
            select(&mut m)[idx] -= eps;
            let down = cnn_batch_loss(&m, &batch);
            let numeric = (up - down) / (2.0 * eps);
            let rel =
                (analytic[idx] - numeric).abs() / analytic[idx].abs().max(numeric.abs()).max(1e-7);
            max_rel = max_rel.max(rel);
        }
    }
    max_rel
}

/// Class scores for one image.
pub fn cnn_scores(model: &CnnModel, img: &GrayImage) -> Result<[f64; 2]> {
    if img.width() != model.input_w || img.height() != model.input_h {
        return Err(Error::Shape(format!(
            "image {}x{} does not match model input {}x{}",
            img.width(),
            img.height(),
            model.input_w,
            model.input_h
        )));
    }
    let mut ws = Workspace::new(model);
    forward(model, img.pixels(), &mut ws);
    Ok(ws.scores)
}

/// Softmax over the two class scores; the label is the argmax and an exact
/// tie stays no-jam. The verdict score is the jam-class probability.
pub fn cnn_detect(model: &CnnModel, img: &GrayImage) -> Result<Verdict> {
    let scores = cnn_scores(model, img)?;
    let p = softmax(&scores);
    Ok(Verdict {
        label: if scores[1] > scores[0] { Label::Jam } else { Label::NoJam },
        score: p[1],
    })
}
