use std::fmt::Write as _;

use super::adam::{Adam, AdamConfig};
use super::augment::{augment_pair, AugmentConfig};
use super::layer::{LayerGrad, Network};
use super::loss::{bce_with_logits, l1_loss, GanLosses};
use super::patchgan::{PatchGan, PatchGanConfig};
use super::tensor::Tensor;
use super::unet::{UNet, UNetConfig};
use super::NnetError;
use crate::image::{to_level, GrayImage, Rng};

/// Generator and discriminator architecture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub generator: UNetConfig,
    pub discriminator: PatchGanConfig,
}

impl ModelConfig {
    /// Generator and discriminator sharing `base_channels`.
    pub fn new(
        image_size: usize,
        base_channels: usize,
        num_down_layers: usize,
    ) -> Result<Self, NnetError> {
        let m = Self {
            generator: UNetConfig::new(image_size, base_channels)?,
            discriminator: PatchGanConfig {
                num_down_layers,
                base_channels,
            },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn image_size(&self) -> usize {
        self.generator.image_size
    }

    pub fn validate(&self) -> Result<(), NnetError> {
        UNetConfig::new(self.generator.image_size, self.generator.base_channels)?;
        PatchGan::<f32>::new(self.discriminator)?;
        if self.discriminator.map_size(self.image_size()).is_none() {
            return Err(NnetError::Config(format!(
                "{} down layers leave no logit map for {}x{} images",
                self.discriminator.num_down_layers,
                self.image_size(),
                self.image_size()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub lambda_l1: f64,
    pub seed: u64,
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            adam: AdamConfig::default(),
            lambda_l1: 100.0,
            seed: 0,
            augment: AugmentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnetError> {
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(NnetError::Config(format!(
                "lr must be positive, got {}",
                self.adam.lr
            )));
        }
        if !(self.lambda_l1 >= 0.0 && self.lambda_l1.is_finite()) {
            return Err(NnetError::Config(format!(
                "lambda_l1 must be non-negative, got {}",
                self.lambda_l1
            )));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(NnetError::Config("Adam betas must lie in [0, 1)".into()));
        }
        self.augment.validate()
    }
}

/// One thermography (input) / geometry (target) training example.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: GrayImage,
    pub target: GrayImage,
}

/// Mean losses over one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLosses {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_g_adv: f64,
    pub loss_g_l1: f64,
}

/// Loss curve CSV: `epoch,loss_d,loss_g_adv,loss_g_l1`.
pub fn curve_csv(curve: &[EpochLosses]) -> String {
    let mut s = String::from("epoch,loss_d,loss_g_adv,loss_g_l1\n");
    for e in curve {
        writeln!(
            s,
            "{},{},{},{}",
            e.epoch, e.loss_d, e.loss_g_adv, e.loss_g_l1
        )
        .unwrap();
    }
    s
}

/// Trained networks, optimizer state and the configuration that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Physical metadata attached to generated geometry images.
    pub target_scale: f64,
    pub target_offset: f64,
    pub generator: UNet<f32>,
    pub discriminator: PatchGan<f32>,
    pub adam_g: Adam<f32>,
    pub adam_d: Adam<f32>,
    pub epoch: u32,
}

impl Checkpoint {
    /// Xavier-initialized networks with fresh optimizer state.
    pub fn init(model: ModelConfig, train: TrainConfig, rng: &mut Rng) -> Result<Self, NnetError> {
        model.validate()?;
        let mut generator = UNet::new(model.generator);
        let mut discriminator = PatchGan::new(model.discriminator)?;
        generator.xavier(rng);
        discriminator.xavier(rng);
        Ok(Self {
            model,
            train,
            target_scale: 1.0,
            target_offset: 0.0,
            adam_g: Adam::new(&generator, train.adam),
            adam_d: Adam::new(&discriminator, train.adam),
            generator,
            discriminator,
            epoch: 0,
        })
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub curve: Vec<EpochLosses>,
    /// Losses of every iteration in order.
    pub steps: Vec<GanLosses>,
}

/// Levels `[0, 255]` to `[-1, 1]`.
pub fn image_to_tensor(img: &GrayImage) -> Tensor<f32> {
    Tensor::from_vec(
        &[1, img.height(), img.width()],
        img.data()
            .iter()
            .map(|&v| f32::from(v) / 127.5 - 1.0)
            .collect(),
    )
    .expect("length matches")
}

/// `[-1, 1]` to levels via `(v + 1) * 127.5`, rounded half-up.
pub fn tensor_to_image(t: &Tensor<f32>) -> Result<GrayImage, NnetError> {
    let (_, h, w) = t.dims3()?;
    let data = t
        .data()
        .iter()
        .map(|&v| to_level((f64::from(v) + 1.0) * 127.5))
        .collect();
    Ok(GrayImage::new(w, h, data)?)
}

fn sum_grads(a: &mut [LayerGrad<f32>], b: &[LayerGrad<f32>]) {
    for (x, y) in a.iter_mut().zip(b) {
        x.weight.add_assign(&y.weight);
        x.bias.add_assign(&y.bias);
    }
}

/// One discriminator update followed by one generator update on a single pair.
fn train_step(
    ck: &mut Checkpoint,
    x: &Tensor<f32>,
    y: &Tensor<f32>,
    lambda_l1: f64,
) -> Result<GanLosses, NnetError> {
    let g_cache = ck.generator.forward(x)?;
    let fake = &g_cache.output;

    let real_c = ck.discriminator.forward(x, y)?;
    let fake_c = ck.discriminator.forward(x, fake)?;
    let (l_real, d_real) = bce_with_logits(&real_c.logits, 1.0);
    let (l_fake, d_fake) = bce_with_logits(&fake_c.logits, 0.0);
    let (mut gd, _) = ck.discriminator.backward(&real_c, &d_real, false)?;
    let (gf, _) = ck.discriminator.backward(&fake_c, &d_fake, false)?;
    sum_grads(&mut gd, &gf);
    ck.adam_d.step(&mut ck.discriminator, &gd)?;

    let adv_c = ck.discriminator.forward(x, fake)?;
    let (l_adv, d_adv) = bce_with_logits(&adv_c.logits, 1.0);
    let (_, d_fake_in) = ck.discriminator.backward(&adv_c, &d_adv, true)?;
    let (l1, d_l1) = l1_loss(fake, y);
    let lam = lambda_l1 as f32;
    let d_out = d_fake_in
        .expect("requested")
        .zip_map(&d_l1, |a, b| a + lam * b);
    let gg = ck.generator.backward(&g_cache, &d_out)?;
    ck.adam_g.step(&mut ck.generator, &gg)?;

    Ok(GanLosses {
        loss_d: l_real + l_fake,
        loss_g: l_adv + lambda_l1 * l1,
        loss_g_adv: l_adv,
        l1,
    })
}

/// Trains a fresh model with batch size 1: every epoch visits the pairs in a
/// seeded random order, and each visit augments the pair, updates the
/// discriminator, then updates the generator against the updated
/// discriminator. `on_epoch` sees the mean losses after each epoch.
pub fn train(
    dataset: &[TrainingPair],
    model: ModelConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLosses),
) -> Result<TrainOutcome, NnetError> {
    cfg.validate()?;
    model.validate()?;
    if dataset.is_empty() {
        return Err(NnetError::Config("training needs at least one pair".into()));
    }
    let s = model.image_size();
    for (i, p) in dataset.iter().enumerate() {
        for img in [&p.input, &p.target] {
            if (img.width(), img.height()) != (s, s) {
                return Err(NnetError::Shape(format!(
                    "pair {i} is {}x{}, model expects {s}x{s}",
                    img.width(),
                    img.height()
                )));
            }
        }
    }

    let mut rng = Rng::new(cfg.seed);
    let mut init_rng = rng.fork();
    let mut ck = Checkpoint::init(model, *cfg, &mut init_rng)?;
    ck.target_scale = dataset[0].target.scale();
    ck.target_offset = dataset[0].target.offset();

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut steps = Vec::with_capacity(cfg.epochs * dataset.len());
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut sums = [0.0f64; 3];
        for &i in &order {
            let p = &dataset[i];
            let (xa, ya) = augment_pair(&p.input, &p.target, &mut rng, &cfg.augment)?;
            let losses = train_step(
                &mut ck,
                &image_to_tensor(&xa),
                &image_to_tensor(&ya),
                cfg.lambda_l1,
            )?;
            if !(losses.loss_d.is_finite() && losses.loss_g.is_finite()) {
                return Err(NnetError::NonFiniteLoss { epoch, sample: i });
            }
            sums[0] += losses.loss_d;
            sums[1] += losses.loss_g_adv;
            sums[2] += losses.l1;
            steps.push(losses);
        }
        let n = dataset.len() as f64;
        let e = EpochLosses {
            epoch,
            loss_d: sums[0] / n,
            loss_g_adv: sums[1] / n,
            loss_g_l1: sums[2] / n,
        };
        ck.epoch = epoch as u32;
        on_epoch(&e);
        curve.push(e);
    }
    Ok(TrainOutcome {
        checkpoint: ck,
        curve,
        steps,
    })
}

/// Generates a geometry image from a thermography image.
pub fn infer(ck: &Checkpoint, x: &GrayImage) -> Result<GrayImage, NnetError> {
    let s = ck.model.image_size();
    if (x.width(), x.height()) != (s, s) {
        return Err(NnetError::Shape(format!(
            "input is {}x{}, checkpoint expects {s}x{s}",
            x.width(),
            x.height()
        )));
    }
    let out = ck.generator.forward(&image_to_tensor(x))?.output;
    Ok(tensor_to_image(&out)?.with_scale(ck.target_scale, ck.target_offset)?)
}
