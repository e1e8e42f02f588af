//! `P2PW` checkpoint files.
//!
//! Layout, integers little-endian:
//!
//! ```text
//! "P2PW" | version u32 | config_len u32 | config (key=value lines, UTF-8)
//! | n u32 | n x tensor                       parameters, generator then discriminator
//! | step_g u64 | step_d u64 | m u32 | m x tensor   Adam moments ("<param>.m", "<param>.v")
//! | epoch u32
//! tensor = name_len u32 | name | ndim u32 | ndim x dim u32 | f32 data
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::adam::{Adam, AdamConfig};
use super::augment::AugmentConfig;
use super::layer::{Layer, Network};
use super::patchgan::{PatchGan, PatchGanConfig};
use super::tensor::Tensor;
use super::train::{Checkpoint, ModelConfig, TrainConfig};
use super::unet::{UNet, UNetConfig};
use super::NnetError;

const MAGIC: &[u8; 4] = b"P2PW";
const VERSION: u32 = 1;

fn config_block(ck: &Checkpoint) -> String {
    let m = &ck.model;
    let t = &ck.train;
    let entries: [(&str, String); 15] = [
        ("image_size", m.generator.image_size.to_string()),
        ("gen_base_channels", m.generator.base_channels.to_string()),
        (
            "disc_down_layers",
            m.discriminator.num_down_layers.to_string(),
        ),
        (
            "disc_base_channels",
            m.discriminator.base_channels.to_string(),
        ),
        ("epochs", t.epochs.to_string()),
        ("lr", t.adam.lr.to_string()),
        ("beta1", t.adam.beta1.to_string()),
        ("beta2", t.adam.beta2.to_string()),
        ("eps", t.adam.eps.to_string()),
        ("lambda_l1", t.lambda_l1.to_string()),
        ("seed", t.seed.to_string()),
        ("jitter_scale", t.augment.jitter_scale.to_string()),
        ("mirror_prob", t.augment.mirror_prob.to_string()),
        ("target_scale", ck.target_scale.to_string()),
        ("target_offset", ck.target_offset.to_string()),
    ];
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor<f32>) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, t.shape().len() as u32);
    for &d in t.shape() {
        put_u32(out, d as u32);
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn moment_names<N: Network<f32>>(prefix: &str, net: &N) -> Vec<String> {
    net.named_params()
        .into_iter()
        .map(|(n, _)| format!("{prefix}.{n}"))
        .collect()
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    let cfg = config_block(ck);
    put_u32(&mut out, cfg.len() as u32);
    out.extend_from_slice(cfg.as_bytes());

    let g_names = moment_names("generator", &ck.generator);
    let d_names = moment_names("discriminator", &ck.discriminator);
    let params: Vec<(&String, &Tensor<f32>)> = g_names
        .iter()
        .zip(ck.generator.named_params().into_iter().map(|(_, t)| t))
        .chain(
            d_names
                .iter()
                .zip(ck.discriminator.named_params().into_iter().map(|(_, t)| t)),
        )
        .collect();
    put_u32(&mut out, params.len() as u32);
    for (name, t) in &params {
        put_tensor(&mut out, name, t);
    }

    out.extend_from_slice(&ck.adam_g.step.to_le_bytes());
    out.extend_from_slice(&ck.adam_d.step.to_le_bytes());
    put_u32(&mut out, 2 * params.len() as u32);
    for (names, adam) in [(&g_names, &ck.adam_g), (&d_names, &ck.adam_d)] {
        for (i, name) in names.iter().enumerate() {
            put_tensor(&mut out, &format!("{name}.m"), &adam.m[i]);
            put_tensor(&mut out, &format!("{name}.v"), &adam.v[i]);
        }
    }
    put_u32(&mut out, ck.epoch);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnetError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| NnetError::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensor(
        &mut self,
        expect_name: &str,
        expect_shape: &[usize],
    ) -> Result<Tensor<f32>, NnetError> {
        let len = self.u32()? as usize;
        let name = std::str::from_utf8(self.take(len)?)
            .map_err(|_| NnetError::Format("tensor name is not UTF-8".into()))?;
        if name != expect_name {
            return Err(NnetError::Format(format!(
                "expected tensor {expect_name}, found {name}"
            )));
        }
        let ndim = self.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(self.u32()? as usize);
        }
        if shape != expect_shape {
            return Err(NnetError::Format(format!(
                "tensor {name} has shape {shape:?}, architecture needs {expect_shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        let raw = self.take(n * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::from_vec(&shape, data)
    }
}

fn parse_config(text: &str) -> Result<BTreeMap<&str, &str>, NnetError> {
    let mut map = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| NnetError::Format(format!("config line without '=': {line}")))?;
        map.insert(k.trim(), v.trim());
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(map: &BTreeMap<&str, &str>, key: &str) -> Result<T, NnetError> {
    map.get(key)
        .ok_or_else(|| NnetError::Format(format!("config block lacks {key}")))?
        .parse()
        .map_err(|_| NnetError::Format(format!("config value for {key} does not parse")))
}

fn read_layers<N: Network<f32>>(
    r: &mut Reader,
    prefix: &str,
    reference: &N,
) -> Result<Vec<Layer<f32>>, NnetError> {
    let mut layers = reference.layers().to_vec();
    for l in &mut layers {
        l.weight = r.tensor(&format!("{prefix}.{}.weight", l.name), l.weight.shape())?;
        l.bias = r.tensor(&format!("{prefix}.{}.bias", l.name), l.bias.shape())?;
    }
    Ok(layers)
}

fn read_moments<N: Network<f32>>(
    r: &mut Reader,
    prefix: &str,
    net: &N,
    adam: &mut Adam<f32>,
) -> Result<(), NnetError> {
    for (i, (name, t)) in net.named_params().into_iter().enumerate() {
        adam.m[i] = r.tensor(&format!("{prefix}.{name}.m"), t.shape())?;
        adam.v[i] = r.tensor(&format!("{prefix}.{name}.v"), t.shape())?;
    }
    Ok(())
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<Checkpoint, NnetError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnetError::Format("not a P2PW checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnetError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let len = r.u32()? as usize;
    let text = std::str::from_utf8(r.take(len)?)
        .map_err(|_| NnetError::Format("config block is not UTF-8".into()))?;
    let map = parse_config(text)?;

    let model = ModelConfig {
        generator: UNetConfig::new(
            field(&map, "image_size")?,
            field(&map, "gen_base_channels")?,
        )?,
        discriminator: PatchGanConfig {
            num_down_layers: field(&map, "disc_down_layers")?,
            base_channels: field(&map, "disc_base_channels")?,
        },
    };
    model.validate()?;
    let adam = AdamConfig {
        lr: field(&map, "lr")?,
        beta1: field(&map, "beta1")?,
        beta2: field(&map, "beta2")?,
        eps: field(&map, "eps")?,
    };
    let train = TrainConfig {
        epochs: field(&map, "epochs")?,
        adam,
        lambda_l1: field(&map, "lambda_l1")?,
        seed: field(&map, "seed")?,
        augment: AugmentConfig {
            jitter_scale: field(&map, "jitter_scale")?,
            mirror_prob: field(&map, "mirror_prob")?,
        },
    };

    let g_ref = UNet::<f32>::new(model.generator);
    let d_ref = PatchGan::<f32>::new(model.discriminator)?;
    let count = r.u32()? as usize;
    let expected = 2 * (g_ref.layers().len() + d_ref.layers().len());
    if count != expected {
        return Err(NnetError::Format(format!(
            "checkpoint holds {count} tensors, architecture needs {expected}"
        )));
    }
    let generator = UNet::from_layers(model.generator, read_layers(&mut r, "generator", &g_ref)?)?;
    let discriminator = PatchGan::from_layers(
        model.discriminator,
        read_layers(&mut r, "discriminator", &d_ref)?,
    )?;

    let mut adam_g = Adam::new(&generator, adam);
    let mut adam_d = Adam::new(&discriminator, adam);
    adam_g.step = r.u64()?;
    adam_d.step = r.u64()?;
    let moments = r.u32()? as usize;
    if moments != 2 * expected {
        return Err(NnetError::Format(format!(
            "checkpoint holds {moments} moment tensors, expected {}",
            2 * expected
        )));
    }
    read_moments(&mut r, "generator", &generator, &mut adam_g)?;
    read_moments(&mut r, "discriminator", &discriminator, &mut adam_d)?;
    let epoch = r.u32()?;
    if r.pos != buf.len() {
        return Err(NnetError::Format(format!(
            "{} trailing bytes after checkpoint",
            buf.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        model,
        train,
        target_scale: field(&map, "target_scale")?,
        target_offset: field(&map, "target_offset")?,
        generator,
        discriminator,
        adam_g,
        adam_d,
        epoch,
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<(), NnetError> {
    std::fs::write(path, encode_checkpoint(ck))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, NnetError> {
    decode_checkpoint(&std::fs::read(path)?)
}
