//! Compact binary adapter checkpoints.
//!
//! The spectral adapter's selling point is storage: a file holds the seed
//! plus the `n` float32 coefficients per layer, and the entry coordinates
//! (and, for the basis-ablation kinds, the basis matrices) are regenerated
//! from the seed on load. Layout, all little-endian:
//!
//! ```text
//! magic "SPFT" | version u16 | method u8 | alpha f32 | seed u64
//! | n_or_r u32 | layer_count u32 | bias mode u8 | f_c f32 | bandwidth f32
//! then per layer:
//! name_len u16 | name (UTF-8) | d1 u32 | d2 u32 | payload
//! ```
//!
//! Payloads: fourier = `n` f32 coefficients; lora = `A` (`r x d2`) then
//! `B` (`d1 x r`), row-major f32; general-basis = basis-kind u8 followed
//! by `n` f32 coefficients.
//!
//! Files are written atomically (temp file + rename), so a reader never
//! sees a partial checkpoint.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::adapter::{
    budget, Adapter, BasisKind, BudgetMethod, FourierAdapter, GeneralBasisAdapter, LoraAdapter,
    ModelDims,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::{sample_biased, BiasMode, BiasSpec};

const MAGIC: &[u8; 4] = b"SPFT";
const VERSION: u16 = 1;

const METHOD_FOURIER: u8 = 1;
const METHOD_LORA: u8 = 2;
const METHOD_GENERAL: u8 = 3;

const BIAS_NONE: u8 = 0;
const BIAS_BANDPASS: u8 = 1;

const BASIS_FOURIER: u8 = 1;
const BASIS_RANDOM: u8 = 2;
const BASIS_ORTHOGONAL: u8 = 3;

const MAX_DIM: u32 = 1 << 20;

/// Shared configuration of every layer in a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointConfig {
    pub alpha: f64,
    pub seed: u64,
    /// `n` for the spectral kinds, `r` for the low-rank kind.
    pub n_or_r: u32,
    pub bias: BiasSpec,
}

fn method_byte(adapter: &Adapter) -> u8 {
    match adapter {
        Adapter::Fourier(_) => METHOD_FOURIER,
        Adapter::Lora(_) => METHOD_LORA,
        Adapter::General(_) => METHOD_GENERAL,
    }
}

fn basis_byte(kind: BasisKind) -> u8 {
    match kind {
        BasisKind::Fourier => BASIS_FOURIER,
        BasisKind::Random => BASIS_RANDOM,
        BasisKind::Orthogonal => BASIS_ORTHOGONAL,
    }
}

fn push_f32(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&(v as f32).to_le_bytes());
}

fn push_matrix_f32(buf: &mut Vec<u8>, m: &Matrix) {
    for &v in m.data() {
        push_f32(buf, v);
    }
}

/// Serialize `adapters` (name, adapter pairs) to `path`. Returns bytes
/// written. All layers must agree with `config` and with each other on
/// method, alpha, and `n`/`r`; spectral entries must be exactly the ones
/// the seed regenerates.
pub fn save(path: &Path, adapters: &[(String, Adapter)], config: &CheckpointConfig) -> Result<u64> {
    let method = adapters
        .first()
        .map(|(_, a)| method_byte(a))
        .unwrap_or(METHOD_FOURIER);
    for (name, a) in adapters {
        if method_byte(a) != method {
            return Err(Error::InconsistentLayers(format!(
                "layer '{name}' has a different adapter kind"
            )));
        }
        check_layer(name, a, config)?;
    }

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(method);
    push_f32(&mut buf, config.alpha);
    buf.extend_from_slice(&config.seed.to_le_bytes());
    buf.extend_from_slice(&config.n_or_r.to_le_bytes());
    buf.extend_from_slice(&(adapters.len() as u32).to_le_bytes());
    match config.bias.mode {
        BiasMode::None => {
            buf.push(BIAS_NONE);
            push_f32(&mut buf, 0.0);
            push_f32(&mut buf, 0.0);
        }
        BiasMode::Bandpass => {
            buf.push(BIAS_BANDPASS);
            push_f32(&mut buf, config.bias.f_c);
            push_f32(&mut buf, config.bias.bandwidth);
        }
    }

    for (name, a) in adapters {
        let bytes = name.as_bytes();
        if bytes.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "layer name '{}...' exceeds 65535 bytes",
                &name[..16.min(name.len())]
            )));
        }
        buf.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
        buf.extend_from_slice(bytes);
        let (d1, d2) = layer_shape(a);
        buf.extend_from_slice(&(d1 as u32).to_le_bytes());
        buf.extend_from_slice(&(d2 as u32).to_le_bytes());
        match a {
            Adapter::Fourier(f) => {
                for &c in &f.coeffs {
                    push_f32(&mut buf, c);
                }
            }
            Adapter::Lora(l) => {
                push_matrix_f32(&mut buf, &l.a);
                push_matrix_f32(&mut buf, &l.b);
            }
            Adapter::General(g) => {
                buf.push(basis_byte(g.kind));
                for &c in &g.coeffs {
                    push_f32(&mut buf, c);
                }
            }
        }
    }

    // Atomic write: stage next to the destination, then rename over it.
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "checkpoint".to_string())
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(buf.len() as u64)
}

fn layer_shape(a: &Adapter) -> (usize, usize) {
    match a {
        Adapter::Fourier(f) => (f.d1, f.d2),
        Adapter::Lora(l) => (l.b.rows(), l.a.cols()),
        Adapter::General(g) => g.entries.shape(),
    }
}

fn check_layer(name: &str, a: &Adapter, config: &CheckpointConfig) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::InconsistentLayers(format!(
            "layer '{name}': {what}"
        )))
    };
    match a {
        Adapter::Fourier(f) => {
            if f.coeffs.len() != config.n_or_r as usize {
                return fail("coefficient count differs from the shared n");
            }
            if f.alpha != config.alpha {
                return fail("alpha differs from the shared alpha");
            }
            let regen = sample_biased(config.seed, f.d1, f.d2, f.coeffs.len(), &config.bias)?;
            if regen != f.entries {
                return fail("entries are not the ones the shared seed generates");
            }
        }
        Adapter::Lora(l) => {
            if l.rank != config.n_or_r as usize {
                return fail("rank differs from the shared r");
            }
            if l.alpha_lora != config.alpha {
                return fail("alpha differs from the shared alpha");
            }
        }
        Adapter::General(g) => {
            if g.coeffs.len() != config.n_or_r as usize {
                return fail("coefficient count differs from the shared n");
            }
            if g.alpha != config.alpha {
                return fail("alpha differs from the shared alpha");
            }
            let (d1, d2) = g.entries.shape();
            let regen = sample_biased(config.seed, d1, d2, g.coeffs.len(), &config.bias)?;
            if regen != g.entries {
                return fail("entries are not the ones the shared seed generates");
            }
        }
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + len > self.buf.len() {
            return Err(Error::Truncated(format!(
                "needed {len} bytes for {what} at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f64> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as f64)
    }

    fn f32_vec(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.take(4 * len, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

/// Read a checkpoint back. Spectral entries (and basis matrices for the
/// ablation kinds) are regenerated from the stored seed.
pub fn load(path: &Path) -> Result<(Vec<(String, Adapter)>, CheckpointConfig)> {
    let buf = fs::read(path)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = c.u16("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let method = c.u8("method")?;
    let alpha = c.f32("alpha")?;
    let seed = c.u64("seed")?;
    let n_or_r = c.u32("n_or_r")?;
    let layer_count = c.u32("layer_count")?;
    let bias_mode = c.u8("bias mode")?;
    let f_c = c.f32("bias f_c")?;
    let bandwidth = c.f32("bias bandwidth")?;
    let bias = match bias_mode {
        BIAS_NONE => BiasSpec::none(),
        BIAS_BANDPASS => BiasSpec::bandpass(f_c, bandwidth),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown bias mode byte {other}"
            )))
        }
    };

    let mut adapters = Vec::with_capacity(layer_count as usize);
    for _ in 0..layer_count {
        let name_len = c.u16("layer name length")? as usize;
        let name = String::from_utf8(c.take(name_len, "layer name")?.to_vec())
            .map_err(|_| Error::Truncated("layer name is not valid UTF-8".to_string()))?;
        let d1 = c.u32("d1")?;
        let d2 = c.u32("d2")?;
        if d1 == 0 || d2 == 0 || d1 > MAX_DIM || d2 > MAX_DIM {
            return Err(Error::BadDimensions { name, d1, d2 });
        }
        let (d1u, d2u) = (d1 as usize, d2 as usize);
        let adapter = match method {
            METHOD_FOURIER => {
                let coeffs = c.f32_vec(n_or_r as usize, "fourier coefficients")?;
                let entries = sample_biased(seed, d1u, d2u, n_or_r as usize, &bias)?;
                Adapter::Fourier(FourierAdapter::from_parts(entries, coeffs, alpha)?)
            }
            METHOD_LORA => {
                let r = n_or_r as usize;
                let a_data = c.f32_vec(r * d2u, "lora A factor")?;
                let b_data = c.f32_vec(d1u * r, "lora B factor")?;
                let a = Matrix::from_vec(r, d2u, a_data);
                let b = Matrix::from_vec(d1u, r, b_data);
                Adapter::Lora(LoraAdapter::from_parts(a, b, alpha)?)
            }
            METHOD_GENERAL => {
                let kind = match c.u8("basis kind")? {
                    BASIS_FOURIER => BasisKind::Fourier,
                    BASIS_RANDOM => BasisKind::Random,
                    BASIS_ORTHOGONAL => BasisKind::Orthogonal,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown basis kind byte {other}"
                        )))
                    }
                };
                let coeffs = c.f32_vec(n_or_r as usize, "basis coefficients")?;
                let mut g = GeneralBasisAdapter::init(
                    kind,
                    seed,
                    0,
                    d1u,
                    d2u,
                    n_or_r as usize,
                    alpha,
                    &bias,
                    true,
                )?;
                g.coeffs = coeffs;
                Adapter::General(g)
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown method byte {other}"
                )))
            }
        };
        adapters.push((name, adapter));
    }
    if c.pos != buf.len() {
        return Err(Error::Truncated(format!(
            "{} trailing bytes after the last layer",
            buf.len() - c.pos
        )));
    }
    Ok((
        adapters,
        CheckpointConfig {
            alpha,
            seed,
            n_or_r,
            bias,
        },
    ))
}

/// A (method, model-dims) pair for storage comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeConfig {
    pub method: BudgetMethod,
    pub dims: ModelDims,
}

/// Ratio of trainable-coefficient payload bytes, `a / b`.
pub fn size_ratio(a: &SizeConfig, b: &SizeConfig) -> f64 {
    let bytes = |c: &SizeConfig| budget(c.dims, c.method).bytes as f64;
    bytes(a) / bytes(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::merge;
    use crate::linalg::{randn_matrix, Rng};
    use tempfile::tempdir;

    fn fourier_layers(seed: u64, layers: usize, d: usize, n: usize) -> Vec<(String, Adapter)> {
        (0..layers)
            .map(|l| {
                let a = FourierAdapter::init(
                    seed,
                    l as u64,
                    d,
                    d,
                    n,
                    300.0,
                    &BiasSpec::none(),
                    false,
                )
                .unwrap();
                (format!("block{l}.hidden"), Adapter::Fourier(a))
            })
            .collect()
    }

    fn fourier_config(seed: u64, n: u32) -> CheckpointConfig {
        CheckpointConfig {
            alpha: 300.0,
            seed,
            n_or_r: n,
            bias: BiasSpec::none(),
        }
    }

    #[test]
    fn fourier_roundtrip_delta_w() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.spft");
        let layers = fourier_layers(2024, 2, 64, 128);
        save(&path, &layers, &fourier_config(2024, 128)).unwrap();
        let (loaded, config) = load(&path).unwrap();
        assert_eq!(config.seed, 2024);
        assert_eq!(loaded.len(), 2);
        for ((name_a, ad_a), (name_b, ad_b)) in layers.iter().zip(&loaded) {
            assert_eq!(name_a, name_b);
            let da = ad_a.delta_w().unwrap();
            let db = ad_b.delta_w().unwrap();
            let tol = 1e-6 * da.max_abs().max(1e-30);
            assert!(da.sub(&db).unwrap().max_abs() < tol);
            // Entries must be regenerated bit-identically.
            match (ad_a, ad_b) {
                (Adapter::Fourier(a), Adapter::Fourier(b)) => assert_eq!(a.entries, b.entries),
                _ => panic!("kind changed in roundtrip"),
            }
        }
    }

    #[test]
    fn save_load_save_is_byte_idempotent() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("one.spft");
        let p2 = dir.path().join("two.spft");
        let layers = fourier_layers(7, 3, 32, 50);
        save(&p1, &layers, &fourier_config(7, 50)).unwrap();
        let (loaded, config) = load(&p1).unwrap();
        save(&p2, &loaded, &config).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn header_and_payload_sizes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sized.spft");
        let layers = fourier_layers(1, 4, 48, 100);
        let written = save(&path, &layers, &fourier_config(1, 100)).unwrap();
        let names: u64 = layers.iter().map(|(n, _)| n.len() as u64).sum();
        // 36-byte header; per layer: 2 (name len) + name + 8 (dims) + 4n.
        let expect = 36 + 4 * (2 + 8) + names + 4 * 100 * 4;
        assert_eq!(written, expect);
        assert_eq!(fs::metadata(&path).unwrap().len(), expect);
    }

    #[test]
    fn zero_layer_file_loads_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.spft");
        let written = save(&path, &[], &fourier_config(5, 10)).unwrap();
        assert_eq!(written, 36);
        let (adapters, config) = load(&path).unwrap();
        assert!(adapters.is_empty());
        assert_eq!(config.n_or_r, 10);
    }

    #[test]
    fn lora_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("lora.spft");
        let mut rng = Rng::new(3);
        let a = randn_matrix(&mut rng, 4, 64);
        let b = randn_matrix(&mut rng, 64, 4);
        let ad = Adapter::Lora(LoraAdapter::from_parts(a, b, 2.0).unwrap());
        let config = CheckpointConfig {
            alpha: 2.0,
            seed: 0,
            n_or_r: 4,
            bias: BiasSpec::none(),
        };
        save(&path, &[("h".to_string(), ad.clone())], &config).unwrap();
        let (loaded, _) = load(&path).unwrap();
        let da = ad.delta_w().unwrap();
        let db = loaded[0].1.delta_w().unwrap();
        assert!(da.sub(&db).unwrap().max_abs() < 1e-5 * da.max_abs());
    }

    #[test]
    fn general_basis_roundtrip_regenerates_bases() {
        let dir = tempdir().unwrap();
        for kind in [BasisKind::Random, BasisKind::Orthogonal, BasisKind::Fourier] {
            let path = dir.path().join(format!("{}.spft", kind.as_str()));
            let g = GeneralBasisAdapter::init(
                kind,
                11,
                0,
                24,
                24,
                16,
                5.0,
                &BiasSpec::none(),
                false,
            )
            .unwrap();
            let ad = Adapter::General(g);
            let config = CheckpointConfig {
                alpha: 5.0,
                seed: 11,
                n_or_r: 16,
                bias: BiasSpec::none(),
            };
            save(&path, &[("h".to_string(), ad.clone())], &config).unwrap();
            let (loaded, _) = load(&path).unwrap();
            let da = ad.delta_w().unwrap();
            let db = loaded[0].1.delta_w().unwrap();
            assert!(
                da.sub(&db).unwrap().max_abs() < 1e-5 * da.max_abs().max(1e-30),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn biased_entries_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("biased.spft");
        let bias = BiasSpec::bandpass(8.0, 4.0);
        let f = FourierAdapter::init(21, 0, 64, 64, 32, 300.0, &bias, false).unwrap();
        let config = CheckpointConfig {
            alpha: 300.0,
            seed: 21,
            n_or_r: 32,
            bias: bias.clone(),
        };
        save(&path, &[("h".to_string(), Adapter::Fourier(f.clone()))], &config).unwrap();
        let (loaded, loaded_config) = load(&path).unwrap();
        assert_eq!(loaded_config.bias.mode, BiasMode::Bandpass);
        match &loaded[0].1 {
            Adapter::Fourier(g) => assert_eq!(g.entries, f.entries),
            _ => panic!("kind changed"),
        }
    }

    #[test]
    fn merged_weights_survive_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.spft");
        let layers = fourier_layers(9, 1, 64, 128);
        save(&path, &layers, &fourier_config(9, 128)).unwrap();
        let (loaded, _) = load(&path).unwrap();
        let w0 = randn_matrix(&mut Rng::new(10), 64, 64);
        let ma = merge(&layers[0].1, &w0).unwrap();
        let mb = merge(&loaded[0].1, &w0).unwrap();
        assert!(ma.sub(&mb).unwrap().max_abs() < 1e-6 * ma.max_abs());
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.spft");
        let layers = fourier_layers(1, 1, 8, 4);
        save(&path, &layers, &fourier_config(1, 4)).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::BadMagic)));
    }

    #[test]
    fn unsupported_version_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v9.spft");
        save(&path, &[], &fourier_config(1, 4)).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn truncation_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.spft");
        let layers = fourier_layers(1, 1, 8, 4);
        save(&path, &layers, &fourier_config(1, 4)).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load(&path), Err(Error::Truncated(_))));
    }

    #[test]
    fn zero_dimension_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("z.spft");
        let layers = fourier_layers(1, 1, 8, 4);
        save(&path, &layers, &fourier_config(1, 4)).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // d1 sits right after name_len (2) + name at the first layer.
        let name_len = layers[0].0.len();
        let off = 36 + 2 + name_len;
        bytes[off..off + 4].copy_from_slice(&0u32.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::BadDimensions { .. })));
    }

    #[test]
    fn inconsistent_layers_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("i.spft");
        let mut layers = fourier_layers(1, 2, 8, 4);
        if let Adapter::Fourier(f) = &mut layers[1].1 {
            f.alpha = 5.0;
        }
        assert!(matches!(
            save(&path, &layers, &fourier_config(1, 4)),
            Err(Error::InconsistentLayers(_))
        ));
        // Entries not derived from the shared seed are also rejected.
        let layers = fourier_layers(99, 1, 8, 4);
        assert!(matches!(
            save(&path, &layers, &fourier_config(1, 4)),
            Err(Error::InconsistentLayers(_))
        ));
    }

    #[test]
    fn size_ratio_reference_points() {
        let llama = ModelDims { d: 4096, layers: 64 };
        let a = SizeConfig {
            method: BudgetMethod::Lora { r: 64 },
            dims: llama,
        };
        let b = SizeConfig {
            method: BudgetMethod::Fourier { n: 1000 },
            dims: llama,
        };
        assert_eq!(size_ratio(&a, &b), 524.288);
        assert_eq!(size_ratio(&a, &a), 1.0);
        let rl = ModelDims { d: 1024, layers: 48 };
        let c = SizeConfig {
            method: BudgetMethod::Lora { r: 8 },
            dims: rl,
        };
        let d = SizeConfig {
            method: BudgetMethod::Fourier { n: 1000 },
            dims: rl,
        };
        assert!((size_ratio(&c, &d) - 786_432.0 / 48_000.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_payload_matches_budget_accounting() {
        // 24-layer, n=1000 checkpoint: coefficient bytes must be exactly
        // 4 * n * layers = 96,000.
        let dir = tempdir().unwrap();
        let path = dir.path().join("rb.spft");
        let layers: Vec<(String, Adapter)> = (0..24)
            .map(|l| {
                let a = FourierAdapter::init(
                    2024,
                    l as u64,
                    64,
                    64,
                    1000,
                    300.0,
                    &BiasSpec::none(),
                    true,
                )
                .unwrap();
                (format!("b{l}"), Adapter::Fourier(a))
            })
            .collect();
        let written = save(&path, &layers, &fourier_config(2024, 1000)).unwrap();
        let names: u64 = layers.iter().map(|(n, _)| n.len() as u64).sum();
        let overhead = 36 + 24 * 10 + names;
        assert_eq!(written - overhead, 4 * 1000 * 24);
    }
}
