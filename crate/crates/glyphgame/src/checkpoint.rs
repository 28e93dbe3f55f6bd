//! Versioned "GLYC" checkpoint container.
//!
//! Layout (little-endian):
//!   magic "GLYC" | u32 version=1
//!   u32 config_len | config TOML bytes
//!   u32 n_rng | n × (u64 stream_id, u128 word_pos)
//!   u32 n_groups | per group:
//!     string name | u32 n_params | per param:
//!       string name | u32 ndims | ndims × u32 | u64 count | count × f64
//!
//! Save → load → save is byte-identical: the config re-serializes to
//! the same TOML and parameter order is the policies' declaration
//! order.

use std::path::Path;

use crate::agents::{ReceiverPolicy, SenderPolicy};
use crate::binio::{put_string, Reader};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::game::GameConfig;
use crate::nn::Tensor;
use crate::rng::{streams, RngStream};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GLYC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArrays {
    pub name: String,
    pub arrays: Vec<(String, Tensor)>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    /// (stream id, word position) pairs for the trainer's streams.
    pub rng_states: Vec<(u64, u128)>,
    pub groups: Vec<NamedArrays>,
}

impl Checkpoint {
    pub fn new(
        config: RunConfig,
        rng_states: Vec<(u64, u128)>,
        sender: &SenderPolicy,
        receiver: &ReceiverPolicy,
    ) -> Self {
        let pack = |name: &str, params: &crate::nn::ParamSet| NamedArrays {
            name: name.to_string(),
            arrays: params
                .names()
                .iter()
                .cloned()
                .zip(params.tensors().iter().cloned())
                .collect(),
        };
        Checkpoint {
            config,
            rng_states,
            groups: vec![pack("sender", &sender.params), pack("receiver", &receiver.params)],
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        put_string(&mut out, &self.config.to_toml());
        out.extend_from_slice(&(self.rng_states.len() as u32).to_le_bytes());
        for &(stream, pos) in &self.rng_states {
            out.extend_from_slice(&stream.to_le_bytes());
            out.extend_from_slice(&pos.to_le_bytes());
        }
        out.extend_from_slice(&(self.groups.len() as u32).to_le_bytes());
        for group in &self.groups {
            put_string(&mut out, &group.name);
            out.extend_from_slice(&(group.arrays.len() as u32).to_le_bytes());
            for (name, tensor) in &group.arrays {
                put_string(&mut out, name);
                out.extend_from_slice(&(tensor.dims().len() as u32).to_le_bytes());
                for &d in tensor.dims() {
                    out.extend_from_slice(&(d as u32).to_le_bytes());
                }
                out.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
                for &v in tensor.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4, "magic")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Parse {
                offset: 0,
                msg: format!(
                    "bad magic {:?}, expected {:?}",
                    magic,
                    &CHECKPOINT_MAGIC[..]
                ),
            });
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let config_text = r.string("config")?;
        let config = RunConfig::from_toml(&config_text)?;
        let n_rng = r.u32("rng state count")? as usize;
        if n_rng > 1_000_000 {
            return Err(Error::Parse {
                offset: r.pos(),
                msg: format!("implausible rng state count {n_rng}"),
            });
        }
        let mut rng_states = Vec::with_capacity(n_rng);
        for _ in 0..n_rng {
            let stream = r.u64("rng stream id")?;
            let pos = r.u128("rng word pos")?;
            rng_states.push((stream, pos));
        }
        let n_groups = r.u32("group count")? as usize;
        if n_groups > 1024 {
            return Err(Error::Parse {
                offset: r.pos(),
                msg: format!("implausible group count {n_groups}"),
            });
        }
        let mut groups = Vec::with_capacity(n_groups);
        for _ in 0..n_groups {
            let name = r.string("group name")?;
            let n_params = r.u32("param count")? as usize;
            if n_params > 1_000_000 {
                return Err(Error::Parse {
                    offset: r.pos(),
                    msg: format!("implausible param count {n_params}"),
                });
            }
            let mut arrays = Vec::with_capacity(n_params);
            for _ in 0..n_params {
                let pname = r.string("param name")?;
                let ndims = r.u32("ndims")? as usize;
                if ndims > 8 {
                    return Err(Error::Parse {
                        offset: r.pos(),
                        msg: format!("implausible rank {ndims} for {pname}"),
                    });
                }
                let mut dims = Vec::with_capacity(ndims);
                for _ in 0..ndims {
                    dims.push(r.u32("dim")? as usize);
                }
                let count = r.u64("value count")? as usize;
                let expect = dims
                    .iter()
                    .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                    .ok_or_else(|| Error::Parse {
                        offset: r.pos(),
                        msg: format!("param {pname}: shape {dims:?} overflows"),
                    })?;
                if count != expect {
                    return Err(Error::Parse {
                        offset: r.pos(),
                        msg: format!(
                            "param {pname}: {count} values for shape {dims:?} (needs {expect})"
                        ),
                    });
                }
                if count * 8 > r.remaining() {
                    return Err(Error::Parse {
                        offset: r.pos(),
                        msg: format!(
                            "param {pname} claims {count} values but only {} bytes remain",
                            r.remaining()
                        ),
                    });
                }
                let at = r.pos();
                let mut data = Vec::with_capacity(count);
                for _ in 0..count {
                    let v = r.f64("param value")?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            offset: at,
                            msg: format!("non-finite value in param {pname}"),
                        });
                    }
                    data.push(v);
                }
                arrays.push((pname, Tensor::from_shape(&dims, data)?));
            }
            groups.push(NamedArrays { name, arrays });
        }
        r.expect_end()?;
        Ok(Checkpoint {
            config,
            rng_states,
            groups,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Checkpoint::from_bytes(&bytes)
    }

    fn group(&self, name: &str) -> Result<&NamedArrays> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("checkpoint has no \"{name}\" group")))
    }

    /// Rebuild the dataset, game config, and both policies.
    pub fn restore(&self) -> Result<(SenderPolicy, ReceiverPolicy, Dataset, GameConfig)> {
        let dataset = self.config.build_dataset()?;
        let game = self.config.game_config(&dataset);
        game.validate()?;
        // fresh policies at the stored seed, then overwrite every param
        let mut init = RngStream::new(game.seed, streams::INIT);
        let mut sender = SenderPolicy::new(self.config.sender_arch(&game), &mut init);
        let mut receiver = ReceiverPolicy::new(self.config.receiver_arch(&game), &mut init);
        restore_params(&mut sender.params, self.group("sender")?)?;
        restore_params(&mut receiver.params, self.group("receiver")?)?;
        Ok((sender, receiver, dataset, game))
    }
}

fn restore_params(params: &mut crate::nn::ParamSet, group: &NamedArrays) -> Result<()> {
    if group.arrays.len() != params.len() {
        return Err(Error::InvalidInput(format!(
            "group \"{}\" has {} params, policy expects {}",
            group.name,
            group.arrays.len(),
            params.len()
        )));
    }
    for (idx, (name, tensor)) in group.arrays.iter().enumerate() {
        if params.names()[idx] != *name {
            return Err(Error::InvalidInput(format!(
                "group \"{}\" param {idx} is \"{name}\", policy expects \"{}\"",
                group.name,
                params.names()[idx]
            )));
        }
        if params.tensors()[idx].dims() != tensor.dims() {
            return Err(Error::InvalidInput(format!(
                "param \"{name}\" has shape {:?}, policy expects {:?}",
                tensor.dims(),
                params.tensors()[idx].dims()
            )));
        }
        params.tensors_mut()[idx] = tensor.clone();
    }
    Ok(())
}
