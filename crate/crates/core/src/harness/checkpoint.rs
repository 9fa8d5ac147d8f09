//! Checkpoint container: a UTF-8 header of `key = value` lines after a
//! magic/version line, one blank line, then the parameters as
//! little-endian f64.
//!
//! ```text
//! RANSLEEP-CHECKPOINT 1
//! agent = ppo
//! architecture = mlp:60:64-64:12:tanh
//! params = 4813
//! seed = 7
//!
//! <params * 8 bytes>
//! ```

use std::path::Path;

use crate::agents::{Agent, AgentKind, Architecture, PolicyParameters};
use crate::error::{Error, Result};

pub const MAGIC: &str = "RANSLEEP-CHECKPOINT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub agent: AgentKind,
    pub seed: u64,
    pub parameters: PolicyParameters,
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent, seed: u64) -> Self {
        Checkpoint {
            agent: agent.kind(),
            seed,
            parameters: agent.parameters(),
        }
    }

    pub fn into_agent(self) -> Result<Agent> {
        Agent::from_parameters(self.parameters)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.parameters;
        let header = format!(
            "{MAGIC} {FORMAT_VERSION}\nagent = {}\narchitecture = {}\nparams = {}\nseed = {}\n\n",
            self.agent,
            p.architecture,
            p.values.len(),
            self.seed
        );
        let mut out = header.into_bytes();
        out.reserve(p.values.len() * 8);
        for v in &p.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::CheckpointCorrupted(m.to_string());
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| corrupt("no header terminator"))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| corrupt("header is not UTF-8"))?;
        let payload = &bytes[split + 2..];
        let mut lines = header.lines();
        let first = lines.next().unwrap_or_default();
        let version = first
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| corrupt("bad magic"))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::CheckpointVersion {
                expected: FORMAT_VERSION,
                found: version.to_string(),
            });
        }
        let (mut agent, mut arch, mut count, mut seed) = (None, None, None, None);
        for line in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| corrupt(&format!("bad header line `{line}`")))?;
            let v = v.trim();
            match k.trim() {
                "agent" => agent = Some(v.parse::<AgentKind>().map_err(|_| corrupt("bad agent"))?),
                "architecture" => arch = Some(v.parse::<Architecture>()?),
                "params" => count = Some(v.parse::<usize>().map_err(|_| corrupt("bad params"))?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| corrupt("bad seed"))?),
                other => return Err(corrupt(&format!("unknown header key `{other}`"))),
            }
        }
        let (agent, arch, declared, seed) = match (agent, arch, count, seed) {
            (Some(a), Some(r), Some(c), Some(s)) => (a, r, c, s),
            _ => return Err(corrupt("incomplete header")),
        };
        if payload.len() % 8 != 0 {
            return Err(corrupt("payload length is not a multiple of 8"));
        }
        let found = payload.len() / 8;
        if found != declared {
            return Err(Error::CheckpointCount { declared, found });
        }
        if arch.param_count() != declared {
            return Err(corrupt("parameter count does not match the architecture"));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Checkpoint {
            agent,
            seed,
            parameters: PolicyParameters::new(arch, values)?,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
