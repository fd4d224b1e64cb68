//! Binary checkpoint format (little-endian):
//!
//! ```text
//! "DDPG" | u32 version | u64 len, config text
//! u64 episode | u64 total_steps
//! 6 networks: actor, critic state path, critic trunk,
//!             target actor, target critic state path, target critic trunk
//!   u32 layers, then per layer: u32 rows, u32 cols, u8 activation,
//!   f64 array weights, f64 array biases
//! 2 optimizers (actor, critic):
//!   u64 step, f64 lr, f64 beta1, f64 beta2, f64 eps, u32 groups,
//!   then per group: f64 array m, f64 array v
//! f64 array OU state | rng exploration
//! u64 buffer capacity | rng sampler | u64 count | f64 array transitions
//! ```
//!
//! An f64 array is a u64 length followed by that many values. An rng is a
//! 32-byte seed, u64 stream and u128 word position.

use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use crate::ddpg::{
    ActionVector, Critic, DdpgAgent, Experience, ObservationVector, OuNoise, ReplayBuffer,
    ACTION_DIM, OBS_DIM,
};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, AdamState, DenseLayer, Matrix, Mlp};

pub const MAGIC: &[u8; 4] = b"DDPG";
pub const VERSION: u32 = 1;

const TRANSITION_LEN: usize = 2 * OBS_DIM + ACTION_DIM + 2;

/// Complete trainer state; resuming from it continues the run exactly.
///
/// The stored config omits `output_dir`; a decoded checkpoint carries the
/// default.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// Episodes completed.
    pub episode: u64,
    /// Environment steps taken across all episodes.
    pub total_steps: u64,
    pub agent: DdpgAgent,
    pub noise: OuNoise,
    pub noise_rng: ChaCha8Rng,
    pub buffer: ReplayBuffer,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn array(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        for &x in xs {
            self.f64(x);
        }
    }
    fn rng(&mut self, r: &ChaCha8Rng) {
        self.0.extend_from_slice(&r.get_seed());
        self.u64(r.get_stream());
        self.0.extend_from_slice(&r.get_word_pos().to_le_bytes());
    }
    fn mlp(&mut self, net: &Mlp) {
        self.u32(net.layers().len());
        for l in net.layers() {
            self.u32(l.weights.rows());
            self.u32(l.weights.cols());
            self.u8(l.activation.code());
            self.array(l.weights.as_slice());
            self.array(&l.biases);
        }
    }
    fn adam(&mut self, s: &AdamState) {
        self.u64(s.step_count);
        let c = &s.config;
        for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
            self.f64(v);
        }
        self.u32(s.first_moment.len());
        for (m, v) in s.first_moment.iter().zip(&s.second_moment) {
            self.array(m);
            self.array(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(field, "unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn bytes<const N: usize>(&mut self, field: &str) -> Result<[u8; N]> {
        Ok(self.take(N, field)?.try_into().expect("length checked"))
    }
    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.bytes::<1>(field)?[0])
    }
    fn u32(&mut self, field: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes(field)?) as usize)
    }
    fn u64(&mut self, field: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(field)?))
    }
    fn f64(&mut self, field: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(field)?))
    }
    fn len(&mut self, field: &str, elem: usize) -> Result<usize> {
        let n = self.u64(field)?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.checked_mul(elem as u64).is_none_or(|b| b > remaining) {
            return Err(Error::format(field, format!("length {n} overruns the file")));
        }
        Ok(n as usize)
    }
    fn array(&mut self, field: &str) -> Result<Vec<f64>> {
        let n = self.len(field, 8)?;
        (0..n).map(|_| self.f64(field)).collect()
    }
    fn array_of(&mut self, field: &str, expected: usize) -> Result<Vec<f64>> {
        let v = self.array(field)?;
        if v.len() != expected {
            return Err(Error::format(
                field,
                format!("expected {expected} values, found {}", v.len()),
            ));
        }
        Ok(v)
    }
    fn rng(&mut self, field: &str) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let seed: [u8; 32] = self.bytes(field)?;
        let stream = self.u64(field)?;
        let word_pos = u128::from_le_bytes(self.bytes(field)?);
        let mut r = ChaCha8Rng::from_seed(seed);
        r.set_stream(stream);
        r.set_word_pos(word_pos);
        Ok(r)
    }
    fn mlp(&mut self, field: &str) -> Result<Mlp> {
        let n = self.u32(&format!("{field}.layers"))?;
        let mut layers = Vec::with_capacity(n.min(64));
        for i in 0..n {
            let f = format!("{field}.layer{i}");
            let rows = self.u32(&format!("{f}.rows"))?;
            let cols = self.u32(&format!("{f}.cols"))?;
            let code = self.u8(&format!("{f}.activation"))?;
            let act = Activation::from_code(code).ok_or_else(|| {
                Error::format(format!("{f}.activation"), format!("unknown code {code}"))
            })?;
            let w = self.array_of(&format!("{f}.weights"), rows * cols)?;
            let b = self.array_of(&format!("{f}.biases"), rows)?;
            let weights = Matrix::from_vec(rows, cols, w)
                .map_err(|e| Error::format(format!("{f}.weights"), e.to_string()))?;
            layers.push(
                DenseLayer::new(weights, b, act).map_err(|e| Error::format(&f, e.to_string()))?,
            );
        }
        Mlp::new(layers).map_err(|e| Error::format(field, e.to_string()))
    }
    fn adam(&mut self, field: &str, sizes: &[usize]) -> Result<AdamState> {
        let step_count = self.u64(&format!("{field}.step"))?;
        let config = AdamConfig {
            learning_rate: self.f64(&format!("{field}.learning_rate"))?,
            beta1: self.f64(&format!("{field}.beta1"))?,
            beta2: self.f64(&format!("{field}.beta2"))?,
            epsilon: self.f64(&format!("{field}.epsilon"))?,
        };
        let groups = self.u32(&format!("{field}.groups"))?;
        if groups != sizes.len() {
            return Err(Error::format(
                format!("{field}.groups"),
                format!("expected {}, found {groups}", sizes.len()),
            ));
        }
        let mut s = AdamState::new(sizes, config);
        s.step_count = step_count;
        for (g, &n) in sizes.iter().enumerate() {
            s.first_moment[g] = self.array_of(&format!("{field}.m{g}"), n)?;
            s.second_moment[g] = self.array_of(&format!("{field}.v{g}"), n)?;
        }
        Ok(s)
    }
}

fn write_transition(out: &mut Vec<f64>, e: &Experience) {
    out.extend_from_slice(&e.state.0);
    out.extend_from_slice(&e.action.to_array());
    out.push(e.reward);
    out.extend_from_slice(&e.next_state.0);
    out.push(if e.terminal { 1.0 } else { 0.0 });
}

fn read_transition(v: &[f64], i: usize) -> Result<Experience> {
    let field = format!("replay.transition{i}");
    let obs = |s: &[f64]| ObservationVector::from_slice(s);
    let state = obs(&v[..OBS_DIM])?;
    let a = &v[OBS_DIM..OBS_DIM + ACTION_DIM];
    let reward = v[OBS_DIM + ACTION_DIM];
    let next_state = obs(&v[OBS_DIM + ACTION_DIM + 1..TRANSITION_LEN - 1])?;
    let terminal = match v[TRANSITION_LEN - 1] {
        0.0 => false,
        1.0 => true,
        x => return Err(Error::format(field, format!("terminal flag {x}"))),
    };
    Experience::new(state, ActionVector::new(a[0], a[1], a[2]), reward, next_state, terminal)
        .map_err(|e| Error::format(field, e.to_string()))
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());
        let text = self.config.state_text();
        w.u64(text.len() as u64);
        w.0.extend_from_slice(text.as_bytes());
        w.u64(self.episode);
        w.u64(self.total_steps);
        let a = &self.agent;
        for net in [
            &a.actor,
            a.critic.state_path(),
            a.critic.trunk(),
            &a.target_actor,
            a.target_critic.state_path(),
            a.target_critic.trunk(),
        ] {
            w.mlp(net);
        }
        w.adam(&a.actor_optimizer);
        w.adam(&a.critic_optimizer);
        w.array(&self.noise.state);
        w.rng(&self.noise_rng);
        w.u64(self.buffer.capacity() as u64);
        w.rng(self.buffer.rng());
        w.u64(self.buffer.len() as u64);
        let mut flat = Vec::with_capacity(self.buffer.len() * TRANSITION_LEN);
        for e in self.buffer.iter() {
            write_transition(&mut flat, e);
        }
        w.array(&flat);
        w.0
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::format("magic", "not a checkpoint file"));
        }
        let version = u32::from_le_bytes(r.bytes("version")?);
        if version != VERSION {
            return Err(Error::format("version", format!("unsupported version {version}")));
        }
        let n = r.len("config", 1)?;
        let text = std::str::from_utf8(r.take(n, "config")?)
            .map_err(|_| Error::format("config", "not valid UTF-8"))?;
        let config =
            TrainConfig::parse(text).map_err(|e| Error::format("config", e.to_string()))?;
        let episode = r.u64("episode")?;
        let total_steps = r.u64("total_steps")?;

        let agent_cfg = config.agent_config();
        let critic = |r: &mut Reader, f: &str| -> Result<Critic> {
            let sp = r.mlp(&format!("{f}.state_path"))?;
            let trunk = r.mlp(&format!("{f}.trunk"))?;
            Critic::from_parts(sp, trunk, ACTION_DIM).map_err(|e| Error::format(f, e.to_string()))
        };
        let actor = r.mlp("actor")?;
        let online_critic = critic(&mut r, "critic")?;
        let target_actor = r.mlp("target_actor")?;
        let target_critic = critic(&mut r, "target_critic")?;
        let mut agent = DdpgAgent::from_networks(actor, online_critic, &agent_cfg)
            .map_err(|e| Error::format("actor", e.to_string()))?;
        if target_actor.group_sizes() != agent.actor.group_sizes() {
            return Err(Error::format("target_actor", "shape differs from actor"));
        }
        if target_critic.group_sizes() != agent.critic.group_sizes() {
            return Err(Error::format("target_critic", "shape differs from critic"));
        }
        agent.target_actor = target_actor;
        agent.target_critic = target_critic;
        agent.actor_optimizer = r.adam("actor_optimizer", &agent.actor.group_sizes())?;
        agent.critic_optimizer = r.adam("critic_optimizer", &agent.critic.group_sizes())?;

        let mut noise = OuNoise::new(config.ou);
        noise.state = r
            .array_of("noise.state", ACTION_DIM)?
            .try_into()
            .expect("length checked");
        let noise_rng = r.rng("noise.rng")?;

        let capacity = r.u64("replay.capacity")? as usize;
        let replay_rng = r.rng("replay.rng")?;
        let count = r.u64("replay.count")? as usize;
        let flat = r.array("replay.transitions")?;
        if count.checked_mul(TRANSITION_LEN) != Some(flat.len()) {
            return Err(Error::format(
                "replay.transitions",
                format!("{} values do not hold {count} transitions", flat.len()),
            ));
        }
        let contents = flat
            .chunks_exact(TRANSITION_LEN)
            .enumerate()
            .map(|(i, c)| read_transition(c, i))
            .collect::<Result<Vec<_>>>()?;
        let buffer = ReplayBuffer::restore(capacity, contents, replay_rng)
            .map_err(|e| Error::format("replay.capacity", e.to_string()))?;

        if r.pos != bytes.len() {
            return Err(Error::format(
                "trailer",
                format!("{} unexpected trailing bytes", bytes.len() - r.pos),
            ));
        }
        Ok(Self {
            config,
            episode,
            total_steps,
            agent,
            noise,
            noise_rng,
            buffer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}
