//! Deterministic random streams derived from a master seed.
//!
//! Every random draw in the library comes from a [`StreamKey`]: a 32-byte
//! digest obtained by hashing the master seed together with a path of
//! labels and indices (noise label, alpha index, trial index, role).
//! Independent keys give independent ChaCha streams, so trials can run in
//! any order and on any number of threads without changing the output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Domain separator so stream keys cannot collide with other uses of the
/// same master seed.
const DOMAIN: &[u8] = b"krrlab.stream.v1";

/// Role of a stream within one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Covariate draws from the marginal law.
    Covariate,
    /// Noise draws added to the regression function.
    Noise,
    /// Monte Carlo draws used for risk estimation.
    RiskMc,
}

impl Role {
    fn tag(self) -> &'static str {
        match self {
            Role::Covariate => "covariate",
            Role::Noise => "noise",
            Role::RiskMc => "risk_mc",
        }
    }
}

/// Key identifying one deterministic random stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamKey {
    digest: [u8; 32],
}

impl StreamKey {
    /// Root key for an experiment.
    pub fn root(master_seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(master_seed.to_le_bytes());
        Self { digest: h.finalize().into() }
    }

    /// Child key scoped by a string label.
    pub fn child(&self, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.digest);
        h.update([0x01]);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        Self { digest: h.finalize().into() }
    }

    /// Child key scoped by an integer index.
    pub fn index(&self, i: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.digest);
        h.update([0x02]);
        h.update(i.to_le_bytes());
        Self { digest: h.finalize().into() }
    }

    /// Child key for a trial role.
    pub fn role(&self, role: Role) -> Self {
        self.child(role.tag())
    }

    /// Instantiate the ChaCha stream for this key.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.digest)
    }
}

/// Key for one trial stream: `(master_seed, noise_label, alpha_index,
/// trial_index, role)`.
pub fn trial_key(
    master_seed: u64,
    noise_label: &str,
    alpha_index: u32,
    trial_index: u64,
    role: Role,
) -> StreamKey {
    StreamKey::root(master_seed)
        .child(noise_label)
        .index(alpha_index as u64)
        .index(trial_index)
        .role(role)
}
