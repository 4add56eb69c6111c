//! Named parameter arrays and their binding onto a tape.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Parameter arrays keyed by name, iterated in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    arrays: BTreeMap<String, Tensor>,
}

pub type Grads = BTreeMap<String, Tensor>;

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.arrays.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::Usage(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.arrays
            .get_mut(name)
            .ok_or_else(|| Error::Usage(format!("missing parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arrays.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.arrays.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.arrays.keys()
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    /// Record every array on the tape; those accepted by `trainable` require grad.
    pub fn bind(&self, tape: &mut Tape, trainable: impl Fn(&str) -> bool) -> Result<Bindings> {
        let mut vars = BTreeMap::new();
        for (name, value) in &self.arrays {
            let var = tape.leaf(value.clone(), trainable(name))?;
            vars.insert(name.clone(), var);
        }
        Ok(Bindings { vars })
    }

    /// SHA-256 over names, shapes and the exact bit patterns of all values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in &self.arrays {
            h.update(name.as_bytes());
            h.update([0u8]);
            for d in t.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            for v in t.data() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.arrays.values().all(Tensor::is_finite)
    }
}

/// Tape handles for a bound [`Params`].
#[derive(Clone, Debug)]
pub struct Bindings {
    vars: BTreeMap<String, Var>,
}

impl Bindings {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Usage(format!("unbound parameter `{name}`")))
    }

    /// Gradients of the trainable arrays; unreached trainable arrays get zeros.
    pub fn grads(&self, tape: &Tape) -> Grads {
        self.vars
            .iter()
            .filter(|(_, &v)| tape.requires_grad(v))
            .map(|(name, &v)| {
                let g = tape
                    .grad(v)
                    .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()));
                (name.clone(), g)
            })
            .collect()
    }
}
