//! Dense/TDNN network: temporal splicing, forward and reverse passes, Adam,
//! learning-rate schedule and the binary model format.
//!
//! A layer with context `[L, R]` sees, at frame `t`, the concatenation of the
//! previous layer's outputs at frames `t+L ..= t+R` and feeds it through one
//! affine map. Stacking layers sums their contexts, so a TDNN reaches a wide
//! receptive field while staying purely feed-forward.

mod adam;
mod io;
mod model;
mod preset;
mod splice;

pub use adam::{adam_step, lr_update, AdamState, LR_DECAY};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{
    Activation, Gradients, LayerGradient, ModelConfig, Normalization, TdnnLayer, TdnnModel,
    NORM_STD_FLOOR, OUTPUT_BIAS_INIT,
};
pub use preset::Preset;
pub use splice::{splice, unsplice_add};

use crate::error::{Error, Result};

/// Frame-offset window `[left, right]` with `left <= 0 <= right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Context {
    left: i32,
    right: i32,
}

impl Context {
    pub const CURRENT: Context = Context { left: 0, right: 0 };

    pub fn new(left: i32, right: i32) -> Result<Self> {
        if left > 0 || right < 0 {
            return Err(Error::invalid(format!(
                "context [{left},{right}] must satisfy left <= 0 <= right"
            )));
        }
        Ok(Context { left, right })
    }

    /// Symmetric window `[-half, half]`.
    pub fn symmetric(half: u32) -> Self {
        Context {
            left: -(half as i32),
            right: half as i32,
        }
    }

    pub fn left(self) -> i32 {
        self.left
    }

    pub fn right(self) -> i32 {
        self.right
    }

    pub fn width(self) -> usize {
        (self.right - self.left + 1) as usize
    }

    pub fn offsets(self) -> impl Iterator<Item = i32> {
        self.left..=self.right
    }
}

impl std::fmt::Display for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.left, self.right)
    }
}

/// One context window per layer, output layer last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSpec(Vec<Context>);

impl ContextSpec {
    pub fn new(contexts: Vec<Context>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::invalid("context spec needs at least one layer"));
        }
        Ok(ContextSpec(contexts))
    }

    pub fn layers(&self) -> &[Context] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Receptive field of the whole stack.
    pub fn total(&self) -> Context {
        self.0.iter().fold(Context::CURRENT, |acc, c| Context {
            left: acc.left + c.left,
            right: acc.right + c.right,
        })
    }

    /// Parse `-1:1,-2:2,0:0`.
    pub fn parse(text: &str) -> Result<Self> {
        let contexts = text
            .split(',')
            .map(|item| {
                let (l, r) = item
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::invalid(format!("context `{item}` is not L:R")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<i32>()
                        .map_err(|_| Error::invalid(format!("bad context offset `{s}`")))
                };
                Context::new(parse(l)?, parse(r)?)
            })
            .collect::<Result<Vec<_>>>()?;
        ContextSpec::new(contexts)
    }
}

impl std::fmt::Display for ContextSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|c| format!("{}:{}", c.left, c.right))
            .collect();
        f.write_str(&parts.join(","))
    }
}
