//! Text checkpoint format. Parameters are stored as the hex bit pattern of
//! each f64, so a save/load cycle is exact.
//!
//! ```text
//! fp4-rollout-policy 1
//! activation gelu
//! dims 10 64 64 2
//! contexts 8 4
//! params 9026
//! 3fb999999999999a
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::{Activation, MlpPolicy};
use super::PolicyError;

pub const MAGIC: &str = "fp4-rollout-policy";
pub const VERSION: u32 = 1;

pub fn to_text(policy: &MlpPolicy) -> String {
    let mut s = String::with_capacity(policy.params().len() * 17 + 128);
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "activation {}", policy.activation());
    let dims: Vec<String> = policy.dims().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "dims {}", dims.join(" "));
    let _ = writeln!(s, "contexts {} {}", policy.num_contexts(), policy.context_dim());
    let _ = writeln!(s, "params {}", policy.params().len());
    for p in policy.params() {
        let _ = writeln!(s, "{:016x}", p.to_bits());
    }
    s
}

pub fn from_text(text: &str) -> Result<MlpPolicy, PolicyError> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| PolicyError::Checkpoint {
                line: 0,
                reason: format!("missing {what}"),
            })
    };
    let bad = |line: usize, reason: &str| PolicyError::Checkpoint {
        line,
        reason: reason.to_string(),
    };

    let (ln, header) = next("header")?;
    if header != format!("{MAGIC} {VERSION}") {
        return Err(bad(ln, "unsupported checkpoint header"));
    }
    let (ln, act) = next("activation")?;
    let activation: Activation = act
        .strip_prefix("activation ")
        .ok_or_else(|| bad(ln, "expected `activation <name>`"))?
        .parse()
        .map_err(|_| bad(ln, "unknown activation"))?;
    let (ln, dims_line) = next("dims")?;
    let dims = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| bad(ln, "expected `dims ...`"))?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<usize>, _>>()
        .map_err(|_| bad(ln, "bad layer width"))?;
    let (ln, ctx_line) = next("contexts")?;
    let ctx: Vec<usize> = ctx_line
        .strip_prefix("contexts ")
        .ok_or_else(|| bad(ln, "expected `contexts <count> <dim>`"))?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| bad(ln, "bad context field"))?;
    let [num_contexts, context_dim] = ctx[..] else {
        return Err(bad(ln, "expected two context fields"));
    };
    let (ln, count_line) = next("params")?;
    let count: usize = count_line
        .strip_prefix("params ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad(ln, "expected `params <count>`"))?;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, hex) = next("parameter")?;
        let bits = u64::from_str_radix(hex, 16).map_err(|_| bad(ln, "bad parameter bits"))?;
        params.push(f64::from_bits(bits));
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        let _ = extra;
        return Err(bad(ln + 1, "trailing data after parameters"));
    }
    MlpPolicy::from_parts(dims, activation, num_contexts, context_dim, params)
}

pub fn save(policy: &MlpPolicy, path: &Path) -> Result<(), PolicyError> {
    std::fs::write(path, to_text(policy)).map_err(|e| PolicyError::Io(e.to_string()))
}

pub fn load(path: &Path) -> Result<MlpPolicy, PolicyError> {
    let text = std::fs::read_to_string(path).map_err(|e| PolicyError::Io(e.to_string()))?;
    from_text(&text)
}
