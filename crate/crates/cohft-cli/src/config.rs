//! Run configuration: a JSON document with an explicit schema version.

use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// exact rationals
    #[default]
    Rational,
    /// arbitrary-precision complex floats
    Complex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub backend: Backend,
    /// mantissa bits of the complex backend
    #[serde(default = "default_precision")]
    pub precision_bits: usize,
    /// comparison tolerance of the complex backend
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// required by every command except `oracle`
    #[serde(default)]
    pub algebra: Option<AlgebraSource>,
    #[serde(default)]
    pub euler: Option<EulerSource>,
    #[serde(default)]
    pub bounds: Bounds,
    /// R-matrix truncation order; defaults to what the bounds need
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub options: CommandOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            backend: Backend::default(),
            precision_bits: default_precision(),
            tolerance: default_tolerance(),
            algebra: None,
            euler: None,
            bounds: Bounds::default(),
            order: None,
            seed: 0,
            output_dir: default_output_dir(),
            options: CommandOptions::default(),
        }
    }
}

fn default_precision() -> usize {
    256
}

fn default_tolerance() -> f64 {
    1e-40
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("cohft-out")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub max_genus: usize,
    pub max_points: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_genus: 1, max_points: 3 }
    }
}

/// Scalars are strings such as `"3/4"` (or `["re", "im"]` in the complex backend).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSource {
    /// `qh_p1`, `qh_p2`, `truncated_power`, `rank_one`, `diagonal`, `dual_numbers`
    Preset {
        name: String,
        #[serde(default)]
        q: Option<Value>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        thetas: Option<Vec<Value>>,
    },
    /// `{dim, basis_names, mult_table, pairing, unit}`
    Inline { algebra: Value },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EulerSource {
    /// `qh_p1`, `qh_p2`, `rank_one`
    Preset { name: String },
    /// `{xi0, mu, d}`
    Inline { data: Value },
}

/// Where the R-matrix `E` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RSource {
    Identity,
    /// a series in the format `rmatrix` writes under `"E"`
    Series { series: Value },
    /// seeded random symplectic element
    RandomSymplectic,
    /// solve the homogeneity recursion from the Euler data
    Solve,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CommandOptions {
    /// `tft`: signatures `[genus, inputs, outputs]`
    #[serde(default)]
    pub signatures: Option<Vec<[usize; 3]>>,
    /// `tft`: also sew each surface from pants and caps
    #[serde(default)]
    pub brute_force: bool,
    /// `nodal`, `build`, `deform`
    #[serde(default)]
    pub e: Option<RSource>,
    /// `rmatrix`, `reconstruct`: odd Hodge coefficients `h_1, h_3, ...`
    #[serde(default)]
    pub hodge: Option<Vec<Value>>,
    /// `deform`: direction `w` of `u = t w`
    #[serde(default)]
    pub u: Option<Vec<Value>>,
    /// `deform`: order in `t`
    #[serde(default)]
    pub deform_order: Option<usize>,
    /// `check`: table file to verify
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// `oracle`: largest `3g - 3 + n`
    #[serde(default)]
    pub max_dimension: Option<usize>,
}

/// Schemas printed by `--dump-schema`.
pub fn schemas() -> Value {
    serde_json::json!({
        "config": schemars::schema_for!(RunConfig),
        "table": table_schema(),
    })
}

fn table_schema() -> Value {
    serde_json::json!({
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "CorrelatorTable",
        "type": "object",
        "required": ["header", "entries"],
        "additionalProperties": false,
        "properties": {
            "header": {
                "type": "object",
                "required": ["max_genus", "max_points", "dim", "basis_names", "backend"],
                "properties": {
                    "max_genus": {"type": "integer", "minimum": 0},
                    "max_points": {"type": "integer", "minimum": 0},
                    "dim": {"type": "integer", "minimum": 1},
                    "basis_names": {"type": "array", "items": {"type": "string"}},
                    "backend": {"enum": ["rational", "complex"]}
                }
            },
            "entries": {
                "description": "rows [genus, n, [[basis, psi], ...], value]; zero entries are omitted",
                "type": "array",
                "items": {
                    "type": "array",
                    "minItems": 4,
                    "maxItems": 4
                }
            }
        }
    })
}
