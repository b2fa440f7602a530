//! Nodal velocity initializers.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kernel::NodalVelocity;
use crate::mesh::Mesh;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initializer {
    Zero,
    Constant(Vec3),
    /// `u = (gamma * y, 0, 0)`
    Shear(f64),
    /// Taylor-Green vortex with one period across the bounding box.
    TaylorGreen,
    /// Components uniform in `[-1, 1)`, reproducible from the seed.
    Random(u64),
}

impl Initializer {
    pub fn apply(&self, mesh: &Mesh) -> NodalVelocity {
        let coords = mesh.coords();
        let values = match *self {
            Initializer::Zero => vec![[0.0; 3]; coords.len()],
            Initializer::Constant(c) => vec![c; coords.len()],
            Initializer::Shear(gamma) => coords.iter().map(|x| [gamma * x[1], 0.0, 0.0]).collect(),
            Initializer::TaylorGreen => {
                let (lo, hi) = mesh.bounding_box();
                let scale: Vec3 = std::array::from_fn(|d| {
                    let len = hi[d] - lo[d];
                    if len > 0.0 {
                        TAU / len
                    } else {
                        0.0
                    }
                });
                coords
                    .iter()
                    .map(|x| {
                        let [a, b, c]: Vec3 = std::array::from_fn(|d| (x[d] - lo[d]) * scale[d]);
                        [
                            a.sin() * b.cos() * c.cos(),
                            -a.cos() * b.sin() * c.cos(),
                            0.0,
                        ]
                    })
                    .collect()
            }
            Initializer::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..coords.len())
                    .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
                    .collect()
            }
        };
        NodalVelocity(values)
    }
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initializer::Zero => write!(f, "zero"),
            Initializer::Constant(c) => write!(f, "constant:{}:{}:{}", c[0], c[1], c[2]),
            Initializer::Shear(g) => write!(f, "shear:{g}"),
            Initializer::TaylorGreen => write!(f, "taylor-green"),
            Initializer::Random(s) => write!(f, "random:{s}"),
        }
    }
}

/// Parses `NAME[:ARGS]`, arguments separated by `:` or `,`.
/// `shear` defaults to `gamma = 1`, `random` to seed 0.
impl FromStr for Initializer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split([':', ',']).map(str::trim);
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.filter(|p| !p.is_empty()).collect();
        let bad = |why: &str| Error::InvalidArgument(format!("initializer `{s}`: {why}"));
        let float = |t: &str| t.parse::<f64>().map_err(|_| bad("expected a number"));
        let init = match (name, args.as_slice()) {
            ("zero", []) => Initializer::Zero,
            ("constant", [x, y, z]) => Initializer::Constant([float(x)?, float(y)?, float(z)?]),
            ("constant", []) => Initializer::Constant([1.0, 0.0, 0.0]),
            ("shear", []) => Initializer::Shear(1.0),
            ("shear", [g]) => Initializer::Shear(float(g)?),
            ("taylor-green", []) => Initializer::TaylorGreen,
            ("random", []) => Initializer::Random(0),
            ("random", [seed]) => {
                Initializer::Random(seed.parse().map_err(|_| bad("expected an integer seed"))?)
            }
            ("zero" | "constant" | "shear" | "taylor-green" | "random", _) => {
                return Err(bad("wrong number of arguments"))
            }
            _ => return Err(bad("unknown initializer")),
        };
        if let Initializer::Constant(c) = init {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(bad("values must be finite"));
            }
        }
        if let Initializer::Shear(g) = init {
            if !g.is_finite() {
                return Err(bad("gamma must be finite"));
            }
        }
        Ok(init)
    }
}
