//! JSON dump of a decomposition (kernel and fiber bases) and the fiber CSV.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibers::DirectIntegralDecomposition;
use crate::operator::Kernel;
use crate::scalar::C;
use crate::space::{DiscreteMeasureSpace, VertexFunction};

use super::num;
use super::report::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDump {
    pub id: String,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDump {
    pub x: String,
    pub y: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberDump {
    pub lambda: f64,
    pub mass: f64,
    /// One `[re, im]` vector per basis element, indexed like `space`.
    pub basis: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub schema: u32,
    pub tol_group: f64,
    pub space: Vec<VertexDump>,
    pub kernel: Vec<EntryDump>,
    pub fibers: Vec<FiberDump>,
}

impl DecompositionDump {
    pub fn from_decomposition(dec: &DirectIntegralDecomposition<f64>) -> Self {
        let space = dec.space();
        Self {
            schema: SCHEMA_VERSION,
            tol_group: dec.tol_group(),
            space: space
                .ids()
                .iter()
                .zip(space.measure())
                .map(|(id, &measure)| VertexDump { id: id.clone(), measure })
                .collect(),
            kernel: dec
                .kernel()
                .entries()
                .map(|(x, y, v)| EntryDump { x: space.id(x).into(), y: space.id(y).into(), re: v.re, im: v.im })
                .collect(),
            fibers: dec
                .fibers()
                .iter()
                .enumerate()
                .map(|(i, f)| FiberDump {
                    lambda: f.lambda(),
                    mass: dec.mass(i),
                    basis: f.basis().iter().map(|phi| phi.values().iter().map(|v| [v.re, v.im]).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dump serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if dump.schema != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported dump schema {}", dump.schema)));
        }
        Ok(dump)
    }

    /// Rebuilds the kernel and the decomposition, revalidating both.
    pub fn into_decomposition(self) -> Result<DirectIntegralDecomposition<f64>> {
        let space = Arc::new(DiscreteMeasureSpace::new(self.space.into_iter().map(|v| (v.id, v.measure)))?);
        let entries = self
            .kernel
            .iter()
            .map(|e| Ok((space.index_of(&e.x)?, space.index_of(&e.y)?, C::new(e.re, e.im))))
            .collect::<Result<Vec<_>>>()?;
        let kernel = Kernel::from_entries(space.clone(), entries)?;
        let parts = self
            .fibers
            .into_iter()
            .map(|f| {
                let basis = f
                    .basis
                    .into_iter()
                    .map(|v| VertexFunction::new(space.clone(), v.into_iter().map(|[re, im]| C::new(re, im)).collect()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((f.lambda, f.mass, basis))
            })
            .collect::<Result<Vec<_>>>()?;
        if !(self.tol_group > 0.0) {
            return Err(Error::InvalidArgument("tol_group must be positive".into()));
        }
        DirectIntegralDecomposition::from_parts(kernel, parts, self.tol_group)
    }
}

/// Plot-ready fiber basis values: `atom,lambda,mass,index,vertex,re,im`.
pub fn fibers_csv(dec: &DirectIntegralDecomposition<f64>) -> String {
    let mut out = String::from("atom,lambda,mass,index,vertex,re,im\n");
    let space = dec.space();
    for (atom, fiber) in dec.fibers().iter().enumerate() {
        for (index, phi) in fiber.basis().iter().enumerate() {
            for (x, v) in phi.values().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{atom},{},{},{index},{},{},{}",
                    num(fiber.lambda()),
                    num(dec.mass(atom)),
                    csv_field(space.id(x)),
                    num(v.re),
                    num(v.im)
                );
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
