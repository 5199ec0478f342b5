//! Text file formats for PEPS and observables, and the JSON writer shared by
//! every document the crate emits.
//!
//! Floats are written with 17 significant digits, so reading a file and
//! writing it back reproduces it byte for byte.

use std::io;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::lattice::{Coord, LatticeSpec};
use crate::observable::Observable;
use crate::peps::PepsState;
use crate::tensor::DenseTensor;

pub const FORMAT_VERSION: u32 = 1;

/// Pretty-printing formatter writing every f64 as `{:.16e}`.
pub struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Default for ExactFloats<'_> {
    fn default() -> Self {
        ExactFloats(PrettyFormatter::with_indent(b"  "))
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// Serialize with [`ExactFloats`], newline-terminated.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats::default());
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub site: Coord,
    pub shape: Vec<usize>,
    pub data: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PepsFile {
    pub format_version: u32,
    pub lattice: LatticeSpec,
    pub phys_dim: usize,
    pub bond_dim: usize,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableFile {
    pub sites: Vec<Coord>,
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

fn pairs(data: &[C64]) -> Vec<[f64; 2]> {
    data.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(data: &[[f64; 2]]) -> Vec<C64> {
    data.iter().map(|p| C64::new(p[0], p[1])).collect()
}

impl PepsFile {
    pub fn from_state(peps: &PepsState) -> Self {
        PepsFile {
            format_version: FORMAT_VERSION,
            lattice: peps.lattice().clone(),
            phys_dim: peps.phys_dim(),
            bond_dim: peps.bond_dim(),
            tensors: peps
                .tensors()
                .iter()
                .map(|t| TensorRecord {
                    site: t.site.clone(),
                    shape: t.tensor.shape().to_vec(),
                    data: pairs(t.tensor.data()),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: PepsFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format_version {}", f.format_version)));
        }
        f.lattice.validate()?;
        Ok(f)
    }

    /// Builds the state; tensors may be listed in any site order.
    pub fn to_state(&self) -> Result<PepsState> {
        self.lattice.ensure_supported()?;
        let n = self.lattice.num_sites();
        let mut slots: Vec<Option<DenseTensor>> = vec![None; n];
        for rec in &self.tensors {
            let idx = self.lattice.index(&rec.site).map_err(|e| Error::Format(e.to_string()))?;
            if slots[idx].is_some() {
                return Err(Error::Format(format!("site {:?} appears twice", rec.site)));
            }
            slots[idx] = Some(DenseTensor::new(rec.shape.clone(), complexes(&rec.data))?);
        }
        let tensors = slots
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::Format(format!("no tensor for site {:?}", self.lattice.coord(i)))))
            .collect::<Result<Vec<_>>>()?;
        let peps = PepsState::new(self.lattice.clone(), tensors)?;
        if peps.phys_dim() != self.phys_dim || peps.bond_dim() != self.bond_dim {
            return Err(Error::Model(format!(
                "header declares d = {}, D = {}; tensors have d = {}, D = {}",
                self.phys_dim,
                self.bond_dim,
                peps.phys_dim(),
                peps.bond_dim()
            )));
        }
        Ok(peps)
    }
}

impl ObservableFile {
    pub fn from_observable(obs: &Observable) -> Self {
        ObservableFile { sites: obs.sites().to_vec(), dim: obs.dim(), matrix: pairs(obs.matrix().data()) }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_observable(&self) -> Result<Observable> {
        let m = DenseTensor::new(vec![self.dim, self.dim], complexes(&self.matrix))?;
        Observable::new(self.sites.clone(), m)
    }
}

pub fn write_peps(peps: &PepsState) -> Result<String> {
    to_json(&PepsFile::from_state(peps))
}

pub fn read_peps(text: &str) -> Result<PepsState> {
    PepsFile::parse(text)?.to_state()
}

pub fn load_peps(path: &Path) -> Result<PepsState> {
    read_peps(&std::fs::read_to_string(path)?)
}

pub fn write_observable(obs: &Observable) -> Result<String> {
    to_json(&ObservableFile::from_observable(obs))
}

pub fn read_observable(text: &str) -> Result<Observable> {
    ObservableFile::parse(text)?.to_observable()
}

pub fn load_observable(path: &Path) -> Result<Observable> {
    read_observable(&std::fs::read_to_string(path)?)
}
