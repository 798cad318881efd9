//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `MLB1`, `u32` version, `u32` entry count,
//! then per entry `u32` name length, UTF-8 name, `u8` element type
//! (0 = f64, 1 = complex128 as re/im pairs, 2 = UTF-8 bytes), `u32` rank,
//! `rank x u64` shape, raw data. Matrices are stored column-major.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::ControllerState;
use crate::state::{Layout, MLState, MixtureSpec};

pub const MAGIC: &[u8; 4] = b"MLB1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Array {
    Real { shape: Vec<u64>, data: Vec<f64> },
    Complex { shape: Vec<u64>, data: Vec<Complex64> },
    Text(String),
}

impl Array {
    fn tag(&self) -> u8 {
        match self {
            Array::Real { .. } => 0,
            Array::Complex { .. } => 1,
            Array::Text(_) => 2,
        }
    }
}

/// Ordered named arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub entries: Vec<(String, Array)>,
}

impl Container {
    pub fn push(&mut self, name: &str, a: Array) {
        self.entries.push((name.to_string(), a));
    }

    pub fn get(&self, name: &str) -> Result<&Array> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
            .ok_or_else(|| Error::Checkpoint(format!("missing entry '{name}'")))
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for (name, a) in &self.entries {
            out.write_all(&(name.len() as u32).to_le_bytes())?;
            out.write_all(name.as_bytes())?;
            out.write_all(&[a.tag()])?;
            let shape: Vec<u64> = match a {
                Array::Real { shape, .. } | Array::Complex { shape, .. } => shape.clone(),
                Array::Text(s) => vec![s.len() as u64],
            };
            out.write_all(&(shape.len() as u32).to_le_bytes())?;
            for d in &shape {
                out.write_all(&d.to_le_bytes())?;
            }
            match a {
                Array::Real { data, .. } => {
                    for x in data {
                        out.write_all(&x.to_le_bytes())?;
                    }
                }
                Array::Complex { data, .. } => {
                    for z in data {
                        out.write_all(&z.re.to_le_bytes())?;
                        out.write_all(&z.im.to_le_bytes())?;
                    }
                }
                Array::Text(s) => out.write_all(s.as_bytes())?,
            }
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> Result<Container> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(input)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(input)?;
        let mut out = Container::default();
        for _ in 0..count {
            let len = read_u32(input)? as usize;
            let mut name = vec![0u8; len];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("entry name is not UTF-8".into()))?;
            let mut tag = [0u8; 1];
            input.read_exact(&mut tag)?;
            let rank = read_u32(input)? as usize;
            let shape = (0..rank).map(|_| read_u64(input)).collect::<Result<Vec<_>>>()?;
            let count: u64 = shape.iter().product();
            let array = match tag[0] {
                0 => Array::Real {
                    data: (0..count).map(|_| read_f64(input)).collect::<Result<_>>()?,
                    shape,
                },
                1 => Array::Complex {
                    data: (0..count)
                        .map(|_| Ok(Complex64::new(read_f64(input)?, read_f64(input)?)))
                        .collect::<Result<_>>()?,
                    shape,
                },
                2 => {
                    let mut bytes = vec![0u8; count as usize];
                    input.read_exact(&mut bytes)?;
                    Array::Text(String::from_utf8(bytes).map_err(|_| Error::Checkpoint(format!("entry '{name}' is not UTF-8")))?)
                }
                t => return Err(Error::Checkpoint(format!("unknown element type {t} in '{name}'"))),
            };
            out.entries.push((name, array));
        }
        Ok(out)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// A saved state with the mixture it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: MixtureSpec,
    pub state: MLState,
    pub controller: Option<ControllerState>,
}

impl Checkpoint {
    pub fn to_container(&self) -> Result<Container> {
        let layout = self.state.layout();
        let mut c = Container::default();
        c.push(
            "A",
            Array::Complex {
                shape: layout.top_shape().iter().map(|&d| d as u64).collect(),
                data: self.state.top().to_vec(),
            },
        );
        for s in 0..layout.species_count() {
            let d = &layout.species[s];
            c.push(
                &format!("C{s}"),
                Array::Complex {
                    shape: vec![d.basis_dim as u64, d.states as u64],
                    data: self.state.as_slice()[layout.coefficient_range(s)].to_vec(),
                },
            );
        }
        for s in 0..layout.species_count() {
            c.push(
                &format!("Phi{s}"),
                Array::Complex {
                    shape: vec![layout.grid_points as u64, layout.species[s].spfs as u64],
                    data: self.state.as_slice()[layout.orbital_range(s)].to_vec(),
                },
            );
        }
        c.push("t", Array::Real { shape: vec![1], data: vec![self.state.time] });
        if let Some(ctl) = self.controller {
            c.push("integrator", Array::Real { shape: vec![2], data: vec![ctl.dt, ctl.facold] });
        }
        c.push("spec", Array::Text(serde_json::to_string(&self.spec)?));
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Checkpoint> {
        let Array::Text(json) = c.get("spec")? else {
            return Err(Error::Checkpoint("'spec' is not text".into()));
        };
        let spec: MixtureSpec = serde_json::from_str(json).map_err(|e| Error::Checkpoint(format!("spec: {e}")))?;
        spec.validate()?;
        let layout = Arc::new(Layout::from_spec(&spec)?);
        let mut state = MLState::zeros(layout.clone());
        let mut fill = |name: &str, range: std::ops::Range<usize>| -> Result<()> {
            match c.get(name)? {
                Array::Complex { data, .. } if data.len() == range.len() => {
                    state.as_mut_slice()[range].copy_from_slice(data);
                    Ok(())
                }
                _ => Err(Error::Checkpoint(format!("entry '{name}' has the wrong type or size"))),
            }
        };
        fill("A", 0..layout.top_len())?;
        for s in 0..layout.species_count() {
            fill(&format!("C{s}"), layout.coefficient_range(s))?;
            fill(&format!("Phi{s}"), layout.orbital_range(s))?;
        }
        state.time = match c.get("t")? {
            Array::Real { data, .. } if data.len() == 1 => data[0],
            _ => return Err(Error::Checkpoint("entry 't' malformed".into())),
        };
        let controller = match c.get("integrator") {
            Ok(Array::Real { data, .. }) if data.len() == 2 => Some(ControllerState { dt: data[0], facold: data[1] }),
            Ok(_) => return Err(Error::Checkpoint("entry 'integrator' malformed".into())),
            Err(_) => None,
        };
        Ok(Checkpoint { spec, state, controller })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.to_container()?.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Checkpoint::from_container(&Container::read_from(&mut f)?)
    }
}
