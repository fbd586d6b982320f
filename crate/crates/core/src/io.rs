//! File formats: state and coefficient JSON, grid CSV, Stern-Gerlach record
//! sets and 8-bit PGM/PPM rasters.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so every reader accepts its writer's output exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::linalg::CMatrix;
use crate::phasespace::SphericalFunction;
use crate::specialfn::HalfInteger;
use crate::spinstates::{DensityMatrix, PureState};
use crate::tomography::SternGerlachRecord;

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
}

/// On-disk state; amplitudes and matrix rows run over m = J..−J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(rename = "twice_J")]
    pub twice_j: i32,
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

/// A validated state read from a [`StateFile`].
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Density(DensityMatrix),
}

impl State {
    pub fn j(&self) -> HalfInteger {
        match self {
            State::Pure(p) => p.j(),
            State::Density(d) => d.j(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.density(),
            State::Density(d) => d.clone(),
        }
    }

    pub fn to_file(&self) -> StateFile {
        match self {
            State::Pure(p) => StateFile {
                twice_j: p.j().twice(),
                kind: StateKind::Pure,
                amplitudes: Some(p.amplitudes().iter().copied().map(pair).collect()),
                matrix: None,
            },
            State::Density(d) => StateFile {
                twice_j: d.j().twice(),
                kind: StateKind::Density,
                amplitudes: None,
                matrix: Some(
                    d.matrix()
                        .row_iter()
                        .map(|row| row.iter().copied().map(pair).collect())
                        .collect(),
                ),
            },
        }
    }
}

impl StateFile {
    pub fn into_state(self) -> Result<State> {
        let j = HalfInteger::spin(self.twice_j)?;
        match (self.kind, self.amplitudes, self.matrix) {
            (StateKind::Pure, Some(amps), None) => Ok(State::Pure(PureState::new(
                j,
                amps.into_iter().map(complex).collect(),
            )?)),
            (StateKind::Density, None, Some(rows)) => {
                let d = j.dim();
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Parse(format!(
                        "density matrix must be {d}x{d} for 2J = {}",
                        self.twice_j
                    )));
                }
                let m = CMatrix::from_fn(d, d, |r, c| complex(rows[r][c]));
                Ok(State::Density(DensityMatrix::new(j, m)?))
            }
            (StateKind::Pure, ..) => Err(Error::Parse(
                "a pure state carries \"amplitudes\" and no \"matrix\"".into(),
            )),
            (StateKind::Density, ..) => Err(Error::Parse(
                "a density state carries \"matrix\" and no \"amplitudes\"".into(),
            )),
        }
    }
}

/// On-disk spherical-harmonic coefficients as (j, m, re, im) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffFile {
    #[serde(rename = "twice_J")]
    pub twice_j: i32,
    pub s: Option<f64>,
    pub coeffs: Vec<(usize, i32, f64, f64)>,
}

impl CoeffFile {
    pub fn from_function(f: &SphericalFunction) -> Self {
        CoeffFile {
            twice_j: f.twice_j(),
            s: f.s_tag(),
            coeffs: f.iter().map(|(j, m, c)| (j, m, c.re, c.im)).collect(),
        }
    }

    /// Unlisted coefficients are zero; duplicates are rejected.
    pub fn into_function(self) -> Result<SphericalFunction> {
        let j = HalfInteger::spin(self.twice_j)?;
        let mut f = SphericalFunction::zeros(j, self.s)?;
        let mut seen = vec![false; f.coeffs().len()];
        for (rank, m, re, im) in self.coeffs {
            if rank > f.band() || m.unsigned_abs() as usize > rank {
                return Err(Error::Parse(format!(
                    "coefficient (j, m) = ({rank}, {m}) outside the band 2J = {}",
                    self.twice_j
                )));
            }
            let idx = crate::phasespace::coeff_index(rank, m);
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Parse(format!("duplicate coefficient ({rank}, {m})")));
            }
            f.set(rank, m, Complex64::new(re, im))?;
        }
        Ok(f)
    }
}

/// Stern-Gerlach counts on an equiangular grid, row-major in θ then φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSet {
    #[serde(rename = "twice_J")]
    pub twice_j: i32,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    pub records: Vec<SternGerlachRecord>,
}

impl RecordSet {
    pub fn validate(&self) -> Result<()> {
        let d = HalfInteger::spin(self.twice_j)?.dim();
        if self.records.len() != self.n_p * self.n_p {
            return Err(Error::integrity(
                Module::Io,
                format!("expected {} records, got {}", self.n_p * self.n_p, self.records.len()),
            ));
        }
        for r in &self.records {
            if r.counts.len() != d {
                return Err(Error::integrity(
                    Module::Io,
                    format!("record has {} outcomes, expected {d}", r.counts.len()),
                ));
            }
            r.validate()?;
        }
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<State> {
    read_json::<StateFile>(path)?.into_state()
}

pub fn read_coeffs(path: &Path) -> Result<SphericalFunction> {
    read_json::<CoeffFile>(path)?.into_function()
}

/// One `theta,phi,value` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

/// Rows for values sampled row-major on thetas × phis.
pub fn grid_rows(thetas: &[f64], phis: &[f64], values: &[f64]) -> Result<Vec<GridRow>> {
    if values.len() != thetas.len() * phis.len() {
        return Err(Error::domain(
            Module::Io,
            format!(
                "{} values for a {}x{} grid",
                values.len(),
                thetas.len(),
                phis.len()
            ),
        ));
    }
    Ok(thetas
        .iter()
        .flat_map(|&theta| phis.iter().map(move |&phi| (theta, phi)))
        .zip(values)
        .map(|((theta, phi), &value)| GridRow { theta, phi, value })
        .collect())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}

pub fn write_grid_csv<W: Write>(out: W, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: Read>(input: R) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?;
    if headers != vec!["theta", "phi", "value"] {
        return Err(Error::Parse(format!("unexpected grid header {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Grayscale P5: 0 maps to mid-gray, ±max|v| to white/black.
pub fn write_pgm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let scale = raster_scale(width, height, values)?;
    write!(out, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|v| (127.5 + 127.5 * v / scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

/// Colour P6 diverging map: white at 0, red for positive and green for
/// negative values, saturating at ±max|v|.
pub fn write_ppm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> Result<()> {
    let scale = raster_scale(width, height, values)?;
    write!(out, "P6\n{width} {height}\n255\n")?;
    let mut bytes = Vec::with_capacity(3 * values.len());
    for v in values {
        let t = (v.abs() / scale).min(1.0);
        let fade = (255.0 * (1.0 - t)).round() as u8;
        if *v >= 0.0 {
            bytes.extend_from_slice(&[255, fade, fade]);
        } else {
            bytes.extend_from_slice(&[fade, 255, fade]);
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

fn raster_scale(width: usize, height: usize, values: &[f64]) -> Result<f64> {
    if width * height != values.len() || values.is_empty() {
        return Err(Error::domain(
            Module::Io,
            format!("{} values for a {width}x{height} raster", values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::integrity(Module::Io, "non-finite raster value"));
    }
    let m = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(if m > 0.0 { m } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::to_spherical_coeffs;
    use crate::spinstates::{random_hs, random_pure};

    #[test]
    fn state_json_round_trip_is_bit_exact() {
        for tj in [1, 4, 7] {
            let j = HalfInteger::from_twice(tj);
            for state in [
                State::Pure(random_pure(j, tj as u64)),
                State::Density(random_hs(j, tj as u64)),
            ] {
                let text = to_json(&state.to_file()).unwrap();
                let back = from_json::<StateFile>(&text).unwrap().into_state().unwrap();
                assert_eq!(back, state);
                assert_eq!(to_json(&back.to_file()).unwrap(), text);
            }
        }
    }

    #[test]
    fn state_json_rejects_mismatched_payload() {
        let text = r#"{"twice_J": 1, "kind": "pure", "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]}"#;
        assert!(from_json::<StateFile>(text).unwrap().into_state().is_err());
        let text = r#"{"twice_J": 1, "kind": "pure", "amplitudes": [[1,0],[1,0]]}"#;
        assert!(from_json::<StateFile>(text).unwrap().into_state().is_err());
        let text = r#"{"twice_J": 1, "kind": "pure", "amplitudes": [[1,0],[0,0]], "x": 1}"#;
        assert!(from_json::<StateFile>(text).is_err());
    }

    #[test]
    fn coeff_json_round_trip() {
        let j = HalfInteger::from_twice(5);
        let f = to_spherical_coeffs(&random_hs(j, 3), 0.5).unwrap();
        let text = to_json(&CoeffFile::from_function(&f)).unwrap();
        let back = from_json::<CoeffFile>(&text).unwrap().into_function().unwrap();
        assert_eq!(back, f);
        let untagged = SphericalFunction::zeros(j, None).unwrap();
        let text = to_json(&CoeffFile::from_function(&untagged)).unwrap();
        assert!(text.contains("\"s\": null"));
        assert_eq!(from_json::<CoeffFile>(&text).unwrap().into_function().unwrap(), untagged);
    }

    #[test]
    fn coeff_json_rejects_out_of_band_and_duplicates() {
        let out = r#"{"twice_J": 2, "s": 0, "coeffs": [[3, 0, 1, 0]]}"#;
        assert!(from_json::<CoeffFile>(out).unwrap().into_function().is_err());
        let dup = r#"{"twice_J": 2, "s": 0, "coeffs": [[1, 0, 1, 0], [1, 0, 2, 0]]}"#;
        assert!(from_json::<CoeffFile>(dup).unwrap().into_function().is_err());
    }

    #[test]
    fn grid_csv_round_trip() {
        let thetas = [0.0, 0.1, std::f64::consts::PI];
        let phis = [0.0, 1.0 / 3.0];
        let values = [1.0, -2.5e-300, 0.1 + 0.2, f64::MIN_POSITIVE, -0.0, 123456.789];
        let rows = grid_rows(&thetas, &phis, &values).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("theta,phi,value\n"));
        let back = read_grid_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.theta.to_bits(), b.theta.to_bits());
            assert_eq!(a.phi.to_bits(), b.phi.to_bits());
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
        assert!(grid_rows(&thetas, &phis, &values[..5]).is_err());
        assert!(read_grid_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn rasters() {
        let values = [1.0, -1.0, 0.0, 0.5];
        let mut pgm = Vec::new();
        write_pgm(&mut pgm, 2, 2, &values).unwrap();
        assert!(pgm.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 4..], &[255, 0, 128, 191]);
        let mut ppm = Vec::new();
        write_ppm(&mut ppm, 2, 2, &values).unwrap();
        let body = &ppm[ppm.len() - 12..];
        assert_eq!(&body[..3], &[255, 0, 0]);
        assert_eq!(&body[3..6], &[0, 255, 0]);
        assert_eq!(&body[6..9], &[255, 255, 255]);
        assert!(write_pgm(Vec::new(), 3, 2, &values).is_err());
        assert!(write_ppm(Vec::new(), 1, 1, &[f64::NAN]).is_err());
    }
}
