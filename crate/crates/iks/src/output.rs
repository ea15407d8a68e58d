//! Files written into a run directory: `diagnostics.csv`, `summary.json`,
//! the resolved configuration and binary snapshots.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use iks_core::kinetic::KineticState;
use iks_core::particle::ParticleEnsemble;
use iks_core::{ModelParams, PhaseSpaceGrid};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 15] = [
    "t",
    "mass",
    "marginal_err",
    "min_F",
    "M0",
    "M1",
    "r",
    "f_L2",
    "f_H1",
    "f0_L2",
    "f1_L2",
    "ImPf_mu",
    "residual_mass",
    "residual_mom",
    "residual_energy",
];

/// One diagnostics row; absent quantities are written as empty fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub mass: Option<f64>,
    pub marginal_err: Option<f64>,
    pub min_f: Option<f64>,
    pub m0: Option<f64>,
    pub m1: Option<f64>,
    pub r: Option<f64>,
    pub f_l2: Option<f64>,
    pub f_h1: Option<f64>,
    pub f0_l2: Option<f64>,
    pub f1_l2: Option<f64>,
    pub micro_mu: Option<f64>,
    pub residual_mass: Option<f64>,
    pub residual_mom: Option<f64>,
    pub residual_energy: Option<f64>,
}

impl DiagRow {
    fn fields(&self) -> [Option<f64>; 15] {
        [
            Some(self.t),
            self.mass,
            self.marginal_err,
            self.min_f,
            self.m0,
            self.m1,
            self.r,
            self.f_l2,
            self.f_h1,
            self.f0_l2,
            self.f1_l2,
            self.micro_mu,
            self.residual_mass,
            self.residual_mom,
            self.residual_energy,
        ]
    }
}

/// Shortest round-trip representation; identical values always print
/// identically.
fn format_value(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub struct DiagnosticsWriter {
    inner: csv::Writer<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(COLUMNS)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &DiagRow) -> io::Result<()> {
        self.inner.write_record(row.fields().map(format_value))?;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_summary(path: &Path, summary: &serde_json::Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub const KINETIC_MAGIC: &[u8; 4] = b"KSKI";
pub const PARTICLE_MAGIC: &[u8; 4] = b"KSPT";
pub const SNAPSHOT_VERSION: u32 = 1;

fn put_f64s(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> io::Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn check_header(r: &mut impl Read, magic: &[u8; 4]) -> io::Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(invalid(format!("bad magic {m:?}")));
    }
    let version = get_u32(r)?;
    if version != SNAPSHOT_VERSION {
        return Err(invalid(format!("unsupported snapshot version {version}")));
    }
    Ok(())
}

fn to_u32(v: usize) -> io::Result<u32> {
    u32::try_from(v).map_err(|_| invalid("dimension does not fit in u32"))
}

/// Little-endian kinetic snapshot: magic, version, `n_theta`, `n_omega`,
/// `n_nu` (u32), `m`, `kappa`, `sigma`, `t` (f64), then the ν nodes, the
/// weights and `F` in `(ν, θ, ω)` row-major order.
pub fn write_kinetic_snapshot(
    path: &Path,
    state: &KineticState,
    params: &ModelParams,
) -> io::Result<()> {
    let grid = state.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(KINETIC_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for n in [grid.n_theta(), grid.n_omega(), grid.n_nu()] {
        w.write_all(&to_u32(n)?.to_le_bytes())?;
    }
    put_f64s(&mut w, &[params.m, params.kappa, params.sigma, state.t])?;
    put_f64s(&mut w, grid.nu())?;
    put_f64s(&mut w, grid.weights())?;
    put_f64s(&mut w, state.values())?;
    w.flush()
}

/// Reads a kinetic snapshot. The ω window is not stored, so the caller
/// supplies the half-width the run used.
pub fn read_kinetic_snapshot(
    path: &Path,
    half_width: f64,
) -> io::Result<(KineticState, ModelParams)> {
    let mut r = BufReader::new(File::open(path)?);
    check_header(&mut r, KINETIC_MAGIC)?;
    let n_theta = get_u32(&mut r)? as usize;
    let n_omega = get_u32(&mut r)? as usize;
    let n_nu = get_u32(&mut r)? as usize;
    let head = get_f64s(&mut r, 4)?;
    let params = ModelParams::new(head[0], head[1], head[2]).map_err(|e| invalid(e.to_string()))?;
    let nodes = get_f64s(&mut r, n_nu)?;
    let weights = get_f64s(&mut r, n_nu)?;
    let g = iks_core::FrequencyDistribution::discrete(nodes, weights)
        .map_err(|e| invalid(e.to_string()))?;
    let grid = PhaseSpaceGrid::with_half_width(n_theta, n_omega, half_width, &g)
        .map_err(|e| invalid(e.to_string()))?;
    let values = get_f64s(&mut r, grid.len())?;
    let state = KineticState::new(grid, values, head[3]).map_err(|e| invalid(e.to_string()))?;
    Ok((state, params))
}

/// Little-endian particle snapshot: magic, version (u32), `n` (u64), `t`
/// (f64), then θ, ω and ν as contiguous f64 sequences.
pub fn write_particle_snapshot(path: &Path, ens: &ParticleEnsemble) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(PARTICLE_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(ens.len() as u64).to_le_bytes())?;
    put_f64s(&mut w, &[ens.t])?;
    put_f64s(&mut w, &ens.theta)?;
    put_f64s(&mut w, &ens.omega)?;
    put_f64s(&mut w, &ens.nu)?;
    w.flush()
}

pub fn read_particle_snapshot(path: &Path) -> io::Result<ParticleEnsemble> {
    let mut r = BufReader::new(File::open(path)?);
    check_header(&mut r, PARTICLE_MAGIC)?;
    let n = usize::try_from(get_u64(&mut r)?).map_err(|_| invalid("particle count overflows"))?;
    let t = get_f64(&mut r)?;
    let theta = get_f64s(&mut r, n)?;
    let omega = get_f64s(&mut r, n)?;
    let nu = get_f64s(&mut r, n)?;
    ParticleEnsemble::new(theta, omega, nu, t).map_err(|e| invalid(e.to_string()))
}
