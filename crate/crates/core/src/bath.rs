//! ²⁹Si bath configurations on the diamond lattice.
//!
//! The donor sits on a substitutional site at the origin. Sites are handled in
//! integer units of `a0/4`, in which every diamond-lattice coordinate is an
//! integer, so enumeration order and table lookups are exact.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

pub type Vec3<T> = [T; 3];

/// ħ in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// μ0/4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;
/// |γ| of ²⁹Si in rad/s/T.
pub const SI29_GAMMA: f64 = 5.3190e7;
/// Silicon lattice constant in meters.
pub const SI_LATTICE_CONSTANT: f64 = 5.431e-10;

/// `(μ0/4π) ħ γ²` in rad/s·m³; the only place SI units enter the dipolar coupling.
pub fn dipolar_prefactor<T: Real>() -> T {
    T::lit(MU0_OVER_4PI * HBAR * SI29_GAMMA * SI29_GAMMA)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec<T> {
    /// meters
    pub lattice_constant: T,
    /// meters
    pub cutoff_radius: T,
    pub abundance: T,
}

impl<T: Real> LatticeSpec<T> {
    /// Natural silicon (4.7 % ²⁹Si) within `cutoff_radius` meters.
    pub fn natural_silicon(cutoff_radius: T) -> Self {
        Self {
            lattice_constant: T::lit(SI_LATTICE_CONSTANT),
            cutoff_radius,
            abundance: T::lit(0.047),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abundance > T::zero() && self.abundance <= T::one()) {
            return Err(Error::InvalidParameter("abundance must lie in (0, 1]".into()));
        }
        if !(self.cutoff_radius > T::zero()) || !(self.lattice_constant > T::zero()) {
            return Err(Error::InvalidParameter(
                "cutoff radius and lattice constant must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Magnetic field direction in the crystal frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldOrientation<T> {
    pub direction: Vec3<T>,
}

impl<T: Real> FieldOrientation<T> {
    pub fn along(x: T, y: T, z: T) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidParameter("zero field direction".into()));
        }
        Ok(Self {
            direction: [x / n, y / n, z / n],
        })
    }

    /// Angle from [001] towards [110] within the (1-10) plane, degrees.
    pub fn in_001_110_plane(theta_deg: T) -> Self {
        let th = theta_deg.to_radians();
        let s = th.sin() / T::lit(2.0).sqrt();
        Self {
            direction: [s, s, th.cos()],
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || Error::parse("orientation", format!("unrecognized {spec:?}"));
        if let Some(deg) = spec.strip_prefix("theta:") {
            let v: f64 = deg.trim().parse().map_err(|_| bad())?;
            return Ok(Self::in_001_110_plane(T::lit(v)));
        }
        let parts: Vec<f64> = if spec.contains(',') {
            spec.split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?
        } else if spec.len() == 3 && spec.chars().all(|c| c.is_ascii_digit()) {
            spec.chars().map(|c| (c as u8 - b'0') as f64).collect()
        } else {
            return Err(bad());
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        Self::along(T::lit(parts[0]), T::lit(parts[1]), T::lit(parts[2]))
    }
}

/// Hyperfine model for `A_i`.
#[derive(Clone, Debug, PartialEq)]
pub enum HyperfineModel<T> {
    /// `A(r) = a_max · exp(−2r / bohr_radius)`.
    Isotropic { a_max: T, bohr_radius: T },
    Table(HyperfineTable<T>),
}

impl<T: Real> HyperfineModel<T> {
    /// Default envelope: `A_max/2π = 1 MHz`, `r_B = 1 nm`.
    pub fn default_envelope() -> Self {
        HyperfineModel::Isotropic {
            a_max: T::lit(std::f64::consts::TAU * 1e6),
            bohr_radius: T::lit(1e-9),
        }
    }
}

/// Site-resolved hyperfine couplings keyed by lattice position.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperfineTable<T> {
    lattice_constant: T,
    entries: HashMap<[i64; 3], T>,
}

impl<T: Real> HyperfineTable<T> {
    /// Reads a site table (`x,y,z` in nm, `A/2π` in kHz; `#` comments and a
    /// header line are skipped).
    pub fn read(reader: impl BufRead, lattice_constant: T) -> Result<Self> {
        let mut entries = HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<site table>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 4 {
                return Err(Error::parse("site table", format!("line {}: need 4 columns", lineno + 1)));
            }
            let nums: std::result::Result<Vec<f64>, _> =
                fields[..4].iter().map(|f| f.parse::<f64>()).collect();
            let Ok(nums) = nums else {
                if entries.is_empty() {
                    continue; // header
                }
                return Err(Error::parse("site table", format!("line {}: not numeric", lineno + 1)));
            };
            let key = quarter_units([nums[0] * 1e-9, nums[1] * 1e-9, nums[2] * 1e-9], lattice_constant.as_f64());
            entries.insert(key, T::lit(nums[3] * 1e3 * std::f64::consts::TAU));
        }
        Ok(Self {
            lattice_constant,
            entries,
        })
    }

    pub fn get(&self, r: &Vec3<T>) -> Option<T> {
        let p = [r[0].as_f64(), r[1].as_f64(), r[2].as_f64()];
        self.entries
            .get(&quarter_units(p, self.lattice_constant.as_f64()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn quarter_units(r: [f64; 3], a0: f64) -> [i64; 3] {
    let q = a0 / 4.0;
    [
        (r[0] / q).round() as i64,
        (r[1] / q).round() as i64,
        (r[2] / q).round() as i64,
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathConfiguration<T> {
    pub seed: u64,
    /// meters, donor at the origin
    pub positions: Vec<Vec3<T>>,
    /// rad/s
    pub hyperfine: Vec<T>,
    pub orientation: FieldOrientation<T>,
}

impl<T: Real> BathConfiguration<T> {
    pub fn from_parts(
        positions: Vec<Vec3<T>>,
        hyperfine: Vec<T>,
        orientation: FieldOrientation<T>,
    ) -> Self {
        assert_eq!(positions.len(), hyperfine.len());
        Self {
            seed: 0,
            positions,
            hyperfine,
            orientation,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dipolar(&self, i: usize, j: usize) -> Result<T> {
        dipolar_coupling(&self.positions[i], &self.positions[j], &self.orientation)
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        norm(&sub(&self.positions[j], &self.positions[i]))
    }

    /// CSV site table: `x_nm,y_nm,z_nm,A_kHz` with `A_kHz = A/2π/1e3`.
    pub fn write_site_table(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x_nm,y_nm,z_nm,A_kHz")?;
        for (r, a) in self.positions.iter().zip(&self.hyperfine) {
            writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.9}",
                r[0].as_f64() * 1e9,
                r[1].as_f64() * 1e9,
                r[2].as_f64() * 1e9,
                a.as_f64() / std::f64::consts::TAU / 1e3
            )?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

/// All diamond-lattice sites within the cutoff except the origin, in quarter
/// lattice units, sorted by distance then coordinates.
pub fn diamond_sites_quarter(lattice_constant: f64, cutoff: f64) -> Vec<[i64; 3]> {
    const FCC: [[i64; 3]; 4] = [[0, 0, 0], [0, 2, 2], [2, 0, 2], [2, 2, 0]];
    const BASIS: [[i64; 3]; 2] = [[0, 0, 0], [1, 1, 1]];
    let q = lattice_constant / 4.0;
    let limit = (cutoff / q) * (cutoff / q) * (1.0 + 1e-12);
    let n = (cutoff / lattice_constant).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for f in FCC {
                    for b in BASIS {
                        let p = [4 * i + f[0] + b[0], 4 * j + f[1] + b[1], 4 * k + f[2] + b[2]];
                        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                        if r2 > 0 && (r2 as f64) <= limit {
                            sites.push(p);
                        }
                    }
                }
            }
        }
    }
    sites.sort_by_key(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2], p[0], p[1], p[2]));
    sites
}

pub fn diamond_sites<T: Real>(spec: &LatticeSpec<T>) -> Vec<Vec3<T>> {
    let a0 = spec.lattice_constant.as_f64();
    let q = spec.lattice_constant / T::lit(4.0);
    diamond_sites_quarter(a0, spec.cutoff_radius.as_f64())
        .into_iter()
        .map(|p| {
            [
                T::lit(p[0] as f64) * q,
                T::lit(p[1] as f64) * q,
                T::lit(p[2] as f64) * q,
            ]
        })
        .collect()
}

/// Bernoulli(abundance) occupation of every site within the cutoff, driven by
/// `ChaCha8Rng::seed_from_u64(seed)` in canonical site order.
pub fn generate_bath<T: Real>(
    spec: &LatticeSpec<T>,
    seed: u64,
    orientation: FieldOrientation<T>,
    model: &HyperfineModel<T>,
) -> Result<BathConfiguration<T>> {
    spec.validate()?;
    let sites = diamond_sites(spec);
    if sites.is_empty() {
        return Err(Error::EmptyLattice {
            cutoff_nm: spec.cutoff_radius.as_f64() * 1e9,
        });
    }
    let mut rng = seed::rng(seed);
    let p = spec.abundance.as_f64();
    let positions: Vec<Vec3<T>> = sites
        .into_iter()
        .filter(|_| rng.gen::<f64>() < p)
        .collect();
    let hyperfine = hyperfine_map(&positions, model)?;
    Ok(BathConfiguration {
        seed,
        positions,
        hyperfine,
        orientation,
    })
}

pub fn hyperfine_map<T: Real>(positions: &[Vec3<T>], model: &HyperfineModel<T>) -> Result<Vec<T>> {
    positions
        .iter()
        .map(|r| match model {
            HyperfineModel::Isotropic { a_max, bohr_radius } => {
                let d = norm(r);
                if d == T::zero() {
                    return Err(Error::InvalidParameter("the donor site is not a bath site".into()));
                }
                Ok(*a_max * (-(d + d) / *bohr_radius).exp())
            }
            HyperfineModel::Table(table) => table.get(r).ok_or(Error::MissingHyperfineSite {
                x_nm: r[0].as_f64() * 1e9,
                y_nm: r[1].as_f64() * 1e9,
                z_nm: r[2].as_f64() * 1e9,
            }),
        })
        .collect()
}

/// `D_ij = (μ0/4π) ħ γ² (3cos²ϑ − 1) / (4 |R|³)`, rad/s.
pub fn dipolar_coupling<T: Real>(
    r_i: &Vec3<T>,
    r_j: &Vec3<T>,
    orientation: &FieldOrientation<T>,
) -> Result<T> {
    let rij = sub(r_j, r_i);
    let d = norm(&rij);
    if d == T::zero() {
        return Err(Error::CoincidentSites);
    }
    let cos = dot(&rij, &orientation.direction) / d;
    let three = T::lit(3.0);
    Ok(dipolar_prefactor::<T>() * (three * cos * cos - T::one()) / (T::lit(4.0) * d * d * d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbours_fully_occupied() {
        let a0 = SI_LATTICE_CONSTANT;
        let spec = LatticeSpec {
            lattice_constant: a0,
            cutoff_radius: 1.05 * 3f64.sqrt() / 4.0 * a0,
            abundance: 1.0,
        };
        let bath = generate_bath(
            &spec,
            3,
            FieldOrientation::parse("001").unwrap(),
            &HyperfineModel::default_envelope(),
        )
        .unwrap();
        assert_eq!(bath.len(), 4);
        for r in &bath.positions {
            assert!((norm(r) - 3f64.sqrt() / 4.0 * a0).abs() < 1e-20);
        }
        assert!(bath.hyperfine.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn empty_lattice_is_an_error() {
        let spec = LatticeSpec::natural_silicon(1e-11);
        let err = generate_bath(
            &spec,
            0,
            FieldOrientation::parse("001").unwrap(),
            &HyperfineModel::default_envelope(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyLattice { .. }));
    }

    #[test]
    fn envelope_at_bohr_radius() {
        let model = HyperfineModel::Isotropic {
            a_max: 7.0,
            bohr_radius: 2e-9,
        };
        let a = hyperfine_map(&[[2e-9, 0.0, 0.0], [0.0, -2e-9, 0.0]], &model).unwrap();
        assert!((a[0] - 7.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(a[0], a[1]);
    }

    #[test]
    fn table_model_round_trip_and_missing_site() {
        let spec = LatticeSpec::natural_silicon(1.5e-9);
        let orient = FieldOrientation::parse("110").unwrap();
        let bath = generate_bath(&spec, 11, orient, &HyperfineModel::default_envelope()).unwrap();
        let mut buf = Vec::new();
        bath.write_site_table(&mut buf).unwrap();
        let table = HyperfineTable::read(&buf[..], SI_LATTICE_CONSTANT).unwrap();
        assert_eq!(table.len(), bath.len());
        let again = hyperfine_map(&bath.positions, &HyperfineModel::Table(table.clone())).unwrap();
        for (a, b) in again.iter().zip(&bath.hyperfine) {
            assert!((a - b).abs() <= 1e-9 * b.abs() + 1e-6);
        }
        let q = SI_LATTICE_CONSTANT / 4.0;
        let far = [[40.0 * q, 40.0 * q, 40.0 * q]];
        assert!(matches!(
            hyperfine_map(&far, &HyperfineModel::Table(table)),
            Err(Error::MissingHyperfineSite { .. })
        ));
    }

    #[test]
    fn dipolar_vanishes_at_magic_angle_bond() {
        let q = SI_LATTICE_CONSTANT / 4.0;
        let d = dipolar_coupling(
            &[0.0, 0.0, 0.0],
            &[q, q, q],
            &FieldOrientation::parse("001").unwrap(),
        )
        .unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn dipolar_inverse_cube_and_symmetry() {
        let o = FieldOrientation::parse("001").unwrap();
        let a = [0.0f64, 0.0, 0.0];
        let d1 = dipolar_coupling(&a, &[0.0, 0.0, 3e-10], &o).unwrap();
        let d2 = dipolar_coupling(&a, &[0.0, 0.0, 6e-10], &o).unwrap();
        assert!((d1 / d2 - 8.0).abs() < 1e-12);
        let b = [1e-10, -2e-10, 5e-10];
        assert_eq!(
            dipolar_coupling(&a, &b, &o).unwrap(),
            dipolar_coupling(&b, &a, &o).unwrap()
        );
        assert!(matches!(dipolar_coupling(&b, &b, &o), Err(Error::CoincidentSites)));
    }

    #[test]
    fn strongest_bond_along_field_for_111() {
        let q = SI_LATTICE_CONSTANT / 4.0;
        let o = FieldOrientation::parse("111").unwrap();
        let bonds = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        let ds: Vec<f64> = bonds
            .iter()
            .map(|b| dipolar_coupling(&[0.0; 3], &[b[0] * q, b[1] * q, b[2] * q], &o).unwrap().abs())
            .collect();
        assert!(ds[0] > ds[1] && ds[0] > ds[2] && ds[0] > ds[3]);
    }

    #[test]
    fn orientation_parsing() {
        let o = FieldOrientation::<f64>::parse("theta:0").unwrap();
        assert!((o.direction[2] - 1.0).abs() < 1e-15);
        let o = FieldOrientation::<f64>::parse("theta:90").unwrap();
        let e = FieldOrientation::<f64>::parse("110").unwrap();
        for k in 0..3 {
            assert!((o.direction[k] - e.direction[k]).abs() < 1e-15);
        }
        let v = FieldOrientation::<f64>::parse("-2,4,1").unwrap();
        assert!((norm(&v.direction) - 1.0).abs() < 1e-12);
        assert!(FieldOrientation::<f64>::parse("0,0,0").is_err());
        assert!(FieldOrientation::<f64>::parse("sideways").is_err());
    }
}
