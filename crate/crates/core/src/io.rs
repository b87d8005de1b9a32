//! Field CSV and PGM files, and JSON problem manifests.
//!
//! Field CSV layout: one header line
//! `nx=…,ny=…,x0=…,y0=…,x1=…,y1=…,lattice=interior|cell`, then one line per
//! grid row (`j` ascending), values comma separated with 17 significant
//! digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Lattice, ScalarField, VectorField};
use crate::problems::ProblemSpec;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn scalar_to_csv(field: &ScalarField) -> String {
    let s = field.spec();
    let mut out = format!(
        "nx={},ny={},x0={},y0={},x1={},y1={},lattice={}\n",
        s.nx,
        s.ny,
        fmt_f64(s.x0),
        fmt_f64(s.y0),
        fmt_f64(s.x1),
        fmt_f64(s.y1),
        field.lattice().name()
    );
    let (w, _) = field.dims();
    for row in field.values().chunks(w) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn scalar_from_csv(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let mut nx = None;
    let mut ny = None;
    let mut corners = [None; 4];
    let mut lattice = None;
    for item in header.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header item `{item}`")))?;
        let num = || v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}")));
        let int = || v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{k}: {e}")));
        match k.trim() {
            "nx" => nx = Some(int()?),
            "ny" => ny = Some(int()?),
            "x0" => corners[0] = Some(num()?),
            "y0" => corners[1] = Some(num()?),
            "x1" => corners[2] = Some(num()?),
            "y1" => corners[3] = Some(num()?),
            "lattice" => lattice = Some(v.trim().parse::<Lattice>()?),
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }
    let missing = |n: &str| Error::Parse(format!("header is missing `{n}`"));
    let spec = GridSpec::new(
        corners[0].ok_or_else(|| missing("x0"))?,
        corners[1].ok_or_else(|| missing("y0"))?,
        corners[2].ok_or_else(|| missing("x1"))?,
        corners[3].ok_or_else(|| missing("y1"))?,
        nx.ok_or_else(|| missing("nx"))?,
        ny.ok_or_else(|| missing("ny"))?,
    )?;
    let lattice = lattice.ok_or_else(|| missing("lattice"))?;
    let mut values = Vec::with_capacity(spec.len(lattice));
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for tok in line.split(',') {
            values.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("value `{tok}`: {e}")))?,
            );
        }
    }
    ScalarField::from_values(spec, lattice, values)
}

pub fn write_scalar(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    fs::write(path, scalar_to_csv(field))?;
    Ok(())
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarField> {
    scalar_from_csv(&fs::read_to_string(path)?)
}

/// Writes `<stem>_x.csv` and `<stem>_y.csv` into `dir`.
pub fn write_vector(dir: impl AsRef<Path>, stem: &str, field: &VectorField) -> Result<()> {
    let dir = dir.as_ref();
    write_scalar(dir.join(format!("{stem}_x.csv")), &field.component(0))?;
    write_scalar(dir.join(format!("{stem}_y.csv")), &field.component(1))?;
    Ok(())
}

pub fn read_vector(dir: impl AsRef<Path>, stem: &str) -> Result<VectorField> {
    let dir = dir.as_ref();
    let x = read_scalar(dir.join(format!("{stem}_x.csv")))?;
    let y = read_scalar(dir.join(format!("{stem}_y.csv")))?;
    VectorField::from_scalars(&x, &y)
}

/// Binary 8-bit PGM, min–max normalized, top image row = largest `y`.
pub fn pgm_bytes(field: &ScalarField) -> Vec<u8> {
    let (w, h) = field.dims();
    let (lo, hi) = (field.min(), field.max());
    let span = hi - lo;
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for j in (0..h).rev() {
        for i in 0..w {
            let t = if span > 0.0 { (field.get(i, j) - lo) / span } else { 0.0 };
            out.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    fs::write(path, pgm_bytes(field))?;
    Ok(())
}

/// On-disk description of a [`ProblemSpec`]; field paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub grid: GridSpec,
    pub a: String,
    pub f: String,
    pub h: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_u: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_j: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
}

/// Writes `problem.json` plus field CSVs into `dir`; returns the manifest path.
pub fn save_problem(dir: impl AsRef<Path>, problem: &ProblemSpec) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_scalar(dir.join("a.csv"), &problem.a)?;
    write_vector(dir, "F", &problem.f)?;
    write_scalar(dir.join("H.csv"), &problem.h)?;
    let mut manifest = Manifest {
        name: problem.name.clone(),
        grid: problem.spec,
        a: "a.csv".into(),
        f: "F".into(),
        h: "H.csv".into(),
        exact_u: None,
        exact_j: None,
        potential: None,
    };
    if let Some(u) = &problem.exact_u {
        write_scalar(dir.join("exact_u.csv"), u)?;
        manifest.exact_u = Some("exact_u.csv".into());
    }
    if let Some(j) = &problem.exact_j {
        write_vector(dir, "exact_J", j)?;
        manifest.exact_j = Some("exact_J".into());
    }
    if let Some(p) = &problem.potential {
        write_scalar(dir.join("potential.csv"), p)?;
        manifest.potential = Some("potential.csv".into());
    }
    let path = dir.join("problem.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

pub fn load_problem(manifest_path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = manifest_path.as_ref();
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let a = read_scalar(dir.join(&manifest.a))?;
    let f = read_vector(dir, &manifest.f)?;
    let h = read_scalar(dir.join(&manifest.h))?;
    if !manifest.grid.same_as(a.spec()) {
        return Err(Error::Mismatch("manifest grid differs from field files".into()));
    }
    let mut p = ProblemSpec::new(manifest.name, a, f, h)?;
    if let Some(u) = &manifest.exact_u {
        let j = match &manifest.exact_j {
            Some(stem) => Some(read_vector(dir, stem)?),
            None => None,
        };
        p = p.with_exact(read_scalar(dir.join(u))?, j)?;
    }
    if let Some(pot) = &manifest.potential {
        let pot = read_scalar(dir.join(pot))?;
        pot.check_compatible(&p.h)?;
        p.potential = Some(pot);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example_paper, Sampling};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            nx in 1usize..7,
            ny in 1usize..7,
            seed in prop::collection::vec(-1e6f64..1e6, 64),
            cell in any::<bool>(),
        ) {
            let g = GridSpec::new(0.0, -1.0, 0.5 * (nx + 1) as f64, 0.5 * (ny + 1) as f64 - 1.0, nx, ny).unwrap();
            let lattice = if cell { Lattice::Cell } else { Lattice::Interior };
            let vals: Vec<f64> = (0..g.len(lattice)).map(|k| seed[k % seed.len()] / (k as f64 + 3.0)).collect();
            let f = ScalarField::from_values(g, lattice, vals).unwrap();
            let back = scalar_from_csv(&scalar_to_csv(&f)).unwrap();
            prop_assert_eq!(back, f);
        }
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(scalar_from_csv("").is_err());
        assert!(scalar_from_csv("nx=2,ny=2,x0=0,y0=0,x1=1,y1=1\n1,2\n").is_err());
        assert!(scalar_from_csv("nx=1,ny=1,x0=0,y0=0,x1=1,y1=1,lattice=interior\n1,2\n").is_err());
        assert!(scalar_from_csv("nx=1,ny=1,x0=0,y0=0,x1=1,y1=1,lattice=interior\nabc\n").is_err());
    }

    #[test]
    fn pgm_header_and_range() {
        let g = GridSpec::unit_square(3).unwrap();
        let f = ScalarField::from_fn(g, Lattice::Interior, |x, _| x);
        let bytes = pgm_bytes(&f);
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 9);
        assert_eq!((px[0], px[2]), (0, 255));
        let flat = pgm_bytes(&ScalarField::zeros(g, Lattice::Interior));
        assert!(flat[header.len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn problem_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = example_paper(GridSpec::unit_square(6).unwrap(), Sampling::Consistent).unwrap();
        let path = save_problem(dir.path(), &p).unwrap();
        let q = load_problem(&path).unwrap();
        assert_eq!(q.name, p.name);
        assert_eq!(q.a, p.a);
        assert_eq!(q.f, p.f);
        assert_eq!(q.h, p.h);
        assert_eq!(q.exact_u, p.exact_u);
        assert_eq!(q.exact_j, p.exact_j);
    }
}
