//! JSON views, CSV tables and OBJ meshes.
//!
//! ```text
//! Potential        {"alpha":[re,im],"beta":[re,im],"gamma":x}
//! SpectralQuartic  {"a1":[re,im],"a2":x,"class":"M2_1","roots":[[re,im,mult],...]}
//! lattice          {"class":"M2_1","omega1":[re,im],"omega2":[re,im],"bperiod_residual":x}
//! ```
//!
//! CSV floats carry 17 significant digits; a leading `#` block echoes the
//! configuration that produced the table.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genus1_spectral::Figure3Row;
use crate::genus2_spectral::PeriodLatticeG2;
use crate::immersion_willmore::{Figure4Row, ImmersionGrid};
use crate::lax_flows::Trajectory;
use crate::potentials::{Potential, Quartic, Root, SpectralQuartic, StratumClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticJson {
    pub a1: C64,
    pub a2: f64,
    pub class: StratumClass,
    pub roots: Vec<[f64; 3]>,
}

impl From<&SpectralQuartic> for QuarticJson {
    fn from(s: &SpectralQuartic) -> Self {
        Self {
            a1: s.a1,
            a2: s.a2,
            class: s.class,
            roots: s
                .roots
                .iter()
                .map(|r| [r.value.re, r.value.im, r.mult as f64])
                .collect(),
        }
    }
}

impl QuarticJson {
    pub fn to_quartic(&self) -> Result<SpectralQuartic> {
        let roots = self
            .roots
            .iter()
            .map(|r| {
                if r[2] < 1.0 || r[2].fract() != 0.0 {
                    return Err(Error::Domain(format!("bad multiplicity {}", r[2])));
                }
                Ok(Root {
                    value: C64::new(r[0], r[1]),
                    mult: r[2] as usize,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralQuartic {
            a1: self.a1,
            a2: self.a2,
            class: self.class,
            roots,
        })
    }

    pub fn quartic(&self) -> Quartic {
        Quartic::new(self.a1, self.a2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeJson {
    pub class: StratumClass,
    pub omega1: C64,
    pub omega2: C64,
    pub bperiod_residual: f64,
}

impl From<&PeriodLatticeG2> for LatticeJson {
    fn from(l: &PeriodLatticeG2) -> Self {
        Self {
            class: StratumClass::M21,
            omega1: l.omega1,
            omega2: l.omega2,
            bperiod_residual: l.bperiod_residual,
        }
    }
}

pub fn potential_json(p: &Potential) -> String {
    serde_json::to_string(p).expect("plain data serializes")
}

pub fn potential_from_json(s: &str) -> Result<Potential> {
    let p: Potential = serde_json::from_str(s).map_err(|e| Error::Domain(e.to_string()))?;
    Potential::new(p.alpha, p.beta, p.gamma)
}

/// 17 significant digits, round-trips every f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A numeric table with a commented configuration header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub config: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            config: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn with_config(mut self, config: &[(String, String)]) -> Self {
        self.config = config.to_vec();
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt17(*x)))
                .expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(body).expect("ascii output"));
        out
    }

    /// Parses a table written by `to_csv`.
    pub fn parse(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let body: String = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r
            .headers()
            .map_err(|e| Error::Domain(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Domain(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Domain(format!("{f}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok((header, rows))
    }
}

pub fn trajectory_table(t: &Trajectory) -> CsvTable {
    let mut tab = CsvTable::new(&[
        "x", "y", "re_alpha", "im_alpha", "re_beta", "im_beta", "gamma",
    ]);
    for j in 0..t.grid.n2 {
        for i in 0..t.grid.n1 {
            let z = t.grid.node(i, j);
            let p = t.at(i, j);
            tab.rows.push(vec![
                z.re, z.im, p.alpha.re, p.alpha.im, p.beta.re, p.beta.im, p.gamma,
            ]);
        }
    }
    tab
}

pub fn figure3_table(rows: &[Figure3Row]) -> CsvTable {
    let mut tab = CsvTable::new(&["r", "t", "re_tau_tilde", "im_tau_tilde"]);
    tab.rows = rows
        .iter()
        .map(|r| vec![r.r, r.t, r.tau_tilde.re, r.tau_tilde.im])
        .collect();
    tab
}

pub fn figure4_table(rows: &[Figure4Row]) -> CsvTable {
    let mut tab = CsvTable::new(&["r", "t", "re_tau_hat", "im_tau_hat", "willmore"]);
    tab.rows = rows
        .iter()
        .map(|r| vec![r.r, r.t, r.tau_hat.re, r.tau_hat.im, r.willmore])
        .collect();
    tab
}

/// Wavefront OBJ of the sampled immersion. ℝ⁴ is projected to ℝ³ by
/// dropping coordinate `drop`; the full point is kept in a `#r4` comment
/// after each vertex.
pub fn immersion_obj(
    g: &ImmersionGrid,
    drop: usize,
    config: &[(String, String)],
) -> Result<String> {
    if drop > 3 {
        return Err(Error::Domain(format!(
            "coordinate index {drop} out of range 0..4"
        )));
    }
    let mut out = String::new();
    for (k, v) in config {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for p in g.points_r4() {
        let xyz: Vec<String> = (0..4).filter(|&k| k != drop).map(|k| fmt17(p[k])).collect();
        out.push_str(&format!("v {}\n", xyz.join(" ")));
        out.push_str(&format!(
            "#r4 {} {} {} {}\n",
            fmt17(p[0]),
            fmt17(p[1]),
            fmt17(p[2]),
            fmt17(p[3])
        ));
    }
    let (n1, n2) = (g.grid.n1, g.grid.n2);
    for j in 0..n2.saturating_sub(1) {
        for i in 0..n1.saturating_sub(1) {
            let v = |a: usize, b: usize| g.grid.idx(a, b) + 1;
            out.push_str(&format!(
                "f {} {} {} {}\n",
                v(i, j),
                v(i + 1, j),
                v(i + 1, j + 1),
                v(i, j + 1)
            ));
        }
    }
    Ok(out)
}
