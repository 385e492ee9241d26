//! File formats: count datasets, χ exports, cross-talk tables,
//! Hamiltonian tables and calibration sweeps.
//!
//! Every file written by the tool starts with a `#` header block naming the
//! command, the configuration hash and the seed. Readers skip `#` lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use photon_twin_core::calibration::{CalibrationSweep, CrossTalkModel, HEATERS};
use photon_twin_core::gates::FidelityHistogram;
use photon_twin_core::sampler::CountRecord;
use photon_twin_core::tomography::{ChiMatrix, QptConfig, QptDataset, PAULI_DIM};
use photon_twin_core::vqe::{projector_to_pauli, PauliHamiltonian, ProjectorHamiltonian};
use photon_twin_core::RMatrix;

use crate::error::{CliError, Result};

pub const REFERENCE_CROSSTALK: &str = include_str!("../data/reference_crosstalk.txt");
pub const REFERENCE_QPT_COUNTS: &str = include_str!("../data/reference_qpt_counts.csv");
pub const H2_0P4A_HAMILTONIAN: &str = include_str!("../data/h2_0p4A_hamiltonian.txt");

/// Provenance block written at the top of every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn render(&self) -> String {
        let mut s = format!(
            "# photon-twin {}\n# config_sha256 = {}\n# seed = {}\n",
            self.command, self.config_sha256, self.seed
        );
        for (k, v) in &self.extra {
            writeln!(s, "# {k} = {v}").unwrap();
        }
        s
    }
}

/// Output directory that stamps every file with the same header.
pub struct OutputDir {
    root: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path, header: Header) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        let text = format!("{}{}", self.header.render(), body);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Shortest representation that reads back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Content lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(field: &str, path: &Path, line: usize, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::parse(path, line, format!("{what}: '{}' is not a finite number", field.trim())))
}

/// Result of reading a count file.
#[derive(Clone, Debug)]
pub struct DatasetFile {
    pub dataset: QptDataset,
    /// Rows whose `sum` column disagrees with C1+C2+C3+C4.
    pub warnings: Vec<String>,
}

/// Reads `config,C1,C2,C3,C4[,sum]`. The sum column is informational only.
pub fn parse_dataset(text: &str, path: &Path) -> Result<DatasetFile> {
    let mut lines = data_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty dataset file"))?;
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let has_sum = match cols.as_slice() {
        [c, a, b, d, e] if c == "config" && [a, b, d, e] == ["c1", "c2", "c3", "c4"] => false,
        [c, a, b, d, e, s] if c == "config" && [a, b, d, e] == ["c1", "c2", "c3", "c4"] && s == "sum" => true,
        _ => {
            return Err(CliError::parse(
                path,
                hline,
                "expected header config,C1,C2,C3,C4[,sum]",
            ))
        }
    };
    let width = if has_sum { 6 } else { 5 };
    let mut dataset = QptDataset::new();
    let mut warnings = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CliError::parse(
                path,
                line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let config: QptConfig = fields[0]
            .parse()
            .map_err(|e: photon_twin_core::Error| CliError::parse(path, line, e.to_string()))?;
        let mut counts = [0u64; 4];
        for (k, c) in counts.iter_mut().enumerate() {
            *c = fields[k + 1].parse().map_err(|_| {
                CliError::parse(path, line, format!("C{}: '{}' is not a count", k + 1, fields[k + 1]))
            })?;
        }
        if has_sum {
            let sum: u64 = fields[5]
                .parse()
                .map_err(|_| CliError::parse(path, line, format!("sum: '{}' is not a count", fields[5])))?;
            let total: u64 = counts.iter().sum();
            if sum != total {
                warnings.push(format!(
                    "{}:{line}: sum column {sum} differs from C1+C2+C3+C4 = {total}; using the counts",
                    path.display()
                ));
            }
        }
        dataset.push(config, CountRecord::from_counts(counts));
    }
    if dataset.is_empty() {
        return Err(CliError::parse(path, hline, "dataset has no rows"));
    }
    Ok(DatasetFile { dataset, warnings })
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(&text, path)
}

pub fn render_dataset(data: &QptDataset) -> String {
    let mut s = String::from("config,C1,C2,C3,C4,sum\n");
    for (config, r) in data.entries() {
        let [a, b, c, d] = r.counts;
        writeln!(s, "{config},{a},{b},{c},{d},{}", r.total()).unwrap();
    }
    s
}

/// Two-qubit Pauli labels in χ index order (`4a + b`).
pub fn pauli_labels() -> Vec<String> {
    const P: [char; 4] = ['I', 'X', 'Y', 'Z'];
    (0..PAULI_DIM).map(|k| format!("{}{}", P[k / 4], P[k % 4])).collect()
}

/// Real part, imaginary part and eigenvalue files of a χ matrix.
pub fn render_chi(chi: &ChiMatrix) -> (String, String, String) {
    let labels = pauli_labels();
    let table = |part: fn(&photon_twin_core::C64) -> f64| {
        let mut s = format!("pauli,{}\n", labels.join(","));
        for (r, label) in labels.iter().enumerate() {
            let row: Vec<String> = (0..PAULI_DIM).map(|c| num(part(&chi.matrix()[(r, c)]))).collect();
            writeln!(s, "{label},{}", row.join(",")).unwrap();
        }
        s
    };
    let mut eig = String::from("index,eigenvalue\n");
    let mut values = chi.eigenvalues();
    values.reverse();
    for (k, v) in values.iter().enumerate() {
        writeln!(eig, "{},{}", k + 1, num(*v)).unwrap();
    }
    (table(|z| z.re), table(|z| z.im), eig)
}

const HEATER_LABELS: [&str; HEATERS] = ["1.1", "2.1", "3.2", "4.2", "5.1", "6.1", "7.2", "8.2"];

/// Reads a cross-talk table: a header row, eight rows of `A` in units of
/// `1e-2 rad/mA²` and a `Phi0` row in radians.
pub fn parse_crosstalk(text: &str, path: &Path) -> Result<CrossTalkModel> {
    let mut lines = data_lines(text);
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| CliError::parse(path, text.lines().count().max(1), format!("missing {what}")))
    };
    let (hline, header) = next("header row")?;
    if header.split_whitespace().count() != HEATERS + 1 {
        return Err(CliError::parse(path, hline, "header row needs a label and 8 heater names"));
    }
    let mut row = |what: &str| -> Result<(usize, [f64; HEATERS])> {
        let (line, l) = next(what)?;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != HEATERS + 1 {
            return Err(CliError::parse(
                path,
                line,
                format!("{what}: expected a label and 8 values, found {} fields", fields.len()),
            ));
        }
        let mut v = [0.0; HEATERS];
        for (k, f) in fields[1..].iter().enumerate() {
            v[k] = parse_f64(f, path, line, what)?;
        }
        Ok((line, v))
    };
    let mut a = [[0.0; HEATERS]; HEATERS];
    for (i, a_row) in a.iter_mut().enumerate() {
        let (_, v) = row(&format!("row {}", i + 1))?;
        *a_row = v.map(|x| x * 1e-2);
    }
    let (line, phi0) = row("Phi0 row")?;
    CrossTalkModel::new(a, phi0).map_err(|e| CliError::parse(path, line, e.to_string()))
}

pub fn read_crosstalk(path: Option<&Path>) -> Result<CrossTalkModel> {
    match path {
        None => parse_crosstalk(REFERENCE_CROSSTALK, Path::new("reference_crosstalk.txt")),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_crosstalk(&text, p)
        }
    }
}

pub fn render_crosstalk(model: &CrossTalkModel) -> String {
    let mut s = format!("htr {}\n", HEATER_LABELS.join(" "));
    for (i, row) in model.a().iter().enumerate() {
        let v: Vec<String> = row.iter().map(|x| format!("{:.4}", x * 100.0)).collect();
        writeln!(s, "{} {}", HEATER_LABELS[i], v.join(" ")).unwrap();
    }
    let v: Vec<String> = model.phi0().iter().map(|x| format!("{x:.4}")).collect();
    writeln!(s, "Phi0 {}", v.join(" ")).unwrap();
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianRow {
    pub distance: f64,
    pub hamiltonian: PauliHamiltonian,
}

/// Whitespace table, one row per internuclear distance: either
/// `distance f0 f1 f2 f3 f4` (II, ZZ, ZI, IZ, XX) or `distance` followed by
/// the eight projector coefficients HH HV VH VV DD DA AD AA.
pub fn parse_hamiltonian_table(text: &str, path: &Path) -> Result<Vec<HamiltonianRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        let values = fields
            .iter()
            .map(|f| parse_f64(f, path, line, "coefficient"))
            .collect::<Result<Vec<f64>>>()?;
        let hamiltonian = match values.len() {
            6 => PauliHamiltonian::from_coefficients([values[1], values[2], values[3], values[4], values[5]]),
            9 => {
                let f = std::array::from_fn(|k| values[k + 1]);
                projector_to_pauli(&ProjectorHamiltonian { f })
            }
            n => {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("expected 6 or 9 columns, found {n}"),
                ))
            }
        }
        .map_err(|e| CliError::parse(path, line, e.to_string()))?;
        rows.push(HamiltonianRow {
            distance: values[0],
            hamiltonian,
        });
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "Hamiltonian table has no rows"));
    }
    Ok(rows)
}

pub fn read_hamiltonian_table(path: Option<&Path>) -> Result<Vec<HamiltonianRow>> {
    match path {
        None => parse_hamiltonian_table(H2_0P4A_HAMILTONIAN, Path::new("h2_0p4A_hamiltonian.txt")),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_hamiltonian_table(&text, p)
        }
    }
}

/// Two-column `current,power` CSV; a non-numeric first row is a header.
pub fn parse_sweep(text: &str, path: &Path) -> Result<CalibrationSweep> {
    let mut currents = Vec::new();
    let mut powers = Vec::new();
    let mut last_line = 1;
    for (n, (line, l)) in data_lines(text).enumerate() {
        last_line = line;
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(CliError::parse(path, line, format!("expected 2 fields, found {}", fields.len())));
        }
        if n == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        currents.push(parse_f64(fields[0], path, line, "current")?);
        powers.push(parse_f64(fields[1], path, line, "power")?);
    }
    CalibrationSweep::new(currents, powers).map_err(|e| CliError::parse(path, last_line, e.to_string()))
}

pub fn render_histogram(h: &FidelityHistogram) -> String {
    let mut s = String::from("sample_index,target_phase,realized_phase,fidelity\n");
    for (k, g) in h.samples.iter().enumerate() {
        writeln!(s, "{k},{},{},{}", num(g.target_phase), num(g.realized_phase), num(g.fidelity)).unwrap();
    }
    writeln!(s, "summary,mean={},std={},min={}", num(h.mean), num(h.std), num(h.min)).unwrap();
    s
}

/// Square real matrix with 1-based row and column labels.
pub fn render_matrix(m: &RMatrix, corner: &str, col_prefix: &str) -> String {
    let mut s = String::from(corner);
    for c in 0..m.cols() {
        write!(s, ",{col_prefix}{}", c + 1).unwrap();
    }
    s.push('\n');
    for r in 0..m.rows() {
        write!(s, "{}", r + 1).unwrap();
        for c in 0..m.cols() {
            write!(s, ",{}", num(m[(r, c)])).unwrap();
        }
        s.push('\n');
    }
    s
}
