//! On-disk formats.
//!
//! Tables are CSV with a leading `# key=value ...` metadata line. Floats are
//! written in Rust's shortest round-trip form, so every export re-ingests to
//! an identical value.
//!
//! | artifact | layout |
//! |---|---|
//! | crystal | JSON `{spacing_um, radius_um, ions: [{id, r_um, phi_rad}]}` |
//! | field | CSV `id,ux,uy,uz`, metadata `basis` |
//! | shots | CSV `shot,ion,bit`, or a JSON header line plus packed bits |
//! | binned | CSV `bin,r_center,phi_center,px,py,pz,ux,uy,uz,n_ions,members` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skytex_core::geometry::Ion;
use skytex_core::measurement::{Bin, BinGrid, BinnedField, MeasurementBasis, ShotRecord};
use skytex_core::{Basis, BlochField, IonCrystal, Vec3};

use crate::error::{CliError, Result};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    write_file(path, s.as_bytes())
}

/// Reads a JSON document, reporting the line of a syntax error or the key
/// path of a type error.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        CliError::parse(path, inner.line() as u64, format!("at `{key}`: {inner}"))
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrystalDoc {
    spacing_um: f64,
    radius_um: f64,
    ions: Vec<IonRow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IonRow {
    id: usize,
    r_um: f64,
    phi_rad: f64,
}

/// The crystal document as a serializable value.
pub fn crystal_doc(crystal: &IonCrystal) -> impl Serialize {
    CrystalDoc {
        spacing_um: crystal.spacing(),
        radius_um: crystal.radius(),
        ions: crystal.ions().iter().enumerate().map(|(id, ion)| IonRow { id, r_um: ion.r, phi_rad: ion.phi }).collect(),
    }
}

/// Writes a crystal document.
pub fn write_crystal(path: &Path, crystal: &IonCrystal) -> Result<()> {
    write_json(path, &crystal_doc(crystal))
}

/// Reads a crystal document.
pub fn read_crystal(path: &Path) -> Result<IonCrystal> {
    let doc: CrystalDoc = read_json(path)?;
    if doc.ions.is_empty() {
        return Err(CliError::parse(path, 0, "crystal has no ions"));
    }
    let mut ions = Vec::with_capacity(doc.ions.len());
    for (k, row) in doc.ions.iter().enumerate() {
        if row.id != k {
            return Err(CliError::parse(path, k as u64 + 1, format!("expected id {k}, found {}", row.id)));
        }
        ions.push(Ion { r: row.r_um, phi: row.phi_rad });
    }
    IonCrystal::new(ions, doc.radius_um, doc.spacing_um).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

fn meta_line(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("#");
    for (k, v) in pairs {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

/// Splits a table into its metadata and its CSV body. The body keeps the
/// metadata line as a blank line so CSV line numbers match the file.
fn split_meta(path: &Path, text: &str) -> Result<(BTreeMap<String, String>, String)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim_end_matches('\r');
    let body =
        first.strip_prefix('#').ok_or_else(|| CliError::parse(path, 1, "missing `# key=value` metadata line"))?;
    let mut meta = BTreeMap::new();
    for tok in body.split_whitespace() {
        let (k, v) =
            tok.split_once('=').ok_or_else(|| CliError::parse(path, 1, format!("bad metadata token `{tok}`")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    Ok((meta, format!("\n{rest}")))
}

fn meta_get<T: std::str::FromStr>(path: &Path, meta: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = meta.get(key).ok_or_else(|| CliError::parse(path, 1, format!("metadata lacks `{key}`")))?;
    raw.parse().map_err(|_| CliError::parse(path, 1, format!("bad metadata value {key}={raw}")))
}

/// Parsed CSV rows, each with the line it came from.
fn csv_rows(path: &Path, body: &str, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let line_of = |e: &csv::Error| e.position().map_or(0, |p| p.line());
    let got = rdr.headers().map_err(|e| CliError::parse(path, line_of(&e), e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(CliError::parse(path, 2, format!("expected header `{}`", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::parse(path, line_of(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    if out.is_empty() {
        return Err(CliError::parse(path, 2, "no records"));
    }
    Ok(out)
}

fn field_at<T: std::str::FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| CliError::parse(path, line, format!("column `{name}`: cannot parse `{raw}`")))
}

fn opt_field(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<Option<f64>> {
    match rec.get(i).map(str::trim) {
        None | Some("") => Ok(None),
        Some(_) => field_at(path, line, rec, i, name).map(Some),
    }
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const FIELD_HEADER: [&str; 4] = ["id", "ux", "uy", "uz"];

/// Field as CSV text.
pub fn field_csv(field: &BlochField) -> String {
    let mut s = meta_line(&[("basis", field.basis().to_string()), ("n_ions", field.len().to_string())]);
    s.push_str(&FIELD_HEADER.join(","));
    s.push('\n');
    for (j, v) in field.vectors().iter().enumerate() {
        let _ = writeln!(s, "{j},{},{},{}", v.x, v.y, v.z);
    }
    s
}

/// Writes a field table.
pub fn write_field(path: &Path, field: &BlochField) -> Result<()> {
    write_file(path, field_csv(field).as_bytes())
}

/// Reads a field table.
pub fn read_field(path: &Path) -> Result<BlochField> {
    parse_field(path, &read_text(path)?)
}

fn parse_field(path: &Path, text: &str) -> Result<BlochField> {
    if text.trim().is_empty() {
        return Err(CliError::parse(path, 1, "empty file"));
    }
    let (meta, body) = split_meta(path, text)?;
    let basis = match meta.get("basis").map(String::as_str) {
        Some("lab") => Basis::Lab,
        Some("rotated") => Basis::Rotated,
        other => return Err(CliError::parse(path, 1, format!("unknown basis {other:?}"))),
    };
    let mut v = Vec::new();
    for (k, (line, rec)) in csv_rows(path, &body, &FIELD_HEADER)?.into_iter().enumerate() {
        let id: usize = field_at(path, line, &rec, 0, "id")?;
        if id != k {
            return Err(CliError::parse(path, line, format!("expected id {k}, found {id}")));
        }
        v.push(Vec3::new(
            field_at(path, line, &rec, 1, "ux")?,
            field_at(path, line, &rec, 2, "uy")?,
            field_at(path, line, &rec, 3, "uz")?,
        ));
    }
    if let Some(n) = meta.get("n_ions") {
        if n != &v.len().to_string() {
            return Err(CliError::parse(path, 1, format!("metadata says {n} ions, file has {}", v.len())));
        }
    }
    BlochField::new(v, basis).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

fn parse_basis(path: &Path, s: &str) -> Result<MeasurementBasis> {
    MeasurementBasis::ALL
        .into_iter()
        .find(|b| b.to_string() == s)
        .ok_or_else(|| CliError::parse(path, 1, format!("unknown measurement basis `{s}`")))
}

const SHOT_HEADER: [&str; 3] = ["shot", "ion", "bit"];

fn shot_meta(r: &ShotRecord) -> Vec<(&'static str, String)> {
    vec![
        ("basis", r.basis().to_string()),
        ("n_shots", r.n_shots().to_string()),
        ("n_ions", r.n_ions().to_string()),
        ("seed", r.seed().to_string()),
        ("epsilon", r.epsilon().to_string()),
    ]
}

/// Writes shots as `shot,ion,bit` rows, shot-major.
pub fn write_shots_csv(path: &Path, r: &ShotRecord) -> Result<()> {
    let mut s = meta_line(&shot_meta(r));
    s.push_str(&SHOT_HEADER.join(","));
    s.push('\n');
    for shot in 0..r.n_shots() {
        for ion in 0..r.n_ions() {
            let _ = writeln!(s, "{shot},{ion},{}", r.bit(shot, ion) as u8);
        }
    }
    write_file(path, s.as_bytes())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShotHeader {
    basis: MeasurementBasis,
    n_shots: usize,
    n_ions: usize,
    seed: u64,
    epsilon: f64,
}

/// Writes shots as one JSON header line followed by the outcomes packed
/// eight per byte, least significant bit first, shot-major.
pub fn write_shots_binary(path: &Path, r: &ShotRecord) -> Result<()> {
    let header =
        ShotHeader { basis: r.basis(), n_shots: r.n_shots(), n_ions: r.n_ions(), seed: r.seed(), epsilon: r.epsilon() };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    let mut packed = vec![0u8; r.outcomes().len().div_ceil(8)];
    for (k, &b) in r.outcomes().iter().enumerate() {
        packed[k / 8] |= b << (k % 8);
    }
    bytes.extend_from_slice(&packed);
    write_file(path, &bytes)
}

/// Reads either shot encoding.
pub fn read_shots(path: &Path) -> Result<ShotRecord> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    match bytes.first() {
        None => Err(CliError::parse(path, 1, "empty file")),
        Some(b'{') => parse_shots_binary(path, &bytes),
        Some(_) => {
            parse_shots_csv(path, std::str::from_utf8(&bytes).map_err(|e| CliError::parse(path, 1, e.to_string()))?)
        }
    }
}

fn parse_shots_binary(path: &Path, bytes: &[u8]) -> Result<ShotRecord> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| CliError::parse(path, 1, "missing header line"))?;
    let h: ShotHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| CliError::parse(path, 1, e.to_string()))?;
    let n = h.n_shots * h.n_ions;
    let packed = &bytes[nl + 1..];
    if packed.len() != n.div_ceil(8) {
        return Err(CliError::parse(path, 2, format!("expected {} data bytes, found {}", n.div_ceil(8), packed.len())));
    }
    let outcomes = (0..n).map(|k| (packed[k / 8] >> (k % 8)) & 1).collect();
    ShotRecord::new(h.basis, h.n_shots, h.n_ions, outcomes, h.seed, h.epsilon)
        .map_err(|e| CliError::parse(path, 1, e.to_string()))
}

fn parse_shots_csv(path: &Path, text: &str) -> Result<ShotRecord> {
    let (meta, body) = split_meta(path, text)?;
    let basis = parse_basis(path, meta.get("basis").map_or("", String::as_str))?;
    let n_shots: usize = meta_get(path, &meta, "n_shots")?;
    let n_ions: usize = meta_get(path, &meta, "n_ions")?;
    let seed: u64 = meta_get(path, &meta, "seed")?;
    let epsilon: f64 = meta_get(path, &meta, "epsilon")?;
    let mut outcomes = vec![0u8; n_shots * n_ions];
    let mut seen = vec![false; n_shots * n_ions];
    for (line, rec) in csv_rows(path, &body, &SHOT_HEADER)? {
        let shot: usize = field_at(path, line, &rec, 0, "shot")?;
        let ion: usize = field_at(path, line, &rec, 1, "ion")?;
        let bit: u8 = field_at(path, line, &rec, 2, "bit")?;
        if shot >= n_shots || ion >= n_ions || bit > 1 {
            return Err(CliError::parse(path, line, format!("entry ({shot}, {ion}, {bit}) out of range")));
        }
        let k = shot * n_ions + ion;
        if std::mem::replace(&mut seen[k], true) {
            return Err(CliError::parse(path, line, format!("duplicate entry for shot {shot}, ion {ion}")));
        }
        outcomes[k] = bit;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(CliError::parse(path, 0, format!("missing entry for shot {}, ion {}", k / n_ions, k % n_ions)));
    }
    ShotRecord::new(basis, n_shots, n_ions, outcomes, seed, epsilon)
        .map_err(|e| CliError::parse(path, 1, e.to_string()))
}

const BINNED_HEADER: [&str; 11] =
    ["bin", "r_center", "phi_center", "px", "py", "pz", "ux", "uy", "uz", "n_ions", "members"];

/// Binned field as CSV text. Missing values are empty cells and `members`
/// lists ion ids separated by `;`.
pub fn binned_csv(b: &BinnedField) -> String {
    let g = b.grid();
    let mut s = meta_line(&[
        ("n_radial", g.n_radial.to_string()),
        ("n_azimuthal", g.n_azimuthal.to_string()),
        ("radius", b.radius().to_string()),
        ("phase_offset", b.phase_offset().to_string()),
    ]);
    s.push_str(&BINNED_HEADER.join(","));
    s.push('\n');
    for (k, bin) in b.bins().iter().enumerate() {
        let members: Vec<String> = bin.members.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{},{},{},{},{}",
            bin.r_center,
            bin.phi_center,
            opt_str(bin.p_up[0]),
            opt_str(bin.p_up[1]),
            opt_str(bin.p_up[2]),
            opt_str(bin.u.map(|u| u.x)),
            opt_str(bin.u.map(|u| u.y)),
            opt_str(bin.u.map(|u| u.z)),
            bin.n_ions(),
            members.join(";"),
        );
    }
    s
}

/// Writes a binned table.
pub fn write_binned(path: &Path, b: &BinnedField) -> Result<()> {
    write_file(path, binned_csv(b).as_bytes())
}

/// Reads a binned table.
pub fn read_binned(path: &Path) -> Result<BinnedField> {
    parse_binned(path, &read_text(path)?)
}

fn parse_binned(path: &Path, text: &str) -> Result<BinnedField> {
    if text.trim().is_empty() {
        return Err(CliError::parse(path, 1, "empty file"));
    }
    let (meta, body) = split_meta(path, text)?;
    let grid =
        BinGrid { n_radial: meta_get(path, &meta, "n_radial")?, n_azimuthal: meta_get(path, &meta, "n_azimuthal")? };
    let radius: f64 = meta_get(path, &meta, "radius")?;
    let phase_offset: f64 = meta_get(path, &meta, "phase_offset")?;
    let mut bins = Vec::new();
    for (k, (line, rec)) in csv_rows(path, &body, &BINNED_HEADER)?.into_iter().enumerate() {
        let id: usize = field_at(path, line, &rec, 0, "bin")?;
        if id != k {
            return Err(CliError::parse(path, line, format!("expected bin {k}, found {id}")));
        }
        let p = [
            opt_field(path, line, &rec, 3, "px")?,
            opt_field(path, line, &rec, 4, "py")?,
            opt_field(path, line, &rec, 5, "pz")?,
        ];
        let u = [
            opt_field(path, line, &rec, 6, "ux")?,
            opt_field(path, line, &rec, 7, "uy")?,
            opt_field(path, line, &rec, 8, "uz")?,
        ];
        let u = match u {
            [Some(x), Some(y), Some(z)] => Some(Vec3::new(x, y, z)),
            [None, None, None] => None,
            _ => return Err(CliError::parse(path, line, "partial Bloch vector")),
        };
        let n: usize = field_at(path, line, &rec, 9, "n_ions")?;
        let raw = rec.get(10).unwrap_or("").trim();
        let members: Vec<usize> = if raw.is_empty() {
            Vec::new()
        } else {
            raw.split(';')
                .map(|m| m.parse().map_err(|_| CliError::parse(path, line, format!("bad member `{m}`"))))
                .collect::<Result<_>>()?
        };
        if members.len() != n {
            return Err(CliError::parse(path, line, format!("n_ions = {n} but {} members listed", members.len())));
        }
        bins.push(Bin {
            r_center: field_at(path, line, &rec, 1, "r_center")?,
            phi_center: field_at(path, line, &rec, 2, "phi_center")?,
            members,
            p_up: p,
            u,
        });
    }
    BinnedField::new(bins, grid, radius, phase_offset).map_err(|e| CliError::parse(path, 1, e.to_string()))
}

/// A numeric table with a header row.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes a numeric table.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_file(path, table_csv(header, rows).as_bytes())
}

/// Reads a numeric table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> =
        rdr.headers().map_err(|e| CliError::parse(path, 1, e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((0..rec.len()).map(|i| field_at(path, line, &rec, i, &header[i])).collect::<Result<Vec<f64>>>()?);
    }
    Ok((header, rows))
}

/// Writes raw text.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}

/// Reads a field or binned table, telling them apart by their header.
pub enum FieldInput {
    /// Per-ion field.
    Field(BlochField),
    /// Binned field.
    Binned(BinnedField),
}

/// Reads `path` as whichever table it holds.
pub fn read_field_or_binned(path: &Path) -> Result<FieldInput> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(CliError::parse(path, 1, "empty file"));
    }
    let header = text.lines().nth(1).unwrap_or("");
    if header.starts_with("bin,") {
        parse_binned(path, &text).map(FieldInput::Binned)
    } else {
        parse_field(path, &text).map(FieldInput::Field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skytex_core::dynamics::closed_form_at_angle;
    use skytex_core::generate_crystal;
    use skytex_core::measurement::{bin_polar, reconstruct_bloch, simulate_shots};

    fn setup() -> (IonCrystal, BlochField) {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = closed_form_at_angle(&c, 1.2, 2.7);
        (c, f)
    }

    #[test]
    fn crystal_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let (c, _) = setup();
        let p = d.path().join("c.json");
        write_crystal(&p, &c).unwrap();
        assert_eq!(read_crystal(&p).unwrap(), c);
    }

    #[test]
    fn field_round_trip_both_bases() {
        let d = tempfile::tempdir().unwrap();
        let (_, f) = setup();
        for field in [f.clone(), f.in_basis(Basis::Rotated)] {
            let p = d.path().join("f.csv");
            write_field(&p, &field).unwrap();
            assert_eq!(read_field(&p).unwrap(), field);
        }
    }

    #[test]
    fn shots_round_trip_both_encodings() {
        let d = tempfile::tempdir().unwrap();
        let (_, f) = setup();
        let r = simulate_shots(&f, MeasurementBasis::Y, 13, 0.02, 5).unwrap();
        let (a, b) = (d.path().join("s.csv"), d.path().join("s.bin"));
        write_shots_csv(&a, &r).unwrap();
        write_shots_binary(&b, &r).unwrap();
        assert_eq!(read_shots(&a).unwrap(), r);
        assert_eq!(read_shots(&b).unwrap(), r);
    }

    #[test]
    fn binned_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let (c, f) = setup();
        let recs: Vec<_> = MeasurementBasis::ALL.iter().map(|&b| simulate_shots(&f, b, 20, 0.0, 1).unwrap()).collect();
        let binned = reconstruct_bloch(&bin_polar(&c, &recs, BinGrid::default()).unwrap(), 0.3).unwrap();
        let p = d.path().join("b.csv");
        write_binned(&p, &binned).unwrap();
        assert_eq!(read_binned(&p).unwrap(), binned);
        assert!(matches!(read_field_or_binned(&p).unwrap(), FieldInput::Binned(_)));
    }

    #[test]
    fn empty_field_is_a_parse_error() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("empty.csv");
        fs::write(&p, "").unwrap();
        assert!(matches!(read_field(&p), Err(CliError::Parse { .. })));
        fs::write(&p, "# basis=lab\nid,ux,uy,uz\n").unwrap();
        assert!(matches!(read_field(&p), Err(CliError::Parse { .. })));
    }

    #[test]
    fn bad_record_reports_its_line() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("f.csv");
        fs::write(&p, "# basis=lab\nid,ux,uy,uz\n0,1,0,0\n1,0,zero,0\n").unwrap();
        match read_field(&p) {
            Err(CliError::Parse { record, message, .. }) => {
                assert_eq!(record, 4);
                assert!(message.contains("uy"));
            }
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn over_long_vector_is_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("f.csv");
        fs::write(&p, "# basis=lab\nid,ux,uy,uz\n0,1,1,0\n").unwrap();
        assert!(matches!(read_field(&p), Err(CliError::Parse { .. })));
    }
}
