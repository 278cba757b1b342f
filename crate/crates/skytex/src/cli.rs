//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use skytex_core::diagnostics::DiagnosticsReport;
use skytex_core::measurement::ShotRecord;
use skytex_core::protocols::{AnalyticTarget, TextureKind};
use skytex_core::{BlochField, Error, IonCrystal};

use crate::config::{self, Experiment, Format, Overrides, ShotFormat};
use crate::error::{CliError, Result};
use crate::formats::{self, FieldInput};
use crate::pipeline;
use crate::render::{render_binned, render_field, Style};

/// Spin-texture experiments on rotating ion crystals.
#[derive(Debug, Parser)]
#[command(name = "skytex", version)]
pub struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `drive.eta_x=0.33`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Artifact kinds to write. Repeatable; defaults to the config.
    #[arg(long, global = true, value_enum)]
    pub format: Vec<Format>,
    /// What to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the crystal.
    Crystal,
    /// Prepare the configured texture.
    Prepare,
    /// Sample shots in all three bases.
    Measure {
        /// Field table to measure; the prepared texture when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Crystal document; the configured crystal when absent.
        #[arg(long)]
        crystal: Option<PathBuf>,
    },
    /// Bin and reconstruct shot records.
    Reconstruct {
        /// Shot files, one per basis; simulated from the config when absent.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Crystal document; the configured crystal when absent.
        #[arg(long)]
        crystal: Option<PathBuf>,
    },
    /// Winding number, order parameter and fidelity of a field.
    Diagnose {
        /// Field or binned table; the prepared texture when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Crystal document; the configured crystal when absent.
        #[arg(long)]
        crystal: Option<PathBuf>,
    },
    /// Domain wall by repump sweep, with edge fit.
    DomainWall,
    /// Spin-echo dephasing under AC field noise.
    NoiseEcho,
    /// Rotating-wave validity check.
    RwaCheck {
        /// Also compare the full drive with the closed form.
        #[arg(long)]
        full: bool,
    },
    /// Render a field or binned table to SVG.
    Render {
        /// Field or binned table.
        #[arg(long)]
        input: PathBuf,
        /// Crystal document for per-ion fields; the configured crystal when absent.
        #[arg(long)]
        crystal: Option<PathBuf>,
        /// Styles to draw; all when absent.
        #[arg(long, value_enum)]
        style: Vec<Style>,
    },
    /// Run a figure pipeline end to end.
    Reproduce {
        /// Figure.
        #[arg(value_enum)]
        target: Figure,
    },
}

/// Figure pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Measured skyrmion and its projections.
    Fig2,
    /// Winding number and order parameter against drive time.
    Fig3,
    /// Domain wall by repump sweep.
    Fig4,
    /// Texture family.
    Fig5,
    /// Echo dephasing under field noise.
    Fig7,
}

/// Crystal spacing and radius of the domain-wall experiments.
fn domain_wall_preset() -> serde_json::Value {
    json!({
        "crystal": { "spacing_um": 30.0, "radius_um": 220.0 },
        "texture": { "kind": "domain_wall" }
    })
}

/// Parses arguments, runs, prints, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            e.exit_code()
        }
    }
}

/// Collects written artifacts.
struct Out<'a> {
    exp: &'a Experiment,
    dir: PathBuf,
    lines: Vec<String>,
}

impl<'a> Out<'a> {
    fn new(exp: &'a Experiment) -> Result<Self> {
        let dir = exp.config.output.directory.clone();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut out = Out { exp, dir, lines: Vec::new() };
        formats::write_json(&out.path("resolved_config.json"), &exp.config)?;
        out.lines.push(format!("wrote {}", out.path("resolved_config.json").display()));
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.exp.wants(f)
    }

    fn write(&mut self, f: Format, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if self.wants(f) {
            let p = self.path(name);
            write(&p)?;
            self.lines.push(format!("wrote {}", p.display()));
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        self.write(Format::Json, name, |p| formats::write_json(p, v))
    }

    fn text(&mut self, f: Format, name: &str, text: &str) -> Result<()> {
        self.write(f, name, |p| formats::write_text(p, text))
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        self.write(Format::Csv, name, |p| formats::write_table(p, header, rows))
    }

    fn info(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    fn field_svgs(&mut self, prefix: &str, crystal: &IonCrystal, field: &BlochField, styles: &[Style]) -> Result<()> {
        for &s in styles {
            let svg = render_field(crystal, field, s);
            self.text(Format::Svg, &format!("{prefix}{}.svg", s.name()), &svg)?;
        }
        Ok(())
    }

    fn binned_svgs(
        &mut self,
        prefix: &str,
        binned: &skytex_core::measurement::BinnedField,
        styles: &[Style],
    ) -> Result<()> {
        for &s in styles {
            let svg = render_binned(binned, s);
            self.text(Format::Svg, &format!("{prefix}{}.svg", s.name()), &svg)?;
        }
        Ok(())
    }

    fn shots(&mut self, records: &[ShotRecord]) -> Result<()> {
        for r in records {
            match self.exp.config.measurement.shot_format {
                ShotFormat::Csv => {
                    self.write(Format::Csv, &format!("shots_{}.csv", r.basis()), |p| formats::write_shots_csv(p, r))?
                }
                ShotFormat::Binary => {
                    self.write(Format::Csv, &format!("shots_{}.bin", r.basis()), |p| formats::write_shots_binary(p, r))?
                }
            }
        }
        Ok(())
    }

    fn report(&mut self, prefix: &str, r: &DiagnosticsReport) {
        if let Some(q) = r.q {
            self.info(&format!("{prefix}q"), q);
        }
        self.info(&format!("{prefix}order_parameter"), r.order_parameter);
        if let Some(f) = r.mean_fidelity {
            self.info(&format!("{prefix}mean_fidelity"), f);
        }
    }
}

fn load_crystal(exp: &Experiment, path: Option<&PathBuf>) -> Result<IonCrystal> {
    match path {
        Some(p) => formats::read_crystal(p),
        None => Ok(exp.crystal.clone()),
    }
}

fn check_size(crystal: &IonCrystal, n: usize) -> Result<()> {
    if crystal.len() != n {
        return Err(CliError::Input(Error::LengthMismatch { expected: crystal.len(), found: n }));
    }
    Ok(())
}

/// Runs a parsed command line and returns the lines to print.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let preset = match &cli.command {
        Command::DomainWall | Command::Reproduce { target: Figure::Fig4 } => Some(domain_wall_preset()),
        _ => None,
    };
    let overrides =
        Overrides { sets: cli.sets.clone(), seed: cli.seed, out: cli.out.clone(), formats: cli.format.clone() };
    let cfg = config::load(cli.config.as_deref(), preset.as_ref(), &overrides)?;
    let exp = Experiment::build(cfg)?;
    let mut out = Out::new(&exp)?;
    match &cli.command {
        Command::Crystal => {
            out.json("crystal.json", &CrystalJson(&exp.crystal))?;
            out.info("n_ions", exp.crystal.len());
            out.info("radius_um", exp.crystal.radius());
        }
        Command::Prepare => {
            let field = pipeline::prepare(&exp, &exp.texture)?;
            let report =
                DiagnosticsReport::for_field(&exp.crystal, &field, Some(&pipeline::target(&exp, &exp.texture)))?;
            out.json("crystal.json", &CrystalJson(&exp.crystal))?;
            out.write(Format::Csv, "field.csv", |p| formats::write_field(p, &field))?;
            out.json("diagnostics.json", &report)?;
            out.field_svgs("field-", &exp.crystal, &field, &Style::ALL)?;
            out.report("", &report);
        }
        Command::Measure { input, crystal } => {
            let crystal = load_crystal(&exp, crystal.as_ref())?;
            let field = match input {
                Some(p) => formats::read_field(p)?,
                None => pipeline::prepare(&exp, &exp.texture)?,
            };
            check_size(&crystal, field.len())?;
            let records = pipeline::measure(&exp, &field, exp.measurement_seed())?;
            out.json("crystal.json", &CrystalJson(&crystal))?;
            out.shots(&records)?;
            for r in &records {
                out.info(&format!("mean_{}", r.basis()), r.mean());
            }
        }
        Command::Reconstruct { input, crystal } => {
            let crystal = load_crystal(&exp, crystal.as_ref())?;
            let records = if input.is_empty() {
                let field = pipeline::prepare(&exp, &exp.texture)?;
                pipeline::measure(&exp, &field, exp.measurement_seed())?
            } else {
                input.iter().map(|p| formats::read_shots(p)).collect::<Result<Vec<_>>>()?
            };
            let rec = pipeline::reconstruct(&exp, &crystal, &records, &exp.texture)?;
            let report = DiagnosticsReport::for_binned(&rec.binned, Some(&rec.targets))?;
            out.write(Format::Csv, "binned.csv", |p| formats::write_binned(p, &rec.binned))?;
            out.json("diagnostics.json", &report)?;
            out.binned_svgs("binned-", &rec.binned, &Style::ALL)?;
            if let Some(a) = rec.phase_offset {
                out.info("phase_offset", a);
            }
            out.report("", &report);
        }
        Command::Diagnose { input, crystal } => {
            let crystal = load_crystal(&exp, crystal.as_ref())?;
            let target = AnalyticTarget { spec: exp.texture.clone(), psi: exp.drive.psi };
            let report = match input {
                None => {
                    let field = pipeline::prepare(&exp, &exp.texture)?;
                    DiagnosticsReport::for_field(&crystal, &field, Some(&pipeline::target(&exp, &exp.texture)))?
                }
                Some(p) => match formats::read_field_or_binned(p)? {
                    FieldInput::Field(field) => {
                        check_size(&crystal, field.len())?;
                        let t = skytex_core::protocols::target_texture(&crystal, &exp.texture, exp.drive.psi);
                        DiagnosticsReport::for_field(&crystal, &field, Some(&t))?
                    }
                    FieldInput::Binned(binned) => {
                        let members = binned.bins().iter().map(|b| b.n_ions()).sum::<usize>();
                        check_size(&crystal, members)?;
                        let targets = binned.target_vectors(&crystal, &target);
                        DiagnosticsReport::for_binned(&binned, Some(&targets))?
                    }
                },
            };
            out.json("diagnostics.json", &report)?;
            out.report("", &report);
        }
        Command::DomainWall | Command::Reproduce { target: Figure::Fig4 } => domain_wall(&exp, &mut out)?,
        Command::NoiseEcho | Command::Reproduce { target: Figure::Fig7 } => echo(&exp, &mut out)?,
        Command::RwaCheck { full } => {
            let check = pipeline::rwa_check(&exp, *full)?;
            out.json("rwa.json", &check)?;
            out.info("ratio", check.report.ratio);
            out.info("threshold", check.report.threshold);
            out.info("pass", check.report.pass);
            if let Some(x) = check.full_drive_infidelity {
                out.info("full_drive_infidelity", x);
            }
            if !check.report.pass {
                return Err(CliError::Numerical(Error::NumericalFailure {
                    ion: 0,
                    detail: format!(
                        "rotating-wave ratio {:.4} is not below {}",
                        check.report.ratio, check.report.threshold
                    ),
                }));
            }
        }
        Command::Render { input, crystal, style } => {
            let styles: Vec<Style> = if style.is_empty() { Style::ALL.to_vec() } else { style.clone() };
            let stem = input.file_stem().map_or("render".into(), |s| s.to_string_lossy().into_owned());
            match formats::read_field_or_binned(input)? {
                FieldInput::Field(field) => {
                    let crystal = load_crystal(&exp, crystal.as_ref())?;
                    check_size(&crystal, field.len())?;
                    out.field_svgs(&format!("{stem}-"), &crystal, &field, &styles)?;
                }
                FieldInput::Binned(binned) => out.binned_svgs(&format!("{stem}-"), &binned, &styles)?,
            }
        }
        Command::Reproduce { target: Figure::Fig2 } => {
            let run = pipeline::texture_run(&exp, &exp.texture, exp.measurement_seed())?;
            out.json("crystal.json", &CrystalJson(&exp.crystal))?;
            out.write(Format::Csv, "field.csv", |p| formats::write_field(p, &run.field))?;
            out.write(Format::Csv, "binned.csv", |p| formats::write_binned(p, &run.reconstruction.binned))?;
            out.json("diagnostics.json", &run.report)?;
            out.field_svgs("field-", &exp.crystal, &run.field, &[Style::Quiver])?;
            out.binned_svgs("binned-", &run.reconstruction.binned, &Style::ALL)?;
            out.report("field_", &run.report.field);
            out.report("measured_", &run.report.measured);
        }
        Command::Reproduce { target: Figure::Fig3 } => {
            let scan = pipeline::formation_scan(&exp)?;
            out.table("formation.csv", &pipeline::FORMATION_HEADER, &scan.rows)?;
            out.json("omega_r.json", &scan.summary)?;
            out.info("omega_r_fit", scan.summary.omega_r_fit);
            out.info("omega_r_relative_error", scan.summary.relative_error);
        }
        Command::Reproduce { target: Figure::Fig5 } => {
            let rows = pipeline::family(&exp)?;
            let mut csv = String::from(
                "kind,q,order_parameter,mean_fidelity,q_measured,order_parameter_measured,mean_fidelity_measured\n",
            );
            let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            for (row, run) in &rows {
                let (f, m) = (&row.report.field, &row.report.measured);
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.kind,
                    cell(f.q),
                    f.order_parameter,
                    cell(f.mean_fidelity),
                    cell(m.q),
                    m.order_parameter,
                    cell(m.mean_fidelity)
                ));
                out.field_svgs(&format!("{}-", row.kind), &exp.crystal, &run.field, &[Style::Quiver])?;
                out.info(&format!("{}_q", row.kind), cell(f.q));
            }
            let docs: Vec<&pipeline::FamilyRow> = rows.iter().map(|r| &r.0).collect();
            out.text(Format::Csv, "family.csv", &csv)?;
            out.json("family.json", &docs)?;
        }
    }
    Ok(out.lines)
}

fn domain_wall(exp: &Experiment, out: &mut Out<'_>) -> Result<()> {
    if exp.texture.kind != TextureKind::DomainWall {
        return Err(CliError::config("texture.kind", "domain-wall runs need texture.kind = domain_wall"));
    }
    let dw = pipeline::domain_wall(exp)?;
    let sweep: Vec<Vec<f64>> = exp.beam.schedule().iter().map(|s| vec![s.position, s.dwell, s.power]).collect();
    let profile: Vec<Vec<f64>> = dw.profile.iter().map(|p| vec![p.0, p.1, p.2 as f64]).collect();
    let ions: Vec<Vec<f64>> = dw.ion_profile.iter().map(|p| vec![p.0, p.1]).collect();
    out.json("crystal.json", &CrystalJson(&exp.crystal))?;
    out.write(Format::Csv, "field.csv", |p| formats::write_field(p, &dw.field))?;
    out.write(Format::Csv, "binned.csv", |p| formats::write_binned(p, &dw.run.reconstruction.binned))?;
    out.table("sweep.csv", &["position_um", "dwell_s", "power"], &sweep)?;
    out.table("profile.csv", &["r_um", "z", "n_ions"], &profile)?;
    out.table("ion_profile.csv", &["r_um", "z"], &ions)?;
    out.json("domain_wall.json", &dw.summary)?;
    out.json("diagnostics.json", &dw.run.report)?;
    out.field_svgs("field-", &exp.crystal, &dw.field, &[Style::Quiver, Style::HeatmapZ])?;
    out.binned_svgs("binned-", &dw.run.reconstruction.binned, &[Style::HeatmapZ])?;
    out.info("edge_width_um", dw.summary.edge.width);
    out.info("edge_r0_um", dw.summary.edge.r0);
    out.info("order_parameter", dw.summary.order_parameter);
    Ok(())
}

fn echo(exp: &Experiment, out: &mut Out<'_>) -> Result<()> {
    let run = pipeline::echo(exp)?;
    out.table("echo.csv", &pipeline::ECHO_HEADER, &run.rows)?;
    out.json("noise.json", &run.summary)?;
    out.info("b_nt", run.summary.noise.b);
    out.info("retention", run.summary.retention);
    out.info("retention_closed_form", run.summary.retention_closed_form);
    if let Some(f) = &run.summary.fit {
        out.info("fit_f_hz", f.params.f);
    }
    Ok(())
}

/// Adapter so the crystal document goes through [`Out::json`].
struct CrystalJson<'a>(&'a IonCrystal);

impl Serialize for CrystalJson<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        formats::crystal_doc(self.0).serialize(s)
    }
}
