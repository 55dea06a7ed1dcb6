//! Line-oriented experiment configuration.
//!
//! ```text
//! seed = 7
//! out = results
//!
//! [specs]
//! champ = champernowne:10
//! half = rat:1/2
//!
//! [machines]
//! dbl = transducer:machines/doubling.txt
//! bettor = martingale:machines/bettor.txt
//! hints = table:tables/hints.txt
//! g = repsys:compose:dbl:identity
//!
//! [jobs]
//! blocks spec=champ base=10 k=2 n=10000,100000
//! repsys cfnd spec=half base=3 f=g machine=dbl n=4..10
//! experiment compose trials=50
//! ```
//!
//! A job is a subcommand path followed by `key=value` flags. `spec`, `f` and
//! `machine` take declared names; everything else is passed through as
//! `--key value`. Relative paths resolve against the configuration's
//! directory. Jobs that take a seed inherit the top-level one.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use normlab::numstream::RealSpec;
use normlab::repsys::{self, Resources};
use normlab::transducer::Transducer;
use normlab::{Error, Result};

use crate::Cli;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MachineKind {
    Transducer,
    Martingale,
    Table,
    Repsys,
}

#[derive(Clone, Debug)]
pub struct MachineDecl {
    pub kind: MachineKind,
    /// Absolute path for file-backed machines; the rewritten declaration
    /// for representation systems.
    pub value: String,
    pub line: usize,
}

#[derive(Debug)]
pub struct Job {
    pub line: usize,
    pub label: String,
    pub cli: Cli,
}

#[derive(Debug)]
pub struct ExperimentConfig {
    pub dir: PathBuf,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub specs: HashMap<String, RealSpec>,
    pub machines: HashMap<String, MachineDecl>,
    pub jobs: Vec<Job>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let dir = if dir.as_os_str().is_empty() {
        Path::new(".")
    } else {
        dir
    };
    parse_config(&text, dir)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Specs,
    Machines,
    Jobs,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn absolute(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn rebase_spec(spec: RealSpec, dir: &Path) -> RealSpec {
    match spec {
        RealSpec::DigitFile { path, base } => RealSpec::DigitFile {
            path: absolute(dir, &path),
            base,
        },
        RealSpec::Interleave { parent, parity } => RealSpec::Interleave {
            parent: Box::new(rebase_spec(*parent, dir)),
            parity,
        },
        RealSpec::Complement(inner) => RealSpec::Complement(Box::new(rebase_spec(*inner, dir))),
        RealSpec::Scale { q, inner } => RealSpec::Scale {
            q,
            inner: Box::new(rebase_spec(*inner, dir)),
        },
        other => other,
    }
}

/// Rewrites file references in a representation-system declaration: declared
/// machine names become their paths, other names resolve against `dir`.
fn rebase_decl(
    decl: &str,
    dir: &Path,
    machines: &HashMap<String, MachineDecl>,
    line: usize,
) -> Result<String> {
    let parts: Vec<&str> = decl.split(':').collect();
    let mut out: Vec<String> = Vec::with_capacity(parts.len());
    let mut i = 0;
    while i < parts.len() {
        let head = parts[i];
        out.push(head.to_string());
        i += 1;
        let (want, params) = match head {
            "compose" => (Some(MachineKind::Transducer), 1),
            "tabular" => (Some(MachineKind::Table), 1),
            "affine" => (None, 2),
            "above" => (None, 1),
            _ => (None, 0),
        };
        for _ in 0..params {
            let Some(&p) = parts.get(i) else {
                return Err(Error::Parse {
                    line,
                    msg: format!("`{decl}`: `{head}` is missing a parameter"),
                });
            };
            let value = match want {
                Some(kind) => match machines.get(p) {
                    Some(m) if m.kind == kind => m.value.clone(),
                    Some(_) => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("`{p}` is not a {kind:?} declaration"),
                        })
                    }
                    None => absolute(dir, Path::new(p)).display().to_string(),
                },
                None => p.to_string(),
            };
            out.push(value);
            i += 1;
        }
    }
    Ok(out.join(":"))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Subcommand paths whose jobs take `--seed`.
const SEEDED: [&[&str]; 2] = [&["experiment", "closure"], &["experiment", "compose"]];

pub fn parse_config(text: &str, dir: &Path) -> Result<ExperimentConfig> {
    let mut section = Section::Top;
    let mut seed = 1u64;
    let mut out = None;
    let mut specs = HashMap::new();
    let mut machines: HashMap<String, MachineDecl> = HashMap::new();
    let mut job_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            section = match name.trim() {
                "specs" => Section::Specs,
                "machines" => Section::Machines,
                "jobs" => Section::Jobs,
                other => return Err(parse_err(line, format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        if section == Section::Jobs {
            job_lines.push((line, body));
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| parse_err(line, "expected `name = value`"))?;
        match section {
            Section::Top => match key {
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad seed `{value}`")))?
                }
                "out" => out = Some(absolute(dir, Path::new(value))),
                _ => return Err(parse_err(line, format!("unknown setting `{key}`"))),
            },
            Section::Specs | Section::Machines => {
                if !valid_name(key) {
                    return Err(parse_err(line, format!("invalid name `{key}`")));
                }
                if specs.contains_key(key) || machines.contains_key(key) {
                    return Err(parse_err(line, format!("`{key}` is declared twice")));
                }
                if section == Section::Specs {
                    let spec: RealSpec = value
                        .parse()
                        .map_err(|e: Error| parse_err(line, e.to_string()))?;
                    specs.insert(key.to_string(), rebase_spec(spec, dir));
                } else {
                    let decl = parse_machine(value, dir, &machines, line)?;
                    machines.insert(key.to_string(), decl);
                }
            }
            Section::Jobs => unreachable!(),
        }
    }
    let mut cfg = ExperimentConfig {
        dir: dir.to_path_buf(),
        seed,
        out,
        specs,
        machines,
        jobs: Vec::new(),
    };
    for (line, body) in job_lines {
        let job = parse_job(&cfg, line, body)?;
        cfg.jobs.push(job);
    }
    Ok(cfg)
}

fn parse_machine(
    value: &str,
    dir: &Path,
    machines: &HashMap<String, MachineDecl>,
    line: usize,
) -> Result<MachineDecl> {
    let (kind, rest) = value
        .split_once(':')
        .ok_or_else(|| parse_err(line, "expected `<kind>:<file or declaration>`"))?;
    let file = |kind| -> Result<MachineDecl> {
        let path = absolute(dir, Path::new(rest));
        let text = fs::read_to_string(&path)
            .map_err(|e| parse_err(line, format!("{}: {e}", path.display())))?;
        let check = match kind {
            MachineKind::Transducer => text.parse::<Transducer>().map(drop),
            MachineKind::Martingale => text.parse::<normlab::martingale::FsMartingale>().map(drop),
            _ => Ok(()),
        };
        check.map_err(|e| parse_err(line, format!("{}: {e}", path.display())))?;
        Ok(MachineDecl {
            kind,
            value: path.display().to_string(),
            line,
        })
    };
    match kind {
        "transducer" => file(MachineKind::Transducer),
        "martingale" => file(MachineKind::Martingale),
        "table" => file(MachineKind::Table),
        "repsys" => Ok(MachineDecl {
            kind: MachineKind::Repsys,
            value: rebase_decl(rest, dir, machines, line)?,
            line,
        }),
        _ => Err(parse_err(line, format!("unknown machine kind `{kind}`"))),
    }
}

/// Checks a declaration against a concrete base by building it.
struct Probe;

impl Resources for Probe {
    fn transducer(&self, name: &str) -> Result<Transducer> {
        fs::read_to_string(name)?.parse()
    }

    fn table(&self, name: &str, base: u32) -> Result<HashMap<Vec<u8>, num_rational::BigRational>> {
        repsys::parse_override_table(&fs::read_to_string(name)?, base)
    }
}

fn parse_job(cfg: &ExperimentConfig, line: usize, body: &str) -> Result<Job> {
    let mut path: Vec<&str> = Vec::new();
    let mut flags: Vec<(&str, &str)> = Vec::new();
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(kv) => flags.push(kv),
            None if flags.is_empty() => path.push(tok),
            None => return Err(parse_err(line, format!("expected key=value, got `{tok}`"))),
        }
    }
    if path.is_empty() {
        return Err(parse_err(line, "job has no command"));
    }
    if path == ["experiment", "batch"] {
        return Err(parse_err(line, "batch jobs cannot nest"));
    }
    let lookup_machine = |name: &str, want: MachineKind| -> Result<String> {
        match cfg.machines.get(name) {
            Some(m) if m.kind == want => Ok(m.value.clone()),
            Some(m) => Err(parse_err(
                line,
                format!("`{name}` (line {}) is not a {want:?} declaration", m.line),
            )),
            None => Err(parse_err(line, format!("undeclared machine `{name}`"))),
        }
    };
    let base = flags
        .iter()
        .find(|(k, _)| *k == "base")
        .and_then(|(_, v)| v.parse::<u32>().ok());
    let mut argv: Vec<String> = vec!["normlab".into()];
    argv.extend(path.iter().map(|s| s.to_string()));
    for &(key, value) in &flags {
        let resolved = match key {
            "spec" => cfg
                .specs
                .get(value)
                .map(|s| s.to_string())
                .ok_or_else(|| parse_err(line, format!("undeclared spec `{value}`")))?,
            "machine" => {
                let want = if path.first() == Some(&"martingale") {
                    MachineKind::Martingale
                } else {
                    MachineKind::Transducer
                };
                value
                    .split(',')
                    .map(|name| lookup_machine(name, want))
                    .collect::<Result<Vec<_>>>()?
                    .join(",")
            }
            "f" => {
                let decl = lookup_machine(value, MachineKind::Repsys)?;
                if let Some(b) = base {
                    repsys::parse_repsys_with(&decl, b, &Probe)
                        .map_err(|e| parse_err(line, format!("`{value}`: {e}")))?;
                }
                decl
            }
            "budget" if value.parse::<u128>().map_or(true, |b| b == 0) => {
                return Err(parse_err(line, "budget must be a positive integer"));
            }
            "out" | "config" => {
                return Err(parse_err(line, format!("`{key}` is not allowed in a job")));
            }
            _ => value.to_string(),
        };
        let flag = format!("--{}", key.replace('_', "-"));
        match resolved.as_str() {
            "true" => argv.push(flag),
            "false" => {}
            _ => {
                argv.push(flag);
                argv.push(resolved);
            }
        }
    }
    if SEEDED.contains(&path.as_slice()) && !flags.iter().any(|(k, _)| *k == "seed") {
        argv.push("--seed".into());
        argv.push(cfg.seed.to_string());
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| {
        let msg = e.to_string();
        let first = msg
            .lines()
            .next()
            .unwrap_or("invalid job")
            .trim_start_matches("error: ");
        parse_err(line, first.to_string())
    })?;
    Ok(Job {
        line,
        label: body.to_string(),
        cli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        let p = dir.join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn minimal_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "[specs]\nc = champernowne:10\n[jobs]\nblocks spec=c base=10 k=1 n=1000\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(cfg.jobs.len(), 1);
        assert_eq!(cfg.seed, 1);
        assert!(matches!(
            cfg.jobs[0].cli.command,
            crate::Command::Blocks { .. }
        ));
    }

    #[test]
    fn machines_and_seeds() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "m/dbl.txt",
            &Transducer::doubling(3, 1).unwrap().to_string(),
        );
        write(dir.path(), "t.txt", "-  1/2\n");
        let text = "seed = 9\nout = res\n[specs]\nh = rat:1/2\n[machines]\ndbl = transducer:m/dbl.txt\nt = table:t.txt\ng = repsys:compose:dbl:tabular:t:identity\n[jobs]\nrepsys cfnd spec=h base=3 f=g machine=dbl n=4..6\nexperiment compose trials=3\n";
        let cfg = parse_config(text, dir.path()).unwrap();
        assert_eq!(cfg.out.as_deref(), Some(dir.path().join("res").as_path()));
        let g = &cfg.machines["g"].value;
        assert!(
            g.starts_with("compose:/") && g.contains(":tabular:/"),
            "{g}"
        );
        match &cfg.jobs[1].cli.command {
            crate::Command::Experiment(crate::ExperimentCmd::Compose { seed, trials }) => {
                assert_eq!((*seed, *trials), (9, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            (
                "[specs]\na = rat:1/2\n[jobs]\n\nblocks spec=b base=2 k=1 n=10\n",
                5,
            ),
            ("[specs]\na = rat:1/x\n", 2),
            ("[jobs]\ntransducer cnd machine=ghost spec=a n=3\n", 2),
            (
                "[specs]\na = rat:1/2\n[jobs]\nrepsys cfn spec=a base=3 f=nope n=3\n",
                4,
            ),
            (
                "[specs]\na = rat:1/2\n[jobs]\nblocks spec=a base=2 k=1\n",
                4,
            ),
            ("[specs]\na = rat:1/2\na = rat:1/3\n", 3),
            ("[machines]\nd = transducer:missing.txt\n", 2),
            ("[unknown]\n", 1),
            ("colour = red\n", 1),
            (
                "[specs]\na = rat:1/2\n[jobs]\nrepsys cfn spec=a base=3 n=3 budget=0\n",
                4,
            ),
            ("[jobs]\nexperiment batch config=x\n", 2),
        ];
        for (text, line) in cases {
            let e = parse_config(text, dir.path()).unwrap_err();
            assert_eq!(line_of(e), line, "{text}");
        }
    }

    #[test]
    fn malformed_martingale_fraction_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "m.txt",
            "base=2 states=1 start=a\na 0 -> a\na 1 -> a\na : 1/2,1/y\n",
        );
        let e = parse_config("[machines]\nm = martingale:m.txt\n", dir.path()).unwrap_err();
        assert_eq!(line_of(e), 2);
    }
}
