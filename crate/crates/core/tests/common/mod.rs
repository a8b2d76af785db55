#![allow(dead_code)]

use std::path::{Path, PathBuf};

use corps::gen::ProgramGen;
use corps::syntax::TopologyRef;
use corps::typecheck::{check_program, CheckedProgram};
use corps::{load_preset, parse_program, resolve_topology, Program, Rule, Topology};

pub struct SuiteCase {
    pub preset: &'static str,
    pub topology: Topology,
    pub program: Program,
    pub checked: CheckedProgram,
}

/// `per_preset` generated programs under each of doxastic and choreo.
pub fn suite(per_preset: usize, seed: u64) -> Vec<SuiteCase> {
    let mut out = Vec::new();
    for (k, preset) in ["doxastic", "choreo"].into_iter().enumerate() {
        let topology = load_preset(preset).unwrap();
        let mut g = ProgramGen::new(&topology, seed.wrapping_add(k as u64));
        for _ in 0..per_preset {
            let program = g.program(Some(TopologyRef::Preset(preset.to_string())));
            let checked = check_program(&program, &topology)
                .unwrap_or_else(|e| panic!("generated program rejected: {}\n{program}", e[0]));
            out.push(SuiteCase {
                preset,
                topology: topology.clone(),
                program,
                checked,
            });
        }
    }
    out
}

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expect {
    Ok(String),
    Reject(Rule),
}

pub struct Golden {
    pub name: String,
    pub expect: Expect,
    pub program: Program,
    pub topology: Topology,
}

fn rule_named(s: &str) -> Rule {
    match s {
        "Axiom" => Rule::Axiom,
        "BelievesI" => Rule::BelievesI,
        "BelievesE" => Rule::BelievesE,
        "Send" => Rule::Send,
        "Up" => Rule::Up,
        "Down" => Rule::Down,
        "Conversion" => Rule::Conversion,
        other => panic!("unknown rule {other}"),
    }
}

/// Every `tests/golden/*.corps`, with the expectation from its first line.
pub fn golden() -> Vec<Golden> {
    let dir = tests_dir().join("golden");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "corps"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path).unwrap();
            let header = text.lines().next().unwrap();
            let spec = header.strip_prefix("// expect: ").expect("expect header");
            let expect = match spec.split_once(' ') {
                Some(("ok", ty)) => Expect::Ok(ty.to_string()),
                Some(("reject", rule)) => Expect::Reject(rule_named(rule)),
                _ => panic!("bad header in {}", path.display()),
            };
            let program = parse_program(&text).unwrap();
            let topology = resolve_topology(program.topology.as_ref(), Some(&dir)).unwrap();
            Golden {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                expect,
                program,
                topology,
            }
        })
        .collect()
}
