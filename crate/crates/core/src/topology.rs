//! The three communication relations (CanDown, CanUp, CanSend) as
//! disjunctive rule lists over absolute tree addresses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{is_agent_name, Agent, GenAgent, TopologyRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    CanDown,
    CanUp,
    CanSend,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationKind::CanDown => "candown",
            RelationKind::CanUp => "canup",
            RelationKind::CanSend => "cansend",
        })
    }
}

impl FromStr for RelationKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "candown" => Ok(RelationKind::CanDown),
            "canup" => Ok(RelationKind::CanUp),
            "cansend" => Ok(RelationKind::CanSend),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternAtom {
    Literal(Agent),
    Var(String),
}

/// `*.A.$x` style pattern. A leading `*` matches any prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPattern {
    pub prefix_wildcard: bool,
    pub atoms: Vec<PatternAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleBody {
    Const(bool),
    Match { lhs: PathPattern, rhs: PathPattern },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopoRule {
    pub kind: RelationKind,
    pub body: RuleBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Topology {
    pub name: Option<String>,
    pub rules: Vec<TopoRule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown topology preset `{0}` (expected doxastic, choreo or siblings)")]
    UnknownPreset(String),
    #[error("cannot read topology file {path}: {message}")]
    Io { path: String, message: String },
}

impl PathPattern {
    /// Extends `bindings` so that the pattern matches `path`.
    fn matches(
        &self,
        path: &GenAgent,
        star: &mut Option<GenAgent>,
        vars: &mut BTreeMap<String, Agent>,
    ) -> bool {
        let segs = path.segments();
        if segs.len() < self.atoms.len() {
            return false;
        }
        let split = segs.len() - self.atoms.len();
        if self.prefix_wildcard {
            let prefix = GenAgent::new(segs[..split].to_vec());
            match star {
                Some(bound) if *bound != prefix => return false,
                Some(_) => {}
                None => *star = Some(prefix),
            }
        } else if split != 0 {
            return false;
        }
        for (atom, seg) in self.atoms.iter().zip(&segs[split..]) {
            match atom {
                PatternAtom::Literal(a) => {
                    if a != seg {
                        return false;
                    }
                }
                PatternAtom::Var(v) => match vars.get(v) {
                    Some(bound) if bound != seg => return false,
                    Some(_) => {}
                    None => {
                        vars.insert(v.clone(), seg.clone());
                    }
                },
            }
        }
        true
    }
}

impl TopoRule {
    pub fn matches(&self, a: &GenAgent, b: &GenAgent) -> bool {
        match &self.body {
            RuleBody::Const(v) => *v,
            RuleBody::Match { lhs, rhs } => {
                let mut star = None;
                let mut vars = BTreeMap::new();
                lhs.matches(a, &mut star, &mut vars) && rhs.matches(b, &mut star, &mut vars)
            }
        }
    }
}

impl Topology {
    pub fn relation_holds(&self, kind: RelationKind, a: &GenAgent, b: &GenAgent) -> bool {
        self.rules.iter().any(|r| r.kind == kind && r.matches(a, b))
    }

    pub fn with_rule(mut self, rule: TopoRule) -> Self {
        self.rules.push(rule);
        self
    }
}

/// Free-function form of [`Topology::relation_holds`].
pub fn relation_holds(t: &Topology, kind: RelationKind, a: &GenAgent, b: &GenAgent) -> bool {
    t.relation_holds(kind, a, b)
}

pub const PRESETS: &[&str] = &["doxastic", "choreo", "siblings"];

pub fn load_preset(name: &str) -> Result<Topology, TopologyError> {
    let self_rules = "candown: *.$a => *.$a.$a\ncanup: *.$a => *.$a.$a\n";
    let send = match name {
        "doxastic" => "cansend: false\n",
        "choreo" => "cansend: true\n",
        "siblings" => "cansend: *.$a => *.$b\n",
        other => return Err(TopologyError::UnknownPreset(other.to_string())),
    };
    let mut t = parse_topology(&format!("{self_rules}{send}")).expect("preset rules parse");
    t.name = Some(name.to_string());
    Ok(t)
}

/// A preset name, or else a rule file (relative paths resolve against `base`).
pub fn load_topology(spec: &str, base: Option<&Path>) -> Result<Topology, TopologyError> {
    if PRESETS.contains(&spec) {
        return load_preset(spec);
    }
    let path = match base {
        Some(dir) if Path::new(spec).is_relative() => dir.join(spec),
        _ => PathBuf::from(spec),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| TopologyError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut t = parse_topology(&text)?;
    t.name = Some(spec.to_string());
    Ok(t)
}

/// The topology a program names in its header, `choreo` if none.
pub fn resolve_topology(
    r: Option<&TopologyRef>,
    base: Option<&Path>,
) -> Result<Topology, TopologyError> {
    match r {
        None => load_preset("choreo"),
        Some(TopologyRef::Preset(name)) => load_topology(name, base),
        Some(TopologyRef::File(path)) => load_topology(path, base),
    }
}

fn parse_pattern(text: &str, line: usize) -> Result<PathPattern, TopologyError> {
    let err = |message: String| TopologyError::Syntax { line, message };
    let mut text = text.trim();
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        text = inner.trim();
    }
    let mut pattern = PathPattern {
        prefix_wildcard: false,
        atoms: Vec::new(),
    };
    if text.is_empty() {
        return Ok(pattern);
    }
    for (i, part) in text.split('.').map(str::trim).enumerate() {
        if part == "*" {
            if i != 0 {
                return Err(err("`*` may only appear at the head of a pattern".into()));
            }
            pattern.prefix_wildcard = true;
        } else if let Some(v) = part.strip_prefix('$') {
            if v.is_empty() || !v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("invalid agent variable `{part}`")));
            }
            pattern.atoms.push(PatternAtom::Var(v.to_string()));
        } else if is_agent_name(part) {
            pattern.atoms.push(PatternAtom::Literal(Agent::new(part)));
        } else {
            return Err(err(format!("invalid pattern atom `{part}`")));
        }
    }
    Ok(pattern)
}

/// Parses the line-oriented rule format: `kind: lhs => rhs` or `kind: true|false`.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| TopologyError::Syntax { line, message };
        let (kind, rest) = content
            .split_once(':')
            .ok_or_else(|| err("expected `kind: rule`".into()))?;
        let kind: RelationKind = kind
            .trim()
            .parse()
            .map_err(|_| err(format!("unknown relation `{}`", kind.trim())))?;
        let rest = rest.trim();
        let body = match rest {
            "true" => RuleBody::Const(true),
            "false" => RuleBody::Const(false),
            _ => {
                let (lhs, rhs) = rest.split_once("=>").ok_or_else(|| {
                    err("expected `pattern => pattern`, `true` or `false`".into())
                })?;
                RuleBody::Match {
                    lhs: parse_pattern(lhs, line)?,
                    rhs: parse_pattern(rhs, line)?,
                }
            }
        };
        rules.push(TopoRule { kind, body });
    }
    Ok(Topology { name: None, rules })
}

/// Whether data at `src` can influence `dst` through any chain of permitted
/// communications among the addresses of `universe`.
pub fn flow_reachable(
    t: &Topology,
    src: &GenAgent,
    dst: &GenAgent,
    universe: &BTreeSet<GenAgent>,
) -> bool {
    if src == dst {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(src.clone());
    queue.push_back(src.clone());
    while let Some(here) = queue.pop_front() {
        for next in universe {
            if seen.contains(next) || !has_edge(t, &here, next) {
                continue;
            }
            if next == dst {
                return true;
            }
            seen.insert(next.clone());
            queue.push_back(next.clone());
        }
    }
    false
}

fn has_edge(t: &Topology, from: &GenAgent, to: &GenAgent) -> bool {
    if t.relation_holds(RelationKind::CanSend, from, to) {
        return true;
    }
    // data moving down the tree: from p++g to p
    if to.is_prefix_of(from) && t.relation_holds(RelationKind::CanDown, to, from) {
        return true;
    }
    from.is_prefix_of(to) && t.relation_holds(RelationKind::CanUp, from, to)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(names: &[&str]) -> GenAgent {
        GenAgent::of(names)
    }

    fn all_paths(agents: &[&str], max_len: usize) -> Vec<GenAgent> {
        let mut out = vec![GenAgent::root()];
        let mut frontier = vec![GenAgent::root()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for p in &frontier {
                for a in agents {
                    next.push(p.child(Agent::new(*a)));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Direct reading of "g1 = g.A and g2 = g.A.A", independent of the matcher.
    fn self_pair(a: &GenAgent, b: &GenAgent) -> bool {
        match a.last() {
            Some(last) => *b == a.child(last.clone()),
            None => false,
        }
    }

    #[test]
    fn doxastic_candown_examples() {
        let t = load_preset("doxastic").unwrap();
        assert!(t.relation_holds(RelationKind::CanDown, &g(&["A"]), &g(&["A", "A"])));
        assert!(!t.relation_holds(RelationKind::CanDown, &g(&[]), &g(&["A"])));
        assert!(t.relation_holds(RelationKind::CanUp, &g(&["B", "A"]), &g(&["B", "A", "A"])));
        assert!(!t.relation_holds(RelationKind::CanSend, &g(&["A"]), &g(&["B"])));
    }

    #[test]
    fn doxastic_matches_brute_force_on_short_paths() {
        let t = load_preset("doxastic").unwrap();
        let paths = all_paths(&["A", "B", "C"], 3);
        for a in &paths {
            for b in &paths {
                let expect = self_pair(a, b);
                assert_eq!(
                    t.relation_holds(RelationKind::CanDown, a, b),
                    expect,
                    "{a} {b}"
                );
                assert_eq!(
                    t.relation_holds(RelationKind::CanUp, a, b),
                    expect,
                    "{a} {b}"
                );
            }
        }
    }

    #[test]
    fn choreo_sends_anywhere() {
        let t = load_preset("choreo").unwrap();
        let paths = all_paths(&["A", "B"], 2);
        for a in &paths {
            for b in &paths {
                assert!(t.relation_holds(RelationKind::CanSend, a, b));
            }
        }
    }

    #[test]
    fn siblings_only_between_siblings() {
        let t = load_preset("siblings").unwrap();
        assert!(t.relation_holds(RelationKind::CanSend, &g(&["A"]), &g(&["B"])));
        assert!(t.relation_holds(RelationKind::CanSend, &g(&["C", "A"]), &g(&["C", "B"])));
        assert!(!t.relation_holds(RelationKind::CanSend, &g(&["C", "A"]), &g(&["B"])));
        assert!(!t.relation_holds(RelationKind::CanSend, &g(&[]), &g(&[])));
    }

    #[test]
    fn literal_rules() {
        let t = parse_topology("cansend: A => B").unwrap();
        assert_eq!(t.rules.len(), 1);
        assert!(t.relation_holds(RelationKind::CanSend, &g(&["A"]), &g(&["B"])));
        assert!(!t.relation_holds(RelationKind::CanSend, &g(&["B"]), &g(&["A"])));
        assert!(!t.relation_holds(RelationKind::CanSend, &g(&["C", "A"]), &g(&["C", "B"])));
    }

    #[test]
    fn parsed_rule_equals_preset_rule() {
        let t = parse_topology("candown: *.$a => *.$a.$a").unwrap();
        let preset = load_preset("doxastic").unwrap();
        assert_eq!(t.rules[0], preset.rules[0]);
        let t = parse_topology("# comment\ncansend: true   # everyone\n").unwrap();
        assert_eq!(
            t.rules,
            vec![TopoRule {
                kind: RelationKind::CanSend,
                body: RuleBody::Const(true)
            }]
        );
    }

    #[test]
    fn syntax_errors_have_line_numbers() {
        let err = parse_topology("cansend: true\ncandown: A.* => A").unwrap_err();
        assert!(
            matches!(err, TopologyError::Syntax { line: 2, .. }),
            "{err}"
        );
        assert!(parse_topology("canfly: true").is_err());
        assert!(parse_topology("cansend A => B").is_err());
        assert!(matches!(
            load_preset("mesh"),
            Err(TopologyError::UnknownPreset(_))
        ));
    }

    #[test]
    fn flow_examples() {
        let universe: BTreeSet<GenAgent> = [g(&[]), g(&["A"]), g(&["B"])].into_iter().collect();
        let choreo = load_preset("choreo").unwrap();
        let dox = load_preset("doxastic").unwrap();
        assert!(flow_reachable(&choreo, &g(&["A"]), &g(&["B"]), &universe));
        assert!(!flow_reachable(&dox, &g(&["A"]), &g(&["B"]), &universe));
        assert!(flow_reachable(&dox, &g(&["A"]), &g(&["A"]), &universe));
    }

    #[test]
    fn flow_follows_up_and_down_edges() {
        let dox = load_preset("doxastic").unwrap();
        let universe: BTreeSet<GenAgent> = [g(&[]), g(&["A"]), g(&["A", "A"]), g(&["A", "A", "A"])]
            .into_iter()
            .collect();
        assert!(flow_reachable(
            &dox,
            &g(&["A"]),
            &g(&["A", "A", "A"]),
            &universe
        ));
        assert!(flow_reachable(
            &dox,
            &g(&["A", "A", "A"]),
            &g(&["A"]),
            &universe
        ));
        assert!(!flow_reachable(&dox, &g(&["A"]), &g(&[]), &universe));
    }
}
