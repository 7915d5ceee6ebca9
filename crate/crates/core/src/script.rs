//! A small line-oriented query language over spaces and maps.
//!
//! ```text
//! # comments run to the end of the line
//! load X "ex1.json"
//! load T "overlay.theta.json"
//! let J = theta_join(X, Y, T)
//! let S = select(J, {C×A, C×a})
//! let Q = quotient(X, P)              # P a loaded partition; `collapse` as a third argument merges cycles
//! let G = quotient(X, by=region)      # one class per value of an attribute
//! let M = quotient(X, {a, e})         # one class, labelled M
//! check continuous J.left
//! check homeomorphic X Y
//! dim J
//! closure J C×a
//! emit J "joined.json"
//! ```
//!
//! Every name is bound once. Scripts are checked for unbound and rebound
//! names before anything runs. `let` results are spaces named after their
//! binding, and bring their structure maps into scope as `NAME.left`,
//! `NAME.right`, `NAME.inclusion` or `NAME.projection`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::algebra::{self, CyclePolicy, Partition, ThetaRelation};
use crate::error::{Error, Result};
use crate::io::{self, Document, PartitionFile};
use crate::lod::Dataset;
use crate::maps::{self, SpaceMap, DEFAULT_HOMEOMORPHISM_BOUND};
use crate::space::Space;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Name(String),
    Set(Vec<String>),
    KeyValue(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Load { name: String, path: String },
    Let { name: String, op: String, args: Vec<Arg> },
    CheckContinuous(String),
    CheckHomeomorphic(String, String),
    Dim { space: String, element: Option<String> },
    Closure { space: String, ids: Vec<String> },
    Star { space: String, ids: Vec<String> },
    Emit { name: String, path: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub line: usize,
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    column: usize,
}

const PUNCT: &[char] = &['(', ')', '{', '}', ',', '='];

fn tokenize(line_no: usize, line: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if PUNCT.contains(&c) {
            tokens.push(Token { tok: Tok::Punct(c), column });
            i += 1;
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(Error::parse(line_no, column, "unterminated string"));
            }
            tokens.push(Token {
                tok: Tok::Str(chars[start..j].iter().collect()),
                column,
            });
            i = j + 1;
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !PUNCT.contains(&chars[i])
                && chars[i] != '"'
                && chars[i] != '#'
            {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Word(chars[start..i].iter().collect()),
                column,
            });
        }
    }
    Ok(tokens)
}

struct Cursor<'a> {
    line: usize,
    tokens: &'a [Token],
    pos: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_column, |t| t.column)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.line, self.column(), message)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos == self.tokens.len()
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn binding_name(&mut self) -> Result<String> {
        let column = self.column();
        let name = self.word("a name")?;
        let mut chars = name.chars();
        let ok = chars
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(Error::parse(self.line, column, format!("invalid name {name}")));
        }
        Ok(name)
    }

    fn string(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a quoted path")),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn finish(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    fn set(&mut self) -> Result<Vec<String>> {
        self.expect('{')?;
        let mut ids = Vec::new();
        if self.eat('}') {
            return Ok(ids);
        }
        loop {
            ids.push(self.word("an element id")?);
            if self.eat('}') {
                return Ok(ids);
            }
            self.expect(',')?;
        }
    }

    fn arg(&mut self) -> Result<Arg> {
        if self.peek() == Some(&Tok::Punct('{')) {
            return self.set().map(Arg::Set);
        }
        let word = self.word("an argument")?;
        if self.eat('=') {
            let value = self.word("a value")?;
            return Ok(Arg::KeyValue(word, value));
        }
        Ok(Arg::Name(word))
    }

    // `a, b, c` or `{a, b, c}`
    fn id_list(&mut self) -> Result<Vec<String>> {
        if self.peek() == Some(&Tok::Punct('{')) {
            return self.set();
        }
        let mut ids = vec![self.word("an element id")?];
        while self.eat(',') {
            ids.push(self.word("an element id")?);
        }
        Ok(ids)
    }
}

fn parse_line(line_no: usize, line: &str) -> Result<Option<Command>> {
    let tokens = tokenize(line_no, line)?;
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut c = Cursor {
        line: line_no,
        tokens: &tokens,
        pos: 0,
        end_column: line.chars().count() + 1,
    };
    let keyword = c.word("a command")?;
    let command = match keyword.as_str() {
        "load" => Command::Load {
            name: c.binding_name()?,
            path: c.string()?,
        },
        "let" => {
            let name = c.binding_name()?;
            c.expect('=')?;
            let op = c.word("an operation")?;
            c.expect('(')?;
            let mut args = Vec::new();
            if !c.eat(')') {
                loop {
                    args.push(c.arg()?);
                    if c.eat(')') {
                        break;
                    }
                    c.expect(',')?;
                }
            }
            Command::Let { name, op, args }
        }
        "check" => {
            let what = c.word("continuous or homeomorphic")?;
            match what.as_str() {
                "continuous" => Command::CheckContinuous(c.word("a map name")?),
                "homeomorphic" => {
                    Command::CheckHomeomorphic(c.word("a space name")?, c.word("a space name")?)
                }
                other => {
                    return Err(Error::parse(
                        line_no,
                        tokens[1].column,
                        format!("unknown check {other}"),
                    ))
                }
            }
        }
        "dim" => {
            let space = c.word("a space name")?;
            let element = if c.at_end() {
                None
            } else {
                Some(c.word("an element id")?)
            };
            Command::Dim { space, element }
        }
        "closure" => Command::Closure {
            space: c.word("a space name")?,
            ids: c.id_list()?,
        },
        "star" => Command::Star {
            space: c.word("a space name")?,
            ids: c.id_list()?,
        },
        "emit" => Command::Emit {
            name: c.word("a name")?,
            path: c.string()?,
        },
        other => {
            return Err(Error::parse(
                line_no,
                tokens[0].column,
                format!("unknown command {other}"),
            ))
        }
    };
    c.finish()?;
    Ok(Some(command))
}

/// Parses a script into statements. Syntax only; names are checked by
/// [`check_names`].
pub fn parse_script(text: &str) -> Result<Vec<Statement>> {
    let mut statements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(command) = parse_line(i + 1, line)? {
            statements.push(Statement {
                line: i + 1,
                command,
            });
        }
    }
    Ok(statements)
}

fn op_arity(op: &str) -> Option<(usize, usize)> {
    Some(match op {
        "select" => (2, 2),
        "quotient" => (2, 3),
        "union" | "intersect" | "product" | "fibre_product" | "compose" => (2, 2),
        "theta_join" => (3, 3),
        "reduce" => (1, 1),
        _ => return None,
    })
}

fn derived_names(op: &str) -> &'static [&'static str] {
    match op {
        "select" => &["inclusion"],
        "quotient" => &["projection"],
        "union" | "intersect" | "product" | "theta_join" | "fibre_product" => &["left", "right"],
        _ => &[],
    }
}

fn wrap(line: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Script {
        line,
        source: Box::new(e),
    }
}

/// Checks that every referenced name is bound earlier and that no name is
/// bound twice. `predefined` lists names available before the first line.
pub fn check_names<'a>(
    statements: &[Statement],
    predefined: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    let mut bound: BTreeSet<String> = predefined.into_iter().map(str::to_string).collect();
    for st in statements {
        let w = wrap(st.line);
        let uses = |name: &str| -> Result<()> {
            if bound.contains(name) {
                Ok(())
            } else {
                Err(w(Error::Unbound(name.to_string())))
            }
        };
        let mut new_names = Vec::new();
        match &st.command {
            Command::Load { name, .. } => new_names.push(name.clone()),
            Command::Let { name, op, args } => {
                let (lo, hi) = op_arity(op).ok_or_else(|| {
                    w(Error::parse(st.line, 1, format!("unknown operation {op}")))
                })?;
                if args.len() < lo || args.len() > hi {
                    return Err(w(Error::parse(
                        st.line,
                        1,
                        format!("{op} takes {lo}..={hi} arguments, got {}", args.len()),
                    )));
                }
                for (k, arg) in args.iter().enumerate() {
                    match arg {
                        Arg::Name(n) => {
                            let is_policy = op == "quotient"
                                && k == 2
                                && (n == "collapse" || n == "error");
                            if !is_policy {
                                uses(n)?;
                            }
                        }
                        Arg::Set(_) | Arg::KeyValue(..) if k == 0 => {
                            return Err(w(Error::parse(
                                st.line,
                                1,
                                format!("first argument of {op} must be a name"),
                            )))
                        }
                        _ => {}
                    }
                }
                new_names.push(name.clone());
                for suffix in derived_names(op) {
                    new_names.push(format!("{name}.{suffix}"));
                }
            }
            Command::CheckContinuous(m) => uses(m)?,
            Command::CheckHomeomorphic(a, b) => {
                uses(a)?;
                uses(b)?;
            }
            Command::Dim { space, .. } | Command::Closure { space, .. } | Command::Star { space, .. } => {
                uses(space)?
            }
            Command::Emit { name, .. } => uses(name)?,
        }
        for name in new_names {
            if !bound.insert(name.clone()) {
                return Err(w(Error::Rebound(name)));
            }
        }
    }
    Ok(())
}

/// A value bound to a script name.
#[derive(Clone, Debug)]
pub enum Value {
    Space(Arc<Space>),
    Map(SpaceMap),
    Theta(ThetaRelation),
    Partition(PartitionFile),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Space(_) => "space",
            Value::Map(_) => "map",
            Value::Theta(_) => "theta relation",
            Value::Partition(_) => "partition",
        }
    }
}

/// Names visible to a script: its own bindings over a backing dataset.
#[derive(Clone, Debug, Default)]
pub struct Environment {
    pub dataset: Dataset,
    pub bindings: BTreeMap<String, Value>,
}

impl Environment {
    pub fn new(dataset: Dataset) -> Self {
        Environment {
            dataset,
            bindings: BTreeMap::new(),
        }
    }

    fn bind(&mut self, name: impl Into<String>, value: Value) -> Result<()> {
        let name = name.into();
        if self.bindings.contains_key(&name) {
            return Err(Error::Rebound(name));
        }
        self.bindings.insert(name, value);
        Ok(())
    }

    /// A space by binding name, then by dataset name, then by the name the
    /// space itself carries.
    pub fn space(&self, name: &str) -> Result<Arc<Space>> {
        match self.bindings.get(name) {
            Some(Value::Space(s)) => return Ok(s.clone()),
            Some(_) => {
                return Err(Error::WrongKind {
                    name: name.to_string(),
                    expected: "space",
                })
            }
            None => {}
        }
        if let Some(s) = self.dataset.spaces.get(name) {
            return Ok(s.clone());
        }
        self.bindings
            .values()
            .find_map(|v| match v {
                Value::Space(s) if s.name() == name => Some(s.clone()),
                _ => None,
            })
            .ok_or_else(|| Error::Unbound(name.to_string()))
    }

    pub fn map(&self, name: &str) -> Result<SpaceMap> {
        match self.bindings.get(name) {
            Some(Value::Map(m)) => Ok(m.clone()),
            Some(_) => Err(Error::WrongKind {
                name: name.to_string(),
                expected: "map",
            }),
            None if self.dataset.maps.contains_key(name) => self.dataset.resolve_map(name),
            None => Err(Error::Unbound(name.to_string())),
        }
    }

    fn theta(&self, name: &str) -> Result<&ThetaRelation> {
        match self.bindings.get(name) {
            Some(Value::Theta(t)) => Ok(t),
            _ => Err(Error::WrongKind {
                name: name.to_string(),
                expected: "theta relation",
            }),
        }
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        self.dataset
            .spaces
            .keys()
            .chain(self.dataset.maps.keys())
            .chain(self.bindings.keys())
            .map(String::as_str)
    }
}

/// The result of running a script.
#[derive(Clone, Debug)]
pub struct ScriptRun {
    pub env: Environment,
    /// One line per `let`, `check`, `dim`, `closure`, `star` and `emit`.
    pub output: Vec<String>,
    /// Number of `check` statements that failed.
    pub failures: usize,
}

impl ScriptRun {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for ScriptRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.output {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn name_arg(args: &[Arg], k: usize) -> Result<&str> {
    match &args[k] {
        Arg::Name(n) => Ok(n),
        other => Err(Error::WrongKind {
            name: format!("{other:?}"),
            expected: "name",
        }),
    }
}

fn format_ids<'a>(ids: impl IntoIterator<Item = &'a crate::space::ElementId>) -> String {
    let ids: Vec<&str> = ids.into_iter().map(|i| i.as_str()).collect();
    format!("{{{}}}", ids.join(", "))
}

fn evaluate(env: &mut Environment, name: &str, op: &str, args: &[Arg]) -> Result<String> {
    let space_arg = |env: &Environment, k: usize| env.space(name_arg(args, k)?);
    let map_arg = |env: &Environment, k: usize| env.map(name_arg(args, k)?);
    let mut derived: Vec<(&str, SpaceMap)> = Vec::new();
    let space = match op {
        "select" => {
            let source = space_arg(env, 0)?;
            let sub = match &args[1] {
                Arg::Set(ids) => algebra::select_subspace(&source, ids)?,
                Arg::KeyValue(key, value) => algebra::select_where(&source, |_, attrs| {
                    attrs.get(key).is_some_and(|v| v == value)
                }),
                Arg::Name(n) => algebra::select_subspace(&source, [n])?,
            }
            .renamed(name);
            derived.push(("inclusion", sub.inclusion));
            sub.space
        }
        "quotient" => {
            let source = space_arg(env, 0)?;
            let partition = match &args[1] {
                Arg::Name(p) => match env.bindings.get(p.as_str()) {
                    Some(Value::Partition(file)) => file.partition(&source)?,
                    _ => {
                        return Err(Error::WrongKind {
                            name: p.clone(),
                            expected: "partition",
                        })
                    }
                },
                Arg::KeyValue(by, key) if by == "by" => Partition::by_attribute(&source, key)?,
                Arg::KeyValue(k, _) => {
                    return Err(Error::WrongKind {
                        name: k.clone(),
                        expected: "partition (use by=<attribute>)",
                    })
                }
                Arg::Set(members) => Partition::from_classes(&source, [(name, members)])?,
            };
            let policy = match args.get(2) {
                Some(Arg::Name(p)) if p == "collapse" => CyclePolicy::Collapse,
                _ => CyclePolicy::Error,
            };
            let q = algebra::quotient(&source, &partition, policy)?.renamed(name);
            derived.push(("projection", q.projection));
            q.space
        }
        "union" => {
            let c = algebra::paste_union(&space_arg(env, 0)?, &space_arg(env, 1)?)?.renamed(name);
            derived.push(("left", c.left));
            derived.push(("right", c.right));
            c.space
        }
        "intersect" => {
            let s = algebra::pullback_intersection(&space_arg(env, 0)?, &space_arg(env, 1)?)
                .renamed(name);
            derived.push(("left", s.left));
            derived.push(("right", s.right));
            s.space
        }
        "product" => {
            let s = algebra::product(&space_arg(env, 0)?, &space_arg(env, 1)?)?.renamed(name);
            derived.push(("left", s.left));
            derived.push(("right", s.right));
            s.space
        }
        "theta_join" => {
            let theta = env.theta(name_arg(args, 2)?)?;
            let s = algebra::theta_join(&space_arg(env, 0)?, &space_arg(env, 1)?, theta)?
                .renamed(name);
            derived.push(("left", s.left));
            derived.push(("right", s.right));
            s.space
        }
        "fibre_product" => {
            let s = algebra::fibre_product(&map_arg(env, 0)?, &map_arg(env, 1)?)?.renamed(name);
            derived.push(("left", s.left));
            derived.push(("right", s.right));
            s.space
        }
        "reduce" => Arc::new(space_arg(env, 0)?.transitive_reduce().renamed(name)),
        "compose" => {
            let m = SpaceMap::compose(&map_arg(env, 0)?, &map_arg(env, 1)?)?;
            let line = format!(
                "{name}: map {} -> {}",
                m.domain().name(),
                m.codomain().name()
            );
            env.bind(name, Value::Map(m))?;
            return Ok(line);
        }
        other => unreachable!("operation {other} passed the name check"),
    };
    let line = format!(
        "{name}: {} elements, {} incidences, dimension {}",
        space.len(),
        space.incidence().len(),
        space.space_dimension()
    );
    env.bind(name, Value::Space(space))?;
    for (suffix, map) in derived {
        env.bind(format!("{name}.{suffix}"), Value::Map(map))?;
    }
    Ok(line)
}

fn execute(env: &mut Environment, base: &Path, command: &Command, failures: &mut usize) -> Result<String> {
    match command {
        Command::Load { name, path } => {
            let value = match io::read_document(base.join(path))? {
                Document::Space(s) => Value::Space(Arc::new(*s)),
                Document::Map(file) => {
                    let domain = env.space(&file.table.domain)?;
                    let codomain = env.space(&file.table.codomain)?;
                    let pairs = file.table.pairs.iter().map(|(a, b)| (a, b));
                    Value::Map(SpaceMap::new(domain, codomain, pairs)?)
                }
                Document::Theta(t) => Value::Theta(t.relation),
                Document::Partition(p) => Value::Partition(p),
            };
            let line = format!("{name}: loaded {} from {path}", value.kind());
            env.bind(name.clone(), value)?;
            Ok(line)
        }
        Command::Let { name, op, args } => evaluate(env, name, op, args),
        Command::CheckContinuous(m) => {
            let map = env.map(m)?;
            Ok(match map.continuity_witness() {
                None => format!("PASS continuous {m}"),
                Some(w) => {
                    *failures += 1;
                    format!("FAIL continuous {m}: {w}")
                }
            })
        }
        Command::CheckHomeomorphic(a, b) => {
            let x = env.space(a)?;
            let y = env.space(b)?;
            let bound = DEFAULT_HOMEOMORPHISM_BOUND.max(x.len());
            Ok(match maps::find_homeomorphism(&x, &y, bound)? {
                Some(h) => {
                    let pairs: Vec<String> = h.pairs().map(|(p, q)| format!("{p}->{q}")).collect();
                    format!("PASS homeomorphic {a} {b}: {}", pairs.join(" "))
                }
                None => {
                    *failures += 1;
                    format!("FAIL homeomorphic {a} {b}")
                }
            })
        }
        Command::Dim { space, element } => {
            let s = env.space(space)?;
            Ok(match element {
                None => format!("dim {space} = {}", s.space_dimension()),
                Some(e) => format!("dim {space} {e} = {}", s.dimension(e)?),
            })
        }
        Command::Closure { space, ids } => {
            let s = env.space(space)?;
            let set = s.closure(ids)?;
            Ok(format!("closure {space} {{{}}} = {}", ids.join(", "), format_ids(&set)))
        }
        Command::Star { space, ids } => {
            let s = env.space(space)?;
            let set = s.star(ids)?;
            Ok(format!("star {space} {{{}}} = {}", ids.join(", "), format_ids(&set)))
        }
        Command::Emit { name, path } => {
            let text = match env.bindings.get(name.as_str()) {
                Some(Value::Space(s)) => io::serialize_space(s),
                Some(Value::Map(m)) => io::serialize_map(m),
                Some(_) | None => match env.space(name) {
                    Ok(s) => io::serialize_space(&s),
                    Err(_) => io::serialize_map(&env.map(name)?),
                },
            };
            std::fs::write(base.join(path), text)?;
            Ok(format!("{name}: written to {path}"))
        }
    }
}

/// Parses, name-checks and runs a script. Relative paths resolve against
/// `base_dir`. Errors carry the line of the failing statement; failed
/// `check`s are counted rather than raised.
pub fn run_script(text: &str, dataset: Dataset, base_dir: impl Into<PathBuf>) -> Result<ScriptRun> {
    let base = base_dir.into();
    let statements = parse_script(text)?;
    let mut env = Environment::new(dataset);
    check_names(&statements, env.names().collect::<Vec<_>>())?;
    let mut output = Vec::new();
    let mut failures = 0;
    for st in &statements {
        let line = execute(&mut env, &base, &st.command, &mut failures).map_err(wrap(st.line))?;
        output.push(line);
    }
    Ok(ScriptRun {
        env,
        output,
        failures,
    })
}
