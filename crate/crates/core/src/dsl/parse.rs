use super::{builtin_graph, Constraint, ConstraintFile, DslError, Expr, Position};
use crate::density::{GraphSpec, PairState};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64, String),
    Sym(char),
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Position,
}

fn syntax(pos: Position, message: impl Into<String>) -> DslError {
    DslError::Syntax { pos, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        let start = i;
        if c == '\n' {
            out.push(Token { tok: Tok::Newline, pos });
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                i += 1;
            }
            // A trailing '-' belongs to the next token.
            while chars[i - 1] == '-' {
                i -= 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(word), pos });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v: f64 = lit.parse().map_err(|_| syntax(pos, format!("malformed number {lit:?}")))?;
            out.push(Token { tok: Tok::Number(v, lit), pos });
        } else if "=+-*/(){};:".contains(c) {
            out.push(Token { tok: Tok::Sym(c), pos });
            i += 1;
        } else {
            return Err(syntax(pos, format!("unexpected character {c:?}")));
        }
        col += i - start;
    }
    out.push(Token { tok: Tok::Eof, pos: Position { line, column: col } });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    /// Depth of open parentheses; newlines inside them are insignificant.
    nesting: usize,
}

impl Parser {
    fn peek(&mut self) -> &Token {
        if self.nesting > 0 {
            while self.toks[self.at].tok == Tok::Newline {
                self.at += 1;
            }
        }
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn is_sym(&mut self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<Token, DslError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            Err(syntax(t.pos, format!("expected '{c}', found {}", describe(&t.tok))))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Position), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(syntax(t.pos, format!("expected {what}, found {}", describe(&other)))),
        }
    }

    fn expect_index(&mut self) -> Result<(usize, Position), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v, ref lit) if lit.chars().all(|c| c.is_ascii_digit()) => Ok((v as usize, t.pos)),
            other => Err(syntax(t.pos, format!("expected a vertex index, found {}", describe(&other)))),
        }
    }

    fn at_separator(&mut self) -> bool {
        matches!(self.peek().tok, Tok::Newline | Tok::Sym(';') | Tok::Eof)
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().tok, Tok::Newline | Tok::Sym(';')) {
            self.next();
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("{s:?}"),
        Tok::Number(_, lit) => format!("number {lit}"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn state_keyword(word: &str) -> Option<PairState> {
    match word {
        "edge" => Some(PairState::Edge),
        "nonedge" => Some(PairState::NonEdge),
        "free" => Some(PairState::Free),
        _ => None,
    }
}

/// Statements collected inside one `graph { ... }` block.
#[derive(Default)]
struct GraphDraft {
    vertices: Option<(usize, Position)>,
    default: Option<PairState>,
    roots: Vec<(usize, Position)>,
    labels: Option<Vec<String>>,
    pairs: Vec<(PairState, usize, usize, Position)>,
}

impl Parser {
    fn graph_def(&mut self, file: &mut ConstraintFile) -> Result<(), DslError> {
        self.next(); // "graph"
        let (name, name_pos) = self.expect_ident("a graph name")?;
        if file.graphs.iter().any(|(n, _)| *n == name) {
            return Err(DslError::DuplicateGraph { pos: name_pos, name });
        }
        self.expect_sym('{')?;
        let mut draft = GraphDraft::default();
        loop {
            self.skip_separators();
            if self.is_sym('}') {
                break;
            }
            let (word, pos) = self.expect_ident("a graph statement")?;
            match word.as_str() {
                "vertices" => {
                    let (n, p) = self.expect_index()?;
                    if draft.vertices.is_some() {
                        return Err(syntax(pos, "vertex count given twice"));
                    }
                    draft.vertices = Some((n, p));
                }
                "default" => {
                    let (w, p) = self.expect_ident("edge, nonedge or free")?;
                    draft.default = Some(state_keyword(&w).ok_or_else(|| syntax(p, format!("unknown pair state {w:?}")))?);
                }
                "roots" => {
                    while matches!(self.peek().tok, Tok::Number(..)) {
                        draft.roots.push(self.expect_index()?);
                    }
                    if draft.roots.is_empty() {
                        return Err(syntax(self.peek().pos, "expected root indices"));
                    }
                }
                "labels" => {
                    let mut labels = Vec::new();
                    while matches!(self.peek().tok, Tok::Ident(_)) {
                        labels.push(self.expect_ident("a part label")?.0);
                    }
                    draft.labels = Some(labels);
                }
                w => {
                    let state = state_keyword(w).ok_or_else(|| syntax(pos, format!("unknown graph statement {w:?}")))?;
                    let mut any = false;
                    while matches!(self.peek().tok, Tok::Number(..)) {
                        let (i, p) = self.expect_index()?;
                        self.expect_sym('-')?;
                        let (j, _) = self.expect_index()?;
                        draft.pairs.push((state, i, j, p));
                        any = true;
                    }
                    if !any {
                        return Err(syntax(self.peek().pos, "expected vertex pairs such as 0-1"));
                    }
                }
            }
        }
        self.expect_sym('}')?;
        let (n, npos) = draft.vertices.ok_or_else(|| syntax(name_pos, format!("graph {name:?} has no vertex count")))?;
        let invalid = |pos, source| DslError::InvalidGraph { pos, source };
        let mut g = GraphSpec::new(n, draft.default.unwrap_or(PairState::NonEdge));
        for (state, i, j, p) in draft.pairs {
            g.set(i, j, state).map_err(|e| invalid(p, e))?;
        }
        let rpos = draft.roots.first().map_or(npos, |r| r.1);
        g = g.with_roots(draft.roots.into_iter().map(|r| r.0).collect()).map_err(|e| invalid(rpos, e))?;
        if let Some(labels) = draft.labels {
            g = g.with_labels(labels).map_err(|e| invalid(name_pos, e))?;
        }
        file.graphs.push((name, g));
        Ok(())
    }

    fn constraint(&mut self, file: &ConstraintFile, index: usize) -> Result<Constraint, DslError> {
        let start = self.peek().pos;
        let mut name = format!("c{index}");
        if self.peek().tok == Tok::Ident("constraint".into()) {
            self.next();
            name = self.expect_ident("a constraint name")?.0;
            self.expect_sym(':')?;
        }
        let lhs = self.expr()?;
        self.expect_sym('=')?;
        let rhs = self.expr()?;
        if !self.at_separator() {
            let t = self.peek().clone();
            return Err(syntax(t.pos, format!("expected end of constraint, found {}", describe(&t.tok))));
        }
        let c = Constraint { name, lhs, rhs, pos: start };
        check_constraint(&c, file)?;
        Ok(c)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut e = self.term()?;
        loop {
            if self.is_sym('+') {
                self.next();
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.is_sym('-') {
                self.next();
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut e = self.unary()?;
        loop {
            if self.is_sym('*') {
                self.next();
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.is_sym('/') {
                self.next();
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.is_sym('-') {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let t = self.next();
        match t.tok {
            Tok::Number(v, _) => Ok(Expr::Const(v)),
            Tok::Ident(s) => Ok(Expr::Graph(s)),
            Tok::Sym('(') => {
                self.nesting += 1;
                let e = self.expr()?;
                self.nesting -= 1;
                self.expect_sym(')')?;
                Ok(e)
            }
            other => Err(syntax(t.pos, format!("expected a number, graph or '(', found {}", describe(&other)))),
        }
    }
}

/// Root labels and pair states among roots, in root order.
type RootSignature = (Vec<Option<String>>, Vec<PairState>);

/// Root graph of `g`.
fn root_signature(g: &GraphSpec) -> RootSignature {
    let roots = g.roots();
    let labels = roots.iter().map(|&r| g.labels().map(|l| l[r].clone())).collect();
    let mut states = Vec::new();
    for (a, &i) in roots.iter().enumerate() {
        for &j in &roots[a + 1..] {
            states.push(g.state(i, j));
        }
    }
    (labels, states)
}

fn check_constraint(c: &Constraint, file: &ConstraintFile) -> Result<(), DslError> {
    let names: Vec<&str> = c.lhs.graphs().into_iter().chain(c.rhs.graphs()).collect();
    let mut first: Option<(&str, RootSignature)> = None;
    for name in &names {
        let g = file
            .graphs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g.clone())
            .or_else(|| builtin_graph(name))
            .ok_or_else(|| DslError::UnknownGraph { pos: c.pos, name: name.to_string() })?;
        let sig = root_signature(&g);
        match &first {
            None => first = Some((name, sig)),
            Some((other, s)) if *s != sig => {
                return Err(DslError::Compatibility {
                    pos: c.pos,
                    constraint: c.name.clone(),
                    message: format!("{other} and {name} have different root graphs"),
                })
            }
            _ => {}
        }
    }
    let rooted = first.as_ref().is_some_and(|(_, (labels, _))| !labels.is_empty());
    if !rooted && (has_graph_denominator(&c.lhs) || has_graph_denominator(&c.rhs)) {
        return Err(DslError::Compatibility {
            pos: c.pos,
            constraint: c.name.clone(),
            message: "fractions of densities are only allowed in rooted constraints".into(),
        });
    }
    Ok(())
}

fn has_graph_denominator(e: &Expr) -> bool {
    match e {
        Expr::Const(_) | Expr::Graph(_) => false,
        Expr::Neg(a) => has_graph_denominator(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => has_graph_denominator(a) || has_graph_denominator(b),
        Expr::Div(a, b) => !b.graphs().is_empty() || has_graph_denominator(a) || has_graph_denominator(b),
    }
}

/// Parses a constraint file.
pub fn parse(text: &str) -> Result<ConstraintFile, DslError> {
    let mut p = Parser { toks: lex(text)?, at: 0, nesting: 0 };
    let mut file = ConstraintFile::default();
    loop {
        p.skip_separators();
        if p.peek().tok == Tok::Eof {
            return Ok(file);
        }
        if p.peek().tok == Tok::Ident("graph".into()) {
            p.graph_def(&mut file)?;
            if !p.at_separator() {
                let t = p.peek().clone();
                return Err(syntax(t.pos, format!("expected end of statement, found {}", describe(&t.tok))));
            }
        } else {
            let index = file.constraints.len() + 1;
            let c = p.constraint(&file, index)?;
            if file.constraints.iter().any(|o| o.name == c.name) {
                return Err(syntax(c.pos, format!("constraint {:?} is defined twice", c.name)));
            }
            file.constraints.push(c);
        }
    }
}
