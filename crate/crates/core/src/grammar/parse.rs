//! Reader for the grammar DSL.
//!
//! ```text
//! # comment
//! S -> "are you a " RobotOrHuman |
//!      "am i talking to a " RobotOrHuman
//! RobotOrHuman @split -> 3: Robot | Human
//! ```
//!
//! A rule normally occupies one line. It continues onto the next line when
//! the line ends with `|` or the next line starts with `|`. Adjacent
//! terminals concatenate with no implicit space.

use super::{Alternative, Grammar, GrammarError, Production, Rule, Splittable, Symbol};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Number(f64),
    Annotation(Splittable),
    Arrow,
    Pipe,
    Colon,
    Newline,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line, col, message: message.into() }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<(Vec<Spanned>, (usize, usize)), GrammarError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, col });
            match c {
                '\n' => {
                    self.bump();
                    push(&mut out, Tok::Newline);
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while matches!(self.chars.peek(), Some(&c) if c != '\n') {
                        self.bump();
                    }
                }
                '|' => {
                    self.bump();
                    push(&mut out, Tok::Pipe);
                }
                ':' => {
                    self.bump();
                    push(&mut out, Tok::Colon);
                }
                '"' => {
                    self.bump();
                    let s = self.string(line, col)?;
                    push(&mut out, Tok::Str(s));
                }
                '@' => {
                    self.bump();
                    let word = self.word();
                    let ann = match word.as_str() {
                        "split" => Splittable::Always,
                        "nosplit" => Splittable::Never,
                        _ => return Err(syntax(line, col, format!("unknown annotation @{word}"))),
                    };
                    push(&mut out, Tok::Annotation(ann));
                }
                '-' => {
                    self.bump();
                    if self.chars.peek() == Some(&'>') {
                        self.bump();
                        push(&mut out, Tok::Arrow);
                    } else {
                        return Err(syntax(line, col, "weights must be positive numbers"));
                    }
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let mut text = String::new();
                    while let Some(&c) = self.chars.peek() {
                        let exp_sign = (c == '+' || c == '-') && text.ends_with(['e', 'E']);
                        if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                            text.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let value: f64 = text
                        .parse()
                        .map_err(|_| syntax(line, col, format!("malformed weight {text:?}")))?;
                    push(&mut out, Tok::Number(value));
                }
                c if c.is_ascii_alphabetic() => {
                    let word = self.word();
                    push(&mut out, Tok::Ident(word));
                }
                c => return Err(syntax(line, col, format!("unexpected character {c:?}"))),
            }
        }
        Ok((out, (self.line, self.col)))
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                w.push(c);
                self.bump();
            } else {
                break;
            }
        }
        w
    }

    fn string(&mut self, line: usize, col: usize) -> Result<String, GrammarError> {
        let mut s = String::new();
        loop {
            let (l, c) = (self.line, self.col);
            match self.bump() {
                None | Some('\n') => return Err(syntax(line, col, "unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    other => {
                        return Err(syntax(l, c, format!("invalid escape sequence \\{}", other.unwrap_or(' '))))
                    }
                },
                Some(ch) => s.push(ch),
            }
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.eof, |t| (t.line, t.col))
    }

    fn err(&self, message: impl Into<String>) -> GrammarError {
        let (line, col) = self.here();
        syntax(line, col, message)
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.pos += 1;
        }
    }

    /// True if the next non-newline token is a `|` (a continuation line).
    fn continues(&self) -> bool {
        self.toks[self.pos..]
            .iter()
            .find(|t| t.tok != Tok::Newline)
            .is_some_and(|t| t.tok == Tok::Pipe)
    }

    fn rule(&mut self) -> Result<Rule, GrammarError> {
        let name = match self.peek() {
            Some(Tok::Ident(n)) => n.clone(),
            _ => return Err(self.err("expected a rule name")),
        };
        self.pos += 1;
        let mut splittable = Splittable::Auto;
        if let Some(Tok::Annotation(a)) = self.peek() {
            splittable = *a;
            self.pos += 1;
        }
        if self.peek() != Some(&Tok::Arrow) {
            return Err(self.err("expected '->'"));
        }
        self.pos += 1;
        self.skip_newlines();
        let mut alternatives = vec![self.alternative()?];
        loop {
            match self.peek() {
                None => break,
                Some(Tok::Newline) if self.continues() => self.skip_newlines(),
                Some(Tok::Newline) => break,
                Some(Tok::Pipe) => {
                    self.pos += 1;
                    self.skip_newlines();
                    alternatives.push(self.alternative()?);
                }
                Some(_) => return Err(self.err("expected '|' or end of line")),
            }
        }
        Ok(Rule { name, alternatives, splittable })
    }

    fn alternative(&mut self) -> Result<Alternative, GrammarError> {
        let mut weight = 1.0;
        if let Some(&Tok::Number(w)) = self.peek() {
            if !(w.is_finite() && w > 0.0) {
                return Err(self.err(format!("weight {w} must be positive")));
            }
            self.pos += 1;
            if self.peek() != Some(&Tok::Colon) {
                return Err(self.err("expected ':' after weight"));
            }
            self.pos += 1;
            weight = w;
        }
        let mut symbols = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Str(s)) => symbols.push(Symbol::Terminal(s.clone())),
                // a name followed by '->' starts the next rule, which means a newline is missing
                Some(Tok::Ident(_)) if self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Arrow) => {
                    return Err(self.err("expected end of line before next rule"));
                }
                Some(Tok::Ident(n)) => symbols.push(Symbol::NonTerminal(n.clone())),
                _ => break,
            }
            self.pos += 1;
        }
        if symbols.is_empty() {
            return Err(self.err("empty alternative (write \"\" for the empty string)"));
        }
        Ok(Alternative { production: Production::new(symbols), weight })
    }
}

/// Parses and validates DSL source text. The first rule is the start symbol.
pub fn parse_grammar(source: &str) -> Result<Grammar, GrammarError> {
    let (toks, eof) = Lexer::new(source).tokens()?;
    let mut p = Parser { toks, pos: 0, eof };
    let mut rules: Vec<Rule> = Vec::new();
    loop {
        p.skip_newlines();
        if p.peek().is_none() {
            break;
        }
        let rule = p.rule()?;
        if rules.iter().any(|r| r.name == rule.name) {
            return Err(GrammarError::DuplicateRule(rule.name));
        }
        rules.push(rule);
    }
    Grammar::from_rules(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_at(src: &str) -> (usize, usize) {
        match parse_grammar(src) {
            Err(GrammarError::Syntax { line, col, .. }) => (line, col),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn weights_default_to_one() {
        let g = parse_grammar(r#"S -> 3: "robot" | "chatbot" | 0.5e1: "bot""#).unwrap();
        let w: Vec<f64> = g.rule("S").unwrap().alternatives.iter().map(|a| a.weight).collect();
        assert_eq!(w, vec![3.0, 1.0, 5.0]);
    }

    #[test]
    fn annotations_and_comments() {
        let g = parse_grammar("# header\nS @split -> A # trailing\nA @nosplit -> \"a#b\"\n").unwrap();
        assert_eq!(g.rule("S").unwrap().splittable, Splittable::Always);
        assert_eq!(g.rule("A").unwrap().splittable, Splittable::Never);
        assert_eq!(g.enumerate(4).unwrap(), vec!["a#b".to_string()]);
    }

    #[test]
    fn leading_pipe_continues() {
        let g = parse_grammar("S -> \"a\"\n   | \"b\"\n\n   | \"c\"\nT -> \"t\"").unwrap();
        assert_eq!(g.rule("S").unwrap().alternatives.len(), 3);
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn escapes() {
        let g = parse_grammar(r#"S -> "say \"hi\"\\" "\n\t""#).unwrap();
        assert_eq!(g.enumerate(2).unwrap(), vec!["say \"hi\"\\\n\t".to_string()]);
        assert_eq!(err_at(r#"S -> "\q""#), (1, 7));
    }

    #[test]
    fn syntax_error_positions() {
        assert_eq!(err_at("S -> \"a\" |"), (1, 11));
        assert_eq!(err_at("S \"a\""), (1, 3));
        assert_eq!(err_at("S -> \"open"), (1, 6));
        assert_eq!(err_at("S -> \"a\"\nT => \"b\""), (2, 3));
        assert_eq!(err_at("S -> 0: \"a\""), (1, 6));
        assert_eq!(err_at("S -> -1: \"a\""), (1, 6));
        assert_eq!(err_at("S -> 2 \"a\""), (1, 8));
        assert_eq!(err_at("S -> \"a\" T -> \"b\""), (1, 10));
        assert_eq!(err_at("S @foo -> \"a\""), (1, 3));
        assert_eq!(err_at("S -> $"), (1, 6));
        assert_eq!(err_at("S ->"), (1, 5));
    }

    #[test]
    fn duplicate_rule() {
        assert_eq!(
            parse_grammar("S -> \"a\"\nS -> \"b\""),
            Err(GrammarError::DuplicateRule("S".into()))
        );
    }

    #[test]
    fn empty_source() {
        assert_eq!(parse_grammar("# nothing\n\n"), Err(GrammarError::NoRules));
    }
}
