use qparch_adl::parse_duration;

use super::{CmpOp, Formula, Query, QueryError, Temporal, Term, VarRef, Window};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    OpenBracket,
    CloseBracket,
    Comma,
    Atom(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    /// No whitespace between this token and the previous one.
    glued: bool,
}

fn lex(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 0);
    let mut glued = false;
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        col += 1;
        let (l, cc) = (line, col);
        let single = match c {
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            '[' => Some(Tok::OpenBracket),
            ']' => Some(Tok::CloseBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: l, col: cc, glued });
            glued = true;
            continue;
        }
        if c == '\n' {
            line += 1;
            col = 0;
            glued = false;
            continue;
        }
        if c.is_whitespace() {
            glued = false;
            continue;
        }
        if c == ';' {
            for n in chars.by_ref() {
                if n == '\n' {
                    line += 1;
                    col = 0;
                    break;
                }
            }
            glued = false;
            continue;
        }
        let mut word = c.to_string();
        while let Some(&n) = chars.peek() {
            if n.is_whitespace() || "()[],;".contains(n) {
                break;
            }
            word.push(n);
            chars.next();
            col += 1;
        }
        out.push(Token { tok: Tok::Atom(word), line: l, col: cc, glued });
        glued = true;
    }
    out
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    period: Option<u64>,
    end: (usize, usize),
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, QueryError> {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col));
        Err(QueryError::Syntax { line, col, message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), QueryError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn atom(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = a.clone();
                self.pos += 1;
                Ok(a)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn offset(&mut self) -> Result<u32, QueryError> {
        let text = self.atom("an offset")?;
        if let Ok(n) = text.parse::<u32>() {
            return Ok(n);
        }
        self.pos -= 1;
        let us = match parse_duration(&text) {
            Ok(us) => us,
            Err(_) => return self.err(format!("offset '{text}' is neither a step count nor a duration")),
        };
        let Some(period) = self.period.filter(|&p| p > 0) else {
            return self.err(format!("duration offset '{text}' needs a step period"));
        };
        if us % period != 0 {
            return self.err(format!("offset '{text}' is not a whole number of {period}us steps"));
        }
        self.pos += 1;
        u32::try_from(us / period).or_else(|_| self.err("offset too large"))
    }

    fn interval(&mut self, op: Temporal) -> Result<Formula, QueryError> {
        let start_inclusive = match self.next() {
            Some(Tok::OpenBracket) => true,
            Some(Tok::Open) => false,
            _ => unreachable!("checked by caller"),
        };
        let start = self.offset()?;
        self.expect(Tok::Comma, "',' between offsets")?;
        let end = self.offset()?;
        let end_inclusive = match self.peek() {
            Some(Tok::CloseBracket) => true,
            Some(Tok::Close) => false,
            _ => return self.err("expected ']' or ')' closing the window"),
        };
        self.pos += 1;
        if start > end {
            self.pos -= 1;
            return self.err(format!("window start {start} exceeds end {end}"));
        }
        self.expect(Tok::OpenBracket, "'[' before the operand")?;
        let body = self.formula()?;
        self.expect(Tok::CloseBracket, "']' after the operand")?;
        Ok(Formula::Interval(op, Window { start, start_inclusive, end, end_inclusive }, Box::new(body)))
    }

    fn term(&mut self) -> Result<Term, QueryError> {
        let a = self.atom("a variable or a number")?;
        Ok(match a.as_str() {
            "true" => Term::Bool(true),
            "false" => Term::Bool(false),
            _ => match a.parse::<f64>() {
                Ok(x) if a.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') => {
                    Term::Num(x)
                }
                _ => Term::Var(VarRef::current(&a)),
            },
        })
    }

    fn formula(&mut self) -> Result<Formula, QueryError> {
        match self.peek().cloned() {
            Some(Tok::Atom(a)) => {
                let glued_next = self.toks.get(self.pos + 1).is_some_and(|t| t.glued && matches!(t.tok, Tok::OpenBracket | Tok::Open));
                self.pos += 1;
                match a.as_str() {
                    "true" => Ok(Formula::Const(true)),
                    "false" => Ok(Formula::Const(false)),
                    "X" if glued_next => self.interval(Temporal::All),
                    "F" if glued_next => self.interval(Temporal::Some),
                    _ if a.parse::<f64>().is_ok() => {
                        self.pos -= 1;
                        self.err(format!("number '{a}' is not a formula"))
                    }
                    _ => Ok(Formula::Var(VarRef::current(&a))),
                }
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let head = self.atom("an operator")?;
                let f = match head.as_str() {
                    "and" | "or" => {
                        let mut items = Vec::new();
                        while self.peek() != Some(&Tok::Close) && self.peek().is_some() {
                            items.push(self.formula()?);
                        }
                        if head == "and" {
                            Formula::And(items)
                        } else {
                            Formula::Or(items)
                        }
                    }
                    "not" => Formula::Not(Box::new(self.formula()?)),
                    "=>" | "⇒" | "implies" => {
                        let a = self.formula()?;
                        Formula::Implies(Box::new(a), Box::new(self.formula()?))
                    }
                    "=" | "!=" | "<" | "<=" | ">" | ">=" => {
                        let op = match head.as_str() {
                            "=" => CmpOp::Eq,
                            "!=" => CmpOp::Ne,
                            "<" => CmpOp::Lt,
                            "<=" => CmpOp::Le,
                            ">" => CmpOp::Gt,
                            _ => CmpOp::Ge,
                        };
                        let a = self.term()?;
                        Formula::Cmp(op, a, self.term()?)
                    }
                    other => {
                        self.pos -= 1;
                        return self.err(format!("unknown operator '{other}'"));
                    }
                };
                self.expect(Tok::Close, "')'")?;
                Ok(f)
            }
            _ => self.err("expected a formula"),
        }
    }
}

/// Parse a query file: exactly one `(query sys f)` and any number of
/// `(assume-input sys atom)`. `period` converts duration offsets to steps.
pub fn parse_query(src: &str, period: Option<u64>) -> Result<Query, QueryError> {
    let toks = lex(src);
    let end = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut p = Parser { toks, pos: 0, period, end };
    let mut query: Option<(String, Formula)> = None;
    let mut assumptions = Vec::new();
    while p.peek().is_some() {
        p.expect(Tok::Open, "'(' starting a form")?;
        let head = p.atom("'query' or 'assume-input'")?;
        match head.as_str() {
            "query" => {
                if query.is_some() {
                    p.pos -= 1;
                    return p.err("only one query per file");
                }
                let sys = p.atom("a system name")?;
                let f = p.formula()?;
                query = Some((sys, f));
            }
            "assume-input" => {
                let _sys = p.atom("a system name")?;
                let f = p.formula()?;
                if f.has_interval() {
                    return p.err("assumptions must not use interval operators");
                }
                assumptions.push(f);
            }
            other => {
                p.pos -= 1;
                return p.err(format!("unknown form '{other}'"));
            }
        }
        p.expect(Tok::Close, "')' closing the form")?;
    }
    let Some((system, formula)) = query else {
        return p.err("no (query ...) form");
    };
    Ok(Query { system, formula, assumptions })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_interval_forms() {
        let q = parse_query("(query sys (=> p X[0,2][q]))", None).unwrap();
        assert_eq!(q.system, "sys");
        assert_eq!(q.formula.to_string(), "(=> p X[0,2][q])");
        let q = parse_query("(query sys F(1,3][(< x 2.5)])", None).unwrap();
        assert_eq!(q.formula.to_string(), "F(1,3][(< x 2.5)]");
    }

    #[test]
    fn durations_need_whole_steps() {
        let q = parse_query("(query s X[0sec,2sec][q])", Some(1_000_000)).unwrap();
        assert_eq!(q.formula.to_string(), "X[0,2][q]");
        assert!(parse_query("(query s X[0,1500msec][q])", Some(1_000_000)).is_err());
        assert!(parse_query("(query s X[0,2sec][q])", None).is_err());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_query("(query s\n  (frob p))", None).unwrap_err();
        assert_eq!(e, QueryError::Syntax { line: 2, col: 4, message: "unknown operator 'frob'".into() });
        assert!(parse_query("(query s X[2,1][q])", None).is_err());
        assert!(parse_query("(assume-input s p)", None).is_err());
        assert!(parse_query("(query s p) (query s q)", None).is_err());
    }

    #[test]
    fn spaced_x_is_a_variable() {
        let q = parse_query("(query s (and X [q]))", None);
        assert!(q.is_err());
        let q = parse_query("(query s (and X q))", None).unwrap();
        assert_eq!(q.formula, Formula::And(vec![Formula::Var(VarRef::current("X")), Formula::Var(VarRef::current("q"))]));
    }
}
