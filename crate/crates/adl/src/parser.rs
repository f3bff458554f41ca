use crate::ast::{is_field_name, Body, Decl, Field, Item, Scalar, Value};
use crate::lexer::{tokenize, Tok, Token};
use crate::{Finding, Loc};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: Loc,
}

fn syntax(loc: Loc, message: impl Into<String>) -> Finding {
    Finding::error("SYNTAX", loc, message)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn loc(&self) -> Loc {
        self.toks.get(self.pos).map(|t| t.loc).unwrap_or(self.eof)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_word(&mut self, what: &str) -> Result<(String, Loc), Finding> {
        let loc = self.loc();
        match self.next() {
            Some(Token { tok: Tok::Word(w), .. }) => Ok((w, loc)),
            Some(t) => Err(syntax(loc, format!("expected {what}, found {}", describe(&t.tok)))),
            None => Err(syntax(loc, format!("expected {what}, found end of input"))),
        }
    }

    fn module(&mut self) -> Result<Vec<Item>, Finding> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            let loc = self.loc();
            if let (Some(Tok::Word(_)), Some(Tok::Equals)) = (self.peek(), self.peek_at(1)) {
                let (name, _) = self.expect_word("name")?;
                self.next();
                let (target, _) = self.expect_word("identifier after '='")?;
                items.push(Item::Alias { name, target, loc });
                continue;
            }
            let d = self.decl()?;
            if d.name.is_none() {
                return Err(syntax(loc, "top-level declaration needs a name"));
            }
            items.push(Item::Decl(d));
        }
        Ok(items)
    }

    /// `NAME? (':' TYPE)? (class_value | TYPEVALUE)`
    fn decl(&mut self) -> Result<Decl, Finding> {
        let loc = self.loc();
        let mut name = None;
        if let Some(Tok::Word(w)) = self.peek() {
            if is_field_name(w) {
                return Err(syntax(loc, format!("field name {w} outside a class value")));
            }
            name = Some(w.clone());
            self.next();
        }
        let mut ty = None;
        if self.peek() == Some(&Tok::Colon) {
            self.next();
            ty = Some(self.expect_word("type name after ':'")?.0);
        }
        let body = if self.peek() == Some(&Tok::LBrace) {
            Body::Class(self.class_value()?)
        } else {
            Body::Value(self.type_value()?)
        };
        Ok(Decl { name, ty, body, loc })
    }

    fn type_value(&mut self) -> Result<Vec<(Scalar, Loc)>, Finding> {
        let mut out = vec![self.scalar()?];
        if self.peek() == Some(&Tok::DotDot) {
            out.push((Scalar::Range, self.loc()));
            self.next();
            out.push(self.scalar()?);
        }
        Ok(out)
    }

    fn scalar(&mut self) -> Result<(Scalar, Loc), Finding> {
        let loc = self.loc();
        match self.next() {
            Some(Token { tok: Tok::Word(w), .. }) if !is_field_name(&w) => Ok((Scalar::Word(w), loc)),
            Some(Token { tok: Tok::Str(s), .. }) => Ok((Scalar::Str(s), loc)),
            Some(t) => Err(syntax(loc, format!("expected a value, found {}", describe(&t.tok)))),
            None => Err(syntax(loc, "expected a value, found end of input")),
        }
    }

    fn class_value(&mut self) -> Result<Vec<Field>, Finding> {
        let open = self.loc();
        self.next();
        let mut fields = Vec::new();
        loop {
            let loc = self.loc();
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.next();
                    return Ok(fields);
                }
                None => return Err(syntax(open, "unclosed '{'")),
                Some(Tok::Word(w)) if is_field_name(w) => {
                    let name = w.clone();
                    self.next();
                    let values = self.field_values()?;
                    if values.is_empty() {
                        return Err(syntax(loc, format!("field {name} has no value")));
                    }
                    fields.push(Field { name, values, loc });
                }
                Some(t) => {
                    return Err(syntax(loc, format!("expected a field name, found {}", describe(t))));
                }
            }
        }
    }

    fn field_values(&mut self) -> Result<Vec<Value>, Finding> {
        let mut values = Vec::new();
        loop {
            let loc = self.loc();
            match self.peek() {
                None | Some(Tok::RBrace) => break,
                Some(Tok::Word(w)) if is_field_name(w) => break,
                Some(Tok::Word(_)) => match self.peek_at(1) {
                    Some(Tok::Colon) | Some(Tok::LBrace) => values.push(Value::Decl(self.decl()?)),
                    _ => {
                        let (s, l) = self.scalar()?;
                        values.push(Value::Scalar(s, l));
                    }
                },
                Some(Tok::Str(_)) => {
                    let (s, l) = self.scalar()?;
                    values.push(Value::Scalar(s, l));
                }
                Some(Tok::DotDot) => {
                    self.next();
                    values.push(Value::Scalar(Scalar::Range, loc));
                }
                Some(Tok::LBrace) | Some(Tok::Colon) => values.push(Value::Decl(self.decl()?)),
                Some(Tok::Equals) => return Err(syntax(loc, "unexpected '=' inside a class value")),
            }
        }
        Ok(values)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::Colon => "':'".into(),
        Tok::Equals => "'='".into(),
        Tok::DotDot => "'..'".into(),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Word(w) => format!("'{w}'"),
    }
}

/// Parse source text into untyped items.
pub fn parse_items(src: &str) -> Result<Vec<Item>, Finding> {
    let toks = tokenize(src).map_err(|e| syntax(e.loc, e.message))?;
    let (mut line, mut col) = (1u32, 1u32);
    for c in src.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    let mut p = Parser { toks, pos: 0, eof: Loc { line, col } };
    p.module()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alias_and_typed_value() {
        let items = parse_items("a = b.c\nrate : duration 50msec").unwrap();
        assert_eq!(items.len(), 2);
        assert!(matches!(&items[0], Item::Alias { name, target, .. } if name == "a" && target == "b.c"));
        let Item::Decl(d) = &items[1] else { panic!() };
        assert_eq!(d.ty.as_deref(), Some("duration"));
    }

    #[test]
    fn nested_decls_in_fields() {
        let src = "n : node { SUBSCRIBES a { TOPIC t MAXLATENCY 1msec } b { TOPIC u MAXLATENCY 2msec } PERIOD 1msec .. 2msec }";
        let items = parse_items(src).unwrap();
        let Item::Decl(d) = &items[0] else { panic!() };
        let Body::Class(fields) = &d.body else { panic!() };
        assert_eq!(fields[0].values.len(), 2);
        assert_eq!(fields[1].values.len(), 3);
    }

    #[test]
    fn unclosed_brace_reports_open_location() {
        let err = parse_items("t : topic {\n FIELDS x : int8 1").unwrap_err();
        assert_eq!(err.rule, "SYNTAX");
        assert_eq!(err.loc, Loc { line: 1, col: 11 });
    }

    #[test]
    fn empty_field_is_an_error() {
        assert!(parse_items("t : topic { FIELDS }").is_err());
    }
}
