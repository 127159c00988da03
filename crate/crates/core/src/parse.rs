//! Lexer and recursive-descent parser for `.scr` protocol files.

// Grammar:
//
// module    -> 'module' dotted ';' type_decl* protocol* EOF
// dotted    -> IDENT ('.' IDENT)*
// type_decl -> 'type' IDENT 'as' STRING ';'
// protocol  -> 'global' 'protocol' IDENT '(' roles? ')' block
// roles     -> 'role' IDENT (',' 'role' IDENT)*
// block     -> '{' stmt* '}'
// stmt      -> IDENT '(' idents? ')' 'from' IDENT 'to' IDENT ';'
//            | 'choice' 'at' IDENT block ('or' block)*
//            | 'do' IDENT '(' idents? ')' ';'
//            | 'connect' IDENT 'to' IDENT ';'
//            | 'disconnect' IDENT 'and' IDENT ';'
// idents    -> IDENT (',' IDENT)*
//
// `//` starts a comment running to the end of the line.

use std::fmt;

use crate::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub span: Span,
    /// Token classes that would have been accepted at `span`.
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expected.as_slice() {
            [] => write!(f, "unexpected {}", self.found),
            [one] => write!(f, "expected {}, found {}", one, self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Keyword(&'static str),
    Str(String),
    Punct(char),
    Invalid(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Keyword(k) => format!("`{k}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Invalid(s) => s.clone(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "module",
    "type",
    "as",
    "global",
    "protocol",
    "role",
    "from",
    "to",
    "choice",
    "at",
    "or",
    "do",
    "connect",
    "disconnect",
    "and",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.src[self.pos..].starts_with("//") => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn next_token(&mut self) -> Token {
        self.skip_trivia();
        let (start, line, column) = (self.pos, self.line, self.column);
        let tok = match self.bump() {
            None => Tok::Eof,
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while matches!(self.peek_char(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let word = &self.src[start..self.pos];
                match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(word.to_string()),
                }
            }
            Some('"') => self.string_body(),
            Some(c) if "(){};,.".contains(c) => Tok::Punct(c),
            Some(c) => Tok::Invalid(format!("unexpected character {c:?}")),
        };
        Token {
            tok,
            span: Span::new(start, self.pos, line, column),
        }
    }

    fn string_body(&mut self) -> Tok {
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Tok::Invalid("unterminated string".to_string()),
                Some('"') => return Tok::Str(out),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return Tok::Invalid("invalid escape in string".to_string()),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    /// End of the last consumed token, for closing node spans.
    prev_end: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let mut lexer = Lexer::new(src);
        let current = lexer.next_token();
        Parser {
            lexer,
            current,
            prev_end: 0,
        }
    }

    fn advance(&mut self) -> Token {
        let next = self.lexer.next_token();
        let tok = std::mem::replace(&mut self.current, next);
        self.prev_end = tok.span.end;
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.current.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.current.tok.describe(),
        }
    }

    fn close(&self, start: Span) -> Span {
        Span::new(start.start, self.prev_end.max(start.start), start.line, start.column)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.current.tok, Tok::Keyword(k) if k == kw)
    }

    fn at_punct(&self, c: char) -> bool {
        self.current.tok == Tok::Punct(c)
    }

    fn keyword(&mut self, kw: &'static str) -> PResult<Span> {
        if self.at_keyword(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn punct(&mut self, c: char) -> PResult<Span> {
        if self.at_punct(c) {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match &self.current.tok {
            Tok::Ident(name) => {
                let name = name.clone();
                let span = self.advance().span;
                Ok(Ident::new(name, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn module(&mut self) -> PResult<ScribbleModule> {
        let start = self.keyword("module")?;
        let mut name = vec![self.ident()?];
        while self.at_punct('.') {
            self.advance();
            name.push(self.ident()?);
        }
        self.punct(';')?;

        let mut type_decls = Vec::new();
        while self.at_keyword("type") {
            type_decls.push(self.type_decl()?);
        }
        let mut protocols = Vec::new();
        loop {
            if self.at_keyword("global") {
                protocols.push(self.protocol()?);
            } else if self.current.tok == Tok::Eof {
                break;
            } else if protocols.is_empty() {
                return Err(self.error(&["`type`", "`global`", "end of input"]));
            } else {
                return Err(self.error(&["`global`", "end of input"]));
            }
        }
        Ok(ScribbleModule {
            name,
            type_decls,
            protocols,
            span: self.close(start),
        })
    }

    fn type_decl(&mut self) -> PResult<PayloadTypeDecl> {
        let start = self.keyword("type")?;
        let alias = self.ident()?;
        self.keyword("as")?;
        let target_path = match &self.current.tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.advance();
                s
            }
            _ => return Err(self.error(&["string"])),
        };
        self.punct(';')?;
        Ok(PayloadTypeDecl {
            alias,
            target_path,
            span: self.close(start),
        })
    }

    fn protocol(&mut self) -> PResult<GlobalProtocolDecl> {
        let start = self.keyword("global")?;
        self.keyword("protocol")?;
        let name = self.ident()?;
        self.punct('(')?;
        let mut role_params = Vec::new();
        if !self.at_punct(')') {
            loop {
                self.keyword("role")?;
                role_params.push(self.ident()?);
                if self.at_punct(',') {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        let body = self.block()?;
        Ok(GlobalProtocolDecl {
            name,
            role_params,
            body,
            span: self.close(start),
        })
    }

    fn block(&mut self) -> PResult<Vec<GlobalStatement>> {
        self.punct('{')?;
        let mut stmts = Vec::new();
        while !self.at_punct('}') {
            stmts.push(self.statement()?);
        }
        self.advance();
        Ok(stmts)
    }

    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        self.punct('(')?;
        let mut out = Vec::new();
        if !self.at_punct(')') {
            loop {
                out.push(self.ident()?);
                if self.at_punct(',') {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        Ok(out)
    }

    fn statement(&mut self) -> PResult<GlobalStatement> {
        let start = self.current.span;
        match &self.current.tok {
            Tok::Ident(_) => {
                let label = self.ident()?;
                let payloads = self.ident_list()?;
                self.keyword("from")?;
                let from = self.ident()?;
                self.keyword("to")?;
                let to = self.ident()?;
                self.punct(';')?;
                Ok(GlobalStatement::Transfer {
                    label,
                    payloads,
                    from,
                    to,
                    span: self.close(start),
                })
            }
            Tok::Keyword("choice") => {
                self.advance();
                self.keyword("at")?;
                let at = self.ident()?;
                let mut branches = vec![self.block()?];
                while self.at_keyword("or") {
                    self.advance();
                    branches.push(self.block()?);
                }
                Ok(GlobalStatement::Choice {
                    at,
                    branches,
                    span: self.close(start),
                })
            }
            Tok::Keyword("do") => {
                self.advance();
                let protocol = self.ident()?;
                let role_args = self.ident_list()?;
                self.punct(';')?;
                Ok(GlobalStatement::Do {
                    protocol,
                    role_args,
                    span: self.close(start),
                })
            }
            Tok::Keyword("connect") => {
                self.advance();
                let from = self.ident()?;
                self.keyword("to")?;
                let to = self.ident()?;
                self.punct(';')?;
                Ok(GlobalStatement::Connect {
                    from,
                    to,
                    span: self.close(start),
                })
            }
            Tok::Keyword("disconnect") => {
                self.advance();
                let from = self.ident()?;
                self.keyword("and")?;
                let to = self.ident()?;
                self.punct(';')?;
                Ok(GlobalStatement::Disconnect {
                    from,
                    to,
                    span: self.close(start),
                })
            }
            _ => Err(self.error(&["message label", "`choice`", "`do`", "`connect`", "`disconnect`", "`}`"])),
        }
    }
}

/// Parses a complete `.scr` module.
pub fn parse_module(text: &str) -> Result<ScribbleModule, ParseError> {
    let mut parser = Parser::new(text);
    parser.module()
}
