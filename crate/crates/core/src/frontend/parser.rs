//! Recursive-descent parser for MiniJ.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::error::ParseError;

pub fn parse_classes(src: &str, path: &str) -> Result<Vec<ClassDecl>, ParseError> {
    let tokens = tokenize(src, path)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        path,
    };
    let mut classes = Vec::new();
    while !p.at(&Tok::Eof) {
        classes.push(p.class_decl()?);
    }
    Ok(classes)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    path: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_n(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            path: self.path.to_string(),
            line: t.line,
            col: t.col,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error_here(what))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn annotations(&mut self) -> PResult<Vec<Annotation>> {
        let mut out = Vec::new();
        while self.eat(&Tok::At) {
            let name = self.ident("annotation name")?;
            let mut args = Vec::new();
            if self.eat(&Tok::LParen) {
                loop {
                    let key = self.ident("annotation argument name")?;
                    self.expect(Tok::Assign, "`=`")?;
                    let value = match self.advance() {
                        Tok::Ident(v) => AnnotationValue::Ident(v),
                        Tok::Str(v) => AnnotationValue::Str(v),
                        Tok::Int(v) => AnnotationValue::Int(v),
                        _ => {
                            self.pos -= 1;
                            return Err(self.error_here("annotation value"));
                        }
                    };
                    args.push((key, value));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
            }
            out.push(Annotation { name, args });
        }
        Ok(out)
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let annotations = self.annotations()?;
        self.class_decl_after_annotations(annotations)
    }

    fn class_decl_after_annotations(&mut self, annotations: Vec<Annotation>) -> PResult<ClassDecl> {
        let line = self.tokens[self.pos].line;
        let kind = match self.peek() {
            Tok::Class => ClassKind::Class,
            Tok::Enum => ClassKind::Enum,
            _ => return Err(self.error_here("`class` or `enum`")),
        };
        self.advance();
        let name = self.ident("class name")?;
        let superclass = if self.eat(&Tok::Extends) {
            Some(self.ident("superclass name")?)
        } else {
            None
        };
        self.expect(Tok::LBrace, "`{`")?;
        let mut members = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.error_here("`}`"));
            }
            members.push(self.member(&name, kind)?);
        }
        Ok(ClassDecl {
            annotations,
            kind,
            name,
            superclass,
            members,
            line,
        })
    }

    fn member(&mut self, class_name: &str, kind: ClassKind) -> PResult<Member> {
        let annotations = self.annotations()?;
        if matches!(self.peek(), Tok::Class | Tok::Enum) {
            return Ok(Member::Class(self.class_decl_after_annotations(annotations)?));
        }
        if kind == ClassKind::Enum
            && annotations.is_empty()
            && matches!(self.peek(), Tok::Ident(_))
            && matches!(self.peek_n(1), Tok::Comma | Tok::Semi)
        {
            let mut names = vec![self.ident("enum constant")?];
            while self.eat(&Tok::Comma) {
                names.push(self.ident("enum constant")?);
            }
            self.expect(Tok::Semi, "`;`")?;
            return Ok(Member::EnumConstants(names));
        }
        let is_static = self.eat(&Tok::Static);
        // constructor
        if let Tok::Ident(name) = self.peek() {
            if name == class_name && self.peek_n(1) == &Tok::LParen {
                let name = self.ident("constructor")?;
                return self.method_rest(annotations, is_static, None, name);
            }
        }
        if self.eat(&Tok::Void) {
            let name = self.ident("method name")?;
            return self.method_rest(annotations, is_static, Some(None), name);
        }
        let ty = TypeName::from_ident(&self.ident("type")?);
        let name = self.ident("member name")?;
        if self.at(&Tok::LParen) {
            return self.method_rest(annotations, is_static, Some(Some(ty)), name);
        }
        if !annotations.is_empty() {
            return Err(self.error_here("`(` (annotations are only allowed on methods and classes)"));
        }
        let init = if self.eat(&Tok::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(Member::Field(FieldDecl {
            is_static,
            ty,
            name,
            init,
        }))
    }

    fn method_rest(
        &mut self,
        annotations: Vec<Annotation>,
        is_static: bool,
        ret: Option<Option<TypeName>>,
        name: String,
    ) -> PResult<Member> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                let ty = TypeName::from_ident(&self.ident("parameter type")?);
                let pname = self.ident("parameter name")?;
                params.push(Param { ty, name: pname });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(Member::Method(MethodDecl {
            annotations,
            is_static,
            ret,
            name,
            params,
            body,
        }))
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.error_here("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek().clone() {
            Tok::Return => {
                self.advance();
                let value = if self.at(&Tok::Semi) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Return(value))
            }
            Tok::If => self.if_stmt(),
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::For => self.for_stmt(),
            Tok::Ident(word) => {
                if word == "trace" {
                    if let Tok::Str(entity) = self.peek_n(1).clone() {
                        self.advance();
                        self.advance();
                        let body = self.block()?;
                        return Ok(Stmt::Trace { entity, body });
                    }
                }
                if let Some(kind) = AssertKind::from_keyword(&word) {
                    if self.peek_n(1) == &Tok::LParen {
                        self.advance();
                        let args = self.args()?;
                        self.expect(Tok::Semi, "`;`")?;
                        return Ok(Stmt::Assert { kind, args });
                    }
                }
                let stmt = self.simple_stmt()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(stmt)
            }
            _ => {
                let stmt = self.simple_stmt()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(stmt)
            }
        }
    }

    /// varDecl, assignment or expression statement, without the trailing `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_n(1), Tok::Ident(_)) {
            let ty = TypeName::from_ident(&self.ident("type")?);
            let name = self.ident("variable name")?;
            let init = if self.eat(&Tok::Assign) {
                Some(self.expr()?)
            } else {
                None
            };
            return Ok(Stmt::VarDecl { ty, name, init });
        }
        let start = self.pos;
        let target = self.expr()?;
        let op = match self.peek() {
            Tok::Assign => Some(AssignOp::Set),
            Tok::PlusAssign => Some(AssignOp::Add),
            Tok::MinusAssign => Some(AssignOp::Sub),
            Tok::StarAssign => Some(AssignOp::Mul),
            Tok::SlashAssign => Some(AssignOp::Div),
            _ => None,
        };
        match op {
            Some(op) => {
                if !matches!(target, Expr::Ident(_) | Expr::Field { .. }) {
                    let t = &self.tokens[start];
                    return Err(ParseError {
                        path: self.path.to_string(),
                        line: t.line,
                        col: t.col,
                        message: "invalid assignment target".to_string(),
                    });
                }
                self.advance();
                let value = self.expr()?;
                Ok(Stmt::Assign { target, op, value })
            }
            None => Ok(Stmt::Expr(target)),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if self.at(&Tok::If) {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then_block,
            else_block,
        })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        self.expect(Tok::For, "`for`")?;
        self.expect(Tok::LParen, "`(`")?;
        let init = if self.at(&Tok::Semi) {
            None
        } else {
            Some(Box::new(self.simple_stmt()?))
        };
        self.expect(Tok::Semi, "`;`")?;
        let cond = if self.at(&Tok::Semi) {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect(Tok::Semi, "`;`")?;
        let update = if self.at(&Tok::RParen) {
            None
        } else {
            Some(Box::new(self.simple_stmt()?))
        };
        self.expect(Tok::RParen, "`)`")?;
        let body = self.block()?;
        Ok(Stmt::For {
            init,
            cond,
            update,
            body,
        })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.postfix(),
        };
        self.advance();
        let expr = self.unary()?;
        Ok(Expr::Unary {
            op,
            expr: Box::new(expr),
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.primary()?;
        while self.eat(&Tok::Dot) {
            let name = self.ident("member name")?;
            if self.at(&Tok::LParen) {
                let args = self.args()?;
                expr = Expr::Call {
                    receiver: Some(Box::new(expr)),
                    name,
                    args,
                };
            } else {
                expr = Expr::Field {
                    target: Box::new(expr),
                    name,
                };
            }
        }
        Ok(expr)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let expr = match tok {
            Tok::Int(v) => Expr::Int(v),
            Tok::Float(v) => Expr::Float(v),
            Tok::Str(v) => Expr::Str(v),
            Tok::True => Expr::Bool(true),
            Tok::False => Expr::Bool(false),
            Tok::Null => Expr::Null,
            Tok::This => Expr::This,
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                if !self.at(&Tok::RBracket) {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket, "`]`")?;
                return Ok(Expr::List(items));
            }
            Tok::New => {
                self.advance();
                let class = self.ident("class name")?;
                let args = self.args()?;
                return Ok(Expr::New { class, args });
            }
            Tok::Ident(name) => {
                self.advance();
                if self.at(&Tok::LParen) {
                    let args = self.args()?;
                    if name == "throw" {
                        return match args.as_slice() {
                            [Expr::Ident(exc)] => Ok(Expr::Throw(exc.clone())),
                            _ => Err(self.error_here("exception name in `throw(...)`")),
                        };
                    }
                    return Ok(Expr::Call {
                        receiver: None,
                        name,
                        args,
                    });
                }
                return Ok(Expr::Ident(name));
            }
            _ => return Err(self.error_here("expression")),
        };
        self.advance();
        Ok(expr)
    }
}
