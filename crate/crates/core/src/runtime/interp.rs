//! Tree-walking evaluator.

use super::trace::TraceSink;
use super::value::{ObjRef, Object, Value};
use crate::frontend::ast::*;
use crate::frontend::model::ClassModel;
use crate::frontend::ParsedProject;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

pub const DEFAULT_STEP_LIMIT: u64 = 200_000;
const MAX_DEPTH: usize = 400;

/// Annotation marking classes whose static reads are traced.
pub const TRACED: &str = "Traced";

/// A raised condition unwinding the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub enum Raise {
    Throw { name: String, message: String },
    AssertFail(String),
}

impl Raise {
    pub fn throw(name: &str, message: impl Into<String>) -> Raise {
        Raise::Throw {
            name: name.to_string(),
            message: message.into(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Raise::Throw { name, .. } => name,
            Raise::AssertFail(_) => "AssertionError",
        }
    }
}

pub type R<T> = Result<T, Raise>;

pub struct ClassInfo<'p> {
    pub model: &'p ClassModel,
    pub superclass: Option<String>,
    pub outer: Option<String>,
    pub instance_fields: Vec<&'p FieldDecl>,
    pub static_fields: Vec<&'p FieldDecl>,
    pub constants: Vec<String>,
    pub methods: HashMap<(String, usize), &'p MethodDecl>,
    pub ctors: HashMap<usize, &'p MethodDecl>,
    pub traced: bool,
}

/// Class index over a parsed project.
pub struct Program<'p> {
    pub classes: HashMap<String, ClassInfo<'p>>,
    by_simple: HashMap<String, String>,
}

impl<'p> Program<'p> {
    pub fn new(project: &'p ParsedProject) -> Program<'p> {
        let mut classes = HashMap::new();
        let mut by_simple = HashMap::new();
        for model in project.classes() {
            let mut info = ClassInfo {
                model,
                superclass: project.superclass(&model.fq_name).map(|s| s.fq_name.clone()),
                outer: model.fq_name.rsplit_once('.').map(|(o, _)| o.to_string()),
                instance_fields: Vec::new(),
                static_fields: Vec::new(),
                constants: Vec::new(),
                methods: HashMap::new(),
                ctors: HashMap::new(),
                traced: model.has_annotation(TRACED),
            };
            for m in &model.others {
                match m {
                    Member::Field(f) if f.is_static => info.static_fields.push(f),
                    Member::Field(f) => info.instance_fields.push(f),
                    Member::EnumConstants(names) => info.constants.extend(names.iter().cloned()),
                    _ => {}
                }
            }
            for m in &model.methods {
                if m.is_constructor {
                    info.ctors.insert(m.decl.params.len(), &m.decl);
                } else {
                    info.methods.insert((m.decl.name.clone(), m.decl.params.len()), &m.decl);
                }
            }
            by_simple.insert(model.name().to_string(), model.fq_name.clone());
            classes.insert(model.fq_name.clone(), info);
        }
        Program { classes, by_simple }
    }

    pub fn resolve(&self, name: &str) -> Option<&str> {
        if let Some((k, _)) = self.classes.get_key_value(name) {
            return Some(k);
        }
        self.by_simple.get(name).map(String::as_str)
    }

    pub fn info(&self, fq: &str) -> &ClassInfo<'p> {
        &self.classes[fq]
    }

    /// `fq` and its ancestors, nearest first.
    pub fn chain(&self, fq: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.classes.get_key_value(fq).map(|(k, _)| k.as_str());
        while let Some(c) = cur {
            if out.contains(&c) {
                break;
            }
            out.push(c);
            cur = self.classes[c].superclass.as_deref();
        }
        out
    }

    pub fn find_method(&self, fq: &str, name: &str, arity: usize) -> Option<(&str, &'p MethodDecl)> {
        self.chain(fq).into_iter().find_map(|c| {
            self.classes[c]
                .methods
                .get(&(name.to_string(), arity))
                .map(|m| (c, *m))
        })
    }

    fn static_owner(&self, fq: &str, field: &str) -> Option<&str> {
        self.chain(fq).into_iter().find(|c| {
            let info = &self.classes[*c];
            info.static_fields.iter().any(|f| f.name == field) || info.constants.iter().any(|k| k == field)
        })
    }

    /// Lexical lookup of a static field: the class chain, then enclosing classes.
    fn lexical_static(&self, fq: &str, field: &str) -> Option<&str> {
        let mut cur = Some(fq);
        while let Some(c) = cur {
            if let Some(owner) = self.static_owner(c, field) {
                return Some(owner);
            }
            cur = self.classes.get(c).and_then(|i| i.outer.as_deref());
        }
        None
    }
}

fn default_value(ty: &TypeName) -> Value {
    match ty {
        TypeName::Int => Value::Int(0),
        TypeName::Float => Value::Float(0.0),
        TypeName::Bool => Value::Bool(false),
        TypeName::Str | TypeName::Class(_) => Value::Null,
    }
}

pub struct Frame {
    scopes: Vec<HashMap<String, Value>>,
    pub this: Option<ObjRef>,
    pub class: String,
}

impl Frame {
    pub fn new(class: &str, this: Option<ObjRef>) -> Frame {
        Frame {
            scopes: vec![HashMap::new()],
            this,
            class: class.to_string(),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    fn declare(&mut self, name: &str, v: Value) {
        self.scopes.last_mut().expect("frame has a scope").insert(name.to_string(), v);
    }
}

pub enum Flow {
    Normal,
    Return(Value),
}

pub struct Interp<'p> {
    pub prog: &'p Program<'p>,
    statics: HashMap<String, BTreeMap<String, Value>>,
    initialized: HashMap<String, bool>,
    init_calls: HashMap<String, BTreeSet<String>>,
    pub sink: TraceSink,
    steps: u64,
    pub step_limit: u64,
    depth: usize,
    pub output: Vec<String>,
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p Program<'p>, sink: TraceSink) -> Interp<'p> {
        Interp {
            prog,
            statics: HashMap::new(),
            initialized: HashMap::new(),
            init_calls: HashMap::new(),
            sink,
            steps: 0,
            step_limit: DEFAULT_STEP_LIMIT,
            depth: 0,
            output: Vec::new(),
        }
    }

    /// Forget all static state; classes initialize again on next use.
    pub fn reset_statics(&mut self) {
        self.statics.clear();
        self.initialized.clear();
        self.init_calls.clear();
    }

    pub fn reset_steps(&mut self) {
        self.steps = 0;
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(Raise::throw("StepLimit", format!("exceeded {} steps", self.step_limit)));
        }
        Ok(())
    }

    pub fn ensure_init(&mut self, fq: &str) -> R<()> {
        if self.initialized.contains_key(fq) {
            return Ok(());
        }
        self.initialized.insert(fq.to_string(), false);
        let info = self.prog.info(fq);
        if let Some(sup) = info.superclass.clone() {
            self.ensure_init(&sup)?;
        }
        self.sink.begin_capture();
        let result = self.run_static_init(fq);
        let calls = self.sink.end_capture();
        self.init_calls.insert(fq.to_string(), calls);
        self.initialized.insert(fq.to_string(), true);
        result
    }

    fn run_static_init(&mut self, fq: &str) -> R<()> {
        let info = self.prog.info(fq);
        let mut values = BTreeMap::new();
        for f in &info.static_fields {
            values.insert(f.name.clone(), default_value(&f.ty));
        }
        self.statics.insert(fq.to_string(), values);
        for (ordinal, name) in info.constants.iter().enumerate() {
            let obj = self.construct_with(fq, Vec::new(), Some((name.clone(), ordinal)))?;
            self.statics.get_mut(fq).expect("just inserted").insert(name.clone(), obj);
        }
        let mut frame = Frame::new(fq, None);
        for f in &info.static_fields {
            if let Some(init) = &f.init {
                let v = self.eval(&mut frame, init)?;
                self.statics.get_mut(fq).expect("just inserted").insert(f.name.clone(), v);
            }
        }
        Ok(())
    }

    pub fn read_static(&mut self, owner: &str, field: &str) -> R<Value> {
        self.ensure_init(owner)?;
        if self.prog.info(owner).traced {
            self.sink.record(&format!("{owner}.<clinit>()"));
            if let Some(calls) = self.init_calls.get(owner) {
                for c in calls.clone() {
                    self.sink.record(&c);
                }
            }
        }
        Ok(self.statics[owner].get(field).cloned().unwrap_or(Value::Null))
    }

    fn write_static(&mut self, owner: &str, field: &str, v: Value) -> R<()> {
        self.ensure_init(owner)?;
        self.statics.get_mut(owner).expect("initialized").insert(field.to_string(), v);
        Ok(())
    }

    pub fn construct(&mut self, fq: &str, args: Vec<Value>) -> R<Value> {
        if self.prog.info(fq).model.kind == ClassKind::Enum {
            return Err(Raise::throw("TypeError", format!("cannot instantiate enum {fq}")));
        }
        self.ensure_init(fq)?;
        self.construct_with(fq, args, None)
    }

    fn construct_with(&mut self, fq: &str, args: Vec<Value>, constant: Option<(String, usize)>) -> R<Value> {
        let mut chain = self.prog.chain(fq);
        chain.reverse();
        let mut fields = BTreeMap::new();
        for c in &chain {
            for f in &self.prog.info(c).instance_fields {
                fields.insert(f.name.clone(), default_value(&f.ty));
            }
        }
        let obj = Rc::new(RefCell::new(Object {
            class: fq.to_string(),
            fields,
            constant,
        }));
        let arity = args.len();
        let mut args = Some(args);
        for c in chain {
            let info = self.prog.info(c);
            let mut frame = Frame::new(c, Some(obj.clone()));
            for f in &info.instance_fields {
                if let Some(init) = &f.init {
                    let v = self.eval(&mut frame, init)?;
                    obj.borrow_mut().fields.insert(f.name.clone(), v);
                }
            }
            if c == fq {
                let args = args.take().unwrap_or_default();
                match info.ctors.get(&arity) {
                    Some(ctor) => {
                        self.invoke(c, ctor, Some(obj.clone()), args)?;
                    }
                    None if arity == 0 && info.ctors.is_empty() => {}
                    None => {
                        return Err(Raise::throw("UnknownMethod", format!("no constructor {fq}/{arity}")));
                    }
                }
            } else if let Some(ctor) = info.ctors.get(&0) {
                self.invoke(c, ctor, Some(obj.clone()), Vec::new())?;
            }
        }
        Ok(Value::Obj(obj))
    }

    pub fn invoke(&mut self, class: &str, decl: &MethodDecl, this: Option<ObjRef>, args: Vec<Value>) -> R<Value> {
        if self.depth >= MAX_DEPTH {
            return Err(Raise::throw("StackOverflow", format!("call depth {MAX_DEPTH}")));
        }
        self.tick()?;
        let mut frame = Frame::new(class, if decl.is_static { None } else { this });
        for (p, v) in decl.params.iter().zip(args) {
            frame.declare(&p.name, coerce(&p.ty, v));
        }
        self.depth += 1;
        let result = self.exec_block(&mut frame, &decl.body, false);
        self.depth -= 1;
        match result? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Null),
        }
    }

    pub fn exec_block(&mut self, frame: &mut Frame, stmts: &[Stmt], new_scope: bool) -> R<Flow> {
        if new_scope {
            frame.scopes.push(HashMap::new());
        }
        let mut result = Ok(Flow::Normal);
        for s in stmts {
            match self.exec(frame, s) {
                Ok(Flow::Normal) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        if new_scope {
            frame.scopes.pop();
        }
        result
    }

    pub fn exec(&mut self, frame: &mut Frame, stmt: &Stmt) -> R<Flow> {
        self.tick()?;
        match stmt {
            Stmt::VarDecl { ty, name, init } => {
                let v = match init {
                    Some(e) => self.eval(frame, e)?,
                    None => default_value(ty),
                };
                let v = coerce(ty, v);
                frame.declare(name, v);
            }
            Stmt::Assign { target, op, value } => {
                let rhs = self.eval(frame, value)?;
                let v = match op.binary() {
                    None => rhs,
                    Some(bin) => {
                        let cur = self.eval(frame, target)?;
                        binary(bin, cur, rhs)?
                    }
                };
                self.assign(frame, target, v)?;
            }
            Stmt::Expr(e) => {
                self.eval(frame, e)?;
            }
            Stmt::Assert { kind, args } => self.exec_assert(frame, *kind, args)?,
            Stmt::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(frame, e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.eval_bool(frame, cond)? {
                    return self.exec_block(frame, then_block, true);
                } else if let Some(e) = else_block {
                    return self.exec_block(frame, e, true);
                }
            }
            Stmt::While { cond, body } => {
                while self.eval_bool(frame, cond)? {
                    self.tick()?;
                    if let Flow::Return(v) = self.exec_block(frame, body, true)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            Stmt::For {
                init,
                cond,
                update,
                body,
            } => {
                frame.scopes.push(HashMap::new());
                let r = self.exec_for(frame, init.as_deref(), cond.as_ref(), update.as_deref(), body);
                frame.scopes.pop();
                return r;
            }
            Stmt::Trace { entity, body } => {
                self.sink.open(entity);
                let r = self.exec_block(frame, body, false);
                self.sink.close(entity);
                return r;
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_for(
        &mut self,
        frame: &mut Frame,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        update: Option<&Stmt>,
        body: &[Stmt],
    ) -> R<Flow> {
        if let Some(s) = init {
            self.exec(frame, s)?;
        }
        loop {
            self.tick()?;
            if let Some(c) = cond {
                if !self.eval_bool(frame, c)? {
                    return Ok(Flow::Normal);
                }
            }
            if let Flow::Return(v) = self.exec_block(frame, body, true)? {
                return Ok(Flow::Return(v));
            }
            if let Some(s) = update {
                self.exec(frame, s)?;
            }
        }
    }

    fn exec_assert(&mut self, frame: &mut Frame, kind: AssertKind, args: &[Expr]) -> R<()> {
        let vals = args
            .iter()
            .map(|a| self.eval(frame, a))
            .collect::<R<Vec<Value>>>()?;
        let arity_error = || Raise::throw("TypeError", format!("{} with {} arguments", kind.keyword(), args.len()));
        match kind {
            AssertKind::True => {
                let (Some(v), 1..=2) = (vals.first(), vals.len()) else {
                    return Err(arity_error());
                };
                match v {
                    Value::Bool(true) => Ok(()),
                    Value::Bool(false) => {
                        let msg = vals.get(1).map(|m| m.to_string()).unwrap_or_else(|| "expected true".into());
                        Err(Raise::AssertFail(msg))
                    }
                    other => Err(Raise::throw("TypeError", format!("assertTrue on {}", other.type_name()))),
                }
            }
            AssertKind::Eq => {
                if !(2..=3).contains(&vals.len()) {
                    return Err(arity_error());
                }
                if vals[0].near(&vals[1], 0.0) {
                    Ok(())
                } else {
                    Err(Raise::AssertFail(format!("expected {} but was {}", vals[0], vals[1])))
                }
            }
            AssertKind::Near => {
                if vals.len() != 3 {
                    return Err(arity_error());
                }
                let tol = vals[2]
                    .as_f64()
                    .ok_or_else(|| Raise::throw("TypeError", "assertNear tolerance must be numeric"))?;
                if vals[0].near(&vals[1], tol) {
                    Ok(())
                } else {
                    Err(Raise::AssertFail(format!(
                        "expected {} but was {} (tolerance {tol})",
                        vals[0], vals[1]
                    )))
                }
            }
        }
    }

    fn assign(&mut self, frame: &mut Frame, target: &Expr, v: Value) -> R<()> {
        match target {
            Expr::Ident(name) => {
                if let Some(slot) = frame.lookup_mut(name) {
                    *slot = v;
                    return Ok(());
                }
                if let Some(this) = &frame.this {
                    let mut o = this.borrow_mut();
                    if let Some(slot) = o.fields.get_mut(name) {
                        *slot = v;
                        return Ok(());
                    }
                }
                match self.prog.lexical_static(&frame.class, name) {
                    Some(owner) => self.write_static(owner, name, v),
                    None => Err(Raise::throw("UnknownField", format!("no variable {name}"))),
                }
            }
            Expr::Field { target, name } => match self.eval(frame, target)? {
                Value::Obj(o) => {
                    let mut o = o.borrow_mut();
                    match o.fields.get_mut(name) {
                        Some(slot) => {
                            *slot = v;
                            Ok(())
                        }
                        None => Err(Raise::throw("UnknownField", format!("{}.{name}", o.class))),
                    }
                }
                Value::Class(c) => match self.prog.static_owner(&c, name) {
                    Some(owner) => self.write_static(owner, name, v),
                    None => Err(Raise::throw("UnknownField", format!("{c}.{name}"))),
                },
                Value::Null => Err(Raise::throw("NullReceiver", format!("write of .{name}"))),
                other => Err(Raise::throw("TypeError", format!("field write on {}", other.type_name()))),
            },
            _ => Err(Raise::throw("TypeError", "invalid assignment target")),
        }
    }

    fn eval_bool(&mut self, frame: &mut Frame, e: &Expr) -> R<bool> {
        match self.eval(frame, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(Raise::throw("TypeError", format!("condition is {}", other.type_name()))),
        }
    }

    pub fn eval(&mut self, frame: &mut Frame, e: &Expr) -> R<Value> {
        match e {
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::Float(f) => Ok(Value::Float(*f)),
            Expr::Str(s) => Ok(Value::Str(s.as_str().into())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Null => Ok(Value::Null),
            Expr::This => frame
                .this
                .clone()
                .map(Value::Obj)
                .ok_or_else(|| Raise::throw("TypeError", "this in static context")),
            Expr::Ident(name) => self.eval_ident(frame, name),
            Expr::List(items) => {
                let vals = items.iter().map(|i| self.eval(frame, i)).collect::<R<Vec<_>>>()?;
                Ok(Value::List(Rc::new(RefCell::new(vals))))
            }
            Expr::New { class, args } => {
                let fq = self
                    .prog
                    .resolve(class)
                    .ok_or_else(|| Raise::throw("UnknownClass", class.clone()))?
                    .to_string();
                let args = self.eval_args(frame, args)?;
                self.construct(&fq, args)
            }
            Expr::Call { receiver, name, args } => self.eval_call(frame, receiver.as_deref(), name, args),
            Expr::Field { target, name } => match self.eval(frame, target)? {
                Value::Obj(o) => {
                    let o = o.borrow();
                    o.fields
                        .get(name)
                        .cloned()
                        .ok_or_else(|| Raise::throw("UnknownField", format!("{}.{name}", o.class)))
                }
                Value::Class(c) => match self.prog.static_owner(&c, name) {
                    Some(owner) => {
                        let owner = owner.to_string();
                        self.read_static(&owner, name)
                    }
                    None => {
                        // nested class reference `Outer.Inner`
                        let nested = format!("{c}.{name}");
                        match self.prog.resolve(&nested) {
                            Some(fq) => Ok(Value::Class(fq.to_string())),
                            None => Err(Raise::throw("UnknownField", nested)),
                        }
                    }
                },
                Value::Null => Err(Raise::throw("NullReceiver", format!("read of .{name}"))),
                other => Err(Raise::throw("TypeError", format!("field read on {}", other.type_name()))),
            },
            Expr::Unary { op, expr } => {
                let v = self.eval(frame, expr)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
                    (UnOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (_, v) => Err(Raise::throw("TypeError", format!("unary operator on {}", v.type_name()))),
                }
            }
            Expr::Binary { op, lhs, rhs } => match op {
                BinOp::And => Ok(Value::Bool(self.eval_bool(frame, lhs)? && self.eval_bool(frame, rhs)?)),
                BinOp::Or => Ok(Value::Bool(self.eval_bool(frame, lhs)? || self.eval_bool(frame, rhs)?)),
                _ => {
                    let a = self.eval(frame, lhs)?;
                    let b = self.eval(frame, rhs)?;
                    binary(*op, a, b)
                }
            },
            Expr::Throw(name) => Err(Raise::throw(name, "thrown")),
        }
    }

    fn eval_args(&mut self, frame: &mut Frame, args: &[Expr]) -> R<Vec<Value>> {
        args.iter().map(|a| self.eval(frame, a)).collect()
    }

    fn eval_ident(&mut self, frame: &mut Frame, name: &str) -> R<Value> {
        if let Some(v) = frame.lookup(name) {
            return Ok(v.clone());
        }
        if let Some(this) = &frame.this {
            if let Some(v) = this.borrow().fields.get(name) {
                return Ok(v.clone());
            }
        }
        if let Some(owner) = self.prog.lexical_static(&frame.class, name) {
            let owner = owner.to_string();
            return self.read_static(&owner, name);
        }
        if let Some(fq) = self.prog.resolve(name) {
            return Ok(Value::Class(fq.to_string()));
        }
        Err(Raise::throw("UnknownField", format!("no variable {name}")))
    }

    fn is_shadowed(&self, frame: &Frame, name: &str) -> bool {
        frame.lookup(name).is_some()
            || frame.this.as_ref().is_some_and(|t| t.borrow().fields.contains_key(name))
            || self.prog.lexical_static(&frame.class, name).is_some()
    }

    fn eval_call(&mut self, frame: &mut Frame, receiver: Option<&Expr>, name: &str, args: &[Expr]) -> R<Value> {
        let Some(receiver) = receiver else {
            if name == "print" {
                let vals = self.eval_args(frame, args)?;
                let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                self.output.push(line.join(" "));
                return Ok(Value::Null);
            }
            return self.call_implicit(frame, name, args);
        };
        if let Expr::Ident(ns) = receiver {
            if (ns == "sys" || ns == "math") && !self.is_shadowed(frame, ns) {
                let vals = self.eval_args(frame, args)?;
                return self.builtin(ns, name, vals);
            }
        }
        let recv = self.eval(frame, receiver)?;
        let vals = self.eval_args(frame, args)?;
        self.call_on(recv, name, vals)
    }

    fn call_implicit(&mut self, frame: &mut Frame, name: &str, args: &[Expr]) -> R<Value> {
        let vals = self.eval_args(frame, args)?;
        let lexical = self.prog.find_method(&frame.class, name, vals.len());
        if let Some((owner, decl)) = lexical {
            if decl.is_static {
                let owner = owner.to_string();
                self.ensure_init(&owner)?;
                return self.invoke(&owner, decl, None, vals);
            }
        }
        if let Some(this) = frame.this.clone() {
            return self.call_on(Value::Obj(this), name, vals);
        }
        // static context: enclosing classes' statics
        let mut cur = self.prog.info(&frame.class).outer.clone();
        while let Some(c) = cur {
            if let Some((owner, decl)) = self.prog.find_method(&c, name, vals.len()) {
                if decl.is_static {
                    let owner = owner.to_string();
                    self.ensure_init(&owner)?;
                    return self.invoke(&owner, decl, None, vals);
                }
            }
            cur = self.prog.info(&c).outer.clone();
        }
        Err(Raise::throw("UnknownMethod", format!("{}.{name}/{}", frame.class, vals.len())))
    }

    pub fn call_on(&mut self, recv: Value, name: &str, args: Vec<Value>) -> R<Value> {
        match recv {
            Value::Obj(o) => {
                let class = o.borrow().class.clone();
                if let Some((owner, decl)) = self.prog.find_method(&class, name, args.len()) {
                    let owner = owner.to_string();
                    return self.invoke(&owner, decl, Some(o), args);
                }
                let constant = o.borrow().constant.clone();
                match (constant, name, args.len()) {
                    (Some((_, ord)), "ordinal", 0) => Ok(Value::Int(ord as i64)),
                    (Some((n, _)), "name", 0) => Ok(Value::Str(n.as_str().into())),
                    _ => Err(Raise::throw("UnknownMethod", format!("{class}.{name}/{}", args.len()))),
                }
            }
            Value::Class(c) => match self.prog.find_method(&c, name, args.len()) {
                Some((owner, decl)) if decl.is_static => {
                    let owner = owner.to_string();
                    self.ensure_init(&owner)?;
                    self.invoke(&owner, decl, None, args)
                }
                _ => Err(Raise::throw("UnknownMethod", format!("static {c}.{name}/{}", args.len()))),
            },
            Value::List(l) => list_method(&l, name, args),
            Value::Null => Err(Raise::throw("NullReceiver", format!("call of {name}"))),
            other => Err(Raise::throw("UnknownMethod", format!("{}.{name}", other.type_name()))),
        }
    }

    fn builtin(&mut self, ns: &str, name: &str, args: Vec<Value>) -> R<Value> {
        match (ns, name, args.as_slice()) {
            ("sys", "sleep", [_]) => Ok(Value::Null),
            ("sys", "trace", [Value::Str(sig)]) => {
                self.sink.record(sig);
                Ok(Value::Null)
            }
            ("math", "abs", [Value::Int(i)]) => Ok(Value::Int(i.wrapping_abs())),
            ("math", "pow", [a, b]) => {
                let (a, b) = (num(a)?, num(b)?);
                Ok(Value::Float(a.powf(b)))
            }
            ("math", f, [a]) => {
                let x = num(a)?;
                let r = match f {
                    "exp" => x.exp(),
                    "sin" => x.sin(),
                    "cos" => x.cos(),
                    "sqrt" => x.sqrt(),
                    "abs" => x.abs(),
                    "log" => x.ln(),
                    _ => return Err(Raise::throw("UnknownMethod", format!("math.{f}"))),
                };
                Ok(Value::Float(r))
            }
            _ => Err(Raise::throw("UnknownMethod", format!("{ns}.{name}/{}", args.len()))),
        }
    }
}

fn num(v: &Value) -> R<f64> {
    v.as_f64()
        .ok_or_else(|| Raise::throw("TypeError", format!("expected a number, got {}", v.type_name())))
}

fn coerce(ty: &TypeName, v: Value) -> Value {
    match (ty, v) {
        (TypeName::Float, Value::Int(i)) => Value::Float(i as f64),
        (_, v) => v,
    }
}

fn list_method(l: &Rc<RefCell<Vec<Value>>>, name: &str, args: Vec<Value>) -> R<Value> {
    let index = |v: &Value, len: usize| -> R<usize> {
        match v {
            Value::Int(i) if *i >= 0 && (*i as usize) < len => Ok(*i as usize),
            Value::Int(i) => Err(Raise::throw("IndexOutOfBounds", format!("{i} of {len}"))),
            other => Err(Raise::throw("TypeError", format!("index is {}", other.type_name()))),
        }
    };
    let mut args = args;
    match (name, args.len()) {
        ("push", 1) => {
            l.borrow_mut().push(args.remove(0));
            Ok(Value::Null)
        }
        ("put", 2) => {
            let len = l.borrow().len();
            let i = index(&args[0], len)?;
            l.borrow_mut()[i] = args.remove(1);
            Ok(Value::Null)
        }
        ("get", 1) => {
            let len = l.borrow().len();
            let i = index(&args[0], len)?;
            Ok(l.borrow()[i].clone())
        }
        ("size", 0) => Ok(Value::Int(l.borrow().len() as i64)),
        _ => Err(Raise::throw("UnknownMethod", format!("List.{name}/{}", args.len()))),
    }
}

pub fn binary(op: BinOp, a: Value, b: Value) -> R<Value> {
    use Value::*;
    match op {
        BinOp::Eq => return Ok(Bool(a.identical(&b))),
        BinOp::Ne => return Ok(Bool(!a.identical(&b))),
        BinOp::Add => {
            if matches!(a, Str(_)) || matches!(b, Str(_)) {
                return Ok(Str(format!("{a}{b}").into()));
            }
        }
        BinOp::And | BinOp::Or => {
            return match (a, b) {
                (Bool(x), Bool(y)) => Ok(Bool(if op == BinOp::And { x && y } else { x || y })),
                _ => Err(Raise::throw("TypeError", "logical operator on non-bool")),
            };
        }
        _ => {}
    }
    match (&a, &b) {
        (Int(x), Int(y)) => {
            let (x, y) = (*x, *y);
            Ok(match op {
                BinOp::Add => Int(x.wrapping_add(y)),
                BinOp::Sub => Int(x.wrapping_sub(y)),
                BinOp::Mul => Int(x.wrapping_mul(y)),
                BinOp::Div | BinOp::Rem if y == 0 => return Err(Raise::throw("DivByZero", "integer division by zero")),
                BinOp::Div => Int(x.wrapping_div(y)),
                BinOp::Rem => Int(x.wrapping_rem(y)),
                BinOp::Lt => Bool(x < y),
                BinOp::Le => Bool(x <= y),
                BinOp::Gt => Bool(x > y),
                BinOp::Ge => Bool(x >= y),
                _ => unreachable!("handled above"),
            })
        }
        _ => {
            let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
                return Err(Raise::throw(
                    "TypeError",
                    format!("{} {} {}", a.type_name(), op.symbol(), b.type_name()),
                ));
            };
            Ok(match op {
                BinOp::Add => Float(x + y),
                BinOp::Sub => Float(x - y),
                BinOp::Mul => Float(x * y),
                BinOp::Div => Float(x / y),
                BinOp::Rem => Float(x % y),
                BinOp::Lt => Bool(x < y),
                BinOp::Le => Bool(x <= y),
                BinOp::Gt => Bool(x > y),
                BinOp::Ge => Bool(x >= y),
                _ => unreachable!("handled above"),
            })
        }
    }
}
