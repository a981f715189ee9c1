//! Parser for the `.adm` modeling language.
//!
//! Parsing runs in two passes. The first is a recursive-descent pass over the
//! token stream that stops at the first lexical or syntax error. The second
//! instantiates the component tree from the `root` declaration and resolves
//! every name (component types, error models, features, states, occurrence
//! keys); it reports all unresolved or duplicate names it finds, not just the
//! first. Declarations are order independent, so forward references work.
//!
//! Checks that do not involve name resolution (feature directions, binding
//! categories, initial states, ...) are left to
//! [`validate_architecture`](crate::aadl::validate_architecture).

mod lexer;
mod printer;

use std::collections::{BTreeMap, BTreeSet};

use crate::aadl::{
    ArchitectureModel, Binding, BusAccess, Category, ComponentInstance, Connection, Direction,
    Endpoint, ErrorModelBinding, ErrorModelType, ErrorTransition, EventDecl, Feature, GuardEffect,
    GuardInRule, Occurrence, PropagationDecl, StateDecl, StateExpr, StateMapping, Trigger,
};
use crate::diagnostic::{Diagnostic, SourceSpan};
use lexer::{tokenize, Tok, Token};

pub use printer::print_model;

/// Parse a complete model. On failure at least one error diagnostic is
/// returned, each with a span into `text`.
pub fn parse_model(text: &str, file: &str) -> Result<ArchitectureModel, Vec<Diagnostic>> {
    let tokens = tokenize(text, file).map_err(|d| vec![d])?;
    let ast = Parser::new(tokens).model().map_err(|d| vec![d])?;
    Resolver::new().resolve(ast)
}

/// Parse a standalone state mapping expression such as
/// `not (A[Failed] or B[Failed])`.
pub fn parse_state_mapping_expr(text: &str) -> Result<StateExpr, Diagnostic> {
    let tokens = tokenize(text, "<expr>")?;
    let mut p = Parser::new(tokens);
    let expr = p.expr()?;
    p.expect(Tok::Eof, "end of expression")?;
    Ok(expr)
}

struct QRef {
    segments: Vec<String>,
    span: SourceSpan,
}

impl QRef {
    fn text(&self) -> String {
        self.segments.join(".")
    }
}

struct AnnexAst {
    type_name: String,
    span: SourceSpan,
    overrides: Vec<(String, Occurrence, SourceSpan)>,
    guards: Vec<GuardInRule>,
}

enum Item {
    Feature(Feature),
    Sub {
        name: String,
        type_name: String,
        span: SourceSpan,
    },
    Connect(QRef, QRef, SourceSpan),
    Bind(QRef, QRef, SourceSpan),
    Access(QRef, QRef, SourceSpan),
    Annex(AnnexAst),
    Mapping(StateMapping),
}

struct CompType {
    category: Category,
    name: String,
    span: SourceSpan,
    items: Vec<Item>,
}

struct ModelAst {
    error_types: Vec<ErrorModelType>,
    comp_types: Vec<CompType>,
    root: (String, SourceSpan),
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn syntax_error<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        Err(Diagnostic::error(
            format!(
                "syntax error: expected {expected}, found {}",
                t.tok.describe()
            ),
            Some(t.span.clone()),
        ))
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.is_keyword(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> PResult<SourceSpan> {
        if self.is_keyword(word) {
            Ok(self.bump().span)
        } else {
            self.syntax_error(&format!("'{word}'"))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<SourceSpan> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            self.syntax_error(what)
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => self.syntax_error(what),
        }
    }

    fn real(&mut self) -> PResult<f64> {
        match self.peek().tok {
            Tok::Real(x) => {
                self.bump();
                Ok(x)
            }
            _ => self.syntax_error("number"),
        }
    }

    fn semi(&mut self) -> PResult<()> {
        self.expect(Tok::Semi, "';'").map(|_| ())
    }

    fn model(&mut self) -> PResult<ModelAst> {
        let mut error_types = Vec::new();
        let mut comp_types = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Ident(w) if w == "error" => error_types.push(self.error_type()?),
                Tok::Ident(w) if w == "root" => {
                    self.bump();
                    let root = self.ident("component type name")?;
                    self.semi()?;
                    self.expect(Tok::Eof, "end of input")?;
                    return Ok(ModelAst {
                        error_types,
                        comp_types,
                        root,
                    });
                }
                Tok::Ident(w) if Category::from_keyword(w).is_some() => {
                    comp_types.push(self.comp_type()?)
                }
                Tok::Eof if !(error_types.is_empty() && comp_types.is_empty()) => {
                    return Err(Diagnostic::error(
                        "syntax error: missing root declaration",
                        Some(t.span),
                    ))
                }
                _ => {
                    return Err(Diagnostic::error(
                        "syntax error: expected component declaration",
                        Some(t.span),
                    ))
                }
            }
        }
    }

    fn occurrence(&mut self) -> PResult<Occurrence> {
        if self.eat_keyword("poisson") {
            Ok(Occurrence::Poisson(self.real()?))
        } else if self.eat_keyword("fixed") {
            Ok(Occurrence::Fixed(self.real()?))
        } else {
            self.syntax_error("'poisson' or 'fixed'")
        }
    }

    fn direction(&mut self) -> PResult<Direction> {
        if self.eat_keyword("in") {
            Ok(Direction::In)
        } else if self.eat_keyword("out") {
            Ok(Direction::Out)
        } else {
            self.syntax_error("'in' or 'out'")
        }
    }

    fn section<T>(
        &mut self,
        name: &str,
        mut entry: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Vec<T>> {
        self.keyword(name)?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut out = Vec::new();
        while self.peek().tok != Tok::RBrace {
            if self.peek().tok == Tok::Eof {
                return self.syntax_error("'}'");
            }
            out.push(entry(self)?);
        }
        self.bump();
        Ok(out)
    }

    fn error_type(&mut self) -> PResult<ErrorModelType> {
        self.keyword("error")?;
        self.keyword("model")?;
        let (name, span) = self.ident("error model name")?;
        self.expect(Tok::LBrace, "'{'")?;
        let states = self.section("states", |p| {
            let (name, span) = p.ident("state name")?;
            let initial = if p.peek().tok == Tok::Colon {
                p.bump();
                p.keyword("initial")?;
                true
            } else {
                false
            };
            p.semi()?;
            Ok(StateDecl {
                name,
                initial,
                span,
            })
        })?;
        let events = self.section("events", |p| {
            let (name, span) = p.ident("event name")?;
            let occurrence = if p.eat_keyword("occurrence") {
                Some(p.occurrence()?)
            } else {
                None
            };
            p.semi()?;
            Ok(EventDecl {
                name,
                occurrence,
                span,
            })
        })?;
        let propagations = self.section("propagations", |p| {
            let (name, span) = p.ident("propagation name")?;
            p.expect(Tok::Colon, "':'")?;
            let direction = p.direction()?;
            let occurrence = if p.eat_keyword("occurrence") {
                Some(p.occurrence()?)
            } else {
                None
            };
            p.semi()?;
            Ok(PropagationDecl {
                name,
                direction,
                occurrence,
                span,
            })
        })?;
        let transitions = self.section("transitions", |p| {
            let (source, span) = p.ident("source state")?;
            p.expect(Tok::TransOpen, "'-['")?;
            let trigger = match (&p.peek().tok, p.peek_at(1)) {
                (Tok::Ident(w), Tok::Ident(_)) if w == "in" => {
                    p.bump();
                    Trigger::In(p.ident("propagation name")?.0)
                }
                (Tok::Ident(w), Tok::Ident(_)) if w == "out" => {
                    p.bump();
                    Trigger::Out(p.ident("propagation name")?.0)
                }
                _ => Trigger::Event(p.ident("event or propagation")?.0),
            };
            p.expect(Tok::TransClose, "']->'")?;
            let (destination, _) = p.ident("destination state")?;
            p.semi()?;
            Ok(ErrorTransition {
                source,
                trigger,
                destination,
                span,
            })
        })?;
        self.expect(Tok::RBrace, "'}'")?;
        Ok(ErrorModelType {
            name,
            states,
            events,
            propagations,
            transitions,
            span,
        })
    }

    fn qref(&mut self) -> PResult<QRef> {
        let (first, span) = self.ident("name")?;
        let mut segments = vec![first];
        while self.peek().tok == Tok::Dot {
            self.bump();
            segments.push(self.ident("name")?.0);
        }
        Ok(QRef { segments, span })
    }

    fn comp_type(&mut self) -> PResult<CompType> {
        let (word, _) = self.ident("component category")?;
        let category = Category::from_keyword(&word).expect("checked by caller");
        let (name, span) = self.ident("component type name")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut items = Vec::new();
        loop {
            let t = self.peek().clone();
            let item = match &t.tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(w) => match w.as_str() {
                    "feature" => {
                        self.bump();
                        let (name, span) = self.ident("feature name")?;
                        self.expect(Tok::Colon, "':'")?;
                        let direction = self.direction()?;
                        self.keyword("port")?;
                        self.semi()?;
                        Item::Feature(Feature {
                            name,
                            direction,
                            span,
                        })
                    }
                    "sub" => {
                        self.bump();
                        let (name, span) = self.ident("subcomponent name")?;
                        self.expect(Tok::Colon, "':'")?;
                        let (type_name, _) = self.ident("component type name")?;
                        self.semi()?;
                        Item::Sub {
                            name,
                            type_name,
                            span,
                        }
                    }
                    "connect" | "bind" | "access" => {
                        let kind = w.clone();
                        self.bump();
                        let from = self.qref()?;
                        self.expect(Tok::Arrow, "'->'")?;
                        let to = self.qref()?;
                        self.semi()?;
                        let span = t.span.clone();
                        match kind.as_str() {
                            "connect" => Item::Connect(from, to, span),
                            "bind" => Item::Bind(from, to, span),
                            _ => Item::Access(from, to, span),
                        }
                    }
                    "annex" => Item::Annex(self.annex()?),
                    "state_mapping" => {
                        self.bump();
                        let (label, span) = self.ident("mapping label")?;
                        self.expect(Tok::FatArrow, "'=>'")?;
                        let expr = self.expr()?;
                        self.semi()?;
                        Item::Mapping(StateMapping { label, expr, span })
                    }
                    _ => return self.syntax_error("component item"),
                },
                _ => return self.syntax_error("component item or '}'"),
            };
            items.push(item);
        }
        Ok(CompType {
            category,
            name,
            span,
            items,
        })
    }

    fn annex(&mut self) -> PResult<AnnexAst> {
        self.keyword("annex")?;
        self.keyword("error_model")?;
        self.expect(Tok::LBrace, "'{'")?;
        let span = self.keyword("use")?;
        let (type_name, _) = self.ident("error model name")?;
        self.semi()?;
        let mut overrides = Vec::new();
        let mut guards = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.bump();
                break;
            }
            if self.is_keyword("occurrence") {
                self.bump();
                let (name, span) = self.ident("event or propagation name")?;
                self.expect(Tok::FatArrow, "'=>'")?;
                let occ = self.occurrence()?;
                self.semi()?;
                overrides.push((name, occ, span));
            } else if self.is_keyword("guard_in") {
                let span = self.bump().span;
                self.expect(Tok::LParen, "'('")?;
                let mut condition = vec![self.ident("propagation name")?.0];
                while self.eat_keyword("or") {
                    condition.push(self.ident("propagation name")?.0);
                }
                self.expect(Tok::RParen, "')'")?;
                self.keyword("on")?;
                let (feature, _) = self.ident("feature name")?;
                self.expect(Tok::FatArrow, "'=>'")?;
                let effect = if self.eat_keyword("raise") {
                    GuardEffect::Raise(self.ident("propagation name")?.0)
                } else if self.eat_keyword("mask") {
                    GuardEffect::Mask
                } else {
                    return self.syntax_error("'raise' or 'mask'");
                };
                self.semi()?;
                guards.push(GuardInRule {
                    feature,
                    condition,
                    effect,
                    span,
                });
            } else {
                return self.syntax_error("'occurrence', 'guard_in' or '}'");
            }
        }
        Ok(AnnexAst {
            type_name,
            span,
            overrides,
            guards,
        })
    }

    fn expr(&mut self) -> PResult<StateExpr> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            lhs = lhs.or(self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<StateExpr> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("and") {
            lhs = lhs.and(self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<StateExpr> {
        if self.eat_keyword("not") {
            return Ok(self.not_expr()?.not());
        }
        if self.peek().tok == Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(e);
        }
        if !matches!(self.peek().tok, Tok::Ident(_)) {
            return self.syntax_error("component reference");
        }
        let path = self.qref()?;
        self.expect(Tok::LBracket, "'['")?;
        let (state, _) = self.ident("state name")?;
        self.expect(Tok::RBracket, "']'")?;
        Ok(StateExpr::atom(path.text(), state))
    }
}

struct PendingLink {
    owner: String,
    from: QRef,
    to: QRef,
    span: SourceSpan,
}

/// Occurrence overrides of one annex, keyed by the owning instance path.
type AnnexOverrides = (String, Vec<(String, Occurrence, SourceSpan)>);

struct Resolver {
    diags: Vec<Diagnostic>,
    connects: Vec<PendingLink>,
    binds: Vec<PendingLink>,
    accesses: Vec<PendingLink>,
    annex_overrides: Vec<AnnexOverrides>,
}

impl Resolver {
    fn new() -> Self {
        Resolver {
            diags: Vec::new(),
            connects: Vec::new(),
            binds: Vec::new(),
            accesses: Vec::new(),
            annex_overrides: Vec::new(),
        }
    }

    fn error(&mut self, message: String, span: &SourceSpan) {
        self.diags
            .push(Diagnostic::error(message, Some(span.clone())));
    }

    fn resolve(mut self, ast: ModelAst) -> Result<ArchitectureModel, Vec<Diagnostic>> {
        let mut error_types = BTreeMap::new();
        for ty in ast.error_types {
            self.check_error_type(&ty);
            if error_types.contains_key(&ty.name) {
                self.error(
                    format!("duplicate declaration: error model {}", ty.name),
                    &ty.span,
                );
            } else {
                error_types.insert(ty.name.clone(), ty);
            }
        }
        let mut comp_types: BTreeMap<&str, &CompType> = BTreeMap::new();
        for ct in &ast.comp_types {
            self.check_comp_type(ct);
            if comp_types.contains_key(ct.name.as_str()) {
                self.error(
                    format!("duplicate declaration: component type {}", ct.name),
                    &ct.span,
                );
            } else {
                comp_types.insert(&ct.name, ct);
            }
        }

        let (root_name, root_span) = ast.root;
        let Some(root_ty) = comp_types.get(root_name.as_str()).copied() else {
            self.error(
                format!("unresolved reference: component type {root_name}"),
                &root_span,
            );
            return Err(self.finish());
        };
        let mut stack = vec![root_name.clone()];
        let root = self.instantiate(
            root_ty,
            &root_name,
            root_name.clone(),
            root_span,
            &comp_types,
            &mut stack,
        );

        let mut model = ArchitectureModel {
            error_types,
            root,
            connections: Vec::new(),
            bindings: Vec::new(),
            bus_accesses: Vec::new(),
        };
        self.resolve_links(&mut model);
        self.resolve_annexes(&model);
        self.resolve_mappings(&model);

        if self.diags.is_empty() {
            Ok(model)
        } else {
            Err(self.finish())
        }
    }

    fn finish(self) -> Vec<Diagnostic> {
        let mut seen = BTreeSet::new();
        self.diags
            .into_iter()
            .filter(|d| {
                let key = d.span.as_ref().map(|s| (s.line, s.column));
                seen.insert((d.message.clone(), key))
            })
            .collect()
    }

    fn check_error_type(&mut self, ty: &ErrorModelType) {
        let mut states = BTreeSet::new();
        for s in &ty.states {
            if !states.insert(s.name.as_str()) {
                self.error(format!("duplicate declaration: state {}", s.name), &s.span);
            }
        }
        let mut names = BTreeSet::new();
        for (name, span) in ty
            .events
            .iter()
            .map(|e| (&e.name, &e.span))
            .chain(ty.propagations.iter().map(|p| (&p.name, &p.span)))
        {
            if !names.insert(name.as_str()) {
                self.error(
                    format!("duplicate declaration: event or propagation {name}"),
                    span,
                );
            }
        }
        for t in &ty.transitions {
            for s in [&t.source, &t.destination] {
                if !ty.has_state(s) {
                    self.error(format!("unresolved reference: state {s}"), &t.span);
                }
            }
            let found = match &t.trigger {
                Trigger::Event(n) => ty.event(n).is_some(),
                Trigger::In(n) => ty.has_propagation(n, Direction::In),
                Trigger::Out(n) => ty.has_propagation(n, Direction::Out),
            };
            if !found {
                let what = match &t.trigger {
                    Trigger::Event(_) => "event",
                    Trigger::In(_) => "in propagation",
                    Trigger::Out(_) => "out propagation",
                };
                self.error(
                    format!("unresolved reference: {what} {}", t.trigger.name()),
                    &t.span,
                );
            }
        }
    }

    fn check_comp_type(&mut self, ct: &CompType) {
        let mut features = BTreeSet::new();
        let mut subs = BTreeSet::new();
        let mut labels = BTreeSet::new();
        let mut annexes = 0;
        for item in &ct.items {
            match item {
                Item::Feature(f) => {
                    if !features.insert(f.name.as_str()) {
                        self.error(
                            format!("duplicate declaration: feature {}", f.name),
                            &f.span,
                        );
                    }
                }
                Item::Sub { name, span, .. } => {
                    if !subs.insert(name.as_str()) {
                        self.error(format!("duplicate declaration: subcomponent {name}"), span);
                    }
                }
                Item::Mapping(m) => {
                    if !labels.insert(m.label.as_str()) {
                        self.error(
                            format!("duplicate declaration: state_mapping {}", m.label),
                            &m.span,
                        );
                    }
                }
                Item::Annex(a) => {
                    annexes += 1;
                    if annexes > 1 {
                        self.error(
                            format!("duplicate declaration: error model annex in {}", ct.name),
                            &a.span,
                        );
                    }
                    let mut keys = BTreeSet::new();
                    for (name, _, span) in &a.overrides {
                        if !keys.insert(name.as_str()) {
                            self.error(format!("duplicate declaration: occurrence {name}"), span);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn instantiate(
        &mut self,
        ct: &CompType,
        name: &str,
        path: String,
        span: SourceSpan,
        types: &BTreeMap<&str, &CompType>,
        stack: &mut Vec<String>,
    ) -> ComponentInstance {
        let mut inst = ComponentInstance {
            path: path.clone(),
            name: name.to_string(),
            category: ct.category,
            type_name: ct.name.clone(),
            features: Vec::new(),
            subcomponents: Vec::new(),
            error_model: None,
            state_mapping: Vec::new(),
            span,
        };
        for item in &ct.items {
            match item {
                Item::Feature(f) => {
                    if inst.feature(&f.name).is_none() {
                        inst.features.push(f.clone());
                    }
                }
                Item::Sub {
                    name: sub_name,
                    type_name,
                    span,
                } => {
                    if inst.subcomponents.iter().any(|s| &s.name == sub_name) {
                        continue;
                    }
                    let Some(sub_ty) = types.get(type_name.as_str()).copied() else {
                        self.error(
                            format!("unresolved reference: component type {type_name}"),
                            span,
                        );
                        continue;
                    };
                    if stack.contains(type_name) {
                        self.error(
                            format!("recursive instantiation: component type {type_name}"),
                            span,
                        );
                        continue;
                    }
                    stack.push(type_name.clone());
                    let child = self.instantiate(
                        sub_ty,
                        sub_name,
                        format!("{path}.{sub_name}"),
                        span.clone(),
                        types,
                        stack,
                    );
                    stack.pop();
                    inst.subcomponents.push(child);
                }
                Item::Connect(from, to, span)
                | Item::Bind(from, to, span)
                | Item::Access(from, to, span) => {
                    let pending = PendingLink {
                        owner: path.clone(),
                        from: QRef {
                            segments: from.segments.clone(),
                            span: from.span.clone(),
                        },
                        to: QRef {
                            segments: to.segments.clone(),
                            span: to.span.clone(),
                        },
                        span: span.clone(),
                    };
                    match item {
                        Item::Connect(..) => self.connects.push(pending),
                        Item::Bind(..) => self.binds.push(pending),
                        _ => self.accesses.push(pending),
                    }
                }
                Item::Annex(a) => {
                    if inst.error_model.is_some() {
                        continue;
                    }
                    inst.error_model = Some(ErrorModelBinding {
                        type_name: a.type_name.clone(),
                        occurrence_overrides: a
                            .overrides
                            .iter()
                            .map(|(n, o, _)| (n.clone(), *o))
                            .collect(),
                        guard_in_rules: a.guards.clone(),
                        span: a.span.clone(),
                    });
                    self.annex_overrides
                        .push((path.clone(), a.overrides.clone()));
                }
                Item::Mapping(m) => {
                    if inst.mapping(&m.label).is_none() {
                        inst.state_mapping.push(m.clone());
                    }
                }
            }
        }
        inst
    }

    fn component_path(owner: &str, segments: &[String]) -> String {
        if segments.is_empty() {
            owner.to_string()
        } else {
            format!("{owner}.{}", segments.join("."))
        }
    }

    fn endpoint(&mut self, model: &ArchitectureModel, owner: &str, q: &QRef) -> Option<Endpoint> {
        let (feature, comp) = q.segments.split_last().expect("qref has a segment");
        let component = Self::component_path(owner, comp);
        let Some(c) = model.component(&component) else {
            self.error(
                format!("unresolved reference: component {}", comp.join(".")),
                &q.span,
            );
            return None;
        };
        if c.feature(feature).is_none() {
            self.error(
                format!("unresolved reference: feature {}", q.text()),
                &q.span,
            );
            return None;
        }
        Some(Endpoint {
            component,
            feature: feature.clone(),
        })
    }

    fn component_ref(
        &mut self,
        model: &ArchitectureModel,
        owner: &str,
        q: &QRef,
    ) -> Option<String> {
        let path = Self::component_path(owner, &q.segments);
        if model.component(&path).is_none() {
            self.error(
                format!("unresolved reference: component {}", q.text()),
                &q.span,
            );
            return None;
        }
        Some(path)
    }

    fn resolve_links(&mut self, model: &mut ArchitectureModel) {
        for p in std::mem::take(&mut self.connects) {
            let src = self.endpoint(model, &p.owner, &p.from);
            let dst = self.endpoint(model, &p.owner, &p.to);
            if let (Some(source), Some(target)) = (src, dst) {
                model.connections.push(Connection {
                    owner: p.owner,
                    source,
                    target,
                    span: p.span,
                });
            }
        }
        for p in std::mem::take(&mut self.binds) {
            let app = self.component_ref(model, &p.owner, &p.from);
            let plat = self.component_ref(model, &p.owner, &p.to);
            if let (Some(application), Some(platform)) = (app, plat) {
                model.bindings.push(Binding {
                    owner: p.owner,
                    application,
                    platform,
                    span: p.span,
                });
            }
        }
        for p in std::mem::take(&mut self.accesses) {
            let acc = self.component_ref(model, &p.owner, &p.from);
            let bus = self.component_ref(model, &p.owner, &p.to);
            if let (Some(accessor), Some(bus)) = (acc, bus) {
                model.bus_accesses.push(BusAccess {
                    owner: p.owner,
                    accessor,
                    bus,
                    span: p.span,
                });
            }
        }
    }

    fn resolve_annexes(&mut self, model: &ArchitectureModel) {
        let overrides = std::mem::take(&mut self.annex_overrides);
        for (path, entries) in overrides {
            let c = model.component(&path).expect("instantiated component");
            let binding = c.error_model.as_ref().expect("annex recorded");
            let Some(ty) = model.error_types.get(&binding.type_name) else {
                self.error(
                    format!("unresolved reference: error model {}", binding.type_name),
                    &binding.span,
                );
                continue;
            };
            for (name, _, span) in &entries {
                if ty.event(name).is_none() && ty.propagation(name).is_none() {
                    self.error(
                        format!("unresolved reference: event or propagation {name}"),
                        span,
                    );
                }
            }
            for rule in &binding.guard_in_rules {
                if c.feature(&rule.feature).is_none() {
                    self.error(
                        format!("unresolved reference: feature {}", rule.feature),
                        &rule.span,
                    );
                }
                if let GuardEffect::Raise(n) = &rule.effect {
                    if ty.propagation(n).is_none() {
                        self.error(format!("unresolved reference: propagation {n}"), &rule.span);
                    }
                }
            }
        }
    }

    fn resolve_mappings(&mut self, model: &ArchitectureModel) {
        for c in model.components() {
            for m in &c.state_mapping {
                for (rel, state) in m.expr.atoms() {
                    let Some(target) = model.component(&format!("{}.{rel}", c.path)) else {
                        self.error(format!("unresolved reference: component {rel}"), &m.span);
                        continue;
                    };
                    let ty = target
                        .error_model
                        .as_ref()
                        .and_then(|b| model.error_types.get(&b.type_name));
                    if let Some(ty) = ty {
                        if !ty.has_state(state) {
                            self.error(
                                format!("unresolved reference: state {state} in component {rel}"),
                                &m.span,
                            );
                        }
                    }
                }
            }
        }
    }
}
