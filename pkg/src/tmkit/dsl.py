"""Textual DSL for authoring TM models, with a round-trip serializer.

The grammar is line-oriented with block braces; statements end at a
newline or a semicolon, comments run from ``#`` to end of line, and the
five stage names are keywords. See docs/grammar.md for the EBNF.

Parsing yields a Document: the static model plus any rules, event
catalog and behavior sections the file declares. Ids are derived from
declared names (stages as ``thimac.kind``; arcs numbered in declaration
order), so serialize followed by parse reproduces the document exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from . import expr as _expr
from .behavior import BehaviorGraph, BehaviorError, RecurrenceSpec, build_behavior
from .engine import Assignment, Outcome, RuleSet, UpdateRule
from .events import EventCatalog, EventError, define_event
from .model import (
    Flow,
    Model,
    Stage,
    StageKind,
    Thimac,
    Trigger,
    Variable,
)

KIND_WORDS = {kind.value: kind for kind in StageKind}
VAR_KEYWORDS = {"var": "state", "const": "constant", "input": "input"}


@dataclass(frozen=True)
class SourceText:
    text: str
    origin: str = "<inline>"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Document:
    name: str
    model: Model
    rules: RuleSet
    catalog: EventCatalog
    graph: BehaviorGraph | None


@dataclass(frozen=True)
class ParseResult:
    document: Document | None
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.document is not None

    def errors(self) -> tuple[ParseDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")


# --- tokenizer ---------------------------------------------------------------

_SYMBOLS = ("->", "..", "{", "}", ".", ",", "=", "(", ")", "+", "-", "*", "/")


@dataclass(frozen=True)
class _Token:
    type: str  # IDENT NUMBER STRING SYM NEWLINE EOF
    text: str
    line: int
    col: int


class _TokenError(Exception):
    def __init__(self, line: int, col: int, message: str) -> None:
        super().__init__(message)
        self.line = line
        self.col = col
        self.message = message


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)

    def emit(type_: str, tok_text: str, tok_line: int, tok_col: int) -> None:
        if type_ == "NEWLINE" and tokens and tokens[-1].type in ("NEWLINE", ""):
            return
        tokens.append(_Token(type_, tok_text, tok_line, tok_col))

    while i < n:
        ch = text[i]
        if ch == "\n":
            emit("NEWLINE", "\n", line, col)
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            i += 1
            col += 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == ";":
            emit("NEWLINE", ";", line, col)
            i += 1
            col += 1
        elif ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buff: list[str] = []
            closed = False
            while i < n:
                c = text[i]
                if c == "\\" and i + 1 < n:
                    escape = text[i + 1]
                    buff.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(escape, escape))
                    i += 2
                    col += 2
                elif c == '"':
                    closed = True
                    i += 1
                    col += 1
                    break
                elif c == "\n":
                    break
                else:
                    buff.append(c)
                    i += 1
                    col += 1
            if not closed:
                raise _TokenError(start_line, start_col, "unterminated string literal")
            emit("STRING", "".join(buff), start_line, start_col)
        elif text.startswith("->", i) or text.startswith("..", i):
            emit("SYM", text[i:i + 2], line, col)
            i += 2
            col += 2
        elif ch in "{}.,=()+-*/":
            emit("SYM", ch, line, col)
            i += 1
            col += 1
        elif ch.isdigit():
            start = i
            start_col = col
            while i < n and (text[i].isdigit() or text[i] in ".eE"):
                if text[i] in "eE" and i + 1 < n and text[i + 1] in "+-":
                    i += 1
                    col += 1
                i += 1
                col += 1
            emit("NUMBER", text[start:i], line, start_col)
        elif ch.isalpha() or ch == "_":
            start = i
            start_col = col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            emit("IDENT", text[start:i], line, start_col)
        else:
            raise _TokenError(line, col, f"unexpected character {ch!r}")
    emit("NEWLINE", "\n", line, max(col, 1))
    tokens.append(_Token("EOF", "", line, max(col, 1)))
    return tokens


# --- parser ------------------------------------------------------------------


class _ParseError(Exception):
    def __init__(self, token: _Token, message: str) -> None:
        super().__init__(message)
        self.token = token
        self.message = message


@dataclass
class _ThimacDecl:
    name: str
    token: _Token
    aspect: str = "dual"
    role: str = "none"
    parent: str | None = None
    stages: list[tuple[StageKind, str | None, _Token]] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.stages is None:
            self.stages = []


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[ParseDiagnostic] = []
        # raw declarations, resolved after the full file is read
        self.model_name: str | None = None
        self.variables: list[Variable] = []
        self.var_tokens: dict[str, _Token] = {}
        self.thimacs: list[_ThimacDecl] = []
        self.flows: list[tuple[tuple[str, str], tuple[str, str], _Token]] = []
        self.triggers: list[tuple[tuple[str, str], tuple[str, str], _Token]] = []
        self.rules: list[tuple[tuple[str, str], str, list, _Token]] = []
        self.events: list[tuple[str, str, bool, list, _Token]] = []
        self.behavior: list[tuple] | None = None
        self.behavior_token: _Token | None = None

    # token helpers
    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.type != "EOF":
            self.pos += 1
        return token

    def check(self, type_: str, text: str | None = None) -> bool:
        token = self.peek()
        return token.type == type_ and (text is None or token.text == text)

    def accept(self, type_: str, text: str | None = None) -> _Token | None:
        if self.check(type_, text):
            return self.advance()
        return None

    def expect(self, type_: str, text: str | None = None, what: str | None = None) -> _Token:
        token = self.peek()
        if self.check(type_, text):
            return self.advance()
        wanted = what or text or type_.lower()
        found_text = repr(token.text) if token.text else "end of file"
        raise _ParseError(token, f"syntax error: expected {wanted}, found {found_text}")

    def skip_newlines(self) -> None:
        while self.accept("NEWLINE"):
            pass

    def end_statement(self) -> None:
        token = self.peek()
        if token.type in ("NEWLINE", "EOF"):
            self.skip_newlines()
            return
        if token.type == "SYM" and token.text == "}":
            return
        raise _ParseError(token, f"syntax error: unexpected {token.text!r} before end of line")

    def error(self, token: _Token, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic("error", token.line, token.col, message))

    def recover(self) -> None:
        while not self.check("EOF") and not self.accept("NEWLINE"):
            self.advance()
        self.skip_newlines()

    # grammar
    def parse_document(self) -> None:
        self.skip_newlines()
        try:
            self.expect("IDENT", "model")
            name = self.expect("IDENT", what="model name")
            self.model_name = name.text
            self.expect("SYM", "{")
            self.skip_newlines()
        except _ParseError as exc:
            self.error(exc.token, exc.message)
            return
        while not self.check("SYM", "}") and not self.check("EOF"):
            try:
                self.parse_statement()
            except _ParseError as exc:
                self.error(exc.token, exc.message)
                self.recover()
            self.skip_newlines()
        if not self.accept("SYM", "}"):
            self.error(self.peek(), "syntax error: expected '}' closing the model block")
            return
        self.skip_newlines()
        if not self.check("EOF"):
            self.error(self.peek(), "syntax error: content after the model block")

    def parse_statement(self) -> None:
        token = self.peek()
        if token.type != "IDENT":
            raise _ParseError(token, f"syntax error: unexpected {token.text!r}")
        keyword = token.text
        if keyword in VAR_KEYWORDS:
            self.parse_variable()
        elif keyword == "thimac":
            self.parse_thimac(parent=None)
        elif keyword == "flow":
            self.parse_arc(self.flows)
        elif keyword == "trigger":
            self.parse_arc(self.triggers)
        elif keyword == "rule":
            self.parse_rule()
        elif keyword == "event":
            self.parse_event()
        elif keyword == "behavior":
            self.parse_behavior()
        else:
            raise _ParseError(token, f"syntax error: unknown statement {keyword!r}")

    def parse_variable(self) -> None:
        keyword = self.advance()
        role = VAR_KEYWORDS[keyword.text]
        name = self.expect("IDENT", what="variable name")
        self.expect("SYM", "=")
        sign = -1.0 if self.accept("SYM", "-") else 1.0
        number = self.expect("NUMBER", what="numeric value")
        try:
            value = sign * float(number.text)
        except ValueError:
            raise _ParseError(number, f"syntax error: bad numeric literal {number.text!r}")
        unit: str | None = None
        while self.peek().type == "IDENT" and self.peek().text in ("role", "unit"):
            modifier = self.advance()
            if modifier.text == "role":
                role_tok = self.expect("IDENT", what="variable role")
                if role_tok.text not in ("state", "constant", "input"):
                    raise _ParseError(role_tok, f"syntax error: unknown variable role {role_tok.text!r}")
                role = role_tok.text
            else:
                unit = self.expect("STRING", what="unit string").text
        self.end_statement()
        if name.text in self.var_tokens:
            self.error(name, f"duplicate id: variable {name.text!r} already declared")
            return
        self.var_tokens[name.text] = name
        self.variables.append(Variable(name=name.text, role=role, value=value, unit=unit))

    def parse_thimac(self, parent: str | None) -> None:
        self.expect("IDENT", "thimac")
        name = self.expect("IDENT", what="thimac name")
        decl = _ThimacDecl(name=name.text, token=name, parent=parent)
        self.thimacs.append(decl)
        self.expect("SYM", "{")
        self.skip_newlines()
        while not self.check("SYM", "}") and not self.check("EOF"):
            token = self.peek()
            if token.type != "IDENT":
                raise _ParseError(token, f"syntax error: unexpected {token.text!r} in thimac block")
            word = token.text
            if word in KIND_WORDS:
                self.advance()
                label_tok = self.accept("STRING")
                self.end_statement()
                decl.stages.append((KIND_WORDS[word], label_tok.text if label_tok else None, token))
            elif word == "aspect":
                self.advance()
                aspect = self.expect("IDENT", what="aspect")
                if aspect.text not in ("thing", "machine", "dual"):
                    raise _ParseError(aspect, f"syntax error: unknown aspect {aspect.text!r}")
                decl.aspect = aspect.text
                self.end_statement()
            elif word == "role":
                self.advance()
                role = self.expect("IDENT", what="communication role")
                if role.text not in ("source", "transmitter", "channel", "receiver", "destination", "none"):
                    raise _ParseError(role, f"syntax error: unknown communication role {role.text!r}")
                decl.role = role.text
                self.end_statement()
            elif word == "thimac":
                self.parse_thimac(parent=decl.name)
            else:
                raise _ParseError(token, f"unknown stage kind: {word!r} is not one of the five stages")
            self.skip_newlines()
        self.expect("SYM", "}")
        self.end_statement()

    def parse_stage_ref(self) -> tuple[str, str]:
        owner = self.expect("IDENT", what="thimac name")
        self.expect("SYM", ".")
        kind = self.expect("IDENT", what="stage kind")
        if kind.text not in KIND_WORDS:
            raise _ParseError(kind, f"unknown stage kind: {kind.text!r}")
        return owner.text, kind.text

    def parse_arc(self, into: list) -> None:
        keyword = self.advance()
        src = self.parse_stage_ref()
        self.expect("SYM", "->")
        dst = self.parse_stage_ref()
        self.end_statement()
        into.append((src, dst, keyword))

    def parse_rule(self) -> None:
        keyword = self.advance()
        stage = self.parse_stage_ref()
        if self.accept("IDENT", "choose"):
            self.expect("SYM", "{")
            self.skip_newlines()
            outcomes: list[tuple[str, float, tuple[str, str], _Token]] = []
            while not self.check("SYM", "}") and not self.check("EOF"):
                label = self.expect("IDENT", what="outcome label")
                number = self.expect("NUMBER", what="outcome probability")
                self.expect("SYM", "->")
                target = self.parse_stage_ref()
                self.end_statement()
                outcomes.append((label.text, float(number.text), target, label))
                self.skip_newlines()
            self.expect("SYM", "}")
            self.end_statement()
            self.rules.append((stage, "stochastic", outcomes, keyword))
        else:
            self.expect("SYM", "{")
            self.skip_newlines()
            assignments: list[tuple[str, _expr.Expr, _Token]] = []
            while not self.check("SYM", "}") and not self.check("EOF"):
                target = self.expect("IDENT", what="variable name")
                self.expect("SYM", "=")
                pieces: list[str] = []
                while self.peek().type not in ("NEWLINE", "EOF") and not self.check("SYM", "}"):
                    pieces.append(self.advance().text)
                try:
                    expression = _expr.parse_expr(" ".join(pieces))
                except _expr.ExprSyntaxError as exc:
                    raise _ParseError(target, f"syntax error: {exc}")
                self.end_statement()
                assignments.append((target.text, expression, target))
                self.skip_newlines()
            self.expect("SYM", "}")
            self.end_statement()
            self.rules.append((stage, "deterministic", assignments, keyword))

    def parse_event(self) -> None:
        keyword = self.advance()
        event_id = self.expect("IDENT", what="event id")
        description = self.expect("STRING", what="event description").text
        emits = bool(self.accept("IDENT", "emits_data"))
        self.expect("SYM", "{")
        self.skip_newlines()
        elements: list[tuple] = []
        while not self.check("SYM", "}") and not self.check("EOF"):
            token = self.peek()
            if token.type == "IDENT" and token.text in ("flow", "trigger"):
                arc_kind = self.advance().text
                src = self.parse_stage_ref()
                self.expect("SYM", "->")
                dst = self.parse_stage_ref()
                elements.append((arc_kind, src, dst, token))
            else:
                owner = self.expect("IDENT", what="element reference")
                if self.accept("SYM", "."):
                    kind = self.expect("IDENT", what="stage kind")
                    if kind.text not in KIND_WORDS:
                        raise _ParseError(kind, f"unknown stage kind: {kind.text!r}")
                    elements.append(("stage", (owner.text, kind.text), None, owner))
                else:
                    elements.append(("thimac", owner.text, None, owner))
            if not self.accept("SYM", ","):
                if self.peek().type == "NEWLINE":
                    self.skip_newlines()
                elif not self.check("SYM", "}"):
                    raise _ParseError(self.peek(), f"syntax error: expected ',' or newline in event block")
            else:
                self.skip_newlines()
        self.expect("SYM", "}")
        self.end_statement()
        self.events.append((event_id.text, description, emits, elements, event_id))

    def parse_behavior(self) -> None:
        token = self.advance()
        if self.behavior is not None:
            raise _ParseError(token, "syntax error: more than one behavior block")
        self.behavior = []
        self.behavior_token = token
        self.expect("SYM", "{")
        self.skip_newlines()
        while not self.check("SYM", "}") and not self.check("EOF"):
            word = self.expect("IDENT", what="behavior statement")
            if word.text == "branch":
                members = self.parse_id_set()
                self.behavior.append(("branch", members, word))
            elif word.text == "recur":
                first = self.expect("IDENT", what="event id")
                if self.accept("SYM", ".."):
                    last = self.expect("IDENT", what="event id")
                    self.behavior.append(("recur-span", (first.text, last.text), word))
                else:
                    self.behavior.append(("recur", first.text, word))
                self.end_statement()
            elif word.text == "contain":
                container = self.expect("IDENT", what="event id")
                members = self.parse_id_set()
                self.behavior.append(("contain", (container.text, members), word))
            else:
                self.expect("SYM", "->")
                target = self.expect("IDENT", what="event id")
                self.behavior.append(("edge", (word.text, target.text), word))
                self.end_statement()
            self.skip_newlines()
        self.expect("SYM", "}")
        self.end_statement()

    def parse_id_set(self) -> list[str]:
        self.expect("SYM", "{")
        self.skip_newlines()
        members: list[str] = []
        while not self.check("SYM", "}") and not self.check("EOF"):
            members.append(self.expect("IDENT", what="event id").text)
            if not self.accept("SYM", ","):
                if self.peek().type == "NEWLINE":
                    self.skip_newlines()
            else:
                self.skip_newlines()
        self.expect("SYM", "}")
        self.end_statement()
        return members


# --- resolution --------------------------------------------------------------


def _resolve(parser: _Parser) -> Document | None:
    diagnostics = parser.diagnostics
    if parser.model_name is None:
        return None

    thimac_names: dict[str, _Token] = {}
    for decl in parser.thimacs:
        if decl.name in thimac_names:
            diagnostics.append(ParseDiagnostic(
                "error", decl.token.line, decl.token.col,
                f"duplicate id: thimac {decl.name!r} already declared"))
        thimac_names[decl.name] = decl.token

    stages: list[Stage] = []
    stage_ids: dict[str, _Token] = {}
    thimacs: list[Thimac] = []
    for decl in parser.thimacs:
        own_stage_ids: list[str] = []
        for kind, label, token in decl.stages:
            stage_id = f"{decl.name}.{kind.value}"
            if stage_id in stage_ids:
                diagnostics.append(ParseDiagnostic(
                    "error", token.line, token.col,
                    f"duplicate id: stage {stage_id!r} already declared"))
                continue
            stage_ids[stage_id] = token
            own_stage_ids.append(stage_id)
            stages.append(Stage(id=stage_id, kind=kind, owner=decl.name, label=label))
        thimacs.append(Thimac(
            id=decl.name, name=decl.name, aspect=decl.aspect,
            parent=decl.parent, swcm_role=decl.role, stages=tuple(own_stage_ids)))

    def resolve_stage(ref: tuple[str, str], token: _Token) -> str | None:
        stage_id = f"{ref[0]}.{ref[1]}"
        if stage_id not in stage_ids:
            diagnostics.append(ParseDiagnostic(
                "error", token.line, token.col,
                f"dangling reference: stage {stage_id!r} is not declared"))
            return None
        return stage_id

    flows: list[Flow] = []
    for index, (src, dst, token) in enumerate(parser.flows):
        src_id = resolve_stage(src, token)
        dst_id = resolve_stage(dst, token)
        if src_id and dst_id:
            flows.append(Flow(id=f"flow:{index}", src=src_id, dst=dst_id))

    triggers: list[Trigger] = []
    for index, (src, dst, token) in enumerate(parser.triggers):
        src_id = resolve_stage(src, token)
        dst_id = resolve_stage(dst, token)
        if src_id and dst_id:
            triggers.append(Trigger(id=f"trigger:{index}", src=src_id, dst=dst_id))

    rules: list[UpdateRule] = []
    rule_stage_ids: dict[str, str] = {}
    for index, (stage_ref, kind, body, token) in enumerate(parser.rules):
        stage_id = resolve_stage(stage_ref, token)
        if stage_id is None:
            continue
        rule_id = f"rule:{index}"
        if kind == "deterministic":
            assignments = tuple(Assignment(target=t, expression=e) for t, e, _ in body)
            rules.append(UpdateRule(id=rule_id, stage=stage_id, kind=kind,
                                    assignments=assignments))
        else:
            outcomes = []
            bad = False
            for label, probability, target_ref, otok in body:
                target_id = resolve_stage(target_ref, otok)
                if target_id is None:
                    bad = True
                    continue
                outcomes.append(Outcome(label=label, probability=probability,
                                        target_stage=target_id))
            if bad:
                continue
            rules.append(UpdateRule(id=rule_id, stage=stage_id, kind=kind,
                                    outcomes=tuple(outcomes)))
        if stage_id in rule_stage_ids:
            diagnostics.append(ParseDiagnostic(
                "error", token.line, token.col,
                f"duplicate id: stage {stage_id!r} already has a rule"))
        else:
            rule_stage_ids[stage_id] = rule_id

    stages = [
        replace(stage, rule=rule_stage_ids.get(stage.id))
        for stage in stages
    ]

    model = Model(
        name=parser.model_name,
        thimacs=tuple(thimacs),
        stages=tuple(stages),
        flows=tuple(flows),
        triggers=tuple(triggers),
        variables=tuple(parser.variables),
    )
    rule_set = RuleSet(tuple(rules))
    for problem in rule_set.validate(model):
        diagnostics.append(ParseDiagnostic("error", 1, 1, f"invalid rule: {problem}"))

    flow_arc_ids = {(f.src, f.dst): f.id for f in model.flows}
    trigger_arc_ids = {(t.src, t.dst): t.id for t in model.triggers}

    catalog = EventCatalog(model=model)
    for event_id, description, emits, element_refs, token in parser.events:
        elements: list[str] = []
        bad = False
        for ref in element_refs:
            ref_kind, a, b, rtok = ref
            if ref_kind == "thimac":
                if a not in thimac_names:
                    diagnostics.append(ParseDiagnostic(
                        "error", rtok.line, rtok.col,
                        f"dangling reference: thimac {a!r} is not declared"))
                    bad = True
                else:
                    elements.append(a)
            elif ref_kind == "stage":
                stage_id = resolve_stage(a, rtok)
                if stage_id is None:
                    bad = True
                else:
                    elements.append(stage_id)
            else:
                src_id = resolve_stage(a, rtok)
                dst_id = resolve_stage(b, rtok)
                if src_id is None or dst_id is None:
                    bad = True
                    continue
                table = flow_arc_ids if ref_kind == "flow" else trigger_arc_ids
                arc_id = table.get((src_id, dst_id))
                if arc_id is None:
                    diagnostics.append(ParseDiagnostic(
                        "error", rtok.line, rtok.col,
                        f"dangling reference: no {ref_kind} from {src_id!r} to {dst_id!r}"))
                    bad = True
                else:
                    elements.append(arc_id)
        if bad:
            continue
        try:
            event = define_event(model, elements, event_id, description,
                                 data_emitting=emits)
            catalog = catalog.with_event(event)
        except EventError as exc:
            prefix = "duplicate id" if "already defined" in str(exc) else "invalid event"
            diagnostics.append(ParseDiagnostic(
                "error", token.line, token.col, f"{prefix}: {exc}"))

    graph: BehaviorGraph | None = None
    if parser.behavior is not None:
        edges: list[tuple[str, str]] = []
        recurrences: list[RecurrenceSpec] = []
        groups: list[list[str]] = []
        containments: list[tuple[str, list[str]]] = []
        for statement in parser.behavior:
            tag, payload = statement[0], statement[1]
            if tag == "edge":
                edges.append(payload)
            elif tag == "branch":
                groups.append(payload)
            elif tag == "recur":
                recurrences.append(payload)
            elif tag == "recur-span":
                recurrences.append(payload)
            else:
                containments.append(payload)
        token = parser.behavior_token
        try:
            graph = build_behavior(catalog, edges, recurrences, groups, containments)
        except BehaviorError as exc:
            diagnostics.append(ParseDiagnostic(
                "error", token.line, token.col, f"invalid behavior: {exc}"))

    if any(d.severity == "error" for d in diagnostics):
        return None
    return Document(name=parser.model_name, model=model, rules=rule_set,
                    catalog=catalog, graph=graph)


def parse(source: SourceText | str) -> ParseResult:
    """Parse DSL text into a Document, or collect error diagnostics.

    On success the model satisfies referential integrity by construction;
    on failure at least one error diagnostic names the problem, with
    distinct prefixes for syntax errors, unknown stage kinds, duplicate
    ids and dangling references.
    """
    text = source.text if isinstance(source, SourceText) else source
    try:
        tokens = _tokenize(text)
    except _TokenError as exc:
        return ParseResult(None, (ParseDiagnostic(
            "error", exc.line, exc.col, f"syntax error: {exc.message}"),))
    parser = _Parser(tokens)
    parser.parse_document()
    document = _resolve(parser)
    diagnostics = tuple(parser.diagnostics)
    if document is not None and any(d.severity == "error" for d in diagnostics):
        document = None
    return ParseResult(document, diagnostics)


def parse_file(path: str | Path) -> ParseResult:
    text = Path(path).read_text(encoding="utf-8")
    return parse(SourceText(text=text, origin=str(path)))


# --- serializer ---------------------------------------------------------------


def _quote(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


_VAR_KEYWORD = {"state": "var", "constant": "const", "input": "input"}


def serialize(document: Document) -> SourceText:
    """Canonical text for a document; parse(serialize(d)) reproduces d."""
    model = document.model
    out: list[str] = [f"model {model.name} {{"]

    for variable in model.variables:
        parts = [f"  {_VAR_KEYWORD[variable.role]} {variable.name} = {_fmt_number(variable.value)}"]
        if variable.unit is not None:
            parts.append(f"unit {_quote(variable.unit)}")
        out.append(" ".join(parts))
    if model.variables:
        out.append("")

    stage_map = model.stage_map()
    children: dict[str | None, list[Thimac]] = {}
    for thimac in model.thimacs:
        children.setdefault(thimac.parent, []).append(thimac)

    def emit_thimac(thimac: Thimac, indent: int) -> None:
        pad = "  " * indent
        out.append(f"{pad}thimac {thimac.name} {{")
        if thimac.aspect != "dual":
            out.append(f"{pad}  aspect {thimac.aspect}")
        if thimac.swcm_role != "none":
            out.append(f"{pad}  role {thimac.swcm_role}")
        for stage_id in thimac.stages:
            stage = stage_map[stage_id]
            if stage.label is not None:
                out.append(f"{pad}  {stage.kind.value} {_quote(stage.label)}")
            else:
                out.append(f"{pad}  {stage.kind.value}")
        for child in children.get(thimac.id, ()):
            emit_thimac(child, indent + 1)
        out.append(f"{pad}}}")

    for thimac in children.get(None, ()):
        emit_thimac(thimac, 1)
    if model.thimacs:
        out.append("")

    for flow in model.flows:
        out.append(f"  flow {flow.src} -> {flow.dst}")
    if model.flows:
        out.append("")
    for trigger in model.triggers:
        out.append(f"  trigger {trigger.src} -> {trigger.dst}")
    if model.triggers:
        out.append("")

    for rule in document.rules.rules:
        if rule.kind == "deterministic":
            out.append(f"  rule {rule.stage} {{")
            for assignment in rule.assignments:
                out.append(f"    {assignment.render()}")
        else:
            out.append(f"  rule {rule.stage} choose {{")
            for outcome in rule.outcomes:
                out.append(f"    {outcome.label} {_fmt_number(outcome.probability)} -> {outcome.target_stage}")
        out.append("  }")
    if document.rules.rules:
        out.append("")

    flow_by_id = model.flow_map()
    trigger_by_id = model.trigger_map()
    thimac_ids = {t.id for t in model.thimacs}
    for event in document.catalog.events:
        head = f"  event {event.id} {_quote(event.description)}"
        if event.data_emitting:
            head += " emits_data"
        out.append(head + " {")
        for element in sorted(event.region.elements, key=_element_sort_key):
            if element in flow_by_id:
                arc = flow_by_id[element]
                out.append(f"    flow {arc.src} -> {arc.dst}")
            elif element in trigger_by_id:
                arc = trigger_by_id[element]
                out.append(f"    trigger {arc.src} -> {arc.dst}")
            elif element in thimac_ids:
                out.append(f"    {element}")
            else:
                out.append(f"    {element}")
        out.append("  }")
    if document.catalog.events:
        out.append("")

    if document.graph is not None:
        graph = document.graph
        out.append("  behavior {")
        for a, b in graph.successions:
            out.append(f"    {a} -> {b}")
        for group in graph.exclusive_groups:
            ordered = sorted(group, key=_catalog_order(document))
            out.append(f"    branch {{ {', '.join(ordered)} }}")
        for container, members in graph.containments:
            out.append(f"    contain {container} {{ {', '.join(members)} }}")
        for recurrence in graph.recurrences:
            if recurrence.span is not None:
                out.append(f"    recur {recurrence.span[0]} .. {recurrence.span[1]}")
            else:
                out.append(f"    recur {recurrence.anchor}")
        out.append("  }")

    out.append("}")
    return SourceText(text="\n".join(out) + "\n", origin="<serialized>")


def _element_sort_key(element: str) -> tuple:
    return (element.count(":"), element)


def _catalog_order(document: Document):
    order = {eid: i for i, eid in enumerate(document.catalog.ids())}
    return lambda eid: order.get(eid, len(order))


# --- structural equality -------------------------------------------------------


def canonical_form(document: Document) -> tuple:
    """Name-based canonical shape of a document, for equality up to id renaming."""
    model = document.model
    stage_map = model.stage_map()
    thimac_map = model.thimac_map()

    def stage_key(stage_id: str) -> tuple:
        stage = stage_map[stage_id]
        return ("S", thimac_map[stage.owner].name, stage.kind.value)

    def element_key(element: str) -> tuple:
        if element in stage_map:
            return stage_key(element)
        if element in thimac_map:
            return ("T", thimac_map[element].name)
        flow = model.flow_map().get(element)
        if flow is not None:
            return ("F", stage_key(flow.src), stage_key(flow.dst))
        trigger = model.trigger_map()[element]
        return ("G", stage_key(trigger.src), stage_key(trigger.dst))

    thimacs = tuple(sorted(
        (
            t.name,
            t.aspect,
            t.swcm_role,
            thimac_map[t.parent].name if t.parent else None,
            tuple((stage_map[s].kind.value, stage_map[s].label) for s in t.stages),
        )
        for t in model.thimacs
    ))
    variables = tuple(sorted(
        (v.name, v.role, v.value, v.unit) for v in model.variables
    ))
    flows = tuple(sorted((stage_key(f.src), stage_key(f.dst)) for f in model.flows))
    triggers = tuple(sorted((stage_key(t.src), stage_key(t.dst)) for t in model.triggers))
    rules = tuple(sorted(
        (
            stage_key(r.stage),
            r.kind,
            tuple((a.target, _expr.render(a.expression)) for a in r.assignments),
            tuple((o.label, o.probability, stage_key(o.target_stage)) for o in r.outcomes),
        )
        for r in document.rules.rules
    ))
    events = tuple(
        (
            e.id,
            e.description,
            e.data_emitting,
            tuple(sorted(element_key(x) for x in e.region.elements)),
        )
        for e in document.catalog.events
    )
    if document.graph is None:
        graph_form: tuple = ()
    else:
        g = document.graph
        graph_form = (
            tuple(sorted(g.successions)),
            tuple(sorted(tuple(sorted(group)) for group in g.exclusive_groups)),
            tuple(sorted((r.anchor, tuple(sorted(r.scope))) for r in g.recurrences)),
            tuple(sorted((c, tuple(sorted(m))) for c, m in g.containments)),
        )
    return (model.name, thimacs, variables, flows, triggers, rules, events, graph_form)


def documents_equal(a: Document, b: Document) -> bool:
    return canonical_form(a) == canonical_form(b)
