"""Recursive-descent parser for types and for both term dialects.

Type syntax:     X        A -> B       A /\\ B      forall X. A
Term syntax:     x:A      \\x:A. r     r s          r + s        n.r
                 pi[A](r)             /\\X. r       r {A}        p.r (alg)

`/\\` binds tighter than `->`, which associates to the right; `forall`
extends as far as possible. Application associates to the left and takes
atoms (parenthesize lambdas in argument position). `+` is loosest; the
scale prefix `n.r` sits between `+` and application. Bound variable
occurrences may omit their label, which is inherited from the binder; free
occurrences must carry one. `#` starts a line comment.

In the projector dialect `n.r` is shorthand for an n-fold sum (n a positive
integer). In the algebraic dialect `p.r` is a scalar weight with p an exact
rational in (0, 1], written `n/d` or `1`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .syntax import (
    App,
    Arrow,
    Conj,
    Forall,
    Lam,
    Proj,
    Scale,
    Sum,
    TApp,
    TLam,
    TVar,
    Term,
    Type,
    Var,
    sum_of,
    type_key,
)

_KEYWORDS = {"pi", "forall"}
_SYMBOLS = ("->", "/\\", "(", ")", "[", "]", "{", "}", ":", ".", "+", "\\", "/")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Token({self.kind}, {self.text!r})"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            kind = "kw" if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token("sym", sym, start_line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, dialect: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dialect = dialect  # "lambda" or "alg"

    # -- token plumbing ---------------------------------------------------

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def at_sym(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == text

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    # -- types ------------------------------------------------------------

    def parse_type(self) -> Type:
        if self.peek().kind == "kw" and self.peek().text == "forall":
            self.next()
            name = self.expect("ident").text
            self.expect("sym", ".")
            return Forall(name, self.parse_type())
        left = self.parse_conj()
        if self.at_sym("->"):
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def parse_conj(self) -> Type:
        factors = [self.parse_type_atom()]
        while self.at_sym("/\\"):
            self.next()
            factors.append(self.parse_type_atom())
        # Right-nested, matching the printer and the sum convention.
        acc = factors[-1]
        for f in reversed(factors[:-1]):
            acc = Conj(f, acc)
        return acc

    def parse_type_atom(self) -> Type:
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            return TVar(tok.text)
        if self.at_sym("("):
            self.next()
            inner = self.parse_type()
            self.expect("sym", ")")
            return inner
        if tok.kind == "kw" and tok.text == "forall":
            # Only behind parens in operand position; top level handles it.
            raise self.fail("forall must be parenthesized here")
        raise self.fail(f"expected a type, found {tok.text or 'end of input'!r}")

    # -- terms ------------------------------------------------------------

    def parse_term(self, binders: dict[str, Type]) -> Term:
        parts = list(self.parse_scaled(binders))
        while self.at_sym("+"):
            self.next()
            parts.extend(self.parse_scaled(binders))
        return sum_of(parts) if len(parts) > 1 else parts[0]

    def parse_scaled(self, binders: dict[str, Type]) -> list[Term]:
        """One `+`-operand; the n-fold shorthand expands to n list entries.

        Returning the expansion as a list (rather than a pre-built sum)
        keeps `2.x + y` flat: x + y + y and 2.y + x parse to the same
        right-nested shape a plain sum would have.
        """
        tok = self.peek()
        if tok.kind == "int":
            num = int(self.next().text)
            den = 1
            if self.at_sym("/"):
                self.next()
                den = int(self.expect("int").text)
            self.expect("sym", ".")
            body_parts = self.parse_scaled(binders)
            if self.dialect == "alg":
                factor = Fraction(num, den) if den else None
                if den == 0 or factor is None or not 0 < factor <= 1:
                    raise ParseError(
                        f"scalar out of range (0, 1]: {num}/{den}",
                        tok.line, tok.col,
                    )
                (body,) = body_parts
                return [Scale(factor, body, pos=(tok.line, tok.col))]
            if den != 1:
                raise ParseError(
                    "fractional multiplicity is not part of this dialect",
                    tok.line, tok.col,
                )
            if num < 1:
                raise ParseError("multiplicity must be positive", tok.line, tok.col)
            return body_parts * num
        return [self.parse_app(binders)]

    def parse_app(self, binders: dict[str, Type]) -> Term:
        term = self.parse_atom(binders)
        while True:
            tok = self.peek()
            if self.at_sym("{"):
                self.next()
                ty = self.parse_type()
                self.expect("sym", "}")
                term = TApp(term, ty, pos=(tok.line, tok.col))
            elif tok.kind == "ident" or self.at_sym("(") or (
                tok.kind == "kw" and tok.text == "pi"
            ):
                term = App(term, self.parse_atom(binders), pos=(tok.line, tok.col))
            else:
                return term

    def parse_atom(self, binders: dict[str, Type]) -> Term:
        tok = self.peek()
        if self.at_sym("\\"):
            self.next()
            name = self.expect("ident").text
            self.expect("sym", ":")
            ty = self.parse_type()
            self.expect("sym", ".")
            body = self.parse_term({**binders, name: ty})
            return Lam(name, ty, body, pos=(tok.line, tok.col))
        if self.at_sym("/\\"):
            self.next()
            name = self.expect("ident").text
            self.expect("sym", ".")
            return TLam(name, self.parse_term(binders), pos=(tok.line, tok.col))
        if tok.kind == "kw" and tok.text == "pi":
            self.next()
            self.expect("sym", "[")
            ty = self.parse_type()
            self.expect("sym", "]")
            self.expect("sym", "(")
            body = self.parse_term(binders)
            self.expect("sym", ")")
            return Proj(ty, body, pos=(tok.line, tok.col))
        if tok.kind == "ident":
            self.next()
            if self.at_sym(":"):
                self.next()
                ty = self.parse_type()
                return Var(tok.text, ty, pos=(tok.line, tok.col))
            if tok.text in binders:
                return Var(tok.text, binders[tok.text], pos=(tok.line, tok.col))
            raise ParseError(
                f"free variable {tok.text!r} needs a type label (x:A)",
                tok.line, tok.col,
            )
        if self.at_sym("("):
            self.next()
            inner = self.parse_term(binders)
            self.expect("sym", ")")
            return inner
        raise self.fail(f"expected a term, found {tok.text or 'end of input'!r}")

    def finish(self, node):
        self.expect("eof")
        return node


def parse_type(text: str) -> Type:
    p = _Parser(text, "lambda")
    return p.finish(p.parse_type())


def parse_lambda_term(text: str) -> Term:
    """Parse a projector-calculus term (no scalars; `n.r` expands to a sum)."""
    p = _Parser(text, "lambda")
    return p.finish(p.parse_term({}))


def parse_alg_term(text: str) -> Term:
    """Parse an algebraic-calculus term (scalars in (0,1]; no projector)."""
    p = _Parser(text, "alg")
    term = p.finish(p.parse_term({}))
    for bad in _find_proj(term):
        raise ParseError("the projector is not part of this dialect",
                         *(bad.pos or (0, 0)))
    return term


def _find_proj(t: Term):
    from .syntax import subterms

    return [s for s in subterms(t) if isinstance(s, Proj)]
