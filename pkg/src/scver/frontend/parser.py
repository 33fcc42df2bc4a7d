"""Recursive-descent parser for SCL source text."""

from . import ast
from ..lexer import Cursor, tokenize
from .types import BOOL, EnumType, IntType
from ..props.ltl import parse_ltl_tokens

_MEMBER_START = {"'in'", "'out'", "'signal'", "'var'", "'event'", "'process'", "'}'"}
_STMT_START = {"identifier", "'if'", "'while'", "'wait'", "'notify'", "'assert'", "'skip'"}

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!=", "<", "<=", ">", ">="),
    ("+", "-"),
    ("*",),
]


def parse(source):
    """Parse SCL text into a :class:`~scver.frontend.ast.DesignAst`."""
    return _Parser(tokenize(source)).design()


def parse_expr(text):
    p = _Parser(tokenize(text))
    e = p.expr()
    if p.cur.peek().kind != "eof":
        p.cur.fail({"end of expression"})
    return e


class _Parser:
    def __init__(self, tokens):
        self.cur = Cursor(tokens)

    def design(self):
        modules, instances, binds, props = [], [], [], []
        cur = self.cur
        while cur.peek().kind != "eof":
            tok = cur.peek()
            if cur.accept("module"):
                modules.append(self.module(tok))
            elif cur.accept("instance"):
                name = cur.expect_id().text
                cur.expect(":")
                mod = cur.expect_id().text
                cur.expect(";")
                instances.append(ast.InstanceDecl(name, mod, pos=tok.pos))
            elif cur.accept("bind"):
                si = cur.expect_id().text
                cur.expect(".")
                sp = cur.expect_id().text
                cur.expect("->")
                di = cur.expect_id().text
                cur.expect(".")
                dp = cur.expect_id().text
                cur.expect(";")
                binds.append(ast.BindDecl(si, sp, di, dp, pos=tok.pos))
            elif cur.accept("ltl"):
                name = cur.expect_id().text
                cur.expect("{")
                body = parse_ltl_tokens(cur)
                cur.expect("}")
                props.append(ast.PropertyDecl("ltl", name, body, pos=tok.pos))
            elif cur.accept("invariant"):
                name = cur.expect_id().text
                cur.expect("{")
                body = self.expr()
                cur.expect("}")
                props.append(ast.PropertyDecl("invariant", name, body, pos=tok.pos))
            else:
                cur.fail({"'module'", "'instance'", "'bind'", "'ltl'", "'invariant'"})
        return ast.DesignAst(tuple(modules), tuple(instances), tuple(binds), tuple(props))

    def module(self, start):
        cur = self.cur
        name = cur.expect_id().text
        cur.expect("{")
        ports, signals, vars_, events, procs = [], [], [], [], []
        while not cur.accept("}"):
            tok = cur.peek()
            if cur.at("in") or cur.at("out"):
                direction = cur.next().text
                pname = cur.expect_id().text
                cur.expect(":")
                typ = self.type()
                cur.expect(";")
                ports.append(ast.PortDecl(direction, pname, typ, pos=tok.pos))
            elif cur.at("signal") or cur.at("var"):
                kind = cur.next().text
                mname = cur.expect_id().text
                cur.expect(":")
                typ = self.type()
                cur.expect("=")
                init = self.literal()
                cur.expect(";")
                node = ast.SignalDecl if kind == "signal" else ast.VarDecl
                (signals if kind == "signal" else vars_).append(node(mname, typ, init, pos=tok.pos))
            elif cur.accept("event"):
                events.append(ast.EventDecl(cur.expect_id().text, pos=tok.pos))
                cur.expect(";")
            elif cur.accept("process"):
                pname = cur.expect_id().text
                procs.append(ast.ProcessDecl(pname, self.block(), pos=tok.pos))
            else:
                cur.fail(_MEMBER_START)
        return ast.ModuleDecl(name, tuple(ports), tuple(signals), tuple(vars_),
                              tuple(events), tuple(procs), pos=start.pos)

    def type(self):
        cur = self.cur
        if cur.accept("bool"):
            return BOOL
        if cur.accept("int"):
            cur.expect("[")
            lo = cur.expect_int()
            cur.expect("..")
            hi = cur.expect_int()
            cur.expect("]")
            return IntType(lo, hi)
        if cur.accept("enum"):
            cur.expect("{")
            labels = [cur.expect_id().text]
            while cur.accept(","):
                labels.append(cur.expect_id().text)
            cur.expect("}")
            return EnumType(tuple(labels))
        cur.fail({"'bool'", "'int'", "'enum'"})

    def literal(self):
        cur = self.cur
        tok = cur.peek()
        if cur.accept("true"):
            return ast.Lit(True, pos=tok.pos)
        if cur.accept("false"):
            return ast.Lit(False, pos=tok.pos)
        if tok.kind == "id":
            cur.next()
            return ast.Name(tok.text, pos=tok.pos)
        if tok.kind == "int" or cur.at("-"):
            return ast.Lit(cur.expect_int(), pos=tok.pos)
        cur.fail({"literal"})

    def block(self):
        self.cur.expect("{")
        stmts = []
        while not self.cur.accept("}"):
            stmts.append(self.stmt())
        return tuple(stmts)

    def stmt(self):
        cur = self.cur
        tok = cur.peek()
        if tok.kind == "id":
            cur.next()
            if cur.accept("="):
                node = ast.Assign
            elif cur.accept("<="):
                node = ast.NbAssign
            else:
                cur.fail({"'='", "'<='"})
            e = self.expr()
            cur.expect(";")
            return node(tok.text, e, pos=tok.pos)
        if cur.accept("if"):
            cond = self.expr()
            then = self.block()
            orelse = self.block() if cur.accept("else") else None
            return ast.If(cond, then, orelse, pos=tok.pos)
        if cur.accept("while"):
            cond = self.expr()
            return ast.While(cond, self.block(), pos=tok.pos)
        if cur.accept("wait"):
            cur.expect("(")
            if cur.accept("time"):
                kind, arg = "time", cur.expect_int()
            elif cur.accept("change"):
                kind, arg = "change", cur.expect_id().text
            elif cur.accept("event"):
                kind, arg = "event", cur.expect_id().text
            else:
                cur.fail({"'time'", "'change'", "'event'"})
            cur.expect(")")
            cur.expect(";")
            return ast.Wait(kind, arg, pos=tok.pos)
        if cur.accept("notify"):
            cur.expect("(")
            ev = cur.expect_id().text
            mode = amount = None
            if cur.accept(","):
                if cur.accept("delta"):
                    mode = "delta"
                elif cur.accept("time"):
                    mode, amount = "time", cur.expect_int()
                else:
                    cur.fail({"'delta'", "'time'"})
            cur.expect(")")
            cur.expect(";")
            return ast.Notify(ev, mode, amount, pos=tok.pos)
        if cur.accept("assert"):
            cur.expect("(")
            e = self.expr()
            cur.expect(")")
            cur.expect(";")
            return ast.Assert(e, pos=tok.pos)
        if cur.accept("skip"):
            cur.expect(";")
            return ast.Skip(pos=tok.pos)
        cur.fail(_STMT_START)

    def expr(self, level=0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while any(self.cur.at(op) for op in ops):
            tok = self.cur.next()
            right = self.expr(level + 1)
            left = ast.Binary(tok.text, left, right, pos=tok.pos)
        return left

    def unary(self):
        cur = self.cur
        tok = cur.peek()
        if cur.at("!") or cur.at("-"):
            cur.next()
            return ast.Unary(tok.text, self.unary(), pos=tok.pos)
        if cur.accept("("):
            e = self.expr()
            cur.expect(")")
            return e
        if cur.accept("true"):
            return ast.Lit(True, pos=tok.pos)
        if cur.accept("false"):
            return ast.Lit(False, pos=tok.pos)
        if tok.kind == "int":
            cur.next()
            return ast.Lit(int(tok.text), pos=tok.pos)
        if tok.kind == "id":
            cur.next()
            if cur.accept("."):
                member = cur.expect_id().text
                return ast.Name(member, qual=tok.text, pos=tok.pos)
            return ast.Name(tok.text, pos=tok.pos)
        cur.fail({"expression"})
