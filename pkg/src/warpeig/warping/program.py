"""Compile expression trees to flat postfix programs for the jitted kernels."""
from dataclasses import dataclass

import numpy as np

from .expr import Binary, Const, Func, Neg, Var

OP_T, OP_CONST = 0, 1
OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_NEG = 2, 3, 4, 5, 6, 7
FUNC_OPCODES = {
    "sin": 10, "cos": 11, "sinh": 12, "cosh": 13, "exp": 14, "log": 15,
    "sqrt": 16, "tanh": 17, "lsinh": 18, "lcosh": 19, "coth": 20,
}
_BINARY_OPCODES = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}


@dataclass(frozen=True)
class Program:
    """Postfix program: ``code`` rows are (opcode, argument)."""

    code: np.ndarray
    consts: np.ndarray
    depth: int


def compile_expr(node):
    code, consts = [], []
    depth = _emit(node, code, consts)
    if not consts:
        consts.append(0.0)
    return Program(
        np.array(code, dtype=np.int64).reshape(-1, 2),
        np.array(consts, dtype=np.float64),
        depth,
    )


def _emit(node, code, consts):
    # Returns the stack depth needed to evaluate ``node``.
    if isinstance(node, Const):
        code.append((OP_CONST, len(consts)))
        consts.append(float(node.value))
        return 1
    if isinstance(node, Var):
        code.append((OP_T, 0))
        return 1
    if isinstance(node, Neg):
        d = _emit(node.arg, code, consts)
        code.append((OP_NEG, 0))
        return d
    if isinstance(node, Binary):
        d1 = _emit(node.left, code, consts)
        d2 = _emit(node.right, code, consts)
        code.append((_BINARY_OPCODES[node.op], 0))
        return max(d1, d2 + 1)
    if isinstance(node, Func):
        d = _emit(node.args[0], code, consts)
        code.append((FUNC_OPCODES[node.name], 0))
        return d
    raise TypeError(f"cannot compile {node!r}")
