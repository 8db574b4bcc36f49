from .ast import (ArrayDecl, FrontendError, ParseError, Program, PropertySpec,
                  ScalarDecl, SortError, UndeclaredError)
from .cfg import (ArrayInit, ArrayRead, ArrayWrite, Cfg, Edge, Kill, MultisetOp,
                  ScalarOp, build_cfg, insert_kills, liveness, lower_to_cfg,
                  normalize)
from .parser import parse_program, parse_properties

parse = parse_program

__all__ = [
    "ArrayDecl", "ArrayInit", "ArrayRead", "ArrayWrite", "Cfg", "Edge",
    "FrontendError", "Kill", "MultisetOp", "ParseError", "Program",
    "PropertySpec", "ScalarDecl", "ScalarOp", "SortError", "UndeclaredError",
    "build_cfg", "insert_kills", "liveness", "lower_to_cfg", "normalize",
    "parse", "parse_program", "parse_properties",
]
