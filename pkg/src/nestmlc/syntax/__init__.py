from .lexer import tokenize
from .parser import parse_expression, parse_file, parse_type
from .printer import pretty_print, print_expression

__all__ = ["tokenize", "parse_file", "parse_expression", "parse_type",
           "pretty_print", "print_expression"]
