"""Canonical geometry of regular Lagrangians on the tangent bundle.

Expression-backed Lagrangians are differentiated symbolically to third
order; from the jets the package builds the metric tensor, semispray,
nonlinear connection, Cartan forms and horizontal differential, checks the
identities relating them, and integrates the associated flows.
"""

from lagrangekit._backend import NAME as BACKEND
from lagrangekit.dsl import differentiate, evaluate, parse, simplify, to_text
from lagrangekit.errors import (
    DegenerateLagrangian,
    DomainError,
    IndexOutOfRange,
    LagrangianSyntaxError,
    NotHomogeneous,
    ParseError,
    UnknownFunction,
    ZeroLagrangianValue,
)
from lagrangekit.geometry import GeometryBundle, geometry_at
from lagrangekit.jets import Jet3, LagrangianField, TangentPoint, fd_partial, jet3, validate_jets


def parse_lagrangian(text: str, n: int) -> LagrangianField:
    return LagrangianField.parse(text, n)


__all__ = [
    "BACKEND", "DegenerateLagrangian", "DomainError", "GeometryBundle", "IndexOutOfRange",
    "Jet3", "LagrangianField", "LagrangianSyntaxError", "NotHomogeneous", "ParseError",
    "TangentPoint", "UnknownFunction", "ZeroLagrangianValue", "differentiate", "evaluate",
    "fd_partial", "geometry_at", "jet3", "parse", "parse_lagrangian", "simplify", "to_text",
    "validate_jets",
]
